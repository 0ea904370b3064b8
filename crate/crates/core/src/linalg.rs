use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn to_c(a: &RMat) -> CMat {
    a.map(|x| C64::new(x, 0.0))
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Complex product through the packed zgemm kernel.
pub fn mul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.nrows(), "dimension mismatch in product");
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    let mut out = CMat::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return out;
    }
    if m * k * n < 4096 {
        return a * b;
    }
    // C64 is repr(C) {re, im}, which matches the [f64; 2] layout of the kernel.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            out.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    out
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    let mut out = CMat::zeros(ar * br, ac * bc);
    for j in 0..ac {
        for i in 0..ar {
            let x = a[(i, j)];
            if x == C64::new(0.0, 0.0) {
                continue;
            }
            for q in 0..bc {
                for p in 0..br {
                    out[(i * br + p, j * bc + q)] = x * b[(p, q)];
                }
            }
        }
    }
    out
}

pub fn rkron(a: &RMat, b: &RMat) -> RMat {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    let mut out = RMat::zeros(ar * br, ac * bc);
    for j in 0..ac {
        for i in 0..ar {
            let x = a[(i, j)];
            if x == 0.0 {
                continue;
            }
            for q in 0..bc {
                for p in 0..br {
                    out[(i * br + p, j * bc + q)] = x * b[(p, q)];
                }
            }
        }
    }
    out
}

pub fn kron_vec(a: &CVec, b: &CVec) -> CVec {
    let mut out = CVec::zeros(a.len() * b.len());
    for i in 0..a.len() {
        for j in 0..b.len() {
            out[i * b.len() + j] = a[i] * b[j];
        }
    }
    out
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    mul(a, b) - mul(b, a)
}

pub fn rcommutator(a: &RMat, b: &RMat) -> RMat {
    a * b - b * a
}

pub fn fro(a: &CMat) -> f64 {
    a.norm()
}

pub fn dist_id(a: &CMat) -> f64 {
    assert_eq!(a.nrows(), a.ncols());
    (a - eye(a.nrows())).norm()
}

pub fn inv(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    if n == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    let lu = a.clone().lu();
    let x = lu
        .try_inverse()
        .ok_or_else(|| Error::Singular(format!("{n}x{n} matrix is not invertible")))?;
    if !x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Singular(format!("{n}x{n} inverse is not finite")));
    }
    Ok(x)
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return vec![];
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

pub fn cond(a: &CMat) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if s.len() == a.nrows().min(a.ncols()) => {
            if lo == 0.0 {
                f64::INFINITY
            } else {
                hi / lo
            }
        }
        _ => f64::INFINITY,
    }
}

pub fn rank(a: &CMat, rtol: f64) -> usize {
    let s = singular_values(a);
    let top = s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rtol * top).count()
}

/// Orthonormal basis of the null space, thresholded at `rtol * sigma_max`.
pub fn nullspace(a: &CMat, rtol: f64) -> CMat {
    let (m, n) = (a.nrows(), a.ncols());
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    if m == 0 || a.iter().all(|z| z.norm() == 0.0) {
        return eye(n);
    }
    let padded = if m < n {
        let mut p = CMat::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("svd v_t");
    let s = &svd.singular_values;
    let top = s.iter().cloned().fold(0.0, f64::max);
    let idx: Vec<usize> = (0..s.len()).filter(|&k| s[k] <= rtol * top).collect();
    let mut out = CMat::zeros(n, idx.len());
    for (c, &k) in idx.iter().enumerate() {
        for j in 0..n {
            out[(j, c)] = vt[(k, j)].conj();
        }
    }
    out
}

pub fn rnullspace(a: &RMat, rtol: f64) -> RMat {
    let (m, n) = (a.nrows(), a.ncols());
    if n == 0 {
        return RMat::zeros(0, 0);
    }
    if m == 0 || a.iter().all(|z| *z == 0.0) {
        return RMat::identity(n, n);
    }
    let padded = if m < n {
        let mut p = RMat::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("svd v_t");
    let s = &svd.singular_values;
    let top = s.iter().cloned().fold(0.0, f64::max);
    let idx: Vec<usize> = (0..s.len()).filter(|&k| s[k] <= rtol * top).collect();
    let mut out = RMat::zeros(n, idx.len());
    for (c, &k) in idx.iter().enumerate() {
        for j in 0..n {
            out[(j, c)] = vt[(k, j)];
        }
    }
    out
}

/// Orthonormal basis of the column space.
pub fn range(a: &CMat, rtol: f64) -> CMat {
    if a.ncols() == 0 || a.nrows() == 0 {
        return CMat::zeros(a.nrows(), 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("svd u");
    let s = &svd.singular_values;
    let top = s.iter().cloned().fold(0.0, f64::max);
    let idx: Vec<usize> = (0..s.len()).filter(|&k| top > 0.0 && s[k] > rtol * top).collect();
    let mut out = CMat::zeros(a.nrows(), idx.len());
    for (c, &k) in idx.iter().enumerate() {
        out.set_column(c, &u.column(k));
    }
    out
}

pub fn pinv(a: &CMat, rtol: f64) -> CMat {
    let (m, n) = (a.nrows(), a.ncols());
    if m == 0 || n == 0 {
        return CMat::zeros(n, m);
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    let s = &svd.singular_values;
    let top = s.iter().cloned().fold(0.0, f64::max);
    let mut out = CMat::zeros(n, m);
    for k in 0..s.len() {
        if top > 0.0 && s[k] > rtol * top {
            let vk = vt.row(k).adjoint();
            let uk = u.column(k).adjoint();
            out += (vk * uk) / C64::new(s[k], 0.0);
        }
    }
    out
}

/// Least-squares solution of `a x = b`.
pub fn lstsq(a: &CMat, b: &CMat) -> CMat {
    mul(&pinv(a, 1e-13), b)
}

/// Polar decomposition `a = u h` with `u` unitary and `h` positive.
pub fn polar(a: &CMat) -> (CMat, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (CMat::zeros(0, 0), CMat::zeros(0, 0));
    }
    let svd = a.clone().svd(true, true);
    let w = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    let s = CMat::from_diagonal(&svd.singular_values.map(|x| C64::new(x, 0.0)));
    let u = mul(&w, &vt);
    let h = mul(&mul(&vt.adjoint(), &s), &vt);
    (u, h)
}

/// Exponential of a nilpotent matrix by its terminating series.
pub fn expm_nilpotent(a: &CMat) -> CMat {
    let n = a.nrows();
    let mut out = eye(n);
    let mut term = eye(n);
    for k in 1..=n.max(1) {
        term = mul(&term, a) / C64::new(k as f64, 0.0);
        if term.iter().all(|z| z.norm() == 0.0) {
            break;
        }
        out += &term;
    }
    out
}

pub fn rexpm_nilpotent(a: &RMat) -> RMat {
    let n = a.nrows();
    let mut out = RMat::identity(n, n);
    let mut term = RMat::identity(n, n);
    for k in 1..=n.max(1) {
        term = &term * a / k as f64;
        if term.iter().all(|z| *z == 0.0) {
            break;
        }
        out += &term;
    }
    out
}

/// Eigendecomposition of a real symmetric matrix, eigenvalues ascending.
pub fn eigh(a: &RMat) -> (Vec<f64>, RMat) {
    let n = a.nrows();
    if n == 0 {
        return (vec![], RMat::zeros(0, 0));
    }
    let sym = (a + a.transpose()) * 0.5;
    let e = sym.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&x, &y| e.eigenvalues[x].partial_cmp(&e.eigenvalues[y]).unwrap());
    let vals = idx.iter().map(|&k| e.eigenvalues[k]).collect();
    let mut vecs = RMat::zeros(n, n);
    for (c, &k) in idx.iter().enumerate() {
        vecs.set_column(c, &e.eigenvectors.column(k));
    }
    (vals, vecs)
}

/// `f(a)` for real symmetric `a`, through its spectral decomposition.
pub fn herm_fn(a: &RMat, f: impl Fn(f64) -> C64) -> CMat {
    let (vals, vecs) = eigh(a);
    let p = to_c(&vecs);
    let d = CMat::from_diagonal(&DVector::from_iterator(vals.len(), vals.iter().map(|&x| f(x))));
    mul(&mul(&p, &d), &p.adjoint())
}

#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<C64>,
    pub vectors: CMat,
    pub inverse: CMat,
    pub cond: f64,
}

/// Diagonalisation of a general complex matrix via Schur form and
/// triangular back-substitution.
pub fn eig(a: &CMat, max_cond: f64) -> Result<Eigen> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Eigen { values: vec![], vectors: CMat::zeros(0, 0), inverse: CMat::zeros(0, 0), cond: 1.0 });
    }
    let offdiag = (0..n).flat_map(|j| (0..n).map(move |i| (i, j))).filter(|&(i, j)| i != j).all(|(i, j)| a[(i, j)].norm() == 0.0);
    if offdiag {
        return Ok(Eigen { values: (0..n).map(|k| a[(k, k)]).collect(), vectors: eye(n), inverse: eye(n), cond: 1.0 });
    }
    let scale = a.norm().max(1e-300);
    let (q, t) = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, 100 * n.max(10))
        .ok_or_else(|| Error::Singular("Schur iteration did not converge".into()))?
        .unpack();
    let values: Vec<C64> = (0..n).map(|k| t[(k, k)]).collect();
    let mut v = CMat::zeros(n, n);
    for k in 0..n {
        v[(k, k)] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = C64::new(0.0, 0.0);
            for j in (i + 1)..=k {
                s += t[(i, j)] * v[(j, k)];
            }
            let mut den = t[(i, i)] - t[(k, k)];
            if den.norm() < 1e-14 * scale {
                den = C64::new(1e-14 * scale, 0.0);
            }
            v[(i, k)] = -s / den;
        }
        let nk = v.column(k).norm();
        v.column_mut(k).scale_mut(1.0 / nk);
    }
    let vectors = mul(&q, &v);
    let cond = cond(&vectors);
    if !(cond <= max_cond) {
        return Err(Error::IllConditioned(cond));
    }
    let inverse = inv(&vectors)?;
    Ok(Eigen { values, vectors, inverse, cond })
}

impl Eigen {
    pub fn apply_fn(&self, f: impl Fn(C64) -> C64) -> CMat {
        let d: Vec<C64> = self.values.iter().map(|&x| f(x)).collect();
        let mut left = self.vectors.clone();
        for (j, dj) in d.iter().enumerate() {
            for i in 0..left.nrows() {
                left[(i, j)] *= *dj;
            }
        }
        mul(&left, &self.inverse)
    }
}

/// Matrix exponential for a diagonalisable matrix.
pub fn expm(a: &CMat) -> Result<CMat> {
    Ok(eig(a, 1e10)?.apply_fn(|z| z.exp()))
}

/// Permutation operator on a tensor product of spaces with dimensions `dims`.
/// Output leg `k` carries input leg `perm[k]`.
pub fn leg_permutation(dims: &[usize], perm: &[usize]) -> RMat {
    let total: usize = dims.iter().product();
    let out_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mut m = RMat::zeros(total, total);
    let mut idx = vec![0usize; dims.len()];
    for flat in 0..total {
        let mut r = flat;
        for k in (0..dims.len()).rev() {
            idx[k] = r % dims[k];
            r /= dims[k];
        }
        let mut o = 0;
        for k in 0..perm.len() {
            o = o * out_dims[k] + idx[perm[k]];
        }
        m[(o, flat)] = 1.0;
    }
    m
}

pub fn rel_residual(x: &CMat, y: &CMat) -> f64 {
    let d = (x - y).norm();
    let s = x.norm().max(y.norm()).max(1.0);
    d / s
}

/// Positive square root of a Hermitian matrix; fails unless it is positive definite.
pub fn herm_sqrt(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let h = (a + a.adjoint()) * C64::new(0.5, 0.0);
    let e = h.symmetric_eigen();
    let lo = e.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if n > 0 && lo <= 0.0 {
        return Err(Error::Singular(format!("form is not positive definite (smallest eigenvalue {lo:.3e})")));
    }
    let d = CMat::from_diagonal(&e.eigenvalues.map(|x| C64::new(x.sqrt(), 0.0)));
    Ok(&e.eigenvectors * d * e.eigenvectors.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: u64) -> CMat {
        let mut s = seed;
        CMat::from_fn(n, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 11) as f64) / (1u64 << 53) as f64 - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((s >> 11) as f64) / (1u64 << 53) as f64 - 0.5;
            C64::new(a, b)
        })
    }

    #[test]
    fn zgemm_matches_naive() {
        let a = sample(23, 1);
        let b = sample(23, 2);
        assert!((mul(&a, &b) - &a * &b).norm() < 1e-12);
        let r = CMat::from_fn(30, 7, |i, j| c(i as f64, j as f64 * 0.5));
        let s = CMat::from_fn(7, 19, |i, j| c(j as f64 - 1.0, i as f64));
        assert!((mul(&r, &s) - &r * &s).norm() < 1e-9);
    }

    #[test]
    fn eig_reconstructs() {
        let a = sample(12, 3);
        let e = eig(&a, 1e8).unwrap();
        let back = e.apply_fn(|z| z);
        assert!((back - a).norm() < 1e-10);
    }

    #[test]
    fn eig_rejects_jordan_block() {
        let mut a = CMat::zeros(2, 2);
        a[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(eig(&a, 1e8), Err(Error::IllConditioned(_))));
    }

    #[test]
    fn nullspace_and_pinv() {
        let a = CMat::from_row_slice(2, 3, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let k = nullspace(&a, 1e-9);
        assert_eq!(k.ncols(), 1);
        assert!(mul(&a, &k).norm() < 1e-12);
        let p = pinv(&a, 1e-12);
        assert!((mul(&mul(&a, &p), &a) - &a).norm() < 1e-12);
    }

    #[test]
    fn polar_parts() {
        let a = sample(6, 9);
        let (u, h) = polar(&a);
        assert!(dist_id(&mul(&u.adjoint(), &u)) < 1e-12);
        assert!((mul(&u, &h) - &a).norm() < 1e-12);
        assert!((h.adjoint() - &h).norm() < 1e-12);
    }

    #[test]
    fn leg_permutation_swaps() {
        let p = to_c(&leg_permutation(&[2, 3], &[1, 0]));
        let a = CVec::from_vec(vec![c(1.0, 0.0), c(2.0, 0.0)]);
        let b = CVec::from_vec(vec![c(3.0, 0.0), c(4.0, 0.0), c(5.0, 0.0)]);
        let lhs = &p * kron_vec(&a, &b);
        assert!((lhs - kron_vec(&b, &a)).norm() < 1e-15);
    }
}
