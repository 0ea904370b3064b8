use crate::linalg::{c, eig, eigh, eye, inv, mul, to_c, CMat, RMat, C64};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct KzOptions {
    pub x0: f64,
    pub terms: usize,
    pub tol: f64,
    pub eps_res: f64,
    pub max_cond: f64,
}

impl Default for KzOptions {
    fn default() -> Self {
        KzOptions { x0: 0.5, terms: 120, tol: 1e-10, eps_res: 1e-6, max_cond: 1e8 }
    }
}

/// The system `w' = (A/z + B/(z−1)) w`.
#[derive(Clone, Debug)]
pub struct ConnectionProblem {
    pub a: CMat,
    pub b: CMat,
}

/// Diagonalisation `M = P diag(d) P⁻¹`.
#[derive(Clone, Debug)]
struct Diag {
    vals: Vec<C64>,
    p: CMat,
    pinv: CMat,
}

impl Diag {
    fn general(m: &CMat, max_cond: f64) -> Result<Diag> {
        let e = eig(m, max_cond)?;
        Ok(Diag { vals: e.values, p: e.vectors, pinv: e.inverse })
    }

    /// `hbar · s` with `s` real symmetric.
    fn scaled_symmetric(hbar: C64, s: &RMat) -> Diag {
        let (vals, vecs) = eigh(s);
        let p = to_c(&vecs);
        let pinv = p.transpose();
        Diag { vals: vals.iter().map(|&x| hbar * x).collect(), p, pinv }
    }

    fn exp_scaled(&self, s: C64) -> CMat {
        let mut left = self.p.clone();
        for (j, v) in self.vals.iter().enumerate() {
            left.column_mut(j).scale_mut_c((v * s).exp());
        }
        mul(&left, &self.pinv)
    }
}

trait ScaleC {
    fn scale_mut_c(&mut self, f: C64);
}

impl<S: nalgebra::StorageMut<C64, nalgebra::Dyn, nalgebra::U1>> ScaleC for nalgebra::Matrix<C64, nalgebra::Dyn, nalgebra::U1, S> {
    fn scale_mut_c(&mut self, f: C64) {
        for z in self.iter_mut() {
            *z *= f;
        }
    }
}

/// Smallest distance of an eigenvalue difference to a positive integer up to `terms`.
pub fn resonance_margin(vals: &[C64], terms: usize) -> f64 {
    let mut margin = f64::INFINITY;
    for a in vals {
        for b in vals {
            let d = a - b;
            let n0 = d.re.round();
            for n in [n0 - 1.0, n0, n0 + 1.0] {
                if n >= 1.0 && n <= terms as f64 {
                    margin = margin.min((d - c(n, 0.0)).norm());
                }
            }
        }
    }
    margin
}

impl ConnectionProblem {
    pub fn new(a: CMat, b: CMat) -> Self {
        ConnectionProblem { a, b }
    }

    pub fn resonance_margin(&self, terms: usize) -> Result<f64> {
        let da = eig(&self.a, 1e12)?;
        let db = eig(&self.b, 1e12)?;
        Ok(resonance_margin(&da.values, terms).min(resonance_margin(&db.values, terms)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Point {
    Zero,
    One,
}

/// Coefficients `H_0..H_N` of `H(x) = G(x) x^{−A₀}` in the original basis.
#[derive(Clone, Debug)]
pub struct SeriesSolution {
    pub exponent: CMat,
    pub residue: CMat,
    pub coeffs: Vec<CMat>,
    pub tail_estimate: f64,
}

impl SeriesSolution {
    /// Largest residual of `[A₀, H_n] − n H_n = R Σ_{i<n} H_i`, where `R` is the other residue.
    pub fn recursion_residual(&self) -> f64 {
        let mut sum = CMat::zeros(self.exponent.nrows(), self.exponent.ncols());
        let mut worst: f64 = 0.0;
        for (n, h) in self.coeffs.iter().enumerate() {
            if n > 0 {
                let lhs = mul(&self.exponent, h) - mul(h, &self.exponent) - h * c(n as f64, 0.0);
                let rhs = mul(&self.residue, &sum);
                let scale = h.norm().max(rhs.norm()).max(1e-300);
                worst = worst.max((lhs - rhs).norm() / scale.max(1.0));
            }
            sum += h;
        }
        worst
    }

    pub fn eval(&self, x: f64) -> CMat {
        let n = self.exponent.nrows();
        let mut out = CMat::zeros(n, n);
        let mut p = 1.0;
        for h in &self.coeffs {
            out += h * c(p, 0.0);
            p *= x;
        }
        out
    }
}

/// Streaming evaluation of `P⁻¹ H(x) P` at several points; returns the sums and a tail bound.
fn series_in_eigenbasis(d: &Diag, other: &CMat, xs: &[f64], terms: usize, eps_res: f64, keep: bool) -> Result<(Vec<CMat>, f64, Vec<CMat>)> {
    let n = d.vals.len();
    let margin = resonance_margin(&d.vals, terms);
    if margin < eps_res {
        return Err(Error::Resonance(format!(
            "eigenvalue difference within {margin:.3e} of a positive integer"
        )));
    }
    let bt = mul(&mul(&d.pinv, other), &d.p);
    let mut s = eye(n);
    let mut sums: Vec<CMat> = xs.iter().map(|_| eye(n)).collect();
    let mut kept = vec![eye(n)];
    let mut recent: Vec<f64> = Vec::new();
    let xmax = xs.iter().cloned().fold(0.0, f64::max);
    for k in 1..=terms {
        let mut h = mul(&bt, &s);
        for j in 0..n {
            for i in 0..n {
                h[(i, j)] /= d.vals[i] - d.vals[j] - c(k as f64, 0.0);
            }
        }
        for (sum, &x) in sums.iter_mut().zip(xs) {
            let w = x.powi(k as i32);
            if w > 0.0 {
                *sum += &h * c(w, 0.0);
            }
        }
        recent.push(h.norm() * xmax.powi(k as i32));
        s += &h;
        if keep {
            kept.push(h);
        }
    }
    let tail = recent.iter().rev().take(5).cloned().fold(0.0, f64::max) * 5.0;
    Ok((sums, tail, kept))
}

pub fn solve_series(problem: &ConnectionProblem, at: Point, terms: usize, opts: &KzOptions) -> Result<SeriesSolution> {
    let (a0, other) = match at {
        Point::Zero => (&problem.a, &problem.b),
        Point::One => (&problem.b, &problem.a),
    };
    let d = Diag::general(a0, opts.max_cond)?;
    let (_, tail, kept) = series_in_eigenbasis(&d, other, &[0.5], terms, opts.eps_res, true)?;
    let coeffs = kept.iter().map(|h| mul(&mul(&d.p, h), &d.pinv)).collect();
    Ok(SeriesSolution { exponent: a0.clone(), residue: other.clone(), coeffs, tail_estimate: tail })
}

/// Normalised solutions `G₀(x)` and `G₁(x)` at the given points.
fn solutions(da: &Diag, db: &Diag, a: &CMat, b: &CMat, xs: &[f64], opts: &KzOptions) -> Result<Vec<(CMat, CMat)>> {
    let (h0, tail0, _) = series_in_eigenbasis(da, b, xs, opts.terms, opts.eps_res, false)?;
    let ys: Vec<f64> = xs.iter().map(|x| 1.0 - x).collect();
    let (h1, tail1, _) = series_in_eigenbasis(db, a, &ys, opts.terms, opts.eps_res, false)?;
    if tail0.max(tail1) > opts.tol {
        return Err(Error::Invalid(format!(
            "series tail {:.3e} exceeds tolerance {:.1e} at {} terms",
            tail0.max(tail1),
            opts.tol,
            opts.terms
        )));
    }
    let mut out = Vec::new();
    for (k, &x) in xs.iter().enumerate() {
        // G₀ = P H̃ x^D P⁻¹.
        let mut g0 = mul(&da.p, &h0[k]);
        for (j, v) in da.vals.iter().enumerate() {
            g0.column_mut(j).scale_mut_c((v * x.ln()).exp());
        }
        let g0 = mul(&g0, &da.pinv);
        let mut g1 = mul(&db.p, &h1[k]);
        for (j, v) in db.vals.iter().enumerate() {
            g1.column_mut(j).scale_mut_c((v * (1.0 - x).ln()).exp());
        }
        let g1 = mul(&g1, &db.pinv);
        out.push((g0, g1));
    }
    Ok(out)
}

fn connect(da: &Diag, db: &Diag, a: &CMat, b: &CMat, opts: &KzOptions) -> Result<CMat> {
    let n = a.nrows();
    if n == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    if b.iter().all(|z| z.norm() == 0.0) || a.iter().all(|z| z.norm() == 0.0) {
        return Ok(eye(n));
    }
    let sols = solutions(da, db, a, b, &[opts.x0], opts)?;
    let (g0, g1) = &sols[0];
    Ok(mul(&inv(g1)?, g0))
}

/// `Φ(A, B) = G₁(x₀)⁻¹ G₀(x₀)`.
pub fn associator(a: &CMat, b: &CMat, opts: &KzOptions) -> Result<CMat> {
    let da = Diag::general(a, opts.max_cond)?;
    let db = Diag::general(b, opts.max_cond)?;
    connect(&da, &db, a, b, opts)
}

/// `Φ(ℏS, ℏT)` for real symmetric `S`, `T`, using orthogonal eigenbases.
pub fn associator_sym(hbar: C64, s: &RMat, t: &RMat, opts: &KzOptions) -> Result<CMat> {
    let da = Diag::scaled_symmetric(hbar, s);
    let db = Diag::scaled_symmetric(hbar, t);
    let a = to_c(s) * hbar;
    let b = to_c(t) * hbar;
    connect(&da, &db, &a, &b, opts)
}

/// Spread of `Φ` over `x₀ ∈ {0.4, 0.5, 0.6}`.
pub fn x0_spread(a: &CMat, b: &CMat, opts: &KzOptions) -> Result<f64> {
    let da = Diag::general(a, opts.max_cond)?;
    let db = Diag::general(b, opts.max_cond)?;
    let sols = solutions(&da, &db, a, b, &[0.4, 0.5, 0.6], opts)?;
    let phis: Vec<CMat> = sols.iter().map(|(g0, g1)| Ok(mul(&inv(g1)?, g0))).collect::<Result<_>>()?;
    Ok((&phis[0] - &phis[1]).norm().max((&phis[2] - &phis[1]).norm()))
}

#[derive(Clone, Debug)]
pub struct Monodromy {
    pub m0: CMat,
    pub m1: CMat,
    /// `‖M₁ − G₀ Φ⁻¹ e^{2πiB} Φ G₀⁻¹‖`.
    pub conjugacy_residual: f64,
}

pub fn monodromy(a: &CMat, b: &CMat, opts: &KzOptions) -> Result<Monodromy> {
    let n = a.nrows();
    let da = Diag::general(a, opts.max_cond)?;
    let db = Diag::general(b, opts.max_cond)?;
    let two_pi_i = c(0.0, 2.0 * std::f64::consts::PI);
    let ea = da.exp_scaled(two_pi_i);
    let eb = db.exp_scaled(two_pi_i);
    let (g0, g1) = if n == 0 {
        (eye(0), eye(0))
    } else {
        solutions(&da, &db, a, b, &[opts.x0], opts)?.remove(0)
    };
    let g0i = inv(&g0)?;
    let m0 = mul(&mul(&g0, &ea), &g0i);
    let m1 = mul(&mul(&g1, &eb), &inv(&g1)?);
    let phi = mul(&inv(&g1)?, &g0);
    let other = mul(&mul(&mul(&mul(&g0, &inv(&phi)?), &eb), &phi), &g0i);
    let conjugacy_residual = (&m1 - other).norm();
    Ok(Monodromy { m0, m1, conjugacy_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, dist_id};

    fn zeta3() -> f64 {
        (1..200000).map(|k| 1.0 / (k as f64).powi(3)).sum()
    }

    fn sample(n: usize, seed: u64, scale: f64) -> CMat {
        let mut s = seed;
        CMat::from_fn(n, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 11) as f64) / (1u64 << 53) as f64 - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((s >> 11) as f64) / (1u64 << 53) as f64 - 0.5;
            c(a * scale, b * scale)
        })
    }

    #[test]
    fn trivial_cases() {
        let z = CMat::zeros(3, 3);
        let opts = KzOptions::default();
        assert!(dist_id(&associator(&z, &z, &opts).unwrap()) < 1e-15);
        let p = ConnectionProblem::new(z.clone(), z.clone());
        let s = solve_series(&p, Point::Zero, 10, &opts).unwrap();
        assert!(s.coeffs.iter().skip(1).all(|h| h.norm() == 0.0));
        let m = monodromy(&z, &z, &opts).unwrap();
        assert!(dist_id(&m.m0) < 1e-14 && dist_id(&m.m1) < 1e-14);
    }

    #[test]
    fn commuting_gives_identity() {
        let d1 = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.1, 0.2), c(-0.3, 0.1), c(0.05, -0.2)]));
        let d2 = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.2, 0.0), c(0.1, 0.3), c(-0.2, 0.1)]));
        let q = sample(3, 4, 1.0) + eye(3) * c(2.0, 0.0);
        let qi = inv(&q).unwrap();
        let a = mul(&mul(&q, &d1), &qi);
        let b = mul(&mul(&q, &d2), &qi);
        let phi = associator(&a, &b, &KzOptions::default()).unwrap();
        assert!(dist_id(&phi) < 1e-10);
        // Monodromy of commuting exponents: e^{2πiA} after the normalising conjugation.
        let m = monodromy(&a, &b, &KzOptions::default()).unwrap();
        assert!(m.conjugacy_residual < 1e-9);
    }

    #[test]
    fn scalar_monodromy() {
        let a = CMat::from_element(1, 1, c(0.3, 0.1));
        let b = CMat::from_element(1, 1, c(-0.2, 0.05));
        let m = monodromy(&a, &b, &KzOptions::default()).unwrap();
        let want = (c(0.0, 2.0 * std::f64::consts::PI) * a[(0, 0)]).exp();
        assert!((m.m0[(0, 0)] - want).norm() < 1e-12);
    }

    #[test]
    fn recursion_residual_small() {
        let a = sample(4, 11, 0.6);
        let b = sample(4, 12, 0.6);
        let p = ConnectionProblem::new(a, b);
        let s = solve_series(&p, Point::Zero, 60, &KzOptions::default()).unwrap();
        assert!(s.recursion_residual() < 1e-13);
        assert!((&s.coeffs[0] - eye(4)).norm() < 1e-15);
        let s1 = solve_series(&p, Point::One, 60, &KzOptions::default()).unwrap();
        assert!(s1.recursion_residual() < 1e-13);
    }

    #[test]
    fn taylor_law() {
        let a = sample(3, 21, 1.0);
        let b = sample(3, 22, 1.0);
        let z2 = std::f64::consts::PI.powi(2) / 6.0;
        let z3 = zeta3();
        let err = |h: f64| {
            let hb = c(h, 0.0);
            let phi = associator(&(&a * hb), &(&b * hb), &KzOptions::default()).unwrap();
            let ab = commutator(&a, &b);
            let approx = eye(3) - &ab * c(h * h * z2, 0.0)
                - (commutator(&a, &ab) + commutator(&b, &ab)) * c(h * h * h * z3, 0.0);
            (phi - approx).norm()
        };
        let e1 = err(1e-2);
        let e2 = err(5e-3);
        assert!(e1 < 1e-6, "{e1}");
        let ratio = e1 / e2;
        assert!(ratio > 16.0 / 2.5 && ratio < 16.0 * 2.5, "ratio {ratio}");
    }

    #[test]
    fn resonance_rejected() {
        let a = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]));
        let b = sample(2, 3, 1.0);
        assert!(matches!(associator(&a, &b, &KzOptions::default()), Err(Error::Resonance(_))));
    }

    #[test]
    fn x0_independence() {
        let a = sample(4, 31, 0.8);
        let b = sample(4, 32, 0.8);
        assert!(x0_spread(&a, &b, &KzOptions::default()).unwrap() < 1e-9);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]
        #[test]
        fn unitary_for_antihermitian(seed in 0u64..1000) {
            let x = sample(4, seed, 0.6);
            let y = sample(4, seed + 7, 0.6);
            let a = &x - x.adjoint();
            let b = &y - y.adjoint();
            let phi = associator(&a, &b, &KzOptions::default()).unwrap();
            proptest::prop_assert!(dist_id(&mul(&phi.adjoint(), &phi)) < 1e-10);
        }

        #[test]
        fn centraliser_shift(seed in 0u64..1000, s in -0.4f64..0.4) {
            let a = sample(3, seed, 0.7);
            let b = sample(3, seed + 3, 0.7);
            let opts = KzOptions::default();
            let phi = associator(&a, &b, &opts).unwrap();
            let shifted = associator(&(&a + eye(3) * c(s, 0.1)), &b, &opts).unwrap();
            proptest::prop_assert!((phi - shifted).norm() < 1e-10);
        }

        #[test]
        fn mirror_symmetry(seed in 0u64..1000) {
            // Φ(B, A) = Φ(A, B)⁻¹.
            let a = sample(3, seed, 0.7);
            let b = sample(3, seed + 5, 0.7);
            let opts = KzOptions::default();
            let p = associator(&a, &b, &opts).unwrap();
            let q = associator(&b, &a, &opts).unwrap();
            proptest::prop_assert!(dist_id(&mul(&p, &q)) < 1e-10);
        }
    }

    #[test]
    fn symmetric_path_matches_general() {
        let s = RMat::from_fn(4, 4, |i, j| ((i + 2 * j) as f64 * 0.37).sin() + ((j + 2 * i) as f64 * 0.37).sin());
        let t = RMat::from_fn(4, 4, |i, j| ((i * j) as f64 * 0.21).cos());
        let h = c(0.1, 0.3);
        let opts = KzOptions::default();
        let p1 = associator_sym(h, &s, &t, &opts).unwrap();
        let p2 = associator(&(to_c(&s) * h), &(to_c(&t) * h), &opts).unwrap();
        assert!((p1 - p2).norm() < 1e-10);
    }
}
