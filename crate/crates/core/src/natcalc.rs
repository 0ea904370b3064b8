use crate::cartan::{Algebra, Weight};
use crate::kzode::associator_sym;
use crate::linalg::{c, fro, herm_fn, inv, kron, leg_permutation, polar, to_c, CMat, RMat, C64};
use crate::morphisms::hom_space;
use crate::repr::{Lie, Module};
use crate::tensor::{decomposition, space, Drinfeld, Grouping};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// `Σ_{a ∈ xs, b ∈ ys} t_ab` on the tensor product of `legs`.
pub fn t_legs(lie: &Lie, legs: &[Weight], xs: &[usize], ys: &[usize]) -> RMat {
    let sp = space(lie, legs);
    let mut out = RMat::zeros(sp.dim, sp.dim);
    for &a in xs {
        for &b in ys {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let t = lie.t_pair(&legs[lo], &legs[hi]);
            let dh = sp.dims[hi];
            for k in 0..sp.dim {
                let (dl, dhk) = (sp.digit(k, lo), sp.digit(k, hi));
                let colx = dl * dh + dhk;
                for row in 0..t.nrows() {
                    let v = t[(row, colx)];
                    if v == 0.0 {
                        continue;
                    }
                    let (nl, nh) = (row / dh, row % dh);
                    let tgt = k + nl * sp.stride(lo) + nh * sp.stride(hi) - dl * sp.stride(lo) - dhk * sp.stride(hi);
                    out[(tgt, k)] += v;
                }
            }
        }
    }
    out
}

/// `Φ(ℏ t_{12}, ℏ t_{23})` on `V_1 ⊗ V_2 ⊗ V_3`.
pub fn drinfeld_associator(d: &Drinfeld, legs: &[Weight]) -> Result<CMat> {
    if legs.len() != 3 {
        return Err(Error::Invalid("the associator acts on three legs".into()));
    }
    d.phi_matrix(legs, &Grouping::triple(0), false)
}

/// `‖Φ_{1,2,34} Φ_{12,3,4} − Φ_{234} Φ_{1,23,4} Φ_{123}‖`.
pub fn pentagon_residual(d: &Drinfeld, legs: &[Weight]) -> Result<f64> {
    let sp = space(&d.lie, legs);
    let id = CMat::identity(sp.dim, sp.dim);
    let lhs = d.apply_phi(&id, legs, &Grouping::new(0, 4, 2, 3), false)?;
    let lhs = d.apply_phi(&lhs, legs, &Grouping::new(0, 4, 1, 2), false)?;
    let rhs = d.apply_phi(&id, legs, &Grouping::triple(0), false)?;
    let rhs = d.apply_phi(&rhs, legs, &Grouping::new(0, 4, 1, 3), false)?;
    let rhs = d.apply_phi(&rhs, legs, &Grouping::triple(1), false)?;
    Ok(fro(&(lhs - rhs)))
}

fn qexp(d: &Drinfeld, t: &RMat) -> CMat {
    let h = d.hbar;
    herm_fn(t, |x| (c(0.0, std::f64::consts::PI) * h * x).exp())
}

/// Residuals of `(Δ⊗ι)(R) = Φ_{312} R_{13} Φ_{132}^{-1} R_{23} Φ_{123}` and
/// `(ι⊗Δ)(R) = Φ_{231}^{-1} R_{13} Φ_{213} R_{12} Φ_{123}^{-1}` with `R = q^t`.
pub fn hexagon_residuals(d: &Drinfeld, legs: &[Weight]) -> Result<(f64, f64)> {
    let lie = &d.lie;
    let t = |a: usize, b: usize| t_legs(lie, legs, &[a], &[b]);
    let (t12, t13, t23) = (t(0, 1), t(0, 2), t(1, 2));
    let phi = |x: &RMat, y: &RMat| associator_sym(d.hbar, x, y, &d.opts);
    let p123 = phi(&t12, &t23)?;
    let lhs1 = qexp(d, &(&t13 + &t23));
    let rhs1 = phi(&t13, &t12)? * qexp(d, &t13) * inv(&phi(&t13, &t23)?)? * qexp(d, &t23) * &p123;
    let lhs2 = qexp(d, &(&t12 + &t13));
    let rhs2 = inv(&phi(&t23, &t13)?)? * qexp(d, &t13) * phi(&t12, &t13)? * qexp(d, &t12) * inv(&p123)?;
    Ok((fro(&(lhs1 - rhs1)), fro(&(lhs2 - rhs2))))
}

/// `Σ q^t` on `V_a ⊗ V_b` as a map to `V_b ⊗ V_a`.
pub fn braiding(d: &Drinfeld, a: &Weight, b: &Weight) -> CMat {
    let n = d.lie.irrep(a).dim() * d.lie.irrep(b).dim();
    d.apply_braiding(&CMat::identity(n, n), &[a.clone(), b.clone()], 0, false).0
}

/// Braid generators `b1 = σ ⊗ 1`, `b2 = Φ^{-1}(1 ⊗ σ)Φ` on `V^{⊗3}` and the
/// residual of `b1 b2 b1 = b2 b1 b2`.
pub fn braid_b3(d: &Drinfeld, v: &Weight) -> Result<(CMat, CMat, f64)> {
    let legs = vec![v.clone(), v.clone(), v.clone()];
    let dv = d.lie.irrep(v).dim();
    let s = braiding(d, v, v);
    let b1 = kron(&s, &CMat::identity(dv, dv));
    let phi = drinfeld_associator(d, &legs)?;
    let b2 = inv(&phi)? * kron(&CMat::identity(dv, dv), &s) * &phi;
    let res = fro(&(&b1 * &b2 * &b1 - &b2 * &b1 * &b2));
    Ok((b1, b2, res))
}

/// Dual module `Xf = −f(X ·)` in the dual basis.
pub fn dual_module(m: &Module) -> Module {
    Module {
        dim: m.dim,
        weights: m.weights.iter().map(|w| w.iter().map(|x| -x).collect()).collect(),
        e: m.e.iter().map(|x| -x.transpose()).collect(),
        f: m.f.iter().map(|x| -x.transpose()).collect(),
    }
}

/// `d_q(V_λ) = Tr q^{h_{2ρ}}`.
pub fn quantum_dimension(d: &Drinfeld, lambda: &Weight) -> C64 {
    let lie = &d.lie;
    let two_rho = crate::cartan::scale(&lie.rd.rho(), 2);
    lie.irrep(lambda).module.weights.iter().map(|w| d.qpow(lie.rd.inner_f(w, &two_rho))).sum()
}

/// `‖(ι ⊗ e_V) Φ (i_V ⊗ ι) − 1‖` for the right dual `V^*` with `e_V = d_q(V)/d(V) e_v`.
pub fn dual_check(d: &Drinfeld, lambda: &Weight) -> Result<f64> {
    let lie = &d.lie;
    let v = lie.irrep(lambda).module.clone();
    let vs = dual_module(&v);
    let n = v.dim;
    let t12 = rkron3(&lie.t_matrix(&v, &vs), n, true);
    let t23 = rkron3(&lie.t_matrix(&vs, &v), n, false);
    let phi = associator_sym(d.hbar, &t12, &t23, &d.opts)?;
    let dq = quantum_dimension(d, lambda);
    // i_v ⊗ ι: V → V ⊗ V* ⊗ V, x ↦ Σ_k v_k ⊗ v_k^* ⊗ x.
    let mut iv = CMat::zeros(n * n * n, n);
    for x in 0..n {
        for k in 0..n {
            iv[((k * n + k) * n + x, x)] = c(1.0, 0.0);
        }
    }
    // ι ⊗ e_v: V ⊗ V* ⊗ V → V, a ⊗ f ⊗ b ↦ f(b) a.
    let mut ev = CMat::zeros(n, n * n * n);
    for a in 0..n {
        for k in 0..n {
            ev[(a, (a * n + k) * n + k)] = c(1.0, 0.0);
        }
    }
    let comp = ev * phi * iv * (dq / n as f64);
    Ok(fro(&(comp - CMat::identity(n, n))))
}

/// Lifts a two-leg operator on `n × n` to the legs (1,2) or (2,3) of `n³`.
fn rkron3(t: &RMat, n: usize, first: bool) -> RMat {
    let id = RMat::identity(n, n);
    if first {
        crate::linalg::rkron(t, &id)
    } else {
        crate::linalg::rkron(&id, t)
    }
}

/// `‖Φ_{U,V,W}(f ⊗ 1 ⊗ 1) − (f ⊗ 1 ⊗ 1)Φ_{U',V,W}‖` for a random `f ∈ Hom(U', U)`,
/// `U` a tensor product of `u_legs` and `U'` irreducible.
pub fn naturality_residual(d: &Drinfeld, u_legs: &[Weight], u_prime: &Weight, v: &Weight, w: &Weight, seed: u64) -> Result<f64> {
    let lie = &d.lie;
    let homs = hom_space(lie, &[u_prime.clone()], u_legs);
    if homs.is_empty() {
        return Err(Error::Invalid("no morphisms to test naturality with".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = CMat::zeros(homs[0].mat.nrows(), homs[0].mat.ncols());
    for h in &homs {
        f += &h.mat * c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    let (dv, dw) = (lie.irrep(v).dim(), lie.irrep(w).dim());
    let lift = kron(&f, &CMat::identity(dv * dw, dv * dw));
    let mut big: Vec<Weight> = u_legs.to_vec();
    big.push(v.clone());
    big.push(w.clone());
    let k = u_legs.len();
    let lhs = d.apply_phi(&lift, &big, &Grouping::new(0, k + 2, k, k + 1), false)?;
    let small = vec![u_prime.clone(), v.clone(), w.clone()];
    let rhs = &lift * d.phi_matrix(&small, &Grouping::triple(0), false)?;
    Ok(fro(&(lhs - rhs)))
}

/// Blocks `F_{η,ν}` of an element of the two-fold multiplier algebra on `V_η ⊗ V_ν`.
#[derive(Clone, Debug)]
pub struct NatElement2 {
    pub blocks: BTreeMap<(Weight, Weight), CMat>,
}

impl NatElement2 {
    pub fn block(&self, eta: &Weight, nu: &Weight) -> Result<&CMat> {
        self.blocks.get(&(eta.clone(), nu.clone())).ok_or_else(|| Error::OutOfSupport(crate::cartan::add(eta, nu)))
    }

    /// `(ι ⊗ Δ)(F)` on `V_a ⊗ V_b ⊗ V_c`.
    pub fn lift_right(&self, lie: &Lie, a: &Weight, b: &Weight, cc: &Weight) -> Result<CMat> {
        let da = lie.irrep(a).dim();
        let dec = decomposition(lie, &[b.clone(), cc.clone()]);
        let n = da * lie.irrep(b).dim() * lie.irrep(cc).dim();
        let mut out = CMat::zeros(n, n);
        for (kappa, embs) in &dec.parts {
            let f = self.block(a, kappa)?;
            for e in embs {
                let j = kron(&CMat::identity(da, da), e);
                out += &j * f * j.adjoint();
            }
        }
        Ok(out)
    }

    /// `(Δ ⊗ ι)(F)` on `V_a ⊗ V_b ⊗ V_c`.
    pub fn lift_left(&self, lie: &Lie, a: &Weight, b: &Weight, cc: &Weight) -> Result<CMat> {
        let dc = lie.irrep(cc).dim();
        let dec = decomposition(lie, &[a.clone(), b.clone()]);
        let n = lie.irrep(a).dim() * lie.irrep(b).dim() * dc;
        let mut out = CMat::zeros(n, n);
        for (kappa, embs) in &dec.parts {
            let f = self.block(kappa, cc)?;
            for e in embs {
                let j = kron(e, &CMat::identity(dc, dc));
                out += &j * f * j.adjoint();
            }
        }
        Ok(out)
    }

    /// `Φ_F = (1 ⊗ F)(ι ⊗ Δ)(F) Φ (Δ ⊗ ι)(F^{-1})(F^{-1} ⊗ 1)` on `V_a ⊗ V_b ⊗ V_c`.
    pub fn twisted_associator(&self, d: &Drinfeld, a: &Weight, b: &Weight, cc: &Weight) -> Result<CMat> {
        let lie = &d.lie;
        let (da, dc) = (lie.irrep(a).dim(), lie.irrep(cc).dim());
        let phi = drinfeld_associator(d, &[a.clone(), b.clone(), cc.clone()])?;
        let one_f = kron(&CMat::identity(da, da), self.block(b, cc)?);
        let f_one = kron(self.block(a, b)?, &CMat::identity(dc, dc));
        let right = self.lift_right(lie, a, b, cc)?;
        let left = self.lift_left(lie, a, b, cc)?;
        Ok(one_f * right * phi * inv(&left)? * inv(&f_one)?)
    }

    pub fn twisted_associator_residual(&self, d: &Drinfeld, a: &Weight, b: &Weight, cc: &Weight) -> Result<f64> {
        let m = self.twisted_associator(d, a, b, cc)?;
        Ok(crate::linalg::dist_id(&m))
    }

    /// `R_F = F_{21} q^t F^{-1}` on `V_a ⊗ V_b`.
    pub fn twisted_r(&self, d: &Drinfeld, a: &Weight, b: &Weight) -> Result<CMat> {
        let lie = &d.lie;
        let (da, db) = (lie.irrep(a).dim(), lie.irrep(b).dim());
        let p = to_c(&leg_permutation(&[db, da], &[1, 0]));
        let f21 = p.clone() * self.block(b, a)? * p.transpose();
        Ok(f21 * d.qt(a, b).as_ref() * inv(self.block(a, b)?)?)
    }

    /// `‖R^* − R_{21}‖` on `V_a ⊗ V_b`.
    pub fn r_star_residual(&self, d: &Drinfeld, a: &Weight, b: &Weight) -> Result<f64> {
        let lie = &d.lie;
        let (da, db) = (lie.irrep(a).dim(), lie.irrep(b).dim());
        let r = self.twisted_r(d, a, b)?;
        let r_ba = self.twisted_r(d, b, a)?;
        let p = to_c(&leg_permutation(&[db, da], &[1, 0]));
        let r21 = &p * r_ba * p.transpose();
        Ok(fro(&(r.adjoint() - r21)))
    }

    /// Gauge by `u` and take the unitary polar part:
    /// `F ↦ polar((u ⊗ u) F Δ(u)^{-1})`.
    pub fn unitarize(&self, lie: &Lie, u: &dyn Fn(&Weight) -> Result<CMat>) -> Result<NatElement2> {
        let mut blocks = BTreeMap::new();
        for ((a, b), f) in &self.blocks {
            let dec = decomposition(lie, &[a.clone(), b.clone()]);
            let mut du = CMat::zeros(f.nrows(), f.ncols());
            for (kappa, embs) in &dec.parts {
                let uk = inv(&u(kappa)?)?;
                for e in embs {
                    du += e * &uk * e.adjoint();
                }
            }
            let g = kron(&u(a)?, &u(b)?) * f * du;
            blocks.insert((a.clone(), b.clone()), polar(&g).0);
        }
        Ok(NatElement2 { blocks })
    }

    pub fn is_unitary_residual(&self) -> f64 {
        self.blocks.values().map(|f| crate::linalg::dist_id(&(f.adjoint() * f))).fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct BlockJson {
    pub eta: Weight,
    pub nu: Weight,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct TwistJson {
    pub algebra: String,
    pub hbar: [f64; 2],
    pub support: Vec<Weight>,
    pub blocks: Vec<BlockJson>,
}

impl NatElement2 {
    pub fn to_json(&self, algebra: Algebra, hbar: C64, support: &[Weight]) -> TwistJson {
        let blocks = self
            .blocks
            .iter()
            .map(|((e, n), m)| BlockJson {
                eta: e.clone(),
                nu: n.clone(),
                matrix: (0..m.nrows()).map(|r| (0..m.ncols()).map(|k| [m[(r, k)].re, m[(r, k)].im]).collect()).collect(),
            })
            .collect();
        TwistJson { algebra: format!("{algebra:?}"), hbar: [hbar.re, hbar.im], support: support.to_vec(), blocks }
    }

    pub fn from_json(j: &TwistJson) -> NatElement2 {
        let blocks = j
            .blocks
            .iter()
            .map(|b| {
                let n = b.matrix.len();
                let m = CMat::from_fn(n, n, |r, k| c(b.matrix[r][k][0], b.matrix[r][k][1]));
                ((b.eta.clone(), b.nu.clone()), m)
            })
            .collect();
        NatElement2 { blocks }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartan::Algebra;
    use crate::kzode::KzOptions;
    use crate::linalg::eig;

    fn drin(alg: Algebra, h: C64) -> Drinfeld {
        Drinfeld::new(Lie::shared(alg), h, KzOptions::default())
    }

    #[test]
    fn t_legs_matches_dense_coproduct() {
        let lie = Lie::shared(Algebra::A1);
        let legs = vec![vec![1], vec![2], vec![1]];
        let t13 = t_legs(&lie, &legs, &[0], &[2]);
        let t = lie.t_pair(&legs[0], &legs[2]);
        let p = leg_permutation(&[2, 3, 2], &[0, 2, 1]);
        let dense = p.transpose() * crate::linalg::rkron(&t, &RMat::identity(3, 3)) * &p;
        assert!((t13 - dense).amax() < 1e-12);
    }

    #[test]
    fn pentagon_and_hexagons_a1() {
        let d = drin(Algebra::A1, c(0.0, 0.35));
        let w = vec![1];
        assert!(pentagon_residual(&d, &[w.clone(), w.clone(), w.clone(), w.clone()]).unwrap() < 1e-8);
        let (h1, h2) = hexagon_residuals(&d, &[w.clone(), vec![2], w.clone()]).unwrap();
        assert!(h1 < 1e-8 && h2 < 1e-8, "{h1} {h2}");
    }

    #[test]
    fn braid_relation_and_eigenvalues() {
        let d = drin(Algebra::A1, c(0.0, 0.35));
        let (_, _, res) = braid_b3(&d, &vec![1]).unwrap();
        assert!(res < 1e-8);
        let s = braiding(&d, &vec![1], &vec![1]);
        let ev = eig(&s, 1e8).unwrap();
        let q = d.q();
        for want in [q.powf(0.5), -q.powf(-1.5)] {
            assert!(ev.values.iter().any(|z| (z - want).norm() < 1e-10));
        }
    }

    #[test]
    fn dual_and_quantum_dimension() {
        let d = drin(Algebra::A1, c(0.0, 0.35));
        let q = d.q();
        assert!((quantum_dimension(&d, &vec![1]) - (q + q.inv())).norm() < 1e-14);
        for l in [vec![1], vec![2]] {
            assert!(dual_check(&d, &l).unwrap() < 1e-8, "{}", dual_check(&d, &l).unwrap());
        }
    }

    #[test]
    fn associator_is_natural() {
        let d = drin(Algebra::A1, c(0.0, 0.35));
        let r = naturality_residual(&d, &[vec![1], vec![1]], &vec![0], &vec![1], &vec![2], 7).unwrap();
        assert!(r < 1e-9, "{r}");
        let r = naturality_residual(&d, &[vec![1], vec![2]], &vec![1], &vec![1], &vec![1], 8).unwrap();
        assert!(r < 1e-9, "{r}");
    }
}
