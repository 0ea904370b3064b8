use crate::cartan::{add, scale, sub, Weight};
use crate::linalg::{c, fro, herm_sqrt, inv, kron_vec, nullspace, singular_values, CMat, CVec, C64};
use crate::morphisms::{m_apply, phie_apply, psi_apply, qnum, t_map, tau_h, tr_apply, Level};
use crate::natcalc::NatElement2;
use crate::tensor::{apply_legs, check_dominant, decomposition, Drinfeld, Grouping};
use crate::twistbuild::{start_level, Cochain1, TwistBuilder};
use crate::{Error, Result};
use std::collections::BTreeMap;

fn col(v: &CVec) -> CMat {
    CMat::from_column_slice(v.len(), 1, v.as_slice())
}

fn dims_of(d: &Drinfeld, legs: &[Weight]) -> Vec<usize> {
    legs.iter().map(|l| d.lie.irrep(l).dim()).collect()
}

fn one() -> C64 {
    c(1.0, 0.0)
}

/// `q = e^{πiℏ}` and `q_i = q^{d_i}`, rejecting roots of unity of order ≤ 48.
#[derive(Clone, Debug)]
pub struct QContext {
    pub hbar: C64,
    pub q: C64,
    pub qi: Vec<C64>,
}

impl QContext {
    pub fn new(d: &Drinfeld) -> Result<QContext> {
        let q = d.q();
        if !d.is_classical() {
            for k in 1..=48 {
                if (q.powi(k) - one()).norm() <= 1e-8 {
                    return Err(Error::Resonance(format!("q = {q} is a root of unity of order {k}")));
                }
            }
        }
        let qi = d.lie.rd.d.iter().map(|&di| d.qpow(di as f64)).collect();
        Ok(QContext { hbar: d.hbar, q, qi })
    }

    pub fn qnum(&self, n: i64, i: usize) -> C64 {
        qnum(n as f64, self.qi[i])
    }

    /// `[m]! / ([k]! [m−k]!)` in `q_i`.
    pub fn qbinom(&self, m: i64, k: i64, i: usize) -> C64 {
        let fact = |n: i64| (1..=n).map(|j| self.qnum(j, i)).product::<C64>();
        fact(m) / (fact(k) * fact(m - k))
    }
}

/// `E_i`, `F_i`, `K_i` on `V_κ`, transported through the evaluation identification
/// `Hom(M^ℏ_λ, V_κ) ≅ V_κ(λ)`.
#[derive(Clone, Debug)]
pub struct GenAction {
    pub kappa: Weight,
    pub e: Vec<CMat>,
    pub f: Vec<CMat>,
    pub k: Vec<CMat>,
}

fn distinct_weights(ws: &[Weight]) -> Vec<Weight> {
    let mut out = ws.to_vec();
    out.sort();
    out.dedup();
    out
}

/// Level `N` at which both the evaluation on `V_κ(src)` is invertible and the
/// source `L((N+1)μ, tgt)` exists.
fn action_level(b: &TwistBuilder, src: &Weight, tgt: &Weight, kappa: &Weight) -> Result<usize> {
    let n = b.level_for(src, kappa)?;
    Ok(n.max(start_level(tgt, &b.mu_reg).saturating_sub(1)))
}

/// `H G⁻¹` for a lift `w ∈ L(Nμ, src)` of the operator `V_κ(src) → V_κ(tgt)`.
fn transported(b: &TwistBuilder, kappa: &Weight, src: &Weight, tgt: &Weight, n: usize, w: &CMat) -> Result<(Vec<usize>, Vec<usize>, CMat)> {
    let lie = &b.d.lie;
    let (idx_s, g) = b.evaluation_block(src, kappa, n)?;
    let lvl = Level::new(lie, &scale(&b.mu_reg, n as i64), src)?;
    let p = lvl.decomp(lie).project(kappa, &w.column(0).into_owned());
    let idx_t = lie.irrep(kappa).module.indices_of_weight(tgt);
    let h = CMat::from_fn(idx_t.len(), p.ncols(), |r, a| p[(idx_t[r], a)]);
    Ok((idx_s, idx_t, h * inv(&g)?))
}

/// The operators `E_i`, `F_i`, `K_i` on `V_κ` induced by precomposition with the
/// action on `M^ℏ`.
pub fn generator_action(b: &TwistBuilder, kappa: &Weight) -> Result<GenAction> {
    let d = b.d;
    let lie = &d.lie;
    let irr = lie.irrep(kappa);
    let dim = irr.dim();
    let weights = distinct_weights(&irr.module.weights);
    let mut out = GenAction { kappa: kappa.clone(), e: vec![], f: vec![], k: vec![] };
    for i in 0..lie.rank() {
        let ai = lie.rd.simple_root(i);
        let mut e = CMat::zeros(dim, dim);
        let mut f = CMat::zeros(dim, dim);
        for lam in &weights {
            let up = add(lam, &ai);
            if weights.contains(&up) {
                // E: V(λ) → V(λ + α_i) from Φ^{μ+α_i}: L((N+1)μ, λ+α_i) → L(Nμ, λ).
                let n = action_level(b, lam, &up, kappa)?;
                let eta = add(&b.mu_reg, &ai);
                let x = b.cyclic_image(&up, n + 1)?;
                let mu = sub(&scale(&b.mu_reg, n as i64), &ai);
                let w = phie_apply(d, i, &eta, &mu, &up, b.cochain.value(lie, &eta)?, &col(&x))?;
                let (is, it, m) = transported(b, kappa, lam, &up, n, &w)?;
                for (r, &p) in it.iter().enumerate() {
                    for (s, &q) in is.iter().enumerate() {
                        e[(p, q)] = m[(r, s)];
                    }
                }
            }
            let down = sub(lam, &ai);
            if weights.contains(&down) {
                // F: V(λ) → V(λ − α_i) from Ψ^{μ}: L((N+1)μ, λ−α_i) → L(Nμ, λ).
                let n = action_level(b, lam, &down, kappa)?;
                let x = b.cyclic_image(&down, n + 1)?;
                let mu = scale(&b.mu_reg, n as i64);
                let w = psi_apply(d, i, &b.mu_reg, &mu, &down, b.g_mu()?, &col(&x))?;
                let (is, it, m) = transported(b, kappa, lam, &down, n, &w)?;
                for (r, &p) in it.iter().enumerate() {
                    for (s, &q) in is.iter().enumerate() {
                        f[(p, q)] = m[(r, s)];
                    }
                }
            }
        }
        let di = lie.rd.d[i] as f64;
        let k = CMat::from_diagonal(&CVec::from_iterator(dim, irr.module.weights.iter().map(|w| d.qpow(di * w[i] as f64))));
        out.e.push(e);
        out.f.push(f);
        out.k.push(k);
    }
    Ok(out)
}

impl GenAction {
    /// `max ‖[E_i, F_j] − δ_{ij} (K_i − K_i⁻¹)/(q_i − q_i⁻¹)‖`.
    pub fn commutator_residual(&self, d: &Drinfeld) -> f64 {
        let lie = &d.lie;
        let irr = lie.irrep(&self.kappa);
        let mut worst: f64 = 0.0;
        for i in 0..self.e.len() {
            for j in 0..self.f.len() {
                let mut r = &self.e[i] * &self.f[j] - &self.f[j] * &self.e[i];
                if i == j {
                    let qi = d.qpow(lie.rd.d[i] as f64);
                    for (p, w) in irr.module.weights.iter().enumerate() {
                        r[(p, p)] -= qnum(w[i] as f64, qi);
                    }
                }
                worst = worst.max(fro(&r));
            }
        }
        worst
    }

    /// `max ‖K_i X_j K_i⁻¹ − q_i^{±a_{ij}} X_j‖` for `X = E, F`.
    pub fn kek_residual(&self, d: &Drinfeld) -> Result<f64> {
        let lie = &d.lie;
        let mut worst: f64 = 0.0;
        for i in 0..self.k.len() {
            let kinv = inv(&self.k[i])?;
            for j in 0..self.e.len() {
                let s = d.qpow((lie.rd.d[i] * lie.rd.simple_root(j)[i]) as f64);
                worst = worst.max(fro(&(&self.k[i] * &self.e[j] * &kinv - &self.e[j] * s)));
                worst = worst.max(fro(&(&self.k[i] * &self.f[j] * &kinv - &self.f[j] / s)));
            }
        }
        Ok(worst)
    }

    /// `max_i ‖E_i ξ‖` on the highest vector.
    pub fn highest_residual(&self, d: &Drinfeld) -> f64 {
        let irr = d.lie.irrep(&self.kappa);
        let x = irr.highest().map(|t| c(t, 0.0));
        self.e.iter().map(|e| (e * &x).norm()).fold(0.0, f64::max)
    }

    /// Distance to the classical `e_i`, `f_i`, `1`.
    pub fn classical_deviation(&self, d: &Drinfeld) -> f64 {
        let irr = d.lie.irrep(&self.kappa);
        let mut worst: f64 = 0.0;
        for i in 0..self.e.len() {
            worst = worst.max(fro(&(&self.e[i] - irr.module.e[i].map(|t| c(t, 0.0)))));
            worst = worst.max(fro(&(&self.f[i] - irr.module.f[i].map(|t| c(t, 0.0)))));
            worst = worst.max(crate::linalg::dist_id(&self.k[i]));
        }
        worst
    }

    /// The invariant Hermitian form `H` with `E_i^† H = H F_i K_i`, `F_i^† H = H K_i⁻¹ E_i`
    /// and `K_i^† H = H K_i`,
    /// scaled so that the highest vector has norm one.
    pub fn invariant_form(&self, d: &Drinfeld) -> Result<CMat> {
        let irr = d.lie.irrep(&self.kappa);
        let n = irr.dim();
        let id = CMat::identity(n, n);
        let mut rows = CMat::zeros(3 * self.e.len() * n * n, n * n);
        for i in 0..self.e.len() {
            let pairs = [
                (self.e[i].adjoint(), &self.f[i] * &self.k[i]),
                (self.f[i].adjoint(), inv(&self.k[i])? * &self.e[i]),
                (self.k[i].adjoint(), self.k[i].clone()),
            ];
            for (k, (x, y)) in pairs.iter().enumerate() {
                // vec(X H − H Y) = (1 ⊗ X − Yᵀ ⊗ 1) vec(H), column-major.
                let blk = crate::linalg::kron(&id, x) - crate::linalg::kron(&y.transpose(), &id);
                rows.rows_mut((3 * i + k) * n * n, n * n).copy_from(&blk);
            }
        }
        let ns = nullspace(&rows, 1e-9);
        if ns.ncols() != 1 {
            return Err(Error::Singular(format!("invariant form space on V_{:?} has dimension {}", self.kappa, ns.ncols())));
        }
        let h = CMat::from_column_slice(n, n, ns.column(0).as_slice());
        let top = irr.hw_index;
        let h = &h / h[(top, top)];
        let herm = fro(&(&h - h.adjoint()));
        if herm > 1e-8 * fro(&h) {
            return Err(Error::Singular(format!("invariant form on V_{:?} is not Hermitian ({herm:.2e})", self.kappa)));
        }
        Ok((&h + h.adjoint()) * c(0.5, 0.0))
    }

    /// `u = H^{1/2}`, which makes `u E_i u⁻¹` adjoint to `u F_i K_i u⁻¹`.
    pub fn unitarizer(&self, d: &Drinfeld) -> Result<CMat> {
        herm_sqrt(&self.invariant_form(d)?)
    }
}

/// Applies `op` to the legs `[start, start+2)` of a 4-leg vector.
fn on_pair(v: &CMat, dims: &[usize], first: bool, op: impl FnOnce(&CMat) -> Result<CMat>) -> Result<(CMat, usize)> {
    let (d1, d2) = (dims[0] * dims[1], dims[2] * dims[3]);
    if first {
        let m = CMat::from_fn(d1, d2, |p, r| v[(p * d2 + r, 0)]);
        let out = op(&m)?;
        let n = out.nrows();
        Ok((CMat::from_fn(n * d2, 1, |k, _| out[(k / d2, k % d2)]), n))
    } else {
        let m = CMat::from_fn(d2, d1, |r, p| v[(p * d2 + r, 0)]);
        let out = op(&m)?;
        let n = out.nrows();
        Ok((CMat::from_fn(d1 * n, 1, |k, _| out[(k % n, k / n)]), n))
    }
}

/// Residual of the finite-level commutator identity
/// `Φ^ω Ψ^ω − Ψ^ω Φ^ω = −[λ(i)] tr^{2ω_i−α_i}` on `L(μ+2ω_i, λ) → L(μ+α_i, λ)`,
/// relative to the size of the right-hand side.
pub fn ecomm1_residual(d: &Drinfeld, g: &Cochain1, i: usize, mu: &Weight, lambda: &Weight) -> Result<f64> {
    let lie = &d.lie;
    let w = lie.rd.omega(i);
    let ai = lie.rd.simple_root(i);
    let top = sub(&scale(&w, 2), &ai);
    let gw = g.value(lie, &w)?;
    let src = Level::new(lie, &add(mu, &scale(&w, 2)), lambda)?;
    let v = col(&src.cyclic(lie));
    let muw = add(mu, &w);
    let a = psi_apply(d, i, &w, &muw, lambda, gw, &v)?;
    let t1 = phie_apply(d, i, &w, mu, &add(lambda, &ai), gw, &a)?;
    let b = phie_apply(d, i, &w, &muw, lambda, gw, &v)?;
    let t2 = psi_apply(d, i, &w, &add(mu, &ai), &sub(lambda, &ai), gw, &b)?;
    let qi = d.qpow(lie.rd.d[i] as f64);
    let rhs = tr_apply(d, &top, &add(mu, &ai), lambda, g.value(lie, &top)?, &v)? * (-qnum(lambda[i] as f64, qi));
    let scale = fro(&rhs).max(fro(&t1)).max(1e-300);
    Ok(fro(&(t1 - t2 - rhs)) / scale)
}

/// Residual of the compatibility `m Ψ = q_i^{−λ2(i)} (Ψ ⊗ ι ⊗ ι) m + (ι ⊗ ι ⊗ Ψ) m`
/// with `Ψ = Ψ^ν`, on the cyclic vector of `L(μ+η+ν, λ1+λ2−α_i)`.
pub fn empsi_residual(d: &Drinfeld, g: &Cochain1, i: usize, mu: &Weight, eta: &Weight, nu: &Weight, l1: &Weight, l2: &Weight) -> Result<f64> {
    let lie = &d.lie;
    let ai = lie.rd.simple_root(i);
    let gn = g.value(lie, nu)?;
    let lam = sub(&add(l1, l2), &ai);
    let src = Level::new(lie, &add(&add(mu, eta), nu), &lam)?;
    let v = col(&src.cyclic(lie));
    let a = psi_apply(d, i, nu, &add(mu, eta), &lam, gn, &v)?;
    let lhs = m_apply(d, mu, eta, l1, l2, &a)?;

    let l1a = sub(l1, &ai);
    let mn = add(mu, nu);
    let b = m_apply(d, &mn, eta, &l1a, l2, &v)?;
    let dims = dims_of(d, &[lie.rd.bar(&mn), add(&l1a, &mn), lie.rd.bar(eta), add(l2, eta)]);
    let (r1, _) = on_pair(&b, &dims, true, |m| psi_apply(d, i, nu, mu, &l1a, gn, m))?;
    let qi = d.qpow(lie.rd.d[i] as f64);
    let r1 = r1 * qi.powf(-(l2[i] as f64));

    let l2a = sub(l2, &ai);
    let en = add(eta, nu);
    let b = m_apply(d, mu, &en, l1, &l2a, &v)?;
    let dims = dims_of(d, &[lie.rd.bar(mu), add(l1, mu), lie.rd.bar(&en), add(&l2a, &en)]);
    let (r2, _) = on_pair(&b, &dims, false, |m| psi_apply(d, i, nu, eta, &l2a, gn, m))?;

    let scale = fro(&lhs).max(1e-300);
    Ok(fro(&(lhs - r1 - r2)) / scale)
}

/// `τ^ℏ`, or zero when the target weight is not dominant.
fn tau_h_or_zero(d: &Drinfeld, i: usize, a: &Weight, b: &Weight) -> Result<Option<CMat>> {
    let top = sub(&add(a, b), &d.lie.rd.simple_root(i));
    if check_dominant(&top).is_err() || a[i] + b[i] < 1 {
        return Ok(None);
    }
    Ok(Some(tau_h(d, i, a, b)?))
}

/// Residual of `(ι ⊗ T_{A,B}) τ^ℏ_{i;ν,A+B} = q_i^{−B(i)} Φ (τ^ℏ_{i;ν,A} ⊗ ι) T
/// + q^{(A,ν)} Φ (σ⁻¹ ⊗ ι) Φ⁻¹ (ι ⊗ τ^ℏ_{i;ν,B}) T` on `V_{A+B+ν−α_i}`.
pub fn etauc0_residual(d: &Drinfeld, i: usize, a: &Weight, b: &Weight, nu: &Weight) -> Result<f64> {
    let lie = &d.lie;
    let ai = lie.rd.simple_root(i);
    let ab = add(a, b);
    let lhs = tau_h(d, i, nu, &ab)?;
    let lhs = apply_legs(&lhs, &dims_of(d, &[nu.clone(), ab.clone()]), 1, 1, &t_map(lie, a, b), &dims_of(d, &[a.clone(), b.clone()]));
    let legs = vec![nu.clone(), a.clone(), b.clone()];
    let mut rhs = CMat::zeros(lhs.nrows(), lhs.ncols());
    if let Some(t) = tau_h_or_zero(d, i, nu, a)? {
        let mid = sub(&add(a, nu), &ai);
        let x = t_map(lie, &mid, b).as_ref().clone();
        let x = apply_legs(&x, &dims_of(d, &[mid, b.clone()]), 0, 1, &t, &dims_of(d, &[nu.clone(), a.clone()]));
        let x = d.apply_phi(&x, &legs, &Grouping::triple(0), false)?;
        rhs += x * d.qpow(-((lie.rd.d[i] * b[i]) as f64));
    }
    if let Some(t) = tau_h_or_zero(d, i, nu, b)? {
        let mid = sub(&add(b, nu), &ai);
        let x = t_map(lie, a, &mid).as_ref().clone();
        let x = apply_legs(&x, &dims_of(d, &[a.clone(), mid]), 1, 1, &t, &dims_of(d, &[nu.clone(), b.clone()]));
        let l2 = vec![a.clone(), nu.clone(), b.clone()];
        let x = d.apply_phi(&x, &l2, &Grouping::triple(0), true)?;
        let (x, l3) = d.apply_braiding(&x, &l2, 0, true);
        let x = d.apply_phi(&x, &l3, &Grouping::triple(0), false)?;
        rhs += x * d.qpow(lie.rd.inner_f(a, nu));
    }
    Ok(fro(&(&lhs - rhs)) / fro(&lhs).max(1e-300))
}

/// Residual of the two-row identity between the four `τ/T` composites
/// `V_{μ+η+ν−α_i} → V_μ ⊗ V_η ⊗ V_ν`, with `Φ = Φ(ℏt12, ℏt23)`.
pub fn etaut_residual(d: &Drinfeld, i: usize, mu: &Weight, eta: &Weight, nu: &Weight) -> Result<f64> {
    let lie = &d.lie;
    let ai = lie.rd.simple_root(i);
    let legs = vec![mu.clone(), eta.clone(), nu.clone()];
    let kappa = sub(&add(&add(mu, eta), nu), &ai);
    check_dominant(&kappa)?;
    let out_dim: usize = dims_of(d, &legs).iter().product();
    let zero = CMat::zeros(out_dim, lie.irrep(&kappa).dim());
    let me = add(mu, eta);
    let en = add(eta, nu);
    // (T ⊗ ι) τ_{μ+η,ν}
    let a1 = match tau_h_or_zero(d, i, &me, nu)? {
        Some(t) => apply_legs(&t, &dims_of(d, &[me.clone(), nu.clone()]), 0, 1, &t_map(lie, mu, eta), &dims_of(d, &[mu.clone(), eta.clone()])),
        None => zero.clone(),
    };
    // (τ_{μ,η} ⊗ ι) T
    let a2 = match tau_h_or_zero(d, i, mu, eta)? {
        Some(t) => {
            let mid = sub(&me, &ai);
            let x = t_map(lie, &mid, nu).as_ref().clone();
            apply_legs(&x, &dims_of(d, &[mid, nu.clone()]), 0, 1, &t, &dims_of(d, &[mu.clone(), eta.clone()]))
        }
        None => zero.clone(),
    };
    // (ι ⊗ T) τ_{μ,η+ν}
    let b1 = match tau_h_or_zero(d, i, mu, &en)? {
        Some(t) => apply_legs(&t, &dims_of(d, &[mu.clone(), en.clone()]), 1, 1, &t_map(lie, eta, nu), &dims_of(d, &[eta.clone(), nu.clone()])),
        None => zero.clone(),
    };
    // (ι ⊗ τ_{η,ν}) T
    let b2 = match tau_h_or_zero(d, i, eta, nu)? {
        Some(t) => {
            let mid = sub(&en, &ai);
            let x = t_map(lie, mu, &mid).as_ref().clone();
            apply_legs(&x, &dims_of(d, &[mu.clone(), mid]), 1, 1, &t, &dims_of(d, &[eta.clone(), nu.clone()]))
        }
        None => zero.clone(),
    };
    let qi = d.qpow(lie.rd.d[i] as f64);
    let n = |x: i64| qnum(x as f64, qi);
    let (m, e, v) = (mu[i], eta[i], nu[i]);
    let row1 = d.apply_phi(&(&a1 * n(e) - &a2 * n(v)), &legs, &Grouping::triple(0), false)? - &b2 * n(m + e);
    let row2 = d.apply_phi(&(&a2 * n(e + v)), &legs, &Grouping::triple(0), false)? - (&b1 * n(e) - &b2 * n(m));
    let scale = [&a1, &a2, &b1, &b2].iter().map(|x| fro(x)).fold(0.0, f64::max).max(1e-300);
    Ok(fro(&row1).max(fro(&row2)) / scale)
}

/// `F_{w_1} ⋯ F_{w_m} ξ^ℏ_λ` as a vector of `V_λ`: the composite of `Ψ^{ω}` maps
/// evaluated on the cyclic vector. Zero if an intermediate truncation vanishes.
pub fn fword_vector(d: &Drinfeld, g: &Cochain1, lambda: &Weight, word: &[usize]) -> Result<CVec> {
    let lie = &d.lie;
    let dim = lie.irrep(lambda).dim();
    let mut level = lie.rd.zero();
    let mut lam = lambda.clone();
    for &i in word {
        level = add(&level, &lie.rd.omega(i));
        lam = sub(&lam, &lie.rd.simple_root(i));
    }
    if check_dominant(&add(&lam, &level)).is_err() || lie.irrep(lambda).module.indices_of_weight(&lam).is_empty() {
        return Ok(CVec::zeros(dim));
    }
    let mut v = col(&Level::new(lie, &level, &lam)?.cyclic(lie));
    for &i in word {
        let w = lie.rd.omega(i);
        let next = sub(&level, &w);
        let up = add(&lam, &lie.rd.simple_root(i));
        if check_dominant(&add(&up, &next)).is_err() {
            return Ok(CVec::zeros(dim));
        }
        v = psi_apply(d, i, &w, &next, &lam, g.value(lie, &w)?, &v)?;
        level = next;
        lam = up;
    }
    Ok(v.column(0).into_owned())
}

fn words(rank: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out.into_iter().flat_map(|w| (0..rank).map(move |i| [w.clone(), vec![i]].concat())).collect();
    }
    out
}

/// Ranks of the `F`-word vectors per weight of `V_λ`.
#[derive(Clone, Debug)]
pub struct IrreducibilityReport {
    pub lambda: Weight,
    pub ranks: BTreeMap<Weight, usize>,
    pub total: usize,
    pub expected: usize,
}

impl IrreducibilityReport {
    pub fn pass(&self) -> bool {
        self.total == self.expected
    }
}

pub fn irreducibility_check(d: &Drinfeld, g: &Cochain1, lambda: &Weight) -> Result<IrreducibilityReport> {
    let lie = &d.lie;
    let depth = lie.rd.root_coords(&sub(lambda, &lie.rd.w0(lambda))).map(|v| v.iter().sum::<i64>()).unwrap_or(0) as usize;
    let irr = lie.irrep(lambda);
    let mut by_weight: BTreeMap<Weight, Vec<CVec>> = BTreeMap::new();
    for len in 0..=depth {
        for w in words(lie.rank(), len) {
            let mut wt = lambda.clone();
            for &i in &w {
                wt = sub(&wt, &lie.rd.simple_root(i));
            }
            if irr.module.indices_of_weight(&wt).is_empty() {
                continue;
            }
            by_weight.entry(wt).or_default().push(fword_vector(d, g, lambda, &w)?);
        }
    }
    let mut ranks = BTreeMap::new();
    for (wt, vs) in by_weight {
        let m = CMat::from_fn(vs[0].len(), vs.len(), |r, k| vs[k][r]);
        let s = singular_values(&m);
        let top = s.first().copied().unwrap_or(0.0);
        ranks.insert(wt, s.iter().filter(|&&x| top > 0.0 && x > 1e-8 * top).count());
    }
    let total = ranks.values().sum();
    Ok(IrreducibilityReport { lambda: lambda.clone(), ranks, total, expected: irr.dim() })
}

/// `‖Σ_k (−1)^k [1−a_ij choose k]_{q_i} F_i^k F_j F_i^{1−a_ij−k} ξ^ℏ_λ‖` relative to the
/// largest term; zero when every term vanishes by grading.
pub fn serre_residual(d: &Drinfeld, g: &Cochain1, lambda: &Weight, i: usize, j: usize) -> Result<f64> {
    let lie = &d.lie;
    let qc = QContext::new(d)?;
    let nmax = 1 - lie.rd.simple_root(j)[i];
    let mut total = CVec::zeros(lie.irrep(lambda).dim());
    let mut scale: f64 = 0.0;
    for k in 0..=nmax {
        let mut w = vec![i; k as usize];
        w.push(j);
        w.extend(vec![i; (nmax - k) as usize]);
        let v = fword_vector(d, g, lambda, &w)? * qc.qbinom(nmax, k, i);
        scale = scale.max(v.norm());
        if k % 2 == 0 {
            total += v;
        } else {
            total -= v;
        }
    }
    Ok(if scale == 0.0 { 0.0 } else { total.norm() / scale })
}

/// `‖R_F(ζ_λ̄ ⊗ ξ_μ) − q^{−(λ,μ)} ζ_λ̄ ⊗ ξ_μ‖` for `R_F = F_{21} q^t F⁻¹`.
pub fn rmatrix_residual(d: &Drinfeld, f: &NatElement2, lambda: &Weight, mu: &Weight) -> Result<f64> {
    let lie = &d.lie;
    let lb = lie.rd.bar(lambda);
    let r = f.twisted_r(d, &lb, mu)?;
    let z = lie.irrep(&lb).lowest.map(|x| c(x, 0.0));
    let x = lie.irrep(mu).highest().map(|x| c(x, 0.0));
    let v = kron_vec(&z, &x);
    let want = &v * d.qpow(-lie.rd.inner_f(lambda, mu));
    Ok((r * v - want).norm())
}

/// Singular value range of `f ⊗ g ↦ (f ⊗ g) m^ℏ` on each weight `λ` of `V ⊗ W`.
#[derive(Clone, Debug)]
pub struct TensorReport {
    pub level: usize,
    pub sigma_min: f64,
    pub cond: f64,
    pub square: bool,
}

pub fn tensor_structure_invertibility(d: &Drinfeld, mu_reg: &Weight, v: &Weight, w: &Weight) -> Result<TensorReport> {
    let lie = &d.lie;
    let (iv, iw) = (lie.irrep(v), lie.irrep(w));
    let lv = distinct_weights(&iv.module.weights);
    let lw = distinct_weights(&iw.module.weights);
    let fits = |n: usize, lam: &Weight, kappa: &Weight| -> bool {
        let a = scale(mu_reg, n as i64);
        Level::new(lie, &a, lam).map(|l| l.decomp(lie).multiplicity(kappa) == lie.irrep(kappa).module.indices_of_weight(lam).len()).unwrap_or(false)
    };
    let mut n = 0;
    while !(lv.iter().all(|l| fits(n, l, v)) && lw.iter().all(|l| fits(n, l, w))) {
        n += 1;
        if n > 16 {
            return Err(Error::OutOfSupport(v.clone()));
        }
    }
    let a = scale(mu_reg, n as i64);
    let (dv, dw) = (iv.dim(), iw.dim());
    let mut by_lambda: BTreeMap<Weight, Vec<(usize, CVec)>> = BTreeMap::new();
    for l1 in &lv {
        let e1 = Level::new(lie, &a, l1)?.decomp(lie).parts[v].clone();
        for l2 in &lw {
            let e2 = Level::new(lie, &a, l2)?.decomp(lie).parts[w].clone();
            let lam = add(l1, l2);
            let src = Level::new(lie, &scale(&a, 2), &lam)?;
            let x = m_apply(d, &a, &a, l1, l2, &col(&src.cyclic(lie)))?;
            let dims4 = dims_of(d, &[lie.rd.bar(&a), add(l1, &a), lie.rd.bar(&a), add(l2, &a)]);
            for ea in &e1 {
                let xa = apply_legs(&x, &dims4, 0, 2, &ea.adjoint(), &[dv]);
                for eb in &e2 {
                    let h = apply_legs(&xa, &[dv, dims4[2], dims4[3]], 1, 2, &eb.adjoint(), &[dw]);
                    by_lambda.entry(lam.clone()).or_default().push((0, h.column(0).into_owned()));
                }
            }
        }
    }
    let space = crate::tensor::space(lie, &[v.clone(), w.clone()]);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut square = true;
    for (lam, cols) in by_lambda {
        let idx = space.indices_of_weight(&lam);
        let m = CMat::from_fn(idx.len(), cols.len(), |r, k| cols[k].1[idx[r]]);
        square &= m.nrows() == m.ncols();
        let s = singular_values(&m);
        lo = lo.min(s.iter().cloned().fold(f64::INFINITY, f64::min));
        hi = hi.max(s.first().copied().unwrap_or(0.0));
    }
    Ok(TensorReport { level: n, sigma_min: lo, cond: hi / lo, square })
}

/// Gauges `F` by the unitarizers of the generator action and takes the unitary part.
pub fn unitarized_twist(b: &TwistBuilder, f: &NatElement2) -> Result<NatElement2> {
    let d = b.d;
    let mut cache: BTreeMap<Weight, CMat> = BTreeMap::new();
    for (a, bb) in f.blocks.keys() {
        for kappa in decomposition(&d.lie, &[a.clone(), bb.clone()]).parts.keys().chain([a, bb]) {
            if !cache.contains_key(kappa) {
                let u = if kappa.iter().all(|&x| x == 0) {
                    CMat::identity(1, 1)
                } else {
                    generator_action(b, kappa)?.unitarizer(d)?
                };
                cache.insert(kappa.clone(), u);
            }
        }
    }
    f.unitarize(&d.lie, &|k| cache.get(k).cloned().ok_or_else(|| Error::OutOfSupport(k.clone())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartan::Algebra;
    use crate::kzode::KzOptions;
    use crate::repr::Lie;
    use crate::twistbuild::{cochain_targets, normalized_cochain};

    fn drin(alg: Algebra, h: C64) -> Drinfeld {
        Drinfeld::new(Lie::shared(alg), h, KzOptions::default())
    }

    fn cochain(d: &Drinfeld, support: &[Weight], mu_reg: &Weight) -> Cochain1 {
        let t = cochain_targets(&d.lie, mu_reg, support);
        normalized_cochain(d, &vec![one(); d.lie.rank()], &t).unwrap()
    }

    #[test]
    fn q_arithmetic() {
        let d = drin(Algebra::A1, c(0.0, 0.35));
        let qc = QContext::new(&d).unwrap();
        let q = qc.qi[0];
        assert!((qc.qnum(1, 0) - one()).norm() < 1e-14);
        assert!((qc.qnum(2, 0) - (q + q.inv())).norm() < 1e-14);
        assert!((qc.qbinom(2, 1, 0) - qc.qnum(2, 0)).norm() < 1e-14);
        assert!(QContext::new(&drin(Algebra::A1, c(0.5, 0.0))).is_err());
        assert!(QContext::new(&drin(Algebra::A1, c(0.0, 0.0))).is_ok());
    }

    #[test]
    fn etaut_on_a1() {
        let d = drin(Algebra::A1, c(0.0, 0.35));
        let w = vec![1];
        let r = etaut_residual(&d, 0, &w, &w, &w).unwrap();
        assert!(r < 1e-8, "{r}");
    }

    #[test]
    fn etauc0_on_a1() {
        let d = drin(Algebra::A1, c(0.0, 0.35));
        for (a, b, nu) in [(vec![1], vec![1], vec![1]), (vec![1], vec![2], vec![1]), (vec![2], vec![1], vec![1])] {
            let r = etauc0_residual(&d, 0, &a, &b, &nu).unwrap();
            assert!(r < 1e-7, "{a:?} {b:?} {nu:?}: {r}");
        }
    }

    #[test]
    fn ecomm1_on_a1() {
        let d = drin(Algebra::A1, c(0.0, 0.35));
        let mu_reg = vec![1];
        let g = cochain(&d, &[vec![2], vec![3]], &mu_reg);
        for (mu, lam) in [(vec![0], vec![0]), (vec![0], vec![1]), (vec![1], vec![1]), (vec![1], vec![-1])] {
            let r = ecomm1_residual(&d, &g, 0, &mu, &lam).unwrap();
            assert!(r < 1e-8, "{mu:?} {lam:?}: {r}");
        }
    }

    #[test]
    fn empsi_on_a1() {
        let d = drin(Algebra::A1, c(0.0, 0.35));
        let g = cochain(&d, &[vec![2]], &vec![1]);
        let w = vec![1];
        let r = empsi_residual(&d, &g, 0, &w, &w, &w, &vec![0], &vec![0]).unwrap();
        assert!(r < 1e-7, "{r}");
    }

    #[test]
    fn generator_action_relations_a1() {
        let d = drin(Algebra::A1, c(0.0, 0.35));
        let mu_reg = vec![1];
        let g = cochain(&d, &[vec![4]], &mu_reg);
        let b = TwistBuilder::new(&d, g, mu_reg, 1);
        for k in 1..=3 {
            let act = generator_action(&b, &vec![k]).unwrap();
            let r = act.commutator_residual(&d);
            assert!(r < 1e-7, "V_{k}: {r}");
            assert!(act.kek_residual(&d).unwrap() < 1e-12);
            assert!(act.highest_residual(&d) < 1e-12);
        }
    }

    #[test]
    fn classical_action_is_chevalley() {
        let d = drin(Algebra::A1, c(0.0, 0.0));
        let mu_reg = vec![1];
        let b = TwistBuilder::new(&d, cochain(&d, &[vec![3]], &mu_reg), mu_reg, 1);
        for k in 1..=3 {
            let act = generator_action(&b, &vec![k]).unwrap();
            assert!(act.classical_deviation(&d) < 1e-10);
            assert!(crate::linalg::dist_id(&act.invariant_form(&d).unwrap()) < 1e-10);
        }
    }

    #[test]
    fn k_spectrum_on_adjoint() {
        let d = drin(Algebra::A1, c(0.0, 0.35));
        let mu_reg = vec![1];
        let b = TwistBuilder::new(&d, cochain(&d, &[vec![2]], &mu_reg), mu_reg, 1);
        let act = generator_action(&b, &vec![2]).unwrap();
        let q = d.q();
        let mut got: Vec<C64> = act.k[0].diagonal().iter().cloned().collect();
        got.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap());
        let mut want = [q * q, one(), q.inv() * q.inv()];
        want.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap());
        for (x, y) in got.iter().zip(want.iter()) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn cochain_change_rescales_e_only() {
        let d = drin(Algebra::A1, c(0.0, 0.35));
        let mu_reg = vec![1];
        let g = cochain(&d, &[vec![2]], &mu_reg);
        let mut h = g.clone();
        h.char_log[0] += c(0.3, 0.2);
        let chi = h.char_correction()[0] / g.char_correction()[0];
        let a = generator_action(&TwistBuilder::new(&d, g, mu_reg.clone(), 1), &vec![2]).unwrap();
        let b = generator_action(&TwistBuilder::new(&d, h, mu_reg, 1), &vec![2]).unwrap();
        assert!(fro(&(&a.f[0] - &b.f[0])) < 1e-10 * fro(&a.f[0]));
        assert!(fro(&(&a.e[0] * chi - &b.e[0])) < 1e-10 * fro(&a.e[0]));
    }

    #[test]
    fn irreducible_images() {
        let d = drin(Algebra::A1, c(0.0, 0.35));
        let g = cochain(&d, &[vec![1]], &vec![1]);
        for k in 0..=3 {
            let r = irreducibility_check(&d, &g, &vec![k]).unwrap();
            assert!(r.pass(), "{r:?}");
        }
        let d = drin(Algebra::A2, c(0.0, 0.35));
        let g = cochain(&d, &[], &vec![1, 1]);
        for l in [vec![1, 0], vec![0, 1]] {
            let r = irreducibility_check(&d, &g, &l).unwrap();
            assert!(r.pass(), "{r:?}");
        }
    }

    #[test]
    fn serre_on_a2() {
        let d = drin(Algebra::A2, c(0.0, 0.35));
        let g = cochain(&d, &[], &vec![1, 1]);
        for l in [vec![1, 0], vec![1, 1]] {
            for (i, j) in [(0, 1), (1, 0)] {
                let r = serre_residual(&d, &g, &l, i, j).unwrap();
                assert!(r < 1e-6, "{l:?} {i}{j}: {r}");
            }
        }
    }

    #[test]
    fn tensor_structure_is_invertible() {
        let d = drin(Algebra::A1, c(0.0, 0.35));
        let r = tensor_structure_invertibility(&d, &vec![1], &vec![1], &vec![1]).unwrap();
        assert!(r.square && r.sigma_min > 1e-6, "{r:?}");
        let d = drin(Algebra::A1, c(0.0, 0.0));
        let r = tensor_structure_invertibility(&d, &vec![1], &vec![1], &vec![2]).unwrap();
        assert!(r.square && r.cond < 10.0, "{r:?}");
    }

    #[test]
    fn r_matrix_and_unitarization() {
        let d = drin(Algebra::A1, c(0.0, 0.35));
        let mu_reg = vec![1];
        let support: Vec<Weight> = (0..=4).map(|k| vec![k]).collect();
        let b = TwistBuilder::new(&d, cochain(&d, &support, &mu_reg), mu_reg, 1);
        let pairs: Vec<Weight> = (0..=2).map(|k| vec![k]).collect();
        let f = b.build(&pairs).unwrap();
        assert!(rmatrix_residual(&d, &f, &vec![1], &vec![1]).unwrap() < 1e-7);
        assert!(rmatrix_residual(&d, &f, &vec![1], &vec![2]).unwrap() < 1e-7);
        assert!(rmatrix_residual(&d, &f, &vec![0], &vec![2]).unwrap() < 1e-12);
        let u = unitarized_twist(&b, &f).unwrap();
        assert!(u.is_unitary_residual() < 1e-10);
        assert!(u.r_star_residual(&d, &vec![1], &vec![2]).unwrap() < 1e-8);
    }
}
