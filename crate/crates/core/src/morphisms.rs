use crate::cartan::{add, sub, Weight};
use crate::hyper::rgamma;
use crate::linalg::{c, fro, kron_vec, rnullspace, rkron, to_c, CMat, CVec, RMat, C64};
use crate::repr::Lie;
use crate::tensor::{apply_legs, check_dominant, decomposition, space, Decomp, Drinfeld, Grouping};
use crate::{Error, Result};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Linear map between tensor products of irreducible modules.
#[derive(Clone, Debug)]
pub struct Morphism {
    pub source: Vec<Weight>,
    pub target: Vec<Weight>,
    pub mat: CMat,
}

impl Morphism {
    /// `max_i ‖x_V M − M x_U‖` over the Chevalley generators.
    pub fn equivariance_defect(&self, lie: &Lie) -> f64 {
        let s = space(lie, &self.source);
        let t = space(lie, &self.target);
        let id = CMat::identity(s.dim, s.dim);
        let mut worst: f64 = 0.0;
        for i in 0..lie.rank() {
            for raising in [true, false] {
                let xs = s.act(raising, i, &id);
                let lhs = t.act(raising, i, &self.mat);
                worst = worst.max(fro(&(lhs - &self.mat * xs)));
            }
        }
        worst
    }
}

fn dense_generators(lie: &Lie, legs: &[Weight]) -> Vec<RMat> {
    let sp = space(lie, legs);
    let id = CMat::identity(sp.dim, sp.dim);
    let mut out = Vec::new();
    for i in 0..lie.rank() {
        for raising in [true, false] {
            out.push(sp.act(raising, i, &id).map(|z| z.re));
        }
    }
    out
}

/// Frobenius-orthonormal basis of `Hom_g(U, V)`, each element a `dim V × dim U` matrix.
pub fn hom_space(lie: &Lie, source: &[Weight], target: &[Weight]) -> Vec<Morphism> {
    let xu = dense_generators(lie, source);
    let xv = dense_generators(lie, target);
    let (du, dv) = (xu[0].nrows(), xv[0].nrows());
    let mut rows = RMat::zeros(xu.len() * du * dv, du * dv);
    for (k, (a, b)) in xu.iter().zip(&xv).enumerate() {
        // vec(X_V M − M X_U) = (1 ⊗ X_V − X_Uᵀ ⊗ 1) vec(M), column-major.
        let blk = rkron(&RMat::identity(du, du), b) - rkron(&a.transpose(), &RMat::identity(dv, dv));
        rows.rows_mut(k * du * dv, du * dv).copy_from(&blk);
    }
    let ns = rnullspace(&rows, 1e-9);
    (0..ns.ncols())
        .map(|k| Morphism {
            source: source.to_vec(),
            target: target.to_vec(),
            mat: to_c(&RMat::from_column_slice(dv, du, ns.column(k).as_slice())),
        })
        .collect()
}

type MapKey = (crate::cartan::Algebra, u8, Vec<Weight>, usize);

fn cached(lie: &Lie, tag: u8, ws: &[Weight], i: usize, build: impl FnOnce() -> CMat) -> Arc<CMat> {
    static CACHE: OnceLock<Mutex<HashMap<MapKey, Arc<CMat>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (lie.rd.algebra, tag, ws.to_vec(), i);
    if let Some(m) = cache.lock().unwrap().get(&key) {
        return m.clone();
    }
    let m = Arc::new(build());
    cache.lock().unwrap().insert(key, m.clone());
    m
}

/// Highest vector `ξ_a ⊗ ξ_b` of `V_a ⊗ V_b`.
fn top_vector(lie: &Lie, a: &Weight, b: &Weight) -> CVec {
    let x = lie.irrep(a).highest().map(|x| c(x, 0.0));
    let y = lie.irrep(b).highest().map(|x| c(x, 0.0));
    kron_vec(&x, &y)
}

/// `T_{μ,η}: V_{μ+η} → V_μ ⊗ V_η`, `ξ ↦ ξ ⊗ ξ`.
pub fn t_map(lie: &Lie, mu: &Weight, eta: &Weight) -> Arc<CMat> {
    cached(lie, 0, &[mu.clone(), eta.clone()], 0, || {
        let legs = [mu.clone(), eta.clone()];
        let sp = space(lie, &legs);
        sp.embedding(lie, &add(mu, eta), &top_vector(lie, mu, eta))
    })
}

/// `ζ_η̄ ⊗ ξ_η ∈ V_η̄ ⊗ V_η`.
pub fn pair_vector(lie: &Lie, eta: &Weight) -> CVec {
    let bar = lie.rd.bar(eta);
    let z = lie.irrep(&bar).lowest.map(|x| c(x, 0.0));
    let x = lie.irrep(eta).highest().map(|x| c(x, 0.0));
    kron_vec(&z, &x)
}

/// `S_η: V_η̄ ⊗ V_η → C`, normalized by `S_η(ζ ⊗ ξ) = 1`, as a `1 × dim` row.
pub fn s_map(lie: &Lie, eta: &Weight) -> Arc<CMat> {
    cached(lie, 1, &[eta.clone()], 0, || {
        let legs = [lie.rd.bar(eta), eta.clone()];
        let sp = space(lie, &legs);
        let u = sp.highest_vectors(lie, &vec![0; lie.rank()]);
        assert_eq!(u.ncols(), 1, "V_η̄ ⊗ V_η has a unique invariant");
        let row = to_c(&u.transpose());
        let norm = (&row * pair_vector(lie, eta))[(0, 0)];
        row / norm
    })
}

/// `τ_{i;μ,η}: V_{μ+η−α_i} → V_μ ⊗ V_η`, `ξ ↦ μ(i) ξ ⊗ f_iξ − η(i) f_iξ ⊗ ξ`.
/// Zero when that vector vanishes.
pub fn tau(lie: &Lie, i: usize, mu: &Weight, eta: &Weight) -> Result<Arc<CMat>> {
    check_dominant(mu)?;
    check_dominant(eta)?;
    let kappa = sub(&add(mu, eta), &lie.rd.simple_root(i));
    if mu[i] + eta[i] < 1 {
        return Err(Error::Invalid(format!("τ needs μ(i) + η(i) ≥ 1, got {mu:?}, {eta:?}")));
    }
    check_dominant(&kappa)?;
    Ok(cached(lie, 2, &[mu.clone(), eta.clone()], i, || {
        let legs = [mu.clone(), eta.clone()];
        let sp = space(lie, &legs);
        let top = CMat::from_column_slice(sp.dim, 1, top_vector(lie, mu, eta).as_slice());
        // f_i on each leg separately via the coproduct split.
        let left = apply_legs(&top, &sp.dims, 0, 1, &to_c(&lie.irrep(mu).module.f[i]), &sp.dims[..1]);
        let right = apply_legs(&top, &sp.dims, 1, 1, &to_c(&lie.irrep(eta).module.f[i]), &sp.dims[1..]);
        let x = right * c(mu[i] as f64, 0.0) - left * c(eta[i] as f64, 0.0);
        if fro(&x) == 0.0 {
            CMat::zeros(sp.dim, lie.irrep(&kappa).dim())
        } else {
            sp.embedding(lie, &kappa, &x.column(0).into_owned())
        }
    }))
}

/// `Γ(1 + ℏd_iμ(i)) Γ(1 + ℏd_iη(i)) Γ(1 − ℏd_i(μ(i) + η(i)))` inverted.
pub fn tau_h_factor(hbar: C64, di: i64, mi: i64, ei: i64) -> Result<C64> {
    let h = hbar * di as f64;
    let one = c(1.0, 0.0);
    let args = [one + h * mi as f64, one + h * ei as f64, one - h * (mi + ei) as f64];
    for z in args {
        if (z.re - z.re.round()).abs() < 1e-12 && z.im.abs() < 1e-12 && z.re.round() <= 0.0 {
            return Err(Error::Resonance(format!("Γ pole at {z}")));
        }
    }
    Ok(args.iter().map(|&z| rgamma(z)).product())
}

/// `τ^ℏ_{i;μ,η}`.
pub fn tau_h(d: &Drinfeld, i: usize, mu: &Weight, eta: &Weight) -> Result<CMat> {
    let f = tau_h_factor(d.hbar, d.lie.rd.d[i], mu[i], eta[i])?;
    Ok(tau(&d.lie, i, mu, eta)?.as_ref() * f)
}

/// `[n]_x = (xⁿ − x⁻ⁿ)/(x − x⁻¹)`, with the classical limit `n`.
pub fn qnum(n: f64, x: C64) -> C64 {
    let den = x - x.inv();
    if den.norm() < 1e-13 {
        return c(n, 0.0);
    }
    (x.powf(n) - x.powf(-n)) / den
}

/// The truncation `L(a, λ) = V_ā ⊗ V_{λ+a}` of the Verma module `M_λ`,
/// cyclic on `ζ_ā ⊗ ξ_{λ+a}`.
#[derive(Clone, Debug)]
pub struct Level {
    pub level: Weight,
    pub lambda: Weight,
    pub legs: Vec<Weight>,
}

impl Level {
    pub fn new(lie: &Lie, a: &Weight, lambda: &Weight) -> Result<Level> {
        check_dominant(a)?;
        let top = add(lambda, a);
        check_dominant(&top)?;
        Ok(Level { level: a.clone(), lambda: lambda.clone(), legs: vec![lie.rd.bar(a), top] })
    }

    pub fn dim(&self, lie: &Lie) -> usize {
        space(lie, &self.legs).dim
    }

    pub fn cyclic(&self, lie: &Lie) -> CVec {
        let z = lie.irrep(&self.legs[0]).lowest.map(|x| c(x, 0.0));
        let x = lie.irrep(&self.legs[1]).highest().map(|x| c(x, 0.0));
        kron_vec(&z, &x)
    }

    pub fn decomp(&self, lie: &Lie) -> Arc<Decomp> {
        decomposition(lie, &self.legs)
    }

    /// Columns `ι_a^† c` for the `κ` components.
    pub fn y(&self, lie: &Lie, kappa: &Weight) -> CMat {
        self.decomp(lie).project(kappa, &self.cyclic(lie))
    }
}

fn dims_of(lie: &Lie, legs: &[Weight]) -> Vec<usize> {
    legs.iter().map(|l| lie.irrep(l).dim()).collect()
}

/// Shared tail `(ι ⊗ S_η ⊗ ι) B (op ⊗ ι ⊗ ι)` on `V_X ⊗ V_η ⊗ V_b`, where `op: V_X → V_m̄ ⊗ V_η̄`.
fn contract_tail(d: &Drinfeld, v: &CMat, x: &Weight, eta: &Weight, b: &Weight, op: &CMat, mbar: &Weight) -> Result<CMat> {
    let lie = &d.lie;
    let etabar = lie.rd.bar(eta);
    let legs3 = vec![x.clone(), eta.clone(), b.clone()];
    let v = d.apply_phi(v, &legs3, &Grouping::triple(0), true)?;
    let legs4 = vec![mbar.clone(), etabar, eta.clone(), b.clone()];
    let dims4 = dims_of(lie, &legs4);
    let v = apply_legs(&v, &dims_of(lie, &legs3), 0, 1, op, &dims4[..2]);
    let v = d.apply_phi(&v, &legs4, &Grouping::triple(0), false)?;
    Ok(apply_legs(&v, &dims4, 1, 2, &s_map(lie, eta), &[]))
}

/// `tr^{η,ℏ}_{μ,λ+μ}: L(μ+η, λ) → L(μ, λ)` on the columns of `v`, with the
/// contraction scaled by `g_η`.
pub fn tr_apply(d: &Drinfeld, eta: &Weight, mu: &Weight, lambda: &Weight, g_eta: C64, v: &CMat) -> Result<CMat> {
    let lie = &d.lie;
    let src = Level::new(lie, &add(mu, eta), lambda)?;
    Level::new(lie, mu, lambda)?;
    let b = add(lambda, mu);
    let x = src.legs[0].clone();
    let dims2 = dims_of(lie, &src.legs);
    let v = apply_legs(v, &dims2, 1, 1, &t_map(lie, eta, &b), &[lie.irrep(eta).dim(), lie.irrep(&b).dim()]);
    let mbar = lie.rd.bar(mu);
    let op = t_map(lie, &mbar, &lie.rd.bar(eta));
    Ok(contract_tail(d, &v, &x, eta, &b, &op, &mbar)? * g_eta)
}

/// `Ψ^η_{i;μ,λ+α_i+μ}: L(μ+η, λ) → L(μ, λ+α_i)`, the action of `F_i`.
pub fn psi_apply(d: &Drinfeld, i: usize, eta: &Weight, mu: &Weight, lambda: &Weight, g_eta: C64, v: &CMat) -> Result<CMat> {
    let lie = &d.lie;
    if eta[i] < 1 {
        return Err(Error::Invalid(format!("Ψ needs η(i) ≥ 1, got {eta:?}")));
    }
    let src = Level::new(lie, &add(mu, eta), lambda)?;
    let b = add(&add(lambda, &lie.rd.simple_root(i)), mu);
    let tgt = Level::new(lie, mu, &add(lambda, &lie.rd.simple_root(i)))?;
    let dims_t = dims_of(lie, &tgt.legs);
    if b[i] == 0 {
        return Ok(CMat::zeros(dims_t.iter().product(), v.ncols()));
    }
    let qn = qnum(eta[i] as f64, d.qpow(lie.rd.d[i] as f64));
    if qn.norm() < 1e-13 {
        return Err(Error::Resonance(format!("[{}]_q vanishes", eta[i])));
    }
    let x = src.legs[0].clone();
    let th = tau_h(d, i, eta, &b)?;
    let v = apply_legs(v, &dims_of(lie, &src.legs), 1, 1, &th, &[lie.irrep(eta).dim(), lie.irrep(&b).dim()]);
    let mbar = lie.rd.bar(mu);
    let op = t_map(lie, &mbar, &lie.rd.bar(eta));
    Ok(contract_tail(d, &v, &x, eta, &b, &op, &mbar)? * (g_eta / qn))
}

/// `Φ^η_{i;μ+α_i,λ+μ}: L(μ+η, λ) → L(μ+α_i, λ−α_i)`, the action of `E_i`.
pub fn phie_apply(d: &Drinfeld, i: usize, eta: &Weight, mu: &Weight, lambda: &Weight, g_eta: C64, v: &CMat) -> Result<CMat> {
    let lie = &d.lie;
    if eta[i] < 1 {
        return Err(Error::Invalid(format!("Φ needs η(i) ≥ 1, got {eta:?}")));
    }
    let ai = lie.rd.simple_root(i);
    let src = Level::new(lie, &add(mu, eta), lambda)?;
    let tgt = Level::new(lie, &add(mu, &ai), &sub(lambda, &ai))?;
    let qn = qnum(eta[i] as f64, d.qpow(lie.rd.d[i] as f64));
    if qn.norm() < 1e-13 {
        return Err(Error::Resonance(format!("[{}]_q vanishes", eta[i])));
    }
    let b = add(lambda, mu);
    let x = src.legs[0].clone();
    let v = apply_legs(v, &dims_of(lie, &src.legs), 1, 1, &t_map(lie, eta, &b), &[lie.irrep(eta).dim(), lie.irrep(&b).dim()]);
    let mbar = tgt.legs[0].clone();
    let ib = lie.rd.bar_index(i);
    let op = tau_h(d, ib, &mbar, &lie.rd.bar(eta))?;
    Ok(contract_tail(d, &v, &x, eta, &b, &op, &mbar)? * (g_eta / qn))
}

/// `m^ℏ_{μ,η,λ1,λ2}: L(μ+η, λ1+λ2) → L(μ, λ1) ⊗ L(η, λ2)`; the output legs are
/// `[μ̄, λ1+μ, η̄, λ2+η]`.
pub fn m_apply(d: &Drinfeld, mu: &Weight, eta: &Weight, l1: &Weight, l2: &Weight, v: &CMat) -> Result<CMat> {
    let lie = &d.lie;
    let src = Level::new(lie, &add(mu, eta), &add(l1, l2))?;
    Level::new(lie, mu, l1)?;
    Level::new(lie, eta, l2)?;
    let (cw, dw) = (add(l1, mu), add(l2, eta));
    let (mbar, ebar) = (lie.rd.bar(mu), lie.rd.bar(eta));
    let x = src.legs[0].clone();
    let v = apply_legs(v, &dims_of(lie, &src.legs), 1, 1, &t_map(lie, &cw, &dw), &[lie.irrep(&cw).dim(), lie.irrep(&dw).dim()]);
    let legs3 = vec![x.clone(), cw.clone(), dw.clone()];
    let v = d.apply_phi(&v, &legs3, &Grouping::triple(0), true)?;
    let legs4 = vec![mbar.clone(), ebar.clone(), cw.clone(), dw.clone()];
    let dims4 = dims_of(lie, &legs4);
    let v = apply_legs(&v, &dims_of(lie, &legs3), 0, 1, &t_map(lie, &mbar, &ebar), &dims4[..2]);
    let v = d.apply_phi(&v, &legs4, &Grouping::triple(0), false)?;
    let (v, legs4) = d.apply_braiding(&v, &legs4, 1, false);
    let v = d.apply_phi(&v, &legs4, &Grouping::triple(0), true)?;
    let v = d.apply_phi(&v, &legs4, &Grouping::new(0, 4, 2, 3), false)?;
    Ok(v * d.qpow(lie.rd.inner_f(&cw, eta)))
}
