use crate::cartan::{add, q_to_f64, scale, sub, Algebra, Weight};
use crate::linalg::{c, inv, nullspace, pinv, polar, rank, singular_values, CMat, CVec, C64};
use crate::natcalc::NatElement2;
use crate::morphisms::{m_apply, qnum, s_map, tau_h, tr_apply, Level};
use crate::repr::Lie;
use crate::tensor::{apply_legs, Drinfeld, Grouping};
use crate::{Error, Result};
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

fn col(v: &CVec) -> CMat {
    CMat::from_column_slice(v.len(), 1, v.as_slice())
}

/// `g^ℏ_{μ,η}`: the scalar `S_μ tr^{η,ℏ}_{μ,μ}(ζ ⊗ ξ)` with `g_η = 1`.
pub fn cocycle(d: &Drinfeld, mu: &Weight, eta: &Weight) -> Result<C64> {
    let zero = d.lie.rd.zero();
    let src = Level::new(&d.lie, &add(mu, eta), &zero)?;
    let v = tr_apply(d, eta, mu, &zero, c(1.0, 0.0), &col(&src.cyclic(&d.lie)))?;
    let g = (s_map(&d.lie, mu).as_ref() * v)[(0, 0)];
    if g.norm() < 1e-12 {
        return Err(Error::Resonance(format!("non-generic ℏ: g_{{{mu:?},{eta:?}}} vanishes")));
    }
    Ok(g)
}

/// Values of a symmetric normalized 2-cocycle on pairs of dominant weights.
#[derive(Clone, Debug)]
pub struct Cocycle2 {
    pub values: BTreeMap<(Weight, Weight), C64>,
}

impl Cocycle2 {
    pub fn on_support(d: &Drinfeld, support: &[Weight]) -> Result<Cocycle2> {
        let mut values = BTreeMap::new();
        for mu in support {
            for eta in support {
                values.insert((mu.clone(), eta.clone()), cocycle(d, mu, eta)?);
            }
        }
        Ok(Cocycle2 { values })
    }

    pub fn get(&self, mu: &Weight, eta: &Weight) -> Option<C64> {
        self.values.get(&(mu.clone(), eta.clone())).copied()
    }

    pub fn symmetry_residual(&self) -> f64 {
        self.values
            .iter()
            .filter_map(|((m, e), v)| self.get(e, m).map(|w| (v - w).norm()))
            .fold(0.0, f64::max)
    }

    pub fn normalization_residual(&self) -> f64 {
        self.values
            .iter()
            .filter(|((m, e), _)| m.iter().all(|&x| x == 0) || e.iter().all(|&x| x == 0))
            .map(|(_, v)| (v - c(1.0, 0.0)).norm())
            .fold(0.0, f64::max)
    }

    /// `max |g_{λ+μ,η} g_{λ,μ} − g_{λ,μ+η} g_{μ,η}|` over triples inside the table.
    pub fn cocycle_residual(&self) -> f64 {
        let keys: Vec<Weight> = self.values.keys().map(|(m, _)| m.clone()).collect();
        let mut worst: f64 = 0.0;
        for l in &keys {
            for m in &keys {
                for e in &keys {
                    let (Some(a), Some(b), Some(x), Some(y)) =
                        (self.get(&add(l, m), e), self.get(l, m), self.get(l, &add(m, e)), self.get(m, e))
                    else {
                        continue;
                    };
                    worst = worst.max((a * b - x * y).norm());
                }
            }
        }
        worst
    }

    /// Largest deviation from 1, for the classical limit.
    pub fn deviation_from_one(&self) -> f64 {
        self.values.values().map(|v| (v - c(1.0, 0.0)).norm()).fold(0.0, f64::max)
    }
}

/// A 1-cochain `μ ↦ g_μ` with `g_{μ,η} g_μ g_η = g_{μ+η}`, times the character
/// `χ(μ) = exp(Σ_k c_k(μ) L_k)` where `c_k` are the simple-root coordinates.
#[derive(Clone, Debug)]
pub struct Cochain1 {
    pub values: BTreeMap<Weight, C64>,
    pub char_log: Vec<C64>,
    pub algebra: Algebra,
}

impl Cochain1 {
    pub fn chi(&self, lie: &Lie, mu: &Weight) -> C64 {
        let coords = lie.rd.root_coords_q(mu);
        coords.iter().zip(&self.char_log).map(|(&k, &l)| l * q_to_f64(k)).sum::<C64>().exp()
    }

    pub fn value(&self, lie: &Lie, mu: &Weight) -> Result<C64> {
        let base = self.values.get(mu).ok_or_else(|| Error::OutOfSupport(mu.clone()))?;
        Ok(base * self.chi(lie, mu))
    }

    /// `χ(α_i)`.
    pub fn char_correction(&self) -> Vec<C64> {
        self.char_log.iter().map(|l| l.exp()).collect()
    }

    /// `max |g_{μ,η} g_μ g_η − g_{μ+η}|` over the stored weights.
    pub fn coboundary_residual(&self, lie: &Lie, cocycle: &Cocycle2) -> f64 {
        let mut worst: f64 = 0.0;
        for ((m, e), g) in &cocycle.values {
            let (Ok(a), Ok(b), Ok(s)) = (self.value(lie, m), self.value(lie, e), self.value(lie, &add(m, e))) else {
                continue;
            };
            worst = worst.max((g * a * b - s).norm());
        }
        worst
    }
}

/// Every dominant weight below one of `targets` in the dominance order of coordinates.
fn down_closure(targets: &[Weight]) -> Vec<Weight> {
    let mut out: Vec<Weight> = Vec::new();
    for t in targets {
        let mut idx = vec![0i64; t.len()];
        loop {
            if !out.contains(&idx) {
                out.push(idx.clone());
            }
            let mut k = 0;
            while k < t.len() {
                idx[k] += 1;
                if idx[k] <= t[k] {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == t.len() {
                break;
            }
        }
    }
    out.sort_by_key(|w| w.iter().sum::<i64>());
    out
}

/// The cochain `g_0 = 1`, `g_{ω_i} = z_i`, `g_{μ+ω_i} = g_μ g_{μ,ω_i} z_i`, checked
/// across every reduction path. Returns the cochain and the path inconsistency.
pub fn coboundary(
    lie: &Lie,
    cocycle: &mut dyn FnMut(&Weight, &Weight) -> Result<C64>,
    z: &[C64],
    targets: &[Weight],
) -> Result<(Cochain1, f64)> {
    let r = lie.rank();
    if z.len() != r || z.iter().any(|x| x.norm() == 0.0) {
        return Err(Error::Invalid("coboundary needs one nonzero z_i per simple root".into()));
    }
    let mut values: BTreeMap<Weight, C64> = BTreeMap::new();
    let mut worst: f64 = 0.0;
    for mu in down_closure(targets) {
        if mu.iter().all(|&x| x == 0) {
            values.insert(mu, c(1.0, 0.0));
            continue;
        }
        let mut first: Option<C64> = None;
        for i in 0..r {
            if mu[i] == 0 {
                continue;
            }
            let w = lie.rd.omega(i);
            let prev = sub(&mu, &w);
            let v = values[&prev] * cocycle(&prev, &w)? * z[i];
            match first {
                None => first = Some(v),
                Some(f) => worst = worst.max((f - v).norm() / f.norm()),
            }
        }
        values.insert(mu, first.expect("nonzero weight has a reduction"));
    }
    if worst > 1e-8 {
        return Err(Error::Invalid(format!("coboundary paths disagree by {worst:.3e}; cocycle property violated upstream")));
    }
    Ok((Cochain1 { values, char_log: vec![c(0.0, 0.0); r], algebra: lie.rd.algebra }, worst))
}

/// The scalar `r_i` by which `S_ω(ι ⊗ S_ω ⊗ ι) B (τ^ℏ_{ī;ω̄,ω̄} ⊗ τ^ℏ_{i;ω,ω})`
/// differs from `S_{2ω_i−α_i}`.
pub fn rho_scalar(d: &Drinfeld, i: usize) -> Result<C64> {
    let lie = &d.lie;
    let w = lie.rd.omega(i);
    let ib = lie.rd.bar_index(i);
    let wb = lie.rd.omega(ib);
    let top = sub(&scale(&w, 2), &lie.rd.simple_root(i));
    let lvl = Level::new(lie, &top, &lie.rd.zero())?;
    let dims2: Vec<usize> = lvl.legs.iter().map(|l| lie.irrep(l).dim()).collect();
    let (dw, dwb) = (lie.irrep(&w).dim(), lie.irrep(&wb).dim());
    let v = col(&lvl.cyclic(lie));
    let v = apply_legs(&v, &dims2, 1, 1, &tau_h(d, i, &w, &w)?, &[dw, dw]);
    let v = apply_legs(&v, &[dims2[0], dw, dw], 0, 1, &tau_h(d, ib, &wb, &wb)?, &[dwb, dwb]);
    let legs4 = vec![wb.clone(), wb.clone(), w.clone(), w.clone()];
    let v = d.apply_phi(&v, &legs4, &Grouping::new(0, 4, 2, 3), true)?;
    let v = d.apply_phi(&v, &legs4, &Grouping::triple(0), false)?;
    let v = apply_legs(&v, &[dwb, dwb, dw, dw], 1, 2, &s_map(lie, &w), &[]);
    Ok((s_map(lie, &w).as_ref() * v)[(0, 0)])
}

/// Multiplies the cochain by the character fixed by the `erho` normalization.
pub fn normalize_cochain(d: &Drinfeld, g: &Cochain1) -> Result<Cochain1> {
    let lie = &d.lie;
    let mut out = g.clone();
    for i in 0..lie.rank() {
        let r = rho_scalar(d, i)?;
        if r.norm() < 1e-12 {
            return Err(Error::Resonance(format!("non-generic ℏ: r_{i} vanishes")));
        }
        let w = lie.rd.omega(i);
        let top = sub(&scale(&w, 2), &lie.rd.simple_root(i));
        let qi = d.qpow(lie.rd.d[i] as f64);
        let chi = -qnum(2.0, qi) * g.value(lie, &top)? / (g.value(lie, &w)?.powi(2) * r);
        out.char_log[i] += chi.ln();
    }
    Ok(out)
}

/// Residual of the `erho` condition for a cochain.
pub fn rho_residual(d: &Drinfeld, g: &Cochain1) -> Result<f64> {
    let lie = &d.lie;
    let mut worst: f64 = 0.0;
    for i in 0..lie.rank() {
        let r = rho_scalar(d, i)?;
        let w = lie.rd.omega(i);
        let top = sub(&scale(&w, 2), &lie.rd.simple_root(i));
        let qi = d.qpow(lie.rd.d[i] as f64);
        let want = -qnum(2.0, qi) * g.value(lie, &top)? / g.value(lie, &w)?.powi(2);
        worst = worst.max((r - want).norm());
    }
    Ok(worst)
}

/// Weights needed by the cochain: the regular weight and its shifts `μ + α_i`,
/// fundamentals and `2ω_i − α_i`.
pub fn cochain_targets(lie: &Lie, mu_reg: &Weight, support: &[Weight]) -> Vec<Weight> {
    let mut t: Vec<Weight> = support.to_vec();
    t.push(mu_reg.clone());
    for i in 0..lie.rank() {
        t.push(add(mu_reg, &lie.rd.simple_root(i)));
        let w = lie.rd.omega(i);
        t.push(sub(&scale(&w, 2), &lie.rd.simple_root(i)));
        t.push(w);
    }
    t
}

/// Builds the normalized cochain for `ℏ` from the gauge values `z`.
pub fn normalized_cochain(d: &Drinfeld, z: &[C64], targets: &[Weight]) -> Result<Cochain1> {
    let mut f = |m: &Weight, e: &Weight| cocycle(d, m, e);
    let (g, _) = coboundary(&d.lie, &mut f, z, targets)?;
    normalize_cochain(d, &g)
}

/// The isomorphisms `f_n` of `L(nμ, λ)`, stored per isotypic type as matrices on
/// the multiplicity spaces: `f_n ι_a = Σ_b ι_b F[b, a]`.
#[derive(Clone, Debug)]
pub struct FnChain {
    pub lambda: Weight,
    pub mu_reg: Weight,
    pub start: usize,
    pub maps: Vec<BTreeMap<Weight, CMat>>,
    pub conds: Vec<f64>,
}

impl FnChain {
    pub fn level(&self, lie: &Lie, n: usize) -> Result<Level> {
        Level::new(lie, &scale(&self.mu_reg, n as i64), &self.lambda)
    }

    pub fn top(&self) -> usize {
        self.start + self.maps.len() - 1
    }

    pub fn map_at(&self, n: usize) -> &BTreeMap<Weight, CMat> {
        &self.maps[n - self.start]
    }

    /// `f_n(ζ ⊗ ξ)`.
    pub fn image_of_cyclic(&self, lie: &Lie, n: usize) -> Result<CVec> {
        let lvl = self.level(lie, n)?;
        let dec = lvl.decomp(lie);
        let mut out = CVec::zeros(lvl.dim(lie));
        for (kappa, f) in self.map_at(n) {
            let y = lvl.y(lie, kappa);
            out += dec.reconstruct(kappa, &(y * f.transpose()));
        }
        Ok(out)
    }

    /// `ι_a^† f_n(ζ ⊗ ξ)` as the columns of a `dim V_κ × m` matrix.
    pub fn evaluation(&self, lie: &Lie, n: usize, kappa: &Weight) -> Result<CMat> {
        let lvl = self.level(lie, n)?;
        let f = self.map_at(n).get(kappa).ok_or_else(|| Error::OutOfSupport(kappa.clone()))?;
        Ok(lvl.y(lie, kappa) * f.transpose())
    }

    /// `max_n ‖f_n tr(c) − tr^ℏ f_{n+1}(c)‖` evaluated directly with the trace maps.
    pub fn intertwining_residual(&self, d: &Drinfeld, g_mu: C64) -> Result<f64> {
        let lie = &d.lie;
        let mut worst: f64 = 0.0;
        for n in self.start..self.top() {
            let lower = self.image_of_cyclic(lie, n)?;
            let upper = self.image_of_cyclic(lie, n + 1)?;
            let mu = scale(&self.mu_reg, n as i64);
            let t = tr_apply(d, &self.mu_reg, &mu, &self.lambda, g_mu, &col(&upper))?;
            worst = worst.max((t.column(0) - lower).norm());
        }
        Ok(worst)
    }

    /// Extends the chain up to level `n_max`.
    pub fn extend(&mut self, d: &Drinfeld, g_mu: C64, n_max: usize) -> Result<()> {
        let lie = &d.lie;
        while self.top() < n_max {
            let n = self.top();
            let low = self.level(lie, n)?;
            let high = self.level(lie, n + 1)?;
            let w = tr_apply(d, &self.mu_reg, &low.level, &self.lambda, g_mu, &col(&high.cyclic(lie)))?;
            let w = w.column(0).into_owned();
            let dec_low = low.decomp(lie);
            let dec_high = high.decomp(lie);
            let mut next = BTreeMap::new();
            let mut cond: f64 = 1.0;
            for kappa in dec_high.parts.keys() {
                let yh = high.y(lie, kappa);
                let yp = pinv(&yh, 1e-12);
                let m_high = dec_high.multiplicity(kappa);
                let m_low = dec_low.multiplicity(kappa);
                let fk = if m_low == 0 {
                    CMat::identity(m_high, m_high)
                } else {
                    let x_cl = (&yp * low.y(lie, kappa)).transpose();
                    let x_h = (&yp * dec_low.project(kappa, &w)).transpose();
                    if rank(&x_h, 1e-9) < m_low {
                        return Err(Error::Resonance(format!(
                            "non-generic ℏ: trace map not surjective on type {kappa:?} at level {n}"
                        )));
                    }
                    let f_prev = &self.map_at(n)[kappa];
                    let mut fk = pinv(&x_h, 1e-12) * f_prev * &x_cl;
                    let k = nullspace(&x_cl, 1e-9);
                    let kp = nullspace(&x_h, 1e-9);
                    if k.ncols() != kp.ncols() {
                        return Err(Error::Resonance(format!("kernel dimensions differ on type {kappa:?} at level {n}")));
                    }
                    if k.ncols() > 0 {
                        let (j, _) = polar(&(kp.adjoint() * &k));
                        fk += &kp * j * k.adjoint();
                    }
                    fk
                };
                let s = singular_values(&fk);
                let lo = s.last().copied().unwrap_or(1.0);
                if lo < 1e-12 {
                    return Err(Error::Singular(format!("f_{} on type {kappa:?}", n + 1)));
                }
                cond = cond.max(s[0] / lo);
                next.insert(kappa.clone(), fk);
            }
            self.maps.push(next);
            self.conds.push(cond);
        }
        Ok(())
    }
}

/// Smallest `n ≥ 0` with `λ + nμ` dominant.
pub fn start_level(lambda: &Weight, mu_reg: &Weight) -> usize {
    (0..).find(|&n| Level::is_admissible(lambda, &scale(mu_reg, n as i64))).expect("regular weight")
}

impl Level {
    fn is_admissible(lambda: &Weight, a: &Weight) -> bool {
        add(lambda, a).iter().all(|&x| x >= 0)
    }
}

pub fn f_chain(d: &Drinfeld, lambda: &Weight, mu_reg: &Weight, n_max: usize, g_mu: C64) -> Result<FnChain> {
    if mu_reg.iter().any(|&x| x <= 0) {
        return Err(Error::Invalid(format!("{mu_reg:?} is not regular dominant")));
    }
    let start = start_level(lambda, mu_reg);
    let lvl = Level::new(&d.lie, &scale(mu_reg, start as i64), lambda)?;
    let dec = lvl.decomp(&d.lie);
    let first = dec.parts.iter().map(|(k, v)| (k.clone(), CMat::identity(v.len(), v.len()))).collect();
    let mut chain = FnChain { lambda: lambda.clone(), mu_reg: mu_reg.clone(), start, maps: vec![first], conds: vec![1.0] };
    chain.extend(d, g_mu, n_max.max(start))?;
    Ok(chain)
}

/// The three-step construction of the twist, with shared caches.
pub struct TwistBuilder<'a> {
    pub d: &'a Drinfeld,
    pub cochain: Cochain1,
    pub mu_reg: Weight,
    /// Extra truncation steps beyond the smallest admissible one.
    pub margin: usize,
    chains: Mutex<HashMap<Weight, Arc<Mutex<Option<FnChain>>>>>,
}

impl<'a> TwistBuilder<'a> {
    pub fn new(d: &'a Drinfeld, cochain: Cochain1, mu_reg: Weight, margin: usize) -> Self {
        TwistBuilder { d, cochain, mu_reg, margin, chains: Mutex::new(HashMap::new()) }
    }

    pub fn g_mu(&self) -> Result<C64> {
        self.cochain.value(&self.d.lie, &self.mu_reg)
    }

    /// The chain for the unscaled traces (`g_μ = 1`); see [`Self::cyclic_image`].
    pub fn chain(&self, lambda: &Weight, n: usize) -> Result<FnChain> {
        let slot = self.chains.lock().unwrap().entry(lambda.clone()).or_default().clone();
        let mut slot = slot.lock().unwrap();
        let one = c(1.0, 0.0);
        match slot.as_mut() {
            Some(ch) if ch.top() < n => ch.extend(self.d, one, n)?,
            Some(_) => {}
            None => *slot = Some(f_chain(self.d, lambda, &self.mu_reg, n, one)?),
        }
        Ok(slot.as_ref().expect("chain present").clone())
    }

    /// `x_n = g_μ^{−n} f_n(ζ ⊗ ξ)`, compatible with the traces scaled by `g_μ`.
    /// The explicit power keeps the identification covariant under a change of cochain.
    pub fn cyclic_image(&self, lambda: &Weight, n: usize) -> Result<CVec> {
        let x = self.chain(lambda, n)?.image_of_cyclic(&self.d.lie, n)?;
        Ok(x * self.g_mu()?.powi(-(n as i32)))
    }

    /// Smallest level at which `Hom(L(nμ, λ), V_κ) → V_κ(λ)` can be an isomorphism, plus the margin.
    pub fn level_for(&self, lambda: &Weight, kappa: &Weight) -> Result<usize> {
        let lie = &self.d.lie;
        let want = lie.irrep(kappa).module.indices_of_weight(lambda).len();
        let mut n = start_level(lambda, &self.mu_reg);
        loop {
            let lvl = Level::new(lie, &scale(&self.mu_reg, n as i64), lambda)?;
            if lvl.decomp(lie).multiplicity(kappa) >= want {
                return Ok(n + self.margin);
            }
            n += 1;
            if n > 64 {
                return Err(Error::OutOfSupport(lambda.clone()));
            }
        }
    }

    /// Restriction of the evaluation map to `V_κ(λ)`, square and invertible.
    pub fn evaluation_block(&self, lambda: &Weight, kappa: &Weight, n: usize) -> Result<(Vec<usize>, CMat)> {
        let lie = &self.d.lie;
        let ch = self.chain(lambda, n)?;
        let g = ch.evaluation(lie, n, kappa)? * self.g_mu()?.powi(-(n as i32));
        let idx = lie.irrep(kappa).module.indices_of_weight(lambda);
        let sub = CMat::from_fn(idx.len(), g.ncols(), |r, k| g[(idx[r], k)]);
        if sub.nrows() != sub.ncols() || rank(&sub, 1e-9) < sub.nrows() {
            return Err(Error::Singular(format!("evaluation on V_{kappa:?}({lambda:?}) at level {n} is not an isomorphism")));
        }
        Ok((idx, sub))
    }

    /// The block `F_{η,ν}`.
    pub fn block(&self, eta: &Weight, nu: &Weight) -> Result<CMat> {
        let lie = &self.d.lie;
        let (ve, vn) = (lie.irrep(eta), lie.irrep(nu));
        let (de, dn) = (ve.dim(), vn.dim());
        if eta.iter().all(|&x| x == 0) || nu.iter().all(|&x| x == 0) {
            return Ok(CMat::identity(de * dn, de * dn));
        }
        let mut finv = CMat::zeros(de * dn, de * dn);
        let mut l1s: Vec<Weight> = ve.module.weights.clone();
        l1s.dedup();
        l1s.sort();
        l1s.dedup();
        let mut l2s: Vec<Weight> = vn.module.weights.clone();
        l2s.sort();
        l2s.dedup();
        for l1 in &l1s {
            let n = self.level_for(l1, eta)?;
            let (idx1, g1) = self.evaluation_block(l1, eta, n)?;
            let g1i = inv(&g1)?;
            let lvl1 = Level::new(lie, &scale(&self.mu_reg, n as i64), l1)?;
            let e1 = &lvl1.decomp(lie).parts[eta];
            for l2 in &l2s {
                let m = self.level_for(l2, nu)?;
                let (idx2, g2) = self.evaluation_block(l2, nu, m)?;
                let g2i = inv(&g2)?;
                let lvl2 = Level::new(lie, &scale(&self.mu_reg, m as i64), l2)?;
                let e2 = &lvl2.decomp(lie).parts[nu];
                let lambda = add(l1, l2);
                let v = self.cyclic_image(&lambda, n + m)?;
                let w = m_apply(self.d, &lvl1.level, &lvl2.level, l1, l2, &col(&v))?;
                let dims4: Vec<usize> = lvl1.legs.iter().chain(&lvl2.legs).map(|l| lie.irrep(l).dim()).collect();
                for (a, ea) in e1.iter().enumerate() {
                    let wa = apply_legs(&w, &dims4, 0, 2, &ea.adjoint(), &[de]);
                    for (b, eb) in e2.iter().enumerate() {
                        let h = apply_legs(&wa, &[de, dims4[2], dims4[3]], 1, 2, &eb.adjoint(), &[dn]);
                        for (px, &x) in idx1.iter().enumerate() {
                            for (py, &y) in idx2.iter().enumerate() {
                                let coef = g1i[(a, px)] * g2i[(b, py)];
                                if coef.norm() == 0.0 {
                                    continue;
                                }
                                let mut colm = finv.column_mut(x * dn + y);
                                colm.axpy(coef, &h.column(0), c(1.0, 0.0));
                            }
                        }
                    }
                }
            }
        }
        inv(&finv).map_err(|_| Error::Singular(format!("assembled block F_{{{eta:?},{nu:?}}}")))
    }

    pub fn build(&self, support: &[Weight]) -> Result<NatElement2> {
        let mut blocks = BTreeMap::new();
        for eta in support {
            for nu in support {
                blocks.insert((eta.clone(), nu.clone()), self.block(eta, nu)?);
            }
        }
        Ok(NatElement2 { blocks })
    }
}

/// Builds the twist on `support × support` with the default gauge `z_i = 1`.
pub fn build_f(d: &Drinfeld, support: &[Weight], mu_reg: &Weight, margin: usize) -> Result<NatElement2> {
    let targets = cochain_targets(&d.lie, mu_reg, support);
    let g = normalized_cochain(d, &vec![c(1.0, 0.0); d.lie.rank()], &targets)?;
    TwistBuilder::new(d, g, mu_reg.clone(), margin).build(support)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kzode::KzOptions;
    use crate::linalg::{dist_id, fro};

    fn drin(h: C64) -> Drinfeld {
        Drinfeld::new(Lie::shared(Algebra::A1), h, KzOptions::default())
    }

    fn support(k: i64) -> Vec<Weight> {
        (0..=k).map(|x| vec![x]).collect()
    }

    #[test]
    fn classical_cocycle_is_trivial() {
        let d = drin(c(0.0, 0.0));
        let t = Cocycle2::on_support(&d, &support(2)).unwrap();
        assert!(t.deviation_from_one() < 1e-12);
        assert!((rho_scalar(&d, 0).unwrap() + c(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn cocycle_identities_hold() {
        let d = drin(c(0.0, 0.35));
        let t = Cocycle2::on_support(&d, &support(3)).unwrap();
        assert!(t.symmetry_residual() < 1e-10);
        assert!(t.normalization_residual() < 1e-12);
        assert!(t.cocycle_residual() < 1e-9, "{}", t.cocycle_residual());
        assert!((t.get(&vec![1], &vec![1]).unwrap() - c(1.0, 0.0)).norm() > 1e-4);
    }

    #[test]
    fn coboundary_trivial_and_multiplicative() {
        let lie = Lie::shared(Algebra::A2);
        let mut one = |_: &Weight, _: &Weight| Ok(c(1.0, 0.0));
        let (g, res) = coboundary(&lie, &mut one, &[c(1.0, 0.0), c(1.0, 0.0)], &[vec![2, 2]]).unwrap();
        assert_eq!(res, 0.0);
        assert!(g.values.values().all(|v| *v == c(1.0, 0.0)));
        let z = [c(2.0, 1.0), c(0.5, -0.3)];
        let (g, _) = coboundary(&lie, &mut one, &z, &[vec![2, 3]]).unwrap();
        let want = z[0].powi(2) * z[1].powi(3);
        assert!((g.values[&vec![2, 3]] - want).norm() < 1e-12);
    }

    #[test]
    fn coboundary_of_the_cocycle() {
        let d = drin(c(0.0, 0.35));
        let sup = support(3);
        let t = Cocycle2::on_support(&d, &sup).unwrap();
        let mut f = |m: &Weight, e: &Weight| cocycle(&d, m, e);
        let (g, _) = coboundary(&d.lie, &mut f, &[c(1.0, 0.0)], &[vec![6]]).unwrap();
        assert!(g.coboundary_residual(&d.lie, &t) < 1e-9);
    }

    #[test]
    fn normalization_solves_the_rho_condition() {
        let d = drin(c(0.0, 0.35));
        let targets = cochain_targets(&d.lie, &vec![1], &support(2));
        let g = normalized_cochain(&d, &[c(1.0, 0.0)], &targets).unwrap();
        assert!(rho_residual(&d, &g).unwrap() < 1e-8);
        // χ(ω)² = χ(α) on the weight lattice.
        let chi_w = g.chi(&d.lie, &vec![1]);
        let chi_a = g.chi(&d.lie, &vec![2]);
        assert!((chi_w * chi_w - chi_a).norm() < 1e-12);
        assert!((chi_a - g.char_correction()[0]).norm() < 1e-12);
    }

    #[test]
    fn chain_intertwines() {
        let d = drin(c(0.0, 0.35));
        let targets = cochain_targets(&d.lie, &vec![1], &support(1));
        let g = normalized_cochain(&d, &[c(1.0, 0.0)], &targets).unwrap();
        let gm = g.value(&d.lie, &vec![1]).unwrap();
        for lam in [vec![0], vec![-2], vec![3]] {
            let ch = f_chain(&d, &lam, &vec![1], 5, gm).unwrap();
            assert!(ch.intertwining_residual(&d, gm).unwrap() < 1e-8);
            assert!(ch.conds.iter().all(|&k| k < 1e6));
        }
    }

    #[test]
    fn classical_chain_and_twist_are_identity() {
        let d = drin(c(0.0, 0.0));
        let ch = f_chain(&d, &vec![-1], &vec![1], 4, c(1.0, 0.0)).unwrap();
        for m in &ch.maps {
            for f in m.values() {
                assert!(dist_id(f) < 1e-10);
            }
        }
        let f = build_f(&d, &support(2), &vec![1], 1).unwrap();
        for b in f.blocks.values() {
            assert!(dist_id(b) < 1e-10, "{}", dist_id(b));
        }
    }

    #[test]
    fn twist_blocks_are_graded_and_normalized() {
        let d = drin(c(0.0, 0.35));
        let f = build_f(&d, &support(2), &vec![1], 1).unwrap();
        assert!(dist_id(f.block(&vec![0], &vec![2]).unwrap()) == 0.0);
        let b = f.block(&vec![1], &vec![1]).unwrap();
        assert_eq!(b.nrows(), 4);
        let sp = crate::tensor::space(&d.lie, &[vec![1], vec![1]]);
        let h = sp.act_h(0, &CMat::identity(4, 4));
        assert!(fro(&(&h * b - b * &h)) < 1e-10);
        assert!(singular_values(b).last().copied().unwrap() > 1e-6);
        let j = f.to_json(Algebra::A1, d.hbar, &support(2));
        let back = NatElement2::from_json(&serde_json::from_str(&serde_json::to_string(&j).unwrap()).unwrap());
        assert!(fro(&(back.block(&vec![1], &vec![1]).unwrap() - b)) < 1e-14);
    }
}
