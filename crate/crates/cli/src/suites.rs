use std::time::Instant;

use kltwist::cartan::{add, scale, Algebra, Weight};
use kltwist::hyper::{gamma_self_check, oracle_match};
use kltwist::kzode::{associator, associator_sym, KzOptions};
use kltwist::linalg::{c, commutator, cond, dist_id, expm, eye, fro, to_c, CMat, C64};
use kltwist::cartan::RootDatum;
use kltwist::natcalc::{
    braid_b3, drinfeld_associator, dual_check, hexagon_residuals, naturality_residual, pentagon_residual, quantum_dimension,
    t_legs, NatElement2,
};
use kltwist::tensor::Drinfeld;
use kltwist::twistbuild::{cochain_targets, f_chain, normalized_cochain, rho_residual, Cocycle2, Cochain1, TwistBuilder};
use kltwist::uqverify::{
    ecomm1_residual, empsi_residual, etauc0_residual, etaut_residual, generator_action, irreducibility_check,
    rmatrix_residual, serre_residual, tensor_structure_invertibility, unitarized_twist,
};
use kltwist::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::Resolved;
use crate::report::{Kind, Record};
use crate::RunError;

const ZETA3: f64 = 1.202_056_903_159_594_3;

type Job<'a> = Box<dyn Fn() -> Result<(f64, Option<String>)> + Send + Sync + 'a>;

pub struct Check<'a> {
    pub name: String,
    pub anchor: &'static str,
    pub kind: Kind,
    pub tolerance: f64,
    job: Job<'a>,
}

/// Shared state of one run: the category, the cochain and, on A1, the twist.
pub struct Context {
    pub cfg: Resolved,
    pub d: Drinfeld,
    pub mu_reg: Weight,
    pub cochain: Cochain1,
}

pub struct TwistData<'a> {
    pub builder: TwistBuilder<'a>,
    pub f: NatElement2,
    pub build_time: f64,
}

impl Context {
    pub fn new(cfg: Resolved) -> Result<Context> {
        let lie = kltwist::repr::Lie::shared(cfg.algebra);
        let opts = KzOptions { terms: cfg.series_terms, ..KzOptions::default() };
        let d = Drinfeld::new(lie, cfg.hbar_c(), opts);
        let mu_reg = d.lie.rd.rho();
        let rank = d.lie.rank();
        let mut extra = cfg.support.clone();
        for i in 0..rank {
            extra.push(scale(&d.lie.rd.omega(i), 3));
        }
        let targets = cochain_targets(&d.lie, &mu_reg, &extra);
        let cochain = normalized_cochain(&d, &cfg.gauge_c(), &targets)?;
        Ok(Context { cfg, d, mu_reg, cochain })
    }

    pub fn rank(&self) -> usize {
        self.d.lie.rank()
    }

    pub fn omega(&self, i: usize) -> Weight {
        self.d.lie.rd.omega(i)
    }

    /// The twist is built on A1, where the truncated objects stay small.
    pub fn builds_twist(&self) -> bool {
        self.cfg.algebra == Algebra::A1
    }

    /// Fails if some block of the support needs a truncation level above `n_max`.
    pub fn check_truncation(&self, b: &TwistBuilder) -> Result<()> {
        let lie = &self.d.lie;
        for kappa in &self.cfg.support {
            for lam in &lie.irrep(kappa).module.weights {
                let n = b.level_for(lam, kappa)?;
                if n > self.cfg.n_max {
                    return Err(Error::Config(format!(
                        "V_{kappa:?}({lam:?}) needs truncation level {n} > n_max = {}",
                        self.cfg.n_max
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn twist(&self) -> Result<TwistData<'_>> {
        let t0 = Instant::now();
        let builder = TwistBuilder::new(&self.d, self.cochain.clone(), self.mu_reg.clone(), self.cfg.margin);
        self.check_truncation(&builder)?;
        let f = build_parallel(&builder, &self.cfg.support)?;
        Ok(TwistData { builder, f, build_time: t0.elapsed().as_secs_f64() })
    }

    fn check<'a>(
        &self,
        name: impl Into<String>,
        anchor: &'static str,
        kind: Kind,
        default_tol: f64,
        job: impl Fn() -> Result<f64> + Send + Sync + 'a,
    ) -> Check<'a> {
        let name = name.into();
        let tolerance = self.cfg.tolerance(&name, default_tol);
        Check { name, anchor, kind, tolerance, job: Box::new(move || job().map(|r| (r, None))) }
    }

    fn check_noted<'a>(
        &self,
        name: impl Into<String>,
        anchor: &'static str,
        kind: Kind,
        default_tol: f64,
        job: impl Fn() -> Result<(f64, Option<String>)> + Send + Sync + 'a,
    ) -> Check<'a> {
        let name = name.into();
        let tolerance = self.cfg.tolerance(&name, default_tol);
        Check { name, anchor, kind, tolerance, job: Box::new(job) }
    }
}

/// Assembles `F` on `support × support`, one block per task.
pub fn build_parallel(b: &TwistBuilder, support: &[Weight]) -> Result<NatElement2> {
    let pairs: Vec<(Weight, Weight)> =
        support.iter().flat_map(|e| support.iter().map(move |n| (e.clone(), n.clone()))).collect();
    let blocks: Vec<((Weight, Weight), CMat)> =
        pairs.into_par_iter().map(|(e, n)| b.block(&e, &n).map(|m| ((e, n), m))).collect::<Result<_>>()?;
    Ok(NatElement2 { blocks: blocks.into_iter().collect() })
}

/// Runs the checks on the worker pool. Resonance aborts the run.
pub fn execute(checks: Vec<Check<'_>>) -> std::result::Result<Vec<Record>, RunError> {
    let out: Vec<std::result::Result<Record, RunError>> = checks
        .par_iter()
        .map(|ch| {
            let t0 = Instant::now();
            let res = (ch.job)();
            let wall_time = t0.elapsed().as_secs_f64();
            let (residual, note) = match res {
                Ok(v) => v,
                Err(e @ Error::Resonance(_)) => return Err(RunError::from(e)),
                Err(e) => (f64::INFINITY, Some(e.to_string())),
            };
            Ok(Record {
                name: ch.name.clone(),
                anchor: ch.anchor.to_string(),
                kind: ch.kind,
                residual,
                tolerance: ch.tolerance,
                pass: residual <= ch.tolerance,
                wall_time,
                note,
            })
        })
        .collect();
    out.into_iter().collect()
}

fn wname(w: &Weight) -> String {
    let parts: Vec<String> = w.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(","))
}

fn is_pure_imaginary(h: C64) -> bool {
    h.re == 0.0
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    CMat::from_fn(n, n, |_, _| c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)))
}

/// Weyl's product formula for `Tr q^{h_{2ρ}}` on `V_λ`.
fn weyl_q_dimension(d: &Drinfeld, lambda: &Weight) -> C64 {
    let rd = &d.lie.rd;
    if d.is_classical() {
        return c(rd.weyl_dim(lambda) as f64, 0.0);
    }
    let rho = rd.rho();
    let lr = add(lambda, &rho);
    let mut out = c(1.0, 0.0);
    for a in rd.positive_roots() {
        let (x, y) = (rd.inner_f(&lr, a), rd.inner_f(&rho, a));
        out *= (d.qpow(x) - d.qpow(-x)) / (d.qpow(y) - d.qpow(-y));
    }
    out
}

/// Largest `‖Φ_F − 1‖` over the triples whose blocks lie in the support.
fn phi_f_residual(d: &Drinfeld, f: &NatElement2, legs: &[Weight]) -> Result<(f64, Option<String>)> {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for a in legs {
        for b in legs {
            for cc in legs {
                match f.twisted_associator_residual(d, a, b, cc) {
                    Ok(r) => {
                        worst = worst.max(r);
                        count += 1;
                    }
                    Err(Error::OutOfSupport(_)) => {}
                    Err(e) => return Err(e),
                }
            }
        }
    }
    if count == 0 {
        return Err(Error::OutOfSupport(legs[0].clone()));
    }
    Ok((worst, Some(format!("{count} triples"))))
}

fn twist_legs(ctx: &Context) -> Vec<Weight> {
    let w = ctx.omega(0);
    vec![w.clone(), scale(&w, 2)]
}

fn max_block_diff(a: &NatElement2, b: &NatElement2) -> f64 {
    a.blocks.iter().map(|(k, m)| b.blocks.get(k).map_or(f64::INFINITY, |n| fro(&(m - n)))).fold(0.0, f64::max)
}

pub fn associator_checks<'a>(ctx: &'a Context) -> Vec<Check<'a>> {
    let d = &ctx.d;
    let lie = &d.lie;
    let f0 = ctx.omega(0);
    let mut out = vec![];
    out.push(ctx.check("associator/gamma_identities", "Gamma recurrence and reflection", Kind::Residual, 1e-11, || {
        let pts: Vec<C64> = (1..=12).map(|k| c(0.13 * k as f64 - 0.71, 0.37 - 0.05 * k as f64)).collect();
        Ok(gamma_self_check(&pts))
    }));
    out.push(ctx.check("associator/oracle_match", "closed-form 2x2 associator vs series solver", Kind::Residual, 1e-9, || {
        let h = c(0.0, 0.35);
        let triples = [
            (h, h, h),
            (h * 2.0, h, h * 3.0),
            (c(0.0, 0.1), c(0.0, 0.2), c(0.0, 0.05)),
            (h, h * 2.0, h),
            (h * 3.0, h, h * 2.0),
            (c(0.1, 0.07), c(0.1, 0.07), c(0.1, 0.07)),
            (c(0.2, 0.14), c(0.1, 0.07), c(0.3, 0.21)),
            (c(0.0, 0.6), c(0.0, -0.2), c(0.0, 0.45)),
            (c(0.23, 0.0), c(0.11, 0.0), c(0.17, 0.0)),
            (c(-0.3, 0.2), c(0.15, -0.1), c(0.05, 0.3)),
        ];
        let mut worst: f64 = 0.0;
        for (a, b, cc) in triples {
            worst = worst.max(oracle_match(a, b, cc, &d.opts)?);
        }
        Ok(worst)
    }));
    let seed = ctx.cfg.rng_seed;
    out.push(ctx.check_noted("associator/taylor_law", "fourth-order falloff of the truncated expansion", Kind::Bound, 2.5, move || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(&mut rng, 3);
        let b = random_matrix(&mut rng, 3);
        let z2 = std::f64::consts::PI.powi(2) / 6.0;
        let ab = commutator(&a, &b);
        let third = commutator(&a, &ab) + commutator(&b, &ab);
        let err = |h: f64| -> Result<f64> {
            let phi = associator(&(&a * c(h, 0.0)), &(&b * c(h, 0.0)), &d.opts)?;
            let approx = eye(3) - &ab * c(h * h * z2, 0.0) - &third * c(h.powi(3) * ZETA3, 0.0);
            Ok(fro(&(phi - approx)))
        };
        let (e1, e2) = (err(1e-2)?, err(5e-3)?);
        let ratio = e1 / e2;
        Ok(((ratio / 16.0).max(16.0 / ratio), Some(format!("C = {:.3e}, ratio {ratio:.3}", e1 / 1e-8))))
    }));
    let legs3 = vec![f0.clone(), f0.clone(), f0.clone()];
    {
        let legs3 = legs3.clone();
        out.push(ctx.check("associator/x0_independence", "associator independent of the matching point", Kind::Residual, 1e-9, move || {
            let t12 = t_legs(lie, &legs3, &[0], &[1]);
            let t23 = t_legs(lie, &legs3, &[1], &[2]);
            let at = |x0: f64| associator_sym(d.hbar, &t12, &t23, &KzOptions { x0, ..d.opts });
            let mid = at(0.5)?;
            Ok(fro(&(at(0.4)? - &mid)).max(fro(&(at(0.6)? - &mid))))
        }));
    }
    if is_pure_imaginary(d.hbar) {
        out.push(ctx.check("associator/phi_unitarity", "associator unitary for imaginary hbar", Kind::Residual, 1e-10, move || {
            let phi = drinfeld_associator(d, &legs3)?;
            Ok(dist_id(&(phi.adjoint() * &phi)))
        }));
        let f1 = f0.clone();
        out.push(ctx.check_noted("associator/qt_unitarity", "q^t unitary for imaginary hbar", Kind::Residual, 1e-12, move || {
            let t = to_c(&lie.t_pair(&f1, &f1)) * (c(0.0, std::f64::consts::PI) * d.hbar);
            let qt = expm(&t)?;
            let herm = fro(&(qt.adjoint() - &qt));
            Ok((dist_id(&(qt.adjoint() * &qt)), Some(format!("(q^t)* - q^t = {herm:.1e}"))))
        }));
    }
    out
}

pub fn axioms_checks<'a>(ctx: &'a Context) -> Vec<Check<'a>> {
    let d = &ctx.d;
    let f0 = ctx.omega(0);
    let mut out = vec![];
    let v4 = vec![f0.clone(); 4];
    out.push(ctx.check(format!("axioms/pentagon/{}", wname(&f0)), "pentagon identity", Kind::Residual, 1e-8, move || {
        pentagon_residual(d, &v4)
    }));
    let v3 = vec![f0.clone(); 3];
    for which in [1, 2] {
        let v3 = v3.clone();
        out.push(ctx.check(format!("axioms/hexagon{which}/{}", wname(&f0)), "hexagon identity", Kind::Residual, 1e-8, move || {
            let (h1, h2) = hexagon_residuals(d, &v3)?;
            Ok(if which == 1 { h1 } else { h2 })
        }));
    }
    let fb = f0.clone();
    out.push(ctx.check(format!("axioms/braid_b3/{}", wname(&f0)), "braid relation on three strands", Kind::Residual, 1e-8, move || {
        Ok(braid_b3(d, &fb)?.2)
    }));
    let duals: Vec<Weight> = if ctx.rank() == 1 { vec![f0.clone(), scale(&f0, 2)] } else { (0..ctx.rank()).map(|i| ctx.omega(i)).collect() };
    for lam in duals {
        let l2 = lam.clone();
        out.push(ctx.check(format!("axioms/dual/{}", wname(&lam)), "rigidity composition with quantum dimension", Kind::Residual, 1e-8, move || {
            dual_check(d, &l2)
        }));
        out.push(ctx.check(format!("axioms/quantum_dimension/{}", wname(&lam)), "trace of q^{h_2rho} vs Weyl product", Kind::Residual, 1e-12, move || {
            let want = weyl_q_dimension(d, &lam);
            Ok((quantum_dimension(d, &lam) - want).norm() / want.norm())
        }));
    }
    let seed = ctx.cfg.rng_seed;
    let ff = f0.clone();
    out.push(ctx.check("axioms/naturality", "associator natural in the first factor", Kind::Residual, 1e-8, move || {
        naturality_residual(d, &[ff.clone(), ff.clone()], &scale(&ff, 2), &ff, &ff, seed)
    }));
    out
}

pub fn twist_checks<'a>(ctx: &'a Context, tw: Option<&'a TwistData<'a>>) -> Vec<Check<'a>> {
    let d = &ctx.d;
    let lie = &d.lie;
    let support = &ctx.cfg.support;
    let mut out = vec![];
    let cocycle = || Cocycle2::on_support(d, support);
    out.push(ctx.check("twist/cocycle_symmetry", "g(mu,eta) = g(eta,mu)", Kind::Residual, 1e-9, move || Ok(cocycle()?.symmetry_residual())));
    out.push(ctx.check("twist/cocycle_normalization", "g(0,mu) = 1", Kind::Residual, 1e-9, move || Ok(cocycle()?.normalization_residual())));
    out.push(ctx.check("twist/cocycle_identity", "two-cocycle identity", Kind::Residual, 1e-9, move || Ok(cocycle()?.cocycle_residual())));
    if d.is_classical() {
        out.push(ctx.check("twist/cocycle_classical", "cocycle identically one at hbar = 0", Kind::Residual, 1e-12, move || {
            Ok(cocycle()?.deviation_from_one())
        }));
    }
    out.push(ctx.check("twist/coboundary", "cocycle is the coboundary of the cochain", Kind::Residual, 1e-9, move || {
        Ok(ctx.cochain.coboundary_residual(lie, &cocycle()?))
    }));
    out.push(ctx.check("twist/rho_normalization", "cochain normalized on 2 omega_i - alpha_i", Kind::Residual, 1e-9, move || {
        rho_residual(d, &ctx.cochain)
    }));
    let mut lams = vec![lie.rd.zero()];
    for i in 0..ctx.rank() {
        lams.push(kltwist::cartan::neg(&ctx.omega(i)));
    }
    for lam in lams {
        let n_max = ctx.cfg.n_max.min(4);
        out.push(ctx.check(format!("twist/f_chain/{}", wname(&lam)), "chain isomorphisms intertwine the traces", Kind::Residual, 1e-8, move || {
            let one = c(1.0, 0.0);
            f_chain(d, &lam, &ctx.mu_reg, n_max, one)?.intertwining_residual(d, one)
        }));
    }
    let Some(tw) = tw else { return out };
    let legs = twist_legs(ctx);
    let f = &tw.f;
    {
        let legs = legs.clone();
        out.push(ctx.check_noted("twist/phi_f", "twisted associator is trivial", Kind::Residual, 1e-7, move || {
            let (r, note) = phi_f_residual(d, f, &legs)?;
            Ok((r, Some(format!("{}, build {:.1}s", note.unwrap_or_default(), tw.build_time))))
        }));
    }
    out.push(ctx.check("twist/invertible", "largest condition number of the blocks", Kind::Bound, 1e8, move || {
        Ok(f.blocks.values().map(cond).fold(0.0, f64::max))
    }));
    out.push(ctx.check("twist/counit", "blocks with a trivial factor are the identity", Kind::Residual, 1e-12, move || {
        Ok(f.blocks.iter().filter(|((e, n), _)| e.iter().all(|&x| x == 0) || n.iter().all(|&x| x == 0)).map(|(_, m)| dist_id(m)).fold(0.0, f64::max))
    }));
    out.push(ctx.check("twist/weight_graded", "blocks preserve total weight", Kind::Residual, 1e-10, move || {
        let mut worst: f64 = 0.0;
        for ((e, n), m) in &f.blocks {
            let (we, wn) = (&lie.irrep(e).module.weights, &lie.irrep(n).module.weights);
            let tot: Vec<Weight> = we.iter().flat_map(|a| wn.iter().map(move |b| add(a, b))).collect();
            let off: f64 = (0..m.nrows())
                .flat_map(|r| (0..m.ncols()).map(move |s| (r, s)))
                .filter(|&(r, s)| tot[r] != tot[s])
                .map(|(r, s)| m[(r, s)].norm_sqr())
                .sum();
            worst = worst.max(off.sqrt() / fro(m));
        }
        Ok(worst)
    }));
    if d.is_classical() {
        out.push(ctx.check("twist/classical_identity", "twist is the identity at hbar = 0", Kind::Residual, 1e-10, move || {
            Ok(f.blocks.values().map(dist_id).fold(0.0, f64::max))
        }));
    }
    {
        let legs = legs.clone();
        out.push(ctx.check_noted("twist/unitarized_phi_f", "polar-unitarized twist keeps the associator trivial", Kind::Residual, 1e-6, move || {
            let u = unitarized_twist(&tw.builder, f)?;
            let (r, note) = phi_f_residual(d, &u, &legs)?;
            Ok((r, Some(format!("{}, unitarity {:.1e}", note.unwrap_or_default(), u.is_unitary_residual()))))
        }));
    }
    out.push(ctx.check("twist/stabilization", "blocks unchanged by one more truncation step", Kind::Residual, 1e-7, move || {
        let b2 = TwistBuilder::new(d, ctx.cochain.clone(), ctx.mu_reg.clone(), ctx.cfg.margin + 1);
        Ok(max_block_diff(f, &build_parallel(&b2, support)?))
    }));
    out.push(ctx.check_noted("twist/gauge_invariance", "twisted associator residual across two cochain gauges", Kind::Bound, 2.0, move || {
        let z2: Vec<C64> = ctx.cfg.gauge_c().iter().map(|z| z * 2.0).collect();
        let mut extra = support.clone();
        extra.extend((0..ctx.rank()).map(|i| scale(&ctx.omega(i), 3)));
        let g2 = normalized_cochain(d, &z2, &cochain_targets(lie, &ctx.mu_reg, &extra))?;
        let b2 = TwistBuilder::new(d, g2, ctx.mu_reg.clone(), ctx.cfg.margin);
        let f2 = build_parallel(&b2, support)?;
        let (r1, _) = phi_f_residual(d, f, &legs)?;
        let (r2, _) = phi_f_residual(d, &f2, &legs)?;
        // Below the roundoff floor both residuals are noise.
        let floor = 1e-13;
        let (a, b) = (r1.max(floor), r2.max(floor));
        Ok((a.max(b) / a.min(b), Some(format!("{r1:.2e} vs {r2:.2e}, blocks differ by {:.1e}", max_block_diff(f, &f2)))))
    }));
    out
}

pub fn uq_checks<'a>(ctx: &'a Context, tw: Option<&'a TwistData<'a>>) -> Vec<Check<'a>> {
    let d = &ctx.d;
    let rank = ctx.rank();
    let g = &ctx.cochain;
    let zero = d.lie.rd.zero();
    let z2 = zero.clone();
    let mut out = vec![];
    out.push(ctx.check("uq/ecomm1", "finite-level commutator of the trace morphisms", Kind::Residual, 1e-8, move || {
        let mut worst: f64 = 0.0;
        for i in 0..rank {
            let w = ctx.omega(i);
            let ai = d.lie.rd.simple_root(i);
            let mut mus = vec![zero.clone(), w.clone(), d.lie.rd.rho()];
            mus.dedup();
            for mu in mus.iter().filter(|m| RootDatum::is_dominant(&add(m, &ai))) {
                for lam in [zero.clone(), w.clone(), kltwist::cartan::neg(&w)] {
                    if RootDatum::is_dominant(&add(&lam, &add(mu, &scale(&w, 2)))) {
                        worst = worst.max(ecomm1_residual(d, g, i, mu, &lam)?);
                    }
                }
            }
        }
        Ok(worst)
    }));
    out.push(ctx.check("uq/comonoid", "generator action compatible with the comultiplication", Kind::Residual, 1e-8, move || {
        let mut worst: f64 = 0.0;
        for i in 0..rank {
            let w = ctx.omega(i);
            worst = worst.max(empsi_residual(d, g, i, &w, &w, &w, &z2, &z2)?);
        }
        Ok(worst)
    }));
    out.push(ctx.check("uq/etauc0", "trace morphisms against the tensor structure", Kind::Residual, 1e-8, move || {
        let mut worst: f64 = 0.0;
        for i in 0..rank {
            let w = ctx.omega(i);
            let w2 = scale(&w, 2);
            for (a, b) in [(w.clone(), w.clone()), (w.clone(), w2.clone()), (w2.clone(), w.clone())] {
                worst = worst.max(etauc0_residual(d, i, &a, &b, &w)?);
            }
        }
        Ok(worst)
    }));
    out.push(ctx.check("uq/etaut", "two-row identity of the trace morphisms", Kind::Residual, 1e-8, move || {
        let mut worst: f64 = 0.0;
        for i in 0..rank {
            let w = ctx.omega(i);
            worst = worst.max(etaut_residual(d, i, &w, &w, &w)?);
        }
        Ok(worst)
    }));
    let irr: Vec<Weight> = if rank == 1 { (0..=3).map(|k| vec![k]).collect() } else { (0..rank).map(|i| ctx.omega(i)).collect() };
    for lam in irr {
        out.push(ctx.check_noted(format!("uq/irreducibility/{}", wname(&lam)), "images of lowering words span each weight space", Kind::Residual, 0.5, move || {
            let r = irreducibility_check(d, g, &lam)?;
            let miss = r.expected.abs_diff(r.total) as f64;
            Ok((miss, Some(format!("rank {} of {}", r.total, r.expected))))
        }));
    }
    if rank >= 2 {
        for lam in [ctx.omega(0), d.lie.rd.rho()] {
            out.push(ctx.check(format!("uq/serre/{}", wname(&lam)), "quantum Serre relations", Kind::Residual, 1e-6, move || {
                let mut worst: f64 = 0.0;
                for i in 0..rank {
                    for j in 0..rank {
                        if i != j {
                            worst = worst.max(serre_residual(d, g, &lam, i, j)?);
                        }
                    }
                }
                Ok(worst)
            }));
        }
    }
    let Some(tw) = tw else { return out };
    let b = &tw.builder;
    let w = ctx.omega(0);
    for k in 1..=3 {
        let kappa = scale(&w, k);
        let kk = kappa.clone();
        out.push(ctx.check(format!("uq/commutator/{}", wname(&kappa)), "[E,F] = (K - K^-1)/(q - q^-1)", Kind::Residual, 1e-7, move || {
            Ok(generator_action(b, &kk)?.commutator_residual(d))
        }));
        out.push(ctx.check(format!("uq/kek/{}", wname(&kappa)), "K E K^-1 = q^(alpha) E", Kind::Residual, 1e-12, move || {
            generator_action(b, &kappa)?.kek_residual(d)
        }));
    }
    for (l, m) in [(w.clone(), w.clone()), (w.clone(), scale(&w, 2))] {
        let f = &tw.f;
        out.push(ctx.check(format!("uq/r_eigenvalue/{}{}", wname(&l), wname(&m)), "twisted R on the extremal vector is q^-(lambda,mu)", Kind::Residual, 1e-7, move || {
            rmatrix_residual(d, f, &l, &m)
        }));
    }
    let (w1, w2) = (w.clone(), scale(&w, 2));
    out.push(ctx.check("uq/r_star", "R* = R21 for the unitarized twist", Kind::Residual, 1e-8, move || {
        let u = unitarized_twist(b, &tw.f)?;
        u.r_star_residual(d, &w1, &w2)
    }));
    for (v, x) in [(w.clone(), w.clone()), (w.clone(), scale(&w, 2))] {
        out.push(ctx.check_noted(format!("uq/tensor_structure/{}{}", wname(&v), wname(&x)), "tensor structure of the fiber functor is invertible", Kind::Bound, 1e8, move || {
            let r = tensor_structure_invertibility(d, &ctx.mu_reg, &v, &x)?;
            if !r.square {
                return Err(Error::Singular("tensor structure is not square".into()));
            }
            Ok((r.cond, Some(format!("sigma_min {:.3e} at level {}", r.sigma_min, r.level))))
        }));
    }
    out
}
