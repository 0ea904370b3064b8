//! One line per acceptance criterion. Exits nonzero if a criterion that is
//! expected to hold fails.

use std::time::Instant;

use kl_twist::{run, Kind, Report, RunConfig, Suite};
use kltwist::cartan::Algebra;
use kltwist::kzode::KzOptions;
use kltwist::linalg::c;
use kltwist::natcalc::quantum_dimension;
use kltwist::repr::Lie;
use kltwist::tensor::Drinfeld;

struct Outcome {
    id: usize,
    title: &'static str,
    pass: bool,
    detail: String,
    /// Set when the criterion cannot hold; the reason is printed with the line.
    unattainable: Option<&'static str>,
}

fn rec(r: &Report, name: &str) -> (f64, f64) {
    let x = r.get(name).unwrap_or_else(|| panic!("missing record {name}"));
    (x.residual, x.wall_time)
}

fn below(r: &Report, names: &[&str], tol: f64) -> (bool, String) {
    let mut ok = true;
    let mut parts = vec![];
    for n in names {
        let (v, _) = rec(r, n);
        ok &= v < tol;
        parts.push(format!("{n}={v:.2e}"));
    }
    (ok, parts.join(" "))
}

fn config(algebra: &str, hbar: [f64; 2]) -> RunConfig {
    RunConfig { algebra: Some(algebra.into()), hbar: Some(hbar), ..RunConfig::default() }
}

fn main() {
    let t0 = Instant::now();
    let a1 = run(Suite::All, &config("A1", [0.0, 0.35])).expect("A1 run");
    let a1_time = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let a2 = run(Suite::All, &config("A2", [0.0, 0.35])).expect("A2 run");
    let a2_time = t1.elapsed().as_secs_f64();
    let cl = run(Suite::All, &config("A1", [0.0, 0.0])).expect("classical run");
    let cl2 = run(Suite::All, &config("A2", [0.0, 0.0])).expect("classical A2 run");
    let mut out = vec![];

    let (v, t) = rec(&a1, "associator/oracle_match");
    out.push(Outcome { id: 1, title: "closed-form oracle", pass: v < 1e-9 && t < 1.0, detail: format!("10 triples, max {v:.2e}, {t:.3}s"), unattainable: None });

    let (v, t) = rec(&a1, "associator/taylor_law");
    let note = a1.get("associator/taylor_law").and_then(|r| r.note.clone()).unwrap_or_default();
    out.push(Outcome { id: 2, title: "associator Taylor law", pass: v <= 2.5 && t < 1.0, detail: format!("{note}, factor {v:.3}"), unattainable: None });

    let names1 = ["axioms/pentagon/[1]", "axioms/hexagon1/[1]", "axioms/hexagon2/[1]", "axioms/braid_b3/[1]"];
    let names2 = ["axioms/pentagon/[1,0]", "axioms/hexagon1/[1,0]", "axioms/hexagon2/[1,0]", "axioms/braid_b3/[1,0]"];
    let (p1, d1) = below(&a1, &names1, 1e-8);
    let (p2, d2) = below(&a2, &names2, 1e-8);
    let ax_time: f64 = names1.iter().map(|n| rec(&a1, n).1).chain(names2.iter().map(|n| rec(&a2, n).1)).sum();
    out.push(Outcome { id: 3, title: "pentagon, hexagons, braid", pass: p1 && p2 && ax_time < 30.0, detail: format!("{d1} {d2}"), unattainable: None });

    let (pu, _) = rec(&a1, "associator/phi_unitarity");
    let (qu, _) = rec(&a1, "associator/qt_unitarity");
    let (rs, _) = rec(&a1, "uq/r_star");
    out.push(Outcome {
        id: 4,
        title: "unitarity",
        pass: pu < 1e-10 && qu < 1e-12,
        detail: format!("Phi*Phi-1={pu:.2e} (q^t)*q^t-1={qu:.2e}; R*=R21 after unitarization {rs:.2e}"),
        unattainable: Some("q^t = exp(pi i hbar t) is Hermitian positive, not unitary, when hbar is imaginary"),
    });

    let coc = ["twist/cocycle_symmetry", "twist/cocycle_normalization", "twist/cocycle_identity", "twist/coboundary"];
    let (c1, e1) = below(&a1, &coc, 1e-9);
    let (c2, _) = below(&a2, &coc, 1e-9);
    let (cc, _) = rec(&cl, "twist/cocycle_classical");
    out.push(Outcome { id: 5, title: "cocycle suite", pass: c1 && c2 && cc < 1e-12, detail: format!("{e1} classical={cc:.1e}"), unattainable: None });

    let (pf, _) = rec(&a1, "twist/phi_f");
    let (inv, _) = rec(&a1, "twist/invertible");
    let (cu, _) = rec(&a1, "twist/counit");
    let (wg, _) = rec(&a1, "twist/weight_graded");
    let (uf, _) = rec(&a1, "twist/unitarized_phi_f");
    out.push(Outcome {
        id: 6,
        title: "twist certification",
        pass: pf < 1e-7 && inv < 1e8 && cu < 1e-12 && wg < 1e-10 && uf < 1e-6 && a1_time < 300.0,
        detail: format!("Phi_F={pf:.2e} cond<={inv:.1e} counit={cu:.0e} graded={wg:.0e} unitarized={uf:.2e} ({a1_time:.0}s)"),
        unattainable: None,
    });

    let (st, _) = rec(&a1, "twist/stabilization");
    let (gi, _) = rec(&a1, "twist/gauge_invariance");
    out.push(Outcome { id: 7, title: "stabilization and gauge", pass: st < 1e-7 && gi <= 2.0, detail: format!("block change {st:.2e}, gauge ratio {gi:.3}"), unattainable: None });

    let com = ["uq/commutator/[1]", "uq/commutator/[2]", "uq/commutator/[3]"];
    let (pc, dc) = below(&a1, &com, 1e-7);
    let (ps, ds) = below(&a2, &["uq/serre/[1,0]", "uq/serre/[1,1]"], 1e-6);
    let (pk, _) = below(&a1, &["uq/kek/[1]", "uq/kek/[2]", "uq/kek/[3]"], 1e-12);
    out.push(Outcome { id: 8, title: "U_q relations", pass: pc && ps && pk && a2_time < 300.0, detail: format!("{dc} {ds}"), unattainable: None });

    let (pr, dr) = below(&a1, &["uq/r_eigenvalue/[1][1]", "uq/r_eigenvalue/[1][2]"], 1e-7);
    let irr1 = (0..=3).all(|k| a1.get(&format!("uq/irreducibility/[{k}]")).is_some_and(|r| r.pass));
    let irr2 = ["[1,0]", "[0,1]"].iter().all(|w| a2.get(&format!("uq/irreducibility/{w}")).is_some_and(|r| r.pass));
    out.push(Outcome { id: 9, title: "braided equivalence data", pass: pr && irr1 && irr2, detail: format!("{dr} ranks A1 0..3: {irr1}, A2 fundamentals: {irr2}"), unattainable: None });

    let (pd, dd) = below(&a1, &["axioms/dual/[1]", "axioms/dual/[2]"], 1e-8);
    let d = Drinfeld::new(Lie::shared(Algebra::A1), c(0.0, 0.35), KzOptions::default());
    let q = d.q();
    let dq = (quantum_dimension(&d, &vec![1]) - (q + q.inv())).norm();
    out.push(Outcome { id: 10, title: "duals and quantum dimension", pass: pd && dq < 1e-14, detail: format!("{dd} |d_q - (q + 1/q)|={dq:.1e}"), unattainable: None });

    let worst = cl.records.iter().chain(&cl2.records).filter(|r| r.kind == Kind::Residual).map(|r| r.residual).fold(0.0, f64::max);
    let (fid, _) = rec(&cl, "twist/classical_identity");
    out.push(Outcome {
        id: 11,
        title: "classical degeneration",
        pass: cl.pass && cl2.pass && worst < 1e-10 && fid < 1e-10,
        detail: format!("{} + {} checks, worst residual {worst:.1e}, |F - 1|={fid:.1e}", cl.records.len(), cl2.records.len()),
        unattainable: None,
    });

    let mut regressions = 0;
    for o in &out {
        let mark = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {mark}  {}: {}", o.id, o.title, o.detail);
        match (o.pass, o.unattainable) {
            (false, Some(why)) => println!("             not attainable: {why}"),
            (false, None) => regressions += 1,
            _ => {}
        }
    }
    println!("total {:.1}s", t0.elapsed().as_secs_f64());
    if regressions > 0 {
        eprintln!("{regressions} criteria failed");
        std::process::exit(1);
    }
}
