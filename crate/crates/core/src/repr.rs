use crate::cartan::{add, sub, q_to_f64, Algebra, RootDatum, Weight};
use crate::linalg::{eigh, rcommutator, rexpm_nilpotent, rkron, RMat};
use crate::{Error, Result};
use nalgebra::DVector;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// A finite-dimensional weight module with real generator matrices.
#[derive(Clone, Debug)]
pub struct Module {
    pub dim: usize,
    pub weights: Vec<Weight>,
    pub e: Vec<RMat>,
    pub f: Vec<RMat>,
}

impl Module {
    pub fn rank(&self) -> usize {
        self.e.len()
    }

    pub fn h(&self, i: usize) -> RMat {
        RMat::from_diagonal(&DVector::from_iterator(self.dim, self.weights.iter().map(|w| w[i] as f64)))
    }

    pub fn trivial(rank: usize) -> Module {
        Module {
            dim: 1,
            weights: vec![vec![0; rank]],
            e: vec![RMat::zeros(1, 1); rank],
            f: vec![RMat::zeros(1, 1); rank],
        }
    }

    /// Tensor product with generators acting through `x ⊗ 1 + 1 ⊗ x`.
    pub fn tensor(&self, other: &Module) -> Module {
        let ia = RMat::identity(self.dim, self.dim);
        let ib = RMat::identity(other.dim, other.dim);
        let lift = |a: &RMat, b: &RMat| rkron(a, &ib) + rkron(&ia, b);
        let mut weights = Vec::with_capacity(self.dim * other.dim);
        for wa in &self.weights {
            for wb in &other.weights {
                weights.push(add(wa, wb));
            }
        }
        Module {
            dim: self.dim * other.dim,
            weights,
            e: self.e.iter().zip(&other.e).map(|(a, b)| lift(a, b)).collect(),
            f: self.f.iter().zip(&other.f).map(|(a, b)| lift(a, b)).collect(),
        }
    }

    pub fn indices_of_weight(&self, w: &Weight) -> Vec<usize> {
        (0..self.dim).filter(|&k| &self.weights[k] == w).collect()
    }

    /// Largest deviation from the defining relations of the Lie algebra.
    pub fn relation_defect(&self, rd: &RootDatum) -> f64 {
        let r = self.rank();
        let mut worst: f64 = 0.0;
        for i in 0..r {
            let hi = self.h(i);
            for j in 0..r {
                let a = rd.cartan[i][j] as f64;
                worst = worst.max((rcommutator(&hi, &self.e[j]) - &self.e[j] * a).amax());
                worst = worst.max((rcommutator(&hi, &self.f[j]) + &self.f[j] * a).amax());
                let mut ef = rcommutator(&self.e[i], &self.f[j]);
                if i == j {
                    ef -= &hi;
                }
                worst = worst.max(ef.amax());
                if i != j {
                    let n = (1 - rd.cartan[i][j]) as usize;
                    let mut xe = self.e[j].clone();
                    let mut xf = self.f[j].clone();
                    for _ in 0..n {
                        xe = rcommutator(&self.e[i], &xe);
                        xf = rcommutator(&self.f[i], &xf);
                    }
                    worst = worst.max(xe.amax()).max(xf.amax());
                }
            }
        }
        worst
    }
}

/// Irreducible highest weight module with an orthonormal basis for the
/// contravariant form, so that `f_i` is the transpose of `e_i`.
#[derive(Clone, Debug)]
pub struct Irrep {
    pub highest_weight: Weight,
    pub module: Module,
    pub hw_index: usize,
    /// `words[k] = [i1, .., im]` stands for `f_{i1} ⋯ f_{im} ξ`.
    pub words: Vec<Vec<usize>>,
    /// Inverse of the matrix whose columns are the word vectors.
    pub word_inverse: RMat,
    pub theta: RMat,
    pub lowest: DVector<f64>,
}

impl Irrep {
    pub fn dim(&self) -> usize {
        self.module.dim
    }

    pub fn highest(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        v[self.hw_index] = 1.0;
        v
    }
}

/// Builds `V_λ` weight space by weight space, using `⟨f_i u, v⟩ = ⟨u, e_i v⟩`
/// and `e_j f_i v = f_i e_j v + δ_ij λ_v(i) v` to obtain each Gram matrix.
pub fn build_irr(rd: &RootDatum, lambda: &Weight) -> Result<Irrep> {
    if !RootDatum::is_dominant(lambda) {
        return Err(Error::Invalid(format!("highest weight {lambda:?} is not dominant")));
    }
    let r = rd.rank;
    let depth = rd.depth(lambda);
    // Basis vectors are numbered globally; `level[k]` lists weight groups at height k.
    let mut weights: Vec<Weight> = vec![lambda.clone()];
    let mut by_weight: HashMap<Weight, Vec<usize>> = HashMap::new();
    by_weight.insert(lambda.clone(), vec![0]);
    // Sparse generator actions: f_i on vector v gives a map index -> coefficient.
    let mut f_act: Vec<HashMap<usize, Vec<(usize, f64)>>> = vec![HashMap::new(); r];
    let mut e_act: Vec<HashMap<usize, Vec<(usize, f64)>>> = vec![HashMap::new(); r];
    let mut layer: Vec<Weight> = vec![lambda.clone()];
    let roots: Vec<Weight> = (0..r).map(|i| rd.simple_root(i)).collect();

    for _ in 0..depth {
        let mut next: Vec<Weight> = Vec::new();
        for w in &layer {
            for root in &roots {
                let cand = sub(w, root);
                if !next.contains(&cand) {
                    next.push(cand);
                }
            }
        }
        next.sort_by(|a, b| b.cmp(a));
        let mut produced = Vec::new();
        for mu in next {
            // Candidates f_i v with v of weight mu + α_i.
            let mut cands: Vec<(usize, usize)> = Vec::new();
            for i in 0..r {
                if let Some(vs) = by_weight.get(&add(&mu, &roots[i])) {
                    for &v in vs {
                        cands.push((i, v));
                    }
                }
            }
            if cands.is_empty() {
                continue;
            }
            // e_j (f_i v) expressed on existing vectors of weight mu + α_j.
            let apply_e_f = |j: usize, i: usize, v: usize| -> HashMap<usize, f64> {
                let mut out: HashMap<usize, f64> = HashMap::new();
                if let Some(ev) = e_act[j].get(&v) {
                    for &(u, c) in ev {
                        if let Some(fu) = f_act[i].get(&u) {
                            for &(x, d) in fu {
                                *out.entry(x).or_insert(0.0) += c * d;
                            }
                        }
                    }
                }
                if i == j {
                    *out.entry(v).or_insert(0.0) += weights[v][i] as f64;
                }
                out
            };
            let n = cands.len();
            let mut gram = RMat::zeros(n, n);
            for a in 0..n {
                for b in 0..n {
                    let (ia, va) = cands[a];
                    let (ib, vb) = cands[b];
                    // ⟨f_ia va, f_ib vb⟩ = ⟨va, e_ia f_ib vb⟩.
                    let img = apply_e_f(ia, ib, vb);
                    gram[(a, b)] = img.get(&va).copied().unwrap_or(0.0);
                }
            }
            let (vals, vecs) = eigh(&gram);
            let top = vals.iter().cloned().fold(0.0, f64::max);
            let keep: Vec<usize> = (0..n).filter(|&k| vals[k] > 1e-10 * top.max(1.0)).collect();
            if keep.is_empty() {
                continue;
            }
            let mut new_ids = Vec::new();
            // New vector b_k = Σ_a c_ak f_{i_a} v_a with c = u / sqrt(σ).
            let coeffs: Vec<Vec<f64>> = keep
                .iter()
                .map(|&k| (0..n).map(|a| vecs[(a, k)] / vals[k].sqrt()).collect())
                .collect();
            for _ in &keep {
                new_ids.push(weights.len());
                weights.push(mu.clone());
            }
            // ⟨b_k, f_i v⟩ = Σ_a c_ak G[a, (i, v)].
            for (col, &(i, v)) in cands.iter().enumerate() {
                let mut entries = Vec::new();
                for (kk, cvec) in coeffs.iter().enumerate() {
                    let s: f64 = (0..n).map(|a| cvec[a] * gram[(a, col)]).sum();
                    if s.abs() > 1e-15 {
                        entries.push((new_ids[kk], s));
                    }
                }
                for &(b, s) in &entries {
                    e_act[i].entry(b).or_default().push((v, s));
                }
                f_act[i].insert(v, entries);
            }
            by_weight.insert(mu.clone(), new_ids);
            produced.push(mu);
        }
        if produced.is_empty() {
            break;
        }
        layer = produced;
    }

    let dim = weights.len();
    let expected = rd.weyl_dim(lambda) as usize;
    if dim != expected {
        return Err(Error::Invalid(format!("constructed dimension {dim} differs from Weyl dimension {expected}")));
    }
    let mut e = vec![RMat::zeros(dim, dim); r];
    let mut f = vec![RMat::zeros(dim, dim); r];
    for i in 0..r {
        for (&v, list) in &f_act[i] {
            for &(b, s) in list {
                f[i][(b, v)] = s;
                e[i][(v, b)] = s;
            }
        }
    }
    let module = Module { dim, weights, e, f };
    let (words, word_inverse) = word_basis(&module, 0)?;
    let theta = theta_of(rd, &module);
    let mut xi = DVector::zeros(dim);
    xi[0] = 1.0;
    let lowest = &theta * &xi;
    Ok(Irrep { highest_weight: lambda.clone(), module, hw_index: 0, words, word_inverse, theta, lowest })
}

/// Greedy choice of words `f_{i1}⋯f_{im} ξ` forming a basis, weight by weight.
fn word_basis(m: &Module, hw: usize) -> Result<(Vec<Vec<usize>>, RMat)> {
    let dim = m.dim;
    let mut words: Vec<Vec<usize>> = vec![vec![]];
    let mut vecs: Vec<DVector<f64>> = {
        let mut x = DVector::zeros(dim);
        x[hw] = 1.0;
        vec![x]
    };
    let mut frontier = vec![0usize];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &k in &frontier {
            for i in 0..m.rank() {
                let cand = &m.f[i] * &vecs[k];
                if cand.norm() < 1e-12 {
                    continue;
                }
                if vecs.len() == dim {
                    break;
                }
                let wt = &m.weights[cand.iamax()];
                let mut trial: Vec<DVector<f64>> =
                    (0..vecs.len()).filter(|&q| &m.weights[vecs[q].iamax()] == wt).map(|q| vecs[q].clone()).collect();
                trial.push(cand.clone());
                let mat = RMat::from_columns(&trial);
                let s = mat.svd(false, false).singular_values;
                let hi = s.iter().cloned().fold(0.0, f64::max);
                let lo = if s.len() < trial.len() { 0.0 } else { s.iter().cloned().fold(f64::INFINITY, f64::min) };
                if lo > 1e-9 * hi {
                    let mut w = vec![i];
                    w.extend(words[k].iter().copied());
                    words.push(w);
                    vecs.push(cand);
                    next.push(vecs.len() - 1);
                }
            }
        }
        frontier = next;
    }
    if vecs.len() != dim {
        return Err(Error::Invalid("word vectors do not span the module".into()));
    }
    let mat = RMat::from_columns(&vecs);
    let inv = mat.try_inverse().ok_or_else(|| Error::Singular("word matrix".into()))?;
    Ok((words, inv))
}

/// Longest-element operator: product over the reduced word of
/// `exp(e_i) exp(−f_i) exp(e_i)`, inverted per reflection if the
/// calibration `θ f_i = −e_{ī} θ` fails.
pub fn theta_of(rd: &RootDatum, m: &Module) -> RMat {
    let build = |inverse: bool| -> RMat {
        let mut th = RMat::identity(m.dim, m.dim);
        for &i in &rd.w0_word {
            let (ee, ff) = if inverse { (-&m.e[i], -&m.f[i]) } else { (m.e[i].clone(), m.f[i].clone()) };
            let s = rexpm_nilpotent(&ee) * rexpm_nilpotent(&(-ff)) * rexpm_nilpotent(&ee);
            th *= s;
        }
        th
    };
    let check = |th: &RMat| -> f64 {
        (0..rd.rank)
            .map(|i| (th * &m.f[i] + &m.e[rd.bar_index(i)] * th).amax())
            .fold(0.0, f64::max)
    };
    let th = build(false);
    if check(&th) < 1e-9 {
        return th;
    }
    build(true)
}

pub fn theta_defect(rd: &RootDatum, m: &Module, th: &RMat) -> f64 {
    (0..rd.rank)
        .map(|i| (th * &m.f[i] + &m.e[rd.bar_index(i)] * th).amax())
        .fold(0.0, f64::max)
}

/// Nested commutator `[x_{p0}, [x_{p1}, … x_{pk}]]` with `x` either `e` or `f`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LieWord {
    H(usize),
    E(Vec<usize>),
    F(Vec<usize>),
}

impl LieWord {
    pub fn eval(&self, m: &Module) -> RMat {
        match self {
            LieWord::H(i) => m.h(*i),
            LieWord::E(p) => nested(&m.e, p),
            LieWord::F(p) => nested(&m.f, p),
        }
    }
}

fn nested(gens: &[RMat], path: &[usize]) -> RMat {
    let mut x = gens[*path.last().unwrap()].clone();
    for &i in path[..path.len() - 1].iter().rev() {
        x = rcommutator(&gens[i], &x);
    }
    x
}

/// Basis of the Lie algebra and the inverse of the invariant form on it.
#[derive(Clone, Debug)]
pub struct LieBasis {
    pub words: Vec<LieWord>,
    pub form_inverse: RMat,
}

impl LieBasis {
    fn build(rd: &RootDatum) -> Result<Self> {
        let reference = build_irr(rd, &rd.rho())?.module;
        let r = rd.rank;
        let mut paths: Vec<Vec<usize>> = (0..r).map(|i| vec![i]).collect();
        let mut layer = paths.clone();
        let npos = rd.positive_roots().len();
        while paths.len() < npos && !layer.is_empty() {
            let mut next = Vec::new();
            for p in &layer {
                for i in 0..r {
                    let mut cand = vec![i];
                    cand.extend(p.iter().copied());
                    let x = nested(&reference.e, &cand);
                    if x.amax() < 1e-12 {
                        continue;
                    }
                    let mut cols: Vec<DVector<f64>> =
                        next.iter().map(|q: &Vec<usize>| flat(&nested(&reference.e, q))).collect();
                    cols.push(flat(&x));
                    let s = RMat::from_columns(&cols).svd(false, false).singular_values;
                    if s.iter().cloned().fold(f64::INFINITY, f64::min) > 1e-9 {
                        next.push(cand);
                    }
                }
            }
            paths.extend(next.iter().cloned());
            layer = next;
        }
        if paths.len() != npos {
            return Err(Error::Invalid("root vector enumeration failed".into()));
        }
        let mut words: Vec<LieWord> = (0..r).map(LieWord::H).collect();
        words.extend(paths.iter().cloned().map(LieWord::E));
        words.extend(paths.iter().cloned().map(LieWord::F));
        let mats: Vec<RMat> = words.iter().map(|w| w.eval(&reference)).collect();
        let n = words.len();
        let mut gram = RMat::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                gram[(a, b)] = (&mats[a] * &mats[b]).trace();
            }
        }
        // Normalise so that (h_i, h_j) = a_ij / d_j.
        let scale = (rd.cartan[0][0] as f64 / rd.d[0] as f64) / gram[(0, 0)];
        gram *= scale;
        for i in 0..r {
            for j in 0..r {
                let want = rd.cartan[i][j] as f64 / rd.d[j] as f64;
                if (gram[(i, j)] - want).abs() > 1e-9 {
                    return Err(Error::Invalid("trace form is not proportional to the invariant form".into()));
                }
            }
        }
        let mut form_inverse = gram.try_inverse().ok_or_else(|| Error::Singular("invariant form".into()))?;
        form_inverse.iter_mut().for_each(|x| {
            if x.abs() < 1e-13 {
                *x = 0.0
            }
        });
        Ok(LieBasis { words, form_inverse })
    }

    pub fn casimir(&self, m: &Module) -> RMat {
        let mats: Vec<RMat> = self.words.iter().map(|w| w.eval(m)).collect();
        let mut c = RMat::zeros(m.dim, m.dim);
        for a in 0..mats.len() {
            for b in 0..mats.len() {
                let k = self.form_inverse[(a, b)];
                if k != 0.0 {
                    c += (&mats[a] * &mats[b]) * k;
                }
            }
        }
        c
    }

    /// Polarised Casimir `Σ B^{-1}_{ab} x_a ⊗ x_b`.
    pub fn two_tensor(&self, v: &Module, w: &Module) -> RMat {
        let mv: Vec<RMat> = self.words.iter().map(|x| x.eval(v)).collect();
        let mw: Vec<RMat> = self.words.iter().map(|x| x.eval(w)).collect();
        let mut t = RMat::zeros(v.dim * w.dim, v.dim * w.dim);
        for a in 0..mv.len() {
            for b in 0..mw.len() {
                let k = self.form_inverse[(a, b)];
                if k != 0.0 {
                    t += rkron(&mv[a], &mw[b]) * k;
                }
            }
        }
        t
    }
}

fn flat(m: &RMat) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Shared representation-theoretic data for one algebra, with caches.
pub struct Lie {
    pub rd: RootDatum,
    basis: OnceLock<LieBasis>,
    irreps: Mutex<HashMap<Weight, Arc<Irrep>>>,
    tcache: Mutex<HashMap<(Weight, Weight), Arc<RMat>>>,
}

impl Lie {
    pub fn new(algebra: Algebra) -> Self {
        Lie {
            rd: RootDatum::new(algebra),
            basis: OnceLock::new(),
            irreps: Mutex::new(HashMap::new()),
            tcache: Mutex::new(HashMap::new()),
        }
    }

    pub fn shared(algebra: Algebra) -> Arc<Lie> {
        static CACHE: OnceLock<Mutex<HashMap<Algebra, Arc<Lie>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut g = cache.lock().unwrap();
        g.entry(algebra).or_insert_with(|| Arc::new(Lie::new(algebra))).clone()
    }

    pub fn rank(&self) -> usize {
        self.rd.rank
    }

    pub fn basis(&self) -> &LieBasis {
        self.basis.get_or_init(|| LieBasis::build(&self.rd).expect("Lie basis"))
    }

    pub fn irrep(&self, lambda: &Weight) -> Arc<Irrep> {
        if let Some(v) = self.irreps.lock().unwrap().get(lambda) {
            return v.clone();
        }
        let v = Arc::new(build_irr(&self.rd, lambda).expect("dominant highest weight"));
        self.irreps.lock().unwrap().insert(lambda.clone(), v.clone());
        v
    }

    /// `t` on `V_a ⊗ V_b`.
    pub fn t_pair(&self, a: &Weight, b: &Weight) -> Arc<RMat> {
        let key = (a.clone(), b.clone());
        if let Some(t) = self.tcache.lock().unwrap().get(&key) {
            return t.clone();
        }
        let va = self.irrep(a);
        let vb = self.irrep(b);
        let t = Arc::new(self.basis().two_tensor(&va.module, &vb.module));
        self.tcache.lock().unwrap().insert(key, t.clone());
        t
    }

    pub fn casimir_matrix(&self, m: &Module) -> RMat {
        self.basis().casimir(m)
    }

    /// `t = ½(C(V⊗W) − C(V)⊗1 − 1⊗C(W))`.
    pub fn t_matrix(&self, v: &Module, w: &Module) -> RMat {
        let b = self.basis();
        let cvw = b.casimir(&v.tensor(w));
        let cv = rkron(&b.casimir(v), &RMat::identity(w.dim, w.dim));
        let cw = rkron(&RMat::identity(v.dim, v.dim), &b.casimir(w));
        (cvw - cv - cw) * 0.5
    }

    pub fn casimir_value(&self, lambda: &Weight) -> f64 {
        q_to_f64(self.rd.casimir(lambda))
    }
}
