use crate::cartan::{add, Weight};
use crate::kzode::{associator_sym, KzOptions};
use crate::linalg::{herm_fn, inv, rnullspace, to_c, CMat, CVec, RMat, C64};
use crate::repr::{Irrep, Lie};
use crate::{Error, Result};
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

/// Nonzero entries `(row, col, value)` of a real matrix.
fn sparse(m: &RMat) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let v = m[(r, c)];
            if v != 0.0 {
                out.push((r, c, v));
            }
        }
    }
    out
}

/// Tensor product of irreducible modules, row-major in the legs.
pub struct Space {
    pub legs: Vec<Weight>,
    pub irreps: Vec<Arc<Irrep>>,
    pub dims: Vec<usize>,
    pub dim: usize,
    rank: usize,
    strides: Vec<usize>,
    weights: Vec<Weight>,
    e_sparse: Vec<Vec<Vec<(usize, usize, f64)>>>,
    f_sparse: Vec<Vec<Vec<(usize, usize, f64)>>>,
    by_weight: HashMap<Weight, Vec<usize>>,
}

impl Space {
    pub fn new(lie: &Lie, legs: &[Weight]) -> Space {
        let irreps: Vec<Arc<Irrep>> = legs.iter().map(|l| lie.irrep(l)).collect();
        let dims: Vec<usize> = irreps.iter().map(|v| v.dim()).collect();
        let dim = dims.iter().product();
        let mut strides = vec![1; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        let mut weights = Vec::with_capacity(dim);
        let mut by_weight: HashMap<Weight, Vec<usize>> = HashMap::new();
        for idx in 0..dim {
            let mut w = vec![0; lie.rank()];
            for (k, v) in irreps.iter().enumerate() {
                w = add(&w, &v.module.weights[(idx / strides[k]) % dims[k]]);
            }
            by_weight.entry(w.clone()).or_default().push(idx);
            weights.push(w);
        }
        let e_sparse = irreps.iter().map(|v| v.module.e.iter().map(sparse).collect()).collect();
        let f_sparse = irreps.iter().map(|v| v.module.f.iter().map(sparse).collect()).collect();
        Space { legs: legs.to_vec(), irreps, dims, dim, rank: lie.rank(), strides, weights, e_sparse, f_sparse, by_weight }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn weight(&self, idx: usize) -> &Weight {
        &self.weights[idx]
    }

    pub fn indices_of_weight(&self, w: &Weight) -> &[usize] {
        self.by_weight.get(w).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn weight_set(&self) -> Vec<Weight> {
        let mut ws: Vec<Weight> = self.by_weight.keys().cloned().collect();
        ws.sort();
        ws
    }

    pub fn digit(&self, idx: usize, leg: usize) -> usize {
        (idx / self.strides[leg]) % self.dims[leg]
    }

    pub fn stride(&self, leg: usize) -> usize {
        self.strides[leg]
    }

    /// Coproduct action of `e_i` (raising) or `f_i` on the columns of `v`.
    pub fn act(&self, raising: bool, i: usize, v: &CMat) -> CMat {
        let mut out = CMat::zeros(v.nrows(), v.ncols());
        let table = if raising { &self.e_sparse } else { &self.f_sparse };
        for leg in 0..self.dims.len() {
            let s = self.strides[leg];
            let d = self.dims[leg];
            let hi_count = self.dim / (s * d);
            for &(r, c, val) in &table[leg][i] {
                for hi in 0..hi_count {
                    for lo in 0..s {
                        let src = hi * d * s + c * s + lo;
                        let dst = hi * d * s + r * s + lo;
                        for col in 0..v.ncols() {
                            out[(dst, col)] += v[(src, col)] * val;
                        }
                    }
                }
            }
        }
        out
    }

    /// Coproduct action of `h_i`, diagonal in the product basis.
    pub fn act_h(&self, i: usize, v: &CMat) -> CMat {
        let mut out = v.clone();
        for r in 0..self.dim {
            let w = self.weights[r][i] as f64;
            for c in 0..v.ncols() {
                out[(r, c)] *= w;
            }
        }
        out
    }

    /// Orthonormal basis of highest weight vectors of weight `kappa`.
    pub fn highest_vectors(&self, lie: &Lie, kappa: &Weight) -> RMat {
        let cols = self.indices_of_weight(kappa);
        if cols.is_empty() {
            return RMat::zeros(self.dim, 0);
        }
        let r = self.rank();
        let mut row_sets: Vec<HashMap<usize, usize>> = Vec::new();
        let mut nrows = 0;
        for i in 0..r {
            let tw = add(kappa, &lie.rd.simple_root(i));
            let rows = self.indices_of_weight(&tw);
            row_sets.push(rows.iter().enumerate().map(|(p, &k)| (k, nrows + p)).collect());
            nrows += rows.len();
        }
        let mut emat = RMat::zeros(nrows.max(1), cols.len());
        for (p, &idx) in cols.iter().enumerate() {
            for i in 0..r {
                for leg in 0..self.dims.len() {
                    let dg = self.digit(idx, leg);
                    for &(row, c, val) in &self.e_sparse[leg][i] {
                        if c != dg {
                            continue;
                        }
                        let tgt = idx + row * self.strides[leg] - c * self.strides[leg];
                        if let Some(&q) = row_sets[i].get(&tgt) {
                            emat[(q, p)] += val;
                        }
                    }
                }
            }
        }
        let ns = if nrows == 0 { RMat::identity(cols.len(), cols.len()) } else { rnullspace(&emat, 1e-9) };
        let mut out = RMat::zeros(self.dim, ns.ncols());
        for (p, &idx) in cols.iter().enumerate() {
            for c in 0..ns.ncols() {
                out[(idx, c)] = ns[(p, c)];
            }
        }
        out
    }

    /// Equivariant isometry `V_κ → space` sending `ξ_κ` to the highest vector `u`.
    pub fn embedding(&self, lie: &Lie, kappa: &Weight, u: &CVec) -> CMat {
        let target = lie.irrep(kappa);
        let mut cache: HashMap<&[usize], CMat> = HashMap::new();
        let mut cols: Vec<CMat> = Vec::with_capacity(target.words.len());
        let start = CMat::from_column_slice(self.dim, 1, u.as_slice());
        for w in &target.words {
            let v = if w.is_empty() {
                start.clone()
            } else {
                let prev = cache.get(&w[1..]).expect("word prefixes are generated first").clone();
                self.act(false, w[0], &prev)
            };
            cache.insert(w.as_slice(), v.clone());
            cols.push(v);
        }
        let mut words = CMat::zeros(self.dim, cols.len());
        for (k, c) in cols.iter().enumerate() {
            words.set_column(k, &c.column(0));
        }
        crate::linalg::mul(&words, &to_c(&target.word_inverse))
    }
}

/// Isotypic decomposition: for every `κ`, isometric embeddings `V_κ → space`
/// with mutually orthogonal images.
pub struct Decomp {
    pub parts: BTreeMap<Weight, Vec<CMat>>,
}

impl Decomp {
    pub fn new(lie: &Lie, space: &Space) -> Decomp {
        let mut parts = BTreeMap::new();
        for kappa in space.weight_set() {
            if !crate::cartan::RootDatum::is_dominant(&kappa) {
                continue;
            }
            let hv = space.highest_vectors(lie, &kappa);
            if hv.ncols() == 0 {
                continue;
            }
            let embs = (0..hv.ncols())
                .map(|c| space.embedding(lie, &kappa, &to_c(&hv.columns(c, 1).into_owned()).column(0).into_owned()))
                .collect();
            parts.insert(kappa, embs);
        }
        Decomp { parts }
    }

    pub fn multiplicity(&self, kappa: &Weight) -> usize {
        self.parts.get(kappa).map(|v| v.len()).unwrap_or(0)
    }

    /// Columns `ι_a^† v` for the components of type `κ`.
    pub fn project(&self, kappa: &Weight, v: &CVec) -> CMat {
        let Some(embs) = self.parts.get(kappa) else {
            return CMat::zeros(0, 0);
        };
        let d = embs[0].ncols();
        let mut out = CMat::zeros(d, embs.len());
        for (a, e) in embs.iter().enumerate() {
            out.set_column(a, &(e.adjoint() * v));
        }
        out
    }

    /// `Σ_a ι_a p_a` for the components of type `κ`.
    pub fn reconstruct(&self, kappa: &Weight, p: &CMat) -> CVec {
        let embs = &self.parts[kappa];
        let mut out = CVec::zeros(embs[0].nrows());
        for (a, e) in embs.iter().enumerate() {
            out += e * p.column(a);
        }
        out
    }
}

type SpaceKey = (crate::cartan::Algebra, Vec<Weight>);

/// Shared spaces and decompositions, keyed by the leg weights.
pub fn space(lie: &Lie, legs: &[Weight]) -> Arc<Space> {
    static CACHE: OnceLock<Mutex<HashMap<SpaceKey, Arc<Space>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (lie.rd.algebra, legs.to_vec());
    if let Some(s) = cache.lock().unwrap().get(&key) {
        return s.clone();
    }
    let s = Arc::new(Space::new(lie, legs));
    cache.lock().unwrap().insert(key, s.clone());
    s
}

pub fn decomposition(lie: &Lie, legs: &[Weight]) -> Arc<Decomp> {
    static CACHE: OnceLock<Mutex<HashMap<SpaceKey, Arc<Decomp>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (lie.rd.algebra, legs.to_vec());
    if let Some(d) = cache.lock().unwrap().get(&key) {
        return d.clone();
    }
    let d = Arc::new(Decomp::new(lie, &space(lie, legs)));
    cache.lock().unwrap().insert(key, d.clone());
    d
}

/// Applies `op` (from the legs `start..start+count` to new legs of sizes
/// `out_dims`) to every column of `v`.
pub fn apply_legs(v: &CMat, dims: &[usize], start: usize, count: usize, op: &CMat, out_dims: &[usize]) -> CMat {
    let left: usize = dims[..start].iter().product();
    let mid: usize = dims[start..start + count].iter().product();
    let right: usize = dims[start + count..].iter().product();
    let mout: usize = out_dims.iter().product();
    assert_eq!(op.ncols(), mid, "operator does not match the legs");
    assert_eq!(op.nrows(), mout, "operator does not match the output legs");
    let ncols = v.ncols();
    // Gather into mid × (left·right·ncols), multiply, scatter.
    let mut g = CMat::zeros(mid, left * right * ncols);
    for c in 0..ncols {
        for l in 0..left {
            for m in 0..mid {
                for r in 0..right {
                    g[(m, (c * left + l) * right + r)] = v[((l * mid + m) * right + r, c)];
                }
            }
        }
    }
    let h = crate::linalg::mul(op, &g);
    let mut out = CMat::zeros(left * mout * right, ncols);
    for c in 0..ncols {
        for l in 0..left {
            for m in 0..mout {
                for r in 0..right {
                    out[((l * mout + m) * right + r, c)] = h[(m, (c * left + l) * right + r)];
                }
            }
        }
    }
    out
}

/// Swaps the adjacent legs `pos` and `pos + 1`.
pub fn swap_legs(v: &CMat, dims: &[usize], pos: usize) -> CMat {
    let left: usize = dims[..pos].iter().product();
    let (a, b) = (dims[pos], dims[pos + 1]);
    let right: usize = dims[pos + 2..].iter().product();
    let mut out = CMat::zeros(v.nrows(), v.ncols());
    for c in 0..v.ncols() {
        for l in 0..left {
            for x in 0..a {
                for y in 0..b {
                    for r in 0..right {
                        out[(((l * b + y) * a + x) * right + r, c)] = v[(((l * a + x) * b + y) * right + r, c)];
                    }
                }
            }
        }
    }
    out
}

/// Legs `start..start+count` grouped as `A = [0, c1)`, `B = [c1, c2)`, `C = [c2, count)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Grouping {
    pub start: usize,
    pub count: usize,
    pub c1: usize,
    pub c2: usize,
}

impl Grouping {
    pub fn new(start: usize, count: usize, c1: usize, c2: usize) -> Self {
        assert!(0 < c1 && c1 < c2 && c2 < count, "invalid leg grouping");
        Grouping { start, count, c1, c2 }
    }

    /// The plain triple `(1, 2, 3)` starting at `start`.
    pub fn triple(start: usize) -> Self {
        Grouping::new(start, 3, 1, 2)
    }
}

type PhiKey = (Vec<Weight>, usize, usize, Weight, bool);

/// The Drinfeld category at a fixed `ℏ`: associator blocks and braidings
/// evaluated on weight subspaces, with caches.
pub struct Drinfeld {
    pub lie: Arc<Lie>,
    pub hbar: C64,
    pub opts: KzOptions,
    phi_cache: Mutex<HashMap<PhiKey, Arc<(Vec<usize>, CMat)>>>,
    qt_cache: Mutex<HashMap<(Weight, Weight), Arc<CMat>>>,
}

impl Drinfeld {
    pub fn new(lie: Arc<Lie>, hbar: C64, opts: KzOptions) -> Self {
        Drinfeld { lie, hbar, opts, phi_cache: Mutex::new(HashMap::new()), qt_cache: Mutex::new(HashMap::new()) }
    }

    pub fn is_classical(&self) -> bool {
        self.hbar == C64::new(0.0, 0.0)
    }

    /// `q = e^{πiℏ}`.
    pub fn q(&self) -> C64 {
        (C64::new(0.0, std::f64::consts::PI) * self.hbar).exp()
    }

    /// `q^x = e^{πiℏx}`.
    pub fn qpow(&self, x: f64) -> C64 {
        (C64::new(0.0, std::f64::consts::PI) * self.hbar * x).exp()
    }

    /// `Σ_{a ∈ A, b ∈ B} t_ab` restricted to the index set `idx` of a weight subspace.
    fn t_block(&self, sp: &Space, idx: &[usize], a: std::ops::Range<usize>, b: std::ops::Range<usize>) -> RMat {
        let pos: HashMap<usize, usize> = idx.iter().enumerate().map(|(p, &k)| (k, p)).collect();
        let mut out = RMat::zeros(idx.len(), idx.len());
        for la in a.clone() {
            for lb in b.clone() {
                let t = self.lie.t_pair(&sp.legs[la], &sp.legs[lb]);
                let db = sp.dims[lb];
                let cols = t_sparse_cols(&t);
                for (p, &k) in idx.iter().enumerate() {
                    let (da, dbb) = (sp.digit(k, la), sp.digit(k, lb));
                    let col = da * db + dbb;
                    for &(row, val) in &cols[col] {
                        let (na, nb) = (row / db, row % db);
                        let tgt = k + na * sp.stride(la) + nb * sp.stride(lb) - da * sp.stride(la) - dbb * sp.stride(lb);
                        if let Some(&q) = pos.get(&tgt) {
                            out[(q, p)] += val;
                        }
                    }
                }
            }
        }
        out
    }

    /// `Φ(ℏ t_{A,B}, ℏ t_{B,C})` (or its inverse) on the weight-`w` subspace of `legs`
    /// grouped by `(c1, c2)`.
    fn phi_block(&self, legs: &[Weight], c1: usize, c2: usize, w: &Weight, inverse: bool) -> Result<Arc<(Vec<usize>, CMat)>> {
        let key = (legs.to_vec(), c1, c2, w.clone(), inverse);
        if let Some(b) = self.phi_cache.lock().unwrap().get(&key) {
            return Ok(b.clone());
        }
        let sp = space(&self.lie, legs);
        let idx = sp.indices_of_weight(w).to_vec();
        let n = legs.len();
        let mat = if self.is_classical() {
            CMat::identity(idx.len(), idx.len())
        } else {
            let tab = self.t_block(&sp, &idx, 0..c1, c1..c2);
            let tbc = self.t_block(&sp, &idx, c1..c2, c2..n);
            let phi = associator_sym(self.hbar, &tab, &tbc, &self.opts)?;
            if inverse {
                inv(&phi)?
            } else {
                phi
            }
        };
        let b = Arc::new((idx, mat));
        self.phi_cache.lock().unwrap().insert(key, b.clone());
        Ok(b)
    }

    /// Applies the grouped associator on a run of legs to every column of `v`.
    pub fn apply_phi(&self, v: &CMat, legs: &[Weight], g: &Grouping, inverse: bool) -> Result<CMat> {
        if self.is_classical() {
            return Ok(v.clone());
        }
        let sub = &legs[g.start..g.start + g.count];
        let dims: Vec<usize> = legs.iter().map(|l| self.lie.irrep(l).dim()).collect();
        let left: usize = dims[..g.start].iter().product();
        let mid: usize = dims[g.start..g.start + g.count].iter().product();
        let right: usize = dims[g.start + g.count..].iter().product();
        let sp = space(&self.lie, sub);
        let mut out = CMat::zeros(v.nrows(), v.ncols());
        let nblk = left * right * v.ncols();
        for w in sp.weight_set() {
            let idx = sp.indices_of_weight(&w);
            let mut gm = CMat::zeros(idx.len(), nblk);
            let mut any = false;
            for c in 0..v.ncols() {
                for l in 0..left {
                    for (p, &m) in idx.iter().enumerate() {
                        for r in 0..right {
                            let x = v[((l * mid + m) * right + r, c)];
                            if x != C64::new(0.0, 0.0) {
                                any = true;
                            }
                            gm[(p, (c * left + l) * right + r)] = x;
                        }
                    }
                }
            }
            if !any {
                continue;
            }
            let blk = self.phi_block(sub, g.c1, g.c2, &w, inverse)?;
            let h = crate::linalg::mul(&blk.1, &gm);
            for c in 0..v.ncols() {
                for l in 0..left {
                    for (p, &m) in idx.iter().enumerate() {
                        for r in 0..right {
                            out[((l * mid + m) * right + r, c)] = h[(p, (c * left + l) * right + r)];
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Full matrix of the grouped associator acting on the whole space of `legs`.
    pub fn phi_matrix(&self, legs: &[Weight], g: &Grouping, inverse: bool) -> Result<CMat> {
        let sp = space(&self.lie, legs);
        self.apply_phi(&CMat::identity(sp.dim, sp.dim), legs, g, inverse)
    }

    /// `q^t = e^{πiℏ t}` on `V_a ⊗ V_b`.
    pub fn qt(&self, a: &Weight, b: &Weight) -> Arc<CMat> {
        let key = (a.clone(), b.clone());
        if let Some(m) = self.qt_cache.lock().unwrap().get(&key) {
            return m.clone();
        }
        let t = self.lie.t_pair(a, b);
        let h = self.hbar;
        let m = Arc::new(herm_fn(&t, |x| (C64::new(0.0, std::f64::consts::PI) * h * x).exp()));
        self.qt_cache.lock().unwrap().insert(key, m.clone());
        m
    }

    /// `Σ q^t` on the adjacent legs `pos`, `pos + 1`; returns the new leg order.
    pub fn apply_braiding(&self, v: &CMat, legs: &[Weight], pos: usize, inverse: bool) -> (CMat, Vec<Weight>) {
        let dims: Vec<usize> = legs.iter().map(|l| self.lie.irrep(l).dim()).collect();
        let mut new_legs = legs.to_vec();
        new_legs.swap(pos, pos + 1);
        let new_dims: Vec<usize> = new_legs.iter().map(|l| self.lie.irrep(l).dim()).collect();
        if inverse {
            // σ⁻¹ = q^{−t} Σ on the swapped legs.
            let s = swap_legs(v, &dims, pos);
            let qt = self.qt(&new_legs[pos], &new_legs[pos + 1]);
            let qinv = inv(&qt).expect("q^t is invertible");
            let out = apply_legs(&s, &new_dims, pos, 2, &qinv, &new_dims[pos..pos + 2]);
            (out, new_legs)
        } else {
            let qt = self.qt(&legs[pos], &legs[pos + 1]);
            let x = apply_legs(v, &dims, pos, 2, &qt, &dims[pos..pos + 2]);
            (swap_legs(&x, &dims, pos), new_legs)
        }
    }
}

fn t_sparse_cols(t: &RMat) -> Vec<Vec<(usize, f64)>> {
    (0..t.ncols())
        .map(|c| (0..t.nrows()).filter(|&r| t[(r, c)].abs() > 1e-15).map(|r| (r, t[(r, c)])).collect())
        .collect()
}

pub fn check_dominant(w: &Weight) -> Result<()> {
    if crate::cartan::RootDatum::is_dominant(w) {
        Ok(())
    } else {
        Err(Error::OutOfSupport(w.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartan::Algebra;
    use crate::linalg::{c, fro, kron, leg_permutation};

    #[test]
    fn coproduct_action_matches_dense_module() {
        let lie = Lie::shared(Algebra::A2);
        let legs = vec![vec![1, 0], vec![0, 1], vec![1, 1]];
        let sp = Space::new(&lie, &legs);
        let m = lie.irrep(&legs[0]).module.tensor(&lie.irrep(&legs[1]).module).tensor(&lie.irrep(&legs[2]).module);
        let x = CMat::from_fn(sp.dim, 2, |r, k| c((r * 7 + k * 3) as f64 % 5.0, (r % 3) as f64));
        for i in 0..2 {
            assert!(fro(&(sp.act(true, i, &x) - to_c(&m.e[i]) * &x)) < 1e-12);
            assert!(fro(&(sp.act(false, i, &x) - to_c(&m.f[i]) * &x)) < 1e-12);
        }
    }

    #[test]
    fn decomposition_is_orthogonal_and_equivariant() {
        let lie = Lie::shared(Algebra::A2);
        let legs = vec![vec![1, 0], vec![1, 1]];
        let sp = space(&lie, &legs);
        let dec = decomposition(&lie, &legs);
        let mut all = Vec::new();
        let mut total = 0;
        for (kappa, embs) in &dec.parts {
            let v = lie.irrep(kappa);
            for e in embs {
                total += e.ncols();
                for i in 0..2 {
                    let lhs = sp.act(true, i, e);
                    let rhs = e * to_c(&v.module.e[i]);
                    assert!(fro(&(lhs - rhs)) < 1e-10);
                    let lhs = sp.act(false, i, e);
                    let rhs = e * to_c(&v.module.f[i]);
                    assert!(fro(&(lhs - rhs)) < 1e-10);
                }
                all.push(e.clone());
            }
        }
        assert_eq!(total, sp.dim);
        let mut d = CMat::zeros(sp.dim, sp.dim);
        let mut col = 0;
        for e in &all {
            d.columns_mut(col, e.ncols()).copy_from(e);
            col += e.ncols();
        }
        assert!(crate::linalg::dist_id(&(d.adjoint() * &d)) < 1e-10);
        // 3 ⊗ 8 = 15 ⊕ 6̄ ⊕ 3
        assert_eq!(dec.multiplicity(&vec![2, 1]), 1);
        assert_eq!(dec.multiplicity(&vec![0, 2]), 1);
        assert_eq!(dec.multiplicity(&vec![1, 0]), 1);
    }

    #[test]
    fn leg_helpers() {
        let dims = vec![2, 3, 2];
        let x = CMat::from_fn(12, 1, |r, _| c(r as f64, 0.5 * r as f64));
        let sw = swap_legs(&x, &dims, 1);
        let p = to_c(&leg_permutation(&dims, &[0, 2, 1]));
        assert!(fro(&(sw - &p * &x)) < 1e-14);
        let op = CMat::from_fn(6, 6, |r, k| c((r + 2 * k) as f64, 1.0));
        let y = apply_legs(&x, &dims, 1, 2, &op, &[3, 2]);
        assert!(fro(&(y - kron(&CMat::identity(2, 2), &op) * &x)) < 1e-12);
    }

    #[test]
    fn associator_blocks_match_dense() {
        let lie = Lie::shared(Algebra::A1);
        let d = Drinfeld::new(lie.clone(), c(0.0, 0.35), KzOptions::default());
        let legs = vec![vec![1], vec![1], vec![2]];
        let blocks = d.phi_matrix(&legs, &Grouping::triple(0), false).unwrap();
        let t12 = kron(&to_c(&lie.t_matrix(&lie.irrep(&legs[0]).module, &lie.irrep(&legs[1]).module)), &CMat::identity(3, 3));
        let t23 = kron(&CMat::identity(2, 2), &to_c(&lie.t_matrix(&lie.irrep(&legs[1]).module, &lie.irrep(&legs[2]).module)));
        let dense = crate::kzode::associator(&(t12 * d.hbar), &(t23 * d.hbar), &KzOptions::default()).unwrap();
        assert!(fro(&(blocks - dense)) < 1e-9);
    }
}
