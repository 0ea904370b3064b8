use crate::{Error, Result};
use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

pub type Q = Rational64;

/// Weight in the fundamental-weight basis: `coords[i] = λ(h_i)`.
pub type Weight = Vec<i64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algebra {
    A1,
    A2,
    B2,
}

impl Algebra {
    pub fn parse(tag: &str) -> Result<Self> {
        match tag {
            "A1" => Ok(Algebra::A1),
            "A2" => Ok(Algebra::A2),
            "B2" => Ok(Algebra::B2),
            other => Err(Error::Config(format!("unsupported algebra {other:?}"))),
        }
    }
}

impl fmt::Display for Algebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Algebra::A1 => "A1",
            Algebra::A2 => "A2",
            Algebra::B2 => "B2",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct RootDatum {
    pub algebra: Algebra,
    pub rank: usize,
    /// `cartan[i][j] = a_ij = α_j(h_i)`.
    pub cartan: Vec<Vec<i64>>,
    pub d: Vec<i64>,
    pub w0_word: Vec<usize>,
    /// Gram matrix of the fundamental weights.
    omega_gram: Vec<Vec<Q>>,
    positive: Vec<Weight>,
}

fn rat_inverse(m: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m.to_vec();
    let mut inv: Vec<Vec<Q>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero()).expect("singular Cartan matrix");
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col];
        for j in 0..n {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col];
                for j in 0..n {
                    let (x, y) = (a[col][j], inv[col][j]);
                    a[r][j] -= f * x;
                    inv[r][j] -= f * y;
                }
            }
        }
    }
    inv
}

impl RootDatum {
    pub fn new(algebra: Algebra) -> Self {
        let (cartan, d, w0_word) = match algebra {
            Algebra::A1 => (vec![vec![2]], vec![1], vec![0]),
            Algebra::A2 => (vec![vec![2, -1], vec![-1, 2]], vec![1, 1], vec![0, 1, 0]),
            Algebra::B2 => (vec![vec![2, -1], vec![-2, 2]], vec![2, 1], vec![0, 1, 0, 1]),
        };
        let rank = d.len();
        let a_q: Vec<Vec<Q>> = cartan.iter().map(|r| r.iter().map(|&x| Q::from_integer(x)).collect()).collect();
        let a_inv = rat_inverse(&a_q);
        // (ω_i, α_j) = δ_ij d_j forces Gram(ω) = D A^{-1}.
        let omega_gram: Vec<Vec<Q>> = (0..rank)
            .map(|i| (0..rank).map(|j| Q::from_integer(d[i]) * a_inv[i][j]).collect())
            .collect();
        let mut rd = RootDatum { algebra, rank, cartan, d, w0_word, omega_gram, positive: vec![] };
        let mut positive = Vec::new();
        for k in 0..rd.w0_word.len() {
            let mut beta = rd.simple_root(rd.w0_word[k]);
            for &i in rd.w0_word[..k].iter().rev() {
                beta = rd.reflect(i, &beta);
            }
            positive.push(beta);
        }
        rd.positive = positive;
        rd.validate().expect("built-in root datum is consistent");
        rd
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.rank;
        for i in 0..r {
            if self.cartan[i][i] != 2 {
                return Err(Error::Invalid("diagonal Cartan entry is not 2".into()));
            }
            for j in 0..r {
                if i != j && (self.cartan[i][j] > 0 || (self.cartan[i][j] == 0) != (self.cartan[j][i] == 0)) {
                    return Err(Error::Invalid("Cartan sign pattern".into()));
                }
                if self.d[i] * self.cartan[i][j] != self.d[j] * self.cartan[j][i] {
                    return Err(Error::Invalid("d_i a_ij is not symmetric".into()));
                }
            }
        }
        let rho = self.rho();
        let neg: Weight = rho.iter().map(|x| -x).collect();
        if self.w0(&rho) != neg {
            return Err(Error::Invalid("w0 word does not send ρ to −ρ".into()));
        }
        Ok(())
    }

    pub fn zero(&self) -> Weight {
        vec![0; self.rank]
    }

    pub fn omega(&self, i: usize) -> Weight {
        let mut w = self.zero();
        w[i] = 1;
        w
    }

    pub fn rho(&self) -> Weight {
        vec![1; self.rank]
    }

    /// Simple root α_i in fundamental-weight coordinates.
    pub fn simple_root(&self, i: usize) -> Weight {
        (0..self.rank).map(|k| self.cartan[k][i]).collect()
    }

    pub fn positive_roots(&self) -> &[Weight] {
        &self.positive
    }

    pub fn reflect(&self, i: usize, lambda: &Weight) -> Weight {
        let a = self.simple_root(i);
        lambda.iter().zip(&a).map(|(l, x)| l - lambda[i] * x).collect()
    }

    /// Longest element applied through the reduced word, rightmost letter first.
    pub fn w0(&self, lambda: &Weight) -> Weight {
        let mut out = lambda.clone();
        for &i in self.w0_word.iter().rev() {
            out = self.reflect(i, &out);
        }
        out
    }

    pub fn bar(&self, lambda: &Weight) -> Weight {
        self.w0(lambda).iter().map(|x| -x).collect()
    }

    pub fn bar_index(&self, i: usize) -> usize {
        let b = self.bar(&self.omega(i));
        b.iter().position(|&x| x == 1).expect("bar permutes fundamental weights")
    }

    pub fn inner(&self, lambda: &Weight, mu: &Weight) -> Q {
        let mut s = Q::zero();
        for i in 0..self.rank {
            for j in 0..self.rank {
                s += self.omega_gram[i][j] * Q::from_integer(lambda[i] * mu[j]);
            }
        }
        s
    }

    pub fn inner_f(&self, lambda: &Weight, mu: &Weight) -> f64 {
        q_to_f64(self.inner(lambda, mu))
    }

    pub fn casimir(&self, lambda: &Weight) -> Q {
        let shifted: Weight = lambda.iter().zip(self.rho()).map(|(l, r)| l + 2 * r).collect();
        self.inner(lambda, &shifted)
    }

    pub fn weyl_dim(&self, lambda: &Weight) -> i64 {
        let rho = self.rho();
        let lr = add(lambda, &rho);
        let mut num = Q::one();
        for beta in &self.positive {
            num *= self.inner(&lr, beta) / self.inner(&rho, beta);
        }
        assert!(num.is_integer());
        num.to_integer()
    }

    /// Coefficients of `lambda` in the simple-root basis, if it lies in the root lattice.
    pub fn root_coords(&self, lambda: &Weight) -> Option<Vec<i64>> {
        let a_q: Vec<Vec<Q>> =
            self.cartan.iter().map(|r| r.iter().map(|&x| Q::from_integer(x)).collect()).collect();
        let inv = rat_inverse(&a_q);
        let mut out = Vec::with_capacity(self.rank);
        for i in 0..self.rank {
            let mut s = Q::zero();
            for j in 0..self.rank {
                s += inv[i][j] * Q::from_integer(lambda[j]);
            }
            if !s.is_integer() {
                return None;
            }
            out.push(s.to_integer());
        }
        Some(out)
    }

    /// Root-lattice coefficients as rationals (always defined).
    pub fn root_coords_q(&self, lambda: &Weight) -> Vec<Q> {
        let a_q: Vec<Vec<Q>> =
            self.cartan.iter().map(|r| r.iter().map(|&x| Q::from_integer(x)).collect()).collect();
        let inv = rat_inverse(&a_q);
        (0..self.rank)
            .map(|i| (0..self.rank).map(|j| inv[i][j] * Q::from_integer(lambda[j])).sum())
            .collect()
    }

    /// Height of `lambda − w0 lambda`, the depth of the Verma words spanning `V_lambda`.
    pub fn depth(&self, lambda: &Weight) -> usize {
        let diff = sub(lambda, &self.w0(lambda));
        let c = self.root_coords(&diff).expect("λ − w0λ lies in the root lattice");
        c.iter().sum::<i64>() as usize
    }

    pub fn is_dominant(lambda: &Weight) -> bool {
        lambda.iter().all(|&x| x >= 0)
    }
}

pub fn q_to_f64(x: Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

pub fn add(a: &Weight, b: &Weight) -> Weight {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &Weight, b: &Weight) -> Weight {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &Weight, k: i64) -> Weight {
    a.iter().map(|x| k * x).collect()
}

pub fn neg(a: &Weight) -> Weight {
    a.iter().map(|x| -x).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn q(n: i64, d: i64) -> Q {
        Q::new(n, d)
    }

    /// Weight multiplicities by Freudenthal's recursion, used as a dimension oracle.
    fn freudenthal(rd: &RootDatum, lambda: &Weight) -> HashMap<Weight, i64> {
        let mut mult: HashMap<Weight, i64> = HashMap::new();
        mult.insert(lambda.clone(), 1);
        let rho = rd.rho();
        let lr = add(lambda, &rho);
        let norm_lr = rd.inner(&lr, &lr);
        let mut layer = vec![lambda.clone()];
        for _ in 0..64 {
            let mut next: Vec<Weight> = Vec::new();
            for w in &layer {
                for i in 0..rd.rank {
                    let cand = sub(w, &rd.simple_root(i));
                    if !next.contains(&cand) && !mult.contains_key(&cand) {
                        next.push(cand);
                    }
                }
            }
            let mut found = Vec::new();
            for mu in next {
                let mr = add(&mu, &rho);
                let den = norm_lr - rd.inner(&mr, &mr);
                if den <= Q::zero() {
                    continue;
                }
                let mut s = Q::zero();
                for beta in rd.positive_roots() {
                    let mut k = 1;
                    loop {
                        let up = add(&mu, &scale(beta, k));
                        match mult.get(&up) {
                            Some(&m) => s += Q::from_integer(2 * m) * rd.inner(&up, beta),
                            None => {
                                if rd.inner(&sub(&up, lambda), &up).is_zero() && k > 40 {
                                    break;
                                }
                                if k > 40 {
                                    break;
                                }
                            }
                        }
                        k += 1;
                    }
                }
                let m = s / den;
                if !m.is_zero() {
                    assert!(m.is_integer());
                    found.push((mu, m.to_integer()));
                }
            }
            if found.is_empty() {
                break;
            }
            layer = found.iter().map(|(w, _)| w.clone()).collect();
            for (w, m) in found {
                mult.insert(w, m);
            }
        }
        mult
    }

    #[test]
    fn inner_products() {
        let a1 = RootDatum::new(Algebra::A1);
        assert_eq!(a1.inner(&vec![1], &vec![1]), q(1, 2));
        assert_eq!(a1.inner(&vec![2], &vec![2]), q(2, 1));
        assert_eq!(a1.inner(&vec![3], &vec![0]), q(0, 1));
        let b2 = RootDatum::new(Algebra::B2);
        assert_eq!(b2.inner(&b2.simple_root(1), &b2.simple_root(1)), q(2, 1));
        assert_eq!(b2.inner(&b2.simple_root(0), &b2.simple_root(0)), q(4, 1));
    }

    #[test]
    fn bar_and_casimir() {
        let a1 = RootDatum::new(Algebra::A1);
        assert_eq!(a1.bar(&vec![3]), vec![3]);
        assert_eq!(a1.casimir(&vec![1]), q(3, 2));
        assert_eq!(a1.casimir(&vec![2]), q(4, 1));
        assert_eq!(a1.casimir(&vec![0]), q(0, 1));
        let a2 = RootDatum::new(Algebra::A2);
        assert_eq!(a2.bar(&vec![1, 0]), vec![0, 1]);
        assert_eq!(a2.bar(&vec![0, 0]), vec![0, 0]);
        assert_eq!(a2.bar_index(0), 1);
        let b2 = RootDatum::new(Algebra::B2);
        assert_eq!(b2.bar(&vec![2, 1]), vec![2, 1]);
    }

    #[test]
    fn bar_matches_weyl_orbit_minimum() {
        // Oracle: enumerate the Weyl orbit and take the unique antidominant element.
        for alg in [Algebra::A1, Algebra::A2, Algebra::B2] {
            let rd = RootDatum::new(alg);
            let lam: Weight = (0..rd.rank).map(|i| (i as i64) + 1).collect();
            let mut orbit = vec![lam.clone()];
            let mut k = 0;
            while k < orbit.len() {
                for i in 0..rd.rank {
                    let r = rd.reflect(i, &orbit[k]);
                    if !orbit.contains(&r) {
                        orbit.push(r);
                    }
                }
                k += 1;
            }
            let anti: Vec<&Weight> = orbit.iter().filter(|w| w.iter().all(|&x| x <= 0)).collect();
            assert_eq!(anti.len(), 1);
            assert_eq!(rd.bar(&lam), neg(anti[0]));
        }
    }

    #[test]
    fn weyl_dimension() {
        let a1 = RootDatum::new(Algebra::A1);
        for n in 0..7 {
            assert_eq!(a1.weyl_dim(&vec![n]), n + 1);
        }
        let a2 = RootDatum::new(Algebra::A2);
        assert_eq!(a2.weyl_dim(&vec![1, 0]), 3);
        assert_eq!(a2.weyl_dim(&vec![1, 1]), 8);
        let b2 = RootDatum::new(Algebra::B2);
        assert_eq!(b2.weyl_dim(&vec![1, 1]), 16);
        for (rd, lam) in [(&a2, vec![2, 1]), (&b2, vec![1, 0]), (&b2, vec![0, 1]), (&b2, vec![1, 1]), (&a2, vec![1, 1])] {
            let total: i64 = freudenthal(rd, &lam).values().sum();
            assert_eq!(total, rd.weyl_dim(&lam));
        }
    }

    #[test]
    fn positive_root_counts() {
        assert_eq!(RootDatum::new(Algebra::A1).positive_roots().len(), 1);
        assert_eq!(RootDatum::new(Algebra::A2).positive_roots().len(), 3);
        assert_eq!(RootDatum::new(Algebra::B2).positive_roots().len(), 4);
    }

    #[test]
    fn depth_of_words() {
        let a1 = RootDatum::new(Algebra::A1);
        assert_eq!(a1.depth(&vec![3]), 3);
        let a2 = RootDatum::new(Algebra::A2);
        assert_eq!(a2.depth(&vec![1, 0]), 2);
        assert_eq!(a2.depth(&vec![1, 1]), 4);
    }

    proptest::proptest! {
        #[test]
        fn simple_root_pairing(x in -6i64..7, y in -6i64..7, alg in 0usize..3) {
            let rd = RootDatum::new([Algebra::A1, Algebra::A2, Algebra::B2][alg]);
            let lam: Weight = [x, y][..rd.rank].to_vec();
            for i in 0..rd.rank {
                proptest::prop_assert_eq!(rd.inner(&rd.simple_root(i), &lam), Q::from_integer(rd.d[i] * lam[i]));
            }
        }

        #[test]
        fn bar_is_isometric_involution(x in -6i64..7, y in -6i64..7, u in -6i64..7, v in -6i64..7, alg in 0usize..3) {
            let rd = RootDatum::new([Algebra::A1, Algebra::A2, Algebra::B2][alg]);
            let lam: Weight = [x, y][..rd.rank].to_vec();
            let mu: Weight = [u, v][..rd.rank].to_vec();
            proptest::prop_assert_eq!(rd.bar(&rd.bar(&lam)), lam.clone());
            proptest::prop_assert_eq!(rd.inner(&rd.bar(&lam), &rd.bar(&mu)), rd.inner(&lam, &mu));
            proptest::prop_assert_eq!(rd.bar(&add(&lam, &mu)), add(&rd.bar(&lam), &rd.bar(&mu)));
        }

        #[test]
        fn casimir_positive(x in 0i64..7, y in 0i64..7, alg in 0usize..3) {
            let rd = RootDatum::new([Algebra::A1, Algebra::A2, Algebra::B2][alg]);
            let lam: Weight = [x, y][..rd.rank].to_vec();
            if lam.iter().any(|&c| c != 0) {
                proptest::prop_assert!(rd.casimir(&lam) > Q::zero());
            }
        }
    }
}
