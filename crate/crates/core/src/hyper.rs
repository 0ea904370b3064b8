use crate::kzode::{associator, KzOptions};
use crate::linalg::{c, inv, mul, CMat, C64};
use crate::{Error, Result};
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Complex Γ by the Lanczos approximation, reflected for `Re z < 1/2`.
pub fn gamma(z: C64) -> C64 {
    if z.re < 0.5 {
        let s = (z * PI).sin();
        return c(PI, 0.0) / (s * gamma(c(1.0, 0.0) - z));
    }
    let z = z - 1.0;
    let mut x = c(LANCZOS[0], 0.0);
    for (k, &coef) in LANCZOS.iter().enumerate().skip(1) {
        x += coef / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * x
}

/// `1/Γ(z)`, finite at the poles.
pub fn rgamma(z: C64) -> C64 {
    if z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0 {
        return c(0.0, 0.0);
    }
    c(1.0, 0.0) / gamma(z)
}

/// Largest residual of the functional equations on a fixed set of sample points.
pub fn gamma_self_check(points: &[C64]) -> f64 {
    let mut worst: f64 = 0.0;
    for &x in points {
        let one = c(1.0, 0.0);
        let r1 = (gamma(one + x) - x * gamma(x)).norm() / gamma(one + x).norm().max(1.0);
        let lhs = gamma(x) * gamma(one - x);
        let rhs = c(PI, 0.0) / (x * PI).sin();
        let r2 = (lhs - rhs).norm() / rhs.norm().max(1.0);
        worst = worst.max(r1).max(r2);
    }
    worst
}

#[derive(Clone, Copy, Debug)]
pub struct HyperParams {
    pub alpha: C64,
    pub beta: C64,
    pub gamma: C64,
}

/// `₂F₁(α, β; γ; x)` by its power series inside `|x| ≤ 0.75`.
pub fn gauss_2f1(p: HyperParams, x: C64) -> Result<C64> {
    if p.gamma.im.abs() < 1e-14 && p.gamma.re <= 0.0 && (p.gamma.re - p.gamma.re.round()).abs() < 1e-14 {
        return Err(Error::Invalid("γ is a nonpositive integer".into()));
    }
    if x.norm() > 0.75 + 1e-12 {
        return Err(Error::Invalid(format!("|x| = {} is outside the series regime", x.norm())));
    }
    let mut term = c(1.0, 0.0);
    let mut sum = term;
    for n in 0..4000 {
        let nf = n as f64;
        term *= (p.alpha + nf) * (p.beta + nf) / ((p.gamma + nf) * (nf + 1.0)) * x;
        sum += term;
        // Remaining terms shrink at least geometrically once n exceeds the parameters.
        let ratio = x.norm() * ((p.alpha + nf + 1.0) * (p.beta + nf + 1.0) / ((p.gamma + nf + 1.0) * (nf + 2.0))).norm();
        if nf > 4.0 && ratio < 1.0 && term.norm() * ratio / (1.0 - ratio) < 1e-16 * sum.norm().max(1.0) {
            return Ok(sum);
        }
    }
    Err(Error::Invalid("hypergeometric series did not converge".into()))
}

pub fn lemma_a(a: C64, b: C64, c_: C64) -> CMat {
    CMat::from_row_slice(2, 2, &[a + b, c(0.0, 0.0), c_, c(0.0, 0.0)])
}

pub fn lemma_b(a: C64, b: C64, c_: C64) -> CMat {
    CMat::from_row_slice(2, 2, &[-b - c_, a, c(0.0, 0.0), c(0.0, 0.0)])
}

fn near_integer(z: C64) -> bool {
    z.im.abs() < 1e-12 && (z.re - z.re.round()).abs() < 1e-12
}

/// Closed-form `Φ(A, B)` for the 2×2 pair, from the relation between the
/// eigenvector frames `e` of `A` and `f` of `B`.
pub fn phi_2x2(a: C64, b: C64, c_: C64) -> Result<CMat> {
    for z in [a, b, c_, a + b, a + c_, b + c_, a + b + c_] {
        if near_integer(z) {
            return Err(Error::Invalid("parameters must be non-integral".into()));
        }
    }
    let one = c(1.0, 0.0);
    let s = |z: C64| (z * PI).sin();
    let e = CMat::from_row_slice(2, 2, &[a + b, c(0.0, 0.0), c_, b]);
    let f = CMat::from_row_slice(2, 2, &[a, b, b + c_, c(0.0, 0.0)]);
    let l_sin = CMat::from_row_slice(2, 2, &[s(b), -s(c_), c(0.0, 0.0), s(b + c_)]);
    let l_gam = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
        rgamma(one + a + b) * rgamma(one + c_) * rgamma(one - a - b - c_),
        rgamma(one + a) * rgamma(one + b) * rgamma(one - a - b),
    ]));
    let r_sin = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), s(a + b), s(b), -s(a)]);
    let r_gam = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
        rgamma(one + a) * rgamma(one + b + c_) * rgamma(one - a - b - c_),
        rgamma(one + b) * rgamma(one + c_) * rgamma(one - b - c_),
    ]));
    let l = mul(&l_sin, &l_gam);
    let r = mul(&r_sin, &r_gam);
    // Row k of L acting on the frame (e1, e2) is Σ_j L_kj e_j, i.e. E Lᵀ.
    let lhs = mul(&e, &l.transpose());
    let rhs = mul(&f, &r.transpose());
    Ok(mul(&rhs, &inv(&lhs)?))
}

pub fn oracle_match(a: C64, b: C64, c_: C64, opts: &KzOptions) -> Result<f64> {
    let closed = phi_2x2(a, b, c_)?;
    let numeric = associator(&lemma_a(a, b, c_), &lemma_b(a, b, c_), opts)?;
    Ok((closed - numeric).norm())
}

/// The four Gauss solutions at `x`, for `α = −a`, `β = c`, `γ = 1 − a − b`.
pub fn gauss_solutions(a: C64, b: C64, c_: C64, x: f64) -> Result<[C64; 4]> {
    let (al, be, ga) = (-a, c_, c(1.0, 0.0) - a - b);
    let one = c(1.0, 0.0);
    let xc = c(x, 0.0);
    let yc = c(1.0 - x, 0.0);
    let pre = xc.powc(one - ga) * yc.powc(ga - al - be);
    let u1 = pre * gauss_2f1(HyperParams { alpha: one - al, beta: one - be, gamma: 2.0 - ga }, xc)?;
    let u2 = gauss_2f1(HyperParams { alpha: al, beta: be, gamma: ga }, xc)?;
    let u3 = gauss_2f1(HyperParams { alpha: al, beta: be, gamma: one + al + be - ga }, yc)?;
    let u4 = pre * gauss_2f1(HyperParams { alpha: one - al, beta: one - be, gamma: one - al - be + ga }, yc)?;
    Ok([u1, u2, u3, u4])
}

/// Residual of the classical connection formula expressing `u₃` through `u₂` and `u₁`.
pub fn connection_residual(a: C64, b: C64, c_: C64, x: f64) -> Result<f64> {
    let [u1, u2, u3, _] = gauss_solutions(a, b, c_, x)?;
    let (al, be, ga) = (-a, c_, c(1.0, 0.0) - a - b);
    let one = c(1.0, 0.0);
    let lhs = gamma(al) * gamma(be) / gamma(al + be - ga + one) * u3;
    let rhs = gamma(al) * gamma(be) * gamma(one - ga) / (gamma(al - ga + one) * gamma(be - ga + one)) * u2
        + gamma(ga - one) * u1;
    Ok((lhs - rhs).norm() / lhs.norm().max(1.0))
}

/// Residual of the mirrored formula expressing `u₂` through `u₃` and `u₄`.
pub fn connection_residual_mirror(a: C64, b: C64, c_: C64, x: f64) -> Result<f64> {
    let [_, u2, u3, u4] = gauss_solutions(a, b, c_, x)?;
    let (al, be, ga) = (-a, c_, c(1.0, 0.0) - a - b);
    let lhs = gamma(al) * gamma(be) / gamma(ga) * u2;
    let rhs = gamma(al) * gamma(be) * gamma(ga - al - be) / (gamma(ga - al) * gamma(ga - be)) * u3
        + gamma(al + be - ga) * u4;
    Ok((lhs - rhs).norm() / lhs.norm().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dist_id;
    use num_rational::Rational64 as Q;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gamma_values() {
        assert!((gamma(c(5.0, 0.0)) - c(24.0, 0.0)).norm() < 1e-11);
        assert!((gamma(c(0.5, 0.0)) - c(PI.sqrt(), 0.0)).norm() < 1e-13);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<C64> = (0..20).map(|_| c(rng.gen_range(-3.0..3.0), rng.gen_range(-2.0..2.0))).collect();
        assert!(gamma_self_check(&pts) < 1e-11);
    }

    #[test]
    fn hypergeometric_values() {
        let one = c(1.0, 0.0);
        let p = HyperParams { alpha: one, beta: one, gamma: c(2.0, 0.0) };
        assert!((gauss_2f1(p, c(0.5, 0.0)).unwrap() - c(2.0 * 2f64.ln(), 0.0)).norm() < 1e-13);
        assert!((gauss_2f1(p, c(0.0, 0.0)).unwrap() - one).norm() < 1e-15);
        let a = c(0.2, 0.1);
        let b = c(-0.7, 0.4);
        let got = gauss_2f1(HyperParams { alpha: a, beta: b, gamma: b }, c(0.3, 0.0)).unwrap();
        assert!((got - c(0.7, 0.0).powc(-a)).norm() < 1e-13);
        assert!(gauss_2f1(HyperParams { alpha: one, beta: one, gamma: c(-2.0, 0.0) }, c(0.1, 0.0)).is_err());
        assert!(gauss_2f1(p, c(0.9, 0.0)).is_err());
    }

    #[test]
    fn frame_relation_exact() {
        // [[b, −c], [0, b+c]] (e1; e2) = [[0, a+b], [b, −a]] (f1; f2) in exact arithmetic.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let mut r = || Q::new(rng.gen_range(-20..20), rng.gen_range(1..9));
            let (a, b, cc) = (r(), r(), r());
            let e1 = [a + b, cc];
            let e2 = [Q::from_integer(0), b];
            let f1 = [a, b + cc];
            let f2 = [b, Q::from_integer(0)];
            for k in 0..2 {
                assert_eq!(b * e1[k] - cc * e2[k], (a + b) * f2[k]);
                assert_eq!((b + cc) * e2[k], b * f1[k] - a * f2[k]);
            }
        }
    }

    #[test]
    fn connection_formulas() {
        for (a, b, cc) in [(c(0.0, 0.35), c(0.0, 0.35), c(0.0, 0.35)), (c(0.13, 0.2), c(-0.21, 0.05), c(0.3, -0.1))] {
            assert!(connection_residual(a, b, cc, 0.5).unwrap() < 1e-10);
            assert!(connection_residual_mirror(a, b, cc, 0.5).unwrap() < 1e-10);
        }
    }

    #[test]
    fn closed_form_matches_series() {
        let opts = KzOptions::default();
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
        for (a, b, cc) in triples {
            let r = oracle_match(a, b, cc, &opts).unwrap();
            assert!(r < 1e-9, "{a} {b} {cc}: {r}");
        }
    }

    #[test]
    fn small_parameters_near_identity() {
        let e = c(0.0, 1e-4);
        assert!(dist_id(&phi_2x2(e, e, e).unwrap()) < 1e-6);
        assert!(phi_2x2(c(1.0, 0.0), e, e).is_err());
    }
}
