//! von Mises-Fisher density, exact rejection sampling, and concentration
//! estimation. All Bessel work happens in log space so kappa up to the
//! hundreds stays finite.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, normalize};
use crate::scalar::{Real, SampleReal};

/// Lanczos approximation, g = 7, 9 terms.
pub fn ln_gamma<T: Real>(x: T) -> T {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < T::of(0.5) {
        // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        let pi = T::PI();
        return (pi / (pi * x).sin()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = T::of(COEF[0]);
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += T::of(c) / (x + T::of(i as f64));
    }
    let t = x + T::of(7.5);
    T::of(0.5) * (T::of(2.0) * T::PI()).ln() + (x + T::of(0.5)) * t.ln() - t + acc.ln()
}

/// log I_nu(x) for nu >= 0, x >= 0. Series below x = 50 (or for large orders),
/// Hankel large-argument expansion otherwise; both evaluated in log space.
pub fn log_bessel_i<T: Real>(nu: T, x: T) -> T {
    assert!(nu >= T::zero() && x >= T::zero());
    if x == T::zero() {
        return if nu == T::zero() {
            T::zero()
        } else {
            T::neg_infinity()
        };
    }
    if x < T::of(50.0) || nu > T::of(10.0) {
        log_bessel_series(nu, x)
    } else {
        log_bessel_asymptotic(nu, x)
    }
}

fn log_bessel_series<T: Real>(nu: T, x: T) -> T {
    let half = (x / T::of(2.0)).ln();
    let mut terms: Vec<T> = Vec::with_capacity(64);
    let mut best = T::neg_infinity();
    let mut m = 0usize;
    loop {
        let mf = T::of(m as f64);
        let t = (T::of(2.0) * mf + nu) * half
            - ln_gamma(mf + T::one())
            - ln_gamma(mf + nu + T::one());
        if t > best {
            best = t;
        }
        let decayed = t < best - T::of(60.0) && m > 4;
        terms.push(t);
        m += 1;
        if decayed || m > 5000 {
            break;
        }
    }
    let sum: T = terms.iter().map(|&t| (t - best).exp()).sum();
    best + sum.ln()
}

fn log_bessel_asymptotic<T: Real>(nu: T, x: T) -> T {
    let mu4 = T::of(4.0) * nu * nu;
    let mut c = T::one();
    let mut sum = T::one();
    let mut prev = T::infinity();
    for k in 1..=60u32 {
        let kf = T::of(k as f64);
        let odd = T::of(2.0) * kf - T::one();
        c = c * -(mu4 - odd * odd) / (T::of(8.0) * kf * x);
        if c.abs() >= prev {
            break;
        }
        sum += c;
        prev = c.abs();
        if c.abs() < T::of(1e-18) {
            break;
        }
    }
    x - T::of(0.5) * (T::of(2.0) * T::PI() * x).ln() + sum.ln()
}

/// Mean-resultant-length oracle A_p(kappa) = I_{p/2}(kappa) / I_{p/2-1}(kappa).
pub fn bessel_ratio_a_p<T: Real>(p: usize, kappa: T) -> T {
    if kappa == T::zero() {
        return T::zero();
    }
    let half_p = T::of(p as f64 / 2.0);
    (log_bessel_i(half_p, kappa) - log_bessel_i(half_p - T::one(), kappa)).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VmfParams<T = f64> {
    pub mu: Vec<T>,
    pub kappa: T,
}

impl<T: Real> VmfParams<T> {
    /// mu is renormalized to exact unit length; rejects inputs off the sphere
    /// by more than 1e-6 or dimensions below 2.
    pub fn new(mu: Vec<T>, kappa: T) -> Result<Self> {
        if mu.len() < 2 {
            return Err(Error::input("vMF dimension must be at least 2"));
        }
        if !kappa.is_finite() || kappa < T::zero() {
            return Err(Error::input("kappa must be finite and non-negative"));
        }
        let n = norm2(&mu);
        if (n - T::one()).abs() > T::of(1e-6) {
            return Err(Error::input(format!(
                "mean direction norm {n} is not within 1e-6 of 1"
            )));
        }
        let mut mu = mu;
        normalize(&mut mu);
        Ok(VmfParams { mu, kappa })
    }

    pub fn p(&self) -> usize {
        self.mu.len()
    }
}

/// log C_p(kappa); the kappa = 0 branch is the exact uniform constant.
pub fn vmf_log_normalizer<T: Real>(p: usize, kappa: T) -> T {
    let pf = T::of(p as f64);
    if kappa == T::zero() {
        // uniform density Gamma(p/2) / (2 pi^{p/2})
        return ln_gamma(pf / T::of(2.0)) - T::of(2.0).ln() - pf / T::of(2.0) * T::PI().ln();
    }
    let nu = pf / T::of(2.0) - T::one();
    nu * kappa.ln() - pf / T::of(2.0) * (T::of(2.0) * T::PI()).ln() - log_bessel_i(nu, kappa)
}

pub fn vmf_log_density<T: Real>(y: &[T], params: &VmfParams<T>) -> Result<T> {
    if y.len() != params.p() {
        return Err(Error::input(format!(
            "point dimension {} does not match vMF dimension {}",
            y.len(),
            params.p()
        )));
    }
    let n = norm2(y);
    if (n - T::one()).abs() > T::of(1e-6) {
        return Err(Error::input(format!("point norm {n} is off the sphere")));
    }
    Ok(vmf_log_normalizer(params.p(), params.kappa) + params.kappa * dot(&params.mu, y))
}

/// Uniform draw on S^{p-1} by normalizing a spherically symmetric vector.
pub fn uniform_sphere<T: SampleReal, R: Rng + ?Sized>(p: usize, rng: &mut R) -> Vec<T> {
    loop {
        let mut v: Vec<T> = (0..p).map(|_| T::standard_normal(rng)).collect();
        let n = norm2(&v);
        if n > T::of(1e-9) {
            for x in v.iter_mut() {
                *x /= n;
            }
            return v;
        }
    }
}

const REJECTION_CAP: u64 = 1_000_000;

/// Wood's rejection sampler: envelope on the pole coordinate, uniform tangent,
/// then a Householder rotation from the pole onto mu.
pub fn vmf_sample<T: SampleReal, R: Rng + ?Sized>(
    params: &VmfParams<T>,
    rng: &mut R,
) -> Result<Vec<T>> {
    let p = params.p();
    let kappa = params.kappa;
    if kappa == T::zero() {
        return Ok(uniform_sphere(p, rng));
    }
    let pm1 = T::of((p - 1) as f64);
    let b = (-(T::of(2.0) * kappa) + (T::of(4.0) * kappa * kappa + pm1 * pm1).sqrt()) / pm1;
    let x0 = (T::one() - b) / (T::one() + b);
    let c = kappa * x0 + pm1 * (T::one() - x0 * x0).ln();
    let mut w = T::zero();
    let mut accepted = false;
    for _ in 0..REJECTION_CAP {
        let z = T::beta(rng, pm1 / T::of(2.0), pm1 / T::of(2.0));
        let cand = (T::one() - (T::one() + b) * z) / (T::one() - (T::one() - b) * z);
        let u: T = T::open01(rng);
        if kappa * cand + pm1 * (T::one() - x0 * cand).ln() - c >= u.ln() {
            w = cand;
            accepted = true;
            break;
        }
    }
    if !accepted {
        return Err(Error::numerical(
            "vMF rejection sampler exceeded its iteration cap",
        ));
    }
    // pole-frame sample (w, sqrt(1-w^2) v) with v uniform on S^{p-2}
    let v: Vec<T> = uniform_sphere(p - 1, rng);
    let tangent = (T::one() - w * w).max(T::zero()).sqrt();
    let mut y = Vec::with_capacity(p);
    y.push(w);
    y.extend(v.into_iter().map(|vi| tangent * vi));
    // reflect the pole e_1 onto mu
    let mut u: Vec<T> = params.mu.iter().map(|&m| -m).collect();
    u[0] += T::one();
    let un = norm2(&u);
    if un > T::of(1e-12) {
        let proj = dot(&u, &y) * T::of(2.0) / (un * un);
        for k in 0..p {
            y[k] -= proj * u[k];
        }
    }
    normalize(&mut y);
    Ok(y)
}

/// kappa_hat = (p-1) / (2 (1 - mu^T ybar)) with ybar the plain mean of points.
pub fn kappa_mle<T: Real>(mu: &[T], points: &[Vec<T>]) -> Result<T> {
    if points.is_empty() {
        return Err(Error::input("kappa estimation needs at least one point"));
    }
    let p = mu.len();
    if points.iter().any(|y| y.len() != p) {
        return Err(Error::input("point dimension mismatch"));
    }
    let mut ybar = vec![T::zero(); p];
    for y in points {
        for k in 0..p {
            ybar[k] += y[k];
        }
    }
    let m = T::of(points.len() as f64);
    for v in ybar.iter_mut() {
        *v /= m;
    }
    let align = dot(mu, &ybar);
    if align >= T::one() - T::of(1e-12) {
        return Err(Error::numerical(
            "concentration is undefined: points coincide with the mean direction",
        ));
    }
    Ok((T::of(p as f64) - T::one()) / (T::of(2.0) * (T::one() - align)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn log_i_half(x: f64) -> f64 {
        // I_{1/2}(x) = sqrt(2/(pi x)) sinh x, stable for large x
        0.5 * (2.0 / (std::f64::consts::PI * x)).ln() + x + (-(-2.0 * x).exp_m1()).ln()
            - 2.0f64.ln()
    }

    fn log_i_three_halves(x: f64) -> f64 {
        // I_{3/2}(x) = sqrt(2/(pi x)) (cosh x - sinh x / x)
        let scale = 0.5 * (2.0 / (std::f64::consts::PI * x)).ln();
        // cosh x - sinh x / x = e^x ((1 + e^{-2x})/2 - (1 - e^{-2x})/(2x))
        let e = (-2.0 * x).exp();
        scale + x + ((1.0 + e) / 2.0 - (1.0 - e) / (2.0 * x)).ln()
    }

    #[test]
    fn bessel_half_integer_closed_forms() {
        for x in [0.25, 1.0, 5.0, 25.0, 49.5, 50.5, 120.0, 400.0] {
            let got = log_bessel_i(0.5, x);
            let want = log_i_half(x);
            assert!((got - want).abs() < 1e-11, "nu=1/2 x={x}: {got} vs {want}");
            let got = log_bessel_i(1.5, x);
            let want = log_i_three_halves(x);
            assert!((got - want).abs() < 1e-11, "nu=3/2 x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn bessel_branches_agree_at_cutover() {
        for nu in [0.0f64, 0.5, 1.0, 2.5, 5.0] {
            let series = log_bessel_series(nu, 50.0);
            let asym = log_bessel_asymptotic(nu, 50.0);
            assert!(
                (series - asym).abs() < 1e-11,
                "nu={nu}: series {series} vs asymptotic {asym}"
            );
        }
    }

    #[test]
    fn ratio_matches_coth_identity() {
        // A_3(k) = coth k - 1/k
        for k in [0.5f64, 1.0, 10.0, 140.0, 400.0] {
            let got = bessel_ratio_a_p(3, k);
            let want = 1.0 / k.tanh() - 1.0 / k;
            assert!((got - want).abs() < 1e-10, "k={k}: {got} vs {want}");
        }
        assert_eq!(bessel_ratio_a_p(3, 0.0), 0.0);
    }

    #[test]
    fn uniform_density_constant() {
        let p = VmfParams::new(vec![0.0, 0.0, 1.0], 0.0).unwrap();
        let want = (1.0 / (4.0 * std::f64::consts::PI)).ln();
        for y in [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.6, 0.0, 0.8]] {
            assert_eq!(vmf_log_density(&y, &p).unwrap(), want);
        }
    }

    #[test]
    fn density_closed_form_kappa_2() {
        let mu = vec![0.0, 0.0, 1.0];
        let p = VmfParams::new(mu.clone(), 2.0).unwrap();
        let e2 = std::f64::consts::E.powi(2);
        let want = (1.0 / (std::f64::consts::PI * (e2 - 1.0 / e2))).ln() + 2.0;
        let got = vmf_log_density(&mu, &p).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn density_peaks_at_mean() {
        let mu = vec![0.6, 0.8, 0.0];
        let p = VmfParams::new(mu.clone(), 7.0).unwrap();
        let at_mu = vmf_log_density(&mu, &p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let y: Vec<f64> = uniform_sphere(3, &mut rng);
            assert!(vmf_log_density(&y, &p).unwrap() <= at_mu + 1e-12);
        }
    }

    #[test]
    fn density_rejects_off_sphere() {
        let p = VmfParams::new(vec![1.0, 0.0], 1.0).unwrap();
        assert!(vmf_log_density(&[1.1, 0.0], &p).is_err());
        assert!(vmf_log_density(&[1.0, 0.0, 0.0], &p).is_err());
        assert!(VmfParams::new(vec![2.0, 0.0], 1.0).is_err());
        assert!(VmfParams::new(vec![1.0, 0.0], -1.0).is_err());
        assert!(VmfParams::<f64>::new(vec![1.0], 1.0).is_err());
    }

    #[test]
    fn samples_unit_norm_and_concentrated() {
        let mu: Vec<f64> = vec![0.0, 1.0, 0.0];
        let p = VmfParams::new(mu.clone(), 50.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut mean = [0.0f64; 3];
        for _ in 0..2000 {
            let y = vmf_sample(&p, &mut rng).unwrap();
            assert!((norm2(&y) - 1.0).abs() < 1e-9);
            for k in 0..3 {
                mean[k] += y[k];
            }
        }
        for v in mean.iter_mut() {
            *v /= 2000.0;
        }
        // resultant length concentrates near A_3(50) along mu
        let want = bessel_ratio_a_p(3, 50.0);
        assert!((mean[1] - want).abs() < 0.02, "{} vs {want}", mean[1]);
        assert!(mean[0].abs() < 0.02 && mean[2].abs() < 0.02);
    }

    #[test]
    fn kappa_zero_sampling_is_spread_out() {
        let p = VmfParams::new(vec![1.0, 0.0, 0.0], 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut mean = [0.0f64; 3];
        let n = 20_000;
        for _ in 0..n {
            let y = vmf_sample(&p, &mut rng).unwrap();
            for k in 0..3 {
                mean[k] += y[k];
            }
        }
        let len = (mean.iter().map(|v| (v / n as f64).powi(2)).sum::<f64>()).sqrt();
        assert!(len < 0.02, "resultant length {len}");
    }

    #[test]
    fn p2_sampler_works() {
        let p = VmfParams::<f64>::new(vec![0.0, 1.0], 20.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut mean_y = 0.0;
        for _ in 0..500 {
            let y = vmf_sample(&p, &mut rng).unwrap();
            assert!((norm2(&y) - 1.0).abs() < 1e-9);
            mean_y += y[1];
        }
        assert!(mean_y / 500.0 > 0.9);
    }

    #[test]
    fn kappa_mle_known_values() {
        // p=3, mu^T ybar = 0.5 -> 2; orthogonal -> 1
        let mu: Vec<f64> = vec![0.0, 0.0, 1.0];
        let got = kappa_mle(&mu, &[vec![0.0, 0.0, 0.5]]).unwrap();
        assert!((got - 2.0).abs() < 1e-12);
        let got = kappa_mle(&mu, &[vec![1.0, 0.0, 0.0]]).unwrap();
        assert!((got - 1.0).abs() < 1e-12);
        assert!(kappa_mle(&mu, &[mu.clone(), mu.clone()]).is_err());
        assert!(kappa_mle(&mu, &[]).is_err());
    }

    #[test]
    fn density_integrates_to_one_on_s2() {
        // midpoint lat-long quadrature of the density over the whole sphere
        let mu = {
            let v = 3.0f64.sqrt().recip();
            vec![v, v, v]
        };
        for kappa in [0.0, 1.0, 10.0, 140.0] {
            let params = VmfParams::new(mu.clone(), kappa).unwrap();
            let (nt, np) = (600usize, 600usize);
            let (ht, hp) = (std::f64::consts::PI / nt as f64, std::f64::consts::TAU / np as f64);
            let mut total = 0.0f64;
            for it in 0..nt {
                let theta = (it as f64 + 0.5) * ht;
                let (st, ct) = theta.sin_cos();
                for ip in 0..np {
                    let phi = (ip as f64 + 0.5) * hp;
                    let y = [st * phi.cos(), st * phi.sin(), ct];
                    total += vmf_log_density(&y, &params).unwrap().exp() * st;
                }
            }
            total *= ht * hp;
            assert!((total - 1.0).abs() < 1e-4, "kappa={kappa}: integral {total}");
        }
    }

    #[test]
    fn sampler_deterministic_given_seed() {
        let p = VmfParams::new(vec![0.0, 0.0, 1.0], 140.0).unwrap();
        let a: Vec<f64> = vmf_sample(&p, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b: Vec<f64> = vmf_sample(&p, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
    }
}
