//! Closed-form statistics of the photon-number-difference channel.
//!
//! Bob's correct-basis sample `n` is modelled as an equal-weight mixture of
//! two Gaussians centred on `+<n>` and `-<n>` with common width `delta`. Every
//! quantity here (postselection efficiency, bit error rate) is an exact
//! function of `erfc` evaluated at the threshold edges.

use crate::error::{Error, Result};
use crate::num::Real;

/// Argument below which `erfc` is evaluated as `1 - erf` from the Maclaurin
/// series; above it the Laplace continued fraction converges quickly.
const SERIES_CUTOFF: f64 = 2.0;
const MAX_TERMS: usize = 500;

/// Complementary error function `2/sqrt(pi) * int_z^inf exp(-t^2) dt`.
///
/// Rejects NaN and infinite arguments.
pub fn erfc<T: Real>(z: T) -> Result<T> {
    if !z.is_finite() {
        return Err(Error::domain(format!(
            "erfc argument must be finite, got {z}"
        )));
    }
    Ok(erfc_total(z))
}

/// `erfc` extended to the closed real line; NaN propagates.
pub(crate) fn erfc_total<T: Real>(z: T) -> T {
    if z.is_nan() {
        return z;
    }
    if z < T::zero() {
        return T::lit(2.0) - erfc_nonneg(-z);
    }
    erfc_nonneg(z)
}

fn erfc_nonneg<T: Real>(z: T) -> T {
    if z == T::infinity() {
        return T::zero();
    }
    if z < T::lit(SERIES_CUTOFF) {
        T::one() - erf_series(z)
    } else {
        erfc_continued_fraction(z)
    }
}

// erf(z) = 2/sqrt(pi) * sum_k (-1)^k z^(2k+1) / (k! (2k+1))
fn erf_series<T: Real>(z: T) -> T {
    let z2 = z * z;
    let mut power = z; // (-1)^k z^(2k+1) / k!
    let mut sum = z;
    for k in 1..MAX_TERMS {
        power = -power * z2 / T::count(k);
        let term = power / T::count(2 * k + 1);
        sum = sum + term;
        if term.abs() <= T::epsilon() * sum.abs() {
            break;
        }
    }
    sum * T::FRAC_2_SQRT_PI()
}

// erfc(z) = exp(-z^2)/sqrt(pi) / (z + (1/2)/(z + 1/(z + (3/2)/(z + ...)))),
// evaluated with the modified Lentz algorithm.
fn erfc_continued_fraction<T: Real>(z: T) -> T {
    let tiny = T::min_positive_value().sqrt();
    let half = T::lit(0.5);
    let mut f = z;
    let mut c = z;
    let mut d = T::zero();
    for k in 1..MAX_TERMS {
        let a = half * T::count(k);
        d = z + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        d = d.recip();
        c = z + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        let delta = c * d;
        f = f * delta;
        if (delta - T::one()).abs() <= T::epsilon() {
            break;
        }
    }
    (-z * z).exp() / (T::PI().sqrt() * f)
}

/// Photoelectron-difference distribution for one condition: the mixture
/// centre `mean_diff` (`<n>`) and component width `sigma` (`delta`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianModel<T> {
    mean_diff: T,
    sigma: T,
}

impl<T: Real> GaussianModel<T> {
    pub fn new(mean_diff: T, sigma: T) -> Result<Self> {
        if !mean_diff.is_finite() {
            return Err(Error::domain(format!(
                "mean_diff must be finite, got {mean_diff}"
            )));
        }
        if !(sigma.is_finite() && sigma > T::zero()) {
            return Err(Error::domain(format!(
                "sigma must be finite and positive, got {sigma}"
            )));
        }
        Ok(Self { mean_diff, sigma })
    }

    pub fn mean_diff(&self) -> T {
        self.mean_diff
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    /// Argument scale `1 / (sqrt(2) * sigma)` shared by every erfc term.
    fn erfc_scale(&self) -> T {
        (T::SQRT_2() * self.sigma).recip()
    }
}

/// Bob's postselection rule: conclusive only when `|n| > threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionPolicy<T> {
    threshold: T,
}

impl<T: Real> DecisionPolicy<T> {
    pub fn new(threshold: T) -> Result<Self> {
        if !(threshold.is_finite() && threshold >= T::zero()) {
            return Err(Error::domain(format!(
                "threshold must be finite and non-negative, got {threshold}"
            )));
        }
        Ok(Self { threshold })
    }

    pub fn threshold(&self) -> T {
        self.threshold
    }
}

/// Normal density `N(x; mean, sigma)`.
pub fn normal_pdf<T: Real>(x: T, mean: T, sigma: T) -> T {
    let u = (x - mean) / sigma;
    (-(u * u) * T::lit(0.5)).exp() / (sigma * (T::TAU()).sqrt())
}

/// Equal-weight two-component density
/// `p(n) = 1/2 [N(n; <n>, delta) + N(n; -<n>, delta)]`, which integrates to one.
pub fn mixture_pdf<T: Real>(n: T, model: &GaussianModel<T>) -> T {
    let half = T::lit(0.5);
    half * (normal_pdf(n, model.mean_diff, model.sigma)
        + normal_pdf(n, -model.mean_diff, model.sigma))
}

/// Probability that a correct-basis sample falls outside `[-N0, N0]`:
/// `1/2 {erfc[(N0 - <n>)/(sqrt2 delta)] + erfc[(N0 + <n>)/(sqrt2 delta)]}`.
pub fn postselection_efficiency<T: Real>(
    policy: &DecisionPolicy<T>,
    model: &GaussianModel<T>,
) -> T {
    let k = model.erfc_scale();
    let lower = erfc_total((policy.threshold - model.mean_diff) * k);
    let upper = erfc_total((policy.threshold + model.mean_diff) * k);
    T::lit(0.5) * (lower + upper)
}

/// Bit error rate among conclusive correct-basis decisions:
/// `erfc[(N0 + <n>)/(sqrt2 delta)] / (2 P)`.
pub fn ber<T: Real>(policy: &DecisionPolicy<T>, model: &GaussianModel<T>) -> Result<T> {
    let efficiency = postselection_efficiency(policy, model);
    if !(efficiency > T::zero()) {
        return Err(Error::DegeneratePolicy {
            threshold: policy.threshold.to_f64_lossy(),
        });
    }
    let wrong_tail = erfc_total((policy.threshold + model.mean_diff) * model.erfc_scale());
    Ok(wrong_tail / (T::lit(2.0) * efficiency))
}

/// Noise of `sigma_a` relative to `sigma_b` in decibels: `10 log10(sigma_a^2 / sigma_b^2)`.
pub fn db_from_sigma_ratio<T: Real>(sigma_a: T, sigma_b: T) -> Result<T> {
    for (name, s) in [("sigma_a", sigma_a), ("sigma_b", sigma_b)] {
        if !(s.is_finite() && s > T::zero()) {
            return Err(Error::domain(format!(
                "{name} must be finite and positive, got {s}"
            )));
        }
    }
    let ratio = sigma_a / sigma_b;
    Ok(T::lit(10.0) * (ratio * ratio).log10())
}

/// Inverse of the decibel conversion: variance ratio for a given dB figure.
pub fn variance_ratio_from_db<T: Real>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(m: f64, s: f64) -> GaussianModel<f64> {
        GaussianModel::new(m, s).unwrap()
    }

    fn policy(n0: f64) -> DecisionPolicy<f64> {
        DecisionPolicy::new(n0).unwrap()
    }

    #[test]
    fn erfc_at_zero_is_one() {
        assert_eq!(erfc(0.0_f64).unwrap(), 1.0);
        assert_eq!(erfc(0.0_f32).unwrap(), 1.0);
    }

    #[test]
    fn erfc_rejects_non_finite() {
        assert!(matches!(erfc(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(erfc(f64::INFINITY), Err(Error::Domain(_))));
        assert!(matches!(erfc(f64::NEG_INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn erfc_reflection_on_grid() {
        for i in 0..=2000 {
            let z = -8.0 + 16.0 * i as f64 / 2000.0;
            let s = erfc(z).unwrap() + erfc(-z).unwrap();
            assert!((s - 2.0).abs() < 1e-14, "z = {z}: {s}");
        }
    }

    #[test]
    fn erfc_strictly_decreasing_inside_resolvable_range() {
        let mut prev = erfc(-5.0_f64).unwrap();
        for i in 1..=1000 {
            let z = -5.0 + 10.0 * i as f64 / 1000.0;
            let v = erfc(z).unwrap();
            assert!(v < prev, "not decreasing at {z}");
            prev = v;
        }
    }

    #[test]
    fn erfc_range_is_open_interval() {
        for z in [-5.0, -1.0, 0.3, 2.0, 4.0, 20.0] {
            let v = erfc(z).unwrap();
            assert!((0.0..=2.0).contains(&v));
        }
        assert!(erfc(26.0_f64).unwrap() >= 0.0);
        assert_eq!(erfc_total(f64::INFINITY), 0.0);
        assert_eq!(erfc_total(f64::NEG_INFINITY), 2.0);
    }

    #[test]
    fn erfc_matches_series_branch_at_cutoff() {
        let below = 1.0 - erf_series(SERIES_CUTOFF);
        let above = erfc_continued_fraction(SERIES_CUTOFF);
        assert!((below - above).abs() < 1e-14);
    }

    #[test]
    fn erfc_f32_close_to_f64() {
        for z in [-3.0_f32, -0.7, 0.0, 0.5762, 1.9, 2.1, 3.5] {
            let a = erfc(z).unwrap() as f64;
            let b = erfc(z as f64).unwrap();
            assert!((a - b).abs() < 1e-6, "{z}: {a} vs {b}");
        }
    }

    #[test]
    fn model_and_policy_validation() {
        assert!(GaussianModel::new(0.0, 0.0).is_err());
        assert!(GaussianModel::new(0.0, -1.0).is_err());
        assert!(GaussianModel::new(f64::NAN, 1.0).is_err());
        assert!(GaussianModel::new(f64::INFINITY, 1.0).is_err());
        assert!(GaussianModel::new(0.0, f64::INFINITY).is_err());
        assert!(DecisionPolicy::new(-1.0).is_err());
        assert!(DecisionPolicy::new(f64::NAN).is_err());
        assert!(DecisionPolicy::new(0.0).is_ok());
    }

    #[test]
    fn mixture_peak_of_standard_normal() {
        let v = mixture_pdf(0.0, &model(0.0, 1.0));
        assert!((v - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mixture_direct_evaluation() {
        let m = model(200.0, 145.0);
        let direct = 0.5 * (normal_pdf(200.0, 200.0, 145.0) + normal_pdf(200.0, -200.0, 145.0));
        // 1/2 [1/(145 sqrt(2pi)) + exp(-400^2/(2*145^2))/(145 sqrt(2pi))]
        let by_hand = 0.5 / (145.0 * (2.0 * std::f64::consts::PI).sqrt())
            * (1.0 + (-(400.0_f64 * 400.0) / (2.0 * 145.0 * 145.0)).exp());
        assert!((mixture_pdf(200.0, &m) - direct).abs() < 1e-18);
        assert!((direct - by_hand).abs() < 1e-15);
    }

    #[test]
    fn mixture_is_even() {
        let m = model(123.0, 77.0);
        for n in [-500.0, -123.0, -1.0, 0.5, 42.0, 300.0] {
            assert_eq!(mixture_pdf(n, &m), mixture_pdf(-n, &m));
        }
    }

    #[test]
    fn zero_threshold_keeps_everything() {
        for (m, s) in [(200.0, 270.0), (0.0, 1.0), (-50.0, 3.0), (1e4, 1.0)] {
            assert_eq!(postselection_efficiency(&policy(0.0), &model(m, s)), 1.0);
        }
    }

    #[test]
    fn zero_mean_carries_no_information() {
        for (n0, s) in [(0.0, 1.0), (20.0, 145.0), (500.0, 270.0)] {
            assert_eq!(ber(&policy(n0), &model(0.0, s)).unwrap(), 0.5);
        }
    }

    #[test]
    fn reference_error_rates() {
        let coherent = ber(&policy(20.0), &model(200.0, 270.0)).unwrap();
        let twin = ber(&policy(20.0), &model(200.0, 145.0)).unwrap();
        assert!((coherent - 0.217).abs() <= 1e-3, "{coherent}");
        assert!((twin - 0.067).abs() <= 1e-3, "{twin}");
    }

    #[test]
    fn degenerate_threshold_is_reported() {
        let err = ber(&policy(1e6), &model(0.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::DegeneratePolicy { .. }));
    }

    #[test]
    fn decibel_conversion() {
        assert_eq!(db_from_sigma_ratio(3.0, 3.0).unwrap(), 0.0);
        let db = db_from_sigma_ratio(145.0, 270.0).unwrap();
        assert!((db - 20.0 * (145.0_f64 / 270.0).log10()).abs() < 1e-12);
        assert!((db + 5.4).abs() < 0.05);
        let r: f64 = 0.2818;
        assert!((db_from_sigma_ratio(r.sqrt(), 1.0).unwrap() + 5.5).abs() < 1e-3);
        assert!((variance_ratio_from_db(-5.5_f64) - 0.2818).abs() < 1e-4);
        assert!(db_from_sigma_ratio(0.0, 1.0).is_err());
        assert!(db_from_sigma_ratio(1.0, -2.0).is_err());
    }
}
