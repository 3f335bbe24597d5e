//! Reduction of photoelectron-difference samples: histograms, moment fits
//! of the symmetric mixture, Table-I style condition summaries and
//! threshold/encoding sweeps.

use serde::Serialize;

use crate::channel::{
    effective_sigma, encode_pulse, Basis, DetectionParams, EncodingParams, RandomStream,
    SourceKind, SourceModel,
};
use crate::error::{Error, Result};
use crate::num::Real;
use crate::stats::{
    ber, mixture_pdf, normal_pdf, postselection_efficiency, DecisionPolicy, GaussianModel,
};

pub const DEFAULT_BINS: usize = 100;
pub const MIN_FIT_SAMPLES: usize = 100;
pub const TABLE1_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram<T> {
    pub bin_edges: Vec<T>,
    pub counts: Vec<u64>,
    pub bin_width: T,
    pub total_samples: u64,
    pub out_of_range: u64,
}

impl<T: Real> Histogram<T> {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn centers(&self) -> impl Iterator<Item = T> + '_ {
        let half = self.bin_width * T::lit(0.5);
        self.bin_edges[..self.bins()].iter().map(move |&e| e + half)
    }

    /// Counts divided by `total * width`: an estimate of the density.
    pub fn densities(&self) -> Vec<T> {
        let norm = T::count(self.total_samples as usize) * self.bin_width;
        self.counts
            .iter()
            .map(|&c| T::count(c as usize) / norm)
            .collect()
    }
}

/// Equal-width histogram spanning `[min, max]` of the samples. A zero range
/// is widened to `value +- 1`.
pub fn build_histogram<T: Real>(samples: &[T], bins: usize) -> Result<Histogram<T>> {
    if samples.is_empty() {
        return Err(Error::InsufficientData(
            "cannot histogram an empty sample set".into(),
        ));
    }
    if bins < 2 {
        return Err(Error::domain(format!("need at least 2 bins, got {bins}")));
    }
    if let Some(bad) = samples.iter().find(|x| !x.is_finite()) {
        return Err(Error::Data(format!("non-finite sample {bad}")));
    }
    let (mut lo, mut hi) = samples
        .iter()
        .fold((samples[0], samples[0]), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    if lo == hi {
        lo = lo - T::one();
        hi = hi + T::one();
    }
    let width = (hi - lo) / T::count(bins);
    let bin_edges: Vec<T> = (0..=bins).map(|i| lo + width * T::count(i)).collect();
    let mut counts = vec![0u64; bins];
    for &x in samples {
        let idx = ((x - lo) / width)
            .floor()
            .to_usize()
            .unwrap_or(0)
            .min(bins - 1);
        counts[idx] += 1;
    }
    Ok(Histogram {
        bin_edges,
        counts,
        bin_width: width,
        total_samples: samples.len() as u64,
        out_of_range: 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult<T> {
    pub mean_hat: T,
    pub sigma_hat: T,
    pub scale_coefficient: T,
    pub residual: T,
}

/// Mean of `|X|` for `X ~ Normal(m, s)`.
fn folded_mean(m: f64, s: f64) -> f64 {
    if s <= 0.0 {
        return m.abs();
    }
    let u = m / s;
    s * std::f64::consts::FRAC_2_SQRT_PI / std::f64::consts::SQRT_2 * (-0.5 * u * u).exp()
        + m * (1.0 - crate::stats::erfc_total(u / std::f64::consts::SQRT_2))
}

/// Moment estimate of `(<n>, delta)` for the symmetric mixture.
///
/// With `S = E[n^2] = <n>^2 + delta^2` fixed, the folded mean `E|n|` rises
/// monotonically from `sqrt(2S/pi)` (at `<n> = 0`) to `sqrt(S)`, so `<n>` is
/// found by bisection. When `E|n|` is within three standard errors of the
/// `<n> = 0` value the data are treated as a single centred Gaussian.
pub fn fit_mixture_moments<T: Real>(samples: &[T]) -> Result<(T, T)> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "mixture fit needs at least {MIN_FIT_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if let Some(bad) = samples.iter().find(|x| !x.is_finite()) {
        return Err(Error::Data(format!("non-finite sample {bad}")));
    }
    let n = samples.len() as f64;
    let xs = samples.iter().map(|x| x.to_f64_lossy());
    let (sum_abs, sum_sq) = xs.fold((0.0, 0.0), |(a, s), x| (a + x.abs(), s + x * x));
    let mean_abs = sum_abs / n;
    let second = sum_sq / n;
    if second == 0.0 {
        return Err(Error::InsufficientData("all samples are zero".into()));
    }
    let rms = second.sqrt();
    let centred = folded_mean(0.0, rms);

    // Influence of each sample on E|n| - sqrt(2/pi) sqrt(E n^2).
    let c = centred / rms;
    let excess = mean_abs - centred;
    let var_influence = samples
        .iter()
        .map(|x| {
            let x = x.to_f64_lossy();
            let psi = (x.abs() - mean_abs) - c * (x * x - second) / (2.0 * rms);
            psi * psi
        })
        .sum::<f64>()
        / n;
    let std_err = (var_influence / n).sqrt();
    if excess <= 3.0 * std_err {
        return Ok((T::zero(), T::lit(rms)));
    }

    let target = mean_abs.min(rms);
    let (mut lo, mut hi) = (0.0_f64, rms);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let s = (second - mid * mid).max(0.0).sqrt();
        if folded_mean(mid, s) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * rms {
            break;
        }
    }
    let m = 0.5 * (lo + hi);
    let s = (second - m * m).max(0.0).sqrt();
    if s <= 0.0 {
        return Err(Error::InsufficientData(
            "mixture fit collapsed to zero width".into(),
        ));
    }
    Ok((T::lit(m), T::lit(s)))
}

/// Least-squares scale `c` minimising `sum (f_i - c p_i)^2` between histogram
/// densities `f_i` and `pdf` at bin centres; returns `(c, rms residual)`.
pub fn scale_to_histogram<T: Real>(hist: &Histogram<T>, pdf: impl Fn(T) -> T) -> (T, T) {
    let model: Vec<T> = hist.centers().map(pdf).collect();
    let dens = hist.densities();
    let (num, den) = dens
        .iter()
        .zip(&model)
        .fold((T::zero(), T::zero()), |(a, b), (&f, &p)| {
            (a + f * p, b + p * p)
        });
    let c = if den > T::zero() {
        num / den
    } else {
        T::zero()
    };
    let sse = dens
        .iter()
        .zip(&model)
        .fold(T::zero(), |acc, (&f, &p)| acc + (f - c * p) * (f - c * p));
    (c, (sse / T::count(hist.bins())).sqrt())
}

/// Fits the symmetric mixture and scales it onto a `bins`-bin histogram.
pub fn fit_gaussian_mixture_with_bins<T: Real>(samples: &[T], bins: usize) -> Result<FitResult<T>> {
    let (mean_hat, sigma_hat) = fit_mixture_moments(samples)?;
    let model = GaussianModel::new(mean_hat, sigma_hat)?;
    let hist = build_histogram(samples, bins)?;
    let (scale_coefficient, residual) = scale_to_histogram(&hist, |x| mixture_pdf(x, &model));
    if !(scale_coefficient > T::zero()) {
        return Err(Error::InsufficientData(
            "histogram does not overlap fitted model".into(),
        ));
    }
    Ok(FitResult {
        mean_hat,
        sigma_hat,
        scale_coefficient,
        residual,
    })
}

pub fn fit_gaussian_mixture<T: Real>(samples: &[T]) -> Result<FitResult<T>> {
    fit_gaussian_mixture_with_bins(samples, DEFAULT_BINS)
}

/// Sample mean and unbiased standard deviation, with the scale coefficient
/// against a single Gaussian.
pub fn fit_gaussian<T: Real>(samples: &[T]) -> Result<FitResult<T>> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "fit needs at least {MIN_FIT_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().map(|x| x.to_f64_lossy()).sum::<f64>() / n;
    let var = samples
        .iter()
        .map(|x| (x.to_f64_lossy() - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    if !(var > 0.0) {
        return Err(Error::InsufficientData("samples have zero spread".into()));
    }
    let (mean_hat, sigma_hat) = (T::lit(mean), T::lit(var.sqrt()));
    let hist = build_histogram(samples, DEFAULT_BINS)?;
    let (scale_coefficient, residual) =
        scale_to_histogram(&hist, |x| normal_pdf(x, mean_hat, sigma_hat));
    Ok(FitResult {
        mean_hat,
        sigma_hat,
        scale_coefficient,
        residual,
    })
}

/// Channel description used to reproduce the eight source/basis/key conditions.
#[derive(Debug, Clone, Copy)]
pub struct Table1Setup<T> {
    pub mean_photons_per_mode: T,
    pub twin_correlation_db: T,
    pub calibration: T,
    pub encoding: EncodingParams<T>,
    pub detection: DetectionParams<T>,
    pub samples_per_condition: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table1Row<T> {
    pub source: SourceKind,
    pub basis_match: bool,
    pub key: u8,
    pub expected_mean: T,
    pub expected_sigma: T,
    pub mean: T,
    pub sigma: T,
    pub mean_std_error: T,
}

/// Samples every (source, basis match, key) condition and reports its mean
/// and standard deviation. Condition `i` draws from lane `i + 1` of `seed`.
pub fn reproduce_table1<T: Real>(setup: &Table1Setup<T>) -> Result<Vec<Table1Row<T>>> {
    use rayon::prelude::*;

    if setup.samples_per_condition < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "each condition needs at least {MIN_FIT_SAMPLES} samples"
        )));
    }
    let twin = SourceModel::twin_beam(setup.mean_photons_per_mode, setup.twin_correlation_db)?
        .with_calibration(setup.calibration)?;
    let coherent =
        SourceModel::coherent(setup.mean_photons_per_mode)?.with_calibration(setup.calibration)?;
    let mut conditions = Vec::with_capacity(8);
    for source in [twin, coherent] {
        for basis_match in [true, false] {
            for key in [1u8, 0] {
                conditions.push((source, basis_match, key));
            }
        }
    }
    conditions
        .par_iter()
        .enumerate()
        .map(|(i, &(source, basis_match, key))| {
            let mut rng = RandomStream::lane(setup.seed, i as u64 + 1);
            let pulse = encode_pulse(key == 1, Basis::VH, &setup.encoding, &source);
            let bob = if basis_match {
                Basis::VH
            } else {
                Basis::Diag45
            };
            let arriving =
                crate::channel::ArrivingPulse::transmitted(&pulse, &source, &setup.detection);
            let samples: Vec<T> = (0..setup.samples_per_condition)
                .map(|_| arriving.measure(bob, &mut rng))
                .collect();
            let fit = fit_gaussian(&samples)?;
            let (expected_mean, _) = arriving.statistics_in(bob);
            Ok(Table1Row {
                source: source.kind(),
                basis_match,
                key,
                expected_mean,
                expected_sigma: effective_sigma(&source, basis_match, &setup.detection),
                mean: fit.mean_hat,
                sigma: fit.sigma_hat,
                mean_std_error: fit.sigma_hat / T::count(samples.len()).sqrt(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow<T> {
    pub threshold: T,
    pub mean_diff: T,
    pub sigma: T,
    pub postselection_efficiency: T,
    pub ber: T,
    pub pareto: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable<T> {
    pub rows: Vec<SweepRow<T>>,
}

fn sorted_grid<T: Real>(name: &str, grid: &[T]) -> Result<Vec<T>> {
    if grid.is_empty() {
        return Err(Error::Usage(format!("{name} grid is empty")));
    }
    if let Some(bad) = grid.iter().find(|x| !x.is_finite()) {
        return Err(Error::Usage(format!(
            "{name} grid contains non-finite value {bad}"
        )));
    }
    let mut g = grid.to_vec();
    g.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    g.dedup();
    Ok(g)
}

/// Analytic efficiency and BER over a (threshold, encoded mean) grid with
/// fixed width `sigma`. A row is on the Pareto frontier when no other row has
/// at least its efficiency and at most its BER with one strict.
pub fn sweep<T: Real>(thresholds: &[T], mean_diffs: &[T], sigma: T) -> Result<SweepTable<T>> {
    let thresholds = sorted_grid("threshold", thresholds)?;
    let mean_diffs = sorted_grid("mean_diff", mean_diffs)?;
    let mut rows = Vec::with_capacity(thresholds.len() * mean_diffs.len());
    for &threshold in &thresholds {
        let policy = DecisionPolicy::new(threshold).map_err(|e| Error::Usage(e.to_string()))?;
        for &mean_diff in &mean_diffs {
            let model = GaussianModel::new(mean_diff, sigma)?;
            rows.push(SweepRow {
                threshold,
                mean_diff,
                sigma,
                postselection_efficiency: postselection_efficiency(&policy, &model),
                ber: ber(&policy, &model)?,
                pareto: false,
            });
        }
    }
    let flags: Vec<bool> = rows
        .iter()
        .map(|r| {
            !rows.iter().any(|o| {
                o.postselection_efficiency >= r.postselection_efficiency
                    && o.ber <= r.ber
                    && (o.postselection_efficiency > r.postselection_efficiency || o.ber < r.ber)
            })
        })
        .collect();
    for (row, flag) in rows.iter_mut().zip(flags) {
        row.pareto = flag;
    }
    Ok(SweepTable { rows })
}
