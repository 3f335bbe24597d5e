//! Generative model of the optical channel.
//!
//! A source emits two polarization modes with equal mean photoelectron
//! number. Alice's attenuator offsets their difference by `+-N`; Bob's
//! detector returns a Gaussian photoelectron-difference sample whose width is
//! the shot-noise level, reduced by the twin-beam correlation when Bob's
//! basis matches Alice's.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::stats::variance_ratio_from_db;

/// Largest attenuation Alice may apply to one arm.
pub const MAX_ATTENUATION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    TwinBeam,
    Coherent,
}

impl SourceKind {
    pub fn label(self) -> &'static str {
        match self {
            SourceKind::TwinBeam => "twin-beam",
            SourceKind::Coherent => "coherent",
        }
    }
}

impl std::str::FromStr for SourceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "twin-beam" => Ok(SourceKind::TwinBeam),
            "coherent" => Ok(SourceKind::Coherent),
            other => Err(Error::domain(format!(
                "unknown source kind `{other}` (expected twin-beam or coherent)"
            ))),
        }
    }
}

/// Polarization mode pair used to encode or measure a symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    /// Vertical / horizontal.
    VH,
    /// +45 / -45 degrees.
    Diag45,
}

impl Basis {
    pub fn other(self) -> Self {
        match self {
            Basis::VH => Basis::Diag45,
            Basis::Diag45 => Basis::VH,
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random::<bool>() {
            Basis::Diag45
        } else {
            Basis::VH
        }
    }
}

/// Light source statistics. `calibration` rescales the shot-noise width to
/// account for detector gain; it is 1 unless set explicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceModel<T> {
    kind: SourceKind,
    mean_photons_per_mode: T,
    correlation_db: T,
    calibration: T,
}

impl<T: Real> SourceModel<T> {
    pub fn new(kind: SourceKind, mean_photons_per_mode: T, correlation_db: T) -> Result<Self> {
        if !(mean_photons_per_mode.is_finite() && mean_photons_per_mode > T::zero()) {
            return Err(Error::domain(format!(
                "mean_photons_per_mode must be positive, got {mean_photons_per_mode}"
            )));
        }
        if !correlation_db.is_finite() {
            return Err(Error::domain("correlation_db must be finite"));
        }
        match kind {
            SourceKind::Coherent if correlation_db != T::zero() => {
                return Err(Error::domain(format!(
                    "coherent source must have correlation_db = 0, got {correlation_db}"
                )))
            }
            SourceKind::TwinBeam if correlation_db >= T::zero() => {
                return Err(Error::domain(format!(
                    "twin-beam source must have negative correlation_db, got {correlation_db}"
                )))
            }
            _ => {}
        }
        Ok(Self {
            kind,
            mean_photons_per_mode,
            correlation_db,
            calibration: T::one(),
        })
    }

    pub fn coherent(mean_photons_per_mode: T) -> Result<Self> {
        Self::new(SourceKind::Coherent, mean_photons_per_mode, T::zero())
    }

    pub fn twin_beam(mean_photons_per_mode: T, correlation_db: T) -> Result<Self> {
        Self::new(SourceKind::TwinBeam, mean_photons_per_mode, correlation_db)
    }

    pub fn with_calibration(mut self, calibration: T) -> Result<Self> {
        if !(calibration.is_finite() && calibration > T::zero()) {
            return Err(Error::domain(format!(
                "calibration factor must be positive, got {calibration}"
            )));
        }
        self.calibration = calibration;
        Ok(self)
    }

    pub fn kind(&self) -> SourceKind {
        self.kind
    }

    pub fn mean_photons_per_mode(&self) -> T {
        self.mean_photons_per_mode
    }

    pub fn correlation_db(&self) -> T {
        self.correlation_db
    }

    pub fn calibration(&self) -> T {
        self.calibration
    }

    /// Difference-noise variance relative to shot noise emitted by the source.
    pub fn source_variance_ratio(&self) -> T {
        match self.kind {
            SourceKind::Coherent => T::one(),
            SourceKind::TwinBeam => variance_ratio_from_db(self.correlation_db),
        }
    }
}

/// Alice's single-arm attenuator setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodingParams<T> {
    attenuation_fraction: T,
}

impl<T: Real> EncodingParams<T> {
    pub fn new(attenuation_fraction: T) -> Result<Self> {
        if !(attenuation_fraction >= T::zero() && attenuation_fraction <= T::lit(MAX_ATTENUATION)) {
            return Err(Error::domain(format!(
                "attenuation_fraction must lie in [0, {MAX_ATTENUATION}], got {attenuation_fraction}"
            )));
        }
        Ok(Self {
            attenuation_fraction,
        })
    }

    pub fn attenuation_fraction(&self) -> T {
        self.attenuation_fraction
    }

    /// Encoded mean difference `N`, relative to a single mode's mean.
    pub fn mean_diff(&self, source: &SourceModel<T>) -> T {
        self.attenuation_fraction * source.mean_photons_per_mode
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionParams<T> {
    quantum_efficiency: T,
}

impl<T: Real> DetectionParams<T> {
    pub fn new(quantum_efficiency: T) -> Result<Self> {
        if !(quantum_efficiency > T::zero() && quantum_efficiency <= T::one()) {
            return Err(Error::domain(format!(
                "quantum_efficiency must lie in (0, 1], got {quantum_efficiency}"
            )));
        }
        Ok(Self { quantum_efficiency })
    }

    pub fn ideal() -> Self {
        Self {
            quantum_efficiency: T::one(),
        }
    }

    pub fn quantum_efficiency(&self) -> T {
        self.quantum_efficiency
    }
}

/// One symbol as prepared by Alice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulseRecord<T> {
    pub alice_bit: bool,
    pub alice_basis: Basis,
    pub mean_diff: T,
}

impl<T> PulseRecord<T> {
    pub fn symbol(&self) -> (bool, Basis) {
        (self.alice_bit, self.alice_basis)
    }
}

/// Uncalibrated coherent-state width scaled by `calibration`:
/// `calibration * sqrt(2 <n1>)`.
pub fn shot_noise_sigma<T: Real>(source: &SourceModel<T>) -> T {
    source.calibration * (T::lit(2.0) * source.mean_photons_per_mode).sqrt()
}

/// Measured variance ratio `1 - eta (1 - r)` after detection loss `eta`.
pub fn measured_variance_ratio<T: Real>(source_ratio: T, quantum_efficiency: T) -> T {
    T::one() - quantum_efficiency * (T::one() - source_ratio)
}

/// Photoelectron-difference width Bob observes. Correlation only survives in
/// the correct basis; mixing the modes at 45 degrees leaves shot noise.
pub fn effective_sigma<T: Real>(
    source: &SourceModel<T>,
    basis_match: bool,
    det: &DetectionParams<T>,
) -> T {
    let snl = shot_noise_sigma(source);
    if !basis_match || source.kind == SourceKind::Coherent {
        return snl;
    }
    snl * measured_variance_ratio(source.source_variance_ratio(), det.quantum_efficiency).sqrt()
}

pub fn encode_pulse<T: Real>(
    bit: bool,
    basis: Basis,
    enc: &EncodingParams<T>,
    source: &SourceModel<T>,
) -> PulseRecord<T> {
    let n = enc.mean_diff(source);
    PulseRecord {
        alice_bit: bit,
        alice_basis: basis,
        mean_diff: if bit { n } else { -n },
    }
}

/// Statistics of a pulse as it reaches Bob: the basis its mean is encoded
/// in, that mean, the shot-noise width, and the variance ratio seen when
/// measuring in `basis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivingPulse<T> {
    pub basis: Basis,
    pub mean_diff: T,
    pub shot_noise_sigma: T,
    pub matched_variance_ratio: T,
}

impl<T: Real> ArrivingPulse<T> {
    /// Pulse statistics with no intervention between Alice and Bob.
    pub fn transmitted(
        pulse: &PulseRecord<T>,
        source: &SourceModel<T>,
        det: &DetectionParams<T>,
    ) -> Self {
        let matched_variance_ratio = match source.kind {
            SourceKind::Coherent => T::one(),
            SourceKind::TwinBeam => {
                measured_variance_ratio(source.source_variance_ratio(), det.quantum_efficiency)
            }
        };
        Self {
            basis: pulse.alice_basis,
            mean_diff: pulse.mean_diff,
            shot_noise_sigma: shot_noise_sigma(source),
            matched_variance_ratio,
        }
    }

    /// `(mean, sigma)` of the difference measured in `basis`.
    pub fn statistics_in(&self, basis: Basis) -> (T, T) {
        if basis == self.basis {
            (
                self.mean_diff,
                self.shot_noise_sigma * self.matched_variance_ratio.sqrt(),
            )
        } else {
            (T::zero(), self.shot_noise_sigma)
        }
    }

    pub fn measure(&self, basis: Basis, rng: &mut RandomStream) -> T {
        let (mean, sigma) = self.statistics_in(basis);
        sample_difference(mean, sigma, rng)
    }
}

/// Draws one `Normal(mean, sigma)` sample; `sigma = 0` returns `mean` exactly
/// but still consumes the draw so the stream stays aligned.
pub fn sample_difference<T: Real>(mean: T, sigma: T, rng: &mut RandomStream) -> T {
    let z: f64 = rng.sample(StandardNormal);
    if sigma == T::zero() {
        return mean;
    }
    mean + sigma * T::lit(z)
}

/// Bob's photoelectron-difference sample for an unattacked pulse.
pub fn measure_difference<T: Real>(
    pulse: &PulseRecord<T>,
    bob_basis: Basis,
    source: &SourceModel<T>,
    det: &DetectionParams<T>,
    rng: &mut RandomStream,
) -> T {
    ArrivingPulse::transmitted(pulse, source, det).measure(bob_basis, rng)
}

/// Seeded ChaCha8 generator. Independent lanes share the master key and use
/// the lane number as the ChaCha stream id, so lane `k` of seed `s` is
/// always the same sequence regardless of how many lanes run.
#[derive(Debug, Clone)]
pub struct RandomStream(ChaCha8Rng);

impl RandomStream {
    pub fn from_seed(seed: u64) -> Self {
        Self::lane(seed, 0)
    }

    /// Stream for `lane` derived from `master_seed`.
    pub fn lane(master_seed: u64, lane: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(lane);
        Self(rng)
    }
}

impl rand::RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}
