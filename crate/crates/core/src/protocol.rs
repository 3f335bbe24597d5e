//! Alice, Bob and Eve: symbol generation, transmission, threshold decisions,
//! public basis sifting and empirical error-rate estimation.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{
    encode_pulse, shot_noise_sigma, ArrivingPulse, Basis, DetectionParams, EncodingParams,
    PulseRecord, RandomStream, SourceModel,
};
use crate::error::{Error, Result};
use crate::num::Real;
use crate::stats::DecisionPolicy;

/// Pulses per random-stream shard. Shard `k` of a session draws from lane
/// `k + 1` of the master seed, so results do not depend on thread count.
pub const SHARD_LEN: usize = 4096;

/// Two-sided 95% normal quantile used for Wilson intervals.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Decision {
    One,
    Zero,
    Inconclusive,
}

impl Decision {
    pub fn bit(self) -> Option<bool> {
        match self {
            Decision::One => Some(true),
            Decision::Zero => Some(false),
            Decision::Inconclusive => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasurementRecord<T> {
    pub index: usize,
    /// Start of the agreed time interval `t_k` in continuous mode.
    pub interval_start: Option<T>,
    pub bob_basis: Basis,
    pub n_sample: T,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SiftedKey {
    pub positions: Vec<usize>,
    pub alice_bits: Vec<bool>,
    pub bob_decisions: Vec<Decision>,
    pub inconclusive_count: usize,
}

impl SiftedKey {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn conclusive_count(&self) -> usize {
        self.len() - self.inconclusive_count
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttackModel<T> {
    None,
    InterceptResend,
    BeamSplitterTap { tap_fraction: T },
}

impl<T: Real> AttackModel<T> {
    pub fn beam_splitter_tap(tap_fraction: T) -> Result<Self> {
        if !(tap_fraction >= T::zero() && tap_fraction <= T::one()) {
            return Err(Error::domain(format!(
                "tap_fraction must lie in [0, 1], got {tap_fraction}"
            )));
        }
        Ok(AttackModel::BeamSplitterTap { tap_fraction })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimingConfig<T> {
    Pulse,
    ContinuousIntervals { interval_duration: T },
}

impl<T: Real> TimingConfig<T> {
    pub fn continuous(interval_duration: T) -> Result<Self> {
        if !(interval_duration.is_finite() && interval_duration > T::zero()) {
            return Err(Error::domain(format!(
                "interval_duration must be positive, got {interval_duration}"
            )));
        }
        Ok(TimingConfig::ContinuousIntervals { interval_duration })
    }

    fn label(&self, index: usize) -> Option<T> {
        match *self {
            TimingConfig::Pulse => None,
            TimingConfig::ContinuousIntervals { interval_duration } => {
                Some(interval_duration * T::count(index))
            }
        }
    }
}

/// Fixed channel configuration for one session.
#[derive(Debug, Clone, Copy)]
pub struct SessionParams<T> {
    pub source: SourceModel<T>,
    pub encoding: EncodingParams<T>,
    pub detection: DetectionParams<T>,
    pub policy: DecisionPolicy<T>,
    pub attack: AttackModel<T>,
    pub timing: TimingConfig<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Session<T> {
    pub pulses: Vec<PulseRecord<T>>,
    pub measurements: Vec<MeasurementRecord<T>>,
}

impl<T> Session<T> {
    pub fn alice_symbols(&self) -> Vec<(bool, Basis)> {
        self.pulses.iter().map(PulseRecord::symbol).collect()
    }
}

/// Uniform independent bits and bases.
pub fn alice_generate(length: usize, rng: &mut RandomStream) -> Result<Vec<(bool, Basis)>> {
    if length == 0 {
        return Err(Error::EmptyRun(
            "alice_generate called with length 0".into(),
        ));
    }
    Ok((0..length)
        .map(|_| {
            let bit = rng.random::<bool>();
            (bit, Basis::random(rng))
        })
        .collect())
}

/// Threshold rule: `One` above `N0`, `Zero` below `-N0`, otherwise inconclusive.
pub fn decide<T: Real>(n_sample: T, policy: &DecisionPolicy<T>) -> Decision {
    let n0 = policy.threshold();
    if n_sample > n0 {
        Decision::One
    } else if n_sample < -n0 {
        Decision::Zero
    } else {
        Decision::Inconclusive
    }
}

/// Pulse statistics after Eve's intervention.
///
/// Intercept-resend: Eve measures with the source's own statistics in a
/// random basis, reads the sign, and re-sends `+-N` in her basis with
/// coherent (shot-noise) statistics. Beam-splitter tap: power, encoded mean
/// and effective efficiency all scale by `1 - tap_fraction`.
pub fn apply_attack<T: Real>(
    pulse: &PulseRecord<T>,
    attack: &AttackModel<T>,
    source: &SourceModel<T>,
    det: &DetectionParams<T>,
    rng: &mut RandomStream,
) -> ArrivingPulse<T> {
    let clean = ArrivingPulse::transmitted(pulse, source, det);
    match *attack {
        AttackModel::None => clean,
        AttackModel::InterceptResend => {
            let eve_basis = Basis::random(rng);
            let n_eve = clean.measure(eve_basis, rng);
            let magnitude = pulse.mean_diff.abs();
            ArrivingPulse {
                basis: eve_basis,
                mean_diff: if n_eve > T::zero() {
                    magnitude
                } else {
                    -magnitude
                },
                shot_noise_sigma: shot_noise_sigma(source),
                matched_variance_ratio: T::one(),
            }
        }
        AttackModel::BeamSplitterTap { tap_fraction } => {
            let kept = T::one() - tap_fraction;
            let eta = det.quantum_efficiency() * kept;
            ArrivingPulse {
                basis: clean.basis,
                mean_diff: clean.mean_diff * kept,
                shot_noise_sigma: clean.shot_noise_sigma * kept.sqrt(),
                matched_variance_ratio: T::one()
                    - eta * (T::one() - source.source_variance_ratio()),
            }
        }
    }
}

/// Runs `length` symbols through Alice, the (optional) eavesdropper and Bob.
///
/// Per-pulse draw order inside a shard: Alice's bit and basis for the whole
/// shard, then for each pulse Eve's draws (if any), Bob's basis, Bob's sample.
pub fn run_session<T: Real>(
    length: usize,
    params: &SessionParams<T>,
    seed: u64,
) -> Result<Session<T>> {
    if length == 0 {
        return Err(Error::EmptyRun("session length must be at least 1".into()));
    }
    let shards: Vec<(usize, usize)> = (0..length)
        .step_by(SHARD_LEN)
        .map(|start| (start, (start + SHARD_LEN).min(length)))
        .collect();
    let parts = shards
        .par_iter()
        .enumerate()
        .map(|(k, &(start, end))| {
            run_shard(start, end, params, RandomStream::lane(seed, k as u64 + 1))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut pulses = Vec::with_capacity(length);
    let mut measurements = Vec::with_capacity(length);
    for (p, m) in parts {
        pulses.extend(p);
        measurements.extend(m);
    }
    Ok(Session {
        pulses,
        measurements,
    })
}

type Shard<T> = (Vec<PulseRecord<T>>, Vec<MeasurementRecord<T>>);

fn run_shard<T: Real>(
    start: usize,
    end: usize,
    params: &SessionParams<T>,
    mut rng: RandomStream,
) -> Result<Shard<T>> {
    let symbols = alice_generate(end - start, &mut rng)?;
    let mut pulses = Vec::with_capacity(symbols.len());
    let mut measurements = Vec::with_capacity(symbols.len());
    for (offset, (bit, basis)) in symbols.into_iter().enumerate() {
        let index = start + offset;
        let pulse = encode_pulse(bit, basis, &params.encoding, &params.source);
        let arriving = apply_attack(
            &pulse,
            &params.attack,
            &params.source,
            &params.detection,
            &mut rng,
        );
        let bob_basis = Basis::random(&mut rng);
        let n_sample = arriving.measure(bob_basis, &mut rng);
        measurements.push(MeasurementRecord {
            index,
            interval_start: params.timing.label(index),
            bob_basis,
            n_sample,
            decision: decide(n_sample, &params.policy),
        });
        pulses.push(pulse);
    }
    Ok((pulses, measurements))
}

/// Keeps the indices where Alice's and Bob's bases agree.
pub fn sift<T>(alice: &[(bool, Basis)], bob: &[MeasurementRecord<T>]) -> Result<SiftedKey> {
    if alice.len() != bob.len() {
        return Err(Error::Protocol(format!(
            "cannot sift {} symbols against {} measurements",
            alice.len(),
            bob.len()
        )));
    }
    let mut key = SiftedKey::default();
    for (i, (&(bit, basis), m)) in alice.iter().zip(bob).enumerate() {
        if basis != m.bob_basis {
            continue;
        }
        key.positions.push(i);
        key.alice_bits.push(bit);
        key.bob_decisions.push(m.decision);
        if m.decision == Decision::Inconclusive {
            key.inconclusive_count += 1;
        }
    }
    Ok(key)
}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BerEstimate {
    pub ber: f64,
    pub postselection_rate: f64,
    pub wilson_interval: (f64, f64),
    pub postselection_wilson_interval: (f64, f64),
    pub sifted: usize,
    pub conclusive: usize,
    pub errors: usize,
}

/// Empirical error rate among conclusive sifted decisions with 95% Wilson bounds.
pub fn estimate_ber(sifted: &SiftedKey) -> Result<BerEstimate> {
    let conclusive = sifted.conclusive_count();
    if conclusive == 0 {
        return Err(Error::InsufficientData(format!(
            "no conclusive decisions among {} sifted symbols",
            sifted.len()
        )));
    }
    let errors = sifted
        .alice_bits
        .iter()
        .zip(&sifted.bob_decisions)
        .filter(|(&a, d)| matches!(d.bit(), Some(b) if b != a))
        .count();
    Ok(BerEstimate {
        ber: errors as f64 / conclusive as f64,
        postselection_rate: conclusive as f64 / sifted.len() as f64,
        wilson_interval: wilson_interval(errors, conclusive, Z_95),
        postselection_wilson_interval: wilson_interval(conclusive, sifted.len(), Z_95),
        sifted: sifted.len(),
        conclusive,
        errors,
    })
}
