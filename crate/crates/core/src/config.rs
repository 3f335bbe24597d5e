//! Run configuration: a TOML document with one section per channel component.
//!
//! Field names are documented in `docs/FORMATS.md`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{DetectionParams, EncodingParams, SourceKind, SourceModel};
use crate::error::{Error, Result};
use crate::protocol::{AttackModel, SessionParams, TimingConfig};
use crate::stats::DecisionPolicy;

pub const DEFAULT_SEED: u64 = 20_040_517;
pub const DEFAULT_MEAN_PHOTONS: f64 = 4.0e4;
pub const DEFAULT_CORRELATION_DB: f64 = -5.5;
pub const DEFAULT_ATTENUATION: f64 = 0.005;
pub const DEFAULT_THRESHOLD: f64 = 20.0;
/// Detector calibration mapping the uncalibrated shot-noise width (~283)
/// onto the measured 270.
pub const DEFAULT_CALIBRATION: f64 = 270.0 / 283.0;
pub const DEFAULT_SESSION_LENGTH: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub kind: String,
    pub mean_photons_per_mode: f64,
    #[serde(default)]
    pub correlation_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodingSection {
    pub attenuation_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSection {
    pub quantum_efficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSection {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tap_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingSection {
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval_duration: Option<f64>,
}

/// Raw configuration as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub session_length: usize,
    pub calibration_factor: f64,
    pub source: SourceSection,
    pub encoding: EncodingSection,
    pub detection: DetectionSection,
    pub policy: PolicySection,
    pub attack: AttackSection,
    pub timing: TimingSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::reference_twin()
    }
}

impl RunConfig {
    /// Twin beams at -5.5 dB, `<n1>` = 4e4, `N` = 200, `N0` = 20.
    pub fn reference_twin() -> Self {
        Self {
            seed: DEFAULT_SEED,
            session_length: DEFAULT_SESSION_LENGTH,
            calibration_factor: DEFAULT_CALIBRATION,
            source: SourceSection {
                kind: SourceKind::TwinBeam.label().into(),
                mean_photons_per_mode: DEFAULT_MEAN_PHOTONS,
                correlation_db: DEFAULT_CORRELATION_DB,
            },
            encoding: EncodingSection {
                attenuation_fraction: DEFAULT_ATTENUATION,
            },
            detection: DetectionSection {
                quantum_efficiency: 1.0,
            },
            policy: PolicySection {
                threshold: DEFAULT_THRESHOLD,
            },
            attack: AttackSection {
                kind: "none".into(),
                tap_fraction: None,
            },
            timing: TimingSection {
                mode: "pulse".into(),
                interval_duration: None,
            },
        }
    }

    /// Same as [`RunConfig::reference_twin`] with a coherent source.
    pub fn reference_coherent() -> Self {
        let mut cfg = Self::reference_twin();
        cfg.source.kind = SourceKind::Coherent.label().into();
        cfg.source.correlation_db = 0.0;
        cfg
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let field = e
                .message()
                .split('`')
                .nth(1)
                .unwrap_or("<document>")
                .to_string();
            Error::config(field, e.message().trim().to_string())
        })?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Validated channel components; errors name the offending field.
    pub fn resolve(&self) -> Result<SessionParams<f64>> {
        if self.session_length == 0 {
            return Err(Error::config("session_length", "must be at least 1"));
        }
        let kind: SourceKind = self
            .source
            .kind
            .parse()
            .map_err(|e: Error| Error::config("source.kind", e.to_string()))?;
        let source = SourceModel::new(
            kind,
            self.source.mean_photons_per_mode,
            self.source.correlation_db,
        )
        .map_err(|e| {
            let field = if self.source.mean_photons_per_mode > 0.0 {
                "source.correlation_db"
            } else {
                "source.mean_photons_per_mode"
            };
            Error::config(field, e.to_string())
        })?
        .with_calibration(self.calibration_factor)
        .map_err(|e| Error::config("calibration_factor", e.to_string()))?;
        let encoding = EncodingParams::new(self.encoding.attenuation_fraction)
            .map_err(|e| Error::config("encoding.attenuation_fraction", e.to_string()))?;
        let detection = DetectionParams::new(self.detection.quantum_efficiency)
            .map_err(|e| Error::config("detection.quantum_efficiency", e.to_string()))?;
        let policy = DecisionPolicy::new(self.policy.threshold)
            .map_err(|e| Error::config("policy.threshold", e.to_string()))?;
        let attack = match (self.attack.kind.as_str(), self.attack.tap_fraction) {
            ("none", None) => AttackModel::None,
            ("intercept-resend", None) => AttackModel::InterceptResend,
            ("beam-splitter-tap", Some(f)) => AttackModel::beam_splitter_tap(f)
                .map_err(|e| Error::config("attack.tap_fraction", e.to_string()))?,
            ("beam-splitter-tap", None) => {
                return Err(Error::config("attack.tap_fraction", "required for beam-splitter-tap"))
            }
            ("none" | "intercept-resend", Some(_)) => {
                return Err(Error::config(
                    "attack.tap_fraction",
                    "only allowed for beam-splitter-tap",
                ))
            }
            (other, _) => {
                return Err(Error::config(
                    "attack.kind",
                    format!("unknown attack `{other}` (expected none, intercept-resend or beam-splitter-tap)"),
                ))
            }
        };
        let timing = match (self.timing.mode.as_str(), self.timing.interval_duration) {
            ("pulse", None) => TimingConfig::Pulse,
            ("continuous-intervals", Some(d)) => TimingConfig::continuous(d)
                .map_err(|e| Error::config("timing.interval_duration", e.to_string()))?,
            ("continuous-intervals", None) => {
                return Err(Error::config(
                    "timing.interval_duration",
                    "required for continuous-intervals",
                ))
            }
            ("pulse", Some(_)) => {
                return Err(Error::config(
                    "timing.interval_duration",
                    "only allowed for continuous-intervals",
                ))
            }
            (other, _) => {
                return Err(Error::config(
                    "timing.mode",
                    format!(
                        "unknown timing mode `{other}` (expected pulse or continuous-intervals)"
                    ),
                ))
            }
        };
        Ok(SessionParams {
            source,
            encoding,
            detection,
            policy,
            attack,
            timing,
        })
    }
}
