//! Implementations of the `simulate`, `replay`, `sweep` and `table1` commands.

use std::path::{Path, PathBuf};

use crate::analysis::{
    build_histogram, fit_gaussian_mixture_with_bins, reproduce_table1, sweep, Table1Setup,
    TABLE1_SAMPLES,
};
use crate::channel::{effective_sigma, SourceKind};
use crate::config::{RunConfig, DEFAULT_CORRELATION_DB};
use crate::error::{Error, Result};
use crate::protocol::{estimate_ber, run_session, sift, Decision, SessionParams, SiftedKey};
use crate::report::{
    to_json, write_pair, Analytic, Generator, InputFile, Report, SweepReport, Table1Report,
};
use crate::samples::{SampleFile, SampleHeader};
use crate::stats::{ber, postselection_efficiency, DecisionPolicy, GaussianModel};

pub const DUMP_KEY0: &str = "samples_key0.csv";
pub const DUMP_KEY1: &str = "samples_key1.csv";

fn analytic(policy: &DecisionPolicy<f64>, mean_diff: f64, sigma: f64) -> Result<Analytic> {
    let model = GaussianModel::new(mean_diff, sigma)?;
    Ok(Analytic {
        mean_diff,
        sigma,
        postselection_efficiency: postselection_efficiency(policy, &model),
        ber: ber(policy, &model)?,
    })
}

/// Correct-basis model implied by the configuration, ignoring any attack.
pub fn configured_model(params: &SessionParams<f64>) -> Result<GaussianModel<f64>> {
    GaussianModel::new(
        params.encoding.mean_diff(&params.source),
        effective_sigma(&params.source, true, &params.detection),
    )
}

/// Result of a simulation: the report plus the sifted correct-basis samples
/// split by Alice's key, each as `(index, n_sample)`.
pub struct Simulation {
    pub report: Report,
    pub dumps: [SampleFile; 2],
}

pub fn simulate(config: &RunConfig, bins: usize) -> Result<Simulation> {
    let params = config.resolve()?;
    let session = run_session(config.session_length, &params, config.seed)?;
    let key = sift(&session.alice_symbols(), &session.measurements)?;
    let samples: Vec<f64> = key
        .positions
        .iter()
        .map(|&i| session.measurements[i].n_sample)
        .collect();

    let fit = fit_gaussian_mixture_with_bins(&samples, bins)?;
    let histogram = build_histogram(&samples, bins)?;
    let empirical = estimate_ber(&key)?;
    let model = configured_model(&params)?;
    let analytic = analytic(&params.policy, model.mean_diff(), model.sigma())?;

    let kind: SourceKind = config.source.kind.parse()?;
    let mut dumps = [0u8, 1].map(|k| SampleFile {
        header: SampleHeader {
            source: kind,
            basis_match: true,
            key: k,
        },
        rows: Vec::new(),
    });
    for ((&pos, &bit), &n) in key.positions.iter().zip(&key.alice_bits).zip(&samples) {
        dumps[usize::from(bit)].rows.push((pos, n));
    }

    Ok(Simulation {
        report: Report {
            command: "simulate".into(),
            generator: Some(Generator {
                seed: config.seed,
                config: config.clone(),
            }),
            inputs: None,
            threshold: params.policy.threshold(),
            empirical,
            analytic,
            fit,
            histogram,
        },
        dumps,
    })
}

/// Applies the decision rule, mixture fit and histogram to recorded samples.
/// Rows from all files are merged in index order; each row's true bit is its
/// file's `key`.
pub fn replay(files: &[(String, SampleFile)], threshold: f64, bins: usize) -> Result<Report> {
    if files.is_empty() {
        return Err(Error::Usage("replay needs at least one sample file".into()));
    }
    let policy = DecisionPolicy::new(threshold).map_err(|e| Error::Usage(e.to_string()))?;
    let mut rows: Vec<(usize, f64, bool)> = files
        .iter()
        .flat_map(|(_, f)| f.rows.iter().map(move |&(i, n)| (i, n, f.header.key == 1)))
        .collect();
    rows.sort_by_key(|r| r.0);

    let samples: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let fit = fit_gaussian_mixture_with_bins(&samples, bins)?;
    let histogram = build_histogram(&samples, bins)?;
    let mut key = SiftedKey::default();
    for &(i, n, bit) in &rows {
        let d = crate::protocol::decide(n, &policy);
        key.positions.push(i);
        key.alice_bits.push(bit);
        key.bob_decisions.push(d);
        if d == Decision::Inconclusive {
            key.inconclusive_count += 1;
        }
    }
    let empirical = estimate_ber(&key)?;
    let analytic = analytic(&policy, fit.mean_hat, fit.sigma_hat)?;

    Ok(Report {
        command: "replay".into(),
        generator: None,
        inputs: Some(
            files
                .iter()
                .map(|(name, f)| InputFile {
                    name: name.clone(),
                    source: f.header.source.label().into(),
                    basis: if f.header.basis_match {
                        "match"
                    } else {
                        "mismatch"
                    }
                    .into(),
                    key: f.header.key,
                    rows: f.rows.len(),
                })
                .collect(),
        ),
        threshold,
        empirical,
        analytic,
        fit,
        histogram,
    })
}

/// Parses a grid: `start:stop:step` (inclusive of `stop`) or a comma list.
pub fn parse_grid(grid: &str) -> Result<Vec<f64>> {
    let bad = |m: String| Error::Usage(format!("grid `{grid}`: {m}"));
    let grid_t = grid.trim();
    if grid_t.is_empty() {
        return Err(bad("empty grid".into()));
    }
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| bad(format!("`{}` is not a finite number", s.trim())))
    };
    if grid_t.contains(':') {
        let parts: Vec<&str> = grid_t.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(bad("range must be start:stop:step".into()));
        };
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if !(step > 0.0) {
            return Err(bad("step must be positive".into()));
        }
        let count = ((stop - start) / step + 1e-9).floor();
        if count < 0.0 {
            return Err(bad("stop is below start".into()));
        }
        Ok((0..=count as usize)
            .map(|i| start + step * i as f64)
            .collect())
    } else {
        grid_t.split(',').map(num).collect()
    }
}

pub fn sweep_report(
    config: &RunConfig,
    thresholds: &[f64],
    mean_diffs: Option<&[f64]>,
    sigma: Option<f64>,
) -> Result<SweepReport> {
    let params = config.resolve()?;
    let model = configured_model(&params)?;
    let default_n = [model.mean_diff()];
    let sigma = sigma.unwrap_or(model.sigma());
    let table = sweep(thresholds, mean_diffs.unwrap_or(&default_n), sigma)?;
    Ok(SweepReport {
        config: config.clone(),
        sigma,
        table,
    })
}

/// Moment-table setup from a run configuration. The twin-beam correlation comes
/// from the config when its source is twin-beam, else -5.5 dB.
pub fn table1_setup(config: &RunConfig, samples_per_condition: usize) -> Result<Table1Setup<f64>> {
    let params = config.resolve()?;
    let twin_correlation_db = match params.source.kind() {
        SourceKind::TwinBeam => params.source.correlation_db(),
        SourceKind::Coherent => DEFAULT_CORRELATION_DB,
    };
    Ok(Table1Setup {
        mean_photons_per_mode: params.source.mean_photons_per_mode(),
        twin_correlation_db,
        calibration: params.source.calibration(),
        encoding: params.encoding,
        detection: params.detection,
        samples_per_condition,
        seed: config.seed,
    })
}

pub fn table1_report(config: &RunConfig) -> Result<Table1Report> {
    let setup = table1_setup(config, TABLE1_SAMPLES)?;
    Ok(Table1Report {
        seed: config.seed,
        config: config.clone(),
        samples_per_condition: setup.samples_per_condition,
        rows: reproduce_table1(&setup)?,
    })
}

pub fn write_simulation(sim: &Simulation, out: &Path, dump: Option<&Path>) -> Result<Vec<PathBuf>> {
    let (json, txt) = write_pair(out, "report", &to_json(&sim.report), &sim.report.summary())?;
    let mut written = vec![json, txt];
    if let Some(dir) = dump {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
        for (file, name) in sim.dumps.iter().zip([DUMP_KEY0, DUMP_KEY1]) {
            let path = dir.join(name);
            std::fs::write(&path, file.render()).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
            written.push(path);
        }
    }
    Ok(written)
}
