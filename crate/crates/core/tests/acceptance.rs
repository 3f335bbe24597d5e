//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use common::{efficiency_quadrature, erfc_quadrature, integrate_panels, window};
use twinbeam::analysis::reproduce_table1;
use twinbeam::commands::{configured_model, table1_setup};
use twinbeam::config::RunConfig;
use twinbeam::{
    ber, db_from_sigma_ratio, erfc, estimate_ber, mixture_pdf, postselection_efficiency,
    run_session, sift, AttackModel, DecisionPolicyF64, GaussianModelF64, SourceKind,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn policy(n0: f64) -> DecisionPolicyF64 {
    DecisionPolicyF64::new(n0).unwrap()
}

fn model(m: f64, s: f64) -> GaussianModelF64 {
    GaussianModelF64::new(m, s).unwrap()
}

fn check(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

fn analytic_ber() -> Outcome {
    let coherent = ber(&policy(20.0), &model(200.0, 270.0)).map_err(|e| e.to_string())?;
    let twin = ber(&policy(20.0), &model(200.0, 145.0)).map_err(|e| e.to_string())?;
    check(
        (coherent - 0.217).abs() <= 1e-3,
        format!("coherent BER {coherent:.5}"),
    )?;
    check((twin - 0.067).abs() <= 1e-3, format!("twin BER {twin:.5}"))?;
    Ok(format!("coherent {coherent:.5}, twin {twin:.5}"))
}

fn monte_carlo_agreement() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    for cfg in [RunConfig::reference_coherent(), RunConfig::reference_twin()] {
        let p = cfg.resolve().map_err(|e| e.to_string())?;
        let s = run_session(100_000, &p, cfg.seed).map_err(|e| e.to_string())?;
        let est =
            estimate_ber(&sift(&s.alice_symbols(), &s.measurements).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
        let m = configured_model(&p).map_err(|e| e.to_string())?;
        let b = ber(&p.policy, &m).map_err(|e| e.to_string())?;
        let e = postselection_efficiency(&p.policy, &m);
        let (lo, hi) = est.wilson_interval;
        let (plo, phi) = est.postselection_wilson_interval;
        check(
            lo <= b && b <= hi,
            format!(
                "{}: analytic BER {b:.5} outside [{lo:.5}, {hi:.5}]",
                cfg.source.kind
            ),
        )?;
        check(
            plo <= e && e <= phi,
            format!(
                "{}: analytic efficiency {e:.5} outside [{plo:.5}, {phi:.5}]",
                cfg.source.kind
            ),
        )?;
        notes.push(format!(
            "{} ber {:.4} (analytic {b:.4}), rate {:.4} (analytic {e:.4})",
            cfg.source.kind, est.ber, est.postselection_rate
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 10.0, format!("took {secs:.2} s"))?;
    Ok(format!("{}; {secs:.2} s", notes.join("; ")))
}

fn table1() -> Outcome {
    let cfg = RunConfig::reference_twin();
    check(
        (cfg.calibration_factor - 270.0 / 283.0).abs() < 1e-15,
        "calibration factor is not 270/283".into(),
    )?;
    let setup = table1_setup(&cfg, 100_000).map_err(|e| e.to_string())?;
    check(
        setup.twin_correlation_db == -5.5,
        "twin correlation is not -5.5 dB".into(),
    )?;
    let rows = reproduce_table1(&setup).map_err(|e| e.to_string())?;
    check(rows.len() == 8, format!("{} rows", rows.len()))?;
    for r in &rows {
        let mean = match (r.basis_match, r.key) {
            (true, 1) => 200.0,
            (true, _) => -200.0,
            (false, _) => 0.0,
        };
        let band = if r.source == SourceKind::TwinBeam && r.basis_match {
            145.0
        } else {
            270.0
        };
        check(
            (r.mean - mean).abs() <= 3.0 * r.mean_std_error,
            format!(
                "{:?}: mean {:.2} vs {mean}",
                (r.source, r.basis_match, r.key),
                r.mean
            ),
        )?;
        check(
            (r.sigma - band).abs() <= 10.0,
            format!(
                "{:?}: sigma {:.2} vs {band} +- 10",
                (r.source, r.basis_match, r.key),
                r.sigma
            ),
        )?;
    }
    let twin = rows[0].sigma;
    let coh = rows[4].sigma;
    Ok(format!(
        "twin correct sigma {twin:.1}, coherent correct sigma {coh:.1}"
    ))
}

fn noise_figures() -> Outcome {
    let db = db_from_sigma_ratio(145.0, 270.0).map_err(|e| e.to_string())?;
    let ratio = (145.0_f64 / 270.0).powi(2);
    check((-5.8..=-5.2).contains(&db), format!("{db:.3} dB"))?;
    check(
        (0.27..=0.31).contains(&ratio),
        format!("variance ratio {ratio:.4}"),
    )?;
    Ok(format!("{db:.3} dB, variance ratio {ratio:.4}"))
}

fn erfc_and_mixture() -> Outcome {
    let mut worst = 0.0_f64;
    for i in 0..=1200 {
        let z = -6.0 + 12.0 * i as f64 / 1200.0;
        let v = erfc(z).map_err(|e| e.to_string())?;
        worst = worst.max((v - erfc_quadrature(z)).abs());
    }
    check(worst <= 1e-7, format!("erfc max abs error {worst:e}"))?;
    let mut worst_mass = 0.0_f64;
    for (m, s) in [
        (200.0, 145.0),
        (200.0, 270.0),
        (0.0, 1.0),
        (-37.0, 3.5),
        (1000.0, 10.0),
        (5.0, 500.0),
    ] {
        let g = model(m, s);
        let (lo, hi) = window(m, s);
        let mass = integrate_panels(&|x| mixture_pdf(x, &g), lo, hi, s, 1e-12);
        worst_mass = worst_mass.max((mass - 1.0).abs());
    }
    check(
        worst_mass <= 1e-6,
        format!("mixture mass error {worst_mass:e}"),
    )?;
    Ok(format!(
        "erfc max error {worst:.1e}, mixture mass error {worst_mass:.1e}"
    ))
}

fn session_ber(cfg: &RunConfig, attack: AttackModel<f64>) -> Result<f64, String> {
    let mut p = cfg.resolve().map_err(|e| e.to_string())?;
    p.attack = attack;
    let s = run_session(100_000, &p, cfg.seed).map_err(|e| e.to_string())?;
    let key = sift(&s.alice_symbols(), &s.measurements).map_err(|e| e.to_string())?;
    Ok(estimate_ber(&key).map_err(|e| e.to_string())?.ber)
}

fn properties() -> Outcome {
    for (m, s) in [(200.0, 270.0), (200.0, 145.0), (0.0, 1.0), (-80.0, 30.0)] {
        let p = postselection_efficiency(&policy(0.0), &model(m, s));
        check(p == 1.0, format!("P(N0=0) = {p} at ({m}, {s})"))?;
    }
    for (n0, s) in [(0.0, 145.0), (20.0, 270.0), (300.0, 50.0)] {
        let b = ber(&policy(n0), &model(0.0, s)).map_err(|e| e.to_string())?;
        check(b == 0.5, format!("BER(<n>=0) = {b}"))?;
    }
    for s in [50.0, 145.0, 270.0] {
        let mut prev = f64::INFINITY;
        for i in 0..=100 {
            let b = ber(&policy(20.0), &model(4.0 * i as f64, s)).unwrap();
            check(b <= prev, format!("BER rises with <n> at delta {s}"))?;
            prev = b;
        }
        let mut prev = f64::INFINITY;
        for i in 0..=100 {
            let b = ber(&policy(2.0 * i as f64), &model(200.0, s)).unwrap();
            check(b <= prev, format!("BER rises with N0 at delta {s}"))?;
            prev = b;
        }
    }
    // Closed form against the quadrature oracle at the reference point.
    let eff = efficiency_quadrature(20.0, 200.0, 145.0);
    check(
        (eff - postselection_efficiency(&policy(20.0), &model(200.0, 145.0))).abs() < 1e-9,
        "efficiency disagrees with quadrature".into(),
    )?;

    let cfg = RunConfig::reference_twin();
    let mut taps = Vec::new();
    for f in [0.0, 0.1, 0.25, 0.5, 0.75] {
        let b = session_ber(&cfg, AttackModel::beam_splitter_tap(f).unwrap())?;
        if let Some(&(_, prev)) = taps.last() {
            check(b >= prev, format!("tap {f}: BER {b:.4} below {prev:.4}"))?;
        }
        taps.push((f, b));
    }
    let ir = session_ber(&cfg, AttackModel::InterceptResend)?;
    let max_tap = taps.last().unwrap().1;
    check(
        ir >= max_tap,
        format!("intercept-resend {ir:.4} below tap {max_tap:.4}"),
    )?;
    check(
        ir >= 0.217,
        format!("intercept-resend {ir:.4} below coherent baseline 0.217"),
    )?;
    let taps: Vec<String> = taps.iter().map(|(f, b)| format!("{f}:{b:.3}")).collect();
    Ok(format!(
        "tap BER [{}], intercept-resend {ir:.3}",
        taps.join(" ")
    ))
}

fn simulate(out: &Path, dump: Option<&Path>) -> Result<(), String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_twinbeam"));
    cmd.arg("simulate").arg("--out").arg(out);
    if let Some(d) = dump {
        cmd.arg("--dump-samples").arg(d);
    }
    let o = cmd.output().map_err(|e| e.to_string())?;
    check(
        o.status.success(),
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b, dump, rep) = (
        dir.path().join("a"),
        dir.path().join("b"),
        dir.path().join("dump"),
        dir.path().join("replay"),
    );
    simulate(&a, Some(&dump))?;
    simulate(&b, None)?;
    for name in ["report.json", "report.txt"] {
        let x = std::fs::read(a.join(name)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.join(name)).map_err(|e| e.to_string())?;
        check(x == y, format!("{name} differs between identical runs"))?;
    }
    let o = Command::new(env!("CARGO_BIN_EXE_twinbeam"))
        .arg("replay")
        .arg(dump.join("samples_key0.csv"))
        .arg(dump.join("samples_key1.csv"))
        .arg("--out")
        .arg(&rep)
        .output()
        .map_err(|e| e.to_string())?;
    check(
        o.status.success(),
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )?;
    let load = |p: &Path| -> Result<serde_json::Value, String> {
        serde_json::from_str(&std::fs::read_to_string(p).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())
    };
    let (sim, replay) = (
        load(&a.join("report.json"))?,
        load(&rep.join("report.json"))?,
    );
    for key in ["empirical", "fit", "histogram"] {
        check(sim[key] == replay[key], format!("replay {key} differs"))?;
    }
    Ok("reports byte-identical; replay statistics identical".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("AC1 analytic BER reproduction", analytic_ber),
        ("AC2 Monte Carlo vs closed form", monte_carlo_agreement),
        ("AC3 moment table", table1),
        ("AC4 noise figure consistency", noise_figures),
        (
            "AC5 erfc oracle and mixture normalisation",
            erfc_and_mixture,
        ),
        ("AC6 property suite", properties),
        ("AC7 determinism and replay", determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
