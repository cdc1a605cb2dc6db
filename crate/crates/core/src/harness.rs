//! Batch commands that turn configurations into CSV tables.
//!
//! Every command writes a `# `-prefixed echo of the resolved configuration,
//! then a header row, then data rows. Floating-point values are printed with
//! 17 significant digits so that outputs can be diffed byte for byte.

use std::io::Write;
use std::path::Path;

use crate::analytic::{advantage_ratio, CurvePoint, REFERENCE_CURVES};
use crate::error::{Error, Result};
use crate::estimation::{
    calibrate, g2_report, heralding_fidelity, precision_report, CalibrationRecord, Corrections,
    G2Report, PrecisionReport,
};
use crate::model::{validate, ExperimentConfig, Profile, TrialCounts};
use crate::montecarlo::{derive_seed, expected_heralding_fidelity, run_experiment};

/// Seed label of the unit-transmission calibration batch.
const CALIBRATION_LABEL: u64 = 0xCA1;

/// Fixed-width float formatting used in every table.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Builds the configuration a command runs with: the profile, overlaid by the
/// config file, overlaid by flags.
pub fn resolve_config(
    profile: Profile,
    config_path: Option<&Path>,
    seed: Option<u64>,
    switch: Option<bool>,
) -> Result<ExperimentConfig> {
    let base = ExperimentConfig::from_profile(profile);
    let mut cfg = match config_path {
        Some(p) => ExperimentConfig::from_file(p, &base)?,
        None => base,
    };
    if seed.is_some() {
        cfg.master_seed = seed;
    }
    if let Some(on) = switch {
        cfg.switch.enabled = on;
    }
    validate(&cfg).into_result()?;
    Ok(cfg)
}

fn require_seed(cfg: &ExperimentConfig) -> Result<u64> {
    cfg.master_seed.ok_or_else(|| {
        Error::InvalidConfig(vec!["no seed: pass --seed or set master_seed in the config".into()])
    })
}

/// Parses `start:stop:step` (inclusive of `stop`) or a comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |msg: &str| Error::Parse(format!("grid {spec:?}: {msg}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let grid: Vec<f64> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(bad("expected start:stop:step"));
        };
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if !(step > 0.0) || stop < start {
            return Err(bad("need step > 0 and stop >= start"));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=n)
            .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
            .collect()
    } else {
        spec.split(',').map(num).collect::<Result<_>>()?
    };
    if grid.is_empty() {
        return Err(bad("empty"));
    }
    if grid.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(bad("values must lie in [0,1]"));
    }
    Ok(grid)
}

fn echo_config(out: &mut dyn Write, cfg: &ExperimentConfig) -> Result<()> {
    for line in cfg.to_toml_string().lines() {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

/// Theory curves for every grid value: the reference family, the curve of the
/// configured set-up, and the shot-noise line.
pub fn sweep_analytic(cfg: &ExperimentConfig, grid: &[f64], out: &mut dyn Write) -> Result<()> {
    echo_config(out, cfg)?;
    let config_eta_s = expected_heralding_fidelity(cfg);
    write!(out, "eta")?;
    for c in &REFERENCE_CURVES {
        write!(out, ",{}", c.label)?;
    }
    writeln!(out, ",r_config,r_shot_noise")?;
    for &eta in grid {
        write!(out, "{}", fmt_f64(eta))?;
        for c in &REFERENCE_CURVES {
            let r = advantage_ratio(eta, c.eta_setup, c.eta_s);
            write!(out, ",{}", r.map(fmt_f64).unwrap_or_else(|_| "inf".into()))?;
        }
        let r = advantage_ratio(eta, cfg.idler_channel.setup_efficiency, config_eta_s)?;
        writeln!(out, ",{},{}", fmt_f64(r), fmt_f64(1.0))?;
    }
    Ok(())
}

/// A measured operating point.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub calibration: CalibrationRecord,
    /// Heralding fidelity measured on the calibration batch.
    pub calibration_eta_s: f64,
    pub trials: Vec<TrialCounts>,
    pub report: PrecisionReport,
}

/// Unit-transmission calibration batch, seeded independently of the
/// measurement batches.
pub fn calibration_run(cfg: &ExperimentConfig) -> Result<(CalibrationRecord, f64)> {
    let seed = require_seed(cfg)?;
    let mut cal_cfg = cfg.with_transmission(1.0);
    cal_cfg.master_seed = Some(derive_seed(seed, CALIBRATION_LABEL));
    let trials = run_experiment(&cal_cfg)?;
    let corrections = Corrections::from_config(cfg);
    Ok((calibrate(&trials, corrections)?, heralding_fidelity(&trials, corrections)?))
}

fn measure(cfg: &ExperimentConfig, cal: CalibrationRecord, cal_eta_s: f64) -> Result<ExperimentResult> {
    let trials = run_experiment(cfg)?;
    let corrections = Corrections::from_config(cfg);
    let eta_s = heralding_fidelity(&trials, corrections)?;
    let report = precision_report(&trials, &cal, &cfg.idler_detector, eta_s, corrections)?;
    Ok(ExperimentResult { calibration: cal, calibration_eta_s: cal_eta_s, trials, report })
}

/// Calibrates, then measures at the configured transmission.
pub fn run_point(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let (cal, cal_eta_s) = calibration_run(cfg)?;
    measure(cfg, cal, cal_eta_s)
}

/// `run`: per-trial table followed by `#summary` rows.
pub fn run(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<ExperimentResult> {
    let seed = require_seed(cfg)?;
    let result = run_point(cfg)?;
    let corrections = Corrections::from_config(cfg);
    echo_config(out, cfg)?;
    writeln!(out, "trial,n_s,n_i,n_c,eta_hat")?;
    for (i, t) in result.trials.iter().enumerate() {
        let eta_hat = corrections.trial_klyshko(t)? / result.calibration.eta_setup_measured;
        writeln!(out, "{i},{},{},{},{}", t.n_herald, t.n_idler, t.n_coincidence, fmt_f64(eta_hat))?;
    }
    let r = &result.report;
    let analytic = advantage_ratio(
        cfg.sample.transmission,
        result.calibration.eta_setup_measured,
        result.calibration_eta_s,
    )?;
    let rows: [(&str, String); 12] = [
        ("master_seed", seed.to_string()),
        ("n_trials", r.n_trials.to_string()),
        ("eta_setup_measured", fmt_f64(result.calibration.eta_setup_measured)),
        ("eta_setup_stderr", fmt_f64(result.calibration.stderr)),
        ("eta_s", fmt_f64(r.eta_s)),
        ("eta_hat", fmt_f64(r.eta_hat)),
        ("var_eta", fmt_f64(r.var_eta)),
        ("n_probe", fmt_f64(r.n_probe)),
        ("precision_per_photon", fmt_f64(r.precision_per_photon)),
        ("advantage", fmt_f64(r.advantage)),
        ("advantage_stderr", fmt_opt(r.advantage_stderr)),
        ("advantage_analytic", fmt_f64(analytic)),
    ];
    for (k, v) in rows {
        writeln!(out, "#summary,{k},{v}")?;
    }
    Ok(result)
}

/// A sweep row: the curve point plus the parameters behind its analytic value.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub point: CurvePoint,
    pub eta_hat: f64,
    pub eta_setup: f64,
    pub eta_s: f64,
}

/// Measures every transmission in `grid` against one shared calibration.
///
/// The analytic column uses the calibration batch's setup efficiency and
/// heralding fidelity, the same quantities a laboratory would measure.
pub fn sweep_experiment(cfg: &ExperimentConfig, grid: &[f64]) -> Result<Vec<SweepRow>> {
    let seed = require_seed(cfg)?;
    if grid.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
        return Err(Error::Precondition("experiment grid must lie in (0,1]".into()));
    }
    let (cal, cal_eta_s) = calibration_run(cfg)?;
    grid.iter()
        .enumerate()
        .map(|(k, &eta)| {
            let mut point_cfg = cfg.with_transmission(eta);
            point_cfg.master_seed = Some(derive_seed(seed, k as u64 + 1));
            let result = measure(&point_cfg, cal, cal_eta_s)?;
            Ok(SweepRow {
                point: CurvePoint {
                    eta,
                    r_analytic: advantage_ratio(eta, cal.eta_setup_measured, cal_eta_s)?,
                    r_simulated: Some(result.report.advantage),
                    stderr: result.report.advantage_stderr,
                    n_trials: Some(result.report.n_trials),
                },
                eta_hat: result.report.eta_hat,
                eta_setup: cal.eta_setup_measured,
                eta_s: cal_eta_s,
            })
        })
        .collect()
}

pub fn sweep(cfg: &ExperimentConfig, grid: &[f64], out: &mut dyn Write) -> Result<Vec<SweepRow>> {
    let rows = sweep_experiment(cfg, grid)?;
    echo_config(out, cfg)?;
    writeln!(out, "eta,r_analytic,r_simulated,stderr,n_trials,eta_hat,eta_setup,eta_s")?;
    for row in &rows {
        let p = &row.point;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(p.eta),
            fmt_f64(p.r_analytic),
            fmt_opt(p.r_simulated),
            fmt_opt(p.stderr),
            p.n_trials.map(|n| n.to_string()).unwrap_or_default(),
            fmt_f64(row.eta_hat),
            fmt_f64(row.eta_setup),
            fmt_f64(row.eta_s),
        )?;
    }
    Ok(rows)
}

/// Heralded g² of an HBT configuration.
pub fn g2_measurement(cfg: &ExperimentConfig) -> Result<G2Report> {
    require_seed(cfg)?;
    if !cfg.hbt_mode {
        return Err(Error::InvalidConfig(vec!["g2 requires hbt_mode = true".into()]));
    }
    let trials = run_experiment(cfg)?;
    g2_report(&trials, cfg.coincidence.window_s, cfg.source.duration)
}

pub fn g2(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<G2Report> {
    let seed = require_seed(cfg)?;
    let report = g2_measurement(cfg)?;
    echo_config(out, cfg)?;
    writeln!(out, "key,value")?;
    writeln!(out, "master_seed,{seed}")?;
    writeln!(out, "n_trials,{}", report.n_trials)?;
    writeln!(out, "n_triple,{}", report.n_triple)?;
    writeln!(out, "g2,{}", fmt_f64(report.g2))?;
    writeln!(out, "g2_stderr,{}", fmt_opt(report.stderr))?;
    writeln!(out, "accidental_prediction,{}", fmt_f64(report.accidental_prediction))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = parse_grid("0.0:1.0:0.1").unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[3], 0.3);
        assert_eq!(g[10], 1.0);
        assert_eq!(parse_grid("0.65,0.8,1").unwrap(), vec![0.65, 0.8, 1.0]);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:2:0.5").is_err());
        assert!(parse_grid("a,b").is_err());
        assert!(parse_grid("1:0:0.1").is_err());
    }

    #[test]
    fn analytic_sweep_columns() {
        let cfg = ExperimentConfig::paper_profile();
        let mut buf = Vec::new();
        sweep_analytic(&cfg, &parse_grid("0.0:1.0:0.1").unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut rows = text.lines().filter(|l| !l.starts_with('#'));
        let header: Vec<_> = rows.next().unwrap().split(',').collect();
        assert_eq!(header, ["eta", "r_ideal", "r_case1", "r_case2", "r_case3", "r_case4", "r_config", "r_shot_noise"]);
        let rows: Vec<Vec<f64>> = rows
            .map(|l| l.split(',').map(|v| v.parse().unwrap_or(f64::INFINITY)).collect())
            .collect();
        assert_eq!(rows.len(), 11);
        assert_eq!(rows[0][1], 1.0);
        assert_eq!(rows[5][1], 2.0);
        assert!(rows[10][1].is_infinite());
        assert_eq!(rows[10][4], 1.0);
        assert_eq!(rows[10][5], 1.0);
        assert!(rows.iter().all(|r| r[7] == 1.0));
    }

    #[test]
    fn seed_is_required() {
        let cfg = ExperimentConfig::desk_profile();
        let err = run(&cfg, &mut Vec::new()).unwrap_err();
        assert!(err.is_config_error());
    }

    #[test]
    fn g2_requires_hbt() {
        let mut cfg = ExperimentConfig::desk_profile();
        cfg.master_seed = Some(1);
        assert!(g2(&cfg, &mut Vec::new()).unwrap_err().is_config_error());
    }

    #[test]
    fn resolve_applies_flags() {
        let cfg = resolve_config(Profile::Desk, None, Some(9), Some(false)).unwrap();
        assert_eq!(cfg.master_seed, Some(9));
        assert!(!cfg.switch.enabled);
        assert_eq!(cfg.source.duration, 0.02);
    }
}
