//! Coincidence correlator and the estimators built on top of it.
//!
//! Coincidence rule: tags `a_i` and `b_j` match when
//! `-window/2 <= b_j - a_i - offset < window/2`. Matching is one-to-one and
//! greedy in time order, which is optimal for equal-width windows.

use crate::error::{Error, Result};
use crate::model::{DetectorConfig, ExperimentConfig, TimeTagStream, TrialCounts};

/// Number of bins used for batch-means error bars. With fewer bins the error
/// bar itself is too noisy for 3-sigma comparisons.
pub const ERROR_BINS: usize = 30;

/// Minimum trials per bin.
const MIN_BIN_TRIALS: usize = 10;

fn bin_count(n: usize) -> usize {
    ERROR_BINS.min(n / MIN_BIN_TRIALS)
}

fn check_sorted(name: &str, tags: &[f64]) -> Result<()> {
    if tags.windows(2).any(|w| !(w[1] > w[0])) || tags.iter().any(|t| !t.is_finite()) {
        return Err(Error::Precondition(format!("{name} tags are not strictly increasing")));
    }
    Ok(())
}

/// Greedy one-to-one matching. Returns `(i, j)` index pairs in order of `a`.
///
/// Inputs must be sorted; this is not checked here.
pub fn match_tags(a: &[f64], b: &[f64], window: f64, offset: f64) -> Vec<(usize, usize)> {
    let half = window / 2.0;
    let mut pairs = Vec::new();
    let mut j = 0;
    for (i, &t) in a.iter().enumerate() {
        let centre = t + offset;
        let lo = centre - half;
        let hi = centre + half;
        // Tags before `lo` can never match a later `a` either.
        while j < b.len() && b[j] < lo {
            j += 1;
        }
        if j == b.len() {
            break;
        }
        if b[j] < hi {
            pairs.push((i, j));
            j += 1;
        }
    }
    pairs
}

/// Coincidence count between two sorted tag lists.
pub fn count_coincidences_in(a: &[f64], b: &[f64], window: f64, offset: f64) -> Result<u64> {
    check_sorted("first", a)?;
    check_sorted("second", b)?;
    if !(window.is_finite() && window > 0.0) {
        return Err(Error::Precondition("coincidence window must be > 0".into()));
    }
    Ok(match_tags(a, b, window, offset).len() as u64)
}

pub fn count_coincidences(a: &TimeTagStream, b: &TimeTagStream, window: f64, offset: f64) -> Result<u64> {
    count_coincidences_in(a.timestamps(), b.timestamps(), window, offset)
}

/// For each herald, whether any tag of `tags` falls in its window. Unlike
/// [`match_tags`] a tag may serve several heralds; this is the herald-gated
/// counting used by the triple-coincidence g² method.
pub fn herald_gated_hits(herald: &[f64], tags: &[f64], window: f64, offset: f64) -> Vec<bool> {
    let half = window / 2.0;
    let mut j = 0;
    herald
        .iter()
        .map(|&t| {
            let lo = t + offset - half;
            while j < tags.len() && tags[j] < lo {
                j += 1;
            }
            j < tags.len() && tags[j] < t + offset + half
        })
        .collect()
}

/// Herald-gated counts `(N_SA, N_SB, N_SAB)`.
pub fn gated_triple_counts(herald: &[f64], a: &[f64], b: &[f64], window: f64, offset: f64) -> (u64, u64, u64) {
    let on_a = herald_gated_hits(herald, a, window, offset);
    let on_b = herald_gated_hits(herald, b, window, offset);
    let count = |v: &[bool]| v.iter().filter(|&&x| x).count() as u64;
    let triples = on_a.iter().zip(&on_b).filter(|(&x, &y)| x && y).count() as u64;
    (count(&on_a), count(&on_b), triples)
}

/// Ratio of coincidences to the opposite arm's singles.
pub fn klyshko(n_coinc: f64, n_singles: f64) -> Result<f64> {
    if !(n_singles > 0.0) {
        return Err(Error::EmptyTrial("no singles to normalise coincidences"));
    }
    Ok(n_coinc / n_singles)
}

/// Idler-arm Klyshko efficiency measured with the sample transmission at 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationRecord {
    pub eta_setup_measured: f64,
    pub n_trials: usize,
    pub stderr: f64,
}

pub fn estimate_transmission(trial_klyshko: f64, cal: &CalibrationRecord) -> Result<f64> {
    if !(cal.eta_setup_measured > 0.0) {
        return Err(Error::Domain("calibration efficiency must be > 0".into()));
    }
    Ok(trial_klyshko / cal.eta_setup_measured)
}

/// Mean number of photons that reached the sample:
/// `n_idler / (eta_det * eta_hat * eta_s) - dark`.
pub fn probe_photon_count(n_idler: f64, eta_det: f64, eta_hat: f64, eta_s: f64, dark: f64) -> Result<f64> {
    let divisor = eta_det * eta_hat * eta_s;
    if !(eta_det > 0.0 && eta_hat > 0.0 && eta_s > 0.0) || !divisor.is_finite() {
        return Err(Error::Domain(format!(
            "probe photon divisor must be positive (eta_det={eta_det}, eta_hat={eta_hat}, eta_s={eta_s})"
        )));
    }
    Ok(n_idler / divisor - dark)
}

/// Dark-count corrections applied to raw trial counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corrections {
    /// Expected accidental coincidences per herald click from idler dark
    /// counts, `idler_dark_rate * window`. Zero disables the subtraction.
    pub accidentals_per_herald: f64,
}

impl Corrections {
    pub const NONE: Corrections = Corrections { accidentals_per_herald: 0.0 };

    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        if cfg.coincidence.subtract_accidentals {
            Corrections {
                accidentals_per_herald: cfg.idler_detector.dark_rate * cfg.coincidence.window_s,
            }
        } else {
            Self::NONE
        }
    }

    pub fn coincidences(&self, t: &TrialCounts) -> f64 {
        t.n_coincidence as f64 - self.accidentals_per_herald * t.n_herald as f64
    }

    pub fn trial_klyshko(&self, t: &TrialCounts) -> Result<f64> {
        klyshko(self.coincidences(t), t.n_herald as f64)
    }
}

/// Pooled idler Klyshko efficiency of a calibration batch.
pub fn calibrate(trials: &[TrialCounts], corrections: Corrections) -> Result<CalibrationRecord> {
    if trials.len() < 2 {
        return Err(Error::Precondition("calibration needs at least 2 trials".into()));
    }
    let coinc: f64 = trials.iter().map(|t| corrections.coincidences(t)).sum();
    let heralds: f64 = trials.iter().map(|t| t.n_herald as f64).sum();
    let eta = klyshko(coinc, heralds)?;
    let per_trial = trials
        .iter()
        .map(|t| corrections.trial_klyshko(t))
        .collect::<Result<Vec<_>>>()?;
    let (_, var) = mean_var(&per_trial);
    Ok(CalibrationRecord {
        eta_setup_measured: eta,
        n_trials: trials.len(),
        stderr: (var / trials.len() as f64).sqrt(),
    })
}

/// Fraction of idler detections (dark clicks removed) that were heralded.
pub fn heralding_fidelity(trials: &[TrialCounts], corrections: Corrections) -> Result<f64> {
    let coinc: f64 = trials.iter().map(|t| corrections.coincidences(t)).sum();
    let idler: f64 = trials.iter().map(|t| t.n_idler as f64 - t.dark_estimate).sum();
    if !(idler > 0.0) {
        return Err(Error::EmptyTrial("no idler detections above the dark level"));
    }
    Ok(coinc / idler)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionReport {
    pub n_trials: usize,
    /// Mean transmission estimate over the batch.
    pub eta_hat: f64,
    /// Unbiased variance of the per-trial transmission estimates.
    pub var_eta: f64,
    /// Mean photons incident on the sample per trial.
    pub n_probe: f64,
    pub precision_per_photon: f64,
    /// Empirical advantage over a coherent probe read out with the same detector.
    pub advantage: f64,
    /// Batch-means standard error; `None` when there are too few trials to bin.
    pub advantage_stderr: Option<f64>,
    pub eta_s: f64,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

fn point_estimate(
    trials: &[TrialCounts],
    cal: &CalibrationRecord,
    det: &DetectorConfig,
    eta_s: f64,
    corrections: Corrections,
) -> Result<PrecisionReport> {
    if trials.len() < 2 {
        return Err(Error::Precondition("precision needs at least 2 trials".into()));
    }
    let eta_hats = trials
        .iter()
        .map(|t| estimate_transmission(corrections.trial_klyshko(t)?, cal))
        .collect::<Result<Vec<_>>>()?;
    let (eta_hat, var_eta) = mean_var(&eta_hats);
    if !(var_eta > 0.0) {
        return Err(Error::Degenerate("transmission estimates have zero variance"));
    }
    // Heralded detections referred back through the heralding fidelity give
    // every photon that reached the sample; dark clicks are already excluded
    // from the fidelity, so nothing further is subtracted.
    let mean_heralded = trials.iter().map(|t| corrections.coincidences(t)).sum::<f64>() / trials.len() as f64;
    let n_probe = probe_photon_count(mean_heralded, det.efficiency, eta_hat, eta_s, 0.0)?;
    if !(n_probe > 0.0) {
        return Err(Error::Degenerate("no probe photons"));
    }
    let precision_per_photon = 1.0 / (var_eta * n_probe);
    // Coherent baseline with the same detector: eta_det / eta per input photon.
    let advantage = precision_per_photon * eta_hat / det.efficiency;
    Ok(PrecisionReport {
        n_trials: trials.len(),
        eta_hat,
        var_eta,
        n_probe,
        precision_per_photon,
        advantage,
        advantage_stderr: None,
        eta_s,
    })
}

/// Per-photon precision and advantage of a batch of trials.
///
/// `eta_s` is the heralding fidelity measured on the same data (see
/// [`heralding_fidelity`]). The error bar is the standard error of the
/// advantage recomputed on up to [`ERROR_BINS`] contiguous bins of at least ten trials.
pub fn precision_report(
    trials: &[TrialCounts],
    cal: &CalibrationRecord,
    det: &DetectorConfig,
    eta_s: f64,
    corrections: Corrections,
) -> Result<PrecisionReport> {
    let mut report = point_estimate(trials, cal, det, eta_s, corrections)?;
    let bins = bin_count(trials.len());
    if bins >= 2 {
        let per_bin = bin_ranges(trials.len(), bins)
            .map(|r| point_estimate(&trials[r], cal, det, eta_s, corrections).map(|p| p.advantage))
            .collect::<Result<Vec<_>>>()?;
        let (_, var) = mean_var(&per_bin);
        report.advantage_stderr = Some((var / bins as f64).sqrt());
    }
    Ok(report)
}

fn bin_ranges(n: usize, bins: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    (0..bins).map(move |k| (k * n / bins)..((k + 1) * n / bins))
}

/// Heralded second-order correlation `N_SAB N_S / (N_SA N_SB)`.
pub fn g2_heralded(n_s: u64, n_sa: u64, n_sb: u64, n_sab: u64) -> Result<f64> {
    if n_sa == 0 || n_sb == 0 {
        return Err(Error::EmptyTrial("no herald-idler coincidences on one detector"));
    }
    Ok((n_sab as f64 * n_s as f64) / (n_sa as f64 * n_sb as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct G2Report {
    pub g2: f64,
    pub stderr: Option<f64>,
    /// g² expected from uncorrelated extra photons alone, built from the
    /// measured singles and herald coincidence rates. Only meaningful with the
    /// switch off: a gated idler rate understates what a herald's own gate sees.
    pub accidental_prediction: f64,
    pub n_trials: usize,
    pub n_triple: u64,
}

fn pooled_g2(trials: &[TrialCounts]) -> Result<f64> {
    let sum = |f: fn(&TrialCounts) -> u64| trials.iter().map(f).sum::<u64>();
    g2_heralded(
        sum(|t| t.n_herald),
        sum(|t| t.n_coinc_herald_a),
        sum(|t| t.n_coinc_herald_b),
        sum(|t| t.n_triple),
    )
}

/// Pooled heralded g² of an HBT batch, with batch-means error bar.
pub fn g2_report(trials: &[TrialCounts], window: f64, duration: f64) -> Result<G2Report> {
    let g2 = pooled_g2(trials)?;
    let n = trials.len() as f64;
    let sum = |f: fn(&TrialCounts) -> u64| trials.iter().map(f).sum::<u64>() as f64;
    let rate_a = sum(|t| t.n_idler) / (n * duration);
    let rate_b = sum(|t| t.n_idler_b) / (n * duration);
    let (n_s, n_sa, n_sb) = (sum(|t| t.n_herald), sum(|t| t.n_coinc_herald_a), sum(|t| t.n_coinc_herald_b));
    let expected_triples = window * (n_sa * rate_b + n_sb * rate_a);
    let accidental_prediction = expected_triples * n_s / (n_sa * n_sb);

    let bins = bin_count(trials.len());
    let stderr = if bins >= 2 {
        let per_bin = bin_ranges(trials.len(), bins)
            .map(|r| pooled_g2(&trials[r]))
            .collect::<Result<Vec<_>>>()?;
        let (_, var) = mean_var(&per_bin);
        Some((var / bins as f64).sqrt())
    } else {
        None
    };
    Ok(G2Report {
        g2,
        stderr,
        accidental_prediction,
        n_trials: trials.len(),
        n_triple: trials.iter().map(|t| t.n_triple).sum(),
    })
}

/// Dispersion of coincidences about the binomial law `N_C ~ Bin(N_S, eta_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dispersion {
    /// Pooled Klyshko efficiency.
    pub eta_i: f64,
    /// Conditional variance over conditional mean; `1 - eta_i` for binomial counts.
    pub fano: f64,
    /// Pearson dispersion statistic, chi-square with `dof` degrees of freedom
    /// under the binomial law.
    pub chi2: f64,
    pub dof: usize,
}

pub fn binomial_dispersion(trials: &[TrialCounts]) -> Result<Dispersion> {
    if trials.len() < 2 {
        return Err(Error::Precondition("dispersion needs at least 2 trials".into()));
    }
    let heralds: u64 = trials.iter().map(|t| t.n_herald).sum();
    let coinc: u64 = trials.iter().map(|t| t.n_coincidence).sum();
    let p = klyshko(coinc as f64, heralds as f64)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Degenerate("Klyshko efficiency at 0 or 1"));
    }
    let n = trials.len() as f64;
    let mut sq = 0.0;
    let mut chi2 = 0.0;
    for t in trials.iter().filter(|t| t.n_herald > 0) {
        let s = t.n_herald as f64;
        let r = t.n_coincidence as f64 - p * s;
        sq += r * r;
        chi2 += r * r / (p * (1.0 - p) * s);
    }
    // One degree of freedom goes into the pooled p.
    let fano = sq / (p * heralds as f64) * n / (n - 1.0);
    Ok(Dispersion { eta_i: p, fano, chi2, dof: trials.len() - 1 })
}
