//! Configuration and record types shared by the simulator, the estimators and
//! the command-line harness.
//!
//! All times are SI seconds, all rates are per second and all counts are exact
//! integers. Every probability-valued field must lie in `[0, 1]`.
//!
//! Configurations are read from TOML documents. A document only needs the keys
//! it wants to change; everything else is taken from a base profile
//! ([`ExperimentConfig::paper_profile`] or [`ExperimentConfig::desk_profile`]).
//! Unknown keys are rejected.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Correlated-pair source and the herald (signal) arm ahead of the herald detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    /// Pair emission rate before any loss, pairs per second.
    pub pair_rate: f64,
    /// Integration time of one trial, seconds.
    pub duration: f64,
    /// Herald-arm collection efficiency in front of the herald detector.
    pub signal_channel_efficiency: f64,
    /// When false, signal and idler photons come from two independent Poisson
    /// processes at `pair_rate`. Used as the uncorrelated (Poissonian) reference.
    #[serde(default = "default_true")]
    pub pair_correlated: bool,
    pub wavelength_signal_nm: f64,
    pub wavelength_idler_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub transmission: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdlerChannelConfig {
    /// Source and detector efficiency of the idler arm, excluding sample and
    /// switch. Includes the idler detector efficiency, so it may not exceed it.
    pub setup_efficiency: f64,
    /// Fibre delay between the pair source and the switch, seconds.
    pub delay_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchConfig {
    pub enabled: bool,
    /// Herald click to gate fully open. The switch rise time is folded in here.
    pub electronic_latency_s: f64,
    pub gate_width_s: f64,
    /// Pass probability while the gate is closed.
    pub off_state_leakage: f64,
    /// Pass probability while the gate is open, or always when disabled.
    pub on_state_transmission: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub efficiency: f64,
    pub dark_rate: f64,
    /// Non-paralyzable dead time after each accepted click.
    pub dead_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoincidenceConfig {
    /// Full width of the coincidence window.
    pub window_s: f64,
    /// Expected idler-minus-herald arrival offset.
    pub nominal_offset_s: f64,
    /// Subtract expected dark-count accidentals from coincidence totals before
    /// forming Klyshko efficiencies.
    #[serde(default = "default_true")]
    pub subtract_accidentals: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Number of trials per measurement point.
    pub repetitions: usize,
    /// Root seed. Left unset in the built-in profiles; simulation refuses to
    /// run without one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    /// Route the idler through a 50:50 splitter onto two detectors.
    pub hbt_mode: bool,
    /// Relative standard deviation of the per-trial setup-efficiency jitter.
    pub jitter_std: f64,
    pub source: SourceConfig,
    pub sample: SampleConfig,
    pub idler_channel: IdlerChannelConfig,
    pub switch: SwitchConfig,
    pub herald_detector: DetectorConfig,
    pub idler_detector: DetectorConfig,
    pub coincidence: CoincidenceConfig,
}

fn default_true() -> bool {
    true
}

/// Named base configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Laboratory rates and the 0.2 s integration time.
    Paper,
    /// Same rates with a 10x shorter integration time, so that full
    /// 3000-trial sweeps finish in seconds.
    Desk,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Profile::Paper),
            "desk" => Ok(Profile::Desk),
            other => Err(Error::Parse(format!("unknown profile {other:?} (expected paper|desk)"))),
        }
    }
}

impl ExperimentConfig {
    /// Laboratory operating point.
    ///
    /// The pair rate is not a published figure. It is chosen so that the idler
    /// detector sees about 14k counts/s at unit transmission with the switch
    /// active. The off-state leakage is chosen so that, together with
    /// accidental gate captures at that rate, about 90% of the photons reaching
    /// the sample are heralded. Latency, delay and dark rates are free choices.
    pub fn paper_profile() -> Self {
        ExperimentConfig {
            repetitions: 3000,
            master_seed: None,
            hbt_mode: false,
            jitter_std: 0.0,
            source: SourceConfig {
                pair_rate: 81_000.0,
                duration: 0.2,
                signal_channel_efficiency: 0.63,
                pair_correlated: true,
                wavelength_signal_nm: 792.0,
                wavelength_idler_nm: 824.0,
            },
            sample: SampleConfig { transmission: 1.0 },
            idler_channel: IdlerChannelConfig {
                setup_efficiency: 0.38,
                delay_s: 1.1e-6,
            },
            switch: SwitchConfig {
                enabled: true,
                electronic_latency_s: 0.6e-6,
                gate_width_s: 1.0e-6,
                off_state_leakage: 0.046,
                on_state_transmission: 1.0,
            },
            herald_detector: DetectorConfig {
                efficiency: 0.65,
                dark_rate: 25.0,
                dead_time_s: 0.0,
            },
            idler_detector: DetectorConfig {
                efficiency: 0.65,
                dark_rate: 25.0,
                dead_time_s: 0.0,
            },
            coincidence: CoincidenceConfig {
                window_s: 30e-9,
                nominal_offset_s: 1.1e-6,
                subtract_accidentals: true,
            },
        }
    }

    pub fn desk_profile() -> Self {
        let mut cfg = Self::paper_profile();
        cfg.source.duration = 0.02;
        cfg
    }

    pub fn from_profile(profile: Profile) -> Self {
        match profile {
            Profile::Paper => Self::paper_profile(),
            Profile::Desk => Self::desk_profile(),
        }
    }

    /// Parses a TOML document layered over `base`.
    pub fn from_toml_str(text: &str, base: &ExperimentConfig) -> Result<Self> {
        let overlay: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        let mut merged = toml::Table::try_from(base).map_err(|e| Error::Parse(e.to_string()))?;
        merge_tables(&mut merged, overlay);
        toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))
    }

    pub fn from_file(path: &Path, base: &ExperimentConfig) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text, base)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Same configuration with a different sample transmission.
    pub fn with_transmission(&self, transmission: f64) -> Self {
        let mut cfg = self.clone();
        cfg.sample.transmission = transmission;
        cfg
    }

    /// Idler-arm survival ahead of the idler detector: the setup efficiency
    /// with the detector efficiency factored out.
    pub fn idler_transport_efficiency(&self) -> f64 {
        if self.idler_detector.efficiency > 0.0 {
            (self.idler_channel.setup_efficiency / self.idler_detector.efficiency).min(1.0)
        } else {
            0.0
        }
    }
}

fn merge_tables(base: &mut toml::Table, overlay: toml::Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge_tables(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

/// Result of [`validate`]: violated invariants and legal-but-suspicious settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_runnable(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(self.violations))
        }
    }
}

fn is_probability(x: f64) -> bool {
    x.is_finite() && (0.0..=1.0).contains(&x)
}

pub fn validate(cfg: &ExperimentConfig) -> ValidationReport {
    let mut report = ValidationReport::default();
    let prob = |name: &str, x: f64, r: &mut ValidationReport| {
        if !is_probability(x) {
            r.violations.push(format!("{name} out of [0,1]"));
        }
    };

    let src = &cfg.source;
    if !(src.pair_rate.is_finite() && src.pair_rate > 0.0) {
        report.violations.push("source.pair_rate must be > 0".into());
    }
    if !(src.duration.is_finite() && src.duration > 0.0) {
        report.violations.push("source.duration must be > 0".into());
    }
    prob("source.signal_channel_efficiency", src.signal_channel_efficiency, &mut report);
    prob("sample.transmission", cfg.sample.transmission, &mut report);
    prob("idler_channel.setup_efficiency", cfg.idler_channel.setup_efficiency, &mut report);
    if !(cfg.idler_channel.delay_s.is_finite() && cfg.idler_channel.delay_s >= 0.0) {
        report.violations.push("idler_channel.delay_s must be >= 0".into());
    }

    let sw = &cfg.switch;
    if sw.enabled && !(sw.gate_width_s.is_finite() && sw.gate_width_s > 0.0) {
        report.violations.push("switch.gate_width_s must be > 0 when enabled".into());
    }
    if !(sw.electronic_latency_s.is_finite() && sw.electronic_latency_s >= 0.0) {
        report.violations.push("switch.electronic_latency_s must be >= 0".into());
    }
    prob("switch.off_state_leakage", sw.off_state_leakage, &mut report);
    prob("switch.on_state_transmission", sw.on_state_transmission, &mut report);

    for (name, det) in [("herald_detector", &cfg.herald_detector), ("idler_detector", &cfg.idler_detector)] {
        prob(&format!("{name}.efficiency"), det.efficiency, &mut report);
        if !(det.dark_rate.is_finite() && det.dark_rate >= 0.0) {
            report.violations.push(format!("{name}.dark_rate must be >= 0"));
        }
        if !(det.dead_time_s.is_finite() && det.dead_time_s >= 0.0) {
            report.violations.push(format!("{name}.dead_time_s must be >= 0"));
        }
    }
    if is_probability(cfg.idler_channel.setup_efficiency)
        && is_probability(cfg.idler_detector.efficiency)
        && cfg.idler_channel.setup_efficiency > cfg.idler_detector.efficiency
    {
        report
            .violations
            .push("idler_channel.setup_efficiency exceeds idler_detector.efficiency".into());
    }

    let co = &cfg.coincidence;
    if !(co.window_s.is_finite() && co.window_s > 0.0) {
        report.violations.push("coincidence.window_s must be > 0".into());
    }
    if !co.nominal_offset_s.is_finite() {
        report.violations.push("coincidence.nominal_offset_s must be finite".into());
    }
    if cfg.repetitions < 2 {
        report.violations.push("repetitions must be >= 2".into());
    }
    if !(cfg.jitter_std.is_finite() && cfg.jitter_std >= 0.0) {
        report.violations.push("jitter_std must be >= 0".into());
    }

    if !report.violations.is_empty() {
        return report;
    }

    // Timeline warnings. Only meaningful once the numbers themselves are sane.
    let delay = cfg.idler_channel.delay_s;
    if sw.enabled {
        let open = sw.electronic_latency_s;
        let close = open + sw.gate_width_s;
        if delay < open {
            report.warnings.push("heralded photon precedes gate opening".into());
        } else if delay >= close {
            report.warnings.push("heralded photon arrives after gate closes".into());
        }
        if co.window_s > sw.gate_width_s {
            report
                .warnings
                .push("coincidence window is wider than the switch gate".into());
        }
    }
    if (co.nominal_offset_s - delay).abs() > co.window_s / 2.0 {
        report
            .warnings
            .push("coincidence offset does not match the idler delay".into());
    }
    if delay >= src.duration {
        report.warnings.push("idler delay exceeds the trial duration".into());
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    Herald,
    Idler,
    IdlerB,
}

impl Channel {
    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Herald => "herald",
            Channel::Idler => "idler",
            Channel::IdlerB => "idler_b",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Detection timestamps of one channel, strictly ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTagStream {
    channel: Channel,
    timestamps: Vec<f64>,
}

impl TimeTagStream {
    pub fn new(channel: Channel, timestamps: Vec<f64>) -> Result<Self> {
        if timestamps.iter().any(|t| !t.is_finite()) {
            return Err(Error::Precondition("non-finite timestamp".into()));
        }
        if timestamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Precondition(format!(
                "{channel} timestamps not strictly increasing"
            )));
        }
        Ok(TimeTagStream { channel, timestamps })
    }

    pub(crate) fn from_sorted(channel: Channel, timestamps: Vec<f64>) -> Self {
        debug_assert!(timestamps.windows(2).all(|w| w[1] > w[0]));
        TimeTagStream { channel, timestamps }
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}

/// Per-trial tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrialCounts {
    /// Herald clicks, N_S.
    pub n_herald: u64,
    /// Idler clicks, N_I. Detector A in HBT mode.
    pub n_idler: u64,
    /// Detector B clicks in HBT mode, else 0.
    pub n_idler_b: u64,
    /// Herald-idler coincidences, N_C. Herald-A in HBT mode.
    pub n_coincidence: u64,
    /// Heralds with at least one A click in their window (herald-gated).
    pub n_coinc_herald_a: u64,
    /// Heralds with at least one B click in their window (herald-gated).
    pub n_coinc_herald_b: u64,
    /// Heralds with both an A and a B click in their window.
    pub n_triple: u64,
    /// Expected dark clicks per idler detector over the trial.
    pub dark_estimate: f64,
}

impl TrialCounts {
    pub fn satisfies_invariants(&self) -> bool {
        self.n_coincidence <= self.n_herald.min(self.n_idler)
            && self.n_triple <= self.n_coinc_herald_a.min(self.n_coinc_herald_b)
    }
}
