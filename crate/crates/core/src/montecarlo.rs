//! Event-based simulation of the heralded feed-forward set-up.
//!
//! Pairs are emitted as a homogeneous Poisson process. The signal photon goes
//! to the herald detector; its clicks open the switch after a fixed latency.
//! The idler photon is delayed, loses photons in the set-up, passes or is
//! blocked by the switch, is attenuated by the sample and is finally detected.
//! Losses are independent Bernoulli thinnings; time is continuous.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimation::{gated_triple_counts, match_tags};
use crate::model::{validate, Channel, DetectorConfig, ExperimentConfig, TimeTagStream, TrialCounts};

/// Reproducible random stream for one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Mixes a label into a seed (SplitMix64 finaliser). Used to give calibration
/// runs and sweep points their own independent seeds.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Homogeneous Poisson arrivals on `[0, duration)`.
pub fn generate_pair_emissions<R: Rng + ?Sized>(rate: f64, duration: f64, rng: &mut R) -> Vec<f64> {
    assert!(rate > 0.0 && duration > 0.0, "rate and duration must be positive");
    let gap = Exp::new(rate).expect("positive rate");
    let mut times = Vec::with_capacity((rate * duration * 1.05) as usize + 16);
    let mut t = gap.sample(rng);
    while t < duration {
        times.push(t);
        t += gap.sample(rng);
    }
    times
}

/// Keeps each event independently with probability `p`.
pub fn thin<R: Rng + ?Sized>(events: &[f64], p: f64, rng: &mut R) -> Vec<f64> {
    if p >= 1.0 {
        return events.to_vec();
    }
    if p <= 0.0 {
        return Vec::new();
    }
    events.iter().copied().filter(|_| rng.gen::<f64>() < p).collect()
}

/// Open intervals of the switch, sorted and disjoint.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GateSchedule {
    intervals: Vec<(f64, f64)>,
}

impl GateSchedule {
    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Half-open membership test, `open <= t < close`.
    pub fn contains(&self, t: f64) -> bool {
        let idx = self.intervals.partition_point(|&(_, close)| close <= t);
        self.intervals.get(idx).is_some_and(|&(open, _)| open <= t)
    }

    pub fn total_open_time(&self) -> f64 {
        self.intervals.iter().map(|(o, c)| c - o).sum()
    }
}

/// One `[t + latency, t + latency + width)` window per herald click, merged
/// where they overlap.
pub fn build_gate_schedule(herald_clicks: &[f64], latency: f64, width: f64) -> GateSchedule {
    let mut intervals: Vec<(f64, f64)> = Vec::with_capacity(herald_clicks.len());
    for &t in herald_clicks {
        let (open, close) = (t + latency, t + latency + width);
        match intervals.last_mut() {
            Some(last) if open <= last.1 => last.1 = last.1.max(close),
            _ => intervals.push((open, close)),
        }
    }
    GateSchedule { intervals }
}

pub fn apply_switch<R: Rng + ?Sized>(
    arrivals: &[f64],
    schedule: &GateSchedule,
    on_trans: f64,
    leakage: f64,
    enabled: bool,
    rng: &mut R,
) -> Vec<f64> {
    if !enabled {
        return thin(arrivals, on_trans, rng);
    }
    let gates = schedule.intervals();
    let mut k = 0;
    let mut out = Vec::with_capacity(arrivals.len());
    for &t in arrivals {
        while k < gates.len() && gates[k].1 <= t {
            k += 1;
        }
        let open = k < gates.len() && gates[k].0 <= t;
        let p = if open { on_trans } else { leakage };
        if rng.gen::<f64>() < p {
            out.push(t);
        }
    }
    out
}

/// Click detector: efficiency thinning, Poisson dark counts, then
/// non-paralyzable dead time. Clicks outside `[0, duration)` are dropped.
pub fn detect<R: Rng + ?Sized>(
    channel: Channel,
    arrivals: &[f64],
    det: &DetectorConfig,
    duration: f64,
    rng: &mut R,
) -> TimeTagStream {
    let photons = thin(arrivals, det.efficiency, rng);
    let darks = if det.dark_rate > 0.0 {
        generate_pair_emissions(det.dark_rate, duration, rng)
    } else {
        Vec::new()
    };
    let mut merged = Vec::with_capacity(photons.len() + darks.len());
    let (mut i, mut j) = (0, 0);
    while i < photons.len() || j < darks.len() {
        let take_photon = j == darks.len() || (i < photons.len() && photons[i] <= darks[j]);
        let t = if take_photon {
            i += 1;
            photons[i - 1]
        } else {
            j += 1;
            darks[j - 1]
        };
        if !(0.0..duration).contains(&t) {
            continue;
        }
        match merged.last() {
            Some(&last) if t <= last || t - last < det.dead_time_s => {}
            _ => merged.push(t),
        }
    }
    TimeTagStream::from_sorted(channel, merged)
}

/// Output of one simulated trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutput {
    pub counts: TrialCounts,
    /// Raw detector streams, when requested.
    pub tags: Option<Vec<TimeTagStream>>,
}

fn setup_jitter<R: Rng + ?Sized>(jitter_std: f64, rng: &mut R) -> f64 {
    if jitter_std <= 0.0 {
        return 1.0;
    }
    // Mean-one log-normal with relative standard deviation `jitter_std`.
    let sigma2 = (1.0 + jitter_std * jitter_std).ln();
    LogNormal::new(-sigma2 / 2.0, sigma2.sqrt())
        .expect("finite parameters")
        .sample(rng)
}

fn seed_of(cfg: &ExperimentConfig) -> Result<u64> {
    cfg.master_seed
        .ok_or_else(|| Error::InvalidConfig(vec!["master_seed is not set".into()]))
}

/// Simulates trial `trial_index`. All randomness comes from
/// `RngStream::new(master_seed, trial_index)`.
pub fn simulate_trial(cfg: &ExperimentConfig, trial_index: u64, keep_tags: bool) -> Result<TrialOutput> {
    validate(cfg).into_result()?;
    let seed = seed_of(cfg)?;
    Ok(simulate_validated(cfg, RngStream::new(seed, trial_index), keep_tags))
}

fn simulate_validated(cfg: &ExperimentConfig, stream: RngStream, keep_tags: bool) -> TrialOutput {
    let mut rng = stream.rng();
    let src = &cfg.source;
    let duration = src.duration;

    let emissions = generate_pair_emissions(src.pair_rate, duration, &mut rng);
    let idler_emissions = if src.pair_correlated {
        None
    } else {
        Some(generate_pair_emissions(src.pair_rate, duration, &mut rng))
    };

    // Herald arm.
    let signal = thin(&emissions, src.signal_channel_efficiency, &mut rng);
    let herald = detect(Channel::Herald, &signal, &cfg.herald_detector, duration, &mut rng);

    // Idler arm.
    let delay = cfg.idler_channel.delay_s;
    let delayed: Vec<f64> = idler_emissions
        .as_deref()
        .unwrap_or(&emissions)
        .iter()
        .map(|t| t + delay)
        .take_while(|&t| t < duration)
        .collect();
    let factor = setup_jitter(cfg.jitter_std, &mut rng);
    let setup = (cfg.idler_channel.setup_efficiency * factor).clamp(0.0, 1.0);
    let transport = if cfg.idler_detector.efficiency > 0.0 {
        (setup / cfg.idler_detector.efficiency).min(1.0)
    } else {
        0.0
    };
    let transported = thin(&delayed, transport, &mut rng);
    let sw = &cfg.switch;
    let schedule = if sw.enabled {
        build_gate_schedule(herald.timestamps(), sw.electronic_latency_s, sw.gate_width_s)
    } else {
        GateSchedule::default()
    };
    let switched = apply_switch(
        &transported,
        &schedule,
        sw.on_state_transmission,
        sw.off_state_leakage,
        sw.enabled,
        &mut rng,
    );
    let at_detector = thin(&switched, cfg.sample.transmission, &mut rng);

    let window = cfg.coincidence.window_s;
    let offset = cfg.coincidence.nominal_offset_s;
    let dark_estimate = cfg.idler_detector.dark_rate * duration;

    let (counts, tags) = if cfg.hbt_mode {
        let mut to_a = Vec::with_capacity(at_detector.len() / 2 + 1);
        let mut to_b = Vec::with_capacity(at_detector.len() / 2 + 1);
        for &t in &at_detector {
            if rng.gen_bool(0.5) {
                to_a.push(t);
            } else {
                to_b.push(t);
            }
        }
        let a = detect(Channel::Idler, &to_a, &cfg.idler_detector, duration, &mut rng);
        let b = detect(Channel::IdlerB, &to_b, &cfg.idler_detector, duration, &mut rng);
        let (h, ta, tb) = (herald.timestamps(), a.timestamps(), b.timestamps());
        let (n_sa, n_sb, n_triple) = gated_triple_counts(h, ta, tb, window, offset);
        let counts = TrialCounts {
            n_herald: herald.len() as u64,
            n_idler: a.len() as u64,
            n_idler_b: b.len() as u64,
            n_coincidence: match_tags(h, ta, window, offset).len() as u64,
            n_coinc_herald_a: n_sa,
            n_coinc_herald_b: n_sb,
            n_triple,
            dark_estimate,
        };
        (counts, keep_tags.then(|| vec![herald, a, b]))
    } else {
        let idler = detect(Channel::Idler, &at_detector, &cfg.idler_detector, duration, &mut rng);
        let n_c = match_tags(herald.timestamps(), idler.timestamps(), window, offset).len() as u64;
        let counts = TrialCounts {
            n_herald: herald.len() as u64,
            n_idler: idler.len() as u64,
            n_coincidence: n_c,
            n_coinc_herald_a: n_c,
            dark_estimate,
            ..Default::default()
        };
        (counts, keep_tags.then(|| vec![herald, idler]))
    };
    debug_assert!(counts.satisfies_invariants());
    TrialOutput { counts, tags }
}

/// Runs `repetitions` trials with stream ids `0..repetitions`, in parallel.
/// The result is ordered by trial index and does not depend on scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialCounts>> {
    validate(cfg).into_result()?;
    let seed = seed_of(cfg)?;
    Ok((0..cfg.repetitions as u64)
        .into_par_iter()
        .map(|i| simulate_validated(cfg, RngStream::new(seed, i), false).counts)
        .collect())
}

/// Expected fraction of photons reaching the sample that were heralded, from
/// the configuration alone. Assumes the heralded photon falls inside its own
/// gate and ignores herald dead time.
pub fn expected_heralding_fidelity(cfg: &ExperimentConfig) -> f64 {
    if !cfg.source.pair_correlated {
        return 0.0;
    }
    let h = cfg.source.signal_channel_efficiency * cfg.herald_detector.efficiency;
    let sw = &cfg.switch;
    let unheralded_pass = if sw.enabled {
        let herald_rate = cfg.source.pair_rate * h + cfg.herald_detector.dark_rate;
        let duty = 1.0 - (-herald_rate * sw.gate_width_s).exp();
        duty * sw.on_state_transmission + (1.0 - duty) * sw.off_state_leakage
    } else {
        sw.on_state_transmission
    };
    let heralded = h * sw.on_state_transmission;
    heralded / (heralded + (1.0 - h) * unheralded_pass)
}

/// Tab-separated debug dump of several streams, merged and sorted by time:
/// `channel_id<TAB>time_seconds` per line.
pub fn format_time_tags(streams: &[TimeTagStream]) -> String {
    let mut rows: Vec<(f64, Channel)> = streams
        .iter()
        .flat_map(|s| s.timestamps().iter().map(move |&t| (t, s.channel())))
        .collect();
    rows.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut out = String::with_capacity(rows.len() * 32);
    for (t, ch) in rows {
        out.push_str(&format!("{ch}\t{t:.16e}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const US: f64 = 1e-6;

    fn rng(stream: u64) -> ChaCha8Rng {
        RngStream::new(42, stream).rng()
    }

    #[test]
    fn emissions_are_deterministic_and_sorted() {
        let a = generate_pair_emissions(1e4, 0.2, &mut rng(0));
        let b = generate_pair_emissions(1e4, 0.2, &mut rng(0));
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert!(a.iter().all(|&t| (0.0..0.2).contains(&t)));
        assert_ne!(a, generate_pair_emissions(1e4, 0.2, &mut rng(1)));
    }

    #[test]
    #[should_panic]
    fn zero_rate_rejected() {
        generate_pair_emissions(0.0, 1.0, &mut rng(0));
    }

    #[test]
    fn emission_count_moments() {
        let counts: Vec<f64> = (0..400)
            .map(|s| generate_pair_emissions(1e4, 0.2, &mut rng(s)).len() as f64)
            .collect();
        let n = counts.len() as f64;
        let mean = counts.iter().sum::<f64>() / n;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // Poisson(2000): sd 44.7; mean has sd 2.24 over 400 draws.
        assert!((mean - 2000.0).abs() < 3.0 * 44.72 / n.sqrt(), "mean {mean}");
        // Sample variance of 400 Poisson draws has relative sd ~ sqrt(2/399).
        assert!((var / 2000.0 - 1.0).abs() < 3.0 * (2.0 / (n - 1.0)).sqrt(), "var {var}");
    }

    #[test]
    fn thin_edge_cases_and_fraction() {
        let events: Vec<f64> = (0..100_000).map(|i| i as f64).collect();
        assert_eq!(thin(&events, 1.0, &mut rng(0)), events);
        assert!(thin(&events, 0.0, &mut rng(0)).is_empty());
        let kept = thin(&events, 0.38, &mut rng(3));
        let sd = (1e5f64 * 0.38 * 0.62).sqrt();
        assert!((kept.len() as f64 - 38_000.0).abs() < 3.0 * sd);
        assert!(kept.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn gate_schedule_examples() {
        let s = build_gate_schedule(&[0.0], 0.6 * US, 1.0 * US);
        assert_eq!(s.intervals(), &[(0.6 * US, 1.6 * US)]);
        let s = build_gate_schedule(&[0.0, 0.2 * US], 0.6 * US, 1.0 * US);
        assert_eq!(s.intervals().len(), 1);
        let (o, c) = s.intervals()[0];
        assert!((o - 0.6 * US).abs() < 1e-18 && (c - 1.8 * US).abs() < 1e-18);
        assert!(build_gate_schedule(&[], 0.6 * US, 1.0 * US).is_empty());
        assert!(s.contains(0.6 * US) && s.contains(1.7 * US) && !s.contains(1.9 * US) && !s.contains(0.0));
    }

    #[test]
    fn switch_examples() {
        let s = build_gate_schedule(&[0.0], 0.6 * US, 1.0 * US);
        assert_eq!(apply_switch(&[1.0 * US], &s, 1.0, 0.0, true, &mut rng(0)), vec![1.0 * US]);
        assert!(apply_switch(&[2.0 * US], &s, 1.0, 0.0, true, &mut rng(0)).is_empty());
        let all = apply_switch(&[2.0 * US, 3.0 * US], &s, 1.0, 0.0, false, &mut rng(0));
        assert_eq!(all.len(), 2);
    }

    #[test]
    fn switch_passes_duty_cycle_fraction() {
        let mut r = rng(9);
        let duration = 0.05;
        let heralds = generate_pair_emissions(2e5, duration, &mut r);
        let schedule = build_gate_schedule(&heralds, 0.6 * US, 1.0 * US);
        let open: f64 = schedule
            .intervals()
            .iter()
            .map(|&(o, c)| c.min(duration) - o.min(duration))
            .sum();
        let duty = open / duration;
        let arrivals = generate_pair_emissions(2e6, duration, &mut r);
        let passed = apply_switch(&arrivals, &schedule, 1.0, 0.0, true, &mut r);
        let frac = passed.len() as f64 / arrivals.len() as f64;
        // Binomial spread over ~1e5 arrivals; the duty cycle itself is exact.
        let sd = (duty * (1.0 - duty) / arrivals.len() as f64).sqrt();
        assert!((frac - duty).abs() < 4.0 * sd, "frac {frac} duty {duty}");
        assert!(passed.iter().all(|&t| schedule.contains(t)));
    }

    #[test]
    fn detector_examples() {
        let ideal = DetectorConfig { efficiency: 1.0, dark_rate: 0.0, dead_time_s: 0.0 };
        let arrivals = [1e-6, 2e-6, 5e-6];
        assert_eq!(detect(Channel::Idler, &arrivals, &ideal, 1.0, &mut rng(0)).timestamps(), &arrivals);

        let dead = DetectorConfig { dead_time_s: 50e-9, ..ideal.clone() };
        assert_eq!(detect(Channel::Idler, &[100e-9, 110e-9], &dead, 1.0, &mut rng(0)).len(), 1);

        let dark = DetectorConfig { efficiency: 1.0, dark_rate: 1e3, dead_time_s: 0.0 };
        let n = 300;
        let total: usize = (0..n).map(|s| detect(Channel::Idler, &[], &dark, 0.2, &mut rng(s)).len()).sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 200.0).abs() < 3.0 * (200.0f64 / n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn dead_time_is_non_paralyzable() {
        let det = DetectorConfig { efficiency: 1.0, dark_rate: 0.0, dead_time_s: 50e-9 };
        // 0, 40 (dead), 60 (accepted: 60 >= 0 + 50), 90 (dead from 60).
        let out = detect(Channel::Idler, &[0.0, 40e-9, 60e-9, 90e-9], &det, 1.0, &mut rng(0));
        assert_eq!(out.timestamps(), &[0.0, 60e-9]);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        assert_eq!(derive_seed(5, 7), derive_seed(5, 7));
    }

    #[test]
    fn trial_requires_seed() {
        let cfg = ExperimentConfig::desk_profile();
        assert!(matches!(simulate_trial(&cfg, 0, false), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn paper_profile_fidelity_near_ninety_percent() {
        let f = expected_heralding_fidelity(&ExperimentConfig::paper_profile());
        assert!((f - 0.90).abs() < 2e-3, "{f}");
        let mut off = ExperimentConfig::paper_profile();
        off.switch.enabled = false;
        let f_off = expected_heralding_fidelity(&off);
        assert!((f_off - 0.63 * 0.65).abs() < 1e-12);
    }

    #[test]
    fn time_tag_dump_format() {
        let h = TimeTagStream::new(Channel::Herald, vec![1e-6, 3e-6]).unwrap();
        let i = TimeTagStream::new(Channel::Idler, vec![2e-6]).unwrap();
        let text = format_time_tags(&[h, i]);
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        let (ch, t) = lines[0].split_once('\t').unwrap();
        assert_eq!(ch, "herald");
        assert_eq!(t.parse::<f64>().unwrap(), 1e-6);
        assert!(lines[1].starts_with("idler\t"));
        assert!(lines[2].starts_with("herald\t"));
    }
}
