//! Closed-form precision theory for transmission estimation with coherent,
//! Fock and degraded heralded single-photon probes.
//!
//! Efficiency symbols follow one fixed convention throughout the crate:
//! `eta` is the sample transmission, `eta_setup` the sample-independent idler
//! arm efficiency (source times detector), `eta_i_total = eta * eta_setup` the
//! full Klyshko efficiency of the idler arm, and `eta_s` the heralding fidelity
//! (fraction of probe photons that were genuinely heralded).

use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};

/// Inverse variance of a transmission estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Precision {
    Finite(f64),
    /// The model predicts zero variance (e.g. a lossless Fock probe at `eta = 1`).
    Divergent,
}

impl Precision {
    pub fn value(self) -> Option<f64> {
        match self {
            Precision::Finite(v) => Some(v),
            Precision::Divergent => None,
        }
    }

    pub fn is_divergent(self) -> bool {
        matches!(self, Precision::Divergent)
    }
}

/// Vacuum / single-photon mixture left after loss acts on `|1><1|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureState {
    pub p0: f64,
    pub p1: f64,
}

/// One row of an advantage curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub eta: f64,
    pub r_analytic: f64,
    pub r_simulated: Option<f64>,
    pub stderr: Option<f64>,
    pub n_trials: Option<usize>,
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {x} out of [0,1]")))
    }
}

fn check_transmission(eta: f64) -> Result<()> {
    check_unit("eta", eta)?;
    if eta == 0.0 {
        return Err(Error::Singularity("zero transmission"));
    }
    Ok(())
}

/// Shot-noise limit `nu * n_in / eta`.
pub fn shot_noise_precision(eta: f64, n_in: f64, nu: u64) -> Result<Precision> {
    check_transmission(eta)?;
    if !(n_in.is_finite() && n_in > 0.0) {
        return Err(Error::Domain(format!("n_in = {n_in} must be > 0")));
    }
    if nu == 0 {
        return Err(Error::Domain("nu must be >= 1".into()));
    }
    Ok(Precision::Finite(nu as f64 * n_in / eta))
}

/// Fock-state probe `nu * n_in / (eta (1 - eta))`; divergent at `eta = 1`.
pub fn fock_precision(eta: f64, n_in: u64, nu: u64) -> Result<Precision> {
    check_transmission(eta)?;
    if n_in == 0 || nu == 0 {
        return Err(Error::Domain("n_in and nu must be >= 1".into()));
    }
    if eta == 1.0 {
        return Ok(Precision::Divergent);
    }
    Ok(Precision::Finite((nu * n_in) as f64 / (eta * (1.0 - eta))))
}

/// Probability that `n_out` of `n_in` photons survive a channel of
/// transmission `eta`. Evaluated in log space.
pub fn binomial_pmf(n_out: u64, n_in: u64, eta: f64) -> Result<f64> {
    check_unit("eta", eta)?;
    if n_out > n_in {
        return Err(Error::Domain(format!("n_out = {n_out} exceeds n_in = {n_in}")));
    }
    if eta == 0.0 {
        return Ok(if n_out == 0 { 1.0 } else { 0.0 });
    }
    if eta == 1.0 {
        return Ok(if n_out == n_in { 1.0 } else { 0.0 });
    }
    let k = n_out as f64;
    let n = n_in as f64;
    let log_p = ln_binomial(n_in, n_out) + k * eta.ln() + (n - k) * (-eta).ln_1p();
    Ok(log_p.exp())
}

pub fn lossy_fock_state(eta_i: f64) -> Result<MixtureState> {
    check_unit("eta_i", eta_i)?;
    Ok(MixtureState { p0: 1.0 - eta_i, p1: eta_i })
}

/// Precision of a lossy, imperfectly heralded single-photon probe,
/// `eta_s / (eta (1 - eta eta_setup))`, per input photon.
pub fn degraded_precision(eta: f64, eta_setup: f64, eta_s: f64) -> Result<Precision> {
    check_transmission(eta)?;
    check_unit("eta_setup", eta_setup)?;
    check_unit("eta_s", eta_s)?;
    let survival = eta * eta_setup;
    if survival == 1.0 {
        return Ok(Precision::Divergent);
    }
    Ok(Precision::Finite(eta_s / (eta * (1.0 - survival))))
}

/// Advantage over a coherent probe with the same detector efficiency,
/// `R = eta_s / (1 - eta eta_setup)`. `R > 1` is sub-shot-noise.
pub fn advantage_ratio(eta: f64, eta_setup: f64, eta_s: f64) -> Result<f64> {
    check_unit("eta", eta)?;
    check_unit("eta_setup", eta_setup)?;
    check_unit("eta_s", eta_s)?;
    let survival = eta * eta_setup;
    if survival == 1.0 {
        return Err(Error::Singularity("lossless heralded probe: eta * eta_setup = 1"));
    }
    Ok(eta_s / (1.0 - survival))
}

/// Threshold for any advantage: `eta_i_total + eta_s > 1`.
pub fn jakeman_condition(eta_i_total: f64, eta_s: f64) -> bool {
    eta_i_total + eta_s > 1.0
}

pub fn sweep_advantage_curve(eta_grid: &[f64], eta_setup: f64, eta_s: f64) -> Result<Vec<CurvePoint>> {
    eta_grid
        .iter()
        .map(|&eta| {
            Ok(CurvePoint {
                eta,
                r_analytic: advantage_ratio(eta, eta_setup, eta_s)?,
                r_simulated: None,
                stderr: None,
                n_trials: None,
            })
        })
        .collect()
}

/// A labelled theory curve: setup efficiency and heralding fidelity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryCurve {
    pub label: &'static str,
    pub eta_setup: f64,
    pub eta_s: f64,
}

/// The reference family: the ideal heralded Fock probe, two lossy set-ups
/// without leakage, and the same two set-ups with leakage `1 - eta_s` equal to
/// their setup efficiency. The shot-noise limit is the constant `R = 1`.
pub const REFERENCE_CURVES: [TheoryCurve; 5] = [
    TheoryCurve { label: "r_ideal", eta_setup: 1.0, eta_s: 1.0 },
    TheoryCurve { label: "r_case1", eta_setup: 0.4, eta_s: 1.0 },
    TheoryCurve { label: "r_case2", eta_setup: 0.6, eta_s: 1.0 },
    TheoryCurve { label: "r_case3", eta_setup: 0.4, eta_s: 0.6 },
    TheoryCurve { label: "r_case4", eta_setup: 0.6, eta_s: 0.4 },
];

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn finite(p: Precision) -> f64 {
        p.value().expect("finite precision")
    }

    #[test]
    fn shot_noise_examples() {
        assert_eq!(finite(shot_noise_precision(0.5, 1.0, 1).unwrap()), 2.0);
        assert_eq!(finite(shot_noise_precision(1.0, 1.0, 1).unwrap()), 1.0);
        assert_eq!(finite(shot_noise_precision(0.25, 2.0, 3).unwrap()), 24.0);
        assert!(matches!(shot_noise_precision(0.0, 1.0, 1), Err(Error::Singularity(_))));
    }

    #[test]
    fn fock_examples() {
        assert_eq!(finite(fock_precision(0.5, 1, 1).unwrap()), 4.0);
        assert!(fock_precision(1.0, 1, 1).unwrap().is_divergent());
        assert!(matches!(fock_precision(0.0, 1, 1), Err(Error::Singularity(_))));
        let ratio = finite(fock_precision(0.5, 1, 1).unwrap())
            / finite(shot_noise_precision(0.5, 1.0, 1).unwrap());
        assert_eq!(ratio, 2.0);
    }

    #[test]
    fn binomial_examples() {
        assert!((binomial_pmf(1, 1, 0.3).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(binomial_pmf(2, 2, 1.0).unwrap(), 1.0);
        assert!((binomial_pmf(0, 2, 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(binomial_pmf(3, 2, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn binomial_large_n_is_finite() {
        let n = 1_000_000;
        let p = binomial_pmf(380_000, n, 0.38).unwrap();
        // Peak of a binomial ~ 1/sqrt(2 pi n p q).
        let peak = 1.0 / (2.0 * std::f64::consts::PI * n as f64 * 0.38 * 0.62).sqrt();
        assert!((p / peak - 1.0).abs() < 1e-3, "p = {p}, peak = {peak}");
    }

    #[test]
    fn binomial_normalized_and_mean() {
        for n in [1u64, 10, 100, 1000] {
            for eta in [0.1, 0.38, 0.5, 0.97] {
                let (mut total, mut mean) = (0.0, 0.0);
                for k in 0..=n {
                    let p = binomial_pmf(k, n, eta).unwrap();
                    total += p;
                    mean += k as f64 * p;
                }
                assert!((total - 1.0).abs() < 1e-12, "n={n} eta={eta} sum={total}");
                assert!((mean - eta * n as f64).abs() < 1e-12 * n as f64 + 1e-12, "n={n} mean={mean}");
            }
        }
    }

    #[test]
    fn mixture_examples() {
        assert_eq!(lossy_fock_state(1.0).unwrap(), MixtureState { p0: 0.0, p1: 1.0 });
        assert_eq!(lossy_fock_state(0.0).unwrap(), MixtureState { p0: 1.0, p1: 0.0 });
        let m = lossy_fock_state(0.38).unwrap();
        assert!((m.p0 - 0.62).abs() < 1e-15);
        assert!(lossy_fock_state(1.1).is_err());
    }

    #[test]
    fn degraded_examples() {
        assert_eq!(finite(degraded_precision(1.0, 0.0, 1.0).unwrap()), 1.0);
        let v = finite(degraded_precision(0.97, 0.38, 0.90).unwrap());
        assert!((v - 1.4695).abs() < 5e-5, "{v}");
        assert_eq!(finite(degraded_precision(0.5, 1.0, 1.0).unwrap()), 4.0);
        assert!(degraded_precision(1.0, 1.0, 1.0).unwrap().is_divergent());
        assert!(matches!(degraded_precision(0.0, 0.4, 1.0), Err(Error::Singularity(_))));
    }

    #[test]
    fn advantage_examples() {
        let r = advantage_ratio(0.97, 0.38, 0.90).unwrap();
        assert!((r - 1.4254).abs() < 5e-5, "{r}");
        assert_eq!(advantage_ratio(1.0, 0.40, 0.60).unwrap(), 1.0);
        let off = advantage_ratio(1.0, 0.38, 0.38).unwrap();
        assert!((off - 0.6129).abs() < 5e-5, "{off}");
        assert!(matches!(advantage_ratio(1.0, 1.0, 1.0), Err(Error::Singularity(_))));
    }

    #[test]
    fn jakeman_examples() {
        assert!(!jakeman_condition(0.44, 0.41));
        assert!(jakeman_condition(0.3686, 0.90));
        assert!(!jakeman_condition(0.5, 0.5));
    }

    #[test]
    fn sweep_examples() {
        let p = sweep_advantage_curve(&[0.5], 1.0, 1.0).unwrap();
        assert_eq!(p[0].r_analytic, 2.0);
        let p = sweep_advantage_curve(&[1.0], 0.6, 1.0).unwrap();
        assert!((p[0].r_analytic - 2.5).abs() < 1e-12);
        let p = sweep_advantage_curve(&[0.0], 0.6, 0.7).unwrap();
        assert_eq!(p[0].r_analytic, 0.7);
    }

    #[test]
    fn dashed_reference_curves_end_at_unity() {
        for c in &REFERENCE_CURVES[3..] {
            assert_eq!(advantage_ratio(1.0, c.eta_setup, c.eta_s).unwrap(), 1.0, "{}", c.label);
        }
    }

    proptest! {
        #[test]
        fn advantage_iff_jakeman(eta in 0.0f64..1.0, setup in 0.0f64..1.0, eta_s in 0.0f64..=1.0) {
            let r = advantage_ratio(eta, setup, eta_s).unwrap();
            let margin = eta * setup + eta_s - 1.0;
            // Skip the rounding band around the boundary.
            prop_assume!(margin.abs() > 1e-12);
            prop_assert_eq!(r > 1.0, jakeman_condition(eta * setup, eta_s));
        }

        #[test]
        fn fock_beats_shot_noise(eta in 1e-9f64..(1.0 - 1e-9), n in 1u64..100, nu in 1u64..100) {
            let f = finite(fock_precision(eta, n, nu).unwrap());
            let s = finite(shot_noise_precision(eta, n as f64, nu).unwrap());
            prop_assert!(f > s);
        }

        #[test]
        fn degraded_matches_fock_when_lossless(eta in 1e-9f64..(1.0 - 1e-9)) {
            let d = finite(degraded_precision(eta, 1.0, 1.0).unwrap());
            let f = finite(fock_precision(eta, 1, 1).unwrap());
            prop_assert!((d / f - 1.0).abs() < 1e-12);
        }

        #[test]
        fn advantage_is_degraded_times_eta(eta in 1e-6f64..1.0, s in 0.0f64..0.999, f in 0.0f64..1.0) {
            let r = advantage_ratio(eta, s, f).unwrap();
            let d = finite(degraded_precision(eta, s, f).unwrap());
            prop_assert!((d * eta - r).abs() <= 1e-12 * r.max(1.0));
        }

        #[test]
        fn advantage_monotone(eta in 0.01f64..0.98, s in 0.01f64..0.98, f in 0.01f64..0.98, step in 1e-3f64..0.01) {
            let r = advantage_ratio(eta, s, f).unwrap();
            prop_assert!(advantage_ratio(eta + step, s, f).unwrap() > r);
            prop_assert!(advantage_ratio(eta, s + step, f).unwrap() > r);
            prop_assert!(advantage_ratio(eta, s, f + step).unwrap() > r);
        }

        #[test]
        fn mixture_sums_to_one(eta_i in 0.0f64..=1.0) {
            let m = lossy_fock_state(eta_i).unwrap();
            prop_assert_eq!(m.p0 + m.p1, 1.0);
            prop_assert!((0.0..=1.0).contains(&m.p0));
        }
    }
}
