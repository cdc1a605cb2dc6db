//! Calibrate at unit transmission, then measure a sample.
//!
//! `cargo run --release --example transmission_measurement -- [transmission]`

use gatedprobe::harness::run_point;
use gatedprobe::ExperimentConfig;

fn main() -> gatedprobe::Result<()> {
    let eta: f64 = std::env::args().nth(1).map_or(0.9, |s| s.parse().expect("transmission must be a number"));
    let mut cfg = ExperimentConfig::desk_profile().with_transmission(eta);
    cfg.master_seed = Some(2024);

    let result = run_point(&cfg)?;
    let cal = &result.calibration;
    let r = &result.report;
    println!("calibration: eta_setup = {:.4} +- {:.4} over {} trials", cal.eta_setup_measured, cal.stderr, cal.n_trials);
    println!("heralding fidelity eta_s = {:.4}", r.eta_s);
    println!("estimated transmission {:.5} (true {eta}), per-trial variance {:.3e}", r.eta_hat, r.var_eta);
    println!("photons per trial at the sample {:.0}", r.n_probe);
    match r.advantage_stderr {
        Some(se) => println!("advantage over coherent probe R = {:.3} +- {se:.3}", r.advantage),
        None => println!("advantage over coherent probe R = {:.3}", r.advantage),
    }
    Ok(())
}
