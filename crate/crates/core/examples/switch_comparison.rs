//! What the feed-forward switch buys: heralding fidelity and advantage with it on and off.
//!
//! `cargo run --release --example switch_comparison`

use gatedprobe::harness::run_point;
use gatedprobe::montecarlo::expected_heralding_fidelity;
use gatedprobe::ExperimentConfig;

fn main() -> gatedprobe::Result<()> {
    for enabled in [true, false] {
        let mut cfg = ExperimentConfig::desk_profile().with_transmission(0.97);
        cfg.master_seed = Some(7);
        cfg.switch.enabled = enabled;
        let r = run_point(&cfg)?.report;
        println!(
            "switch {:<3}  eta_s {:.3} (model {:.3})  R = {:.3} +- {:.3}",
            if enabled { "on" } else { "off" },
            r.eta_s,
            expected_heralding_fidelity(&cfg),
            r.advantage,
            r.advantage_stderr.unwrap_or(f64::NAN),
        );
    }
    Ok(())
}
