//! Heralded g2(0) with the idler split onto two detectors.
//!
//! `cargo run --release --example heralded_g2`

use gatedprobe::harness::g2_measurement;
use gatedprobe::ExperimentConfig;

fn main() -> gatedprobe::Result<()> {
    for rate in [2e4, 8.1e4, 3e5] {
        let mut cfg = ExperimentConfig::desk_profile();
        cfg.master_seed = Some(9);
        cfg.hbt_mode = true;
        cfg.repetitions = 1000;
        cfg.switch.enabled = false;
        cfg.source.pair_rate = rate;
        let r = g2_measurement(&cfg)?;
        let oracle = 2.0 * rate * cfg.coincidence.window_s;
        println!(
            "pair rate {rate:>8.0}/s  g2 = {:.5} +- {:.5}  multi-pair estimate {oracle:.5}  triples {}",
            r.g2,
            r.stderr.unwrap_or(f64::NAN),
            r.n_triple
        );
    }
    Ok(())
}
