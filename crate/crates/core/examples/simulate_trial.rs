//! One Monte Carlo trial with raw time tags.
//!
//! `cargo run --release --example simulate_trial -- [seed] [tags.tsv]`

use gatedprobe::estimation::count_coincidences;
use gatedprobe::montecarlo::{build_gate_schedule, format_time_tags, simulate_trial};
use gatedprobe::ExperimentConfig;

fn main() -> gatedprobe::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map_or(Ok(1), |s| s.parse()).expect("seed must be an integer");
    let mut cfg = ExperimentConfig::desk_profile();
    cfg.master_seed = Some(seed);

    let out = simulate_trial(&cfg, 0, true)?;
    let tags = out.tags.expect("tags requested");
    let (herald, idler) = (&tags[0], &tags[1]);
    let c = out.counts;
    println!("heralds {}, idler clicks {}, coincidences {}", c.n_herald, c.n_idler, c.n_coincidence);

    let gates = build_gate_schedule(herald.timestamps(), cfg.switch.electronic_latency_s, cfg.switch.gate_width_s);
    println!(
        "switch open {:.2}% of the time in {} intervals",
        100.0 * gates.total_open_time() / cfg.source.duration,
        gates.intervals().len()
    );
    let in_gate = idler.timestamps().iter().filter(|&&t| gates.contains(t)).count();
    println!("idler clicks inside a gate: {in_gate} of {}", idler.len());

    // Recount with a window off the delay: only accidentals are left.
    let w = cfg.coincidence.window_s;
    let off = count_coincidences(herald, idler, w, cfg.coincidence.nominal_offset_s + 10.0 * w)?;
    println!("coincidences 10 windows off the delay: {off}");

    if let Some(path) = args.next() {
        std::fs::write(&path, format_time_tags(&tags))?;
        println!("tags written to {path}");
    }
    Ok(())
}
