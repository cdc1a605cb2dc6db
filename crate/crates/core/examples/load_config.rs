//! Layer a TOML file over a profile and inspect validation warnings.
//!
//! `cargo run --example load_config -- [path.toml]`

use gatedprobe::{validate, ExperimentConfig};

const DEMO: &str = r#"
master_seed = 42

[sample]
transmission = 0.8

[switch]
electronic_latency_s = 1.5e-6
"#;

fn main() -> gatedprobe::Result<()> {
    let base = ExperimentConfig::paper_profile();
    let cfg = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::from_file(path.as_ref(), &base)?,
        None => ExperimentConfig::from_toml_str(DEMO, &base)?,
    };
    let report = validate(&cfg);
    for w in &report.warnings {
        println!("warning: {w}");
    }
    for v in &report.violations {
        println!("violation: {v}");
    }
    println!("runnable: {}\n", report.is_runnable());
    print!("{}", cfg.to_toml_string());
    Ok(())
}
