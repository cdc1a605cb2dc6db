//! Theory curves of the heralded-probe advantage, without simulation.
//!
//! `cargo run --example analytic_curves`

use gatedprobe::analytic::{
    advantage_ratio, binomial_pmf, degraded_precision, fock_precision, jakeman_condition,
    lossy_fock_state, shot_noise_precision, REFERENCE_CURVES,
};

fn main() -> gatedprobe::Result<()> {
    print!("{:>5}", "eta");
    for c in &REFERENCE_CURVES {
        print!("{:>10}", c.label);
    }
    println!();
    for step in 0..=10 {
        let eta = step as f64 / 10.0;
        print!("{eta:>5.1}");
        for c in &REFERENCE_CURVES {
            match advantage_ratio(eta, c.eta_setup, c.eta_s) {
                Ok(r) => print!("{r:>10.4}"),
                Err(_) => print!("{:>10}", "inf"),
            }
        }
        println!();
    }

    // One photon at 65% transmission, a hundred repetitions.
    let eta = 0.65;
    println!("\nprecision per 100 photons at eta = {eta}");
    println!("  coherent      {:?}", shot_noise_precision(eta, 1.0, 100)?);
    println!("  ideal Fock    {:?}", fock_precision(eta, 1, 100)?);
    println!("  lab set-up    {:?} per photon", degraded_precision(eta, 0.38, 0.90)?);

    let out = lossy_fock_state(eta * 0.38)?;
    println!("\nFock state after the set-up: p0 = {:.4}, p1 = {:.4}", out.p0, out.p1);
    let pmf: Vec<String> = (0..=4).map(|k| binomial_pmf(k, 4, eta).map(|p| format!("{p:.4}"))).collect::<Result<_, _>>()?;
    println!("4-photon Fock state through eta: [{}]", pmf.join(", "));

    for (setup, eta_s) in [(0.38, 0.90), (0.38, 0.41)] {
        println!(
            "eta_setup {setup}, eta_s {eta_s}: sub-shot-noise at eta=1? {}",
            jakeman_condition(setup, eta_s)
        );
    }
    Ok(())
}
