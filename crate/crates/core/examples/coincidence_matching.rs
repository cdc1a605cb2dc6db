//! One-to-one coincidence matching on hand-made time tags.
//!
//! `cargo run --example coincidence_matching`

use gatedprobe::estimation::{gated_triple_counts, match_tags};

fn main() {
    let ns = 1e-9;
    let herald = [100.0 * ns, 200.0 * ns, 215.0 * ns, 400.0 * ns];
    let idler = [110.0 * ns, 205.0 * ns, 230.0 * ns, 700.0 * ns];
    let (window, offset) = (40.0 * ns, 10.0 * ns);

    for (i, j) in match_tags(&herald, &idler, window, offset) {
        println!("herald {:>5.0} ns  <->  idler {:>5.0} ns", herald[i] / ns, idler[j] / ns);
    }

    // Herald-gated counting lets every herald claim any tag in its window.
    let idler_b = [212.0 * ns, 410.0 * ns];
    let (sa, sb, sab) = gated_triple_counts(&herald, &idler, &idler_b, window, offset);
    println!("gated: N_SA = {sa}, N_SB = {sb}, N_SAB = {sab}");
}
