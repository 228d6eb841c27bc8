//! Summary statistics and the relative change between two groups of final
//! fidelities, as printed by `qgdm summarize`.
//!
//! `cargo run --example relative_change`

use qgdm::experiment::{relative_change_of_means, SummaryStats};

fn main() -> qgdm::Result<()> {
    let wide = [0.9921, 0.9874, 0.9990, 0.9612, 0.9957];
    let narrow = [0.6400, 0.6512, 0.6630, 0.6251, 0.6707];
    for (label, v) in [("n_tau=3", &wide[..]), ("n_tau=1", &narrow[..])] {
        let s = SummaryStats::from_values(label, v)?;
        println!("{label}: median {:.4} mean {:.4} std {:.4}", s.median, s.mean, s.std);
    }
    let r = relative_change_of_means(&wide, &narrow)?;
    println!("relative change {:.2}%", 100.0 * r);
    Ok(())
}
