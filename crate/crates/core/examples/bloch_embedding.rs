//! Where a trained one-qubit timestep embedding places each `t` on the
//! Bloch sphere.
//!
//! `cargo run --release --example bloch_embedding`

use qgdm::denoise::Variant;
use qgdm::experiment::{bloch_csv, bloch_trajectory, ExperimentConfig};
use qgdm::train::train;

fn main() -> qgdm::Result<()> {
    let cfg = ExperimentConfig { seeds: vec![0], ..Default::default() };
    let tc = cfg.train_config(0);
    let outcome = train(&tc, Variant::Qgdm, &cfg.target_state(0)?)?;

    let points = bloch_trajectory(&outcome.model)?;
    print!("{}", bloch_csv(&points));
    let spread = points.windows(2).map(|w| w[0].angle_to(&w[1])).sum::<f64>();
    println!("# path length on the sphere {spread:.4} rad");
    Ok(())
}
