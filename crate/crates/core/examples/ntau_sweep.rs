//! Final fidelity of QGDM as the timestep register grows, written to a
//! scratch directory.
//!
//! `cargo run --release --example ntau_sweep -- [out_dir]`

use std::path::PathBuf;

use qgdm::experiment::{cmd_sweep_ntau, ExperimentConfig};

fn main() -> qgdm::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("qgdm_ntau_sweep"), PathBuf::from);
    let cfg = ExperimentConfig { n: 2, seeds: (0..4).collect(), out_dir: out.clone(), ..Default::default() };
    for (k, stats) in cmd_sweep_ntau(&cfg, &[1, 2, 3])? {
        println!("n_tau={k}  median {:.5}  min {:.5}  max {:.5}", stats.median, stats.min, stats.max);
    }
    println!("artifacts in {}", out.display());
    Ok(())
}
