//! Trains a one-qubit QGDM on a random pure state and samples from it.
//!
//! `cargo run --release --example train_pure -- [seed]`

use qgdm::circuits::{random_pure_state, DEFAULT_PREP_LAYERS};
use qgdm::denoise::Variant;
use qgdm::experiment::{default_train_config, TargetKind};
use qgdm::generate::generate;
use qgdm::qstate::{bloch_coordinates, from_pure};
use qgdm::train::{seeded_rng, train_with, RngStream};

fn main() -> qgdm::Result<()> {
    let seed = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed is an integer"));
    let mut cfg = default_train_config(Variant::Qgdm, 1, TargetKind::Pure);
    cfg.seed = seed;

    let mut rng = seeded_rng(seed, RngStream::Target);
    let target = from_pure(&random_pure_state(1, DEFAULT_PREP_LAYERS, &mut rng)?);

    let outcome = train_with(&cfg, Variant::Qgdm, &target, |epoch, _| {
        if epoch % 50 == 0 {
            println!("epoch {epoch}");
        }
        Ok(())
    })?;
    let last = outcome.records.last().expect("at least one epoch");
    println!("final loss {:.3e} after {} epochs", last.loss, outcome.records.len());
    if let Some(e) = outcome.converged_at {
        println!("converged at epoch {e}");
    }

    let trace = generate(&outcome.model, Some(&target))?;
    for step in trace.steps.iter().filter(|s| s.t % 5 == 0 || s.t == 1) {
        println!("t={:>2} F={:.6}", step.t, step.fidelity.unwrap_or(f64::NAN));
    }
    let (got, want) = (bloch_coordinates(&trace.final_state)?, bloch_coordinates(&target)?);
    println!("generated ({:+.4}, {:+.4}, {:+.4})", got.x, got.y, got.z);
    println!("target    ({:+.4}, {:+.4}, {:+.4})", want.x, want.y, want.z);
    Ok(())
}
