//! Trains QGDM on a two-qubit mixture and compares the sampled state with
//! the target.
//!
//! `cargo run --release --example train_mixed`

use qgdm::circuits::{random_mixed_state, DEFAULT_PREP_LAYERS};
use qgdm::denoise::Variant;
use qgdm::experiment::{default_train_config, TargetKind};
use qgdm::generate::generate;
use qgdm::qstate::{fidelity, hs_distance};
use qgdm::train::{seeded_rng, train, RngStream};

fn main() -> qgdm::Result<()> {
    let cfg = default_train_config(Variant::Qgdm, 2, TargetKind::Mixed);
    let mut rng = seeded_rng(cfg.seed, RngStream::Target);
    let target = random_mixed_state(2, 2, DEFAULT_PREP_LAYERS, &mut rng)?;
    println!("target purity {:.4}", target.purity());

    let outcome = train(&cfg, Variant::Qgdm, &target)?;
    let trace = generate(&outcome.model, Some(&target))?;
    let out = &trace.final_state;
    println!("generated purity {:.4}", out.purity());
    println!("F = {:.6}  HS = {:.3e}", fidelity(out, &target)?, hs_distance(out, &target)?);
    Ok(())
}
