//! Saving a model, restoring it and sampling again gives the same state.
//!
//! `cargo run --release --example checkpoint`

use qgdm::denoise::{Checkpoint, Variant};
use qgdm::experiment::ExperimentConfig;
use qgdm::generate::{generate, read_state_json, write_state_json};
use qgdm::qstate::hs_distance;
use qgdm::train::{seeded_rng, RngStream, TrainConfig};

fn main() -> qgdm::Result<()> {
    let dir = std::env::temp_dir().join("qgdm_checkpoint_example");
    std::fs::create_dir_all(&dir).map_err(|e| qgdm::Error::Io { path: dir.clone(), source: e })?;

    let tc = TrainConfig { epochs: 20, ..TrainConfig::default() };
    let target = ExperimentConfig::default().target_state(0)?;
    let outcome = qgdm::train::train(&tc, Variant::Qgdm, &target)?;
    let path = dir.join("checkpoint.json");
    Checkpoint::from_model(&outcome.model).save(&path)?;

    let restored = Checkpoint::load(&path)?.into_model()?;
    assert_eq!(restored.flat_params(), outcome.model.flat_params());
    let a = generate(&outcome.model, None)?.final_state;
    let b = generate(&restored, None)?.final_state;
    write_state_json(&b, dir.join("state.json"))?;
    let c = read_state_json(dir.join("state.json"))?;
    println!("HS(original, restored) = {:e}", hs_distance(&a, &b)?);
    println!("HS(restored, reloaded state) = {:e}", hs_distance(&b, &c)?);

    // An untrained model of the same shape for comparison.
    let mut rng = seeded_rng(0, RngStream::Init);
    let fresh = qgdm::denoise::BackwardModel::random_init(*restored.architecture(), &mut rng)?;
    let f = generate(&fresh, Some(&target))?.final_fidelity().unwrap_or(f64::NAN);
    let g = generate(&restored, Some(&target))?.final_fidelity().unwrap_or(f64::NAN);
    println!("fidelity untrained {f:.4}, after 20 epochs {g:.4}");
    println!("files in {}", dir.display());
    Ok(())
}
