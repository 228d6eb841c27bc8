//! Keeping the wrong register: the naive variant learns the identity on the
//! timestep register, and generation never leaves the maximally mixed state.
//!
//! `cargo run --release --example failure_study`

use qgdm::denoise::Variant;
use qgdm::experiment::{circuit_distance, ExperimentConfig};
use qgdm::generate::generate;
use qgdm::qstate::{completely_mixed, fidelity};
use qgdm::train::train_with;

fn main() -> qgdm::Result<()> {
    let cfg = ExperimentConfig { variant: Variant::Naive, seeds: vec![0], ..Default::default() };
    let tc = cfg.train_config(0);
    let target = cfg.target_state(0)?;
    let sched = tc.schedule()?;

    let outcome = train_with(&tc, Variant::Naive, &target, |epoch, model| {
        if epoch % 40 == 0 {
            let d = circuit_distance(model, &target, &sched, epoch)?;
            println!("epoch {epoch:>3}  HS joint {:.4}  HS kept {:.2e}", d.joint, d.output);
        }
        Ok(())
    })?;
    let (first, last) = (&outcome.records[0], outcome.records.last().expect("trained"));
    println!("loss {:.4} -> {:.2e}", first.loss, last.loss);

    let baseline = fidelity(&completely_mixed(1), &target)?;
    let trace = generate(&outcome.model, Some(&target))?;
    let worst = trace
        .fidelities()
        .iter()
        .map(|f| (f - baseline).abs())
        .fold(0.0, f64::max);
    println!("F(I/2, target) = {baseline:.6}; largest deviation while sampling {worst:.2e}");
    Ok(())
}
