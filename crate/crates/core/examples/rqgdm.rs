//! Resource-efficient variant: the noisy state is compressed to one qubit
//! before meeting the timestep register, so the circuit width is `n + 1`.
//!
//! `cargo run --release --example rqgdm -- [n] [pure|mixed]`

use qgdm::denoise::Variant;
use qgdm::experiment::{ExperimentConfig, TargetKind};
use qgdm::generate::generate;
use qgdm::train::train;

fn main() -> qgdm::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(3, |s| s.parse().expect("n is an integer"));
    let target: TargetKind = args.next().map_or(Ok(TargetKind::Mixed), |s| s.parse())?;

    let cfg = ExperimentConfig { variant: Variant::Rqgdm, n, target, seeds: vec![0], ..Default::default() };
    cfg.validate()?;
    let tc = cfg.train_config(0);
    let rho0 = cfg.target_state(0)?;
    let arch = tc.architecture(Variant::Rqgdm, n);
    println!(
        "n={n} widths: compression {}, denoiser {}; {} denoising layer(s), T={}",
        n,
        n + 1,
        tc.denoise_layers,
        tc.steps
    );
    arch.validate()?;

    let outcome = train(&tc, Variant::Rqgdm, &rho0)?;
    println!("{} parameters", outcome.model.n_params());
    let trace = generate(&outcome.model, Some(&rho0))?;
    println!("final fidelity {:.6}", trace.final_fidelity().expect("reference given"));
    Ok(())
}
