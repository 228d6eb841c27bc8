//! Depolarising a random two-qubit state under the cosine schedule.
//!
//! `cargo run --release --example forward_diffusion`

use qgdm::circuits::{random_pure_state, DEFAULT_PREP_LAYERS};
use qgdm::diffusion::{cosine_schedule, forward_step, forward_to};
use qgdm::qstate::{completely_mixed, fidelity, from_pure, hs_distance};
use qgdm::train::{seeded_rng, RngStream};

fn main() -> qgdm::Result<()> {
    let sched = cosine_schedule(30, 0.008)?;
    let mut rng = seeded_rng(0, RngStream::Target);
    let rho0 = from_pure(&random_pure_state(2, DEFAULT_PREP_LAYERS, &mut rng)?);
    let noise = completely_mixed(2);

    println!("{:>3} {:>10} {:>10} {:>10} {:>10}", "t", "alpha_bar", "F(rho0)", "purity", "HS(I/d)");
    let mut stepped = rho0.clone();
    for t in 0..=sched.steps() {
        if t > 0 {
            stepped = forward_step(&stepped, t, &sched)?;
        }
        let closed = forward_to(&rho0, t, &sched)?;
        // One-step composition and the closed form agree.
        assert!(hs_distance(&stepped, &closed)? < 1e-12);
        if t % 5 == 0 || t == 1 {
            let ab = if t == 0 { 1.0 } else { sched.alpha_bar(t)? };
            println!(
                "{t:>3} {ab:>10.6} {:>10.6} {:>10.6} {:>10.2e}",
                fidelity(&closed, &rho0)?,
                closed.purity(),
                hs_distance(&closed, &noise)?
            );
        }
    }
    Ok(())
}
