//! Coherent Rabi drive of the m_s 0 → −1 line compared with the two-level
//! formula.

use nvsim::dynamics::{rabi_population, DensityMatrix, DriveMode, DrivePulse, SpinEvolver};
use nvsim::hamiltonian::{transitions_for, NVParameters};

fn main() -> nvsim::Result<()> {
    let nv = NVParameters::default().with_field([0.0, 0.0, 0.03]).without_hyperfine();
    let line = transitions_for(&nv)?
        .lines
        .iter()
        .find(|t| t.lower.ms == 0 && t.upper.ms == -1)
        .map(|t| t.frequency)
        .expect("0 -> -1 line");
    let rabi = 5e6;
    let evolver = SpinEvolver::new(&nv)?;
    let rho0 = DensityMatrix::electron_state(0);
    let mut worst = 0.0f64;
    println!("   t (ns)   simulated   analytic");
    for k in 0..=80 {
        let t = k as f64 * 25e-9;
        let rho = evolver.drive(&rho0, &DrivePulse::new(line, rabi, t), DriveMode::Rwa, 0.0)?;
        let p = rho.electron_populations()[2];
        let exact = rabi_population(rabi, 0.0, t);
        worst = worst.max((p - exact).abs());
        if k % 7 == 0 {
            println!("{:>9.0}   {p:>9.6}   {exact:>8.6}", t * 1e9);
        }
    }
    println!("max |error| = {worst:.2e}");
    Ok(())
}
