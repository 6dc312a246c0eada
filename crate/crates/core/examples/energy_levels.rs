//! Eigenlevels and allowed ESR lines of an NV with its ¹⁴N nucleus in a small
//! axial field.

use nvsim::hamiltonian::{build_hamiltonian, eigensolve, transitions_for, NVParameters};

fn main() -> nvsim::Result<()> {
    let nv = NVParameters::default().with_field([0.0, 0.0, 1e-3]);
    let levels = eigensolve(&build_hamiltonian(&nv)?)?;
    println!("level  m_s  m_I  energy (MHz)");
    for (k, (e, l)) in levels.energies.iter().zip(&levels.labels).enumerate() {
        println!("{k:>5}  {:>3}  {:>3}  {:>12.4}", l.ms, l.mi, e / 1e6);
    }

    let table = transitions_for(&nv)?;
    println!("\nline (MHz)   m_s  m_I -> m_s  m_I   amplitude");
    for t in table.lines.iter().filter(|t| t.amplitude > 1e-3) {
        println!(
            "{:>10.4}   {:>3}  {:>3}    {:>3}  {:>3}   {:.3}",
            t.frequency / 1e6,
            t.lower.ms,
            t.lower.mi,
            t.upper.ms,
            t.upper.mi,
            t.amplitude
        );
    }
    Ok(())
}
