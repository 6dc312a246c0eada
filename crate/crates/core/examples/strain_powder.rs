//! Zero-field strain doublet for an aligned NV and for a nanodiamond powder.

use nvsim::hamiltonian::{find_dips, odmr_spectrum, powder_spectrum, NVParameters};
use nvsim::resonator::Grid;

fn main() -> nvsim::Result<()> {
    let nv = NVParameters::default().without_hyperfine().with_strain(5e6);
    let freqs = Grid::linspace(2.855e9, 2.885e9, 3001);
    let aligned = odmr_spectrum(&[nv], &freqs, 1e6, 0.1)?;
    let powder = powder_spectrum(&nv, &freqs, 1e6, 0.1, 10_000, 7)?;
    for (name, s) in [("aligned", &aligned), ("powder", &powder)] {
        let dips: Vec<String> = find_dips(s, 1e-3).iter().map(|d| format!("{:.4} MHz", d.frequency / 1e6)).collect();
        println!("{name:>8}: {}", dips.join(", "));
    }
    Ok(())
}
