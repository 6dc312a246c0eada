//! Bulk ODMR: the four NV orientations of diamond under a 10 G field, once
//! along [100] (all projections equal) and once along a generic direction.

use nvsim::hamiltonian::{bulk_parameters, odmr_spectrum, resolvable_dip_count, NVParameters};
use nvsim::resonator::Grid;

fn main() -> nvsim::Result<()> {
    let freqs = Grid::linspace(2.80e9, 2.94e9, 2801);
    let b = 1e-3;
    let generic = [1.0, 2.0, 4.0].map(|c: f64| c / 21f64.sqrt() * b);
    for (name, field) in [("[100]", [b, 0.0, 0.0]), ("generic", generic)] {
        let base = NVParameters::default().without_hyperfine().with_field(field);
        let spectrum = odmr_spectrum(&bulk_parameters(&base), &freqs, 1e6, 0.1)?;
        let lo = spectrum.values.iter().copied().fold(1.0, f64::min);
        println!("{name:>8}: {} resolvable dips, deepest point {lo:.4}", resolvable_dip_count(&spectrum));
    }
    Ok(())
}
