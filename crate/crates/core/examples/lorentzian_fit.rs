//! Six-Lorentzian fit of a noisy spectrum in a 5 G axial field: the m_s = −1
//! and +1 lines each split into a hyperfine triplet.

use nvsim::analysis::{fit_auto, FitModel, FitOptions};
use nvsim::hamiltonian::{odmr_spectrum, NVParameters};
use nvsim::resonator::Grid;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

fn main() -> nvsim::Result<()> {
    let nv = NVParameters::default().with_field([0.0, 0.0, 5e-4]);
    let f = Grid::linspace(2.845e9, 2.895e9, 2001);
    let clean = odmr_spectrum(&[nv], &f, 0.5e6, 0.1)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 0.005 * 0.1).expect("valid sigma");
    let y: Vec<f64> = clean.values.iter().map(|v| v + noise.sample(&mut rng)).collect();

    let fit = fit_auto(FitModel::LorentzianMulti(6), &f, &y, &FitOptions::default())?;
    let mut centers: Vec<f64> = (1..=6).filter_map(|i| fit.param(&format!("center{i}"))).collect();
    centers.sort_by(f64::total_cmp);
    for c in &centers {
        println!("{:.4} MHz", c / 1e6);
    }
    println!("residual norm {:.3e}", fit.residual_norm);
    Ok(())
}
