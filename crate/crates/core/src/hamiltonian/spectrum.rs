//! ODMR spectrum synthesis and dip detection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{transitions_for, HamiltonianError, NVParameters, Transition};

/// Simulated ODMR record: normalized fluorescence on a frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub values: Vec<f64>,
    /// Lorentzian FWHM, Hz.
    pub linewidth: f64,
    /// Dip depth of a unit-amplitude transition.
    pub contrast: f64,
}

/// A local minimum of a spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dip {
    pub frequency: f64,
    /// Depth below the unit baseline.
    pub depth: f64,
}

/// The four ⟨111⟩ NV axes of a diamond lattice in the crystal frame.
pub fn bulk_orientations() -> [[f64; 3]; 4] {
    let s = 1.0 / 3f64.sqrt();
    [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]]
}

/// One parameter set per bulk orientation, sharing `base` constants and field.
pub fn bulk_parameters(base: &NVParameters) -> Vec<NVParameters> {
    bulk_orientations().iter().map(|axis| base.with_axis(*axis)).collect()
}

fn lorentzian(f: f64, center: f64, hwhm: f64) -> f64 {
    let d = f - center;
    hwhm * hwhm / (d * d + hwhm * hwhm)
}

fn check_settings(linewidth: f64, contrast: f64) -> Result<(), HamiltonianError> {
    if !(linewidth > 0.0 && linewidth.is_finite()) {
        return Err(HamiltonianError::InvalidSpectrum("linewidth must be positive".into()));
    }
    if !(contrast > 0.0 && contrast < 1.0) {
        return Err(HamiltonianError::InvalidSpectrum("contrast must lie in (0, 1)".into()));
    }
    Ok(())
}

fn synthesize(
    tables: &[Vec<Transition>],
    frequencies: &[f64],
    linewidth: f64,
    contrast: f64,
) -> Result<Spectrum, HamiltonianError> {
    let hwhm = 0.5 * linewidth;
    // Each line starts from one of three equally populated nuclear states.
    let weight = contrast / (3.0 * tables.len() as f64);
    let values: Vec<f64> = frequencies
        .par_iter()
        .map(|&f| {
            let mut dip = 0.0;
            for table in tables {
                for t in table {
                    dip += t.amplitude * lorentzian(f, t.frequency, hwhm);
                }
            }
            1.0 - weight * dip
        })
        .collect();
    if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
        return Err(HamiltonianError::InvalidSpectrum(format!(
            "overlapping dips drive the signal to {v}; reduce contrast"
        )));
    }
    Ok(Spectrum { frequencies: frequencies.to_vec(), values, linewidth, contrast })
}

/// Ensemble ODMR spectrum: unit baseline minus amplitude-weighted Lorentzian
/// dips, averaged over the given NV orientations. Every line carries the 1/3
/// population of its unpolarized nuclear state, so a fully allowed electron
/// transition summed over m_I has depth `contrast`.
pub fn odmr_spectrum(
    params_per_orientation: &[NVParameters],
    frequencies: &[f64],
    linewidth: f64,
    contrast: f64,
) -> Result<Spectrum, HamiltonianError> {
    if params_per_orientation.is_empty() {
        return Err(HamiltonianError::EmptyOrientations);
    }
    check_settings(linewidth, contrast)?;
    let tables =
        params_per_orientation.iter().map(|p| transitions_for(p).map(|t| t.lines)).collect::<Result<Vec<_>, _>>()?;
    synthesize(&tables, frequencies, linewidth, contrast)
}

/// `n` axes uniformly distributed on the unit sphere.
pub fn sample_orientations(n: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let z: f64 = rng.random_range(-1.0..=1.0);
            let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let r = (1.0 - z * z).max(0.0).sqrt();
            let v = [r * phi.cos(), r * phi.sin(), z];
            super::normalize3(&v)
        })
        .collect()
}

/// Orientation-averaged spectrum for a randomly oriented crystallite.
pub fn powder_spectrum(
    params: &NVParameters,
    frequencies: &[f64],
    linewidth: f64,
    contrast: f64,
    n_samples: usize,
    rng_seed: u64,
) -> Result<Spectrum, HamiltonianError> {
    if n_samples == 0 {
        return Err(HamiltonianError::InvalidSpectrum("n_samples must be at least 1".into()));
    }
    check_settings(linewidth, contrast)?;
    let axes = sample_orientations(n_samples, rng_seed);
    let tables = axes
        .par_iter()
        .map(|axis| transitions_for(&params.with_axis(*axis)).map(|t| t.lines))
        .collect::<Result<Vec<_>, _>>()?;
    synthesize(&tables, frequencies, linewidth, contrast)
}

/// Local minima deeper than `min_depth`, refined by a parabola through the
/// three surrounding samples.
pub fn find_dips(spectrum: &Spectrum, min_depth: f64) -> Vec<Dip> {
    let f = &spectrum.frequencies;
    let y = &spectrum.values;
    let mut dips = Vec::new();
    for i in 1..y.len().saturating_sub(1) {
        if !(y[i] < y[i - 1] && y[i] <= y[i + 1]) {
            continue;
        }
        let depth = 1.0 - y[i];
        if depth < min_depth {
            continue;
        }
        let denom = y[i - 1] - 2.0 * y[i] + y[i + 1];
        let mut center = f[i];
        if denom > 0.0 {
            let step = 0.5 * (f[i + 1] - f[i - 1]);
            let offset = 0.5 * (y[i - 1] - y[i + 1]) / denom;
            center = f[i] + offset.clamp(-1.0, 1.0) * step;
        }
        dips.push(Dip { frequency: center, depth });
    }
    dips
}

/// Group dips whose neighbors lie within `separation`.
pub fn cluster_dips(dips: &[Dip], separation: f64) -> Vec<Vec<Dip>> {
    let mut sorted = dips.to_vec();
    sorted.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
    let mut clusters: Vec<Vec<Dip>> = Vec::new();
    for d in sorted {
        match clusters.last_mut() {
            Some(c) if d.frequency - c.last().unwrap().frequency <= separation => c.push(d),
            _ => clusters.push(vec![d]),
        }
    }
    clusters
}

/// Number of dip clusters, treating minima closer than two linewidths as one.
/// Minima shallower than 1% of the deepest dip are ignored.
pub fn resolvable_dip_count(spectrum: &Spectrum) -> usize {
    let all = find_dips(spectrum, 0.0);
    let deepest = all.iter().map(|d| d.depth).fold(0.0, f64::max);
    let dips: Vec<Dip> = all.into_iter().filter(|d| d.depth >= 0.01 * deepest).collect();
    cluster_dips(&dips, 2.0 * spectrum.linewidth).len()
}
