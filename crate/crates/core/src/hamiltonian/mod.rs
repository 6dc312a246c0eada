//! NV ground-state spin Hamiltonian for an electron spin S=1 coupled to a
//! ¹⁴N nuclear spin I=1.
//!
//! All energies are stored as frequencies in Hz (energy divided by h). The
//! product basis is ordered `|m_s, m_I⟩` with both projections running
//! `+1, 0, −1`, so basis index `3·s + i` where `s, i ∈ {0, 1, 2}` map to
//! projections `+1, 0, −1`.

mod spectrum;

pub use spectrum::{
    bulk_orientations, bulk_parameters, cluster_dips, find_dips, odmr_spectrum, powder_spectrum, resolvable_dip_count,
    sample_orientations, Dip, Spectrum,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{BOHR_MAGNETON, N14_G_FACTOR, NUCLEAR_MAGNETON, NV_G_FACTOR, PLANCK};
use crate::linalg::{hermiticity_error, jacobi_eigh, kron3, Mat3, Mat9, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("empty orientation list")]
    EmptyOrientations,
    #[error("invalid spectrum settings: {0}")]
    InvalidSpectrum(String),
}

/// Hamiltonian constants, static field and NV axis.
///
/// `b_field` and `nv_axis` are expressed in the same lab (crystal) frame. The
/// Hamiltonian is assembled in the NV body frame whose z axis is `nv_axis`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NVParameters {
    /// Zero-field splitting D_gs, Hz.
    pub d_gs: f64,
    /// Transverse strain E, Hz.
    pub e_strain: f64,
    /// Nuclear quadrupole constant P, Hz.
    pub p_quad: f64,
    /// Axial hyperfine constant A∥, Hz.
    pub a_par: f64,
    /// Transverse hyperfine constant A⊥, Hz.
    pub a_perp: f64,
    pub g_s: f64,
    pub g_i: f64,
    /// Static field, tesla.
    pub b_field: [f64; 3],
    /// Unit vector along the NV symmetry axis.
    pub nv_axis: [f64; 3],
}

impl Default for NVParameters {
    fn default() -> Self {
        Self {
            d_gs: 2.870e9,
            e_strain: 0.0,
            p_quad: -4.95e6,
            a_par: 2.16e6,
            a_perp: -2.7e6,
            g_s: NV_G_FACTOR,
            g_i: N14_G_FACTOR,
            b_field: [0.0; 3],
            nv_axis: [0.0, 0.0, 1.0],
        }
    }
}

impl NVParameters {
    pub fn with_field(mut self, b: [f64; 3]) -> Self {
        self.b_field = b;
        self
    }

    pub fn with_axis(mut self, axis: [f64; 3]) -> Self {
        self.nv_axis = axis;
        self
    }

    pub fn with_strain(mut self, e: f64) -> Self {
        self.e_strain = e;
        self
    }

    /// Switch off hyperfine and quadrupole couplings.
    pub fn without_hyperfine(mut self) -> Self {
        self.a_par = 0.0;
        self.a_perp = 0.0;
        self.p_quad = 0.0;
        self
    }

    /// Electron gyromagnetic ratio g_s μ_B / h in Hz/T.
    pub fn electron_gamma(&self) -> f64 {
        self.g_s * BOHR_MAGNETON / PLANCK
    }

    /// Nuclear gyromagnetic ratio g_I μ_N / h in Hz/T.
    pub fn nuclear_gamma(&self) -> f64 {
        self.g_i * NUCLEAR_MAGNETON / PLANCK
    }

    pub fn validate(&self) -> Result<(), HamiltonianError> {
        let scalars = [
            ("d_gs", self.d_gs),
            ("e_strain", self.e_strain),
            ("p_quad", self.p_quad),
            ("a_par", self.a_par),
            ("a_perp", self.a_perp),
            ("g_s", self.g_s),
            ("g_i", self.g_i),
        ];
        for (name, v) in scalars {
            if !v.is_finite() {
                return Err(HamiltonianError::InvalidParameter(format!("{name} is not finite")));
            }
        }
        if self.d_gs <= 0.0 {
            return Err(HamiltonianError::InvalidParameter("d_gs must be positive".into()));
        }
        if self.b_field.iter().chain(self.nv_axis.iter()).any(|v| !v.is_finite()) {
            return Err(HamiltonianError::InvalidParameter("field or axis is not finite".into()));
        }
        let n = norm3(&self.nv_axis);
        if (n - 1.0).abs() > 1e-12 {
            return Err(HamiltonianError::InvalidParameter(format!("nv_axis must have unit norm, got {n}")));
        }
        Ok(())
    }

    /// Static field components in the NV body frame.
    pub fn body_field(&self) -> [f64; 3] {
        let [ex, ey, ez] = body_frame(&self.nv_axis);
        [dot3(&self.b_field, &ex), dot3(&self.b_field, &ey), dot3(&self.b_field, &ez)]
    }
}

pub(crate) fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub(crate) fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn normalize3(v: &[f64; 3]) -> [f64; 3] {
    let n = norm3(v);
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Orthonormal body frame `(x, y, z)` with `z = axis`. The body x axis is the
/// lab z axis projected onto the transverse plane, or the lab x axis when the
/// NV axis is close to lab z.
pub fn body_frame(axis: &[f64; 3]) -> [[f64; 3]; 3] {
    let z = normalize3(axis);
    let reference = if z[2].abs() < 0.9 { [0.0, 0.0, 1.0] } else { [1.0, 0.0, 0.0] };
    let proj = dot3(&reference, &z);
    let x = normalize3(&[reference[0] - proj * z[0], reference[1] - proj * z[1], reference[2] - proj * z[2]]);
    let y = cross3(&z, &x);
    [x, y, z]
}

/// Spin-1 matrices `(S_x, S_y, S_z)` in the `+1, 0, −1` basis.
pub fn spin1_matrices() -> (Mat3, Mat3, Mat3) {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    let re = |x: f64| C64::new(x, 0.0);
    let im = |x: f64| C64::new(0.0, x);
    let sx = Mat3::new(z, re(r), z, re(r), z, re(r), z, re(r), z);
    let sy = Mat3::new(z, im(-r), z, im(r), z, im(-r), z, im(r), z);
    let sz = Mat3::new(re(1.0), z, z, z, z, z, z, z, re(-1.0));
    (sx, sy, sz)
}

/// Electron and nuclear spin operators embedded in the 9-dimensional space.
#[derive(Debug, Clone)]
pub struct SpinOps {
    pub sx: Mat9,
    pub sy: Mat9,
    pub sz: Mat9,
    pub ix: Mat9,
    pub iy: Mat9,
    pub iz: Mat9,
}

impl SpinOps {
    pub fn new() -> Self {
        let (sx, sy, sz) = spin1_matrices();
        let id = Mat3::identity();
        Self {
            sx: kron3(&sx, &id),
            sy: kron3(&sy, &id),
            sz: kron3(&sz, &id),
            ix: kron3(&id, &sx),
            iy: kron3(&id, &sy),
            iz: kron3(&id, &sz),
        }
    }
}

impl Default for SpinOps {
    fn default() -> Self {
        Self::new()
    }
}

/// Hermitian operator on the 9-level space, entries in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinOperator {
    matrix: Mat9,
}

impl SpinOperator {
    pub fn from_matrix(matrix: Mat9) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &Mat9 {
        &self.matrix
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.matrix)
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }
}

/// `(m_s, m_I)` projection pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinLabel {
    pub ms: i8,
    pub mi: i8,
}

impl SpinLabel {
    pub fn from_index(index: usize) -> Self {
        Self { ms: 1 - (index / 3) as i8, mi: 1 - (index % 3) as i8 }
    }

    pub fn index(&self) -> usize {
        (3 * (1 - self.ms) + (1 - self.mi)) as usize
    }
}

impl std::fmt::Display for SpinLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "|{:+},{:+}>", self.ms, self.mi)
    }
}

/// Sorted eigenvalues (Hz), eigenvectors (columns) and dominant labels.
#[derive(Debug, Clone)]
pub struct EnergyLevels {
    pub energies: [f64; 9],
    pub vectors: Mat9,
    pub labels: [SpinLabel; 9],
}

impl EnergyLevels {
    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> Mat9 {
        let vals = nalgebra::SVector::<f64, 9>::from_row_slice(&self.energies);
        crate::linalg::spectral_apply(&vals, &self.vectors, |x| C64::new(x, 0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    /// Hz
    pub frequency: f64,
    pub lower: SpinLabel,
    pub upper: SpinLabel,
    pub amplitude: f64,
    #[serde(skip)]
    pub lower_index: usize,
    #[serde(skip)]
    pub upper_index: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TransitionTable {
    pub lines: Vec<Transition>,
}

impl TransitionTable {
    pub fn frequencies(&self) -> Vec<f64> {
        self.lines.iter().map(|t| t.frequency).collect()
    }
}

/// Assemble `H_S + H_I + H_SI` in Hz for the given parameters.
pub fn build_hamiltonian(params: &NVParameters) -> Result<SpinOperator, HamiltonianError> {
    params.validate()?;
    let ops = SpinOps::new();
    let [bx, by, bz] = params.body_field();
    let ge = params.electron_gamma();
    let gn = params.nuclear_gamma();
    let re = |x: f64| C64::new(x, 0.0);

    let h_s = ops.sz * ops.sz * re(params.d_gs)
        + (ops.sx * re(bx) + ops.sy * re(by) + ops.sz * re(bz)) * re(ge)
        + (ops.sy * ops.sy - ops.sx * ops.sx) * re(params.e_strain);
    let h_i = ops.iz * ops.iz * re(params.p_quad) - (ops.ix * re(bx) + ops.iy * re(by) + ops.iz * re(bz)) * re(gn);
    let h_si = ops.sz * ops.iz * re(params.a_par) + (ops.sx * ops.ix + ops.sy * ops.iy) * re(params.a_perp);

    let h = h_s + h_i + h_si;
    // Exact Hermitian symmetrization.
    let h = (h + h.adjoint()) * re(0.5);
    Ok(SpinOperator { matrix: h })
}

/// Diagonalize a Hermitian spin operator and label every level by its
/// dominant product-basis component.
pub fn eigensolve(h: &SpinOperator) -> Result<EnergyLevels, HamiltonianError> {
    let scale = h.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let herm = h.hermiticity_error();
    if !(herm <= 1e-12 * scale) {
        return Err(HamiltonianError::NotHermitian(herm));
    }
    let (vals, vecs) = jacobi_eigh(&h.matrix);
    let mut energies = [0.0; 9];
    let mut labels = [SpinLabel { ms: 0, mi: 0 }; 9];
    for k in 0..9 {
        energies[k] = vals[k];
        let col = vecs.column(k);
        let mut best = 0;
        let mut best_w = -1.0;
        for (i, z) in col.iter().enumerate() {
            let w = z.norm_sqr();
            // Lowest index wins ties.
            if w > best_w + 1e-9 {
                best = i;
                best_w = w;
            }
        }
        labels[k] = SpinLabel::from_index(best);
    }
    Ok(EnergyLevels { energies, vectors: vecs, labels })
}

/// Allowed electron-spin transitions (Δm_s = ±1, Δm_I = 0 by dominant label).
///
/// The relative amplitude is the transverse-drive strength
/// `|⟨u|S_x|l⟩|² + |⟨u|S_y|l⟩|²`, which equals 1 for a pure
/// `|0⟩ → |±1⟩` transition.
pub fn transition_frequencies(levels: &EnergyLevels) -> TransitionTable {
    let ops = SpinOps::new();
    let mut lines = Vec::new();
    for l in 0..9 {
        for u in (l + 1)..9 {
            let (ll, lu) = (levels.labels[l], levels.labels[u]);
            if (ll.ms - lu.ms).abs() != 1 || ll.mi != lu.mi {
                continue;
            }
            let vl = levels.vectors.column(l);
            let vu = levels.vectors.column(u);
            let mx = (vu.adjoint() * ops.sx * vl)[(0, 0)].norm_sqr();
            let my = (vu.adjoint() * ops.sy * vl)[(0, 0)].norm_sqr();
            lines.push(Transition {
                frequency: levels.energies[u] - levels.energies[l],
                lower: ll,
                upper: lu,
                amplitude: (mx + my).clamp(0.0, 1.0),
                lower_index: l,
                upper_index: u,
            });
        }
    }
    lines.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
    TransitionTable { lines }
}

/// Convenience: build, diagonalize and list transitions.
pub fn transitions_for(params: &NVParameters) -> Result<TransitionTable, HamiltonianError> {
    let h = build_hamiltonian(params)?;
    Ok(transition_frequencies(&eigensolve(&h)?))
}
