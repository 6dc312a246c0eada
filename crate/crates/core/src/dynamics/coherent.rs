//! Coherent spin evolution: free precession and microwave driving.

use std::f64::consts::{PI, SQRT_2, TAU};

use serde::{Deserialize, Serialize};

use crate::hamiltonian::{build_hamiltonian, eigensolve, EnergyLevels, NVParameters, SpinOperator, SpinOps};
use crate::linalg::{jacobi_eigh, spectral_apply, Mat9, C64};

use super::{DensityMatrix, DynamicsError};

/// Default cost guard for lab-frame integration, in carrier cycles.
pub const DEFAULT_MAX_FULL_CYCLES: f64 = 1e7;

/// Microwave pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivePulse {
    /// Carrier frequency, Hz.
    pub carrier: f64,
    /// Rabi frequency Ω/2π on a pure `|0⟩ ↔ |±1⟩` transition, Hz.
    pub rabi: f64,
    /// Drive phase, rad.
    pub phase: f64,
    /// s
    pub duration: f64,
    /// MW magnetic-field direction in the NV body frame.
    pub drive_axis: [f64; 3],
}

impl DrivePulse {
    pub fn new(carrier: f64, rabi: f64, duration: f64) -> Self {
        Self { carrier, rabi, phase: 0.0, duration, drive_axis: [1.0, 0.0, 0.0] }
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let finite = [self.carrier, self.rabi, self.phase, self.duration]
            .iter()
            .chain(self.drive_axis.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(DynamicsError::InvalidPulse("non-finite pulse parameter".into()));
        }
        if self.duration < 0.0 {
            return Err(DynamicsError::InvalidPulse("negative duration".into()));
        }
        if self.rabi < 0.0 {
            return Err(DynamicsError::InvalidPulse("negative Rabi frequency".into()));
        }
        let n = crate::hamiltonian::norm3(&self.drive_axis);
        if (n - 1.0).abs() > 1e-9 {
            return Err(DynamicsError::InvalidPulse("drive_axis must be a unit vector".into()));
        }
        Ok(())
    }
}

/// How the drive is propagated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveMode {
    /// Multi-level rotating-wave approximation, exact matrix exponential.
    Rwa,
    /// Lab-frame cosine drive integrated with fixed RK4 steps of at most
    /// 1/(50·carrier); refuses pulses longer than `max_cycles` carrier cycles.
    Full { max_cycles: f64 },
}

impl DriveMode {
    pub fn full() -> Self {
        DriveMode::Full { max_cycles: DEFAULT_MAX_FULL_CYCLES }
    }
}

/// `exp(−i 2π x)` with the argument reduced to one cycle first.
fn cis_cycles(x: f64) -> C64 {
    let r = x - x.round();
    C64::from_polar(1.0, -TAU * r)
}

/// Cached eigenbasis of the static Hamiltonian together with the spin
/// operators, reused across the events of a sequence.
#[derive(Debug, Clone)]
pub struct SpinEvolver {
    levels: EnergyLevels,
    ops: SpinOps,
    /// Frame index per eigenstate: 0 for m_s = 0 levels, ±1 for levels above
    /// or below the m_s = 0 manifold.
    frame: [i32; 9],
}

impl SpinEvolver {
    pub fn new(params: &NVParameters) -> Result<Self, DynamicsError> {
        let h = build_hamiltonian(params)?;
        Self::from_hamiltonian(&h)
    }

    pub fn from_hamiltonian(h: &SpinOperator) -> Result<Self, DynamicsError> {
        let levels = eigensolve(h)?;
        let zero: Vec<f64> = (0..9).filter(|&k| levels.labels[k].ms == 0).map(|k| levels.energies[k]).collect();
        let zero_mean = if zero.is_empty() { 0.0 } else { zero.iter().sum::<f64>() / zero.len() as f64 };
        let mut frame = [0i32; 9];
        for k in 0..9 {
            if levels.labels[k].ms != 0 {
                frame[k] = if levels.energies[k] >= zero_mean { 1 } else { -1 };
            }
        }
        Ok(Self { levels, ops: SpinOps::new(), frame })
    }

    pub fn levels(&self) -> &EnergyLevels {
        &self.levels
    }

    fn to_eigen(&self, rho: &Mat9) -> Mat9 {
        self.levels.vectors.adjoint() * rho * self.levels.vectors
    }

    fn from_eigen(&self, rho: &Mat9) -> Mat9 {
        self.levels.vectors * rho * self.levels.vectors.adjoint()
    }

    /// Free evolution under the static Hamiltonian.
    pub fn free(&self, rho: &DensityMatrix, dt: f64) -> DensityMatrix {
        if dt == 0.0 {
            return rho.clone();
        }
        let mut r = self.to_eigen(rho.matrix());
        for k in 0..9 {
            for l in 0..9 {
                r[(k, l)] *= cis_cycles((self.levels.energies[k] - self.levels.energies[l]) * dt);
            }
        }
        DensityMatrix::from_raw(self.from_eigen(&r)).tidy()
    }

    /// Drive operator `n̂·S` expressed in the eigenbasis.
    fn drive_operator(&self, axis: &[f64; 3]) -> Mat9 {
        let re = |x: f64| C64::new(x, 0.0);
        let x = self.ops.sx * re(axis[0]) + self.ops.sy * re(axis[1]) + self.ops.sz * re(axis[2]);
        self.levels.vectors.adjoint() * x * self.levels.vectors
    }

    /// Rotating-frame Hamiltonian (eigenbasis, Hz).
    fn rotating_hamiltonian(&self, pulse: &DrivePulse) -> Mat9 {
        let x = self.drive_operator(&pulse.drive_axis);
        let coupling = C64::from_polar(pulse.rabi / SQRT_2, -pulse.phase);
        let mut h = Mat9::zeros();
        for k in 0..9 {
            h[(k, k)] = C64::new(self.levels.energies[k] - self.frame[k] as f64 * pulse.carrier, 0.0);
        }
        for k in 0..9 {
            for l in 0..9 {
                if self.frame[k] - self.frame[l] == 1 {
                    let v = coupling * x[(k, l)];
                    h[(k, l)] += v;
                    h[(l, k)] += v.conj();
                }
            }
        }
        h
    }

    /// Apply a drive pulse starting at absolute time `t_start`. The waveform
    /// is `cos(2π f t + φ)` with `t` on the global clock, so successive pulses
    /// stay phase coherent.
    pub fn drive(
        &self,
        rho: &DensityMatrix,
        pulse: &DrivePulse,
        mode: DriveMode,
        t_start: f64,
    ) -> Result<DensityMatrix, DynamicsError> {
        pulse.validate()?;
        if pulse.duration == 0.0 {
            return Ok(rho.clone());
        }
        if pulse.rabi == 0.0 {
            return Ok(self.free(rho, pulse.duration));
        }
        match mode {
            DriveMode::Rwa => Ok(self.drive_rwa(rho, pulse, t_start)),
            DriveMode::Full { max_cycles } => {
                let cycles = pulse.duration * pulse.carrier.abs();
                if cycles > max_cycles {
                    return Err(DynamicsError::CostGuard { cycles, limit: max_cycles });
                }
                Ok(self.drive_full(rho, pulse, t_start))
            }
        }
    }

    /// Drive in `slices` equal pieces, calling `between` on the lab-frame
    /// state after each piece with the piece duration. Used to interleave
    /// relaxation with the coherent drive.
    pub fn drive_sliced(
        &self,
        rho: &DensityMatrix,
        pulse: &DrivePulse,
        mode: DriveMode,
        t_start: f64,
        slices: usize,
        mut between: impl FnMut(DensityMatrix, f64) -> DensityMatrix,
    ) -> Result<DensityMatrix, DynamicsError> {
        pulse.validate()?;
        let slices = slices.max(1);
        let dt = pulse.duration / slices as f64;
        let piece = DrivePulse { duration: dt, ..*pulse };
        let rwa_u = match mode {
            DriveMode::Rwa if pulse.rabi > 0.0 && dt > 0.0 => Some(self.rwa_propagator(&piece)),
            _ => None,
        };
        let mut state = rho.clone();
        for k in 0..slices {
            let t0 = t_start + k as f64 * dt;
            state = match &rwa_u {
                Some(u) => self.apply_rwa(&state, u, pulse.carrier, t0, t0 + dt),
                None => self.drive(&state, &piece, mode, t0)?,
            };
            state = between(state, dt);
        }
        Ok(state)
    }

    fn rwa_propagator(&self, pulse: &DrivePulse) -> Mat9 {
        let h = self.rotating_hamiltonian(pulse);
        let (vals, vecs) = jacobi_eigh(&h);
        spectral_apply(&vals, &vecs, |e| cis_cycles(e * pulse.duration))
    }

    fn drive_rwa(&self, rho: &DensityMatrix, pulse: &DrivePulse, t0: f64) -> DensityMatrix {
        let u = self.rwa_propagator(pulse);
        self.apply_rwa(rho, &u, pulse.carrier, t0, t0 + pulse.duration)
    }

    fn apply_rwa(&self, rho: &DensityMatrix, u: &Mat9, carrier: f64, t0: f64, t1: f64) -> DensityMatrix {
        let mut r = self.to_eigen(rho.matrix());
        for k in 0..9 {
            for l in 0..9 {
                let dn = (self.frame[k] - self.frame[l]) as f64;
                if dn != 0.0 {
                    r[(k, l)] *= cis_cycles(-dn * carrier * t0);
                }
            }
        }
        let mut r = u * r * u.adjoint();
        for k in 0..9 {
            for l in 0..9 {
                let dn = (self.frame[k] - self.frame[l]) as f64;
                if dn != 0.0 {
                    r[(k, l)] *= cis_cycles(dn * carrier * t1);
                }
            }
        }
        DensityMatrix::from_raw(self.from_eigen(&r)).tidy()
    }

    /// Interaction picture with respect to the static Hamiltonian; the full
    /// cosine drive, counter-rotating part included, is integrated by RK4.
    fn drive_full(&self, rho: &DensityMatrix, pulse: &DrivePulse, t0: f64) -> DensityMatrix {
        let x = self.drive_operator(&pulse.drive_axis);
        let e = &self.levels.energies;
        let pairs: Vec<(usize, usize, C64, f64)> = (0..9)
            .flat_map(|k| (0..9).map(move |l| (k, l)))
            .filter(|&(k, l)| x[(k, l)].norm() > 1e-14)
            .map(|(k, l)| (k, l, x[(k, l)], e[k] - e[l]))
            .collect();
        let amp = SQRT_2 * pulse.rabi;
        let carrier = pulse.carrier;
        let phase0 = pulse.phase + TAU * ((carrier * t0) - (carrier * t0).round());
        let h_at = |s: f64| -> Mat9 {
            let drive = amp * (TAU * carrier * s + phase0).cos();
            let mut h = Mat9::zeros();
            for &(k, l, xkl, w) in &pairs {
                h[(k, l)] = xkl * C64::from_polar(drive, TAU * w * s);
            }
            h
        };
        // dρ/ds = −i 2π [H, ρ]
        let deriv = |h: &Mat9, r: &Mat9| -> Mat9 { (h * r - r * h) * C64::new(0.0, -TAU) };

        let n_steps = (pulse.duration * carrier.abs() * 50.0).ceil().max(1.0) as usize;
        let dt = pulse.duration / n_steps as f64;
        let mut r = self.to_eigen(rho.matrix());
        for step in 0..n_steps {
            let s = step as f64 * dt;
            let h0 = h_at(s);
            let hm = h_at(s + 0.5 * dt);
            let h1 = h_at(s + dt);
            let k1 = deriv(&h0, &r);
            let k2 = deriv(&hm, &(r + k1 * C64::new(0.5 * dt, 0.0)));
            let k3 = deriv(&hm, &(r + k2 * C64::new(0.5 * dt, 0.0)));
            let k4 = deriv(&h1, &(r + k3 * C64::new(dt, 0.0)));
            r += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0);
        }
        let t = pulse.duration;
        for k in 0..9 {
            for l in 0..9 {
                r[(k, l)] *= cis_cycles((e[k] - e[l]) * t);
            }
        }
        DensityMatrix::from_raw(self.from_eigen(&r)).tidy()
    }
}

/// Free evolution `ρ → U ρ U†`, `U = exp(−i 2π H dt)` with `H` in Hz.
pub fn evolve_unitary(rho: &DensityMatrix, h: &SpinOperator, dt: f64) -> Result<DensityMatrix, DynamicsError> {
    if !(dt >= 0.0) {
        return Err(DynamicsError::InvalidTime(dt));
    }
    rho.validate()?;
    Ok(SpinEvolver::from_hamiltonian(h)?.free(rho, dt))
}

/// Apply a microwave pulse with its phase referenced to the pulse start.
pub fn apply_mw_pulse(
    rho: &DensityMatrix,
    pulse: &DrivePulse,
    params: &NVParameters,
    mode: DriveMode,
) -> Result<DensityMatrix, DynamicsError> {
    rho.validate()?;
    SpinEvolver::new(params)?.drive(rho, pulse, mode, 0.0)
}

/// Two-level Rabi formula: population transferred after `t` for Rabi
/// frequency `rabi` and detuning `detuning` (both Hz).
pub fn rabi_population(rabi: f64, detuning: f64, t: f64) -> f64 {
    let eff = (rabi * rabi + detuning * detuning).sqrt();
    if eff == 0.0 {
        return 0.0;
    }
    (rabi / eff).powi(2) * (PI * eff * t).sin().powi(2)
}
