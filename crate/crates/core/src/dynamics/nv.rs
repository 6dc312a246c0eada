//! Combined spin and optical state used by the sequence executor.

use crate::linalg::{Mat3, Mat9, C64};

use super::{integrate_rates, DensityMatrix, DynamicsError, OpticalPopulations, OpticalRates, SignalTrace};

/// Spin density matrix conditioned on the NV being in its ground triplet,
/// together with the seven-level optical occupations.
///
/// The ground-state entries of `optical` always equal the ground fraction
/// times the electron populations of `spin`.
#[derive(Debug, Clone, PartialEq)]
pub struct NvState {
    spin: DensityMatrix,
    optical: OpticalPopulations,
}

/// `(1 − e^{−k t}) / k`, continuous at `k = 0`.
fn grow(k: f64, t: f64) -> f64 {
    if k == 0.0 {
        t
    } else {
        -(-k * t).exp_m1() / k
    }
}

/// `(e^{−a t} − e^{−b t}) / (b − a)`, continuous at `a = b`.
fn cascade(a: f64, b: f64, t: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if lo == hi {
        t * (-lo * t).exp()
    } else {
        (-lo * t).exp() * -(-(hi - lo) * t).exp_m1() / (hi - lo)
    }
}

impl NvState {
    /// Combine a conditional spin state with optical occupations. Only the
    /// ground total of `optical` is used for the ground triplet; its split
    /// over m_s is taken from `spin`.
    pub fn new(spin: DensityMatrix, optical: OpticalPopulations) -> Result<Self, DynamicsError> {
        spin.validate()?;
        optical.validate()?;
        let mut s = Self { spin, optical };
        s.sync();
        Ok(s)
    }

    /// Ground state, electron in `m_s = 0`, nucleus mixed.
    pub fn polarized() -> Self {
        Self { spin: DensityMatrix::electron_state(0), optical: OpticalPopulations::ground_ms(0) }
    }

    /// Ground state, electron in `ms`, nucleus mixed.
    pub fn electron(ms: i8) -> Self {
        Self { spin: DensityMatrix::electron_state(ms), optical: OpticalPopulations::ground_ms(ms) }
    }

    /// Fully mixed ground state.
    pub fn thermal() -> Self {
        Self { spin: DensityMatrix::mixed(), optical: OpticalPopulations::ground([1.0 / 3.0; 3]) }
    }

    pub fn spin(&self) -> &DensityMatrix {
        &self.spin
    }

    pub fn optical(&self) -> &OpticalPopulations {
        &self.optical
    }

    pub fn ground_fraction(&self) -> f64 {
        self.optical.ground_total()
    }

    /// Replace the conditional spin state, keeping the ground fraction.
    pub fn with_spin(&self, spin: DensityMatrix) -> Self {
        let mut s = Self { spin, optical: self.optical };
        s.sync();
        s
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        self.spin.validate()?;
        self.optical.validate()
    }

    fn sync(&mut self) {
        let g = self.optical.ground_total();
        let p = self.spin.electron_populations();
        self.optical.0[OpticalPopulations::GP] = g * p[0];
        self.optical.0[OpticalPopulations::G0] = g * p[1];
        self.optical.0[OpticalPopulations::GM] = g * p[2];
    }

    fn nuclear(&self) -> Mat3 {
        self.spin.nuclear_reduced()
    }

    /// Laser window of `duration` with fixed step `dt`. With `ramp > 0` the
    /// pump rises and falls linearly over `ramp` seconds at the window edges.
    /// Electron coherences decay as `exp(−∫pump dt)`; nuclear conditional
    /// states are kept.
    pub fn laser(
        &self,
        rates: &OpticalRates,
        duration: f64,
        dt: f64,
        ramp: f64,
    ) -> Result<(Self, SignalTrace), DynamicsError> {
        let full = rates.pump_rate;
        let pump = |t: f64| -> f64 {
            if ramp > 0.0 {
                let edge = (t / ramp).min((duration - t) / ramp).clamp(0.0, 1.0);
                full * edge
            } else {
                full
            }
        };
        let (optical, trace) = integrate_rates(&self.optical, rates, duration, dt, pump)?;
        let dose = if ramp > 0.0 {
            let r = ramp.min(0.5 * duration);
            full * (duration - 2.0 * r) + full * r * r / ramp
        } else {
            full * duration
        };
        let g_new = optical.ground_total();
        let target = optical.ground_electron().map(|p| if g_new > 0.0 { p / g_new } else { 1.0 / 3.0 });
        let spin = reweight(&self.spin, &self.nuclear(), target, (-dose).exp());
        Ok((Self { spin, optical }, trace))
    }

    /// Dark interval of `duration`: excited and singlet occupations decay in
    /// closed form and the arrivals in each ground m_s join `spin`, the
    /// conditional state already evolved over the interval, without electron
    /// coherence.
    pub fn dark(&self, spin: DensityMatrix, rates: &OpticalRates, duration: f64) -> Result<Self, DynamicsError> {
        if !(duration >= 0.0) {
            return Err(DynamicsError::InvalidTime(duration));
        }
        rates.validate()?;
        let p = &self.optical.0;
        let away = p[3] + p[4] + p[5] + p[6];
        if away == 0.0 || duration == 0.0 {
            return Ok(self.with_spin(spin));
        }
        let t = duration;
        let kr = rates.radiative_rate;
        let ks = rates.singlet_rate;
        let ke = [kr + rates.isc_ms0, kr + rates.isc_ms1, kr + rates.isc_ms1];
        let isc = [rates.isc_ms0, rates.isc_ms1, rates.isc_ms1];
        let e0 = [p[3], p[4], p[5]];
        let e_t: Vec<f64> = (0..3).map(|j| e0[j] * (-ke[j] * t).exp()).collect();
        let mut s_t = p[6] * (-ks * t).exp();
        let mut into_singlet = p[6];
        for j in 0..3 {
            s_t += isc[j] * e0[j] * cascade(ke[j], ks, t);
            into_singlet += isc[j] * e0[j] * grow(ke[j], t);
        }
        let from_singlet = (into_singlet - s_t).max(0.0);
        let b = rates.singlet_branch_ms0;
        // arrivals ordered g0, g+, g−
        let arrivals = [
            kr * e0[0] * grow(ke[0], t) + b * from_singlet,
            kr * e0[1] * grow(ke[1], t) + 0.5 * (1.0 - b) * from_singlet,
            kr * e0[2] * grow(ke[2], t) + 0.5 * (1.0 - b) * from_singlet,
        ];
        let g_old = self.optical.ground_total();
        let g_new = g_old + arrivals.iter().sum::<f64>();
        let nuc = self.nuclear();
        let mut m = spin.matrix() * C64::new(g_old, 0.0);
        // arrivals as (+1, 0, −1) weights
        let add = [arrivals[1], arrivals[0], arrivals[2]];
        for (s, a) in add.iter().enumerate() {
            for i in 0..3 {
                for j in 0..3 {
                    m[(3 * s + i, 3 * s + j)] += nuc[(i, j)] * *a;
                }
            }
        }
        let m = m / C64::new(g_new, 0.0);
        let mut optical = self.optical;
        optical.0[3] = e_t[0];
        optical.0[4] = e_t[1];
        optical.0[5] = e_t[2];
        optical.0[6] = s_t;
        optical.0[0] = g_new;
        optical.0[1] = 0.0;
        optical.0[2] = 0.0;
        let drift = optical.sum() - 1.0;
        optical.0[0] -= drift;
        let mut out = Self { spin: DensityMatrix::from_raw(m).tidy(), optical };
        out.sync();
        Ok(out)
    }
}

/// Congruence `D ρ D` with `D = diag(√(target/current)) ⊗ 1`, then electron
/// coherences scaled by `quench`. Levels with no current weight are filled
/// with the nuclear marginal.
fn reweight(rho: &DensityMatrix, nuc: &Mat3, target: [f64; 3], quench: f64) -> DensityMatrix {
    let current = rho.electron_populations();
    let m = rho.matrix();
    let mut out = Mat9::zeros();
    let tiny = 1e-14;
    let scale: Vec<Option<f64>> =
        (0..3).map(|s| (current[s] > tiny).then(|| (target[s] / current[s]).sqrt())).collect();
    for s in 0..3 {
        for t in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let (r, c) = (3 * s + i, 3 * t + j);
                    out[(r, c)] = match (scale[s], scale[t]) {
                        (Some(a), Some(b)) => {
                            let q = if s == t { 1.0 } else { quench };
                            m[(r, c)] * (a * b * q)
                        }
                        _ if s == t => nuc[(i, j)] * target[s],
                        _ => C64::new(0.0, 0.0),
                    };
                }
            }
        }
    }
    let tr = out.trace().re;
    DensityMatrix::from_raw(out / C64::new(tr, 0.0)).tidy()
}
