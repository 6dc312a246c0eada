//! Seven-level rate-equation model of optical pumping and readout.
//!
//! Levels: ground `m_s = 0, +1, −1`, excited `m_s = 0, +1, −1` and the
//! metastable singlet. Pumping and radiative decay conserve spin; the excited
//! states also cross into the singlet with a spin-dependent rate, and the
//! singlet returns to the ground triplet with a preference for `m_s = 0`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::DynamicsError;

/// Largest allowed `dt · max_rate` for the fixed-step integrator.
pub const STABILITY_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OpticalRates {
    /// Ground → excited under the laser, 1/s.
    pub pump_rate: f64,
    /// Excited → ground, 1/s.
    pub radiative_rate: f64,
    /// Excited m_s = ±1 → singlet, 1/s.
    pub isc_ms1: f64,
    /// Excited m_s = 0 → singlet, 1/s.
    pub isc_ms0: f64,
    /// Singlet → ground, 1/s.
    pub singlet_rate: f64,
    /// Fraction of singlet decays landing in m_s = 0.
    pub singlet_branch_ms0: f64,
    /// Detected fraction of emitted photons.
    pub collection_efficiency: f64,
}

impl Default for OpticalRates {
    fn default() -> Self {
        Self {
            pump_rate: 6e7,
            radiative_rate: 1.0 / 12e-9,
            isc_ms1: 5e7,
            isc_ms0: 5e6,
            singlet_rate: 1.0 / 300e-9,
            singlet_branch_ms0: 0.5,
            collection_efficiency: 0.01,
        }
    }
}

impl OpticalRates {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let rates = [
            self.pump_rate,
            self.radiative_rate,
            self.isc_ms1,
            self.isc_ms0,
            self.singlet_rate,
            self.collection_efficiency,
        ];
        if rates.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(DynamicsError::InvalidRates("rates must be finite and non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.singlet_branch_ms0) {
            return Err(DynamicsError::InvalidRates("singlet_branch_ms0 must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Largest total outflow rate of any level.
    pub fn max_rate(&self, pump: f64) -> f64 {
        [pump, self.radiative_rate + self.isc_ms0, self.radiative_rate + self.isc_ms1, self.singlet_rate]
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// Largest step satisfying the stability guard.
    pub fn max_step(&self) -> f64 {
        let r = self.max_rate(self.pump_rate);
        if r == 0.0 {
            f64::INFINITY
        } else {
            STABILITY_LIMIT / r
        }
    }
}

/// Occupations `[g0, g+1, g−1, e0, e+1, e−1, singlet]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalPopulations(pub [f64; 7]);

impl OpticalPopulations {
    pub const G0: usize = 0;
    pub const GP: usize = 1;
    pub const GM: usize = 2;
    pub const E0: usize = 3;
    pub const EP: usize = 4;
    pub const EM: usize = 5;
    pub const SINGLET: usize = 6;

    /// All population in the ground state with the given electron
    /// populations `[p(+1), p(0), p(−1)]`.
    pub fn ground(electron: [f64; 3]) -> Self {
        Self([electron[1], electron[0], electron[2], 0.0, 0.0, 0.0, 0.0])
    }

    pub fn ground_ms(ms: i8) -> Self {
        let mut p = [0.0; 3];
        p[(1 - ms) as usize] = 1.0;
        Self::ground(p)
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn ground_total(&self) -> f64 {
        self.0[0] + self.0[1] + self.0[2]
    }

    pub fn excited_total(&self) -> f64 {
        self.0[3] + self.0[4] + self.0[5]
    }

    /// Ground populations ordered `m_s = +1, 0, −1`.
    pub fn ground_electron(&self) -> [f64; 3] {
        [self.0[Self::GP], self.0[Self::G0], self.0[Self::GM]]
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if self.0.iter().any(|p| !p.is_finite() || *p < -1e-12) {
            return Err(DynamicsError::InvalidPopulations("negative or non-finite occupation".into()));
        }
        if (self.sum() - 1.0).abs() > 1e-9 {
            return Err(DynamicsError::InvalidPopulations(format!("occupations sum to {}", self.sum())));
        }
        Ok(())
    }
}

/// Time-domain measurement record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalTrace {
    /// s
    pub times: Vec<f64>,
    /// Photon rate, counts/s.
    pub values: Vec<f64>,
    pub rng_seed: Option<u64>,
}

impl SignalTrace {
    /// Integral over `[t_a, t_b]` by the trapezoid rule with linear
    /// interpolation at the window edges.
    pub fn integrate(&self, t_a: f64, t_b: f64) -> f64 {
        let t = &self.times;
        let v = &self.values;
        let interp = |x: f64| -> f64 {
            match t.binary_search_by(|p| p.total_cmp(&x)) {
                Ok(i) => v[i],
                Err(0) => v[0],
                Err(i) if i >= t.len() => v[t.len() - 1],
                Err(i) => {
                    let w = (x - t[i - 1]) / (t[i] - t[i - 1]);
                    v[i - 1] + w * (v[i] - v[i - 1])
                }
            }
        };
        let mut pts: Vec<(f64, f64)> = vec![(t_a, interp(t_a))];
        pts.extend(t.iter().zip(v.iter()).filter(|(x, _)| **x > t_a && **x < t_b).map(|(x, y)| (*x, *y)));
        pts.push((t_b, interp(t_b)));
        pts.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum()
    }
}

fn derivative(p: &[f64; 7], r: &OpticalRates, pump: f64) -> [f64; 7] {
    let [g0, gp, gm, e0, ep, em, s] = *p;
    let kr = r.radiative_rate;
    let out_s = r.singlet_rate * s;
    let to_g0 = out_s * r.singlet_branch_ms0;
    let to_gpm = 0.5 * out_s * (1.0 - r.singlet_branch_ms0);
    [
        -pump * g0 + kr * e0 + to_g0,
        -pump * gp + kr * ep + to_gpm,
        -pump * gm + kr * em + to_gpm,
        pump * g0 - (kr + r.isc_ms0) * e0,
        pump * gp - (kr + r.isc_ms1) * ep,
        pump * gm - (kr + r.isc_ms1) * em,
        r.isc_ms0 * e0 + r.isc_ms1 * (ep + em) - out_s,
    ]
}

fn emission(p: &[f64; 7], r: &OpticalRates) -> f64 {
    r.radiative_rate * (p[3] + p[4] + p[5]) * r.collection_efficiency
}

/// Integrate the rate equations for `duration` with fixed RK4 steps no larger
/// than `dt`, with the pump rate given as a function of time since the window
/// started. Returns the final occupations and the detected photon rate
/// sampled at every step (times relative to the window start).
pub fn integrate_rates(
    populations: &OpticalPopulations,
    rates: &OpticalRates,
    duration: f64,
    dt: f64,
    pump: impl Fn(f64) -> f64,
) -> Result<(OpticalPopulations, SignalTrace), DynamicsError> {
    rates.validate()?;
    if !(duration >= 0.0) || !(dt > 0.0) {
        return Err(DynamicsError::InvalidTime(duration.min(dt)));
    }
    let n = if duration == 0.0 { 0 } else { (duration / dt - 1e-9).ceil().max(1.0) as usize };
    let h = if n == 0 { 0.0 } else { duration / n as f64 };
    let peak_pump = (0..=n).map(|k| pump(k as f64 * h)).fold(0.0, f64::max);
    let max_rate = rates.max_rate(peak_pump);
    if h * max_rate > STABILITY_LIMIT {
        return Err(DynamicsError::StepTooLarge { dt: h, max_rate });
    }
    let mut p = populations.0;
    let mut times = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    times.push(0.0);
    values.push(emission(&p, rates));
    let axpy = |a: &[f64; 7], k: &[f64; 7], s: f64| -> [f64; 7] {
        let mut o = *a;
        for i in 0..7 {
            o[i] += s * k[i];
        }
        o
    };
    for step in 0..n {
        let t = step as f64 * h;
        let (q0, qm, q1) = (pump(t), pump(t + 0.5 * h), pump(t + h));
        let k1 = derivative(&p, rates, q0);
        let k2 = derivative(&axpy(&p, &k1, 0.5 * h), rates, qm);
        let k3 = derivative(&axpy(&p, &k2, 0.5 * h), rates, qm);
        let k4 = derivative(&axpy(&p, &k3, h), rates, q1);
        for i in 0..7 {
            p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        times.push(t + h);
        values.push(emission(&p, rates));
    }
    Ok((OpticalPopulations(p), SignalTrace { times, values, rng_seed: None }))
}

/// Laser window at constant `rates.pump_rate`.
pub fn optical_cycle(
    populations: &OpticalPopulations,
    rates: &OpticalRates,
    duration: f64,
    dt: f64,
) -> Result<(OpticalPopulations, SignalTrace), DynamicsError> {
    populations.validate()?;
    if dt > duration && duration > 0.0 {
        return Err(DynamicsError::InvalidTime(dt));
    }
    integrate_rates(populations, rates, duration, dt, |_| rates.pump_rate)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutCounts {
    /// Expected counts per shot (noiseless integral).
    pub expected: f64,
    /// Mean of the sampled shots.
    pub mean_counts: f64,
    pub samples: Vec<u64>,
    pub rng_seed: u64,
}

/// Photon counts in `window` for `shots` repetitions with Poisson noise.
pub fn readout_counts(
    trace: &SignalTrace,
    window: (f64, f64),
    shots: usize,
    rng_seed: u64,
) -> Result<ReadoutCounts, DynamicsError> {
    let (t_a, t_b) = window;
    if !(t_b > t_a) {
        return Err(DynamicsError::EmptyWindow);
    }
    let (lo, hi) = match (trace.times.first(), trace.times.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => return Err(DynamicsError::EmptyWindow),
    };
    let slack = 1e-12 * (hi - lo).abs().max(1e-9);
    if t_a < lo - slack || t_b > hi + slack {
        return Err(DynamicsError::WindowOutsideTrace { start: t_a, end: t_b });
    }
    let expected = trace.integrate(t_a, t_b).max(0.0);
    let samples = sample_poisson(expected, shots, rng_seed);
    let mean_counts = if shots == 0 { 0.0 } else { samples.iter().sum::<u64>() as f64 / shots as f64 };
    Ok(ReadoutCounts { expected, mean_counts, samples, rng_seed })
}

pub(crate) fn sample_poisson(mean: f64, shots: usize, seed: u64) -> Vec<u64> {
    if mean <= 0.0 {
        return vec![0; shots];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Poisson::new(mean).expect("positive finite mean");
    (0..shots).map(|_| dist.sample(&mut rng) as u64).collect()
}
