use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::FitError;

/// Fit model and its parameter layout.
///
/// | model | parameters |
/// |---|---|
/// | `lorentzian_multi(n)` | baseline, then (center, width, depth) per dip |
/// | `ramsey_3cos` | A, B, T2*, f1, f2, f3, φ1, φ2, φ3 |
/// | `exp_decay` | A, T, C |
/// | `damped_sin` | A, f, φ, τ, C |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "model", content = "dips", rename_all = "snake_case")]
pub enum FitModel {
    LorentzianMulti(usize),
    Ramsey3Cos,
    ExpDecay,
    DampedSin,
}

/// `baseline − Σ dᵢ (wᵢ/2)² / ((f − cᵢ)² + (wᵢ/2)²)`
pub fn model_lorentzian_multi(f: f64, p: &[f64]) -> f64 {
    let mut v = p[0];
    for dip in p[1..].chunks_exact(3) {
        let (c, w, d) = (dip[0], dip[1], dip[2]);
        let hw2 = 0.25 * w * w;
        v -= d * hw2 / ((f - c).powi(2) + hw2);
    }
    v
}

/// `A + B e^{−t/T2*} Σₖ cos(2π fₖ t + φₖ)`
pub fn model_ramsey_3cos(t: f64, p: &[f64]) -> f64 {
    let s: f64 = (0..3).map(|k| (TAU * p[3 + k] * t + p[6 + k]).cos()).sum();
    p[0] + p[1] * (-t / p[2]).exp() * s
}

/// `A e^{−t/T} + C`
pub fn model_exp_decay(t: f64, p: &[f64]) -> f64 {
    p[0] * (-t / p[1]).exp() + p[2]
}

/// `A e^{−t/τ} cos(2π f t + φ) + C`
pub fn model_damped_sin(t: f64, p: &[f64]) -> f64 {
    p[0] * (-t / p[3]).exp() * (TAU * p[1] * t + p[2]).cos() + p[4]
}

/// Wrap to (−π, π].
pub fn wrap_phase(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

impl FitModel {
    pub fn id(&self) -> &'static str {
        match self {
            FitModel::LorentzianMulti(_) => "lorentzian_multi",
            FitModel::Ramsey3Cos => "ramsey_3cos",
            FitModel::ExpDecay => "exp_decay",
            FitModel::DampedSin => "damped_sin",
        }
    }

    pub fn validate(&self) -> Result<(), FitError> {
        match self {
            FitModel::LorentzianMulti(0) => {
                Err(FitError::InvalidModel("lorentzian_multi needs at least one dip".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            FitModel::LorentzianMulti(n) => 1 + 3 * n,
            FitModel::Ramsey3Cos => 9,
            FitModel::ExpDecay => 3,
            FitModel::DampedSin => 5,
        }
    }

    pub fn param_names(&self) -> Vec<String> {
        match self {
            FitModel::LorentzianMulti(n) => {
                let mut v = vec!["baseline".to_string()];
                for i in 1..=*n {
                    v.extend([format!("center{i}"), format!("width{i}"), format!("depth{i}")]);
                }
                v
            }
            FitModel::Ramsey3Cos => {
                ["A", "B", "T2star", "f1", "f2", "f3", "phi1", "phi2", "phi3"].map(String::from).to_vec()
            }
            FitModel::ExpDecay => ["A", "T", "C"].map(String::from).to_vec(),
            FitModel::DampedSin => ["A", "f", "phi", "tau", "C"].map(String::from).to_vec(),
        }
    }

    pub fn eval(&self, x: f64, p: &[f64]) -> f64 {
        match self {
            FitModel::LorentzianMulti(_) => model_lorentzian_multi(x, p),
            FitModel::Ramsey3Cos => model_ramsey_3cos(x, p),
            FitModel::ExpDecay => model_exp_decay(x, p),
            FitModel::DampedSin => model_damped_sin(x, p),
        }
    }

    /// Default box: widths and time constants strictly positive, frequencies
    /// non-negative, everything else free.
    pub fn default_bounds(&self) -> Bounds {
        let n = self.n_params();
        let mut lower = vec![f64::NEG_INFINITY; n];
        let upper = vec![f64::INFINITY; n];
        let tiny = f64::MIN_POSITIVE;
        match self {
            FitModel::LorentzianMulti(k) => {
                for i in 0..*k {
                    lower[2 + 3 * i] = tiny;
                }
            }
            FitModel::Ramsey3Cos => {
                lower[2] = tiny;
                lower[3..6].fill(0.0);
            }
            FitModel::ExpDecay => lower[1] = tiny,
            FitModel::DampedSin => {
                lower[1] = 0.0;
                lower[3] = tiny;
            }
        }
        Bounds { lower, upper }
    }

    /// Canonical form of a parameter vector: returns `(perm, sign, offset)`
    /// such that `p'[i] = sign[i]·p[perm[i]] + offset[i]`, which removes sign,
    /// phase and ordering ambiguities.
    pub(crate) fn canonical_map(&self, p: &[f64]) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
        let n = self.n_params();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = vec![1.0; n];
        let mut offset = vec![0.0; n];
        let phase_fix = |idx: usize, extra: f64, offset: &mut Vec<f64>| {
            offset[idx] = wrap_phase(p[idx] + extra) - p[idx];
        };
        match self {
            FitModel::LorentzianMulti(k) => {
                let mut order: Vec<usize> = (0..*k).collect();
                order.sort_by(|a, b| p[1 + 3 * a].total_cmp(&p[1 + 3 * b]));
                for (slot, &src) in order.iter().enumerate() {
                    for j in 0..3 {
                        perm[1 + 3 * slot + j] = 1 + 3 * src + j;
                    }
                }
            }
            FitModel::Ramsey3Cos => {
                let flip = p[1] < 0.0;
                if flip {
                    sign[1] = -1.0;
                }
                let mut order = [0usize, 1, 2];
                order.sort_by(|a, b| p[3 + a].total_cmp(&p[3 + b]));
                for (slot, &src) in order.iter().enumerate() {
                    perm[3 + slot] = 3 + src;
                    perm[6 + slot] = 6 + src;
                    let ph = p[6 + src] + if flip { PI } else { 0.0 };
                    offset[6 + slot] = wrap_phase(ph) - p[6 + src];
                }
            }
            FitModel::ExpDecay => {}
            FitModel::DampedSin => {
                let flip = p[0] < 0.0;
                if flip {
                    sign[0] = -1.0;
                }
                phase_fix(2, if flip { PI } else { 0.0 }, &mut offset);
            }
        }
        (perm, sign, offset)
    }
}

impl fmt::Display for FitModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitModel::LorentzianMulti(n) => write!(f, "lorentzian_multi({n})"),
            other => f.write_str(other.id()),
        }
    }
}

/// Accepts `exp_decay`, `damped_sin`, `ramsey_3cos`, `lorentzian_multi(n)`
/// and `lorentzian_multi:n`.
impl FromStr for FitModel {
    type Err = FitError;

    fn from_str(s: &str) -> Result<Self, FitError> {
        let s = s.trim();
        match s {
            "exp_decay" => return Ok(FitModel::ExpDecay),
            "damped_sin" => return Ok(FitModel::DampedSin),
            "ramsey_3cos" => return Ok(FitModel::Ramsey3Cos),
            "lorentzian_multi" => return Ok(FitModel::LorentzianMulti(1)),
            _ => {}
        }
        let rest =
            s.strip_prefix("lorentzian_multi").ok_or_else(|| FitError::InvalidModel(format!("unknown model '{s}'")))?;
        let n = rest
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| rest.strip_prefix(':'))
            .and_then(|r| r.trim().parse::<usize>().ok())
            .ok_or_else(|| FitError::InvalidModel(format!("bad dip count in '{s}'")))?;
        let m = FitModel::LorentzianMulti(n);
        m.validate()?;
        Ok(m)
    }
}

/// Per-parameter box constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn validate(&self, n: usize) -> Result<(), FitError> {
        if self.lower.len() != n || self.upper.len() != n {
            return Err(FitError::InvalidBounds(format!("expected {n} bounds")));
        }
        for (i, (l, u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if l.is_nan() || u.is_nan() || l > u {
                return Err(FitError::InvalidBounds(format!("parameter {i}: lower {l} above upper {u}")));
            }
        }
        Ok(())
    }

    /// `p + delta` kept inside the box, going at most 90 % of the way to a
    /// bound that the step would cross.
    pub fn step(&self, p: &[f64], delta: &[f64]) -> Vec<f64> {
        p.iter()
            .zip(delta)
            .enumerate()
            .map(|(i, (&v, &d))| {
                let t = v + d;
                let (lo, hi) = (self.lower[i], self.upper[i]);
                let out = if t < lo && v > lo {
                    v - 0.9 * (v - lo)
                } else if t > hi && v < hi {
                    v + 0.9 * (hi - v)
                } else {
                    t
                };
                out.clamp(lo, hi)
            })
            .collect()
    }

    pub fn project(&self, p: &mut [f64]) {
        for (i, v) in p.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lorentzian_limits() {
        let p = [1.0, 2.87e9, 1e6, 0.2];
        assert_eq!(model_lorentzian_multi(2.87e9, &p), 0.8);
        assert!((model_lorentzian_multi(3.5e9, &p) - 1.0).abs() < 1e-6);
        assert!((model_lorentzian_multi(2.87e9 + 0.5e6, &p) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn ramsey_substitution() {
        let p = [0.5, 0.1, 1.5e-6, 1e6, 2e6, 3e6, 0.3, -1.0, 2.0];
        let at0 = 0.5 + 0.1 * (0.3f64.cos() + (-1.0f64).cos() + 2.0f64.cos());
        assert!((model_ramsey_3cos(0.0, &p) - at0).abs() < 1e-15);
        let q = [0.5, 0.1, 1.5e-6, 2e6, 2e6, 2e6, 0.0, 0.0, 0.0];
        let t = 0.37e-6;
        let collapsed = 0.5 + 3.0 * 0.1 * (-t / 1.5e-6f64).exp() * (TAU * 2e6 * t).cos();
        assert!((model_ramsey_3cos(t, &q) - collapsed).abs() < 1e-14);
    }

    #[test]
    fn parse_names() {
        assert_eq!("lorentzian_multi(6)".parse::<FitModel>().unwrap(), FitModel::LorentzianMulti(6));
        assert_eq!("lorentzian_multi:2".parse::<FitModel>().unwrap(), FitModel::LorentzianMulti(2));
        assert_eq!(FitModel::Ramsey3Cos.to_string().parse::<FitModel>().unwrap(), FitModel::Ramsey3Cos);
        assert!("lorentzian_multi(0)".parse::<FitModel>().is_err());
        assert!("gauss".parse::<FitModel>().is_err());
    }

    #[test]
    fn wrap() {
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(7.0) - (7.0 - TAU)).abs() < 1e-15);
    }
}
