//! Stern-Gerlach splitting of a nanodiamond hosting a single NV.
//!
//! Each interferometer arm is a spin projection `m_s` feeling the force
//! `m_s g_s μ_B ∂B/∂z` during a piecewise-constant gradient profile. The
//! trajectories are integrated exactly per segment. Gravity and diamagnetic
//! forces are common mode and left out.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{BOHR_MAGNETON, CARBON_MASS, DIAMOND_DENSITY, NV_G_FACTOR};

/// Default ceiling on |∂B/∂z|, T/m.
pub const DEFAULT_MAX_GRADIENT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SgiError {
    #[error("atom count must be at least 1, got {0}")]
    InvalidAtoms(f64),
    #[error("invalid gradient profile: {0}")]
    InvalidProfile(String),
    #[error("invalid arm projection {0}")]
    InvalidArm(i8),
    #[error("coherence time must be positive")]
    InvalidCoherence,
}

/// Nanodiamond size derived from its carbon atom count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NDSpec {
    pub n_atoms: f64,
    /// kg
    pub mass: f64,
    /// Edge of a cube of the same volume, m.
    pub cube_edge: f64,
    /// Diameter of a sphere of the same volume, m.
    pub sphere_diameter: f64,
}

pub fn nd_from_atoms(n_atoms: f64) -> Result<NDSpec, SgiError> {
    if !(n_atoms >= 1.0) || !n_atoms.is_finite() {
        return Err(SgiError::InvalidAtoms(n_atoms));
    }
    let mass = n_atoms * CARBON_MASS;
    let volume = mass / DIAMOND_DENSITY;
    Ok(NDSpec {
        n_atoms,
        mass,
        cube_edge: volume.cbrt(),
        sphere_diameter: (6.0 * volume / std::f64::consts::PI).cbrt(),
    })
}

/// Acceleration of arm `m_s` in a gradient (T/m), m/s².
pub fn spin_acceleration(nd: &NDSpec, gradient: f64, ms: i8) -> f64 {
    ms as f64 * NV_G_FACTOR * BOHR_MAGNETON * gradient / nd.mass
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientSegment {
    /// s
    pub duration: f64,
    /// Signed ∂B/∂z, T/m.
    pub gradient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientProfile {
    pub segments: Vec<GradientSegment>,
    pub max_gradient: f64,
}

impl GradientProfile {
    pub fn new(segments: Vec<GradientSegment>) -> Self {
        Self { segments, max_gradient: DEFAULT_MAX_GRADIENT }
    }

    /// Four equal segments with gradient signs `+, −, −, +`: the arms
    /// separate, stop, return and stop again at the origin.
    pub fn symmetric(total_duration: f64, gradient: f64) -> Self {
        let q = 0.25 * total_duration;
        Self::new(
            [1.0, -1.0, -1.0, 1.0].iter().map(|s| GradientSegment { duration: q, gradient: s * gradient }).collect(),
        )
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn validate(&self) -> Result<(), SgiError> {
        if self.segments.is_empty() {
            return Err(SgiError::InvalidProfile("no segments".into()));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.duration > 0.0) || !s.duration.is_finite() {
                return Err(SgiError::InvalidProfile(format!("segment {i}: duration must be positive")));
            }
            if !s.gradient.is_finite() || s.gradient.abs() > self.max_gradient {
                return Err(SgiError::InvalidProfile(format!(
                    "segment {i}: |gradient| exceeds {:e} T/m",
                    self.max_gradient
                )));
            }
        }
        Ok(())
    }
}

/// Constant-acceleration piece starting at `t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub t0: f64,
    pub z0: f64,
    pub v0: f64,
    pub a: f64,
}

impl Piece {
    fn position(&self, t: f64) -> f64 {
        let s = t - self.t0;
        self.z0 + self.v0 * s + 0.5 * self.a * s * s
    }

    fn velocity(&self, t: f64) -> f64 {
        self.v0 + self.a * (t - self.t0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmTrajectory {
    pub ms: i8,
    pub pieces: Vec<Piece>,
    pub times: Vec<f64>,
    pub z: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Closure {
    /// m
    pub dz_final: f64,
    /// m/s
    pub dv_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SGIResult {
    pub nd: NDSpec,
    pub arms: [ArmTrajectory; 2],
    /// m
    pub max_splitting: f64,
    /// Largest arm speed, m/s.
    pub max_speed: f64,
    pub closure: Closure,
    pub contrast: f64,
}

/// Coherence model and sampling density for [`simulate_interferometer`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgiOptions {
    /// Spin coherence time, s.
    pub t2: f64,
    pub exponent: f64,
    pub samples_per_segment: usize,
}

impl Default for SgiOptions {
    fn default() -> Self {
        Self { t2: 79e-6, exponent: 1.0, samples_per_segment: 50 }
    }
}

/// `exp(−(T/T2)^n)`.
pub fn contrast_estimate(total_duration: f64, t2: f64, exponent: f64) -> Result<f64, SgiError> {
    if !(t2 > 0.0) || !(exponent > 0.0) {
        return Err(SgiError::InvalidCoherence);
    }
    Ok((-(total_duration.max(0.0) / t2).powf(exponent)).exp().clamp(0.0, 1.0))
}

fn pieces(nd: &NDSpec, profile: &GradientProfile, ms: i8) -> Vec<Piece> {
    let mut out = Vec::with_capacity(profile.segments.len());
    let (mut t, mut z, mut v) = (0.0, 0.0, 0.0);
    for seg in &profile.segments {
        let a = spin_acceleration(nd, seg.gradient, ms);
        let p = Piece { t0: t, z0: z, v0: v, a };
        let d = seg.duration;
        z += v * d + 0.5 * a * d * d;
        v += a * d;
        t += d;
        out.push(p);
    }
    out.push(Piece { t0: t, z0: z, v0: v, a: 0.0 });
    out
}

pub fn simulate_interferometer(
    nd: &NDSpec,
    profile: &GradientProfile,
    arms: (i8, i8),
    options: &SgiOptions,
) -> Result<SGIResult, SgiError> {
    profile.validate()?;
    for ms in [arms.0, arms.1] {
        if !(-1..=1).contains(&ms) {
            return Err(SgiError::InvalidArm(ms));
        }
    }
    let pa = pieces(nd, profile, arms.0);
    let pb = pieces(nd, profile, arms.1);
    let n_seg = profile.segments.len();

    // Exact extrema of the piecewise-quadratic separation.
    let mut max_split = 0.0f64;
    let mut max_speed = 0.0f64;
    for k in 0..n_seg {
        let (a, b) = (&pa[k], &pb[k]);
        let d = profile.segments[k].duration;
        let mut cand = vec![a.t0, a.t0 + d];
        let da = a.a - b.a;
        if da != 0.0 {
            let s = -(a.v0 - b.v0) / da;
            if s > 0.0 && s < d {
                cand.push(a.t0 + s);
            }
        }
        for t in cand {
            max_split = max_split.max((a.position(t) - b.position(t)).abs());
        }
        for t in [a.t0, a.t0 + d] {
            max_speed = max_speed.max(a.velocity(t).abs()).max(b.velocity(t).abs());
        }
    }
    let (ea, eb) = (&pa[n_seg], &pb[n_seg]);
    let closure = Closure { dz_final: ea.z0 - eb.z0, dv_final: ea.v0 - eb.v0 };

    let sample = |ps: &[Piece], ms: i8| -> ArmTrajectory {
        let m = options.samples_per_segment.max(1);
        let mut times = Vec::new();
        let mut z = Vec::new();
        let mut v = Vec::new();
        for (k, seg) in profile.segments.iter().enumerate() {
            let p = &ps[k];
            let first = if k == 0 { 0 } else { 1 };
            for j in first..=m {
                let t = p.t0 + seg.duration * j as f64 / m as f64;
                times.push(t);
                z.push(p.position(t));
                v.push(p.velocity(t));
            }
        }
        ArmTrajectory { ms, pieces: ps.to_vec(), times, z, v }
    };

    Ok(SGIResult {
        nd: *nd,
        arms: [sample(&pa, arms.0), sample(&pb, arms.1)],
        max_splitting: max_split,
        max_speed,
        closure,
        contrast: contrast_estimate(profile.total_duration(), options.t2, options.exponent)?,
    })
}
