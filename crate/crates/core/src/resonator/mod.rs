//! Lumped-element design of the microwave loop resonator and magnetostatic
//! field maps of its current path.
//!
//! Circuit convention: the loop inductance `L` carries the series loss `R`
//! and is resonated by a parallel capacitance `C`, so `Q = √(L/C)/R` and the
//! circulating current at resonance is `Q` times the drive current.

mod field;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::C64;

pub use field::{
    biot_savart, field_metrics, loop_field_map, Drive, FieldMap, FieldMetrics, FieldOptions, Geometry, Grid, Region,
};

/// Impedance ratio of the feed balun (50 Ω unbalanced → 100 Ω differential).
pub const BALUN_RATIO: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResonatorError {
    #[error("invalid design: {0}")]
    InvalidDesign(String),
    #[error("impedance must be positive and finite, got {0}")]
    InvalidImpedance(f64),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("region contains no regular grid points")]
    EmptyRegion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RLCDesign {
    /// H
    pub inductance: f64,
    /// F
    pub capacitance: f64,
    /// Ω
    pub series_resistance: f64,
    /// W
    pub drive_power: f64,
}

impl RLCDesign {
    pub fn validate(&self) -> Result<(), ResonatorError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.inductance) || !ok(self.capacitance) {
            return Err(ResonatorError::InvalidDesign("L and C must be positive".into()));
        }
        if !(self.series_resistance >= 0.0) || !self.series_resistance.is_finite() {
            return Err(ResonatorError::InvalidDesign("R must be non-negative".into()));
        }
        if !(self.drive_power >= 0.0) || !self.drive_power.is_finite() {
            return Err(ResonatorError::InvalidDesign("drive power must be non-negative".into()));
        }
        Ok(())
    }

    /// Characteristic impedance `√(L/C)`, Ω.
    pub fn characteristic_impedance(&self) -> f64 {
        (self.inductance / self.capacitance).sqrt()
    }

    /// Loop current at resonance, `Q·√(P/R)`, A.
    pub fn loop_current(&self) -> Option<f64> {
        let q = bandwidth_and_q(self).ok()?;
        if q.infinite {
            return None;
        }
        Some(q.q * (self.drive_power / self.series_resistance).sqrt())
    }
}

/// `f0 = 1/(2π√(LC))`, Hz.
pub fn resonant_frequency(design: &RLCDesign) -> Result<f64, ResonatorError> {
    design.validate()?;
    Ok(1.0 / (std::f64::consts::TAU * (design.inductance * design.capacitance).sqrt()))
}

/// Capacitance resonating `inductance` at `f0`.
pub fn capacitance_for(f0: f64, inductance: f64) -> f64 {
    1.0 / ((std::f64::consts::TAU * f0).powi(2) * inductance)
}

/// Series resistance giving a 3 dB `bandwidth` for the given L and C.
pub fn resistance_for_bandwidth(inductance: f64, capacitance: f64, bandwidth: f64) -> f64 {
    let f0 = 1.0 / (std::f64::consts::TAU * (inductance * capacitance).sqrt());
    (inductance / capacitance).sqrt() * bandwidth / f0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityFactor {
    pub q: f64,
    /// 3 dB bandwidth, Hz.
    pub bandwidth: f64,
    /// Set for a lossless design; `q` is then infinite and `bandwidth` zero.
    pub infinite: bool,
}

pub fn bandwidth_and_q(design: &RLCDesign) -> Result<QualityFactor, ResonatorError> {
    let f0 = resonant_frequency(design)?;
    if design.series_resistance == 0.0 {
        return Ok(QualityFactor { q: f64::INFINITY, bandwidth: 0.0, infinite: true });
    }
    let q = design.characteristic_impedance() / design.series_resistance;
    Ok(QualityFactor { q, bandwidth: f0 / q, infinite: false })
}

fn check_impedance(z: f64) -> Result<(), ResonatorError> {
    if z > 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(ResonatorError::InvalidImpedance(z))
    }
}

/// Characteristic impedance of a quarter-wave transformer, `√(zs·zl)`.
pub fn quarter_wave_match(z_source: f64, z_load: f64) -> Result<f64, ResonatorError> {
    check_impedance(z_source)?;
    check_impedance(z_load)?;
    Ok((z_source * z_load).sqrt())
}

/// Impedance seen on the balanced side of the feed balun.
pub fn balun_output(z_unbalanced: f64) -> f64 {
    BALUN_RATIO * z_unbalanced
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSection {
    /// Ω
    pub z0: f64,
    /// Electrical length in wavelengths.
    pub length: f64,
}

/// Cascade of lossless line sections between a source and a load; sections
/// are listed from the source side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchNetwork {
    pub sections: Vec<LineSection>,
    pub z_source: f64,
    pub z_load: f64,
}

impl MatchNetwork {
    pub fn quarter_wave(z_source: f64, z_load: f64) -> Result<Self, ResonatorError> {
        let z0 = quarter_wave_match(z_source, z_load)?;
        Ok(Self { sections: vec![LineSection { z0, length: 0.25 }], z_source, z_load })
    }

    pub fn validate(&self) -> Result<(), ResonatorError> {
        check_impedance(self.z_source)?;
        check_impedance(self.z_load)?;
        for s in &self.sections {
            check_impedance(s.z0)?;
        }
        Ok(())
    }

    /// Input impedance at the source end.
    pub fn input_impedance(&self) -> Result<C64, ResonatorError> {
        self.validate()?;
        let j = C64::new(0.0, 1.0);
        let mut z = C64::new(self.z_load, 0.0);
        for s in self.sections.iter().rev() {
            let t = (std::f64::consts::TAU * s.length).tan();
            let z0 = C64::new(s.z0, 0.0);
            z = if t.abs() > 1e15 { z0 * z0 / z } else { z0 * (z + j * z0 * t) / (z0 + j * z * t) };
        }
        Ok(z)
    }

    /// |Γ| at the source.
    pub fn reflection(&self) -> Result<f64, ResonatorError> {
        let z = self.input_impedance()?;
        let zs = C64::new(self.z_source, 0.0);
        Ok(((z - zs) / (z + zs)).norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(r: f64) -> RLCDesign {
        let l = 1e-9;
        RLCDesign { inductance: l, capacitance: capacitance_for(2.87e9, l), series_resistance: r, drive_power: 1.0 }
    }

    #[test]
    fn frequency_round_trip() {
        let d = design(1.0);
        assert!((d.capacitance - 3.075e-12).abs() < 1e-15);
        let f0 = resonant_frequency(&d).unwrap();
        assert!((f0 / 2.87e9 - 1.0).abs() < 1e-12);
        let d4 = RLCDesign { inductance: 4e-9, ..d };
        assert!((resonant_frequency(&d4).unwrap() / (0.5 * f0) - 1.0).abs() < 1e-12);
        let unit = RLCDesign { inductance: 1.0, capacitance: 1.0, series_resistance: 0.0, drive_power: 0.0 };
        assert!((resonant_frequency(&unit).unwrap() - 1.0 / std::f64::consts::TAU).abs() < 1e-15);
    }

    #[test]
    fn bandwidth_target() {
        let base = design(0.0);
        let r = resistance_for_bandwidth(base.inductance, base.capacitance, 270e6);
        let q = bandwidth_and_q(&RLCDesign { series_resistance: r, ..base }).unwrap();
        assert!((q.bandwidth - 270e6).abs() / 270e6 < 1e-12);
        assert!((q.q - 10.63).abs() < 0.01);
        let f0 = resonant_frequency(&base).unwrap();
        assert!((q.bandwidth * q.q - f0).abs() / f0 < 1e-12);
        let q2 = bandwidth_and_q(&RLCDesign { series_resistance: 2.0 * r, ..base }).unwrap();
        assert!((q2.q - 0.5 * q.q).abs() / q.q < 1e-12);
    }

    #[test]
    fn lossless_is_flagged() {
        let q = bandwidth_and_q(&design(0.0)).unwrap();
        assert!(q.infinite && q.q.is_infinite());
        assert_eq!(design(0.0).loop_current(), None);
    }

    #[test]
    fn quarter_wave_values() {
        assert!((quarter_wave_match(100.0, 650.0).unwrap() - 254.950975679639).abs() < 1e-9);
        assert!((quarter_wave_match(50.0, 100.0).unwrap() - 70.71067811865476).abs() < 1e-9);
        assert_eq!(quarter_wave_match(73.0, 73.0).unwrap(), 73.0);
        assert!(quarter_wave_match(-1.0, 50.0).is_err());
        assert_eq!(balun_output(50.0), 100.0);
    }

    #[test]
    fn quarter_wave_line_matches() {
        let n = MatchNetwork::quarter_wave(100.0, 650.0).unwrap();
        let z = n.input_impedance().unwrap();
        assert!((z.re - 100.0).abs() < 1e-9 && z.im.abs() < 1e-9);
        assert!(n.reflection().unwrap() < 1e-12);
        let half =
            MatchNetwork { sections: vec![LineSection { z0: 80.0, length: 0.5 }], z_source: 50.0, z_load: 120.0 };
        assert!((half.input_impedance().unwrap().re - 120.0).abs() < 1e-9);
    }
}
