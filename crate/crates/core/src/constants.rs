//! Physical constants (SI, CODATA 2018).

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Bohr magneton, J/T.
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// Nuclear magneton, J/T.
pub const NUCLEAR_MAGNETON: f64 = 5.050_783_746_1e-27;
/// Vacuum permeability, H/m.
pub const MU_0: f64 = 1.256_637_062_12e-6;
/// μ0 / 4π, H/m.
pub const MU0_OVER_4PI: f64 = MU_0 / (4.0 * std::f64::consts::PI);
/// Atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_54e-27;
/// Mass of a carbon-12 atom, kg.
pub const CARBON_MASS: f64 = 12.0 * ATOMIC_MASS_UNIT;
/// Diamond mass density, kg/m³.
pub const DIAMOND_DENSITY: f64 = 3510.0;
/// NV electron g-factor.
pub const NV_G_FACTOR: f64 = 2.0028;
/// ¹⁴N nuclear g-factor.
pub const N14_G_FACTOR: f64 = 0.403_761;
