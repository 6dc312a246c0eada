//! Flat JSON run configuration. Every key is optional; command-line flags
//! win over file values, which win over `NVSIM_SEED` (seed only) and the
//! built-in defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{DriveMode, RelaxationParams};
use crate::hamiltonian::NVParameters;
use crate::sequence::{CompileOptions, DephasingModel, ExecOptions};

use super::output::Format;
use super::CliError;

/// Default repetitions per readout.
pub const DEFAULT_SHOTS: usize = 10_000;
/// Default number of NV centers sharing one readout.
pub const DEFAULT_ENSEMBLE: f64 = 1000.0;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Zero-field splitting, Hz.
    pub d_gs: Option<f64>,
    /// Transverse strain E, Hz.
    pub e_strain: Option<f64>,
    pub p_quad: Option<f64>,
    pub a_par: Option<f64>,
    pub a_perp: Option<f64>,
    pub g_s: Option<f64>,
    pub g_i: Option<f64>,
    /// Static field in the crystal frame, T.
    pub b_field: Option<[f64; 3]>,
    pub nv_axis: Option<[f64; 3]>,
    /// `false` drops the nuclear spin terms.
    pub hyperfine: Option<bool>,

    pub t1: Option<f64>,
    pub t2_star: Option<f64>,
    pub t2_echo: Option<f64>,
    pub echo_exponent: Option<f64>,

    pub pump_rate: Option<f64>,
    pub radiative_rate: Option<f64>,
    pub isc_ms1: Option<f64>,
    pub isc_ms0: Option<f64>,
    pub singlet_rate: Option<f64>,
    pub singlet_branch_ms0: Option<f64>,
    pub collection_efficiency: Option<f64>,

    /// Rabi frequency of pulses without an explicit amplitude, Hz.
    pub rabi: Option<f64>,
    pub drive: Option<DriveKind>,
    pub dephasing: Option<DephasingModel>,
    pub mw_slice: Option<f64>,
    pub optical_dt: Option<f64>,
    pub laser_ramp: Option<f64>,
    pub ensemble_size: Option<f64>,

    pub shots: Option<usize>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DriveKind {
    Rwa,
    Full,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| CliError::Usage(format!("malformed config {}: {e}", path.display())))
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Overlay `other` on `self`: keys set in `other` win.
    pub fn merge(self, other: RunConfig) -> RunConfig {
        macro_rules! pick {
            ($($f:ident),*) => { RunConfig { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(
            d_gs,
            e_strain,
            p_quad,
            a_par,
            a_perp,
            g_s,
            g_i,
            b_field,
            nv_axis,
            hyperfine,
            t1,
            t2_star,
            t2_echo,
            echo_exponent,
            pump_rate,
            radiative_rate,
            isc_ms1,
            isc_ms0,
            singlet_rate,
            singlet_branch_ms0,
            collection_efficiency,
            rabi,
            drive,
            dephasing,
            mw_slice,
            optical_dt,
            laser_ramp,
            ensemble_size,
            shots,
            seed,
            format,
            output
        )
    }

    pub fn resolve(&self, env_seed: Option<u64>) -> Result<Resolved, CliError> {
        let d = NVParameters::default();
        let mut nv = NVParameters {
            d_gs: self.d_gs.unwrap_or(d.d_gs),
            e_strain: self.e_strain.unwrap_or(d.e_strain),
            p_quad: self.p_quad.unwrap_or(d.p_quad),
            a_par: self.a_par.unwrap_or(d.a_par),
            a_perp: self.a_perp.unwrap_or(d.a_perp),
            g_s: self.g_s.unwrap_or(d.g_s),
            g_i: self.g_i.unwrap_or(d.g_i),
            b_field: self.b_field.unwrap_or(d.b_field),
            nv_axis: self.nv_axis.unwrap_or(d.nv_axis),
        };
        if self.hyperfine == Some(false) {
            nv = nv.without_hyperfine();
        }
        nv.validate().map_err(|e| CliError::Physics(e.into()))?;

        let r = RelaxationParams::default();
        let o = r.optical;
        let mut relax = RelaxationParams {
            t1: self.t1.unwrap_or(r.t1),
            t2_star: self.t2_star.unwrap_or(r.t2_star),
            t2_echo: self.t2_echo.unwrap_or(r.t2_echo),
            echo_exponent: self.echo_exponent.unwrap_or(r.echo_exponent),
            optical: o,
        };
        let opt = &mut relax.optical;
        opt.pump_rate = self.pump_rate.unwrap_or(o.pump_rate);
        opt.radiative_rate = self.radiative_rate.unwrap_or(o.radiative_rate);
        opt.isc_ms1 = self.isc_ms1.unwrap_or(o.isc_ms1);
        opt.isc_ms0 = self.isc_ms0.unwrap_or(o.isc_ms0);
        opt.singlet_rate = self.singlet_rate.unwrap_or(o.singlet_rate);
        opt.singlet_branch_ms0 = self.singlet_branch_ms0.unwrap_or(o.singlet_branch_ms0);
        opt.collection_efficiency = self.collection_efficiency.unwrap_or(o.collection_efficiency);
        relax.validate().map_err(|e| CliError::Physics(e.into()))?;

        let shots = self.shots.unwrap_or(DEFAULT_SHOTS);
        if shots < 1 {
            return Err(CliError::Usage("shots must be at least 1".into()));
        }
        let seed = self.seed.or(env_seed).unwrap_or(0);
        let e = ExecOptions::default();
        let exec = ExecOptions {
            drive_mode: match self.drive.unwrap_or(DriveKind::Rwa) {
                DriveKind::Rwa => DriveMode::Rwa,
                DriveKind::Full => DriveMode::full(),
            },
            mw_slice: self.mw_slice.unwrap_or(e.mw_slice),
            optical_dt: self.optical_dt.unwrap_or(e.optical_dt),
            laser_ramp: self.laser_ramp.unwrap_or(e.laser_ramp),
            dephasing: self.dephasing.unwrap_or(e.dephasing),
            ensemble_size: self.ensemble_size.unwrap_or(DEFAULT_ENSEMBLE),
            shots,
            seed,
            keep_samples: false,
            ..e
        };
        exec.validate().map_err(|e| CliError::Physics(e.into()))?;
        let mut compile = CompileOptions::default();
        if let Some(r) = self.rabi {
            if !(r > 0.0) || !r.is_finite() {
                return Err(CliError::Physics(
                    crate::sequence::SequenceError::InvalidRange("rabi must be positive".into()).into(),
                ));
            }
            compile.default_rabi = r;
        }
        Ok(Resolved {
            nv,
            relax,
            exec,
            compile,
            seed,
            format: self.format.unwrap_or_default(),
            output: self.output.clone(),
        })
    }
}

/// Fully defaulted settings handed to the commands.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub nv: NVParameters,
    pub relax: RelaxationParams,
    pub exec: ExecOptions,
    pub compile: CompileOptions,
    pub seed: u64,
    pub format: Format,
    pub output: Option<PathBuf>,
}
