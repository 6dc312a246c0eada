use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use crate::dynamics::{
    relaxation_channel, sample_poisson, DensityMatrix, DriveMode, DrivePulse, DynamicsError, NvState, ReadoutCounts,
    RelaxationParams, SignalTrace, SpinEvolver,
};
use crate::hamiltonian::NVParameters;

use super::ast::{Dimension, SequenceProgram};
use super::compile::{compile, Assignment, Channel, CompileOptions, Event, PulseRole, Timeline};
use super::SequenceError;

/// Coherence decay applied in the dark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DephasingModel {
    /// Echo envelope inside dark segments holding a π pulse between two π/2
    /// pulses, free decay elsewhere.
    #[default]
    Auto,
    /// `exp(−t/T2*)` everywhere.
    Free,
    /// `exp(−(T/T2)^n)` on the dark time `T` since the last laser pulse.
    Echo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExecOptions {
    pub drive_mode: DriveMode,
    /// Longest MW piece between relaxation steps, s.
    pub mw_slice: f64,
    /// Rate-equation step during laser windows, s.
    pub optical_dt: f64,
    /// Linear laser rise/fall time, s (0 for instantaneous edges).
    pub laser_ramp: f64,
    pub dephasing: DephasingModel,
    /// Number of NV centers contributing photons.
    pub ensemble_size: f64,
    /// Poisson-sampled repetitions per readout.
    pub shots: usize,
    pub seed: u64,
    /// MW field direction in the NV frame.
    pub drive_axis: [f64; 3],
    /// Store every shot. When false only the summed count is drawn, from
    /// Poisson(shots·expected), which gives the mean the same distribution.
    pub keep_samples: bool,
}

impl Default for ExecOptions {
    fn default() -> Self {
        Self {
            drive_mode: DriveMode::Rwa,
            mw_slice: 10e-9,
            optical_dt: 0.5e-9,
            laser_ramp: 0.0,
            dephasing: DephasingModel::Auto,
            ensemble_size: 1.0,
            shots: 0,
            seed: 0,
            drive_axis: [1.0, 0.0, 0.0],
            keep_samples: true,
        }
    }
}

impl ExecOptions {
    pub fn validate(&self) -> Result<(), SequenceError> {
        let bad = |m: &str| Err(SequenceError::InvalidRange(m.into()));
        if !(self.mw_slice > 0.0) || !(self.optical_dt > 0.0) {
            return bad("mw_slice and optical_dt must be positive");
        }
        if !(self.laser_ramp >= 0.0) || !self.laser_ramp.is_finite() {
            return bad("laser_ramp must be non-negative");
        }
        if !(self.ensemble_size >= 0.0) || !self.ensemble_size.is_finite() {
            return bad("ensemble_size must be non-negative");
        }
        Ok(())
    }
}

/// One readout window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Readout {
    pub start_ns: i64,
    pub end_ns: i64,
    /// Photon rate with times on the sequence clock.
    pub trace: SignalTrace,
    pub counts: ReadoutCounts,
    /// Ground-state m_s populations (+1, 0, −1) when the window opens.
    pub populations: [f64; 3],
}

/// Worst state-validity figures over all checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateCheck {
    pub checkpoints: usize,
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
    pub max_population_error: f64,
}

impl Default for StateCheck {
    fn default() -> Self {
        Self {
            checkpoints: 0,
            max_trace_error: 0.0,
            max_hermiticity_error: 0.0,
            min_eigenvalue: f64::INFINITY,
            max_population_error: 0.0,
        }
    }
}

impl StateCheck {
    fn record(&mut self, nv: &NvState) {
        let s = nv.spin();
        self.checkpoints += 1;
        self.max_trace_error = self.max_trace_error.max(s.trace_error());
        self.max_hermiticity_error = self.max_hermiticity_error.max(s.hermiticity_error());
        self.min_eigenvalue = self.min_eigenvalue.min(s.min_eigenvalue());
        self.max_population_error = self.max_population_error.max((nv.optical().sum() - 1.0).abs());
    }

    pub fn merge(&mut self, other: &StateCheck) {
        self.checkpoints += other.checkpoints;
        self.max_trace_error = self.max_trace_error.max(other.max_trace_error);
        self.max_hermiticity_error = self.max_hermiticity_error.max(other.max_hermiticity_error);
        self.min_eigenvalue = self.min_eigenvalue.min(other.min_eigenvalue);
        self.max_population_error = self.max_population_error.max(other.max_population_error);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecResult {
    pub final_state: NvState,
    pub readouts: Vec<Readout>,
    pub check: StateCheck,
}

pub(crate) fn mix_seed(seed: u64, k: u64) -> u64 {
    let mut z = seed ^ k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Relaxation factors for successive dark intervals.
struct Dephaser<'a> {
    relax: &'a RelaxationParams,
    echo: bool,
    clock: f64,
}

impl Dephaser<'_> {
    fn apply(&mut self, rho: &DensityMatrix, dt: f64) -> DensityMatrix {
        let r = self.relax;
        let pop = (-dt / r.t1).exp();
        let coh = if self.echo {
            let n = r.echo_exponent;
            let a = (self.clock / r.t2_echo).powf(n);
            let b = ((self.clock + dt) / r.t2_echo).powf(n);
            (a - b).exp()
        } else {
            (-dt / r.t2_star).exp()
        };
        self.clock += dt;
        relaxation_channel(rho, pop, coh)
    }
}

/// Which events sit in a dark segment that forms an echo.
fn echo_segments(events: &[Event], model: DephasingModel) -> Vec<bool> {
    match model {
        DephasingModel::Free => return vec![false; events.len()],
        DephasingModel::Echo => return vec![true; events.len()],
        DephasingModel::Auto => {}
    }
    let mut out = vec![false; events.len()];
    let mut start = 0;
    for end in 0..=events.len() {
        let boundary = end == events.len() || matches!(events[end].channel, Channel::Laser | Channel::Readout);
        if !boundary {
            continue;
        }
        let roles: Vec<PulseRole> = events[start..end].iter().filter_map(|e| e.role).collect();
        let first_half = roles.iter().position(|r| *r == PulseRole::HalfPi);
        let last_half = roles.iter().rposition(|r| *r == PulseRole::HalfPi);
        let echo = match (first_half, last_half) {
            (Some(a), Some(b)) if a < b => roles[a..b].contains(&PulseRole::Pi),
            _ => false,
        };
        for flag in &mut out[start..end] {
            *flag = echo;
        }
        start = end + 1;
    }
    out
}

/// Runs timelines for one set of NV and relaxation parameters.
#[derive(Debug, Clone)]
pub struct Executor {
    params: NVParameters,
    relaxation: RelaxationParams,
    options: ExecOptions,
    evolver: SpinEvolver,
}

impl Executor {
    pub fn new(
        params: &NVParameters,
        relaxation: &RelaxationParams,
        options: &ExecOptions,
    ) -> Result<Self, SequenceError> {
        relaxation.validate()?;
        options.validate()?;
        let evolver = SpinEvolver::new(params)?;
        Ok(Self { params: *params, relaxation: *relaxation, options: *options, evolver })
    }

    pub fn params(&self) -> &NVParameters {
        &self.params
    }

    pub fn relaxation(&self) -> &RelaxationParams {
        &self.relaxation
    }

    pub fn options(&self) -> &ExecOptions {
        &self.options
    }

    pub fn run(&self, timeline: &Timeline, initial: &NvState, seed: u64) -> Result<ExecResult, SequenceError> {
        timeline.validate()?;
        initial.validate()?;
        let rates = &self.relaxation.optical;
        let o = &self.options;
        let echo = echo_segments(&timeline.events, o.dephasing);
        let mut nv = initial.clone();
        let mut check = StateCheck::default();
        check.record(&nv);
        let mut readouts = Vec::new();
        let mut dark_clock = 0.0;
        for (k, e) in timeline.events.iter().enumerate() {
            let t = e.duration();
            match e.channel {
                Channel::Laser | Channel::Readout => {
                    dark_clock = 0.0;
                    let populations = nv.spin().electron_populations();
                    if t > 0.0 {
                        let (next, mut trace) = nv.laser(rates, t, o.optical_dt, o.laser_ramp)?;
                        nv = next;
                        if e.channel == Channel::Readout {
                            let t0 = e.start();
                            trace.times.iter_mut().for_each(|x| *x += t0);
                            let expected = trace.integrate(t0, t0 + t) * o.ensemble_size;
                            let rseed = mix_seed(seed, readouts.len() as u64);
                            trace.rng_seed = Some(rseed);
                            readouts.push(Readout {
                                start_ns: e.start_ns,
                                end_ns: e.end_ns,
                                counts: counts(expected, o, rseed),
                                trace,
                                populations,
                            });
                        }
                    } else if e.channel == Channel::Readout {
                        let rseed = mix_seed(seed, readouts.len() as u64);
                        readouts.push(Readout {
                            start_ns: e.start_ns,
                            end_ns: e.end_ns,
                            trace: SignalTrace { times: vec![e.start()], values: vec![0.0], rng_seed: Some(rseed) },
                            counts: counts(0.0, o, rseed),
                            populations,
                        });
                    }
                }
                Channel::Wait => {
                    let mut d = Dephaser { relax: &self.relaxation, echo: echo[k], clock: dark_clock };
                    let spin = d.apply(&self.evolver.free(nv.spin(), t), t);
                    dark_clock = d.clock;
                    nv = nv.dark(spin, rates, t)?;
                }
                Channel::Mw => {
                    let pulse = DrivePulse {
                        carrier: e.frequency_hz.unwrap_or(0.0),
                        rabi: e.rabi_hz.unwrap_or(0.0),
                        phase: e.phase_rad.unwrap_or(0.0),
                        duration: t,
                        drive_axis: o.drive_axis,
                    };
                    let slices = ((t / o.mw_slice).ceil() as usize).max(1);
                    let mut d = Dephaser { relax: &self.relaxation, echo: echo[k], clock: dark_clock };
                    let mut failure: Option<DynamicsError> = None;
                    let rho0 = nv.spin().clone();
                    {
                        let state = &mut nv;
                        self.evolver.drive_sliced(&rho0, &pulse, o.drive_mode, e.start(), slices, |rho, dt| {
                            let relaxed = d.apply(&rho, dt);
                            match state.dark(relaxed, rates, dt) {
                                Ok(next) => {
                                    *state = next;
                                    state.spin().clone()
                                }
                                Err(err) => {
                                    failure.get_or_insert(err);
                                    rho
                                }
                            }
                        })?;
                    }
                    if let Some(err) = failure {
                        return Err(err.into());
                    }
                    dark_clock = d.clock;
                }
            }
            check.record(&nv);
        }
        Ok(ExecResult { final_state: nv, readouts, check })
    }
}

fn counts(expected: f64, o: &ExecOptions, seed: u64) -> ReadoutCounts {
    let shots = o.shots;
    if shots == 0 {
        return ReadoutCounts { expected, mean_counts: expected, samples: Vec::new(), rng_seed: seed };
    }
    if !o.keep_samples {
        let total = sample_poisson(expected * shots as f64, 1, seed)[0];
        return ReadoutCounts {
            expected,
            mean_counts: total as f64 / shots as f64,
            samples: Vec::new(),
            rng_seed: seed,
        };
    }
    let samples = sample_poisson(expected, shots, seed);
    let mean_counts = samples.iter().sum::<u64>() as f64 / shots as f64;
    ReadoutCounts { expected, mean_counts, samples, rng_seed: seed }
}

/// Execute a timeline from `initial`.
pub fn execute(
    timeline: &Timeline,
    initial: &NvState,
    params: &NVParameters,
    relaxation: &RelaxationParams,
    options: &ExecOptions,
) -> Result<ExecResult, SequenceError> {
    Executor::new(params, relaxation, options)?.run(timeline, initial, options.seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub assignment: Assignment,
    /// Assignment after time values are moved onto the 1 ns grid.
    pub snapped: Assignment,
    pub readouts: Vec<Readout>,
    pub check: StateCheck,
}

impl SweepPoint {
    /// Mean counts of readout `k`.
    pub fn signal(&self, k: usize) -> Option<f64> {
        self.readouts.get(k).map(|r| r.counts.mean_counts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Sweep variables, outermost first.
    pub variables: Vec<String>,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn values(&self, name: &str) -> Vec<f64> {
        self.points.iter().map(|p| p.snapped.get(name).copied().unwrap_or(f64::NAN)).collect()
    }

    pub fn signal(&self, k: usize) -> Vec<f64> {
        self.points.iter().map(|p| p.signal(k).unwrap_or(f64::NAN)).collect()
    }

    pub fn check(&self) -> StateCheck {
        let mut c = StateCheck::default();
        for p in &self.points {
            c.merge(&p.check);
        }
        c
    }
}

/// Run every point of the program's sweeps (their Cartesian product, last
/// declared varying fastest) in parallel. Point `i` uses seed
/// `mix(options.seed, i)`, so results do not depend on scheduling.
pub fn run_sweep(
    program: &SequenceProgram,
    compile_options: &CompileOptions,
    executor: &Executor,
    initial: &NvState,
) -> Result<SweepResult, SequenceError> {
    let sweeps = program.sweeps();
    let total = sweeps.iter().try_fold(1usize, |acc, w| acc.checked_mul(w.points));
    let total = total
        .filter(|t| *t <= compile_options.max_events)
        .ok_or(SequenceError::TooManyEvents(compile_options.max_events))?;
    let base = executor.options.seed;
    let points: Result<Vec<SweepPoint>, SequenceError> = (0..total)
        .into_par_iter()
        .map(|index| {
            let mut rest = index;
            let mut assignment = Assignment::new();
            let mut snapped = Assignment::new();
            for w in sweeps.iter().rev() {
                let i = rest % w.points;
                rest /= w.points;
                let v = w.value(i);
                assignment.insert(w.name.clone(), v);
                let s = if w.dimension() == Dimension::Time { (v * 1e9).round() / 1e9 } else { v };
                snapped.insert(w.name.clone(), s);
            }
            let timeline = compile(program, &assignment, compile_options)?;
            let r = executor.run(&timeline, initial, mix_seed(base, index as u64))?;
            Ok(SweepPoint { index, assignment, snapped, readouts: r.readouts, check: r.check })
        })
        .collect();
    Ok(SweepResult { variables: sweeps.iter().map(|w| w.name.clone()).collect(), points: points? })
}
