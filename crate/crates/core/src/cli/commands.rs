use std::str::FromStr;

use serde_json::{json, Value};

use crate::analysis::{fit_auto, FitModel, FitOptions, FitResult, Weighting};
use crate::dynamics::NvState;
use crate::hamiltonian::{
    bulk_parameters, cluster_dips, find_dips, odmr_spectrum, powder_spectrum, resolvable_dip_count, transitions_for,
    NVParameters, Spectrum,
};
use crate::resonator::{
    balun_output, bandwidth_and_q, capacitance_for, field_metrics, loop_field_map, quarter_wave_match,
    resistance_for_bandwidth, resonant_frequency, Drive, FieldOptions, Geometry, Grid, MatchNetwork, RLCDesign, Region,
};
use crate::sequence::protocols::{self, Scan, CW_RABI};
use crate::sequence::{
    compile, parse_sweep, parse_with_sweeps, run_sweep, Assignment, Dimension, Executor, SequenceProgram, SweepResult,
};
use crate::sgi::{nd_from_atoms, simulate_interferometer, spin_acceleration, GradientProfile, SgiOptions};

use super::output::{Document, Table};
use super::*;

pub(super) fn dispatch(command: &Command, s: &Resolved) -> Result<Document, CliError> {
    match command {
        Command::Odmr(a) => odmr(a, s),
        Command::Rabi(a) => rabi(a, s),
        Command::RamseyTime(a) => ramsey_time(a, s),
        Command::RamseyFreq(a) => ramsey_freq(a, s),
        Command::T1(a) => t1(a, s),
        Command::Echo(a) => echo(a, s),
        Command::Run(a) => run(a, s),
        Command::Sgi(a) => sgi(a),
        Command::Resonator(a) => resonator(a),
        Command::Fit(a) => fit_file(a),
    }
}

fn doc(command: &str, summary: Value, data: Table) -> Document {
    Document { command: command.into(), summary, data: Some(data) }
}

/// The m_s 0 → −1 line of the m_I = 0 manifold (strongest if several).
fn default_line(nv: &NVParameters) -> Result<f64, CliError> {
    let t = transitions_for(nv)?;
    let pick = t
        .lines
        .iter()
        .filter(|l| l.lower.ms == 0 && l.upper.ms == -1 && l.lower.mi == 0)
        .max_by(|a, b| a.amplitude.total_cmp(&b.amplitude))
        .or_else(|| t.lines.iter().min_by(|a, b| a.frequency.total_cmp(&b.frequency)));
    pick.map(|l| l.frequency).ok_or_else(|| CliError::Usage("no allowed transition; pass --frequency".into()))
}

fn scan(args: &ScanArgs, dim: Dimension, start: f64, stop: f64, points: usize) -> Result<Scan, CliError> {
    let q = |s: &Option<String>, d: f64| match s {
        Some(t) => parse_quantity(t, dim).map_err(CliError::Usage),
        None => Ok(d),
    };
    Ok(Scan::new(q(&args.from, start)?, q(&args.to, stop)?, args.points.unwrap_or(points)))
}

fn sweep_json(program: &SequenceProgram) -> Vec<Value> {
    program
        .sweeps()
        .iter()
        .map(|w| json!({ "name": w.name, "start": w.start.si(), "stop": w.stop.si(), "points": w.points }))
        .collect()
}

fn simulate(program: &SequenceProgram, s: &Resolved, nv: &NVParameters) -> Result<SweepResult, CliError> {
    let ex = Executor::new(nv, &s.relax, &s.exec)?;
    Ok(run_sweep(program, &s.compile, &ex, &NvState::thermal())?)
}

fn snapped_count(r: &SweepResult) -> usize {
    r.points.iter().filter(|p| p.snapped != p.assignment).count()
}

fn run_settings(s: &Resolved) -> Value {
    json!({
        "seed": s.seed,
        "shots": s.exec.shots,
        "ensemble_size": s.exec.ensemble_size,
        "default_rabi_hz": s.compile.default_rabi,
    })
}

/// One row per point: sweep variables, then counts, expected counts and
/// the pre-readout m_s = 0 population of every readout.
fn sweep_table(r: &SweepResult) -> Table {
    let n_read = r.points.iter().map(|p| p.readouts.len()).max().unwrap_or(0);
    let mut cols: Vec<String> = r.variables.clone();
    for k in 0..n_read {
        let suffix = if n_read == 1 { String::new() } else { format!("_{k}") };
        cols.extend([format!("counts{suffix}"), format!("expected{suffix}"), format!("p_ms0{suffix}")]);
    }
    let mut t = Table::new(cols);
    for p in &r.points {
        let mut row: Vec<f64> = r.variables.iter().map(|v| p.snapped[v]).collect();
        for k in 0..n_read {
            match p.readouts.get(k) {
                Some(rd) => row.extend([rd.counts.mean_counts, rd.counts.expected, rd.populations[1]]),
                None => row.extend([f64::NAN; 3]),
            }
        }
        t.push(row);
    }
    t
}

fn fit_json(r: &FitResult) -> Value {
    let mut v = serde_json::to_value(r.report()).expect("report serializes");
    v["initial_residual_norm"] = json!(r.initial_residual_norm);
    v
}

fn ramsey_derived(r: &FitResult) -> Value {
    let mut f: Vec<f64> = ["f1", "f2", "f3"].iter().filter_map(|n| r.param(n)).map(f64::abs).collect();
    f.sort_by(f64::total_cmp);
    let spacings: Vec<f64> = f.windows(2).map(|w| w[1] - w[0]).collect();
    json!({ "frequencies_hz": f, "spacings_hz": spacings, "t2_star_s": r.param("T2star") })
}

/// Fit `model` and attach the report and derived quantities; a failed
/// default fit is reported in the summary rather than as an error.
fn protocol_fit(summary: &mut Value, model: FitModel, x: &[f64], y: &[f64], derive: impl Fn(&FitResult) -> Value) {
    match fit_auto(model, x, y, &FitOptions::default()) {
        Ok(r) => {
            summary["fit"] = fit_json(&r);
            summary["derived"] = derive(&r);
        }
        Err(e) => {
            summary["fit"] = Value::Null;
            summary["fit_error"] = json!(format!("analysis: {e}"));
        }
    }
}

fn protocol(
    name: &str,
    program: SequenceProgram,
    s: &Resolved,
    extra: Value,
    fit: Option<(FitModel, &dyn Fn(f64) -> f64, &dyn Fn(&FitResult) -> Value)>,
) -> Result<Document, CliError> {
    let r = simulate(&program, s, &s.nv)?;
    let var = r.variables[0].clone();
    let table = sweep_table(&r);
    let mut summary = json!({
        "protocol": name,
        "sweep": sweep_json(&program),
        "points": r.points.len(),
        "snapped_points": snapped_count(&r),
        "settings": run_settings(s),
        "parameters": extra,
        "state_check": r.check(),
        "fit": Value::Null,
    });
    if let Some((model, xmap, derive)) = fit {
        let x: Vec<f64> = r.values(&var).into_iter().map(xmap).collect();
        protocol_fit(&mut summary, model, &x, &r.signal(0), derive);
    }
    Ok(doc(name, summary, table))
}

fn odmr(a: &OdmrArgs, s: &Resolved) -> Result<Document, CliError> {
    let range = Scan::new(a.from, a.to, a.points);
    let orient = match a.orientations {
        Orientations::Single => vec![s.nv],
        Orientations::Bulk4 => bulk_parameters(&s.nv),
        Orientations::Powder => Vec::new(),
    };
    let freqs = Grid::linspace(a.from, a.to, a.points);
    if a.points < 2 || !(a.to > a.from) {
        return Err(CliError::Physics(
            crate::sequence::SequenceError::InvalidRange("need --to above --from and at least 2 points".into()).into(),
        ));
    }
    let (values, linewidth) = match a.method {
        OdmrMethod::Spectrum => {
            let sp = if a.orientations == Orientations::Powder {
                powder_spectrum(&s.nv, &freqs, a.linewidth, a.contrast, a.samples, s.seed)?
            } else {
                odmr_spectrum(&orient, &freqs, a.linewidth, a.contrast)?
            };
            (sp.values, a.linewidth)
        }
        OdmrMethod::Pulsed | OdmrMethod::Cw => {
            if a.orientations == Orientations::Powder {
                return Err(CliError::Usage("powder averaging needs --method spectrum".into()));
            }
            let (program, width) = match a.method {
                OdmrMethod::Pulsed => (protocols::pulsed_odmr(range, None)?, s.compile.default_rabi),
                _ => (protocols::cw_odmr(range)?, CW_RABI),
            };
            let mut sum = vec![0.0; a.points];
            for nv in &orient {
                let r = simulate(&program, s, nv)?;
                for (acc, v) in sum.iter_mut().zip(r.signal(0)) {
                    *acc += v / orient.len() as f64;
                }
            }
            let top = sum.iter().copied().fold(0.0, f64::max);
            let norm: Vec<f64> = sum.iter().map(|v| if top > 0.0 { v / top } else { 1.0 }).collect();
            let mut t = Table::new(["frequency_hz", "counts", "normalized"]);
            for ((f, c), n) in freqs.iter().zip(&sum).zip(&norm) {
                t.push(vec![*f, *c, *n]);
            }
            let spectrum = Spectrum { frequencies: freqs.clone(), values: norm, linewidth: width, contrast: 0.0 };
            let summary = odmr_summary(a, s, &spectrum, 0.25);
            return Ok(doc("odmr", summary, t));
        }
    };
    let mut t = Table::new(["frequency_hz", "signal"]);
    for (f, v) in freqs.iter().zip(&values) {
        t.push(vec![*f, *v]);
    }
    let spectrum = Spectrum { frequencies: freqs, values, linewidth, contrast: a.contrast };
    Ok(doc("odmr", odmr_summary(a, s, &spectrum, 0.01), t))
}

/// Dips shallower than `floor` times the deepest one are ignored (a high
/// floor keeps shot noise out of simulated spectra).
fn odmr_summary(a: &OdmrArgs, s: &Resolved, sp: &Spectrum, floor: f64) -> Value {
    let all = find_dips(sp, 0.0);
    let deepest = all.iter().map(|d| d.depth).fold(0.0, f64::max);
    let dips: Vec<_> = all.into_iter().filter(|d| d.depth >= floor * deepest).collect();
    let clusters: Vec<Value> = cluster_dips(&dips, 2.0 * sp.linewidth)
        .iter()
        .map(|c| {
            let deep = c.iter().max_by(|x, y| x.depth.total_cmp(&y.depth)).expect("non-empty cluster");
            json!({ "frequency_hz": deep.frequency, "depth": deep.depth, "minima": c.len() })
        })
        .collect();
    json!({
        "method": format!("{:?}", a.method).to_lowercase(),
        "orientations": format!("{:?}", a.orientations).to_lowercase(),
        "b_field_t": s.nv.b_field,
        "linewidth_hz": sp.linewidth,
        "points": sp.frequencies.len(),
        "resolvable_dips": if floor <= 0.01 { resolvable_dip_count(sp) } else { clusters.len() },
        "dips": clusters,
    })
}

fn rabi(a: &RabiArgs, s: &Resolved) -> Result<Document, CliError> {
    let f = match a.frequency {
        Some(f) => f,
        None => default_line(&s.nv)?,
    };
    let p = protocols::rabi(scan(&a.scan, Dimension::Time, 0.0, 1e-6, 101)?, f, None)?;
    let extra = json!({ "frequency_hz": f, "rabi_hz": s.compile.default_rabi });
    let derive = |r: &FitResult| {
        let f = r.param("f").unwrap_or(f64::NAN).abs();
        json!({ "rabi_frequency_hz": f, "pi_time_s": 0.5 / f, "decay_time_s": r.param("tau") })
    };
    let fit: Option<(FitModel, &dyn Fn(f64) -> f64, &dyn Fn(&FitResult) -> Value)> =
        (!a.scan.no_fit).then_some((FitModel::DampedSin, &|x| x, &derive));
    protocol("rabi", p, s, extra, fit)
}

fn ramsey_time(a: &RamseyTimeArgs, s: &Resolved) -> Result<Document, CliError> {
    let f = match a.frequency {
        Some(f) => f,
        None => default_line(&s.nv)? + a.detuning,
    };
    let p = protocols::ramsey_vs_time(scan(&a.scan, Dimension::Time, 0.0, 10e-6, 200)?, f, None)?;
    let extra = json!({ "frequency_hz": f, "rabi_hz": s.compile.default_rabi });
    let fit: Option<(FitModel, &dyn Fn(f64) -> f64, &dyn Fn(&FitResult) -> Value)> =
        (!a.scan.no_fit).then_some((FitModel::Ramsey3Cos, &|x| x, &ramsey_derived));
    protocol("ramsey-time", p, s, extra, fit)
}

fn ramsey_freq(a: &RamseyFreqArgs, s: &Resolved) -> Result<Document, CliError> {
    let c = default_line(&s.nv)?;
    let p = protocols::ramsey_vs_freq(scan(&a.scan, Dimension::Frequency, c - 5e6, c + 5e6, 201)?, a.tau, None)?;
    let extra = json!({ "tau_s": a.tau, "rabi_hz": s.compile.default_rabi });
    protocol("ramsey-freq", p, s, extra, None)
}

fn t1(a: &T1Args, s: &Resolved) -> Result<Document, CliError> {
    let p = protocols::t1(scan(&a.scan, Dimension::Time, 10e-6, 5e-3, 30)?)?;
    let extra = json!({ "t1_configured_s": s.relax.t1 });
    let derive = |r: &FitResult| json!({ "t1_s": r.param("T") });
    let fit: Option<(FitModel, &dyn Fn(f64) -> f64, &dyn Fn(&FitResult) -> Value)> =
        (!a.scan.no_fit).then_some((FitModel::ExpDecay, &|x| x, &derive));
    protocol("t1", p, s, extra, fit)
}

fn echo(a: &EchoArgs, s: &Resolved) -> Result<Document, CliError> {
    let f = match a.frequency {
        Some(f) => f,
        None => default_line(&s.nv)?,
    };
    let p = protocols::hahn_echo(scan(&a.scan, Dimension::Time, 1e-6, 100e-6, 20)?, f, None)?;
    let extra =
        json!({ "frequency_hz": f, "rabi_hz": s.compile.default_rabi, "t2_echo_configured_s": s.relax.t2_echo });
    // The envelope is a function of the total free time 2τ.
    let derive = |r: &FitResult| json!({ "t2_echo_s": r.param("T") });
    let fit: Option<(FitModel, &dyn Fn(f64) -> f64, &dyn Fn(&FitResult) -> Value)> =
        (!a.scan.no_fit).then_some((FitModel::ExpDecay, &|x| 2.0 * x, &derive));
    protocol("echo", p, s, extra, fit)
}

fn run(a: &RunArgs, s: &Resolved) -> Result<Document, CliError> {
    let text = std::fs::read_to_string(&a.file)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", a.file.display())))?;
    let extra = a
        .sweep
        .iter()
        .map(|w| parse_sweep(w).map_err(|e| CliError::Usage(format!("--sweep {w}: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let model = a
        .fit
        .as_deref()
        .map(|m| FitModel::from_str(m).map_err(|e| CliError::Usage(format!("--fit {m}: {e}"))))
        .transpose()?;
    let program = parse_with_sweeps(&text, &extra)?;
    let r = if program.sweeps().is_empty() {
        let ex = Executor::new(&s.nv, &s.relax, &s.exec)?;
        let timeline = compile(&program, &Assignment::new(), &s.compile)?;
        let res = ex.run(&timeline, &NvState::thermal(), s.seed)?;
        SweepResult {
            variables: Vec::new(),
            points: vec![crate::sequence::SweepPoint {
                index: 0,
                assignment: Assignment::new(),
                snapped: Assignment::new(),
                readouts: res.readouts,
                check: res.check,
            }],
        }
    } else {
        simulate(&program, s, &s.nv)?
    };
    let table = sweep_table(&r);
    let mut summary = json!({
        "file": a.file.display().to_string(),
        "sweep": sweep_json(&program),
        "points": r.points.len(),
        "readouts_per_point": r.points.first().map(|p| p.readouts.len()).unwrap_or(0),
        "snapped_points": snapped_count(&r),
        "settings": run_settings(s),
        "state_check": r.check(),
        "fit": Value::Null,
    });
    if let Some(model) = model {
        if r.variables.len() != 1 {
            return Err(CliError::Usage(format!(
                "--fit needs exactly one sweep, the program has {}",
                r.variables.len()
            )));
        }
        let x = r.values(&r.variables[0]);
        let y = r.signal(a.readout);
        if y.iter().any(|v| v.is_nan()) {
            return Err(CliError::Usage(format!("readout {} does not exist", a.readout)));
        }
        let fr = fit_auto(model, &x, &y, &FitOptions::default())?;
        summary["fit"] = fit_json(&fr);
        if model == FitModel::Ramsey3Cos {
            summary["derived"] = ramsey_derived(&fr);
        }
    }
    Ok(doc("run", summary, table))
}

fn sgi(a: &SgiArgs) -> Result<Document, CliError> {
    let nd = nd_from_atoms(a.atoms)?;
    let profile = GradientProfile::symmetric(a.duration, a.gradient);
    let opts = SgiOptions { t2: a.t2, exponent: a.exponent, samples_per_segment: a.samples };
    let r = simulate_interferometer(&nd, &profile, a.arms, &opts)?;
    let [arm_a, arm_b] = &r.arms;
    let mut t = Table::new(["t_s", "z_a_m", "v_a_m_s", "z_b_m", "v_b_m_s", "dz_m"]);
    for i in 0..arm_a.times.len() {
        t.push(vec![arm_a.times[i], arm_a.z[i], arm_a.v[i], arm_b.z[i], arm_b.v[i], arm_a.z[i] - arm_b.z[i]]);
    }
    let summary = json!({
        "nd": r.nd,
        "arms": [a.arms.0, a.arms.1],
        "gradient_t_per_m": a.gradient,
        "duration_s": a.duration,
        "acceleration_m_s2": [spin_acceleration(&nd, a.gradient, a.arms.0), spin_acceleration(&nd, a.gradient, a.arms.1)],
        "profile": profile.segments,
        "max_splitting_m": r.max_splitting,
        "max_speed_m_s": r.max_speed,
        "closure": r.closure,
        "contrast": r.contrast,
        "t2_s": a.t2,
    });
    Ok(doc("sgi", summary, t))
}

fn resonator(a: &ResonatorArgs) -> Result<Document, CliError> {
    let c = a.capacitance.unwrap_or_else(|| capacitance_for(a.frequency, a.inductance));
    let r = a.resistance.unwrap_or_else(|| resistance_for_bandwidth(a.inductance, c, a.bandwidth));
    let design = RLCDesign { inductance: a.inductance, capacitance: c, series_resistance: r, drive_power: a.power };
    let f0 = resonant_frequency(&design)?;
    let q = bandwidth_and_q(&design)?;
    let z_t = quarter_wave_match(a.z_source, a.z_load)?;
    let network = MatchNetwork::quarter_wave(a.z_source, a.z_load)?;

    let geometry = match &a.geometry_file {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str::<Geometry>(&text)
                .map_err(|e| CliError::Usage(format!("malformed geometry {}: {e}", p.display())))?
        }
        None => match a.geometry {
            GeometryKind::Loop => Geometry::circular_loop(a.radius),
            GeometryKind::SplitRing => Geometry::split_ring(a.radius, a.gap, a.feed, 400),
        },
    };
    let extent = a.extent.unwrap_or(0.5 * a.radius);
    let grid = Grid::plane_xy(extent, a.grid, a.height);
    let fo = FieldOptions { segments: a.segments, ..FieldOptions::default() };
    let map = loop_field_map(&geometry, 1.0, &grid, &fo)?;
    let region = Region::centered_square(a.region.unwrap_or(0.2 * a.radius), a.height);
    let drive = (!q.infinite).then_some(Drive { power: a.power, resistance: r, q: q.q });
    let metrics = field_metrics(&map, &region, drive.as_ref())?;

    let mut t = Table::new(["x_m", "y_m", "z_m", "bx_t", "by_t", "bz_t"]);
    for ((p, b), sing) in map.points.iter().zip(&map.field).zip(&map.singular) {
        if !sing {
            t.push(vec![p[0], p[1], p[2], b[0], b[1], b[2]]);
        }
    }
    let summary = json!({
        "design": {
            "inductance_h": a.inductance,
            "capacitance_f": c,
            "series_resistance_ohm": r,
            "drive_power_w": a.power,
            "resonant_frequency_hz": f0,
            "q": if q.infinite { Value::Null } else { json!(q.q) },
            "infinite_q": q.infinite,
            "bandwidth_hz": q.bandwidth,
            "loop_current_a": design.loop_current(),
        },
        "matching": {
            "z_source_ohm": a.z_source,
            "z_load_ohm": a.z_load,
            "z_transformer_ohm": z_t,
            "reflection": network.reflection()?,
            "balun_output_ohm": balun_output(50.0),
        },
        "field": {
            "geometry": map.geometry,
            "nominal_current_a": map.current,
            "singular_points": map.singular_count(),
            "region": region,
            "metrics": metrics,
        },
    });
    Ok(doc("resonator", summary, t))
}

fn read_columns(text: &str, cx: usize, cy: usize) -> (Vec<f64>, Vec<f64>) {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|c| !c.is_empty()).collect();
        let get = |i: usize| cells.get(i).and_then(|c| c.parse::<f64>().ok());
        if let (Some(a), Some(b)) = (get(cx), get(cy)) {
            x.push(a);
            y.push(b);
        }
    }
    (x, y)
}

fn fit_file(a: &FitArgs) -> Result<Document, CliError> {
    let model = FitModel::from_str(&a.model).map_err(|e| CliError::Usage(format!("model {}: {e}", a.model)))?;
    let cols: Vec<usize> = a
        .columns
        .split(',')
        .map(|c| c.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--columns {}: expected two indices", a.columns)))?;
    let [cx, cy] = <[usize; 2]>::try_from(cols)
        .map_err(|_| CliError::Usage(format!("--columns {}: expected two indices", a.columns)))?;
    let text = std::fs::read_to_string(&a.datafile)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", a.datafile.display())))?;
    let (x, y) = read_columns(&text, cx, cy);
    let opts = FitOptions {
        weighting: if a.poisson { Weighting::Poisson } else { Weighting::Uniform },
        ..FitOptions::default()
    };
    let r = fit_auto(model, &x, &y, &opts)?;
    let mut t = Table::new(["x", "y", "fit", "residual"]);
    for (xi, yi) in x.iter().zip(&y) {
        let m = r.eval(*xi);
        t.push(vec![*xi, *yi, m, yi - m]);
    }
    let mut summary = json!({
        "datafile": a.datafile.display().to_string(),
        "points": x.len(),
        "fit": fit_json(&r),
    });
    if model == FitModel::Ramsey3Cos {
        summary["derived"] = ramsey_derived(&r);
    }
    Ok(doc("fit", summary, t))
}

/// Machine-readable description of a subcommand's output.
pub(super) fn schema(command: &Command) -> Value {
    let check = json!({
        "checkpoints": "integer",
        "max_trace_error": "number",
        "max_hermiticity_error": "number",
        "min_eigenvalue": "number",
        "max_population_error": "number",
    });
    let fit = json!({
        "schema_version": "integer",
        "model": "string",
        "parameters": [{ "name": "string", "value": "number", "uncertainty": "number" }],
        "residual_norm": "number",
        "initial_residual_norm": "number",
        "converged": "boolean",
        "iterations": "integer",
    });
    let protocol = |name: &str, var: &str, derived: Value| {
        json!({
            "command": name,
            "csv_columns": [var, "counts", "expected", "p_ms0"],
            "summary": {
                "protocol": "string",
                "sweep": [{ "name": "string", "start": "number", "stop": "number", "points": "integer" }],
                "points": "integer",
                "snapped_points": "integer",
                "settings": { "seed": "integer", "shots": "integer", "ensemble_size": "number", "default_rabi_hz": "number" },
                "parameters": "object",
                "state_check": check,
                "fit": fit,
                "fit_error": "string (only when the fit failed)",
                "derived": derived,
            },
        })
    };
    let body = match command {
        Command::Odmr(_) => json!({
            "command": "odmr",
            "csv_columns": ["frequency_hz", "signal"],
            "csv_columns_simulated": ["frequency_hz", "counts", "normalized"],
            "summary": {
                "method": "spectrum | pulsed | cw",
                "orientations": "single | bulk4 | powder",
                "b_field_t": ["number", "number", "number"],
                "linewidth_hz": "number",
                "points": "integer",
                "resolvable_dips": "integer",
                "dips": [{ "frequency_hz": "number", "depth": "number", "minima": "integer" }],
            },
        }),
        Command::Rabi(_) => protocol(
            "rabi",
            "t",
            json!({ "rabi_frequency_hz": "number", "pi_time_s": "number", "decay_time_s": "number" }),
        ),
        Command::RamseyTime(_) => protocol(
            "ramsey-time",
            "tau",
            json!({ "frequencies_hz": ["number"], "spacings_hz": ["number"], "t2_star_s": "number" }),
        ),
        Command::RamseyFreq(_) => protocol("ramsey-freq", "f", Value::Null),
        Command::T1(_) => protocol("t1", "tau", json!({ "t1_s": "number" })),
        Command::Echo(_) => protocol("echo", "tau", json!({ "t2_echo_s": "number" })),
        Command::Run(_) => json!({
            "command": "run",
            "csv_columns": "<sweep variables...>, then counts[_k], expected[_k], p_ms0[_k] per readout k",
            "summary": {
                "file": "string",
                "sweep": [{ "name": "string", "start": "number", "stop": "number", "points": "integer" }],
                "points": "integer",
                "readouts_per_point": "integer",
                "snapped_points": "integer",
                "settings": "object",
                "state_check": check,
                "fit": fit,
                "derived": "object (ramsey_3cos only)",
            },
        }),
        Command::Sgi(_) => json!({
            "command": "sgi",
            "csv_columns": ["t_s", "z_a_m", "v_a_m_s", "z_b_m", "v_b_m_s", "dz_m"],
            "summary": {
                "nd": { "n_atoms": "number", "mass": "number", "cube_edge": "number", "sphere_diameter": "number" },
                "arms": ["integer", "integer"],
                "gradient_t_per_m": "number",
                "duration_s": "number",
                "acceleration_m_s2": ["number", "number"],
                "profile": [{ "duration": "number", "gradient": "number" }],
                "max_splitting_m": "number",
                "max_speed_m_s": "number",
                "closure": { "dz_final": "number", "dv_final": "number" },
                "contrast": "number",
                "t2_s": "number",
            },
        }),
        Command::Resonator(_) => json!({
            "command": "resonator",
            "csv_columns": ["x_m", "y_m", "z_m", "bx_t", "by_t", "bz_t"],
            "summary": {
                "design": {
                    "inductance_h": "number", "capacitance_f": "number", "series_resistance_ohm": "number",
                    "drive_power_w": "number", "resonant_frequency_hz": "number", "q": "number | null",
                    "infinite_q": "boolean", "bandwidth_hz": "number", "loop_current_a": "number | null",
                },
                "matching": {
                    "z_source_ohm": "number", "z_load_ohm": "number", "z_transformer_ohm": "number",
                    "reflection": "number", "balun_output_ohm": "number",
                },
                "field": {
                    "geometry": "string", "nominal_current_a": "number", "singular_points": "integer",
                    "region": { "min": ["number"], "max": ["number"] },
                    "metrics": {
                        "mean_b": "number", "min_b": "number", "max_b": "number", "uniformity_percent": "number",
                        "points": "integer", "driven_mean_b": "number | null", "gauss_per_sqrt_watt": "number | null",
                    },
                },
            },
        }),
        Command::Fit(_) => json!({
            "command": "fit",
            "csv_columns": ["x", "y", "fit", "residual"],
            "summary": { "datafile": "string", "points": "integer", "fit": fit, "derived": "object (ramsey_3cos only)" },
        }),
    };
    json!({
        "schema_version": SCHEMA_VERSION,
        "formats": {
            "csv": "data table on the output; summary JSON in <output>.summary.json (stderr without --output)",
            "json": "{ schema_version, command, summary, data: { columns, rows } }",
        },
        "numbers": "scientific notation, shortest representation that round-trips",
        "output": body,
    })
}
