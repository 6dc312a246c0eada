//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nvsim::analysis::{fit, fit_auto, initial_guess, FitModel, FitOptions};
use nvsim::constants::MU_0;
use nvsim::dynamics::{
    optical_cycle, rabi_population, DensityMatrix, DriveMode, DrivePulse, NvState, OpticalPopulations, OpticalRates,
    RelaxationParams, SpinEvolver,
};
use nvsim::hamiltonian::{
    bulk_parameters, find_dips, odmr_spectrum, powder_spectrum, resolvable_dip_count, transitions_for, NVParameters,
};
use nvsim::resonator::{
    bandwidth_and_q, biot_savart, capacitance_for, quarter_wave_match, resistance_for_bandwidth, resonant_frequency,
    Geometry, Grid, RLCDesign,
};
use nvsim::sequence::protocols::{rabi, ramsey_vs_time, t1, Scan};
use nvsim::sequence::{compile, execute, parse, run_sweep, Assignment, CompileOptions, ExecOptions, Executor};
use nvsim::sgi::{nd_from_atoms, simulate_interferometer, GradientProfile, SgiOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn line_0_to_minus1(nv: &NVParameters) -> f64 {
    transitions_for(nv)
        .unwrap()
        .lines
        .iter()
        .find(|t| t.lower.ms == 0 && t.upper.ms == -1 && t.lower.mi == 0)
        .map(|t| t.frequency)
        .expect("m_s 0 -> -1 line")
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn hyperfine_triplet() -> Outcome {
    let start = Instant::now();
    let nv = NVParameters::default().with_field([0.0, 0.0, 1e-3]);
    let program = ramsey_vs_time(Scan::new(0.0, 10e-6, 200), line_0_to_minus1(&nv) - 3e6, Some(25e6)).unwrap();
    let opts =
        ExecOptions { shots: 10_000, ensemble_size: 1000.0, seed: 1, keep_samples: false, ..ExecOptions::default() };
    let ex = Executor::new(&nv, &RelaxationParams::default(), &opts).unwrap();
    let r = run_sweep(&program, &CompileOptions::default(), &ex, &NvState::thermal()).unwrap();
    let f = fit_auto(FitModel::Ramsey3Cos, &r.values("tau"), &r.signal(0), &FitOptions::default()).unwrap();
    let tones = sorted(["f1", "f2", "f3"].iter().map(|n| f.param(n).unwrap().abs()).collect());
    let spacings = [tones[1] - tones[0], tones[2] - tones[1]];
    let secs = start.elapsed().as_secs_f64();
    let ok = spacings.iter().all(|s| (s - 2.16e6).abs() <= 0.10e6) && secs < 60.0;
    ensure(
        ok,
        format!("spacings {:.4} / {:.4} MHz (2.16 ± 0.10), {secs:.1} s (< 60)", spacings[0] / 1e6, spacings[1] / 1e6),
    )
}

fn odmr_degeneracy() -> Outcome {
    let freqs = Grid::linspace(2.80e9, 2.94e9, 2801);
    let b = 1e-3;
    let count = |field: [f64; 3]| {
        let base = NVParameters::default().without_hyperfine().with_field(field);
        resolvable_dip_count(&odmr_spectrum(&bulk_parameters(&base), &freqs, 1e6, 0.1).unwrap())
    };
    let along = count([b, 0.0, 0.0]);
    let generic = count([1.0, 2.0, 4.0].map(|c: f64| c / 21f64.sqrt() * b));
    ensure(along == 2 && generic == 8, format!("[100]: {along} clusters (2), generic: {generic} dips (8)"))
}

fn strain_doublet() -> Outcome {
    let nv = NVParameters::default().without_hyperfine().with_strain(5e6);
    let freqs = Grid::linspace(2.855e9, 2.885e9, 3001);
    let expect = [nv.d_gs - 5e6, nv.d_gs + 5e6];
    let mut detail = Vec::new();
    let mut ok = true;
    for (name, s) in [
        ("aligned", odmr_spectrum(&[nv], &freqs, 1e6, 0.1).unwrap()),
        ("powder", powder_spectrum(&nv, &freqs, 1e6, 0.1, 10_000, 7).unwrap()),
    ] {
        let dips = find_dips(&s, 1e-3);
        let err = if dips.len() == 2 {
            dips.iter().zip(&expect).map(|(d, e)| (d.frequency - e).abs()).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        ok &= dips.len() == 2 && err <= 10e3;
        detail.push(format!("{name}: {} dips, max offset {:.2} kHz", dips.len(), err / 1e3));
    }
    ensure(ok, format!("{} (2 dips within 10 kHz)", detail.join("; ")))
}

fn six_lorentzians() -> Outcome {
    let nv = NVParameters::default().with_field([0.0, 0.0, 5e-4]);
    let f = Grid::linspace(2.845e9, 2.895e9, 2001);
    let clean = odmr_spectrum(&[nv], &f, 0.5e6, 0.1).unwrap();
    let (lo, hi) = clean.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let range = hi - lo;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 0.005 * range).unwrap();
    let y: Vec<f64> = clean.values.iter().map(|v| v + noise.sample(&mut rng)).collect();
    let r = fit_auto(FitModel::LorentzianMulti(6), &f, &y, &FitOptions::default()).unwrap();
    let c = sorted((1..=6).map(|i| r.param(&format!("center{i}")).unwrap()).collect());
    let spacings = [c[1] - c[0], c[2] - c[1], c[4] - c[3], c[5] - c[4]];
    let gap = c[3] - c[2];
    let rms = r.residual_norm / (f.len() as f64).sqrt();
    let ok = spacings.iter().all(|s| (s - 2.16e6).abs() <= 0.10e6) && gap > 5e6 && rms < 0.01 * range;
    ensure(
        ok,
        format!(
            "intra-triplet spacings {} MHz (2.16 ± 0.10), triplet gap {:.2} MHz, rms residual {:.2} % of range (< 1)",
            spacings.iter().map(|s| format!("{:.4}", s / 1e6)).collect::<Vec<_>>().join(" / "),
            gap / 1e6,
            100.0 * rms / range
        ),
    )
}

fn sgi_headline() -> Outcome {
    let start = Instant::now();
    let nd = nd_from_atoms(1e7).unwrap();
    let r =
        simulate_interferometer(&nd, &GradientProfile::symmetric(40e-6, 1e5), (0, 1), &SgiOptions::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let s = r.max_splitting;
    let dz = r.closure.dz_final.abs() / s;
    let dv = r.closure.dv_final.abs() / r.max_speed;
    let ok = (0.8e-9..=1.1e-9).contains(&s) && (0.1e-9..=10e-9).contains(&s) && dz < 1e-15 && dv < 1e-15 && secs < 1.0;
    ensure(
        ok,
        format!(
            "max splitting {:.4} nm ([0.8, 1.1]), closure {dz:.1e} / {dv:.1e} (< 1e-15), {secs:.3} s (< 1)",
            s * 1e9
        ),
    )
}

fn rabi_fidelity() -> Outcome {
    let nv = NVParameters::default().with_field([0.0, 0.0, 0.03]).without_hyperfine();
    let line = transitions_for(&nv)
        .unwrap()
        .lines
        .iter()
        .find(|t| t.lower.ms == 0 && t.upper.ms == -1)
        .map(|t| t.frequency)
        .unwrap();
    let omega = 5e6;
    let evolver = SpinEvolver::new(&nv).unwrap();
    let rho0 = DensityMatrix::electron_state(0);
    let mut worst = 0.0f64;
    for k in 0..=400 {
        let t = k as f64 * (10.0 / omega) / 400.0;
        let rho = evolver.drive(&rho0, &DrivePulse::new(line, omega, t), DriveMode::Rwa, 0.0).unwrap();
        worst = worst.max((rho.electron_populations()[2] - rabi_population(omega, 0.0, t)).abs());
    }

    let program = rabi(Scan::new(0.0, 1e-6, 101), line, Some(omega)).unwrap();
    let opts =
        ExecOptions { shots: 10_000, ensemble_size: 1000.0, seed: 5, keep_samples: false, ..ExecOptions::default() };
    let ex = Executor::new(&nv, &RelaxationParams::default(), &opts).unwrap();
    let r = run_sweep(&program, &CompileOptions::default(), &ex, &NvState::thermal()).unwrap();
    let fitted = fit_auto(FitModel::DampedSin, &r.values("t"), &r.signal(0), &FitOptions::default()).unwrap();
    let f = fitted.param("f").unwrap().abs();
    let err = (f - omega).abs() / omega;
    ensure(
        worst < 1e-4 && err < 0.01,
        format!(
            "max |P - P_exact| {worst:.2e} (< 1e-4), fitted Rabi {:.4} MHz, error {:.2} % (< 1)",
            f / 1e6,
            err * 100.0
        ),
    )
}

fn t1_protocol() -> Outcome {
    let relax = RelaxationParams { t1: 1e-3, ..RelaxationParams::default() };
    let opts =
        ExecOptions { shots: 10_000, ensemble_size: 1000.0, seed: 11, keep_samples: false, ..ExecOptions::default() };
    let ex = Executor::new(&NVParameters::default(), &relax, &opts).unwrap();
    let program = t1(Scan::new(10e-6, 5e-3, 30)).unwrap();
    let r = run_sweep(&program, &CompileOptions::default(), &ex, &NvState::thermal()).unwrap();
    let f = fit_auto(FitModel::ExpDecay, &r.values("tau"), &r.signal(0), &FitOptions::default()).unwrap();
    let t = f.param("T").unwrap();
    let err = (t - 1e-3).abs() / 1e-3;
    ensure(err < 0.03, format!("fitted T1 {:.4} ms, error {:.2} % (< 3)", t * 1e3, err * 100.0))
}

fn readout_transient() -> Outcome {
    let rates = OpticalRates::default();
    let (_, dark) = optical_cycle(&OpticalPopulations::ground_ms(1), &rates, 5e-6, 0.5e-9).unwrap();
    let (_, bright) = optical_cycle(&OpticalPopulations::ground_ms(0), &rates, 5e-6, 0.5e-9).unwrap();
    let v = &dark.values;
    // Recovery starts at the PL minimum that follows the first peak.
    let peak = (1..v.len() - 1).find(|&k| v[k] >= v[k - 1] && v[k] > v[k + 1]).unwrap();
    let dip = (peak..v.len() - 1).find(|&k| v[k] <= v[k + 1]).unwrap();
    let x: Vec<f64> = dark.times[dip..].iter().map(|t| t - dark.times[dip]).collect();
    let y = &v[dip..];
    let init = initial_guess(FitModel::ExpDecay, &x, y).unwrap();
    let f = fit(FitModel::ExpDecay, &x, y, &init, &FitOptions::default()).unwrap();
    let tau = f.param("T").unwrap();
    let singlet = 1.0 / rates.singlet_rate;
    let err = (tau - singlet).abs() / singlet;
    let window = 300e-9;
    let (b, d) = (bright.integrate(0.0, window), dark.integrate(0.0, window));
    let steady = *bright.values.last().unwrap();
    let ok = err < 0.2 && steady * window > d && b > d;
    ensure(
        ok,
        format!(
            "recovery τ {:.1} ns vs singlet {:.0} ns ({:.1} % < 20), contrast {:.1} % (bright steady {:.4} vs dark window {:.4} photons)",
            tau * 1e9,
            singlet * 1e9,
            err * 100.0,
            100.0 * (b - d) / b,
            steady * window,
            d
        ),
    )
}

fn state_validity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let o = CompileOptions::default();
    let (mut tr, mut he, mut mn, mut pop, mut checkpoints) = (0.0f64, 0.0f64, f64::INFINITY, 0.0f64, 0usize);
    let runs = 1000;
    for k in 0..runs {
        let nv = common::random_nv(&mut rng);
        let relax = common::random_relaxation(&mut rng);
        let prog = parse(&common::random_program_text(&mut rng)).unwrap();
        let timeline = compile(&prog, &Assignment::new(), &o).unwrap();
        let opts = ExecOptions { shots: 10, seed: k, ..ExecOptions::default() };
        let c = execute(&timeline, &NvState::polarized(), &nv, &relax, &opts).unwrap().check;
        tr = tr.max(c.max_trace_error);
        he = he.max(c.max_hermiticity_error);
        mn = mn.min(c.min_eigenvalue);
        pop = pop.max(c.max_population_error);
        checkpoints += c.checkpoints;
    }
    ensure(
        tr < 1e-9 && he < 1e-10 && mn > -1e-9 && pop < 1e-9,
        format!(
            "{runs} runs, {checkpoints} checkpoints: trace {tr:.1e} (< 1e-9), hermiticity {he:.1e} (< 1e-10), min eigenvalue {mn:.1e} (> -1e-9), occupation {pop:.1e} (< 1e-9)"
        ),
    )
}

fn resonator_formulas() -> Outcome {
    let (f0, l, bw) = (2.87e9, 1e-9, 270e6);
    let c = capacitance_for(f0, l);
    let r = resistance_for_bandwidth(l, c, bw);
    let d = RLCDesign { inductance: l, capacitance: c, series_resistance: r, drive_power: 1.0 };
    let f = resonant_frequency(&d).unwrap();
    let round = (f - f0).abs() / f0;
    let q = bandwidth_and_q(&d).unwrap();
    let identity = q.bandwidth == f / q.q;
    let bw_err = (q.bandwidth - bw).abs() / bw;
    let z = quarter_wave_match(100.0, 650.0).unwrap();
    let z_err = (z - 65_000f64.sqrt()).abs();
    let (a, i) = (1e-3, 1.0);
    let b = biot_savart(&Geometry::circular_loop(a), i, [0.0; 3], 10_000).unwrap()[2];
    let b_err = (b - MU_0 * i / (2.0 * a)).abs() / (MU_0 * i / (2.0 * a));
    ensure(
        round < 1e-12 && identity && bw_err < 1e-12 && z_err < 1e-9 && format!("{z:.2}") == "254.95" && b_err < 1e-3,
        format!(
            "f0 round trip {round:.1e}, bandwidth = f0/Q {identity}, Q {:.3}, R {:.4} Ω, Z {z:.2} Ω (±{z_err:.0e}), loop center error {:.4} %",
            q.q,
            r,
            b_err * 100.0
        ),
    )
}

fn parser_corpus() -> Outcome {
    let (valid, bad_valid) = common::check_valid();
    let (invalid, bad_invalid) = common::check_invalid();
    let (twins, bad_twins) = common::check_twins();
    let failures: Vec<String> = bad_valid.into_iter().chain(bad_invalid).chain(bad_twins).collect();
    ensure(
        valid >= 20 && invalid >= 10 && twins == 7 && failures.is_empty(),
        format!("{valid} valid (≥ 20), {invalid} invalid (≥ 10), {twins} generator twins; failures {failures:?}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("hyperfine triplet", hyperfine_triplet),
        ("ODMR degeneracy", odmr_degeneracy),
        ("zero-field strain doublet", strain_doublet),
        ("six-Lorentzian fit", six_lorentzians),
        ("SGI headline", sgi_headline),
        ("Rabi fidelity", rabi_fidelity),
        ("T1 protocol", t1_protocol),
        ("readout transient", readout_transient),
        ("state validity", state_validity),
        ("resonator formulas", resonator_formulas),
        ("parser corpus", parser_corpus),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS {:>2} {name}: {d} [{secs:.1} s]", k + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d} [{secs:.1} s]", k + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
