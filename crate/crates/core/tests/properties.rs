mod common;

use nvsim::analysis::{fit, numeric_jacobian, FitModel, FitOptions};
use nvsim::cli::output::Table;
use nvsim::constants::{BOHR_MAGNETON, PLANCK};
use nvsim::dynamics::NvState;
use nvsim::dynamics::{
    apply_decoherence, apply_mw_pulse, evolve_unitary, optical_cycle, readout_counts, DensityMatrix, DriveMode,
    DrivePulse, OpticalPopulations, OpticalRates, RelaxationParams,
};
use nvsim::hamiltonian::{build_hamiltonian, bulk_parameters, odmr_spectrum, transitions_for, NVParameters};
use nvsim::resonator::{
    bandwidth_and_q, biot_savart, capacitance_for, loop_field_map, quarter_wave_match, resistance_for_bandwidth,
    resonant_frequency, FieldOptions, Geometry, Grid, RLCDesign,
};
use nvsim::sequence::{compile, execute, parse, Assignment, CompileOptions, ExecOptions};
use nvsim::sgi::{nd_from_atoms, simulate_interferometer, GradientProfile, SgiOptions};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `PROPTEST_CASES` overrides the per-test case count.
fn cfg(cases: u32) -> ProptestConfig {
    let cases = std::env::var("PROPTEST_CASES").ok().and_then(|v| v.parse().ok()).unwrap_or(cases);
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

fn unit_vec() -> impl Strategy<Value = [f64; 3]> {
    (-1.0f64..1.0, 0.0..std::f64::consts::TAU).prop_map(|(z, phi)| {
        let r = (1.0 - z * z).sqrt();
        [r * phi.cos(), r * phi.sin(), z]
    })
}

fn nv_params() -> impl Strategy<Value = NVParameters> {
    (0.0f64..2e-2, unit_vec(), 0.0f64..1e7, unit_vec(), any::<bool>()).prop_map(|(b, dir, e, axis, hf)| {
        let p = NVParameters::default().with_field([b * dir[0], b * dir[1], b * dir[2]]).with_strain(e).with_axis(axis);
        if hf {
            p
        } else {
            p.without_hyperfine()
        }
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #![proptest_config(cfg(64))]

    #[test]
    fn hamiltonian_is_hermitian(p in nv_params()) {
        let h = build_hamiltonian(&p).unwrap();
        prop_assert!(h.hermiticity_error() < 1e-12 * h.matrix().norm().max(1.0));
        prop_assert!(h.hermiticity_error() < 1e-12);
    }

    #[test]
    fn trace_ignores_field_direction(b in 0.0f64..2e-2, d1 in unit_vec(), d2 in unit_vec(), e in 0.0f64..1e7) {
        let base = NVParameters::default().with_strain(e);
        let t1 = build_hamiltonian(&base.with_field(d1.map(|c| b * c))).unwrap().trace();
        let t2 = build_hamiltonian(&base.with_field(d2.map(|c| b * c))).unwrap().trace();
        prop_assert!((t1 - t2).abs() <= 1e-9 * t1.abs().max(1.0), "{t1} {t2}");
    }

    #[test]
    fn aligned_zeeman_is_linear(b in 1e-5f64..5e-2, axis in unit_vec()) {
        let p = NVParameters::default().without_hyperfine().with_strain(0.0).with_axis(axis).with_field(axis.map(|c| b * c));
        let f = sorted(transitions_for(&p).unwrap().lines.iter().filter(|t| t.amplitude > 1e-6).map(|t| t.frequency).collect());
        let shift = p.g_s * BOHR_MAGNETON * b / PLANCK;
        let (lo, hi) = ((p.d_gs - shift).abs(), p.d_gs + shift);
        prop_assert!(f.iter().any(|x| rel(*x, lo) < 1e-9), "{f:?} vs {lo}");
        prop_assert!(f.iter().any(|x| rel(*x, hi) < 1e-9), "{f:?} vs {hi}");
    }

    #[test]
    fn hundred_field_degenerate_over_axes(b in 1e-4f64..2e-2, perm in Just([0usize, 1, 2, 3]).prop_shuffle()) {
        let base = NVParameters::default().with_strain(0.0).with_field([b, 0.0, 0.0]);
        let all = bulk_parameters(&base);
        let lines = |k: usize| sorted(transitions_for(&all[k]).unwrap().frequencies());
        let reference = lines(0);
        for k in perm {
            for (a, r) in lines(k).iter().zip(&reference) {
                prop_assert!(rel(*a, *r) < 1e-6);
            }
        }
    }

    #[test]
    fn spectrum_is_unity_far_from_lines(p in nv_params()) {
        let lw = 1e6;
        let s = odmr_spectrum(&[p], &[1e8, 1e12], lw, 0.1).unwrap();
        for v in s.values {
            prop_assert!((v - 1.0).abs() < 1e-3, "{v}");
        }
    }

    #[test]
    fn random_pulses_keep_the_state_valid(
        p in nv_params(),
        pulses in prop::collection::vec((2.7e9f64..3.0e9, 0.0f64..3e7, 0.0f64..5e-7, 0.0f64..std::f64::consts::TAU, 0.0f64..2e-6), 1..6),
        full in any::<bool>(),
    ) {
        let relax = RelaxationParams::default();
        let mut rho = DensityMatrix::electron_state(0);
        let purity0 = rho.purity();
        for (f, rabi, t, phase, dark) in pulses {
            let mode = if full && t < 5e-8 { DriveMode::full() } else { DriveMode::Rwa };
            rho = apply_mw_pulse(&rho, &DrivePulse::new(f, rabi, t).with_phase(phase), &p, mode).unwrap();
            let before = rho.purity();
            rho = apply_decoherence(&rho, dark, &relax).unwrap();
            prop_assert!(rho.purity() <= before + 1e-12);
            prop_assert!(rho.trace_error() < 1e-9);
            prop_assert!(rho.hermiticity_error() < 1e-10);
            prop_assert!(rho.min_eigenvalue() > -1e-9);
        }
        prop_assert!(rho.purity() <= purity0 + 1e-9);
    }

    #[test]
    fn free_evolution_preserves_purity(p in nv_params(), t in 0.0f64..1e-5, ms in -1i8..=1) {
        let h = build_hamiltonian(&p).unwrap();
        let rho = DensityMatrix::electron_state(ms);
        let out = evolve_unitary(&rho, &h, t).unwrap();
        prop_assert!((out.purity() - rho.purity()).abs() < 1e-9);
    }

    #[test]
    fn decoherence_composes(t1 in 0.0f64..5e-6, t2 in 0.0f64..5e-6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let relax = common::random_relaxation(&mut rng);
        let p = NVParameters::default();
        let rho = apply_mw_pulse(&DensityMatrix::electron_state(0), &DrivePulse::new(p.d_gs, 5e6, 37e-9), &p, DriveMode::Rwa).unwrap();
        let a = apply_decoherence(&apply_decoherence(&rho, t1, &relax).unwrap(), t2, &relax).unwrap();
        let b = apply_decoherence(&rho, t1 + t2, &relax).unwrap();
        prop_assert!((a.matrix() - b.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12);
    }

    #[test]
    fn rate_equations_conserve_occupation(start in 0usize..7, duration in 1e-9f64..3e-6, seed in any::<u64>()) {
        let mut occ = [0.0; 7];
        occ[start] = 0.7;
        occ[(start + 1 + (seed % 6) as usize) % 7] += 0.3;
        let (out, trace) = optical_cycle(&OpticalPopulations(occ), &OpticalRates::default(), duration, 0.5e-9).unwrap();
        prop_assert!((out.sum() - 1.0).abs() < 1e-9);
        prop_assert!(out.0.iter().all(|v| *v >= -1e-12));
        prop_assert!(trace.values.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn seeded_counts_are_identical(seed in any::<u64>(), shots in 1usize..200) {
        let (_, trace) = optical_cycle(&OpticalPopulations::ground_ms(0), &OpticalRates::default(), 3e-7, 0.5e-9).unwrap();
        let a = readout_counts(&trace, (0.0, 3e-7), shots, seed).unwrap();
        let b = readout_counts(&trace, (0.0, 3e-7), shots, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}

fn random_model_point(model: FitModel, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    use rand::Rng;
    match model {
        FitModel::LorentzianMulti(n) => {
            let mut p = vec![rng.random_range(0.9..1.1)];
            for _ in 0..n {
                p.extend([rng.random_range(2.85e9..2.89e9), rng.random_range(5e5..3e6), rng.random_range(0.01..0.1)]);
            }
            (p, (0..200).map(|i| 2.84e9 + 6e7 * i as f64 / 199.0).collect())
        }
        FitModel::Ramsey3Cos => {
            let mut p = vec![rng.random_range(0.5..1.5), rng.random_range(0.1..1.0), rng.random_range(5e-7..5e-6)];
            p.extend((0..3).map(|_| rng.random_range(5e5..6e6)));
            p.extend((0..3).map(|_| rng.random_range(-3.0..3.0)));
            (p, (0..200).map(|i| 5e-8 * i as f64).collect())
        }
        FitModel::ExpDecay => (
            vec![rng.random_range(0.1..2.0), rng.random_range(1e-5..1e-2), rng.random_range(-1.0..1.0)],
            (0..50).map(|i| 1e-5 + 1e-4 * i as f64).collect(),
        ),
        FitModel::DampedSin => (
            vec![
                rng.random_range(0.1..1.0),
                rng.random_range(1e6..1e7),
                rng.random_range(-3.0..3.0),
                rng.random_range(1e-7..1e-5),
                rng.random_range(-1.0..1.0),
            ],
            (0..101).map(|i| 1e-8 * i as f64).collect(),
        ),
    }
}

const MODELS: [FitModel; 4] =
    [FitModel::LorentzianMulti(3), FitModel::Ramsey3Cos, FitModel::ExpDecay, FitModel::DampedSin];

/// Engine Jacobian against a Richardson-extrapolated central difference.
fn jacobian_error(seed: u64, which: usize) -> Result<(), String> {
    let model = MODELS[which];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (p, x) = random_model_point(model, &mut rng);
    let j = numeric_jacobian(&model, &x, &p, FitOptions::default().jacobian_step, None);
    for c in 0..p.len() {
        let central = |h: f64| -> Vec<f64> {
            let mut up = p.clone();
            let mut dn = p.clone();
            up[c] += h;
            dn[c] -= h;
            x.iter().map(|&xi| (model.eval(xi, &up) - model.eval(xi, &dn)) / (2.0 * h)).collect()
        };
        let h = 4e-6 * p[c].abs().max(1e-12);
        let (d1, d2) = (central(h), central(0.5 * h));
        let col: Vec<f64> = d1.iter().zip(&d2).map(|(a, b)| (4.0 * b - a) / 3.0).collect();
        let scale = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        let err = col.iter().enumerate().map(|(r, v)| (j[(r, c)] - v).powi(2)).sum::<f64>().sqrt();
        if !(err <= 1e-4 * scale.max(1e-300)) {
            return Err(format!("{} column {c}: {err:e} vs {scale:e}", model.id()));
        }
    }
    Ok(())
}

#[test]
fn jacobian_of_a_narrow_line() {
    jacobian_error(1068333073023366819, 0).unwrap();
}

proptest! {
    #![proptest_config(cfg(48))]

    #[test]
    fn jacobian_matches_central_difference(seed in any::<u64>(), which in 0usize..4) {
        prop_assert!(jacobian_error(seed, which).is_ok(), "{}", jacobian_error(seed, which).unwrap_err());
    }

    #[test]
    fn fits_never_increase_residual(seed in any::<u64>(), which in 0usize..4) {
        use rand::Rng;
        let model = MODELS[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, x) = random_model_point(model, &mut rng);
        let y: Vec<f64> = x.iter().map(|&xi| model.eval(xi, &p) + rng.random_range(-0.01..0.01)).collect();
        let init: Vec<f64> = p.iter().map(|v| v * rng.random_range(0.9..1.1)).collect();
        if let Ok(r) = fit(model, &x, &y, &init, &FitOptions::default()) {
            prop_assert!(r.residual_norm <= r.initial_residual_norm);
            let again = fit(model, &x, &y, &init, &FitOptions::default()).unwrap();
            prop_assert_eq!(r, again);
        }
    }

    #[test]
    fn noiseless_data_is_recovered(seed in any::<u64>(), which in 0usize..4) {
        use rand::Rng;
        let model = MODELS[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut p, x) = random_model_point(model, &mut rng);
        if let FitModel::LorentzianMulti(_) = model {
            // Separated dips so the identification is unique.
            for (k, c) in [2.855e9, 2.865e9, 2.875e9].iter().enumerate() {
                p[1 + 3 * k] = *c;
            }
        }
        if model == FitModel::Ramsey3Cos {
            for (k, f) in [1.5e6, 3.5e6, 5.5e6].iter().enumerate() {
                p[3 + k] = *f;
            }
        }
        let y: Vec<f64> = x.iter().map(|&xi| model.eval(xi, &p)).collect();
        // Basin: centers within 5 % of a width, phases within 0.02 rad, the
        // rest within 0.2 %.
        let names = model.param_names();
        let init: Vec<f64> = p
            .iter()
            .enumerate()
            .map(|(k, v)| {
                if names[k].starts_with("center") {
                    v + rng.random_range(-0.05..0.05) * p[k + 1]
                } else if names[k].starts_with("phi") {
                    v + rng.random_range(-0.02..0.02)
                } else {
                    v * rng.random_range(0.998..1.002)
                }
            })
            .collect();
        let opts = FitOptions { tolerance: 1e-15, max_iterations: 500, ..FitOptions::default() };
        let r = fit(model, &x, &y, &init, &opts).unwrap();
        for (k, (a, b)) in r.parameters.iter().zip(&p).enumerate() {
            let scale = if names[k].starts_with("phi") { 1.0 } else { b.abs() };
            prop_assert!((a - b).abs() <= 1e-6 * scale, "{} {}: {a} vs {b}", model.id(), names[k]);
        }
    }
}

proptest! {
    #![proptest_config(cfg(64))]

    #[test]
    fn symmetric_profiles_close(atoms in 1e5f64..1e10, g in 1e2f64..1e6, t in 1e-6f64..1e-3) {
        let nd = nd_from_atoms(atoms).unwrap();
        let r = simulate_interferometer(&nd, &GradientProfile::symmetric(t, g), (0, 1), &SgiOptions::default()).unwrap();
        prop_assert!(r.closure.dz_final.abs() < 1e-15 * r.max_splitting);
        prop_assert!(r.closure.dv_final.abs() < 1e-15 * r.max_speed);
        prop_assert!(r.max_splitting >= 0.0 && (0.0..=1.0).contains(&r.contrast));
    }

    #[test]
    fn splitting_scales(atoms in 1e5f64..1e10, g in 1e2f64..1e5, t in 1e-6f64..1e-3, k in 1.5f64..8.0) {
        let o = SgiOptions::default();
        let split = |atoms: f64, g: f64, t: f64| {
            let nd = nd_from_atoms(atoms).unwrap();
            simulate_interferometer(&nd, &GradientProfile::symmetric(t, g), (0, 1), &o).unwrap().max_splitting
        };
        let s = split(atoms, g, t);
        prop_assert!(rel(split(atoms, g * k, t), k * s) < 1e-12);
        prop_assert!(rel(split(atoms, g, t * k), k * k * s) < 1e-12);
        prop_assert!(rel(split(atoms * k, g, t), s / k) < 1e-12);
    }

    #[test]
    fn arms_are_continuous(g in prop::collection::vec(-1e5f64..1e5, 1..6), d in prop::collection::vec(1e-6f64..2e-5, 6)) {
        let segs = g.iter().zip(&d).map(|(g, d)| nvsim::sgi::GradientSegment { duration: *d, gradient: *g }).collect();
        let nd = nd_from_atoms(1e7).unwrap();
        let r = simulate_interferometer(&nd, &GradientProfile::new(segs), (-1, 1), &SgiOptions::default()).unwrap();
        for arm in &r.arms {
            for w in arm.pieces.windows(2) {
                let (a, b) = (&w[0], &w[1]);
                let s = b.t0 - a.t0;
                let z_end = a.z0 + a.v0 * s + 0.5 * a.a * s * s;
                let v_end = a.v0 + a.a * s;
                let zs = a.z0.abs() + a.v0.abs() * b.t0 + a.a.abs() * b.t0 * b.t0;
                let vs = a.v0.abs() + a.a.abs() * b.t0;
                prop_assert!((z_end - b.z0).abs() <= 1e-14 * zs);
                prop_assert!((v_end - b.v0).abs() <= 1e-14 * vs);
            }
            for w in arm.times.windows(2) {
                prop_assert!(w[1] > w[0]);
            }
        }
    }

    #[test]
    fn resonator_round_trips(f0 in 1e8f64..1e10, l in 1e-10f64..1e-7, bw in 1e6f64..1e9) {
        let c = capacitance_for(f0, l);
        let r = resistance_for_bandwidth(l, c, bw);
        let d = RLCDesign { inductance: l, capacitance: c, series_resistance: r, drive_power: 1.0 };
        let f = resonant_frequency(&d).unwrap();
        prop_assert!(rel(f, f0) < 1e-12);
        let q = bandwidth_and_q(&d).unwrap();
        prop_assert_eq!(q.bandwidth, f / q.q);
        prop_assert!(rel(q.bandwidth, bw) < 1e-12);
    }

    #[test]
    fn transformer_is_symmetric(a in 1e-1f64..1e4, b in 1e-1f64..1e4) {
        prop_assert_eq!(quarter_wave_match(a, b).unwrap(), quarter_wave_match(b, a).unwrap());
    }

    #[test]
    fn fields_superpose(r1 in 1e-4f64..1e-2, r2 in 1e-4f64..1e-2, dz in -5e-3f64..5e-3, i in -2.0f64..2.0) {
        let n = 400;
        let a = Geometry::circular_loop(r1);
        let b = Geometry::CircularLoop { radius: r2, center: [0.0, 0.0, dz], normal: [0.0, 0.0, 1.0] };
        // One path through both loops; the lead out to b and back cancels.
        let mut pts: Vec<[f64; 3]> = a.segments(n).unwrap().iter().map(|s| s.0).collect();
        pts.push(pts[0]);
        let pb: Vec<[f64; 3]> = b.segments(n).unwrap().iter().map(|s| s.0).collect();
        pts.extend(&pb);
        pts.push(pb[0]);
        let joined = Geometry::Polyline { points: pts, closed: true };
        let grid = Grid { x: Grid::linspace(-3e-3, 3e-3, 4), y: vec![0.5e-3], z: vec![7e-3] };
        let opts = FieldOptions { segments: n, wire_radius: 1e-9 };
        let ma = loop_field_map(&a, i, &grid, &opts).unwrap();
        let mb = loop_field_map(&b, i, &grid, &opts).unwrap();
        let mj = loop_field_map(&joined, i, &grid, &opts).unwrap();
        for k in 0..grid.points().len() {
            let scale = (0..3).map(|c| ma.field[k][c].abs() + mb.field[k][c].abs()).fold(0.0, f64::max);
            for c in 0..3 {
                let sum = ma.field[k][c] + mb.field[k][c];
                prop_assert!((sum - mj.field[k][c]).abs() <= 1e-12 * scale, "{sum:e} vs {:e}", mj.field[k][c]);
            }
        }
        let single = biot_savart(&a, i, grid.points()[0], n).unwrap();
        prop_assert_eq!(single, ma.field[0]);
    }

    #[test]
    fn csv_tables_round_trip(rows in prop::collection::vec(prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 3), 0..20)) {
        let mut t = Table::new(["a", "b", "c"]);
        for r in rows {
            t.push(r);
        }
        prop_assert_eq!(Table::from_csv(&t.to_csv()).unwrap(), t);
    }

    #[test]
    fn printed_programs_reparse(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let text = common::random_program_text(&mut rng);
        let a = parse(&text).unwrap();
        let b = parse(&a.to_string()).unwrap();
        prop_assert_eq!(&a, &b);
        let o = CompileOptions::default();
        prop_assert_eq!(compile(&a, &Assignment::new(), &o).unwrap(), compile(&b, &Assignment::new(), &o).unwrap());
    }
}

proptest! {
    #![proptest_config(cfg(24))]

    #[test]
    fn random_sequences_keep_the_state_valid(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::random_nv(&mut rng);
        let relax = common::random_relaxation(&mut rng);
        let prog = parse(&common::random_program_text(&mut rng)).unwrap();
        let tl = compile(&prog, &Assignment::new(), &CompileOptions::default()).unwrap();
        let o = ExecOptions { shots: 10, seed, ..ExecOptions::default() };
        let r = execute(&tl, &NvState::polarized(), &p, &relax, &o).unwrap();
        prop_assert!(r.check.max_trace_error < 1e-9);
        prop_assert!(r.check.max_hermiticity_error < 1e-10);
        prop_assert!(r.check.min_eigenvalue > -1e-9);
        prop_assert!(r.check.max_population_error < 1e-9);
        let again = execute(&tl, &NvState::polarized(), &p, &relax, &o).unwrap();
        prop_assert_eq!(r, again);
    }
}
