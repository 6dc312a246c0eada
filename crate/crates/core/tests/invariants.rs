//! Deterministic checks of convergence, statistics and scaling laws.

use nvsim::constants::MU_0;
use nvsim::dynamics::{NvState, RelaxationParams};
use nvsim::hamiltonian::{find_dips, powder_spectrum, transitions_for, NVParameters};
use nvsim::resonator::{biot_savart, field_metrics, loop_field_map, Drive, FieldOptions, Geometry, Grid, Region};
use nvsim::sequence::protocols::{ramsey_vs_freq, Scan};
use nvsim::sequence::{compile, execute, parse, run_sweep, Assignment, CompileOptions, ExecOptions, Executor};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

fn norm(b: [f64; 3]) -> f64 {
    (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt()
}

#[test]
fn biot_savart_is_second_order() {
    let a = 2e-3;
    let i = 0.3;
    let on_axis = |z: f64| MU_0 * i * a * a / (2.0 * (a * a + z * z).powf(1.5));
    for z in [0.0, 0.5 * a, 2.0 * a] {
        let g = Geometry::circular_loop(a);
        let err = |n| (norm(biot_savart(&g, i, [0.0, 0.0, z], n).unwrap()) - on_axis(z)).abs();
        let (e3, e4) = (err(1_000), err(10_000));
        let order = (e3 / e4).log10();
        assert!(order >= 1.8, "z = {z}: order {order} ({e3:e} -> {e4:e})");
    }
}

#[test]
fn single_loop_center_is_uniform_and_scales_with_power() {
    let a = 5e-3;
    let g = Geometry::circular_loop(a);
    let side = 0.2 * a;
    let grid = Grid::plane_xy(0.5 * side, 21, 0.0);
    let map = loop_field_map(&g, 1.0, &grid, &FieldOptions::default()).unwrap();
    let region = Region::centered_square(side, 0.0);
    let drive = Drive { power: 0.5, resistance: 2.0, q: 10.0 };
    let m1 = field_metrics(&map, &region, Some(&drive)).unwrap();
    assert_eq!(m1.points, 441);
    assert!(m1.uniformity_percent < 10.0, "{}", m1.uniformity_percent);

    let m2 = field_metrics(&map, &region, Some(&Drive { power: 1.0, ..drive })).unwrap();
    let (b1, b2) = (m1.driven_mean_b.unwrap(), m2.driven_mean_b.unwrap());
    assert!((b2 / b1 - 2f64.sqrt()).abs() < 1e-12);
    let (e1, e2) = (m1.gauss_per_sqrt_watt.unwrap(), m2.gauss_per_sqrt_watt.unwrap());
    assert!((e2 / e1 - 1.0).abs() < 1e-12);
}

#[test]
fn earth_field_powder_keeps_two_broadened_dips() {
    let nv = NVParameters::default().without_hyperfine().with_strain(5e6);
    let f = Grid::linspace(2.855e9, 2.885e9, 1501);
    let zero = powder_spectrum(&nv, &f, 1e6, 0.1, 2_000, 11).unwrap();
    let earth = nv.with_field([3e-5, 2e-5, 3.4e-5]);
    let s = powder_spectrum(&earth, &f, 1e6, 0.1, 2_000, 11).unwrap();
    let oracle = powder_spectrum(&earth, &f, 1e6, 0.1, 40_000, 12).unwrap();

    let d0 = find_dips(&zero, 1e-3);
    let d = find_dips(&s, 1e-3);
    assert_eq!(d0.len(), 2);
    assert_eq!(d.len(), 2, "{d:?}");
    for (a, b) in d.iter().zip(&d0) {
        assert!(a.depth < b.depth, "not broadened: {} vs {}", a.depth, b.depth);
    }
    let worst = s.values.iter().zip(&oracle.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(worst < 2e-3, "{worst}");
}

#[test]
fn ramsey_fringes_in_frequency_have_period_one_over_tau() {
    let nv = NVParameters::default().without_hyperfine().with_field([0.0, 0.0, 30e-3]);
    let line =
        transitions_for(&nv).unwrap().lines.iter().find(|t| t.lower.ms == 0 && t.upper.ms == -1).unwrap().frequency;
    let tau = 5e-6;
    let n = 501;
    let span = 10e6;
    let program = ramsey_vs_freq(Scan::new(line - 0.5 * span, line + 0.5 * span, n), tau, Some(50e6)).unwrap();
    let relax = RelaxationParams { t2_star: 20e-6, ..RelaxationParams::default() };
    let ex = Executor::new(&nv, &relax, &ExecOptions::default()).unwrap();
    let r = run_sweep(&program, &CompileOptions::default(), &ex, &NvState::thermal()).unwrap();
    let y = r.signal(0);
    let mean = y.iter().sum::<f64>() / n as f64;

    let pad = 1 << 15;
    let mut buf: Vec<Complex<f64>> = y.iter().map(|v| Complex::new(v - mean, 0.0)).collect();
    buf.resize(pad, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(pad).process(&mut buf);
    let peak = (1..pad / 2).max_by(|a, b| buf[*a].norm().total_cmp(&buf[*b].norm())).unwrap();
    let df = span / (n - 1) as f64;
    let period = 1.0 / (peak as f64 / (pad as f64 * df));
    assert!((period * tau - 1.0).abs() < 0.02, "period {period} Hz vs {} Hz", 1.0 / tau);
}

#[test]
fn mean_counts_converge_to_the_noiseless_integral() {
    let nv = NVParameters::default();
    let relax = RelaxationParams::default();
    let prog = parse("laser 3us\nwait 1us\nmw 40ns @ 2.87GHz\nreadout 300ns\n").unwrap();
    let timeline = compile(&prog, &Assignment::new(), &CompileOptions::default()).unwrap();
    let shots = 100_000;
    for (keep_samples, seed) in [(true, 5), (false, 6)] {
        for ensemble_size in [1.0, 50.0] {
            let opts = ExecOptions { shots, seed, keep_samples, ensemble_size, ..ExecOptions::default() };
            let c = &execute(&timeline, &NvState::thermal(), &nv, &relax, &opts).unwrap().readouts[0].counts;
            let sigma = (c.expected / shots as f64).sqrt();
            assert!(c.expected > 0.0);
            assert!((c.mean_counts - c.expected).abs() < 3.0 * sigma, "{} vs {} ± {sigma}", c.mean_counts, c.expected);
            if keep_samples {
                assert_eq!(c.samples.len(), shots);
            }
        }
    }
    let one = ExecOptions { shots: 0, ..ExecOptions::default() };
    let many = ExecOptions { shots: 0, ensemble_size: 50.0, ..ExecOptions::default() };
    let e1 = execute(&timeline, &NvState::thermal(), &nv, &relax, &one).unwrap().readouts[0].counts.expected;
    let e50 = execute(&timeline, &NvState::thermal(), &nv, &relax, &many).unwrap().readouts[0].counts.expected;
    assert!((e50 / e1 - 50.0).abs() < 1e-9);
}
