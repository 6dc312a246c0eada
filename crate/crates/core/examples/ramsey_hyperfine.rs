//! Ramsey fringes detuned 3 MHz from the m_I = 0 line and a three-tone fit
//! that recovers the ¹⁴N hyperfine spacing.

use nvsim::analysis::{fit_auto, FitModel, FitOptions};
use nvsim::dynamics::{NvState, RelaxationParams};
use nvsim::hamiltonian::{transitions_for, NVParameters};
use nvsim::sequence::protocols::{ramsey_vs_time, Scan};
use nvsim::sequence::{run_sweep, CompileOptions, ExecOptions, Executor};

fn main() -> nvsim::Result<()> {
    let nv = NVParameters::default().with_field([0.0, 0.0, 1e-3]);
    let line = transitions_for(&nv)?
        .lines
        .iter()
        .find(|t| t.lower.ms == 0 && t.upper.ms == -1 && t.lower.mi == 0)
        .map(|t| t.frequency)
        .expect("m_I = 0 line");
    let program = ramsey_vs_time(Scan::new(0.0, 10e-6, 200), line - 3e6, Some(25e6))?;
    let ex = Executor::new(&nv, &RelaxationParams::default(), &ExecOptions::default())?;
    let r = run_sweep(&program, &CompileOptions::default(), &ex, &NvState::thermal())?;

    let fit = fit_auto(FitModel::Ramsey3Cos, &r.values("tau"), &r.signal(0), &FitOptions::default())?;
    let mut f: Vec<f64> = ["f1", "f2", "f3"].iter().filter_map(|n| fit.param(n)).map(f64::abs).collect();
    f.sort_by(f64::total_cmp);
    println!("tones: {:.3} {:.3} {:.3} MHz", f[0] / 1e6, f[1] / 1e6, f[2] / 1e6);
    println!("spacings: {:.3} {:.3} MHz", (f[1] - f[0]) / 1e6, (f[2] - f[1]) / 1e6);
    Ok(())
}
