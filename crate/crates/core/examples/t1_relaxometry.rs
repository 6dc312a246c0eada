//! T1 relaxometry with shot noise and an exponential fit.

use nvsim::analysis::{fit_auto, FitModel, FitOptions};
use nvsim::dynamics::{NvState, RelaxationParams};
use nvsim::hamiltonian::NVParameters;
use nvsim::sequence::protocols::{t1, Scan};
use nvsim::sequence::{run_sweep, CompileOptions, ExecOptions, Executor};

fn main() -> nvsim::Result<()> {
    let relax = RelaxationParams { t1: 1e-3, ..RelaxationParams::default() };
    let opts = ExecOptions { shots: 10_000, ensemble_size: 1000.0, seed: 11, ..ExecOptions::default() };
    let ex = Executor::new(&NVParameters::default(), &relax, &opts)?;
    let program = t1(Scan::new(10e-6, 5e-3, 30))?;
    let r = run_sweep(&program, &CompileOptions::default(), &ex, &NvState::thermal())?;
    let fit = fit_auto(FitModel::ExpDecay, &r.values("tau"), &r.signal(0), &FitOptions::default())?;
    println!("{}", fit.report().to_json());
    println!("fitted T1 = {:.4} ms (configured 1 ms)", fit.param("T").unwrap_or(f64::NAN) * 1e3);
    Ok(())
}
