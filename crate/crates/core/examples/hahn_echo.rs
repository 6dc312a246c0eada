//! Hahn echo versus free Ramsey decay on the same NV.

use nvsim::dynamics::{NvState, RelaxationParams};
use nvsim::hamiltonian::{transitions_for, NVParameters};
use nvsim::sequence::protocols::{hahn_echo, ramsey_vs_time, Scan};
use nvsim::sequence::{run_sweep, CompileOptions, ExecOptions, Executor};

fn main() -> nvsim::Result<()> {
    let nv = NVParameters::default().with_field([0.0, 0.0, 0.03]).without_hyperfine();
    let line = transitions_for(&nv)?.lines.iter().find(|t| t.upper.ms == -1).map(|t| t.frequency).expect("line");
    let ex = Executor::new(&nv, &RelaxationParams::default(), &ExecOptions::default())?;
    let scan = Scan::new(1e-6, 60e-6, 8);
    let o = CompileOptions::default();
    let echo = run_sweep(&hahn_echo(scan, line, None)?, &o, &ex, &NvState::thermal())?;
    let free = run_sweep(&ramsey_vs_time(scan, line, None)?, &o, &ex, &NvState::thermal())?;
    println!("tau (us)  echo p0  ramsey p0");
    for (a, b) in echo.points.iter().zip(&free.points) {
        println!(
            "{:>8.1}  {:>7.4}  {:>9.4}",
            a.snapped["tau"] * 1e6,
            a.readouts[0].populations[1],
            b.readouts[0].populations[1]
        );
    }
    Ok(())
}
