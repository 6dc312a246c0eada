//! Parse a pulse sequence, compile one sweep point to a timeline and print it.

use nvsim::sequence::{compile, parse, sweep_assignment, CompileOptions};

const SOURCE: &str = "
# Hahn echo with a swept half-echo time
sweep tau 1us:20us:5
laser 3us
wait 1us
mw pi/2 @ 2.87GHz amp 10MHz
wait $tau
mw pi @ 2.87GHz amp 10MHz
wait $tau
mw pi/2 @ 2.87GHz amp 10MHz phase 90deg
readout 300ns
";

fn main() -> nvsim::Result<()> {
    let program = parse(SOURCE)?;
    println!("{program}");
    let point = sweep_assignment(&program, "tau", 2)?;
    let timeline = compile(&program, &point, &CompileOptions::default())?;
    println!("tau = {:e} s, total {} ns", point["tau"], timeline.total_duration_ns);
    for e in &timeline.events {
        println!("{:>8} {:>8}  {}", e.start_ns, e.end_ns, e.channel);
    }
    Ok(())
}
