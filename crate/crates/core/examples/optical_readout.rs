//! Photoluminescence under a laser pulse starting from m_s = 0 and m_s = ±1:
//! the bright-state contrast and the slow singlet-limited recovery.

use nvsim::dynamics::{optical_cycle, OpticalPopulations, OpticalRates};

fn main() -> nvsim::Result<()> {
    let rates = OpticalRates::default();
    let window = 300e-9;
    for ms in [0i8, 1] {
        let (_, trace) = optical_cycle(&OpticalPopulations::ground_ms(ms), &rates, 3e-6, 0.5e-9)?;
        let head = trace.integrate(0.0, window);
        let tail = trace.values.last().copied().unwrap_or(0.0);
        println!("m_s = {ms:>2}: {head:.4} photons in the first {:.0} ns, steady rate {tail:.3e}/s", window * 1e9);
    }
    Ok(())
}
