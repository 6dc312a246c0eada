//! Stern-Gerlach splitting of a 10⁷-atom nanodiamond in a closed-loop
//! gradient sequence.

use nvsim::sgi::{nd_from_atoms, simulate_interferometer, GradientProfile, SgiOptions};

fn main() -> nvsim::Result<()> {
    let nd = nd_from_atoms(1e7)?;
    println!("mass {:.3e} kg, sphere diameter {:.1} nm", nd.mass, nd.sphere_diameter * 1e9);
    for duration in [20e-6, 40e-6, 80e-6] {
        let profile = GradientProfile::symmetric(duration, 1e5);
        let r = simulate_interferometer(&nd, &profile, (0, 1), &SgiOptions::default())?;
        println!(
            "T = {:>3.0} us: max splitting {:.3} nm, closure dz {:.1e} m, contrast {:.3}",
            duration * 1e6,
            r.max_splitting * 1e9,
            r.closure.dz_final,
            r.contrast
        );
    }
    Ok(())
}
