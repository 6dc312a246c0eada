//! Loop resonator at 2.87 GHz with a 270 MHz bandwidth, its quarter-wave
//! match and the field uniformity near the loop center.

use nvsim::resonator::{
    bandwidth_and_q, capacitance_for, field_metrics, loop_field_map, quarter_wave_match, resistance_for_bandwidth,
    resonant_frequency, Drive, FieldOptions, Geometry, Grid, RLCDesign, Region,
};

fn main() -> nvsim::Result<()> {
    let l = 1e-9;
    let c = capacitance_for(2.87e9, l);
    let r = resistance_for_bandwidth(l, c, 270e6);
    let design = RLCDesign { inductance: l, capacitance: c, series_resistance: r, drive_power: 1.0 };
    let q = bandwidth_and_q(&design)?;
    println!("C = {:.4} pF, R = {:.4} Ω, f0 = {:.6} GHz", c * 1e12, r, resonant_frequency(&design)? / 1e9);
    println!("Q = {:.3}, bandwidth = {:.1} MHz", q.q, q.bandwidth / 1e6);
    println!("100 Ω → 650 Ω quarter-wave line: {:.2} Ω", quarter_wave_match(100.0, 650.0)?);

    let radius = 1e-3;
    let map = loop_field_map(
        &Geometry::circular_loop(radius),
        1.0,
        &Grid::plane_xy(0.3e-3, 31, 0.0),
        &FieldOptions::default(),
    )?;
    let drive = Drive { power: 1.0, resistance: r, q: q.q };
    let m = field_metrics(&map, &Region::centered_square(0.2e-3, 0.0), Some(&drive))?;
    println!("uniformity ±{:.2} %, {:.2} G/√W", m.uniformity_percent, m.gauss_per_sqrt_watt.unwrap_or(f64::NAN));
    Ok(())
}
