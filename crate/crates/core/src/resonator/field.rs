//! Biot-Savart field of filamentary current paths.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::MU0_OVER_4PI;
use crate::hamiltonian::{body_frame, cross3, dot3, norm3, normalize3};

use super::ResonatorError;

/// Current path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Geometry {
    /// Circle of `radius` around `normal`, current right-handed about it.
    CircularLoop { radius: f64, center: [f64; 3], normal: [f64; 3] },
    /// Straight segments through `points`; `closed` adds the return segment.
    Polyline { points: Vec<[f64; 3]>, closed: bool },
}

impl Geometry {
    pub fn circular_loop(radius: f64) -> Self {
        Geometry::CircularLoop { radius, center: [0.0; 3], normal: [0.0, 0.0, 1.0] }
    }

    /// Split ring: a circular arc with a gap of `gap_angle` radians centred on
    /// the +x side, closed by the two straight feed leads meeting at
    /// `feed_length` beyond the ring.
    pub fn split_ring(radius: f64, gap_angle: f64, feed_length: f64, points: usize) -> Self {
        let n = points.max(2);
        let start = 0.5 * gap_angle;
        let span = std::f64::consts::TAU - gap_angle;
        let mut pts: Vec<[f64; 3]> = (0..n)
            .map(|k| {
                let a = start + span * k as f64 / (n - 1) as f64;
                [radius * a.cos(), radius * a.sin(), 0.0]
            })
            .collect();
        let last = pts[n - 1];
        let first = pts[0];
        pts.push([last[0] + feed_length, last[1], 0.0]);
        pts.push([first[0] + feed_length, first[1], 0.0]);
        Geometry::Polyline { points: pts, closed: true }
    }

    pub fn id(&self) -> String {
        match self {
            Geometry::CircularLoop { radius, .. } => format!("circular_loop(r={radius:e})"),
            Geometry::Polyline { points, closed } => {
                format!("polyline(n={}, closed={closed})", points.len())
            }
        }
    }

    /// Straight segments approximating the path; circles use `n` chords.
    pub fn segments(&self, n: usize) -> Result<Vec<([f64; 3], [f64; 3])>, ResonatorError> {
        match self {
            Geometry::CircularLoop { radius, center, normal } => {
                if !(*radius > 0.0) || !radius.is_finite() {
                    return Err(ResonatorError::DegenerateGeometry("loop radius must be positive".into()));
                }
                if !(norm3(normal) > 0.0) {
                    return Err(ResonatorError::DegenerateGeometry("loop normal is zero".into()));
                }
                if n < 3 {
                    return Err(ResonatorError::DegenerateGeometry("need at least 3 segments".into()));
                }
                let f = body_frame(&normalize3(normal));
                let (u, v) = (f[0], f[1]);
                let pt = |k: usize| -> [f64; 3] {
                    let a = std::f64::consts::TAU * (k % n) as f64 / n as f64;
                    let (c, s) = (a.cos(), a.sin());
                    [0, 1, 2].map(|i| center[i] + radius * (c * u[i] + s * v[i]))
                };
                Ok((0..n).map(|k| (pt(k), pt(k + 1))).collect())
            }
            Geometry::Polyline { points, closed } => {
                if points.len() < 2 {
                    return Err(ResonatorError::DegenerateGeometry("polyline needs two points".into()));
                }
                let mut segs: Vec<_> = points.windows(2).map(|w| (w[0], w[1])).collect();
                if *closed {
                    segs.push((points[points.len() - 1], points[0]));
                }
                let segs: Vec<_> =
                    segs.into_iter().filter(|(a, b)| norm3(&[b[0] - a[0], b[1] - a[1], b[2] - a[2]]) > 0.0).collect();
                if segs.is_empty() {
                    return Err(ResonatorError::DegenerateGeometry("all segments have zero length".into()));
                }
                Ok(segs)
            }
        }
    }
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn distance_to_segment(p: &[f64; 3], a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let t = (dot3(&ap, &ab) / dot3(&ab, &ab)).clamp(0.0, 1.0);
    norm3(&sub(&ap, &[ab[0] * t, ab[1] * t, ab[2] * t]))
}

/// Field of a straight filament from `a` to `b` per unit `μ0 I / 4π`:
/// `(cos θ1 − cos θ2)/d` along `l̂ × d̂`.
fn segment_field(p: &[f64; 3], a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    let l = sub(b, a);
    let len = norm3(&l);
    let lhat = [l[0] / len, l[1] / len, l[2] / len];
    let r1 = sub(p, a);
    let along = dot3(&r1, &lhat);
    let perp = [r1[0] - along * lhat[0], r1[1] - along * lhat[1], r1[2] - along * lhat[2]];
    let d2 = dot3(&perp, &perp);
    if d2 == 0.0 {
        return [0.0; 3];
    }
    let n1 = norm3(&r1);
    let n2 = norm3(&sub(p, b));
    let k = (along / n1 - (along - len) / n2) / d2;
    let c = cross3(&lhat, &perp);
    [c[0] * k, c[1] * k, c[2] * k]
}

fn field_from_segments(segs: &[([f64; 3], [f64; 3])], current: f64, p: &[f64; 3]) -> [f64; 3] {
    let mut b = [0.0; 3];
    for (a, e) in segs {
        let f = segment_field(p, a, e);
        for i in 0..3 {
            b[i] += f[i];
        }
    }
    b.map(|x| x * MU0_OVER_4PI * current)
}

/// Field (T) at one point, with `n` chords for circular loops.
pub fn biot_savart(geometry: &Geometry, current: f64, point: [f64; 3], n: usize) -> Result<[f64; 3], ResonatorError> {
    let segs = geometry.segments(n)?;
    Ok(field_from_segments(&segs, current, &point))
}

/// Rectangular lattice given by strictly increasing axis coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl Grid {
    pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![lo];
        }
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    /// Square `n × n` lattice of half-width `half` in the plane at height `z`.
    pub fn plane_xy(half: f64, n: usize, z: f64) -> Self {
        Self { x: Self::linspace(-half, half, n), y: Self::linspace(-half, half, n), z: vec![z] }
    }

    pub fn validate(&self) -> Result<(), ResonatorError> {
        for (name, axis) in [("x", &self.x), ("y", &self.y), ("z", &self.z)] {
            if axis.is_empty() {
                return Err(ResonatorError::InvalidGrid(format!("{name} axis is empty")));
            }
            if axis.iter().any(|v| !v.is_finite()) || axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(ResonatorError::InvalidGrid(format!("{name} axis must be finite and strictly increasing")));
            }
        }
        Ok(())
    }

    /// Points in x-fastest order.
    pub fn points(&self) -> Vec<[f64; 3]> {
        let mut out = Vec::with_capacity(self.x.len() * self.y.len() * self.z.len());
        for &z in &self.z {
            for &y in &self.y {
                for &x in &self.x {
                    out.push([x, y, z]);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldOptions {
    /// Chords per circular loop.
    pub segments: usize,
    /// Points closer than this to the filament are flagged singular, m.
    pub wire_radius: f64,
}

impl Default for FieldOptions {
    fn default() -> Self {
        Self { segments: 10_000, wire_radius: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMap {
    pub grid: Grid,
    pub points: Vec<[f64; 3]>,
    /// T; zero at singular points.
    pub field: Vec<[f64; 3]>,
    pub singular: Vec<bool>,
    pub geometry: String,
    /// A
    pub current: f64,
}

impl FieldMap {
    /// `x,y,z,Bx,By,Bz` rows in scientific notation; singular points are
    /// left out.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,z,Bx,By,Bz\n");
        for ((p, b), sing) in self.points.iter().zip(&self.field).zip(&self.singular) {
            if *sing {
                continue;
            }
            s.push_str(&format!("{:e},{:e},{:e},{:e},{:e},{:e}\n", p[0], p[1], p[2], b[0], b[1], b[2]));
        }
        s
    }

    pub fn singular_count(&self) -> usize {
        self.singular.iter().filter(|s| **s).count()
    }
}

pub fn loop_field_map(
    geometry: &Geometry,
    current: f64,
    grid: &Grid,
    options: &FieldOptions,
) -> Result<FieldMap, ResonatorError> {
    if !current.is_finite() {
        return Err(ResonatorError::InvalidDesign("current must be finite".into()));
    }
    grid.validate()?;
    let segs = geometry.segments(options.segments)?;
    let points = grid.points();
    let evaluated: Vec<(bool, [f64; 3])> = points
        .par_iter()
        .map(|p| {
            let near = segs.iter().any(|(a, b)| distance_to_segment(p, a, b) < options.wire_radius);
            if near {
                (true, [0.0; 3])
            } else {
                (false, field_from_segments(&segs, current, p))
            }
        })
        .collect();
    let (singular, field) = evaluated.into_iter().unzip();
    Ok(FieldMap { grid: grid.clone(), points, field, singular, geometry: geometry.id(), current })
}

/// Axis-aligned box, bounds inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Region {
    /// Square of side `side` centred on the origin in the plane at `z`.
    pub fn centered_square(side: f64, z: f64) -> Self {
        let h = 0.5 * side;
        Self { min: [-h, -h, z], max: [h, h, z] }
    }

    fn contains(&self, p: &[f64; 3]) -> bool {
        let eps = 1e-12 * (self.max[0] - self.min[0]).abs().max((self.max[1] - self.min[1]).abs()).max(1e-12);
        (0..3).all(|i| p[i] >= self.min[i] - eps && p[i] <= self.max[i] + eps)
    }
}

/// Resonant drive used to scale a map computed at its nominal current.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    /// W
    pub power: f64,
    /// Series loss, Ω.
    pub resistance: f64,
    pub q: f64,
}

impl Drive {
    /// `Q·√(P/R)`, A.
    pub fn loop_current(&self) -> f64 {
        self.q * (self.power / self.resistance).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldMetrics {
    /// T
    pub mean_b: f64,
    pub min_b: f64,
    pub max_b: f64,
    /// (max − min)/(max + min) in percent, quoted as ±.
    pub uniformity_percent: f64,
    pub points: usize,
    /// Mean field at the driven loop current, T.
    pub driven_mean_b: Option<f64>,
    pub gauss_per_sqrt_watt: Option<f64>,
}

pub fn field_metrics(map: &FieldMap, region: &Region, drive: Option<&Drive>) -> Result<FieldMetrics, ResonatorError> {
    let mags: Vec<f64> = map
        .points
        .iter()
        .zip(&map.field)
        .zip(&map.singular)
        .filter(|((p, _), s)| !**s && region.contains(p))
        .map(|((_, b), _)| norm3(b))
        .collect();
    if mags.is_empty() {
        return Err(ResonatorError::EmptyRegion);
    }
    let mean_b = mags.iter().sum::<f64>() / mags.len() as f64;
    let min_b = mags.iter().copied().fold(f64::INFINITY, f64::min);
    let max_b = mags.iter().copied().fold(0.0, f64::max);
    let uniformity_percent = if max_b + min_b > 0.0 { 100.0 * (max_b - min_b) / (max_b + min_b) } else { 0.0 };
    let (driven_mean_b, gauss_per_sqrt_watt) = match drive {
        Some(d) if map.current != 0.0 && d.resistance > 0.0 && d.power > 0.0 => {
            let driven = mean_b * d.loop_current() / map.current.abs();
            (Some(driven), Some(driven * 1e4 / d.power.sqrt()))
        }
        _ => (None, None),
    };
    Ok(FieldMetrics {
        mean_b,
        min_b,
        max_b,
        uniformity_percent,
        points: mags.len(),
        driven_mean_b,
        gauss_per_sqrt_watt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::MU_0;

    #[test]
    fn loop_center_and_axis() {
        let a = 5e-3;
        let i = 0.7;
        let g = Geometry::circular_loop(a);
        let c = biot_savart(&g, i, [0.0; 3], 10_000).unwrap();
        let expect = MU_0 * i / (2.0 * a);
        assert!((c[2] - expect).abs() / expect < 1e-3);
        let h = biot_savart(&g, i, [0.0, 0.0, a], 10_000).unwrap();
        let expect_h = expect * 2f64.powf(-1.5);
        assert!((h[2] - expect_h).abs() / expect_h < 1e-3);
    }

    #[test]
    fn finite_wire_matches_closed_form() {
        let (h, d, i) = (0.05, 0.01, 2.0);
        let g = Geometry::Polyline { points: vec![[0.0, 0.0, -h], [0.0, 0.0, h]], closed: false };
        let b = biot_savart(&g, i, [d, 0.0, 0.0], 0).unwrap();
        let expect = MU_0 * i / (4.0 * std::f64::consts::PI * d) * 2.0 * h / (h * h + d * d).sqrt();
        assert!((b[1] - expect).abs() / expect < 1e-12);
        assert!(b[0].abs() < 1e-20 && b[2].abs() < 1e-20);
    }

    #[test]
    fn on_wire_points_are_flagged() {
        let g = Geometry::circular_loop(1e-3);
        let grid = Grid { x: vec![-1e-3, 0.0, 1e-3], y: vec![0.0], z: vec![0.0] };
        let m = loop_field_map(&g, 1.0, &grid, &FieldOptions { segments: 1000, wire_radius: 1e-5 }).unwrap();
        assert_eq!(m.singular, vec![true, false, true]);
        assert_eq!(m.to_csv().lines().count(), 2);
    }

    #[test]
    fn uniform_map_metrics() {
        let grid = Grid::plane_xy(1.0, 3, 0.0);
        let points = grid.points();
        let n = points.len();
        let m = FieldMap {
            grid,
            points,
            field: vec![[0.0, 0.0, 1e-4]; n],
            singular: vec![false; n],
            geometry: "synthetic".into(),
            current: 1.0,
        };
        let r = field_metrics(&m, &Region::centered_square(2.0, 0.0), None).unwrap();
        assert_eq!(r.uniformity_percent, 0.0);
        assert_eq!(r.points, 9);
        let empty = Region { min: [5.0, 5.0, 5.0], max: [6.0, 6.0, 6.0] };
        assert_eq!(field_metrics(&m, &empty, None).unwrap_err(), ResonatorError::EmptyRegion);
    }

    #[test]
    fn split_ring_is_closed_polyline() {
        let g = Geometry::split_ring(1e-3, 0.2, 0.5e-3, 200);
        let segs = g.segments(0).unwrap();
        assert_eq!(segs.len(), 202);
        let b = biot_savart(&g, 1.0, [0.0; 3], 0).unwrap();
        assert!(b[2] > 0.0);
    }

    #[test]
    fn bad_grid() {
        let g = Geometry::circular_loop(1e-3);
        let grid = Grid { x: vec![1.0, 0.0], y: vec![0.0], z: vec![0.0] };
        assert!(loop_field_map(&g, 1.0, &grid, &FieldOptions::default()).is_err());
    }
}
