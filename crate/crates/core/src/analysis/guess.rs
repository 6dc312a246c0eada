//! Starting points for the fit models.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rustfft::{num_complex::Complex, FftPlanner};

use super::{FitError, FitModel};

/// Centered moving average, window shrinking at the edges.
fn smooth(y: &[f64], window: usize) -> Vec<f64> {
    let h = window / 2;
    (0..y.len())
        .map(|i| {
            let a = i.saturating_sub(h);
            let b = (i + h + 1).min(y.len());
            y[a..b].iter().sum::<f64>() / (b - a) as f64
        })
        .collect()
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Robust noise level from first differences.
fn noise_sigma(y: &[f64]) -> f64 {
    if y.len() < 3 {
        return 0.0;
    }
    let d: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    median(&d) / (0.6745 * std::f64::consts::SQRT_2)
}

/// Local minima of `s` with their prominence, most prominent first.
fn minima_by_prominence(s: &[f64]) -> Vec<(usize, f64)> {
    let n = s.len();
    let mut out = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if !(s[i] < s[i - 1] && s[i] <= s[i + 1]) {
            continue;
        }
        let mut left = s[i];
        for k in (0..i).rev() {
            if s[k] < s[i] {
                break;
            }
            left = left.max(s[k]);
        }
        let mut right = s[i];
        for &v in &s[i + 1..] {
            if v < s[i] {
                break;
            }
            right = right.max(v);
        }
        out.push((i, left.min(right) - s[i]));
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    out
}

fn uniform_step(x: &[f64]) -> Result<f64, FitError> {
    let n = x.len();
    if n < 4 {
        return Err(FitError::TooFewPoints { points: n, params: 4 });
    }
    let dt = (x[n - 1] - x[0]) / (n - 1) as f64;
    // Positions may jitter (times snapped to a grid) but must stay near the
    // uniform lattice the FFT assumes.
    let off_grid = x.iter().enumerate().any(|(i, v)| (v - (x[0] + dt * i as f64)).abs() > 0.25 * dt);
    if !(dt > 0.0) || x.windows(2).any(|w| !(w[1] > w[0])) || off_grid {
        return Err(FitError::InvalidData("frequency estimate needs increasing, near-evenly spaced x".into()));
    }
    Ok(dt)
}

/// Peaks of the Hann-windowed, zero-padded spectrum of `y − mean`, strongest
/// first, at least two original bins apart.
fn spectral_peaks(x: &[f64], y: &[f64], count: usize) -> Result<Vec<f64>, FitError> {
    let dt = uniform_step(x)?;
    let n = y.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let len = (4 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = (0..len)
        .map(|i| {
            if i < n {
                let w = 0.5 - 0.5 * (TAU * i as f64 / (n - 1) as f64).cos();
                Complex::new((y[i] - mean) * w, 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        })
        .collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let mag: Vec<f64> = buf[..len / 2 + 1].iter().map(|c| c.norm()).collect();
    let top = mag.iter().cloned().fold(0.0, f64::max);
    let floor = 1e-9 * top.max(f64::MIN_POSITIVE) + 1e-300;
    let mut peaks: Vec<(usize, f64)> = (1..mag.len() - 1)
        .filter(|&k| mag[k] > mag[k - 1] && mag[k] >= mag[k + 1] && mag[k] > floor)
        .map(|k| (k, mag[k]))
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let sep = 2.0 * len as f64 / n as f64;
    let mut picked: Vec<usize> = Vec::new();
    for (k, _) in peaks {
        if picked.iter().all(|&p| (p as f64 - k as f64).abs() >= sep) {
            picked.push(k);
            if picked.len() == count {
                break;
            }
        }
    }
    if picked.len() < count || top == 0.0 {
        return Err(FitError::UnderDetermined { found: picked.len(), needed: count });
    }
    Ok(picked
        .into_iter()
        .map(|k| {
            // parabolic refinement on log magnitude
            let (a, b, c) = (mag[k - 1].max(1e-300).ln(), mag[k].ln(), mag[k + 1].max(1e-300).ln());
            let den = a - 2.0 * b + c;
            let shift = if den.abs() > 0.0 { (0.5 * (a - c) / den).clamp(-0.5, 0.5) } else { 0.0 };
            (k as f64 + shift) / (len as f64 * dt)
        })
        .collect())
}

/// Least squares `y ≈ c₀ + e^{−t/τ} Σₖ (aₖ cos 2πfₖt + bₖ sin 2πfₖt)` over a
/// grid of τ. Returns `(τ, c₀, [(amplitude, phase)])`.
fn tone_amplitudes(x: &[f64], y: &[f64], freqs: &[f64]) -> (f64, f64, Vec<(f64, f64)>) {
    let span = (x[x.len() - 1] - x[0]).abs().max(f64::MIN_POSITIVE);
    let t0 = x[0];
    let mut best: Option<(f64, f64, f64, Vec<(f64, f64)>)> = None;
    for g in 0..25 {
        let tau = span * 10f64.powf(-1.3 + 0.1 * g as f64);
        let cols = 1 + 2 * freqs.len();
        let a = DMatrix::from_fn(x.len(), cols, |r, c| {
            let t = x[r];
            if c == 0 {
                return 1.0;
            }
            let env = (-(t - t0) / tau).exp();
            let f = freqs[(c - 1) / 2];
            let ph = TAU * f * t;
            env * if c % 2 == 1 { ph.cos() } else { ph.sin() }
        });
        let b = DVector::from_column_slice(y);
        let Ok(sol) = a.clone().svd(true, true).solve(&b, 1e-12) else { continue };
        let sse = (&a * &sol - &b).norm_squared();
        if best.as_ref().is_none_or(|bst| sse < bst.0) {
            // envelope referenced to t = 0
            let scale = (t0 / tau).exp();
            let tones = (0..freqs.len())
                .map(|k| {
                    let (p, q) = (sol[1 + 2 * k] * scale, sol[2 + 2 * k] * scale);
                    (p.hypot(q), (-q).atan2(p))
                })
                .collect();
            best = Some((sse, tau, sol[0], tones));
        }
    }
    let (_, tau, c0, tones) = best.unwrap_or((0.0, span, 0.0, vec![(0.0, 0.0); freqs.len()]));
    (tau, c0, tones)
}

fn guess_lorentzian(n: usize, x: &[f64], y: &[f64]) -> Result<Vec<f64>, FitError> {
    let s = smooth(y, 5);
    let baseline = median(&s);
    let scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let threshold = (3.0 * noise_sigma(y)).max(1e-9 * scale);
    let minima: Vec<(usize, f64)> = minima_by_prominence(&s).into_iter().filter(|(_, p)| *p > threshold).collect();
    if minima.len() < n {
        return Err(FitError::UnderDetermined { found: minima.len(), needed: n });
    }
    let dx = ((x[x.len() - 1] - x[0]) / (x.len() - 1) as f64).abs();
    let mut dips: Vec<[f64; 3]> = minima[..n]
        .iter()
        .map(|&(i, _)| {
            let lo = i.saturating_sub(2);
            let hi = (i + 3).min(y.len());
            let k = (lo..hi).min_by(|a, b| y[*a].total_cmp(&y[*b])).unwrap_or(i);
            let depth = (baseline - y[k]).max(threshold);
            let half = baseline - 0.5 * (baseline - s[i]);
            let mut l = i;
            while l > 0 && s[l] < half {
                l -= 1;
            }
            let mut r = i;
            while r + 1 < s.len() && s[r] < half {
                r += 1;
            }
            let width = (x[r] - x[l]).abs().max(2.0 * dx);
            [x[k], width, depth]
        })
        .collect();
    dips.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let mut p = vec![baseline];
    p.extend(dips.into_iter().flatten());
    Ok(p)
}

fn guess_exp(x: &[f64], y: &[f64]) -> Result<Vec<f64>, FitError> {
    let n = x.len();
    let (y0, yl) = (y[0], y[n - 1]);
    let range = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - y.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(range > 0.0) {
        return Err(FitError::UnderDetermined { found: 0, needed: 1 });
    }
    let span = (x[n - 1] - x[0]).abs().max(f64::MIN_POSITIVE);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for c in [0.0, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0] {
        let cc = yl + (yl - y0) * c;
        let sign = if y0 >= cc { 1.0 } else { -1.0 };
        // weighted log-linear regression, weights (y − C)²
        let (mut sw, mut st, mut sl, mut stt, mut stl) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let mut used = 0;
        for i in 0..n {
            let v = sign * (y[i] - cc);
            if v > 1e-12 * range {
                let w = v * v;
                let l = v.ln();
                sw += w;
                st += w * x[i];
                sl += w * l;
                stt += w * x[i] * x[i];
                stl += w * x[i] * l;
                used += 1;
            }
        }
        if used < 2 {
            continue;
        }
        let det = sw * stt - st * st;
        if !(det.abs() > 0.0) {
            continue;
        }
        let slope = (sw * stl - st * sl) / det;
        let intercept = (sl - slope * st) / sw;
        let t = if slope < 0.0 { -1.0 / slope } else { 10.0 * span };
        let a = sign * intercept.exp();
        let p = vec![a, t, cc];
        let sse: f64 = (0..n).map(|i| (y[i] - super::model_exp_decay(x[i], &p)).powi(2)).sum();
        if sse.is_finite() && best.as_ref().is_none_or(|b| sse < b.0) {
            best = Some((sse, p));
        }
    }
    best.map(|b| b.1).ok_or(FitError::UnderDetermined { found: 0, needed: 1 })
}

fn guess_damped_sin(x: &[f64], y: &[f64]) -> Result<Vec<f64>, FitError> {
    let f = spectral_peaks(x, y, 1)?[0];
    let (tau, c0, tones) = tone_amplitudes(x, y, &[f]);
    let (a, phi) = tones[0];
    Ok(vec![a, f, phi, tau, c0])
}

fn guess_ramsey(x: &[f64], y: &[f64]) -> Result<Vec<f64>, FitError> {
    let mut f = spectral_peaks(x, y, 3)?;
    f.sort_by(f64::total_cmp);
    let (tau, c0, tones) = tone_amplitudes(x, y, &f);
    let b = tones.iter().map(|t| t.0).sum::<f64>() / 3.0;
    Ok(vec![c0, b, tau, f[0], f[1], f[2], tones[0].1, tones[1].1, tones[2].1])
}

/// Heuristic start for `model`: prominence-ranked dips after a 5-point moving
/// average, log-linear regression for exponentials, FFT peaks for
/// oscillations.
pub fn initial_guess(model: FitModel, x: &[f64], y: &[f64]) -> Result<Vec<f64>, FitError> {
    model.validate()?;
    if x.len() != y.len() {
        return Err(FitError::DimensionMismatch { x: x.len(), y: y.len() });
    }
    if x.is_empty() {
        return Err(FitError::TooFewPoints { points: 0, params: model.n_params() });
    }
    if !x.iter().chain(y).all(|v| v.is_finite()) {
        return Err(FitError::NonFinite("data"));
    }
    match model {
        FitModel::LorentzianMulti(n) => guess_lorentzian(n, x, y),
        FitModel::ExpDecay => guess_exp(x, y),
        FitModel::DampedSin => guess_damped_sin(x, y),
        FitModel::Ramsey3Cos => guess_ramsey(x, y),
    }
}
