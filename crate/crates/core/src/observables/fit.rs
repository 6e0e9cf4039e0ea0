//! Decay-rate extraction: `M(t) = a e^{-lambda t} + b e^{-Gamma t}` fitted to
//! `ln M` between the end of the initial plateau and the saturation floor.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{EchoError, Result};

use super::trace::DecayTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    Single,
    Double,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Prefactor of the Lyapunov term.
    pub a: f64,
    /// Prefactor of the golden-rule term; 0 for a single exponential.
    pub b: f64,
    pub rate_lyapunov: f64,
    pub rate_fgr: f64,
    pub rate_lyapunov_err: f64,
    pub rate_fgr_err: f64,
    pub fit_window: [f64; 2],
    /// RMS of the log residuals of the selected model.
    pub residual: f64,
    pub floor: f64,
    pub model: FitModel,
    pub n_points: usize,
    pub residual_single: f64,
    pub residual_double: Option<f64>,
    pub n_bootstrap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    /// Explicit `[t_lo, t_hi]`; replaces the automatic window.
    pub window: Option<[f64; 2]>,
    /// The window starts once `M < upper * M(0)`.
    pub upper: f64,
    /// The window ends before `M <= floor_factor * floor`.
    pub floor_factor: f64,
    pub min_points: usize,
    /// Relative residual improvement required to accept two exponentials.
    pub double_gain: f64,
    /// Rates closer than this (relative) collapse to one exponential.
    pub degenerate_ratio: f64,
    pub n_bootstrap: usize,
    pub seed: u64,
    /// Disables model selection and fits a single exponential only.
    pub single_only: bool,
    /// Fit `ln(M - floor)` instead of `ln M`, so the approach to saturation
    /// does not bend the tail of the window.
    pub subtract_floor: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            window: None,
            upper: 0.9,
            floor_factor: 3.0,
            min_points: 20,
            double_gain: 0.2,
            degenerate_ratio: 0.1,
            n_bootstrap: 100,
            seed: 0,
            single_only: false,
            subtract_floor: true,
        }
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Median of the last 10% of the trace when that tail is flat, else 0.
/// Flat means the relative slope of the tail, from a straight-line fit, is
/// below half the average log-decay rate of the whole trace.
/// Realizations are shared between checkpoints, so Monte-Carlo noise is
/// correlated along the trace and does not mask a genuine downward trend.
pub fn detect_floor(trace: &DecayTrace) -> f64 {
    let n = trace.len();
    let k = (n / 10).max(3).min(n);
    if k < 3 {
        return 0.0;
    }
    let tail = &trace.m_bar[n - k..];
    let t_tail = &trace.times[n - k..];
    let med = median(tail);
    if !(med > 0.0) {
        return 0.0;
    }
    let (_, slope, _) = linear_fit(t_tail, tail);
    let elapsed = 0.5 * (t_tail[0] + t_tail[k - 1]) - trace.times[0];
    let mean_rate = if elapsed > 0.0 { (trace.m_bar[0] / med).ln().max(0.0) / elapsed } else { 0.0 };
    if -slope / med <= 0.5 * mean_rate {
        med
    } else {
        0.0
    }
}

/// Ordinary least squares `y = c0 + c1 t`; returns `(c0, c1, rms)`.
fn linear_fit(t: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = t.len() as f64;
    let mt = t.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in t.iter().zip(y) {
        sxx += (a - mt) * (a - mt);
        sxy += (a - mt) * (b - my);
    }
    let c1 = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let c0 = my - c1 * mt;
    let rms = (t.iter().zip(y).map(|(a, b)| (b - c0 - c1 * a).powi(2)).sum::<f64>() / n).sqrt();
    (c0, c1, rms)
}

/// Parameters `[ln a, ln b, ln r1, ln r2]` of `ln(a e^{-r1 t} + b e^{-r2 t})`.
type DoubleParams = [f64; 4];

fn double_model(p: &DoubleParams, t: f64) -> (f64, [f64; 4]) {
    let r1 = p[2].exp();
    let r2 = p[3].exp();
    let lu = p[0] - r1 * t;
    let lv = p[1] - r2 * t;
    let m = lu.max(lv);
    let u = (lu - m).exp();
    let v = (lv - m).exp();
    let s = u + v;
    let f = m + s.ln();
    (f, [u / s, v / s, -t * r1 * u / s, -t * r2 * v / s])
}

fn rms_double(p: &DoubleParams, t: &[f64], y: &[f64]) -> f64 {
    let ss: f64 = t.iter().zip(y).map(|(ti, yi)| (double_model(p, *ti).0 - yi).powi(2)).sum();
    (ss / t.len() as f64).sqrt()
}

/// Solves the symmetric positive-definite system `a x = b` in place.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for c in 0..4 {
        let piv = (c..4).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..4 {
            let f = a[r][c] / a[c][c];
            for k in c..4 {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = [0.0; 4];
    for r in (0..4).rev() {
        let s: f64 = (r + 1..4).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Levenberg-Marquardt on the two-exponential log model.
fn lm_double(start: DoubleParams, t: &[f64], y: &[f64]) -> (DoubleParams, f64) {
    let mut p = start;
    let mut cost = rms_double(&p, t, y);
    let mut mu = 1e-3;
    for _ in 0..500 {
        let mut jtj = [[0.0; 4]; 4];
        let mut jtr = [0.0; 4];
        for (ti, yi) in t.iter().zip(y) {
            let (f, g) = double_model(&p, *ti);
            let r = f - yi;
            for i in 0..4 {
                jtr[i] += g[i] * r;
                for k in 0..4 {
                    jtj[i][k] += g[i] * g[k];
                }
            }
        }
        let mut improved = false;
        while mu < 1e12 {
            let mut a = jtj;
            for i in 0..4 {
                a[i][i] += mu * (jtj[i][i] + 1e-12);
            }
            let Some(step) = solve4(a, jtr.map(|v| -v)) else {
                mu *= 10.0;
                continue;
            };
            let mut trial = p;
            for i in 0..4 {
                // keep rates within a sane range of e-folds per step
                trial[i] += step[i].clamp(-5.0, 5.0);
            }
            let c = rms_double(&trial, t, y);
            if c.is_finite() && c < cost {
                let rel = (cost - c) / cost.max(1e-300);
                p = trial;
                cost = c;
                mu = (mu / 3.0).max(1e-12);
                improved = true;
                if rel < 1e-14 {
                    return (p, cost);
                }
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            break;
        }
    }
    (p, cost)
}

struct Window {
    t: Vec<f64>,
    y: Vec<f64>,
    sigma_y: Vec<f64>,
    m: Vec<f64>,
}

fn select_window(trace: &DecayTrace, floor: f64, opts: &FitOptions) -> Result<Window> {
    let m0 = trace.m_bar[0];
    let upper = opts.upper * m0;
    if !trace.m_bar.iter().any(|m| *m < upper) {
        return Err(EchoError::InsufficientDecay);
    }
    let idx: Vec<usize> = match opts.window {
        Some([lo, hi]) => (0..trace.len())
            .filter(|&i| trace.times[i] >= lo && trace.times[i] <= hi && trace.m_bar[i] > 0.0)
            .collect(),
        None => {
            let start = trace.m_bar.iter().position(|m| *m < upper).unwrap();
            let lower = opts.floor_factor * floor;
            (start..trace.len())
                .take_while(|&i| trace.m_bar[i] > lower && trace.m_bar[i] > 0.0)
                .collect()
        }
    };
    let level = if opts.subtract_floor { floor } else { 0.0 };
    let idx: Vec<usize> = idx.into_iter().filter(|&i| trace.m_bar[i] > level).collect();
    if idx.len() < opts.min_points.max(3) {
        return Err(EchoError::FloorDominated(format!(
            "{} points in the fit window, need {}",
            idx.len(),
            opts.min_points.max(3)
        )));
    }
    Ok(Window {
        t: idx.iter().map(|&i| trace.times[i]).collect(),
        y: idx.iter().map(|&i| (trace.m_bar[i] - level).ln()).collect(),
        sigma_y: idx.iter().map(|&i| trace.m_stderr[i] / (trace.m_bar[i] - level)).collect(),
        m: idx.iter().map(|&i| trace.m_bar[i] - level).collect(),
    })
}

/// Fitted components, slow first.
#[derive(Debug, Clone, Copy)]
struct Components {
    model: FitModel,
    slow: (f64, f64),
    fast: (f64, f64),
    residual: f64,
}

fn single_fit(t: &[f64], y: &[f64]) -> Components {
    let (c0, c1, rms) = linear_fit(t, y);
    let r = (-c1).max(0.0);
    Components { model: FitModel::Single, slow: (c0.exp(), r), fast: (0.0, r), residual: rms }
}

fn to_components(p: &DoubleParams, residual: f64) -> Components {
    let c1 = (p[0].exp(), p[2].exp());
    let c2 = (p[1].exp(), p[3].exp());
    let (slow, fast) = if c1.1 <= c2.1 { (c1, c2) } else { (c2, c1) };
    Components { model: FitModel::Double, slow, fast, residual }
}

fn double_starts(w: &Window, seed_rate: f64) -> Vec<DoubleParams> {
    let n = w.t.len();
    let h = n / 2;
    let whole = single_fit(&w.t, &w.y);
    let early = single_fit(&w.t[..h.max(3)], &w.y[..h.max(3)]);
    let late = single_fit(&w.t[h.min(n - 3)..], &w.y[h.min(n - 3)..]);
    let lr = |r: f64| r.max(1e-6).ln();
    let la = |a: f64| a.max(1e-12).ln();
    // early residual after removing the late component
    let fast_from_residual = {
        let pts: Vec<(f64, f64)> = w
            .t
            .iter()
            .zip(&w.m)
            .take(h.max(3))
            .filter_map(|(t, m)| {
                let r = m - late.slow.0 * (-late.slow.1 * t).exp();
                (r > 0.0).then(|| (*t, r.ln()))
            })
            .collect();
        if pts.len() >= 3 {
            let (tt, yy): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            let f = single_fit(&tt, &yy);
            Some(f.slow)
        } else {
            None
        }
    };
    let mut starts = Vec::with_capacity(4);
    let (fa, fr) = fast_from_residual.unwrap_or((0.5 * late.slow.0, 3.0 * late.slow.1.max(1e-3)));
    starts.push([la(late.slow.0), la(fa), lr(late.slow.1), lr(fr.max(late.slow.1 * 1.5))]);
    starts.push([la(0.5 * whole.slow.0), la(0.5 * whole.slow.0), lr(0.5 * whole.slow.1), lr(2.0 * whole.slow.1)]);
    starts.push([la(0.5 * late.slow.0), la(0.5 * early.slow.0), lr(late.slow.1), lr(early.slow.1.max(late.slow.1 * 1.5))]);
    starts.push([la(0.5 * whole.slow.0), la(0.5 * whole.slow.0), lr(whole.slow.1), lr(seed_rate)]);
    starts
}

fn best_double(w: &Window, seed_rate: f64, fgr_of: &dyn Fn(&Components) -> f64) -> Components {
    let mut best: Option<Components> = None;
    for s in double_starts(w, seed_rate) {
        let (p, cost) = lm_double(s, &w.t, &w.y);
        let c = to_components(&p, cost);
        best = match best {
            None => Some(c),
            Some(b) => {
                let tie = (c.residual - b.residual).abs() <= 1e-12 * b.residual.max(1e-300);
                if c.residual < b.residual && !tie || tie && fgr_of(&c) < fgr_of(&b) {
                    Some(c)
                } else {
                    Some(b)
                }
            }
        };
    }
    best.unwrap()
}

/// `(a, rate_lyapunov, b, rate_fgr)` of a fitted model.
fn assign(c: &Components, fgr_target: Option<f64>) -> (f64, f64, f64, f64) {
    match c.model {
        FitModel::Single => (c.slow.0, c.slow.1, 0.0, c.slow.1),
        FitModel::Double => {
            let fast_is_fgr = match fgr_target {
                Some(g) if g > 0.0 => (c.fast.1 / g).ln().abs() <= (c.slow.1.max(1e-300) / g).ln().abs(),
                _ => true,
            };
            if fast_is_fgr {
                (c.slow.0, c.slow.1, c.fast.0, c.fast.1)
            } else {
                (c.fast.0, c.fast.1, c.slow.0, c.slow.1)
            }
        }
    }
}

fn fit_window(w: &Window, fgr_target: Option<f64>, opts: &FitOptions) -> (Components, Components, Option<Components>) {
    let single = single_fit(&w.t, &w.y);
    if opts.single_only || w.t.len() < 6 {
        return (single, single, None);
    }
    let seed_rate = match fgr_target {
        Some(g) if g > 0.0 => g,
        _ => {
            // early-time slope over the first few points of the window
            let k = (w.t.len() / 5).max(3);
            (2.0 * single_fit(&w.t[..k], &w.y[..k]).slow.1).max(2.0 * single.slow.1).max(1e-3)
        }
    };
    let fgr_of = |c: &Components| assign(c, fgr_target).3;
    let double = best_double(w, seed_rate, &fgr_of);
    let degenerate = (double.fast.1 - double.slow.1).abs() <= opts.degenerate_ratio * double.fast.1
        || double.slow.0 <= 1e-9 * double.fast.0
        || double.fast.0 <= 1e-9 * double.slow.0;
    let better = double.residual < (1.0 - opts.double_gain) * single.residual;
    let chosen = if better && !degenerate { double } else { single };
    (chosen, single, Some(double))
}

/// Decay rate `-d ln y / dt` from a straight-line fit of `ln y` over the
/// points of `window` where `y > 0`.
pub fn window_log_rate(times: &[f64], values: &[f64], window: [f64; 2]) -> Result<f64> {
    let (t, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(t, v)| **t >= window[0] && **t <= window[1] && **v > 0.0)
        .map(|(t, v)| (*t, v.ln()))
        .unzip();
    if t.len() < 3 {
        return Err(EchoError::FloorDominated(format!("{} positive points in {window:?}", t.len())));
    }
    Ok(-linear_fit(&t, &y).1)
}

/// Fits `trace` with default options. `diffusion_d * k_p_hint^2`, when a hint
/// is given, seeds and identifies the golden-rule component.
pub fn fit_decay_rates(trace: &DecayTrace, diffusion_d: f64, k_p_hint: Option<f64>) -> Result<RateFit> {
    fit_decay_rates_with(trace, diffusion_d, k_p_hint, &FitOptions::default())
}

pub fn fit_decay_rates_with(
    trace: &DecayTrace,
    diffusion_d: f64,
    k_p_hint: Option<f64>,
    opts: &FitOptions,
) -> Result<RateFit> {
    trace.validate()?;
    if trace.is_empty() {
        return Err(EchoError::MissingSeries("m_bar"));
    }
    let floor = detect_floor(trace);
    let w = select_window(trace, floor, opts)?;
    let fgr_target = k_p_hint.map(|k| diffusion_d * k * k);
    let (chosen, single, double) = fit_window(&w, fgr_target, opts);
    let (a, rl, b, rf) = assign(&chosen, fgr_target);

    // parametric bootstrap from the Monte-Carlo error bars
    let mut boot_l = Vec::new();
    let mut boot_f = Vec::new();
    let noisy = w.sigma_y.iter().any(|s| *s > 0.0);
    if noisy && opts.n_bootstrap > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let fitted: Vec<f64> = w
            .t
            .iter()
            .map(|t| match chosen.model {
                FitModel::Single => chosen.slow.0.ln() - chosen.slow.1 * t,
                FitModel::Double => {
                    (chosen.slow.0 * (-chosen.slow.1 * t).exp() + chosen.fast.0 * (-chosen.fast.1 * t).exp()).ln()
                }
            })
            .collect();
        for _ in 0..opts.n_bootstrap {
            let y: Vec<f64> = fitted
                .iter()
                .zip(&w.sigma_y)
                .map(|(f, s)| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    f + s * z
                })
                .collect();
            let c = match chosen.model {
                FitModel::Single => single_fit(&w.t, &y),
                FitModel::Double => {
                    let start = [chosen.slow.0.ln(), chosen.fast.0.ln(), chosen.slow.1.ln(), chosen.fast.1.ln()];
                    let (p, cost) = lm_double(start, &w.t, &y);
                    to_components(&p, cost)
                }
            };
            let (_, l, _, f) = assign(&c, fgr_target);
            boot_l.push(l);
            boot_f.push(f);
        }
    }
    let sd = |v: &[f64]| {
        if v.len() < 2 {
            return 0.0;
        }
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    };
    Ok(RateFit {
        a,
        b,
        rate_lyapunov: rl,
        rate_fgr: rf,
        rate_lyapunov_err: sd(&boot_l),
        rate_fgr_err: sd(&boot_f),
        fit_window: [w.t[0], *w.t.last().unwrap()],
        residual: chosen.residual,
        floor,
        model: chosen.model,
        n_points: w.t.len(),
        residual_single: single.residual,
        residual_double: double.map(|d| d.residual),
        n_bootstrap: if noisy { opts.n_bootstrap } else { 0 },
    })
}
