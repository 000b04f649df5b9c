//! Exponential decay fits and log-linear power-law regression.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_FIT_POINTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub amplitude: f64,
    /// Lifetime T in µs.
    pub lifetime: f64,
    pub floor: f64,
    /// RMS residual over the fitted window.
    pub residual_rms: f64,
    pub n_points: usize,
}

impl DecayFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.floor + self.amplitude * (-t / self.lifetime).exp()
    }

    pub fn rate(&self) -> f64 {
        1.0 / self.lifetime
    }
}

/// Asymptote handling for [`fit_exponential`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Floor {
    Fixed(f64),
    /// Fitted together with amplitude and lifetime.
    Free,
}

fn window(times: &[f64], values: &[f64], transient_cut: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if times.len() != values.len() {
        return Err(Error::Fit(format!(
            "{} times but {} values",
            times.len(),
            values.len()
        )));
    }
    let (t, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= transient_cut)
        .map(|(t, y)| (*t, *y))
        .unzip();
    if t.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "only {} samples after the transient cut; need at least {MIN_FIT_POINTS}",
            t.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite sample".into()));
    }
    Ok((t, y))
}

fn rms(t: &[f64], y: &[f64], floor: f64, amp: f64, k: f64, t0: f64) -> f64 {
    let ss: f64 = t
        .iter()
        .zip(y)
        .map(|(t, y)| (floor + amp * (-k * (t - t0)).exp() - y).powi(2))
        .sum();
    (ss / t.len() as f64).sqrt()
}

/// Least-squares slope and intercept of `y` against `x`.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// For fixed `k`, the best floor/amplitude are linear; returns (floor, amp, ss).
fn project(t: &[f64], y: &[f64], k: f64, t0: f64) -> (f64, f64, f64) {
    let n = t.len() as f64;
    let e: Vec<f64> = t.iter().map(|t| (-k * (t - t0)).exp()).collect();
    let se: f64 = e.iter().sum();
    let see: f64 = e.iter().map(|v| v * v).sum();
    let sy: f64 = y.iter().sum();
    let sey: f64 = e.iter().zip(y).map(|(a, b)| a * b).sum();
    let det = n * see - se * se;
    if det.abs() <= 1e-14 * n * see {
        let floor = sy / n;
        let ss = y.iter().map(|v| (v - floor).powi(2)).sum();
        return (floor, 0.0, ss);
    }
    let amp = (n * sey - se * sy) / det;
    let floor = (sy - amp * se) / n;
    let ss = t
        .iter()
        .zip(y)
        .zip(&e)
        .map(|((_, y), e)| (floor + amp * e - y).powi(2))
        .sum();
    (floor, amp, ss)
}

/// Fit `floor + F·exp(−t/T)` to samples with `t ≥ transient_cut`.
///
/// The seed comes from a straight line through `ln(y − floor)`; Gauss–Newton
/// (or, for a free floor, a variable-projection search over the rate followed
/// by Gauss–Newton) refines it.
pub fn fit_exponential(times: &[f64], values: &[f64], transient_cut: f64, floor: Floor) -> Result<DecayFit> {
    let (t, y) = window(times, values, transient_cut)?;
    let t0 = t[0];
    let span = t[t.len() - 1] - t0;
    if span <= 0.0 {
        return Err(Error::Fit("fit window has zero duration".into()));
    }
    let ymax = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ymin = y.iter().cloned().fold(f64::INFINITY, f64::min);
    if ymax - ymin <= 1e-14 * ymax.abs().max(ymin.abs()).max(1e-300) {
        return Err(Error::Fit("constant series: lifetime is unidentifiable".into()));
    }

    let (fl, amp, k) = match floor {
        Floor::Fixed(f0) => {
            let resid: Vec<f64> = y.iter().map(|v| v - f0).collect();
            let sign = if resid[0] >= 0.0 { 1.0 } else { -1.0 };
            if resid.iter().any(|r| r * sign <= 0.0) {
                return Err(Error::Fit("signal minus floor is not strictly of one sign on the window".into()));
            }
            let logs: Vec<f64> = resid.iter().map(|r| (r * sign).ln()).collect();
            let dt: Vec<f64> = t.iter().map(|v| v - t0).collect();
            let (slope, icpt) = line_fit(&dt, &logs);
            let (amp, k) = gauss_newton_fixed(&dt, &resid, sign * icpt.exp(), -slope);
            (f0, amp, k)
        }
        Floor::Free => {
            let dt: Vec<f64> = t.iter().map(|v| v - t0).collect();
            // seed rate from a log fit against a floor just past the extreme
            let descending = y[0] >= y[y.len() - 1];
            let margin = 1e-3 * (ymax - ymin);
            let f_seed = if descending { ymin - margin } else { ymax + margin };
            let logs: Vec<f64> = y.iter().map(|v| (v - f_seed).abs().ln()).collect();
            let (slope, _) = line_fit(&dt, &logs);
            let k_seed = (-slope).abs().max(0.01 / span);
            let k = golden_log_search(&t, &y, t0, k_seed / 1e3, (k_seed * 1e3).max(1e3 / span));
            let (f, a, _) = project(&t, &y, k, t0);
            let (f, a, k) = gauss_newton_free(&dt, &y, f, a, k);
            (f, a, k)
        }
    };

    if !(k.is_finite() && k > 0.0) {
        return Err(Error::Fit(format!("fitted rate {k:e} is not positive; lifetime unidentifiable")));
    }
    // amplitude referenced to t = 0 rather than the window start
    let amplitude = amp * (k * t0).exp();
    let residual_rms = rms(&t, &y, fl, amp, k, t0);
    Ok(DecayFit {
        amplitude,
        lifetime: 1.0 / k,
        floor: fl,
        residual_rms,
        n_points: t.len(),
    })
}

fn gauss_newton_fixed(t: &[f64], r: &[f64], mut amp: f64, mut k: f64) -> (f64, f64) {
    let ss = |amp: f64, k: f64| -> f64 { t.iter().zip(r).map(|(t, r)| (amp * (-k * t).exp() - r).powi(2)).sum() };
    let mut cur = ss(amp, k);
    for _ in 0..100 {
        // normal equations for (δamp, δk)
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (t, r) in t.iter().zip(r) {
            let e = (-k * t).exp();
            let res = r - amp * e;
            let ja = e;
            let jk = -amp * t * e;
            a11 += ja * ja;
            a12 += ja * jk;
            a22 += jk * jk;
            b1 += ja * res;
            b2 += jk * res;
        }
        let det = a11 * a22 - a12 * a12;
        if det.abs() < 1e-300 {
            break;
        }
        let da = (a22 * b1 - a12 * b2) / det;
        let dk = (a11 * b2 - a12 * b1) / det;
        let mut lambda = 1.0;
        let mut improved = false;
        while lambda > 1e-6 {
            let (na, nk) = (amp + lambda * da, k + lambda * dk);
            let s = ss(na, nk);
            if s <= cur {
                amp = na;
                k = nk;
                let rel = (cur - s) / cur.max(1e-300);
                cur = s;
                improved = rel > 1e-15;
                break;
            }
            lambda *= 0.5;
        }
        if !improved || (dk.abs() <= 1e-14 * k.abs() && da.abs() <= 1e-14 * amp.abs()) {
            break;
        }
    }
    (amp, k)
}

fn golden_log_search(t: &[f64], y: &[f64], t0: f64, k_lo: f64, k_hi: f64) -> f64 {
    let f = |lk: f64| project(t, y, lk.exp(), t0).2;
    // coarse scan picks the basin, golden section polishes it
    let (a, b) = (k_lo.ln(), k_hi.ln());
    let n = 60;
    let mut best = (a, f64::INFINITY);
    for i in 0..=n {
        let x = a + (b - a) * i as f64 / n as f64;
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let step = (b - a) / n as f64;
    let (mut lo, mut hi) = (best.0 - step, best.0 + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo < 1e-12 {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    (0.5 * (lo + hi)).exp()
}

fn gauss_newton_free(t: &[f64], y: &[f64], mut fl: f64, mut amp: f64, mut k: f64) -> (f64, f64, f64) {
    let ss = |fl: f64, amp: f64, k: f64| -> f64 {
        t.iter().zip(y).map(|(t, y)| (fl + amp * (-k * t).exp() - y).powi(2)).sum()
    };
    let mut cur = ss(fl, amp, k);
    for _ in 0..100 {
        let mut m = [[0.0f64; 3]; 3];
        let mut b = [0.0f64; 3];
        for (t, y) in t.iter().zip(y) {
            let e = (-k * t).exp();
            let res = y - fl - amp * e;
            let j = [1.0, e, -amp * t * e];
            for p in 0..3 {
                b[p] += j[p] * res;
                for q in 0..3 {
                    m[p][q] += j[p] * j[q];
                }
            }
        }
        let Some(d) = solve3(m, b) else { break };
        let mut lambda = 1.0;
        let mut improved = false;
        while lambda > 1e-6 {
            let cand = (fl + lambda * d[0], amp + lambda * d[1], k + lambda * d[2]);
            let s = ss(cand.0, cand.1, cand.2);
            if s <= cur && cand.2 > 0.0 {
                let rel = (cur - s) / cur.max(1e-300);
                (fl, amp, k) = cand;
                cur = s;
                improved = rel > 1e-15;
                break;
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (fl, amp, k)
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    for c in 0..3 {
        let p = (c..3).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c].abs() <= 1e-14 * scale {
            return None;
        }
        m.swap(c, p);
        b.swap(c, p);
        for r in c + 1..3 {
            let f = m[r][c] / m[c][c];
            for q in c..3 {
                m[r][q] -= f * m[c][q];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = [0.0; 3];
    for c in (0..3).rev() {
        x[c] = (b[c] - (c + 1..3).map(|q| m[c][q] * x[q]).sum::<f64>()) / m[c][c];
    }
    Some(x)
}

/// One dephasing sample `(W, Δω_10, Γ_sw, T2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerSample {
    pub w: f64,
    pub delta_omega: f64,
    pub gamma_sw: f64,
    pub t2: f64,
}

/// `T2 ≈ a · W^b · Δω^c · Γ^d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// RMS residual of the log-domain fit.
    pub log_residual_rms: f64,
}

impl PowerLaw {
    pub fn eval(&self, w: f64, delta_omega: f64, gamma_sw: f64) -> f64 {
        self.a * w.powf(self.b) * delta_omega.powf(self.c) * gamma_sw.powf(self.d)
    }
}

fn distinct(values: impl Iterator<Item = f64>) -> usize {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    v.len()
}

pub fn fit_powerlaw_multi(samples: &[PowerSample]) -> Result<PowerLaw> {
    if samples.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "{} samples; need at least {MIN_FIT_POINTS}",
            samples.len()
        )));
    }
    for s in samples {
        if !(s.w > 0.0 && s.delta_omega > 0.0 && s.gamma_sw > 0.0 && s.t2 > 0.0)
            || !(s.w.is_finite() && s.delta_omega.is_finite() && s.gamma_sw.is_finite() && s.t2.is_finite())
        {
            return Err(Error::param("samples", "all values must be finite and positive"));
        }
    }
    if distinct(samples.iter().map(|s| s.w)) < 2
        || distinct(samples.iter().map(|s| s.delta_omega)) < 2
        || distinct(samples.iter().map(|s| s.gamma_sw)) < 2
    {
        return Err(Error::RankDeficient);
    }
    let rows: Vec<([f64; 3], f64)> = samples
        .iter()
        .map(|s| ([s.w.ln(), s.delta_omega.ln(), s.gamma_sw.ln()], s.t2.ln()))
        .collect();
    let n = rows.len() as f64;
    let mut mean_x = [0.0; 3];
    let mut mean_y = 0.0;
    for (x, y) in &rows {
        for p in 0..3 {
            mean_x[p] += x[p] / n;
        }
        mean_y += y / n;
    }
    // centered normal equations for the exponents; intercept follows
    let mut m = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for (x, y) in &rows {
        let xc = [x[0] - mean_x[0], x[1] - mean_x[1], x[2] - mean_x[2]];
        for p in 0..3 {
            b[p] += xc[p] * (y - mean_y);
            for q in 0..3 {
                m[p][q] += xc[p] * xc[q];
            }
        }
    }
    let coef = solve3(m, b).ok_or(Error::RankDeficient)?;
    let ln_a = mean_y - (0..3).map(|p| coef[p] * mean_x[p]).sum::<f64>();
    let ss: f64 = rows
        .iter()
        .map(|(x, y)| (ln_a + coef[0] * x[0] + coef[1] * x[1] + coef[2] * x[2] - y).powi(2))
        .sum();
    Ok(PowerLaw {
        a: ln_a.exp(),
        b: coef[0],
        c: coef[1],
        d: coef[2],
        log_residual_rms: (ss / n).sqrt(),
    })
}
