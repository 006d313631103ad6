//! Collapse and revival timescales: the analytic estimates and an empirical
//! detector working on sampled inversion traces.
//!
//! All times are in the scaled time `gt`.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::closed_form::InversionTrace;
use crate::error::{Error, Result};
use crate::hamiltonian::coupling_factor;

/// Minimum prominence of an envelope peak to count as a revival.
pub const MIN_PROMINENCE: f64 = 0.05;
/// Fewest samples a revival-detection window may hold.
pub const MIN_WINDOW_SAMPLES: usize = 50;
/// Envelope window length in periods of the dominant Rabi oscillation.
pub const ENVELOPE_RABI_PERIODS: f64 = 5.0;

fn expansion_denominator(mbar: f64, eta: f64) -> Result<f64> {
    let d = coupling_factor(eta, mbar);
    if d <= 0.0 {
        return Err(Error::ExpansionInvalid { value: 1.0 - d, m: mbar });
    }
    Ok(d)
}

fn check_order(k: u32) -> Result<()> {
    if k == 0 {
        Err(Error::InvalidParameter { name: "k", reason: "revival order starts at 1".into() })
    } else {
        Ok(())
    }
}

fn check_nonneg(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason: format!("{v} must be finite and >= 0") })
    }
}

/// Field revivals, `2kπ√n̄ / (1 − η²(1+2m̄)/2)`. A vacuum field (`n̄ = 0`)
/// gives 0: there is no field-driven dephasing to revive from.
pub fn field_revival_time(nbar: f64, mbar: f64, eta: f64, k: u32) -> Result<f64> {
    check_order(k)?;
    check_nonneg("nbar", nbar)?;
    check_nonneg("mbar", mbar)?;
    let d = expansion_denominator(mbar, eta)?;
    Ok(2.0 * k as f64 * PI * nbar.sqrt() / d)
}

/// Vibrational (super-)revivals, `kπ / (η²√(n̄+1))`.
pub fn vib_revival_time(nbar: f64, eta: f64, k: u32) -> Result<f64> {
    check_order(k)?;
    check_nonneg("nbar", nbar)?;
    check_nonneg("eta", eta)?;
    if eta == 0.0 {
        return Err(Error::Unbounded { what: "vibrational revival", reason: "eta = 0" });
    }
    Ok(k as f64 * PI / (eta * eta * (nbar + 1.0).sqrt()))
}

/// Field collapse scale, `1 / (1 − η²(1+2m̄)/2)`.
pub fn field_collapse_time(mbar: f64, eta: f64) -> Result<f64> {
    check_nonneg("mbar", mbar)?;
    Ok(1.0 / expansion_denominator(mbar, eta)?)
}

/// Vibrational collapse scale, `1 / (η²√(m̄(n̄+1)))`.
pub fn vib_collapse_time(nbar: f64, mbar: f64, eta: f64) -> Result<f64> {
    check_nonneg("nbar", nbar)?;
    check_nonneg("mbar", mbar)?;
    check_nonneg("eta", eta)?;
    if eta == 0.0 {
        return Err(Error::Unbounded { what: "vibrational collapse", reason: "eta = 0" });
    }
    if mbar == 0.0 {
        return Err(Error::Unbounded { what: "vibrational collapse", reason: "mbar = 0" });
    }
    Ok(1.0 / (eta * eta * (mbar * (nbar + 1.0)).sqrt()))
}

/// Period of the dominant Rabi oscillation of `W`, `π / ((1 − η²(1+2m̄)/2)√(n̄+1))`.
pub fn dominant_rabi_period(nbar: f64, mbar: f64, eta: f64) -> Result<f64> {
    let d = expansion_denominator(mbar, eta)?;
    Ok(PI / (d * (nbar + 1.0).sqrt()))
}

/// Envelope window of [`ENVELOPE_RABI_PERIODS`] dominant Rabi periods.
pub fn default_window(nbar: f64, mbar: f64, eta: f64) -> Result<f64> {
    Ok(ENVELOPE_RABI_PERIODS * dominant_rabi_period(nbar, mbar, eta)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RevivalPeak {
    pub gt_center: f64,
    pub peak: f64,
    pub prominence: f64,
}

/// Predicted timescales plus whatever the detector found.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimescaleReport {
    /// `gt_r^f(k)`, `k = 1..=K`.
    pub field_revivals: Vec<f64>,
    /// `gt_r^v(k)`; empty when the vibrational revival is infinite (η = 0).
    pub vib_revivals: Vec<f64>,
    pub field_collapse: f64,
    /// `None` when the vibrational collapse is infinite (η = 0 or m̄ = 0).
    pub vib_collapse: Option<f64>,
    pub detected_revivals: Vec<RevivalPeak>,
}

impl TimescaleReport {
    pub fn predict(nbar: f64, mbar: f64, eta: f64, k_max: u32) -> Result<Self> {
        let field_revivals = (1..=k_max).map(|k| field_revival_time(nbar, mbar, eta, k)).collect::<Result<_>>()?;
        let vib_revivals = match vib_revival_time(nbar, eta, 1) {
            Ok(_) => (1..=k_max).map(|k| vib_revival_time(nbar, eta, k)).collect::<Result<_>>()?,
            Err(Error::Unbounded { .. }) => Vec::new(),
            Err(e) => return Err(e),
        };
        let vib_collapse = match vib_collapse_time(nbar, mbar, eta) {
            Ok(t) => Some(t),
            Err(Error::Unbounded { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            field_revivals,
            vib_revivals,
            field_collapse: field_collapse_time(mbar, eta)?,
            vib_collapse,
            detected_revivals: Vec::new(),
        })
    }

    pub fn with_detected(mut self, peaks: Vec<RevivalPeak>) -> Self {
        self.detected_revivals = peaks;
        self
    }

    /// Detected peak closest to `gt`.
    pub fn nearest_detected(&self, gt: f64) -> Option<RevivalPeak> {
        nearest_peak(&self.detected_revivals, gt)
    }
}

pub fn nearest_peak(peaks: &[RevivalPeak], gt: f64) -> Option<RevivalPeak> {
    peaks.iter().copied().min_by(|a, b| (a.gt_center - gt).abs().total_cmp(&(b.gt_center - gt).abs()))
}

fn window_samples(trace: &InversionTrace, window: f64) -> Result<usize> {
    let step = trace.step().filter(|s| *s > 0.0).ok_or_else(|| Error::InvalidParameter {
        name: "trace",
        reason: "needs a uniform grid of >= 2 samples".into(),
    })?;
    if !(window.is_finite() && window > 0.0) {
        return Err(Error::InvalidParameter { name: "window", reason: format!("{window} must be > 0") });
    }
    Ok((window / step).round() as usize)
}

/// Centered sliding maximum of `|W|` over `samples` points.
pub fn sliding_envelope(values: &[f64], samples: usize) -> Vec<f64> {
    let half = samples / 2;
    let abs: Vec<f64> = values.iter().map(|w| w.abs()).collect();
    let n = abs.len();
    // monotone deque of indices with decreasing values
    let mut deque = std::collections::VecDeque::new();
    let mut out = Vec::with_capacity(n);
    let mut next = 0;
    for i in 0..n {
        let hi = (i + half).min(n - 1);
        while next <= hi {
            while deque.back().is_some_and(|&j: &usize| abs[j] <= abs[next]) {
                deque.pop_back();
            }
            deque.push_back(next);
            next += 1;
        }
        let lo = i.saturating_sub(half);
        while deque.front().is_some_and(|&j| j < lo) {
            deque.pop_front();
        }
        out.push(abs[*deque.front().expect("window is never empty")]);
    }
    out
}

/// Sliding-window envelope of a trace, window given in `gt`.
pub fn envelope(trace: &InversionTrace, window: f64) -> Result<Vec<f64>> {
    let samples = window_samples(trace, window)?;
    Ok(sliding_envelope(&trace.values, samples.max(1)))
}

/// Interior local maxima of `y` with their prominences. Flat tops report
/// their middle sample.
pub fn find_peaks(y: &[f64]) -> Vec<(usize, f64)> {
    let n = y.len();
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if y[i] > y[i - 1] {
            let mut j = i;
            while j + 1 < n && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < n && y[j + 1] < y[i] {
                peaks.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
        .into_iter()
        .map(|p| {
            let top = y[p];
            let mut left_min = top;
            let mut k = p;
            while k > 0 && y[k - 1] <= top {
                k -= 1;
                left_min = left_min.min(y[k]);
            }
            let mut right_min = top;
            let mut k = p;
            while k + 1 < n && y[k + 1] <= top {
                k += 1;
                right_min = right_min.min(y[k]);
            }
            (p, top - left_min.max(right_min))
        })
        .collect()
}

/// Revivals as peaks of the sliding-window envelope with prominence at least
/// [`MIN_PROMINENCE`]. The window must hold [`MIN_WINDOW_SAMPLES`] samples.
pub fn detect_revivals(trace: &InversionTrace, window: f64) -> Result<Vec<RevivalPeak>> {
    let samples = window_samples(trace, window)?;
    if samples < MIN_WINDOW_SAMPLES {
        return Err(Error::Resolution { window, samples, required: MIN_WINDOW_SAMPLES });
    }
    let env = sliding_envelope(&trace.values, samples);
    Ok(find_peaks(&env)
        .into_iter()
        .filter(|&(_, prom)| prom >= MIN_PROMINENCE)
        .map(|(i, prominence)| RevivalPeak { gt_center: trace.times[i], peak: env[i], prominence })
        .collect())
}

/// Largest envelope value within `[lo, hi]`.
pub fn envelope_max_in(trace: &InversionTrace, window: f64, lo: f64, hi: f64) -> Result<f64> {
    let env = envelope(trace, window)?;
    Ok(trace.times.iter().zip(&env).filter(|(t, _)| **t >= lo && **t <= hi).map(|(_, e)| *e).fold(0.0, f64::max))
}

/// First `gt` after which `|W|` stays below `|W(0)|/e` for a whole
/// `window`. `None` if that never happens within the trace.
pub fn detect_collapse(trace: &InversionTrace, window: f64) -> Result<Option<f64>> {
    let samples = window_samples(trace, window)?;
    if samples < 2 {
        return Err(Error::Resolution { window, samples, required: 2 });
    }
    let threshold = trace.values.first().map_or(0.0, |w| w.abs()) / E;
    let abs: Vec<f64> = trace.values.iter().map(|w| w.abs()).collect();
    let mut quiet = 0usize;
    for (i, a) in abs.iter().enumerate() {
        if *a < threshold {
            quiet += 1;
            if quiet >= samples {
                return Ok(Some(trace.times[i + 1 - samples]));
            }
        } else {
            quiet = 0;
        }
    }
    Ok(None)
}
