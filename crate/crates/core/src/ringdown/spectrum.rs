//! Windowed-DFT amplitude of the oscillation within one block.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};

/// Rows whose peak is below this multiple of the median noise floor are
/// flagged.
pub const LOW_SNR_THRESHOLD: f64 = 3.0;

/// Peak search half-width around the hinted bin.
const SEARCH_BINS: usize = 2;

/// Bins on each side of the peak left out of the noise-floor estimate.
const PEAK_EXCLUSION_BINS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockAmplitude {
    /// Hz
    pub frequency: f64,
    pub amplitude: f64,
    pub snr: f64,
    pub low_snr: bool,
}

/// Hann response relative to its centre, at `delta` bins off-centre.
fn hann_gain(delta: f64) -> f64 {
    if delta.abs() < 1e-12 {
        return 1.0;
    }
    let x = PI * delta;
    (x.sin() / x / (1.0 - delta * delta)).abs()
}

/// Amplitude of the spectral line nearest `f0_hint` in a uniformly sampled
/// block. Uses a periodic Hann window, parabolic interpolation of the log
/// magnitude and the window's coherent gain.
pub fn block_amplitude(samples: &[f64], sample_rate: f64, f0_hint: f64) -> Result<BlockAmplitude> {
    if !(f0_hint > 0.0 && f0_hint.is_finite()) {
        return Err(Error::Config(format!("frequency hint must be positive, got {f0_hint}")));
    }
    let n = samples.len();
    let duration = n as f64 / sample_rate;
    if duration * f0_hint < 20.0 {
        return Err(Error::Data(format!(
            "block of {duration} s holds fewer than 20 periods at {f0_hint} Hz"
        )));
    }
    let hint_bin = (f0_hint * duration).round() as usize;
    if hint_bin + SEARCH_BINS + 1 >= n / 2 {
        return Err(Error::Data(format!("frequency hint {f0_hint} Hz is above Nyquist")));
    }

    let window: Vec<f64> = (0..n).map(|j| 0.5 - 0.5 * (2.0 * PI * j as f64 / n as f64).cos()).collect();
    let window_sum: f64 = window.iter().sum();
    let mut buf: Vec<Complex<f64>> = samples
        .iter()
        .zip(&window)
        .map(|(x, w)| Complex::new(x * w, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mag: Vec<f64> = buf[..n / 2].iter().map(|c| c.norm()).collect();

    let lo = hint_bin.saturating_sub(SEARCH_BINS).max(1);
    let hi = hint_bin + SEARCH_BINS;
    let k = (lo..=hi).max_by(|&a, &b| mag[a].total_cmp(&mag[b])).unwrap_or(hint_bin);

    let (l, c, r) = (mag[k - 1], mag[k], mag[k + 1]);
    let delta = if l > 0.0 && c > 0.0 && r > 0.0 {
        let (ll, lc, lr) = (l.ln(), c.ln(), r.ln());
        let denom = ll - 2.0 * lc + lr;
        if denom < 0.0 { (0.5 * (ll - lr) / denom).clamp(-0.5, 0.5) } else { 0.0 }
    } else {
        0.0
    };
    let amplitude = 2.0 * c / (window_sum * hann_gain(delta));

    let mut floor: Vec<f64> = mag
        .iter()
        .enumerate()
        .filter(|(j, _)| *j > 2 && j.abs_diff(k) > PEAK_EXCLUSION_BINS)
        .map(|(_, m)| *m)
        .collect();
    let median = if floor.is_empty() {
        0.0
    } else {
        let mid = floor.len() / 2;
        *floor.select_nth_unstable_by(mid, f64::total_cmp).1
    };
    let snr = if median > 0.0 { c / median } else { f64::INFINITY };
    Ok(BlockAmplitude {
        frequency: (k as f64 + delta) / duration,
        amplitude,
        snr,
        low_snr: !(snr >= LOW_SNR_THRESHOLD),
    })
}
