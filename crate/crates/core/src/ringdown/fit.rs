//! Exponential decay fit of block amplitudes.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::spectrum::block_amplitude;
use super::synth::Block;
use crate::error::{Error, Result};
use crate::format;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplitudeRow {
    /// Block start time, s.
    pub time: f64,
    /// Hz
    pub frequency: f64,
    pub amplitude: f64,
    pub snr: f64,
    pub low_snr: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AmplitudeSeries {
    pub rows: Vec<AmplitudeRow>,
}

pub const SERIES_CSV_HEADER: &str = "t_s,f_peak_Hz,amplitude,snr,low_snr";

impl AmplitudeSeries {
    pub fn validate(&self) -> Result<()> {
        for w in self.rows.windows(2) {
            if !(w[1].time > w[0].time) {
                return Err(Error::Data(format!(
                    "amplitude series times must increase ({} then {})",
                    w[0].time, w[1].time
                )));
            }
        }
        if let Some(r) = self.rows.iter().find(|r| !(r.amplitude >= 0.0)) {
            return Err(Error::Data(format!("negative amplitude {} at t = {}", r.amplitude, r.time)));
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{SERIES_CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                format::num(r.time),
                format::num(r.frequency),
                format::num(r.amplitude),
                format::num(r.snr),
                r.low_snr
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// Amplitude extrapolated to t = 0.
    pub a0: f64,
    /// s
    pub tau: f64,
    /// s
    pub sigma_tau: f64,
    /// RMS of amplitude residuals over the rows used.
    pub residual_rms: f64,
    /// Hz
    pub linewidth: f64,
    pub rows_used: usize,
}

/// Rows needed for a fit.
pub const MIN_FIT_ROWS: usize = 5;

/// Largest SNR used as a weight; noise-free blocks report an infinite SNR.
const SNR_WEIGHT_CAP: f64 = 1e8;

/// Weighted straight-line fit of ln A against t, weights ∝ SNR².
pub fn fit_decay(series: &AmplitudeSeries) -> Result<DecayFit> {
    series.validate()?;
    let rows: Vec<&AmplitudeRow> = series.rows.iter().filter(|r| !r.low_snr && r.amplitude > 0.0).collect();
    if rows.len() < MIN_FIT_ROWS {
        return Err(Error::Data(format!(
            "decay fit needs at least {MIN_FIT_ROWS} usable rows, got {}",
            rows.len()
        )));
    }
    let w: Vec<f64> = rows.iter().map(|r| r.snr.min(SNR_WEIGHT_CAP).powi(2)).collect();
    let t: Vec<f64> = rows.iter().map(|r| r.time).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.amplitude.ln()).collect();
    let sw: f64 = w.iter().sum();
    let t_mean = w.iter().zip(&t).map(|(w, t)| w * t).sum::<f64>() / sw;
    let y_mean = w.iter().zip(&y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let stt: f64 = w.iter().zip(&t).map(|(w, t)| w * (t - t_mean).powi(2)).sum();
    let sty: f64 = w.iter().zip(&t).zip(&y).map(|((w, t), y)| w * (t - t_mean) * (y - y_mean)).sum();
    let slope = sty / stt;
    let span = t.last().copied().unwrap_or(0.0) - t[0];
    if !(slope * span < -1e-12) {
        return Err(Error::Fit(format!("amplitudes do not decay (slope {slope:e} 1/s)")));
    }
    let tau = -1.0 / slope;
    if span < 0.2 * tau {
        return Err(Error::Data(format!(
            "rows span {span} s, less than 0.2 of the fitted tau {tau} s"
        )));
    }
    let intercept = y_mean - slope * t_mean;
    let resid: Vec<f64> = t.iter().zip(&y).map(|(t, y)| y - (intercept + slope * t)).collect();
    let dof = (rows.len() - 2) as f64;
    let s2 = w.iter().zip(&resid).map(|(w, r)| w * r * r).sum::<f64>() / dof;
    let sigma_slope = (s2 / stt).sqrt();
    let a0 = intercept.exp();
    let residual_rms = (rows
        .iter()
        .map(|r| (r.amplitude - a0 * (slope * r.time).exp()).powi(2))
        .sum::<f64>()
        / rows.len() as f64)
        .sqrt();
    Ok(DecayFit {
        a0,
        tau,
        sigma_tau: sigma_slope * tau * tau,
        residual_rms,
        linewidth: 1.0 / (PI * tau),
        rows_used: rows.len(),
    })
}

/// Block amplitudes for every block followed by the decay fit.
pub fn analyze_ringdown(blocks: &[Block], f0_hint: f64) -> Result<(AmplitudeSeries, DecayFit)> {
    if let Some(b) = blocks.iter().find(|b| b.sample_rate != blocks[0].sample_rate) {
        return Err(Error::Data(format!(
            "block at t = {} has sample rate {} Hz, expected {} Hz",
            b.t0, b.sample_rate, blocks[0].sample_rate
        )));
    }
    let rows = blocks
        .par_iter()
        .map(|b| {
            let a = block_amplitude(&b.samples, b.sample_rate, f0_hint)?;
            Ok(AmplitudeRow {
                time: b.t0,
                frequency: a.frequency,
                amplitude: a.amplitude,
                snr: a.snr,
                low_snr: a.low_snr,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let series = AmplitudeSeries { rows };
    let fit = fit_decay(&series)?;
    Ok((series, fit))
}
