//! Synthetic decaying oscillations sampled on a block schedule.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One exponentially decaying sinusoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub amplitude0: f64,
    /// Hz
    pub f0: f64,
    /// rad
    pub phase0: f64,
    /// s
    pub tau: f64,
}

impl Mode {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("amplitude", self.amplitude0), ("frequency", self.f0), ("tau", self.tau)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("ring-down {name} must be positive, got {v}")));
            }
        }
        if !self.phase0.is_finite() {
            return Err(Error::Config("ring-down phase must be finite".into()));
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> f64 {
        self.amplitude0 * (-t / self.tau).exp() * (2.0 * PI * self.f0 * t + self.phase0).cos()
    }

    pub fn envelope(&self, t: f64) -> f64 {
        self.amplitude0 * (-t / self.tau).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingdownParams {
    pub mode: Mode,
    /// Additional modes superposed on the signal (e.g. a vertical mode).
    #[serde(default)]
    pub extra_modes: Vec<Mode>,
    /// Standard deviation of the additive white noise per sample.
    pub noise_rms: f64,
    pub seed: u64,
}

impl RingdownParams {
    pub fn new(amplitude0: f64, f0: f64, phase0: f64, tau: f64, noise_rms: f64, seed: u64) -> Result<Self> {
        let p = Self {
            mode: Mode {
                amplitude0,
                f0,
                phase0,
                tau,
            },
            extra_modes: Vec::new(),
            noise_rms,
            seed,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.mode.validate()?;
        for m in &self.extra_modes {
            m.validate()?;
        }
        if !(self.noise_rms.is_finite() && self.noise_rms >= 0.0) {
            return Err(Error::Config(format!("noise rms must be >= 0, got {}", self.noise_rms)));
        }
        Ok(())
    }

    fn highest_frequency(&self) -> f64 {
        self.extra_modes.iter().map(|m| m.f0).fold(self.mode.f0, f64::max)
    }
}

/// Short acquisition blocks repeated at a fixed interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockSchedule {
    /// s
    pub block_length: f64,
    /// s
    pub block_interval: f64,
    /// Hz
    pub sample_rate: f64,
    /// s
    pub total_duration: f64,
}

impl BlockSchedule {
    /// Five-minute blocks every hour.
    pub fn hourly(sample_rate: f64, total_duration: f64) -> Result<Self> {
        let s = Self {
            block_length: 300.0,
            block_interval: 3600.0,
            sample_rate,
            total_duration,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("block length", self.block_length),
            ("block interval", self.block_interval),
            ("sample rate", self.sample_rate),
            ("total duration", self.total_duration),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.block_length > self.block_interval {
            return Err(Error::Config("block length exceeds the block interval".into()));
        }
        if self.total_duration < self.block_interval {
            return Err(Error::Config("total duration is shorter than one block interval".into()));
        }
        Ok(())
    }

    pub fn validate_for(&self, params: &RingdownParams) -> Result<()> {
        self.validate()?;
        let f_max = params.highest_frequency();
        if self.sample_rate <= 4.0 * f_max {
            return Err(Error::Config(format!(
                "sample rate {} Hz must exceed four times the highest mode frequency {f_max} Hz",
                self.sample_rate
            )));
        }
        Ok(())
    }

    pub fn samples_per_block(&self) -> usize {
        (self.block_length * self.sample_rate).round() as usize
    }

    pub fn block_starts(&self) -> Vec<f64> {
        let n = ((self.total_duration - self.block_length) / self.block_interval).floor() as usize + 1;
        (0..n).map(|k| k as f64 * self.block_interval).collect()
    }
}

/// Uniformly sampled record starting at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    /// s, time of the first sample
    pub t0: f64,
    /// Hz
    pub sample_rate: f64,
    pub samples: Vec<f64>,
}

impl Block {
    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 / self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }
}

/// Sample every block of the schedule. Block k draws its noise from stream k
/// of the seeded generator, so the output does not depend on thread count.
pub fn synthesize_ringdown(params: &RingdownParams, schedule: &BlockSchedule) -> Result<Vec<Block>> {
    schedule.validate_for(params)?;
    let n = schedule.samples_per_block();
    let noise = Normal::new(0.0, params.noise_rms)
        .map_err(|e| Error::Config(format!("noise distribution: {e}")))?;
    Ok(schedule
        .block_starts()
        .into_par_iter()
        .enumerate()
        .map(|(k, t0)| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(k as u64);
            let samples = (0..n)
                .map(|j| {
                    let t = t0 + j as f64 / schedule.sample_rate;
                    let clean = params.mode.value(t) + params.extra_modes.iter().map(|m| m.value(t)).sum::<f64>();
                    if params.noise_rms > 0.0 {
                        clean + rng.sample(noise)
                    } else {
                        clean
                    }
                })
                .collect();
            Block {
                t0,
                sample_rate: schedule.sample_rate,
                samples,
            }
        })
        .collect())
}
