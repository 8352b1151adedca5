//! Decay-time channels of a sphere oscillating in superfluid ⁴He and their
//! composition into a total ring-down time, plus derived sensitivity figures.
//!
//! Channels:
//! * hydrodynamic (Stokes drag of the normal component), defined only where
//!   the viscosity table is valid,
//! * ballistic phonons (τ ∝ T⁻⁴) and rotons (τ ∝ exp(Δ/k_B T)),
//! * ³He impurities in the Knudsen limit (τ ∝ n₃⁻¹ T^-1/2),
//! * a constant intrinsic (vacuum) limit.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format;
use crate::media::{Media, QuasiparticleParams};
use crate::constants::PhysicalConstants;

/// Ceiling used for channels whose rate underflows (frozen-out rotons).
/// Finite so that downstream arithmetic stays well defined.
pub const NEGLIGIBLE_TAU: f64 = 1e300;

/// Drag coefficient of a slowly moving sphere in a free-molecular gas.
pub const KNUDSEN_DRAG_COEFFICIENT: f64 = 4.1906;

/// Intrinsic ring-down time measured in vacuum, s (114 h).
pub const DEFAULT_TAU_VACUUM: f64 = 4.1e5;

/// The levitated sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorSpec {
    /// kg
    pub mass: f64,
    /// Room-temperature radius, m.
    pub radius_warm: f64,
    /// Fractional thermal contraction on cooldown.
    pub contraction_fraction: f64,
    /// Hz
    pub resonant_frequency: f64,
}

impl OscillatorSpec {
    pub fn new(
        mass: f64,
        radius_warm: f64,
        contraction_fraction: f64,
        resonant_frequency: f64,
    ) -> Result<Self> {
        let spec = Self {
            mass,
            radius_warm,
            contraction_fraction,
            resonant_frequency,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::Config(format!("mass must be positive, got {}", self.mass)));
        }
        if !(self.radius_warm.is_finite() && self.radius_warm > 0.0) {
            return Err(Error::Config(format!(
                "radius must be positive, got {}",
                self.radius_warm
            )));
        }
        if !(0.0..0.1).contains(&self.contraction_fraction) {
            return Err(Error::Config(format!(
                "contraction fraction must lie in [0, 0.1), got {}",
                self.contraction_fraction
            )));
        }
        if !(self.resonant_frequency.is_finite() && self.resonant_frequency > 0.0) {
            return Err(Error::Config(format!(
                "resonant frequency must be positive, got {}",
                self.resonant_frequency
            )));
        }
        Ok(())
    }

    /// Cold (contracted) radius, m.
    pub fn radius(&self) -> f64 {
        self.radius_warm * (1.0 - self.contraction_fraction)
    }

    fn cross_section(&self) -> f64 {
        PI * self.radius().powi(2)
    }
}

impl Default for OscillatorSpec {
    /// The 2 mm lead-plated ball: 6.33 mg, 1.00 mm radius, 1.5 % contraction,
    /// 2.7 Hz lateral mode.
    fn default() -> Self {
        Self {
            mass: 6.33e-6,
            radius_warm: 1.0e-3,
            contraction_fraction: 0.015,
            resonant_frequency: 2.7,
        }
    }
}

/// How channels combine into the total decay time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositionMode {
    /// 1/τ = Σ 1/τᵢ
    #[default]
    ReciprocalSum,
    /// τ = min τᵢ
    DominantOnly,
}

impl std::str::FromStr for CompositionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reciprocal_sum" | "reciprocal-sum" => Ok(Self::ReciprocalSum),
            "dominant_only" | "dominant-only" => Ok(Self::DominantOnly),
            other => Err(Error::Config(format!("unknown composition mode '{other}'"))),
        }
    }
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

/// Stokes-drag decay time M / (3π η_n r).
pub fn tau_hydrodynamic(osc: &OscillatorSpec, eta_n: f64) -> Result<f64> {
    require_positive("viscosity", eta_n)?;
    Ok(osc.mass / (3.0 * PI * eta_n * osc.radius()))
}

/// Ballistic phonon decay time 45 M ħ³ c⁴ / (π² (k_B T)⁴ π r²).
pub fn tau_phonon(
    osc: &OscillatorSpec,
    params: &QuasiparticleParams,
    constants: &PhysicalConstants,
    temperature: f64,
) -> Result<f64> {
    require_positive("temperature", temperature)?;
    // (ħ c / k_B T)^3 keeps every intermediate inside f64 range
    let thermal_wavelength = constants.hbar * params.sound_speed / (constants.k_b * temperature);
    let tau = 45.0 * osc.mass * thermal_wavelength.powi(3) * params.sound_speed
        / (PI * PI * constants.k_b * temperature * osc.cross_section());
    Ok(tau.min(NEGLIGIBLE_TAU))
}

/// Ballistic roton decay time 6π² M / (ħ k₀⁴ exp(−Δ/k_B T) π r²).
///
/// Saturates at [`NEGLIGIBLE_TAU`] once rotons are frozen out.
pub fn tau_roton(
    osc: &OscillatorSpec,
    params: &QuasiparticleParams,
    constants: &PhysicalConstants,
    temperature: f64,
) -> Result<f64> {
    require_positive("temperature", temperature)?;
    let prefactor = 6.0 * PI * PI * osc.mass
        / (constants.hbar * params.roton_wavenumber.powi(4) * osc.cross_section());
    let ln_tau = prefactor.ln() + params.roton_gap / temperature;
    if ln_tau >= NEGLIGIBLE_TAU.ln() {
        Ok(NEGLIGIBLE_TAU)
    } else {
        Ok(ln_tau.exp())
    }
}

/// Knudsen-regime ³He drag decay time 4M / (4.1906 π r² n₃ m3* v_th).
///
/// Returns `None` when `n3` is zero (channel absent).
pub fn tau_impurity(
    osc: &OscillatorSpec,
    media: &Media,
    temperature: f64,
    n3: f64,
) -> Result<Option<f64>> {
    require_positive("temperature", temperature)?;
    if !(n3.is_finite() && n3 >= 0.0) {
        return Err(Error::Domain(format!("³He number density must be non-negative, got {n3}")));
    }
    if n3 == 0.0 {
        return Ok(None);
    }
    let v_th = media.thermal_velocity_he3(temperature)?;
    let tau = 4.0 * osc.mass
        / (KNUDSEN_DRAG_COEFFICIENT * osc.cross_section() * n3 * media.m3_effective() * v_th);
    Ok(Some(tau.min(NEGLIGIBLE_TAU)))
}

/// Per-channel decay times; `None` marks an absent channel.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Channels {
    pub hydrodynamic: Option<f64>,
    pub phonon: Option<f64>,
    pub roton: Option<f64>,
    pub impurity: Option<f64>,
    pub vacuum: Option<f64>,
}

impl Channels {
    pub fn present(&self) -> impl Iterator<Item = f64> {
        [
            self.hydrodynamic,
            self.phonon,
            self.roton,
            self.impurity,
            self.vacuum,
        ]
        .into_iter()
        .flatten()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingBreakdown {
    pub channels: Channels,
    pub tau_total: f64,
    pub mode: CompositionMode,
}

impl DampingBreakdown {
    pub fn tau_hydr(&self) -> Option<f64> {
        self.channels.hydrodynamic
    }
    pub fn tau_ph(&self) -> Option<f64> {
        self.channels.phonon
    }
    pub fn tau_rot(&self) -> Option<f64> {
        self.channels.roton
    }
    pub fn tau_imp(&self) -> Option<f64> {
        self.channels.impurity
    }
    pub fn tau_vacuum(&self) -> Option<f64> {
        self.channels.vacuum
    }
}

/// Combine the present channels into a total decay time.
pub fn tau_total(channels: Channels, mode: CompositionMode) -> Result<DampingBreakdown> {
    let mut count = 0;
    for tau in channels.present() {
        count += 1;
        if !(tau > 0.0) || tau.is_nan() {
            return Err(Error::Domain(format!("channel decay time must be positive, got {tau}")));
        }
    }
    if count == 0 {
        return Err(Error::Config("no damping channel present".into()));
    }
    let tau_total = match mode {
        CompositionMode::ReciprocalSum => {
            1.0 / channels.present().map(|t| 1.0 / t).sum::<f64>()
        }
        CompositionMode::DominantOnly => channels.present().fold(f64::INFINITY, f64::min),
    };
    Ok(DampingBreakdown {
        channels,
        tau_total,
        mode,
    })
}

/// Complete damping model of the oscillator in a given bath.
#[derive(Debug, Clone, PartialEq)]
pub struct DampingModel {
    pub oscillator: OscillatorSpec,
    pub media: Media,
    /// ³He number density, 1/m³.
    pub n3: f64,
    pub mode: CompositionMode,
    /// Constant intrinsic decay time, s; `None` omits the channel.
    pub tau_vacuum: Option<f64>,
}

impl DampingModel {
    pub fn new(oscillator: OscillatorSpec, media: Media) -> Self {
        Self {
            oscillator,
            media,
            n3: 0.0,
            mode: CompositionMode::default(),
            tau_vacuum: Some(DEFAULT_TAU_VACUUM),
        }
    }

    pub fn with_he3_fraction(mut self, x3: f64) -> Self {
        self.n3 = x3 * self.media.n4();
        self
    }

    pub fn with_n3(mut self, n3: f64) -> Self {
        self.n3 = n3;
        self
    }

    pub fn with_mode(mut self, mode: CompositionMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_tau_vacuum(mut self, tau_vacuum: Option<f64>) -> Self {
        self.tau_vacuum = tau_vacuum;
        self
    }

    pub fn channels(&self, temperature: f64) -> Result<Channels> {
        let osc = &self.oscillator;
        let media = &self.media;
        let hydrodynamic = if media.viscosity.contains(temperature) {
            Some(tau_hydrodynamic(osc, media.viscosity.viscosity_normal(temperature)?)?)
        } else {
            None
        };
        if let Some(v) = self.tau_vacuum {
            require_positive("vacuum decay time", v)?;
        }
        Ok(Channels {
            hydrodynamic,
            phonon: Some(tau_phonon(osc, &media.params, &media.constants, temperature)?),
            roton: Some(tau_roton(osc, &media.params, &media.constants, temperature)?),
            impurity: tau_impurity(osc, media, temperature, self.n3)?,
            vacuum: self.tau_vacuum,
        })
    }

    pub fn breakdown(&self, temperature: f64) -> Result<DampingBreakdown> {
        tau_total(self.channels(temperature)?, self.mode)
    }
}

/// One row of a damping curve; a failed point keeps its error.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub temperature: f64,
    pub result: Result<DampingBreakdown>,
}

/// Evaluate the model on a strictly increasing temperature grid.
pub fn damping_curve(model: &DampingModel, grid: &[f64]) -> Result<Vec<CurvePoint>> {
    if grid.is_empty() {
        return Err(Error::Config("temperature grid is empty".into()));
    }
    if grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::Config("temperature grid values must be positive".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("temperature grid must be strictly increasing".into()));
    }
    Ok(grid
        .par_iter()
        .map(|&t| CurvePoint {
            temperature: t,
            result: model.breakdown(t),
        })
        .collect())
}

/// `n` logarithmically spaced temperatures from `t_min` to `t_max` inclusive.
pub fn log_grid(t_min: f64, t_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max > t_min) || n < 1 {
        return Err(Error::Config(format!(
            "invalid grid: {n} points over [{t_min}, {t_max}]"
        )));
    }
    if n == 1 {
        return Ok(vec![t_min]);
    }
    let (a, b) = (t_min.ln(), t_max.ln());
    Ok((0..n)
        .map(|i| {
            if i == 0 {
                t_min
            } else if i == n - 1 {
                t_max
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect())
}

pub const CURVE_CSV_HEADER: &str = "T_K,tau_hydr_s,tau_ph_s,tau_rot_s,tau_imp_s,tau_vac_s,tau_total_s";

/// Write a damping curve as CSV; absent channels and failed rows are empty.
pub fn write_curve_csv<W: Write>(mut out: W, points: &[CurvePoint]) -> std::io::Result<()> {
    writeln!(out, "{CURVE_CSV_HEADER}")?;
    for p in points {
        match &p.result {
            Ok(b) => {
                let c = &b.channels;
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    format::num(p.temperature),
                    format::opt(c.hydrodynamic),
                    format::opt(c.phonon),
                    format::opt(c.roton),
                    format::opt(c.impurity),
                    format::opt(c.vacuum),
                    format::num(b.tau_total)
                )?;
            }
            Err(_) => writeln!(out, "{},,,,,,", format::num(p.temperature))?,
        }
    }
    Ok(())
}

/// Side-car description of how a curve was produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveMetadata {
    pub mode: CompositionMode,
    pub mass_kg: f64,
    pub radius_m: f64,
    pub n3_per_m3: f64,
    pub he3_fraction: f64,
    pub tau_vacuum_s: Option<f64>,
    pub hydrodynamic_valid_range_k: (f64, f64),
    pub notes: Vec<String>,
}

impl CurveMetadata {
    pub fn for_model(model: &DampingModel) -> Self {
        Self {
            mode: model.mode,
            mass_kg: model.oscillator.mass,
            radius_m: model.oscillator.radius(),
            n3_per_m3: model.n3,
            he3_fraction: model.n3 / model.media.n4(),
            tau_vacuum_s: model.tau_vacuum,
            hydrodynamic_valid_range_k: model.media.viscosity.valid_range(),
            notes: vec![
                "hydrodynamic channel absent outside the viscosity table range; no cross-over \
                 interpolation to the ballistic regime is applied"
                    .into(),
                "ballistic phonon and roton channels are evaluated at every temperature".into(),
                "viscous penetration-depth correction not applied".into(),
            ],
        }
    }
}

/// Resonance full width Δf = 1/(π τ).
pub fn linewidth(tau: f64) -> Result<f64> {
    require_positive("decay time", tau)?;
    Ok(1.0 / (PI * tau))
}

/// Linear drag force F = 2 M V / τ.
pub fn drag_force(osc: &OscillatorSpec, tau: f64, velocity: f64) -> Result<f64> {
    require_positive("decay time", tau)?;
    if !(velocity.is_finite() && velocity >= 0.0) {
        return Err(Error::Domain(format!("velocity must be non-negative, got {velocity}")));
    }
    Ok(2.0 * osc.mass * velocity / tau)
}

/// Thermal force-noise density S_F = 8 k_B M T / τ together with the figure
/// of merit T/τ.
pub fn noise_density(
    osc: &OscillatorSpec,
    constants: &PhysicalConstants,
    temperature: f64,
    tau: f64,
) -> Result<(f64, f64)> {
    require_positive("decay time", tau)?;
    if !(temperature.is_finite() && temperature >= 0.0) {
        return Err(Error::Domain(format!(
            "temperature must be non-negative, got {temperature}"
        )));
    }
    let t_over_tau = temperature / tau;
    Ok((8.0 * constants.k_b * osc.mass * t_over_tau, t_over_tau))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensitivityReport {
    /// N²/Hz
    pub s_f: f64,
    /// N
    pub f_d: f64,
    /// K/s
    pub t_over_tau: f64,
    /// Hz
    pub linewidth: f64,
}

pub fn sensitivity_report(
    osc: &OscillatorSpec,
    constants: &PhysicalConstants,
    temperature: f64,
    tau: f64,
    velocity: f64,
) -> Result<SensitivityReport> {
    let (s_f, t_over_tau) = noise_density(osc, constants, temperature, tau)?;
    Ok(SensitivityReport {
        s_f,
        f_d: drag_force(osc, tau, velocity)?,
        t_over_tau,
        linewidth: linewidth(tau)?,
    })
}

/// Least-squares slope of ln τ_total against ln T over the rows with
/// `t_lo <= T <= t_hi`.
pub fn log_log_slope(points: &[CurvePoint], t_lo: f64, t_hi: f64) -> Result<f64> {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.temperature >= t_lo && p.temperature <= t_hi)
        .filter_map(|p| p.result.as_ref().ok().map(|b| (p.temperature.ln(), b.tau_total.ln())))
        .collect();
    if xy.len() < 2 {
        return Err(Error::Data(format!(
            "need at least two curve rows in [{t_lo}, {t_hi}] K"
        )));
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
