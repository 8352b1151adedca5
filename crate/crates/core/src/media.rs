//! Material properties of liquid ⁴He at saturated vapour pressure and of the
//! dilute ³He quasiparticle gas dissolved in it.

use std::path::Path;

use serde::Deserialize;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};

/// Excitation-spectrum parameters of He II.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiparticleParams {
    /// First-sound speed, m/s.
    pub sound_speed: f64,
    /// Roton-minimum wave number, 1/m.
    pub roton_wavenumber: f64,
    /// Roton gap Δ/k_B, K.
    pub roton_gap: f64,
    /// ³He effective-mass ratio m3*/m3.
    pub m3_effective_ratio: f64,
}

impl Default for QuasiparticleParams {
    fn default() -> Self {
        Self {
            sound_speed: 238.0,
            roton_wavenumber: 1.918e10,
            roton_gap: 8.65,
            m3_effective_ratio: 2.64,
        }
    }
}

impl QuasiparticleParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("sound speed", self.sound_speed),
            ("roton wave number", self.roton_wavenumber),
            ("roton gap", self.roton_gap),
            ("effective mass ratio", self.m3_effective_ratio),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Normal-component viscosity of He II, in µP (1 µP = 1e-7 Pa s), on a
/// representative SVP grid between 1.0 K and the lambda point.
const EMBEDDED_VISCOSITY_MICROPOISE: [(f64, f64); 15] = [
    (1.00, 35.0),
    (1.10, 24.5),
    (1.20, 18.9),
    (1.30, 16.0),
    (1.40, 14.6),
    (1.50, 13.8),
    (1.60, 13.3),
    (1.70, 13.0),
    (1.80, 13.0),
    (1.90, 13.2),
    (2.00, 13.8),
    (2.05, 14.4),
    (2.10, 15.5),
    (2.15, 18.0),
    (2.17, 23.0),
];

/// Tabulated η_n(T). Interpolation is linear in (ln T, ln η) and queries
/// outside the tabulated interval are rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct ViscosityTable {
    entries: Vec<(f64, f64)>,
}

impl ViscosityTable {
    pub fn new(entries: Vec<(f64, f64)>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::Config("viscosity table needs at least two rows".into()));
        }
        for (t, eta) in &entries {
            if !(t.is_finite() && *t > 0.0 && eta.is_finite() && *eta > 0.0) {
                return Err(Error::Config(format!(
                    "viscosity row ({t}, {eta}) must have positive temperature and viscosity"
                )));
            }
        }
        if entries.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Config(
                "viscosity table temperatures must be strictly increasing".into(),
            ));
        }
        Ok(Self { entries })
    }

    /// The built-in He II table, 1.0–2.17 K.
    pub fn embedded() -> Self {
        let entries = EMBEDDED_VISCOSITY_MICROPOISE
            .iter()
            .map(|&(t, mp)| (t, mp * 1e-7))
            .collect();
        Self { entries }
    }

    /// Parse a two-column CSV (`T_K, eta_Pa_s`). A non-numeric first line is
    /// taken as a header; `#` starts a comment.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 2 {
                return Err(Error::Config(format!(
                    "viscosity csv line {}: expected 2 columns, found {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            match (cols[0].parse::<f64>(), cols[1].parse::<f64>()) {
                (Ok(t), Ok(eta)) => entries.push((t, eta)),
                _ if entries.is_empty() && lineno == 0 => continue,
                _ => {
                    return Err(Error::Config(format!(
                        "viscosity csv line {}: cannot parse '{line}'",
                        lineno + 1
                    )))
                }
            }
        }
        Self::new(entries)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_csv_str(&text)
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn valid_range(&self) -> (f64, f64) {
        (self.entries[0].0, self.entries[self.entries.len() - 1].0)
    }

    pub fn contains(&self, temperature: f64) -> bool {
        let (lo, hi) = self.valid_range();
        temperature >= lo && temperature <= hi
    }

    /// η_n at `temperature`, Pa s.
    pub fn viscosity_normal(&self, temperature: f64) -> Result<f64> {
        let (lo, hi) = self.valid_range();
        if !(temperature >= lo && temperature <= hi) {
            return Err(Error::Range {
                quantity: "normal-component viscosity",
                value: temperature,
                min: lo,
                max: hi,
            });
        }
        // index of the first node with T >= temperature
        let idx = self.entries.partition_point(|&(t, _)| t < temperature);
        let (t1, e1) = self.entries[idx];
        if t1 == temperature {
            return Ok(e1);
        }
        let (t0, e0) = self.entries[idx - 1];
        let frac = (temperature / t0).ln() / (t1 / t0).ln();
        Ok((e0.ln() + frac * (e1 / e0).ln()).exp())
    }
}

impl Default for ViscosityTable {
    fn default() -> Self {
        Self::embedded()
    }
}

/// Thermodynamic state of the helium bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeliumState {
    /// Bath temperature, K.
    pub temperature: f64,
    /// ³He fraction x₃ = n₃/n₄.
    pub he3_fraction: f64,
    /// ⁴He mass density, kg/m³.
    pub he4_mass_density: f64,
}

impl HeliumState {
    pub fn new(temperature: f64, he3_fraction: f64, he4_mass_density: f64) -> Result<Self> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(Error::Domain(format!("temperature must be positive, got {temperature}")));
        }
        if !(0.0..1.0).contains(&he3_fraction) {
            return Err(Error::Domain(format!("³He fraction must lie in [0, 1), got {he3_fraction}")));
        }
        if !(he4_mass_density.is_finite() && he4_mass_density > 0.0) {
            return Err(Error::Domain(format!(
                "⁴He mass density must be positive, got {he4_mass_density}"
            )));
        }
        Ok(Self {
            temperature,
            he3_fraction,
            he4_mass_density,
        })
    }
}

/// Everything the damping and fitting models need to know about the medium.
#[derive(Debug, Clone, PartialEq)]
pub struct Media {
    pub constants: PhysicalConstants,
    pub params: QuasiparticleParams,
    pub viscosity: ViscosityTable,
    /// ⁴He mass density at SVP, kg/m³.
    pub he4_mass_density: f64,
}

impl Default for Media {
    fn default() -> Self {
        Self {
            constants: PhysicalConstants::default(),
            params: QuasiparticleParams::default(),
            viscosity: ViscosityTable::embedded(),
            he4_mass_density: 145.1,
        }
    }
}

impl Media {
    pub fn state(&self, temperature: f64, he3_fraction: f64) -> Result<HeliumState> {
        HeliumState::new(temperature, he3_fraction, self.he4_mass_density)
    }

    pub fn thermal_velocity_he3(&self, temperature: f64) -> Result<f64> {
        thermal_velocity_he3(&self.constants, &self.params, temperature)
    }

    /// ⁴He number density at the configured mass density, 1/m³.
    pub fn n4(&self) -> f64 {
        self.he4_mass_density / self.constants.m4
    }

    /// ³He effective mass m3*, kg.
    pub fn m3_effective(&self) -> f64 {
        self.params.m3_effective_ratio * self.constants.m3
    }

    /// Apply overrides from a flat `key = value` file (SI units).
    ///
    /// Recognised keys: `sound_speed_m_per_s`, `roton_wavenumber_per_m`,
    /// `roton_gap_k`, `m3_effective_ratio`, `he4_mass_density_kg_per_m3`,
    /// `viscosity_table_csv` (path, resolved relative to `base_dir`).
    pub fn with_overrides_str(mut self, text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let ov: MediaOverrides =
            toml::from_str(text).map_err(|e| Error::Config(format!("media overrides: {e}")))?;
        ov.apply(&mut self, base_dir)?;
        Ok(self)
    }

    pub fn with_overrides_path(self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        self.with_overrides_str(&text, path.parent())
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.he4_mass_density.is_finite() && self.he4_mass_density > 0.0) {
            return Err(Error::Config("⁴He mass density must be positive".into()));
        }
        Ok(())
    }
}

/// Optional overrides of [`Media`]; every key is optional.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MediaOverrides {
    pub sound_speed_m_per_s: Option<f64>,
    pub roton_wavenumber_per_m: Option<f64>,
    pub roton_gap_k: Option<f64>,
    pub m3_effective_ratio: Option<f64>,
    pub he4_mass_density_kg_per_m3: Option<f64>,
    pub viscosity_table_csv: Option<String>,
}

impl MediaOverrides {
    pub fn apply(&self, media: &mut Media, base_dir: Option<&Path>) -> Result<()> {
        if let Some(v) = self.sound_speed_m_per_s {
            media.params.sound_speed = v;
        }
        if let Some(v) = self.roton_wavenumber_per_m {
            media.params.roton_wavenumber = v;
        }
        if let Some(v) = self.roton_gap_k {
            media.params.roton_gap = v;
        }
        if let Some(v) = self.m3_effective_ratio {
            media.params.m3_effective_ratio = v;
        }
        if let Some(v) = self.he4_mass_density_kg_per_m3 {
            media.he4_mass_density = v;
        }
        if let Some(p) = &self.viscosity_table_csv {
            let path = match base_dir {
                Some(dir) => dir.join(p),
                None => Path::new(p).to_path_buf(),
            };
            media.viscosity = ViscosityTable::from_csv_path(&path)?;
        }
        media.validate()
    }
}

/// Mean thermal speed scale of the ³He quasiparticle gas, √(2 k_B T / m3*).
pub fn thermal_velocity_he3(
    constants: &PhysicalConstants,
    params: &QuasiparticleParams,
    temperature: f64,
) -> Result<f64> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::Domain(format!("temperature must be positive, got {temperature}")));
    }
    let m_eff = params.m3_effective_ratio * constants.m3;
    Ok((2.0 * constants.k_b * temperature / m_eff).sqrt())
}

pub fn he4_number_density(state: &HeliumState, constants: &PhysicalConstants) -> f64 {
    state.he4_mass_density / constants.m4
}

pub fn he3_number_density(state: &HeliumState, constants: &PhysicalConstants) -> f64 {
    state.he3_fraction * he4_number_density(state, constants)
}
