//! Run configuration. Every key carries its unit in the name; anything left
//! out falls back to the measured-cell values.

use std::path::{Path, PathBuf};

use levsim::damping::{CompositionMode, DampingModel, OscillatorSpec, DEFAULT_TAU_VACUUM};
use levsim::media::{Media, MediaOverrides};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub oscillator: OscillatorConfig,
    pub media: MediaConfig,
    pub damping: DampingConfig,
    pub detection: DetectionConfig,
    pub ringdown: RingdownConfig,
    pub fit: FitConfig,
    pub sensitivity: SensitivityConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: None,
            oscillator: OscillatorConfig::default(),
            media: MediaConfig::default(),
            damping: DampingConfig::default(),
            detection: DetectionConfig::default(),
            ringdown: RingdownConfig::default(),
            fit: FitConfig::default(),
            sensitivity: SensitivityConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OscillatorConfig {
    pub mass_kg: f64,
    pub radius_warm_m: f64,
    pub contraction_fraction: f64,
    pub resonant_frequency_hz: f64,
}

impl Default for OscillatorConfig {
    fn default() -> Self {
        let o = OscillatorSpec::default();
        Self {
            mass_kg: o.mass,
            radius_warm_m: o.radius_warm,
            contraction_fraction: o.contraction_fraction,
            resonant_frequency_hz: o.resonant_frequency,
        }
    }
}

/// Media overrides, inline or from a separate file (inline keys win).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediaConfig {
    pub overrides_file: Option<PathBuf>,
    pub sound_speed_m_per_s: Option<f64>,
    pub roton_wavenumber_per_m: Option<f64>,
    pub roton_gap_k: Option<f64>,
    pub m3_effective_ratio: Option<f64>,
    pub he4_mass_density_kg_per_m3: Option<f64>,
    pub viscosity_table_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DampingConfig {
    pub he3_fraction: f64,
    pub vacuum_channel: bool,
    pub tau_vacuum_s: f64,
    pub composition: CompositionMode,
    pub t_min_k: f64,
    pub t_max_k: f64,
    pub points: usize,
}

impl Default for DampingConfig {
    fn default() -> Self {
        Self {
            he3_fraction: 4.2e-8,
            vacuum_channel: true,
            tau_vacuum_s: DEFAULT_TAU_VACUUM,
            composition: CompositionMode::ReciprocalSum,
            t_min_k: 0.01,
            t_max_k: 2.1,
            points: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    /// Geometry TOML; the coaxial bench arrangement when absent.
    pub geometry_file: Option<PathBuf>,
    pub sphere_radius_m: f64,
    /// Sphere-centre distances from the receiver centre along its axis,
    /// on the transmitter side.
    pub distances_m: Vec<f64>,
    pub receiver: usize,
    pub oracle_grid: usize,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            geometry_file: None,
            sphere_radius_m: 1e-3,
            distances_m: (2..=19).rev().map(|k| k as f64 * 1e-3).collect(),
            receiver: 0,
            oracle_grid: 128,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockFormat {
    #[default]
    Csv,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RingdownConfig {
    pub amplitude0_m: f64,
    pub f0_hz: f64,
    pub phase0_rad: f64,
    pub tau_s: f64,
    pub noise_rms_m: f64,
    pub sample_rate_hz: f64,
    pub block_length_s: f64,
    pub block_interval_s: f64,
    pub total_duration_s: f64,
    pub format: BlockFormat,
    /// Block file read by `ringdown analyze`.
    pub input: Option<PathBuf>,
}

impl Default for RingdownConfig {
    fn default() -> Self {
        Self {
            amplitude0_m: 1e-6,
            f0_hz: 2.7,
            phase0_rad: 0.0,
            tau_s: 410_400.0,
            noise_rms_m: 3e-7,
            sample_rate_hz: 20.0,
            block_length_s: 300.0,
            block_interval_s: 3600.0,
            total_duration_s: 120.0 * 3600.0,
            format: BlockFormat::Csv,
            input: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub data_csv: Option<PathBuf>,
    pub he3_fraction_min: f64,
    pub he3_fraction_max: f64,
    pub tolerance: f64,
    pub high_t_threshold_k: f64,
    pub high_t_weight: f64,
    pub fit_tau_vacuum: bool,
    pub tau_vacuum_min_s: f64,
    pub tau_vacuum_max_s: f64,
    /// Extra ³He fraction for the contamination prediction.
    pub added_he3_fraction: Option<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            data_csv: None,
            he3_fraction_min: 1e-13,
            he3_fraction_max: 1e-4,
            tolerance: 1e-6,
            high_t_threshold_k: 0.6,
            high_t_weight: 0.1,
            fit_tau_vacuum: false,
            tau_vacuum_min_s: 1e4,
            tau_vacuum_max_s: 1e8,
            added_he3_fraction: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivityConfig {
    pub temperature_k: Option<f64>,
    pub tau_s: Option<f64>,
    pub velocity_m_per_s: Option<f64>,
}

/// A parsed configuration together with the directory its relative paths
/// are resolved against.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base_dir: PathBuf,
    pub source: Option<PathBuf>,
}

impl LoadedConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self {
                config: RunConfig::default(),
                base_dir: PathBuf::from("."),
                source: None,
            });
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let config = parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let base_dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Self {
            config,
            base_dir,
            source: Some(path.to_path_buf()),
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn oscillator(&self) -> Result<OscillatorSpec, CliError> {
        let o = &self.config.oscillator;
        Ok(OscillatorSpec::new(
            o.mass_kg,
            o.radius_warm_m,
            o.contraction_fraction,
            o.resonant_frequency_hz,
        )?)
    }

    /// Media with file overrides applied first and inline keys on top.
    /// Returns the files read so they can be digested.
    pub fn media(&self) -> Result<(Media, Vec<PathBuf>), CliError> {
        let m = &self.config.media;
        let mut media = Media::default();
        let mut files = Vec::new();
        if let Some(p) = &m.overrides_file {
            let path = self.resolve(p);
            media = media.with_overrides_path(&path)?;
            files.push(path);
        }
        let inline = MediaOverrides {
            sound_speed_m_per_s: m.sound_speed_m_per_s,
            roton_wavenumber_per_m: m.roton_wavenumber_per_m,
            roton_gap_k: m.roton_gap_k,
            m3_effective_ratio: m.m3_effective_ratio,
            he4_mass_density_kg_per_m3: m.he4_mass_density_kg_per_m3,
            viscosity_table_csv: m
                .viscosity_table_csv
                .as_ref()
                .map(|p| self.resolve(p).to_string_lossy().into_owned()),
        };
        if let Some(p) = &inline.viscosity_table_csv {
            files.push(PathBuf::from(p));
        }
        inline.apply(&mut media, None)?;
        Ok((media, files))
    }

    pub fn damping_model(&self, media: Media) -> Result<DampingModel, CliError> {
        let d = &self.config.damping;
        if !(d.he3_fraction.is_finite() && d.he3_fraction >= 0.0) {
            return Err(CliError::Usage(format!(
                "damping.he3_fraction must be >= 0, got {}",
                d.he3_fraction
            )));
        }
        let tau_vacuum = d.vacuum_channel.then_some(d.tau_vacuum_s);
        Ok(DampingModel::new(self.oscillator()?, media)
            .with_he3_fraction(d.he3_fraction)
            .with_mode(d.composition)
            .with_tau_vacuum(tau_vacuum))
    }
}

pub fn parse(text: &str) -> Result<RunConfig, toml::de::Error> {
    toml::from_str(text)
}
