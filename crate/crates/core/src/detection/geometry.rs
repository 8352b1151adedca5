//! Coil arrangements, drive and circuit parameters, sphere placement.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use super::coil::{filament_separation, CoilRole, CoilSpec, Vec3};
use crate::error::{Error, Result};

/// Minimum allowed gap between the sphere surface and any winding, m.
pub const MIN_SPHERE_CLEARANCE: f64 = 1e-4;

/// Default LC capacitance, F.
pub const DEFAULT_CAPACITANCE: f64 = 470e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSpec {
    /// A
    pub amplitude: f64,
    /// rad/s
    pub angular_frequency: f64,
}

impl DriveSpec {
    pub fn new(amplitude: f64, angular_frequency: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::Config(format!("drive amplitude must be >= 0, got {amplitude}")));
        }
        if !(angular_frequency.is_finite() && angular_frequency > 0.0) {
            return Err(Error::Config(format!(
                "drive angular frequency must be positive, got {angular_frequency}"
            )));
        }
        Ok(Self {
            amplitude,
            angular_frequency,
        })
    }

    pub fn from_frequency(amplitude: f64, frequency_hz: f64) -> Result<Self> {
        Self::new(amplitude, 2.0 * PI * frequency_hz)
    }
}

impl Default for DriveSpec {
    fn default() -> Self {
        Self {
            amplitude: 0.035,
            angular_frequency: 2.0 * PI * 1.6e6,
        }
    }
}

/// Filling medium. Only carried through for reporting: at 1.6 MHz and
/// 1e-13 S/m the quasi-static treatment ignores it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Medium {
    pub relative_permittivity: f64,
    pub relative_permeability: f64,
    #[serde(rename = "conductivity_S_per_m")]
    pub conductivity: f64,
}

impl Default for Medium {
    fn default() -> Self {
        Self {
            relative_permittivity: 1.048,
            relative_permeability: 1.0,
            conductivity: 1e-13,
        }
    }
}

/// Which current the effective inductance and voltage are referred to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveConvention {
    /// Transmitter driven, voltage picked up in the receiver (M_eff).
    #[default]
    Transmitter,
    /// Receiver driven on its own (L_eff of the receiver).
    Receiver,
}

impl std::str::FromStr for DriveConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "transmitter" => Ok(Self::Transmitter),
            "receiver" => Ok(Self::Receiver),
            other => Err(Error::Config(format!("unknown drive convention `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionGeometry {
    pub transmitter: CoilSpec,
    pub receivers: Vec<CoilSpec>,
    pub drive: DriveSpec,
    /// F
    pub capacitance: f64,
    pub medium: Medium,
    pub convention: DriveConvention,
}

impl DetectionGeometry {
    pub fn new(
        transmitter: CoilSpec,
        receivers: Vec<CoilSpec>,
        drive: DriveSpec,
        capacitance: f64,
        medium: Medium,
        convention: DriveConvention,
    ) -> Result<Self> {
        let g = Self {
            transmitter,
            receivers,
            drive,
            capacitance,
            medium,
            convention,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.capacitance.is_finite() && self.capacitance > 0.0) {
            return Err(Error::Config(format!(
                "capacitance must be positive, got {}",
                self.capacitance
            )));
        }
        if self.receivers.is_empty() || self.receivers.len() > 2 {
            return Err(Error::Geometry(format!(
                "expected one or two receivers, got {}",
                self.receivers.len()
            )));
        }
        if self.transmitter.role != CoilRole::Transmitter {
            return Err(Error::Geometry("first coil must have the transmitter role".into()));
        }
        if self.receivers.iter().any(|r| r.role != CoilRole::Receiver) {
            return Err(Error::Geometry("receiver list contains a non-receiver coil".into()));
        }
        let coils: Vec<&CoilSpec> = self.coils().collect();
        for (i, a) in coils.iter().enumerate() {
            for b in &coils[i + 1..] {
                let separation = filament_separation(a, b);
                if separation < a.half_width() + b.half_width() {
                    return Err(Error::Geometry(format!(
                        "coil windings overlap (filament separation {separation:e} m)"
                    )));
                }
            }
        }
        if self.receivers.len() == 2 {
            let dot = self.receivers[0].axis().dot(&self.receivers[1].axis());
            if dot.abs() >= 1e-6 {
                return Err(Error::Geometry(format!(
                    "receiver axes must be orthogonal (dot product {dot:e})"
                )));
            }
        }
        Ok(())
    }

    pub fn receiver(&self, index: usize) -> Result<&CoilSpec> {
        self.receivers.get(index).ok_or_else(|| {
            Error::Geometry(format!(
                "receiver index {index} out of range ({} present)",
                self.receivers.len()
            ))
        })
    }

    /// Coaxial arrangement: transmitter (12.5 mm, 100 turns) in the plane
    /// z = 0 and receiver (3 mm, 60 turns) at z = `separation`, both with
    /// axis +z.
    pub fn coaxial(separation: f64) -> Result<Self> {
        let transmitter = CoilSpec::new(
            CoilRole::Transmitter,
            Vec3::zeros(),
            Vec3::z(),
            12.5e-3,
            100,
            0.022e-4,
        )?;
        let receiver = CoilSpec::new(
            CoilRole::Receiver,
            Vec3::new(0.0, 0.0, separation),
            Vec3::z(),
            3e-3,
            60,
            0.012e-4,
        )?;
        Self::new(
            transmitter,
            vec![receiver],
            DriveSpec::default(),
            DEFAULT_CAPACITANCE,
            Medium::default(),
            DriveConvention::Receiver,
        )
    }

    /// The measured coaxial configuration (d_z = 2.27 cm).
    pub fn coaxial_default() -> Result<Self> {
        Self::coaxial(2.27e-2)
    }

    /// Top-transmitter arrangement: a horizontal transmitter of radius
    /// `transmitter_radius` at height `height` above the levitation plane
    /// (z = 0), and receivers of 6 mm / 60 turns whose axes lie in the plane
    /// and point at the cell centre from a distance `receiver_offset`.
    pub fn three_d(
        transmitter_radius: f64,
        height: f64,
        receiver_offset: f64,
        two_receivers: bool,
    ) -> Result<Self> {
        let transmitter = CoilSpec::new(
            CoilRole::Transmitter,
            Vec3::new(0.0, 0.0, height),
            Vec3::z(),
            transmitter_radius,
            100,
            0.022e-4,
        )?;
        let mut receivers = vec![CoilSpec::new(
            CoilRole::Receiver,
            Vec3::new(receiver_offset, 0.0, 0.0),
            -Vec3::x(),
            6e-3,
            60,
            0.012e-4,
        )?];
        if two_receivers {
            receivers.push(CoilSpec::new(
                CoilRole::Receiver,
                Vec3::new(0.0, receiver_offset, 0.0),
                -Vec3::y(),
                6e-3,
                60,
                0.012e-4,
            )?);
        }
        Self::new(
            transmitter,
            receivers,
            DriveSpec::default(),
            DEFAULT_CAPACITANCE,
            Medium::default(),
            DriveConvention::Transmitter,
        )
    }

    /// Same arrangement after a rigid motion x ↦ R x + t.
    pub fn transformed(&self, rotation: &Rotation3<f64>, translation: &Vec3) -> Result<Self> {
        let move_coil = |c: &CoilSpec| {
            CoilSpec::new(
                c.role,
                rotation * c.center + translation,
                rotation * c.axis(),
                c.mean_radius,
                c.turns,
                c.conductor_cross_section,
            )
        };
        Ok(Self {
            transmitter: move_coil(&self.transmitter)?,
            receivers: self.receivers.iter().map(move_coil).collect::<Result<_>>()?,
            ..self.clone()
        })
    }

    pub fn coils(&self) -> impl Iterator<Item = &CoilSpec> {
        std::iter::once(&self.transmitter).chain(self.receivers.iter())
    }

    /// Parse a TOML geometry description.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: GeometryConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("geometry: {e}")))?;
        cfg.build()
    }

    pub fn from_toml_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }
}

/// The levitated sphere, treated as a perfect diamagnet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePose {
    pub center: Vec3,
    pub radius: f64,
}

impl SpherePose {
    pub fn new(center: Vec3, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Geometry(format!("sphere radius must be positive, got {radius}")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Geometry("sphere center must be finite".into()));
        }
        Ok(Self { center, radius })
    }

    /// Fails when the sphere comes within [`MIN_SPHERE_CLEARANCE`] of a
    /// winding.
    pub fn check_clearance(&self, geometry: &DetectionGeometry) -> Result<()> {
        for coil in geometry.coils() {
            let gap = coil.distance_to_filament(&self.center) - coil.half_width() - self.radius;
            if gap < MIN_SPHERE_CLEARANCE {
                return Err(Error::Geometry(format!(
                    "sphere at {:?} is {gap:e} m from a {:?} winding",
                    self.center.as_slice(),
                    coil.role
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoilConfig {
    role: CoilRole,
    center_m: [f64; 3],
    axis: [f64; 3],
    mean_radius_m: f64,
    turns: u32,
    cross_section_m2: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct DriveConfig {
    amplitude_a: f64,
    frequency_hz: Option<f64>,
    angular_frequency_rad_per_s: Option<f64>,
}

/// On-disk geometry description.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    #[serde(default)]
    preset: Option<String>,
    #[serde(default)]
    separation_m: Option<f64>,
    #[serde(default)]
    transmitter_radius_m: Option<f64>,
    #[serde(default)]
    height_m: Option<f64>,
    #[serde(default)]
    receiver_offset_m: Option<f64>,
    #[serde(default)]
    two_receivers: Option<bool>,
    #[serde(default)]
    coil: Vec<CoilConfig>,
    #[serde(default)]
    drive: Option<DriveConfig>,
    #[serde(default)]
    capacitance_f: Option<f64>,
    #[serde(default)]
    medium: Option<Medium>,
    #[serde(default)]
    convention: Option<DriveConvention>,
}

/// Default offset of the receiver centres from the cell centre in the
/// top-transmitter arrangement, m.
pub const DEFAULT_RECEIVER_OFFSET: f64 = 2.5e-2;

impl GeometryConfig {
    pub fn build(&self) -> Result<DetectionGeometry> {
        let mut g = match self.preset.as_deref() {
            Some("coaxial") => {
                if !self.coil.is_empty() {
                    return Err(Error::Config("preset and explicit coils are exclusive".into()));
                }
                DetectionGeometry::coaxial(self.separation_m.unwrap_or(2.27e-2))?
            }
            Some("three_d") => {
                if !self.coil.is_empty() {
                    return Err(Error::Config("preset and explicit coils are exclusive".into()));
                }
                DetectionGeometry::three_d(
                    self.transmitter_radius_m.unwrap_or(3.1e-2),
                    self.height_m.unwrap_or(2.2e-2),
                    self.receiver_offset_m.unwrap_or(DEFAULT_RECEIVER_OFFSET),
                    self.two_receivers.unwrap_or(false),
                )?
            }
            Some(other) => return Err(Error::Config(format!("unknown geometry preset `{other}`"))),
            None => self.explicit()?,
        };
        if let Some(d) = &self.drive {
            let omega = match (d.frequency_hz, d.angular_frequency_rad_per_s) {
                (Some(f), None) => 2.0 * PI * f,
                (None, Some(w)) => w,
                (None, None) => g.drive.angular_frequency,
                (Some(_), Some(_)) => {
                    return Err(Error::Config(
                        "give either frequency_hz or angular_frequency_rad_per_s".into(),
                    ))
                }
            };
            g.drive = DriveSpec::new(d.amplitude_a, omega)?;
        }
        if let Some(c) = self.capacitance_f {
            g.capacitance = c;
        }
        if let Some(m) = self.medium {
            g.medium = m;
        }
        if let Some(c) = self.convention {
            g.convention = c;
        }
        g.validate()?;
        Ok(g)
    }

    fn explicit(&self) -> Result<DetectionGeometry> {
        let mut transmitter = None;
        let mut receivers = Vec::new();
        for c in &self.coil {
            let coil = CoilSpec::new(
                c.role,
                Vector3::from(c.center_m),
                Vector3::from(c.axis),
                c.mean_radius_m,
                c.turns,
                c.cross_section_m2,
            )?;
            match c.role {
                CoilRole::Transmitter if transmitter.is_some() => {
                    return Err(Error::Config("more than one transmitter coil".into()))
                }
                CoilRole::Transmitter => transmitter = Some(coil),
                CoilRole::Receiver => receivers.push(coil),
            }
        }
        let transmitter =
            transmitter.ok_or_else(|| Error::Config("geometry has no transmitter coil".into()))?;
        DetectionGeometry::new(
            transmitter,
            receivers,
            DriveSpec::default(),
            DEFAULT_CAPACITANCE,
            Medium::default(),
            DriveConvention::Transmitter,
        )
    }
}
