//! Inductive position detection: coil fields, flux exclusion by the sphere,
//! effective inductance, LC resonance and pick-up voltage.

pub mod axisym;
pub mod coil;
pub mod elliptic;
pub mod geometry;
pub mod model;

pub use axisym::{axisymmetric_oracle, FieldMap, GridSpec, OracleResult, OracleSource};
pub use coil::{coil_field, mutual_inductance, self_inductance, CoilRole, CoilSpec, Vec3};
pub use geometry::{DetectionGeometry, DriveConvention, DriveSpec, Medium, SpherePose};
pub use model::{
    capacitance_from_resonance, effective_inductance, effective_mutual_inductance,
    induced_dipole, induced_voltage, position_sweep, resonance_frequency, SweepResult,
};
