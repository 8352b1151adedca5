//! Fundamental constants (CODATA 2018).

/// Vacuum permeability, H/m.
pub const MU_0: f64 = 1.256_637_062_12e-6;

/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Boltzmann constant, J/K.
    pub k_b: f64,
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Bare ³He atomic mass, kg.
    pub m3: f64,
    /// ⁴He atomic mass, kg.
    pub m4: f64,
}

impl PhysicalConstants {
    pub const CODATA: PhysicalConstants = PhysicalConstants {
        k_b: 1.380_649e-23,
        hbar: 1.054_571_817e-34,
        m3: 3.016_029_321_97 * ATOMIC_MASS_UNIT,
        m4: 4.002_603_254_13 * ATOMIC_MASS_UNIT,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA
    }
}
