//! Multi-turn circular coils: fields, vector potentials and inductances.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::elliptic::complete_elliptic;
use crate::constants::MU_0;
use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Points closer than this to a filament are treated as singular, m.
pub const FILAMENT_SINGULAR_DISTANCE: f64 = 1e-9;

/// Geometric mean distance of a square cross-section, in units of its side.
const SQUARE_GMD_RATIO: f64 = 0.447_049;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoilRole {
    Transmitter,
    Receiver,
}

/// A circular coil idealised as an N-turn filament at its mean radius.
#[derive(Debug, Clone, PartialEq)]
pub struct CoilSpec {
    pub center: Vec3,
    axis: Vec3,
    pub mean_radius: f64,
    pub turns: u32,
    /// Total conductor cross-section of the winding, m² (taken as square).
    pub conductor_cross_section: f64,
    pub role: CoilRole,
}

impl CoilSpec {
    pub fn new(
        role: CoilRole,
        center: Vec3,
        axis: Vec3,
        mean_radius: f64,
        turns: u32,
        conductor_cross_section: f64,
    ) -> Result<Self> {
        let norm = axis.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Geometry("coil axis must be a non-zero vector".into()));
        }
        if !(mean_radius.is_finite() && mean_radius > 0.0) {
            return Err(Error::Geometry(format!("coil radius must be positive, got {mean_radius}")));
        }
        if turns == 0 {
            return Err(Error::Geometry("coil needs at least one turn".into()));
        }
        if !(conductor_cross_section.is_finite() && conductor_cross_section > 0.0) {
            return Err(Error::Geometry("conductor cross-section must be positive".into()));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Geometry("coil center must be finite".into()));
        }
        Ok(Self {
            center,
            axis: axis / norm,
            mean_radius,
            turns,
            conductor_cross_section,
            role,
        })
    }

    pub fn axis(&self) -> Vec3 {
        self.axis
    }

    /// Side length of the (square) winding cross-section, m.
    pub fn winding_width(&self) -> f64 {
        self.conductor_cross_section.sqrt()
    }

    /// Half the winding width: the tube radius used for clearance checks.
    pub fn half_width(&self) -> f64 {
        0.5 * self.winding_width()
    }

    /// Orthonormal (u, v) spanning the coil plane.
    fn plane_basis(&self) -> (Vec3, Vec3) {
        let n = self.axis;
        let helper = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let u = (helper - n * n.dot(&helper)).normalize();
        let v = n.cross(&u);
        (u, v)
    }

    /// Point on the filament at azimuth `theta` and the unit tangent there.
    pub fn filament_point(&self, theta: f64) -> (Vec3, Vec3) {
        let (u, v) = self.plane_basis();
        let (s, c) = theta.sin_cos();
        (
            self.center + self.mean_radius * (u * c + v * s),
            -u * s + v * c,
        )
    }

    /// Cylindrical coordinates (ρ, z) of `point` in the coil frame, and the
    /// radial unit vector (zero on the axis).
    fn local(&self, point: &Vec3) -> (f64, f64, Vec3) {
        let d = point - self.center;
        let z = d.dot(&self.axis);
        let radial = d - self.axis * z;
        let rho = radial.norm();
        let rho_hat = if rho > 0.0 { radial / rho } else { Vec3::zeros() };
        (rho, z, rho_hat)
    }

    /// Distance from `point` to the filament circle.
    pub fn distance_to_filament(&self, point: &Vec3) -> f64 {
        let (rho, z, _) = self.local(point);
        (rho - self.mean_radius).hypot(z)
    }

    /// Magnetic flux density of the coil carrying `current` (per turn), T.
    pub fn field(&self, current: f64, point: &Vec3) -> Result<Vec3> {
        let (rho, z, rho_hat) = self.local(point);
        let (b_rho, b_z) = loop_field_local(self.mean_radius, rho, z)?;
        let scale = current * self.turns as f64;
        Ok((rho_hat * b_rho + self.axis * b_z) * scale)
    }

    /// Vector potential of the coil carrying `current` (per turn), T m.
    pub fn vector_potential(&self, current: f64, point: &Vec3) -> Result<Vec3> {
        let (rho, z, rho_hat) = self.local(point);
        if rho == 0.0 {
            return Ok(Vec3::zeros());
        }
        let a_phi = loop_vector_potential_local(self.mean_radius, rho, z)?;
        let phi_hat = self.axis.cross(&rho_hat);
        Ok(phi_hat * (a_phi * current * self.turns as f64))
    }
}

/// (B_ρ, B_z) of a single-turn loop of radius `a` carrying 1 A, at local
/// cylindrical coordinates (ρ, z).
pub fn loop_field_local(a: f64, rho: f64, z: f64) -> Result<(f64, f64)> {
    let alpha2 = (a - rho).powi(2) + z * z;
    if alpha2.sqrt() <= FILAMENT_SINGULAR_DISTANCE {
        return Err(Error::Evaluation(format!(
            "field requested on the filament (rho = {rho}, z = {z})"
        )));
    }
    let beta2 = (a + rho).powi(2) + z * z;
    let beta = beta2.sqrt();
    let m = 4.0 * a * rho / beta2;
    let ce = complete_elliptic(m)
        .ok_or_else(|| Error::Evaluation(format!("elliptic parameter {m} out of range")))?;
    let (k, e, s) = (ce.k, ce.e, ce.s);
    let r2 = rho * rho + z * z;
    let pref = MU_0 / (2.0 * PI * alpha2 * beta);
    let b_z = pref * (a * a * (e + k) + r2 * k * s - 2.0 * a * rho * k * (a * a + 2.0 * a * rho) / beta2);
    let b_rho = if rho == 0.0 {
        0.0
    } else {
        pref * z * k * (2.0 * a * rho * (0.5 * m - s) - alpha2 * s) / rho
    };
    Ok((b_rho, b_z))
}

/// A_φ of a single-turn loop of radius `a` carrying 1 A.
pub fn loop_vector_potential_local(a: f64, rho: f64, z: f64) -> Result<f64> {
    if rho == 0.0 {
        return Ok(0.0);
    }
    let alpha2 = (a - rho).powi(2) + z * z;
    if alpha2.sqrt() <= FILAMENT_SINGULAR_DISTANCE {
        return Err(Error::Evaluation(format!(
            "vector potential requested on the filament (rho = {rho}, z = {z})"
        )));
    }
    let beta2 = (a + rho).powi(2) + z * z;
    let m = 4.0 * a * rho / beta2;
    let ce = complete_elliptic(m)
        .ok_or_else(|| Error::Evaluation(format!("elliptic parameter {m} out of range")))?;
    Ok(MU_0 * beta2.sqrt() * ce.k * ce.s / (2.0 * PI * rho))
}

/// Field of `coil` carrying `current` at `point`.
pub fn coil_field(coil: &CoilSpec, current: f64, point: &Vec3) -> Result<Vec3> {
    coil.field(current, point)
}

/// Smallest distance between the filaments of two coils.
pub fn filament_separation(a: &CoilSpec, b: &CoilSpec) -> f64 {
    const SAMPLES: usize = 360;
    let dist = |theta: f64| a.distance_to_filament(&b.filament_point(theta).0);
    let step = 2.0 * PI / SAMPLES as f64;
    let (mut best_theta, mut best) = (0.0, f64::INFINITY);
    for k in 0..SAMPLES {
        let theta = k as f64 * step;
        let d = dist(theta);
        if d < best {
            best = d;
            best_theta = theta;
        }
    }
    // golden-section refinement around the best sample
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (best_theta - step, best_theta + step);
    for _ in 0..60 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if dist(x1) < dist(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    best.min(dist(0.5 * (lo + hi)))
}

/// Mutual inductance between two coils, H.
///
/// Evaluated as N_b ∮_b A_a · dl with the periodic trapezoid rule, refined
/// until successive halvings agree to ~1e-14.
pub fn mutual_inductance(a: &CoilSpec, b: &CoilSpec) -> Result<f64> {
    let separation = filament_separation(a, b);
    if separation < a.half_width() + b.half_width() {
        return Err(Error::Geometry(format!(
            "coil windings overlap (filament separation {separation:e} m)"
        )));
    }
    let integrand = |theta: f64| -> Result<f64> {
        let (p, t) = b.filament_point(theta);
        Ok(a.vector_potential(1.0, &p)?.dot(&t))
    };
    let scale = MU_0 * (a.mean_radius * b.mean_radius).sqrt() * a.turns as f64 * b.turns as f64;
    let mut n = 32usize;
    let mut sum: f64 = (0..n)
        .map(|k| integrand(2.0 * PI * k as f64 / n as f64))
        .sum::<Result<f64>>()?;
    let mut prev = sum * 2.0 * PI / n as f64;
    loop {
        // add the midpoints of the current rule
        let mids: f64 = (0..n)
            .map(|k| integrand(2.0 * PI * (k as f64 + 0.5) / n as f64))
            .sum::<Result<f64>>()?;
        sum += mids;
        n *= 2;
        let current = sum * 2.0 * PI / n as f64;
        let m = current * b.mean_radius * b.turns as f64;
        let diff = (current - prev).abs() * b.mean_radius * b.turns as f64;
        if diff <= 1e-14 * m.abs() + 1e-16 * scale || n >= 1 << 18 {
            return Ok(m);
        }
        prev = current;
    }
}

/// Self-inductance of a multi-turn circular coil with a square winding
/// section: µ₀ N² a (ln(8a/g) − 2) with g the section's geometric mean
/// distance.
pub fn self_inductance(coil: &CoilSpec) -> Result<f64> {
    let gmd = SQUARE_GMD_RATIO * coil.winding_width();
    let log_term = (8.0 * coil.mean_radius / gmd).ln() - 2.0;
    if log_term <= 0.0 {
        return Err(Error::Geometry(
            "winding cross-section too large for the thin-coil inductance formula".into(),
        ));
    }
    let n = coil.turns as f64;
    Ok(MU_0 * n * n * coil.mean_radius * log_term)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loop_at(center: Vec3, axis: Vec3, radius: f64, turns: u32) -> CoilSpec {
        CoilSpec::new(CoilRole::Receiver, center, axis, radius, turns, 1e-8).unwrap()
    }

    fn biot_savart(coil: &CoilSpec, point: &Vec3, segments: usize) -> Vec3 {
        let mut b = Vec3::zeros();
        let dtheta = 2.0 * PI / segments as f64;
        for k in 0..segments {
            let (p0, _) = coil.filament_point(k as f64 * dtheta);
            let (p1, _) = coil.filament_point((k + 1) as f64 * dtheta);
            let mid = 0.5 * (p0 + p1);
            let dl = p1 - p0;
            let r = point - mid;
            b += dl.cross(&r) / r.norm().powi(3);
        }
        b * MU_0 / (4.0 * PI) * coil.turns as f64
    }

    #[test]
    fn center_and_axis_values() {
        let a = 0.01;
        let coil = loop_at(Vec3::zeros(), Vec3::z(), a, 1);
        let b0 = coil.field(2.0, &Vec3::zeros()).unwrap();
        assert!((b0.z - MU_0 * 2.0 / (2.0 * a)).abs() / b0.z < 1e-14);
        let b1 = coil.field(1.0, &Vec3::new(0.0, 0.0, a)).unwrap();
        let expected = MU_0 * a * a / (2.0 * (2.0 * a * a).powf(1.5));
        assert!((b1.z - expected).abs() / expected < 1e-12);
        assert!(b1.x.abs() < 1e-25 && b1.y.abs() < 1e-25);
        for z in [-0.3, -0.02, 0.005, 0.1] {
            let bz = coil.field(1.0, &Vec3::new(0.0, 0.0, z)).unwrap().z;
            let ex = MU_0 * a * a / (2.0 * (a * a + z * z).powf(1.5));
            assert!((bz - ex).abs() / ex < 1e-10, "z = {z}");
        }
    }

    #[test]
    fn off_axis_matches_biot_savart() {
        let coil = loop_at(
            Vec3::new(0.001, -0.002, 0.003),
            Vec3::new(0.3, -0.2, 0.9),
            0.0125,
            100,
        );
        let points = [
            Vec3::new(0.004, 0.003, 0.02),
            Vec3::new(-0.01, 0.012, -0.004),
            Vec3::new(0.03, 0.0, 0.0),
            Vec3::new(0.002, -0.001, 0.0035),
        ];
        for p in points {
            let exact = coil.field(1.0, &p).unwrap();
            let bs = biot_savart(&coil, &p, 10_000);
            let err = (exact - bs).norm() / exact.norm();
            assert!(err < 1e-6, "point {p:?}: {err:e}");
        }
    }

    #[test]
    fn near_axis_is_smooth() {
        let coil = loop_at(Vec3::zeros(), Vec3::z(), 0.003, 1);
        for rho in [1e-12, 1e-9, 1e-6, 1e-4] {
            let b = coil.field(1.0, &Vec3::new(rho, 0.0, 0.002)).unwrap();
            let a = 0.003f64;
            let z = 0.002f64;
            let approx = 3.0 * MU_0 * a * a * z * rho / (4.0 * (a * a + z * z).powf(2.5));
            assert!((b.x - approx).abs() / approx < 1e-6 + 2.0 * rho / a, "rho {rho}");
        }
    }

    #[test]
    fn singular_on_filament() {
        let coil = loop_at(Vec3::zeros(), Vec3::z(), 0.01, 1);
        assert!(matches!(
            coil.field(1.0, &Vec3::new(0.01, 0.0, 0.0)),
            Err(Error::Evaluation(_))
        ));
        assert!(coil.field(1.0, &Vec3::new(0.01, 0.0, 1e-6)).is_ok());
    }

    #[test]
    fn curl_of_vector_potential_is_field() {
        let coil = loop_at(Vec3::new(0.0, 0.0, 0.001), Vec3::new(0.0, 0.6, 0.8), 0.006, 60);
        let p = Vec3::new(0.004, -0.002, 0.007);
        let h = 1e-6;
        let mut curl = Vec3::zeros();
        let d = |axis: usize, comp: usize| {
            let mut e = Vec3::zeros();
            e[axis] = h;
            (coil.vector_potential(1.0, &(p + e)).unwrap()[comp]
                - coil.vector_potential(1.0, &(p - e)).unwrap()[comp])
                / (2.0 * h)
        };
        curl.x = d(1, 2) - d(2, 1);
        curl.y = d(2, 0) - d(0, 2);
        curl.z = d(0, 1) - d(1, 0);
        let b = coil.field(1.0, &p).unwrap();
        assert!((curl - b).norm() / b.norm() < 1e-7);
    }

    fn coaxial_closed_form(a: f64, b: f64, d: f64) -> f64 {
        // textbook Maxwell formula; fine away from touching loops
        let k2 = 4.0 * a * b / ((a + b).powi(2) + d * d);
        let k = k2.sqrt();
        let ce = complete_elliptic(k2).unwrap();
        MU_0 * (a * b).sqrt() * ((2.0 / k - k) * ce.k - 2.0 / k * ce.e)
    }

    #[test]
    fn coaxial_mutual_matches_maxwell() {
        for (a, b, d) in [(0.003, 0.0125, 0.0227), (0.01, 0.01, 0.005), (0.02, 0.005, 0.1)] {
            let ca = loop_at(Vec3::zeros(), Vec3::z(), a, 3);
            let cb = loop_at(Vec3::new(0.0, 0.0, d), Vec3::z(), b, 7);
            let m = mutual_inductance(&ca, &cb).unwrap();
            let ex = 21.0 * coaxial_closed_form(a, b, d);
            assert!((m - ex).abs() / ex < 1e-10, "{a} {b} {d}: {m} vs {ex}");
        }
    }

    #[test]
    fn overlapping_coils_rejected() {
        let a = CoilSpec::new(CoilRole::Transmitter, Vec3::zeros(), Vec3::z(), 0.01, 10, 1e-6).unwrap();
        let b = CoilSpec::new(CoilRole::Receiver, Vec3::new(0.0, 0.0, 0.0005), Vec3::z(), 0.01, 10, 1e-6).unwrap();
        assert!(matches!(mutual_inductance(&a, &b), Err(Error::Geometry(_))));
        assert!(matches!(mutual_inductance(&a, &a), Err(Error::Geometry(_))));
    }

    #[test]
    fn receiver_self_inductance_order() {
        let rx = CoilSpec::new(CoilRole::Receiver, Vec3::zeros(), Vec3::z(), 3e-3, 60, 0.012e-4).unwrap();
        let l = self_inductance(&rx).unwrap();
        assert!(l > 21e-6 / 1.5 && l < 21e-6 * 1.5, "L = {l}");
    }

    #[test]
    fn constructor_validation() {
        assert!(CoilSpec::new(CoilRole::Receiver, Vec3::zeros(), Vec3::zeros(), 0.01, 1, 1e-6).is_err());
        assert!(CoilSpec::new(CoilRole::Receiver, Vec3::zeros(), Vec3::z(), 0.0, 1, 1e-6).is_err());
        assert!(CoilSpec::new(CoilRole::Receiver, Vec3::zeros(), Vec3::z(), 0.01, 0, 1e-6).is_err());
        let c = CoilSpec::new(CoilRole::Receiver, Vec3::zeros(), Vec3::new(0.0, 3.0, 4.0), 0.01, 1, 1e-6).unwrap();
        assert!((c.axis().norm() - 1.0).abs() < 1e-12);
    }
}
