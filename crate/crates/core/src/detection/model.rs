//! Induced-dipole model of the sphere and the resulting inductance shift,
//! resonance and pick-up voltage.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;

use super::coil::{mutual_inductance, self_inductance, CoilSpec, Vec3};
use super::geometry::{DetectionGeometry, DriveConvention, SpherePose};
use crate::constants::MU_0;
use crate::error::{Error, Result};
use crate::format;

/// Moment of a perfectly diamagnetic sphere in a locally uniform field,
/// A m².
pub fn induced_dipole(b_local: &Vec3, sphere_radius: f64) -> Vec3 {
    -2.0 * PI * sphere_radius.powi(3) / MU_0 * b_local
}

/// Change in coupling between `source` and `pickup` caused by the sphere:
/// flux of the dipole induced by the source's unit-current field through
/// the pickup coil.
pub fn coupling_shift(source: &CoilSpec, pickup: &CoilSpec, pose: &SpherePose) -> Result<f64> {
    let b_source = source.field(1.0, &pose.center)?;
    let b_pickup = pickup.field(1.0, &pose.center)?;
    Ok(induced_dipole(&b_source, pose.radius).dot(&b_pickup))
}

/// Unperturbed and perturbed coupling for the geometry's drive convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inductance {
    /// H, receiver self-inductance or transmitter–receiver mutual inductance.
    pub unperturbed: f64,
    pub delta: f64,
}

impl Inductance {
    pub fn effective(&self) -> f64 {
        self.unperturbed + self.delta
    }
}

/// Receiver self-inductance with the sphere present, (L_eff, ΔL).
pub fn effective_inductance(
    geometry: &DetectionGeometry,
    pose: &SpherePose,
    which_receiver: usize,
) -> Result<(f64, f64)> {
    let rx = geometry.receiver(which_receiver)?;
    pose.check_clearance(geometry)?;
    let l0 = self_inductance(rx)?;
    let dl = coupling_shift(rx, rx, pose)?;
    Ok((l0 + dl, dl))
}

/// Transmitter–receiver mutual inductance with the sphere present,
/// (M_eff, ΔM).
pub fn effective_mutual_inductance(
    geometry: &DetectionGeometry,
    pose: &SpherePose,
    which_receiver: usize,
) -> Result<(f64, f64)> {
    let rx = geometry.receiver(which_receiver)?;
    pose.check_clearance(geometry)?;
    let m0 = mutual_inductance(&geometry.transmitter, rx)?;
    let dm = coupling_shift(&geometry.transmitter, rx, pose)?;
    Ok((m0 + dm, dm))
}

/// Coupling in the geometry's drive convention.
pub fn coupling(
    geometry: &DetectionGeometry,
    pose: &SpherePose,
    which_receiver: usize,
) -> Result<Inductance> {
    let (eff, delta) = match geometry.convention {
        DriveConvention::Receiver => effective_inductance(geometry, pose, which_receiver)?,
        DriveConvention::Transmitter => effective_mutual_inductance(geometry, pose, which_receiver)?,
    };
    Ok(Inductance {
        unperturbed: eff - delta,
        delta,
    })
}

pub fn resonance_frequency(inductance: f64, capacitance: f64) -> Result<f64> {
    if !(inductance > 0.0 && inductance.is_finite()) {
        return Err(Error::Domain(format!("inductance must be positive, got {inductance}")));
    }
    if !(capacitance > 0.0 && capacitance.is_finite()) {
        return Err(Error::Domain(format!("capacitance must be positive, got {capacitance}")));
    }
    Ok(1.0 / (2.0 * PI * (inductance * capacitance).sqrt()))
}

pub fn capacitance_from_resonance(frequency: f64, inductance: f64) -> Result<f64> {
    if !(frequency > 0.0 && frequency.is_finite()) {
        return Err(Error::Domain(format!("frequency must be positive, got {frequency}")));
    }
    if !(inductance > 0.0 && inductance.is_finite()) {
        return Err(Error::Domain(format!("inductance must be positive, got {inductance}")));
    }
    let w = 2.0 * PI * frequency;
    Ok(1.0 / (w * w * inductance))
}

/// Amplitude of the voltage induced in a receiver, V.
pub fn induced_voltage(
    geometry: &DetectionGeometry,
    pose: &SpherePose,
    which_receiver: usize,
) -> Result<f64> {
    let c = coupling(geometry, pose, which_receiver)?;
    Ok(c.effective().abs() * geometry.drive.amplitude * geometry.drive.angular_frequency)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Distance from the sphere centre to the receiver centre, m.
    pub position: f64,
    pub result: std::result::Result<SweepValues, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepValues {
    /// Receiver self-inductance with the sphere present, H.
    pub l_eff: f64,
    pub delta_l: f64,
    pub frequency: f64,
    pub voltage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

pub const SWEEP_CSV_HEADER: &str = "position_m,L_eff_H,delta_L_H,f_Hz,V_amplitude_V";

impl SweepResult {
    pub fn ok_rows(&self) -> impl Iterator<Item = (f64, &SweepValues)> {
        self.rows
            .iter()
            .filter_map(|r| r.result.as_ref().ok().map(|v| (r.position, v)))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{SWEEP_CSV_HEADER}")?;
        for row in &self.rows {
            match &row.result {
                Ok(v) => writeln!(
                    out,
                    "{},{},{},{},{}",
                    format::num(row.position),
                    format::num(v.l_eff),
                    format::num(v.delta_l),
                    format::num(v.frequency),
                    format::num(v.voltage)
                )?,
                Err(_) => writeln!(out, "{},,,,", format::num(row.position))?,
            }
        }
        Ok(())
    }
}

fn sweep_point(
    geometry: &DetectionGeometry,
    center: Vec3,
    radius: f64,
    which_receiver: usize,
) -> Result<SweepValues> {
    let pose = SpherePose::new(center, radius)?;
    let (l_eff, delta_l) = effective_inductance(geometry, &pose, which_receiver)?;
    if l_eff <= 0.0 {
        return Err(Error::Evaluation(format!("non-positive L_eff {l_eff:e}")));
    }
    Ok(SweepValues {
        l_eff,
        delta_l,
        frequency: resonance_frequency(l_eff, geometry.capacitance)?,
        voltage: induced_voltage(geometry, &pose, which_receiver)?,
    })
}

/// Evaluate the sphere at each centre in `path`. Rows are sorted by distance
/// to the receiver; failures are recorded per row.
pub fn position_sweep(
    geometry: &DetectionGeometry,
    path: &[Vec3],
    sphere_radius: f64,
    which_receiver: usize,
) -> Result<SweepResult> {
    let rx = geometry.receiver(which_receiver)?;
    let mut rows: Vec<SweepRow> = path
        .par_iter()
        .map(|c| SweepRow {
            position: (c - rx.center).norm(),
            result: sweep_point(geometry, *c, sphere_radius, which_receiver)
                .map_err(|e| e.to_string()),
        })
        .collect();
    rows.sort_by(|a, b| a.position.total_cmp(&b.position));
    Ok(SweepResult { rows })
}

/// Points on the receiver axis at the given distances from its centre, on
/// the side facing `toward`.
pub fn receiver_axis_path(rx: &CoilSpec, toward: &Vec3, distances: &[f64]) -> Vec<Vec3> {
    let mut dir = rx.axis();
    if dir.dot(&(toward - rx.center)) < 0.0 {
        dir = -dir;
    }
    distances.iter().map(|d| rx.center + dir * *d).collect()
}
