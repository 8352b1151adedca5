//! Axisymmetric finite-volume solver for the azimuthal vector potential of
//! a coaxial coil pair with a flux-excluding sphere on the axis.
//!
//! The unknown is the flux function ψ = ρ A_φ, which satisfies
//! ∂_ρ(ρ⁻¹ ∂_ρ ψ) + ∂_z(ρ⁻¹ ∂_z ψ) = −µ₀ J_φ. Its finite-volume
//! discretisation is symmetric positive definite and is solved with
//! incomplete-Cholesky preconditioned conjugate gradients. ψ = 0 on the
//! axis, on the outer boundary and on the sphere surface (the sphere touches
//! the axis, so the constant it must take is zero). Links cut by the sphere
//! end at the exact intersection point.

use std::f64::consts::PI;
use std::io::Write;

use super::coil::{CoilSpec, Vec3};
use super::geometry::{DetectionGeometry, SpherePose};
use crate::constants::MU_0;
use crate::error::{Error, Result};
use crate::format;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Number of intervals in ρ.
    pub n_rho: usize,
    /// Number of intervals in z.
    pub n_z: usize,
    /// Outer boundary distance in units of the largest coil radius.
    pub margin: f64,
    /// Linear growth rate of the local spacing away from refinement zones.
    pub growth: f64,
    /// Converged when max |residual| < tolerance · max |rhs|.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl GridSpec {
    pub fn square(n: usize) -> Self {
        Self {
            n_rho: n,
            n_z: n,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_rho < 64 || self.n_z < 64 {
            return Err(Error::Config(format!(
                "oracle grid must be at least 64x64, got {}x{}",
                self.n_rho, self.n_z
            )));
        }
        if !(self.margin >= 2.0 && self.margin.is_finite()) {
            return Err(Error::Config(format!("oracle margin must be >= 2, got {}", self.margin)));
        }
        if !(self.growth > 0.0 && self.growth < 1.0) {
            return Err(Error::Config(format!("oracle growth must lie in (0, 1), got {}", self.growth)));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::Config(format!("oracle tolerance must lie in (0, 1), got {}", self.tolerance)));
        }
        Ok(())
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n_rho: 256,
            n_z: 256,
            margin: 20.0,
            growth: 0.1,
            tolerance: 1e-8,
            max_iterations: 20_000,
        }
    }
}

/// Which coil carries the unit current.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OracleSource {
    /// Mutual inductance transmitter → receiver.
    #[default]
    Transmitter,
    /// Receiver self-inductance.
    Receiver,
}

/// A_φ on the grid with the sphere present.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMap {
    pub rho: Vec<f64>,
    /// Along the transmitter axis, measured from the transmitter centre.
    pub z: Vec<f64>,
    /// Row-major in z: `a_phi[k * rho.len() + i]`, T m per ampere.
    pub a_phi: Vec<f64>,
}

impl FieldMap {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "rho_m,z_m,A_phi_T_m")?;
        let nr = self.rho.len();
        for (k, z) in self.z.iter().enumerate() {
            for (i, rho) in self.rho.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{}",
                    format::num(*rho),
                    format::num(*z),
                    format::num(self.a_phi[k * nr + i])
                )?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Coupling without the sphere, H.
    pub l_without: f64,
    /// Coupling with the sphere, H.
    pub l_eff: f64,
    pub delta_l: f64,
    /// Total CG iterations over both solves.
    pub iterations: usize,
    pub field_map: FieldMap,
}

/// Coaxial transmitter/receiver pair reduced to the (ρ, z) half plane.
struct AxialProblem {
    tx_radius: f64,
    tx_width: f64,
    tx_turns: f64,
    rx_radius: f64,
    rx_width: f64,
    rx_turns: f64,
    rx_z: f64,
    /// +1 when the receiver axis is parallel to the transmitter axis.
    rx_sign: f64,
    sphere_z: f64,
    sphere_radius: f64,
}

fn reduce(geometry: &DetectionGeometry, pose: &SpherePose, which: usize) -> Result<AxialProblem> {
    let tx = &geometry.transmitter;
    let rx = geometry.receiver(which)?;
    let axis = tx.axis();
    let scale = tx.mean_radius.max(rx.mean_radius);
    let off_axis = |p: &Vec3| {
        let d = p - tx.center;
        (d - axis * d.dot(&axis)).norm()
    };
    let dot = axis.dot(&rx.axis());
    if (dot.abs() - 1.0).abs() > 1e-9 || off_axis(&rx.center) > 1e-9 * scale {
        return Err(Error::Geometry("oracle needs a coaxial transmitter and receiver".into()));
    }
    if off_axis(&pose.center) > 1e-9 * scale {
        return Err(Error::Geometry("oracle needs the sphere on the common axis".into()));
    }
    pose.check_clearance(geometry)?;
    Ok(AxialProblem {
        tx_radius: tx.mean_radius,
        tx_width: tx.winding_width(),
        tx_turns: tx.turns as f64,
        rx_radius: rx.mean_radius,
        rx_width: rx.winding_width(),
        rx_turns: rx.turns as f64,
        rx_z: (rx.center - tx.center).dot(&axis),
        rx_sign: dot.signum(),
        sphere_z: (pose.center - tx.center).dot(&axis),
        sphere_radius: pose.radius,
    })
}

/// Node positions on [lo, hi] with n intervals, dense where the zones ask for
/// it, and with every anchor hit exactly.
fn graded_axis(lo: f64, hi: f64, anchors: &[f64], zones: &[(f64, f64, f64)], growth: f64, n: usize) -> Vec<f64> {
    let h_max = (hi - lo) / 16.0;
    let spacing = |x: f64| {
        zones
            .iter()
            .map(|&(a, b, h)| {
                let dist = if x < a { a - x } else if x > b { x - b } else { 0.0 };
                h + growth * dist
            })
            .fold(h_max, f64::min)
    };
    // cumulative node density on a fine uniform sample
    const SAMPLES: usize = 200_000;
    let dx = (hi - lo) / SAMPLES as f64;
    let xs: Vec<f64> = (0..=SAMPLES).map(|j| lo + j as f64 * dx).collect();
    let mut cum = vec![0.0; SAMPLES + 1];
    for j in 1..=SAMPLES {
        cum[j] = cum[j - 1] + 0.5 * dx * (1.0 / spacing(xs[j - 1]) + 1.0 / spacing(xs[j]));
    }
    let cum_at = |x: f64| {
        let t = ((x - lo) / dx).clamp(0.0, SAMPLES as f64);
        let j = (t.floor() as usize).min(SAMPLES - 1);
        cum[j] + (t - j as f64) * (cum[j + 1] - cum[j])
    };
    let x_at = |c: f64| {
        let j = cum.partition_point(|&v| v < c).clamp(1, SAMPLES);
        let (c0, c1) = (cum[j - 1], cum[j]);
        let t = if c1 > c0 { (c - c0) / (c1 - c0) } else { 0.0 };
        xs[j - 1] + t * dx
    };

    let mut breaks = vec![lo];
    let mut sorted: Vec<f64> = anchors.iter().copied().filter(|&a| a > lo && a < hi).collect();
    sorted.sort_by(f64::total_cmp);
    breaks.extend(sorted);
    breaks.push(hi);
    let total = cum[SAMPLES];
    let mut counts: Vec<usize> = breaks
        .windows(2)
        .map(|w| ((n as f64 * (cum_at(w[1]) - cum_at(w[0])) / total).round() as usize).max(1))
        .collect();
    // fix rounding drift on the largest segment
    let assigned: usize = counts.iter().sum();
    let big = (0..counts.len()).max_by_key(|&s| counts[s]).unwrap_or(0);
    counts[big] = (counts[big] as isize + n as isize - assigned as isize).max(1) as usize;

    let mut nodes = vec![lo];
    for (w, &m) in breaks.windows(2).zip(&counts) {
        let (c0, c1) = (cum_at(w[0]), cum_at(w[1]));
        for j in 1..m {
            nodes.push(x_at(c0 + (c1 - c0) * j as f64 / m as f64));
        }
        nodes.push(w[1]);
    }
    nodes
}

struct Grid {
    rho: Vec<f64>,
    z: Vec<f64>,
}

impl Grid {
    fn nr(&self) -> usize {
        self.rho.len()
    }

    fn len(&self) -> usize {
        self.rho.len() * self.z.len()
    }

    fn idx(&self, i: usize, k: usize) -> usize {
        k * self.nr() + i
    }

    /// Dual-cell edges in ρ around node i (clipped to the domain).
    fn rho_dual(&self, i: usize) -> (f64, f64) {
        let n = self.rho.len() - 1;
        let lo = if i == 0 { self.rho[0] } else { 0.5 * (self.rho[i - 1] + self.rho[i]) };
        let hi = if i == n { self.rho[n] } else { 0.5 * (self.rho[i] + self.rho[i + 1]) };
        (lo, hi)
    }

    fn z_dual(&self, k: usize) -> (f64, f64) {
        let n = self.z.len() - 1;
        let lo = if k == 0 { self.z[0] } else { 0.5 * (self.z[k - 1] + self.z[k]) };
        let hi = if k == n { self.z[n] } else { 0.5 * (self.z[k] + self.z[k + 1]) };
        (lo, hi)
    }
}

fn build_grid(p: &AxialProblem, spec: &GridSpec) -> Grid {
    let r_max = p.tx_radius.max(p.rx_radius);
    let extent = spec.margin * r_max;
    let zones_rho = [
        (0.0, p.sphere_radius, p.sphere_radius / 10.0),
        (p.tx_radius - p.tx_width / 2.0, p.tx_radius + p.tx_width / 2.0, p.tx_width / 6.0),
        (p.rx_radius - p.rx_width / 2.0, p.rx_radius + p.rx_width / 2.0, p.rx_width / 6.0),
    ];
    let zones_z = [
        (p.sphere_z - p.sphere_radius, p.sphere_z + p.sphere_radius, p.sphere_radius / 10.0),
        (-p.tx_width / 2.0, p.tx_width / 2.0, p.tx_width / 6.0),
        (p.rx_z - p.rx_width / 2.0, p.rx_z + p.rx_width / 2.0, p.rx_width / 6.0),
    ];
    // winding edges are anchored so the source integration is exact
    let anchors_rho = [
        p.rx_radius,
        zones_rho[1].0,
        zones_rho[1].1,
        zones_rho[2].0,
        zones_rho[2].1,
    ];
    let anchors_z = [p.rx_z, zones_z[1].0, zones_z[1].1, zones_z[2].0, zones_z[2].1];
    let z_lo = 0f64.min(p.rx_z).min(p.sphere_z) - extent;
    let z_hi = 0f64.max(p.rx_z).max(p.sphere_z) + extent;
    Grid {
        rho: graded_axis(0.0, extent, &anchors_rho, &zones_rho, spec.growth, spec.n_rho),
        z: graded_axis(z_lo, z_hi, &anchors_z, &zones_z, spec.growth, spec.n_z),
    }
}

/// Symmetric 5-point operator. Links are stored once: `west[p]` couples p to
/// p − 1 and `south[p]` couples p to p − nr. Fixed nodes have unit diagonal
/// and no links.
struct Operator {
    diag: Vec<f64>,
    west: Vec<f64>,
    south: Vec<f64>,
    fixed: Vec<bool>,
    nr: usize,
}

impl Operator {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let nr = self.nr;
        let n = x.len();
        for p in 0..n {
            let mut v = self.diag[p] * x[p];
            if self.west[p] != 0.0 {
                v -= self.west[p] * x[p - 1];
            }
            if p + 1 < n && self.west[p + 1] != 0.0 {
                v -= self.west[p + 1] * x[p + 1];
            }
            if self.south[p] != 0.0 {
                v -= self.south[p] * x[p - nr];
            }
            if p + nr < n && self.south[p + nr] != 0.0 {
                v -= self.south[p + nr] * x[p + nr];
            }
            y[p] = v;
        }
    }
}

/// Sphere occupancy test and cut-link geometry.
struct SphereCut {
    zc: f64,
    r: f64,
}

impl SphereCut {
    fn inside(&self, rho: f64, z: f64) -> bool {
        rho * rho + (z - self.zc).powi(2) <= self.r * self.r
    }
}

/// Fraction of a link below which an outside node is snapped onto the
/// sphere surface.
const SLIVER_FRACTION: f64 = 1e-3;

fn build_operator(grid: &Grid, sphere: Option<&SphereCut>) -> Operator {
    let (nr, nz) = (grid.rho.len(), grid.z.len());
    let n = grid.len();
    let mut fixed = vec![false; n];
    for k in 0..nz {
        for i in 0..nr {
            let boundary = i == 0 || i == nr - 1 || k == 0 || k == nz - 1;
            fixed[grid.idx(i, k)] = boundary || sphere.is_some_and(|s| s.inside(grid.rho[i], grid.z[k]));
        }
    }
    // snap nodes sitting on a sliver of the sphere boundary
    if let Some(s) = sphere {
        let mut snap = Vec::new();
        for k in 1..nz - 1 {
            for i in 1..nr - 1 {
                let p = grid.idx(i, k);
                if fixed[p] {
                    continue;
                }
                let (rho, z) = (grid.rho[i], grid.z[k]);
                let neighbours = [
                    (fixed[p - 1] && s.inside(grid.rho[i - 1], z), rho - grid.rho[i - 1], true),
                    (fixed[p + 1] && s.inside(grid.rho[i + 1], z), grid.rho[i + 1] - rho, true),
                    (fixed[p - nr] && s.inside(rho, grid.z[k - 1]), z - grid.z[k - 1], false),
                    (fixed[p + nr] && s.inside(rho, grid.z[k + 1]), grid.z[k + 1] - z, false),
                ];
                for (cut, h, radial) in neighbours {
                    if cut {
                        let d = if radial {
                            rho - (s.r * s.r - (z - s.zc).powi(2)).max(0.0).sqrt()
                        } else {
                            (rho.hypot(z - s.zc) - s.r).max(0.0)
                        };
                        if d.abs() < SLIVER_FRACTION * h {
                            snap.push(p);
                        }
                    }
                }
            }
        }
        for p in snap {
            fixed[p] = true;
        }
    }

    let mut diag = vec![0.0; n];
    let mut west = vec![0.0; n];
    let mut south = vec![0.0; n];
    for k in 0..nz {
        for i in 0..nr {
            let p = grid.idx(i, k);
            if fixed[p] {
                diag[p] = 1.0;
                continue;
            }
            let (rho, z) = (grid.rho[i], grid.z[k]);
            let (z0, z1) = grid.z_dual(k);
            let (r0, r1) = grid.rho_dual(i);
            let dz = z1 - z0;
            let log_width = (r1 / r0).ln();
            // radial links: ∫ρ dρ along the link is the exact resistance for a
            // uniform axial field
            for (j, toward_axis) in [(i - 1, true), (i + 1, false)] {
                let q = grid.idx(j, k);
                let rho_j = grid.rho[j];
                let end = match sphere {
                    Some(s) if fixed[q] && s.inside(rho_j, z) => {
                        let root = (s.r * s.r - (z - s.zc).powi(2)).max(0.0).sqrt();
                        if toward_axis { root.max(rho_j) } else { root.min(rho_j) }
                    }
                    _ => rho_j,
                };
                let c = dz * 2.0 / (rho * rho - end * end).abs();
                diag[p] += c;
                if !fixed[q] && toward_axis {
                    west[p] = c;
                }
            }
            for (j, below) in [(k - 1, true), (k + 1, false)] {
                let q = grid.idx(i, j);
                let z_j = grid.z[j];
                let end = match sphere {
                    Some(s) if fixed[q] && s.inside(rho, z_j) => {
                        let half = (s.r * s.r - rho * rho).max(0.0).sqrt();
                        if below { (s.zc + half).max(z_j) } else { (s.zc - half).min(z_j) }
                    }
                    _ => z_j,
                };
                let c = log_width / (z - end).abs();
                diag[p] += c;
                if !fixed[q] && below {
                    south[p] = c;
                }
            }
        }
    }
    Operator {
        diag,
        west,
        south,
        fixed,
        nr,
    }
}

/// µ₀ times the coil current in each dual cell, for unit terminal current.
fn source(grid: &Grid, radius: f64, width: f64, z_center: f64, turns: f64, fixed: &[bool]) -> Vec<f64> {
    let j = turns / (width * width);
    let (a0, a1) = (radius - width / 2.0, radius + width / 2.0);
    let (b0, b1) = (z_center - width / 2.0, z_center + width / 2.0);
    let overlap = |lo: f64, hi: f64, a: f64, b: f64| (hi.min(b) - lo.max(a)).max(0.0);
    let mut rhs = vec![0.0; grid.len()];
    for k in 0..grid.z.len() {
        let (z0, z1) = grid.z_dual(k);
        let oz = overlap(z0, z1, b0, b1);
        if oz == 0.0 {
            continue;
        }
        for i in 0..grid.rho.len() {
            let p = grid.idx(i, k);
            if fixed[p] {
                continue;
            }
            let (r0, r1) = grid.rho_dual(i);
            rhs[p] = MU_0 * j * oz * overlap(r0, r1, a0, a1);
        }
    }
    rhs
}

/// Incomplete Cholesky factor with the sparsity of the operator.
fn ic0(op: &Operator) -> Vec<f64> {
    let n = op.diag.len();
    let nr = op.nr;
    let mut d = vec![0.0; n];
    for p in 0..n {
        let mut v = op.diag[p];
        if op.west[p] != 0.0 {
            v -= op.west[p] * op.west[p] / d[p - 1];
        }
        if op.south[p] != 0.0 {
            v -= op.south[p] * op.south[p] / d[p - nr];
        }
        d[p] = v;
    }
    d
}

fn precondition(op: &Operator, d: &[f64], r: &[f64], out: &mut [f64]) {
    let n = r.len();
    let nr = op.nr;
    // (D + L) y = r
    for p in 0..n {
        let mut v = r[p];
        if op.west[p] != 0.0 {
            v += op.west[p] * out[p - 1];
        }
        if op.south[p] != 0.0 {
            v += op.south[p] * out[p - nr];
        }
        out[p] = v / d[p];
    }
    // (D + Lᵀ) x = D y
    for p in (0..n).rev() {
        let mut v = d[p] * out[p];
        if p + 1 < n && op.west[p + 1] != 0.0 {
            v += op.west[p + 1] * out[p + 1];
        }
        if p + nr < n && op.south[p + nr] != 0.0 {
            v += op.south[p + nr] * out[p + nr];
        }
        out[p] = v / d[p];
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned CG from a zero initial guess. Returns the iteration count.
fn solve(op: &Operator, b: &[f64], x: &mut [f64], spec: &GridSpec) -> Result<usize> {
    let n = b.len();
    let target = spec.tolerance * max_abs(b);
    x.iter_mut().for_each(|v| *v = 0.0);
    if target == 0.0 {
        return Ok(0);
    }
    let d = ic0(op);
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precondition(op, &d, &r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for iter in 1..=spec.max_iterations {
        op.apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for j in 0..n {
            x[j] += alpha * p[j];
            r[j] -= alpha * ap[j];
        }
        if max_abs(&r) < target {
            // confirm against the true residual
            op.apply(x, &mut ap);
            let true_res = ap.iter().zip(b).fold(0.0f64, |m, (a, bb)| m.max((bb - a).abs()));
            if true_res < target {
                return Ok(iter);
            }
            r.iter_mut().zip(ap.iter().zip(b)).for_each(|(rj, (a, bb))| *rj = bb - a);
        }
        precondition(op, &d, &r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for j in 0..n {
            p[j] = z[j] + beta * p[j];
        }
    }
    op.apply(x, &mut ap);
    let true_res = ap.iter().zip(b).fold(0.0f64, |m, (a, bb)| m.max((bb - a).abs()));
    Err(Error::Solver {
        iterations: spec.max_iterations,
        residual: true_res / max_abs(b),
    })
}

/// Flux through the disc ρ < ρ_r at z_r, summed annulus by annulus from the
/// discrete axial field (ψ_{i+1} − ψ_i)/((ρ²_{i+1} − ρ²_i)/2).
fn disc_flux(grid: &Grid, psi: &[f64], i_r: usize, k_r: usize) -> f64 {
    (0..i_r)
        .map(|i| {
            let (r0, r1) = (grid.rho[i], grid.rho[i + 1]);
            let b_z = (psi[grid.idx(i + 1, k_r)] - psi[grid.idx(i, k_r)]) / (0.5 * (r1 * r1 - r0 * r0));
            b_z * PI * (r1 * r1 - r0 * r0)
        })
        .sum()
}

/// Effective inductance of the coaxial arrangement from a direct field
/// solution with the sphere on the axis.
pub fn axisymmetric_oracle(
    geometry: &DetectionGeometry,
    pose: &SpherePose,
    which_receiver: usize,
    source_coil: OracleSource,
    spec: &GridSpec,
) -> Result<OracleResult> {
    spec.validate()?;
    let prob = reduce(geometry, pose, which_receiver)?;
    let grid = build_grid(&prob, spec);
    let i_r = grid.rho.iter().position(|&r| r == prob.rx_radius).ok_or_else(|| {
        Error::Evaluation("receiver radius missing from the oracle grid".into())
    })?;
    let k_r = grid.z.iter().position(|&z| z == prob.rx_z).ok_or_else(|| {
        Error::Evaluation("receiver plane missing from the oracle grid".into())
    })?;

    let free = build_operator(&grid, None);
    let (b, turns_ratio) = match source_coil {
        OracleSource::Transmitter => (
            source(&grid, prob.tx_radius, prob.tx_width, 0.0, prob.tx_turns, &free.fixed),
            prob.rx_sign,
        ),
        OracleSource::Receiver => (
            source(&grid, prob.rx_radius, prob.rx_width, prob.rx_z, prob.rx_turns, &free.fixed),
            1.0,
        ),
    };
    let mut psi0 = vec![0.0; grid.len()];
    let it0 = solve(&free, &b, &mut psi0, spec)?;

    // correction δ = ψ_sphere − ψ_free solves the sphere operator with the
    // free solution's mismatch as source
    let cut = SphereCut {
        zc: prob.sphere_z,
        r: prob.sphere_radius,
    };
    let with = build_operator(&grid, Some(&cut));
    let mut free_applied = vec![0.0; grid.len()];
    let mut with_applied = vec![0.0; grid.len()];
    free.apply(&psi0, &mut free_applied);
    with.apply(&psi0, &mut with_applied);
    let rhs: Vec<f64> = (0..grid.len())
        .map(|p| {
            if with.fixed[p] {
                -psi0[p]
            } else if free.fixed[p] {
                0.0
            } else {
                free_applied[p] - with_applied[p]
            }
        })
        .collect();
    let mut delta = vec![0.0; grid.len()];
    let it1 = solve(&with, &rhs, &mut delta, spec)?;

    let flux_scale = prob.rx_turns * turns_ratio;
    let l_without = flux_scale * disc_flux(&grid, &psi0, i_r, k_r);
    let delta_l = flux_scale * disc_flux(&grid, &delta, i_r, k_r);

    let nr = grid.nr();
    let a_phi = (0..grid.len())
        .map(|p| {
            let rho = grid.rho[p % nr];
            let psi = if with.fixed[p] { 0.0 } else { psi0[p] + delta[p] };
            if rho > 0.0 { psi / rho } else { 0.0 }
        })
        .collect();
    Ok(OracleResult {
        l_without,
        l_eff: l_without + delta_l,
        delta_l,
        iterations: it0 + it1,
        field_map: FieldMap {
            rho: grid.rho,
            z: grid.z,
            a_phi,
        },
    })
}

/// Coaxial receiver helper for tests and sweeps: sphere centres on the
/// common axis at the given distances from the receiver toward the
/// transmitter.
pub fn axial_positions(tx: &CoilSpec, rx: &CoilSpec, distances: &[f64]) -> Vec<Vec3> {
    let dir = (tx.center - rx.center).normalize();
    distances.iter().map(|d| rx.center + dir * *d).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::coil::mutual_inductance;
    use crate::detection::model::{coupling_shift, effective_mutual_inductance};

    fn pose_at(g: &DetectionGeometry, distance: f64) -> SpherePose {
        let c = axial_positions(&g.transmitter, &g.receivers[0], &[distance])[0];
        SpherePose::new(c, 1e-3).unwrap()
    }

    #[test]
    fn graded_axis_hits_anchors_and_is_increasing() {
        let xs = graded_axis(0.0, 0.1, &[0.003], &[(0.0, 0.001, 1e-4), (0.002, 0.004, 2e-4)], 0.1, 100);
        assert_eq!(xs.len(), 101);
        assert_eq!(xs[0], 0.0);
        assert_eq!(*xs.last().unwrap(), 0.1);
        assert!(xs.contains(&0.003));
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
        // finer near the zones than far away
        assert!(xs[1] - xs[0] < xs[100] - xs[99]);
    }

    #[test]
    fn operator_is_symmetric_positive() {
        let g = DetectionGeometry::coaxial_default().unwrap();
        let pose = pose_at(&g, 0.01);
        let prob = reduce(&g, &pose, 0).unwrap();
        let grid = build_grid(&prob, &GridSpec::square(64));
        let cut = SphereCut { zc: prob.sphere_z, r: prob.sphere_radius };
        let op = build_operator(&grid, Some(&cut));
        let n = grid.len();
        let x: Vec<f64> = (0..n).map(|j| ((j * 7919) % 101) as f64 / 101.0 - 0.4).collect();
        let y: Vec<f64> = (0..n).map(|j| ((j * 104729) % 97) as f64 / 97.0 - 0.6).collect();
        let (mut ax, mut ay) = (vec![0.0; n], vec![0.0; n]);
        op.apply(&x, &mut ax);
        op.apply(&y, &mut ay);
        let (xay, yax) = (dot(&x, &ay), dot(&y, &ax));
        assert!((xay - yax).abs() <= 1e-12 * xay.abs().max(yax.abs()));
        assert!(dot(&x, &ax) > 0.0);
        assert!(op.fixed.iter().filter(|f| **f).count() > 4 * 64);
    }

    #[test]
    fn uniform_field_is_exact() {
        // ψ = ρ²/2 satisfies the homogeneous equation; interior residual is
        // zero to rounding on any grid
        let g = DetectionGeometry::coaxial_default().unwrap();
        let pose = pose_at(&g, 0.01);
        let prob = reduce(&g, &pose, 0).unwrap();
        let grid = build_grid(&prob, &GridSpec::square(64));
        let op = build_operator(&grid, None);
        let psi: Vec<f64> = (0..grid.len()).map(|p| 0.5 * grid.rho[p % grid.nr()].powi(2)).collect();
        let mut out = vec![0.0; grid.len()];
        op.apply(&psi, &mut out);
        let nr = grid.nr();
        for k in 2..grid.z.len() - 2 {
            for i in 2..nr - 2 {
                let p = grid.idx(i, k);
                assert!(out[p].abs() < 1e-9 * op.diag[p] * psi[p], "{i} {k}: {}", out[p]);
            }
        }
    }

    #[test]
    fn free_coupling_matches_analytic_mutual_inductance() {
        let g = DetectionGeometry::coaxial_default().unwrap();
        let pose = pose_at(&g, 0.01);
        let res = axisymmetric_oracle(&g, &pose, 0, OracleSource::Transmitter, &GridSpec::square(128)).unwrap();
        let m = mutual_inductance(&g.transmitter, &g.receivers[0]).unwrap();
        assert!((res.l_without - m).abs() / m < 0.03, "{} vs {m}", res.l_without);
    }

    #[test]
    fn sphere_reduces_coupling_like_a_dipole() {
        let g = DetectionGeometry::coaxial_default().unwrap();
        for d in [0.008, 0.014] {
            let pose = pose_at(&g, d);
            let res = axisymmetric_oracle(&g, &pose, 0, OracleSource::Transmitter, &GridSpec::square(128)).unwrap();
            let dipole = coupling_shift(&g.transmitter, &g.receivers[0], &pose).unwrap();
            assert!(res.delta_l < 0.0);
            assert!((res.delta_l - dipole).abs() / dipole.abs() < 0.15, "d = {d}: {} vs {dipole}", res.delta_l);
            let (_, dm) = effective_mutual_inductance(&g, &pose, 0).unwrap();
            assert_eq!(dm, dipole);
        }
    }

    #[test]
    fn field_map_has_zero_inside_sphere() {
        let g = DetectionGeometry::coaxial_default().unwrap();
        let pose = pose_at(&g, 0.01);
        let res = axisymmetric_oracle(&g, &pose, 0, OracleSource::Receiver, &GridSpec::square(64)).unwrap();
        let map = &res.field_map;
        let nr = map.rho.len();
        let zc = g.receivers[0].center.z - 0.01;
        let k = map.z.iter().position(|&z| (z - zc).abs() < 5e-4).unwrap();
        let i = map.rho.iter().position(|&r| r > 0.0 && r < 5e-4).unwrap();
        assert_eq!(map.a_phi[k * nr + i], 0.0);
        assert!(res.delta_l < 0.0);
        let mut buf = Vec::new();
        map.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), map.rho.len() * map.z.len() + 1);
    }

    #[test]
    fn rejects_small_grids_and_off_axis_spheres() {
        let g = DetectionGeometry::coaxial_default().unwrap();
        let pose = pose_at(&g, 0.01);
        assert!(matches!(
            axisymmetric_oracle(&g, &pose, 0, OracleSource::Transmitter, &GridSpec::square(32)),
            Err(Error::Config(_))
        ));
        let off = SpherePose::new(pose.center + Vec3::new(1e-3, 0.0, 0.0), 1e-3).unwrap();
        assert!(matches!(
            axisymmetric_oracle(&g, &off, 0, OracleSource::Transmitter, &GridSpec::square(64)),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let g = DetectionGeometry::coaxial_default().unwrap();
        let pose = pose_at(&g, 0.01);
        let spec = GridSpec { max_iterations: 3, ..GridSpec::square(64) };
        match axisymmetric_oracle(&g, &pose, 0, OracleSource::Transmitter, &spec) {
            Err(Error::Solver { iterations, residual }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-8);
            }
            other => panic!("expected solver error, got {other:?}"),
        }
    }
}
