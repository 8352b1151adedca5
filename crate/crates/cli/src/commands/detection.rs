use std::io::Write;

use levsim::detection::{
    axisymmetric_oracle, DetectionGeometry, DriveConvention, FieldMap, GridSpec, OracleSource,
    SpherePose, SweepResult, Vec3,
};
use levsim::detection::model::{coupling, receiver_axis_path, SWEEP_CSV_HEADER};
use levsim::detection::position_sweep;
use levsim::format;
use rayon::prelude::*;

use super::{first_row_error, Context};
use crate::error::CliError;
use crate::manifest::Run;
use crate::svg::{Plot, Scale, Series, Style, PALETTE};

/// Dipole and grid-solution coupling shifts at one sphere position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRow {
    pub dipole: f64,
    pub oracle: f64,
}

impl OracleRow {
    pub fn rel_diff(&self) -> f64 {
        self.dipole / self.oracle - 1.0
    }
}

pub fn run(run: &mut Run, ctx: &Context) -> Result<(), CliError> {
    let d = &ctx.config.config.detection;
    if d.distances_m.is_empty() {
        return Err(CliError::Usage("detection.distances_m is empty".into()));
    }
    if d.distances_m.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(CliError::Usage("detection.distances_m must be positive".into()));
    }
    let geometry = match &d.geometry_file {
        Some(p) => {
            let path = ctx.config.resolve(p);
            let bytes = run.read_input(&path)?;
            let text = String::from_utf8(bytes)
                .map_err(|_| CliError::Usage(format!("{}: not UTF-8", path.display())))?;
            DetectionGeometry::from_toml_str(&text).map_err(|e| CliError::from(e).in_file(&path))?
        }
        None => DetectionGeometry::coaxial_default()?,
    };
    let rx = geometry.receiver(d.receiver)?;

    let mut distances = d.distances_m.clone();
    distances.sort_by(f64::total_cmp);
    let path = receiver_axis_path(rx, &geometry.transmitter.center, &distances);
    let sweep = position_sweep(&geometry, &path, d.sphere_radius_m, d.receiver)?;

    let oracle = if ctx.oracle {
        let spec = GridSpec::square(d.oracle_grid);
        Some(oracle_rows(&geometry, &path, d.sphere_radius_m, d.receiver, &spec)?)
    } else {
        None
    };

    run.write_csv("detection_sweep.csv", |w| write_sweep(w, &sweep, oracle.as_ref().map(|o| &o.0)))?;
    if let Some((_, Some(map))) = &oracle {
        run.write_csv("oracle_field_map.csv", |w| map.write_csv(w))?;
    }
    if ctx.svg {
        let note = format!("manifest_sha256={}", run.manifest_sha256());
        for (name, plot) in plots(&sweep, oracle.as_ref().map(|o| &o.0)) {
            run.write_svg(name, &plot.render(&note))?;
        }
    }

    first_row_error(
        sweep.rows.iter().map(|r| (format!("d = {} m", r.position), r.result.as_ref().err().cloned())),
        "detection sweep",
    )?;
    if let Some((rows, _)) = &oracle {
        first_row_error(
            sweep
                .rows
                .iter()
                .zip(rows)
                .map(|(r, o)| (format!("d = {} m", r.position), o.as_ref().err().cloned())),
            "oracle",
        )?;
    }
    println!("detection sweep: {} positions", sweep.rows.len());
    Ok(())
}

type OracleRows = (Vec<Result<OracleRow, String>>, Option<FieldMap>);

/// Grid-solution cross-check at each position of `path` (sorted by
/// distance), in the geometry's drive convention. The field map of the
/// nearest successful position is kept.
fn oracle_rows(
    geometry: &DetectionGeometry,
    path: &[Vec3],
    radius: f64,
    receiver: usize,
    spec: &GridSpec,
) -> Result<OracleRows, CliError> {
    if spec.n_rho < 64 {
        return Err(CliError::Usage(format!("detection.oracle_grid must be at least 64, got {}", spec.n_rho)));
    }
    let source = match geometry.convention {
        DriveConvention::Receiver => OracleSource::Receiver,
        DriveConvention::Transmitter => OracleSource::Transmitter,
    };
    let results: Vec<Result<(OracleRow, FieldMap), String>> = path
        .par_iter()
        .map(|c| {
            let pose = SpherePose::new(*c, radius).map_err(|e| e.to_string())?;
            let dipole = coupling(geometry, &pose, receiver).map_err(|e| e.to_string())?.delta;
            let o = axisymmetric_oracle(geometry, &pose, receiver, source, spec).map_err(|e| e.to_string())?;
            Ok((OracleRow { dipole, oracle: o.delta_l }, o.field_map))
        })
        .collect();
    let mut map = None;
    let rows = results
        .into_iter()
        .map(|r| {
            r.map(|(row, m)| {
                map.get_or_insert(m);
                row
            })
        })
        .collect();
    Ok((rows, map))
}

fn write_sweep<W: Write>(
    mut w: W,
    sweep: &SweepResult,
    oracle: Option<&Vec<Result<OracleRow, String>>>,
) -> std::io::Result<()> {
    let mut body = Vec::new();
    sweep.write_csv(&mut body)?;
    let text = String::from_utf8(body).expect("csv is utf-8");
    let Some(oracle) = oracle else {
        return w.write_all(text.as_bytes());
    };
    for (k, line) in text.lines().enumerate() {
        if k == 0 {
            debug_assert_eq!(line, SWEEP_CSV_HEADER);
            writeln!(w, "{line},delta_dipole_H,delta_oracle_H,oracle_rel_diff")?;
            continue;
        }
        match &oracle[k - 1] {
            Ok(o) => writeln!(
                w,
                "{line},{},{},{}",
                format::num(o.dipole),
                format::num(o.oracle),
                format::num(o.rel_diff())
            )?,
            Err(_) => writeln!(w, "{line},,,")?,
        }
    }
    Ok(())
}

fn plots(
    sweep: &SweepResult,
    oracle: Option<&Vec<Result<OracleRow, String>>>,
) -> Vec<(&'static str, Plot)> {
    let ok: Vec<_> = sweep.ok_rows().map(|(d, v)| (d * 1e3, *v)).collect();
    let line = |label: &str, pts: Vec<(f64, f64)>, color| {
        vec![
            Series::new(label, pts.clone(), Style::Solid, color),
            Series::new("", pts, Style::Markers, color),
        ]
    };
    let mut out = vec![
        (
            "detection_sweep_voltage.svg",
            Plot {
                title: "Induced voltage amplitude".into(),
                x_label: "sphere distance from receiver (mm)".into(),
                y_label: "V (V)".into(),
                x_scale: Scale::Linear,
                y_scale: Scale::Linear,
                series: line("V", ok.iter().map(|(d, v)| (*d, v.voltage)).collect(), PALETTE[0]),
            },
        ),
        (
            "detection_sweep_frequency.svg",
            Plot {
                title: "Receiver LC resonance".into(),
                x_label: "sphere distance from receiver (mm)".into(),
                y_label: "f (Hz)".into(),
                x_scale: Scale::Linear,
                y_scale: Scale::Linear,
                series: line("f", ok.iter().map(|(d, v)| (*d, v.frequency)).collect(), PALETTE[1]),
            },
        ),
    ];
    if let Some(oracle) = oracle {
        let rows: Vec<(f64, OracleRow)> = sweep
            .rows
            .iter()
            .zip(oracle)
            .filter_map(|(r, o)| o.as_ref().ok().map(|o| (r.position * 1e3, *o)))
            .collect();
        out.push((
            "detection_sweep_oracle.svg",
            Plot {
                title: "Coupling shift: dipole model vs grid solution".into(),
                x_label: "sphere distance from receiver (mm)".into(),
                y_label: "|delta| (H)".into(),
                x_scale: Scale::Linear,
                y_scale: Scale::Log,
                series: vec![
                    Series::new("dipole", rows.iter().map(|(d, o)| (*d, o.dipole.abs())).collect(), Style::Solid, PALETTE[0]),
                    Series::new("grid", rows.iter().map(|(d, o)| (*d, o.oracle.abs())).collect(), Style::Markers, PALETTE[1]),
                ],
            },
        ));
    }
    out
}
