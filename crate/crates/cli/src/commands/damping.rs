use levsim::damping::{damping_curve, log_grid, write_curve_csv, CurveMetadata, CurvePoint};

use super::{first_row_error, Context};
use crate::error::CliError;
use crate::manifest::Run;
use crate::svg::{Plot, Scale, Series, Style, PALETTE};

pub fn run(run: &mut Run, ctx: &Context) -> Result<(), CliError> {
    let media = ctx.media(run)?;
    let model = ctx.config.damping_model(media)?;
    let d = &ctx.config.config.damping;
    if d.points == 0 {
        return Err(CliError::Usage("damping.points must be at least 1".into()));
    }
    let grid = log_grid(d.t_min_k, d.t_max_k, d.points)?;
    let points = damping_curve(&model, &grid)?;

    run.write_csv("damping_curve.csv", |w| write_curve_csv(w, &points))?;
    run.write_json("damping_curve_meta.json", &CurveMetadata::for_model(&model))?;
    if ctx.svg {
        let note = format!("manifest_sha256={}", run.manifest_sha256());
        run.write_svg("damping_curve.svg", &plot(&points).render(&note))?;
    }
    first_row_error(
        points.iter().map(|p| {
            (
                format!("T = {} K", p.temperature),
                p.result.as_ref().err().map(|e| e.to_string()),
            )
        }),
        "damping curve",
    )?;
    let ok = points.iter().filter(|p| p.result.is_ok()).count();
    println!("damping curve: {ok} rows, {:?} composition", model.mode);
    Ok(())
}

fn plot(points: &[CurvePoint]) -> Plot {
    let channel = |label: &str, color, get: fn(&levsim::damping::Channels) -> Option<f64>| {
        let pts = points
            .iter()
            .filter_map(|p| {
                let b = p.result.as_ref().ok()?;
                get(&b.channels).map(|tau| (p.temperature, tau))
            })
            .collect();
        Series::new(label, pts, Style::Dashed, color)
    };
    let mut series = vec![
        channel("hydrodynamic", PALETTE[0], |c| c.hydrodynamic),
        channel("phonons", PALETTE[1], |c| c.phonon),
        channel("rotons", PALETTE[2], |c| c.roton),
        channel("3He impurities", PALETTE[3], |c| c.impurity),
        channel("intrinsic", PALETTE[5], |c| c.vacuum),
    ];
    series.retain(|s| !s.points.is_empty());
    // constant channels far off scale would flatten the plot; clip to the
    // composite range widened by three decades
    let total: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.result.as_ref().ok().map(|b| (p.temperature, b.tau_total)))
        .collect();
    let lo = total.iter().map(|p| p.1).fold(f64::INFINITY, f64::min) * 1e-3;
    let hi = total.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max) * 1e3;
    for s in &mut series {
        s.points.retain(|p| p.1 >= lo && p.1 <= hi);
    }
    series.push(Series::new("total", total, Style::Solid, PALETTE[4]));
    Plot {
        title: "Oscillator decay time in liquid 4He".into(),
        x_label: "T (K)".into(),
        y_label: "tau (s)".into(),
        x_scale: Scale::Log,
        y_scale: Scale::Log,
        series,
    }
}
