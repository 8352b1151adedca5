use std::path::Path;

use levsim::damping::{log_grid, DampingModel};
use levsim::fitting::{
    fit_he3_concentration, predict_contamination, ConcentrationFit, ContaminationPrediction,
    FitOptions, TauTemperatureSeries,
};
use levsim::format;
use serde::Serialize;

use super::Context;
use crate::error::CliError;
use crate::manifest::Run;
use crate::svg::{Plot, Scale, Series, Style, PALETTE};

#[derive(Debug, Serialize)]
struct ContaminationSummary {
    added_he3_fraction: f64,
    x3_base: f64,
    x3_contaminated: f64,
    impurity_regime_ratio: f64,
}

#[derive(Debug, Serialize)]
struct FitReport<'a> {
    input: String,
    composition: levsim::damping::CompositionMode,
    fit: &'a ConcentrationFit,
    contamination: Option<ContaminationSummary>,
}

pub fn run(run: &mut Run, ctx: &Context, data: Option<&Path>) -> Result<(), CliError> {
    let f = &ctx.config.config.fit;
    let path = match (data, &f.data_csv) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => ctx.config.resolve(p),
        (None, None) => {
            return Err(CliError::Usage("fit-he3 needs a data CSV argument or fit.data_csv".into()))
        }
    };
    let bytes = run.read_input(&path)?;
    let series = TauTemperatureSeries::from_csv(&bytes[..])
        .map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))?;
    let media = ctx.media(run)?;
    let model = ctx.config.damping_model(media)?;
    if f.fit_tau_vacuum && model.tau_vacuum.is_none() {
        return Err(CliError::Usage("fit.fit_tau_vacuum needs damping.vacuum_channel".into()));
    }
    let n4 = model.media.n4();
    let opts = FitOptions {
        n3_bracket: (f.he3_fraction_min * n4, f.he3_fraction_max * n4),
        tolerance: f.tolerance,
        high_t_threshold: f.high_t_threshold_k,
        high_t_weight: f.high_t_weight,
        tau_vacuum_bracket: f.fit_tau_vacuum.then_some((f.tau_vacuum_min_s, f.tau_vacuum_max_s)),
    };
    let fit = fit_he3_concentration(&series, &model, &opts)?;
    let fitted = model.clone().with_n3(fit.n3).with_tau_vacuum(fit.tau_vacuum);

    let contamination = match f.added_he3_fraction {
        Some(added) => {
            let d = &ctx.config.config.damping;
            let grid = log_grid(d.t_min_k, d.t_max_k, d.points.max(2))?;
            Some((added, predict_contamination(&fit, added, &model, &grid)?))
        }
        None => None,
    };

    run.write_csv("fit_residuals.csv", |w| write_residuals(w, &series, &fitted))?;
    if let Some((_, pred)) = &contamination {
        run.write_csv("contamination.csv", |w| pred.write_csv(w))?;
    }
    let report = FitReport {
        input: path.display().to_string(),
        composition: model.mode,
        fit: &fit,
        contamination: contamination.as_ref().map(|(added, p)| ContaminationSummary {
            added_he3_fraction: *added,
            x3_base: p.x3_base,
            x3_contaminated: p.x3_contaminated,
            impurity_regime_ratio: p.impurity_regime_ratio(),
        }),
    };
    run.write_json("concentration_fit.json", &report)?;
    if ctx.svg {
        let note = format!("manifest_sha256={}", run.manifest_sha256());
        let plot = plot(&series, &fitted, contamination.as_ref().map(|c| &c.1));
        run.write_svg("fit_he3.svg", &plot.render(&note))?;
    }
    println!("fit-he3: x3 = {:e} (n3 = {:e} 1/m^3)", fit.x3, fit.n3);
    Ok(())
}

fn write_residuals<W: std::io::Write>(
    mut w: W,
    series: &TauTemperatureSeries,
    model: &DampingModel,
) -> std::io::Result<()> {
    writeln!(w, "T_K,tau_data_s,tau_model_s,ln_residual")?;
    for r in &series.rows {
        match model.breakdown(r.temperature) {
            Ok(b) => writeln!(
                w,
                "{},{},{},{}",
                format::num(r.temperature),
                format::num(r.tau),
                format::num(b.tau_total),
                format::num(b.tau_total.ln() - r.tau.ln())
            )?,
            Err(_) => writeln!(w, "{},{},,", format::num(r.temperature), format::num(r.tau))?,
        }
    }
    Ok(())
}

fn plot(series: &TauTemperatureSeries, model: &DampingModel, pred: Option<&ContaminationPrediction>) -> Plot {
    let t_lo = series.rows.iter().map(|r| r.temperature).fold(f64::INFINITY, f64::min);
    let t_hi = series.rows.iter().map(|r| r.temperature).fold(f64::NEG_INFINITY, f64::max);
    let curve = if t_hi > t_lo {
        log_grid(t_lo, t_hi, 100)
            .unwrap_or_default()
            .into_iter()
            .filter_map(|t| model.breakdown(t).ok().map(|b| (t, b.tau_total)))
            .collect()
    } else {
        Vec::new()
    };
    let mut s = vec![
        Series::new("data", series.rows.iter().map(|r| (r.temperature, r.tau)).collect(), Style::Markers, PALETTE[0]),
        Series::new("fit", curve, Style::Solid, PALETTE[1]),
    ];
    if let Some(p) = pred {
        s.push(Series::new(
            "with added 3He",
            p.rows.iter().map(|r| (r.temperature, r.tau_contaminated)).collect(),
            Style::Dashed,
            PALETTE[3],
        ));
    }
    Plot {
        title: "3He concentration fit".into(),
        x_label: "T (K)".into(),
        y_label: "tau (s)".into(),
        x_scale: Scale::Log,
        y_scale: Scale::Log,
        series: s,
    }
}
