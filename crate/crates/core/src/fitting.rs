//! ³He concentration from measured ring-down times, and the predicted effect
//! of adding a known amount of ³He.

use std::io::{BufRead, Write};

use serde::Serialize;

use crate::damping::DampingModel;
use crate::error::{Error, Result};
use crate::format;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauSample {
    /// K
    pub temperature: f64,
    /// s
    pub tau: f64,
    /// s
    pub sigma_tau: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TauTemperatureSeries {
    pub rows: Vec<TauSample>,
}

pub const SERIES_CSV_HEADER: &str = "T_K,tau_s,sigma_tau_s";

impl TauTemperatureSeries {
    pub fn validate(&self) -> Result<()> {
        for r in &self.rows {
            if !(r.temperature.is_finite() && r.temperature > 0.0) {
                return Err(Error::Data(format!("temperature must be positive, got {}", r.temperature)));
            }
            if !(r.tau.is_finite() && r.tau > 0.0) {
                return Err(Error::Data(format!("tau must be positive, got {} at T = {}", r.tau, r.temperature)));
            }
            if let Some(s) = r.sigma_tau {
                if !(s.is_finite() && s > 0.0) {
                    return Err(Error::Data(format!("sigma_tau must be positive, got {s}")));
                }
            }
        }
        Ok(())
    }

    /// Parse `T_K,tau_s[,sigma_tau_s]` rows; a header line and `#` comments
    /// are skipped.
    pub fn from_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut rows = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if rows.is_empty() && fields.first() == Some(&"T_K") {
                continue;
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Data(format!("line {}: cannot parse `{s}`", n + 1)))
            };
            let sample = match fields.as_slice() {
                [t, tau] => TauSample { temperature: parse(t)?, tau: parse(tau)?, sigma_tau: None },
                [t, tau, s] if s.is_empty() => TauSample { temperature: parse(t)?, tau: parse(tau)?, sigma_tau: None },
                [t, tau, s] => TauSample { temperature: parse(t)?, tau: parse(tau)?, sigma_tau: Some(parse(s)?) },
                _ => return Err(Error::Data(format!("line {}: expected 2 or 3 columns", n + 1))),
            };
            rows.push(sample);
        }
        let series = Self { rows };
        series.validate()?;
        Ok(series)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{SERIES_CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(out, "{},{},{}", format::num(r.temperature), format::num(r.tau), format::opt(r.sigma_tau))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitOptions {
    /// Search interval for n₃, 1/m³.
    pub n3_bracket: (f64, f64),
    /// Relative tolerance on n₃.
    pub tolerance: f64,
    /// Rows above this temperature get `high_t_weight`, K.
    pub high_t_threshold: f64,
    pub high_t_weight: f64,
    /// Also fit the intrinsic decay time within this interval, s.
    pub tau_vacuum_bracket: Option<(f64, f64)>,
}

impl FitOptions {
    /// Bracket given as ³He fractions, converted with the model's n₄.
    pub fn for_model(model: &DampingModel) -> Self {
        let n4 = model.media.n4();
        Self {
            n3_bracket: (1e-13 * n4, 1e-4 * n4),
            tolerance: 1e-6,
            high_t_threshold: 0.6,
            high_t_weight: 0.1,
            tau_vacuum_bracket: None,
        }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.n3_bracket;
        if !(lo > 0.0 && hi.is_finite() && hi >= 1e4 * lo) {
            return Err(Error::Config(format!(
                "n3 bracket [{lo:e}, {hi:e}] must be positive and span at least four decades"
            )));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 0.1) {
            return Err(Error::Config(format!("fit tolerance must lie in (0, 0.1), got {}", self.tolerance)));
        }
        if !(self.high_t_weight >= 0.0 && self.high_t_weight.is_finite()) {
            return Err(Error::Config("high-temperature weight must be >= 0".into()));
        }
        if let Some((a, b)) = self.tau_vacuum_bracket {
            if !(a > 0.0 && b > a && b.is_finite()) {
                return Err(Error::Config(format!("invalid tau_vacuum bracket [{a}, {b}]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcludedRow {
    pub index: usize,
    pub temperature: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    /// ln τ_model − ln τ_data per row; `None` where the model is undefined.
    pub values: Vec<Option<f64>>,
    pub excluded: Vec<ExcludedRow>,
}

/// Log-space residuals of the model with ³He density `n3`. The oscillator,
/// media, composition mode and intrinsic limit come from `model`.
pub fn model_residuals(series: &TauTemperatureSeries, model: &DampingModel, n3: f64) -> Residuals {
    let m = model.clone().with_n3(n3);
    let mut excluded = Vec::new();
    let values = series
        .rows
        .iter()
        .enumerate()
        .map(|(index, r)| match m.breakdown(r.temperature) {
            Ok(b) => Some(b.tau_total.ln() - r.tau.ln()),
            Err(e) => {
                excluded.push(ExcludedRow { index, temperature: r.temperature, reason: e.to_string() });
                None
            }
        })
        .collect();
    Residuals { values, excluded }
}

fn row_weights(series: &TauTemperatureSeries, opts: &FitOptions) -> Vec<f64> {
    series
        .rows
        .iter()
        .map(|r| {
            let regime = if r.temperature > opts.high_t_threshold { opts.high_t_weight } else { 1.0 };
            // a quoted uncertainty is the standard error of ln τ
            let precision = r.sigma_tau.map_or(1.0, |s| (r.tau / s).powi(2));
            regime * precision
        })
        .collect()
}

fn weighted_sse(res: &Residuals, weights: &[f64]) -> f64 {
    res.values
        .iter()
        .zip(weights)
        .filter_map(|(r, w)| r.map(|r| w * r * r))
        .sum()
}

/// Golden-section minimisation of `f` on [a, b] until the interval is
/// shorter than `tol`. Returns the abscissa and value of the best point.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 { (x1, f1) } else { (x2, f2) }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationFit {
    /// 1/m³
    pub n3: f64,
    pub x3: f64,
    /// RMS of the weighted log residuals.
    pub residual_rms: f64,
    pub n3_bracket: (f64, f64),
    /// Fitted intrinsic decay time when requested, otherwise the fixed one.
    pub tau_vacuum: Option<f64>,
    pub tau_vacuum_fitted: bool,
    pub options: FitOptions,
    pub rows_used: usize,
    pub excluded: Vec<ExcludedRow>,
    pub notes: Vec<String>,
}

/// Position within a search interval below which the optimum is taken to
/// sit on the edge.
const EDGE_FRACTION: f64 = 1e-3;

/// Relative variation of the objective across the bracket below which n₃ is
/// considered unidentifiable.
const FLAT_OBJECTIVE: f64 = 1e-9;

fn fit_n3(
    series: &TauTemperatureSeries,
    model: &DampingModel,
    opts: &FitOptions,
    weights: &[f64],
) -> Result<(f64, f64)> {
    let (lo, hi) = (opts.n3_bracket.0.ln(), opts.n3_bracket.1.ln());
    let objective = |ln_n3: f64| weighted_sse(&model_residuals(series, model, ln_n3.exp()), weights);
    let (best, f_best) = golden_section(objective, lo, hi, opts.tolerance);
    let (f_lo, f_hi) = (objective(lo), objective(hi));
    let spread = f_lo.max(f_hi) - f_best;
    if spread <= FLAT_OBJECTIVE * f_lo.max(f_hi).max(f64::MIN_POSITIVE) {
        return Err(Error::Bracket(
            "objective is flat across the n3 bracket; the data carry no impurity signature".into(),
        ));
    }
    let margin = EDGE_FRACTION * (hi - lo);
    if best - lo < margin || hi - best < margin {
        return Err(Error::Bracket(format!(
            "best n3 = {:e} 1/m^3 lies on the bracket edge [{:e}, {:e}]",
            best.exp(),
            opts.n3_bracket.0,
            opts.n3_bracket.1
        )));
    }
    Ok((best.exp(), f_best))
}

/// Fit the ³He number density with everything else in `model` held fixed
/// (optionally also the intrinsic decay time).
pub fn fit_he3_concentration(
    series: &TauTemperatureSeries,
    model: &DampingModel,
    opts: &FitOptions,
) -> Result<ConcentrationFit> {
    series.validate()?;
    opts.validate()?;
    if series.rows.len() < 3 {
        return Err(Error::Data(format!("need at least 3 rows, got {}", series.rows.len())));
    }
    let weights = row_weights(series, opts);

    let (model, n3, sse) = match opts.tau_vacuum_bracket {
        None => {
            let (n3, sse) = fit_n3(series, model, opts, &weights)?;
            (model.clone(), n3, sse)
        }
        Some((a, b)) => {
            let mut inner_err = None;
            let outer = |ln_tv: f64| {
                let m = model.clone().with_tau_vacuum(Some(ln_tv.exp()));
                match fit_n3(series, &m, opts, &weights) {
                    Ok((_, sse)) => sse,
                    Err(e) => {
                        inner_err.get_or_insert(e);
                        f64::INFINITY
                    }
                }
            };
            let (ln_tv, _) = golden_section(outer, a.ln(), b.ln(), opts.tolerance);
            let m = model.clone().with_tau_vacuum(Some(ln_tv.exp()));
            let (n3, sse) = fit_n3(series, &m, opts, &weights).map_err(|e| inner_err.unwrap_or(e))?;
            let margin = EDGE_FRACTION * (b.ln() - a.ln());
            if ln_tv - a.ln() < margin || b.ln() - ln_tv < margin {
                return Err(Error::Bracket(format!(
                    "best tau_vacuum = {} s lies on the bracket edge [{a}, {b}]",
                    ln_tv.exp()
                )));
            }
            (m, n3, sse)
        }
    };

    let res = model_residuals(series, &model, n3);
    let used = res.values.iter().filter(|r| r.is_some()).count();
    let total_w: f64 = res.values.iter().zip(&weights).filter(|(r, _)| r.is_some()).map(|(_, w)| w).sum();
    Ok(ConcentrationFit {
        n3,
        x3: n3 / model.media.n4(),
        residual_rms: (sse / total_w).sqrt(),
        n3_bracket: opts.n3_bracket,
        tau_vacuum: model.tau_vacuum,
        tau_vacuum_fitted: opts.tau_vacuum_bracket.is_some(),
        options: *opts,
        rows_used: used,
        excluded: res.excluded,
        notes: vec![
            "surface-state depletion of the bulk 3He concentration is not modelled; \
             it would bias x3 low"
                .into(),
        ],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContaminationRow {
    /// K
    pub temperature: f64,
    pub tau_base: f64,
    pub tau_contaminated: f64,
    /// τ_imp ratio (contaminated / base); `None` without an impurity channel.
    pub impurity_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContaminationPrediction {
    pub x3_base: f64,
    pub x3_contaminated: f64,
    pub rows: Vec<ContaminationRow>,
}

impl ContaminationPrediction {
    /// Ratio expected deep in the impurity-limited regime.
    pub fn impurity_regime_ratio(&self) -> f64 {
        self.x3_base / self.x3_contaminated
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "T_K,tau_base_s,tau_contaminated_s,impurity_ratio")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{}",
                format::num(r.temperature),
                format::num(r.tau_base),
                format::num(r.tau_contaminated),
                format::opt(r.impurity_ratio)
            )?;
        }
        Ok(())
    }
}

/// τ(T) for the fitted concentration and for it plus `added_x3`.
pub fn predict_contamination(
    fit: &ConcentrationFit,
    added_x3: f64,
    model: &DampingModel,
    grid: &[f64],
) -> Result<ContaminationPrediction> {
    if !(added_x3.is_finite() && added_x3 >= 0.0) {
        return Err(Error::Config(format!("added x3 must be >= 0, got {added_x3}")));
    }
    let base = model.clone().with_n3(fit.n3).with_tau_vacuum(fit.tau_vacuum);
    let n4 = model.media.n4();
    let dirty = base.clone().with_n3(fit.n3 + added_x3 * n4);
    let rows = grid
        .iter()
        .map(|&t| {
            let b = base.breakdown(t)?;
            let d = dirty.breakdown(t)?;
            Ok(ContaminationRow {
                temperature: t,
                tau_base: b.tau_total,
                tau_contaminated: d.tau_total,
                impurity_ratio: match (b.tau_imp(), d.tau_imp()) {
                    (Some(x), Some(y)) => Some(y / x),
                    _ => None,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ContaminationPrediction {
        x3_base: fit.x3,
        x3_contaminated: fit.x3 + added_x3,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::damping::{log_grid, CompositionMode, OscillatorSpec};
    use crate::media::Media;
    use proptest::prelude::*;

    const X3: f64 = 4.2e-8;

    fn model() -> DampingModel {
        DampingModel::new(OscillatorSpec::default(), Media::default())
    }

    fn synthetic(x3: f64, grid: &[f64]) -> TauTemperatureSeries {
        let m = model().with_he3_fraction(x3);
        TauTemperatureSeries {
            rows: grid
                .iter()
                .map(|&t| TauSample { temperature: t, tau: m.breakdown(t).unwrap().tau_total, sigma_tau: None })
                .collect(),
        }
    }

    fn grid() -> Vec<f64> {
        log_grid(0.015, 0.5, 40).unwrap()
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, f) = golden_section(|x| (x - 1.234).powi(2), -10.0, 10.0, 1e-9);
        assert!((x - 1.234).abs() < 1e-8);
        assert!(f < 1e-16);
    }

    #[test]
    fn residuals_self_consistent() {
        let s = synthetic(X3, &grid());
        let n3 = X3 * model().media.n4();
        let r = model_residuals(&s, &model(), n3);
        assert!(r.excluded.is_empty());
        assert!(r.values.iter().all(|v| v.unwrap().abs() < 1e-10));
        // doubling n3 halves τ where the impurities dominate
        let r2 = model_residuals(&s, &model().with_tau_vacuum(None), 2.0 * n3);
        let cold = synthetic(X3, &[0.015]);
        let m0 = model().with_tau_vacuum(None).with_n3(n3);
        let data = TauTemperatureSeries { rows: vec![TauSample { tau: m0.breakdown(0.015).unwrap().tau_total, ..cold.rows[0] }] };
        let r3 = model_residuals(&data, &model().with_tau_vacuum(None), 2.0 * n3);
        assert!((r3.values[0].unwrap() + 2f64.ln()).abs() < 0.02);
        assert!(r2.values.len() == 40);
    }

    #[test]
    fn mixed_regime_residuals_vanish_only_where_impurities_are_irrelevant() {
        let s = synthetic(X3, &grid());
        let r = model_residuals(&s, &model(), 10.0 * X3 * model().media.n4());
        let cold = r.values[0].unwrap().abs();
        let warm = r.values[39].unwrap().abs();
        assert!(cold > 1.0 && warm < 0.05, "{cold} {warm}");
    }

    #[test]
    fn exact_recovery() {
        let s = synthetic(X3, &grid());
        let m = model();
        let fit = fit_he3_concentration(&s, &m, &FitOptions::for_model(&m)).unwrap();
        assert!((fit.x3 / X3 - 1.0).abs() < 1e-4, "{}", fit.x3);
        assert!((fit.x3 - fit.n3 / m.media.n4()).abs() <= 1e-12 * fit.x3);
        assert!(fit.residual_rms < 1e-5);
        assert_eq!(fit.rows_used, 40);
    }

    #[test]
    fn no_impurity_signature_is_bracket_error() {
        let s = synthetic(0.0, &log_grid(1.0, 2.1, 12).unwrap());
        let m = model();
        let r = fit_he3_concentration(&s, &m, &FitOptions::for_model(&m));
        assert!(matches!(r, Err(Error::Bracket(_))), "{r:?}");
    }

    #[test]
    fn narrow_bracket_rejected() {
        let s = synthetic(X3, &grid());
        let m = model();
        let opts = FitOptions { n3_bracket: (1e18, 1e21), ..FitOptions::for_model(&m) };
        assert!(matches!(fit_he3_concentration(&s, &m, &opts), Err(Error::Config(_))));
    }

    #[test]
    fn objective_is_unimodal_around_truth() {
        let s = synthetic(X3, &grid());
        let m = model();
        let opts = FitOptions::for_model(&m);
        let w = row_weights(&s, &opts);
        let (lo, hi) = (opts.n3_bracket.0.ln(), opts.n3_bracket.1.ln());
        let vals: Vec<f64> = (0..=400)
            .map(|k| weighted_sse(&model_residuals(&s, &m, (lo + (hi - lo) * k as f64 / 400.0).exp()), &w))
            .collect();
        let imin = (0..vals.len()).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
        assert!(vals[..=imin].windows(2).all(|p| p[1] <= p[0]));
        assert!(vals[imin..].windows(2).all(|p| p[1] >= p[0]));
    }

    #[test]
    fn tau_vacuum_nested_fit() {
        let m = model().with_tau_vacuum(Some(2e5));
        let data = TauTemperatureSeries {
            rows: grid()
                .iter()
                .map(|&t| TauSample {
                    temperature: t,
                    tau: m.clone().with_he3_fraction(1e-9).breakdown(t).unwrap().tau_total,
                    sigma_tau: None,
                })
                .collect(),
        };
        let opts = FitOptions { tau_vacuum_bracket: Some((1e4, 1e7)), ..FitOptions::for_model(&m) };
        let fit = fit_he3_concentration(&data, &model(), &opts).unwrap();
        assert!((fit.tau_vacuum.unwrap() / 2e5 - 1.0).abs() < 1e-3);
        assert!((fit.x3 / 1e-9 - 1.0).abs() < 1e-3);
        assert!(fit.tau_vacuum_fitted);
    }

    #[test]
    fn contamination_prediction() {
        let s = synthetic(X3, &grid());
        let m = model();
        let fit = fit_he3_concentration(&s, &m, &FitOptions::for_model(&m)).unwrap();
        let same = predict_contamination(&fit, 0.0, &m, &grid()).unwrap();
        assert!(same.rows.iter().all(|r| r.tau_base == r.tau_contaminated));
        let p = predict_contamination(&fit, 1e-7, &m, &grid()).unwrap();
        let ratio = p.rows[0].impurity_ratio.unwrap();
        assert!((ratio - X3 / (X3 + 1e-7)).abs() < 1e-4);
        assert!((p.impurity_regime_ratio() - 0.2958).abs() < 1e-3);
        let big = predict_contamination(&fit, 1e-3, &m, &grid()).unwrap();
        assert!((big.rows[0].impurity_ratio.unwrap() / (X3 / 1e-3) - 1.0).abs() < 1e-3);
        assert!(predict_contamination(&fit, -1.0, &m, &grid()).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let mut s = synthetic(X3, &grid()[..5]);
        s.rows[1].sigma_tau = Some(3.0);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(TauTemperatureSeries::from_csv(&buf[..]).unwrap(), s);
        assert!(TauTemperatureSeries::from_csv("0.1,-1\n".as_bytes()).is_err());
        assert!(TauTemperatureSeries::from_csv("0.1\n".as_bytes()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn row_order_does_not_matter(seed in 0u64..1000) {
            let s = synthetic(X3, &grid());
            let mut shuffled = s.clone();
            let n = shuffled.rows.len();
            for i in 0..n {
                let j = ((seed.wrapping_mul(6364136223846793005).wrapping_add((i as u64).wrapping_mul(1442695040888963407))) >> 33) as usize % n;
                shuffled.rows.swap(i, j);
            }
            let m = model();
            let a = fit_he3_concentration(&s, &m, &FitOptions::for_model(&m)).unwrap();
            let b = fit_he3_concentration(&shuffled, &m, &FitOptions::for_model(&m)).unwrap();
            prop_assert!((a.x3 / b.x3 - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn uniform_scaling_in_impurity_regime() {
        // with the dominant channel alone the impurity regime is exactly
        // τ ∝ 1/n3, so scaling τ by κ scales the fitted n3 by 1/κ
        let m = model().with_tau_vacuum(None).with_mode(CompositionMode::DominantOnly);
        let g = log_grid(0.01, 0.03, 12).unwrap();
        let n3 = X3 * m.media.n4();
        let truth = m.clone().with_n3(n3);
        let opts = FitOptions::for_model(&m);
        for kappa in [0.5, 2.0, 10.0] {
            let s = TauTemperatureSeries {
                rows: g
                    .iter()
                    .map(|&t| TauSample { temperature: t, tau: kappa * truth.breakdown(t).unwrap().tau_total, sigma_tau: None })
                    .collect(),
            };
            let fit = fit_he3_concentration(&s, &m, &opts).unwrap();
            assert!((fit.n3 * kappa / n3 - 1.0).abs() < 1e-5, "kappa {kappa}: {}", fit.n3 * kappa / n3);
        }
    }
}
