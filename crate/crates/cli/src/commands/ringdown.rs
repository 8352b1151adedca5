use std::path::Path;

use levsim::damping::linewidth;
use levsim::ringdown::io::{read_blocks_binary, read_blocks_csv, write_blocks_binary, write_blocks_csv, FRAME_MAGIC};
use levsim::ringdown::{analyze_ringdown, synthesize_ringdown, AmplitudeSeries, BlockSchedule, DecayFit, RingdownParams};
use serde::Serialize;

use super::Context;
use crate::config::BlockFormat;
use crate::error::CliError;
use crate::manifest::Run;
use crate::svg::{Plot, Scale, Series, Style, PALETTE};

#[derive(Debug, Serialize)]
struct Truth<'a> {
    block_file: &'a str,
    amplitude0_m: f64,
    f0_hz: f64,
    phase0_rad: f64,
    tau_s: f64,
    linewidth_hz: f64,
    noise_rms_m: f64,
    sample_rate_hz: f64,
    block_length_s: f64,
    block_interval_s: f64,
    total_duration_s: f64,
    blocks: usize,
    samples_per_block: usize,
}

pub fn simulate(run: &mut Run, ctx: &Context) -> Result<(), CliError> {
    let r = &ctx.config.config.ringdown;
    let params = RingdownParams::new(r.amplitude0_m, r.f0_hz, r.phase0_rad, r.tau_s, r.noise_rms_m, run.seed())?;
    let schedule = BlockSchedule {
        block_length: r.block_length_s,
        block_interval: r.block_interval_s,
        sample_rate: r.sample_rate_hz,
        total_duration: r.total_duration_s,
    };
    let blocks = synthesize_ringdown(&params, &schedule)?;
    let name = match r.format {
        BlockFormat::Csv => {
            run.write_csv("ringdown_blocks.csv", |w| write_blocks_csv(w, &blocks))?;
            "ringdown_blocks.csv"
        }
        BlockFormat::Binary => {
            let mut buf = Vec::new();
            write_blocks_binary(&mut buf, &blocks)?;
            run.write_bytes("ringdown_blocks.rngd", &buf)?;
            "ringdown_blocks.rngd"
        }
    };
    let truth = Truth {
        block_file: name,
        amplitude0_m: r.amplitude0_m,
        f0_hz: r.f0_hz,
        phase0_rad: r.phase0_rad,
        tau_s: r.tau_s,
        linewidth_hz: linewidth(r.tau_s)?,
        noise_rms_m: r.noise_rms_m,
        sample_rate_hz: r.sample_rate_hz,
        block_length_s: r.block_length_s,
        block_interval_s: r.block_interval_s,
        total_duration_s: r.total_duration_s,
        blocks: blocks.len(),
        samples_per_block: schedule.samples_per_block(),
    };
    run.write_json("ringdown_truth.json", &truth)?;
    println!("ringdown simulate: {} blocks written to {name}", blocks.len());
    Ok(())
}

#[derive(Debug, Serialize)]
struct FitReport<'a> {
    input: String,
    f0_hint_hz: f64,
    blocks: usize,
    fit: &'a DecayFit,
    tau_h: f64,
}

pub fn analyze(run: &mut Run, ctx: &Context, input: Option<&Path>) -> Result<(), CliError> {
    let r = &ctx.config.config.ringdown;
    let path = match (input, &r.input) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => ctx.config.resolve(p),
        (None, None) => {
            return Err(CliError::Usage(
                "ringdown analyze needs --input or ringdown.input in the config".into(),
            ))
        }
    };
    let bytes = run.read_input(&path)?;
    let parsed = if bytes.starts_with(FRAME_MAGIC) {
        read_blocks_binary(&bytes[..])
    } else {
        read_blocks_csv(&bytes[..])
    };
    let malformed = |e: levsim::Error| CliError::Failure(format!("{}: {e}", path.display()));
    let blocks = parsed.map_err(malformed)?;
    let (series, fit) = analyze_ringdown(&blocks, r.f0_hz).map_err(malformed)?;

    run.write_csv("amplitude_series.csv", |w| series.write_csv(w))?;
    let report = FitReport {
        input: path.display().to_string(),
        f0_hint_hz: r.f0_hz,
        blocks: blocks.len(),
        fit: &fit,
        tau_h: fit.tau / 3600.0,
    };
    run.write_json("decay_fit.json", &report)?;
    if ctx.svg {
        let note = format!("manifest_sha256={}", run.manifest_sha256());
        run.write_svg("ringdown_fit.svg", &plot(&series, &fit).render(&note))?;
    }
    println!(
        "ringdown analyze: tau = {} s ({} h), linewidth = {} Hz",
        fit.tau,
        fit.tau / 3600.0,
        fit.linewidth
    );
    Ok(())
}

fn plot(series: &AmplitudeSeries, fit: &DecayFit) -> Plot {
    let hours = |t: f64| t / 3600.0;
    let (good, low): (Vec<&levsim::ringdown::AmplitudeRow>, Vec<_>) = series.rows.iter().partition(|r| !r.low_snr);
    let t_end = series.rows.last().map_or(0.0, |r| r.time);
    let model = (0..=50)
        .map(|k| {
            let t = t_end * k as f64 / 50.0;
            (hours(t), fit.a0 * (-t / fit.tau).exp())
        })
        .collect();
    let mut s = vec![
        Series::new("block amplitude", good.iter().map(|r| (hours(r.time), r.amplitude)).collect(), Style::Markers, PALETTE[0]),
        Series::new("exponential fit", model, Style::Solid, PALETTE[1]),
    ];
    if !low.is_empty() {
        s.push(Series::new("low SNR", low.iter().map(|r| (hours(r.time), r.amplitude)).collect(), Style::Markers, PALETTE[4]));
    }
    Plot {
        title: "Ring-down".into(),
        x_label: "t (h)".into(),
        y_label: "amplitude".into(),
        x_scale: Scale::Linear,
        y_scale: Scale::Log,
        series: s,
    }
}
