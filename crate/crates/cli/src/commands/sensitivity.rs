use levsim::damping::sensitivity_report;
use serde::Serialize;

use super::Context;
use crate::config::SensitivityConfig;
use crate::error::CliError;
use crate::manifest::Run;

#[derive(Debug, Serialize)]
struct Report {
    temperature_k: f64,
    tau_s: f64,
    velocity_m_per_s: f64,
    mass_kg: f64,
    s_f_n2_per_hz: f64,
    sqrt_s_f_n_per_sqrt_hz: f64,
    f_d_n: f64,
    t_over_tau_k_per_s: f64,
    linewidth_hz: f64,
}

/// Command-line values win over the configuration.
pub fn run(run: &mut Run, ctx: &Context, flags: &SensitivityConfig) -> Result<(), CliError> {
    let c = &ctx.config.config.sensitivity;
    let t = flags.temperature_k.or(c.temperature_k);
    let tau = flags.tau_s.or(c.tau_s);
    let v = flags.velocity_m_per_s.or(c.velocity_m_per_s);
    let (Some(t), Some(tau), Some(v)) = (t, tau, v) else {
        let missing: Vec<&str> = [("temperature_k", t), ("tau_s", tau), ("velocity_m_per_s", v)]
            .iter()
            .filter(|(_, x)| x.is_none())
            .map(|(n, _)| *n)
            .collect();
        return Err(CliError::Usage(format!("sensitivity needs {}", missing.join(", "))));
    };
    let osc = ctx.config.oscillator()?;
    let media = ctx.media(run)?;
    let r = sensitivity_report(&osc, &media.constants, t, tau, v)?;
    let report = Report {
        temperature_k: t,
        tau_s: tau,
        velocity_m_per_s: v,
        mass_kg: osc.mass,
        s_f_n2_per_hz: r.s_f,
        sqrt_s_f_n_per_sqrt_hz: r.s_f.sqrt(),
        f_d_n: r.f_d,
        t_over_tau_k_per_s: r.t_over_tau,
        linewidth_hz: r.linewidth,
    };
    run.write_json("sensitivity.json", &report)?;
    println!(
        "sensitivity: F_D = {:e} N, S_F = {:e} N^2/Hz, T/tau = {:e} K/s, linewidth = {:e} Hz",
        r.f_d, r.s_f, r.t_over_tau, r.linewidth
    );
    Ok(())
}
