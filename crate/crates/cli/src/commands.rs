//! One function per subcommand. Each returns the complete text it emits so
//! the caller decides where it goes.

use std::fmt::Write as _;
use std::path::Path;

use crs_core::beam::{membrane_strain, phase_diagram};
use crs_core::control::{parse_trace, run_session, SessionLog};
use crs_core::distortion::{distortion_sweep, fit_power_law, DistortionEstimate, Metric};
use crs_core::reconstruct::reconstruct_crs1d;
use crs_core::shape::{make_lattice, BumpField1D, Extents, LatticeKind};

use crate::config::Config;
use crate::error::CliError;

pub const SWEEP_HEADER: &str = "model,lattice,d_over_l,metric,value,stderr,n,seed";
pub const PHASE_HEADER: &str = "E_over_beta,I_over_d4,delta,class";
pub const PROFILE_HEADER: &str = "x_mm,psi_mm";
pub const STRAIN_HEADER: &str = "cell_mm,displacement_mm,strain";

/// `#` lines identifying the program, command and effective config.
pub fn provenance(command: &str, config: &Config, seed: Option<u64>) -> String {
    let seed = seed.map_or_else(|| "none".to_string(), |s| s.to_string());
    format!(
        "# crslab {}\n# command: {command}\n# config_sha256: {}\n# seed: {seed}\n",
        env!("CARGO_PKG_VERSION"),
        config.hash()
    )
}

pub fn distortion_sweep_csv(config: &Config) -> Result<String, CliError> {
    config.validate()?;
    let models = config.sweep_models()?;
    let spec = config.lattice_spec()?;
    let mc = config.monte_carlo()?;
    let rows = distortion_sweep(
        &models,
        &config.sweep.d_over_l,
        &spec,
        config.sweep.wavelength,
        &mc,
    )?;

    let mut out = provenance("distortion-sweep", config, Some(mc.seed));
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in &rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.model,
            r.lattice.name(),
            r.d_over_l,
            r.metric.name(),
            r.value,
            r.standard_error,
            r.n_samples,
            r.rng_seed
        )
        .unwrap();
    }
    append_fits(&mut out, &rows, &models_in_order(&rows));
    Ok(out)
}

fn models_in_order(rows: &[DistortionEstimate]) -> Vec<&'static str> {
    let mut names: Vec<&'static str> = Vec::new();
    for r in rows {
        if !names.contains(&r.model) {
            names.push(r.model);
        }
    }
    names
}

/// Power-law fits `D = c (d/l)^p` per model and metric, as rows with
/// `d_over_l = fit` and metrics `<metric>.c` / `<metric>.p`. The stderr column
/// holds the RMS log residual and `n` the number of grid points.
fn append_fits(out: &mut String, rows: &[DistortionEstimate], models: &[&str]) {
    for model in models {
        for metric in [Metric::Dp, Metric::Ds] {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.model == *model && r.metric == metric)
                .map(|r| (r.d_over_l, r.value))
                .collect();
            let Ok(fit) = fit_power_law(&pts) else {
                continue;
            };
            let first = rows.iter().find(|r| r.model == *model).unwrap();
            for (suffix, v) in [("c", fit.coefficient), ("p", fit.exponent)] {
                writeln!(
                    out,
                    "{model},{},fit,{}.{suffix},{v},{},{},{}",
                    first.lattice.name(),
                    metric.name(),
                    fit.residual,
                    pts.len(),
                    first.rng_seed
                )
                .unwrap();
            }
        }
    }
}

pub fn phase_diagram_csv(config: &Config) -> Result<String, CliError> {
    config.validate()?;
    let p = &config.phase;
    let diagram = phase_diagram(
        (p.e_over_beta[0], p.e_over_beta[1]),
        (p.i_over_d4[0], p.i_over_d4[1]),
        (p.resolution[0], p.resolution[1]),
    )?;
    let mut out = provenance("phase-diagram", config, None);
    out.push_str(PHASE_HEADER);
    out.push('\n');
    for c in diagram.cells.iter().chain(diagram.boundary().iter()) {
        writeln!(
            out,
            "{:e},{:e},{:e},{}",
            c.e_over_beta,
            c.i_over_d4,
            c.delta,
            c.phase.name()
        )
        .unwrap();
    }
    Ok(out)
}

pub fn elastica_demo_csv(config: &Config) -> Result<String, CliError> {
    config.validate()?;
    let e = &config.elastica;
    let d = e.d_over_l * e.wavelength;
    let length = d * e.spans as f64;
    let lattice = make_lattice(LatticeKind::Line, d, Extents::Line { length })?;
    let centre = d * (e.spans / 2) as f64;
    let field = BumpField1D::new(centre + e.peak_offset * d, e.amplitude, e.wavelength)?;
    let profile = reconstruct_crs1d(&field, &lattice, &config.elastica_settings())?;

    let mut out = provenance("elastica-demo", config, None);
    out.push_str(PROFILE_HEADER);
    out.push('\n');
    // From anchor to anchor, one pitch beyond the end pixels.
    let n = ((length + 2.0 * d) / e.step).round() as usize;
    for k in 0..=n {
        let x = -d + (length + 2.0 * d) * k as f64 / n as f64;
        writeln!(out, "{x:.6},{}", profile.height(x)).unwrap();
    }
    Ok(out)
}

pub fn strain_table_csv(config: &Config) -> Result<String, CliError> {
    config.validate()?;
    let mut out = provenance("strain-table", config, None);
    out.push_str(STRAIN_HEADER);
    out.push('\n');
    for &c in &config.strain.cell_sizes {
        for &h in &config.strain.displacements {
            writeln!(out, "{c},{h},{}", membrane_strain(c, h)?).unwrap();
        }
    }
    Ok(out)
}

pub struct Replay {
    pub command_log: String,
    pub summary: String,
}

pub fn replay(trace_path: &Path, config: &Config) -> Result<Replay, CliError> {
    config.validate()?;
    let text = std::fs::read_to_string(trace_path).map_err(|e| CliError::Io {
        path: trace_path.display().to_string(),
        source: e,
    })?;
    let trace = parse_trace(&text)?;
    let session = config.session()?;
    let log = run_session(&trace, &session)?;

    let header = provenance("replay", config, None);
    let command_log = format!("{header}{}", log.command_log());
    let delay = if trace.vr {
        session.vr_delay_ms
    } else {
        session.processing_delay_ms
    };
    let summary = format!("{header}{}", summary(&log, delay));
    Ok(Replay {
        command_log,
        summary,
    })
}

fn summary(log: &SessionLog, delay: f64) -> String {
    let mut s = String::from("key,value\n");
    let lag = log
        .mean_peak_lag()
        .map_or_else(|| "none".to_string(), |v| v.to_string());
    let settled = log.frames.iter().filter(|f| f.actuation.is_some()).count();
    for (k, v) in [
        ("frames", log.frames.len().to_string()),
        ("channels", log.channels.to_string()),
        ("records", log.records.len().to_string()),
        ("processing_delay_ms", delay.to_string()),
        ("settled_frames", settled.to_string()),
        ("mean_peak_lag_ms", lag),
        ("clamps", log.clamps.len().to_string()),
        ("violations", log.violations.len().to_string()),
    ] {
        writeln!(s, "{k},{v}").unwrap();
    }
    for v in &log.violations {
        writeln!(
            s,
            "violation,\"frame {} at {} ms: {}\"",
            v.frame,
            v.t,
            v.message.replace('"', "'")
        )
        .unwrap();
    }
    s
}

/// Validation report for `validate-config`.
pub fn validate_report(config: &Config) -> Result<String, CliError> {
    config.validate()?;
    let mut out = provenance("validate-config", config, Some(config.sweep.seed));
    out.push_str("status\nok\n");
    Ok(out)
}
