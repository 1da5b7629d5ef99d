//! `crslab`: sweeps, phase diagrams, demo profiles and trace replays as CSV.

mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Config;
use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "crslab",
    version,
    about = "Pixel haptic display and CRS simulation harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML experiment config; flags below override it.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Write the CSV here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo distortion estimates over a d/l grid, with power-law fits.
    DistortionSweep {
        #[command(flatten)]
        common: Common,
        /// line, square or hexagonal.
        #[arg(long)]
        lattice: Option<String>,
        /// Display size in wavelengths.
        #[arg(long)]
        size: Option<f64>,
        /// Comma-separated: pixel-only, linear, crs.
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<String>>,
        /// Comma-separated pitch-to-wavelength ratios.
        #[arg(long, value_delimiter = ',')]
        d_over_l: Option<Vec<f64>>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// full or interior.
        #[arg(long)]
        domain: Option<String>,
    },
    /// Collapse / no-collapse classification over E/beta and I/d^4.
    PhaseDiagram {
        #[command(flatten)]
        common: Common,
        /// Grid points along E/beta.
        #[arg(long)]
        nx: Option<usize>,
        /// Grid points along I/d^4.
        #[arg(long)]
        ny: Option<usize>,
    },
    /// CRS profile over a line display for one bump position.
    ElasticaDemo {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        d_over_l: Option<f64>,
        /// Peak offset from the central pixel, in pitches.
        #[arg(long, allow_negative_numbers = true)]
        peak_offset: Option<f64>,
        #[arg(long)]
        amplitude: Option<f64>,
    },
    /// Replay a fingertip trace through the servo pipeline.
    Replay {
        /// Trace file: header `t_ms,x_f_mm,y_f_mm,z_f_mm`.
        trace: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Write the summary here instead of stderr.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long)]
        dt_ms: Option<f64>,
        #[arg(long)]
        processing_delay_ms: Option<f64>,
    },
    /// Membrane strain over cell sizes and off-surface displacements.
    StrainTable {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        cell_sizes: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        displacements: Option<Vec<f64>>,
    },
    /// Parse and check a config without running anything.
    ValidateConfig {
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io {
            path: p.display().to_string(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::DistortionSweep {
            common,
            lattice,
            size,
            models,
            d_over_l,
            samples,
            seed,
            domain,
        } => {
            let mut cfg = Config::load(common.config.as_deref())?;
            let s = &mut cfg.sweep;
            set(&mut s.lattice, lattice);
            set(&mut s.size, size);
            set(&mut s.models, models);
            set(&mut s.d_over_l, d_over_l);
            set(&mut s.samples, samples);
            set(&mut s.seed, seed);
            set(&mut s.domain, domain);
            emit(
                common.output.as_deref(),
                &commands::distortion_sweep_csv(&cfg)?,
            )
        }
        Command::PhaseDiagram { common, nx, ny } => {
            let mut cfg = Config::load(common.config.as_deref())?;
            set(&mut cfg.phase.resolution[0], nx);
            set(&mut cfg.phase.resolution[1], ny);
            emit(
                common.output.as_deref(),
                &commands::phase_diagram_csv(&cfg)?,
            )
        }
        Command::ElasticaDemo {
            common,
            d_over_l,
            peak_offset,
            amplitude,
        } => {
            let mut cfg = Config::load(common.config.as_deref())?;
            set(&mut cfg.elastica.d_over_l, d_over_l);
            set(&mut cfg.elastica.peak_offset, peak_offset);
            set(&mut cfg.elastica.amplitude, amplitude);
            emit(
                common.output.as_deref(),
                &commands::elastica_demo_csv(&cfg)?,
            )
        }
        Command::Replay {
            trace,
            common,
            summary,
            dt_ms,
            processing_delay_ms,
        } => {
            let mut cfg = Config::load(common.config.as_deref())?;
            set(&mut cfg.replay.dt_ms, dt_ms);
            set(&mut cfg.replay.processing_delay_ms, processing_delay_ms);
            let out = commands::replay(&trace, &cfg)?;
            emit(common.output.as_deref(), &out.command_log)?;
            match summary {
                Some(p) => emit(Some(&p), &out.summary),
                None => {
                    eprint!("{}", out.summary);
                    Ok(())
                }
            }
        }
        Command::StrainTable {
            common,
            cell_sizes,
            displacements,
        } => {
            let mut cfg = Config::load(common.config.as_deref())?;
            set(&mut cfg.strain.cell_sizes, cell_sizes);
            set(&mut cfg.strain.displacements, displacements);
            emit(common.output.as_deref(), &commands::strain_table_csv(&cfg)?)
        }
        Command::ValidateConfig { config, output } => {
            let cfg = Config::load(Some(&config))?;
            emit(output.as_deref(), &commands::validate_report(&cfg)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
