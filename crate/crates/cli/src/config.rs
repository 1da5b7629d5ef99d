//! Experiment configuration: one TOML file, one optional table per command.
//!
//! Every table has defaults, so an empty file (or no file) is valid. Unknown
//! keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crs_core::control::{ServoSpec, SessionConfig};
use crs_core::distortion::{LatticeSpec, MonteCarloConfig, NoPeakPolicy, PeakDomain};
use crs_core::reconstruct::{ElasticaSettings, ReconstructionModel};
use crs_core::shape::LatticeKind;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub sweep: SweepConfig,
    pub crs: CrsConfig,
    pub phase: PhaseConfig,
    pub elastica: ElasticaDemoConfig,
    pub replay: ReplayConfig,
    pub strain: StrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// `line`, `square` or `hexagonal`.
    pub lattice: String,
    /// Display size in wavelengths (hexagonal: radius).
    pub size: f64,
    pub models: Vec<String>,
    pub d_over_l: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub wavelength: f64,
    /// `full` or `interior`.
    pub domain: String,
    /// `nearest-pixel` or `discard`.
    pub no_peak: String,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            lattice: "line".into(),
            size: 4.0,
            models: vec!["pixel-only".into(), "linear".into(), "crs".into()],
            d_over_l: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            samples: 200,
            seed: 1,
            wavelength: 90.0,
            domain: "full".into(),
            no_peak: "nearest-pixel".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrsConfig {
    pub nodes_per_span: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for CrsConfig {
    fn default() -> Self {
        let s = ElasticaSettings::default();
        Self {
            nodes_per_span: s.nodes_per_span,
            tolerance: s.tolerance,
            max_iterations: s.max_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseConfig {
    /// `[low, high]` of the log-spaced `E/beta` axis.
    pub e_over_beta: [f64; 2],
    /// `[low, high]` of the log-spaced `I/d^4` axis.
    pub i_over_d4: [f64; 2],
    /// Grid points along each axis.
    pub resolution: [usize; 2],
}

impl Default for PhaseConfig {
    fn default() -> Self {
        Self {
            e_over_beta: [1e3, 1e9],
            i_over_d4: [1e-10, 1e-3],
            resolution: [25, 25],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElasticaDemoConfig {
    pub d_over_l: f64,
    pub wavelength: f64,
    /// Peak offset from the central pixel, as a fraction of the pitch.
    pub peak_offset: f64,
    pub amplitude: f64,
    /// Pitches in the line display.
    pub spans: usize,
    /// Output sampling interval, mm.
    pub step: f64,
}

impl Default for ElasticaDemoConfig {
    fn default() -> Self {
        Self {
            d_over_l: 1.0 / 3.0,
            wavelength: 90.0,
            peak_offset: 0.5,
            amplitude: 1.0,
            spans: 8,
            step: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplayConfig {
    pub pitch: f64,
    pub rings: usize,
    pub travel: f64,
    /// Servo slew time, s/cm.
    pub speed: f64,
    pub processing_delay_ms: f64,
    pub vr_delay_ms: f64,
    pub dt_ms: f64,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        let s = SessionConfig::default();
        Self {
            pitch: s.pitch,
            rings: s.rings,
            travel: s.servo.travel,
            speed: s.servo.speed,
            processing_delay_ms: s.processing_delay_ms,
            vr_delay_ms: s.vr_delay_ms,
            dt_ms: s.dt_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrainConfig {
    pub cell_sizes: Vec<f64>,
    pub displacements: Vec<f64>,
}

impl Default for StrainConfig {
    fn default() -> Self {
        Self {
            cell_sizes: vec![8.0, 4.0, 2.0, 1.0, 0.5],
            displacements: vec![0.0, 0.5, 1.0, 2.0, 3.0],
        }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse(&text).map_err(|msg| CliError::Config(format!("{}: {msg}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// SHA-256 of the effective configuration, after flag overrides.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn elastica_settings(&self) -> ElasticaSettings {
        ElasticaSettings {
            nodes_per_span: self.crs.nodes_per_span,
            tolerance: self.crs.tolerance,
            max_iterations: self.crs.max_iterations,
        }
    }

    /// Check everything that can be checked without running an experiment.
    pub fn validate(&self) -> Result<(), CliError> {
        self.sweep_models()?;
        self.lattice_spec()?;
        self.monte_carlo()?;
        self.elastica_settings().validate()?;
        let s = &self.sweep;
        if s.d_over_l.is_empty() {
            return Err(field("sweep.d_over_l", "must not be empty"));
        }
        if let Some(r) = s.d_over_l.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(field("sweep.d_over_l", format!("{r} must be > 0")));
        }
        positive("sweep.wavelength", s.wavelength)?;
        positive("sweep.size", s.size)?;

        let p = &self.phase;
        for (name, [lo, hi]) in [
            ("phase.e_over_beta", p.e_over_beta),
            ("phase.i_over_d4", p.i_over_d4),
        ] {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(field(
                    name,
                    format!("[{lo}, {hi}] must be positive and ordered"),
                ));
            }
        }
        if p.resolution.contains(&0) {
            return Err(field("phase.resolution", "must be >= 1 on both axes"));
        }

        let e = &self.elastica;
        positive("elastica.d_over_l", e.d_over_l)?;
        positive("elastica.wavelength", e.wavelength)?;
        positive("elastica.amplitude", e.amplitude)?;
        positive("elastica.step", e.step)?;
        if !e.peak_offset.is_finite() {
            return Err(field("elastica.peak_offset", "must be finite"));
        }
        if e.spans < 2 {
            return Err(field("elastica.spans", "must be >= 2"));
        }

        self.session()?.validate()?;
        if self.replay.rings == 0 {
            return Err(field("replay.rings", "must be >= 1"));
        }
        positive("replay.pitch", self.replay.pitch)?;

        let st = &self.strain;
        if st.cell_sizes.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(field("strain.cell_sizes", "entries must be > 0"));
        }
        if st
            .displacements
            .iter()
            .any(|h| !(h.is_finite() && *h >= 0.0))
        {
            return Err(field("strain.displacements", "entries must be >= 0"));
        }
        Ok(())
    }

    pub fn sweep_models(&self) -> Result<Vec<ReconstructionModel>, CliError> {
        if self.sweep.models.is_empty() {
            return Err(field("sweep.models", "must not be empty"));
        }
        self.sweep
            .models
            .iter()
            .map(|m| match m.as_str() {
                "pixel-only" | "pixel" => Ok(ReconstructionModel::PixelOnly),
                "linear" => Ok(ReconstructionModel::Linear),
                "crs" => Ok(ReconstructionModel::Crs(self.elastica_settings())),
                other => Err(field(
                    "sweep.models",
                    format!("unknown model `{other}` (expected pixel-only, linear or crs)"),
                )),
            })
            .collect()
    }

    pub fn lattice_spec(&self) -> Result<LatticeSpec, CliError> {
        let kind = match self.sweep.lattice.as_str() {
            "line" => LatticeKind::Line,
            "square" => LatticeKind::Square,
            "hexagonal" | "hex" => LatticeKind::Hexagonal,
            other => {
                return Err(field(
                    "sweep.lattice",
                    format!("unknown lattice `{other}` (expected line, square or hexagonal)"),
                ))
            }
        };
        Ok(LatticeSpec {
            kind,
            size: self.sweep.size,
        })
    }

    pub fn monte_carlo(&self) -> Result<MonteCarloConfig, CliError> {
        let s = &self.sweep;
        if s.samples == 0 {
            return Err(field("sweep.samples", "must be >= 1"));
        }
        let domain = match s.domain.as_str() {
            "full" => PeakDomain::Full,
            "interior" => PeakDomain::Interior,
            other => return Err(field("sweep.domain", format!("unknown domain `{other}`"))),
        };
        let no_peak = match s.no_peak.as_str() {
            "nearest-pixel" => NoPeakPolicy::NearestPixel,
            "discard" => NoPeakPolicy::Discard,
            other => return Err(field("sweep.no_peak", format!("unknown policy `{other}`"))),
        };
        Ok(MonteCarloConfig {
            n_samples: s.samples,
            seed: s.seed,
            amplitude: 1.0,
            domain,
            no_peak,
        })
    }

    pub fn session(&self) -> Result<SessionConfig, CliError> {
        let r = &self.replay;
        let cfg = SessionConfig {
            pitch: r.pitch,
            rings: r.rings,
            servo: ServoSpec {
                travel: r.travel,
                speed: r.speed,
            },
            processing_delay_ms: r.processing_delay_ms,
            vr_delay_ms: r.vr_delay_ms,
            dt_ms: r.dt_ms,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn field(name: &str, reason: impl Into<String>) -> CliError {
    CliError::Config(format!("{name}: {}", reason.into()))
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(field(name, format!("{v} must be > 0")))
    }
}
