//! Fingertip-to-servo control pipeline.
//!
//! A fingertip sample `(x_f, y_f, z_f)` becomes a raised-cosine target of
//! wavelength 90 mm centred under the finger. The target is sampled at the
//! pixels (height commands) and integrated along every beam of the skeleton
//! to find how much each beam end must be pushed in (compression commands).
//! Servos then slew toward their commands at a fixed rate.
//!
//! Channel numbering: pixels first in lattice order, then two channels per
//! beam (`n_pixels + 2 b` for the start end, `n_pixels + 2 b + 1` for the
//! far end), beams in [`Lattice::beam_lines`] order.

use nalgebra::{Matrix2, SMatrix, SVector, Vector2};

use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;
use crate::shape::{
    make_lattice, BeamLine, BumpField2D, Extents, Lattice, LatticeKind, PixelHeights, ShapeField,
};

/// Wavelength of the rendered surface, mm (support diameter).
pub const RENDER_WAVELENGTH: f64 = 90.0;

const EXCESS_REL_TOL: f64 = 1e-6;

/// Arc-length excess of `field` along `beam`, split at the beam midpoint
/// into the part accumulated on the start half and on the far half.
///
/// The integrand `sqrt(1 + f'^2) - 1` is evaluated as `f'^2 / (1 + sqrt(1 + f'^2))`
/// to avoid cancellation for shallow slopes, and integration is restricted
/// to the chord of the beam inside the field's support.
pub fn beam_excess<F: ShapeField + ?Sized>(field: &F, beam: &BeamLine) -> (f64, f64) {
    let (center, radius) = field.support();
    let dist = beam.distance(center);
    if dist >= radius {
        return (0.0, 0.0);
    }
    let half = (radius * radius - dist * dist).sqrt();
    let mid = beam.along(center);
    let lo = (mid - half).max(0.0);
    let hi = (mid + half).min(beam.length);
    if hi <= lo {
        return (0.0, 0.0);
    }
    let dir = beam.direction;
    let integrand = |s: f64| {
        let g = field.gradient(beam.point_at(s));
        let slope = g[0] * dir[0] + g[1] * dir[1];
        let s2 = slope * slope;
        s2 / (1.0 + (1.0 + s2).sqrt())
    };
    let split = 0.5 * beam.length;
    let part = |a: f64, b: f64| {
        if b <= a {
            0.0
        } else {
            adaptive_simpson(integrand, a, b, 16, EXCESS_REL_TOL, 0.0)
        }
    };
    (part(lo, hi.min(split)), part(lo.max(split), hi))
}

/// Servo characteristics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServoSpec {
    /// Maximum travel, mm.
    pub travel: f64,
    /// Slew time, s/cm.
    pub speed: f64,
}

impl Default for ServoSpec {
    fn default() -> Self {
        Self {
            travel: 9.0,
            speed: 0.08,
        }
    }
}

impl ServoSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.travel.is_finite() && self.travel > 0.0) {
            return Err(Error::invalid("travel", "must be > 0"));
        }
        if !(self.speed.is_finite() && self.speed > 0.0) {
            return Err(Error::invalid("speed", "must be > 0"));
        }
        Ok(())
    }

    /// Slew rate in mm/ms.
    pub fn rate(&self) -> f64 {
        10.0 / (self.speed * 1000.0)
    }

    /// Time for a full-travel move, ms.
    pub fn full_travel_ms(&self) -> f64 {
        self.travel / self.rate()
    }
}

/// One fingertip pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FingertipSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Target surface under a fingertip: peak at `(x_f, y_f)`, amplitude `z_f`.
pub fn render_target(sample: &FingertipSample) -> Result<BumpField2D> {
    BumpField2D::new([sample.x, sample.y], sample.z.max(0.0), RENDER_WAVELENGTH)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamCompression {
    pub excess: f64,
    /// Compression at the start end.
    pub left: f64,
    /// Compression at the far end.
    pub right: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressionPlan {
    pub beams: Vec<BeamCompression>,
}

/// Per-beam excess and end compressions needed to render `field`.
pub fn compression_plan<F: ShapeField + ?Sized>(
    field: &F,
    beams: &[BeamLine],
    servo: &ServoSpec,
) -> Result<CompressionPlan> {
    let mut out = Vec::with_capacity(beams.len());
    for (b, beam) in beams.iter().enumerate() {
        let (left, right) = beam_excess(field, beam);
        for (end, c) in [("start", left), ("far", right)] {
            if c > servo.travel {
                return Err(Error::ServoTravelExceeded {
                    beam: b,
                    end,
                    compression: c,
                    travel: servo.travel,
                });
            }
        }
        out.push(BeamCompression {
            excess: left + right,
            left,
            right,
        });
    }
    Ok(CompressionPlan { beams: out })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampEvent {
    pub pixel: usize,
    pub requested: f64,
    pub commanded: f64,
}

/// Pixel height commands, clamped to `[0, travel]`.
pub fn pixel_commands<F: ShapeField + ?Sized>(
    field: &F,
    lattice: &Lattice,
    servo: &ServoSpec,
) -> (PixelHeights, Vec<ClampEvent>) {
    let mut heights = crate::shape::sample_pixels(field, lattice);
    let mut events = Vec::new();
    for (i, h) in heights.0.iter_mut().enumerate() {
        let c = h.clamp(0.0, servo.travel);
        if c != *h {
            events.push(ClampEvent {
                pixel: i,
                requested: *h,
                commanded: c,
            });
            *h = c;
        }
    }
    (heights, events)
}

/// Servo positions, one per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ServoState {
    pub positions: Vec<f64>,
}

impl ServoState {
    pub fn zeros(channels: usize) -> Self {
        Self {
            positions: vec![0.0; channels],
        }
    }
}

/// Move every channel toward its command by at most `rate * dt`.
pub fn step_servos(state: &ServoState, commands: &[f64], dt: f64, servo: &ServoSpec) -> ServoState {
    let max_step = servo.rate() * dt;
    let positions = state
        .positions
        .iter()
        .zip(commands)
        .map(|(&p, &c)| {
            let target = c.clamp(0.0, servo.travel);
            let next = if (target - p).abs() <= max_step {
                target
            } else if target > p {
                p + max_step
            } else {
                p - max_step
            };
            next.clamp(0.0, servo.travel)
        })
        .collect();
    ServoState { positions }
}

/// A fingertip trace, optionally tagged as coming from a VR headset.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub samples: Vec<FingertipSample>,
    pub vr: bool,
}

pub const TRACE_HEADER: &str = "t_ms,x_f_mm,y_f_mm,z_f_mm";

/// Parse the trace format: a header line, then `t_ms,x_f_mm,y_f_mm,z_f_mm`
/// records. Lines starting with `#` are comments; `# source: vr` tags the
/// trace as VR-originated. Blank lines are ignored.
pub fn parse_trace(text: &str) -> Result<Trace> {
    let mut trace = Trace::default();
    let mut header_seen = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(src) = comment.strip_prefix("source:") {
                trace.vr = src.trim().eq_ignore_ascii_case("vr");
            }
            continue;
        }
        if !header_seen {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.join(",") != TRACE_HEADER {
                return Err(Error::TraceFormat {
                    line: line_no,
                    message: format!("expected header `{TRACE_HEADER}`"),
                });
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::TraceFormat {
                line: line_no,
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let mut v = [0.0; 4];
        for (k, f) in fields.iter().enumerate() {
            v[k] = f
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::TraceFormat {
                    line: line_no,
                    message: format!("field {} `{f}` is not a finite number", k + 1),
                })?;
        }
        if v[3] < 0.0 {
            return Err(Error::TraceFormat {
                line: line_no,
                message: "z_f must be >= 0".into(),
            });
        }
        trace.samples.push(FingertipSample {
            t: v[0],
            x: v[1],
            y: v[2],
            z: v[3],
        });
    }
    if !header_seen && !trace.samples.is_empty() {
        return Err(Error::TraceFormat {
            line: 1,
            message: "missing header".into(),
        });
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub pitch: f64,
    pub rings: usize,
    pub servo: ServoSpec,
    pub processing_delay_ms: f64,
    /// Total delay used instead when the trace is VR-originated.
    pub vr_delay_ms: f64,
    pub dt_ms: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            pitch: 30.0,
            rings: 2,
            servo: ServoSpec::default(),
            processing_delay_ms: 75.0,
            vr_delay_ms: 160.0,
            dt_ms: 1.0,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        self.servo.validate()?;
        if !(self.dt_ms.is_finite() && self.dt_ms > 0.0) {
            return Err(Error::invalid("dt_ms", "must be > 0"));
        }
        for (name, v) in [
            ("processing_delay_ms", self.processing_delay_ms),
            ("vr_delay_ms", self.vr_delay_ms),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, "must be >= 0"));
            }
        }
        Ok(())
    }

    pub fn device(&self) -> Result<Lattice> {
        make_lattice(
            LatticeKind::Hexagonal,
            self.pitch,
            Extents::Hex { rings: self.rings },
        )
    }
}

/// One command-log record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandRecord {
    pub t: f64,
    pub channel: usize,
    pub commanded: f64,
    pub actual: f64,
}

/// Latency accounting for one input frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameLatency {
    pub frame: usize,
    pub t_input: f64,
    pub processing_delay: f64,
    /// Time from command issue until every channel reached its command;
    /// `None` if a newer frame superseded it first.
    pub actuation: Option<f64>,
    /// Time from input until the displayed peak came within `d/4` of the
    /// commanded peak; `None` if it never did while the frame was current.
    pub peak_lag: Option<f64>,
    /// Displayed peak estimate when the frame was superseded or the run ended.
    pub final_peak: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub frame: usize,
    pub t: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SessionLog {
    pub records: Vec<CommandRecord>,
    pub frames: Vec<FrameLatency>,
    pub violations: Vec<Violation>,
    pub clamps: Vec<(usize, ClampEvent)>,
    pub channels: usize,
}

impl SessionLog {
    pub fn mean_peak_lag(&self) -> Option<f64> {
        let lags: Vec<f64> = self.frames.iter().filter_map(|f| f.peak_lag).collect();
        if lags.is_empty() {
            None
        } else {
            Some(lags.iter().sum::<f64>() / lags.len() as f64)
        }
    }

    /// Command log text: header then `t_ms,channel,commanded_mm,actual_mm`.
    pub fn command_log(&self) -> String {
        let mut s = String::from("t_ms,channel,commanded_mm,actual_mm\n");
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{},{}\n",
                r.t, r.channel, r.commanded, r.actual
            ));
        }
        s
    }
}

/// Replay a trace through the pipeline at a fixed time step.
///
/// Each sample takes effect after the processing delay. Records are written
/// for every channel whose command changed or which is still moving.
pub fn run_session(trace: &Trace, config: &SessionConfig) -> Result<SessionLog> {
    config.validate()?;
    if let Some(i) = trace.samples.windows(2).position(|w| w[1].t < w[0].t) {
        return Err(Error::UnsortedTrace { index: i + 1 });
    }
    let lattice = config.device()?;
    let beams = lattice.beam_lines();
    let n_pix = lattice.len();
    let channels = n_pix + 2 * beams.len();
    let mut log = SessionLog {
        channels,
        ..Default::default()
    };
    if trace.samples.is_empty() {
        return Ok(log);
    }
    let delay = if trace.vr {
        config.vr_delay_ms
    } else {
        config.processing_delay_ms
    };
    let dt = config.dt_ms;
    let servo = config.servo;
    let t0 = trace.samples[0].t;
    let t_last = trace.samples.last().unwrap().t + delay;
    let settle = servo.full_travel_ms() + 2.0 * dt;
    let steps = ((t_last + settle - t0) / dt).ceil() as usize;

    let mut commands = vec![0.0; channels];
    let mut state = ServoState::zeros(channels);
    let mut next = 0;
    // Frame currently driving the servos: (index in log.frames, peak, apply time).
    let mut current: Option<(usize, [f64; 2], f64)> = None;
    let tolerance = 0.25 * config.pitch;

    for k in 0..steps {
        let t = t0 + k as f64 * dt;
        let mut changed = vec![false; channels];
        while next < trace.samples.len() && trace.samples[next].t + delay <= t {
            let sample = trace.samples[next];
            let frame = next;
            next += 1;
            let field = render_target(&sample)?;
            let plan = match compression_plan(&field, &beams, &servo) {
                Ok(p) => p,
                Err(e) => {
                    log.violations.push(Violation {
                        frame,
                        t,
                        message: e.to_string(),
                    });
                    continue;
                }
            };
            if let Some((idx, _, _)) = current {
                log.frames[idx].final_peak = displayed_peak(&lattice, &state.positions[..n_pix]);
            }
            let (pix, clamps) = pixel_commands(&field, &lattice, &servo);
            log.clamps.extend(clamps.into_iter().map(|c| (frame, c)));
            let mut new = pix.0;
            for b in &plan.beams {
                new.push(b.left);
                new.push(b.right);
            }
            for (ch, v) in new.into_iter().enumerate() {
                if v != commands[ch] {
                    changed[ch] = true;
                    commands[ch] = v;
                }
            }
            log.frames.push(FrameLatency {
                frame,
                t_input: sample.t,
                processing_delay: delay,
                actuation: None,
                peak_lag: None,
                final_peak: None,
            });
            current = Some((log.frames.len() - 1, [sample.x, sample.y], t));
        }

        state = step_servos(&state, &commands, dt, &servo);
        let t_next = t + dt;
        for ch in 0..channels {
            let moving = state.positions[ch] != commands[ch];
            if changed[ch] || moving || k + 1 == steps {
                log.records.push(CommandRecord {
                    t: t_next,
                    channel: ch,
                    commanded: commands[ch],
                    actual: state.positions[ch],
                });
            }
        }
        if let Some((idx, peak, applied)) = current {
            let f = &mut log.frames[idx];
            if f.actuation.is_none() && state.positions == commands {
                f.actuation = Some(t_next - applied);
            }
            if f.peak_lag.is_none() {
                if let Some(p) = displayed_peak(&lattice, &state.positions[..n_pix]) {
                    if (p[0] - peak[0]).hypot(p[1] - peak[1]) <= tolerance {
                        f.peak_lag = Some(t_next - f.t_input);
                    }
                }
            }
        }
    }
    if let Some((idx, _, _)) = current {
        log.frames[idx].final_peak = displayed_peak(&lattice, &state.positions[..n_pix]);
    }
    Ok(log)
}

/// Peak of the displayed surface estimated from pixel heights: the highest
/// pixel refined by a least-squares quadratic through it and its nearest
/// neighbours. Falls back to the pixel itself when the fit is not a cap.
pub fn displayed_peak(lattice: &Lattice, heights: &[f64]) -> Option<[f64; 2]> {
    let (imax, &hmax) = heights.iter().enumerate().fold(
        None,
        |best: Option<(usize, &f64)>, (i, h)| match best {
            Some((_, bh)) if *h <= *bh => best,
            _ => Some((i, h)),
        },
    )?;
    if hmax <= 0.0 {
        return None;
    }
    let d = lattice.pitch();
    let c = lattice.pixel(imax);
    let near = lattice.pixels_within(c, 1.01 * d);
    if near.len() < 6 {
        return Some(c);
    }
    let mut ata = SMatrix::<f64, 6, 6>::zeros();
    let mut atb = SVector::<f64, 6>::zeros();
    for &i in &near {
        let p = lattice.pixel(i);
        let (u, v) = ((p[0] - c[0]) / d, (p[1] - c[1]) / d);
        let row = SVector::<f64, 6>::from([1.0, u, v, u * u, u * v, v * v]);
        ata += row * row.transpose();
        atb += row * heights[i];
    }
    let Some(coef) = ata.lu().solve(&atb) else {
        return Some(c);
    };
    let hess = Matrix2::new(2.0 * coef[3], coef[4], coef[4], 2.0 * coef[5]);
    if !(hess[(0, 0)] < 0.0 && hess.determinant() > 0.0) {
        return Some(c);
    }
    let Some(vertex) = hess.lu().solve(&Vector2::new(-coef[1], -coef[2])) else {
        return Some(c);
    };
    if vertex.norm() > 1.0 {
        return Some(c);
    }
    Some([c[0] + vertex[0] * d, c[1] + vertex[1] * d])
}
