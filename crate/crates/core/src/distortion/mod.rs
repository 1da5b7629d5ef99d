//! Monte Carlo estimates of the peak-position and shape distortions.
//!
//! For a display of pitch `d` rendering a bump of wavelength `l` whose peak
//! is drawn uniformly over the display region:
//!
//! * `D_p = E |x_r - X| / l`, with `x_r` the displayed peak;
//! * `D_s = E sqrt( int (phi - psi)^2 / int phi^2 )` over the bump's support
//!   (an interval in 1D, a disk in 2D).
//!
//! Both the target `phi` and the displayed shape `psi` are taken as zero
//! outside the display region.
//!
//! Sample `i` draws from a ChaCha8 generator seeded with the run seed on
//! stream `i`, so results do not depend on thread count or scheduling.

pub mod fit;
pub mod peak;

pub use fit::{fit_fixed_exponent, fit_power_law, PowerLawFit};
pub use peak::{find_peak, find_peak_continuous_1d, golden_max, PeakResult};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::simpson_weights;
use crate::reconstruct::{reconstruct, Displayed, ReconstructionModel};
use crate::shape::{
    dist2, in_hexagon, make_lattice, BumpField1D, BumpField2D, Extents, Lattice, LatticeKind,
};

/// Quadrature intervals across the support in 1D.
const QUAD_1D: usize = 512;
/// Quadrature intervals per axis across the support's bounding square in 2D.
const QUAD_2D: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Dp,
    Ds,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Dp => "Dp",
            Metric::Ds => "Ds",
        }
    }
}

/// Where ideal peaks are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PeakDomain {
    /// The whole display region.
    #[default]
    Full,
    /// Away from the edges: `[x_1 + l/2, x_n - l/2]` in 1D, the region one
    /// pitch (square) or one ring (hexagonal) in from the boundary in 2D.
    Interior,
}

impl PeakDomain {
    pub fn name(self) -> &'static str {
        match self {
            PeakDomain::Full => "full",
            PeakDomain::Interior => "interior",
        }
    }
}

/// What a sample with an identically zero display contributes to `D_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NoPeakPolicy {
    /// Distance from the ideal peak to the nearest pixel.
    #[default]
    NearestPixel,
    /// Drop the sample.
    Discard,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub amplitude: f64,
    pub domain: PeakDomain,
    pub no_peak: NoPeakPolicy,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            n_samples: 10_000,
            seed: 1,
            amplitude: 1.0,
            domain: PeakDomain::Full,
            no_peak: NoPeakPolicy::NearestPixel,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistortionEstimate {
    pub metric: Metric,
    pub value: f64,
    pub standard_error: f64,
    pub n_samples: usize,
    pub d_over_l: f64,
    pub model: &'static str,
    pub lattice: LatticeKind,
    pub rng_seed: u64,
    pub domain: PeakDomain,
}

/// Display geometry for sweeps, sized in wavelengths so that it stays fixed
/// while the pitch varies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    /// Line length, square side, or hexagon circumradius, in wavelengths.
    pub size: f64,
}

impl LatticeSpec {
    pub fn build(&self, pitch: f64, wavelength: f64) -> Result<Lattice> {
        if !(self.size.is_finite() && self.size > 0.0) {
            return Err(Error::invalid("size", "must be > 0"));
        }
        let extent = self.size * wavelength;
        let extents = match self.kind {
            LatticeKind::Line => Extents::Line { length: extent },
            LatticeKind::Square => Extents::Rect {
                width: extent,
                height: extent,
            },
            LatticeKind::Hexagonal => Extents::Hex {
                rings: (extent / pitch).round().max(1.0) as usize,
            },
        };
        make_lattice(self.kind, pitch, extents)
    }
}

fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

fn draw_peak<R: Rng>(
    rng: &mut R,
    lattice: &Lattice,
    domain: PeakDomain,
    wavelength: f64,
) -> Result<[f64; 2]> {
    let (lo, hi) = lattice.bounds();
    let d = lattice.pitch();
    match lattice.kind() {
        LatticeKind::Line => {
            let shrink = match domain {
                PeakDomain::Full => 0.0,
                PeakDomain::Interior => 0.5 * wavelength,
            };
            let (a, b) = (lo[0] + shrink, hi[0] - shrink);
            if a > b {
                return Err(Error::invalid(
                    "domain",
                    "display is shorter than one wavelength",
                ));
            }
            Ok([uniform(rng, a, b), 0.0])
        }
        LatticeKind::Square => {
            let shrink = match domain {
                PeakDomain::Full => 0.0,
                PeakDomain::Interior => d,
            };
            if lo[0] + shrink > hi[0] - shrink || lo[1] + shrink > hi[1] - shrink {
                return Err(Error::invalid("domain", "no interior region"));
            }
            let x = uniform(rng, lo[0] + shrink, hi[0] - shrink);
            let y = uniform(rng, lo[1] + shrink, hi[1] - shrink);
            Ok([x, y])
        }
        LatticeKind::Hexagonal => {
            let r = lattice.hex_circumradius()
                - match domain {
                    PeakDomain::Full => 0.0,
                    PeakDomain::Interior => d,
                };
            if r <= 0.0 {
                return Err(Error::invalid("domain", "no interior region"));
            }
            let ry = 0.5 * 3f64.sqrt() * r;
            loop {
                let p = [uniform(rng, -r, r), uniform(rng, -ry, ry)];
                if in_hexagon(p, r, 0.0) {
                    return Ok(p);
                }
            }
        }
    }
}

fn position_error(
    displayed: &Displayed,
    lattice: &Lattice,
    peak: [f64; 2],
    wavelength: f64,
    policy: NoPeakPolicy,
) -> Result<Option<f64>> {
    match find_peak(displayed, wavelength) {
        Ok(r) => Ok(Some(dist2(r.location, peak).sqrt() / wavelength)),
        Err(Error::NoPeak) => Ok(match policy {
            NoPeakPolicy::NearestPixel => {
                let q = lattice.pixel(lattice.nearest_pixel(peak));
                Some(dist2(q, peak).sqrt() / wavelength)
            }
            NoPeakPolicy::Discard => None,
        }),
        Err(e) => Err(e),
    }
}

fn shape_error_1d(displayed: &Displayed, lattice: &Lattice, field: &BumpField1D) -> Option<f64> {
    let l = field.wavelength;
    let a = field.peak - 0.5 * l;
    let h = l / QUAD_1D as f64;
    let weights = simpson_weights(QUAD_1D);
    let (mut num, mut den) = (0.0, 0.0);
    for (k, w) in weights.iter().enumerate() {
        let p = [a + k as f64 * h, 0.0];
        let phi = if lattice.contains(p) {
            field.value(p[0])
        } else {
            0.0
        };
        let psi = displayed.height(p);
        num += w * (phi - psi).powi(2);
        den += w * phi * phi;
    }
    (den > 0.0).then(|| (num / den).sqrt())
}

fn shape_error_2d(displayed: &Displayed, lattice: &Lattice, field: &BumpField2D) -> Option<f64> {
    let l = field.wavelength;
    let r2 = 0.25 * l * l;
    let [cx, cy] = field.peak;
    let h = l / QUAD_2D as f64;
    let weights = simpson_weights(QUAD_2D);
    let (mut num, mut den) = (0.0, 0.0);
    for (j, wy) in weights.iter().enumerate() {
        let y = cy - 0.5 * l + j as f64 * h;
        for (i, wx) in weights.iter().enumerate() {
            let x = cx - 0.5 * l + i as f64 * h;
            let p = [x, y];
            if dist2(p, field.peak) > r2 || !lattice.contains(p) {
                continue;
            }
            let phi = field.value(x, y);
            let psi = displayed.height(p);
            let w = wx * wy;
            num += w * (phi - psi).powi(2);
            den += w * phi * phi;
        }
    }
    (den > 0.0).then(|| (num / den).sqrt())
}

fn summarize(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Estimate `D_p` and `D_s` together, reconstructing each sample once.
pub fn estimate_distortions(
    model: &ReconstructionModel,
    lattice: &Lattice,
    wavelength: f64,
    config: &MonteCarloConfig,
) -> Result<[DistortionEstimate; 2]> {
    let [dp, ds] = run(model, lattice, wavelength, config, [true, true])?;
    Ok([dp.expect("requested"), ds.expect("requested")])
}

fn run(
    model: &ReconstructionModel,
    lattice: &Lattice,
    wavelength: f64,
    config: &MonteCarloConfig,
    want: [bool; 2],
) -> Result<[Option<DistortionEstimate>; 2]> {
    model.validate()?;
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(Error::invalid("wavelength", "must be > 0"));
    }
    if config.n_samples == 0 {
        return Err(Error::invalid("n_samples", "must be >= 1"));
    }
    if !(config.amplitude.is_finite() && config.amplitude > 0.0) {
        return Err(Error::invalid("amplitude", "must be > 0"));
    }
    let one_d = lattice.kind() == LatticeKind::Line;
    let samples: Vec<(Option<f64>, Option<f64>)> = (0..config.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64);
            let peak = draw_peak(&mut rng, lattice, config.domain, wavelength)?;
            if one_d {
                let field = BumpField1D::new(peak[0], config.amplitude, wavelength)?;
                let shown = reconstruct(model, &field, lattice)?;
                let dp = if want[0] {
                    position_error(&shown, lattice, peak, wavelength, config.no_peak)?
                } else {
                    None
                };
                Ok((
                    dp,
                    if want[1] {
                        shape_error_1d(&shown, lattice, &field)
                    } else {
                        None
                    },
                ))
            } else {
                let field = BumpField2D::new(peak, config.amplitude, wavelength)?;
                let shown = reconstruct(model, &field, lattice)?;
                let dp = if want[0] {
                    position_error(&shown, lattice, peak, wavelength, config.no_peak)?
                } else {
                    None
                };
                Ok((
                    dp,
                    if want[1] {
                        shape_error_2d(&shown, lattice, &field)
                    } else {
                        None
                    },
                ))
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let dp: Vec<f64> = samples.iter().filter_map(|s| s.0).collect();
    let ds: Vec<f64> = samples.iter().filter_map(|s| s.1).collect();
    let d_over_l = lattice.pitch() / wavelength;
    let make = |metric, values: &[f64]| {
        let (value, standard_error) = summarize(values);
        DistortionEstimate {
            metric,
            value,
            standard_error,
            n_samples: values.len(),
            d_over_l,
            model: model.name(),
            lattice: lattice.kind(),
            rng_seed: config.seed,
            domain: config.domain,
        }
    };
    Ok([
        want[0].then(|| make(Metric::Dp, &dp)),
        want[1].then(|| make(Metric::Ds, &ds)),
    ])
}

pub fn position_distortion(
    model: &ReconstructionModel,
    lattice: &Lattice,
    wavelength: f64,
    config: &MonteCarloConfig,
) -> Result<DistortionEstimate> {
    let [dp, _] = run(model, lattice, wavelength, config, [true, false])?;
    Ok(dp.expect("requested"))
}

pub fn shape_distortion(
    model: &ReconstructionModel,
    lattice: &Lattice,
    wavelength: f64,
    config: &MonteCarloConfig,
) -> Result<DistortionEstimate> {
    let [_, ds] = run(model, lattice, wavelength, config, [false, true])?;
    Ok(ds.expect("requested"))
}

/// Both metrics for every model at every `d/l`, in model, ratio, metric order.
/// All rows share the same seed.
pub fn distortion_sweep(
    models: &[ReconstructionModel],
    d_over_l: &[f64],
    lattice: &LatticeSpec,
    wavelength: f64,
    config: &MonteCarloConfig,
) -> Result<Vec<DistortionEstimate>> {
    let mut out = Vec::with_capacity(models.len() * d_over_l.len() * 2);
    for model in models {
        for &ratio in d_over_l {
            if !(ratio.is_finite() && ratio > 0.0) {
                return Err(Error::invalid("d_over_l", format!("{ratio} must be > 0")));
            }
            let lat = lattice.build(ratio * wavelength, wavelength)?;
            out.extend(estimate_distortions(model, &lat, wavelength, config)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(d: f64, length: f64) -> Lattice {
        make_lattice(LatticeKind::Line, d, Extents::Line { length }).unwrap()
    }

    #[test]
    fn seed_determinism() {
        let lat = line(20.0, 200.0);
        let cfg = MonteCarloConfig {
            n_samples: 300,
            ..Default::default()
        };
        let a = estimate_distortions(&ReconstructionModel::Linear, &lat, 90.0, &cfg).unwrap();
        let b = estimate_distortions(&ReconstructionModel::Linear, &lat, 90.0, &cfg).unwrap();
        assert_eq!(a, b);
        let c = estimate_distortions(
            &ReconstructionModel::Linear,
            &lat,
            90.0,
            &MonteCarloConfig { seed: 2, ..cfg },
        )
        .unwrap();
        assert_ne!(a[0].value, c[0].value);
    }

    #[test]
    fn pixel_only_position_matches_quarter_pitch() {
        let lat = line(18.0, 360.0);
        let cfg = MonteCarloConfig {
            n_samples: 4000,
            ..Default::default()
        };
        let e = position_distortion(&ReconstructionModel::PixelOnly, &lat, 90.0, &cfg).unwrap();
        let expect = 0.25 * 18.0 / 90.0;
        assert!((e.value - expect).abs() <= 3.0 * e.standard_error, "{e:?}");
    }

    #[test]
    fn interior_domain_requires_room() {
        let lat = line(30.0, 60.0);
        let cfg = MonteCarloConfig {
            n_samples: 10,
            domain: PeakDomain::Interior,
            ..Default::default()
        };
        assert!(estimate_distortions(&ReconstructionModel::PixelOnly, &lat, 90.0, &cfg).is_err());
    }

    #[test]
    fn hexagon_draws_stay_inside() {
        let lat = make_lattice(LatticeKind::Hexagonal, 10.0, Extents::Hex { rings: 3 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let p = draw_peak(&mut rng, &lat, PeakDomain::Full, 90.0).unwrap();
            assert!(lat.contains(p));
            let q = draw_peak(&mut rng, &lat, PeakDomain::Interior, 90.0).unwrap();
            assert!(in_hexagon(q, 20.0, 1e-12));
        }
    }
}
