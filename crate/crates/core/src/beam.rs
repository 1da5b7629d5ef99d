//! Beam on a Winkler foundation: deflection series, buckling loads,
//! the collapse index and design checks.
//!
//! The public API takes lengths in mm, forces in N, Young's modulus in Pa and
//! the Winkler coefficient in N/mm² (load per unit length per unit
//! deflection). Everything is converted to SI (m, N, Pa) before evaluation
//! and converted back on return.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;

const MM: f64 = 1e-3;
/// N/mm² expressed in Pa.
const N_PER_MM2: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSpec {
    /// Pa.
    pub youngs_modulus: f64,
    /// mm.
    pub width: f64,
    /// mm.
    pub thickness: f64,
    /// mm.
    pub length: f64,
}

impl BeamSpec {
    pub fn new(youngs_modulus: f64, width: f64, thickness: f64, length: f64) -> Result<Self> {
        for (name, v) in [
            ("youngs_modulus", youngs_modulus),
            ("width", width),
            ("thickness", thickness),
            ("length", length),
        ] {
            positive(name, v)?;
        }
        Ok(Self {
            youngs_modulus,
            width,
            thickness,
            length,
        })
    }

    /// Second moment of area `w b^3 / 12`, mm⁴.
    pub fn second_moment(&self) -> f64 {
        self.width * self.thickness.powi(3) / 12.0
    }

    /// Cross-section area `w b`, mm².
    pub fn area(&self) -> f64 {
        self.width * self.thickness
    }

    /// Flexural rigidity in N·m².
    fn ei_si(&self) -> f64 {
        self.youngs_modulus * self.second_moment() * MM.powi(4)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoundationSpec {
    /// N/mm².
    pub winkler: f64,
}

impl FoundationSpec {
    pub fn new(winkler: f64) -> Result<Self> {
        if !(winkler.is_finite() && winkler >= 0.0) {
            return Err(Error::invalid(
                "winkler",
                format!("{winkler} must be finite and >= 0"),
            ));
        }
        Ok(Self { winkler })
    }

    fn beta_si(&self) -> f64 {
        self.winkler * N_PER_MM2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadCase {
    /// Point load at each pixel support, N.
    pub point_load: f64,
    /// Axial compression, N.
    pub axial_load: f64,
    /// mm.
    pub wavelength: f64,
    /// Pixel spacing, mm.
    pub spacing: f64,
}

impl LoadCase {
    /// The canonical configuration with `l = 3 d`.
    pub fn canonical(point_load: f64, axial_load: f64, spacing: f64) -> Self {
        Self {
            point_load,
            axial_load,
            wavelength: 3.0 * spacing,
            spacing,
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{v} must be finite and > 0")))
    }
}

/// Critical axial load of mode `n` for a beam segment of length `l` (mm), N.
pub fn critical_load(n: u32, beam: &BeamSpec, fnd: &FoundationSpec, l: f64) -> f64 {
    let n = n as f64;
    let l = l * MM;
    let ei = beam.ei_si();
    (n.powi(4) * 16.0 * PI.powi(4) * ei + 3.0 * fnd.beta_si() * l.powi(4))
        / (4.0 * n * n * PI * PI * l * l)
}

/// Term `n` of the deflection series at `x` (mm), in mm.
pub fn series_term(
    n: u32,
    x: f64,
    load: &LoadCase,
    beam: &BeamSpec,
    fnd: &FoundationSpec,
) -> Result<f64> {
    positive("wavelength", load.wavelength)?;
    positive("spacing", load.spacing)?;
    let l = load.wavelength * MM;
    let d = load.spacing * MM;
    let x = x * MM;
    let nf = n as f64;
    let denom = nf.powi(4) * 16.0 * PI.powi(4) * beam.ei_si()
        - 4.0 * nf * nf * PI * PI * l * l * load.axial_load
        + 3.0 * fnd.beta_si() * l.powi(4);
    if denom <= 0.0 {
        return Err(Error::BucklingThreshold {
            mode: n,
            axial: load.axial_load,
            critical: critical_load(n, beam, fnd, load.wavelength),
        });
    }
    let support = 1.0 - (nf * PI * (l - d) / l).cos();
    let shape = 1.0 - (2.0 * nf * PI * x / l).cos();
    Ok(4.0 * load.point_load * l.powi(3) * support * shape / denom / MM)
}

/// Deflection at `x` (mm) from the series truncated after `n_max` terms, mm.
pub fn deflection_series(
    x: f64,
    load: &LoadCase,
    beam: &BeamSpec,
    fnd: &FoundationSpec,
    n_max: u32,
) -> Result<f64> {
    if n_max < 8 {
        return Err(Error::invalid("n_max", format!("{n_max} must be >= 8")));
    }
    let mut sum = 0.0;
    for n in 1..=n_max {
        sum += series_term(n, x, load, beam, fnd)?;
    }
    Ok(sum)
}

/// No-collapse index `16 pi^4 E I / (27 beta d^4)`.
///
/// `youngs_modulus` in Pa, `second_moment` in mm⁴, `winkler` in N/mm²,
/// `spacing` in mm. A zero foundation has no finite index.
pub fn collapse_index(
    youngs_modulus: f64,
    second_moment: f64,
    winkler: f64,
    spacing: f64,
) -> Result<f64> {
    positive("youngs_modulus", youngs_modulus)?;
    positive("second_moment", second_moment)?;
    positive("spacing", spacing)?;
    if winkler == 0.0 {
        return Err(Error::RigidLimit);
    }
    positive("winkler", winkler)?;
    let ei = youngs_modulus * second_moment * MM.powi(4);
    let beta = winkler * N_PER_MM2;
    let d = spacing * MM;
    Ok(16.0 * PI.powi(4) * ei / (27.0 * beta * d.powi(4)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Collapse,
    NoCollapse,
    Boundary,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Collapse => "collapse",
            Phase::NoCollapse => "no-collapse",
            Phase::Boundary => "boundary",
        }
    }

    /// Collapse iff the index is below one.
    pub fn classify(delta: f64) -> Self {
        if delta < 1.0 {
            Phase::Collapse
        } else if delta > 1.0 {
            Phase::NoCollapse
        } else {
            Phase::Boundary
        }
    }
}

/// Index from the dimensionless material and geometry groups.
pub fn delta_from_groups(e_over_beta: f64, i_over_d4: f64) -> f64 {
    16.0 * PI.powi(4) / 27.0 * e_over_beta * i_over_d4
}

/// `I/d^4` on the `Delta = 1` curve for a given `E/beta`.
pub fn boundary_i_over_d4(e_over_beta: f64) -> f64 {
    27.0 / (16.0 * PI.powi(4) * e_over_beta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCell {
    pub e_over_beta: f64,
    pub i_over_d4: f64,
    pub delta: f64,
    pub phase: Phase,
}

/// Log-spaced grid over the material (`E/beta`) and geometry (`I/d^4`) axes.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagram {
    pub material_axis: Vec<f64>,
    pub geometry_axis: Vec<f64>,
    /// Row-major: geometry outer, material inner.
    pub cells: Vec<PhaseCell>,
}

impl PhaseDiagram {
    pub fn cell(&self, i_material: usize, j_geometry: usize) -> &PhaseCell {
        &self.cells[j_geometry * self.material_axis.len() + i_material]
    }

    /// Points on the `Delta = 1` curve at each material-axis value.
    pub fn boundary(&self) -> Vec<PhaseCell> {
        self.material_axis
            .iter()
            .map(|&e| {
                let i = boundary_i_over_d4(e);
                PhaseCell {
                    e_over_beta: e,
                    i_over_d4: i,
                    delta: delta_from_groups(e, i),
                    phase: Phase::Boundary,
                }
            })
            .collect()
    }
}

fn log_axis(name: &'static str, range: (f64, f64), n: usize) -> Result<Vec<f64>> {
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi >= lo) {
        return Err(Error::invalid(
            name,
            format!("range ({lo}, {hi}) must be positive and ordered"),
        ));
    }
    if n == 0 {
        return Err(Error::invalid("resolution", "must be >= 1"));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut axis: Vec<f64> = (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect();
    axis[0] = lo;
    axis[n - 1] = hi;
    Ok(axis)
}

pub fn phase_diagram(
    material: (f64, f64),
    geometry: (f64, f64),
    resolution: (usize, usize),
) -> Result<PhaseDiagram> {
    let material_axis = log_axis("material_axis", material, resolution.0)?;
    let geometry_axis = log_axis("geometry_axis", geometry, resolution.1)?;
    let mut cells = Vec::with_capacity(material_axis.len() * geometry_axis.len());
    for &g in &geometry_axis {
        for &m in &material_axis {
            let delta = delta_from_groups(m, g);
            cells.push(PhaseCell {
                e_over_beta: m,
                i_over_d4: g,
                delta,
                phase: Phase::classify(delta),
            });
        }
    }
    Ok(PhaseDiagram {
        material_axis,
        geometry_axis,
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthChange {
    /// `N_cr^(1) L / (E A)`, mm.
    pub exact: f64,
    /// `pi^2 b^2 L / (3 l^2)`, mm.
    pub approx: f64,
    /// `|exact - approx| / exact`.
    pub relative_gap: f64,
}

/// End shortening of the beam at the first critical load.
///
/// The approximation drops the foundation term, so it is accurate only when
/// bending stiffness dominates (large collapse index).
pub fn length_change(beam: &BeamSpec, fnd: &FoundationSpec, l: f64) -> Result<LengthChange> {
    positive("wavelength", l)?;
    let ncr = critical_load(1, beam, fnd, l);
    let ea = beam.youngs_modulus * beam.area() * MM * MM;
    let exact = ncr * beam.length * MM / ea / MM;
    let approx = PI * PI * beam.thickness.powi(2) * beam.length / (3.0 * l * l);
    Ok(LengthChange {
        exact,
        approx,
        relative_gap: (exact - approx).abs() / exact,
    })
}

/// Strain of a membrane stretched over a tent of base `cell_size` (mm) and
/// height `displacement` (mm).
pub fn membrane_strain(cell_size: f64, displacement: f64) -> Result<f64> {
    positive("cell_size", cell_size)?;
    if !(displacement.is_finite() && displacement >= 0.0) {
        return Err(Error::invalid("displacement", "must be finite and >= 0"));
    }
    let half = 0.5 * cell_size;
    Ok(2.0 * half.hypot(displacement) / cell_size - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeLimits {
    /// Amplitude at which the peak bending strain reaches the yield strain, mm.
    pub curvature_limit: f64,
    /// Amplitude whose arc-length excess equals the servo travel, mm.
    pub travel_limit: f64,
    pub max_amplitude: f64,
}

/// Arc-length excess of a raised-cosine bump of amplitude `a` and wavelength `l`.
pub fn bump_excess(a: f64, l: f64) -> f64 {
    let k = 2.0 * PI / l;
    let f = |u: f64| {
        let s = 0.5 * a * k * (k * u).sin();
        let s2 = s * s;
        s2 / (1.0 + (1.0 + s2).sqrt())
    };
    adaptive_simpson(f, -0.5 * l, 0.5 * l, 8, 1e-12, 0.0)
}

/// Largest renderable bump amplitude for a wavelength `l` (mm).
///
/// Either limit may be switched off with an infinite `yield_strain` or
/// `servo_travel`.
pub fn range_limits(
    beam: &BeamSpec,
    yield_strain: f64,
    servo_travel: f64,
    l: f64,
) -> Result<RangeLimits> {
    positive("wavelength", l)?;
    for (name, v) in [
        ("yield_strain", yield_strain),
        ("servo_travel", servo_travel),
    ] {
        if v.is_nan() || v <= 0.0 {
            return Err(Error::invalid(name, format!("{v} must be > 0")));
        }
    }
    let curvature_limit = yield_strain * l * l / (PI * PI * beam.thickness);
    let travel_limit = if servo_travel.is_infinite() {
        f64::INFINITY
    } else {
        let mut hi = l.min(servo_travel).max(1e-9 * l);
        while bump_excess(hi, l) < servo_travel {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if bump_excess(mid, l) < servo_travel {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    Ok(RangeLimits {
        curvature_limit,
        travel_limit,
        max_amplitude: curvature_limit.min(travel_limit),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn steel() -> BeamSpec {
        BeamSpec::new(193e9, 4.0, 0.15, 150.0).unwrap()
    }

    #[test]
    fn critical_load_without_foundation_is_euler_family() {
        let b = steel();
        let f = FoundationSpec::new(0.0).unwrap();
        let ei = b.youngs_modulus * b.second_moment() * 1e-12;
        let mut prev = 0.0;
        for n in 1..6 {
            let l = 0.09;
            let expect = 4.0 * (n * n) as f64 * PI * PI * ei / (l * l);
            let got = critical_load(n, &b, &f, 90.0);
            assert!((got - expect).abs() <= 1e-12 * expect);
            assert!(got > prev);
            prev = got;
        }
    }

    #[test]
    fn series_is_linear_and_vanishes_without_load() {
        let b = steel();
        let f = FoundationSpec::new(0.01).unwrap();
        let ncr = critical_load(1, &b, &f, 90.0);
        let load = LoadCase::canonical(0.1, 0.5 * ncr, 30.0);
        let zero = LoadCase {
            point_load: 0.0,
            ..load
        };
        let double = LoadCase {
            point_load: 0.2,
            ..load
        };
        for x in [0.0, 10.0, 45.0, 77.0] {
            assert_eq!(deflection_series(x, &zero, &b, &f, 64).unwrap(), 0.0);
            let y1 = deflection_series(x, &load, &b, &f, 64).unwrap();
            let y2 = deflection_series(x, &double, &b, &f, 64).unwrap();
            assert!((y2 - 2.0 * y1).abs() <= 4.0 * f64::EPSILON * y1.abs());
        }
    }

    #[test]
    fn series_rejects_supercritical_axial_load() {
        let b = steel();
        let f = FoundationSpec::new(0.01).unwrap();
        let ncr = critical_load(1, &b, &f, 90.0);
        let load = LoadCase::canonical(0.1, ncr * 1.0001, 30.0);
        assert!(matches!(
            deflection_series(10.0, &load, &b, &f, 16),
            Err(Error::BucklingThreshold { mode: 1, .. })
        ));
        assert!(deflection_series(10.0, &load, &b, &f, 4).is_err());
    }

    #[test]
    fn critical_load_zeroes_the_series_denominator() {
        let b = steel();
        let f = FoundationSpec::new(0.02).unwrap();
        let l = 0.09;
        let ei = b.youngs_modulus * b.second_moment() * 1e-12;
        for n in 1..10u32 {
            let nf = n as f64;
            let ncr = critical_load(n, &b, &f, 90.0);
            let denom = nf.powi(4) * 16.0 * PI.powi(4) * ei - 4.0 * nf * nf * PI * PI * l * l * ncr
                + 3.0 * 0.02e6 * l.powi(4);
            let scale = nf.powi(4) * 16.0 * PI.powi(4) * ei;
            assert!(denom.abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn series_terms_decay_as_inverse_fourth_power() {
        let b = steel();
        let f = FoundationSpec::new(0.0).unwrap();
        let load = LoadCase::canonical(1.0, 0.0, 30.0);
        let l = 90.0;
        let x = 0.37 * l;
        // Strip the bounded support and shape factors; what is left is n^-4.
        let reduced = |n: u32| {
            let nf = n as f64;
            let support = 1.0 - (nf * PI * 2.0 / 3.0).cos();
            let shape = 1.0 - (2.0 * nf * PI * x / l).cos();
            series_term(n, x, &load, &b, &f).unwrap() / (support * shape)
        };
        for n in 4..40u32 {
            if n % 3 == 0 {
                continue;
            }
            let ratio = reduced(n) / reduced(n + 3);
            let expect = ((n + 3) as f64 / n as f64).powi(4);
            assert!((ratio - expect).abs() < 1e-9 * expect, "n={n}");
        }
    }

    #[test]
    fn collapse_index_examples() {
        let e = 193e9;
        let i = 4.0 * 0.15f64.powi(3) / 12.0;
        let d: f64 = 30.0;
        // Pick the foundation that puts the beam on the boundary.
        let beta = 16.0 * PI.powi(4) * e * 1e-6 * i / (27.0 * d.powi(4));
        let delta = collapse_index(e, i, beta, d).unwrap();
        assert!((delta - 1.0).abs() < 1e-12);
        for target in [0.2, 1.7] {
            let b = beta / target;
            let delta = collapse_index(e, i, b, d).unwrap();
            assert!((delta - target).abs() < 1e-12);
        }
        assert_eq!(Phase::classify(0.2), Phase::Collapse);
        assert_eq!(Phase::classify(1.7), Phase::NoCollapse);
        assert!(matches!(
            collapse_index(e, i, 0.0, d),
            Err(Error::RigidLimit)
        ));
        // Proportional scaling of the skeleton leaves the index unchanged.
        let k: f64 = 0.5;
        let scaled = collapse_index(e, i * k.powi(4), beta, d * k).unwrap();
        assert!((scaled - delta_from_groups(e * 1e-6 / beta, i / d.powi(4))).abs() < 1e-12);
    }

    #[test]
    fn length_change_examples() {
        let b = BeamSpec::new(2e9, 5.0, 0.1, 150.0).unwrap();
        let f = FoundationSpec::new(1e-4).unwrap();
        let lc = length_change(&b, &f, 90.0).unwrap();
        assert!((lc.approx - 6.0924e-4).abs() < 1e-7);
        let stiff = BeamSpec {
            youngs_modulus: 2e11,
            ..b
        };
        let lc2 = length_change(&stiff, &f, 90.0).unwrap();
        assert_eq!(lc.approx, lc2.approx);
        assert!(lc2.relative_gap < lc.relative_gap);

        // With l = 3d the foundation share of N_cr is exactly 9 / Delta.
        for (e, beta) in [(2e9, 1e-4), (2e11, 1e-3), (193e9, 0.01)] {
            let d = 30.0;
            let beam = BeamSpec::new(e, 4.0, 0.15, 150.0).unwrap();
            let fnd = FoundationSpec::new(beta).unwrap();
            let delta = collapse_index(e, beam.second_moment(), beta, d).unwrap();
            let gap = length_change(&beam, &fnd, 3.0 * d).unwrap().relative_gap;
            assert!(
                (gap - 9.0 / (delta + 9.0)).abs() < 1e-12,
                "{gap} vs {delta}"
            );
        }
    }

    #[test]
    fn membrane_strain_examples() {
        assert_eq!(membrane_strain(3.0, 0.0).unwrap(), 0.0);
        assert!((membrane_strain(4.0, 2.0).unwrap() - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!((membrane_strain(1.0, 2.0).unwrap() - (2.0 * 4.25f64.sqrt() - 1.0)).abs() < 1e-14);
        assert!(membrane_strain(0.0, 1.0).is_err());
    }

    #[test]
    fn range_limit_examples() {
        let b = steel();
        let r = range_limits(&b, 0.002, f64::INFINITY, 90.0).unwrap();
        let expect = 0.002 * 8100.0 / (PI * PI * 0.15);
        assert!((r.curvature_limit - expect).abs() < 1e-12 * expect);
        assert_eq!(r.max_amplitude, r.curvature_limit);
        let r = range_limits(&b, f64::INFINITY, 9.0, 90.0).unwrap();
        assert_eq!(r.max_amplitude, r.travel_limit);
        assert!((bump_excess(r.travel_limit, 90.0) - 9.0).abs() < 1e-9 * 9.0);
    }
}
