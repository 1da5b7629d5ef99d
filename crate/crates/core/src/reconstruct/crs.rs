//! Continuity reinforcement skeleton: one elastica per beam line.

use std::collections::HashMap;

use crate::control::beam_excess;
use crate::error::Result;
use crate::reconstruct::containing_triangle;
use crate::reconstruct::elastica::{solve_elastica_guided, ElasticaSettings, ElasticaSolution};
use crate::shape::{BeamLine, BumpField1D, BumpField2D, Lattice, LatticeKind, ShapeField};

/// Lower bound on the excess handed to the solver, as a multiple of the
/// excess of the straight polyline through the constraints. The target's
/// own excess can fall below that polyline when the bump straddles an
/// anchor; the beam then cannot pass through the pixels at all.
const MIN_EXCESS_RATIO: f64 = 1.05;

/// Below this excess (relative to the beam length) the beam is taken as
/// taut: the elastica is then indistinguishable from the polyline and the
/// solver's feasibility test is at rounding level.
const TAUT_EXCESS: f64 = 1e-9;

/// A solved beam of the skeleton. `solution` is `None` for a taut beam,
/// which follows the polyline through its constraints.
#[derive(Debug, Clone)]
pub struct BeamProfile {
    pub line: BeamLine,
    /// Excess handed to the solver (after the feasibility floor).
    pub excess: f64,
    pub solution: Option<ElasticaSolution>,
    constraints: Vec<(f64, f64)>,
}

impl BeamProfile {
    fn solve<F: ShapeField + ?Sized>(
        field: &F,
        lattice: &Lattice,
        line: BeamLine,
        settings: &ElasticaSettings,
    ) -> Result<Self> {
        let heights: Vec<f64> = line
            .pixels
            .iter()
            .map(|&i| field.height(lattice.pixel(i)))
            .collect();
        let (left, right) = beam_excess(field, &line);
        let target = left + right;
        let mut cons = Vec::with_capacity(heights.len() + 2);
        cons.push((0.0, 0.0));
        for (&i, &y) in line.pixels.iter().zip(&heights) {
            cons.push((line.along(lattice.pixel(i)), y));
        }
        cons.push((line.length, 0.0));

        let poly: f64 = cons
            .windows(2)
            .map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1))
            .sum();
        let excess = target.max(MIN_EXCESS_RATIO * (poly - line.length));
        if excess <= TAUT_EXCESS * line.length {
            return Ok(Self {
                line,
                excess,
                solution: None,
                constraints: cons,
            });
        }
        let guide = |s: f64| field.height(line.point_at(s));
        let solution = solve_elastica_guided(&cons, excess, settings, Some(&guide))?;
        Ok(Self {
            line,
            excess,
            solution: Some(solution),
            constraints: cons,
        })
    }

    /// Beam height at arc coordinate `s` from the start anchor.
    pub fn height_along(&self, s: f64) -> f64 {
        match &self.solution {
            Some(sol) => sol.height_at(s).unwrap_or(0.0),
            None => {
                let c = &self.constraints;
                if s < c[0].0 || s > c[c.len() - 1].0 {
                    return 0.0;
                }
                let k = c.partition_point(|p| p.0 <= s).clamp(1, c.len() - 1);
                let ((x0, y0), (x1, y1)) = (c[k - 1], c[k]);
                y0 + (s - x0) / (x1 - x0) * (y1 - y0)
            }
        }
    }
}

/// A 1D CRS profile: the single beam across a line lattice.
#[derive(Debug, Clone)]
pub struct CrsProfile1d {
    pub beam: BeamProfile,
}

impl CrsProfile1d {
    pub(crate) fn solve<F: ShapeField + ?Sized>(
        field: &F,
        lattice: &Lattice,
        settings: &ElasticaSettings,
    ) -> Result<Self> {
        settings.validate()?;
        if lattice.kind() != LatticeKind::Line {
            return Err(crate::Error::invalid(
                "lattice",
                "1D CRS needs a line lattice",
            ));
        }
        let line = lattice.beam_lines().remove(0);
        Ok(Self {
            beam: BeamProfile::solve(field, lattice, line, settings)?,
        })
    }

    /// Displayed height at `x` (zero beyond the anchors).
    pub fn height(&self, x: f64) -> f64 {
        self.beam.height_along(x - self.beam.line.start[0])
    }
}

pub fn reconstruct_crs1d(
    field: &BumpField1D,
    lattice: &Lattice,
    settings: &ElasticaSettings,
) -> Result<CrsProfile1d> {
    CrsProfile1d::solve(field, lattice, settings)
}

/// A 2D CRS surface: beam profiles blended inside each lattice cell by
/// inverse-squared-distance weights to the cell's edges.
#[derive(Debug, Clone)]
pub struct CrsSurface2d {
    pub beams: Vec<BeamProfile>,
    lookup: HashMap<(usize, i64), usize>,
    lattice: Lattice,
}

impl CrsSurface2d {
    pub(crate) fn solve<F: ShapeField + ?Sized>(
        field: &F,
        lattice: &Lattice,
        settings: &ElasticaSettings,
    ) -> Result<Self> {
        settings.validate()?;
        if lattice.kind() == LatticeKind::Line {
            return Err(crate::Error::invalid(
                "lattice",
                "2D CRS needs a square or hexagonal lattice",
            ));
        }
        let beams = lattice
            .beam_lines()
            .into_iter()
            .map(|line| BeamProfile::solve(field, lattice, line, settings))
            .collect::<Result<Vec<_>>>()?;
        let lookup = beams
            .iter()
            .enumerate()
            .map(|(i, b)| ((b.line.family, b.line.key), i))
            .collect();
        Ok(Self {
            beams,
            lookup,
            lattice: lattice.clone(),
        })
    }

    /// The beam lines bounding the lattice cell that contains `p`.
    fn cell_beams(&self, p: [f64; 2]) -> Vec<usize> {
        let lat = &self.lattice;
        let keys: Vec<(usize, i64)> = match lat.kind() {
            LatticeKind::Square => {
                let tri = containing_triangle(lat, p);
                let (i0, j0) = tri[0].0;
                vec![(0, j0), (0, j0 + 1), (1, i0), (1, i0 + 1)]
            }
            _ => {
                let tri = containing_triangle(lat, p);
                let mut keys = Vec::with_capacity(3);
                for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                    let (u, v) = (tri[a].0, tri[b].0);
                    let family = if u.1 == v.1 {
                        0
                    } else if u.0 == v.0 {
                        1
                    } else {
                        2
                    };
                    keys.push((family, lat.beam_key(family, u)));
                }
                keys
            }
        };
        keys.iter()
            .filter_map(|k| self.lookup.get(k).copied())
            .collect()
    }

    pub fn height(&self, p: [f64; 2]) -> f64 {
        let beams = self.cell_beams(p);
        let eps = 1e-12 * self.lattice.pitch();
        let mut num = 0.0;
        let mut den = 0.0;
        for &b in &beams {
            let beam = &self.beams[b];
            let dist = beam.line.distance(p);
            let value = beam.height_along(beam.line.along(p));
            if dist <= eps {
                return value;
            }
            let w = 1.0 / (dist * dist);
            num += w * value;
            den += w;
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }
}

pub fn reconstruct_crs2d(
    field: &BumpField2D,
    lattice: &Lattice,
    settings: &ElasticaSettings,
) -> Result<CrsSurface2d> {
    CrsSurface2d::solve(field, lattice, settings)
}
