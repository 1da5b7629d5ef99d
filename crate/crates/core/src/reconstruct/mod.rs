//! Displayed shapes: pixel-only, linear connection and CRS.

pub mod crs;
pub mod elastica;

pub use crs::{reconstruct_crs1d, reconstruct_crs2d, BeamProfile, CrsProfile1d, CrsSurface2d};
pub use elastica::{solve_elastica_1d, solve_elastica_guided, ElasticaSettings, ElasticaSolution};

use crate::error::{Error, Result};
use crate::shape::{sample_pixels, Lattice, LatticeKind, PixelHeights, ShapeField};

/// Which display family renders the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReconstructionModel {
    PixelOnly,
    Linear,
    Crs(ElasticaSettings),
}

impl ReconstructionModel {
    pub fn name(&self) -> &'static str {
        match self {
            ReconstructionModel::PixelOnly => "pixel-only",
            ReconstructionModel::Linear => "linear",
            ReconstructionModel::Crs(_) => "crs",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ReconstructionModel::Crs(s) => s.validate(),
            _ => Ok(()),
        }
    }
}

/// Height of the pixel nearest to `p` (zero-order hold over Voronoi cells).
pub fn reconstruct_nearest(heights: &PixelHeights, lattice: &Lattice, p: [f64; 2]) -> f64 {
    heights[lattice.nearest_pixel(p)]
}

/// Lattice triangle containing `p`: integer vertex coordinates and
/// barycentric weights. Square cells are split along the diagonal from the
/// lower-left to the upper-right corner.
pub(crate) fn containing_triangle(lattice: &Lattice, p: [f64; 2]) -> [((i64, i64), f64); 3] {
    let (a, b) = lattice.fractional(p);
    match lattice.kind() {
        LatticeKind::Line => {
            let n = lattice.len() as i64 - 1;
            let i0 = (a.floor() as i64).clamp(0, n - 1);
            let f = a - i0 as f64;
            [((i0, 0), 1.0 - f), ((i0 + 1, 0), f), ((i0, 0), 0.0)]
        }
        LatticeKind::Square => {
            let (lo, hi) = lattice.bounds();
            let d = lattice.pitch();
            let nx = ((hi[0] - lo[0]) / d).round() as i64;
            let ny = ((hi[1] - lo[1]) / d).round() as i64;
            let i0 = (a.floor() as i64).clamp(0, nx - 1);
            let j0 = (b.floor() as i64).clamp(0, ny - 1);
            let fa = a - i0 as f64;
            let fb = b - j0 as f64;
            if fb <= fa {
                [
                    ((i0, j0), 1.0 - fa),
                    ((i0 + 1, j0), fa - fb),
                    ((i0 + 1, j0 + 1), fb),
                ]
            } else {
                [
                    ((i0, j0), 1.0 - fb),
                    ((i0, j0 + 1), fb - fa),
                    ((i0 + 1, j0 + 1), fa),
                ]
            }
        }
        LatticeKind::Hexagonal => {
            let q0 = a.floor() as i64;
            let r0 = b.floor() as i64;
            let fa = a - q0 as f64;
            let fb = b - r0 as f64;
            if fa + fb <= 1.0 {
                [
                    ((q0, r0), 1.0 - fa - fb),
                    ((q0 + 1, r0), fa),
                    ((q0, r0 + 1), fb),
                ]
            } else {
                [
                    ((q0 + 1, r0 + 1), fa + fb - 1.0),
                    ((q0, r0 + 1), 1.0 - fa),
                    ((q0 + 1, r0), 1.0 - fb),
                ]
            }
        }
    }
}

/// Piecewise-linear (1D) or barycentric (2D) interpolation of pixel heights.
pub fn reconstruct_linear(heights: &PixelHeights, lattice: &Lattice, p: [f64; 2]) -> Result<f64> {
    if !lattice.contains(p) {
        return Err(Error::ExtrapolationNotDefined { x: p[0], y: p[1] });
    }
    let mut value = 0.0;
    for ((a, b), w) in containing_triangle(lattice, p) {
        match lattice.index_of(a, b) {
            Some(idx) => value += w * heights[idx],
            // A vertex beyond the hull only occurs for points on the hull
            // edge, where its weight vanishes up to rounding.
            None if w.abs() <= 1e-9 => {}
            None => return Err(Error::ExtrapolationNotDefined { x: p[0], y: p[1] }),
        }
    }
    Ok(value)
}

/// A displayed shape, zero outside the display region.
#[derive(Debug, Clone)]
pub enum Displayed<'a> {
    Staircase {
        lattice: &'a Lattice,
        heights: PixelHeights,
    },
    Linear {
        lattice: &'a Lattice,
        heights: PixelHeights,
    },
    Crs1d {
        lattice: &'a Lattice,
        profile: CrsProfile1d,
    },
    Crs2d {
        lattice: &'a Lattice,
        surface: CrsSurface2d,
    },
}

impl Displayed<'_> {
    pub fn lattice(&self) -> &Lattice {
        match self {
            Displayed::Staircase { lattice, .. }
            | Displayed::Linear { lattice, .. }
            | Displayed::Crs1d { lattice, .. }
            | Displayed::Crs2d { lattice, .. } => lattice,
        }
    }

    pub fn pixel_heights(&self) -> Option<&PixelHeights> {
        match self {
            Displayed::Staircase { heights, .. } | Displayed::Linear { heights, .. } => {
                Some(heights)
            }
            _ => None,
        }
    }

    pub fn height(&self, p: [f64; 2]) -> f64 {
        let lattice = self.lattice();
        if !lattice.contains(p) {
            return 0.0;
        }
        match self {
            Displayed::Staircase { heights, .. } => reconstruct_nearest(heights, lattice, p),
            Displayed::Linear { heights, .. } => {
                reconstruct_linear(heights, lattice, p).unwrap_or(0.0)
            }
            Displayed::Crs1d { profile, .. } => profile.height(p[0]),
            Displayed::Crs2d { surface, .. } => surface.height(p),
        }
    }
}

/// Render `field` on `lattice` with the given display family.
pub fn reconstruct<'a, F: ShapeField + ?Sized>(
    model: &ReconstructionModel,
    field: &F,
    lattice: &'a Lattice,
) -> Result<Displayed<'a>> {
    Ok(match model {
        ReconstructionModel::PixelOnly => Displayed::Staircase {
            lattice,
            heights: sample_pixels(field, lattice),
        },
        ReconstructionModel::Linear => Displayed::Linear {
            lattice,
            heights: sample_pixels(field, lattice),
        },
        ReconstructionModel::Crs(settings) => match lattice.kind() {
            LatticeKind::Line => Displayed::Crs1d {
                lattice,
                profile: CrsProfile1d::solve(field, lattice, settings)?,
            },
            _ => Displayed::Crs2d {
                lattice,
                surface: CrsSurface2d::solve(field, lattice, settings)?,
            },
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::{make_lattice, Extents};

    fn line(n: usize) -> Lattice {
        make_lattice(
            LatticeKind::Line,
            30.0,
            Extents::Line {
                length: 30.0 * (n - 1) as f64,
            },
        )
        .unwrap()
    }

    #[test]
    fn nearest_examples() {
        let lat = line(3);
        let h = PixelHeights(vec![0.0, 1.0, 0.0]);
        assert_eq!(reconstruct_nearest(&h, &lat, [30.0, 0.0]), 1.0);
        assert_eq!(reconstruct_nearest(&h, &lat, [15.0, 0.0]), 0.0);
        assert_eq!(reconstruct_nearest(&h, &lat, [15.01, 0.0]), 1.0);
    }

    #[test]
    fn linear_examples() {
        let lat = line(2);
        let h = PixelHeights(vec![0.0, 1.0]);
        assert_eq!(reconstruct_linear(&h, &lat, [15.0, 0.0]).unwrap(), 0.5);
        assert!(matches!(
            reconstruct_linear(&h, &lat, [31.0, 0.0]),
            Err(Error::ExtrapolationNotDefined { .. })
        ));
    }

    #[test]
    fn barycentric_centroid_is_vertex_mean() {
        let lat = make_lattice(LatticeKind::Hexagonal, 2.0, Extents::Hex { rings: 2 }).unwrap();
        let h = PixelHeights((0..lat.len()).map(|i| (i as f64 * 0.37).sin()).collect());
        for tri in [
            [(0, 0), (1, 0), (0, 1)],
            [(1, 0), (0, 1), (1, 1)],
            [(-1, -1), (0, -1), (-1, 0)],
        ] {
            let ids: Vec<usize> = tri
                .iter()
                .map(|&(a, b)| lat.index_of(a, b).unwrap())
                .collect();
            let c = ids.iter().fold([0.0, 0.0], |acc, &i| {
                let p = lat.pixel(i);
                [acc[0] + p[0] / 3.0, acc[1] + p[1] / 3.0]
            });
            let mean = ids.iter().map(|&i| h[i]).sum::<f64>() / 3.0;
            assert!((reconstruct_linear(&h, &lat, c).unwrap() - mean).abs() < 1e-12);
        }
        let sq = make_lattice(
            LatticeKind::Square,
            1.0,
            Extents::Rect {
                width: 2.0,
                height: 2.0,
            },
        )
        .unwrap();
        let h = PixelHeights((0..9).map(|i| i as f64 * i as f64).collect());
        // Lower-right triangle of the first cell: (0,0), (1,0), (1,1).
        let mean = (h[0] + h[1] + h[4]) / 3.0;
        assert!(
            (reconstruct_linear(&h, &sq, [2.0 / 3.0, 1.0 / 3.0]).unwrap() - mean).abs() < 1e-12
        );
    }

    #[test]
    fn interpolants_match_pixels() {
        for lat in [
            make_lattice(LatticeKind::Hexagonal, 1.5, Extents::Hex { rings: 3 }).unwrap(),
            make_lattice(
                LatticeKind::Square,
                1.5,
                Extents::Rect {
                    width: 6.0,
                    height: 4.5,
                },
            )
            .unwrap(),
            line(6),
        ] {
            let h = PixelHeights((0..lat.len()).map(|i| (i as f64 * 1.3).cos()).collect());
            for (i, &p) in lat.pixels().iter().enumerate() {
                assert_eq!(reconstruct_nearest(&h, &lat, p), h[i]);
                assert!((reconstruct_linear(&h, &lat, p).unwrap() - h[i]).abs() < 1e-12);
            }
        }
    }
}
