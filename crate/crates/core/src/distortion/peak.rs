//! Locating the displayed peak.

use crate::error::{Error, Result};
use crate::reconstruct::Displayed;

/// Samples per wavelength for the coarse 1D scan.
const SCAN_1D: f64 = 512.0;
/// Samples per wavelength for the coarse 2D scan.
const SCAN_2D: f64 = 64.0;
/// Final localisation, as a fraction of the wavelength.
const REFINE: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakResult {
    pub location: [f64; 2],
    pub height: f64,
    /// Set when the maximum is a plateau resolved to its owning pixel.
    pub plateau: bool,
}

/// Golden-section search for a maximum of `f` on `[a, b]`, stopping once the
/// bracket is narrower than `tol`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Maximum of a continuous profile on `[lo, hi]`: a scan with at least 512
/// points per wavelength, then golden-section refinement around the best
/// sample. Returns `None` when the profile never rises above zero.
pub fn find_peak_continuous_1d<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    wavelength: f64,
) -> Option<(f64, f64)> {
    let step = wavelength / SCAN_1D;
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let h = (hi - lo) / n as f64;
    let mut best = (lo, f(lo));
    let mut best_k = 0;
    for k in 1..=n {
        let x = lo + k as f64 * h;
        let v = f(x);
        if v > best.1 {
            best = (x, v);
            best_k = k;
        }
    }
    if best.1 <= 0.0 {
        return None;
    }
    let a = lo + best_k.saturating_sub(1) as f64 * h;
    let b = lo + (best_k + 1).min(n) as f64 * h;
    let refined = golden_max(&f, a, b, REFINE * wavelength);
    Some(if refined.1 > best.1 { refined } else { best })
}

fn pixel_peak(displayed: &Displayed, plateau: bool) -> Result<PeakResult> {
    let heights = displayed.pixel_heights().expect("pixel-based display");
    let mut best: Option<(usize, f64)> = None;
    for (i, &h) in heights.as_slice().iter().enumerate() {
        if best.is_none_or(|(_, b)| h > b) {
            best = Some((i, h));
        }
    }
    match best {
        Some((i, h)) if h > 0.0 => Ok(PeakResult {
            location: displayed.lattice().pixel(i),
            height: h,
            plateau,
        }),
        _ => Err(Error::NoPeak),
    }
}

/// Locate the maximum of a displayed shape.
///
/// Staircase displays report the owning pixel of the highest plateau;
/// linear displays report the highest vertex. Continuous CRS displays are
/// scanned and refined. Ties go to the lowest pixel index or the smallest
/// coordinate.
pub fn find_peak(displayed: &Displayed, wavelength: f64) -> Result<PeakResult> {
    match displayed {
        Displayed::Staircase { .. } => pixel_peak(displayed, true),
        Displayed::Linear { .. } => pixel_peak(displayed, false),
        Displayed::Crs1d { lattice, .. } => {
            let (lo, hi) = lattice.bounds();
            let f = |x: f64| displayed.height([x, 0.0]);
            let (x, h) =
                find_peak_continuous_1d(f, lo[0], hi[0], wavelength).ok_or(Error::NoPeak)?;
            Ok(PeakResult {
                location: [x, 0.0],
                height: h,
                plateau: false,
            })
        }
        Displayed::Crs2d { lattice, .. } => {
            let (lo, hi) = lattice.bounds();
            let step = wavelength / SCAN_2D;
            let nx = ((hi[0] - lo[0]) / step).ceil() as usize;
            let ny = ((hi[1] - lo[1]) / step).ceil() as usize;
            let mut best: Option<([f64; 2], f64)> = None;
            for j in 0..=ny {
                let y = lo[1] + (hi[1] - lo[1]) * j as f64 / ny.max(1) as f64;
                for i in 0..=nx {
                    let x = lo[0] + (hi[0] - lo[0]) * i as f64 / nx.max(1) as f64;
                    let p = [x, y];
                    if !lattice.contains(p) {
                        continue;
                    }
                    let v = displayed.height(p);
                    if best.is_none_or(|(_, b)| v > b) {
                        best = Some((p, v));
                    }
                }
            }
            let (mut p, mut v) = best.ok_or(Error::NoPeak)?;
            if v <= 0.0 {
                return Err(Error::NoPeak);
            }
            // Pattern search over twelve directions; coordinate descent
            // stalls on the ridges along beam lines.
            let dirs: Vec<[f64; 2]> = (0..12)
                .map(|k| {
                    let a = k as f64 * std::f64::consts::PI / 6.0;
                    [a.cos(), a.sin()]
                })
                .collect();
            let mut h = step;
            while h > REFINE * wavelength {
                let mut moved = false;
                for dir in &dirs {
                    let q = [p[0] + h * dir[0], p[1] + h * dir[1]];
                    if !lattice.contains(q) {
                        continue;
                    }
                    let w = displayed.height(q);
                    if w > v {
                        p = q;
                        v = w;
                        moved = true;
                        break;
                    }
                }
                if !moved {
                    h *= 0.5;
                }
            }
            Ok(PeakResult {
                location: p,
                height: v,
                plateau: false,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::{make_lattice, Extents, LatticeKind, PixelHeights};

    #[test]
    fn pixel_peaks() {
        let lat = make_lattice(LatticeKind::Line, 30.0, Extents::Line { length: 60.0 }).unwrap();
        let h = PixelHeights(vec![0.0, 1.0, 0.0]);
        let s = Displayed::Staircase {
            lattice: &lat,
            heights: h.clone(),
        };
        let p = find_peak(&s, 90.0).unwrap();
        assert_eq!(p.location[0], 30.0);
        assert!(p.plateau);
        let l = Displayed::Linear {
            lattice: &lat,
            heights: h,
        };
        assert_eq!(find_peak(&l, 90.0).unwrap().location[0], 30.0);
        let flat = Displayed::Linear {
            lattice: &lat,
            heights: PixelHeights(vec![0.0; 3]),
        };
        assert!(matches!(find_peak(&flat, 90.0), Err(Error::NoPeak)));
        let tie = Displayed::Staircase {
            lattice: &lat,
            heights: PixelHeights(vec![0.0, 1.0, 1.0]),
        };
        assert_eq!(find_peak(&tie, 90.0).unwrap().location[0], 30.0);
    }

    #[test]
    fn continuous_peak_is_located() {
        let l = 90.0;
        for x0 in [3.3, 31.7, 44.999, 88.0] {
            let f = |x: f64| 1.0 / (1.0 + ((x - x0) / 7.0).powi(2)) - 0.2;
            let (x, _) = find_peak_continuous_1d(f, 0.0, 120.0, l).unwrap();
            assert!((x - x0).abs() <= 1e-4 * l, "{x} vs {x0}");
        }
        assert!(find_peak_continuous_1d(|_| 0.0, 0.0, 1.0, 1.0).is_none());
    }
}
