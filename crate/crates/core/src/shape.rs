//! Target shapes and pixel lattices.
//!
//! All lengths are in millimetres. Both bump families are raised cosines
//! `A/2 * (1 + cos(2*pi*r/l))` clipped to `r <= l/2`, so they are total
//! functions that vanish outside their support and are C1 everywhere.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// A scalar height field over the display plane.
///
/// 1D fields ignore the second coordinate.
pub trait ShapeField {
    fn height(&self, p: [f64; 2]) -> f64;
    fn gradient(&self, p: [f64; 2]) -> [f64; 2];
    /// Centre and radius of a disk outside of which the field is zero.
    fn support(&self) -> ([f64; 2], f64);
}

fn raised_cosine(r: f64, amplitude: f64, wavelength: f64) -> f64 {
    if r.abs() <= 0.5 * wavelength {
        0.5 * amplitude * (1.0 + (TAU * r / wavelength).cos())
    } else {
        0.0
    }
}

/// d/dr of the raised cosine.
fn raised_cosine_slope(r: f64, amplitude: f64, wavelength: f64) -> f64 {
    if r.abs() <= 0.5 * wavelength {
        -amplitude * PI / wavelength * (TAU * r / wavelength).sin()
    } else {
        0.0
    }
}

fn check_shape(amplitude: f64, wavelength: f64) -> Result<()> {
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(Error::invalid(
            "amplitude",
            format!("{amplitude} must be finite and >= 0"),
        ));
    }
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(Error::invalid(
            "wavelength",
            format!("{wavelength} must be > 0"),
        ));
    }
    Ok(())
}

/// Single raised-cosine bump on a line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpField1D {
    pub peak: f64,
    pub amplitude: f64,
    pub wavelength: f64,
}

impl BumpField1D {
    /// A zero amplitude is accepted and denotes the flat field.
    pub fn new(peak: f64, amplitude: f64, wavelength: f64) -> Result<Self> {
        check_shape(amplitude, wavelength)?;
        if !peak.is_finite() {
            return Err(Error::invalid("peak", "must be finite"));
        }
        Ok(Self {
            peak,
            amplitude,
            wavelength,
        })
    }

    pub fn value(&self, x: f64) -> f64 {
        raised_cosine(x - self.peak, self.amplitude, self.wavelength)
    }

    pub fn slope(&self, x: f64) -> f64 {
        raised_cosine_slope(x - self.peak, self.amplitude, self.wavelength)
    }

    pub fn shifted(&self, by: f64) -> Self {
        Self {
            peak: self.peak + by,
            ..*self
        }
    }
}

pub fn bump1d(x: f64, field: &BumpField1D) -> f64 {
    field.value(x)
}

impl ShapeField for BumpField1D {
    fn height(&self, p: [f64; 2]) -> f64 {
        self.value(p[0])
    }

    fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        [self.slope(p[0]), 0.0]
    }

    fn support(&self) -> ([f64; 2], f64) {
        ([self.peak, 0.0], 0.5 * self.wavelength)
    }
}

/// Rotationally symmetric raised-cosine bump; the support diameter equals
/// the wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpField2D {
    pub peak: [f64; 2],
    pub amplitude: f64,
    pub wavelength: f64,
}

impl BumpField2D {
    pub fn new(peak: [f64; 2], amplitude: f64, wavelength: f64) -> Result<Self> {
        check_shape(amplitude, wavelength)?;
        if !(peak[0].is_finite() && peak[1].is_finite()) {
            return Err(Error::invalid("peak", "must be finite"));
        }
        Ok(Self {
            peak,
            amplitude,
            wavelength,
        })
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        let r = (x - self.peak[0]).hypot(y - self.peak[1]);
        raised_cosine(r, self.amplitude, self.wavelength)
    }
}

pub fn bump2d(x: f64, y: f64, field: &BumpField2D) -> f64 {
    field.value(x, y)
}

impl ShapeField for BumpField2D {
    fn height(&self, p: [f64; 2]) -> f64 {
        self.value(p[0], p[1])
    }

    fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        let dx = p[0] - self.peak[0];
        let dy = p[1] - self.peak[1];
        let r = dx.hypot(dy);
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let s = raised_cosine_slope(r, self.amplitude, self.wavelength);
        [s * dx / r, s * dy / r]
    }

    fn support(&self) -> ([f64; 2], f64) {
        (self.peak, 0.5 * self.wavelength)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LatticeKind {
    Line,
    Square,
    Hexagonal,
}

impl LatticeKind {
    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::Line => "line",
            LatticeKind::Square => "square",
            LatticeKind::Hexagonal => "hexagonal",
        }
    }
}

/// Bounding region used to enumerate pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extents {
    /// Pixels at `0, d, 2d, ...` up to `length`.
    Line { length: f64 },
    /// Pixels at `(i d, j d)` inside `[0, width] x [0, height]`.
    Rect { width: f64, height: f64 },
    /// Hexagonal patch of `rings` rings around a centre pixel at the origin.
    Hex { rings: usize },
}

/// One straight beam of the skeleton: a lattice row together with its two
/// boundary anchors, one pitch beyond the outermost pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamLine {
    pub family: usize,
    pub key: i64,
    /// Pixel indices ordered along `direction`.
    pub pixels: Vec<usize>,
    pub start: [f64; 2],
    pub direction: [f64; 2],
    /// Anchor-to-anchor length.
    pub length: f64,
}

impl BeamLine {
    pub fn end(&self) -> [f64; 2] {
        [
            self.start[0] + self.length * self.direction[0],
            self.start[1] + self.length * self.direction[1],
        ]
    }

    /// Coordinate of `p` projected onto the beam, measured from the start anchor.
    pub fn along(&self, p: [f64; 2]) -> f64 {
        (p[0] - self.start[0]) * self.direction[0] + (p[1] - self.start[1]) * self.direction[1]
    }

    /// Perpendicular distance from `p` to the beam's line.
    pub fn distance(&self, p: [f64; 2]) -> f64 {
        ((p[0] - self.start[0]) * self.direction[1] - (p[1] - self.start[1]) * self.direction[0])
            .abs()
    }

    pub fn point_at(&self, s: f64) -> [f64; 2] {
        [
            self.start[0] + s * self.direction[0],
            self.start[1] + s * self.direction[1],
        ]
    }
}

/// A regular pixel layout.
///
/// Pixel order is deterministic: increasing `i` on a line, row-major
/// (`j` outer, `i` inner) on a square lattice, and rows of increasing `r`
/// then increasing `q` (axial coordinates) on a hexagonal lattice.
#[derive(Debug, Clone)]
pub struct Lattice {
    kind: LatticeKind,
    pitch: f64,
    extents: Extents,
    pixels: Vec<[f64; 2]>,
    coords: Vec<(i64, i64)>,
    // Dense lookup from integer lattice coordinates to pixel index.
    lookup: Vec<u32>,
    lo: (i64, i64),
    dims: (i64, i64),
    bounds: ([f64; 2], [f64; 2]),
}

const ABSENT: u32 = u32::MAX;

impl Lattice {
    pub fn new(kind: LatticeKind, pitch: f64, extents: Extents) -> Result<Self> {
        if !(pitch.is_finite() && pitch > 0.0) {
            return Err(Error::invalid("pitch", format!("{pitch} must be > 0")));
        }
        let coords: Vec<(i64, i64)> = match (kind, extents) {
            (LatticeKind::Line, Extents::Line { length }) => {
                if length.is_nan() || length < pitch {
                    return Err(Error::DegenerateLattice(format!(
                        "line length {length} is smaller than one pitch {pitch}"
                    )));
                }
                let n = cells_in(length, pitch);
                (0..=n).map(|i| (i, 0)).collect()
            }
            (LatticeKind::Square, Extents::Rect { width, height }) => {
                if !(width >= pitch && height >= pitch) {
                    return Err(Error::DegenerateLattice(format!(
                        "rectangle {width} x {height} is smaller than one pitch {pitch}"
                    )));
                }
                let nx = cells_in(width, pitch);
                let ny = cells_in(height, pitch);
                (0..=ny)
                    .flat_map(|j| (0..=nx).map(move |i| (i, j)))
                    .collect()
            }
            (LatticeKind::Hexagonal, Extents::Hex { rings }) => {
                if rings == 0 {
                    return Err(Error::DegenerateLattice(
                        "hexagonal patch needs at least one ring".into(),
                    ));
                }
                let k = rings as i64;
                (-k..=k)
                    .flat_map(|r| ((-k).max(-r - k)..=k.min(-r + k)).map(move |q| (q, r)))
                    .collect()
            }
            _ => {
                return Err(Error::invalid(
                    "extents",
                    format!("{extents:?} does not match lattice kind {}", kind.name()),
                ))
            }
        };
        let pixels: Vec<[f64; 2]> = coords
            .iter()
            .map(|&(a, b)| lattice_point(kind, pitch, a, b))
            .collect();
        let mut bounds = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &pixels {
            for (k, &v) in p.iter().enumerate() {
                bounds.0[k] = bounds.0[k].min(v);
                bounds.1[k] = bounds.1[k].max(v);
            }
        }
        let lo = (
            coords.iter().map(|c| c.0).min().unwrap_or(0),
            coords.iter().map(|c| c.1).min().unwrap_or(0),
        );
        let hi = (
            coords.iter().map(|c| c.0).max().unwrap_or(0),
            coords.iter().map(|c| c.1).max().unwrap_or(0),
        );
        let dims = (hi.0 - lo.0 + 1, hi.1 - lo.1 + 1);
        let mut lookup = vec![ABSENT; (dims.0 * dims.1) as usize];
        for (idx, &(a, b)) in coords.iter().enumerate() {
            lookup[((b - lo.1) * dims.0 + (a - lo.0)) as usize] = idx as u32;
        }
        Ok(Self {
            kind,
            pitch,
            extents,
            pixels,
            coords,
            lookup,
            lo,
            dims,
            bounds,
        })
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn extents(&self) -> Extents {
        self.extents
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[[f64; 2]] {
        &self.pixels
    }

    pub fn pixel(&self, index: usize) -> [f64; 2] {
        self.pixels[index]
    }

    /// Integer lattice coordinates of a pixel (`(i, 0)`, `(i, j)` or axial `(q, r)`).
    pub fn coords(&self, index: usize) -> (i64, i64) {
        self.coords[index]
    }

    pub fn index_of(&self, a: i64, b: i64) -> Option<usize> {
        let (ia, ib) = (a - self.lo.0, b - self.lo.1);
        if ia < 0 || ib < 0 || ia >= self.dims.0 || ib >= self.dims.1 {
            return None;
        }
        match self.lookup[(ib * self.dims.0 + ia) as usize] {
            ABSENT => None,
            v => Some(v as usize),
        }
    }

    /// Fractional lattice coordinates of an arbitrary point.
    pub fn fractional(&self, p: [f64; 2]) -> (f64, f64) {
        let d = self.pitch;
        match self.kind {
            LatticeKind::Line => (p[0] / d, 0.0),
            LatticeKind::Square => (p[0] / d, p[1] / d),
            LatticeKind::Hexagonal => {
                let b = 2.0 * p[1] / (SQRT3 * d);
                (p[0] / d - 0.5 * b, b)
            }
        }
    }

    /// Index of the pixel nearest to `p`; ties go to the lower index.
    pub fn nearest_pixel(&self, p: [f64; 2]) -> usize {
        match self.kind {
            LatticeKind::Line => {
                let n = self.len() as i64 - 1;
                round_half_down(p[0] / self.pitch).clamp(0, n) as usize
            }
            LatticeKind::Square => {
                let (nx, ny) = (self.dims.0 - 1, self.dims.1 - 1);
                let i = round_half_down(p[0] / self.pitch).clamp(0, nx);
                let j = round_half_down(p[1] / self.pitch).clamp(0, ny);
                self.index_of(i, j).expect("square lattice is dense")
            }
            LatticeKind::Hexagonal => {
                let (a, b) = self.fractional(p);
                let (q0, r0) = (a.floor() as i64, b.floor() as i64);
                let mut best: Option<(f64, usize)> = None;
                for (dq, dr) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    if let Some(idx) = self.index_of(q0 + dq, r0 + dr) {
                        let dist = dist2(self.pixels[idx], p);
                        if best.is_none_or(|(bd, bi)| dist < bd || (dist == bd && idx < bi)) {
                            best = Some((dist, idx));
                        }
                    }
                }
                match best {
                    Some((_, idx)) => idx,
                    None => self.nearest_by_scan(p),
                }
            }
        }
    }

    fn nearest_by_scan(&self, p: [f64; 2]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, &q) in self.pixels.iter().enumerate() {
            let dist = dist2(q, p);
            if dist < best.0 {
                best = (dist, i);
            }
        }
        best.1
    }

    /// Indices of pixels within `radius` of `center`, in pixel order.
    pub fn pixels_within(&self, center: [f64; 2], radius: f64) -> Vec<usize> {
        let d = self.pitch;
        let r2 = radius * radius;
        let mut out = Vec::new();
        match self.kind {
            LatticeKind::Line => {
                let lo = ((center[0] - radius) / d).ceil() as i64;
                let hi = ((center[0] + radius) / d).floor() as i64;
                for i in lo..=hi {
                    if let Some(idx) = self.index_of(i, 0) {
                        if dist2(self.pixels[idx], center) <= r2 {
                            out.push(idx);
                        }
                    }
                }
            }
            LatticeKind::Square => {
                let (ilo, ihi) = (
                    ((center[0] - radius) / d).ceil() as i64,
                    ((center[0] + radius) / d).floor() as i64,
                );
                let (jlo, jhi) = (
                    ((center[1] - radius) / d).ceil() as i64,
                    ((center[1] + radius) / d).floor() as i64,
                );
                for j in jlo..=jhi {
                    for i in ilo..=ihi {
                        if let Some(idx) = self.index_of(i, j) {
                            if dist2(self.pixels[idx], center) <= r2 {
                                out.push(idx);
                            }
                        }
                    }
                }
            }
            LatticeKind::Hexagonal => {
                let row = 0.5 * SQRT3 * d;
                let rlo = ((center[1] - radius) / row).floor() as i64;
                let rhi = ((center[1] + radius) / row).ceil() as i64;
                for r in rlo..=rhi {
                    let qlo = ((center[0] - radius) / d - 0.5 * r as f64).floor() as i64;
                    let qhi = ((center[0] + radius) / d - 0.5 * r as f64).ceil() as i64;
                    for q in qlo..=qhi {
                        if let Some(idx) = self.index_of(q, r) {
                            if dist2(self.pixels[idx], center) <= r2 {
                                out.push(idx);
                            }
                        }
                    }
                }
                out.sort_unstable();
            }
        }
        out
    }

    /// Axis-aligned bounds of the display region (convex hull of the pixels).
    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        self.bounds
    }

    /// Whether `p` lies in the display region: the convex hull of the pixels.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let eps = 1e-12 * self.pitch;
        match self.kind {
            LatticeKind::Line => {
                let (lo, hi) = self.bounds();
                p[0] >= lo[0] - eps && p[0] <= hi[0] + eps
            }
            LatticeKind::Square => {
                let (lo, hi) = self.bounds();
                p[0] >= lo[0] - eps
                    && p[0] <= hi[0] + eps
                    && p[1] >= lo[1] - eps
                    && p[1] <= hi[1] + eps
            }
            LatticeKind::Hexagonal => {
                let rk = self.hex_circumradius();
                in_hexagon(p, rk, eps)
            }
        }
    }

    pub(crate) fn hex_circumradius(&self) -> f64 {
        match self.extents {
            Extents::Hex { rings } => rings as f64 * self.pitch,
            _ => 0.0,
        }
    }

    /// The straight beam lines of a skeleton laid over this lattice.
    ///
    /// A line lattice has one beam; a square lattice has its rows (family 0)
    /// and columns (family 1); a hexagonal lattice has three families of
    /// rows along 0, 60 and 120 degrees. Rows holding a single pixel are
    /// skipped.
    pub fn beam_lines(&self) -> Vec<BeamLine> {
        let families: &[[f64; 2]] = match self.kind {
            LatticeKind::Line => &[[1.0, 0.0]],
            LatticeKind::Square => &[[1.0, 0.0], [0.0, 1.0]],
            LatticeKind::Hexagonal => &[[1.0, 0.0], [0.5, 0.5 * SQRT3], [-0.5, 0.5 * SQRT3]],
        };
        let mut beams = Vec::new();
        for (family, &dir) in families.iter().enumerate() {
            let mut rows: std::collections::BTreeMap<i64, Vec<usize>> = Default::default();
            for (idx, &c) in self.coords.iter().enumerate() {
                rows.entry(self.beam_key(family, c)).or_default().push(idx);
            }
            for (key, mut pixels) in rows {
                if pixels.len() < 2 {
                    continue;
                }
                let along = |i: &usize| self.pixels[*i][0] * dir[0] + self.pixels[*i][1] * dir[1];
                pixels.sort_by(|a, b| along(a).total_cmp(&along(b)));
                let first = self.pixels[pixels[0]];
                let last = self.pixels[*pixels.last().unwrap()];
                let start = [
                    first[0] - self.pitch * dir[0],
                    first[1] - self.pitch * dir[1],
                ];
                let length = dist2(first, last).sqrt() + 2.0 * self.pitch;
                beams.push(BeamLine {
                    family,
                    key,
                    pixels,
                    start,
                    direction: dir,
                    length,
                });
            }
        }
        beams
    }

    /// Key identifying which row of `family` a pixel with coordinates `c` is on.
    pub(crate) fn beam_key(&self, family: usize, c: (i64, i64)) -> i64 {
        match (self.kind, family) {
            (LatticeKind::Line, _) => 0,
            (LatticeKind::Square, 0) => c.1,
            (LatticeKind::Square, _) => c.0,
            (LatticeKind::Hexagonal, 0) => c.1,
            (LatticeKind::Hexagonal, 1) => c.0,
            (LatticeKind::Hexagonal, _) => c.0 + c.1,
        }
    }
}

pub fn make_lattice(kind: LatticeKind, pitch: f64, extents: Extents) -> Result<Lattice> {
    Lattice::new(kind, pitch, extents)
}

fn cells_in(length: f64, pitch: f64) -> i64 {
    // Tolerate rounding when the length is an exact multiple of the pitch.
    (length / pitch * (1.0 + 1e-12)).floor() as i64
}

fn lattice_point(kind: LatticeKind, d: f64, a: i64, b: i64) -> [f64; 2] {
    match kind {
        LatticeKind::Line => [a as f64 * d, 0.0],
        LatticeKind::Square => [a as f64 * d, b as f64 * d],
        LatticeKind::Hexagonal => [d * (a as f64 + 0.5 * b as f64), 0.5 * SQRT3 * d * b as f64],
    }
}

fn round_half_down(t: f64) -> i64 {
    let f = t.floor();
    if t - f <= 0.5 {
        f as i64
    } else {
        f as i64 + 1
    }
}

pub(crate) fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Point-in-hexagon test for a regular hexagon centred at the origin with
/// vertices on the x axis.
pub(crate) fn in_hexagon(p: [f64; 2], circumradius: f64, eps: f64) -> bool {
    let (x, y) = (p[0].abs(), p[1].abs());
    y <= 0.5 * SQRT3 * circumradius + eps && SQRT3 * x + y <= SQRT3 * circumradius + eps
}

/// Per-pixel off-plane displacement, aligned with the lattice pixel order.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelHeights(pub Vec<f64>);

impl PixelHeights {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl std::ops::Index<usize> for PixelHeights {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Evaluate `field` at every pixel.
pub fn sample_pixels<F: ShapeField + ?Sized>(field: &F, lattice: &Lattice) -> PixelHeights {
    let mut heights = PixelHeights::zeros(lattice.len());
    let (center, radius) = field.support();
    for idx in lattice.pixels_within(center, radius) {
        heights.0[idx] = field.height(lattice.pixel(idx));
    }
    heights
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump1d_examples() {
        let f = BumpField1D::new(3.0, 1.0, 2.0).unwrap();
        assert_eq!(bump1d(3.0, &f), 1.0);
        assert_eq!(bump1d(4.0, &f), 0.0);
        assert!((bump1d(3.5, &f) - 0.5).abs() < 1e-15);
        assert_eq!(bump1d(10.0, &f), 0.0);
    }

    #[test]
    fn bump1d_is_c1_at_support_edge() {
        let f = BumpField1D::new(0.0, 1.0, 2.0).unwrap();
        let eps = 1e-7;
        assert!(f.slope(1.0 - eps).abs() < 1e-6);
        assert_eq!(f.slope(1.0 + eps), 0.0);
    }

    #[test]
    fn bump2d_examples() {
        let f = BumpField2D::new([0.0, 0.0], 5.0, 90.0).unwrap();
        assert_eq!(bump2d(0.0, 0.0, &f), 5.0);
        assert_eq!(bump2d(45.0, 0.0, &f), 0.0);
        assert_eq!(bump2d(0.0, -45.0, &f), 0.0);
        assert!((bump2d(22.5, 0.0, &f) - 2.5).abs() < 1e-14);
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        assert!((bump2d(22.5 * c, 22.5 * s, &f) - 2.5).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_fields() {
        assert!(BumpField1D::new(0.0, -1.0, 1.0).is_err());
        assert!(BumpField1D::new(0.0, 1.0, 0.0).is_err());
        assert!(BumpField2D::new([f64::NAN, 0.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn line_lattice_of_the_five_pixel_device() {
        let lat = make_lattice(LatticeKind::Line, 30.0, Extents::Line { length: 120.0 }).unwrap();
        let xs: Vec<f64> = lat.pixels().iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![0.0, 30.0, 60.0, 90.0, 120.0]);
    }

    #[test]
    fn square_lattice_counts() {
        let lat = make_lattice(
            LatticeKind::Square,
            1.0,
            Extents::Rect {
                width: 2.0,
                height: 2.0,
            },
        )
        .unwrap();
        assert_eq!(lat.len(), 9);
        assert_eq!(lat.pixel(5), [2.0, 1.0]);
    }

    #[test]
    fn hexagonal_counts_follow_centered_hexagonal_numbers() {
        for k in 1..6usize {
            let lat = make_lattice(LatticeKind::Hexagonal, 1.0, Extents::Hex { rings: k }).unwrap();
            assert_eq!(lat.len(), 3 * k * k + 3 * k + 1);
        }
        let lat = make_lattice(LatticeKind::Hexagonal, 1.0, Extents::Hex { rings: 2 }).unwrap();
        assert_eq!(lat.len(), 19);
    }

    #[test]
    fn hexagonal_interior_pixels_have_six_unit_neighbors() {
        let d = 2.5;
        let lat = make_lattice(LatticeKind::Hexagonal, d, Extents::Hex { rings: 3 }).unwrap();
        for i in 0..lat.len() {
            let (q, r) = lat.coords(i);
            if q.abs().max(r.abs()).max((q + r).abs()) >= 3 {
                continue;
            }
            let near: Vec<usize> = lat
                .pixels_within(lat.pixel(i), 1.01 * d)
                .into_iter()
                .filter(|&j| j != i)
                .collect();
            assert_eq!(near.len(), 6);
            for j in near {
                let dist = dist2(lat.pixel(i), lat.pixel(j)).sqrt();
                assert!((dist - d).abs() <= 1e-9 * d);
            }
        }
    }

    #[test]
    fn degenerate_extents_are_rejected() {
        assert!(matches!(
            make_lattice(LatticeKind::Line, 30.0, Extents::Line { length: 10.0 }),
            Err(Error::DegenerateLattice(_))
        ));
        assert!(matches!(
            make_lattice(
                LatticeKind::Square,
                1.0,
                Extents::Rect {
                    width: 3.0,
                    height: 0.5
                }
            ),
            Err(Error::DegenerateLattice(_))
        ));
        assert!(matches!(
            make_lattice(LatticeKind::Hexagonal, 1.0, Extents::Hex { rings: 0 }),
            Err(Error::DegenerateLattice(_))
        ));
        assert!(make_lattice(LatticeKind::Line, 1.0, Extents::Hex { rings: 2 }).is_err());
    }

    #[test]
    fn nearest_pixel_breaks_ties_low() {
        let lat = make_lattice(LatticeKind::Line, 1.0, Extents::Line { length: 3.0 }).unwrap();
        assert_eq!(lat.nearest_pixel([1.5, 0.0]), 1);
        assert_eq!(lat.nearest_pixel([1.5000001, 0.0]), 2);
        assert_eq!(lat.nearest_pixel([-4.0, 0.0]), 0);
    }

    #[test]
    fn hexagonal_nearest_matches_scan() {
        let lat = make_lattice(LatticeKind::Hexagonal, 1.3, Extents::Hex { rings: 3 }).unwrap();
        let mut x = 0.123f64;
        for _ in 0..2000 {
            x = (x * 9301.0 + 0.49297).fract();
            let y = (x * 7.0 + 0.31).fract();
            let p = [(x - 0.5) * 7.0, (y - 0.5) * 6.0];
            let a = lat.nearest_pixel(p);
            let b = lat.nearest_by_scan(p);
            assert!((dist2(lat.pixel(a), p) - dist2(lat.pixel(b), p)).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_examples() {
        let lat = make_lattice(LatticeKind::Line, 1.0, Extents::Line { length: 6.0 }).unwrap();
        let on_pixel = BumpField1D::new(3.0, 1.5, 2.0).unwrap();
        assert_eq!(sample_pixels(&on_pixel, &lat)[3], 1.5);
        // d/l = 0.5 with the peak midway: both flanking pixels read A/2.
        let mid = BumpField1D::new(2.5, 1.0, 2.0).unwrap();
        let h = sample_pixels(&mid, &lat);
        assert!((h[2] - 0.5).abs() < 1e-15 && (h[3] - 0.5).abs() < 1e-15);
        let off = BumpField1D::new(2.37, 0.8, 3.1).unwrap();
        let h = sample_pixels(&off, &lat);
        for (i, p) in lat.pixels().iter().enumerate() {
            assert_eq!(h[i], bump1d(p[0], &off));
        }
    }

    #[test]
    fn beam_lines_cover_hexagon_rows() {
        let lat = make_lattice(LatticeKind::Hexagonal, 1.0, Extents::Hex { rings: 2 }).unwrap();
        let beams = lat.beam_lines();
        assert_eq!(beams.len(), 15);
        let sizes: Vec<usize> = beams
            .iter()
            .filter(|b| b.family == 0)
            .map(|b| b.pixels.len())
            .collect();
        assert_eq!(sizes, vec![3, 4, 5, 4, 3]);
        for b in &beams {
            for &p in &b.pixels {
                assert!(b.distance(lat.pixel(p)) < 1e-12);
            }
            assert!((b.along(lat.pixel(b.pixels[0])) - 1.0).abs() < 1e-12);
        }
    }
}
