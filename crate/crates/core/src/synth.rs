//! Pop-out stimuli: a smooth contour of oriented segments hidden in random
//! clutter, all with the same descriptor value.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math::{self, PI};
use crate::segment::{EdgeSegment, SegmentField};

/// The hidden contour, in pixel coordinates (rows grow downward).
#[derive(Debug, Clone, PartialEq)]
pub enum ContourPath {
    /// Catmull-Rom spline through at least two control points.
    Spline { points: Vec<(f64, f64)> },
    /// Circular arc from `start` sweeping `sweep` radians.
    Arc {
        center: (f64, f64),
        radius: f64,
        start: f64,
        sweep: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StimulusSpec {
    pub width: u32,
    pub height: u32,
    pub contour: ContourPath,
    /// Arc length between successive contour segments.
    pub contour_spacing: f64,
    /// Number of contour segments; `None` fills the whole path.
    pub contour_count: Option<usize>,
    pub clutter_count: usize,
    pub min_separation: f64,
    pub descriptor_value: f64,
    pub rng_seed: u64,
}

impl Default for StimulusSpec {
    fn default() -> Self {
        StimulusSpec {
            width: 256,
            height: 256,
            contour: ContourPath::Spline {
                points: vec![(50.0, 150.0), (100.0, 110.0), (160.0, 140.0), (210.0, 100.0)],
            },
            contour_spacing: 6.0,
            contour_count: Some(30),
            clutter_count: 300,
            min_separation: 4.0,
            descriptor_value: 1.0,
            rng_seed: 0,
        }
    }
}

impl StimulusSpec {
    /// The default stimulus with the contour rotated and shifted at random,
    /// so stimuli from different seeds do not share a layout.
    pub fn seeded(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0_47);
        let base = StimulusSpec::default();
        let (cx, cy) = (base.width as f64 / 2.0, base.height as f64 / 2.0);
        let angle = rng.gen_range(0.0..2.0 * PI);
        let (dx, dy) = (rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0));
        let (s, c) = (math::sin(angle), math::cos(angle));
        let ContourPath::Spline { points } = &base.contour else {
            unreachable!()
        };
        let points = points
            .iter()
            .map(|&(x, y)| {
                let (u, v) = (x - 130.0, y - 125.0);
                (cx + c * u - s * v + dx, cy + s * u + c * v + dy)
            })
            .collect();
        StimulusSpec {
            contour: ContourPath::Spline { points },
            rng_seed: seed,
            ..base
        }
    }

    fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidStimulus(String::from(m)));
        if self.width == 0 || self.height == 0 {
            return fail("image must be non-empty");
        }
        if !(self.contour_spacing.is_finite() && self.contour_spacing > 0.0) {
            return fail("contour spacing must be positive");
        }
        if !(self.min_separation.is_finite() && self.min_separation >= 0.0) {
            return fail("minimum separation must be non-negative");
        }
        if !(self.descriptor_value.is_finite() && (0.0..=1.0).contains(&self.descriptor_value)) {
            return fail("descriptor value must lie in [0, 1]");
        }
        match &self.contour {
            ContourPath::Spline { points } => {
                if points.len() < 2 {
                    return fail("a spline needs at least two control points");
                }
                if points.iter().any(|p| !(p.0.is_finite() && p.1.is_finite())) {
                    return fail("control points must be finite");
                }
            }
            ContourPath::Arc { center, radius, start, sweep } => {
                if ![center.0, center.1, *radius, *start, *sweep].iter().all(|v| v.is_finite())
                    || *radius <= 0.0
                {
                    return fail("arc needs finite values and a positive radius");
                }
            }
        }
        Ok(())
    }
}

/// Position and derivative along the path at parameter `t` in [0, 1].
fn path_eval(path: &ContourPath, t: f64) -> ((f64, f64), (f64, f64)) {
    match path {
        ContourPath::Arc { center, radius, start, sweep } => {
            let a = start + sweep * t;
            (
                (center.0 + radius * math::cos(a), center.1 + radius * math::sin(a)),
                (-radius * sweep * math::sin(a), radius * sweep * math::cos(a)),
            )
        }
        ContourPath::Spline { points } => {
            let spans = points.len() - 1;
            let u = t * spans as f64;
            let k = (math::floor(u) as usize).min(spans - 1);
            let s = u - k as f64;
            let at = |i: isize| points[i.clamp(0, spans as isize) as usize];
            let (p0, p1, p2, p3) = (at(k as isize - 1), at(k as isize), at(k as isize + 1), at(k as isize + 2));
            let coord = |a: f64, b: f64, c: f64, d: f64| {
                let c1 = -a + c;
                let c2 = 2.0 * a - 5.0 * b + 4.0 * c - d;
                let c3 = -a + 3.0 * b - 3.0 * c + d;
                (
                    0.5 * (2.0 * b + c1 * s + c2 * s * s + c3 * s * s * s),
                    0.5 * (c1 + 2.0 * c2 * s + 3.0 * c3 * s * s) * spans as f64,
                )
            };
            let (x, dx) = coord(p0.0, p1.0, p2.0, p3.0);
            let (y, dy) = coord(p0.1, p1.1, p2.1, p3.1);
            ((x, y), (dx, dy))
        }
    }
}

const PATH_SAMPLES: usize = 4096;

/// Points at the given arc lengths with their tangent orientation.
fn place_along(path: &ContourPath, arcs: &[f64]) -> Vec<(f64, f64, f64)> {
    let mut cumulative = Vec::with_capacity(PATH_SAMPLES + 1);
    cumulative.push(0.0);
    let mut prev = path_eval(path, 0.0).0;
    for k in 1..=PATH_SAMPLES {
        let p = path_eval(path, k as f64 / PATH_SAMPLES as f64).0;
        cumulative.push(cumulative[k - 1] + math::hypot(p.0 - prev.0, p.1 - prev.1));
        prev = p;
    }
    arcs.iter()
        .map(|&s| {
            let k = cumulative.partition_point(|&c| c < s).clamp(1, PATH_SAMPLES);
            let span = cumulative[k] - cumulative[k - 1];
            let frac = if span > 0.0 { (s - cumulative[k - 1]) / span } else { 0.0 };
            let t = ((k - 1) as f64 + frac.clamp(0.0, 1.0)) / PATH_SAMPLES as f64;
            let ((x, y), (dx, dy)) = path_eval(path, t);
            (x, y, math::atan2(dy, dx))
        })
        .collect()
}

fn path_length(path: &ContourPath) -> f64 {
    let mut len = 0.0;
    let mut prev = path_eval(path, 0.0).0;
    for k in 1..=PATH_SAMPLES {
        let p = path_eval(path, k as f64 / PATH_SAMPLES as f64).0;
        len += math::hypot(p.0 - prev.0, p.1 - prev.1);
        prev = p;
    }
    len
}

/// A generated stimulus. Contour segments come first, then clutter.
#[derive(Debug, Clone, PartialEq)]
pub struct Stimulus {
    pub field: SegmentField,
    pub truth: Vec<bool>,
    /// Analytic tangent orientation of each contour segment, in [0, pi).
    pub tangents: Vec<f64>,
}

fn too_close(segs: &[EdgeSegment], x: u32, y: u32, min_sep: f64) -> bool {
    segs.iter().any(|s| {
        let d = math::hypot(s.x as f64 - x as f64, s.y as f64 - y as f64);
        d < min_sep || (s.x == x && s.y == y)
    })
}

pub fn generate(spec: &StimulusSpec) -> Result<Stimulus> {
    spec.validate()?;
    let length = path_length(&spec.contour);
    let count = match spec.contour_count {
        Some(k) => {
            if k > 1 && (k - 1) as f64 * spec.contour_spacing > length + 1e-9 {
                return Err(Error::InvalidStimulus(alloc::format!(
                    "{k} segments at spacing {} need {} px but the path is {length:.1} px",
                    spec.contour_spacing,
                    (k - 1) as f64 * spec.contour_spacing
                )));
            }
            k
        }
        None => math::floor(length / spec.contour_spacing) as usize + 1,
    };
    let used = count.saturating_sub(1) as f64 * spec.contour_spacing;
    let offset = (length - used) / 2.0;
    let arcs: Vec<f64> = (0..count).map(|k| offset + k as f64 * spec.contour_spacing).collect();

    let f = spec.descriptor_value;
    let mut segs: Vec<EdgeSegment> = Vec::with_capacity(count + spec.clutter_count);
    let mut tangents = Vec::with_capacity(count);
    for (x, y, angle) in place_along(&spec.contour, &arcs) {
        let (rx, ry) = (math::round(x), math::round(y));
        if rx < 0.0 || ry < 0.0 || rx >= spec.width as f64 || ry >= spec.height as f64 {
            return Err(Error::InvalidStimulus(String::from("contour leaves the image")));
        }
        let (px, py) = (rx as u32, ry as u32);
        if too_close(&segs, px, py, spec.min_separation) {
            return Err(Error::InvalidStimulus(String::from(
                "contour segments closer than the minimum separation",
            )));
        }
        let seg = EdgeSegment::new(px, py, f, angle);
        tangents.push(seg.o);
        segs.push(seg);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut placed = 0;
    let mut attempts = 0;
    while placed < spec.clutter_count {
        if attempts >= 10 * spec.clutter_count {
            return Err(Error::PlacementFailed {
                placed,
                requested: spec.clutter_count,
            });
        }
        attempts += 1;
        let x = rng.gen_range(0..spec.width);
        let y = rng.gen_range(0..spec.height);
        let o = rng.gen_range(0.0..PI);
        if too_close(&segs, x, y, spec.min_separation) {
            continue;
        }
        segs.push(EdgeSegment::new(x, y, f, o));
        placed += 1;
    }

    let mut truth = vec![false; segs.len()];
    truth[..count].iter_mut().for_each(|t| *t = true);
    let field = SegmentField::new(spec.width, spec.height, segs)?;
    Ok(Stimulus { field, truth, tangents })
}

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

pub const BAR_LENGTH: i32 = 5;
pub const ON_INK: u8 = 0;
pub const OFF_INK: u8 = 160;

/// Draws every segment as a 5 px bar on white: label-1 segments black,
/// label-0 segments gray. Without labels every bar is black.
pub fn render_preview(field: &SegmentField, labels: Option<&[bool]>) -> Result<GrayImage> {
    if let Some(l) = labels {
        if l.len() != field.len() {
            return Err(Error::LabelLength {
                expected: field.len(),
                got: l.len(),
            });
        }
    }
    let (w, h) = (field.width(), field.height());
    let mut pixels = vec![255u8; w as usize * h as usize];
    // Gray first so black bars stay on top where they overlap.
    for pass_on in [false, true] {
        for (id, s) in field.segments().iter().enumerate() {
            let on = labels.map_or(true, |l| l[id]);
            if on != pass_on {
                continue;
            }
            let ink = if on { ON_INK } else { OFF_INK };
            let (c, sn) = (math::cos(s.o), math::sin(s.o));
            for t in -(BAR_LENGTH / 2)..=BAR_LENGTH / 2 {
                let x = s.x as f64 + math::round(t as f64 * c);
                let y = s.y as f64 + math::round(t as f64 * sn);
                if x >= 0.0 && y >= 0.0 && x < w as f64 && y < h as f64 {
                    let k = y as usize * w as usize + x as usize;
                    pixels[k] = pixels[k].min(ink);
                }
            }
        }
    }
    Ok(GrayImage { width: w, height: h, pixels })
}
