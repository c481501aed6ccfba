//! Edge segments and the square Markov-blanket neighbourhood.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{self, PI};

const EMPTY_CELL: u32 = u32::MAX;

/// One oriented, positioned, strength-weighted edge element.
///
/// Orientation is axial and always stored in `[0, π)`; angles are measured
/// from the +x (column) axis towards +y (row, pointing down the image).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSegment {
    pub x: u32,
    pub y: u32,
    /// Descriptor strength in `[0, 1]`.
    pub f: f64,
    /// Orientation in `[0, π)`.
    pub o: f64,
}

impl EdgeSegment {
    /// Builds a segment, folding `o` onto `[0, π)`.
    pub fn new(x: u32, y: u32, f: f64, o: f64) -> Self {
        EdgeSegment {
            x,
            y,
            f,
            o: math::fold_axial(o),
        }
    }

    /// Euclidean distance between the two segment positions.
    pub fn distance(&self, other: &EdgeSegment) -> f64 {
        let dx = other.x as f64 - self.x as f64;
        let dy = other.y as f64 - self.y as f64;
        math::hypot(dx, dy)
    }

    pub fn chebyshev(&self, other: &EdgeSegment) -> u32 {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }

    /// Equality that treats orientations `o` and `o + kπ` as the same.
    pub fn axial_eq(&self, other: &EdgeSegment) -> bool {
        let d = (self.o - other.o).abs();
        let d = d.min(PI - d);
        self.x == other.x && self.y == other.y && self.f == other.f && d < 1e-9
    }
}

/// The segments of one image together with a per-pixel index.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentField {
    width: u32,
    height: u32,
    segments: Vec<EdgeSegment>,
    cells: Vec<u32>,
}

impl SegmentField {
    /// Validates positions and descriptors and populates the pixel index.
    ///
    /// Segment ids are the input positions `0..M`. If any descriptor exceeds
    /// one, all descriptors are divided by the maximum.
    pub fn new(width: u32, height: u32, mut segments: Vec<EdgeSegment>) -> Result<Self> {
        let mut max_f: f64 = 0.0;
        for (id, s) in segments.iter().enumerate() {
            if !(s.f.is_finite() && s.f >= 0.0) {
                return Err(Error::InvalidDescriptor { id, value: s.f });
            }
            if !s.o.is_finite() {
                return Err(Error::InvalidParams(alloc::format!(
                    "segment {id} has non-finite orientation"
                )));
            }
            max_f = max_f.max(s.f);
        }
        if max_f > 1.0 {
            for s in segments.iter_mut() {
                s.f /= max_f;
            }
        }

        let mut cells = vec![EMPTY_CELL; width as usize * height as usize];
        for (id, s) in segments.iter_mut().enumerate() {
            if s.x >= width || s.y >= height {
                return Err(Error::OutOfBounds {
                    id,
                    x: s.x,
                    y: s.y,
                    width,
                    height,
                });
            }
            s.o = math::fold_axial(s.o);
            let cell = &mut cells[s.y as usize * width as usize + s.x as usize];
            if *cell != EMPTY_CELL {
                return Err(Error::DuplicatePosition {
                    first: *cell as usize,
                    second: id,
                    x: s.x,
                    y: s.y,
                });
            }
            *cell = id as u32;
        }

        Ok(SegmentField {
            width,
            height,
            segments,
            cells,
        })
    }

    pub fn empty(width: u32, height: u32) -> Self {
        SegmentField {
            width,
            height,
            segments: Vec::new(),
            cells: vec![EMPTY_CELL; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn segments(&self) -> &[EdgeSegment] {
        &self.segments
    }

    pub fn segment(&self, id: usize) -> Result<&EdgeSegment> {
        self.segments.get(id).ok_or(Error::UnknownSegment {
            id,
            len: self.segments.len(),
        })
    }

    /// Id of the segment occupying pixel `(x, y)`, if any.
    pub fn segment_at(&self, x: u32, y: u32) -> Option<usize> {
        if x >= self.width || y >= self.height {
            return None;
        }
        match self.cells[y as usize * self.width as usize + x as usize] {
            EMPTY_CELL => None,
            id => Some(id as usize),
        }
    }

    /// Segments `j != i` inside the `n x n` square centred on segment `i`.
    ///
    /// Members are reported in row-major scan order of the window.
    pub fn markov_blanket(&self, i: usize, n: usize) -> Result<Neighborhood> {
        check_window(n)?;
        let center = *self.segment(i)?;
        let mut members = Vec::new();
        self.for_each_in_window(&center, n, |j| {
            if j != i {
                members.push(j);
            }
        });
        Ok(Neighborhood { center: i, members })
    }

    /// Visits every segment id whose pixel lies in the `n x n` window around
    /// `center` (the centre included), row-major.
    pub(crate) fn for_each_in_window(
        &self,
        center: &EdgeSegment,
        n: usize,
        mut visit: impl FnMut(usize),
    ) {
        let r = (n / 2) as u32;
        let x0 = center.x.saturating_sub(r);
        let y0 = center.y.saturating_sub(r);
        let x1 = center.x.saturating_add(r).min(self.width - 1);
        let y1 = center.y.saturating_add(r).min(self.height - 1);
        for y in y0..=y1 {
            let row = y as usize * self.width as usize;
            for x in x0..=x1 {
                let id = self.cells[row + x as usize];
                if id != EMPTY_CELL {
                    visit(id as usize);
                }
            }
        }
    }
}

pub(crate) fn check_window(n: usize) -> Result<()> {
    if n == 0 || n % 2 == 0 {
        Err(Error::InvalidWindow(n))
    } else {
        Ok(())
    }
}

/// A segment's Markov blanket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub center: usize,
    pub members: Vec<usize>,
}
