//! Boundary precision/recall with a spatial tolerance, threshold sweeps
//! (ODS/OIS) and the end-to-end pipeline score.

use alloc::vec::Vec;

use crate::energy::{CrfInstance, ModelParams};
use crate::error::{Error, Result};
use crate::extraction::{self, BinaryMap, SoftEdgeMap};
use crate::math;
use crate::mincut::{self, CutLabeling};
use crate::segment::SegmentField;

/// Matching tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    /// Fixed radius in pixels.
    Pixels(f64),
    /// `ceil(0.0075 * image diagonal)`.
    Auto,
}

impl Tolerance {
    pub fn radius_for(&self, width: u32, height: u32) -> f64 {
        match *self {
            Tolerance::Pixels(r) => r,
            Tolerance::Auto => math::ceil(0.0075 * math::hypot(width as f64, height as f64)),
        }
    }
}

/// Counts and scores from one comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub tolerance_radius: f64,
}

impl EvalReport {
    /// Scores from counts; every 0/0 ratio is taken as 0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, radius: f64) -> Self {
        let ratio = |a: usize, b: usize| if a + b == 0 { 0.0 } else { a as f64 / (a + b) as f64 };
        let precision = ratio(tp, fp);
        let recall = ratio(tp, fn_);
        let f_measure = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        EvalReport {
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            precision,
            recall,
            f_measure,
            tolerance_radius: radius,
        }
    }
}

/// One-to-one greedy correspondence between predicted and true boundary
/// pixels.
///
/// All (prediction, truth) pairs within `radius` are visited in order of
/// increasing distance, ties broken by prediction index then truth index
/// (row-major); a pair is matched when both ends are still free.
pub fn match_boundaries(pred: &BinaryMap, truth: &BinaryMap, radius: f64) -> Result<EvalReport> {
    pred.check_same_size(truth)?;
    if !(radius.is_finite() && radius >= 0.0) {
        return Err(Error::InvalidParams(alloc::format!("invalid radius {radius}")));
    }
    let (w, h) = (pred.width() as i64, pred.height() as i64);
    let reach = math::floor(radius) as i64;
    let r2 = radius * radius;

    let mut candidates: Vec<(i64, usize, usize)> = Vec::new();
    for (px, py) in pred.ones() {
        let p_idx = py as usize * w as usize + px as usize;
        for dy in -reach..=reach {
            let ty = py as i64 + dy;
            if ty < 0 || ty >= h {
                continue;
            }
            for dx in -reach..=reach {
                let tx = px as i64 + dx;
                let d2 = dx * dx + dy * dy;
                if tx < 0 || tx >= w || d2 as f64 > r2 {
                    continue;
                }
                if truth.get(tx as u32, ty as u32) {
                    candidates.push((d2, p_idx, ty as usize * w as usize + tx as usize));
                }
            }
        }
    }
    candidates.sort_unstable();

    let n = pred.bits().len();
    let mut pred_used = alloc::vec![false; n];
    let mut truth_used = alloc::vec![false; n];
    let mut tp = 0;
    for (_, p, t) in candidates {
        if !pred_used[p] && !truth_used[t] {
            pred_used[p] = true;
            truth_used[t] = true;
            tp += 1;
        }
    }
    let fp = pred.count_ones() - tp;
    let fn_ = truth.count_ones() - tp;
    Ok(EvalReport::from_counts(tp, fp, fn_, radius))
}

/// Segment-level scores when ground truth labels are known per segment.
pub fn segment_report(labels: &[bool], truth: &[bool]) -> Result<EvalReport> {
    if labels.len() != truth.len() {
        return Err(Error::LabelLength {
            expected: truth.len(),
            got: labels.len(),
        });
    }
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (&l, &t) in labels.iter().zip(truth) {
        match (l, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    Ok(EvalReport::from_counts(tp, fp, fn_, 0.0))
}

/// A soft map paired with its (already merged) ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalImage {
    pub soft: SoftEdgeMap,
    pub truth: BinaryMap,
}

impl EvalImage {
    pub fn new(soft: SoftEdgeMap, truth: BinaryMap) -> Result<Self> {
        if soft.width() != truth.width() || soft.height() != truth.height() {
            return Err(Error::DimensionMismatch(
                soft.width(),
                soft.height(),
                truth.width(),
                truth.height(),
            ));
        }
        Ok(EvalImage { soft, truth })
    }

    pub fn radius(&self, tolerance: Tolerance) -> f64 {
        tolerance.radius_for(self.soft.width(), self.soft.height())
    }

    /// Scores of plain thresholding at `th`.
    pub fn threshold_report(&self, th: f64, tolerance: Tolerance) -> Result<EvalReport> {
        let pred = extraction::threshold_map(&self.soft, th);
        match_boundaries(&pred, &self.truth, self.radius(tolerance))
    }

    /// Scores of the full pipeline under `params`.
    pub fn pipeline_report(&self, params: &ModelParams, tolerance: Tolerance) -> Result<EvalReport> {
        let out = run_pipeline(&self.soft, params)?;
        match_boundaries(&out.contour, &self.truth, self.radius(tolerance))
    }
}

/// `k / 34` for `k = 1..=33`: 33 evenly spaced thresholds inside `(0, 1)`.
pub fn default_thresholds() -> Vec<f64> {
    (1..=33).map(|k| k as f64 / 34.0).collect()
}

/// Outcome of a threshold sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub best_threshold: f64,
    pub best_f: f64,
    /// `(threshold, score)` in sweep order.
    pub curve: Vec<(f64, f64)>,
}

fn pick_best(curve: Vec<(f64, f64)>) -> Result<Sweep> {
    let mut best: Option<(f64, f64)> = None;
    for &(th, f) in &curve {
        best = match best {
            Some((bt, bf)) if f < bf || (f == bf && th >= bt) => Some((bt, bf)),
            _ => Some((th, f)),
        };
    }
    let (best_threshold, best_f) = best.ok_or(Error::EmptySweep)?;
    Ok(Sweep {
        best_threshold,
        best_f,
        curve,
    })
}

/// Mean of per-image F-measures.
pub fn mean_f(reports: &[EvalReport]) -> f64 {
    if reports.is_empty() {
        return 0.0;
    }
    reports.iter().map(|r| r.f_measure).sum::<f64>() / reports.len() as f64
}

/// Optimal dataset scale: the single threshold maximizing mean F; ties go to
/// the smallest threshold.
pub fn ods_sweep(dataset: &[EvalImage], thresholds: &[f64], tolerance: Tolerance) -> Result<Sweep> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if thresholds.is_empty() {
        return Err(Error::EmptySweep);
    }
    let mut curve = Vec::with_capacity(thresholds.len());
    for &th in thresholds {
        let mut reports = Vec::with_capacity(dataset.len());
        for img in dataset {
            reports.push(img.threshold_report(th, tolerance)?);
        }
        curve.push((th, mean_f(&reports)));
    }
    pick_best(curve)
}

/// Optimal image scale for one image.
pub fn ois_per_image(image: &EvalImage, thresholds: &[f64], tolerance: Tolerance) -> Result<Sweep> {
    let mut curve = Vec::with_capacity(thresholds.len());
    for &th in thresholds {
        curve.push((th, image.threshold_report(th, tolerance)?.f_measure));
    }
    pick_best(curve)
}

/// Everything one pipeline run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub field: SegmentField,
    /// `None` when no pixel exceeded `th0`.
    pub labeling: Option<CutLabeling>,
    pub contour: BinaryMap,
}

/// Threshold, orient, build the CRF, cut, render.
pub fn run_pipeline(soft: &SoftEdgeMap, params: &ModelParams) -> Result<PipelineOutput> {
    params.validate()?;
    let field = extraction::extract_segments(soft, params)?;
    if field.is_empty() {
        return Ok(PipelineOutput {
            contour: BinaryMap::new(soft.width(), soft.height()),
            field,
            labeling: None,
        });
    }
    let labeling = label_field(&field, params)?;
    let contour = extraction::labels_to_binary(&field, &labeling.labels)?;
    Ok(PipelineOutput {
        field,
        labeling: Some(labeling),
        contour,
    })
}

/// MAP labelling of a ready-made segment field.
pub fn label_field(field: &SegmentField, params: &ModelParams) -> Result<CutLabeling> {
    let instance = CrfInstance::build(field, params)?;
    mincut::map_inference(&instance)
}

/// Mean pipeline F over a dataset.
pub fn pipeline_f(dataset: &[EvalImage], params: &ModelParams, tolerance: Tolerance) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut reports = Vec::with_capacity(dataset.len());
    for img in dataset {
        reports.push(img.pipeline_report(params, tolerance)?);
    }
    Ok(mean_f(&reports))
}
