//! Training: direct maximization of mean F over a parameter box.

use alloc::string::String;
use alloc::vec::Vec;

use crate::association::FieldParams;
use crate::energy::ModelParams;
use crate::error::{Error, Result};
use crate::evaluation::{self, default_thresholds, ods_sweep, EvalImage, Tolerance};
use crate::search::{global_search, Dimension, TraceEntry};
use crate::segment::SegmentField;

/// Search coordinates, in box order.
pub const PARAM_NAMES: [&str; 13] = [
    "a1", "a2", "sigma", "alpha", "lambda", "omega0", "omega1", "omega2", "beta", "sigma1",
    "sigma2", "n", "th0",
];

/// Per-parameter search bounds. `n` lives on the odd lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBox {
    dims: [Dimension; 13],
}

impl Default for ParamBox {
    fn default() -> Self {
        let c = Dimension::continuous;
        ParamBox {
            dims: [
                c(0.0, 5.0),
                c(0.0, 5.0),
                c(0.5, 10.0),
                c(0.0, 1.0),
                c(-20.0, 20.0),
                c(-10.0, 10.0),
                c(0.0, 10.0),
                c(0.0, 10.0),
                c(0.0, 5.0),
                c(0.5, 10.0),
                c(0.05, 2.0),
                Dimension::lattice(3.0, 11.0, 2.0),
                c(0.05, 0.6),
            ],
        }
    }
}

fn index_of(name: &str) -> Result<usize> {
    PARAM_NAMES
        .iter()
        .position(|&p| p == name)
        .ok_or_else(|| Error::InvalidParams(alloc::format!("unknown parameter `{name}`")))
}

impl ParamBox {
    pub fn dims(&self) -> &[Dimension] {
        &self.dims
    }

    pub fn bounds(&self, name: &str) -> Result<(f64, f64)> {
        let d = &self.dims[index_of(name)?];
        Ok((d.lower, d.upper))
    }

    /// Replaces the bounds of one parameter (keeps `n` on the odd lattice).
    pub fn set(&mut self, name: &str, lower: f64, upper: f64) -> Result<()> {
        let k = index_of(name)?;
        self.dims[k] = if name == "n" {
            Dimension::lattice(lower, upper, 2.0)
        } else {
            Dimension::continuous(lower, upper)
        };
        self.validate()
    }

    /// Excludes a parameter from the search.
    pub fn pin(&mut self, name: &str, value: f64) -> Result<()> {
        self.set(name, value, value)
    }

    pub fn validate(&self) -> Result<()> {
        for (k, d) in self.dims.iter().enumerate() {
            if !(d.lower.is_finite() && d.upper.is_finite() && d.lower <= d.upper) {
                return Err(Error::EmptyBox(k));
            }
        }
        let bad = |name: &str, why: &str| Err(Error::InvalidParams(alloc::format!("{name} bounds {why}")));
        let b = |k: usize| (self.dims[k].lower, self.dims[k].upper);
        if b(2).0 <= 0.0 || b(9).0 <= 0.0 || b(10).0 <= 0.0 {
            return bad("sigma", "must be positive");
        }
        if b(3).0 < 0.0 || b(3).1 > 1.0 {
            return bad("alpha", "must lie in [0, 1]");
        }
        if b(0).0 < 0.0 || b(1).0 < 0.0 || b(6).0 < 0.0 || b(7).0 < 0.0 || b(8).0 < 0.0 {
            return bad("a1, a2, omega1, omega2 and beta", "must be non-negative");
        }
        let (nl, nu) = b(11);
        if nl < 3.0 || nl.fract() != 0.0 || nl as u64 % 2 == 0 || nu.fract() != 0.0 {
            return bad("n", "must be odd integers >= 3");
        }
        if b(12).0 < 0.0 || b(12).1 > 1.0 {
            return bad("th0", "must lie in [0, 1]");
        }
        Ok(())
    }

    /// Maps a box point (13 coordinates) to model parameters.
    pub fn decode(&self, point: &[f64]) -> Result<ModelParams> {
        if point.len() != 13 {
            return Err(Error::InvalidParams(alloc::format!(
                "expected 13 coordinates, got {}",
                point.len()
            )));
        }
        let x: Vec<f64> = point.iter().zip(&self.dims).map(|(&v, d)| d.coerce(v)).collect();
        let params = ModelParams {
            field: FieldParams {
                a1: x[0],
                a2: x[1],
                sigma: x[2],
            },
            alpha: x[3],
            lambda: x[4],
            omega0: x[5],
            omega1: x[6],
            omega2: x[7],
            beta: x[8],
            sigma1: x[9],
            sigma2: x[10],
            n: x[11] as usize,
            th0: x[12],
        };
        params.validate()?;
        Ok(params)
    }

    pub fn encode(params: &ModelParams) -> [f64; 13] {
        [
            params.field.a1,
            params.field.a2,
            params.field.sigma,
            params.alpha,
            params.lambda,
            params.omega0,
            params.omega1,
            params.omega2,
            params.beta,
            params.sigma1,
            params.sigma2,
            params.n as f64,
            params.th0,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub best_params: ModelParams,
    pub best_f: f64,
    pub evaluations: usize,
    /// Every evaluated box point in order.
    pub trace: Vec<TraceEntry>,
    /// Objective re-evaluated at `best_params` after the search.
    pub audit_f: f64,
}

impl TrainReport {
    /// Whether the re-evaluated objective reproduces `best_f`.
    pub fn audit_ok(&self) -> bool {
        (self.audit_f - self.best_f).abs() <= 1e-12
    }
}

/// Runs the search with an arbitrary objective over decoded parameters.
///
/// `seeds` are evaluated first, so the result is never worse than any seed.
pub fn train_with_evaluator<F>(
    mut evaluate: F,
    param_box: &ParamBox,
    seeds: &[ModelParams],
    budget: usize,
) -> Result<TrainReport>
where
    F: FnMut(&ModelParams) -> Result<f64>,
{
    param_box.validate()?;
    let seed_points: Vec<Vec<f64>> = seeds.iter().map(|p| ParamBox::encode(p).to_vec()).collect();
    let result = global_search(
        |x| evaluate(&param_box.decode(x)?),
        param_box.dims(),
        &seed_points,
        budget,
    )?;
    let best_params = param_box.decode(&result.best_point)?;
    let audit_f = evaluate(&best_params)?;
    Ok(TrainReport {
        best_params,
        best_f: result.best_value,
        evaluations: result.evaluations,
        trace: result.trace,
        audit_f,
    })
}

/// The seed whose pipeline output is plain thresholding at the training
/// set's ODS threshold (clamped into the box).
pub fn thresholding_seed(dataset: &[EvalImage], param_box: &ParamBox, tolerance: Tolerance) -> Result<ModelParams> {
    let sweep = ods_sweep(dataset, &default_thresholds(), tolerance)?;
    let (lo, hi) = param_box.bounds("th0")?;
    let mut point = ParamBox::encode(&ModelParams::thresholding_equivalent(sweep.best_threshold.clamp(lo, hi)));
    // Pins on the other coordinates win; the remaining values stay inert
    // only if alpha = 1 and beta = 0 are inside the box.
    for (v, d) in point.iter_mut().zip(param_box.dims()) {
        *v = d.coerce(*v);
    }
    param_box.decode(&point)
}

/// Trains on pixel maps, maximizing mean pipeline F.
pub fn train(dataset: &[EvalImage], param_box: &ParamBox, budget: usize, tolerance: Tolerance) -> Result<TrainReport> {
    let seed = thresholding_seed(dataset, param_box, tolerance)?;
    train_with_evaluator(
        |p| evaluation::pipeline_f(dataset, p, tolerance),
        param_box,
        &[seed],
        budget,
    )
}

/// A segment field with per-segment truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledField {
    pub field: SegmentField,
    pub truth: Vec<bool>,
}

impl LabeledField {
    pub fn new(field: SegmentField, truth: Vec<bool>) -> Result<Self> {
        if truth.len() != field.len() {
            return Err(Error::LabelLength {
                expected: field.len(),
                got: truth.len(),
            });
        }
        Ok(LabeledField { field, truth })
    }
}

/// Mean segment-level F of MAP labels against truth.
pub fn segment_f(dataset: &[LabeledField], params: &ModelParams) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut reports = Vec::with_capacity(dataset.len());
    for item in dataset {
        let labels = if item.field.is_empty() {
            Vec::new()
        } else {
            evaluation::label_field(&item.field, params)?.labels
        };
        reports.push(evaluation::segment_report(&labels, &item.truth)?);
    }
    Ok(evaluation::mean_f(&reports))
}

/// Trains directly on segment fields (no pixel extraction, `th0` unused).
/// Seeded with the keep-everything point.
pub fn train_segments(dataset: &[LabeledField], param_box: &ParamBox, budget: usize) -> Result<TrainReport> {
    let mut point = ParamBox::encode(&ModelParams::thresholding_equivalent(0.0));
    for (v, d) in point.iter_mut().zip(param_box.dims()) {
        *v = d.coerce(*v);
    }
    let seed = param_box.decode(&point)?;
    train_with_evaluator(|p| segment_f(dataset, p), param_box, &[seed], budget)
}

/// Human-readable parameter listing, one `name=value` per coordinate.
pub fn describe(params: &ModelParams) -> String {
    let values = ParamBox::encode(params);
    let mut out = String::new();
    for (k, name) in PARAM_NAMES.iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        out.push_str(&alloc::format!("{name}={}", values[k]));
    }
    out
}
