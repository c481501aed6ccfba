//! Command implementations. Every command writes into an output directory,
//! finishes with `run.json`, and removes what it wrote if anything fails.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use contour_crf::evaluation::{self, default_thresholds, label_field, mean_f, run_pipeline, EvalReport, Sweep};
use contour_crf::extraction::{gradient_magnitude, threshold_map};
use contour_crf::synth::{generate, render_preview};
use contour_crf::training::{thresholding_seed, train_with_evaluator, PARAM_NAMES};
use contour_crf::{EvalImage, ModelParams, Tolerance};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::formats::{self, ParamsJson};
use crate::imageio;

/// Files written so far, deleted again on failure.
pub struct Output {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn open(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            created_dir,
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        self.written.push(path.clone());
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, &formats::to_json_bytes(value)?)
    }

    fn discard(self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

/// Runs `body` against a fresh output, cleaning up on error.
pub fn with_output<F>(dir: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut Output) -> Result<()>,
{
    let mut out = Output::open(dir)?;
    match body(&mut out) {
        Ok(()) => Ok(()),
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

pub fn run_record(command: &str, inputs: Value, resolved: Value, seed: Option<u64>) -> Value {
    json!({
        "command": command,
        "inputs": inputs,
        "resolved_params": resolved,
        "seed": seed,
        "versions": {
            "contour-crf": contour_crf::VERSION,
            "contour-crf-cli": env!("CARGO_PKG_VERSION"),
        },
    })
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn params_value(p: &ModelParams) -> Value {
    serde_json::to_value(ParamsJson::from(*p)).expect("plain struct")
}

pub fn tolerance(radius: Option<f64>) -> Result<Tolerance> {
    match radius {
        None => Ok(Tolerance::Auto),
        Some(r) if r.is_finite() && r >= 0.0 => Ok(Tolerance::Pixels(r)),
        Some(r) => bail!("radius must be a non-negative number, got {r}"),
    }
}

fn tolerance_value(t: Tolerance) -> Value {
    match t {
        Tolerance::Auto => json!("auto"),
        Tolerance::Pixels(r) => json!(r),
    }
}

pub fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            bail!("--jobs must be at least 1");
        }
        b = b.num_threads(j);
    }
    Ok(b.build()?)
}

/// Per-image reports in dataset order, computed in parallel.
fn reports<F>(pool: &rayon::ThreadPool, data: &[EvalImage], score: F) -> Result<Vec<EvalReport>>
where
    F: Fn(&EvalImage) -> contour_crf::Result<EvalReport> + Sync,
{
    pool.install(|| data.par_iter().map(&score).collect::<contour_crf::Result<Vec<_>>>())
        .map_err(Into::into)
}

fn ods_parallel(pool: &rayon::ThreadPool, data: &[EvalImage], tol: Tolerance) -> Result<Sweep> {
    // Same arithmetic as the sequential sweep: per-threshold mean in dataset order.
    let thresholds = default_thresholds();
    let mut best: Option<(f64, f64)> = None;
    let mut curve = Vec::with_capacity(thresholds.len());
    for &th in &thresholds {
        let f = mean_f(&reports(pool, data, |img| img.threshold_report(th, tol))?);
        curve.push((th, f));
        if best.map_or(true, |(_, bf)| f > bf) {
            best = Some((th, f));
        }
    }
    let (best_threshold, best_f) = best.expect("non-empty grid");
    Ok(Sweep {
        best_threshold,
        best_f,
        curve,
    })
}

#[derive(Serialize)]
struct ImageScore {
    tp: usize,
    fp: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    precision: f64,
    recall: f64,
    f: f64,
    radius: f64,
}

impl From<&EvalReport> for ImageScore {
    fn from(r: &EvalReport) -> Self {
        ImageScore {
            tp: r.true_positives,
            fp: r.false_positives,
            fn_: r.false_negatives,
            precision: r.precision,
            recall: r.recall,
            f: r.f_measure,
            radius: r.tolerance_radius,
        }
    }
}

// ---------------------------------------------------------------- infer

pub struct InferArgs {
    pub soft: PathBuf,
    pub params: Option<PathBuf>,
    pub out: PathBuf,
    pub png: bool,
}

pub fn infer(a: &InferArgs) -> Result<String> {
    let params = formats::load_params(a.params.as_deref())?;
    let soft = imageio::read_soft_map(&a.soft)?;
    let result = run_pipeline(&soft, &params)?;
    let name = if a.png { "contour.png" } else { "contour.pgm" };
    let (energy, floor, flow, on) = match &result.labeling {
        Some(l) => {
            let inst = contour_crf::CrfInstance::build(&result.field, &params)?;
            (l.energy, inst.unary_floor(), l.flow_value, l.count_on())
        }
        None => (0.0, 0.0, 0.0, 0),
    };
    let mut summary = format!(
        "{} segments, {} labelled contour, energy {}",
        result.field.len(),
        on,
        energy
    );
    if result.field.is_empty() {
        summary.push_str(" (warning: no pixel above th0, output is empty)");
    }
    with_output(&a.out, |out| {
        out.write(name, &imageio::encode_for(name, &imageio::binary_raster(&result.contour))?)?;
        out.write_json(
            "energy.json",
            &json!({
                "segments": result.field.len(),
                "energy": energy,
                "label_one": on,
                "unary_floor": floor,
                "flow_value": flow,
            }),
        )?;
        out.write_json(
            "run.json",
            &run_record(
                "infer",
                json!({ "soft": path_str(&a.soft), "params": a.params.as_deref().map(path_str) }),
                params_value(&params),
                None,
            ),
        )
    })?;
    Ok(summary)
}

// ---------------------------------------------------------------- threshold

pub struct ThresholdArgs {
    pub soft: PathBuf,
    pub th: f64,
    pub out: PathBuf,
    pub png: bool,
}

pub fn threshold(a: &ThresholdArgs) -> Result<String> {
    if !(0.0..=1.0).contains(&a.th) {
        bail!("threshold must lie in [0, 1], got {}", a.th);
    }
    let soft = imageio::read_soft_map(&a.soft)?;
    let map = threshold_map(&soft, a.th);
    let name = if a.png { "threshold.png" } else { "threshold.pgm" };
    with_output(&a.out, |out| {
        out.write(name, &imageio::encode_for(name, &imageio::binary_raster(&map))?)?;
        out.write_json(
            "run.json",
            &run_record("threshold", json!({ "soft": path_str(&a.soft) }), json!({ "th": a.th }), None),
        )
    })?;
    Ok(format!("{} of {} pixels above {}", map.count_ones(), map.bits().len(), a.th))
}

// ---------------------------------------------------------------- eval

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EvalMode {
    Ods,
    Ois,
    Fixed,
}

pub struct EvalArgs {
    pub manifest: PathBuf,
    pub mode: EvalMode,
    /// Fixed threshold (fixed mode without params).
    pub th: Option<f64>,
    /// Pipeline parameters (fixed mode).
    pub params: Option<PathBuf>,
    pub radius: Option<f64>,
    pub jobs: Option<usize>,
    pub out: PathBuf,
}

pub fn eval(a: &EvalArgs) -> Result<String> {
    let entries = formats::read_manifest(&a.manifest)?;
    let data = formats::load_dataset(&entries)?;
    let tol = tolerance(a.radius)?;
    let pool = thread_pool(a.jobs)?;
    let (per_image, thresholds, resolved): (Vec<EvalReport>, Vec<Option<f64>>, Value) = match a.mode {
        EvalMode::Ods => {
            let sweep = ods_parallel(&pool, &data, tol)?;
            let th = sweep.best_threshold;
            let r = reports(&pool, &data, |img| img.threshold_report(th, tol))?;
            (r, vec![Some(th); data.len()], json!({ "threshold": th }))
        }
        EvalMode::Ois => {
            let grid = default_thresholds();
            let sweeps: Vec<Sweep> = pool
                .install(|| data.par_iter().map(|img| evaluation::ois_per_image(img, &grid, tol)).collect::<contour_crf::Result<_>>())?;
            let mut r = Vec::with_capacity(data.len());
            for (img, s) in data.iter().zip(&sweeps) {
                r.push(img.threshold_report(s.best_threshold, tol)?);
            }
            (r, sweeps.iter().map(|s| Some(s.best_threshold)).collect(), json!({ "grid": "k/34, k=1..33" }))
        }
        EvalMode::Fixed => match (&a.params, a.th) {
            (Some(_), Some(_)) => bail!("fixed mode takes either --th or --params, not both"),
            (Some(p), None) => {
                let params = formats::load_params(Some(p))?;
                let r = reports(&pool, &data, |img| img.pipeline_report(&params, tol))?;
                (r, vec![None; data.len()], params_value(&params))
            }
            (None, th) => {
                let th = th.unwrap_or(0.5);
                let r = reports(&pool, &data, |img| img.threshold_report(th, tol))?;
                (r, vec![Some(th); data.len()], json!({ "threshold": th }))
            }
        },
    };
    let mean = mean_f(&per_image);
    let mode = format!("{:?}", a.mode).to_lowercase();
    let mut table = format!("{:<40} {:>6} {:>6} {:>6} {:>9} {:>9} {:>9}\n", "image", "tp", "fp", "fn", "precision", "recall", "f");
    for (e, r) in entries.iter().zip(&per_image) {
        table.push_str(&format!(
            "{:<40} {:>6} {:>6} {:>6} {:>9.4} {:>9.4} {:>9.4}\n",
            e.soft.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            r.true_positives,
            r.false_positives,
            r.false_negatives,
            r.precision,
            r.recall,
            r.f_measure
        ));
    }
    table.push_str(&format!("mean F ({mode}): {mean:.4}\n"));
    with_output(&a.out, |out| {
        out.write_json(
            "report.json",
            &json!({
                "mode": mode,
                "mean_f": mean,
                "settings": resolved,
                "images": per_image.iter().map(ImageScore::from).collect::<Vec<_>>(),
                "sources": entries.iter().map(|e| path_str(&e.soft)).collect::<Vec<_>>(),
                "thresholds": thresholds,
            }),
        )?;
        out.write("report.txt", table.as_bytes())?;
        out.write_json(
            "run.json",
            &run_record(
                "eval",
                json!({
                    "manifest": path_str(&a.manifest),
                    "mode": mode,
                    "radius": tolerance_value(tol),
                    "params": a.params.as_deref().map(path_str),
                }),
                resolved.clone(),
                None,
            ),
        )
    })?;
    Ok(table)
}

// ---------------------------------------------------------------- train

pub struct TrainArgs {
    pub manifest: PathBuf,
    pub config: Option<PathBuf>,
    pub budget: Option<usize>,
    pub radius: Option<f64>,
    pub jobs: Option<usize>,
    pub out: PathBuf,
}

pub const DEFAULT_TRAIN_BUDGET: usize = 300;

pub fn train(a: &TrainArgs) -> Result<String> {
    let cfg = formats::load_train_config(a.config.as_deref())?;
    let param_box = formats::parse_box(&cfg.bounds)?;
    let budget = a.budget.or(cfg.budget).unwrap_or(DEFAULT_TRAIN_BUDGET);
    let tol = tolerance(a.radius.or(cfg.radius))?;
    let entries = formats::read_manifest(&a.manifest)?;
    let data = formats::load_dataset(&entries)?;
    let pool = thread_pool(a.jobs)?;

    let seed = thresholding_seed(&data, &param_box, tol)?;
    let objective = |p: &ModelParams| -> contour_crf::Result<f64> {
        let r = pool.install(|| data.par_iter().map(|img| img.pipeline_report(p, tol)).collect::<contour_crf::Result<Vec<_>>>())?;
        Ok(mean_f(&r))
    };
    let seed_f = objective(&seed)?;
    let report = train_with_evaluator(objective, &param_box, &[seed], budget)?;
    if !report.audit_ok() {
        bail!(
            "training audit failed: best {} but re-evaluation gives {}",
            report.best_f,
            report.audit_f
        );
    }

    let mut trace = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["eval_index".to_string(), "f_value".to_string()];
    header.extend(PARAM_NAMES.iter().map(|s| s.to_string()));
    trace.write_record(&header)?;
    for (k, t) in report.trace.iter().enumerate() {
        let mut row = vec![k.to_string(), t.value.to_string()];
        row.extend(t.point.iter().map(|v| v.to_string()));
        trace.write_record(&row)?;
    }
    let trace = trace.into_inner()?;

    with_output(&a.out, |out| {
        out.write_json("params.json", &ParamsJson::from(report.best_params))?;
        out.write_json(
            "train_report.json",
            &json!({
                "best_f": report.best_f,
                "audit_f": report.audit_f,
                "evaluations": report.evaluations,
                "budget": budget,
                "seed_f": seed_f,
                "seed_params": params_value(&seed),
                "best_params": params_value(&report.best_params),
            }),
        )?;
        out.write("trace.csv", &trace)?;
        out.write_json(
            "run.json",
            &run_record(
                "train",
                json!({
                    "manifest": path_str(&a.manifest),
                    "config": a.config.as_deref().map(path_str),
                    "budget": budget,
                    "radius": tolerance_value(tol),
                    "box": formats::box_to_json(&param_box),
                }),
                params_value(&report.best_params),
                None,
            ),
        )
    })?;
    Ok(format!(
        "best mean F {:.4} after {} evaluations (thresholding seed {:.4})",
        report.best_f, report.evaluations, seed_f
    ))
}

// ---------------------------------------------------------------- synth

pub struct SynthArgs {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub params: Option<PathBuf>,
    pub out: PathBuf,
}

pub fn synth(a: &SynthArgs) -> Result<String> {
    let mut spec_json = formats::load_stimulus(a.config.as_deref())?;
    if let Some(s) = a.seed {
        spec_json.rng_seed = s;
    }
    let spec = spec_json.to_spec();
    let stim = generate(&spec)?;
    let preview = render_preview(&stim.field, Some(&stim.truth))?;
    let inference = match &a.params {
        Some(p) => {
            let params = formats::load_params(Some(p))?;
            let labels = if stim.field.is_empty() { Vec::new() } else { label_field(&stim.field, &params)?.labels };
            Some((params, labels))
        }
        None => None,
    };
    let contour = stim.truth.iter().filter(|&&t| t).count();
    let mut summary = format!("{} segments ({} contour)", stim.field.len(), contour);

    with_output(&a.out, |out| {
        out.write("segments.csv", &formats::segments_csv(&stim.field, &stim.truth)?)?;
        out.write("preview.png", &imageio::encode_raster(&imageio::gray8_raster(preview.width, preview.height, &preview.pixels), true)?)?;
        let mut resolved = json!({ "stimulus": spec_json });
        if let Some((params, labels)) = &inference {
            let kept = labels.iter().zip(&stim.truth).filter(|(l, t)| **l && **t).count();
            let removed = labels.iter().zip(&stim.truth).filter(|(l, t)| !**l && !**t).count();
            let clutter = stim.field.len() - contour;
            let rate = |a: usize, b: usize| if b == 0 { 1.0 } else { a as f64 / b as f64 };
            summary.push_str(&format!(
                "; retained {kept}/{contour} contour, removed {removed}/{clutter} clutter"
            ));
            out.write("inferred.csv", &formats::segments_csv(&stim.field, labels)?)?;
            let img = render_preview(&stim.field, Some(labels))?;
            out.write("inferred.png", &imageio::encode_raster(&imageio::gray8_raster(img.width, img.height, &img.pixels), true)?)?;
            out.write_json(
                "inference.json",
                &json!({
                    "segments": stim.field.len(),
                    "label_one": labels.iter().filter(|&&l| l).count(),
                    "contour_retained": rate(kept, contour),
                    "clutter_removed": rate(removed, clutter),
                }),
            )?;
            resolved["params"] = params_value(params);
        }
        out.write_json(
            "run.json",
            &run_record(
                "synth",
                json!({
                    "config": a.config.as_deref().map(path_str),
                    "params": a.params.as_deref().map(path_str),
                }),
                resolved,
                Some(spec_json.rng_seed),
            ),
        )
    })?;
    Ok(summary)
}

// ---------------------------------------------------------------- gm

pub struct GmArgs {
    pub image: PathBuf,
    pub out: PathBuf,
    pub png: bool,
}

pub fn gm(a: &GmArgs) -> Result<String> {
    let img = imageio::read_gray(&a.image)?;
    let soft = gradient_magnitude(&img)?;
    let name = if a.png { "soft.png" } else { "soft.pgm" };
    with_output(&a.out, |out| {
        out.write(name, &imageio::encode_for(name, &imageio::soft_raster(&soft))?)?;
        out.write_json(
            "run.json",
            &run_record("gm", json!({ "image": path_str(&a.image) }), json!({ "quantization": 65535 }), None),
        )
    })?;
    Ok(format!("{}x{} gradient magnitude written", soft.width(), soft.height()))
}
