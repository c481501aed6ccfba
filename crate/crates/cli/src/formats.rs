//! JSON, CSV and manifest formats.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use contour_crf::synth::{ContourPath, StimulusSpec};
use contour_crf::training::PARAM_NAMES;
use contour_crf::{BinaryMap, EvalImage, FieldParams, ModelParams, ParamBox, SegmentField};
use serde::{Deserialize, Serialize};

use crate::imageio;

/// Model parameters as a flat JSON object. Missing keys take defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsJson {
    pub a1: f64,
    pub a2: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub omega0: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub beta: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub n: usize,
    pub th0: f64,
}

impl Default for ParamsJson {
    fn default() -> Self {
        ModelParams::default().into()
    }
}

impl From<ModelParams> for ParamsJson {
    fn from(p: ModelParams) -> Self {
        ParamsJson {
            a1: p.field.a1,
            a2: p.field.a2,
            sigma: p.field.sigma,
            alpha: p.alpha,
            lambda: p.lambda,
            omega0: p.omega0,
            omega1: p.omega1,
            omega2: p.omega2,
            beta: p.beta,
            sigma1: p.sigma1,
            sigma2: p.sigma2,
            n: p.n,
            th0: p.th0,
        }
    }
}

impl ParamsJson {
    pub fn to_params(self) -> Result<ModelParams> {
        let p = ModelParams {
            field: FieldParams {
                a1: self.a1,
                a2: self.a2,
                sigma: self.sigma,
            },
            alpha: self.alpha,
            lambda: self.lambda,
            omega0: self.omega0,
            omega1: self.omega1,
            omega2: self.omega2,
            beta: self.beta,
            sigma1: self.sigma1,
            sigma2: self.sigma2,
            n: self.n,
            th0: self.th0,
        };
        p.validate()?;
        Ok(p)
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

/// Reads params, or the defaults when no path is given.
pub fn load_params(path: Option<&Path>) -> Result<ModelParams> {
    match path {
        Some(p) => read_json::<ParamsJson>(p)?.to_params(),
        None => Ok(ModelParams::default()),
    }
}

/// One box entry: `[lower, upper]` or a number to pin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundJson {
    Pin(f64),
    Range([f64; 2]),
}

/// Box overrides keyed by parameter name; unlisted parameters keep the
/// default bounds.
pub fn parse_box(entries: &BTreeMap<String, BoundJson>) -> Result<ParamBox> {
    let mut b = ParamBox::default();
    for (name, bound) in entries {
        if !PARAM_NAMES.contains(&name.as_str()) {
            bail!("unknown box parameter `{name}`");
        }
        match *bound {
            BoundJson::Pin(v) => b.pin(name, v),
            BoundJson::Range([lo, hi]) => b.set(name, lo, hi),
        }
        .with_context(|| format!("invalid bounds for `{name}`"))?;
    }
    Ok(b)
}

pub fn box_to_json(b: &ParamBox) -> BTreeMap<String, BoundJson> {
    PARAM_NAMES
        .iter()
        .map(|&name| {
            let (lo, hi) = b.bounds(name).expect("known name");
            let v = if lo == hi { BoundJson::Pin(lo) } else { BoundJson::Range([lo, hi]) };
            (name.to_string(), v)
        })
        .collect()
}

/// Training configuration file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    #[serde(rename = "box")]
    pub bounds: BTreeMap<String, BoundJson>,
    pub budget: Option<usize>,
    pub radius: Option<f64>,
}

pub fn load_train_config(path: Option<&Path>) -> Result<TrainConfig> {
    path.map_or(Ok(TrainConfig::default()), read_json)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ContourJson {
    Spline(Vec<[f64; 2]>),
    Arc {
        center: [f64; 2],
        radius: f64,
        start: f64,
        sweep: f64,
    },
}

/// Stimulus description; missing keys take the default stimulus values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StimulusJson {
    pub width: u32,
    pub height: u32,
    pub contour: ContourJson,
    pub contour_spacing: f64,
    pub contour_count: Option<usize>,
    pub clutter_count: usize,
    pub min_separation: f64,
    pub descriptor_value: f64,
    pub rng_seed: u64,
}

impl Default for StimulusJson {
    fn default() -> Self {
        StimulusSpec::default().into()
    }
}

impl From<StimulusSpec> for StimulusJson {
    fn from(s: StimulusSpec) -> Self {
        let contour = match s.contour {
            ContourPath::Spline { points } => ContourJson::Spline(points.iter().map(|&(x, y)| [x, y]).collect()),
            ContourPath::Arc { center, radius, start, sweep } => ContourJson::Arc {
                center: [center.0, center.1],
                radius,
                start,
                sweep,
            },
        };
        StimulusJson {
            width: s.width,
            height: s.height,
            contour,
            contour_spacing: s.contour_spacing,
            contour_count: s.contour_count,
            clutter_count: s.clutter_count,
            min_separation: s.min_separation,
            descriptor_value: s.descriptor_value,
            rng_seed: s.rng_seed,
        }
    }
}

impl StimulusJson {
    pub fn to_spec(&self) -> StimulusSpec {
        let contour = match &self.contour {
            ContourJson::Spline(points) => ContourPath::Spline {
                points: points.iter().map(|p| (p[0], p[1])).collect(),
            },
            ContourJson::Arc { center, radius, start, sweep } => ContourPath::Arc {
                center: (center[0], center[1]),
                radius: *radius,
                start: *start,
                sweep: *sweep,
            },
        };
        StimulusSpec {
            width: self.width,
            height: self.height,
            contour,
            contour_spacing: self.contour_spacing,
            contour_count: self.contour_count,
            clutter_count: self.clutter_count,
            min_separation: self.min_separation,
            descriptor_value: self.descriptor_value,
            rng_seed: self.rng_seed,
        }
    }
}

pub fn load_stimulus(path: Option<&Path>) -> Result<StimulusJson> {
    path.map_or(Ok(StimulusJson::default()), read_json)
}

/// One manifest line: a soft map and one or more truth maps.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub soft: PathBuf,
    pub truths: Vec<PathBuf>,
}

/// `soft<TAB>truth[<TAB>truth...]` per line; blank lines and `#` comments
/// are skipped and relative paths resolve against the manifest directory.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestEntry>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 || fields.iter().any(|f| f.is_empty()) {
            bail!("manifest line {}: expected soft<TAB>truth", k + 1);
        }
        let resolve = |f: &str| base.join(f);
        out.push(ManifestEntry {
            soft: resolve(fields[0]),
            truths: fields[1..].iter().map(|f| resolve(f)).collect(),
        });
    }
    if out.is_empty() {
        bail!("manifest lists no images");
    }
    Ok(out)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_manifest(&text, base).with_context(|| format!("in {}", path.display()))
}

/// Loads every entry; multiple truth maps are OR'ed together.
pub fn load_dataset(entries: &[ManifestEntry]) -> Result<Vec<EvalImage>> {
    entries
        .iter()
        .map(|e| {
            let soft = imageio::read_soft_map(&e.soft)?;
            let mut truth: Option<BinaryMap> = None;
            for t in &e.truths {
                let map = imageio::read_binary(t)?;
                truth = Some(match truth {
                    Some(acc) => acc.union(&map).with_context(|| format!("{} differs in size", t.display()))?,
                    None => map,
                });
            }
            EvalImage::new(soft, truth.expect("at least one truth"))
                .with_context(|| format!("{} and its truth differ in size", e.soft.display()))
        })
        .collect()
}

/// `id,x,y,f,o,label` rows.
pub fn segments_csv(field: &SegmentField, labels: &[bool]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "x", "y", "f", "o", "label"])?;
    for (id, s) in field.segments().iter().enumerate() {
        w.write_record([
            id.to_string(),
            s.x.to_string(),
            s.y.to_string(),
            s.f.to_string(),
            s.o.to_string(),
            u8::from(labels[id]).to_string(),
        ])?;
    }
    Ok(w.into_inner()?)
}
