//! Procedural test data shared by the integration tests.

#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use contour_crf::extraction::gradient_magnitude;
use contour_crf::{BinaryMap, EvalImage, GrayGrid};
use contour_crf_cli::imageio::{binary_raster, encode_pgm, soft_raster, Raster};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_contour-crf")
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

enum Shape {
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64, rot: f64 },
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
    Triangle([(f64, f64); 3]),
}

impl Shape {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Ellipse { cx, cy, rx, ry, rot } => {
                let (s, c) = rot.sin_cos();
                let (u, v) = ((x - cx) * c + (y - cy) * s, -(x - cx) * s + (y - cy) * c);
                (u / rx).powi(2) + (v / ry).powi(2) <= 1.0
            }
            Shape::Rect { x0, y0, x1, y1 } => x >= x0 && x <= x1 && y >= y0 && y <= y1,
            Shape::Triangle(p) => {
                let side = |a: (f64, f64), b: (f64, f64)| (b.0 - a.0) * (y - a.1) - (b.1 - a.1) * (x - a.0);
                let d = [side(p[0], p[1]), side(p[1], p[2]), side(p[2], p[0])];
                d.iter().all(|&v| v >= 0.0) || d.iter().all(|&v| v <= 0.0)
            }
        }
    }
}

/// A piecewise-constant scene of overlapping shapes with noise and
/// texture, plus its one-pixel region boundaries.
pub fn scene(seed: u64, w: u32, h: u32) -> (GrayGrid, BinaryMap) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (wf, hf) = (w as f64, h as f64);
    let count = rng.gen_range(2..=4);
    let mut shapes = Vec::new();
    for _ in 0..count {
        let kind = rng.gen_range(0..3);
        shapes.push(match kind {
            0 => Shape::Ellipse {
                cx: rng.gen_range(0.25 * wf..0.75 * wf),
                cy: rng.gen_range(0.25 * hf..0.75 * hf),
                rx: rng.gen_range(0.1 * wf..0.3 * wf),
                ry: rng.gen_range(0.1 * hf..0.3 * hf),
                rot: rng.gen_range(0.0..3.14),
            },
            1 => {
                let (x0, y0) = (rng.gen_range(0.05 * wf..0.6 * wf), rng.gen_range(0.05 * hf..0.6 * hf));
                Shape::Rect {
                    x0,
                    y0,
                    x1: x0 + rng.gen_range(0.15 * wf..0.35 * wf),
                    y1: y0 + rng.gen_range(0.15 * hf..0.35 * hf),
                }
            }
            _ => Shape::Triangle(
                [0; 3].map(|_| (rng.gen_range(0.05 * wf..0.95 * wf), rng.gen_range(0.05 * hf..0.95 * hf))),
            ),
        });
    }
    let mut levels = vec![rng.gen_range(0.15..0.85)];
    for _ in 0..count {
        // Keep every region visibly different from the background.
        let mut v: f64 = rng.gen_range(0.1..0.9);
        while (v - levels[0]).abs() < 0.15 {
            v = rng.gen_range(0.1..0.9);
        }
        levels.push(v);
    }
    let label = |x: u32, y: u32| -> usize {
        let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
        shapes.iter().rposition(|s| s.contains(px, py)).map_or(0, |k| k + 1)
    };
    let labels: Vec<usize> = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).map(|(x, y)| label(x, y)).collect();
    // Texture is smooth value noise on a 3 px lattice: short blobs with no
    // preferred orientation, unlike the long region boundaries.
    let noise = rng.gen_range(0.02..0.05);
    let (gw, gh) = (w as usize / 3 + 2, h as usize / 3 + 2);
    let lattice: Vec<f64> = (0..gw * gh).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let amplitude: Vec<f64> = (0..=count).map(|_| rng.gen_range(0.0..0.12)).collect();
    let blob = |x: u32, y: u32| -> f64 {
        let (fx, fy) = (x as f64 / 3.0, y as f64 / 3.0);
        let (ix, iy) = (fx as usize, fy as usize);
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let at = |i: usize, j: usize| lattice[j * gw + i];
        let top = at(ix, iy) * (1.0 - tx) + at(ix + 1, iy) * tx;
        let bottom = at(ix, iy + 1) * (1.0 - tx) + at(ix + 1, iy + 1) * tx;
        top * (1.0 - ty) + bottom * ty
    };
    let mut values = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let k = labels[(y * w + x) as usize];
            let v: f64 = levels[k] + amplitude[k] * blob(x, y) + rng.gen_range(-noise..noise);
            values.push(v.clamp(0.0, 1.0));
        }
    }
    let mut truth = BinaryMap::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let k = labels[(y * w + x) as usize];
            let right = x + 1 < w && labels[(y * w + x + 1) as usize] != k;
            let down = y + 1 < h && labels[((y + 1) * w + x) as usize] != k;
            truth.set(x, y, right || down);
        }
    }
    (GrayGrid::new(w, h, values).unwrap(), truth)
}

pub fn gm_image(seed: u64, w: u32, h: u32) -> EvalImage {
    let (gray, truth) = scene(seed, w, h);
    EvalImage::new(gradient_magnitude(&gray).unwrap(), truth).unwrap()
}

/// Writes soft maps and truths as PGM plus a manifest; returns its path.
pub fn write_dataset(dir: &Path, seeds: &[u64], w: u32, h: u32) -> PathBuf {
    fs::create_dir_all(dir).unwrap();
    let mut manifest = String::new();
    for &s in seeds {
        let img = gm_image(s, w, h);
        let soft = format!("soft_{s}.pgm");
        let truth = format!("truth_{s}.pgm");
        fs::write(dir.join(&soft), encode_pgm(&soft_raster(&img.soft))).unwrap();
        fs::write(dir.join(&truth), encode_pgm(&binary_raster(&img.truth))).unwrap();
        manifest.push_str(&format!("{soft}\t{truth}\n"));
    }
    let path = dir.join("manifest.tsv");
    fs::write(&path, manifest).unwrap();
    path
}

pub fn write_gray(path: &Path, gray: &GrayGrid) {
    let r = Raster {
        width: gray.width,
        height: gray.height,
        maxval: 255,
        samples: gray.values.iter().map(|&v| (v * 255.0).round() as u16).collect(),
    };
    fs::write(path, encode_pgm(&r)).unwrap();
}

/// Every regular file under `dir`, sorted, with contents.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}
