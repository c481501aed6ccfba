//! Grayscale raster IO: a small PGM codec (P2/P5, 8 or 16 bit) and PNG
//! through the `image` crate. Format is chosen by file extension.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use contour_crf::{BinaryMap, GrayGrid, SoftEdgeMap};
use image::{ImageBuffer, Luma};

/// Raw samples with their maximum value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: u32,
    pub height: u32,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

impl Raster {
    pub fn to_unit(&self) -> Vec<f64> {
        let m = self.maxval as f64;
        self.samples.iter().map(|&s| s as f64 / m).collect()
    }
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.data.get(self.pos) {
            if b == b'#' {
                while self.data.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self) -> Result<u32> {
        self.skip_space();
        let start = self.pos;
        while self.data.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.data[start..self.pos])?;
        text.parse()
            .map_err(|_| anyhow!("expected a number at byte {start}"))
    }
}

pub fn decode_pgm(data: &[u8]) -> Result<Raster> {
    let binary = match data.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => bail!("not a PGM file (expected P2 or P5)"),
    };
    let mut c = Cursor { data, pos: 2 };
    let width = c.number()?;
    let height = c.number()?;
    let maxval = c.number()?;
    if width == 0 || height == 0 {
        bail!("PGM has zero size");
    }
    if maxval == 0 || maxval > 65535 {
        bail!("PGM maxval {maxval} out of range");
    }
    let count = width as usize * height as usize;
    let mut samples = Vec::with_capacity(count);
    if binary {
        // Exactly one whitespace byte separates the header from the raster.
        c.pos += 1;
        let wide = maxval > 255;
        let need = count * if wide { 2 } else { 1 };
        let raster = data
            .get(c.pos..c.pos + need)
            .ok_or_else(|| anyhow!("PGM raster truncated"))?;
        if wide {
            samples.extend(raster.chunks_exact(2).map(|p| u16::from_be_bytes([p[0], p[1]])));
        } else {
            samples.extend(raster.iter().map(|&b| b as u16));
        }
    } else {
        for _ in 0..count {
            samples.push(c.number()? as u16);
        }
    }
    if let Some(&s) = samples.iter().find(|&&s| s as u32 > maxval) {
        bail!("PGM sample {s} exceeds maxval {maxval}");
    }
    Ok(Raster {
        width,
        height,
        maxval: maxval as u16,
        samples,
    })
}

/// Binary (P5) encoding; 16-bit samples when `maxval > 255`.
pub fn encode_pgm(r: &Raster) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", r.width, r.height, r.maxval).into_bytes();
    if r.maxval > 255 {
        for s in &r.samples {
            out.extend_from_slice(&s.to_be_bytes());
        }
    } else {
        out.extend(r.samples.iter().map(|&s| s as u8));
    }
    out
}

fn is_png(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

pub fn read_raster(path: &Path) -> Result<Raster> {
    let data = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    if is_png(path) {
        let img = image::load_from_memory_with_format(&data, image::ImageFormat::Png)
            .with_context(|| format!("cannot decode {}", path.display()))?;
        let luma = img.to_luma16();
        let wide = matches!(img.color(), image::ColorType::L16 | image::ColorType::La16 | image::ColorType::Rgb16 | image::ColorType::Rgba16);
        let (maxval, samples) = if wide {
            (65535, luma.as_raw().clone())
        } else {
            (255, luma.as_raw().iter().map(|&s| s / 257).collect())
        };
        Ok(Raster {
            width: luma.width(),
            height: luma.height(),
            maxval,
            samples,
        })
    } else {
        decode_pgm(&data).with_context(|| format!("cannot decode {}", path.display()))
    }
}

pub fn encode_raster(r: &Raster, png: bool) -> Result<Vec<u8>> {
    if !png {
        return Ok(encode_pgm(r));
    }
    let mut out = std::io::Cursor::new(Vec::new());
    if r.maxval > 255 {
        let scaled: Vec<u16> = r
            .samples
            .iter()
            .map(|&s| ((s as u32 * 65535 + r.maxval as u32 / 2) / r.maxval as u32) as u16)
            .collect();
        let buf: ImageBuffer<Luma<u16>, _> = ImageBuffer::from_raw(r.width, r.height, scaled)
            .ok_or_else(|| anyhow!("raster size mismatch"))?;
        buf.write_to(&mut out, image::ImageFormat::Png)?;
    } else {
        let scaled: Vec<u8> = r
            .samples
            .iter()
            .map(|&s| ((s as u32 * 255 + r.maxval as u32 / 2) / r.maxval as u32) as u8)
            .collect();
        let buf: ImageBuffer<Luma<u8>, _> = ImageBuffer::from_raw(r.width, r.height, scaled)
            .ok_or_else(|| anyhow!("raster size mismatch"))?;
        buf.write_to(&mut out, image::ImageFormat::Png)?;
    }
    Ok(out.into_inner())
}

/// Encodes by the extension of `name` (`.png`, anything else PGM).
pub fn encode_for(name: &str, r: &Raster) -> Result<Vec<u8>> {
    encode_raster(r, is_png(Path::new(name)))
}

pub fn read_gray(path: &Path) -> Result<GrayGrid> {
    let r = read_raster(path)?;
    Ok(GrayGrid::new(r.width, r.height, r.to_unit())?)
}

pub fn read_soft_map(path: &Path) -> Result<SoftEdgeMap> {
    let r = read_raster(path)?;
    Ok(SoftEdgeMap::new(r.width, r.height, r.to_unit())?)
}

/// Any nonzero sample is a boundary pixel.
pub fn read_binary(path: &Path) -> Result<BinaryMap> {
    let r = read_raster(path)?;
    Ok(BinaryMap::from_bits(
        r.width,
        r.height,
        r.samples.iter().map(|&s| s > 0).collect(),
    )?)
}

/// Boundary pixels as 255 on 0.
pub fn binary_raster(map: &BinaryMap) -> Raster {
    Raster {
        width: map.width(),
        height: map.height(),
        maxval: 255,
        samples: map.bits().iter().map(|&b| if b { 255 } else { 0 }).collect(),
    }
}

/// 16-bit quantization of a soft map.
pub fn soft_raster(map: &SoftEdgeMap) -> Raster {
    Raster {
        width: map.width(),
        height: map.height(),
        maxval: 65535,
        samples: map
            .values()
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16)
            .collect(),
    }
}

pub fn gray8_raster(width: u32, height: u32, pixels: &[u8]) -> Raster {
    Raster {
        width,
        height,
        maxval: 255,
        samples: pixels.iter().map(|&p| p as u16).collect(),
    }
}
