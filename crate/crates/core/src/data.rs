//! Seeded synthetic instances, MNIST IDX ingestion, and CSV/PGM output.
//!
//! Every random draw goes through `ChaCha20Rng::seed_from_u64`, with normals
//! from `rand_distr::StandardNormal`. Both are portable and fully specified, so
//! a seed reproduces the same vector bit for bit on any platform.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Bernoulli, StandardNormal};

use crate::error::{Error, Result};
use crate::lifting::{l2_norm, Kernel, Signal};
use crate::metrics::TrialRecord;

pub type Rng64 = ChaCha20Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha20Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernoulliGaussianSpec {
    pub len: usize,
    pub theta: f64,
    pub seed: u64,
}

/// `x[n] = b[n] g[n]` with `b ~ Bernoulli(theta)` and `g ~ N(0, 1)`. Both
/// draws are taken for every index so the support pattern and magnitudes of
/// a given seed do not depend on each other.
pub fn gen_bernoulli_gaussian(spec: &BernoulliGaussianSpec) -> Result<Signal> {
    if spec.len == 0 {
        return Err(Error::InvalidInput("signal length must be >= 1".into()));
    }
    let bern = Bernoulli::new(spec.theta).map_err(|_| {
        Error::InvalidInput(format!("theta must lie in [0, 1], got {}", spec.theta))
    })?;
    let mut rng = rng(spec.seed);
    let values = (0..spec.len)
        .map(|_| {
            let active = rng.sample(bern);
            let g: f64 = rng.sample(StandardNormal);
            if active {
                g
            } else {
                0.0
            }
        })
        .collect();
    Ok(Signal::from_raw(values))
}

/// `len` standard normals normalised to unit l2 norm.
pub fn gen_gaussian_kernel(len: usize, seed: u64) -> Result<Kernel> {
    if len == 0 {
        return Err(Error::InvalidInput("kernel length must be >= 1".into()));
    }
    let mut seed = seed;
    loop {
        let mut rng = rng(seed);
        let values: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        let norm = l2_norm(&values);
        if norm > 0.0 {
            return Ok(Kernel::from_raw(
                values.into_iter().map(|v| v / norm).collect(),
            ));
        }
        seed = seed.wrapping_add(1);
    }
}

/// A set of equally sized grayscale images with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet {
    pub rows: usize,
    pub cols: usize,
    /// Row-major pixels, one `Vec` per image.
    pub images: Vec<Vec<f64>>,
    pub labels: Option<Vec<u8>>,
}

impl ImageSet {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Index of the first image carrying `label`.
    pub fn first_with_label(&self, label: u8) -> Option<usize> {
        self.labels.as_ref()?.iter().position(|&l| l == label)
    }
}

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    let word = bytes.get(offset..offset + 4).ok_or(Error::Length {
        offset,
        expected: 4,
        found: bytes.len().saturating_sub(offset),
    })?;
    Ok(u32::from_be_bytes(word.try_into().expect("four bytes")))
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<()> {
    let magic = be_u32(bytes, 0)?;
    if magic != expected {
        return Err(Error::Format {
            offset: 0,
            message: format!("magic number {magic:#010x}, expected {expected:#010x}"),
        });
    }
    Ok(())
}

/// Parses an IDX3 unsigned-byte image file held in memory.
pub fn parse_idx_images(bytes: &[u8]) -> Result<ImageSet> {
    check_magic(bytes, IDX_IMAGES_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let pixels = rows * cols;
    let payload = &bytes[16..];
    let expected = count * pixels;
    if payload.len() < expected {
        return Err(Error::Length {
            offset: 16,
            expected,
            found: payload.len(),
        });
    }
    let images = payload[..expected]
        .chunks_exact(pixels.max(1))
        .take(count)
        .map(|img| img.iter().map(|&b| f64::from(b) / 255.0).collect())
        .collect();
    Ok(ImageSet {
        rows,
        cols,
        images,
        labels: None,
    })
}

/// Parses an IDX1 unsigned-byte label file held in memory.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, IDX_LABELS_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    let payload = &bytes[8..];
    if payload.len() < count {
        return Err(Error::Length {
            offset: 8,
            expected: count,
            found: payload.len(),
        });
    }
    Ok(payload[..count].to_vec())
}

pub fn read_idx_images(path: impl AsRef<Path>) -> Result<ImageSet> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_idx_images(&bytes)
}

pub fn read_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_idx_labels(&bytes)
}

/// Serialises a float with 17 significant digits, which round-trips every
/// finite `f64` exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub const RESULTS_HEADER: [&str; 9] = [
    "method",
    "N",
    "M",
    "theta",
    "seed",
    "e_rec",
    "success",
    "iterations",
    "wall_seconds",
];

/// Renders records as CSV in insertion order.
pub fn results_csv_bytes(records: &[TrialRecord]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RESULTS_HEADER).expect("in-memory write");
    for r in records {
        w.write_record([
            r.method.clone(),
            r.n.to_string(),
            r.m.to_string(),
            fmt_f64(r.theta),
            r.seed.to_string(),
            fmt_f64(r.e_rec),
            r.success.to_string(),
            r.iterations.to_string(),
            fmt_f64(r.wall_seconds),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn write_results_csv(records: &[TrialRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, results_csv_bytes(records)).map_err(|e| Error::io(path, e))
}

pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<TrialRecord>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut out = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let bad = |name: &str| {
            Error::InvalidInput(format!(
                "{}: row {}: cannot parse `{name}`",
                path.display(),
                line + 2
            ))
        };
        out.push(TrialRecord {
            method: field(0).to_string(),
            n: field(1).parse().map_err(|_| bad("N"))?,
            m: field(2).parse().map_err(|_| bad("M"))?,
            theta: field(3).parse().map_err(|_| bad("theta"))?,
            seed: field(4).parse().map_err(|_| bad("seed"))?,
            e_rec: field(5).parse().map_err(|_| bad("e_rec"))?,
            success: field(6).parse().map_err(|_| bad("success"))?,
            iterations: field(7).parse().map_err(|_| bad("iterations"))?,
            wall_seconds: field(8).parse().map_err(|_| bad("wall_seconds"))?,
        });
    }
    Ok(out)
}

/// Binary PGM (P5, maxval 255). Intensities are clamped to `[0, 1]` and
/// rounded half-up.
pub fn pgm_bytes(pixels: &[f64], rows: usize, cols: usize) -> Result<Vec<u8>> {
    if pixels.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "{rows}x{cols} image needs {} pixels, got {}",
            rows * cols,
            pixels.len()
        )));
    }
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    out.extend(
        pixels
            .iter()
            .map(|&p| (p.clamp(0.0, 1.0) * 255.0 + 0.5).floor().min(255.0) as u8),
    );
    Ok(out)
}

pub fn write_image_pgm(
    pixels: &[f64],
    rows: usize,
    cols: usize,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let bytes = pgm_bytes(pixels, rows, cols)?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

/// Reads a binary P5 file with maxval 255 back to `[0, 1]` intensities.
pub fn parse_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format {
                offset: pos,
                message: "incomplete PGM header".into(),
            });
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P5" || fields[3] != "255" {
        return Err(Error::Format {
            offset: 0,
            message: "only P5 with maxval 255 is supported".into(),
        });
    }
    let parse = |s: &str| {
        s.parse::<usize>().map_err(|_| Error::Format {
            offset: 0,
            message: format!("bad PGM dimension `{s}`"),
        })
    };
    let (cols, rows) = (parse(&fields[1])?, parse(&fields[2])?);
    let data = &bytes[(pos + 1).min(bytes.len())..];
    if data.len() < rows * cols {
        return Err(Error::Length {
            offset: pos + 1,
            expected: rows * cols,
            found: data.len(),
        });
    }
    Ok((
        rows,
        cols,
        data[..rows * cols]
            .iter()
            .map(|&b| f64::from(b) / 255.0)
            .collect(),
    ))
}

/// A 28x28 synthetic digit-like glyph (a thick ring with a stroke), used
/// where MNIST itself is unavailable.
pub fn synthetic_glyph() -> Vec<f64> {
    let (rows, cols) = (28usize, 28usize);
    let mut img = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let dy = r as f64 - 13.5;
            let dx = (c as f64 - 13.5) * 1.3;
            let radius = (dx * dx + dy * dy).sqrt();
            let ring = (1.0 - (radius - 8.0).abs() / 2.5).clamp(0.0, 1.0);
            let stroke = if (5..23).contains(&r) && (c as i64 - (r as i64 / 2 + 8)).abs() <= 1 {
                0.8
            } else {
                0.0
            };
            img[r * cols + c] = f64::max(ring, stroke);
        }
    }
    img
}
