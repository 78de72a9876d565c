//! Color-image associative recovery: PPM I/O, block encoding, seeded corruption, PSNR.
//!
//! A pixel `(r, g, b)` is the pure quaternion `(r i + g j + b k)/255`. Blocks are visited
//! row-major over the image and pixels row-major within a block, so neuron `p` of block `k`
//! is pixel `(p / bs, p % bs)` of the `k`-th block.

use crate::controllers::{Controller, Thm2Gains};
use crate::engine::{DriveMode, Integrator, RunConfig};
use crate::error::{Error, Result};
use crate::model::NetworkSpec;
use crate::presets::associative_memory_input;
use crate::quat::{QVector, Quaternion};
use crate::scalar::Scalar;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

/// 8-bit RGB raster, row-major, three bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != 3 * width * height {
            return Err(Error::Image(format!("expected {} bytes, found {}", 3 * width * height, data.len())));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        Self { width, height, data: rgb.iter().copied().cycle().take(3 * width * height).collect() }
    }

    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let i = 3 * (row * self.width + col);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, row: usize, col: usize, rgb: [u8; 3]) {
        let i = 3 * (row * self.width + col);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Deterministic test card: smooth gradients, a few saturated patches and a checkered corner.
    pub fn synthetic(width: usize, height: usize) -> Self {
        let mut img = Self::filled(width, height, [0, 0, 0]);
        for r in 0..height {
            for c in 0..width {
                let u = c as f64 / width.max(1) as f64;
                let v = r as f64 / height.max(1) as f64;
                let mut px = [
                    (255.0 * u) as u8,
                    (255.0 * (0.5 + 0.5 * (6.0 * v + 3.0 * u).sin())) as u8,
                    (255.0 * (1.0 - v) * (1.0 - 0.5 * u)) as u8,
                ];
                if (r / 8 + c / 8) % 2 == 0 && r < height / 4 && c < width / 4 {
                    px = [255, 255, 255];
                }
                if r >= height / 2 && r < 3 * height / 4 && c >= width / 2 && c < 3 * width / 4 {
                    px = [250, 20, 200];
                }
                img.set_pixel(r, c, px);
            }
        }
        img
    }

    pub fn read_ppm<R: Read>(reader: R) -> Result<Self> {
        let mut rd = BufReader::new(reader);
        let mut fields = Vec::with_capacity(4);
        let mut line = String::new();
        while fields.len() < 4 {
            line.clear();
            if rd.read_line(&mut line)? == 0 {
                return Err(Error::Image("truncated PPM header".into()));
            }
            let content = line.split('#').next().unwrap_or("");
            fields.extend(content.split_whitespace().map(str::to_owned));
        }
        if fields.len() != 4 || fields[0] != "P6" {
            return Err(Error::Image("only binary P6 headers on their own lines are supported".into()));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| Error::Image(format!("bad header field {s:?}")));
        let (width, height, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
        if maxval != 255 {
            return Err(Error::Image(format!("maxval {maxval} unsupported")));
        }
        let mut data = vec![0u8; 3 * width * height];
        rd.read_exact(&mut data).map_err(|_| Error::Image("truncated PPM raster".into()))?;
        Self::new(width, height, data)
    }

    pub fn write_ppm<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.data)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_ppm(std::fs::File::open(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_ppm(&mut f)?;
        Ok(f.flush()?)
    }

    /// Number of `bs × bs` blocks, after checking that both sides divide.
    pub fn block_count(&self, bs: usize) -> Result<usize> {
        if bs == 0 || self.width % bs != 0 || self.height % bs != 0 {
            return Err(Error::Image(format!("{}x{} is not divisible into {bs}x{bs} blocks", self.width, self.height)));
        }
        Ok((self.width / bs) * (self.height / bs))
    }

    fn block_origin(&self, k: usize, bs: usize) -> (usize, usize) {
        let per_row = self.width / bs;
        ((k / per_row) * bs, (k % per_row) * bs)
    }
}

/// Pure quaternion of a pixel.
pub fn encode_pixel<T: Scalar>(rgb: [u8; 3]) -> Quaternion<T> {
    let c = |b: u8| T::lit(b as f64 / 255.0);
    Quaternion::new(T::zero(), c(rgb[0]), c(rgb[1]), c(rgb[2]))
}

/// `round(255·v)` of the imaginary channels, clamped to `[0, 255]`.
pub fn decode_pixel<T: Scalar>(q: Quaternion<T>) -> [u8; 3] {
    let c = |v: T| (255.0 * v.to_f64_lossy()).round().clamp(0.0, 255.0) as u8;
    [c(q.x), c(q.y), c(q.z)]
}

/// Block `k` (row-major) as `bs²` neurons.
pub fn encode_block<T: Scalar>(img: &Image, k: usize, bs: usize) -> Result<QVector<T>> {
    let count = img.block_count(bs)?;
    if k >= count {
        return Err(Error::Image(format!("block {k} out of {count}")));
    }
    let (r0, c0) = img.block_origin(k, bs);
    Ok((0..bs * bs).map(|p| encode_pixel(img.pixel(r0 + p / bs, c0 + p % bs))).collect())
}

/// Writes a decoded block back into `img`.
pub fn decode_block<T: Scalar>(v: &QVector<T>, img: &mut Image, k: usize, bs: usize) -> Result<()> {
    let count = img.block_count(bs)?;
    if k >= count || v.len() != bs * bs {
        return Err(Error::Image(format!("block {k} with {} neurons does not fit", v.len())));
    }
    let (r0, c0) = img.block_origin(k, bs);
    for (p, q) in v.iter().enumerate() {
        img.set_pixel(r0 + p / bs, c0 + p % bs, decode_pixel(*q));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Corruption {
    /// Zero `⌈r·n⌉` distinct neurons.
    Missing(f64),
    /// Force each channel of `⌈d·n⌉` distinct neurons to 0 or 1.
    SaltPepper(f64),
}

impl Corruption {
    pub fn level(self) -> f64 {
        match self {
            Corruption::Missing(r) | Corruption::SaltPepper(r) => r,
        }
    }
}

/// Stream seed of block `k`; blocks draw independently so recovery order cannot matter.
pub fn block_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn corrupt<T: Scalar>(v: &QVector<T>, mode: Corruption, seed: u64) -> Result<QVector<T>> {
    let level = mode.level();
    if !(0.0..=1.0).contains(&level) {
        return Err(Error::config(format!("corruption level {level} outside [0, 1]")));
    }
    let n = v.len();
    let count = ((level * n as f64).ceil() as usize).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = v.clone();
    for p in sample(&mut rng, n, count).into_vec() {
        out[p] = match mode {
            Corruption::Missing(_) => Quaternion::zero(),
            Corruption::SaltPepper(_) => {
                let mut bit = || if rng.gen::<bool>() { T::one() } else { T::zero() };
                Quaternion::new(out[p].w, bit(), bit(), bit())
            }
        };
    }
    Ok(out)
}

/// Peak signal-to-noise ratio in dB; `+∞` for identical images.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::Image("PSNR of differently sized images".into()));
    }
    let mse = a.data.iter().zip(&b.data).map(|(x, y)| (*x as f64 - *y as f64).powi(2)).sum::<f64>() / a.data.len() as f64;
    Ok(if mse == 0.0 { f64::INFINITY } else { 10.0 * (255.0 * 255.0 / mse).log10() })
}

/// Largest per-channel difference.
pub fn max_level_error(a: &Image, b: &Image) -> u8 {
    a.data.iter().zip(&b.data).map(|(x, y)| x.abs_diff(*y)).max().unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageTask {
    pub image: Image,
    pub block_size: usize,
    pub corruption: Corruption,
    pub seed: u64,
    pub t_snapshots: Vec<f64>,
}

impl ImageTask {
    pub fn validate(&self) -> Result<()> {
        self.image.block_count(self.block_size)?;
        let level = self.corruption.level();
        if !(0.0..=1.0).contains(&level) {
            return Err(Error::config(format!("corruption level {level} outside [0, 1]")));
        }
        if self.t_snapshots.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(Error::config("snapshot times must be finite and non-negative"));
        }
        if self.t_snapshots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("snapshot times must increase"));
        }
        Ok(())
    }

    /// The corrupted image the responses start from.
    pub fn corrupted(&self) -> Result<Image> {
        self.validate()?;
        let bs = self.block_size;
        let mut img = self.image.clone();
        for k in 0..img.block_count(bs)? {
            let v = corrupt(&encode_block::<f64>(&self.image, k, bs)?, self.corruption, block_seed(self.seed, k))?;
            decode_block(&v, &mut img, k, bs)?;
        }
        Ok(img)
    }
}

/// Integration settings of a recovery run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryOptions {
    pub h: f64,
    pub sync_tol: f64,
    /// Blocks on the rayon pool when set, one after another otherwise.
    pub parallel: bool,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self { h: 5e-4, sync_tol: 1e-3, parallel: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    pub corrupted: Image,
    pub snapshots: Vec<(f64, Image)>,
    pub psnr: Vec<f64>,
}

/// Recovers every block with the drive pinned at the clean pattern and the response started
/// from the corrupted one, decoding the response at each snapshot time.
///
/// `spec` is the memory network template; its input is replaced per block so the clean
/// pattern is an equilibrium.
pub fn recover_image<T: Scalar>(task: &ImageTask, spec: &NetworkSpec<T>, gains: &Thm2Gains<T>, opts: RecoveryOptions) -> Result<Recovery> {
    task.validate()?;
    let bs = task.block_size;
    if spec.n != bs * bs {
        return Err(Error::config(format!("network has {} neurons, blocks need {}", spec.n, bs * bs)));
    }
    let blocks = task.image.block_count(bs)?;
    let t_end = task.t_snapshots.last().copied().unwrap_or(0.0);
    let h = T::lit(opts.h);
    let snap_steps: Vec<usize> = task.t_snapshots.iter().map(|t| (t / opts.h).round() as usize).collect();

    let run_block = |k: usize| -> Result<Vec<QVector<T>>> {
        let clean = encode_block::<T>(&task.image, k, bs)?;
        let noisy = corrupt(&clean, task.corruption, block_seed(task.seed, k))?;
        let mut block_spec = spec.clone();
        block_spec.input = associative_memory_input(&block_spec, &clean);
        let mut cfg = RunConfig::new(block_spec, Controller::Thm2(gains.clone()), clean, noisy.clone(), T::lit(t_end.max(opts.h)));
        cfg.h = h;
        cfg.sync_tol = T::lit(opts.sync_tol);
        cfg.drive_mode = DriveMode::Pinned;
        cfg.seed = task.seed;
        let mut it = Integrator::new(cfg)?;
        let mut out = Vec::with_capacity(snap_steps.len());
        for &target in &snap_steps {
            while it.step_index() < target {
                it.advance()?;
            }
            out.push(it.response());
        }
        Ok(out)
    };

    let per_block: Vec<Vec<QVector<T>>> = if opts.parallel {
        (0..blocks).into_par_iter().map(run_block).collect::<Result<_>>()?
    } else {
        (0..blocks).map(run_block).collect::<Result<_>>()?
    };

    let corrupted = task.corrupted()?;
    let mut snapshots = Vec::with_capacity(snap_steps.len());
    let mut series = Vec::with_capacity(snap_steps.len());
    for (s, &t) in task.t_snapshots.iter().enumerate() {
        let mut img = task.image.clone();
        for (k, states) in per_block.iter().enumerate() {
            decode_block(&states[s], &mut img, k, bs)?;
        }
        series.push(psnr(&task.image, &img)?);
        snapshots.push((t, img));
    }
    Ok(Recovery { corrupted, snapshots, psnr: series })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn black_block_encodes_to_zero() {
        let img = Image::filled(32, 32, [0, 0, 0]);
        let v = encode_block::<f64>(&img, 3, 16).unwrap();
        assert!(v.iter().all(|q| *q == Quaternion::zero()));
    }

    #[test]
    fn block_layout_is_row_major() {
        let mut img = Image::filled(32, 32, [0, 0, 0]);
        img.set_pixel(16, 1, [255, 0, 0]);
        let v = encode_block::<f64>(&img, 2, 16).unwrap();
        assert_eq!(v[1], Quaternion::new(0.0, 1.0, 0.0, 0.0));
    }

    #[test]
    fn ppm_round_trip_is_byte_exact() {
        let img = Image::synthetic(32, 16);
        let mut buf = Vec::new();
        img.write_ppm(&mut buf).unwrap();
        assert!(buf.starts_with(b"P6\n32 16\n255\n"));
        assert_eq!(Image::read_ppm(&buf[..]).unwrap(), img);
    }

    #[test]
    fn ppm_header_comments_are_skipped() {
        let mut buf = b"P6\n# made by hand\n2 1\n255\n".to_vec();
        buf.extend([1, 2, 3, 4, 5, 6]);
        assert_eq!(Image::read_ppm(&buf[..]).unwrap().pixel(0, 1), [4, 5, 6]);
    }

    #[test]
    fn bad_ppm_is_rejected() {
        assert!(Image::read_ppm(&b"P3\n1 1\n255\n0 0 0"[..]).is_err());
        assert!(Image::read_ppm(&b"P6\n2 2\n255\nabc"[..]).is_err());
    }

    #[test]
    fn indivisible_size_is_rejected() {
        assert!(Image::filled(20, 16, [0; 3]).block_count(16).is_err());
    }

    #[test]
    fn missing_zeroes_exact_count() {
        let v: QVector<f64> = (0..256).map(|_| encode_pixel([10, 20, 30])).collect();
        let c = corrupt(&v, Corruption::Missing(0.8), 7).unwrap();
        assert_eq!(c.iter().filter(|q| **q == Quaternion::zero()).count(), 205);
        assert_eq!(c, corrupt(&v, Corruption::Missing(0.8), 7).unwrap());
    }

    #[test]
    fn salt_pepper_forces_binary_channels() {
        let v: QVector<f64> = (0..256).map(|_| encode_pixel([10, 20, 30])).collect();
        let c = corrupt(&v, Corruption::SaltPepper(0.5), 3).unwrap();
        let hit = c.iter().filter(|q| **q != v[0]).count();
        assert!(hit <= 128 && hit > 100);
        for q in c.iter().filter(|q| **q != v[0]) {
            assert!([q.x, q.y, q.z].iter().all(|c| *c == 0.0 || *c == 1.0));
        }
    }

    #[test]
    fn zero_corruption_is_identity() {
        let v: QVector<f64> = (0..16).map(|p| encode_pixel([p as u8, 1, 2])).collect();
        assert_eq!(corrupt(&v, Corruption::Missing(0.0), 1).unwrap(), v);
        assert!(corrupt(&v, Corruption::Missing(1.5), 1).is_err());
    }

    #[test]
    fn psnr_of_identical_images_is_infinite() {
        let img = Image::synthetic(16, 16);
        assert_eq!(psnr(&img, &img).unwrap(), f64::INFINITY);
        let mut other = img.clone();
        other.data[0] = other.data[0].wrapping_add(10);
        assert!(psnr(&img, &other).unwrap().is_finite());
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(bytes in prop::collection::vec(any::<u8>(), 3 * 256)) {
            let img = Image::new(16, 16, bytes).unwrap();
            let mut out = Image::filled(16, 16, [0; 3]);
            decode_block(&encode_block::<f64>(&img, 0, 16).unwrap(), &mut out, 0, 16).unwrap();
            prop_assert_eq!(out, img);
        }

        #[test]
        fn decode_inverts_encode_f32(rgb in prop::array::uniform3(any::<u8>())) {
            prop_assert_eq!(decode_pixel(encode_pixel::<f32>(rgb)), rgb);
        }
    }
}
