//! Tensor containers, convolution geometry, and synthetic sparse-map generation.
//!
//! Activation maps are channel-planar `(n, c, h, w)` so the encoders can walk one
//! channel plane at a time without strided access. Padding is never materialized:
//! [`ActivationMap::padded_get`] translates padded coordinates and reads pad cells
//! as zeros, which keeps every measured structure size equal to the analytic
//! formulas (those never count pad storage).
//!
//! All values are immutable after construction and safe to share across threads.

use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 4-D input tensor, layout `index = ((n*Ic + c)*Ih + h)*Iw + w`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationMap {
    n_images: usize,
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl ActivationMap {
    pub fn new(
        n_images: usize,
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        if n_images == 0 || channels == 0 || height == 0 || width == 0 {
            return Err(Error::Shape("all map dimensions must be >= 1".into()));
        }
        let expected = n_images * channels * height * width;
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "map data length {} does not match {}x{}x{}x{} = {}",
                data.len(),
                n_images,
                channels,
                height,
                width,
                expected
            )));
        }
        Ok(Self {
            n_images,
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(n_images: usize, channels: usize, height: usize, width: usize) -> Result<Self> {
        let len = n_images * channels * height * width;
        Self::new(n_images, channels, height, width, vec![0.0; len])
    }

    pub fn n_images(&self) -> usize {
        self.n_images
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, n: usize, c: usize, h: usize, w: usize) -> f32 {
        self.data[((n * self.channels + c) * self.height + h) * self.width + w]
    }

    pub fn set(&mut self, n: usize, c: usize, h: usize, w: usize, value: f32) {
        self.data[((n * self.channels + c) * self.height + h) * self.width + w] = value;
    }

    /// One `Ih*Iw` channel plane.
    #[inline]
    pub fn channel_plane(&self, n: usize, c: usize) -> &[f32] {
        let plane = self.height * self.width;
        let start = (n * self.channels + c) * plane;
        &self.data[start..start + plane]
    }

    /// Read in padded coordinates: `0` inside the pad frame, the stored value
    /// inside the map, an index error outside the padded frame entirely.
    pub fn padded_get(
        &self,
        n: usize,
        c: usize,
        h: i64,
        w: i64,
        config: &ConvConfig,
    ) -> Result<f32> {
        let (ih, iw) = (self.height as i64, self.width as i64);
        let (pt, pb) = (config.pad_top as i64, config.pad_bottom as i64);
        let (pl, pr) = (config.pad_left as i64, config.pad_right as i64);
        if h < -pt || h >= ih + pb || w < -pl || w >= iw + pr {
            return Err(Error::Index(format!(
                "coordinate ({h}, {w}) outside padded frame [{}, {}) x [{}, {})",
                -pt,
                ih + pb,
                -pl,
                iw + pr
            )));
        }
        if h < 0 || h >= ih || w < 0 || w >= iw {
            return Ok(0.0);
        }
        Ok(self.get(n, c, h as usize, w as usize))
    }
}

/// Kernel tensor `Kh x Kw x Ic x K`; each `(channel, kernel)` plane is stored
/// row-major so the flat weight position is `t = h*Kw + w`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    kh: usize,
    kw: usize,
    channels: usize,
    n_kernels: usize,
    data: Vec<f32>,
}

impl Kernel {
    pub fn new(
        kh: usize,
        kw: usize,
        channels: usize,
        n_kernels: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        if kh == 0 || kw == 0 || channels == 0 || n_kernels == 0 {
            return Err(Error::Shape("all kernel dimensions must be >= 1".into()));
        }
        let expected = kh * kw * channels * n_kernels;
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "kernel data length {} does not match {}x{}x{}x{} = {}",
                data.len(),
                kh,
                kw,
                channels,
                n_kernels,
                expected
            )));
        }
        Ok(Self {
            kh,
            kw,
            channels,
            n_kernels,
            data,
        })
    }

    pub fn kh(&self) -> usize {
        self.kh
    }

    pub fn kw(&self) -> usize {
        self.kw
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn n_kernels(&self) -> usize {
        self.n_kernels
    }

    #[inline]
    pub fn weight(&self, h: usize, w: usize, c: usize, k: usize) -> f32 {
        self.data[((c * self.n_kernels + k) * self.kh + h) * self.kw + w]
    }

    /// Row-major `Kh*Kw` weight vector for one `(channel, kernel)` pair.
    #[inline]
    pub fn plane(&self, c: usize, k: usize) -> &[f32] {
        let plane = self.kh * self.kw;
        let start = (c * self.n_kernels + k) * plane;
        &self.data[start..start + plane]
    }
}

/// Output tensor `In x K x Oh x Ow`, layout `((n*K + k)*Oh + y)*Ow + x`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputMap {
    n_images: usize,
    n_kernels: usize,
    oh: usize,
    ow: usize,
    data: Vec<f32>,
}

impl OutputMap {
    pub fn new(
        n_images: usize,
        n_kernels: usize,
        oh: usize,
        ow: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        let expected = n_images * n_kernels * oh * ow;
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "output data length {} != {}",
                data.len(),
                expected
            )));
        }
        Ok(Self {
            n_images,
            n_kernels,
            oh,
            ow,
            data,
        })
    }

    pub fn zeros(n_images: usize, n_kernels: usize, oh: usize, ow: usize) -> Self {
        let len = n_images * n_kernels * oh * ow;
        Self {
            n_images,
            n_kernels,
            oh,
            ow,
            data: vec![0.0; len],
        }
    }

    pub fn n_images(&self) -> usize {
        self.n_images
    }

    pub fn n_kernels(&self) -> usize {
        self.n_kernels
    }

    pub fn oh(&self) -> usize {
        self.oh
    }

    pub fn ow(&self) -> usize {
        self.ow
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, n: usize, k: usize, y: usize, x: usize) -> f32 {
        self.data[((n * self.n_kernels + k) * self.oh + y) * self.ow + x]
    }

    /// Largest pairwise deviation, relative with a unit floor:
    /// `|a - b| / max(1, |a|, |b|)`.
    pub fn max_relative_deviation(&self, other: &OutputMap) -> Result<f64> {
        if self.data.len() != other.data.len() {
            return Err(Error::Shape("output maps differ in shape".into()));
        }
        let mut worst = 0.0f64;
        for (a, b) in self.data.iter().zip(other.data.iter()) {
            let (a, b) = (*a as f64, *b as f64);
            let denom = 1.0f64.max(a.abs()).max(b.abs());
            worst = worst.max((a - b).abs() / denom);
        }
        Ok(worst)
    }
}

/// Convolution geometry: kernel extents, strides, explicit pads, plus the input
/// spatial dims it was built for and the derived output dims.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvConfig {
    pub kh: usize,
    pub kw: usize,
    pub sh: usize,
    pub sw: usize,
    pub pad_top: usize,
    pub pad_bottom: usize,
    pub pad_left: usize,
    pub pad_right: usize,
    pub ih: usize,
    pub iw: usize,
    pub oh: usize,
    pub ow: usize,
}

impl ConvConfig {
    pub fn custom(
        ih: usize,
        iw: usize,
        kh: usize,
        kw: usize,
        sh: usize,
        sw: usize,
        pads: [usize; 4],
    ) -> Result<Self> {
        if ih == 0 || iw == 0 || kh == 0 || kw == 0 || sh == 0 || sw == 0 {
            return Err(Error::Config("dimensions and strides must be >= 1".into()));
        }
        let [pad_top, pad_bottom, pad_left, pad_right] = pads;
        let (oh, ow) = compute_output_dims(ih, iw, kh, kw, sh, sw, pads)?;
        Ok(Self {
            kh,
            kw,
            sh,
            sw,
            pad_top,
            pad_bottom,
            pad_left,
            pad_right,
            ih,
            iw,
            oh,
            ow,
        })
    }

    /// No padding.
    pub fn valid(ih: usize, iw: usize, kh: usize, kw: usize) -> Result<Self> {
        Self::custom(ih, iw, kh, kw, 1, 1, [0, 0, 0, 0])
    }

    pub fn valid_strided(
        ih: usize,
        iw: usize,
        kh: usize,
        kw: usize,
        sh: usize,
        sw: usize,
    ) -> Result<Self> {
        Self::custom(ih, iw, kh, kw, sh, sw, [0, 0, 0, 0])
    }

    /// Unit-stride padding such that the output spatial dims equal the input
    /// dims. Total pad `k - 1` is split small-side-first: `top = (kh-1)/2`,
    /// `bottom = kh-1-top`, and likewise for left/right.
    pub fn same(ih: usize, iw: usize, kh: usize, kw: usize) -> Result<Self> {
        let pad_top = (kh - 1) / 2;
        let pad_bottom = kh - 1 - pad_top;
        let pad_left = (kw - 1) / 2;
        let pad_right = kw - 1 - pad_left;
        Self::custom(
            ih,
            iw,
            kh,
            kw,
            1,
            1,
            [pad_top, pad_bottom, pad_left, pad_right],
        )
    }

    pub fn output_dims(&self) -> (usize, usize) {
        (self.oh, self.ow)
    }

    pub fn padded_h(&self) -> usize {
        self.ih + self.pad_top + self.pad_bottom
    }

    pub fn padded_w(&self) -> usize {
        self.iw + self.pad_left + self.pad_right
    }

    pub fn is_pointwise(&self) -> bool {
        self.kh == 1 && self.kw == 1
    }

    pub fn unit_stride(&self) -> bool {
        self.sh == 1 && self.sw == 1
    }

    /// Precondition shared by every sparse path: unit strides, non-pointwise.
    pub fn require_sparse_ok(&self) -> Result<()> {
        if !self.unit_stride() {
            return Err(Error::Unsupported(format!(
                "sparse paths require unit strides, got ({}, {})",
                self.sh, self.sw
            )));
        }
        if self.is_pointwise() {
            return Err(Error::Unsupported(
                "sparse paths do not serve 1x1 kernels".into(),
            ));
        }
        Ok(())
    }

    pub fn check_map(&self, map: &ActivationMap) -> Result<()> {
        if map.height() != self.ih || map.width() != self.iw {
            return Err(Error::Shape(format!(
                "map is {}x{}, config was built for {}x{}",
                map.height(),
                map.width(),
                self.ih,
                self.iw
            )));
        }
        Ok(())
    }

    pub fn check_kernel(&self, map: &ActivationMap, kernel: &Kernel) -> Result<()> {
        if kernel.kh() != self.kh || kernel.kw() != self.kw {
            return Err(Error::Shape(format!(
                "kernel is {}x{}, config expects {}x{}",
                kernel.kh(),
                kernel.kw(),
                self.kh,
                self.kw
            )));
        }
        if kernel.channels() != map.channels() {
            return Err(Error::Shape(format!(
                "kernel has {} channels, map has {}",
                kernel.channels(),
                map.channels()
            )));
        }
        Ok(())
    }
}

/// `O = 1 + (I + pads - K) / s`, exactly divisible in each dimension.
pub fn compute_output_dims(
    ih: usize,
    iw: usize,
    kh: usize,
    kw: usize,
    sh: usize,
    sw: usize,
    pads: [usize; 4],
) -> Result<(usize, usize)> {
    let [pt, pb, pl, pr] = pads;
    let span_h = ih + pt + pb;
    let span_w = iw + pl + pr;
    if span_h < kh || span_w < kw {
        return Err(Error::Config(format!(
            "padded extent {span_h}x{span_w} smaller than kernel {kh}x{kw}"
        )));
    }
    if !(span_h - kh).is_multiple_of(sh) || !(span_w - kw).is_multiple_of(sw) {
        return Err(Error::Config(format!(
            "padded extent minus kernel ({}, {}) not divisible by strides ({sh}, {sw})",
            span_h - kh,
            span_w - kw
        )));
    }
    Ok((1 + (span_h - kh) / sh, 1 + (span_w - kw) / sw))
}

/// Value distribution for synthetic maps and kernels. Zero is excluded from
/// both modes so target densities are met exactly in expectation; the integer
/// mode exists so oracle comparisons can demand bit-exact equality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValueDist {
    /// Uniform reals in `[lo, hi]`, resampled away from zero.
    Uniform { lo: f32, hi: f32 },
    /// Uniform integers in `[lo, hi]` excluding zero, stored as reals.
    SmallInt { lo: i32, hi: i32 },
}

impl ValueDist {
    fn validate(&self) -> Result<()> {
        match *self {
            ValueDist::Uniform { lo, hi } => {
                // NaN bounds are rejected along with empty or zero-only ranges.
                if lo.is_nan() || hi.is_nan() || lo >= hi {
                    return Err(Error::Config(format!("empty value range [{lo}, {hi}]")));
                }
            }
            ValueDist::SmallInt { lo, hi } => {
                let only_zero = lo == 0 && hi == 0;
                if lo > hi || only_zero {
                    return Err(Error::Config(format!(
                        "empty integer value range [{lo}, {hi}]"
                    )));
                }
            }
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f32 {
        match *self {
            ValueDist::Uniform { lo, hi } => loop {
                let v = rng.random_range(lo..=hi);
                if v != 0.0 {
                    return v;
                }
            },
            ValueDist::SmallInt { lo, hi } => loop {
                let v = rng.random_range(lo..=hi);
                if v != 0 {
                    return v as f32;
                }
            },
        }
    }
}

/// Deterministic sparse map: every element is independently nonzero with
/// probability `target_density`. The generator is ChaCha8 seeded with `seed`,
/// consumed in flat index order, so fixtures reproduce across platforms.
pub fn gen_random_map(
    dims: (usize, usize, usize, usize),
    target_density: f64,
    dist: ValueDist,
    seed: u64,
) -> Result<ActivationMap> {
    if !(0.0..=1.0).contains(&target_density) {
        return Err(Error::Config(format!(
            "density {target_density} outside [0, 1]"
        )));
    }
    dist.validate()?;
    let (n, c, h, w) = dims;
    let len = n
        .checked_mul(c)
        .and_then(|v| v.checked_mul(h))
        .and_then(|v| v.checked_mul(w))
        .ok_or_else(|| Error::Config("map dimensions overflow".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = vec![0.0f32; len];
    for slot in data.iter_mut() {
        if rng.random_bool(target_density) {
            *slot = dist.sample(&mut rng);
        }
    }
    ActivationMap::new(n, c, h, w, data)
}

/// Dense deterministic kernel from the same generator family.
pub fn gen_random_kernel(
    kh: usize,
    kw: usize,
    channels: usize,
    n_kernels: usize,
    dist: ValueDist,
    seed: u64,
) -> Result<Kernel> {
    dist.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = kh * kw * channels * n_kernels;
    let data = (0..len).map(|_| dist.sample(&mut rng)).collect();
    Kernel::new(kh, kw, channels, n_kernels, data)
}

/// Exact per-channel nonzero counts of a map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityProfile {
    n_images: usize,
    channels: usize,
    plane_cells: usize,
    counts: Vec<usize>,
}

impl DensityProfile {
    pub fn n_images(&self) -> usize {
        self.n_images
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `rho_{n,c}` = nonzeros in the channel plane / (Ih*Iw).
    pub fn rho(&self, n: usize, c: usize) -> f64 {
        self.counts[n * self.channels + c] as f64 / self.plane_cells as f64
    }

    pub fn count(&self, n: usize, c: usize) -> usize {
        self.counts[n * self.channels + c]
    }

    /// Aggregate density `sum_{n,c} rho_{n,c}`; can exceed 1 when the map has
    /// more than one channel plane.
    pub fn aggregate(&self) -> f64 {
        self.nze_total() as f64 / self.plane_cells as f64
    }

    /// Nonzero fraction over all cells of the map.
    pub fn mean_density(&self) -> f64 {
        self.nze_total() as f64 / (self.plane_cells * self.n_images * self.channels) as f64
    }

    pub fn nze_total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// Channel planes with no nonzero at all (the encoders collapse these).
    pub fn zero_channels(&self) -> u64 {
        self.counts.iter().filter(|&&c| c == 0).count() as u64
    }
}

/// Exact nonzero counts per channel plane.
pub fn measure_density(map: &ActivationMap) -> DensityProfile {
    let mut counts = Vec::with_capacity(map.n_images() * map.channels());
    for n in 0..map.n_images() {
        for c in 0..map.channels() {
            counts.push(
                map.channel_plane(n, c)
                    .iter()
                    .filter(|&&v| v != 0.0)
                    .count(),
            );
        }
    }
    DensityProfile {
        n_images: map.n_images(),
        channels: map.channels(),
        plane_cells: map.height() * map.width(),
        counts,
    }
}
