//! Reference convolutions: the direct triple-loop ground truth, the im2col
//! lowering + dense multiply, the CSR-of-lowered-matrix (CSCC) baseline, and a
//! brute-force multiply-accumulate counter.
//!
//! Every path accumulates per-output in `f64` and stores `f32`, so the five
//! convolution routes in this crate agree bit-exactly on integer-valued data
//! and to within a few ulps on reals. The direct path fixes the canonical
//! accumulation order `(c, kernel row, kernel col)`.

use crate::error::{Error, Result};
use crate::tensor::{ActivationMap, ConvConfig, Kernel, OutputMap};

/// 2-D lowering product. `Im2col` keeps one kernel-sized patch per output
/// site; `MecStyle` keeps one full-height horizontal partition per output
/// column (per image and channel).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoweringScheme {
    Im2col,
    MecStyle,
}

/// Dense lowered matrix, images stacked along the rows.
#[derive(Debug, Clone)]
pub struct LoweredMatrix {
    pub scheme: LoweringScheme,
    pub rows: usize,
    pub cols: usize,
    pub n_images: usize,
    pub channels: usize,
    pub oh: usize,
    pub ow: usize,
    pub data: Vec<f32>,
}

impl LoweredMatrix {
    pub fn elements(&self) -> u64 {
        self.data.len() as u64
    }

    pub fn nonzeros(&self) -> u64 {
        self.data.iter().filter(|&&v| v != 0.0).count() as u64
    }
}

/// CSR form of the per-channel mec-style lowering: `Ow + 1` row offsets per
/// `(image, channel)`, column indices in `[0, Kw*Ih)` (real rows, row-major
/// inside the `Ih x Kw` partition).
#[derive(Debug, Clone)]
pub struct CsccEncoding {
    pub(crate) n_images: usize,
    pub(crate) channels: usize,
    pub(crate) config: ConvConfig,
    pub(crate) planes: Vec<CsccPlane>,
}

#[derive(Debug, Clone)]
pub(crate) struct CsccPlane {
    pub row_offsets: Vec<u32>,
    pub values: Vec<f32>,
    pub col_indices: Vec<u32>,
}

impl CsccEncoding {
    pub fn n_images(&self) -> usize {
        self.n_images
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn total_nnz(&self) -> u64 {
        self.planes.iter().map(|p| p.values.len() as u64).sum()
    }

    /// Stored elements: row offsets plus value/index pairs.
    pub fn measured_size(&self) -> u64 {
        let offsets = (self.n_images * self.channels) as u64 * (self.config.ow as u64 + 1);
        offsets + 2 * self.total_nnz()
    }

    /// Density of the batch of lowered matrices: per-image nonzero fraction of
    /// the `Ow x Kw*Ih*Ic` lowering, summed over images.
    pub fn rho_hat(&self) -> f64 {
        let per_image = (self.config.ow * self.config.kw * self.config.ih * self.channels) as f64;
        self.total_nnz() as f64 / per_image
    }

    pub(crate) fn plane(&self, n: usize, c: usize) -> &CsccPlane {
        &self.planes[n * self.channels + c]
    }
}

/// Ground-truth convolution:
/// `O(n,y,x,k) = sum_c sum_h sum_w I(n,c,y*sh+h-pad_top, x*sw+w-pad_left) * W(h,w,c,k)`
/// with pad cells read as zero.
pub fn direct_conv(map: &ActivationMap, kernel: &Kernel, config: &ConvConfig) -> Result<OutputMap> {
    config.check_map(map)?;
    config.check_kernel(map, kernel)?;
    let (oh, ow) = config.output_dims();
    let (n_images, channels) = (map.n_images(), map.channels());
    let n_kernels = kernel.n_kernels();
    let mut out = vec![0.0f64; n_images * n_kernels * oh * ow];

    for n in 0..n_images {
        for k in 0..n_kernels {
            let plane = &mut out[(n * n_kernels + k) * oh * ow..][..oh * ow];
            for y in 0..oh {
                for x in 0..ow {
                    let mut acc = 0.0f64;
                    for c in 0..channels {
                        for h in 0..config.kh {
                            for w in 0..config.kw {
                                let ih = (y * config.sh + h) as i64 - config.pad_top as i64;
                                let iw = (x * config.sw + w) as i64 - config.pad_left as i64;
                                let v = map.padded_get(n, c, ih, iw, config)?;
                                if v != 0.0 {
                                    acc += v as f64 * kernel.weight(h, w, c, k) as f64;
                                }
                            }
                        }
                    }
                    plane[y * ow + x] = acc;
                }
            }
        }
    }
    OutputMap::new(
        n_images,
        n_kernels,
        oh,
        ow,
        out.into_iter().map(|v| v as f32).collect(),
    )
}

/// Patch-per-row lowering: row `r = (n*Oh + y)*Ow + x` holds the `Kh x Kw`
/// patch at output site `(y, x)` for every channel, concatenated channel-major.
pub fn im2col_lower(map: &ActivationMap, config: &ConvConfig) -> Result<LoweredMatrix> {
    config.check_map(map)?;
    let (oh, ow) = config.output_dims();
    let (n_images, channels) = (map.n_images(), map.channels());
    let cols = channels * config.kh * config.kw;
    let rows = n_images * oh * ow;
    let mut data = vec![0.0f32; rows * cols];

    for n in 0..n_images {
        for y in 0..oh {
            for x in 0..ow {
                let row = (n * oh + y) * ow + x;
                let base = row * cols;
                let mut col = 0;
                for c in 0..channels {
                    for h in 0..config.kh {
                        for w in 0..config.kw {
                            let ih = (y * config.sh + h) as i64 - config.pad_top as i64;
                            let iw = (x * config.sw + w) as i64 - config.pad_left as i64;
                            data[base + col] = map.padded_get(n, c, ih, iw, config)?;
                            col += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(LoweredMatrix {
        scheme: LoweringScheme::Im2col,
        rows,
        cols,
        n_images,
        channels,
        oh,
        ow,
        data,
    })
}

/// Dense multiply of an im2col lowering against the `Ic*Kh*Kw x K` kernel
/// matrix, reshaped back to an output tensor.
pub fn gemm_conv(lowered: &LoweredMatrix, kernel: &Kernel) -> Result<OutputMap> {
    if lowered.scheme != LoweringScheme::Im2col {
        return Err(Error::Usage("gemm_conv expects an im2col lowering".into()));
    }
    let cols = kernel.channels() * kernel.kh() * kernel.kw();
    if lowered.cols != cols || lowered.channels != kernel.channels() {
        return Err(Error::Shape(format!(
            "lowered matrix has {} columns, kernel implies {}",
            lowered.cols, cols
        )));
    }
    let (n_images, oh, ow) = (lowered.n_images, lowered.oh, lowered.ow);
    let n_kernels = kernel.n_kernels();
    let site_count = oh * ow;
    let mut out = vec![0.0f32; n_images * n_kernels * site_count];

    for n in 0..n_images {
        for k in 0..n_kernels {
            let plane = &mut out[(n * n_kernels + k) * site_count..][..site_count];
            for (site, slot) in plane.iter_mut().enumerate() {
                let row = &lowered.data[(n * site_count + site) * lowered.cols..][..lowered.cols];
                let mut acc = 0.0f64;
                let mut col = 0;
                for c in 0..kernel.channels() {
                    let weights = kernel.plane(c, k);
                    for (&v, &w) in row[col..col + weights.len()].iter().zip(weights) {
                        acc += v as f64 * w as f64;
                    }
                    col += weights.len();
                }
                *slot = acc as f32;
            }
        }
    }
    OutputMap::new(n_images, n_kernels, oh, ow, out)
}

/// Partition-per-row lowering used by the CSCC baseline: per image and channel,
/// row `s` is the `Ih x Kw` slab under padded columns `[s, s+Kw)`, flattened
/// row-major. Images and channels stack along the rows.
pub fn mec_lower(map: &ActivationMap, config: &ConvConfig) -> Result<LoweredMatrix> {
    config.check_map(map)?;
    if !config.unit_stride() {
        return Err(Error::Unsupported(
            "mec-style lowering implemented for unit strides".into(),
        ));
    }
    let (oh, ow) = config.output_dims();
    let (n_images, channels) = (map.n_images(), map.channels());
    let cols = config.kw * config.ih;
    let rows = n_images * channels * ow;
    let mut data = vec![0.0f32; rows * cols];

    for n in 0..n_images {
        for c in 0..channels {
            for s in 0..ow {
                let base = ((n * channels + c) * ow + s) * cols;
                for h in 0..config.ih {
                    for j in 0..config.kw {
                        let wp = (s + j) as i64 - config.pad_left as i64;
                        data[base + h * config.kw + j] =
                            map.padded_get(n, c, h as i64, wp, config)?;
                    }
                }
            }
        }
    }
    Ok(LoweredMatrix {
        scheme: LoweringScheme::MecStyle,
        rows,
        cols,
        n_images,
        channels,
        oh,
        ow,
        data,
    })
}

/// CSR compression of the mec-style lowering, one matrix per image and channel.
pub fn cscc_encode(map: &ActivationMap, config: &ConvConfig) -> Result<CsccEncoding> {
    config.check_map(map)?;
    if !config.unit_stride() {
        return Err(Error::Unsupported(format!(
            "cscc requires unit strides, got ({}, {})",
            config.sh, config.sw
        )));
    }
    let (_, ow) = config.output_dims();
    let (n_images, channels) = (map.n_images(), map.channels());
    let mut planes = Vec::with_capacity(n_images * channels);

    for n in 0..n_images {
        for c in 0..channels {
            let mut row_offsets = Vec::with_capacity(ow + 1);
            let mut values = Vec::new();
            let mut col_indices = Vec::new();
            row_offsets.push(0u32);
            for s in 0..ow {
                for h in 0..config.ih {
                    for j in 0..config.kw {
                        let wp = (s + j) as i64 - config.pad_left as i64;
                        let v = map.padded_get(n, c, h as i64, wp, config)?;
                        if v != 0.0 {
                            values.push(v);
                            col_indices.push((h * config.kw + j) as u32);
                        }
                    }
                }
                row_offsets.push(values.len() as u32);
            }
            planes.push(CsccPlane {
                row_offsets,
                values,
                col_indices,
            });
        }
    }
    Ok(CsccEncoding {
        n_images,
        channels,
        config: *config,
        planes,
    })
}

/// Row-by-row SpMv of the CSR partitions against the row-major kernel vector:
/// CSR row `s` produces output column `s`.
pub fn cscc_conv(enc: &CsccEncoding, kernel: &Kernel, config: &ConvConfig) -> Result<OutputMap> {
    if enc.config != *config {
        return Err(Error::Usage(
            "encoding was built under a different config".into(),
        ));
    }
    if kernel.channels() != enc.channels || kernel.kh() != config.kh || kernel.kw() != config.kw {
        return Err(Error::Shape(
            "kernel does not match the cscc encoding".into(),
        ));
    }
    let (oh, ow) = config.output_dims();
    let n_kernels = kernel.n_kernels();
    let mut out = vec![0.0f64; enc.n_images * n_kernels * oh * ow];

    for n in 0..enc.n_images {
        for c in 0..enc.channels {
            let plane = enc.plane(n, c);
            for k in 0..n_kernels {
                let weights = kernel.plane(c, k);
                let out_plane = &mut out[(n * n_kernels + k) * oh * ow..][..oh * ow];
                for s in 0..ow {
                    let lo = plane.row_offsets[s] as usize;
                    let hi = plane.row_offsets[s + 1] as usize;
                    for i in lo..hi {
                        let v = plane.values[i] as f64;
                        let col = plane.col_indices[i] as usize;
                        let h = col / config.kw + config.pad_top;
                        let j = col % config.kw;
                        for l in 0..config.kh {
                            let y = h as i64 - l as i64;
                            if y >= 0 && (y as usize) < oh {
                                out_plane[y as usize * ow + s] +=
                                    v * weights[l * config.kw + j] as f64;
                            }
                        }
                    }
                }
            }
        }
    }
    OutputMap::new(
        enc.n_images,
        n_kernels,
        oh,
        ow,
        out.into_iter().map(|v| v as f32).collect(),
    )
}

/// Number of kernel windows covering padded row `h` (or, with the horizontal
/// arguments, padded column `w`) at unit stride.
#[inline]
pub(crate) fn coverage(pos: usize, kernel: usize, padded: usize, out: usize) -> usize {
    pos.min(kernel - 1).min(padded - 1 - pos).min(out - 1) + 1
}

/// Multiply-accumulates a zero-skipping convolution must perform: for each
/// nonzero input element, the number of `(output site, kernel offset)` pairs
/// covering it, times the kernel count.
pub fn mac_count_direct(map: &ActivationMap, config: &ConvConfig, n_kernels: usize) -> Result<u64> {
    config.check_map(map)?;
    if !config.unit_stride() {
        return Err(Error::Unsupported(
            "mac counting assumes unit strides".into(),
        ));
    }
    let (oh, ow) = config.output_dims();
    let (php, pwp) = (config.padded_h(), config.padded_w());
    let mut macs = 0u64;
    for n in 0..map.n_images() {
        for c in 0..map.channels() {
            let plane = map.channel_plane(n, c);
            for h in 0..config.ih {
                let cov_h = coverage(h + config.pad_top, config.kh, php, oh) as u64;
                for w in 0..config.iw {
                    if plane[h * config.iw + w] != 0.0 {
                        let cov_w = coverage(w + config.pad_left, config.kw, pwp, ow) as u64;
                        macs += cov_h * cov_w;
                    }
                }
            }
        }
    }
    Ok(macs * n_kernels as u64)
}
