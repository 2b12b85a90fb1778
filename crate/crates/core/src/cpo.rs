//! Compressed pattern-overlap encoding and its SpMv convolution.
//!
//! Each nonzero is stored once, under the partition that owns its column, with
//! a row-major local index. At convolution time the nonzero fans out to
//! `pType + 1` horizontally adjacent output columns and up to `Kh` output
//! rows; all-zero channels (`NPC`) and all-zero overlap blocks (`NPF`) are
//! skipped without touching the value streams.

use crate::baseline::coverage;
use crate::error::{Error, Result};
use crate::streams::{self, Codec, EncodedMap, StoredNonzero, StreamSet};
use crate::tensor::{ActivationMap, ConvConfig, Kernel, OutputMap};

/// CPO-encoded activation map: per image, a `ptr` stream of per-channel
/// blocks (`NPC` for empty channels, `[tag, NPF]` for empty blocks, otherwise
/// `[tag, counts...]`), and the parallel `da`/`in` value and index streams.
#[derive(Debug, Clone, PartialEq)]
pub struct CpoEncoding {
    pub(crate) inner: EncodedMap,
}

impl CpoEncoding {
    pub fn n_images(&self) -> usize {
        self.inner.n_images
    }

    pub fn channels(&self) -> usize {
        self.inner.channels
    }

    pub fn config(&self) -> &ConvConfig {
        &self.inner.config
    }

    pub fn image(&self, n: usize) -> &StreamSet {
        &self.inner.images[n]
    }

    pub fn ptr_len(&self) -> u64 {
        self.inner.ptr_len()
    }

    pub fn da_len(&self) -> u64 {
        self.inner.da_len()
    }

    pub fn in_len(&self) -> u64 {
        self.inner.in_len()
    }

    pub fn count_npf(&self) -> u64 {
        self.inner.count_npf()
    }

    pub fn npc_channels(&self) -> u64 {
        self.inner.npc_channels()
    }

    /// Recover the stored nonzeros as `(image, channel, padded row, padded
    /// column, value)`, unordered.
    pub fn decode_nonzeros(&self) -> Result<Vec<StoredNonzero>> {
        streams::decode_entries(&self.inner)
    }
}

/// Encode a map for SpMv convolution. Requires unit strides and a
/// non-pointwise kernel.
pub fn cpo_encode(map: &ActivationMap, config: &ConvConfig) -> Result<CpoEncoding> {
    Ok(CpoEncoding {
        inner: streams::encode_map(map, config, Codec::Cpo)?,
    })
}

/// Scatter one nonzero against a row-major kernel vector: for each kernel row
/// `l`, output row `y = index/Kw - l` (skipped outside `[0, Oh)`) receives
/// `value * W[t - i]` at output column `s + i` for `i` in `0..=p_type`, where
/// `t = index%Kw + l*Kw`.
#[inline]
#[allow(clippy::too_many_arguments)]
pub fn conv_spmv(
    value: f32,
    index: i32,
    p_type: usize,
    s: usize,
    weights: &[f32],
    kh: usize,
    kw: usize,
    oh: usize,
    ow: usize,
    plane: &mut [f64],
) {
    let row = index as usize / kw;
    let col = index as usize % kw;
    let v = value as f64;
    for l in 0..kh {
        let y = row as i64 - l as i64;
        if y < 0 {
            break;
        }
        let y = y as usize;
        if y >= oh {
            continue;
        }
        let t = col + l * kw;
        let base = y * ow + s;
        for i in 0..=p_type {
            plane[base + i] += v * weights[t - i] as f64;
        }
    }
}

/// Work counters for one convolution run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConvStats {
    /// Scatter invocations: one per stored nonzero per kernel per channel pass.
    pub scatter_calls: u64,
    /// Multiply-accumulates actually executed (in-bounds output rows only).
    pub macs: u64,
}

pub(crate) fn conv_encoded(
    enc: &EncodedMap,
    kernel: &Kernel,
    config: &ConvConfig,
) -> Result<(OutputMap, ConvStats)> {
    if enc.config != *config {
        return Err(Error::Usage(
            "encoding was built under a different config".into(),
        ));
    }
    if kernel.channels() != enc.channels || kernel.kh() != config.kh || kernel.kw() != config.kw {
        return Err(Error::Shape("kernel does not match the encoding".into()));
    }
    let (oh, ow) = config.output_dims();
    let (kh, kw) = (config.kh, config.kw);
    let ihp = config.padded_h();
    let n_kernels = kernel.n_kernels();
    let mut out = vec![0.0f64; enc.n_images * n_kernels * oh * ow];
    let mut stats = ConvStats::default();

    for (n, set) in enc.images.iter().enumerate() {
        for (c, meta) in set.channels.iter().enumerate() {
            if meta.npc {
                continue;
            }
            for k in 0..n_kernels {
                let weights = kernel.plane(c, k);
                let plane = &mut out[(n * n_kernels + k) * oh * ow..][..oh * ow];
                for block in meta.blocks.iter().filter(|b| !b.npf) {
                    let pattern_coded =
                        enc.codec == Codec::Cps && kw >= 2 && block.p_type == kw - 1;
                    let p_type = block.p_type;
                    streams::walk_block_entries(
                        set,
                        block,
                        config,
                        ow,
                        pattern_coded,
                        |da_pos, idx, s| {
                            conv_spmv(
                                set.da[da_pos],
                                idx,
                                p_type,
                                s,
                                weights,
                                kh,
                                kw,
                                oh,
                                ow,
                                plane,
                            );
                            stats.scatter_calls += 1;
                            stats.macs +=
                                (coverage(idx as usize / kw, kh, ihp, oh) * (p_type + 1)) as u64;
                            Ok(())
                        },
                    )?;
                }
            }
        }
    }
    let out = OutputMap::new(
        enc.n_images,
        n_kernels,
        oh,
        ow,
        out.into_iter().map(|v| v as f32).collect(),
    )?;
    Ok((out, stats))
}

pub(crate) fn mac_count_encoded(enc: &EncodedMap, n_kernels: usize) -> Result<u64> {
    let config = &enc.config;
    let (oh, ow) = config.output_dims();
    let (kh, kw) = (config.kh, config.kw);
    let ihp = config.padded_h();
    let mut macs = 0u64;
    for set in &enc.images {
        for meta in &set.channels {
            for block in meta.blocks.iter().filter(|b| !b.npf) {
                let pattern_coded = enc.codec == Codec::Cps && kw >= 2 && block.p_type == kw - 1;
                let p_type = block.p_type;
                streams::walk_block_entries(set, block, config, ow, pattern_coded, |_, idx, _| {
                    macs += (coverage(idx as usize / kw, kh, ihp, oh) * (p_type + 1)) as u64;
                    Ok(())
                })?;
            }
        }
    }
    Ok(macs * n_kernels as u64)
}

/// Convolve a CPO encoding with a kernel; equals [`crate::baseline::direct_conv`]
/// on the map the encoding came from.
pub fn cpo_conv(enc: &CpoEncoding, kernel: &Kernel, config: &ConvConfig) -> Result<OutputMap> {
    Ok(conv_encoded(&enc.inner, kernel, config)?.0)
}

/// Same as [`cpo_conv`] but also reports scatter-call and MAC counters.
pub fn cpo_conv_with_stats(
    enc: &CpoEncoding,
    kernel: &Kernel,
    config: &ConvConfig,
) -> Result<(OutputMap, ConvStats)> {
    conv_encoded(&enc.inner, kernel, config)
}

/// Multiply-accumulates [`cpo_conv`] would execute; equals
/// [`crate::baseline::mac_count_direct`] on the same map.
pub fn cpo_mac_count(enc: &CpoEncoding, config: &ConvConfig, n_kernels: usize) -> Result<u64> {
    if enc.inner.config != *config {
        return Err(Error::Usage(
            "encoding was built under a different config".into(),
        ));
    }
    mac_count_encoded(&enc.inner, n_kernels)
}
