//! Pattern-set variant of the overlap encoding.
//!
//! Identical to CPO outside the fully-overlapped region. Inside it, each
//! column's padded rows are walked in aligned groups of four (a set4): groups
//! holding 3 or 4 nonzeros store `{index of the first nonzero, pattern code}`,
//! groups holding 1 or 2 store each index negated. The pattern code is a
//! 4-bit mask, bit `b` set when the row at offset `b` within the group is
//! nonzero, so the legal codes are 7, 11, 13, 14 and 15.

use crate::cpo::{conv_encoded, mac_count_encoded, ConvStats};
use crate::error::{Error, Result};
use crate::layout::classify_columns;
use crate::streams::{self, Codec, EncodedMap, StoredNonzero, StreamSet};
use crate::tensor::{ActivationMap, ConvConfig, Kernel, OutputMap};

/// CPS-encoded activation map; `ptr` and `da` match the CPO encoding of the
/// same map element for element.
#[derive(Debug, Clone, PartialEq)]
pub struct CpsEncoding {
    pub(crate) inner: EncodedMap,
}

impl CpsEncoding {
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
    /// column, value)`, unordered; equals the CPO decode of the same map.
    pub fn decode_nonzeros(&self) -> Result<Vec<StoredNonzero>> {
        streams::decode_entries(&self.inner)
    }
}

/// Encode a map with set4 pattern compression in the fully-overlapped region.
pub fn cps_encode(map: &ActivationMap, config: &ConvConfig) -> Result<CpsEncoding> {
    Ok(CpsEncoding {
        inner: streams::encode_map(map, config, Codec::Cps)?,
    })
}

/// Nonzeros remaining after the first one of a set4 entry: 3 for code 15, 2
/// for the three-member codes, 0 for a negated singleton index.
pub fn pattern_size(code_or_negated_index: i32) -> Result<usize> {
    if code_or_negated_index < 0 {
        return Ok(0);
    }
    match code_or_negated_index {
        7 | 11 | 13 | 14 => Ok(2),
        15 => Ok(3),
        other => Err(Error::Corrupt(format!("invalid set4 pattern code {other}"))),
    }
}

/// Row gap between the `(g-1)`th and `g`th set bit of a pattern code,
/// scanning from the least significant (top row of the group) upward.
pub fn next_offset(code: i32, g: usize) -> Result<usize> {
    let bits: Vec<usize> = (0..4).filter(|b| code as u32 & (1 << b) != 0).collect();
    if !matches!(code, 7 | 11 | 13 | 14 | 15) {
        return Err(Error::Corrupt(format!("invalid set4 pattern code {code}")));
    }
    if g == 0 || g >= bits.len() {
        return Err(Error::Usage(format!(
            "offset {g} out of range for pattern {code}"
        )));
    }
    Ok(bits[g] - bits[g - 1])
}

/// Convolve a CPS encoding; equals both the CPO and the direct result.
pub fn cps_conv(enc: &CpsEncoding, kernel: &Kernel, config: &ConvConfig) -> Result<OutputMap> {
    Ok(conv_encoded(&enc.inner, kernel, config)?.0)
}

/// Same as [`cps_conv`] but also reports scatter-call and MAC counters.
pub fn cps_conv_with_stats(
    enc: &CpsEncoding,
    kernel: &Kernel,
    config: &ConvConfig,
) -> Result<(OutputMap, ConvStats)> {
    conv_encoded(&enc.inner, kernel, config)
}

/// Multiply-accumulates [`cps_conv`] would execute (identical to the CPO
/// count for the same map).
pub fn cps_mac_count(enc: &CpsEncoding, config: &ConvConfig, n_kernels: usize) -> Result<u64> {
    if enc.inner.config != *config {
        return Err(Error::Usage(
            "encoding was built under a different config".into(),
        ));
    }
    mac_count_encoded(&enc.inner, n_kernels)
}

/// Set4 population counts: `c_prime[k-1]` groups with `k` nonzeros outside
/// the fully-overlapped region, `c_dprime[k-1]` inside it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Set4Census {
    c_prime: [u64; 4],
    c_dprime: [u64; 4],
}

impl Set4Census {
    /// Groups with `k` nonzeros (1-based) outside the fully-overlapped region.
    pub fn c_prime(&self, k: usize) -> u64 {
        self.c_prime[k - 1]
    }

    /// Groups with `k` nonzeros (1-based) inside the fully-overlapped region.
    pub fn c_dprime(&self, k: usize) -> u64 {
        self.c_dprime[k - 1]
    }

    /// Total nonzeros accounted for: `sum_k k*(C'_k + C''_k)`.
    pub fn nze_total(&self) -> u64 {
        (1..=4)
            .map(|k| k as u64 * (self.c_prime[k - 1] + self.c_dprime[k - 1]))
            .sum()
    }

    /// Index-stream length of the pattern encoding:
    /// `sum_k k*C'_k + C''_1 + 2*(C''_2 + C''_3 + C''_4)`.
    pub fn in_size_cps(&self) -> u64 {
        let outside: u64 = (1..=4).map(|k| k as u64 * self.c_prime[k - 1]).sum();
        outside + self.c_dprime[0] + 2 * (self.c_dprime[1] + self.c_dprime[2] + self.c_dprime[3])
    }
}

/// Count set4 groups by region and population, feeding the analytic index
/// size. Groups are anchored at padded row zero, per column.
pub fn set4_census(map: &ActivationMap, config: &ConvConfig) -> Result<Set4Census> {
    config.check_map(map)?;
    if !config.unit_stride() {
        return Err(Error::Unsupported(
            "set4 census assumes unit strides".into(),
        ));
    }
    let cls = classify_columns(config, config.padded_w())?;
    let ihp = config.padded_h();
    let mut census = Set4Census::default();
    for n in 0..map.n_images() {
        for c in 0..map.channels() {
            let plane = map.channel_plane(n, c);
            for wp in config.pad_left..config.pad_left + config.iw {
                let w = wp - config.pad_left;
                let inside = config.kw >= 2 && cls.column(wp).overlap_type == config.kw - 1;
                for group_start in (0..ihp).step_by(4) {
                    let mut k = 0usize;
                    for hp in group_start..(group_start + 4).min(ihp) {
                        let h = hp as i64 - config.pad_top as i64;
                        if h < 0 || h >= config.ih as i64 {
                            continue;
                        }
                        if plane[h as usize * config.iw + w] != 0.0 {
                            k += 1;
                        }
                    }
                    if k > 0 {
                        if inside {
                            census.c_dprime[k - 1] += 1;
                        } else {
                            census.c_prime[k - 1] += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(census)
}
