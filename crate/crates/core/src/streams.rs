//! Shared plumbing for the two sparse encodings.
//!
//! Both codecs emit three parallel streams per image:
//!
//! * `ptr`   — per channel, either the single sentinel [`NPC`] or a sequence of
//!   blocks. A block is `[type tag, counts...]`: the NOP block (tag 0, only
//!   when there is no left padding) carries two cumulative counts (first
//!   column, then the remaining single-coverage columns); every overlap block
//!   (tag `t` = coverage, `2 <= t <= Kw`) carries `Ow` cumulative counts, one
//!   slot per partition, `-1` where the partition owns no new column of the
//!   type; a block with no nonzeros at all collapses to `[tag, NPF]`. With
//!   `Kw == 1` the whole channel is a single block `[0, c_0..c_{Ow-1}]`.
//!   Cumulative counts restart at zero in every block; the base offsets into
//!   `da`/`in` are tracked per block.
//! * `da`    — nonzero values, column-major within a block, rows top to bottom.
//! * `in`    — per-nonzero local indices `local_col + h*Kw` in padded row
//!   coordinates. The pattern codec rewrites only the fully-overlapped block's
//!   portion of this stream.

use crate::error::{Error, Result};
use crate::layout::{classify_columns, ColumnClassification};
use crate::tensor::{ActivationMap, ConvConfig};

/// One decoded nonzero: `(image, channel, padded row, padded column, value)`.
pub type StoredNonzero = (usize, usize, usize, usize, f32);

/// Channel skip sentinel: the whole channel has no nonzeros.
pub const NPC: i32 = i32::MIN;
/// Block skip sentinel: one overlap block has no nonzeros.
pub const NPF: i32 = i32::MIN + 1;
/// Partition owns no new column of the block's type.
pub const NO_NEW_COLUMN: i32 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Codec {
    Cpo,
    Cps,
}

/// One image's three streams plus parsed per-channel structure.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSet {
    pub ptr: Vec<i32>,
    pub da: Vec<f32>,
    pub indices: Vec<i32>,
    pub(crate) channels: Vec<ChannelMeta>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct ChannelMeta {
    pub npc: bool,
    pub ptr_start: usize,
    pub blocks: Vec<BlockMeta>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct BlockMeta {
    /// Stored type tag: 0 for the NOP and `Kw == 1` blocks, else coverage.
    pub tag: i32,
    /// Horizontal fan-out minus one of every element in the block.
    pub p_type: usize,
    pub npf: bool,
    pub ptr_start: usize,
    /// Start offsets into `da` / `in` (cumulative counts are block-relative).
    pub da_base: usize,
    pub in_base: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct EncodedMap {
    pub codec: Codec,
    pub n_images: usize,
    pub channels: usize,
    pub config: ConvConfig,
    pub images: Vec<StreamSet>,
}

impl EncodedMap {
    pub fn ptr_len(&self) -> u64 {
        self.images.iter().map(|s| s.ptr.len() as u64).sum()
    }

    pub fn da_len(&self) -> u64 {
        self.images.iter().map(|s| s.da.len() as u64).sum()
    }

    pub fn in_len(&self) -> u64 {
        self.images.iter().map(|s| s.indices.len() as u64).sum()
    }

    pub fn count_npf(&self) -> u64 {
        self.images
            .iter()
            .flat_map(|s| &s.channels)
            .flat_map(|c| &c.blocks)
            .filter(|b| b.npf)
            .count() as u64
    }

    pub fn npc_channels(&self) -> u64 {
        self.images
            .iter()
            .flat_map(|s| &s.channels)
            .filter(|c| c.npc)
            .count() as u64
    }
}

fn real_col(config: &ConvConfig, wp: usize) -> Option<usize> {
    if wp < config.pad_left || wp >= config.pad_left + config.iw {
        None
    } else {
        Some(wp - config.pad_left)
    }
}

fn col_nze_count(plane: &[f32], config: &ConvConfig, wp: usize) -> usize {
    match real_col(config, wp) {
        None => 0,
        Some(w) => (0..config.ih)
            .filter(|&h| plane[h * config.iw + w] != 0.0)
            .count(),
    }
}

/// Append one column's nonzeros (and plain indices) to the streams. Returns
/// the number appended.
fn emit_column_plain(
    plane: &[f32],
    config: &ConvConfig,
    wp: usize,
    local_col: usize,
    da: &mut Vec<f32>,
    indices: &mut Vec<i32>,
) -> usize {
    let Some(w) = real_col(config, wp) else {
        return 0;
    };
    let mut emitted = 0;
    for h in 0..config.ih {
        let v = plane[h * config.iw + w];
        if v != 0.0 {
            let hp = h + config.pad_top;
            da.push(v);
            indices.push((local_col + hp * config.kw) as i32);
            emitted += 1;
        }
    }
    emitted
}

/// Append one fully-overlapped column in pattern form: padded rows are walked
/// in aligned groups of four; groups of 3-4 nonzeros emit `{first index,
/// pattern}`, groups of 1-2 emit each index negated.
fn emit_column_patterns(
    plane: &[f32],
    config: &ConvConfig,
    wp: usize,
    local_col: usize,
    da: &mut Vec<f32>,
    indices: &mut Vec<i32>,
) -> usize {
    let Some(w) = real_col(config, wp) else {
        return 0;
    };
    let ihp = config.padded_h();
    let mut emitted = 0;
    let mut members: Vec<(usize, f32)> = Vec::with_capacity(4);
    for group_start in (0..ihp).step_by(4) {
        members.clear();
        for hp in group_start..(group_start + 4).min(ihp) {
            let h = hp as i64 - config.pad_top as i64;
            if h < 0 || h >= config.ih as i64 {
                continue;
            }
            let v = plane[h as usize * config.iw + w];
            if v != 0.0 {
                members.push((hp, v));
            }
        }
        for &(_, v) in &members {
            da.push(v);
        }
        emitted += members.len();
        match members.len() {
            0 => {}
            1 | 2 => {
                for &(hp, _) in &members {
                    let idx = (local_col + hp * config.kw) as i32;
                    // local_col == Kw-1 >= 1 here, so negation stays unambiguous.
                    assert!(idx >= 1, "fully-overlapped index must be positive");
                    indices.push(-idx);
                }
            }
            _ => {
                let first = (local_col + members[0].0 * config.kw) as i32;
                let mut pattern = 0i32;
                for &(hp, _) in &members {
                    pattern |= 1 << (hp % 4);
                }
                indices.push(first);
                indices.push(pattern);
            }
        }
    }
    emitted
}

pub(crate) fn encode_map(
    map: &ActivationMap,
    config: &ConvConfig,
    codec: Codec,
) -> Result<EncodedMap> {
    config.check_map(map)?;
    config.require_sparse_ok()?;
    let cls = classify_columns(config, config.padded_w())?;

    let mut images = Vec::with_capacity(map.n_images());
    for n in 0..map.n_images() {
        // Densities above one half are rare for post-activation maps.
        let hint = config.ih * config.iw * map.channels() / 2;
        let mut set = StreamSet {
            ptr: Vec::new(),
            da: Vec::with_capacity(hint),
            indices: Vec::with_capacity(hint),
            channels: Vec::with_capacity(map.channels()),
        };
        for c in 0..map.channels() {
            encode_channel(map, n, c, config, &cls, codec, &mut set);
        }
        images.push(set);
    }
    Ok(EncodedMap {
        codec,
        n_images: map.n_images(),
        channels: map.channels(),
        config: *config,
        images,
    })
}

fn encode_channel(
    map: &ActivationMap,
    n: usize,
    c: usize,
    config: &ConvConfig,
    cls: &ColumnClassification,
    codec: Codec,
    set: &mut StreamSet,
) {
    let plane = map.channel_plane(n, c);
    let ow = cls.ow();
    let kw = config.kw;
    let channel_nze: usize = plane.iter().filter(|&&v| v != 0.0).count();

    if channel_nze == 0 {
        set.channels.push(ChannelMeta {
            npc: true,
            ptr_start: set.ptr.len(),
            blocks: vec![],
        });
        set.ptr.push(NPC);
        return;
    }

    let mut meta = ChannelMeta {
        npc: false,
        ptr_start: set.ptr.len(),
        blocks: vec![],
    };

    if kw == 1 {
        // Single block covering every one-column partition.
        let block = BlockMeta {
            tag: 0,
            p_type: 0,
            npf: false,
            ptr_start: set.ptr.len(),
            da_base: set.da.len(),
            in_base: set.indices.len(),
        };
        set.ptr.push(0);
        let mut cum = 0usize;
        for wp in 0..cls.padded_w() {
            cum += emit_column_plain(plane, config, wp, 0, &mut set.da, &mut set.indices);
            set.ptr.push(cum as i32);
        }
        meta.blocks.push(block);
        set.channels.push(meta);
        return;
    }

    if cls.emits_nop() {
        let block = BlockMeta {
            tag: 0,
            p_type: 0,
            npf: false,
            ptr_start: set.ptr.len(),
            da_base: set.da.len(),
            in_base: set.indices.len(),
        };
        set.ptr.push(0);
        let mut cum = emit_column_plain(plane, config, 0, 0, &mut set.da, &mut set.indices);
        set.ptr.push(cum as i32);
        for wp in cls.columns_of_type(0) {
            if wp == 0 {
                continue;
            }
            cum += emit_column_plain(
                plane,
                config,
                wp,
                cls.column(wp).local_col,
                &mut set.da,
                &mut set.indices,
            );
        }
        set.ptr.push(cum as i32);
        meta.blocks.push(block);
    }

    for p_type in cls.first_block_type()..=(kw - 1) {
        let tag = (p_type + 1) as i32;
        let cols = cls.columns_of_type(p_type);
        let total: usize = cols
            .iter()
            .map(|&wp| col_nze_count(plane, config, wp))
            .sum();
        let block = BlockMeta {
            tag,
            p_type,
            npf: total == 0,
            ptr_start: set.ptr.len(),
            da_base: set.da.len(),
            in_base: set.indices.len(),
        };
        if total == 0 {
            set.ptr.push(tag);
            set.ptr.push(NPF);
            meta.blocks.push(block);
            continue;
        }
        set.ptr.push(tag);
        let pattern_coded = codec == Codec::Cps && p_type == kw - 1;
        let mut slots = vec![NO_NEW_COLUMN; ow];
        let mut cum = 0usize;
        for wp in cols {
            let info = cls.column(wp);
            cum += if pattern_coded {
                emit_column_patterns(
                    plane,
                    config,
                    wp,
                    info.local_col,
                    &mut set.da,
                    &mut set.indices,
                )
            } else {
                emit_column_plain(
                    plane,
                    config,
                    wp,
                    info.local_col,
                    &mut set.da,
                    &mut set.indices,
                )
            };
            slots[info.owner] = cum as i32;
        }
        set.ptr.extend_from_slice(&slots);
        meta.blocks.push(block);
    }
    set.channels.push(meta);
}

/// Count the `in`-stream entries of one fully-overlapped pattern block holding
/// `total` nonzeros, starting at `in_base`. Used to rebuild block offsets from
/// raw streams; validates the group structure as it goes.
fn pattern_entry_span(indices: &[i32], in_base: usize, total: usize) -> Result<usize> {
    let mut pos = in_base;
    let mut consumed = 0usize;
    while consumed < total {
        let v = *indices
            .get(pos)
            .ok_or_else(|| Error::Corrupt("index stream exhausted before data stream".into()))?;
        if v < 0 {
            pos += 1;
            consumed += 1;
        } else {
            let code = *indices
                .get(pos + 1)
                .ok_or_else(|| Error::Corrupt("pattern code missing after index".into()))?;
            let extra = crate::cps::pattern_size(code)?;
            pos += 2;
            consumed += 1 + extra;
        }
    }
    if consumed != total {
        return Err(Error::Corrupt(
            "pattern group overruns its partition".into(),
        ));
    }
    Ok(pos - in_base)
}

/// Re-derive the per-channel block structure from raw streams, validating
/// sentinel placement, tag order, cumulative monotonicity, and stream lengths.
pub(crate) fn rebuild_metas(
    ptr: &[i32],
    da_len: usize,
    indices: &[i32],
    config: &ConvConfig,
    channels: usize,
    codec: Codec,
) -> Result<Vec<ChannelMeta>> {
    let cls = classify_columns(config, config.padded_w())?;
    let ow = cls.ow();
    let kw = config.kw;
    let mut metas = Vec::with_capacity(channels);
    let mut pos = 0usize;
    let mut da_base = 0usize;
    let mut in_base = 0usize;

    let read = |pos: usize| -> Result<i32> {
        ptr.get(pos)
            .copied()
            .ok_or_else(|| Error::Corrupt("ptr stream truncated".into()))
    };
    // Validates one run of cumulative counts and returns the block total.
    let block_total = |start: usize, len: usize, allow_gap: bool| -> Result<usize> {
        let mut prev = 0i32;
        for i in 0..len {
            let c = read(start + i)?;
            if c == NO_NEW_COLUMN && allow_gap {
                continue;
            }
            if c < 0 {
                return Err(Error::Corrupt(format!("negative non-sentinel count {c}")));
            }
            if c < prev {
                return Err(Error::Corrupt(format!(
                    "cumulative count decreases: {prev} -> {c}"
                )));
            }
            prev = c;
        }
        Ok(prev as usize)
    };

    for _ in 0..channels {
        let first = read(pos)?;
        if first == NPC {
            metas.push(ChannelMeta {
                npc: true,
                ptr_start: pos,
                blocks: vec![],
            });
            pos += 1;
            continue;
        }
        let mut meta = ChannelMeta {
            npc: false,
            ptr_start: pos,
            blocks: vec![],
        };

        if kw == 1 {
            if first != 0 {
                return Err(Error::Corrupt(format!("expected tag 0, found {first}")));
            }
            let total = block_total(pos + 1, ow, false)?;
            meta.blocks.push(BlockMeta {
                tag: 0,
                p_type: 0,
                npf: false,
                ptr_start: pos,
                da_base,
                in_base,
            });
            pos += 1 + ow;
            da_base += total;
            in_base += total;
            metas.push(meta);
            continue;
        }

        if cls.emits_nop() {
            if read(pos)? != 0 {
                return Err(Error::Corrupt(format!(
                    "expected NOP tag 0, found {}",
                    read(pos)?
                )));
            }
            let total = block_total(pos + 1, 2, false)?;
            meta.blocks.push(BlockMeta {
                tag: 0,
                p_type: 0,
                npf: false,
                ptr_start: pos,
                da_base,
                in_base,
            });
            pos += 3;
            da_base += total;
            in_base += total;
        }

        for p_type in cls.first_block_type()..=(kw - 1) {
            let tag = (p_type + 1) as i32;
            let found = read(pos)?;
            if found != tag {
                return Err(Error::Corrupt(format!(
                    "expected block tag {tag}, found {found}"
                )));
            }
            if read(pos + 1)? == NPF {
                meta.blocks.push(BlockMeta {
                    tag,
                    p_type,
                    npf: true,
                    ptr_start: pos,
                    da_base,
                    in_base,
                });
                pos += 2;
                continue;
            }
            let total = block_total(pos + 1, ow, true)?;
            if total == 0 {
                return Err(Error::Corrupt(
                    "empty block not collapsed to skip flag".into(),
                ));
            }
            meta.blocks.push(BlockMeta {
                tag,
                p_type,
                npf: false,
                ptr_start: pos,
                da_base,
                in_base,
            });
            pos += 1 + ow;
            let pattern_coded = codec == Codec::Cps && p_type == kw - 1;
            in_base += if pattern_coded {
                pattern_entry_span(indices, in_base, total)?
            } else {
                total
            };
            da_base += total;
        }
        metas.push(meta);
    }

    if pos != ptr.len() {
        return Err(Error::Corrupt(format!(
            "{} trailing ptr entries",
            ptr.len() - pos
        )));
    }
    if da_base != da_len {
        return Err(Error::Corrupt(format!(
            "ptr accounts for {da_base} data entries, stream holds {da_len}"
        )));
    }
    if in_base != indices.len() {
        return Err(Error::Corrupt(format!(
            "ptr accounts for {in_base} index entries, stream holds {}",
            indices.len()
        )));
    }
    Ok(metas)
}

/// Resolved view of one block's partitions: `(partition, da range)` triples in
/// stream order, with `-1` slots resolved to the previous cumulative count.
pub(crate) fn block_partitions(
    set: &StreamSet,
    block: &BlockMeta,
    config: &ConvConfig,
    ow: usize,
) -> Result<Vec<(usize, usize, usize)>> {
    let mut out = Vec::new();
    let counts = set
        .ptr
        .get(block.ptr_start + 1..)
        .ok_or_else(|| Error::Corrupt("ptr stream truncated".into()))?;
    if block.tag == 0 && config.kw >= 2 {
        // NOP: cumulative after the first column, then after the rest.
        if counts.len() < 2 {
            return Err(Error::Corrupt("NOP block truncated".into()));
        }
        let (c_a, c_b) = (counts[0], counts[1]);
        if c_a < 0 || c_b < c_a {
            return Err(Error::Corrupt("malformed NOP counts".into()));
        }
        out.push((0, 0, c_a as usize));
        out.push((ow - 1, c_a as usize, c_b as usize));
        return Ok(out);
    }
    let counts = counts
        .get(..ow)
        .ok_or_else(|| Error::Corrupt("block counts truncated".into()))?;
    let mut prev = 0usize;
    for (s, &c) in counts.iter().enumerate() {
        let c = if c == NO_NEW_COLUMN { prev } else { c as usize };
        if c < prev {
            return Err(Error::Corrupt("cumulative count decreases".into()));
        }
        out.push((s, prev, c));
        prev = c;
    }
    Ok(out)
}

/// Drive one block's entries through `visit(da_position, local_index,
/// partition)`. Pattern-coded blocks are decoded on the fly; every index is
/// validated before the visitor sees it, so scatter kernels can index weights
/// and output planes unchecked.
pub(crate) fn walk_block_entries<F>(
    set: &StreamSet,
    block: &BlockMeta,
    config: &ConvConfig,
    ow: usize,
    pattern_coded: bool,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(usize, i32, usize) -> Result<()>,
{
    let kw = config.kw;
    let index_bound = (config.padded_h() * kw) as i32;
    let check_index = |idx: i32| -> Result<i32> {
        if idx < 0 || idx >= index_bound || (idx as usize % kw) < block.p_type {
            return Err(Error::Corrupt(format!(
                "local index {idx} invalid for block type {}",
                block.tag
            )));
        }
        Ok(idx)
    };

    let mut in_pos = block.in_base;
    for (s, lo, hi) in block_partitions(set, block, config, ow)? {
        if hi == lo {
            continue;
        }
        if block.da_base + hi > set.da.len() {
            return Err(Error::Corrupt("counts exceed the data stream".into()));
        }
        if s + block.p_type >= ow {
            return Err(Error::Corrupt(format!(
                "partition {s} cannot fan out {} columns",
                block.p_type + 1
            )));
        }
        if !pattern_coded {
            for t in lo..hi {
                let idx = check_index(set.indices[block.in_base + t])?;
                visit(block.da_base + t, idx, s)?;
            }
            continue;
        }
        let mut da_pos = lo;
        while da_pos < hi {
            let raw = *set.indices.get(in_pos).ok_or_else(|| {
                Error::Corrupt("index stream exhausted before data stream".into())
            })?;
            if raw < 0 {
                let idx = check_index(-raw)?;
                in_pos += 1;
                visit(block.da_base + da_pos, idx, s)?;
                da_pos += 1;
            } else {
                let code = *set
                    .indices
                    .get(in_pos + 1)
                    .ok_or_else(|| Error::Corrupt("pattern code missing after index".into()))?;
                let extra = crate::cps::pattern_size(code)?;
                in_pos += 2;
                let mut idx = check_index(raw)?;
                visit(block.da_base + da_pos, idx, s)?;
                da_pos += 1;
                for g in 1..=extra {
                    if da_pos >= hi {
                        return Err(Error::Corrupt(
                            "data stream exhausted inside a pattern group".into(),
                        ));
                    }
                    idx = check_index(idx + (kw * crate::cps::next_offset(code, g)?) as i32)?;
                    visit(block.da_base + da_pos, idx, s)?;
                    da_pos += 1;
                }
            }
        }
    }
    Ok(())
}

/// Decode every stored nonzero back to `(channel-local image, channel, padded
/// row, padded column, value)`. The owner partition plus the local column
/// reconstruct the padded column exactly.
pub(crate) fn decode_entries(enc: &EncodedMap) -> Result<Vec<StoredNonzero>> {
    let config = &enc.config;
    let (_, ow) = config.output_dims();
    let kw = config.kw;
    let mut out = Vec::new();
    for (n, set) in enc.images.iter().enumerate() {
        for (c, meta) in set.channels.iter().enumerate() {
            for block in meta.blocks.iter().filter(|b| !b.npf) {
                let pattern_coded = enc.codec == Codec::Cps && kw >= 2 && block.p_type == kw - 1;
                walk_block_entries(set, block, config, ow, pattern_coded, |da_pos, idx, s| {
                    let hp = idx as usize / kw;
                    let wp = s + idx as usize % kw;
                    out.push((n, c, hp, wp, set.da[da_pos]));
                    Ok(())
                })?;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{gen_random_map, ValueDist};

    fn encode(
        dims: (usize, usize, usize, usize),
        density: f64,
        seed: u64,
        config: &ConvConfig,
        codec: Codec,
    ) -> EncodedMap {
        let map =
            gen_random_map(dims, density, ValueDist::SmallInt { lo: -4, hi: 4 }, seed).unwrap();
        encode_map(&map, config, codec).unwrap()
    }

    #[test]
    fn rebuild_matches_encoder_metadata() {
        for (codec, seed) in [
            (Codec::Cpo, 1u64),
            (Codec::Cps, 2),
            (Codec::Cpo, 3),
            (Codec::Cps, 4),
        ] {
            for config in [
                ConvConfig::valid(8, 8, 4, 4).unwrap(),
                ConvConfig::same(9, 7, 3, 3).unwrap(),
                ConvConfig::same(6, 9, 1, 7).unwrap(),
                ConvConfig::valid(9, 6, 7, 1).unwrap(),
            ] {
                let enc = encode((2, 3, config.ih, config.iw), 0.3, seed, &config, codec);
                for set in &enc.images {
                    let rebuilt = rebuild_metas(
                        &set.ptr,
                        set.da.len(),
                        &set.indices,
                        &config,
                        enc.channels,
                        codec,
                    )
                    .unwrap();
                    assert_eq!(rebuilt, set.channels);
                }
            }
        }
    }

    #[test]
    fn zero_channels_collapse_to_npc() {
        let config = ConvConfig::valid(6, 6, 3, 3).unwrap();
        let map = ActivationMap::zeros(1, 4, 6, 6).unwrap();
        let enc = encode_map(&map, &config, Codec::Cpo).unwrap();
        assert_eq!(enc.images[0].ptr, vec![NPC; 4]);
        assert!(enc.images[0].da.is_empty());
        assert_eq!(enc.npc_channels(), 4);
    }

    #[test]
    fn rebuild_rejects_corruption() {
        let config = ConvConfig::valid(8, 8, 4, 4).unwrap();
        let enc = encode((1, 1, 8, 8), 0.4, 9, &config, Codec::Cpo);
        let set = &enc.images[0];
        // Flip one cumulative count down.
        let mut bad = set.ptr.clone();
        let pos = bad.iter().rposition(|&v| v > 1).unwrap();
        bad[pos] = 0;
        assert!(rebuild_metas(&bad, set.da.len(), &set.indices, &config, 1, Codec::Cpo).is_err());
        // Truncate the data stream.
        assert!(rebuild_metas(
            &set.ptr,
            set.da.len() - 1,
            &set.indices,
            &config,
            1,
            Codec::Cpo
        )
        .is_err());
    }

    #[test]
    fn encoder_refuses_strides_and_pointwise() {
        let map =
            gen_random_map((1, 1, 9, 9), 0.5, ValueDist::SmallInt { lo: -2, hi: 2 }, 0).unwrap();
        let strided = ConvConfig::valid_strided(9, 9, 3, 3, 2, 2).unwrap();
        assert!(matches!(
            encode_map(&map, &strided, Codec::Cpo),
            Err(Error::Unsupported(_))
        ));
        let pointwise = ConvConfig::valid(9, 9, 1, 1).unwrap();
        assert!(matches!(
            encode_map(&map, &pointwise, Codec::Cpo),
            Err(Error::Unsupported(_))
        ));
    }
}
