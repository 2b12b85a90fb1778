//! Horizontal partitioning of the padded frame.
//!
//! At unit stride the frame splits into `Ow` partitions, each a `Kw`-wide
//! window `[s, s+Kw)`. A column is classified by how many windows cover it
//! (its overlap type) and is *owned* by the first partition it appears in;
//! within the owner's window it sits at `local_col`, which is what the
//! encoders store as the horizontal part of an index.

use crate::error::{Error, Result};
use crate::tensor::ConvConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnInfo {
    /// `coverage - 1`; 0 means covered by a single window (the NOP region).
    pub overlap_type: usize,
    /// Partition in which the column first appears.
    pub owner: usize,
    /// Position of the column inside its owner's window, `0..Kw`.
    pub local_col: usize,
}

/// Per-column classification of a padded frame plus the block schedule the
/// encoders emit: an optional NOP block, then one block per overlap type from
/// `max(1, pad_left) + 1` up to `Kw`.
#[derive(Debug, Clone)]
pub struct ColumnClassification {
    kw: usize,
    ow: usize,
    padded_w: usize,
    pad_left: usize,
    columns: Vec<ColumnInfo>,
}

impl ColumnClassification {
    pub fn kw(&self) -> usize {
        self.kw
    }

    pub fn ow(&self) -> usize {
        self.ow
    }

    pub fn padded_w(&self) -> usize {
        self.padded_w
    }

    pub fn column(&self, w: usize) -> ColumnInfo {
        self.columns[w]
    }

    /// The NOP block only exists with no left padding (and a real overlap
    /// structure, i.e. `Kw >= 2`).
    pub fn emits_nop(&self) -> bool {
        self.pad_left == 0 && self.kw >= 2
    }

    /// First overlap type with its own block: `M = max(1, pad_left)`.
    pub fn first_block_type(&self) -> usize {
        self.pad_left.max(1)
    }

    /// Columns of one overlap type, ascending; owners are non-decreasing.
    pub fn columns_of_type(&self, overlap_type: usize) -> Vec<usize> {
        (0..self.padded_w)
            .filter(|&w| self.columns[w].overlap_type == overlap_type)
            .collect()
    }
}

/// Classify every column of a padded frame of width `iw_padded` under
/// `config`'s kernel and padding.
pub fn classify_columns(config: &ConvConfig, iw_padded: usize) -> Result<ColumnClassification> {
    if config.sw != 1 {
        return Err(Error::Unsupported(format!(
            "column classification requires unit horizontal stride, got {}",
            config.sw
        )));
    }
    let kw = config.kw;
    if iw_padded < kw {
        return Err(Error::Config(format!(
            "padded width {iw_padded} smaller than kernel {kw}"
        )));
    }
    let ow = iw_padded - kw + 1;
    let columns = (0..iw_padded)
        .map(|w| {
            let coverage = w.min(kw - 1).min(iw_padded - 1 - w).min(ow - 1) + 1;
            let owner = (w + 1).saturating_sub(kw);
            ColumnInfo {
                overlap_type: coverage - 1,
                owner,
                local_col: w - owner,
            }
        })
        .collect();
    let cls = ColumnClassification {
        kw,
        ow,
        padded_w: iw_padded,
        pad_left: config.pad_left,
        columns,
    };

    // Every real (non-pad) column must fall in an emitted block, otherwise its
    // nonzeros would be dropped. Holds whenever pad_right >= pad_left and the
    // output is at least pad_left + 1 wide; reject the rest.
    if kw >= 2 {
        let first = cls.first_block_type();
        let real = config.pad_left..config.pad_left + config.iw;
        for w in real {
            let t = cls.columns[w].overlap_type;
            let emitted = (t == 0 && cls.emits_nop()) || (t >= first && t < kw);
            if !emitted {
                return Err(Error::Unsupported(format!(
                    "column {w} (overlap type {t}) falls outside the emitted block range; \
                     geometry too narrow for this padding"
                )));
            }
        }
    }
    Ok(cls)
}
