//! On-disk exchange formats: the 9-column profile CSV, the plan file, and the
//! per-layer density file.
//!
//! Profile CSV columns, in order: `layer_id, algo, density, encode_ns,
//! conv_ns, total_ns, mac_count, size_elems, cr_vs_im2col`. Times are integer
//! nanoseconds, sizes are elements. One row per (layer, algorithm); replaying
//! a CSV reconstructs profiles without re-timing anything.

use crate::error::{Error, Result};
use crate::profile::{AlgoProfile, LayerProfile};
use crate::select::{LayerChoice, SelectionMode, SelectionPlan};
use cpoconv::Algo;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProfileRow {
    pub layer_id: usize,
    pub algo: String,
    pub density: f64,
    pub encode_ns: u64,
    pub conv_ns: u64,
    pub total_ns: u64,
    pub mac_count: u64,
    pub size_elems: u64,
    pub cr_vs_im2col: f64,
}

/// Flatten profiles into CSV rows, one per recorded algorithm.
pub fn profile_rows(profiles: &[LayerProfile]) -> Vec<ProfileRow> {
    let mut rows = Vec::new();
    for profile in profiles {
        let im2col_size = profile.im2col.total_size;
        let mut push = |algo: Algo, ap: &AlgoProfile| {
            rows.push(ProfileRow {
                layer_id: profile.layer_id,
                algo: algo.to_string(),
                density: profile.density_mean,
                encode_ns: ap.encode_ns,
                conv_ns: ap.conv_ns,
                total_ns: ap.total_ns(),
                mac_count: ap.mac_count,
                size_elems: ap.total_size,
                cr_vs_im2col: im2col_size as f64 / ap.total_size as f64,
            });
        };
        push(Algo::Im2col, &profile.im2col);
        if let Some(ap) = &profile.cpo {
            push(Algo::Cpo, ap);
        }
        if let Some(ap) = &profile.cps {
            push(Algo::Cps, ap);
        }
    }
    rows
}

pub fn write_profile_csv<W: Write>(writer: W, rows: &[ProfileRow]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    for row in rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_profile_csv(path: impl AsRef<Path>) -> Result<Vec<ProfileRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

/// Regroup CSV rows into per-layer profiles for replayed selection. A layer
/// with only a dense row is treated as ineligible for the sparse routes.
pub fn profiles_from_rows(rows: &[ProfileRow]) -> Result<Vec<LayerProfile>> {
    let mut by_layer: BTreeMap<usize, Vec<&ProfileRow>> = BTreeMap::new();
    for row in rows {
        by_layer.entry(row.layer_id).or_default().push(row);
    }
    let mut profiles = Vec::with_capacity(by_layer.len());
    for (layer_id, rows) in by_layer {
        let find = |name: &str| -> Option<AlgoProfile> {
            rows.iter().find(|r| r.algo == name).map(|r| AlgoProfile {
                encode_ns: r.encode_ns,
                conv_ns: r.conv_ns,
                total_size: r.size_elems,
                mac_count: r.mac_count,
            })
        };
        let im2col = find("im2col").ok_or_else(|| {
            Error::IncompleteProfile(format!("layer {layer_id} has no im2col row"))
        })?;
        let cpo = find("cpo");
        let cps = find("cps");
        let eligible = cpo.is_some() || cps.is_some();
        profiles.push(LayerProfile {
            layer_id,
            eligible,
            im2col,
            cpo,
            cps,
            density_mean: rows[0].density,
            density_variance: 0.0,
        });
    }
    Ok(profiles)
}

/// Plan file: a `# mode=... seed=...` header, then one `layer_id algo` line
/// per layer.
pub fn write_plan<W: Write>(mut writer: W, plan: &SelectionPlan, seed: u64) -> Result<()> {
    writeln!(writer, "# mode={} seed={}", plan.mode, seed)?;
    for choice in &plan.choices {
        writeln!(writer, "{} {}", choice.layer_id, choice.algo)?;
    }
    Ok(())
}

pub fn read_plan(path: impl AsRef<Path>) -> Result<(SelectionMode, u64, Vec<LayerChoice>)> {
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty plan file".into()))??;
    let mut mode = None;
    let mut seed = 0u64;
    for token in header.trim_start_matches('#').split_whitespace() {
        if let Some(value) = token.strip_prefix("mode=") {
            mode = Some(SelectionMode::from_str(value)?);
        } else if let Some(value) = token.strip_prefix("seed=") {
            seed = value
                .parse()
                .map_err(|_| Error::Format(format!("bad seed {value:?}")))?;
        }
    }
    let mode = mode.ok_or_else(|| Error::Format("plan header lacks a mode".into()))?;
    let mut choices = Vec::new();
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (id, algo) = (parts.next(), parts.next());
        let (Some(id), Some(algo)) = (id, algo) else {
            return Err(Error::Format(format!("bad plan line {line:?}")));
        };
        choices.push(LayerChoice {
            layer_id: id
                .parse()
                .map_err(|_| Error::Format(format!("bad layer id {id:?}")))?,
            algo: Algo::from_str(algo).map_err(|e| Error::Format(e.to_string()))?,
        });
    }
    Ok((mode, seed, choices))
}

/// Density file: one `layer_id density` line per layer.
pub fn read_density_file(path: impl AsRef<Path>) -> Result<BTreeMap<usize, f64>> {
    let file = std::fs::File::open(path)?;
    let mut out = BTreeMap::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(id), Some(density)) = (parts.next(), parts.next()) else {
            return Err(Error::Format(format!("bad density line {line:?}")));
        };
        let id: usize = id
            .parse()
            .map_err(|_| Error::Format(format!("bad layer id {id:?}")))?;
        let density: f64 = density
            .parse()
            .map_err(|_| Error::Format(format!("bad density {density:?}")))?;
        if !(0.0..=1.0).contains(&density) {
            return Err(Error::Format(format!("density {density} outside [0, 1]")));
        }
        out.insert(id, density);
    }
    Ok(out)
}

pub fn write_density_file<W: Write>(mut writer: W, densities: &BTreeMap<usize, f64>) -> Result<()> {
    for (id, density) in densities {
        writeln!(writer, "{id} {density}")?;
    }
    Ok(())
}
