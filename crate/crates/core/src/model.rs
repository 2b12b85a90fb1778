//! Analytic structure sizes, compression ratios, and break-even density bounds.
//!
//! Sizes are element counts (one stored scalar = one element), exactly the
//! unit the formulas are written in. Two accountings coexist: *actual* (with
//! the map's real skip-flag counts, reconciled exactly against measured stream
//! lengths) and *worst case* (no left pad, no skips), which is what the
//! density bounds assume — the actual encoding can only be smaller.

use crate::baseline::CsccEncoding;
use crate::cpo::CpoEncoding;
use crate::cps::{CpsEncoding, Set4Census};
use crate::error::{Error, Result};
use crate::tensor::{ConvConfig, DensityProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algo {
    Im2col,
    Mec,
    Cscc,
    Cpo,
    Cps,
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Algo::Im2col => "im2col",
            Algo::Mec => "mec",
            Algo::Cscc => "cscc",
            Algo::Cpo => "cpo",
            Algo::Cps => "cps",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "im2col" => Ok(Algo::Im2col),
            "mec" => Ok(Algo::Mec),
            "cscc" => Ok(Algo::Cscc),
            "cpo" => Ok(Algo::Cpo),
            "cps" => Ok(Algo::Cps),
            other => Err(Error::Usage(format!("unknown algorithm {other:?}"))),
        }
    }
}

fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

/// Lowered-matrix elements of im2col: `In*Oh*Ow*Ic*Kw*Kh`.
pub fn size_im2col(config: &ConvConfig, n_images: usize, channels: usize) -> u64 {
    (n_images * config.oh * config.ow * channels * config.kw * config.kh) as u64
}

/// Lowered-matrix elements of the memory-efficient lowering: `In*Ow*Kw*Ih*Ic`.
pub fn size_mec(config: &ConvConfig, n_images: usize, channels: usize) -> u64 {
    (n_images * config.ow * config.kw * config.ih * channels) as u64
}

/// CSR elements of the split-compression baseline with a given lowered-matrix
/// density: `In*Ic*(Ow+1) + 2*Ow*Kw*Ih*Ic*rho_hat`.
pub fn size_cscc(
    config: &ConvConfig,
    n_images: usize,
    channels: usize,
    rho_hat: f64,
) -> Result<f64> {
    let per_image = (config.ow * config.kw * config.ih * channels) as f64;
    if !(0.0..=n_images as f64).contains(&rho_hat) {
        return Err(Error::Config(format!(
            "lowered-matrix density {rho_hat} outside [0, {n_images}]"
        )));
    }
    Ok((n_images * channels) as f64 * (config.ow as f64 + 1.0) + 2.0 * per_image * rho_hat)
}

/// Same formula with the nonzero count substituted back, for exact
/// reconciliation against measured encodings.
pub fn size_cscc_exact(config: &ConvConfig, n_images: usize, channels: usize, nnz: u64) -> u64 {
    (n_images * channels) as u64 * (config.ow as u64 + 1) + 2 * nnz
}

/// Worst-case per-channel pointer terms: `(NOP, OP)` element counts assuming
/// no left pad and no skip flags.
fn worst_case_ptr_terms(config: &ConvConfig) -> (u64, u64) {
    let ow = config.ow as u64;
    if config.kw == 1 {
        (0, 1 + ow)
    } else {
        (3, (ceil_div(config.kw, config.sw) as u64 - 1) * (1 + ow))
    }
}

/// Actual per-channel pointer terms under this config's padding.
fn actual_ptr_terms(config: &ConvConfig) -> (u64, u64) {
    let ow = config.ow as u64;
    if config.kw == 1 {
        (0, 1 + ow)
    } else {
        let nop = if config.pad_left == 0 { 3 } else { 0 };
        let m = config.pad_left.max(1) as u64;
        let op = (ceil_div(config.kw, config.sw) as u64).saturating_sub(m) * (1 + ow);
        (nop, op)
    }
}

/// Pointer stream length with actual skip counts: live channels pay
/// `NOP + OP` each, all-zero channels collapse to one sentinel, and every
/// skipped block refunds `Ow - 1` entries.
pub fn analytic_ptr_size(config: &ConvConfig, profile: &DensityProfile, count_npf: u64) -> u64 {
    let (nop, op) = actual_ptr_terms(config);
    let total_channels = (profile.n_images() * profile.channels()) as u64;
    let zero = profile.zero_channels();
    (total_channels - zero) * (nop + op) + zero - count_npf * (config.ow as u64 - 1)
}

/// Total CPO elements with actual skip counts: pointer stream plus one data
/// and one index entry per nonzero.
pub fn size_cpo_analytic(config: &ConvConfig, profile: &DensityProfile, count_npf: u64) -> u64 {
    analytic_ptr_size(config, profile, count_npf) + 2 * profile.nze_total()
}

/// Total CPS elements: pointer and data streams as CPO, index stream from the
/// set4 census.
pub fn size_cps_analytic(
    config: &ConvConfig,
    profile: &DensityProfile,
    census: &Set4Census,
    count_npf: u64,
) -> u64 {
    analytic_ptr_size(config, profile, count_npf) + profile.nze_total() + census.in_size_cps()
}

/// Worst-case CPO total for a given nonzero count (no skips, no left pad).
pub fn worst_case_cpo_size(
    config: &ConvConfig,
    n_images: usize,
    channels: usize,
    nze_total: u64,
) -> u64 {
    let (nop, op) = worst_case_ptr_terms(config);
    (n_images * channels) as u64 * (nop + op) + 2 * nze_total
}

/// Measured element counts of one structure plus its analytic prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeReport {
    pub algo: Algo,
    pub elements_ptr: u64,
    pub elements_da: u64,
    pub elements_in: u64,
    pub total: u64,
    pub analytic_total: u64,
    pub cr_vs_im2col: f64,
}

impl SizeReport {
    fn build(algo: Algo, ptr: u64, da: u64, indices: u64, analytic: u64, im2col: u64) -> Self {
        let total = ptr + da + indices;
        SizeReport {
            algo,
            elements_ptr: ptr,
            elements_da: da,
            elements_in: indices,
            total,
            analytic_total: analytic,
            cr_vs_im2col: im2col as f64 / total as f64,
        }
    }
}

pub fn report_im2col(config: &ConvConfig, n_images: usize, channels: usize) -> SizeReport {
    let size = size_im2col(config, n_images, channels);
    SizeReport::build(Algo::Im2col, 0, size, 0, size, size)
}

pub fn report_mec(config: &ConvConfig, n_images: usize, channels: usize) -> SizeReport {
    let size = size_mec(config, n_images, channels);
    SizeReport::build(
        Algo::Mec,
        0,
        size,
        0,
        size,
        size_im2col(config, n_images, channels),
    )
}

pub fn report_cscc(enc: &CsccEncoding, config: &ConvConfig) -> SizeReport {
    let offsets = (enc.n_images() * enc.channels()) as u64 * (config.ow as u64 + 1);
    let nnz = enc.total_nnz();
    let analytic = size_cscc_exact(config, enc.n_images(), enc.channels(), nnz);
    SizeReport::build(
        Algo::Cscc,
        offsets,
        nnz,
        nnz,
        analytic,
        size_im2col(config, enc.n_images(), enc.channels()),
    )
}

pub fn report_cpo(enc: &CpoEncoding, profile: &DensityProfile) -> Result<SizeReport> {
    check_profile(profile, enc.n_images(), enc.channels())?;
    let config = enc.config();
    let analytic = size_cpo_analytic(config, profile, enc.count_npf());
    Ok(SizeReport::build(
        Algo::Cpo,
        enc.ptr_len(),
        enc.da_len(),
        enc.in_len(),
        analytic,
        size_im2col(config, enc.n_images(), enc.channels()),
    ))
}

pub fn report_cps(
    enc: &CpsEncoding,
    profile: &DensityProfile,
    census: &Set4Census,
) -> Result<SizeReport> {
    check_profile(profile, enc.n_images(), enc.channels())?;
    let config = enc.config();
    let analytic = size_cps_analytic(config, profile, census, enc.count_npf());
    Ok(SizeReport::build(
        Algo::Cps,
        enc.ptr_len(),
        enc.da_len(),
        enc.in_len(),
        analytic,
        size_im2col(config, enc.n_images(), enc.channels()),
    ))
}

fn check_profile(profile: &DensityProfile, n_images: usize, channels: usize) -> Result<()> {
    if profile.n_images() != n_images || profile.channels() != channels {
        return Err(Error::Shape(
            "density profile does not match the encoding".into(),
        ));
    }
    Ok(())
}

/// `base.total / other.total`; with im2col as the base this is the
/// compression ratio of `other`.
pub fn compression_ratio(base: &SizeReport, other: &SizeReport) -> f64 {
    base.total as f64 / other.total as f64
}

/// Break-even density region against one baseline. `rho_threshold` is the
/// clamped upper end of the aggregate-density region; membership (together
/// with the lowered-matrix density condition, when present) implies the
/// baseline is at least as large as the worst-case CPO structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub baseline: Algo,
    /// `min(1, max(0, raw))`, exactly as the predicates are stated.
    pub rho_threshold: f64,
    /// Unclamped break-even value, for reference.
    pub raw_rho_threshold: f64,
    /// Lower bound on the lowered-matrix density (CSCC only, unclamped).
    pub rho_hat_threshold: Option<f64>,
    /// The lowered-matrix density this report was evaluated with.
    pub rho_hat: Option<f64>,
}

impl BoundReport {
    pub fn holds_for(&self, profile: &DensityProfile) -> bool {
        let rho_ok = profile.aggregate() <= self.rho_threshold;
        let hat_ok = match (self.rho_hat, self.rho_hat_threshold) {
            (Some(value), Some(threshold)) => value >= threshold,
            _ => true,
        };
        rho_ok && hat_ok
    }
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

fn bound_against(
    config: &ConvConfig,
    n_images: usize,
    channels: usize,
    baseline: Algo,
    per_unit: f64,
) -> BoundReport {
    let (nop, op) = worst_case_ptr_terms(config);
    let in_ic = (n_images * channels) as f64;
    let raw = in_ic * (per_unit - (nop + op) as f64) / (2.0 * (config.ih * config.iw) as f64);
    BoundReport {
        baseline,
        rho_threshold: clamp01(raw),
        raw_rho_threshold: raw,
        rho_hat_threshold: None,
        rho_hat: None,
    }
}

/// Aggregate densities at which im2col is at least as large as worst-case CPO.
pub fn density_bound_vs_im2col(
    config: &ConvConfig,
    n_images: usize,
    channels: usize,
) -> BoundReport {
    let per_unit = (config.ow * config.oh * config.kw * config.kh) as f64;
    bound_against(config, n_images, channels, Algo::Im2col, per_unit)
}

/// Aggregate densities at which the memory-efficient lowering is at least as
/// large as worst-case CPO.
pub fn density_bound_vs_mec(config: &ConvConfig, n_images: usize, channels: usize) -> BoundReport {
    let per_unit = (config.ow * config.kw * config.ih) as f64;
    bound_against(config, n_images, channels, Algo::Mec, per_unit)
}

/// Densities at which the CSR baseline is at least as large as worst-case
/// CPO, given the measured (or assumed) lowered-matrix density. Both the
/// aggregate-density and the lowered-matrix-density conditions must hold.
pub fn density_bound_vs_cscc(
    config: &ConvConfig,
    n_images: usize,
    channels: usize,
    rho_hat: f64,
) -> BoundReport {
    let (nop, op) = worst_case_ptr_terms(config);
    let in_ic = (n_images * channels) as f64;
    let ow = config.ow as f64;
    let pairs = 2.0 * (config.ow * config.ih * config.kw * channels) as f64 * rho_hat;
    let raw =
        (in_ic * (ow + 1.0 - (nop + op) as f64) + pairs) / (2.0 * (config.ih * config.iw) as f64);
    let hat_threshold = in_ic * ((nop + op) as f64 - (ow + 1.0))
        / (2.0 * (config.ow * config.ih * config.kw * channels) as f64);
    BoundReport {
        baseline: Algo::Cscc,
        rho_threshold: clamp01(raw),
        raw_rho_threshold: raw,
        rho_hat_threshold: Some(hat_threshold),
        rho_hat: Some(rho_hat),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::cscc_encode;
    use crate::cpo::cpo_encode;
    use crate::cps::{cps_encode, set4_census};
    use crate::tensor::{gen_random_map, measure_density, ActivationMap, ValueDist};
    use crate::testutil::worked_example_map;

    #[test]
    fn im2col_sizes() {
        let c = ConvConfig::valid(8, 8, 4, 4).unwrap();
        assert_eq!(size_im2col(&c, 1, 1), 400);
        let c = ConvConfig::valid(6, 9, 1, 1).unwrap();
        assert_eq!(size_im2col(&c, 2, 3), (2 * 6 * 9 * 3) as u64);
        let c = ConvConfig::same(7, 7, 3, 3).unwrap();
        assert_eq!(size_im2col(&c, 1, 512), 225_792);
    }

    #[test]
    fn mec_sizes() {
        let c = ConvConfig::valid(8, 8, 4, 4).unwrap();
        assert_eq!(size_mec(&c, 1, 1), 160);
        // Kernel spanning the whole width stores one full copy.
        let c = ConvConfig::valid(8, 6, 3, 6).unwrap();
        assert_eq!(size_mec(&c, 1, 2), (6 * 8 * 2) as u64);
        let c = ConvConfig::valid(8, 6, 3, 1).unwrap();
        assert_eq!(size_mec(&c, 1, 2), (6 * 8 * 2) as u64);
    }

    #[test]
    fn cscc_size_endpoints() {
        let c = ConvConfig::valid(8, 8, 4, 4).unwrap();
        assert_eq!(size_cscc(&c, 1, 3, 0.0).unwrap(), (3 * 6) as f64);
        assert_eq!(
            size_cscc(&c, 1, 3, 1.0).unwrap(),
            (3 * 6) as f64 + 2.0 * (5 * 4 * 8 * 3) as f64
        );
        assert!(size_cscc(&c, 1, 3, 1.5).is_err());
    }

    #[test]
    fn cscc_measured_size_reconciles() {
        for seed in 0..6 {
            let config = ConvConfig::same(9, 7, 3, 3).unwrap();
            let map = gen_random_map(
                (2, 3, 9, 7),
                0.3,
                ValueDist::SmallInt { lo: -4, hi: 4 },
                seed,
            )
            .unwrap();
            let enc = cscc_encode(&map, &config).unwrap();
            assert_eq!(
                enc.measured_size(),
                size_cscc_exact(&config, 2, 3, enc.total_nnz())
            );
            let report = report_cscc(&enc, &config);
            assert_eq!(report.total, report.analytic_total);
        }
    }

    #[test]
    fn cpo_ptr_size_without_skips() {
        // One dense channel: 3 NOP entries plus three (1+Ow) blocks.
        let config = ConvConfig::valid(8, 8, 4, 4).unwrap();
        let map =
            gen_random_map((1, 1, 8, 8), 1.0, ValueDist::SmallInt { lo: 1, hi: 3 }, 0).unwrap();
        let profile = measure_density(&map);
        assert_eq!(analytic_ptr_size(&config, &profile, 0), 21);
        let enc = cpo_encode(&map, &config).unwrap();
        assert_eq!(enc.ptr_len(), 21);
        assert_eq!(enc.count_npf(), 0);
    }

    #[test]
    fn all_zero_map_costs_one_sentinel_per_channel() {
        let config = ConvConfig::valid(8, 8, 4, 4).unwrap();
        let map = ActivationMap::zeros(2, 3, 8, 8).unwrap();
        let profile = measure_density(&map);
        assert_eq!(size_cpo_analytic(&config, &profile, 0), 6);
        let enc = cpo_encode(&map, &config).unwrap();
        assert_eq!(enc.ptr_len() + enc.da_len() + enc.in_len(), 6);
    }

    #[test]
    fn worked_example_reconciles_exactly() {
        let config = ConvConfig::valid(8, 8, 4, 4).unwrap();
        let map = worked_example_map();
        let profile = measure_density(&map);
        let cpo = cpo_encode(&map, &config).unwrap();
        let report = report_cpo(&cpo, &profile).unwrap();
        assert_eq!(report.elements_ptr, 17);
        assert_eq!(report.total, 37);
        assert_eq!(report.total, report.analytic_total);

        let cps = cps_encode(&map, &config).unwrap();
        let census = set4_census(&map, &config).unwrap();
        let report = report_cps(&cps, &profile, &census).unwrap();
        assert_eq!(report.total, 36);
        assert_eq!(report.total, report.analytic_total);
    }

    #[test]
    fn measured_sizes_reconcile_across_random_cases() {
        let mut seed = 0;
        for (kh, kw) in [(3, 3), (4, 4), (5, 5), (1, 7), (7, 1)] {
            for same in [false, true] {
                for density in [0.0, 0.05, 0.3, 1.0] {
                    seed += 1;
                    let (ih, iw) = (kh + 4, kw + 5);
                    let config = if same {
                        ConvConfig::same(ih, iw, kh, kw).unwrap()
                    } else {
                        ConvConfig::valid(ih, iw, kh, kw).unwrap()
                    };
                    let map = gen_random_map(
                        (2, 4, ih, iw),
                        density,
                        ValueDist::SmallInt { lo: -4, hi: 4 },
                        seed,
                    )
                    .unwrap();
                    let profile = measure_density(&map);
                    let cpo = cpo_encode(&map, &config).unwrap();
                    let r = report_cpo(&cpo, &profile).unwrap();
                    assert_eq!(
                        r.total, r.analytic_total,
                        "cpo {kh}x{kw} same={same} d={density}"
                    );
                    let cps = cps_encode(&map, &config).unwrap();
                    let census = set4_census(&map, &config).unwrap();
                    let r = report_cps(&cps, &profile, &census).unwrap();
                    assert_eq!(
                        r.total, r.analytic_total,
                        "cps {kh}x{kw} same={same} d={density}"
                    );
                }
            }
        }
    }

    #[test]
    fn compression_ratio_basics() {
        let config = ConvConfig::valid(8, 8, 4, 4).unwrap();
        let im2col = report_im2col(&config, 1, 1);
        assert_eq!(compression_ratio(&im2col, &im2col), 1.0);
        let map = ActivationMap::zeros(1, 1, 8, 8).unwrap();
        let profile = measure_density(&map);
        let cpo = cpo_encode(&map, &config).unwrap();
        let report = report_cpo(&cpo, &profile).unwrap();
        assert_eq!(compression_ratio(&im2col, &report), 400.0);
    }

    #[test]
    fn im2col_bound_worked_example() {
        let config = ConvConfig::valid(8, 8, 4, 4).unwrap();
        let bound = density_bound_vs_im2col(&config, 1, 1);
        assert!((bound.raw_rho_threshold - 379.0 / 128.0).abs() < 1e-12);
        assert_eq!(bound.rho_threshold, 1.0);
    }

    #[test]
    fn mec_bound_worked_example() {
        let config = ConvConfig::valid(8, 8, 4, 4).unwrap();
        let bound = density_bound_vs_mec(&config, 1, 1);
        assert!((bound.raw_rho_threshold - 139.0 / 128.0).abs() < 1e-12);
        assert_eq!(bound.rho_threshold, 1.0);
    }

    #[test]
    fn mec_bound_saturates_for_tall_inputs() {
        // Kw*Ih dominates the pointer overhead, so the raw break-even
        // exceeds one and the region saturates at full density.
        let config = ConvConfig::valid(32, 12, 3, 5).unwrap();
        let bound = density_bound_vs_mec(&config, 1, 1);
        assert!(bound.raw_rho_threshold >= 1.0);
        assert_eq!(bound.rho_threshold, 1.0);
    }

    #[test]
    fn cps_analytic_with_empty_census_is_sentinels_only() {
        let config = ConvConfig::valid(8, 8, 4, 4).unwrap();
        let map = ActivationMap::zeros(2, 3, 8, 8).unwrap();
        let profile = measure_density(&map);
        let census = set4_census(&map, &config).unwrap();
        assert_eq!(census.in_size_cps(), 0);
        assert_eq!(size_cps_analytic(&config, &profile, &census, 0), 6);
    }

    #[test]
    fn degenerate_config_clamps_to_zero() {
        let config = ConvConfig::valid(1, 1, 1, 1).unwrap();
        let bound = density_bound_vs_im2col(&config, 1, 1);
        assert!(bound.raw_rho_threshold < 0.0);
        assert_eq!(bound.rho_threshold, 0.0);
    }

    #[test]
    fn bounds_are_sound_on_random_points() {
        let mut seed = 100;
        for (kh, kw) in [(3, 3), (4, 4), (5, 5), (7, 1), (1, 7)] {
            for density in [0.05, 0.2, 0.5, 0.9] {
                seed += 1;
                let (ih, iw) = (kh + 6, kw + 6);
                let config = ConvConfig::valid(ih, iw, kh, kw).unwrap();
                let map = gen_random_map(
                    (1, 4, ih, iw),
                    density,
                    ValueDist::SmallInt { lo: -4, hi: 4 },
                    seed,
                )
                .unwrap();
                let profile = measure_density(&map);
                let wc = worst_case_cpo_size(&config, 1, 4, profile.nze_total());

                let bound = density_bound_vs_im2col(&config, 1, 4);
                if bound.holds_for(&profile) {
                    assert!(wc <= size_im2col(&config, 1, 4));
                }
                let bound = density_bound_vs_mec(&config, 1, 4);
                if bound.holds_for(&profile) {
                    assert!(wc <= size_mec(&config, 1, 4));
                }
                let enc = cscc_encode(&map, &config).unwrap();
                let bound = density_bound_vs_cscc(&config, 1, 4, enc.rho_hat());
                if bound.holds_for(&profile) {
                    assert!(wc as f64 <= size_cscc(&config, 1, 4, enc.rho_hat()).unwrap() + 1e-9);
                }
            }
        }
    }

    #[test]
    fn cscc_bound_agrees_with_direct_size_comparison_on_the_worked_example() {
        let config = ConvConfig::valid(8, 8, 4, 4).unwrap();
        let map = worked_example_map();
        let profile = measure_density(&map);
        let enc = cscc_encode(&map, &config).unwrap();
        let bound = density_bound_vs_cscc(&config, 1, 1, enc.rho_hat());
        let wc = worst_case_cpo_size(&config, 1, 1, profile.nze_total());
        let cscc_size = size_cscc(&config, 1, 1, enc.rho_hat()).unwrap();
        if bound.holds_for(&profile) {
            assert!(wc as f64 <= cscc_size + 1e-9);
        } else {
            // Membership is the exact break-even here (thresholds unclamped).
            assert!(
                bound.raw_rho_threshold < profile.aggregate()
                    || bound.rho_hat_threshold.unwrap() > enc.rho_hat()
            );
        }
    }

    #[test]
    fn cr_monotone_non_increasing_in_density() {
        let config = ConvConfig::same(10, 10, 3, 3).unwrap();
        let im2col = report_im2col(&config, 1, 8);
        let mut prev = f64::INFINITY;
        for density in [0.05, 0.1, 0.3, 0.6] {
            let map = gen_random_map(
                (1, 8, 10, 10),
                density,
                ValueDist::SmallInt { lo: -4, hi: 4 },
                5,
            )
            .unwrap();
            let profile = measure_density(&map);
            let enc = cpo_encode(&map, &config).unwrap();
            let report = report_cpo(&enc, &profile).unwrap();
            let cr = compression_ratio(&im2col, &report);
            assert!(cr <= prev);
            prev = cr;
        }
    }
}
