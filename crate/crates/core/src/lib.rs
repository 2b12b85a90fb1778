//! Sparse convolution for post-activation maps.
//!
//! Activation maps coming out of a rectifier are mostly zeros. This crate
//! stores them in two compressed three-stream encodings that deduplicate the
//! horizontal kernel-overlap structure — a pattern-overlap form (CPO) and a
//! pattern-set form (CPS) that additionally packs neighboring nonzero indices
//! — and convolves them by scattering each stored nonzero against a row-major
//! kernel vector. Dense references (direct, im2col + matrix multiply) and a
//! CSR-of-lowered-matrix baseline (CSCC) provide oracles, and an analytic
//! space model reproduces every structure size exactly from densities and
//! skip-flag counts.
//!
//! Everything is deterministic given a seed, and all containers are immutable
//! after construction, so values can be shared freely across threads.

pub mod baseline;
pub mod cpo;
pub mod cps;
mod error;
pub mod io;
pub mod layout;
pub mod model;
mod streams;
pub mod tensor;

pub use baseline::{
    cscc_conv, cscc_encode, direct_conv, gemm_conv, im2col_lower, mac_count_direct, mec_lower,
    CsccEncoding, LoweredMatrix, LoweringScheme,
};
pub use cpo::{
    conv_spmv, cpo_conv, cpo_conv_with_stats, cpo_encode, cpo_mac_count, ConvStats, CpoEncoding,
};
pub use cps::{
    cps_conv, cps_conv_with_stats, cps_encode, cps_mac_count, next_offset, pattern_size,
    set4_census, CpsEncoding, Set4Census,
};
pub use error::{Error, Result};
pub use layout::{classify_columns, ColumnClassification, ColumnInfo};
pub use model::{
    analytic_ptr_size, compression_ratio, density_bound_vs_cscc, density_bound_vs_im2col,
    density_bound_vs_mec, report_cpo, report_cps, report_cscc, report_im2col, report_mec,
    size_cpo_analytic, size_cps_analytic, size_cscc, size_cscc_exact, size_im2col, size_mec,
    worst_case_cpo_size, Algo, BoundReport, SizeReport,
};
pub use streams::{StoredNonzero, StreamSet, NO_NEW_COLUMN, NPC, NPF};
pub use tensor::{
    compute_output_dims, gen_random_kernel, gen_random_map, measure_density, ActivationMap,
    ConvConfig, DensityProfile, Kernel, OutputMap, ValueDist,
};
