//! Per-layer convolution algorithm selection.
//!
//! Post-activation density is close to stationary across inputs at any given
//! layer, so a cheap offline profile of a few sample maps decides, per layer,
//! whether the sparse scatter routes beat the dense lowering. This crate
//! bundles the layer-shape catalogs of six classification networks, profiles
//! layers (encode and convolve timed together for every algorithm), builds
//! favour-time / favour-space plans, replays recorded profiles from CSV, and
//! accounts simulated end-to-end inference runs.

pub mod catalog;
mod error;
pub mod files;
pub mod profile;
pub mod select;

pub use catalog::{layer_catalog, LayerSpec, Network};
pub use error::{Error, Result};
pub use files::{
    profile_rows, profiles_from_rows, read_density_file, read_plan, read_profile_csv,
    write_density_file, write_plan, write_profile_csv, ProfileRow,
};
pub use profile::{
    density_stationarity, layer_kernel, profile_layer, AlgoProfile, LayerProfile, ProfileOptions,
};
pub use select::{
    select_plan, simulate_inference, InferenceReport, LayerChoice, SelectionMode, SelectionPlan,
    SimLayerRow,
};
