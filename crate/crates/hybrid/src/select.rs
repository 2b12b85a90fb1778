//! Plan construction and simulated inference accounting.
//!
//! Favour-time picks the faster of the dense route and CPO per layer;
//! favour-space picks between the dense route and CPS. Both pick by total
//! recorded time; ties go to the sparse side (equal time, strictly less
//! memory). Pointwise and strided layers always stay on the dense route.

use crate::catalog::LayerSpec;
use crate::error::{Error, Result};
use crate::profile::{layer_kernel, AlgoProfile, LayerProfile, ProfileOptions};
use cpoconv::{
    cpo_conv, cpo_encode, cps_conv, cps_encode, gemm_conv, im2col_lower, measure_density,
    report_cpo, report_cps, set4_census, size_im2col, ActivationMap, Algo,
};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMode {
    FavourTime,
    FavourSpace,
}

impl SelectionMode {
    /// The sparse candidate this mode weighs against the dense route.
    pub fn candidate(&self) -> Algo {
        match self {
            SelectionMode::FavourTime => Algo::Cpo,
            SelectionMode::FavourSpace => Algo::Cps,
        }
    }
}

impl std::fmt::Display for SelectionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SelectionMode::FavourTime => f.write_str("favour-time"),
            SelectionMode::FavourSpace => f.write_str("favour-space"),
        }
    }
}

impl std::str::FromStr for SelectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "favour-time" | "favour_time" | "time" => Ok(SelectionMode::FavourTime),
            "favour-space" | "favour_space" | "space" => Ok(SelectionMode::FavourSpace),
            other => Err(Error::Format(format!("unknown selection mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerChoice {
    pub layer_id: usize,
    pub algo: Algo,
}

#[derive(Debug, Clone)]
pub struct SelectionPlan {
    pub mode: SelectionMode,
    pub choices: Vec<LayerChoice>,
    /// Fraction of eligible layers on which the sparse candidate won.
    pub selection_fraction: f64,
    /// Projected fractional time saving on eligible layers, from the profiles.
    pub projected_part: f64,
    /// Projected fractional end-to-end saving; ineligible layers contribute
    /// their dense-route time unchanged.
    pub projected_e2e: f64,
    /// Mean over all layers of dense elements / chosen elements.
    pub projected_avg_cr: f64,
}

impl SelectionPlan {
    pub fn choice(&self, layer_id: usize) -> Option<Algo> {
        self.choices
            .iter()
            .find(|c| c.layer_id == layer_id)
            .map(|c| c.algo)
    }
}

/// Per-layer argmin over recorded profile times.
pub fn select_plan(profiles: &[LayerProfile], mode: SelectionMode) -> Result<SelectionPlan> {
    let mut choices = Vec::with_capacity(profiles.len());
    let mut eligible_layers = 0usize;
    let mut sparse_picks = 0usize;
    let mut time_dense_eligible = 0u128;
    let mut time_chosen_eligible = 0u128;
    let mut time_dense_all = 0u128;
    let mut time_chosen_all = 0u128;
    let mut cr_sum = 0.0f64;

    for profile in profiles {
        let dense_ns = profile.im2col.total_ns() as u128;
        time_dense_all += dense_ns;
        let (algo, chosen): (Algo, Option<&AlgoProfile>) = if !profile.eligible {
            (Algo::Im2col, None)
        } else {
            let candidate = profile.algo(mode.candidate()).ok_or_else(|| {
                Error::IncompleteProfile(format!(
                    "layer {} is eligible but has no {} timing",
                    profile.layer_id,
                    mode.candidate()
                ))
            })?;
            eligible_layers += 1;
            time_dense_eligible += dense_ns;
            if candidate.total_ns() <= profile.im2col.total_ns() {
                sparse_picks += 1;
                (mode.candidate(), Some(candidate))
            } else {
                (Algo::Im2col, None)
            }
        };
        let chosen_ns = chosen.map_or(dense_ns, |c| c.total_ns() as u128);
        time_chosen_all += chosen_ns;
        if profile.eligible {
            time_chosen_eligible += chosen_ns;
        }
        cr_sum += chosen.map_or(1.0, |c| {
            profile.im2col.total_size as f64 / c.total_size as f64
        });
        choices.push(LayerChoice {
            layer_id: profile.layer_id,
            algo,
        });
    }

    let saving = |dense: u128, chosen: u128| {
        if dense == 0 {
            0.0
        } else {
            1.0 - chosen as f64 / dense as f64
        }
    };
    Ok(SelectionPlan {
        mode,
        choices,
        selection_fraction: if eligible_layers == 0 {
            0.0
        } else {
            sparse_picks as f64 / eligible_layers as f64
        },
        projected_part: saving(time_dense_eligible, time_chosen_eligible),
        projected_e2e: saving(time_dense_all, time_chosen_all),
        projected_avg_cr: if profiles.is_empty() {
            1.0
        } else {
            cr_sum / profiles.len() as f64
        },
    })
}

#[derive(Debug, Clone, Copy)]
pub struct SimLayerRow {
    pub layer_id: usize,
    pub algo: Algo,
    pub dense_ns: u64,
    pub chosen_ns: u64,
    pub cr_vs_im2col: f64,
    pub mean_density: f64,
}

/// Outcome of replaying a plan on fresh maps.
#[derive(Debug, Clone)]
pub struct InferenceReport {
    /// Fractional time saving over eligible layers vs the pure dense run.
    pub part_saving: f64,
    /// Fractional saving over all layers (ineligible layers pinned dense).
    pub e2e_saving: f64,
    /// Mean over layers of dense elements / executed-representation elements.
    pub avg_cr: f64,
    pub per_layer: Vec<SimLayerRow>,
}

/// Execute every layer with its chosen algorithm on fresh maps, timing the
/// pure dense route alongside for the savings baselines.
pub fn simulate_inference(
    specs: &[LayerSpec],
    plan: &SelectionPlan,
    maps_per_layer: &[Vec<ActivationMap>],
    opts: &ProfileOptions,
) -> Result<InferenceReport> {
    if specs.len() != maps_per_layer.len() {
        return Err(Error::Shape(
            "one map collection per layer is required".into(),
        ));
    }
    let mut rows = Vec::with_capacity(specs.len());
    let mut dense_eligible = 0u128;
    let mut chosen_eligible = 0u128;
    let mut dense_all = 0u128;
    let mut chosen_all = 0u128;
    let mut cr_sum = 0.0f64;

    for (spec, maps) in specs.iter().zip(maps_per_layer) {
        let algo = plan.choice(spec.layer_id).ok_or_else(|| {
            Error::IncompleteProfile(format!("plan has no entry for layer {}", spec.layer_id))
        })?;
        let config = spec.conv_config()?;
        let kernel = layer_kernel(spec, opts.kernel_seed)?;

        let mut dense_ns = 0u64;
        let mut chosen_ns = 0u64;
        let mut dense_size = 0u64;
        let mut chosen_size = 0u64;
        let mut density_sum = 0.0f64;
        for map in maps {
            let t = Instant::now();
            let lowered = im2col_lower(map, &config)?;
            let out = gemm_conv(&lowered, &kernel)?;
            std::hint::black_box(&out);
            let map_dense_ns = t.elapsed().as_nanos() as u64;
            dense_ns += map_dense_ns;
            dense_size += size_im2col(&config, map.n_images(), map.channels());

            let profile = measure_density(map);
            density_sum += profile.mean_density();
            match algo {
                Algo::Im2col => {
                    // Same route as the baseline: charge the same measurement,
                    // so a pure dense plan reports exactly zero savings.
                    chosen_ns += map_dense_ns;
                    chosen_size += size_im2col(&config, map.n_images(), map.channels());
                }
                Algo::Cpo => {
                    let t = Instant::now();
                    let enc = cpo_encode(map, &config)?;
                    let out = cpo_conv(&enc, &kernel, &config)?;
                    std::hint::black_box(&out);
                    chosen_ns += t.elapsed().as_nanos() as u64;
                    chosen_size += report_cpo(&enc, &profile)?.total;
                }
                Algo::Cps => {
                    let t = Instant::now();
                    let enc = cps_encode(map, &config)?;
                    let out = cps_conv(&enc, &kernel, &config)?;
                    std::hint::black_box(&out);
                    chosen_ns += t.elapsed().as_nanos() as u64;
                    chosen_size += report_cps(&enc, &profile, &set4_census(map, &config)?)?.total;
                }
                other => {
                    return Err(Error::Format(format!(
                        "plan chose unexpected algorithm {other}"
                    )))
                }
            }
        }
        dense_all += dense_ns as u128;
        chosen_all += chosen_ns as u128;
        if spec.eligible() {
            dense_eligible += dense_ns as u128;
            chosen_eligible += chosen_ns as u128;
        }
        cr_sum += dense_size as f64 / chosen_size as f64;
        rows.push(SimLayerRow {
            layer_id: spec.layer_id,
            algo,
            dense_ns,
            chosen_ns,
            cr_vs_im2col: dense_size as f64 / chosen_size as f64,
            mean_density: density_sum / maps.len().max(1) as f64,
        });
    }

    let saving = |dense: u128, chosen: u128| {
        if dense == 0 {
            0.0
        } else {
            1.0 - chosen as f64 / dense as f64
        }
    };
    Ok(InferenceReport {
        part_saving: saving(dense_eligible, chosen_eligible),
        e2e_saving: saving(dense_all, chosen_all),
        avg_cr: if specs.is_empty() {
            1.0
        } else {
            cr_sum / specs.len() as f64
        },
        per_layer: rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Network;
    use cpoconv::{gen_random_map, ValueDist};

    fn profile(layer_id: usize, eligible: bool, im2col: u64, cpo: u64, cps: u64) -> LayerProfile {
        let mk = |ns: u64, size: u64| AlgoProfile {
            encode_ns: ns / 2,
            conv_ns: ns - ns / 2,
            total_size: size,
            mac_count: 100,
        };
        LayerProfile {
            layer_id,
            eligible,
            im2col: mk(im2col, 1000),
            cpo: eligible.then(|| mk(cpo, 100)),
            cps: eligible.then(|| mk(cps, 80)),
            density_mean: 0.1,
            density_variance: 0.0,
        }
    }

    #[test]
    fn argmin_picks_the_faster_route_per_layer() {
        let profiles = vec![
            profile(0, true, 100, 50, 60),   // sparse wins
            profile(1, true, 100, 150, 140), // dense wins
            profile(2, false, 100, 0, 0),    // ineligible
        ];
        let plan = select_plan(&profiles, SelectionMode::FavourTime).unwrap();
        assert_eq!(plan.choice(0), Some(Algo::Cpo));
        assert_eq!(plan.choice(1), Some(Algo::Im2col));
        assert_eq!(plan.choice(2), Some(Algo::Im2col));
        assert_eq!(plan.selection_fraction, 0.5);
        // Part: eligible dense 200 -> chosen 150; E2E over 300 -> 250.
        assert!((plan.projected_part - 0.25).abs() < 1e-12);
        assert!((plan.projected_e2e - (1.0 - 250.0 / 300.0)).abs() < 1e-12);
    }

    #[test]
    fn favour_space_never_selects_the_overlap_codec() {
        let profiles = vec![
            profile(0, true, 100, 10, 20),
            profile(1, true, 100, 10, 200),
        ];
        let plan = select_plan(&profiles, SelectionMode::FavourSpace).unwrap();
        for choice in &plan.choices {
            assert_ne!(choice.algo, Algo::Cpo);
        }
        assert_eq!(plan.choice(0), Some(Algo::Cps));
        assert_eq!(plan.choice(1), Some(Algo::Im2col));
    }

    #[test]
    fn ties_resolve_toward_the_sparse_side() {
        let profiles = vec![profile(0, true, 100, 100, 100)];
        let plan = select_plan(&profiles, SelectionMode::FavourTime).unwrap();
        assert_eq!(plan.choice(0), Some(Algo::Cpo));
    }

    #[test]
    fn dense_dominance_yields_zero_savings_never_negative() {
        let profiles = vec![
            profile(0, true, 100, 150, 160),
            profile(1, true, 50, 80, 90),
        ];
        let plan = select_plan(&profiles, SelectionMode::FavourTime).unwrap();
        assert_eq!(plan.projected_part, 0.0);
        assert_eq!(plan.projected_e2e, 0.0);
        assert_eq!(plan.selection_fraction, 0.0);
        assert_eq!(plan.projected_avg_cr, 1.0);
    }

    #[test]
    fn plan_time_never_exceeds_either_pure_strategy() {
        // Deterministic pseudo-random profile battery.
        let mut state = 0x12345678u64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 33) % 1000 + 1
        };
        for _ in 0..50 {
            let profiles: Vec<LayerProfile> = (0..12)
                .map(|i| profile(i, i % 4 != 3, next(), next(), next()))
                .collect();
            for mode in [SelectionMode::FavourTime, SelectionMode::FavourSpace] {
                let plan = select_plan(&profiles, mode).unwrap();
                let total = |pick: &dyn Fn(&LayerProfile) -> u64| -> u128 {
                    profiles.iter().map(|p| pick(p) as u128).sum()
                };
                let chosen_total: u128 = profiles
                    .iter()
                    .zip(&plan.choices)
                    .map(|(p, c)| p.algo(c.algo).unwrap().total_ns() as u128)
                    .sum();
                let pure_dense = total(&|p: &LayerProfile| p.im2col.total_ns());
                let pure_sparse = total(&|p: &LayerProfile| {
                    p.algo(mode.candidate())
                        .map_or(p.im2col.total_ns(), |a| a.total_ns())
                });
                assert!(chosen_total <= pure_dense);
                assert!(chosen_total <= pure_sparse);
            }
        }
    }

    #[test]
    fn incomplete_profiles_error() {
        let mut p = profile(0, true, 100, 50, 60);
        p.cpo = None;
        assert!(matches!(
            select_plan(&[p], SelectionMode::FavourTime),
            Err(Error::IncompleteProfile(_))
        ));
    }

    #[test]
    fn simulation_runs_a_small_plan_end_to_end() {
        let specs = vec![
            LayerSpec::new(0, Network::Resnet50, (8, 8, 8, 8), (3, 3), (1, 1), 3, 2),
            LayerSpec::new(1, Network::Resnet50, (7, 7, 7, 7), (3, 3), (1, 1), 2, 2),
        ];
        let maps: Vec<Vec<ActivationMap>> = specs
            .iter()
            .map(|s| {
                vec![gen_random_map(
                    (1, s.ic, s.ih, s.iw),
                    0.1,
                    ValueDist::Uniform { lo: -1.0, hi: 1.0 },
                    s.layer_id as u64,
                )
                .unwrap()]
            })
            .collect();
        let plan = SelectionPlan {
            mode: SelectionMode::FavourTime,
            choices: vec![
                LayerChoice {
                    layer_id: 0,
                    algo: Algo::Cpo,
                },
                LayerChoice {
                    layer_id: 1,
                    algo: Algo::Im2col,
                },
            ],
            selection_fraction: 0.5,
            projected_part: 0.0,
            projected_e2e: 0.0,
            projected_avg_cr: 1.0,
        };
        let opts = ProfileOptions {
            iterations: 1,
            ..Default::default()
        };
        let report = simulate_inference(&specs, &plan, &maps, &opts).unwrap();
        assert_eq!(report.per_layer.len(), 2);
        assert!(report.per_layer[0].cr_vs_im2col > 1.0);
        assert!((report.per_layer[1].cr_vs_im2col - 1.0).abs() < 1e-12);
        assert!(report.avg_cr > 1.0);
    }
}
