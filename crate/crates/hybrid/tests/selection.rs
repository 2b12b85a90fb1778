//! End-to-end selection flow on small synthetic layers: profile sample maps,
//! build plans in both modes, replay through CSV, and simulate inference.

use cpoconv::{gen_random_map, Algo, ValueDist};
use cpoconv_hybrid::{
    layer_catalog, profile_layer, profile_rows, profiles_from_rows, select_plan,
    simulate_inference, write_profile_csv, LayerSpec, Network, ProfileOptions, SelectionMode,
};

fn sample_maps(
    spec: &LayerSpec,
    density: f64,
    count: usize,
    seed: u64,
) -> Vec<cpoconv::ActivationMap> {
    (0..count)
        .map(|i| {
            gen_random_map(
                (1, spec.ic, spec.ih, spec.iw),
                density,
                ValueDist::Uniform { lo: -1.0, hi: 1.0 },
                seed.wrapping_add(i as u64).wrapping_mul(2654435761),
            )
            .unwrap()
        })
        .collect()
}

#[test]
fn profile_select_replay_simulate() {
    // Three small eligible layers plus one pointwise and one strided layer.
    let mut specs = vec![
        LayerSpec::new(0, Network::Resnet50, (10, 10, 10, 10), (3, 3), (1, 1), 6, 4),
        LayerSpec::new(1, Network::Resnet50, (9, 9, 7, 7), (3, 3), (1, 1), 4, 4),
        LayerSpec::new(2, Network::Resnet50, (8, 8, 8, 8), (1, 3), (1, 1), 4, 2),
    ];
    specs.push(LayerSpec::new(
        3,
        Network::Resnet50,
        (8, 8, 8, 8),
        (1, 1),
        (1, 1),
        4,
        2,
    ));
    specs.push(LayerSpec::new(
        4,
        Network::Resnet50,
        (9, 9, 4, 4),
        (3, 3),
        (2, 2),
        4,
        2,
    ));
    assert!(!specs[3].eligible() && !specs[4].eligible());

    let opts = ProfileOptions {
        iterations: 2,
        kernel_seed: 9,
        ..Default::default()
    };
    let maps_per_layer: Vec<_> = specs
        .iter()
        .map(|s| sample_maps(s, 0.1, 2, 100 + s.layer_id as u64))
        .collect();
    let profiles: Vec<_> = specs
        .iter()
        .zip(&maps_per_layer)
        .map(|(spec, maps)| profile_layer(spec, maps, &opts).unwrap())
        .collect();

    for mode in [SelectionMode::FavourTime, SelectionMode::FavourSpace] {
        let plan = select_plan(&profiles, mode).unwrap();
        // Ineligible layers stay on the dense route.
        assert_eq!(plan.choice(3), Some(Algo::Im2col));
        assert_eq!(plan.choice(4), Some(Algo::Im2col));
        if mode == SelectionMode::FavourSpace {
            assert!(plan.choices.iter().all(|c| c.algo != Algo::Cpo));
        } else {
            assert!(plan.choices.iter().all(|c| c.algo != Algo::Cps));
        }
        assert!(plan.projected_part >= 0.0);
        assert!(plan.projected_e2e >= 0.0);

        // CSV replay reproduces the same choices from the recorded numbers.
        let rows = profile_rows(&profiles);
        let mut buf = Vec::new();
        write_profile_csv(&mut buf, &rows).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("profiles.csv");
        std::fs::write(&path, &buf).unwrap();
        let replayed =
            profiles_from_rows(&cpoconv_hybrid::read_profile_csv(&path).unwrap()).unwrap();
        let replay_plan = select_plan(&replayed, mode).unwrap();
        assert_eq!(replay_plan.choices, plan.choices);

        // Fresh maps, simulated run.
        let fresh: Vec<_> = specs
            .iter()
            .map(|s| sample_maps(s, 0.1, 2, 500 + s.layer_id as u64))
            .collect();
        let report = simulate_inference(&specs, &plan, &fresh, &opts).unwrap();
        assert_eq!(report.per_layer.len(), specs.len());
        for row in &report.per_layer {
            assert!(row.cr_vs_im2col >= 1.0 - 1e-12);
        }
    }
}

#[test]
fn catalog_layers_profile_at_low_cost() {
    // The smallest catalog layers run quickly even with the full flow.
    let spec = layer_catalog(Network::Resnet50)[12];
    assert_eq!((spec.ih, spec.ic), (10, 512));
    let maps = sample_maps(&spec, 0.05, 1, 3);
    let opts = ProfileOptions {
        iterations: 1,
        kernel_seed: 1,
        ..Default::default()
    };
    let profile = profile_layer(&spec, &maps, &opts).unwrap();
    let cpo = profile.cpo.unwrap();
    // At 5% density the sparse structure is far smaller than the lowering.
    assert!(profile.im2col.total_size as f64 / cpo.total_size as f64 > 10.0);
    assert!(cpo.mac_count < profile.im2col.mac_count);
}
