//! Offline per-layer profiling: wall-clock time (encode and convolve charged
//! together for every algorithm, the lowering being im2col's encode), element
//! counts, multiply-accumulate counts, and density statistics over the sample
//! maps.

use crate::catalog::LayerSpec;
use crate::error::{Error, Result};
use cpoconv::{
    cpo_conv, cpo_encode, cpo_mac_count, cps_conv, cps_encode, cps_mac_count, gemm_conv,
    gen_random_kernel, im2col_lower, measure_density, report_cpo, report_cps, set4_census,
    size_im2col, ActivationMap, Algo, Kernel, OutputMap, ValueDist,
};
use std::time::Instant;

/// Timing policy. Averaging over repetitions is the default; taking the
/// minimum is available for noisy machines.
#[derive(Debug, Clone, Copy)]
pub struct ProfileOptions {
    pub iterations: usize,
    pub use_min: bool,
    pub kernel_seed: u64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            iterations: 100,
            use_min: false,
            kernel_seed: 0,
        }
    }
}

/// One algorithm's totals over the sample maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlgoProfile {
    pub encode_ns: u64,
    pub conv_ns: u64,
    pub total_size: u64,
    pub mac_count: u64,
}

impl AlgoProfile {
    pub fn total_ns(&self) -> u64 {
        self.encode_ns + self.conv_ns
    }
}

#[derive(Debug, Clone)]
pub struct LayerProfile {
    pub layer_id: usize,
    pub eligible: bool,
    pub im2col: AlgoProfile,
    pub cpo: Option<AlgoProfile>,
    pub cps: Option<AlgoProfile>,
    pub density_mean: f64,
    pub density_variance: f64,
}

impl LayerProfile {
    pub fn algo(&self, algo: Algo) -> Option<&AlgoProfile> {
        match algo {
            Algo::Im2col => Some(&self.im2col),
            Algo::Cpo => self.cpo.as_ref(),
            Algo::Cps => self.cps.as_ref(),
            _ => None,
        }
    }
}

fn combine(reps: &[u64], use_min: bool) -> u64 {
    if use_min {
        reps.iter().copied().min().unwrap_or(0)
    } else {
        reps.iter().sum::<u64>() / reps.len().max(1) as u64
    }
}

/// Time `encode` then `convolve` over every map, repeated `iterations` times.
fn time_algo<E, C, S>(
    maps: &[ActivationMap],
    opts: &ProfileOptions,
    mut encode: E,
    mut convolve: C,
) -> Result<(u64, u64)>
where
    E: FnMut(&ActivationMap) -> Result<S>,
    C: FnMut(&S) -> Result<OutputMap>,
{
    let mut encode_reps = Vec::with_capacity(opts.iterations);
    let mut conv_reps = Vec::with_capacity(opts.iterations);
    for _ in 0..opts.iterations.max(1) {
        let mut encode_ns = 0u64;
        let mut conv_ns = 0u64;
        for map in maps {
            let t = Instant::now();
            let encoded = encode(map)?;
            encode_ns += t.elapsed().as_nanos() as u64;
            let t = Instant::now();
            let out = convolve(&encoded)?;
            conv_ns += t.elapsed().as_nanos() as u64;
            std::hint::black_box(&out);
        }
        encode_reps.push(encode_ns);
        conv_reps.push(conv_ns);
    }
    Ok((
        combine(&encode_reps, opts.use_min),
        combine(&conv_reps, opts.use_min),
    ))
}

/// Deterministic per-layer kernel for profiling and simulation.
pub fn layer_kernel(spec: &LayerSpec, seed: u64) -> Result<Kernel> {
    Ok(gen_random_kernel(
        spec.kh,
        spec.kw,
        spec.ic,
        spec.k,
        ValueDist::Uniform { lo: -1.0, hi: 1.0 },
        seed ^ (spec.layer_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
    )?)
}

/// Profile one layer over `maps`. The dense route always runs; the sparse
/// routes run only on eligible layers. Sizes and MAC counts are summed over
/// the maps and are independent of timing noise.
pub fn profile_layer(
    spec: &LayerSpec,
    maps: &[ActivationMap],
    opts: &ProfileOptions,
) -> Result<LayerProfile> {
    if maps.is_empty() {
        return Err(Error::InsufficientData(
            "profiling needs at least one map".into(),
        ));
    }
    let config = spec.conv_config()?;
    for map in maps {
        if map.height() != spec.ih || map.width() != spec.iw || map.channels() != spec.ic {
            return Err(Error::Shape(format!(
                "map {}x{}x{} does not fit layer {} ({}x{}x{})",
                map.channels(),
                map.height(),
                map.width(),
                spec.layer_id,
                spec.ic,
                spec.ih,
                spec.iw
            )));
        }
    }
    let kernel = layer_kernel(spec, opts.kernel_seed)?;

    let mut densities = Vec::with_capacity(maps.len());
    let mut im2col_size = 0u64;
    let mut dense_macs = 0u64;
    for map in maps {
        let profile = measure_density(map);
        densities.push(profile.mean_density());
        im2col_size += size_im2col(&config, map.n_images(), map.channels());
        dense_macs += size_im2col(&config, map.n_images(), map.channels()) * spec.k as u64;
    }
    let density_mean = densities.iter().sum::<f64>() / densities.len() as f64;
    let density_variance = variance(&densities);

    let (encode_ns, conv_ns) = time_algo(
        maps,
        opts,
        |map| Ok(im2col_lower(map, &config)?),
        |lowered| Ok(gemm_conv(lowered, &kernel)?),
    )?;
    let im2col = AlgoProfile {
        encode_ns,
        conv_ns,
        total_size: im2col_size,
        mac_count: dense_macs,
    };

    let (mut cpo, mut cps) = (None, None);
    if spec.eligible() {
        let mut cpo_size = 0u64;
        let mut cps_size = 0u64;
        let mut sparse_macs = 0u64;
        for map in maps {
            let profile = measure_density(map);
            let enc = cpo_encode(map, &config)?;
            cpo_size += report_cpo(&enc, &profile)?.total;
            sparse_macs += cpo_mac_count(&enc, &config, spec.k)?;
            let enc = cps_encode(map, &config)?;
            let census = set4_census(map, &config)?;
            cps_size += report_cps(&enc, &profile, &census)?.total;
        }
        let (encode_ns, conv_ns) = time_algo(
            maps,
            opts,
            |map| Ok(cpo_encode(map, &config)?),
            |enc| Ok(cpo_conv(enc, &kernel, &config)?),
        )?;
        cpo = Some(AlgoProfile {
            encode_ns,
            conv_ns,
            total_size: cpo_size,
            mac_count: sparse_macs,
        });

        if spec.kw == 1 {
            // No overlap region exists: the pattern codec coincides with CPO,
            // so the plain route is what runs for both.
            cps = Some(AlgoProfile {
                encode_ns,
                conv_ns,
                total_size: cps_size,
                mac_count: sparse_macs,
            });
        } else {
            let (encode_ns, conv_ns) = time_algo(
                maps,
                opts,
                |map| Ok(cps_encode(map, &config)?),
                |enc| Ok(cps_conv(enc, &kernel, &config)?),
            )?;
            cps = Some(AlgoProfile {
                encode_ns,
                conv_ns,
                total_size: cps_size,
                mac_count: sparse_macs,
            });
        }
        debug_assert_eq!(sparse_macs, {
            let mut check = 0u64;
            for map in maps {
                let enc = cps_encode(map, &config)?;
                check += cps_mac_count(&enc, &config, spec.k)?;
            }
            check
        });
    }

    Ok(LayerProfile {
        layer_id: spec.layer_id,
        eligible: spec.eligible(),
        im2col,
        cpo,
        cps,
        density_mean,
        density_variance,
    })
}

fn variance(samples: &[f64]) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    samples.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (samples.len() - 1) as f64
}

/// Unbiased variance of per-map mean density, one entry per layer. The input
/// is one collection of sample maps per layer.
pub fn density_stationarity(maps_per_layer: &[Vec<ActivationMap>]) -> Result<Vec<f64>> {
    maps_per_layer
        .iter()
        .enumerate()
        .map(|(i, maps)| {
            if maps.len() < 2 {
                return Err(Error::InsufficientData(format!(
                    "layer {i} has {} map(s); variance needs at least 2",
                    maps.len()
                )));
            }
            let means: Vec<f64> = maps
                .iter()
                .map(|m| measure_density(m).mean_density())
                .collect();
            Ok(variance(&means))
        })
        .collect()
}
