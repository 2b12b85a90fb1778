//! `cpoconv` — sparse-convolution toolkit front end.
//!
//! Subcommands: `gen` (synthetic tensors), `encode` (sparse dumps), `conv`
//! (run one algorithm), `verify` (cross-check all routes), `bench` (per-layer
//! CSV), `select` (build a per-layer plan), `report` (summarize a profile
//! CSV). All non-timing outputs are deterministic for a given seed.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use cpoconv::{
    cpo_conv, cpo_encode, cps_conv, cps_encode, cscc_conv, cscc_encode, direct_conv, gemm_conv,
    gen_random_kernel, gen_random_map, im2col_lower, io, measure_density, Algo, ConvConfig, Kernel,
    OutputMap, ValueDist,
};
use cpoconv_hybrid as hybrid;
use hybrid::{
    layer_catalog, profile_layer, profile_rows, profiles_from_rows, select_plan,
    simulate_inference, LayerSpec, Network, ProfileOptions, SelectionMode,
};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Parser)]
#[command(name = "cpoconv", version, about = "Sparse convolution toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic sparse activation-map tensor file.
    Gen(GenArgs),
    /// Encode a tensor file into a sparse encoding dump.
    Encode(EncodeArgs),
    /// Convolve a tensor file with a seeded random kernel.
    Conv(ConvArgs),
    /// Run every convolution route on one input and compare them pairwise.
    Verify(VerifyArgs),
    /// Benchmark all algorithms over a network's layer catalog, as CSV.
    Bench(BenchArgs),
    /// Profile a network and write a per-layer selection plan.
    Select(SelectArgs),
    /// Summarize a recorded profile CSV.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Tensor dims as In,Ic,Ih,Iw.
    #[arg(long)]
    dims: String,
    /// Target nonzero fraction in [0, 1].
    #[arg(long)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Uniform real value range lo,hi (zero excluded).
    #[arg(
        long,
        default_value = "-1,1",
        conflicts_with = "int_values",
        allow_hyphen_values = true
    )]
    value_range: String,
    /// Integer value range lo,hi (zero excluded) for bit-exact fixtures.
    #[arg(long, allow_hyphen_values = true)]
    int_values: Option<String>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct KernelGeometry {
    #[arg(long)]
    kh: usize,
    #[arg(long)]
    kw: usize,
    /// Padding preset.
    #[arg(long, default_value = "valid")]
    pad: String,
}

impl KernelGeometry {
    fn config(&self, ih: usize, iw: usize) -> Result<ConvConfig> {
        let config = match self.pad.as_str() {
            "valid" => ConvConfig::valid(ih, iw, self.kh, self.kw)?,
            "same" => ConvConfig::same(ih, iw, self.kh, self.kw)?,
            other => bail!("unknown padding preset {other:?} (use valid|same)"),
        };
        Ok(config)
    }
}

#[derive(Args)]
struct EncodeArgs {
    /// Input tensor file.
    #[arg(short, long)]
    input: PathBuf,
    /// Codec: cpo or cps.
    #[arg(long)]
    codec: String,
    #[command(flatten)]
    geometry: KernelGeometry,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ConvArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// Algorithm: direct, im2col, cscc, cpo, or cps.
    #[arg(long)]
    algo: String,
    #[command(flatten)]
    geometry: KernelGeometry,
    /// Number of kernels (output channels).
    #[arg(long, default_value_t = 1)]
    kernels: usize,
    #[arg(long, default_value_t = 1)]
    kernel_seed: u64,
    /// Output tensor file (In x K x Oh x Ow).
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[command(flatten)]
    geometry: KernelGeometry,
    #[arg(long, default_value_t = 1)]
    kernels: usize,
    #[arg(long, default_value_t = 1)]
    kernel_seed: u64,
    /// Integer kernel range lo,hi for bit-exact comparison.
    #[arg(long, allow_hyphen_values = true)]
    int_kernel: Option<String>,
    /// Largest tolerated pairwise relative deviation.
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    /// Use a previously written CPO dump instead of encoding fresh.
    #[arg(long)]
    cpo_dump: Option<PathBuf>,
    /// Use a previously written CPS dump instead of encoding fresh.
    #[arg(long)]
    cps_dump: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Network tag: resnet50, resnet101, resnet152, iv1, iv3, iv4.
    #[arg(long)]
    network: String,
    /// Uniform per-layer density.
    #[arg(long, default_value_t = 0.05)]
    density: f64,
    /// Per-layer density file (layer_id density), overrides --density.
    #[arg(long)]
    density_file: Option<PathBuf>,
    /// Sample maps per layer.
    #[arg(short, long, default_value_t = 5)]
    m: usize,
    #[arg(long, default_value_t = 100)]
    iterations: usize,
    /// Take the minimum over repetitions instead of the average.
    #[arg(long)]
    use_min: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output path; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    network: String,
    /// Selection mode: favour-time or favour-space.
    #[arg(long)]
    mode: String,
    #[arg(short, long, default_value_t = 5)]
    m: usize,
    #[arg(long, default_value_t = 100)]
    iterations: usize,
    #[arg(long)]
    use_min: bool,
    #[arg(long, default_value_t = 0.05)]
    density: f64,
    #[arg(long)]
    density_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Re-run selection from a recorded profile CSV instead of timing.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Record the measured profiles to this CSV.
    #[arg(long)]
    profile_out: Option<PathBuf>,
    /// Simulate inference on fresh maps after planning.
    #[arg(long)]
    simulate: bool,
    /// Plan file output.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Recorded profile CSV.
    #[arg(long)]
    profiles: PathBuf,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen(args) => cmd_gen(args),
        Command::Encode(args) => cmd_encode(args),
        Command::Conv(args) => cmd_conv(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Select(args) => cmd_select(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn parse_pair<T: FromStr>(s: &str, what: &str) -> Result<(T, T)> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        bail!("{what} must be lo,hi");
    }
    let lo = parts[0]
        .trim()
        .parse()
        .ok()
        .with_context(|| format!("bad {what} {s:?}"))?;
    let hi = parts[1]
        .trim()
        .parse()
        .ok()
        .with_context(|| format!("bad {what} {s:?}"))?;
    Ok((lo, hi))
}

fn parse_dims(s: &str) -> Result<(usize, usize, usize, usize)> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("bad dims {s:?} (expected In,Ic,Ih,Iw)"))?;
    if parts.len() != 4 {
        bail!("dims must be In,Ic,Ih,Iw");
    }
    Ok((parts[0], parts[1], parts[2], parts[3]))
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let dims = parse_dims(&args.dims)?;
    let dist = match &args.int_values {
        Some(range) => {
            let (lo, hi) = parse_pair::<i32>(range, "int value range")?;
            ValueDist::SmallInt { lo, hi }
        }
        None => {
            let (lo, hi) = parse_pair::<f32>(&args.value_range, "value range")?;
            ValueDist::Uniform { lo, hi }
        }
    };
    let map = gen_random_map(dims, args.density, dist, args.seed)?;
    io::write_tensor(&args.output, &map)?;
    let profile = measure_density(&map);
    println!(
        "wrote {} ({}x{}x{}x{}, measured density {:.4})",
        args.output.display(),
        dims.0,
        dims.1,
        dims.2,
        dims.3,
        profile.mean_density()
    );
    Ok(())
}

fn cmd_encode(args: EncodeArgs) -> Result<()> {
    let map = io::read_tensor(&args.input)?;
    let config = args.geometry.config(map.height(), map.width())?;
    match args.codec.as_str() {
        "cpo" => {
            let enc = cpo_encode(&map, &config)?;
            io::write_cpo_dump(&args.output, &enc)?;
            println!(
                "wrote {} (ptr {}, da {}, in {} elements)",
                args.output.display(),
                enc.ptr_len(),
                enc.da_len(),
                enc.in_len()
            );
        }
        "cps" => {
            let enc = cps_encode(&map, &config)?;
            io::write_cps_dump(&args.output, &enc)?;
            println!(
                "wrote {} (ptr {}, da {}, in {} elements)",
                args.output.display(),
                enc.ptr_len(),
                enc.da_len(),
                enc.in_len()
            );
        }
        other => bail!("unknown codec {other:?} (use cpo|cps)"),
    }
    Ok(())
}

fn output_as_map(out: &OutputMap) -> Result<cpoconv::ActivationMap> {
    Ok(cpoconv::ActivationMap::new(
        out.n_images(),
        out.n_kernels(),
        out.oh(),
        out.ow(),
        out.data().to_vec(),
    )?)
}

fn cmd_conv(args: ConvArgs) -> Result<()> {
    let map = io::read_tensor(&args.input)?;
    let config = args.geometry.config(map.height(), map.width())?;
    let kernel = gen_random_kernel(
        config.kh,
        config.kw,
        map.channels(),
        args.kernels,
        ValueDist::Uniform { lo: -1.0, hi: 1.0 },
        args.kernel_seed,
    )?;
    let out = if args.algo == "direct" {
        direct_conv(&map, &kernel, &config)?
    } else {
        run_algo(Algo::from_str(&args.algo)?, &map, &kernel, &config)?
    };
    io::write_tensor(&args.output, &output_as_map(&out)?)?;
    println!(
        "wrote {} ({}x{}x{}x{})",
        args.output.display(),
        out.n_images(),
        out.n_kernels(),
        out.oh(),
        out.ow()
    );
    Ok(())
}

fn run_algo(
    algo: Algo,
    map: &cpoconv::ActivationMap,
    kernel: &Kernel,
    config: &ConvConfig,
) -> Result<OutputMap> {
    let out = match algo {
        Algo::Im2col => gemm_conv(&im2col_lower(map, config)?, kernel)?,
        Algo::Cscc => cscc_conv(&cscc_encode(map, config)?, kernel, config)?,
        Algo::Cpo => cpo_conv(&cpo_encode(map, config)?, kernel, config)?,
        Algo::Cps => cps_conv(&cps_encode(map, config)?, kernel, config)?,
        Algo::Mec => {
            bail!("the memory-efficient lowering is size-model only; pick another algorithm")
        }
    };
    Ok(out)
}

fn cmd_verify(args: VerifyArgs) -> Result<()> {
    let map = io::read_tensor(&args.input)?;
    let config = args.geometry.config(map.height(), map.width())?;
    let dist = match &args.int_kernel {
        Some(range) => {
            let (lo, hi) = parse_pair::<i32>(range, "int kernel range")?;
            ValueDist::SmallInt { lo, hi }
        }
        None => ValueDist::Uniform { lo: -1.0, hi: 1.0 },
    };
    let kernel = gen_random_kernel(
        config.kh,
        config.kw,
        map.channels(),
        args.kernels,
        dist,
        args.kernel_seed,
    )?;

    let reference = direct_conv(&map, &kernel, &config)?;
    let mut routes: Vec<(&str, OutputMap)> = vec![
        ("im2col", gemm_conv(&im2col_lower(&map, &config)?, &kernel)?),
        (
            "cscc",
            cscc_conv(&cscc_encode(&map, &config)?, &kernel, &config)?,
        ),
    ];
    if config.unit_stride() && !config.is_pointwise() {
        let cpo = match &args.cpo_dump {
            Some(path) => io::read_cpo_dump(path).context("loading cpo dump")?,
            None => cpo_encode(&map, &config)?,
        };
        routes.push(("cpo", cpo_conv(&cpo, &kernel, &config)?));
        let cps = match &args.cps_dump {
            Some(path) => io::read_cps_dump(path).context("loading cps dump")?,
            None => cps_encode(&map, &config)?,
        };
        routes.push(("cps", cps_conv(&cps, &kernel, &config)?));
    } else {
        println!("note: sparse routes skipped (pointwise or strided config)");
    }

    let mut worst = 0.0f64;
    let mut failed = false;
    for (name, out) in &routes {
        let deviation = reference.max_relative_deviation(out)?;
        worst = worst.max(deviation);
        let ok = deviation <= args.tolerance;
        failed |= !ok;
        println!(
            "direct vs {name:7} max relative deviation {deviation:.3e} {}",
            if ok { "ok" } else { "FAIL" }
        );
    }
    for i in 0..routes.len() {
        for j in i + 1..routes.len() {
            let deviation = routes[i].1.max_relative_deviation(&routes[j].1)?;
            worst = worst.max(deviation);
            let ok = deviation <= args.tolerance;
            failed |= !ok;
            println!(
                "{:6} vs {:7} max relative deviation {deviation:.3e} {}",
                routes[i].0,
                routes[j].0,
                if ok { "ok" } else { "FAIL" }
            );
        }
    }
    if failed {
        bail!(
            "verification failed: worst deviation {worst:.3e} exceeds {:.1e}",
            args.tolerance
        );
    }
    println!("verification passed (worst deviation {worst:.3e})");
    Ok(())
}

fn layer_densities(
    specs: &[LayerSpec],
    uniform: f64,
    file: &Option<PathBuf>,
) -> Result<BTreeMap<usize, f64>> {
    let mut densities: BTreeMap<usize, f64> = specs.iter().map(|s| (s.layer_id, uniform)).collect();
    if let Some(path) = file {
        for (id, d) in hybrid::read_density_file(path)? {
            if !densities.contains_key(&id) {
                bail!("density file names unknown layer {id}");
            }
            densities.insert(id, d);
        }
    }
    Ok(densities)
}

fn maps_for_layer(
    spec: &LayerSpec,
    density: f64,
    m: usize,
    seed: u64,
) -> Result<Vec<cpoconv::ActivationMap>> {
    (0..m)
        .map(|i| {
            let map_seed = seed
                .wrapping_add((spec.layer_id as u64) << 20)
                .wrapping_add(i as u64)
                .wrapping_mul(0x9E37_79B9_7F4A_7C15);
            Ok(gen_random_map(
                (1, spec.ic, spec.ih, spec.iw),
                density,
                ValueDist::Uniform { lo: -1.0, hi: 1.0 },
                map_seed,
            )?)
        })
        .collect()
}

fn profile_network(
    network: Network,
    densities: &BTreeMap<usize, f64>,
    m: usize,
    opts: &ProfileOptions,
    seed: u64,
) -> Result<Vec<hybrid::LayerProfile>> {
    let specs = layer_catalog(network);
    let mut profiles = Vec::with_capacity(specs.len());
    for spec in &specs {
        let density = densities[&spec.layer_id];
        let maps = maps_for_layer(spec, density, m, seed)?;
        eprintln!(
            "profiling {network} layer {:2} ({}x{}x{}, {}x{} kernel, d={density})",
            spec.layer_id, spec.ic, spec.ih, spec.iw, spec.kh, spec.kw
        );
        profiles.push(profile_layer(spec, &maps, opts)?);
    }
    Ok(profiles)
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let network = Network::from_str(&args.network)?;
    let specs = layer_catalog(network);
    let densities = layer_densities(&specs, args.density, &args.density_file)?;
    let opts = ProfileOptions {
        iterations: args.iterations,
        use_min: args.use_min,
        kernel_seed: args.seed,
    };
    let profiles = profile_network(network, &densities, args.m, &opts, args.seed)?;
    let rows = profile_rows(&profiles);
    match &args.output {
        Some(path) => {
            hybrid::write_profile_csv(std::fs::File::create(path)?, &rows)?;
            println!("wrote {} ({} rows)", path.display(), rows.len());
        }
        None => hybrid::write_profile_csv(std::io::stdout().lock(), &rows)?,
    }
    Ok(())
}

fn cmd_select(args: SelectArgs) -> Result<()> {
    let network = Network::from_str(&args.network)?;
    let mode = SelectionMode::from_str(&args.mode)?;
    let specs = layer_catalog(network);
    let opts = ProfileOptions {
        iterations: args.iterations,
        use_min: args.use_min,
        kernel_seed: args.seed,
    };

    let profiles = match &args.replay {
        Some(path) => {
            let rows = hybrid::read_profile_csv(path)?;
            profiles_from_rows(&rows)?
        }
        None => {
            let densities = layer_densities(&specs, args.density, &args.density_file)?;
            let profiles = profile_network(network, &densities, args.m, &opts, args.seed)?;
            if let Some(path) = &args.profile_out {
                hybrid::write_profile_csv(std::fs::File::create(path)?, &profile_rows(&profiles))?;
            }
            profiles
        }
    };

    let plan = select_plan(&profiles, mode)?;
    let mut file = std::fs::File::create(&args.output)?;
    hybrid::write_plan(&mut file, &plan, args.seed)?;
    file.flush()?;

    println!("plan written to {}", args.output.display());
    println!(
        "mode {mode}: {} selected on {:.1}% of eligible layers",
        mode.candidate(),
        100.0 * plan.selection_fraction
    );
    println!(
        "projected savings: part {:.2}%, e2e {:.2}%, average CR {:.2}x",
        100.0 * plan.projected_part,
        100.0 * plan.projected_e2e,
        plan.projected_avg_cr
    );

    if args.simulate {
        let densities = layer_densities(&specs, args.density, &args.density_file)?;
        let fresh: Vec<_> = specs
            .iter()
            .map(|s| maps_for_layer(s, densities[&s.layer_id], args.m, args.seed ^ 0x5EED))
            .collect::<Result<_>>()?;
        let report = simulate_inference(&specs, &plan, &fresh, &opts)?;
        println!(
            "simulated on fresh maps: part {:.2}%, e2e {:.2}% (profiled conv layers only), average CR {:.2}x",
            100.0 * report.part_saving,
            100.0 * report.e2e_saving,
            report.avg_cr
        );
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let rows = hybrid::read_profile_csv(&args.profiles)?;
    let profiles = profiles_from_rows(&rows)?;
    let mut totals: BTreeMap<String, (u128, u64)> = BTreeMap::new();
    for row in &rows {
        let entry = totals.entry(row.algo.clone()).or_default();
        entry.0 += row.total_ns as u128;
        entry.1 += row.size_elems;
    }
    println!("{} layers, {} rows", profiles.len(), rows.len());
    for (algo, (ns, elems)) in &totals {
        println!("{algo:7} total {:>12} ns, {:>12} elements", ns, elems);
    }
    for mode in [SelectionMode::FavourTime, SelectionMode::FavourSpace] {
        let plan = select_plan(&profiles, mode)?;
        println!(
            "{mode}: selects {} on {:.1}% of eligible layers; part {:.2}%, e2e {:.2}%, average CR {:.2}x",
            mode.candidate(),
            100.0 * plan.selection_fraction,
            100.0 * plan.projected_part,
            100.0 * plan.projected_e2e,
            plan.projected_avg_cr
        );
    }
    Ok(())
}
