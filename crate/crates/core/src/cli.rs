//! Command-line interface.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::config::SceneConfig;
use crate::error::{Error, Result};
use crate::eval::{compute_metrics, extract_profile, find_jumps, Metrics};
use crate::geometry::Calibration;
use crate::lightfield::{central_view, load_lightfield, DisparityMap, LightField};
use crate::matcher::{
    cost_curve, estimate_disparity, initial_disparity, EstimatorConfig, WindowStrategy,
};
use crate::pfm::{read_pfm, write_pfm};
use crate::region::{identify_regions, RegionMap};
use crate::synth::{render, write_scene, SceneSpec};
use crate::volume::CostNorm;
use crate::window::WindowSelector;

#[derive(Debug, Parser)]
#[command(name = "lf-entropy", version, about = "Light-field disparity estimation with entropy-selected windows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the central-view disparity of a light-field directory.
    Estimate(EstimateArgs),
    /// Render a synthetic scene with ground truth.
    Synth(SynthArgs),
    /// Compare a disparity map against ground truth (JSON on stdout).
    Eval(EvalArgs),
    /// Write the region map of the central view.
    Regions(RegionsArgs),
    /// Show the window search and cost curve for one pixel.
    InspectWindow(InspectArgs),
    /// Print one row of a disparity map and its jumps.
    Profile(ProfileArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Baseline {
    Adaptive,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Norm {
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    Plane,
    TwoLayer,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Directory holding input_CamNNN.png views.
    #[arg(long)]
    input: PathBuf,
    /// Scene configuration; defaults to <input>/parameters.cfg.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimatorArgs {
    #[arg(long)]
    alpha1: Option<f64>,
    #[arg(long)]
    alpha2: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// TV regularization weight.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    tv_iters: Option<usize>,
    #[arg(long)]
    fine_step: Option<f64>,
    #[arg(long)]
    coarse_step: Option<f64>,
    /// Number of disparity layers for region identification.
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long, value_enum)]
    norm: Option<Norm>,
    /// Sum costs over viewpoints instead of averaging.
    #[arg(long)]
    unnormalized: bool,
    #[arg(long)]
    disp_min: Option<f64>,
    #[arg(long)]
    disp_max: Option<f64>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    out: PathBuf,
    /// Color-coded region map.
    #[arg(long)]
    regions: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "adaptive")]
    baseline: Baseline,
    /// Side of the square window used by the fixed baseline.
    #[arg(long, default_value_t = 9)]
    fixed_side: usize,
    /// Skip TV refinement.
    #[arg(long)]
    no_tv: bool,
    /// Ground truth for the report; defaults to the config's ground truth.
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Print a JSON report on stdout.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    params: EstimatorArgs,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// TOML scene description.
    #[arg(long, conflicts_with = "preset")]
    spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long)]
    out: PathBuf,
    /// Sensor noise added after rendering; overrides the scene description.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    est: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Label PGM for per-region metrics.
    #[arg(long)]
    regions: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RegionsArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    out: PathBuf,
    /// Raw label map (0 occluding, 1 occluded, 2 texture, 3 smooth).
    #[arg(long)]
    pgm: Option<PathBuf>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    x: usize,
    #[arg(long)]
    y: usize,
    #[command(flatten)]
    params: EstimatorArgs,
}

#[derive(Debug, Args)]
struct ProfileArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    row: usize,
    /// Smallest step reported as a jump.
    #[arg(long, default_value_t = 0.3)]
    threshold: f64,
    #[arg(long)]
    json: bool,
}

/// Parameters echoed in the estimation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub grid_step: f64,
    pub coarse_step: f64,
    pub strategy: WindowStrategy,
    pub norm: CostNorm,
    pub layers: usize,
    pub tv_iters: usize,
    pub tv: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scene: String,
    pub params: ReportParams,
    pub metrics: Option<Metrics>,
    pub per_region: BTreeMap<String, Metrics>,
    pub region_counts: BTreeMap<String, usize>,
    pub valid_fraction: f64,
    pub runtime_seconds: f64,
}

/// Runs the command line and returns the process exit code: 0 on success,
/// 1 for usage or input errors, 2 for internal failures.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_user_error() {
                1
            } else {
                2
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Estimate(args) => estimate(args),
        Command::Synth(args) => synth(args),
        Command::Eval(args) => eval(args),
        Command::Regions(args) => regions(args),
        Command::InspectWindow(args) => inspect(args),
        Command::Profile(args) => profile(args),
    }
}

fn load_input(input: &InputArgs) -> Result<(SceneConfig, LightField, Calibration)> {
    let path = input
        .config
        .clone()
        .unwrap_or_else(|| input.input.join("parameters.cfg"));
    let config = SceneConfig::load(&path)?;
    let lf = load_lightfield(&input.input, &config)?;
    let cal = Calibration::for_grid(lf.angular(), config.focus_distance, config.baseline_step)?;
    Ok((config, lf, cal))
}

fn estimator_config(scene: &SceneConfig, args: &EstimatorArgs) -> Result<EstimatorConfig> {
    let mut c = EstimatorConfig::from_scene(scene);
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut c.disparity_min, args.disp_min);
    set(&mut c.disparity_max, args.disp_max);
    set(&mut c.alpha1, args.alpha1);
    set(&mut c.alpha2, args.alpha2);
    set(&mut c.lambda, args.lambda);
    set(&mut c.tv.gamma, args.gamma);
    set(&mut c.fine_step, args.fine_step);
    set(&mut c.coarse_step, args.coarse_step);
    if let Some(n) = args.tv_iters {
        c.tv.max_iters = n;
    }
    if let Some(n) = args.layers {
        if n == 0 {
            return Err(Error::BadConfig("layers must be at least 1".into()));
        }
        c.regions.segmentation.layers = n;
    }
    if let Some(n) = args.norm {
        c.matching.norm = match n {
            Norm::L1 => CostNorm::L1,
            Norm::L2 => CostNorm::L2,
        };
    }
    c.matching.normalize_by_views = !args.unnormalized;
    if !(c.tv.gamma >= 0.0) {
        return Err(Error::BadConfig("gamma must be non-negative".into()));
    }
    Ok(c)
}

fn scene_name(dir: &Path) -> String {
    dir.canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| dir.display().to_string())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

fn estimate(args: EstimateArgs) -> Result<()> {
    let start = Instant::now();
    let (scene, lf, cal) = load_input(&args.input)?;
    let mut config = estimator_config(&scene, &args.params)?;
    config.strategy = match args.baseline {
        Baseline::Adaptive => WindowStrategy::Adaptive,
        Baseline::Fixed => WindowStrategy::Fixed {
            side: args.fixed_side,
        },
    };
    let est = estimate_disparity(&lf, &cal, &config)?;
    let result = if args.no_tv {
        est.disparity.clone()
    } else {
        est.refined(&config.tv)
    };
    write_pfm(&result, &args.out)?;
    if let Some(path) = &args.regions {
        est.regions.write_color_png(path)?;
    }
    if args.json {
        let gt_path = args.gt.clone().or(scene.ground_truth.clone());
        let gt = match gt_path {
            Some(p) if p.exists() => Some(read_pfm(&p)?),
            _ => None,
        };
        let (metrics, per_region) = match gt {
            Some(gt) => {
                let r = compute_metrics(&result, &gt, Some(&est.regions), None)?;
                (Some(r.overall), r.per_region)
            }
            None => (None, BTreeMap::new()),
        };
        let counts = est.regions.counts();
        let report = RunReport {
            scene: scene_name(&args.input.input),
            params: ReportParams {
                alpha1: config.alpha1,
                alpha2: config.alpha2,
                lambda: config.lambda,
                gamma: config.tv.gamma,
                grid_step: config.fine_step,
                coarse_step: config.coarse_step,
                strategy: config.strategy,
                norm: config.matching.norm,
                layers: config.regions.segmentation.layers,
                tv_iters: config.tv.max_iters,
                tv: !args.no_tv,
            },
            metrics,
            per_region,
            region_counts: crate::region::Region::ALL
                .iter()
                .map(|r| (r.name().to_string(), counts[r.index()]))
                .collect(),
            valid_fraction: result.valid_count() as f64 / result.len().max(1) as f64,
            runtime_seconds: start.elapsed().as_secs_f64(),
        };
        print_json(&report)?;
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let mut spec = match (&args.spec, args.preset) {
        (Some(path), _) => SceneSpec::load(path)?,
        (None, Some(Preset::Plane)) => SceneSpec::plane(),
        (None, Some(Preset::TwoLayer)) | (None, None) => SceneSpec::two_layer(),
    };
    if let Some(sigma) = args.noise {
        spec.noise_sigma = sigma;
    }
    if let Some(seed) = args.seed {
        spec.noise_seed = seed;
    }
    let scene = render(&spec)?;
    write_scene(&scene, &spec, &args.out)
}

fn eval(args: EvalArgs) -> Result<()> {
    let est = read_pfm(&args.est)?;
    let gt = read_pfm(&args.gt)?;
    let regions = args.regions.as_deref().map(RegionMap::read_pgm).transpose()?;
    let report = compute_metrics(&est, &gt, regions.as_ref(), None)?;
    print_json(&report)
}

fn regions(args: RegionsArgs) -> Result<()> {
    let (scene, lf, cal) = load_input(&args.input)?;
    let mut config = EstimatorConfig::from_scene(&scene);
    if let Some(n) = args.layers {
        config.regions.segmentation.layers = n.max(1);
    }
    let grid = config.coarse_grid()?;
    let init = initial_disparity(&lf, &cal, &grid);
    let analysis = identify_regions(&lf, &init, &grid, &config.regions)?;
    analysis.regions.write_color_png(&args.out)?;
    if let Some(p) = &args.pgm {
        analysis.regions.write_pgm(p)?;
    }
    if analysis.occlusion_skipped {
        eprintln!("warning: initial disparity too sparse, occlusion detection skipped");
    }
    if args.json {
        let counts = analysis.regions.counts();
        let summary: BTreeMap<&str, serde_json::Value> = [
            (
                "counts",
                serde_json::json!(crate::region::Region::ALL
                    .iter()
                    .map(|r| (r.name(), counts[r.index()]))
                    .collect::<BTreeMap<_, _>>()),
            ),
            ("thresholds", serde_json::json!(analysis.thresholds)),
            ("occlusion_skipped", serde_json::json!(analysis.occlusion_skipped)),
        ]
        .into_iter()
        .collect();
        print_json(&summary)?;
    }
    Ok(())
}

fn inspect(args: InspectArgs) -> Result<()> {
    let (scene, lf, cal) = load_input(&args.input)?;
    let (w, h) = lf.spatial();
    if args.x >= w || args.y >= h {
        return Err(Error::BadConfig(format!("pixel ({}, {}) outside {w}x{h}", args.x, args.y)));
    }
    let config = estimator_config(&scene, &args.params)?;
    let coarse = config.coarse_grid()?;
    let fine = config.fine_grid()?;
    let init = initial_disparity(&lf, &cal, &coarse);
    let analysis = identify_regions(&lf, &init, &coarse, &config.regions)?;
    let selector = WindowSelector::new(
        central_view(&lf),
        &init,
        &analysis.regions,
        config.entropy_params(),
        lf.angular(),
    )?;
    let anchor = (args.x, args.y);
    let choice = selector.select(anchor);
    let curve = cost_curve(&lf, anchor, &choice, &fine, &cal, &config.matching);
    let label = analysis.regions.get(args.x, args.y);
    let report = serde_json::json!({
        "pixel": [args.x, args.y],
        "region": label,
        "initial_disparity": init.get(args.x, args.y),
        "window": {
            "shape": choice.window.shape.name(),
            "side": choice.window.side,
            "entropy": choice.entropy,
        },
        "viewpoints": choice.viewpoints.views(),
        "candidates": selector.candidates(anchor).iter().map(|c| serde_json::json!({
            "shape": c.window.shape.name(),
            "side": c.window.side,
            "entropy": c.entropy,
        })).collect::<Vec<_>>(),
        "cost_curve": fine.samples().iter().zip(&curve.costs).zip(&curve.valid_fraction)
            .map(|((d, c), f)| serde_json::json!({"disparity": d, "cost": c.is_finite().then_some(*c), "valid_fraction": f}))
            .collect::<Vec<_>>(),
        "argmin": curve.argmin().map(|k| fine.samples()[k]),
        "refined": crate::matcher::subpixel_refine(&curve, &fine),
    });
    print_json(&report)
}

fn profile(args: ProfileArgs) -> Result<()> {
    let map: DisparityMap = read_pfm(&args.map)?;
    let profile = extract_profile(&map, args.row)?;
    let jumps = find_jumps(&profile, args.threshold);
    if args.json {
        return print_json(&serde_json::json!({"row": args.row, "profile": profile, "jumps": jumps}));
    }
    let mut out = std::io::stdout().lock();
    let io = |e| Error::io("<stdout>", e);
    writeln!(out, "x,value").map_err(io)?;
    for (x, v) in &profile {
        match v {
            Some(v) => writeln!(out, "{x},{v}"),
            None => writeln!(out, "{x},nan"),
        }
        .map_err(io)?;
    }
    for j in &jumps {
        writeln!(out, "# jump at x={} size={:.4}", j.x, j.size).map_err(io)?;
    }
    Ok(())
}
