use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use idecomp::admm::{E2Mode, ModelParams, StoppingRule};
use idecomp::io::{read_image, trace_csv, write_grid, write_stack_dir, write_text};
use idecomp::metrics::{acc, auc, binarize, confusion, cross_entropy, mcc, roc_points, ScoreMap};
use idecomp::ops::make_diff_bank;
use idecomp::pipeline::{decompose_multichannel, ChannelPlan, RunConfig, SolverConfig, DEFAULT_LOG_EPS};
use idecomp::selftest::run_selftest;
use idecomp::synth::{make_squares_scene, SceneSpec};
use idecomp::unroll::{load_bundle, save_bundle, ParameterBundle, DEFAULT_ALPHA_SUM, DEFAULT_BETA, DEFAULT_PENALTY};
use idecomp::{Error, Grid, GridStack, Result};

const SELFTEST_FAILED: u8 = 5;

#[derive(Parser)]
#[command(name = "idecomp", version, about = "Sparse-feature image decomposition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic rectangles-plus-impulses scene.
    Synth(SynthArgs),
    /// Decompose an image with the iterative solver.
    Decompose(DecomposeArgs),
    /// Decompose an image with an unrolled network bundle.
    Unroll(UnrollArgs),
    /// Write a default parameter bundle.
    InitBundle(InitBundleArgs),
    /// Segmentation metrics of a score map against a binary truth map.
    Metrics(MetricsArgs),
    /// Run the built-in numerical checks.
    Selftest,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SynthArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Scene size as HxW.
    #[arg(long, default_value = "16x16", value_parser = parse_size)]
    size: (usize, usize),
    #[arg(long, default_value_t = 3)]
    squares: usize,
    #[arg(long, default_value_t = 8)]
    impulses: usize,
    #[arg(long, default_value_t = 0.6)]
    amplitude: f64,
    /// Output directory; receives image.pfm, background.pfm, impulse_map.pfm, impulse_mask.pfm.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OutputArgs {
    /// Input image: .pfm, .pgm, .png or a stack directory.
    #[arg(long)]
    input: PathBuf,
    /// Smooth layer output (.pfm/.pgm for one channel, otherwise a stack directory).
    #[arg(long)]
    out_u: Option<PathBuf>,
    /// Feature layer output.
    #[arg(long)]
    out_v: Option<PathBuf>,
    /// Stacked U, V, passthrough output directory.
    #[arg(long)]
    out_stack: Option<PathBuf>,
    /// Convergence trace; multichannel runs get one file per channel with a `_ch<k>` suffix.
    #[arg(long)]
    trace_csv: Option<PathBuf>,
    /// Decompose log intensities and exponentiate the layers.
    #[arg(long)]
    log_domain: bool,
    /// Lower clamp before the logarithm.
    #[arg(long, default_value_t = DEFAULT_LOG_EPS)]
    log_eps: f64,
    /// Channels to decompose (comma separated; default all).
    #[arg(long, value_delimiter = ',')]
    channels: Option<Vec<usize>>,
    /// Channels copied unchanged into the stacked output.
    #[arg(long, value_delimiter = ',')]
    passthrough: Vec<usize>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct DecomposeArgs {
    #[command(flatten)]
    io: OutputArgs,
    /// Regularization weight per kernel; a single value applies to every kernel.
    #[arg(long = "alpha")]
    alphas: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    #[arg(long, default_value_t = DEFAULT_PENALTY)]
    rp: f64,
    #[arg(long, default_value_t = DEFAULT_PENALTY)]
    rq: f64,
    #[arg(long, default_value_t = 100)]
    iters: usize,
    /// Early stop once both primal residuals fall to this value.
    #[arg(long)]
    tol: Option<f64>,
    /// Kernel bank, `diff:M,R`.
    #[arg(long, default_value = "diff:2,1", value_parser = parse_kernels)]
    kernels: (usize, usize),
    /// Comparison mode: solve the v-block with r_q in place of 1 + r_q.
    #[arg(long)]
    paper_e2: bool,
}

#[derive(Args)]
struct UnrollArgs {
    #[command(flatten)]
    io: OutputArgs,
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    paper_e2: bool,
}

#[derive(Args)]
struct InitBundleArgs {
    /// Kernels per layer.
    #[arg(long = "m", default_value_t = 2)]
    width: usize,
    /// Number of layers.
    #[arg(long = "l", default_value_t = 100)]
    depth: usize,
    /// Kernel radius.
    #[arg(long = "r", default_value_t = 1)]
    radius: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct MetricsArgs {
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Evaluation region; pixels > 0.5 are counted.
    #[arg(long)]
    region: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Also write the ROC curve as fpr,tpr rows.
    #[arg(long)]
    roc_csv: Option<PathBuf>,
}

fn parse_size(s: &str) -> std::result::Result<(usize, usize), String> {
    let (h, w) = s.split_once(['x', 'X']).ok_or("expected HxW")?;
    let h = h.trim().parse().map_err(|_| format!("bad height `{h}`"))?;
    let w = w.trim().parse().map_err(|_| format!("bad width `{w}`"))?;
    Ok((h, w))
}

fn parse_kernels(s: &str) -> std::result::Result<(usize, usize), String> {
    let rest = s.strip_prefix("diff:").ok_or("expected diff:M,R")?;
    let (m, r) = rest.split_once(',').ok_or("expected diff:M,R")?;
    let m = m.trim().parse().map_err(|_| format!("bad kernel count `{m}`"))?;
    let r = r.trim().parse().map_err(|_| format!("bad radius `{r}`"))?;
    Ok((m, r))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Decompose(a) => decompose(a),
        Command::Unroll(a) => unroll(a),
        Command::InitBundle(a) => init_bundle(a),
        Command::Metrics(a) => metrics(a),
        Command::Selftest => return selftest(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn synth(a: SynthArgs) -> Result<()> {
    let spec = SceneSpec {
        seed: a.seed,
        height: a.size.0,
        width: a.size.1,
        n_squares: a.squares,
        n_impulses: a.impulses,
        impulse_amplitude: a.amplitude,
    };
    let scene = make_squares_scene(&spec)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::Io {
        path: a.out.clone(),
        source: e,
    })?;
    for (name, g) in [
        ("image", &scene.image),
        ("background", &scene.background),
        ("impulse_map", &scene.impulse_map),
        ("impulse_mask", &scene.impulse_mask),
    ] {
        write_grid(a.out.join(format!("{name}.pfm")), g)?;
    }
    Ok(())
}

fn decompose(a: DecomposeArgs) -> Result<()> {
    let (m, r) = a.kernels;
    let bank = make_diff_bank(m, r)?;
    let alphas = match a.alphas.len() {
        0 => vec![DEFAULT_ALPHA_SUM / m as f64; m],
        1 => vec![a.alphas[0]; m],
        _ => a.alphas.clone(),
    };
    let e2 = if a.paper_e2 { E2Mode::Paper } else { E2Mode::Corrected };
    let params = ModelParams::new(alphas, a.beta, a.rp, a.rq)?.with_e2_mode(e2);
    params.validate(bank.width())?;
    let stop = StoppingRule {
        max_iters: a.iters,
        tol: a.tol,
    };
    run(&a.io, SolverConfig::Admm { bank, params, stop })
}

fn unroll(a: UnrollArgs) -> Result<()> {
    let mut bundle = load_bundle(&a.bundle)?;
    if a.paper_e2 {
        bundle.set_e2_mode(E2Mode::Paper);
    }
    run(&a.io, SolverConfig::Unroll { bundle })
}

fn run(io: &OutputArgs, solver: SolverConfig) -> Result<()> {
    let input = read_image(&io.input)?;
    let plan = ChannelPlan {
        decompose: io.channels.clone().unwrap_or_else(|| {
            (0..input.len()).filter(|c| !io.passthrough.contains(c)).collect()
        }),
        passthrough: io.passthrough.clone(),
        log_domain: io.log_domain,
    };
    let mut config = RunConfig::new(solver);
    config.trace = io.trace_csv.is_some();
    config.log_eps = io.log_eps;
    let out = decompose_multichannel(&input, &plan, &config)?;

    if let Some(p) = &io.out_u {
        write_layer(p, "u", &out.u)?;
    }
    if let Some(p) = &io.out_v {
        write_layer(p, "v", &out.v)?;
    }
    if let Some(p) = &io.out_stack {
        let names: Vec<String> = (0..out.u.len())
            .map(|k| format!("u{k}"))
            .chain((0..out.v.len()).map(|k| format!("v{k}")))
            .chain(plan.passthrough.iter().map(|c| format!("f{c}")))
            .collect();
        write_stack_dir(p, &names, &out.stacked)?;
    }
    if let Some(p) = &io.trace_csv {
        let single = out.traces.len() == 1;
        for (k, rows) in out.traces.iter().enumerate() {
            let rows = rows.as_deref().unwrap_or_default();
            let target = if single { p.clone() } else { suffixed(p, plan.decompose[k]) };
            write_text(&target, &trace_csv(rows))?;
        }
    }
    Ok(())
}

fn write_layer(path: &Path, prefix: &str, stack: &GridStack) -> Result<()> {
    if is_image_file(path) {
        if stack.len() != 1 {
            return Err(Error::Argument(format!(
                "{} holds one channel but the run produced {}; pass a directory instead",
                path.display(),
                stack.len()
            )));
        }
        return write_grid(path, &stack[0]);
    }
    let names: Vec<String> = (0..stack.len()).map(|k| format!("{prefix}{k}")).collect();
    write_stack_dir(path, &names, stack)
}

fn is_image_file(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("pfm" | "pgm")
    )
}

fn suffixed(path: &Path, channel: usize) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_ch{channel}.{ext}"),
        None => format!("{stem}_ch{channel}"),
    };
    path.with_file_name(name)
}

fn init_bundle(a: InitBundleArgs) -> Result<()> {
    let bundle = ParameterBundle::init_default(a.width, a.depth, a.radius)?;
    save_bundle(&bundle, &a.out)
}

fn single_channel(path: &Path) -> Result<Grid> {
    let stack = read_image(path)?;
    if stack.len() != 1 {
        return Err(Error::Argument(format!(
            "{} has {} channels, expected 1",
            path.display(),
            stack.len()
        )));
    }
    Ok(stack.into_channels().remove(0))
}

fn metrics(a: MetricsArgs) -> Result<()> {
    let scores = single_channel(&a.scores)?;
    let truth = single_channel(&a.truth)?;
    let region = a.region.as_deref().map(single_channel).transpose()?;
    let map = ScoreMap::new(scores.clone(), region.clone())?;
    let counts = confusion(&binarize(&scores, a.threshold), &truth, region.as_ref())?;
    let row = [auc(&map, &truth)?, acc(&counts)?, mcc(&counts)?, cross_entropy(&map, &truth)?];
    println!("auc,acc,mcc,cross_entropy");
    println!("{},{},{},{}", row[0], row[1], row[2], row[3]);
    if let Some(p) = &a.roc_csv {
        let mut text = String::from("fpr,tpr\n");
        for (fpr, tpr) in roc_points(&map, &truth)? {
            text.push_str(&format!("{fpr},{tpr}\n"));
        }
        write_text(p, &text)?;
    }
    Ok(())
}

fn selftest() -> ExitCode {
    let results = match run_selftest() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: selftest aborted: {e}");
            return ExitCode::from(SELFTEST_FAILED);
        }
    };
    let mut ok = true;
    for r in &results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        ok &= r.passed;
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        eprintln!("error: selftest failed");
        ExitCode::from(SELFTEST_FAILED)
    }
}
