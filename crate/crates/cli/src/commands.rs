//! The subcommands. Each resolves its settings (flags over config file over
//! defaults), runs, and writes one CSV plus `<command>.manifest.json`.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use rntk::baseline::{BaselineParams, Padding};
use rntk::datasets::{make_csv_task, make_sinusoid_task, normalize_sequences, read_series_csv, TaskConfig, WindowedRegressionTask};
use rntk::experiments::{
    alpha_curve, convergence_sweep, evaluate_family, grids, loglog_slope, previous_step_snr, random_pairs, KernelSpec, ModelFamily,
};
use rntk::oracle::{drift_experiment, eta_star, FiniteRnn};
use rntk::rng::{self, streams};
use rntk::sensitivity::{sensitivity_profile, DEFAULT_FD_STEP, DEFAULT_TRIALS};
use rntk::{gram as rntk_gram, Error, GramMatrix, KernelKind, RntkParams, Sequence};
use serde_json::{json, Value};

use crate::config::{
    BaselineConfig, ConvergeConfig, CurveConfig, DriftConfig, ExperimentConfig, KernelConfig, Overlay, RegressConfig, SensitivityConfig,
};
use crate::output::{cell, number, Manifest, OutputDir};

type Result<T> = std::result::Result<T, Error>;

pub struct Context {
    out: PathBuf,
    seed: u64,
    start: Instant,
}

impl Context {
    pub fn new(file: &ExperimentConfig, out: Option<PathBuf>, seed: Option<u64>) -> Self {
        Context {
            out: out.or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from(".")),
            seed: seed.or(file.seed).unwrap_or(0),
            start: Instant::now(),
        }
    }

    fn finish(&self, mut dir: OutputDir, command: &str, settings: Value, summary: Value) -> Result<()> {
        let manifest_name = format!("{command}.manifest.json");
        let mut outputs = dir.written().to_vec();
        outputs.push(self.out.join(&manifest_name).display().to_string());
        let manifest = Manifest {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            settings,
            summary,
            outputs,
            wall_seconds: self.start.elapsed().as_secs_f64(),
        };
        dir.json(&manifest_name, &manifest)?;
        for path in dir.written() {
            println!("wrote {path}");
        }
        Ok(())
    }
}

fn kernel_params(flags: KernelConfig, file: &ExperimentConfig, seed: u64) -> Result<(KernelConfig, RntkParams)> {
    let merged = flags.overlay(file.kernel.clone());
    let mc_seed = rng::derive_seed(seed, streams::KERNEL_MC, &[]);
    let params = merged.to_params(mc_seed)?;
    Ok((merged, params))
}

fn padding(name: Option<&str>) -> Result<Padding> {
    match name.unwrap_or("zero-pad") {
        "zero-pad" | "zero_pad" => Ok(Padding::ZeroPadToMax),
        "error-on-mismatch" | "error_on_mismatch" | "strict" => Ok(Padding::ErrorOnMismatch),
        other => Err(Error::InvalidParam(format!(
            "unknown padding '{other}' (expected zero-pad or error-on-mismatch)"
        ))),
    }
}

/// A single baseline kernel from the merged settings.
fn baseline(kind: &str, b: &BaselineConfig) -> Result<BaselineParams> {
    let p = match kind {
        "rbf" => BaselineParams::rbf(b.alpha.unwrap_or(1.0))?,
        "poly" => BaselineParams::polynomial(b.degree.unwrap_or(2), b.offset.unwrap_or(1.0))?,
        "mlp-ntk" => BaselineParams::mlp_ntk(
            b.mlp_depth.unwrap_or(1),
            b.mlp_sigma_w.unwrap_or(std::f64::consts::SQRT_2),
            b.mlp_sigma_b.unwrap_or(0.0),
        )?,
        other => return Err(Error::InvalidParam(format!("'{other}' is not a baseline kernel"))),
    };
    Ok(p.with_padding(padding(b.padding.as_deref())?))
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::InvalidParam(format!("cannot parse '{v}' in {what}")))
        })
        .collect()
}

fn read_sequence(path: &Path) -> Result<Sequence> {
    let file = File::open(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let (values, dim) = read_series_csv(file).map_err(|e| match e {
        Error::Parse { line, msg } => Error::Parse {
            line,
            msg: format!("{}: {msg}", path.display()),
        },
        other => other,
    })?;
    let id = path
        .file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    Ok(Sequence::from_flat(values, dim)?.with_id(id))
}

#[derive(Debug, Args)]
pub struct GramArgs {
    /// One CSV per sequence: one row per time step, one column per input dimension
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// rntk, nngp, rbf, poly or mlp-ntk
    #[arg(long, default_value = "rntk")]
    kernel: String,
    /// Comma-separated class labels for the precomputed-kernel export (default 0)
    #[arg(long)]
    labels: Option<String>,
    /// Scale each flattened sequence to unit norm first
    #[arg(long)]
    normalize: bool,
    #[command(flatten)]
    rntk: KernelConfig,
    #[command(flatten)]
    baseline: BaselineConfig,
}

pub fn gram(ctx: &Context, file: &ExperimentConfig, a: GramArgs) -> Result<()> {
    let mut data: Vec<Sequence> = a.inputs.iter().map(|p| read_sequence(p)).collect::<Result<_>>()?;
    if a.normalize {
        let ids: Vec<Option<String>> = data.iter().map(|s| s.id.clone()).collect();
        data = normalize_sequences(&data)?
            .into_iter()
            .zip(ids)
            .map(|(s, id)| match id {
                Some(id) => s.with_id(id),
                None => s,
            })
            .collect();
    }
    let labels: Vec<String> = match &a.labels {
        Some(l) => l.split(',').map(|s| s.trim().to_string()).collect(),
        None => vec!["0".to_string(); data.len()],
    };
    if labels.len() != data.len() {
        return Err(Error::InvalidParam(format!("{} labels for {} sequences", labels.len(), data.len())));
    }
    let (settings, g): (Value, GramMatrix) = match a.kernel.as_str() {
        "rntk" | "nngp" => {
            let (merged, params) = kernel_params(a.rntk, file, ctx.seed)?;
            let kind = if a.kernel == "rntk" { KernelKind::Theta } else { KernelKind::Nngp };
            (json!({ "kernel": a.kernel, "rntk": merged }), rntk_gram(&params, &data, kind)?)
        }
        kind => {
            let merged = a.baseline.overlay(file.baseline.clone());
            let spec = baseline(kind, &merged)?.padded_for(&data);
            (
                json!({ "kernel": kind, "baseline": merged }),
                KernelSpec::Baseline(spec).gram(&data)?,
            )
        }
    };
    let (lo, hi) = g.eigen_range()?;
    println!("{}: {} x {}", g.descriptor, g.nrows(), g.ncols());
    println!("min eigenvalue {lo:.6e}, max eigenvalue {hi:.6e}");
    if lo < -1e-8 * hi.abs() {
        println!("warning: Gram matrix is not positive semi-definite to working precision");
    }
    let mut dir = OutputDir::create(&ctx.out)?;
    g.write_csv(dir.file("gram.csv")?)?;
    let mut pre = dir.file("gram.precomputed")?;
    g.write_precomputed(&mut pre, &labels)?;
    pre.flush()?;
    let mut settings = settings;
    settings["inputs"] = json!(a.inputs);
    settings["normalize"] = json!(a.normalize);
    let summary = json!({
        "descriptor": g.descriptor,
        "size": g.nrows(),
        "min_eigenvalue": lo,
        "max_eigenvalue": hi,
        "max_asymmetry": g.max_asymmetry(),
    });
    ctx.finish(dir, "gram", settings, summary)
}

#[derive(Debug, Args)]
pub struct RegressArgs {
    /// Number of independently drawn tasks
    #[arg(long)]
    repeats: Option<usize>,
    /// Comma-separated kernel families: rntk, nngp, rbf, poly, mlp-ntk (PTS is always reported)
    #[arg(long)]
    families: Option<String>,
    /// Comma-separated ridge parameters
    #[arg(long)]
    lambdas: Option<String>,
    /// Cross-validation folds for choosing kernel and ridge parameter
    #[arg(long)]
    folds: Option<usize>,
    /// "paper": full hyperparameter grids; "fixed": the single kernel given by the kernel/baseline flags
    #[arg(long)]
    grid: Option<String>,
    /// Test on the training windows (sanity check for exact interpolation)
    #[arg(long)]
    evaluate_on_train: bool,
    /// Series CSV instead of the simulated sinusoid
    #[arg(long)]
    csv: Option<PathBuf>,
    /// First row of the test region in the CSV series
    #[arg(long)]
    split: Option<usize>,
    #[arg(long)]
    t_fixed: Option<usize>,
    #[arg(long)]
    t_var: Option<usize>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    /// Do not standardise CSV series
    #[arg(long)]
    no_standardize: bool,
    #[command(flatten)]
    rntk: KernelConfig,
    #[command(flatten)]
    baseline: BaselineConfig,
}

fn family(name: &str, grid: &str, rntk: &RntkParams, b: &BaselineConfig) -> Result<ModelFamily> {
    if grid == "paper" {
        return match name {
            "rntk" => Ok(grids::rntk()),
            "rbf" => Ok(grids::rbf()),
            "poly" => Ok(grids::polynomial()),
            "mlp-ntk" => Ok(grids::mlp_ntk()),
            "nngp" => {
                let mut f = grids::rntk();
                f.name = "nngp".into();
                for c in &mut f.candidates {
                    if let KernelSpec::Rntk(p) = c {
                        *c = KernelSpec::Nngp(p.clone());
                    }
                }
                Ok(f)
            }
            other => Err(Error::InvalidParam(format!("unknown family '{other}'"))),
        };
    }
    if grid != "fixed" {
        return Err(Error::InvalidParam(format!("unknown grid '{grid}' (expected paper or fixed)")));
    }
    let spec = match name {
        "rntk" => KernelSpec::Rntk(rntk.clone()),
        "nngp" => KernelSpec::Nngp(rntk.clone()),
        other => KernelSpec::Baseline(baseline(other, b)?),
    };
    Ok(ModelFamily {
        name: name.into(),
        candidates: vec![spec],
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn regress(ctx: &Context, file: &ExperimentConfig, a: RegressArgs) -> Result<()> {
    let r = RegressConfig {
        repeats: a.repeats,
        families: a.families.as_deref().map(|s| parse_list(s, "--families")).transpose()?,
        lambdas: a.lambdas.as_deref().map(|s| parse_list(s, "--lambdas")).transpose()?,
        folds: a.folds,
        grid: a.grid,
        evaluate_on_train: a.evaluate_on_train.then_some(true),
        csv: a.csv,
        split: a.split,
    }
    .overlay(file.regress.clone());
    let repeats = r.repeats.unwrap_or(10);
    let families = r
        .families
        .clone()
        .unwrap_or_else(|| ["rntk", "rbf", "mlp-ntk", "poly"].map(String::from).to_vec());
    let lambdas = r.lambdas.clone().unwrap_or_else(|| grids::LAMBDA.to_vec());
    let folds = r.folds.unwrap_or(5);
    let grid = r.grid.clone().unwrap_or_else(|| "paper".into());
    if repeats == 0 {
        return Err(Error::InvalidParam("repeats must be at least 1".into()));
    }
    if lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::InvalidParam(format!("ridge parameters must be >= 0, got {lambdas:?}")));
    }

    let mut task_cfg = file.task.clone().unwrap_or_default();
    task_cfg.t_fixed = a.t_fixed.unwrap_or(task_cfg.t_fixed);
    task_cfg.t_var = a.t_var.unwrap_or(task_cfg.t_var);
    task_cfg.noise_sigma = a.noise_sigma.unwrap_or(task_cfg.noise_sigma);
    task_cfg.n_train = a.n_train.unwrap_or(task_cfg.n_train);
    task_cfg.n_test = a.n_test.unwrap_or(task_cfg.n_test);
    if a.no_standardize {
        task_cfg.standardize = false;
    }
    task_cfg.validate()?;

    let (kernel_cfg, rntk) = kernel_params(a.rntk, file, ctx.seed)?;
    let baseline_cfg = a.baseline.overlay(file.baseline.clone());
    let fams: Vec<ModelFamily> = families
        .iter()
        .map(|f| family(f, &grid, &rntk, &baseline_cfg))
        .collect::<Result<_>>()?;

    let make_task = |rep: usize| -> Result<WindowedRegressionTask> {
        let cfg = TaskConfig {
            seed: rng::derive_seed(ctx.seed, "repeat", &[rep as u64]),
            ..task_cfg.clone()
        };
        let mut task = match &r.csv {
            Some(path) => {
                let split = r.split.ok_or_else(|| Error::InvalidParam("--csv needs --split".into()))?;
                make_csv_task(path, split, &cfg)?
            }
            None => make_sinusoid_task(&cfg)?,
        };
        if r.evaluate_on_train.unwrap_or(false) {
            task.test = task.train.clone();
        }
        Ok(task)
    };

    let mut rows = Vec::new();
    let mut snr: Vec<Vec<f64>> = vec![Vec::new(); fams.len() + 1];
    let mut first_task = None;
    for rep in 0..repeats {
        let task = make_task(rep)?;
        for (i, fam) in fams.iter().enumerate() {
            let res = evaluate_family(&task, fam, &lambdas, folds)?;
            rows.push(vec![
                cell(rep),
                res.name.clone(),
                cell(res.snr_db),
                format!("\"{}\"", res.chosen),
                cell(res.lambda),
                cell(res.cv_mse),
            ]);
            snr[i].push(res.snr_db);
        }
        let pts = previous_step_snr(&task)?;
        rows.push(vec![
            cell(rep),
            "pts".into(),
            cell(pts),
            "\"previous step\"".into(),
            String::new(),
            String::new(),
        ]);
        snr[fams.len()].push(pts);
        if rep == 0 {
            first_task = Some(task.manifest());
        }
    }

    let names: Vec<&str> = fams.iter().map(|f| f.name.as_str()).chain(["pts"]).collect();
    let summary: Vec<Value> = names
        .iter()
        .zip(&snr)
        .map(|(name, v)| {
            let m = mean(v);
            println!(
                "{name:>8}: mean SNR {} dB over {} repeats",
                if m.is_infinite() { "inf".to_string() } else { format!("{m:.3}") },
                v.len()
            );
            json!({
                "family": name,
                "mean_snr_db": number(m),
                "snr_db": v.iter().map(|&x| number(x)).collect::<Vec<_>>(),
            })
        })
        .collect();

    let mut dir = OutputDir::create(&ctx.out)?;
    dir.csv("regress.csv", &["repeat", "family", "snr_db", "chosen", "lambda", "cv_mse"], &rows)?;
    dir.json("regress.json", &summary)?;
    dir.json("task.json", &first_task)?;
    let settings = json!({
        "repeats": repeats,
        "families": families,
        "lambdas": lambdas,
        "folds": folds,
        "grid": grid,
        "evaluate_on_train": r.evaluate_on_train.unwrap_or(false),
        "csv": r.csv,
        "split": r.split,
        "task": task_cfg,
        "rntk": kernel_cfg,
        "baseline": baseline_cfg,
    });
    ctx.finish(dir, "regress", settings, Value::Array(summary))
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    /// Sequence length T
    #[arg(long)]
    length: Option<usize>,
    /// Input dimension m
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    /// Central-difference step
    #[arg(long)]
    fd_step: Option<f64>,
    #[command(flatten)]
    rntk: KernelConfig,
}

pub fn sensitivity(ctx: &Context, file: &ExperimentConfig, a: SensitivityArgs) -> Result<()> {
    let s = SensitivityConfig {
        length: a.length,
        dim: a.dim,
        trials: a.trials,
        fd_step: a.fd_step,
    }
    .overlay(file.sensitivity.clone());
    let (kernel_cfg, params) = kernel_params(a.rntk, file, ctx.seed)?;
    let (len, dim) = (s.length.unwrap_or(100), s.dim.unwrap_or(1));
    let trials = s.trials.unwrap_or(DEFAULT_TRIALS);
    let fd_step = s.fd_step.unwrap_or(DEFAULT_FD_STEP);
    let trial_seed = rng::derive_seed(ctx.seed, streams::TRIALS, &[]);
    let prof = sensitivity_profile(&params, len, dim, trials, trial_seed, fd_step)?;
    let rows: Vec<Vec<String>> = prof
        .raw
        .iter()
        .zip(&prof.normalized)
        .enumerate()
        .map(|(t, (r, n))| vec![cell(t + 1), cell(r), cell(n)])
        .collect();
    let argmax = prof.normalized.iter().position(|&v| v == 1.0).map_or(0, |i| i + 1);
    let min = prof.normalized.iter().copied().fold(f64::INFINITY, f64::min);
    println!("{}: argmax t = {argmax}, min normalized {min:.4}", params.descriptor());
    let mut dir = OutputDir::create(&ctx.out)?;
    dir.csv("sensitivity.csv", &["t", "s_raw_mean", "s_normalized"], &rows)?;
    let settings = json!({ "length": len, "dim": dim, "trials": trials, "fd_step": fd_step, "rntk": kernel_cfg });
    let summary = json!({ "kernel": params.descriptor(), "argmax_t": argmax, "min_normalized": min });
    ctx.finish(dir, "sensitivity", settings, summary)
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    /// Comma-separated network widths
    #[arg(long)]
    widths: Option<String>,
    /// Number of random input pairs
    #[arg(long)]
    pairs: Option<usize>,
    /// Length of every input sequence
    #[arg(long)]
    length: Option<usize>,
    /// tied, untied or both
    #[arg(long)]
    weights: Option<String>,
    #[command(flatten)]
    rntk: KernelConfig,
}

pub fn converge(ctx: &Context, file: &ExperimentConfig, a: ConvergeArgs) -> Result<()> {
    let c = ConvergeConfig {
        widths: a.widths.as_deref().map(|s| parse_list(s, "--widths")).transpose()?,
        pairs: a.pairs,
        length: a.length,
        weights: a.weights,
    }
    .overlay(file.converge.clone());
    let (kernel_cfg, params) = kernel_params(a.rntk, file, ctx.seed)?;
    let widths = c.widths.clone().unwrap_or_else(|| vec![64, 256, 1024, 4096]);
    let (count, len) = (c.pairs.unwrap_or(50), c.length.unwrap_or(5));
    let weights = c.weights.clone().unwrap_or_else(|| "tied".into());
    let modes: &[bool] = match weights.as_str() {
        "tied" => &[true],
        "untied" => &[false],
        "both" => &[true, false],
        other => return Err(Error::InvalidParam(format!("weights must be tied, untied or both, got '{other}'"))),
    };
    if widths.is_empty() || widths.contains(&0) || count == 0 || len == 0 {
        return Err(Error::InvalidParam("need positive widths, pairs and length".into()));
    }
    let pairs = random_pairs(len, 1, count, rng::derive_seed(ctx.seed, streams::PAIRS, &[]))?;
    let init_seed = rng::derive_seed(ctx.seed, streams::INIT, &[]);
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    for &tied in modes {
        let sweep = convergence_sweep(&params, &pairs, &widths, tied, init_seed)?;
        for row in &sweep {
            rows.push(vec![
                cell(row.width),
                (if tied { "tied" } else { "untied" }).to_string(),
                cell(row.pairs),
                cell(row.median_rel_error),
                cell(row.median_signed_rel_error),
            ]);
        }
        if sweep.len() >= 2 {
            let xs: Vec<f64> = sweep.iter().map(|r| r.width as f64).collect();
            let ys: Vec<f64> = sweep.iter().map(|r| r.median_rel_error).collect();
            let slope = loglog_slope(&xs, &ys);
            println!("{}: log-log slope {slope:.3}", if tied { "tied" } else { "untied" });
            slopes.push(json!({ "tied": tied, "loglog_slope": slope }));
        }
    }
    let mut dir = OutputDir::create(&ctx.out)?;
    dir.csv(
        "converge.csv",
        &["width", "weights", "pairs", "median_rel_error", "median_signed_rel_error"],
        &rows,
    )?;
    let settings = json!({ "widths": widths, "pairs": count, "length": len, "weights": weights, "rntk": kernel_cfg });
    ctx.finish(
        dir,
        "converge",
        settings,
        json!({ "kernel": params.descriptor(), "slopes": slopes }),
    )
}

#[derive(Debug, Args)]
pub struct DriftArgs {
    /// Comma-separated network widths
    #[arg(long)]
    widths: Option<String>,
    /// Full-batch gradient steps
    #[arg(long)]
    steps: Option<usize>,
    /// Learning rate as a fraction of the analytic bound eta*
    #[arg(long)]
    lr_fraction: Option<f64>,
    /// Number of training sequences
    #[arg(long)]
    sequences: Option<usize>,
    /// Sequences have lengths 2..=max_length
    #[arg(long)]
    max_length: Option<usize>,
    #[command(flatten)]
    rntk: KernelConfig,
}

pub fn drift(ctx: &Context, file: &ExperimentConfig, a: DriftArgs) -> Result<()> {
    let d = DriftConfig {
        widths: a.widths.as_deref().map(|s| parse_list(s, "--widths")).transpose()?,
        steps: a.steps,
        lr_fraction: a.lr_fraction,
        sequences: a.sequences,
        max_length: a.max_length,
    }
    .overlay(file.drift.clone());
    let (kernel_cfg, params) = kernel_params(a.rntk, file, ctx.seed)?;
    let widths = d.widths.clone().unwrap_or_else(|| vec![64, 256, 1024]);
    let steps = d.steps.unwrap_or(200);
    let fraction = d.lr_fraction.unwrap_or(0.5);
    let count = d.sequences.unwrap_or(4);
    let max_len = d.max_length.unwrap_or(5).max(2);
    if widths.is_empty() || widths.contains(&0) || count == 0 {
        return Err(Error::InvalidParam("need positive widths and at least one sequence".into()));
    }
    if !(fraction.is_finite() && fraction > 0.0) {
        return Err(Error::InvalidParam(format!("lr_fraction must be positive, got {fraction}")));
    }
    let mut s = rng::substream(ctx.seed, streams::PAIRS, &[]);
    let data: Vec<Sequence> = (0..count)
        .map(|i| Sequence::from_flat(rng::normal_vec(&mut s, 2 + i % (max_len - 1)), 1))
        .collect::<rntk::Result<_>>()?;
    let targets = rng::normal_vec(&mut s, count);
    let bound = eta_star(&rntk_gram(&params, &data, KernelKind::Theta)?.values)?;
    let lr = fraction * bound;
    let init_seed = rng::derive_seed(ctx.seed, streams::INIT, &[]);
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &w in &widths {
        let rnn = FiniteRnn::new(&params, w, 1, true, 0, init_seed)?;
        let r = drift_experiment(&rnn, &data, &targets, lr, steps)?;
        println!("width {w}: parameter drift {:.5}, Gram drift {:.5}", r.param_drift, r.gram_drift);
        rows.push(vec![
            cell(r.width),
            cell(r.steps),
            cell(r.lr),
            cell(r.eta_star),
            cell(r.param_drift),
            cell(r.gram_drift),
            cell(r.initial_loss),
            cell(r.final_loss),
        ]);
        reports.push(r);
    }
    let mut dir = OutputDir::create(&ctx.out)?;
    dir.csv(
        "drift.csv",
        &[
            "width",
            "steps",
            "lr",
            "eta_star",
            "param_drift",
            "gram_drift",
            "initial_loss",
            "final_loss",
        ],
        &rows,
    )?;
    let settings = json!({
        "widths": widths, "steps": steps, "lr_fraction": fraction,
        "sequences": count, "max_length": max_len, "rntk": kernel_cfg,
    });
    ctx.finish(
        dir,
        "drift",
        settings,
        json!({ "kernel": params.descriptor(), "eta_star": bound, "reports": reports }),
    )
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Number of angles in [0, 2π)
    #[arg(long)]
    points: Option<usize>,
    /// Network width for the empirical kernel
    #[arg(long)]
    width: Option<usize>,
    /// Networks averaged per angle
    #[arg(long)]
    seeds: Option<usize>,
    #[command(flatten)]
    rntk: KernelConfig,
}

pub fn curve(ctx: &Context, file: &ExperimentConfig, a: CurveArgs) -> Result<()> {
    let c = CurveConfig {
        points: a.points,
        width: a.width,
        seeds: a.seeds,
    }
    .overlay(file.curve.clone());
    let (kernel_cfg, params) = kernel_params(a.rntk, file, ctx.seed)?;
    let (points, width, seeds) = (c.points.unwrap_or(64), c.width.unwrap_or(1024), c.seeds.unwrap_or(10));
    if points == 0 || width == 0 || seeds == 0 {
        return Err(Error::InvalidParam("points, width and seeds must be positive".into()));
    }
    let alphas: Vec<f64> = (0..points).map(|i| 2.0 * std::f64::consts::PI * i as f64 / points as f64).collect();
    let pts = alpha_curve(&params, &alphas, width, seeds, rng::derive_seed(ctx.seed, streams::INIT, &[]))?;
    let rows: Vec<Vec<String>> = pts
        .iter()
        .map(|p| vec![cell(p.alpha), cell(p.analytic), cell(p.empirical_mean), cell(p.empirical_std)])
        .collect();
    let mut dir = OutputDir::create(&ctx.out)?;
    dir.csv("curve.csv", &["alpha", "analytic", "empirical_mean", "empirical_std"], &rows)?;
    let settings = json!({ "points": points, "width": width, "seeds": seeds, "rntk": kernel_cfg });
    ctx.finish(dir, "curve", settings, json!({ "kernel": params.descriptor() }))
}
