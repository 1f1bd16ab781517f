use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ncas_core::baselines::{cut, prencut_affinity, run_ncut, DEFAULT_EDGE_SIGMA};
use ncas_core::io::{
    add_gaussian_noise, double_moon, load_grayscale, load_labels, read_points_csv,
    resize_bilinear, save_field, save_labels, write_points_csv, MoonSpec,
};
use ncas_core::metrics::{misclassification_count, rand_index, variation_of_information};
use ncas_core::solver::run_pre_ncastv;
use ncas_core::{
    run_ncash1, run_ncastv, Input, NcasError, Neighborhood, PointSet, ScalarField,
    SegmentationResult, SolverConfig,
};

mod trace;

use trace::{Params, Trace};

#[derive(Parser)]
#[command(name = "ncas", version, about = "Two-phase segmentation and clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment a grayscale image into two phases.
    Segment(SegmentArgs),
    /// Split a 2-D point set into two clusters.
    Cluster(ClusterArgs),
    /// Compare a label image with one or more ground truths.
    Metrics(MetricsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ImageModel {
    Ncash1,
    Ncastv,
    Ncut,
    Prencut,
    Prencastv,
}

#[derive(Clone, Copy, ValueEnum)]
enum PointModel {
    Ncash1,
    Ncut,
}

/// Model parameters shared by `segment` and `cluster`. Unset values keep the
/// library defaults.
#[derive(Args)]
struct ModelArgs {
    /// Weight of the phase coupling in the similarity.
    #[arg(long)]
    lambda: Option<f64>,
    /// Weight of the spatial regularizer.
    #[arg(long, conflicts_with = "eta_rel")]
    eta: Option<f64>,
    /// eta as a multiple of epsilon.
    #[arg(long)]
    eta_rel: Option<f64>,
    /// Splitting penalty of the TV model.
    #[arg(long, conflicts_with = "epsilon_rel")]
    epsilon: Option<f64>,
    /// epsilon as a multiple of lambda.
    #[arg(long)]
    epsilon_rel: Option<f64>,
    /// Initial bandwidth.
    #[arg(long)]
    h0: Option<f64>,
    /// Fixed bandwidth of the ncut baselines (defaults to h0).
    #[arg(long)]
    h: Option<f64>,
    /// Inner gradient step.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    inner_iters: Option<usize>,
    #[arg(long)]
    outer_iters: Option<usize>,
    /// Relative phase change that stops the outer loop.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write a JSON trace of the run.
    #[arg(long, value_name = "JSON")]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SegmentArgs {
    /// 8-bit PNG or PGM image.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    model: ImageModel,
    /// Half-width of the square similarity window.
    #[arg(long)]
    window: Option<usize>,
    /// Add Gaussian noise of this variance (intensities scaled to [0, 1]).
    #[arg(long)]
    noise_var: Option<f64>,
    /// Resample the input to WxH before segmenting.
    #[arg(long, value_name = "WxH", value_parser = parse_size)]
    resize: Option<(usize, usize)>,
    /// Scale of the edge filter used by prencut and prencastv.
    #[arg(long, default_value_t = DEFAULT_EDGE_SIGMA)]
    edge_sigma: f64,
    #[arg(long, value_name = "PNG")]
    out_labels: Option<PathBuf>,
    #[arg(long, value_name = "PGM")]
    out_phase: Option<PathBuf>,
    #[command(flatten)]
    model_args: ModelArgs,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true))]
struct ClusterArgs {
    /// CSV with x,y[,label] rows.
    #[arg(long, group = "source")]
    points: Option<PathBuf>,
    /// Generate a double moon, e.g. n=300,noise=1.0,seed=3.
    #[arg(long, group = "source", value_parser = parse_moons)]
    moons: Option<MoonSpec>,
    #[arg(long, value_enum)]
    model: PointModel,
    /// Neighbors per point in the kNN graph.
    #[arg(long)]
    knn: Option<usize>,
    /// Write x,y,label rows.
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
    #[command(flatten)]
    model_args: ModelArgs,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long, value_name = "PNG")]
    pred: PathBuf,
    /// One or more ground-truth label images, comma separated.
    #[arg(long, value_name = "PNG", value_delimiter = ',', required = true)]
    truth: Vec<PathBuf>,
    /// Write the JSON report here as well as to stdout.
    #[arg(long, value_name = "JSON")]
    report: Option<PathBuf>,
}

/// A failure with the stage it happened in and the exit code it maps to.
struct Failure {
    stage: &'static str,
    code: u8,
    message: String,
}

impl Failure {
    fn usage(stage: &'static str, message: impl Into<String>) -> Self {
        Self {
            stage,
            code: 2,
            message: message.into(),
        }
    }

    fn from_core(stage: &'static str) -> impl FnOnce(NcasError) -> Self {
        move |e| {
            let code = if e.is_io() {
                3
            } else if e.is_divergence() {
                4
            } else {
                2
            };
            Self {
                stage,
                code,
                message: e.to_string(),
            }
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Segment(args) => segment(args),
        Command::Cluster(args) => cluster(args),
        Command::Metrics(args) => metrics(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("ncas: {}: {}", f.stage, f.message);
            ExitCode::from(f.code)
        }
    }
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got '{s}'"))?;
    let dim = |v: &str| match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("'{v}' is not a positive integer")),
    };
    Ok((dim(w)?, dim(h)?))
}

fn parse_moons(s: &str) -> Result<MoonSpec, String> {
    fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
        value
            .parse()
            .map_err(|_| format!("bad value '{value}' for {key}"))
    }
    let mut spec = MoonSpec::default();
    for item in s.split(',').filter(|p| !p.trim().is_empty()) {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got '{item}'"))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "n" => spec.n = num(key, value)?,
            "noise" => spec.noise_sigma = num(key, value)?,
            "seed" => spec.seed = num(key, value)?,
            "radius" => spec.radius = num(key, value)?,
            "width" => spec.width = num(key, value)?,
            "separation" => spec.separation = num(key, value)?,
            other => return Err(format!("unknown moon parameter '{other}'")),
        }
    }
    Ok(spec)
}

impl ModelArgs {
    /// Library defaults overridden by the given flags, with the relative
    /// forms resolved against the final lambda and epsilon.
    fn config(&self, base: SolverConfig) -> Result<SolverConfig, Failure> {
        let mut c = base;
        if let Some(v) = self.lambda {
            c.lambda = v;
        }
        if let Some(v) = self.epsilon {
            c.epsilon_penalty = v;
        }
        if let Some(r) = self.epsilon_rel {
            c.epsilon_penalty = r * c.lambda;
        }
        if let Some(v) = self.eta {
            c.eta = v;
        }
        if let Some(r) = self.eta_rel {
            c.eta = r * c.epsilon_penalty;
        }
        if let Some(v) = self.h0 {
            c.h0 = v;
        }
        if let Some(v) = self.tau {
            c.tau = v;
        }
        if let Some(v) = self.inner_iters {
            c.inner_iters = v;
        }
        if let Some(v) = self.outer_iters {
            c.outer_iters = v;
        }
        if let Some(v) = self.tol {
            c.outer_tol = v;
        }
        c.seed = self.seed;
        c.validate().map_err(Failure::from_core("parameters"))?;
        Ok(c)
    }

    fn baseline_h(&self, config: &SolverConfig) -> Result<f64, Failure> {
        let h = self.h.unwrap_or(config.h0);
        if !(h.is_finite() && h > 0.0) {
            return Err(Failure::usage("parameters", format!("h = {h} must be positive")));
        }
        Ok(h)
    }
}

/// Outcome of any model, reduced to what the commands report.
struct Run {
    labels: Vec<u8>,
    phase: Vec<f64>,
    adaptive: Option<SegmentationResult>,
    eigenvalue: Option<f64>,
    h: f64,
}

impl Run {
    fn adaptive(r: SegmentationResult) -> Self {
        Self {
            labels: r.labels.clone(),
            phase: r.phase.clone(),
            h: r.h_trace.last().copied().unwrap_or(f64::NAN),
            eigenvalue: None,
            adaptive: Some(r),
        }
    }

    fn summary(&self, model: &str) -> String {
        match &self.adaptive {
            Some(r) => format!(
                "{model}: energy {:.6e}, h {:.4}, {} outer iterations ({})",
                r.energy_trace.last().copied().unwrap_or(f64::NAN),
                self.h,
                r.iterations_run,
                if r.converged { "converged" } else { "iteration limit" }
            ),
            None => match self.eigenvalue {
                Some(ev) => format!("{model}: eigenvalue {ev:.6e}, h {:.4}", self.h),
                None => format!("{model}: input is constant, all labels 0"),
            },
        }
    }

    fn trace<'a>(&'a self, command: &'a str, model: &'a str, params: Params) -> Trace<'a> {
        Trace::new(command, model, params, self.adaptive.as_ref(), self.eigenvalue, self.h)
    }
}

fn model_name<T: ValueEnum>(m: T) -> String {
    m.to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default()
}

fn segment(args: SegmentArgs) -> CmdResult {
    let mut config = args.model_args.config(SolverConfig::default())?;
    if let Some(r) = args.window {
        config.window_radius = r;
    }
    let mut image = load_grayscale(&args.input).map_err(Failure::from_core("loading input"))?;
    if let Some((w, h)) = args.resize {
        image = resize_bilinear(&image, w, h).map_err(Failure::from_core("resizing"))?;
    }
    if let Some(var) = args.noise_var {
        image = add_gaussian_noise(&image, var, config.seed).map_err(Failure::from_core("adding noise"))?;
    }
    let model = model_name(args.model);
    let (width, height) = (image.width(), image.height());

    let run = if is_constant(image.values()) {
        // nothing to separate: every model would only cut along the grid
        Run {
            labels: vec![0; image.len()],
            phase: vec![0.0; image.len()],
            adaptive: None,
            eigenvalue: None,
            h: args.model_args.baseline_h(&config)?,
        }
    } else {
        let stage = "solving";
        match args.model {
            ImageModel::Ncash1 => Run::adaptive(run_ncash1(Input::Image(&image), &config).map_err(Failure::from_core(stage))?),
            ImageModel::Ncastv => Run::adaptive(run_ncastv(Input::Image(&image), &config).map_err(Failure::from_core(stage))?),
            ImageModel::Prencastv => Run::adaptive(
                run_pre_ncastv(&image, &config, args.edge_sigma).map_err(Failure::from_core(stage))?,
            ),
            ImageModel::Ncut | ImageModel::Prencut => {
                let h = args.model_args.baseline_h(&config)?;
                let graph = Arc::new(
                    Neighborhood::grid_window(width, height, config.window_radius)
                        .map_err(Failure::from_core("building graph"))?,
                );
                let sol = if matches!(args.model, ImageModel::Ncut) {
                    run_ncut(Input::Image(&image), &graph, h)
                } else {
                    prencut_affinity(&image, h, args.edge_sigma, &graph).and_then(|w| cut(&w))
                }
                .map_err(Failure::from_core(stage))?;
                Run {
                    labels: sol.labels,
                    phase: sol.phase,
                    adaptive: None,
                    eigenvalue: Some(sol.eigenvalue),
                    h,
                }
            }
        }
    };
    println!("{}", run.summary(&model));

    if let Some(path) = &args.out_labels {
        save_labels(&run.labels, width, height, path).map_err(Failure::from_core("writing labels"))?;
    }
    if let Some(path) = &args.out_phase {
        ScalarField::new(width, height, run.phase.clone())
            .and_then(|f| save_field(&f, path))
            .map_err(Failure::from_core("writing phase"))?;
    }
    if let Some(path) = &args.model_args.trace {
        let params = Params::from_config(&config, "window", config.window_radius);
        write_trace(&run.trace("segment", &model, params), path)?;
    }
    Ok(())
}

fn cluster(args: ClusterArgs) -> CmdResult {
    let mut config = args.model_args.config(SolverConfig::default())?;
    if let Some(k) = args.knn {
        config.knn = k;
    }
    let points: PointSet = match (&args.points, args.moons) {
        (Some(path), _) => read_points_csv(path).map_err(Failure::from_core("reading points"))?,
        (None, Some(spec)) => double_moon(spec).map_err(Failure::from_core("generating moons"))?,
        (None, None) => return Err(Failure::usage("arguments", "need --points or --moons")),
    };
    let model = model_name(args.model);
    let run = match args.model {
        PointModel::Ncash1 => Run::adaptive(
            run_ncash1(Input::Points(&points), &config).map_err(Failure::from_core("solving"))?,
        ),
        PointModel::Ncut => {
            let h = args.model_args.baseline_h(&config)?;
            let graph = Arc::new(
                Neighborhood::knn(points.features(), config.knn)
                    .map_err(Failure::from_core("building graph"))?,
            );
            let sol = run_ncut(Input::Points(&points), &graph, h).map_err(Failure::from_core("solving"))?;
            Run {
                labels: sol.labels,
                phase: sol.phase,
                adaptive: None,
                eigenvalue: Some(sol.eigenvalue),
                h,
            }
        }
    };
    println!("{}", run.summary(&model));

    let errors = match points.truth() {
        Some(truth) => {
            let e = misclassification_count(&run.labels, truth).map_err(Failure::from_core("scoring"))?;
            println!("errors {e} of {}", points.len());
            Some(e)
        }
        None => None,
    };
    if let Some(path) = &args.out {
        write_points_csv(&points, &run.labels, path).map_err(Failure::from_core("writing labels"))?;
    }
    if let Some(path) = &args.model_args.trace {
        let params = Params::from_config(&config, "knn", config.knn);
        let mut trace = run.trace("cluster", &model, params);
        trace.errors = errors;
        write_trace(&trace, path)?;
    }
    Ok(())
}

fn metrics(args: MetricsArgs) -> CmdResult {
    let (w, h, pred) = load_labels(&args.pred).map_err(Failure::from_core("loading prediction"))?;
    let mut truths = Vec::with_capacity(args.truth.len());
    for path in &args.truth {
        let (tw, th, t) = load_labels(path).map_err(Failure::from_core("loading truth"))?;
        if (tw, th) != (w, h) {
            return Err(Failure::usage(
                "comparing",
                format!("{} is {tw}x{th} but the prediction is {w}x{h}", path.display()),
            ));
        }
        truths.push(t);
    }
    let score = Failure::from_core;
    let refs: Vec<&[u8]> = truths.iter().map(Vec::as_slice).collect();
    let ri = rand_index(&pred, &refs).map_err(score("scoring"))?;
    let mut vi = 0.0;
    for t in &refs {
        vi += variation_of_information(&pred, t).map_err(score("scoring"))?;
    }
    vi /= refs.len() as f64;
    // errors only make sense when both maps are two-class
    let errors = if at_most_two_levels(&pred) && at_most_two_levels(refs[0]) {
        let binary = |l: &[u8]| -> Vec<u8> {
            let top = l.iter().copied().max().unwrap_or(0);
            l.iter().map(|&v| u8::from(v == top && top > 0)).collect()
        };
        Some(misclassification_count(&binary(&pred), &binary(refs[0])).map_err(score("scoring"))?)
    } else {
        None
    };
    let report = serde_json::json!({ "vi": vi, "ri": ri, "errors": errors });
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{text}");
    if let Some(path) = &args.report {
        write_text(path, &text, "writing report")?;
    }
    Ok(())
}

fn is_constant(values: &[f64]) -> bool {
    values.windows(2).all(|p| p[0] == p[1])
}

fn at_most_two_levels(labels: &[u8]) -> bool {
    let mut seen = [false; 256];
    labels.iter().for_each(|&v| seen[v as usize] = true);
    seen.iter().filter(|&&s| s).count() <= 2
}

fn write_trace(trace: &Trace<'_>, path: &Path) -> CmdResult {
    let text = serde_json::to_string_pretty(trace).expect("trace serializes");
    write_text(path, &text, "writing trace")
}

fn write_text(path: &Path, text: &str, stage: &'static str) -> CmdResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_failure(stage, dir, e))?;
    }
    std::fs::write(path, format!("{text}\n")).map_err(|e| io_failure(stage, path, e))
}

fn io_failure(stage: &'static str, path: &Path, e: std::io::Error) -> Failure {
    Failure {
        stage,
        code: 3,
        message: format!("{}: {e}", path.display()),
    }
}
