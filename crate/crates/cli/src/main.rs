//! Command-line front end: Monte Carlo designs, single-dataset inference,
//! and numeric diagnostics, with atomic CSV reports.
//!
//! Exit codes: 0 success, 1 usage error, 2 numeric/model error.

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use prepivot::engine::{run_inference, BootstrapConfig, Methods, TieRule};
use prepivot::harness::{
    design_from_entries, parse_design_file, run_design, run_power_curve, run_uniformity, McDesign,
    Method, ModelSpec,
};
use prepivot::kernel::{kernel_constants, KernelSpec, QuadScheme};
use prepivot::models::heavy::{AlphaEstimator, HeavyConfig, HeavyProblem};
use prepivot::models::loader::load_table;
use prepivot::models::ma::{MaConfig, MaData, MaProblem, MaScheme, SigmaMode};
use prepivot::models::np::{NpConfig, NpProblem};
use prepivot::models::ridge::{RidgeConfig, RidgeProblem};
use prepivot::rng::RngStream;
use prepivot::stable::StableLaw;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "prepivot",
    about = "Bootstrap inference with prepivoted (plug-in and double-bootstrap) p-values",
    long_about = "Bootstrap inference with prepivoted p-values for asymptotically biased \
estimators.\n\nDesign files are flat `key = value` text (# comments); command-line flags \
override design-file keys. The seed resolves as --seed, then the PREPIVOT_SEED environment \
variable, then 0. Reports are written atomically (temp file + rename)."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a Monte Carlo design and tabulate rejection frequencies.
    Mc(McArgs),
    /// Bootstrap p-values for a single dataset.
    Infer(InferArgs),
    /// Null-uniformity suite: per-method Kolmogorov-Smirnov verdicts.
    Uniformity(McArgs),
    /// Local power curve with the asymptotic overlay.
    Power(PowerArgs),
    /// Kernel constants R_K, kappa2 and the map scale m.
    KernelConstants(KernelArgs),
    /// Symmetric-stable cdf table for a given tail index.
    StableTable(StableArgs),
}

/// Flags shared by every report-writing subcommand.
#[derive(Args, Clone)]
struct OutputArgs {
    /// RNG seed (falls back to PREPIVOT_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: available cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Print frequencies as percents with 1 decimal.
    #[arg(long)]
    pretty: bool,
}

/// Design inputs: a design file plus per-key overrides.
#[derive(Args, Clone)]
struct DesignArgs {
    /// Design file (key = value lines); the flags below override its keys.
    #[arg(long)]
    design: Option<PathBuf>,
    /// Model: ma | ridge | np | heavy.
    #[arg(long)]
    model: Option<String>,
    /// Resampling scheme (ma): frb-parametric | frb-residual | pairs.
    #[arg(long)]
    scheme: Option<String>,
    /// Error scale for parametric resampling (ma): estimated | fixed:V.
    #[arg(long)]
    sigma: Option<String>,
    /// Submodel weights (ma), comma separated.
    #[arg(long)]
    weights: Option<String>,
    /// Long-model coefficient delta (ma).
    #[arg(long)]
    delta: Option<f64>,
    /// Ridge penalty as a fraction of n: c_n = shrink * n.
    #[arg(long)]
    shrink: Option<f64>,
    /// Bandwidth constant (np): h = c * n^(-1/5).
    #[arg(long)]
    c: Option<f64>,
    /// Kernel (np): epanechnikov | triangular | quartic.
    #[arg(long)]
    kernel: Option<String>,
    /// Evaluation point in (0,1) (np).
    #[arg(long)]
    x: Option<f64>,
    /// Error standard deviation (np).
    #[arg(long)]
    noise: Option<f64>,
    /// Shrinkage weight in (0,1] (heavy).
    #[arg(long)]
    omega: Option<f64>,
    /// True tail index of the generated errors (heavy).
    #[arg(long)]
    alpha: Option<f64>,
    /// Tail-index estimator (heavy): mcculloch-quantile | log-moment | known:A.
    #[arg(long = "alpha-estimator")]
    alpha_estimator: Option<String>,
    /// Error distribution: normal | t3 | chi1.
    #[arg(long)]
    dgp: Option<String>,
    /// Sample size.
    #[arg(long)]
    n: Option<usize>,
    /// Local drift: theta0 = theta_bar + a * n^(-rate).
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    /// Drift exponent.
    #[arg(long)]
    rate: Option<f64>,
    /// Regressor correlation (ma).
    #[arg(long)]
    corr: Option<f64>,
    /// Monte Carlo replications.
    #[arg(long)]
    reps: Option<usize>,
    /// First-level bootstrap replications.
    #[arg(long)]
    b1: Option<usize>,
    /// Second-level bootstrap replications.
    #[arg(long)]
    b2: Option<usize>,
    /// Tie rule: plain | add-one.
    #[arg(long)]
    tie: Option<String>,
    /// Nominal levels, comma separated.
    #[arg(long)]
    levels: Option<String>,
    /// Methods: standard,plugin,double.
    #[arg(long)]
    methods: Option<String>,
}

#[derive(Args)]
struct McArgs {
    #[command(flatten)]
    design: DesignArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct PowerArgs {
    #[command(flatten)]
    design: DesignArgs,
    /// Drift grid, comma separated (e.g. "0,-1,-2,-4").
    #[arg(long = "a-grid", allow_hyphen_values = true)]
    a_grid: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct InferArgs {
    /// Model: ma | ridge | np | heavy.
    #[arg(long)]
    model: String,
    /// Plain numeric matrix; columns: ma -> y,x,z...; ridge -> y,x...;
    /// np/heavy -> y.
    #[arg(long)]
    data: PathBuf,
    /// Null value (ma beta_bar / np beta(x) / heavy theta_bar).
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    null: f64,
    /// Resampling scheme (ma).
    #[arg(long, default_value = "frb-parametric")]
    scheme: String,
    /// Error scale for parametric resampling (ma): estimated | fixed:V.
    #[arg(long, default_value = "estimated")]
    sigma: String,
    /// Submodel weights (ma), comma separated (default equal short/full).
    #[arg(long)]
    weights: Option<String>,
    /// Ridge penalty c_n.
    #[arg(long)]
    cn: Option<f64>,
    /// Ridge contrast vector g, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    g: Option<String>,
    /// Ridge null value g'theta = r.
    #[arg(long, allow_hyphen_values = true)]
    r: Option<f64>,
    /// Bandwidth constant (np).
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Kernel (np).
    #[arg(long, default_value = "epanechnikov")]
    kernel: String,
    /// Evaluation point (np).
    #[arg(long, default_value_t = 0.5)]
    x: f64,
    /// Shrinkage weight (heavy).
    #[arg(long, default_value_t = 0.5)]
    omega: f64,
    /// Tail-index estimator (heavy).
    #[arg(long = "alpha-estimator", default_value = "mcculloch-quantile")]
    alpha_estimator: String,
    #[arg(long, default_value_t = 999)]
    b1: usize,
    #[arg(long, default_value_t = 299)]
    b2: usize,
    /// Tie rule: plain | add-one.
    #[arg(long, default_value = "plain")]
    tie: String,
    /// Methods: standard,plugin,double.
    #[arg(long, default_value = "standard,plugin,double")]
    methods: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct KernelArgs {
    /// Kernel: epanechnikov | triangular | quartic.
    #[arg(long)]
    kernel: String,
    /// Quadrature: adaptive-simpson | gauss-panels.
    #[arg(long, default_value = "adaptive-simpson")]
    scheme: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct StableArgs {
    /// Tail index in (1, 2].
    #[arg(long)]
    alpha: f64,
    /// Evaluation points, comma separated (default -3..3 by 0.5).
    #[arg(long, allow_hyphen_values = true)]
    points: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

enum CliError {
    Usage(String),
    Model(prepivot::Error),
}

impl From<prepivot::Error> for CliError {
    fn from(e: prepivot::Error) -> Self {
        CliError::Model(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

fn resolve_seed(args: &OutputArgs) -> CliResult<u64> {
    if let Some(s) = args.seed {
        return Ok(s);
    }
    match std::env::var("PREPIVOT_SEED") {
        Ok(v) => match v.parse() {
            Ok(s) => Ok(s),
            Err(_) => usage(format!("PREPIVOT_SEED is not an integer: {v}")),
        },
        Err(_) => Ok(0),
    }
}

fn install_workers(args: &OutputArgs) {
    if let Some(w) = args.workers {
        // Ignore the error when a pool already exists (e.g. repeated calls
        // in-process); the first configuration wins.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build_global();
    }
}

fn write_report(out: &Option<PathBuf>, contents: &str) -> CliResult<()> {
    match out {
        None => {
            print!("{contents}");
            Ok(())
        }
        Some(path) => write_atomic(path, contents).map_err(|e| {
            CliError::Model(prepivot::Error::Io(format!("writing {}: {e}", path.display())))
        }),
    }
}

fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path)?;
    Ok(())
}

/// Merge the design file (if any) with flag overrides into key = value
/// entries.
fn design_entries(args: &DesignArgs) -> CliResult<BTreeMap<String, String>> {
    let mut map = match &args.design {
        None => BTreeMap::new(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            parse_design_file(&text).map_err(|e| CliError::Usage(e.to_string()))?
        }
    };
    let mut put = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            map.insert(k.to_string(), v);
        }
    };
    put("model", args.model.clone());
    put("scheme", args.scheme.clone());
    put("sigma", args.sigma.clone());
    put("weights", args.weights.clone());
    put("delta", args.delta.map(|v| v.to_string()));
    put("shrink", args.shrink.map(|v| v.to_string()));
    put("c", args.c.map(|v| v.to_string()));
    put("kernel", args.kernel.clone());
    put("x", args.x.map(|v| v.to_string()));
    put("noise", args.noise.map(|v| v.to_string()));
    put("omega", args.omega.map(|v| v.to_string()));
    put("alpha", args.alpha.map(|v| v.to_string()));
    put("alpha-estimator", args.alpha_estimator.clone());
    put("dgp", args.dgp.clone());
    put("n", args.n.map(|v| v.to_string()));
    put("a", args.a.map(|v| v.to_string()));
    put("rate", args.rate.map(|v| v.to_string()));
    put("corr", args.corr.map(|v| v.to_string()));
    put("reps", args.reps.map(|v| v.to_string()));
    put("b1", args.b1.map(|v| v.to_string()));
    put("b2", args.b2.map(|v| v.to_string()));
    put("tie", args.tie.clone());
    put("levels", args.levels.clone());
    put("methods", args.methods.clone());
    Ok(map)
}

fn build_design(args: &DesignArgs) -> CliResult<McDesign> {
    let entries = design_entries(args)?;
    design_from_entries(&entries).map_err(|e| CliError::Usage(e.to_string()))
}

fn tie_label(t: TieRule) -> &'static str {
    match t {
        TieRule::Plain => "plain",
        TieRule::AddOne => "add-one",
    }
}

/// The fully resolved configuration, echoed as report header lines.
fn design_header(design: &McDesign, seed: u64, output: &OutputArgs) -> Vec<String> {
    let mut h = Vec::new();
    match &design.model {
        ModelSpec::Ma { scheme, sigma_mode, weights, delta } => {
            h.push("model = ma".to_string());
            h.push(format!(
                "scheme = {}",
                match scheme {
                    MaScheme::FrbParametric => "frb-parametric",
                    MaScheme::FrbResidual => "frb-residual",
                    MaScheme::Pairs => "pairs",
                }
            ));
            h.push(format!(
                "sigma = {}",
                match sigma_mode {
                    SigmaMode::Estimated => "estimated".to_string(),
                    SigmaMode::Fixed(v) => format!("fixed:{v}"),
                }
            ));
            h.push(format!(
                "weights = {}",
                weights.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(",")
            ));
            h.push(format!("delta = {delta}"));
        }
        ModelSpec::Ridge { shrink } => {
            h.push("model = ridge".to_string());
            h.push(format!("shrink = {shrink}"));
        }
        ModelSpec::Np { c, kernel, x, sigma } => {
            h.push("model = np".to_string());
            h.push(format!("c = {c}"));
            h.push(format!(
                "kernel = {}",
                match kernel {
                    KernelSpec::Epanechnikov => "epanechnikov",
                    KernelSpec::Triangular => "triangular",
                    KernelSpec::Quartic => "quartic",
                }
            ));
            h.push(format!("x = {x}"));
            h.push(format!("noise = {sigma}"));
        }
        ModelSpec::Heavy { omega, alpha, estimator } => {
            h.push("model = heavy".to_string());
            h.push(format!("omega = {omega}"));
            h.push(format!("alpha = {alpha}"));
            h.push(format!(
                "alpha-estimator = {}",
                match estimator {
                    AlphaEstimator::McCullochQuantile => "mcculloch-quantile".to_string(),
                    AlphaEstimator::LogMoment => "log-moment".to_string(),
                    AlphaEstimator::Known(a) => format!("known:{a}"),
                }
            ));
        }
    }
    h.push(format!("dgp = {}", design.dgp.label()));
    h.push(format!("n = {}", design.n));
    h.push(format!("a = {}", design.a));
    h.push(format!("rate = {}", design.rate));
    h.push(format!("corr = {}", design.corr));
    h.push(format!("reps = {}", design.reps));
    h.push(format!("b1 = {}", design.config.b1));
    h.push(format!("b2 = {}", design.config.b2));
    h.push(format!("tie = {}", tie_label(design.config.tie_rule)));
    h.push(format!(
        "levels = {}",
        design.levels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",")
    ));
    h.push(format!(
        "methods = {}",
        design.methods.iter().map(|m| m.label().to_string()).collect::<Vec<_>>().join(",")
    ));
    h.push(format!("seed = {seed}"));
    // Worker count deliberately not echoed: reports must be byte-identical
    // for any --workers value.
    let _ = output;
    h
}

fn run_mc(args: &McArgs) -> CliResult<()> {
    let design = build_design(&args.design)?;
    let seed = resolve_seed(&args.output)?;
    install_workers(&args.output);
    let table = run_design(&design, seed)?;
    let header = design_header(&design, seed, &args.output);
    let csv = if args.output.pretty {
        let mut out = String::new();
        for h in &header {
            out.push_str(&format!("# {h}\n"));
        }
        out.push_str("dist,a,n,scheme,method,level,reject_pct,se_pct,reps,aborts\n");
        for r in &table.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{:.1},{:.1},{},{}\n",
                r.dist,
                r.a,
                r.n,
                r.scheme,
                r.method,
                r.level,
                100.0 * r.reject_freq,
                100.0 * r.se,
                r.reps,
                r.aborts
            ));
        }
        out
    } else {
        table.to_csv(&header)
    };
    write_report(&args.output.out, &csv)
}

fn run_uniformity_cmd(args: &McArgs) -> CliResult<()> {
    let design = build_design(&args.design)?;
    let seed = resolve_seed(&args.output)?;
    install_workers(&args.output);
    let reports = run_uniformity(&design, seed)?;
    let mut out = String::new();
    for h in design_header(&design, seed, &args.output) {
        out.push_str(&format!("# {h}\n"));
    }
    out.push_str("method,ks_statistic,ks_p_value,p_values,aborts\n");
    for r in &reports {
        out.push_str(&format!(
            "{},{:.6},{:.6},{},{}\n",
            r.method.label(),
            r.ks.statistic,
            r.ks.p_value,
            r.p_values.len(),
            r.aborts
        ));
    }
    write_report(&args.output.out, &out)
}

fn run_power_cmd(args: &PowerArgs) -> CliResult<()> {
    let design = build_design(&args.design)?;
    let seed = resolve_seed(&args.output)?;
    install_workers(&args.output);
    let a_grid: Vec<f64> = args
        .a_grid
        .split(',')
        .map(|v| v.trim().parse().map_err(|_| CliError::Usage(format!("bad drift value {v}"))))
        .collect::<CliResult<_>>()?;
    let curve = run_power_curve(&design, &a_grid, seed)?;
    let csv = curve.to_csv(&design_header(&design, seed, &args.output));
    write_report(&args.output.out, &csv)
}

fn parse_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse().map_err(|_| CliError::Usage(format!("bad {what} value {v}"))))
        .collect()
}

fn run_infer(args: &InferArgs) -> CliResult<()> {
    let seed = resolve_seed(&args.output)?;
    install_workers(&args.output);
    let table = load_table(&args.data).map_err(|e| CliError::Usage(e.to_string()))?;
    let n = table.rows();
    let methods_list: Vec<Method> = args
        .methods
        .split(',')
        .map(|m| Method::parse(m.trim()).map_err(|e| CliError::Usage(e.to_string())))
        .collect::<CliResult<_>>()?;
    let methods = Methods {
        plugin: methods_list.contains(&Method::Plugin),
        double: methods_list.contains(&Method::Double),
    };
    let cfg = BootstrapConfig {
        b1: args.b1,
        b2: args.b2,
        tie_rule: TieRule::parse(&args.tie).map_err(|e| CliError::Usage(e.to_string()))?,
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let stream = RngStream::from_seed(seed);

    let report = match args.model.as_str() {
        "ma" => {
            if table.columns < 3 {
                return usage("model-averaging data needs columns y, x, z...");
            }
            let q = table.columns - 2;
            let weights = match &args.weights {
                None => vec![0.5, 0.5],
                Some(w) => parse_list(w, "weight")?,
            };
            let mcfg = MaConfig {
                weights,
                selectors: vec![vec![], (0..q).collect()],
                scheme: MaScheme::parse(&args.scheme).map_err(|e| CliError::Usage(e.to_string()))?,
                include_intercept: true,
                null_value: args.null,
                sigma_mode: match args.sigma.as_str() {
                    "estimated" => SigmaMode::Estimated,
                    s => SigmaMode::Fixed(
                        s.strip_prefix("fixed:")
                            .and_then(|v| v.parse().ok())
                            .ok_or_else(|| CliError::Usage(format!("bad sigma mode {s}")))?,
                    ),
                },
            };
            let data = MaData {
                y: DVector::from_vec(table.column(0)),
                x: DVector::from_vec(table.column(1)),
                z: DMatrix::from_fn(n, q, |i, j| table.row(i)[2 + j]),
            };
            let (problem, orig) = MaProblem::new(data, mcfg)?;
            run_inference(&problem, &orig, &cfg, methods, &stream)?
        }
        "ridge" => {
            if table.columns < 2 {
                return usage("ridge data needs columns y, x...");
            }
            let p = table.columns - 1;
            let g = match &args.g {
                None => {
                    let mut g = vec![0.0; p];
                    g[0] = 1.0;
                    g
                }
                Some(s) => parse_list(s, "contrast")?,
            };
            let rcfg = RidgeConfig {
                c_n: args.cn.unwrap_or(0.0),
                g: DVector::from_vec(g),
                r: args.r.unwrap_or(args.null),
            };
            let y = DVector::from_vec(table.column(0));
            let x = DMatrix::from_fn(n, p, |i, j| table.row(i)[1 + j]);
            let (problem, orig) = RidgeProblem::new(y, x, rcfg)?;
            run_inference(&problem, &orig, &cfg, methods, &stream)?
        }
        "np" => {
            let ncfg = NpConfig {
                c: args.c,
                kernel: KernelSpec::parse(&args.kernel).map_err(|e| CliError::Usage(e.to_string()))?,
                x: args.x,
                null_value: args.null,
            };
            let (problem, orig) = NpProblem::new(table.column(0), ncfg)?;
            run_inference(&problem, &orig, &cfg, methods, &stream)?
        }
        "heavy" => {
            let hcfg = HeavyConfig {
                omega: args.omega,
                alpha_estimator: AlphaEstimator::parse(&args.alpha_estimator)
                    .map_err(|e| CliError::Usage(e.to_string()))?,
                null_value: args.null,
                scaling_alpha: None,
            };
            let (problem, orig) = HeavyProblem::new(table.column(0), hcfg)?;
            run_inference(&problem, &orig, &cfg, methods, &stream)?
        }
        other => return usage(format!("unknown model {other}")),
    };

    let mut out = String::new();
    out.push_str(&format!("# model = {}\n", args.model));
    out.push_str(&format!("# data = {}\n", args.data.display()));
    out.push_str(&format!("# b1 = {}\n# b2 = {}\n# tie = {}\n", args.b1, args.b2, args.tie));
    out.push_str(&format!("# methods = {}\n# seed = {seed}\n", args.methods));
    out.push_str("t_n,p_hat,p_plugin,p_double,p_right,p_equal_tailed,m_hat\n");
    let opt = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_default();
    out.push_str(&format!(
        "{:.6},{:.6},{},{},{:.6},{:.6},{}\n",
        report.t_n,
        report.p_hat,
        opt(report.p_plugin),
        opt(report.p_double),
        report.p_right,
        report.p_equal_tailed,
        opt(report.m_hat),
    ));
    write_report(&args.output.out, &out)
}

fn run_kernel_constants(args: &KernelArgs) -> CliResult<()> {
    let kernel = KernelSpec::parse(&args.kernel).map_err(|e| CliError::Usage(e.to_string()))?;
    let scheme = match args.scheme.as_str() {
        "adaptive-simpson" => QuadScheme::AdaptiveSimpson,
        "gauss-panels" => QuadScheme::GaussPanels,
        s => return usage(format!("unknown quadrature scheme {s}")),
    };
    let k = kernel_constants(kernel, scheme)?;
    let out = format!(
        "# kernel = {}\n# scheme = {}\nr_k,kappa2,m2,m_np\n{:.10},{:.10},{:.10},{:.10}\n",
        args.kernel, args.scheme, k.r_k, k.kappa2, k.m2, k.m_np
    );
    write_report(&args.output.out, &out)
}

fn run_stable_table(args: &StableArgs) -> CliResult<()> {
    let law = StableLaw::new(args.alpha)?;
    let points: Vec<f64> = match &args.points {
        Some(s) => parse_list(s, "point")?,
        None => (-6..=6).map(|i| i as f64 * 0.5).collect(),
    };
    let mut out = format!("# alpha = {}\nx,cdf\n", args.alpha);
    for x in points {
        out.push_str(&format!("{x},{:.6}\n", law.cdf(x)?));
    }
    write_report(&args.output.out, &out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are successful exits; everything else is
            // a usage error.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.cmd {
        Cmd::Mc(args) => run_mc(args),
        Cmd::Infer(args) => run_infer(args),
        Cmd::Uniformity(args) => run_uniformity_cmd(args),
        Cmd::Power(args) => run_power_cmd(args),
        Cmd::KernelConstants(args) => run_kernel_constants(args),
        Cmd::StableTable(args) => run_stable_table(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Model(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
