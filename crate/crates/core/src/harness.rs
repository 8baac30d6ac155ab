//! Monte Carlo experiment designs: simulation-table reproduction, null
//! uniformity suites, and local power curves, with deterministic parallel
//! replication.
//!
//! Replication `r` of a run seeded with `s` always uses the stream
//! `RngStream::from_seed(s).split_path(&[0, r])`, so results are identical
//! for any worker count; aggregation is an order-independent sum of integer
//! reject counts.

use crate::dist::{normal_cdf, normal_quantile, DistributionSpec};
use crate::engine::{run_inference, BootstrapConfig, Methods, PValueReport, TieRule};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::ks::{ks_uniform, KsReport};
use crate::models::heavy::{AlphaEstimator, HeavyConfig, HeavyProblem};
use crate::models::ma::{ma_auxiliaries, MaConfig, MaData, MaProblem, MaScheme, SigmaMode};
use crate::models::np::{NpConfig, NpProblem};
use crate::models::ridge::{RidgeConfig, RidgeProblem};
use crate::rng::RngStream;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Standard,
    Plugin,
    Double,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Method::Standard),
            "plugin" => Ok(Method::Plugin),
            "double" => Ok(Method::Double),
            _ => Err(Error::Parameter(format!("unknown method {s}"))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Method::Standard => "standard",
            Method::Plugin => "plugin",
            Method::Double => "double",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dgp {
    Normal,
    T3,
    Chi1,
}

impl Dgp {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Dgp::Normal),
            "t3" => Ok(Dgp::T3),
            "chi1" => Ok(Dgp::Chi1),
            _ => Err(Error::Parameter(format!("unknown error distribution {s}"))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Dgp::Normal => "normal",
            Dgp::T3 => "t3",
            Dgp::Chi1 => "chi1",
        }
    }

    pub fn spec(&self) -> DistributionSpec {
        match self {
            Dgp::Normal => DistributionSpec::StandardNormal,
            Dgp::T3 => DistributionSpec::StudentT { df: 3.0 },
            Dgp::Chi1 => DistributionSpec::StandardizedChiSquare { df: 1.0 },
        }
    }
}

/// Which inference model a design runs, with its data-generating process.
///
/// All four share the local-drift convention θ₀ = θ̄ + a·n^{−rate}.
#[derive(Debug, Clone)]
pub enum ModelSpec {
    /// y = xβ + zδ + ε with (x, z) bivariate normal (unit variances,
    /// correlation = design.corr), β̄ = 1, submodels short (x, const) and
    /// long (x, z, const) with the given weights.
    Ma { scheme: MaScheme, sigma_mode: SigmaMode, weights: Vec<f64>, delta: f64 },
    /// y = x'θ + ε, θ = n^{-1/2}(1, 1) + (drift, 0), x ~ N(0, I₂),
    /// g = (1, 0), r = n^{-1/2}, ridge penalty c_n = shrink·n, pairs
    /// bootstrap. The parameter is local to zero so the pairs-bootstrap
    /// variance of the shrunk contrast matches the homoskedastic plug-in
    /// scale (a fixed θ leaves an O(‖θ‖²) pseudo-residual x'(I−M)θ in the
    /// resampling variance that the plug-in map does not model); the
    /// shrinkage bias √n·g'(M−I)θ stays away from zero.
    Ridge { shrink: f64 },
    /// Fixed design x_t = t/n, y = β(x_t) + σε with β(x) = x² + drift,
    /// Nadaraya–Watson at the given evaluation point.
    Np { c: f64, kernel: KernelSpec, x: f64, sigma: f64 },
    /// y = θ + S(α) symmetric stable errors, θ̄ = 0, shrunk mean ω·ȳ.
    /// Ignores the design's error distribution.
    Heavy { omega: f64, alpha: f64, estimator: AlphaEstimator },
}

impl ModelSpec {
    /// Resampling-scheme label for report rows.
    pub fn scheme_label(&self) -> &'static str {
        match self {
            ModelSpec::Ma { scheme, .. } => match scheme {
                MaScheme::FrbParametric => "frb-parametric",
                MaScheme::FrbResidual => "frb-residual",
                MaScheme::Pairs => "pairs",
            },
            ModelSpec::Ridge { .. } => "pairs",
            ModelSpec::Np { .. } => "frb-parametric",
            ModelSpec::Heavy { .. } => "stable-residual",
        }
    }
}

#[derive(Debug, Clone)]
pub struct McDesign {
    pub model: ModelSpec,
    pub dgp: Dgp,
    pub n: usize,
    /// Local drift: θ₀ = θ̄ + a·n^{−rate}.
    pub a: f64,
    pub rate: f64,
    /// Regressor correlation for the model-averaging design.
    pub corr: f64,
    pub reps: usize,
    pub config: BootstrapConfig,
    pub levels: Vec<f64>,
    pub methods: Vec<Method>,
}

impl McDesign {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Parameter("reps must be >= 1".into()));
        }
        if self.levels.is_empty() || self.levels.iter().any(|&l| !(0.0 < l && l < 1.0)) {
            return Err(Error::Parameter("levels must lie in (0,1)".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Parameter("at least one method required".into()));
        }
        if !(self.corr.abs() < 1.0) {
            return Err(Error::Parameter(format!("corr must be in (-1,1), got {}", self.corr)));
        }
        if self.n < 2 {
            return Err(Error::Parameter("n must be >= 2".into()));
        }
        if !self.rate.is_finite() || self.rate <= 0.0 {
            return Err(Error::Parameter(format!("rate must be > 0, got {}", self.rate)));
        }
        self.config.validate()?;
        if let ModelSpec::Ma { weights, .. } = &self.model {
            if weights.len() != 2 {
                return Err(Error::Parameter("model-averaging design uses two submodels".into()));
            }
        }
        Ok(())
    }

    /// Error-distribution label for report rows.
    pub fn dist_label(&self) -> String {
        match &self.model {
            ModelSpec::Heavy { alpha, .. } => format!("stable{alpha}"),
            _ => self.dgp.label().to_string(),
        }
    }

    fn engine_methods(&self) -> Methods {
        Methods {
            plugin: self.methods.contains(&Method::Plugin),
            double: self.methods.contains(&Method::Double),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectionRow {
    pub dist: String,
    pub a: f64,
    pub n: usize,
    pub scheme: String,
    pub method: &'static str,
    pub level: f64,
    pub reject_freq: f64,
    pub se: f64,
    pub reps: usize,
    pub aborts: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RejectionTable {
    pub rows: Vec<RejectionRow>,
}

impl RejectionTable {
    pub fn freq(&self, method: Method, level: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.method == method.label() && (r.level - level).abs() < 1e-12)
            .map(|r| r.reject_freq)
    }

    /// CSV with optional `# key = value` configuration header lines.
    pub fn to_csv(&self, header: &[String]) -> String {
        let mut out = String::new();
        for h in header {
            out.push_str("# ");
            out.push_str(h);
            out.push('\n');
        }
        out.push_str("dist,a,n,scheme,method,level,reject_freq,se,reps,aborts\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{:.6},{:.6},{},{}\n",
                r.dist, r.a, r.n, r.scheme, r.method, r.level, r.reject_freq, r.se, r.reps, r.aborts
            ));
        }
        out
    }
}

/// One Monte Carlo replication: generate the DGP, run the bootstrap, return
/// the p-value report.
pub fn replicate(design: &McDesign, root: &RngStream, r: u64) -> Result<PValueReport> {
    let mut sr = root.split_path(&[0, r]);
    let n = design.n;
    let nf = n as f64;
    let drift = design.a * nf.powf(-design.rate);
    let methods = design.engine_methods();
    match &design.model {
        ModelSpec::Ma { scheme, sigma_mode, weights, delta } => {
            let rho = design.corr;
            let spec = design.dgp.spec();
            let mut x = DVector::zeros(n);
            let mut z = DMatrix::zeros(n, 1);
            let mut y = DVector::zeros(n);
            let beta = 1.0 + drift;
            for t in 0..n {
                let u1 = DistributionSpec::StandardNormal.sample_one(&mut sr);
                let u2 = DistributionSpec::StandardNormal.sample_one(&mut sr);
                x[t] = u1;
                z[(t, 0)] = rho * u1 + (1.0 - rho * rho).sqrt() * u2;
                y[t] = x[t] * beta + z[(t, 0)] * delta + spec.sample_one(&mut sr);
            }
            let cfg = MaConfig {
                weights: weights.clone(),
                selectors: vec![vec![], vec![0]],
                scheme: *scheme,
                include_intercept: true,
                null_value: 1.0,
                sigma_mode: *sigma_mode,
            };
            let (problem, orig) = MaProblem::new(MaData { y, x, z }, cfg)?;
            run_inference(&problem, &orig, &design.config, methods, &sr)
        }
        ModelSpec::Ridge { shrink } => {
            let spec = design.dgp.spec();
            let local = nf.powf(-0.5);
            let theta = [local + drift, local];
            let mut x = DMatrix::zeros(n, 2);
            let mut y = DVector::zeros(n);
            for t in 0..n {
                for j in 0..2 {
                    x[(t, j)] = DistributionSpec::StandardNormal.sample_one(&mut sr);
                }
                y[t] = x[(t, 0)] * theta[0] + x[(t, 1)] * theta[1] + spec.sample_one(&mut sr);
            }
            let cfg = RidgeConfig {
                c_n: shrink * nf,
                g: DVector::from_column_slice(&[1.0, 0.0]),
                r: local,
            };
            let (problem, orig) = RidgeProblem::new(y, x, cfg)?;
            run_inference(&problem, &orig, &design.config, methods, &sr)
        }
        ModelSpec::Np { c, kernel, x, sigma } => {
            let spec = design.dgp.spec();
            let y: Vec<f64> = (1..=n)
                .map(|t| {
                    let xt = t as f64 / nf;
                    xt * xt + drift + sigma * spec.sample_one(&mut sr)
                })
                .collect();
            let cfg = NpConfig { c: *c, kernel: *kernel, x: *x, null_value: x * x };
            let (problem, orig) = NpProblem::new(y, cfg)?;
            run_inference(&problem, &orig, &design.config, methods, &sr)
        }
        ModelSpec::Heavy { omega, alpha, estimator } => {
            let spec = DistributionSpec::SymmetricStable { alpha: *alpha, scale: 1.0 };
            spec.validate()?;
            let y: Vec<f64> = (0..n).map(|_| drift + spec.sample_one(&mut sr)).collect();
            let cfg = HeavyConfig {
                omega: *omega,
                alpha_estimator: *estimator,
                null_value: 0.0,
                scaling_alpha: None,
            };
            let (problem, orig) = HeavyProblem::new(y, cfg)?;
            run_inference(&problem, &orig, &design.config, methods, &sr)
        }
    }
}

fn method_p(report: &PValueReport, method: Method) -> f64 {
    match method {
        Method::Standard => report.p_hat,
        Method::Plugin => report.p_plugin.expect("plugin p-value requested but missing"),
        Method::Double => report.p_double.expect("double p-value requested but missing"),
    }
}

/// Replication results for one design: per-replication p-values in
/// replication order (None for aborted replications).
fn run_replications(design: &McDesign, seed: u64) -> Result<Vec<Option<Vec<f64>>>> {
    design.validate()?;
    let root = RngStream::from_seed(seed);
    let results: Vec<Option<Vec<f64>>> = (0..design.reps as u64)
        .into_par_iter()
        .map(|r| {
            replicate(design, &root, r)
                .ok()
                .map(|rep| design.methods.iter().map(|&m| method_p(&rep, m)).collect())
        })
        .collect();
    let aborts = results.iter().filter(|r| r.is_none()).count();
    if 100 * aborts > design.reps {
        return Err(Error::Numeric(format!(
            "{aborts} of {} replications aborted (> 1%)",
            design.reps
        )));
    }
    Ok(results)
}

/// Run a design and tabulate rejection frequencies per (method, level).
pub fn run_design(design: &McDesign, seed: u64) -> Result<RejectionTable> {
    let results = run_replications(design, seed)?;
    let aborts = results.iter().filter(|r| r.is_none()).count();
    let completed = design.reps - aborts;
    let mut counts = vec![vec![0usize; design.levels.len()]; design.methods.len()];
    for rep in results.iter().flatten() {
        for (mi, &p) in rep.iter().enumerate() {
            for (li, &level) in design.levels.iter().enumerate() {
                if p <= level {
                    counts[mi][li] += 1;
                }
            }
        }
    }
    let mut rows = Vec::new();
    for (mi, &method) in design.methods.iter().enumerate() {
        for (li, &level) in design.levels.iter().enumerate() {
            let f = counts[mi][li] as f64 / completed.max(1) as f64;
            rows.push(RejectionRow {
                dist: design.dist_label(),
                a: design.a,
                n: design.n,
                scheme: design.model.scheme_label().to_string(),
                method: method.label(),
                level,
                reject_freq: f,
                se: (f * (1.0 - f) / completed.max(1) as f64).sqrt(),
                reps: completed,
                aborts,
            });
        }
    }
    Ok(RejectionTable { rows })
}

/// Simulation-table reproduction: model-averaging design with equal-weight
/// short/long submodels.
pub fn run_table1(design: &McDesign, seed: u64) -> Result<RejectionTable> {
    match &design.model {
        ModelSpec::Ma { weights, .. }
            if weights.len() == 2 && (weights[0] - 0.5).abs() < 1e-12 =>
        {
            run_design(design, seed)
        }
        _ => Err(Error::Parameter(
            "table reproduction requires the model-averaging design with equal weights".into(),
        )),
    }
}

#[derive(Debug, Clone)]
pub struct UniformityReport {
    pub method: Method,
    pub p_values: Vec<f64>,
    pub ks: KsReport,
    pub aborts: usize,
}

/// Null-uniformity suite: collect each requested method's p-values across
/// replications and test them against U[0,1].
pub fn run_uniformity(design: &McDesign, seed: u64) -> Result<Vec<UniformityReport>> {
    if design.a != 0.0 {
        return Err(Error::Parameter("uniformity suite requires a = 0 (null true)".into()));
    }
    let results = run_replications(design, seed)?;
    let aborts = results.iter().filter(|r| r.is_none()).count();
    design
        .methods
        .iter()
        .enumerate()
        .map(|(mi, &method)| {
            let p_values: Vec<f64> = results.iter().flatten().map(|rep| rep[mi]).collect();
            let ks = ks_uniform(&p_values)?;
            Ok(UniformityReport { method, p_values, ks, aborts })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerRow {
    pub method: &'static str,
    pub level: f64,
    pub a: f64,
    pub empirical: f64,
    pub se: f64,
    /// Asymptotic local power Φ(Φ⁻¹(α) − a/v̂_d); only for prepivoted
    /// methods in the Gaussian-limit model-averaging design.
    pub overlay: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PowerCurve {
    pub rows: Vec<PowerRow>,
    /// Plug-in v̂_d averaged over null datasets (model averaging only).
    pub v_d_hat: Option<f64>,
}

impl PowerCurve {
    pub fn to_csv(&self, header: &[String]) -> String {
        let mut out = String::new();
        for h in header {
            out.push_str("# ");
            out.push_str(h);
            out.push('\n');
        }
        if let Some(v) = self.v_d_hat {
            out.push_str(&format!("# v_d_hat = {v:.6}\n"));
        }
        out.push_str("method,level,a,empirical,se,overlay\n");
        for r in &self.rows {
            let overlay = match r.overlay {
                Some(v) => format!("{v:.6}"),
                None => String::new(),
            };
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6},{}\n",
                r.method, r.level, r.a, r.empirical, r.se, overlay
            ));
        }
        out
    }
}

/// Average plug-in v̂_d over null datasets drawn at the design's sample size.
fn estimate_v_d(design: &McDesign, seed: u64, datasets: usize) -> Result<Option<f64>> {
    let ModelSpec::Ma { scheme, sigma_mode, weights, delta } = &design.model else {
        return Ok(None);
    };
    let root = RngStream::from_seed(seed);
    let rho = design.corr;
    let n = design.n;
    let cfg = MaConfig {
        weights: weights.clone(),
        selectors: vec![vec![], vec![0]],
        scheme: *scheme,
        include_intercept: true,
        null_value: 1.0,
        sigma_mode: *sigma_mode,
    };
    let mut total = 0.0;
    for k in 0..datasets as u64 {
        let mut s = root.split_path(&[3, k]);
        let spec = design.dgp.spec();
        let mut x = DVector::zeros(n);
        let mut z = DMatrix::zeros(n, 1);
        let mut y = DVector::zeros(n);
        for t in 0..n {
            let u1 = DistributionSpec::StandardNormal.sample_one(&mut s);
            let u2 = DistributionSpec::StandardNormal.sample_one(&mut s);
            x[t] = u1;
            z[(t, 0)] = rho * u1 + (1.0 - rho * rho).sqrt() * u2;
            y[t] = x[t] + z[(t, 0)] * delta + spec.sample_one(&mut s);
        }
        total += ma_auxiliaries(&y, &x, &z, &cfg)?.v_d2.sqrt();
    }
    Ok(Some(total / datasets as f64))
}

/// Empirical rejection frequency per drift value plus the asymptotic
/// overlay Φ(Φ⁻¹(α) − a/v̂_d) for prepivoted methods.
pub fn run_power_curve(design: &McDesign, a_grid: &[f64], seed: u64) -> Result<PowerCurve> {
    if a_grid.is_empty() {
        return Err(Error::Parameter("power curve needs at least one drift value".into()));
    }
    let v_d_hat = estimate_v_d(design, seed, 200)?;
    let mut rows = Vec::new();
    for (ai, &a) in a_grid.iter().enumerate() {
        let mut d = design.clone();
        d.a = a;
        // Independent replication branch per grid point.
        let table = run_design(&d, seed ^ (0x9e3779b97f4a7c15u64.wrapping_mul(ai as u64 + 1)))?;
        for row in table.rows {
            let overlay = match (row.method, v_d_hat) {
                ("standard", _) | (_, None) => None,
                (_, Some(vd)) => Some(normal_cdf(normal_quantile(row.level) - a / vd)),
            };
            rows.push(PowerRow {
                method: row.method,
                level: row.level,
                a,
                empirical: row.reject_freq,
                se: row.se,
                overlay,
            });
        }
    }
    Ok(PowerCurve { rows, v_d_hat })
}

/// Parse a flat `key = value` design file (`#` comments, blank lines
/// ignored). Later keys override earlier ones.
pub fn parse_design_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parameter(format!("line {}: expected key = value", lineno + 1)));
        };
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn get_f64(map: &BTreeMap<String, String>, key: &str, default: f64) -> Result<f64> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| Error::Parameter(format!("bad value for {key}: {v}"))),
    }
}

fn get_usize(map: &BTreeMap<String, String>, key: &str, default: usize) -> Result<usize> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| Error::Parameter(format!("bad value for {key}: {v}"))),
    }
}

/// Build a design from parsed key/value entries. Recognized keys:
/// `model` (ma|ridge|np|heavy), `scheme`, `sigma` (estimated|fixed:V),
/// `weights`, `delta`, `shrink`, `c`, `kernel`, `x`, `noise`, `omega`,
/// `alpha`, `alpha-estimator`, `dgp`, `n`, `a`, `rate`, `corr`, `reps`,
/// `b1`, `b2`, `tie`, `levels`, `methods`.
pub fn design_from_entries(map: &BTreeMap<String, String>) -> Result<McDesign> {
    let model_name = map.get("model").map(String::as_str).unwrap_or("ma");
    let model = match model_name {
        "ma" => {
            let scheme = MaScheme::parse(
                map.get("scheme").map(String::as_str).unwrap_or("frb-parametric"),
            )?;
            let sigma_mode = match map.get("sigma").map(String::as_str) {
                None | Some("estimated") => SigmaMode::Estimated,
                Some(s) => {
                    let v = s
                        .strip_prefix("fixed:")
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| Error::Parameter(format!("bad sigma mode {s}")))?;
                    SigmaMode::Fixed(v)
                }
            };
            let weights = match map.get("weights") {
                None => vec![0.5, 0.5],
                Some(s) => s
                    .split(',')
                    .map(|w| {
                        w.trim()
                            .parse()
                            .map_err(|_| Error::Parameter(format!("bad weight {w}")))
                    })
                    .collect::<Result<Vec<f64>>>()?,
            };
            ModelSpec::Ma { scheme, sigma_mode, weights, delta: get_f64(map, "delta", 1.0)? }
        }
        "ridge" => ModelSpec::Ridge { shrink: get_f64(map, "shrink", 0.5)? },
        "np" => ModelSpec::Np {
            c: get_f64(map, "c", 1.0)?,
            kernel: KernelSpec::parse(map.get("kernel").map(String::as_str).unwrap_or("epanechnikov"))?,
            x: get_f64(map, "x", 0.5)?,
            sigma: get_f64(map, "noise", 0.3)?,
        },
        "heavy" => ModelSpec::Heavy {
            omega: get_f64(map, "omega", 0.5)?,
            alpha: get_f64(map, "alpha", 1.5)?,
            estimator: AlphaEstimator::parse(
                map.get("alpha-estimator").map(String::as_str).unwrap_or("mcculloch-quantile"),
            )?,
        },
        other => return Err(Error::Parameter(format!("unknown model {other}"))),
    };
    let levels = match map.get("levels") {
        None => vec![0.05, 0.10],
        Some(s) => s
            .split(',')
            .map(|l| l.trim().parse().map_err(|_| Error::Parameter(format!("bad level {l}"))))
            .collect::<Result<Vec<f64>>>()?,
    };
    let methods = match map.get("methods") {
        None => vec![Method::Standard, Method::Plugin, Method::Double],
        Some(s) => s.split(',').map(|m| Method::parse(m.trim())).collect::<Result<Vec<_>>>()?,
    };
    let design = McDesign {
        model,
        dgp: Dgp::parse(map.get("dgp").map(String::as_str).unwrap_or("normal"))?,
        n: get_usize(map, "n", 40)?,
        a: get_f64(map, "a", 0.0)?,
        rate: get_f64(map, "rate", 0.5)?,
        corr: get_f64(map, "corr", 0.7)?,
        reps: get_usize(map, "reps", 2000)?,
        config: BootstrapConfig {
            b1: get_usize(map, "b1", 199)?,
            b2: get_usize(map, "b2", 199)?,
            tie_rule: TieRule::parse(map.get("tie").map(String::as_str).unwrap_or("add-one"))?,
        },
        levels,
        methods,
    };
    design.validate()?;
    Ok(design)
}
