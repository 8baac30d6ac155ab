//! Model-agnostic bootstrap p-value machinery.
//!
//! A model plugs in through [`BootstrapProblem`]; the engine computes the
//! standard bootstrap p-value, prepivoted (plug-in) p-values, the nested
//! double-bootstrap p-value, tail variants, the bias-removed p-value, and
//! prepivoted percentile confidence intervals.
//!
//! Stream discipline: an inference run owns one [`RngStream`]. Outer
//! replication b draws from the split path (1, b); inner replication c of
//! outer b from (1, b, 2, c). Results are therefore independent of loop
//! scheduling.

use crate::dist::{normal_cdf, normal_quantile};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::stable::StableLaw;

/// How ties and the finite replication count enter the p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieRule {
    /// (#{draws ≤ t}) / B
    #[default]
    Plain,
    /// (1 + #{draws ≤ t}) / (B + 1); exactly uniform under exchangeability.
    AddOne,
}

impl TieRule {
    #[inline]
    pub fn p(&self, count: usize, b: usize) -> f64 {
        self.p_fractional(count as f64, b)
    }

    /// Same normalization for a fractional (midrank) count.
    #[inline]
    fn p_fractional(&self, count: f64, b: usize) -> f64 {
        match self {
            TieRule::Plain => count / b as f64,
            TieRule::AddOne => (count + 1.0) / (b + 1) as f64,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(TieRule::Plain),
            "add-one" => Ok(TieRule::AddOne),
            _ => Err(Error::Parameter(format!("unknown tie rule {s}"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BootstrapConfig {
    pub b1: usize,
    pub b2: usize,
    pub tie_rule: TieRule,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig { b1: 199, b2: 199, tie_rule: TieRule::Plain }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.b1 == 0 || self.b2 == 0 {
            return Err(Error::Parameter("replication counts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Which p-values an inference run should produce.
#[derive(Debug, Clone, Copy, Default)]
pub struct Methods {
    pub plugin: bool,
    pub double: bool,
}

/// The contract a model supplies to the engine. `Sample` carries the data
/// for one (possibly resampled) dataset together with whatever fitted
/// quantities the model wants to reuse.
pub trait BootstrapProblem: Sync {
    type Sample: Send + Sync;

    /// T_n on a sample.
    fn statistic(&self, s: &Self::Sample) -> Result<f64>;

    /// Draw a bootstrap sample from `s` under the model's scheme.
    fn resample(&self, s: &Self::Sample, stream: &mut RngStream) -> Result<Self::Sample>;

    /// T*_n for `star` drawn from `parent`, centered per the model's scheme.
    fn statistic_star(&self, parent: &Self::Sample, star: &Self::Sample) -> Result<f64>;

    /// Whether second-level resampling is available.
    fn second_level(&self) -> bool {
        true
    }

    /// Second-level resample (defaults to the first-level scheme applied to
    /// the starred sample).
    fn resample_inner(
        &self,
        orig: &Self::Sample,
        star: &Self::Sample,
        stream: &mut RngStream,
    ) -> Result<Self::Sample> {
        let _ = orig;
        self.resample(star, stream)
    }

    /// Inner statistic compared against T* (defaults to the first-level
    /// statistic one level down; models may apply a correction).
    fn statistic_inner(
        &self,
        orig: &Self::Sample,
        star: &Self::Sample,
        star2: &Self::Sample,
    ) -> Result<f64> {
        let _ = orig;
        self.statistic_star(star, star2)
    }

    /// Parametric prepivot map for the plug-in modified p-value.
    fn plugin_map(&self, s: &Self::Sample) -> Result<PrepivotMap> {
        let _ = s;
        Err(Error::Capability("model supplies no plug-in map".into()))
    }

    /// (B̂_n of `orig`, B̂*_n of `star`) for the bias-removed p-value.
    fn bias_terms(&self, orig: &Self::Sample, star: &Self::Sample) -> Result<(f64, f64)> {
        let _ = (orig, star);
        Err(Error::Capability("model supplies no explicit bias terms".into()))
    }
}

/// Estimated cdf H of the bootstrap p-value, used to prepivot.
#[derive(Debug, Clone)]
pub enum PrepivotMap {
    /// H(u) = Φ(m⁻¹ Φ⁻¹(u)).
    GaussianScale { m: f64 },
    /// H(u) = Φ(Φ⁻¹(u) − b/v).
    GaussianShift { b_over_v: f64 },
    /// H(u) = Ψ_α(ω Ψ_α⁻¹(u)).
    Stable { law: StableLaw, omega: f64 },
    /// Empirical cdf of first-level p̂* draws.
    Empirical { sorted: Vec<f64>, tie_rule: TieRule },
}

impl PrepivotMap {
    pub fn empirical(mut draws: Vec<f64>, tie_rule: TieRule) -> Self {
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        PrepivotMap::Empirical { sorted: draws, tie_rule }
    }

    /// H(p); endpoints 0 and 1 map to themselves (empirical map: up to its
    /// 1/B1 granularity).
    pub fn apply(&self, p: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&p));
        if let PrepivotMap::Empirical { sorted, tie_rule } = self {
            // When the stored p̂* draws and the query p̂ share a count grid
            // (as in the double bootstrap with B1 = B2), exact ties occur
            // with positive probability; counting them fully (or ignoring
            // them) biases the mapped p-value by the full tie mass.
            // Midrank counting — half of the tied draws — removes that
            // bias and equals the plain count whenever no tie occurs.
            let below = sorted.partition_point(|&x| x < p);
            let at_or_below = sorted.partition_point(|&x| x <= p);
            return tie_rule.p_fractional(0.5 * (below + at_or_below) as f64, sorted.len());
        }
        if p <= 0.0 || p >= 1.0 {
            return p.clamp(0.0, 1.0);
        }
        match self {
            PrepivotMap::GaussianScale { m } => normal_cdf(normal_quantile(p) / m),
            PrepivotMap::GaussianShift { b_over_v } => normal_cdf(normal_quantile(p) - b_over_v),
            PrepivotMap::Stable { law, omega } => {
                let x = law.quantile(p).and_then(|q| law.cdf(omega * q));
                x.unwrap_or(p).clamp(0.0, 1.0)
            }
            PrepivotMap::Empirical { .. } => unreachable!("handled above"),
        }
    }

    /// H⁻¹(t) (closed form for the Gaussian maps, root search for stable,
    /// inverse-cdf quantile for the empirical map).
    pub fn inverse(&self, t: f64) -> Result<f64> {
        if !(0.0 < t && t < 1.0) {
            return Err(Error::Domain(format!("map inverse requires t in (0,1), got {t}")));
        }
        Ok(match self {
            PrepivotMap::GaussianScale { m } => normal_cdf(m * normal_quantile(t)),
            PrepivotMap::GaussianShift { b_over_v } => normal_cdf(normal_quantile(t) + b_over_v),
            PrepivotMap::Stable { law, omega } => law.cdf(law.quantile(t)? / omega)?,
            PrepivotMap::Empirical { sorted, .. } => {
                empirical_quantile(sorted, t)
            }
        })
    }
}

/// Inverse-cdf empirical quantile: smallest draw whose ecdf reaches `t`.
/// Assumes `sorted` is ascending.
pub fn empirical_quantile(sorted: &[f64], t: f64) -> f64 {
    let b = sorted.len();
    let idx = ((t * b as f64).ceil() as usize).clamp(1, b) - 1;
    sorted[idx]
}

/// Standard bootstrap p-value p̂ = P*(T* ≤ T_n).
pub fn standard_p_value(t_n: f64, t_star: &[f64], tie_rule: TieRule) -> f64 {
    assert!(!t_star.is_empty(), "standard_p_value needs at least one draw");
    let count = t_star.iter().filter(|&&t| t <= t_n).count();
    tie_rule.p(count, t_star.len())
}

/// Bias-removed p-value: fraction of (T* − B̂*) draws at or below T_n − B̂_n.
pub fn bias_removed_p_value(
    t_n: f64,
    bhat_n: f64,
    t_star_minus_bhat_star: &[f64],
    tie_rule: TieRule,
) -> f64 {
    standard_p_value(t_n - bhat_n, t_star_minus_bhat_star, tie_rule)
}

#[derive(Debug, Clone, Copy)]
pub struct TailVariants {
    pub right: f64,
    pub equal_tailed: f64,
}

/// Right-tail and equal-tailed variants of an already-prepivoted left-tail
/// p-value.
pub fn tail_variants(p_left: f64) -> TailVariants {
    TailVariants {
        right: 1.0 - p_left,
        equal_tailed: (2.0 * p_left.min(1.0 - p_left)).min(1.0),
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Diagnostics {
    pub b1: usize,
    pub b2: usize,
    pub outer_retries: usize,
    pub inner_retries: usize,
    pub outer_ties: usize,
}

#[derive(Debug, Clone)]
pub struct PValueReport {
    pub t_n: f64,
    pub p_hat: f64,
    pub p_plugin: Option<f64>,
    pub p_double: Option<f64>,
    pub p_right: f64,
    pub p_equal_tailed: f64,
    pub m_hat: Option<f64>,
    pub diagnostics: Diagnostics,
}

const RESAMPLE_RETRY_CAP: usize = 100;

fn draw_star<P: BootstrapProblem>(
    problem: &P,
    parent: &P::Sample,
    stream: &mut RngStream,
    retries: &mut usize,
) -> Result<(P::Sample, f64)> {
    let mut last = None;
    for _ in 0..=RESAMPLE_RETRY_CAP {
        match problem
            .resample(parent, stream)
            .and_then(|s| problem.statistic_star(parent, &s).map(|t| (s, t)))
        {
            Ok(out) => return Ok(out),
            Err(e) => {
                *retries += 1;
                last = Some(e);
            }
        }
    }
    Err(last.unwrap_or_else(|| Error::Numeric("resampling failed".into())))
}

/// Run a full inference: standard p̂ always; plug-in and/or double-bootstrap
/// p-values per `methods`. The prepivoted left-tail p-value (double if
/// requested, else plug-in, else p̂) feeds the tail variants.
pub fn run_inference<P: BootstrapProblem>(
    problem: &P,
    orig: &P::Sample,
    cfg: &BootstrapConfig,
    methods: Methods,
    stream: &RngStream,
) -> Result<PValueReport> {
    cfg.validate()?;
    if methods.double && !problem.second_level() {
        return Err(Error::Capability(
            "double bootstrap requested but the model has no second level".into(),
        ));
    }
    let t_n = problem.statistic(orig)?;
    let mut diag = Diagnostics { b1: cfg.b1, b2: cfg.b2, ..Default::default() };

    let mut t_star = Vec::with_capacity(cfg.b1);
    let mut p_hat_star = if methods.double { Vec::with_capacity(cfg.b1) } else { Vec::new() };
    for b in 0..cfg.b1 {
        let mut sb = stream.split_path(&[1, b as u64]);
        let (star, t) = draw_star(problem, orig, &mut sb, &mut diag.outer_retries)?;
        t_star.push(t);
        if methods.double {
            let mut count = 0usize;
            for c in 0..cfg.b2 {
                let mut sc = stream.split_path(&[1, b as u64, 2, c as u64]);
                let mut inner_retries = 0usize;
                let mut drawn = None;
                for _ in 0..=RESAMPLE_RETRY_CAP {
                    match problem
                        .resample_inner(orig, &star, &mut sc)
                        .and_then(|s2| problem.statistic_inner(orig, &star, &s2))
                    {
                        Ok(t2) => {
                            drawn = Some(t2);
                            break;
                        }
                        Err(_) => inner_retries += 1,
                    }
                }
                diag.inner_retries += inner_retries;
                let t2 = drawn.ok_or_else(|| {
                    Error::Numeric("second-level resampling kept failing".into())
                })?;
                if t2 <= t {
                    count += 1;
                }
            }
            p_hat_star.push(cfg.tie_rule.p(count, cfg.b2));
        }
    }
    let p_hat = standard_p_value(t_n, &t_star, cfg.tie_rule);
    diag.outer_ties = t_star.iter().filter(|&&t| t == t_n).count();

    let (p_plugin, m_hat) = if methods.plugin {
        let map = problem.plugin_map(orig)?;
        let m = match &map {
            PrepivotMap::GaussianScale { m } => Some(*m),
            _ => None,
        };
        (Some(map.apply(p_hat)), m)
    } else {
        (None, None)
    };

    let p_double = if methods.double {
        let map = PrepivotMap::empirical(p_hat_star, cfg.tie_rule);
        Some(map.apply(p_hat))
    } else {
        None
    };

    let p_left = p_double.or(p_plugin).unwrap_or(p_hat);
    let tails = tail_variants(p_left);
    Ok(PValueReport {
        t_n,
        p_hat,
        p_plugin,
        p_double,
        p_right: tails.right,
        p_equal_tailed: tails.equal_tailed,
        m_hat,
        diagnostics: diag,
    })
}

/// Bias-removed inference over B1 outer draws using the model's explicit
/// bias terms.
pub fn run_bias_removed<P: BootstrapProblem>(
    problem: &P,
    orig: &P::Sample,
    cfg: &BootstrapConfig,
    stream: &RngStream,
) -> Result<f64> {
    cfg.validate()?;
    let t_n = problem.statistic(orig)?;
    let (bhat_n, _) = {
        // Probe the capability with a throwaway star sample.
        let mut s0 = stream.split_path(&[1, 0]);
        let mut r = 0usize;
        let (star, _) = draw_star(problem, orig, &mut s0, &mut r)?;
        problem.bias_terms(orig, &star)?
    };
    let mut draws = Vec::with_capacity(cfg.b1);
    let mut retries = 0usize;
    for b in 0..cfg.b1 {
        let mut sb = stream.split_path(&[1, b as u64]);
        let (star, t) = draw_star(problem, orig, &mut sb, &mut retries)?;
        let (_, bhat_star) = problem.bias_terms(orig, &star)?;
        draws.push(t - bhat_star);
    }
    Ok(bias_removed_p_value(t_n, bhat_n, &draws, cfg.tie_rule))
}

/// One-sided prepivoted percentile interval [θ̂ − q̂(H⁻¹(1−α))/g(n), ∞).
#[derive(Debug, Clone, Copy)]
pub struct HalfLineCi {
    pub lower: f64,
    /// True when the target quantile fell outside the draw range and the
    /// extreme draw was used.
    pub clamped: bool,
}

pub fn prepivot_ci(
    theta_hat: f64,
    gn: f64,
    t_star: &[f64],
    map: &PrepivotMap,
    alpha: f64,
) -> Result<HalfLineCi> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::Parameter(format!("alpha must be in (0,1), got {alpha}")));
    }
    if gn <= 0.0 {
        return Err(Error::Parameter("gn must be positive".into()));
    }
    if t_star.is_empty() {
        return Err(Error::Parameter("prepivot_ci needs bootstrap draws".into()));
    }
    let target = map.inverse(1.0 - alpha)?;
    let mut sorted = t_star.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let b = sorted.len() as f64;
    let clamped = target >= 1.0 - 0.5 / b || target <= 0.5 / b;
    let q = empirical_quantile(&sorted, target.clamp(1.0 / b, 1.0));
    Ok(HalfLineCi { lower: theta_hat - q / gn, clamped })
}
