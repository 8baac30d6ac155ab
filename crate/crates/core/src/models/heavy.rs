//! Shrunk location estimation under symmetric stable errors with tail index
//! α ∈ (1, 2]: θ̂ = ω·ȳ with ω ∈ (0, 1), statistic T_n = n^{1−1/α̂}(θ̂ − θ̄) and
//! shrinkage bias B̂_n = (ω−1) n^{1−1/α̂} ȳ.
//!
//! Bootstrap: y*_t = ȳ + ε*, ε* ~ i.i.d. S(α̂) with α̂ estimated once from the
//! original data and reused at both levels. The plug-in prepivot map is
//! u ↦ Ψ_α̂(ω Ψ_α̂⁻¹(u)). The p-value indicators are invariant to the common
//! scaling exponent, so using α̂ in place of α costs nothing there.

use crate::engine::{BootstrapProblem, PrepivotMap, TieRule};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::stable::StableLaw;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaEstimator {
    McCullochQuantile,
    LogMoment,
    Known(f64),
}

impl AlphaEstimator {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mcculloch-quantile" => Ok(AlphaEstimator::McCullochQuantile),
            "log-moment" => Ok(AlphaEstimator::LogMoment),
            other => {
                if let Some(v) = other.strip_prefix("known:") {
                    let a: f64 = v
                        .parse()
                        .map_err(|_| Error::Parameter(format!("bad alpha value {v}")))?;
                    Ok(AlphaEstimator::Known(a))
                } else {
                    Err(Error::Parameter(format!("unknown alpha estimator {s}")))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HeavyConfig {
    pub omega: f64,
    pub alpha_estimator: AlphaEstimator,
    pub null_value: f64,
    /// Override for the scaling exponent's tail index (defaults to α̂). The
    /// indicator events defining p̂ and the double-bootstrap p-value do not
    /// depend on it; exposed to make that invariance testable.
    pub scaling_alpha: Option<f64>,
}

impl HeavyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.omega && self.omega < 1.0) && self.omega != 1.0 {
            return Err(Error::Parameter(format!("omega must be in (0,1], got {}", self.omega)));
        }
        if let AlphaEstimator::Known(a) = self.alpha_estimator {
            if !(1.0 < a && a <= 2.0) {
                return Err(Error::Parameter(format!("known alpha must be in (1,2], got {a}")));
            }
        }
        if let Some(a) = self.scaling_alpha {
            if !(1.0 < a && a <= 2.0) {
                return Err(Error::Parameter(format!("scaling alpha must be in (1,2], got {a}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct HeavySample {
    pub y: Vec<f64>,
    pub mean: f64,
}

impl HeavySample {
    fn new(y: Vec<f64>) -> Self {
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        HeavySample { y, mean }
    }
}

#[derive(Debug, Clone)]
pub struct HeavyProblem {
    cfg: HeavyConfig,
    n: usize,
    alpha_hat: f64,
    /// n^{1−1/α} for the scaling exponent in use.
    rate: f64,
    law: StableLaw,
}

/// Estimated tail indices are clipped to this compact set.
pub const ALPHA_CLIP: (f64, f64) = (1.05, 2.0);

impl HeavyProblem {
    pub fn new(y: Vec<f64>, cfg: HeavyConfig) -> Result<(Self, HeavySample)> {
        cfg.validate()?;
        let n = y.len();
        let needs_estimate = !matches!(cfg.alpha_estimator, AlphaEstimator::Known(_));
        if n < 2 || (needs_estimate && n < 20) {
            return Err(Error::Parameter(format!(
                "need at least {} observations, got {n}",
                if needs_estimate { 20 } else { 2 }
            )));
        }
        let alpha_hat = match cfg.alpha_estimator {
            AlphaEstimator::Known(a) => a,
            AlphaEstimator::McCullochQuantile => mcculloch_alpha(&y)?,
            AlphaEstimator::LogMoment => log_moment_alpha(&y)?,
        };
        let scale_alpha = cfg.scaling_alpha.unwrap_or(alpha_hat);
        let problem = HeavyProblem {
            cfg,
            n,
            alpha_hat,
            rate: (n as f64).powf(1.0 - 1.0 / scale_alpha),
            law: StableLaw::with_cache(alpha_hat)?,
        };
        Ok((problem, HeavySample::new(y)))
    }

    pub fn alpha_hat(&self) -> f64 {
        self.alpha_hat
    }

    pub fn config(&self) -> &HeavyConfig {
        &self.cfg
    }

    /// Undersized residual bootstrap: resample m < n centered residuals,
    /// recompute the shrunk mean at size m, and return
    /// p̂_m = #{T*_m ≤ T_n}/B. Deliberately invalid here — the m-out-of-n
    /// rate kills the bias term the full-size bootstrap replicates — so the
    /// returned p-values are non-uniform whenever (ω−1)·(drift) ≠ 0.
    pub fn m_out_of_n_p_value(
        &self,
        orig: &HeavySample,
        m: usize,
        b1: usize,
        tie_rule: TieRule,
        stream: &RngStream,
    ) -> Result<f64> {
        if m == 0 || m >= self.n {
            return Err(Error::Parameter(format!("m must satisfy 0 < m < n, got {m} (n = {})", self.n)));
        }
        if b1 == 0 {
            return Err(Error::Parameter("need at least one bootstrap draw".into()));
        }
        let resid: Vec<f64> = orig.y.iter().map(|v| v - orig.mean).collect();
        let t_n = self.statistic(orig)?;
        let m_rate = (m as f64).powf(self.rate.ln() / (self.n as f64).ln());
        let mut count = 0usize;
        for b in 0..b1 {
            let mut sb = stream.split_path(&[1, b as u64]);
            let mut sum = 0.0;
            for _ in 0..m {
                sum += resid[sb.index(self.n)];
            }
            let mean_star = orig.mean + sum / m as f64;
            let t_star = m_rate * (self.cfg.omega * mean_star - orig.mean);
            if t_star <= t_n {
                count += 1;
            }
        }
        Ok(tie_rule.p(count, b1))
    }
}

impl BootstrapProblem for HeavyProblem {
    type Sample = HeavySample;

    fn statistic(&self, s: &HeavySample) -> Result<f64> {
        Ok(self.rate * (self.cfg.omega * s.mean - self.cfg.null_value))
    }

    fn resample(&self, s: &HeavySample, stream: &mut RngStream) -> Result<HeavySample> {
        let y: Vec<f64> = (0..self.n).map(|_| s.mean + self.law.sample(stream)).collect();
        Ok(HeavySample::new(y))
    }

    fn statistic_star(&self, parent: &HeavySample, star: &HeavySample) -> Result<f64> {
        Ok(self.rate * (self.cfg.omega * star.mean - parent.mean))
    }

    fn plugin_map(&self, _s: &HeavySample) -> Result<PrepivotMap> {
        Ok(PrepivotMap::Stable { law: self.law.clone(), omega: self.cfg.omega })
    }

    fn bias_terms(&self, orig: &HeavySample, star: &HeavySample) -> Result<(f64, f64)> {
        let b = |mean: f64| (self.cfg.omega - 1.0) * self.rate * mean;
        Ok((b(orig.mean), b(star.mean)))
    }
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 < n {
        sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
    } else {
        sorted[n - 1]
    }
}

/// Quantile-ratio tail-index estimator: ν̂ = (q̂.95 − q̂.05)/(q̂.75 − q̂.25)
/// inverted through the symmetric-stable lookup table, clipped to
/// [`ALPHA_CLIP`].
pub fn mcculloch_alpha(y: &[f64]) -> Result<f64> {
    // (ν, α) pairs for the symmetric case; ν below the first entry is
    // Gaussian territory (α = 2).
    const TABLE: [(f64, f64); 14] = [
        (2.439, 2.000),
        (2.5, 1.916),
        (2.6, 1.808),
        (2.7, 1.729),
        (2.8, 1.664),
        (3.0, 1.563),
        (3.2, 1.484),
        (3.5, 1.391),
        (4.0, 1.279),
        (5.0, 1.128),
        (6.0, 1.029),
        (8.0, 0.896),
        (10.0, 0.818),
        (15.0, 0.698),
    ];
    let mut s = y.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
    if !(iqr > 0.0) {
        return Err(Error::Degenerate("sample has zero interquartile range".into()));
    }
    let nu = (quantile_sorted(&s, 0.95) - quantile_sorted(&s, 0.05)) / iqr;
    let alpha = if nu <= TABLE[0].0 {
        2.0
    } else if nu >= TABLE[TABLE.len() - 1].0 {
        TABLE[TABLE.len() - 1].1
    } else {
        let mut a = TABLE[TABLE.len() - 1].1;
        for w in TABLE.windows(2) {
            if nu <= w[1].0 {
                let t = (nu - w[0].0) / (w[1].0 - w[0].0);
                a = w[0].1 * (1.0 - t) + w[1].1 * t;
                break;
            }
        }
        a
    };
    Ok(alpha.clamp(ALPHA_CLIP.0, ALPHA_CLIP.1))
}

/// Log-moment tail-index estimator: for symmetric stable X,
/// Var(ln|X|) = (π²/6)(1/α² + 1/2), inverted at the sample variance of
/// ln|y − median|, clipped to [`ALPHA_CLIP`].
pub fn log_moment_alpha(y: &[f64]) -> Result<f64> {
    let mut s = y.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let med = quantile_sorted(&s, 0.5);
    let logs: Vec<f64> = y
        .iter()
        .map(|v| (v - med).abs())
        .filter(|&a| a > 0.0)
        .map(|a| a.ln())
        .collect();
    if logs.len() < y.len() / 2 || logs.len() < 10 {
        return Err(Error::Degenerate("sample too concentrated for the log-moment estimator".into()));
    }
    let nf = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / nf;
    let var = logs.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / nf;
    let z = 6.0 * var / (std::f64::consts::PI * std::f64::consts::PI) - 0.5;
    let alpha = if z <= 0.0 { ALPHA_CLIP.1 } else { z.sqrt().recip() };
    Ok(alpha.clamp(ALPHA_CLIP.0, ALPHA_CLIP.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_inference, BootstrapConfig, Methods};
    use crate::ks::ks_uniform;
    use crate::stable::sample_one;

    fn stable_data(n: usize, alpha: f64, shift: f64, seed: u64) -> Vec<f64> {
        let mut s = RngStream::from_seed(seed);
        (0..n).map(|_| shift + sample_one(alpha, &mut s)).collect()
    }

    fn cfg(omega: f64, est: AlphaEstimator, null: f64) -> HeavyConfig {
        HeavyConfig { omega, alpha_estimator: est, null_value: null, scaling_alpha: None }
    }

    #[test]
    fn no_shrink_means_no_bias_and_identity_map() {
        let y = stable_data(50, 1.5, 0.0, 1);
        let (problem, orig) =
            HeavyProblem::new(y, cfg(1.0, AlphaEstimator::Known(1.5), 0.0)).unwrap();
        let (b_n, _) = problem.bias_terms(&orig, &orig).unwrap();
        assert_eq!(b_n, 0.0);
        let map = problem.plugin_map(&orig).unwrap();
        for p in [0.05, 0.3, 0.77] {
            assert!((map.apply(p) - p).abs() < 2e-6, "p = {p}");
        }
    }

    #[test]
    fn known_alpha_two_gives_root_n_scaling() {
        let y = stable_data(100, 2.0, 0.3, 2);
        let (problem, orig) =
            HeavyProblem::new(y, cfg(0.7, AlphaEstimator::Known(2.0), 0.0)).unwrap();
        let t = problem.statistic(&orig).unwrap();
        assert!((t - 10.0 * (0.7 * orig.mean)).abs() < 1e-12);
    }

    #[test]
    fn estimators_recover_alpha_near_two_for_gaussian_data() {
        let mut ok_mc = 0;
        let mut ok_lm = 0;
        for seed in 0..200 {
            let y = stable_data(5000, 2.0, 0.0, 100 + seed);
            if mcculloch_alpha(&y).unwrap() >= 1.85 {
                ok_mc += 1;
            }
            if log_moment_alpha(&y).unwrap() >= 1.80 {
                ok_lm += 1;
            }
        }
        assert!(ok_mc >= 190, "mcculloch: {ok_mc}/200");
        assert!(ok_lm >= 180, "log-moment: {ok_lm}/200");
    }

    #[test]
    fn estimators_recover_intermediate_alpha() {
        let mut err_mc = 0.0;
        let mut err_lm = 0.0;
        let reps = 50;
        for seed in 0..reps {
            let y = stable_data(20_000, 1.5, 0.0, 300 + seed);
            err_mc += mcculloch_alpha(&y).unwrap() - 1.5;
            err_lm += log_moment_alpha(&y).unwrap() - 1.5;
        }
        assert!((err_mc / reps as f64).abs() < 0.05, "mcculloch bias {}", err_mc / reps as f64);
        assert!((err_lm / reps as f64).abs() < 0.05, "log-moment bias {}", err_lm / reps as f64);
    }

    #[test]
    fn exponent_invariance_of_p_values() {
        // Changing only the scaling exponent leaves every indicator — hence
        // p̂ and the double-bootstrap p-value — bitwise unchanged.
        let y = stable_data(40, 1.5, 0.2, 5);
        let bcfg = BootstrapConfig { b1: 49, b2: 19, tie_rule: TieRule::Plain };
        let methods = Methods { plugin: false, double: true };
        let mut reports = Vec::new();
        for scaling in [None, Some(1.2), Some(2.0)] {
            let mut c = cfg(0.6, AlphaEstimator::Known(1.5), 0.1);
            c.scaling_alpha = scaling;
            let (problem, orig) = HeavyProblem::new(y.clone(), c).unwrap();
            let stream = RngStream::from_seed(42);
            reports.push(run_inference(&problem, &orig, &bcfg, methods, &stream).unwrap());
        }
        for r in &reports[1..] {
            assert_eq!(r.p_hat, reports[0].p_hat);
            assert_eq!(r.p_double, reports[0].p_double);
        }
    }

    #[test]
    fn plugin_map_is_exactly_uniform_with_known_alpha() {
        // With α known, p̂ = Ψ(S/ω) for the exact normalized stable sum S, so
        // the plug-in map returns Ψ(S) ~ U at any sample size.
        let alpha = 1.5;
        let omega = 0.6;
        let c = cfg(omega, AlphaEstimator::Known(alpha), 0.0);
        let bcfg = BootstrapConfig { b1: 199, b2: 1, tie_rule: TieRule::AddOne };
        let methods = Methods { plugin: true, double: false };
        let root = RngStream::from_seed(7);
        let mut plugin = Vec::new();
        let mut raw = Vec::new();
        for r in 0..1500u64 {
            let mut sr = root.split_path(&[0, r]);
            let y: Vec<f64> = (0..30).map(|_| sample_one(alpha, &mut sr)).collect();
            let (problem, orig) = HeavyProblem::new(y, c).unwrap();
            let rep = run_inference(&problem, &orig, &bcfg, methods, &sr).unwrap();
            plugin.push(rep.p_plugin.unwrap());
            raw.push(rep.p_hat);
        }
        let ks_p = ks_uniform(&plugin).unwrap();
        assert!(ks_p.p_value > 0.01, "plugin KS p = {}", ks_p.p_value);
        let ks_r = ks_uniform(&raw).unwrap();
        assert!(ks_r.p_value < 1e-3, "raw KS p = {}", ks_r.p_value);
    }

    #[test]
    fn m_out_of_n_is_biased_when_shrinkage_meets_drift() {
        // Local drift θ = c·n^{1/α−1} with ω < 1: the undersized bootstrap
        // misses the bias term and its p-values shift by (ω−1)c.
        let alpha = 1.5;
        let n = 1000;
        let m = 100;
        let c_drift = 4.0;
        let theta = c_drift * (n as f64).powf(1.0 / alpha - 1.0);
        let root = RngStream::from_seed(21);
        let mut biased = Vec::new();
        let mut clean = Vec::new();
        for r in 0..400u64 {
            let mut sr = root.split_path(&[0, r]);
            let y: Vec<f64> = (0..n).map(|_| theta + sample_one(alpha, &mut sr)).collect();
            let ccfg = cfg(0.5, AlphaEstimator::Known(alpha), theta);
            let (problem, orig) = HeavyProblem::new(y, ccfg).unwrap();
            biased.push(
                problem.m_out_of_n_p_value(&orig, m, 99, TieRule::AddOne, &sr).unwrap(),
            );
            // ω = 1 kills the bias regardless of the drift.
            let y2: Vec<f64> = (0..n).map(|_| theta + sample_one(alpha, &mut sr)).collect();
            let ccfg1 = cfg(1.0, AlphaEstimator::Known(alpha), theta);
            let (p1, o1) = HeavyProblem::new(y2, ccfg1).unwrap();
            clean.push(p1.m_out_of_n_p_value(&o1, m, 99, TieRule::AddOne, &sr).unwrap());
        }
        assert!(ks_uniform(&biased).unwrap().p_value < 1e-3);
        assert!(ks_uniform(&clean).unwrap().p_value > 0.01);
    }

    #[test]
    fn degenerate_and_invalid_inputs_rejected() {
        assert!(HeavyProblem::new(vec![1.0; 50], cfg(0.5, AlphaEstimator::McCullochQuantile, 0.0))
            .is_err());
        assert!(HeavyProblem::new(
            stable_data(10, 1.5, 0.0, 9),
            cfg(0.5, AlphaEstimator::McCullochQuantile, 0.0)
        )
        .is_err());
        assert!(HeavyProblem::new(
            stable_data(50, 1.5, 0.0, 9),
            cfg(1.5, AlphaEstimator::Known(1.5), 0.0)
        )
        .is_err());
        let (p, o) = HeavyProblem::new(
            stable_data(50, 1.5, 0.0, 9),
            cfg(0.5, AlphaEstimator::Known(1.5), 0.0),
        )
        .unwrap();
        assert!(p.m_out_of_n_p_value(&o, 50, 99, TieRule::Plain, &RngStream::from_seed(1)).is_err());
        assert!(p.m_out_of_n_p_value(&o, 0, 99, TieRule::Plain, &RngStream::from_seed(1)).is_err());
    }

    #[test]
    fn alpha_estimates_clipped_to_compact_set() {
        // Cauchy-ish data (α = 1.1) pushes estimates toward the lower clip.
        let y = stable_data(5000, 1.1, 0.0, 33);
        let a = mcculloch_alpha(&y).unwrap();
        assert!((ALPHA_CLIP.0..=ALPHA_CLIP.1).contains(&a));
        let a = log_moment_alpha(&y).unwrap();
        assert!((ALPHA_CLIP.0..=ALPHA_CLIP.1).contains(&a));
    }
}
