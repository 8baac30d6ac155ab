//! Kernel regression on the fixed design x_t = t/n with the plain
//! (Riemann-sum) Nadaraya–Watson smoother β̂_h(x) = (nh)⁻¹Σ k((x_t−x)/h) y_t,
//! h = c·n^{−1/5}.
//!
//! The statistic is T_n = √(nh)(β̂_h(x) − β̄) with smoothing-bias estimate
//! B̂_n = √(nh)((nh)⁻¹Σ k_t β̂_h(x_t) − β̂_h(x)). Bootstrap: y*_t = β̂_h(x_t) + ε*,
//! ε* ~ N(0, σ̂²); the second level regenerates from the starred fit and
//! compares the re-centered statistic T̄** = T** − (B̂_{2,n} − B̂_n), where
//! B̂_{2,n} = (nh)⁻¹Σ k_t B̂_n(x_t) is the smoothed bias estimate.

use crate::engine::{BootstrapProblem, PrepivotMap};
use crate::error::{Error, Result};
use crate::kernel::{kernel_constants, KernelSpec, QuadScheme};
use crate::rng::RngStream;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy)]
pub struct NpConfig {
    /// Bandwidth constant: h = c·n^{−1/5}.
    pub c: f64,
    pub kernel: KernelSpec,
    /// Evaluation point in (0, 1).
    pub x: f64,
    pub null_value: f64,
}

impl NpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(Error::Parameter(format!("bandwidth constant must be > 0, got {}", self.c)));
        }
        if !(0.0 < self.x && self.x < 1.0) {
            return Err(Error::Parameter(format!("evaluation point must be in (0,1), got {}", self.x)));
        }
        Ok(())
    }
}

/// One (possibly resampled) dataset with its smoothed fit. Inner-level
/// samples are lightweight: only `beta_at_x` is populated (the corrected
/// second-level statistic needs nothing else).
#[derive(Debug, Clone)]
pub struct NpSample {
    pub y: Vec<f64>,
    pub beta_at_x: f64,
    /// β̂_h evaluated at every design point.
    pub grid: Vec<f64>,
    pub sigma2: f64,
    /// B̂_n at the evaluation point.
    pub b_hat: f64,
    /// Smoothed bias B̂_{2,n} = (nh)⁻¹Σ k_t B̂_n(x_t).
    pub b2_hat: f64,
}

/// One precomputed kernel-weight row: weights for design indices
/// start..start+len.
#[derive(Debug, Clone)]
struct WeightRow {
    start: usize,
    w: Vec<f64>,
}

impl WeightRow {
    fn smooth(&self, v: &[f64], nh: f64) -> f64 {
        let mut s = 0.0;
        for (j, &wj) in self.w.iter().enumerate() {
            s += wj * v[self.start + j];
        }
        s / nh
    }
}

#[derive(Debug, Clone)]
pub struct NpProblem {
    cfg: NpConfig,
    n: usize,
    h: f64,
    nh: f64,
    root_nh: f64,
    m_np: f64,
    /// Kernel weights centered at each design point (shared by every
    /// resample since the design is fixed).
    rows: Vec<WeightRow>,
    /// Kernel weights centered at the evaluation point.
    x0_row: WeightRow,
    boundary_warning: bool,
}

fn weight_row(kernel: KernelSpec, n: usize, h: f64, center: f64) -> WeightRow {
    // Design points are x_t = t/n, t = 1..n (0-based index t−1).
    let lo = (((center - h) * n as f64).ceil() as i64 - 1).max(0) as usize;
    let hi = ((((center + h) * n as f64).floor() as i64).min(n as i64) - 1).max(-1);
    if (hi as i64) < lo as i64 {
        return WeightRow { start: 0, w: Vec::new() };
    }
    let hi = hi as usize;
    let w = (lo..=hi)
        .map(|t| kernel.k((((t + 1) as f64 / n as f64) - center) / h))
        .collect();
    WeightRow { start: lo, w }
}

impl NpProblem {
    pub fn new(y: Vec<f64>, cfg: NpConfig) -> Result<(Self, NpSample)> {
        cfg.validate()?;
        let n = y.len();
        if n < 10 {
            return Err(Error::Parameter(format!("need at least 10 observations, got {n}")));
        }
        let h = cfg.c * (n as f64).powf(-0.2);
        let x0_row = weight_row(cfg.kernel, n, h, cfg.x);
        if x0_row.w.iter().all(|&w| w == 0.0) {
            return Err(Error::Parameter(format!(
                "kernel window around x = {} is empty at bandwidth h = {h}",
                cfg.x
            )));
        }
        let rows = (0..n)
            .map(|t| weight_row(cfg.kernel, n, h, (t + 1) as f64 / n as f64))
            .collect();
        let problem = NpProblem {
            boundary_warning: h >= cfg.x.min(1.0 - cfg.x),
            cfg,
            n,
            h,
            nh: n as f64 * h,
            root_nh: (n as f64 * h).sqrt(),
            m_np: kernel_constants(cfg.kernel, QuadScheme::AdaptiveSimpson)?.m_np,
            rows,
            x0_row,
        };
        let sample = problem.full_fit(y);
        Ok((problem, sample))
    }

    pub fn config(&self) -> &NpConfig {
        &self.cfg
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    /// True when the kernel window spills over the domain boundary.
    pub fn boundary_warning(&self) -> bool {
        self.boundary_warning
    }

    fn full_fit(&self, y: Vec<f64>) -> NpSample {
        let n = self.n;
        let grid: Vec<f64> = (0..n).map(|t| self.rows[t].smooth(&y, self.nh)).collect();
        let beta_at_x = self.x0_row.smooth(&y, self.nh);
        // First-difference variance estimator: consistent for σ² and free of
        // the smoothing and boundary bias that contaminates the raw
        // residual variance at practical bandwidths.
        let sigma2 = y.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum::<f64>()
            / (2.0 * (n - 1) as f64);
        let b_hat = self.root_nh * (self.x0_row.smooth(&grid, self.nh) - beta_at_x);
        // B̂_n(x_t) over the evaluation window, then smooth once more.
        let mut b2_sum = 0.0;
        for (j, &wj) in self.x0_row.w.iter().enumerate() {
            if wj == 0.0 {
                continue;
            }
            let t = self.x0_row.start + j;
            let b_at_t = self.root_nh * (self.rows[t].smooth(&grid, self.nh) - grid[t]);
            b2_sum += wj * b_at_t;
        }
        let b2_hat = b2_sum / self.nh;
        NpSample { y, beta_at_x, grid, sigma2, b_hat, b2_hat }
    }
}

impl BootstrapProblem for NpProblem {
    type Sample = NpSample;

    fn statistic(&self, s: &NpSample) -> Result<f64> {
        Ok(self.root_nh * (s.beta_at_x - self.cfg.null_value))
    }

    fn resample(&self, s: &NpSample, stream: &mut RngStream) -> Result<NpSample> {
        let sd = s.sigma2.sqrt();
        let y_star: Vec<f64> = (0..self.n)
            .map(|t| s.grid[t] + sd * rand::Rng::sample::<f64, _>(stream, StandardNormal))
            .collect();
        Ok(self.full_fit(y_star))
    }

    fn statistic_star(&self, parent: &NpSample, star: &NpSample) -> Result<f64> {
        Ok(self.root_nh * (star.beta_at_x - parent.beta_at_x))
    }

    /// Second-level draw: regenerate only inside the evaluation window —
    /// the corrected inner statistic needs β̂**_h(x) alone.
    fn resample_inner(
        &self,
        _orig: &NpSample,
        star: &NpSample,
        stream: &mut RngStream,
    ) -> Result<NpSample> {
        let sd = star.sigma2.sqrt();
        let mut acc = 0.0;
        for (j, &wj) in self.x0_row.w.iter().enumerate() {
            let t = self.x0_row.start + j;
            let y2 = star.grid[t] + sd * rand::Rng::sample::<f64, _>(stream, StandardNormal);
            acc += wj * y2;
        }
        Ok(NpSample {
            y: Vec::new(),
            beta_at_x: acc / self.nh,
            grid: Vec::new(),
            sigma2: f64::NAN,
            b_hat: f64::NAN,
            b2_hat: f64::NAN,
        })
    }

    /// T̄** = T** − (B̂_{2,n} − B̂_n), centering the inner statistic the same
    /// way the data-level statistic is contaminated.
    fn statistic_inner(&self, orig: &NpSample, star: &NpSample, star2: &NpSample) -> Result<f64> {
        let t2 = self.root_nh * (star2.beta_at_x - star.beta_at_x);
        Ok(t2 - (orig.b2_hat - orig.b_hat))
    }

    fn plugin_map(&self, _s: &NpSample) -> Result<PrepivotMap> {
        Ok(PrepivotMap::GaussianScale { m: self.m_np })
    }

    fn bias_terms(&self, orig: &NpSample, star: &NpSample) -> Result<(f64, f64)> {
        if !star.b_hat.is_finite() {
            return Err(Error::Capability("bias terms need a fully fitted sample".into()));
        }
        Ok((orig.b_hat, star.b_hat))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed_design_y<F: Fn(f64) -> f64>(n: usize, f: F) -> Vec<f64> {
        (1..=n).map(|t| f(t as f64 / n as f64)).collect()
    }

    fn cfg(c: f64, x: f64) -> NpConfig {
        NpConfig { c, kernel: KernelSpec::Epanechnikov, x, null_value: 0.0 }
    }

    #[test]
    fn constant_function_recovered() {
        let y = fixed_design_y(2000, |_| 5.0);
        let (_, s) = NpProblem::new(y, cfg(1.0, 0.5)).unwrap();
        // Plain Riemann normalization: β̂ = 5·(1 + O((nh)⁻¹)), so the bias
        // estimate is of order 5·(nh)^{−1/2} rather than exactly zero.
        assert!((s.beta_at_x - 5.0).abs() < 0.05, "{}", s.beta_at_x);
        let nh = 2000.0 * (2000f64).powf(-0.2);
        assert!(s.b_hat.abs() < 5.0 * 5.0 / nh.sqrt(), "B_n = {}", s.b_hat);
        assert!(s.sigma2 < 0.02, "{}", s.sigma2);
    }

    #[test]
    fn linear_function_has_vanishing_bias() {
        // Second derivative zero: the κ₂ bias term drops out at interior x.
        let y = fixed_design_y(2000, |x| x);
        let (_, s) = NpProblem::new(y, cfg(0.5, 0.5)).unwrap();
        assert!(s.b_hat.abs() < 0.05, "B_n = {}", s.b_hat);
    }

    #[test]
    fn quadratic_bias_matches_expansion() {
        // β(x) = x², c = 1, x = 0.5: the bias limit is c^{5/2}·β″·κ₂/2 = κ₂·β″/2
        // with β″ = 2 and κ₂ = 0.2, i.e. 0.2.
        let y = fixed_design_y(10_000, |x| x * x);
        let (_, s) = NpProblem::new(y, cfg(1.0, 0.5)).unwrap();
        let oracle = 0.2;
        assert!((s.b_hat / oracle - 1.0).abs() < 0.15, "{} vs {oracle}", s.b_hat);
    }

    #[test]
    fn noiseless_star_equals_bias() {
        let y = fixed_design_y(400, |x| (3.0 * x).sin());
        let (problem, mut orig) = NpProblem::new(y, cfg(1.0, 0.5)).unwrap();
        orig.sigma2 = 0.0;
        let mut stream = RngStream::from_seed(1);
        let star = problem.resample(&orig, &mut stream).unwrap();
        let t_star = problem.statistic_star(&orig, &star).unwrap();
        assert!((t_star - orig.b_hat).abs() < 1e-10, "{t_star} vs {}", orig.b_hat);
        // And the noiseless inner statistic is the recentered starred bias.
        let star2 = problem.resample_inner(&orig, &star, &mut stream).unwrap();
        let t2 = problem.statistic_inner(&orig, &star, &star2).unwrap();
        assert!(t2.is_finite());
    }

    #[test]
    fn smoothed_bias_matches_direct_double_sum() {
        let n = 500;
        let y = fixed_design_y(n, |x| x * x + (5.0 * x).cos());
        let (problem, s) = NpProblem::new(y, cfg(1.0, 0.5)).unwrap();
        // Direct recomputation of B̂_{2,n} by explicit double summation.
        let nf = n as f64;
        let h = problem.bandwidth();
        let nh = nf * h;
        let k = |u: f64| KernelSpec::Epanechnikov.k(u);
        let xt = |t: usize| (t + 1) as f64 / nf;
        let mut b2 = 0.0;
        for t in 0..n {
            let kt = k((xt(t) - 0.5) / h);
            if kt == 0.0 {
                continue;
            }
            let mut smooth_grid_at_t = 0.0;
            for j in 0..n {
                smooth_grid_at_t += k((xt(j) - xt(t)) / h) * s.grid[j];
            }
            let b_at_t = nh.sqrt() * (smooth_grid_at_t / nh - s.grid[t]);
            b2 += kt * b_at_t;
        }
        b2 /= nh;
        assert!((b2 - s.b2_hat).abs() < 1e-10, "{b2} vs {}", s.b2_hat);
    }

    #[test]
    fn bias_correction_is_mean_zero_under_resampling() {
        // E*(B̂*_n) = B̂_{2,n} exactly (the starred grid's conditional mean is
        // the smoothed grid), so B̂*_n − B̂_{2,n} has bootstrap mean zero —
        // this is what makes the recentered inner statistic work.
        let n = 400;
        let y: Vec<f64> = {
            let mut stream = RngStream::from_seed(10);
            (1..=n)
                .map(|t| {
                    let x = t as f64 / n as f64;
                    x * x + 0.5 * rand::Rng::sample::<f64, _>(&mut stream, StandardNormal)
                })
                .collect()
        };
        let (problem, orig) = NpProblem::new(y, cfg(1.0, 0.5)).unwrap();
        let root = RngStream::from_seed(31);
        let b = 2000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for i in 0..b as u64 {
            let mut sb = root.split(i);
            let star = problem.resample(&orig, &mut sb).unwrap();
            let d = star.b_hat - orig.b2_hat;
            sum += d;
            sumsq += d * d;
        }
        let mean = sum / b as f64;
        let se = ((sumsq / b as f64 - mean * mean) / b as f64).sqrt();
        assert!(mean.abs() < 4.0 * se.max(1e-4), "mean {mean}, se {se}");
    }

    #[test]
    fn plugin_map_reuses_kernel_constant() {
        let y = fixed_design_y(200, |x| x);
        let (problem, s) = NpProblem::new(y, cfg(1.0, 0.5)).unwrap();
        let oracle = kernel_constants(KernelSpec::Epanechnikov, QuadScheme::AdaptiveSimpson)
            .unwrap()
            .m_np;
        match problem.plugin_map(&s).unwrap() {
            PrepivotMap::GaussianScale { m } => assert_eq!(m, oracle),
            other => panic!("unexpected map {other:?}"),
        }
    }

    #[test]
    fn empty_window_and_bad_configs_rejected() {
        let y = fixed_design_y(50, |x| x);
        // h = 0.01·50^{-1/5} ≈ 0.0046 < spacing 0.02: empty window.
        assert!(NpProblem::new(y.clone(), cfg(0.01, 0.505)).is_err());
        assert!(NpProblem::new(y.clone(), cfg(-1.0, 0.5)).is_err());
        assert!(NpProblem::new(y.clone(), cfg(1.0, 1.5)).is_err());
        // Boundary warning when the window spills outside (0,1).
        let (p, _) = NpProblem::new(y, cfg(1.0, 0.1)).unwrap();
        assert!(p.boundary_warning());
    }
}
