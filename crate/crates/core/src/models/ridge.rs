//! Ridge regression contrast: θ̃ = S̃_xx⁻¹S_xy with S̃_xx = S_xx + n⁻¹c_n I.
//!
//! The statistic is T_n = √n(g'θ̃ − r) with estimated shrinkage bias
//! B̂_n = −c_n n^{−1/2} g'S̃_xx⁻¹θ̂, θ̂ the OLS estimate. Bootstrap scheme:
//! pairs resampling of (y_t, x_t'), starred statistics centered at the OLS
//! estimate of the level below.

use crate::engine::{BootstrapProblem, PrepivotMap};
use crate::error::{Error, Result};
use crate::linalg::solve_capped;
use crate::rng::RngStream;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct RidgeConfig {
    pub c_n: f64,
    pub g: DVector<f64>,
    pub r: f64,
}

impl RidgeConfig {
    pub fn validate(&self, p: usize) -> Result<()> {
        if self.c_n < 0.0 || !self.c_n.is_finite() {
            return Err(Error::Parameter(format!("c_n must be >= 0, got {}", self.c_n)));
        }
        if self.g.len() != p {
            return Err(Error::Parameter(format!(
                "contrast g has {} entries for {p} regressors",
                self.g.len()
            )));
        }
        if self.g.norm() == 0.0 {
            return Err(Error::Parameter("contrast g must be nonzero".into()));
        }
        Ok(())
    }
}

/// One (possibly resampled) dataset together with its ridge and OLS fits.
#[derive(Debug, Clone)]
pub struct RidgeSample {
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    /// g'θ̃ for the ridge fit of this dataset.
    pub g_theta_tilde: f64,
    pub theta_tilde: DVector<f64>,
    pub theta_ols: DVector<f64>,
    /// B̂ = −c_n n^{−1/2} g'S̃_xx⁻¹θ̂ for this dataset.
    pub b_hat: f64,
}

#[derive(Debug, Clone)]
pub struct RidgeProblem {
    cfg: RidgeConfig,
    n: usize,
}

impl RidgeProblem {
    pub fn new(y: DVector<f64>, x: DMatrix<f64>, cfg: RidgeConfig) -> Result<(Self, RidgeSample)> {
        let n = y.len();
        let p = x.ncols();
        if x.nrows() != n {
            return Err(Error::Parameter("y and X must have matching rows".into()));
        }
        if n <= p {
            return Err(Error::Parameter(format!("need n > {p} observations, got {n}")));
        }
        cfg.validate(p)?;
        let problem = RidgeProblem { cfg, n };
        let sample = problem.fit(y, x)?;
        Ok((problem, sample))
    }

    pub fn config(&self) -> &RidgeConfig {
        &self.cfg
    }

    fn fit(&self, y: DVector<f64>, x: DMatrix<f64>) -> Result<RidgeSample> {
        let nf = self.n as f64;
        let p = x.ncols();
        let sxx = x.transpose() * &x / nf;
        let sxy = x.transpose() * &y / nf;
        // S̃ = S_xx + (c_n/n)·I; with c_n = 0 the matrix (and hence every
        // downstream solve) is bit-identical to the OLS path.
        let mut sxx_tilde = sxx.clone();
        for i in 0..p {
            sxx_tilde[(i, i)] += self.cfg.c_n / nf;
        }
        let rhs = DMatrix::from_column_slice(p, 1, sxy.as_slice());
        let theta_tilde = solve_capped(&sxx_tilde, &rhs, "S~xx")?.column(0).into_owned();
        let theta_ols = solve_capped(&sxx, &rhs, "Sxx")?.column(0).into_owned();
        let st_theta = solve_capped(
            &sxx_tilde,
            &DMatrix::from_column_slice(p, 1, theta_ols.as_slice()),
            "S~xx",
        )?
        .column(0)
        .into_owned();
        let b_hat = -self.cfg.c_n / nf.sqrt() * self.cfg.g.dot(&st_theta);
        Ok(RidgeSample {
            g_theta_tilde: self.cfg.g.dot(&theta_tilde),
            theta_tilde,
            theta_ols,
            b_hat,
            y,
            x,
        })
    }
}

impl BootstrapProblem for RidgeProblem {
    type Sample = RidgeSample;

    fn statistic(&self, s: &RidgeSample) -> Result<f64> {
        Ok((self.n as f64).sqrt() * (s.g_theta_tilde - self.cfg.r))
    }

    fn resample(&self, s: &RidgeSample, stream: &mut RngStream) -> Result<RidgeSample> {
        let p = s.x.ncols();
        let mut y = DVector::zeros(self.n);
        let mut x = DMatrix::zeros(self.n, p);
        for i in 0..self.n {
            let t = stream.index(self.n);
            y[i] = s.y[t];
            for j in 0..p {
                x[(i, j)] = s.x[(t, j)];
            }
        }
        self.fit(y, x)
    }

    fn statistic_star(&self, parent: &RidgeSample, star: &RidgeSample) -> Result<f64> {
        Ok((self.n as f64).sqrt()
            * (star.g_theta_tilde - self.cfg.g.dot(&parent.theta_ols)))
    }

    fn plugin_map(&self, s: &RidgeSample) -> Result<PrepivotMap> {
        Ok(PrepivotMap::GaussianScale { m: ridge_plugin_m(&s.x, &self.cfg)? })
    }

    fn bias_terms(&self, orig: &RidgeSample, star: &RidgeSample) -> Result<(f64, f64)> {
        Ok((orig.b_hat, star.b_hat))
    }
}

/// m̂² = (g'S̃⁻¹S_xxS̃⁻¹g)⁻¹ · g'S_xx⁻¹g, the ratio of the unshrunk to the
/// shrunk sampling scale of the contrast.
pub fn ridge_plugin_m(x: &DMatrix<f64>, cfg: &RidgeConfig) -> Result<f64> {
    let nf = x.nrows() as f64;
    let p = x.ncols();
    cfg.validate(p)?;
    let sxx = x.transpose() * x / nf;
    let mut sxx_tilde = sxx.clone();
    for i in 0..p {
        sxx_tilde[(i, i)] += cfg.c_n / nf;
    }
    let g_col = DMatrix::from_column_slice(p, 1, cfg.g.as_slice());
    let sg = solve_capped(&sxx, &g_col, "Sxx")?.column(0).into_owned();
    let stg = solve_capped(&sxx_tilde, &g_col, "S~xx")?.column(0).into_owned();
    let numer = cfg.g.dot(&sg);
    let denom = stg.dot(&(&sxx * &stg));
    if !(numer > 0.0) || !(denom > 0.0) {
        return Err(Error::Degenerate(format!(
            "contrast variance must be positive, got {numer}/{denom}"
        )));
    }
    Ok((numer / denom).sqrt())
}
