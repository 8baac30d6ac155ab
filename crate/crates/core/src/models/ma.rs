//! Inference after model averaging: y = xβ + Zδ + ε, with the averaged
//! estimator β̃ = Σ_m ω_m β̃_{m}, β̃_m from the submodel regressing y on x and
//! the selected columns Z_m = Z R_m.
//!
//! The statistic is T_n = √n(β̃ − β̄) with estimated (non-vanishing) bias
//! B̂_n = Q_n √n δ̂, Q_n = Σ_m ω_m S_{xx.Z_m}⁻¹ S_{xZ.Z_m}. Bootstrap schemes:
//! fixed-regressor (parametric or residual errors) and pairs.

use crate::engine::{BootstrapProblem, PrepivotMap};
use crate::error::{Error, Result};
use crate::linalg::{demean, ols, solve_capped};
use crate::rng::RngStream;
use nalgebra::{DMatrix, DVector, RowDVector};
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaScheme {
    FrbParametric,
    FrbResidual,
    Pairs,
}

impl MaScheme {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "frb-parametric" => Ok(MaScheme::FrbParametric),
            "frb-residual" => Ok(MaScheme::FrbResidual),
            "pairs" => Ok(MaScheme::Pairs),
            _ => Err(Error::Parameter(format!("unknown model-averaging scheme {s}"))),
        }
    }
}

/// Error scale for the parametric fixed-regressor scheme, used at both
/// bootstrap levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaMode {
    /// ε* ~ N(0, σ̂²) with σ̂² refitted at each level.
    Estimated,
    /// ε* ~ N(0, σ²) with a fixed known variance.
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct MaConfig {
    pub weights: Vec<f64>,
    /// Column indices of Z entering each submodel (empty = short model).
    pub selectors: Vec<Vec<usize>>,
    pub scheme: MaScheme,
    pub include_intercept: bool,
    pub null_value: f64,
    pub sigma_mode: SigmaMode,
}

impl MaConfig {
    pub fn validate(&self, q: usize) -> Result<()> {
        if self.weights.len() != self.selectors.len() || self.weights.is_empty() {
            return Err(Error::Parameter("weights and selectors must pair up".into()));
        }
        let sum: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|&w| !(0.0..=1.0).contains(&w)) || (sum - 1.0).abs() > 1e-10 {
            return Err(Error::Parameter("weights must lie in [0,1] and sum to 1".into()));
        }
        for sel in &self.selectors {
            let mut seen = vec![false; q];
            for &j in sel {
                if j >= q || seen[j] {
                    return Err(Error::Parameter(format!(
                        "selector column {j} out of range or repeated (q = {q})"
                    )));
                }
                seen[j] = true;
            }
        }
        if let SigmaMode::Fixed(v) = self.sigma_mode {
            if v < 0.0 {
                return Err(Error::Parameter("fixed error variance must be >= 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MaData {
    pub y: DVector<f64>,
    pub x: DVector<f64>,
    pub z: DMatrix<f64>,
}

/// Fitted quantities for one (possibly resampled) dataset.
#[derive(Debug, Clone)]
pub struct MaFit {
    pub beta_tilde: f64,
    pub beta_hat: f64,
    pub delta_hat: DVector<f64>,
    pub sigma2: f64,
    /// Full-model fitted values on the demeaned scale.
    pub fitted: DVector<f64>,
    pub resid_centered: DVector<f64>,
    pub q_n: RowDVector<f64>,
}

#[derive(Debug, Clone)]
pub struct MaSample {
    pub y: DVector<f64>,
    pub x: DVector<f64>,
    pub z: DMatrix<f64>,
    pub fit: MaFit,
}

/// Fixed-regressor fast path: with the design held fixed, every starred
/// estimate is a linear map of y*, so the per-resample cost is a handful of
/// dot products.
#[derive(Debug, Clone)]
struct FrbProjections {
    /// Demeaned (x, Z).
    w: DMatrix<f64>,
    /// β̃ = a'·(demeaned y); this is the row vector A_n.
    a_row: DVector<f64>,
    /// Full-model coefficients = C·(demeaned y).
    c_rows: DMatrix<f64>,
    q_n: RowDVector<f64>,
}

#[derive(Debug, Clone)]
pub struct MaProblem {
    cfg: MaConfig,
    n: usize,
    frb: Option<FrbProjections>,
}

fn maybe_demean_vec(v: &DVector<f64>, demean_it: bool) -> DVector<f64> {
    if demean_it {
        v.add_scalar(-v.mean())
    } else {
        v.clone()
    }
}

fn maybe_demean_mat(m: &DMatrix<f64>, demean_it: bool) -> DMatrix<f64> {
    if demean_it {
        demean(m)
    } else {
        m.clone()
    }
}

/// Scaled cross-products for one dataset, demeaned per the config.
struct Crosses {
    sxx: f64,
    sxz: RowDVector<f64>,
    szz: DMatrix<f64>,
    sxy: f64,
    szy: DVector<f64>,
}

fn crosses(yd: &DVector<f64>, xd: &DVector<f64>, zd: &DMatrix<f64>) -> Crosses {
    let nf = yd.len() as f64;
    Crosses {
        sxx: xd.dot(xd) / nf,
        sxz: (xd.transpose() * zd) / nf,
        szz: (zd.transpose() * zd) / nf,
        sxy: xd.dot(yd) / nf,
        szy: (zd.transpose() * yd) / nf,
    }
}

/// Select the submodel pieces for one selector: S_{Z_m Z_m}, S_{x Z_m}
/// (as a column), S_{Z_m y}, and the full-width rows S_{Z_m Z}.
fn submodel_blocks(
    c: &Crosses,
    sel: &[usize],
) -> (DMatrix<f64>, DVector<f64>, DVector<f64>, DMatrix<f64>) {
    let k = sel.len();
    let q = c.szz.ncols();
    let szmzm = DMatrix::from_fn(k, k, |i, j| c.szz[(sel[i], sel[j])]);
    let sxzm = DVector::from_fn(k, |i, _| c.sxz[sel[i]]);
    let szmy = DVector::from_fn(k, |i, _| c.szy[sel[i]]);
    let szmz = DMatrix::from_fn(k, q, |i, j| c.szz[(sel[i], j)]);
    (szmzm, sxzm, szmy, szmz)
}

/// Per-submodel partial cross-products: (S_{xx.Z_m}, S_{xy.Z_m}, S_{xZ.Z_m}).
fn submodel_partials(c: &Crosses, sel: &[usize], m: usize) -> Result<(f64, f64, RowDVector<f64>)> {
    if sel.is_empty() {
        return Ok((c.sxx, c.sxy, c.sxz.clone()));
    }
    let (szmzm, sxzm, szmy, szmz) = submodel_blocks(c, sel);
    let block = format!("Z_m{m}");
    let sol_x = solve_capped(&szmzm, &DMatrix::from_column_slice(sel.len(), 1, sxzm.as_slice()), &block)?;
    let sol_y = solve_capped(&szmzm, &DMatrix::from_column_slice(sel.len(), 1, szmy.as_slice()), &block)?;
    let sol_z = solve_capped(&szmzm, &szmz, &block)?;
    let sxx_zm = c.sxx - sxzm.dot(&sol_x.column(0).into_owned());
    let sxy_zm = c.sxy - sxzm.dot(&sol_y.column(0).into_owned());
    let sxz_zm = &c.sxz - sxzm.transpose() * sol_z;
    if !(sxx_zm > 0.0) || sxx_zm < c.sxx * 1e-12 {
        return Err(Error::Rank {
            block,
            detail: format!("S_xx.Zm = {sxx_zm} is numerically singular"),
        });
    }
    Ok((sxx_zm, sxy_zm, sxz_zm))
}

/// Full fit of one dataset by direct cross-products plus full-model OLS.
fn fit_direct(
    y: &DVector<f64>,
    x: &DVector<f64>,
    z: &DMatrix<f64>,
    cfg: &MaConfig,
) -> Result<MaFit> {
    let n = y.len();
    let nf = n as f64;
    let yd = maybe_demean_vec(y, cfg.include_intercept);
    let xd = maybe_demean_vec(x, cfg.include_intercept);
    let zd = maybe_demean_mat(z, cfg.include_intercept);
    let c = crosses(&yd, &xd, &zd);
    let q = z.ncols();

    let mut beta_tilde = 0.0;
    let mut q_n = RowDVector::zeros(q);
    for (m, (w, sel)) in cfg.weights.iter().zip(&cfg.selectors).enumerate() {
        let (sxx_zm, sxy_zm, sxz_zm) = submodel_partials(&c, sel, m)?;
        beta_tilde += w * sxy_zm / sxx_zm;
        q_n += sxz_zm * (w / sxx_zm);
    }

    let mut w_full = DMatrix::zeros(n, 1 + q);
    w_full.set_column(0, &xd);
    w_full.view_mut((0, 1), (n, q)).copy_from(&zd);
    let full = ols(&yd, &w_full)?;
    let beta_hat = full.coefficients[0];
    let delta_hat = full.coefficients.rows(1, q).into_owned();
    let rbar = full.residuals.mean();
    let resid_centered = full.residuals.add_scalar(-rbar);
    let _ = nf;
    Ok(MaFit {
        beta_tilde,
        beta_hat,
        delta_hat,
        sigma2: full.sigma2,
        fitted: full.fitted,
        resid_centered,
        q_n,
    })
}

impl MaProblem {
    /// Build the problem and the fitted original sample.
    pub fn new(data: MaData, cfg: MaConfig) -> Result<(Self, MaSample)> {
        let n = data.y.len();
        let q = data.z.ncols();
        if data.x.len() != n || data.z.nrows() != n {
            return Err(Error::Parameter("y, x and Z must have matching rows".into()));
        }
        let k = 1 + q + usize::from(cfg.include_intercept);
        if n <= k {
            return Err(Error::Parameter(format!("need n > {k} observations, got {n}")));
        }
        cfg.validate(q)?;
        let frb = if cfg.scheme == MaScheme::Pairs {
            None
        } else {
            Some(Self::build_projections(&data, &cfg)?)
        };
        let problem = MaProblem { cfg, n, frb };
        let fit = match &problem.frb {
            Some(p) => problem.fit_frb(p, &data.y),
            None => fit_direct(&data.y, &data.x, &data.z, &problem.cfg)?,
        };
        let sample = MaSample { y: data.y, x: data.x, z: data.z, fit };
        Ok((problem, sample))
    }

    pub fn config(&self) -> &MaConfig {
        &self.cfg
    }

    fn build_projections(data: &MaData, cfg: &MaConfig) -> Result<FrbProjections> {
        let n = data.y.len();
        let nf = n as f64;
        let q = data.z.ncols();
        let xd = maybe_demean_vec(&data.x, cfg.include_intercept);
        let zd = maybe_demean_mat(&data.z, cfg.include_intercept);
        let yd = maybe_demean_vec(&data.y, cfg.include_intercept);
        let c = crosses(&yd, &xd, &zd);

        let mut a_row = DVector::zeros(n);
        let mut q_n = RowDVector::zeros(q);
        for (m, (w, sel)) in cfg.weights.iter().zip(&cfg.selectors).enumerate() {
            // Residual of x on Z_m gives the row of the annihilator product.
            let x_resid = if sel.is_empty() {
                xd.clone()
            } else {
                let zm = DMatrix::from_fn(n, sel.len(), |i, j| zd[(i, sel[j])]);
                ols(&xd, &zm)
                    .map_err(|_| Error::Rank {
                        block: format!("Z_m{m}"),
                        detail: "submodel regressors are rank deficient".into(),
                    })?
                    .residuals
            };
            let sxx_zm = x_resid.dot(&x_resid) / nf;
            if !(sxx_zm > 0.0) || sxx_zm < c.sxx * 1e-12 {
                return Err(Error::Rank {
                    block: format!("Z_m{m}"),
                    detail: format!("S_xx.Zm = {sxx_zm} is numerically singular"),
                });
            }
            a_row += &x_resid * (w / (nf * sxx_zm));
            let (_, _, sxz_zm) = submodel_partials(&c, sel, m)?;
            q_n += sxz_zm * (w / sxx_zm);
        }

        let mut w_full = DMatrix::zeros(n, 1 + q);
        w_full.set_column(0, &xd);
        w_full.view_mut((0, 1), (n, q)).copy_from(&zd);
        let wtw = w_full.transpose() * &w_full;
        let c_rows = solve_capped(&wtw, &w_full.transpose(), "W")?;
        Ok(FrbProjections { w: w_full, a_row, c_rows, q_n })
    }

    /// Fit a fixed-regressor sample through the precomputed projections.
    fn fit_frb(&self, p: &FrbProjections, y: &DVector<f64>) -> MaFit {
        let yd = maybe_demean_vec(y, self.cfg.include_intercept);
        let gamma = &p.c_rows * &yd;
        let beta_tilde = p.a_row.dot(&yd);
        let fitted = &p.w * &gamma;
        let residuals = &yd - &fitted;
        let sigma2 = residuals.norm_squared() / self.n as f64;
        let rbar = residuals.mean();
        MaFit {
            beta_tilde,
            beta_hat: gamma[0],
            delta_hat: gamma.rows(1, gamma.len() - 1).into_owned(),
            sigma2,
            fitted,
            resid_centered: residuals.add_scalar(-rbar),
            q_n: p.q_n.clone(),
        }
    }

    fn frb_sample(&self, parent: &MaSample, y_star: DVector<f64>) -> MaSample {
        let p = self.frb.as_ref().expect("FRB projections present for FRB schemes");
        let fit = self.fit_frb(p, &y_star);
        MaSample { y: y_star, x: parent.x.clone(), z: parent.z.clone(), fit }
    }
}

impl BootstrapProblem for MaProblem {
    type Sample = MaSample;

    fn statistic(&self, s: &MaSample) -> Result<f64> {
        Ok((self.n as f64).sqrt() * (s.fit.beta_tilde - self.cfg.null_value))
    }

    fn resample(&self, s: &MaSample, stream: &mut RngStream) -> Result<MaSample> {
        match self.cfg.scheme {
            MaScheme::FrbParametric => {
                let sd = match self.cfg.sigma_mode {
                    SigmaMode::Estimated => s.fit.sigma2.sqrt(),
                    SigmaMode::Fixed(v) => v.sqrt(),
                };
                let y_star = DVector::from_fn(self.n, |i, _| {
                    let e: f64 = rand::Rng::sample(stream, StandardNormal);
                    s.fit.fitted[i] + sd * e
                });
                Ok(self.frb_sample(s, y_star))
            }
            MaScheme::FrbResidual => {
                let pool = &s.fit.resid_centered;
                let y_star = DVector::from_fn(self.n, |i, _| {
                    s.fit.fitted[i] + pool[stream.index(self.n)]
                });
                Ok(self.frb_sample(s, y_star))
            }
            MaScheme::Pairs => {
                let q = s.z.ncols();
                let mut y = DVector::zeros(self.n);
                let mut x = DVector::zeros(self.n);
                let mut z = DMatrix::zeros(self.n, q);
                for i in 0..self.n {
                    let t = stream.index(self.n);
                    y[i] = s.y[t];
                    x[i] = s.x[t];
                    for j in 0..q {
                        z[(i, j)] = s.z[(t, j)];
                    }
                }
                let fit = fit_direct(&y, &x, &z, &self.cfg)?;
                Ok(MaSample { y, x, z, fit })
            }
        }
    }

    fn statistic_star(&self, parent: &MaSample, star: &MaSample) -> Result<f64> {
        Ok((self.n as f64).sqrt() * (star.fit.beta_tilde - parent.fit.beta_hat))
    }

    fn plugin_map(&self, s: &MaSample) -> Result<PrepivotMap> {
        let aux = ma_auxiliaries(&s.y, &s.x, &s.z, &self.cfg)?;
        Ok(PrepivotMap::GaussianScale { m: aux.m_hat })
    }

    fn bias_terms(&self, orig: &MaSample, star: &MaSample) -> Result<(f64, f64)> {
        let root_n = (self.n as f64).sqrt();
        let b = |f: &MaFit| root_n * (&f.q_n * &f.delta_hat)[0];
        Ok((b(&orig.fit), b(&star.fit)))
    }
}

/// The plug-in map ingredients: Q_n, the projection row A_n, the direction
/// vectors d̄ and b̄, the 2×2 variance matrix V̂, and the scale ratio m̂.
#[derive(Debug, Clone)]
pub struct MaAuxiliaries {
    pub q_n: RowDVector<f64>,
    pub a_row: DVector<f64>,
    pub d_bar: DVector<f64>,
    pub b_bar: DVector<f64>,
    pub sigma2: f64,
    pub v11: f64,
    pub v22: f64,
    pub v12: f64,
    pub v_d2: f64,
    /// Extra bootstrap variance under pairs resampling (None for FRB).
    pub kappa2: Option<f64>,
    pub m_hat: f64,
}

/// Build d̄, b̄, V̂ = σ̂²·[d̄'S_WW d̄, d̄'S_WW b̄; ·, b̄'S_WW b̄] and
/// m̂ = √(v̂_d²/v̂₁₁) (FRB) or √(v̂_d²/(v̂₁₁+κ̂²)) (pairs).
pub fn ma_auxiliaries(
    y: &DVector<f64>,
    x: &DVector<f64>,
    z: &DMatrix<f64>,
    cfg: &MaConfig,
) -> Result<MaAuxiliaries> {
    let n = y.len();
    let nf = n as f64;
    let q = z.ncols();
    cfg.validate(q)?;
    let yd = maybe_demean_vec(y, cfg.include_intercept);
    let xd = maybe_demean_vec(x, cfg.include_intercept);
    let zd = maybe_demean_mat(z, cfg.include_intercept);
    let c = crosses(&yd, &xd, &zd);

    // S_ZZ.x, shared across submodels for the b̄ direction.
    let szz_x = &c.szz - c.sxz.transpose() * &c.sxz / c.sxx;

    let mut d_bar = DVector::zeros(1 + q);
    let mut b_bar = DVector::zeros(1 + q);
    let mut q_n = RowDVector::zeros(q);
    let mut a_row = DVector::zeros(n);
    for (m, (w, sel)) in cfg.weights.iter().zip(&cfg.selectors).enumerate() {
        let (sxx_zm, _, sxz_zm) = submodel_partials(&c, sel, m)?;
        let scale = w / sxx_zm;
        q_n += &sxz_zm * scale;

        // d̂_m = (1, −S_xZm S_ZmZm⁻¹ R_m')'.
        let mut d_m = DVector::zeros(1 + q);
        d_m[0] = 1.0;
        if !sel.is_empty() {
            let (szmzm, sxzm, _, _) = submodel_blocks(&c, sel);
            let block = format!("Z_m{m}");
            let sol =
                solve_capped(&szmzm, &DMatrix::from_column_slice(sel.len(), 1, sxzm.as_slice()), &block)?;
            for (i, &j) in sel.iter().enumerate() {
                d_m[1 + j] = -sol[(i, 0)];
            }
        }
        d_bar += d_m * scale;

        // b̂_m' = S_xZ.Zm S_ZZ.x⁻¹ (−S_Zx/S_xx, I_q).
        let sol = solve_capped(&szz_x, &DMatrix::from_column_slice(q, 1, sxz_zm.transpose().as_slice()), "Z.x")?;
        let alpha = sol.column(0).into_owned();
        let mut b_m = DVector::zeros(1 + q);
        b_m[0] = -alpha.dot(&c.sxz.transpose()) / c.sxx;
        for j in 0..q {
            b_m[1 + j] = alpha[j];
        }
        b_bar += b_m * scale;

        // Row of A_n for the same submodel.
        let x_resid = if sel.is_empty() {
            xd.clone()
        } else {
            let zm = DMatrix::from_fn(n, sel.len(), |i, j| zd[(i, sel[j])]);
            ols(&xd, &zm)?.residuals
        };
        a_row += &x_resid * (w / (nf * sxx_zm));
    }

    // σ̂² from the full model.
    let mut w_full = DMatrix::zeros(n, 1 + q);
    w_full.set_column(0, &xd);
    w_full.view_mut((0, 1), (n, q)).copy_from(&zd);
    let full = ols(&yd, &w_full)?;
    let sigma2 = full.sigma2;

    let sww = w_full.transpose() * &w_full / nf;
    let sd = &sww * &d_bar;
    let sb = &sww * &b_bar;
    let v11 = sigma2 * d_bar.dot(&sd);
    let v22 = sigma2 * b_bar.dot(&sb);
    let v12 = sigma2 * d_bar.dot(&sb);
    let v_d2 = v11 + v22 - 2.0 * v12;
    if !(v11 > 0.0) {
        return Err(Error::Degenerate(format!("v11 = {v11} must be positive")));
    }
    if !(v_d2 > 0.0) {
        return Err(Error::Degenerate(format!("v_d^2 = {v_d2} must be positive")));
    }

    let (kappa2, denom) = if cfg.scheme == MaScheme::Pairs {
        let (k2, _) = ma_pairs_plugin(y, x, z, cfg)?;
        (Some(k2), v11 + k2)
    } else {
        (None, v11)
    };
    Ok(MaAuxiliaries {
        q_n,
        a_row,
        d_bar,
        b_bar,
        sigma2,
        v11,
        v22,
        v12,
        v_d2,
        kappa2,
        m_hat: (v_d2 / denom).sqrt(),
    })
}

/// Extra pairs-bootstrap variance for the analyzed case (scalar z, a single
/// short submodel): κ̂² = d_r(δ̂)'Σ̂_r d_r(δ̂) with d_r(δ) = δ(S_xx⁻¹, −S_xx⁻²S_xz)'
/// paired with (x_t z_t, x_t²), and Σ̂_r the centered second-moment matrix
/// n⁻¹Σ u_t u_t', u_t = (x_t z_t − S_xz, x_t² − S_xx)' — the variance of the
/// resampled cross-products that drives the extra bootstrap spread.
/// Returns (κ̂², v̂_s²).
pub fn ma_pairs_plugin(
    y: &DVector<f64>,
    x: &DVector<f64>,
    z: &DMatrix<f64>,
    cfg: &MaConfig,
) -> Result<(f64, f64)> {
    let q = z.ncols();
    if q != 1 || cfg.selectors.len() != 1 || !cfg.selectors[0].is_empty() {
        return Err(Error::Capability(
            "pairs plug-in requires scalar z with a single short submodel".into(),
        ));
    }
    let n = y.len();
    let nf = n as f64;
    let yd = maybe_demean_vec(y, cfg.include_intercept);
    let xd = maybe_demean_vec(x, cfg.include_intercept);
    let zd = maybe_demean_mat(z, cfg.include_intercept);
    let sxx = xd.dot(&xd) / nf;
    let sxz = xd.dot(&zd.column(0)) / nf;
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("S_xx must be positive".into()));
    }

    // δ̂ and σ̂² from the full model.
    let mut w_full = DMatrix::zeros(n, 2);
    w_full.set_column(0, &xd);
    w_full.set_column(1, &zd.column(0));
    let full = ols(&yd, &w_full)?;
    let delta_hat = full.coefficients[1];

    let mut sr = [[0.0f64; 2]; 2];
    for t in 0..n {
        let u = [xd[t] * zd[(t, 0)] - sxz, xd[t] * xd[t] - sxx];
        for i in 0..2 {
            for j in 0..2 {
                sr[i][j] += u[i] * u[j];
            }
        }
    }
    for row in sr.iter_mut() {
        for v in row.iter_mut() {
            *v /= nf;
        }
    }
    let d = [delta_hat / sxx, -delta_hat * sxz / (sxx * sxx)];
    let kappa2 = d[0] * (sr[0][0] * d[0] + sr[0][1] * d[1])
        + d[1] * (sr[1][0] * d[0] + sr[1][1] * d[1]);
    let v11 = full.sigma2 / sxx;
    Ok((kappa2, v11 + kappa2))
}
