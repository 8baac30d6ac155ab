//! Scaled cross-products over named column blocks, partial regression, and
//! OLS via orthogonal decomposition.
//!
//! Throughout, S_ab := a'b/n for column blocks a, b of the data matrix, and
//! the partial product S_ab.c := S_ab − S_ac S_cc⁻¹ S_cb.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::ops::Range;

/// Condition-number cap for inverting an S_cc block.
pub const CONDITION_CAP: f64 = 1e12;

/// Solve M X = RHS for symmetric PSD M, failing when M's condition number
/// exceeds [`CONDITION_CAP`]. `block` names the offending block in errors.
pub fn solve_capped(m: &DMatrix<f64>, rhs: &DMatrix<f64>, block: &str) -> Result<DMatrix<f64>> {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= 0.0 || smax / smin > CONDITION_CAP {
        return Err(Error::Rank {
            block: block.to_string(),
            detail: format!("condition number {:.3e} exceeds cap", if smin > 0.0 { smax / smin } else { f64::INFINITY }),
        });
    }
    svd.solve(rhs, 0.0).map_err(|e| Error::Numeric(e.to_string()))
}

/// Scaled cross-product table over named column blocks.
#[derive(Debug, Clone)]
pub struct CrossProducts {
    s: DMatrix<f64>,
    n: usize,
    blocks: Vec<(String, Range<usize>)>,
}

impl CrossProducts {
    /// Build from named column blocks, all with the same row count.
    pub fn from_blocks(blocks: &[(&str, &DMatrix<f64>)]) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Parameter("cross products need at least one block".into()));
        }
        let n = blocks[0].1.nrows();
        let mut cols = 0;
        for (name, b) in blocks {
            if b.nrows() != n {
                return Err(Error::Parameter(format!("block {name} has mismatched rows")));
            }
            cols += b.ncols();
        }
        let mut w = DMatrix::zeros(n, cols);
        let mut ranges = Vec::new();
        let mut at = 0;
        for (name, b) in blocks {
            w.view_mut((0, at), (n, b.ncols())).copy_from(*b);
            ranges.push((name.to_string(), at..at + b.ncols()));
            at += b.ncols();
        }
        let s = w.transpose() * &w / n as f64;
        Ok(CrossProducts { s, n, blocks: ranges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn range(&self, name: &str) -> Result<Range<usize>> {
        self.blocks
            .iter()
            .find(|(b, _)| b == name)
            .map(|(_, r)| r.clone())
            .ok_or_else(|| Error::Parameter(format!("unknown block {name}")))
    }

    /// S_ab for named blocks.
    pub fn cross(&self, a: &str, b: &str) -> Result<DMatrix<f64>> {
        let (ra, rb) = (self.range(a)?, self.range(b)?);
        Ok(self.s.view((ra.start, rb.start), (ra.len(), rb.len())).into_owned())
    }

    /// S_ab.c = S_ab − S_ac S_cc⁻¹ S_cb; with `c = None` just S_ab.
    pub fn partial(&self, a: &str, b: &str, c: Option<&str>) -> Result<DMatrix<f64>> {
        let s_ab = self.cross(a, b)?;
        let Some(c) = c else { return Ok(s_ab) };
        let rc = self.range(c)?;
        if rc.is_empty() {
            return Ok(s_ab);
        }
        let s_ac = self.cross(a, c)?;
        let s_cc = self.cross(c, c)?;
        let s_cb = self.cross(c, b)?;
        let solved = solve_capped(&s_cc, &s_cb, c)?;
        Ok(s_ab - s_ac * solved)
    }
}

/// Ordinary least squares fit.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coefficients: DVector<f64>,
    pub residuals: DVector<f64>,
    pub fitted: DVector<f64>,
    /// Residual variance with divisor n (plain average of squared residuals).
    pub sigma2: f64,
}

/// OLS of y on W via column-pivoted QR (no normal-equation inversion).
pub fn ols(y: &DVector<f64>, w: &DMatrix<f64>) -> Result<OlsFit> {
    let n = w.nrows();
    let k = w.ncols();
    if y.len() != n {
        return Err(Error::Parameter("ols: y and W row counts differ".into()));
    }
    if k == 0 || n < k {
        return Err(Error::Rank { block: "W".into(), detail: format!("{n} rows, {k} columns") });
    }
    let qr = w.clone().col_piv_qr();
    // Rank check on the R diagonal.
    let r = qr.r();
    let mut dmax = 0.0f64;
    let mut dmin = f64::INFINITY;
    for i in 0..k {
        let d = r[(i, i)].abs();
        dmax = dmax.max(d);
        dmin = dmin.min(d);
    }
    if dmin <= dmax * 1e-12 || dmax == 0.0 {
        return Err(Error::Rank {
            block: "W".into(),
            detail: "regressor matrix is rank deficient".into(),
        });
    }
    // Least squares via the thin factorization: W P = Q R, so the
    // coefficients solve R (Pᵀβ) = Qᵀy.
    let mut coefficients = qr.q().transpose() * y;
    if !r.solve_upper_triangular_mut(&mut coefficients) {
        return Err(Error::Rank { block: "W".into(), detail: "QR back-substitution failed".into() });
    }
    qr.p().inv_permute_rows(&mut coefficients);
    let fitted = w * &coefficients;
    let residuals = y - &fitted;
    let sigma2 = residuals.norm_squared() / n as f64;
    Ok(OlsFit { coefficients, residuals, fitted, sigma2 })
}

/// Column-wise demeaning (partials out a constant).
pub fn demean(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows() as f64;
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn randn(n: usize, k: usize, seed: u64) -> DMatrix<f64> {
        let mut s = RngStream::from_seed(seed);
        DMatrix::from_fn(n, k, |_, _| s.sample(StandardNormal))
    }

    #[test]
    fn partial_orthogonal_blocks_unchanged() {
        // Construct a, b exactly orthogonal to c in sample.
        let n = 50;
        let c = randn(n, 1, 1);
        let mut a = randn(n, 1, 2);
        let mut b = randn(n, 1, 3);
        // Project out c.
        let scale = |v: &DMatrix<f64>| (c.transpose() * v)[(0, 0)] / (c.transpose() * &c)[(0, 0)];
        let sa = scale(&a);
        let sb = scale(&b);
        a -= &c * sa;
        b -= &c * sb;
        let cp = CrossProducts::from_blocks(&[("a", &a), ("b", &b), ("c", &c)]).unwrap();
        let plain = cp.partial("a", "b", None).unwrap();
        let part = cp.partial("a", "b", Some("c")).unwrap();
        assert!((plain[(0, 0)] - part[(0, 0)]).abs() < 1e-12);
    }

    #[test]
    fn self_projection_annihilates() {
        let a = randn(40, 2, 7);
        let cp = CrossProducts::from_blocks(&[("a", &a)]).unwrap();
        let z = cp.partial("a", "a", Some("a")).unwrap();
        assert!(z.amax() < 1e-12);
    }

    #[test]
    fn partial_matches_residual_regression() {
        // Cross the residuals of a and b after regressing each on c.
        for seed in 0..20 {
            let n = 50;
            let a = randn(n, 1, 100 + seed);
            let b = randn(n, 2, 200 + seed);
            let c = randn(n, 2, 300 + seed);
            let cp = CrossProducts::from_blocks(&[("a", &a), ("b", &b), ("c", &c)]).unwrap();
            let part = cp.partial("a", "b", Some("c")).unwrap();
            let ea = {
                let fit = ols(&a.column(0).into_owned(), &c).unwrap();
                fit.residuals
            };
            let mut oracle = DMatrix::zeros(1, 2);
            for j in 0..2 {
                let fit = ols(&b.column(j).into_owned(), &c).unwrap();
                oracle[(0, j)] = ea.dot(&fit.residuals) / n as f64;
            }
            assert!((part - oracle).amax() < 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn singular_block_rejected() {
        let n = 30;
        let a = randn(n, 1, 5);
        let mut c = DMatrix::zeros(n, 2);
        let col = randn(n, 1, 6);
        c.set_column(0, &col.column(0));
        c.set_column(1, &(col.column(0) * 2.0)); // exactly collinear
        let cp = CrossProducts::from_blocks(&[("a", &a), ("c", &c)]).unwrap();
        match cp.partial("a", "a", Some("c")) {
            Err(Error::Rank { block, .. }) => assert_eq!(block, "c"),
            other => panic!("expected rank error, got {other:?}"),
        }
    }

    #[test]
    fn ols_exact_fit() {
        let w = randn(25, 3, 9);
        let beta = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let y = &w * &beta;
        let fit = ols(&y, &w).unwrap();
        assert!((fit.coefficients - beta).amax() < 1e-10);
        assert!(fit.residuals.amax() < 1e-10);
        assert!(fit.sigma2 < 1e-20);
    }

    #[test]
    fn ols_intercept_only() {
        let y = DVector::from_element(17, 2.0);
        let w = DMatrix::from_element(17, 1, 1.0);
        let fit = ols(&y, &w).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ols_residuals_orthogonal_and_optimal() {
        let n = 30;
        let w = randn(n, 3, 11);
        let mut s = RngStream::from_seed(12);
        let y = &w * DVector::from_vec(vec![0.3, 1.1, -0.7])
            + DVector::from_fn(n, |_, _| s.sample::<f64, _>(StandardNormal));
        let fit = ols(&y, &w).unwrap();
        // Orthogonality: |S_{w,resid}| tiny relative to problem scale.
        let cross = w.transpose() * &fit.residuals / n as f64;
        assert!(cross.amax() < 1e-10);
        // Local optimality: any coefficient perturbation increases SSR.
        let ssr = fit.residuals.norm_squared();
        for j in 0..3 {
            for d in [-1e-4, 1e-4] {
                let mut c = fit.coefficients.clone();
                c[j] += d;
                let r = &y - &w * &c;
                assert!(r.norm_squared() > ssr);
            }
        }
    }

    #[test]
    fn ols_rank_deficient_rejected() {
        let n = 20;
        let col = randn(n, 1, 14);
        let mut w = DMatrix::zeros(n, 2);
        w.set_column(0, &col.column(0));
        w.set_column(1, &(col.column(0) * 3.0));
        let y = randn(n, 1, 15).column(0).into_owned();
        assert!(matches!(ols(&y, &w), Err(Error::Rank { .. })));
    }

    #[test]
    fn demean_zero_mean() {
        let m = randn(31, 2, 21);
        let d = demean(&m);
        for col in d.column_iter() {
            assert!(col.sum().abs() / 31.0 < 1e-12);
        }
    }
}
