//! Kolmogorov–Smirnov tests: one-sample against U[0,1] and two-sample.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct KsReport {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov's limiting tail probability Q(λ) = P(sup|B(t)| > λ),
/// Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} exp(−2k²λ²), with the dual theta series for
/// small λ where that sum converges slowly.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-transformed series: Q = 1 − (√(2π)/λ) Σ exp(−(2k−1)²π²/(8λ²)).
        let t = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let mut s = 0.0;
        for k in 1..=20u32 {
            let odd = (2 * k - 1) as f64;
            let term = (-odd * odd * t).exp();
            s += term;
            if term < 1e-18 {
                break;
            }
        }
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        for k in 1..=100u32 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            s += if k % 2 == 1 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// One-sample KS test of `sample` against U[0,1] with the asymptotic p-value.
pub fn ks_uniform(sample: &[f64]) -> Result<KsReport> {
    if sample.len() < 10 {
        return Err(Error::Parameter(format!(
            "ks_uniform needs at least 10 observations, got {}",
            sample.len()
        )));
    }
    if sample.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::Domain("ks_uniform requires entries in [0,1]".into()));
    }
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (i, &u) in s.iter().enumerate() {
        let hi = (i + 1) as f64 / n - u;
        let lo = u - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    Ok(KsReport { statistic: d, p_value: kolmogorov_q(n.sqrt() * d) })
}

/// Two-sample KS test with the asymptotic p-value at effective size
/// n₁n₂/(n₁+n₂).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsReport> {
    if a.len() < 10 || b.len() < 10 {
        return Err(Error::Parameter("ks_two_sample needs at least 10 observations each".into()));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (sa.len(), sb.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < na && j < nb {
        let xa = sa[i];
        let xb = sb[j];
        let x = xa.min(xb);
        while i < na && sa[i] <= x {
            i += 1;
        }
        while j < nb && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na as f64 * nb as f64) / (na as f64 + nb as f64);
    Ok(KsReport { statistic: d, p_value: kolmogorov_q(ne.sqrt() * d) })
}
