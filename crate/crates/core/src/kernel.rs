//! Second-order kernels on (−1, 1) and the constants that drive the
//! kernel-regression prepivot map.
//!
//! The scale ratio for the smoothed-statistic map is observable once the
//! kernel is chosen:
//!   m² = 4 + R_K⁻¹ ( ∫(K⋆K)(u)² du − 4 ∫K(u)(K⋆K)(u) du ),
//! with R_K = ∫K² and K⋆K the self-convolution (support (−2, 2)).

use crate::error::{Error, Result};
use crate::quad::{adaptive_simpson, gl_panels};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelSpec {
    Epanechnikov,
    Triangular,
    Quartic,
}

impl KernelSpec {
    pub fn k(&self, u: f64) -> f64 {
        if u.abs() >= 1.0 {
            return 0.0;
        }
        match self {
            KernelSpec::Epanechnikov => 0.75 * (1.0 - u * u),
            KernelSpec::Triangular => 1.0 - u.abs(),
            KernelSpec::Quartic => 0.9375 * (1.0 - u * u) * (1.0 - u * u),
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "epanechnikov" => Ok(KernelSpec::Epanechnikov),
            "triangular" => Ok(KernelSpec::Triangular),
            "quartic" => Ok(KernelSpec::Quartic),
            _ => Err(Error::Parameter(format!("unknown kernel {name}"))),
        }
    }
}

/// Which node scheme computes the integrals; two are kept so they can
/// cross-check each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadScheme {
    AdaptiveSimpson,
    GaussPanels,
}

#[derive(Debug, Clone, Copy)]
pub struct KernelConstants {
    pub r_k: f64,
    pub kappa2: f64,
    pub m2: f64,
    pub m_np: f64,
}

fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, scheme: QuadScheme) -> Result<f64> {
    match scheme {
        QuadScheme::AdaptiveSimpson => adaptive_simpson(f, a, b, 1e-11),
        QuadScheme::GaussPanels => Ok(gl_panels(f, a, b, 64, 20)),
    }
}

/// (K⋆K)(u) = ∫ K(s−u)K(s) ds over the overlap of the two supports.
/// The integrand is only piecewise smooth (e.g. the triangular kernel has a
/// kink at 0), so the range is split at every potential kink.
pub fn self_convolution(k: KernelSpec, u: f64, scheme: QuadScheme) -> Result<f64> {
    let lo = (-1.0f64).max(u - 1.0);
    let hi = 1.0f64.min(u + 1.0);
    if lo >= hi {
        return Ok(0.0);
    }
    let mut cuts = vec![lo, hi];
    for b in [0.0, u] {
        if b > lo && b < hi {
            cuts.push(b);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut total = 0.0;
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            total += integrate(|s| k.k(s - u) * k.k(s), w[0], w[1], scheme)?;
        }
    }
    Ok(total)
}

/// R_K, κ₂ and the observed map scale m for a kernel.
pub fn kernel_constants(k: KernelSpec, scheme: QuadScheme) -> Result<KernelConstants> {
    let r_k = integrate(|u| k.k(u) * k.k(u), -1.0, 1.0, scheme)?;
    let kappa2 = integrate(|u| u * u * k.k(u), -1.0, 1.0, scheme)?;
    if r_k <= 0.0 || kappa2 == 0.0 {
        return Err(Error::Parameter("kernel must have positive R_K and nonzero kappa2".into()));
    }
    let conv = |u: f64| self_convolution(k, u, scheme).unwrap_or(f64::NAN);
    let conv_sq = integrate(|u| conv(u) * conv(u), -2.0, 2.0, scheme)?;
    let cross = integrate(|u| k.k(u) * conv(u), -1.0, 1.0, scheme)?;
    let m2 = 4.0 + (conv_sq - 4.0 * cross) / r_k;
    if !(m2 > 0.0) || !m2.is_finite() {
        return Err(Error::Numeric(format!("kernel m^2 computation produced {m2}")));
    }
    Ok(KernelConstants { r_k, kappa2, m2, m_np: m2.sqrt() })
}
