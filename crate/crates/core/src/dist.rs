//! Probability distributions: accurate normal cdf/quantile and the error
//! distributions used by the Monte Carlo designs, all standardized to mean 0
//! and (where it exists) variance 1.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::stable;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal, StudentT};

/// erf(x) by W. J. Cody's rational approximations (three regimes), accurate
/// to close to machine precision.
pub fn erf(x: f64) -> f64 {
    1.0 - erfc(x)
}

pub fn erfc(x: f64) -> f64 {
    const ONE_OVER_SQRT_PI: f64 = 0.564_189_583_547_756_3;
    let ax = x.abs();
    let v = if ax < 0.46875 {
        // erf on the central interval, then complement.
        const A: [f64; 5] = [
            3.161_123_743_870_565_6e0,
            1.138_641_541_510_501_56e2,
            3.774_852_376_853_020_2e2,
            3.209_377_589_138_469_4e3,
            1.857_777_061_846_031_53e-1,
        ];
        const B: [f64; 4] = [
            2.360_129_095_234_412_09e1,
            2.440_246_379_344_441_73e2,
            1.282_616_526_077_372_3e3,
            2.844_236_833_439_170_6e3,
        ];
        let z = ax * ax;
        let num = ((((A[4] * z + A[0]) * z + A[1]) * z + A[2]) * z + A[3]) * x;
        let den = (((z + B[0]) * z + B[1]) * z + B[2]) * z + B[3];
        return 1.0 - num / den;
    } else if ax <= 4.0 {
        const C: [f64; 9] = [
            5.641_884_969_886_700_9e-1,
            8.883_149_794_388_375_9e0,
            6.611_919_063_714_162_9e1,
            2.986_351_381_974_001_3e2,
            8.819_522_212_417_69e2,
            1.712_047_612_634_070_6e3,
            2.051_078_377_826_071_5e3,
            1.230_339_354_797_997_2e3,
            2.153_115_354_744_038_3e-8,
        ];
        const D: [f64; 8] = [
            1.574_492_611_070_983_5e1,
            1.176_939_508_913_125e2,
            5.371_811_018_620_098_6e2,
            1.621_389_574_566_690_3e3,
            3.290_799_235_733_459_7e3,
            4.362_619_090_143_247e3,
            3.439_367_674_143_721_6e3,
            1.230_339_354_803_749_4e3,
        ];
        let mut num = C[8] * ax;
        let mut den = ax;
        for i in 0..7 {
            num = (num + C[i]) * ax;
            den = (den + D[i]) * ax;
        }
        exp_mx2(ax) * (num + C[7]) / (den + D[7])
    } else if ax >= 26.6 {
        0.0
    } else {
        const P: [f64; 6] = [
            3.053_266_349_612_323_4e-1,
            3.603_448_999_498_044_4e-1,
            1.257_817_261_112_292_45e-1,
            1.608_378_514_874_227_7e-2,
            6.587_491_615_298_378e-4,
            1.631_538_713_730_209_8e-2,
        ];
        const Q: [f64; 5] = [
            2.568_520_192_289_822_4e0,
            1.872_952_849_923_460_4e0,
            5.279_051_029_514_284e-1,
            6.051_834_131_244_131_9e-2,
            2.335_204_976_268_691_8e-3,
        ];
        let z = 1.0 / (ax * ax);
        let mut num = P[5] * z;
        let mut den = z;
        for i in 0..4 {
            num = (num + P[i]) * z;
            den = (den + Q[i]) * z;
        }
        let r = z * (num + P[4]) / (den + Q[4]);
        exp_mx2(ax) * (ONE_OVER_SQRT_PI - r) / ax
    };
    if x < 0.0 {
        2.0 - v
    } else {
        v
    }
}

/// exp(-x²) computed with reduced cancellation for large x.
fn exp_mx2(x: f64) -> f64 {
    // Split x = hi + lo with hi on a 1/16 grid so hi² is exact.
    let hi = (x * 16.0).floor() / 16.0;
    let lo = x - hi;
    (-hi * hi).exp() * (-(2.0 * hi + lo) * lo).exp()
}

/// Standard normal cdf.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile: Acklam's rational approximation refined by two
/// Halley steps against the accurate cdf, giving near machine precision.
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "normal_quantile requires p in (0,1), got {p}");
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239e0,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838e0,
        -2.549_732_539_343_734e0,
        4.374_664_141_464_968e0,
        2.938_163_982_698_783e0,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996e0,
        3.754_408_661_907_416e0,
    ];
    const P_LOW: f64 = 0.02425;
    let mut x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    for _ in 0..2 {
        let e = normal_cdf(x) - p;
        let d = normal_pdf(x);
        if d <= 0.0 {
            break;
        }
        // Halley step.
        let u = e / d;
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

/// Error distributions used by the simulation designs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionSpec {
    StandardNormal,
    /// Student t(df) divided by its standard deviation (requires df > 2).
    StudentT { df: f64 },
    /// (χ²(df) − df)/√(2df).
    StandardizedChiSquare { df: f64 },
    /// Symmetric stable with tail index α ∈ (1, 2] and scale multiplier.
    SymmetricStable { alpha: f64, scale: f64 },
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DistributionSpec::StandardNormal => Ok(()),
            DistributionSpec::StudentT { df } => {
                if df > 2.0 {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!(
                        "student-t requires df > 2 for unit standardization, got {df}"
                    )))
                }
            }
            DistributionSpec::StandardizedChiSquare { df } => {
                if df > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!("chi-square requires df > 0, got {df}")))
                }
            }
            DistributionSpec::SymmetricStable { alpha, scale } => {
                if !(1.0 < alpha && alpha <= 2.0) {
                    Err(Error::Parameter(format!("stable requires alpha in (1,2], got {alpha}")))
                } else if scale <= 0.0 {
                    Err(Error::Parameter(format!("stable scale must be positive, got {scale}")))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn sample_one(&self, stream: &mut RngStream) -> f64 {
        match *self {
            DistributionSpec::StandardNormal => stream.sample(StandardNormal),
            DistributionSpec::StudentT { df } => {
                let t: f64 = StudentT::new(df).unwrap().sample(stream);
                t / (df / (df - 2.0)).sqrt()
            }
            DistributionSpec::StandardizedChiSquare { df } => {
                let c: f64 = ChiSquared::new(df).unwrap().sample(stream);
                (c - df) / (2.0 * df).sqrt()
            }
            DistributionSpec::SymmetricStable { alpha, scale } => {
                scale * stable::sample_one(alpha, stream)
            }
        }
    }
}

/// `n` i.i.d. draws from `spec`.
pub fn sample(spec: DistributionSpec, n: usize, stream: &mut RngStream) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Parameter("sample requires n >= 1".into()));
    }
    spec.validate()?;
    Ok((0..n).map(|_| spec.sample_one(stream)).collect())
}
