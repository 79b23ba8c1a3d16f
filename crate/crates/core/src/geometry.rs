//! Riemannian geometry of the coherent-state manifolds: overlaps, the ray
//! distance, the metric tensor and the curvature scalar, for the
//! Weyl-Heisenberg plane and the su(2) sphere.
//!
//! The metric is computed from the squared norm n(u) of the unnormalized
//! coherent state as g = d/du [ u n'(u)/n(u) ] at u = |z|^2; the curvature
//! is R = -(1/g) d_z d_zbar ln g. Closed forms are registered for the two
//! built-in manifolds; anything else is differentiated numerically.

use alloc::boxed::Box;
use alloc::format;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};

/// Squared norm n(u) = (zeta|| ||zeta) of the unnormalized coherent state as
/// a function of u = |zeta|^2, with n(0) = 1 and n > 0.
pub enum NormalizationFunction {
    /// Weyl-Heisenberg boson coherent states: n(u) = exp(u).
    WeylHeisenberg,
    /// su(2) coherent states of spin j: n(u) = (1 + u)^{2j}.
    Su2 { two_j: u32 },
    /// Any other normalization, differentiated by central finite differences.
    /// The evaluator must be smooth in a neighborhood of the working point
    /// (it is probed slightly below u as well).
    Numeric(Box<dyn Fn(f64) -> f64>),
}

impl NormalizationFunction {
    pub fn su2(j: f64) -> Result<Self> {
        let two_j = validate_spin(j)?;
        Ok(Self::Su2 { two_j })
    }

    pub fn evaluate(&self, u: f64) -> f64 {
        match self {
            Self::WeylHeisenberg => Float::exp(u),
            Self::Su2 { two_j } => Float::powi(1.0 + u, *two_j as i32),
            Self::Numeric(f) => f(u),
        }
    }
}

fn validate_spin(j: f64) -> Result<u32> {
    let two_j = 2.0 * j;
    let rounded = Float::round(two_j);
    if !(two_j > 0.0) || Float::abs(two_j - rounded) > 1e-9 || rounded < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "spin j = {j} is not a positive half-integer"
        )));
    }
    Ok(rounded as u32)
}

/// Overlap of two boson coherent states:
/// <a1|a2> = exp(-|a1|^2/2 - |a2|^2/2 + conj(a1) a2).
pub fn boson_overlap(a1: Complex64, a2: Complex64) -> Complex64 {
    let exponent = a1.conj() * a2 - 0.5 * (a1.norm_sqr() + a2.norm_sqr());
    exponent.exp()
}

/// ln |<a1|a2>| = -|a1 - a2|^2 / 2, exact and cancellation-free.
pub fn boson_log_overlap_mod(a1: Complex64, a2: Complex64) -> f64 {
    -0.5 * (a1 - a2).norm_sqr()
}

/// Overlap of two su(2) coherent states of spin j:
/// <z1|z2> = (1 + conj(z1) z2)^{2j} / ((1+|z1|^2)^j (1+|z2|^2)^j),
/// evaluated in log space to stay finite for large |z|.
pub fn su2_overlap(z1: Complex64, z2: Complex64, j: f64) -> Result<Complex64> {
    let two_j = validate_spin(j)? as f64;
    let w = Complex64::new(1.0, 0.0) + z1.conj() * z2;
    if w.norm_sqr() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let log = two_j * w.ln()
        - 0.5 * two_j * Complex64::new(Float::ln(1.0 + z1.norm_sqr()), 0.0)
        - 0.5 * two_j * Complex64::new(Float::ln(1.0 + z2.norm_sqr()), 0.0);
    Ok(log.exp())
}

/// ln |<z1|z2>| for su(2) coherent states, cancellation-free.
pub fn su2_log_overlap_mod(z1: Complex64, z2: Complex64, j: f64) -> Result<f64> {
    let two_j = validate_spin(j)? as f64;
    let w = Complex64::new(1.0, 0.0) + z1.conj() * z2;
    if w.norm_sqr() == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(0.5
        * two_j
        * (Float::ln(w.norm_sqr())
            - Float::ln(1.0 + z1.norm_sqr())
            - Float::ln(1.0 + z2.norm_sqr())))
}

/// Ray distance between two rays from the modulus of their overlap:
/// D = sqrt(2 - 2 |<z1|z2>|), in [0, sqrt(2)].
pub fn ray_distance(overlap_mod: f64) -> Result<f64> {
    // tolerate roundoff slightly outside [0, 1]
    if !(overlap_mod >= -1e-12 && overlap_mod <= 1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "overlap modulus {overlap_mod} outside [0, 1]"
        )));
    }
    let m = Float::min(Float::max(overlap_mod, 0.0), 1.0);
    Ok(Float::sqrt(2.0 - 2.0 * m))
}

/// Squared ray distance from the log of the overlap modulus; accurate for
/// nearby states where 1 - |<.|.>| underflows in direct evaluation.
pub fn ray_distance_sq_from_log(log_overlap_mod: f64) -> f64 {
    // 2 - 2 e^x = -2 expm1(x)
    -2.0 * Float::exp_m1(log_overlap_mod)
}

/// Metric tensor g at u = |z|^2. Closed forms: g = 1 for Weyl-Heisenberg,
/// g = 2j/(1+u)^2 for su(2); numeric normalizations use central differences
/// with step h = max(1e-5, 1e-5 u).
pub fn metric(n: &NormalizationFunction, z: Complex64) -> Result<f64> {
    let u = z.norm_sqr();
    let g = match n {
        NormalizationFunction::WeylHeisenberg => 1.0,
        NormalizationFunction::Su2 { two_j } => {
            let denom = 1.0 + u;
            *two_j as f64 / (denom * denom)
        }
        NormalizationFunction::Numeric(f) => {
            let h = Float::max(1e-5, 1e-5 * u);
            // G(u) = u n'(u)/n(u); g = G'(u)
            let big_g = |u: f64| -> f64 {
                let d = (f(u + h) - f(u - h)) / (2.0 * h);
                u * d / f(u)
            };
            (big_g(u + h) - big_g(u - h)) / (2.0 * h)
        }
    };
    if !(g > 0.0) || !g.is_finite() {
        return Err(Error::NumericalDegeneracy(format!(
            "metric evaluated to {g} at u = {u}"
        )));
    }
    Ok(g)
}

/// Curvature scalar R = -(1/g) d_z d_zbar ln g, via a five-point Laplacian
/// of ln g on the complex plane with relative step 1e-3.
pub fn curvature(n: &NormalizationFunction, z: Complex64) -> Result<f64> {
    let g0 = metric(n, z)?;
    let h = 1e-3 * Float::max(1.0, z.norm());
    let lng = |p: Complex64| -> Result<f64> { Ok(Float::ln(metric(n, p)?)) };
    let laplacian = (lng(z + Complex64::new(h, 0.0))?
        + lng(z - Complex64::new(h, 0.0))?
        + lng(z + Complex64::new(0.0, h))?
        + lng(z - Complex64::new(0.0, h))?
        - 4.0 * lng(z)?)
        / (h * h);
    // d_z d_zbar = (1/4) (d_xx + d_yy)
    Ok(-0.25 * laplacian / g0)
}

/// Symbols of the su(2) generators in the coherent state |z> of spin j.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2Symbols {
    /// <J_+> = 2j conj(z)/(1+|z|^2)
    pub jp: Complex64,
    /// <J_-> = 2j z/(1+|z|^2)
    pub jm: Complex64,
    /// <J_0> = -j (1-|z|^2)/(1+|z|^2)
    pub j0: f64,
    /// <J_- J_+> = (4j^2 |z|^2 + 2j)/(1+|z|^2)^2
    pub jmjp: f64,
}

pub fn su2_symbols(z: Complex64, j: f64) -> Result<Su2Symbols> {
    let two_j = validate_spin(j)? as f64;
    let j = two_j / 2.0;
    let u = z.norm_sqr();
    let denom = 1.0 + u;
    Ok(Su2Symbols {
        jp: two_j * z.conj() / denom,
        jm: two_j * z / denom,
        j0: -j * (1.0 - u) / denom,
        jmjp: (two_j * two_j * u + two_j) / (denom * denom),
    })
}
