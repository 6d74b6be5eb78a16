//! Two-ray generalized arcsine (Lamperti) density and CDF in closed form.
//!
//! For `alpha, beta1 in (0,1)` and `beta2 = 1 - beta1`, the law of
//! `xi_1 / (xi_1 + xi_2)` has density
//!
//! ```text
//! sin(pi alpha)/pi * beta1 beta2 y^(alpha-1) (1-y)^(alpha-1)
//!   / [beta1^2 (1-y)^(2 alpha) + beta2^2 y^(2 alpha)
//!      + 2 beta1 beta2 y^alpha (1-y)^alpha cos(pi alpha)]
//! ```
//!
//! and CDF `(1/(pi alpha)) arccot[ beta1 (1-y)^alpha / (beta2 y^alpha sin(pi alpha))
//! + cot(pi alpha) ]`, with arccot valued in `(0, pi)` so the CDF is
//! continuous and increasing. `alpha = beta1 = 1/2` reduces to
//! `(2/pi) arcsin sqrt(y)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

fn check_params(alpha: f64, beta1: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if !(beta1 > 0.0 && beta1 < 1.0) {
        return Err(Error::param(format!("beta1 must lie in (0,1), got {beta1}")));
    }
    Ok(())
}

/// arccot with range (0, pi).
#[inline]
fn arccot(x: f64) -> f64 {
    f64::atan2(1.0, x)
}

/// Density at `y in (0,1)`. Endpoints are rejected: the density diverges
/// there for `alpha < 1`.
pub fn lamperti_pdf(alpha: f64, beta1: f64, y: f64) -> Result<f64> {
    check_params(alpha, beta1)?;
    if !(y > 0.0 && y < 1.0) {
        return Err(Error::Boundary("lamperti_pdf requires y in the open interval (0,1)"));
    }
    let beta2 = 1.0 - beta1;
    let ya = y.powf(alpha);
    let ca = (1.0 - y).powf(alpha);
    let num = (PI * alpha).sin() / PI * beta1 * beta2 * y.powf(alpha - 1.0) * (1.0 - y).powf(alpha - 1.0);
    let den = beta1 * beta1 * ca * ca
        + beta2 * beta2 * ya * ya
        + 2.0 * beta1 * beta2 * ya * ca * (PI * alpha).cos();
    Ok(num / den)
}

/// CDF at `y in [0,1]`; `y = 0` returns the continuous limit 0.
pub fn lamperti_cdf(alpha: f64, beta1: f64, y: f64) -> Result<f64> {
    check_params(alpha, beta1)?;
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::param(format!("y must lie in [0,1], got {y}")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    if y == 1.0 {
        return Ok(1.0);
    }
    let beta2 = 1.0 - beta1;
    let pa = PI * alpha;
    let arg = beta1 * (1.0 - y).powf(alpha) / (beta2 * y.powf(alpha) * pa.sin()) + 1.0 / pa.tan();
    Ok(arccot(arg) / pa)
}
