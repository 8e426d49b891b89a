//! The interference geometry factor β(M, g₀) built from the complementary
//! incomplete Beta function B'(x, y, z) = ∫_z^1 u^(x−1) (1−u)^(y−1) du.
//!
//! For a path loss exponent α > 2 the integrand has an integrable
//! singularity at u = 1 (exponent y−1 = −2/α), so the integral is
//! evaluated after the substitution u = 1 − v^(α/(α−2)), which makes the
//! transformed integrand smooth and bounded on a closed interval.

use crate::error::{Error, Result};
use crate::model::SystemConfig;

/// Relative tolerance requested from the adaptive quadrature; the public
/// contract is a relative error of at most 1e-8, so we aim two digits
/// lower.
const QUAD_REL_TOL: f64 = 1e-10;
const QUAD_MAX_DEPTH: u32 = 48;

/// β(M, g₀) = (2/α) (2^(M g₀ τ/W) − 1)^(2/α) B'(2/α, 1 − 2/α, 2^(−M g₀ τ/W)).
///
/// Strictly increasing in g₀ and in M for g₀ > 0, and → 0 as g₀ → 0 or
/// τ → 0. Returns +∞ when the rate exponent overflows, which downstream
/// success probabilities turn into 0.
pub fn beta_factor(num_groups: u32, g0: f64, cfg: &SystemConfig) -> Result<f64> {
    if num_groups == 0 {
        return Err(Error::InvalidConfig("beta_factor requires M >= 1".into()));
    }
    if g0.is_nan() || g0 < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "beta_factor requires g0 >= 0, got {}",
            g0
        )));
    }
    let alpha = cfg.pathloss_exp;
    if alpha.is_nan() || alpha <= 2.0 {
        return Err(Error::InvalidConfig(format!(
            "beta_factor requires pathloss_exp > 2, got {}",
            alpha
        )));
    }
    let exponent = num_groups as f64 * g0 * cfg.target_rate_bps / cfg.bandwidth_hz;
    beta_from_exponent(exponent, alpha)
}

/// β computed from the rate exponent M g₀ τ/W directly.
pub(crate) fn beta_from_exponent(exponent: f64, alpha: f64) -> Result<f64> {
    if exponent == 0.0 {
        return Ok(0.0);
    }
    let x = 2.0 / alpha;
    let y = 1.0 - x;
    // theta = 2^e − 1 and 1 − z = 1 − 2^(−e), both via expm1 so tiny
    // exponents keep full precision
    let theta = f64::exp_m1(exponent * std::f64::consts::LN_2);
    if theta.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let one_minus_z = -f64::exp_m1(-exponent * std::f64::consts::LN_2);
    let b_comp = comp_inc_beta_frac(x, y, one_minus_z)?;
    Ok(x * theta.powf(x) * b_comp)
}

/// Full-plane variant: same up-front factors but with the complete Beta
/// function B(2/α, 1 − 2/α) = π / sin(2π/α) in place of B'. This is the
/// interference factor when interferers may lie closer than the serving
/// BS, as happens under separated (non-joint) placement and reuse.
pub fn beta_factor_full_plane(num_groups: u32, g0: f64, cfg: &SystemConfig) -> Result<f64> {
    if num_groups == 0 {
        return Err(Error::InvalidConfig("beta_factor requires M >= 1".into()));
    }
    let alpha = cfg.pathloss_exp;
    if alpha.is_nan() || alpha <= 2.0 {
        return Err(Error::InvalidConfig(format!(
            "beta_factor requires pathloss_exp > 2, got {}",
            alpha
        )));
    }
    let exponent = num_groups as f64 * g0 * cfg.target_rate_bps / cfg.bandwidth_hz;
    if exponent == 0.0 {
        return Ok(0.0);
    }
    let x = 2.0 / alpha;
    let theta = f64::exp_m1(exponent * std::f64::consts::LN_2);
    if theta.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let b_complete = std::f64::consts::PI / (std::f64::consts::PI * x).sin();
    Ok(x * theta.powf(x) * b_complete)
}

/// B'(x, 1−x, z) parameterized by 1−z for precision near z = 1.
///
/// Substituting u = 1 − v^(1/y) with y = 1−x turns the singular integral
/// into (1/y) ∫_0^((1−z)^y) (1 − v^(1/y))^(x−1) dv whose integrand is
/// smooth and bounded by (1−(1−z))^(x−1) on the closed interval.
fn comp_inc_beta_frac(x: f64, y: f64, one_minus_z: f64) -> Result<f64> {
    if one_minus_z <= 0.0 {
        return Ok(0.0);
    }
    let upper = one_minus_z.powf(y);
    let inv_y = 1.0 / y;
    let f = |v: f64| {
        if v <= 0.0 {
            1.0
        } else {
            (1.0 - v.powf(inv_y)).max(0.0).powf(x - 1.0)
        }
    };
    let integral = adaptive_simpson(&f, 0.0, upper, QUAD_REL_TOL)?;
    Ok(integral * inv_y)
}

/// Adaptive Simpson quadrature with a relative tolerance target.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // scale the absolute budget by a first estimate of the magnitude
    let scale = whole.abs().max((b - a) * fm.abs()).max(f64::MIN_POSITIVE);
    simpson_step(f, a, b, fa, fm, fb, whole, rel_tol * scale, QUAD_MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    abs_tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * abs_tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numerical(format!(
            "adaptive quadrature failed to converge on [{a}, {b}]"
        )));
    }
    let l = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * abs_tol, depth - 1)?;
    let r = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * abs_tol, depth - 1)?;
    Ok(l + r)
}
