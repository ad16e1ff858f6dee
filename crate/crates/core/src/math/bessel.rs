//! Scaled modified Bessel function of the first kind, fractional order.
//!
//! Everything downstream multiplies `I_nu(z)` by a Gaussian factor
//! `exp(-(r^2+r'^2)/(2 tau))`, so the function is evaluated in the
//! exponentially scaled form `e^{-z} I_nu(z)`, which stays bounded for
//! arguments up to `r r'/tau ~ 1e6`.
//!
//! Evaluation strategy:
//! - a log-space upper bound short-circuits orders deep in the underflow
//!   region (this is what truncates the wedge image/eigen series cheaply),
//! - large argument relative to order: Hankel asymptotic series with the
//!   first omitted term as error bound,
//! - otherwise: Lentz continued fraction for `I'/I`, downward recurrence to
//!   order `|mu| <= 1/2`, Temme series (small x) or a second continued
//!   fraction (x >= 2) for `K`, and the Wronskian to normalize.

use crate::error::{Error, Result};
use crate::math::ln_gamma;

const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const MAXIT: usize = 100_000;
const XMIN_TEMME: f64 = 2.0;

/// `e^{-x} I_nu(x)` for `nu >= 0`, `x >= 0`.
pub fn bessel_i_scaled(nu: f64, x: f64) -> Result<f64> {
    if !(nu >= 0.0) || !(x >= 0.0) {
        return Err(Error::Domain(format!(
            "bessel_i_scaled requires nu >= 0 and x >= 0, got nu={nu}, x={x}"
        )));
    }
    if x == 0.0 {
        return Ok(if nu == 0.0 { 1.0 } else { 0.0 });
    }
    // Underflow guard: e^{-x} I_nu(x) <= exp(nu ln(x/2) - lnGamma(nu+1) - x
    // + x^2/(4(nu+1))). Far below f64 range the value is identically zero
    // for our purposes, and skipping avoids overflow in the recurrences.
    if log_upper_bound(nu, x) < -746.0 {
        return Ok(0.0);
    }
    if x >= hankel_threshold(nu) {
        return hankel_scaled(nu, x);
    }
    bessel_ik_scaled(nu, x).map(|(i, _)| i)
}

/// Upper bound for `ln(e^{-x} I_nu(x))`.
#[inline]
pub fn log_upper_bound(nu: f64, x: f64) -> f64 {
    nu * (0.5 * x).ln() - ln_gamma(nu + 1.0) - x + x * x / (4.0 * (nu + 1.0))
}

/// Argument beyond which the Hankel expansion reaches ~1e-15 accuracy.
#[inline]
fn hankel_threshold(nu: f64) -> f64 {
    (8.0 * nu * nu + 20.0).max(30.0)
}

/// Hankel large-argument expansion of `e^{-x} I_nu(x)`.
///
/// Valid for `x >= hankel_threshold(nu)`; the reflection term is below
/// `e^{-2x} < 1e-17` there and is dropped.
fn hankel_scaled(nu: f64, x: f64) -> Result<f64> {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..=40u32 {
        let k2 = (2 * k - 1) as f64;
        term *= -(mu - k2 * k2) / (8.0 * x * k as f64);
        if term.abs() >= prev {
            break; // asymptotic series started diverging
        }
        sum += term;
        prev = term.abs();
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    Ok(sum / (2.0 * std::f64::consts::PI * x).sqrt())
}

/// Temme gamma helpers: `(gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu))`.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    debug_assert!(mu.abs() <= 0.5);
    let gampl = 1.0 / libm::tgamma(1.0 + mu);
    let gammi = 1.0 / libm::tgamma(1.0 - mu);
    let gam1 = if mu.abs() < 1e-9 {
        // limit of (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu)
        -0.577_215_664_901_532_9
    } else {
        (gammi - gampl) / (2.0 * mu)
    };
    let gam2 = 0.5 * (gammi + gampl);
    (gam1, gam2, gampl, gammi)
}

/// `(e^{-x} I_nu(x), e^{x} K_nu(x))` by CF1/CF2 with downward recurrence.
pub fn bessel_ik_scaled(nu: f64, x: f64) -> Result<(f64, f64)> {
    if !(x > 0.0) || !(nu >= 0.0) {
        return Err(Error::Domain(format!(
            "bessel_ik_scaled requires x > 0 and nu >= 0, got nu={nu}, x={x}"
        )));
    }
    let nl = (nu + 0.5).floor() as usize;
    let xmu = nu - nl as f64;
    let xmu2 = xmu * xmu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;

    // CF1 for I'_nu / I_nu.
    let mut h = (nu * xi).max(FPMIN);
    let mut b = xi2 * nu;
    let mut d = 0.0;
    let mut c = h;
    let mut ok = false;
    for _ in 0..MAXIT {
        b += xi2;
        d = 1.0 / (b + d);
        c = b + 1.0 / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < EPS {
            ok = true;
            break;
        }
    }
    if !ok {
        return Err(Error::Numerical(format!(
            "bessel CF1 did not converge for nu={nu}, x={x}"
        )));
    }

    // Downward recurrence of (I, I') from order nu to xmu, unnormalized.
    let mut ril = FPMIN;
    let mut ripl = h * ril;
    let ril_seed = ril;
    let mut fact = nu * xi;
    for _ in 0..nl {
        let ritemp = fact * ril + ripl;
        fact -= xi;
        ripl = fact * ritemp + ril;
        ril = ritemp;
    }
    let f = ripl / ril;

    // K_xmu and K_{xmu+1}, scaled by e^{x}.
    let (rkmu, rk1) = if x < XMIN_TEMME {
        // Temme's series (unscaled), multiplied by e^{x} afterwards.
        let x2 = 0.5 * x;
        let pimu = std::f64::consts::PI * xmu;
        let fact = if pimu.abs() < EPS {
            1.0
        } else {
            pimu / pimu.sin()
        };
        let mut dd = -x2.ln();
        let e = xmu * dd;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(xmu);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * dd);
        let mut sum = ff;
        let e_exp = e.exp();
        let mut p = 0.5 * e_exp / gampl;
        let mut q = 0.5 / (e_exp * gammi);
        let mut cc = 1.0;
        dd = x2 * x2;
        let mut sum1 = p;
        let mut converged = false;
        for i in 1..=MAXIT {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - xmu2);
            cc *= dd / fi;
            p /= fi - xmu;
            q /= fi + xmu;
            let del = cc * ff;
            sum += del;
            let del1 = cc * (p - fi * ff);
            sum1 += del1;
            if del.abs() < sum.abs() * EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numerical(format!(
                "bessel Temme series did not converge for nu={nu}, x={x}"
            )));
        }
        let scale = x.exp();
        (sum * scale, sum1 * xi2 * scale)
    } else {
        // CF2 (Steed's algorithm); yields e^{x} K directly.
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut h2 = d;
        let mut delh = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - xmu2;
        let mut q = a1;
        let mut cc = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        let mut converged = false;
        for i in 2..=MAXIT {
            let fi = i as f64;
            a -= 2.0 * (fi - 1.0);
            cc = -a * cc / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += cc * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh = (b * d - 1.0) * delh;
            h2 += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numerical(format!(
                "bessel CF2 did not converge for nu={nu}, x={x}"
            )));
        }
        h2 = a1 * h2;
        let rkmu = (std::f64::consts::PI / (2.0 * x)).sqrt() / s;
        let rk1 = rkmu * (xmu + x + 0.5 - h2) * xi;
        (rkmu, rk1)
    };

    // Wronskian normalization: I_mu = (1/x) / (f K_mu - K'_mu).
    let rkmup = xmu * xi * rkmu - rk1;
    let rimu = xi / (f * rkmu - rkmup);
    let i_scaled = rimu * ril_seed / ril;

    // K at the requested order by stable upward recurrence.
    let mut kmu = rkmu;
    let mut k1 = rk1;
    for i in 1..=nl {
        let ktemp = (xmu + i as f64) * xi2 * k1 + kmu;
        kmu = k1;
        k1 = ktemp;
    }
    Ok((i_scaled, kmu))
}
