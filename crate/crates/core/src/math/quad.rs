//! Gauss-Legendre and adaptive Gauss-Kronrod quadrature.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the rule by Newton iteration on the Legendre polynomial.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Chebyshev initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Shared, lazily-built rule for a given order.
    pub fn cached(n: usize) -> &'static GaussLegendre {
        static CACHE: OnceLock<Mutex<HashMap<usize, &'static GaussLegendre>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().unwrap();
        map.entry(n)
            .or_insert_with(|| Box::leak(Box::new(GaussLegendre::new(n))))
    }

    /// Integrates `f` over [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(c + h * x);
        }
        acc * h
    }
}

/// Legendre P_n(x) and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Fixed-order Gauss-Legendre over [a, b] split into `panels` equal panels.
pub fn composite_gl<F: FnMut(f64) -> f64>(
    order: usize,
    panels: usize,
    a: f64,
    b: f64,
    mut f: F,
) -> f64 {
    let rule = GaussLegendre::cached(order);
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        acc += rule.integrate(a + p as f64 * h, a + (p + 1) as f64 * h, &mut f);
    }
    acc
}

// 7-point Gauss / 15-point Kronrod pair on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One G7/K15 panel; returns (kronrod, |kronrod - gauss|).
fn gk15<F: FnMut(f64) -> f64>(a: f64, b: f64, f: &mut F) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        res_k += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    (res_k * h, ((res_k - res_g) * h).abs())
}

/// Adaptive Gauss-Kronrod integration to an absolute tolerance.
///
/// Bisects the worst panel until the summed error estimate is below `abs_tol`
/// or the subdivision limit is reached.
pub fn adaptive_gk<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    #[derive(Debug)]
    struct Panel {
        a: f64,
        b: f64,
        val: f64,
        err: f64,
    }
    let (val, err) = gk15(a, b, &mut f);
    let mut panels = vec![Panel { a, b, val, err }];
    for _ in 0..2000 {
        let total_err: f64 = panels.iter().map(|p| p.err).sum();
        if total_err <= abs_tol {
            return Ok(panels.iter().map(|p| p.val).sum());
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
            .unwrap();
        let p = panels.swap_remove(worst);
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // interval exhausted at machine precision
            panels.push(p);
            return Ok(panels.iter().map(|q| q.val).sum());
        }
        let (v1, e1) = gk15(p.a, m, &mut f);
        let (v2, e2) = gk15(m, p.b, &mut f);
        panels.push(Panel {
            a: p.a,
            b: m,
            val: v1,
            err: e1,
        });
        panels.push(Panel {
            a: m,
            b: p.b,
            val: v2,
            err: e2,
        });
    }
    Err(Error::Numerical(format!(
        "adaptive quadrature did not reach tolerance {abs_tol:.3e} on [{a}, {b}]; \
         error estimate {:.3e}",
        panels.iter().map(|p| p.err).sum::<f64>()
    )))
}

/// Trapezoid rule with interval doubling until two refinements agree to `tol`.
///
/// Kept deliberately independent of the Gauss-Legendre machinery so the two
/// can cross-check each other.
pub fn trapezoid_doubling<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64> {
    let mut n = 8usize;
    let mut h = (b - a) / n as f64;
    let mut t = 0.5 * (f(a) + f(b));
    for i in 1..n {
        t += f(a + i as f64 * h);
    }
    t *= h;
    for _ in 0..24 {
        let mut s = 0.0;
        let half = 0.5 * h;
        for i in 0..n {
            s += f(a + i as f64 * h + half);
        }
        let t_new = 0.5 * t + half * s;
        if (t_new - t).abs() <= tol * (1.0 + t_new.abs()) {
            return Ok(t_new);
        }
        t = t_new;
        n *= 2;
        h = half;
    }
    Err(Error::Numerical(format!(
        "trapezoid doubling did not converge to {tol:.3e} on [{a}, {b}]"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        // 8-point rule is exact for degree <= 15
        let rule = GaussLegendre::new(8);
        let val = rule.integrate(0.0, 1.0, |x| x.powi(15));
        assert!((val - 1.0 / 16.0).abs() < 1e-14, "got {val}");
    }

    #[test]
    fn gl_nodes_symmetric_and_weights_sum() {
        for n in [4, 16, 33, 64] {
            let rule = GaussLegendre::new(n);
            let ws: f64 = rule.weights.iter().sum();
            assert!((ws - 2.0).abs() < 1e-13);
            for i in 0..n {
                assert!((rule.nodes[i] + rule.nodes[n - 1 - i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn adaptive_gk_handles_peaked_integrand() {
        // Gaussian of width 1e-3 inside a wide interval
        let s = 1e-3;
        let v = adaptive_gk(
            |x: f64| (-0.5 * (x / s).powi(2)).exp(),
            -1.0,
            1.0,
            1e-12,
        )
        .unwrap();
        let exact = s * (2.0 * std::f64::consts::PI).sqrt();
        assert!((v - exact).abs() < 1e-12, "got {v}, want {exact}");
    }

    #[test]
    fn trapezoid_matches_gk_on_smooth_function() {
        let f = |x: f64| (x.sin() + 2.0).ln();
        let a = trapezoid_doubling(f, 0.0, 2.0, 1e-13).unwrap();
        let b = adaptive_gk(f, 0.0, 2.0, 1e-13).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
