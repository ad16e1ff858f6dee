//! Coordinate machinery: decorrelating linear changes of variables in 2D and
//! 3D, polar/spherical maps, and the angular-domain boundary with its
//! facet-to-issuer dictionary.
//!
//! Facet dictionary in 3D: {x = 0} maps to {phi = 0} (protection seller),
//! {y = 0} to {phi = phi0} (reference name), {z = 0} to the southern curve
//! {theta = Theta(phi)} (protection buyer). theta = 0 is the degenerate
//! north pole, not a physical boundary. In 2D the wedge maps {y = 0} to
//! {phi = 0} and {x = 0} to {phi = phi0}.

use crate::error::{Error, Result};
use crate::model::CorrelationTriplet;

/// Pole exclusion cap: the chart keeps theta >= THETA_MIN; the rim is a
/// natural (non-absorbing) closure of the coordinate singularity.
pub const THETA_MIN: f64 = 1e-3;

/// 2D wedge after decorrelation: opening angle phi0 = arccos(-rho_xy).
#[derive(Debug, Clone, Copy)]
pub struct WedgeDomain2D {
    pub phi0: f64,
    pub rho_bar: f64,
    pub rho_xy: f64,
}

impl WedgeDomain2D {
    pub fn new(rho_xy: f64) -> Result<Self> {
        if !(rho_xy.abs() < 1.0) {
            return Err(Error::InvalidInput(format!("|rho_xy| must be < 1, got {rho_xy}")));
        }
        Ok(Self {
            phi0: (-rho_xy).acos(),
            rho_bar: (1.0 - rho_xy * rho_xy).sqrt(),
            rho_xy,
        })
    }
}

/// Decorrelating 2D change of variables: alpha = x, beta = (-rho x + y)/rho_bar.
pub fn transform_2d(x: f64, y: f64, rho_xy: f64) -> (f64, f64) {
    let rho_bar = (1.0 - rho_xy * rho_xy).sqrt();
    (x, (-rho_xy * x + y) / rho_bar)
}

/// Polar chart of the wedge: (alpha, beta) = (r sin(phi0 - phi), r cos(phi0 - phi)).
pub fn from_polar_2d(r: f64, phi: f64, phi0: f64) -> (f64, f64) {
    ((phi0 - phi).sin() * r, (phi0 - phi).cos() * r)
}

/// Inverse polar chart; errors if the point lies outside the wedge image.
pub fn to_polar_2d(alpha: f64, beta: f64, phi0: f64) -> Result<(f64, f64)> {
    let r = alpha.hypot(beta);
    if r == 0.0 {
        return Ok((0.0, phi0));
    }
    let delta = alpha.atan2(beta); // angle measured from the beta axis
    if !(-1e-12..=phi0 + 1e-12).contains(&delta) {
        return Err(Error::Domain(format!(
            "point (alpha={alpha}, beta={beta}) outside wedge of angle {phi0}"
        )));
    }
    Ok((r, phi0 - delta.clamp(0.0, phi0)))
}

/// Maps (x0, y0) to the wedge polar chart; the x issuer sits on phi = phi0.
pub fn initial_point_2d(x0: f64, y0: f64, rho_xy: f64) -> Result<(f64, f64)> {
    let wedge = WedgeDomain2D::new(rho_xy)?;
    let (a, b) = transform_2d(x0, y0, rho_xy);
    to_polar_2d(a, b, wedge.phi0)
}

/// Decorrelating 3D change of variables (inverse Cholesky of the
/// correlation matrix): maps the correlated generator to the standard
/// Laplacian. The Jacobian determinant is 1/chi.
pub fn transform_3d(x: f64, y: f64, z: f64, corr: &CorrelationTriplet) -> (f64, f64, f64) {
    let rb = corr.rho_bar_xy();
    let alpha = x;
    let beta = (-corr.rho_xy * x + y) / rb;
    let gamma = ((corr.rho_xy * corr.rho_yz - corr.rho_xz) * x
        + (corr.rho_xy * corr.rho_xz - corr.rho_yz) * y
        + rb * rb * z)
        / (rb * corr.chi);
    (alpha, beta, gamma)
}

/// Inverse of [`transform_3d`].
pub fn inverse_transform_3d(
    alpha: f64,
    beta: f64,
    gamma: f64,
    corr: &CorrelationTriplet,
) -> (f64, f64, f64) {
    let rb = corr.rho_bar_xy();
    let x = alpha;
    let y = corr.rho_xy * alpha + rb * beta;
    let z = corr.rho_xz * alpha
        + (corr.rho_yz - corr.rho_xy * corr.rho_xz) / rb * beta
        + corr.chi / rb * gamma;
    (x, y, z)
}

/// Spherical chart: (alpha, beta, gamma) = (r sin t sin p, r sin t cos p, r cos t).
pub fn spherical_coords(alpha: f64, beta: f64, gamma: f64) -> (f64, f64, f64) {
    let r = (alpha * alpha + beta * beta + gamma * gamma).sqrt();
    if r == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let theta = (gamma / r).clamp(-1.0, 1.0).acos();
    let phi = alpha.atan2(beta);
    (r, phi, theta)
}

pub fn from_spherical(r: f64, phi: f64, theta: f64) -> (f64, f64, f64) {
    (
        r * theta.sin() * phi.sin(),
        r * theta.sin() * phi.cos(),
        r * theta.cos(),
    )
}

/// A point of the southern boundary with its parametric derivatives.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryPoint {
    pub omega: f64,
    pub phi: f64,
    pub theta: f64,
    pub dphi_domega: f64,
    pub dtheta_domega: f64,
}

/// The (phi, theta) chart of the spherical-triangle angular domain.
#[derive(Debug, Clone)]
pub struct AngularDomainSpec {
    pub correlations: CorrelationTriplet,
    pub phi0: f64,
    pub theta_min: f64,
    // southern-boundary coefficients: cos Theta = (c0 + c1 w) / (rb sqrt(d0 + d1 w + d2 w^2))
    c0: f64,
    c1: f64,
    d0: f64,
    d1: f64,
    d2: f64,
}

impl AngularDomainSpec {
    pub fn new(correlations: CorrelationTriplet) -> Result<Self> {
        let c = &correlations;
        let spec = Self {
            correlations: *c,
            phi0: (-c.rho_xy).acos(),
            theta_min: THETA_MIN,
            c0: c.rho_xy * c.rho_xz - c.rho_yz,
            c1: c.rho_xy * c.rho_yz - c.rho_xz,
            d0: c.rho_bar_xz() * c.rho_bar_xz(),
            d1: -2.0 * (c.rho_xy - c.rho_xz * c.rho_yz),
            d2: c.rho_bar_yz() * c.rho_bar_yz(),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        // phi(omega) is strictly monotone whenever |rho_xy| < 1 (its
        // derivative is rho_bar/(1 - 2 rho w + w^2) > 0); verify numerically
        // anyway, together with the Theta range, and fail loudly.
        let mut prev_phi = -1.0;
        for k in 0..=400 {
            // geometric omega sweep over [0, ~1e6]
            let w = (k as f64 / 400.0 * 14.0).exp() - 1.0;
            let p = self.boundary_curve(w);
            if p.phi <= prev_phi {
                return Err(Error::Numerical(format!(
                    "boundary parametrization not monotone at omega = {w}"
                )));
            }
            if !(p.theta > 2.0 * self.theta_min && p.theta < std::f64::consts::PI) {
                return Err(Error::InvalidInput(format!(
                    "southern boundary leaves (0, pi) at omega = {w}: theta = {}",
                    p.theta
                )));
            }
            prev_phi = p.phi;
        }
        Ok(())
    }

    /// Evaluates the parametric southern boundary at omega >= 0.
    pub fn boundary_curve(&self, omega: f64) -> BoundaryPoint {
        let w = omega;
        let d2w = 1.0 - 2.0 * self.correlations.rho_xy * w + w * w;
        let u_phi = ((1.0 - self.correlations.rho_xy * w) / d2w.sqrt()).clamp(-1.0, 1.0);
        let phi = u_phi.acos();
        let rb = self.correlations.rho_bar_xy();
        let d = self.d0 + self.d1 * w + self.d2 * w * w;
        let c = self.c0 + self.c1 * w;
        let u = (c / (rb * d.sqrt())).clamp(-1.0, 1.0);
        let theta = u.acos();
        // d(theta)/dw = -u' / sqrt(1 - u^2)
        let dprime = self.d1 + 2.0 * self.d2 * w;
        let uprime = (self.c1 * d - 0.5 * c * dprime) / (rb * d.powf(1.5));
        let dtheta = if (1.0 - u * u) > 1e-14 {
            -uprime / (1.0 - u * u).sqrt()
        } else {
            0.0
        };
        BoundaryPoint {
            omega: w,
            phi,
            theta,
            dphi_domega: rb / d2w,
            dtheta_domega: dtheta,
        }
    }

    /// Closed-form inverse of the phi parametrization:
    /// omega = sin(phi) / sin(phi0 - phi).
    pub fn omega_of_phi(&self, phi: f64) -> Result<f64> {
        if !(0.0..=self.phi0).contains(&phi) {
            return Err(Error::Domain(format!(
                "phi = {phi} outside [0, {}]",
                self.phi0
            )));
        }
        let denom = (self.phi0 - phi).sin();
        if denom <= 1e-300 {
            return Ok(f64::INFINITY);
        }
        Ok(phi.sin() / denom)
    }

    /// Southern boundary elevation Theta(phi).
    pub fn theta_of_phi(&self, phi: f64) -> Result<f64> {
        let w = self.omega_of_phi(phi)?;
        if w.is_infinite() {
            return Ok(self.theta_at_phi0());
        }
        Ok(self.boundary_curve(w).theta)
    }

    /// Limit of Theta at phi = phi0 (omega -> infinity).
    pub fn theta_at_phi0(&self) -> f64 {
        let c = &self.correlations;
        let u = ((c.rho_xy * c.rho_yz - c.rho_xz) / (c.rho_bar_xy() * c.rho_bar_yz()))
            .clamp(-1.0, 1.0);
        u.acos()
    }

    /// Unit inward normals of the three default planes in (alpha, beta, gamma).
    pub fn facet_normals(&self) -> [[f64; 3]; 3] {
        let c = &self.correlations;
        let rb = c.rho_bar_xy();
        [
            [1.0, 0.0, 0.0],
            [c.rho_xy, rb, 0.0],
            [
                c.rho_xz,
                (c.rho_yz - c.rho_xy * c.rho_xz) / rb,
                c.chi / rb,
            ],
        ]
    }

    /// Signed great-circle distance to the nearest facet: negative inside,
    /// zero on the boundary, positive outside. The pole theta = 0 is not a
    /// facet.
    pub fn signed_distance(&self, phi: f64, theta: f64) -> f64 {
        let p = [theta.sin() * phi.sin(), theta.sin() * phi.cos(), theta.cos()];
        let mut sd = f64::NEG_INFINITY;
        for n in self.facet_normals() {
            let dot = (p[0] * n[0] + p[1] * n[1] + p[2] * n[2]).clamp(-1.0, 1.0);
            sd = sd.max(-dot.asin());
        }
        sd
    }

    /// Whether the chart point lies inside the domain (ignoring the pole cap).
    pub fn contains(&self, phi: f64, theta: f64, tol: f64) -> bool {
        self.signed_distance(phi, theta) <= tol
    }

    /// Maps a decorrelated point into the spherical chart, checking that it
    /// lies inside the angular domain.
    pub fn to_spherical(&self, alpha: f64, beta: f64, gamma: f64) -> Result<(f64, f64, f64)> {
        let (r, phi, theta) = spherical_coords(alpha, beta, gamma);
        if phi < -1e-12 || phi > self.phi0 + 1e-12 {
            return Err(Error::Domain(format!(
                "phi = {phi} outside [0, {}]",
                self.phi0
            )));
        }
        if r > 0.0 && self.signed_distance(phi, theta) > 1e-10 {
            return Err(Error::Domain(format!(
                "point (r={r}, phi={phi}, theta={theta}) outside the angular domain \
                 (signed distance {:.3e})",
                self.signed_distance(phi, theta)
            )));
        }
        Ok((r, phi.max(0.0), theta))
    }

    /// Chart corners: pole-cap rim ends and the two southern corners.
    pub fn corners(&self) -> [[f64; 2]; 4] {
        [
            [0.0, self.theta_min],
            [self.phi0, self.theta_min],
            [self.phi0, self.theta_at_phi0()],
            [0.0, self.theta_of_phi(0.0).expect("phi = 0 is in range")],
        ]
    }

    /// Spherical area of the domain above the pole cap,
    /// int (cos(theta_min) - cos(Theta(phi))) dphi.
    pub fn spherical_area(&self) -> f64 {
        let rule = crate::math::quad::GaussLegendre::cached(64);
        rule.integrate(0.0, self.phi0, |phi| {
            self.theta_min.cos() - self.theta_of_phi(phi).unwrap().cos()
        })
    }

    /// Southern boundary sampled on a geometrically spaced omega grid,
    /// suitable for CSV export and plotting.
    pub fn boundary_polyline(&self, n: usize) -> Vec<BoundaryPoint> {
        (0..n)
            .map(|k| {
                let t = k as f64 / (n - 1) as f64;
                // omega = tan scaled to cover [0, inf) smoothly in phi
                let phi = t * self.phi0;
                let w = self.omega_of_phi(phi.min(self.phi0 * (1.0 - 1e-9))).unwrap();
                self.boundary_curve(w)
            })
            .collect()
    }
}

/// Maps the three initial distances into the spherical chart.
pub fn initial_point_3d(
    x0: f64,
    y0: f64,
    z0: f64,
    spec: &AngularDomainSpec,
) -> Result<(f64, f64, f64)> {
    let (a, b, g) = transform_3d(x0, y0, z0, &spec.correlations);
    spec.to_spherical(a, b, g)
}
