//! Market/model data shared by all engines: issuer parameters, the
//! correlation triplet with its positive-definiteness certificate, the CDS
//! contract, and the mapping from raw inputs to distance-to-default
//! coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which leg of the trade an issuer plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    ProtectionSeller,
    ReferenceName,
    ProtectionBuyer,
}

/// One obligor under the driftless first-passage model.
///
/// `ln_distance` is ln(a0/l0), the initial log-distance of assets to the
/// default barrier; the Brownian coordinate is `ln_distance / sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IssuerParams {
    pub role: Role,
    pub ln_distance: f64,
    pub sigma: f64,
    pub recovery: f64,
}

impl IssuerParams {
    pub fn new(role: Role, ln_distance: f64, sigma: f64, recovery: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidInput(format!("sigma must be > 0, got {sigma}")));
        }
        if !(0.0..1.0).contains(&recovery) {
            return Err(Error::InvalidInput(format!(
                "recovery must be in [0, 1), got {recovery}"
            )));
        }
        if !(ln_distance > 0.0) {
            return Err(Error::InvalidInput(format!(
                "issuer must be alive at t=0: ln_distance must be > 0, got {ln_distance}"
            )));
        }
        Ok(Self {
            role,
            ln_distance,
            sigma,
            recovery,
        })
    }

    /// Initial distance-to-default in Brownian units.
    pub fn distance(&self) -> f64 {
        self.ln_distance / self.sigma
    }
}

/// Maps a raw initial value, interpreted as ln(a0/l0), to the Brownian
/// distance-to-default coordinate.
pub fn distance_from_inputs(initial_value: f64, sigma: f64) -> Result<f64> {
    if !(initial_value > 0.0) || !(sigma > 0.0) {
        return Err(Error::Domain(format!(
            "initial value and sigma must be positive, got {initial_value}, {sigma}"
        )));
    }
    Ok(initial_value / sigma)
}

/// Pairwise correlations of the three Brownian drivers, with the
/// determinant certificate `chi` of the 3x3 correlation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationTriplet {
    pub rho_xy: f64,
    pub rho_xz: f64,
    pub rho_yz: f64,
    /// sqrt(1 - rho_xy^2 - rho_xz^2 - rho_yz^2 + 2 rho_xy rho_xz rho_yz)
    pub chi: f64,
}

impl CorrelationTriplet {
    pub fn rho_bar_xy(&self) -> f64 {
        (1.0 - self.rho_xy * self.rho_xy).sqrt()
    }
    pub fn rho_bar_xz(&self) -> f64 {
        (1.0 - self.rho_xz * self.rho_xz).sqrt()
    }
    pub fn rho_bar_yz(&self) -> f64 {
        (1.0 - self.rho_yz * self.rho_yz).sqrt()
    }

    /// Lower-triangular Cholesky factor of the correlation matrix,
    /// row-major [[1,0,0],[l21,l22,0],[l31,l32,l33]].
    pub fn cholesky(&self) -> [[f64; 3]; 3] {
        let rb = self.rho_bar_xy();
        [
            [1.0, 0.0, 0.0],
            [self.rho_xy, rb, 0.0],
            [
                self.rho_xz,
                (self.rho_yz - self.rho_xy * self.rho_xz) / rb,
                self.chi / rb,
            ],
        ]
    }
}

/// Validates a correlation triplet and computes its certificate.
pub fn validate_correlations(rho_xy: f64, rho_xz: f64, rho_yz: f64) -> Result<CorrelationTriplet> {
    for (name, r) in [("xy", rho_xy), ("xz", rho_xz), ("yz", rho_yz)] {
        if !(r.abs() < 1.0) {
            return Err(Error::InvalidInput(format!(
                "|rho_{name}| must be < 1, got {r}"
            )));
        }
    }
    let chi2 = 1.0 - rho_xy * rho_xy - rho_xz * rho_xz - rho_yz * rho_yz
        + 2.0 * rho_xy * rho_xz * rho_yz;
    if !(chi2 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "correlation matrix not positive definite: chi^2 = {chi2:.6e} for \
             ({rho_xy}, {rho_xz}, {rho_yz})"
        )));
    }
    Ok(CorrelationTriplet {
        rho_xy,
        rho_xz,
        rho_yz,
        chi: chi2.sqrt(),
    })
}

/// CDS terms: maturity, running coupon, payment schedule and the flat
/// continuously-compounded risk-free rate.
#[derive(Debug, Clone, PartialEq)]
pub struct CdsContract {
    pub maturity: f64,
    pub coupon: f64,
    /// Strictly increasing coupon dates with the last equal to `maturity`.
    pub payment_dates: Vec<f64>,
    pub rate: f64,
}

impl CdsContract {
    pub fn new(maturity: f64, coupon: f64, payment_dates: Vec<f64>, rate: f64) -> Result<Self> {
        if payment_dates.is_empty() {
            return Err(Error::InvalidInput("empty payment schedule".into()));
        }
        let mut prev = 0.0;
        for &t in &payment_dates {
            if !(t > prev) {
                return Err(Error::InvalidInput(format!(
                    "payment dates must be strictly increasing and positive, got {t} after {prev}"
                )));
            }
            prev = t;
        }
        if (prev - maturity).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "last payment date {prev} must equal maturity {maturity}"
            )));
        }
        Ok(Self {
            maturity,
            coupon,
            payment_dates,
            rate,
        })
    }

    /// Regular schedule with `frequency` payments per year.
    pub fn with_frequency(maturity: f64, coupon: f64, frequency: u32, rate: f64) -> Result<Self> {
        if frequency == 0 || !(maturity > 0.0) {
            return Err(Error::InvalidInput(format!(
                "need frequency >= 1 and maturity > 0, got {frequency}, {maturity}"
            )));
        }
        let n = (maturity * frequency as f64).round() as usize;
        if n == 0 || ((n as f64) / frequency as f64 - maturity).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "maturity {maturity} is not a whole number of periods at frequency {frequency}"
            )));
        }
        let dates = (1..=n).map(|i| i as f64 / frequency as f64).collect();
        Self::new(maturity, coupon, dates, rate)
    }

    /// Accrual fraction of period `i`.
    pub fn accrual(&self, i: usize) -> f64 {
        if i == 0 {
            self.payment_dates[0]
        } else {
            self.payment_dates[i] - self.payment_dates[i - 1]
        }
    }

    /// Same contract with a different coupon.
    pub fn with_coupon(&self, coupon: f64) -> Self {
        Self {
            coupon,
            ..self.clone()
        }
    }
}

/// Price of a zero-coupon bond, exp(-rate (T - t)).
pub fn discount_factor(t: f64, maturity: f64, rate: f64) -> Result<f64> {
    if t > maturity {
        return Err(Error::Domain(format!(
            "discount_factor requires t <= T, got t={t}, T={maturity}"
        )));
    }
    Ok((-rate * (maturity - t)).exp())
}

/// Initial distances of the three names, bound to roles: x is the
/// protection seller, y the reference name, z the protection buyer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialState {
    pub x0: f64,
    pub y0: f64,
    pub z0: f64,
}

impl InitialState {
    pub fn new(x0: f64, y0: f64, z0: f64) -> Result<Self> {
        if !(x0 > 0.0 && y0 > 0.0 && z0 > 0.0) {
            return Err(Error::InvalidInput(format!(
                "initial distances must be strictly positive, got ({x0}, {y0}, {z0})"
            )));
        }
        Ok(Self { x0, y0, z0 })
    }
}

// --- JSON market-input document -------------------------------------------

/// One issuer entry of the JSON market document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IssuerInput {
    pub role: Role,
    pub initial_value: f64,
    pub sigma: f64,
    pub recovery: f64,
    /// Optional 5Y par-spread target for volatility calibration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_spread: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CorrelationsInput {
    pub xy: f64,
    pub xz: f64,
    pub yz: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ContractInput {
    pub maturity: f64,
    pub coupon: f64,
    /// Payments per year.
    pub frequency: u32,
}

/// JSON market-input document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarketInput {
    pub issuers: Vec<IssuerInput>,
    pub correlations: CorrelationsInput,
    pub rate: f64,
    pub contract: ContractInput,
}

impl MarketInput {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn issuer(&self, role: Role) -> Result<&IssuerInput> {
        let mut found = None;
        for iss in &self.issuers {
            if iss.role == role {
                if found.is_some() {
                    return Err(Error::InvalidInput(format!("duplicate issuer role {role:?}")));
                }
                found = Some(iss);
            }
        }
        found.ok_or_else(|| Error::InvalidInput(format!("missing issuer with role {role:?}")))
    }

    pub fn issuer_params(&self, role: Role) -> Result<IssuerParams> {
        let iss = self.issuer(role)?;
        IssuerParams::new(role, iss.initial_value, iss.sigma, iss.recovery)
    }

    pub fn correlations(&self) -> Result<CorrelationTriplet> {
        validate_correlations(self.correlations.xy, self.correlations.xz, self.correlations.yz)
    }

    pub fn contract(&self) -> Result<CdsContract> {
        CdsContract::with_frequency(
            self.contract.maturity,
            self.contract.coupon,
            self.contract.frequency,
            self.rate,
        )
    }

    pub fn initial_state(&self) -> Result<InitialState> {
        InitialState::new(
            self.issuer_params(Role::ProtectionSeller)?.distance(),
            self.issuer_params(Role::ReferenceName)?.distance(),
            self.issuer_params(Role::ProtectionBuyer)?.distance(),
        )
    }
}
