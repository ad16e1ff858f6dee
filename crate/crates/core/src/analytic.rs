//! Closed-form single-name machinery: first-passage survival of driftless
//! Brownian motion, CDS leg valuation, breakeven coupon, volatility
//! calibration, and the (t, y) value grid used as boundary data by the
//! 2D/3D adjustment engines.

use crate::error::{Error, Result};
use crate::math::{erf, erfc, quad};
use crate::model::{discount_factor, CdsContract};

/// P(min_{s<=tau} W_s + x0 > 0) = erf(x0 / sqrt(2 tau)).
pub fn survival_1d(x0: f64, tau: f64) -> Result<f64> {
    if !(x0 > 0.0) {
        return Err(Error::Domain(format!("survival_1d requires x0 > 0, got {x0}")));
    }
    if tau < 0.0 {
        return Err(Error::Domain(format!("survival_1d requires tau >= 0, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(1.0);
    }
    Ok(erf(x0 / (2.0 * tau).sqrt()))
}

/// First-passage time density x0 (2 pi s^3)^{-1/2} exp(-x0^2/(2s)).
pub fn first_passage_density(x0: f64, s: f64) -> Result<f64> {
    if !(x0 > 0.0) || !(s > 0.0) {
        return Err(Error::Domain(format!(
            "first_passage_density requires x0 > 0 and s > 0, got {x0}, {s}"
        )));
    }
    let z = x0 * x0 / (2.0 * s);
    Ok(x0 / (2.0 * std::f64::consts::PI * s.powi(3)).sqrt() * (-z).exp())
}

/// E[exp(-rate tau) 1{tau <= horizon}] for the first-passage time from
/// distance `x0`. Closed form; used to cross-check the quadrature route.
pub fn discounted_default_probability(x0: f64, rate: f64, horizon: f64) -> Result<f64> {
    if !(x0 > 0.0) || horizon < 0.0 || rate < 0.0 {
        return Err(Error::Domain(format!(
            "discounted_default_probability: bad inputs x0={x0}, rate={rate}, T={horizon}"
        )));
    }
    if horizon == 0.0 {
        return Ok(0.0);
    }
    let b = (2.0 * rate).sqrt();
    let s = (2.0 * horizon).sqrt();
    Ok(0.5
        * ((-x0 * b).exp() * erfc((x0 - b * horizon) / s)
            + (x0 * b).exp() * erfc((x0 + b * horizon) / s)))
}

/// Discounted default-leg integral by adaptive quadrature.
///
/// Uses the substitution s = u^2 to flatten the essential singularity of the
/// first-passage density at s = 0; absolute tolerance 1e-10.
fn default_leg_integral(x0: f64, rate: f64, horizon: f64) -> Result<f64> {
    if horizon <= 0.0 {
        return Ok(0.0);
    }
    let f = |u: f64| -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let s = u * u;
        let dens = x0 / (2.0 * std::f64::consts::PI * s.powi(3)).sqrt() * (-x0 * x0 / (2.0 * s)).exp();
        (-rate * s).exp() * dens * 2.0 * u
    };
    quad::adaptive_gk(f, 0.0, horizon.sqrt(), 1e-10)
}

/// Present values of the two CDS legs from the protection buyer's view,
/// both reported positive: (coupon leg, default leg).
pub fn cds_legs(contract: &CdsContract, x0: f64, recovery_rn: f64) -> Result<(f64, f64)> {
    if !(x0 > 0.0) {
        return Err(Error::Domain(format!("cds_legs requires a live issuer, x0={x0}")));
    }
    let cl = contract.coupon * unit_annuity(contract, x0, 0.0)?;
    let dl = (1.0 - recovery_rn) * default_leg_integral(x0, contract.rate, contract.maturity)?;
    Ok((cl, dl))
}

/// Unit-coupon annuity of the payments strictly after `t`, discounted to `t`,
/// with survival measured from distance `y` at `t`.
fn unit_annuity(contract: &CdsContract, y: f64, t: f64) -> Result<f64> {
    let mut ann = 0.0;
    for (i, &ti) in contract.payment_dates.iter().enumerate() {
        if ti <= t + 1e-12 {
            continue;
        }
        ann += discount_factor(t, ti, contract.rate)?
            * survival_1d(y, ti - t)?
            * contract.accrual(i);
    }
    Ok(ann)
}

/// Coupon rate that makes the CDS worth zero at inception.
pub fn breakeven_coupon(
    contract: &CdsContract,
    x0: f64,
    recovery_rn: f64,
) -> Result<f64> {
    let ann = unit_annuity(contract, x0, 0.0)?;
    if ann <= 1e-14 {
        return Err(Error::Domain(format!(
            "degenerate schedule: unit annuity {ann:.3e}"
        )));
    }
    let dl = (1.0 - recovery_rn) * default_leg_integral(x0, contract.rate, contract.maturity)?;
    Ok(dl / ann)
}

/// Volatility such that the model 5Y (or schedule-implied) par spread
/// matches `target_spread`, with the distance coordinate initial_value/sigma.
///
/// The objective is monotone: a larger sigma shrinks the distance and widens
/// the spread. Bracketing bisection to 1e-10 relative in the spread.
pub fn calibrate_sigma(
    initial_value: f64,
    target_spread: f64,
    recovery_rn: f64,
    contract: &CdsContract,
) -> Result<f64> {
    if !(initial_value > 0.0) {
        return Err(Error::Domain(format!(
            "calibrate_sigma requires initial_value > 0, got {initial_value}"
        )));
    }
    let spread_at = |sigma: f64| -> Result<f64> {
        breakeven_coupon(contract, initial_value / sigma, recovery_rn)
    };
    let (mut lo, mut hi) = (1e-6, 10.0);
    let (s_lo, s_hi) = (spread_at(lo)?, spread_at(hi)?);
    if !(target_spread > s_lo && target_spread < s_hi) {
        return Err(Error::Calibration(format!(
            "target spread {target_spread:.6e} outside attainable bracket \
             [{s_lo:.6e}, {s_hi:.6e}] for sigma in [{lo}, {hi}]"
        )));
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let s = spread_at(mid)?;
        if (s - target_spread).abs() <= 1e-10 * target_spread {
            return Ok(mid);
        }
        if s < target_spread {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Calibration(format!(
        "bisection failed to reach 1e-10 relative in spread; last sigma {mid}"
    )))
}

/// Present value V(t, y) of the remaining standard (non-risky) CDS on a
/// (time, distance) grid, protection-buyer sign convention: V = DL - c * CL.
///
/// The default-leg and unit-annuity components are stored separately so the
/// value can be re-couponed without rebuilding. Bilinear interpolation
/// between nodes; queries above the top distance clamp to the top row,
/// where the value has reached its risk-free annuity asymptote.
#[derive(Debug, Clone)]
pub struct CdsValueGrid {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    /// V(t_i, y_j) at the contract coupon, row-major over times.
    pub values: Vec<f64>,
    pub coupon: f64,
    /// Loss given default of the reference name, 1 - R_RN.
    pub lgd: f64,
    default_leg: Vec<f64>,
    annuity: Vec<f64>,
}

impl CdsValueGrid {
    /// Builds the grid with times aligned to the payment schedule
    /// (`sub_steps` grid intervals per coupon period) and a uniform distance
    /// axis 0..=y_max with `ny` nodes.
    pub fn build(
        contract: &CdsContract,
        recovery_rn: f64,
        y_max: f64,
        sub_steps: usize,
        ny: usize,
    ) -> Result<Self> {
        if !(y_max > 0.0) || ny < 2 || sub_steps == 0 {
            return Err(Error::InvalidInput(format!(
                "CdsValueGrid::build: bad grid spec y_max={y_max}, sub_steps={sub_steps}, ny={ny}"
            )));
        }
        // The value jumps at every coupon date; each payment date appears
        // twice on the time axis, carrying the left and right limits, so
        // bilinear interpolation never smears a coupon drop across a cell.
        let mut times = vec![0.0];
        let mut include_current = vec![false]; // at the node, is the coupon falling on it still owed?
        let mut prev = 0.0;
        for &ti in &contract.payment_dates {
            for k in 1..=sub_steps {
                times.push(prev + (ti - prev) * k as f64 / sub_steps as f64);
                include_current.push(k == sub_steps);
            }
            times.push(ti);
            include_current.push(false);
            prev = ti;
        }
        let distances: Vec<f64> = (0..ny)
            .map(|j| y_max * j as f64 / (ny - 1) as f64)
            .collect();

        let nt = times.len();
        let mut default_leg = vec![0.0; nt * ny];
        let mut annuity = vec![0.0; nt * ny];
        for (i, &t) in times.iter().enumerate() {
            let tau = contract.maturity - t;
            let cutoff = if include_current[i] { t - 1e-9 } else { t + 1e-9 };
            for (j, &y) in distances.iter().enumerate() {
                let k = i * ny + j;
                if tau <= 1e-12 && !include_current[i] {
                    continue;
                }
                if y == 0.0 {
                    // immediate default: protection pays now, no coupons left
                    default_leg[k] = if tau > 1e-12 { 1.0 } else { 0.0 };
                    annuity[k] = 0.0;
                } else {
                    if tau > 1e-12 {
                        default_leg[k] = discounted_default_probability(y, contract.rate, tau)?;
                    }
                    let mut ann = 0.0;
                    for (p, &ti) in contract.payment_dates.iter().enumerate() {
                        if ti <= cutoff {
                            continue;
                        }
                        ann += discount_factor(t, ti, contract.rate)?
                            * survival_1d(y, (ti - t).max(0.0))?
                            * contract.accrual(p);
                    }
                    annuity[k] = ann;
                }
            }
        }
        // stored legs are unit-LGD and unit-coupon; the coupon can be
        // swapped at query time without a rebuild
        let lgd = 1.0 - recovery_rn;
        let mut grid = Self {
            times,
            distances,
            values: vec![],
            coupon: contract.coupon,
            lgd,
            default_leg,
            annuity,
        };
        grid.values = grid
            .default_leg
            .iter()
            .zip(&grid.annuity)
            .map(|(d, a)| lgd * d - contract.coupon * a)
            .collect();
        Ok(grid)
    }

    fn locate(axis: &[f64], v: f64) -> (usize, f64) {
        let n = axis.len();
        if v <= axis[0] {
            return (0, 0.0);
        }
        if v >= axis[n - 1] {
            return (n - 2, 1.0);
        }
        let mut lo = 0;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if axis[mid] <= v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        ((lo), (v - axis[lo]) / (axis[lo + 1] - axis[lo]))
    }

    fn bilinear(&self, field: &[f64], t: f64, y: f64) -> Result<f64> {
        if y < 0.0 {
            return Err(Error::Domain(format!("grid query below y = 0: {y}")));
        }
        if t < -1e-12 || t > self.times[self.times.len() - 1] + 1e-9 {
            return Err(Error::Domain(format!("grid query outside time range: {t}")));
        }
        // clamp above the top distance: annuity asymptote
        let y = y.min(self.distances[self.distances.len() - 1]);
        let (i, a) = Self::locate(&self.times, t);
        let (j, b) = Self::locate(&self.distances, y);
        let ny = self.distances.len();
        let f00 = field[i * ny + j];
        let f01 = field[i * ny + j + 1];
        let f10 = field[(i + 1) * ny + j];
        let f11 = field[(i + 1) * ny + j + 1];
        Ok((1.0 - a) * ((1.0 - b) * f00 + b * f01) + a * ((1.0 - b) * f10 + b * f11))
    }

    /// V(t, y) at an alternative coupon.
    pub fn value_with_coupon(&self, t: f64, y: f64, coupon: f64) -> Result<f64> {
        Ok(self.lgd * self.bilinear(&self.default_leg, t, y)?
            - coupon * self.bilinear(&self.annuity, t, y)?)
    }

    /// V(t, y) at the contract coupon.
    pub fn value(&self, t: f64, y: f64) -> Result<f64> {
        self.value_with_coupon(t, y, self.coupon)
    }

    /// Remaining unit-coupon annuity at (t, y).
    pub fn annuity_at(&self, t: f64, y: f64) -> Result<f64> {
        self.bilinear(&self.annuity, t, y)
    }

    /// Discounted default probability component at (t, y).
    pub fn default_leg_at(&self, t: f64, y: f64) -> Result<f64> {
        self.bilinear(&self.default_leg, t, y)
    }

    pub fn y_max(&self) -> f64 {
        self.distances[self.distances.len() - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::quad::adaptive_gk;

    fn contract_5y_quarterly(rate: f64) -> CdsContract {
        CdsContract::with_frequency(5.0, 1.0, 4, rate).unwrap()
    }

    #[test]
    fn survival_examples() {
        assert!((survival_1d(1.0, 1.0).unwrap() - 0.682689).abs() < 1e-6);
        assert_eq!(survival_1d(3.7, 0.0).unwrap(), 1.0);
        assert!(survival_1d(2.0, -0.5).is_err());
        assert!(survival_1d(0.0, 1.0).is_err());
        // GE parameters, 5Y
        assert!((survival_1d(2.9043, 5.0).unwrap() - 0.80600).abs() < 5e-4);
    }

    #[test]
    fn survival_monotonicity_grid() {
        for i in 0..50 {
            for j in 0..50 {
                let x = 0.1 + 0.1 * i as f64;
                let t = 0.05 + 0.2 * j as f64;
                let q = survival_1d(x, t).unwrap();
                assert!(q > survival_1d(x, t + 0.2).unwrap());
                assert!(q < survival_1d(x + 0.1, t).unwrap());
            }
        }
    }

    #[test]
    fn density_examples() {
        // e^{-1/2}/sqrt(2 pi)
        let want = (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((first_passage_density(1.0, 1.0).unwrap() - want).abs() < 1e-12);
        assert!((first_passage_density(1.0, 1.0).unwrap() - 0.241971).abs() < 1e-6);
        // s -> 0+ limit
        assert!(first_passage_density(1.0, 1e-8).unwrap() < 1e-100);
        assert!(first_passage_density(1.0, -1.0).is_err());
    }

    #[test]
    fn density_integrates_to_default_probability() {
        for (x0, tau) in [(1.0, 1.0), (2.9043, 5.0), (0.5, 0.3)] {
            let int = adaptive_gk(
                |s| first_passage_density(x0, s.max(1e-300)).unwrap_or(0.0),
                0.0,
                tau,
                1e-10,
            )
            .unwrap();
            let want = 1.0 - survival_1d(x0, tau).unwrap();
            assert!((int - want).abs() < 1e-8, "x0={x0} tau={tau}: {int} vs {want}");
        }
    }

    #[test]
    fn density_near_normalized_on_long_horizon() {
        for k in 0..10 {
            let x0 = 0.1 + 0.5 * k as f64;
            let int = adaptive_gk(
                |s| first_passage_density(x0, s.max(1e-300)).unwrap_or(0.0),
                0.0,
                100.0,
                1e-10,
            )
            .unwrap();
            // first-passage is certain eventually; horizon 100 leaves a small tail
            assert!(int <= 1.0 + 1e-9);
            assert!(int >= 1.0 - 0.4, "x0={x0}: {int}");
        }
    }

    #[test]
    fn default_leg_quadrature_matches_closed_form() {
        for (x0, rate, t) in [(1.0, 0.05, 5.0), (2.9, 0.0, 5.0), (0.7, 0.12, 2.0), (4.0, 0.03, 10.0)] {
            let quad_val = default_leg_integral(x0, rate, t).unwrap();
            let closed = discounted_default_probability(x0, rate, t).unwrap();
            assert!(
                (quad_val - closed).abs() < 1e-9,
                "x0={x0} rate={rate} T={t}: {quad_val} vs {closed}"
            );
        }
    }

    #[test]
    fn legs_limits() {
        let c = contract_5y_quarterly(0.03);
        // risk-free limit: DL ~ 0, CL ~ plain annuity
        let (cl, dl) = cds_legs(&c, 50.0, 0.4).unwrap();
        let plain: f64 = c
            .payment_dates
            .iter()
            .enumerate()
            .map(|(i, &ti)| (-c.rate * ti).exp() * c.accrual(i))
            .sum();
        assert!(dl.abs() < 1e-10);
        assert!((cl - plain).abs() < 1e-10);
        // full recovery kills the default leg
        let (_, dl) = cds_legs(&c, 1.5, 1.0 - 1e-15).unwrap();
        assert!(dl < 1e-12);
    }

    #[test]
    fn ge_breakeven_matches_closed_form() {
        // GE 5Y, quarterly, rate 0, R = 0.4, x0 = 2.9043; both legs settle in (0, 5)
        let c = contract_5y_quarterly(0.0);
        let (cl, dl) = cds_legs(&c, 2.9043, 0.4).unwrap();
        assert!(cl > 0.0 && cl < 5.0 && dl > 0.0 && dl < 5.0);
        let be = breakeven_coupon(&c, 2.9043, 0.4).unwrap();
        // closed form: 0.6 * Pdef(5) / annuity
        let pdef = 1.0 - survival_1d(2.9043, 5.0).unwrap();
        let ann: f64 = c
            .payment_dates
            .iter()
            .enumerate()
            .map(|(i, &ti)| survival_1d(2.9043, ti).unwrap() * c.accrual(i))
            .sum();
        assert!((be - 0.6 * pdef / ann).abs() < 1e-10);
        assert!((be - dl / cl).abs() < 1e-12);
    }

    #[test]
    fn breakeven_limits_and_monotonicity() {
        let c = contract_5y_quarterly(0.02);
        assert!(breakeven_coupon(&c, 1.5, 1.0 - 1e-15).unwrap() < 1e-12);
        assert!(breakeven_coupon(&c, 60.0, 0.4).unwrap() < 1e-12);
        let mut prev = f64::INFINITY;
        for k in 0..8 {
            let x0 = 0.5 + 0.5 * k as f64;
            let be = breakeven_coupon(&c, x0, 0.4).unwrap();
            assert!(be < prev);
            prev = be;
        }
        // lower recovery -> wider spread
        assert!(
            breakeven_coupon(&c, 1.5, 0.1).unwrap() > breakeven_coupon(&c, 1.5, 0.6).unwrap()
        );
    }

    #[test]
    fn calibration_round_trips() {
        let c = contract_5y_quarterly(0.0);
        for (value, sigma, rec) in [
            (0.3035, 0.1045, 0.4),
            (0.0359, 0.0244, 0.5),
            (0.1199, 0.063, 0.4),
        ] {
            let spread = breakeven_coupon(&c, value / sigma, rec).unwrap();
            let back = calibrate_sigma(value, spread, rec, &c).unwrap();
            assert!(
                (back - sigma).abs() < 1e-6,
                "value={value}: {back} vs {sigma}"
            );
        }
        assert!(calibrate_sigma(0.3, 0.0, 0.4, &c).is_err());
        assert!(calibrate_sigma(0.3, 100.0, 0.4, &c).is_err());
    }

    #[test]
    fn grid_final_condition_and_breakeven_zero() {
        let rate = 0.02;
        let x0 = 2.2;
        let c = contract_5y_quarterly(rate);
        let be = breakeven_coupon(&c, x0, 0.4).unwrap();
        let grid = CdsValueGrid::build(&c.with_coupon(be), 0.4, 8.0, 4, 161).unwrap();
        for &y in &[0.0, 0.3, 1.7, 4.0, 8.0] {
            assert!(grid.value(5.0, y).unwrap().abs() < 1e-12);
        }
        let v0 = grid.value(0.0, x0).unwrap();
        assert!(v0.abs() < 1e-10, "breakeven value at origin: {v0}");
        assert!(grid.value(0.0, 0.5 * x0).unwrap() > 0.0);
        assert!(grid.value(0.0, -0.1).is_err());
    }

    #[test]
    fn grid_monotone_in_distance_and_annuity_asymptote() {
        let c = contract_5y_quarterly(0.02).with_coupon(0.03);
        let grid = CdsValueGrid::build(&c, 0.4, 9.0, 4, 181).unwrap();
        for &t in &[0.0, 1.3, 3.9] {
            let mut prev = f64::INFINITY;
            for k in 0..30 {
                let y = 0.05 + 0.3 * k as f64;
                let v = grid.value(t, y).unwrap();
                assert!(v <= prev + 1e-12);
                prev = v;
            }
            // top of grid: protection worthless, value = -coupon PV
            let remaining: f64 = c
                .payment_dates
                .iter()
                .enumerate()
                .filter(|(_, &ti)| ti > t + 1e-12)
                .map(|(i, &ti)| (-(ti - t) * c.rate).exp() * c.accrual(i))
                .sum();
            let top = grid.value(t, 9.0).unwrap();
            assert!(
                (top + 0.03 * remaining).abs() < 2e-4,
                "t={t}: {top} vs {}",
                -0.03 * remaining
            );
            // clamp beyond the top
            assert_eq!(top, grid.value(t, 50.0).unwrap());
        }
    }

    #[test]
    fn grid_matches_direct_pricer() {
        use rand::{Rng, SeedableRng};
        let c = contract_5y_quarterly(0.02).with_coupon(0.028);
        let grid = CdsValueGrid::build(&c, 0.4, 10.0, 8, 201).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let t: f64 = rng.random_range(0.0..4.99);
            let y: f64 = rng.random_range(0.05..9.5);
            let v_grid = grid.value(t, y).unwrap();
            // direct: remaining legs priced from scratch
            let tau = c.maturity - t;
            let dl = 0.6 * default_leg_integral(y, c.rate, tau).unwrap();
            let cl: f64 = c
                .payment_dates
                .iter()
                .enumerate()
                .filter(|(_, &ti)| ti > t + 1e-12)
                .map(|(i, &ti)| {
                    (-(ti - t) * c.rate).exp() * survival_1d(y, ti - t).unwrap() * c.accrual(i)
                })
                .sum::<f64>()
                * 0.028;
            let v_direct = dl - cl;
            let scale = v_direct.abs().max(0.05);
            assert!(
                (v_grid - v_direct).abs() / scale < 1e-3,
                "t={t} y={y}: grid {v_grid} vs direct {v_direct}"
            );
        }
    }
}
