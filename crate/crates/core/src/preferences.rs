//! Period utility of the couple and the age-dependent preference shifters.

use serde::{Deserialize, Serialize};

use crate::params::{CalibratedParams, EstimatedParams, Spouse};

/// How the leisure and parenting shifters move with parent and child age.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShifterSchedule {
    /// Yearly increase of the leisure shifter for couples with a child.
    pub leisure_slope_child: f64,
    pub leisure_slope_nochild: f64,
    /// Child age at which the parenting shifter reaches its floor.
    pub parenting_decline_age: u32,
    /// Total log-scale decline of the parenting shifter from its peak.
    pub parenting_floor_offset: f64,
    /// Last child age of a flat peak; 0 gives a decline starting at birth.
    pub parenting_plateau_end: u32,
    /// Consumption shifter of childless couples (normalization).
    pub phi_c_nochild: f64,
}

impl Default for ShifterSchedule {
    fn default() -> Self {
        Self {
            leisure_slope_child: 0.05,
            leisure_slope_nochild: 0.03,
            parenting_decline_age: 18,
            parenting_floor_offset: 2.0,
            parenting_plateau_end: 0,
            phi_c_nochild: -1.0,
        }
    }
}

/// Leisure shifter of one spouse at parent age `j`.
pub fn shifter_leisure(
    j: u32,
    spouse: Spouse,
    has_child: bool,
    est: &EstimatedParams,
    cal: &CalibratedParams,
    sched: &ShifterSchedule,
) -> f64 {
    let (intercept, slope) = match (spouse, has_child) {
        (Spouse::Husband, true) => (est.phi_l1_child, sched.leisure_slope_child),
        (Spouse::Wife, true) => (est.phi_l2_child, sched.leisure_slope_child),
        (Spouse::Husband, false) => (est.phi_l1_nochild, sched.leisure_slope_nochild),
        (Spouse::Wife, false) => (est.phi_l2_nochild, sched.leisure_slope_nochild),
    };
    let years = j.min(cal.j_retire).saturating_sub(cal.j_entry);
    intercept + slope * years as f64
}

/// Parenting shifter of one spouse at child age `jc`.
pub fn shifter_parenting(jc: u32, spouse: Spouse, est: &EstimatedParams, sched: &ShifterSchedule) -> f64 {
    let peak = match spouse {
        Spouse::Husband => est.phi_t1,
        Spouse::Wife => est.phi_t2,
    };
    let end = sched.parenting_decline_age;
    let start = sched.parenting_plateau_end.min(end);
    if end == start {
        return peak;
    }
    let progress = jc.clamp(start, end) - start;
    peak - sched.parenting_floor_offset * progress as f64 / (end - start) as f64
}

/// Shifters in effect for one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodShifters {
    pub consumption: f64,
    pub leisure: [f64; 2],
    /// `None` when the parenting block is inactive.
    pub parenting: Option<[f64; 2]>,
}

impl PeriodShifters {
    /// Shifters at parent age `j` given the child age, if any.
    pub fn at(
        j: u32,
        child_age: Option<u32>,
        est: &EstimatedParams,
        cal: &CalibratedParams,
        sched: &ShifterSchedule,
    ) -> Self {
        let has_child = child_age.is_some();
        let consumption = if has_child { est.phi_c_child } else { sched.phi_c_nochild };
        let leisure = Spouse::BOTH.map(|s| shifter_leisure(j, s, has_child, est, cal, sched));
        let parenting = child_age
            .filter(|&jc| jc <= cal.support_max_childage)
            .map(|jc| Spouse::BOTH.map(|s| shifter_parenting(jc, s, est, sched)));
        Self {
            consumption,
            leisure,
            parenting,
        }
    }
}

/// `exp(phi) c^(1-1/eta) / (1-1/eta)`; `-inf` for `c <= 0`.
#[inline]
pub fn consumption_utility(c: f64, phi_c: f64, eta: f64) -> f64 {
    if !(c > 0.0) {
        return f64::NEG_INFINITY;
    }
    let p = 1.0 - 1.0 / eta;
    phi_c.exp() * c.powf(p) / p
}

/// CES disutility block `-(1/(1-rho)) [w1 x1^(1-1/psi1) + w2 x2^(1-1/psi2)]^(1-rho)`.
#[inline]
fn ces_block(x: [f64; 2], phi: [f64; 2], psi: [f64; 2], rho: f64) -> f64 {
    if !(x[0] > 0.0 && x[1] > 0.0) {
        return f64::NEG_INFINITY;
    }
    let agg = phi[0].exp() * x[0].powf(1.0 - 1.0 / psi[0]) + phi[1].exp() * x[1].powf(1.0 - 1.0 / psi[1]);
    -agg.powf(1.0 - rho) / (1.0 - rho)
}

pub fn leisure_block(leisure: [f64; 2], sh: &PeriodShifters, est: &EstimatedParams) -> f64 {
    ces_block(leisure, sh.leisure, [est.psi_l1, est.psi_l2], est.rho_l)
}

/// Parenting block; the wife's argument is `T2 + nursery`. Zero when inactive.
pub fn parenting_block(parenting: [f64; 2], nursery: f64, sh: &PeriodShifters, est: &EstimatedParams) -> f64 {
    match sh.parenting {
        None => 0.0,
        Some(phi) => ces_block(
            [parenting[0], parenting[1] + nursery],
            phi,
            [est.psi_t1, est.psi_t2],
            est.rho_t,
        ),
    }
}

/// Period utility of the couple. Out-of-domain arguments give `-inf`.
pub fn period_utility(
    c: f64,
    leisure: [f64; 2],
    parenting: [f64; 2],
    nursery: f64,
    sh: &PeriodShifters,
    est: &EstimatedParams,
) -> f64 {
    consumption_utility(c, sh.consumption, est.eta)
        + leisure_block(leisure, sh, est)
        + parenting_block(parenting, nursery, sh, est)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> (EstimatedParams, CalibratedParams, ShifterSchedule) {
        (
            EstimatedParams::default(),
            CalibratedParams::default(),
            ShifterSchedule::default(),
        )
    }

    #[test]
    fn leisure_shifter_values() {
        let (est, cal, sched) = table();
        assert_eq!(shifter_leisure(20, Spouse::Husband, true, &est, &cal, &sched), -8.7970);
        assert_eq!(shifter_leisure(20, Spouse::Wife, false, &est, &cal, &sched), -8.8798);
        let v = shifter_leisure(30, Spouse::Husband, true, &est, &cal, &sched);
        assert!((v - (-8.297)).abs() < 1e-12);
        // flat after retirement
        assert_eq!(
            shifter_leisure(65, Spouse::Wife, true, &est, &cal, &sched),
            shifter_leisure(90, Spouse::Wife, true, &est, &cal, &sched)
        );
    }

    #[test]
    fn parenting_shifter_values() {
        let (est, _, sched) = table();
        assert_eq!(shifter_parenting(0, Spouse::Wife, &est, &sched), -3.4116);
        assert!((shifter_parenting(18, Spouse::Wife, &est, &sched) - (-5.4116)).abs() < 1e-12);
        assert!((shifter_parenting(9, Spouse::Wife, &est, &sched) - (-4.4116)).abs() < 1e-12);
        assert_eq!(shifter_parenting(30, Spouse::Wife, &est, &sched), shifter_parenting(18, Spouse::Wife, &est, &sched));
        let flat = ShifterSchedule {
            parenting_plateau_end: 3,
            ..sched
        };
        assert_eq!(shifter_parenting(3, Spouse::Wife, &est, &flat), -3.4116);
        assert!(shifter_parenting(4, Spouse::Wife, &est, &flat) < -3.4116);
    }

    #[test]
    fn consumption_term_oracle() {
        let est = EstimatedParams::default();
        let expected = (-1.0f64).exp() / (1.0 - 1.0 / 0.4693);
        let got = consumption_utility(1.0, -1.0, est.eta);
        assert!((got - expected).abs() < 1e-15);
        assert!((got - (-0.3254)).abs() < 1e-4);
        let (_, cal, sched) = table();
        let sh = PeriodShifters::at(25, None, &est, &cal, &sched);
        let u = period_utility(1.0, [0.5, 0.5], [0.0, 0.0], 0.0, &sh, &est);
        let lb = leisure_block([0.5, 0.5], &sh, &est);
        assert!(lb < 0.0);
        assert!((u - (got + lb)).abs() < 1e-15);
    }

    #[test]
    fn inactive_parenting_ignores_time() {
        let (est, cal, sched) = table();
        let sh = PeriodShifters::at(50, Some(20), &est, &cal, &sched);
        assert!(sh.parenting.is_none());
        let a = period_utility(0.7, [0.4, 0.4], [0.1, 0.3], 0.167, &sh, &est);
        let b = period_utility(0.7, [0.4, 0.4], [0.0, 0.0], 0.0, &sh, &est);
        assert_eq!(a, b);
    }

    #[test]
    fn utility_increasing_in_consumption() {
        let (est, cal, sched) = table();
        let sh = PeriodShifters::at(33, Some(3), &est, &cal, &sched);
        let u1 = period_utility(0.4, [0.3, 0.3], [0.05, 0.2], 0.0, &sh, &est);
        let u2 = period_utility(0.8, [0.3, 0.3], [0.05, 0.2], 0.0, &sh, &est);
        assert!(u2 > u1);
    }

    #[test]
    fn out_of_domain_is_neg_infinity() {
        let (est, cal, sched) = table();
        let sh = PeriodShifters::at(31, Some(1), &est, &cal, &sched);
        assert_eq!(period_utility(0.0, [0.3, 0.3], [0.1, 0.1], 0.0, &sh, &est), f64::NEG_INFINITY);
        assert_eq!(period_utility(1.0, [0.0, 0.3], [0.1, 0.1], 0.0, &sh, &est), f64::NEG_INFINITY);
        assert_eq!(period_utility(1.0, [0.3, 0.3], [0.0, 0.1], 0.0, &sh, &est), f64::NEG_INFINITY);
        // leisure -> 0 drives utility down without bound
        let a = period_utility(1.0, [1e-3, 0.3], [0.1, 0.1], 0.0, &sh, &est);
        let b = period_utility(1.0, [1e-5, 0.3], [0.1, 0.1], 0.0, &sh, &est);
        assert!(b < a && b < -1e3);
    }
}
