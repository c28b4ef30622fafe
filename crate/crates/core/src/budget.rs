//! Earnings, transfers, fees, pensions and the consumption residual.

use serde::{Deserialize, Serialize};

use crate::model::HouseholdModel;
use crate::params::{child_age, CalibratedParams, ChildState, ChoicePoint, StateIndex};
use crate::shocks::productivity_multiplier;

/// How a parental-leave year interacts with the wife's own work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlMode {
    /// Leave sets the wife's market hours to zero; the benefit replaces
    /// part of her reference earnings.
    #[default]
    Exclusive,
    /// Benefit is paid on top of whatever the wife earns.
    Literal,
}

/// Annual flows behind one state-choice pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FlowBreakdown {
    pub assets: f64,
    pub next_assets: f64,
    pub earn_1: f64,
    pub earn_2: f64,
    pub pl_income: f64,
    pub nursery_cost: f64,
    pub pension: f64,
    pub capital_income: f64,
    pub consumption: f64,
}

impl FlowBreakdown {
    /// Sources minus uses; zero up to rounding for any consistent breakdown.
    pub fn identity_gap(&self) -> f64 {
        let sources = self.assets + self.capital_income + self.earn_1 + self.earn_2 + self.pl_income + self.pension;
        let uses = self.consumption + self.nursery_cost + self.next_assets;
        sources - uses
    }
}

/// Market hours `1 - L - T - hw`, or `None` when the day is over-allocated.
pub fn market_hours(leisure: f64, parenting: f64, housework: f64) -> Option<f64> {
    let m = 1.0 - leisure - parenting - housework;
    (m >= 0.0).then_some(m)
}

/// Net labor earnings `w (1 - tau) kappa exp(z + e) market`.
#[inline]
pub fn spouse_earnings(kappa: f64, multiplier: f64, market: f64, cal: &CalibratedParams) -> f64 {
    cal.wage * (1.0 - cal.tax) * kappa * multiplier * market
}

/// Parental-leave benefit, paid on the wife's reference hours.
pub fn pl_benefit(jc: Option<u32>, pl: bool, kappa_2: f64, multiplier_2: f64, cal: &CalibratedParams) -> f64 {
    match jc {
        Some(c) if pl && c < cal.pl_max_childage => {
            cal.rr_pl * spouse_earnings(kappa_2, multiplier_2, cal.h_ref - cal.hw_hours_2, cal)
        }
        _ => 0.0,
    }
}

/// Nursery fee: a share of the wife's net earnings while the child attends.
pub fn nursery_fee(jc: Option<u32>, earn_2: f64, uses_nursery: bool, cal: &CalibratedParams) -> f64 {
    match jc {
        Some(c) if uses_nursery && (cal.nursery_min_childage..=cal.nursery_max_childage).contains(&c) => {
            cal.fee_rate * earn_2
        }
        _ => 0.0,
    }
}

/// Whether the child attends nursery this period.
pub fn in_nursery(jc: Option<u32>, uses_nursery: bool, cal: &CalibratedParams) -> bool {
    uses_nursery && jc.is_some_and(|c| (cal.nursery_min_childage..=cal.nursery_max_childage).contains(&c))
}

/// Household pension, fixed by productivity at the retirement age.
pub fn pension(kappa_retire: [f64; 2], cal: &CalibratedParams) -> f64 {
    cal.pension_rate
        * cal.wage
        * (1.0 - cal.tax)
        * (kappa_retire[0] * (cal.h_ref - cal.hw_hours_1) + kappa_retire[1] * (cal.h_ref - cal.hw_hours_2))
}

/// Non-asset income of a working-age period.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LaborIncome {
    pub earn: [f64; 2],
    pub pl_income: f64,
    pub nursery_cost: f64,
}

impl LaborIncome {
    #[inline]
    pub fn net(&self) -> f64 {
        self.earn[0] + self.earn[1] + self.pl_income - self.nursery_cost
    }
}

/// Labor income for given market hours, shocks and leave status.
#[inline]
pub fn labor_income(
    model: &HouseholdModel,
    j: u32,
    jc: Option<u32>,
    pl: bool,
    market: [f64; 2],
    iz: usize,
    ie: usize,
) -> LaborIncome {
    let cal = &model.cal;
    let z = model.shocks.persistent.nodes[iz];
    let e = model.shocks.transitory.nodes[ie];
    let mult = [productivity_multiplier(z, e, 0), productivity_multiplier(z, e, 1)];
    let kappa = [model.inputs.kappa(j, 0), model.inputs.kappa(j, 1)];
    let earn = [
        spouse_earnings(kappa[0], mult[0], market[0], cal),
        spouse_earnings(kappa[1], mult[1], market[1], cal),
    ];
    LaborIncome {
        earn,
        pl_income: pl_benefit(jc, pl, kappa[1], mult[1], cal),
        nursery_cost: nursery_fee(jc, earn[1], model.htype.uses_nursery, cal),
    }
}

/// Flows implied by a state-choice pair, or `None` if the choice violates a
/// time constraint, is not available at this state, or leaves `c <= 0`.
pub fn consumption_residual(model: &HouseholdModel, state: &StateIndex, choice: &ChoicePoint) -> Option<FlowBreakdown> {
    let cal = &model.cal;
    if !choice.is_feasible() || choice.ia_next as usize >= model.grids.assets.len() {
        return None;
    }
    if choice.birth && !(state.j == cal.j_birth && state.k == ChildState::Childless) {
        return None;
    }
    if state.k == ChildState::WithChild && state.j < cal.j_birth {
        return None;
    }
    let k = if choice.birth { ChildState::WithChild } else { state.k };
    let jc = child_age(state.j, k, cal.j_birth);
    if choice.pl && !jc.is_some_and(|c| c < cal.pl_max_childage) {
        return None;
    }
    let active = model.parenting_active(jc);
    let time = model.grids.time_use(choice, active, model.opts.pl_mode == PlMode::Exclusive)?;

    let a = model.grids.assets[state.ia];
    let a_next = model.grids.assets[choice.ia_next as usize];
    let mut flows = FlowBreakdown {
        assets: a,
        next_assets: a_next,
        capital_income: cal.r * a,
        ..Default::default()
    };
    if state.j < cal.j_retire {
        let inc = labor_income(model, state.j, jc, choice.pl, time.market, state.iz, state.ie);
        flows.earn_1 = inc.earn[0];
        flows.earn_2 = inc.earn[1];
        flows.pl_income = inc.pl_income;
        flows.nursery_cost = inc.nursery_cost;
        flows.consumption = model.cash_on_hand(a, inc.net()) - a_next;
    } else {
        flows.pension = model.pension;
        flows.consumption = model.cash_on_hand(a, model.pension) - a_next;
    }
    (flows.consumption > 0.0).then_some(flows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cal() -> CalibratedParams {
        CalibratedParams {
            tax: 0.2,
            ..Default::default()
        }
    }

    #[test]
    fn market_hours_cases() {
        let m = market_hours(0.5, 0.167, 0.125).unwrap();
        assert!((m - 0.208).abs() < 1e-12);
        assert!((m * 24.0 - 5.0).abs() < 0.01);
        assert_eq!(market_hours(0.875, 0.0, 0.125), Some(0.0));
        assert_eq!(market_hours(0.9, 0.1, 0.125), None);
    }

    #[test]
    fn earnings_cases() {
        let c = cal();
        let e = spouse_earnings(1.0, 1.0, 0.2083, &c);
        assert!((e - 0.8 * 0.2083).abs() < 1e-15);
        assert!((e - 0.1667).abs() < 1e-4);
        assert_eq!(spouse_earnings(1.0, 1.0, 0.0, &c), 0.0);
        let full_tax = CalibratedParams { tax: 1.0, ..c };
        assert_eq!(spouse_earnings(1.0, 1.3, 0.4, &full_tax), 0.0);
    }

    #[test]
    fn pl_benefit_cases() {
        let c = cal();
        let b = pl_benefit(Some(0), true, 1.0, 1.0, &c);
        let expected = 0.5 * 0.8 * (1.0 / 3.0 - 0.125);
        assert!((b - expected).abs() < 1e-15);
        assert!((b - 0.0833).abs() < 1e-4);
        assert_eq!(pl_benefit(Some(0), false, 1.0, 1.0, &c), 0.0);
        assert_eq!(pl_benefit(Some(2), true, 1.0, 1.0, &c), 0.0);
        assert_eq!(pl_benefit(None, true, 1.0, 1.0, &c), 0.0);
    }

    #[test]
    fn nursery_fee_cases() {
        let c = cal();
        let f = nursery_fee(Some(3), 0.1667, true, &c);
        assert!((f - 0.25 * 0.1667).abs() < 1e-15);
        assert!((f - 0.0417).abs() < 1e-4);
        assert_eq!(nursery_fee(Some(1), 0.1667, true, &c), 0.0);
        assert_eq!(nursery_fee(Some(4), 0.1667, false, &c), 0.0);
        assert_eq!(nursery_fee(Some(7), 0.1667, true, &c), 0.0);
    }

    #[test]
    fn pension_cases() {
        let no_tax = CalibratedParams { tax: 0.0, ..cal() };
        let p = pension([1.0, 1.0], &no_tax);
        assert!((p - 0.3 * 2.0 * (1.0 / 3.0 - 0.125)).abs() < 1e-15);
        assert!((p - 0.125).abs() < 1e-12);
        let zero = CalibratedParams {
            pension_rate: 0.0,
            ..no_tax
        };
        assert_eq!(pension([1.0, 1.0], &zero), 0.0);
        assert!((pension([1.0, 1.0], &cal()) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn identity_gap_zero_for_balanced_flows() {
        let f = FlowBreakdown {
            assets: 1.0,
            next_assets: 1.0,
            capital_income: 0.05,
            pension: 0.125,
            consumption: 0.175,
            ..Default::default()
        };
        assert!(f.identity_gap().abs() < 1e-15);
    }
}
