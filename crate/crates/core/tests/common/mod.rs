#![allow(dead_code)]

use lifecycle_core::budget::{labor_income, PlMode};
use lifecycle_core::model::{AgeProfileInputs, HouseholdModel};
use lifecycle_core::params::{child_age, ChildState, ChoicePoint, Education, HouseholdType, StateIndex};
use lifecycle_core::preferences::period_utility;
use lifecycle_core::solver::terminal_and_bequest;
use lifecycle_core::{ModelParams, Preset};

/// Two ages (29, 30), birth at 30, 5 assets, no shocks, 3-point time grids.
pub fn toy_params() -> ModelParams {
    let mut p = ModelParams::preset(Preset::Paper);
    p.calibrated.j_entry = 29;
    p.calibrated.j_birth = 30;
    p.calibrated.j_max = 30;
    p.calibrated.j_retire = 31;
    p.grid.n_assets = 5;
    p.grid.asset_max = 2.0;
    p.grid.n_z = 1;
    p.grid.n_e = 1;
    p.grid.n_leisure = 3;
    p.grid.n_parenting = 3;
    p
}

pub fn toy_model(p: &ModelParams, uses_nursery: bool) -> HouseholdModel {
    let htype = HouseholdType {
        education: Education::College,
        uses_nursery,
        weight: 1.0,
    };
    let inputs = AgeProfileInputs {
        j_entry: 29,
        kappa: [vec![1.1, 1.2], vec![0.9, 0.85]],
        survival: vec![0.9, 0.8],
    };
    HouseholdModel::new(p, htype, inputs).unwrap()
}

/// Value of every choice at one state, by exhaustive enumeration, in
/// flattened (birth, pl, il1, il2, it1, it2, ia_next) order.
pub fn enumerate_state(
    m: &HouseholdModel,
    j: u32,
    k: ChildState,
    ia: usize,
    cont: &dyn Fn(ChildState, usize) -> f64,
) -> (f64, ChoicePoint) {
    let cal = &m.cal;
    let nl = m.grids.time[0].n_leisure;
    let np = m.grids.time[0].n_parenting;
    let n_a = m.grids.assets.len();
    let mut best = (f64::NEG_INFINITY, ChoicePoint::INFEASIBLE);
    let births: &[bool] = if j == cal.j_birth && k == ChildState::Childless { &[false, true] } else { &[false] };
    for &birth in births {
        let kk = if birth { ChildState::WithChild } else { k };
        let jc = child_age(j, kk, cal.j_birth);
        let active = m.parenting_active(jc);
        let sh = m.shifters(j, jc);
        for pl in [false, true] {
            if pl && !jc.is_some_and(|c| c < cal.pl_max_childage) {
                continue;
            }
            for il1 in 0..nl {
                for il2 in 0..nl {
                    for it1 in 0..np {
                        for it2 in 0..np {
                            if !active && (it1 > 0 || it2 > 0) {
                                continue;
                            }
                            for ian in 0..n_a {
                                let ch = ChoicePoint {
                                    il1: il1 as u8,
                                    il2: il2 as u8,
                                    it1: it1 as u8,
                                    it2: it2 as u8,
                                    ia_next: ian as u16,
                                    birth,
                                    pl,
                                };
                                let Some(tu) = m.grids.time_use(&ch, active, m.opts.pl_mode == PlMode::Exclusive) else {
                                    continue;
                                };
                                let a = m.grids.assets[ia];
                                let income = if j < cal.j_retire {
                                    labor_income(m, j, jc, pl, tu.market, 0, 0).net()
                                } else {
                                    m.pension
                                };
                                let c = (1.0 + cal.r) * a + income - m.grids.assets[ian];
                                if !(c > 0.0) {
                                    continue;
                                }
                                let v = period_utility(c, tu.leisure, tu.parenting, m.nursery_time(jc), &sh, &m.est)
                                    + cont(kk, ian);
                                if v > best.0 {
                                    best = (v, ch);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    best
}

/// Brute-force solution of the toy: `(value, policy)` keyed by flat index.
pub fn brute_force_toy(m: &HouseholdModel) -> Vec<(StateIndex, f64, ChoicePoint)> {
    let cal = m.cal;
    let n_a = m.grids.assets.len();
    let mut out = Vec::new();
    // last age: only the bequest window could continue, and it is closed
    let terminal = |_k: ChildState, ian: usize| {
        let s = 0.0;
        if 30 > cal.j_retire + 10 {
            (1.0 - s) * cal.beta * terminal_and_bequest(m.grids.assets[ian], cal.wg_scale, cal.wg_shift, m.est.eta)
        } else {
            0.0
        }
    };
    let mut v30 = [vec![0.0; n_a], vec![0.0; n_a]];
    for k in ChildState::BOTH {
        for ia in 0..n_a {
            let (v, p) = enumerate_state(m, 30, k, ia, &terminal);
            v30[k.index()][ia] = v;
            out.push((StateIndex { j: 30, k, ia, iz: 0, ie: 0 }, v, p));
        }
    }
    let s29 = m.inputs.survival(29);
    let cont29 = |k: ChildState, ian: usize| s29 * cal.beta * v30[k.index()][ian];
    for ia in 0..n_a {
        let (v, p) = enumerate_state(m, 29, ChildState::Childless, ia, &cont29);
        out.push((StateIndex { j: 29, k: ChildState::Childless, ia, iz: 0, ie: 0 }, v, p));
    }
    out
}
