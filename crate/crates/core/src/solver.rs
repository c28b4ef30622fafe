//! Backward induction over ages on the discrete state space.
//!
//! Every choice is on-grid. For each (age, child state) the time allocations
//! are reduced to a menu: allocations with identical market hours keep only
//! the best time utility, and allocations beaten on both time utility and
//! market hours are dropped. Both reductions are exact because income is
//! nondecreasing in market hours. Ties are broken by the lowest flattened
//! choice index, ordered (birth, pl, il1, il2, it1, it2, ia_next).

use std::collections::HashMap;
use std::io::Write;

use crate::budget::{labor_income, PlMode};
use crate::error::Result;
use crate::model::HouseholdModel;
use crate::par::{map_indexed, ExecMode};
use crate::params::{child_age, ChildState, ChoicePoint, HouseholdType, StateIndex, StateLayout};
use crate::preferences::{consumption_utility, leisure_block, parenting_block};

/// How the birth decision at `j_birth` is made.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BirthRule {
    #[default]
    Choose,
    /// Every couple has the child (treated group of the penalty series).
    Always,
    /// No couple has the child (comparison group).
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolveOptions {
    pub birth: BirthRule,
    pub exec: ExecMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub layout: StateLayout,
    pub value: Vec<f64>,
    pub policy: Vec<ChoicePoint>,
    pub htype: HouseholdType,
    pub birth_rule: BirthRule,
    /// Share of states at `j_birth` where having the child beats staying childless.
    pub birth_dominance: f64,
}

impl Solution {
    pub fn value_at(&self, s: &StateIndex) -> f64 {
        self.value[self.layout.flatten(s)]
    }

    pub fn policy_at(&self, s: &StateIndex) -> ChoicePoint {
        self.policy[self.layout.flatten(s)]
    }

    /// Write one row per reachable-in-principle state.
    pub fn write_csv<W: Write>(&self, out: W, j_birth: u32) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "age", "child", "ia", "iz", "ie", "value", "il1", "il2", "it1", "it2", "ia_next", "birth", "pl",
        ])?;
        for idx in 0..self.layout.len() {
            let s = self.layout.unflatten(idx);
            if s.k == ChildState::WithChild && s.j < j_birth {
                continue;
            }
            let p = self.policy[idx];
            let ia_next = if p.is_feasible() { p.ia_next as i64 } else { -1 };
            w.write_record([
                s.j.to_string(),
                (s.k.index()).to_string(),
                s.ia.to_string(),
                s.iz.to_string(),
                s.ie.to_string(),
                self.value[idx].to_string(),
                p.il1.to_string(),
                p.il2.to_string(),
                p.it1.to_string(),
                p.it2.to_string(),
                ia_next.to_string(),
                (p.birth as u8).to_string(),
                (p.pl as u8).to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Number of (j, k, iz, ie) columns where value falls as assets rise.
    pub fn monotonicity_violations(&self, j_birth: u32) -> usize {
        let l = &self.layout;
        let mut bad = 0;
        for age in 0..l.n_ages {
            let j = l.j_entry + age as u32;
            for k in ChildState::BOTH {
                if k == ChildState::WithChild && j < j_birth {
                    continue;
                }
                for iz in 0..l.nz2 {
                    for ie in 0..l.ne2 {
                        let v = |ia| self.value[l.flatten(&StateIndex { j, k, ia, iz, ie })];
                        bad += (1..l.n_assets).filter(|&ia| v(ia) < v(ia - 1)).count();
                    }
                }
            }
        }
        bad
    }
}

/// Warm-glow value of bequeathing `a_next`.
pub fn terminal_and_bequest(a_next: f64, wg_scale: f64, wg_shift: f64, eta: f64) -> f64 {
    if wg_scale == 0.0 {
        return 0.0;
    }
    let p = 1.0 - 1.0 / eta;
    wg_scale * (a_next + wg_shift).powf(p) / p
}

/// One time allocation surviving the menu reduction.
#[derive(Debug, Clone, Copy)]
struct TimeOption {
    choice: ChoicePoint,
    market: [f64; 2],
    u_time: f64,
    order: u32,
}

/// Reduced set of time allocations at age `j` in branch `k`.
fn time_menu(model: &HouseholdModel, j: u32, k: ChildState) -> Vec<TimeOption> {
    let cal = &model.cal;
    let jc = child_age(j, k, cal.j_birth);
    let active = model.parenting_active(jc);
    let working = j < cal.j_retire;
    let exclusive = model.opts.pl_mode == PlMode::Exclusive;
    let sh = model.shifters(j, jc);
    let nursery = model.nursery_time(jc);
    let pl_ok = working && jc.is_some_and(|c| c < cal.pl_max_childage);
    let nl = model.grids.time[0].n_leisure;
    let np = if active { model.grids.time[0].n_parenting } else { 1 };

    let mut best: HashMap<(bool, u64, u64), TimeOption> = HashMap::new();
    let mut order = 0u32;
    for pl in [false, true] {
        for il1 in 0..nl {
            for il2 in 0..nl {
                for it1 in 0..np {
                    for it2 in 0..np {
                        let this = order;
                        order += 1;
                        if pl && !pl_ok {
                            continue;
                        }
                        // under exclusive leave the wife's leisure index is unused
                        if pl && exclusive && il2 > 0 {
                            continue;
                        }
                        let choice = ChoicePoint {
                            il1: il1 as u8,
                            il2: il2 as u8,
                            it1: it1 as u8,
                            it2: it2 as u8,
                            ia_next: 0,
                            birth: false,
                            pl,
                        };
                        let Some(tu) = model.grids.time_use(&choice, active, exclusive) else {
                            continue;
                        };
                        let u_time =
                            leisure_block(tu.leisure, &sh, &model.est) + parenting_block(tu.parenting, nursery, &sh, &model.est);
                        if !(u_time > f64::NEG_INFINITY) {
                            continue;
                        }
                        let market = if working { tu.market } else { [0.0, 0.0] };
                        let key = (pl, market[0].to_bits(), market[1].to_bits());
                        let cand = TimeOption {
                            choice,
                            market,
                            u_time,
                            order: this,
                        };
                        best.entry(key)
                            .and_modify(|o| {
                                if cand.u_time > o.u_time {
                                    *o = cand;
                                }
                            })
                            .or_insert(cand);
                    }
                }
            }
        }
    }
    let all: Vec<TimeOption> = best.into_values().collect();
    let mut menu: Vec<TimeOption> = all
        .iter()
        .filter(|o| {
            !all.iter().any(|p| {
                p.order != o.order
                    && p.choice.pl == o.choice.pl
                    && p.market[0] >= o.market[0]
                    && p.market[1] >= o.market[1]
                    && (p.u_time > o.u_time || (p.u_time == o.u_time && p.order < o.order))
            })
        })
        .copied()
        .collect();
    menu.sort_by_key(|o| o.order);
    menu
}

/// `s beta E[V'] + bequest` for each (iz, ia_next), laid out `iz * n_a + ia`.
fn continuation(model: &HouseholdModel, j: u32, k: ChildState, next: Option<&[f64]>) -> Vec<f64> {
    let cal = &model.cal;
    let l = &model.layout;
    let n_a = l.n_assets;
    let s = model.survival(j);
    let mut cont = vec![0.0; l.nz2 * n_a];

    if let (Some(next), true) = (next, s > 0.0) {
        let q = &model.shocks.transitory.probs;
        let branch = &next[k.index() * l.slice_len()..(k.index() + 1) * l.slice_len()];
        // integrate the iid shock first
        let mut eiid = vec![0.0; l.nz2 * n_a];
        for ia in 0..n_a {
            for iz in 0..l.nz2 {
                let mut acc = 0.0;
                for (ie, &p) in q.iter().enumerate() {
                    if p > 0.0 {
                        acc += p * branch[l.inner(ia, iz, ie)];
                    }
                }
                eiid[iz * n_a + ia] = acc;
            }
        }
        for iz in 0..l.nz2 {
            let row = model.shocks.persistent.row(iz);
            for ia in 0..n_a {
                let mut acc = 0.0;
                for (izn, &p) in row.iter().enumerate() {
                    if p > 0.0 {
                        acc += p * eiid[izn * n_a + ia];
                    }
                }
                cont[iz * n_a + ia] = s * cal.beta * acc;
            }
        }
    }
    if j > cal.j_retire + 10 && s < 1.0 {
        for ia in 0..n_a {
            let wg = terminal_and_bequest(model.grids.assets[ia], cal.wg_scale, cal.wg_shift, model.est.eta);
            let b = (1.0 - s) * cal.beta * wg;
            for iz in 0..l.nz2 {
                cont[iz * n_a + ia] += b;
            }
        }
    }
    cont
}

/// Best `(value, ia_next)` of `u_c(x - a') + cont(a')`; lowest index on ties.
#[inline]
fn best_savings(x: f64, cont: &[f64], assets: &[f64], phi_c: f64, eta: f64) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, usize::MAX);
    for (ia, &a) in assets.iter().enumerate() {
        let c = x - a;
        if !(c > 0.0) {
            break;
        }
        let v = consumption_utility(c, phi_c, eta) + cont[ia];
        if v > best.0 {
            best = (v, ia);
        }
    }
    best
}

/// Value and policy for one branch at one age, in inner-index order.
fn solve_branch(
    model: &HouseholdModel,
    j: u32,
    k: ChildState,
    next: Option<&[f64]>,
    exec: ExecMode,
) -> (Vec<f64>, Vec<ChoicePoint>) {
    let cal = &model.cal;
    let l = &model.layout;
    let n_a = l.n_assets;
    let assets = &model.grids.assets;
    let jc = child_age(j, k, cal.j_birth);
    let working = j < cal.j_retire;
    let phi_c = model.shifters(j, jc).consumption;
    let eta = model.est.eta;
    let menu = time_menu(model, j, k);
    let cont = continuation(model, j, k, next);
    let prefix_max: Vec<f64> = (0..l.nz2)
        .flat_map(|iz| {
            cont[iz * n_a..(iz + 1) * n_a].iter().scan(f64::NEG_INFINITY, |m, &v| {
                *m = m.max(v);
                Some(*m)
            })
        })
        .collect();

    let columns = map_indexed(l.nz2 * l.ne2, exec, |col| {
        let (iz, ie) = (col / l.ne2, col % l.ne2);
        let cont = &cont[iz * n_a..(iz + 1) * n_a];
        let pm = &prefix_max[iz * n_a..(iz + 1) * n_a];
        let income: Vec<f64> = menu
            .iter()
            .map(|o| {
                if working {
                    labor_income(model, j, jc, o.choice.pl, o.market, iz, ie).net()
                } else {
                    model.pension
                }
            })
            .collect();

        let mut out = Vec::with_capacity(n_a);
        let mut seed: Option<usize> = None;
        for &a in assets.iter() {
            // (value, menu position, ia_next)
            let mut best = (f64::NEG_INFINITY, usize::MAX, usize::MAX);
            let eval = |m: usize| {
                let x = model.cash_on_hand(a, income[m]);
                let (w, ia) = best_savings(x, cont, assets, phi_c, eta);
                (menu[m].u_time + w, ia)
            };
            if let Some(m) = seed {
                let (v, ia) = eval(m);
                if ia != usize::MAX {
                    best = (v, m, ia);
                }
            }
            for m in 0..menu.len() {
                if Some(m) == seed {
                    continue;
                }
                let x = model.cash_on_hand(a, income[m]);
                let n_feas = assets.partition_point(|&b| b < x);
                if n_feas == 0 {
                    continue;
                }
                let ub = menu[m].u_time + (consumption_utility(x, phi_c, eta) + pm[n_feas - 1]);
                if ub < best.0 || (ub == best.0 && m > best.1) {
                    continue;
                }
                let (v, ia) = eval(m);
                if ia == usize::MAX {
                    continue;
                }
                if v > best.0 || (v == best.0 && m < best.1) {
                    best = (v, m, ia);
                }
            }
            if best.1 == usize::MAX {
                out.push((f64::NEG_INFINITY, ChoicePoint::INFEASIBLE));
                seed = None;
            } else {
                let mut choice = menu[best.1].choice;
                choice.ia_next = best.2 as u16;
                out.push((best.0, choice));
                seed = Some(best.1);
            }
        }
        out
    });

    let mut value = vec![f64::NEG_INFINITY; l.slice_len()];
    let mut policy = vec![ChoicePoint::INFEASIBLE; l.slice_len()];
    for (col, rows) in columns.into_iter().enumerate() {
        let (iz, ie) = (col / l.ne2, col % l.ne2);
        for (ia, (v, p)) in rows.into_iter().enumerate() {
            let i = l.inner(ia, iz, ie);
            value[i] = v;
            policy[i] = p;
        }
    }
    (value, policy)
}

/// Value and policy for both branches at age `j`, given the age-`j+1` slice.
///
/// Returns `(value, policy, birth_dominance)`; the last entry is `None`
/// except at `j_birth`.
pub fn bellman_step(
    model: &HouseholdModel,
    j: u32,
    next: Option<&[f64]>,
    opts: &SolveOptions,
) -> (Vec<f64>, Vec<ChoicePoint>, Option<f64>) {
    let cal = &model.cal;
    let slice = model.layout.slice_len();
    let mut value = vec![f64::NEG_INFINITY; 2 * slice];
    let mut policy = vec![ChoicePoint::INFEASIBLE; 2 * slice];
    let mut dominance = None;

    for k in [ChildState::WithChild, ChildState::Childless] {
        if k == ChildState::WithChild && j < cal.j_birth {
            continue;
        }
        let (v, p) = solve_branch(model, j, k, next, opts.exec);
        let off = k.index() * slice;
        value[off..off + slice].copy_from_slice(&v);
        policy[off..off + slice].copy_from_slice(&p);
    }

    if j == cal.j_birth {
        let (c0, c1) = (ChildState::Childless.index() * slice, ChildState::WithChild.index() * slice);
        let mut wins = 0usize;
        for i in 0..slice {
            let (v0, v1) = (value[c0 + i], value[c1 + i]);
            let better = v1 > v0;
            wins += better as usize;
            let take = match opts.birth {
                BirthRule::Choose => better,
                BirthRule::Always => true,
                BirthRule::Never => false,
            };
            if take {
                value[c0 + i] = v1;
                let mut p = policy[c1 + i];
                if p.is_feasible() {
                    p.birth = true;
                }
                policy[c0 + i] = p;
            }
        }
        dominance = Some(wins as f64 / slice as f64);
    }
    (value, policy, dominance)
}

/// Solve all ages from `j_max` back to `j_entry`.
pub fn solve_lifecycle(model: &HouseholdModel, opts: &SolveOptions) -> Result<Solution> {
    let l = model.layout;
    let age_len = l.age_len();
    let mut value = vec![f64::NEG_INFINITY; l.len()];
    let mut policy = vec![ChoicePoint::INFEASIBLE; l.len()];
    let mut birth_dominance = f64::NAN;
    for age in (0..l.n_ages).rev() {
        let j = l.j_entry + age as u32;
        let (head, tail) = value.split_at_mut((age + 1) * age_len);
        let next = (age + 1 < l.n_ages).then(|| &tail[..age_len]);
        let (v, p, dom) = bellman_step(model, j, next, opts);
        head[age * age_len..].copy_from_slice(&v);
        policy[age * age_len..(age + 1) * age_len].copy_from_slice(&p);
        if let Some(d) = dom {
            birth_dominance = d;
        }
    }
    log::debug!("solved {} (birth dominance {:.3})", model.htype.label(), birth_dominance);
    Ok(Solution {
        layout: l,
        value,
        policy,
        htype: model.htype,
        birth_rule: opts.birth,
        birth_dominance,
    })
}
