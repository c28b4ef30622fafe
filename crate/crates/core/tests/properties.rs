mod common;

use common::{toy_model, toy_params};
use lifecycle_core::budget::consumption_residual;
use lifecycle_core::optim::reflect_unit;
use lifecycle_core::params::{ChildState, ChoicePoint, StateIndex};
use lifecycle_core::preferences::{consumption_utility, leisure_block, parenting_block, PeriodShifters, ShifterSchedule};
use lifecycle_core::shocks::{discretize_var, ShockParams};
use lifecycle_core::simulate::{aggregate_types, AgeProfile, AgeRow};
use lifecycle_core::ModelParams;
use proptest::prelude::*;

fn shifters(j: u32, jc: Option<u32>) -> PeriodShifters {
    let p = ModelParams::default();
    PeriodShifters::at(j, jc, &p.estimated, &p.calibrated, &ShifterSchedule::default())
}

fn choice(il1: u8, il2: u8, it1: u8, it2: u8, ia_next: u16, pl: bool) -> ChoicePoint {
    ChoicePoint {
        il1,
        il2,
        it1,
        it2,
        ia_next,
        birth: false,
        pl,
    }
}

fn row_strategy(age: u32) -> impl Strategy<Value = AgeRow> {
    prop::collection::vec(-1e6f64..1e6, 22).prop_map(move |v| AgeRow::from_array(age, &v))
}

proptest! {
    #[test]
    fn utility_increases_in_every_argument(
        c in 0.01f64..10.0,
        dc in 1e-6f64..1.0,
        l in (0.05f64..0.8, 0.05f64..0.8),
        t in (0.02f64..0.5, 0.02f64..0.5),
        d in 1e-4f64..0.1,
        j in 20u32..60,
        jc in 0u32..=18,
    ) {
        let sh = shifters(j, Some(jc));
        let est = ModelParams::default().estimated;
        prop_assert!(consumption_utility(c + dc, sh.consumption, est.eta) > consumption_utility(c, sh.consumption, est.eta));
        let l0 = [l.0, l.1];
        let lb = leisure_block(l0, &sh, &est);
        prop_assert!(leisure_block([l.0 + d, l.1], &sh, &est) > lb);
        prop_assert!(leisure_block([l.0, l.1 + d], &sh, &est) > lb);
        let t0 = [t.0, t.1];
        let pb = parenting_block(t0, 0.0, &sh, &est);
        prop_assert!(parenting_block([t.0 + d, t.1], 0.0, &sh, &est) >= pb);
        prop_assert!(parenting_block([t.0, t.1 + d], 0.0, &sh, &est) > pb);
    }

    #[test]
    fn parenting_block_vanishes_without_a_young_child(jc in 19u32..40, t in (0.02f64..0.5, 0.02f64..0.5)) {
        let est = ModelParams::default().estimated;
        prop_assert_eq!(parenting_block([t.0, t.1], 0.1, &shifters(50, Some(jc)), &est), 0.0);
        prop_assert_eq!(parenting_block([t.0, t.1], 0.1, &shifters(30, None), &est), 0.0);
    }

    #[test]
    fn consumption_rises_with_assets_and_falls_with_saving(
        ia in 0usize..4,
        ian in 0u16..4,
        il in (0u8..3, 0u8..3),
        it in (0u8..3, 0u8..3),
        child in any::<bool>(),
        nursery in any::<bool>(),
    ) {
        let m = toy_model(&toy_params(), nursery);
        let k = if child { ChildState::WithChild } else { ChildState::Childless };
        let s = StateIndex { j: 30, k, ia, iz: 0, ie: 0 };
        let s_up = StateIndex { ia: ia + 1, ..s };
        let ch = choice(il.0, il.1, it.0, it.1, ian, false);
        let ch_up = ChoicePoint { ia_next: ian + 1, ..ch };
        if let (Some(a), Some(b)) = (consumption_residual(&m, &s, &ch), consumption_residual(&m, &s_up, &ch)) {
            prop_assert!(b.consumption > a.consumption);
            prop_assert!(a.identity_gap().abs() < 1e-12);
        }
        if let (Some(a), Some(b)) = (consumption_residual(&m, &s, &ch), consumption_residual(&m, &s, &ch_up)) {
            prop_assert!(b.consumption < a.consumption);
        }
    }

    #[test]
    fn leave_excludes_wife_earnings(
        ia in 0usize..5,
        ian in 0u16..5,
        il in (0u8..3, 0u8..3),
        it in (0u8..3, 0u8..3),
    ) {
        let m = toy_model(&toy_params(), false);
        let s = StateIndex { j: 30, k: ChildState::WithChild, ia, iz: 0, ie: 0 };
        for pl in [false, true] {
            if let Some(f) = consumption_residual(&m, &s, &choice(il.0, il.1, it.0, it.1, ian, pl)) {
                if f.pl_income > 0.0 {
                    prop_assert_eq!(f.earn_2, 0.0);
                }
                prop_assert_eq!(f.pl_income > 0.0, pl);
            }
        }
    }

    #[test]
    fn tauchen_rows_are_distributions(
        r1 in 0.0f64..0.98,
        r2 in 0.0f64..0.98,
        v1 in 0.001f64..0.2,
        v2 in 0.001f64..0.2,
        corr in -0.9f64..0.9,
        n in 1usize..5,
    ) {
        let p = ShockParams {
            rho11: r1,
            rho22: r2,
            sigma_eps_11: v1,
            sigma_eps_22: v2,
            sigma_eps_12: corr * (v1 * v2).sqrt(),
            ..Default::default()
        };
        let c = discretize_var(&p, n, p.width_for(n)).unwrap();
        for i in 0..c.len() {
            let s: f64 = c.row(i).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(c.row(i).iter().all(|q| *q >= 0.0));
        }
        prop_assert!((c.stationary.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn profile_csv_round_trips(rows in prop::collection::vec(row_strategy(0), 1..6)) {
        let p = AgeProfile {
            rows: rows.into_iter().enumerate().map(|(i, r)| AgeRow { age: 20 + i as u32, ..r }).collect(),
        };
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        prop_assert_eq!(AgeProfile::read_csv(buf.as_slice()).unwrap(), p);
    }

    #[test]
    fn aggregation_is_linear(a in row_strategy(40), b in row_strategy(40), w in 0.0f64..=1.0) {
        let pa = AgeProfile { rows: vec![a] };
        let pb = AgeProfile { rows: vec![b] };
        let m = aggregate_types(&[&pa, &pb], &[w, 1.0 - w]).unwrap();
        let (x, y, z) = (a.to_array(), b.to_array(), m.rows[0].to_array());
        for i in 2..22 {
            let want = w * x[i] + (1.0 - w) * y[i];
            prop_assert!((z[i] - want).abs() <= 1e-9 * (1.0 + want.abs()), "field {}: {} vs {}", i, z[i], want);
        }
    }

    #[test]
    fn reflection_lands_in_the_box(x in -100.0f64..100.0, y in 0.0f64..=1.0) {
        let r = reflect_unit(x);
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert_eq!(reflect_unit(y), y);
    }
}
