mod common;

use common::{brute_force_toy, enumerate_state, toy_model, toy_params};
use lifecycle_core::budget::consumption_residual;
use lifecycle_core::params::{ChildState, StateIndex};
use lifecycle_core::solver::{bellman_step, terminal_and_bequest};
use lifecycle_core::{solve_lifecycle, BirthRule, ExecMode, ModelParams, Preset, SolveOptions};

#[test]
fn toy_matches_brute_force() {
    for nursery in [false, true] {
        let p = toy_params();
        let m = toy_model(&p, nursery);
        let sol = solve_lifecycle(&m, &SolveOptions::default()).unwrap();
        let oracle = brute_force_toy(&m);
        assert_eq!(oracle.len(), 15);
        for (s, v, pol) in oracle {
            let got = sol.value_at(&s);
            assert!((got - v).abs() <= 1e-12, "{s:?}: solver {got} oracle {v}");
            assert_eq!(sol.policy_at(&s), pol, "{s:?}");
        }
    }
}

#[test]
fn toy_matches_brute_force_in_literal_pl_mode() {
    let p = toy_params()
        .with_override("options.pl_mode", "literal")
        .unwrap();
    let m = toy_model(&p, false);
    let sol = solve_lifecycle(&m, &SolveOptions::default()).unwrap();
    for (s, v, pol) in brute_force_toy(&m) {
        assert!((sol.value_at(&s) - v).abs() <= 1e-12);
        assert_eq!(sol.policy_at(&s), pol);
    }
}

#[test]
fn one_period_horizon_maximizes_period_utility() {
    let p = toy_params();
    let m = toy_model(&p, false);
    let (value, policy, _) = bellman_step(&m, 30, None, &SolveOptions::default());
    let slice = m.layout.slice_len();
    let zero = |_: ChildState, _: usize| 0.0;
    for ia in 0..m.layout.n_assets {
        let (v, ch) = enumerate_state(&m, 30, ChildState::WithChild, ia, &zero);
        let i = ChildState::WithChild.index() * slice + m.layout.inner(ia, 0, 0);
        assert!((value[i] - v).abs() < 1e-12);
        assert_eq!(policy[i], ch);
    }
}

#[test]
fn forced_birth_rules() {
    let p = toy_params();
    let m = toy_model(&p, false);
    let always = solve_lifecycle(&m, &SolveOptions { birth: BirthRule::Always, ..Default::default() }).unwrap();
    let never = solve_lifecycle(&m, &SolveOptions { birth: BirthRule::Never, ..Default::default() }).unwrap();
    for ia in 0..5 {
        let s = StateIndex { j: 30, k: ChildState::Childless, ia, iz: 0, ie: 0 };
        assert!(always.policy_at(&s).birth);
        assert!(!never.policy_at(&s).birth);
        let c = StateIndex { k: ChildState::WithChild, ..s };
        assert_eq!(always.value_at(&s), always.value_at(&c));
    }
}

#[test]
fn bequest_cases() {
    assert_eq!(terminal_and_bequest(3.0, 0.0, 0.1, 0.4693), 0.0);
    let v = terminal_and_bequest(0.0, 1.0, 0.1, 0.4693);
    let p = 1.0 - 1.0 / 0.4693;
    assert!((v - 0.1f64.powf(p) / p).abs() < 1e-12);
    assert!((v - (-11.96)).abs() < 0.01);
    let mut prev = f64::NEG_INFINITY;
    for i in 0..100 {
        let b = terminal_and_bequest(i as f64 * 0.1, 0.1, 0.1, 0.4693);
        assert!(b >= prev);
        prev = b;
    }
}

fn small_desk() -> ModelParams {
    let mut p = ModelParams::preset(Preset::Desk);
    p.grid.n_assets = 9;
    p.calibrated.j_max = 70;
    p
}

#[test]
fn retirement_policy_ignores_shocks() {
    let p = small_desk();
    let tables = lifecycle_core::data::synth_defaults();
    let htype = p.types.types()[0];
    let m = lifecycle_core::simulate::build_model(&p, &tables, htype).unwrap();
    let sol = solve_lifecycle(&m, &SolveOptions::default()).unwrap();
    let l = m.layout;
    for j in [65u32, 68, 70] {
        for k in ChildState::BOTH {
            for ia in 0..l.n_assets {
                let base = sol.policy_at(&StateIndex { j, k, ia, iz: 0, ie: 0 });
                for iz in 0..l.nz2 {
                    for ie in 0..l.ne2 {
                        assert_eq!(sol.policy_at(&StateIndex { j, k, ia, iz, ie }), base);
                    }
                }
            }
        }
    }
}

#[test]
fn stored_policies_are_feasible_and_monotone() {
    let p = small_desk();
    let tables = lifecycle_core::data::synth_defaults();
    for htype in p.types.types() {
        let m = lifecycle_core::simulate::build_model(&p, &tables, htype).unwrap();
        let sol = solve_lifecycle(&m, &SolveOptions::default()).unwrap();
        assert_eq!(sol.monotonicity_violations(p.calibrated.j_birth), 0);
        for idx in 0..m.layout.len() {
            let s = m.layout.unflatten(idx);
            if s.k == ChildState::WithChild && s.j < p.calibrated.j_birth {
                continue;
            }
            let ch = sol.policy[idx];
            assert!(ch.is_feasible(), "{s:?}");
            let f = consumption_residual(&m, &s, &ch).expect("stored policy must be feasible");
            assert!(f.consumption > 0.0);
            assert!(f.identity_gap().abs() < 1e-10);
        }
    }
}

#[test]
fn parallel_and_sequential_agree_bitwise() {
    let p = small_desk();
    let tables = lifecycle_core::data::synth_defaults();
    let m = lifecycle_core::simulate::build_model(&p, &tables, p.types.types()[3]).unwrap();
    let a = solve_lifecycle(&m, &SolveOptions { exec: ExecMode::Sequential, ..Default::default() }).unwrap();
    let b = lifecycle_core::par::with_workers(4, || {
        solve_lifecycle(&m, &SolveOptions { exec: ExecMode::Parallel, ..Default::default() }).unwrap()
    });
    assert_eq!(a.policy, b.policy);
    assert!(a.value.iter().zip(&b.value).all(|(x, y)| x.to_bits() == y.to_bits()));
}
