mod common;

use mslp_core::fixtures::{desk3, desk3_deterministic};
use mslp_core::instance::apply_dynamics;
use mslp_core::linalg::dot;
use mslp_core::oracle::{solve_extensive, solve_instance, DEFAULT_PATH_CAP};
use mslp_core::process::SupportSampler;
use mslp_core::sddp::{
    empty_pools, lower_bound, sddp_backward, sddp_forward, sddp_run, simulate, solve_stage, SddpConfig,
};
use mslp_core::stage::solve_myopic;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn single_period_deterministic_matches_extensive() {
    let inst = common::newsvendor(&[3.0]);
    let exact = solve_instance(&inst).unwrap();
    assert!((exact.value - 3.0).abs() < 1e-12);
    let res = sddp_run(&inst, &SddpConfig::default()).unwrap();
    assert!(res.converged);
    assert!((res.lower_bounds.last().unwrap() - exact.value).abs() < 1e-9);
    let tr = simulate(&inst, &res.pools, &[0, 0]).unwrap();
    let cost: f64 = (0..=1).map(|t| inst.stage_cost(t, &tr.states[t], &tr.decisions[t])).sum();
    assert!((cost - exact.value).abs() < 1e-9);
}

#[test]
fn zero_cost_instance_has_zero_objective() {
    let mut inst = common::newsvendor(&[2.0, 5.0]);
    for s in &mut inst.stages {
        s.decision_cost.iter_mut().for_each(|c| *c = 0.0);
    }
    let res = sddp_run(&inst, &SddpConfig::default()).unwrap();
    assert_eq!(*res.lower_bounds.last().unwrap(), 0.0);
    let tr = simulate(&inst, &res.pools, &[0, 1]).unwrap();
    for t in 0..=1 {
        assert!(inst.is_feasible(t, &inst.support[t].observations[tr.observations[t]], &tr.states[t], &tr.decisions[t], 1e-9));
    }
}

#[test]
fn first_forward_pass_is_myopic() {
    let inst = desk3();
    let pools = empty_pools(&inst);
    let mut sampler = SupportSampler::new(&inst, 0);
    for tr in sddp_forward(&inst, &pools, 5, &mut sampler).unwrap() {
        for t in 0..=inst.horizon() {
            let obs = &inst.support[t].observations[tr.observations[t]];
            let myopic = solve_myopic(&inst, t, obs, &tr.states[t]).unwrap();
            let d = &inst.stages[t].decision_cost;
            assert!((dot(d, &tr.decisions[t]) - dot(d, &myopic.decision)).abs() < 1e-12);
        }
    }
}

#[test]
fn terminal_cut_matches_dual_vertex_enumeration() {
    let inst = common::newsvendor(&[2.0, 4.0]);
    let pools = empty_pools(&inst);
    let s = &inst.stages[1];
    for obs in &inst.support[1].observations {
        for i in 0..=60 {
            let x = [i as f64 * 0.1];
            let (sol, dual) = solve_stage(&inst, &pools, 1, obs, &x).unwrap();
            let cut = dual.coefficients(&inst, 1, obs);
            let (pi, value) =
                common::dual_by_enumeration(&common::rows(&s.recourse), &s.decision_cost, &obs.rhs_at(&x)).unwrap();
            assert!((cut.eval(&x) - value).abs() < 1e-12);
            assert!((sol.value - value).abs() < 1e-12);
            // Away from the kink the dual vertex is unique.
            let demand = -obs.rhs[0];
            if (x[0] - demand).abs() > 1e-9 {
                assert!((dual.pi[0] - pi[0]).abs() < 1e-12);
                let alpha = dot(&pi, &obs.rhs);
                let beta = -obs.technology.tr_mul_vec(&pi)[0];
                assert!((cut.alpha - alpha).abs() < 1e-12 && (cut.beta[0] - beta).abs() < 1e-12);
            }
        }
    }
    // h(x) = 3 max(0, 2 − x): at x = 1 the cut is 6 − 3x.
    let (_, dual) = solve_stage(&inst, &pools, 1, &inst.support[1].observations[0], &[1.0]).unwrap();
    let cut = dual.coefficients(&inst, 1, &inst.support[1].observations[0]);
    assert_eq!((cut.alpha, cut.beta[0]), (6.0, -3.0));
}

#[test]
fn repeating_a_trajectory_leaves_the_estimate_unchanged() {
    let inst = desk3();
    let mut pools = empty_pools(&inst);
    let mut sampler = SupportSampler::new(&inst, 3);
    let trs = sddp_forward(&inst, &pools, 2, &mut sampler).unwrap();
    sddp_backward(&inst, &mut pools, &trs, 1).unwrap();
    let before = pools.clone();
    let added = sddp_backward(&inst, &mut pools, &trs, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..100 {
        let x = [rng.gen_range(0.0..12.0), rng.gen_range(0.0..12.0)];
        for t in 1..=inst.horizon() {
            for j in 0..inst.support[t].observations.len() {
                assert!((pools[t].value(j, &x) - before[t].value(j, &x)).abs() < 1e-9);
            }
        }
    }
    assert!(added <= trs.len() * 3 * inst.horizon());
}

#[test]
fn cuts_are_valid_and_monotone_at_probe_states() {
    let inst = desk3();
    let mut pools = empty_pools(&inst);
    let mut sampler = SupportSampler::new(&inst, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let probes: Vec<(usize, usize, [f64; 2])> = (0..100)
        .flat_map(|_| {
            let x = [rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)];
            let j = rng.gen_range(0..3);
            (1..=2).map(move |t| (t, j, x))
        })
        .collect();
    let truth: Vec<f64> = probes
        .iter()
        .map(|&(t, j, x)| {
            let obs = &inst.support[t].observations[j];
            solve_extensive(&inst, &inst.support, t, &x, obs, DEFAULT_PATH_CAP).unwrap().value
        })
        .collect();
    let mut previous = vec![0.0; probes.len()];
    let mut bounds = Vec::new();
    for k in 1..=15 {
        let trs = sddp_forward(&inst, &pools, 3, &mut sampler).unwrap();
        sddp_backward(&inst, &mut pools, &trs, k).unwrap();
        bounds.push(lower_bound(&inst, &pools).unwrap().0);
        for (i, &(t, j, x)) in probes.iter().enumerate() {
            let v = pools[t].value(j, &x);
            assert!(v <= truth[i] + 1e-9, "cut above the cost-to-go");
            assert!(v >= previous[i] - 1e-12, "estimate decreased");
            previous[i] = v;
        }
    }
    assert!(bounds.windows(2).all(|w| w[1] >= w[0] - 1e-12));
}

#[test]
fn deterministic_instance_matches_extensive() {
    for pick in [[0, 0], [1, 2], [2, 1]] {
        let inst = desk3_deterministic(&pick);
        let exact = solve_instance(&inst).unwrap().value;
        let res = sddp_run(&inst, &SddpConfig::default()).unwrap();
        let lb = *res.lower_bounds.last().unwrap();
        assert!((lb - exact).abs() <= 1e-6 * exact.abs().max(1.0), "{} vs {}", lb, exact);
    }
}

#[test]
fn converged_cuts_reproduce_the_cost_to_go_at_the_optimal_root_state() {
    let inst = desk3();
    let exact = solve_instance(&inst).unwrap();
    let res = sddp_run(&inst, &SddpConfig::default()).unwrap();
    assert!(res.converged);
    let lb = *res.lower_bounds.last().unwrap();
    assert!((lb - exact.value).abs() <= 1e-6 * exact.value);
    assert!(res.lower_bounds.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    let x0 = &inst.initial_state;
    for (j, obs) in inst.support[1].observations.iter().enumerate() {
        let x1 = apply_dynamics(x0, obs, &exact.root_decision).unwrap();
        let h = solve_extensive(&inst, &inst.support, 1, &x1, obs, DEFAULT_PATH_CAP).unwrap().value;
        assert!((res.pools[1].value(j, &x1) - h).abs() <= 1e-6 * h.max(1.0));
    }
}

#[test]
fn cut_sharing_without_stage_randomness_gives_identical_coefficients() {
    let mut inst = desk3();
    for t in 1..=2 {
        let rhs = inst.stages[t].rhs.clone();
        for o in &mut inst.support[t].observations {
            o.rhs = rhs.clone();
        }
    }
    let res = sddp_run(&inst, &SddpConfig { max_iterations: 10, ..SddpConfig::default() }).unwrap();
    for pool in &res.pools[1..] {
        assert!(!pool.cuts.is_empty());
        for c in &pool.cuts {
            assert!(c.coefficients.iter().all(|a| *a == c.coefficients[0]));
        }
    }
}
