use nash_stream_core::generators::{gen_hard_table2, gen_hard_table2_binary, gen_random_balanced, gen_random_binary};
use nash_stream_core::metrics::{balance_ratio, competitive_ratio, monopolist_utilities};
use nash_stream_core::offline::grid_error_bound;
use nash_stream_core::online::{rounded_greedy_with_guess, DEFAULT_LEVEL_CAP};
use nash_stream_core::*;
use proptest::prelude::*;

fn all_algorithms(inst: &Instance, lambda: f64) -> Vec<RunTrace> {
    vec![
        myopic_greedy(inst).unwrap(),
        half_and_half(inst, lambda).unwrap(),
        half_and_half_guessed(inst, 3).unwrap(),
        rounded_greedy(inst, 8.0).unwrap(),
        rounded_greedy_guessed(inst, 3, DEFAULT_LEVEL_CAP).unwrap(),
    ]
}

#[test]
fn eg_matches_brute_force_on_tiny_instances() {
    for seed in 0..8 {
        let inst = gen_random_balanced(2, 3, 2.0, seed).unwrap();
        let eg = solve_eg(&inst, &EgOptions::with_tol(1e-10)).unwrap();
        let (_, best) = brute_force_oracle(&inst, 200).unwrap();
        let slack = eg.fw_gap + grid_error_bound(2, 200);
        assert!(best <= eg.objective + 1e-9, "grid beat the solver: {best} > {}", eg.objective);
        assert!(eg.objective - best <= slack, "seed {seed}: {} vs {best}", eg.objective);
    }
}

#[test]
fn eg_is_invariant_under_agent_rescaling() {
    let inst = gen_random_balanced(3, 8, 4.0, 5).unwrap();
    let scale = [2.0, 0.25, 7.0];
    let scaled = Instance::new(
        3,
        inst.items()
            .iter()
            .map(|it| Item::new(it.supply, it.values.iter().zip(scale).map(|(v, c)| v * c).collect()))
            .collect(),
    )
    .unwrap();
    let opts = EgOptions::with_tol(1e-12);
    let a = solve_eg(&inst, &opts).unwrap();
    let b = solve_eg(&scaled, &opts).unwrap();
    for (i, c) in scale.iter().enumerate() {
        let r = b.utilities.0[i] / (a.utilities.0[i] * c);
        assert!((r - 1.0).abs() < 1e-6, "agent {i}: ratio {r}");
    }
}

#[test]
fn staircase_myopic_is_far_from_optimal() {
    for n in 3..=5 {
        let inst = gen_hard_table2(n).unwrap();
        let alg = myopic_greedy(&inst).unwrap();
        let opt = solve_eg(&inst, &EgOptions::with_tol(1e-12)).unwrap();
        let ratio = competitive_ratio(opt.nash_welfare(), alg.nash_welfare()).unwrap();
        assert!(ratio >= (n as f64 - 1.0) / std::f64::consts::E, "n={n}: {ratio}");
        for (i, u) in opt.utilities.0.iter().enumerate() {
            let expect = (n as f64).powi(2 * (i as i32 + 1));
            assert!((u / expect - 1.0).abs() < 1e-6);
        }
        let bin = solve_eg(&gen_hard_table2_binary(n).unwrap(), &EgOptions::with_tol(1e-12)).unwrap();
        for (a, b) in opt.utilities.0.iter().zip(&bin.utilities.0) {
            assert!((a / b - 1.0).abs() < 1e-5);
        }
    }
}

#[test]
fn half_and_half_within_finite_bound() {
    for (n, lambda) in [(2, 1.0), (4, 2.0), (8, 16.0)] {
        for seed in 0..5 {
            let inst = gen_random_balanced(n, 30, lambda, seed).unwrap();
            let trace = half_and_half(&inst, lambda).unwrap();
            trace.audit(&inst).unwrap();
            let opt = solve_eg(&inst, &EgOptions::default()).unwrap();
            let gamma = competitive_ratio(opt.nash_welfare(), trace.nash_welfare()).unwrap();
            let bound = 4.0 * (4.0 * lambda * lambda * (n as f64).powi(3)).ln();
            assert!(gamma <= bound, "N={n} lambda={lambda}: {gamma} > {bound}");
        }
    }
}

#[test]
fn every_trace_passes_audit() {
    for seed in 0..5 {
        let inst = gen_random_balanced(4, 20, 3.0, seed).unwrap();
        for trace in all_algorithms(&inst, balance_ratio(&inst).unwrap()) {
            trace.audit(&inst).unwrap_or_else(|e| panic!("{}: {e}", trace.algorithm()));
            assert!(trace.min_gain_residual() >= -1e-9);
        }
    }
}

#[test]
fn seeded_runs_repeat() {
    let inst = gen_random_binary(5, 20, 0.5, 9).unwrap();
    let a = rounded_greedy_guessed(&inst, 17, DEFAULT_LEVEL_CAP).unwrap();
    let b = rounded_greedy_guessed(&inst, 17, DEFAULT_LEVEL_CAP).unwrap();
    assert_eq!(a.allocation, b.allocation);
    assert_eq!(a.guess, b.guess);
    let k = a.guess.unwrap().k;
    assert_eq!(rounded_greedy_with_guess(&inst, k, DEFAULT_LEVEL_CAP).unwrap().allocation, a.allocation);
}

#[test]
fn monopolist_utilities_bound_everything() {
    let inst = gen_random_balanced(3, 10, 5.0, 2).unwrap();
    let mono = monopolist_utilities(&inst);
    for trace in all_algorithms(&inst, balance_ratio(&inst).unwrap()) {
        for (u, m) in trace.utilities.0.iter().zip(&mono.0) {
            assert!(*u <= m * (1.0 + 1e-12));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prefix_runs_are_prefixes(seed in any::<u64>(), n in 1usize..5, t in 1usize..12, cut in 0usize..12) {
        let lambda = if n == 1 { 1.0 } else { 3.0 };
        let inst = gen_random_balanced(n, t, lambda, seed).unwrap();
        let cut = cut.min(t).max(1);
        let prefix = inst.prefix(cut).unwrap();
        for (full, part) in all_algorithms(&inst, 3.0).iter().zip(all_algorithms(&prefix, 3.0)) {
            for item in 0..cut {
                for agent in 0..n {
                    prop_assert_eq!(full.allocation.get(agent, item).to_bits(), part.allocation.get(agent, item).to_bits());
                }
            }
        }
    }

    #[test]
    fn myopic_ignores_agent_scale(seed in any::<u64>(), c in 0.01f64..100.0) {
        let inst = gen_random_binary(4, 10, 0.6, seed).unwrap();
        let scaled = Instance::new(
            4,
            inst.items().iter().map(|it| {
                let mut v = it.values.clone();
                v[0] *= c;
                Item::new(it.supply, v)
            }).collect(),
        ).unwrap();
        let a = myopic_greedy(&inst).unwrap();
        let b = myopic_greedy(&scaled).unwrap();
        for t in 0..inst.num_items() {
            for i in 0..4 {
                prop_assert!((a.allocation.get(i, t) - b.allocation.get(i, t)).abs() < 1e-9);
            }
        }
    }
}
