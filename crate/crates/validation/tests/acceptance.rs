//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits non-zero if any criterion fails.
//!
//! Every accuracy run uses the default channel, whose loss aggregation is
//! linear-sum; lines run under another setting say so.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use eqpo_bench::experiment::topology_seed;
use eqpo_bench::{oracle_check, run_experiment, ExperimentSpec, ExperimentTable};
use eqpo_core::emulator::quantum_search_nondominated;
use eqpo_core::optimizer::single_objective_dp;
use eqpo_core::pareto::{dominates_with, evaluate_all_routes, non_dominated_set};
use eqpo_core::route::{expand_route, mo_backtrace, NodeId};
use eqpo_core::wmhn::{combine_ber, link_ber, path_loss_db, route_utility};
use eqpo_core::{
    generate_topology, run, AlgorithmConfig, CfeLedger, ChannelParams, DominanceRule, ExpansionRule, LossAggregation,
    Objective, ParetoFront, Route, SearchConfig, SearchMode, UtilityVector,
};
use eqpo_validation::{mean, paired_lower_bound, slope, stderr, Outcome};
use proptest::prelude::*;
use proptest::test_runner::{Config as ProptestConfig, TestRunner};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const BASE_SEED: u64 = 0;

const ORACLE_NODES: std::ops::RangeInclusive<usize> = 4..=8;
const ORACLE_SEEDS: usize = 500;
const ORACLE_TIME_LIMIT: Duration = Duration::from_secs(300);

const DP_NODES: std::ops::RangeInclusive<usize> = 4..=9;
const DP_SEEDS: usize = 500;

const PATH_LOSS_AT_100M: f64 = 120.07;
const PATH_LOSS_TOL: f64 = 0.01;
const FOLD_TOL: f64 = 1e-12;
const FOLD_CHAINS: usize = 1000;
const FOLD_SHUFFLES: usize = 50;

const ACCURACY_NODES: usize = 8;
const ACCURACY_RUNS: usize = 10_000;
const ORDER_FACTOR: f64 = 5.0;
const FLOOR_STDERRS: f64 = 2.0;
const COMPLETION_FACTOR: f64 = 2.0;
const MAX_MISDETECTION: f64 = 5e-3;
const MIN_COMPLETION: f64 = 0.995;

const OVERHEAD_NODES: std::ops::RangeInclusive<usize> = 5..=9;
const OVERHEAD_DEPTHS: [usize; 4] = [0, 1, 2, 4];
const OVERHEAD_SEEDS: usize = 1000;
const OVERHEAD_FACTOR: f64 = 2.0;
const SLOPE_SIZES: [usize; 5] = [100, 316, 1000, 3162, 10_000];
const SLOPE_TARGET: f64 = 0.5;
const SLOPE_TOL: f64 = 0.1;
const SLOPE_FRONT: usize = 5;
const SLOPE_REPS: u64 = 200;

const PROPERTY_CASES: u32 = 1000;

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    let mut failed = 0;
    for n in ORACLE_NODES {
        let report = oracle_check(&ExperimentSpec::new(vec![n], ORACLE_SEEDS, BASE_SEED), None).unwrap();
        checked += report.checked;
        failed += report.failures.len();
    }
    let elapsed = start.elapsed();
    Outcome::new(
        failed == 0 && elapsed < ORACLE_TIME_LIMIT,
        format!(
            "{}/{checked} fronts identical (N={}..={}, {ORACLE_SEEDS} seeds each) in {:.1}s, limit {}s",
            checked - failed,
            ORACLE_NODES.start(),
            ORACLE_NODES.end(),
            elapsed.as_secs_f64(),
            ORACLE_TIME_LIMIT.as_secs()
        ),
    )
}

fn dp_optimality() -> Outcome {
    let cells: Vec<(usize, usize)> = DP_NODES.flat_map(|n| (0..DP_SEEDS).map(move |r| (n, r))).collect();
    let misses: usize = cells
        .par_iter()
        .map(|&(n, r)| {
            let t = generate_topology(n, topology_seed(BASE_SEED, n, r), ChannelParams::default()).unwrap();
            let all = evaluate_all_routes(&t).unwrap();
            Objective::ALL
                .iter()
                .filter(|&&o| {
                    let best = single_objective_dp(&t, o, &mut CfeLedger::new());
                    let got = o.of(&route_utility(&t, &best).unwrap());
                    let min = all.iter().map(|(_, u)| o.of(u)).fold(f64::INFINITY, f64::min);
                    got != min
                })
                .count()
        })
        .sum();
    let total = cells.len() * Objective::ALL.len();
    Outcome::new(
        misses == 0,
        format!(
            "{}/{total} optima exact (N={}..={}, {DP_SEEDS} topologies each, 3 objectives)",
            total - misses,
            DP_NODES.start(),
            DP_NODES.end()
        ),
    )
}

fn unit_formulas() -> Outcome {
    let cascade = combine_ber(0.1, 0.2).unwrap();
    let loss = path_loss_db(100.0, &ChannelParams::default());

    let mut rng = ChaCha8Rng::seed_from_u64(BASE_SEED);
    let mut worst: f64 = 0.0;
    for chain in 0..FOLD_CHAINS {
        let t = generate_topology(7, topology_seed(BASE_SEED, 7, chain), ChannelParams::default()).unwrap();
        let mut relays: Vec<usize> = (2..7).collect();
        relays.shuffle(&mut rng);
        let mut nodes = vec![1];
        nodes.extend(relays);
        nodes.push(7);
        let mut links: Vec<f64> = nodes.windows(2).map(|w| link_ber(&t, w[0], w[1]).unwrap()).collect();
        let fold = |ls: &[f64]| ls.iter().fold(0.0, |acc, &p| combine_ber(acc, p).unwrap());
        let reference = fold(&links);
        for _ in 0..FOLD_SHUFFLES {
            links.shuffle(&mut rng);
            worst = worst.max((fold(&links) - reference).abs());
        }
    }
    let pass = cascade == 0.26 && (loss - PATH_LOSS_AT_100M).abs() <= PATH_LOSS_TOL && worst <= FOLD_TOL;
    Outcome::new(
        pass,
        format!(
            "combine_ber(0.1, 0.2) = {cascade}; path loss at 100 m = {loss:.4} dB (want {PATH_LOSS_AT_100M} ± {PATH_LOSS_TOL}); \
             max fold deviation {worst:.1e} over {FOLD_CHAINS}x{FOLD_SHUFFLES} permuted 6-link chains (tol {FOLD_TOL:.0e})"
        ),
    )
}

fn backtrace_fixture() -> Outcome {
    let set = |routes: &[&str]| -> BTreeSet<Route> { routes.iter().map(|s| s.parse().unwrap()).collect() };
    let route: Route = "1->2->3->4->5".parse().unwrap();
    let depth1 = set(&["1->2->3->5", "1->2->4->5", "1->3->4->5"]);
    let mut depth2 = depth1.clone();
    depth2.extend(set(&["1->2->5", "1->3->5", "1->4->5"]));
    let (got1, got2) = (mo_backtrace(&route, 1), mo_backtrace(&route, 2));
    Outcome::new(
        got1 == depth1 && got2 == depth2,
        format!("depth 1 visits {} routes, depth 2 visits {} routes", got1.len(), got2.len()),
    )
}

struct AccuracyColumns {
    pd: Vec<Vec<f64>>,
    incompletion: Vec<Vec<f64>>,
}

/// Index 0 is eqpo; index `1 + k` is back-tracing depth `OVERHEAD_DEPTHS[k]`.
fn accuracy_columns(table: &ExperimentTable) -> AccuracyColumns {
    let keys: Vec<(&str, usize)> =
        std::iter::once(("eqpo", 0)).chain(OVERHEAD_DEPTHS.iter().map(|&n| ("bta-eqpo", n))).collect();
    AccuracyColumns {
        pd: keys.iter().map(|&(l, n)| table.column(ACCURACY_NODES, l, n, |r| r.misdetection_rate)).collect(),
        incompletion: keys.iter().map(|&(l, n)| table.column(ACCURACY_NODES, l, n, |r| 1.0 - r.completion)).collect(),
    }
}

fn accuracy_spec(channel: ChannelParams) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(vec![ACCURACY_NODES], ACCURACY_RUNS, BASE_SEED);
    spec.variants = std::iter::once(AlgorithmConfig::eqpo())
        .chain(OVERHEAD_DEPTHS.iter().map(|&n| AlgorithmConfig::bta(n)))
        .collect();
    spec.channel = channel;
    spec
}

fn accuracy_ordering(c: &AccuracyColumns) -> Outcome {
    let [eqpo, n0, n1, n2, n4] = [&c.pd[0], &c.pd[1], &c.pd[2], &c.pd[3], &c.pd[4]];
    let lb_eqpo_n0 = paired_lower_bound(eqpo, n0);
    let lb_n0_n1 = paired_lower_bound(n0, n1);
    let lb_n1_n2 = paired_lower_bound(n1, n2);
    let fifth: Vec<f64> = eqpo.iter().map(|x| x / ORDER_FACTOR).collect();
    let lb_factor = paired_lower_bound(&fifth, n2);
    let floor_gap = (mean(n4) - mean(n2)).abs();
    let floor_se = (stderr(n4).powi(2) + stderr(n2).powi(2)).sqrt();
    let pass = lb_eqpo_n0 > 0.0
        && lb_n0_n1 >= 0.0
        && lb_n1_n2 > 0.0
        && lb_factor >= 0.0
        && floor_gap <= FLOOR_STDERRS * floor_se;
    Outcome::new(
        pass,
        format!(
            "Pd eqpo={:.3e} n0={:.3e} n1={:.3e} n2={:.3e} n4={:.3e}; paired 95% lower bounds: \
             eqpo-n0={lb_eqpo_n0:.2e} n0-n1={lb_n0_n1:.2e} n1-n2={lb_n1_n2:.2e} eqpo/{ORDER_FACTOR}-n2={lb_factor:.2e}; \
             |n4-n2|={floor_gap:.2e} vs {FLOOR_STDERRS}se={:.2e} ({ACCURACY_RUNS} runs, N={ACCURACY_NODES})",
            mean(eqpo),
            mean(n0),
            mean(n1),
            mean(n2),
            mean(n4),
            FLOOR_STDERRS * floor_se
        ),
    )
}

fn completion_improvement(c: &AccuracyColumns) -> Outcome {
    let (eqpo, n0) = (&c.incompletion[0], &c.incompletion[1]);
    let half: Vec<f64> = eqpo.iter().map(|x| x / COMPLETION_FACTOR).collect();
    let lb = paired_lower_bound(&half, n0);
    Outcome::new(
        lb >= 0.0,
        format!(
            "1-E[C] eqpo={:.3e} bta n0={:.3e} (ratio {:.2}); paired 95% lower bound of eqpo/{COMPLETION_FACTOR}-n0 = {lb:.2e}",
            mean(eqpo),
            mean(n0),
            mean(eqpo) / mean(n0)
        ),
    )
}

fn near_optimal_endpoint(c: &AccuracyColumns) -> Outcome {
    let pd = mean(&c.pd[4]);
    let completion = 1.0 - mean(&c.incompletion[4]);
    Outcome::new(
        pd <= MAX_MISDETECTION && completion >= MIN_COMPLETION,
        format!(
            "bta n4: Pd={pd:.3e} (max {MAX_MISDETECTION:.0e}, se {:.1e}), E[C]={completion:.5} (min {MIN_COMPLETION}, se {:.1e})",
            stderr(&c.pd[4]),
            stderr(&c.incompletion[4])
        ),
    )
}

fn mean_ledger(n_nodes: usize, config: AlgorithmConfig) -> (CfeLedger, CfeLedger) {
    let runs: Vec<(CfeLedger, CfeLedger)> = (0..OVERHEAD_SEEDS)
        .into_par_iter()
        .map(|r| {
            let seed = topology_seed(BASE_SEED, n_nodes, r);
            let t = generate_topology(n_nodes, seed, ChannelParams::default()).unwrap();
            let out = run(&t, &config, seed).unwrap();
            let dp = out.trace.iter().filter(|e| e.phase == "single-objective-dp").fold(CfeLedger::new(), |acc, e| {
                CfeLedger {
                    parallel_cfes: acc.parallel_cfes + e.parallel_cfes,
                    sequential_cfes: acc.sequential_cfes + e.sequential_cfes,
                }
            });
            (out.ledger, out.ledger.delta_since(&dp))
        })
        .collect();
    let avg = |pick: fn(&(CfeLedger, CfeLedger)) -> CfeLedger| {
        let k = runs.len() as f64;
        runs.iter().map(pick).fold(CfeLedger::new(), |acc, l| CfeLedger {
            parallel_cfes: acc.parallel_cfes + l.parallel_cfes / k,
            sequential_cfes: acc.sequential_cfes + l.sequential_cfes / k,
        })
    };
    (avg(|p| p.0), avg(|p| p.1))
}

/// `SLOPE_FRONT` non-dominated entries among `n` distinct routes.
fn synthetic_db(n: usize) -> Vec<(Route, UtilityVector)> {
    (0..n)
        .map(|i| {
            let relays: Vec<NodeId> =
                (0..3).map(|d| 2 + ((i / 100usize.pow(d)) % 100) as NodeId + 100 * d as NodeId).collect();
            let mut nodes = vec![1];
            nodes.extend(relays);
            nodes.push(1000);
            let uv = if i < SLOPE_FRONT {
                UtilityVector { ber: 0.01 * (i + 1) as f64, power_loss: 90.0 - i as f64, delay: 2 }
            } else {
                UtilityVector { ber: 0.2, power_loss: 100.0 + i as f64, delay: 4 }
            };
            (Route::new(nodes).unwrap(), uv)
        })
        .collect()
}

fn emulator_slope(mode: SearchMode) -> f64 {
    let config = SearchConfig { mode, ..SearchConfig::default() };
    let reps = if mode == SearchMode::Randomized { SLOPE_REPS } else { 1 };
    let points: Vec<(f64, f64)> = SLOPE_SIZES
        .iter()
        .map(|&n| {
            let db = synthetic_db(n);
            let total: f64 = (0..reps)
                .map(|s| {
                    let mut rng = ChaCha8Rng::seed_from_u64(s);
                    let mut ledger = CfeLedger::new();
                    let front = quantum_search_nondominated(
                        &db,
                        &ParetoFront::new(),
                        &config,
                        DominanceRule::Weak,
                        &mut ledger,
                        &mut rng,
                    )
                    .unwrap();
                    assert_eq!(front.len(), SLOPE_FRONT);
                    ledger.parallel_cfes
                })
                .sum();
            ((n as f64).ln(), (total / reps as f64).ln())
        })
        .collect();
    slope(&points)
}

fn complexity_overhead() -> Outcome {
    let mut pairs = 0;
    let mut within = 0;
    let mut worst = (0.0f64, 0.0f64);
    let mut search_only_worst = (0.0f64, 0.0f64);
    for n_nodes in OVERHEAD_NODES {
        let (eqpo, _) = mean_ledger(n_nodes, AlgorithmConfig::eqpo());
        for depth in OVERHEAD_DEPTHS.into_iter().filter(|&d| d <= n_nodes - 2) {
            let (bta, bta_search) = mean_ledger(n_nodes, AlgorithmConfig::bta(depth));
            let rp = bta.parallel_cfes / eqpo.parallel_cfes;
            let rs = bta.sequential_cfes / eqpo.sequential_cfes;
            pairs += 1;
            if rp <= OVERHEAD_FACTOR && rs <= OVERHEAD_FACTOR {
                within += 1;
            }
            worst = (worst.0.max(rp), worst.1.max(rs));
            search_only_worst = (
                search_only_worst.0.max(bta_search.parallel_cfes / eqpo.parallel_cfes),
                search_only_worst.1.max(bta_search.sequential_cfes / eqpo.sequential_cfes),
            );
        }
    }
    let exact = emulator_slope(SearchMode::CostModelExact);
    let randomized = emulator_slope(SearchMode::Randomized);
    let slope_ok = [exact, randomized].iter().all(|s| (s - SLOPE_TARGET).abs() <= SLOPE_TOL);
    Outcome::new(
        within == pairs && slope_ok,
        format!(
            "{within}/{pairs} (N, n) pairs within factor {OVERHEAD_FACTOR}; worst bta/eqpo ratio parallel={:.1} sequential={:.2} \
             (excluding the single-objective DP charge: parallel={:.2} sequential={:.2}); \
             emulator log-log slope exact={exact:.3} randomized={randomized:.3} (want {SLOPE_TARGET} ± {SLOPE_TOL})",
            worst.0, worst.1, search_only_worst.0, search_only_worst.1
        ),
    )
}

fn utility_strategy() -> impl Strategy<Value = UtilityVector> {
    (0u8..5, 0u8..5, 1u32..5).prop_map(|(b, l, d)| UtilityVector {
        ber: f64::from(b) / 10.0,
        power_loss: 60.0 + 5.0 * f64::from(l),
        delay: d,
    })
}

fn route_strategy(n_nodes: usize) -> impl Strategy<Value = Route> {
    let relays: Vec<NodeId> = (2..n_nodes as NodeId).collect();
    let k = relays.len();
    proptest::sample::subsequence(relays, 0..=k).prop_flat_map(|chosen| Just(chosen).prop_shuffle()).prop_map(
        move |relays| {
            let mut nodes = vec![1];
            nodes.extend(relays);
            nodes.push(n_nodes as NodeId);
            Route::for_network(nodes, n_nodes).unwrap()
        },
    )
}

fn property_suites() -> Outcome {
    let runner = || {
        TestRunner::new(ProptestConfig {
            cases: PROPERTY_CASES,
            failure_persistence: None,
            ..ProptestConfig::default()
        })
    };
    let rules = prop_oneof![Just(DominanceRule::Weak), Just(DominanceRule::Strict)];
    let mut failures = Vec::new();

    let r = runner().run(
        &(utility_strategy(), utility_strategy(), utility_strategy(), rules.clone()),
        |(a, b, c, rule)| {
            prop_assert!(!dominates_with(rule, &a, &a));
            prop_assert!(!(dominates_with(rule, &a, &b) && dominates_with(rule, &b, &a)));
            if dominates_with(rule, &a, &b) && dominates_with(rule, &b, &c) {
                prop_assert!(dominates_with(rule, &a, &c));
            }
            Ok(())
        },
    );
    if let Err(e) = r {
        failures.push(format!("dominance order: {e}"));
    }

    let routes = eqpo_core::route::enumerate_all_routes(7).unwrap();
    let r = runner().run(&(prop::collection::vec(utility_strategy(), 1..40), rules), |(uvs, rule)| {
        let items: Vec<_> = routes.iter().cloned().zip(uvs).collect();
        let once = non_dominated_set(items, rule);
        let twice = non_dominated_set(once.iter().map(|(r, u)| (r.clone(), *u)), rule);
        prop_assert_eq!(once, twice);
        Ok(())
    });
    if let Err(e) = r {
        failures.push(format!("front idempotence: {e}"));
    }

    let r = runner().run(&(2usize..=9).prop_flat_map(|n| (Just(n), route_strategy(n))), |(n, route)| {
        for grown in expand_route(&route, n, ExpansionRule::AnySlot) {
            prop_assert!(mo_backtrace(&grown, 1).contains(&route));
        }
        for shorter in mo_backtrace(&route, 1) {
            prop_assert!(expand_route(&shorter, n, ExpansionRule::AnySlot).contains(&route));
        }
        Ok(())
    });
    if let Err(e) = r {
        failures.push(format!("expand/backtrace inverse: {e}"));
    }

    let r = runner().run(&prop::collection::vec((any::<bool>(), 0usize..50, 1u32..5), 1..60), |charges| {
        let mut ledger = CfeLedger::new();
        for (quantum, amount, k) in charges {
            let before = ledger;
            if quantum {
                ledger.charge_activation(amount, k);
            } else {
                ledger.charge_classical(amount as u64);
            }
            prop_assert!(ledger.parallel_cfes >= before.parallel_cfes);
            prop_assert!(ledger.sequential_cfes >= before.sequential_cfes);
        }
        Ok(())
    });
    if let Err(e) = r {
        failures.push(format!("ledger monotonicity: {e}"));
    }

    let single_thread = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let r = runner().run(&(3usize..=6, 1usize..=3, any::<u64>()), |(n, runs, seed)| {
        let spec = ExperimentSpec::new(vec![n], runs, seed);
        let a = run_experiment(&spec).unwrap().to_csv_string().unwrap();
        let b = single_thread.install(|| run_experiment(&spec).unwrap().to_csv_string().unwrap());
        prop_assert_eq!(a, b);
        Ok(())
    });
    if let Err(e) = r {
        failures.push(format!("experiment determinism: {e}"));
    }

    let detail = if failures.is_empty() {
        format!("5 suites x {PROPERTY_CASES} cases (dominance order, front idempotence, expand/backtrace inverse, ledger monotonicity, experiment determinism), 0 failures")
    } else {
        failures.join("; ")
    };
    Outcome::new(failures.is_empty(), detail)
}

fn main() {
    let mut all_pass = true;
    let mut check = |id: &str, name: &str, f: &dyn Fn() -> Outcome| {
        let outcome = f();
        println!("{}", outcome.line(id, name));
        all_pass &= outcome.pass;
    };

    println!("acceptance suite, base seed {BASE_SEED}, loss aggregation linear-sum");
    check("C1", "oracle equivalence", &oracle_equivalence);
    check("C2", "single-objective DP optimality", &dp_optimality);
    check("C3", "unit formulas", &unit_formulas);
    check("C4", "back-trace fixture", &backtrace_fixture);

    let table = run_experiment(&accuracy_spec(ChannelParams::default())).unwrap();
    let columns = accuracy_columns(&table);
    check("C5", "accuracy ordering", &|| accuracy_ordering(&columns));
    check("C6", "completion improvement", &|| completion_improvement(&columns));
    check("C7", "near-optimal endpoint", &|| near_optimal_endpoint(&columns));
    drop(table);

    check("C8", "complexity overhead", &complexity_overhead);
    check("C9", "property suites", &property_suites);

    // Same endpoint under the literal dB-sum aggregation, for reference only.
    let db_sum = ChannelParams { loss_aggregation: LossAggregation::DbSum, ..ChannelParams::default() };
    let table = run_experiment(&accuracy_spec(db_sum)).unwrap();
    let c = accuracy_columns(&table);
    println!(
        "[INFO] loss aggregation db-sum: Pd eqpo={:.3e} n0={:.3e} n4={:.3e}; E[C] n4={:.5}",
        mean(&c.pd[0]),
        mean(&c.pd[1]),
        mean(&c.pd[4]),
        1.0 - mean(&c.incompletion[4])
    );

    if !all_pass {
        std::process::exit(1);
    }
}
