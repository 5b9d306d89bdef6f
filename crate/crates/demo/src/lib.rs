//! Browser demo. Each exported function takes plain arguments and returns a
//! JSON document for the page in `www/` to draw.
//!
//! The `*_json` functions are ordinary Rust and are what the tests call; the
//! `#[wasm_bindgen]` wrappers only translate errors.

use std::collections::BTreeMap;

use eqpo_core::pareto::{accuracy, evaluate_all_routes, non_dominated_set};
use eqpo_core::route::{expand_route, mo_backtrace, so_backtrace, ENUMERATION_LIMIT};
use eqpo_core::seed::derive_seed;
use eqpo_core::{
    generate_topology, run, AlgorithmConfig, ChannelParams, DominanceRule, Error, ExpansionRule, LossAggregation,
    Result, Route, Variant,
};
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest network the page may ask for. Scoring needs every route.
pub const MAX_NODES: usize = 9;

fn check_nodes(n_nodes: usize) -> Result<()> {
    if !(3..=MAX_NODES.min(ENUMERATION_LIMIT)).contains(&n_nodes) {
        return Err(Error::InvalidConfig(format!("node count must be in 3..={MAX_NODES}")));
    }
    Ok(())
}

fn channel(db_sum: bool) -> ChannelParams {
    ChannelParams {
        loss_aggregation: if db_sum { LossAggregation::DbSum } else { LossAggregation::LinearSum },
        ..ChannelParams::default()
    }
}

fn config_for(variant: &str, depth: usize, n_nodes: usize) -> Result<AlgorithmConfig> {
    let variant: Variant = variant.parse()?;
    let depth = if variant == Variant::BtaEqpo { depth.min(n_nodes - 2) } else { 0 };
    Ok(AlgorithmConfig::new(variant, depth))
}

/// One topology: node positions, every route's utility, the exact front and
/// the front found by the chosen variant, with its cost and trace.
pub fn explore_json(n_nodes: usize, seed: u64, variant: &str, depth: usize, db_sum: bool) -> Result<String> {
    check_nodes(n_nodes)?;
    let topology = generate_topology(n_nodes, derive_seed(seed, &[n_nodes as u64, 0]), channel(db_sum))?;
    let config = config_for(variant, depth, n_nodes)?;
    let out = run(&topology, &config, seed)?;
    let all = evaluate_all_routes(&topology)?;
    let truth = non_dominated_set(all.iter().cloned(), DominanceRule::Weak);
    let acc = accuracy(&out.front, &all, &truth, DominanceRule::Weak)?;

    let routes: Vec<_> = all
        .iter()
        .map(|(r, u)| {
            json!({
                "route": r,
                "ber": u.ber,
                "power_loss": u.power_loss,
                "delay": u.delay,
                "optimal": truth.contains(r),
                "found": out.front.contains(r),
            })
        })
        .collect();
    let doc = json!({
        "topology": topology,
        "variant": config.variant,
        "n": config.backtrace_depth_n,
        "routes": routes,
        "true_front": truth,
        "front": out.front,
        "ledger": out.ledger,
        "accuracy": acc,
        "trace": out.trace,
    });
    Ok(doc.to_string())
}

/// Back-trace explorer: the routes visited from `route` at each depth, the
/// last-relay chain, and the one-step expansions.
pub fn backtrace_json(route: &str, depth: usize) -> Result<String> {
    let route: Route = route.parse()?;
    let n_nodes = usize::from(route.destination());
    check_nodes(n_nodes)?;
    let mut by_depth = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for d in 1..=depth.min(route.stage()) {
        let level: Vec<Route> = mo_backtrace(&route, d).into_iter().filter(|r| seen.insert(r.clone())).collect();
        by_depth.push(level);
    }
    let doc = json!({
        "route": route,
        "stage": route.stage(),
        "mo_backtrace": by_depth,
        "so_backtrace": so_backtrace(&route),
        "expand_any_slot": expand_route(&route, n_nodes, ExpansionRule::AnySlot),
        "expand_last_slot": expand_route(&route, n_nodes, ExpansionRule::LastSlot),
    });
    Ok(doc.to_string())
}

#[derive(Debug, Default, Serialize)]
struct Summary {
    variant: String,
    n: usize,
    runs: usize,
    parallel_cfes: f64,
    sequential_cfes: f64,
    misdetection_rate: f64,
    completion: f64,
}

/// Mean cost and accuracy of every variant over `runs` random topologies.
pub fn compare_json(n_nodes: usize, runs: usize, seed: u64, db_sum: bool) -> Result<String> {
    check_nodes(n_nodes)?;
    if runs == 0 {
        return Err(Error::InvalidConfig("runs must be at least 1".into()));
    }
    let mut configs = vec![AlgorithmConfig::eqpo()];
    configs.extend([0, 1, 2, 4].into_iter().filter(|&d| d <= n_nodes - 2).map(AlgorithmConfig::bta));
    configs.push(AlgorithmConfig::full_search());

    let mut sums: BTreeMap<usize, Summary> = BTreeMap::new();
    for r in 0..runs {
        let t_seed = derive_seed(seed, &[n_nodes as u64, r as u64]);
        let topology = generate_topology(n_nodes, t_seed, channel(db_sum))?;
        let all = evaluate_all_routes(&topology)?;
        let truth = non_dominated_set(all.iter().cloned(), DominanceRule::Weak);
        for (k, config) in configs.iter().enumerate() {
            let out = run(&topology, config, t_seed)?;
            let acc = accuracy(&out.front, &all, &truth, DominanceRule::Weak)?;
            let s = sums.entry(k).or_default();
            s.variant = config.variant.name().to_string();
            s.n = config.backtrace_depth_n;
            s.runs += 1;
            s.parallel_cfes += out.ledger.parallel_cfes;
            s.sequential_cfes += out.ledger.sequential_cfes;
            s.misdetection_rate += acc.misdetection_rate;
            s.completion += acc.completion;
        }
    }
    let rows: Vec<Summary> = sums
        .into_values()
        .map(|mut s| {
            let k = s.runs as f64;
            s.parallel_cfes /= k;
            s.sequential_cfes /= k;
            s.misdetection_rate /= k;
            s.completion /= k;
            s
        })
        .collect();
    Ok(serde_json::to_string(&rows).expect("summary serializes"))
}

fn js(result: Result<String>) -> std::result::Result<String, JsError> {
    result.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn explore(
    n_nodes: usize,
    seed: u32,
    variant: &str,
    depth: usize,
    db_sum: bool,
) -> std::result::Result<String, JsError> {
    js(explore_json(n_nodes, u64::from(seed), variant, depth, db_sum))
}

#[wasm_bindgen]
pub fn backtrace(route: &str, depth: usize) -> std::result::Result<String, JsError> {
    js(backtrace_json(route, depth))
}

#[wasm_bindgen]
pub fn compare(n_nodes: usize, runs: usize, seed: u32, db_sum: bool) -> std::result::Result<String, JsError> {
    js(compare_json(n_nodes, runs, u64::from(seed), db_sum))
}
