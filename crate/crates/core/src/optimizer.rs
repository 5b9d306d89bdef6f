//! The back-tracing-aided evolutionary Pareto optimizer.
//!
//! A run has three parts:
//!
//! 1. A single-objective trellis DP per objective. Each optimum is seeded
//!    into the front at its own stage, and its last-relay back-trace chain is
//!    seeded into the survivor sets.
//! 2. The evolutionary stage loop. Survivors of stage `i - 1` are expanded
//!    by one relay, and the non-dominated search runs over those routes plus
//!    the front found so far. Newly found front members survive into the next
//!    stage. The loop stops once a stage has no survivors.
//! 3. Multi-objective back-tracing. Every route of the final front is
//!    back-traced by `n` stages, and one more search runs over everything
//!    that was visited.
//!
//! The EQPO baseline runs part 2 alone from the direct route. The
//! full-search variant replaces part 3 with a search over every route.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::emulator::{quantum_search_nondominated, CfeLedger, SearchConfig};
use crate::error::{Error, Result};
use crate::pareto::{non_dominated_set, DominanceRule, ParetoFront};
use crate::route::{enumerate_all_routes, expand_route, mo_backtrace, so_backtrace, ExpansionRule, NodeId, Route};
use crate::wmhn::{LinkTable, PartialUtility, Topology, UtilityVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    Ber,
    Loss,
    Delay,
}

impl Objective {
    pub const ALL: [Objective; 3] = [Objective::Ber, Objective::Loss, Objective::Delay];

    pub fn of(self, uv: &UtilityVector) -> f64 {
        match self {
            Objective::Ber => uv.ber,
            Objective::Loss => uv.power_loss,
            Objective::Delay => f64::from(uv.delay),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Eqpo,
    BtaEqpo,
    BtaEqpoFullSearch,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Eqpo => "eqpo",
            Variant::BtaEqpo => "bta-eqpo",
            Variant::BtaEqpoFullSearch => "bta-eqpo-full-search",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eqpo" => Ok(Variant::Eqpo),
            "bta-eqpo" | "bta" => Ok(Variant::BtaEqpo),
            "bta-eqpo-full-search" | "full-search" => Ok(Variant::BtaEqpoFullSearch),
            other => Err(Error::InvalidConfig(format!("unknown variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    pub variant: Variant,
    /// Depth of the multi-objective back-trace.
    #[serde(default)]
    pub backtrace_depth_n: usize,
    #[serde(default)]
    pub expansion: ExpansionRule,
    #[serde(default)]
    pub dominance: DominanceRule,
    #[serde(default)]
    pub search: SearchConfig,
}

impl AlgorithmConfig {
    pub fn new(variant: Variant, backtrace_depth_n: usize) -> Self {
        AlgorithmConfig {
            variant,
            backtrace_depth_n,
            expansion: ExpansionRule::default(),
            dominance: DominanceRule::default(),
            search: SearchConfig::default(),
        }
    }

    pub fn eqpo() -> Self {
        Self::new(Variant::Eqpo, 0)
    }

    pub fn bta(n: usize) -> Self {
        Self::new(Variant::BtaEqpo, n)
    }

    pub fn full_search() -> Self {
        Self::new(Variant::BtaEqpoFullSearch, 0)
    }

    pub fn validate(&self, n_nodes: usize) -> Result<()> {
        if self.backtrace_depth_n > n_nodes.saturating_sub(2) {
            return Err(Error::InvalidConfig(format!(
                "back-trace depth {} exceeds {} relays",
                self.backtrace_depth_n,
                n_nodes.saturating_sub(2)
            )));
        }
        self.search.validate()
    }
}

/// Per-stage route sets driving the stage loop.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrellisState {
    pub stage_index: usize,
    /// Front found up to and including each stage. Before the loop reaches a
    /// stage, it holds only the single-objective optima seeded there.
    pub opf_by_stage: BTreeMap<usize, BTreeSet<Route>>,
    pub surv_by_stage: BTreeMap<usize, BTreeSet<Route>>,
    pub gen_current: BTreeSet<Route>,
}

impl TrellisState {
    /// The direct route alone, as both front and survivor at stage 0.
    pub fn with_direct_route(n_nodes: usize) -> Result<Self> {
        let mut state = TrellisState::default();
        state.seed_direct_route(n_nodes)?;
        Ok(state)
    }

    fn seed_direct_route(&mut self, n_nodes: usize) -> Result<()> {
        let direct = Route::direct(n_nodes)?;
        self.opf_by_stage.entry(0).or_default().insert(direct.clone());
        self.surv_by_stage.entry(0).or_default().insert(direct.clone());
        self.gen_current = BTreeSet::from([direct]);
        self.stage_index = 0;
        Ok(())
    }

    fn opf(&self, stage: usize) -> impl Iterator<Item = &Route> {
        self.opf_by_stage.get(&stage).into_iter().flatten()
    }

    fn surv(&self, stage: usize) -> impl Iterator<Item = &Route> {
        self.surv_by_stage.get(&stage).into_iter().flatten()
    }
}

/// One line of the optional run trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub phase: String,
    pub stage: usize,
    pub generated: usize,
    pub survivors: usize,
    pub front: usize,
    pub parallel_cfes: f64,
    pub sequential_cfes: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub front: ParetoFront,
    pub ledger: CfeLedger,
    pub trace: Vec<TraceEvent>,
    /// Every route whose utility was evaluated during the run.
    pub evaluated: BTreeSet<Route>,
    pub final_stage: usize,
}

/// Optimal route for one objective by trellis dynamic programming.
///
/// Stage `m` keeps one best partial route per last relay, over partial routes
/// with `m` relays. A relay already on a partial route is never appended
/// again. Ties go to the lexicographically smaller node sequence. Each stage
/// is charged `n_nodes^2` comparisons.
pub fn single_objective_dp(topology: &Topology, objective: Objective, ledger: &mut CfeLedger) -> Route {
    dp_with_table(&LinkTable::new(topology), objective, ledger)
}

fn dp_key(table: &LinkTable, objective: Objective, acc: &PartialUtility) -> f64 {
    match objective {
        Objective::Ber => acc.ber,
        Objective::Loss => table.power_loss(acc),
        Objective::Delay => f64::from(acc.hops),
    }
}

fn better(a: (f64, &[NodeId]), b: (f64, &[NodeId])) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

fn dp_with_table(table: &LinkTable, objective: Objective, ledger: &mut CfeLedger) -> Route {
    let n = table.n_nodes();
    let dn = n as NodeId;
    let source: NodeId = 1;

    let direct = table.extend(table.empty_partial(), source, dn);
    let mut best_route: Vec<NodeId> = vec![source, dn];
    let mut best_key = dp_key(table, objective, &direct);

    // survivors[v - 2]: best partial route ending at relay v
    let mut survivors: Vec<Option<(PartialUtility, Vec<NodeId>)>> =
        (2..dn).map(|v| Some((table.extend(table.empty_partial(), source, v), vec![source, v]))).collect();

    for stage in 1..=n.saturating_sub(2) {
        ledger.charge_classical((n * n) as u64);
        // complete every survivor to the destination
        for (acc, nodes) in survivors.iter().flatten() {
            let done = table.extend(*acc, *nodes.last().unwrap(), dn);
            let key = dp_key(table, objective, &done);
            let mut full = nodes.clone();
            full.push(dn);
            if better((key, &full), (best_key, &best_route)) {
                best_key = key;
                best_route = full;
            }
        }
        if stage == n - 2 {
            break;
        }
        let mut next: Vec<Option<(PartialUtility, Vec<NodeId>)>> = vec![None; survivors.len()];
        for (slot, v) in (2..dn).enumerate() {
            for (acc, nodes) in survivors.iter().flatten() {
                if nodes.contains(&v) {
                    continue;
                }
                let ext = table.extend(*acc, *nodes.last().unwrap(), v);
                let key = dp_key(table, objective, &ext);
                let mut path = nodes.clone();
                path.push(v);
                let replace = match &next[slot] {
                    None => true,
                    Some((cur, cur_nodes)) => better((key, &path), (dp_key(table, objective, cur), cur_nodes)),
                };
                if replace {
                    next[slot] = Some((ext, path));
                }
            }
        }
        survivors = next;
    }
    Route::for_network(best_route, n).expect("dp builds loopless routes")
}

/// Seeds the trellis from single-objective optima: each optimum joins the
/// front at its own stage and its last-relay back-trace chain joins the
/// survivor sets. Also applies the direct-route initialization.
pub fn so_btp_initialize(
    optimal_routes: &BTreeSet<Route>,
    mut state: TrellisState,
    n_nodes: usize,
) -> Result<TrellisState> {
    state.seed_direct_route(n_nodes)?;
    for route in optimal_routes {
        route.check_network(n_nodes)?;
        state.opf_by_stage.entry(route.stage()).or_default().insert(route.clone());
        for back in so_backtrace(route) {
            state.surv_by_stage.entry(back.stage()).or_default().insert(back);
        }
    }
    Ok(state)
}

/// Run-scoped evaluation context: utility cache, ledger, RNG and trace.
pub struct Optimizer<'a> {
    topology: &'a Topology,
    table: LinkTable,
    config: AlgorithmConfig,
    pub ledger: CfeLedger,
    rng: ChaCha8Rng,
    cache: HashMap<Route, UtilityVector>,
    pub trace: Vec<TraceEvent>,
}

impl<'a> Optimizer<'a> {
    pub fn new(topology: &'a Topology, config: AlgorithmConfig, seed: u64) -> Result<Self> {
        config.validate(topology.n_nodes())?;
        Ok(Optimizer {
            topology,
            table: LinkTable::new(topology),
            config,
            ledger: CfeLedger::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            cache: HashMap::new(),
            trace: Vec::new(),
        })
    }

    fn n_nodes(&self) -> usize {
        self.topology.n_nodes()
    }

    fn utility(&mut self, route: &Route) -> UtilityVector {
        if let Some(uv) = self.cache.get(route) {
            return *uv;
        }
        let uv = self.table.utility(route);
        self.cache.insert(route.clone(), uv);
        uv
    }

    fn with_utilities<'r, I>(&mut self, routes: I) -> Vec<(Route, UtilityVector)>
    where
        I: IntoIterator<Item = &'r Route>,
    {
        routes.into_iter().map(|r| (r.clone(), self.utility(r))).collect()
    }

    fn front_of<'r, I>(&mut self, routes: I) -> ParetoFront
    where
        I: IntoIterator<Item = &'r Route>,
    {
        let items = self.with_utilities(routes);
        non_dominated_set(items, self.config.dominance)
    }

    fn search(&mut self, db: &BTreeSet<Route>, seed: &ParetoFront) -> Result<ParetoFront> {
        let db = self.with_utilities(db);
        quantum_search_nondominated(
            &db,
            seed,
            &self.config.search,
            self.config.dominance,
            &mut self.ledger,
            &mut self.rng,
        )
    }

    fn record(
        &mut self,
        phase: &str,
        stage: usize,
        generated: usize,
        survivors: usize,
        front: usize,
        before: CfeLedger,
    ) {
        let delta = self.ledger.delta_since(&before);
        self.trace.push(TraceEvent {
            phase: phase.to_string(),
            stage,
            generated,
            survivors,
            front,
            parallel_cfes: delta.parallel_cfes,
            sequential_cfes: delta.sequential_cfes,
        });
    }

    /// Single-objective optima for all three objectives.
    pub fn single_objective_optima(&mut self) -> BTreeSet<Route> {
        let before = self.ledger;
        let optima: BTreeSet<Route> =
            Objective::ALL.iter().map(|&o| dp_with_table(&self.table, o, &mut self.ledger)).collect();
        self.record("single-objective-dp", 0, optima.len(), 0, optima.len(), before);
        optima
    }

    /// The evolutionary stage loop. Returns the state after the last stage.
    pub fn eqpo_loop(&mut self, mut state: TrellisState) -> Result<TrellisState> {
        let n = self.n_nodes();
        let mut i = state.stage_index;
        while i < n.saturating_sub(2) {
            i += 1;
            let before = self.ledger;

            let mut generated = BTreeSet::new();
            for route in state.surv(i - 1) {
                generated.extend(expand_route(route, n, self.config.expansion));
            }
            let previous: BTreeSet<Route> = state.opf(i - 1).cloned().collect();
            generated.extend(previous.iter().cloned());

            let seeded: Vec<Route> = previous.iter().chain(state.opf(i)).cloned().collect();
            let seed = self.front_of(&seeded);
            let front = self.search(&generated, &seed)?;

            let new_members: BTreeSet<Route> = front.routes().filter(|r| !previous.contains(r)).cloned().collect();
            let survivors = state.surv_by_stage.entry(i).or_default();
            survivors.extend(new_members);
            let survivor_count = survivors.len();
            state.opf_by_stage.insert(i, front.routes().cloned().collect());
            state.gen_current = generated;
            state.stage_index = i;

            let gen_count = state.gen_current.len();
            self.record("stage", i, gen_count, survivor_count, front.len(), before);
            if survivor_count == 0 {
                break;
            }
        }
        Ok(state)
    }

    /// Front at the end of the stage loop, including any single-objective
    /// optimum seeded at a stage the loop never reached.
    pub fn loop_front(&mut self, state: &TrellisState) -> ParetoFront {
        let last = state.stage_index;
        let current: BTreeSet<Route> = state.opf(last).cloned().collect();
        let stranded: Vec<Route> =
            state.opf_by_stage.range(last + 1..).flat_map(|(_, routes)| routes.iter().cloned()).collect();
        if !stranded.is_empty() {
            let before = self.ledger;
            self.ledger.charge_classical((current.len() * stranded.len()) as u64);
            let all: Vec<Route> = current.iter().chain(&stranded).cloned().collect();
            let front = self.front_of(&all);
            self.record("merge-stranded", last, stranded.len(), 0, front.len(), before);
            return front;
        }
        self.front_of(&current)
    }

    /// Back-traces every front member by `n` stages and searches the visited
    /// routes together with the front, seeded with the front.
    pub fn mo_btp_stage(&mut self, front: ParetoFront, depth: usize) -> Result<ParetoFront> {
        if depth == 0 {
            return Ok(front);
        }
        let before = self.ledger;
        let mut generated = BTreeSet::new();
        for route in front.routes() {
            generated.extend(mo_backtrace(route, depth));
        }
        let visited = generated.len();
        generated.extend(front.routes().cloned());
        let out = self.search(&generated, &front)?;
        self.record("mo-btp", depth, visited, 0, out.len(), before);
        Ok(out)
    }

    /// Search over every route of the network, seeded with `front`.
    pub fn full_search(&mut self, front: ParetoFront) -> Result<ParetoFront> {
        let before = self.ledger;
        let all: BTreeSet<Route> = enumerate_all_routes(self.n_nodes())?.into_iter().collect();
        let out = self.search(&all, &front)?;
        self.record("full-search", self.n_nodes() - 2, all.len(), 0, out.len(), before);
        Ok(out)
    }

    pub fn run(mut self) -> Result<RunOutput> {
        let n = self.n_nodes();
        let state = match self.config.variant {
            Variant::Eqpo => TrellisState::with_direct_route(n)?,
            Variant::BtaEqpo | Variant::BtaEqpoFullSearch => {
                let optima = self.single_objective_optima();
                so_btp_initialize(&optima, TrellisState::default(), n)?
            }
        };
        let state = self.eqpo_loop(state)?;
        let front = self.loop_front(&state);
        let front = match self.config.variant {
            Variant::Eqpo => front,
            Variant::BtaEqpo => self.mo_btp_stage(front, self.config.backtrace_depth_n)?,
            Variant::BtaEqpoFullSearch => self.full_search(front)?,
        };
        debug_assert!(front.is_mutually_non_dominated(self.config.dominance));
        Ok(RunOutput {
            front,
            ledger: self.ledger,
            trace: self.trace,
            evaluated: self.cache.into_keys().collect(),
            final_stage: state.stage_index,
        })
    }
}

/// Runs one configured optimizer on `topology`. `seed` drives the randomized
/// cost mode only; the returned front does not depend on it.
pub fn run(topology: &Topology, config: &AlgorithmConfig, seed: u64) -> Result<RunOutput> {
    Optimizer::new(topology, *config, seed)?.run()
}
