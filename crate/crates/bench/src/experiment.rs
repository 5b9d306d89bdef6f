//! Monte-Carlo experiments: seeded topologies, every configured variant, and
//! accuracy against the exhaustive front.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use eqpo_core::pareto::{accuracy, evaluate_all_routes, non_dominated_set};
use eqpo_core::route::ENUMERATION_LIMIT;
use eqpo_core::seed::derive_seed;
use eqpo_core::{
    generate_topology, run, AlgorithmConfig, ChannelParams, DominanceRule, ExpansionRule, ParetoFront, Route,
    SearchMode, Topology, UtilityVector, Variant,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// CSV column order. Plotting scripts depend on it.
pub const CSV_COLUMNS: [&str; 11] = [
    "n_nodes",
    "run",
    "variant",
    "n",
    "parallel_cfes",
    "sequential_cfes",
    "misdetection_rate",
    "graded_distance",
    "completion",
    "opf_size",
    "true_opf_size",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub node_counts: Vec<usize>,
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_variants")]
    pub variants: Vec<AlgorithmConfig>,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub channel: ChannelParams,
}

/// EQPO, back-tracing at depths 0, 1, 2 and 4, and the full-search variant.
pub fn default_variants() -> Vec<AlgorithmConfig> {
    let mut v = vec![AlgorithmConfig::eqpo()];
    v.extend([0, 1, 2, 4].map(AlgorithmConfig::bta));
    v.push(AlgorithmConfig::full_search());
    v
}

impl ExperimentSpec {
    pub fn new(node_counts: Vec<usize>, runs: usize, base_seed: u64) -> Self {
        ExperimentSpec {
            node_counts,
            runs,
            base_seed,
            variants: default_variants(),
            output_path: None,
            channel: ChannelParams::default(),
        }
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        toml::from_str(&text).map_err(|e| HarnessError::Config { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| HarnessError::Config { path: path.to_path_buf(), message: e.to_string() })
    }

    /// Loads a TOML or JSON spec, chosen by file extension.
    pub fn from_file(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_file(path),
            _ => Self::from_toml_file(path),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(HarnessError::Spec("runs must be at least 1".into()));
        }
        if self.node_counts.is_empty() || self.variants.is_empty() {
            return Err(HarnessError::Spec("node_counts and variants must be non-empty".into()));
        }
        if let Some(&n) = self.node_counts.iter().find(|&&n| !(2..=ENUMERATION_LIMIT).contains(&n)) {
            return Err(HarnessError::Spec(format!(
                "node count {n} outside 2..={ENUMERATION_LIMIT}; the accuracy oracle enumerates every route"
            )));
        }
        self.channel.validate()?;
        for v in &self.variants {
            v.search.validate()?;
        }
        Ok(())
    }
}

/// Seed of the topology for one `(n_nodes, run)` cell.
pub fn topology_seed(base_seed: u64, n_nodes: usize, run: usize) -> u64 {
    derive_seed(base_seed, &[n_nodes as u64, run as u64])
}

/// The configuration actually run on an `n_nodes` network: the back-trace
/// depth is capped at the relay count, and variants without a back-trace
/// stage report depth 0.
pub fn effective_config(config: &AlgorithmConfig, n_nodes: usize) -> AlgorithmConfig {
    let mut c = *config;
    c.backtrace_depth_n = match c.variant {
        Variant::BtaEqpo => c.backtrace_depth_n.min(n_nodes.saturating_sub(2)),
        Variant::Eqpo | Variant::BtaEqpoFullSearch => 0,
    };
    c
}

/// Variant name plus any non-default switch, e.g. `eqpo+last-slot`.
pub fn variant_label(config: &AlgorithmConfig) -> String {
    let mut label = config.variant.name().to_string();
    if config.expansion == ExpansionRule::LastSlot {
        label.push_str("+last-slot");
    }
    if config.dominance == DominanceRule::Strict {
        label.push_str("+strict");
    }
    if config.search.mode == SearchMode::Randomized {
        label.push_str("+randomized");
    }
    label
}

fn optimizer_seed(topology_seed: u64, config: &AlgorithmConfig) -> u64 {
    derive_seed(topology_seed, &[config.variant as u64, config.backtrace_depth_n as u64])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub n_nodes: usize,
    pub run: usize,
    pub variant: Variant,
    /// Variant name with non-default switches; the CSV `variant` column.
    pub label: String,
    pub n: usize,
    pub parallel_cfes: f64,
    pub sequential_cfes: f64,
    pub misdetection_rate: f64,
    pub graded_distance: f64,
    pub completion: f64,
    pub opf_size: usize,
    pub true_opf_size: usize,
}

/// Mean and standard error of one column.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub stderr: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len() as f64;
        if values.is_empty() {
            return Stat { mean: f64::NAN, stderr: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n;
        if values.len() < 2 {
            return Stat { mean, stderr: 0.0 };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Stat { mean, stderr: (var / n).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub n_nodes: usize,
    pub variant: Variant,
    pub label: String,
    pub n: usize,
    pub runs: usize,
    pub parallel_cfes: Stat,
    pub sequential_cfes: Stat,
    pub misdetection_rate: Stat,
    pub graded_distance: Stat,
    pub completion: Stat,
    pub opf_size: Stat,
    pub true_opf_size: Stat,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentTable {
    pub rows: Vec<RunRow>,
    pub aggregates: Vec<AggregateRow>,
}

/// Everything the oracle needs about one topology.
pub struct GroundTruth {
    pub topology: Topology,
    pub all_routes: Vec<(Route, UtilityVector)>,
    fronts: BTreeMap<u8, ParetoFront>,
}

impl GroundTruth {
    pub fn new(topology: Topology) -> Result<Self> {
        let all_routes = evaluate_all_routes(&topology)?;
        Ok(GroundTruth { topology, all_routes, fronts: BTreeMap::new() })
    }

    pub fn front(&mut self, rule: DominanceRule) -> &ParetoFront {
        let all = &self.all_routes;
        self.fronts.entry(rule as u8).or_insert_with(|| non_dominated_set(all.iter().cloned(), rule))
    }
}

fn run_cell(spec: &ExperimentSpec, n_nodes: usize, run_index: usize) -> Result<Vec<RunRow>> {
    let seed = topology_seed(spec.base_seed, n_nodes, run_index);
    let mut truth = GroundTruth::new(generate_topology(n_nodes, seed, spec.channel)?)?;
    let mut rows = Vec::with_capacity(spec.variants.len());
    for config in &spec.variants {
        let config = effective_config(config, n_nodes);
        let out = run(&truth.topology, &config, optimizer_seed(seed, &config))?;
        let true_front = truth.front(config.dominance).clone();
        let acc = accuracy(&out.front, &truth.all_routes, &true_front, config.dominance)?;
        rows.push(RunRow {
            n_nodes,
            run: run_index,
            variant: config.variant,
            label: variant_label(&config),
            n: config.backtrace_depth_n,
            parallel_cfes: out.ledger.parallel_cfes,
            sequential_cfes: out.ledger.sequential_cfes,
            misdetection_rate: acc.misdetection_rate,
            graded_distance: acc.pareto_distance,
            completion: acc.completion,
            opf_size: out.front.len(),
            true_opf_size: true_front.len(),
        });
    }
    Ok(rows)
}

/// Groups rows by `(n_nodes, label, n)` in first-appearance order and
/// computes mean and standard error of every numeric column.
pub fn aggregate(rows: &[RunRow]) -> Vec<AggregateRow> {
    let mut order: Vec<(usize, String, usize)> = Vec::new();
    let mut groups: BTreeMap<(usize, String, usize), Vec<&RunRow>> = BTreeMap::new();
    for row in rows {
        let key = (row.n_nodes, row.label.clone(), row.n);
        let group = groups.entry(key.clone()).or_default();
        if group.is_empty() {
            order.push(key);
        }
        group.push(row);
    }
    order
        .into_iter()
        .map(|key| {
            let group = &groups[&key];
            let col = |f: &dyn Fn(&RunRow) -> f64| Stat::of(&group.iter().map(|r| f(r)).collect::<Vec<_>>());
            AggregateRow {
                n_nodes: key.0,
                variant: group[0].variant,
                label: key.1.clone(),
                n: key.2,
                runs: group.len(),
                parallel_cfes: col(&|r| r.parallel_cfes),
                sequential_cfes: col(&|r| r.sequential_cfes),
                misdetection_rate: col(&|r| r.misdetection_rate),
                graded_distance: col(&|r| r.graded_distance),
                completion: col(&|r| r.completion),
                opf_size: col(&|r| r.opf_size as f64),
                true_opf_size: col(&|r| r.true_opf_size as f64),
            }
        })
        .collect()
}

/// Runs every `(n_nodes, run, variant)` cell. Cells execute on the rayon
/// pool; output order is `(n_nodes, run, variant)` regardless of scheduling.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentTable> {
    spec.validate()?;
    let cells: Vec<(usize, usize)> =
        spec.node_counts.iter().flat_map(|&n| (0..spec.runs).map(move |r| (n, r))).collect();
    let per_cell: Vec<Vec<RunRow>> = cells.par_iter().map(|&(n, r)| run_cell(spec, n, r)).collect::<Result<_>>()?;
    let rows: Vec<RunRow> = per_cell.into_iter().flatten().collect();
    let aggregates = aggregate(&rows);
    Ok(ExperimentTable { rows, aggregates })
}

impl ExperimentTable {
    /// Raw rows first, then a `mean` and a `stderr` row per group.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_COLUMNS)?;
        for r in &self.rows {
            w.write_record([
                r.n_nodes.to_string(),
                r.run.to_string(),
                r.label.clone(),
                r.n.to_string(),
                r.parallel_cfes.to_string(),
                r.sequential_cfes.to_string(),
                r.misdetection_rate.to_string(),
                r.graded_distance.to_string(),
                r.completion.to_string(),
                r.opf_size.to_string(),
                r.true_opf_size.to_string(),
            ])?;
        }
        for a in &self.aggregates {
            for (label, pick) in [("mean", 0), ("stderr", 1)] {
                let v = |s: &Stat| if pick == 0 { s.mean } else { s.stderr }.to_string();
                w.write_record([
                    a.n_nodes.to_string(),
                    label.to_string(),
                    a.label.clone(),
                    a.n.to_string(),
                    v(&a.parallel_cfes),
                    v(&a.sequential_cfes),
                    v(&a.misdetection_rate),
                    v(&a.graded_distance),
                    v(&a.completion),
                    v(&a.opf_size),
                    v(&a.true_opf_size),
                ])?;
            }
        }
        w.flush().map_err(|e| HarnessError::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn aggregate_for(&self, n_nodes: usize, label: &str, n: usize) -> Option<&AggregateRow> {
        self.aggregates.iter().find(|a| a.n_nodes == n_nodes && a.label == label && a.n == n)
    }

    /// Per-run values of one column for one group, ordered by run index.
    pub fn column(&self, n_nodes: usize, label: &str, n: usize, pick: fn(&RunRow) -> f64) -> Vec<f64> {
        self.rows.iter().filter(|r| r.n_nodes == n_nodes && r.label == label && r.n == n).map(pick).collect()
    }
}
