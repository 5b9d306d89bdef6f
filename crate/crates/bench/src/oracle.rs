//! Oracle equivalence check: the full-search variant must reproduce the
//! exhaustive front on every run.

use std::path::{Path, PathBuf};

use eqpo_core::emulator::SearchMode;
use eqpo_core::{generate_topology, run, AlgorithmConfig, ParetoFront, Topology};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::experiment::{topology_seed, ExperimentSpec, GroundTruth};

/// Counterexample written to disk when a run disagrees with the oracle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleFixture {
    pub n_nodes: usize,
    pub run: usize,
    pub seed: u64,
    pub topology: Topology,
    pub expected_front: ParetoFront,
    pub returned_front: ParetoFront,
}

#[derive(Debug, Clone)]
pub struct OracleFailure {
    pub n_nodes: usize,
    pub run: usize,
    pub seed: u64,
    pub fixture_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default)]
pub struct OracleReport {
    pub checked: usize,
    pub failures: Vec<OracleFailure>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn pass_count(&self) -> usize {
        self.checked - self.failures.len()
    }
}

/// Config used by the oracle check: full search with the exact cost model.
pub fn oracle_config(dominance: eqpo_core::DominanceRule) -> AlgorithmConfig {
    let mut config = AlgorithmConfig::full_search();
    config.search.mode = SearchMode::CostModelExact;
    config.dominance = dominance;
    config
}

pub fn oracle_check(spec: &ExperimentSpec, fixture_dir: Option<&Path>) -> Result<OracleReport> {
    oracle_check_with(spec, fixture_dir, |topology, config, seed| run(topology, config, seed).map(|out| out.front))
}

/// Oracle check with a caller-supplied solver, so the checker itself can be
/// tested against a deliberately broken one.
pub fn oracle_check_with<F>(spec: &ExperimentSpec, fixture_dir: Option<&Path>, solver: F) -> Result<OracleReport>
where
    F: Fn(&Topology, &AlgorithmConfig, u64) -> eqpo_core::Result<ParetoFront> + Sync,
{
    spec.validate()?;
    let dominance = spec.variants.first().map(|v| v.dominance).unwrap_or_default();
    let config = oracle_config(dominance);
    let cells: Vec<(usize, usize)> =
        spec.node_counts.iter().flat_map(|&n| (0..spec.runs).map(move |r| (n, r))).collect();

    let mismatches: Vec<Option<OracleFixture>> = cells
        .par_iter()
        .map(|&(n_nodes, run_index)| -> Result<Option<OracleFixture>> {
            let seed = topology_seed(spec.base_seed, n_nodes, run_index);
            let topology = generate_topology(n_nodes, seed, spec.channel)?;
            let mut truth = GroundTruth::new(topology.clone())?;
            let expected = truth.front(dominance).clone();
            let returned = solver(&topology, &config, seed)?;
            Ok((!returned.same_routes(&expected)).then_some(OracleFixture {
                n_nodes,
                run: run_index,
                seed,
                topology,
                expected_front: expected,
                returned_front: returned,
            }))
        })
        .collect::<Result<_>>()?;

    let mut report = OracleReport { checked: cells.len(), failures: Vec::new() };
    for fixture in mismatches.into_iter().flatten() {
        let fixture_path = match fixture_dir {
            Some(dir) => Some(write_fixture(dir, &fixture)?),
            None => None,
        };
        report.failures.push(OracleFailure {
            n_nodes: fixture.n_nodes,
            run: fixture.run,
            seed: fixture.seed,
            fixture_path,
        });
    }
    Ok(report)
}

fn write_fixture(dir: &Path, fixture: &OracleFixture) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let path = dir.join(format!("oracle-mismatch-n{}-run{}.json", fixture.n_nodes, fixture.run));
    let text = serde_json::to_string_pretty(fixture).expect("fixture serializes");
    std::fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
    Ok(path)
}
