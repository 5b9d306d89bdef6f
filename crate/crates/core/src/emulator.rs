//! Classical stand-in for the quantum-assisted non-dominated search.
//!
//! The emulator always returns the exact non-dominated set; what it models is
//! the cost. One activation of the quantum dominance operator against `a`
//! reference routes with `k` objectives costs `1/k` parallel CFEs and `a`
//! sequential CFEs. Finding each new front member costs `ceil(sqrt(N))`
//! activations over an `N`-entry database, and one more such sweep certifies
//! that nothing is left to find.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pareto::{dominates_with, non_dominated_set, DominanceRule, ParetoFront};
use crate::route::Route;
use crate::wmhn::UtilityVector;

/// Running complexity counters, in cost function evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CfeLedger {
    pub parallel_cfes: f64,
    pub sequential_cfes: f64,
}

impl CfeLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// One quantum dominance-operator activation against `references`
    /// reference routes.
    pub fn charge_activation(&mut self, references: usize, objectives_k: u32) {
        self.parallel_cfes += 1.0 / f64::from(objectives_k);
        self.sequential_cfes += references as f64;
    }

    /// Classical comparisons, charged one CFE each on both counters.
    pub fn charge_classical(&mut self, comparisons: u64) {
        self.parallel_cfes += comparisons as f64;
        self.sequential_cfes += comparisons as f64;
    }

    pub fn delta_since(&self, earlier: &CfeLedger) -> CfeLedger {
        CfeLedger {
            parallel_cfes: self.parallel_cfes - earlier.parallel_cfes,
            sequential_cfes: self.sequential_cfes - earlier.sequential_cfes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    /// Deterministic charge straight from the cost model.
    #[default]
    CostModelExact,
    /// BBHT-style randomized schedule with geometrically growing iteration
    /// counts.
    Randomized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub objectives_k: u32,
    pub growth_lambda: f64,
    pub mode: SearchMode,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { objectives_k: 3, growth_lambda: 6.0 / 5.0, mode: SearchMode::CostModelExact }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.objectives_k < 1 {
            return Err(Error::InvalidConfig("objectives_k must be at least 1".into()));
        }
        if self.growth_lambda.is_nan() || self.growth_lambda <= 1.0 {
            return Err(Error::InvalidConfig("growth_lambda must exceed 1".into()));
        }
        Ok(())
    }
}

/// Rounds of the randomized schedule before falling back to a plain sweep.
const MAX_BBHT_ROUNDS: usize = 256;

/// Whether any reference dominates `candidate`. Charges one activation.
pub fn quantum_dominance_op(
    candidate: &UtilityVector,
    references: &[UtilityVector],
    config: &SearchConfig,
    rule: DominanceRule,
    ledger: &mut CfeLedger,
) -> Result<bool> {
    if references.is_empty() {
        return Err(Error::Empty("reference set"));
    }
    ledger.charge_activation(references.len(), config.objectives_k);
    Ok(references.iter().any(|r| dominates_with(rule, r, candidate)))
}

/// `ceil(sqrt(n))`, computed exactly for integers.
pub fn sqrt_sweep(n: usize) -> usize {
    let mut s = (n as f64).sqrt() as usize;
    while s * s < n {
        s += 1;
    }
    while s > 0 && (s - 1) * (s - 1) >= n {
        s -= 1;
    }
    s
}

/// Pre-initialized non-dominated search over `db`, seeded with a known
/// partial front. Returns the non-dominated set of `db` together with the
/// seed, charging the ledger according to `config.mode`.
pub fn quantum_search_nondominated<R: Rng + ?Sized>(
    db: &[(Route, UtilityVector)],
    seed_front: &ParetoFront,
    config: &SearchConfig,
    rule: DominanceRule,
    ledger: &mut CfeLedger,
    rng: &mut R,
) -> Result<ParetoFront> {
    if db.is_empty() {
        return Err(Error::Empty("search database"));
    }
    config.validate()?;
    let candidates = db.iter().cloned().chain(seed_front.iter().map(|(r, u)| (r.clone(), *u)));
    let front = non_dominated_set(candidates, rule);

    let n = db.len();
    let sweep = sqrt_sweep(n);
    let new_members = front.routes().filter(|r| !seed_front.contains(r)).count();
    for found in 0..new_members {
        let references = (seed_front.len() + found).max(1);
        match config.mode {
            SearchMode::CostModelExact => {
                for _ in 0..sweep {
                    ledger.charge_activation(references, config.objectives_k);
                }
            }
            SearchMode::Randomized => {
                let marked = new_members - found;
                let activations = bbht_activations(n, marked, config.growth_lambda, rng);
                for _ in 0..activations {
                    ledger.charge_activation(references, config.objectives_k);
                }
            }
        }
    }

    // certification sweep
    for _ in 0..sweep {
        ledger.charge_activation(front.len().max(1), config.objectives_k);
    }
    Ok(front)
}

/// Number of oracle activations the BBHT schedule spends to hit one of
/// `marked` entries among `n`.
fn bbht_activations<R: Rng + ?Sized>(n: usize, marked: usize, lambda: f64, rng: &mut R) -> usize {
    let theta = ((marked as f64) / (n.max(marked) as f64)).sqrt().asin();
    let cap = (n as f64).sqrt().max(1.0);
    let mut m = 1.0_f64;
    let mut spent = 0;
    for _ in 0..MAX_BBHT_ROUNDS {
        let j = rng.random_range(0..m.ceil() as usize);
        // j Grover iterations followed by one checking evaluation
        spent += j + 1;
        let p = ((2 * j + 1) as f64 * theta).sin().powi(2);
        if rng.random::<f64>() < p {
            return spent;
        }
        m = (lambda * m).min(cap);
    }
    spent + sqrt_sweep(n)
}
