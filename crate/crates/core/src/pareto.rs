//! Pareto dominance, non-dominated filtering, the exhaustive front oracle and
//! the accuracy metrics used to score heuristic fronts.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::route::{enumerate_all_routes, Route};
use crate::wmhn::{LinkTable, Topology, UtilityVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DominanceRule {
    /// No worse in every objective and better in at least one.
    #[default]
    Weak,
    /// Better in every objective.
    Strict,
}

/// Weak Pareto dominance of `f1` over `f2` (all objectives minimized).
pub fn dominates(f1: &UtilityVector, f2: &UtilityVector) -> bool {
    dominates_with(DominanceRule::Weak, f1, f2)
}

pub fn dominates_with(rule: DominanceRule, f1: &UtilityVector, f2: &UtilityVector) -> bool {
    let (a, b) = (f1.components(), f2.components());
    match rule {
        DominanceRule::Weak => a.iter().zip(&b).all(|(x, y)| x <= y) && a.iter().zip(&b).any(|(x, y)| x < y),
        DominanceRule::Strict => a.iter().zip(&b).all(|(x, y)| x < y),
    }
}

/// A set of mutually non-dominated routes with their utility vectors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParetoFront {
    members: BTreeMap<Route, UtilityVector>,
}

#[derive(Serialize, Deserialize)]
struct FrontEntry {
    route: Route,
    ber: f64,
    power_loss: f64,
    delay: u32,
}

impl Serialize for ParetoFront {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.members.iter().map(|(route, uv)| FrontEntry {
            route: route.clone(),
            ber: uv.ber,
            power_loss: uv.power_loss,
            delay: uv.delay,
        }))
    }
}

impl<'de> Deserialize<'de> for ParetoFront {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<FrontEntry>::deserialize(d)?;
        Ok(ParetoFront {
            members: entries
                .into_iter()
                .map(|e| (e.route, UtilityVector { ber: e.ber, power_loss: e.power_loss, delay: e.delay }))
                .collect(),
        })
    }
}

impl ParetoFront {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, route: &Route) -> bool {
        self.members.contains_key(route)
    }

    pub fn get(&self, route: &Route) -> Option<&UtilityVector> {
        self.members.get(route)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Route, &UtilityVector)> {
        self.members.iter()
    }

    pub fn routes(&self) -> impl Iterator<Item = &Route> {
        self.members.keys()
    }

    pub fn utilities(&self) -> impl Iterator<Item = &UtilityVector> {
        self.members.values()
    }

    /// Same members as route sets.
    pub fn same_routes(&self, other: &ParetoFront) -> bool {
        self.members.len() == other.members.len() && self.routes().eq(other.routes())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("front serializes")
    }

    /// Checks that no member dominates another.
    pub fn is_mutually_non_dominated(&self, rule: DominanceRule) -> bool {
        self.members.values().all(|a| self.members.values().all(|b| !dominates_with(rule, a, b)))
    }
}

fn lexicographic(a: &UtilityVector, b: &UtilityVector) -> Ordering {
    a.delay.cmp(&b.delay).then(a.ber.total_cmp(&b.ber)).then(a.power_loss.total_cmp(&b.power_loss))
}

/// The members of `candidates` not dominated by any other candidate.
/// Routes with identical utility vectors are all kept.
pub fn non_dominated_set<I>(candidates: I, rule: DominanceRule) -> ParetoFront
where
    I: IntoIterator<Item = (Route, UtilityVector)>,
{
    let unique: BTreeMap<Route, UtilityVector> = candidates.into_iter().collect();
    let mut items: Vec<(Route, UtilityVector)> = unique.into_iter().collect();
    items.sort_by(|a, b| lexicographic(&a.1, &b.1).then_with(|| a.0.cmp(&b.0)));

    // A dominator sorts strictly before what it dominates, and the first
    // dominator in sort order is itself non-dominated.
    let mut kept: Vec<(Route, UtilityVector)> = Vec::new();
    for (route, uv) in items {
        if !kept.iter().any(|(_, k)| dominates_with(rule, k, &uv)) {
            kept.push((route, uv));
        }
    }
    ParetoFront { members: kept.into_iter().collect() }
}

/// Every route of the topology with its utility vector.
pub fn evaluate_all_routes(topology: &Topology) -> Result<Vec<(Route, UtilityVector)>> {
    let table = LinkTable::new(topology);
    Ok(enumerate_all_routes(topology.n_nodes())?
        .into_iter()
        .map(|r| {
            let uv = table.utility(&r);
            (r, uv)
        })
        .collect())
}

/// Exact front by exhaustive enumeration.
pub fn brute_force_opf(topology: &Topology, rule: DominanceRule) -> Result<ParetoFront> {
    Ok(non_dominated_set(evaluate_all_routes(topology)?, rule))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    /// Fraction of identified routes that are not truly Pareto optimal.
    pub misdetection_rate: f64,
    /// Mean share of all routes that dominate an identified route.
    pub pareto_distance: f64,
    /// Fraction of the true front that was identified.
    pub completion: f64,
}

/// Returns `(misdetection_rate, graded_distance)`.
pub fn pareto_distance(
    identified: &ParetoFront,
    all_routes: &[(Route, UtilityVector)],
    true_opf: &ParetoFront,
    rule: DominanceRule,
) -> Result<(f64, f64)> {
    if identified.is_empty() {
        return Err(Error::Empty("identified front"));
    }
    if all_routes.is_empty() {
        return Err(Error::Empty("route database"));
    }
    let n = identified.len() as f64;
    let false_members = identified.routes().filter(|r| !true_opf.contains(r)).count();
    let total = all_routes.len() as f64;
    let graded = identified
        .utilities()
        .map(|uv| all_routes.iter().filter(|(_, other)| dominates_with(rule, other, uv)).count() as f64 / total)
        .sum::<f64>()
        / n;
    Ok((false_members as f64 / n, graded))
}

pub fn pareto_completion(identified: &ParetoFront, true_opf: &ParetoFront) -> Result<f64> {
    if true_opf.is_empty() {
        return Err(Error::Empty("true front"));
    }
    let hits = true_opf.routes().filter(|r| identified.contains(r)).count();
    Ok(hits as f64 / true_opf.len() as f64)
}

pub fn accuracy(
    identified: &ParetoFront,
    all_routes: &[(Route, UtilityVector)],
    true_opf: &ParetoFront,
    rule: DominanceRule,
) -> Result<AccuracyReport> {
    let (misdetection_rate, pareto_distance) = pareto_distance(identified, all_routes, true_opf, rule)?;
    Ok(AccuracyReport { misdetection_rate, pareto_distance, completion: pareto_completion(identified, true_opf)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uv(ber: f64, power_loss: f64, delay: u32) -> UtilityVector {
        UtilityVector { ber, power_loss, delay }
    }

    fn r(s: &str) -> Route {
        s.parse().unwrap()
    }

    #[test]
    fn dominance_examples() {
        assert!(dominates(&uv(0.1, 100.0, 2), &uv(0.2, 120.0, 3)));
        let f = uv(0.1, 100.0, 2);
        assert!(!dominates(&f, &f));
        let (a, b) = (uv(0.1, 120.0, 2), uv(0.2, 100.0, 3));
        assert!(!dominates(&a, &b) && !dominates(&b, &a));
        // weak versus strict on a shared component
        let (c, d) = (uv(0.1, 100.0, 2), uv(0.2, 100.0, 2));
        assert!(dominates(&c, &d));
        assert!(!dominates_with(DominanceRule::Strict, &c, &d));
    }

    #[test]
    fn non_dominated_examples() {
        let single = non_dominated_set([(r("1->3"), uv(0.1, 1.0, 1))], DominanceRule::Weak);
        assert_eq!(single.len(), 1);

        let chain = non_dominated_set(
            [(r("1->2->4"), uv(0.2, 2.0, 2)), (r("1->4"), uv(0.1, 1.0, 1)), (r("1->2->3->4"), uv(0.3, 3.0, 3))],
            DominanceRule::Weak,
        );
        assert_eq!(chain.routes().cloned().collect::<Vec<_>>(), vec![r("1->4")]);

        let ties =
            non_dominated_set([(r("1->2->4"), uv(0.2, 2.0, 2)), (r("1->3->4"), uv(0.2, 2.0, 2))], DominanceRule::Weak);
        assert_eq!(ties.len(), 2);
    }

    #[test]
    fn metrics_counting() {
        let all = vec![
            (r("1->5"), uv(0.3, 10.0, 1)),
            (r("1->2->5"), uv(0.1, 5.0, 2)),
            (r("1->3->5"), uv(0.2, 6.0, 2)),
            (r("1->2->3->5"), uv(0.05, 4.0, 3)),
            (r("1->3->2->5"), uv(0.2, 7.0, 3)),
        ];
        let truth = non_dominated_set(all.clone(), DominanceRule::Weak);
        assert_eq!(truth.len(), 3);
        let (m, g) = pareto_distance(&truth, &all, &truth, DominanceRule::Weak).unwrap();
        assert_eq!((m, g), (0.0, 0.0));
        assert_eq!(pareto_completion(&truth, &truth).unwrap(), 1.0);

        let mut members = truth.members.clone();
        members.insert(r("1->3->5"), uv(0.2, 6.0, 2));
        let with_false = ParetoFront { members };
        let (m, g) = pareto_distance(&with_false, &all, &truth, DominanceRule::Weak).unwrap();
        assert_eq!(m, 0.25);
        // 1->3->5 is dominated by 1->2->5 only
        assert!((g - 0.25 * (1.0 / 5.0)).abs() < 1e-15);

        let half = non_dominated_set(all[..1].to_vec(), DominanceRule::Weak);
        assert!((pareto_completion(&half, &truth).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let none = ParetoFront { members: [(r("1->3->5"), uv(0.2, 6.0, 2))].into() };
        assert_eq!(pareto_completion(&none, &truth).unwrap(), 0.0);

        assert!(pareto_distance(&ParetoFront::new(), &all, &truth, DominanceRule::Weak).is_err());
        assert!(pareto_completion(&truth, &ParetoFront::new()).is_err());
    }

    #[test]
    fn completion_half() {
        let truth = ParetoFront {
            members: [
                (r("1->4"), uv(0.3, 3.0, 1)),
                (r("1->2->4"), uv(0.2, 2.0, 2)),
                (r("1->3->4"), uv(0.25, 1.0, 2)),
                (r("1->2->3->4"), uv(0.1, 2.5, 3)),
            ]
            .into(),
        };
        let half = ParetoFront { members: truth.members.iter().take(2).map(|(r, u)| (r.clone(), *u)).collect() };
        assert_eq!(pareto_completion(&half, &truth).unwrap(), 0.5);
    }

    #[test]
    fn front_json_round_trip() {
        let front =
            non_dominated_set([(r("1->4"), uv(0.3, 3.0, 1)), (r("1->2->4"), uv(0.2, 2.0, 2))], DominanceRule::Weak);
        let json = front.to_json();
        assert!(json.contains("\"route\": \"1->2->4\""));
        let back: ParetoFront = serde_json::from_str(&json).unwrap();
        assert_eq!(back, front);
    }
}
