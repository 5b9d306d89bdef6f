//! Routes and the trellis algebra that moves between stages.
//!
//! A route is a loopless node sequence from the source (node 1) to the
//! destination (node `n_nodes`). Its trellis stage is the number of relays it
//! visits. Forward moves insert one unused relay; back-tracing removes relays
//! again, either only the last one or any one of them.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest network for which exhaustive route enumeration is allowed.
pub const ENUMERATION_LIMIT: usize = 12;

/// Node index, 1-based. Node 1 is the source.
pub type NodeId = u16;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Route {
    nodes: Vec<NodeId>,
}

/// Where [`expand_route`] may insert the new relay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpansionRule {
    /// Any slot between two consecutive nodes.
    #[default]
    AnySlot,
    /// Only between the last relay (or the source) and the destination.
    LastSlot,
}

impl Route {
    /// Builds a route, checking the structural invariants: at least two
    /// nodes, source first, no repeated node.
    pub fn new(nodes: Vec<NodeId>) -> Result<Self> {
        let route = Route { nodes };
        route.check_structure()?;
        Ok(route)
    }

    /// Builds a route and checks it belongs to a network of `n_nodes`.
    pub fn for_network(nodes: Vec<NodeId>, n_nodes: usize) -> Result<Self> {
        let route = Route::new(nodes)?;
        route.check_network(n_nodes)?;
        Ok(route)
    }

    // Internal constructor for operator outputs; invariants are re-checked in
    // debug builds.
    fn from_parts(nodes: Vec<NodeId>) -> Self {
        let route = Route { nodes };
        debug_assert!(route.check_structure().is_ok(), "bad route {route}");
        route
    }

    /// The direct source-to-destination route `1 -> n_nodes`.
    pub fn direct(n_nodes: usize) -> Result<Self> {
        if n_nodes < 2 {
            return Err(Error::TooFewNodes(n_nodes));
        }
        let dn = NodeId::try_from(n_nodes)
            .map_err(|_| Error::InvalidConfig(format!("{n_nodes} nodes exceed the node id range")))?;
        Ok(Route::from_parts(vec![1, dn]))
    }

    fn check_structure(&self) -> Result<()> {
        let fail = |reason: &str| Error::InvalidRoute { route: self.to_string(), reason: reason.to_string() };
        if self.nodes.len() < 2 {
            return Err(fail("a route needs at least two nodes"));
        }
        if self.nodes[0] != 1 {
            return Err(fail("a route must start at the source node 1"));
        }
        let mut seen = BTreeSet::new();
        for &n in &self.nodes {
            if n == 0 {
                return Err(fail("node ids are 1-based"));
            }
            if !seen.insert(n) {
                return Err(fail("repeated node"));
            }
        }
        Ok(())
    }

    /// Checks that the route ends at the destination of an `n_nodes` network
    /// and only uses valid relay ids.
    pub fn check_network(&self, n_nodes: usize) -> Result<()> {
        if usize::from(self.destination()) != n_nodes {
            return Err(Error::InvalidRoute {
                route: self.to_string(),
                reason: format!("must end at destination node {n_nodes}"),
            });
        }
        if let Some(&bad) = self.relays().iter().find(|&&n| usize::from(n) >= n_nodes) {
            return Err(Error::NodeOutOfRange { index: bad.into(), n_nodes });
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn relays(&self) -> &[NodeId] {
        &self.nodes[1..self.nodes.len() - 1]
    }

    pub fn destination(&self) -> NodeId {
        *self.nodes.last().expect("route has at least two nodes")
    }

    /// Trellis stage: the number of relays.
    pub fn stage(&self) -> usize {
        self.nodes.len() - 2
    }

    /// Number of links, i.e. the hop count.
    pub fn hops(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn links(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes.windows(2).map(|w| (w[0], w[1]))
    }

    /// The route with the relay at relay position `pos` removed.
    fn without_relay(&self, pos: usize) -> Route {
        let mut nodes = self.nodes.clone();
        nodes.remove(pos + 1);
        Route::from_parts(nodes)
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, n) in self.nodes.iter().enumerate() {
            if i > 0 {
                f.write_str("->")?;
            }
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Route({self})")
    }
}

impl FromStr for Route {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let nodes = s
            .split("->")
            .map(|part| part.trim().parse::<NodeId>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::RouteParse(s.to_string()))?;
        Route::new(nodes)
    }
}

impl Serialize for Route {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Route {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Convenience for [`Route::direct`].
pub fn direct_route(n_nodes: usize) -> Result<Route> {
    Route::direct(n_nodes)
}

/// Every route obtained by inserting one unused relay into `route`.
///
/// With [`ExpansionRule::AnySlot`] the output has
/// `(n_nodes - 2 - stage) * (stage + 1)` members.
pub fn expand_route(route: &Route, n_nodes: usize, rule: ExpansionRule) -> BTreeSet<Route> {
    let used: BTreeSet<NodeId> = route.nodes.iter().copied().collect();
    let dn = route.destination();
    let unused: Vec<NodeId> = (2..dn).filter(|n| !used.contains(n)).collect();
    debug_assert_eq!(usize::from(dn), n_nodes);

    let slots: Vec<usize> = match rule {
        // insert before position p, p in 1..len
        ExpansionRule::AnySlot => (1..route.nodes.len()).collect(),
        ExpansionRule::LastSlot => vec![route.nodes.len() - 1],
    };

    let mut out = BTreeSet::new();
    for &relay in &unused {
        for &slot in &slots {
            let mut nodes = Vec::with_capacity(route.nodes.len() + 1);
            nodes.extend_from_slice(&route.nodes[..slot]);
            nodes.push(relay);
            nodes.extend_from_slice(&route.nodes[slot..]);
            out.insert(Route::from_parts(nodes));
        }
    }
    out
}

/// Single-objective back-trace: repeatedly drop the relay next to the
/// destination until the direct route remains. Element `j` has stage
/// `stage(route) - j - 1`.
pub fn so_backtrace(route: &Route) -> Vec<Route> {
    let mut chain = Vec::with_capacity(route.stage());
    let mut current = route.clone();
    while current.stage() > 0 {
        current = current.without_relay(current.stage() - 1);
        chain.push(current.clone());
    }
    chain
}

/// Multi-objective back-trace: all routes reachable by deleting one relay per
/// step, for `depth` steps (bounded by the route's stage). The input route
/// itself is not part of the output.
pub fn mo_backtrace(route: &Route, depth: usize) -> BTreeSet<Route> {
    let mut visited = BTreeSet::new();
    let mut frontier = BTreeSet::from([route.clone()]);
    for _ in 0..depth.min(route.stage()) {
        let mut next = BTreeSet::new();
        for r in &frontier {
            for pos in 0..r.stage() {
                next.insert(r.without_relay(pos));
            }
        }
        visited.extend(next.iter().cloned());
        frontier = next;
    }
    visited
}

/// Number of loopless source-to-destination routes in an `n_nodes` network.
pub fn route_count(n_nodes: usize) -> u64 {
    let relays = n_nodes.saturating_sub(2) as u64;
    let mut total = 0u64;
    let mut term = 1u64;
    for k in 0..=relays {
        total += term;
        term *= relays - k;
    }
    total
}

/// Every loopless route of an `n_nodes` network, ordered by stage and then
/// lexicographically.
pub fn enumerate_all_routes(n_nodes: usize) -> Result<Vec<Route>> {
    if n_nodes < 2 {
        return Err(Error::TooFewNodes(n_nodes));
    }
    if n_nodes > ENUMERATION_LIMIT {
        return Err(Error::EnumerationGuard { n_nodes, limit: ENUMERATION_LIMIT });
    }
    let dn = n_nodes as NodeId;
    let relays: Vec<NodeId> = (2..dn).collect();
    let mut out = Vec::with_capacity(route_count(n_nodes) as usize);

    let mut layer: Vec<Vec<NodeId>> = vec![vec![1]];
    for _stage in 0..=relays.len() {
        for prefix in &layer {
            let mut nodes = prefix.clone();
            nodes.push(dn);
            out.push(Route::from_parts(nodes));
        }
        let mut next = Vec::new();
        for prefix in &layer {
            for &r in &relays {
                if !prefix.contains(&r) {
                    let mut p = prefix.clone();
                    p.push(r);
                    next.push(p);
                }
            }
        }
        layer = next;
    }
    Ok(out)
}
