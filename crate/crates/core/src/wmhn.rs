//! Wireless multihop network model: random topologies, per-link path loss
//! and BER, and the per-route utility vector `[BER, power loss, delay]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::route::{NodeId, Route};

/// How per-link losses are aggregated into a route's power loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossAggregation {
    /// Sum the linear-scale losses and report the sum in dB.
    #[default]
    LinearSum,
    /// Sum the per-link dB values directly.
    DbSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelParams {
    pub path_loss_exponent: f64,
    /// Carrier wavelength in meters.
    pub carrier_wavelength: f64,
    /// Transmit power in dBm.
    pub tx_power: f64,
    /// Mean per-node interference power in dBm.
    pub interference_mean: f64,
    /// Standard deviation of the interference power in dB.
    pub interference_std: f64,
    /// Side of the square deployment area in meters.
    pub area_side: f64,
    #[serde(default)]
    pub loss_aggregation: LossAggregation,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            path_loss_exponent: 3.0,
            carrier_wavelength: 0.125,
            tx_power: 20.0,
            interference_mean: -90.0,
            interference_std: 10.0,
            area_side: 100.0,
            loss_aggregation: LossAggregation::LinearSum,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.path_loss_exponent > 0.0, "path loss exponent must be positive"),
            (self.carrier_wavelength > 0.0, "carrier wavelength must be positive"),
            (self.area_side > 0.0, "area side must be positive"),
            (self.interference_std >= 0.0, "interference std must be non-negative"),
            (self.tx_power.is_finite(), "tx power must be finite"),
            (self.interference_mean.is_finite(), "interference mean must be finite"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::InvalidParams(msg.to_string())),
            None => Ok(()),
        }
    }
}

/// Position and interference level of one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub x: f64,
    pub y: f64,
    pub interference_dbm: f64,
}

/// A frozen network snapshot. Node 1 is the source at `(0, 0)`, node
/// `n_nodes` the destination at the opposite corner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TopologyDoc", into = "TopologyDoc")]
pub struct Topology {
    nodes: Vec<NodeState>,
    params: ChannelParams,
}

#[derive(Serialize, Deserialize)]
struct TopologyDoc {
    n_nodes: usize,
    params: ChannelParams,
    nodes: Vec<NodeState>,
}

impl From<Topology> for TopologyDoc {
    fn from(t: Topology) -> Self {
        TopologyDoc { n_nodes: t.nodes.len(), params: t.params, nodes: t.nodes }
    }
}

impl TryFrom<TopologyDoc> for Topology {
    type Error = Error;

    fn try_from(doc: TopologyDoc) -> Result<Self> {
        if doc.nodes.len() != doc.n_nodes {
            return Err(Error::Topology(format!(
                "n_nodes is {} but {} nodes are listed",
                doc.n_nodes,
                doc.nodes.len()
            )));
        }
        Topology::from_nodes(doc.nodes, doc.params)
    }
}

impl Topology {
    /// Builds a topology from explicit node states, checking the corner and
    /// area invariants.
    pub fn from_nodes(nodes: Vec<NodeState>, params: ChannelParams) -> Result<Self> {
        params.validate()?;
        let n = nodes.len();
        if n < 2 {
            return Err(Error::TooFewNodes(n));
        }
        if n > usize::from(NodeId::MAX) {
            return Err(Error::Topology(format!("{n} nodes exceed the node id range")));
        }
        let side = params.area_side;
        let (sn, dn) = (nodes[0], nodes[n - 1]);
        if (sn.x, sn.y) != (0.0, 0.0) || (dn.x, dn.y) != (side, side) {
            return Err(Error::Topology("source and destination must sit at opposite corners".into()));
        }
        let inside = |v: f64| (0.0..=side).contains(&v);
        if let Some(i) = nodes.iter().position(|s| !inside(s.x) || !inside(s.y)) {
            return Err(Error::Topology(format!("node {} lies outside the area", i + 1)));
        }
        if nodes.iter().any(|s| !s.interference_dbm.is_finite()) {
            return Err(Error::Topology("interference levels must be finite".into()));
        }
        Ok(Topology { nodes, params })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> Result<&NodeState> {
        id.checked_sub(1)
            .and_then(|i| self.nodes.get(i))
            .ok_or(Error::NodeOutOfRange { index: id, n_nodes: self.nodes.len() })
    }

    fn link_nodes(&self, i: usize, j: usize) -> Result<(&NodeState, &NodeState)> {
        if i == j {
            return Err(Error::SelfLink(i));
        }
        Ok((self.node(i)?, self.node(j)?))
    }

    /// Euclidean distance between nodes `i` and `j` in meters.
    pub fn distance(&self, i: usize, j: usize) -> Result<f64> {
        let (a, b) = self.link_nodes(i, j)?;
        Ok((a.x - b.x).hypot(a.y - b.y))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Topology(e.to_string()))
    }
}

/// Draws a random topology. Relay positions are i.i.d. uniform over the
/// square, then one Gaussian interference level (dBm) is drawn per node.
/// The result depends only on `(n_nodes, seed, params)`.
pub fn generate_topology(n_nodes: usize, seed: u64, params: ChannelParams) -> Result<Topology> {
    if n_nodes < 2 {
        return Err(Error::TooFewNodes(n_nodes));
    }
    params.validate()?;
    let side = params.area_side;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut positions: Vec<(f64, f64)> = Vec::with_capacity(n_nodes);
    positions.push((0.0, 0.0));
    for _ in 0..n_nodes - 2 {
        // coincident nodes would create zero-length links
        let p = loop {
            let p = (rng.random_range(0.0..=side), rng.random_range(0.0..=side));
            if p != (side, side) && !positions.contains(&p) {
                break p;
            }
        };
        positions.push(p);
    }
    positions.push((side, side));

    let interference = Normal::new(params.interference_mean, params.interference_std)
        .map_err(|e| Error::InvalidParams(e.to_string()))?;
    let nodes = positions
        .into_iter()
        .map(|(x, y)| NodeState { x, y, interference_dbm: interference.sample(&mut rng) })
        .collect();
    Topology::from_nodes(nodes, params)
}

/// `10 * alpha * log10(4 * pi * d / lambda)` in dB.
pub fn path_loss_db(distance: f64, params: &ChannelParams) -> f64 {
    10.0 * params.path_loss_exponent * (4.0 * std::f64::consts::PI * distance / params.carrier_wavelength).log10()
}

/// Average BER of Gray-coded QPSK over flat Rayleigh fading at mean SNR
/// `snr` (linear).
pub fn rayleigh_qpsk_ber(snr: f64) -> f64 {
    if snr.is_infinite() {
        return 0.0;
    }
    0.5 * (1.0 - (snr / (1.0 + snr)).sqrt())
}

pub fn link_path_loss_db(topology: &Topology, i: usize, j: usize) -> Result<f64> {
    Ok(path_loss_db(topology.distance(i, j)?, &topology.params))
}

/// Mean linear SINR at receiver `j` for a transmission from `i`.
pub fn link_sinr(topology: &Topology, i: usize, j: usize) -> Result<f64> {
    let loss = link_path_loss_db(topology, i, j)?;
    let rx = topology.node(j)?;
    Ok(10f64.powf((topology.params.tx_power - loss - rx.interference_dbm) / 10.0))
}

pub fn link_ber(topology: &Topology, i: usize, j: usize) -> Result<f64> {
    Ok(rayleigh_qpsk_ber(link_sinr(topology, i, j)?))
}

fn check_probability(p: f64) -> Result<f64> {
    if (0.0..=0.5).contains(&p) {
        Ok(p)
    } else {
        Err(Error::ProbabilityOutOfRange(p))
    }
}

/// End-to-end error probability of two cascaded binary symmetric channels.
pub fn combine_ber(p1: f64, p2: f64) -> Result<f64> {
    Ok(cascade(check_probability(p1)?, check_probability(p2)?))
}

#[inline]
fn cascade(p1: f64, p2: f64) -> f64 {
    p1 + p2 - 2.0 * p1 * p2
}

/// Objective triple of a route. All components are minimized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityVector {
    pub ber: f64,
    /// Aggregate power loss in dB.
    pub power_loss: f64,
    /// Hop count.
    pub delay: u32,
}

impl UtilityVector {
    pub fn components(&self) -> [f64; 3] {
        [self.ber, self.power_loss, f64::from(self.delay)]
    }
}

/// Precomputed per-link quantities of one topology, for repeated route
/// evaluation.
#[derive(Debug, Clone)]
pub struct LinkTable {
    n: usize,
    aggregation: LossAggregation,
    loss_db: Vec<f64>,
    loss_linear: Vec<f64>,
    ber: Vec<f64>,
}

/// Running fold of the route objectives along a partial route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialUtility {
    pub ber: f64,
    loss_acc: f64,
    pub hops: u32,
}

impl LinkTable {
    pub fn new(topology: &Topology) -> Self {
        let n = topology.n_nodes();
        let mut loss_db = vec![f64::NAN; n * n];
        let mut ber = vec![f64::NAN; n * n];
        for i in 1..=n {
            for j in 1..=n {
                if i != j {
                    let k = (i - 1) * n + (j - 1);
                    loss_db[k] = link_path_loss_db(topology, i, j).expect("valid link");
                    ber[k] = link_ber(topology, i, j).expect("valid link");
                }
            }
        }
        let loss_linear = loss_db.iter().map(|l| 10f64.powf(l / 10.0)).collect();
        LinkTable { n, aggregation: topology.params.loss_aggregation, loss_db, loss_linear, ber }
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: NodeId, j: NodeId) -> usize {
        (usize::from(i) - 1) * self.n + usize::from(j) - 1
    }

    pub fn loss_db(&self, i: NodeId, j: NodeId) -> f64 {
        self.loss_db[self.idx(i, j)]
    }

    pub fn ber(&self, i: NodeId, j: NodeId) -> f64 {
        self.ber[self.idx(i, j)]
    }

    pub fn empty_partial(&self) -> PartialUtility {
        PartialUtility { ber: 0.0, loss_acc: 0.0, hops: 0 }
    }

    /// Extends a partial fold by the link `i -> j`.
    #[inline]
    pub fn extend(&self, acc: PartialUtility, i: NodeId, j: NodeId) -> PartialUtility {
        let k = self.idx(i, j);
        let link_loss = match self.aggregation {
            LossAggregation::LinearSum => self.loss_linear[k],
            LossAggregation::DbSum => self.loss_db[k],
        };
        PartialUtility { ber: cascade(acc.ber, self.ber[k]), loss_acc: acc.loss_acc + link_loss, hops: acc.hops + 1 }
    }

    /// Aggregate power loss in dB of a partial fold.
    pub fn power_loss(&self, acc: &PartialUtility) -> f64 {
        match self.aggregation {
            LossAggregation::LinearSum => 10.0 * acc.loss_acc.log10(),
            LossAggregation::DbSum => acc.loss_acc,
        }
    }

    pub fn finish(&self, acc: PartialUtility) -> UtilityVector {
        UtilityVector { ber: acc.ber, power_loss: self.power_loss(&acc), delay: acc.hops }
    }

    pub fn fold(&self, nodes: &[NodeId]) -> PartialUtility {
        nodes.windows(2).fold(self.empty_partial(), |acc, w| self.extend(acc, w[0], w[1]))
    }

    /// Utility of a route already known to fit this network.
    pub fn utility(&self, route: &Route) -> UtilityVector {
        self.finish(self.fold(route.nodes()))
    }
}

/// Utility vector of `route`: left fold of the cascaded link BERs, the
/// aggregated path loss, and the hop count.
pub fn route_utility(topology: &Topology, route: &Route) -> Result<UtilityVector> {
    route.check_network(topology.n_nodes())?;
    let mut acc = PartialUtility { ber: 0.0, loss_acc: 0.0, hops: 0 };
    for (i, j) in route.links() {
        let loss = link_path_loss_db(topology, i.into(), j.into())?;
        acc = PartialUtility {
            ber: cascade(acc.ber, link_ber(topology, i.into(), j.into())?),
            loss_acc: acc.loss_acc
                + match topology.params.loss_aggregation {
                    LossAggregation::LinearSum => 10f64.powf(loss / 10.0),
                    LossAggregation::DbSum => loss,
                },
            hops: acc.hops + 1,
        };
    }
    let power_loss = match topology.params.loss_aggregation {
        LossAggregation::LinearSum => 10.0 * acc.loss_acc.log10(),
        LossAggregation::DbSum => acc.loss_acc,
    };
    Ok(UtilityVector { ber: acc.ber, power_loss, delay: acc.hops })
}
