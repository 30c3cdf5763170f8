//! Equilibrium structure: iterated elimination of dominated strategies,
//! viability of a collateral matrix, and solvability of a network.
//!
//! By monotonicity, a player's worst case when deciding on an edge is that
//! every not-yet-resolved edge defects. Elimination therefore only needs the
//! set of resolved edges: an edge can be resolved next iff its investor,
//! cooperating alongside the resolved set, is not in default and gets at
//! least its investment back.

use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::error::ModelError;
use crate::model::{
    default_determination, edge_utility_in, CollateralMatrix, EdgeId, EdgeSet, InvestmentNetwork,
    VertexId,
};
use crate::rational::{Money, Rational};

/// Sequence of edges in which cooperation can be enforced one at a time.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EliminationOrder(pub Vec<EdgeId>);

impl EliminationOrder {
    pub fn edges(&self) -> &[EdgeId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks each prefix: with the first `t` edges cooperating and all later
    /// edges defecting, the player of edge `t` is solvent and weakly prefers
    /// to cooperate. Returns the first failing position.
    pub fn validate(&self, net: &InvestmentNetwork, c: &CollateralMatrix) -> Result<(), usize> {
        let mut resolved = net.no_edges();
        for (t, &e) in self.0.iter().enumerate() {
            if resolved.contains(e) || !resolvable(net, c, &resolved, e) {
                return Err(t);
            }
            resolved.insert(e);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Elimination {
    pub order: EliminationOrder,
    pub stuck: EdgeSet,
}

/// Whether cooperation on `e` is (weakly) dominant once `resolved` cooperate.
pub fn resolvable(
    net: &InvestmentNetwork,
    c: &CollateralMatrix,
    resolved: &EdgeSet,
    e: EdgeId,
) -> bool {
    let with = resolved.with(e);
    let state = default_determination(net, &with);
    !state.is_defaulted(net.edge(e).investor)
        && edge_utility_in(net, c, &with, &state, e) >= *net.amount(e)
}

/// Greedy elimination, scanning unresolved edges in input order. The final
/// stuck set does not depend on the scan order.
pub fn iterated_elimination(net: &InvestmentNetwork, c: &CollateralMatrix) -> Elimination {
    let mut resolved = net.no_edges();
    let mut order = Vec::with_capacity(net.edge_count());
    loop {
        let mut progressed = false;
        for e in 0..net.edge_count() {
            if !resolved.contains(e) && resolvable(net, c, &resolved, e) {
                resolved.insert(e);
                order.push(e);
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    Elimination {
        order: EliminationOrder(order),
        stuck: resolved.complement(),
    }
}

/// True iff all-cooperate is the unique Nash equilibrium under `c`.
pub fn is_viable(net: &InvestmentNetwork, c: &CollateralMatrix) -> bool {
    iterated_elimination(net, c).stuck.is_empty()
}

/// Coordinates of a viable matrix that can still be lowered, by
/// `epsilon` = half the smallest positive coordinate, without losing
/// viability. Empty means the matrix passes the minimality probe.
pub fn reducible_coordinates(net: &InvestmentNetwork, c: &CollateralMatrix) -> Vec<EdgeId> {
    let Some(eps) = c
        .values()
        .iter()
        .filter(|v| v.is_positive())
        .min()
        .map(|m| m / Rational::from_integer(2))
    else {
        return Vec::new();
    };
    (0..net.edge_count())
        .filter(|&e| c.get(e).is_positive())
        .filter(|&e| {
            let mut lowered = c.clone();
            lowered.set(net, e, c.get(e) - &eps);
            is_viable(net, &lowered)
        })
        .collect()
}

/// Subgraph proving that no collateral matrix can work: every member lies on
/// a directed cycle inside the subgraph, and no member enterprise can cover
/// its cost from investors outside the subgraph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfeasibilityWitness {
    pub vertices: Vec<VertexId>,
    pub ids: Vec<String>,
    /// `Z_k` minus the investment available from outside the subgraph.
    pub shortfalls: Vec<Money>,
}

impl fmt::Display for InfeasibilityWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "self-dependent subgraph {{")?;
        for (j, (id, s)) in self.ids.iter().zip(&self.shortfalls).enumerate() {
            if j > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{id}: short {s}")?;
        }
        write!(f, "}}")
    }
}

/// A fresh spike standing in for a removed enterprise's investment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticSpike {
    /// Synthetic vertex id, numbered from `n` upwards.
    pub id: usize,
    pub replaces: EdgeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Reduction {
    pub removal_order: Vec<VertexId>,
    pub synthetic_spikes: Vec<SyntheticSpike>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Solvability {
    Solvable(Reduction),
    Infeasible(InfeasibilityWitness),
}

impl Solvability {
    pub fn is_solvable(&self) -> bool {
        matches!(self, Solvability::Solvable(_))
    }
}

/// Repeatedly removes an enterprise whose spike inflow covers its cost,
/// turning its own investments into spikes. The network can be stabilized by
/// collaterals iff this empties the graph.
///
/// A spike that also invests elsewhere keeps its other edges when one of its
/// enterprises is removed.
pub fn solvability_check(net: &InvestmentNetwork) -> Solvability {
    let n = net.vertex_count();
    let mut alive: Vec<bool> = (0..n).map(|v| net.is_enterprise(v)).collect();
    let mut reduction = Reduction::default();
    loop {
        let next = (0..n).find(|&k| alive[k] && spike_inflow(net, &alive, k) >= *net.cost(k));
        let Some(k) = next else { break };
        alive[k] = false;
        reduction.removal_order.push(k);
        for &e in net.incoming(k) {
            if alive[net.edge(e).enterprise] {
                let id = n + reduction.synthetic_spikes.len();
                reduction
                    .synthetic_spikes
                    .push(SyntheticSpike { id, replaces: e });
            }
        }
    }
    let remaining: Vec<VertexId> = (0..n).filter(|&v| alive[v]).collect();
    if remaining.is_empty() {
        Solvability::Solvable(reduction)
    } else {
        Solvability::Infeasible(witness_from(net, &remaining))
    }
}

fn spike_inflow(net: &InvestmentNetwork, alive: &[bool], k: VertexId) -> Money {
    net.outgoing(k)
        .iter()
        .filter(|&&e| !alive[net.edge(e).investor])
        .map(|&e| net.amount(e))
        .sum()
}

/// Narrows the stuck enterprises to the sink strongly connected components
/// of their induced subgraph. Members of a sink component only receive
/// investment from inside the component or from outside the stuck set, so
/// the outside-inflow condition carries over.
fn witness_from(net: &InvestmentNetwork, remaining: &[VertexId]) -> InfeasibilityWitness {
    let mut graph: DiGraph<VertexId, ()> = DiGraph::new();
    let mut node = vec![None; net.vertex_count()];
    for &v in remaining {
        node[v] = Some(graph.add_node(v));
    }
    for &v in remaining {
        for &e in net.outgoing(v) {
            if let Some(target) = node[net.edge(e).investor] {
                graph.add_edge(node[v].unwrap(), target, ());
            }
        }
    }
    let sccs = tarjan_scc(&graph);
    let mut component = vec![usize::MAX; graph.node_count()];
    for (j, scc) in sccs.iter().enumerate() {
        for &x in scc {
            component[x.index()] = j;
        }
    }
    let is_sink = |j: usize| {
        sccs[j].iter().all(|&x| {
            graph
                .neighbors(x)
                .all(|y: NodeIndex| component[y.index()] == j)
        })
    };
    let mut members: Vec<VertexId> = sccs
        .iter()
        .enumerate()
        .filter(|(j, scc)| scc.len() > 1 && is_sink(*j))
        .flat_map(|(_, scc)| scc.iter().map(|&x| graph[x]))
        .collect();
    if members.is_empty() {
        // Only reachable for unprofitable inputs: an enterprise with no stuck
        // investors whose whole opportunity falls short of its cost.
        members = remaining.to_vec();
    }
    members.sort_unstable();
    build_witness(net, members)
}

fn build_witness(net: &InvestmentNetwork, vertices: Vec<VertexId>) -> InfeasibilityWitness {
    let inside = membership(net, &vertices);
    let shortfalls = vertices
        .iter()
        .map(|&k| net.cost(k) - outside_inflow(net, &inside, k))
        .collect();
    InfeasibilityWitness {
        ids: vertices.iter().map(|&v| net.vertex(v).id.clone()).collect(),
        vertices,
        shortfalls,
    }
}

fn membership(net: &InvestmentNetwork, vertices: &[VertexId]) -> Vec<bool> {
    let mut inside = vec![false; net.vertex_count()];
    for &v in vertices {
        inside[v] = true;
    }
    inside
}

fn outside_inflow(net: &InvestmentNetwork, inside: &[bool], k: VertexId) -> Money {
    net.outgoing(k)
        .iter()
        .filter(|&&e| !inside[net.edge(e).investor])
        .map(|&e| net.amount(e))
        .sum()
}

/// Direct check of the two witness conditions, independent of how the
/// witness was found.
pub fn witness_holds(net: &InvestmentNetwork, vertices: &[VertexId]) -> bool {
    if vertices.is_empty() {
        return false;
    }
    let inside = membership(net, vertices);
    let short = vertices
        .iter()
        .all(|&k| net.is_enterprise(k) && outside_inflow(net, &inside, k) < *net.cost(k));
    short && vertices.iter().all(|&v| on_internal_cycle(net, &inside, v))
}

fn on_internal_cycle(net: &InvestmentNetwork, inside: &[bool], start: VertexId) -> bool {
    let mut seen = vec![false; net.vertex_count()];
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for &e in net.outgoing(v) {
            let w = net.edge(e).investor;
            if !inside[w] {
                continue;
            }
            if w == start {
                return true;
            }
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    false
}

fn edge_and_group(
    net: &InvestmentNetwork,
    k: VertexId,
    group: &[VertexId],
    i: VertexId,
) -> Result<(Money, Money), ModelError> {
    let find = |v: VertexId| {
        net.find_edge(k, v).ok_or(ModelError::NoSuchEdge {
            enterprise: k,
            investor: v,
        })
    };
    let x = net.amount(find(i)?).clone();
    let mut sum = Rational::zero();
    for &j in group {
        sum += net.amount(find(j)?);
    }
    Ok((x, sum))
}

/// `x_ki + sum_{A_k} x_kj >= Z_k (1 + 1/alpha_k)`: with `A_k` investing,
/// `i` cooperates on `k` even without collateral.
pub fn zero_collateral_condition(
    net: &InvestmentNetwork,
    k: VertexId,
    group: &[VertexId],
    i: VertexId,
) -> Result<bool, ModelError> {
    let (x, sum) = edge_and_group(net, k, group, i)?;
    let threshold = net.cost(k) * (Rational::one() + net.rate(k).recip());
    Ok(x + sum >= threshold)
}

/// `x_ki + sum_{A_k} x_kj <= Z_k`: if only `A_k` invests besides `i`, then
/// `i` needs full collateral.
pub fn full_collateral_condition(
    net: &InvestmentNetwork,
    k: VertexId,
    group: &[VertexId],
    i: VertexId,
) -> Result<bool, ModelError> {
    let (x, sum) = edge_and_group(net, k, group, i)?;
    Ok(x + sum <= *net.cost(k))
}

/// Integer amounts and costs with `alpha_k > Z_k` everywhere. In this regime
/// every optimal collateral is either zero or full.
pub fn is_large_alpha(net: &InvestmentNetwork) -> bool {
    net.edges().iter().all(|e| e.amount.is_integer())
        && net
            .enterprises()
            .all(|k| net.cost(k).is_integer() && net.rate(k) > net.cost(k))
}
