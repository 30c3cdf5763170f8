//! Network-level solvers and the network excess collateral (NEC) ratio.
//!
//! The exact solver is a dynamic program over resolved edge sets. The
//! collateral an edge needs when it is resolved next depends only on which
//! edges are already resolved, not on the order they were resolved in, so
//! the minimum over all `|E|!` elimination orders collapses to a minimum over
//! `2^|E|` subsets.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::str::FromStr;

use petgraph::algo::toposort;
use petgraph::graph::{DiGraph, NodeIndex};
use rayon::prelude::*;

use crate::analysis::{
    is_large_alpha, is_viable, iterated_elimination, solvability_check, EliminationOrder,
    Solvability,
};
use crate::error::SolveError;
use crate::model::{
    default_determination, return_on, CollateralMatrix, EdgeId, EdgeSet, InvestmentNetwork,
    VertexId,
};
use crate::rational::{Money, Rational};
use crate::star_solver::{solve_star, StarInstance};

/// Largest edge count the subset dynamic program accepts.
pub const EXACT_EDGE_LIMIT: usize = 20;

/// Largest edge count the large-alpha search accepts.
pub const LARGE_ALPHA_EDGE_LIMIT: usize = 40;

/// Candidate full-collateral sets the large-alpha search may examine.
pub const LARGE_ALPHA_CANDIDATE_LIMIT: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Auto,
    Star,
    Dag,
    Exact,
    LargeAlpha,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Auto => "auto",
            Method::Star => "star",
            Method::Dag => "dag",
            Method::Exact => "exact",
            Method::LargeAlpha => "large-alpha",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Method::Auto),
            "star" => Ok(Method::Star),
            "dag" => Ok(Method::Dag),
            "exact" => Ok(Method::Exact),
            "large-alpha" => Ok(Method::LargeAlpha),
            other => Err(format!(
                "unknown method `{other}`; expected auto, star, dag, exact or large-alpha"
            )),
        }
    }
}

/// Network optimum over the sum of stand-alone star optima.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Nec {
    Ratio(Rational),
    /// Positive network total while every star is free on its own.
    Unbounded,
}

impl fmt::Display for Nec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nec::Ratio(r) => write!(f, "{r}"),
            Nec::Unbounded => f.write_str("infinite"),
        }
    }
}

/// One enterprise's sub-problem, with `edges[j]` the network edge of player `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarPart {
    pub enterprise: VertexId,
    pub instance: StarInstance,
    pub edges: Vec<EdgeId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarBreakdown {
    pub enterprise: VertexId,
    /// Collateral the network solution pays on this star's edges.
    pub paid: Money,
    /// Optimum of the star solved on its own.
    pub optimum: Money,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub collaterals: CollateralMatrix,
    pub total: Money,
    pub order: EliminationOrder,
    pub stars: Vec<StarBreakdown>,
    pub nec: Nec,
    pub method: Method,
}

impl Solution {
    pub fn star_optimum_sum(&self) -> Money {
        self.stars.iter().map(|s| &s.optimum).sum()
    }
}

/// One star per enterprise: the enterprise, its investors, and the edges
/// between them. A vertex investing in several enterprises shows up in
/// several stars.
pub fn star_decomposition(net: &InvestmentNetwork) -> Vec<StarPart> {
    net.enterprises()
        .map(|k| {
            let edges = net.outgoing(k).to_vec();
            StarPart {
                enterprise: k,
                instance: StarInstance {
                    amounts: edges.iter().map(|&e| net.amount(e).clone()).collect(),
                    cost: net.cost(k).clone(),
                    rate: net.rate(k).clone(),
                },
                edges,
            }
        })
        .collect()
}

fn star_optima(net: &InvestmentNetwork) -> Result<Vec<(VertexId, Money)>, SolveError> {
    star_decomposition(net)
        .into_par_iter()
        .map(|part| Ok((part.enterprise, solve_star(&part.instance)?.total)))
        .collect()
}

fn nec_ratio(total: &Money, star_sum: &Money) -> Nec {
    if star_sum.is_zero() {
        if total.is_zero() {
            Nec::Ratio(Rational::one())
        } else {
            Nec::Unbounded
        }
    } else {
        Nec::Ratio(total / star_sum)
    }
}

/// Network total divided by the sum of the star-decomposition optima.
pub fn compute_nec(net: &InvestmentNetwork, sol: &Solution) -> Result<Nec, SolveError> {
    let star_sum: Money = star_optima(net)?.iter().map(|(_, t)| t).sum();
    Ok(nec_ratio(&sol.total, &star_sum))
}

fn finish(
    net: &InvestmentNetwork,
    collaterals: CollateralMatrix,
    order: EliminationOrder,
    method: Method,
) -> Result<Solution, SolveError> {
    let optima = star_optima(net)?;
    let stars: Vec<StarBreakdown> = optima
        .into_iter()
        .map(|(k, optimum)| StarBreakdown {
            enterprise: k,
            paid: net.outgoing(k).iter().map(|&e| collaterals.get(e)).sum(),
            optimum,
        })
        .collect();
    let total = collaterals.total();
    let star_sum: Money = stars.iter().map(|s| &s.optimum).sum();
    Ok(Solution {
        nec: nec_ratio(&total, &star_sum),
        collaterals,
        total,
        order,
        stars,
        method,
    })
}

fn investment_graph(net: &InvestmentNetwork) -> DiGraph<(), ()> {
    let mut g = DiGraph::with_capacity(net.vertex_count(), net.edge_count());
    for _ in 0..net.vertex_count() {
        g.add_node(());
    }
    for edge in net.edges() {
        g.add_edge(
            NodeIndex::new(edge.enterprise),
            NodeIndex::new(edge.investor),
            (),
        );
    }
    g
}

pub fn is_acyclic(net: &InvestmentNetwork) -> bool {
    !petgraph::algo::is_cyclic_directed(&investment_graph(net))
}

/// Solves an enterprise-only network as a single star.
pub fn solve_single_star(net: &InvestmentNetwork) -> Result<Solution, SolveError> {
    let parts = star_decomposition(net);
    if parts.len() != 1 {
        return Err(SolveError::Precondition(format!(
            "star method needs exactly one enterprise, found {}",
            parts.len()
        )));
    }
    if !is_acyclic(net) {
        return Err(SolveError::CyclicInput);
    }
    solve_dag(net)
}

/// Solves every star on its own and stitches the results together. Investors
/// that are themselves enterprises are secured first (reverse topological
/// order), so no cascade can reach a star while it is being resolved.
pub fn solve_dag(net: &InvestmentNetwork) -> Result<Solution, SolveError> {
    let topo = toposort(&investment_graph(net), None).map_err(|_| SolveError::CyclicInput)?;
    let parts: HashMap<VertexId, StarPart> = star_decomposition(net)
        .into_iter()
        .map(|p| (p.enterprise, p))
        .collect();
    let mut collaterals = CollateralMatrix::zeros(net);
    let mut order = Vec::with_capacity(net.edge_count());
    for k in topo.into_iter().rev().map(|v| v.index()) {
        let Some(part) = parts.get(&k) else { continue };
        let sol = solve_star(&part.instance)?;
        for (j, c) in sol.collaterals.into_iter().enumerate() {
            collaterals.set(net, part.edges[j], c);
        }
        order.extend(sol.order.iter().map(|&j| part.edges[j]));
    }
    finish(net, collaterals, EliminationOrder(order), Method::Dag)
}

/// Least collateral on edge `e` that makes cooperation dominant once the
/// edges in `resolved` cooperate and every other edge defects. `None` when
/// `e`'s investor defaults in that situation, so no collateral helps.
pub fn minimal_matrix_for_resolved_set(
    net: &InvestmentNetwork,
    resolved: &EdgeSet,
    e: EdgeId,
) -> Option<Money> {
    let state = default_determination(net, &resolved.with(e));
    step_cost(net, &state, e)
}

fn step_cost(
    net: &InvestmentNetwork,
    state: &crate::model::InvestState,
    e: EdgeId,
) -> Option<Money> {
    let edge = net.edge(e);
    if state.is_defaulted(edge.investor) {
        return None;
    }
    let ret = return_on(net, state.raised(edge.enterprise), e);
    Some(Rational::max_of(Rational::zero(), &edge.amount - ret))
}

fn bits(mask: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |&j| mask >> j & 1 == 1)
}

/// Exact optimum by dynamic programming over resolved edge sets.
pub fn solve_exact(net: &InvestmentNetwork) -> Result<Solution, SolveError> {
    let m = net.edge_count();
    if m > EXACT_EDGE_LIMIT {
        return Err(SolveError::TooLarge {
            what: "edge set",
            size: m,
            limit: EXACT_EDGE_LIMIT,
        });
    }
    if let Solvability::Infeasible(w) = solvability_check(net) {
        return Err(SolveError::Infeasible(w));
    }
    let size = 1usize << m;
    let mut layers: Vec<Vec<u32>> = vec![Vec::new(); m + 1];
    for mask in 0..size as u32 {
        layers[mask.count_ones() as usize].push(mask);
    }
    let mut cost: Vec<Option<Money>> = vec![None; size];
    let mut last: Vec<u8> = vec![u8::MAX; size];
    cost[0] = Some(Rational::zero());
    for layer in &layers[1..] {
        let results: Vec<(u32, Option<(Money, u8)>)> = layer
            .par_iter()
            .map(|&mask| (mask, best_step(net, &cost, mask)))
            .collect();
        for (mask, best) in results {
            if let Some((c, e)) = best {
                cost[mask as usize] = Some(c);
                last[mask as usize] = e;
            }
        }
    }
    let full = (size - 1) as u32;
    if cost[full as usize].is_none() {
        // Solvability guarantees full collateral resolves every edge.
        unreachable!("solvable network without a complete elimination order");
    }
    let mut collaterals = CollateralMatrix::zeros(net);
    let mut order = Vec::with_capacity(m);
    let mut mask = full;
    while mask != 0 {
        let e = last[mask as usize] as usize;
        let state = default_determination(net, &EdgeSet::from_mask(m, mask as u64));
        let c = step_cost(net, &state, e).expect("reconstructed step is feasible");
        collaterals.set(net, e, c);
        order.push(e);
        mask ^= 1 << e;
    }
    order.reverse();
    finish(net, collaterals, EliminationOrder(order), Method::Exact)
}

/// Cheapest way to reach `mask` with its last resolved edge chosen from
/// `mask`. Ties go to the lowest edge index.
fn best_step(net: &InvestmentNetwork, cost: &[Option<Money>], mask: u32) -> Option<(Money, u8)> {
    if !bits(mask).any(|e| cost[(mask ^ 1 << e) as usize].is_some()) {
        return None;
    }
    let state = default_determination(net, &EdgeSet::from_mask(net.edge_count(), mask as u64));
    let mut best: Option<(Money, u8)> = None;
    for e in bits(mask) {
        let Some(prev) = &cost[(mask ^ 1 << e) as usize] else {
            continue;
        };
        let Some(step) = step_cost(net, &state, e) else {
            continue;
        };
        let total = prev + step;
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, e as u8));
        }
    }
    best
}

/// Cheapest all-or-nothing assignment, searched in increasing total.
///
/// Candidate full-collateral sets are generated lazily in non-decreasing
/// order of their sum; a candidate is only tested on the whole network once
/// every star accepts its share on its own.
pub fn solve_large_alpha(net: &InvestmentNetwork) -> Result<Solution, SolveError> {
    if !is_large_alpha(net) {
        return Err(SolveError::Precondition(
            "large-alpha method needs integer amounts and costs with alpha > Z for every enterprise"
                .into(),
        ));
    }
    let m = net.edge_count();
    if m > LARGE_ALPHA_EDGE_LIMIT {
        return Err(SolveError::TooLarge {
            what: "edge set",
            size: m,
            limit: LARGE_ALPHA_EDGE_LIMIT,
        });
    }
    if let Solvability::Infeasible(w) = solvability_check(net) {
        return Err(SolveError::Infeasible(w));
    }
    let mut sorted: Vec<EdgeId> = (0..m).collect();
    sorted.sort_by(|&a, &b| net.amount(a).cmp(net.amount(b)).then(a.cmp(&b)));
    let parts = star_decomposition(net);
    let mut star_cache: HashMap<(usize, u64), bool> = HashMap::new();
    let mut accepts = |set: u64| {
        parts.iter().enumerate().all(|(p, part)| {
            let local = part
                .edges
                .iter()
                .enumerate()
                .filter(|(_, &e)| set >> e & 1 == 1)
                .fold(0u64, |acc, (j, _)| acc | 1 << j);
            *star_cache.entry((p, local)).or_insert_with(|| {
                let star = part.instance.to_network();
                let full = EdgeSet::from_mask(star.edge_count(), local);
                is_viable(&star, &CollateralMatrix::full_on(&star, &full))
            })
        })
    };

    let mut examined = 0usize;
    let mut found: Option<u64> = None;
    let mut heap: BinaryHeap<Reverse<(Money, u64, usize)>> = BinaryHeap::new();
    let test = |set: u64, accepts: &mut dyn FnMut(u64) -> bool| {
        accepts(set) && {
            let f = EdgeSet::from_mask(m, set);
            is_viable(net, &CollateralMatrix::full_on(net, &f))
        }
    };
    if test(0, &mut accepts) {
        found = Some(0);
    } else if m > 0 {
        heap.push(Reverse((net.amount(sorted[0]).clone(), 1 << sorted[0], 0)));
    }
    while found.is_none() {
        let Some(Reverse((sum, set, pos))) = heap.pop() else {
            break;
        };
        examined += 1;
        if examined > LARGE_ALPHA_CANDIDATE_LIMIT {
            return Err(SolveError::TooLarge {
                what: "large-alpha candidate count",
                size: examined,
                limit: LARGE_ALPHA_CANDIDATE_LIMIT,
            });
        }
        if test(set, &mut accepts) {
            found = Some(set);
            break;
        }
        if pos + 1 < m {
            let next = sorted[pos + 1];
            let cur = sorted[pos];
            heap.push(Reverse((&sum + net.amount(next), set | 1 << next, pos + 1)));
            heap.push(Reverse((
                &sum - net.amount(cur) + net.amount(next),
                set & !(1 << cur) | 1 << next,
                pos + 1,
            )));
        }
    }
    let set = found.expect("full collateral on every edge is viable for solvable networks");
    let collaterals = CollateralMatrix::full_on(net, &EdgeSet::from_mask(m, set));
    let order = iterated_elimination(net, &collaterals).order;
    finish(net, collaterals, order, Method::LargeAlpha)
}

/// Solves with the solver [`auto_method`] picks.
pub fn solve(net: &InvestmentNetwork) -> Result<Solution, SolveError> {
    solve_with(net, Method::Auto)
}

/// Solver the dispatcher would pick: one enterprise, acyclic, large-alpha,
/// then the exact dynamic program.
pub fn auto_method(net: &InvestmentNetwork) -> Method {
    if is_acyclic(net) {
        if net.enterprises().count() == 1 {
            Method::Star
        } else {
            Method::Dag
        }
    } else if is_large_alpha(net) {
        Method::LargeAlpha
    } else {
        Method::Exact
    }
}

pub fn solve_with(net: &InvestmentNetwork, method: Method) -> Result<Solution, SolveError> {
    if let Solvability::Infeasible(w) = solvability_check(net) {
        return Err(SolveError::Infeasible(w));
    }
    let method = match method {
        Method::Auto => auto_method(net),
        m => m,
    };
    match method {
        Method::Auto | Method::Star => solve_single_star(net).map(|s| Solution {
            method: Method::Star,
            ..s
        }),
        Method::Dag => solve_dag(net),
        Method::Exact => solve_exact(net),
        Method::LargeAlpha => solve_large_alpha(net),
    }
}
