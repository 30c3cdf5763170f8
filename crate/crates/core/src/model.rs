//! The investment network and the game it induces.
//!
//! An edge `(k, i)` with amount `x` is an opportunity for investor `i` to put
//! `x` into the enterprise of `k`. Each investor decides per edge whether to
//! cooperate (invest) or defect (keep `x`). Enterprises that raise less than
//! their cost default, and a defaulted firm withdraws every investment it was
//! going to make, which can push further firms into default.

use std::collections::HashMap;
use std::fmt;

use fixedbitset::FixedBitSet;

use crate::error::ModelError;
use crate::rational::{Money, Rate, Rational};

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vertex {
    pub id: String,
    /// Operational cost `Z`. Unused for vertices without investors.
    pub cost: Money,
    /// Interest rate `alpha`. Unused for vertices without investors.
    pub rate: Rate,
}

impl Vertex {
    pub fn enterprise(id: impl Into<String>, cost: Money, rate: Rate) -> Self {
        Vertex {
            id: id.into(),
            cost,
            rate,
        }
    }

    pub fn spike(id: impl Into<String>) -> Self {
        Vertex {
            id: id.into(),
            cost: Rational::zero(),
            rate: Rational::zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub enterprise: VertexId,
    pub investor: VertexId,
    pub amount: Money,
}

/// Vertices, weighted investment edges, and per-enterprise cost and rate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvestmentNetwork {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    outgoing: Vec<Vec<EdgeId>>,
    incoming: Vec<Vec<EdgeId>>,
}

impl InvestmentNetwork {
    /// Builds adjacency. Only dangling vertex references are rejected here;
    /// everything else is reported by [`validate_network`].
    pub fn new(vertices: Vec<Vertex>, edges: Vec<Edge>) -> Result<Self, ModelError> {
        let n = vertices.len();
        let mut outgoing = vec![Vec::new(); n];
        let mut incoming = vec![Vec::new(); n];
        for (e, edge) in edges.iter().enumerate() {
            for v in [edge.enterprise, edge.investor] {
                if v >= n {
                    return Err(ModelError::VertexOutOfRange {
                        edge: e,
                        vertex: v,
                        n,
                    });
                }
            }
            outgoing[edge.enterprise].push(e);
            incoming[edge.investor].push(e);
        }
        Ok(InvestmentNetwork {
            vertices,
            edges,
            outgoing,
            incoming,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex(&self, v: VertexId) -> &Vertex {
        &self.vertices[v]
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e]
    }

    pub fn amount(&self, e: EdgeId) -> &Money {
        &self.edges[e].amount
    }

    pub fn cost(&self, v: VertexId) -> &Money {
        &self.vertices[v].cost
    }

    pub fn rate(&self, v: VertexId) -> &Rate {
        &self.vertices[v].rate
    }

    /// Edges on which `v` raises capital.
    pub fn outgoing(&self, v: VertexId) -> &[EdgeId] {
        &self.outgoing[v]
    }

    /// Edges on which `v` is the investor.
    pub fn incoming(&self, v: VertexId) -> &[EdgeId] {
        &self.incoming[v]
    }

    pub fn is_enterprise(&self, v: VertexId) -> bool {
        !self.outgoing[v].is_empty()
    }

    pub fn enterprises(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertices.len()).filter(|&v| self.is_enterprise(v))
    }

    /// `X_k`, the sum of all investment opportunities in enterprise `k`.
    pub fn total_opportunity(&self, k: VertexId) -> Money {
        self.outgoing[k]
            .iter()
            .map(|&e| &self.edges[e].amount)
            .sum()
    }

    pub fn find_edge(&self, enterprise: VertexId, investor: VertexId) -> Option<EdgeId> {
        self.outgoing
            .get(enterprise)?
            .iter()
            .copied()
            .find(|&e| self.edges[e].investor == investor)
    }

    pub fn index_of(&self, id: &str) -> Option<VertexId> {
        self.vertices.iter().position(|v| v.id == id)
    }

    pub fn label(&self, e: EdgeId) -> String {
        let edge = &self.edges[e];
        format!(
            "({}, {})",
            self.vertices[edge.enterprise].id, self.vertices[edge.investor].id
        )
    }

    pub fn all_edges(&self) -> EdgeSet {
        EdgeSet::full(self.edges.len())
    }

    pub fn no_edges(&self) -> EdgeSet {
        EdgeSet::empty(self.edges.len())
    }
}

/// Incremental construction by vertex name.
#[derive(Debug, Default)]
pub struct NetworkBuilder {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    index: HashMap<String, VertexId>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn enterprise(mut self, id: &str, cost: impl Into<Money>, rate: impl Into<Rate>) -> Self {
        self.push(Vertex::enterprise(id, cost.into(), rate.into()));
        self
    }

    pub fn spike(mut self, id: &str) -> Self {
        self.push(Vertex::spike(id));
        self
    }

    /// Adds `investor` as a spike if the name is new.
    pub fn edge(mut self, enterprise: &str, investor: &str, amount: impl Into<Money>) -> Self {
        let k = self.id(enterprise);
        let i = self.id(investor);
        self.edges.push(Edge {
            enterprise: k,
            investor: i,
            amount: amount.into(),
        });
        self
    }

    pub fn build(self) -> InvestmentNetwork {
        InvestmentNetwork::new(self.vertices, self.edges).expect("builder indices are in range")
    }

    fn push(&mut self, v: Vertex) {
        match self.index.get(&v.id) {
            Some(&i) => self.vertices[i] = v,
            None => {
                self.index.insert(v.id.clone(), self.vertices.len());
                self.vertices.push(v);
            }
        }
    }

    fn id(&mut self, name: &str) -> VertexId {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        self.push(Vertex::spike(name));
        self.vertices.len() - 1
    }
}

/// A subset of a network's edges.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct EdgeSet(FixedBitSet);

impl EdgeSet {
    pub fn empty(edge_count: usize) -> Self {
        EdgeSet(FixedBitSet::with_capacity(edge_count))
    }

    pub fn full(edge_count: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(edge_count);
        bits.insert_range(..);
        EdgeSet(bits)
    }

    pub fn from_edges(edge_count: usize, edges: impl IntoIterator<Item = EdgeId>) -> Self {
        let mut s = Self::empty(edge_count);
        for e in edges {
            s.insert(e);
        }
        s
    }

    /// Bit `j` of `mask` selects edge `j`.
    pub fn from_mask(edge_count: usize, mask: u64) -> Self {
        Self::from_edges(edge_count, (0..edge_count).filter(|&j| mask >> j & 1 == 1))
    }

    pub fn capacity(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.0.contains(e)
    }

    pub fn insert(&mut self, e: EdgeId) {
        self.0.insert(e);
    }

    pub fn remove(&mut self, e: EdgeId) {
        self.0.set(e, false);
    }

    pub fn with(&self, e: EdgeId) -> Self {
        let mut s = self.clone();
        s.insert(e);
        s
    }

    pub fn without(&self, e: EdgeId) -> Self {
        let mut s = self.clone();
        s.remove(e);
        s
    }

    pub fn len(&self) -> usize {
        self.0.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_clear()
    }

    pub fn is_subset(&self, other: &EdgeSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.0.ones()
    }

    pub fn complement(&self) -> Self {
        let mut bits = self.0.clone();
        bits.toggle_range(..);
        EdgeSet(bits)
    }
}

impl fmt::Debug for EdgeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Outcome of the default cascade for a cooperate set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvestState {
    defaulted: FixedBitSet,
    invest: EdgeSet,
    raised: Vec<Money>,
}

impl InvestState {
    pub fn is_defaulted(&self, v: VertexId) -> bool {
        self.defaulted.contains(v)
    }

    pub fn defaulted(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.defaulted.ones()
    }

    pub fn invest(&self) -> &EdgeSet {
        &self.invest
    }

    /// Capital raised by `k` over its invest edges.
    pub fn raised(&self, k: VertexId) -> &Money {
        &self.raised[k]
    }
}

/// Runs the default cascade to its fixed point.
///
/// Starting from `I = cooperate` and no defaults, any enterprise whose
/// invest-edge inflow is strictly below its cost defaults and all edges on
/// which it is the investor leave `I`. The least fixed point does not depend
/// on the order in which firms are examined.
pub fn default_determination(net: &InvestmentNetwork, cooperate: &EdgeSet) -> InvestState {
    let n = net.vertex_count();
    let mut invest = cooperate.clone();
    let mut raised = vec![Rational::zero(); n];
    for e in cooperate.iter() {
        let edge = net.edge(e);
        raised[edge.enterprise] += &edge.amount;
    }
    let mut defaulted = FixedBitSet::with_capacity(n);
    let mut pending: Vec<VertexId> = net.enterprises().collect();
    while let Some(k) = pending.pop() {
        if defaulted.contains(k) || raised[k] >= *net.cost(k) {
            continue;
        }
        defaulted.insert(k);
        for &e in net.incoming(k) {
            if invest.contains(e) {
                invest.remove(e);
                let target = net.edge(e).enterprise;
                raised[target] -= net.amount(e);
                if !defaulted.contains(target) {
                    pending.push(target);
                }
            }
        }
    }
    InvestState {
        defaulted,
        invest,
        raised,
    }
}

/// Proportional share of enterprise `k`'s net return paid on invest edge `e`,
/// clamped at zero.
pub fn enterprise_return(
    net: &InvestmentNetwork,
    state: &InvestState,
    e: EdgeId,
) -> Result<Money, ModelError> {
    if e >= net.edge_count() {
        return Err(ModelError::EdgeOutOfRange(e));
    }
    if !state.invest.contains(e) {
        return Err(ModelError::NotInvesting(e));
    }
    Ok(return_on(net, state.raised(net.edge(e).enterprise), e))
}

/// Return on edge `e` when its enterprise has raised `raised` (which must
/// include `e`'s own amount).
pub(crate) fn return_on(net: &InvestmentNetwork, raised: &Money, e: EdgeId) -> Money {
    let edge = net.edge(e);
    let k = edge.enterprise;
    let surplus = raised - net.cost(k);
    if !surplus.is_positive() {
        return Rational::zero();
    }
    (Rational::one() + net.rate(k)) * surplus * &edge.amount / raised
}

/// Utility of an investing player given return `ret` and collateral `c`.
pub(crate) fn invest_utility(amount: &Money, ret: Money, collateral: &Money) -> Money {
    if &ret <= amount {
        Rational::min_of(ret + collateral, amount.clone())
    } else {
        ret
    }
}

/// Per-edge collateral amounts, normalized into `[0, x_e]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollateralMatrix {
    values: Vec<Money>,
}

impl CollateralMatrix {
    /// Amounts above an edge's investment are payoff-equivalent to full
    /// collateral and are stored as such.
    pub fn new(net: &InvestmentNetwork, values: Vec<Money>) -> Result<Self, ModelError> {
        if values.len() != net.edge_count() {
            return Err(ModelError::CollateralLength {
                expected: net.edge_count(),
                got: values.len(),
            });
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(e, v)| {
                if v.is_negative() {
                    Err(ModelError::NegativeCollateral {
                        edge: e,
                        amount: v.to_string(),
                    })
                } else {
                    Ok(Rational::min_of(v, net.amount(e).clone()))
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(CollateralMatrix { values })
    }

    pub fn zeros(net: &InvestmentNetwork) -> Self {
        CollateralMatrix {
            values: vec![Rational::zero(); net.edge_count()],
        }
    }

    pub fn full(net: &InvestmentNetwork) -> Self {
        CollateralMatrix {
            values: net.edges().iter().map(|e| e.amount.clone()).collect(),
        }
    }

    /// Full collateral on `edges`, zero elsewhere.
    pub fn full_on(net: &InvestmentNetwork, edges: &EdgeSet) -> Self {
        CollateralMatrix {
            values: (0..net.edge_count())
                .map(|e| {
                    if edges.contains(e) {
                        net.amount(e).clone()
                    } else {
                        Rational::zero()
                    }
                })
                .collect(),
        }
    }

    pub fn get(&self, e: EdgeId) -> &Money {
        &self.values[e]
    }

    pub fn set(&mut self, net: &InvestmentNetwork, e: EdgeId, value: Money) {
        assert!(!value.is_negative(), "negative collateral");
        self.values[e] = Rational::min_of(value, net.amount(e).clone());
    }

    pub fn values(&self) -> &[Money] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> Money {
        self.values.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Cooperate,
    Defect,
}

/// Utility player `i` of edge `e = (k, i)` derives from `k` under `cooperate`.
pub fn edge_utility(
    net: &InvestmentNetwork,
    c: &CollateralMatrix,
    cooperate: &EdgeSet,
    e: EdgeId,
) -> Money {
    let state = default_determination(net, cooperate);
    edge_utility_in(net, c, cooperate, &state, e)
}

pub(crate) fn edge_utility_in(
    net: &InvestmentNetwork,
    c: &CollateralMatrix,
    cooperate: &EdgeSet,
    state: &InvestState,
    e: EdgeId,
) -> Money {
    let edge = net.edge(e);
    if !cooperate.contains(e) {
        return edge.amount.clone();
    }
    if state.is_defaulted(edge.investor) {
        return Rational::zero();
    }
    let ret = return_on(net, state.raised(edge.enterprise), e);
    invest_utility(&edge.amount, ret, c.get(e))
}

/// Total utility of player `i` over all edges on which it is the investor.
pub fn player_utility(
    net: &InvestmentNetwork,
    c: &CollateralMatrix,
    cooperate: &EdgeSet,
    i: VertexId,
) -> Money {
    let state = default_determination(net, cooperate);
    net.incoming(i)
        .iter()
        .map(|&e| edge_utility_in(net, c, cooperate, &state, e))
        .sum()
}

/// Best action on edge `e`, every other edge held at `cooperate`.
///
/// Cooperation is chosen whenever it pays at least the defect payoff `x_e`;
/// this is the codebase's single tie rule. A player that would be in default
/// earns nothing by cooperating and therefore defects.
pub fn best_response(
    net: &InvestmentNetwork,
    c: &CollateralMatrix,
    cooperate: &EdgeSet,
    e: EdgeId,
) -> Action {
    let with = cooperate.with(e);
    let state = default_determination(net, &with);
    if edge_utility_in(net, c, &with, &state, e) >= *net.amount(e)
        && !state.is_defaulted(net.edge(e).investor)
    {
        Action::Cooperate
    } else {
        Action::Defect
    }
}

/// True iff no single edge decision can be improved.
pub fn is_nash_equilibrium(
    net: &InvestmentNetwork,
    c: &CollateralMatrix,
    cooperate: &EdgeSet,
) -> bool {
    (0..net.edge_count()).all(|e| {
        let chosen = if cooperate.contains(e) {
            Action::Cooperate
        } else {
            Action::Defect
        };
        best_response(net, c, cooperate, e) == chosen
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NonPositiveWeight {
        edge: EdgeId,
    },
    SelfEdge {
        edge: EdgeId,
    },
    DuplicateEdge {
        edge: EdgeId,
        first: EdgeId,
    },
    NegativeCost {
        vertex: VertexId,
    },
    NonPositiveRate {
        vertex: VertexId,
    },
    /// `(1 + alpha)(X - Z) < X`.
    Unprofitable {
        vertex: VertexId,
        all_in_return: Money,
        opportunity: Money,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    messages: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> &[String] {
        &self.messages
    }

    fn push(&mut self, v: Violation, msg: String) {
        self.violations.push(v);
        self.messages.push(msg);
    }
}

/// Checks structural invariants and that every enterprise is profitable when
/// all of its investors cooperate. Never aborts; every problem is listed.
pub fn validate_network(net: &InvestmentNetwork) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen: HashMap<(VertexId, VertexId), EdgeId> = HashMap::new();
    for (e, edge) in net.edges().iter().enumerate() {
        let label = net.label(e);
        if !edge.amount.is_positive() {
            report.push(
                Violation::NonPositiveWeight { edge: e },
                format!("edge {label}: non-positive edge weight {}", edge.amount),
            );
        }
        if edge.enterprise == edge.investor {
            report.push(
                Violation::SelfEdge { edge: e },
                format!("edge {label}: a firm cannot invest in its own enterprise"),
            );
        }
        if let Some(&first) = seen.get(&(edge.enterprise, edge.investor)) {
            report.push(
                Violation::DuplicateEdge { edge: e, first },
                format!("edge {label}: duplicate of edge #{first}"),
            );
        } else {
            seen.insert((edge.enterprise, edge.investor), e);
        }
    }
    for k in net.enterprises() {
        let id = &net.vertex(k).id;
        let cost = net.cost(k);
        let rate = net.rate(k);
        if cost.is_negative() {
            report.push(
                Violation::NegativeCost { vertex: k },
                format!("enterprise {id}: negative cost {cost}"),
            );
        }
        if !rate.is_positive() {
            report.push(
                Violation::NonPositiveRate { vertex: k },
                format!("enterprise {id}: interest rate must be positive, got {rate}"),
            );
        }
        let opportunity = net.total_opportunity(k);
        let all_in_return = (Rational::one() + rate) * (&opportunity - cost);
        if all_in_return < opportunity {
            report.push(
                Violation::Unprofitable {
                    vertex: k,
                    all_in_return: all_in_return.clone(),
                    opportunity: opportunity.clone(),
                },
                format!(
                    "enterprise {id}: unprofitable, (1+alpha)(X-Z) = {all_in_return} < X = {opportunity}"
                ),
            );
        }
    }
    report
}
