use thiserror::Error;

use crate::analysis::InfeasibilityWitness;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("decimal literal `{0}` is not allowed; write exact values as \"p/q\" (for example \"1/2\" instead of \"0.5\")")]
    Decimal(String),
    #[error("malformed rational `{0}`; expected \"p/q\" or an integer")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("edge {edge} references vertex {vertex}, but the network has {n} vertices")]
    VertexOutOfRange {
        edge: usize,
        vertex: usize,
        n: usize,
    },
    #[error("edge {0} is not an invest edge; its return is undefined")]
    NotInvesting(usize),
    #[error("vertex {investor} has no investment opportunity in enterprise {enterprise}")]
    NoSuchEdge { enterprise: usize, investor: usize },
    #[error("edge index {0} out of range")]
    EdgeOutOfRange(usize),
    #[error("collateral vector has {got} entries, network has {expected} edges")]
    CollateralLength { expected: usize, got: usize },
    #[error("negative collateral {amount} on edge {edge}")]
    NegativeCollateral { edge: usize, amount: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("no viable collateral matrix exists: {0}")]
    Infeasible(InfeasibilityWitness),
    #[error("{what} has size {size}, above the exact-solver limit of {limit}")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },
    #[error("network contains a directed cycle; use the exact or large-alpha solver")]
    CyclicInput,
    #[error("precondition violated: {0}")]
    Precondition(String),
}

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("invalid network document at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported document version {0}; expected 1")]
    Version(u32),
    #[error("duplicate vertex id `{0}`")]
    DuplicateVertex(String),
    #[error("edges[{index}]: unknown vertex id `{id}`")]
    UnknownVertex { index: usize, id: String },
    #[error("edges[{index}]: duplicate edge ({enterprise}, {investor})")]
    DuplicateEdge {
        index: usize,
        enterprise: String,
        investor: String,
    },
    #[error("collaterals[{index}]: edge ({enterprise}, {investor}) is not in the network")]
    UnknownEdge {
        index: usize,
        enterprise: String,
        investor: String,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<serde_json::Error> for DocumentError {
    fn from(e: serde_json::Error) -> Self {
        let mut message = e.to_string();
        // The position is reported separately.
        if let Some(at) = message.rfind(" at line ") {
            message.truncate(at);
        }
        DocumentError::Syntax {
            line: e.line(),
            column: e.column(),
            message,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("no subset sums above the threshold {threshold} (total is {total})")]
    NoSolution { threshold: i64, total: i64 },
    #[error("instance too large: {size} items, limit {limit}")]
    TooLarge { size: usize, limit: usize },
}
