use thiserror::Error;

use crate::graph::NodeId;
use crate::selection::SelectionConditionReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    // graph construction
    #[error("invalid node name `{0}` (expected letters, digits, underscore)")]
    InvalidNodeName(String),
    #[error("directed cycle detected: {}", render_cycle(.0))]
    CycleDetected(Vec<NodeId>),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{0}` declared more than once")]
    DuplicateNode(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("selection indicator `{0}` cannot have children")]
    SelectionHasChild(String),
    #[error("discrepancy node `{0}` cannot have parents")]
    DiscrepancyHasParent(String),
    #[error("discrepancy node `{0}` has no children")]
    DiscrepancyWithoutChild(String),

    // set arguments
    #[error("cannot condition on latent node `{0}`")]
    ConditionOnLatent(String),
    #[error("node sets overlap on `{0}`")]
    OverlappingSets(String),
    #[error("{0} must not be empty")]
    EmptySet(&'static str),
    #[error("graph has {nodes} nodes after expansion; path enumeration is limited to {limit}")]
    GraphTooLarge { nodes: usize, limit: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    // selection
    #[error("graph has no selection indicator node")]
    NoSelectionNode,
    #[error("graph has more than one selection indicator: {}", join(.0))]
    MultipleSelectionNodes(Vec<NodeId>),
    #[error("selection backdoor criterion fails ({})", .0.failed_conditions().join(", "))]
    CriterionFails(Box<SelectionConditionReport>),

    // scm
    #[error("joint distribution would have {cells} cells (limit {limit})")]
    JointTooLarge { cells: u128, limit: u128 },
    #[error("malformed CPT: {0}")]
    MalformedCpt(String),
    #[error("SCM is incompatible with the graph: {0}")]
    IncompatibleScm(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{var}` has no value `{value}`")]
    UnknownValue { var: String, value: String },
    #[error("cannot intervene on latent variable `{0}`")]
    InterveneOnLatent(String),
    #[error("conditioning event has probability zero: {0}")]
    ZeroProbabilityCondition(String),
    #[error("stratum has probability zero: {0}")]
    ZeroProbabilityStratum(String),

    // transport
    #[error("source and target models differ structurally: {0}")]
    StructuralMismatch(String),
    #[error("CPT of `{0}` differs between domains but is not downstream of a discrepancy node")]
    IllegalCptDrift(String),
    #[error("effect is not transportable with the given witness set: {0}")]
    NotTransportable(String),

    // dsl
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("duplicate declaration of `{0}`")]
    DuplicateDeclaration(String),
    #[error("line {line}:{col}: {inner}")]
    Located { line: usize, col: usize, inner: Box<Error> },
}

impl Error {
    /// Strips any source-location wrapper.
    pub fn root(&self) -> &Error {
        match self {
            Error::Located { inner, .. } => inner.root(),
            other => other,
        }
    }

    pub(crate) fn at(self, line: usize, col: usize) -> Error {
        match self {
            located @ (Error::Located { .. } | Error::Syntax { .. }) => located,
            other => Error::Located { line, col, inner: Box::new(other) },
        }
    }
}

fn join(ids: &[NodeId]) -> String {
    ids.iter().map(NodeId::as_str).collect::<Vec<_>>().join(", ")
}

fn render_cycle(ids: &[NodeId]) -> String {
    ids.iter().map(NodeId::as_str).collect::<Vec<_>>().join(" -> ")
}
