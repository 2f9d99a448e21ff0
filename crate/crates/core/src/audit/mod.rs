//! Audit specs: the `.audit` text format, the bias classifier, report
//! rendering and the bundled case-study corpus.
//!
//! ```text
//! title "Confounded style model";
//! case cs01;
//!
//! graph fig4 {
//!     node X, Z, G, M, A;
//!     latent E;
//!     G -> X; G -> Z;
//!     A -> M -> Z;
//!     E -> X; E -> Z;
//! }
//!
//! scm {
//!     domain W = {0, 1};
//!     cpt W = [0.5, 0.5];
//!     cpt X | W = [0.9, 0.1; 0.1, 0.9];
//! }
//!
//! query {
//!     identify X -> Z adjust {A, G, M};
//!     selection X -> Z adjust {W} measured {W, X, Z} population {W};
//!     transport X -> Z as label;
//!     quantify X=1 -> Z=1;
//! }
//! ```
//!
//! A graph becomes a selection diagram when it declares discrepancy nodes
//! or a `domains Source -> Target;` line; such specs may carry a second
//! model, `scm target { ... }`, for the target domain.

mod classify;
pub mod corpus;
mod lexer;
mod parser;
mod printer;
mod report;

use std::fmt;

use serde::Serialize;

use crate::graph::{CausalGraph, NodeId, NodeSet};
use crate::scm::DiscreteScm;
use crate::transport::SelectionDiagram;

pub use classify::classify_biases;
pub use parser::parse_spec;
pub use printer::render_spec;
pub use report::{render_outcome, render_report, BiasLabel, BiasReport, Format, QueryOutcome, Verdict, REPORT_VERSION};

#[derive(Clone, Debug, PartialEq)]
pub struct AuditSpec {
    pub title: Option<String>,
    pub case_id: Option<String>,
    pub graph_name: String,
    pub graph: CausalGraph,
    /// Present when the graph is a selection diagram.
    pub diagram: Option<SelectionDiagram>,
    /// Model of the (source) domain.
    pub scm: Option<DiscreteScm>,
    /// Model of the target domain, for selection diagrams.
    pub target_scm: Option<DiscreteScm>,
    pub queries: Vec<AuditQuery>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum QueryMode {
    Identify,
    Selection {
        measured: Option<NodeSet>,
        population: Option<NodeSet>,
    },
    Transport,
    Quantify {
        x_value: String,
        z_value: String,
    },
}

/// Which dataset-level bias a selection or transport failure stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasContext {
    /// Dataset curation: selection failure is representational bias.
    Representational,
    /// Annotator environments: transport failure is label bias.
    Label,
}

impl BiasContext {
    pub fn keyword(self) -> &'static str {
        match self {
            BiasContext::Representational => "representational",
            BiasContext::Label => "label",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AuditQuery {
    pub x: NodeId,
    pub z: NodeId,
    pub adjustment: Option<NodeSet>,
    pub max_set: Option<usize>,
    #[serde(flatten)]
    pub mode: QueryMode,
    pub context: Option<BiasContext>,
}

fn write_set(f: &mut fmt::Formatter<'_>, set: &NodeSet) -> fmt::Result {
    let names: Vec<&str> = set.iter().map(NodeId::as_str).collect();
    write!(f, "{{{}}}", names.join(", "))
}

/// Renders the query exactly as the `.audit` syntax writes it.
impl fmt::Display for AuditQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.mode {
            QueryMode::Identify => write!(f, "identify {} -> {}", self.x, self.z)?,
            QueryMode::Selection { .. } => write!(f, "selection {} -> {}", self.x, self.z)?,
            QueryMode::Transport => write!(f, "transport {} -> {}", self.x, self.z)?,
            QueryMode::Quantify { x_value, z_value } => {
                write!(f, "quantify {}={} -> {}={}", self.x, x_value, self.z, z_value)?
            }
        }
        if let Some(adj) = &self.adjustment {
            f.write_str(" adjust ")?;
            write_set(f, adj)?;
        }
        if let QueryMode::Selection { measured, population } = &self.mode {
            if let Some(m) = measured {
                f.write_str(" measured ")?;
                write_set(f, m)?;
            }
            if let Some(p) = population {
                f.write_str(" population ")?;
                write_set(f, p)?;
            }
        }
        if let Some(k) = self.max_set {
            write!(f, " max {k}")?;
        }
        if let Some(c) = self.context {
            write!(f, " as {}", c.keyword())?;
        }
        Ok(())
    }
}
