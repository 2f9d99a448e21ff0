//! Graphical causal analysis for bias audits.
//!
//! The crate covers d-separation ([`independence`]), backdoor
//! identification and do-calculus rule checks ([`identification`]),
//! recovery from selection-biased data ([`selection`]), transportability
//! over selection diagrams ([`transport`]) and exact evaluation of discrete
//! structural causal models ([`scm`]). The [`audit`] module ties them
//! together behind a small text format and a bias classifier.
//!
//! ```
//! use causal_audit::graph::{node_set, GraphDecl};
//! use causal_audit::independence::d_separated;
//!
//! let chain = GraphDecl::new().observed(&["X", "Y", "Z"]).edges(&[("X", "Y"), ("Y", "Z")]).build()?;
//! let sep = d_separated(&chain, &node_set(["X"]), &node_set(["Z"]), &node_set(["Y"]))?;
//! assert!(sep.separated);
//! # Ok::<(), causal_audit::Error>(())
//! ```

pub mod audit;
pub mod cli;
pub mod error;
pub mod graph;
pub mod identification;
pub mod independence;
pub mod scm;
pub mod selection;
pub mod transport;

pub use error::{Error, Result};
pub use graph::{CausalGraph, GraphDecl, NodeId, NodeKind, NodeSet};
