//! Selection diagrams and direct transportability between two domains.
//!
//! Discrepancy (`R`) nodes mark the mechanisms that may differ between the
//! source and the target. Only two cases are decided: no discrepancy at
//! all, and the direct case where some observed set `W` makes the outcome
//! independent of every `R` once the treatment is intervened on. Anything
//! else is reported as not established.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{CausalGraph, IndexedDag, NodeId, NodeKind, NodeSet};
use crate::identification::combinations;
use crate::independence::{d_separated_masks, separation_in};
use crate::scm::{DiscreteScm, Distribution};

pub const DISCREPANCY_ON_TARGET: &str = "discrepancy-on-target";
pub const CRITERIA_EXHAUSTED: &str = "implemented criteria exhausted";

/// CPTs of variables outside the reach of discrepancy nodes must agree to
/// within this between source and target.
pub const CPT_DRIFT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelectionDiagram {
    graph: CausalGraph,
    r_nodes: NodeSet,
    source_label: String,
    target_label: String,
}

impl SelectionDiagram {
    pub fn new(graph: CausalGraph, source_label: &str, target_label: &str) -> Result<Self> {
        let r_nodes = graph.nodes_of_kind(NodeKind::Discrepancy);
        for r in &r_nodes {
            if graph.children(r.as_str())?.is_empty() {
                return Err(Error::DiscrepancyWithoutChild(r.to_string()));
            }
        }
        Ok(SelectionDiagram {
            graph,
            r_nodes,
            source_label: source_label.to_owned(),
            target_label: target_label.to_owned(),
        })
    }

    pub fn graph(&self) -> &CausalGraph {
        &self.graph
    }

    pub fn r_nodes(&self) -> &NodeSet {
        &self.r_nodes
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn target_label(&self) -> &str {
        &self.target_label
    }

    /// The causal graph shared by both domains (discrepancy nodes removed).
    pub fn domain_graph(&self) -> CausalGraph {
        self.graph.without_nodes(&self.r_nodes)
    }

    /// Nodes whose mechanisms may differ between domains.
    pub fn r_children(&self) -> Result<NodeSet> {
        let mut out = NodeSet::new();
        for r in &self.r_nodes {
            out.extend(self.graph.children(r.as_str())?);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TransportVerdict {
    TrivialNoDiscrepancy,
    DirectWithSet { witness: NodeSet },
    NotEstablished { reason: String },
}

fn check_endpoints(g: &CausalGraph, x: &str, z: &str) -> Result<(NodeId, NodeId)> {
    let (xid, zid) = (g.id(x)?, g.id(z)?);
    for n in [&xid, &zid] {
        if g.kind(n.as_str())? != NodeKind::Observed {
            return Err(Error::InvalidArgument(format!("`{n}` must be an observed node")));
        }
    }
    if xid == zid {
        return Err(Error::OverlappingSets(x.to_owned()));
    }
    Ok((xid, zid))
}

/// Searches observed non-descendants `W` of `x`, smallest first and then
/// lexicographically, for one that separates `z` from every discrepancy
/// node given `{x} ∪ W` once edges into `x` are cut.
pub fn check_transportability(d: &SelectionDiagram, x: &str, z: &str, max_set_size: usize) -> Result<TransportVerdict> {
    let g = &d.graph;
    let (xid, zid) = check_endpoints(g, x, z)?;
    if d.r_nodes.is_empty() {
        return Ok(TransportVerdict::TrivialNoDiscrepancy);
    }
    let xs = NodeSet::from([xid.clone()]);
    let cut = IndexedDag::new(&g.mutilate(&xs, &NodeSet::new())?);
    let desc = g.descendants(x)?;
    let candidates: Vec<NodeId> = g
        .nodes_of_kind(NodeKind::Observed)
        .into_iter()
        .filter(|n| *n != xid && *n != zid && !desc.contains(n))
        .collect();
    let zm = cut.mask(&[cut.index_of(z)?]);
    let rm = cut.mask(&cut.indices(&d.r_nodes)?);
    for size in 0..=max_set_size.min(candidates.len()) {
        for combo in combinations(candidates.len(), size) {
            let w: NodeSet = combo.iter().map(|&i| candidates[i].clone()).collect();
            let mut given = w.clone();
            given.insert(xid.clone());
            let gm = cut.mask(&cut.indices(&given)?);
            if d_separated_masks(&cut, &zm, &rm, &gm) {
                return Ok(TransportVerdict::DirectWithSet { witness: w });
            }
        }
    }
    let on_target = d.r_nodes.iter().any(|r| g.has_edge(r.as_str(), z));
    Ok(TransportVerdict::NotEstablished {
        reason: if on_target { DISCREPANCY_ON_TARGET } else { CRITERIA_EXHAUSTED }.into(),
    })
}

/// Whether `w` licenses the direct transport formula for `x` on `z`.
pub fn is_s_admissible(d: &SelectionDiagram, x: &str, z: &str, w: &NodeSet) -> Result<bool> {
    let g = &d.graph;
    let (xid, zid) = check_endpoints(g, x, z)?;
    g.check_known(w)?;
    if w.contains(&xid) || w.contains(&zid) {
        return Err(Error::OverlappingSets(if w.contains(&xid) { xid } else { zid }.to_string()));
    }
    let desc = g.descendants(x)?;
    for n in w {
        if g.kind(n.as_str())? != NodeKind::Observed || desc.contains(n) {
            return Ok(false);
        }
    }
    if d.r_nodes.is_empty() {
        return Ok(true);
    }
    let xs = NodeSet::from([xid]);
    let cut = IndexedDag::new(&g.mutilate(&xs, &NodeSet::new())?);
    let given: NodeSet = xs.union(w).cloned().collect();
    Ok(separation_in(&cut, &NodeSet::from([zid]), &d.r_nodes, &given)?.separated)
}

/// `sum_w P_source(z | do(x), w) * P_target(w)`.
///
/// `source` and `target` are models over the diagram's domain graph whose
/// CPTs may differ only for children of discrepancy nodes.
pub fn transport_formula(
    d: &SelectionDiagram,
    source: &DiscreteScm,
    target: &DiscreteScm,
    x: &str,
    x_value: &str,
    z: &str,
    w: &NodeSet,
) -> Result<Distribution> {
    let domain = d.domain_graph();
    if source.graph() != &domain {
        return Err(Error::StructuralMismatch("source model graph differs from the diagram".into()));
    }
    if target.graph() != &domain {
        return Err(Error::StructuralMismatch("target model graph differs from the diagram".into()));
    }
    check_drift(d, source, target)?;
    if !is_s_admissible(d, x, z, w)? {
        return Err(Error::NotTransportable(format!(
            "{{{}}} does not separate `{z}` from the discrepancy nodes",
            w.iter().map(NodeId::as_str).collect::<Vec<_>>().join(", ")
        )));
    }

    let xv = source.index_of(x)?;
    let xval = source.value_of(xv, x_value)?;
    let zv = source.index_of(z)?;
    let w_idx: Vec<usize> = w.iter().map(|n| source.index_of(n.as_str())).collect::<Result<_>>()?;
    let experimental = source.factorize_clamped(&[(xv, xval)]);
    crate::scm::adjust_over(&experimental, target.joint_table(), xv, xval, zv, &w_idx, &[])
}

fn check_drift(d: &SelectionDiagram, source: &DiscreteScm, target: &DiscreteScm) -> Result<()> {
    let allowed = d.r_children()?;
    for (sv, tv) in source.variables().iter().zip(target.variables()) {
        if sv.name() != tv.name() || sv.values() != tv.values() {
            return Err(Error::StructuralMismatch(format!(
                "variable `{}` is declared differently in the two domains",
                sv.name()
            )));
        }
        if allowed.contains(sv.name()) {
            continue;
        }
        let parents_s: Vec<&NodeId> = sv.parent_indices().iter().map(|&p| source.variables()[p].name()).collect();
        let parents_t: Vec<&NodeId> = tv.parent_indices().iter().map(|&p| target.variables()[p].name()).collect();
        if parents_s != parents_t {
            return Err(Error::StructuralMismatch(format!(
                "CPT of `{}` lists its parents in a different order in the two domains",
                sv.name()
            )));
        }
        let drift = sv
            .rows()
            .iter()
            .flatten()
            .zip(tv.rows().iter().flatten())
            .any(|(a, b)| (a - b).abs() > CPT_DRIFT_TOLERANCE);
        if drift {
            return Err(Error::IllegalCptDrift(sv.name().to_string()));
        }
    }
    Ok(())
}

/// Label bias read as transport between two annotator environments.
pub fn label_bias_as_transport(d: &SelectionDiagram, x: &str, z: &str) -> Result<TransportVerdict> {
    let bound = d.graph.nodes_of_kind(NodeKind::Observed).len().saturating_sub(2);
    check_transportability(d, x, z, bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{node_set, GraphDecl};

    fn diagram(decl: GraphDecl) -> SelectionDiagram {
        SelectionDiagram::new(decl.build().unwrap(), "source", "target").unwrap()
    }

    #[test]
    fn fig6_verdicts() {
        let i = diagram(
            GraphDecl::new()
                .observed(&["X", "Z"])
                .latent("Y")
                .discrepancy("R")
                .edges(&[("X", "Z"), ("Y", "X"), ("Y", "Z"), ("R", "Y")]),
        );
        assert_eq!(
            check_transportability(&i, "X", "Z", 2).unwrap(),
            TransportVerdict::NotEstablished { reason: CRITERIA_EXHAUSTED.into() }
        );

        let ii = diagram(
            GraphDecl::new()
                .observed(&["X", "Z"])
                .discrepancy("R")
                .edges(&[("X", "Z"), ("R", "X"), ("R", "Z")]),
        );
        assert_eq!(
            check_transportability(&ii, "X", "Z", 2).unwrap(),
            TransportVerdict::NotEstablished { reason: DISCREPANCY_ON_TARGET.into() }
        );

        let iii = diagram(GraphDecl::new().observed(&["X", "Z"]).discrepancy("R").edges(&[("X", "Z"), ("R", "Z")]));
        assert_eq!(
            label_bias_as_transport(&iii, "X", "Z").unwrap(),
            TransportVerdict::NotEstablished { reason: DISCREPANCY_ON_TARGET.into() }
        );
    }

    #[test]
    fn trivial_and_direct() {
        let plain = diagram(GraphDecl::new().observed(&["X", "Z"]).edge("X", "Z"));
        assert_eq!(label_bias_as_transport(&plain, "X", "Z").unwrap(), TransportVerdict::TrivialNoDiscrepancy);

        let on_cause = diagram(GraphDecl::new().observed(&["X", "Z"]).discrepancy("R").edges(&[("X", "Z"), ("R", "X")]));
        assert_eq!(
            label_bias_as_transport(&on_cause, "X", "Z").unwrap(),
            TransportVerdict::DirectWithSet { witness: NodeSet::new() }
        );

        let upstream = diagram(
            GraphDecl::new()
                .observed(&["W", "X", "Z"])
                .discrepancy("R")
                .edges(&[("R", "W"), ("W", "X"), ("X", "Z")]),
        );
        assert_eq!(
            check_transportability(&upstream, "X", "Z", 1).unwrap(),
            TransportVerdict::DirectWithSet { witness: NodeSet::new() }
        );
    }

    #[test]
    fn witness_set_needed() {
        // R -> W -> Z and W -> X: conditioning on W separates Z from R.
        let d = diagram(
            GraphDecl::new()
                .observed(&["W", "X", "Z"])
                .discrepancy("R")
                .edges(&[("R", "W"), ("W", "X"), ("W", "Z"), ("X", "Z")]),
        );
        assert_eq!(
            check_transportability(&d, "X", "Z", 1).unwrap(),
            TransportVerdict::DirectWithSet { witness: node_set(["W"]) }
        );
        assert_eq!(
            check_transportability(&d, "X", "Z", 0).unwrap(),
            TransportVerdict::NotEstablished { reason: CRITERIA_EXHAUSTED.into() }
        );
        assert!(is_s_admissible(&d, "X", "Z", &node_set(["W"])).unwrap());
        assert!(!is_s_admissible(&d, "X", "Z", &NodeSet::new()).unwrap());
    }

    #[test]
    fn diagram_validation() {
        let g = GraphDecl::new().observed(&["X"]).discrepancy("R").build().unwrap();
        assert_eq!(SelectionDiagram::new(g, "a", "b"), Err(Error::DiscrepancyWithoutChild("R".into())));
        let d = diagram(GraphDecl::new().observed(&["X", "Z"]).discrepancy("R").edges(&[("X", "Z"), ("R", "Z")]));
        assert_eq!(d.r_nodes(), &node_set(["R"]));
        assert_eq!(d.domain_graph().len(), 2);
        assert_eq!(check_transportability(&d, "X", "Q", 1), Err(Error::UnknownNode("Q".into())));
        assert!(matches!(check_transportability(&d, "R", "Z", 1), Err(Error::InvalidArgument(_))));
    }
}
