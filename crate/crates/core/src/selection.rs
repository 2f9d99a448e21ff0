//! Selection backdoor criterion and recovery of causal effects from data
//! conditioned on `S = 1`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{CausalGraph, IndexedDag, NodeKind, NodeSet};
use crate::independence::separation_in;
use crate::scm::{adjust_over, selection_node, DiscreteScm, Distribution, SELECTED};

/// Which nodes have recorded values in the biased (`S = 1`) data and which
/// have population-level data.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MeasurementFlags {
    pub measured_under_selection: NodeSet,
    pub measured_overall: NodeSet,
}

impl MeasurementFlags {
    /// Every observed node measured in both regimes.
    pub fn all_observed(g: &CausalGraph) -> Self {
        let observed = g.nodes_of_kind(NodeKind::Observed);
        MeasurementFlags { measured_under_selection: observed.clone(), measured_overall: observed }
    }

    fn validate(&self, g: &CausalGraph) -> Result<()> {
        for n in self.measured_under_selection.iter().chain(&self.measured_overall) {
            if g.kind(n.as_str())? != NodeKind::Observed {
                return Err(Error::InvalidArgument(format!("measured node `{n}` is not observed")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SelectionConditionReport {
    /// `Y+` blocks every backdoor path from X to Z.
    pub cond_i: bool,
    /// `{X} ∪ Y+` blocks every path between `Y-` and Z.
    pub cond_ii: bool,
    /// `{X} ∪ Y` blocks every path between S and Z.
    pub cond_iii: bool,
    /// Measurement requirements hold.
    pub cond_iv: bool,
    pub overall: bool,
    /// Members of Y that are not descendants of X.
    pub y_plus: NodeSet,
    /// Members of Y that descend from X.
    pub y_minus: NodeSet,
}

impl SelectionConditionReport {
    pub fn failed_conditions(&self) -> Vec<&'static str> {
        [(self.cond_i, "i"), (self.cond_ii, "ii"), (self.cond_iii, "iii"), (self.cond_iv, "iv")]
            .into_iter()
            .filter(|(ok, _)| !ok)
            .map(|(_, name)| name)
            .collect()
    }
}

/// Evaluates the four conditions of the selection backdoor criterion for
/// `ys` relative to the effect of `x` on `z` in `g_s`.
pub fn check_selection_backdoor(
    g_s: &CausalGraph,
    x: &str,
    z: &str,
    ys: &NodeSet,
    flags: &MeasurementFlags,
) -> Result<SelectionConditionReport> {
    let s = selection_node(g_s)?;
    let (xid, zid) = (g_s.id(x)?, g_s.id(z)?);
    g_s.check_known(ys)?;
    if xid == s || zid == s {
        return Err(Error::InvalidArgument("treatment and outcome must differ from the selection node".into()));
    }
    if xid == zid {
        return Err(Error::OverlappingSets(x.to_owned()));
    }
    if ys.contains(&s) {
        return Err(Error::OverlappingSets(s.to_string()));
    }
    if let Some(n) = ys.iter().find(|n| **n == xid || **n == zid) {
        return Err(Error::OverlappingSets(n.to_string()));
    }
    if let Some(n) = ys.iter().find(|n| g_s.kind(n.as_str()) == Ok(NodeKind::Latent)) {
        return Err(Error::ConditionOnLatent(n.to_string()));
    }
    flags.validate(g_s)?;

    let desc = g_s.descendants(x)?;
    let (y_minus, y_plus): (NodeSet, NodeSet) = ys.iter().cloned().partition(|y| desc.contains(y));
    let xs = NodeSet::from([xid.clone()]);
    let zs = NodeSet::from([zid.clone()]);

    let backdoor = IndexedDag::new(&g_s.mutilate(&NodeSet::new(), &xs)?);
    let cond_i = separation_in(&backdoor, &xs, &zs, &y_plus)?.separated;

    let dag = IndexedDag::new(g_s);
    let cond_ii = if y_minus.is_empty() {
        true
    } else {
        let given: NodeSet = xs.union(&y_plus).cloned().collect();
        separation_in(&dag, &y_minus, &zs, &given)?.separated
    };

    let given: NodeSet = xs.union(ys).cloned().collect();
    let cond_iii = separation_in(&dag, &NodeSet::from([s]), &zs, &given)?.separated;

    let mut needed = ys.clone();
    needed.insert(xid);
    needed.insert(zid);
    let cond_iv = needed.is_subset(&flags.measured_under_selection) && ys.is_subset(&flags.measured_overall);

    Ok(SelectionConditionReport {
        cond_i,
        cond_ii,
        cond_iii,
        cond_iv,
        overall: cond_i && cond_ii && cond_iii && cond_iv,
        y_plus,
        y_minus,
    })
}

/// `sum_y P(z | x, y, S = 1) * P(y)`: the causal effect of `x` on `z`
/// recovered from selection-biased data plus population-level `P(y)`.
pub fn recover_effect_under_selection(
    g_s: &CausalGraph,
    scm: &DiscreteScm,
    x: &str,
    x_value: &str,
    z: &str,
    ys: &NodeSet,
    flags: &MeasurementFlags,
) -> Result<Distribution> {
    if scm.graph() != g_s {
        return Err(Error::IncompatibleScm("model graph differs from the selection graph".into()));
    }
    let report = check_selection_backdoor(g_s, x, z, ys, flags)?;
    if !report.overall {
        return Err(Error::CriterionFails(Box::new(report)));
    }
    let s = selection_node(g_s)?;
    let sv = scm.index_of(s.as_str())?;
    if scm.variables()[sv].values().len() != 2 {
        return Err(Error::IncompatibleScm(format!("selection node `{s}` must be binary")));
    }
    let selected = scm
        .value_of(sv, SELECTED)
        .map_err(|_| Error::IncompatibleScm(format!("selection node `{s}` has no value `{SELECTED}`")))?;
    let xv = scm.index_of(x)?;
    let xval = scm.value_of(xv, x_value)?;
    let zv = scm.index_of(z)?;
    let y_idx: Vec<usize> = ys.iter().map(|y| scm.index_of(y.as_str())).collect::<Result<_>>()?;
    let joint = scm.joint_table();
    adjust_over(joint, joint, xv, xval, zv, &y_idx, &[(sv, selected)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{node_set, GraphDecl};

    fn recoverable() -> CausalGraph {
        GraphDecl::new()
            .observed(&["W", "X", "Z"])
            .selection("S")
            .edges(&[("W", "X"), ("X", "Z"), ("W", "S")])
            .build()
            .unwrap()
    }

    fn fig5_ii() -> CausalGraph {
        GraphDecl::new()
            .observed(&["X", "Z", "V"])
            .selection("S")
            .bidirected("X", "Z")
            .edges(&[("V", "Z"), ("X", "S"), ("Z", "S")])
            .build()
            .unwrap()
    }

    #[test]
    fn fig5_i_fails_condition_iii() {
        let g = GraphDecl::new()
            .observed(&["X", "Z"])
            .selection("S")
            .edges(&[("X", "Z"), ("X", "S"), ("Z", "S")])
            .build()
            .unwrap();
        let r = check_selection_backdoor(&g, "X", "Z", &NodeSet::new(), &MeasurementFlags::all_observed(&g)).unwrap();
        assert!(!r.cond_iii);
        assert!(!r.overall);
        assert_eq!(r.failed_conditions(), vec!["iii"]);
    }

    #[test]
    fn fig5_ii_fails_condition_iii() {
        let g = fig5_ii();
        let r = check_selection_backdoor(&g, "X", "Z", &NodeSet::new(), &MeasurementFlags::all_observed(&g)).unwrap();
        assert!(!r.cond_iii);
        assert!(!r.cond_i);
        assert!(!r.overall);
    }

    #[test]
    fn recoverable_fixture_passes() {
        let g = recoverable();
        let r = check_selection_backdoor(&g, "X", "Z", &node_set(["W"]), &MeasurementFlags::all_observed(&g)).unwrap();
        assert!(r.cond_i && r.cond_ii && r.cond_iii && r.cond_iv && r.overall);
        assert_eq!(r.y_plus, node_set(["W"]));
        assert!(r.y_minus.is_empty());

        let none = MeasurementFlags::default();
        let r = check_selection_backdoor(&g, "X", "Z", &node_set(["W"]), &none).unwrap();
        assert!(!r.cond_iv && !r.overall);
        // W measured only in the biased sample is not enough
        let partial = MeasurementFlags { measured_under_selection: node_set(["W", "X", "Z"]), measured_overall: NodeSet::new() };
        assert!(!check_selection_backdoor(&g, "X", "Z", &node_set(["W"]), &partial).unwrap().cond_iv);
    }

    #[test]
    fn descendants_go_to_y_minus() {
        let g = GraphDecl::new()
            .observed(&["X", "M", "Z", "W"])
            .selection("S")
            .edges(&[("X", "M"), ("M", "Z"), ("W", "X"), ("W", "Z"), ("M", "S")])
            .build()
            .unwrap();
        let r = check_selection_backdoor(&g, "X", "Z", &node_set(["M", "W"]), &MeasurementFlags::all_observed(&g)).unwrap();
        assert_eq!(r.y_plus, node_set(["W"]));
        assert_eq!(r.y_minus, node_set(["M"]));
    }

    #[test]
    fn selection_node_errors() {
        let plain = GraphDecl::new().observed(&["X", "Z"]).edge("X", "Z").build().unwrap();
        let f = MeasurementFlags::default();
        assert_eq!(check_selection_backdoor(&plain, "X", "Z", &NodeSet::new(), &f), Err(Error::NoSelectionNode));
        let two = GraphDecl::new()
            .observed(&["X", "Z"])
            .selection("S1")
            .selection("S2")
            .edges(&[("X", "S1"), ("Z", "S2")])
            .build()
            .unwrap();
        assert!(matches!(
            check_selection_backdoor(&two, "X", "Z", &NodeSet::new(), &f),
            Err(Error::MultipleSelectionNodes(_))
        ));
        let g = recoverable();
        assert!(matches!(check_selection_backdoor(&g, "X", "Z", &node_set(["S"]), &f), Err(Error::OverlappingSets(_))));
        assert_eq!(check_selection_backdoor(&g, "X", "Q", &NodeSet::new(), &f), Err(Error::UnknownNode("Q".into())));
    }

    #[test]
    fn recovery_rejects_failing_criterion() {
        let g = fig5_ii();
        let scm = DiscreteScm::builder(&g)
            .binary("U_X_Z")
            .binary("V")
            .binary("X")
            .binary("Z")
            .binary("S")
            .cpt("U_X_Z", &[], vec![vec![0.5, 0.5]])
            .cpt("V", &[], vec![vec![0.5, 0.5]])
            .cpt("X", &["U_X_Z"], vec![vec![0.7, 0.3], vec![0.2, 0.8]])
            .cpt("Z", &["U_X_Z", "V"], vec![vec![0.5, 0.5]; 4])
            .cpt("S", &["X", "Z"], vec![vec![0.5, 0.5]; 4])
            .build()
            .unwrap();
        let err = recover_effect_under_selection(&g, &scm, "X", "1", "Z", &NodeSet::new(), &MeasurementFlags::all_observed(&g))
            .unwrap_err();
        match err {
            Error::CriterionFails(report) => assert!(!report.cond_iii),
            other => panic!("unexpected {other:?}"),
        }
    }
}
