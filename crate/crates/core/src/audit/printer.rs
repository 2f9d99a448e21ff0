use std::fmt::Write;

use super::AuditSpec;
use crate::graph::{NodeId, NodeKind};
use crate::scm::DiscreteScm;

/// Renders a spec back to `.audit` text. Parsing the output yields a spec
/// equal to the input.
pub fn render_spec(spec: &AuditSpec) -> String {
    let mut out = String::new();
    if let Some(t) = &spec.title {
        let _ = writeln!(out, "title \"{t}\";");
    }
    if let Some(c) = &spec.case_id {
        let _ = writeln!(out, "case {c};");
    }
    if !out.is_empty() {
        out.push('\n');
    }

    let _ = writeln!(out, "graph {} {{", spec.graph_name);
    for kind in [NodeKind::Observed, NodeKind::Latent, NodeKind::SelectionIndicator, NodeKind::Discrepancy] {
        let members = spec.graph.nodes_of_kind(kind);
        let names: Vec<&str> = members.iter().map(NodeId::as_str).collect();
        if !names.is_empty() {
            let _ = writeln!(out, "    {} {};", kind.keyword(), names.join(", "));
        }
    }
    if let Some(d) = &spec.diagram {
        let _ = writeln!(out, "    domains {} -> {};", d.source_label(), d.target_label());
    }
    for (a, b) in spec.graph.directed_edges() {
        let _ = writeln!(out, "    {a} -> {b};");
    }
    for (a, b) in spec.graph.bidirected_edges() {
        let _ = writeln!(out, "    {a} <-> {b};");
    }
    out.push_str("}\n");

    if let Some(scm) = &spec.scm {
        render_scm(&mut out, "scm", scm);
    }
    if let Some(scm) = &spec.target_scm {
        render_scm(&mut out, "scm target", scm);
    }

    if !spec.queries.is_empty() {
        out.push_str("\nquery {\n");
        for q in &spec.queries {
            let _ = writeln!(out, "    {q};");
        }
        out.push_str("}\n");
    }
    out
}

fn render_scm(out: &mut String, header: &str, scm: &DiscreteScm) {
    let vars = scm.variables();
    let _ = writeln!(out, "\n{header} {{");
    for v in vars {
        let _ = writeln!(out, "    domain {} = {{{}}};", v.name(), v.values().join(", "));
    }
    for v in vars {
        let parents: Vec<&str> = v.parent_indices().iter().map(|&p| vars[p].name().as_str()).collect();
        let bar = if parents.is_empty() { String::new() } else { format!(" | {}", parents.join(", ")) };
        let rows: Vec<String> = v
            .rows()
            .iter()
            .map(|r| r.iter().map(f64::to_string).collect::<Vec<_>>().join(", "))
            .collect();
        let _ = writeln!(out, "    cpt {}{bar} = [{}];", v.name(), rows.join("; "));
    }
    out.push_str("}\n");
}

#[cfg(test)]
mod tests {
    use super::super::parse_spec;
    use super::*;

    #[test]
    fn round_trip_with_everything() {
        let text = "title \"t\";
case cs99;
graph g {
  node W, X, Z;
  latent L;
  discrepancy R -> W;
  domains Pi -> PiStar;
  L -> X; L -> Z; W -> X -> Z;
  W <-> Z;
}
scm {
  domain U_W_Z = {a, b};
  domain L = {0, 1};
  domain W = {0, 1};
  domain X = {0, 1, 2};
  domain Z = {0, 1};
  cpt U_W_Z = [0.3, 0.7];
  cpt L = [0.5, 0.5];
  cpt W | U_W_Z = [0.1, 0.9; 0.2, 0.8];
  cpt X | L, W = [0.2, 0.3, 0.5; 0.1, 0.1, 0.8; 0.3, 0.3, 0.4; 0.6, 0.2, 0.2];
  cpt Z | L, U_W_Z, X = [0.5, 0.5; 0.5, 0.5; 0.5, 0.5; 0.5, 0.5; 0.5, 0.5; 0.5, 0.5; 0.5, 0.5; 0.5, 0.5; 0.5, 0.5; 0.5, 0.5; 0.5, 0.5; 0.1, 0.9];
}
query {
  identify X -> Z adjust {W} max 2;
  transport X -> Z as label;
  quantify X=2 -> Z=1;
}
";
        let spec = parse_spec(text).unwrap();
        let printed = render_spec(&spec);
        let again = parse_spec(&printed).unwrap();
        assert_eq!(spec, again);
        assert_eq!(printed, render_spec(&again));
    }
}
