use std::collections::BTreeSet;

use super::report::{BiasLabel, BiasReport, QueryOutcome, SpecSummary, Verdict};
use super::{AuditQuery, AuditSpec, BiasContext, QueryMode};
use crate::error::{Error, Result};
use crate::graph::{CausalGraph, NodeId, NodeSet};
use crate::identification::{default_max_set_size, enumerate_admissible_sets, identify_effect, is_backdoor_admissible, IdVerdict};
use crate::selection::{check_selection_backdoor, MeasurementFlags};
use crate::transport::{check_transportability, is_s_admissible, TransportVerdict};

/// Differences below this are treated as numerical noise when deciding
/// whether a quantified effect is confounded.
const BIAS_TOLERANCE: f64 = 1e-9;

/// Runs every query and collects bias labels. A failing query records its
/// error and contributes no labels; the others still run.
pub fn classify_biases(spec: &AuditSpec) -> BiasReport {
    let verdicts: Vec<QueryOutcome> = spec
        .queries
        .iter()
        .enumerate()
        .map(|(index, q)| {
            let query = q.to_string();
            match run_query(spec, q) {
                Ok((verdict, labels, summary)) => {
                    QueryOutcome { index, query, summary, verdict: Some(verdict), error: None, labels }
                }
                Err(e) => QueryOutcome {
                    index,
                    query,
                    summary: "error".into(),
                    verdict: None,
                    error: Some(e.to_string()),
                    labels: Vec::new(),
                },
            }
        })
        .collect();
    let bias_labels: BTreeSet<BiasLabel> = verdicts.iter().flat_map(|v| v.labels.iter().copied()).collect();
    BiasReport {
        spec: SpecSummary {
            title: spec.title.clone(),
            case: spec.case_id.clone(),
            graph: spec.graph_name.clone(),
            nodes: spec.graph.len(),
            directed_edges: spec.graph.directed_edges().count(),
            bidirected_edges: spec.graph.bidirected_edges().count(),
            queries: spec.queries.len(),
        },
        verdicts,
        bias_labels,
    }
}

fn set_str(s: &NodeSet) -> String {
    format!("{{{}}}", s.iter().map(NodeId::as_str).collect::<Vec<_>>().join(", "))
}

type Classified = (Verdict, Vec<BiasLabel>, String);

fn run_query(spec: &AuditSpec, q: &AuditQuery) -> Result<Classified> {
    let (x, z) = (q.x.as_str(), q.z.as_str());
    let g = &spec.graph;
    let max = q.max_set.unwrap_or_else(|| default_max_set_size(g));
    match &q.mode {
        QueryMode::Identify => identify(g, x, z, q.adjustment.as_ref(), max),
        QueryMode::Selection { measured, population } => {
            let ys = q.adjustment.clone().unwrap_or_default();
            let all = MeasurementFlags::all_observed(g);
            let flags = MeasurementFlags {
                measured_under_selection: measured.clone().unwrap_or(all.measured_under_selection),
                measured_overall: population.clone().unwrap_or(all.measured_overall),
            };
            let report = check_selection_backdoor(g, x, z, &ys, &flags)?;
            let mut labels = Vec::new();
            let summary = if report.overall {
                "recoverable".to_owned()
            } else {
                labels.push(BiasLabel::Selection);
                if q.context == Some(BiasContext::Representational) {
                    labels.push(BiasLabel::Representational);
                }
                format!("not-recoverable ({})", report.failed_conditions().join(", "))
            };
            Ok((Verdict::Selection { adjustment: ys, report }, labels, summary))
        }
        QueryMode::Transport => {
            let d = spec
                .diagram
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("transport queries need a selection diagram".into()))?;
            let verdict = check_transportability(d, x, z, max)?;
            let user_set_admissible = q.adjustment.as_ref().map(|w| is_s_admissible(d, x, z, w)).transpose()?;
            let mut labels = Vec::new();
            let summary = match &verdict {
                TransportVerdict::TrivialNoDiscrepancy => "trivial".to_owned(),
                TransportVerdict::DirectWithSet { witness } => format!("direct {}", set_str(witness)),
                TransportVerdict::NotEstablished { reason } => {
                    labels.push(BiasLabel::Transportability);
                    if q.context == Some(BiasContext::Label) {
                        labels.push(BiasLabel::Label);
                    }
                    format!("not-established ({reason})")
                }
            };
            Ok((Verdict::Transport { verdict, user_set_admissible }, labels, summary))
        }
        QueryMode::Quantify { x_value, z_value } => {
            let scm = spec
                .scm
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("quantify queries need an scm block".into()))?;
            let interventional = scm
                .interventional_oracle(&[(x, x_value)], z)?
                .p(z_value)
                .ok_or_else(|| Error::UnknownValue { var: z.into(), value: z_value.clone() })?;
            let observational = scm
                .conditional(z, &[(x, x_value)])?
                .p(z_value)
                .ok_or_else(|| Error::UnknownValue { var: z.into(), value: z_value.clone() })?;
            let bias = interventional - observational;
            let adjusted = match &q.adjustment {
                Some(adj) => {
                    let names: Vec<&str> = adj.iter().map(NodeId::as_str).collect();
                    scm.adjustment_estimate(x, x_value, z, &names)?.p(z_value)
                }
                None => None,
            };
            let mut labels = Vec::new();
            if bias.abs() > BIAS_TOLERANCE {
                labels.push(BiasLabel::Confounding);
            }
            if let Some(a) = adjusted {
                if (a - interventional).abs() > BIAS_TOLERANCE {
                    labels.push(BiasLabel::OmittedVariable);
                }
            }
            let summary = format!("do={interventional:.6} obs={observational:.6} bias={bias:+.6}");
            Ok((Verdict::Quantify { interventional, observational, bias, adjusted }, labels, summary))
        }
    }
}

fn identify(g: &CausalGraph, x: &str, z: &str, adjustment: Option<&NodeSet>, max: usize) -> Result<Classified> {
    let verdict = identify_effect(g, x, z, max)?;
    let admissible_sets = enumerate_admissible_sets(g, x, z, max)?;
    let user_adjustment = adjustment.map(|a| is_backdoor_admissible(g, x, z, a)).transpose()?;

    let mut labels = Vec::new();
    // The analysis conditions on the user's set (or nothing); confounding is
    // present when that leaves a backdoor path open.
    let used = adjustment.cloned().unwrap_or_default();
    let desc = g.descendants(x)?;
    let non_desc: NodeSet = used.iter().filter(|n| !desc.contains(*n)).cloned().collect();
    if !is_backdoor_admissible(g, x, z, &non_desc)?.admissible {
        labels.push(BiasLabel::Confounding);
    }
    if let (Some(user), Some(check)) = (adjustment, &user_adjustment) {
        // Omitted variable: the supplied set fails, yet every minimal
        // admissible set needs something the user left out.
        let omits = !check.admissible
            && !admissible_sets.is_empty()
            && admissible_sets.iter().all(|m| !m.is_subset(user));
        if omits {
            labels.push(BiasLabel::OmittedVariable);
        }
    }

    let summary = match &verdict {
        IdVerdict::IdentifiedTrivially { .. } => "identified-trivially".to_owned(),
        IdVerdict::IdentifiedByBackdoor { witness, .. } => format!("identified-by-backdoor {}", set_str(witness)),
        IdVerdict::NotIdentifiedByImplementedCriteria { .. } => "not-identified".to_owned(),
    };
    Ok((Verdict::Identify { verdict, admissible_sets, user_adjustment }, labels, summary))
}
