use std::collections::BTreeSet;
use std::fmt::{self, Write};

use serde::Serialize;

use crate::graph::{NodeId, NodeSet};
use crate::identification::{Admissibility, IdVerdict};
use crate::selection::SelectionConditionReport;
use crate::transport::TransportVerdict;

pub const REPORT_VERSION: &str = "1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BiasLabel {
    Confounding,
    OmittedVariable,
    Selection,
    Representational,
    Transportability,
    Label,
    /// Reserved: framing effects have no graphical signature, so the
    /// classifier never emits this label.
    FramingEffect,
}

impl BiasLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            BiasLabel::Confounding => "confounding",
            BiasLabel::OmittedVariable => "omitted-variable",
            BiasLabel::Selection => "selection",
            BiasLabel::Representational => "representational",
            BiasLabel::Transportability => "transportability",
            BiasLabel::Label => "label",
            BiasLabel::FramingEffect => "framing-effect",
        }
    }

    pub fn parse(s: &str) -> Option<BiasLabel> {
        [
            BiasLabel::Confounding,
            BiasLabel::OmittedVariable,
            BiasLabel::Selection,
            BiasLabel::Representational,
            BiasLabel::Transportability,
            BiasLabel::Label,
            BiasLabel::FramingEffect,
        ]
        .into_iter()
        .find(|l| l.as_str() == s)
    }
}

impl fmt::Display for BiasLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Verdict {
    Identify {
        verdict: IdVerdict,
        /// Minimal admissible sets within the search bound.
        admissible_sets: Vec<NodeSet>,
        /// Backdoor check of the query's own adjustment set, if it gave one.
        user_adjustment: Option<Admissibility>,
    },
    Selection {
        adjustment: NodeSet,
        report: SelectionConditionReport,
    },
    Transport {
        verdict: TransportVerdict,
        /// Whether the query's own adjustment set is s-admissible.
        user_set_admissible: Option<bool>,
    },
    Quantify {
        interventional: f64,
        observational: f64,
        bias: f64,
        adjusted: Option<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueryOutcome {
    pub index: usize,
    pub query: String,
    pub summary: String,
    pub verdict: Option<Verdict>,
    pub error: Option<String>,
    pub labels: Vec<BiasLabel>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpecSummary {
    pub title: Option<String>,
    pub case: Option<String>,
    pub graph: String,
    pub nodes: usize,
    pub directed_edges: usize,
    pub bidirected_edges: usize,
    pub queries: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiasReport {
    pub spec: SpecSummary,
    pub verdicts: Vec<QueryOutcome>,
    pub bias_labels: BTreeSet<BiasLabel>,
}

impl BiasReport {
    pub fn has_errors(&self) -> bool {
        self.verdicts.iter().any(|v| v.error.is_some())
    }

    /// Internal consistency of the label set. A failure here is a bug, not
    /// an input problem.
    pub fn check_invariants(&self) -> Result<(), String> {
        let has = |l| self.bias_labels.contains(&l);
        if has(BiasLabel::Representational) && !has(BiasLabel::Selection) {
            return Err("representational bias reported without selection bias".into());
        }
        if has(BiasLabel::Label) && !has(BiasLabel::Transportability) {
            return Err("label bias reported without transportability bias".into());
        }
        if has(BiasLabel::FramingEffect) {
            return Err("framing-effect is reserved and must not be emitted".into());
        }
        for l in &self.bias_labels {
            if !self.verdicts.iter().any(|v| v.labels.contains(l)) {
                return Err(format!("label `{l}` is not justified by any verdict"));
            }
        }
        let union: BTreeSet<BiasLabel> = self.verdicts.iter().flat_map(|v| v.labels.iter().copied()).collect();
        if union != self.bias_labels {
            return Err("report labels differ from the union of per-query labels".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Human,
    Machine,
}

#[derive(Serialize)]
struct MachineReport<'a> {
    spec: &'a SpecSummary,
    verdicts: &'a [QueryOutcome],
    bias_labels: &'a BTreeSet<BiasLabel>,
    version: &'static str,
}

pub fn render_report(report: &BiasReport, format: Format) -> String {
    match format {
        Format::Machine => {
            let doc = MachineReport {
                spec: &report.spec,
                verdicts: &report.verdicts,
                bias_labels: &report.bias_labels,
                version: REPORT_VERSION,
            };
            serde_json::to_string(&doc).expect("report serializes")
        }
        Format::Human => render_human(report),
    }
}

fn set_str(s: &NodeSet) -> String {
    format!("{{{}}}", s.iter().map(NodeId::as_str).collect::<Vec<_>>().join(", "))
}

fn labels_str<'a>(labels: impl IntoIterator<Item = &'a BiasLabel>) -> String {
    let v: Vec<&str> = labels.into_iter().map(|l| l.as_str()).collect();
    if v.is_empty() {
        "none".into()
    } else {
        v.join(", ")
    }
}

fn render_human(report: &BiasReport) -> String {
    let mut out = String::new();
    let s = &report.spec;
    let _ = writeln!(out, "causal audit report (format {REPORT_VERSION})");
    if let Some(t) = &s.title {
        let _ = writeln!(out, "{:<10}{t}", "title:");
    }
    if let Some(c) = &s.case {
        let _ = writeln!(out, "{:<10}{c}", "case:");
    }
    let _ = writeln!(
        out,
        "{:<10}{} ({} nodes, {} directed, {} bidirected)",
        "graph:", s.graph, s.nodes, s.directed_edges, s.bidirected_edges
    );
    for o in &report.verdicts {
        out.push('\n');
        out.push_str(&render_outcome(o));
    }
    let _ = writeln!(out, "\nbias labels: {}", labels_str(&report.bias_labels));
    out
}

/// One query's block of the human report.
pub fn render_outcome(o: &QueryOutcome) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[{}] {}", o.index + 1, o.query);
    let _ = writeln!(out, "    {:<12}{}", "verdict:", o.summary);
    if let Some(e) = &o.error {
        let _ = writeln!(out, "    {:<12}{e}", "error:");
    }
    match &o.verdict {
        Some(Verdict::Identify { verdict, admissible_sets, user_adjustment }) => {
            match verdict {
                IdVerdict::IdentifiedByBackdoor { estimand, .. } | IdVerdict::IdentifiedTrivially { estimand } => {
                    let _ = writeln!(out, "    {:<12}{estimand}", "estimand:");
                }
                IdVerdict::NotIdentifiedByImplementedCriteria { reason } => {
                    let _ = writeln!(out, "    {:<12}{reason}", "reason:");
                }
            }
            if !admissible_sets.is_empty() {
                let sets: Vec<String> = admissible_sets.iter().map(set_str).collect();
                let _ = writeln!(out, "    {:<12}{}", "minimal:", sets.join(" "));
            }
            if let Some(a) = user_adjustment {
                let state = if a.admissible { "admissible" } else { "inadmissible" };
                let _ = writeln!(out, "    {:<12}{state}: {}", "adjustment:", a.reason);
            }
        }
        Some(Verdict::Selection { adjustment, report }) => {
            let flag = |b: bool| if b { "ok" } else { "FAIL" };
            let _ = writeln!(out, "    {:<12}{}", "ys:", set_str(adjustment));
            let _ = writeln!(
                out,
                "    {:<12}i={} ii={} iii={} iv={}",
                "conditions:",
                flag(report.cond_i),
                flag(report.cond_ii),
                flag(report.cond_iii),
                flag(report.cond_iv)
            );
        }
        Some(Verdict::Transport { user_set_admissible, .. }) => {
            if let Some(ok) = user_set_admissible {
                let _ = writeln!(out, "    {:<12}{}", "adjustment:", if *ok { "s-admissible" } else { "not s-admissible" });
            }
        }
        Some(Verdict::Quantify { interventional, observational, bias, adjusted }) => {
            let _ = writeln!(out, "    {:<12}{interventional:.12}", "do:");
            let _ = writeln!(out, "    {:<12}{observational:.12}", "observed:");
            let _ = writeln!(out, "    {:<12}{bias:+.12}", "bias:");
            if let Some(a) = adjusted {
                let _ = writeln!(out, "    {:<12}{a:.12}", "adjusted:");
            }
        }
        None => {}
    }
    let _ = writeln!(out, "    {:<12}{}", "labels:", labels_str(&o.labels));
    out
}
