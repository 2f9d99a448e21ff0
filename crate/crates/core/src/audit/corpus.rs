//! The bundled fixture corpus: one `.audit` spec per figure or case study,
//! each paired with an `.expected` file of checks.
//!
//! Expected files hold one check per line:
//!
//! ```text
//! label confounding                       # report contains this label
//! verdict 1 identified-by-backdoor {A, G, M}   # summary of query 1
//! dsep X Z given {Y} true                 # d-separation in the graph
//! ```

use super::{classify_biases, parse_spec, BiasLabel};
use crate::error::{Error, Result};
use crate::graph::{NodeId, NodeSet};
use crate::independence::d_separated;

pub struct Fixture {
    pub name: &'static str,
    pub path: &'static str,
    pub source: &'static str,
    pub expected: &'static str,
}

macro_rules! fixture {
    ($name:literal, $stem:literal) => {
        Fixture {
            name: $name,
            path: concat!("fixtures/", $stem, ".audit"),
            source: include_str!(concat!("../../../../fixtures/", $stem, ".audit")),
            expected: include_str!(concat!("../../../../fixtures/", $stem, ".expected")),
        }
    };
}

pub const FIXTURES: &[Fixture] = &[
    fixture!("cs01", "cs01/cs1"),
    fixture!("cs02", "cs02/cs2"),
    fixture!("cs03", "cs03/cs3"),
    fixture!("cs04", "cs04/cs4"),
    fixture!("cs05", "cs05/cs5"),
    fixture!("cs06", "cs06/cs6"),
    fixture!("cs07", "cs07/cs7"),
    fixture!("cs08", "cs08/cs8"),
    fixture!("cs09", "cs09/cs9"),
    fixture!("cs10", "cs10/cs10"),
    fixture!("fig3_chain", "fig3_chain"),
    fixture!("fig3_fork", "fig3_fork"),
    fixture!("fig3_collider", "fig3_collider"),
    fixture!("fig4_i", "fig4_i"),
    fixture!("fig4_ii", "fig4_ii"),
    fixture!("fig5_i", "fig5_i"),
    fixture!("fig5_ii", "fig5_ii"),
    fixture!("fig5_iii", "fig5_iii"),
    fixture!("fig6_i", "fig6_i"),
    fixture!("fig6_ii", "fig6_ii"),
    fixture!("fig6_iii", "fig6_iii"),
];

pub fn find(name: &str) -> Option<&'static Fixture> {
    FIXTURES.iter().find(|f| matches_name(f, name))
}

/// `cs1`, `cs01` and `cs01/cs1` all select the first case study.
fn matches_name(f: &Fixture, wanted: &str) -> bool {
    let canon = |s: &str| -> String {
        match s.strip_prefix("cs").and_then(|n| n.parse::<u32>().ok()) {
            Some(n) => format!("cs{n}"),
            None => s.to_owned(),
        }
    };
    let stem = f.path.trim_start_matches("fixtures/").trim_end_matches(".audit");
    f.name == wanted || stem == wanted || canon(f.name) == canon(wanted)
}

#[derive(Debug)]
pub struct FixtureResult {
    pub name: &'static str,
    pub failures: Vec<String>,
}

impl FixtureResult {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

enum Check {
    Label(BiasLabel),
    Verdict(usize, String),
    Dsep { x: NodeSet, z: NodeSet, given: NodeSet, expect: bool },
}

fn parse_set(s: &str) -> Option<NodeSet> {
    let inner = s.trim().strip_prefix('{')?.strip_suffix('}')?;
    Some(inner.split(',').map(str::trim).filter(|n| !n.is_empty()).map(NodeId::from).collect())
}

fn parse_check(line: &str) -> std::result::Result<Check, String> {
    let bad = || format!("malformed check `{line}`");
    let (kw, rest) = line.split_once(' ').ok_or_else(bad)?;
    let rest = rest.trim();
    match kw {
        "label" => BiasLabel::parse(rest).map(Check::Label).ok_or_else(|| format!("unknown label `{rest}`")),
        "verdict" => {
            let (n, summary) = rest.split_once(' ').ok_or_else(bad)?;
            let n: usize = n.parse().map_err(|_| bad())?;
            if n == 0 {
                return Err(bad());
            }
            Ok(Check::Verdict(n - 1, summary.trim().to_owned()))
        }
        "dsep" => {
            // dsep X Z given {A, B} true
            let (head, expect) = rest.rsplit_once(' ').ok_or_else(bad)?;
            let expect = expect.parse::<bool>().map_err(|_| bad())?;
            let (pair, given) = match head.split_once(" given ") {
                Some((p, g)) => (p, parse_set(g).ok_or_else(bad)?),
                None => (head, NodeSet::new()),
            };
            let mut it = pair.split_whitespace();
            let (x, z) = (it.next().ok_or_else(bad)?, it.next().ok_or_else(bad)?);
            if it.next().is_some() {
                return Err(bad());
            }
            Ok(Check::Dsep { x: NodeSet::from([NodeId::from(x)]), z: NodeSet::from([NodeId::from(z)]), given, expect })
        }
        _ => Err(bad()),
    }
}

/// Parses a fixture, classifies it and evaluates every expected check.
pub fn run_fixture(f: &'static Fixture) -> FixtureResult {
    let mut failures = Vec::new();
    let spec = match parse_spec(f.source) {
        Ok(s) => s,
        Err(e) => {
            return FixtureResult { name: f.name, failures: vec![format!("{}: {e}", f.path)] };
        }
    };
    let report = classify_biases(&spec);
    if let Err(e) = report.check_invariants() {
        failures.push(format!("invariant: {e}"));
    }
    for o in &report.verdicts {
        if let Some(e) = &o.error {
            failures.push(format!("query {} failed: {e}", o.index + 1));
        }
    }
    for line in f.expected.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match parse_check(line) {
            Err(e) => failures.push(e),
            Ok(Check::Label(l)) => {
                if !report.bias_labels.contains(&l) {
                    failures.push(format!("missing label `{l}`"));
                }
            }
            Ok(Check::Verdict(i, want)) => match report.verdicts.get(i) {
                Some(o) if o.summary == want => {}
                Some(o) => failures.push(format!("query {}: expected `{want}`, got `{}`", i + 1, o.summary)),
                None => failures.push(format!("no query {}", i + 1)),
            },
            Ok(Check::Dsep { x, z, given, expect }) => match d_separated(&spec.graph, &x, &z, &given) {
                Ok(sep) if sep.separated == expect => {}
                Ok(sep) => failures.push(format!("`{line}`: got {}", sep.separated)),
                Err(e) => failures.push(format!("`{line}`: {e}")),
            },
        }
    }
    FixtureResult { name: f.name, failures }
}

/// Runs the whole corpus, or only the fixtures matching `only`.
pub fn run_all(only: Option<&str>) -> Result<Vec<FixtureResult>> {
    let selected: Vec<&'static Fixture> = FIXTURES.iter().filter(|f| only.is_none_or(|o| matches_name(f, o))).collect();
    if selected.is_empty() {
        return Err(Error::InvalidArgument(format!("no fixture named `{}`", only.unwrap_or_default())));
    }
    Ok(selected.into_iter().map(run_fixture).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixture_passes() {
        for r in run_all(None).unwrap() {
            assert!(r.passed(), "{}: {:?}", r.name, r.failures);
        }
    }

    #[test]
    fn name_matching() {
        assert_eq!(find("cs1").unwrap().name, "cs01");
        assert_eq!(find("cs01").unwrap().name, "cs01");
        assert_eq!(find("cs10").unwrap().name, "cs10");
        assert_eq!(find("fig5_ii").unwrap().name, "fig5_ii");
        assert!(find("cs11").is_none());
        assert!(run_all(Some("nope")).is_err());
    }

    #[test]
    fn check_parsing() {
        assert!(matches!(parse_check("dsep X Z given {Y} true"), Ok(Check::Dsep { expect: true, .. })));
        assert!(matches!(parse_check("dsep X Z false"), Ok(Check::Dsep { expect: false, .. })));
        assert!(matches!(parse_check("verdict 2 trivial"), Ok(Check::Verdict(1, _))));
        assert!(parse_check("label bogus").is_err());
        assert!(parse_check("verdict 0 x").is_err());
    }
}
