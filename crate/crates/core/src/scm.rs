//! Finite-domain structural causal models evaluated by exact enumeration.
//!
//! Every distribution here comes from the full joint table (or, for
//! interventions, the truncated product of CPTs). Nothing is sampled, so
//! the results double as ground truth for the graphical criteria.

use std::collections::{BTreeSet, HashMap};
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{CausalGraph, NodeId, NodeKind};

pub const MIN_DOMAIN: usize = 2;
pub const MAX_DOMAIN: usize = 16;
pub const MAX_JOINT_CELLS: u128 = 10_000_000;

/// Value the selection indicator takes in the analysed (biased) data.
pub const SELECTED: &str = "1";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// CPT rows must sum to one within this.
    pub cpt: f64,
    /// Distribution comparisons.
    pub distribution: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { cpt: 1e-12, distribution: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    name: NodeId,
    kind: NodeKind,
    values: Vec<String>,
    /// Indices into the model's variable list, in CPT declaration order.
    parents: Vec<usize>,
    /// One row per parent assignment (last parent varies fastest), each row
    /// a distribution over `values`.
    rows: Vec<Vec<f64>>,
}

impl Variable {
    pub fn name(&self) -> &NodeId {
        &self.name
    }
    pub fn kind(&self) -> NodeKind {
        self.kind
    }
    pub fn values(&self) -> &[String] {
        &self.values
    }
    pub fn parent_indices(&self) -> &[usize] {
        &self.parents
    }
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Builder for [`DiscreteScm`]; variables keep the order of their domain
/// declarations.
#[derive(Clone, Debug)]
pub struct ScmBuilder {
    graph: CausalGraph,
    domains: Vec<(String, Vec<String>)>,
    cpts: Vec<(String, Vec<String>, Vec<Vec<f64>>)>,
    tolerances: Tolerances,
}

impl ScmBuilder {
    pub fn domain<S: AsRef<str>>(mut self, var: &str, values: &[S]) -> Self {
        self.domains
            .push((var.to_owned(), values.iter().map(|v| v.as_ref().to_owned()).collect()));
        self
    }

    pub fn binary(self, var: &str) -> Self {
        self.domain(var, &["0", "1"])
    }

    pub fn cpt(mut self, var: &str, parents: &[&str], rows: Vec<Vec<f64>>) -> Self {
        self.cpts
            .push((var.to_owned(), parents.iter().map(|p| (*p).to_owned()).collect(), rows));
        self
    }

    pub fn tolerances(mut self, t: Tolerances) -> Self {
        self.tolerances = t;
        self
    }

    pub fn build(self) -> Result<DiscreteScm> {
        let expanded = self.graph.expand().graph;
        let mut vars: Vec<Variable> = Vec::new();
        let mut index: HashMap<NodeId, usize> = HashMap::new();
        for (name, values) in self.domains {
            let kind = expanded.kind(&name).map_err(|_| Error::UnknownVariable(name.clone()))?;
            if kind == NodeKind::Discrepancy {
                return Err(Error::IncompatibleScm(format!(
                    "discrepancy node `{name}` is not a model variable"
                )));
            }
            if !(MIN_DOMAIN..=MAX_DOMAIN).contains(&values.len()) {
                return Err(Error::IncompatibleScm(format!(
                    "domain of `{name}` has {} values (allowed {MIN_DOMAIN}..={MAX_DOMAIN})",
                    values.len()
                )));
            }
            if values.iter().collect::<BTreeSet<_>>().len() != values.len() {
                return Err(Error::IncompatibleScm(format!("domain of `{name}` repeats a value")));
            }
            let id = NodeId::from(name.as_str());
            if index.insert(id.clone(), vars.len()).is_some() {
                return Err(Error::DuplicateDeclaration(name));
            }
            vars.push(Variable { name: id, kind, values, parents: Vec::new(), rows: Vec::new() });
        }
        for (n, kind) in expanded.nodes() {
            if kind != NodeKind::Discrepancy && !index.contains_key(n) {
                return Err(Error::IncompatibleScm(format!("no domain declared for `{n}`")));
            }
        }

        let mut seen_cpt = BTreeSet::new();
        for (name, parents, rows) in self.cpts {
            let v = *index.get(name.as_str()).ok_or_else(|| Error::UnknownVariable(name.clone()))?;
            if !seen_cpt.insert(v) {
                return Err(Error::DuplicateDeclaration(format!("cpt {name}")));
            }
            let graph_parents: BTreeSet<String> = expanded
                .parents(&name)?
                .into_iter()
                .filter(|p| expanded.kind(p.as_str()) != Ok(NodeKind::Discrepancy))
                .map(|p| p.as_str().to_owned())
                .collect();
            let declared: BTreeSet<String> = parents.iter().cloned().collect();
            if declared.len() != parents.len() || declared != graph_parents {
                return Err(Error::IncompatibleScm(format!(
                    "CPT parents of `{name}` are {{{}}} but the graph has {{{}}}",
                    parents.join(", "),
                    graph_parents.into_iter().collect::<Vec<_>>().join(", ")
                )));
            }
            let parent_idx: Vec<usize> = parents
                .iter()
                .map(|p| index.get(p.as_str()).copied().ok_or_else(|| Error::UnknownVariable(p.clone())))
                .collect::<Result<_>>()?;
            let expected_rows: usize = parent_idx.iter().map(|&p| vars[p].values.len()).product();
            if rows.len() != expected_rows {
                return Err(Error::MalformedCpt(format!(
                    "`{name}` has {} rows, expected {expected_rows}",
                    rows.len()
                )));
            }
            let width = vars[v].values.len();
            for (r, row) in rows.iter().enumerate() {
                if row.len() != width {
                    return Err(Error::MalformedCpt(format!(
                        "`{name}` row {r} has {} entries, expected {width}",
                        row.len()
                    )));
                }
                if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::MalformedCpt(format!("`{name}` row {r} has an entry outside [0, 1]")));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > self.tolerances.cpt {
                    return Err(Error::MalformedCpt(format!("`{name}` row {r} sums to {sum}")));
                }
            }
            vars[v].parents = parent_idx;
            vars[v].rows = rows;
        }
        if let Some(v) = vars.iter().enumerate().find(|(i, _)| !seen_cpt.contains(i)) {
            return Err(Error::IncompatibleScm(format!("no CPT for `{}`", v.1.name)));
        }

        let cells: u128 = vars.iter().map(|v| v.values.len() as u128).product();
        if cells > MAX_JOINT_CELLS {
            return Err(Error::JointTooLarge { cells, limit: MAX_JOINT_CELLS });
        }
        let order = topological(&vars);
        Ok(DiscreteScm {
            graph: self.graph,
            vars,
            index,
            order,
            tolerances: self.tolerances,
            joint: OnceLock::new(),
        })
    }
}

fn topological(vars: &[Variable]) -> Vec<usize> {
    let mut placed = vec![false; vars.len()];
    let mut order = Vec::with_capacity(vars.len());
    while order.len() < vars.len() {
        for (i, v) in vars.iter().enumerate() {
            if !placed[i] && v.parents.iter().all(|&p| placed[p]) {
                placed[i] = true;
                order.push(i);
            }
        }
    }
    order
}

/// Finite-domain SCM whose CPT parent sets match a causal graph (after
/// bidirected expansion; discrepancy nodes are not variables).
#[derive(Debug)]
pub struct DiscreteScm {
    graph: CausalGraph,
    vars: Vec<Variable>,
    index: HashMap<NodeId, usize>,
    order: Vec<usize>,
    tolerances: Tolerances,
    joint: OnceLock<ProbTable>,
}

impl Clone for DiscreteScm {
    fn clone(&self) -> Self {
        DiscreteScm {
            graph: self.graph.clone(),
            vars: self.vars.clone(),
            index: self.index.clone(),
            order: self.order.clone(),
            tolerances: self.tolerances,
            joint: OnceLock::new(),
        }
    }
}

impl PartialEq for DiscreteScm {
    fn eq(&self, other: &Self) -> bool {
        self.graph == other.graph && self.vars == other.vars
    }
}

/// A partial assignment, by variable and value index.
type Event = Vec<(usize, usize)>;

impl DiscreteScm {
    pub fn builder(graph: &CausalGraph) -> ScmBuilder {
        ScmBuilder { graph: graph.clone(), domains: Vec::new(), cpts: Vec::new(), tolerances: Tolerances::default() }
    }

    pub fn graph(&self) -> &CausalGraph {
        &self.graph
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances
    }

    pub fn variable(&self, name: &str) -> Result<&Variable> {
        Ok(&self.vars[self.var_index(name)?])
    }

    fn var_index(&self, name: &str) -> Result<usize> {
        self.index.get(name).copied().ok_or_else(|| Error::UnknownVariable(name.to_owned()))
    }

    fn value_index(&self, var: usize, value: &str) -> Result<usize> {
        self.vars[var]
            .values
            .iter()
            .position(|v| v == value)
            .ok_or_else(|| Error::UnknownValue { var: self.vars[var].name.to_string(), value: value.to_owned() })
    }

    fn event(&self, assignments: &[(&str, &str)]) -> Result<Event> {
        let mut out: Event = Vec::with_capacity(assignments.len());
        for (var, value) in assignments {
            let v = self.var_index(var)?;
            let x = self.value_index(v, value)?;
            match out.iter().find(|(w, _)| *w == v) {
                Some((_, y)) if *y != x => {
                    return Err(Error::InvalidArgument(format!("`{var}` assigned two different values")))
                }
                Some(_) => {}
                None => out.push((v, x)),
            }
        }
        Ok(out)
    }

    /// Probability of `rows` entry for `var` under a full assignment.
    fn factor(&self, var: usize, cell: &[usize]) -> f64 {
        let v = &self.vars[var];
        let mut row = 0;
        for &p in &v.parents {
            row = row * self.vars[p].values.len() + cell[p];
        }
        v.rows[row][cell[var]]
    }

    /// Product of CPTs over every full assignment, with the CPTs of
    /// `clamped` variables replaced by point masses.
    fn factorize(&self, clamped: &[(usize, usize)]) -> ProbTable {
        let sizes: Vec<usize> = self.vars.iter().map(|v| v.values.len()).collect();
        let total: usize = sizes.iter().product();
        let mut cells = vec![0.0; total];
        let mut cell = vec![0usize; sizes.len()];
        for slot in cells.iter_mut() {
            let mut p = 1.0;
            for &v in &self.order {
                p *= match clamped.iter().find(|(c, _)| *c == v) {
                    Some(&(_, x)) => {
                        if cell[v] == x {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    None => self.factor(v, &cell),
                };
                if p == 0.0 {
                    break;
                }
            }
            *slot = p;
            // advance mixed-radix counter, last variable fastest
            for i in (0..sizes.len()).rev() {
                cell[i] += 1;
                if cell[i] < sizes[i] {
                    break;
                }
                cell[i] = 0;
            }
        }
        ProbTable {
            variables: self.vars.iter().map(|v| v.name.clone()).collect(),
            domains: self.vars.iter().map(|v| v.values.clone()).collect(),
            cells,
        }
    }

    fn joint(&self) -> &ProbTable {
        self.joint.get_or_init(|| self.factorize(&[]))
    }

    pub fn joint_distribution(&self) -> ProbTable {
        self.joint().clone()
    }

    /// `P(var | given)` from the observational joint.
    pub fn conditional(&self, var: &str, given: &[(&str, &str)]) -> Result<Distribution> {
        let v = self.var_index(var)?;
        let ev = self.event(given)?;
        self.joint().conditional(v, &ev)
    }

    fn check_intervention(&self, ev: &Event) -> Result<()> {
        for &(v, _) in ev {
            if self.vars[v].kind == NodeKind::Latent {
                return Err(Error::InterveneOnLatent(self.vars[v].name.to_string()));
            }
        }
        Ok(())
    }

    /// Joint under `do(assignments)` by truncated factorization.
    pub fn interventional_joint(&self, interventions: &[(&str, &str)]) -> Result<ProbTable> {
        let ev = self.event(interventions)?;
        self.check_intervention(&ev)?;
        Ok(self.factorize(&ev))
    }

    /// `P(var | do(interventions))` by truncated factorization.
    pub fn interventional_oracle(&self, interventions: &[(&str, &str)], var: &str) -> Result<Distribution> {
        let v = self.var_index(var)?;
        self.interventional_joint(interventions)?.conditional(v, &[])
    }

    /// `sum_y P(var | x, y) P(y)` over strata of `adjust`, from the
    /// observational joint.
    pub fn adjustment_estimate(&self, x: &str, x_value: &str, var: &str, adjust: &[&str]) -> Result<Distribution> {
        let xv = self.var_index(x)?;
        let xval = self.value_index(xv, x_value)?;
        let zv = self.var_index(var)?;
        let ys: Vec<usize> = adjust.iter().map(|y| self.var_index(y)).collect::<Result<_>>()?;
        for &y in &ys {
            if self.vars[y].kind == NodeKind::Latent {
                return Err(Error::ConditionOnLatent(self.vars[y].name.to_string()));
            }
        }
        adjust_over(self.joint(), self.joint(), xv, xval, zv, &ys, &[])
    }

    /// `P(z | do(x)) - P(z | x)`.
    pub fn confounding_bias_measure(&self, x: &str, x_value: &str, var: &str, value: &str) -> Result<f64> {
        let v = self.var_index(var)?;
        let val = self.value_index(v, value)?;
        let observed = self.conditional(var, &[(x, x_value)])?;
        let interventional = self.interventional_oracle(&[(x, x_value)], var)?;
        Ok(interventional.probs[val] - observed.probs[val])
    }

    /// The single selection indicator of the model's graph.
    pub fn selection_node(&self) -> Result<NodeId> {
        selection_node(&self.graph)
    }

    /// `P(var | given, S = 1)`: the view of the selection-biased data.
    pub fn selection_conditioned(&self, var: &str, given: &[(&str, &str)]) -> Result<Distribution> {
        let s = self.selection_node()?;
        let mut given = given.to_vec();
        given.push((s.as_str(), SELECTED));
        self.conditional(var, &given)
    }

    /// Exposes the joint to sibling modules by index.
    pub(crate) fn joint_table(&self) -> &ProbTable {
        self.joint()
    }

    pub(crate) fn index_of(&self, name: &str) -> Result<usize> {
        self.var_index(name)
    }

    pub(crate) fn value_of(&self, var: usize, value: &str) -> Result<usize> {
        self.value_index(var, value)
    }

    pub(crate) fn factorize_clamped(&self, clamped: &[(usize, usize)]) -> ProbTable {
        self.factorize(clamped)
    }
}

pub(crate) fn selection_node(g: &CausalGraph) -> Result<NodeId> {
    let s = g.nodes_of_kind(NodeKind::SelectionIndicator);
    match s.len() {
        0 => Err(Error::NoSelectionNode),
        1 => Ok(s.into_iter().next().expect("one element")),
        _ => Err(Error::MultipleSelectionNodes(s.into_iter().collect())),
    }
}

/// `sum_y P_first(z | x, y, extra) * P_weights(y)`.
///
/// Strata with zero weight are skipped; a weighted stratum whose
/// conditioning event has zero probability under `first` is an error.
pub(crate) fn adjust_over(
    first: &ProbTable,
    weights: &ProbTable,
    x: usize,
    x_value: usize,
    z: usize,
    ys: &[usize],
    extra: &[(usize, usize)],
) -> Result<Distribution> {
    let sizes: Vec<usize> = ys.iter().map(|&y| first.domains[y].len()).collect();
    let strata: usize = sizes.iter().product();
    let mut acc = vec![0.0; first.domains[z].len()];
    let mut stratum = vec![0usize; ys.len()];
    for _ in 0..strata {
        let y_event: Event = ys.iter().copied().zip(stratum.iter().copied()).collect();
        let weight = weights.probability(&y_event);
        if weight > 0.0 {
            let mut cond = y_event.clone();
            cond.push((x, x_value));
            cond.extend_from_slice(extra);
            let d = first.conditional(z, &cond).map_err(|e| match e {
                Error::ZeroProbabilityCondition(m) => Error::ZeroProbabilityStratum(m),
                other => other,
            })?;
            for (a, p) in acc.iter_mut().zip(&d.probs) {
                *a += p * weight;
            }
        }
        for i in (0..stratum.len()).rev() {
            stratum[i] += 1;
            if stratum[i] < sizes[i] {
                break;
            }
            stratum[i] = 0;
        }
    }
    let total: f64 = acc.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroProbabilityStratum("every stratum has zero weight".into()));
    }
    Ok(Distribution {
        variable: first.variables[z].clone(),
        values: first.domains[z].clone(),
        probs: acc.iter().map(|a| a / total).collect(),
    })
}

/// Dense probability table over all variables of a model; cells are in
/// mixed-radix order with the last variable varying fastest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbTable {
    variables: Vec<NodeId>,
    domains: Vec<Vec<String>>,
    cells: Vec<f64>,
}

impl ProbTable {
    pub fn variables(&self) -> &[NodeId] {
        &self.variables
    }

    pub fn domains(&self) -> &[Vec<String>] {
        &self.domains
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().sum()
    }

    /// Iterates `(assignment, probability)` pairs in cell order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        let sizes: Vec<usize> = self.domains.iter().map(Vec::len).collect();
        self.cells.iter().enumerate().map(move |(mut k, &p)| {
            let mut a = vec![0; sizes.len()];
            for i in (0..sizes.len()).rev() {
                a[i] = k % sizes[i];
                k /= sizes[i];
            }
            (a, p)
        })
    }

    fn var(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v.as_str() == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_owned()))
    }

    fn label_event(&self, assignments: &[(&str, &str)]) -> Result<Event> {
        assignments
            .iter()
            .map(|(var, value)| {
                let v = self.var(var)?;
                let x = self.domains[v].iter().position(|d| d == value).ok_or_else(|| Error::UnknownValue {
                    var: (*var).to_owned(),
                    value: (*value).to_owned(),
                })?;
                Ok((v, x))
            })
            .collect()
    }

    /// Probability (mass) of a partial assignment, given by labels.
    pub fn probability_of(&self, assignments: &[(&str, &str)]) -> Result<f64> {
        Ok(self.probability(&self.label_event(assignments)?))
    }

    /// `P(var | given)`, given by labels.
    pub fn conditional_of(&self, var: &str, given: &[(&str, &str)]) -> Result<Distribution> {
        let v = self.var(var)?;
        let ev = self.label_event(given)?;
        self.conditional(v, &ev)
    }

    /// Joint conditional over several variables: returns the probability
    /// of `target` given `given`.
    pub fn conditional_probability(&self, target: &[(&str, &str)], given: &[(&str, &str)]) -> Result<f64> {
        let g = self.label_event(given)?;
        let denom = self.probability(&g);
        if denom <= 0.0 {
            return Err(Error::ZeroProbabilityCondition(render_event(given)));
        }
        let mut both = g;
        both.extend(self.label_event(target)?);
        Ok(self.probability(&both) / denom)
    }

    pub(crate) fn probability(&self, event: &[(usize, usize)]) -> f64 {
        if event.is_empty() {
            return self.total();
        }
        let sizes: Vec<usize> = self.domains.iter().map(Vec::len).collect();
        let mut strides = vec![1usize; sizes.len()];
        for i in (0..sizes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * sizes[i + 1];
        }
        self.cells
            .iter()
            .enumerate()
            .filter(|(k, _)| event.iter().all(|&(v, x)| (k / strides[v]) % sizes[v] == x))
            .map(|(_, p)| p)
            .sum()
    }

    pub(crate) fn conditional(&self, var: usize, given: &[(usize, usize)]) -> Result<Distribution> {
        let sizes: Vec<usize> = self.domains.iter().map(Vec::len).collect();
        let mut strides = vec![1usize; sizes.len()];
        for i in (0..sizes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * sizes[i + 1];
        }
        let mut acc = vec![0.0; sizes[var]];
        for (k, p) in self.cells.iter().enumerate() {
            if given.iter().all(|&(v, x)| (k / strides[v]) % sizes[v] == x) {
                acc[(k / strides[var]) % sizes[var]] += p;
            }
        }
        let total: f64 = acc.iter().sum();
        if total <= 0.0 {
            let labels: Vec<String> = given
                .iter()
                .map(|&(v, x)| format!("{}={}", self.variables[v], self.domains[v][x]))
                .collect();
            return Err(Error::ZeroProbabilityCondition(labels.join(", ")));
        }
        Ok(Distribution {
            variable: self.variables[var].clone(),
            values: self.domains[var].clone(),
            probs: acc.iter().map(|a| a / total).collect(),
        })
    }
}

fn render_event(ev: &[(&str, &str)]) -> String {
    ev.iter().map(|(a, b)| format!("{a}={b}")).collect::<Vec<_>>().join(", ")
}

/// Normalized distribution over one variable's domain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Distribution {
    pub variable: NodeId,
    pub values: Vec<String>,
    pub probs: Vec<f64>,
}

impl Distribution {
    pub fn p(&self, value: &str) -> Option<f64> {
        self.values.iter().position(|v| v == value).map(|i| self.probs[i])
    }

    pub fn max_abs_diff(&self, other: &Distribution) -> f64 {
        assert_eq!(self.values, other.values, "distributions over different domains");
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphDecl;

    fn fork_scm() -> DiscreteScm {
        let g = GraphDecl::new()
            .observed(&["W", "X", "Z"])
            .edges(&[("W", "X"), ("W", "Z"), ("X", "Z")])
            .build()
            .unwrap();
        // P(Z=1 | X, W) = 0.1 + 0.6 X + 0.2 W, rows ordered (W, X)
        DiscreteScm::builder(&g)
            .binary("W")
            .binary("X")
            .binary("Z")
            .cpt("W", &[], vec![vec![0.5, 0.5]])
            .cpt("X", &["W"], vec![vec![0.9, 0.1], vec![0.1, 0.9]])
            .cpt("Z", &["W", "X"], vec![vec![0.9, 0.1], vec![0.3, 0.7], vec![0.7, 0.3], vec![0.1, 0.9]])
            .build()
            .unwrap()
    }

    #[test]
    fn single_bernoulli() {
        let g = GraphDecl::new().observed(&["A"]).build().unwrap();
        let scm = DiscreteScm::builder(&g).binary("A").cpt("A", &[], vec![vec![0.5, 0.5]]).build().unwrap();
        assert_eq!(scm.joint_distribution().cells(), &[0.5, 0.5]);
    }

    #[test]
    fn deterministic_chain() {
        let g = GraphDecl::new()
            .observed(&["X", "Y", "Z"])
            .edges(&[("X", "Y"), ("Y", "Z")])
            .build()
            .unwrap();
        let copy = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let scm = DiscreteScm::builder(&g)
            .binary("X")
            .binary("Y")
            .binary("Z")
            .cpt("X", &[], vec![vec![0.7, 0.3]])
            .cpt("Y", &["X"], copy.clone())
            .cpt("Z", &["Y"], copy)
            .build()
            .unwrap();
        let joint = scm.joint_distribution();
        assert!((joint.probability_of(&[("X", "1"), ("Y", "1"), ("Z", "1")]).unwrap() - 0.3).abs() < 1e-15);
        assert!((joint.probability_of(&[("X", "0"), ("Y", "0"), ("Z", "0")]).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(joint.cells().iter().filter(|p| **p > 0.0).count(), 2);
    }

    #[test]
    fn fork_worked_example() {
        let scm = fork_scm();
        let obs = scm.conditional("Z", &[("X", "1")]).unwrap();
        assert!((obs.p("1").unwrap() - 0.88).abs() < 1e-12);
        let int = scm.interventional_oracle(&[("X", "1")], "Z").unwrap();
        assert!((int.p("1").unwrap() - 0.8).abs() < 1e-12);
        let adj = scm.adjustment_estimate("X", "1", "Z", &["W"]).unwrap();
        assert!((adj.p("1").unwrap() - 0.8).abs() < 1e-12);
        let bias = scm.confounding_bias_measure("X", "1", "Z", "1").unwrap();
        assert!((bias + 0.08).abs() < 1e-12);
    }

    #[test]
    fn zero_probability_condition() {
        let g = GraphDecl::new().observed(&["X", "Z"]).edge("X", "Z").build().unwrap();
        let scm = DiscreteScm::builder(&g)
            .binary("X")
            .binary("Z")
            .cpt("X", &[], vec![vec![1.0, 0.0]])
            .cpt("Z", &["X"], vec![vec![0.5, 0.5], vec![0.5, 0.5]])
            .build()
            .unwrap();
        assert!(matches!(scm.conditional("Z", &[("X", "1")]), Err(Error::ZeroProbabilityCondition(_))));
        assert!(matches!(scm.adjustment_estimate("X", "1", "Z", &[]), Err(Error::ZeroProbabilityStratum(_))));
        assert!(matches!(scm.confounding_bias_measure("X", "1", "Z", "1"), Err(Error::ZeroProbabilityCondition(_))));
        assert_eq!(scm.conditional("Q", &[]), Err(Error::UnknownVariable("Q".into())));
    }

    #[test]
    fn latent_rules() {
        let g = GraphDecl::new()
            .observed(&["X", "Z"])
            .latent("L")
            .edges(&[("L", "X"), ("L", "Z")])
            .build()
            .unwrap();
        let scm = DiscreteScm::builder(&g)
            .binary("L")
            .binary("X")
            .binary("Z")
            .cpt("L", &[], vec![vec![0.5, 0.5]])
            .cpt("X", &["L"], vec![vec![0.8, 0.2], vec![0.2, 0.8]])
            .cpt("Z", &["L"], vec![vec![0.8, 0.2], vec![0.2, 0.8]])
            .build()
            .unwrap();
        assert_eq!(scm.interventional_oracle(&[("L", "1")], "Z"), Err(Error::InterveneOnLatent("L".into())));
        assert_eq!(scm.adjustment_estimate("X", "1", "Z", &["L"]), Err(Error::ConditionOnLatent("L".into())));
    }

    #[test]
    fn bidirected_edge_needs_its_latent() {
        let g = GraphDecl::new().observed(&["X", "Z"]).bidirected("X", "Z").build().unwrap();
        let missing = DiscreteScm::builder(&g)
            .binary("X")
            .binary("Z")
            .cpt("X", &[], vec![vec![0.5, 0.5]])
            .cpt("Z", &[], vec![vec![0.5, 0.5]])
            .build();
        assert!(matches!(missing, Err(Error::IncompatibleScm(_))));
        let ok = DiscreteScm::builder(&g)
            .binary("U_X_Z")
            .binary("X")
            .binary("Z")
            .cpt("U_X_Z", &[], vec![vec![0.5, 0.5]])
            .cpt("X", &["U_X_Z"], vec![vec![0.9, 0.1], vec![0.1, 0.9]])
            .cpt("Z", &["U_X_Z"], vec![vec![0.9, 0.1], vec![0.1, 0.9]])
            .build()
            .unwrap();
        let bias = ok.confounding_bias_measure("X", "1", "Z", "1").unwrap();
        assert!(bias.abs() > 0.1);
    }

    #[test]
    fn cpt_validation() {
        let g = GraphDecl::new().observed(&["X", "Z"]).edge("X", "Z").build().unwrap();
        let base = || DiscreteScm::builder(&g).binary("X").binary("Z").cpt("X", &[], vec![vec![0.5, 0.5]]);
        let bad_sum = base().cpt("Z", &["X"], vec![vec![0.5, 0.6], vec![0.5, 0.5]]).build();
        assert!(matches!(bad_sum, Err(Error::MalformedCpt(_))));
        let bad_rows = base().cpt("Z", &["X"], vec![vec![0.5, 0.5]]).build();
        assert!(matches!(bad_rows, Err(Error::MalformedCpt(_))));
        let negative = base().cpt("Z", &["X"], vec![vec![1.5, -0.5], vec![0.5, 0.5]]).build();
        assert!(matches!(negative, Err(Error::MalformedCpt(_))));
        let wrong_parents = base().cpt("Z", &[], vec![vec![0.5, 0.5]]).build();
        assert!(matches!(wrong_parents, Err(Error::IncompatibleScm(_))));
        let missing = base().build();
        assert!(matches!(missing, Err(Error::IncompatibleScm(_))));
        let unary = DiscreteScm::builder(&g).domain("X", &["a"]).build();
        assert!(matches!(unary, Err(Error::IncompatibleScm(_))));
        let loose = base()
            .cpt("Z", &["X"], vec![vec![0.5, 0.5 + 1e-10], vec![0.5, 0.5]])
            .tolerances(Tolerances { cpt: 1e-9, distribution: 1e-9 })
            .build();
        assert!(loose.is_ok());
    }

    #[test]
    fn joint_size_limit() {
        let names: Vec<String> = (0..8).map(|i| format!("V{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let g = GraphDecl::new().observed(&refs).build().unwrap();
        let values: Vec<String> = (0..8).map(|i| i.to_string()).collect();
        let mut b = DiscreteScm::builder(&g);
        for n in &refs {
            b = b.domain(n, &values).cpt(n, &[], vec![vec![0.125; 8]]);
        }
        assert_eq!(b.build().unwrap_err(), Error::JointTooLarge { cells: 1 << 24, limit: MAX_JOINT_CELLS });
    }

    #[test]
    fn selection_view() {
        let g = GraphDecl::new()
            .observed(&["X", "Z"])
            .selection("S")
            .edges(&[("X", "Z"), ("X", "S")])
            .build()
            .unwrap();
        let scm = DiscreteScm::builder(&g)
            .binary("X")
            .binary("Z")
            .binary("S")
            .cpt("X", &[], vec![vec![0.5, 0.5]])
            .cpt("Z", &["X"], vec![vec![0.8, 0.2], vec![0.3, 0.7]])
            .cpt("S", &["X"], vec![vec![1.0, 0.0], vec![0.5, 0.5]])
            .build()
            .unwrap();
        // only X=1 units are ever selected
        assert!(matches!(scm.selection_conditioned("Z", &[("X", "0")]), Err(Error::ZeroProbabilityCondition(_))));
        let biased = scm.selection_conditioned("Z", &[]).unwrap();
        assert!((biased.p("1").unwrap() - 0.7).abs() < 1e-12);

        let plain = GraphDecl::new().observed(&["X"]).build().unwrap();
        let scm = DiscreteScm::builder(&plain).binary("X").cpt("X", &[], vec![vec![0.5, 0.5]]).build().unwrap();
        assert_eq!(scm.selection_conditioned("X", &[]), Err(Error::NoSelectionNode));
    }
}
