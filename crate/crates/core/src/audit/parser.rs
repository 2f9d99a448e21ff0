use std::collections::HashMap;

use super::lexer::{tokenize, Tok, Token};
use super::{AuditQuery, AuditSpec, BiasContext, QueryMode};
use crate::error::{Error, Result};
use crate::graph::{is_valid_name, CausalGraph, GraphDecl, NodeId, NodeKind, NodeSet};
use crate::scm::DiscreteScm;
use crate::transport::SelectionDiagram;

const DEFAULT_SOURCE: &str = "source";
const DEFAULT_TARGET: &str = "target";

/// Parses and validates an `.audit` document.
pub fn parse_spec(text: &str) -> Result<AuditSpec> {
    Parser::new(text)?.spec()
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof: (usize, usize),
}

/// A name together with where it was written.
#[derive(Clone)]
struct Spanned {
    name: String,
    line: usize,
    col: usize,
}

struct ScmDecl {
    line: usize,
    col: usize,
    domains: Vec<(Spanned, Vec<String>)>,
    cpts: Vec<(Spanned, Vec<String>, Vec<Vec<f64>>)>,
}

impl Parser {
    fn new(text: &str) -> Result<Self> {
        let toks = tokenize(text)?;
        let lines = text.split('\n').count();
        let last_col = text.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        Ok(Parser { toks, pos: 0, eof: (lines, last_col) })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map_or(self.eof, |t| (t.line, t.col))
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T> {
        let (line, col) = self.here();
        Err(Error::Syntax { line, col, message: message.into() })
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T> {
        match self.peek() {
            Some(t) => self.syntax(format!("expected {wanted}, found {}", t.describe())),
            None => self.syntax(format!("expected {wanted}, found end of input")),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.unexpected(&tok.describe())
        }
    }

    fn word(&mut self, what: &str) -> Result<Spanned> {
        let (line, col) = self.here();
        match self.peek() {
            Some(Tok::Word(w)) => {
                let name = w.clone();
                self.pos += 1;
                Ok(Spanned { name, line, col })
            }
            _ => self.unexpected(what),
        }
    }

    fn name(&mut self) -> Result<Spanned> {
        let s = self.word("a node name")?;
        if !is_valid_name(&s.name) {
            return Err(Error::Syntax { line: s.line, col: s.col, message: format!("invalid node name `{}`", s.name) });
        }
        Ok(s)
    }

    fn name_list(&mut self) -> Result<Vec<Spanned>> {
        let mut out = vec![self.name()?];
        while self.eat(&Tok::Comma) {
            out.push(self.name()?);
        }
        Ok(out)
    }

    fn number(&mut self) -> Result<f64> {
        let w = self.word("a probability")?;
        w.name
            .parse::<f64>()
            .ok()
            .filter(|p| p.is_finite())
            .ok_or_else(|| Error::Syntax { line: w.line, col: w.col, message: format!("`{}` is not a number", w.name) })
    }

    fn set(&mut self) -> Result<Vec<Spanned>> {
        self.expect(Tok::LBrace)?;
        if self.eat(&Tok::RBrace) {
            return Ok(Vec::new());
        }
        let names = self.name_list()?;
        self.expect(Tok::RBrace)?;
        Ok(names)
    }

    fn spec(mut self) -> Result<AuditSpec> {
        let mut title = None;
        let mut case_id = None;
        let mut graph: Option<(String, CausalGraph, Option<SelectionDiagram>)> = None;
        let mut scms: Vec<(Option<Spanned>, ScmDecl)> = Vec::new();
        let mut queries: Vec<(Spanned, QueryParts)> = Vec::new();

        while self.peek().is_some() {
            let kw = self.word("`title`, `case`, `graph`, `scm` or `query`")?;
            match kw.name.as_str() {
                "title" => {
                    if title.is_some() {
                        return Err(Error::DuplicateDeclaration("title".into()).at(kw.line, kw.col));
                    }
                    match self.peek() {
                        Some(Tok::Str(s)) => {
                            title = Some(s.clone());
                            self.pos += 1;
                        }
                        _ => return self.unexpected("a quoted title"),
                    }
                    self.expect(Tok::Semi)?;
                }
                "case" => {
                    if case_id.is_some() {
                        return Err(Error::DuplicateDeclaration("case".into()).at(kw.line, kw.col));
                    }
                    case_id = Some(self.name()?.name);
                    self.expect(Tok::Semi)?;
                }
                "graph" => {
                    if graph.is_some() {
                        return Err(Error::DuplicateDeclaration("graph".into()).at(kw.line, kw.col));
                    }
                    graph = Some(self.graph_block(&kw)?);
                }
                "scm" => {
                    let label = if matches!(self.peek(), Some(Tok::Word(_))) { Some(self.name()?) } else { None };
                    scms.push((label, self.scm_block(&kw)?));
                }
                "query" => {
                    self.expect(Tok::LBrace)?;
                    while !self.eat(&Tok::RBrace) {
                        if self.peek().is_none() {
                            return self.unexpected("`}`");
                        }
                        queries.push(self.query()?);
                    }
                }
                other => {
                    return Err(Error::Syntax {
                        line: kw.line,
                        col: kw.col,
                        message: format!("unknown section `{other}`"),
                    })
                }
            }
        }

        let Some((graph_name, graph, diagram)) = graph else {
            return self.syntax("missing `graph` block");
        };
        let model_graph = diagram.as_ref().map_or_else(|| graph.clone(), SelectionDiagram::domain_graph);

        let mut scm = None;
        let mut target_scm = None;
        for (label, decl) in scms {
            let slot = match label.as_ref().map(|l| l.name.as_str()) {
                None | Some("source") => &mut scm,
                Some("target") => {
                    if diagram.is_none() {
                        return Err(Error::IncompatibleScm("a target model needs a selection diagram".into())
                            .at(decl.line, decl.col));
                    }
                    &mut target_scm
                }
                Some(other) => {
                    let l = label.as_ref().expect("label present");
                    return Err(Error::Syntax {
                        line: l.line,
                        col: l.col,
                        message: format!("unknown model label `{other}` (expected `source` or `target`)"),
                    });
                }
            };
            if slot.is_some() {
                return Err(Error::DuplicateDeclaration("scm".into()).at(decl.line, decl.col));
            }
            *slot = Some(build_scm(&model_graph, decl)?);
        }

        let queries = queries
            .into_iter()
            .map(|(kw, parts)| parts.resolve(&kw, &graph, diagram.as_ref(), scm.as_ref()))
            .collect::<Result<Vec<_>>>()?;

        Ok(AuditSpec { title, case_id, graph_name, graph, diagram, scm, target_scm, queries })
    }

    fn graph_block(&mut self, kw: &Spanned) -> Result<(String, CausalGraph, Option<SelectionDiagram>)> {
        let name = self.name()?.name;
        self.expect(Tok::LBrace)?;
        let mut declared: HashMap<String, (NodeKind, usize, usize)> = HashMap::new();
        let mut order: Vec<String> = Vec::new();
        let mut directed: Vec<(Spanned, Spanned)> = Vec::new();
        let mut bidirected: Vec<(Spanned, Spanned)> = Vec::new();
        let mut domains: Option<(String, String)> = None;

        while !self.eat(&Tok::RBrace) {
            if self.peek().is_none() {
                return self.unexpected("`}`");
            }
            let first = self.name()?;
            let kind = match first.name.as_str() {
                "node" => Some(NodeKind::Observed),
                "latent" => Some(NodeKind::Latent),
                "selection" => Some(NodeKind::SelectionIndicator),
                "discrepancy" => Some(NodeKind::Discrepancy),
                _ => None,
            };
            // A keyword followed by an arrow is an edge from a node that
            // happens to share the keyword's name.
            let is_decl = kind.is_some() && !matches!(self.peek(), Some(Tok::Arrow | Tok::BiArrow));
            if is_decl {
                let kind = kind.expect("checked");
                let names = self.name_list()?;
                for n in &names {
                    if declared.contains_key(&n.name) {
                        return Err(Error::DuplicateDeclaration(n.name.clone()).at(n.line, n.col));
                    }
                    declared.insert(n.name.clone(), (kind, n.line, n.col));
                    order.push(n.name.clone());
                }
                if kind == NodeKind::Discrepancy && self.eat(&Tok::Arrow) {
                    let targets = self.name_list()?;
                    for r in &names {
                        for t in &targets {
                            directed.push((r.clone(), t.clone()));
                        }
                    }
                }
                self.expect(Tok::Semi)?;
            } else if first.name == "domains" && matches!(self.peek(), Some(Tok::Word(_))) {
                if domains.is_some() {
                    return Err(Error::DuplicateDeclaration("domains".into()).at(first.line, first.col));
                }
                let src = self.name()?.name;
                self.expect(Tok::Arrow)?;
                let tgt = self.name()?.name;
                self.expect(Tok::Semi)?;
                domains = Some((src, tgt));
            } else {
                let mut prev = first;
                let mut any = false;
                loop {
                    let bi = if self.eat(&Tok::Arrow) {
                        false
                    } else if self.eat(&Tok::BiArrow) {
                        true
                    } else {
                        break;
                    };
                    let next = self.name()?;
                    if bi {
                        bidirected.push((prev.clone(), next.clone()));
                    } else {
                        directed.push((prev.clone(), next.clone()));
                    }
                    prev = next;
                    any = true;
                }
                if !any {
                    return self.unexpected("`->` or `<->`");
                }
                self.expect(Tok::Semi)?;
            }
        }

        for (a, b) in directed.iter().chain(&bidirected) {
            for n in [a, b] {
                if !declared.contains_key(&n.name) {
                    return Err(Error::UnknownNode(n.name.clone()).at(n.line, n.col));
                }
            }
        }
        let mut decl = GraphDecl::new();
        for n in &order {
            decl = decl.node(n, declared[n].0);
        }
        for (a, b) in &directed {
            decl = decl.edge(&a.name, &b.name);
        }
        for (a, b) in &bidirected {
            decl = decl.bidirected(&a.name, &b.name);
        }
        let graph = decl.build().map_err(|e| e.at(kw.line, kw.col))?;
        let has_r = !graph.nodes_of_kind(NodeKind::Discrepancy).is_empty();
        let diagram = if has_r || domains.is_some() {
            let (src, tgt) = domains.unwrap_or_else(|| (DEFAULT_SOURCE.into(), DEFAULT_TARGET.into()));
            Some(SelectionDiagram::new(graph.clone(), &src, &tgt).map_err(|e| e.at(kw.line, kw.col))?)
        } else {
            None
        };
        Ok((name, graph, diagram))
    }

    fn scm_block(&mut self, kw: &Spanned) -> Result<ScmDecl> {
        self.expect(Tok::LBrace)?;
        let mut decl = ScmDecl { line: kw.line, col: kw.col, domains: Vec::new(), cpts: Vec::new() };
        while !self.eat(&Tok::RBrace) {
            let stmt = self.word("`domain` or `cpt`")?;
            match stmt.name.as_str() {
                "domain" => {
                    let var = self.name()?;
                    self.expect(Tok::Eq)?;
                    self.expect(Tok::LBrace)?;
                    let mut values = vec![self.word("a value")?.name];
                    while self.eat(&Tok::Comma) {
                        values.push(self.word("a value")?.name);
                    }
                    self.expect(Tok::RBrace)?;
                    self.expect(Tok::Semi)?;
                    decl.domains.push((var, values));
                }
                "cpt" => {
                    let var = self.name()?;
                    let parents = if self.eat(&Tok::Bar) {
                        self.name_list()?.into_iter().map(|s| s.name).collect()
                    } else {
                        Vec::new()
                    };
                    self.expect(Tok::Eq)?;
                    self.expect(Tok::LBracket)?;
                    let mut rows = Vec::new();
                    loop {
                        let mut row = vec![self.number()?];
                        while self.eat(&Tok::Comma) {
                            row.push(self.number()?);
                        }
                        rows.push(row);
                        if !self.eat(&Tok::Semi) {
                            break;
                        }
                    }
                    self.expect(Tok::RBracket)?;
                    self.expect(Tok::Semi)?;
                    decl.cpts.push((var, parents, rows));
                }
                other => {
                    return Err(Error::Syntax {
                        line: stmt.line,
                        col: stmt.col,
                        message: format!("expected `domain` or `cpt`, found `{other}`"),
                    })
                }
            }
        }
        Ok(decl)
    }

    fn query(&mut self) -> Result<(Spanned, QueryParts)> {
        let kw = self.word("a query kind")?;
        let mut parts = QueryParts::default();
        match kw.name.as_str() {
            "identify" | "selection" | "transport" => {
                parts.x = Some(self.name()?);
                self.expect(Tok::Arrow)?;
                parts.z = Some(self.name()?);
            }
            "quantify" => {
                parts.x = Some(self.name()?);
                self.expect(Tok::Eq)?;
                parts.x_value = Some(self.word("a value")?);
                self.expect(Tok::Arrow)?;
                parts.z = Some(self.name()?);
                self.expect(Tok::Eq)?;
                parts.z_value = Some(self.word("a value")?);
            }
            other => {
                return Err(Error::Syntax {
                    line: kw.line,
                    col: kw.col,
                    message: format!("unknown query kind `{other}`"),
                })
            }
        }
        loop {
            if self.eat(&Tok::Semi) {
                break;
            }
            let opt = self.word("a query option or `;`")?;
            let dup = || Err(Error::DuplicateDeclaration(opt.name.clone()).at(opt.line, opt.col));
            match opt.name.as_str() {
                "adjust" => {
                    if parts.adjust.is_some() {
                        return dup();
                    }
                    parts.adjust = Some(self.set()?);
                }
                "measured" => {
                    if parts.measured.is_some() {
                        return dup();
                    }
                    parts.measured = Some(self.set()?);
                }
                "population" => {
                    if parts.population.is_some() {
                        return dup();
                    }
                    parts.population = Some(self.set()?);
                }
                "max" => {
                    if parts.max.is_some() {
                        return dup();
                    }
                    let w = self.word("a set size")?;
                    parts.max = Some(w.name.parse().map_err(|_| Error::Syntax {
                        line: w.line,
                        col: w.col,
                        message: format!("`{}` is not a set size", w.name),
                    })?);
                }
                "as" => {
                    if parts.context.is_some() {
                        return dup();
                    }
                    let w = self.word("`representational` or `label`")?;
                    parts.context = Some(match w.name.as_str() {
                        "representational" => BiasContext::Representational,
                        "label" => BiasContext::Label,
                        other => {
                            return Err(Error::Syntax {
                                line: w.line,
                                col: w.col,
                                message: format!("unknown bias context `{other}`"),
                            })
                        }
                    });
                }
                other => {
                    return Err(Error::Syntax {
                        line: opt.line,
                        col: opt.col,
                        message: format!("unknown query option `{other}`"),
                    })
                }
            }
        }
        Ok((kw, parts))
    }
}

#[derive(Default)]
struct QueryParts {
    x: Option<Spanned>,
    z: Option<Spanned>,
    x_value: Option<Spanned>,
    z_value: Option<Spanned>,
    adjust: Option<Vec<Spanned>>,
    measured: Option<Vec<Spanned>>,
    population: Option<Vec<Spanned>>,
    max: Option<usize>,
    context: Option<BiasContext>,
}

fn resolve_set(g: &CausalGraph, names: Option<Vec<Spanned>>) -> Result<Option<NodeSet>> {
    names
        .map(|names| {
            names
                .into_iter()
                .map(|n| {
                    if g.contains(&n.name) {
                        Ok(NodeId::from(n.name.as_str()))
                    } else {
                        Err(Error::UnknownNode(n.name).at(n.line, n.col))
                    }
                })
                .collect()
        })
        .transpose()
}

impl QueryParts {
    fn resolve(
        self,
        kw: &Spanned,
        g: &CausalGraph,
        diagram: Option<&SelectionDiagram>,
        scm: Option<&DiscreteScm>,
    ) -> Result<AuditQuery> {
        let here = |e: Error| e.at(kw.line, kw.col);
        let node = |s: &Spanned| -> Result<NodeId> {
            if g.contains(&s.name) {
                Ok(NodeId::from(s.name.as_str()))
            } else {
                Err(Error::UnknownNode(s.name.clone()).at(s.line, s.col))
            }
        };
        let x = node(self.x.as_ref().expect("parsed"))?;
        let z = node(self.z.as_ref().expect("parsed"))?;
        let adjustment = resolve_set(g, self.adjust)?;
        let measured = resolve_set(g, self.measured)?;
        let population = resolve_set(g, self.population)?;

        let selection_only = measured.is_some() || population.is_some();
        let mode = match kw.name.as_str() {
            "identify" => QueryMode::Identify,
            "selection" => {
                crate::scm::selection_node(g).map_err(here)?;
                QueryMode::Selection { measured, population }
            }
            "transport" => {
                if diagram.is_none() {
                    return Err(here(Error::InvalidArgument(
                        "transport queries need a selection diagram (declare discrepancy nodes or `domains`)".into(),
                    )));
                }
                QueryMode::Transport
            }
            _ => {
                let scm = scm.ok_or_else(|| here(Error::InvalidArgument("quantify queries need an `scm` block".into())))?;
                let xv = self.x_value.expect("parsed");
                let zv = self.z_value.expect("parsed");
                for (var, val) in [(&x, &xv), (&z, &zv)] {
                    let v = scm.variable(var.as_str()).map_err(here)?;
                    if !v.values().contains(&val.name) {
                        return Err(Error::UnknownValue { var: var.to_string(), value: val.name.clone() }.at(val.line, val.col));
                    }
                }
                QueryMode::Quantify { x_value: xv.name, z_value: zv.name }
            }
        };
        if selection_only && !matches!(mode, QueryMode::Selection { .. }) {
            return Err(here(Error::InvalidArgument("`measured`/`population` apply to selection queries only".into())));
        }
        if self.context == Some(BiasContext::Representational) && !matches!(mode, QueryMode::Selection { .. }) {
            return Err(here(Error::InvalidArgument("`as representational` applies to selection queries".into())));
        }
        if self.context == Some(BiasContext::Label) && mode != QueryMode::Transport {
            return Err(here(Error::InvalidArgument("`as label` applies to transport queries".into())));
        }
        Ok(AuditQuery { x, z, adjustment, max_set: self.max, mode, context: self.context })
    }
}

fn build_scm(g: &CausalGraph, decl: ScmDecl) -> Result<DiscreteScm> {
    let mut b = DiscreteScm::builder(g);
    let mut seen: HashMap<String, ()> = HashMap::new();
    for (var, values) in &decl.domains {
        if seen.insert(var.name.clone(), ()).is_some() {
            return Err(Error::DuplicateDeclaration(var.name.clone()).at(var.line, var.col));
        }
        if !g.expand().graph.contains(&var.name) {
            return Err(Error::UnknownVariable(var.name.clone()).at(var.line, var.col));
        }
        b = b.domain(&var.name, values);
    }
    for (var, parents, rows) in decl.cpts {
        let refs: Vec<&str> = parents.iter().map(String::as_str).collect();
        b = b.cpt(&var.name, &refs, rows);
    }
    b.build().map_err(|e| e.at(decl.line, decl.col))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG4: &str = "\
title \"fig4\";
case cs01;
graph fig4 {
  node X, Z, G, M, A;
  G -> X; G -> Z;
  M -> X; M -> Z;
  A -> X; A -> Z;
  A -> M;
  X -> Z;
}
query {
  identify X -> Z;
}
";

    #[test]
    fn parses_fig4() {
        let spec = parse_spec(FIG4).unwrap();
        assert_eq!(spec.graph.len(), 5);
        assert_eq!(spec.graph.directed_edges().count(), 8);
        assert_eq!(spec.title.as_deref(), Some("fig4"));
        assert_eq!(spec.case_id.as_deref(), Some("cs01"));
        assert_eq!(spec.queries.len(), 1);
        assert!(spec.diagram.is_none());
    }

    #[test]
    fn unknown_edge_endpoint_is_located() {
        let text = "graph g {\n  node X;\n  X -> Q;\n}\n";
        let err = parse_spec(text).unwrap_err();
        assert_eq!(err, Error::Located { line: 3, col: 8, inner: Box::new(Error::UnknownNode("Q".into())) });
    }

    #[test]
    fn duplicate_node_is_located() {
        let err = parse_spec("graph g {\n node X;\n latent X;\n}").unwrap_err();
        assert_eq!(err, Error::Located { line: 3, col: 9, inner: Box::new(Error::DuplicateDeclaration("X".into())) });
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_spec("graph g {\n node X\n}").unwrap_err() {
            Error::Syntax { line, col, .. } => assert_eq!((line, col), (3, 1)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_spec("").unwrap_err(), Error::Syntax { .. }));
        assert!(matches!(parse_spec("graph g { node X; } bogus;").unwrap_err(), Error::Syntax { line: 1, col: 21, .. }));
    }

    #[test]
    fn chains_and_discrepancy_sugar() {
        let spec = parse_spec(
            "graph d {\n node W, X, Z;\n discrepancy R -> W;\n domains Pi -> PiStar;\n W -> X -> Z;\n}\nquery { transport X -> Z as label; }",
        )
        .unwrap();
        let d = spec.diagram.unwrap();
        assert_eq!(d.source_label(), "Pi");
        assert!(spec.graph.has_edge("R", "W"));
        assert!(spec.graph.has_edge("X", "Z"));
        assert_eq!(spec.queries[0].context, Some(BiasContext::Label));
    }

    #[test]
    fn query_validation() {
        let base = "graph g { node X, Z; X -> Z; }\n";
        let err = parse_spec(&format!("{base}query {{ selection X -> Z; }}")).unwrap_err();
        assert_eq!(err.root(), &Error::NoSelectionNode);
        let err = parse_spec(&format!("{base}query {{ transport X -> Z; }}")).unwrap_err();
        assert!(matches!(err.root(), Error::InvalidArgument(_)));
        let err = parse_spec(&format!("{base}query {{ quantify X=1 -> Z=1; }}")).unwrap_err();
        assert!(matches!(err.root(), Error::InvalidArgument(_)));
        let err = parse_spec(&format!("{base}query {{ identify X -> Q; }}")).unwrap_err();
        assert_eq!(err, Error::Located { line: 2, col: 23, inner: Box::new(Error::UnknownNode("Q".into())) });
        let err = parse_spec(&format!("{base}query {{ identify X -> Z adjust {{A}}; }}")).unwrap_err();
        assert_eq!(err.root(), &Error::UnknownNode("A".into()));
    }

    #[test]
    fn scm_block() {
        let text = "graph g { node X, Z; X -> Z; }
scm {
  domain X = {0, 1};
  domain Z = {0, 1};
  cpt X = [0.25, 0.75];
  cpt Z | X = [0.5, 0.5; 1e-1, 0.9];
}
query { quantify X=1 -> Z=1; }";
        let spec = parse_spec(text).unwrap();
        let scm = spec.scm.unwrap();
        assert_eq!(scm.variable("Z").unwrap().rows()[1], vec![0.1, 0.9]);

        let bad = text.replace("0.25, 0.75", "0.25, 0.7");
        let err = parse_spec(&bad).unwrap_err();
        assert!(matches!(err, Error::Located { line: 2, inner, .. } if matches!(*inner, Error::MalformedCpt(_))));

        let wrong_parents = text.replace("cpt Z | X", "cpt Z");
        assert!(matches!(parse_spec(&wrong_parents).unwrap_err().root(), Error::IncompatibleScm(_)));

        let bad_value = text.replace("quantify X=1", "quantify X=7");
        assert!(matches!(parse_spec(&bad_value).unwrap_err().root(), Error::UnknownValue { .. }));
    }

    #[test]
    fn target_scm_requires_diagram() {
        let text = "graph g { node X; }\nscm target { domain X = {0, 1}; cpt X = [0.5, 0.5]; }";
        assert!(matches!(parse_spec(text).unwrap_err().root(), Error::IncompatibleScm(_)));
    }
}
