//! Line-oriented text formats: causal graphs, distribution literals, 0/1
//! datasets and fully specified models. Parsers report the line and column
//! of the first offending token.
//!
//! Graph files:
//! ```text
//! # comment
//! node X endogenous
//! node U1 exogenous
//! edge U1 X
//! order X Y        # optional: table variable order
//! ```
//!
//! Distribution literals list every assignment of the declared variables:
//! ```text
//! vars X Y
//! 00 0.1
//! 01 0.2
//! 10 0.3
//! 11 0.4
//! ```
//!
//! Model files extend graph files with `prior` and `mech` lines and
//! optional narrative metadata (see the bundled fixtures).

use std::collections::BTreeMap;

use crate::bench::scm::{FullScm, Mechanism, Prior};
use crate::error::{Error, Result};
use crate::graph::{CausalGraph, NodeKind, VariableId};
use crate::table::{Dataset, JointTable};

fn err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Tokenizes one line, skipping blank lines and `#` comments. Returns the
/// tokens with their 1-based column positions.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let line = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut col = 0usize;
    for piece in line.split_whitespace() {
        let start = line[col..].find(piece).expect("piece in line") + col;
        out.push((start + 1, piece));
        col = start + piece.len();
    }
    out
}

/// Parsed graph file: the graph plus the declared table order.
#[derive(Debug, Clone)]
pub struct GraphFile {
    pub graph: CausalGraph,
    /// Endogenous variable order for tables; defaults to declaration order.
    pub order: Vec<VariableId>,
}

pub fn parse_graph(text: &str) -> Result<GraphFile> {
    let mut nodes: Vec<(String, NodeKind)> = Vec::new();
    let mut edges: Vec<(String, String)> = Vec::new();
    let mut order: Option<Vec<VariableId>> = None;
    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let toks = tokens(raw);
        if toks.is_empty() {
            continue;
        }
        match toks[0].1 {
            "node" => {
                if toks.len() != 3 {
                    return Err(err(ln, toks[0].0, "expected `node NAME KIND`"));
                }
                let kind = match toks[2].1 {
                    "endogenous" | "endo" => NodeKind::Endogenous,
                    "exogenous" | "exo" => NodeKind::Exogenous,
                    other => {
                        return Err(err(ln, toks[2].0, format!("unknown node kind `{other}`")))
                    }
                };
                nodes.push((toks[1].1.to_string(), kind));
            }
            "edge" => {
                if toks.len() != 3 {
                    return Err(err(ln, toks[0].0, "expected `edge FROM TO`"));
                }
                edges.push((toks[1].1.to_string(), toks[2].1.to_string()));
            }
            "order" => {
                order = Some(toks[1..].iter().map(|(_, t)| (*t).into()).collect());
            }
            other => {
                return Err(err(ln, toks[0].0, format!("unknown directive `{other}`")));
            }
        }
    }
    let graph = CausalGraph::new(
        nodes.iter().map(|(s, k)| (s.as_str(), *k)),
        &edges
            .iter()
            .map(|(a, b)| (a.as_str(), b.as_str()))
            .collect::<Vec<_>>(),
    )?;
    let order = match order {
        Some(o) => {
            for v in &o {
                graph.endogenous_node(v)?;
            }
            o
        }
        None => graph.endogenous().map(|i| graph.name(i).clone()).collect(),
    };
    Ok(GraphFile { graph, order })
}

/// Renders a graph back into the text format.
pub fn write_graph(gf: &GraphFile) -> String {
    let g = &gf.graph;
    let mut out = String::new();
    for i in 0..g.len() {
        if g.is_implicit(i) {
            continue;
        }
        let kind = match g.kind(i) {
            NodeKind::Endogenous => "endogenous",
            NodeKind::Exogenous => "exogenous",
        };
        out.push_str(&format!("node {} {kind}\n", g.name(i)));
    }
    for v in 0..g.len() {
        for &p in g.parents_of(v) {
            if g.is_implicit(p) {
                continue;
            }
            out.push_str(&format!("edge {} {}\n", g.name(p), g.name(v)));
        }
    }
    let names: Vec<String> = gf.order.iter().map(|v| v.to_string()).collect();
    out.push_str(&format!("order {}\n", names.join(" ")));
    out
}

pub fn parse_distribution(text: &str) -> Result<JointTable> {
    let mut vars: Option<Vec<VariableId>> = None;
    let mut cells: Option<Vec<Option<f64>>> = None;
    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let toks = tokens(raw);
        if toks.is_empty() {
            continue;
        }
        if toks[0].1 == "vars" {
            let v: Vec<VariableId> = toks[1..].iter().map(|(_, t)| (*t).into()).collect();
            if v.is_empty() {
                return Err(err(ln, toks[0].0, "expected `vars NAME...`"));
            }
            cells = Some(vec![None; 1 << v.len()]);
            vars = Some(v);
            continue;
        }
        let Some(v) = &vars else {
            return Err(err(ln, toks[0].0, "`vars` line must come first"));
        };
        if toks.len() != 2 {
            return Err(err(ln, toks[0].0, "expected `BITS PROBABILITY`"));
        }
        let bits = toks[0].1;
        if bits.len() != v.len() || bits.chars().any(|c| c != '0' && c != '1') {
            return Err(err(
                ln,
                toks[0].0,
                format!("assignment must be {} bits of 0/1", v.len()),
            ));
        }
        let idx = usize::from_str_radix(bits, 2).expect("checked bits");
        let p: f64 = toks[1]
            .1
            .parse()
            .map_err(|_| err(ln, toks[1].0, "not a probability"))?;
        let slot = &mut cells.as_mut().expect("vars seen")[idx];
        if slot.is_some() {
            return Err(err(ln, toks[0].0, format!("duplicate assignment `{bits}`")));
        }
        *slot = Some(p);
    }
    let vars = vars.ok_or_else(|| err(1, 1, "missing `vars` line"))?;
    let cells = cells.expect("vars seen");
    let mut probs = Vec::with_capacity(cells.len());
    for (i, c) in cells.iter().enumerate() {
        match c {
            Some(p) => probs.push(*p),
            None => {
                return Err(err(
                    1,
                    1,
                    format! ("missing assignment {:0width$b}", i, width = vars.len()),
                ))
            }
        }
    }
    JointTable::new(vars, probs)
}

pub fn write_distribution(t: &JointTable) -> String {
    let names: Vec<String> = t.variables().iter().map(|v| v.to_string()).collect();
    let mut out = format!("vars {}\n", names.join(" "));
    let n = t.variables().len();
    for (i, p) in t.cells().iter().enumerate() {
        out.push_str(&format!("{:0width$b} {p}\n", i, width = n));
    }
    out
}

pub fn parse_dataset_csv(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((_, l)) => break l,
            None => return Err(err(1, 1, "empty dataset file")),
        }
    };
    let columns: Vec<VariableId> = header
        .split(',')
        .map(|s| VariableId::new(s.trim()))
        .collect();
    let mut rows = Vec::new();
    for (ln, raw) in lines {
        let ln = ln + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(columns.len());
        let cells: Vec<&str> = raw.split(',').collect();
        if cells.len() != columns.len() {
            return Err(err(
                ln,
                1,
                format!("row has {} cells, expected {}", cells.len(), columns.len()),
            ));
        }
        for (ci, cell) in cells.iter().enumerate() {
            match cell.trim() {
                "0" => row.push(false),
                "1" => row.push(true),
                other => {
                    return Err(err(
                        ln,
                        ci + 1,
                        format!("cell `{other}` is not 0 or 1"),
                    ))
                }
            }
        }
        rows.push(row);
    }
    Dataset::new(columns, rows)
}

pub fn write_dataset_csv(d: &Dataset) -> String {
    let mut out = d
        .columns
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    for row in &d.rows {
        let cells: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Narrative metadata attached to a model fixture.
#[derive(Debug, Clone, Default)]
pub struct NarrativeMeta {
    pub id: Option<String>,
    pub model: Option<String>,
    pub target: Option<VariableId>,
    pub ground_truth: Option<VariableId>,
    /// True when the ground truth is a latent variable that no pipeline
    /// over the observed graph can name.
    pub latent_truth: bool,
    /// The endogenous node expected to stand in for a latent truth.
    pub expected_proxy: Option<VariableId>,
    pub sim_n: Option<usize>,
    pub sim_seed: Option<u64>,
}

/// A parsed model fixture.
#[derive(Debug, Clone)]
pub struct ScmFile {
    pub scm: FullScm,
    pub meta: NarrativeMeta,
}

pub fn parse_scm(text: &str) -> Result<ScmFile> {
    let mut nodes: Vec<(String, NodeKind)> = Vec::new();
    let mut edges: Vec<(String, String)> = Vec::new();
    // (line, name, probabilities)
    let mut priors: Vec<(usize, String, Vec<f64>)> = Vec::new();
    // (line, name, parent names, outputs)
    let mut mechs: Vec<(usize, String, Vec<String>, Vec<bool>)> = Vec::new();
    let mut meta = NarrativeMeta::default();

    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let toks = tokens(raw);
        if toks.is_empty() {
            continue;
        }
        match toks[0].1 {
            "node" => {
                if toks.len() != 3 {
                    return Err(err(ln, toks[0].0, "expected `node NAME KIND`"));
                }
                let kind = match toks[2].1 {
                    "endogenous" | "endo" => NodeKind::Endogenous,
                    "exogenous" | "exo" => NodeKind::Exogenous,
                    other => {
                        return Err(err(ln, toks[2].0, format!("unknown node kind `{other}`")))
                    }
                };
                nodes.push((toks[1].1.to_string(), kind));
            }
            "edge" => {
                if toks.len() != 3 {
                    return Err(err(ln, toks[0].0, "expected `edge FROM TO`"));
                }
                edges.push((toks[1].1.to_string(), toks[2].1.to_string()));
            }
            "prior" => {
                if toks.len() < 4 {
                    return Err(err(ln, toks[0].0, "expected `prior NAME P0 P1 ...`"));
                }
                let mut probs = Vec::new();
                for (col, t) in &toks[2..] {
                    probs.push(
                        t.parse::<f64>()
                            .map_err(|_| err(ln, *col, "not a probability"))?,
                    );
                }
                priors.push((ln, toks[1].1.to_string(), probs));
            }
            "mech" => {
                // mech NAME | P1 P2 ... : o0 o1 ...
                let bar = toks.iter().position(|(_, t)| *t == "|");
                let colon = toks.iter().position(|(_, t)| *t == ":");
                let (Some(bar), Some(colon)) = (bar, colon) else {
                    return Err(err(
                        ln,
                        toks[0].0,
                        "expected `mech NAME | PARENTS... : OUTPUTS...`",
                    ));
                };
                if bar != 2 || colon < bar {
                    return Err(err(ln, toks[0].0, "malformed mech line"));
                }
                let name = toks[1].1.to_string();
                let parents: Vec<String> = toks[bar + 1..colon]
                    .iter()
                    .map(|(_, t)| t.to_string())
                    .collect();
                let mut outputs = Vec::new();
                for (col, t) in &toks[colon + 1..] {
                    match *t {
                        "0" => outputs.push(false),
                        "1" => outputs.push(true),
                        other => {
                            return Err(err(ln, *col, format!("output `{other}` is not 0 or 1")))
                        }
                    }
                }
                mechs.push((ln, name, parents, outputs));
            }
            "narrative" => meta.id = Some(one_arg(ln, &toks)?),
            "model" => meta.model = Some(one_arg(ln, &toks)?),
            "target" => meta.target = Some(one_arg(ln, &toks)?.into()),
            "truth" => meta.ground_truth = Some(one_arg(ln, &toks)?.into()),
            "truth-latent" => {
                meta.ground_truth = Some(one_arg(ln, &toks)?.into());
                meta.latent_truth = true;
            }
            "proxy" => meta.expected_proxy = Some(one_arg(ln, &toks)?.into()),
            "sim-n" => {
                meta.sim_n = Some(
                    one_arg(ln, &toks)?
                        .parse()
                        .map_err(|_| err(ln, toks[1].0, "not a count"))?,
                )
            }
            "sim-seed" => {
                meta.sim_seed = Some(
                    one_arg(ln, &toks)?
                        .parse()
                        .map_err(|_| err(ln, toks[1].0, "not a seed"))?,
                )
            }
            other => {
                return Err(err(ln, toks[0].0, format!("unknown directive `{other}`")));
            }
        }
    }

    let graph = CausalGraph::new(
        nodes.iter().map(|(s, k)| (s.as_str(), *k)),
        &edges
            .iter()
            .map(|(a, b)| (a.as_str(), b.as_str()))
            .collect::<Vec<_>>(),
    )?;
    graph.validate()?;

    let mut prior_map = BTreeMap::new();
    for (ln, name, probs) in priors {
        let u = graph
            .node(&name.as_str().into())
            .filter(|&u| graph.kind(u) == NodeKind::Exogenous)
            .ok_or_else(|| err(ln, 1, format!("`{name}` is not an exogenous node")))?;
        prior_map.insert(u, Prior { probs });
    }
    let mut mech_map = BTreeMap::new();
    for (ln, name, parents, outputs) in mechs {
        let v = graph
            .endogenous_node(&name.as_str().into())
            .map_err(|_| err(ln, 1, format!("`{name}` is not an endogenous node")))?;
        let declared: Vec<usize> = graph.parents_of(v).to_vec();
        let listed: Vec<usize> = parents
            .iter()
            .map(|p| {
                graph
                    .node(&p.as_str().into())
                    .ok_or_else(|| err(ln, 1, format!("unknown parent `{p}`")))
            })
            .collect::<Result<_>>()?;
        if listed != declared {
            let want: Vec<String> = declared
                .iter()
                .map(|&p| graph.name(p).to_string())
                .collect();
            return Err(err(
                ln,
                1,
                format!(
                    "mech parents of `{name}` must be listed in declaration order: {}",
                    want.join(" ")
                ),
            ));
        }
        let cards: Vec<usize> = listed
            .iter()
            .map(|&p| match graph.kind(p) {
                NodeKind::Endogenous => Ok(2usize),
                NodeKind::Exogenous => prior_map
                    .get(&p)
                    .map(|pr| pr.cardinality())
                    .ok_or_else(|| {
                        err(
                            ln,
                            1,
                            format!("prior for `{}` must appear before this mech", graph.name(p)),
                        )
                    }),
            })
            .collect::<Result<_>>()?;
        mech_map.insert(
            v,
            Mechanism {
                parents: listed,
                cards,
                outputs,
            },
        );
    }

    let scm = FullScm::new(graph, prior_map, mech_map)?;
    Ok(ScmFile { scm, meta })
}

fn one_arg(ln: usize, toks: &[(usize, &str)]) -> Result<String> {
    if toks.len() != 2 {
        return Err(err(
            ln,
            toks[0].0,
            format!("`{}` takes exactly one argument", toks[0].1),
        ));
    }
    Ok(toks[1].1.to_string())
}

/// Serializes a model fixture; inverse of [`parse_scm`] up to formatting.
pub fn write_scm(scm: &FullScm, meta: &NarrativeMeta) -> String {
    let mut out = String::new();
    if let Some(id) = &meta.id {
        out.push_str(&format!("narrative {id}\n"));
    }
    if let Some(m) = &meta.model {
        out.push_str(&format!("model {m}\n"));
    }
    if let Some(t) = &meta.target {
        out.push_str(&format!("target {t}\n"));
    }
    if let Some(t) = &meta.ground_truth {
        if meta.latent_truth {
            out.push_str(&format!("truth-latent {t}\n"));
        } else {
            out.push_str(&format!("truth {t}\n"));
        }
    }
    if let Some(p) = &meta.expected_proxy {
        out.push_str(&format!("proxy {p}\n"));
    }
    if let Some(n) = meta.sim_n {
        out.push_str(&format!("sim-n {n}\n"));
    }
    if let Some(s) = meta.sim_seed {
        out.push_str(&format!("sim-seed {s}\n"));
    }
    let g = scm.graph();
    for i in 0..g.len() {
        let kind = match g.kind(i) {
            NodeKind::Endogenous => "endogenous",
            NodeKind::Exogenous => "exogenous",
        };
        out.push_str(&format!("node {} {kind}\n", g.name(i)));
    }
    for v in 0..g.len() {
        for &p in g.parents_of(v) {
            out.push_str(&format!("edge {} {}\n", g.name(p), g.name(v)));
        }
    }
    for u in g.exogenous() {
        let probs: Vec<String> = scm.prior_of(u).probs.iter().map(f64::to_string).collect();
        out.push_str(&format!("prior {} {}\n", g.name(u), probs.join(" ")));
    }
    for v in g.endogenous() {
        let mech = scm.mechanism_of(v);
        let parents: Vec<String> = mech.parents.iter().map(|&p| g.name(p).to_string()).collect();
        let outputs: Vec<&str> = mech
            .outputs
            .iter()
            .map(|&b| if b { "1" } else { "0" })
            .collect();
        out.push_str(&format!(
            "mech {} | {} : {}\n",
            g.name(v),
            parents.join(" "),
            outputs.join(" ")
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_roundtrip() {
        let text = "\
# the smoking chain
node X endogenous
node Z endogenous
node Y endogenous
node U1 exogenous
node U2 exogenous
edge X Z
edge Z Y
edge U1 X
edge U1 Y
edge U2 Z
order X Z Y
";
        let gf = parse_graph(text).unwrap();
        assert_eq!(gf.graph.endogenous().count(), 3);
        assert_eq!(gf.order.len(), 3);
        let again = parse_graph(&write_graph(&gf)).unwrap();
        assert_eq!(again.graph, gf.graph);
        assert_eq!(again.order, gf.order);
    }

    #[test]
    fn malformed_edge_reports_position() {
        let text = "node X endogenous\nedge X\n";
        match parse_graph(text) {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(column, 1);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_kind_reports_column() {
        let text = "node X banana\n";
        match parse_graph(text) {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 1);
                assert_eq!(column, 8);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn distribution_requires_full_cube() {
        let text = "vars A B\n00 0.25\n01 0.25\n10 0.5\n";
        assert!(matches!(parse_distribution(text), Err(Error::Parse { .. })));
        let full = format!("{text}11 0.0\n");
        let t = parse_distribution(&full).unwrap();
        assert_eq!(t.cells().len(), 4);
        let rt = parse_distribution(&write_distribution(&t)).unwrap();
        assert_eq!(rt, t);
    }

    #[test]
    fn dataset_csv_roundtrip() {
        let text = "A,B\n0,1\n1,1\n0,0\n";
        let d = parse_dataset_csv(text).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(parse_dataset_csv(&write_dataset_csv(&d)).unwrap(), d);
        assert!(matches!(
            parse_dataset_csv("A,B\n0,2\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn scm_fixture_parses() {
        let text = "\
narrative demo
target B
truth A
node A endogenous
node B endogenous
node NA exogenous
node NB exogenous
edge A B
edge NA A
edge NB B
prior NA 0.2 0.8
prior NB 0.9 0.1
mech A | NA : 0 1
mech B | A NB : 0 1 1 1
";
        let f = parse_scm(text).unwrap();
        assert_eq!(f.meta.id.as_deref(), Some("demo"));
        assert_eq!(f.meta.target.as_ref().unwrap().as_str(), "B");
        let joint = f.scm.exact_joint().unwrap();
        // P(A=1) = 0.8; B = A or NB.
        let pa = joint.probability(&[("A".into(), true)]).unwrap();
        assert!((pa - 0.8).abs() < 1e-12);
        let pb = joint.probability(&[("B".into(), true)]).unwrap();
        assert!((pb - (0.8 + 0.2 * 0.1)).abs() < 1e-12);
    }

    #[test]
    fn mech_parent_order_is_enforced() {
        let text = "\
node A endogenous
node B endogenous
node NB exogenous
edge A B
edge NB B
prior NB 0.5 0.5
mech B | NB A : 0 1 1 1
";
        // B's declared parent order is (A, NB).
        match parse_scm(text) {
            Err(Error::Parse { message, .. }) => {
                assert!(message.contains("declaration order"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}

