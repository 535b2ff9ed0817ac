//! File ingestion and export: edge lists, a GML subset, attribute and truth
//! tables, and neighborhood-family dumps.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Result, ScanError};
use crate::graph::{AttributedGraph, DuplicatePolicy, Graph, GroundTruth, IngestReport, LabelMap, VertexId};

#[derive(Debug, Clone, Copy, Default)]
pub struct EdgeListOptions {
    pub duplicates: DuplicatePolicy,
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| ScanError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| ScanError::io(path, e))
}

#[derive(Default)]
struct Interner {
    labels: Vec<String>,
    index: HashMap<String, VertexId>,
}

impl Interner {
    fn intern(&mut self, label: &str) -> u32 {
        if let Some(v) = self.index.get(label) {
            return v.0;
        }
        let id = VertexId(self.labels.len() as u32);
        self.labels.push(label.to_owned());
        self.index.insert(label.to_owned(), id);
        id.0
    }

    fn into_map(self) -> LabelMap {
        LabelMap::Named {
            labels: self.labels,
            index: self.index,
        }
    }
}

/// Reads a whitespace- or comma-separated edge list with `#` comments.
/// Labels are mapped to dense ids in order of first appearance.
pub fn load_edge_list(path: &Path, opts: EdgeListOptions) -> Result<(AttributedGraph, IngestReport)> {
    parse_edge_list(BufReader::new(open(path)?), path, opts)
}

pub fn parse_edge_list(
    reader: impl BufRead,
    path: &Path,
    opts: EdgeListOptions,
) -> Result<(AttributedGraph, IngestReport)> {
    let mut interner = Interner::default();
    let mut edges = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| ScanError::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .collect();
        if tokens.len() != 2 {
            return Err(ScanError::Parse {
                path: path.to_owned(),
                line: lineno + 1,
                message: format!("expected two vertex labels, found {}", tokens.len()),
            });
        }
        let u = interner.intern(tokens[0]);
        let v = interner.intern(tokens[1]);
        edges.push((u, v));
    }
    let n = interner.labels.len();
    if n == 0 {
        return Err(ScanError::EmptyGraph);
    }
    let (g, report) = Graph::from_edges(n, edges, interner.into_map(), opts.duplicates)?;
    Ok((AttributedGraph::new(g), report))
}

/// Writes the canonical edge list (`u < v`, ascending) using external labels.
pub fn write_edge_list(g: &Graph, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    write_edge_list_to(g, &mut w).map_err(|e| ScanError::io(path, e))?;
    w.flush().map_err(|e| ScanError::io(path, e))
}

pub fn write_edge_list_to(g: &Graph, w: &mut impl Write) -> std::io::Result<()> {
    let labels = g.labels();
    for (u, v) in g.edges() {
        writeln!(w, "{} {}", labels.label(u), labels.label(v))?;
    }
    Ok(())
}

/// Graph parsed from GML, plus the integer `value` attribute of each node.
#[derive(Debug, Clone)]
pub struct GmlGraph {
    pub graph: AttributedGraph,
    pub report: IngestReport,
    pub values: Vec<Option<i64>>,
    pub directed: bool,
}

pub fn load_gml(path: &Path) -> Result<GmlGraph> {
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .map_err(|e| ScanError::io(path, e))?;
    parse_gml(&text)
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open,
    Close,
    Word(String),
    Str(String),
}

#[derive(Debug, Clone)]
enum GmlValue {
    Scalar(String),
    List(Vec<(String, GmlValue)>),
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '#' => {
                while let Some(c) = chars.next() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            '[' => {
                chars.next();
                out.push(Token::Open);
            }
            ']' => {
                chars.next();
                out.push(Token::Close);
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some(c) => s.push(c),
                        None => return Err(ScanError::Gml("unterminated string".into())),
                    }
                }
                out.push(Token::Str(s));
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '[' || c == ']' || c == '"' {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                out.push(Token::Word(s));
            }
        }
    }
    Ok(out)
}

fn parse_list(tokens: &[Token], pos: &mut usize, nested: bool) -> Result<Vec<(String, GmlValue)>> {
    let mut items = Vec::new();
    loop {
        let key = match tokens.get(*pos) {
            None if nested => return Err(ScanError::Gml("missing `]`".into())),
            None => return Ok(items),
            Some(Token::Close) if nested => {
                *pos += 1;
                return Ok(items);
            }
            Some(Token::Word(k)) => k.clone(),
            Some(t) => return Err(ScanError::Gml(format!("expected a key, found {t:?}"))),
        };
        *pos += 1;
        let value = match tokens.get(*pos) {
            Some(Token::Open) => {
                *pos += 1;
                GmlValue::List(parse_list(tokens, pos, true)?)
            }
            Some(Token::Word(w)) | Some(Token::Str(w)) => GmlValue::Scalar(w.clone()),
            _ => return Err(ScanError::Gml(format!("key `{key}` has no value"))),
        };
        if matches!(value, GmlValue::Scalar(_)) {
            *pos += 1;
        }
        items.push((key, value));
    }
}

fn int_attr(items: &[(String, GmlValue)], key: &str, what: &str) -> Result<Option<i64>> {
    match items.iter().find(|(k, _)| k == key) {
        None => Ok(None),
        Some((_, GmlValue::Scalar(s))) => s
            .parse::<i64>()
            .map(Some)
            .map_err(|_| ScanError::Gml(format!("{what}: `{key}` is not an integer: {s}"))),
        Some((_, GmlValue::List(_))) => Err(ScanError::UnsupportedGml(format!("{what}.{key}"))),
    }
}

fn reject_nested(items: &[(String, GmlValue)], owner: &str) -> Result<()> {
    match items.iter().find(|(_, v)| matches!(v, GmlValue::List(_))) {
        Some((k, _)) => Err(ScanError::UnsupportedGml(format!("{owner}.{k}"))),
        None => Ok(()),
    }
}

/// Parses `graph [ node [ id N value V ] ... edge [ source S target T ] ... ]`.
///
/// Directed edges are symmetrized, so a citation in either direction gives
/// one undirected edge. Top-level and graph-level scalar keys are ignored.
pub fn parse_gml(text: &str) -> Result<GmlGraph> {
    let tokens = tokenize(text)?;
    let mut pos = 0;
    let top = parse_list(&tokens, &mut pos, false)?;
    let mut graph_items = None;
    for (k, v) in top {
        match (k.as_str(), v) {
            ("graph", GmlValue::List(items)) => {
                if graph_items.is_some() {
                    return Err(ScanError::UnsupportedGml("multiple graph blocks".into()));
                }
                graph_items = Some(items);
            }
            (_, GmlValue::Scalar(_)) => {}
            (other, GmlValue::List(_)) => return Err(ScanError::UnsupportedGml(other.into())),
        }
    }
    let items = graph_items.ok_or_else(|| ScanError::Gml("no `graph [ ... ]` block".into()))?;

    let mut directed = false;
    let mut interner = Interner::default();
    let mut values = Vec::new();
    let mut raw_edges = Vec::new();
    let mut node_ordinal = 0usize;
    let mut edge_ordinal = 0usize;
    for (k, v) in &items {
        match (k.as_str(), v) {
            ("node", GmlValue::List(node)) => {
                node_ordinal += 1;
                let what = format!("node #{node_ordinal}");
                reject_nested(node, "node")?;
                let id = int_attr(node, "id", &what)?
                    .ok_or_else(|| ScanError::Gml(format!("{what} has no `id`")))?;
                let label = id.to_string();
                if interner.index.contains_key(&label) {
                    return Err(ScanError::Gml(format!("{what} repeats id {id}")));
                }
                interner.intern(&label);
                values.push(int_attr(node, "value", &what)?);
            }
            ("edge", GmlValue::List(edge)) => {
                edge_ordinal += 1;
                let what = format!("edge #{edge_ordinal}");
                reject_nested(edge, "edge")?;
                let s = int_attr(edge, "source", &what)?
                    .ok_or_else(|| ScanError::Gml(format!("{what} has no `source`")))?;
                let t = int_attr(edge, "target", &what)?
                    .ok_or_else(|| ScanError::Gml(format!("{what} has no `target`")))?;
                raw_edges.push((s, t, edge_ordinal));
            }
            ("directed", GmlValue::Scalar(s)) => directed = s.trim() == "1",
            (_, GmlValue::Scalar(_)) => {}
            (other, GmlValue::List(_)) => {
                return Err(ScanError::UnsupportedGml(format!("graph.{other}")))
            }
        }
    }
    let mut edges = Vec::with_capacity(raw_edges.len());
    for (s, t, ordinal) in raw_edges {
        let resolve = |x: i64| {
            interner
                .index
                .get(&x.to_string())
                .map(|v| v.0)
                .ok_or_else(|| ScanError::Gml(format!("edge #{ordinal} references unknown node {x}")))
        };
        edges.push((resolve(s)?, resolve(t)?));
    }
    let n = interner.labels.len();
    if n == 0 {
        return Err(ScanError::EmptyGraph);
    }
    let (g, report) = Graph::from_edges(n, edges, interner.into_map(), DuplicatePolicy::Merge)?;
    Ok(GmlGraph {
        graph: AttributedGraph::new(g),
        report,
        values,
        directed,
    })
}

/// Reads `vertex,value` rows into a dense observation vector.
pub fn load_attributes(g: &Graph, path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "vertex" || &headers[1] != "value" {
        return Err(ScanError::Parse {
            path: path.to_owned(),
            line: 1,
            message: "expected header `vertex,value`".into(),
        });
    }
    let mut x = vec![f64::NAN; g.n()];
    let mut seen = vec![false; g.n()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |message: String| ScanError::Parse {
            path: path.to_owned(),
            line,
            message,
        };
        let label = rec.get(0).unwrap_or_default();
        let v = g
            .labels()
            .lookup(label)
            .ok_or_else(|| bad(format!("unknown vertex `{label}`")))?;
        let value: f64 = rec
            .get(1)
            .unwrap_or_default()
            .parse()
            .map_err(|_| bad("value is not a number".into()))?;
        if std::mem::replace(&mut seen[v.index()], true) {
            return Err(bad(format!("vertex `{label}` listed twice")));
        }
        x[v.index()] = value;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(ScanError::Parse {
            path: path.to_owned(),
            line: 0,
            message: format!(
                "no value for vertex `{}`",
                g.labels().label(VertexId::from(missing))
            ),
        });
    }
    Ok(x)
}

pub fn write_attributes(g: &Graph, x: &[f64], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["vertex", "value"])?;
    for v in g.vertices() {
        w.write_record([g.labels().label(v).as_ref(), &x[v.index()].to_string()])?;
    }
    w.flush().map_err(|e| ScanError::io(path, e))
}

/// Reads `vertex,activity,active` rows. `a` is the common inactive activity;
/// `b` defaults to the smallest active activity.
pub fn load_truth(g: &Graph, path: &Path, b: Option<f64>) -> Result<GroundTruth> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let headers = rdr.headers()?.clone();
    if headers.iter().take(3).collect::<Vec<_>>() != ["vertex", "activity", "active"] {
        return Err(ScanError::Parse {
            path: path.to_owned(),
            line: 1,
            message: "expected header `vertex,activity,active`".into(),
        });
    }
    let mut activity = vec![f64::NAN; g.n()];
    let mut active = vec![false; g.n()];
    let mut seen = vec![false; g.n()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |message: String| ScanError::Parse {
            path: path.to_owned(),
            line: i + 2,
            message,
        };
        let label = rec.get(0).unwrap_or_default();
        let v = g
            .labels()
            .lookup(label)
            .ok_or_else(|| bad(format!("unknown vertex `{label}`")))?;
        let value: f64 = rec
            .get(1)
            .unwrap_or_default()
            .parse()
            .map_err(|_| bad("activity is not a number".into()))?;
        let flag = match rec.get(2).unwrap_or_default() {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(bad(format!("active flag `{other}` is not 0/1"))),
        };
        seen[v.index()] = true;
        activity[v.index()] = value;
        active[v.index()] = flag;
    }
    if seen.iter().any(|s| !s) {
        return Err(ScanError::LengthMismatch {
            expected: g.n(),
            got: seen.iter().filter(|&&s| s).count(),
        });
    }
    let a = activity
        .iter()
        .zip(&active)
        .find(|(_, &act)| !act)
        .map(|(&x, _)| x)
        .ok_or_else(|| ScanError::Separation("no inactive vertex".into()))?;
    let b = match b {
        Some(b) => b,
        None => activity
            .iter()
            .zip(&active)
            .filter(|(_, &act)| act)
            .map(|(&x, _)| x)
            .fold(f64::INFINITY, f64::min),
    };
    // No active vertex at all: any b above a is consistent.
    let b = if b.is_finite() { b } else { a + 1.0 };
    let truth = GroundTruth {
        a,
        b,
        activity,
        active,
    };
    truth.audit()?;
    Ok(truth)
}

pub fn write_truth(g: &Graph, truth: &GroundTruth, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["vertex", "activity", "active"])?;
    for v in g.vertices() {
        let i = v.index();
        w.write_record([
            g.labels().label(v).as_ref(),
            &truth.activity[i].to_string(),
            if truth.active[i] { "1" } else { "0" },
        ])?;
    }
    w.flush().map_err(|e| ScanError::io(path, e))
}
