//! Tubular group presentations: the graph of groups, its text format and
//! structural validation.
//!
//! A presentation lists vertices (each carrying a copy of ℤ²) and edges
//! (each carrying ℤ). An edge end records the vertex it attaches to and the
//! integer vector that is the image of the edge generator in that vertex
//! group. Vectors are kept exactly as written.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

/// Integer attaching vector `(a, b)`.
pub type IVec = (i64, i64);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EdgeEnd {
    pub vertex: usize,
    pub vector: IVec,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub name: String,
    pub ends: [EdgeEnd; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct GraphOfGroups {
    vertices: Vec<String>,
    edges: Vec<Edge>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: unknown vertex `{name}`")]
    UnknownVertex { name: String, line: usize },
    #[error("line {line}: duplicate name `{name}`")]
    DuplicateName { name: String, line: usize },
    #[error("line {line}: edge `{edge}` has a zero attaching vector")]
    ZeroVector { edge: String, line: usize },
}

impl GraphOfGroups {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, name: impl Into<String>) -> Result<usize, ModelError> {
        let name = name.into();
        if self.name_taken(&name) {
            return Err(ModelError::DuplicateName { name, line: 0 });
        }
        self.vertices.push(name);
        Ok(self.vertices.len() - 1)
    }

    pub fn add_edge(
        &mut self,
        name: impl Into<String>,
        from: (usize, IVec),
        to: (usize, IVec),
    ) -> Result<usize, ModelError> {
        let name = name.into();
        if self.name_taken(&name) {
            return Err(ModelError::DuplicateName { name, line: 0 });
        }
        for (v, w) in [from, to] {
            if v >= self.vertices.len() {
                return Err(ModelError::UnknownVertex {
                    name: format!("#{v}"),
                    line: 0,
                });
            }
            if w == (0, 0) {
                return Err(ModelError::ZeroVector { edge: name, line: 0 });
            }
        }
        self.edges.push(Edge {
            name,
            ends: [
                EdgeEnd {
                    vertex: from.0,
                    vector: from.1,
                },
                EdgeEnd {
                    vertex: to.0,
                    vector: to.1,
                },
            ],
        });
        Ok(self.edges.len() - 1)
    }

    fn name_taken(&self, name: &str) -> bool {
        self.vertices.iter().any(|v| v == name) || self.edges.iter().any(|e| e.name == name)
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }

    /// `(edge index, end index)` for every edge end at `v`.
    pub fn incident_ends(&self, v: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges
            .iter()
            .enumerate()
            .flat_map(move |(i, e)| (0..2).filter(move |&k| e.ends[k].vertex == v).map(move |k| (i, k)))
    }

    /// Applies the integer matrix `basis` (row-major) to every vector
    /// attached at `v`.
    pub fn change_basis(&self, v: usize, basis: [i64; 4]) -> GraphOfGroups {
        let mut out = self.clone();
        for e in &mut out.edges {
            for end in &mut e.ends {
                if end.vertex == v {
                    let (a, b) = end.vector;
                    end.vector = (basis[0] * a + basis[1] * b, basis[2] * a + basis[3] * b);
                }
            }
        }
        out
    }

    /// Same group with declarations permuted. `vertex_order[k]` is the old
    /// index of the vertex that becomes the `k`-th declaration.
    pub fn reordered(&self, vertex_order: &[usize], edge_order: &[usize]) -> GraphOfGroups {
        let mut new_index = vec![0; self.vertices.len()];
        for (k, &old) in vertex_order.iter().enumerate() {
            new_index[old] = k;
        }
        GraphOfGroups {
            vertices: vertex_order.iter().map(|&i| self.vertices[i].clone()).collect(),
            edges: edge_order
                .iter()
                .map(|&i| {
                    let mut e = self.edges[i].clone();
                    for end in &mut e.ends {
                        end.vertex = new_index[end.vertex];
                    }
                    e
                })
                .collect(),
        }
    }

    /// Canonical text form; `parse_graph` inverts it.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            out.push_str("vertex ");
            out.push_str(v);
            out.push('\n');
        }
        for e in &self.edges {
            let [a, b] = &e.ends;
            out.push_str(&format!(
                "edge {} : {} ({},{}) -> {} ({},{})\n",
                e.name,
                self.vertices[a.vertex],
                a.vector.0,
                a.vector.1,
                self.vertices[b.vertex],
                b.vector.0,
                b.vector.1
            ));
        }
        out
    }
}

impl fmt::Display for GraphOfGroups {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn is_name(tok: &str) -> bool {
    let mut chars = tok.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_int(s: &str) -> Option<i64> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

fn parse_vec(tok: &str) -> Option<IVec> {
    let inner = tok.strip_prefix('(')?.strip_suffix(')')?;
    let (a, b) = inner.split_once(',')?;
    Some((parse_int(a)?, parse_int(b)?))
}

/// Splits a line into whitespace-separated tokens with 1-based columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        if c == ' ' || c == '\t' {
            if let Some(s) = start.take() {
                out.push((s, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &line[s..]));
    }
    out.into_iter()
        .map(|(s, t)| (line[..s].chars().count() + 1, t))
        .collect()
}

pub fn parse_graph(text: &str) -> Result<GraphOfGroups, ModelError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut g = GraphOfGroups::new();
    let mut names: HashMap<String, usize> = HashMap::new();
    let mut pending: Vec<(usize, Vec<(usize, String)>)> = Vec::new();

    for (lineno, raw) in text.split('\n').enumerate() {
        let line_no = lineno + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let toks = tokens(line);
        let Some(&(col, first)) = toks.first() else {
            continue;
        };
        if first.starts_with('#') {
            continue;
        }
        let syntax = |column: usize, message: &str| ModelError::Syntax {
            line: line_no,
            column,
            message: message.to_string(),
        };
        match first {
            "vertex" => {
                if toks.len() != 2 {
                    let column = toks.get(2).map_or(col, |t| t.0);
                    return Err(syntax(column, "expected `vertex NAME`"));
                }
                let (ncol, name) = toks[1];
                if !is_name(name) {
                    return Err(syntax(ncol, "invalid vertex name"));
                }
                if names.insert(name.to_string(), line_no).is_some() {
                    return Err(ModelError::DuplicateName {
                        name: name.to_string(),
                        line: line_no,
                    });
                }
                g.vertices.push(name.to_string());
            }
            "edge" => {
                // edge NAME : NAME vec -> NAME vec
                let expect = ["edge", "NAME", ":", "NAME", "VEC", "->", "NAME", "VEC"];
                for (k, what) in expect.iter().enumerate() {
                    let Some(&(c, tok)) = toks.get(k) else {
                        return Err(syntax(
                            line.chars().count() + 1,
                            &format!("unexpected end of line, expected {what}"),
                        ));
                    };
                    let ok = match *what {
                        "NAME" => is_name(tok),
                        "VEC" => parse_vec(tok).is_some(),
                        lit => tok == lit,
                    };
                    if !ok {
                        let msg = match *what {
                            "NAME" => "expected a name".to_string(),
                            "VEC" => "expected a vector `(INT,INT)`".to_string(),
                            lit => format!("expected `{lit}`"),
                        };
                        return Err(syntax(c, &msg));
                    }
                }
                if let Some(&(c, _)) = toks.get(expect.len()) {
                    return Err(syntax(c, "trailing input after edge declaration"));
                }
                let name = toks[1].1.to_string();
                if names.insert(name.clone(), line_no).is_some() {
                    return Err(ModelError::DuplicateName { name, line: line_no });
                }
                let v0 = parse_vec(toks[4].1).unwrap();
                let v1 = parse_vec(toks[7].1).unwrap();
                if v0 == (0, 0) || v1 == (0, 0) {
                    return Err(ModelError::ZeroVector {
                        edge: name,
                        line: line_no,
                    });
                }
                pending.push((line_no, vec![(0, toks[3].1.to_string()), (1, toks[6].1.to_string())]));
                g.edges.push(Edge {
                    name,
                    ends: [
                        EdgeEnd {
                            vertex: usize::MAX,
                            vector: v0,
                        },
                        EdgeEnd {
                            vertex: usize::MAX,
                            vector: v1,
                        },
                    ],
                });
            }
            _ => return Err(syntax(col, "expected `vertex`, `edge` or a comment")),
        }
    }

    // Vertices may be declared after the edges that use them.
    for (edge, (line, ends)) in pending.into_iter().enumerate() {
        for (k, name) in ends {
            let Some(v) = g.vertex_index(&name) else {
                return Err(ModelError::UnknownVertex { name, line });
            };
            g.edges[edge].ends[k].vertex = v;
        }
    }
    Ok(g)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Info,
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
    pub location: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub ok: bool,
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error)
    }
}

/// Primitive representative of the line through `w`, used only to count
/// distinct directions here; the pattern module owns the canonical slope type.
fn direction(w: IVec) -> IVec {
    let g = num_integer::gcd(w.0, w.1);
    let (a, b) = (w.0 / g, w.1 / g);
    if a < 0 || (a == 0 && b < 0) {
        (-a, -b)
    } else {
        (a, b)
    }
}

/// Checks the structural conditions a tubular group presentation must meet.
pub fn validate(g: &GraphOfGroups) -> ValidationReport {
    let mut diagnostics = Vec::new();
    if g.edges.is_empty() {
        diagnostics.push(Diagnostic {
            severity: Severity::Error,
            code: "no-edges",
            message: "presentation has no edges".into(),
            location: None,
        });
    }
    if g.vertices.is_empty() {
        diagnostics.push(Diagnostic {
            severity: Severity::Error,
            code: "no-vertices",
            message: "presentation has no vertices".into(),
            location: None,
        });
    }

    for (v, name) in g.vertices.iter().enumerate() {
        let dirs: BTreeSet<IVec> = g
            .incident_ends(v)
            .map(|(e, k)| direction(g.edges[e].ends[k].vector))
            .collect();
        if dirs.is_empty() {
            diagnostics.push(Diagnostic {
                severity: Severity::Error,
                code: "isolated-vertex",
                message: format!("vertex `{name}` has no incident edges"),
                location: Some(name.clone()),
            });
        } else if dirs.len() < 2 {
            diagnostics.push(Diagnostic {
                severity: Severity::Error,
                code: "crossing-graph",
                message: format!("incident edge groups at `{name}` do not span the vertex group rationally (1 line)"),
                location: Some(name.clone()),
            });
        }
        if !dirs.is_empty() {
            diagnostics.push(Diagnostic {
                severity: Severity::Info,
                code: "line-count",
                message: format!("vertex `{name}` is a {}-line vertex", dirs.len()),
                location: Some(name.clone()),
            });
        }
    }

    if !g.vertices.is_empty() {
        let components = connected_components(g);
        if components.len() > 1 {
            let listing = components
                .iter()
                .map(|c| c.iter().map(|&v| g.vertices[v].as_str()).collect::<Vec<_>>().join(","))
                .collect::<Vec<_>>()
                .join(" | ");
            diagnostics.push(Diagnostic {
                severity: Severity::Error,
                code: "disconnected",
                message: format!("underlying graph has {} components: {listing}", components.len()),
                location: None,
            });
        }
    }

    let ok = diagnostics.iter().all(|d| d.severity != Severity::Error);
    ValidationReport { ok, diagnostics }
}

fn connected_components(g: &GraphOfGroups) -> Vec<Vec<usize>> {
    let n = g.vertices.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for e in &g.edges {
        let a = find(&mut parent, e.ends[0].vertex);
        let b = find(&mut parent, e.ends[1].vertex);
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot: HashMap<usize, usize> = HashMap::new();
    for v in 0..n {
        let r = find(&mut parent, v);
        let slot = *root_slot.entry(r).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[slot].push(v);
    }
    groups
}
