//! P-set classes on the finite quotient.
//!
//! Each `(vertex, slope)` pair is a node of the slope graph; each edge of the
//! presentation links the nodes of its two ends, weighted by its height
//! change. Connected components are the P-set classes, their nodes are the
//! vertex types, and a class has bounded height change exactly when every
//! cycle in it has total height zero.

use std::collections::VecDeque;

use thiserror::Error;

use crate::model::{validate, GraphOfGroups, Severity};
use crate::number::LogValue;
use crate::pattern::{
    edge_height, slope_of, symmetric_gram, symmetry_group, EdgePattern, Gram, Moebius, PatternError, ProjectiveSlope,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LineNode {
    pub vertex: usize,
    pub slope: ProjectiveSlope,
}

/// One link per edge of the presentation, oriented end 0 → end 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Link {
    pub edge: usize,
    pub source: usize,
    pub target: usize,
    pub height: LogValue,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlopeGraph {
    pub nodes: Vec<LineNode>,
    pub links: Vec<Link>,
}

impl SlopeGraph {
    pub fn node_index(&self, vertex: usize, slope: &ProjectiveSlope) -> Option<usize> {
        self.nodes.binary_search(&LineNode { vertex, slope: *slope }).ok()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HeightKind {
    /// Potentials indexed like the class's `nodes`; the first is zero.
    Bounded { potentials: Vec<LogValue> },
    /// Carries one link whose fundamental cycle has nonzero height.
    Unbounded {
        witness_link: usize,
        cycle_height: LogValue,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PsetClass {
    pub id: usize,
    /// Slope-graph node indices, ascending; position = type index.
    pub nodes: Vec<usize>,
    pub links: Vec<usize>,
    pub kind: HeightKind,
}

impl PsetClass {
    pub fn is_bounded(&self) -> bool {
        matches!(self.kind, HeightKind::Bounded { .. })
    }

    pub fn type_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn potential(&self, type_index: usize) -> Option<&LogValue> {
        match &self.kind {
            HeightKind::Bounded { potentials } => potentials.get(type_index),
            HeightKind::Unbounded { .. } => None,
        }
    }
}

/// Vertex type `{[R], i}`: the class and the index of the node within it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeRef {
    pub class: usize,
    pub index: usize,
}

pub fn build_slope_graph(g: &GraphOfGroups, grams: &[Gram]) -> Result<SlopeGraph, PatternError> {
    let mut nodes = Vec::new();
    for e in g.edges() {
        for end in &e.ends {
            nodes.push(LineNode {
                vertex: end.vertex,
                slope: slope_of(end.vector)?,
            });
        }
    }
    nodes.sort();
    nodes.dedup();
    let mut sg = SlopeGraph {
        nodes,
        links: Vec::new(),
    };
    for (i, e) in g.edges().iter().enumerate() {
        let [a, b] = &e.ends;
        let source = sg.node_index(a.vertex, &slope_of(a.vector)?).unwrap();
        let target = sg.node_index(b.vertex, &slope_of(b.vector)?).unwrap();
        let height = edge_height(&grams[a.vertex], a.vector, &grams[b.vertex], b.vector)?;
        sg.links.push(Link {
            edge: i,
            source,
            target,
            height,
        });
    }
    Ok(sg)
}

/// Connected components in order of their smallest node, classified by
/// fundamental-cycle sums over a BFS tree rooted at the smallest node.
pub fn pset_classes(sg: &SlopeGraph) -> Vec<PsetClass> {
    let n = sg.nodes.len();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, l) in sg.links.iter().enumerate() {
        adjacency[l.source].push(i);
        if l.target != l.source {
            adjacency[l.target].push(i);
        }
    }
    let mut component = vec![usize::MAX; n];
    let mut classes = Vec::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let id = classes.len();
        let mut members = vec![start];
        component[start] = id;
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            for &li in &adjacency[x] {
                let l = &sg.links[li];
                let y = if l.source == x { l.target } else { l.source };
                if component[y] == usize::MAX {
                    component[y] = id;
                    members.push(y);
                    queue.push_back(y);
                }
            }
        }
        members.sort_unstable();
        let mut links: Vec<usize> = members.iter().flat_map(|&x| adjacency[x].iter().copied()).collect();
        links.sort_unstable();
        links.dedup();
        let kind = classify_component(sg, &members, &links, members[0]);
        classes.push(PsetClass {
            id,
            nodes: members,
            links,
            kind,
        });
    }
    classes
}

/// Height classification of one component using a BFS tree from `root`.
/// Potentials are re-based so that the smallest member sits at zero.
pub fn classify_component(sg: &SlopeGraph, members: &[usize], links: &[usize], root: usize) -> HeightKind {
    let local = |node: usize| members.binary_search(&node).expect("node in component");
    let mut potential: Vec<Option<LogValue>> = vec![None; members.len()];
    potential[local(root)] = Some(LogValue::zero());
    let mut queue = VecDeque::from([root]);
    let mut tree_link = vec![false; sg.links.len()];
    while let Some(x) = queue.pop_front() {
        let px = potential[local(x)].clone().unwrap();
        for &li in links {
            let l = &sg.links[li];
            let (y, py) = if l.source == x {
                (l.target, &px + &l.height)
            } else if l.target == x {
                (l.source, &px - &l.height)
            } else {
                continue;
            };
            if potential[local(y)].is_none() {
                potential[local(y)] = Some(py);
                tree_link[li] = true;
                queue.push_back(y);
            }
        }
    }
    let potential: Vec<LogValue> = potential.into_iter().map(|p| p.expect("connected")).collect();
    for &li in links {
        if tree_link[li] {
            continue;
        }
        let l = &sg.links[li];
        let cycle = &(&potential[local(l.source)] + &l.height) - &potential[local(l.target)];
        if !cycle.is_zero() {
            return HeightKind::Unbounded {
                witness_link: li,
                cycle_height: cycle,
            };
        }
    }
    let base = potential[0].clone();
    HeightKind::Bounded {
        potentials: potential.iter().map(|p| p - &base).collect(),
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("invalid presentation: {0}")]
    Invalid(String),
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

/// Steepest asymptotic height gain per depth-zero vertex step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MaxSlope {
    /// `gain / steps`, realized by a cycle of `steps` steps.
    Value {
        gain: LogValue,
        steps: u64,
    },
    Undefined,
}

impl MaxSlope {
    /// Exact comparison with a plain height.
    pub fn equals(&self, target: &LogValue) -> bool {
        match self {
            MaxSlope::Value { gain, steps } => gain.cmp_ratio(*steps, target, 1).is_eq(),
            MaxSlope::Undefined => false,
        }
    }

    pub fn same_value(&self, other: &MaxSlope) -> bool {
        match (self, other) {
            (MaxSlope::Value { gain: a, steps: p }, MaxSlope::Value { gain: b, steps: r }) => {
                a.cmp_ratio(*p, b, *r).is_eq()
            }
            (MaxSlope::Undefined, MaxSlope::Undefined) => true,
            _ => false,
        }
    }

    pub fn render(&self) -> String {
        match self {
            MaxSlope::Value { gain, steps } => {
                let per_step = 2 * *steps as i64;
                match gain.as_halves() {
                    Some(h) if h % per_step == 0 => format!("{}", h / per_step),
                    _ => format!("{:.6}", gain.to_f64() / *steps as f64),
                }
            }
            MaxSlope::Undefined => "undefined".to_string(),
        }
    }
}

/// Everything the engine derives from one presentation.
#[derive(Clone, Debug)]
pub struct TubularGroup {
    pub graph: GraphOfGroups,
    pub patterns: Vec<EdgePattern>,
    /// Symmetry group per vertex; `None` for two-line vertices.
    pub symmetries: Vec<Option<Vec<Moebius>>>,
    pub grams: Vec<Gram>,
    pub slope_graph: SlopeGraph,
    pub classes: Vec<PsetClass>,
    /// Type of each slope-graph node.
    pub node_types: Vec<TypeRef>,
    pub warnings: Vec<String>,
}

impl TubularGroup {
    pub fn analyze(graph: &GraphOfGroups) -> Result<Self, AnalysisError> {
        let patterns = Self::patterns_of(graph)?;
        let grams = patterns.iter().map(symmetric_gram).collect::<Result<Vec<_>, _>>()?;
        Self::analyze_with_grams(graph, grams)
    }

    /// Analysis with caller-chosen vertex metrics.
    pub fn analyze_with_grams(graph: &GraphOfGroups, grams: Vec<Gram>) -> Result<Self, AnalysisError> {
        let patterns = Self::patterns_of(graph)?;
        let mut warnings = Vec::new();
        let mut symmetries = Vec::new();
        for p in &patterns {
            if p.line_count() >= 3 {
                let group = symmetry_group(p)?;
                if group.len() == 1 {
                    warnings.push(format!(
                        "vertex `{}` has a {}-line pattern with trivial symmetry group; its metric is not canonical",
                        graph.vertices()[p.vertex],
                        p.line_count()
                    ));
                }
                symmetries.push(Some(group));
            } else {
                symmetries.push(None);
            }
        }
        let slope_graph = build_slope_graph(graph, &grams)?;
        let classes = pset_classes(&slope_graph);
        let mut node_types = vec![TypeRef { class: 0, index: 0 }; slope_graph.nodes.len()];
        for c in &classes {
            for (i, &n) in c.nodes.iter().enumerate() {
                node_types[n] = TypeRef { class: c.id, index: i };
            }
        }
        Ok(TubularGroup {
            graph: graph.clone(),
            patterns,
            symmetries,
            grams,
            slope_graph,
            classes,
            node_types,
            warnings,
        })
    }

    fn patterns_of(graph: &GraphOfGroups) -> Result<Vec<EdgePattern>, AnalysisError> {
        let report = validate(graph);
        if !report.ok {
            let msg = report
                .diagnostics
                .iter()
                .filter(|d| d.severity == Severity::Error)
                .map(|d| d.message.clone())
                .collect::<Vec<_>>()
                .join("; ");
            return Err(AnalysisError::Invalid(msg));
        }
        (0..graph.vertices().len())
            .map(|v| {
                let vectors: Vec<_> = graph
                    .incident_ends(v)
                    .map(|(e, k)| graph.edges()[e].ends[k].vector)
                    .collect();
                EdgePattern::from_vectors(v, &vectors).map_err(AnalysisError::from)
            })
            .collect()
    }

    pub fn line_count(&self, vertex: usize) -> usize {
        self.patterns[vertex].line_count()
    }

    pub fn class(&self, id: usize) -> &PsetClass {
        &self.classes[id]
    }

    pub fn node(&self, t: TypeRef) -> &LineNode {
        &self.slope_graph.nodes[self.classes[t.class].nodes[t.index]]
    }

    pub fn type_of(&self, vertex: usize, slope: &ProjectiveSlope) -> Option<TypeRef> {
        self.slope_graph.node_index(vertex, slope).map(|n| self.node_types[n])
    }

    /// Types taken by `vertex` with respect to the P-sets through it, one
    /// per slope in canonical order.
    pub fn type_multiset(&self, vertex: usize) -> Vec<(ProjectiveSlope, TypeRef)> {
        self.patterns[vertex]
            .slopes()
            .iter()
            .map(|s| (*s, self.type_of(vertex, s).expect("pattern slope has a node")))
            .collect()
    }

    pub fn potential(&self, t: TypeRef) -> Option<&LogValue> {
        self.classes[t.class].potential(t.index)
    }

    pub fn all_bounded(&self) -> bool {
        self.classes.iter().all(PsetClass::is_bounded)
    }

    /// Maximum mean height gain per step over cycles of the quotient of the
    /// tree of P-sets.
    ///
    /// A state is "arrived at vertex `v` through node `(v, s)`". A step leaves
    /// `v` through a different slope `s'`, crosses the P-set of `(v, s')`
    /// and arrives at any of its types, gaining the potential difference.
    pub fn max_slope(&self) -> MaxSlope {
        if !self.all_bounded() || self.patterns.iter().any(|p| p.line_count() < 3) {
            return MaxSlope::Undefined;
        }
        let n = self.slope_graph.nodes.len();
        // best[u][w]: largest single-step gain from state u to state w
        let mut best: Vec<Vec<Option<LogValue>>> = vec![vec![None; n]; n];
        for (u, node) in self.slope_graph.nodes.iter().enumerate() {
            for s in self.patterns[node.vertex].slopes() {
                if *s == node.slope {
                    continue;
                }
                let exit = self.type_of(node.vertex, s).unwrap();
                let class = &self.classes[exit.class];
                let from = class.potential(exit.index).unwrap();
                for (i, &w) in class.nodes.iter().enumerate() {
                    let gain = class.potential(i).unwrap() - from;
                    if best[u][w].as_ref().is_none_or(|b| gain > *b) {
                        best[u][w] = Some(gain);
                    }
                }
            }
        }
        karp_max_mean(&best).map_or(MaxSlope::Undefined, |(gain, steps)| MaxSlope::Value { gain, steps })
    }
}

/// Karp's maximum mean cycle on a dense weighted digraph, exact.
#[allow(clippy::needless_range_loop)]
fn karp_max_mean(w: &[Vec<Option<LogValue>>]) -> Option<(LogValue, u64)> {
    let n = w.len();
    if n == 0 {
        return None;
    }
    // d[k][v]: maximum weight of a walk with exactly k edges ending at v
    let mut d: Vec<Vec<Option<LogValue>>> = vec![vec![Some(LogValue::zero()); n]];
    for k in 1..=n {
        let mut row = vec![None; n];
        for u in 0..n {
            let Some(du) = &d[k - 1][u] else { continue };
            for v in 0..n {
                if let Some(wt) = &w[u][v] {
                    let cand = du + wt;
                    if row[v].as_ref().is_none_or(|r: &LogValue| cand > *r) {
                        row[v] = Some(cand);
                    }
                }
            }
        }
        d.push(row);
    }
    let mut answer: Option<(LogValue, u64)> = None;
    for v in 0..n {
        let Some(dn) = &d[n][v] else { continue };
        let mut worst: Option<(LogValue, u64)> = None;
        for k in 0..n {
            let Some(dk) = &d[k][v] else { continue };
            let gain = dn - dk;
            let steps = (n - k) as u64;
            if worst.as_ref().is_none_or(|(g, s)| gain.cmp_ratio(steps, g, *s).is_lt()) {
                worst = Some((gain, steps));
            }
        }
        if let Some((g, s)) = worst {
            if answer.as_ref().is_none_or(|(a, t)| g.cmp_ratio(s, a, *t).is_gt()) {
                answer = Some((g, s));
            }
        }
    }
    answer
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_graph;

    fn analyze(text: &str) -> TubularGroup {
        TubularGroup::analyze(&parse_graph(text).unwrap()).unwrap()
    }

    const WISE: &str = "vertex v\nedge x : v (1,0) -> v (2,2)\nedge y : v (0,1) -> v (2,2)";

    #[test]
    fn corpus_wise_matches_inline_copy() {
        let a = analyze(crate::testdata::WISE);
        let b = analyze(WISE);
        assert_eq!(a.classes, b.classes);
        assert_eq!(a.classes.len(), 1);
        assert_eq!(a.classes[0].type_count(), 3);
    }
    const W2: &str = "vertex v\nedge x : v (1,0) -> v (4,4)\nedge y : v (0,1) -> v (2,2)";
    const U: &str = "vertex v\nedge x : v (1,0) -> v (2,0)\nedge y : v (0,1) -> v (0,2)";

    fn slope(a: i64, b: i64) -> ProjectiveSlope {
        slope_of((a, b)).unwrap()
    }

    #[test]
    fn wise_slope_graph() {
        let g = analyze(WISE);
        let sg = &g.slope_graph;
        assert_eq!(sg.nodes.len(), 3);
        assert_eq!(sg.links.len(), 2);
        let n0 = sg.node_index(0, &slope(1, 0)).unwrap();
        let ninf = sg.node_index(0, &slope(0, 1)).unwrap();
        let n1 = sg.node_index(0, &slope(1, 1)).unwrap();
        assert_eq!((sg.links[0].source, sg.links[0].target), (n0, n1));
        assert_eq!((sg.links[1].source, sg.links[1].target), (ninf, n1));
        assert_eq!(sg.links[0].height, LogValue::integer(-1));
        assert_eq!(sg.links[1].height, LogValue::integer(-1));
        assert_eq!(g.classes.len(), 1);
        assert_eq!(g.classes[0].type_count(), 3);
        assert!(g.classes[0].is_bounded());
    }

    #[test]
    fn instance_u_is_unbounded() {
        let g = analyze(U);
        assert_eq!(g.slope_graph.nodes.len(), 2);
        for l in &g.slope_graph.links {
            assert_eq!(l.source, l.target);
            assert_eq!(l.height, LogValue::integer(-1));
        }
        assert_eq!(g.classes.len(), 2);
        assert!(g.classes.iter().all(|c| !c.is_bounded()));
        assert_eq!(g.max_slope(), MaxSlope::Undefined);
    }

    #[test]
    fn w2_potentials() {
        let g = analyze(W2);
        assert_eq!(g.classes.len(), 1);
        let t1 = g.type_of(0, &slope(1, 1)).unwrap();
        let t0 = g.type_of(0, &slope(1, 0)).unwrap();
        let tinf = g.type_of(0, &slope(0, 1)).unwrap();
        let rel = |t| g.potential(t).unwrap() - g.potential(t1).unwrap();
        assert_eq!(rel(t0), LogValue::integer(2));
        assert_eq!(rel(tinf), LogValue::integer(1));
        assert!(g.potential(TypeRef { class: 0, index: 0 }).unwrap().is_zero());
    }

    #[test]
    fn max_slopes() {
        assert!(analyze(W2).max_slope().equals(&LogValue::integer(2)));
        assert_eq!(analyze(W2).max_slope().render(), "2");
        let flat = analyze("vertex v\nedge x : v (1,0) -> v (1,1)\nedge y : v (0,1) -> v (1,1)");
        assert!(flat.max_slope().equals(&LogValue::zero()));
        // two-line vertex: undefined
        let raag = analyze("vertex a\nvertex b\nedge x : a (1,0) -> b (1,0)\nedge y : a (0,1) -> b (0,1)");
        assert_eq!(raag.max_slope(), MaxSlope::Undefined);
    }

    #[test]
    fn type_multisets() {
        let g = analyze(WISE);
        let tm = g.type_multiset(0);
        assert_eq!(tm.len(), 3);
        let mut idx: Vec<_> = tm.iter().map(|(_, t)| t.index).collect();
        idx.sort();
        assert_eq!(idx, vec![0, 1, 2]);
        assert!(tm.iter().all(|(_, t)| t.class == 0));
        let raag = analyze("vertex a\nvertex b\nedge x : a (1,0) -> b (1,0)\nedge y : a (0,1) -> b (0,1)");
        assert_eq!(raag.type_multiset(0).len(), 2);
        assert_eq!(raag.classes.len(), 2);
    }

    #[test]
    fn classification_independent_of_root() {
        for text in [WISE, W2, U, crate::testdata::TWO_TORUS] {
            let g = analyze(text);
            for c in &g.classes {
                let last = *c.nodes.last().unwrap();
                let again = classify_component(&g.slope_graph, &c.nodes, &c.links, last);
                match (&again, &c.kind) {
                    (HeightKind::Bounded { potentials: a }, HeightKind::Bounded { potentials: b }) => {
                        assert_eq!(a, b)
                    }
                    (HeightKind::Unbounded { .. }, HeightKind::Unbounded { .. }) => {}
                    _ => panic!("classification depends on the BFS root"),
                }
                if let HeightKind::Bounded { potentials } = &c.kind {
                    for &li in &c.links {
                        let l = &g.slope_graph.links[li];
                        let s = c.nodes.binary_search(&l.source).unwrap();
                        let t = c.nodes.binary_search(&l.target).unwrap();
                        assert_eq!(&potentials[t] - &potentials[s], l.height);
                    }
                }
            }
        }
    }
}
