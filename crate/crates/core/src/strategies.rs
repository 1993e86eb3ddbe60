//! Matches, extensions and strategies between two analyzed groups.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::number::LogValue;
use crate::pattern::{linear_equivalences, Moebius};
use crate::psets::{TubularGroup, TypeRef};

/// A pair of P-set classes, `left` in the first group, `right` in the second.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Match {
    pub left: usize,
    pub right: usize,
}

impl Match {
    pub fn new(left: usize, right: usize) -> Self {
        Match { left, right }
    }

    pub fn swapped(self) -> Self {
        Match {
            left: self.right,
            right: self.left,
        }
    }
}

impl fmt::Display for Match {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(R{}, S{})", self.left, self.right)
    }
}

/// Bijection between the P-sets through a left vertex of type `root.0` and
/// a right vertex of type `root.1`, induced by a pattern equivalence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeBijection {
    pub root: (usize, usize),
    pub left_vertex: usize,
    pub right_vertex: usize,
    /// In the left vertex's canonical slope order.
    pub pairs: Vec<(TypeRef, TypeRef)>,
    pub witness: Moebius,
}

/// A `rows × cols` matrix whose nonzero entries are type bijections.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extension {
    pub root: Match,
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Option<Arc<TypeBijection>>>,
}

impl Extension {
    pub fn entry(&self, i: usize, j: usize) -> Option<&TypeBijection> {
        self.entries[i * self.cols + j].as_deref()
    }

    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize, &TypeBijection)> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(move |(k, e)| e.as_deref().map(|b| (k / self.cols, k % self.cols, b)))
    }

    /// Every row and every column has a nonzero entry.
    pub fn covers(&self) -> bool {
        let mut row = vec![false; self.rows];
        let mut col = vec![false; self.cols];
        for (i, j, _) in self.nonzero() {
            row[i] = true;
            col[j] = true;
        }
        row.into_iter().chain(col).all(|x| x)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Terminal {
    pub label: Match,
    /// `None` is an undefined height error.
    pub error: Option<LogValue>,
    pub entry: (usize, usize),
    pub left_type: TypeRef,
    pub right_type: TypeRef,
}

/// What a strategy says about one label: the extreme defined errors and
/// whether an undefined error occurs.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LabelSummary {
    pub min: Option<LogValue>,
    pub max: Option<LogValue>,
    pub has_undefined: bool,
}

impl LabelSummary {
    fn absorb(&mut self, error: &Option<LogValue>) {
        match error {
            None => self.has_undefined = true,
            Some(e) => {
                if self.min.as_ref().is_none_or(|m| e < m) {
                    self.min = Some(e.clone());
                }
                if self.max.as_ref().is_none_or(|m| e > m) {
                    self.max = Some(e.clone());
                }
            }
        }
    }

    /// The error range of `self` lies inside that of `other`.
    fn within(&self, other: &LabelSummary) -> bool {
        match (&self.min, &self.max) {
            (Some(lo), Some(hi)) => match (&other.min, &other.max) {
                (Some(olo), Some(ohi)) => olo <= lo && hi <= ohi,
                _ => false,
            },
            _ => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Strategy {
    pub root: Match,
    pub extension: Extension,
    pub terminals: Vec<Terminal>,
    pub summary: BTreeMap<Match, LabelSummary>,
}

impl Strategy {
    pub fn labels(&self) -> impl Iterator<Item = &Match> {
        self.summary.keys()
    }

    /// Every constraint and membership requirement of `self` is implied by
    /// those of `other`: fewer labels and narrower error ranges.
    pub fn dominates(&self, other: &Strategy) -> bool {
        self.summary
            .iter()
            .all(|(label, s)| other.summary.get(label).is_some_and(|o| s.within(o)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrategyChoice {
    pub positive: Arc<Strategy>,
    pub negative: Arc<Strategy>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct StrategySet {
    /// Sorted, distinct.
    pub matches: Vec<Match>,
    /// Whether each match pairs bounded classes.
    pub bounded: Vec<bool>,
    pub choices: Vec<StrategyChoice>,
}

impl StrategySet {
    pub fn position(&self, m: &Match) -> Option<usize> {
        self.matches.binary_search(m).ok()
    }

    /// Every terminal label is a match of the set.
    pub fn is_closed(&self) -> bool {
        self.choices.iter().all(|c| {
            [&c.positive, &c.negative]
                .iter()
                .all(|s| s.labels().all(|l| self.position(l).is_some()))
        })
    }

    /// Every class of both groups occurs in some match.
    pub fn is_covering(&self, left_classes: usize, right_classes: usize) -> bool {
        let mut l = vec![false; left_classes];
        let mut r = vec![false; right_classes];
        for m in &self.matches {
            if m.left < left_classes && m.right < right_classes {
                l[m.left] = true;
                r[m.right] = true;
            }
        }
        l.into_iter().chain(r).all(|x| x)
    }
}

/// Comparison data for an ordered pair of groups.
pub struct Comparison<'a> {
    pub left: &'a TubularGroup,
    pub right: &'a TubularGroup,
    equivalences: Vec<Vec<Vec<Moebius>>>,
}

/// Per-entry bijection lists of a match, row-major.
#[derive(Clone, Debug)]
pub struct EntryTable {
    pub root: Match,
    pub rows: usize,
    pub cols: usize,
    pub options: Vec<Vec<Arc<TypeBijection>>>,
}

impl<'a> Comparison<'a> {
    pub fn new(left: &'a TubularGroup, right: &'a TubularGroup) -> Self {
        let equivalences = left
            .patterns
            .iter()
            .map(|p| right.patterns.iter().map(|q| linear_equivalences(p, q)).collect())
            .collect();
        Comparison {
            left,
            right,
            equivalences,
        }
    }

    /// Maps from the pattern of left vertex `v` onto that of right vertex `w`.
    pub fn equivalences(&self, v: usize, w: usize) -> &[Moebius] {
        &self.equivalences[v][w]
    }

    /// Both classes bounded or both unbounded.
    pub fn is_compatible(&self, m: Match) -> bool {
        self.left.classes[m.left].is_bounded() == self.right.classes[m.right].is_bounded()
    }

    pub fn compatible_matches(&self) -> Vec<Match> {
        let mut out = Vec::new();
        for l in 0..self.left.classes.len() {
            for r in 0..self.right.classes.len() {
                let m = Match::new(l, r);
                if self.is_compatible(m) {
                    out.push(m);
                }
            }
        }
        out
    }

    /// Distinct bijections induced by pattern equivalences that pair type
    /// `i` of the left class with type `j` of the right class.
    pub fn entry_bijections(&self, m: Match, i: usize, j: usize) -> Vec<TypeBijection> {
        let lt = TypeRef {
            class: m.left,
            index: i,
        };
        let rt = TypeRef {
            class: m.right,
            index: j,
        };
        let ln = self.left.node(lt);
        let rn = self.right.node(rt);
        let (v, w) = (ln.vertex, rn.vertex);
        if self.left.line_count(v) != self.right.line_count(w) {
            return Vec::new();
        }
        let left_types = self.left.type_multiset(v);
        let mut out: Vec<TypeBijection> = Vec::new();
        for map in self.equivalences(v, w) {
            if map.apply(&ln.slope) != Some(rn.slope) {
                continue;
            }
            let pairs: Option<Vec<(TypeRef, TypeRef)>> = left_types
                .iter()
                .map(|(s, t)| {
                    let image = map.apply(s)?;
                    Some((*t, self.right.type_of(w, &image)?))
                })
                .collect();
            let Some(pairs) = pairs else { continue };
            match out.iter_mut().find(|b| b.pairs == pairs) {
                Some(b) if *map < b.witness => b.witness = map.clone(),
                Some(_) => {}
                None => out.push(TypeBijection {
                    root: (i, j),
                    left_vertex: v,
                    right_vertex: w,
                    pairs,
                    witness: map.clone(),
                }),
            }
        }
        out.sort_by(|a, b| a.pairs.cmp(&b.pairs));
        out
    }

    pub fn entry_table(&self, m: Match) -> EntryTable {
        let rows = self.left.classes[m.left].type_count();
        let cols = self.right.classes[m.right].type_count();
        let mut options = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                options.push(self.entry_bijections(m, i, j).into_iter().map(Arc::new).collect());
            }
        }
        EntryTable {
            root: m,
            rows,
            cols,
            options,
        }
    }

    /// All extensions of `m` in canonical order (row-major, zero before the
    /// bijections of each entry), generated lazily.
    pub fn enumerate_extensions(&self, m: Match) -> ExtensionIter {
        ExtensionIter::new(self.entry_table(m))
    }

    /// Extensions whose nonzero pattern is a minimal row/column cover.
    ///
    /// Every extension contains one of these with the same bijections on the
    /// kept entries, and its strategy then has a subset of the terminals.
    pub fn minimal_extensions(&self, m: Match) -> Vec<Extension> {
        minimal_extensions(&self.entry_table(m))
    }

    pub fn build_strategy(&self, m: Match, ext: &Extension) -> Strategy {
        let (l, r) = (self.left, self.right);
        let parent_bounded = l.classes[m.left].is_bounded() && r.classes[m.right].is_bounded();
        let mut terminals = Vec::new();
        for (i, j, b) in ext.nonzero() {
            let root_l = TypeRef {
                class: m.left,
                index: i,
            };
            let rigid = l.line_count(b.left_vertex) >= 3;
            for &(lt, rt) in &b.pairs {
                if lt == root_l {
                    continue;
                }
                let label = Match::new(lt.class, rt.class);
                let error = if parent_bounded && rigid {
                    match (
                        l.potential(root_l),
                        l.potential(lt),
                        r.potential(TypeRef {
                            class: m.right,
                            index: j,
                        }),
                        r.potential(rt),
                    ) {
                        (Some(pi), Some(pi2), Some(pj), Some(pj2)) => Some(&(pi - pi2) - &(pj - pj2)),
                        _ => None,
                    }
                } else {
                    None
                };
                terminals.push(Terminal {
                    label,
                    error,
                    entry: (i, j),
                    left_type: lt,
                    right_type: rt,
                });
            }
        }
        let mut summary: BTreeMap<Match, LabelSummary> = BTreeMap::new();
        for t in &terminals {
            summary.entry(t.label).or_default().absorb(&t.error);
        }
        Strategy {
            root: m,
            extension: ext.clone(),
            terminals,
            summary,
        }
    }
}

/// Lazy depth-first enumeration of covering matrices.
pub struct ExtensionIter {
    table: EntryTable,
    digits: Vec<usize>,
    next_digit: Vec<usize>,
    depth: usize,
    done: bool,
}

impl ExtensionIter {
    fn new(table: EntryTable) -> Self {
        let n = table.rows * table.cols;
        ExtensionIter {
            digits: vec![0; n],
            next_digit: vec![0; n],
            depth: 0,
            done: n == 0,
            table,
        }
    }

    fn radix(&self, p: usize) -> usize {
        1 + self.table.options[p].len()
    }

    /// Whether the prefix ending at `p` can still be completed.
    fn prefix_ok(&self, p: usize) -> bool {
        let cols = self.table.cols;
        let (i, j) = (p / cols, p % cols);
        if j == cols - 1 && (0..cols).all(|c| self.digits[i * cols + c] == 0) {
            return false;
        }
        if i == self.table.rows - 1 && (0..self.table.rows).all(|r| self.digits[r * cols + j] == 0) {
            return false;
        }
        true
    }

    fn current(&self) -> Extension {
        Extension {
            root: self.table.root,
            rows: self.table.rows,
            cols: self.table.cols,
            entries: self
                .digits
                .iter()
                .enumerate()
                .map(|(p, &d)| (d > 0).then(|| self.table.options[p][d - 1].clone()))
                .collect(),
        }
    }
}

impl Iterator for ExtensionIter {
    type Item = Extension;

    fn next(&mut self) -> Option<Extension> {
        let n = self.digits.len();
        loop {
            if self.done {
                return None;
            }
            if self.depth == n {
                let ext = self.current();
                self.depth -= 1;
                return Some(ext);
            }
            let p = self.depth;
            let d = self.next_digit[p];
            if d >= self.radix(p) {
                self.next_digit[p] = 0;
                if p == 0 {
                    self.done = true;
                    return None;
                }
                self.depth -= 1;
                continue;
            }
            self.next_digit[p] = d + 1;
            self.digits[p] = d;
            if self.prefix_ok(p) {
                self.depth += 1;
            }
        }
    }
}

fn minimal_extensions(table: &EntryTable) -> Vec<Extension> {
    let (rows, cols) = (table.rows, table.cols);
    let n = rows * cols;
    let mut supports = Vec::new();
    let mut chosen = vec![false; n];
    let mut row_count = vec![0usize; rows];
    let mut col_count = vec![0usize; cols];

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        p: usize,
        table: &EntryTable,
        chosen: &mut Vec<bool>,
        row_count: &mut Vec<usize>,
        col_count: &mut Vec<usize>,
        supports: &mut Vec<Vec<bool>>,
    ) {
        let (rows, cols) = (table.rows, table.cols);
        if p == rows * cols {
            if row_count.iter().chain(col_count.iter()).all(|&c| c > 0) {
                supports.push(chosen.clone());
            }
            return;
        }
        let (i, j) = (p / cols, p % cols);
        let viable = |chosen: &Vec<bool>, row_count: &Vec<usize>, col_count: &Vec<usize>| {
            // row finished without an entry, or column finished without one
            if j == cols - 1 && row_count[i] == 0 {
                return false;
            }
            if i == rows - 1 && col_count[j] == 0 {
                return false;
            }
            // an entry with both its row and column covered twice is redundant
            (0..=p).all(|q| !chosen[q] || row_count[q / cols] == 1 || col_count[q % cols] == 1)
        };
        if viable(chosen, row_count, col_count) {
            dfs(p + 1, table, chosen, row_count, col_count, supports);
        }
        if !table.options[p].is_empty() {
            chosen[p] = true;
            row_count[i] += 1;
            col_count[j] += 1;
            if viable(chosen, row_count, col_count) {
                dfs(p + 1, table, chosen, row_count, col_count, supports);
            }
            chosen[p] = false;
            row_count[i] -= 1;
            col_count[j] -= 1;
        }
    }

    if n > 0 {
        dfs(0, table, &mut chosen, &mut row_count, &mut col_count, &mut supports);
    }

    let mut out = Vec::new();
    for support in supports {
        let cells: Vec<usize> = (0..n).filter(|&p| support[p]).collect();
        let mut pick = vec![0usize; cells.len()];
        loop {
            let mut entries = vec![None; n];
            for (k, &p) in cells.iter().enumerate() {
                entries[p] = Some(table.options[p][pick[k]].clone());
            }
            out.push(Extension {
                root: table.root,
                rows,
                cols,
                entries,
            });
            // odometer over the bijection choices, last cell fastest
            let mut advanced = false;
            let mut k = cells.len();
            while k > 0 {
                k -= 1;
                pick[k] += 1;
                if pick[k] < table.options[cells[k]].len() {
                    advanced = true;
                    break;
                }
                pick[k] = 0;
            }
            if !advanced {
                break;
            }
        }
    }
    out
}

/// Distinct strategies of `m` up to summary, with dominated ones removed,
/// in canonical extension order.
pub fn strategy_options(cmp: &Comparison<'_>, m: Match) -> (usize, Vec<Arc<Strategy>>) {
    let exts = cmp.minimal_extensions(m);
    let built = exts.len();
    let mut distinct: Vec<Strategy> = Vec::new();
    for e in &exts {
        let s = cmp.build_strategy(m, e);
        if !distinct.iter().any(|d| d.summary == s.summary) {
            distinct.push(s);
        }
    }
    let kept = (0..distinct.len())
        .filter(|&k| !(0..distinct.len()).any(|o| o != k && distinct[o].dominates(&distinct[k])))
        .map(|k| Arc::new(distinct[k].clone()))
        .collect();
    (built, kept)
}
