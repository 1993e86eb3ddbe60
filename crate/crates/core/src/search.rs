//! Top-level candidate search: pre-filters, then a backtracking walk over
//! closed, covering strategy sets in canonical order.

use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::feasibility::{
    add_match_constraints, build_system, is_feasible, solve, Assignment, ConstraintSystem, Convention, Solution,
};
use crate::psets::TubularGroup;
use crate::strategies::{strategy_options, Comparison, Match, Strategy, StrategyChoice, StrategySet};

#[derive(Clone, Debug, Default)]
pub struct SearchOptions {
    /// Cap on feasibility checks.
    pub max_candidates: Option<u64>,
    pub timeout: Option<Duration>,
    pub convention: Convention,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Prefilter {
    /// Some pattern class occurs on one side only.
    PatternClasses(String),
    /// Some class has no partner of the same boundedness.
    Boundedness(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Exhaustion {
    Prefilter(Prefilter),
    /// The matches that admit a usable strategy do not cover every class.
    NoCoveringMatches,
    /// Every candidate was examined and found inconsistent.
    Exhausted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResourceLimit {
    Candidates(u64),
    Timeout(Duration),
}

/// A consistent set of strategies with its solved system.
#[derive(Clone, Debug)]
pub struct Witness {
    pub strategies: StrategySet,
    pub system: ConstraintSystem,
    pub assignment: Assignment,
}

#[derive(Clone, Debug)]
pub enum Verdict {
    QuasiIsometric(Box<Witness>),
    NotQuasiIsometric(Exhaustion),
    Inconclusive(ResourceLimit),
}

impl Verdict {
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::QuasiIsometric(_) => 0,
            Verdict::NotQuasiIsometric(_) => 1,
            Verdict::Inconclusive(_) => 3,
        }
    }

    pub fn is_qi(&self) -> bool {
        matches!(self, Verdict::QuasiIsometric(_))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub compatible_matches: usize,
    pub usable_matches: usize,
    /// Minimal extensions turned into strategies.
    pub extensions_enumerated: u64,
    /// Strategies kept after dropping duplicates and dominated ones.
    pub strategies_kept: u64,
    pub match_sets_examined: u64,
    /// Feasibility checks, partial or complete.
    pub candidates_examined: u64,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct Decision {
    pub verdict: Verdict,
    pub stats: SearchStats,
}

/// Boundedness and pattern-class pre-filters. `None` means both pass.
pub fn prefilter(cmp: &Comparison<'_>) -> Option<Prefilter> {
    let (l, r) = (cmp.left, cmp.right);
    let kind = |b: bool| if b { "bounded" } else { "unbounded" };
    for (i, c) in l.classes.iter().enumerate() {
        if !r.classes.iter().any(|d| d.is_bounded() == c.is_bounded()) {
            return Some(Prefilter::Boundedness(format!(
                "class {i} of the first group is {} but the second group has no {} class",
                kind(c.is_bounded()),
                kind(c.is_bounded())
            )));
        }
    }
    for (j, d) in r.classes.iter().enumerate() {
        if !l.classes.iter().any(|c| c.is_bounded() == d.is_bounded()) {
            return Some(Prefilter::Boundedness(format!(
                "class {j} of the second group is {} but the first group has no {} class",
                kind(d.is_bounded()),
                kind(d.is_bounded())
            )));
        }
    }
    for v in 0..l.patterns.len() {
        if (0..r.patterns.len()).all(|w| cmp.equivalences(v, w).is_empty()) {
            return Some(Prefilter::PatternClasses(format!(
                "pattern of vertex `{}` in the first group has no equivalent in the second",
                l.graph.vertices()[v]
            )));
        }
    }
    for w in 0..r.patterns.len() {
        if (0..l.patterns.len()).all(|v| cmp.equivalences(v, w).is_empty()) {
            return Some(Prefilter::PatternClasses(format!(
                "pattern of vertex `{}` in the second group has no equivalent in the first",
                r.graph.vertices()[w]
            )));
        }
    }
    None
}

struct Searcher<'a> {
    opts: &'a SearchOptions,
    start: Instant,
    stats: SearchStats,
    options: Vec<Vec<Arc<Strategy>>>,
    bounded: Vec<bool>,
}

enum Stop {
    Limit(ResourceLimit),
}

impl<'a> Searcher<'a> {
    fn check_limits(&self) -> Result<(), Stop> {
        if let Some(cap) = self.opts.max_candidates {
            if self.stats.candidates_examined >= cap {
                return Err(Stop::Limit(ResourceLimit::Candidates(cap)));
            }
        }
        if let Some(t) = self.opts.timeout {
            if self.start.elapsed() >= t {
                return Err(Stop::Limit(ResourceLimit::Timeout(t)));
            }
        }
        Ok(())
    }

    /// Backtracks over strategy choices for `set[k..]`.
    fn descend(
        &mut self,
        set: &[usize],
        allowed: &[Vec<Arc<Strategy>>],
        k: usize,
        chosen: &mut Vec<StrategyChoice>,
        sys: &ConstraintSystem,
        all: &[Match],
    ) -> Result<Option<Witness>, Stop> {
        if k == set.len() {
            self.check_limits()?;
            self.stats.candidates_examined += 1;
            let ss = StrategySet {
                matches: set.iter().map(|&u| all[u]).collect(),
                bounded: set.iter().map(|&u| self.bounded[u]).collect(),
                choices: chosen.clone(),
            };
            let system = build_system(&ss, self.opts.convention);
            return Ok(match solve(&system) {
                Solution::Feasible(assignment) => Some(Witness {
                    strategies: ss,
                    system,
                    assignment,
                }),
                Solution::Infeasible(_) => None,
            });
        }
        let u = set[k];
        let pairs: Vec<(Arc<Strategy>, Arc<Strategy>)> = if self.bounded[u] {
            allowed[k]
                .iter()
                .flat_map(|p| allowed[k].iter().map(move |n| (p.clone(), n.clone())))
                .collect()
        } else {
            allowed[k].iter().map(|s| (s.clone(), s.clone())).collect()
        };
        let var_index = sys.matches.iter().position(|m| *m == all[u]);
        for (positive, negative) in pairs {
            let choice = StrategyChoice { positive, negative };
            let mut next = sys.clone();
            if let Some(i) = var_index {
                add_match_constraints(&mut next, i, &choice, self.opts.convention);
                if k + 1 < set.len() {
                    self.check_limits()?;
                    self.stats.candidates_examined += 1;
                    if !is_feasible(&next) {
                        continue;
                    }
                }
            }
            chosen.push(choice);
            let found = self.descend(set, allowed, k + 1, chosen, &next, all)?;
            chosen.pop();
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }
}

/// Decides whether the two groups admit a consistent set of strategies.
pub fn search(left: &TubularGroup, right: &TubularGroup, opts: &SearchOptions) -> Decision {
    let start = Instant::now();
    let cmp = Comparison::new(left, right);
    let mut stats = SearchStats::default();
    let finish = |verdict: Verdict, mut stats: SearchStats| {
        stats.elapsed = start.elapsed();
        Decision { verdict, stats }
    };

    if let Some(p) = prefilter(&cmp) {
        return finish(Verdict::NotQuasiIsometric(Exhaustion::Prefilter(p)), stats);
    }

    let all = cmp.compatible_matches();
    stats.compatible_matches = all.len();
    let mut options: Vec<Vec<Arc<Strategy>>> = Vec::with_capacity(all.len());
    for &m in &all {
        let (built, kept) = strategy_options(&cmp, m);
        stats.extensions_enumerated += built as u64;
        stats.strategies_kept += kept.len() as u64;
        options.push(kept);
        if let Some(t) = opts.timeout {
            if start.elapsed() >= t {
                return finish(Verdict::Inconclusive(ResourceLimit::Timeout(t)), stats);
            }
        }
    }

    // Drop matches with no strategy whose labels are all usable, to a fixpoint.
    let mut usable: Vec<bool> = options.iter().map(|o| !o.is_empty()).collect();
    loop {
        let mut changed = false;
        for u in 0..all.len() {
            if !usable[u] {
                continue;
            }
            let before = options[u].len();
            options[u].retain(|s| s.labels().all(|l| all.binary_search(l).is_ok_and(|x| usable[x])));
            if options[u].len() != before {
                changed = true;
            }
            if options[u].is_empty() {
                usable[u] = false;
            }
        }
        if !changed {
            break;
        }
    }
    let pool: Vec<usize> = (0..all.len()).filter(|&u| usable[u]).collect();
    stats.usable_matches = pool.len();
    let covers = |set: &[usize]| {
        let mut l = vec![false; left.classes.len()];
        let mut r = vec![false; right.classes.len()];
        for &u in set {
            l[all[u].left] = true;
            r[all[u].right] = true;
        }
        l.into_iter().chain(r).all(|x| x)
    };
    if !covers(&pool) {
        return finish(Verdict::NotQuasiIsometric(Exhaustion::NoCoveringMatches), stats);
    }

    let bounded: Vec<bool> = all.iter().map(|m| left.classes[m.left].is_bounded()).collect();
    let mut searcher = Searcher {
        opts,
        start,
        stats,
        options,
        bounded,
    };

    // Match sets by size, then lexicographically.
    for size in 1..=pool.len() {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let set: Vec<usize> = idx.iter().map(|&k| pool[k]).collect();
            if covers(&set) {
                let allowed: Option<Vec<Vec<Arc<Strategy>>>> = set
                    .iter()
                    .map(|&u| {
                        let ok: Vec<Arc<Strategy>> = searcher.options[u]
                            .iter()
                            .filter(|s| s.labels().all(|l| set.iter().any(|&x| all[x] == *l)))
                            .cloned()
                            .collect();
                        (!ok.is_empty()).then_some(ok)
                    })
                    .collect();
                if let Some(allowed) = allowed {
                    searcher.stats.match_sets_examined += 1;
                    let bounded_matches: Vec<Match> =
                        set.iter().filter(|&&u| searcher.bounded[u]).map(|&u| all[u]).collect();
                    let sys = ConstraintSystem::with_triples(bounded_matches);
                    let mut chosen = Vec::new();
                    match searcher.descend(&set, &allowed, 0, &mut chosen, &sys, &all) {
                        Err(Stop::Limit(limit)) => {
                            let stats = searcher.stats.clone();
                            return finish(Verdict::Inconclusive(limit), stats);
                        }
                        Ok(Some(w)) => {
                            let stats = searcher.stats.clone();
                            return finish(Verdict::QuasiIsometric(Box::new(w)), stats);
                        }
                        Ok(None) => {}
                    }
                }
            }
            if let Err(Stop::Limit(limit)) = searcher.check_limits_time_only() {
                let stats = searcher.stats.clone();
                return finish(Verdict::Inconclusive(limit), stats);
            }
            // next combination
            let n = pool.len();
            let mut k = size;
            let mut advanced = false;
            while k > 0 {
                k -= 1;
                if idx[k] < n - size + k {
                    idx[k] += 1;
                    for t in k + 1..size {
                        idx[t] = idx[t - 1] + 1;
                    }
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                break;
            }
        }
    }
    let stats = searcher.stats.clone();
    finish(Verdict::NotQuasiIsometric(Exhaustion::Exhausted), stats)
}

impl<'a> Searcher<'a> {
    fn check_limits_time_only(&self) -> Result<(), Stop> {
        match self.opts.timeout {
            Some(t) if self.start.elapsed() >= t => Err(Stop::Limit(ResourceLimit::Timeout(t))),
            _ => Ok(()),
        }
    }
}
