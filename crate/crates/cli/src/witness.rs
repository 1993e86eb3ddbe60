//! Finite replay of the height-error bookkeeping behind a certificate.
//!
//! Errors depend only on types, so the walk runs over `(match, error)`
//! states instead of actual P-sets. Distinct states are expanded once; the
//! number of tree nodes they stand for is tracked separately.

use std::collections::BTreeMap;
use std::fmt;

use tubqi_core::feasibility::Var;
use tubqi_core::{Assignment, ConstraintSystem, Convention, LogValue, Match, StrategySet};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub matched: Match,
    pub error: LogValue,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} @ {}", self.matched, self.error.render())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub path: Vec<Step>,
    pub lower: LogValue,
    pub upper: LogValue,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path: Vec<String> = self.path.iter().map(Step::to_string).collect();
        write!(
            f,
            "error leaves [{}, {}] along {}",
            self.lower.render(),
            self.upper.render(),
            path.join(" -> ")
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchRange {
    pub matched: Match,
    pub bounded: bool,
    pub observed: Option<(LogValue, LogValue)>,
    pub allowed: Option<(LogValue, LogValue)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BallReport {
    pub radius: usize,
    /// Distinct `(match, error)` states reached.
    pub states: usize,
    /// Tree nodes of the ball, saturating.
    pub nodes_visited: u128,
    pub ranges: Vec<MatchRange>,
    pub max_abs_error: LogValue,
    pub failure: Option<Failure>,
}

impl BallReport {
    pub fn pass(&self) -> bool {
        self.failure.is_none()
    }
}

/// Walks every match to depth `radius` starting from error zero.
pub fn witness_ball(
    ss: &StrategySet,
    sys: &ConstraintSystem,
    assignment: &Assignment,
    convention: Convention,
    radius: usize,
) -> BallReport {
    let n = ss.matches.len();
    let slot: Vec<Option<usize>> = ss
        .matches
        .iter()
        .map(|m| sys.matches.iter().position(|x| x == m))
        .collect();
    let bounds: Vec<Option<(LogValue, LogValue, LogValue)>> = slot
        .iter()
        .map(|s| {
            s.map(|i| {
                (
                    assignment.get(Var::l(i)),
                    assignment.get(Var::m(i)),
                    assignment.get(Var::u(i)),
                )
            })
        })
        .collect();

    // first-seen parent of each state; frontier entries carry tree multiplicity
    let mut parent: BTreeMap<(usize, LogValue), Option<(usize, LogValue)>> = BTreeMap::new();
    let mut observed: Vec<Option<(LogValue, LogValue)>> = vec![None; n];
    let mut max_abs = LogValue::zero();
    let mut frontier: Vec<((usize, LogValue), u128)> = Vec::new();
    let mut nodes: u128 = 0;
    let mut failure = None;

    let record = |k: usize, e: &LogValue, observed: &mut Vec<Option<(LogValue, LogValue)>>, max_abs: &mut LogValue| {
        let r = observed[k].get_or_insert_with(|| (e.clone(), e.clone()));
        if *e < r.0 {
            r.0 = e.clone();
        }
        if *e > r.1 {
            r.1 = e.clone();
        }
        let a = e.abs();
        if a > *max_abs {
            *max_abs = a;
        }
    };

    let path_to = |parent: &BTreeMap<(usize, LogValue), Option<(usize, LogValue)>>, mut s: (usize, LogValue)| {
        let mut path = vec![Step {
            matched: ss.matches[s.0],
            error: s.1.clone(),
        }];
        while let Some(Some(p)) = parent.get(&s) {
            path.push(Step {
                matched: ss.matches[p.0],
                error: p.1.clone(),
            });
            s = p.clone();
        }
        path.reverse();
        path
    };

    let outside = |k: usize, e: &LogValue| -> Option<(LogValue, LogValue)> {
        let (l, _, u) = bounds[k].as_ref()?;
        (e < l || e > u).then(|| (l.clone(), u.clone()))
    };

    for k in 0..n {
        let s = (k, LogValue::zero());
        parent.insert(s.clone(), None);
        nodes += 1;
        record(k, &s.1, &mut observed, &mut max_abs);
        if let Some((lower, upper)) = outside(k, &s.1) {
            failure.get_or_insert(Failure {
                path: path_to(&parent, s.clone()),
                lower,
                upper,
            });
        }
        frontier.push((s, 1));
    }

    for _ in 0..radius {
        if failure.is_some() {
            break;
        }
        let mut next: BTreeMap<(usize, LogValue), u128> = BTreeMap::new();
        for ((k, e), mult) in &frontier {
            let choice = &ss.choices[*k];
            let strategy = match &bounds[*k] {
                Some((_, m, _)) => {
                    let low_half = e <= m;
                    if low_half == (convention == Convention::Example) {
                        &choice.positive
                    } else {
                        &choice.negative
                    }
                }
                None => &choice.positive,
            };
            for t in &strategy.terminals {
                let Some(j) = ss.position(&t.label) else {
                    continue;
                };
                let child_err = match (&t.error, &bounds[j]) {
                    (Some(err), Some(_)) => e.clone() + err.clone(),
                    _ => LogValue::zero(),
                };
                let s = (j, child_err);
                let c = next.entry(s.clone()).or_insert(0);
                *c = c.saturating_add(*mult);
                if !parent.contains_key(&s) {
                    parent.insert(s.clone(), Some((*k, e.clone())));
                    record(j, &s.1, &mut observed, &mut max_abs);
                    if failure.is_none() {
                        if let Some((lower, upper)) = outside(j, &s.1) {
                            failure = Some(Failure {
                                path: path_to(&parent, s.clone()),
                                lower,
                                upper,
                            });
                        }
                    }
                }
            }
        }
        frontier = next.into_iter().collect();
        for (_, m) in &frontier {
            nodes = nodes.saturating_add(*m);
        }
    }

    let ranges = (0..n)
        .map(|k| MatchRange {
            matched: ss.matches[k],
            bounded: ss.bounded[k],
            observed: observed[k].clone(),
            allowed: bounds[k].as_ref().map(|(l, _, u)| (l.clone(), u.clone())),
        })
        .collect();
    BallReport {
        radius,
        states: parent.len(),
        nodes_visited: nodes,
        ranges,
        max_abs_error: max_abs,
        failure,
    }
}
