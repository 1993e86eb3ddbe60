//! The consistency system: difference constraints over the error bounds
//! `L_i ≤ M_i ≤ U_i` of every bounded match, solved exactly.
//!
//! A constraint `x − y ≤ c` is an arc `y → x` of weight `c`; the system is
//! feasible iff that graph has no negative cycle, and shortest-path
//! potentials from a virtual source are then a solution.

use std::fmt;

use crate::number::LogValue;
use crate::strategies::{Match, StrategyChoice, StrategySet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKind {
    L,
    M,
    U,
    /// The fixed zero used when pinning variables to values.
    Reference,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub kind: VarKind,
    /// Index of the bounded match in `ConstraintSystem::matches`.
    pub index: usize,
}

impl Var {
    pub fn l(index: usize) -> Self {
        Var {
            kind: VarKind::L,
            index,
        }
    }
    pub fn m(index: usize) -> Self {
        Var {
            kind: VarKind::M,
            index,
        }
    }
    pub fn u(index: usize) -> Self {
        Var {
            kind: VarKind::U,
            index,
        }
    }
    pub fn reference() -> Self {
        Var {
            kind: VarKind::Reference,
            index: 0,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            VarKind::L => write!(f, "L{}", self.index + 1),
            VarKind::M => write!(f, "M{}", self.index + 1),
            VarKind::U => write!(f, "U{}", self.index + 1),
            VarKind::Reference => f.write_str("0"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Positive,
    Negative,
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Positive => "positive",
            Sign::Negative => "negative",
        })
    }
}

/// Which strategy sign gets which pair of inequalities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Convention {
    /// positive: `L_i + E ≥ L_j`, `M_i + E ≤ U_j`;
    /// negative: `U_i + E ≤ U_j`, `M_i + E ≥ L_j`.
    #[default]
    Example,
    /// positive: `M_i + E ≥ L_j`, `U_i + E ≤ U_j`;
    /// negative: `M_i + E ≤ U_j`, `L_i + E ≥ L_j`.
    Prose,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// `L_i ≤ M_i` or `M_i ≤ U_i`.
    Ordering { match_index: usize },
    /// Generated by a defined-error terminal of a strategy.
    Terminal {
        match_index: usize,
        sign: Sign,
        terminal: usize,
        label_index: usize,
        error: LogValue,
    },
    /// Equality pin `var = value`, one of its two halves.
    Pin { var: Var, value: LogValue },
    /// Entered by hand.
    Given(String),
}

/// `x − y ≤ bound`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub x: Var,
    pub y: Var,
    pub bound: LogValue,
    pub provenance: Provenance,
}

impl Constraint {
    pub fn holds(&self, value: impl Fn(Var) -> LogValue) -> bool {
        &value(self.x) - &value(self.y) <= self.bound
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} - {} <= {}", self.x, self.y, self.bound)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ConstraintSystem {
    /// Bounded matches, one `(L, M, U)` triple each.
    pub matches: Vec<Match>,
    pub constraints: Vec<Constraint>,
}

impl ConstraintSystem {
    /// A system over `n` triples that already contains `L_i ≤ M_i ≤ U_i`.
    pub fn with_triples(matches: Vec<Match>) -> Self {
        let mut sys = ConstraintSystem {
            matches,
            constraints: Vec::new(),
        };
        for i in 0..sys.matches.len() {
            sys.push(
                Var::l(i),
                Var::m(i),
                LogValue::zero(),
                Provenance::Ordering { match_index: i },
            );
            sys.push(
                Var::m(i),
                Var::u(i),
                LogValue::zero(),
                Provenance::Ordering { match_index: i },
            );
        }
        sys
    }

    pub fn var_count(&self) -> usize {
        3 * self.matches.len()
    }

    /// Adds `x − y ≤ bound` unless an identical inequality is present.
    pub fn push(&mut self, x: Var, y: Var, bound: LogValue, provenance: Provenance) {
        if self
            .constraints
            .iter()
            .any(|c| c.x == x && c.y == y && c.bound == bound)
        {
            return;
        }
        self.constraints.push(Constraint {
            x,
            y,
            bound,
            provenance,
        });
    }

    /// `lhs + offset ≥ rhs`.
    pub fn push_ge(&mut self, lhs: Var, offset: LogValue, rhs: Var, provenance: Provenance) {
        self.push(rhs, lhs, offset, provenance);
    }

    /// `lhs + offset ≤ rhs`.
    pub fn push_le(&mut self, lhs: Var, offset: LogValue, rhs: Var, provenance: Provenance) {
        self.push(lhs, rhs, -offset, provenance);
    }

    fn node(&self, v: Var) -> usize {
        match v.kind {
            VarKind::L => 3 * v.index,
            VarKind::M => 3 * v.index + 1,
            VarKind::U => 3 * v.index + 2,
            VarKind::Reference => self.var_count(),
        }
    }
}

/// Appends the inequalities for the defined terminals of one match's
/// strategies. `i` indexes `sys.matches`; labels outside the system are
/// skipped.
pub fn add_match_constraints(sys: &mut ConstraintSystem, i: usize, choice: &StrategyChoice, convention: Convention) {
    for (sign, strategy) in [(Sign::Positive, &choice.positive), (Sign::Negative, &choice.negative)] {
        for (t, term) in strategy.terminals.iter().enumerate() {
            let Some(e) = &term.error else { continue };
            let Some(j) = sys.matches.iter().position(|x| *x == term.label) else {
                continue;
            };
            let prov = Provenance::Terminal {
                match_index: i,
                sign,
                terminal: t,
                label_index: j,
                error: e.clone(),
            };
            let lower_rule = matches!(
                (sign, convention),
                (Sign::Positive, Convention::Example) | (Sign::Negative, Convention::Prose)
            );
            if lower_rule {
                // L_i + E ≥ L_j ; M_i + E ≤ U_j
                sys.push_ge(Var::l(i), e.clone(), Var::l(j), prov.clone());
                sys.push_le(Var::m(i), e.clone(), Var::u(j), prov);
            } else {
                // U_i + E ≤ U_j ; M_i + E ≥ L_j
                sys.push_le(Var::u(i), e.clone(), Var::u(j), prov.clone());
                sys.push_ge(Var::m(i), e.clone(), Var::l(j), prov);
            }
        }
    }
}

/// Appends the inequalities for every defined terminal of `ss`.
pub fn add_strategy_constraints(sys: &mut ConstraintSystem, ss: &StrategySet, convention: Convention) {
    for (m, choice) in ss.matches.iter().zip(&ss.choices) {
        if let Some(i) = sys.matches.iter().position(|x| x == m) {
            add_match_constraints(sys, i, choice, convention);
        }
    }
}

/// The full consistency system of a closed, covering strategy set.
pub fn build_system(ss: &StrategySet, convention: Convention) -> ConstraintSystem {
    let bounded: Vec<Match> = ss
        .matches
        .iter()
        .zip(&ss.bounded)
        .filter(|(_, b)| **b)
        .map(|(m, _)| *m)
        .collect();
    let mut sys = ConstraintSystem::with_triples(bounded);
    add_strategy_constraints(&mut sys, ss, convention);
    sys
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    /// `L, M, U` per bounded match, flattened.
    pub values: Vec<LogValue>,
    /// Whether the `M_i = 0`, `L_i < 0 < U_i` normalization was achieved.
    pub normalized: bool,
}

impl Assignment {
    pub fn get(&self, v: Var) -> LogValue {
        match v.kind {
            VarKind::L => self.values[3 * v.index].clone(),
            VarKind::M => self.values[3 * v.index + 1].clone(),
            VarKind::U => self.values[3 * v.index + 2].clone(),
            VarKind::Reference => LogValue::zero(),
        }
    }

    pub fn set(&mut self, v: Var, value: LogValue) {
        let k = match v.kind {
            VarKind::L => 3 * v.index,
            VarKind::M => 3 * v.index + 1,
            VarKind::U => 3 * v.index + 2,
            VarKind::Reference => return,
        };
        self.values[k] = value;
    }

    /// Index of the first violated constraint, if any.
    pub fn first_violation(&self, sys: &ConstraintSystem) -> Option<usize> {
        if self.values.len() != sys.var_count() {
            return Some(0);
        }
        sys.constraints.iter().position(|c| !c.holds(|v| self.get(v)))
    }

    pub fn satisfies(&self, sys: &ConstraintSystem) -> bool {
        self.first_violation(sys).is_none()
    }
}

/// A cycle of constraints whose bounds sum to a negative value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NegativeCycle {
    pub constraints: Vec<Constraint>,
    pub total: LogValue,
}

impl NegativeCycle {
    /// Replays the cycle: consecutive constraints chain, the cycle closes
    /// and the bounds add up to `total < 0`.
    pub fn certifies_infeasibility(&self) -> bool {
        let n = self.constraints.len();
        if n == 0 {
            return false;
        }
        let chained = (0..n).all(|k| self.constraints[k].x == self.constraints[(k + 1) % n].y);
        let total: LogValue = self.constraints.iter().map(|c| &c.bound).sum();
        chained && total == self.total && total < LogValue::zero()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Solution {
    Feasible(Assignment),
    Infeasible(NegativeCycle),
}

impl Solution {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Solution::Feasible(_))
    }
}

enum Raw {
    Potentials(Vec<LogValue>),
    Cycle(NegativeCycle),
}

/// Bellman-Ford from a virtual source joined to every node by a 0 arc.
fn bellman_ford(sys: &ConstraintSystem, extra: &[Constraint]) -> Raw {
    let n = sys.var_count() + 1;
    let all: Vec<&Constraint> = sys.constraints.iter().chain(extra).collect();
    let arcs: Vec<(usize, usize, &LogValue)> = all.iter().map(|c| (sys.node(c.y), sys.node(c.x), &c.bound)).collect();
    let mut dist = vec![LogValue::zero(); n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut last_relaxed = None;
    for _round in 0..n {
        last_relaxed = None;
        for (k, &(from, to, w)) in arcs.iter().enumerate() {
            let cand = &dist[from] + w;
            if cand < dist[to] {
                dist[to] = cand;
                pred[to] = Some(k);
                last_relaxed = Some(to);
            }
        }
        if last_relaxed.is_none() {
            return Raw::Potentials(dist);
        }
    }
    // Still relaxing after n rounds: walk predecessors into the cycle.
    let mut v = last_relaxed.expect("relaxed in final round");
    for _ in 0..n {
        v = arcs[pred[v].expect("relaxed node has a predecessor")].0;
    }
    let start = v;
    let mut cycle = Vec::new();
    loop {
        let k = pred[v].unwrap();
        cycle.push(all[k].clone());
        v = arcs[k].0;
        if v == start {
            break;
        }
    }
    cycle.reverse();
    let total = cycle.iter().map(|c| &c.bound).sum();
    Raw::Cycle(NegativeCycle {
        constraints: cycle,
        total,
    })
}

fn pins(values: &[(Var, LogValue)]) -> Vec<Constraint> {
    let r = Var::reference();
    values
        .iter()
        .flat_map(|(v, val)| {
            let prov = Provenance::Pin {
                var: *v,
                value: val.clone(),
            };
            [
                Constraint {
                    x: *v,
                    y: r,
                    bound: val.clone(),
                    provenance: prov.clone(),
                },
                Constraint {
                    x: r,
                    y: *v,
                    bound: -val.clone(),
                    provenance: prov,
                },
            ]
        })
        .collect()
}

/// Feasibility with some variables fixed to given values.
pub fn solve_pinned(sys: &ConstraintSystem, pinned: &[(Var, LogValue)]) -> Solution {
    match bellman_ford(sys, &pins(pinned)) {
        Raw::Cycle(c) => Solution::Infeasible(c),
        Raw::Potentials(dist) => {
            let zero = dist[sys.var_count()].clone();
            Solution::Feasible(Assignment {
                values: dist[..sys.var_count()].iter().map(|d| d - &zero).collect(),
                normalized: false,
            })
        }
    }
}

/// Feasibility check only, no normalization.
pub fn is_feasible(sys: &ConstraintSystem) -> bool {
    matches!(bellman_ford(sys, &[]), Raw::Potentials(_))
}

/// Solves the system; a feasible answer is normalized to `M_i = 0`,
/// `L_i < 0 < U_i` when that normalization checks out.
pub fn solve(sys: &ConstraintSystem) -> Solution {
    let raw = match bellman_ford(sys, &[]) {
        Raw::Cycle(c) => return Solution::Infeasible(c),
        Raw::Potentials(dist) => {
            let zero = &dist[sys.var_count()];
            Assignment {
                values: dist[..sys.var_count()].iter().map(|d| d - zero).collect(),
                normalized: false,
            }
        }
    };
    let k = sys.matches.len();
    let m_pins: Vec<(Var, LogValue)> = (0..k).map(|i| (Var::m(i), LogValue::zero())).collect();
    if let Solution::Feasible(mut a) = solve_pinned(sys, &m_pins) {
        // U only ever appears as an upper end against U or as the larger side
        // against L/M, so raising every U (and lowering every L) keeps
        // feasibility; the result is re-checked regardless.
        let unit = LogValue::two_pow_halves(1);
        if let Some(min_u) = (0..k).map(|i| a.get(Var::u(i))).min() {
            if min_u <= LogValue::zero() {
                let shift = &unit - &min_u;
                for i in 0..k {
                    a.set(Var::u(i), &a.get(Var::u(i)) + &shift);
                }
            }
        }
        if let Some(max_l) = (0..k).map(|i| a.get(Var::l(i))).max() {
            if max_l >= LogValue::zero() {
                let shift = &unit + &max_l;
                for i in 0..k {
                    a.set(Var::l(i), &a.get(Var::l(i)) - &shift);
                }
            }
        }
        let strict = (0..k).all(|i| {
            a.get(Var::u(i)) > LogValue::zero() && a.get(Var::l(i)) < LogValue::zero() && a.get(Var::m(i)).is_zero()
        });
        if strict && a.satisfies(sys) {
            a.normalized = true;
            return Solution::Feasible(a);
        }
    }
    debug_assert!(raw.satisfies(sys));
    Solution::Feasible(raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn given() -> Provenance {
        Provenance::Given("test".into())
    }

    fn dummy(n: usize) -> Vec<Match> {
        (0..n).map(|i| Match { left: i, right: i }).collect()
    }

    #[test]
    fn empty_system_is_feasible() {
        let sys = ConstraintSystem::default();
        match solve(&sys) {
            Solution::Feasible(a) => assert!(a.values.is_empty()),
            _ => panic!("empty system must be feasible"),
        }
    }

    #[test]
    fn zero_errors_give_zero_solution() {
        let mut sys = ConstraintSystem::with_triples(dummy(2));
        sys.push_ge(Var::l(0), LogValue::zero(), Var::l(1), given());
        sys.push_le(Var::m(0), LogValue::zero(), Var::u(1), given());
        sys.push_le(Var::u(1), LogValue::zero(), Var::u(0), given());
        sys.push_ge(Var::m(1), LogValue::zero(), Var::l(0), given());
        let Solution::Feasible(a) = solve(&sys) else {
            panic!("feasible")
        };
        assert!(a.satisfies(&sys));
        assert!(a.normalized);
        // L_i = M_i = U_i = 0 also satisfies it
        let zero = Assignment {
            values: vec![LogValue::zero(); 6],
            normalized: false,
        };
        assert!(zero.satisfies(&sys));
    }

    #[test]
    fn self_loop_is_a_negative_cycle() {
        let mut sys = ConstraintSystem::with_triples(dummy(1));
        // L1 - L1 <= -1
        sys.push(Var::l(0), Var::l(0), LogValue::integer(-1), given());
        let Solution::Infeasible(c) = solve(&sys) else {
            panic!("infeasible")
        };
        assert_eq!(c.constraints.len(), 1);
        assert_eq!(c.total, LogValue::integer(-1));
        assert!(c.certifies_infeasibility());
    }

    #[test]
    fn pinned_solutions() {
        let mut sys = ConstraintSystem::with_triples(dummy(1));
        sys.push(Var::u(0), Var::l(0), LogValue::integer(3), given());
        let Solution::Feasible(a) = solve_pinned(&sys, &[(Var::l(0), LogValue::integer(-1))]) else {
            panic!()
        };
        assert_eq!(a.get(Var::l(0)), LogValue::integer(-1));
        assert!(a.satisfies(&sys));
        let bad = solve_pinned(
            &sys,
            &[(Var::l(0), LogValue::integer(-2)), (Var::u(0), LogValue::integer(2))],
        );
        let Solution::Infeasible(c) = bad else { panic!() };
        assert!(c.certifies_infeasibility());
    }

    #[test]
    fn normalization_is_verified() {
        let mut sys = ConstraintSystem::with_triples(dummy(2));
        sys.push_le(Var::u(0), LogValue::integer(1), Var::u(1), given());
        sys.push_ge(Var::m(1), LogValue::integer(-1), Var::l(0), given());
        let Solution::Feasible(a) = solve(&sys) else { panic!() };
        assert!(a.normalized);
        for i in 0..2 {
            assert!(a.get(Var::m(i)).is_zero());
            assert!(a.get(Var::u(i)) > LogValue::zero());
            assert!(a.get(Var::l(i)) < LogValue::zero());
        }
        assert!(a.satisfies(&sys));
    }
}
