//! JSON certificates: emission from a decision and re-verification from
//! nothing but the two input documents.

use std::collections::BTreeMap;
use std::sync::Arc;

use anyhow::{anyhow, bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tubqi_core::feasibility::{build_system, Var, VarKind};
use tubqi_core::psets::HeightKind;
use tubqi_core::{
    parse_rational, Assignment, Comparison, ConstraintSystem, Convention, Decision, Exhaustion, Extension, LogValue,
    Match, Prefilter, Provenance, Rational, ResourceLimit, Strategy, StrategyChoice, StrategySet, TubularGroup,
    TypeRef, Verdict,
};

pub const VERSION: &str = concat!("tubqi ", env!("CARGO_PKG_VERSION"));

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct RationalDto {
    pub num: String,
    pub den: String,
}

impl RationalDto {
    pub fn of(q: &Rational) -> Self {
        RationalDto {
            num: q.numer().to_string(),
            den: q.denom().to_string(),
        }
    }

    pub fn value(&self) -> Result<Rational> {
        parse_rational(&self.num, &self.den).ok_or_else(|| anyhow!("bad rational {}/{}", self.num, self.den))
    }
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct LogDto {
    pub half_log2_of: RationalDto,
    pub decimal: String,
}

impl LogDto {
    pub fn of(v: &LogValue) -> Self {
        LogDto {
            half_log2_of: RationalDto::of(v.q()),
            decimal: v.render(),
        }
    }

    pub fn value(&self) -> Result<LogValue> {
        LogValue::half_log2(self.half_log2_of.value()?).ok_or_else(|| anyhow!("non-positive log argument"))
    }
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct InputDto {
    pub name: String,
    pub sha256: String,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct TypeDto {
    pub index: usize,
    pub vertex: String,
    pub slope: [i64; 2],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub potential: Option<LogDto>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct ClassDto {
    pub id: usize,
    pub bounded: bool,
    pub types: Vec<TypeDto>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cycle_height: Option<LogDto>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct PatternDto {
    pub vertex: String,
    pub slopes: Vec<[i64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub symmetry_order: Option<usize>,
    pub gram: [RationalDto; 3],
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct GroupDto {
    pub patterns: Vec<PatternDto>,
    pub classes: Vec<ClassDto>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct ClassesDto {
    pub left: GroupDto,
    pub right: GroupDto,
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatchDto {
    pub left: usize,
    pub right: usize,
    pub bounded: bool,
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
pub struct TypeRefDto {
    pub class: usize,
    pub index: usize,
}

impl From<TypeRef> for TypeRefDto {
    fn from(t: TypeRef) -> Self {
        TypeRefDto {
            class: t.class,
            index: t.index,
        }
    }
}

impl From<TypeRefDto> for TypeRef {
    fn from(t: TypeRefDto) -> Self {
        TypeRef {
            class: t.class,
            index: t.index,
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct EntryDto {
    pub row: usize,
    pub col: usize,
    /// Integer matrix `[a, b, c, d]` of the witnessing projective map.
    pub witness: [String; 4],
    pub pairs: Vec<[TypeRefDto; 2]>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct TerminalDto {
    pub label: [usize; 2],
    pub entry: [usize; 2],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<LogDto>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct StrategyDto {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<EntryDto>,
    pub terminals: Vec<TerminalDto>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct ChoiceDto {
    #[serde(rename = "match")]
    pub match_index: usize,
    pub positive: StrategyDto,
    pub negative: StrategyDto,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct ConstraintDto {
    pub x: String,
    pub y: String,
    pub bound: LogDto,
    pub text: String,
    pub source: String,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct SystemDto {
    /// Matches (indices into `matches`) carrying an `L, M, U` triple.
    pub triples: Vec<usize>,
    pub constraints: Vec<ConstraintDto>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct ValueDto {
    pub var: String,
    pub value: LogDto,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct AssignmentDto {
    pub normalized: bool,
    pub values: Vec<ValueDto>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct StatsDto {
    pub compatible_matches: usize,
    pub usable_matches: usize,
    pub extensions_enumerated: u64,
    pub strategies_kept: u64,
    pub match_sets_examined: u64,
    pub candidates_examined: u64,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub version: String,
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
    pub convention: String,
    pub inputs: [InputDto; 2],
    pub classes: ClassesDto,
    #[serde(default)]
    pub matches: Vec<MatchDto>,
    #[serde(default)]
    pub strategies: Vec<ChoiceDto>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub system: Option<SystemDto>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub assignment: Option<AssignmentDto>,
    pub stats: StatsDto,
}

pub fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn convention_name(c: Convention) -> &'static str {
    match c {
        Convention::Example => "example",
        Convention::Prose => "prose",
    }
}

pub fn parse_convention(s: &str) -> Result<Convention> {
    match s {
        "example" => Ok(Convention::Example),
        "prose" => Ok(Convention::Prose),
        other => bail!("unknown convention `{other}`"),
    }
}

pub fn var_name(v: Var) -> String {
    v.to_string()
}

fn parse_var(s: &str) -> Result<Var> {
    if s == "0" {
        return Ok(Var::reference());
    }
    let (kind, rest) = s.split_at(1);
    let n: usize = rest.parse().with_context(|| format!("bad variable `{s}`"))?;
    ensure!(n >= 1, "bad variable `{s}`");
    let kind = match kind {
        "L" => VarKind::L,
        "M" => VarKind::M,
        "U" => VarKind::U,
        _ => bail!("bad variable `{s}`"),
    };
    Ok(Var { kind, index: n - 1 })
}

pub fn group_dto(g: &TubularGroup) -> GroupDto {
    let names = g.graph.vertices();
    let patterns = g
        .patterns
        .iter()
        .zip(&g.grams)
        .zip(&g.symmetries)
        .map(|((p, gram), sym)| PatternDto {
            vertex: names[p.vertex].clone(),
            slopes: p.slopes().iter().map(|s| pair(s.pair())).collect(),
            symmetry_order: sym.as_ref().map(Vec::len),
            gram: [
                RationalDto::of(&gram.g11),
                RationalDto::of(&gram.g12),
                RationalDto::of(&gram.g22),
            ],
        })
        .collect();
    let classes = g
        .classes
        .iter()
        .map(|c| ClassDto {
            id: c.id,
            bounded: c.is_bounded(),
            types: c
                .nodes
                .iter()
                .enumerate()
                .map(|(i, &n)| {
                    let node = &g.slope_graph.nodes[n];
                    TypeDto {
                        index: i,
                        vertex: names[node.vertex].clone(),
                        slope: pair(node.slope.pair()),
                        potential: c.potential(i).map(LogDto::of),
                    }
                })
                .collect(),
            cycle_height: match &c.kind {
                HeightKind::Unbounded { cycle_height, .. } => Some(LogDto::of(cycle_height)),
                HeightKind::Bounded { .. } => None,
            },
        })
        .collect();
    GroupDto { patterns, classes }
}

fn pair(p: (i64, i64)) -> [i64; 2] {
    [p.0, p.1]
}

fn strategy_dto(s: &Strategy) -> StrategyDto {
    StrategyDto {
        rows: s.extension.rows,
        cols: s.extension.cols,
        entries: s
            .extension
            .nonzero()
            .map(|(i, j, b)| EntryDto {
                row: i,
                col: j,
                witness: b.witness.entries().clone().map(|x| x.to_string()),
                pairs: b.pairs.iter().map(|&(l, r)| [l.into(), r.into()]).collect(),
            })
            .collect(),
        terminals: s
            .terminals
            .iter()
            .map(|t| TerminalDto {
                label: [t.label.left, t.label.right],
                entry: [t.entry.0, t.entry.1],
                error: t.error.as_ref().map(LogDto::of),
            })
            .collect(),
    }
}

fn provenance_text(p: &Provenance, sys: &ConstraintSystem) -> String {
    match p {
        Provenance::Ordering { match_index } => format!("ordering of match {}", match_index + 1),
        Provenance::Terminal {
            match_index,
            sign,
            terminal,
            label_index,
            error,
        } => format!(
            "{sign} strategy of match {} ({}), terminal {} labeled match {} with error {}",
            match_index + 1,
            sys.matches[*match_index],
            terminal,
            label_index + 1,
            error
        ),
        Provenance::Pin { var, value } => format!("pin {var} = {value}"),
        Provenance::Given(s) => s.clone(),
    }
}

pub fn system_dto(sys: &ConstraintSystem, matches: &[Match]) -> SystemDto {
    SystemDto {
        triples: sys
            .matches
            .iter()
            .map(|m| matches.iter().position(|x| x == m).expect("system match is in the set"))
            .collect(),
        constraints: sys
            .constraints
            .iter()
            .map(|c| ConstraintDto {
                x: var_name(c.x),
                y: var_name(c.y),
                bound: LogDto::of(&c.bound),
                text: c.to_string(),
                source: provenance_text(&c.provenance, sys),
            })
            .collect(),
    }
}

pub fn assignment_dto(a: &Assignment, sys: &ConstraintSystem) -> AssignmentDto {
    let mut values = Vec::new();
    for i in 0..sys.matches.len() {
        for v in [Var::l(i), Var::m(i), Var::u(i)] {
            values.push(ValueDto {
                var: var_name(v),
                value: LogDto::of(&a.get(v)),
            });
        }
    }
    AssignmentDto {
        normalized: a.normalized,
        values,
    }
}

pub fn reason_text(v: &Verdict) -> Option<String> {
    match v {
        Verdict::QuasiIsometric(_) => None,
        Verdict::NotQuasiIsometric(e) => Some(match e {
            Exhaustion::Prefilter(Prefilter::PatternClasses(s)) => format!("pattern pre-filter: {s}"),
            Exhaustion::Prefilter(Prefilter::Boundedness(s)) => format!("boundedness pre-filter: {s}"),
            Exhaustion::NoCoveringMatches => "no covering set of matches admits strategies".to_string(),
            Exhaustion::Exhausted => "every candidate set of strategies is inconsistent".to_string(),
        }),
        Verdict::Inconclusive(ResourceLimit::Candidates(n)) => Some(format!("candidate limit {n} reached")),
        Verdict::Inconclusive(ResourceLimit::Timeout(t)) => Some(format!("timeout after {:?}", t)),
    }
}

pub fn verdict_name(v: &Verdict) -> &'static str {
    match v {
        Verdict::QuasiIsometric(_) => "quasi-isometric",
        Verdict::NotQuasiIsometric(_) => "not-quasi-isometric",
        Verdict::Inconclusive(_) => "inconclusive",
    }
}

/// One analyzed input together with its source.
pub struct Input<'a> {
    pub name: &'a str,
    pub text: &'a str,
    pub group: &'a TubularGroup,
}

pub fn build(left: &Input<'_>, right: &Input<'_>, decision: &Decision, convention: Convention) -> Certificate {
    let s = &decision.stats;
    let mut cert = Certificate {
        version: VERSION.to_string(),
        verdict: verdict_name(&decision.verdict).to_string(),
        reason: reason_text(&decision.verdict),
        convention: convention_name(convention).to_string(),
        inputs: [
            InputDto {
                name: left.name.to_string(),
                sha256: digest(left.text),
            },
            InputDto {
                name: right.name.to_string(),
                sha256: digest(right.text),
            },
        ],
        classes: ClassesDto {
            left: group_dto(left.group),
            right: group_dto(right.group),
        },
        matches: Vec::new(),
        strategies: Vec::new(),
        system: None,
        assignment: None,
        stats: StatsDto {
            compatible_matches: s.compatible_matches,
            usable_matches: s.usable_matches,
            extensions_enumerated: s.extensions_enumerated,
            strategies_kept: s.strategies_kept,
            match_sets_examined: s.match_sets_examined,
            candidates_examined: s.candidates_examined,
        },
    };
    if let Verdict::QuasiIsometric(w) = &decision.verdict {
        let ss = &w.strategies;
        cert.matches = ss
            .matches
            .iter()
            .zip(&ss.bounded)
            .map(|(m, &b)| MatchDto {
                left: m.left,
                right: m.right,
                bounded: b,
            })
            .collect();
        cert.strategies = ss
            .choices
            .iter()
            .enumerate()
            .map(|(k, c)| ChoiceDto {
                match_index: k,
                positive: strategy_dto(&c.positive),
                negative: strategy_dto(&c.negative),
            })
            .collect();
        cert.system = Some(system_dto(&w.system, &ss.matches));
        cert.assignment = Some(assignment_dto(&w.assignment, &w.system));
    }
    cert
}

/// A certificate that re-verified, rebuilt in engine types.
#[derive(Clone, Debug)]
pub struct Verified {
    pub strategies: StrategySet,
    pub system: ConstraintSystem,
    pub assignment: Assignment,
    pub convention: Convention,
}

fn rebuild_strategy(cmp: &Comparison<'_>, m: Match, dto: &StrategyDto) -> Result<Strategy> {
    let rows = cmp.left.classes[m.left].type_count();
    let cols = cmp.right.classes[m.right].type_count();
    ensure!(
        dto.rows == rows && dto.cols == cols,
        "extension of {m} has the wrong shape"
    );
    let mut entries = vec![None; rows * cols];
    for e in &dto.entries {
        ensure!(e.row < rows && e.col < cols, "entry out of range in extension of {m}");
        ensure!(
            entries[e.row * cols + e.col].is_none(),
            "repeated entry in extension of {m}"
        );
        let pairs: Vec<(TypeRef, TypeRef)> = e.pairs.iter().map(|[l, r]| ((*l).into(), (*r).into())).collect();
        let found = cmp
            .entry_bijections(m, e.row, e.col)
            .into_iter()
            .find(|b| b.pairs == pairs)
            .ok_or_else(|| anyhow!("entry ({}, {}) of {m} is not an induced bijection", e.row, e.col))?;
        let witness = found.witness.entries().clone().map(|x| x.to_string());
        ensure!(
            witness == e.witness,
            "entry ({}, {}) of {m} has a different witness map",
            e.row,
            e.col
        );
        entries[e.row * cols + e.col] = Some(Arc::new(found));
    }
    let ext = Extension {
        root: m,
        rows,
        cols,
        entries,
    };
    ensure!(ext.covers(), "extension of {m} misses a row or column");
    let s = cmp.build_strategy(m, &ext);
    ensure!(
        s.terminals.len() == dto.terminals.len(),
        "terminal count differs for {m}"
    );
    for (t, d) in s.terminals.iter().zip(&dto.terminals) {
        ensure!(
            [t.label.left, t.label.right] == d.label && [t.entry.0, t.entry.1] == d.entry,
            "terminal of {m} differs"
        );
        let claimed = d.error.as_ref().map(LogDto::value).transpose()?;
        ensure!(claimed == t.error, "terminal error of {m} differs");
    }
    Ok(s)
}

/// Re-derives everything in `cert` from the two documents and checks it.
pub fn verify(left: &Input<'_>, right: &Input<'_>, cert: &Certificate) -> Result<Verified> {
    ensure!(
        cert.verdict == "quasi-isometric",
        "certificate does not claim quasi-isometry"
    );
    ensure!(
        cert.inputs[0].sha256 == digest(left.text),
        "first input digest mismatch"
    );
    ensure!(
        cert.inputs[1].sha256 == digest(right.text),
        "second input digest mismatch"
    );
    let convention = parse_convention(&cert.convention)?;
    let cmp = Comparison::new(left.group, right.group);
    let (nl, nr) = (left.group.classes.len(), right.group.classes.len());

    let mut matches = Vec::new();
    let mut bounded = Vec::new();
    for m in &cert.matches {
        ensure!(
            m.left < nl && m.right < nr,
            "match ({}, {}) out of range",
            m.left,
            m.right
        );
        let mm = Match::new(m.left, m.right);
        ensure!(cmp.is_compatible(mm), "match {mm} mixes bounded and unbounded classes");
        ensure!(
            m.bounded == left.group.classes[m.left].is_bounded(),
            "boundedness flag of {mm} is wrong"
        );
        matches.push(mm);
        bounded.push(m.bounded);
    }
    ensure!(
        matches.windows(2).all(|w| w[0] < w[1]),
        "matches are not sorted and distinct"
    );
    ensure!(
        cert.strategies.len() == matches.len(),
        "one strategy pair per match expected"
    );

    let mut choices = Vec::new();
    for (k, c) in cert.strategies.iter().enumerate() {
        ensure!(c.match_index == k, "strategies out of order");
        let m = matches[k];
        let positive = rebuild_strategy(&cmp, m, &c.positive)?;
        let negative = rebuild_strategy(&cmp, m, &c.negative)?;
        if !bounded[k] {
            ensure!(positive == negative, "unbounded match {m} must use one strategy");
        }
        choices.push(StrategyChoice {
            positive: Arc::new(positive),
            negative: Arc::new(negative),
        });
    }
    let ss = StrategySet {
        matches,
        bounded,
        choices,
    };
    ensure!(ss.is_closed(), "strategy set is not closed");
    ensure!(ss.is_covering(nl, nr), "strategy set does not cover every class");

    let system = build_system(&ss, convention);
    let sys_dto = cert
        .system
        .as_ref()
        .ok_or_else(|| anyhow!("certificate has no system"))?;
    let expected = system_dto(&system, &ss.matches);
    ensure!(sys_dto.triples == expected.triples, "system variables differ");
    ensure!(
        sys_dto.constraints.len() == expected.constraints.len(),
        "system has {} constraints, expected {}",
        sys_dto.constraints.len(),
        expected.constraints.len()
    );
    for (a, b) in sys_dto.constraints.iter().zip(&expected.constraints) {
        ensure!(
            parse_var(&a.x)? == parse_var(&b.x)?
                && parse_var(&a.y)? == parse_var(&b.y)?
                && a.bound.value()? == b.bound.value()?,
            "constraint `{}` differs from rebuilt `{}`",
            a.text,
            b.text
        );
    }

    let a_dto = cert
        .assignment
        .as_ref()
        .ok_or_else(|| anyhow!("certificate has no assignment"))?;
    let mut by_var: BTreeMap<Var, LogValue> = BTreeMap::new();
    for v in &a_dto.values {
        by_var.insert(parse_var(&v.var)?, v.value.value()?);
    }
    let mut values = Vec::with_capacity(system.var_count());
    for i in 0..system.matches.len() {
        for v in [Var::l(i), Var::m(i), Var::u(i)] {
            values.push(by_var.remove(&v).ok_or_else(|| anyhow!("assignment lacks {v}"))?);
        }
    }
    ensure!(by_var.is_empty(), "assignment has extra variables");
    let assignment = Assignment {
        values,
        normalized: a_dto.normalized,
    };
    if let Some(k) = assignment.first_violation(&system) {
        bail!("assignment violates `{}`", system.constraints[k]);
    }
    Ok(Verified {
        strategies: ss,
        system,
        assignment,
        convention,
    })
}
