use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use anyhow::{Context, Result};
use serde::Serialize;
use tubqi_core::psets::HeightKind;
use tubqi_core::{parse_graph, search, validate, Convention, Decision, SearchOptions, Severity, TubularGroup, Verdict};

use crate::certificate::{self, Certificate, GroupDto, Input, LogDto};
use crate::witness::{witness_ball, BallReport};

pub const EXIT_QI: i32 = 0;
pub const EXIT_NOT_QI: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

/// Everything a command wants to print, plus its exit status.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn input_error(msg: impl Into<String>) -> Self {
        Outcome {
            code: EXIT_INPUT,
            stdout: String::new(),
            stderr: msg.into(),
        }
    }
}

/// A parsed, validated and analyzed input file.
pub struct Loaded {
    pub name: String,
    pub text: String,
    pub group: TubularGroup,
}

impl Loaded {
    pub fn input(&self) -> Input<'_> {
        Input {
            name: &self.name,
            text: &self.text,
            group: &self.group,
        }
    }
}

/// Runs every front-end stage; `Err` carries the diagnostics to print.
pub fn load_text(name: &str, text: String) -> Result<Loaded, String> {
    let graph = parse_graph(&text).map_err(|e| format!("{name}: {e}"))?;
    let report = validate(&graph);
    let mut msg = String::new();
    for d in &report.diagnostics {
        if d.severity == Severity::Error {
            let _ = write!(msg, "{name}: {}[{}]: {}", d.severity, d.code, d.message);
            if let Some(loc) = &d.location {
                let _ = write!(msg, " at {loc}");
            }
            msg.push('\n');
        }
    }
    if !report.ok {
        return Err(msg);
    }
    let group = TubularGroup::analyze(&graph).map_err(|e| format!("{name}: {e}"))?;
    Ok(Loaded {
        name: name.to_string(),
        text,
        group,
    })
}

pub fn load_file(path: &Path) -> Result<Loaded, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    load_text(&name, text)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct DecideFlags {
    pub json: bool,
    pub max_candidates: Option<u64>,
    pub timeout: Option<Duration>,
    pub convention: Convention,
}

/// Decision plus its certificate, before any printing.
pub struct Decided {
    pub decision: Decision,
    pub certificate: Certificate,
}

pub fn decide_loaded(a: &Loaded, b: &Loaded, flags: &DecideFlags) -> Result<Decided> {
    let opts = SearchOptions {
        max_candidates: flags.max_candidates,
        timeout: flags.timeout,
        convention: flags.convention,
    };
    let decision = search(&a.group, &b.group, &opts);
    let cert = certificate::build(&a.input(), &b.input(), &decision, flags.convention);
    if decision.verdict.is_qi() {
        // reparse from the serialized form so the check sees exactly what is printed
        let json = to_json(&cert)?;
        let reread: Certificate = serde_json::from_str(&json)?;
        certificate::verify(&a.input(), &b.input(), &reread).context("emitted certificate failed re-verification")?;
    }
    Ok(Decided {
        decision,
        certificate: cert,
    })
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn decide(a: &Path, b: &Path, flags: &DecideFlags) -> Outcome {
    let (la, lb) = match (load_file(a), load_file(b)) {
        (Ok(x), Ok(y)) => (x, y),
        (ra, rb) => {
            let mut msg = String::new();
            for r in [ra.err(), rb.err()].into_iter().flatten() {
                msg.push_str(r.trim_end());
                msg.push('\n');
            }
            return Outcome::input_error(msg);
        }
    };
    decide_pair(&la, &lb, flags)
}

pub fn decide_pair(a: &Loaded, b: &Loaded, flags: &DecideFlags) -> Outcome {
    let decided = match decide_loaded(a, b, flags) {
        Ok(d) => d,
        Err(e) => {
            return Outcome {
                code: EXIT_INPUT,
                stdout: String::new(),
                stderr: format!("internal error: {e:#}\n"),
            }
        }
    };
    let code = decided.decision.verdict.exit_code();
    let stdout = if flags.json {
        match to_json(&decided.certificate) {
            Ok(s) => s,
            Err(e) => return Outcome::input_error(format!("serialization failed: {e}\n")),
        }
    } else {
        decide_text(&decided)
    };
    Outcome {
        code,
        stdout,
        stderr: String::new(),
    }
}

fn decide_text(d: &Decided) -> String {
    let c = &d.certificate;
    let mut out = String::new();
    let _ = writeln!(out, "{} vs {}: {}", c.inputs[0].name, c.inputs[1].name, c.verdict);
    if let Some(r) = &c.reason {
        let _ = writeln!(out, "  reason: {r}");
    }
    if let Verdict::QuasiIsometric(w) = &d.decision.verdict {
        let _ = writeln!(out, "  matches:");
        for (k, (m, b)) in w.strategies.matches.iter().zip(&w.strategies.bounded).enumerate() {
            let kind = if *b { "bounded" } else { "unbounded" };
            let _ = write!(out, "    {}. {m} {kind}", k + 1);
            if let Some(i) = w.system.matches.iter().position(|x| x == m) {
                use tubqi_core::feasibility::Var;
                let a = &w.assignment;
                let _ = write!(
                    out,
                    "  L={} M={} U={}",
                    a.get(Var::l(i)).render(),
                    a.get(Var::m(i)).render(),
                    a.get(Var::u(i)).render()
                );
            }
            out.push('\n');
        }
        let _ = writeln!(out, "  constraints: {}", w.system.constraints.len());
        for con in &w.system.constraints {
            let _ = writeln!(out, "    {con}");
        }
    }
    let s = &c.stats;
    let _ = writeln!(
        out,
        "  stats: compatible={} usable={} extensions={} strategies={} match-sets={} candidates={}",
        s.compatible_matches,
        s.usable_matches,
        s.extensions_enumerated,
        s.strategies_kept,
        s.match_sets_examined,
        s.candidates_examined
    );
    out
}

#[derive(Serialize)]
struct InspectDto {
    input: certificate::InputDto,
    vertices: Vec<String>,
    max_slope: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_slope_gain: Option<LogDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_slope_steps: Option<u64>,
    warnings: Vec<String>,
    #[serde(flatten)]
    group: GroupDto,
}

pub fn inspect(path: &Path, json: bool) -> Outcome {
    match load_file(path) {
        Ok(l) => inspect_loaded(&l, json),
        Err(e) => Outcome::input_error(e),
    }
}

pub fn inspect_loaded(l: &Loaded, json: bool) -> Outcome {
    let g = &l.group;
    let max = g.max_slope();
    let (gain, steps) = match &max {
        tubqi_core::MaxSlope::Value { gain, steps } => (Some(LogDto::of(gain)), Some(*steps)),
        tubqi_core::MaxSlope::Undefined => (None, None),
    };
    let dto = InspectDto {
        input: certificate::InputDto {
            name: l.name.clone(),
            sha256: certificate::digest(&l.text),
        },
        vertices: g.graph.vertices().to_vec(),
        max_slope: max.render(),
        max_slope_gain: gain,
        max_slope_steps: steps,
        warnings: g.warnings.clone(),
        group: certificate::group_dto(g),
    };
    if json {
        return match to_json(&dto) {
            Ok(s) => Outcome {
                code: 0,
                stdout: s,
                stderr: String::new(),
            },
            Err(e) => Outcome::input_error(format!("serialization failed: {e}\n")),
        };
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} ({} vertices, {} edges)",
        l.name,
        g.graph.vertices().len(),
        g.graph.edges().len()
    );
    let _ = writeln!(out, "patterns:");
    for p in &dto.group.patterns {
        let slopes: Vec<String> = p.slopes.iter().map(|s| format!("({},{})", s[0], s[1])).collect();
        let _ = write!(out, "  {}: {}", p.vertex, slopes.join(" "));
        if let Some(n) = p.symmetry_order {
            let _ = write!(out, "  symmetries={n}");
        }
        let [a, b, c] = &p.gram;
        let _ = writeln!(
            out,
            "  gram=[{}/{} {}/{}; {}/{} {}/{}]",
            a.num, a.den, b.num, b.den, b.num, b.den, c.num, c.den
        );
    }
    let _ = writeln!(out, "classes: {}", g.classes.len());
    for (c, dc) in g.classes.iter().zip(&dto.group.classes) {
        match &c.kind {
            HeightKind::Bounded { .. } => {
                let _ = writeln!(out, "  class {}: bounded, {} types", c.id, c.type_count());
            }
            HeightKind::Unbounded { cycle_height, .. } => {
                let _ = writeln!(
                    out,
                    "  class {}: unbounded (cycle height {}), {} types",
                    c.id,
                    cycle_height.render(),
                    c.type_count()
                );
            }
        }
        for t in &dc.types {
            let _ = write!(
                out,
                "    type {}: {} ({},{})",
                t.index, t.vertex, t.slope[0], t.slope[1]
            );
            if let Some(p) = &t.potential {
                let _ = write!(
                    out,
                    "  potential={} (half log2 of {}/{})",
                    p.decimal, p.half_log2_of.num, p.half_log2_of.den
                );
            }
            out.push('\n');
        }
    }
    let _ = writeln!(out, "max slope: {}", dto.max_slope);
    for w in &dto.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    Outcome {
        code: 0,
        stdout: out,
        stderr: String::new(),
    }
}

pub fn witness(a: &Path, b: &Path, cert_path: &Path, radius: usize) -> Outcome {
    let (la, lb) = match (load_file(a), load_file(b)) {
        (Ok(x), Ok(y)) => (x, y),
        (ra, rb) => {
            let msg: Vec<String> = [ra.err(), rb.err()].into_iter().flatten().collect();
            return Outcome::input_error(msg.join("\n"));
        }
    };
    let text = match std::fs::read_to_string(cert_path) {
        Ok(t) => t,
        Err(e) => return Outcome::input_error(format!("{}: {e}\n", cert_path.display())),
    };
    let cert: Certificate = match serde_json::from_str(&text) {
        Ok(c) => c,
        Err(e) => return Outcome::input_error(format!("{}: {e}\n", cert_path.display())),
    };
    witness_cert(&la, &lb, &cert, radius)
}

pub fn witness_cert(a: &Loaded, b: &Loaded, cert: &Certificate, radius: usize) -> Outcome {
    let v = match certificate::verify(&a.input(), &b.input(), cert) {
        Ok(v) => v,
        Err(e) => return Outcome::input_error(format!("certificate rejected: {e:#}\n")),
    };
    let report = witness_ball(&v.strategies, &v.system, &v.assignment, v.convention, radius);
    Outcome {
        code: if report.pass() { 0 } else { 1 },
        stdout: ball_text(&report),
        stderr: String::new(),
    }
}

pub fn ball_text(r: &BallReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "radius: {}", r.radius);
    let _ = writeln!(out, "states: {}", r.states);
    let _ = writeln!(out, "nodes visited: {}", r.nodes_visited);
    for m in &r.ranges {
        let _ = write!(out, "  {}", m.matched);
        match (&m.observed, &m.allowed) {
            (Some((lo, hi)), Some((l, u))) => {
                let _ = write!(
                    out,
                    " observed [{}, {}] within [{}, {}]",
                    lo.render(),
                    hi.render(),
                    l.render(),
                    u.render()
                );
            }
            _ => out.push_str(" unbounded"),
        }
        out.push('\n');
    }
    let _ = writeln!(out, "max |error|: {}", r.max_abs_error.render());
    match &r.failure {
        None => out.push_str("result: pass\n"),
        Some(f) => {
            let _ = writeln!(out, "result: FAIL, {f}");
        }
    }
    out
}
