use std::collections::BTreeMap;

use proptest::prelude::*;
use tubqi_core::number::rational;
use tubqi_core::{parse_graph, search, Comparison, GraphOfGroups, LogValue, Match, SearchOptions, TubularGroup};

const CORPUS: [&str; 10] = [
    include_str!("../../../corpus/wise.tub"),
    include_str!("../../../corpus/w2.tub"),
    include_str!("../../../corpus/w3.tub"),
    include_str!("../../../corpus/u.tub"),
    include_str!("../../../corpus/flat.tub"),
    include_str!("../../../corpus/raag_a.tub"),
    include_str!("../../../corpus/raag_b.tub"),
    include_str!("../../../corpus/raag_unbounded.tub"),
    include_str!("../../../corpus/one_torus_3_1.tub"),
    include_str!("../../../corpus/two_torus_3_1.tub"),
];

/// Two 3-line vertices where one class lives entirely at `q`, so its
/// potential base sits at a different vertex than its neighbours'.
const SPLIT_BASES: &str = "vertex p
vertex q
edge a : p (1,0) -> q (1,0)
edge b : p (0,1) -> p (1,1)
edge c : q (0,1) -> q (1,1)
";

fn analyze(g: &GraphOfGroups) -> TubularGroup {
    TubularGroup::analyze(g).unwrap()
}

fn code(a: &TubularGroup, b: &TubularGroup) -> i32 {
    search(a, b, &SearchOptions::default()).verdict.exit_code()
}

fn basis() -> impl Strategy<Value = [i64; 4]> {
    let gens = [[1, 1, 0, 1], [1, 0, 1, 1], [0, 1, 1, 0], [-1, 0, 0, 1], [1, -1, 0, 1]];
    proptest::collection::vec(0usize..5, 1..5).prop_map(move |ops| {
        ops.iter().fold([1, 0, 0, 1], |m, &k| {
            let g = gens[k];
            [
                m[0] * g[0] + m[1] * g[2],
                m[0] * g[1] + m[1] * g[3],
                m[2] * g[0] + m[3] * g[2],
                m[2] * g[1] + m[3] * g[3],
            ]
        })
    })
}

type ErrorTable = Vec<(Match, Match, Vec<Option<LogValue>>)>;

/// Errors of every minimal strategy, grouped by `(root, label)`.
fn errors(cmp: &Comparison<'_>) -> BTreeMap<(Match, Match), Vec<Option<LogValue>>> {
    let mut out: BTreeMap<(Match, Match), Vec<Option<LogValue>>> = BTreeMap::new();
    for m in cmp.compatible_matches() {
        for ext in cmp.minimal_extensions(m) {
            for t in cmp.build_strategy(m, &ext).terminals {
                out.entry((m, t.label)).or_default().push(t.error);
            }
        }
    }
    out
}

fn flatten(e: &BTreeMap<(Match, Match), Vec<Option<LogValue>>>) -> ErrorTable {
    e.iter().map(|((a, b), v)| (*a, *b, v.clone())).collect()
}

/// Errors after a rescale differ from the originals by a shift that only
/// depends on `(root, label)` and composes like a potential difference.
fn gauge_shift(
    before: &BTreeMap<(Match, Match), Vec<Option<LogValue>>>,
    after: &BTreeMap<(Match, Match), Vec<Option<LogValue>>>,
) -> Result<BTreeMap<(Match, Match), LogValue>, String> {
    let mut shift = BTreeMap::new();
    for (key, xs) in before {
        let ys = &after[key];
        if xs.len() != ys.len() {
            return Err(format!("terminal count changed for {key:?}"));
        }
        for (x, y) in xs.iter().zip(ys) {
            match (x, y) {
                (None, None) => {}
                (Some(x), Some(y)) => {
                    let d = y.clone() - x.clone();
                    if let Some(prev) = shift.insert(*key, d.clone()) {
                        if prev != d {
                            return Err(format!("shift for {key:?} is not constant"));
                        }
                    }
                }
                _ => return Err(format!("definedness changed for {key:?}")),
            }
        }
    }
    for ((a, b), d) in &shift {
        if a == b && !d.is_zero() {
            return Err(format!("self-label shift {d} for {a}"));
        }
        for ((c, e), d2) in &shift {
            if b == c {
                if let Some(d3) = shift.get(&(*a, *e)) {
                    if d.clone() + d2.clone() != *d3 {
                        return Err(format!("shifts {a}->{b}->{e} do not compose"));
                    }
                }
            }
        }
    }
    Ok(shift)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn verdicts_survive_basis_change(i in 0usize..10, j in 0usize..10, b in basis(), which in 0usize..2) {
        let ga = parse_graph(CORPUS[i]).unwrap();
        let gb = parse_graph(CORPUS[j]).unwrap();
        let v = which % ga.vertices().len();
        let (a, b2) = (analyze(&ga), analyze(&gb));
        let changed = analyze(&ga.change_basis(v, b));
        prop_assert_eq!(code(&a, &b2), code(&changed, &b2));
        prop_assert_eq!(code(&changed, &a), 0);
    }

    #[test]
    fn verdicts_survive_reordering(i in 0usize..10, j in 0usize..10, seed in any::<u64>()) {
        let ga = parse_graph(CORPUS[i]).unwrap();
        let nv = ga.vertices().len();
        let ne = ga.edges().len();
        let mut vo: Vec<usize> = (0..nv).collect();
        let mut eo: Vec<usize> = (0..ne).collect();
        vo.rotate_left(seed as usize % nv);
        eo.rotate_left((seed >> 8) as usize % ne);
        if seed & 1 == 1 {
            eo.reverse();
        }
        let re = parse_graph(&ga.reordered(&vo, &eo).to_text()).unwrap();
        let b = analyze(&parse_graph(CORPUS[j]).unwrap());
        prop_assert_eq!(code(&analyze(&ga), &b), code(&analyze(&re), &b));
    }

    #[test]
    fn verdict_symmetry(i in 0usize..10, j in 0usize..10) {
        let a = analyze(&parse_graph(CORPUS[i]).unwrap());
        let b = analyze(&parse_graph(CORPUS[j]).unwrap());
        prop_assert_eq!(code(&a, &b), code(&b, &a));
    }

    #[test]
    fn gram_rescaling_shifts_errors_by_a_gauge(
        i in prop::sample::select(vec![0usize, 1, 2, 4, 8, 9, 10]),
        which in 0usize..2,
        num in 1i64..13,
        den in 1i64..13,
    ) {
        let text = if i == 10 { SPLIT_BASES } else { CORPUS[i] };
        let g = parse_graph(text).unwrap();
        let a = analyze(&g);
        let v = which % g.vertices().len();
        let mut grams = a.grams.clone();
        grams[v] = grams[v].scaled(&rational(num, den));
        let scaled = TubularGroup::analyze_with_grams(&g, grams).unwrap();
        let before = errors(&Comparison::new(&a, &a));
        let after = errors(&Comparison::new(&scaled, &a));
        prop_assert!(gauge_shift(&before, &after).is_ok());
        prop_assert_eq!(code(&scaled, &a), 0);
        // bases at one vertex: the gauge is trivial
        if g.vertices().len() == 1 {
            prop_assert_eq!(flatten(&before), flatten(&after));
        }
    }
}

#[test]
fn split_bases_make_the_gauge_visible() {
    let g = parse_graph(SPLIT_BASES).unwrap();
    let a = analyze(&g);
    assert_eq!(a.classes.len(), 3);
    let q = g.vertex_index("q").unwrap();
    let mut grams = a.grams.clone();
    grams[q] = grams[q].scaled(&rational(4, 1));
    let scaled = TubularGroup::analyze_with_grams(&g, grams).unwrap();
    let before = errors(&Comparison::new(&a, &a));
    let after = errors(&Comparison::new(&scaled, &a));
    let shift = gauge_shift(&before, &after).unwrap();
    assert!(shift.values().any(|d| !d.is_zero()));
    assert_eq!(code(&scaled, &a), 0);
}
