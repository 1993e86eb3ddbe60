//! Projective geometry of edge patterns.
//!
//! Slopes are rational points of ℝP¹, symmetries and equivalences are
//! elements of PGL₂(ℚ) stored as primitive integer matrices, and each
//! vertex gets a rational Gram matrix under which its pattern's symmetry
//! group acts by similarities. Squared lengths are rational, so heights are
//! exact `LogValue`s.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::model::IVec;
use crate::number::{gcd_all, square_part, LogValue, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatternError {
    #[error("zero vector has no slope")]
    ZeroVector,
    #[error("pattern has {found} lines, at least {needed} required")]
    TooFewLines { found: usize, needed: usize },
}

/// A line through the origin with rational slope: the coprime pair `(a, b)`
/// with `a > 0`, or `(0, 1)` for the vertical line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProjectiveSlope {
    a: i64,
    b: i64,
}

impl ProjectiveSlope {
    pub fn pair(&self) -> IVec {
        (self.a, self.b)
    }

    fn from_big(a: &BigInt, b: &BigInt) -> Option<Self> {
        if a.is_zero() && b.is_zero() {
            return None;
        }
        let g = a.gcd(b);
        let (mut a, mut b) = (a / &g, b / &g);
        if a.is_negative() || (a.is_zero() && b.is_negative()) {
            a = -a;
            b = -b;
        }
        Some(ProjectiveSlope {
            a: a.to_i64()?,
            b: b.to_i64()?,
        })
    }

    fn big(&self) -> (BigInt, BigInt) {
        (BigInt::from(self.a), BigInt::from(self.b))
    }
}

impl fmt::Display for ProjectiveSlope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.a == 0 {
            f.write_str("∞")
        } else if self.a == 1 {
            write!(f, "{}", self.b)
        } else {
            write!(f, "{}/{}", self.b, self.a)
        }
    }
}

pub fn slope_of(v: IVec) -> Result<ProjectiveSlope, PatternError> {
    ProjectiveSlope::from_big(&BigInt::from(v.0), &BigInt::from(v.1)).ok_or(PatternError::ZeroVector)
}

/// The distinct slopes of the edge ends at one vertex, in canonical order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EdgePattern {
    pub vertex: usize,
    slopes: Vec<ProjectiveSlope>,
}

impl EdgePattern {
    pub fn new(vertex: usize, slopes: impl IntoIterator<Item = ProjectiveSlope>) -> Self {
        let mut slopes: Vec<_> = slopes.into_iter().collect();
        slopes.sort();
        slopes.dedup();
        EdgePattern { vertex, slopes }
    }

    pub fn from_vectors(vertex: usize, vectors: &[IVec]) -> Result<Self, PatternError> {
        let slopes = vectors.iter().map(|&v| slope_of(v)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(vertex, slopes))
    }

    pub fn slopes(&self) -> &[ProjectiveSlope] {
        &self.slopes
    }

    pub fn line_count(&self) -> usize {
        self.slopes.len()
    }

    pub fn index_of(&self, s: &ProjectiveSlope) -> Option<usize> {
        self.slopes.binary_search(s).ok()
    }

    pub fn contains(&self, s: &ProjectiveSlope) -> bool {
        self.index_of(s).is_some()
    }
}

/// An element of PGL₂(ℚ), stored as the primitive integer matrix
/// `[[m0, m1], [m2, m3]]` whose first nonzero entry is positive.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Moebius {
    m: [BigInt; 4],
}

impl Moebius {
    pub fn new(m: [BigInt; 4]) -> Option<Self> {
        if (&m[0] * &m[3] - &m[1] * &m[2]).is_zero() {
            return None;
        }
        let g = gcd_all(m.iter());
        let mut m = m.map(|x| x / &g);
        if m.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
            m = m.map(|x| -x);
        }
        Some(Moebius { m })
    }

    pub fn from_ints(m: [i64; 4]) -> Option<Self> {
        Self::new(m.map(BigInt::from))
    }

    pub fn identity() -> Self {
        Self::from_ints([1, 0, 0, 1]).unwrap()
    }

    pub fn entries(&self) -> &[BigInt; 4] {
        &self.m
    }

    pub fn det(&self) -> BigInt {
        &self.m[0] * &self.m[3] - &self.m[1] * &self.m[2]
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Moebius) -> Moebius {
        let [a, b, c, d] = &self.m;
        let [e, f, g, h] = &other.m;
        Moebius::new([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h]).expect("product of invertible maps")
    }

    pub fn inverse(&self) -> Moebius {
        let [a, b, c, d] = &self.m;
        Moebius::new([d.clone(), -b, -c, a.clone()]).expect("invertible")
    }

    pub fn apply(&self, s: &ProjectiveSlope) -> Option<ProjectiveSlope> {
        let (x, y) = s.big();
        let [a, b, c, d] = &self.m;
        ProjectiveSlope::from_big(&(a * &x + b * &y), &(c * &x + d * &y))
    }

    /// The unique projective map sending three distinct slopes to three
    /// distinct slopes, in order.
    pub fn through_triples(src: [ProjectiveSlope; 3], dst: [ProjectiveSlope; 3]) -> Moebius {
        let frame = |t: [ProjectiveSlope; 3]| {
            // Columns c1·p1, c2·p2 with c1·p1 + c2·p2 ∝ p3 (scaled by det[p1 p2]).
            let (p1, p2, p3) = (t[0].big(), t[1].big(), t[2].big());
            let det = |u: &(BigInt, BigInt), v: &(BigInt, BigInt)| &u.0 * &v.1 - &u.1 * &v.0;
            let c1 = det(&p3, &p2);
            let c2 = det(&p1, &p3);
            [&c1 * &p1.0, &c2 * &p2.0, &c1 * &p1.1, &c2 * &p2.1]
        };
        let a = Moebius::new(frame(src)).expect("distinct source slopes");
        let b = Moebius::new(frame(dst)).expect("distinct target slopes");
        b.compose(&a.inverse())
    }

    fn to_rational(&self) -> [Rational; 4] {
        self.m.clone().map(Rational::from_integer)
    }
}

impl fmt::Display for Moebius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = &self.m;
        write!(f, "[[{a},{b}],[{c},{d}]]")
    }
}

/// Symmetric positive definite 2×2 rational matrix `[[g11, g12], [g12, g22]]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Gram {
    pub g11: Rational,
    pub g12: Rational,
    pub g22: Rational,
}

impl Gram {
    pub fn identity() -> Self {
        Gram {
            g11: Rational::one(),
            g12: Rational::zero(),
            g22: Rational::one(),
        }
    }

    pub fn new(g11: Rational, g12: Rational, g22: Rational) -> Option<Self> {
        let g = Gram { g11, g12, g22 };
        (g.g11.is_positive() && g.det().is_positive()).then_some(g)
    }

    pub fn det(&self) -> Rational {
        &self.g11 * &self.g22 - &self.g12 * &self.g12
    }

    pub fn scaled(&self, c: &Rational) -> Gram {
        Gram {
            g11: &self.g11 * c,
            g12: &self.g12 * c,
            g22: &self.g22 * c,
        }
    }

    /// `Mᵀ g M` for a rational matrix `M`.
    pub fn pullback(&self, m: &[Rational; 4]) -> Gram {
        let [a, b, c, d] = m;
        let (p, q, r) = (&self.g11, &self.g12, &self.g22);
        Gram {
            g11: a * a * p + (a * c * q) * Rational::from_integer(2.into()) + c * c * r,
            g12: a * b * p + (a * d + b * c) * q + c * d * r,
            g22: b * b * p + (b * d * q) * Rational::from_integer(2.into()) + d * d * r,
        }
    }

    /// Rescales to the unique positive multiple whose determinant is a
    /// squarefree integer. The determinant is invariant under GL₂(ℤ)
    /// conjugation, so this normalization commutes with basis changes.
    pub fn normalized(&self) -> Gram {
        let det = self.det();
        let nd: BigUint = (det.numer() * det.denom()).to_biguint().expect("positive determinant");
        let t = BigInt::from(square_part(&nd));
        // det = s·t²/den², so scaling by den/t brings it to the squarefree s.
        let c = Rational::new(det.denom().clone(), t);
        self.scaled(&c)
    }
}

impl fmt::Display for Gram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.g11, self.g12, self.g12, self.g22)
    }
}

/// Setwise stabilizer of the pattern in PGL₂(ℚ), deduplicated and sorted.
pub fn symmetry_group(p: &EdgePattern) -> Result<Vec<Moebius>, PatternError> {
    if p.line_count() < 3 {
        return Err(PatternError::TooFewLines {
            found: p.line_count(),
            needed: 3,
        });
    }
    Ok(triple_maps(p, p))
}

/// All projective maps sending `p`'s slopes bijectively onto `q`'s.
///
/// Patterns with two lines get the two canonical maps sending primitive
/// vectors to primitive vectors, one per bijection of the two families.
pub fn linear_equivalences(p: &EdgePattern, q: &EdgePattern) -> Vec<Moebius> {
    if p.line_count() != q.line_count() || p.line_count() < 2 {
        return Vec::new();
    }
    if p.line_count() == 2 {
        let (p1, p2) = (p.slopes[0].big(), p.slopes[1].big());
        let mut out = Vec::new();
        for (q1, q2) in [(q.slopes[0], q.slopes[1]), (q.slopes[1], q.slopes[0])] {
            let (q1, q2) = (q1.big(), q2.big());
            // Q · adj(P), with P, Q the matrices of column vectors.
            let adj = [p2.1.clone(), -&p2.0, -&p1.1, p1.0.clone()];
            let qm = [q1.0, q2.0, q1.1, q2.1];
            let m = [
                &qm[0] * &adj[0] + &qm[1] * &adj[2],
                &qm[0] * &adj[1] + &qm[1] * &adj[3],
                &qm[2] * &adj[0] + &qm[3] * &adj[2],
                &qm[2] * &adj[1] + &qm[3] * &adj[3],
            ];
            out.push(Moebius::new(m).expect("independent slopes"));
        }
        return out;
    }
    triple_maps(p, q)
}

fn triple_maps(p: &EdgePattern, q: &EdgePattern) -> Vec<Moebius> {
    let src = [p.slopes[0], p.slopes[1], p.slopes[2]];
    let n = q.slopes.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i == j || j == k || i == k {
                    continue;
                }
                let m = Moebius::through_triples(src, [q.slopes[i], q.slopes[j], q.slopes[k]]);
                let mut hit = vec![false; n];
                let bijective = p.slopes.iter().all(|s| match m.apply(s).and_then(|t| q.index_of(&t)) {
                    Some(t) if !hit[t] => {
                        hit[t] = true;
                        true
                    }
                    _ => false,
                });
                if bijective {
                    out.push(m);
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Gram matrix of a metric under which the pattern is symmetric.
///
/// Two lines: the primitive slope vectors become orthonormal. Three or more:
/// the average of `MᵀM/|det M|` over the symmetry group, which is the
/// identity Gram when the group is trivial.
pub fn symmetric_gram(p: &EdgePattern) -> Result<Gram, PatternError> {
    match p.line_count() {
        0 | 1 => Err(PatternError::TooFewLines {
            found: p.line_count(),
            needed: 2,
        }),
        2 => {
            // g = P⁻ᵀ P⁻¹; up to the positive factor det(P)² this is adj(P)ᵀ adj(P).
            let (u, v) = (p.slopes[0].big(), p.slopes[1].big());
            let adj = [v.1.clone(), -&v.0, -&u.1, u.0.clone()].map(Rational::from_integer);
            Ok(Gram::identity().pullback(&adj).normalized())
        }
        _ => {
            let group = symmetry_group(p)?;
            let mut acc = Gram {
                g11: Rational::zero(),
                g12: Rational::zero(),
                g22: Rational::zero(),
            };
            for m in &group {
                let det = Rational::from_integer(m.det().abs());
                let term = Gram::identity().pullback(&m.to_rational());
                acc.g11 += &term.g11 / &det;
                acc.g12 += &term.g12 / &det;
                acc.g22 += &term.g22 / &det;
            }
            let n = Rational::from_integer(BigInt::from(group.len()));
            Ok(acc.scaled(&n.recip()).normalized())
        }
    }
}

/// `wᵀ g w`.
pub fn length_sq(g: &Gram, w: IVec) -> Result<Rational, PatternError> {
    if w == (0, 0) {
        return Err(PatternError::ZeroVector);
    }
    let (a, b) = (Rational::from_integer(w.0.into()), Rational::from_integer(w.1.into()));
    Ok(&a * &a * &g.g11 + Rational::from_integer(2.into()) * &a * &b * &g.g12 + &b * &b * &g.g22)
}

/// Height change `-log₂(l₁/l₀)` across an edge whose end vectors are `w0`
/// (measured with `g0`) and `w1` (measured with `g1`).
pub fn edge_height(g0: &Gram, w0: IVec, g1: &Gram, w1: IVec) -> Result<LogValue, PatternError> {
    let l0 = length_sq(g0, w0)?;
    let l1 = length_sq(g1, w1)?;
    Ok(LogValue::from_squared_lengths(&l0, &l1).expect("positive definite Grams"))
}
