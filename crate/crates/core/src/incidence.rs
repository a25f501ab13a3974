//! Incidence predicates and point extraction for lines of PG(4,q).
//!
//! Two lines meet exactly when the five bilinear forms obtained by
//! polarizing the quadratic Plücker relations all vanish. That predicate
//! dominates the search runtime, so it works on raw residues with an early
//! exit after the first nonzero form.

use std::fmt;

use thiserror::Error;

use crate::codec::{canonicalize, CodecError, PluckerLine, COORD_PAIRS, RELATIONS};
use crate::field::Prime;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("the zero tuple does not represent a projective point")]
    ZeroPoint,
    #[error("two coincident points do not span a line")]
    CoincidentPoints,
    #[error("point {0} does not lie in the hyperplane x4 = 0")]
    PointNotInHyperplane(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// A point of PG(4,q) in canonical homogeneous coordinates (first nonzero
/// coordinate scaled to 1).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProjectivePoint {
    q: Prime,
    coords: [u32; 5],
}

impl ProjectivePoint {
    /// Canonicalizes a nonzero coordinate tuple.
    pub fn new(q: Prime, raw: [u32; 5]) -> Result<Self, GeometryError> {
        let p = q.get();
        let mut coords = raw;
        for c in &mut coords {
            *c %= p;
        }
        let pivot = coords
            .iter()
            .position(|&c| c != 0)
            .ok_or(GeometryError::ZeroPoint)?;
        if coords[pivot] != 1 {
            let inv = q.inv(coords[pivot]);
            for c in &mut coords {
                *c = q.mul(*c, inv);
            }
        }
        Ok(ProjectivePoint { q, coords })
    }

    #[inline]
    pub fn q(&self) -> Prime {
        self.q
    }

    #[inline]
    pub fn raw(&self) -> &[u32; 5] {
        &self.coords
    }

    /// Base-p packing of the coordinates, `x0` most significant. Distinct
    /// canonical points get distinct keys, which index the coverage bitsets.
    #[inline]
    pub fn key(&self) -> u32 {
        let p = self.q.get();
        self.coords.iter().fold(0u32, |acc, &c| acc * p + c)
    }

    #[inline]
    pub fn in_hyperplane(&self) -> bool {
        self.coords[4] == 0
    }
}

impl fmt::Display for ProjectivePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.coords;
        write!(f, "({}:{}:{}:{}:{})", c[0], c[1], c[2], c[3], c[4])
    }
}

impl fmt::Debug for ProjectivePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ProjectivePoint(q={}, {})", self.q, self)
    }
}

/// True iff the two lines share a point: all five polarized relation forms
/// vanish. Symmetric in its arguments.
pub fn lines_meet(a: &PluckerLine, b: &PluckerLine) -> bool {
    let q = a.q();
    assert_eq!(q.get(), b.q().get(), "lines from different orders q");
    let p = u64::from(q.get());
    let x = a.raw();
    let y = b.raw();
    for rel in RELATIONS {
        let [(i, j), (k, l), (m, n)] = rel;
        let pos = u64::from(x[i]) * u64::from(y[j])
            + u64::from(y[i]) * u64::from(x[j])
            + u64::from(x[m]) * u64::from(y[n])
            + u64::from(y[m]) * u64::from(x[n]);
        let neg = u64::from(x[k]) * u64::from(y[l]) + u64::from(y[k]) * u64::from(x[l]);
        if (pos + 2 * p * p - neg) % p != 0 {
            return false;
        }
    }
    true
}

/// True iff the line lies in the hyperplane x4 = 0, i.e. all four
/// coordinates p04, p14, p24, p34 vanish.
#[inline]
pub fn line_in_hyperplane(l: &PluckerLine) -> bool {
    let c = l.raw();
    c[3] == 0 && c[6] == 0 && c[8] == 0 && c[9] == 0
}

/// Tuple slot holding `p_{ij}` (or `p_{ji}` for i > j); diagonal unused.
const PAIR_SLOT: [[usize; 5]; 5] = [
    [0, 0, 1, 2, 3],
    [0, 0, 4, 5, 6],
    [1, 4, 0, 7, 8],
    [2, 5, 7, 0, 9],
    [3, 6, 8, 9, 0],
];

#[inline]
fn pair_slot(i: usize, j: usize) -> usize {
    PAIR_SLOT[i][j]
}

/// Two independent points spanning the line, as raw (not necessarily
/// canonical) coordinate tuples.
///
/// The antisymmetric matrix `P` with `P[i][j] = p_ij` has rank 2 and its
/// nonzero columns are points of the line, so the first two non-proportional
/// columns span it.
pub(crate) fn spanning_points(l: &PluckerLine) -> ([u32; 5], [u32; 5]) {
    let q = l.q();
    let c = l.raw();
    let column = |j: usize| -> [u32; 5] {
        let mut col = [0u32; 5];
        for (i, slot) in col.iter_mut().enumerate() {
            *slot = match i.cmp(&j) {
                std::cmp::Ordering::Less => q.neg(c[pair_slot(i, j)]),
                std::cmp::Ordering::Equal => 0,
                std::cmp::Ordering::Greater => c[pair_slot(j, i)],
            };
        }
        col
    };
    let mut first: Option<(usize, [u32; 5])> = None;
    for j in 0..5 {
        let col = column(j);
        if col.iter().all(|&v| v == 0) {
            continue;
        }
        match first {
            None => first = Some((j, col)),
            Some((_, a)) => {
                if !proportional(q, &a, &col) {
                    return (a, col);
                }
            }
        }
    }
    unreachable!("a relation-satisfying nonzero tuple spans a rank-2 matrix");
}

fn proportional(q: Prime, a: &[u32; 5], b: &[u32; 5]) -> bool {
    // Both nonzero. a ~ b iff a[i] b[j] = a[j] b[i] for all i < j.
    for i in 0..5 {
        for j in (i + 1)..5 {
            if q.mul(a[i], b[j]) != q.mul(a[j], b[i]) {
                return false;
            }
        }
    }
    true
}

/// The q+1 points of the line, canonical and sorted by packed key.
pub fn points_of_line(l: &PluckerLine) -> Vec<ProjectivePoint> {
    let q = l.q();
    let (a, b) = spanning_points(l);
    let mut points = Vec::with_capacity(q.get() as usize + 1);
    points.push(ProjectivePoint::new(q, a).expect("spanning point is nonzero"));
    for t in 0..q.get() {
        let mut combo = [0u32; 5];
        for i in 0..5 {
            combo[i] = q.add(b[i], q.mul(t, a[i]));
        }
        points.push(ProjectivePoint::new(q, combo).expect("independent combination is nonzero"));
    }
    points.sort_by_key(ProjectivePoint::key);
    debug_assert!(points.windows(2).all(|w| w[0] != w[1]));
    points
}

/// The line through two distinct points: `p_ij = a_i b_j - a_j b_i`.
pub fn line_through(
    a: &ProjectivePoint,
    b: &ProjectivePoint,
) -> Result<PluckerLine, GeometryError> {
    span_raw(a.q(), a.raw(), b.raw())
}

/// Span of two raw coordinate tuples (not necessarily canonical points).
pub(crate) fn span_raw(
    q: Prime,
    a: &[u32; 5],
    b: &[u32; 5],
) -> Result<PluckerLine, GeometryError> {
    let mut coords = [0u32; 10];
    for (slot, &(i, j)) in COORD_PAIRS.iter().enumerate() {
        coords[slot] = q.sub(q.mul(a[i], b[j]), q.mul(a[j], b[i]));
    }
    match canonicalize(q, coords) {
        Ok(line) => Ok(line),
        Err(CodecError::ZeroTuple) => Err(GeometryError::CoincidentPoints),
        Err(e) => Err(e.into()),
    }
}

/// All q^3 lines through an in-hyperplane point `x` that leave the
/// hyperplane.
///
/// Every such line meets the affine part in q points `(y0,y1,y2,y3,1)`;
/// normalizing the representative so its coordinate at the pivot of `x`
/// vanishes picks exactly one spanning partner per line, so the q^3
/// assignments below hit each line once. Generation order is unspecified;
/// callers sort by serial when they need the canonical order.
pub fn lines_through_point_off_hyperplane(
    x: &ProjectivePoint,
) -> Result<Vec<PluckerLine>, GeometryError> {
    if !x.in_hyperplane() {
        return Err(GeometryError::PointNotInHyperplane(x.to_string()));
    }
    let q = x.q();
    let p = q.get();
    let pivot = x
        .raw()
        .iter()
        .position(|&c| c != 0)
        .expect("points are nonzero");
    let free: Vec<usize> = (0..4).filter(|&i| i != pivot).collect();
    let mut out = Vec::with_capacity((p as usize).pow(3));
    let mut partner = [0u32; 5];
    partner[4] = 1;
    for v0 in 0..p {
        partner[free[0]] = v0;
        for v1 in 0..p {
            partner[free[1]] = v1;
            for v2 in 0..p {
                partner[free[2]] = v2;
                out.push(span_raw(q, x.raw(), &partner)?);
            }
        }
    }
    Ok(out)
}
