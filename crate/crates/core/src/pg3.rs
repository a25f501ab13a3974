//! Lines and spreads of PG(3,q), and their embedding into the hyperplane
//! x4 = 0 of PG(4,q).
//!
//! A line of PG(3,q) is a canonical 6-tuple `(p01, p02, p03, p12, p13, p23)`
//! satisfying the single relation `p01*p23 - p02*p13 + p03*p12 = 0`. The
//! engine ships the spread serial lists it certifies as plain-text data
//! files and validates them on load; orders without a shipped list fall
//! back to a built-in backtracking spread finder.

use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::codec::{enumerate_all, point_count, PluckerLine};
use crate::field::{FieldError, Prime};
use crate::incidence::{line_in_hyperplane, points_of_line};

#[derive(Debug, Error)]
pub enum SpreadError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Malformed {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("line index {i} out of range: PG(3,{q}) formula lines need i < q^4 = {max}")]
    IndexOutOfRange { q: u32, i: u64, max: u64 },
    #[error("spread table for q={q} must list q^2 = {expected} serials, found {found}")]
    WrongCount { q: u32, expected: u64, found: u64 },
    #[error("duplicate serial {n} in spread table")]
    DuplicateSerial { n: u64 },
    #[error("spread lines {a} and {b} meet; the table is corrupt")]
    NotSkew { a: String, b: String },
    #[error("spread covers {covered} of the {expected} points of PG(3,{q})")]
    IncompleteCover { q: u32, covered: u64, expected: u64 },
    #[error("no spread table shipped for q={q} and the fallback finder is limited to q <= {max}")]
    NoTableAvailable { q: u32, max: u32 },
}

/// A line of PG(3,q) as a canonical Plücker 6-tuple.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pg3Line {
    q: Prime,
    coords: [u32; 6],
}

impl Pg3Line {
    /// Line number `i`, for `0 <= i < q^4`, via the digit formula
    /// `p01 = 1`, `p02 = i mod q`, `p03 = (i/q) mod q`, `p12 = (i/q^2) mod q`,
    /// `p13 = (i/q^3) mod q`, `p23 = p02*p13 - p03*p12`.
    pub fn from_index(q: Prime, i: u64) -> Result<Self, SpreadError> {
        let p = u64::from(q.get());
        let max = p.pow(4);
        if i >= max {
            return Err(SpreadError::IndexOutOfRange { q: q.get(), i, max });
        }
        let p02 = (i % p) as u32;
        let p03 = ((i / p) % p) as u32;
        let p12 = ((i / (p * p)) % p) as u32;
        let p13 = ((i / (p * p * p)) % p) as u32;
        let p23 = q.sub(q.mul(p02, p13), q.mul(p03, p12));
        Ok(Pg3Line {
            q,
            coords: [1, p02, p03, p12, p13, p23],
        })
    }

    /// The line `(0,0,0,0,0,1)`, closing every shipped spread list.
    pub fn closing_line(q: Prime) -> Self {
        Pg3Line {
            q,
            coords: [0, 0, 0, 0, 0, 1],
        }
    }

    /// Accepts a canonical relation-satisfying 6-tuple.
    pub fn from_coords(q: Prime, coords: [u32; 6]) -> Option<Self> {
        let p = q.get();
        let reduced = coords.map(|c| c % p);
        let pivot = reduced.iter().position(|&c| c != 0)?;
        if reduced[pivot] != 1 {
            return None;
        }
        let lhs = q.add(q.mul(reduced[0], reduced[5]), q.mul(reduced[2], reduced[3]));
        if lhs != q.mul(reduced[1], reduced[4]) {
            return None;
        }
        Some(Pg3Line { q, coords: reduced })
    }

    #[inline]
    pub fn q(&self) -> Prime {
        self.q
    }

    #[inline]
    pub fn raw(&self) -> &[u32; 6] {
        &self.coords
    }

    /// True iff the two lines of PG(3,q) share a point: the single
    /// polarized relation vanishes.
    pub fn meets(&self, other: &Pg3Line) -> bool {
        let q = self.q;
        assert_eq!(q.get(), other.q.get(), "lines from different orders q");
        let a = &self.coords;
        let b = &other.coords;
        let pos = q.add(
            q.add(q.mul(a[0], b[5]), q.mul(b[0], a[5])),
            q.add(q.mul(a[2], b[3]), q.mul(b[2], a[3])),
        );
        let neg = q.add(q.mul(a[1], b[4]), q.mul(b[1], a[4]));
        pos == neg
    }

    /// Embeds into PG(4,q) by inserting zeros at the four x4-slots:
    /// `(p01,p02,p03,0,p12,p13,0,p23,0,0)`. The image lies in the
    /// hyperplane x4 = 0 and the embedding preserves incidence.
    pub fn embed(&self) -> PluckerLine {
        let c = &self.coords;
        let ten = [c[0], c[1], c[2], 0, c[3], c[4], 0, c[5], 0, 0];
        PluckerLine::from_coords(self.q, ten)
            .expect("embedding a PG(3,q) line satisfies the Plücker relations")
    }

    /// Inverse of [`Pg3Line::embed`] for in-hyperplane lines.
    pub fn try_unembed(l: &PluckerLine) -> Option<Self> {
        if !line_in_hyperplane(l) {
            return None;
        }
        let c = l.raw();
        Pg3Line::from_coords(l.q(), [c[0], c[1], c[2], c[4], c[5], c[7]])
    }
}

impl fmt::Display for Pg3Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.coords;
        write!(f, "({},{},{},{},{},{})", c[0], c[1], c[2], c[3], c[4], c[5])
    }
}

impl fmt::Debug for Pg3Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pg3Line(q={}, {})", self.q, self)
    }
}

/// Number of lines of PG(3,q): `(q^2 + 1)(q^2 + q + 1)`.
pub fn pg3_line_count(q: Prime) -> u64 {
    let p = u64::from(q.get());
    (p * p + 1) * (p * p + p + 1)
}

/// Number of points of PG(3,q): `q^3 + q^2 + q + 1`.
pub fn pg3_point_count(q: Prime) -> u64 {
    point_count(q, 3)
}

/// A shipped spread list: q^2 formula-line serials, implicitly closed by
/// the common line `(0,0,0,0,0,1)`.
#[derive(Clone, Debug)]
pub struct SpreadTable {
    q: Prime,
    serials: Vec<u64>,
}

impl SpreadTable {
    /// Parses the two-line table format: `q=<p>` then the comma-separated
    /// serial list.
    pub fn load(path: &Path) -> Result<Self, SpreadError> {
        let io_err = |source| SpreadError::Io {
            path: path.to_path_buf(),
            source,
        };
        let malformed = |line: usize, msg: String| SpreadError::Malformed {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let text = std::fs::read_to_string(path).map_err(io_err)?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| malformed(1, "empty file".into()))?;
        let q_str = header
            .strip_prefix("q=")
            .ok_or_else(|| malformed(1, format!("expected `q=<p>`, found `{header}`")))?;
        let p: u64 = q_str
            .trim()
            .parse()
            .map_err(|e| malformed(1, format!("bad order `{q_str}`: {e}")))?;
        let q = Prime::new(p)?;
        let body = lines
            .next()
            .ok_or_else(|| malformed(2, "missing serial list".into()))?;
        let mut serials = Vec::new();
        for tok in body.split(',') {
            let n: u64 = tok
                .trim()
                .parse()
                .map_err(|e| malformed(2, format!("bad serial `{tok}`: {e}")))?;
            serials.push(n);
        }
        SpreadTable::from_serials(q, serials)
    }

    /// Structural validation: count, range, distinctness. Geometric
    /// validation is [`SpreadTable::validate`].
    pub fn from_serials(q: Prime, serials: Vec<u64>) -> Result<Self, SpreadError> {
        let p = u64::from(q.get());
        let expected = p * p;
        if serials.len() as u64 != expected {
            return Err(SpreadError::WrongCount {
                q: q.get(),
                expected,
                found: serials.len() as u64,
            });
        }
        let mut seen = std::collections::HashSet::new();
        for &n in &serials {
            if n >= p.pow(4) {
                return Err(SpreadError::IndexOutOfRange {
                    q: q.get(),
                    i: n,
                    max: p.pow(4),
                });
            }
            if !seen.insert(n) {
                return Err(SpreadError::DuplicateSerial { n });
            }
        }
        Ok(SpreadTable { q, serials })
    }

    pub fn q(&self) -> Prime {
        self.q
    }

    pub fn serials(&self) -> &[u64] {
        &self.serials
    }

    /// The q^2 + 1 spread lines in list order, closing line last.
    pub fn lines(&self) -> Vec<Pg3Line> {
        let mut out: Vec<Pg3Line> = self
            .serials
            .iter()
            .map(|&n| Pg3Line::from_index(self.q, n).expect("serials validated in range"))
            .collect();
        out.push(Pg3Line::closing_line(self.q));
        out
    }

    /// Checks the decoded lines are pairwise skew and cover every point of
    /// PG(3,q).
    pub fn validate(&self) -> Result<(), SpreadError> {
        validate_spread(self.q, &self.lines())
    }
}

/// Pairwise skewness plus full point coverage for a claimed spread.
pub fn validate_spread(q: Prime, lines: &[Pg3Line]) -> Result<(), SpreadError> {
    for (i, a) in lines.iter().enumerate() {
        for b in &lines[i + 1..] {
            if a.meets(b) {
                return Err(SpreadError::NotSkew {
                    a: a.to_string(),
                    b: b.to_string(),
                });
            }
        }
    }
    let mut keys = std::collections::HashSet::new();
    for line in lines {
        for pt in points_of_line(&line.embed()) {
            keys.insert(pt.key());
        }
    }
    let expected = pg3_point_count(q);
    if keys.len() as u64 != expected {
        return Err(SpreadError::IncompleteCover {
            q: q.get(),
            covered: keys.len() as u64,
            expected,
        });
    }
    Ok(())
}

/// The spread used as the starting configuration for order q: the shipped
/// table under `spreads_dir` when one exists (validated on load), otherwise
/// the backtracking finder.
pub fn build_spread(q: Prime, spreads_dir: &Path) -> Result<Vec<Pg3Line>, SpreadError> {
    let path = spreads_dir.join(format!("q{}.txt", q.get()));
    if path.exists() {
        let table = SpreadTable::load(&path)?;
        table.validate()?;
        Ok(table.lines())
    } else {
        find_spread_bruteforce(q)
    }
}

/// Largest order the fallback finder accepts. The exact-cover search is
/// meant for the small orders that ship no list; it has exploded well
/// before this bound would matter.
pub const BRUTEFORCE_MAX_Q: u32 = 7;

/// Finds a spread of PG(3,q) by backtracking over the in-hyperplane lines
/// of PG(4,q) in serial order.
///
/// Branches on the lowest uncovered point and tries its candidate lines in
/// ascending serial order, so the result is deterministic. The first
/// complete cover found is returned.
pub fn find_spread_bruteforce(q: Prime) -> Result<Vec<Pg3Line>, SpreadError> {
    if q.get() > BRUTEFORCE_MAX_Q {
        return Err(SpreadError::NoTableAvailable {
            q: q.get(),
            max: BRUTEFORCE_MAX_Q,
        });
    }
    let hyperplane_lines: Vec<PluckerLine> =
        enumerate_all(q).filter(line_in_hyperplane).collect();
    debug_assert_eq!(hyperplane_lines.len() as u64, pg3_line_count(q));

    // Per-line point keys, and per-point candidate lines.
    let keys_per_line: Vec<Vec<u32>> = hyperplane_lines
        .iter()
        .map(|l| points_of_line(l).iter().map(|p| p.key()).collect())
        .collect();
    let mut all_keys: Vec<u32> = keys_per_line.iter().flatten().copied().collect();
    all_keys.sort_unstable();
    all_keys.dedup();
    let key_rank = |key: u32| all_keys.binary_search(&key).expect("known point");
    let mut through: Vec<Vec<usize>> = vec![Vec::new(); all_keys.len()];
    for (idx, keys) in keys_per_line.iter().enumerate() {
        for &k in keys {
            through[key_rank(k)].push(idx);
        }
    }

    let target = (u64::from(q.get()).pow(2) + 1) as usize;
    let mut covered = vec![false; all_keys.len()];
    let mut chosen: Vec<usize> = Vec::with_capacity(target);

    fn dfs(
        chosen: &mut Vec<usize>,
        covered: &mut [bool],
        keys_per_line: &[Vec<u32>],
        through: &[Vec<usize>],
        key_rank: &dyn Fn(u32) -> usize,
        target: usize,
    ) -> bool {
        if chosen.len() == target {
            return true;
        }
        let lowest = match covered.iter().position(|&c| !c) {
            Some(i) => i,
            None => return false,
        };
        for &idx in &through[lowest] {
            let ranks: Vec<usize> = keys_per_line[idx].iter().map(|&k| key_rank(k)).collect();
            if ranks.iter().any(|&r| covered[r]) {
                continue;
            }
            for &r in &ranks {
                covered[r] = true;
            }
            chosen.push(idx);
            if dfs(chosen, covered, keys_per_line, through, key_rank, target) {
                return true;
            }
            chosen.pop();
            for &r in &ranks {
                covered[r] = false;
            }
        }
        false
    }

    let found = dfs(
        &mut chosen,
        &mut covered,
        &keys_per_line,
        &through,
        &key_rank,
        target,
    );
    assert!(found, "PG(3,q) always has a spread");
    let lines: Vec<Pg3Line> = chosen
        .iter()
        .map(|&idx| {
            Pg3Line::try_unembed(&hyperplane_lines[idx])
                .expect("hyperplane lines unembed to PG(3,q) lines")
        })
        .collect();
    debug_assert!(validate_spread(q, &lines).is_ok());
    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::incidence::lines_meet;

    fn q(p: u64) -> Prime {
        Prime::new(p).unwrap()
    }

    #[test]
    fn formula_line_examples() {
        assert_eq!(*Pg3Line::from_index(q(3), 0).unwrap().raw(), [1, 0, 0, 0, 0, 0]);
        assert_eq!(*Pg3Line::from_index(q(7), 0).unwrap().raw(), [1, 0, 0, 0, 0, 0]);
        // i = 12 over q = 3: digits (0,1,1,0), p23 = 0*0 - 1*1 = -1 = 2.
        assert_eq!(*Pg3Line::from_index(q(3), 12).unwrap().raw(), [1, 0, 1, 1, 0, 2]);
        assert!(matches!(
            Pg3Line::from_index(q(3), 81),
            Err(SpreadError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn formula_lines_satisfy_relation() {
        let f = q(5);
        for i in 0..625 {
            let l = Pg3Line::from_index(f, i).unwrap();
            let c = l.raw();
            let lhs = f.add(f.mul(c[0], c[5]), f.mul(c[2], c[3]));
            assert_eq!(lhs, f.mul(c[1], c[4]));
        }
    }

    #[test]
    fn embedding_examples() {
        let a = Pg3Line::from_coords(q(3), [1, 0, 0, 0, 0, 0]).unwrap();
        assert_eq!(*a.embed().raw(), [1, 0, 0, 0, 0, 0, 0, 0, 0, 0]);
        let b = Pg3Line::closing_line(q(3));
        assert_eq!(*b.embed().raw(), [0, 0, 0, 0, 0, 0, 0, 1, 0, 0]);
        assert_eq!(Pg3Line::try_unembed(&b.embed()).unwrap(), b);
    }

    #[test]
    fn embedding_preserves_incidence() {
        for p in [2u64, 3] {
            let f = q(p);
            let max = u64::from(f.get()).pow(4);
            let sample: Vec<Pg3Line> = (0..max)
                .step_by(3)
                .map(|i| Pg3Line::from_index(f, i).unwrap())
                .chain(std::iter::once(Pg3Line::closing_line(f)))
                .collect();
            for a in &sample {
                for b in &sample {
                    assert_eq!(
                        a.meets(b),
                        lines_meet(&a.embed(), &b.embed()),
                        "{a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn bruteforce_spread_q2() {
        let lines = find_spread_bruteforce(q(2)).unwrap();
        assert_eq!(lines.len(), 5);
        validate_spread(q(2), &lines).unwrap();
        // Deterministic across runs.
        assert_eq!(find_spread_bruteforce(q(2)).unwrap(), lines);
    }

    #[test]
    fn bruteforce_spread_q3() {
        let lines = find_spread_bruteforce(q(3)).unwrap();
        assert_eq!(lines.len(), 10);
        validate_spread(q(3), &lines).unwrap();
    }

    #[test]
    fn table_validation_catches_corruption() {
        // The paper-style list layout for q=3, with one serial perturbed so
        // two lines meet.
        let good = vec![0u64, 12, 24, 29, 41, 53, 55, 67, 79];
        let table = SpreadTable::from_serials(q(3), good.clone()).unwrap();
        table.validate().unwrap();

        let mut bad = good.clone();
        bad[1] = 13;
        let table = SpreadTable::from_serials(q(3), bad).unwrap();
        assert!(table.validate().is_err());

        let mut dup = good;
        dup[1] = 0;
        assert!(matches!(
            SpreadTable::from_serials(q(3), dup),
            Err(SpreadError::DuplicateSerial { n: 0 })
        ));
    }

    #[test]
    fn wrong_count_rejected() {
        assert!(matches!(
            SpreadTable::from_serials(q(3), vec![0, 12, 24]),
            Err(SpreadError::WrongCount { expected: 9, .. })
        ));
    }
}
