//! Construction of q-added maximal partial spreads of PG(4,q).
//!
//! Starting from a spread of the hyperplane x4 = 0, each step removes one
//! surviving spread line and covers its q+1 points with q+1 mutually skew
//! lines that leave the hyperplane. A counting argument guarantees such a
//! cover exists while fewer than q^2 off-hyperplane lines are present, so
//! the first q-1 steps always complete; past that regime the search runs
//! best-effort and reports the first failure instead of aborting.
//!
//! All tie-breaking is lowest-serial-first: the points of a removed line are
//! processed in canonical key order and candidate lines in ascending serial
//! order, making every run reproducible.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::codec::{enumerate_all, line_count, point_count, LineSerial, PluckerLine};
use crate::field::Prime;
use crate::incidence::{
    lines_through_point_off_hyperplane, points_of_line, spanning_points, GeometryError,
    ProjectivePoint,
};
use crate::pg3::Pg3Line;

/// Coverage bitsets index points by base-p keys, so they need p^5 bits.
/// This bounds the supported order far beyond the operational range.
pub const MAX_COVERAGE_Q: u32 = 61;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("order q={q} too large for the point-coverage index (max {MAX_COVERAGE_Q})")]
    OrderTooLarge { q: u32 },
    #[error("line {candidate} meets spread member {conflict}")]
    Conflict {
        candidate: LineSerial,
        conflict: LineSerial,
    },
    #[error("removal order entry {serial} is not a member of the current spread")]
    RemovedLineNotMember { serial: LineSerial },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Point-coverage index: one bit per canonical point key.
pub struct CoverageIndex {
    p: u32,
    bits: Vec<u64>,
    inv: Vec<u32>,
}

impl CoverageIndex {
    pub fn new(q: Prime) -> Result<Self, SearchError> {
        if q.get() > MAX_COVERAGE_Q {
            return Err(SearchError::OrderTooLarge { q: q.get() });
        }
        let keys = u64::from(q.get()).pow(5);
        Ok(CoverageIndex {
            p: q.get(),
            bits: vec![0u64; ((keys + 63) / 64) as usize],
            inv: q.inverse_table(),
        })
    }

    #[inline]
    pub fn covers_key(&self, key: u32) -> bool {
        self.bits[(key >> 6) as usize] & (1u64 << (key & 63)) != 0
    }

    #[inline]
    fn set_key(&mut self, key: u32) {
        self.bits[(key >> 6) as usize] |= 1u64 << (key & 63);
    }

    #[inline]
    fn clear_key(&mut self, key: u32) {
        self.bits[(key >> 6) as usize] &= !(1u64 << (key & 63));
    }

    /// Canonical key of a raw (unscaled) coordinate tuple.
    #[inline]
    fn key_of_raw(&self, raw: &[u32; 5]) -> u32 {
        let p = self.p;
        let pivot = raw.iter().position(|&c| c != 0).expect("nonzero point");
        let scale = self.inv[raw[pivot] as usize];
        let mut key = 0u32;
        for &c in raw {
            key = key * p + ((u64::from(c) * u64::from(scale)) % u64::from(p)) as u32;
        }
        key
    }

    fn for_each_point_key(&self, l: &PluckerLine, mut f: impl FnMut(u32) -> bool) -> bool {
        let p = self.p;
        let (a, b) = spanning_points(l);
        if !f(self.key_of_raw(&a)) {
            return false;
        }
        let mut combo = [0u32; 5];
        for t in 0..p {
            for i in 0..5 {
                let v = u64::from(b[i]) + u64::from(t) * u64::from(a[i]);
                combo[i] = (v % u64::from(p)) as u32;
            }
            if !f(self.key_of_raw(&combo)) {
                return false;
            }
        }
        true
    }

    /// True iff any point of the line is covered. Early-exits on the first
    /// covered point; this is the candidate filter of the search.
    pub fn blocks_line(&self, l: &PluckerLine) -> bool {
        !self.for_each_point_key(l, |key| !self.covers_key(key))
    }

    fn cover_line(&mut self, l: &PluckerLine) {
        let keys = self.line_keys(l);
        for key in keys {
            self.set_key(key);
        }
    }

    fn uncover_line(&mut self, l: &PluckerLine) {
        let keys = self.line_keys(l);
        for key in keys {
            self.clear_key(key);
        }
    }

    fn line_keys(&self, l: &PluckerLine) -> Vec<u32> {
        let mut keys = Vec::with_capacity(self.p as usize + 1);
        self.for_each_point_key(l, |key| {
            keys.push(key);
            true
        });
        keys
    }
}

/// An ordered set of pairwise skew lines with its point-coverage index.
///
/// The coverage index is the skewness invariant: a line is admitted only if
/// none of its points is already covered, which is exactly skewness against
/// every member.
pub struct PartialSpread {
    q: Prime,
    lines: Vec<PluckerLine>,
    covered: CoverageIndex,
}

impl PartialSpread {
    pub fn new(q: Prime) -> Result<Self, SearchError> {
        Ok(PartialSpread {
            q,
            lines: Vec::new(),
            covered: CoverageIndex::new(q)?,
        })
    }

    pub fn from_lines(q: Prime, lines: &[PluckerLine]) -> Result<Self, SearchError> {
        let mut spread = PartialSpread::new(q)?;
        for l in lines {
            spread.try_add(*l)?;
        }
        Ok(spread)
    }

    #[inline]
    pub fn q(&self) -> Prime {
        self.q
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn lines(&self) -> &[PluckerLine] {
        &self.lines
    }

    pub fn coverage(&self) -> &CoverageIndex {
        &self.covered
    }

    pub fn contains(&self, l: &PluckerLine) -> bool {
        self.lines.contains(l)
    }

    /// Number of covered points; equals `len() * (q + 1)` by the skewness
    /// invariant.
    pub fn covered_points(&self) -> u64 {
        self.bits_set()
    }

    fn bits_set(&self) -> u64 {
        self.covered.bits.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    /// Adds a line, rejecting it if it meets any member. The error names
    /// the first conflicting member.
    pub fn try_add(&mut self, line: PluckerLine) -> Result<(), SearchError> {
        if self.covered.blocks_line(&line) {
            let conflict = self
                .lines
                .iter()
                .find(|m| crate::incidence::lines_meet(m, &line))
                .expect("a covered point comes from some member");
            return Err(SearchError::Conflict {
                candidate: line.serial(),
                conflict: conflict.serial(),
            });
        }
        self.covered.cover_line(&line);
        self.lines.push(line);
        Ok(())
    }

    /// Removes a member line and uncovers its points. Returns false if the
    /// line was not a member.
    pub fn remove(&mut self, line: &PluckerLine) -> bool {
        match self.lines.iter().position(|m| m == line) {
            Some(idx) => {
                self.lines.remove(idx);
                self.covered.uncover_line(line);
                true
            }
            None => false,
        }
    }

    /// Explicit O(n^2) pairwise check, independent of the coverage index.
    pub fn verify_pairwise_skew(&self) -> Result<(), SearchError> {
        for (i, a) in self.lines.iter().enumerate() {
            for b in &self.lines[i + 1..] {
                if crate::incidence::lines_meet(a, b) {
                    return Err(SearchError::Conflict {
                        candidate: b.serial(),
                        conflict: a.serial(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// The lowest-serial line through `x` that leaves the hyperplane and is
/// skew to every member of `current`. `None` when the exhaustive scan of
/// the q^3 candidates fails, which cannot happen while fewer than q^2
/// off-hyperplane members are present.
pub fn find_skew_line_through(
    x: &ProjectivePoint,
    current: &PartialSpread,
) -> Result<Option<PluckerLine>, SearchError> {
    let mut candidates: Vec<(LineSerial, PluckerLine)> = lines_through_point_off_hyperplane(x)?
        .into_iter()
        .map(|l| (l.serial(), l))
        .collect();
    candidates.sort_unstable_by_key(|(s, _)| *s);
    for (_, l) in candidates {
        if !current.coverage().blocks_line(&l) {
            return Ok(Some(l));
        }
    }
    Ok(None)
}

/// Failure report from a covering step: the point no candidate could
/// cover, and the lines already added this step.
#[derive(Debug, Clone)]
pub struct CoverFailure {
    pub stuck_point: ProjectivePoint,
    pub partial: Vec<PluckerLine>,
}

impl fmt::Display for CoverFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "no admissible line through {} after {} additions",
            self.stuck_point,
            self.partial.len()
        )
    }
}

/// Covers the q+1 points of a just-removed spread line with q+1 mutually
/// skew off-hyperplane lines, added to `spread` greedily in canonical point
/// order. On failure the partial additions are rolled back and reported;
/// `spread` is left exactly as on entry.
pub fn cover_removed_line(
    spread: &mut PartialSpread,
    removed: &Pg3Line,
) -> Result<Vec<PluckerLine>, CoverFailure> {
    let embedded = removed.embed();
    let mut added: Vec<PluckerLine> = Vec::with_capacity(spread.q().get() as usize + 1);
    for point in points_of_line(&embedded) {
        if spread.coverage().covers_key(point.key()) {
            continue;
        }
        let found = find_skew_line_through(&point, spread)
            .expect("removed spread lines live in the hyperplane");
        match found {
            Some(line) => {
                spread
                    .try_add(line)
                    .expect("candidate was filtered against the coverage index");
                added.push(line);
            }
            None => {
                for line in &added {
                    spread.remove(line);
                }
                return Err(CoverFailure {
                    stuck_point: point,
                    partial: added,
                });
            }
        }
    }
    Ok(added)
}

/// One completed step of the search.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub t: u32,
    pub removed: Pg3Line,
    pub added: Vec<LineSerial>,
    pub size_after: u64,
}

/// A step that could not be completed.
#[derive(Debug, Clone)]
pub struct FailureRecord {
    pub t: u32,
    pub removed: Pg3Line,
    pub stuck_point: ProjectivePoint,
    pub partial: Vec<LineSerial>,
}

impl fmt::Display for FailureRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "step {}: removed {} but found no admissible line through {} ({} of the needed lines added)",
            self.t,
            self.removed,
            self.stuck_point,
            self.partial.len()
        )
    }
}

/// Full record of a search run, serializable to the `t,n` CSV format and a
/// JSON summary.
#[derive(Debug, Clone)]
pub struct SearchTrace {
    pub q: u32,
    pub steps: Vec<StepRecord>,
    pub failures: Vec<FailureRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchSummary {
    pub q: u32,
    pub k_max_reached: u32,
    pub sizes: Vec<u64>,
    pub failures: Vec<String>,
}

impl SearchTrace {
    pub fn k_max_reached(&self) -> u32 {
        self.steps.last().map_or(0, |s| s.t)
    }

    pub fn sizes(&self) -> Vec<u64> {
        self.steps.iter().map(|s| s.size_after).collect()
    }

    /// CSV with header `t,n`, one row per added line in search order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,n\n");
        for step in &self.steps {
            for serial in &step.added {
                out.push_str(&format!("{},{}\n", step.t, serial));
            }
        }
        out
    }

    pub fn summary(&self) -> SearchSummary {
        SearchSummary {
            q: self.q,
            k_max_reached: self.k_max_reached(),
            sizes: self.sizes(),
            failures: self.failures.iter().map(FailureRecord::to_string).collect(),
        }
    }
}

/// A finished run: the trace plus the final line set (the last completed
/// partial spread; failed steps are rolled back).
pub struct SearchOutcome {
    pub trace: SearchTrace,
    pub spread: PartialSpread,
}

/// Runs the q-added construction from `start` (a spread of the hyperplane,
/// as PG(3,q) lines), removing lines in `removal_order` until `max_steps`
/// steps complete, the order is exhausted, or a step fails.
pub fn run_search(
    q: Prime,
    start: &[Pg3Line],
    removal_order: &[Pg3Line],
    max_steps: u32,
) -> Result<SearchOutcome, SearchError> {
    let embedded: Vec<PluckerLine> = start.iter().map(Pg3Line::embed).collect();
    let mut spread = PartialSpread::from_lines(q, &embedded)?;
    let mut trace = SearchTrace {
        q: q.get(),
        steps: Vec::new(),
        failures: Vec::new(),
    };
    let p = u64::from(q.get());
    let steps = (removal_order.len() as u32).min(max_steps);
    for t in 1..=steps {
        let removed = removal_order[(t - 1) as usize];
        let line = removed.embed();
        if !spread.remove(&line) {
            return Err(SearchError::RemovedLineNotMember {
                serial: line.serial(),
            });
        }
        match cover_removed_line(&mut spread, &removed) {
            Ok(added) => {
                let size_after = spread.len() as u64;
                debug_assert_eq!(added.len() as u64, p + 1);
                debug_assert_eq!(size_after, p * p + u64::from(t) * p + 1);
                trace.steps.push(StepRecord {
                    t,
                    removed,
                    added: added.iter().map(PluckerLine::serial).collect(),
                    size_after,
                });
            }
            Err(failure) => {
                spread
                    .try_add(line)
                    .expect("the removed line re-inserts after rollback");
                trace.failures.push(FailureRecord {
                    t,
                    removed,
                    stuck_point: failure.stuck_point,
                    partial: failure.partial.iter().map(PluckerLine::serial).collect(),
                });
                break;
            }
        }
    }
    Ok(SearchOutcome { trace, spread })
}

/// The lowest-serial line of PG(4,q) skew to every member, or `None` when
/// the spread is maximal.
///
/// A line is addable exactly when all of its q+1 points are uncovered, so
/// the scan sweeps serials in ascending order and rejects each line at its
/// first covered point. This is equivalent to the brute-force scan testing
/// every line against every member.
pub fn find_extension(spread: &PartialSpread) -> Option<PluckerLine> {
    enumerate_all(spread.q()).find(|l| !spread.coverage().blocks_line(l))
}

/// [`find_extension`] with the scan split across worker threads.
///
/// Ranges are scanned independently and the minimum hit serial wins, so the
/// result is identical to the sequential scan.
pub fn find_extension_threaded(spread: &PartialSpread, threads: usize) -> Option<PluckerLine> {
    if threads <= 1 {
        return find_extension(spread);
    }
    let q = spread.q();
    let total = line_count(q);
    let chunk = total.div_ceil(threads as u64);
    let best = std::sync::atomic::AtomicU64::new(u64::MAX);
    std::thread::scope(|scope| {
        for w in 0..threads as u64 {
            let start = w * chunk;
            let end = ((w + 1) * chunk).min(total);
            if start >= end {
                continue;
            }
            let best = &best;
            let coverage = spread.coverage();
            scope.spawn(move || {
                let iter = crate::codec::LineIter::starting_at(q, LineSerial(start))
                    .expect("chunk start in range");
                for (offset, line) in iter.enumerate() {
                    let n = start + offset as u64;
                    if n >= end || best.load(std::sync::atomic::Ordering::Relaxed) < n {
                        break;
                    }
                    if !coverage.blocks_line(&line) {
                        best.fetch_min(n, std::sync::atomic::Ordering::SeqCst);
                        break;
                    }
                }
            });
        }
    });
    match best.into_inner() {
        u64::MAX => None,
        n => Some(crate::codec::decode(q, LineSerial(n)).expect("hit serial in range")),
    }
}

/// True iff no line of PG(4,q) can be added.
pub fn is_maximal(spread: &PartialSpread) -> bool {
    find_extension(spread).is_none()
}

/// Point-count sanity value: PG(4,q) has `q^4 + q^3 + q^2 + q + 1` points.
pub fn pg4_point_count(q: Prime) -> u64 {
    point_count(q, 4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::decode;
    use crate::incidence::{line_in_hyperplane, lines_meet};
    use crate::pg3::find_spread_bruteforce;

    fn q(p: u64) -> Prime {
        Prime::new(p).unwrap()
    }

    fn embedded_spread(p: u64) -> (Prime, Vec<Pg3Line>, PartialSpread) {
        let f = q(p);
        let lines = find_spread_bruteforce(f).unwrap();
        let embedded: Vec<PluckerLine> = lines.iter().map(Pg3Line::embed).collect();
        let spread = PartialSpread::from_lines(f, &embedded).unwrap();
        (f, lines, spread)
    }

    #[test]
    fn coverage_index_rejects_meeting_lines() {
        let f = q(3);
        let mut spread = PartialSpread::new(f).unwrap();
        let a = decode(f, LineSerial(0)).unwrap();
        spread.try_add(a).unwrap();
        assert_eq!(spread.covered_points(), 4);
        // Line 1188 is the first type-VII line and meets line 0.
        let b = decode(f, LineSerial(1188)).unwrap();
        assert!(lines_meet(&a, &b));
        assert!(matches!(
            spread.try_add(b),
            Err(SearchError::Conflict { conflict: LineSerial(0), .. })
        ));
        assert!(spread.remove(&a));
        assert_eq!(spread.covered_points(), 0);
        spread.try_add(b).unwrap();
    }

    #[test]
    fn embedded_hyperplane_spread_is_maximal() {
        for p in [2u64, 3] {
            let (_, _, spread) = embedded_spread(p);
            assert!(is_maximal(&spread), "q={p}");
        }
    }

    #[test]
    fn single_line_is_extendable_with_witness() {
        let f = q(3);
        let mut spread = PartialSpread::new(f).unwrap();
        spread.try_add(decode(f, LineSerial(0)).unwrap()).unwrap();
        let witness = find_extension(&spread).expect("many skew lines exist");
        assert!(!lines_meet(&witness, &spread.lines()[0]));
        // The witness is the lowest-serial skew line.
        let naive = enumerate_all(f)
            .find(|l| !lines_meet(l, &spread.lines()[0]))
            .unwrap();
        assert_eq!(witness, naive);
    }

    #[test]
    fn threaded_extension_matches_sequential() {
        let f = q(3);
        let mut spread = PartialSpread::new(f).unwrap();
        spread.try_add(decode(f, LineSerial(5)).unwrap()).unwrap();
        spread.try_add(decode(f, LineSerial(1209)).unwrap()).unwrap();
        for threads in [2usize, 3, 8] {
            assert_eq!(
                find_extension_threaded(&spread, threads),
                find_extension(&spread)
            );
        }
        let (_, _, maximal) = embedded_spread(3);
        for threads in [2usize, 4] {
            assert_eq!(find_extension_threaded(&maximal, threads), None);
        }
    }

    #[test]
    fn guaranteed_steps_complete_q3() {
        let (f, lines, _) = embedded_spread(3);
        let outcome = run_search(f, &lines, &lines, 2).unwrap();
        assert_eq!(outcome.trace.failures.len(), 0);
        assert_eq!(outcome.trace.sizes(), vec![13, 16]);
        outcome.spread.verify_pairwise_skew().unwrap();
        for step in &outcome.trace.steps {
            assert_eq!(step.added.len(), 4);
            for serial in &step.added {
                let l = decode(f, *serial).unwrap();
                assert!(!line_in_hyperplane(&l));
                assert!(lines_meet(&l, &step.removed.embed()));
            }
        }
    }

    #[test]
    fn theorem_regime_allows_any_prefix_q3() {
        // Any removal order completes the first q-1 = 2 steps.
        let (f, lines, _) = embedded_spread(3);
        let mut reordered = lines.clone();
        reordered.reverse();
        let outcome = run_search(f, &lines, &reordered, 2).unwrap();
        assert_eq!(outcome.trace.k_max_reached(), 2);
        assert!(outcome.trace.failures.is_empty());
    }

    #[test]
    fn trace_csv_format() {
        let (f, lines, _) = embedded_spread(2);
        let outcome = run_search(f, &lines, &lines, 1).unwrap();
        let csv = outcome.trace.to_csv();
        let mut rows = csv.lines();
        assert_eq!(rows.next(), Some("t,n"));
        let first_rows: Vec<&str> = rows.collect();
        assert_eq!(first_rows.len(), 3);
        assert!(first_rows.iter().all(|r| r.starts_with("1,")));
    }

    #[test]
    fn removed_line_must_be_member() {
        let (f, lines, _) = embedded_spread(2);
        let stranger = Pg3Line::from_index(f, 3).unwrap();
        assert!(!lines.contains(&stranger));
        let result = run_search(f, &lines, &[stranger], 1);
        assert!(matches!(
            result,
            Err(SearchError::RemovedLineNotMember { .. })
        ));
    }

    #[test]
    fn search_never_emits_non_spread() {
        // Run q=2 to exhaustion; whatever completes must stay pairwise skew
        // with the exact point counts.
        let (f, lines, _) = embedded_spread(2);
        let outcome = run_search(f, &lines, &lines, u32::MAX).unwrap();
        outcome.spread.verify_pairwise_skew().unwrap();
        let n = outcome.spread.len() as u64;
        assert_eq!(outcome.spread.covered_points(), n * 3);
    }
}
