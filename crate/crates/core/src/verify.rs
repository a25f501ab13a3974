//! Certification of published q-added spread solutions.
//!
//! A result file lists pairs `(t, n)`: at step `t` the line with serial `n`
//! was added after the t-th spread line of the hyperplane was removed. The
//! removal order is not part of the data; it is inferred, step by step, as
//! the unique surviving spread line met by all q+1 lines added at that step.
//! Certification then replays the construction and checks every claim:
//! added lines leave the hyperplane, each step covers its removed line, the
//! final set is pairwise skew of the right size, and (optionally) maximal
//! under a full scan of all lines.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::codec::{decode, line_count, CodecError, LineSerial, PluckerLine};
use crate::field::Prime;
use crate::incidence::{line_in_hyperplane, lines_meet, points_of_line};
use crate::pg3::Pg3Line;
use crate::search::{find_extension_threaded, PartialSpread, SearchError};

#[derive(Debug, Error)]
pub enum VerifyError {
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
    #[error("result set is empty")]
    Empty,
    #[error("step {t} lists {found} serials, expected q+1 = {expected}")]
    StepMultiplicity { t: u32, found: u64, expected: u64 },
    #[error("serial {n} at step {t} out of range: PG(4,{q}) has {count} lines")]
    SerialOutOfRange { t: u32, n: u64, q: u32, count: u64 },
    #[error("requested step {requested} exceeds the set's k_max = {k_max}")]
    StepOutOfRange { requested: u32, k_max: u32 },
    #[error("starting spread is invalid: {0}")]
    BadStartingSpread(#[source] SearchError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("removal order inference failed at step {t}: {found} candidate lines")]
    Inference { t: u32, found: usize },
}

/// A parsed and structurally validated `(t, n)` result set.
#[derive(Clone, Debug)]
pub struct PaperResultSet {
    q: Prime,
    pairs: Vec<(u32, LineSerial)>,
    k_max: u32,
}

impl PaperResultSet {
    /// Loads a `t,n` CSV file.
    pub fn load(q: Prime, path: &Path) -> Result<Self, VerifyError> {
        let text = std::fs::read_to_string(path).map_err(|source| VerifyError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let malformed = |line: usize, msg: String| VerifyError::Malformed {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut pairs = Vec::new();
        for (idx, row) in text.lines().enumerate() {
            if idx == 0 {
                if row.trim() != "t,n" {
                    return Err(malformed(1, format!("expected header `t,n`, found `{row}`")));
                }
                continue;
            }
            if row.trim().is_empty() {
                continue;
            }
            let (t_str, n_str) = row
                .split_once(',')
                .ok_or_else(|| malformed(idx + 1, format!("expected `t,n`, found `{row}`")))?;
            let t: u32 = t_str
                .trim()
                .parse()
                .map_err(|e| malformed(idx + 1, format!("bad step `{t_str}`: {e}")))?;
            let n: u64 = n_str
                .trim()
                .parse()
                .map_err(|e| malformed(idx + 1, format!("bad serial `{n_str}`: {e}")))?;
            pairs.push((t, n));
        }
        PaperResultSet::from_pairs(q, pairs)
    }

    /// Validates multiplicities and serial ranges: steps 1..=k_max must each
    /// appear exactly q+1 times, every serial below the line count.
    pub fn from_pairs(q: Prime, pairs: Vec<(u32, u64)>) -> Result<Self, VerifyError> {
        if pairs.is_empty() {
            return Err(VerifyError::Empty);
        }
        let count = line_count(q);
        let k_max = pairs.iter().map(|&(t, _)| t).max().unwrap();
        let per_step = u64::from(q.get()) + 1;
        let mut multiplicity = vec![0u64; k_max as usize + 1];
        for &(t, n) in &pairs {
            if t == 0 || t > k_max {
                return Err(VerifyError::StepMultiplicity {
                    t,
                    found: 0,
                    expected: per_step,
                });
            }
            if n >= count {
                return Err(VerifyError::SerialOutOfRange {
                    t,
                    n,
                    q: q.get(),
                    count,
                });
            }
            multiplicity[t as usize] += 1;
        }
        for t in 1..=k_max {
            if multiplicity[t as usize] != per_step {
                return Err(VerifyError::StepMultiplicity {
                    t,
                    found: multiplicity[t as usize],
                    expected: per_step,
                });
            }
        }
        Ok(PaperResultSet {
            q,
            pairs: pairs
                .into_iter()
                .map(|(t, n)| (t, LineSerial(n)))
                .collect(),
            k_max,
        })
    }

    pub fn q(&self) -> Prime {
        self.q
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    pub fn pairs(&self) -> &[(u32, LineSerial)] {
        &self.pairs
    }

    /// Serials added at step `t`, in file order.
    pub fn step_serials(&self, t: u32) -> Vec<LineSerial> {
        self.pairs
            .iter()
            .filter(|&&(s, _)| s == t)
            .map(|&(_, n)| n)
            .collect()
    }

    /// Claimed size after `t` steps: `q^2 + t*q + 1`.
    pub fn expected_size(&self, t: u32) -> u64 {
        let p = u64::from(self.q.get());
        p * p + u64::from(t) * p + 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckStatus::Pass => write!(f, "pass"),
            CheckStatus::Fail => write!(f, "FAIL"),
            CheckStatus::Skipped => write!(f, "skipped"),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Checks {
    pub skew: CheckStatus,
    pub off_hyperplane: CheckStatus,
    pub coverage: CheckStatus,
    pub maximal: CheckStatus,
}

/// Outcome of certifying a result set up to some step.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub q: u32,
    pub upto_t: u32,
    /// Lines in the reconstructed set (skew violators excluded).
    pub size: u64,
    pub expected_size: u64,
    pub checks: Checks,
    pub violations: Vec<String>,
    /// Embedded serials of the inferred removed lines, in step order.
    pub removed_serials: Vec<u64>,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
            && self.size == self.expected_size
            && self.checks.skew != CheckStatus::Fail
            && self.checks.off_hyperplane != CheckStatus::Fail
            && self.checks.coverage != CheckStatus::Fail
            && self.checks.maximal != CheckStatus::Fail
    }
}

/// The unique surviving spread line met by every line of `added`.
fn infer_step_removal(
    surviving: &[(Pg3Line, PluckerLine)],
    added: &[PluckerLine],
) -> Result<usize, Vec<usize>> {
    let hits: Vec<usize> = surviving
        .iter()
        .enumerate()
        .filter(|(_, (_, embedded))| added.iter().all(|a| lines_meet(a, embedded)))
        .map(|(i, _)| i)
        .collect();
    match hits.as_slice() {
        [single] => Ok(*single),
        _ => Err(hits),
    }
}

/// Infers the removal order encoded in a result set: for each step, the
/// unique surviving spread line met by all of its added lines.
pub fn infer_removal_order(
    rs: &PaperResultSet,
    spread: &[Pg3Line],
) -> Result<Vec<Pg3Line>, VerifyError> {
    let mut surviving: Vec<(Pg3Line, PluckerLine)> =
        spread.iter().map(|l| (*l, l.embed())).collect();
    let mut order = Vec::with_capacity(rs.k_max() as usize);
    for t in 1..=rs.k_max() {
        let added: Vec<PluckerLine> = rs
            .step_serials(t)
            .into_iter()
            .map(|n| decode(rs.q(), n))
            .collect::<Result<_, _>>()?;
        match infer_step_removal(&surviving, &added) {
            Ok(idx) => order.push(surviving.remove(idx).0),
            Err(hits) => {
                return Err(VerifyError::Inference {
                    t,
                    found: hits.len(),
                })
            }
        }
    }
    Ok(order)
}

/// Replays and checks a result set through step `upto_t`.
///
/// Checks, in order: (a) every added line leaves the hyperplane; (b) each
/// step's q+1 lines meet exactly one common surviving spread line, which is
/// taken as that step's removed line; (c) they cover all q+1 of its points;
/// (d) the assembled set is pairwise skew with size `q^2 + upto_t*q + 1`;
/// (e) optionally, the set is maximal under a full scan. Failed checks
/// become named violations rather than early exits, except that a failed
/// removal inference ends the replay (later steps have no defined state).
pub fn certify(
    rs: &PaperResultSet,
    upto_t: u32,
    spread: &[Pg3Line],
    check_maximal: bool,
    threads: usize,
) -> Result<Certificate, VerifyError> {
    if upto_t > rs.k_max() {
        return Err(VerifyError::StepOutOfRange {
            requested: upto_t,
            k_max: rs.k_max(),
        });
    }
    let q = rs.q();
    let embedded: Vec<PluckerLine> = spread.iter().map(Pg3Line::embed).collect();
    let mut current =
        PartialSpread::from_lines(q, &embedded).map_err(VerifyError::BadStartingSpread)?;
    let mut surviving: Vec<(Pg3Line, PluckerLine)> = spread
        .iter()
        .zip(embedded.iter())
        .map(|(l, e)| (*l, *e))
        .collect();

    let mut violations: Vec<String> = Vec::new();
    let mut checks = Checks {
        skew: CheckStatus::Pass,
        off_hyperplane: CheckStatus::Pass,
        coverage: CheckStatus::Pass,
        maximal: CheckStatus::Skipped,
    };
    let mut removed_serials = Vec::new();

    'steps: for t in 1..=upto_t {
        let serials = rs.step_serials(t);
        let mut added = Vec::with_capacity(serials.len());
        for n in serials {
            added.push((n, decode(q, n)?));
        }

        // (a) added lines leave the hyperplane
        for (n, line) in &added {
            if line_in_hyperplane(line) {
                checks.off_hyperplane = CheckStatus::Fail;
                violations.push(format!("step {t}: added line {n} lies in the hyperplane"));
            }
        }

        // (b) unique common surviving spread line
        let lines_only: Vec<PluckerLine> = added.iter().map(|&(_, l)| l).collect();
        let removed = match infer_step_removal(&surviving, &lines_only) {
            Ok(idx) => {
                let entry = surviving.remove(idx);
                current.remove(&entry.1);
                removed_serials.push(entry.1.serial().0);
                Some(entry)
            }
            Err(hits) => {
                checks.coverage = CheckStatus::Fail;
                violations.push(format!(
                    "step {t}: added lines meet {} common surviving spread lines, expected exactly 1",
                    hits.len()
                ));
                None
            }
        };

        // (c) the added lines cover every point of the removed line
        if let Some((_, removed_line)) = &removed {
            let targets = points_of_line(removed_line);
            for point in &targets {
                let hit = added
                    .iter()
                    .any(|(_, l)| points_of_line(l).contains(point));
                if !hit {
                    checks.coverage = CheckStatus::Fail;
                    violations.push(format!(
                        "step {t}: point {point} of the removed line {} is not covered",
                        removed_line.serial()
                    ));
                }
            }
        }

        // (d) extend the set, catching skew conflicts
        for (n, line) in &added {
            if let Err(SearchError::Conflict { conflict, .. }) = current.try_add(*line) {
                checks.skew = CheckStatus::Fail;
                violations.push(format!(
                    "step {t}: added line {n} meets member {conflict}"
                ));
            }
        }

        if removed.is_none() {
            // Without a removal the replay state is undefined from here on.
            break 'steps;
        }
    }

    let expected_size = rs.expected_size(upto_t);
    let size = current.len() as u64;
    if size != expected_size {
        violations.push(format!(
            "reconstructed set has {size} lines, expected {expected_size}"
        ));
    }

    if check_maximal {
        if violations.is_empty() {
            match find_extension_threaded(&current, threads) {
                None => checks.maximal = CheckStatus::Pass,
                Some(witness) => {
                    checks.maximal = CheckStatus::Fail;
                    violations.push(format!(
                        "set is not maximal: line {} is skew to every member",
                        witness.serial()
                    ));
                }
            }
        } else {
            // A broken reconstruction has no meaningful maximality status.
            checks.maximal = CheckStatus::Skipped;
        }
    }

    Ok(Certificate {
        q: q.get(),
        upto_t,
        size,
        expected_size,
        checks,
        violations,
        removed_serials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: u64) -> Prime {
        Prime::new(p).unwrap()
    }

    fn q3_pairs() -> Vec<(u32, u64)> {
        vec![
            (1, 1188),
            (1, 980),
            (1, 976),
            (1, 737),
            (2, 1159),
            (2, 968),
            (2, 931),
            (2, 894),
            (3, 708),
            (3, 670),
            (3, 607),
            (3, 78),
            (4, 640),
            (4, 552),
            (4, 461),
            (4, 107),
        ]
    }

    fn q3_spread() -> Vec<Pg3Line> {
        let f = q(3);
        let mut lines: Vec<Pg3Line> = [0u64, 12, 24, 29, 41, 53, 55, 67, 79]
            .iter()
            .map(|&i| Pg3Line::from_index(f, i).unwrap())
            .collect();
        lines.push(Pg3Line::closing_line(f));
        lines
    }

    #[test]
    fn structural_validation() {
        let rs = PaperResultSet::from_pairs(q(3), q3_pairs()).unwrap();
        assert_eq!(rs.k_max(), 4);
        assert_eq!(rs.pairs().len(), 16);
        assert_eq!(rs.step_serials(1), vec![LineSerial(1188), LineSerial(980), LineSerial(976), LineSerial(737)]);
        assert_eq!(rs.expected_size(4), 22);

        // Truncated data: step 4 incomplete.
        let mut truncated = q3_pairs();
        truncated.pop();
        assert!(matches!(
            PaperResultSet::from_pairs(q(3), truncated),
            Err(VerifyError::StepMultiplicity { t: 4, found: 3, expected: 4 })
        ));

        // Serial out of range.
        let mut bad = q3_pairs();
        bad[0].1 = 1210;
        assert!(matches!(
            PaperResultSet::from_pairs(q(3), bad),
            Err(VerifyError::SerialOutOfRange { n: 1210, .. })
        ));

        assert!(matches!(
            PaperResultSet::from_pairs(q(3), vec![]),
            Err(VerifyError::Empty)
        ));
    }

    #[test]
    fn certify_full_q3() {
        let rs = PaperResultSet::from_pairs(q(3), q3_pairs()).unwrap();
        let cert = certify(&rs, 4, &q3_spread(), true, 1).unwrap();
        assert!(cert.passed(), "violations: {:?}", cert.violations);
        assert_eq!(cert.size, 22);
        assert_eq!(cert.checks.maximal, CheckStatus::Pass);
        assert_eq!(cert.removed_serials.len(), 4);
    }

    #[test]
    fn certify_prefix_q3() {
        let rs = PaperResultSet::from_pairs(q(3), q3_pairs()).unwrap();
        let cert = certify(&rs, 2, &q3_spread(), true, 1).unwrap();
        assert!(cert.passed(), "violations: {:?}", cert.violations);
        assert_eq!(cert.size, 16);
    }

    #[test]
    fn inferred_removal_order_is_distinct_spread_lines() {
        let rs = PaperResultSet::from_pairs(q(3), q3_pairs()).unwrap();
        let spread = q3_spread();
        let order = infer_removal_order(&rs, &spread).unwrap();
        assert_eq!(order.len(), 4);
        let mut seen = std::collections::HashSet::new();
        for line in &order {
            assert!(spread.contains(line));
            assert!(seen.insert(*line.raw()));
        }
    }

    #[test]
    fn perturbed_serial_is_detected() {
        let mut pairs = q3_pairs();
        pairs[0].1 = 1189;
        let rs = PaperResultSet::from_pairs(q(3), pairs).unwrap();
        let cert = certify(&rs, 4, &q3_spread(), true, 1).unwrap();
        assert!(!cert.passed());
        assert!(!cert.violations.is_empty());
    }

    #[test]
    fn certify_rejects_out_of_range_step() {
        let rs = PaperResultSet::from_pairs(q(3), q3_pairs()).unwrap();
        assert!(matches!(
            certify(&rs, 5, &q3_spread(), false, 1),
            Err(VerifyError::StepOutOfRange { requested: 5, k_max: 4 })
        ));
    }
}
