//! Built-in invariant battery.
//!
//! Cross-checks the codec and the incidence predicates against each other
//! and against closed-form counts: enumeration totals through two
//! independent formulas, encode/decode round trips, the incidence predicate
//! against the point-set oracle, and the meeting-count identity
//! `(q^3 + q^2 + q)(q + 1) + 1`.

use crate::codec::{decode, enumerate_all, line_count, line_count_gaussian, LineSerial};
use crate::field::{FieldError, Prime};
use crate::incidence::{lines_meet, points_of_line};
use crate::util::SplitMix64;

/// Outcome of one named check.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn pass(name: impl Into<String>, detail: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            passed: true,
            detail: detail.into(),
        }
    }

    fn fail(name: impl Into<String>, detail: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            passed: false,
            detail: detail.into(),
        }
    }
}

/// Number of lines meeting `l`, the line itself included.
pub fn meeting_count(q: Prime, serial: LineSerial) -> u64 {
    let fixed = decode(q, serial).expect("serial in range");
    enumerate_all(q).filter(|m| lines_meet(&fixed, m)).count() as u64
}

/// The closed form all meeting counts must equal.
pub fn expected_meeting_count(q: Prime) -> u64 {
    let p = u64::from(q.get());
    (p * p * p + p * p + p) * (p + 1) + 1
}

/// Runs the battery for every prime q <= `q_max`. Checks are deterministic;
/// sampled ones draw from a fixed-seed generator.
pub fn run_selftest(q_max: u64) -> Result<Vec<CheckResult>, FieldError> {
    let mut results = Vec::new();
    for p in (2..=q_max).filter(|&p| Prime::new(p).is_ok()) {
        let q = Prime::new(p)?;
        results.extend(selftest_for(q));
    }
    Ok(results)
}

fn selftest_for(q: Prime) -> Vec<CheckResult> {
    let p = q.get();
    let mut out = Vec::new();
    let count = line_count(q);

    // Enumeration total against both closed forms.
    let enumerated = enumerate_all(q).count() as u64;
    let gaussian = line_count_gaussian(q);
    if enumerated == count && enumerated == gaussian {
        out.push(CheckResult::pass(
            format!("q={p} line count"),
            format!("{enumerated} lines (both formulas agree)"),
        ));
    } else {
        out.push(CheckResult::fail(
            format!("q={p} line count"),
            format!("enumerated {enumerated}, type sum {count}, gaussian {gaussian}"),
        ));
    }

    // Round trip over every serial.
    let mut roundtrip_ok = true;
    for n in 0..count {
        let line = decode(q, LineSerial(n)).expect("serial in range");
        if line.serial() != LineSerial(n) {
            roundtrip_ok = false;
            out.push(CheckResult::fail(
                format!("q={p} round trip"),
                format!("decode({n}) re-encodes to {}", line.serial()),
            ));
            break;
        }
    }
    if roundtrip_ok {
        out.push(CheckResult::pass(
            format!("q={p} round trip"),
            format!("encode(decode(n)) = n for all {count} serials"),
        ));
    }

    // Incidence predicate vs point-set intersection.
    out.push(incidence_oracle_check(q));

    // Meeting-count identity on sampled lines.
    let expected = expected_meeting_count(q);
    let mut rng = SplitMix64::new(0x5eed_0000 + u64::from(p));
    let samples = 10;
    let mut bad = None;
    for _ in 0..samples {
        let n = LineSerial(rng.below(count));
        let got = meeting_count(q, n);
        if got != expected {
            bad = Some((n, got));
            break;
        }
    }
    match bad {
        None => out.push(CheckResult::pass(
            format!("q={p} meeting count"),
            format!("{samples} sampled lines each meet {expected} lines"),
        )),
        Some((n, got)) => out.push(CheckResult::fail(
            format!("q={p} meeting count"),
            format!("line {n} meets {got} lines, expected {expected}"),
        )),
    }

    out
}

fn incidence_oracle_check(q: Prime) -> CheckResult {
    let p = q.get();
    let count = line_count(q);
    let name = format!("q={p} incidence oracle");
    if p == 2 {
        // Exhaustive over all pairs.
        let all: Vec<_> = enumerate_all(q).collect();
        let points: Vec<_> = all.iter().map(points_of_line).collect();
        for i in 0..all.len() {
            for j in 0..all.len() {
                let by_points = points[i].iter().any(|pt| points[j].contains(pt));
                if lines_meet(&all[i], &all[j]) != by_points {
                    return CheckResult::fail(
                        name,
                        format!("predicate disagrees with point sets on pair ({i}, {j})"),
                    );
                }
            }
        }
        CheckResult::pass(name, format!("all {}^2 pairs agree with point sets", all.len()))
    } else {
        let samples = 20_000u64;
        let mut rng = SplitMix64::new(0x0bac_1e00 + u64::from(p));
        for _ in 0..samples {
            let a = decode(q, LineSerial(rng.below(count))).unwrap();
            let b = decode(q, LineSerial(rng.below(count))).unwrap();
            let pa = points_of_line(&a);
            let pb = points_of_line(&b);
            let by_points = pa.iter().any(|pt| pb.contains(pt));
            if lines_meet(&a, &b) != by_points {
                return CheckResult::fail(
                    name,
                    format!(
                        "predicate disagrees with point sets on ({}, {})",
                        a.serial(),
                        b.serial()
                    ),
                );
            }
        }
        CheckResult::pass(name, format!("{samples} sampled pairs agree with point sets"))
    }
}
