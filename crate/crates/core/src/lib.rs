//! Finite-geometry engine for maximal partial spreads of PG(4,q).
//!
//! The crate enumerates the lines of the four-dimensional projective space
//! over GF(q) in canonical Plücker coordinates, evaluates line incidence,
//! builds q-added maximal partial spreads by greedily re-covering removed
//! hyperplane spread lines, and certifies published spread solutions shipped
//! as data files.
//!
//! Modules, bottom up:
//!
//! * [`field`] — GF(p) residue arithmetic.
//! * [`codec`] — serial-number codec and enumeration of the lines of
//!   PG(4,q) as canonical Plücker 10-tuples.
//! * [`incidence`] — incidence predicates, point extraction, the
//!   hyperplane x4 = 0, and pencils of lines through a point.
//! * [`pg3`] — PG(3,q) lines, shipped spread tables, the fallback
//!   backtracking spread finder, and the hyperplane embedding.
//! * [`search`] — the q-added construction, coverage bitsets, and the
//!   maximality scan.
//! * [`verify`] — certification of published `(t, n)` result data.
//! * [`selftest`] — cross-checking invariant battery.

pub mod codec;
pub mod field;
pub mod incidence;
pub mod pg3;
pub mod search;
pub mod selftest;
pub mod util;
pub mod verify;

pub use codec::{
    canonicalize, decode, enumerate_all, line_count, line_count_gaussian, CodecError, LineSerial,
    LineTable, PluckerLine,
};
pub use field::{FieldElement, FieldError, Prime};
pub use incidence::{
    line_in_hyperplane, line_through, lines_meet, lines_through_point_off_hyperplane,
    points_of_line, GeometryError, ProjectivePoint,
};
pub use pg3::{build_spread, find_spread_bruteforce, Pg3Line, SpreadError, SpreadTable};
pub use search::{
    cover_removed_line, find_extension, find_extension_threaded, find_skew_line_through,
    is_maximal, run_search, PartialSpread, SearchError, SearchOutcome, SearchTrace,
};
pub use verify::{certify, infer_removal_order, Certificate, PaperResultSet, VerifyError};
