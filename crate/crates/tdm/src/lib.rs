//! Termination analysis by reuse of already-justified termination schemes.
//!
//! The pipeline, bottom to top:
//!
//! * [`term`] — first-order symbolic terms: parsing, canonical printing, a
//!   total term order, substitution and one-way matching.
//! * [`obligations`] — function definitions, ruler extraction, the per-call
//!   termination proof goals (clause lists), plus a bounded evaluator used as
//!   a falsification oracle.
//! * [`normalize`] — clause-list simplification under a small fixed rewrite
//!   theory, canonicalization into storable schemes (slot variables and stub
//!   functions), and the clause subsumption test.
//! * [`database`] — mining a corpus of definitions into a deduplicated
//!   database of termination schemes grouped by justification, with a
//!   line-oriented persistence format.
//! * [`engine`] — the two-pass subsumption search that reuses a stored
//!   measure for a new definition, certificate emission and verification,
//!   and incremental database extension.
//!
//! The `tdm` binary exposes all of this as `mine`, `stats`, `prove`,
//! `verify` and `check` subcommands.

pub mod database;
pub mod engine;
pub mod normalize;
pub mod obligations;
pub mod term;

pub use database::{Database, InsertAction, Justification, Origin, Provenance, SchemeEntry};
pub use engine::{Certificate, SearchConfig, SearchOutcome, SearchResult, SessionSet, Verdict};
pub use normalize::{CanonicalScheme, RewriteTrace, SubsumptionWitness, THEORY_VERSION};
pub use obligations::{Clause, ClauseList, FunctionDef, Measure};
pub use term::{Substitution, SymbolId, Term, Value};
