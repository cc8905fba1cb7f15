//! The termination-scheme database.
//!
//! Entries are canonicalized, simplified clause lists grouped by their
//! *justification* — the canonical measure term plus the (single supported)
//! well-founded relation. Within a group, subsumption keeps the database
//! irredundant: inserting a scheme already covered by a stored entry only
//! appends a contributor, and inserting a strictly stronger scheme replaces
//! every entry it covers.
//!
//! Mining validates each candidate theorem with a small structural checker
//! before anything is stored; definitions the checker cannot justify are
//! rejected (with a falsifier verdict in the report), never trusted.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::normalize::{
    canonicalize, simplify_clause_list, CanonError, CanonicalScheme, THEORY_VERSION,
};
use crate::obligations::{
    defun_from_sexp, falsify, measure_conjecture, Clause, DefError, FunctionDef, Measure, RELATION,
};
use crate::term::parse::read_spanned_forms;
use crate::term::{parse_terms, SymbolId, Term};

pub const FORMAT_VERSION: u32 = 1;

/// The grouping key of stored schemes: a canonical measure over slot
/// variables, compared with `nat<`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Justification {
    pub measure: Term,
}

impl Justification {
    pub fn new(measure: Term) -> Justification {
        Justification { measure }
    }

    pub fn relation(&self) -> &'static str {
        RELATION
    }
}

impl Ord for Justification {
    fn cmp(&self, other: &Justification) -> Ordering {
        self.measure.cmp(&other.measure)
    }
}

impl PartialOrd for Justification {
    fn partial_cmp(&self, other: &Justification) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Justification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.measure)
    }
}

/// Where a scheme's contributing functions came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Session,
    Book(String),
}

impl Origin {
    pub fn book_path(&self) -> Option<&str> {
        match self {
            Origin::Book(p) => Some(p),
            Origin::Session => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub origin: Origin,
    /// Functions sharing this scheme, in first-seen order, duplicate-free.
    pub contributors: Vec<SymbolId>,
}

impl Provenance {
    fn add_contributor(&mut self, name: SymbolId) {
        if !self.contributors.contains(&name) {
            self.contributors.push(name);
        }
    }
}

/// One stored termination scheme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeEntry {
    pub id: u64,
    pub scheme: CanonicalScheme,
    pub justification: Justification,
    pub provenance: Provenance,
    pub representative: SymbolId,
}

#[derive(Debug, Error)]
pub enum DbError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("theory version mismatch: file has `{found}`, this build requires `{required}`")]
    TheoryMismatch { found: String, required: String },
    #[error("duplicate function name `{0}` in corpus")]
    DuplicateName(SymbolId),
    #[error(transparent)]
    Def(#[from] DefError),
    #[error(transparent)]
    Canon(#[from] CanonError),
}

fn format_err(line: usize, msg: impl Into<String>) -> DbError {
    DbError::Format {
        line,
        msg: msg.into(),
    }
}

/// Result of inserting a scheme entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InsertAction {
    Added(u64),
    /// An existing entry already covers the new scheme; contributors were
    /// appended to it.
    Skipped {
        into: u64,
    },
    /// The new scheme covers (and removes) these existing entries.
    Replaced {
        new_id: u64,
        removed: Vec<u64>,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stats {
    pub entries: usize,
    pub functions: usize,
    pub groups: usize,
    pub per_group: Vec<(Term, usize)>,
}

/// The scheme database. Mutation is single-writer (mining, extension);
/// after that the value is immutable and safe to search from any number of
/// readers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Database {
    theory_version: String,
    groups: BTreeMap<Justification, Vec<SchemeEntry>>,
    next_id: u64,
}

impl Default for Database {
    fn default() -> Database {
        Database::new()
    }
}

impl Database {
    pub fn new() -> Database {
        Database {
            theory_version: THEORY_VERSION.to_string(),
            groups: BTreeMap::new(),
            next_id: 1,
        }
    }

    pub fn theory_version(&self) -> &str {
        &self.theory_version
    }

    pub fn groups(&self) -> impl Iterator<Item = (&Justification, &[SchemeEntry])> {
        self.groups.iter().map(|(j, es)| (j, es.as_slice()))
    }

    pub fn entries(&self) -> impl Iterator<Item = &SchemeEntry> {
        self.groups.values().flatten()
    }

    pub fn entry(&self, id: u64) -> Option<&SchemeEntry> {
        self.entries().find(|e| e.id == id)
    }

    pub fn group(&self, j: &Justification) -> &[SchemeEntry] {
        self.groups.get(j).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_empty(&self) -> bool {
        self.groups.values().all(Vec::is_empty)
    }

    pub fn stats(&self) -> Stats {
        let mut per_group = Vec::new();
        let mut entries = 0;
        let mut functions = 0;
        for (j, es) in &self.groups {
            if es.is_empty() {
                continue;
            }
            per_group.push((j.measure.clone(), es.len()));
            entries += es.len();
            functions += es
                .iter()
                .map(|e| e.provenance.contributors.len())
                .sum::<usize>();
        }
        Stats {
            entries,
            functions,
            groups: per_group.len(),
            per_group,
        }
    }

    /// Inserts a scheme under subsumption dedup. The entry's `id` field is
    /// ignored; ids are assigned by the database.
    pub fn insert_entry(&mut self, mut e: SchemeEntry) -> Result<InsertAction, DbError> {
        if self.theory_version != THEORY_VERSION {
            return Err(DbError::TheoryMismatch {
                found: self.theory_version.clone(),
                required: THEORY_VERSION.to_string(),
            });
        }
        let group = self.groups.entry(e.justification.clone()).or_default();

        for existing in group.iter_mut() {
            if existing.scheme.covers(&e.scheme) {
                for c in e.provenance.contributors {
                    existing.provenance.add_contributor(c);
                }
                return Ok(InsertAction::Skipped { into: existing.id });
            }
        }

        let mut removed = Vec::new();
        let mut migrated = Vec::new();
        group.retain(|existing| {
            if e.scheme.covers(&existing.scheme) {
                removed.push(existing.id);
                migrated.extend(existing.provenance.contributors.iter().cloned());
                false
            } else {
                true
            }
        });
        for c in migrated {
            e.provenance.add_contributor(c);
        }

        e.id = self.next_id;
        self.next_id += 1;
        let id = e.id;
        group.push(e);
        Ok(if removed.is_empty() {
            InsertAction::Added(id)
        } else {
            InsertAction::Replaced {
                new_id: id,
                removed,
            }
        })
    }

    /// Canonical textual rendering; equal databases render byte-identically.
    pub fn render(&self) -> String {
        let stats = self.stats();
        let mut out = String::new();
        out.push_str(&format!("format {}\n", FORMAT_VERSION));
        out.push_str(&format!("theory {}\n", self.theory_version));
        out.push_str(&format!("entries {}\n", stats.entries));
        out.push_str(&format!("functions {}\n", stats.functions));
        for entries in self.groups.values() {
            for e in entries {
                out.push_str(&format!("entry {}\n", e.id));
                out.push_str(&format!("measure {}\n", e.justification.measure));
                match &e.provenance.origin {
                    Origin::Session => out.push_str("origin session\n"),
                    Origin::Book(p) => out.push_str(&format!("origin book {}\n", p)),
                }
                let names = e
                    .provenance
                    .contributors
                    .iter()
                    .map(SymbolId::as_str)
                    .collect::<Vec<_>>()
                    .join(" ");
                out.push_str(&format!("contributors {}\n", names));
                out.push_str(&format!("representative {}\n", e.representative));
                for c in &e.scheme.clauses {
                    out.push_str(&format!("clause {}\n", c));
                }
            }
        }
        out
    }

    /// SHA-256 of the canonical rendering, in lowercase hex.
    pub fn digest(&self) -> String {
        hex_digest(&self.render())
    }

    pub fn save(&self, path: &Path) -> Result<(), DbError> {
        std::fs::write(path, self.render())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Database, DbError> {
        let text = std::fs::read_to_string(path)?;
        Database::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Database, DbError> {
        let mut lines = text.lines().enumerate().peekable();

        let mut expect_header = |key: &str| -> Result<String, DbError> {
            match lines.next() {
                Some((i, line)) => {
                    let rest = line
                        .strip_prefix(key)
                        .and_then(|r| r.strip_prefix(' ').or(Some(r).filter(|r| r.is_empty())))
                        .ok_or_else(|| format_err(i + 1, format!("expected `{} ...`", key)))?;
                    Ok(rest.trim().to_string())
                }
                None => Err(format_err(0, format!("missing `{}` header", key))),
            }
        };

        let format = expect_header("format")?;
        if format != FORMAT_VERSION.to_string() {
            return Err(format_err(1, format!("unsupported format `{}`", format)));
        }
        let theory = expect_header("theory")?;
        if theory != THEORY_VERSION {
            return Err(DbError::TheoryMismatch {
                found: theory,
                required: THEORY_VERSION.to_string(),
            });
        }
        let entries_decl: usize = expect_header("entries")?
            .parse()
            .map_err(|_| format_err(3, "bad entries count"))?;
        let functions_decl: usize = expect_header("functions")?
            .parse()
            .map_err(|_| format_err(4, "bad functions count"))?;

        let mut db = Database::new();
        let mut seen_ids = BTreeSet::new();

        while let Some((i, line)) = lines.next() {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let id: u64 = line
                .strip_prefix("entry ")
                .ok_or_else(|| format_err(lineno, "expected `entry <id>`"))?
                .trim()
                .parse()
                .map_err(|_| format_err(lineno, "bad entry id"))?;
            if !seen_ids.insert(id) {
                return Err(format_err(lineno, format!("duplicate entry id {}", id)));
            }

            let mut field = |key: &str| -> Result<(usize, String), DbError> {
                match lines.next() {
                    Some((i, line)) => {
                        let rest = line
                            .strip_prefix(key)
                            .and_then(|r| r.strip_prefix(' '))
                            .ok_or_else(|| format_err(i + 1, format!("expected `{} ...`", key)))?;
                        Ok((i + 1, rest.trim().to_string()))
                    }
                    None => Err(format_err(0, format!("missing `{}` line", key))),
                }
            };

            let (mline, measure_src) = field("measure")?;
            let measure = crate::term::parse_term(&measure_src)
                .map_err(|e| format_err(mline, format!("bad measure: {}", e)))?;
            let (oline, origin_src) = field("origin")?;
            let origin = if origin_src == "session" {
                Origin::Session
            } else if let Some(p) = origin_src.strip_prefix("book ") {
                let p = p.trim();
                if p.is_empty() {
                    return Err(format_err(oline, "book origin requires a path"));
                }
                Origin::Book(p.to_string())
            } else {
                return Err(format_err(
                    oline,
                    "origin must be `session` or `book <path>`",
                ));
            };
            let (_, contributors_src) = field("contributors")?;
            let contributors: Vec<SymbolId> = contributors_src
                .split_whitespace()
                .map(SymbolId::new)
                .collect();
            if contributors.is_empty() {
                return Err(format_err(lineno, "entry has no contributors"));
            }
            let (_, representative_src) = field("representative")?;
            let representative = SymbolId::new(&representative_src);

            let mut clauses = Vec::new();
            while let Some((_, line)) = lines.peek() {
                if !line.starts_with("clause") {
                    break;
                }
                let (cline, line) = lines.next().unwrap();
                let rest = line.strip_prefix("clause ").unwrap_or("");
                let lits = parse_terms(rest)
                    .map_err(|e| format_err(cline + 1, format!("bad clause: {}", e)))?;
                if lits.is_empty() {
                    return Err(format_err(cline + 1, "empty clause"));
                }
                clauses.push(Clause::new(lits));
            }

            let slot_count = {
                let mut vars = BTreeSet::new();
                for c in &clauses {
                    for l in c.literals() {
                        l.collect_vars(&mut vars);
                    }
                }
                vars.len()
            };
            let entry = SchemeEntry {
                id,
                scheme: CanonicalScheme {
                    clauses,
                    slot_count,
                },
                justification: Justification::new(measure),
                provenance: Provenance {
                    origin,
                    contributors,
                },
                representative,
            };
            db.next_id = db.next_id.max(id + 1);
            db.groups
                .entry(entry.justification.clone())
                .or_default()
                .push(entry);
        }

        for group in db.groups.values_mut() {
            group.sort_by_key(|e| e.id);
        }
        let stats = db.stats();
        if stats.entries != entries_decl || stats.functions != functions_decl {
            return Err(format_err(
                3,
                format!(
                    "header counters ({}/{}) disagree with contents ({}/{})",
                    entries_decl, functions_decl, stats.entries, stats.functions
                ),
            ));
        }
        Ok(db)
    }
}

pub fn hex_digest(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{:02x}", b))
        .collect()
}

/// Verdict of the structural decrease checker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructuralVerdict {
    /// Rule (a): the measured argument is a nonempty `car`/`cdr` chain of a
    /// variable `v` and the hypotheses include `(consp v)`.
    ProvenChain,
    /// Rule (b): the measured argument is `(- v 1)` and the hypotheses
    /// include `(not (zp v))`.
    ProvenMinusOne,
    Unknown,
}

impl StructuralVerdict {
    pub fn is_proven(self) -> bool {
        !matches!(self, StructuralVerdict::Unknown)
    }

    pub fn rule_name(self) -> &'static str {
        match self {
            StructuralVerdict::ProvenChain => "a",
            StructuralVerdict::ProvenMinusOne => "b",
            StructuralVerdict::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructuralError {
    #[error("clause has {0} decrease literals of shape (< m (acl2-count v)), expected exactly 1")]
    DecreaseCount(usize),
}

fn decrease_shape(lit: &Term) -> Option<(&Term, &SymbolId)> {
    if let Term::App(h, args) = lit {
        if h.as_str() == "<" {
            if let Term::App(g, margs) = &args[1] {
                if g.as_str() == "acl2-count" {
                    if let Term::Var(v) = &margs[0] {
                        return Some((&args[0], v));
                    }
                }
            }
        }
    }
    None
}

fn negate(lit: &Term) -> Term {
    match lit {
        Term::App(h, args) if h.as_str() == "not" => args[0].clone(),
        _ => Term::app("not", vec![lit.clone()]),
    }
}

/// The trusted validator behind mining: proves per-clause measure decrease
/// by two structural rules, or answers `Unknown`.
pub fn structural_decrease_check(c: &Clause) -> Result<StructuralVerdict, StructuralError> {
    let decreases: Vec<(&Term, &SymbolId)> =
        c.literals().iter().filter_map(decrease_shape).collect();
    if decreases.len() != 1 {
        return Err(StructuralError::DecreaseCount(decreases.len()));
    }
    let (lhs, v) = decreases[0];
    let decrease_lit = c
        .literals()
        .iter()
        .find(|l| decrease_shape(l).is_some())
        .unwrap();
    let hyps: Vec<Term> = c
        .literals()
        .iter()
        .filter(|l| *l != decrease_lit)
        .map(negate)
        .collect();

    // Rule (a): lhs = (acl2-count d), d a nonempty car/cdr chain on v.
    if let Term::App(h, args) = lhs {
        if h.as_str() == "acl2-count" {
            let mut d = &args[0];
            let mut steps = 0usize;
            while let Term::App(op, inner) = d {
                match op.as_str() {
                    "car" | "cdr" => {
                        steps += 1;
                        d = &inner[0];
                    }
                    _ => break,
                }
            }
            if steps >= 1 && d == &Term::Var(v.clone()) {
                let consp_v = Term::app("consp", vec![Term::Var(v.clone())]);
                if hyps.contains(&consp_v) {
                    return Ok(StructuralVerdict::ProvenChain);
                }
            }
            // Rule (b): lhs = (acl2-count (- v 1)) under (not (zp v)).
            let minus_one = Term::app("-", vec![Term::Var(v.clone()), Term::nat(1)]);
            if args[0] == minus_one {
                let not_zp = Term::app("not", vec![Term::app("zp", vec![Term::Var(v.clone())])]);
                if hyps.contains(&not_zp) {
                    return Ok(StructuralVerdict::ProvenMinusOne);
                }
            }
        }
    }
    Ok(StructuralVerdict::Unknown)
}

/// One line of a mining report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MineEvent {
    Added {
        name: SymbolId,
        entry: u64,
        measure: Term,
    },
    Merged {
        name: SymbolId,
        into: u64,
        representative: SymbolId,
    },
    Replaced {
        name: SymbolId,
        entry: u64,
        removed: Vec<u64>,
    },
    Rejected {
        name: SymbolId,
        reason: String,
    },
    Skipped {
        name: SymbolId,
        reason: String,
    },
}

impl MineEvent {
    pub fn is_rejection(&self) -> bool {
        matches!(self, MineEvent::Rejected { .. })
    }
}

impl fmt::Display for MineEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MineEvent::Added {
                name,
                entry,
                measure,
            } => write!(
                f,
                "mined {}: new entry {} (measure {})",
                name, entry, measure
            ),
            MineEvent::Merged {
                name,
                into,
                representative,
            } => write!(
                f,
                "mined {}: shares entry {} ({})",
                name, into, representative
            ),
            MineEvent::Replaced {
                name,
                entry,
                removed,
            } => {
                let ids = removed
                    .iter()
                    .map(u64::to_string)
                    .collect::<Vec<_>>()
                    .join(" ");
                write!(f, "mined {}: new entry {} replacing {}", name, entry, ids)
            }
            MineEvent::Rejected { name, reason } => write!(f, "rejected {}: {}", name, reason),
            MineEvent::Skipped { name, reason } => write!(f, "skipped {}: {}", name, reason),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MineReport {
    pub events: Vec<MineEvent>,
}

impl MineReport {
    pub fn rejections(&self) -> usize {
        self.events.iter().filter(|e| e.is_rejection()).count()
    }
}

/// Falsifier bound used in mining rejection reports.
const REPORT_FALSIFY_BOUND: u64 = 4;

/// Mines `corpus` into `db`. Each definition's obligation is generated,
/// simplified, validated clause-by-clause with the structural checker, then
/// canonicalized and inserted under subsumption dedup.
pub fn mine_into(
    db: &mut Database,
    corpus: &[(FunctionDef, Origin)],
) -> Result<MineReport, DbError> {
    let mut names = BTreeSet::new();
    for (def, _) in corpus {
        if !names.insert(def.name.clone()) {
            return Err(DbError::DuplicateName(def.name.clone()));
        }
    }

    let mut report = MineReport::default();
    for (def, origin) in corpus {
        if !def.is_recursive() {
            report.events.push(MineEvent::Skipped {
                name: def.name.clone(),
                reason: "non-recursive".into(),
            });
            continue;
        }

        let candidates: Vec<Measure> = match &def.declared_measure {
            Some(m) => vec![Measure::new(m.clone())],
            None => def.formals.iter().map(Measure::acl2_count_of).collect(),
        };

        let mut accepted: Option<(Measure, crate::obligations::ClauseList)> = None;
        let mut first_failure: Option<(Measure, crate::obligations::ClauseList, usize)> = None;
        for m in &candidates {
            let raw = measure_conjecture(def, m);
            let (simplified, _) = simplify_clause_list(&raw);
            let failing = simplified.clauses.iter().position(|c| {
                !matches!(
                    structural_decrease_check(c),
                    Ok(v) if v.is_proven()
                )
            });
            match failing {
                None => {
                    accepted = Some((m.clone(), simplified));
                    break;
                }
                Some(ci) => {
                    if first_failure.is_none() {
                        first_failure = Some((m.clone(), simplified, ci));
                    }
                }
            }
        }

        let (measure, simplified) = match accepted {
            Some(ok) => ok,
            None => {
                let Some((m, simplified, ci)) = first_failure else {
                    report.events.push(MineEvent::Rejected {
                        name: def.name.clone(),
                        reason: "no measure candidates (definition has no formals)".into(),
                    });
                    continue;
                };
                let single =
                    crate::obligations::ClauseList::new(vec![simplified.clauses[ci].clone()]);
                let out = falsify(&single, REPORT_FALSIFY_BOUND);
                let reason = match out.counterexample {
                    Some(cex) => {
                        let env = cex
                            .env
                            .iter()
                            .map(|(k, v)| format!("{}={}", k, Term::Const(v.clone())))
                            .collect::<Vec<_>>()
                            .join(" ");
                        format!(
                            "measure {}: clause {} is falsifiable ({})",
                            m, ci, env
                        )
                    }
                    None => format!(
                        "measure {}: clause {} not machine-checked (structural rules do not apply; no counterexample at count <= {})",
                        m, ci, REPORT_FALSIFY_BOUND
                    ),
                };
                report.events.push(MineEvent::Rejected {
                    name: def.name.clone(),
                    reason,
                });
                continue;
            }
        };

        if simplified.is_empty() {
            report.events.push(MineEvent::Skipped {
                name: def.name.clone(),
                reason: "vacuous obligation (every clause is a tautology)".into(),
            });
            continue;
        }

        let (scheme, renaming) = canonicalize(&simplified, &def.formals, &def.name)?;
        let mut subst = crate::term::Substitution::new();
        for (from, to) in &renaming {
            subst.bind_var(from.clone(), Term::Var(to.clone()));
        }
        let canonical_measure = subst.apply(&measure.term).expect("measure has no stubs");
        let entry = SchemeEntry {
            id: 0,
            scheme,
            justification: Justification::new(canonical_measure),
            provenance: Provenance {
                origin: origin.clone(),
                contributors: vec![def.name.clone()],
            },
            representative: def.name.clone(),
        };
        match db.insert_entry(entry)? {
            InsertAction::Added(id) => report.events.push(MineEvent::Added {
                name: def.name.clone(),
                entry: id,
                measure: measure.term.clone(),
            }),
            InsertAction::Skipped { into } => {
                let rep = db.entry(into).unwrap().representative.clone();
                report.events.push(MineEvent::Merged {
                    name: def.name.clone(),
                    into,
                    representative: rep,
                });
            }
            InsertAction::Replaced { new_id, removed } => {
                report.events.push(MineEvent::Replaced {
                    name: def.name.clone(),
                    entry: new_id,
                    removed,
                });
            }
        }
    }
    Ok(report)
}

/// Mines a corpus into a fresh database.
pub fn mine_corpus(corpus: &[(FunctionDef, Origin)]) -> Result<(Database, MineReport), DbError> {
    let mut db = Database::new();
    let report = mine_into(&mut db, corpus)?;
    Ok((db, report))
}

/// Parses a corpus file: defun forms, each optionally preceded by a
/// `;; book: <path>` comment line setting its provenance. Only comments in
/// the gap between two forms annotate the following form; comments inside
/// a definition's own span do not.
pub fn parse_corpus(src: &str) -> Result<Vec<(FunctionDef, Origin)>, DbError> {
    let (forms, comments) = read_spanned_forms(src).map_err(DefError::from)?;
    let mut out = Vec::new();
    let mut prev_end = 0usize;
    for spanned in &forms {
        let def = defun_from_sexp(&spanned.form)?;
        let start = spanned.form.pos().line;
        let mut origin = Origin::Session;
        for (cline, text) in &comments {
            if *cline <= prev_end || *cline >= start {
                continue;
            }
            let trimmed = text.trim_start_matches(';').trim();
            if let Some(path) = trimmed.strip_prefix("book:") {
                origin = Origin::Book(path.trim().to_string());
            }
        }
        prev_end = spanned.end_line;
        out.push((def, origin));
    }
    Ok(out)
}
