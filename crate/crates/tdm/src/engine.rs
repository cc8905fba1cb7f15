//! The two-pass subsumption search, certificate emission and verification,
//! and incremental database extension.
//!
//! A search instantiates each stored justification's measure over the new
//! definition's formals, builds the obligation for that measure, simplifies
//! it, and tries to discharge every clause with a stored scheme clause via
//! subsumption — slot variables bound to the new formals, stubs bound to
//! the new function itself. The first pass restricts to entries contributed
//! by functions in the current session; the second pass (when enabled)
//! lifts that restriction, at the cost of `include` dependencies in the
//! emitted plan.
//!
//! A successful search yields a [`Certificate`]: a replayable record of the
//! simplification trace and the per-clause subsumption witnesses, bound to
//! the database and definition by content digests. [`verify_certificate`]
//! re-runs every check from scratch and identifies the first failing step
//! on rejection.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::database::{
    hex_digest, Database, DbError, InsertAction, Justification, Origin, Provenance, SchemeEntry,
};
use crate::normalize::{
    canonicalize, clause_subsumes, replay_trace, simplify_clause_list, CanonError, RewriteTrace,
    RuleId, SubsumptionWitness, TraceStep, THEORY_VERSION,
};
use crate::obligations::{measure_conjecture, ClauseList, FunctionDef, Measure};
use crate::term::{parse_term, Substitution, SymbolId, Term};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("definition `{0}` is not recursive; there is nothing to prove")]
    NotRecursive(SymbolId),
    #[error(transparent)]
    Db(#[from] DbError),
    #[error(transparent)]
    Canon(#[from] CanonError),
    #[error("certificate line {line}: {msg}")]
    CertFormat { line: usize, msg: String },
    #[error("the simplified obligation is empty; there is no scheme to store")]
    NothingToStore,
}

fn cert_err(line: usize, msg: impl Into<String>) -> EngineError {
    EngineError::CertFormat {
        line,
        msg: msg.into(),
    }
}

/// Search configuration. Defaults: two passes, at most 64 slot mappings per
/// justification group, default-measure fallback on, extension off.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub two_pass: bool,
    pub max_slot_mappings: usize,
    pub fallback_default_measures: bool,
    pub incremental_extend: bool,
}

impl Default for SearchConfig {
    fn default() -> SearchConfig {
        SearchConfig {
            two_pass: true,
            max_slot_mappings: 64,
            fallback_default_measures: true,
            incremental_extend: false,
        }
    }
}

/// The set of function names considered "defined in the current session":
/// contributors of session-origin entries plus any definitions supplied in
/// a session file.
#[derive(Debug, Clone, Default)]
pub struct SessionSet {
    names: BTreeSet<SymbolId>,
}

impl SessionSet {
    pub fn empty() -> SessionSet {
        SessionSet::default()
    }

    pub fn from_parts(db: &Database, session_defs: &[FunctionDef]) -> SessionSet {
        let mut names = BTreeSet::new();
        for e in db.entries() {
            if matches!(e.provenance.origin, Origin::Session) {
                names.extend(e.provenance.contributors.iter().cloned());
            }
        }
        names.extend(session_defs.iter().map(|d| d.name.clone()));
        SessionSet { names }
    }

    pub fn contains(&self, name: &SymbolId) -> bool {
        self.names.contains(name)
    }

    fn admits(&self, entry: &SchemeEntry) -> bool {
        entry
            .provenance
            .contributors
            .iter()
            .any(|c| self.contains(c))
    }
}

/// One justification group instantiated onto the new formals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasureCandidate {
    pub justification: Justification,
    /// Injective mapping from the measure's slot variables to formals.
    pub mapping: BTreeMap<SymbolId, SymbolId>,
    pub instantiated: Term,
}

fn slot_sort_key(v: &SymbolId) -> (usize, String) {
    let idx = v
        .as_str()
        .strip_prefix('v')
        .and_then(|r| r.parse::<usize>().ok())
        .unwrap_or(usize::MAX);
    (idx, v.as_str().to_string())
}

/// Enumerates measure candidates: for each justification group in canonical
/// order, every injective mapping of the measure's slot variables onto the
/// formals in lexicographic formal order, truncated per group, with
/// duplicate instantiated measures deduplicated keeping the first.
pub fn enumerate_measure_candidates(
    db: &Database,
    formals: &[SymbolId],
    max_per_group: usize,
) -> Vec<MeasureCandidate> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (just, entries) in db.groups() {
        if entries.is_empty() {
            continue;
        }
        let mut slots: Vec<SymbolId> = just.measure.vars().into_iter().collect();
        slots.sort_by_key(slot_sort_key);
        if slots.len() > formals.len() {
            continue;
        }
        let mut mappings = Vec::new();
        let mut chosen: Vec<usize> = Vec::new();
        fn gen(
            slots: &[SymbolId],
            formals: &[SymbolId],
            chosen: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
            limit: usize,
        ) {
            if out.len() >= limit {
                return;
            }
            if chosen.len() == slots.len() {
                out.push(chosen.clone());
                return;
            }
            for i in 0..formals.len() {
                if !chosen.contains(&i) {
                    chosen.push(i);
                    gen(slots, formals, chosen, out, limit);
                    chosen.pop();
                    if out.len() >= limit {
                        return;
                    }
                }
            }
        }
        gen(&slots, formals, &mut chosen, &mut mappings, max_per_group);
        for positions in mappings {
            let mut mapping = BTreeMap::new();
            let mut subst = Substitution::new();
            for (slot, &fi) in slots.iter().zip(&positions) {
                mapping.insert(slot.clone(), formals[fi].clone());
                subst.bind_var(slot.clone(), Term::Var(formals[fi].clone()));
            }
            let instantiated = subst.apply(&just.measure).expect("measure has no stubs");
            if seen.insert(instantiated.clone()) {
                out.push(MeasureCandidate {
                    justification: just.clone(),
                    mapping,
                    instantiated,
                });
            }
        }
    }
    out
}

/// Discharge of one obligation clause by one stored scheme clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverStep {
    pub clause: usize,
    pub entry: u64,
    pub entry_clause: usize,
    pub witness: SubsumptionWitness,
}

/// Discharge of one obligation clause by the structural checker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuralStep {
    pub clause: usize,
    pub rule: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Coverage {
    /// Every clause discharged by a database entry.
    Entries(Vec<CoverStep>),
    /// Fallback: every clause discharged by the structural checker.
    Structural(Vec<StructuralStep>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsedEntry {
    pub id: u64,
    pub origin: Origin,
    pub representative: SymbolId,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub measure: Measure,
    /// Entries used, in first-use (clause) order, deduplicated.
    pub used_entries: Vec<UsedEntry>,
    pub coverage: Coverage,
    /// Distinct book paths among used entries with book origin, in
    /// first-use order.
    pub includes_needed: Vec<String>,
    /// The simplified obligation the coverage refers to.
    pub obligation: ClauseList,
    pub trace: RewriteTrace,
    /// Which pass succeeded (1 or 2); 0 for the structural fallback.
    pub pass: u8,
    pub elapsed: Duration,
}

#[derive(Debug)]
pub enum SearchOutcome {
    Found(Box<SearchResult>),
    NoMatch,
}

fn cover_clause(
    clause: &crate::obligations::Clause,
    entries: &[&SchemeEntry],
    mapping: &BTreeMap<SymbolId, SymbolId>,
    def_name: &SymbolId,
) -> Option<(u64, usize, SubsumptionWitness)> {
    let mut seed = Substitution::new();
    for (slot, formal) in mapping {
        seed.bind_var(slot.clone(), Term::Var(formal.clone()));
    }
    for entry in entries {
        for (j, old) in entry.scheme.clauses.iter().enumerate() {
            if let Some(w) = clause_subsumes(old, clause, &seed, Some(def_name)) {
                return Some((entry.id, j, w));
            }
        }
    }
    None
}

/// Searches the database for a measure and a set of scheme clauses that
/// discharge every termination goal of `def`. Pass 1 considers only
/// entries with a contributor in `session`; pass 2 (when enabled and pass 1
/// fails) considers all entries. When every candidate fails and the
/// fallback is enabled, the default measures `(acl2-count formal)` are
/// tried against the structural checker directly.
pub fn search(
    db: &Database,
    session: &SessionSet,
    def: &FunctionDef,
    cfg: &SearchConfig,
) -> Result<SearchOutcome, EngineError> {
    let started = Instant::now();
    if !def.is_recursive() {
        return Err(EngineError::NotRecursive(def.name.clone()));
    }
    let mut candidates = enumerate_measure_candidates(db, &def.formals, cfg.max_slot_mappings);
    if let Some(declared) = &def.declared_measure {
        candidates.retain(|c| &c.instantiated == declared);
    }

    let passes: &[u8] = if cfg.two_pass { &[1, 2] } else { &[1] };
    for &pass in passes {
        for cand in &candidates {
            let group: Vec<&SchemeEntry> = db
                .group(&cand.justification)
                .iter()
                .filter(|e| pass == 2 || session.admits(e))
                .collect();
            if group.is_empty() {
                continue;
            }
            let m = Measure::new(cand.instantiated.clone());
            let raw = measure_conjecture(def, &m);
            let (obligation, trace) = simplify_clause_list(&raw);
            let mut steps = Vec::with_capacity(obligation.len());
            let mut covered = true;
            for (ci, clause) in obligation.clauses.iter().enumerate() {
                match cover_clause(clause, &group, &cand.mapping, &def.name) {
                    Some((entry, entry_clause, witness)) => steps.push(CoverStep {
                        clause: ci,
                        entry,
                        entry_clause,
                        witness,
                    }),
                    None => {
                        covered = false;
                        break;
                    }
                }
            }
            if covered {
                let mut used = Vec::new();
                for s in &steps {
                    if !used.iter().any(|u: &UsedEntry| u.id == s.entry) {
                        let e = db.entry(s.entry).expect("used entry");
                        used.push(UsedEntry {
                            id: e.id,
                            origin: e.provenance.origin.clone(),
                            representative: e.representative.clone(),
                        });
                    }
                }
                let mut includes = Vec::new();
                for u in &used {
                    if let Some(p) = u.origin.book_path() {
                        if !includes.iter().any(|q| q == p) {
                            includes.push(p.to_string());
                        }
                    }
                }
                return Ok(SearchOutcome::Found(Box::new(SearchResult {
                    measure: m,
                    used_entries: used,
                    coverage: Coverage::Entries(steps),
                    includes_needed: includes,
                    obligation,
                    trace,
                    pass,
                    elapsed: started.elapsed(),
                })));
            }
        }
    }

    if cfg.fallback_default_measures {
        for formal in &def.formals {
            let m = Measure::acl2_count_of(formal);
            if let Some(declared) = &def.declared_measure {
                if &m.term != declared {
                    continue;
                }
            }
            let raw = measure_conjecture(def, &m);
            let (obligation, trace) = simplify_clause_list(&raw);
            let verdicts: Option<Vec<StructuralStep>> = obligation
                .clauses
                .iter()
                .enumerate()
                .map(
                    |(ci, c)| match crate::database::structural_decrease_check(c) {
                        Ok(v) if v.is_proven() => Some(StructuralStep {
                            clause: ci,
                            rule: v.rule_name().to_string(),
                        }),
                        _ => None,
                    },
                )
                .collect();
            if let Some(steps) = verdicts {
                return Ok(SearchOutcome::Found(Box::new(SearchResult {
                    measure: m,
                    used_entries: Vec::new(),
                    coverage: Coverage::Structural(steps),
                    includes_needed: Vec::new(),
                    obligation,
                    trace,
                    pass: 0,
                    elapsed: started.elapsed(),
                })));
            }
        }
    }
    Ok(SearchOutcome::NoMatch)
}

/// The replayable proof plan. Step order in the rendered file: includes,
/// entry references, the simplification trace, the per-clause coverage, the
/// closing `use` marker, and the final definition line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub theory_version: String,
    pub db_digest: String,
    pub def_digest: String,
    pub includes: Vec<String>,
    pub entry_refs: Vec<u64>,
    pub trace: RewriteTrace,
    pub coverage: Coverage,
    pub def_name: SymbolId,
    pub measure: Term,
    pub stub_map: BTreeMap<SymbolId, SymbolId>,
}

/// Human-readable rendering of a certificate as a nested event block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventPlan {
    text: String,
}

impl fmt::Display for EventPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Assembles the certificate and its event-plan rendering for a successful
/// search against `db`.
pub fn emit_plan(
    def: &FunctionDef,
    result: &SearchResult,
    db: &Database,
) -> (Certificate, EventPlan) {
    let mut entry_refs: Vec<u64> = result.used_entries.iter().map(|u| u.id).collect();
    entry_refs.sort_unstable();
    entry_refs.dedup();

    let mut stub_map = BTreeMap::new();
    if let Coverage::Entries(steps) = &result.coverage {
        for s in steps {
            for (stub, f) in s.witness.substitution.stubs() {
                stub_map.insert(stub.clone(), f.clone());
            }
        }
    }

    let cert = Certificate {
        theory_version: THEORY_VERSION.to_string(),
        db_digest: db.digest(),
        def_digest: hex_digest(&def.canonical_text()),
        includes: result.includes_needed.clone(),
        entry_refs,
        trace: result.trace.clone(),
        coverage: result.coverage.clone(),
        def_name: def.name.clone(),
        measure: result.measure.term.clone(),
        stub_map,
    };
    let plan = render_event_plan(def, result, &cert);
    (cert, plan)
}

fn render_event_plan(def: &FunctionDef, result: &SearchResult, cert: &Certificate) -> EventPlan {
    let mut out = String::new();
    out.push_str("(encapsulate ()\n");
    for p in &cert.includes {
        out.push_str(&format!(
            "  (local (include-book \"{}\" :dir :system))\n",
            p
        ));
    }
    match &result.coverage {
        Coverage::Entries(_) => {
            for u in &result.used_entries {
                out.push_str(&format!(
                    "  (local (defthm termination-scheme-{})) ; {}\n",
                    u.id, u.representative
                ));
            }
            out.push_str("  (local (defthm new-termination-theorem))\n");
        }
        Coverage::Structural(_) => {
            out.push_str("  ; justified by the structural decrease rules, no entries used\n");
        }
    }
    let formals = def
        .formals
        .iter()
        .map(SymbolId::as_str)
        .collect::<Vec<_>>()
        .join(" ");
    out.push_str(&format!("  (defun {} ({})\n", def.name, formals));
    out.push_str(&format!("    (declare (xargs :measure {}\n", cert.measure));
    let instance = if cert.stub_map.is_empty() {
        "new-termination-theorem".to_string()
    } else {
        let pairs = cert
            .stub_map
            .iter()
            .map(|(s, f)| format!("({} {})", s, f))
            .collect::<Vec<_>>()
            .join(" ");
        format!("new-termination-theorem {}", pairs)
    };
    match &result.coverage {
        Coverage::Entries(_) => out.push_str(&format!(
            "                    :hints ((\"Goal\" :by (:functional-instance {})))))\n",
            instance
        )),
        Coverage::Structural(_) => {
            out.push_str("                    :hints ((\"Goal\" :by structural-decrease))))\n")
        }
    }
    out.push_str(&format!("    {}))\n", def.body));
    EventPlan { text: out }
}

fn render_path(path: &[usize]) -> String {
    if path.is_empty() {
        "-".to_string()
    } else {
        path.iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(".")
    }
}

fn parse_path(s: &str, line: usize) -> Result<Vec<usize>, EngineError> {
    if s == "-" {
        return Ok(Vec::new());
    }
    s.split('.')
        .map(|p| p.parse::<usize>().map_err(|_| cert_err(line, "bad path")))
        .collect()
}

fn render_pairs<I: Iterator<Item = (String, String)>>(it: I) -> String {
    let pairs: Vec<String> = it.map(|(a, b)| format!("{}={}", a, b)).collect();
    if pairs.is_empty() {
        "-".to_string()
    } else {
        pairs.join(",")
    }
}

fn parse_pairs(s: &str, line: usize) -> Result<Vec<(String, String)>, EngineError> {
    if s == "-" {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|p| {
            p.split_once('=')
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .ok_or_else(|| cert_err(line, "bad key=value pair"))
        })
        .collect()
}

impl Certificate {
    /// Canonical textual rendering; byte-identical for equal certificates.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("tdm-cert 1\n");
        out.push_str(&format!("theory {}\n", self.theory_version));
        out.push_str(&format!("db-digest {}\n", self.db_digest));
        out.push_str(&format!("def-digest {}\n", self.def_digest));
        for p in &self.includes {
            out.push_str(&format!("include {}\n", p));
        }
        for id in &self.entry_refs {
            out.push_str(&format!("entry {}\n", id));
        }
        out.push_str(&format!("newsimplify {}\n", self.trace.steps.len()));
        for step in &self.trace.steps {
            match step {
                TraceStep::Rewrite {
                    clause,
                    literal,
                    path,
                    rule,
                } => out.push_str(&format!(
                    "rw {} {} {} {}\n",
                    clause,
                    literal,
                    render_path(path),
                    rule
                )),
                TraceStep::DedupLiterals { clause } => out.push_str(&format!("dedup {}\n", clause)),
                TraceStep::DropTautology { clause } => out.push_str(&format!("taut {}\n", clause)),
                TraceStep::SortLiterals { clause } => out.push_str(&format!("sort {}\n", clause)),
                TraceStep::DropDuplicateClause { clause } => {
                    out.push_str(&format!("dropdup {}\n", clause))
                }
            }
        }
        match &self.coverage {
            Coverage::Entries(steps) => {
                out.push_str(&format!("by {}\n", steps.len()));
                for s in steps {
                    let vars = render_pairs(
                        s.witness
                            .substitution
                            .vars()
                            .map(|(v, t)| (v.to_string(), t.to_string())),
                    );
                    let lits = render_pairs(
                        s.witness
                            .literal_map
                            .iter()
                            .enumerate()
                            .map(|(i, j)| (i.to_string(), j.to_string())),
                    );
                    let stubs = render_pairs(
                        s.witness
                            .substitution
                            .stubs()
                            .map(|(a, b)| (a.to_string(), b.to_string())),
                    );
                    out.push_str(&format!(
                        "cover {} entry {} clause {} vars {} lits {} stubs {}\n",
                        s.clause, s.entry, s.entry_clause, vars, lits, stubs
                    ));
                }
            }
            Coverage::Structural(steps) => {
                out.push_str(&format!("structural {}\n", steps.len()));
                for s in steps {
                    out.push_str(&format!("sclause {} rule {}\n", s.clause, s.rule));
                }
            }
        }
        out.push_str("use\n");
        let stubs = render_pairs(
            self.stub_map
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string())),
        );
        out.push_str(&format!(
            "defun {} stubs {} measure {}\n",
            self.def_name, stubs, self.measure
        ));
        out
    }

    pub fn parse(text: &str) -> Result<Certificate, EngineError> {
        let mut lines = text.lines().enumerate();
        let mut next = |expect: &str| -> Result<(usize, String), EngineError> {
            match lines.next() {
                Some((i, l)) => Ok((i + 1, l.to_string())),
                None => Err(cert_err(0, format!("missing `{}` line", expect))),
            }
        };

        let (l, magic) = next("tdm-cert")?;
        if magic != "tdm-cert 1" {
            return Err(cert_err(l, "expected `tdm-cert 1`"));
        }
        let (l, theory) = next("theory")?;
        let theory_version = theory
            .strip_prefix("theory ")
            .ok_or_else(|| cert_err(l, "expected `theory ...`"))?
            .to_string();
        let (l, dbd) = next("db-digest")?;
        let db_digest = dbd
            .strip_prefix("db-digest ")
            .ok_or_else(|| cert_err(l, "expected `db-digest ...`"))?
            .to_string();
        let (l, dfd) = next("def-digest")?;
        let def_digest = dfd
            .strip_prefix("def-digest ")
            .ok_or_else(|| cert_err(l, "expected `def-digest ...`"))?
            .to_string();

        let mut includes = Vec::new();
        let mut entry_refs = Vec::new();
        let (mut l, mut line) = next("newsimplify")?;
        loop {
            if let Some(p) = line.strip_prefix("include ") {
                includes.push(p.trim().to_string());
            } else if let Some(id) = line.strip_prefix("entry ") {
                entry_refs.push(
                    id.trim()
                        .parse::<u64>()
                        .map_err(|_| cert_err(l, "bad entry id"))?,
                );
            } else {
                break;
            }
            let n = next("newsimplify")?;
            l = n.0;
            line = n.1;
        }

        let count: usize = line
            .strip_prefix("newsimplify ")
            .ok_or_else(|| cert_err(l, "expected `newsimplify <n>`"))?
            .trim()
            .parse()
            .map_err(|_| cert_err(l, "bad step count"))?;
        let mut steps = Vec::with_capacity(count);
        for _ in 0..count {
            let (l, line) = next("trace step")?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            let step = match toks.as_slice() {
                ["rw", c, lit, path, rule] => TraceStep::Rewrite {
                    clause: c.parse().map_err(|_| cert_err(l, "bad clause index"))?,
                    literal: lit.parse().map_err(|_| cert_err(l, "bad literal index"))?,
                    path: parse_path(path, l)?,
                    rule: RuleId::parse(rule).ok_or_else(|| cert_err(l, "unknown rule"))?,
                },
                ["dedup", c] => TraceStep::DedupLiterals {
                    clause: c.parse().map_err(|_| cert_err(l, "bad clause index"))?,
                },
                ["taut", c] => TraceStep::DropTautology {
                    clause: c.parse().map_err(|_| cert_err(l, "bad clause index"))?,
                },
                ["sort", c] => TraceStep::SortLiterals {
                    clause: c.parse().map_err(|_| cert_err(l, "bad clause index"))?,
                },
                ["dropdup", c] => TraceStep::DropDuplicateClause {
                    clause: c.parse().map_err(|_| cert_err(l, "bad clause index"))?,
                },
                _ => return Err(cert_err(l, "unknown trace step")),
            };
            steps.push(step);
        }
        let trace = RewriteTrace { steps };

        let (l, line) = next("coverage")?;
        let coverage = if let Some(n) = line.strip_prefix("by ") {
            let n: usize = n.trim().parse().map_err(|_| cert_err(l, "bad count"))?;
            let mut covers = Vec::with_capacity(n);
            for _ in 0..n {
                let (l, line) = next("cover")?;
                let toks: Vec<&str> = line.split_whitespace().collect();
                match toks.as_slice() {
                    ["cover", ci, "entry", id, "clause", j, "vars", vars, "lits", lits, "stubs", stubs] =>
                    {
                        let mut substitution = Substitution::new();
                        for (a, b) in parse_pairs(vars, l)? {
                            substitution.bind_var(SymbolId::new(&a), Term::Var(SymbolId::new(&b)));
                        }
                        for (a, b) in parse_pairs(stubs, l)? {
                            substitution.bind_stub(SymbolId::new(&a), SymbolId::new(&b));
                        }
                        let pairs = parse_pairs(lits, l)?;
                        let mut literal_map = vec![0usize; pairs.len()];
                        for (a, b) in pairs {
                            let i: usize =
                                a.parse().map_err(|_| cert_err(l, "bad literal index"))?;
                            let j: usize =
                                b.parse().map_err(|_| cert_err(l, "bad literal index"))?;
                            if i >= literal_map.len() {
                                return Err(cert_err(l, "literal map index out of range"));
                            }
                            literal_map[i] = j;
                        }
                        covers.push(CoverStep {
                            clause: ci.parse().map_err(|_| cert_err(l, "bad clause index"))?,
                            entry: id.parse().map_err(|_| cert_err(l, "bad entry id"))?,
                            entry_clause: j.parse().map_err(|_| cert_err(l, "bad clause index"))?,
                            witness: SubsumptionWitness {
                                substitution,
                                literal_map,
                            },
                        });
                    }
                    _ => return Err(cert_err(l, "malformed cover line")),
                }
            }
            Coverage::Entries(covers)
        } else if let Some(n) = line.strip_prefix("structural ") {
            let n: usize = n.trim().parse().map_err(|_| cert_err(l, "bad count"))?;
            let mut verdicts = Vec::with_capacity(n);
            for _ in 0..n {
                let (l, line) = next("sclause")?;
                let toks: Vec<&str> = line.split_whitespace().collect();
                match toks.as_slice() {
                    ["sclause", ci, "rule", r] => verdicts.push(StructuralStep {
                        clause: ci.parse().map_err(|_| cert_err(l, "bad clause index"))?,
                        rule: r.to_string(),
                    }),
                    _ => return Err(cert_err(l, "malformed sclause line")),
                }
            }
            Coverage::Structural(verdicts)
        } else {
            return Err(cert_err(l, "expected `by <n>` or `structural <n>`"));
        };

        let (l, line) = next("use")?;
        if line != "use" {
            return Err(cert_err(l, "expected `use`"));
        }
        let (l, line) = next("defun")?;
        let rest = line
            .strip_prefix("defun ")
            .ok_or_else(|| cert_err(l, "expected `defun ...`"))?;
        let (head, measure_src) = rest
            .split_once(" measure ")
            .ok_or_else(|| cert_err(l, "expected `measure` on defun line"))?;
        let head_toks: Vec<&str> = head.split_whitespace().collect();
        let (def_name, stub_map) = match head_toks.as_slice() {
            [name, "stubs", stubs] => {
                let mut map = BTreeMap::new();
                for (a, b) in parse_pairs(stubs, l)? {
                    map.insert(SymbolId::new(&a), SymbolId::new(&b));
                }
                (SymbolId::new(name), map)
            }
            _ => return Err(cert_err(l, "malformed defun line")),
        };
        let measure =
            parse_term(measure_src).map_err(|e| cert_err(l, format!("bad measure: {}", e)))?;

        Ok(Certificate {
            theory_version,
            db_digest,
            def_digest,
            includes,
            entry_refs,
            trace,
            coverage,
            def_name,
            measure,
            stub_map,
        })
    }
}

/// Verification step names, in checking order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyStep {
    Header,
    Includes,
    EntryRefs,
    NewSimplify,
    ByStep,
    FinalDefun,
}

impl fmt::Display for VerifyStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerifyStep::Header => "header",
            VerifyStep::Includes => "includes",
            VerifyStep::EntryRefs => "entry-refs",
            VerifyStep::NewSimplify => "newsimplify",
            VerifyStep::ByStep => "by-step",
            VerifyStep::FinalDefun => "final-defun",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject { step: VerifyStep, reason: String },
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }
}

fn reject(step: VerifyStep, reason: impl Into<String>) -> Verdict {
    Verdict::Reject {
        step,
        reason: reason.into(),
    }
}

/// Re-checks a certificate from scratch against the database and the
/// definition: digests, the replayed simplification trace, every
/// subsumption witness (literal by literal), stub and measure agreement,
/// and exact coverage of the obligation.
pub fn verify_certificate(db: &Database, def: &FunctionDef, cert: &Certificate) -> Verdict {
    // Header: theory and digests.
    if cert.theory_version != THEORY_VERSION {
        return reject(
            VerifyStep::Header,
            format!(
                "theory `{}` does not match `{}`",
                cert.theory_version, THEORY_VERSION
            ),
        );
    }
    if cert.db_digest != db.digest() {
        return reject(VerifyStep::Header, "database digest mismatch");
    }
    if cert.def_digest != hex_digest(&def.canonical_text()) {
        return reject(VerifyStep::Header, "definition digest mismatch");
    }
    if cert.def_name != def.name {
        return reject(VerifyStep::Header, "definition name mismatch");
    }

    // Entry references must exist.
    for id in &cert.entry_refs {
        if db.entry(*id).is_none() {
            return reject(
                VerifyStep::EntryRefs,
                format!("entry {} not in database", id),
            );
        }
    }

    // Replay the simplification trace and compare against a fresh run.
    let measure = Measure::new(cert.measure.clone());
    let raw = measure_conjecture(def, &measure);
    let replayed = match replay_trace(&raw, &cert.trace) {
        Ok(r) => r,
        Err(e) => {
            return reject(
                VerifyStep::NewSimplify,
                format!("trace replay failed: {}", e),
            )
        }
    };
    let (fresh, _) = simplify_clause_list(&raw);
    if replayed != fresh {
        return reject(
            VerifyStep::NewSimplify,
            "replayed trace disagrees with re-simplification",
        );
    }

    // Coverage.
    let mut seen_clauses = BTreeSet::new();
    let mut used_ids = Vec::new();
    let mut stub_union = BTreeMap::new();
    match &cert.coverage {
        Coverage::Entries(steps) => {
            for s in steps {
                if s.clause >= fresh.len() {
                    return reject(
                        VerifyStep::ByStep,
                        format!("cover step refers to missing clause {}", s.clause),
                    );
                }
                if !seen_clauses.insert(s.clause) {
                    return reject(
                        VerifyStep::ByStep,
                        format!("clause {} covered more than once", s.clause),
                    );
                }
                let entry = match db.entry(s.entry) {
                    Some(e) => e,
                    None => {
                        return reject(
                            VerifyStep::ByStep,
                            format!("entry {} not in database", s.entry),
                        )
                    }
                };
                let old = match entry.scheme.clauses.get(s.entry_clause) {
                    Some(c) => c,
                    None => {
                        return reject(
                            VerifyStep::ByStep,
                            format!("entry {} has no clause {}", s.entry, s.entry_clause),
                        )
                    }
                };
                let target = &fresh.clauses[s.clause];
                if s.witness.literal_map.len() != old.len() {
                    return reject(
                        VerifyStep::ByStep,
                        format!(
                            "witness for clause {} maps the wrong literal count",
                            s.clause
                        ),
                    );
                }
                for (i, old_lit) in old.literals().iter().enumerate() {
                    let j = s.witness.literal_map[i];
                    let mapped = match s.witness.substitution.apply(old_lit) {
                        Ok(t) => t,
                        Err(e) => {
                            return reject(
                                VerifyStep::ByStep,
                                format!("witness substitution fails on clause {}: {}", s.clause, e),
                            )
                        }
                    };
                    match target.literals().get(j) {
                        Some(t) if *t == mapped => {}
                        _ => {
                            return reject(
                                VerifyStep::ByStep,
                                format!(
                                    "clause {}: literal {} does not map onto target literal {}",
                                    s.clause, i, j
                                ),
                            )
                        }
                    }
                }
                // Stubs map only onto the definition under proof, at its arity.
                for (stub, f) in s.witness.substitution.stubs() {
                    if f != &def.name {
                        return reject(
                            VerifyStep::ByStep,
                            format!("stub {} instantiated to `{}`, not the definition", stub, f),
                        );
                    }
                    if stub.stub_arity() != Some(def.formals.len()) {
                        return reject(
                            VerifyStep::ByStep,
                            format!("stub {} arity does not match the definition", stub),
                        );
                    }
                    stub_union.insert(stub.clone(), f.clone());
                }
                // The witness must instantiate the entry's justification to
                // the certificate measure.
                match s.witness.substitution.apply(&entry.justification.measure) {
                    Ok(m) if m == cert.measure => {}
                    _ => {
                        return reject(
                            VerifyStep::ByStep,
                            format!("clause {}: witness disagrees with the measure", s.clause),
                        )
                    }
                }
                if !used_ids.contains(&s.entry) {
                    used_ids.push(s.entry);
                }
            }
        }
        Coverage::Structural(steps) => {
            if !cert.entry_refs.is_empty() {
                return reject(
                    VerifyStep::EntryRefs,
                    "structural certificate must not reference entries",
                );
            }
            for s in steps {
                if s.clause >= fresh.len() {
                    return reject(
                        VerifyStep::ByStep,
                        format!("verdict refers to missing clause {}", s.clause),
                    );
                }
                if !seen_clauses.insert(s.clause) {
                    return reject(
                        VerifyStep::ByStep,
                        format!("clause {} covered more than once", s.clause),
                    );
                }
                match crate::database::structural_decrease_check(&fresh.clauses[s.clause]) {
                    Ok(v) if v.is_proven() => {
                        if v.rule_name() != s.rule {
                            return reject(
                                VerifyStep::ByStep,
                                format!(
                                    "clause {} proven by rule {}, not {}",
                                    s.clause,
                                    v.rule_name(),
                                    s.rule
                                ),
                            );
                        }
                    }
                    _ => {
                        return reject(
                            VerifyStep::ByStep,
                            format!("clause {} fails the structural check", s.clause),
                        )
                    }
                }
            }
        }
    }
    if seen_clauses.len() != fresh.len() {
        return reject(
            VerifyStep::ByStep,
            format!(
                "{} of {} obligation clauses covered",
                seen_clauses.len(),
                fresh.len()
            ),
        );
    }

    // Entry references and includes must match the used entries.
    let mut expect_refs = used_ids.clone();
    expect_refs.sort_unstable();
    expect_refs.dedup();
    if cert.entry_refs != expect_refs {
        return reject(
            VerifyStep::EntryRefs,
            "entry references disagree with witnesses",
        );
    }
    let mut expect_includes = Vec::new();
    for id in &used_ids {
        let e = db.entry(*id).expect("checked above");
        if let Some(p) = e.provenance.origin.book_path() {
            if !expect_includes.iter().any(|q| q == p) {
                expect_includes.push(p.to_string());
            }
        }
    }
    if cert.includes != expect_includes {
        return reject(
            VerifyStep::Includes,
            "include list disagrees with used entries",
        );
    }

    // Final definition: measure over the formals, stub map consistent.
    let formal_set: BTreeSet<&SymbolId> = def.formals.iter().collect();
    for v in cert.measure.vars() {
        if !formal_set.contains(&v) {
            return reject(
                VerifyStep::FinalDefun,
                format!("measure mentions `{}`, not a formal", v),
            );
        }
    }
    if !Measure::shape_ok(&cert.measure) {
        return reject(VerifyStep::FinalDefun, "measure is not natural-valued");
    }
    if cert.stub_map != stub_union {
        return reject(
            VerifyStep::FinalDefun,
            "stub instantiation map disagrees with witnesses",
        );
    }
    Verdict::Accept
}

/// Canonicalizes the certified obligation and inserts it as a new
/// session-origin entry contributed by `def`.
pub fn extend_database(
    db: &mut Database,
    def: &FunctionDef,
    result: &SearchResult,
) -> Result<InsertAction, EngineError> {
    let (scheme, renaming) = canonicalize(&result.obligation, &def.formals, &def.name)?;
    if scheme.is_empty() {
        return Err(EngineError::NothingToStore);
    }
    let mut subst = Substitution::new();
    for (from, to) in &renaming {
        subst.bind_var(from.clone(), Term::Var(to.clone()));
    }
    let canonical_measure = subst
        .apply(&result.measure.term)
        .expect("measure has no stubs");
    let entry = SchemeEntry {
        id: 0,
        scheme,
        justification: Justification::new(canonical_measure),
        provenance: Provenance {
            origin: Origin::Session,
            contributors: vec![def.name.clone()],
        },
        representative: def.name.clone(),
    };
    Ok(db.insert_entry(entry)?)
}
