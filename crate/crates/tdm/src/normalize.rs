//! Clause-list simplification, canonicalization into storable schemes, and
//! the clause subsumption test.
//!
//! Simplification rewrites every literal to a fixpoint under a small fixed
//! theory (identified by [`THEORY_VERSION`] in file headers), then applies
//! clause hygiene: duplicate literals are dropped, tautologous clauses are
//! dropped, literals are re-sorted, duplicate clauses are dropped. Stored
//! schemes and query obligations must be simplified under the same theory
//! for subsumption to be meaningful, which is why the version string is a
//! hard compatibility gate.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

use crate::obligations::{Clause, ClauseList};
use crate::term::{match_term, parse_term, MatchOptions, Substitution, SymbolId, Term};

/// Identifier of the shipped rewrite theory, embedded in database and
/// certificate headers. A mismatch is a hard error.
pub const THEORY_VERSION: &str = "theory-v1";

/// Rewrite rule identifiers, stable across releases of a given theory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleId {
    /// `(atom x) -> (not (consp x))`
    Atom,
    /// `(endp x) -> (not (consp x))`
    Endp,
    /// `(null x) -> (not x)`
    Null,
    /// `(eq x y) -> (equal x y)`
    Eq,
    /// `(eql x y) -> (equal x y)`
    Eql,
    /// `(not (not p)) -> p`, at literal top level only
    NotNot,
}

impl RuleId {
    pub fn as_str(self) -> &'static str {
        match self {
            RuleId::Atom => "atom",
            RuleId::Endp => "endp",
            RuleId::Null => "null",
            RuleId::Eq => "eq",
            RuleId::Eql => "eql",
            RuleId::NotNot => "not-not",
        }
    }

    pub fn parse(s: &str) -> Option<RuleId> {
        Some(match s {
            "atom" => RuleId::Atom,
            "endp" => RuleId::Endp,
            "null" => RuleId::Null,
            "eq" => RuleId::Eq,
            "eql" => RuleId::Eql,
            "not-not" => RuleId::NotNot,
            _ => return None,
        })
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A literal-position rewrite rule.
#[derive(Debug, Clone)]
pub struct RewriteRule {
    pub id: RuleId,
    pub pattern: Term,
    pub replacement: Term,
    /// Restrict application to the top of a literal.
    pub top_level_only: bool,
}

/// The fixed rule set behind [`THEORY_VERSION`].
pub fn theory_rules() -> &'static [RewriteRule] {
    static RULES: OnceLock<Vec<RewriteRule>> = OnceLock::new();
    RULES.get_or_init(|| {
        let rule = |id, pat: &str, rep: &str, top| RewriteRule {
            id,
            pattern: parse_term(pat).unwrap(),
            replacement: parse_term(rep).unwrap(),
            top_level_only: top,
        };
        vec![
            rule(RuleId::Atom, "(atom p)", "(not (consp p))", false),
            rule(RuleId::Endp, "(endp p)", "(not (consp p))", false),
            rule(RuleId::Null, "(null p)", "(not p)", false),
            rule(RuleId::Eq, "(eq p q)", "(equal p q)", false),
            rule(RuleId::Eql, "(eql p q)", "(equal p q)", false),
            rule(RuleId::NotNot, "(not (not p))", "p", true),
        ]
    })
}

/// Weighted size under which every shipped rule strictly decreases; the
/// unit test over the rule set keeps the theory honest about termination.
pub fn rule_weight(t: &Term) -> usize {
    match t {
        Term::Const(_) | Term::Var(_) => 1,
        Term::App(h, args) => {
            let head = match h.as_str() {
                "atom" | "endp" => 4,
                "null" => 3,
                "eq" | "eql" => 2,
                _ => 1,
            };
            head + args.iter().map(rule_weight).sum::<usize>()
        }
    }
}

/// One step of a simplification run. `Rewrite` positions are paths of
/// argument indices inside the literal; clause and literal indices refer to
/// the state of the clause list at the time the step applies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceStep {
    Rewrite {
        clause: usize,
        literal: usize,
        path: Vec<usize>,
        rule: RuleId,
    },
    DedupLiterals {
        clause: usize,
    },
    DropTautology {
        clause: usize,
    },
    SortLiterals {
        clause: usize,
    },
    DropDuplicateClause {
        clause: usize,
    },
}

/// The replayable record of a simplification run: applying the steps to the
/// original clause list reproduces the simplified clause list exactly.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RewriteTrace {
    pub steps: Vec<TraceStep>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReplayError {
    #[error("trace step {0} refers to a missing clause or literal")]
    BadIndex(usize),
    #[error("trace step {0}: rule does not apply at the recorded position")]
    RuleMismatch(usize),
    #[error("trace step {0}: clause is not a tautology")]
    NotTautology(usize),
    #[error("trace step {0}: clause does not duplicate an earlier clause")]
    NotDuplicate(usize),
}

fn rule_by_id(id: RuleId) -> &'static RewriteRule {
    theory_rules().iter().find(|r| r.id == id).unwrap()
}

fn apply_rule(rule: &RewriteRule, t: &Term) -> Option<Term> {
    let s = match_term(
        &rule.pattern,
        t,
        &Substitution::new(),
        MatchOptions::default(),
    )?;
    Some(s.apply(&rule.replacement).expect("rule replacement"))
}

fn apply_rule_at(rule: &RewriteRule, t: &Term, path: &[usize]) -> Option<Term> {
    match path.split_first() {
        None => apply_rule(rule, t),
        Some((&i, rest)) => match t {
            Term::App(h, args) if i < args.len() => {
                let new_arg = apply_rule_at(rule, &args[i], rest)?;
                let mut args = args.clone();
                args[i] = new_arg;
                Some(Term::App(h.clone(), args))
            }
            _ => None,
        },
    }
}

/// Innermost-first rewriting of one literal to fixpoint, recording each
/// applied rule with its position.
fn rewrite_literal(lit: Term, clause: usize, literal: usize, steps: &mut Vec<TraceStep>) -> Term {
    fn norm(
        t: Term,
        path: &mut Vec<usize>,
        clause: usize,
        literal: usize,
        steps: &mut Vec<TraceStep>,
    ) -> Term {
        let mut cur = match t {
            Term::App(h, args) => {
                let args = args
                    .into_iter()
                    .enumerate()
                    .map(|(i, a)| {
                        path.push(i);
                        let a = norm(a, path, clause, literal, steps);
                        path.pop();
                        a
                    })
                    .collect();
                Term::App(h, args)
            }
            leaf => leaf,
        };
        'retry: loop {
            for rule in theory_rules() {
                if rule.top_level_only && !path.is_empty() {
                    continue;
                }
                if let Some(next) = apply_rule(rule, &cur) {
                    steps.push(TraceStep::Rewrite {
                        clause,
                        literal,
                        path: path.clone(),
                        rule: rule.id,
                    });
                    cur = next;
                    continue 'retry;
                }
            }
            return cur;
        }
    }
    norm(lit, &mut Vec::new(), clause, literal, steps)
}

fn is_tautology(lits: &[Term]) -> bool {
    let set: BTreeSet<&Term> = lits.iter().collect();
    for lit in lits {
        match lit {
            Term::Const(v) if !v.is_nil() => return true,
            Term::App(h, args) if h.as_str() == "not" && set.contains(&args[0]) => {
                return true;
            }
            _ => {}
        }
    }
    false
}

fn dedup_keep_first(lits: &mut Vec<Term>) -> bool {
    let mut seen = BTreeSet::new();
    let before = lits.len();
    lits.retain(|l| seen.insert(l.clone()));
    lits.len() != before
}

/// Simplifies a clause list to a fixpoint under the shipped theory,
/// returning the result together with the trace that reproduces it.
pub fn simplify_clause_list(cl: &ClauseList) -> (ClauseList, RewriteTrace) {
    let mut steps = Vec::new();
    let mut work: Vec<Option<Vec<Term>>> = Vec::with_capacity(cl.clauses.len());

    for (ci, clause) in cl.clauses.iter().enumerate() {
        let mut lits: Vec<Term> = clause.literals().to_vec();
        for (li, lit) in lits.iter_mut().enumerate() {
            *lit = rewrite_literal(lit.clone(), ci, li, &mut steps);
        }
        let mut probe = lits.clone();
        if dedup_keep_first(&mut probe) {
            steps.push(TraceStep::DedupLiterals { clause: ci });
            lits = probe;
        }
        if is_tautology(&lits) {
            steps.push(TraceStep::DropTautology { clause: ci });
            work.push(None);
            continue;
        }
        if !lits.windows(2).all(|w| w[0] <= w[1]) {
            steps.push(TraceStep::SortLiterals { clause: ci });
            lits.sort();
        }
        work.push(Some(lits));
    }

    // Drop clauses equal to an earlier surviving clause.
    for ci in 0..work.len() {
        if let Some(lits) = work[ci].clone() {
            let dup = work[..ci]
                .iter()
                .any(|w| w.as_deref() == Some(lits.as_slice()));
            if dup {
                steps.push(TraceStep::DropDuplicateClause { clause: ci });
                work[ci] = None;
            }
        }
    }

    let clauses = work
        .into_iter()
        .flatten()
        .map(Clause::from_sorted)
        .collect();
    (ClauseList::new(clauses), RewriteTrace { steps })
}

/// Replays a trace against the clause list it was recorded on.
pub fn replay_trace(cl: &ClauseList, trace: &RewriteTrace) -> Result<ClauseList, ReplayError> {
    let mut work: Vec<Option<Vec<Term>>> = cl
        .clauses
        .iter()
        .map(|c| Some(c.literals().to_vec()))
        .collect();
    for (si, step) in trace.steps.iter().enumerate() {
        match step {
            TraceStep::Rewrite {
                clause,
                literal,
                path,
                rule,
            } => {
                let lits = work
                    .get_mut(*clause)
                    .and_then(Option::as_mut)
                    .ok_or(ReplayError::BadIndex(si))?;
                let lit = lits.get_mut(*literal).ok_or(ReplayError::BadIndex(si))?;
                *lit = apply_rule_at(rule_by_id(*rule), lit, path)
                    .ok_or(ReplayError::RuleMismatch(si))?;
            }
            TraceStep::DedupLiterals { clause } => {
                let lits = work
                    .get_mut(*clause)
                    .and_then(Option::as_mut)
                    .ok_or(ReplayError::BadIndex(si))?;
                dedup_keep_first(lits);
            }
            TraceStep::DropTautology { clause } => {
                let lits = work
                    .get_mut(*clause)
                    .and_then(Option::as_mut)
                    .ok_or(ReplayError::BadIndex(si))?;
                if !is_tautology(lits) {
                    return Err(ReplayError::NotTautology(si));
                }
                work[*clause] = None;
            }
            TraceStep::SortLiterals { clause } => {
                let lits = work
                    .get_mut(*clause)
                    .and_then(Option::as_mut)
                    .ok_or(ReplayError::BadIndex(si))?;
                lits.sort();
            }
            TraceStep::DropDuplicateClause { clause } => {
                let lits = work
                    .get(*clause)
                    .and_then(Option::as_ref)
                    .ok_or(ReplayError::BadIndex(si))?;
                let dup = work[..*clause]
                    .iter()
                    .any(|w| w.as_deref() == Some(lits.as_slice()));
                if !dup {
                    return Err(ReplayError::NotDuplicate(si));
                }
                work[*clause] = None;
            }
        }
    }
    Ok(ClauseList::new(
        work.into_iter().flatten().map(Clause::new).collect(),
    ))
}

/// A simplified clause list renamed onto slot variables `v1..vk` with the
/// source function's own occurrences replaced by arity-indexed stubs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalScheme {
    pub clauses: Vec<Clause>,
    pub slot_count: usize,
}

impl CanonicalScheme {
    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    /// True when `self`'s theorem discharges every clause of `other` under
    /// the identity slot mapping: each clause of `other` has a clause of
    /// `self` whose literals are a subset of its literals.
    pub fn covers(&self, other: &CanonicalScheme) -> bool {
        other
            .clauses
            .iter()
            .all(|oc| self.clauses.iter().any(|sc| sc.subset_of(oc)))
    }
}

/// Mapping from source formals to slot variables.
pub type Renaming = std::collections::BTreeMap<SymbolId, SymbolId>;

/// The slot variable `v<i>` (1-based).
pub fn slot_var(i: usize) -> SymbolId {
    SymbolId::new(&format!("v{}", i))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CanonError {
    #[error("free variable `{0}` is not among the formals")]
    FreeVariable(SymbolId),
    #[error("`{0}` occurs with inconsistent arities")]
    InconsistentArity(SymbolId),
    #[error("input already contains stub symbol `{0}`")]
    StubInInput(SymbolId),
}

/// Renames the formals that occur in `cl` to `v1..vk` (numbered by their
/// order in the formals list) and replaces every application of `self_name`
/// by the stub of its arity. Returns the scheme and the renaming used.
pub fn canonicalize(
    cl: &ClauseList,
    formals: &[SymbolId],
    self_name: &SymbolId,
) -> Result<(CanonicalScheme, Renaming), CanonError> {
    let mut occurring = BTreeSet::new();
    for c in &cl.clauses {
        for l in c.literals() {
            l.collect_vars(&mut occurring);
            let mut heads = BTreeSet::new();
            l.collect_non_builtin_heads(&mut heads);
            for h in heads {
                if h.is_stub() {
                    return Err(CanonError::StubInInput(h));
                }
            }
        }
    }
    for v in &occurring {
        if !formals.contains(v) {
            return Err(CanonError::FreeVariable(v.clone()));
        }
    }

    let mut renaming = Renaming::new();
    let mut k = 0usize;
    for f in formals {
        if occurring.contains(f) {
            k += 1;
            renaming.insert(f.clone(), slot_var(k));
        }
    }

    let mut self_arity: Option<usize> = None;
    fn rewrite(
        t: &Term,
        renaming: &Renaming,
        self_name: &SymbolId,
        self_arity: &mut Option<usize>,
    ) -> Result<Term, CanonError> {
        Ok(match t {
            Term::Const(_) => t.clone(),
            Term::Var(v) => match renaming.get(v) {
                Some(s) => Term::Var(s.clone()),
                None => t.clone(),
            },
            Term::App(h, args) => {
                let head = if h == self_name {
                    match *self_arity {
                        Some(a) if a != args.len() => {
                            return Err(CanonError::InconsistentArity(h.clone()))
                        }
                        _ => *self_arity = Some(args.len()),
                    }
                    SymbolId::stub(args.len())
                } else {
                    h.clone()
                };
                let args = args
                    .iter()
                    .map(|a| rewrite(a, renaming, self_name, self_arity))
                    .collect::<Result<Vec<_>, _>>()?;
                Term::App(head, args)
            }
        })
    }

    let mut clauses = Vec::with_capacity(cl.clauses.len());
    for c in &cl.clauses {
        let lits = c
            .literals()
            .iter()
            .map(|l| rewrite(l, &renaming, self_name, &mut self_arity))
            .collect::<Result<Vec<_>, _>>()?;
        clauses.push(Clause::new(lits));
    }
    clauses.sort();
    clauses.dedup();
    Ok((
        CanonicalScheme {
            clauses,
            slot_count: k,
        },
        renaming,
    ))
}

/// A successful subsumption: the substitution plus, for each literal of the
/// old clause, the index of the new literal it maps onto.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsumptionWitness {
    pub substitution: Substitution,
    pub literal_map: Vec<usize>,
}

/// Decides whether `old` (a clause over slot variables and stubs) subsumes
/// `new`: some extension of `seed` maps every literal of `old` onto a
/// literal of `new` (subset semantics — `new` may have extra literals),
/// with slot variables mapping only to variables and stubs only to
/// `stub_image` when given. Backtracks over target literals; pattern
/// literals are processed largest first, candidates in canonical order, so
/// the first witness is deterministic.
pub fn clause_subsumes(
    old: &Clause,
    new: &Clause,
    seed: &Substitution,
    stub_image: Option<&SymbolId>,
) -> Option<SubsumptionWitness> {
    let mut order: Vec<usize> = (0..old.len()).collect();
    order.sort_by(|&a, &b| {
        let (sa, sb) = (old.literals()[a].size(), old.literals()[b].size());
        sb.cmp(&sa).then(a.cmp(&b))
    });

    fn search(
        k: usize,
        order: &[usize],
        old: &Clause,
        new: &Clause,
        s: &Substitution,
        assign: &mut Vec<usize>,
        stub_image: Option<&SymbolId>,
    ) -> Option<Substitution> {
        if k == order.len() {
            return Some(s.clone());
        }
        let pi = order[k];
        let opts = MatchOptions {
            var_to_var: true,
            stub_image,
        };
        for (j, tlit) in new.literals().iter().enumerate() {
            if let Some(s2) = match_term(&old.literals()[pi], tlit, s, opts) {
                assign[pi] = j;
                if let Some(done) = search(k + 1, order, old, new, &s2, assign, stub_image) {
                    return Some(done);
                }
            }
        }
        None
    }

    let mut assign = vec![0usize; old.len()];
    let substitution = search(0, &order, old, new, seed, &mut assign, stub_image)?;
    Some(SubsumptionWitness {
        substitution,
        literal_map: assign,
    })
}
