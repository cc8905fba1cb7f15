//! Function definitions and their termination proof obligations.
//!
//! A recursive definition yields one [`CallContext`] per occurrence of its
//! own name in the body: the governing `if` tests (the ruler) plus the
//! arguments of that call. Given a measure, [`measure_conjecture`] turns the
//! contexts into a [`ClauseList`] — one clause per call, each the
//! disjunction of the negated ruler tests and the strict-decrease literal.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::term::parse::{read_forms, term_from_sexp, ParseError, Sexp};
use crate::term::{SymbolId, Term};

pub mod eval;

pub use eval::{acl2_count, enumerate_values, eval_term, falsify, Counterexample, Env, EvalError};

/// The single supported well-founded relation: `<` on naturals.
pub const RELATION: &str = "nat<";

/// The three-goal worked example exercised across the test suite.
#[cfg(test)]
pub(crate) const F3_SRC: &str = "(defun f3 (x y)
  (if (consp x)
      (if (atom y)
          (list (f3 (cddr x) y) (f3 (cadr x) y))
        (f3 (cdr x) y))
    (list x y)))";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DefError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("malformed defun: {0}")]
    Malformed(String),
    #[error("duplicate formal `{0}`")]
    DuplicateFormal(SymbolId),
    #[error("formal `{0}` is not a legal variable")]
    BadFormal(SymbolId),
    #[error("function name `{0}` collides with a builtin or reserved symbol")]
    ReservedName(SymbolId),
    #[error("free variable `{0}` in {1}")]
    FreeVariable(SymbolId, &'static str),
    #[error("unknown declare key `{0}` (only :measure is supported)")]
    UnknownDeclareKey(String),
    #[error("recursive call of `{name}` with {found} arguments, expected {expected}")]
    SelfCallArity {
        name: SymbolId,
        expected: usize,
        found: usize,
    },
    #[error("measure is not a natural-valued shape: {0}")]
    BadMeasure(Term),
    #[error("mutual-recursion blocks are not supported")]
    MutualRecursion,
}

/// A parsed `(defun name (formals...) [declare] body)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDef {
    pub name: SymbolId,
    pub formals: Vec<SymbolId>,
    pub body: Term,
    pub declared_measure: Option<Term>,
}

/// One recursive call together with its governing tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallContext {
    /// Governing tests in the order they were accumulated, each possibly
    /// wrapped in `not` for else-branches.
    pub ruler: Vec<Term>,
    /// Arguments of the recursive call, verbatim (nested recursive calls
    /// included).
    pub args: Vec<Term>,
    /// Position of this context in traversal order, for reporting.
    pub call_path: usize,
}

/// A disjunction of literals, kept canonically ordered and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clause {
    literals: Vec<Term>,
}

impl Clause {
    pub fn new(mut literals: Vec<Term>) -> Clause {
        literals.sort();
        literals.dedup();
        Clause { literals }
    }

    /// For literal vectors already known to be sorted and duplicate-free.
    pub fn from_sorted(literals: Vec<Term>) -> Clause {
        debug_assert!(literals.windows(2).all(|w| w[0] < w[1]));
        Clause { literals }
    }

    pub fn literals(&self) -> &[Term] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn contains(&self, lit: &Term) -> bool {
        self.literals.binary_search(lit).is_ok()
    }

    /// Subset test on sorted literal vectors.
    pub fn subset_of(&self, other: &Clause) -> bool {
        let mut it = other.literals.iter();
        'outer: for lit in &self.literals {
            for cand in it.by_ref() {
                match cand.cmp(lit) {
                    std::cmp::Ordering::Less => continue,
                    std::cmp::Ordering::Equal => continue 'outer,
                    std::cmp::Ordering::Greater => return false,
                }
            }
            return false;
        }
        true
    }

    pub fn vars(&self) -> BTreeSet<SymbolId> {
        let mut out = BTreeSet::new();
        for lit in &self.literals {
            lit.collect_vars(&mut out);
        }
        out
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for lit in &self.literals {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{}", lit)?;
            first = false;
        }
        Ok(())
    }
}

/// A conjunction of clauses: a termination proof obligation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClauseList {
    pub clauses: Vec<Clause>,
}

impl ClauseList {
    pub fn new(clauses: Vec<Clause>) -> ClauseList {
        ClauseList { clauses }
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }
}

/// A measure term over a definition's formals, compared with `nat<`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Measure {
    pub term: Term,
}

impl Measure {
    pub fn new(term: Term) -> Measure {
        Measure { term }
    }

    pub fn acl2_count_of(v: &SymbolId) -> Measure {
        Measure {
            term: Term::app("acl2-count", vec![Term::Var(v.clone())]),
        }
    }

    /// Natural-valued measure shapes: `acl2-count` of anything, `+`/`-`
    /// compositions, and natural literals.
    pub fn shape_ok(term: &Term) -> bool {
        match term {
            Term::Const(crate::term::Value::Nat(_)) => true,
            Term::App(h, args) => match h.as_str() {
                "acl2-count" => true,
                "+" | "-" => args.iter().all(Measure::shape_ok),
                _ => false,
            },
            _ => false,
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.term)
    }
}

fn legal_variable(s: &SymbolId) -> bool {
    !s.is_reserved()
}

/// Interprets a `(defun ...)` form.
pub fn defun_from_sexp(form: &Sexp) -> Result<FunctionDef, DefError> {
    let items = match form {
        Sexp::List(items, _) => items,
        _ => return Err(DefError::Malformed("expected a (defun ...) form".into())),
    };
    match items.first().and_then(Sexp::sym) {
        Some("defun") | Some("defunt") => {}
        Some("mutual-recursion") => return Err(DefError::MutualRecursion),
        _ => return Err(DefError::Malformed("expected a (defun ...) form".into())),
    }
    if items.len() < 4 || items.len() > 5 {
        return Err(DefError::Malformed(
            "expected (defun name (formals...) [declare] body)".into(),
        ));
    }
    let name = match items[1].sym() {
        Some(s) => SymbolId::new(s),
        None => return Err(DefError::Malformed("function name must be a symbol".into())),
    };
    if name.is_reserved() || name.as_str() == "defun" {
        return Err(DefError::ReservedName(name));
    }
    let formals = match &items[2] {
        Sexp::List(fs, _) => fs
            .iter()
            .map(|f| {
                f.sym()
                    .map(SymbolId::new)
                    .ok_or_else(|| DefError::Malformed("formals must be symbols".into()))
            })
            .collect::<Result<Vec<_>, _>>()?,
        _ => return Err(DefError::Malformed("formals must be a list".into())),
    };
    for (i, f) in formals.iter().enumerate() {
        if !legal_variable(f) {
            return Err(DefError::BadFormal(f.clone()));
        }
        if formals[..i].contains(f) {
            return Err(DefError::DuplicateFormal(f.clone()));
        }
    }

    let (declare, body_form) = if items.len() == 5 {
        (Some(&items[3]), &items[4])
    } else {
        (None, &items[3])
    };

    let declared_measure = match declare {
        None => None,
        Some(d) => Some(parse_declare(d)?),
    };

    let body = term_from_sexp(body_form)?;

    let formal_set: BTreeSet<SymbolId> = formals.iter().cloned().collect();
    for v in body.vars() {
        if !formal_set.contains(&v) {
            return Err(DefError::FreeVariable(v, "body"));
        }
    }
    if let Some(m) = &declared_measure {
        for v in m.vars() {
            if !formal_set.contains(&v) {
                return Err(DefError::FreeVariable(v, "measure"));
            }
        }
        if !Measure::shape_ok(m) {
            return Err(DefError::BadMeasure(m.clone()));
        }
    }
    check_self_call_arity(&body, &name, formals.len())?;

    Ok(FunctionDef {
        name,
        formals,
        body,
        declared_measure,
    })
}

fn parse_declare(d: &Sexp) -> Result<Term, DefError> {
    let items = match d {
        Sexp::List(items, _) if items.first().and_then(Sexp::sym) == Some("declare") => items,
        _ => return Err(DefError::Malformed("expected (declare (xargs ...))".into())),
    };
    if items.len() != 2 {
        return Err(DefError::Malformed("expected (declare (xargs ...))".into()));
    }
    let xargs = match &items[1] {
        Sexp::List(x, _) if x.first().and_then(Sexp::sym) == Some("xargs") => x,
        _ => return Err(DefError::Malformed("expected (declare (xargs ...))".into())),
    };
    let mut measure = None;
    let mut i = 1;
    while i < xargs.len() {
        let key = xargs[i]
            .sym()
            .ok_or_else(|| DefError::Malformed("xargs keys must be keywords".into()))?;
        if key != ":measure" {
            return Err(DefError::UnknownDeclareKey(key.to_string()));
        }
        if i + 1 >= xargs.len() || measure.is_some() {
            return Err(DefError::Malformed("malformed :measure".into()));
        }
        measure = Some(term_from_sexp(&xargs[i + 1])?);
        i += 2;
    }
    measure.ok_or_else(|| DefError::Malformed("declare without :measure".into()))
}

fn check_self_call_arity(t: &Term, name: &SymbolId, arity: usize) -> Result<(), DefError> {
    if let Term::App(h, args) = t {
        if h == name && args.len() != arity {
            return Err(DefError::SelfCallArity {
                name: name.clone(),
                expected: arity,
                found: args.len(),
            });
        }
        for a in args {
            check_self_call_arity(a, name, arity)?;
        }
    }
    Ok(())
}

/// Parses a source string holding exactly one defun form.
pub fn parse_defun(src: &str) -> Result<FunctionDef, DefError> {
    let forms = read_forms(src)?;
    if forms.len() != 1 {
        return Err(DefError::Malformed(format!(
            "expected exactly one defun form, found {}",
            forms.len()
        )));
    }
    defun_from_sexp(&forms[0])
}

/// Parses a file of defun forms (`;` comments allowed).
pub fn parse_defun_file(src: &str) -> Result<Vec<FunctionDef>, DefError> {
    read_forms(src)?.iter().map(defun_from_sexp).collect()
}

impl FunctionDef {
    pub fn is_recursive(&self) -> bool {
        self.body.count_calls(&self.name) > 0
    }

    /// Canonical single-line rendering, the basis of the definition digest
    /// carried in certificates.
    pub fn canonical_text(&self) -> String {
        let formals = self
            .formals
            .iter()
            .map(SymbolId::as_str)
            .collect::<Vec<_>>()
            .join(" ");
        match &self.declared_measure {
            Some(m) => format!(
                "(defun {} ({}) (declare (xargs :measure {})) {})",
                self.name, formals, m, self.body
            ),
            None => format!("(defun {} ({}) {})", self.name, formals, self.body),
        }
    }

    /// One context per occurrence of the function's own name in the body.
    ///
    /// Traversal: for `(if q a b)` the test is visited first (its calls are
    /// governed by the enclosing ruler only), then the else-branch under
    /// `(not q)`, then the then-branch under `q`. For any other application
    /// the arguments are visited left to right and the occurrence itself is
    /// emitted after them, so an inner recursive call yields its context
    /// before the enclosing one and remains verbatim in the outer call's
    /// arguments.
    pub fn call_contexts(&self) -> Vec<CallContext> {
        fn walk(t: &Term, name: &SymbolId, ruler: &mut Vec<Term>, out: &mut Vec<CallContext>) {
            if let Term::App(h, args) = t {
                if h.as_str() == "if" && args.len() == 3 {
                    walk(&args[0], name, ruler, out);
                    ruler.push(Term::app("not", vec![args[0].clone()]));
                    walk(&args[2], name, ruler, out);
                    ruler.pop();
                    ruler.push(args[0].clone());
                    walk(&args[1], name, ruler, out);
                    ruler.pop();
                } else {
                    for a in args {
                        walk(a, name, ruler, out);
                    }
                    if h == name {
                        out.push(CallContext {
                            ruler: ruler.clone(),
                            args: args.clone(),
                            call_path: out.len(),
                        });
                    }
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.body, &self.name, &mut Vec::new(), &mut out);
        out
    }
}

/// Strips `(not (not p))` at the top of a literal.
fn collapse_double_not(mut t: Term) -> Term {
    loop {
        let inner = match &t {
            Term::App(h, args) if h.as_str() == "not" => match &args[0] {
                Term::App(g, inner_args) if g.as_str() == "not" => Some(inner_args[0].clone()),
                _ => None,
            },
            _ => None,
        };
        match inner {
            Some(p) => t = p,
            None => return t,
        }
    }
}

/// The termination obligation for `def` under measure `m`: one clause per
/// call context, whose literals are the negated ruler tests plus the
/// strict-decrease literal for the call's arguments.
pub fn measure_conjecture(def: &FunctionDef, m: &Measure) -> ClauseList {
    let contexts = def.call_contexts();
    let mut clauses = Vec::with_capacity(contexts.len());
    for ctx in &contexts {
        let mut subst = crate::term::Substitution::new();
        for (f, a) in def.formals.iter().zip(&ctx.args) {
            subst.bind_var(f.clone(), a.clone());
        }
        // The measure contains no stubs, so substitution cannot fail.
        let m_call = subst.apply(&m.term).expect("measure substitution");
        let mut literals: Vec<Term> = ctx
            .ruler
            .iter()
            .map(|r| collapse_double_not(Term::app("not", vec![r.clone()])))
            .collect();
        literals.push(Term::app("<", vec![m_call, m.term.clone()]));
        clauses.push(Clause::new(literals));
    }
    ClauseList::new(clauses)
}
