//! First-order symbolic terms.
//!
//! A [`Term`] is a variable, a quoted constant ([`Value`]), or an
//! application of a symbol to argument terms. Symbols are case-insensitive
//! and stored lowercase; the builtin function set is fixed and closed, and
//! the reserved spelling `stub-<k>` denotes the generic stand-in for a
//! function of arity `k` inside a stored termination scheme.
//!
//! The canonical textual form produced by [`Term`]'s `Display` impl is the
//! exact byte form used inside database and certificate files.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub mod parse;

pub use parse::{parse_term, parse_terms, ParseError};

/// Builtin function symbols that survive reading, with their arities.
/// `quote`, `t`, `nil`, `list`, `1-`, `1+`, `and`, `or` and the `c[ad]+r`
/// abbreviations are normalized away by the reader and never head a term.
const BUILTIN_ARITIES: &[(&str, usize)] = &[
    ("if", 3),
    ("not", 1),
    ("consp", 1),
    ("atom", 1),
    ("endp", 1),
    ("null", 1),
    ("eq", 2),
    ("eql", 2),
    ("equal", 2),
    ("car", 1),
    ("cdr", 1),
    ("cons", 2),
    ("zp", 1),
    ("natp", 1),
    ("integerp", 1),
    ("<", 2),
    ("+", 2),
    ("-", 2),
    ("acl2-count", 1),
];

/// Symbols the reader expands or treats specially; user functions and
/// variables may not use these spellings.
const READER_RESERVED: &[&str] = &["quote", "t", "nil", "list", "and", "or", "1-", "1+"];

/// A case-insensitive symbol, stored lowercase.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolId(String);

impl SymbolId {
    pub fn new(name: &str) -> SymbolId {
        SymbolId(name.to_ascii_lowercase())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The generic function symbol of the given arity, spelled `stub-<k>`.
    pub fn stub(arity: usize) -> SymbolId {
        SymbolId(format!("stub-{}", arity))
    }

    /// `Some(k)` when this symbol is spelled `stub-<k>` with `k >= 1`.
    pub fn stub_arity(&self) -> Option<usize> {
        let rest = self.0.strip_prefix("stub-")?;
        if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        match rest.parse::<usize>() {
            Ok(k) if k >= 1 && !rest.starts_with('0') => Some(k),
            _ => None,
        }
    }

    pub fn is_stub(&self) -> bool {
        self.stub_arity().is_some()
    }

    pub fn builtin_arity(&self) -> Option<usize> {
        BUILTIN_ARITIES
            .iter()
            .find(|(n, _)| *n == self.0)
            .map(|(_, a)| *a)
    }

    pub fn is_builtin(&self) -> bool {
        self.builtin_arity().is_some()
    }

    /// `cadr`, `cddr`, ..., up to four `a`/`d` steps.
    pub fn is_cxr_abbreviation(&self) -> bool {
        let b = self.0.as_bytes();
        b.len() >= 4
            && b.len() <= 6
            && b[0] == b'c'
            && b[b.len() - 1] == b'r'
            && b[1..b.len() - 1].iter().all(|&c| c == b'a' || c == b'd')
    }

    /// True when the spelling is claimed by the builtin set, the reader, or
    /// the stub convention, and so unavailable to user functions and
    /// variables.
    pub fn is_reserved(&self) -> bool {
        self.is_builtin()
            || self.is_stub()
            || self.is_cxr_abbreviation()
            || READER_RESERVED.contains(&self.0.as_str())
    }
}

impl fmt::Display for SymbolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for SymbolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymbolId({})", self.0)
    }
}

impl From<&str> for SymbolId {
    fn from(s: &str) -> SymbolId {
        SymbolId::new(s)
    }
}

/// A closed first-order value: a natural number, a constant symbol, or a
/// pair of values. This is both the payload of quoted constants and the
/// universe the bounded evaluator ranges over.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Value {
    Nat(u64),
    Sym(SymbolId),
    Pair(Box<Value>, Box<Value>),
}

impl Value {
    pub fn nil() -> Value {
        Value::Sym(SymbolId::new("nil"))
    }

    pub fn t() -> Value {
        Value::Sym(SymbolId::new("t"))
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Value::Sym(s) if s.as_str() == "nil")
    }

    pub fn cons(a: Value, b: Value) -> Value {
        Value::Pair(Box::new(a), Box::new(b))
    }

    /// Structural size: naturals count as themselves, other atoms as 0,
    /// pairs as one plus the counts of both components.
    pub fn acl2_count(&self) -> u64 {
        match self {
            Value::Nat(n) => *n,
            Value::Sym(_) => 0,
            Value::Pair(a, b) => 1u64
                .saturating_add(a.acl2_count())
                .saturating_add(b.acl2_count()),
        }
    }

    /// The unquoted datum spelling, used inside quoted constants.
    fn fmt_datum(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Nat(n) => write!(f, "{}", n),
            Value::Sym(s) => write!(f, "{}", s),
            Value::Pair(a, b) => {
                write!(f, "(")?;
                a.fmt_datum(f)?;
                write!(f, " . ")?;
                b.fmt_datum(f)?;
                write!(f, ")")
            }
        }
    }
}

/// A first-order term.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Term {
    /// A quoted constant.
    Const(Value),
    /// A variable.
    Var(SymbolId),
    /// An application of a builtin, user function, or stub.
    App(SymbolId, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(SymbolId::new(name))
    }

    pub fn nat(n: u64) -> Term {
        Term::Const(Value::Nat(n))
    }

    pub fn nil() -> Term {
        Term::Const(Value::nil())
    }

    pub fn t() -> Term {
        Term::Const(Value::t())
    }

    pub fn app(head: &str, args: Vec<Term>) -> Term {
        Term::App(SymbolId::new(head), args)
    }

    /// Node count, used by the subsumption literal ordering and the rewrite
    /// termination measure.
    pub fn size(&self) -> usize {
        match self {
            Term::Const(_) | Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<SymbolId>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Const(_) => {}
            Term::App(_, args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<SymbolId> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    /// All application heads that are not builtins (user functions and
    /// stubs).
    pub fn collect_non_builtin_heads(&self, out: &mut BTreeSet<SymbolId>) {
        if let Term::App(h, args) = self {
            if !h.is_builtin() {
                out.insert(h.clone());
            }
            for a in args {
                a.collect_non_builtin_heads(out);
            }
        }
    }

    pub fn mentions_user_or_stub(&self) -> bool {
        match self {
            Term::App(h, args) => (!h.is_builtin()) || args.iter().any(Term::mentions_user_or_stub),
            _ => false,
        }
    }

    /// Number of applications of `name` anywhere in the term.
    pub fn count_calls(&self, name: &SymbolId) -> usize {
        match self {
            Term::App(h, args) => {
                let self_hit = usize::from(h == name);
                self_hit + args.iter().map(|a| a.count_calls(name)).sum::<usize>()
            }
            _ => 0,
        }
    }
}

/// Total order: constants, then variables, then applications; applications
/// compare by head name, then arity, then arguments left to right.
impl Ord for Term {
    fn cmp(&self, other: &Term) -> Ordering {
        fn rank(t: &Term) -> u8 {
            match t {
                Term::Const(_) => 0,
                Term::Var(_) => 1,
                Term::App(..) => 2,
            }
        }
        match (self, other) {
            (Term::Const(a), Term::Const(b)) => a.cmp(b),
            (Term::Var(a), Term::Var(b)) => a.cmp(b),
            (Term::App(h, xs), Term::App(g, ys)) => h
                .cmp(g)
                .then_with(|| xs.len().cmp(&ys.len()))
                .then_with(|| xs.cmp(ys)),
            _ => rank(self).cmp(&rank(other)),
        }
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Term) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{}", v),
            Term::Const(Value::Nat(n)) => write!(f, "{}", n),
            Term::Const(Value::Sym(s)) if s.as_str() == "nil" || s.as_str() == "t" => {
                write!(f, "{}", s)
            }
            Term::Const(v) => {
                write!(f, "'")?;
                v.fmt_datum(f)
            }
            Term::App(h, args) => {
                write!(f, "({}", h)?;
                for a in args {
                    write!(f, " {}", a)?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SubstError {
    #[error("stub {stub} applied to {found} arguments, expected {expected}")]
    StubArity {
        stub: SymbolId,
        expected: usize,
        found: usize,
    },
}

/// A simultaneous replacement of variables by terms and stub symbols by
/// user function symbols.
#[derive(Clone, Default, PartialEq, Eq, Debug)]
pub struct Substitution {
    vars: BTreeMap<SymbolId, Term>,
    stubs: BTreeMap<SymbolId, SymbolId>,
}

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty() && self.stubs.is_empty()
    }

    pub fn var_image(&self, v: &SymbolId) -> Option<&Term> {
        self.vars.get(v)
    }

    pub fn stub_image(&self, s: &SymbolId) -> Option<&SymbolId> {
        self.stubs.get(s)
    }

    pub fn bind_var(&mut self, v: SymbolId, t: Term) {
        self.vars.insert(v, t);
    }

    pub fn bind_stub(&mut self, s: SymbolId, f: SymbolId) {
        self.stubs.insert(s, f);
    }

    pub fn vars(&self) -> impl Iterator<Item = (&SymbolId, &Term)> {
        self.vars.iter()
    }

    pub fn stubs(&self) -> impl Iterator<Item = (&SymbolId, &SymbolId)> {
        self.stubs.iter()
    }

    /// Applies the substitution. Variables and stubs without an image are
    /// left unchanged; replacing a stub checks that the application arity
    /// matches the stub's spelled arity.
    pub fn apply(&self, t: &Term) -> Result<Term, SubstError> {
        match t {
            Term::Const(_) => Ok(t.clone()),
            Term::Var(v) => Ok(self.vars.get(v).cloned().unwrap_or_else(|| t.clone())),
            Term::App(h, args) => {
                let head = match self.stubs.get(h) {
                    Some(f) => {
                        let expected = h.stub_arity().unwrap_or(args.len());
                        if args.len() != expected {
                            return Err(SubstError::StubArity {
                                stub: h.clone(),
                                expected,
                                found: args.len(),
                            });
                        }
                        f.clone()
                    }
                    None => h.clone(),
                };
                let new_args = args
                    .iter()
                    .map(|a| self.apply(a))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Term::App(head, new_args))
            }
        }
    }
}

/// Options for [`match_term`].
#[derive(Clone, Copy, Default)]
pub struct MatchOptions<'a> {
    /// Restrict variable images to variables (the subsumption mode: slot
    /// variables may map only to the new definition's formals).
    pub var_to_var: bool,
    /// Restrict stub images to this one function symbol.
    pub stub_image: Option<&'a SymbolId>,
}

/// One-way matching: extends `seed` to a substitution `s` with
/// `s.apply(pattern) == target`, or returns `None` when no extension
/// exists. The pattern may contain variables and stubs; failure is a
/// result, not an error.
pub fn match_term(
    pattern: &Term,
    target: &Term,
    seed: &Substitution,
    opts: MatchOptions,
) -> Option<Substitution> {
    let mut s = seed.clone();
    if match_into(pattern, target, &mut s, opts) {
        Some(s)
    } else {
        None
    }
}

fn match_into(pattern: &Term, target: &Term, s: &mut Substitution, opts: MatchOptions) -> bool {
    match (pattern, target) {
        (Term::Const(a), Term::Const(b)) => a == b,
        (Term::Var(v), _) => match s.var_image(v) {
            Some(img) => img == target,
            None => {
                if opts.var_to_var && !matches!(target, Term::Var(_)) {
                    return false;
                }
                s.bind_var(v.clone(), target.clone());
                true
            }
        },
        (Term::App(h, pargs), Term::App(g, targs)) => {
            if pargs.len() != targs.len() {
                return false;
            }
            if let Some(k) = h.stub_arity() {
                match s.stub_image(h) {
                    Some(f) => {
                        if f != g {
                            return false;
                        }
                    }
                    None => {
                        if h == g {
                            // Unbound stub against the same stub symbol:
                            // bind the identity, so a later binding of this
                            // stub to a function cannot silently invalidate
                            // the match of this occurrence.
                            s.bind_stub(h.clone(), g.clone());
                        } else {
                            if g.is_builtin() || g.is_stub() || pargs.len() != k {
                                return false;
                            }
                            if let Some(only) = opts.stub_image {
                                if g != only {
                                    return false;
                                }
                            }
                            s.bind_stub(h.clone(), g.clone());
                        }
                    }
                }
            } else if h != g {
                return false;
            }
            pargs
                .iter()
                .zip(targs)
                .all(|(p, t)| match_into(p, t, s, opts))
        }
        _ => false,
    }
}
