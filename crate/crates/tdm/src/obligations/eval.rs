//! A total, bounded evaluator over the closed value universe, and the
//! exhaustive falsifier built on it.
//!
//! Evaluation is deliberately total on builtins: `car`/`cdr` of a non-pair
//! is `nil`, arithmetic coerces non-naturals to 0, and subtraction
//! truncates at 0. User function calls consume fuel; running out yields a
//! distinguished non-termination verdict rather than an answer.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::obligations::{Clause, ClauseList, FunctionDef};
use crate::term::{SymbolId, Term, Value};

pub type Env = BTreeMap<SymbolId, Value>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("fuel exhausted: evaluation may not terminate")]
    Nonterminating,
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(SymbolId),
    #[error("unbound variable `{0}`")]
    UnboundVariable(SymbolId),
}

/// Structural size of a value. See [`Value::acl2_count`].
pub fn acl2_count(v: &Value) -> u64 {
    v.acl2_count()
}

fn truthy(v: &Value) -> bool {
    !v.is_nil()
}

fn boolean(b: bool) -> Value {
    if b {
        Value::t()
    } else {
        Value::nil()
    }
}

fn to_nat(v: &Value) -> u64 {
    match v {
        Value::Nat(n) => *n,
        _ => 0,
    }
}

/// Strict evaluation of `t` under `env`, with `fuel` shared across all user
/// function calls in the evaluation.
pub fn eval_term(
    t: &Term,
    env: &Env,
    defs: &BTreeMap<SymbolId, FunctionDef>,
    fuel: &mut u64,
) -> Result<Value, EvalError> {
    match t {
        Term::Const(v) => Ok(v.clone()),
        Term::Var(x) => env
            .get(x)
            .cloned()
            .ok_or_else(|| EvalError::UnboundVariable(x.clone())),
        Term::App(h, args) => {
            if h.as_str() == "if" {
                let test = eval_term(&args[0], env, defs, fuel)?;
                return if truthy(&test) {
                    eval_term(&args[1], env, defs, fuel)
                } else {
                    eval_term(&args[2], env, defs, fuel)
                };
            }
            let vals = args
                .iter()
                .map(|a| eval_term(a, env, defs, fuel))
                .collect::<Result<Vec<_>, _>>()?;
            match h.as_str() {
                "not" => Ok(boolean(!truthy(&vals[0]))),
                "consp" => Ok(boolean(matches!(vals[0], Value::Pair(..)))),
                "atom" | "endp" => Ok(boolean(!matches!(vals[0], Value::Pair(..)))),
                "null" => Ok(boolean(vals[0].is_nil())),
                "eq" | "eql" | "equal" => Ok(boolean(vals[0] == vals[1])),
                "car" => Ok(match &vals[0] {
                    Value::Pair(a, _) => (**a).clone(),
                    _ => Value::nil(),
                }),
                "cdr" => Ok(match &vals[0] {
                    Value::Pair(_, b) => (**b).clone(),
                    _ => Value::nil(),
                }),
                "cons" => {
                    let mut it = vals.into_iter();
                    let a = it.next().unwrap();
                    let b = it.next().unwrap();
                    Ok(Value::cons(a, b))
                }
                "zp" => Ok(boolean(to_nat(&vals[0]) == 0)),
                "natp" | "integerp" => Ok(boolean(matches!(vals[0], Value::Nat(_)))),
                "<" => Ok(boolean(to_nat(&vals[0]) < to_nat(&vals[1]))),
                "+" => Ok(Value::Nat(
                    to_nat(&vals[0]).saturating_add(to_nat(&vals[1])),
                )),
                "-" => Ok(Value::Nat(
                    to_nat(&vals[0]).saturating_sub(to_nat(&vals[1])),
                )),
                "acl2-count" => Ok(Value::Nat(vals[0].acl2_count())),
                _ => {
                    let def = defs
                        .get(h)
                        .ok_or_else(|| EvalError::UnknownSymbol(h.clone()))?;
                    if *fuel == 0 {
                        return Err(EvalError::Nonterminating);
                    }
                    *fuel -= 1;
                    let mut inner = Env::new();
                    for (f, v) in def.formals.iter().zip(vals) {
                        inner.insert(f.clone(), v);
                    }
                    eval_term(&def.body, &inner, defs, fuel)
                }
            }
        }
    }
}

/// All values of `acl2_count <= max_count` over the symbols `nil`, `t` and
/// the naturals, in a fixed enumeration order: by count, and within one
/// count the atoms before the pairs.
pub fn enumerate_values(max_count: u64) -> Vec<Value> {
    let mut by_count: Vec<Vec<Value>> = Vec::new();
    for c in 0..=max_count {
        let mut bucket = Vec::new();
        if c == 0 {
            bucket.push(Value::nil());
            bucket.push(Value::t());
            bucket.push(Value::Nat(0));
        } else {
            bucket.push(Value::Nat(c));
            for i in 0..c {
                let j = c - 1 - i;
                for a in &by_count[i as usize] {
                    for b in &by_count[j as usize] {
                        bucket.push(Value::cons(a.clone(), b.clone()));
                    }
                }
            }
        }
        by_count.push(bucket);
    }
    by_count.into_iter().flatten().collect()
}

/// A falsifying assignment for one clause of an obligation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub clause_index: usize,
    pub env: Env,
}

/// Result of a bounded falsification run.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FalsifyOutcome {
    pub counterexample: Option<Counterexample>,
    /// Clauses mentioning user functions or stubs, which the falsifier
    /// cannot evaluate and reports as not falsifiable.
    pub skipped: Vec<usize>,
}

/// Searches for an environment of values of `acl2_count <= max_count` under
/// which every literal of some clause evaluates to `nil`. Returns the first
/// such environment in enumeration order (variables ordered by name, the
/// last one varying fastest), scanning clauses in order.
pub fn falsify(cl: &ClauseList, max_count: u64) -> FalsifyOutcome {
    let values = enumerate_values(max_count);
    let mut outcome = FalsifyOutcome::default();
    for (ci, clause) in cl.clauses.iter().enumerate() {
        if clause.literals().iter().any(Term::mentions_user_or_stub) {
            outcome.skipped.push(ci);
            continue;
        }
        if let Some(env) = falsify_clause(clause, &values) {
            outcome.counterexample = Some(Counterexample {
                clause_index: ci,
                env,
            });
            return outcome;
        }
    }
    outcome
}

/// Borrow-or-own evaluation result, so that `car`/`cdr` chains walk the
/// candidate values without cloning. The enumeration spaces the falsifier
/// scans make the cloning evaluator prohibitively slow here.
enum Ev<'a> {
    Borrowed(&'a Value),
    Owned(Value),
}

impl<'a> Ev<'a> {
    fn get(&self) -> &Value {
        match self {
            Ev::Borrowed(v) => v,
            Ev::Owned(v) => v,
        }
    }

    fn car(self) -> Ev<'a> {
        match self {
            Ev::Borrowed(Value::Pair(a, _)) => Ev::Borrowed(a),
            Ev::Owned(Value::Pair(a, _)) => Ev::Owned(*a),
            _ => Ev::Owned(Value::nil()),
        }
    }

    fn cdr(self) -> Ev<'a> {
        match self {
            Ev::Borrowed(Value::Pair(_, b)) => Ev::Borrowed(b),
            Ev::Owned(Value::Pair(_, b)) => Ev::Owned(*b),
            _ => Ev::Owned(Value::nil()),
        }
    }
}

/// Builtin-only evaluation over a small slice environment. Semantics match
/// [`eval_term`]; callers guarantee no user functions or stubs occur.
fn eval_fast<'a>(t: &'a Term, env: &[(&SymbolId, &'a Value)]) -> Ev<'a> {
    match t {
        Term::Const(v) => Ev::Borrowed(v),
        Term::Var(x) => {
            let v = env
                .iter()
                .find(|(s, _)| *s == x)
                .map(|(_, v)| *v)
                .expect("falsifier binds every clause variable");
            Ev::Borrowed(v)
        }
        Term::App(h, args) => match h.as_str() {
            "if" => {
                if truthy(eval_fast(&args[0], env).get()) {
                    eval_fast(&args[1], env)
                } else {
                    eval_fast(&args[2], env)
                }
            }
            "not" => Ev::Owned(boolean(!truthy(eval_fast(&args[0], env).get()))),
            "consp" => Ev::Owned(boolean(matches!(
                eval_fast(&args[0], env).get(),
                Value::Pair(..)
            ))),
            "atom" | "endp" => Ev::Owned(boolean(!matches!(
                eval_fast(&args[0], env).get(),
                Value::Pair(..)
            ))),
            "null" => Ev::Owned(boolean(eval_fast(&args[0], env).get().is_nil())),
            "eq" | "eql" | "equal" => Ev::Owned(boolean(
                eval_fast(&args[0], env).get() == eval_fast(&args[1], env).get(),
            )),
            "car" => eval_fast(&args[0], env).car(),
            "cdr" => eval_fast(&args[0], env).cdr(),
            "cons" => Ev::Owned(Value::cons(
                eval_fast(&args[0], env).get().clone(),
                eval_fast(&args[1], env).get().clone(),
            )),
            "zp" => Ev::Owned(boolean(to_nat(eval_fast(&args[0], env).get()) == 0)),
            "natp" | "integerp" => Ev::Owned(boolean(matches!(
                eval_fast(&args[0], env).get(),
                Value::Nat(_)
            ))),
            "<" => Ev::Owned(boolean(
                to_nat(eval_fast(&args[0], env).get()) < to_nat(eval_fast(&args[1], env).get()),
            )),
            "+" => Ev::Owned(Value::Nat(
                to_nat(eval_fast(&args[0], env).get())
                    .saturating_add(to_nat(eval_fast(&args[1], env).get())),
            )),
            "-" => Ev::Owned(Value::Nat(
                to_nat(eval_fast(&args[0], env).get())
                    .saturating_sub(to_nat(eval_fast(&args[1], env).get())),
            )),
            "acl2-count" => Ev::Owned(Value::Nat(eval_fast(&args[0], env).get().acl2_count())),
            other => panic!("user symbol `{}` in falsifier literal", other),
        },
    }
}

/// Falsifies a single clause, exploiting that literals over disjoint
/// variable sets constrain the environment independently: the
/// lexicographically first falsifying assignment is the combination of the
/// first falsifying sub-assignment of each connected variable group.
fn falsify_clause(clause: &Clause, values: &[Value]) -> Option<Env> {
    let eval_lit =
        |lit: &Term, env: &[(&SymbolId, &Value)]| -> bool { truthy(eval_fast(lit, env).get()) };

    let vars: Vec<SymbolId> = clause.vars().into_iter().collect();

    // Ground literals: any true one makes the clause unfalsifiable.
    let ground: Vec<&Term> = clause
        .literals()
        .iter()
        .filter(|l| l.vars().is_empty())
        .collect();
    if ground.iter().any(|l| eval_lit(l, &[])) {
        return None;
    }

    if vars.is_empty() {
        // Every literal is ground and false: the empty environment
        // falsifies the clause (an empty clause is trivially false too).
        return Some(Env::new());
    }

    // Union variables that co-occur in a literal into groups.
    let mut group_of: Vec<usize> = (0..vars.len()).collect();
    fn root(g: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while g[i] != i {
            g[i] = g[g[i]];
            i = g[i];
        }
        i
    }
    for lit in clause.literals() {
        let lv: Vec<usize> = lit
            .vars()
            .iter()
            .map(|v| vars.binary_search(v).unwrap())
            .collect();
        for w in lv.windows(2) {
            let (a, b) = (root(&mut group_of, w[0]), root(&mut group_of, w[1]));
            group_of[a] = b;
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..vars.len() {
        let r = root(&mut group_of, i);
        groups.entry(r).or_default().push(i);
    }

    let mut result = Env::new();
    for (_, members) in groups {
        let group_vars: Vec<&SymbolId> = members.iter().map(|&i| &vars[i]).collect();
        let group_lits: Vec<&Term> = clause
            .literals()
            .iter()
            .filter(|l| {
                let lv = l.vars();
                !lv.is_empty() && lv.iter().all(|v| group_vars.contains(&v))
            })
            .collect();
        // Odometer over the group's variables, last variable fastest.
        let k = group_vars.len();
        let mut idx = vec![0usize; k];
        let mut env: Vec<(&SymbolId, &Value)> =
            group_vars.iter().map(|v| (*v, &values[0])).collect();
        let mut found = false;
        'outer: loop {
            if group_lits.iter().all(|l| !eval_lit(l, &env)) {
                for (v, val) in &env {
                    result.insert((*v).clone(), (*val).clone());
                }
                found = true;
                break 'outer;
            }
            let mut pos = k;
            loop {
                if pos == 0 {
                    break 'outer;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < values.len() {
                    env[pos].1 = &values[idx[pos]];
                    break;
                }
                idx[pos] = 0;
                env[pos].1 = &values[0];
            }
        }
        if !found {
            return None;
        }
    }
    Some(result)
}
