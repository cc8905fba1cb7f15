//! Property tests over the term, normalization and search layers.

use std::collections::BTreeMap;

use proptest::prelude::*;

use tdm::normalize::{clause_subsumes, replay_trace, simplify_clause_list};
use tdm::obligations::{enumerate_values, eval_term, Clause, ClauseList, Env};
use tdm::term::{match_term, parse_term, MatchOptions, Substitution, SymbolId, Term, Value};

fn arb_value() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        (0u64..5).prop_map(Value::Nat),
        prop_oneof![Just("nil"), Just("t"), Just("blue"), Just("leaf")]
            .prop_map(|s| Value::Sym(SymbolId::new(s))),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        (inner.clone(), inner).prop_map(|(a, b)| Value::cons(a, b))
    })
}

/// Random printable terms: builtins at their arities, a few user functions,
/// stubs, variables and constants.
fn arb_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        prop_oneof![Just("x"), Just("y"), Just("z")].prop_map(Term::var),
        arb_value().prop_map(Term::Const),
    ];
    leaf.prop_recursive(4, 32, 3, |inner| {
        prop_oneof![
            (
                prop_oneof![
                    Just("not"),
                    Just("consp"),
                    Just("atom"),
                    Just("endp"),
                    Just("null"),
                    Just("car"),
                    Just("cdr"),
                    Just("zp"),
                    Just("natp"),
                    Just("acl2-count")
                ],
                inner.clone()
            )
                .prop_map(|(h, a)| Term::app(h, vec![a])),
            (
                prop_oneof![
                    Just("eq"),
                    Just("eql"),
                    Just("equal"),
                    Just("cons"),
                    Just("<"),
                    Just("+"),
                    Just("-")
                ],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(h, a, b)| Term::app(h, vec![a, b])),
            (inner.clone(), inner.clone(), inner.clone())
                .prop_map(|(a, b, c)| Term::app("if", vec![a, b, c])),
            (
                prop_oneof![Just("my-f"), Just("my-g")],
                prop::collection::vec(inner.clone(), 1..=2)
            )
                .prop_map(|(h, args)| Term::app(h, args)),
            (1usize..=2).prop_flat_map({
                let inner = inner.clone();
                move |k| {
                    prop::collection::vec(inner.clone(), k..=k)
                        .prop_map(move |args| Term::App(SymbolId::stub(k), args))
                }
            }),
        ]
    })
}

fn config() -> ProptestConfig {
    ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn print_parse_round_trip(t in arb_term()) {
        let printed = t.to_string();
        let reparsed = parse_term(&printed).unwrap();
        prop_assert_eq!(reparsed, t);
    }

    #[test]
    fn ordering_is_total_and_consistent(a in arb_term(), b in arb_term(), c in arb_term()) {
        use std::cmp::Ordering;
        prop_assert_eq!(a.cmp(&a), Ordering::Equal);
        prop_assert_eq!(a.cmp(&b), b.cmp(&a).reverse());
        if a.cmp(&b) != Ordering::Greater && b.cmp(&c) != Ordering::Greater {
            prop_assert_ne!(a.cmp(&c), Ordering::Greater);
        }
        if a.cmp(&b) == Ordering::Equal {
            prop_assert_eq!(&a, &b);
        }
    }

    #[test]
    fn match_is_sound(p in arb_term(), t in arb_term()) {
        // A term always matches itself.
        prop_assert!(match_term(&t, &t, &Substitution::new(), MatchOptions::default()).is_some());
        if let Some(s) = match_term(&p, &t, &Substitution::new(), MatchOptions::default()) {
            prop_assert_eq!(s.apply(&p).unwrap(), t);
        }
    }

    #[test]
    fn match_agrees_with_exhaustive_assignment_search(p in arb_term(), t in arb_term()) {
        let got = match_term(&p, &t, &Substitution::new(), MatchOptions::default()).is_some();
        let expect = exhaustive_match(&p, &t);
        prop_assert_eq!(got, expect);
    }

    #[test]
    fn simplification_is_idempotent(clauses in prop::collection::vec(arb_clause(), 0..4)) {
        let cl = ClauseList::new(clauses);
        let (once, trace) = simplify_clause_list(&cl);
        let (twice, trace2) = simplify_clause_list(&once);
        prop_assert_eq!(&once, &twice);
        prop_assert!(trace2.steps.is_empty());
        let replayed = replay_trace(&cl, &trace).unwrap();
        prop_assert_eq!(replayed, once);
    }

    #[test]
    fn simplification_preserves_bounded_semantics(clause in arb_single_var_clause()) {
        // Every environment of values with acl2-count <= 2 agrees on the
        // clause before and after simplification.
        let cl = ClauseList::new(vec![clause]);
        let (simplified, _) = simplify_clause_list(&cl);
        prop_assert!(clause_lists_agree(&cl, &simplified, 2));
    }

    #[test]
    fn subsumption_witnesses_are_sound(old in arb_slot_clause(), new in arb_formal_clause()) {
        if let Some(w) = clause_subsumes(&old, &new, &Substitution::new(), None) {
            for (i, lit) in old.literals().iter().enumerate() {
                let mapped = w.substitution.apply(lit).unwrap();
                prop_assert_eq!(&mapped, &new.literals()[w.literal_map[i]]);
            }
            // Semantically: whenever the instantiated old clause holds, the
            // new clause holds (checked on builtin-only instances over a
            // small value domain).
            let mapped: Vec<Term> = old
                .literals()
                .iter()
                .map(|l| w.substitution.apply(l).unwrap())
                .collect();
            let builtin_only = mapped.iter().all(|l| !l.mentions_user_or_stub())
                && new.literals().iter().all(|l| !l.mentions_user_or_stub());
            if builtin_only {
                let old_inst = Clause::new(mapped);
                prop_assert!(clause_implies_bounded(&old_inst, &new, 1));
            }
        }
    }

    #[test]
    fn subsumption_agrees_with_brute_force(old in arb_slot_clause(), new in arb_formal_clause()) {
        let got = clause_subsumes(&old, &new, &Substitution::new(), None).is_some();
        prop_assert_eq!(got, brute_force_subsumes(&old, &new));
    }
}

/// Oracle for one-way matching: enumerate every assignment of pattern
/// variables to subterms of the target and of pattern stubs to non-builtin
/// heads of the target.
fn exhaustive_match(p: &Term, t: &Term) -> bool {
    fn subterms<'a>(t: &'a Term, out: &mut Vec<&'a Term>) {
        out.push(t);
        if let Term::App(_, args) = t {
            for a in args {
                subterms(a, out);
            }
        }
    }
    let mut pool = Vec::new();
    subterms(t, &mut pool);
    let vars: Vec<SymbolId> = p.vars().into_iter().collect();
    let mut heads = std::collections::BTreeSet::new();
    t.collect_non_builtin_heads(&mut heads);
    let heads: Vec<SymbolId> = heads.into_iter().collect();
    let mut stubs = std::collections::BTreeSet::new();
    p.collect_non_builtin_heads(&mut stubs);
    let stubs: Vec<SymbolId> = stubs.into_iter().filter(|s| s.is_stub()).collect();

    let mut vi = vec![0usize; vars.len()];
    loop {
        let mut si = vec![0usize; stubs.len()];
        loop {
            let mut s = Substitution::new();
            for (v, &i) in vars.iter().zip(&vi) {
                s.bind_var(v.clone(), pool[i].clone());
            }
            // Stub images may be any non-builtin head of the target, or the
            // stub itself (identity).
            let mut ok = true;
            for (stub, &i) in stubs.iter().zip(&si) {
                if i < heads.len() {
                    let h = &heads[i];
                    if h.is_stub() {
                        ok = h == stub;
                    } else {
                        s.bind_stub(stub.clone(), h.clone());
                    }
                }
                // i == heads.len() leaves the stub unbound (identity).
            }
            if ok {
                if let Ok(applied) = s.apply(p) {
                    if &applied == t {
                        return true;
                    }
                }
            }
            // Advance the stub odometer.
            let mut pos = stubs.len();
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                si[pos] += 1;
                if si[pos] <= heads.len() {
                    break;
                }
                si[pos] = 0;
            }
            if stubs.is_empty() || si.iter().all(|&i| i == 0) {
                break;
            }
        }
        let mut pos = vars.len();
        loop {
            if pos == 0 {
                return false;
            }
            pos -= 1;
            vi[pos] += 1;
            if vi[pos] < pool.len() {
                break;
            }
            vi[pos] = 0;
        }
        if vars.is_empty() {
            return false;
        }
    }
}

/// Random literal over one variable, drawn from the shapes the simplifier
/// rewrites.
fn arb_single_var_literal() -> impl Strategy<Value = Term> {
    let var = prop_oneof![Just("x"), Just("y")].prop_map(Term::var);
    let chain = (var, 0usize..3).prop_map(|(v, n)| {
        let mut t = v;
        for i in 0..n {
            t = Term::app(if i % 2 == 0 { "cdr" } else { "car" }, vec![t]);
        }
        t
    });
    let atom = (
        prop_oneof![
            Just("consp"),
            Just("atom"),
            Just("endp"),
            Just("null"),
            Just("zp"),
            Just("natp")
        ],
        chain.clone(),
    )
        .prop_map(|(h, a)| Term::app(h, vec![a]));
    let eq = (
        prop_oneof![Just("eq"), Just("eql"), Just("equal")],
        chain.clone(),
        prop_oneof![Just(Term::nil()), Just(Term::t()), Just(Term::nat(1))],
    )
        .prop_map(|(h, a, c)| Term::app(h, vec![a, c]));
    let dec = (chain.clone(), chain)
        .prop_map(|(a, b)| {
            Term::app(
                "<",
                vec![
                    Term::app("acl2-count", vec![a]),
                    Term::app("acl2-count", vec![b]),
                ],
            )
        })
        .prop_filter("single variable", |t| t.vars().len() <= 1);
    let base = prop_oneof![atom, eq, dec];
    (base, 0usize..3).prop_map(|(t, nots)| {
        let mut t = t;
        for _ in 0..nots {
            t = Term::app("not", vec![t]);
        }
        t
    })
}

fn arb_single_var_clause() -> impl Strategy<Value = Clause> {
    prop::collection::vec(arb_single_var_literal(), 1..5).prop_map(Clause::new)
}

fn arb_clause() -> impl Strategy<Value = Clause> {
    prop::collection::vec(arb_single_var_literal(), 1..5).prop_map(Clause::new)
}

/// Bounded semantic agreement of two builtin-only clause lists, checked
/// over every environment of values with `acl2_count <= bound`.
fn clause_lists_agree(a: &ClauseList, b: &ClauseList, bound: u64) -> bool {
    let values = enumerate_values(bound);
    let mut vars = std::collections::BTreeSet::new();
    for cl in [a, b] {
        for c in &cl.clauses {
            vars.append(&mut c.vars());
        }
    }
    let vars: Vec<SymbolId> = vars.into_iter().collect();
    let defs = BTreeMap::new();
    let eval_list = |cl: &ClauseList, env: &Env| -> bool {
        cl.clauses.iter().all(|c| {
            c.literals().iter().any(|l| {
                let mut fuel = 0;
                !eval_term(l, env, &defs, &mut fuel).unwrap().is_nil()
            })
        })
    };
    let mut idx = vec![0usize; vars.len()];
    loop {
        let env: Env = vars
            .iter()
            .zip(&idx)
            .map(|(v, &i)| (v.clone(), values[i].clone()))
            .collect();
        if eval_list(a, &env) != eval_list(b, &env) {
            return false;
        }
        let mut pos = vars.len();
        loop {
            if pos == 0 {
                return true;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < values.len() {
                break;
            }
            idx[pos] = 0;
        }
        if vars.is_empty() {
            return true;
        }
    }
}

/// Random clause over slot variables with at most one stub head.
fn arb_slot_clause() -> impl Strategy<Value = Clause> {
    let slot = (1usize..=3).prop_map(|i| Term::Var(tdm::normalize::slot_var(i)));
    let leaf = prop_oneof![slot, Just(Term::nil()), Just(Term::nat(0))];
    let small = leaf.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (
                prop_oneof![
                    Just("car"),
                    Just("cdr"),
                    Just("consp"),
                    Just("not"),
                    Just("acl2-count")
                ],
                inner.clone()
            )
                .prop_map(|(h, a)| Term::app(h, vec![a])),
            (
                prop_oneof![Just("<"), Just("equal"), Just("cons")],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(h, a, b)| Term::app(h, vec![a, b])),
            inner
                .clone()
                .prop_map(|a| Term::App(SymbolId::stub(1), vec![a])),
        ]
    });
    prop::collection::vec(small, 1..5).prop_map(Clause::new)
}

/// Random clause over formal variables and user function heads.
fn arb_formal_clause() -> impl Strategy<Value = Clause> {
    let formal = prop_oneof![Just("x"), Just("y"), Just("z")].prop_map(Term::var);
    let leaf = prop_oneof![formal, Just(Term::nil()), Just(Term::nat(0))];
    let small = leaf.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (
                prop_oneof![
                    Just("car"),
                    Just("cdr"),
                    Just("consp"),
                    Just("not"),
                    Just("acl2-count")
                ],
                inner.clone()
            )
                .prop_map(|(h, a)| Term::app(h, vec![a])),
            (
                prop_oneof![Just("<"), Just("equal"), Just("cons")],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(h, a, b)| Term::app(h, vec![a, b])),
            inner.clone().prop_map(|a| Term::app("my-f", vec![a])),
        ]
    });
    prop::collection::vec(small, 1..5).prop_map(Clause::new)
}

/// For every environment over `bound`-sized values: if `antecedent` is true
/// then `consequent` is true.
fn clause_implies_bounded(antecedent: &Clause, consequent: &Clause, bound: u64) -> bool {
    let values = enumerate_values(bound);
    let mut vars = antecedent.vars();
    vars.append(&mut consequent.vars());
    let vars: Vec<SymbolId> = vars.into_iter().collect();
    let defs = BTreeMap::new();
    let eval_clause = |c: &Clause, env: &Env| {
        c.literals().iter().any(|l| {
            let mut fuel = 0;
            !eval_term(l, env, &defs, &mut fuel).unwrap().is_nil()
        })
    };
    let mut idx = vec![0usize; vars.len()];
    loop {
        let env: Env = vars
            .iter()
            .zip(&idx)
            .map(|(v, &i)| (v.clone(), values[i].clone()))
            .collect();
        if eval_clause(antecedent, &env) && !eval_clause(consequent, &env) {
            return false;
        }
        let mut pos = vars.len();
        loop {
            if pos == 0 {
                return true;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < values.len() {
                break;
            }
            idx[pos] = 0;
        }
        if vars.is_empty() {
            return true;
        }
    }
}

/// Brute-force subsumption: every total map from the old clause's variables
/// to the new clause's variables and from its stubs to the new clause's
/// user heads, checked by application and literal-subset inclusion.
fn brute_force_subsumes(old: &Clause, new: &Clause) -> bool {
    let mut old_vars = std::collections::BTreeSet::new();
    let mut old_stubs = std::collections::BTreeSet::new();
    for l in old.literals() {
        l.collect_vars(&mut old_vars);
        l.collect_non_builtin_heads(&mut old_stubs);
    }
    let old_vars: Vec<SymbolId> = old_vars.into_iter().collect();
    let old_stubs: Vec<SymbolId> = old_stubs.into_iter().filter(SymbolId::is_stub).collect();

    let mut new_vars = std::collections::BTreeSet::new();
    let mut new_heads = std::collections::BTreeSet::new();
    for l in new.literals() {
        l.collect_vars(&mut new_vars);
        l.collect_non_builtin_heads(&mut new_heads);
    }
    let new_vars: Vec<SymbolId> = new_vars.into_iter().collect();
    let new_heads: Vec<SymbolId> = new_heads.into_iter().filter(|h| !h.is_stub()).collect();

    if (!old_vars.is_empty() && new_vars.is_empty())
        || (!old_stubs.is_empty() && new_heads.is_empty())
    {
        return false;
    }

    let included = |s: &Substitution| -> bool {
        old.literals().iter().all(|l| match s.apply(l) {
            Ok(mapped) => new.literals().contains(&mapped),
            Err(_) => false,
        })
    };

    let mut vi = vec![0usize; old_vars.len()];
    loop {
        let mut si = vec![0usize; old_stubs.len()];
        loop {
            let mut s = Substitution::new();
            for (v, &i) in old_vars.iter().zip(&vi) {
                s.bind_var(v.clone(), Term::Var(new_vars[i].clone()));
            }
            for (stub, &i) in old_stubs.iter().zip(&si) {
                s.bind_stub(stub.clone(), new_heads[i].clone());
            }
            if included(&s) {
                return true;
            }
            let mut pos = old_stubs.len();
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                si[pos] += 1;
                if si[pos] < new_heads.len() {
                    break;
                }
                si[pos] = 0;
            }
            if old_stubs.is_empty() || si.iter().all(|&i| i == 0) {
                break;
            }
        }
        let mut pos = old_vars.len();
        loop {
            if pos == 0 {
                return false;
            }
            pos -= 1;
            vi[pos] += 1;
            if vi[pos] < new_vars.len() {
                break;
            }
            vi[pos] = 0;
        }
        if old_vars.is_empty() {
            return false;
        }
    }
}
