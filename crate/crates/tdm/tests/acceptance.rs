//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. Run with `cargo test -p tdm --test acceptance -- --nocapture` to
//! see the lines.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tdm::database::{mine_corpus, parse_corpus, Database};
use tdm::engine::{
    emit_plan, search, verify_certificate, Certificate, Coverage, SearchConfig, SearchOutcome,
    SessionSet, Verdict, VerifyStep,
};
use tdm::normalize::{clause_subsumes, simplify_clause_list, slot_var};
use tdm::obligations::{
    enumerate_values, eval_term, falsify, measure_conjecture, parse_defun, Clause, ClauseList,
    FunctionDef, Measure,
};
use tdm::term::{parse_term, Substitution, SymbolId, Term, Value};

const F3: &str = "(defun f3 (x y)
  (if (consp x)
      (if (atom y)
          (list (f3 (cddr x) y) (f3 (cadr x) y))
        (f3 (cdr x) y))
    (list x y)))";

fn corpus_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus/desk.tdc")
}

fn corpus_text() -> String {
    std::fs::read_to_string(corpus_path()).unwrap()
}

fn desk_db() -> Database {
    let corpus = parse_corpus(&corpus_text()).unwrap();
    let (db, report) = mine_corpus(&corpus).unwrap();
    assert_eq!(report.rejections(), 0, "shipped corpus must mine cleanly");
    db
}

fn tdm_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tdm"))
}

fn prove_found(db: &Database, def: &FunctionDef, cfg: &SearchConfig) -> tdm::engine::SearchResult {
    match search(db, &SessionSet::from_parts(db, &[]), def, cfg).unwrap() {
        SearchOutcome::Found(r) => *r,
        SearchOutcome::NoMatch => panic!("expected a proof for {}", def.name),
    }
}

fn report(n: u32, name: &str, body: impl FnOnce() -> Result<(), String>) {
    match body() {
        Ok(()) => println!("criterion {} ({}): PASS", n, name),
        Err(e) => {
            println!("criterion {} ({}): FAIL — {}", n, name, e);
            panic!("criterion {} failed: {}", n, e);
        }
    }
}

fn ensure(cond: bool, msg: &str) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.to_string())
    }
}

#[test]
fn criterion_1_f3_end_to_end() {
    report(1, "f3 end-to-end", || {
        let db = desk_db();
        let def = parse_defun(F3).unwrap();
        let started = Instant::now();
        let result = prove_found(&db, &def, &SearchConfig::default());
        let elapsed = started.elapsed();

        ensure(
            result.measure.term == parse_term("(acl2-count x)").unwrap(),
            "measure must be (acl2-count x)",
        )?;
        ensure(
            result.used_entries.len() == 3,
            "exactly three used entries, one per goal",
        )?;
        match &result.coverage {
            Coverage::Entries(steps) => {
                ensure(steps.len() == 3, "three goals, three cover steps")?;
                let distinct: std::collections::BTreeSet<u64> =
                    steps.iter().map(|s| s.entry).collect();
                ensure(distinct.len() == 3, "a distinct entry per goal")?;
            }
            Coverage::Structural(_) => return Err("expected database coverage".into()),
        }
        ensure(
            elapsed.as_millis() < 1000,
            "search must finish in under a second",
        )?;

        // The printed note names all three contributing functions.
        let dir = tempfile::tempdir().unwrap();
        let db_path = dir.path().join("desk.tdb");
        db.save(&db_path).unwrap();
        let f3_path = dir.path().join("f3.tdc");
        std::fs::write(&f3_path, F3).unwrap();
        let cert_path = dir.path().join("f3.cert");
        let out = tdm_bin()
            .args(["prove", "--db"])
            .arg(&db_path)
            .arg("--out")
            .arg(&cert_path)
            .arg(&f3_path)
            .output()
            .unwrap();
        let stdout = String::from_utf8_lossy(&out.stdout);
        ensure(out.status.success(), "prove must exit 0")?;
        let note = stdout
            .lines()
            .find(|l| l.starts_with("*note*: Using termination theorems for"))
            .ok_or("missing the using-theorems note")?;
        for name in ["MY-TRUE-LISTP", "MY-EVENS", "SYMBOL-BTREE-COLLECT"] {
            ensure(note.contains(name), &format!("note must name {}", name))?;
        }
        ensure(note.ends_with('.'), "note format ends with a period")?;
        Ok(())
    });
}

#[test]
fn criterion_2_two_pass_book_notes() {
    report(2, "two-pass include notes", || {
        let run = |corpus_text: &str, def_src: &str| -> (String, bool) {
            let dir = tempfile::tempdir().unwrap();
            let corpus = dir.path().join("c.tdc");
            std::fs::write(&corpus, corpus_text).unwrap();
            let db = dir.path().join("c.tdb");
            let mine = tdm_bin()
                .arg("mine")
                .arg(&corpus)
                .arg("-o")
                .arg(&db)
                .output()
                .unwrap();
            assert!(mine.status.success(), "mine failed");
            let defs = dir.path().join("q.tdc");
            std::fs::write(&defs, def_src).unwrap();
            let cert = dir.path().join("q.cert");
            let out = tdm_bin()
                .args(["prove", "--db"])
                .arg(&db)
                .arg("--out")
                .arg(&cert)
                .arg(&defs)
                .output()
                .unwrap();
            (
                String::from_utf8_lossy(&out.stdout).to_string(),
                out.status.success(),
            )
        };

        // Stock corpus: the cadr entry carries book provenance.
        let (stdout, ok) = run(&corpus_text(), F3);
        ensure(ok, "stock prove must succeed")?;
        let requires: Vec<&str> = stdout
            .lines()
            .filter(|l| l.starts_with("*note*: Requires book"))
            .collect();
        ensure(
            requires.len() == 1,
            &format!("expected exactly one Requires note, got {}", requires.len()),
        )?;
        ensure(
            requires[0].contains("misc/symbol-btree"),
            "Requires note names the book",
        )?;

        // All-session variant: no include notes at all.
        let all_session = corpus_text().replace(";; book: misc/symbol-btree\n", "");
        let (stdout, ok) = run(&all_session, F3);
        ensure(ok, "all-session prove must succeed")?;
        ensure(
            !stdout.contains("Requires book"),
            "no Requires notes when everything is in the session",
        )?;
        Ok(())
    });
}

#[test]
fn criterion_3_endp_not_consp_equivalence() {
    report(3, "endp/not-consp equivalence", || {
        let cases = [
            (
                // Mined with endp, proved for a not-consp spelling.
                "(defun walk-e (x) (if (endp x) nil (walk-e (cddr x))))",
                "(defun walk-n (y) (if (not (consp y)) 0 (walk-n (cddr y))))",
            ),
            (
                // Mined with not-consp, proved for an endp spelling.
                "(defun walk-n (y) (if (not (consp y)) 0 (walk-n (cddr y))))",
                "(defun walk-e (x) (if (endp x) nil (walk-e (cddr x))))",
            ),
        ];
        for (mined, queried) in cases {
            let corpus = parse_corpus(mined).unwrap();
            let (db, rep) = mine_corpus(&corpus).unwrap();
            ensure(rep.rejections() == 0, "variant must mine")?;
            let def = parse_defun(queried).unwrap();
            let cfg = SearchConfig {
                fallback_default_measures: false,
                ..SearchConfig::default()
            };
            let result = prove_found(&db, &def, &cfg);
            ensure(
                matches!(result.coverage, Coverage::Entries(_)),
                "proof must come from the mined entry, not the fallback",
            )?;
            ensure(result.used_entries.len() == 1, "one used entry")?;
        }
        Ok(())
    });
}

#[test]
fn criterion_4_dedup_statistics() {
    report(4, "dedup statistics and reproducible mining", || {
        let db = desk_db();
        let stats = db.stats();
        ensure(
            stats.functions >= 30,
            &format!("corpus ships ~30 definitions, mined {}", stats.functions),
        )?;
        ensure(
            stats.entries < stats.functions,
            &format!(
                "schemes must be shared: {} entries vs {} functions",
                stats.entries, stats.functions
            ),
        )?;

        // Mining twice produces byte-identical database files.
        let dir = tempfile::tempdir().unwrap();
        let mut bytes = Vec::new();
        for name in ["a.tdb", "b.tdb"] {
            let out_path = dir.path().join(name);
            let out = tdm_bin()
                .arg("mine")
                .arg(corpus_path())
                .arg("-o")
                .arg(&out_path)
                .output()
                .unwrap();
            assert!(out.status.success());
            bytes.push(std::fs::read(&out_path).unwrap());
        }
        ensure(bytes[0] == bytes[1], "two mining runs differ byte-wise")?;
        Ok(())
    });
}

#[test]
fn criterion_5_certificate_integrity() {
    report(5, "certificate integrity and mutation rejection", || {
        let db = desk_db();
        let corpus = parse_corpus(&corpus_text()).unwrap();
        let cfg = SearchConfig {
            fallback_default_measures: false,
            ..SearchConfig::default()
        };

        // Every definition in the corpus re-proves against the mined
        // database, and 100% of the certificates verify.
        let mut proved = 0;
        for (def, _) in &corpus {
            let result = prove_found(&db, def, &cfg);
            let (cert, _) = emit_plan(def, &result, &db);
            let verdict = verify_certificate(&db, def, &cert);
            ensure(
                verdict.is_accept(),
                &format!("certificate for {} must verify: {:?}", def.name, verdict),
            )?;
            // Textual round-trip preserves acceptance.
            let reparsed = Certificate::parse(&cert.render()).unwrap();
            ensure(
                verify_certificate(&db, def, &reparsed).is_accept(),
                "reparsed certificate must verify",
            )?;
            proved += 1;
        }
        ensure(proved == corpus.len(), "all corpus definitions prove")?;

        // Mutation suite on the f3 certificate.
        let def = parse_defun(F3).unwrap();
        let result = prove_found(&db, &def, &cfg);
        let (cert, _) = emit_plan(&def, &result, &db);

        let expect_reject =
            |cert: &Certificate, steps: &[VerifyStep], what: &str| match verify_certificate(
                &db, &def, cert,
            ) {
                Verdict::Reject { step, .. } if steps.contains(&step) => Ok(()),
                Verdict::Reject { step, .. } => Err(format!(
                    "{}: rejected at {}, expected one of {:?}",
                    what, step, steps
                )),
                Verdict::Accept => Err(format!("{}: mutation accepted", what)),
            };

        let mut bad = cert.clone();
        if let Coverage::Entries(steps) = &mut bad.coverage {
            steps[0].witness.literal_map[0] += 1;
        }
        expect_reject(&bad, &[VerifyStep::ByStep], "witness index")?;

        let mut bad = cert.clone();
        if let Coverage::Entries(steps) = &mut bad.coverage {
            steps[1]
                .witness
                .substitution
                .bind_var(slot_var(1), Term::var("y"));
        }
        expect_reject(&bad, &[VerifyStep::ByStep], "witness literal image")?;

        let mut bad = cert.clone();
        bad.db_digest = format!("{:0>64}", "0");
        expect_reject(&bad, &[VerifyStep::Header], "database digest")?;

        let mut bad = cert.clone();
        bad.def_digest = format!("{:0>64}", "1");
        expect_reject(&bad, &[VerifyStep::Header], "definition digest")?;

        let mut bad = cert.clone();
        bad.measure = parse_term("(acl2-count y)").unwrap();
        expect_reject(
            &bad,
            &[VerifyStep::NewSimplify, VerifyStep::ByStep],
            "measure",
        )?;
        Ok(())
    });
}

#[test]
fn criterion_6_subsumption_oracle_equivalence() {
    report(6, "subsumption vs brute force on 10000 pairs", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x7d3);
        let mut agreements = 0u32;
        let mut positives = 0u32;
        for round in 0..10_000 {
            let new = random_formal_clause(&mut rng);
            let old = if rng.gen_bool(0.5) {
                // Derive a related pattern from the target so positive
                // cases actually occur.
                derived_slot_clause(&mut rng, &new)
            } else {
                random_slot_clause(&mut rng)
            };
            let got = clause_subsumes(&old, &new, &Substitution::new(), None).is_some();
            let expect = brute_force_subsumes(&old, &new);
            if got != expect {
                return Err(format!(
                    "round {}: clause_subsumes={} brute={} old=[{}] new=[{}]",
                    round, got, expect, old, new
                ));
            }
            agreements += 1;
            if got {
                positives += 1;
            }
        }
        ensure(agreements == 10_000, "all pairs compared")?;
        ensure(
            positives > 500,
            &format!("degenerate sample: only {} positive pairs", positives),
        )?;
        Ok(())
    });
}

#[test]
fn criterion_7_simplifier_properties() {
    report(7, "simplifier idempotence and bounded semantics", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0xacc);

        // Idempotence on random clause lists.
        for _ in 0..200 {
            let clauses: Vec<Clause> = (0..rng.gen_range(1..4))
                .map(|_| random_builtin_clause(&mut rng))
                .collect();
            let cl = ClauseList::new(clauses);
            let (once, _) = simplify_clause_list(&cl);
            let (twice, trace) = simplify_clause_list(&once);
            if once != twice || !trace.steps.is_empty() {
                return Err(format!("not idempotent on {:?}", cl));
            }
        }

        // Bounded semantic preservation at acl2-count <= 4, via per-variable
        // truth vectors (every literal mentions at most one variable).
        let values = enumerate_values(4);
        for round in 0..60 {
            let clause = random_builtin_clause(&mut rng);
            let cl = ClauseList::new(vec![clause.clone()]);
            let (simplified, _) = simplify_clause_list(&cl);
            let before = truth_profile(&clause, &values);
            let after = match simplified.clauses.len() {
                0 => TruthProfile::always_true(&values),
                1 => truth_profile(&simplified.clauses[0], &values),
                n => return Err(format!("single clause became {} clauses", n)),
            };
            if !before.equivalent(&after) {
                return Err(format!(
                    "round {}: semantics changed for [{}] -> {:?}",
                    round, clause, simplified
                ));
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_8_soundness_spot_check() {
    report(8, "bounded falsifier on certified obligations", || {
        let db = desk_db();
        let corpus = parse_corpus(&corpus_text()).unwrap();
        let cfg = SearchConfig::default();
        let mut defs: Vec<FunctionDef> = corpus.into_iter().map(|(d, _)| d).collect();
        defs.push(parse_defun(F3).unwrap());
        for def in &defs {
            let result = prove_found(&db, def, &cfg);
            let out = falsify(&result.obligation, 4);
            if let Some(cex) = out.counterexample {
                return Err(format!(
                    "{}: counterexample on certified clause {}",
                    def.name, cex.clause_index
                ));
            }
        }

        // The planted non-terminating definition: no match, and the
        // falsifier refutes the default-measure obligation.
        let grow = parse_defun("(defun grow (x) (if (consp x) (grow (cons x x)) x))").unwrap();
        match search(&db, &SessionSet::from_parts(&db, &[]), &grow, &cfg).unwrap() {
            SearchOutcome::NoMatch => {}
            SearchOutcome::Found(_) => return Err("grow must not be certified".into()),
        }
        let m = Measure::acl2_count_of(&SymbolId::new("x"));
        let (simp, _) = simplify_clause_list(&measure_conjecture(&grow, &m));
        let out = falsify(&simp, 4);
        ensure(
            out.counterexample.is_some(),
            "falsifier must refute the growing recursion",
        )?;
        Ok(())
    });
}

#[test]
fn criterion_9_incremental_extension() {
    report(9, "incremental extension enables pass-one reuse", || {
        let dir = tempfile::tempdir().unwrap();
        let db_path = dir.path().join("desk.tdb");
        desk_db().save(&db_path).unwrap();

        let f3_path = dir.path().join("f3.tdc");
        std::fs::write(&f3_path, F3).unwrap();
        let cert = dir.path().join("f3.cert");
        let out = tdm_bin()
            .args(["prove", "--extend", "--db"])
            .arg(&db_path)
            .arg("--out")
            .arg(&cert)
            .arg(&f3_path)
            .output()
            .unwrap();
        ensure(out.status.success(), "prove --extend must succeed")?;

        // Alpha-renamed copy: proved in pass 1, zero includes.
        let twin = "(defun g3 (a b)
  (if (consp a)
      (if (atom b)
          (list (g3 (cddr a) b) (g3 (cadr a) b))
        (g3 (cdr a) b))
    (list a b)))";
        let twin_path = dir.path().join("g3.tdc");
        std::fs::write(&twin_path, twin).unwrap();
        let cert2 = dir.path().join("g3.cert");
        let out = tdm_bin()
            .args(["prove", "--db"])
            .arg(&db_path)
            .arg("--out")
            .arg(&cert2)
            .arg(&twin_path)
            .output()
            .unwrap();
        let stdout = String::from_utf8_lossy(&out.stdout);
        ensure(out.status.success(), "twin prove must succeed")?;
        ensure(
            !stdout.contains("Requires book"),
            "twin proof must not need any book",
        )?;

        // Library-level confirmation that pass 1 suffices now.
        let db = Database::load(&db_path).unwrap();
        let def = parse_defun(twin).unwrap();
        let result = prove_found(&db, &def, &SearchConfig::default());
        ensure(result.pass == 1, "twin must be proved in pass 1")?;
        ensure(result.includes_needed.is_empty(), "no includes")?;
        Ok(())
    });
}

// ---------------------------------------------------------------------
// Random generators and oracles for criteria 6 and 7.

fn random_chain(rng: &mut ChaCha8Rng, base: Term, max_depth: usize) -> Term {
    let mut t = base;
    for _ in 0..rng.gen_range(0..=max_depth) {
        let op = if rng.gen_bool(0.5) { "car" } else { "cdr" };
        t = Term::app(op, vec![t]);
    }
    t
}

/// Random clause over formal variables x, y, z with user heads f and g
/// (targets of criterion 6): <= 5 literals, depth <= 3.
fn random_formal_clause(rng: &mut ChaCha8Rng) -> Clause {
    let formals = ["x", "y", "z"];
    let mut lits = Vec::new();
    for _ in 0..rng.gen_range(1..=5) {
        lits.push(random_literal(rng, &formals, &["f", "g"]));
    }
    Clause::new(lits)
}

/// Random clause over slot variables v1..v3 with at most one stub.
fn random_slot_clause(rng: &mut ChaCha8Rng) -> Clause {
    let slots = ["v1", "v2", "v3"];
    let mut lits = Vec::new();
    let mut stub_used = false;
    for _ in 0..rng.gen_range(1..=5) {
        let use_stub = !stub_used && rng.gen_bool(0.3);
        stub_used |= use_stub;
        let heads: &[&str] = if use_stub { &["stub-1"] } else { &[] };
        lits.push(random_literal(rng, &slots, heads));
    }
    Clause::new(lits)
}

fn random_literal(rng: &mut ChaCha8Rng, vars: &[&str], heads: &[&str]) -> Term {
    let var = Term::var(vars[rng.gen_range(0..vars.len())]);
    let mut arg = random_chain(rng, var, 2);
    if !heads.is_empty() && rng.gen_bool(0.6) {
        let h = heads[rng.gen_range(0..heads.len())];
        arg = Term::app(h, vec![arg]);
    }
    match rng.gen_range(0..4) {
        0 => Term::app("consp", vec![arg]),
        1 => Term::app("not", vec![Term::app("consp", vec![arg])]),
        2 => {
            let base = Term::var(vars[rng.gen_range(0..vars.len())]);
            let other = random_chain(rng, base, 1);
            Term::app(
                "<",
                vec![
                    Term::app("acl2-count", vec![arg]),
                    Term::app("acl2-count", vec![other]),
                ],
            )
        }
        _ => Term::app("equal", vec![arg, Term::nil()]),
    }
}

/// Builds a slot-variable pattern from a subset of the target's literals by
/// renaming its variables to slots (and optionally a user head to a stub),
/// so subsumption holds by construction most of the time.
fn derived_slot_clause(rng: &mut ChaCha8Rng, new: &Clause) -> Clause {
    let mut mapping: BTreeMap<SymbolId, SymbolId> = BTreeMap::new();
    let mut next = 1usize;
    let stubify = rng.gen_bool(0.5);
    fn rename(
        t: &Term,
        mapping: &mut BTreeMap<SymbolId, SymbolId>,
        next: &mut usize,
        stubify: bool,
    ) -> Term {
        match t {
            Term::Var(v) => {
                let slot = mapping.entry(v.clone()).or_insert_with(|| {
                    let s = slot_var(*next);
                    *next += 1;
                    s
                });
                Term::Var(slot.clone())
            }
            Term::Const(_) => t.clone(),
            Term::App(h, args) => {
                let head = if stubify && !h.is_builtin() && !h.is_stub() && args.len() == 1 {
                    SymbolId::stub(1)
                } else {
                    h.clone()
                };
                Term::App(
                    head,
                    args.iter()
                        .map(|a| rename(a, mapping, next, stubify))
                        .collect(),
                )
            }
        }
    }
    let mut lits = Vec::new();
    for lit in new.literals() {
        if lits.is_empty() || rng.gen_bool(0.5) {
            lits.push(rename(lit, &mut mapping, &mut next, stubify));
        }
    }
    // Occasionally perturb one literal so near-misses are exercised.
    if rng.gen_bool(0.3) {
        let i = rng.gen_range(0..lits.len());
        lits[i] = Term::app("consp", vec![Term::app("cdr", vec![lits[i].clone()])]);
    }
    Clause::new(lits)
}

/// Brute-force subsumption oracle: all total maps from pattern variables to
/// target variables and pattern stubs to target user heads, checked by
/// application plus literal-subset inclusion.
fn brute_force_subsumes(old: &Clause, new: &Clause) -> bool {
    let mut old_vars = std::collections::BTreeSet::new();
    let mut old_heads = std::collections::BTreeSet::new();
    for l in old.literals() {
        l.collect_vars(&mut old_vars);
        l.collect_non_builtin_heads(&mut old_heads);
    }
    let old_vars: Vec<SymbolId> = old_vars.into_iter().collect();
    let old_stubs: Vec<SymbolId> = old_heads.into_iter().filter(SymbolId::is_stub).collect();

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

    let included = |s: &Substitution| {
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

/// Random builtin-only clause whose literals each mention at most one
/// variable, over x and y.
fn random_builtin_clause(rng: &mut ChaCha8Rng) -> Clause {
    let mut lits = Vec::new();
    for _ in 0..rng.gen_range(1..=4) {
        let v = if rng.gen_bool(0.7) { "x" } else { "y" };
        let chain = random_chain(rng, Term::var(v), 2);
        let mut lit = match rng.gen_range(0..6) {
            0 => Term::app("consp", vec![chain]),
            1 => Term::app("atom", vec![chain]),
            2 => Term::app("endp", vec![chain]),
            3 => Term::app("null", vec![chain]),
            4 => Term::app(
                if rng.gen_bool(0.5) { "eq" } else { "eql" },
                vec![chain, Term::nil()],
            ),
            _ => {
                let other = random_chain(rng, Term::var(v), 2);
                Term::app(
                    "<",
                    vec![
                        Term::app("acl2-count", vec![chain]),
                        Term::app("acl2-count", vec![other]),
                    ],
                )
            }
        };
        for _ in 0..rng.gen_range(0..3) {
            lit = Term::app("not", vec![lit]);
        }
        lits.push(lit);
    }
    Clause::new(lits)
}

/// Truth of a single-variable-literal clause over the value domain,
/// factored per variable: the clause is true at (vx, vy) iff a ground
/// literal is true, an x-literal is true at vx, or a y-literal is true at
/// vy.
struct TruthProfile {
    ground: bool,
    x: Vec<bool>,
    y: Vec<bool>,
}

impl TruthProfile {
    fn always_true(values: &[Value]) -> TruthProfile {
        TruthProfile {
            ground: true,
            x: vec![false; values.len()],
            y: vec![false; values.len()],
        }
    }

    /// Pointwise equivalence over the full product domain, without
    /// enumerating the product.
    fn equivalent(&self, other: &TruthProfile) -> bool {
        let all = |v: &[bool]| v.iter().all(|&b| b);
        for i in 0..self.x.len() {
            let (a, b) = (self.ground || self.x[i], other.ground || other.x[i]);
            match (a, b) {
                (true, true) => {}
                (true, false) => {
                    if !all(&other.y) {
                        return false;
                    }
                }
                (false, true) => {
                    if !all(&self.y) {
                        return false;
                    }
                }
                (false, false) => {
                    if self.y != other.y {
                        return false;
                    }
                }
            }
        }
        true
    }
}

fn truth_profile(clause: &Clause, values: &[Value]) -> TruthProfile {
    let defs = BTreeMap::new();
    let x = SymbolId::new("x");
    let y = SymbolId::new("y");
    let eval_at = |lit: &Term, var: &SymbolId, value: &Value| -> bool {
        let mut env = tdm::obligations::Env::new();
        env.insert(var.clone(), value.clone());
        let mut fuel = 0;
        !eval_term(lit, &env, &defs, &mut fuel).unwrap().is_nil()
    };
    let mut profile = TruthProfile {
        ground: false,
        x: vec![false; values.len()],
        y: vec![false; values.len()],
    };
    for lit in clause.literals() {
        let vars = lit.vars();
        if vars.is_empty() {
            let mut fuel = 0;
            let env = tdm::obligations::Env::new();
            profile.ground |= !eval_term(lit, &env, &defs, &mut fuel).unwrap().is_nil();
        } else if vars.contains(&x) {
            for (i, v) in values.iter().enumerate() {
                profile.x[i] = profile.x[i] || eval_at(lit, &x, v);
            }
        } else {
            for (i, v) in values.iter().enumerate() {
                profile.y[i] = profile.y[i] || eval_at(lit, &y, v);
            }
        }
    }
    profile
}
