//! `tdm` — mine termination schemes from a corpus, prove termination of new
//! definitions by subsumption against the database, and verify the emitted
//! certificates.
//!
//! Exit codes: 0 success; 1 usage/input errors (and `mine --strict` with
//! rejections); 2 `mine` with rejected definitions; 3 `prove` with no
//! matching scheme; 4 `verify` rejection.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tdm::database::{mine_into, parse_corpus, Database};
use tdm::engine::{
    emit_plan, extend_database, search, verify_certificate, Certificate, Coverage, SearchConfig,
    SearchOutcome, SessionSet, Verdict,
};
use tdm::normalize::simplify_clause_list;
use tdm::obligations::{
    falsify, measure_conjecture, parse_defun_file, ClauseList, FunctionDef, Measure,
};
use tdm::term::Term;

#[derive(Parser)]
#[command(
    name = "tdm",
    version,
    about = "Termination-scheme database mining and measure-reuse proving"
)]
struct Cli {
    /// Bound for the falsification oracle (values of acl2-count <= N).
    #[arg(long, global = true, default_value_t = 4)]
    max_count: u64,
    /// Reserved; all behavior is deterministic and the seed affects nothing.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Mine a corpus of definitions into a scheme database.
    Mine {
        corpus: PathBuf,
        /// Output database path.
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
        /// Treat any rejected definition as a failure.
        #[arg(long)]
        strict: bool,
    },
    /// Print entry/function/group counts for a database.
    Stats { db: PathBuf },
    /// Prove termination of one definition against a database.
    Prove {
        #[arg(long)]
        db: PathBuf,
        /// Definitions already present in the current session.
        #[arg(long)]
        session: Option<PathBuf>,
        /// Restrict the search to session entries (skip the second pass).
        #[arg(long = "no-two-pass")]
        no_two_pass: bool,
        /// Disable the default-measure structural fallback.
        #[arg(long = "no-fallback")]
        no_fallback: bool,
        /// On success, add the proved scheme to the database file.
        #[arg(long)]
        extend: bool,
        /// Certificate output path.
        #[arg(long)]
        out: PathBuf,
        defs: PathBuf,
    },
    /// Verify a certificate against a database and definition.
    Verify {
        #[arg(long)]
        db: PathBuf,
        cert: PathBuf,
        defs: PathBuf,
    },
    /// Run the structural checker and falsifier on definitions.
    Check { defs: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {}", msg);
            ExitCode::from(1)
        }
    }
}

fn read_file(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {}", path.display(), e))
}

fn load_db(path: &Path) -> Result<Database, String> {
    Database::load(path).map_err(|e| format!("{}: {}", path.display(), e))
}

fn parse_single_def(path: &Path) -> Result<FunctionDef, String> {
    let text = read_file(path)?;
    let defs = parse_defun_file(&text).map_err(|e| format!("{}: {}", path.display(), e))?;
    match defs.len() {
        1 => Ok(defs.into_iter().next().unwrap()),
        n => Err(format!(
            "{}: expected exactly one defun form, found {}",
            path.display(),
            n
        )),
    }
}

fn upper(name: &tdm::term::SymbolId) -> String {
    name.as_str().to_ascii_uppercase()
}

fn joined_names(names: &[String]) -> String {
    match names.len() {
        0 => String::new(),
        1 => names[0].clone(),
        _ => format!(
            "{} and {}",
            names[..names.len() - 1].join(", "),
            names[names.len() - 1]
        ),
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.cmd {
        Cmd::Mine {
            corpus,
            out,
            strict,
        } => {
            let text = read_file(&corpus)?;
            let defs = parse_corpus(&text).map_err(|e| format!("{}: {}", corpus.display(), e))?;
            let mut db = Database::new();
            let report = mine_into(&mut db, &defs).map_err(|e| e.to_string())?;
            for event in &report.events {
                println!("{}", event);
            }
            let stats = db.stats();
            println!(
                "entries={} functions={} groups={}",
                stats.entries, stats.functions, stats.groups
            );
            db.save(&out).map_err(|e| e.to_string())?;
            let rejections = report.rejections();
            if rejections > 0 {
                eprintln!("{} definition(s) rejected", rejections);
                return Ok(ExitCode::from(if strict { 1 } else { 2 }));
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Stats { db } => {
            let db = load_db(&db)?;
            let stats = db.stats();
            println!(
                "entries={} functions={} groups={}",
                stats.entries, stats.functions, stats.groups
            );
            for (measure, size) in &stats.per_group {
                println!("group {} size={}", measure, size);
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Prove {
            db: db_path,
            session,
            no_two_pass,
            no_fallback,
            extend,
            out,
            defs,
        } => {
            let mut db = load_db(&db_path)?;
            let session_defs = match &session {
                Some(p) => {
                    let text = read_file(p)?;
                    parse_defun_file(&text).map_err(|e| format!("{}: {}", p.display(), e))?
                }
                None => Vec::new(),
            };
            let def = parse_single_def(&defs)?;
            if !def.is_recursive() {
                println!(
                    "*note*: {} is not recursive; no termination obligation.",
                    upper(&def.name)
                );
                return Ok(ExitCode::SUCCESS);
            }
            let session_set = SessionSet::from_parts(&db, &session_defs);
            let cfg = SearchConfig {
                two_pass: !no_two_pass,
                fallback_default_measures: !no_fallback,
                incremental_extend: extend,
                ..SearchConfig::default()
            };
            let result = match search(&db, &session_set, &def, &cfg).map_err(|e| e.to_string())? {
                SearchOutcome::Found(r) => r,
                SearchOutcome::NoMatch => {
                    eprintln!(
                        "no termination scheme in {} matches {}",
                        db_path.display(),
                        def.name
                    );
                    return Ok(ExitCode::from(3));
                }
            };
            match &result.coverage {
                Coverage::Entries(_) if result.used_entries.is_empty() => {
                    // Every goal simplified away.
                    println!(
                        "*note*: Using measure {}; every termination goal is trivially true.",
                        result.measure
                    );
                }
                Coverage::Entries(_) => {
                    let names: Vec<String> = result
                        .used_entries
                        .iter()
                        .map(|u| upper(&u.representative))
                        .collect();
                    println!(
                        "*note*: Using termination theorems for {}.",
                        joined_names(&names)
                    );
                    for path in &result.includes_needed {
                        let owner = result
                            .used_entries
                            .iter()
                            .find(|u| u.origin.book_path() == Some(path))
                            .expect("include from a used entry");
                        println!(
                            "*note*: Requires book {} for {}.",
                            path,
                            upper(&owner.representative)
                        );
                    }
                }
                Coverage::Structural(_) => {
                    println!(
                        "*note*: Using default measure {} justified by the structural check.",
                        result.measure
                    );
                }
            }
            let (cert, plan) = emit_plan(&def, &result, &db);
            debug_assert!(verify_certificate(&db, &def, &cert).is_accept());
            print!("{}", plan);
            std::fs::write(&out, cert.render()).map_err(|e| format!("{}: {}", out.display(), e))?;
            if cfg.incremental_extend {
                match extend_database(&mut db, &def, &result) {
                    Ok(action) => {
                        db.save(&db_path).map_err(|e| e.to_string())?;
                        println!("*note*: Database extended ({:?}).", action);
                    }
                    Err(e) => eprintln!("warning: extension skipped: {}", e),
                }
            }
            println!(
                "proved {} with measure {} ({} ms)",
                def.name,
                result.measure,
                result.elapsed.as_millis()
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify { db, cert, defs } => {
            let db = load_db(&db)?;
            let def = parse_single_def(&defs)?;
            let text = read_file(&cert)?;
            let cert = Certificate::parse(&text).map_err(|e| e.to_string())?;
            match verify_certificate(&db, &def, &cert) {
                Verdict::Accept => {
                    println!("accepted");
                    Ok(ExitCode::SUCCESS)
                }
                Verdict::Reject { step, reason } => {
                    println!("rejected at {}: {}", step, reason);
                    Ok(ExitCode::from(4))
                }
            }
        }
        Cmd::Check { defs } => {
            let text = read_file(&defs)?;
            let parsed =
                parse_defun_file(&text).map_err(|e| format!("{}: {}", defs.display(), e))?;
            for def in &parsed {
                check_definition(def, cli.max_count);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn check_definition(def: &FunctionDef, max_count: u64) {
    println!("checking {}", def.name);
    if !def.is_recursive() {
        println!("  not recursive; nothing to check");
        return;
    }
    let candidates: Vec<Measure> = match &def.declared_measure {
        Some(m) => vec![Measure::new(m.clone())],
        None => def.formals.iter().map(Measure::acl2_count_of).collect(),
    };
    if candidates.is_empty() {
        println!("  no measure candidates (definition has no formals)");
        return;
    }
    // Prefer the first measure whose every clause passes; otherwise report
    // on the first candidate.
    let pick = candidates
        .iter()
        .find(|m| {
            let (simp, _) = simplify_clause_list(&measure_conjecture(def, m));
            simp.clauses.iter().all(|c| {
                matches!(
                    tdm::database::structural_decrease_check(c),
                    Ok(v) if v.is_proven()
                )
            })
        })
        .unwrap_or(&candidates[0]);
    println!("  measure {}", pick);
    let (simp, _) = simplify_clause_list(&measure_conjecture(def, pick));
    if simp.is_empty() {
        println!("  obligation is vacuous (every clause is a tautology)");
        return;
    }
    for (ci, clause) in simp.clauses.iter().enumerate() {
        match tdm::database::structural_decrease_check(clause) {
            Ok(v) if v.is_proven() => {
                println!("  clause {}: proven (rule {})", ci, v.rule_name());
            }
            verdict => {
                let note = match verdict {
                    Err(e) => format!("malformed ({})", e),
                    _ => "unknown".to_string(),
                };
                let single = ClauseList::new(vec![clause.clone()]);
                let out = falsify(&single, max_count);
                let falsifier = if !out.skipped.is_empty() {
                    "falsifier skipped (mentions user functions)".to_string()
                } else {
                    match out.counterexample {
                        Some(cex) => {
                            let env = cex
                                .env
                                .iter()
                                .map(|(k, v)| format!("{}={}", k, Term::Const(v.clone())))
                                .collect::<Vec<_>>()
                                .join(" ");
                            format!("falsifier found a counterexample: {}", env)
                        }
                        None => format!("falsifier found nothing at count <= {}", max_count),
                    }
                };
                println!("  clause {}: {}; {}", ci, note, falsifier);
            }
        }
    }
}
