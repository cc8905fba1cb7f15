//! Surface syntax: parenthesized prefix expressions.
//!
//! The reader is where all normalization of spelling happens. Symbols are
//! lowercased; `'x` reads as a quoted constant; bare `nil`/`t` read as
//! constant symbols; `c[ad]+r` abbreviations, `list`, `1-`/`1+` and the
//! `and`/`or` macros are expanded, so nothing downstream ever sees them.

use std::fmt;

use thiserror::Error;

use super::{SymbolId, Term, Value};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl ParseError {
    fn new(pos: Pos, msg: impl Into<String>) -> ParseError {
        ParseError {
            line: pos.line,
            col: pos.col,
            msg: msg.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    Quote,
    Dot,
    Nat(u64),
    Sym(String),
}

const SYMBOL_CHARS: &str = "+-*/<>=?!_:%$&";

fn is_symbol_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || SYMBOL_CHARS.contains(c)
}

struct Lexed {
    toks: Vec<(Tok, Pos)>,
    /// Comment text with the line it appeared on, for corpus annotations.
    comments: Vec<(usize, String)>,
    end: Pos,
}

fn lex(src: &str) -> Result<Lexed, ParseError> {
    let mut toks = Vec::new();
    let mut comments = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut it = src.chars().peekable();
    while let Some(&c) = it.peek() {
        let pos = Pos { line, col };
        match c {
            '\n' => {
                it.next();
                line += 1;
                col = 1;
            }
            _ if c.is_whitespace() => {
                it.next();
                col += 1;
            }
            ';' => {
                let mut text = String::new();
                while let Some(&c) = it.peek() {
                    if c == '\n' {
                        break;
                    }
                    text.push(c);
                    it.next();
                    col += 1;
                }
                comments.push((pos.line, text));
            }
            '(' => {
                toks.push((Tok::LParen, pos));
                it.next();
                col += 1;
            }
            ')' => {
                toks.push((Tok::RParen, pos));
                it.next();
                col += 1;
            }
            '\'' => {
                toks.push((Tok::Quote, pos));
                it.next();
                col += 1;
            }
            _ if is_symbol_char(c) || c == '.' => {
                let mut atom = String::new();
                while let Some(&c) = it.peek() {
                    if is_symbol_char(c) || c == '.' {
                        atom.push(c);
                        it.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                if atom == "." {
                    toks.push((Tok::Dot, pos));
                } else if atom.contains('.') {
                    return Err(ParseError::new(pos, format!("illegal token `{}`", atom)));
                } else if atom.bytes().all(|b| b.is_ascii_digit()) {
                    let n = atom.parse::<u64>().map_err(|_| {
                        ParseError::new(pos, format!("integer literal `{}` out of range", atom))
                    })?;
                    toks.push((Tok::Nat(n), pos));
                } else if atom.starts_with('-')
                    && atom[1..].bytes().all(|b| b.is_ascii_digit())
                    && atom.len() > 1
                {
                    return Err(ParseError::new(
                        pos,
                        format!("negative literal `{}` not supported", atom),
                    ));
                } else {
                    toks.push((Tok::Sym(atom.to_ascii_lowercase()), pos));
                }
            }
            _ => {
                return Err(ParseError::new(pos, format!("illegal character `{}`", c)));
            }
        }
    }
    Ok(Lexed {
        toks,
        comments,
        end: Pos { line, col },
    })
}

/// A raw s-expression, prior to term interpretation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Nat(u64, Pos),
    Sym(String, Pos),
    List(Vec<Sexp>, Pos),
    /// `(a b . c)` — only legal inside quoted data.
    Dotted(Vec<Sexp>, Box<Sexp>, Pos),
    Quoted(Box<Sexp>, Pos),
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Nat(_, p)
            | Sexp::Sym(_, p)
            | Sexp::List(_, p)
            | Sexp::Dotted(_, _, p)
            | Sexp::Quoted(_, p) => *p,
        }
    }

    pub fn sym(&self) -> Option<&str> {
        match self {
            Sexp::Sym(s, _) => Some(s),
            _ => None,
        }
    }
}

struct Reader {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    end: Pos,
    /// Line of the most recently consumed token.
    last_line: usize,
}

impl Reader {
    fn peek(&self) -> Option<&(Tok, Pos)> {
        self.toks.get(self.at)
    }

    fn next(&mut self) -> Option<(Tok, Pos)> {
        let t = self.toks.get(self.at).cloned();
        if let Some((_, p)) = &t {
            self.at += 1;
            self.last_line = p.line;
        }
        t
    }

    fn read_form(&mut self) -> Result<Sexp, ParseError> {
        match self.next() {
            None => Err(ParseError::new(self.end, "unexpected end of input")),
            Some((Tok::Nat(n), p)) => Ok(Sexp::Nat(n, p)),
            Some((Tok::Sym(s), p)) => Ok(Sexp::Sym(s, p)),
            Some((Tok::Quote, p)) => {
                let inner = self.read_form()?;
                Ok(Sexp::Quoted(Box::new(inner), p))
            }
            Some((Tok::Dot, p)) => Err(ParseError::new(p, "unexpected `.`")),
            Some((Tok::RParen, p)) => Err(ParseError::new(p, "unbalanced `)`")),
            Some((Tok::LParen, p)) => {
                let mut items = Vec::new();
                loop {
                    match self.peek() {
                        None => {
                            return Err(ParseError::new(
                                self.end,
                                "unbalanced `(`: missing closing parenthesis",
                            ))
                        }
                        Some((Tok::RParen, _)) => {
                            self.next();
                            return Ok(Sexp::List(items, p));
                        }
                        Some((Tok::Dot, dp)) => {
                            let dp = *dp;
                            if items.is_empty() {
                                return Err(ParseError::new(dp, "`.` with no preceding element"));
                            }
                            self.next();
                            let tail = self.read_form()?;
                            match self.next() {
                                Some((Tok::RParen, _)) => {
                                    return Ok(Sexp::Dotted(items, Box::new(tail), p))
                                }
                                Some((_, ep)) => {
                                    return Err(ParseError::new(
                                        ep,
                                        "expected `)` after dotted tail",
                                    ))
                                }
                                None => {
                                    return Err(ParseError::new(
                                        self.end,
                                        "unbalanced `(`: missing closing parenthesis",
                                    ))
                                }
                            }
                        }
                        Some(_) => items.push(self.read_form()?),
                    }
                }
            }
        }
    }
}

/// Reads every top-level form in `src`.
pub fn read_forms(src: &str) -> Result<Vec<Sexp>, ParseError> {
    Ok(read_forms_with_comments(src)?.0)
}

/// Top-level forms plus the `; ...` comment lines with their line numbers.
pub type FormsWithComments = (Vec<Sexp>, Vec<(usize, String)>);

/// A top-level form together with the line its last token occupies, for
/// consumers that attribute comments to the gaps between forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpannedForm {
    pub form: Sexp,
    pub end_line: usize,
}

/// Reads every top-level form, also returning comment lines for
/// annotation-aware consumers.
pub fn read_forms_with_comments(src: &str) -> Result<FormsWithComments, ParseError> {
    let (spanned, comments) = read_spanned_forms(src)?;
    Ok((spanned.into_iter().map(|s| s.form).collect(), comments))
}

/// Reads every top-level form with its end line, plus comment lines.
pub fn read_spanned_forms(
    src: &str,
) -> Result<(Vec<SpannedForm>, Vec<(usize, String)>), ParseError> {
    let lexed = lex(src)?;
    let mut reader = Reader {
        toks: lexed.toks,
        at: 0,
        end: lexed.end,
        last_line: 0,
    };
    let mut forms = Vec::new();
    while reader.peek().is_some() {
        let form = reader.read_form()?;
        forms.push(SpannedForm {
            form,
            end_line: reader.last_line,
        });
    }
    Ok((forms, lexed.comments))
}

/// Interprets a quoted s-expression as a closed value.
pub fn datum_from_sexp(s: &Sexp) -> Result<Value, ParseError> {
    match s {
        Sexp::Nat(n, _) => Ok(Value::Nat(*n)),
        Sexp::Sym(name, _) => Ok(Value::Sym(SymbolId::new(name))),
        Sexp::List(items, _) => {
            let mut v = Value::nil();
            for item in items.iter().rev() {
                v = Value::cons(datum_from_sexp(item)?, v);
            }
            Ok(v)
        }
        Sexp::Dotted(items, tail, _) => {
            let mut v = datum_from_sexp(tail)?;
            for item in items.iter().rev() {
                v = Value::cons(datum_from_sexp(item)?, v);
            }
            Ok(v)
        }
        Sexp::Quoted(_, p) => Err(ParseError::new(*p, "nested quote inside quoted constant")),
    }
}

fn expect_arity(name: &str, got: usize, want: usize, pos: Pos) -> Result<(), ParseError> {
    if got != want {
        Err(ParseError::new(
            pos,
            format!("{} expects {} argument(s), got {}", name, want, got),
        ))
    } else {
        Ok(())
    }
}

/// Interprets an s-expression as a term, expanding reader abbreviations.
pub fn term_from_sexp(s: &Sexp) -> Result<Term, ParseError> {
    match s {
        Sexp::Nat(n, _) => Ok(Term::Const(Value::Nat(*n))),
        Sexp::Quoted(inner, _) => Ok(Term::Const(datum_from_sexp(inner)?)),
        Sexp::Dotted(_, _, p) => Err(ParseError::new(*p, "dotted list outside quoted constant")),
        Sexp::Sym(name, p) => {
            let id = SymbolId::new(name);
            match id.as_str() {
                "nil" | "t" => Ok(Term::Const(Value::Sym(id))),
                _ if id.is_reserved() => Err(ParseError::new(
                    *p,
                    format!("reserved symbol `{}` cannot be a variable", id),
                )),
                _ => Ok(Term::Var(id)),
            }
        }
        Sexp::List(items, p) => {
            if items.is_empty() {
                return Ok(Term::nil());
            }
            let head_pos = items[0].pos();
            let head = match items[0].sym() {
                Some(h) => SymbolId::new(h),
                None => {
                    return Err(ParseError::new(
                        head_pos,
                        "application head must be a symbol",
                    ))
                }
            };
            let argc = items.len() - 1;
            let args = || -> Result<Vec<Term>, ParseError> {
                items[1..].iter().map(term_from_sexp).collect()
            };
            match head.as_str() {
                "quote" => {
                    expect_arity("quote", argc, 1, *p)?;
                    Ok(Term::Const(datum_from_sexp(&items[1])?))
                }
                "list" => {
                    let mut t = Term::nil();
                    for a in args()?.into_iter().rev() {
                        t = Term::app("cons", vec![a, t]);
                    }
                    Ok(t)
                }
                "and" => {
                    let mut t = Term::t();
                    for a in args()?.into_iter().rev() {
                        t = if t == Term::t() {
                            a
                        } else {
                            Term::app("if", vec![a, t, Term::nil()])
                        };
                    }
                    Ok(t)
                }
                "or" => {
                    let mut t = Term::nil();
                    for a in args()?.into_iter().rev() {
                        t = if t == Term::nil() {
                            a
                        } else {
                            Term::app("if", vec![a.clone(), a, t])
                        };
                    }
                    Ok(t)
                }
                "1-" => {
                    expect_arity("1-", argc, 1, *p)?;
                    Ok(Term::app("-", vec![args()?.pop().unwrap(), Term::nat(1)]))
                }
                "1+" => {
                    expect_arity("1+", argc, 1, *p)?;
                    Ok(Term::app("+", vec![args()?.pop().unwrap(), Term::nat(1)]))
                }
                "t" | "nil" => Err(ParseError::new(
                    head_pos,
                    format!("constant `{}` cannot be applied", head),
                )),
                _ if head.is_cxr_abbreviation() => {
                    expect_arity(head.as_str(), argc, 1, *p)?;
                    let mut t = term_from_sexp(&items[1])?;
                    let letters = &head.as_str()[1..head.as_str().len() - 1];
                    for ch in letters.chars().rev() {
                        let op = if ch == 'a' { "car" } else { "cdr" };
                        t = Term::app(op, vec![t]);
                    }
                    Ok(t)
                }
                _ => {
                    if let Some(arity) = head.builtin_arity() {
                        expect_arity(head.as_str(), argc, arity, *p)?;
                    } else if let Some(k) = head.stub_arity() {
                        expect_arity(head.as_str(), argc, k, *p)?;
                    }
                    Ok(Term::App(head, args()?))
                }
            }
        }
    }
}

/// Parses exactly one term.
pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let forms = read_forms(src)?;
    match forms.len() {
        1 => term_from_sexp(&forms[0]),
        0 => Err(ParseError {
            line: 1,
            col: 1,
            msg: "empty input".into(),
        }),
        _ => Err(ParseError::new(
            forms[1].pos(),
            "expected a single term".to_string(),
        )),
    }
}

/// Parses a whitespace-separated sequence of terms (database clause lines).
pub fn parse_terms(src: &str) -> Result<Vec<Term>, ParseError> {
    read_forms(src)?.iter().map(term_from_sexp).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_simple_applications() {
        assert_eq!(
            parse_term("(endp x)").unwrap(),
            Term::app("endp", vec![Term::var("x")])
        );
        assert_eq!(parse_term("nil").unwrap(), Term::nil());
        assert_eq!(parse_term("NIL").unwrap(), Term::nil());
    }

    #[test]
    fn expands_cxr_abbreviations() {
        assert_eq!(
            parse_term("(cddr x)").unwrap(),
            parse_term("(cdr (cdr x))").unwrap()
        );
        assert_eq!(
            parse_term("(cadr x)").unwrap(),
            parse_term("(car (cdr x))").unwrap()
        );
        assert_eq!(
            parse_term("(cadar x)").unwrap(),
            parse_term("(car (cdr (car x)))").unwrap()
        );
        // Round-trip through the canonical printer.
        let t = parse_term("(cddr x)").unwrap();
        assert_eq!(t.to_string(), "(cdr (cdr x))");
        assert_eq!(parse_term(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn expands_list_and_logic_macros() {
        assert_eq!(
            parse_term("(list a b)").unwrap(),
            parse_term("(cons a (cons b nil))").unwrap()
        );
        assert_eq!(parse_term("(list)").unwrap(), Term::nil());
        assert_eq!(
            parse_term("(and p q)").unwrap(),
            parse_term("(if p q nil)").unwrap()
        );
        assert_eq!(
            parse_term("(and p q r)").unwrap(),
            parse_term("(if p (if q r nil) nil)").unwrap()
        );
        assert_eq!(
            parse_term("(or p q)").unwrap(),
            parse_term("(if p p q)").unwrap()
        );
        assert_eq!(
            parse_term("(1- n)").unwrap(),
            parse_term("(- n 1)").unwrap()
        );
        assert_eq!(
            parse_term("(1+ n)").unwrap(),
            parse_term("(+ n 1)").unwrap()
        );
    }

    #[test]
    fn quoted_data() {
        assert_eq!(
            parse_term("'x").unwrap(),
            Term::Const(Value::Sym("x".into()))
        );
        assert_eq!(parse_term("'nil").unwrap(), Term::nil());
        assert_eq!(parse_term("'t").unwrap(), Term::t());
        assert_eq!(parse_term("'5").unwrap(), Term::nat(5));
        assert_eq!(parse_term("()").unwrap(), Term::nil());
        assert_eq!(
            parse_term("'(1 . 2)").unwrap(),
            Term::Const(Value::cons(Value::Nat(1), Value::Nat(2)))
        );
        assert_eq!(
            parse_term("'(1 2)").unwrap(),
            Term::Const(Value::cons(
                Value::Nat(1),
                Value::cons(Value::Nat(2), Value::nil())
            ))
        );
    }

    #[test]
    fn arity_violations_are_errors_with_position() {
        let err = parse_term("(car x y)").unwrap_err();
        assert!(err.msg.contains("car expects 1"));
        let err = parse_term("(< x)").unwrap_err();
        assert!(err.msg.contains("< expects 2"));
        let err = parse_term("(stub-2 x)").unwrap_err();
        assert!(err.msg.contains("stub-2 expects 2"));
    }

    #[test]
    fn unbalanced_parens_report_position() {
        let err = parse_term("(consp (cdr x)").unwrap_err();
        assert!(err.msg.contains("unbalanced"));
        let err = parse_term("(consp x))").unwrap_err();
        assert!(err.msg.contains("unbalanced") || err.msg.contains("single term"));
        let err = parse_term("x y").unwrap_err();
        assert!(err.msg.contains("single term"));
    }

    #[test]
    fn reserved_symbols_cannot_be_variables() {
        assert!(parse_term("(consp if)").is_err());
        assert!(parse_term("(consp list)").is_err());
        assert!(parse_term("(consp stub-1)").is_err());
        assert!(parse_term("-5").is_err());
    }

    #[test]
    fn user_heads_are_allowed_at_any_arity() {
        assert!(parse_term("(my-f x y z)").is_ok());
        assert!(parse_term("(my-f)").is_ok());
    }

    #[test]
    fn comments_are_collected() {
        let (forms, comments) =
            read_forms_with_comments(";; book: misc/x\n(consp x) ; trailing\n").unwrap();
        assert_eq!(forms.len(), 1);
        assert_eq!(comments.len(), 2);
        assert_eq!(comments[0].0, 1);
        assert!(comments[0].1.contains("book: misc/x"));
    }
}
