//! Text format for programs (`.dtgd`).
//!
//! ```text
//! % comment
//! E(a,b).                          fact
//! E(X,Y), T(Y,Z) -> T(X,Z).        rule; head-only variables are existential
//! ?- X : T(a,X).                   query with output variables before ':'
//! ?- : T(a,c).                     Boolean query
//! ```
//!
//! Identifiers starting with an uppercase letter or `_` are variables, those
//! starting with a lowercase letter or a digit are constants, and quoted
//! strings are constants. An identifier directly followed by `(` is a
//! predicate. Predicate names starting with `__` are reserved.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::model::{
    check_arities, Atom, ConjunctiveQuery, Database, ModelError, Ontology, Term, Tgd, Variable,
};

/// Prefix of predicates generated by the decomposition.
pub const RESERVED_PREFIX: &str = "__";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {message}")]
    SyntaxError {
        line: usize,
        col: usize,
        message: String,
    },
    #[error(
        "arity mismatch at {line}:{col}: {predicate} used with arity {seen}, expected {expected}"
    )]
    ArityMismatch {
        predicate: String,
        seen: usize,
        expected: usize,
        line: usize,
        col: usize,
    },
    #[error("labelled null at {line}:{col}: `_:` terms are not allowed in input")]
    NullInInput { line: usize, col: usize },
    #[error("reserved predicate name {name} at {line}:{col}")]
    ReservedPredicate {
        name: String,
        line: usize,
        col: usize,
    },
}

impl ParseError {
    pub fn location(&self) -> (usize, usize) {
        match self {
            ParseError::SyntaxError { line, col, .. }
            | ParseError::ArityMismatch { line, col, .. }
            | ParseError::NullInInput { line, col }
            | ParseError::ReservedPredicate { line, col, .. } => (*line, *col),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    pub database: Database,
    pub ontology: Ontology,
    pub queries: Vec<ConjunctiveQuery>,
}

impl Program {
    /// Structural isomorphism: equal facts, and rules and queries pairwise
    /// isomorphic up to variable renaming.
    pub fn is_isomorphic(&self, other: &Program) -> bool {
        self.database == other.database
            && self.ontology.is_isomorphic(&other.ontology)
            && self.queries.len() == other.queries.len()
            && self
                .queries
                .iter()
                .zip(&other.queries)
                .all(|(a, b)| a.is_isomorphic(b))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Accept `__`-prefixed predicates (files written by `decompose`).
    pub allow_reserved: bool,
}

pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    parse_program_with(text, ParseOptions::default())
}

pub fn parse_program_with(text: &str, options: ParseOptions) -> Result<Program, ParseError> {
    let tokens = lex(text)?;
    Parser {
        tokens,
        pos: 0,
        options,
        arities: HashMap::new(),
    }
    .program()
}

/// Parses a single query, e.g. `?- X : P(X,Y).`. The leading `?-` and the
/// trailing `.` are optional.
pub fn parse_query(text: &str) -> Result<ConjunctiveQuery, ParseError> {
    let mut t = text.trim().to_string();
    if !t.starts_with("?-") {
        t.insert_str(0, "?- ");
    }
    if !t.ends_with('.') {
        t.push('.');
    }
    let program = parse_program(&t)?;
    match (
        program.queries.len(),
        program.ontology.len(),
        program.database.len(),
    ) {
        (1, 0, 0) => Ok(program.queries.into_iter().next().unwrap()),
        _ => Err(ParseError::SyntaxError {
            line: 1,
            col: 1,
            message: "expected exactly one query".into(),
        }),
    }
}

/// Facts, then rules, then queries, one statement per line.
pub fn serialize_program(program: &Program) -> String {
    let mut out = String::new();
    for f in program.database.iter() {
        let _ = writeln!(out, "{f}.");
    }
    for r in program.ontology.rules() {
        let _ = writeln!(out, "{r}");
    }
    for q in &program.queries {
        let _ = writeln!(out, "{q}");
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Quoted(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Arrow,
    QueryMark,
    Colon,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let syntax = |line, col, message: String| ParseError::SyntaxError { line, col, message };
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let single = |tok| Token {
            tok,
            line: tl,
            col: tc,
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {}
            '%' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '(' => out.push(single(Tok::LParen)),
            ')' => out.push(single(Tok::RParen)),
            ',' => out.push(single(Tok::Comma)),
            '.' => out.push(single(Tok::Dot)),
            ':' => out.push(single(Tok::Colon)),
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push(single(Tok::Arrow));
                i += 2;
                col += 2;
                continue;
            }
            '?' if chars.get(i + 1) == Some(&'-') => {
                out.push(single(Tok::QueryMark));
                i += 2;
                col += 2;
                continue;
            }
            '_' if chars.get(i + 1) == Some(&':') => {
                return Err(ParseError::NullInInput { line: tl, col: tc });
            }
            '"' => {
                let mut s = String::new();
                i += 1;
                col += 1;
                loop {
                    let Some(&c) = chars.get(i) else {
                        return Err(syntax(tl, tc, "unterminated string".into()));
                    };
                    i += 1;
                    col += 1;
                    match c {
                        '"' => break,
                        '\\' => {
                            let esc = chars.get(i).copied();
                            i += 1;
                            col += 1;
                            match esc {
                                Some('n') => s.push('\n'),
                                Some('t') => s.push('\t'),
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                _ => return Err(syntax(line, col - 1, "bad escape".into())),
                            }
                        }
                        '\n' => return Err(syntax(tl, tc, "unterminated string".into())),
                        c => s.push(c),
                    }
                }
                out.push(Token {
                    tok: Tok::Quoted(s),
                    line: tl,
                    col: tc,
                });
                continue;
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                col += i - start;
                out.push(Token {
                    tok: Tok::Ident(chars[start..i].iter().collect()),
                    line: tl,
                    col: tc,
                });
                continue;
            }
            c => return Err(syntax(tl, tc, format!("unexpected character {c:?}"))),
        }
        i += 1;
        col += 1;
    }
    Ok(out)
}

fn is_variable_name(s: &str) -> bool {
    s.starts_with(|c: char| c.is_ascii_uppercase() || c == '_')
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    options: ParseOptions,
    arities: HashMap<Arc<str>, usize>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn location(&self) -> (usize, usize) {
        match self.tokens.get(self.pos).or(self.tokens.last()) {
            Some(t) if self.pos < self.tokens.len() => (t.line, t.col),
            Some(t) => (t.line, t.col + 1),
            None => (1, 1),
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.location();
        ParseError::SyntaxError {
            line,
            col,
            message: message.into(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn program(mut self) -> Result<Program, ParseError> {
        let mut facts = Vec::new();
        let mut rules = Vec::new();
        let mut queries = Vec::new();
        while self.peek().is_some() {
            if self.peek() == Some(&Tok::QueryMark) {
                let scope = queries.len() as u32;
                queries.push(self.query(scope)?);
                continue;
            }
            let (line, col) = self.location();
            let scope = rules.len() as u32;
            let body = self.atoms(scope)?;
            if self.peek() == Some(&Tok::Arrow) {
                self.pos += 1;
                let head = self.atoms(scope)?;
                self.expect(Tok::Dot, "'.' after rule")?;
                let id = format!("r{}", rules.len() + 1);
                let rule = Tgd::new(id, body, head).map_err(|e| model_error(e, line, col))?;
                rules.push(rule);
            } else {
                self.expect(Tok::Dot, "'->' or '.'")?;
                if body.len() != 1 {
                    return Err(ParseError::SyntaxError {
                        line,
                        col,
                        message: "a fact is a single atom".into(),
                    });
                }
                let fact = body.into_iter().next().unwrap();
                if !fact.is_fact() {
                    return Err(ParseError::SyntaxError {
                        line,
                        col,
                        message: format!("fact {fact} contains variables"),
                    });
                }
                facts.push(fact);
            }
        }
        let database = Database::from_facts(facts).expect("facts checked ground");
        let ontology = Ontology::new(rules).expect("ids unique, arities checked");
        Ok(Program {
            database,
            ontology,
            queries,
        })
    }

    fn query(&mut self, scope: u32) -> Result<ConjunctiveQuery, ParseError> {
        let (line, col) = self.location();
        self.expect(Tok::QueryMark, "'?-'")?;
        let mut output = Vec::new();
        if self.peek() != Some(&Tok::Colon) {
            loop {
                match self.peek().cloned() {
                    Some(Tok::Ident(name)) if is_variable_name(&name) => {
                        self.pos += 1;
                        output.push(Variable::new(name, scope));
                    }
                    _ => return Err(self.error("expected an output variable")),
                }
                if self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::Colon, "':' in query")?;
        let body = self.atoms(scope)?;
        self.expect(Tok::Dot, "'.' after query")?;
        ConjunctiveQuery::new(output, body).map_err(|e| model_error(e, line, col))
    }

    fn atoms(&mut self, scope: u32) -> Result<Vec<Atom>, ParseError> {
        let mut atoms = vec![self.atom(scope)?];
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            atoms.push(self.atom(scope)?);
        }
        Ok(atoms)
    }

    fn atom(&mut self, scope: u32) -> Result<Atom, ParseError> {
        let (line, col) = self.location();
        let name = match self.peek().cloned() {
            Some(Tok::Ident(name)) => name,
            _ => return Err(self.error("expected a predicate")),
        };
        self.pos += 1;
        if name.starts_with(RESERVED_PREFIX) && !self.options.allow_reserved {
            return Err(ParseError::ReservedPredicate { name, line, col });
        }
        self.expect(Tok::LParen, "'(' after predicate")?;
        let mut args = Vec::new();
        if self.peek() != Some(&Tok::RParen) {
            loop {
                args.push(self.term(scope)?);
                if self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "')' or ','")?;
        let atom = Atom::new(name, args);
        check_arities(std::iter::once(&atom), &mut self.arities)
            .map_err(|e| model_error(e, line, col))?;
        Ok(atom)
    }

    fn term(&mut self, scope: u32) -> Result<Term, ParseError> {
        let t = match self.peek().cloned() {
            Some(Tok::Ident(s)) if is_variable_name(&s) => Term::var(s, scope),
            Some(Tok::Ident(s)) => Term::constant(s),
            Some(Tok::Quoted(s)) => Term::constant(s),
            _ => return Err(self.error("expected a term")),
        };
        self.pos += 1;
        Ok(t)
    }
}

fn model_error(e: ModelError, line: usize, col: usize) -> ParseError {
    match e {
        ModelError::ArityMismatch {
            predicate,
            seen,
            expected,
        } => ParseError::ArityMismatch {
            predicate,
            seen,
            expected,
            line,
            col,
        },
        ModelError::NullInInput(_) => ParseError::NullInInput { line, col },
        e => ParseError::SyntaxError {
            line,
            col,
            message: e.to_string(),
        },
    }
}
