//! Line-oriented text format for specs (.obda), queries (.uq) and
//! databases (.db), plus deterministic rendering and the verdict JSON
//! encoding.
//!
//! Grammar sketch (comments run from `#` to end of line, identifiers are
//! `[A-Za-z_][A-Za-z0-9_]*`):
//!
//! ```text
//! schema   { Man/2 Emp/3 }
//! mappings { Man(x,z), Emp(y,z,u) -> manages(x,y) ; ... }
//! ontology el { Manager [= Employee ; Manager [= exists manages.Secretary }
//! ```
//!
//! Ontology statements: `C [= D` (concepts `top`, names, `C & D`,
//! `exists r.C`, `exists r-.C`), `role r [= s`, `role r [= s-`, and
//! `r1 & r2 [= bot` for role disjointness. A bare `r [= s` between names
//! that are known roles is also accepted as a role inclusion.
//!
//! Queries are Datalog-style rules, one disjunct per rule:
//! `q(x) :- Man(x,y).`  Equality atoms are written `x = y`; an empty body
//! is written `q(x) :- .`
//!
//! Databases: `facts { Man(m,d) Emp(e,d,o) }`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::model::{
    validate_database, validate_spec, Atom, Concept, Cq, Database, Diagnostic,
    Dialect, Fact, GavMapping, Name, ObdaSpec, Ontology, Role, Schema, Ucq,
};

/// 1-based position in the input text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SourceLocation {
    pub line: usize,
    pub column: usize,
}

/// Errors raised by parsing and validation of text input.
#[derive(Debug, Clone, thiserror::Error)]
pub enum TextError {
    #[error("syntax error at {line}:{column}: {message}", line = .location.line, column = .location.column)]
    Syntax {
        location: SourceLocation,
        message: String,
    },
    #[error("validation failed: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Diagnostic>),
}

impl TextError {
    fn syntax(location: SourceLocation, message: impl Into<String>) -> TextError {
        TextError::Syntax {
            location,
            message: message.into(),
        }
    }
}

/// Decodes raw bytes as UTF-8, reporting the offending position on failure.
pub fn decode_utf8(bytes: &[u8]) -> Result<&str, TextError> {
    std::str::from_utf8(bytes).map_err(|e| {
        let prefix = &bytes[..e.valid_up_to()];
        let text = std::str::from_utf8(prefix).unwrap();
        let line = text.bytes().filter(|&b| b == b'\n').count() + 1;
        let column = text.len() - text.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
        TextError::syntax(
            SourceLocation { line, column },
            format!("invalid UTF-8 byte 0x{:02x}", bytes[e.valid_up_to()]),
        )
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(usize),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semi,
    Dot,
    Slash,
    Arrow,    // ->
    Subsumes, // [=
    Eq,       // =
    Amp,      // &
    Dash,     // -
    Rule,     // :-
    Eof,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{}`", s),
            Tok::Number(n) => write!(f, "number `{}`", n),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Semi => write!(f, "`;`"),
            Tok::Dot => write!(f, "`.`"),
            Tok::Slash => write!(f, "`/`"),
            Tok::Arrow => write!(f, "`->`"),
            Tok::Subsumes => write!(f, "`[=`"),
            Tok::Eq => write!(f, "`=`"),
            Tok::Amp => write!(f, "`&`"),
            Tok::Dash => write!(f, "`-`"),
            Tok::Rule => write!(f, "`:-`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn loc(&self) -> SourceLocation {
        SourceLocation {
            line: self.line,
            column: self.column,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn tokenize(mut self) -> Result<Vec<(Tok, SourceLocation)>, TextError> {
        let mut out = Vec::new();
        loop {
            // skip whitespace and comments
            loop {
                match self.chars.peek() {
                    Some(c) if c.is_whitespace() => {
                        self.bump();
                    }
                    Some('#') => {
                        while let Some(&c) = self.chars.peek() {
                            if c == '\n' {
                                break;
                            }
                            self.bump();
                        }
                    }
                    _ => break,
                }
            }
            let loc = self.loc();
            let c = match self.chars.peek() {
                None => {
                    out.push((Tok::Eof, loc));
                    return Ok(out);
                }
                Some(&c) => c,
            };
            let tok = match c {
                '{' => {
                    self.bump();
                    Tok::LBrace
                }
                '}' => {
                    self.bump();
                    Tok::RBrace
                }
                '(' => {
                    self.bump();
                    Tok::LParen
                }
                ')' => {
                    self.bump();
                    Tok::RParen
                }
                ',' => {
                    self.bump();
                    Tok::Comma
                }
                ';' => {
                    self.bump();
                    Tok::Semi
                }
                '.' => {
                    self.bump();
                    Tok::Dot
                }
                '/' => {
                    self.bump();
                    Tok::Slash
                }
                '&' => {
                    self.bump();
                    Tok::Amp
                }
                '=' => {
                    self.bump();
                    Tok::Eq
                }
                '[' => {
                    self.bump();
                    if self.chars.peek() == Some(&'=') {
                        self.bump();
                        Tok::Subsumes
                    } else {
                        return Err(TextError::syntax(loc, "expected `[=`"));
                    }
                }
                '-' => {
                    self.bump();
                    if self.chars.peek() == Some(&'>') {
                        self.bump();
                        Tok::Arrow
                    } else {
                        Tok::Dash
                    }
                }
                ':' => {
                    self.bump();
                    if self.chars.peek() == Some(&'-') {
                        self.bump();
                        Tok::Rule
                    } else {
                        return Err(TextError::syntax(loc, "expected `:-`"));
                    }
                }
                c if c.is_ascii_digit() => {
                    let mut s = String::new();
                    while let Some(&c) = self.chars.peek() {
                        if c.is_ascii_digit() {
                            s.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    let n = s
                        .parse()
                        .map_err(|_| TextError::syntax(loc, "number out of range"))?;
                    Tok::Number(n)
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let mut s = String::new();
                    while let Some(&c) = self.chars.peek() {
                        if c.is_ascii_alphanumeric() || c == '_' {
                            s.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    Tok::Ident(s)
                }
                other => {
                    return Err(TextError::syntax(
                        loc,
                        format!("unexpected character `{}`", other),
                    ));
                }
            };
            out.push((tok, loc));
        }
    }
}

struct Parser {
    toks: Vec<(Tok, SourceLocation)>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Parser, TextError> {
        Ok(Parser {
            toks: Lexer::new(text).tokenize()?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn loc(&self) -> SourceLocation {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<(), TextError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(TextError::syntax(
                self.loc(),
                format!("expected {}, found {}", tok, self.peek()),
            ))
        }
    }

    fn ident(&mut self) -> Result<String, TextError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            t => Err(TextError::syntax(
                self.loc(),
                format!("expected identifier, found {}", t),
            )),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), TextError> {
        let loc = self.loc();
        let s = self.ident()?;
        if s == kw {
            Ok(())
        } else {
            Err(TextError::syntax(loc, format!("expected `{}`", kw)))
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    /// name(arg, ..., arg) — relation applications in bodies, heads, facts.
    fn application(&mut self) -> Result<(String, Vec<String>, SourceLocation), TextError> {
        let loc = self.loc();
        let name = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.ident()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok((name, args, loc))
    }
}

// ---------------------------------------------------------------------------
// spec parsing

/// Raw ontology statement before role/concept disambiguation.
enum OntStmt {
    ConceptIncl(Concept, Concept),
    RoleIncl(Name, Role),
    RoleDisjoint(BTreeSet<Name>),
    /// `X [= Y` between two bare names: classified in a post-pass.
    AmbiguousIncl(Name, Name),
}

fn parse_concept(p: &mut Parser) -> Result<Concept, TextError> {
    let mut parts = vec![parse_concept_primary(p)?];
    while *p.peek() == Tok::Amp {
        p.bump();
        parts.push(parse_concept_primary(p)?);
    }
    let mut it = parts.into_iter();
    let first = it.next().unwrap();
    Ok(it.fold(first, Concept::and))
}

fn parse_role(p: &mut Parser) -> Result<Role, TextError> {
    let name = p.ident()?;
    if *p.peek() == Tok::Dash {
        p.bump();
        Ok(Role::inv(name))
    } else {
        Ok(Role::new(name))
    }
}

fn parse_concept_primary(p: &mut Parser) -> Result<Concept, TextError> {
    if *p.peek() == Tok::LParen {
        p.bump();
        let c = parse_concept(p)?;
        p.expect(Tok::RParen)?;
        return Ok(c);
    }
    if p.at_keyword("top") {
        p.bump();
        return Ok(Concept::Top);
    }
    if p.at_keyword("exists") {
        p.bump();
        let role = parse_role(p)?;
        p.expect(Tok::Dot)?;
        let body = parse_concept_primary(p)?;
        return Ok(Concept::exists(role, body));
    }
    Ok(Concept::Name(p.ident()?))
}

fn parse_ontology_block(p: &mut Parser) -> Result<Ontology, TextError> {
    p.keyword("ontology")?;
    let loc = p.loc();
    let dialect = match p.ident()?.as_str() {
        "el" => Dialect::El,
        "elhi" => Dialect::Elhi,
        "dllite" => Dialect::DlLiteRHorn,
        other => {
            return Err(TextError::syntax(
                loc,
                format!("unknown dialect `{}` (expected el, elhi or dllite)", other),
            ));
        }
    };
    p.expect(Tok::LBrace)?;
    let mut stmts = Vec::new();
    while *p.peek() != Tok::RBrace {
        if p.at_keyword("role") {
            p.bump();
            let lhs = p.ident()?;
            p.expect(Tok::Subsumes)?;
            let rhs = parse_role(p)?;
            stmts.push(OntStmt::RoleIncl(lhs, rhs));
        } else {
            let lhs = parse_concept(p)?;
            p.expect(Tok::Subsumes)?;
            if p.at_keyword("bot") {
                let loc = p.loc();
                p.bump();
                let mut names = BTreeSet::new();
                for c in lhs.conjuncts() {
                    match c {
                        Concept::Name(n) => {
                            names.insert(n.clone());
                        }
                        _ => {
                            return Err(TextError::syntax(
                                loc,
                                "only role names may occur left of `[= bot`",
                            ));
                        }
                    }
                }
                stmts.push(OntStmt::RoleDisjoint(names));
            } else {
                let rhs_is_dashed = {
                    // look ahead: `name -` not followed by `>` means inverse role
                    matches!(p.peek(), Tok::Ident(_))
                        && p.toks.get(p.pos + 1).map(|t| &t.0) == Some(&Tok::Dash)
                };
                if rhs_is_dashed {
                    let name = p.ident()?;
                    p.expect(Tok::Dash)?;
                    match lhs {
                        Concept::Name(l) => stmts.push(OntStmt::RoleIncl(l, Role::inv(name))),
                        _ => {
                            return Err(TextError::syntax(
                                p.loc(),
                                "left side of a role inclusion must be a role name",
                            ));
                        }
                    }
                } else {
                    let rhs = parse_concept(p)?;
                    match (&lhs, &rhs) {
                        (Concept::Name(l), Concept::Name(r)) => {
                            stmts.push(OntStmt::AmbiguousIncl(l.clone(), r.clone()));
                        }
                        _ => stmts.push(OntStmt::ConceptIncl(lhs, rhs)),
                    }
                }
            }
        }
        if *p.peek() == Tok::Semi {
            p.bump();
        }
    }
    p.expect(Tok::RBrace)?;
    Ok(classify_statements(dialect, stmts))
}

/// Resolves `X [= Y` statements between bare names: a role inclusion iff
/// both names are used as roles (and never as concepts) elsewhere.
fn classify_statements(dialect: Dialect, stmts: Vec<OntStmt>) -> Ontology {
    let mut roles: BTreeSet<Name> = BTreeSet::new();
    let mut concepts: BTreeSet<Name> = BTreeSet::new();
    for s in &stmts {
        match s {
            OntStmt::ConceptIncl(l, r) => {
                let mut cn = BTreeSet::new();
                l.concept_names(&mut cn);
                r.concept_names(&mut cn);
                concepts.extend(cn);
                let mut rn = BTreeSet::new();
                l.role_names(&mut rn);
                r.role_names(&mut rn);
                roles.extend(rn);
            }
            OntStmt::RoleIncl(l, r) => {
                roles.insert(l.clone());
                roles.insert(r.name.clone());
            }
            OntStmt::RoleDisjoint(set) => roles.extend(set.iter().cloned()),
            OntStmt::AmbiguousIncl(_, _) => {}
        }
    }
    let mut o = Ontology::empty(dialect);
    for s in stmts {
        match s {
            OntStmt::ConceptIncl(l, r) => o.concept_inclusions.push((l, r)),
            OntStmt::RoleIncl(l, r) => o.role_inclusions.push((l, r)),
            OntStmt::RoleDisjoint(set) => o.role_disjointness.push(set),
            OntStmt::AmbiguousIncl(l, r) => {
                let role_like = roles.contains(&l)
                    && roles.contains(&r)
                    && !concepts.contains(&l)
                    && !concepts.contains(&r);
                if role_like {
                    o.role_inclusions.push((l, Role::new(r)));
                } else {
                    o.concept_inclusions
                        .push((Concept::Name(l), Concept::Name(r)));
                }
            }
        }
    }
    o
}

/// Parses an OBDA specification. Blocks: `schema`, `mappings`, optional
/// `ontology` (defaults to the empty EL ontology).
pub fn parse_spec(text: &str) -> Result<ObdaSpec, TextError> {
    let mut p = Parser::new(text)?;
    p.keyword("schema")?;
    p.expect(Tok::LBrace)?;
    let mut schema = Schema::new();
    while *p.peek() != Tok::RBrace {
        let loc = p.loc();
        let name = p.ident()?;
        p.expect(Tok::Slash)?;
        let arity_loc = p.loc();
        let arity: usize = match p.bump() {
            Tok::Number(n) => n,
            other => {
                return Err(TextError::syntax(
                    arity_loc,
                    format!("expected arity, found {}", other),
                ));
            }
        };
        if !schema.add(name.clone(), arity) {
            return Err(TextError::syntax(
                loc,
                format!("relation {} redeclared with different arity", name),
            ));
        }
        if *p.peek() == Tok::Comma || *p.peek() == Tok::Semi {
            p.bump();
        }
    }
    p.expect(Tok::RBrace)?;

    p.keyword("mappings")?;
    p.expect(Tok::LBrace)?;
    let mut mappings = Vec::new();
    while *p.peek() != Tok::RBrace {
        let mut body = Vec::new();
        loop {
            let (rel, args, loc) = p.application()?;
            match schema.arity(&rel) {
                None => {
                    return Err(TextError::syntax(
                        loc,
                        format!("undeclared relation {} in mapping body", rel),
                    ));
                }
                Some(k) if k != args.len() => {
                    return Err(TextError::syntax(
                        loc,
                        format!(
                            "arity mismatch for {} (declared {}, used {})",
                            rel,
                            k,
                            args.len()
                        ),
                    ));
                }
                _ => {}
            }
            body.push(Atom::rel(rel, args));
            if *p.peek() == Tok::Comma {
                p.bump();
            } else {
                break;
            }
        }
        p.expect(Tok::Arrow)?;
        let (head_rel, head_args, loc) = p.application()?;
        if head_args.is_empty() || head_args.len() > 2 {
            return Err(TextError::syntax(
                loc,
                "mapping head must be unary or binary",
            ));
        }
        mappings.push(GavMapping::new(body, head_rel, head_args));
        if *p.peek() == Tok::Semi {
            p.bump();
        }
    }
    p.expect(Tok::RBrace)?;

    let ontology = if p.at_keyword("ontology") {
        parse_ontology_block(&mut p)?
    } else {
        Ontology::empty(Dialect::El)
    };
    if *p.peek() != Tok::Eof {
        return Err(TextError::syntax(
            p.loc(),
            format!("unexpected {} after specification", p.peek()),
        ));
    }

    let spec = ObdaSpec {
        ontology,
        mappings,
        source_schema: schema,
    };
    let diags = validate_spec(&spec);
    if diags.is_empty() {
        Ok(spec)
    } else {
        Err(TextError::Validation(diags))
    }
}

// ---------------------------------------------------------------------------
// query parsing

/// Parses a UCQ given the schema its relational atoms must respect. Each
/// rule is one disjunct; all rules must share the head name and arity.
pub fn parse_query(text: &str, schema: &Schema) -> Result<Ucq, TextError> {
    let mut p = Parser::new(text)?;
    let mut disjuncts: Vec<Cq> = Vec::new();
    let mut head_name: Option<String> = None;
    let mut head_vars: Option<Vec<Name>> = None;
    while *p.peek() != Tok::Eof {
        let (name, args, loc) = p.application()?;
        match &head_name {
            None => head_name = Some(name),
            Some(h) if *h != name => {
                return Err(TextError::syntax(
                    loc,
                    format!("rule head `{}` differs from `{}`", name, h),
                ));
            }
            _ => {}
        }
        if let Some(hv) = &head_vars {
            if hv.len() != args.len() {
                return Err(TextError::syntax(
                    loc,
                    format!(
                        "disjuncts with differing head arity: {} vs {}",
                        hv.len(),
                        args.len()
                    ),
                ));
            }
        }
        p.expect(Tok::Rule)?;
        let mut atoms = Vec::new();
        if *p.peek() != Tok::Dot {
            loop {
                // either `x = y` or `R(args)`
                if matches!(p.peek(), Tok::Ident(_))
                    && p.toks.get(p.pos + 1).map(|t| &t.0) == Some(&Tok::Eq)
                {
                    let left = p.ident()?;
                    p.expect(Tok::Eq)?;
                    let right = p.ident()?;
                    atoms.push(Atom::eq(left, right));
                } else {
                    let (rel, rargs, rloc) = p.application()?;
                    match schema.arity(&rel) {
                        None => {
                            return Err(TextError::syntax(
                                rloc,
                                format!("undeclared relation {}", rel),
                            ));
                        }
                        Some(k) if k != rargs.len() => {
                            return Err(TextError::syntax(
                                rloc,
                                format!(
                                    "arity mismatch for {} (declared {}, used {})",
                                    rel,
                                    k,
                                    rargs.len()
                                ),
                            ));
                        }
                        _ => {}
                    }
                    atoms.push(Atom::rel(rel, rargs));
                }
                if *p.peek() == Tok::Comma {
                    p.bump();
                } else {
                    break;
                }
            }
        }
        p.expect(Tok::Dot)?;
        let cq = Cq::new(args.clone(), atoms);
        let cq = match &head_vars {
            None => {
                head_vars = Some(args);
                cq
            }
            Some(hv) => rename_answer_vars(&cq, hv),
        };
        disjuncts.push(cq);
    }
    if disjuncts.is_empty() {
        return Err(TextError::syntax(
            SourceLocation { line: 1, column: 1 },
            "query has no rules",
        ));
    }
    Ok(Ucq::new(disjuncts))
}

/// Renames the answer variables of `cq` to `target` (positionally), moving
/// colliding quantified variables out of the way first.
fn rename_answer_vars(cq: &Cq, target: &[Name]) -> Cq {
    let mut renaming: std::collections::BTreeMap<Name, Name> = std::collections::BTreeMap::new();
    // move quantified vars that collide with target names
    let mut taken: BTreeSet<Name> = cq.all_vars();
    taken.extend(target.iter().cloned());
    for q in &cq.quantified_vars {
        if target.contains(q) && !cq.answer_vars.contains(q) {
            let mut fresh = format!("{}_", q);
            while taken.contains(&fresh) {
                fresh.push('_');
            }
            taken.insert(fresh.clone());
            renaming.insert(q.clone(), fresh);
        }
    }
    for (old, new) in cq.answer_vars.iter().zip(target.iter()) {
        renaming.insert(old.clone(), new.clone());
    }
    let sub = |v: &Name| renaming.get(v).cloned().unwrap_or_else(|| v.clone());
    let atoms: Vec<Atom> = cq
        .atoms
        .iter()
        .map(|a| match a {
            Atom::Rel { rel, args } => Atom::rel(rel.clone(), args.iter().map(sub).collect()),
            Atom::Eq { left, right } => Atom::eq(sub(left), sub(right)),
        })
        .collect();
    Cq::new(target.to_vec(), atoms)
}

// ---------------------------------------------------------------------------
// database parsing

/// Parses a database / ABox file: `facts { R(a,b) A(c) }`.
pub fn parse_database(text: &str, schema: &Schema) -> Result<Database, TextError> {
    let mut p = Parser::new(text)?;
    p.keyword("facts")?;
    p.expect(Tok::LBrace)?;
    let mut facts = Vec::new();
    while *p.peek() != Tok::RBrace {
        let (rel, args, loc) = p.application()?;
        match schema.arity(&rel) {
            None => {
                return Err(TextError::syntax(
                    loc,
                    format!("undeclared relation {}", rel),
                ));
            }
            Some(k) if k != args.len() => {
                return Err(TextError::syntax(
                    loc,
                    format!(
                        "arity mismatch for {} (declared {}, used {})",
                        rel,
                        k,
                        args.len()
                    ),
                ));
            }
            _ => {}
        }
        facts.push(Fact::new(rel, args));
        if *p.peek() == Tok::Comma || *p.peek() == Tok::Semi {
            p.bump();
        }
    }
    p.expect(Tok::RBrace)?;
    if *p.peek() != Tok::Eof {
        return Err(TextError::syntax(p.loc(), "unexpected trailing input"));
    }
    let d = Database::new(facts);
    let diags = validate_database(&d, schema);
    if diags.is_empty() {
        Ok(d)
    } else {
        Err(TextError::Validation(diags))
    }
}

/// Parses a database without schema checks (used for ad-hoc ABox input).
pub fn parse_database_unchecked(text: &str) -> Result<Database, TextError> {
    let mut p = Parser::new(text)?;
    p.keyword("facts")?;
    p.expect(Tok::LBrace)?;
    let mut facts = Vec::new();
    while *p.peek() != Tok::RBrace {
        let (rel, args, _) = p.application()?;
        facts.push(Fact::new(rel, args));
        if *p.peek() == Tok::Comma || *p.peek() == Tok::Semi {
            p.bump();
        }
    }
    p.expect(Tok::RBrace)?;
    Ok(Database::new(facts))
}

// ---------------------------------------------------------------------------
// rendering

fn render_concept(c: &Concept, out: &mut String) {
    match c {
        Concept::Top => out.push_str("top"),
        Concept::Name(n) => out.push_str(n),
        Concept::And(l, r) => {
            render_concept_atomic(l, out);
            out.push_str(" & ");
            render_concept_atomic(r, out);
        }
        Concept::Exists(role, body) => {
            let _ = write!(out, "exists {}.", role);
            render_concept_atomic(body, out);
        }
    }
}

fn render_concept_atomic(c: &Concept, out: &mut String) {
    if matches!(c, Concept::And(_, _)) {
        out.push('(');
        render_concept(c, out);
        out.push(')');
    } else {
        render_concept(c, out);
    }
}

/// Renders an OBDA spec deterministically: relations sorted by name,
/// mappings sorted by head then body, ontology statements sorted.
pub fn render_spec(spec: &ObdaSpec) -> String {
    let mut out = String::new();
    out.push_str("schema {\n");
    for (name, arity) in spec.source_schema.iter() {
        let _ = writeln!(out, "  {}/{}", name, arity);
    }
    out.push_str("}\n\nmappings {\n");
    let mut mappings: Vec<&GavMapping> = spec.mappings.iter().collect();
    mappings.sort_by_key(|m| (m.head_rel.clone(), m.head_args.clone(), m.body.clone()));
    for m in mappings {
        let body = m
            .body
            .iter()
            .map(render_atom)
            .collect::<Vec<_>>()
            .join(", ");
        let _ = writeln!(
            out,
            "  {} -> {}({});",
            body,
            m.head_rel,
            m.head_args.join(",")
        );
    }
    out.push_str("}\n");
    let o = &spec.ontology;
    let dialect = match o.dialect {
        Dialect::El => "el",
        Dialect::Elhi => "elhi",
        Dialect::DlLiteRHorn => "dllite",
    };
    let _ = write!(out, "\nontology {} {{\n", dialect);
    let mut cis: Vec<String> = o
        .concept_inclusions
        .iter()
        .map(|(l, r)| {
            let mut s = String::from("  ");
            render_concept(l, &mut s);
            s.push_str(" [= ");
            render_concept(r, &mut s);
            s.push(';');
            s
        })
        .collect();
    cis.sort();
    for c in cis {
        let _ = writeln!(out, "{}", c);
    }
    let mut ris: Vec<String> = o
        .role_inclusions
        .iter()
        .map(|(l, r)| format!("  role {} [= {};", l, r))
        .collect();
    ris.sort();
    for r in ris {
        let _ = writeln!(out, "{}", r);
    }
    let mut rds: Vec<String> = o
        .role_disjointness
        .iter()
        .map(|set| {
            format!(
                "  {} [= bot;",
                set.iter().cloned().collect::<Vec<_>>().join(" & ")
            )
        })
        .collect();
    rds.sort();
    for r in rds {
        let _ = writeln!(out, "{}", r);
    }
    out.push_str("}\n");
    out
}

fn render_atom(a: &Atom) -> String {
    match a {
        Atom::Rel { rel, args } => format!("{}({})", rel, args.join(",")),
        Atom::Eq { left, right } => format!("{} = {}", left, right),
    }
}

/// Renders a UCQ as Datalog-style rules with head `q`, disjuncts sorted.
pub fn render_query(q: &Ucq) -> String {
    let mut rules: Vec<String> = q
        .disjuncts
        .iter()
        .map(|cq| {
            let head = format!("q({})", cq.answer_vars.join(","));
            if cq.atoms.is_empty() {
                format!("{} :- .", head)
            } else {
                let body = cq
                    .atoms
                    .iter()
                    .map(render_atom)
                    .collect::<Vec<_>>()
                    .join(", ");
                format!("{} :- {}.", head, body)
            }
        })
        .collect();
    rules.sort();
    rules.dedup();
    let mut out = rules.join("\n");
    out.push('\n');
    out
}

/// Renders a database deterministically.
pub fn render_database(d: &Database) -> String {
    let mut out = String::from("facts {\n");
    for f in &d.facts {
        let _ = writeln!(out, "  {}({})", f.rel, f.args.join(","));
    }
    out.push_str("}\n");
    out
}

// ---------------------------------------------------------------------------
// verdict output

fn database_json(d: &Database) -> serde_json::Value {
    serde_json::Value::Array(
        d.facts
            .iter()
            .map(|f| {
                let mut row = vec![serde_json::Value::String(f.rel.clone())];
                row.extend(f.args.iter().map(|a| serde_json::Value::String(a.clone())));
                serde_json::Value::Array(row)
            })
            .collect(),
    )
}

fn tuples_json(ts: &std::collections::BTreeSet<Vec<String>>) -> serde_json::Value {
    serde_json::Value::Array(
        ts.iter()
            .map(|t| {
                serde_json::Value::Array(
                    t.iter().map(|a| serde_json::Value::String(a.clone())).collect(),
                )
            })
            .collect(),
    )
}

/// Encodes a verdict as the stable JSON schema:
/// `{"verdict": "yes"|"no"|"unknown", "realization"?: <query text>,
///   "witness"?: {...}, "bounds": {...}}`.
pub fn verdict_to_json(v: &crate::decision::Verdict) -> serde_json::Value {
    use crate::decision::Outcome;
    let mut obj = serde_json::Map::new();
    obj.insert(
        "verdict".to_string(),
        serde_json::Value::String(
            match v.outcome {
                Outcome::Yes => "yes",
                Outcome::No => "no",
                Outcome::Unknown => "unknown",
            }
            .to_string(),
        ),
    );
    if let Some(r) = &v.realization {
        obj.insert(
            "realization".to_string(),
            serde_json::Value::String(render_query(r)),
        );
    }
    if let Some(w) = &v.witness {
        let mut wit = serde_json::Map::new();
        wit.insert("database".to_string(), database_json(&w.database));
        wit.insert(
            "tuple".to_string(),
            serde_json::Value::Array(
                w.tuple
                    .iter()
                    .map(|a| serde_json::Value::String(a.clone()))
                    .collect(),
            ),
        );
        wit.insert(
            "source_answers".to_string(),
            tuples_json(&w.source_answers),
        );
        wit.insert(
            "certain_answers".to_string(),
            tuples_json(&w.certain_answers),
        );
        obj.insert("witness".to_string(), serde_json::Value::Object(wit));
    }
    let b = &v.bounds;
    let bounds = serde_json::json!({
        "rooted": b.rooted,
        "exact": b.exact,
        "pipeline": b.pipeline,
        "candidates_checked": b.candidates_checked,
        "consistent_only": b.consistent_only,
        "budget": {
            "max_abox_size": b.budget.max_abox_size,
            "max_core": b.budget.max_core,
            "max_outdegree": b.budget.max_outdegree,
            "max_depth": b.budget.max_depth,
            "exhaustive": b.budget.exhaustive,
        },
    });
    obj.insert("bounds".to_string(), bounds);
    serde_json::Value::Object(obj)
}

/// Human-readable verdict rendering (facts and answers sorted).
pub fn render_verdict(v: &crate::decision::Verdict) -> String {
    use crate::decision::Outcome;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "verdict: {}",
        match v.outcome {
            Outcome::Yes => "yes",
            Outcome::No => "no",
            Outcome::Unknown => "unknown",
        }
    );
    if let Some(r) = &v.realization {
        let _ = writeln!(out, "realization:");
        for line in render_query(r).lines() {
            let _ = writeln!(out, "  {}", line);
        }
    }
    if let Some(w) = &v.witness {
        let _ = writeln!(out, "witness database:");
        for line in render_database(&w.database).lines() {
            let _ = writeln!(out, "  {}", line);
        }
        let _ = writeln!(out, "witness tuple: ({})", w.tuple.join(","));
        let fmt = |ts: &std::collections::BTreeSet<Vec<String>>| {
            ts.iter()
                .map(|t| format!("({})", t.join(",")))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(out, "source answers:  {}", fmt(&w.source_answers));
        let _ = writeln!(out, "certain answers: {}", fmt(&w.certain_answers));
    }
    let b = &v.bounds;
    let _ = writeln!(
        out,
        "search: pipeline={} rooted={} exact={} candidates={}",
        b.pipeline, b.rooted, b.exact, b.candidates_checked
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Dialect;

    const EXAMPLE2: &str = r#"
# Example spec: managers and employees
schema { Man/2 Emp/3 }
mappings {
  Man(x,z), Emp(y,z,u) -> manages(x,y);
  Emp(x,y,z) -> Employee(x);
}
ontology el {
  Manager [= Employee;
  Manager [= exists manages.Secretary;
}
"#;

    #[test]
    fn parses_example2() {
        let spec = parse_spec(EXAMPLE2).unwrap();
        assert_eq!(spec.mappings.len(), 2);
        assert_eq!(spec.ontology.concept_inclusions.len(), 2);
        assert_eq!(spec.ontology.dialect, Dialect::El);
        assert!(spec.mapped_schema().contains("manages"));
    }

    #[test]
    fn empty_ontology_is_legal() {
        let spec = parse_spec("schema { R/1 } mappings { R(x) -> A(x) } ontology el { }").unwrap();
        assert!(spec.ontology.is_empty());
    }

    #[test]
    fn arity_mismatch_is_an_error() {
        let err = parse_spec("schema { Man/2 } mappings { Man(x) -> Manager(x) }").unwrap_err();
        match err {
            TextError::Syntax { message, .. } => assert!(message.contains("arity mismatch")),
            other => panic!("unexpected error {:?}", other),
        }
    }

    #[test]
    fn parses_queries() {
        let schema = Schema::from_pairs([("Man".to_string(), 2)]);
        let q = parse_query("q(x) :- Man(x,y).", &schema).unwrap();
        assert_eq!(q.arity(), 1);
        assert_eq!(q.disjuncts[0].quantified_vars.len(), 1);

        let schema3 = Schema::from_pairs([("r".to_string(), 2), ("s".to_string(), 2)]);
        let q3 = parse_query("q(x,y,z) :- r(x,y), s(x,z), s(z,u), x = y.", &schema3).unwrap();
        assert_eq!(q3.arity(), 3);
        assert_eq!(q3.disjuncts[0].equality_atoms().count(), 1);

        let schema1 = Schema::from_pairs([("A".to_string(), 1)]);
        let qb = parse_query("q() :- A(x).", &schema1).unwrap();
        assert!(qb.disjuncts[0].is_boolean());
    }

    #[test]
    fn round_trips_spec_and_query() {
        let spec = parse_spec(EXAMPLE2).unwrap();
        let text = render_spec(&spec);
        let spec2 = parse_spec(&text).unwrap();
        // mapping order is not semantic; rendering canonicalizes it
        assert_eq!(render_spec(&spec2), text);
        assert_eq!(spec2.source_schema, spec.source_schema);
        assert_eq!(spec2.ontology, spec.ontology);

        let schema = Schema::from_pairs([("Man".to_string(), 2)]);
        let q = parse_query("q(x) :- Man(x,y).", &schema).unwrap();
        let q2 = parse_query(&render_query(&q), &schema).unwrap();
        assert_eq!(q, q2);
    }

    #[test]
    fn role_inclusion_disambiguation() {
        let text = "schema { R0/2 } mappings { R0(x,y) -> r(x,y); R0(x,y) -> s(x,y) } \
                    ontology dllite { role r [= s; }";
        let spec = parse_spec(text).unwrap();
        assert_eq!(spec.ontology.role_inclusions.len(), 1);
        // bare form between known roles also classifies as a role inclusion
        let text2 = "schema { R0/2 } mappings { R0(x,y) -> r(x,y); R0(x,y) -> s(x,y) } \
                     ontology dllite { r [= s-; s [= r; }";
        let spec2 = parse_spec(text2).unwrap();
        assert_eq!(spec2.ontology.role_inclusions.len(), 2);
    }

    #[test]
    fn utf8_errors_are_located() {
        let bytes = b"schema {\n \xff }";
        let err = decode_utf8(bytes).unwrap_err();
        match err {
            TextError::Syntax { location, .. } => {
                assert_eq!(location.line, 2);
            }
            other => panic!("unexpected {:?}", other),
        }
    }
}
