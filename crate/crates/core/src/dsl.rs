//! Text format for systems, featured systems, global models, interface
//! specifications and formulas.
//!
//! ```text
//! system Race {
//!     component Ctrl {
//!         input finish;
//!         output start;
//!         init 0;
//!         0 -> 1: start!;
//!         1 -> 2: finish?;
//!         2 -> 0: finish?;
//!     }
//!     sync start = [1,1] -> [2,2];
//! }
//! global M {
//!     init 0;
//!     0 -> 1: {Ctrl} -> {R1,R2}: start;
//! }
//! formula f { [some*] true }
//! ```
//!
//! Featured systems add `features { lock, unlock }`, `model <expr>;`, guards
//! `0 -> 1: ask! [lock];` and guarded types `sync a when <expr> = ...;`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use crate::error::ModelError;
use crate::featured::{FeatureExpr, FeaturedCA, FeaturedSTS, FeaturedSystem};
use crate::lts::Lts;
use crate::pdl::{Formula, Program};
use crate::realise::{GlobalModel, SystemSignature};
use crate::system::{ComponentAutomaton, Interaction, Role, System};
use crate::teams::{Interval, SyncType, SyncTypeSpec};

/// A located diagnostic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Errors converting a parsed document to models.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DocError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("{0}")]
    Lookup(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Document {
    pub systems: Vec<SystemDecl>,
    pub globals: Vec<GlobalDecl>,
    /// Top-level types, e.g. for interface actions.
    pub syncs: Vec<SyncDecl>,
    pub formulas: Vec<FormulaDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SystemDecl {
    pub name: String,
    pub components: Vec<ComponentDecl>,
    pub syncs: Vec<SyncDecl>,
    pub features: Option<Vec<String>>,
    pub model: Option<FeatureExpr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ComponentDecl {
    pub name: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub internals: Vec<String>,
    pub init: String,
    /// States declared explicitly besides those on transitions.
    pub states: Vec<String>,
    pub transitions: Vec<TransitionDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionDecl {
    pub from: String,
    pub to: String,
    pub action: String,
    /// `!` or `?` as written.
    pub marker: Option<char>,
    pub guard: Option<FeatureExpr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyncDecl {
    pub action: String,
    pub when: Option<FeatureExpr>,
    pub sync: SyncType,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParticipantDecl {
    pub name: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GlobalDecl {
    pub name: String,
    pub participants: Vec<ParticipantDecl>,
    pub syncs: Vec<SyncDecl>,
    pub init: String,
    pub states: Vec<String>,
    pub transitions: Vec<(String, Interaction, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormulaDecl {
    pub name: String,
    pub formula: Formula<Interaction>,
}

// ---------------------------------------------------------------- lexer

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Sym(&'static str),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
        }
    }
}

const SYMBOLS: [&str; 23] = [
    "->", "&&", "||", "{", "}", "(", ")", "[", "]", ";", ",", ":", "!", "?", "=", "*", "+", "-", "<", ">", "&", "|", "^",
];

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '.'
}

fn lex(text: &str) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, c: char| {
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, c);
        } else if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                let ch = chars[i];
                advance(&mut i, &mut line, &mut col, ch);
            }
        } else if c == '"' {
            advance(&mut i, &mut line, &mut col, c);
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None => return Err(ParseError { line: l0, col: c0, message: "unterminated string".into() }),
                    Some('"') => {
                        advance(&mut i, &mut line, &mut col, '"');
                        break;
                    }
                    Some('\\') if i + 1 < chars.len() => {
                        advance(&mut i, &mut line, &mut col, '\\');
                        let ch = chars[i];
                        s.push(ch);
                        advance(&mut i, &mut line, &mut col, ch);
                    }
                    Some(&ch) => {
                        s.push(ch);
                        advance(&mut i, &mut line, &mut col, ch);
                    }
                }
            }
            out.push((Tok::Ident(s), l0, c0));
        } else if is_ident_char(c) {
            let mut s = String::new();
            while i < chars.len() && is_ident_char(chars[i]) {
                let ch = chars[i];
                s.push(ch);
                advance(&mut i, &mut line, &mut col, ch);
            }
            out.push((Tok::Ident(s), l0, c0));
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            let sym = SYMBOLS
                .iter()
                .find(|s| rest.starts_with(**s))
                .ok_or_else(|| ParseError { line, col, message: format!("unexpected character `{c}`") })?;
            for ch in sym.chars() {
                advance(&mut i, &mut line, &mut col, ch);
            }
            out.push((Tok::Sym(sym), l0, c0));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- parser

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    end: (usize, usize),
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(text: &str) -> PResult<Self> {
        let toks = lex(text)?;
        let lines = text.lines().count().max(1);
        let last_col = text.lines().last().map_or(1, |l| l.chars().count() + 1);
        Ok(Parser { toks, pos: 0, end: (lines, last_col) })
    }

    fn loc(&self) -> (usize, usize) {
        self.toks.get(self.pos).map_or(self.end, |t| (t.1, t.2))
    }

    fn err_at<T>(&self, at: (usize, usize), message: impl Into<String>) -> PResult<T> {
        Err(ParseError { line: at.0, col: at.1, message: message.into() })
    }

    fn err<T>(&self, message: impl Into<String>) -> PResult<T> {
        self.err_at(self.loc(), message)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|t| &t.0)
    }

    fn at_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    fn at_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(x)) if x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.at_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            return Ok(());
        }
        match self.peek() {
            Some(t) => self.err(format!("expected `{s}`, found {t}")),
            None => self.err(format!("expected `{s}`, found end of input")),
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            Some(t) => self.err(format!("expected a name, found {t}")),
            None => self.err("expected a name, found end of input"),
        }
    }

    fn ident_list(&mut self) -> PResult<Vec<String>> {
        let mut v = vec![self.ident()?];
        while self.eat_sym(",") {
            v.push(self.ident()?);
        }
        Ok(v)
    }

    fn number(&mut self) -> PResult<u32> {
        let at = self.loc();
        let s = self.ident()?;
        s.parse().or_else(|_| self.err_at(at, format!("expected a number, found `{s}`")))
    }

    fn interval(&mut self) -> PResult<Interval> {
        let at = self.loc();
        self.expect_sym("[")?;
        let min = self.number()?;
        self.expect_sym(",")?;
        let max = if self.eat_sym("*") { None } else { Some(self.number()?) };
        self.expect_sym("]")?;
        Interval::new(min, max).or_else(|e| self.err_at(at, e.to_string()))
    }

    fn sync_clause(&mut self, allow_when: bool) -> PResult<SyncDecl> {
        let action = self.ident()?;
        let when = if self.at_kw("when") {
            if !allow_when {
                return self.err("guarded types are only allowed in systems");
            }
            self.pos += 1;
            Some(self.feature_expr()?)
        } else {
            None
        };
        self.expect_sym("=")?;
        let out = self.interval()?;
        self.expect_sym("->")?;
        let inp = self.interval()?;
        self.expect_sym(";")?;
        Ok(SyncDecl { action, when, sync: SyncType::new(out, inp) })
    }

    // feature expressions
    fn feature_expr(&mut self) -> PResult<FeatureExpr> {
        let mut e = self.feature_and()?;
        while self.eat_sym("||") || self.eat_sym("|") {
            e = FeatureExpr::or(e, self.feature_and()?);
        }
        Ok(e)
    }

    fn feature_and(&mut self) -> PResult<FeatureExpr> {
        let mut e = self.feature_unary()?;
        while self.eat_sym("&&") || self.eat_sym("&") {
            e = FeatureExpr::and(e, self.feature_unary()?);
        }
        Ok(e)
    }

    fn feature_unary(&mut self) -> PResult<FeatureExpr> {
        if self.eat_sym("!") {
            return Ok(FeatureExpr::not(self.feature_unary()?));
        }
        if self.eat_sym("(") {
            let e = self.feature_expr()?;
            self.expect_sym(")")?;
            return Ok(e);
        }
        let name = self.ident()?;
        Ok(match name.as_str() {
            "true" => FeatureExpr::True,
            "false" => FeatureExpr::False,
            _ => FeatureExpr::Var(name),
        })
    }

    fn document(&mut self) -> PResult<Document> {
        let mut doc = Document::default();
        if self.peek().is_none() {
            return self.err("no system declared");
        }
        while let Some(tok) = self.peek().cloned() {
            let at = self.loc();
            match tok {
                Tok::Ident(k) if k == "system" => {
                    self.pos += 1;
                    let s = self.system()?;
                    if doc.systems.iter().any(|x| x.name == s.name) {
                        return self.err_at(at, format!("duplicate system `{}`", s.name));
                    }
                    doc.systems.push(s);
                }
                Tok::Ident(k) if k == "global" => {
                    self.pos += 1;
                    let g = self.global()?;
                    if doc.globals.iter().any(|x| x.name == g.name) {
                        return self.err_at(at, format!("duplicate global model `{}`", g.name));
                    }
                    doc.globals.push(g);
                }
                Tok::Ident(k) if k == "sync" => {
                    self.pos += 1;
                    let s = self.sync_clause(false)?;
                    check_sync_unique(&doc.syncs, &s).or_else(|m| self.err_at(at, m))?;
                    doc.syncs.push(s);
                }
                Tok::Ident(k) if k == "formula" => {
                    self.pos += 1;
                    let name = self.ident()?;
                    self.expect_sym("{")?;
                    let formula = self.formula()?;
                    self.expect_sym("}")?;
                    doc.formulas.push(FormulaDecl { name, formula });
                }
                t => return self.err(format!("expected `system`, `global`, `sync` or `formula`, found {t}")),
            }
        }
        Ok(doc)
    }

    fn system(&mut self) -> PResult<SystemDecl> {
        let name = self.ident()?;
        self.expect_sym("{")?;
        let mut sys = SystemDecl { name, ..Default::default() };
        while !self.eat_sym("}") {
            let at = self.loc();
            let kw = self.ident()?;
            match kw.as_str() {
                "component" => {
                    let c = self.component()?;
                    if sys.components.iter().any(|x| x.name == c.name) {
                        return self.err_at(at, format!("duplicate component `{}`", c.name));
                    }
                    sys.components.push(c);
                }
                "sync" => {
                    let s = self.sync_clause(true)?;
                    check_sync_unique(&sys.syncs, &s).or_else(|m| self.err_at(at, m))?;
                    sys.syncs.push(s);
                }
                "features" => {
                    if sys.features.is_some() {
                        return self.err_at(at, "features declared twice");
                    }
                    self.expect_sym("{")?;
                    let fs = if self.at_sym("}") { Vec::new() } else { self.ident_list()? };
                    self.expect_sym("}")?;
                    self.eat_sym(";");
                    sys.features = Some(fs);
                }
                "model" => {
                    if sys.model.is_some() {
                        return self.err_at(at, "feature model declared twice");
                    }
                    sys.model = Some(self.feature_expr()?);
                    self.expect_sym(";")?;
                }
                other => return self.err_at(at, format!("unexpected `{other}` in system")),
            }
        }
        if sys.components.is_empty() {
            return self.err("system has no components");
        }
        Ok(sys)
    }

    fn component(&mut self) -> PResult<ComponentDecl> {
        let name = self.ident()?;
        self.expect_sym("{")?;
        let mut c = ComponentDecl { name, ..Default::default() };
        let mut init = None;
        while !self.eat_sym("}") {
            let at = self.loc();
            if matches!(self.peek2(), Some(Tok::Sym("->"))) {
                let t = self.local_transition(&c)?;
                c.transitions.push(t);
                continue;
            }
            let kw = self.ident()?;
            match kw.as_str() {
                "input" | "output" | "internal" => {
                    for a in self.ident_list()? {
                        if c.inputs.contains(&a) || c.outputs.contains(&a) || c.internals.contains(&a) {
                            return self.err_at(at, format!("action `{a}` declared twice in `{}`", c.name));
                        }
                        match kw.as_str() {
                            "input" => c.inputs.push(a),
                            "output" => c.outputs.push(a),
                            _ => c.internals.push(a),
                        }
                    }
                    self.expect_sym(";")?;
                }
                "init" => {
                    if init.is_some() {
                        return self.err_at(at, "initial state declared twice");
                    }
                    init = Some(self.ident()?);
                    self.expect_sym(";")?;
                }
                "states" => {
                    for s in self.ident_list()? {
                        if c.states.contains(&s) {
                            return self.err_at(at, format!("duplicate state `{s}`"));
                        }
                        c.states.push(s);
                    }
                    self.expect_sym(";")?;
                }
                other => return self.err_at(at, format!("unexpected `{other}` in component")),
            }
        }
        match init {
            Some(i) => c.init = i,
            None => return self.err(format!("component `{}` has no `init` declaration", c.name)),
        }
        Ok(c)
    }

    fn local_transition(&mut self, c: &ComponentDecl) -> PResult<TransitionDecl> {
        let from = self.ident()?;
        self.expect_sym("->")?;
        let to = self.ident()?;
        self.expect_sym(":")?;
        let at = self.loc();
        let action = self.ident()?;
        let marker = if self.eat_sym("!") {
            Some('!')
        } else if self.eat_sym("?") {
            Some('?')
        } else {
            None
        };
        let role = if c.inputs.contains(&action) {
            '?'
        } else if c.outputs.contains(&action) {
            '!'
        } else if c.internals.contains(&action) {
            ' '
        } else {
            return self.err_at(at, format!("undeclared action `{action}` in component `{}`", c.name));
        };
        if let Some(m) = marker {
            if m != role {
                return self.err_at(at, format!("`{action}{m}` does not match the declared role of `{action}`"));
            }
        }
        let guard = if self.eat_sym("[") {
            let g = self.feature_expr()?;
            self.expect_sym("]")?;
            Some(g)
        } else {
            None
        };
        self.expect_sym(";")?;
        Ok(TransitionDecl { from, to, action, marker, guard })
    }

    fn global(&mut self) -> PResult<GlobalDecl> {
        let name = self.ident()?;
        self.expect_sym("{")?;
        let mut g = GlobalDecl { name, ..Default::default() };
        let mut init = None;
        while !self.eat_sym("}") {
            let at = self.loc();
            if matches!(self.peek2(), Some(Tok::Sym("->"))) {
                let from = self.ident()?;
                self.expect_sym("->")?;
                let to = self.ident()?;
                self.expect_sym(":")?;
                let i = self.interaction()?;
                self.expect_sym(";")?;
                g.transitions.push((from, i, to));
                continue;
            }
            let kw = self.ident()?;
            match kw.as_str() {
                "participant" => {
                    let pname = self.ident()?;
                    if g.participants.iter().any(|p| p.name == pname) {
                        return self.err_at(at, format!("duplicate participant `{pname}`"));
                    }
                    self.expect_sym("{")?;
                    let mut p = ParticipantDecl { name: pname, ..Default::default() };
                    while !self.eat_sym("}") {
                        let k = self.ident()?;
                        let list = self.ident_list()?;
                        self.expect_sym(";")?;
                        match k.as_str() {
                            "input" => p.inputs.extend(list),
                            "output" => p.outputs.extend(list),
                            other => return self.err_at(at, format!("unexpected `{other}` in participant")),
                        }
                    }
                    g.participants.push(p);
                }
                "sync" => {
                    let s = self.sync_clause(false)?;
                    check_sync_unique(&g.syncs, &s).or_else(|m| self.err_at(at, m))?;
                    g.syncs.push(s);
                }
                "init" => {
                    if init.is_some() {
                        return self.err_at(at, "initial state declared twice");
                    }
                    init = Some(self.ident()?);
                    self.expect_sym(";")?;
                }
                "states" => {
                    for s in self.ident_list()? {
                        if g.states.contains(&s) {
                            return self.err_at(at, format!("duplicate state `{s}`"));
                        }
                        g.states.push(s);
                    }
                    self.expect_sym(";")?;
                }
                other => return self.err_at(at, format!("unexpected `{other}` in global model")),
            }
        }
        match init {
            Some(i) => g.init = i,
            None => return self.err(format!("global model `{}` has no `init` declaration", g.name)),
        }
        Ok(g)
    }

    fn name_set(&mut self) -> PResult<BTreeSet<String>> {
        if self.eat_sym("{") {
            if self.eat_sym("}") {
                return Ok(BTreeSet::new());
            }
            let v = self.ident_list()?;
            self.expect_sym("}")?;
            Ok(v.into_iter().collect())
        } else {
            Ok(BTreeSet::from([self.ident()?]))
        }
    }

    fn interaction(&mut self) -> PResult<Interaction> {
        let at = self.loc();
        let out = self.name_set()?;
        self.expect_sym("->")?;
        let inp = self.name_set()?;
        self.expect_sym(":")?;
        let action = self.ident()?;
        if out.is_empty() && inp.is_empty() {
            return self.err_at(at, "an interaction needs at least one participant");
        }
        if let Some(n) = out.intersection(&inp).next() {
            return self.err_at(at, format!("`{n}` cannot both send and receive `{action}`"));
        }
        Ok(Interaction { out, action, inp })
    }

    // programs and formulas
    fn program(&mut self) -> PResult<Program<Interaction>> {
        let mut p = self.program_seq()?;
        while self.eat_sym("+") {
            p = Program::choice(p, self.program_seq()?);
        }
        Ok(p)
    }

    fn program_seq(&mut self) -> PResult<Program<Interaction>> {
        let mut p = self.program_star()?;
        while self.eat_sym(";") {
            p = Program::seq(p, self.program_star()?);
        }
        Ok(p)
    }

    fn program_star(&mut self) -> PResult<Program<Interaction>> {
        let mut p = self.program_atom()?;
        while self.eat_sym("*") {
            p = Program::star(p);
        }
        Ok(p)
    }

    fn program_atom(&mut self) -> PResult<Program<Interaction>> {
        if self.at_kw("some") {
            self.pos += 1;
            return Ok(Program::Some);
        }
        if self.eat_sym("-") {
            self.expect_sym("(")?;
            if self.eat_sym(")") {
                return Ok(Program::Complement(BTreeSet::new()));
            }
            let mut set = BTreeSet::from([self.interaction()?]);
            while self.eat_sym("+") {
                set.insert(self.interaction()?);
            }
            self.expect_sym(")")?;
            return Ok(Program::Complement(set));
        }
        if self.eat_sym("(") {
            let p = self.program()?;
            self.expect_sym(")")?;
            return Ok(p);
        }
        Ok(Program::Atom(self.interaction()?))
    }

    fn formula(&mut self) -> PResult<Formula<Interaction>> {
        let mut f = self.formula_and()?;
        while self.eat_sym("||") {
            f = Formula::or(f, self.formula_and()?);
        }
        Ok(f)
    }

    fn formula_and(&mut self) -> PResult<Formula<Interaction>> {
        let mut f = self.formula_unary()?;
        while self.eat_sym("&&") {
            f = Formula::and(f, self.formula_unary()?);
        }
        Ok(f)
    }

    fn formula_unary(&mut self) -> PResult<Formula<Interaction>> {
        if self.eat_sym("!") {
            return Ok(Formula::not(self.formula_unary()?));
        }
        if self.eat_sym("[") {
            let p = self.program()?;
            self.expect_sym("]")?;
            return Ok(Formula::boxed(p, self.formula_unary()?));
        }
        if self.eat_sym("<") {
            let p = self.program()?;
            self.expect_sym(">")?;
            return Ok(Formula::diamond(p, self.formula_unary()?));
        }
        if self.eat_sym("(") {
            let f = self.formula()?;
            self.expect_sym(")")?;
            return Ok(f);
        }
        let at = self.loc();
        match self.ident()?.as_str() {
            "true" => Ok(Formula::True),
            "false" => Ok(Formula::False),
            other => self.err_at(at, format!("expected a formula, found `{other}`")),
        }
    }
}

fn check_sync_unique(existing: &[SyncDecl], s: &SyncDecl) -> Result<(), String> {
    if s.when.is_none() && existing.iter().any(|x| x.action == s.action && x.when.is_none()) {
        return Err(format!("duplicate synchronisation type for `{}`", s.action));
    }
    Ok(())
}

/// Parses a document.
pub fn parse(text: &str) -> Result<Document, ParseError> {
    Parser::new(text)?.document()
}

/// Parses one formula.
pub fn parse_formula(text: &str) -> Result<Formula<Interaction>, ParseError> {
    let mut p = Parser::new(text)?;
    let f = p.formula()?;
    match p.peek() {
        None => Ok(f),
        Some(t) => p.err(format!("unexpected {t} after formula")),
    }
}

/// Parses an interaction such as `{Ctrl}->{R1,R2}:start`.
pub fn parse_interaction(text: &str) -> Result<Interaction, ParseError> {
    let mut p = Parser::new(text)?;
    let i = p.interaction()?;
    match p.peek() {
        None => Ok(i),
        Some(t) => p.err(format!("unexpected {t} after interaction")),
    }
}

/// Parses a synchronisation type such as `[1,1] -> [1,*]`.
pub fn parse_sync_type(text: &str) -> Result<SyncType, ParseError> {
    let mut p = Parser::new(text)?;
    let out = p.interval()?;
    p.expect_sym("->")?;
    let inp = p.interval()?;
    match p.peek() {
        None => Ok(SyncType::new(out, inp)),
        Some(t) => p.err(format!("unexpected {t} after synchronisation type")),
    }
}

/// A file of formulas: either `formula name { ... }` blocks or one formula
/// per non-empty line (`#` starts a comment).
pub fn parse_formula_file(text: &str) -> Result<Vec<FormulaDecl>, ParseError> {
    if text.lines().any(|l| l.trim_start().starts_with("formula ")) {
        return Ok(parse(text)?.formulas);
    }
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let formula = parse_formula(body).map_err(|e| ParseError { line: i + 1, ..e })?;
        out.push(FormulaDecl { name: format!("line{}", i + 1), formula });
    }
    Ok(out)
}

// ---------------------------------------------------------------- printer

const KEYWORDS: [&str; 18] = [
    "system", "global", "sync", "formula", "component", "features", "model", "input", "output", "internal", "init",
    "states", "participant", "when", "true", "false", "some", "-",
];

/// A name as it must be written: bare if possible, quoted otherwise.
pub fn quote(name: &str) -> String {
    if !name.is_empty() && name.chars().all(is_ident_char) && !KEYWORDS.contains(&name) {
        name.to_string()
    } else {
        let escaped = name.replace('\\', "\\\\").replace('"', "\\\"");
        format!("\"{escaped}\"")
    }
}

fn quote_list(names: &[String]) -> String {
    names.iter().map(|n| quote(n)).collect::<Vec<_>>().join(", ")
}

fn write_set(out: &mut String, set: &BTreeSet<String>) {
    let v: Vec<String> = set.iter().map(|n| quote(n)).collect();
    let _ = write!(out, "{{{}}}", v.join(","));
}

/// Interaction in source syntax, with quoting.
pub fn print_interaction(i: &Interaction) -> String {
    let mut s = String::new();
    write_set(&mut s, &i.out);
    s.push_str(" -> ");
    write_set(&mut s, &i.inp);
    let _ = write!(s, ": {}", quote(&i.action));
    s
}

fn feature_text(e: &FeatureExpr) -> String {
    // feature names are identifiers, so the plain rendering is parseable
    e.to_string()
}

fn print_sync(out: &mut String, indent: &str, s: &SyncDecl) {
    let when = s.when.as_ref().map(|w| format!(" when {}", feature_text(w))).unwrap_or_default();
    let _ = writeln!(out, "{indent}sync {}{when} = {} -> {};", quote(&s.action), s.sync.out, s.sync.inp);
}

fn print_program(p: &Program<Interaction>, min: u8) -> String {
    let prec = match p {
        Program::Choice(..) => 0,
        Program::Seq(..) => 1,
        Program::Star(_) => 2,
        _ => 3,
    };
    let body = match p {
        Program::Atom(i) => print_interaction(i),
        Program::Some => "some".into(),
        Program::Complement(s) => {
            let v: Vec<String> = s.iter().map(print_interaction).collect();
            format!("-({})", v.join(" + "))
        }
        Program::Seq(a, b) => format!("{} ; {}", print_program(a, 1), print_program(b, 2)),
        Program::Choice(a, b) => format!("{} + {}", print_program(a, 0), print_program(b, 1)),
        Program::Star(a) => format!("{}*", print_program(a, 3)),
    };
    if prec < min {
        format!("({body})")
    } else {
        body
    }
}

/// A formula in source syntax.
pub fn print_formula(f: &Formula<Interaction>) -> String {
    fn go(f: &Formula<Interaction>, min: u8) -> String {
        let prec = match f {
            Formula::Or(..) => 0,
            Formula::And(..) => 1,
            _ => 2,
        };
        let body = match f {
            Formula::True => "true".into(),
            Formula::False => "false".into(),
            Formula::Not(a) => format!("!{}", go(a, 2)),
            Formula::And(a, b) => format!("{} && {}", go(a, 1), go(b, 2)),
            Formula::Or(a, b) => format!("{} || {}", go(a, 0), go(b, 1)),
            Formula::Box(p, a) => format!("[{}] {}", print_program(p, 0), go(a, 2)),
            Formula::Diamond(p, a) => format!("<{}> {}", print_program(p, 0), go(a, 2)),
        };
        if prec < min {
            format!("({body})")
        } else {
            body
        }
    }
    go(f, 0)
}

/// Renders a document in source syntax; `parse(&print(d)) == Ok(d)`.
pub fn print(doc: &Document) -> String {
    let mut out = String::new();
    for s in &doc.systems {
        let _ = writeln!(out, "system {} {{", quote(&s.name));
        if let Some(fs) = &s.features {
            let _ = writeln!(out, "    features {{ {} }}", quote_list(fs));
        }
        if let Some(m) = &s.model {
            let _ = writeln!(out, "    model {};", feature_text(m));
        }
        for c in &s.components {
            let _ = writeln!(out, "    component {} {{", quote(&c.name));
            for (kw, list) in [("input", &c.inputs), ("output", &c.outputs), ("internal", &c.internals)] {
                if !list.is_empty() {
                    let _ = writeln!(out, "        {kw} {};", quote_list(list));
                }
            }
            let _ = writeln!(out, "        init {};", quote(&c.init));
            if !c.states.is_empty() {
                let _ = writeln!(out, "        states {};", quote_list(&c.states));
            }
            for t in &c.transitions {
                let marker = t.marker.map(String::from).unwrap_or_default();
                let guard = t.guard.as_ref().map(|g| format!(" [{}]", feature_text(g))).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "        {} -> {}: {}{marker}{guard};",
                    quote(&t.from),
                    quote(&t.to),
                    quote(&t.action)
                );
            }
            out.push_str("    }\n");
        }
        for sy in &s.syncs {
            print_sync(&mut out, "    ", sy);
        }
        out.push_str("}\n");
    }
    for g in &doc.globals {
        let _ = writeln!(out, "global {} {{", quote(&g.name));
        for p in &g.participants {
            let _ = write!(out, "    participant {} {{", quote(&p.name));
            if !p.inputs.is_empty() {
                let _ = write!(out, " input {};", quote_list(&p.inputs));
            }
            if !p.outputs.is_empty() {
                let _ = write!(out, " output {};", quote_list(&p.outputs));
            }
            out.push_str(" }\n");
        }
        for sy in &g.syncs {
            print_sync(&mut out, "    ", sy);
        }
        let _ = writeln!(out, "    init {};", quote(&g.init));
        if !g.states.is_empty() {
            let _ = writeln!(out, "    states {};", quote_list(&g.states));
        }
        for (s, i, d) in &g.transitions {
            let _ = writeln!(out, "    {} -> {}: {};", quote(s), quote(d), print_interaction(i));
        }
        out.push_str("}\n");
    }
    for sy in &doc.syncs {
        print_sync(&mut out, "", sy);
    }
    for f in &doc.formulas {
        let _ = writeln!(out, "formula {} {{ {} }}", quote(&f.name), print_formula(&f.formula));
    }
    out
}

// ---------------------------------------------------------------- conversion

impl Document {
    pub fn system(&self, name: Option<&str>) -> Result<&SystemDecl, DocError> {
        pick(&self.systems, name, |s| &s.name, "system")
    }

    pub fn global(&self, name: Option<&str>) -> Result<&GlobalDecl, DocError> {
        pick(&self.globals, name, |g| &g.name, "global model")
    }

    /// The top-level types as a plain specification.
    pub fn top_level_spec(&self) -> SyncTypeSpec {
        plain_spec(&self.syncs)
    }
}

fn pick<'a, T>(items: &'a [T], name: Option<&str>, key: impl Fn(&T) -> &String, what: &str) -> Result<&'a T, DocError> {
    match name {
        Some(n) => items.iter().find(|x| key(x) == n).ok_or_else(|| DocError::Lookup(format!("no {what} named `{n}`"))),
        None => match items {
            [one] => Ok(one),
            [] => Err(DocError::Lookup(format!("no {what} declared"))),
            _ => Err(DocError::Lookup(format!("several {what}s declared; choose one by name"))),
        },
    }
}

fn plain_spec(syncs: &[SyncDecl]) -> SyncTypeSpec {
    let mut spec = SyncTypeSpec::new();
    for s in syncs.iter().filter(|s| s.when.is_none()) {
        spec.insert(&s.action, s.sync);
    }
    spec
}

fn component_of(c: &ComponentDecl) -> ComponentAutomaton {
    let mut ca = ComponentAutomaton::new(c.init.clone())
        .with_inputs(c.inputs.iter().cloned())
        .with_outputs(c.outputs.iter().cloned())
        .with_internals(c.internals.iter().cloned());
    for s in &c.states {
        ca = ca.with_state(s.clone());
    }
    for t in &c.transitions {
        ca.add_edge(&t.from, &t.action, &t.to);
    }
    ca
}

impl SystemDecl {
    pub fn is_featured(&self) -> bool {
        self.features.is_some()
            || self.model.is_some()
            || self.syncs.iter().any(|s| s.when.is_some())
            || self.components.iter().flat_map(|c| &c.transitions).any(|t| t.guard.is_some())
    }

    /// The plain system; featured declarations must be projected first.
    pub fn to_system(&self) -> Result<System, DocError> {
        if self.is_featured() {
            return Err(DocError::Lookup(format!(
                "system `{}` is featured; project it to a product first",
                self.name
            )));
        }
        Ok(System::new(self.components.iter().map(|c| (c.name.clone(), component_of(c))))?)
    }

    /// The unguarded types.
    pub fn spec(&self) -> SyncTypeSpec {
        plain_spec(&self.syncs)
    }

    pub fn to_featured(&self) -> Result<FeaturedSystem, DocError> {
        let comps = self
            .components
            .iter()
            .map(|c| {
                let guards = c.transitions.iter().map(|t| t.guard.clone().unwrap_or(FeatureExpr::True)).collect();
                Ok((c.name.clone(), FeaturedCA::new(component_of(c), guards)?))
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        let features = self.features.clone().unwrap_or_default();
        Ok(FeaturedSystem::new(comps, features, self.model.clone().unwrap_or(FeatureExpr::True))?)
    }

    pub fn to_fst(&self) -> FeaturedSTS {
        let mut fst = FeaturedSTS::new();
        for s in &self.syncs {
            match &s.when {
                Some(g) => fst.add_rule(g.clone(), &s.action, s.sync),
                None => fst.set_default(&s.action, s.sync),
            }
        }
        fst
    }
}

impl GlobalDecl {
    pub fn signature(&self) -> Result<SystemSignature, DocError> {
        let mut order: Vec<String> = self.participants.iter().map(|p| p.name.clone()).collect();
        let mut roles: BTreeMap<String, (BTreeSet<String>, BTreeSet<String>)> = self
            .participants
            .iter()
            .map(|p| (p.name.clone(), (p.inputs.iter().cloned().collect(), p.outputs.iter().cloned().collect())))
            .collect();
        for (_, i, _) in &self.transitions {
            for (set, is_out) in [(&i.out, true), (&i.inp, false)] {
                for n in set {
                    if !order.contains(n) {
                        order.push(n.clone());
                    }
                    let e = roles.entry(n.clone()).or_default();
                    if is_out {
                        e.1.insert(i.action.clone());
                    } else {
                        e.0.insert(i.action.clone());
                    }
                }
            }
        }
        Ok(SystemSignature::new(order.into_iter().map(|n| {
            let (i, o) = roles.remove(&n).unwrap_or_default();
            (n, i, o)
        }))?)
    }

    pub fn to_model(&self) -> Result<GlobalModel, DocError> {
        let mut lts = Lts::new(self.init.clone());
        for s in &self.states {
            lts.add_state(s.clone());
        }
        for (s, i, d) in &self.transitions {
            let a = lts.add_state(s.clone());
            let b = lts.add_state(d.clone());
            lts.add_transition(a, i.clone(), b);
        }
        Ok(GlobalModel::new(self.signature()?, plain_spec(&self.syncs), lts)?)
    }
}

/// The states to declare explicitly so that parsing restores the state
/// order: only the isolated ones when that suffices, all but the initial
/// one otherwise.
fn extra_states(states: &[String], initial: usize, edges: impl Iterator<Item = (usize, usize)>) -> Vec<String> {
    let edges: Vec<(usize, usize)> = edges.collect();
    let rebuilt = |declared: &[usize]| {
        let mut order = vec![initial];
        for x in declared.iter().copied().chain(edges.iter().flat_map(|&(s, d)| [s, d])) {
            if !order.contains(&x) {
                order.push(x);
            }
        }
        order
    };
    let on_edges: BTreeSet<usize> = edges.iter().flat_map(|&(s, d)| [s, d]).collect();
    let isolated: Vec<usize> = (0..states.len()).filter(|x| *x != initial && !on_edges.contains(x)).collect();
    let keep = if rebuilt(&isolated).into_iter().eq(0..states.len()) {
        isolated
    } else {
        (0..states.len()).filter(|&x| x != initial).collect()
    };
    keep.into_iter().map(|x| states[x].clone()).collect()
}

/// Declaration of a plain system, for printing synthesised components.
pub fn system_decl(name: &str, sys: &System, spec: &SyncTypeSpec) -> SystemDecl {
    let components = sys
        .iter()
        .map(|(n, c)| {
            ComponentDecl {
                name: n.clone(),
                inputs: c.inputs().iter().cloned().collect(),
                outputs: c.outputs().iter().cloned().collect(),
                internals: c.internals().iter().cloned().collect(),
                init: c.states()[c.initial()].clone(),
                states: extra_states(c.states(), c.initial(), c.transitions().iter().map(|(s, _, d)| (*s, *d))),
                transitions: c
                    .transitions()
                    .iter()
                    .map(|(s, a, d)| TransitionDecl {
                        from: c.states()[*s].clone(),
                        to: c.states()[*d].clone(),
                        action: a.clone(),
                        marker: match c.role(a) {
                            Some(Role::Input) => Some('?'),
                            Some(Role::Output) => Some('!'),
                            _ => None,
                        },
                        guard: None,
                    })
                    .collect(),
            }
        })
        .collect();
    let syncs = spec.iter().map(|(a, st)| SyncDecl { action: a.clone(), when: None, sync: *st }).collect();
    SystemDecl { name: name.to_string(), components, syncs, features: None, model: None }
}

/// Declaration of a global model.
pub fn global_decl(name: &str, m: &GlobalModel) -> GlobalDecl {
    let lts = m.lts();
    let participants = m
        .signature()
        .entries()
        .iter()
        .map(|(n, i, o)| ParticipantDecl {
            name: n.clone(),
            inputs: i.iter().cloned().collect(),
            outputs: o.iter().cloned().collect(),
        })
        .collect();
    GlobalDecl {
        name: name.to_string(),
        participants,
        syncs: m.spec().iter().map(|(a, st)| SyncDecl { action: a.clone(), when: None, sync: *st }).collect(),
        init: lts.state(lts.initial()).clone(),
        states: extra_states(lts.states(), lts.initial(), lts.transitions().iter().map(|(s, _, d)| (*s, *d))),
        transitions: lts
            .transitions()
            .iter()
            .map(|(s, i, d)| (lts.state(*s).clone(), i.clone(), lts.state(*d).clone()))
            .collect(),
    }
}
