//! Featured component automata, systems, synchronisation type
//! specifications and team automata, with projections to products.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::comm::{is_receptive, is_responsive, Mode};
use crate::error::{ModelError, Result};
use crate::exec::Execution;
use crate::lts::StateId;
use crate::system::{ComponentAutomaton, Exploration, System, SystemLabel, SystemLts};
use crate::teams::{team, SyncType, SyncTypeSpec};

/// A set of selected features.
pub type Product = BTreeSet<String>;

/// Largest feature set whose products are enumerated.
pub const FEATURE_CAP: usize = 20;

/// Boolean formula over feature names.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[allow(clippy::should_implement_trait)]
pub enum FeatureExpr {
    True,
    False,
    Var(String),
    Not(Box<FeatureExpr>),
    And(Box<FeatureExpr>, Box<FeatureExpr>),
    Or(Box<FeatureExpr>, Box<FeatureExpr>),
}

#[allow(clippy::should_implement_trait)]
impl FeatureExpr {
    pub fn var(name: &str) -> Self {
        FeatureExpr::Var(name.to_string())
    }

    pub fn not(e: FeatureExpr) -> Self {
        FeatureExpr::Not(Box::new(e))
    }

    pub fn and(a: FeatureExpr, b: FeatureExpr) -> Self {
        FeatureExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: FeatureExpr, b: FeatureExpr) -> Self {
        FeatureExpr::Or(Box::new(a), Box::new(b))
    }

    /// Conjunction with constant folding.
    pub fn conj(a: FeatureExpr, b: FeatureExpr) -> Self {
        match (a, b) {
            (FeatureExpr::False, _) | (_, FeatureExpr::False) => FeatureExpr::False,
            (FeatureExpr::True, x) | (x, FeatureExpr::True) => x,
            (x, y) if x == y => x,
            (x, y) => FeatureExpr::and(x, y),
        }
    }

    /// Disjunction with constant folding.
    pub fn disj(a: FeatureExpr, b: FeatureExpr) -> Self {
        match (a, b) {
            (FeatureExpr::True, _) | (_, FeatureExpr::True) => FeatureExpr::True,
            (FeatureExpr::False, x) | (x, FeatureExpr::False) => x,
            (x, y) if x == y => x,
            (x, y) => FeatureExpr::or(x, y),
        }
    }

    /// Negation with constant folding.
    pub fn neg(e: FeatureExpr) -> Self {
        match e {
            FeatureExpr::True => FeatureExpr::False,
            FeatureExpr::False => FeatureExpr::True,
            FeatureExpr::Not(x) => *x,
            x => FeatureExpr::not(x),
        }
    }

    pub fn constant(b: bool) -> Self {
        if b {
            FeatureExpr::True
        } else {
            FeatureExpr::False
        }
    }

    pub fn eval(&self, product: &Product) -> bool {
        match self {
            FeatureExpr::True => true,
            FeatureExpr::False => false,
            FeatureExpr::Var(v) => product.contains(v),
            FeatureExpr::Not(e) => !e.eval(product),
            FeatureExpr::And(a, b) => a.eval(product) && b.eval(product),
            FeatureExpr::Or(a, b) => a.eval(product) || b.eval(product),
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            FeatureExpr::True | FeatureExpr::False => {}
            FeatureExpr::Var(v) => {
                out.insert(v.clone());
            }
            FeatureExpr::Not(e) => e.collect_vars(out),
            FeatureExpr::And(a, b) | FeatureExpr::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Parses `true`, `false`, identifiers, `!`, `&&`, `||` and parentheses.
    /// `&` and `|` are accepted as shorthands.
    pub fn parse(text: &str) -> std::result::Result<FeatureExpr, String> {
        let tokens = tokenize(text)?;
        let mut p = ExprParser { tokens, pos: 0 };
        let e = p.or_expr()?;
        match p.tokens.get(p.pos) {
            None => Ok(e),
            Some(t) => Err(format!("unexpected `{t}` in feature expression")),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            FeatureExpr::Or(..) => 0,
            FeatureExpr::And(..) => 1,
            FeatureExpr::Not(_) => 2,
            _ => 3,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            f.write_str("(")?;
            self.fmt_at(f, 0)?;
            return f.write_str(")");
        }
        match self {
            FeatureExpr::True => f.write_str("true"),
            FeatureExpr::False => f.write_str("false"),
            FeatureExpr::Var(v) => f.write_str(v),
            FeatureExpr::Not(e) => {
                f.write_str("!")?;
                e.fmt_at(f, 2)
            }
            FeatureExpr::And(a, b) => {
                a.fmt_at(f, 1)?;
                f.write_str(" && ")?;
                b.fmt_at(f, 2)
            }
            FeatureExpr::Or(a, b) => {
                a.fmt_at(f, 0)?;
                f.write_str(" || ")?;
                b.fmt_at(f, 1)
            }
        }
    }
}

impl fmt::Display for FeatureExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

fn tokenize(text: &str) -> std::result::Result<Vec<String>, String> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(chars[start..i].iter().collect());
        } else if (c == '&' || c == '|') && chars.get(i + 1) == Some(&c) {
            out.push(format!("{c}{c}"));
            i += 2;
        } else if matches!(c, '&' | '|') {
            out.push(format!("{c}{c}"));
            i += 1;
        } else if matches!(c, '!' | '(' | ')') {
            out.push(c.to_string());
            i += 1;
        } else {
            return Err(format!("unexpected character `{c}` in feature expression"));
        }
    }
    Ok(out)
}

struct ExprParser {
    tokens: Vec<String>,
    pos: usize,
}

impl ExprParser {
    fn peek(&self) -> Option<&str> {
        self.tokens.get(self.pos).map(String::as_str)
    }

    fn or_expr(&mut self) -> std::result::Result<FeatureExpr, String> {
        let mut e = self.and_expr()?;
        while self.peek() == Some("||") {
            self.pos += 1;
            e = FeatureExpr::or(e, self.and_expr()?);
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> std::result::Result<FeatureExpr, String> {
        let mut e = self.unary()?;
        while self.peek() == Some("&&") {
            self.pos += 1;
            e = FeatureExpr::and(e, self.unary()?);
        }
        Ok(e)
    }

    fn unary(&mut self) -> std::result::Result<FeatureExpr, String> {
        let tok = self.peek().map(str::to_string);
        self.pos += 1;
        match tok.as_deref() {
            Some("!") => Ok(FeatureExpr::not(self.unary()?)),
            Some("(") => {
                let e = self.or_expr()?;
                if self.peek() != Some(")") {
                    return Err("expected `)` in feature expression".into());
                }
                self.pos += 1;
                Ok(e)
            }
            Some("true") => Ok(FeatureExpr::True),
            Some("false") => Ok(FeatureExpr::False),
            Some(t) if t.chars().all(|c| c.is_alphanumeric() || c == '_') => Ok(FeatureExpr::var(t)),
            Some(t) => Err(format!("unexpected `{t}` in feature expression")),
            None => Err("unexpected end of feature expression".into()),
        }
    }
}

/// All subsets of `features` satisfying `fm`, in a deterministic order.
pub fn valid_products(features: &BTreeSet<String>, fm: &FeatureExpr) -> Result<Vec<Product>> {
    if features.len() > FEATURE_CAP {
        return Err(ModelError::FeatureCapExceeded { features: features.len(), cap: FEATURE_CAP });
    }
    let fs: Vec<&String> = features.iter().collect();
    let mut out: Vec<Product> = (0u64..(1 << fs.len()))
        .map(|m| fs.iter().enumerate().filter(|(i, _)| m & (1 << i) != 0).map(|(_, f)| (*f).clone()).collect())
        .filter(|p| fm.eval(p))
        .collect();
    out.sort();
    Ok(out)
}

/// A component automaton with one feature guard per transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeaturedCA {
    ca: ComponentAutomaton,
    guards: Vec<FeatureExpr>,
}

impl FeaturedCA {
    pub fn new(ca: ComponentAutomaton, guards: Vec<FeatureExpr>) -> Result<Self> {
        if guards.len() != ca.transitions().len() {
            return Err(ModelError::MalformedLabel(format!(
                "{} guards for {} transitions",
                guards.len(),
                ca.transitions().len()
            )));
        }
        Ok(FeaturedCA { ca, guards })
    }

    /// Every transition guarded by `true`.
    pub fn unguarded(ca: ComponentAutomaton) -> Self {
        let guards = vec![FeatureExpr::True; ca.transitions().len()];
        FeaturedCA { ca, guards }
    }

    pub fn automaton(&self) -> &ComponentAutomaton {
        &self.ca
    }

    pub fn guards(&self) -> &[FeatureExpr] {
        &self.guards
    }

    pub fn guard(&self, transition: usize) -> &FeatureExpr {
        &self.guards[transition]
    }

    pub fn set_guard(&mut self, transition: usize, guard: FeatureExpr) {
        self.guards[transition] = guard;
    }
}

/// Keeps the transitions whose guard holds in `product`. States, initial
/// state and alphabets are unchanged.
pub fn project_fca(fca: &FeaturedCA, product: &Product) -> ComponentAutomaton {
    let mut ca = fca.ca.clone();
    ca.retain_transitions(|t| fca.guards[t].eval(product));
    ca
}

/// A named family of featured component automata over shared features and a
/// shared feature model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeaturedSystem {
    names: Vec<String>,
    components: Vec<FeaturedCA>,
    features: BTreeSet<String>,
    feature_model: FeatureExpr,
}

impl FeaturedSystem {
    pub fn new<I, S, F, T>(components: I, features: F, feature_model: FeatureExpr) -> Result<Self>
    where
        I: IntoIterator<Item = (S, FeaturedCA)>,
        S: Into<String>,
        F: IntoIterator<Item = T>,
        T: Into<String>,
    {
        let (names, components): (Vec<String>, Vec<FeaturedCA>) =
            components.into_iter().map(|(n, c)| (n.into(), c)).unzip();
        let features: BTreeSet<String> = features.into_iter().map(Into::into).collect();
        System::new(names.iter().cloned().zip(components.iter().map(|c| c.ca.clone())))?;
        let mentioned = components.iter().flat_map(|c| c.guards.iter()).chain([&feature_model]).flat_map(|g| g.vars());
        for v in mentioned {
            if !features.contains(&v) {
                return Err(ModelError::UnknownFeature(v));
            }
        }
        Ok(FeaturedSystem { names, components, features, feature_model })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn components(&self) -> &[FeaturedCA] {
        &self.components
    }

    pub fn component(&self, name: &str) -> Option<&FeaturedCA> {
        self.names.iter().position(|n| n == name).map(|i| &self.components[i])
    }

    pub fn features(&self) -> &BTreeSet<String> {
        &self.features
    }

    pub fn feature_model(&self) -> &FeatureExpr {
        &self.feature_model
    }

    /// The system with all guards dropped.
    pub fn underlying(&self) -> System {
        System::new(self.names.iter().cloned().zip(self.components.iter().map(|c| c.ca.clone())))
            .expect("validated on construction")
    }

    pub fn valid_products(&self) -> Result<Vec<Product>> {
        valid_products(&self.features, &self.feature_model)
    }

    pub fn check_product(&self, product: &Product) -> Result<()> {
        if let Some(f) = product.iter().find(|f| !self.features.contains(*f)) {
            return Err(ModelError::UnknownFeature(f.clone()));
        }
        if !self.feature_model.eval(product) {
            return Err(ModelError::InvalidProduct(show_product(product)));
        }
        Ok(())
    }
}

pub fn show_product(p: &Product) -> String {
    let v: Vec<&str> = p.iter().map(String::as_str).collect();
    format!("{{{}}}", v.join(","))
}

/// The system obtained by projecting every component to `product`.
pub fn project_fsys(fsys: &FeaturedSystem, product: &Product) -> Result<System> {
    fsys.check_product(product)?;
    System::new(fsys.names.iter().cloned().zip(fsys.components.iter().map(|c| project_fca(c, product))))
}

/// Ordered guarded synchronisation type rules with a per-action default.
/// For a product, the first rule whose guard holds decides; otherwise the
/// default applies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeaturedSTS {
    rules: Vec<(FeatureExpr, String, SyncType)>,
    defaults: BTreeMap<String, SyncType>,
}

impl FeaturedSTS {
    pub fn new() -> Self {
        Self::default()
    }

    /// The same types for every product.
    pub fn constant(spec: &SyncTypeSpec) -> Self {
        let mut fst = Self::new();
        for (a, st) in spec.iter() {
            fst.set_default(a, *st);
        }
        fst
    }

    pub fn set_default(&mut self, action: &str, sync: SyncType) {
        self.defaults.insert(action.to_string(), sync);
    }

    pub fn add_rule(&mut self, guard: FeatureExpr, action: &str, sync: SyncType) {
        self.rules.push((guard, action.to_string(), sync));
    }

    pub fn rules(&self) -> &[(FeatureExpr, String, SyncType)] {
        &self.rules
    }

    pub fn defaults(&self) -> &BTreeMap<String, SyncType> {
        &self.defaults
    }

    pub fn actions(&self) -> BTreeSet<String> {
        self.defaults.keys().cloned().chain(self.rules.iter().map(|r| r.1.clone())).collect()
    }

    fn rules_for<'a>(&'a self, action: &'a str) -> impl Iterator<Item = &'a (FeatureExpr, String, SyncType)> + 'a {
        self.rules.iter().filter(move |r| r.1 == action)
    }

    pub fn resolve(&self, product: &Product, action: &str) -> Option<SyncType> {
        self.rules_for(action)
            .find(|(g, _, _)| g.eval(product))
            .map(|r| r.2)
            .or_else(|| self.defaults.get(action).copied())
    }

    /// The plain specification for one product.
    pub fn project(&self, product: &Product) -> SyncTypeSpec {
        let mut spec = SyncTypeSpec::new();
        for a in self.actions() {
            if let Some(st) = self.resolve(product, &a) {
                spec.insert(&a, st);
            }
        }
        spec
    }

    /// Every communicating action needs a default.
    pub fn check_total(&self, communicating: &BTreeSet<String>) -> Result<()> {
        match communicating.iter().find(|a| !self.defaults.contains_key(*a)) {
            Some(a) => Err(ModelError::SpecIncomplete(a.clone())),
            None => Ok(()),
        }
    }

    /// The products in which an interaction on `action` with the given
    /// counts is admitted, as a formula. `None` when the action is not
    /// mentioned at all.
    pub fn admission(&self, action: &str, senders: usize, receivers: usize) -> Option<FeatureExpr> {
        let default = self.defaults.get(action);
        let mut rules = self.rules_for(action).peekable();
        if default.is_none() && rules.peek().is_none() {
            return None;
        }
        let mut admitted = FeatureExpr::False;
        let mut earlier_failed = FeatureExpr::True;
        for (g, _, st) in rules {
            let hit = FeatureExpr::conj(FeatureExpr::constant(st.admits(senders, receivers)), g.clone());
            admitted = FeatureExpr::disj(admitted, FeatureExpr::conj(hit, earlier_failed.clone()));
            earlier_failed = FeatureExpr::conj(earlier_failed, FeatureExpr::neg(g.clone()));
        }
        let fallback = default.is_some_and(|st| st.admits(senders, receivers));
        Some(FeatureExpr::disj(admitted, FeatureExpr::conj(FeatureExpr::constant(fallback), earlier_failed)))
    }
}

/// An LTS over system states and labels with a feature guard per transition.
#[derive(Debug, Clone)]
pub struct FeaturedLts {
    pub lts: SystemLts,
    pub guards: Vec<FeatureExpr>,
}

impl FeaturedLts {
    /// The reachable part of the transitions enabled in `product`.
    pub fn project(&self, product: &Product) -> SystemLts {
        let index: HashMap<(StateId, &SystemLabel, StateId), usize> =
            self.lts.transitions().iter().enumerate().map(|(t, (s, l, d))| ((*s, l, *d), t)).collect();
        self.lts.restrict(|s, l, d| self.guards[index[&(s, l, d)]].eval(product))
    }

    pub fn guard_of(&self, src: StateId, label: &SystemLabel, dst: StateId) -> Option<&FeatureExpr> {
        self.lts.transitions().iter().position(|(s, l, d)| *s == src && l == label && *d == dst).map(|t| &self.guards[t])
    }
}

fn guarded_exploration(
    fsys: &FeaturedSystem,
    admit: &dyn Fn(&str, usize, usize) -> bool,
    extra: impl Fn(&SystemLabel) -> FeatureExpr,
) -> FeaturedLts {
    let sys = fsys.underlying();
    let mut guards: Vec<FeatureExpr> = Vec::new();
    let lts = sys.explore(Exploration::Reachable, admit, |t, step| {
        let local = step
            .local
            .iter()
            .fold(FeatureExpr::True, |acc, &(ci, ti)| FeatureExpr::conj(acc, fsys.components[ci].guards[ti].clone()));
        let g = FeatureExpr::conj(local, extra(&step.label));
        if t == guards.len() {
            guards.push(g);
        } else {
            let prev = std::mem::replace(&mut guards[t], FeatureExpr::False);
            guards[t] = FeatureExpr::disj(prev, g);
        }
    });
    FeaturedLts { lts, guards }
}

/// The featured system LTS: each transition is guarded by the conjunction of
/// the guards of the local steps behind it.
pub fn induced_fts(fsys: &FeaturedSystem) -> FeaturedLts {
    guarded_exploration(fsys, &|_, _, _| true, |_| FeatureExpr::True)
}

/// A featured team automaton.
#[derive(Debug, Clone)]
pub struct FeaturedTeam {
    fsys: FeaturedSystem,
    fst: FeaturedSTS,
    fts: FeaturedLts,
}

impl FeaturedTeam {
    pub fn system(&self) -> &FeaturedSystem {
        &self.fsys
    }

    pub fn fst(&self) -> &FeaturedSTS {
        &self.fst
    }

    pub fn fts(&self) -> &FeaturedLts {
        &self.fts
    }

    /// Replaces one transition guard; used to probe the commutation check.
    pub fn set_guard(&mut self, transition: usize, guard: FeatureExpr) {
        self.fts.guards[transition] = guard;
    }

    pub fn project(&self, product: &Product) -> SystemLts {
        self.fts.project(product)
    }
}

/// Guards each system transition by its local guards and by the products
/// whose synchronisation type admits its sender and receiver counts.
pub fn feta(fsys: &FeaturedSystem, fst: &FeaturedSTS) -> Result<FeaturedTeam> {
    let classes = fsys.underlying().classify_actions();
    fst.check_total(&classes.communicating)?;
    let admit = |a: &str, o: usize, i: usize| fst.admission(a, o, i).is_none_or(|g| g != FeatureExpr::False);
    let extra = |l: &SystemLabel| match l.as_interaction() {
        Some(i) => fst.admission(&i.action, i.out.len(), i.inp.len()).unwrap_or(FeatureExpr::True),
        None => FeatureExpr::True,
    };
    let fts = guarded_exploration(fsys, &admit, extra);
    Ok(FeaturedTeam { fsys: fsys.clone(), fst: fst.clone(), fts })
}

/// Does projecting the featured team to `product` give the team of the
/// projected system under the projected specification?
pub fn project_feta_commutes(fsys: &FeaturedSystem, fst: &FeaturedSTS, product: &Product) -> Result<bool> {
    commutes_at(&feta(fsys, fst)?, product)
}

/// The commutation check against an already built featured team.
pub fn commutes_at(fteam: &FeaturedTeam, product: &Product) -> Result<bool> {
    let sys = project_fsys(&fteam.fsys, product)?;
    let plain = team(&sys, &fteam.fst.project(product))?;
    Ok(fteam.project(product).same_reachable_graph(plain.lts()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Property {
    Receptive,
    Responsive,
}

impl std::str::FromStr for Property {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "receptive" | "rcp" => Ok(Property::Receptive),
            "responsive" | "rsp" => Ok(Property::Responsive),
            other => Err(format!("unknown property `{other}`")),
        }
    }
}

/// Checks `property` on the team of every valid product.
pub fn productwise_check(
    fsys: &FeaturedSystem,
    fst: &FeaturedSTS,
    property: Property,
    mode: Mode,
    exec: Execution,
) -> Result<BTreeMap<Product, bool>> {
    let products = fsys.valid_products()?;
    let verdicts = exec.map(&products, |p| -> Result<bool> {
        let ta = team(&project_fsys(fsys, p)?, &fst.project(p))?;
        Ok(match property {
            Property::Receptive => is_receptive(&ta, mode, Execution::Sequential).holds,
            Property::Responsive => is_responsive(&ta, mode, Execution::Sequential).holds,
        })
    });
    products.into_iter().zip(verdicts).map(|(p, v)| v.map(|v| (p, v))).collect()
}
