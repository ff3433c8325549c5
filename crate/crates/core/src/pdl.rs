//! Test-free propositional dynamic logic over labelled transition systems.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::hash::Hash;

use crate::error::{ModelError, Result};
use crate::lts::{Lts, StateId};

/// Regular programs over labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Program<L> {
    Atom(L),
    /// Any label of the model's alphabet.
    Some,
    /// Any label of the model's alphabet except the listed ones.
    Complement(BTreeSet<L>),
    Seq(Box<Program<L>>, Box<Program<L>>),
    Choice(Box<Program<L>>, Box<Program<L>>),
    Star(Box<Program<L>>),
}

impl<L> Program<L> {
    pub fn seq(a: Program<L>, b: Program<L>) -> Self {
        Program::Seq(Box::new(a), Box::new(b))
    }

    pub fn choice(a: Program<L>, b: Program<L>) -> Self {
        Program::Choice(Box::new(a), Box::new(b))
    }

    pub fn star(a: Program<L>) -> Self {
        Program::Star(Box::new(a))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula<L> {
    True,
    False,
    Not(Box<Formula<L>>),
    And(Box<Formula<L>>, Box<Formula<L>>),
    Or(Box<Formula<L>>, Box<Formula<L>>),
    Box(Program<L>, Box<Formula<L>>),
    Diamond(Program<L>, Box<Formula<L>>),
}

#[allow(clippy::should_implement_trait)]
impl<L> Formula<L> {
    pub fn not(f: Formula<L>) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula<L>, b: Formula<L>) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula<L>, b: Formula<L>) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn boxed(p: Program<L>, f: Formula<L>) -> Self {
        Formula::Box(p, Box::new(f))
    }

    pub fn diamond(p: Program<L>, f: Formula<L>) -> Self {
        Formula::Diamond(p, Box::new(f))
    }
}

impl<L: fmt::Display> fmt::Display for Program<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

impl<L: fmt::Display> Program<L> {
    fn precedence(&self) -> u8 {
        match self {
            Program::Choice(..) => 0,
            Program::Seq(..) => 1,
            Program::Star(_) => 2,
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
            Program::Atom(l) => write!(f, "{l}"),
            Program::Some => f.write_str("some"),
            Program::Complement(s) => {
                f.write_str("-(")?;
                for (i, l) in s.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    write!(f, "{l}")?;
                }
                f.write_str(")")
            }
            Program::Seq(a, b) => {
                a.fmt_at(f, 1)?;
                f.write_str(" ; ")?;
                b.fmt_at(f, 2)
            }
            Program::Choice(a, b) => {
                a.fmt_at(f, 0)?;
                f.write_str(" + ")?;
                b.fmt_at(f, 1)
            }
            Program::Star(a) => {
                a.fmt_at(f, 3)?;
                f.write_str("*")
            }
        }
    }
}

impl<L: fmt::Display> fmt::Display for Formula<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

impl<L: fmt::Display> Formula<L> {
    fn precedence(&self) -> u8 {
        match self {
            Formula::Or(..) => 0,
            Formula::And(..) => 1,
            _ => 2,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            f.write_str("(")?;
            self.fmt_at(f, 0)?;
            return f.write_str(")");
        }
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Not(a) => {
                f.write_str("!")?;
                a.fmt_at(f, 2)
            }
            Formula::And(a, b) => {
                a.fmt_at(f, 1)?;
                f.write_str(" && ")?;
                b.fmt_at(f, 2)
            }
            Formula::Or(a, b) => {
                a.fmt_at(f, 0)?;
                f.write_str(" || ")?;
                b.fmt_at(f, 1)
            }
            Formula::Box(p, a) => {
                write!(f, "[{p}] ")?;
                a.fmt_at(f, 2)
            }
            Formula::Diamond(p, a) => {
                write!(f, "<{p}> ")?;
                a.fmt_at(f, 2)
            }
        }
    }
}

/// A nondeterministic automaton over labels without silent moves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nfa<L> {
    pub states: usize,
    pub initial: usize,
    pub accepting: BTreeSet<usize>,
    pub transitions: Vec<(usize, L, usize)>,
}

impl<L: Clone + Ord> Nfa<L> {
    pub fn accepts(&self, word: &[L]) -> bool {
        let mut cur = BTreeSet::from([self.initial]);
        for a in word {
            cur = self.transitions.iter().filter(|(s, l, _)| cur.contains(s) && l == a).map(|t| t.2).collect();
        }
        cur.iter().any(|s| self.accepting.contains(s))
    }
}

struct Glushkov<L> {
    sets: Vec<BTreeSet<L>>,
    follow: Vec<BTreeSet<usize>>,
}

struct Linear {
    nullable: bool,
    first: BTreeSet<usize>,
    last: BTreeSet<usize>,
}

impl<L: Clone + Ord + fmt::Display> Glushkov<L> {
    fn position(&mut self, set: BTreeSet<L>) -> Linear {
        let i = self.sets.len();
        self.sets.push(set);
        self.follow.push(BTreeSet::new());
        Linear { nullable: false, first: BTreeSet::from([i]), last: BTreeSet::from([i]) }
    }

    fn build(&mut self, p: &Program<L>, alphabet: &BTreeSet<L>) -> Result<Linear> {
        let known = |l: &L| {
            if alphabet.contains(l) {
                Ok(())
            } else {
                Err(ModelError::UnknownAtom(l.to_string()))
            }
        };
        Ok(match p {
            Program::Atom(l) => {
                known(l)?;
                self.position(BTreeSet::from([l.clone()]))
            }
            Program::Some => self.position(alphabet.clone()),
            Program::Complement(s) => {
                for l in s {
                    known(l)?;
                }
                self.position(alphabet.difference(s).cloned().collect())
            }
            Program::Seq(a, b) => {
                let a = self.build(a, alphabet)?;
                let b = self.build(b, alphabet)?;
                for &i in &a.last {
                    self.follow[i].extend(&b.first);
                }
                let first = if a.nullable { a.first.union(&b.first).copied().collect() } else { a.first };
                let last = if b.nullable { a.last.union(&b.last).copied().collect() } else { b.last };
                Linear { nullable: a.nullable && b.nullable, first, last }
            }
            Program::Choice(a, b) => {
                let a = self.build(a, alphabet)?;
                let b = self.build(b, alphabet)?;
                Linear {
                    nullable: a.nullable || b.nullable,
                    first: a.first.union(&b.first).copied().collect(),
                    last: a.last.union(&b.last).copied().collect(),
                }
            }
            Program::Star(a) => {
                let a = self.build(a, alphabet)?;
                for &i in &a.last {
                    self.follow[i].extend(&a.first);
                }
                Linear { nullable: true, first: a.first, last: a.last }
            }
        })
    }
}

/// Compiles `p` to an automaton over `alphabet`, reduced by merging
/// forward-bisimilar states.
pub fn compile_program<L>(p: &Program<L>, alphabet: &BTreeSet<L>) -> Result<Nfa<L>>
where
    L: Clone + Ord + Hash + fmt::Display,
{
    let mut g = Glushkov { sets: Vec::new(), follow: Vec::new() };
    let lin = g.build(p, alphabet)?;
    // state 0 is initial, position i is state i + 1
    let mut transitions = Vec::new();
    for &j in &lin.first {
        for a in &g.sets[j] {
            transitions.push((0, a.clone(), j + 1));
        }
    }
    for (i, fs) in g.follow.iter().enumerate() {
        for &j in fs {
            for a in &g.sets[j] {
                transitions.push((i + 1, a.clone(), j + 1));
            }
        }
    }
    let mut accepting: BTreeSet<usize> = lin.last.iter().map(|i| i + 1).collect();
    if lin.nullable {
        accepting.insert(0);
    }
    Ok(reduce(Nfa { states: g.sets.len() + 1, initial: 0, accepting, transitions }))
}

fn reduce<L: Clone + Ord + Hash>(nfa: Nfa<L>) -> Nfa<L> {
    // reachable states only
    let mut seen = vec![false; nfa.states];
    seen[nfa.initial] = true;
    let mut queue = VecDeque::from([nfa.initial]);
    while let Some(s) = queue.pop_front() {
        for (_, _, d) in nfa.transitions.iter().filter(|t| t.0 == s) {
            if !seen[*d] {
                seen[*d] = true;
                queue.push_back(*d);
            }
        }
    }
    let mut block: Vec<usize> = (0..nfa.states).map(|s| usize::from(nfa.accepting.contains(&s))).collect();
    let mut count = 0;
    loop {
        let mut sigs: HashMap<Signature<'_, L>, usize> = HashMap::new();
        let mut next = vec![usize::MAX; nfa.states];
        for s in (0..nfa.states).filter(|&s| seen[s]) {
            let sig: BTreeSet<(&L, usize)> =
                nfa.transitions.iter().filter(|t| t.0 == s).map(|(_, l, d)| (l, block[*d])).collect();
            let len = sigs.len();
            next[s] = *sigs.entry((block[s], sig)).or_insert(len);
        }
        let new_count = sigs.len();
        block = next;
        if new_count == count {
            break;
        }
        count = new_count;
    }
    // renumber blocks so the initial block is 0 and numbering follows state order
    let mut renum: HashMap<usize, usize> = HashMap::new();
    renum.insert(block[nfa.initial], 0);
    for s in (0..nfa.states).filter(|&s| seen[s]) {
        let len = renum.len();
        renum.entry(block[s]).or_insert(len);
    }
    let transitions: BTreeSet<(usize, L, usize)> = nfa
        .transitions
        .iter()
        .filter(|t| seen[t.0])
        .map(|(s, l, d)| (renum[&block[*s]], l.clone(), renum[&block[*d]]))
        .collect();
    Nfa {
        states: renum.len(),
        initial: 0,
        accepting: nfa.accepting.iter().filter(|s| seen[**s]).map(|s| renum[&block[*s]]).collect(),
        transitions: transitions.into_iter().collect(),
    }
}

/// Result of checking a formula on a model.
/// A node's block together with its outgoing (label, block) pairs.
type Signature<'a, L> = (usize, BTreeSet<(&'a L, usize)>);

/// Predecessor of a product node on a shortest path.
type Back<L> = Option<((StateId, usize), L)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PdlResult<L> {
    /// Verdict at the initial state.
    pub holds: bool,
    /// Every state satisfying the formula.
    pub satisfying: BTreeSet<StateId>,
    /// For a top-level diamond that holds, the shortest witness path; for a
    /// top-level box that fails, the shortest path to a violating state.
    pub path: Option<Vec<L>>,
}

struct Checker<'a, S, L> {
    m: &'a Lts<S, L>,
    alphabet: &'a BTreeSet<L>,
}

impl<S, L> Checker<'_, S, L>
where
    S: Clone + Eq + Hash,
    L: Clone + Ord + Hash + fmt::Display,
{
    fn all(&self) -> BTreeSet<StateId> {
        (0..self.m.num_states()).collect()
    }

    fn eval(&self, f: &Formula<L>) -> Result<BTreeSet<StateId>> {
        Ok(match f {
            Formula::True => self.all(),
            Formula::False => BTreeSet::new(),
            Formula::Not(a) => self.all().difference(&self.eval(a)?).copied().collect(),
            Formula::And(a, b) => self.eval(a)?.intersection(&self.eval(b)?).copied().collect(),
            Formula::Or(a, b) => self.eval(a)?.union(&self.eval(b)?).copied().collect(),
            Formula::Diamond(p, a) => {
                let target = self.eval(a)?;
                self.diamond(&compile_program(p, self.alphabet)?, &target)
            }
            Formula::Box(p, a) => {
                let bad: BTreeSet<StateId> = self.all().difference(&self.eval(a)?).copied().collect();
                let reach = self.diamond(&compile_program(p, self.alphabet)?, &bad);
                self.all().difference(&reach).copied().collect()
            }
        })
    }

    /// States with a program path into `target`, by backward search on the
    /// product of model and automaton.
    fn diamond(&self, nfa: &Nfa<L>, target: &BTreeSet<StateId>) -> BTreeSet<StateId> {
        let mut back: HashMap<(StateId, usize), Vec<(StateId, usize)>> = HashMap::new();
        for (s, l, d) in self.m.transitions() {
            for (q, a, q2) in &nfa.transitions {
                if a == l {
                    back.entry((*d, *q2)).or_default().push((*s, *q));
                }
            }
        }
        let mut seen: BTreeSet<(StateId, usize)> = BTreeSet::new();
        let mut queue: VecDeque<(StateId, usize)> = VecDeque::new();
        for &s in target {
            for &q in &nfa.accepting {
                if seen.insert((s, q)) {
                    queue.push_back((s, q));
                }
            }
        }
        while let Some(x) = queue.pop_front() {
            for &y in back.get(&x).into_iter().flatten() {
                if seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        seen.into_iter().filter(|&(_, q)| q == nfa.initial).map(|(s, _)| s).collect()
    }

    /// Shortest (then label-least) program path from the initial state into
    /// `target`.
    fn path(&self, nfa: &Nfa<L>, target: &BTreeSet<StateId>) -> Option<Vec<L>> {
        let start = (self.m.initial(), nfa.initial);
        let mut parent: HashMap<(StateId, usize), Back<L>> = HashMap::from([(start, None)]);
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            if target.contains(&x.0) && nfa.accepting.contains(&x.1) {
                let mut out = Vec::new();
                let mut cur = x;
                while let Some(Some((p, l))) = parent.get(&cur) {
                    out.push(l.clone());
                    cur = *p;
                }
                out.reverse();
                return Some(out);
            }
            let mut next: Vec<(L, (StateId, usize))> = Vec::new();
            for (l, d) in self.m.successors(x.0) {
                for (q, a, q2) in &nfa.transitions {
                    if *q == x.1 && a == l {
                        next.push((l.clone(), (d, *q2)));
                    }
                }
            }
            next.sort();
            for (l, y) in next {
                if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(y) {
                    e.insert(Some((x, l)));
                    queue.push_back(y);
                }
            }
        }
        None
    }
}

/// Evaluates `phi` on every state of `m`. Programs range over the model's
/// declared label set.
pub fn check<S, L>(m: &Lts<S, L>, phi: &Formula<L>) -> Result<PdlResult<L>>
where
    S: Clone + Eq + Hash,
    L: Clone + Ord + Hash + fmt::Display,
{
    let c = Checker { m, alphabet: m.labels() };
    let satisfying = c.eval(phi)?;
    let holds = satisfying.contains(&m.initial());
    let path = match phi {
        Formula::Diamond(p, a) if holds => c.path(&compile_program(p, c.alphabet)?, &c.eval(a)?),
        Formula::Box(p, a) if !holds => {
            let bad = c.all().difference(&c.eval(a)?).copied().collect();
            c.path(&compile_program(p, c.alphabet)?, &bad)
        }
        _ => None,
    };
    Ok(PdlResult { holds, satisfying, path })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alphabet(xs: &[char]) -> BTreeSet<char> {
        xs.iter().copied().collect()
    }

    #[test]
    fn atom_automaton() {
        let n = compile_program(&Program::Atom('a'), &alphabet(&['a', 'b'])).unwrap();
        assert_eq!(n.states, 2);
        assert!(n.accepts(&['a']) && !n.accepts(&[]) && !n.accepts(&['b']));
    }

    #[test]
    fn star_some_is_one_state() {
        let n = compile_program(&Program::star(Program::Some), &alphabet(&['a', 'b', 'c'])).unwrap();
        assert_eq!(n.states, 1);
        assert_eq!(n.transitions.len(), 3);
        assert!(n.accepts(&[]) && n.accepts(&['c', 'a']));
    }

    #[test]
    fn complement_automaton() {
        let n = compile_program(&Program::Complement(alphabet(&['a'])), &alphabet(&['a', 'b'])).unwrap();
        assert!(n.accepts(&['b']) && !n.accepts(&['a']) && !n.accepts(&['b', 'b']));
    }

    #[test]
    fn unknown_atom() {
        assert!(matches!(compile_program(&Program::Atom('z'), &alphabet(&['a'])), Err(ModelError::UnknownAtom(_))));
    }

    #[test]
    fn seq_choice_language() {
        // (a + b) ; c*
        let p = Program::seq(Program::choice(Program::Atom('a'), Program::Atom('b')), Program::star(Program::Atom('c')));
        let n = compile_program(&p, &alphabet(&['a', 'b', 'c'])).unwrap();
        assert!(n.accepts(&['a']) && n.accepts(&['b', 'c', 'c']) && !n.accepts(&['c']) && !n.accepts(&['a', 'b']));
    }

    fn chain() -> Lts<u8, char> {
        let mut l = Lts::new(0);
        let s1 = l.add_state(1);
        let s2 = l.add_state(2);
        l.add_transition(0, 'a', s1);
        l.add_transition(s1, 'b', s2);
        l
    }

    #[test]
    fn diamond_witness_and_box_counterexample() {
        let m = chain();
        let f = Formula::diamond(Program::star(Program::Some), Formula::boxed(Program::Some, Formula::False));
        let r = check(&m, &f).unwrap();
        assert!(r.holds);
        assert_eq!(r.path, Some(vec!['a', 'b']));
        let g = Formula::boxed(Program::seq(Program::Atom('a'), Program::Atom('b')), Formula::False);
        let r = check(&m, &g).unwrap();
        assert!(!r.holds);
        assert_eq!(r.path, Some(vec!['a', 'b']));
        let t = check(&m, &Formula::boxed(Program::star(Program::Some), Formula::True)).unwrap();
        assert!(t.holds && t.satisfying.len() == 3);
    }
}
