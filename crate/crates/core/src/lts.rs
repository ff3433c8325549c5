//! Labelled transition systems with interned states.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::hash::Hash;

/// Index of a state inside an [`Lts`].
pub type StateId = usize;

/// A finite labelled transition system.
///
/// States carry a payload `S` (a name, a tuple of local states, ...) and are
/// interned to dense integer ids. The label set is kept explicitly because it
/// may be larger than the set of labels that occur on transitions.
#[derive(Debug, Clone)]
pub struct Lts<S, L> {
    states: Vec<S>,
    index: HashMap<S, StateId>,
    initial: StateId,
    labels: BTreeSet<L>,
    transitions: Vec<(StateId, L, StateId)>,
    seen: HashMap<(StateId, L, StateId), usize>,
    outgoing: Vec<Vec<usize>>,
}

impl<S, L> Lts<S, L>
where
    S: Clone + Eq + Hash,
    L: Clone + Ord + Hash,
{
    pub fn new(initial: S) -> Self {
        let mut lts = Lts {
            states: Vec::new(),
            index: HashMap::new(),
            initial: 0,
            labels: BTreeSet::new(),
            transitions: Vec::new(),
            seen: HashMap::new(),
            outgoing: Vec::new(),
        };
        lts.initial = lts.add_state(initial);
        lts
    }

    /// Interns `state`, returning its id. Existing states keep their id.
    pub fn add_state(&mut self, state: S) -> StateId {
        if let Some(&id) = self.index.get(&state) {
            return id;
        }
        let id = self.states.len();
        self.index.insert(state.clone(), id);
        self.states.push(state);
        self.outgoing.push(Vec::new());
        id
    }

    pub fn add_label(&mut self, label: L) {
        self.labels.insert(label);
    }

    /// Adds a transition between two interned states. Duplicates are ignored;
    /// the return value is the index of the (possibly pre-existing) transition.
    pub fn add_transition(&mut self, src: StateId, label: L, dst: StateId) -> usize {
        assert!(src < self.states.len() && dst < self.states.len(), "unknown state id");
        let key = (src, label.clone(), dst);
        if let Some(&t) = self.seen.get(&key) {
            return t;
        }
        let t = self.transitions.len();
        self.labels.insert(label.clone());
        self.transitions.push((src, label, dst));
        self.seen.insert(key, t);
        self.outgoing[src].push(t);
        t
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, id: StateId) -> &S {
        &self.states[id]
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn state_id(&self, state: &S) -> Option<StateId> {
        self.index.get(state).copied()
    }

    pub fn labels(&self) -> &BTreeSet<L> {
        &self.labels
    }

    pub fn transitions(&self) -> &[(StateId, L, StateId)] {
        &self.transitions
    }

    pub fn has_transition(&self, src: StateId, label: &L, dst: StateId) -> bool {
        self.seen.contains_key(&(src, label.clone(), dst))
    }

    /// Outgoing transitions of `state` as `(label, target)` pairs.
    pub fn successors(&self, state: StateId) -> impl Iterator<Item = (&L, StateId)> + '_ {
        self.outgoing[state].iter().map(move |&t| {
            let (_, l, d) = &self.transitions[t];
            (l, *d)
        })
    }

    /// Outgoing transitions sorted by label then target id.
    pub fn sorted_successors(&self, state: StateId) -> Vec<(&L, StateId)> {
        let mut v: Vec<_> = self.successors(state).collect();
        v.sort();
        v
    }

    /// The least set of states containing the initial state and closed under
    /// transitions.
    pub fn reachable(&self) -> BTreeSet<StateId> {
        self.reachable_from(self.initial)
    }

    pub fn reachable_from(&self, start: StateId) -> BTreeSet<StateId> {
        let mut seen = vec![false; self.states.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(s) = queue.pop_front() {
            for (_, d) in self.successors(s) {
                if !seen[d] {
                    seen[d] = true;
                    queue.push_back(d);
                }
            }
        }
        (0..self.states.len()).filter(|&s| seen[s]).collect()
    }

    /// The sub-LTS induced by the reachable states. The label set is kept.
    pub fn reachable_part(&self) -> Lts<S, L> {
        self.restrict(|_, _, _| true)
    }

    /// Keeps only transitions accepted by `keep` and then restricts to the
    /// states reachable through them.
    pub fn restrict(&self, mut keep: impl FnMut(StateId, &L, StateId) -> bool) -> Lts<S, L> {
        let mut out = Lts::new(self.states[self.initial].clone());
        out.labels = self.labels.clone();
        let mut queue = VecDeque::from([self.initial]);
        let mut seen = vec![false; self.states.len()];
        seen[self.initial] = true;
        while let Some(s) = queue.pop_front() {
            let src = out.add_state(self.states[s].clone());
            for &t in &self.outgoing[s] {
                let (_, l, d) = &self.transitions[t];
                if !keep(s, l, *d) {
                    continue;
                }
                let dst = out.add_state(self.states[*d].clone());
                out.add_transition(src, l.clone(), dst);
                if !seen[*d] {
                    seen[*d] = true;
                    queue.push_back(*d);
                }
            }
        }
        out
    }

    /// Rewrites every label; labels mapping to `None` drop their transitions.
    pub fn filter_map_labels<M>(&self, mut f: impl FnMut(&L) -> Option<M>) -> Lts<S, M>
    where
        M: Clone + Ord + Hash,
    {
        let mut out = Lts::new(self.states[self.initial].clone());
        for s in &self.states {
            out.add_state(s.clone());
        }
        for l in &self.labels {
            if let Some(m) = f(l) {
                out.add_label(m);
            }
        }
        for (s, l, d) in &self.transitions {
            if let Some(m) = f(l) {
                out.add_transition(*s, m, *d);
            }
        }
        out
    }

    /// Rewrites state payloads. `f` must be injective.
    pub fn map_states<T>(&self, mut f: impl FnMut(&S) -> T) -> Lts<T, L>
    where
        T: Clone + Eq + Hash,
    {
        let mut out = Lts::new(f(&self.states[self.initial]));
        let ids: Vec<StateId> = self.states.iter().map(|s| out.add_state(f(s))).collect();
        assert_eq!(out.num_states(), self.num_states(), "state mapping is not injective");
        out.labels = self.labels.clone();
        for (s, l, d) in &self.transitions {
            out.add_transition(ids[*s], l.clone(), ids[*d]);
        }
        out
    }

    /// Transition triples over state payloads, for structural comparison.
    pub fn edge_set(&self) -> BTreeSet<(S, L, S)>
    where
        S: Ord,
    {
        self.transitions
            .iter()
            .map(|(s, l, d)| (self.states[*s].clone(), l.clone(), self.states[*d].clone()))
            .collect()
    }

    /// Equality of the reachable parts as labelled graphs with fixed state
    /// payloads: same initial state, same reachable states, same transitions.
    pub fn same_reachable_graph(&self, other: &Lts<S, L>) -> bool
    where
        S: Ord,
    {
        let a = self.reachable_part();
        let b = other.reachable_part();
        a.states[a.initial] == b.states[b.initial]
            && a.states.iter().collect::<BTreeSet<_>>() == b.states.iter().collect::<BTreeSet<_>>()
            && a.edge_set() == b.edge_set()
    }
}
