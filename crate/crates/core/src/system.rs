//! Component automata, systems and the system LTS they induce.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::lts::{Lts, StateId};

/// Role of an action in a component's alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Input,
    Output,
    Internal,
}

/// A finite LTS whose actions are split into inputs, outputs and internals.
///
/// Local states are named; transitions refer to states by index into
/// [`ComponentAutomaton::states`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentAutomaton {
    states: Vec<String>,
    initial: usize,
    inputs: BTreeSet<String>,
    outputs: BTreeSet<String>,
    internals: BTreeSet<String>,
    transitions: Vec<(usize, String, usize)>,
}

impl ComponentAutomaton {
    /// Starts a component whose initial state is `initial`.
    pub fn new(initial: impl Into<String>) -> Self {
        ComponentAutomaton {
            states: vec![initial.into()],
            initial: 0,
            inputs: BTreeSet::new(),
            outputs: BTreeSet::new(),
            internals: BTreeSet::new(),
            transitions: Vec::new(),
        }
    }

    pub fn with_inputs<I, T>(mut self, actions: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        self.inputs.extend(actions.into_iter().map(Into::into));
        self
    }

    pub fn with_outputs<I, T>(mut self, actions: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        self.outputs.extend(actions.into_iter().map(Into::into));
        self
    }

    pub fn with_internals<I, T>(mut self, actions: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        self.internals.extend(actions.into_iter().map(Into::into));
        self
    }

    /// Declares a state without transitions (states are otherwise declared
    /// implicitly by the transitions that mention them).
    pub fn with_state(mut self, state: impl Into<String>) -> Self {
        self.intern(state.into());
        self
    }

    /// Adds `from --action--> to`, declaring both states if needed.
    pub fn with_edge(mut self, from: &str, action: &str, to: &str) -> Self {
        self.add_edge(from, action, to);
        self
    }

    pub fn add_edge(&mut self, from: &str, action: &str, to: &str) -> usize {
        let s = self.intern(from.to_string());
        let d = self.intern(to.to_string());
        self.transitions.push((s, action.to_string(), d));
        self.transitions.len() - 1
    }

    fn intern(&mut self, state: String) -> usize {
        match self.states.iter().position(|s| *s == state) {
            Some(i) => i,
            None => {
                self.states.push(state);
                self.states.len() - 1
            }
        }
    }

    /// Builds a component from raw parts, checking its invariants.
    pub fn from_parts(
        states: Vec<String>,
        initial: usize,
        inputs: BTreeSet<String>,
        outputs: BTreeSet<String>,
        internals: BTreeSet<String>,
        transitions: Vec<(usize, String, usize)>,
    ) -> Result<Self> {
        let ca = ComponentAutomaton { states, initial, inputs, outputs, internals, transitions };
        ca.validate("component")?;
        Ok(ca)
    }

    /// Checks alphabet disjointness, transition labels and state indices.
    pub fn validate(&self, name: &str) -> Result<()> {
        let overlap = self
            .inputs
            .intersection(&self.outputs)
            .chain(self.inputs.intersection(&self.internals))
            .chain(self.outputs.intersection(&self.internals))
            .next();
        if let Some(a) = overlap {
            return Err(ModelError::OverlappingAlphabet { component: name.into(), action: a.clone() });
        }
        let mut seen = HashSet::new();
        for s in &self.states {
            if !seen.insert(s) {
                return Err(ModelError::DuplicateState { component: name.into(), state: s.clone() });
            }
        }
        if self.initial >= self.states.len() {
            return Err(ModelError::UnknownState { component: name.into(), state: self.initial.to_string() });
        }
        for (s, a, d) in &self.transitions {
            if *s >= self.states.len() || *d >= self.states.len() {
                return Err(ModelError::UnknownState { component: name.into(), state: format!("#{}", s.max(d)) });
            }
            if self.role(a).is_none() {
                return Err(ModelError::UndeclaredAction { component: name.into(), action: a.clone() });
            }
        }
        Ok(())
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn inputs(&self) -> &BTreeSet<String> {
        &self.inputs
    }

    pub fn outputs(&self) -> &BTreeSet<String> {
        &self.outputs
    }

    pub fn internals(&self) -> &BTreeSet<String> {
        &self.internals
    }

    pub fn transitions(&self) -> &[(usize, String, usize)] {
        &self.transitions
    }

    /// All declared actions.
    pub fn alphabet(&self) -> BTreeSet<String> {
        self.inputs.iter().chain(&self.outputs).chain(&self.internals).cloned().collect()
    }

    pub fn role(&self, action: &str) -> Option<Role> {
        if self.inputs.contains(action) {
            Some(Role::Input)
        } else if self.outputs.contains(action) {
            Some(Role::Output)
        } else if self.internals.contains(action) {
            Some(Role::Internal)
        } else {
            None
        }
    }

    /// Indices of transitions leaving `state` labelled `action`.
    pub fn edges_from<'a>(&'a self, state: usize, action: &'a str) -> impl Iterator<Item = usize> + 'a {
        self.transitions
            .iter()
            .enumerate()
            .filter(move |(_, (s, a, _))| *s == state && a == action)
            .map(|(i, _)| i)
    }

    pub fn enables(&self, state: usize, action: &str) -> bool {
        self.edges_from(state, action).next().is_some()
    }

    /// The component as a plain LTS over state names and actions.
    pub fn to_lts(&self) -> Lts<String, String> {
        let mut l = Lts::new(self.states[self.initial].clone());
        for s in &self.states {
            l.add_state(s.clone());
        }
        for a in self.alphabet() {
            l.add_label(a);
        }
        for (s, a, d) in &self.transitions {
            let s = l.state_id(&self.states[*s]).unwrap();
            let d = l.state_id(&self.states[*d]).unwrap();
            l.add_transition(s, a.clone(), d);
        }
        l
    }

    /// Same states, initial state, alphabet and transition set (transition
    /// order ignored).
    pub fn same_as(&self, other: &ComponentAutomaton) -> bool {
        let edges = |c: &ComponentAutomaton| -> BTreeSet<(String, String, String)> {
            c.transitions
                .iter()
                .map(|(s, a, d)| (c.states[*s].clone(), a.clone(), c.states[*d].clone()))
                .collect()
        };
        self.states.iter().collect::<BTreeSet<_>>() == other.states.iter().collect::<BTreeSet<_>>()
            && self.states[self.initial] == other.states[other.initial]
            && self.inputs == other.inputs
            && self.outputs == other.outputs
            && self.internals == other.internals
            && edges(self) == edges(other)
    }

    pub(crate) fn retain_transitions(&mut self, mut keep: impl FnMut(usize) -> bool) {
        let mut i = 0;
        self.transitions.retain(|_| {
            let k = keep(i);
            i += 1;
            k
        });
    }
}

/// A multi-party interaction `(out, action, in)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Interaction {
    pub out: BTreeSet<String>,
    pub action: String,
    #[serde(rename = "in")]
    pub inp: BTreeSet<String>,
}

impl Interaction {
    pub fn new<I, J, S, T>(out: I, action: &str, inp: J) -> Self
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: Into<String>,
        T: Into<String>,
    {
        Interaction {
            out: out.into_iter().map(Into::into).collect(),
            action: action.to_string(),
            inp: inp.into_iter().map(Into::into).collect(),
        }
    }

    pub fn participants(&self) -> BTreeSet<&String> {
        self.out.iter().chain(&self.inp).collect()
    }

    pub fn involves(&self, name: &str) -> bool {
        self.out.contains(name) || self.inp.contains(name)
    }
}

fn write_set(f: &mut fmt::Formatter<'_>, set: &BTreeSet<String>) -> fmt::Result {
    f.write_str("{")?;
    for (i, n) in set.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        f.write_str(n)?;
    }
    f.write_str("}")
}

impl fmt::Display for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_set(f, &self.out)?;
        f.write_str("->")?;
        write_set(f, &self.inp)?;
        write!(f, ":{}", self.action)
    }
}

/// A label of the system LTS: an interaction or an internal step.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SystemLabel {
    Interaction(Interaction),
    Internal { name: String, action: String },
}

impl SystemLabel {
    pub fn interaction<I, J, S, T>(out: I, action: &str, inp: J) -> Self
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: Into<String>,
        T: Into<String>,
    {
        SystemLabel::Interaction(Interaction::new(out, action, inp))
    }

    pub fn internal(name: &str, action: &str) -> Self {
        SystemLabel::Internal { name: name.into(), action: action.into() }
    }

    pub fn action(&self) -> &str {
        match self {
            SystemLabel::Interaction(i) => &i.action,
            SystemLabel::Internal { action, .. } => action,
        }
    }

    pub fn involves(&self, name: &str) -> bool {
        match self {
            SystemLabel::Interaction(i) => i.involves(name),
            SystemLabel::Internal { name: n, .. } => n == name,
        }
    }

    pub fn participants(&self) -> BTreeSet<&String> {
        match self {
            SystemLabel::Interaction(i) => i.participants(),
            SystemLabel::Internal { name, .. } => BTreeSet::from([name]),
        }
    }

    pub fn as_interaction(&self) -> Option<&Interaction> {
        match self {
            SystemLabel::Interaction(i) => Some(i),
            SystemLabel::Internal { .. } => None,
        }
    }
}

impl fmt::Display for SystemLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemLabel::Interaction(i) => i.fmt(f),
            SystemLabel::Internal { name, action } => write!(f, "{name}:{action}"),
        }
    }
}

/// A global state: one local state index per component, in system order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SystemState(pub Vec<usize>);

/// The LTS of a system or team automaton.
pub type SystemLts = Lts<SystemState, SystemLabel>;

/// The communicating / open / internal split of a system's actions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActionClasses {
    pub communicating: BTreeSet<String>,
    pub open: BTreeSet<String>,
    pub internal: BTreeSet<String>,
}

/// Whether the product construction expands only reachable states or every
/// combination of local states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exploration {
    Reachable,
    Full,
}

/// One system step out of a state, together with the local transitions
/// (component index, transition index) that realise it.
#[derive(Debug, Clone)]
pub struct Step {
    pub label: SystemLabel,
    pub target: SystemState,
    pub local: Vec<(usize, usize)>,
}

/// A named, ordered family of component automata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct System {
    names: Vec<String>,
    components: Vec<ComponentAutomaton>,
}

impl System {
    pub fn new<I, S>(components: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, ComponentAutomaton)>,
        S: Into<String>,
    {
        let (names, components): (Vec<String>, Vec<_>) =
            components.into_iter().map(|(n, c)| (n.into(), c)).unzip();
        if names.is_empty() {
            return Err(ModelError::EmptySystem);
        }
        let mut seen = HashSet::new();
        for (n, c) in names.iter().zip(&components) {
            if !seen.insert(n) {
                return Err(ModelError::DuplicateComponent(n.clone()));
            }
            c.validate(n)?;
        }
        Ok(System { names, components })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn components(&self) -> &[ComponentAutomaton] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn component(&self, name: &str) -> Option<&ComponentAutomaton> {
        self.index_of(name).map(|i| &self.components[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &ComponentAutomaton)> {
        self.names.iter().zip(&self.components)
    }

    pub fn initial_state(&self) -> SystemState {
        SystemState(self.components.iter().map(|c| c.initial()).collect())
    }

    /// Builds a system state from local state names, in system order.
    pub fn state(&self, local: &[&str]) -> Option<SystemState> {
        if local.len() != self.len() {
            return None;
        }
        local
            .iter()
            .zip(&self.components)
            .map(|(s, c)| c.state_index(s))
            .collect::<Option<Vec<_>>>()
            .map(SystemState)
    }

    /// Renders a state as `(q1,q2,...)` using local state names.
    pub fn show_state(&self, q: &SystemState) -> String {
        let parts: Vec<&str> = q.0.iter().zip(&self.components).map(|(&i, c)| c.states()[i].as_str()).collect();
        format!("({})", parts.join(","))
    }

    /// Every action of every component.
    pub fn actions(&self) -> BTreeSet<String> {
        self.components.iter().flat_map(|c| c.alphabet()).collect()
    }

    pub fn classify_actions(&self) -> ActionClasses {
        let inputs: BTreeSet<&String> = self.components.iter().flat_map(|c| c.inputs()).collect();
        let outputs: BTreeSet<&String> = self.components.iter().flat_map(|c| c.outputs()).collect();
        let internal: BTreeSet<String> = self.components.iter().flat_map(|c| c.internals().iter().cloned()).collect();
        let communicating: BTreeSet<String> = inputs.intersection(&outputs).map(|a| (*a).clone()).collect();
        let open = self
            .actions()
            .into_iter()
            .filter(|a| !communicating.contains(a) && !internal.contains(a))
            .collect();
        ActionClasses { communicating, open, internal }
    }

    /// Names of components having `action` in the given role.
    pub fn owners(&self, action: &str, role: Role) -> Vec<String> {
        self.iter().filter(|(_, c)| c.role(action) == Some(role)).map(|(n, _)| n.clone()).collect()
    }

    /// Checks a label against the alphabets of this system.
    pub fn is_label(&self, label: &SystemLabel) -> bool {
        match label {
            SystemLabel::Interaction(i) => {
                !(i.out.is_empty() && i.inp.is_empty())
                    && i.out.iter().all(|n| self.component(n).is_some_and(|c| c.outputs().contains(&i.action)))
                    && i.inp.iter().all(|n| self.component(n).is_some_and(|c| c.inputs().contains(&i.action)))
            }
            SystemLabel::Internal { name, action } => {
                self.component(name).is_some_and(|c| c.internals().contains(action))
            }
        }
    }

    /// All system labels: interactions over the ownership of each action plus
    /// the internal labels. Depends only on names and alphabets.
    pub fn system_labels(&self) -> BTreeSet<SystemLabel> {
        let mut labels = BTreeSet::new();
        let externals: BTreeSet<String> =
            self.components.iter().flat_map(|c| c.inputs().iter().chain(c.outputs()).cloned()).collect();
        for a in &externals {
            let senders = self.owners(a, Role::Output);
            let receivers = self.owners(a, Role::Input);
            for out in subsets(&senders) {
                for inp in subsets(&receivers) {
                    if out.is_empty() && inp.is_empty() {
                        continue;
                    }
                    labels.insert(SystemLabel::interaction(out.clone(), a, inp));
                }
            }
        }
        for (n, c) in self.iter() {
            for a in c.internals() {
                labels.insert(SystemLabel::internal(n, a));
            }
        }
        labels
    }

    /// Steps enabled at `q`. Interactions are generated only for groups whose
    /// sizes pass `admit(action, |out|, |in|)`; internal steps are always
    /// generated.
    pub fn steps(&self, q: &SystemState, admit: &dyn Fn(&str, usize, usize) -> bool) -> Vec<Step> {
        let mut steps = Vec::new();
        // action -> (enabled senders, enabled receivers) as component indices
        let mut enabled: BTreeMap<&str, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for (ci, c) in self.components.iter().enumerate() {
            for &(s, ref a, _) in c.transitions() {
                if s != q.0[ci] {
                    continue;
                }
                let entry = enabled.entry(a.as_str()).or_default();
                match c.role(a) {
                    Some(Role::Output) if !entry.0.contains(&ci) => entry.0.push(ci),
                    Some(Role::Input) if !entry.1.contains(&ci) => entry.1.push(ci),
                    _ => {}
                }
            }
        }
        for (a, (senders, receivers)) in &enabled {
            for out_mask in 0u64..(1 << senders.len()) {
                let out: Vec<usize> = pick(senders, out_mask);
                for in_mask in 0u64..(1 << receivers.len()) {
                    if out_mask == 0 && in_mask == 0 {
                        continue;
                    }
                    let inp: Vec<usize> = pick(receivers, in_mask);
                    if !admit(a, out.len(), inp.len()) {
                        continue;
                    }
                    let label = SystemLabel::interaction(
                        out.iter().map(|&i| self.names[i].clone()),
                        a,
                        inp.iter().map(|&i| self.names[i].clone()),
                    );
                    let mut parts: Vec<usize> = out.iter().chain(&inp).copied().collect();
                    parts.sort_unstable();
                    self.expand(q, &parts, a, &label, &mut steps);
                }
            }
        }
        for (ci, c) in self.components.iter().enumerate() {
            for (ti, (s, a, d)) in c.transitions().iter().enumerate() {
                if *s == q.0[ci] && c.internals().contains(a) {
                    let mut target = q.clone();
                    target.0[ci] = *d;
                    steps.push(Step { label: SystemLabel::internal(&self.names[ci], a), target, local: vec![(ci, ti)] });
                }
            }
        }
        steps
    }

    // Every combination of local `action` transitions of the participants.
    fn expand(&self, q: &SystemState, parts: &[usize], action: &str, label: &SystemLabel, steps: &mut Vec<Step>) {
        let choices: Vec<Vec<usize>> =
            parts.iter().map(|&ci| self.components[ci].edges_from(q.0[ci], action).collect()).collect();
        let mut idx = vec![0usize; parts.len()];
        loop {
            let mut target = q.clone();
            let mut local = Vec::with_capacity(parts.len());
            for (k, &ci) in parts.iter().enumerate() {
                let ti = choices[k][idx[k]];
                target.0[ci] = self.components[ci].transitions()[ti].2;
                local.push((ci, ti));
            }
            steps.push(Step { label: label.clone(), target, local });
            // odometer increment
            let mut k = 0;
            loop {
                if k == parts.len() {
                    return;
                }
                idx[k] += 1;
                if idx[k] < choices[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    /// Product construction. `on_step` sees every emitted transition together
    /// with the local transitions behind it.
    pub fn explore(
        &self,
        mode: Exploration,
        admit: &dyn Fn(&str, usize, usize) -> bool,
        mut on_step: impl FnMut(usize, &Step),
    ) -> SystemLts {
        let mut lts = Lts::new(self.initial_state());
        for l in self.system_labels() {
            if match &l {
                SystemLabel::Interaction(i) => admit(&i.action, i.out.len(), i.inp.len()),
                SystemLabel::Internal { .. } => true,
            } {
                lts.add_label(l);
            }
        }
        let mut queue: VecDeque<StateId> = VecDeque::from([lts.initial()]);
        let mut expanded: Vec<bool> = Vec::new();
        if mode == Exploration::Full {
            for q in self.all_states() {
                let id = lts.add_state(q);
                if id != lts.initial() {
                    queue.push_back(id);
                }
            }
        }
        while let Some(s) = queue.pop_front() {
            if expanded.len() <= s {
                expanded.resize(s + 1, false);
            }
            if expanded[s] {
                continue;
            }
            expanded[s] = true;
            let q = lts.state(s).clone();
            for step in self.steps(&q, admit) {
                let d = lts.add_state(step.target.clone());
                let t = lts.add_transition(s, step.label.clone(), d);
                on_step(t, &step);
                if expanded.len() <= d || !expanded[d] {
                    queue.push_back(d);
                }
            }
        }
        lts
    }

    /// The full cartesian product of local state spaces, in lexicographic order.
    pub fn all_states(&self) -> Vec<SystemState> {
        let sizes: Vec<usize> = self.components.iter().map(|c| c.states().len()).collect();
        let total: usize = sizes.iter().product();
        let mut out = Vec::with_capacity(total);
        let mut cur = vec![0usize; sizes.len()];
        for _ in 0..total {
            out.push(SystemState(cur.clone()));
            for k in (0..sizes.len()).rev() {
                cur[k] += 1;
                if cur[k] < sizes[k] {
                    break;
                }
                cur[k] = 0;
            }
        }
        out
    }
}

fn pick(items: &[usize], mask: u64) -> Vec<usize> {
    items.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, &x)| x).collect()
}

fn subsets(items: &[String]) -> Vec<Vec<String>> {
    (0u64..(1 << items.len()))
        .map(|m| items.iter().enumerate().filter(|(i, _)| m & (1 << i) != 0).map(|(_, x)| x.clone()).collect())
        .collect()
}

/// The unrestricted system LTS over reachable states.
pub fn lts_of_system(sys: &System) -> SystemLts {
    sys.explore(Exploration::Reachable, &|_, _, _| true, |_, _| {})
}

/// The unrestricted system LTS over every combination of local states.
pub fn full_lts_of_system(sys: &System) -> SystemLts {
    sys.explore(Exploration::Full, &|_, _, _| true, |_, _| {})
}
