//! Global interaction models and their realisation by local quotients.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::exec::Execution;
use crate::lts::{Lts, StateId};
use crate::system::{ComponentAutomaton, Interaction, Role, System};
use crate::teams::{team, SyncTypeSpec, TeamAutomaton};

/// Component names with input and output actions; no internals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemSignature {
    entries: Vec<(String, BTreeSet<String>, BTreeSet<String>)>,
}

impl SystemSignature {
    pub fn new<I, N, A, B, S, T>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (N, A, B)>,
        N: Into<String>,
        A: IntoIterator<Item = S>,
        B: IntoIterator<Item = T>,
        S: Into<String>,
        T: Into<String>,
    {
        let entries: Vec<(String, BTreeSet<String>, BTreeSet<String>)> = entries
            .into_iter()
            .map(|(n, i, o)| (n.into(), i.into_iter().map(Into::into).collect(), o.into_iter().map(Into::into).collect()))
            .collect();
        if entries.is_empty() {
            return Err(ModelError::EmptySystem);
        }
        let mut names = BTreeSet::new();
        for (n, i, o) in &entries {
            if !names.insert(n) {
                return Err(ModelError::DuplicateComponent(n.clone()));
            }
            if let Some(a) = i.intersection(o).next() {
                return Err(ModelError::OverlappingAlphabet { component: n.clone(), action: a.clone() });
            }
        }
        Ok(SystemSignature { entries })
    }

    /// The signature of a system; fails if the system has internal actions.
    pub fn of_system(sys: &System) -> Result<Self> {
        if let Some(a) = sys.classify_actions().internal.into_iter().next() {
            return Err(ModelError::BadSignature(format!("internal action `{a}` is not allowed")));
        }
        Self::new(sys.iter().map(|(n, c)| (n.clone(), c.inputs().clone(), c.outputs().clone())))
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.entries.iter().map(|e| &e.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.0 == name)
    }

    pub fn inputs(&self, name: &str) -> Option<&BTreeSet<String>> {
        self.entries.iter().find(|e| e.0 == name).map(|e| &e.1)
    }

    pub fn outputs(&self, name: &str) -> Option<&BTreeSet<String>> {
        self.entries.iter().find(|e| e.0 == name).map(|e| &e.2)
    }

    pub fn entries(&self) -> &[(String, BTreeSet<String>, BTreeSet<String>)] {
        &self.entries
    }

    pub fn actions(&self) -> BTreeSet<String> {
        self.entries.iter().flat_map(|(_, i, o)| i.iter().chain(o).cloned()).collect()
    }

    pub fn communicating(&self) -> BTreeSet<String> {
        let ins: BTreeSet<&String> = self.entries.iter().flat_map(|e| &e.1).collect();
        self.entries.iter().flat_map(|e| &e.2).filter(|a| ins.contains(a)).cloned().collect()
    }

    pub fn owners(&self, action: &str, role: Role) -> Vec<String> {
        self.entries
            .iter()
            .filter(|(_, i, o)| match role {
                Role::Input => i.contains(action),
                Role::Output => o.contains(action),
                Role::Internal => false,
            })
            .map(|e| e.0.clone())
            .collect()
    }
}

fn subsets(items: &[String]) -> Vec<BTreeSet<String>> {
    (0u64..(1 << items.len()))
        .map(|m| items.iter().enumerate().filter(|(i, _)| m & (1 << i) != 0).map(|(_, x)| x.clone()).collect())
        .collect()
}

/// All interactions over `sig` that respect `spec`.
pub fn interaction_set(sig: &SystemSignature, spec: &SyncTypeSpec) -> Result<BTreeSet<Interaction>> {
    let communicating = sig.communicating();
    let mut out = BTreeSet::new();
    for a in sig.actions() {
        let st = spec.get(&a);
        if st.is_none() && communicating.contains(&a) {
            return Err(ModelError::SpecIncomplete(a));
        }
        for o in subsets(&sig.owners(&a, Role::Output)) {
            for i in subsets(&sig.owners(&a, Role::Input)) {
                if o.is_empty() && i.is_empty() {
                    continue;
                }
                if st.is_none_or(|st| st.admits(o.len(), i.len())) {
                    out.insert(Interaction { out: o.clone(), action: a.clone(), inp: i });
                }
            }
        }
    }
    Ok(out)
}

/// A global interaction model over a signature and a specification.
#[derive(Debug, Clone)]
pub struct GlobalModel {
    sig: SystemSignature,
    spec: SyncTypeSpec,
    lts: Lts<String, Interaction>,
}

impl GlobalModel {
    pub fn new(sig: SystemSignature, spec: SyncTypeSpec, lts: Lts<String, Interaction>) -> Result<Self> {
        let allowed = interaction_set(&sig, &spec)?;
        if let Some(l) = lts.labels().iter().find(|l| !allowed.contains(*l)) {
            return Err(ModelError::IllFormedModel(format!("interaction {l} is not in the interaction set")));
        }
        Ok(GlobalModel { sig, spec, lts })
    }

    pub fn signature(&self) -> &SystemSignature {
        &self.sig
    }

    pub fn spec(&self) -> &SyncTypeSpec {
        &self.spec
    }

    pub fn lts(&self) -> &Lts<String, Interaction> {
        &self.lts
    }

    fn participant_indices(&self, i: &Interaction) -> Vec<usize> {
        let mut v: Vec<usize> = i.participants().iter().map(|n| self.sig.index_of(n).expect("validated")).collect();
        v.sort_unstable();
        v
    }
}

/// Union-find with path halving; representatives are class minima.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Root lookup without compression.
    pub fn root(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    /// Merges the classes of `a` and `b`; false if already merged.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }

    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for x in 0..self.parent.len() {
            by_root.entry(self.root(x)).or_default().push(x);
        }
        by_root.into_values().collect()
    }
}

/// One equivalence on global model states per component name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NEquivalence {
    names: Vec<String>,
    parts: Vec<UnionFind>,
}

impl NEquivalence {
    /// The identity relation for every name.
    pub fn identity(m: &GlobalModel) -> Self {
        let names: Vec<String> = m.sig.names().cloned().collect();
        let parts = vec![UnionFind::new(m.lts.num_states()); names.len()];
        NEquivalence { names, parts }
    }

    /// Builds an equivalence from explicit blocks of state names; states not
    /// mentioned stay singletons.
    pub fn from_blocks(m: &GlobalModel, blocks: &BTreeMap<String, Vec<Vec<String>>>) -> Result<Self> {
        let mut eq = Self::identity(m);
        for (n, bs) in blocks {
            let k = m.sig.index_of(n).ok_or_else(|| ModelError::UnknownComponent(n.clone()))?;
            for b in bs {
                let ids: Vec<StateId> = b
                    .iter()
                    .map(|s| {
                        m.lts.state_id(s).ok_or_else(|| ModelError::UnknownState { component: n.clone(), state: s.clone() })
                    })
                    .collect::<Result<_>>()?;
                for w in ids.windows(2) {
                    eq.parts[k].union(w[0], w[1]);
                }
            }
        }
        Ok(eq)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn equiv(&self, name: usize, a: StateId, b: StateId) -> bool {
        self.parts[name].root(a) == self.parts[name].root(b)
    }

    pub fn class(&self, name: usize, s: StateId) -> usize {
        self.parts[name].root(s)
    }

    pub fn merge(&mut self, name: usize, a: StateId, b: StateId) -> bool {
        self.parts[name].union(a, b)
    }

    /// Blocks of state ids, each sorted, ordered by least member.
    pub fn partition(&self, name: usize) -> Vec<Vec<StateId>> {
        self.parts[name].classes()
    }

    pub fn partition_of(&self, name: &str) -> Option<Vec<Vec<StateId>>> {
        self.names.iter().position(|n| n == name).map(|k| self.partition(k))
    }

    /// Partitions with state names, keyed by component name.
    pub fn named_partitions(&self, m: &GlobalModel) -> BTreeMap<String, Vec<Vec<String>>> {
        self.names
            .iter()
            .enumerate()
            .map(|(k, n)| {
                let blocks = self
                    .partition(k)
                    .into_iter()
                    .map(|b| b.into_iter().map(|s| m.lts.state(s).clone()).collect())
                    .collect();
                (n.clone(), blocks)
            })
            .collect()
    }

    /// Does every transition relate its endpoints for the non-participants?
    pub fn satisfies_base(&self, m: &GlobalModel) -> bool {
        m.lts.transitions().iter().all(|(s, l, d)| {
            self.names.iter().enumerate().all(|(k, n)| l.involves(n) || self.equiv(k, *s, *d))
        })
    }
}

/// The finest N-equivalence: endpoints of a transition are related for every
/// component not taking part in it.
pub fn base_equivalence(m: &GlobalModel) -> NEquivalence {
    let mut eq = NEquivalence::identity(m);
    for (s, l, d) in m.lts.transitions() {
        for k in 0..eq.names.len() {
            if !l.involves(&eq.names[k]) {
                eq.merge(k, *s, *d);
            }
        }
    }
    eq
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    /// The glue state has no transition with the interaction at all.
    Missing,
    /// The glue state has such transitions but none lands in the right
    /// classes. `targets` lists their target states.
    Unmatched { targets: Vec<StateId> },
}

/// A failing RC instance: an interaction, a glue state and one local step
/// `(name, q_n, q'_n)` per participant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RcViolation {
    pub interaction: Interaction,
    pub glue: StateId,
    pub steps: Vec<(String, StateId, StateId)>,
    pub kind: ViolationKind,
}

impl RcViolation {
    pub fn show(&self, m: &GlobalModel) -> String {
        let name = |s: StateId| m.lts.state(s).as_str();
        let steps: Vec<String> =
            self.steps.iter().map(|(n, q, q2)| format!("{n}:{}->{}", name(*q), name(*q2))).collect();
        let kind = match &self.kind {
            ViolationKind::Missing => "no matching transition from the glue state".to_string(),
            ViolationKind::Unmatched { targets } => {
                let t: Vec<&str> = targets.iter().map(|&s| name(s)).collect();
                format!("transitions to {{{}}} break indistinguishability", t.join(","))
            }
        };
        format!("{} at glue {} with [{}]: {kind}", self.interaction, name(self.glue), steps.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RcReport {
    pub holds: bool,
    pub violations: Vec<RcViolation>,
}

/// Checks the realisability condition for every interaction occurring in the
/// model and every glue state.
pub fn check_rc(m: &GlobalModel, eq: &NEquivalence) -> RcReport {
    check_rc_with(m, eq, Execution::default())
}

pub fn check_rc_with(m: &GlobalModel, eq: &NEquivalence, exec: Execution) -> RcReport {
    let used: Vec<Interaction> = m.lts.transitions().iter().map(|t| t.1.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let violations: Vec<RcViolation> = exec.map(&used, |i| rc_for(m, eq, i)).into_iter().flatten().collect();
    RcReport { holds: violations.is_empty(), violations }
}

fn rc_for(m: &GlobalModel, eq: &NEquivalence, lambda: &Interaction) -> Vec<RcViolation> {
    let lts = &m.lts;
    let parts = m.participant_indices(lambda);
    let mut out = Vec::new();
    for g in 0..lts.num_states() {
        // per participant: local steps (q, q') from states ≡ g, one per target class
        let mut choices: Vec<Vec<(StateId, StateId)>> = Vec::with_capacity(parts.len());
        for &k in &parts {
            let name = &eq.names[k];
            let mut by_class: BTreeMap<usize, (StateId, StateId)> = BTreeMap::new();
            for (s, l, d) in lts.transitions() {
                if l.action == lambda.action && l.involves(name) && eq.equiv(k, *s, g) {
                    by_class.entry(eq.class(k, *d)).or_insert((*s, *d));
                }
            }
            choices.push(by_class.into_values().collect());
        }
        if choices.iter().any(Vec::is_empty) {
            continue;
        }
        let targets: Vec<StateId> = lts.successors(g).filter(|(l, _)| *l == lambda).map(|(_, d)| d).collect();
        for combo in combinations(&choices) {
            let ok = targets.iter().any(|&g2| parts.iter().zip(&combo).all(|(&k, &(_, q2))| eq.equiv(k, q2, g2)));
            if ok {
                continue;
            }
            let kind = if targets.is_empty() {
                ViolationKind::Missing
            } else {
                let mut t = targets.clone();
                t.sort_unstable();
                t.dedup();
                ViolationKind::Unmatched { targets: t }
            };
            let steps = parts.iter().zip(&combo).map(|(&k, &(q, q2))| (eq.names[k].clone(), q, q2)).collect();
            out.push(RcViolation { interaction: lambda.clone(), glue: g, steps, kind });
        }
    }
    out
}

/// Every way of picking one element from each list, in lexicographic order.
fn combinations<T: Copy>(lists: &[Vec<T>]) -> Vec<Vec<T>> {
    lists.iter().fold(vec![Vec::new()], |acc, list| {
        acc.iter()
            .flat_map(|prefix| {
                list.iter().map(move |&x| {
                    let mut v = prefix.clone();
                    v.push(x);
                    v
                })
            })
            .collect()
    })
}

/// Result of the saturation loop.
#[derive(Debug, Clone)]
pub struct Saturation {
    pub equivalence: NEquivalence,
    pub report: RcReport,
    /// Merges performed, as (component, state, state).
    pub merges: Vec<(String, StateId, StateId)>,
}

/// Starts from the base equivalence and repairs RC violations by merging
/// classes until RC holds or only unrepairable violations remain.
pub fn saturate(m: &GlobalModel) -> Saturation {
    saturate_from(m, base_equivalence(m), Execution::default())
}

/// Saturation from a given N-equivalence.
pub fn saturate_from(m: &GlobalModel, mut eq: NEquivalence, exec: Execution) -> Saturation {
    let mut merges = Vec::new();
    loop {
        let report = check_rc_with(m, &eq, exec);
        let repair = report.violations.iter().find_map(|v| match &v.kind {
            ViolationKind::Unmatched { targets } => Some((v, targets)),
            ViolationKind::Missing => None,
        });
        let Some((v, targets)) = repair else {
            return Saturation { equivalence: eq, report, merges };
        };
        // the target needing the fewest merges, ties to the least id
        let mismatches = |g2: StateId| {
            v.steps
                .iter()
                .filter(|(n, _, q2)| !eq.equiv(eq.names.iter().position(|x| x == n).unwrap(), *q2, g2))
                .count()
        };
        let g2 = *targets.iter().min_by_key(|&&g2| (mismatches(g2), g2)).expect("nonempty");
        for (n, _, q2) in v.steps.clone() {
            let k = eq.names.iter().position(|x| *x == n).unwrap();
            if eq.merge(k, q2, g2) {
                merges.push((n, q2, g2));
            }
        }
    }
}

fn block_name<S: fmt::Display>(states: &[S], block: &[StateId]) -> String {
    let names: Vec<String> = block.iter().map(|&s| states[s].to_string()).collect();
    format!("{{{}}}", names.join(","))
}

/// The local quotient of `m` for component `name`: one state per class,
/// one transition per global transition the component takes part in.
pub fn quotient(m: &GlobalModel, eq: &NEquivalence, name: &str) -> Result<ComponentAutomaton> {
    let k = m.sig.index_of(name).ok_or_else(|| ModelError::UnknownComponent(name.to_string()))?;
    let blocks = eq.partition(k);
    let mut block_of = vec![0usize; m.lts.num_states()];
    for (b, members) in blocks.iter().enumerate() {
        for &s in members {
            block_of[s] = b;
        }
    }
    let names: Vec<String> = blocks.iter().map(|b| block_name(m.lts.states(), b)).collect();
    let mut transitions: Vec<(usize, String, usize)> = Vec::new();
    for (s, l, d) in m.lts.transitions() {
        if l.involves(name) {
            let t = (block_of[*s], l.action.clone(), block_of[*d]);
            if !transitions.contains(&t) {
                transitions.push(t);
            }
        }
    }
    transitions.sort();
    ComponentAutomaton::from_parts(
        names,
        block_of[m.lts.initial()],
        m.sig.inputs(name).cloned().unwrap_or_default(),
        m.sig.outputs(name).cloned().unwrap_or_default(),
        BTreeSet::new(),
        transitions,
    )
}

/// The system of all local quotients, in signature order.
pub fn quotient_system(m: &GlobalModel, eq: &NEquivalence) -> Result<System> {
    let comps: Vec<(String, ComponentAutomaton)> =
        m.sig.names().map(|n| Ok((n.clone(), quotient(m, eq, n)?))).collect::<Result<_>>()?;
    System::new(comps)
}

type Signature<'a, L> = (usize, BTreeSet<(&'a L, usize)>);

/// Outcome of a bisimilarity check: the greatest bisimulation between the
/// reachable parts, as pairs of state ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BisimResult {
    pub bisimilar: bool,
    pub relation: Vec<(StateId, StateId)>,
}

/// Greatest bisimulation between the reachable parts of two LTSs, by
/// partition refinement on their disjoint union.
pub fn bisimilar<S1, S2, L>(l1: &Lts<S1, L>, l2: &Lts<S2, L>) -> BisimResult
where
    S1: Clone + Eq + Hash,
    S2: Clone + Eq + Hash,
    L: Clone + Ord + Hash,
{
    let r1: Vec<StateId> = l1.reachable().into_iter().collect();
    let r2: Vec<StateId> = l2.reachable().into_iter().collect();
    // union index: l1 states first, then l2 states
    let n1 = l1.num_states();
    let total = n1 + l2.num_states();
    let nodes: Vec<usize> = r1.iter().copied().chain(r2.iter().map(|s| s + n1)).collect();
    let succ = |x: usize| -> Vec<(&L, usize)> {
        if x < n1 {
            l1.successors(x).collect()
        } else {
            l2.successors(x - n1).map(|(l, d)| (l, d + n1)).collect()
        }
    };
    let mut block = vec![0usize; total];
    let mut count = 1;
    loop {
        let mut sigs: BTreeMap<Signature<'_, L>, usize> = BTreeMap::new();
        let mut next = vec![0usize; total];
        for &x in &nodes {
            let sig: BTreeSet<(&L, usize)> = succ(x).into_iter().map(|(l, d)| (l, block[d])).collect();
            let len = sigs.len();
            next[x] = *sigs.entry((block[x], sig)).or_insert(len);
        }
        let new_count = sigs.len();
        block = next;
        if new_count == count {
            break;
        }
        count = new_count;
    }
    let mut relation = Vec::new();
    for &p in &r1 {
        for &q in &r2 {
            if block[p] == block[q + n1] {
                relation.push((p, q));
            }
        }
    }
    BisimResult { bisimilar: block[l1.initial()] == block[l2.initial() + n1], relation }
}

/// Independent check that `rel` is a bisimulation relating the initial
/// states.
pub fn validate_bisimulation<S1, S2, L>(l1: &Lts<S1, L>, l2: &Lts<S2, L>, rel: &[(StateId, StateId)]) -> bool
where
    S1: Clone + Eq + Hash,
    S2: Clone + Eq + Hash,
    L: Clone + Ord + Hash,
{
    let set: BTreeSet<(StateId, StateId)> = rel.iter().copied().collect();
    if !set.contains(&(l1.initial(), l2.initial())) {
        return false;
    }
    set.iter().all(|&(p, q)| {
        l1.successors(p).all(|(a, p2)| l2.successors(q).any(|(b, q2)| a == b && set.contains(&(p2, q2))))
            && l2.successors(q).all(|(b, q2)| l1.successors(p).any(|(a, p2)| a == b && set.contains(&(p2, q2))))
    })
}

/// A team whose labels are all interactions, relabelled for comparison with
/// a global model.
pub fn interaction_lts(ta: &TeamAutomaton) -> Lts<crate::system::SystemState, Interaction> {
    ta.lts().filter_map_labels(|l| l.as_interaction().cloned())
}

/// The team's interactions with internal steps absorbed: `q --i--> q'`
/// whenever `q` reaches `q'` by internal steps, then `i`, then nothing else.
pub fn observable_interaction_lts(ta: &TeamAutomaton) -> Lts<crate::system::SystemState, Interaction> {
    let lts = ta.lts();
    let mut out = Lts::new(lts.state(lts.initial()).clone());
    for s in 0..lts.num_states() {
        out.add_state(lts.state(s).clone());
    }
    for l in lts.labels().iter().filter_map(|l| l.as_interaction()) {
        out.add_label(l.clone());
    }
    for s in 0..lts.num_states() {
        let mut closure = BTreeSet::from([s]);
        let mut stack = vec![s];
        while let Some(x) = stack.pop() {
            for (l, y) in lts.successors(x) {
                if l.as_interaction().is_none() && closure.insert(y) {
                    stack.push(y);
                }
            }
        }
        for &c in &closure {
            for (l, t) in lts.sorted_successors(c) {
                if let Some(i) = l.as_interaction() {
                    out.add_transition(s, i.clone(), t);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Realisation {
    Realised {
        equivalence: NEquivalence,
        system: System,
        team: TeamAutomaton,
        /// Pairs (team state, model state) of a verified bisimulation.
        relation: Vec<(StateId, StateId)>,
    },
    Inconclusive {
        equivalence: NEquivalence,
        report: RcReport,
        reason: String,
    },
}

impl Realisation {
    pub fn is_realised(&self) -> bool {
        matches!(self, Realisation::Realised { .. })
    }

    pub fn equivalence(&self) -> &NEquivalence {
        match self {
            Realisation::Realised { equivalence, .. } | Realisation::Inconclusive { equivalence, .. } => equivalence,
        }
    }
}

/// Saturates, builds the local quotients, re-composes them under the
/// model's specification and checks bisimilarity with the model.
pub fn realise_pipeline(m: &GlobalModel, exec: Execution) -> Result<Realisation> {
    let sat = saturate_from(m, base_equivalence(m), exec);
    if !sat.report.holds {
        return Ok(Realisation::Inconclusive {
            equivalence: sat.equivalence,
            report: sat.report,
            reason: "the realisability condition fails and cannot be repaired".into(),
        });
    }
    let system = quotient_system(m, &sat.equivalence)?;
    let ta = team(&system, &m.spec)?;
    let relabelled = interaction_lts(&ta);
    let bisim = bisimilar(&relabelled, &m.lts);
    if !bisim.bisimilar || !validate_bisimulation(&relabelled, &m.lts, &bisim.relation) {
        return Ok(Realisation::Inconclusive {
            equivalence: sat.equivalence,
            report: sat.report,
            reason: "the re-composed team is not bisimilar to the model".into(),
        });
    }
    Ok(Realisation::Realised { equivalence: sat.equivalence, system, team: ta, relation: bisim.relation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn ids(m: &GlobalModel, blocks: &[&[&str]]) -> Vec<Vec<StateId>> {
        let mut v: Vec<Vec<StateId>> = blocks
            .iter()
            .map(|b| {
                let mut x: Vec<StateId> = b.iter().map(|s| m.lts().state_id(&s.to_string()).unwrap()).collect();
                x.sort_unstable();
                x
            })
            .collect();
        v.sort();
        v
    }

    #[test]
    fn observable_race_team() {
        let ta = team(&fixtures::race(), &fixtures::st_race()).unwrap();
        let obs = observable_interaction_lts(&ta);
        assert!(bisimilar(&obs, fixtures::m_race().lts()).bisimilar);
        assert!(!bisimilar(&interaction_lts(&ta), fixtures::m_race().lts()).bisimilar);
    }

    #[test]
    fn race_interaction_set() {
        let set = interaction_set(&fixtures::race_signature(), &fixtures::st_race()).unwrap();
        let expected = BTreeSet::from([
            Interaction::new(["Ctrl"], "start", ["R1", "R2"]),
            Interaction::new(["R1"], "finish", ["Ctrl"]),
            Interaction::new(["R2"], "finish", ["Ctrl"]),
        ]);
        assert_eq!(set, expected);
    }

    #[test]
    fn three_senders_interaction_set() {
        let m = fixtures::three_senders_model();
        let set = interaction_set(m.signature(), m.spec()).unwrap();
        assert_eq!(set.len(), 3);
        assert!(set.iter().all(|i| i.out.len() == 2 && i.inp.is_empty()));
    }

    #[test]
    fn single_pair_interaction_set() {
        let sig = SystemSignature::new([("a", vec!["x"], Vec::<&str>::new()), ("b", Vec::<&str>::new(), vec!["x"])]).unwrap();
        let spec = SyncTypeSpec::new().with("x", fixtures::ONE_ONE);
        assert_eq!(interaction_set(&sig, &spec).unwrap().len(), 1);
    }

    #[test]
    fn ill_formed_model_rejected() {
        let mut l = Lts::new("0".to_string());
        let d = l.add_state("1".into());
        l.add_transition(0, Interaction::new(["Ctrl"], "start", ["R1"]), d);
        assert!(matches!(
            GlobalModel::new(fixtures::race_signature(), fixtures::st_race(), l),
            Err(ModelError::IllFormedModel(_))
        ));
    }

    #[test]
    fn race_base_equivalence() {
        let m = fixtures::m_race();
        let eq = base_equivalence(&m);
        assert_eq!(eq.partition_of("Ctrl").unwrap().len(), 4);
        assert_eq!(eq.partition_of("R1").unwrap(), ids(&m, &[&["0", "2"], &["1", "3"]]));
        assert_eq!(eq.partition_of("R2").unwrap(), ids(&m, &[&["0", "3"], &["1", "2"]]));
        assert!(eq.satisfies_base(&m));
    }

    #[test]
    fn race_identity_ctrl_violates_rc() {
        let m = fixtures::m_race();
        let rep = check_rc(&m, &base_equivalence(&m));
        assert!(!rep.holds);
        let g1 = m.lts().state_id(&"1".to_string()).unwrap();
        assert!(rep.violations.iter().any(|v| v.glue == g1 && v.interaction.action == "finish"));
    }

    #[test]
    fn race_saturation() {
        let m = fixtures::m_race();
        let sat = saturate(&m);
        assert!(sat.report.holds);
        let eq = &sat.equivalence;
        assert_eq!(eq.partition_of("Ctrl").unwrap(), ids(&m, &[&["0"], &["1"], &["2", "3"]]));
        assert_eq!(eq.partition_of("R1").unwrap(), ids(&m, &[&["0", "2"], &["1", "3"]]));
        assert_eq!(eq.partition_of("R2").unwrap(), ids(&m, &[&["0", "3"], &["1", "2"]]));
        let again = saturate_from(&m, sat.equivalence.clone(), Execution::Sequential);
        assert!(again.merges.is_empty());
    }

    #[test]
    fn race_quotients() {
        let m = fixtures::m_race();
        let eq = saturate(&m).equivalence;
        let r1 = quotient(&m, &eq, "R1").unwrap();
        assert_eq!(r1.states(), ["{0,2}", "{1,3}"]);
        assert_eq!(r1.transitions().len(), 2);
        let ctrl = quotient(&m, &eq, "Ctrl").unwrap();
        assert_eq!(ctrl.states(), ["{0}", "{1}", "{2,3}"]);
        assert_eq!(ctrl.transitions().len(), 3);
        assert!(ctrl.outputs().contains("start"));
    }

    #[test]
    fn table1_saturation() {
        let m = fixtures::table1_model();
        let sat = saturate(&m);
        assert!(sat.report.holds);
        assert_eq!(sat.equivalence.partition_of("p").unwrap(), ids(&m, &[&["0", "2"], &["1", "3", "4"]]));
        assert_eq!(sat.equivalence.partition_of("q").unwrap(), ids(&m, &[&["0", "1"], &["2", "3", "4"]]));
    }

    #[test]
    fn three_senders_inconclusive() {
        let m = fixtures::three_senders_model();
        let r = realise_pipeline(&m, Execution::Sequential).unwrap();
        let Realisation::Inconclusive { report, .. } = r else { panic!("expected inconclusive") };
        assert!(report.violations.iter().all(|v| v.kind == ViolationKind::Missing));
    }

    #[test]
    fn pipeline_realises_race_and_table1() {
        for m in [fixtures::m_race(), fixtures::table1_model()] {
            let r = realise_pipeline(&m, Execution::Parallel).unwrap();
            assert!(r.is_realised());
        }
    }

    #[test]
    fn bisim_reflexive_and_distinguishing() {
        let m = fixtures::m_race();
        let b = bisimilar(m.lts(), m.lts());
        assert!(b.bisimilar && validate_bisimulation(m.lts(), m.lts(), &b.relation));
        let mut a: Lts<u8, char> = Lts::new(0);
        let a1 = a.add_state(1);
        let a2 = a.add_state(2);
        a.add_transition(0, 'x', a1);
        a.add_transition(a1, 'y', a2);
        let mut b: Lts<u8, char> = Lts::new(0);
        let b1 = b.add_state(1);
        let b2 = b.add_state(2);
        b.add_transition(0, 'x', b1);
        b.add_transition(0, 'x', b2);
        b.add_transition(b1, 'y', 0);
        assert!(!bisimilar(&a, &b).bisimilar);
    }

    #[test]
    fn union_find_classes() {
        let mut uf = UnionFind::new(5);
        assert!(uf.union(3, 1));
        assert!(uf.union(4, 3));
        assert!(!uf.union(1, 4));
        assert_eq!(uf.classes(), vec![vec![0], vec![1, 3, 4], vec![2]]);
    }
}
