//! Receptiveness and responsiveness: requirement derivation and (weak)
//! compliance checking over team automata.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::exec::Execution;
use crate::lts::{Lts, StateId};
use crate::system::{Role, System, SystemLabel, SystemState};
use crate::teams::TeamAutomaton;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ReqKind {
    /// Senders waiting for at least one receiver.
    Rcp,
    /// Receivers waiting for at least one sender.
    Rsp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Strict,
    Weak,
}

/// `rcp(group, action)@state` or `rsp(group, action)@state`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Requirement {
    pub kind: ReqKind,
    pub state: SystemState,
    pub action: String,
    pub group: BTreeSet<String>,
}

impl Requirement {
    pub fn new<I, S>(kind: ReqKind, group: I, action: &str, state: SystemState) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Requirement { kind, group: group.into_iter().map(Into::into).collect(), action: action.into(), state }
    }

    /// Human-readable form, e.g. `rcp({Ctrl},start)@(0,0,0)`.
    pub fn show(&self, sys: &System) -> String {
        let kind = match self.kind {
            ReqKind::Rcp => "rcp",
            ReqKind::Rsp => "rsp",
        };
        let group: Vec<&str> = self.group.iter().map(String::as_str).collect();
        format!("{kind}({{{}}},{})@{}", group.join(","), self.action, sys.show_state(&self.state))
    }

    /// Is `label` an interaction completing this requirement?
    pub fn completed_by(&self, label: &SystemLabel) -> bool {
        match label.as_interaction() {
            Some(i) if i.action == self.action => match self.kind {
                ReqKind::Rcp => i.out == self.group,
                ReqKind::Rsp => i.inp == self.group,
            },
            _ => false,
        }
    }

    fn avoided_by(&self, label: &SystemLabel) -> bool {
        self.group.iter().all(|n| !label.involves(n))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplianceVerdict {
    pub satisfied: bool,
    pub mode: Mode,
    /// Shortest group-avoiding path followed by the completing interaction.
    pub witness: Option<Vec<SystemLabel>>,
    pub counterexample_state: Option<SystemState>,
}

impl fmt::Display for ComplianceVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.witness {
            Some(w) => {
                let w: Vec<String> = w.iter().map(ToString::to_string).collect();
                write!(f, "compliant via {}", w.join(" ; "))
            }
            None => f.write_str("not compliant"),
        }
    }
}

/// All requirements of `kind` over reachable team states, optionally only
/// for the given actions. Sorted.
pub fn derive_requirements(
    ta: &TeamAutomaton,
    kind: ReqKind,
    only: Option<&BTreeSet<String>>,
) -> Vec<Requirement> {
    let sys = ta.system();
    let lts = ta.lts();
    let role = match kind {
        ReqKind::Rcp => Role::Output,
        ReqKind::Rsp => Role::Input,
    };
    let mut out = Vec::new();
    for a in &ta.classes().communicating {
        if only.is_some_and(|o| !o.contains(a)) {
            continue;
        }
        let st = ta.spec()[a.as_str()];
        let (group_iv, other_iv) = match kind {
            ReqKind::Rcp => (st.out, st.inp),
            ReqKind::Rsp => (st.inp, st.out),
        };
        if other_iv.contains(0) {
            continue;
        }
        for s in lts.reachable() {
            let q = lts.state(s);
            let ready: Vec<&String> = sys
                .iter()
                .enumerate()
                .filter(|(ci, (_, c))| c.role(a) == Some(role) && c.enables(q.0[*ci], a))
                .map(|(_, (n, _))| n)
                .collect();
            let cap = group_iv.max.map_or(ready.len(), |m| (m as usize).min(ready.len()));
            for mask in 1u64..(1 << ready.len()) {
                let size = mask.count_ones() as usize;
                if size > cap || !group_iv.contains(size) {
                    continue;
                }
                let group = ready.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, n)| (*n).clone());
                out.push(Requirement::new(kind, group, a, q.clone()));
            }
        }
    }
    out.sort();
    out
}

pub fn derive_rcp(ta: &TeamAutomaton) -> Vec<Requirement> {
    derive_requirements(ta, ReqKind::Rcp, None)
}

pub fn derive_rsp(ta: &TeamAutomaton) -> Vec<Requirement> {
    derive_requirements(ta, ReqKind::Rsp, None)
}

/// Compliance checker over one team automaton, memoising verdicts per
/// requirement and mode.
pub struct ComplianceChecker<'a> {
    ta: &'a TeamAutomaton,
    reachable: BTreeSet<StateId>,
    cache: HashMap<(Requirement, bool), ComplianceVerdict>,
}

impl<'a> ComplianceChecker<'a> {
    pub fn new(ta: &'a TeamAutomaton) -> Self {
        ComplianceChecker { ta, reachable: ta.lts().reachable(), cache: HashMap::new() }
    }

    pub fn check(&mut self, req: &Requirement, mode: Mode) -> Result<ComplianceVerdict> {
        let key = (req.clone(), mode == Mode::Weak);
        if let Some(v) = self.cache.get(&key) {
            return Ok(v.clone());
        }
        let start = self
            .ta
            .lts()
            .state_id(&req.state)
            .filter(|s| self.reachable.contains(s))
            .ok_or_else(|| ModelError::ForeignRequirement(self.ta.system().show_state(&req.state)))?;
        let v = self.search(req, start, mode);
        self.cache.insert(key, v.clone());
        Ok(v)
    }

    fn completion(&self, req: &Requirement, s: StateId) -> Option<SystemLabel> {
        self.ta.lts().successors(s).map(|(l, _)| l).filter(|l| req.completed_by(l)).min().cloned()
    }

    fn search(&self, req: &Requirement, start: StateId, mode: Mode) -> ComplianceVerdict {
        let lts = self.ta.lts();
        let unsatisfied = ComplianceVerdict {
            satisfied: false,
            mode,
            witness: None,
            counterexample_state: Some(req.state.clone()),
        };
        if mode == Mode::Strict {
            return match self.completion(req, start) {
                Some(l) => ComplianceVerdict { satisfied: true, mode, witness: Some(vec![l]), counterexample_state: None },
                None => unsatisfied,
            };
        }
        // BFS with sorted expansion: the first hit is the shortest,
        // lexicographically least group-avoiding prefix.
        let mut parent: HashMap<StateId, Option<(StateId, SystemLabel)>> = HashMap::from([(start, None)]);
        let mut queue = VecDeque::from([start]);
        while let Some(s) = queue.pop_front() {
            if let Some(last) = self.completion(req, s) {
                let mut path = vec![last];
                let mut cur = s;
                while let Some(Some((p, l))) = parent.get(&cur) {
                    path.push(l.clone());
                    cur = *p;
                }
                path.reverse();
                return ComplianceVerdict { satisfied: true, mode, witness: Some(path), counterexample_state: None };
            }
            for (l, d) in lts.sorted_successors(s) {
                if req.avoided_by(l) && !parent.contains_key(&d) {
                    parent.insert(d, Some((s, l.clone())));
                    queue.push_back(d);
                }
            }
        }
        unsatisfied
    }
}

/// One-off compliance check.
pub fn check_compliance(ta: &TeamAutomaton, req: &Requirement, mode: Mode) -> Result<ComplianceVerdict> {
    ComplianceChecker::new(ta).check(req, mode)
}

/// Replays `labels` from `start`, following every matching transition.
/// True when some run consumes the whole sequence.
pub fn replay<S, L>(lts: &Lts<S, L>, start: StateId, labels: &[L]) -> bool
where
    S: Clone + Eq + std::hash::Hash,
    L: Clone + Ord + std::hash::Hash,
{
    let mut current = BTreeSet::from([start]);
    for l in labels {
        current = current.iter().flat_map(|&s| lts.successors(s).filter(|(x, _)| *x == l).map(|(_, d)| d)).collect();
        if current.is_empty() {
            return false;
        }
    }
    true
}

fn check_all(ta: &TeamAutomaton, reqs: &[Requirement], mode: Mode, exec: Execution) -> Vec<ComplianceVerdict> {
    exec.map_init(reqs, || ComplianceChecker::new(ta), |checker, r| {
        checker.check(r, mode).expect("derived requirements are reachable")
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceptivenessReport {
    pub holds: bool,
    pub mode: Mode,
    pub requirements: usize,
    pub failures: Vec<(Requirement, ComplianceVerdict)>,
}

/// Every receptiveness requirement must be (weakly) compliant.
pub fn is_receptive(ta: &TeamAutomaton, mode: Mode, exec: Execution) -> ReceptivenessReport {
    receptive_over(ta, derive_rcp(ta), mode, exec)
}

pub(crate) fn receptive_over(
    ta: &TeamAutomaton,
    reqs: Vec<Requirement>,
    mode: Mode,
    exec: Execution,
) -> ReceptivenessReport {
    let verdicts = check_all(ta, &reqs, mode, exec);
    let requirements = reqs.len();
    let failures: Vec<_> = reqs.into_iter().zip(verdicts).filter(|(_, v)| !v.satisfied).collect();
    ReceptivenessReport { holds: failures.is_empty(), mode, requirements, failures }
}

/// A component with pending input requirements at a state, none of which
/// is (weakly) compliant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Starvation {
    pub state: SystemState,
    pub component: String,
    pub requirements: Vec<Requirement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponsivenessReport {
    pub holds: bool,
    pub mode: Mode,
    pub requirements: usize,
    pub failures: Vec<Starvation>,
}

/// For every reachable state and component `n`: if some responsiveness
/// requirement there has `n` in its group, at least one such requirement is
/// (weakly) compliant.
pub fn is_responsive(ta: &TeamAutomaton, mode: Mode, exec: Execution) -> ResponsivenessReport {
    responsive_over(ta, derive_rsp(ta), mode, exec)
}

pub(crate) fn responsive_over(
    ta: &TeamAutomaton,
    reqs: Vec<Requirement>,
    mode: Mode,
    exec: Execution,
) -> ResponsivenessReport {
    let verdicts = check_all(ta, &reqs, mode, exec);
    let mut per: BTreeMap<(SystemState, String), (bool, Vec<Requirement>)> = BTreeMap::new();
    for (r, v) in reqs.iter().zip(&verdicts) {
        for n in &r.group {
            let e = per.entry((r.state.clone(), n.clone())).or_default();
            e.0 |= v.satisfied;
            e.1.push(r.clone());
        }
    }
    let failures: Vec<Starvation> = per
        .into_iter()
        .filter(|(_, (ok, _))| !ok)
        .map(|((state, component), (_, requirements))| Starvation { state, component, requirements })
        .collect();
    ResponsivenessReport { holds: failures.is_empty(), mode, requirements: reqs.len(), failures }
}
