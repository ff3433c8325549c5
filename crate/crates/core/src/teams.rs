//! Synchronisation types and team automata.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::system::{ActionClasses, Exploration, Role, System, SystemLabel, SystemLts};

/// A cardinality interval `[min, max]`; `max = None` is the unbounded `*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub min: u32,
    pub max: Option<u32>,
}

impl Interval {
    pub fn new(min: u32, max: Option<u32>) -> Result<Self> {
        match max {
            Some(m) if m < min => Err(ModelError::EmptyInterval { min, max: m }),
            _ => Ok(Interval { min, max }),
        }
    }

    pub const fn exactly(n: u32) -> Self {
        Interval { min: n, max: Some(n) }
    }

    pub const fn at_least(n: u32) -> Self {
        Interval { min: n, max: None }
    }

    pub fn contains(&self, x: usize) -> bool {
        x as u64 >= self.min as u64 && self.max.is_none_or(|m| x as u64 <= m as u64)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.max {
            Some(m) => write!(f, "[{},{}]", self.min, m),
            None => write!(f, "[{},*]", self.min),
        }
    }
}

/// Bounds on the number of senders and receivers of one interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SyncType {
    pub out: Interval,
    #[serde(rename = "in")]
    pub inp: Interval,
}

impl SyncType {
    pub const fn new(out: Interval, inp: Interval) -> Self {
        SyncType { out, inp }
    }

    pub fn admits(&self, senders: usize, receivers: usize) -> bool {
        self.out.contains(senders) && self.inp.contains(receivers)
    }
}

impl fmt::Display for SyncType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.out, self.inp)
    }
}

/// Assignment of synchronisation types to actions.
///
/// A specification must cover every communicating action of the system it
/// is used with. Entries for open actions are honoured as well, which is how
/// signatures with output-only actions are constrained.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncTypeSpec(pub BTreeMap<String, SyncType>);

impl SyncTypeSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, action: &str, sync: SyncType) -> Self {
        self.0.insert(action.to_string(), sync);
        self
    }

    pub fn get(&self, action: &str) -> Option<&SyncType> {
        self.0.get(action)
    }

    pub fn insert(&mut self, action: &str, sync: SyncType) {
        self.0.insert(action.to_string(), sync);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &SyncType)> {
        self.0.iter()
    }

    /// The first communicating action without an entry, if any.
    pub fn check_total(&self, classes: &ActionClasses) -> Result<()> {
        match classes.communicating.iter().find(|a| !self.0.contains_key(*a)) {
            Some(a) => Err(ModelError::SpecIncomplete(a.clone())),
            None => Ok(()),
        }
    }

    /// Fills in `default` for every communicating action without an entry.
    pub fn complete_with(mut self, classes: &ActionClasses, default: SyncType) -> Self {
        for a in &classes.communicating {
            self.0.entry(a.clone()).or_insert(default);
        }
        self
    }
}

impl std::ops::Index<&str> for SyncTypeSpec {
    type Output = SyncType;

    fn index(&self, action: &str) -> &SyncType {
        &self.0[action]
    }
}

/// Does `label` respect `spec`? Internal labels always do; so do
/// interactions on open actions the specification says nothing about.
pub fn label_satisfies(
    label: &SystemLabel,
    spec: &SyncTypeSpec,
    communicating: &std::collections::BTreeSet<String>,
) -> Result<bool> {
    let SystemLabel::Interaction(i) = label else {
        return Ok(true);
    };
    match spec.get(&i.action) {
        Some(st) => Ok(st.admits(i.out.len(), i.inp.len())),
        None if communicating.contains(&i.action) => Err(ModelError::SpecIncomplete(i.action.clone())),
        None => Ok(true),
    }
}

/// A team automaton: the system LTS restricted to labels satisfying the
/// synchronisation type specification.
#[derive(Debug, Clone)]
pub struct TeamAutomaton {
    system: System,
    spec: SyncTypeSpec,
    classes: ActionClasses,
    lts: SystemLts,
}

impl TeamAutomaton {
    pub fn system(&self) -> &System {
        &self.system
    }

    pub fn spec(&self) -> &SyncTypeSpec {
        &self.spec
    }

    pub fn classes(&self) -> &ActionClasses {
        &self.classes
    }

    pub fn lts(&self) -> &SystemLts {
        &self.lts
    }

    pub fn into_lts(self) -> SystemLts {
        self.lts
    }
}

/// Generates the team automaton of `sys` under `spec`, over reachable states.
pub fn team(sys: &System, spec: &SyncTypeSpec) -> Result<TeamAutomaton> {
    team_with(sys, spec, Exploration::Reachable)
}

pub fn team_with(sys: &System, spec: &SyncTypeSpec, mode: Exploration) -> Result<TeamAutomaton> {
    let classes = sys.classify_actions();
    spec.check_total(&classes)?;
    let admit = |a: &str, o: usize, i: usize| spec.get(a).is_none_or(|st| st.admits(o, i));
    let lts = sys.explore(mode, &admit, |_, _| {});
    Ok(TeamAutomaton { system: sys.clone(), spec: spec.clone(), classes, lts })
}

/// Commonly used synchronisation type shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pattern {
    Multicast,
    Broadcast,
    FullSync,
    MasterSlave,
    StrongMasterSlave,
}

impl std::str::FromStr for Pattern {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "multicast" => Pattern::Multicast,
            "broadcast" => Pattern::Broadcast,
            "full-sync" | "full_sync" => Pattern::FullSync,
            "master-slave" | "master_slave" => Pattern::MasterSlave,
            "strong-master-slave" | "strong_master_slave" => Pattern::StrongMasterSlave,
            other => return Err(format!("unknown pattern `{other}`")),
        })
    }
}

/// Resolves a named pattern for `action` in `sys`. "All participants" bounds
/// become the number of components owning the action in that role.
pub fn named_pattern(pattern: Pattern, sys: &System, action: &str) -> Result<SyncType> {
    if !sys.classify_actions().communicating.contains(action) {
        return Err(ModelError::NotCommunicating(action.to_string()));
    }
    let senders = sys.owners(action, Role::Output).len() as u32;
    let receivers = sys.owners(action, Role::Input).len() as u32;
    Ok(match pattern {
        Pattern::Multicast => SyncType::new(Interval::exactly(1), Interval::at_least(0)),
        Pattern::Broadcast => SyncType::new(Interval::exactly(1), Interval::exactly(receivers)),
        Pattern::FullSync => SyncType::new(Interval::exactly(senders), Interval::exactly(receivers)),
        Pattern::MasterSlave => SyncType::new(Interval::at_least(1), Interval::at_least(0)),
        Pattern::StrongMasterSlave => SyncType::new(Interval::at_least(1), Interval::at_least(1)),
    })
}
