//! Composition of systems and of their synchronisation type
//! specifications, and re-checking of communication properties on the
//! interface actions of a composition.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::comm::{
    derive_requirements, is_receptive, is_responsive, receptive_over, responsive_over, ComplianceChecker,
    ComplianceVerdict, Mode, ReqKind, Requirement,
};
use crate::error::{ModelError, Result};
use crate::exec::Execution;
use crate::system::{ComponentAutomaton, System};
use crate::teams::{team, SyncTypeSpec, TeamAutomaton};

/// Systems with their own specifications plus types for the actions that
/// only become communicating once the parts are put together.
#[derive(Debug, Clone)]
pub struct CompositionPlan {
    pub parts: Vec<(System, SyncTypeSpec)>,
    pub interface_spec: SyncTypeSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Conflict {
    /// Two parts use the same component name.
    Name { parts: (usize, usize), name: String },
    /// An action communicating in one part occurs in another.
    Action { parts: (usize, usize), action: String },
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Conflict::Name { parts: (a, b), name } => write!(f, "parts {a} and {b} both name a component `{name}`"),
            Conflict::Action { parts: (a, b), action } => {
                write!(f, "action `{action}` is communicating in part {a} and occurs in part {b}")
            }
        }
    }
}

/// Checks unique names and that no part's communicating action occurs in
/// another part. Returns every conflict found.
pub fn composable(parts: &[System]) -> (bool, Vec<Conflict>) {
    let mut conflicts = Vec::new();
    for (k, a) in parts.iter().enumerate() {
        for (l, b) in parts.iter().enumerate() {
            if k == l {
                continue;
            }
            if k < l {
                for n in a.names().iter().filter(|n| b.index_of(n).is_some()) {
                    conflicts.push(Conflict::Name { parts: (k, l), name: n.clone() });
                }
            }
            let b_actions = b.actions();
            for act in a.classify_actions().communicating.iter().filter(|x| b_actions.contains(*x)) {
                conflicts.push(Conflict::Action { parts: (k, l), action: act.clone() });
            }
        }
    }
    (conflicts.is_empty(), conflicts)
}

fn flatten(parts: &[System]) -> Result<System> {
    let comps: Vec<(String, ComponentAutomaton)> =
        parts.iter().flat_map(|s| s.iter().map(|(n, c)| (n.clone(), c.clone()))).collect();
    System::new(comps)
}

/// Actions communicating in the flattened system but in none of the parts.
pub fn interface_actions(parts: &[System]) -> BTreeSet<String> {
    let own: BTreeSet<String> = parts.iter().flat_map(|s| s.classify_actions().communicating).collect();
    match flatten(parts) {
        Ok(all) => all.classify_actions().communicating.difference(&own).cloned().collect(),
        Err(_) => BTreeSet::new(),
    }
}

/// The flattened system and the combined specification: each part's types
/// plus the interface types.
pub fn compose(plan: &CompositionPlan) -> Result<(System, SyncTypeSpec)> {
    let systems: Vec<System> = plan.parts.iter().map(|p| p.0.clone()).collect();
    let (ok, conflicts) = composable(&systems);
    if !ok {
        return Err(ModelError::NotComposable(conflicts[0].to_string()));
    }
    let interface = interface_actions(&systems);
    if let Some((a, _)) = plan.interface_spec.iter().find(|(a, _)| !interface.contains(*a)) {
        return Err(ModelError::NotComposable(format!("`{a}` is not an interface action")));
    }
    let sys = flatten(&systems)?;
    let mut spec = SyncTypeSpec::new();
    for (_, part_spec) in &plan.parts {
        for (a, st) in part_spec.iter() {
            spec.insert(a, *st);
        }
    }
    for a in &interface {
        let st = plan.interface_spec.get(a).ok_or_else(|| ModelError::SpecIncomplete(a.clone()))?;
        spec.insert(a, *st);
    }
    Ok((sys, spec))
}

/// Strict and weak verdicts for one interface requirement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterfaceCheck {
    pub requirement: Requirement,
    pub strict: ComplianceVerdict,
    pub weak: ComplianceVerdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartVerdict {
    pub names: Vec<String>,
    pub receptive: bool,
    pub responsive: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreservationReport {
    pub mode: Mode,
    pub interface_actions: BTreeSet<String>,
    pub parts: Vec<PartVerdict>,
    pub interface_checks: Vec<InterfaceCheck>,
    /// Parts receptive and all interface receptiveness requirements met.
    pub receptive: bool,
    /// Parts responsive and the interface responsiveness requirements met.
    pub responsive: bool,
}

/// Checks every part in `mode`, then the requirements of the composed team
/// on interface actions only.
pub fn check_preservation(plan: &CompositionPlan, mode: Mode, exec: Execution) -> Result<(TeamAutomaton, PreservationReport)> {
    let (sys, spec) = compose(plan)?;
    let composed = team(&sys, &spec)?;
    let parts = plan
        .parts
        .iter()
        .map(|(s, st)| {
            let ta = team(s, st)?;
            Ok(PartVerdict {
                names: s.names().to_vec(),
                receptive: is_receptive(&ta, mode, exec).holds,
                responsive: is_responsive(&ta, mode, exec).holds,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let systems: Vec<System> = plan.parts.iter().map(|p| p.0.clone()).collect();
    let interface = interface_actions(&systems);
    let rcp = derive_requirements(&composed, ReqKind::Rcp, Some(&interface));
    let rsp = derive_requirements(&composed, ReqKind::Rsp, Some(&interface));
    let all: Vec<Requirement> = rcp.iter().chain(&rsp).cloned().collect();
    let interface_checks = exec.map_init(&all, || ComplianceChecker::new(&composed), |c, r| InterfaceCheck {
        requirement: r.clone(),
        strict: c.check(r, Mode::Strict).expect("derived requirement"),
        weak: c.check(r, Mode::Weak).expect("derived requirement"),
    });
    let receptive = parts.iter().all(|p| p.receptive) && receptive_over(&composed, rcp, mode, exec).holds;
    let responsive = parts.iter().all(|p| p.responsive) && responsive_over(&composed, rsp, mode, exec).holds;
    let report =
        PreservationReport { mode, interface_actions: interface, parts, interface_checks, receptive, responsive };
    Ok((composed, report))
}
