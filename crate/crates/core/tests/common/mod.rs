//! Shared generators and brute-force oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use proptest::collection::vec;
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use teams_core::comm::{self, ComplianceChecker, Mode, ReqKind, Requirement};
use teams_core::lts::Lts;
use teams_core::pdl::{self, Formula, Program};
use teams_core::realise::{
    bisimilar, interaction_lts, realise_pipeline, saturate_from, GlobalModel, Realisation, SystemSignature,
};
use teams_core::system::{ComponentAutomaton, Interaction, System, SystemLabel};
use teams_core::teams::{team, Interval, SyncType, SyncTypeSpec, TeamAutomaton};
use teams_core::Execution;

pub const ACTIONS: [&str; 3] = ["a", "b", "c"];

/// A label as plain data: (internal?, senders or the acting component, action, receivers).
pub type FlatLabel = (bool, BTreeSet<String>, String, BTreeSet<String>);
pub type Edge = (Vec<usize>, FlatLabel, Vec<usize>);

pub fn flatten(label: &SystemLabel) -> FlatLabel {
    match label {
        SystemLabel::Interaction(i) => (false, i.out.clone(), i.action.clone(), i.inp.clone()),
        SystemLabel::Internal { name, action } => (true, BTreeSet::from([name.clone()]), action.clone(), BTreeSet::new()),
    }
}

fn subsets(items: &[usize]) -> Vec<Vec<usize>> {
    (0..1u32 << items.len())
        .map(|mask| items.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &x)| x).collect())
        .collect()
}

fn admitted(spec: &SyncTypeSpec, communicating: bool, action: &str, o: usize, i: usize) -> bool {
    match spec.get(action) {
        Some(st) => {
            let within = |iv: &Interval, n: usize| n as u32 >= iv.min && iv.max.is_none_or(|m| n as u32 <= m);
            within(&st.out, o) && within(&st.inp, i)
        }
        None => !communicating,
    }
}

/// Team by exhaustive enumeration of every product state and every
/// sender/receiver group, then forward reachability. Returns the reachable
/// states and the transitions among them.
pub fn brute_team(sys: &System, spec: &SyncTypeSpec) -> (BTreeSet<Vec<usize>>, BTreeSet<Edge>) {
    let comps = sys.components();
    let names = sys.names();
    let sizes: Vec<usize> = comps.iter().map(|c| c.states().len()).collect();
    let mut all_states = vec![vec![]];
    for &n in &sizes {
        all_states = all_states.iter().flat_map(|p: &Vec<usize>| (0..n).map(move |s| [p.clone(), vec![s]].concat())).collect();
    }
    let externals: BTreeSet<&String> = comps.iter().flat_map(|c| c.inputs().iter().chain(c.outputs())).collect();
    let local = |ci: usize, s: usize, a: &str| -> Vec<usize> {
        comps[ci].transitions().iter().filter(|(x, b, _)| *x == s && b == a).map(|t| t.2).collect()
    };
    let mut edges: BTreeSet<Edge> = BTreeSet::new();
    for q in &all_states {
        for (ci, c) in comps.iter().enumerate() {
            for a in c.internals() {
                for d in local(ci, q[ci], a) {
                    let mut t = q.clone();
                    t[ci] = d;
                    edges.insert((q.clone(), (true, BTreeSet::from([names[ci].clone()]), a.clone(), BTreeSet::new()), t));
                }
            }
        }
        for a in &externals {
            let senders: Vec<usize> = (0..comps.len()).filter(|&k| comps[k].outputs().contains(*a)).collect();
            let receivers: Vec<usize> = (0..comps.len()).filter(|&k| comps[k].inputs().contains(*a)).collect();
            let communicating = !senders.is_empty() && !receivers.is_empty();
            for o in subsets(&senders) {
                for i in subsets(&receivers) {
                    if o.is_empty() && i.is_empty() || !admitted(spec, communicating, a, o.len(), i.len()) {
                        continue;
                    }
                    let mut targets = vec![q.clone()];
                    for &k in o.iter().chain(&i) {
                        let ds = local(k, q[k], a);
                        targets = targets
                            .iter()
                            .flat_map(|t| {
                                ds.iter().map(move |&d| {
                                    let mut t = t.clone();
                                    t[k] = d;
                                    t
                                })
                            })
                            .collect();
                    }
                    let label: FlatLabel = (
                        false,
                        o.iter().map(|&k| names[k].clone()).collect(),
                        (*a).clone(),
                        i.iter().map(|&k| names[k].clone()).collect(),
                    );
                    for t in targets {
                        edges.insert((q.clone(), label.clone(), t));
                    }
                }
            }
        }
    }
    let init: Vec<usize> = comps.iter().map(|c| c.initial()).collect();
    let mut seen = BTreeSet::from([init.clone()]);
    let mut queue = VecDeque::from([init]);
    while let Some(q) = queue.pop_front() {
        for (_, _, t) in edges.iter().filter(|(s, _, _)| *s == q) {
            if seen.insert(t.clone()) {
                queue.push_back(t.clone());
            }
        }
    }
    let edges = edges.into_iter().filter(|(s, _, _)| seen.contains(s)).collect();
    (seen, edges)
}

/// The reachable part of a team in the oracle's representation.
pub fn team_graph(ta: &TeamAutomaton) -> (BTreeSet<Vec<usize>>, BTreeSet<Edge>) {
    let r = ta.lts().reachable_part();
    let states = r.states().iter().map(|q| q.0.clone()).collect();
    let edges = r
        .transitions()
        .iter()
        .map(|(s, l, d)| (r.state(*s).0.clone(), flatten(l), r.state(*d).0.clone()))
        .collect();
    (states, edges)
}

// ------------------------------------------------------------ generators

/// Raw material for a system: per component the role of each action
/// (0 absent, 1 input, 2 output, 3 internal), a state count and edges
/// (source, action index, target).
pub type RawComponent = (Vec<u8>, usize, Vec<(usize, usize, usize)>);

pub fn raw_component() -> impl Strategy<Value = RawComponent> {
    (vec(0u8..4, ACTIONS.len()), 1usize..=4).prop_flat_map(|(roles, n)| {
        (Just(roles), Just(n), vec((0..n, 0..ACTIONS.len(), 0..n), 0..=6))
    })
}

fn interval() -> impl Strategy<Value = Interval> {
    (0u32..3, prop_oneof![Just(None), (0u32..3).prop_map(Some)])
        .prop_map(|(min, extra)| Interval::new(min, extra.map(|e| min + e)).expect("non-empty"))
}

/// Raw material for a specification: a type per action and whether an open
/// action gets an entry too.
pub fn raw_spec() -> impl Strategy<Value = Vec<(Interval, Interval, bool)>> {
    vec((interval(), interval(), any::<bool>()), ACTIONS.len())
}

pub fn build_system(raw: &[RawComponent], no_internals: bool) -> System {
    let mut roles: Vec<Vec<u8>> = raw.iter().map(|r| r.0.clone()).collect();
    for a in 0..ACTIONS.len() {
        if no_internals {
            for r in roles.iter_mut().filter(|r| r[a] == 3) {
                r[a] = 0;
            }
        }
        // an internal action belongs to one component only
        if let Some(owner) = roles.iter().position(|r| r[a] == 3) {
            for (k, r) in roles.iter_mut().enumerate() {
                if k != owner {
                    r[a] = 0;
                }
            }
        }
    }
    let comps = raw.iter().zip(&roles).enumerate().map(|(k, ((_, n, edges), roles))| {
        let pick = |role: u8| ACTIONS.iter().zip(roles).filter(move |(_, r)| **r == role).map(|(a, _)| *a);
        let mut ca = ComponentAutomaton::new("0").with_inputs(pick(1)).with_outputs(pick(2)).with_internals(pick(3));
        for s in 1..*n {
            ca = ca.with_state(s.to_string());
        }
        for &(s, a, d) in edges {
            if roles[a] != 0 {
                ca.add_edge(&s.to_string(), ACTIONS[a], &d.to_string());
            }
        }
        (format!("C{k}"), ca)
    });
    System::new(comps.collect::<Vec<_>>()).expect("generated system is well formed")
}

pub fn build_spec(sys: &System, raw: &[(Interval, Interval, bool)]) -> SyncTypeSpec {
    let classes = sys.classify_actions();
    let mut spec = SyncTypeSpec::new();
    for (a, (o, i, open)) in ACTIONS.iter().zip(raw) {
        let a = a.to_string();
        if classes.communicating.contains(&a) || (*open && classes.open.contains(&a)) {
            spec.insert(&a, SyncType::new(*o, *i));
        }
    }
    spec
}

pub fn system_strategy(no_internals: bool) -> impl Strategy<Value = (System, SyncTypeSpec)> {
    (vec(raw_component(), 1..=3), raw_spec()).prop_map(move |(comps, spec)| {
        let sys = build_system(&comps, no_internals);
        let spec = build_spec(&sys, &spec);
        (sys, spec)
    })
}

/// Formulas over abstract atoms, mapped onto a model's labels later.
pub fn program_strategy() -> impl Strategy<Value = Program<usize>> {
    let leaf = prop_oneof![
        3 => (0usize..6).prop_map(Program::Atom),
        1 => Just(Program::Some),
        1 => vec(0usize..6, 0..3).prop_map(|v| Program::Complement(v.into_iter().collect())),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Program::seq(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Program::choice(a, b)),
            inner.prop_map(Program::star),
        ]
    })
}

pub fn formula_strategy() -> impl Strategy<Value = Formula<usize>> {
    let leaf = prop_oneof![Just(Formula::True), Just(Formula::False)];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (program_strategy(), inner.clone()).prop_map(|(p, f)| Formula::boxed(p, f)),
            (program_strategy(), inner).prop_map(|(p, f)| Formula::diamond(p, f)),
        ]
    })
}

pub fn map_program<L: Clone + Ord>(p: &Program<usize>, labels: &[L]) -> Program<L> {
    let pick = |i: usize| labels[i % labels.len()].clone();
    match p {
        Program::Atom(i) if labels.is_empty() => {
            let _ = i;
            Program::Complement(BTreeSet::new())
        }
        Program::Atom(i) => Program::Atom(pick(*i)),
        Program::Some => Program::Some,
        Program::Complement(s) if labels.is_empty() => {
            let _ = s;
            Program::Complement(BTreeSet::new())
        }
        Program::Complement(s) => Program::Complement(s.iter().map(|i| pick(*i)).collect()),
        Program::Seq(a, b) => Program::seq(map_program(a, labels), map_program(b, labels)),
        Program::Choice(a, b) => Program::choice(map_program(a, labels), map_program(b, labels)),
        Program::Star(a) => Program::star(map_program(a, labels)),
    }
}

pub fn map_formula<L: Clone + Ord>(f: &Formula<usize>, labels: &[L]) -> Formula<L> {
    match f {
        Formula::True => Formula::True,
        Formula::False => Formula::False,
        Formula::Not(a) => Formula::not(map_formula(a, labels)),
        Formula::And(a, b) => Formula::and(map_formula(a, labels), map_formula(b, labels)),
        Formula::Or(a, b) => Formula::or(map_formula(a, labels), map_formula(b, labels)),
        Formula::Box(p, a) => Formula::boxed(map_program(p, labels), map_formula(a, labels)),
        Formula::Diamond(p, a) => Formula::diamond(map_program(p, labels), map_formula(a, labels)),
    }
}

fn pool() -> Vec<Interaction> {
    vec![
        Interaction::new(["p"], "a", ["q"]),
        Interaction::new(["q"], "a", ["p"]),
        Interaction::new(["p"], "b", Vec::<String>::new()),
        Interaction::new(["p", "q"], "c", ["r"]),
    ]
}

/// A small LTS over a fixed pool of interactions.
pub fn model_strategy() -> impl Strategy<Value = Lts<String, Interaction>> {
    (1usize..=6).prop_flat_map(|n| vec((0..n, 0usize..4, 0..n), 0..=10).prop_map(move |edges| {
        let labels = pool();
        let mut l = Lts::new("0".to_string());
        for s in 1..n {
            l.add_state(s.to_string());
        }
        for &(s, a, d) in &edges {
            l.add_transition(s, labels[a].clone(), d);
        }
        l
    }))
}

/// A deterministic runner, so that corpus-based tests are reproducible.
pub fn runner() -> TestRunner {
    let config = Config { failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

pub fn sample<S: Strategy>(strategy: &S, runner: &mut TestRunner) -> S::Value {
    strategy.new_tree(runner).expect("strategy produces values").current()
}

/// A global model obtained from the team of a generated system without
/// internal actions.
pub fn model_of_team(sys: &System, spec: &SyncTypeSpec) -> Option<GlobalModel> {
    let sig = SystemSignature::of_system(sys).ok()?;
    let ta = team(sys, spec).ok()?;
    let r = interaction_lts(&ta).reachable_part();
    let lts = r.map_states(|q| format!("{:?}", q.0));
    GlobalModel::new(sig, spec.clone(), lts).ok()
}

/// `m` without its `k`-th transition (modulo the transition count), which
/// often breaks realisability.
pub fn without_transition(m: &GlobalModel, k: usize) -> Option<GlobalModel> {
    let ts = m.lts().transitions();
    if ts.is_empty() {
        return None;
    }
    let drop = k % ts.len();
    let mut l = Lts::new(m.lts().state(m.lts().initial()).clone());
    for s in m.lts().states() {
        l.add_state(s.clone());
    }
    for (j, (s, a, d)) in ts.iter().enumerate() {
        if j != drop {
            l.add_transition(*s, a.clone(), *d);
        }
    }
    GlobalModel::new(m.signature().clone(), m.spec().clone(), l).ok()
}

// ------------------------------------------------------------ properties

/// Group-avoiding reachability, written independently of the checker.
pub fn weak_oracle(ta: &TeamAutomaton, r: &Requirement) -> bool {
    let lts = ta.lts();
    let Some(start) = lts.state_id(&r.state) else { return false };
    let avoids = |l: &SystemLabel| r.group.iter().all(|n| !flatten(l).1.contains(n) && !flatten(l).3.contains(n));
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(x) = queue.pop_front() {
        for (l, y) in lts.successors(x) {
            if r.completed_by(l) {
                return true;
            }
            if avoids(l) && seen.insert(y) {
                queue.push_back(y);
            }
        }
    }
    false
}

/// Team against the oracle, strict implies weak, witness replay and the
/// independent weak-compliance oracle.
pub fn check_system(sys: &System, spec: &SyncTypeSpec) -> Result<(), String> {
    let ta = team(sys, spec).map_err(|e| format!("team failed: {e}"))?;
    if team_graph(&ta) != brute_team(sys, spec) {
        return Err("team differs from the brute-force oracle".into());
    }
    let mut checker = ComplianceChecker::new(&ta);
    for kind in [ReqKind::Rcp, ReqKind::Rsp] {
        for r in comm::derive_requirements(&ta, kind, None) {
            let strict = checker.check(&r, Mode::Strict).map_err(|e| e.to_string())?;
            let weak = checker.check(&r, Mode::Weak).map_err(|e| e.to_string())?;
            let show = r.show(sys);
            if strict.satisfied && !weak.satisfied {
                return Err(format!("{show}: strict but not weak"));
            }
            if weak.satisfied != weak_oracle(&ta, &r) {
                return Err(format!("{show}: weak verdict disagrees with the oracle"));
            }
            if let Some(w) = &weak.witness {
                let start = ta.lts().state_id(&r.state).ok_or("requirement state unknown")?;
                if !comm::replay(ta.lts(), start, w) {
                    return Err(format!("{show}: witness does not replay"));
                }
                let (last, prefix) = w.split_last().ok_or("empty witness")?;
                if !r.completed_by(last) || prefix.iter().any(|l| r.group.iter().any(|n| l.involves(n))) {
                    return Err(format!("{show}: witness has the wrong shape"));
                }
                if strict.satisfied && strict.witness.as_ref().map(Vec::len) != Some(1) {
                    return Err(format!("{show}: strict witness is not a single step"));
                }
            }
        }
    }
    Ok(())
}

/// Saturation reaches a fixed point; when the pipeline realises the model,
/// PDL verdicts agree on the model and its realisation.
pub fn check_model(m: &GlobalModel, formulas: &[Formula<usize>]) -> Result<bool, String> {
    let sat = saturate_from(m, teams_core::realise::base_equivalence(m), Execution::Sequential);
    let again = saturate_from(m, sat.equivalence.clone(), Execution::Sequential);
    if again.equivalence != sat.equivalence || !again.merges.is_empty() || again.report != sat.report {
        return Err("saturation is not idempotent".into());
    }
    let result = realise_pipeline(m, Execution::Sequential).map_err(|e| e.to_string())?;
    let Realisation::Realised { team: ta, .. } = result else { return Ok(false) };
    let realised = interaction_lts(&ta);
    if !bisimilar(&realised, m.lts()).bisimilar {
        return Err("realisation is not bisimilar".into());
    }
    let labels: Vec<Interaction> = m.lts().labels().iter().cloned().collect();
    for f in formulas {
        let phi = map_formula(f, &labels);
        let a = pdl::check(m.lts(), &phi).map_err(|e| e.to_string())?.holds;
        let b = pdl::check(&realised, &phi).map_err(|e| e.to_string())?.holds;
        if a != b {
            return Err(format!("verdicts differ on {phi}"));
        }
    }
    Ok(true)
}

/// Runs the system and model properties on `n` generated inputs. Returns
/// how many models were realised out of how many were checked.
pub fn property_corpus(n: usize) -> Result<(usize, usize), String> {
    let mut runner = runner();
    let systems = system_strategy(false);
    let plain = system_strategy(true);
    let formulas = vec(formula_strategy(), 4);
    let (mut realised, mut models) = (0, 0);
    for k in 0..n {
        let (sys, spec) = sample(&systems, &mut runner);
        check_system(&sys, &spec).map_err(|e| format!("system #{k}: {e}"))?;
        let (sys, spec) = sample(&plain, &mut runner);
        let model = model_of_team(&sys, &spec).and_then(|m| if k % 2 == 0 { Some(m) } else { without_transition(&m, k) });
        if let Some(m) = model {
            let fs = sample(&formulas, &mut runner);
            if check_model(&m, &fs).map_err(|e| format!("model #{k}: {e}"))? {
                realised += 1;
            }
            models += 1;
        }
    }
    Ok((realised, models))
}

/// `[some*] true` everywhere and box/diamond duality state by state.
pub fn check_pdl_laws(m: &Lts<String, Interaction>, f: &Formula<usize>, p: &Program<usize>) -> Result<(), String> {
    let all: BTreeSet<usize> = (0..m.num_states()).collect();
    let top = Formula::boxed(Program::star(Program::Some), Formula::True);
    if pdl::check(m, &top).map_err(|e| e.to_string())?.satisfying != all {
        return Err("[some*]true fails somewhere".into());
    }
    let labels: Vec<Interaction> = m.labels().iter().cloned().collect();
    let phi = map_formula(f, &labels);
    let prog = map_program(p, &labels);
    let dia = pdl::check(m, &Formula::diamond(prog.clone(), phi.clone())).map_err(|e| e.to_string())?.satisfying;
    let boxed = pdl::check(m, &Formula::boxed(prog.clone(), Formula::not(phi.clone())))
        .map_err(|e| e.to_string())?
        .satisfying;
    let complement: BTreeSet<usize> = all.difference(&boxed).copied().collect();
    if dia != complement {
        return Err(format!("duality fails for <{prog}>{phi}"));
    }
    Ok(())
}
