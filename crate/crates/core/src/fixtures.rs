//! Reference models: the Race family, its approval variant with an arbiter,
//! the featured controller and a few small global interaction models.
//!
//! System states of the Race systems are ordered `(Ctrl, R1, R2)`.

use crate::featured::{FeatureExpr, FeaturedCA, FeaturedSTS, FeaturedSystem};
use crate::lts::Lts;
use crate::realise::{GlobalModel, SystemSignature};
use crate::system::{ComponentAutomaton, Interaction, System};
use crate::teams::{Interval, SyncType, SyncTypeSpec};

pub const ONE_ONE: SyncType = SyncType::new(Interval::exactly(1), Interval::exactly(1));

pub fn ctrl() -> ComponentAutomaton {
    ComponentAutomaton::new("0")
        .with_inputs(["finish"])
        .with_outputs(["start"])
        .with_edge("0", "start", "1")
        .with_edge("1", "finish", "2")
        .with_edge("2", "finish", "0")
}

pub fn runner() -> ComponentAutomaton {
    ComponentAutomaton::new("0")
        .with_inputs(["start"])
        .with_outputs(["finish"])
        .with_internals(["run"])
        .with_edge("0", "start", "1")
        .with_edge("1", "run", "2")
        .with_edge("2", "finish", "0")
}

/// Controller that asks an arbiter for approval before each race.
pub fn ctrl_v() -> ComponentAutomaton {
    ComponentAutomaton::new("0")
        .with_inputs(["finish", "grant", "reject"])
        .with_outputs(["start", "ask"])
        .with_edge("0", "ask", "1")
        .with_edge("1", "reject", "0")
        .with_edge("1", "grant", "2")
        .with_edge("2", "start", "3")
        .with_edge("3", "finish", "4")
        .with_edge("4", "finish", "0")
}

pub fn arbiter() -> ComponentAutomaton {
    ComponentAutomaton::new("0")
        .with_inputs(["ask"])
        .with_outputs(["grant", "reject"])
        .with_edge("0", "ask", "1")
        .with_edge("1", "grant", "0")
        .with_edge("1", "reject", "0")
}

pub fn race() -> System {
    System::new([("Ctrl", ctrl()), ("R1", runner()), ("R2", runner())]).expect("race system")
}

/// Race with `k` runners, all started together and finishing one by one.
pub fn race_n(k: usize) -> (System, SyncTypeSpec) {
    let mut c = ComponentAutomaton::new("0").with_inputs(["finish"]).with_outputs(["start"]);
    c.add_edge("0", "start", "1");
    for i in 1..=k {
        let to = if i == k { "0".to_string() } else { format!("{}", i + 1) };
        c.add_edge(&i.to_string(), "finish", &to);
    }
    let mut comps = vec![("Ctrl".to_string(), c)];
    comps.extend((1..=k).map(|i| (format!("R{i}"), runner())));
    let spec = SyncTypeSpec::new()
        .with("start", SyncType::new(Interval::exactly(1), Interval::exactly(k as u32)))
        .with("finish", ONE_ONE);
    (System::new(comps).expect("race system"), spec)
}

pub fn st_race() -> SyncTypeSpec {
    SyncTypeSpec::new()
        .with("start", SyncType::new(Interval::exactly(1), Interval::exactly(2)))
        .with("finish", ONE_ONE)
}

pub fn race_v() -> System {
    System::new([("Ctrl", ctrl_v()), ("R1", runner()), ("R2", runner())]).expect("racev system")
}

pub fn arb() -> System {
    System::new([("Arbiter", arbiter())]).expect("arbiter system")
}

/// Binary types for the interface actions between `race_v` and `arb`.
pub fn st_interface() -> SyncTypeSpec {
    SyncTypeSpec::new().with("ask", ONE_ONE).with("grant", ONE_ONE).with("reject", ONE_ONE)
}

pub fn race_signature() -> SystemSignature {
    SystemSignature::new([
        ("Ctrl", vec!["finish"], vec!["start"]),
        ("R1", vec!["start"], vec!["finish"]),
        ("R2", vec!["start"], vec!["finish"]),
    ])
    .expect("race signature")
}

fn model(states: &[&str], edges: &[(&str, Interaction, &str)], alphabet: &[Interaction]) -> Lts<String, Interaction> {
    let mut l = Lts::new(states[0].to_string());
    for s in states {
        l.add_state(s.to_string());
    }
    for a in alphabet {
        l.add_label(a.clone());
    }
    for (s, a, d) in edges {
        let s = l.state_id(&s.to_string()).unwrap();
        let d = l.state_id(&d.to_string()).unwrap();
        l.add_transition(s, a.clone(), d);
    }
    l
}

/// The four-state global Race model: start both, then two finishes in any
/// order.
pub fn m_race() -> GlobalModel {
    let start = Interaction::new(["Ctrl"], "start", ["R1", "R2"]);
    let f1 = Interaction::new(["R1"], "finish", ["Ctrl"]);
    let f2 = Interaction::new(["R2"], "finish", ["Ctrl"]);
    let lts = model(
        &["0", "1", "2", "3"],
        &[
            ("0", start.clone(), "1"),
            ("1", f1.clone(), "2"),
            ("1", f2.clone(), "3"),
            ("2", f2.clone(), "0"),
            ("3", f1.clone(), "0"),
        ],
        &[start, f1, f2],
    );
    GlobalModel::new(race_signature(), st_race(), lts).expect("race model")
}

/// Two output-only participants `p` and `q` each sending `a` once, in either
/// order; bisimilar to a four-state team but not isomorphic to any.
pub fn table1_model() -> GlobalModel {
    let sig = SystemSignature::new([("p", Vec::<&str>::new(), vec!["a"]), ("q", Vec::<&str>::new(), vec!["a"])]).unwrap();
    let spec = SyncTypeSpec::new().with("a", SyncType::new(Interval::exactly(1), Interval::exactly(0)));
    let p = Interaction::new(["p"], "a", Vec::<String>::new());
    let q = Interaction::new(["q"], "a", Vec::<String>::new());
    let lts = model(
        &["0", "1", "2", "3", "4"],
        &[("0", p.clone(), "1"), ("0", q.clone(), "2"), ("1", q.clone(), "3"), ("2", p.clone(), "4")],
        &[p, q],
    );
    GlobalModel::new(sig, spec, lts).expect("table 1 model")
}

/// Three senders of `a`, exactly two at a time, one step.
pub fn three_senders_model() -> GlobalModel {
    let sig = SystemSignature::new([("p", Vec::<&str>::new(), vec!["a"]), ("q", Vec::<&str>::new(), vec!["a"]), ("r", Vec::<&str>::new(), vec!["a"])])
        .unwrap();
    let spec = three_senders_spec();
    let pq = Interaction::new(["p", "q"], "a", Vec::<String>::new());
    let qr = Interaction::new(["q", "r"], "a", Vec::<String>::new());
    let pr = Interaction::new(["p", "r"], "a", Vec::<String>::new());
    let lts = model(
        &["0", "1"],
        &[("0", pq.clone(), "1"), ("0", qr.clone(), "1"), ("0", pr.clone(), "1")],
        &[pq, qr, pr],
    );
    GlobalModel::new(sig, spec, lts).expect("three senders model")
}

pub fn three_senders_spec() -> SyncTypeSpec {
    SyncTypeSpec::new().with("a", SyncType::new(Interval::exactly(2), Interval::exactly(0)))
}

/// The hand-written realisation of [`three_senders_model`]: each participant
/// sends `a` once.
pub fn three_senders_realisation() -> System {
    let one_shot = || ComponentAutomaton::new("0").with_outputs(["a"]).with_edge("0", "a", "1");
    System::new([("p", one_shot()), ("q", one_shot()), ("r", one_shot())]).unwrap()
}

pub fn lock() -> FeatureExpr {
    FeatureExpr::var("lock")
}

pub fn unlock() -> FeatureExpr {
    FeatureExpr::var("unlock")
}

/// Superimposed controller: `unlock` starts directly, `lock` asks first.
pub fn ctrl_f() -> FeaturedCA {
    let ca = ComponentAutomaton::new("0")
        .with_inputs(["finish", "grant", "reject"])
        .with_outputs(["start", "ask"])
        .with_edge("0", "ask", "1")
        .with_edge("0", "start", "3")
        .with_edge("1", "reject", "0")
        .with_edge("1", "grant", "2")
        .with_edge("2", "start", "3")
        .with_edge("3", "finish", "4")
        .with_edge("4", "finish", "0");
    let guards = vec![lock(), unlock(), lock(), lock(), lock(), FeatureExpr::True, FeatureExpr::True];
    FeaturedCA::new(ca, guards).expect("guards match transitions")
}

/// `ctrl` with states renamed as in the superimposed controller.
pub fn ctrl_renamed() -> ComponentAutomaton {
    ComponentAutomaton::new("0")
        .with_inputs(["finish"])
        .with_outputs(["start"])
        .with_edge("0", "start", "3")
        .with_edge("3", "finish", "4")
        .with_edge("4", "finish", "0")
}

/// `lock` xor `unlock`.
pub fn race_feature_model() -> FeatureExpr {
    FeatureExpr::or(
        FeatureExpr::and(lock(), FeatureExpr::not(unlock())),
        FeatureExpr::and(unlock(), FeatureExpr::not(lock())),
    )
}

pub fn featured_race() -> FeaturedSystem {
    let plain = |ca: ComponentAutomaton| FeaturedCA::unguarded(ca);
    FeaturedSystem::new(
        [("Ctrl", ctrl_f()), ("R1", plain(runner())), ("R2", plain(runner()))],
        ["lock", "unlock"],
        race_feature_model(),
    )
    .expect("featured race")
}

/// The Race types for every product.
pub fn fst_race() -> FeaturedSTS {
    let mut fst = FeaturedSTS::new();
    for (a, st) in st_race().iter() {
        fst.set_default(a, *st);
    }
    fst
}
