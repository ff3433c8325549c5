//! Graphviz export.
//!
//! Output is deterministic: nodes appear in id order, edges are sorted by
//! source, label text and target. The initial state is drawn with a double
//! circle and an arrow from an invisible point.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::lts::Lts;

/// Escapes text for a double-quoted DOT string.
pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out
}

/// Inverse of [`escape`].
pub fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut it = s.chars();
    while let Some(c) = it.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match it.next() {
            Some('n') => out.push('\n'),
            Some(x) => out.push(x),
            None => out.push('\\'),
        }
    }
    out
}

/// Renders `lts` (only its reachable part when `reachable_only`) as a DOT
/// digraph named `name`.
pub fn to_dot<S, L>(
    lts: &Lts<S, L>,
    name: &str,
    state_text: impl Fn(&S) -> String,
    label_text: impl Fn(&L) -> String,
    reachable_only: bool,
) -> String
where
    S: Clone + Eq + std::hash::Hash,
    L: Clone + Ord + std::hash::Hash,
{
    let keep: BTreeSet<usize> =
        if reachable_only { lts.reachable() } else { (0..lts.num_states()).collect() };
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", escape(name));
    out.push_str("  rankdir=LR;\n  __init [shape=point, style=invis];\n");
    for &s in &keep {
        let shape = if s == lts.initial() { "doublecircle" } else { "circle" };
        let _ = writeln!(out, "  n{s} [label=\"{}\", shape={shape}];", escape(&state_text(lts.state(s))));
    }
    let _ = writeln!(out, "  __init -> n{};", lts.initial());
    let mut edges: Vec<(usize, String, usize)> = lts
        .transitions()
        .iter()
        .filter(|(s, _, d)| keep.contains(s) && keep.contains(d))
        .map(|(s, l, d)| (*s, label_text(l), *d))
        .collect();
    edges.sort();
    for (s, l, d) in edges {
        let _ = writeln!(out, "  n{s} -> n{d} [label=\"{}\"];", escape(&l));
    }
    out.push_str("}\n");
    out
}
