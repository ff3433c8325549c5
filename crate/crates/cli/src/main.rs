//! `teams`: build, check, realise, compose and project team automata from
//! model files.
//!
//! Exit status: 0 when the verdict is true (or the command succeeded), 1 when
//! the verdict is false, 2 on usage, parse or model errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use teams_core::comm::{self, Mode};
use teams_core::compose::{check_preservation, CompositionPlan};
use teams_core::dot::to_dot;
use teams_core::dsl::{self, Document, SystemDecl};
use teams_core::featured::{productwise_check, project_fsys, show_product, Product, Property};
use teams_core::pdl;
use teams_core::realise::{realise_pipeline, GlobalModel, Realisation};
use teams_core::report::{self, Report};
use teams_core::system::System;
use teams_core::teams::{team, SyncTypeSpec, TeamAutomaton};
use teams_core::Execution;

#[derive(Parser)]
#[command(name = "teams", version, about = "Team automata toolkit")]
struct Cli {
    /// Print a JSON-lines report on standard output instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Run all checks on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the team automaton of a system.
    Team {
        #[command(flatten)]
        sys: SystemArgs,
        /// Also write the team as a DOT graph.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Check receptiveness.
    CheckRcp {
        #[command(flatten)]
        sys: SystemArgs,
        /// Use weak compliance.
        #[arg(long)]
        weak: bool,
    },
    /// Check responsiveness.
    CheckRsp {
        #[command(flatten)]
        sys: SystemArgs,
        /// Use weak compliance.
        #[arg(long)]
        weak: bool,
    },
    /// Synthesise local components from a global model.
    Realise {
        file: PathBuf,
        /// Global model to use when the file declares several.
        #[arg(long)]
        global: Option<String>,
        /// Write the synthesised system to this file.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Compose systems and re-check communication on their interface.
    Compose {
        #[arg(required = true, num_args = 1..)]
        files: Vec<PathBuf>,
        /// File with `sync` clauses for the interface actions.
        #[arg(long)]
        interface_sts: PathBuf,
        #[arg(long)]
        weak: bool,
        /// Write the composed system to this file.
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Project a featured system onto one product.
    Project {
        file: PathBuf,
        #[arg(long)]
        system: Option<String>,
        /// Comma-separated features of the product; empty for none.
        #[arg(long, allow_hyphen_values = true)]
        product: String,
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Write the product's team as a DOT graph.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Check a property on every valid product of a featured system.
    ProductsCheck {
        file: PathBuf,
        #[arg(long)]
        system: Option<String>,
        /// `receptive` or `responsive`.
        #[arg(long, default_value = "receptive")]
        property: Property,
        #[arg(long)]
        weak: bool,
    },
    /// Evaluate dynamic-logic formulas on a global model or a team (internal
    /// steps of a team are absorbed into the following interaction).
    Pdl {
        file: PathBuf,
        /// File with formulas, one per line or in `formula` blocks.
        #[arg(long)]
        formula: PathBuf,
        #[arg(long, conflicts_with = "system")]
        global: Option<String>,
        #[arg(long)]
        system: Option<String>,
        #[arg(long)]
        default_type: Option<String>,
    },
    /// Render a global model, a team or one component as DOT.
    Dot {
        file: PathBuf,
        #[arg(long, conflicts_with = "system")]
        global: Option<String>,
        #[arg(long)]
        system: Option<String>,
        /// Render only this component of the system.
        #[arg(long)]
        component: Option<String>,
        #[arg(long)]
        default_type: Option<String>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SystemArgs {
    file: PathBuf,
    /// System to use when the file declares several.
    #[arg(long)]
    system: Option<String>,
    /// Type for communicating actions without a `sync` clause, e.g. `[1,1] -> [1,*]`.
    #[arg(long)]
    default_type: Option<String>,
}

struct Output {
    json: bool,
    report: Report,
    text: String,
}

impl Output {
    fn say(&mut self, line: impl AsRef<str>) {
        self.text.push_str(line.as_ref());
        self.text.push('\n');
    }

    fn flush(self) {
        if self.json {
            print!("{}", self.report.to_jsonl());
        } else {
            print!("{}", self.text);
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    let mut out = Output { json: cli.json, report: Report::new(command_name(&cli.command)), text: String::new() };
    let result = run(cli.command, exec, &mut out);
    match result {
        Ok(verdict) => {
            out.flush();
            if verdict {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Team { .. } => "team",
        Command::CheckRcp { .. } => "check-rcp",
        Command::CheckRsp { .. } => "check-rsp",
        Command::Realise { .. } => "realise",
        Command::Compose { .. } => "compose",
        Command::Project { .. } => "project",
        Command::ProductsCheck { .. } => "products-check",
        Command::Pdl { .. } => "pdl",
        Command::Dot { .. } => "dot",
    }
}

fn load(path: &Path) -> Result<Document> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    dsl::parse(&text).map_err(|e| anyhow!("{}:{e}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn spec_with_default(decl: &SystemDecl, sys: &System, default_type: Option<&str>) -> Result<SyncTypeSpec> {
    let spec = decl.spec();
    Ok(match default_type {
        Some(t) => {
            let st = dsl::parse_sync_type(t).map_err(|e| anyhow!("--default-type: {e}"))?;
            spec.complete_with(&sys.classify_actions(), st)
        }
        None => spec,
    })
}

fn load_team(args: &SystemArgs) -> Result<(String, TeamAutomaton)> {
    let doc = load(&args.file)?;
    let decl = doc.system(args.system.as_deref())?;
    let sys = decl.to_system()?;
    let spec = spec_with_default(decl, &sys, args.default_type.as_deref())?;
    Ok((decl.name.clone(), team(&sys, &spec)?))
}

fn team_dot(name: &str, ta: &TeamAutomaton) -> String {
    let sys = ta.system();
    to_dot(ta.lts(), name, |q| sys.show_state(q), |l| l.to_string(), true)
}

fn describe_team(out: &mut Output, name: &str, ta: &TeamAutomaton) {
    let sys = ta.system();
    let lts = ta.lts().reachable_part();
    out.say(format!("team {name}: {} reachable states, {} transitions", lts.num_states(), lts.transitions().len()));
    let mut edges: Vec<(String, String, String)> = lts
        .transitions()
        .iter()
        .map(|(s, l, d)| (sys.show_state(lts.state(*s)), l.to_string(), sys.show_state(lts.state(*d))))
        .collect();
    edges.sort();
    for (s, l, d) in &edges {
        out.say(format!("  {s} --{l}--> {d}"));
    }
    let states: Vec<String> = lts.states().iter().map(|q| sys.show_state(q)).collect();
    out.report.push("team", json!({"name": name, "states": states, "initial": sys.show_state(&sys.initial_state())}));
    for (s, l, d) in edges {
        out.report.push("transition", json!({"from": s, "label": l, "to": d}));
    }
}

fn run(command: Command, exec: Execution, out: &mut Output) -> Result<bool> {
    match command {
        Command::Team { sys, dot } => {
            let (name, ta) = load_team(&sys)?;
            describe_team(out, &name, &ta);
            if let Some(path) = dot {
                write_file(&path, &team_dot(&name, &ta))?;
                out.say(format!("wrote {}", path.display()));
            }
            out.report.push("verdict", json!({"holds": true}));
            Ok(true)
        }
        Command::CheckRcp { sys, weak } => {
            let (_, ta) = load_team(&sys)?;
            let mode = if weak { Mode::Weak } else { Mode::Strict };
            let r = comm::is_receptive(&ta, mode, exec);
            let s = ta.system();
            for (req, v) in &r.failures {
                out.say(format!("violated: {} ({v})", req.show(s)));
            }
            out.say(format!(
                "{} receptive: {} ({} requirements)",
                report::mode_name(mode),
                r.holds,
                r.requirements
            ));
            report::receptiveness(&mut out.report, s, &r);
            Ok(r.holds)
        }
        Command::CheckRsp { sys, weak } => {
            let (_, ta) = load_team(&sys)?;
            let mode = if weak { Mode::Weak } else { Mode::Strict };
            let r = comm::is_responsive(&ta, mode, exec);
            let s = ta.system();
            for f in &r.failures {
                let reqs: Vec<String> = f.requirements.iter().map(|q| q.show(s)).collect();
                out.say(format!("starved: {} at {}: {}", f.component, s.show_state(&f.state), reqs.join(", ")));
            }
            out.say(format!(
                "{} responsive: {} ({} requirements)",
                report::mode_name(mode),
                r.holds,
                r.requirements
            ));
            report::responsiveness(&mut out.report, s, &r);
            Ok(r.holds)
        }
        Command::Realise { file, global, out: target } => {
            let doc = load(&file)?;
            let decl = doc.global(global.as_deref())?;
            let m = decl.to_model()?;
            realise(out, &decl.name, &m, exec, target.as_deref())
        }
        Command::Compose { files, interface_sts, weak, out: target, dot } => {
            let mut parts = Vec::new();
            let mut names = Vec::new();
            for f in &files {
                let doc = load(f)?;
                for decl in &doc.systems {
                    parts.push((decl.to_system()?, decl.spec()));
                    names.push(decl.name.clone());
                }
            }
            let interface_spec = load(&interface_sts)?.top_level_spec();
            let plan = CompositionPlan { parts, interface_spec };
            let mode = if weak { Mode::Weak } else { Mode::Strict };
            let (ta, rep) = check_preservation(&plan, mode, exec)?;
            let name = names.join("_");
            let lts = ta.lts().reachable_part();
            out.say(format!("composed {name}: {} reachable states, {} transitions", lts.num_states(), lts.transitions().len()));
            let iface: Vec<&String> = rep.interface_actions.iter().collect();
            out.say(format!("interface actions: {iface:?}"));
            let sys = ta.system();
            for c in &rep.interface_checks {
                out.say(format!(
                    "  {}: strict {}, weak {}",
                    c.requirement.show(sys),
                    c.strict.satisfied,
                    c.weak.satisfied
                ));
                out.report.push(
                    "interface-check",
                    json!({
                        "requirement": c.requirement.show(sys),
                        "strict": report::verdict_json(sys, &c.strict),
                        "weak": report::verdict_json(sys, &c.weak),
                    }),
                );
            }
            for p in &rep.parts {
                out.report.push("part", json!({"components": p.names, "receptive": p.receptive, "responsive": p.responsive}));
            }
            out.say(format!("{} receptive: {}", report::mode_name(mode), rep.receptive));
            out.say(format!("{} responsive: {}", report::mode_name(mode), rep.responsive));
            out.report.push(
                "verdict",
                json!({
                    "states": lts.num_states(),
                    "transitions": lts.transitions().len(),
                    "mode": report::mode_name(mode),
                    "receptive": rep.receptive,
                    "responsive": rep.responsive,
                    "holds": rep.receptive && rep.responsive,
                }),
            );
            if let Some(path) = target {
                let decl = dsl::system_decl(&name, sys, ta.spec());
                write_file(&path, &dsl::print(&Document { systems: vec![decl], ..Default::default() }))?;
            }
            if let Some(path) = dot {
                write_file(&path, &team_dot(&name, &ta))?;
            }
            Ok(rep.receptive && rep.responsive)
        }
        Command::Project { file, system, product, out: target, dot } => {
            let doc = load(&file)?;
            let decl = doc.system(system.as_deref())?;
            let fsys = decl.to_featured()?;
            let p: Product = product.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
            fsys.check_product(&p)?;
            let sys = project_fsys(&fsys, &p)?;
            let spec = decl.to_fst().project(&p);
            let name = format!("{}_{}", decl.name, p.iter().cloned().collect::<Vec<_>>().join("_"));
            let text = dsl::print(&Document { systems: vec![dsl::system_decl(&name, &sys, &spec)], ..Default::default() });
            out.report.push("projection", json!({"product": p, "system": text}));
            match target {
                Some(path) => write_file(&path, &text)?,
                None => out.say(text.trim_end()),
            }
            if let Some(path) = dot {
                write_file(&path, &team_dot(&name, &team(&sys, &spec)?))?;
            }
            out.report.push("verdict", json!({"holds": true}));
            Ok(true)
        }
        Command::ProductsCheck { file, system, property, weak } => {
            let doc = load(&file)?;
            let decl = doc.system(system.as_deref())?;
            let fsys = decl.to_featured()?;
            let mode = if weak { Mode::Weak } else { Mode::Strict };
            let verdicts = productwise_check(&fsys, &decl.to_fst(), property, mode, exec)?;
            let prop = match property {
                Property::Receptive => "receptive",
                Property::Responsive => "responsive",
            };
            for (p, v) in &verdicts {
                out.say(format!("{}: {} {prop}: {v}", show_product(p), report::mode_name(mode)));
                out.report.push("product", json!({"product": p, "holds": v}));
            }
            let all = verdicts.values().all(|v| *v);
            out.say(format!("all products {prop}: {all}"));
            out.report.push("verdict", json!({"property": prop, "mode": report::mode_name(mode), "holds": all}));
            Ok(all)
        }
        Command::Pdl { file, formula, global, system, default_type } => {
            let doc = load(&file)?;
            let text = fs::read_to_string(&formula).with_context(|| format!("cannot read {}", formula.display()))?;
            let formulas = dsl::parse_formula_file(&text).map_err(|e| anyhow!("{}:{e}", formula.display()))?;
            if formulas.is_empty() {
                bail!("{} contains no formulas", formula.display());
            }
            let use_global = global.is_some() || (system.is_none() && !doc.globals.is_empty());
            let mut all = true;
            if use_global {
                let m = doc.global(global.as_deref())?.to_model()?;
                for f in &formulas {
                    let r = pdl::check(m.lts(), &f.formula)?;
                    all &= r.holds;
                    pdl_line(out, &f.name, &f.formula, r.holds, r.path);
                }
            } else {
                let decl = doc.system(system.as_deref())?;
                let sys = decl.to_system()?;
                let spec = spec_with_default(decl, &sys, default_type.as_deref())?;
                let lts = teams_core::realise::observable_interaction_lts(&team(&sys, &spec)?);
                for f in &formulas {
                    let r = pdl::check(&lts, &f.formula)?;
                    all &= r.holds;
                    pdl_line(out, &f.name, &f.formula, r.holds, r.path);
                }
            }
            out.report.push("verdict", json!({"holds": all}));
            Ok(all)
        }
        Command::Dot { file, global, system, component, default_type, out: target } => {
            let doc = load(&file)?;
            let use_global = global.is_some() || (system.is_none() && doc.systems.is_empty());
            let text = if use_global {
                let decl = doc.global(global.as_deref())?;
                let m = decl.to_model()?;
                to_dot(m.lts(), &decl.name, |s| s.clone(), |i| i.to_string(), false)
            } else {
                let decl = doc.system(system.as_deref())?;
                let sys = decl.to_system()?;
                match component {
                    Some(c) => {
                        let ca = sys.component(&c).ok_or_else(|| anyhow!("no component `{c}` in `{}`", decl.name))?;
                        let lts = ca.to_lts();
                        to_dot(&lts, &c, |s| s.clone(), |a| local_label(ca, a), false)
                    }
                    None => {
                        let spec = spec_with_default(decl, &sys, default_type.as_deref())?;
                        team_dot(&decl.name, &team(&sys, &spec)?)
                    }
                }
            };
            match target {
                Some(path) => write_file(&path, &text)?,
                None => out.say(text.trim_end()),
            }
            out.report.push("dot", json!({"text": text}));
            Ok(true)
        }
    }
}

fn local_label(ca: &teams_core::system::ComponentAutomaton, a: &str) -> String {
    match ca.role(a) {
        Some(teams_core::system::Role::Input) => format!("{a}?"),
        Some(teams_core::system::Role::Output) => format!("{a}!"),
        _ => a.to_string(),
    }
}

fn pdl_line(
    out: &mut Output,
    name: &str,
    f: &pdl::Formula<teams_core::system::Interaction>,
    holds: bool,
    path: Option<Vec<teams_core::system::Interaction>>,
) {
    let path: Option<Vec<String>> = path.map(|p| p.iter().map(ToString::to_string).collect());
    let mut line = format!("{name}: {holds}");
    if let Some(p) = &path {
        line.push_str(&format!(" [{}: {}]", if holds { "witness" } else { "counterexample" }, p.join(" ; ")));
    }
    out.say(line);
    out.report.push("formula", json!({"name": name, "formula": dsl::print_formula(f), "holds": holds, "path": path}));
}

fn realise(out: &mut Output, name: &str, m: &GlobalModel, exec: Execution, target: Option<&Path>) -> Result<bool> {
    let result = realise_pipeline(m, exec)?;
    let partitions = result.equivalence().named_partitions(m);
    for (component, blocks) in &partitions {
        let shown: Vec<String> = blocks.iter().map(|b| format!("{{{}}}", b.join(","))).collect();
        out.say(format!("{component}: {}", shown.join(" ")));
        out.report.push("partition", json!({"component": component, "blocks": blocks}));
    }
    match result {
        Realisation::Realised { system, team: ta, relation, .. } => {
            let decl = dsl::system_decl(&format!("{name}Local"), &system, m.spec());
            let text = dsl::print(&Document { systems: vec![decl], ..Default::default() });
            let team_states = ta.lts().reachable().len();
            let model_states = m.lts().reachable().len();
            out.say(format!("REALISED: team has {team_states} states, model has {model_states}"));
            let lts = ta.lts();
            let pairs: Vec<(Vec<String>, String)> = relation
                .iter()
                .map(|(t, g)| {
                    let q = lts.state(*t);
                    let local: Vec<String> =
                        q.0.iter().zip(system.components()).map(|(&i, c)| c.states()[i].clone()).collect();
                    (local, m.lts().state(*g).clone())
                })
                .collect();
            for (local, g) in &pairs {
                out.say(format!("  ({}) ~ {g}", local.join(", ")));
            }
            out.report.push("system", json!({"text": text}));
            out.report.push("bisimulation", json!({"pairs": pairs}));
            out.report.push(
                "verdict",
                json!({"realised": true, "holds": true, "team_states": team_states, "model_states": model_states}),
            );
            match target {
                Some(path) => write_file(path, &text)?,
                None => out.say(text.trim_end()),
            }
            Ok(true)
        }
        Realisation::Inconclusive { report: rc, reason, .. } => {
            out.say(format!("INCONCLUSIVE: {reason}"));
            for v in &rc.violations {
                out.say(format!("  {}", v.show(m)));
                out.report.push("violation", report::rc_violation_json(m, v));
            }
            out.report.push("verdict", json!({"realised": false, "holds": false, "reason": reason}));
            Ok(false)
        }
    }
}
