//! Machine-readable reports as JSON lines.
//!
//! The first line is a header `{"format":"teams-report","version":1,
//! "command":...}`; every later line is one record with a `"record"` field
//! naming its kind. The last record is always the verdict.

use serde_json::{json, Map, Value};

use crate::comm::{ComplianceVerdict, Mode, ReceptivenessReport, Requirement, ResponsivenessReport};
use crate::realise::{GlobalModel, RcViolation, ViolationKind};
use crate::system::System;

pub const REPORT_FORMAT: &str = "teams-report";
pub const REPORT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    command: String,
    records: Vec<Value>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report { command: command.to_string(), records: Vec::new() }
    }

    /// Adds a record; `fields` must be a JSON object.
    pub fn push(&mut self, record: &str, fields: Value) {
        let mut obj = Map::new();
        obj.insert("record".into(), Value::String(record.into()));
        if let Value::Object(m) = fields {
            obj.extend(m);
        }
        self.records.push(Value::Object(obj));
    }

    pub fn records(&self) -> &[Value] {
        &self.records
    }

    pub fn to_jsonl(&self) -> String {
        let header = json!({"format": REPORT_FORMAT, "version": REPORT_VERSION, "command": self.command});
        let mut out = header.to_string();
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }
}

/// Parses a report, checking the header. Returns the records after it.
pub fn parse_jsonl(text: &str) -> Result<Vec<Value>, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Value = serde_json::from_str(lines.next().ok_or("empty report")?).map_err(|e| e.to_string())?;
    if header["format"] != REPORT_FORMAT {
        return Err("not a teams report".into());
    }
    if header["version"] != REPORT_VERSION {
        return Err(format!("unsupported report version {}", header["version"]));
    }
    lines.map(|l| serde_json::from_str(l).map_err(|e| e.to_string())).collect()
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Strict => "strict",
        Mode::Weak => "weak",
    }
}

pub fn requirement_json(sys: &System, r: &Requirement) -> Value {
    json!({
        "requirement": r.show(sys),
        "state": sys.show_state(&r.state),
        "action": r.action,
        "group": r.group,
    })
}

pub fn verdict_json(sys: &System, v: &ComplianceVerdict) -> Value {
    json!({
        "satisfied": v.satisfied,
        "mode": mode_name(v.mode),
        "witness": v.witness.as_ref().map(|w| w.iter().map(ToString::to_string).collect::<Vec<_>>()),
        "counterexample_state": v.counterexample_state.as_ref().map(|q| sys.show_state(q)),
    })
}

fn merged(a: Value, b: Value) -> Value {
    match (a, b) {
        (Value::Object(mut x), Value::Object(y)) => {
            x.extend(y);
            Value::Object(x)
        }
        (a, _) => a,
    }
}

/// Records for a receptiveness check, ending with the verdict.
pub fn receptiveness(report: &mut Report, sys: &System, r: &ReceptivenessReport) {
    for (req, v) in &r.failures {
        report.push("violation", merged(requirement_json(sys, req), verdict_json(sys, v)));
    }
    report.push(
        "verdict",
        json!({"property": "receptive", "mode": mode_name(r.mode), "holds": r.holds, "requirements": r.requirements}),
    );
}

/// Records for a responsiveness check, ending with the verdict.
pub fn responsiveness(report: &mut Report, sys: &System, r: &ResponsivenessReport) {
    for s in &r.failures {
        let reqs: Vec<String> = s.requirements.iter().map(|q| q.show(sys)).collect();
        report.push(
            "violation",
            json!({"state": sys.show_state(&s.state), "component": s.component, "requirements": reqs}),
        );
    }
    report.push(
        "verdict",
        json!({"property": "responsive", "mode": mode_name(r.mode), "holds": r.holds, "requirements": r.requirements}),
    );
}

pub fn rc_violation_json(m: &GlobalModel, v: &RcViolation) -> Value {
    let name = |s: usize| m.lts().state(s).clone();
    let steps: Vec<Value> =
        v.steps.iter().map(|(n, a, b)| json!({"component": n, "from": name(*a), "to": name(*b)})).collect();
    let (kind, targets) = match &v.kind {
        ViolationKind::Missing => ("missing", Vec::new()),
        ViolationKind::Unmatched { targets } => ("unmatched", targets.iter().map(|t| name(*t)).collect()),
    };
    json!({
        "interaction": v.interaction.to_string(),
        "glue": name(v.glue),
        "steps": steps,
        "kind": kind,
        "targets": targets,
        "text": v.show(m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{comm, fixtures, teams::team, Execution};

    #[test]
    fn header_and_records() {
        let ta = team(&fixtures::race(), &fixtures::st_race()).unwrap();
        let r = comm::is_responsive(&ta, Mode::Strict, Execution::Sequential);
        let mut rep = Report::new("check-rsp");
        responsiveness(&mut rep, ta.system(), &r);
        let text = rep.to_jsonl();
        let recs = parse_jsonl(&text).unwrap();
        assert_eq!(recs.len(), 4);
        assert_eq!(recs.last().unwrap()["holds"], false);
        assert!(parse_jsonl("{\"format\":\"teams-report\",\"version\":99}\n").is_err());
    }
}
