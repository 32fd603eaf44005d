use std::fmt::Write;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::NotApplicable => 3,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::NotApplicable => "N/A",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub status: Status,
    pub exit_status: i32,
    pub checks: Vec<Check>,
    /// Human-readable lines: integrals, weights, residuals, drift tables.
    pub lines: Vec<String>,
    pub data: serde_json::Value,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Report {
        Report {
            command: command.into(),
            status: Status::Pass,
            exit_status: 0,
            checks: Vec::new(),
            lines: Vec::new(),
            data: serde_json::Value::Null,
        }
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) -> bool {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
        if !passed && self.status == Status::Pass {
            self.set_status(Status::Fail);
        }
        passed
    }

    pub fn line(&mut self, text: impl Into<String>) {
        self.lines.push(text.into());
    }

    pub fn set_status(&mut self, status: Status) {
        self.status = status;
        self.exit_status = status.exit_code();
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}: {}", self.command, self.status.label()).unwrap();
        for line in &self.lines {
            writeln!(out, "  {line}").unwrap();
        }
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            if c.detail.is_empty() {
                writeln!(out, "  {mark} {}", c.name).unwrap();
            } else {
                writeln!(out, "  {mark} {}: {}", c.name, c.detail).unwrap();
            }
        }
        out
    }
}
