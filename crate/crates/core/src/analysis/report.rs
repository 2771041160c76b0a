use std::fmt;

use serde::Serialize;

/// One inequality `left < right`, with `margin = right - left`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionEntry {
    pub name: String,
    /// Human-readable form of the inequality.
    pub relation: String,
    pub left: f64,
    pub right: f64,
    pub margin: f64,
    pub verdict: bool,
}

impl ConditionEntry {
    /// Records `left < right`.
    pub fn less(name: impl Into<String>, relation: impl Into<String>, left: f64, right: f64) -> Self {
        let margin = right - left;
        Self {
            name: name.into(),
            relation: relation.into(),
            left,
            right,
            margin,
            verdict: margin > 0.0,
        }
    }
}

/// A named group of inequalities. The overall verdict is their conjunction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub title: String,
    pub entries: Vec<ConditionEntry>,
    pub overall: bool,
}

impl ConditionReport {
    pub fn new(title: impl Into<String>, entries: Vec<ConditionEntry>) -> Self {
        let overall = entries.iter().all(|e| e.verdict);
        Self {
            title: title.into(),
            entries,
            overall,
        }
    }

    pub fn entry(&self, name: &str) -> Option<&ConditionEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} -- {}", self.title, if self.overall { "HOLDS" } else { "FAILS" })?;
        for e in &self.entries {
            writeln!(
                f,
                "  [{}] {:<10} {}",
                if e.verdict { "ok" } else { "--" },
                e.name,
                e.relation
            )?;
            writeln!(
                f,
                "       left = {:.12e}  right = {:.12e}  margin = {:.6e}",
                e.left, e.right, e.margin
            )?;
        }
        Ok(())
    }
}
