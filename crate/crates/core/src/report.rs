use serde::{Deserialize, Serialize};

/// One named check with its measured value and the bound it was held to.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn push(&mut self, name: impl Into<String>, value: f64, bound: f64, pass: bool) {
        self.checks.push(Check {
            name: name.into(),
            value,
            bound,
            pass,
        });
    }

    /// Records `|value| <= bound`.
    pub fn push_small(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        let pass = value.abs() <= bound;
        self.push(name, value, bound, pass);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}
