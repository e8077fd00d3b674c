use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use crate::scenario::Scenario;
use crate::tasks::Outcome;

#[derive(Serialize)]
pub struct Report<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_unix: Option<u64>,
    pub scenario: &'a Scenario,
    pub tasks: &'a [Outcome],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_crosscheck: Option<Value>,
    pub passed: bool,
}

impl<'a> Report<'a> {
    pub fn new(scenario: &'a Scenario, tasks: &'a [Outcome], canonical: bool) -> Self {
        let generated_unix = if canonical {
            None
        } else {
            SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs())
        };
        Report {
            tool: "freeprob",
            version: env!("CARGO_PKG_VERSION"),
            generated_unix,
            scenario,
            tasks,
            mc_crosscheck: tasks.iter().find_map(|t| t.mc.clone()),
            passed: tasks.iter().all(|t| t.passed),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Writes `report.json` and every per-task CSV into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        std::fs::write(dir.join("report.json"), self.to_json()?)?;
        for t in self.tasks {
            for (name, body) in &t.files {
                std::fs::write(dir.join(name), body).with_context(|| format!("writing {name}"))?;
            }
        }
        Ok(())
    }
}
