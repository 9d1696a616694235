//! Consolidated summary of a run directory.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::config::Campaign;
use crate::HarnessError;

#[derive(Debug, Clone, Serialize)]
pub struct CampaignStatus {
    pub campaign: Campaign,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub status: String,
    pub failing: Vec<Campaign>,
    pub campaigns: Vec<CampaignStatus>,
    #[serde(rename = "M_inf")]
    pub m_inf: Option<f64>,
    /// Relative gap `‖Ψ_y‖²/M∞ - 1` at the farthest schedule point.
    pub m_gap: Option<f64>,
    pub c_r: Option<f64>,
    pub window: Option<Value>,
    pub degree: Option<Value>,
}

fn read(dir: &Path, name: &str) -> Result<Value, HarnessError> {
    let path = dir.join(name);
    if !path.is_file() {
        return Err(HarnessError::MissingArtifact(path));
    }
    Ok(serde_json::from_str(&std::fs::read_to_string(&path)?)?)
}

/// Reads `run.json` and every campaign summary it lists; no value is recomputed.
pub fn summarize(dir: &Path) -> Result<Summary, HarnessError> {
    let manifest = read(dir, "run.json")?;
    let campaigns: Vec<Campaign> = serde_json::from_value(manifest["campaigns"].clone())?;
    let mut statuses = Vec::new();
    let mut records = std::collections::BTreeMap::new();
    for c in &campaigns {
        let v = read(dir, &format!("{}.json", c.stem()))?;
        statuses.push(CampaignStatus {
            campaign: *c,
            passed: v["passed"].as_bool().unwrap_or(false),
        });
        records.insert(c.stem(), v);
    }
    let data = |stem: &str, key: &str| -> Option<Value> {
        records
            .get(stem)
            .map(|r| r["data"][key].clone())
            .filter(|v| !v.is_null())
    };
    let failing: Vec<Campaign> = statuses.iter().filter(|s| !s.passed).map(|s| s.campaign).collect();
    Ok(Summary {
        status: if failing.is_empty() { "pass" } else { "fail" }.into(),
        failing,
        campaigns: statuses,
        m_inf: data("gs", "M_inf").or_else(|| data("m_equality", "M_inf")).and_then(|v| v.as_f64()),
        m_gap: data("m_equality", "last_gap").and_then(|v| v.as_f64()),
        c_r: data("solve", "c_r").and_then(|v| v.as_f64()),
        window: data("solve", "window_bounds"),
        degree: data("barycenter", "degree"),
    })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_else(|| "-".into())
}

pub fn render_table(s: &Summary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<18} {}", "campaign", "result");
    for c in &s.campaigns {
        let _ = writeln!(out, "{:<18} {}", c.campaign.name(), if c.passed { "pass" } else { "FAIL" });
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<18} {}", "M_inf", cell(s.m_inf));
    let _ = writeln!(out, "{:<18} {}", "M gap (last)", cell(s.m_gap));
    let _ = writeln!(out, "{:<18} {}", "c_r", cell(s.c_r));
    let window = s.window.as_ref().map(|w| {
        format!(
            "{} .. {}",
            cell(w["lower_norm"].as_f64()),
            cell(w["upper_norm"].as_f64())
        )
    });
    let _ = writeln!(out, "{:<18} {}", "window", window.unwrap_or_else(|| "-".into()));
    let degree = s.degree.as_ref().map(|d| d.to_string()).unwrap_or_else(|| "-".into());
    let _ = writeln!(out, "{:<18} {}", "degree", degree);
    let _ = writeln!(out, "{:<18} {}", "status", s.status);
    out
}

/// Writes `summary.json` and `summary.txt` into `dir`.
pub fn report(dir: &Path) -> Result<Summary, HarnessError> {
    let summary = summarize(dir)?;
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    std::fs::write(dir.join("summary.json"), text)?;
    std::fs::write(dir.join("summary.txt"), render_table(&summary))?;
    Ok(summary)
}
