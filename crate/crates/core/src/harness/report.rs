//! Render the acceptance table from a results directory.

use crate::error::{Result, SimError};
use crate::harness::config::EXPERIMENTS;
use crate::harness::criteria::CriterionOutcome;
use std::path::Path;

/// Which criteria each experiment is responsible for.
pub const CRITERIA_SOURCES: &[(usize, &str, &str)] = &[
    (1, "exact-oracle dynamics", "stationarity"),
    (2, "conservation & continuity", "stationarity"),
    (3, "stationary white noise", "whitenoise"),
    (4, "equivalence of ensembles", "eoe"),
    (5, "spectral gap & H_{-1}", "gap"),
    (6, "second-order Boltzmann-Gibbs", "bg2"),
    (7, "first-order Boltzmann-Gibbs rate", "bg1"),
    (8, "energy/Hoelder scaling", "energy"),
    (9, "quadratic variation", "qv"),
    (10, "Cole-Hopf cross-validation", "she-compare"),
    (11, "OU autocovariance", "ou-compare"),
    (12, "height field", "height"),
];

#[derive(Debug)]
pub enum ReportStatus {
    AllPass,
    SomeFailed,
    Incomplete,
}

impl ReportStatus {
    pub fn exit_code(&self) -> i32 {
        match self {
            ReportStatus::AllPass => 0,
            ReportStatus::SomeFailed => 1,
            ReportStatus::Incomplete => 2,
        }
    }
}

/// Read every experiment summary under `dir` and print the criteria table.
pub fn report(dir: &Path, out: &mut impl std::io::Write) -> Result<ReportStatus> {
    if !dir.is_dir() {
        return Err(SimError::MissingArtifact(format!(
            "{} is not a directory; run experiments first: {}",
            dir.display(),
            EXPERIMENTS.join(", ")
        )));
    }
    let mut found_any = false;
    let mut criteria: Vec<(usize, Option<CriterionOutcome>, &str)> = Vec::new();
    for &(id, name, experiment) in CRITERIA_SOURCES {
        let summary_path = dir.join(experiment).join("summary.json");
        if !summary_path.is_file() {
            criteria.push((id, None, name));
            continue;
        }
        found_any = true;
        let text = std::fs::read_to_string(&summary_path)?;
        let doc: serde_json::Value = serde_json::from_str(&text)?;
        let parsed: Vec<CriterionOutcome> =
            serde_json::from_value(doc["criteria"].clone()).unwrap_or_default();
        match parsed.into_iter().find(|c| c.id == id) {
            Some(c) => criteria.push((id, Some(c), name)),
            None => criteria.push((id, None, name)),
        }
    }
    if !found_any {
        return Err(SimError::MissingArtifact(format!(
            "no experiment summaries under {}; run: {}",
            dir.display(),
            EXPERIMENTS.join(", ")
        )));
    }

    let mut failed = false;
    let mut missing = false;
    writeln!(out, "acceptance criteria")?;
    writeln!(out, "-------------------")?;
    for (id, c, name) in &criteria {
        match c {
            Some(c) => {
                failed |= !c.pass;
                writeln!(
                    out,
                    "[{}] criterion {:>2}: {} | measured: {} | expected: {}",
                    if c.pass { "PASS" } else { "FAIL" },
                    id,
                    c.name,
                    c.measured,
                    c.expected
                )?;
            }
            None => {
                missing = true;
                writeln!(out, "[ -- ] criterion {id:>2}: {name} | not run")?;
            }
        }
    }
    Ok(if failed {
        ReportStatus::SomeFailed
    } else if missing {
        ReportStatus::Incomplete
    } else {
        ReportStatus::AllPass
    })
}
