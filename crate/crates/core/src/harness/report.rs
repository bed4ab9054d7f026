use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::{AccuracyMatrix, EpisodeLog, LearningTrajectory};
use crate::config::Config;
use crate::error::{Error, Result};

pub fn write_matrix_csv(matrix: &AccuracyMatrix, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "disruption,occupation,group,accuracy,n_decisions")?;
    for c in &matrix.cells {
        let acc = c
            .accuracy
            .map_or_else(|| "empty".to_owned(), |a| format!("{a:.4}"));
        writeln!(
            out,
            "{},{},{},{},{}",
            c.disruption, c.occupation, c.group, acc, c.decisions
        )?;
    }
    Ok(())
}

pub fn write_trajectory_csv(t: &LearningTrajectory, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "round,probability,logit,feedback,acted")?;
    for p in &t.points {
        writeln!(
            out,
            "{},{:.6},{:.1},{},{}",
            p.round,
            p.probability,
            p.logit,
            p.feedback.as_str(),
            p.acted
        )?;
    }
    Ok(())
}

pub fn log_file_name(log: &EpisodeLog) -> String {
    format!("{}_{}_{}.jsonl", log.disruption, log.occupation, log.group)
}

/// One JSON line per decision, grouped into one file per cell.
pub fn write_logs(dir: &Path, logs: &[EpisodeLog]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: std::collections::BTreeMap<String, String> = Default::default();
    for log in logs {
        let buf = files.entry(log_file_name(log)).or_default();
        for r in &log.records {
            let line = serde_json::json!({
                "trial": log.trial,
                "ground_truth": log.ground_truth,
                "record": r,
            });
            writeln!(buf, "{line}").expect("string write");
        }
    }
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Writes `matrix.csv`, `logs/` and `effective-config.toml` under `dir`.
pub fn write_matrix_reports(dir: &Path, matrix: &AccuracyMatrix, config: &Config) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("matrix.csv");
    let mut buf = Vec::new();
    write_matrix_csv(matrix, &mut buf).expect("vec write");
    fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
    write_logs(&dir.join("logs"), &matrix.logs)?;
    let path = dir.join("effective-config.toml");
    fs::write(&path, config.to_toml_string()).map_err(|e| Error::io(&path, e))?;
    Ok(())
}

/// Occupation x disruption accuracy table for one group, plus the mean.
pub fn render_matrix_summary(matrix: &AccuracyMatrix) -> String {
    let mut out = String::new();
    let mut disruptions: Vec<&str> = Vec::new();
    let mut occupations: Vec<&str> = Vec::new();
    for c in &matrix.cells {
        if !disruptions.contains(&c.disruption.as_str()) {
            disruptions.push(&c.disruption);
        }
        if !occupations.contains(&c.occupation.as_str()) {
            occupations.push(&c.occupation);
        }
    }
    for g in &matrix.groups {
        let _ = writeln!(out, "group {} ({})", g.label, g.categories);
        let _ = write!(out, "{:>6}", "");
        for d in &disruptions {
            let _ = write!(out, "{d:>7}");
        }
        out.push('\n');
        for o in &occupations {
            let _ = write!(out, "{o:>6}");
            for d in &disruptions {
                let cell = matrix
                    .accuracy(d, o, &g.label)
                    .map_or_else(|| "-".to_owned(), |a| format!("{a:.2}"));
                let _ = write!(out, "{cell:>7}");
            }
            out.push('\n');
        }
        match matrix.group_mean(&g.label) {
            Some(m) => {
                let _ = writeln!(out, "  mean {m:.4}\n");
            }
            None => out.push('\n'),
        }
    }
    out
}
