//! Suite reports: JSON-lines rows, a summary document, table exports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{avg_steps, compute_spl, success_pct, EpisodeResult, Outcome, SuiteSpec};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::valuemaps::SelectorMode;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeAggregate {
    pub mode: SelectorMode,
    pub episodes: usize,
    pub success_pct: f64,
    pub spl_pct: f64,
    pub avg_steps: f64,
    pub timeouts: usize,
    pub false_stops: usize,
    pub aborted: usize,
    pub abstentions: u64,
    pub oracle_errors: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub tool_version: String,
    pub config_fingerprint: String,
    pub seed: u64,
    pub episodes_per_scene: u32,
    pub scenes: usize,
    /// Where the scene files came from, if known.
    pub scenes_dir: Option<String>,
    pub modes: Vec<ModeAggregate>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub summary: SuiteSummary,
    /// Sorted by scene, mode, episode.
    pub rows: Vec<EpisodeResult>,
}

/// Per-mode aggregates in mode order.
pub fn aggregate(rows: &[EpisodeResult]) -> Result<Vec<ModeAggregate>> {
    let mut modes: Vec<SelectorMode> = rows.iter().map(|r| r.mode).collect();
    modes.sort();
    modes.dedup();
    modes
        .into_iter()
        .map(|mode| {
            let rs: Vec<EpisodeResult> = rows.iter().filter(|r| r.mode == mode).cloned().collect();
            let count = |o: Outcome| rs.iter().filter(|r| r.outcome == o).count();
            Ok(ModeAggregate {
                mode,
                episodes: rs.len(),
                success_pct: success_pct(&rs)?,
                spl_pct: compute_spl(&rs)?,
                avg_steps: avg_steps(&rs)?,
                timeouts: count(Outcome::Timeout),
                false_stops: count(Outcome::FalseStop),
                aborted: count(Outcome::Aborted),
                abstentions: rs.iter().map(|r| r.abstentions as u64).sum(),
                oracle_errors: rs.iter().map(|r| r.oracle_errors as u64).sum(),
            })
        })
        .collect()
}

/// `report.jsonl` -> `report.summary.json`.
pub fn summary_path(rows_path: &Path) -> PathBuf {
    rows_path.with_extension("summary.json")
}

impl SuiteReport {
    pub fn from_rows(rows: Vec<EpisodeResult>, cfg: &Config, spec: &SuiteSpec) -> Result<Self> {
        let mut scenes: Vec<&str> = rows.iter().map(|r| r.scene_id.as_str()).collect();
        scenes.sort_unstable();
        scenes.dedup();
        let summary = SuiteSummary {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_fingerprint: cfg.fingerprint(),
            seed: spec.seed,
            episodes_per_scene: spec.episodes_per_scene,
            scenes: scenes.len(),
            scenes_dir: None,
            modes: aggregate(&rows)?,
        };
        Ok(Self { summary, rows })
    }

    pub fn mode(&self, mode: SelectorMode) -> Option<&ModeAggregate> {
        self.summary.modes.iter().find(|m| m.mode == mode)
    }

    pub fn find(&self, id: &str) -> Option<&EpisodeResult> {
        self.rows.iter().find(|r| r.id() == id)
    }

    /// One JSON object per line.
    pub fn rows_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.rows {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Writes the rows to `path` and the summary next to it.
    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.rows_jsonl()?)?;
        std::fs::write(summary_path(path), serde_json::to_string_pretty(&self.summary)? + "\n")?;
        Ok(())
    }

    /// Loads rows and summary and checks that the stored aggregates match
    /// a recomputation from the rows.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut rows = Vec::new();
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            rows.push(
                serde_json::from_str::<EpisodeResult>(line)
                    .map_err(|e| Error::Report(format!("{}:{}: {e}", path.display(), n + 1)))?,
            );
        }
        let sp = summary_path(path);
        let summary: SuiteSummary = serde_json::from_str(
            &std::fs::read_to_string(&sp).map_err(|e| Error::Report(format!("{}: {e}", sp.display())))?,
        )?;
        let report = Self { summary, rows };
        report.verify()?;
        Ok(report)
    }

    /// Recomputes the aggregates from the rows and compares.
    pub fn verify(&self) -> Result<()> {
        let fresh = aggregate(&self.rows)?;
        if fresh.len() != self.summary.modes.len() {
            return Err(Error::Report(format!(
                "summary lists {} modes, rows contain {}",
                self.summary.modes.len(),
                fresh.len()
            )));
        }
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9;
        for (a, b) in fresh.iter().zip(&self.summary.modes) {
            let same = a.mode == b.mode
                && a.episodes == b.episodes
                && close(a.success_pct, b.success_pct)
                && close(a.spl_pct, b.spl_pct)
                && close(a.avg_steps, b.avg_steps);
            if !same {
                return Err(Error::Report(format!(
                    "summary for {} does not match its rows (stored {:.4}/{:.4}/{:.4}, recomputed {:.4}/{:.4}/{:.4})",
                    b.mode, b.success_pct, b.spl_pct, b.avg_steps, a.success_pct, a.spl_pct, a.avg_steps
                )));
            }
        }
        Ok(())
    }

    /// Per-mode table as CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mode,episodes,success_pct,spl_pct,avg_steps,timeouts,false_stops,aborted,abstentions,oracle_errors\n");
        for m in &self.summary.modes {
            let _ = writeln!(
                out,
                "{},{},{:.2},{:.2},{:.2},{},{},{},{},{}",
                m.mode, m.episodes, m.success_pct, m.spl_pct, m.avg_steps, m.timeouts, m.false_stops, m.aborted,
                m.abstentions, m.oracle_errors
            );
        }
        out
    }

    /// Per-episode rows as CSV, without trajectories.
    pub fn rows_csv(&self) -> String {
        let mut out = String::from(
            "id,scene_id,episode,mode,seed,goal_category,success,outcome,steps,path_length_m,shortest_m,goal_seen_step,abstentions,oracle_errors,collisions\n",
        );
        for r in &self.rows {
            let outcome = serde_json::to_value(r.outcome).ok().and_then(|v| v.as_str().map(str::to_owned));
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{:.4},{:.4},{},{},{},{}",
                r.id(),
                r.scene_id,
                r.episode,
                r.mode,
                r.seed,
                r.goal_category,
                r.success,
                outcome.unwrap_or_default(),
                r.steps,
                r.path_length_m,
                r.shortest_m,
                r.goal_seen_step.map(|s| s.to_string()).unwrap_or_default(),
                r.abstentions,
                r.oracle_errors,
                r.collisions
            );
        }
        out
    }

    /// Per-mode table as Markdown.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "| Mode | Episodes | Success (%) | SPL (%) | Avg. Steps |");
        let _ = writeln!(out, "|---|---:|---:|---:|---:|");
        for m in &self.summary.modes {
            let _ = writeln!(
                out,
                "| {} | {} | {:.1} | {:.1} | {:.1} |",
                m.mode, m.episodes, m.success_pct, m.spl_pct, m.avg_steps
            );
        }
        let _ = writeln!(
            out,
            "\nconfig `{}`, seed {}, objnav {}",
            &self.summary.config_fingerprint[..self.summary.config_fingerprint.len().min(12)],
            self.summary.seed,
            self.summary.tool_version
        );
        out
    }
}
