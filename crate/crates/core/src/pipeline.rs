//! Transform orchestration: run merge and/or split passes over a notebook,
//! producing the output notebook plus an audit log.

use crate::analysis::NotebookAnalysis;
use crate::merge::{apply_merges, plan_merges, MergeConfig};
use crate::notebook::{line_count, Notebook};
use crate::split::{apply_splits, plan_splits, SplitConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("stale plan: {0}")]
    StalePlan(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    None,
    Merge,
    Split,
    Both,
}

/// Pass order for `both` runs. Chains are rebuilt between passes either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PassOrder {
    #[serde(rename = "merge-split")]
    MergeSplit,
    #[serde(rename = "split-merge")]
    SplitMerge,
}

/// Every tunable of the tool in one place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct AnalysisConfig {
    pub merge: MergeConfig,
    pub split: SplitConfig,
    pub order: PassOrder,
}

impl Default for PassOrder {
    fn default() -> Self {
        PassOrder::MergeSplit
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeRecord {
    /// First and last notebook cell index of the merged group, in the
    /// notebook the merge pass ran on.
    pub cell_range_before: [usize; 2],
    /// Index of the merged cell in the notebook the pass produced.
    pub cell_index_after: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRecord {
    /// Notebook cell index in the notebook the split pass ran on.
    pub cell_index_before: usize,
    /// Indices of the fragments in the notebook the pass produced.
    pub fragment_indices_after: Vec<usize>,
}

/// Code-cell counts and code line totals; markdown cells are untouched by
/// both passes and excluded here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub cells_before: usize,
    pub cells_after: usize,
    pub lines_before: usize,
    pub lines_after: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformLog {
    pub input_path: String,
    pub tool_version: String,
    pub config: AnalysisConfig,
    pub merges: Vec<MergeRecord>,
    pub splits: Vec<SplitRecord>,
    pub counters: Counters,
    pub skipped_cells: Vec<SkippedCell>,
}

fn code_counters(nb: &Notebook) -> (usize, usize) {
    let code: Vec<_> = nb.cells.iter().filter(|c| c.is_code()).collect();
    let lines = code.iter().map(|c| line_count(&c.source)).sum();
    (code.len(), lines)
}

/// Run the selected transform, rebuilding the chain index before each pass.
pub fn run_transform(
    nb: &Notebook,
    kind: TransformKind,
    cfg: &AnalysisConfig,
) -> Result<(Notebook, TransformLog), TransformError> {
    let (cells_before, lines_before) = code_counters(nb);

    let first_analysis = NotebookAnalysis::of(nb);
    let skipped_cells: Vec<SkippedCell> = first_analysis
        .cells
        .iter()
        .filter(|c| c.parse_failed)
        .map(|c| SkippedCell {
            index: c.cell_index,
            reason: "python parse failure".into(),
        })
        .collect();

    let passes: &[TransformKind] = match (kind, cfg.order) {
        (TransformKind::None, _) => &[],
        (TransformKind::Merge, _) => &[TransformKind::Merge],
        (TransformKind::Split, _) => &[TransformKind::Split],
        (TransformKind::Both, PassOrder::MergeSplit) => {
            &[TransformKind::Merge, TransformKind::Split]
        }
        (TransformKind::Both, PassOrder::SplitMerge) => {
            &[TransformKind::Split, TransformKind::Merge]
        }
    };

    let mut current = nb.clone();
    let mut analysis = first_analysis;
    let mut merges = Vec::new();
    let mut splits = Vec::new();
    for (i, pass) in passes.iter().enumerate() {
        if i > 0 {
            analysis = NotebookAnalysis::of(&current);
        }
        match pass {
            TransformKind::Merge => {
                let plan = plan_merges(&current, &analysis, &cfg.merge);
                let (next, records) = apply_merges(&current, &plan)?;
                merges = records;
                current = next;
            }
            TransformKind::Split => {
                let plan = plan_splits(&analysis, &cfg.split);
                let (next, records) = apply_splits(&current, &analysis, &plan)?;
                splits = records;
                current = next;
            }
            _ => unreachable!("pass list only contains merge and split"),
        }
    }

    let (cells_after, lines_after) = code_counters(&current);
    let log = TransformLog {
        input_path: String::new(),
        tool_version: String::new(),
        config: cfg.clone(),
        merges,
        splits,
        counters: Counters {
            cells_before,
            cells_after,
            lines_before,
            lines_after,
        },
        skipped_cells,
    };
    Ok((current, log))
}

/// Stable hash of a configuration, for the reprocessing marker.
pub fn config_hash(cfg: &AnalysisConfig) -> String {
    let canonical = serde_json::to_string(cfg).expect("config serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    let mut hex = String::with_capacity(16);
    for byte in &digest[..8] {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

/// Stamp a transformed notebook so reprocessing is detectable.
pub fn mark_processed(nb: &mut Notebook, tool_version: &str, cfg: &AnalysisConfig) {
    let marker = json!({
        "version": tool_version,
        "config_hash": config_hash(cfg),
    });
    match &mut nb.metadata {
        Value::Object(map) => {
            map.insert("resplit".into(), marker);
        }
        other if other.is_null() => {
            nb.metadata = json!({ "resplit": marker });
        }
        _ => {}
    }
}

pub fn processing_marker(nb: &Notebook) -> Option<&Value> {
    nb.metadata.as_object()?.get("resplit")
}
