//! Merge planning and application: unite consecutive, small, link-compatible
//! code cells.

use crate::analysis::NotebookAnalysis;
use crate::metrics::{cell_stats, merged_stats};
use crate::notebook::{line_count, Cell, Notebook};
use crate::pipeline::{MergeRecord, TransformError};
use serde::{Deserialize, Serialize};
use std::ops::Range;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MergeConfig {
    /// Cells (and the growing group) must stay under this many lines.
    pub max_merge_lines: usize,
    /// Maximum allowed change of the inter-cell link ratio caused by a merge.
    pub max_ratio_change: f64,
    /// Markdown/raw cells between code cells close the current group.
    pub barrier_on_markdown: bool,
    /// When set, a cell carrying outputs can only be the last member of a
    /// group, so outputs never end up buried mid-cell.
    pub preserve_output_boundaries: bool,
    /// Compare the merged ratio only against the growing group instead of
    /// against both sides.
    pub one_sided_ratio: bool,
}

impl Default for MergeConfig {
    fn default() -> Self {
        MergeConfig {
            max_merge_lines: 5,
            max_ratio_change: 0.1,
            barrier_on_markdown: true,
            preserve_output_boundaries: false,
            one_sided_ratio: false,
        }
    }
}

/// Contiguous runs of code cells to merge, as ranges over the code-cell
/// ordinals of the notebook the plan was made for. Every range has length
/// at least 2.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergePlan {
    pub groups: Vec<Range<usize>>,
}

impl MergePlan {
    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

fn strip_trailing_blank_lines(source: &str) -> &str {
    let mut end = source.len();
    for line in source.split_inclusive('\n').rev() {
        if line.trim().is_empty() {
            end -= line.len();
        } else {
            break;
        }
    }
    let trimmed = &source[..end];
    trimmed.strip_suffix('\n').unwrap_or(trimmed)
}

/// Join cell sources with single newlines, stripping each constituent's
/// trailing blank lines first.
pub fn merge_sources<'a>(sources: impl IntoIterator<Item = &'a str>) -> String {
    sources
        .into_iter()
        .map(strip_trailing_blank_lines)
        .collect::<Vec<_>>()
        .join("\n")
}

/// Greedy left-to-right pass over the code cells: the current group absorbs
/// the next code cell while every criterion holds, otherwise it is closed
/// (emitted if it has at least two members) and a new group starts.
pub fn plan_merges(nb: &Notebook, analysis: &NotebookAnalysis, cfg: &MergeConfig) -> MergePlan {
    let code_indices = nb.code_cell_indices();
    let mut groups = Vec::new();
    if code_indices.is_empty() {
        return MergePlan { groups };
    }

    let parse_failed = |nb_index: usize| {
        analysis
            .cell(nb_index)
            .map(|c| c.parse_failed)
            .unwrap_or(false)
    };

    let mut group_start = 0usize; // code ordinal
    for next in 1..code_indices.len() {
        let group = &code_indices[group_start..next];
        let candidate = code_indices[next];
        if can_extend(nb, analysis, cfg, group, candidate, parse_failed) {
            continue;
        }
        if next - group_start >= 2 {
            groups.push(group_start..next);
        }
        group_start = next;
    }
    if code_indices.len() - group_start >= 2 {
        groups.push(group_start..code_indices.len());
    }

    MergePlan { groups }
}

fn can_extend(
    nb: &Notebook,
    analysis: &NotebookAnalysis,
    cfg: &MergeConfig,
    group: &[usize],
    candidate: usize,
    parse_failed: impl Fn(usize) -> bool,
) -> bool {
    // (a) markdown/raw barrier between the group's last cell and the candidate
    let last = *group.last().expect("group is never empty");
    if cfg.barrier_on_markdown && nb.cells[last + 1..candidate].iter().any(|c| !c.is_code()) {
        return false;
    }

    // Unparseable cells have no usable metrics and merging them can invent
    // new statements; they never join a group.
    if group.iter().any(|&i| parse_failed(i)) || parse_failed(candidate) {
        return false;
    }

    // (b) size: both the group-as-merged-text and the candidate stay small
    let group_text = merge_sources(group.iter().map(|&i| nb.cells[i].source.as_str()));
    if line_count(&group_text) >= cfg.max_merge_lines
        || line_count(&nb.cells[candidate].source) >= cfg.max_merge_lines
    {
        return false;
    }

    // (c) ratio stability
    let r_group = merged_stats(group, &analysis.chains).r_inter;
    let r_candidate = cell_stats(candidate, &analysis.chains).r_inter;
    let mut extended: Vec<usize> = group.to_vec();
    extended.push(candidate);
    let r_merged = merged_stats(&extended, &analysis.chains).r_inter;
    if (r_merged - r_group).abs() > cfg.max_ratio_change {
        return false;
    }
    if !cfg.one_sided_ratio && (r_merged - r_candidate).abs() > cfg.max_ratio_change {
        return false;
    }

    // (d) output boundaries: an output-bearing cell may only close a group
    if cfg.preserve_output_boundaries && group.iter().any(|&i| !nb.cells[i].outputs.is_empty()) {
        return false;
    }

    true
}

/// Replace each planned group with a single code cell. Sources are joined by
/// single newlines (trailing blank lines of each constituent stripped),
/// outputs are concatenated, the execution count is the maximum non-null
/// constituent value, and metadata comes from the first constituent. All
/// other cells keep their relative order.
pub fn apply_merges(
    nb: &Notebook,
    plan: &MergePlan,
) -> Result<(Notebook, Vec<MergeRecord>), TransformError> {
    let code_indices = nb.code_cell_indices();
    let mut prev_end = 0usize;
    for group in &plan.groups {
        if group.len() < 2 || group.start < prev_end || group.end > code_indices.len() {
            return Err(TransformError::StalePlan(format!(
                "merge group {}..{} does not fit a notebook with {} code cells",
                group.start,
                group.end,
                code_indices.len()
            )));
        }
        prev_end = group.end;
    }

    // Notebook index → (ordinal group id) for first members; members to skip.
    let mut first_of_group = vec![None; nb.cells.len()];
    let mut absorbed = vec![false; nb.cells.len()];
    for (gid, group) in plan.groups.iter().enumerate() {
        let members = &code_indices[group.start..group.end];
        first_of_group[members[0]] = Some(gid);
        for &m in &members[1..] {
            absorbed[m] = true;
        }
    }

    let mut out_cells: Vec<Cell> = Vec::with_capacity(nb.cells.len());
    let mut records: Vec<MergeRecord> = Vec::new();
    for (i, cell) in nb.cells.iter().enumerate() {
        if absorbed[i] {
            continue;
        }
        if let Some(gid) = first_of_group[i] {
            let group = &plan.groups[gid];
            let members = &code_indices[group.start..group.end];
            let mut merged = Cell::code(merge_sources(
                members.iter().map(|&m| nb.cells[m].source.as_str()),
            ));
            merged.outputs = members
                .iter()
                .flat_map(|&m| nb.cells[m].outputs.iter().cloned())
                .collect();
            merged.execution_count = members
                .iter()
                .filter_map(|&m| nb.cells[m].execution_count)
                .max();
            merged.metadata = nb.cells[members[0]].metadata.clone();
            merged.cell_id = nb.cells[members[0]].cell_id.clone();
            merged.extra = nb.cells[members[0]].extra.clone();
            records.push(MergeRecord {
                cell_range_before: [members[0], *members.last().expect("non-empty group")],
                cell_index_after: out_cells.len(),
            });
            out_cells.push(merged);
        } else {
            out_cells.push(cell.clone());
        }
    }

    let mut out = nb.clone();
    out.cells = out_cells;
    Ok((out, records))
}
