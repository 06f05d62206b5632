//! Split planning and application: carve cells at boundaries no intra-cell
//! chain crosses, collecting fragments bottom-up so trailing output
//! statements stay attached to the code that produced them.

use crate::analysis::NotebookAnalysis;
use crate::chains::ChainIndex;
use crate::notebook::{Cell, Notebook};
use crate::pipeline::{SplitRecord, TransformError};
use crate::python::ParsedCell;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    /// Minimum number of lines a fragment must collect before a boundary is
    /// committed.
    pub min_split_lines: usize,
    /// When the leftover top fragment is shorter than the minimum, drop the
    /// highest committed boundary so the remainder joins the fragment below.
    pub attach_remainder_down: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            min_split_lines: 3,
            attach_remainder_down: true,
        }
    }
}

/// For each split cell (by notebook cell index), the statement indices after
/// which a new cell begins, strictly increasing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitPlan {
    pub boundaries: BTreeMap<usize, Vec<usize>>,
}

impl SplitPlan {
    pub fn is_empty(&self) -> bool {
        self.boundaries.is_empty()
    }
}

/// Boundary `k` (between statements `k` and `k + 1`) is a potential split
/// point iff no intra-cell link spans it. Opaque statements carry no links,
/// so boundaries around them are governed by their neighbors alone.
pub fn potential_split_points(cell: &ParsedCell, chains: &ChainIndex) -> BTreeSet<usize> {
    let n = cell.statements.len();
    if cell.parse_failed || n < 2 {
        return BTreeSet::new();
    }
    let mut potential: BTreeSet<usize> = (0..n - 1).collect();
    for link in chains.intra_links(cell.cell_index) {
        for k in link.def_at.stmt_index..link.use_at.stmt_index {
            potential.remove(&k);
        }
    }
    potential
}

fn fragment_lines(cell: &ParsedCell, first_stmt: usize, last_stmt: usize) -> usize {
    let first = cell.statements[first_stmt].first_line;
    let last = cell.statements[last_stmt].last_line;
    last - first + 1
}

/// Walk boundaries bottom-up, committing one whenever the fragment collected
/// so far reaches `min_split_lines`; afterwards, an undersized top remainder
/// is attached downward by dropping the highest committed boundary.
pub fn plan_split(cell: &ParsedCell, chains: &ChainIndex, cfg: &SplitConfig) -> Vec<usize> {
    let n = cell.statements.len();
    if cell.parse_failed || n < 2 {
        return Vec::new();
    }
    let potential = potential_split_points(cell, chains);

    let mut committed: Vec<usize> = Vec::new();
    let mut fragment_end = n - 1;
    for k in (0..n - 1).rev() {
        if potential.contains(&k) && fragment_lines(cell, k + 1, fragment_end) >= cfg.min_split_lines
        {
            committed.push(k);
            fragment_end = k;
        }
    }
    committed.reverse();

    if cfg.attach_remainder_down {
        if let Some(&first_boundary) = committed.first() {
            if fragment_lines(cell, 0, first_boundary) < cfg.min_split_lines {
                committed.remove(0);
            }
        }
    }

    committed
}

/// Plan splits for every code cell of the notebook.
pub fn plan_splits(analysis: &NotebookAnalysis, cfg: &SplitConfig) -> SplitPlan {
    let mut boundaries = BTreeMap::new();
    for cell in &analysis.cells {
        let cuts = plan_split(cell, &analysis.chains, cfg);
        if !cuts.is_empty() {
            boundaries.insert(cell.cell_index, cuts);
        }
    }
    SplitPlan { boundaries }
}

/// Replace each split cell, in place, by its fragments in top-to-bottom
/// order. Fragment sources are the original lines of their statements
/// (interior blank and comment lines included); blank lines between fragments
/// are dropped. The bottom fragment inherits the cell's outputs, execution
/// count, and id; every fragment inherits the cell metadata.
pub fn apply_splits(
    nb: &Notebook,
    analysis: &NotebookAnalysis,
    plan: &SplitPlan,
) -> Result<(Notebook, Vec<SplitRecord>), TransformError> {
    for (&cell_index, cuts) in &plan.boundaries {
        let parsed = match nb.cells.get(cell_index) {
            Some(cell) if cell.is_code() => analysis.cell(cell_index),
            _ => None,
        };
        let Some(parsed) = parsed else {
            return Err(TransformError::StalePlan(format!(
                "split plan names cell {cell_index}, which is not an analyzed code cell"
            )));
        };
        let n = parsed.statements.len();
        let increasing = cuts.windows(2).all(|w| w[0] < w[1]);
        if cuts.is_empty() || !increasing || cuts.iter().any(|&k| k + 1 >= n) {
            return Err(TransformError::StalePlan(format!(
                "split boundaries {cuts:?} do not fit cell {cell_index} with {n} statements"
            )));
        }
    }

    let mut out_cells: Vec<Cell> = Vec::new();
    let mut records: Vec<SplitRecord> = Vec::new();
    for (i, cell) in nb.cells.iter().enumerate() {
        let Some(cuts) = plan.boundaries.get(&i) else {
            out_cells.push(cell.clone());
            continue;
        };
        let parsed = analysis.cell(i).expect("validated above");
        let lines: Vec<&str> = cell.source.split('\n').collect();
        let n = parsed.statements.len();

        let mut fragment_ranges: Vec<(usize, usize)> = Vec::new();
        let mut start_stmt = 0;
        for &k in cuts {
            fragment_ranges.push((start_stmt, k));
            start_stmt = k + 1;
        }
        fragment_ranges.push((start_stmt, n - 1));

        let mut fragment_indices = Vec::with_capacity(fragment_ranges.len());
        let last_fragment = fragment_ranges.len() - 1;
        for (f, &(lo, hi)) in fragment_ranges.iter().enumerate() {
            let first_line = parsed.statements[lo].first_line;
            let last_line = parsed.statements[hi].last_line;
            let source = lines[first_line - 1..last_line].join("\n");
            let mut fragment = Cell::code(source);
            fragment.metadata = cell.metadata.clone();
            if f == last_fragment {
                fragment.outputs = cell.outputs.clone();
                fragment.execution_count = cell.execution_count;
                fragment.cell_id = cell.cell_id.clone();
                fragment.extra = cell.extra.clone();
            } else {
                fragment.cell_id = cell.cell_id.as_ref().map(|id| format!("{id}-s{f}"));
            }
            fragment_indices.push(out_cells.len());
            out_cells.push(fragment);
        }
        records.push(SplitRecord {
            cell_index_before: i,
            fragment_indices_after: fragment_indices,
        });
    }

    let mut out = nb.clone();
    out.cells = out_cells;
    Ok((out, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::NotebookAnalysis;
    use serde_json::json;

    fn analyzed(source: &str) -> (Notebook, NotebookAnalysis) {
        let nb = Notebook::new(vec![Cell::code(source)]);
        let analysis = NotebookAnalysis::of(&nb);
        (nb, analysis)
    }

    #[test]
    fn worked_example_boundary_and_no_split() {
        let (_, analysis) = analyzed("a = 2 + 2\nb = a / 2\nc = 16 * 2");
        let cell = &analysis.cells[0];
        let potential = potential_split_points(cell, &analysis.chains);
        assert_eq!(potential.into_iter().collect::<Vec<_>>(), vec![1]);
        assert!(plan_split(cell, &analysis.chains, &SplitConfig::default()).is_empty());
    }

    #[test]
    fn fully_chained_cell_has_no_boundaries() {
        let (_, analysis) = analyzed("a = 1\nb = a\nc = b\nd = c");
        let cell = &analysis.cells[0];
        assert!(potential_split_points(cell, &analysis.chains).is_empty());
    }

    #[test]
    fn independent_statements_open_every_boundary() {
        let (_, analysis) = analyzed("a = 1\nb = 2\nc = 3\nd = 4");
        let cell = &analysis.cells[0];
        let potential = potential_split_points(cell, &analysis.chains);
        assert_eq!(potential.into_iter().collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn six_lines_split_at_the_single_boundary() {
        // One potential boundary after the third statement.
        let (_, analysis) = analyzed("a = 1\nb = a\nc = b\nx = 9\ny = x\nz = y");
        let cell = &analysis.cells[0];
        let potential = potential_split_points(cell, &analysis.chains);
        assert_eq!(potential.into_iter().collect::<Vec<_>>(), vec![2]);
        let cuts = plan_split(cell, &analysis.chains, &SplitConfig::default());
        assert_eq!(cuts, vec![2]);
    }

    #[test]
    fn eight_independent_lines_bottom_up_grouping() {
        let src = "a0 = 0\na1 = 1\na2 = 2\na3 = 3\na4 = 4\na5 = 5\na6 = 6\na7 = 7";
        let (_, analysis) = analyzed(src);
        let cell = &analysis.cells[0];
        // Without remainder attachment the bottom-up walk commits boundaries
        // after statements 1 and 4: fragments of 2, 3, and 3 lines.
        let keep_remainder = SplitConfig {
            attach_remainder_down: false,
            ..SplitConfig::default()
        };
        assert_eq!(plan_split(cell, &analysis.chains, &keep_remainder), vec![1, 4]);
        // The default attaches the 2-line remainder downward: fragments 5 + 3.
        assert_eq!(
            plan_split(cell, &analysis.chains, &SplitConfig::default()),
            vec![4]
        );
    }

    #[test]
    fn bottom_fragment_keeps_outputs() {
        let mut cell = Cell::code("a = 1\nb = a\nc = b\nx = 9\ny = x\nz = y");
        cell.outputs = vec![json!({"output_type": "stream", "text": ["ok"]})];
        cell.execution_count = Some(7);
        cell.cell_id = Some("orig".into());
        let nb = Notebook::new(vec![cell]);
        let analysis = NotebookAnalysis::of(&nb);
        let plan = plan_splits(&analysis, &SplitConfig::default());
        let (out, records) = apply_splits(&nb, &analysis, &plan).unwrap();
        assert_eq!(out.cells.len(), 2);
        assert_eq!(out.cells[0].source, "a = 1\nb = a\nc = b");
        assert_eq!(out.cells[1].source, "x = 9\ny = x\nz = y");
        assert!(out.cells[0].outputs.is_empty());
        assert_eq!(out.cells[0].execution_count, None);
        assert_eq!(out.cells[1].outputs.len(), 1);
        assert_eq!(out.cells[1].execution_count, Some(7));
        assert_eq!(out.cells[1].cell_id.as_deref(), Some("orig"));
        assert_eq!(out.cells[0].cell_id.as_deref(), Some("orig-s0"));
        assert_eq!(records[0].cell_index_before, 0);
        assert_eq!(records[0].fragment_indices_after, vec![0, 1]);
    }

    #[test]
    fn blank_lines_between_fragments_are_dropped() {
        let src = "a = 1\nb = a\nc = b\n\n\nx = 9\ny = x\nz = y";
        let (nb, analysis) = analyzed(src);
        let plan = plan_splits(&analysis, &SplitConfig::default());
        let (out, _) = apply_splits(&nb, &analysis, &plan).unwrap();
        assert_eq!(out.cells.len(), 2);
        assert_eq!(out.cells[0].source, "a = 1\nb = a\nc = b");
        assert_eq!(out.cells[1].source, "x = 9\ny = x\nz = y");
    }

    #[test]
    fn empty_plan_is_identity() {
        let (nb, analysis) = analyzed("a = 1");
        let (out, records) = apply_splits(&nb, &analysis, &SplitPlan::default()).unwrap();
        assert_eq!(out, nb);
        assert!(records.is_empty());
    }

    #[test]
    fn parse_failed_cells_are_never_split() {
        let (_, analysis) = analyzed("def broken(:\n    pass\n");
        assert!(analysis.cells[0].parse_failed);
        assert!(plan_split(&analysis.cells[0], &analysis.chains, &SplitConfig::default()).is_empty());
    }

    #[test]
    fn stale_plan_rejected() {
        let (nb, analysis) = analyzed("a = 1\nb = 2");
        let plan = SplitPlan {
            boundaries: BTreeMap::from([(0, vec![5])]),
        };
        assert!(matches!(
            apply_splits(&nb, &analysis, &plan),
            Err(TransformError::StalePlan(_))
        ));
    }

    #[test]
    fn inter_cell_links_do_not_block_splitting() {
        let nb = Notebook::new(vec![
            Cell::code("shared = 1"),
            Cell::code("p = shared\nq = 2\nr = 3\ns = 4\nt = 5\nu = 6"),
        ]);
        let analysis = NotebookAnalysis::of(&nb);
        let cell = &analysis.cells[1];
        let potential = potential_split_points(cell, &analysis.chains);
        assert_eq!(potential.len(), 5);
        let cuts = plan_split(cell, &analysis.chains, &SplitConfig::default());
        assert_eq!(cuts, vec![2]);
    }
}
