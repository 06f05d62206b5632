//! Aggregate statistics over a corpus: mean code-cell length, mean cells per
//! notebook, and the inter-cell link ratio histogram, optionally after
//! applying a transform to every notebook.

use crate::analysis::NotebookAnalysis;
use crate::metrics::cell_stats;
use crate::notebook::{line_count, Notebook};
use crate::pipeline::{run_transform, AnalysisConfig, TransformKind};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsOptions {
    pub histogram_bins: usize,
    /// Include cells without any link (r_inter = 0 by convention) in the
    /// histogram. Off by default: the histogram describes cells eligible for
    /// merging, which also restricts to cells under the merge size threshold.
    pub include_zero_link_cells: bool,
    /// Count markdown/raw cells in the mean-cells-per-notebook metric.
    pub include_markdown_in_counts: bool,
}

impl Default for StatsOptions {
    fn default() -> Self {
        StatsOptions {
            histogram_bins: 20,
            include_zero_link_cells: false,
            include_markdown_in_counts: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub n_notebooks: usize,
    /// Notebooks whose transform failed and were skipped.
    pub n_failed: usize,
    /// Mean code-cell length in lines, pooled over all code cells.
    pub mean_cell_length: f64,
    pub mean_cells_per_notebook: f64,
    pub ratio_histogram: Vec<HistogramBin>,
}

struct NotebookContribution {
    cells_counted: usize,
    code_cells: usize,
    code_lines: usize,
    histogram: Vec<u64>,
}

/// Apply the selected transform to every notebook and aggregate. Failures are
/// counted and skipped, never fatal.
pub fn corpus_stats(
    notebooks: &[Notebook],
    transform: TransformKind,
    cfg: &AnalysisConfig,
    opts: &StatsOptions,
) -> CorpusStats {
    let bins = opts.histogram_bins.max(1);
    let contributions: Vec<Option<NotebookContribution>> = notebooks
        .par_iter()
        .map(|nb| contribution(nb, transform, cfg, opts, bins))
        .collect();

    let mut histogram = vec![0u64; bins];
    let mut cells_counted = 0usize;
    let mut code_cells = 0usize;
    let mut code_lines = 0usize;
    let mut n_ok = 0usize;
    for c in contributions.into_iter().flatten() {
        n_ok += 1;
        cells_counted += c.cells_counted;
        code_cells += c.code_cells;
        code_lines += c.code_lines;
        for (slot, count) in histogram.iter_mut().zip(&c.histogram) {
            *slot += count;
        }
    }

    let width = 1.0 / bins as f64;
    CorpusStats {
        n_notebooks: n_ok,
        n_failed: notebooks.len() - n_ok,
        mean_cell_length: if code_cells > 0 {
            code_lines as f64 / code_cells as f64
        } else {
            0.0
        },
        mean_cells_per_notebook: if n_ok > 0 {
            cells_counted as f64 / n_ok as f64
        } else {
            0.0
        },
        ratio_histogram: histogram
            .into_iter()
            .enumerate()
            .map(|(i, count)| HistogramBin {
                lo: i as f64 * width,
                hi: if i + 1 == bins { 1.0 } else { (i + 1) as f64 * width },
                count,
            })
            .collect(),
    }
}

fn contribution(
    nb: &Notebook,
    transform: TransformKind,
    cfg: &AnalysisConfig,
    opts: &StatsOptions,
    bins: usize,
) -> Option<NotebookContribution> {
    let transformed = match transform {
        TransformKind::None => None,
        kind => Some(run_transform(nb, kind, cfg).ok()?.0),
    };
    let nb = transformed.as_ref().unwrap_or(nb);
    let analysis = NotebookAnalysis::of(nb);

    let mut histogram = vec![0u64; bins];
    let mut code_cells = 0usize;
    let mut code_lines = 0usize;
    for cell in nb.cells.iter().filter(|c| c.is_code()) {
        code_cells += 1;
        code_lines += line_count(&cell.source);
    }
    for parsed in &analysis.cells {
        let stats = cell_stats(parsed.cell_index, &analysis.chains);
        let has_links = stats.n_intra + stats.n_inter > 0;
        let lines = line_count(&nb.cells[parsed.cell_index].source);
        let eligible = (has_links || opts.include_zero_link_cells)
            && lines < cfg.merge.max_merge_lines;
        if eligible {
            let bin = ((stats.r_inter * bins as f64) as usize).min(bins - 1);
            histogram[bin] += 1;
        }
    }

    let cells_counted = if opts.include_markdown_in_counts {
        nb.cells.len()
    } else {
        code_cells
    };
    Some(NotebookContribution {
        cells_counted,
        code_cells,
        code_lines,
        histogram,
    })
}
