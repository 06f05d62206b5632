//! Per-cell link statistics and the inter-cell link ratio driving merges.

use crate::chains::ChainIndex;
use serde::Serialize;

/// Link counts for one cell (or one contiguous cell range treated as a cell).
///
/// `r_inter = n_inter / (n_intra + n_inter)`, with the convention that a cell
/// with no links at all has `r_inter = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellLinkStats {
    pub cell_index: usize,
    pub n_intra: usize,
    pub n_inter: usize,
    pub r_inter: f64,
}

fn ratio(n_intra: usize, n_inter: usize) -> f64 {
    let total = n_intra + n_inter;
    if total == 0 {
        0.0
    } else {
        n_inter as f64 / total as f64
    }
}

pub fn cell_stats(cell_index: usize, chains: &ChainIndex) -> CellLinkStats {
    let (intra, inter) = chains.links_within(cell_index);
    CellLinkStats {
        cell_index,
        n_intra: intra.len(),
        n_inter: inter.len(),
        r_inter: ratio(intra.len(), inter.len()),
    }
}

/// Statistics for a group of cells as if they were a single cell: links fully
/// inside the group count as intra, links with exactly one endpoint in the
/// group count as inter.
///
/// `cell_indices` must be the notebook indices of a range of cells that is
/// contiguous in code-cell order.
pub fn merged_stats(cell_indices: &[usize], chains: &ChainIndex) -> CellLinkStats {
    let mut n_intra = 0;
    let mut n_inter = 0;
    for link in chains.links() {
        let def_in = cell_indices.contains(&link.def_at.cell_index);
        let use_in = cell_indices.contains(&link.use_at.cell_index);
        match (def_in, use_in) {
            (true, true) => n_intra += 1,
            (true, false) | (false, true) => n_inter += 1,
            (false, false) => {}
        }
    }
    CellLinkStats {
        cell_index: cell_indices.first().copied().unwrap_or(0),
        n_intra,
        n_inter,
        r_inter: ratio(n_intra, n_inter),
    }
}
