//! Shared per-notebook analysis state: parsed code cells plus their chain
//! index, built once and consumed by both transforms.

use crate::chains::{build_chains, ChainIndex};
use crate::notebook::Notebook;
use crate::python::{parse_cell, ParsedCell};

#[derive(Debug, Clone)]
pub struct NotebookAnalysis {
    /// One entry per code cell, in notebook order; `cell_index` is the index
    /// into the full notebook cell list.
    pub cells: Vec<ParsedCell>,
    pub chains: ChainIndex,
}

impl NotebookAnalysis {
    pub fn of(nb: &Notebook) -> Self {
        let cells: Vec<ParsedCell> = nb
            .cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_code())
            .map(|(i, c)| parse_cell(i, &c.source))
            .collect();
        let chains = build_chains(&cells);
        NotebookAnalysis { cells, chains }
    }

    /// The parsed cell for a notebook cell index, if it is a code cell.
    pub fn cell(&self, cell_index: usize) -> Option<&ParsedCell> {
        self.cells.iter().find(|c| c.cell_index == cell_index)
    }
}
