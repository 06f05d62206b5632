//! Notebook-wide definition-usage links across the ordered code cells.
//!
//! Semantics are flow-insensitive and straight-line: every use of a name
//! links to the nearest statement at or before it (strictly before within the
//! same cell, or in any earlier code cell) that defines the name. A statement
//! never links to itself; uses of a name the statement also defines refer to
//! the previous definition, if any.

use crate::python::ParsedCell;
use std::collections::{BTreeMap, HashMap};

/// Location of one top-level statement: (notebook cell index, statement index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StmtRef {
    pub cell_index: usize,
    pub stmt_index: usize,
}

impl StmtRef {
    pub fn new(cell_index: usize, stmt_index: usize) -> Self {
        StmtRef {
            cell_index,
            stmt_index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DefUseLink {
    pub def_at: StmtRef,
    pub use_at: StmtRef,
    pub name: String,
}

/// All def-use links of a notebook, with a per-cell index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChainIndex {
    links: Vec<DefUseLink>,
    by_cell: BTreeMap<usize, Vec<usize>>,
}

impl ChainIndex {
    pub fn links(&self) -> &[DefUseLink] {
        &self.links
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    /// Links touching the given cell, partitioned into those fully inside it
    /// and those with exactly one endpoint in it.
    pub fn links_within(&self, cell_index: usize) -> (Vec<&DefUseLink>, Vec<&DefUseLink>) {
        let mut intra = Vec::new();
        let mut inter = Vec::new();
        if let Some(indices) = self.by_cell.get(&cell_index) {
            for &i in indices {
                let link = &self.links[i];
                if link.def_at.cell_index == link.use_at.cell_index {
                    intra.push(link);
                } else {
                    inter.push(link);
                }
            }
        }
        (intra, inter)
    }

    /// Links with both endpoints inside one cell.
    pub fn intra_links(&self, cell_index: usize) -> Vec<&DefUseLink> {
        self.links_within(cell_index).0
    }
}

/// Build the chain index for cells given in notebook order (code cells only).
///
/// For every use of a name, exactly one link is emitted to the nearest
/// preceding definition; builtins, undefined names, and names defined only in
/// opaque statements yield no link. Links are a set: one entry per
/// (definition statement, use statement, name) triple.
pub fn build_chains(parsed_cells: &[ParsedCell]) -> ChainIndex {
    let mut last_def: HashMap<&str, StmtRef> = HashMap::new();
    let mut links: Vec<DefUseLink> = Vec::new();

    for cell in parsed_cells {
        for stmt in &cell.statements {
            let use_at = StmtRef::new(cell.cell_index, stmt.index_in_cell);
            for name in &stmt.uses {
                if let Some(&def_at) = last_def.get(name.as_str()) {
                    links.push(DefUseLink {
                        def_at,
                        use_at,
                        name: name.clone(),
                    });
                }
            }
            for name in &stmt.defs {
                last_def.insert(name.as_str(), use_at);
            }
        }
    }

    // Set semantics and deterministic order.
    links.sort();
    links.dedup();

    let mut by_cell: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, link) in links.iter().enumerate() {
        by_cell.entry(link.def_at.cell_index).or_default().push(i);
        if link.use_at.cell_index != link.def_at.cell_index {
            by_cell.entry(link.use_at.cell_index).or_default().push(i);
        }
    }

    ChainIndex { links, by_cell }
}
