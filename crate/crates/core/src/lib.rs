//! Core library for restructuring Jupyter notebooks around def-use chains.
//!
//! The pipeline: parse a notebook ([`notebook`]), decompose each code cell
//! into top-level statements with name events ([`python`]), link definitions
//! to uses across the whole notebook ([`chains`]), score cells by their
//! inter-cell link ratio ([`metrics`]), then merge small, link-compatible
//! neighbors ([`merge`]) and split cells at boundaries no chain crosses
//! ([`split`]). [`corpus`] adds desk-scale dataset utilities: data-science
//! filtering, token-based clone deduplication, and aggregate statistics.

pub mod analysis;
pub mod chains;
pub mod corpus;
pub mod merge;
pub mod metrics;
pub mod notebook;
pub mod pipeline;
pub mod python;
pub mod split;

pub use analysis::NotebookAnalysis;
pub use chains::{build_chains, ChainIndex, DefUseLink, StmtRef};
pub use merge::{MergeConfig, MergePlan};
pub use metrics::{cell_stats, merged_stats, CellLinkStats};
pub use notebook::{
    line_count, parse_notebook, serialize_notebook, Cell, CellKind, Notebook, NotebookError,
};
pub use pipeline::{AnalysisConfig, PassOrder, TransformKind, TransformLog};
pub use python::{parse_cell, ParsedCell, Statement};
pub use split::{SplitConfig, SplitPlan};
