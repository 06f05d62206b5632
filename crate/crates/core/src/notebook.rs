//! Lossless reading and writing of Jupyter notebooks (nbformat 4).
//!
//! The in-memory model keeps cell order, per-cell metadata, outputs, and any
//! unrecognized JSON keys so a parse → serialize round trip is value-preserving.
//! Cell source is normalized to a single string internally; the serializer
//! re-splits it into the list-of-lines form notebooks use on disk.

use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NotebookError {
    #[error("malformed notebook JSON: {0}")]
    MalformedJson(String),
    #[error("unsupported nbformat major version {0} (only version 4 is supported)")]
    UnsupportedFormat(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Code,
    Markdown,
    Raw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub kind: CellKind,
    /// Full source text with `\n` separators, exactly as joined from the file.
    pub source: String,
    /// Opaque output objects; always empty for non-code cells.
    pub outputs: Vec<Value>,
    /// Only meaningful for code cells; `None` maps to JSON null on disk.
    pub execution_count: Option<i64>,
    pub metadata: Value,
    pub cell_id: Option<String>,
    /// Unrecognized cell-level keys (e.g. markdown attachments), preserved verbatim.
    pub extra: Map<String, Value>,
}

impl Cell {
    pub fn code(source: impl Into<String>) -> Self {
        Cell {
            kind: CellKind::Code,
            source: source.into(),
            outputs: Vec::new(),
            execution_count: None,
            metadata: Value::Object(Map::new()),
            cell_id: None,
            extra: Map::new(),
        }
    }

    pub fn markdown(source: impl Into<String>) -> Self {
        Cell {
            kind: CellKind::Markdown,
            ..Cell::code(source)
        }
    }

    pub fn raw(source: impl Into<String>) -> Self {
        Cell {
            kind: CellKind::Raw,
            ..Cell::code(source)
        }
    }

    pub fn is_code(&self) -> bool {
        self.kind == CellKind::Code
    }

    pub fn line_count(&self) -> usize {
        line_count(&self.source)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Notebook {
    pub cells: Vec<Cell>,
    pub format_major: i64,
    pub format_minor: i64,
    pub metadata: Value,
    /// Unrecognized top-level keys, preserved verbatim.
    pub extra: Map<String, Value>,
}

impl Notebook {
    pub fn new(cells: Vec<Cell>) -> Self {
        Notebook {
            cells,
            format_major: 4,
            format_minor: 5,
            metadata: Value::Object(Map::new()),
            extra: Map::new(),
        }
    }

    /// Indices (into `cells`) of the code cells, in notebook order.
    pub fn code_cell_indices(&self) -> Vec<usize> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_code())
            .map(|(i, _)| i)
            .collect()
    }
}

/// Number of physical source lines after stripping trailing blank or
/// whitespace-only lines. Comment lines and interior blank lines count.
pub fn line_count(source: &str) -> usize {
    let mut lines: Vec<&str> = source.split('\n').collect();
    while let Some(last) = lines.last() {
        if last.trim().is_empty() {
            lines.pop();
        } else {
            break;
        }
    }
    lines.len()
}

pub fn parse_notebook(bytes: &[u8]) -> Result<Notebook, NotebookError> {
    let root: Value = serde_json::from_slice(bytes)
        .map_err(|e| NotebookError::MalformedJson(e.to_string()))?;
    let Value::Object(mut root) = root else {
        return Err(NotebookError::MalformedJson(
            "top level is not a JSON object".into(),
        ));
    };

    let format_major = root
        .remove("nbformat")
        .and_then(|v| v.as_i64())
        .ok_or_else(|| NotebookError::MalformedJson("missing integer \"nbformat\"".into()))?;
    if format_major != 4 {
        return Err(NotebookError::UnsupportedFormat(format_major));
    }
    let format_minor = root
        .remove("nbformat_minor")
        .and_then(|v| v.as_i64())
        .ok_or_else(|| {
            NotebookError::MalformedJson("missing integer \"nbformat_minor\"".into())
        })?;
    let metadata = root
        .remove("metadata")
        .unwrap_or_else(|| Value::Object(Map::new()));
    let cells_value = root
        .remove("cells")
        .ok_or_else(|| NotebookError::MalformedJson("missing \"cells\"".into()))?;
    let Value::Array(cell_values) = cells_value else {
        return Err(NotebookError::MalformedJson("\"cells\" is not an array".into()));
    };

    let mut cells = Vec::with_capacity(cell_values.len());
    for (i, v) in cell_values.into_iter().enumerate() {
        cells.push(parse_cell_value(v).map_err(|m| {
            NotebookError::MalformedJson(format!("cell {i}: {m}"))
        })?);
    }

    Ok(Notebook {
        cells,
        format_major,
        format_minor,
        metadata,
        extra: root,
    })
}

fn parse_cell_value(value: Value) -> Result<Cell, String> {
    let Value::Object(mut obj) = value else {
        return Err("cell is not a JSON object".into());
    };
    let kind = match obj.remove("cell_type") {
        Some(Value::String(s)) => match s.as_str() {
            "code" => CellKind::Code,
            "markdown" => CellKind::Markdown,
            "raw" => CellKind::Raw,
            other => return Err(format!("unknown cell_type {other:?}")),
        },
        _ => return Err("missing string \"cell_type\"".into()),
    };
    let source = match obj.remove("source") {
        None => String::new(),
        Some(Value::String(s)) => s,
        Some(Value::Array(parts)) => {
            let mut joined = String::new();
            for p in parts {
                match p {
                    Value::String(s) => joined.push_str(&s),
                    _ => return Err("source line is not a string".into()),
                }
            }
            joined
        }
        Some(_) => return Err("source is neither string nor array".into()),
    };
    let metadata = obj
        .remove("metadata")
        .unwrap_or_else(|| Value::Object(Map::new()));
    let cell_id = match obj.remove("id") {
        Some(Value::String(s)) => Some(s),
        _ => None,
    };

    let (outputs, execution_count) = if kind == CellKind::Code {
        let outputs = match obj.remove("outputs") {
            Some(Value::Array(outs)) => outs,
            _ => Vec::new(),
        };
        let execution_count = obj.remove("execution_count").and_then(|v| v.as_i64());
        (outputs, execution_count)
    } else {
        // Markdown/raw cells carry neither; drop anything a nonconforming
        // writer left behind.
        obj.remove("outputs");
        obj.remove("execution_count");
        (Vec::new(), None)
    };

    Ok(Cell {
        kind,
        source,
        outputs,
        execution_count,
        metadata,
        cell_id,
        extra: obj,
    })
}

/// Split a normalized source string back into nbformat's list-of-lines form,
/// each line keeping its trailing `\n` except possibly the last.
fn source_to_lines(source: &str) -> Vec<Value> {
    if source.is_empty() {
        return Vec::new();
    }
    let mut lines = Vec::new();
    let mut start = 0;
    for (i, b) in source.bytes().enumerate() {
        if b == b'\n' {
            lines.push(Value::String(source[start..=i].to_string()));
            start = i + 1;
        }
    }
    if start < source.len() {
        lines.push(Value::String(source[start..].to_string()));
    }
    lines
}

fn cell_to_value(cell: &Cell) -> Value {
    let mut obj = Map::new();
    let kind = match cell.kind {
        CellKind::Code => "code",
        CellKind::Markdown => "markdown",
        CellKind::Raw => "raw",
    };
    obj.insert("cell_type".into(), Value::String(kind.into()));
    if let Some(id) = &cell.cell_id {
        obj.insert("id".into(), Value::String(id.clone()));
    }
    obj.insert("metadata".into(), cell.metadata.clone());
    if cell.kind == CellKind::Code {
        obj.insert(
            "execution_count".into(),
            cell.execution_count.map_or(Value::Null, Value::from),
        );
        obj.insert("outputs".into(), Value::Array(cell.outputs.clone()));
    }
    obj.insert("source".into(), Value::Array(source_to_lines(&cell.source)));
    for (k, v) in &cell.extra {
        obj.insert(k.clone(), v.clone());
    }
    Value::Object(obj)
}

/// Serialize in Jupyter's canonical on-disk style: sorted keys, one-space
/// indent, trailing newline. `parse_notebook(serialize_notebook(nb))` yields a
/// notebook structurally equal to `nb`.
pub fn serialize_notebook(nb: &Notebook) -> String {
    let mut root = Map::new();
    root.insert(
        "cells".into(),
        Value::Array(nb.cells.iter().map(cell_to_value).collect()),
    );
    root.insert("metadata".into(), nb.metadata.clone());
    root.insert("nbformat".into(), Value::from(nb.format_major));
    root.insert("nbformat_minor".into(), Value::from(nb.format_minor));
    for (k, v) in &nb.extra {
        root.insert(k.clone(), v.clone());
    }

    let mut buf = Vec::new();
    let formatter = serde_json::ser::PrettyFormatter::with_indent(b" ");
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, formatter);
    serde::Serialize::serialize(&Value::Object(root), &mut ser)
        .expect("JSON serialization of an in-memory value cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}
