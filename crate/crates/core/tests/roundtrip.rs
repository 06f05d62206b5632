//! Parse → serialize round trips over the fixture corpus and randomized
//! notebooks.

mod common;

use proptest::prelude::*;
use resplit_core::notebook::{line_count, parse_notebook, serialize_notebook, Cell, Notebook};
use resplit_core::pipeline::{run_transform, AnalysisConfig, TransformKind};

fn fixtures() -> Vec<(String, Vec<u8>)> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .expect("fixtures directory exists")
        .map(|e| e.expect("fixture entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "ipynb"))
        .collect();
    files.sort();
    assert!(!files.is_empty());
    files
        .into_iter()
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).expect("fixture readable"),
            )
        })
        .collect()
}

#[test]
fn fixtures_round_trip_structurally() {
    for (name, bytes) in fixtures() {
        let nb = parse_notebook(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        let reparsed = parse_notebook(serialize_notebook(&nb).as_bytes())
            .unwrap_or_else(|e| panic!("{name} reserialized: {e}"));
        assert_eq!(nb, reparsed, "{name} did not round-trip");
    }
}

#[test]
fn fixtures_survive_noop_transform() {
    for (name, bytes) in fixtures() {
        let nb = parse_notebook(&bytes).unwrap();
        let (out, log) =
            run_transform(&nb, TransformKind::None, &AnalysisConfig::default()).unwrap();
        assert_eq!(nb, out, "{name} changed under a no-op transform");
        assert_eq!(log.counters.cells_before, log.counters.cells_after);
    }
}

#[test]
fn fixture_cell_order_and_sources_preserved() {
    let bytes = std::fs::read(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/fixtures/list_vs_string.ipynb"
    ))
    .unwrap();
    let nb = parse_notebook(&bytes).unwrap();
    assert_eq!(nb.cells.len(), 4);
    assert_eq!(nb.cells[0].source, "a = 1\nb = a + 1");
    assert_eq!(nb.cells[1].source, "plain string source");
    assert_eq!(nb.cells[2].source, "raw text\nsecond line");
    assert_eq!(nb.cells[3].source, "x = 'no trailing newline'");
    assert!(nb.extra.contains_key("unknown_top_level"));
    let reparsed = parse_notebook(serialize_notebook(&nb).as_bytes()).unwrap();
    assert_eq!(
        reparsed.extra.get("unknown_top_level"),
        nb.extra.get("unknown_top_level")
    );
    assert!(reparsed.cells[1].extra.contains_key("attachments"));
}

// --- randomized round trips -------------------------------------------------

fn arb_source() -> impl Strategy<Value = String> {
    proptest::collection::vec("[ -~]{0,24}", 0..6).prop_map(|lines| lines.join("\n"))
}

fn arb_cell() -> impl Strategy<Value = Cell> {
    (0..3u8, arb_source(), any::<bool>(), proptest::option::of(0..50i64)).prop_map(
        |(kind, source, with_output, count)| match kind {
            0 => {
                let mut cell = Cell::code(source);
                if with_output {
                    cell.outputs = vec![serde_json::json!({
                        "output_type": "stream", "name": "stdout", "text": ["hi\n"]
                    })];
                }
                cell.execution_count = count;
                cell
            }
            1 => Cell::markdown(source),
            _ => Cell::raw(source),
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn random_notebooks_round_trip(cells in proptest::collection::vec(arb_cell(), 0..12)) {
        let nb = Notebook::new(cells);
        let reparsed = parse_notebook(serialize_notebook(&nb).as_bytes()).unwrap();
        prop_assert_eq!(nb, reparsed);
    }

    #[test]
    fn line_count_ignores_trailing_whitespace_lines(
        source in arb_source(),
        tail in proptest::collection::vec(" {0,4}", 0..4),
    ) {
        let mut padded = source.clone();
        for t in &tail {
            padded.push('\n');
            padded.push_str(t);
        }
        prop_assert_eq!(line_count(&source), line_count(&padded));
    }
}

#[test]
fn serialization_is_byte_deterministic() {
    let bytes = std::fs::read(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/fixtures/analysis.ipynb"
    ))
    .unwrap();
    let nb = parse_notebook(&bytes).unwrap();
    assert_eq!(serialize_notebook(&nb), serialize_notebook(&nb));
}
