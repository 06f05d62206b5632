//! Shared generators and independent oracles for the integration and
//! acceptance suites.

#![allow(dead_code)]

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use resplit_core::chains::StmtRef;
use resplit_core::notebook::{Cell, Notebook};
use resplit_core::python::{parse_cell, ParsedCell, Statement};
use serde_json::json;
use std::collections::BTreeSet;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const IMPORT_POOL: [(&str, &str); 6] = [
    ("numpy", "np"),
    ("pandas", "pd"),
    ("torch", "tt"),
    ("sklearn.svm", "sv"),
    ("nltk", "nl"),
    ("spacy", "sp"),
];

// ---------------------------------------------------------------------------
// Randomized Python notebooks: messy, parser-level realism.
// ---------------------------------------------------------------------------

/// A random notebook mixing plain assignments, imports, compounds, magics,
/// comments, markdown, and the occasional unparseable cell.
pub fn random_python_notebook(rng: &mut ChaCha8Rng) -> Notebook {
    let n_cells = rng.gen_range(1..=8);
    let mut defined: Vec<String> = Vec::new();
    let mut counter = 0usize;
    let mut cells = Vec::new();

    for _ in 0..n_cells {
        let roll: f64 = rng.gen();
        if roll < 0.10 {
            cells.push(Cell::markdown("## section\nnotes"));
            continue;
        }
        if roll < 0.16 {
            let magic = ["%matplotlib inline", "!pip install something", "%time pass", "?print"]
                [rng.gen_range(0..4)];
            cells.push(Cell::code(magic));
            continue;
        }
        if roll < 0.20 {
            cells.push(Cell::code("def broken(:\n    pass"));
            continue;
        }
        if roll < 0.24 {
            let quiet = ["", "# notes only", "# alpha\n# beta"][rng.gen_range(0..3)];
            cells.push(Cell::code(quiet));
            continue;
        }

        let n_stmts = rng.gen_range(1..=6);
        let mut lines: Vec<String> = Vec::new();
        for _ in 0..n_stmts {
            if rng.gen_bool(0.15) && !lines.is_empty() {
                lines.push(String::new());
            }
            if rng.gen_bool(0.12) {
                lines.push("# step".into());
            }
            match rng.gen_range(0..10) {
                0..=4 => {
                    let name = format!("v{counter}");
                    counter += 1;
                    let expr = random_expr(rng, &defined);
                    lines.push(format!("{name} = {expr}"));
                    defined.push(name);
                }
                5 => {
                    let (module, alias) = IMPORT_POOL[rng.gen_range(0..IMPORT_POOL.len())];
                    let alias = format!("{alias}{counter}");
                    counter += 1;
                    lines.push(format!("import {module} as {alias}"));
                    defined.push(alias);
                }
                6 => {
                    if let Some(name) = pick(rng, &defined) {
                        lines.push(format!("{name} += 1"));
                    } else {
                        lines.push("z0 = 0".into());
                        defined.push("z0".into());
                    }
                }
                7 => {
                    let loop_var = format!("i{counter}");
                    let acc = format!("acc{counter}");
                    counter += 1;
                    lines.push(format!(
                        "for {loop_var} in range(3):\n    {acc} = {loop_var} * 2"
                    ));
                    defined.push(acc);
                }
                8 => {
                    let a = format!("p{counter}");
                    let b = format!("q{counter}");
                    counter += 1;
                    lines.push(format!("{a} = 1; {b} = {a}"));
                    defined.push(a);
                    defined.push(b);
                }
                _ => {
                    if let Some(name) = pick(rng, &defined) {
                        lines.push(format!("print({name})"));
                    } else {
                        lines.push("print('start')".into());
                    }
                }
            }
        }
        let mut cell = Cell::code(lines.join("\n"));
        if rng.gen_bool(0.3) {
            cell.outputs = vec![json!({
                "output_type": "stream", "name": "stdout", "text": ["ok\n"]
            })];
            cell.execution_count = Some(rng.gen_range(1..50));
        }
        cells.push(cell);
    }

    Notebook::new(cells)
}

fn random_expr(rng: &mut ChaCha8Rng, defined: &[String]) -> String {
    let lit = rng.gen_range(1..100).to_string();
    match (pick(rng, defined), pick(rng, defined)) {
        (Some(a), Some(b)) if rng.gen_bool(0.6) => format!("{a} + {b}"),
        (Some(a), _) if rng.gen_bool(0.7) => format!("{a} * {lit}"),
        _ => lit,
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &'a [String]) -> Option<&'a String> {
    if pool.is_empty() {
        None
    } else {
        Some(&pool[rng.gen_range(0..pool.len())])
    }
}

// ---------------------------------------------------------------------------
// Curated corpus notebooks: over-split import runs, chained pipelines,
// monolithic multi-action cells, and a consumer cell tying imports together.
// ---------------------------------------------------------------------------

pub fn corpus_notebook(rng: &mut ChaCha8Rng) -> Notebook {
    let mut cells = Vec::new();

    // Over-split import sequence; every alias is used by the consumer below.
    let n_imports = rng.gen_range(2..=4);
    let mut pool = IMPORT_POOL.to_vec();
    pool.shuffle(rng);
    let aliases: Vec<(String, String)> = pool[..n_imports]
        .iter()
        .map(|(m, a)| (m.to_string(), a.to_string()))
        .collect();
    for (module, alias) in &aliases {
        cells.push(Cell::code(format!("import {module} as {alias}")));
    }

    if rng.gen_bool(0.5) {
        cells.push(Cell::markdown("## pipeline"));
    }

    // Small self-contained pipeline cells: every link intra, r = 0.
    let n_pipelines = rng.gen_range(1..=3);
    for p in 0..n_pipelines {
        let len = rng.gen_range(2..=4);
        let mut lines = vec![format!("t{p}_0 = {}", rng.gen_range(1..10))];
        for i in 1..len {
            lines.push(format!("t{p}_{i} = t{p}_{} + {}", i - 1, rng.gen_range(1..10)));
        }
        cells.push(Cell::code(lines.join("\n")));
    }

    // Occasional mid-ratio cell: one internal link plus uses of two aliases.
    if rng.gen_bool(0.2) {
        let (_, a0) = &aliases[0];
        let (_, a1) = &aliases[1];
        cells.push(Cell::code(format!(
            "mix = {a0}\nmixed = mix + 1\nprint({a1})"
        )));
    }

    // Monolithic cells: stacked independent 3-line actions, split-eligible
    // at every action border.
    let n_monoliths = rng.gen_range(1..=2);
    for m in 0..n_monoliths {
        let n_groups = rng.gen_range(2..=4);
        let mut lines = Vec::new();
        for g in 0..n_groups {
            lines.push(format!("m{m}g{g}_a = {}", rng.gen_range(1..10)));
            lines.push(format!("m{m}g{g}_b = m{m}g{g}_a + 1"));
            lines.push(format!("m{m}g{g}_c = m{m}g{g}_b * 2"));
        }
        cells.push(Cell::code(lines.join("\n")));
    }

    // Consumer cell: six chained lines touching every import alias; too big
    // to merge, too chained to split.
    let mut consumer = Vec::new();
    for (i, (_, alias)) in aliases.iter().enumerate() {
        if i == 0 {
            consumer.push(format!("r0 = {alias}"));
        } else {
            consumer.push(format!("r{i} = r{} if {alias} else r{}", i - 1, i - 1));
        }
    }
    let mut i = aliases.len();
    while consumer.len() < 6 {
        consumer.push(format!("r{i} = r{} + 1", i - 1));
        i += 1;
    }
    let mut tail = Cell::code(consumer.join("\n"));
    tail.outputs = vec![json!({"output_type": "execute_result", "data": {"text/plain": ["1"]}})];
    tail.execution_count = Some(9);
    cells.push(tail);

    Notebook::new(cells)
}

pub fn synthetic_corpus(seed: u64, n: usize) -> Vec<Notebook> {
    let mut r = rng(seed);
    (0..n).map(|_| corpus_notebook(&mut r)).collect()
}

// ---------------------------------------------------------------------------
// Clone corpus with planted near-duplicate clusters.
// ---------------------------------------------------------------------------

/// `n` notebooks built from distinct base templates; roughly a third belong
/// to planted clone clusters (including similarity chains that only connect
/// transitively).
pub fn clone_corpus(seed: u64, n: usize) -> Vec<(String, Notebook)> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    let mut base = 0usize;
    while out.len() < n {
        let id_prefix = format!("base{base:03}");
        let tokens: Vec<String> = (0..20).map(|t| format!("b{base}_tok{t}")).collect();
        let body = |toks: &[String]| -> String {
            toks.chunks(4)
                .enumerate()
                .map(|(i, chunk)| format!("line{i} = {}", chunk.join(" + ")))
                .collect::<Vec<_>>()
                .join("\n")
        };
        match base % 3 {
            0 => {
                // Singleton notebook.
                out.push((
                    format!("{id_prefix}.ipynb"),
                    Notebook::new(vec![Cell::code(body(&tokens))]),
                ));
            }
            1 => {
                // A tight cluster: variants differ by one literal token.
                let k = r.gen_range(2..=3);
                for v in 0..k {
                    let mut toks = tokens.clone();
                    toks[0] = format!("b{base}_var{v}");
                    out.push((
                        format!("{id_prefix}_v{v}.ipynb"),
                        Notebook::new(vec![Cell::code(body(&toks))]),
                    ));
                }
            }
            _ => {
                // A chain a~b~c where a and c are below threshold on their own.
                for (v, delta) in [(0usize, 0usize), (1, 3), (2, 6)] {
                    let mut toks = tokens.clone();
                    for d in 0..delta {
                        toks[d] = format!("b{base}_v{v}_sub{d}");
                    }
                    out.push((
                        format!("{id_prefix}_c{v}.ipynb"),
                        Notebook::new(vec![Cell::code(body(&toks))]),
                    ));
                }
            }
        }
        base += 1;
    }
    out.truncate(n);
    out
}

// ---------------------------------------------------------------------------
// Synthetic parsed cells (no Python source): direct def/use streams.
// ---------------------------------------------------------------------------

pub fn random_parsed_cells(rng: &mut ChaCha8Rng) -> Vec<ParsedCell> {
    const POOL: [&str; 6] = ["a", "b", "c", "d", "e", "f"];
    let n_cells = rng.gen_range(1..=10);
    let mut cells = Vec::new();
    let mut notebook_index = 0usize;
    for _ in 0..n_cells {
        notebook_index += rng.gen_range(1..=2); // leave gaps, as markdown would
        let parse_failed = rng.gen_bool(0.05);
        let n_stmts = if parse_failed { 0 } else { rng.gen_range(0..=8) };
        let mut statements = Vec::new();
        for s in 0..n_stmts {
            let opaque = rng.gen_bool(0.1);
            let mut defs = BTreeSet::new();
            let mut uses = BTreeSet::new();
            if !opaque {
                for _ in 0..rng.gen_range(0..=2) {
                    defs.insert(POOL[rng.gen_range(0..POOL.len())].to_string());
                }
                for _ in 0..rng.gen_range(0..=3) {
                    uses.insert(POOL[rng.gen_range(0..POOL.len())].to_string());
                }
            }
            statements.push(Statement {
                index_in_cell: s,
                first_line: s + 1,
                last_line: s + 1,
                defs,
                uses,
                opaque,
            });
        }
        cells.push(ParsedCell {
            cell_index: notebook_index,
            statements,
            parse_failed,
        });
    }
    cells
}

// ---------------------------------------------------------------------------
// Oracles.
// ---------------------------------------------------------------------------

/// Nearest-preceding-definition chains by exhaustive backwards scan.
pub fn brute_force_chains(cells: &[ParsedCell]) -> BTreeSet<(StmtRef, StmtRef, String)> {
    let flat: Vec<(StmtRef, &Statement)> = cells
        .iter()
        .flat_map(|cell| {
            cell.statements
                .iter()
                .map(move |s| (StmtRef::new(cell.cell_index, s.index_in_cell), s))
        })
        .collect();

    let mut links = BTreeSet::new();
    for (pos, (use_ref, stmt)) in flat.iter().enumerate() {
        for name in &stmt.uses {
            for (def_ref, def_stmt) in flat[..pos].iter().rev() {
                if def_stmt.defs.contains(name) {
                    links.insert((*def_ref, *use_ref, name.clone()));
                    break;
                }
            }
        }
    }
    links
}

/// Per-statement signature of all code cells concatenated in order; the
/// quantity merge/split must preserve.
pub fn statement_signature(nb: &Notebook) -> Vec<(BTreeSet<String>, BTreeSet<String>, bool)> {
    nb.cells
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_code())
        .flat_map(|(i, c)| {
            parse_cell(i, &c.source)
                .statements
                .into_iter()
                .map(|s| (s.defs, s.uses, s.opaque))
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Bottom-up fragment grouping, written independently of the implementation:
/// spans are (first_line, last_line) per statement; `intra` holds
/// (def_stmt, use_stmt) pairs of intra-cell links.
pub fn simulate_bottom_up_grouping(
    spans: &[(usize, usize)],
    intra: &[(usize, usize)],
    min_lines: usize,
    attach_remainder_down: bool,
) -> Vec<usize> {
    let n = spans.len();
    if n < 2 {
        return Vec::new();
    }
    let crossed = |k: usize| intra.iter().any(|&(d, u)| d <= k && k < u);
    let frag_len = |lo: usize, hi: usize| spans[hi].1 - spans[lo].0 + 1;

    let mut cuts = Vec::new();
    let mut end = n - 1;
    let mut k = n - 1;
    while k > 0 {
        k -= 1;
        if !crossed(k) && frag_len(k + 1, end) >= min_lines {
            cuts.insert(0, k);
            end = k;
        }
    }
    if attach_remainder_down && !cuts.is_empty() && frag_len(0, cuts[0]) < min_lines {
        cuts.remove(0);
    }
    cuts
}

/// Lines of a source after stripping trailing blank lines, implemented
/// independently of the library.
pub fn naive_line_count(source: &str) -> usize {
    let lines: Vec<&str> = source.split('\n').collect();
    let mut n = lines.len();
    while n > 0 && lines[n - 1].trim().is_empty() {
        n -= 1;
    }
    n
}

/// Replay every emitted merge group against the original notebook with an
/// independent implementation of the size and ratio criteria, computing
/// ratios from brute-force oracle links. Panics on any violation.
pub fn verify_merge_plan(
    nb: &Notebook,
    analysis: &resplit_core::NotebookAnalysis,
    cfg: &resplit_core::MergeConfig,
) {
    use resplit_core::merge::{merge_sources, plan_merges};

    let oracle_links: Vec<_> = brute_force_chains(&analysis.cells).into_iter().collect();
    let ratio_of = |members: &[usize]| -> f64 {
        let mut intra = 0usize;
        let mut inter = 0usize;
        for (def_at, use_at, _) in &oracle_links {
            let d = members.contains(&def_at.cell_index);
            let u = members.contains(&use_at.cell_index);
            if d && u {
                intra += 1;
            } else if d || u {
                inter += 1;
            }
        }
        if intra + inter == 0 {
            0.0
        } else {
            inter as f64 / (intra + inter) as f64
        }
    };

    let code_indices = nb.code_cell_indices();
    let plan = plan_merges(nb, analysis, cfg);
    for group in &plan.groups {
        let members = &code_indices[group.start..group.end];
        assert!(members.len() >= 2);
        for step in 1..members.len() {
            let grown = &members[..step];
            let candidate = members[step];
            let group_text = merge_sources(grown.iter().map(|&i| nb.cells[i].source.as_str()));
            assert!(
                naive_line_count(&group_text) < cfg.max_merge_lines,
                "group text too long at step {step}"
            );
            assert!(
                naive_line_count(&nb.cells[candidate].source) < cfg.max_merge_lines,
                "candidate too long at step {step}"
            );
            let r_group = ratio_of(grown);
            let r_candidate = ratio_of(&[candidate]);
            let with_candidate: Vec<usize> = grown
                .iter()
                .copied()
                .chain(std::iter::once(candidate))
                .collect();
            let r_merged = ratio_of(&with_candidate);
            assert!(
                (r_merged - r_group).abs() <= cfg.max_ratio_change + 1e-12,
                "group-side ratio change violated"
            );
            assert!(
                (r_merged - r_candidate).abs() <= cfg.max_ratio_change + 1e-12,
                "candidate-side ratio change violated"
            );
        }
    }
}

/// Check every committed split boundary against oracle links and every
/// fragment against the minimum size. With `attach_remainder_down` the top
/// fragment is not exempt. Panics on any violation.
pub fn verify_split_plans(analysis: &resplit_core::NotebookAnalysis, cfg: &resplit_core::SplitConfig) {
    use resplit_core::split::plan_split;

    let oracle_links = brute_force_chains(&analysis.cells);
    for cell in &analysis.cells {
        let cuts = plan_split(cell, &analysis.chains, cfg);
        if cuts.is_empty() {
            continue;
        }
        for (def_at, use_at, name) in &oracle_links {
            if def_at.cell_index == cell.cell_index && use_at.cell_index == cell.cell_index {
                for &k in &cuts {
                    assert!(
                        !(def_at.stmt_index <= k && k < use_at.stmt_index),
                        "boundary {k} spanned by {name}"
                    );
                }
            }
        }
        let n = cell.statements.len();
        let mut bounds = vec![0usize];
        bounds.extend(cuts.iter().map(|&k| k + 1));
        bounds.push(n);
        for (f, w) in bounds.windows(2).enumerate() {
            let first = cell.statements[w[0]].first_line;
            let last = cell.statements[w[1] - 1].last_line;
            let exempt = f == 0 && !cfg.attach_remainder_down;
            assert!(
                exempt || last - first + 1 >= cfg.min_split_lines,
                "fragment {w:?} too small"
            );
        }
    }
}
