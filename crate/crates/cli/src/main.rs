//! `resplit` — restructure Jupyter notebooks by merging and splitting code
//! cells along def-use chains, plus corpus utilities (stats, dedup,
//! data-science filtering).
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O or parse failure of the
//! target file. Per-cell Python parse failures never abort a run.

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use resplit_core::corpus::{
    corpus_stats, dedup, is_data_science, CorpusStats, StatsOptions, TokenBag,
};
use resplit_core::pipeline::{
    mark_processed, processing_marker, run_transform, AnalysisConfig, PassOrder, TransformKind,
    TransformLog,
};
use resplit_core::{
    cell_stats, line_count, parse_notebook, serialize_notebook, Notebook, NotebookAnalysis,
};
use serde_json::json;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "resplit",
    version,
    about = "Restructure Jupyter notebooks along def-use chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Merge consecutive small, link-compatible code cells
    Merge(MergeCmd),
    /// Split code cells at boundaries no def-use chain crosses
    Split(SplitCmd),
    /// Run merge and split passes (merge first by default)
    Both(BothCmd),
    /// Per-cell stats for one notebook, or aggregate stats for a directory
    Stats(StatsCmd),
    /// Cluster near-duplicate notebooks by token similarity
    Dedup(DedupCmd),
    /// List notebooks that use at least one data-science library
    FilterDs(FilterDsCmd),
    /// Dump def-use links as JSON lines
    Chains(ChainsCmd),
}

#[derive(Args)]
struct CommonTransformArgs {
    /// Input notebook (.ipynb)
    input: PathBuf,
    /// Output notebook path (required unless --dry-run)
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Write the transform log as JSON
    #[arg(long, value_name = "FILE")]
    log: Option<PathBuf>,
    /// Plan and log without writing the output notebook
    #[arg(long)]
    dry_run: bool,
    /// Process a notebook that already carries a resplit marker
    #[arg(long)]
    force: bool,
    /// JSON config file (defaults < file < flags)
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Write the input notebook's def-use links as JSON lines
    #[arg(long, value_name = "FILE")]
    emit_chains: Option<PathBuf>,
}

#[derive(Args, Default)]
struct MergeFlags {
    /// Cells at or above this many lines never merge
    #[arg(long, value_name = "N")]
    max_merge_lines: Option<usize>,
    /// Maximum allowed inter-cell link ratio change
    #[arg(long, value_name = "X")]
    max_ratio_change: Option<f64>,
    /// Allow merging across markdown cells
    #[arg(long)]
    no_markdown_barrier: bool,
    /// Never bury an output-producing cell inside a merged cell
    #[arg(long)]
    preserve_output_boundaries: bool,
    /// Compare the merged ratio only against the growing group
    #[arg(long)]
    one_sided_ratio: bool,
}

#[derive(Args, Default)]
struct SplitFlags {
    /// Minimum fragment size in lines
    #[arg(long, value_name = "N")]
    min_split_lines: Option<usize>,
    /// Keep an undersized top fragment instead of attaching it downward
    #[arg(long)]
    no_attach_remainder: bool,
}

#[derive(Args)]
struct MergeCmd {
    #[command(flatten)]
    common: CommonTransformArgs,
    #[command(flatten)]
    merge: MergeFlags,
}

#[derive(Args)]
struct SplitCmd {
    #[command(flatten)]
    common: CommonTransformArgs,
    #[command(flatten)]
    split: SplitFlags,
}

#[derive(Args)]
struct BothCmd {
    #[command(flatten)]
    common: CommonTransformArgs,
    #[command(flatten)]
    merge: MergeFlags,
    #[command(flatten)]
    split: SplitFlags,
    /// Pass order
    #[arg(long, value_enum)]
    order: Option<OrderChoice>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderChoice {
    MergeSplit,
    SplitMerge,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformChoice {
    None,
    Merge,
    Split,
    Both,
}

impl From<TransformChoice> for TransformKind {
    fn from(choice: TransformChoice) -> Self {
        match choice {
            TransformChoice::None => TransformKind::None,
            TransformChoice::Merge => TransformKind::Merge,
            TransformChoice::Split => TransformKind::Split,
            TransformChoice::Both => TransformKind::Both,
        }
    }
}

#[derive(Args)]
struct StatsCmd {
    /// Notebook file or directory of notebooks
    path: PathBuf,
    /// Transform to apply before aggregating (directory mode)
    #[arg(long, value_enum, default_value = "none")]
    transform: TransformChoice,
    /// Output file (stdout when omitted)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Write the inter-cell link ratio histogram as CSV (bin_lo,bin_hi,count)
    #[arg(long, value_name = "FILE")]
    histogram: Option<PathBuf>,
    /// Emit one JSON line per code cell (single-notebook mode)
    #[arg(long)]
    per_cell: bool,
    /// Count markdown/raw cells in the mean-cells metric
    #[arg(long)]
    include_markdown_in_counts: bool,
    /// Include zero-link cells in the histogram
    #[arg(long)]
    include_zero_link_cells: bool,
    /// Number of histogram bins
    #[arg(long, default_value_t = 20, value_name = "N")]
    bins: usize,
    /// JSON config file (defaults < file < flags)
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(flatten)]
    merge: MergeFlags,
    #[command(flatten)]
    split: SplitFlags,
    /// Pass order for --transform both
    #[arg(long, value_enum)]
    order: Option<OrderChoice>,
}

#[derive(Args)]
struct DedupCmd {
    /// Directory of notebooks
    dir: PathBuf,
    /// Similarity threshold; pairs at or above it are clones
    #[arg(long, default_value_t = 0.8)]
    threshold: f64,
    /// Output file (stdout when omitted)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Score all pairs instead of prefiltered candidates
    #[arg(long)]
    exhaustive: bool,
}

#[derive(Args)]
struct FilterDsCmd {
    /// Directory of notebooks
    dir: PathBuf,
    /// Output file (stdout when omitted)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ChainsCmd {
    /// Input notebook (.ipynb)
    input: PathBuf,
    /// Output file (stdout when omitted)
    #[arg(short, long)]
    output: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        Failure::Runtime(err)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            if err.use_stderr() {
                eprint!("{err}");
                return ExitCode::from(1);
            }
            // --help / --version
            print!("{err}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("resplit: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(err)) => {
            eprintln!("resplit: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Merge(cmd) => {
            let cfg = build_config(cmd.common.config.as_deref(), Some(&cmd.merge), None, None)?;
            transform_command(&cmd.common, TransformKind::Merge, &cfg)
        }
        Command::Split(cmd) => {
            let cfg = build_config(cmd.common.config.as_deref(), None, Some(&cmd.split), None)?;
            transform_command(&cmd.common, TransformKind::Split, &cfg)
        }
        Command::Both(cmd) => {
            let cfg = build_config(
                cmd.common.config.as_deref(),
                Some(&cmd.merge),
                Some(&cmd.split),
                cmd.order,
            )?;
            transform_command(&cmd.common, TransformKind::Both, &cfg)
        }
        Command::Stats(cmd) => stats_command(cmd),
        Command::Dedup(cmd) => dedup_command(cmd),
        Command::FilterDs(cmd) => filter_ds_command(cmd),
        Command::Chains(cmd) => chains_command(cmd),
    }
}

/// Built-in defaults, overridden by the optional config file, overridden by
/// explicit flags.
fn build_config(
    config_path: Option<&Path>,
    merge: Option<&MergeFlags>,
    split: Option<&SplitFlags>,
    order: Option<OrderChoice>,
) -> Result<AnalysisConfig, Failure> {
    let mut cfg = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config file {}", path.display()))
                .map_err(Failure::Runtime)?;
            serde_json::from_str::<AnalysisConfig>(&text)
                .with_context(|| format!("parsing config file {}", path.display()))
                .map_err(Failure::Runtime)?
        }
        None => AnalysisConfig::default(),
    };
    if let Some(flags) = merge {
        if let Some(n) = flags.max_merge_lines {
            cfg.merge.max_merge_lines = n;
        }
        if let Some(x) = flags.max_ratio_change {
            cfg.merge.max_ratio_change = x;
        }
        if flags.no_markdown_barrier {
            cfg.merge.barrier_on_markdown = false;
        }
        if flags.preserve_output_boundaries {
            cfg.merge.preserve_output_boundaries = true;
        }
        if flags.one_sided_ratio {
            cfg.merge.one_sided_ratio = true;
        }
    }
    if let Some(flags) = split {
        if let Some(n) = flags.min_split_lines {
            cfg.split.min_split_lines = n;
        }
        if flags.no_attach_remainder {
            cfg.split.attach_remainder_down = false;
        }
    }
    if let Some(order) = order {
        cfg.order = match order {
            OrderChoice::MergeSplit => PassOrder::MergeSplit,
            OrderChoice::SplitMerge => PassOrder::SplitMerge,
        };
    }
    if cfg.merge.max_merge_lines < 1 {
        return Err(Failure::Usage("--max-merge-lines must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&cfg.merge.max_ratio_change) {
        return Err(Failure::Usage(
            "--max-ratio-change must lie in [0, 1]".into(),
        ));
    }
    if cfg.split.min_split_lines < 1 {
        return Err(Failure::Usage("--min-split-lines must be at least 1".into()));
    }
    Ok(cfg)
}

fn load_notebook(path: &Path) -> Result<Notebook> {
    let bytes =
        std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let nb = parse_notebook(&bytes).with_context(|| format!("parsing {}", path.display()))?;
    Ok(nb)
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(contents)?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_output(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, contents.as_bytes()),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn chains_jsonl(analysis: &NotebookAnalysis) -> String {
    let mut out = String::new();
    for link in analysis.chains.links() {
        let name = serde_json::to_string(&link.name).expect("string serializes");
        out.push_str(&format!(
            "{{\"name\":{},\"def\":[{},{}],\"use\":[{},{}]}}\n",
            name,
            link.def_at.cell_index,
            link.def_at.stmt_index,
            link.use_at.cell_index,
            link.use_at.stmt_index
        ));
    }
    out
}

fn transform_command(
    common: &CommonTransformArgs,
    kind: TransformKind,
    cfg: &AnalysisConfig,
) -> Result<(), Failure> {
    if common.output.is_none() && !common.dry_run {
        return Err(Failure::Usage(
            "an output path is required unless --dry-run is given".into(),
        ));
    }
    let nb = load_notebook(&common.input)?;
    if processing_marker(&nb).is_some() && !common.force {
        return Err(Failure::Usage(format!(
            "{} already carries a resplit marker; pass --force to reprocess",
            common.input.display()
        )));
    }

    if let Some(path) = &common.emit_chains {
        let analysis = NotebookAnalysis::of(&nb);
        write_atomic(path, chains_jsonl(&analysis).as_bytes())?;
    }

    let (mut out_nb, mut log) = run_transform(&nb, kind, cfg)
        .map_err(|e| Failure::Runtime(anyhow!("transform failed: {e}")))?;
    log.input_path = common.input.display().to_string();
    log.tool_version = TOOL_VERSION.to_string();

    if !common.dry_run {
        // A run that changed nothing stays structurally identical to its
        // input; only actual rewrites get the reprocessing marker.
        if !log.merges.is_empty() || !log.splits.is_empty() {
            mark_processed(&mut out_nb, TOOL_VERSION, cfg);
        }
        let output = common.output.as_deref().expect("checked above");
        write_atomic(output, serialize_notebook(&out_nb).as_bytes())?;
    }
    if let Some(path) = &common.log {
        let text = serde_json::to_string_pretty(&log).expect("log serializes");
        write_atomic(path, format!("{text}\n").as_bytes())?;
    }

    report(&log, common.dry_run);
    Ok(())
}

fn report(log: &TransformLog, dry_run: bool) {
    let prefix = if dry_run { "[dry-run] " } else { "" };
    eprintln!(
        "{}{}: {} merge group(s), {} split(s); code cells {} -> {}, lines {} -> {}",
        prefix,
        log.input_path,
        log.merges.len(),
        log.splits.len(),
        log.counters.cells_before,
        log.counters.cells_after,
        log.counters.lines_before,
        log.counters.lines_after,
    );
    for skipped in &log.skipped_cells {
        eprintln!(
            "  skipped cell {} ({})",
            skipped.index, skipped.reason
        );
    }
}

/// Sorted .ipynb paths under a directory.
fn notebook_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(anyhow!("{} is not a directory", dir.display()));
    }
    let mut paths: Vec<PathBuf> = walkdir::WalkDir::new(dir)
        .sort_by_file_name()
        .into_iter()
        .filter_map(|entry| entry.ok())
        .filter(|entry| {
            entry.file_type().is_file()
                && entry.path().extension().is_some_and(|ext| ext == "ipynb")
        })
        .map(|entry| entry.into_path())
        .collect();
    paths.sort();
    Ok(paths)
}

fn relative_id(root: &Path, path: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .to_string_lossy()
        .replace(std::path::MAIN_SEPARATOR, "/")
}

/// Load every notebook under the directory in parallel; unreadable or
/// malformed files are reported on stderr and counted, never fatal.
fn load_corpus(dir: &Path) -> Result<(Vec<(String, Notebook)>, usize)> {
    let paths = notebook_paths(dir)?;
    let loaded: Vec<(String, Result<Notebook>)> = paths
        .par_iter()
        .map(|path| (relative_id(dir, path), load_notebook(path)))
        .collect();
    let mut notebooks = Vec::with_capacity(loaded.len());
    let mut failures = 0;
    for (id, result) in loaded {
        match result {
            Ok(nb) => notebooks.push((id, nb)),
            Err(err) => {
                failures += 1;
                eprintln!("resplit: skipping {id}: {err:#}");
            }
        }
    }
    Ok((notebooks, failures))
}

fn stats_command(cmd: StatsCmd) -> Result<(), Failure> {
    if cmd.path.is_dir() {
        if cmd.per_cell {
            return Err(Failure::Usage(
                "--per-cell applies to a single notebook, not a directory".into(),
            ));
        }
        let cfg = build_config(
            cmd.config.as_deref(),
            Some(&cmd.merge),
            Some(&cmd.split),
            cmd.order,
        )?;
        let opts = StatsOptions {
            histogram_bins: cmd.bins.max(1),
            include_zero_link_cells: cmd.include_zero_link_cells,
            include_markdown_in_counts: cmd.include_markdown_in_counts,
        };
        let (notebooks, load_failures) = load_corpus(&cmd.path)?;
        let nbs: Vec<Notebook> = notebooks.into_iter().map(|(_, nb)| nb).collect();
        let stats = corpus_stats(&nbs, cmd.transform.into(), &cfg, &opts);
        if let Some(path) = &cmd.histogram {
            write_atomic(path, histogram_csv(&stats).as_bytes())?;
        }
        let mut value = serde_json::to_value(&stats).expect("stats serialize");
        value["n_failed"] = json!(stats.n_failed + load_failures);
        let text = format!("{}\n", serde_json::to_string_pretty(&value).unwrap());
        write_output(cmd.out.as_deref(), &text)?;
        Ok(())
    } else {
        per_cell_stats(&cmd)
    }
}

fn histogram_csv(stats: &CorpusStats) -> String {
    let mut csv = String::from("bin_lo,bin_hi,count\n");
    for bin in &stats.ratio_histogram {
        csv.push_str(&format!("{:.4},{:.4},{}\n", bin.lo, bin.hi, bin.count));
    }
    csv
}

fn per_cell_stats(cmd: &StatsCmd) -> Result<(), Failure> {
    let nb = load_notebook(&cmd.path)?;
    let analysis = NotebookAnalysis::of(&nb);
    let mut out = String::new();
    for parsed in &analysis.cells {
        let stats = cell_stats(parsed.cell_index, &analysis.chains);
        out.push_str(&format!(
            "{{\"cell\":{},\"lines\":{},\"intra\":{},\"inter\":{},\"r_inter\":{}}}\n",
            parsed.cell_index,
            line_count(&nb.cells[parsed.cell_index].source),
            stats.n_intra,
            stats.n_inter,
            serde_json::Number::from_f64(stats.r_inter)
                .map_or_else(|| "0".to_string(), |n| n.to_string()),
        ));
    }
    write_output(cmd.out.as_deref(), &out)?;
    Ok(())
}

fn dedup_command(cmd: DedupCmd) -> Result<(), Failure> {
    if !(0.0..=1.0).contains(&cmd.threshold) {
        return Err(Failure::Usage("--threshold must lie in [0, 1]".into()));
    }
    let (notebooks, _failures) = load_corpus(&cmd.dir)?;
    let bags: Vec<TokenBag> = notebooks
        .par_iter()
        .map(|(id, nb)| TokenBag::from_notebook(id.clone(), nb))
        .collect();
    let result = dedup(&bags, cmd.threshold, cmd.exhaustive);
    let value = json!({
        "threshold": cmd.threshold,
        "n_notebooks": bags.len(),
        "kept": result.kept,
        "clusters": result.clusters,
    });
    let text = format!("{}\n", serde_json::to_string_pretty(&value).unwrap());
    write_output(cmd.out.as_deref(), &text)?;
    Ok(())
}

fn filter_ds_command(cmd: FilterDsCmd) -> Result<(), Failure> {
    let (notebooks, _failures) = load_corpus(&cmd.dir)?;
    let kept: Vec<String> = notebooks
        .par_iter()
        .filter(|(_, nb)| is_data_science(nb))
        .map(|(id, _)| id.clone())
        .collect();
    let mut kept = kept;
    kept.sort();
    let mut text = String::new();
    for id in kept {
        text.push_str(&id);
        text.push('\n');
    }
    write_output(cmd.out.as_deref(), &text)?;
    Ok(())
}

fn chains_command(cmd: ChainsCmd) -> Result<(), Failure> {
    let nb = load_notebook(&cmd.input)?;
    let analysis = NotebookAnalysis::of(&nb);
    write_output(cmd.output.as_deref(), &chains_jsonl(&analysis))?;
    Ok(())
}
