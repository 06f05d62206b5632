//! Top-level statement parsing and name-event extraction for Python cell
//! sources.
//!
//! Each code cell is decomposed into top-level statements with 1-based,
//! inclusive line spans and the sets of names the statement defines and uses
//! at module scope. IPython magic / shell / help lines (`%`, `%%`, `!`, `?`)
//! are neutralized before grammar parsing and surface as opaque statements
//! that occupy lines but carry no name events. A cell that still fails to
//! parse is reported through `parse_failed`; nothing here ever panics on bad
//! input, since a corpus run must survive arbitrary cells.

use rustpython_parser::ast::{self, Ranged};
use rustpython_parser::{parse, Mode};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum NameEventKind {
    Define,
    Use,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct NameEvent {
    pub name: String,
    pub kind: NameEventKind,
}

/// One top-level statement of a code cell.
///
/// Simple statements sharing a physical line (semicolon-separated) are
/// coalesced into a single `Statement` so that line spans stay disjoint.
/// Comment lines between statements belong to the span of the statement that
/// follows them (trailing comments attach to the last statement).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    pub index_in_cell: usize,
    /// 1-based, inclusive.
    pub first_line: usize,
    /// 1-based, inclusive.
    pub last_line: usize,
    pub defs: BTreeSet<String>,
    pub uses: BTreeSet<String>,
    /// True for neutralized magic/shell/help lines; opaque statements have
    /// empty defs and uses.
    pub opaque: bool,
}

impl Statement {
    pub fn line_span(&self) -> (usize, usize) {
        (self.first_line, self.last_line)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedCell {
    /// Index of the cell in the full notebook cell list.
    pub cell_index: usize,
    pub statements: Vec<Statement>,
    pub parse_failed: bool,
}

impl ParsedCell {
    fn failed(cell_index: usize) -> Self {
        ParsedCell {
            cell_index,
            statements: Vec::new(),
            parse_failed: true,
        }
    }
}

fn is_magic_line(line: &str) -> bool {
    matches!(
        line.trim_start().as_bytes().first(),
        Some(b'%') | Some(b'!') | Some(b'?')
    )
}

fn is_comment_line(line: &str) -> bool {
    line.trim_start().starts_with('#')
}

fn is_blank_line(line: &str) -> bool {
    line.trim().is_empty()
}

/// Replace magic/shell/help lines with `pass` at the same indentation so the
/// remainder of the cell still parses; line numbering is unchanged.
fn neutralize_magics(source: &str) -> (String, Vec<bool>) {
    let lines: Vec<&str> = source.split('\n').collect();
    let magic: Vec<bool> = lines.iter().map(|l| is_magic_line(l)).collect();
    if !magic.iter().any(|&m| m) {
        return (source.to_string(), magic);
    }
    let neutralized = lines
        .iter()
        .zip(&magic)
        .map(|(line, &m)| {
            if m {
                let indent_len = line.len() - line.trim_start().len();
                format!("{}pass", &line[..indent_len])
            } else {
                (*line).to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    (neutralized, magic)
}

/// Byte offset of the start of each line, for offset → line translation.
struct LineIndex {
    starts: Vec<usize>,
}

impl LineIndex {
    fn new(source: &str) -> Self {
        let mut starts = vec![0];
        for (i, b) in source.bytes().enumerate() {
            if b == b'\n' {
                starts.push(i + 1);
            }
        }
        LineIndex { starts }
    }

    /// 1-based line containing the byte offset.
    fn line_of(&self, offset: usize) -> usize {
        match self.starts.binary_search(&offset) {
            Ok(i) => i + 1,
            Err(i) => i,
        }
    }
}

/// Parse one cell into top-level statements with name events.
pub fn parse_cell(cell_index: usize, source: &str) -> ParsedCell {
    let (neutralized, magic_lines) = neutralize_magics(source);
    let module = match parse(&neutralized, Mode::Module, "<cell>") {
        Ok(ast::Mod::Module(m)) => m,
        _ => return ParsedCell::failed(cell_index),
    };

    let index = LineIndex::new(&neutralized);
    let lines: Vec<&str> = source.split('\n').collect();

    // Raw line spans plus events, in source order.
    let mut raw: Vec<(usize, usize, BTreeSet<String>, BTreeSet<String>)> = Vec::new();
    for stmt in &module.body {
        let range = stmt.range();
        let mut start = range.start().to_usize();
        // Decorators precede the def/class keyword but belong to the statement.
        for dec in decorators(stmt) {
            start = start.min(dec.range().start().to_usize());
        }
        let first = index.line_of(start);
        let end = range.end().to_usize();
        let last = index.line_of(end.saturating_sub(1).max(start));
        let (defs, uses) = extract_name_events(stmt);
        raw.push((first, last, defs, uses));
    }

    // Coalesce statements that share a physical line (semicolons).
    let mut grouped: Vec<(usize, usize, BTreeSet<String>, BTreeSet<String>)> = Vec::new();
    for (first, last, defs, uses) in raw {
        match grouped.last_mut() {
            Some(prev) if first <= prev.1 => {
                prev.1 = prev.1.max(last);
                prev.2.extend(defs);
                prev.3.extend(uses);
            }
            _ => grouped.push((first, last, defs, uses)),
        }
    }

    let line_is_magic = |line: usize| magic_lines.get(line - 1).copied().unwrap_or(false);

    let mut statements: Vec<Statement> = Vec::with_capacity(grouped.len());
    for (i, (mut first, last, defs, uses)) in grouped.into_iter().enumerate() {
        let opaque = (first..=last).all(line_is_magic);

        // Attach the run of comment lines directly above to this statement.
        // The gap between two statement spans only ever holds blank and
        // comment lines (magic lines are statements of their own).
        let floor = statements.last().map_or(0, |s: &Statement| s.last_line);
        let mut scan = first;
        while scan > floor + 1
            && (is_comment_line(lines[scan - 2]) || is_blank_line(lines[scan - 2]))
        {
            scan -= 1;
        }
        // Leading blanks above the topmost comment stay unattached.
        while scan < first && !is_comment_line(lines[scan - 1]) {
            scan += 1;
        }
        if scan < first {
            first = scan;
        }

        let (defs, uses) = if opaque {
            (BTreeSet::new(), BTreeSet::new())
        } else {
            (defs, uses)
        };
        statements.push(Statement {
            index_in_cell: i,
            first_line: first,
            last_line: last,
            defs,
            uses,
            opaque,
        });
    }

    // Trailing comments after the last statement attach backward.
    if let Some(stmt) = statements.last_mut() {
        let mut last_comment = None;
        for line in stmt.last_line + 1..=lines.len() {
            let text = lines[line - 1];
            if is_comment_line(text) {
                last_comment = Some(line);
            } else if !is_blank_line(text) {
                break;
            }
        }
        if let Some(line) = last_comment {
            stmt.last_line = line;
        }
    }

    ParsedCell {
        cell_index,
        statements,
        parse_failed: false,
    }
}

fn decorators(stmt: &ast::Stmt) -> &[ast::Expr] {
    match stmt {
        ast::Stmt::FunctionDef(f) => &f.decorator_list,
        ast::Stmt::AsyncFunctionDef(f) => &f.decorator_list,
        ast::Stmt::ClassDef(c) => &c.decorator_list,
        _ => &[],
    }
}

/// Defines and uses a top-level statement contributes at module scope.
///
/// Names bound purely inside nested scopes (function/class/lambda/
/// comprehension bodies) produce no events; names read in a nested scope and
/// not bound anywhere along its scope chain surface as module-level uses.
pub fn extract_name_events(stmt: &ast::Stmt) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut collector = Collector::default();
    collector.visit_stmt(stmt);
    (collector.defs, collector.uses)
}

#[derive(Clone, Copy, PartialEq)]
enum FrameKind {
    Function,
    Class,
    Comprehension,
}

struct Frame {
    kind: FrameKind,
    bound: BTreeSet<String>,
    globals: BTreeSet<String>,
}

#[derive(Default)]
struct Collector {
    frames: Vec<Frame>,
    defs: BTreeSet<String>,
    uses: BTreeSet<String>,
}

impl Collector {
    fn load(&mut self, name: &str) {
        for frame in self.frames.iter().rev() {
            if frame.globals.contains(name) {
                self.uses.insert(name.to_string());
                return;
            }
            if frame.bound.contains(name) {
                return;
            }
        }
        self.uses.insert(name.to_string());
    }

    fn store(&mut self, name: &str) {
        for frame in self.frames.iter().rev() {
            if frame.globals.contains(name) {
                self.defs.insert(name.to_string());
                return;
            }
            if frame.bound.contains(name) {
                return;
            }
        }
        if self.frames.is_empty() {
            self.defs.insert(name.to_string());
        }
    }

    /// Assignment expressions skip comprehension scopes (PEP 572).
    fn store_walrus(&mut self, name: &str) {
        for frame in self.frames.iter().rev() {
            if frame.kind == FrameKind::Comprehension {
                continue;
            }
            if frame.globals.contains(name) {
                self.defs.insert(name.to_string());
            }
            return;
        }
        self.defs.insert(name.to_string());
    }

    fn visit_body(&mut self, body: &[ast::Stmt]) {
        for stmt in body {
            self.visit_stmt(stmt);
        }
    }

    fn visit_stmt(&mut self, stmt: &ast::Stmt) {
        use ast::Stmt::*;
        match stmt {
            FunctionDef(f) => self.visit_function(
                f.name.as_str(),
                &f.decorator_list,
                &f.args,
                f.returns.as_deref(),
                &f.body,
            ),
            AsyncFunctionDef(f) => self.visit_function(
                f.name.as_str(),
                &f.decorator_list,
                &f.args,
                f.returns.as_deref(),
                &f.body,
            ),
            ClassDef(c) => {
                for dec in &c.decorator_list {
                    self.visit_expr(dec);
                }
                for base in &c.bases {
                    self.visit_expr(base);
                }
                for kw in &c.keywords {
                    self.visit_expr(&kw.value);
                }
                self.store(c.name.as_str());
                let mut bound = BTreeSet::new();
                let mut globals = BTreeSet::new();
                prescan_body(&c.body, &mut bound, &mut globals);
                self.frames.push(Frame {
                    kind: FrameKind::Class,
                    bound,
                    globals,
                });
                self.visit_body(&c.body);
                self.frames.pop();
            }
            Return(r) => {
                if let Some(v) = &r.value {
                    self.visit_expr(v);
                }
            }
            Delete(d) => {
                // `del x` is treated as a use of x.
                for target in &d.targets {
                    self.visit_expr(target);
                }
            }
            Assign(a) => {
                self.visit_expr(&a.value);
                for target in &a.targets {
                    self.visit_expr(target);
                }
            }
            AugAssign(a) => {
                self.visit_expr(&a.value);
                // The target is both read and rebound.
                if let ast::Expr::Name(n) = a.target.as_ref() {
                    self.load(n.id.as_str());
                    self.store(n.id.as_str());
                } else {
                    self.visit_expr(&a.target);
                }
            }
            AnnAssign(a) => {
                self.visit_expr(&a.annotation);
                if let Some(v) = &a.value {
                    self.visit_expr(v);
                    self.visit_expr(&a.target);
                } else if !matches!(a.target.as_ref(), ast::Expr::Name(_)) {
                    // A bare annotated name is not a definition, but an
                    // attribute/subscript target still uses its base.
                    self.visit_expr(&a.target);
                }
            }
            For(f) => {
                self.visit_expr(&f.iter);
                self.visit_expr(&f.target);
                self.visit_body(&f.body);
                self.visit_body(&f.orelse);
            }
            AsyncFor(f) => {
                self.visit_expr(&f.iter);
                self.visit_expr(&f.target);
                self.visit_body(&f.body);
                self.visit_body(&f.orelse);
            }
            While(w) => {
                self.visit_expr(&w.test);
                self.visit_body(&w.body);
                self.visit_body(&w.orelse);
            }
            If(i) => {
                self.visit_expr(&i.test);
                self.visit_body(&i.body);
                self.visit_body(&i.orelse);
            }
            With(w) => {
                for item in &w.items {
                    self.visit_expr(&item.context_expr);
                    if let Some(vars) = &item.optional_vars {
                        self.visit_expr(vars);
                    }
                }
                self.visit_body(&w.body);
            }
            AsyncWith(w) => {
                for item in &w.items {
                    self.visit_expr(&item.context_expr);
                    if let Some(vars) = &item.optional_vars {
                        self.visit_expr(vars);
                    }
                }
                self.visit_body(&w.body);
            }
            Match(m) => {
                self.visit_expr(&m.subject);
                for case in &m.cases {
                    self.visit_pattern(&case.pattern);
                    if let Some(guard) = &case.guard {
                        self.visit_expr(guard);
                    }
                    self.visit_body(&case.body);
                }
            }
            Raise(r) => {
                if let Some(e) = &r.exc {
                    self.visit_expr(e);
                }
                if let Some(c) = &r.cause {
                    self.visit_expr(c);
                }
            }
            Try(t) => {
                self.visit_body(&t.body);
                for handler in &t.handlers {
                    let ast::ExceptHandler::ExceptHandler(h) = handler;
                    if let Some(ty) = &h.type_ {
                        self.visit_expr(ty);
                    }
                    if let Some(name) = &h.name {
                        self.store(name.as_str());
                    }
                }
                self.visit_body(&t.orelse);
                self.visit_body(&t.finalbody);
            }
            TryStar(t) => {
                self.visit_body(&t.body);
                for handler in &t.handlers {
                    let ast::ExceptHandler::ExceptHandler(h) = handler;
                    if let Some(ty) = &h.type_ {
                        self.visit_expr(ty);
                    }
                    if let Some(name) = &h.name {
                        self.store(name.as_str());
                    }
                }
                self.visit_body(&t.orelse);
                self.visit_body(&t.finalbody);
            }
            Assert(a) => {
                self.visit_expr(&a.test);
                if let Some(m) = &a.msg {
                    self.visit_expr(m);
                }
            }
            Import(i) => {
                for alias in &i.names {
                    let binding = match &alias.asname {
                        Some(as_name) => as_name.as_str(),
                        None => alias
                            .name
                            .as_str()
                            .split('.')
                            .next()
                            .unwrap_or(alias.name.as_str()),
                    };
                    self.store(binding);
                }
            }
            ImportFrom(i) => {
                for alias in &i.names {
                    if alias.name.as_str() == "*" {
                        continue;
                    }
                    let binding = alias
                        .asname
                        .as_ref()
                        .map_or(alias.name.as_str(), |a| a.as_str());
                    self.store(binding);
                }
            }
            Global(_) | Nonlocal(_) => {
                // Handled during frame prescan; a module-level `global` is a no-op.
            }
            Expr(e) => self.visit_expr(&e.value),
            Pass(_) | Break(_) | Continue(_) => {}
            TypeAlias(t) => {
                self.visit_expr(&t.value);
                self.visit_expr(&t.name);
            }
        }
    }

    fn visit_function(
        &mut self,
        name: &str,
        decorators: &[ast::Expr],
        args: &ast::Arguments,
        returns: Option<&ast::Expr>,
        body: &[ast::Stmt],
    ) {
        for dec in decorators {
            self.visit_expr(dec);
        }
        // Defaults and annotations evaluate in the enclosing scope.
        self.visit_arg_externals(args);
        if let Some(ret) = returns {
            self.visit_expr(ret);
        }
        self.store(name);

        let mut bound = BTreeSet::new();
        let mut globals = BTreeSet::new();
        bind_params(args, &mut bound);
        prescan_body(body, &mut bound, &mut globals);
        self.frames.push(Frame {
            kind: FrameKind::Function,
            bound,
            globals,
        });
        self.visit_body(body);
        self.frames.pop();
    }

    fn visit_arg_externals(&mut self, args: &ast::Arguments) {
        for arg in args
            .posonlyargs
            .iter()
            .chain(&args.args)
            .chain(&args.kwonlyargs)
        {
            if let Some(ann) = &arg.def.annotation {
                self.visit_expr(ann);
            }
            if let Some(default) = &arg.default {
                self.visit_expr(default);
            }
        }
        for arg in args.vararg.iter().chain(args.kwarg.iter()) {
            if let Some(ann) = &arg.annotation {
                self.visit_expr(ann);
            }
        }
    }

    fn visit_comprehension(&mut self, generators: &[ast::Comprehension], elts: &[&ast::Expr]) {
        let mut bound = BTreeSet::new();
        for generator in generators {
            bind_target(&generator.target, &mut bound);
        }
        self.frames.push(Frame {
            kind: FrameKind::Comprehension,
            bound,
            globals: BTreeSet::new(),
        });
        for generator in generators {
            self.visit_expr(&generator.iter);
            for cond in &generator.ifs {
                self.visit_expr(cond);
            }
        }
        for elt in elts {
            self.visit_expr(elt);
        }
        self.frames.pop();
    }

    fn visit_pattern(&mut self, pattern: &ast::Pattern) {
        use ast::Pattern::*;
        match pattern {
            MatchValue(v) => self.visit_expr(&v.value),
            MatchSingleton(_) => {}
            MatchSequence(s) => {
                for p in &s.patterns {
                    self.visit_pattern(p);
                }
            }
            MatchMapping(m) => {
                for k in &m.keys {
                    self.visit_expr(k);
                }
                for p in &m.patterns {
                    self.visit_pattern(p);
                }
                if let Some(rest) = &m.rest {
                    self.store(rest.as_str());
                }
            }
            MatchClass(c) => {
                self.visit_expr(&c.cls);
                for p in &c.patterns {
                    self.visit_pattern(p);
                }
                for p in &c.kwd_patterns {
                    self.visit_pattern(p);
                }
            }
            MatchStar(s) => {
                if let Some(name) = &s.name {
                    self.store(name.as_str());
                }
            }
            MatchAs(a) => {
                if let Some(p) = &a.pattern {
                    self.visit_pattern(p);
                }
                if let Some(name) = &a.name {
                    self.store(name.as_str());
                }
            }
            MatchOr(o) => {
                for p in &o.patterns {
                    self.visit_pattern(p);
                }
            }
        }
    }

    fn visit_expr(&mut self, expr: &ast::Expr) {
        use ast::Expr::*;
        match expr {
            BoolOp(e) => {
                for v in &e.values {
                    self.visit_expr(v);
                }
            }
            NamedExpr(e) => {
                self.visit_expr(&e.value);
                if let Name(n) = e.target.as_ref() {
                    self.store_walrus(n.id.as_str());
                }
            }
            BinOp(e) => {
                self.visit_expr(&e.left);
                self.visit_expr(&e.right);
            }
            UnaryOp(e) => self.visit_expr(&e.operand),
            Lambda(e) => {
                self.visit_arg_externals(&e.args);
                let mut bound = BTreeSet::new();
                bind_params(&e.args, &mut bound);
                collect_walrus_targets(&e.body, &mut bound);
                self.frames.push(Frame {
                    kind: FrameKind::Function,
                    bound,
                    globals: BTreeSet::new(),
                });
                self.visit_expr(&e.body);
                self.frames.pop();
            }
            IfExp(e) => {
                self.visit_expr(&e.test);
                self.visit_expr(&e.body);
                self.visit_expr(&e.orelse);
            }
            Dict(e) => {
                for k in e.keys.iter().flatten() {
                    self.visit_expr(k);
                }
                for v in &e.values {
                    self.visit_expr(v);
                }
            }
            Set(e) => {
                for v in &e.elts {
                    self.visit_expr(v);
                }
            }
            ListComp(e) => self.visit_comprehension(&e.generators, &[&e.elt]),
            SetComp(e) => self.visit_comprehension(&e.generators, &[&e.elt]),
            DictComp(e) => self.visit_comprehension(&e.generators, &[&e.key, &e.value]),
            GeneratorExp(e) => self.visit_comprehension(&e.generators, &[&e.elt]),
            Await(e) => self.visit_expr(&e.value),
            Yield(e) => {
                if let Some(v) = &e.value {
                    self.visit_expr(v);
                }
            }
            YieldFrom(e) => self.visit_expr(&e.value),
            Compare(e) => {
                self.visit_expr(&e.left);
                for c in &e.comparators {
                    self.visit_expr(c);
                }
            }
            Call(e) => {
                self.visit_expr(&e.func);
                for a in &e.args {
                    self.visit_expr(a);
                }
                for kw in &e.keywords {
                    self.visit_expr(&kw.value);
                }
            }
            FormattedValue(e) => {
                self.visit_expr(&e.value);
                if let Some(spec) = &e.format_spec {
                    self.visit_expr(spec);
                }
            }
            JoinedStr(e) => {
                for v in &e.values {
                    self.visit_expr(v);
                }
            }
            Constant(_) => {}
            Attribute(e) => self.visit_expr(&e.value),
            Subscript(e) => {
                self.visit_expr(&e.value);
                self.visit_expr(&e.slice);
            }
            Starred(e) => self.visit_expr(&e.value),
            Name(e) => match e.ctx {
                ast::ExprContext::Load => self.load(e.id.as_str()),
                ast::ExprContext::Store => self.store(e.id.as_str()),
                ast::ExprContext::Del => self.load(e.id.as_str()),
            },
            List(e) => {
                for v in &e.elts {
                    self.visit_expr(v);
                }
            }
            Tuple(e) => {
                for v in &e.elts {
                    self.visit_expr(v);
                }
            }
            Slice(e) => {
                for part in [&e.lower, &e.upper, &e.step].into_iter().flatten() {
                    self.visit_expr(part);
                }
            }
        }
    }
}

fn bind_params(args: &ast::Arguments, bound: &mut BTreeSet<String>) {
    for arg in args
        .posonlyargs
        .iter()
        .chain(&args.args)
        .chain(&args.kwonlyargs)
    {
        bound.insert(arg.def.arg.to_string());
    }
    for arg in args.vararg.iter().chain(args.kwarg.iter()) {
        bound.insert(arg.arg.to_string());
    }
}

fn bind_target(expr: &ast::Expr, bound: &mut BTreeSet<String>) {
    match expr {
        ast::Expr::Name(n) => {
            bound.insert(n.id.to_string());
        }
        ast::Expr::Tuple(t) => {
            for elt in &t.elts {
                bind_target(elt, bound);
            }
        }
        ast::Expr::List(l) => {
            for elt in &l.elts {
                bind_target(elt, bound);
            }
        }
        ast::Expr::Starred(s) => bind_target(&s.value, bound),
        _ => {}
    }
}

/// Names a scope body binds locally, per Python's symbol-table rules at the
/// granularity this analysis needs. Nested function/class bodies are not
/// entered (their names are bound here, their internals are not), while
/// comprehensions are entered only to pick up walrus targets, which bind in
/// the nearest enclosing non-comprehension scope.
fn prescan_body(body: &[ast::Stmt], bound: &mut BTreeSet<String>, globals: &mut BTreeSet<String>) {
    use ast::Stmt::*;
    for stmt in body {
        match stmt {
            FunctionDef(f) => {
                bound.insert(f.name.to_string());
                for dec in &f.decorator_list {
                    collect_walrus_targets(dec, bound);
                }
            }
            AsyncFunctionDef(f) => {
                bound.insert(f.name.to_string());
                for dec in &f.decorator_list {
                    collect_walrus_targets(dec, bound);
                }
            }
            ClassDef(c) => {
                bound.insert(c.name.to_string());
            }
            Assign(a) => {
                collect_walrus_targets(&a.value, bound);
                for t in &a.targets {
                    bind_target(t, bound);
                }
            }
            AugAssign(a) => {
                collect_walrus_targets(&a.value, bound);
                bind_target(&a.target, bound);
            }
            AnnAssign(a) => {
                // Even a bare annotation makes the name local to the scope.
                if let Some(v) = &a.value {
                    collect_walrus_targets(v, bound);
                }
                bind_target(&a.target, bound);
            }
            For(f) => {
                collect_walrus_targets(&f.iter, bound);
                bind_target(&f.target, bound);
                prescan_body(&f.body, bound, globals);
                prescan_body(&f.orelse, bound, globals);
            }
            AsyncFor(f) => {
                collect_walrus_targets(&f.iter, bound);
                bind_target(&f.target, bound);
                prescan_body(&f.body, bound, globals);
                prescan_body(&f.orelse, bound, globals);
            }
            While(w) => {
                collect_walrus_targets(&w.test, bound);
                prescan_body(&w.body, bound, globals);
                prescan_body(&w.orelse, bound, globals);
            }
            If(i) => {
                collect_walrus_targets(&i.test, bound);
                prescan_body(&i.body, bound, globals);
                prescan_body(&i.orelse, bound, globals);
            }
            With(w) => {
                for item in &w.items {
                    collect_walrus_targets(&item.context_expr, bound);
                    if let Some(vars) = &item.optional_vars {
                        bind_target(vars, bound);
                    }
                }
                prescan_body(&w.body, bound, globals);
            }
            AsyncWith(w) => {
                for item in &w.items {
                    collect_walrus_targets(&item.context_expr, bound);
                    if let Some(vars) = &item.optional_vars {
                        bind_target(vars, bound);
                    }
                }
                prescan_body(&w.body, bound, globals);
            }
            Match(m) => {
                collect_walrus_targets(&m.subject, bound);
                for case in &m.cases {
                    bind_pattern(&case.pattern, bound);
                    prescan_body(&case.body, bound, globals);
                }
            }
            Try(t) => {
                prescan_body(&t.body, bound, globals);
                for handler in &t.handlers {
                    let ast::ExceptHandler::ExceptHandler(h) = handler;
                    if let Some(name) = &h.name {
                        bound.insert(name.to_string());
                    }
                    prescan_body(&h.body, bound, globals);
                }
                prescan_body(&t.orelse, bound, globals);
                prescan_body(&t.finalbody, bound, globals);
            }
            TryStar(t) => {
                prescan_body(&t.body, bound, globals);
                for handler in &t.handlers {
                    let ast::ExceptHandler::ExceptHandler(h) = handler;
                    if let Some(name) = &h.name {
                        bound.insert(name.to_string());
                    }
                    prescan_body(&h.body, bound, globals);
                }
                prescan_body(&t.orelse, bound, globals);
                prescan_body(&t.finalbody, bound, globals);
            }
            Import(i) => {
                for alias in &i.names {
                    let binding = match &alias.asname {
                        Some(as_name) => as_name.to_string(),
                        None => alias
                            .name
                            .as_str()
                            .split('.')
                            .next()
                            .unwrap_or(alias.name.as_str())
                            .to_string(),
                    };
                    bound.insert(binding);
                }
            }
            ImportFrom(i) => {
                for alias in &i.names {
                    if alias.name.as_str() == "*" {
                        continue;
                    }
                    let binding = alias
                        .asname
                        .as_ref()
                        .map_or(alias.name.as_str(), |a| a.as_str());
                    bound.insert(binding.to_string());
                }
            }
            Global(g) => {
                for name in &g.names {
                    globals.insert(name.to_string());
                    bound.remove(name.as_str());
                }
            }
            Nonlocal(n) => {
                // Binds in an enclosing function scope, never the module;
                // suppressing events here is the conservative treatment.
                for name in &n.names {
                    bound.insert(name.to_string());
                }
            }
            Return(r) => {
                if let Some(v) = &r.value {
                    collect_walrus_targets(v, bound);
                }
            }
            Expr(e) => collect_walrus_targets(&e.value, bound),
            Delete(_) | Raise(_) | Assert(_) | Pass(_) | Break(_) | Continue(_) => {}
            TypeAlias(_) => {}
        }
    }
    // A `global` declaration wins over any bind collected from the same body.
    for name in globals.iter() {
        bound.remove(name);
    }
}

fn bind_pattern(pattern: &ast::Pattern, bound: &mut BTreeSet<String>) {
    use ast::Pattern::*;
    match pattern {
        MatchValue(_) | MatchSingleton(_) => {}
        MatchSequence(s) => {
            for p in &s.patterns {
                bind_pattern(p, bound);
            }
        }
        MatchMapping(m) => {
            for p in &m.patterns {
                bind_pattern(p, bound);
            }
            if let Some(rest) = &m.rest {
                bound.insert(rest.to_string());
            }
        }
        MatchClass(c) => {
            for p in c.patterns.iter().chain(&c.kwd_patterns) {
                bind_pattern(p, bound);
            }
        }
        MatchStar(s) => {
            if let Some(name) = &s.name {
                bound.insert(name.to_string());
            }
        }
        MatchAs(a) => {
            if let Some(p) = &a.pattern {
                bind_pattern(p, bound);
            }
            if let Some(name) = &a.name {
                bound.insert(name.to_string());
            }
        }
        MatchOr(o) => {
            for p in &o.patterns {
                bind_pattern(p, bound);
            }
        }
    }
}

/// Walrus targets in an expression, entering comprehensions (where walrus
/// binds outward) but not lambda bodies (where it binds in the lambda).
fn collect_walrus_targets(expr: &ast::Expr, bound: &mut BTreeSet<String>) {
    use ast::Expr::*;
    match expr {
        NamedExpr(e) => {
            if let Name(n) = e.target.as_ref() {
                bound.insert(n.id.to_string());
            }
            collect_walrus_targets(&e.value, bound);
        }
        BoolOp(e) => {
            for v in &e.values {
                collect_walrus_targets(v, bound);
            }
        }
        BinOp(e) => {
            collect_walrus_targets(&e.left, bound);
            collect_walrus_targets(&e.right, bound);
        }
        UnaryOp(e) => collect_walrus_targets(&e.operand, bound),
        Lambda(_) => {}
        IfExp(e) => {
            collect_walrus_targets(&e.test, bound);
            collect_walrus_targets(&e.body, bound);
            collect_walrus_targets(&e.orelse, bound);
        }
        Dict(e) => {
            for k in e.keys.iter().flatten() {
                collect_walrus_targets(k, bound);
            }
            for v in &e.values {
                collect_walrus_targets(v, bound);
            }
        }
        Set(e) => {
            for v in &e.elts {
                collect_walrus_targets(v, bound);
            }
        }
        ListComp(e) => {
            collect_walrus_targets(&e.elt, bound);
            for g in &e.generators {
                collect_walrus_targets(&g.iter, bound);
                for c in &g.ifs {
                    collect_walrus_targets(c, bound);
                }
            }
        }
        SetComp(e) => {
            collect_walrus_targets(&e.elt, bound);
            for g in &e.generators {
                collect_walrus_targets(&g.iter, bound);
                for c in &g.ifs {
                    collect_walrus_targets(c, bound);
                }
            }
        }
        DictComp(e) => {
            collect_walrus_targets(&e.key, bound);
            collect_walrus_targets(&e.value, bound);
            for g in &e.generators {
                collect_walrus_targets(&g.iter, bound);
                for c in &g.ifs {
                    collect_walrus_targets(c, bound);
                }
            }
        }
        GeneratorExp(e) => {
            collect_walrus_targets(&e.elt, bound);
            for g in &e.generators {
                collect_walrus_targets(&g.iter, bound);
                for c in &g.ifs {
                    collect_walrus_targets(c, bound);
                }
            }
        }
        Await(e) => collect_walrus_targets(&e.value, bound),
        Yield(e) => {
            if let Some(v) = &e.value {
                collect_walrus_targets(v, bound);
            }
        }
        YieldFrom(e) => collect_walrus_targets(&e.value, bound),
        Compare(e) => {
            collect_walrus_targets(&e.left, bound);
            for c in &e.comparators {
                collect_walrus_targets(c, bound);
            }
        }
        Call(e) => {
            collect_walrus_targets(&e.func, bound);
            for a in &e.args {
                collect_walrus_targets(a, bound);
            }
            for kw in &e.keywords {
                collect_walrus_targets(&kw.value, bound);
            }
        }
        FormattedValue(e) => collect_walrus_targets(&e.value, bound),
        JoinedStr(e) => {
            for v in &e.values {
                collect_walrus_targets(v, bound);
            }
        }
        Constant(_) | Name(_) => {}
        Attribute(e) => collect_walrus_targets(&e.value, bound),
        Subscript(e) => {
            collect_walrus_targets(&e.value, bound);
            collect_walrus_targets(&e.slice, bound);
        }
        Starred(e) => collect_walrus_targets(&e.value, bound),
        List(e) => {
            for v in &e.elts {
                collect_walrus_targets(v, bound);
            }
        }
        Tuple(e) => {
            for v in &e.elts {
                collect_walrus_targets(v, bound);
            }
        }
        Slice(e) => {
            for part in [&e.lower, &e.upper, &e.step].into_iter().flatten() {
                collect_walrus_targets(part, bound);
            }
        }
    }
}

/// Root packages referenced by import statements anywhere in the source
/// (including inside function bodies and conditionals). `None` when the
/// neutralized source still fails to parse.
pub fn import_roots(source: &str) -> Option<BTreeSet<String>> {
    let (neutralized, _) = neutralize_magics(source);
    let module = match parse(&neutralized, Mode::Module, "<cell>") {
        Ok(ast::Mod::Module(m)) => m,
        _ => return None,
    };
    let mut roots = BTreeSet::new();
    collect_import_roots(&module.body, &mut roots);
    Some(roots)
}

fn collect_import_roots(body: &[ast::Stmt], roots: &mut BTreeSet<String>) {
    use ast::Stmt::*;
    for stmt in body {
        match stmt {
            Import(i) => {
                for alias in &i.names {
                    if let Some(root) = alias.name.as_str().split('.').next() {
                        roots.insert(root.to_string());
                    }
                }
            }
            ImportFrom(i) => {
                if let Some(module) = &i.module {
                    if let Some(root) = module.as_str().split('.').next() {
                        roots.insert(root.to_string());
                    }
                }
            }
            FunctionDef(f) => collect_import_roots(&f.body, roots),
            AsyncFunctionDef(f) => collect_import_roots(&f.body, roots),
            ClassDef(c) => collect_import_roots(&c.body, roots),
            For(f) => {
                collect_import_roots(&f.body, roots);
                collect_import_roots(&f.orelse, roots);
            }
            AsyncFor(f) => {
                collect_import_roots(&f.body, roots);
                collect_import_roots(&f.orelse, roots);
            }
            While(w) => {
                collect_import_roots(&w.body, roots);
                collect_import_roots(&w.orelse, roots);
            }
            If(i) => {
                collect_import_roots(&i.body, roots);
                collect_import_roots(&i.orelse, roots);
            }
            With(w) => collect_import_roots(&w.body, roots),
            AsyncWith(w) => collect_import_roots(&w.body, roots),
            Try(t) => {
                collect_import_roots(&t.body, roots);
                for handler in &t.handlers {
                    let ast::ExceptHandler::ExceptHandler(h) = handler;
                    collect_import_roots(&h.body, roots);
                }
                collect_import_roots(&t.orelse, roots);
                collect_import_roots(&t.finalbody, roots);
            }
            TryStar(t) => {
                collect_import_roots(&t.body, roots);
                for handler in &t.handlers {
                    let ast::ExceptHandler::ExceptHandler(h) = handler;
                    collect_import_roots(&h.body, roots);
                }
                collect_import_roots(&t.orelse, roots);
                collect_import_roots(&t.finalbody, roots);
            }
            Match(m) => {
                for case in &m.cases {
                    collect_import_roots(&case.body, roots);
                }
            }
            _ => {}
        }
    }
}
