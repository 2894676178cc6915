//! Report assembly and rendering.
//!
//! A report is a `#` comment header followed by named sections. Only the
//! `# generated:` line depends on anything outside the run configuration.

use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use hsl_core::Verdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Table,
}

pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), real)
}

pub struct Section {
    name: String,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Section {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len(), "section {}", self.name);
        self.rows.push(row);
    }
}

pub struct Report {
    command: String,
    config: Vec<(String, String)>,
    notes: Vec<String>,
    sections: Vec<Section>,
    verdicts: Vec<Verdict>,
}

impl Report {
    pub fn new(command: &str, config: Vec<(String, String)>) -> Self {
        Self { command: command.to_string(), config, notes: Vec::new(), sections: Vec::new(), verdicts: Vec::new() }
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn section(&mut self, s: Section) {
        self.sections.push(s);
    }

    pub fn verdict(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    pub fn worst(&self) -> Verdict {
        Verdict::worst(self.verdicts.iter().copied())
    }

    pub fn exit_code(&self) -> i32 {
        match self.worst() {
            Verdict::Pass => 0,
            Verdict::Inconclusive => 2,
            Verdict::Fail => 1,
        }
    }

    pub fn render(&self, format: Format) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# hsl {} {}", env!("CARGO_PKG_VERSION"), self.command);
        for (k, v) in &self.config {
            let _ = writeln!(out, "# {k} = {v}");
        }
        let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let _ = writeln!(out, "# generated: unix {stamp}");
        for n in &self.notes {
            let _ = writeln!(out, "# note: {n}");
        }
        if !self.verdicts.is_empty() {
            let _ = writeln!(out, "# overall: {}", self.worst().label());
        }
        for s in &self.sections {
            let _ = writeln!(out, "\n# section: {}", s.name);
            match format {
                Format::Csv => render_csv(&mut out, s),
                Format::Table => render_table(&mut out, s),
            }
        }
        out
    }
}

fn csv_field(f: &str) -> String {
    if f.contains([',', '"', '\n']) {
        format!("\"{}\"", f.replace('"', "\"\""))
    } else {
        f.to_string()
    }
}

fn render_csv(out: &mut String, s: &Section) {
    for row in std::iter::once(&s.columns).chain(&s.rows) {
        let line: Vec<String> = row.iter().map(|f| csv_field(f)).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
}

fn render_table(out: &mut String, s: &Section) {
    let mut widths: Vec<usize> = s.columns.iter().map(String::len).collect();
    for row in &s.rows {
        for (w, f) in widths.iter_mut().zip(row) {
            *w = (*w).max(f.len());
        }
    }
    for row in std::iter::once(&s.columns).chain(&s.rows) {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(f, w)| format!("{f:>w$}")).collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
}
