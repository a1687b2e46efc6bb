//! CSV assembly and atomic file emission.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// A finished output file held in memory until every computation of the
/// command has succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

/// `#`-prefixed header: the command name and the resolved configuration.
pub fn header(command: &str, config_toml: &str) -> String {
    let mut s = format!("# tmfa {command}\n");
    for line in config_toml.lines() {
        if line.is_empty() {
            s.push_str("#\n");
        } else {
            let _ = writeln!(s, "# {line}");
        }
    }
    s
}

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(command: &str, config_toml: &str, columns: &[&str]) -> Self {
        let mut text = header(command, config_toml);
        text.push_str(&columns.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|v| fmt(*v)).collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn raw_row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn finish(self, name: &str) -> OutputFile {
        OutputFile {
            name: name.into(),
            contents: self.text,
        }
    }
}

/// Shortest round-trip representation.
pub fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Writes every file through a temporary sibling and a rename.
pub fn write_all(dir: &Path, files: &[OutputFile]) -> Result<Vec<PathBuf>, CliError> {
    let io = |what: &str, p: &Path, e: std::io::Error| CliError::Io(format!("{what} {}: {e}", p.display()));
    fs::create_dir_all(dir).map_err(|e| io("creating", dir, e))?;
    let mut written = Vec::with_capacity(files.len());
    for f in files {
        let target = dir.join(&f.name);
        let tmp = dir.join(format!(".{}.tmp-{}", f.name, std::process::id()));
        fs::write(&tmp, &f.contents).map_err(|e| io("writing", &tmp, e))?;
        fs::rename(&tmp, &target).map_err(|e| {
            let _ = fs::remove_file(&tmp);
            io("renaming", &target, e)
        })?;
        written.push(target);
    }
    Ok(written)
}
