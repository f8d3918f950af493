//! Line-oriented helpers shared by the CSV readers and writers.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use tempfile::NamedTempFile;

use crate::error::{Error, Result};

/// Writes `contents` to `path` through a sibling temporary file and a rename,
/// so readers never observe a partially written file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = NamedTempFile::new_in(&dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// A text file split into numbered, non-blank lines.
pub(crate) struct Lines<'a> {
    pub path: &'a Path,
    lines: Vec<(usize, String)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    pub fn read(path: &'a Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end_matches('\r').to_string()))
            .filter(|(_, l)| !l.trim().is_empty())
            .collect();
        Ok(Lines {
            path,
            lines,
            pos: 0,
        })
    }

    pub fn parse_err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    pub fn value_err(&self, line: usize, column: usize, message: impl Into<String>) -> Error {
        Error::Value {
            path: self.path.to_path_buf(),
            line,
            column,
            message: message.into(),
        }
    }

    /// Consumes the `# key=value ...` metadata line.
    pub fn metadata(&mut self) -> Result<Metadata> {
        let (no, line) = self.next_raw().ok_or_else(|| self.parse_err(1, "missing metadata line"))?;
        let body = line
            .strip_prefix('#')
            .ok_or_else(|| self.parse_err(no, "expected a '# key=value' metadata comment"))?;
        let mut fields = HashMap::new();
        for token in body.split_whitespace() {
            let (k, v) = token
                .split_once('=')
                .ok_or_else(|| self.parse_err(no, format!("metadata token '{token}' is not key=value")))?;
            fields.insert(k.to_string(), v.to_string());
        }
        Ok(Metadata { line: no, fields })
    }

    /// Consumes the header line and checks it matches `expected` exactly.
    pub fn header(&mut self, expected: &str) -> Result<()> {
        let (no, line) = self
            .next_raw()
            .ok_or_else(|| self.parse_err(2, "missing header line"))?;
        if line.trim() != expected {
            return Err(self.parse_err(no, format!("expected header '{expected}', found '{}'", line.trim())));
        }
        Ok(())
    }

    fn next_raw(&mut self) -> Option<(usize, String)> {
        let item = self.lines.get(self.pos).cloned();
        self.pos += 1;
        item
    }

    /// Remaining lines as `(line number, fields)`.
    pub fn records(&mut self) -> Vec<(usize, Vec<String>)> {
        let rest = self.lines[self.pos.min(self.lines.len())..]
            .iter()
            .map(|(no, l)| (*no, l.split(',').map(|f| f.trim().to_string()).collect()))
            .collect();
        self.pos = self.lines.len();
        rest
    }

    pub fn field<V: FromStr>(&self, line: usize, column: usize, raw: &str, what: &str) -> Result<V> {
        raw.parse()
            .map_err(|_| self.value_err(line, column, format!("cannot parse {what} from '{raw}'")))
    }
}

pub(crate) struct Metadata {
    pub line: usize,
    fields: HashMap<String, String>,
}

impl Metadata {
    pub fn text(&self, lines: &Lines<'_>, key: &str) -> Result<String> {
        self.fields
            .get(key)
            .cloned()
            .ok_or_else(|| lines.parse_err(self.line, format!("metadata is missing '{key}'")))
    }

    pub fn parsed<V: FromStr>(&self, lines: &Lines<'_>, key: &str) -> Result<V> {
        let raw = self.text(lines, key)?;
        raw.parse()
            .map_err(|_| lines.parse_err(self.line, format!("metadata '{key}={raw}' is not valid")))
    }

    pub fn rate(&self, lines: &Lines<'_>) -> Result<f64> {
        let rate: f64 = self.parsed(lines, "rate_hz")?;
        if !(rate.is_finite() && rate > 0.0) {
            return Err(lines.parse_err(self.line, format!("rate_hz must be positive, got {rate}")));
        }
        Ok(rate)
    }
}

/// Checks the leading `frame` column counts up from zero.
pub(crate) fn check_frame(lines: &Lines<'_>, line: usize, raw: &str, expected: usize) -> Result<()> {
    let frame: usize = lines.field(line, 1, raw, "frame index")?;
    if frame != expected {
        return Err(lines.value_err(line, 1, format!("frame index {frame}, expected {expected}")));
    }
    Ok(())
}

/// Rejects whitespace and separators inside identifiers written to metadata lines.
pub(crate) fn check_id(id: &str, what: &str) -> Result<()> {
    if id.is_empty() || id.contains(char::is_whitespace) || id.contains(',') || id.contains('=') {
        return Err(Error::InvalidArgument(format!(
            "{what} '{id}' must be non-empty without whitespace, ',' or '='"
        )));
    }
    Ok(())
}
