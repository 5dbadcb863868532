//! Helpers for the small line-oriented config files (word lists, TSV).

use std::path::Path;

use crate::error::{Error, Result};

/// Non-blank lines with their 1-based line numbers. Lines starting with `#`
/// are comments.
pub(crate) fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| {
            let l = l.trim();
            !l.is_empty() && !l.starts_with('#')
        })
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r').to_string()))
        .collect())
}

pub(crate) fn split_tab<'a>(
    path: &Path,
    lineno: usize,
    line: &'a str,
) -> Result<(&'a str, &'a str)> {
    line.split_once('\t').ok_or_else(|| {
        Error::format(
            path.display().to_string(),
            lineno,
            0,
            "expected two tab-separated columns",
        )
    })
}
