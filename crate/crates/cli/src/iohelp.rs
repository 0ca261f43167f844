//! Small IO helpers: every text input is readable from a file path or, with
//! the path `-`, from standard input.

use std::io::Read;
use std::path::Path;

use crate::CliError;

/// Reads a whole text input. `-` means standard input.
pub fn read_text(path: &Path) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| CliError::data(format!("reading standard input: {e}")))?;
        return Ok(buf);
    }
    std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("reading {}: {e}", path.display())))
}

/// Writes a text output. `-` (or no path) means standard output.
pub fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) if p.as_os_str() != "-" => std::fs::write(p, text)
            .map_err(|e| CliError::data(format!("writing {}: {e}", p.display()))),
        _ => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::data(format!("writing standard output: {e}")))
        }
    }
}
