//! Number rendering and output destinations.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use dssbound::rational::{self, Rational};

use crate::commands::CliError;
use crate::Output;

/// Environment variable naming the directory for relative output paths.
pub const OUT_DIR_VAR: &str = "DSSBOUND_OUT_DIR";

/// A number as an exact fraction (when known) and a 12-digit decimal.
#[derive(Debug, Clone, Serialize)]
pub struct Number {
    pub fraction: Option<String>,
    pub decimal: String,
}

impl Number {
    pub fn exact(v: &Rational) -> Self {
        Number {
            fraction: Some(rational::to_fraction_string(v)),
            decimal: rational::to_decimal_string(v),
        }
    }

    pub fn float(v: f64) -> Self {
        Number {
            fraction: None,
            decimal: rational::format_f64(v),
        }
    }
}

fn resolve(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_VAR) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

/// Writes `text` to the requested file, or to standard output.
pub fn emit(out: &Output, text: &str) -> Result<(), CliError> {
    match &out.output {
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
                // A closed pipe (`dssbound dims ... | head`) is not an error.
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    Err(CliError::Usage(format!("cannot write to stdout: {e}")))
                }
                _ => Ok(()),
            }
        }
        Some(path) => {
            let path = resolve(path);
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)
                    .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", parent.display())))?;
            }
            std::fs::write(&path, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
        }
    }
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}
