use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

pub const TOOL: &str = "autores";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Fixed formatting for every float written to a data file.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.12e}")
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// One file to be written under the output directory.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub body: Vec<u8>,
}

/// Everything a command produces; nothing touches the disk until the command
/// has finished.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<Artifact>,
    pub stdout: String,
}

impl Outputs {
    pub fn csv(&mut self, name: &str, command: &str, params: &Value, columns: &[&str], rows: Vec<Vec<String>>) -> Result<(), CliError> {
        let mut body = format!("# {TOOL} {VERSION} {command} {params}\n").into_bytes();
        {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut body);
            w.write_record(columns).map_err(csv_err)?;
            for row in rows {
                w.write_record(&row).map_err(csv_err)?;
            }
            w.flush()?;
        }
        self.files.push(Artifact { name: name.into(), body });
        Ok(())
    }

    pub fn json(&mut self, name: &str, command: &str, params: &Value, result: &impl Serialize) -> Result<(), CliError> {
        let doc = serde_json::json!({
            "tool": TOOL,
            "version": VERSION,
            "command": command,
            "params": params,
            "result": serde_json::to_value(result).map_err(|e| CliError::Precondition(e.to_string()))?,
        });
        let mut body = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::Precondition(e.to_string()))?;
        body.push(b'\n');
        self.files.push(Artifact { name: name.into(), body });
        Ok(())
    }

    pub fn say(&mut self, line: impl AsRef<str>) {
        self.stdout.push_str(line.as_ref());
        self.stdout.push('\n');
    }

    /// Writes each file through a temporary sibling and a rename.
    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir)?;
        for a in &self.files {
            let tmp = dir.join(format!(".{}.tmp", a.name));
            std::fs::write(&tmp, &a.body)?;
            std::fs::rename(&tmp, dir.join(&a.name))?;
        }
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}
