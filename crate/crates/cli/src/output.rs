use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::CliError;

/// Fixed 17-significant-digit formatting.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV table with a leading `# config_sha256:` comment.
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(config_hash: &str, header: &[&str]) -> Csv {
        Csv { text: format!("# config_sha256: {config_hash}\n{}\n", header.join(",")), columns: header.len() }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.columns);
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Output directory that remembers what was written.
pub struct OutDir {
    pub dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<OutDir, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(OutDir { dir: dir.to_path_buf(), written: vec![] })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        log::info!("wrote {}", path.display());
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, csv: &Csv) -> Result<(), CliError> {
        self.write(name, csv.as_str())
    }

    /// Pretty JSON object with a `config_hash` field added.
    pub fn json(&mut self, name: &str, config_hash: &str, value: Value) -> Result<(), CliError> {
        let mut value = value;
        match &mut value {
            Value::Object(map) => {
                map.insert("config_hash".into(), Value::String(config_hash.into()));
            }
            other => {
                let inner = other.take();
                value = serde_json::json!({ "config_hash": config_hash, "value": inner });
            }
        }
        let text = serde_json::to_string_pretty(&value).map_err(|e| CliError::Io(e.to_string()))?;
        self.write(name, &(text + "\n"))
    }
}
