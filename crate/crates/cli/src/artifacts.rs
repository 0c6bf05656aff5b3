//! Atomic artifact writing. Every file carries the resolved config.

use serde::Serialize;
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};
use tempfile::NamedTempFile;

pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

pub struct ArtifactWriter {
    dir: PathBuf,
    task: String,
    config: Value,
    written: Vec<PathBuf>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path, task: &str, config: Value) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), task: task.to_string(), config, written: Vec::new() })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// `{version, task, config, result}` as `<task>.json`.
    pub fn json(&mut self, result: &impl Serialize) -> std::io::Result<PathBuf> {
        let doc = json!({
            "version": VERSION,
            "task": self.task,
            "config": self.config,
            "result": result,
        });
        let mut text = serde_json::to_string_pretty(&doc).map_err(std::io::Error::other)?;
        text.push('\n');
        self.put(&format!("{}.json", self.task), &text)
    }

    /// CSV preceded by `#` lines with version and config.
    pub fn csv(&mut self, table: &str, body: &str) -> std::io::Result<PathBuf> {
        let text = format!("# ldp {} {}\n# config: {}\n{body}", VERSION, self.task, self.config);
        self.put(&format!("{}_{table}.csv", self.task), &text)
    }

    /// SVG document; the config goes into its `<desc>` element.
    pub fn svg(&mut self, name: &str, plot: &crate::svg::Plot) -> std::io::Result<PathBuf> {
        let desc = format!("ldp {} {} config: {}", VERSION, self.task, self.config);
        self.put(&format!("{}_{name}.svg", self.task), &plot.render(&desc))
    }

    fn put(&mut self, name: &str, text: &str) -> std::io::Result<PathBuf> {
        let path = self.dir.join(name);
        let mut tmp = NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(text.as_bytes())?;
        tmp.as_file().sync_all()?;
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
        }
        tmp.persist(&path).map_err(|e| e.error)?;
        self.written.push(path.clone());
        Ok(path)
    }
}
