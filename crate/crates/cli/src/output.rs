//! Output directory with atomic file replacement.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|source| CliError::Io { path: root.to_path_buf(), source })?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Writes `rel` by filling a sibling temporary file and renaming it over
    /// the target, so readers never observe a partial file.
    pub fn write_with<F>(&self, rel: &str, fill: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let target = self.path(rel);
        let io_err = |source| CliError::Io { path: target.clone(), source };
        if let Some(parent) = target.parent() {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
        let mut buf = Vec::new();
        fill(&mut buf).map_err(io_err)?;
        let name = target.file_name().and_then(|n| n.to_str()).unwrap_or("out");
        let tmp = target.with_file_name(format!(".{name}.tmp{}", std::process::id()));
        let result = (|| {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&buf)?;
            f.sync_all()?;
            fs::rename(&tmp, &target)
        })();
        if result.is_err() {
            let _ = fs::remove_file(&tmp);
        }
        result.map_err(io_err)?;
        Ok(target)
    }

    pub fn write_json<T: Serialize>(&self, rel: &str, value: &T) -> Result<PathBuf, CliError> {
        self.write_with(rel, |buf| {
            serde_json::to_writer_pretty(&mut *buf, value)?;
            buf.push(b'\n');
            Ok(())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_nested_files_and_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutputDir::create(dir.path()).unwrap();
        out.write_with("plots/a.dat", |b| b.write_all(b"1 2\n")).unwrap();
        out.write_json("x.json", &vec![1, 2]).unwrap();
        out.write_json("x.json", &vec![3]).unwrap();
        assert_eq!(fs::read_to_string(out.path("plots/a.dat")).unwrap(), "1 2\n");
        assert_eq!(fs::read_to_string(out.path("x.json")).unwrap(), "[\n  3\n]\n");
        let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 2, "{names:?}");
    }
}
