//! Output files written through a temporary sibling and renamed into place.
//! Files written by a failed run are removed again.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

#[derive(Debug, Default)]
pub struct Outputs {
    written: Vec<PathBuf>,
    keep: bool,
}

impl Outputs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        self.write_with(path, |tmp| fs::write(tmp, bytes).with_context(|| format!("{}", tmp.display())))
    }

    /// Lets `produce` write the temporary file itself.
    pub fn write_with(&mut self, path: &Path, produce: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        let name = path
            .file_name()
            .with_context(|| format!("{}: not a file path", path.display()))?;
        let tmp = path.with_file_name(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
        if let Err(e) = produce(&tmp) {
            let _ = fs::remove_file(&tmp);
            return Err(e);
        }
        if let Err(e) = fs::rename(&tmp, path) {
            let _ = fs::remove_file(&tmp);
            return Err(e).with_context(|| format!("{}", path.display()));
        }
        self.written.push(path.to_path_buf());
        Ok(())
    }

    /// Keeps everything written so far.
    pub fn commit(mut self) -> Vec<PathBuf> {
        self.keep = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.keep {
            return;
        }
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncommitted_outputs_are_removed() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.txt");
        {
            let mut out = Outputs::new();
            out.write(&a, b"x").unwrap();
            assert!(a.exists());
        }
        assert!(!a.exists());

        let mut out = Outputs::new();
        out.write(&a, b"y").unwrap();
        assert_eq!(out.commit(), vec![a.clone()]);
        assert_eq!(fs::read(&a).unwrap(), b"y");
        // no temporaries left behind
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn missing_directory_fails_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Outputs::new();
        assert!(out.write(&dir.path().join("nope/a.txt"), b"x").is_err());
        assert!(out.commit().is_empty());
    }
}
