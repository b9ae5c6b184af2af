//! Every input file the commands read goes through a [`FileSource`], so
//! callers can observe which paths a command touched.

use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

pub trait FileSource: Sync {
    fn open(&self, path: &Path) -> io::Result<Box<dyn BufRead + '_>>;

    /// Paths of a directory's entries, sorted.
    fn list_dir(&self, path: &Path) -> io::Result<Vec<PathBuf>>;
}

/// Reads straight from the filesystem.
#[derive(Debug, Clone, Copy, Default)]
pub struct OsFiles;

impl FileSource for OsFiles {
    fn open(&self, path: &Path) -> io::Result<Box<dyn BufRead + '_>> {
        let file = File::open(path).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
        Ok(Box::new(BufReader::new(file)))
    }

    fn list_dir(&self, path: &Path) -> io::Result<Vec<PathBuf>> {
        let mut entries = std::fs::read_dir(path)
            .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))?
            .map(|e| e.map(|e| e.path()))
            .collect::<io::Result<Vec<_>>>()?;
        entries.sort();
        Ok(entries)
    }
}

/// Records every path opened or listed, then delegates.
#[derive(Debug, Default)]
pub struct TracingFiles<F> {
    inner: F,
    accessed: Mutex<Vec<PathBuf>>,
}

impl<F: FileSource> TracingFiles<F> {
    pub fn new(inner: F) -> Self {
        Self { inner, accessed: Mutex::new(Vec::new()) }
    }

    /// Accessed paths in access order.
    pub fn accessed(&self) -> Vec<PathBuf> {
        self.accessed.lock().expect("trace lock").clone()
    }

    fn record(&self, path: &Path) {
        self.accessed.lock().expect("trace lock").push(path.to_path_buf());
    }
}

impl<F: FileSource> FileSource for TracingFiles<F> {
    fn open(&self, path: &Path) -> io::Result<Box<dyn BufRead + '_>> {
        self.record(path);
        self.inner.open(path)
    }

    fn list_dir(&self, path: &Path) -> io::Result<Vec<PathBuf>> {
        self.record(path);
        self.inner.list_dir(path)
    }
}
