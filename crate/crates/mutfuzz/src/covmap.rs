//! File-backed coverage map shared with driver processes.

use std::io;
use std::path::{Path, PathBuf};

use memmap2::MmapMut;
use mutfuzz_core::fuzz::MAP_SIZE;

pub struct SharedMap {
    file: tempfile::NamedTempFile,
    map: MmapMut,
}

impl SharedMap {
    /// Creates the backing file in `/dev/shm` when available, else in `dir`.
    pub fn create(dir: &Path) -> io::Result<SharedMap> {
        let shm = Path::new("/dev/shm");
        let base = if shm.is_dir() { shm } else { dir };
        let file = tempfile::Builder::new().prefix("mutfuzz-cov-").tempfile_in(base).or_else(|_| {
            tempfile::Builder::new().prefix("mutfuzz-cov-").tempfile_in(dir)
        })?;
        file.as_file().set_len(MAP_SIZE as u64)?;
        // SAFETY: the file is private to this campaign; drivers only write
        // counters while we wait for them.
        let map = unsafe { MmapMut::map_mut(file.as_file())? };
        Ok(SharedMap { file, map })
    }

    pub fn path(&self) -> PathBuf {
        self.file.path().to_path_buf()
    }

    pub fn reset(&mut self) {
        self.map.fill(0);
    }

    pub fn counters(&self) -> &[u8] {
        &self.map
    }
}
