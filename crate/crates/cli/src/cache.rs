//! Content-addressed result store: `<run_id>.csv` plus `<run_id>.sha256`
//! holding the hex digest of the CSV bytes. Writes go through a temporary
//! file and an atomic rename; eviction is manual.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::RunConfig;

/// Bumped whenever output formatting or numerics change.
pub const VERSION_TAG: &str = concat!("wingqed-", env!("CARGO_PKG_VERSION"), "/csv1");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of schema version, resolved config, code version and subcommand.
pub fn run_id(cfg: &RunConfig, subcommand: &str) -> String {
    let text = format!(
        "schema_version={}\nversion={VERSION_TAG}\nsubcommand={subcommand}\n{}",
        cfg.schema_version,
        cfg.canonical()
    );
    sha256_hex(text.as_bytes())
}

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Lookup {
    Hit(Vec<u8>),
    Miss,
    /// Stored bytes do not match their checksum.
    Corrupt,
}

impl Cache {
    pub fn open(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn csv_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.csv"))
    }

    fn sum_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.sha256"))
    }

    pub fn lookup(&self, id: &str) -> Lookup {
        let (Ok(bytes), Ok(sum)) = (fs::read(self.csv_path(id)), fs::read_to_string(self.sum_path(id)))
        else {
            return Lookup::Miss;
        };
        if sha256_hex(&bytes) != sum.trim() {
            log::warn!("event=cache_corruption run_id={id}");
            return Lookup::Corrupt;
        }
        Lookup::Hit(bytes)
    }

    /// The checksum lands last, so an interrupted store reads as a miss.
    pub fn store(&self, id: &str, bytes: &[u8]) -> std::io::Result<()> {
        let _ = fs::remove_file(self.sum_path(id));
        self.write_atomic(&self.csv_path(id), bytes)?;
        self.write_atomic(&self.sum_path(id), sha256_hex(bytes).as_bytes())
    }

    fn write_atomic(&self, path: &Path, bytes: &[u8]) -> std::io::Result<()> {
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn miss_hit_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::open(dir.path()).unwrap();
        assert_eq!(cache.lookup("abc"), Lookup::Miss);
        cache.store("abc", b"x,y\n1,2\n").unwrap();
        assert_eq!(cache.lookup("abc"), Lookup::Hit(b"x,y\n1,2\n".to_vec()));
        let mut bytes = fs::read(cache.csv_path("abc")).unwrap();
        bytes[0] ^= 1;
        fs::write(cache.csv_path("abc"), bytes).unwrap();
        assert_eq!(cache.lookup("abc"), Lookup::Corrupt);
    }

    #[test]
    fn run_id_tracks_config_and_subcommand() {
        let a = RunConfig::from_toml_str("schema_version = 1\n[geometry]\n").unwrap();
        let b = RunConfig::from_toml_str("schema_version = 1\n[geometry]\nd_over_L = 0.1\n").unwrap();
        assert_eq!(run_id(&a, "modes"), run_id(&a.clone(), "modes"));
        assert_ne!(run_id(&a, "modes"), run_id(&b, "modes"));
        assert_ne!(run_id(&a, "modes"), run_id(&a, "pipeline"));
        assert_eq!(run_id(&a, "modes").len(), 64);
    }
}
