//! Emission of result files and the run manifest.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub artifact: &'static str,
    pub version: &'static str,
    pub command: String,
    pub started_at: String,
    pub finished_at: String,
    pub input_hash: String,
    pub threads: usize,
    pub exit_code: i32,
    pub config: Value,
    pub files: Vec<FileEntry>,
}

pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("json output");
    bytes.push(b'\n');
    bytes
}

/// Writes through a temporary sibling and renames, so no partial file is left under the final name.
fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = dir.join(format!(".{name}.partial"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, dir.join(name))
}

/// Writes `files` into `dir` and returns their manifest entries.
pub fn write_files(dir: &Path, files: &[(String, Vec<u8>)]) -> std::io::Result<Vec<FileEntry>> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for (name, bytes) in files {
        debug_assert!(!name.contains('/') && !name.contains('\\'));
        write_atomic(dir, name, bytes)?;
        entries.push(FileEntry { name: name.clone(), sha256: sha256_hex(bytes), bytes: bytes.len() });
    }
    Ok(entries)
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> std::io::Result<()> {
    write_atomic(dir, "manifest.json", &json_bytes(manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn writes_are_listed() {
        let dir = tempfile::tempdir().unwrap();
        let files = vec![("a.json".to_string(), b"{}\n".to_vec()), ("b.csv".to_string(), b"t\n".to_vec())];
        let entries = write_files(dir.path(), &files).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(fs::read(dir.path().join("b.csv")).unwrap(), b"t\n");
        let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 2);
    }
}
