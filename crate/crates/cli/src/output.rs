//! Output directories: result files, the resolved configuration and a
//! manifest listing every file with its size and SHA-256.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Version tag of the directory layout, recorded in every manifest.
pub const FORMAT: &str = "cbdt-output/v1";
pub const OUTPUT_ROOT_ENV: &str = "CBDT_OUTPUT_ROOT";
pub const MANIFEST: &str = "manifest.json";
pub const CONFIG: &str = "config.toml";

/// `explicit`, else `$CBDT_OUTPUT_ROOT/<command>`, else `cbdt-output/<command>`.
pub fn output_dir(explicit: Option<PathBuf>, command: &str) -> PathBuf {
    explicit.unwrap_or_else(|| {
        let root = std::env::var_os(OUTPUT_ROOT_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("cbdt-output"));
        root.join(command)
    })
}

#[derive(Serialize)]
struct Entry {
    path: String,
    bytes: u64,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    format: &'a str,
    command: &'a str,
    version: &'a str,
    files: &'a [Entry],
}

pub struct OutputDir {
    root: PathBuf,
    command: String,
    files: Vec<Entry>,
}

impl OutputDir {
    pub fn create(root: PathBuf, command: &str) -> Result<Self> {
        fs::create_dir_all(&root).with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(OutputDir {
            root,
            command: command.to_string(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Register a file that something else has already written.
    pub fn record(&mut self, name: &str) -> Result<()> {
        let bytes = fs::read(self.path(name)).with_context(|| format!("reading back {name}"))?;
        let digest = Sha256::digest(&bytes);
        let mut hex = String::with_capacity(64);
        for b in digest {
            let _ = write!(hex, "{b:02x}");
        }
        self.files.retain(|e| e.path != name);
        self.files.push(Entry {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: hex,
        });
        Ok(())
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.record(name)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    /// Write a file through a writer-taking export function.
    pub fn write_with<F>(&mut self, name: &str, export: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> cbdt::Result<()>,
    {
        let mut buf = Vec::new();
        export(&mut buf)?;
        self.write(name, buf)
    }

    /// Write the manifest; call last.
    pub fn finish(self) -> Result<PathBuf> {
        let manifest = Manifest {
            format: FORMAT,
            command: &self.command,
            version: env!("CARGO_PKG_VERSION"),
            files: &self.files,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.root.join(MANIFEST);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(self.root)
    }
}
