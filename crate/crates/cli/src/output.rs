//! Atomic file output with reproducibility sidecars.

use std::io::Write;
use std::path::{Path, PathBuf};

use photonbench::Error;
use serde::Serialize;

/// Writes `bytes` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.toml");
    path.with_file_name(name)
}

/// Everything needed to regenerate an artifact: the command line and the
/// resolved configuration. Contains no timestamps, so reruns are
/// byte-identical.
#[derive(Serialize)]
pub struct Meta<'a, C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub args: &'a [String],
    pub config: &'a C,
}

/// Output sink for one command: every file gets a sidecar and is listed in
/// the summary.
pub struct Outputs<'a, C: Serialize> {
    pub command: &'a str,
    pub args: &'a [String],
    pub config: &'a C,
    pub written: Vec<String>,
}

impl<'a, C: Serialize> Outputs<'a, C> {
    pub fn new(command: &'a str, args: &'a [String], config: &'a C) -> Self {
        Outputs {
            command,
            args,
            config,
            written: Vec::new(),
        }
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<(), Error> {
        write_atomic(path, bytes)?;
        let meta = Meta {
            tool: "photonbench",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            args: self.args,
            config: self.config,
        };
        let text =
            toml::to_string(&meta).map_err(|e| Error::Numerical(format!("metadata: {e}")))?;
        write_atomic(&sidecar_path(path), text.as_bytes())?;
        self.written.push(path.display().to_string());
        Ok(())
    }
}
