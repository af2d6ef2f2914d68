//! Reading inputs and writing outputs atomically (temp file, then rename).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use qpt_core::document::{from_json, to_json};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))
}

pub fn read_document<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    from_json(&text).map_err(|e| CliError::input(path.display(), e))
}

fn parent_of(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    let io = |e| CliError::io(path.display(), e);
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(parent_of(path)).map_err(io)?;
    tmp.write_all(text.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    log::debug!("wrote {}", path.display());
    Ok(())
}

pub fn write_document<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_text(path, &to_json(value))
}

/// Sidecar path for a mesh file: `name.obj` → `name.mesh.json`.
pub fn sidecar_path(obj: &Path) -> PathBuf {
    obj.with_extension("mesh.json")
}

/// A scratch directory inside `out_dir` whose contents are moved into
/// `out_dir` on [`Staging::commit`] and discarded otherwise.
pub struct Staging {
    out_dir: PathBuf,
    dir: tempfile::TempDir,
}

impl Staging {
    pub fn new(out_dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir.display(), e))?;
        let dir = tempfile::Builder::new()
            .prefix(".qpt-staging-")
            .tempdir_in(out_dir)
            .map_err(|e| CliError::io(out_dir.display(), e))?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            dir,
        })
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn commit(self) -> CliResult<()> {
        let entries = fs::read_dir(self.dir.path()).map_err(|e| CliError::io(self.dir.path().display(), e))?;
        for entry in entries {
            let entry = entry.map_err(|e| CliError::io(self.dir.path().display(), e))?;
            let target = self.out_dir.join(entry.file_name());
            if target.is_dir() {
                fs::remove_dir_all(&target).map_err(|e| CliError::io(target.display(), e))?;
            }
            fs::rename(entry.path(), &target).map_err(|e| CliError::io(target.display(), e))?;
        }
        Ok(())
    }
}
