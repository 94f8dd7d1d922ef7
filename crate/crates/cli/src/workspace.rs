//! On-disk layout of a CLI workspace.
//!
//! ```text
//! <root>/keys/       key files, <name>.json
//! <root>/wallet/     credentials, presentations, commitment randomness
//! <root>/vdr/        local registry records (local mode only)
//! <root>/chain/      local chain log (local mode only)
//! <root>/artifacts/  schema, specs, SRS files, per-deployment keys
//! ```

use std::path::{Component, Path, PathBuf};

use cdr_core::credential::{CredentialSchema, VerifiableCredential};
use cdr_core::crypto::{KeyFile, SigKeyPair};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CmdResult, Failure};

pub const DIRS: [&str; 5] = ["keys", "wallet", "vdr", "chain", "artifacts"];
pub const SCHEMA_FILE: &str = "artifacts/schema.json";

#[derive(Clone, Debug)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    /// Creates the directory skeleton if needed.
    pub fn open(root: &Path) -> CmdResult<Workspace> {
        for d in DIRS {
            std::fs::create_dir_all(root.join(d))
                .map_err(|e| Failure::usage(format!("cannot create workspace {}: {e}", root.display())))?;
        }
        Ok(Workspace { root: root.to_path_buf() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Resolves a user-supplied relative path against the root. Absolute paths and
    /// `..` are refused so that nothing is written outside the workspace.
    pub fn path(&self, rel: impl AsRef<Path>) -> CmdResult<PathBuf> {
        let rel = rel.as_ref();
        if rel.is_absolute() || rel.components().any(|c| matches!(c, Component::ParentDir)) {
            return Err(Failure::usage(format!(
                "{} is outside the workspace; use a path relative to {}",
                rel.display(),
                self.root.display()
            )));
        }
        Ok(self.root.join(rel))
    }

    /// Accepts paths inside the workspace either relative to the root or as given.
    pub fn input(&self, p: &Path) -> PathBuf {
        if p.is_absolute() || p.exists() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    pub fn write(&self, rel: impl AsRef<Path>, bytes: &[u8]) -> CmdResult<PathBuf> {
        let path = self.path(rel)?;
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, bytes)?;
        std::fs::rename(&tmp, &path)?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, rel: impl AsRef<Path>, value: &T) -> CmdResult<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    pub fn read(&self, p: &Path) -> CmdResult<Vec<u8>> {
        let path = self.input(p);
        std::fs::read(&path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
    }

    pub fn read_text(&self, p: &Path) -> CmdResult<String> {
        String::from_utf8(self.read(p)?).map_err(|_| Failure::usage(format!("{} is not UTF-8", p.display())))
    }

    pub fn read_json<T: DeserializeOwned>(&self, p: &Path) -> CmdResult<T> {
        serde_json::from_str(&self.read_text(p)?).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))
    }

    pub fn key_path(name: &str) -> PathBuf {
        Path::new("keys").join(format!("{name}.json"))
    }

    pub fn wallet_path(name: &str) -> PathBuf {
        Path::new("wallet").join(format!("{name}.vc.json"))
    }

    pub fn zkvp_path(name: &str) -> PathBuf {
        Path::new("wallet").join(format!("{name}.zkvp.json"))
    }

    pub fn randomness_path(name: &str) -> PathBuf {
        Path::new("wallet").join(format!("{name}.randomness"))
    }

    pub fn deployment_dir(name: &str) -> PathBuf {
        Path::new("artifacts").join(name)
    }

    pub fn save_key(&self, name: &str, kp: &SigKeyPair) -> CmdResult<PathBuf> {
        check_name(name)?;
        let rel = Self::key_path(name);
        if self.path(&rel)?.exists() {
            return Err(Failure::usage(format!("key {name} already exists; pick another name")));
        }
        self.write_json(rel, &KeyFile::from_keypair(kp))
    }

    pub fn key_file(&self, name: &str) -> CmdResult<KeyFile> {
        check_name(name)?;
        let kf: KeyFile = self
            .read_json(&Self::key_path(name))
            .map_err(|e| e.context(format!("key {name} (create it with `keygen --name {name}`)")))?;
        kf.check_header()?;
        Ok(kf)
    }

    pub fn keypair(&self, name: &str) -> CmdResult<SigKeyPair> {
        Ok(self.key_file(name)?.keypair()?)
    }

    pub fn schema(&self, file: Option<&Path>) -> CmdResult<CredentialSchema> {
        let path = file.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(SCHEMA_FILE));
        let text = self
            .read_text(&path)
            .map_err(|e| e.context("no credential schema (run `cdr issuer publish-schema` first)"))?;
        Ok(CredentialSchema::from_file(&text)?)
    }

    pub fn credential(&self, p: &Path) -> CmdResult<VerifiableCredential> {
        Ok(VerifiableCredential::from_file(&self.read_text(p)?)?)
    }
}

/// Names end up in file names.
pub fn check_name(name: &str) -> CmdResult<()> {
    let ok = !name.is_empty()
        && name.len() <= 64
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if ok {
        Ok(())
    } else {
        Err(Failure::usage(format!("invalid name {name:?}: use letters, digits, '-' and '_'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_stay_inside_the_workspace() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::open(dir.path()).unwrap();
        for d in DIRS {
            assert!(dir.path().join(d).is_dir());
        }
        assert!(ws.path("artifacts/x.json").is_ok());
        assert!(ws.path("../x").is_err());
        assert!(ws.path("/tmp/x").is_err());
        assert!(ws.write("wallet/../../escape", b"x").is_err());
    }

    #[test]
    fn names_are_restricted() {
        assert!(check_name("device-1_a").is_ok());
        for bad in ["", "a/b", "..", "a b", &"x".repeat(65)] {
            assert!(check_name(bad).is_err(), "{bad}");
        }
    }
}
