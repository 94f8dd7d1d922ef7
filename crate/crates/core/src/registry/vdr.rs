//! Content-addressed store for public artifacts.
//!
//! Records are immutable and keyed by the SHA-256 of their payload. The directory
//! layout is `<root>/<kind>/<hex id>`; a fetch re-hashes the bytes it reads.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::RegistryError;
use crate::canonical::ContentHash;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Schema,
    Zkvpr,
    ProvingKey,
    ConstraintSystem,
}

impl RecordKind {
    pub const ALL: [RecordKind; 4] = [
        RecordKind::Schema,
        RecordKind::Zkvpr,
        RecordKind::ProvingKey,
        RecordKind::ConstraintSystem,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RecordKind::Schema => "schema",
            RecordKind::Zkvpr => "zkvpr",
            RecordKind::ProvingKey => "proving_key",
            RecordKind::ConstraintSystem => "constraint_system",
        }
    }
}

impl std::fmt::Display for RecordKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RecordKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RecordKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown record kind {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VdrRecord {
    pub record_id: ContentHash,
    pub kind: RecordKind,
    pub payload: Vec<u8>,
}

impl VdrRecord {
    pub fn new(kind: RecordKind, payload: Vec<u8>) -> Self {
        VdrRecord {
            record_id: ContentHash::of(&payload),
            kind,
            payload,
        }
    }

    /// Fails when the payload does not hash to the id it was fetched under.
    pub fn check(&self) -> Result<(), RegistryError> {
        let actual = ContentHash::of(&self.payload);
        if actual != self.record_id {
            return Err(RegistryError::Tampered {
                id: self.record_id,
                actual,
            });
        }
        Ok(())
    }
}

/// Listing entry; the payload stays in the store.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordInfo {
    pub record_id: ContentHash,
    pub kind: RecordKind,
    pub size: usize,
}

enum Backing {
    Memory(BTreeMap<ContentHash, VdrRecord>),
    Dir(PathBuf),
}

pub struct Vdr {
    backing: Backing,
    index: BTreeMap<ContentHash, RecordInfo>,
}

impl Default for Vdr {
    fn default() -> Self {
        Vdr::in_memory()
    }
}

impl Vdr {
    pub fn in_memory() -> Self {
        Vdr {
            backing: Backing::Memory(BTreeMap::new()),
            index: BTreeMap::new(),
        }
    }

    /// Opens (creating if needed) a directory-backed store and indexes what is there.
    pub fn open(root: impl AsRef<Path>) -> Result<Self, RegistryError> {
        let root = root.as_ref().to_path_buf();
        let mut index = BTreeMap::new();
        for kind in RecordKind::ALL {
            let dir = root.join(kind.as_str());
            fs::create_dir_all(&dir)?;
            for entry in fs::read_dir(&dir)? {
                let entry = entry?;
                let name = entry.file_name().to_string_lossy().into_owned();
                let Ok(id) = ContentHash::from_hex(&name) else {
                    continue;
                };
                let size = entry.metadata()?.len() as usize;
                index.insert(id, RecordInfo { record_id: id, kind, size });
            }
        }
        Ok(Vdr {
            backing: Backing::Dir(root),
            index,
        })
    }

    pub fn root(&self) -> Option<&Path> {
        match &self.backing {
            Backing::Dir(p) => Some(p),
            Backing::Memory(_) => None,
        }
    }

    fn path(root: &Path, kind: RecordKind, id: &ContentHash) -> PathBuf {
        root.join(kind.as_str()).join(id.to_hex())
    }

    /// Idempotent: publishing identical bytes again returns the same id.
    pub fn publish(&mut self, kind: RecordKind, payload: Vec<u8>) -> Result<ContentHash, RegistryError> {
        if payload.is_empty() {
            return Err(RegistryError::EmptyPayload);
        }
        let record = VdrRecord::new(kind, payload);
        let id = record.record_id;
        if let Some(existing) = self.index.get(&id) {
            if existing.kind != kind {
                return Err(RegistryError::KindConflict {
                    id,
                    existing: existing.kind,
                });
            }
            return Ok(id);
        }
        let size = record.payload.len();
        match &mut self.backing {
            Backing::Memory(map) => {
                map.insert(id, record);
            }
            Backing::Dir(root) => {
                let path = Self::path(root, kind, &id);
                let tmp = path.with_extension("tmp");
                let mut f = fs::File::create(&tmp)?;
                f.write_all(&record.payload)?;
                f.sync_all()?;
                fs::rename(&tmp, &path)?;
            }
        }
        self.index.insert(id, RecordInfo { record_id: id, kind, size });
        Ok(id)
    }

    /// Verified fetch.
    pub fn fetch(&self, id: &ContentHash) -> Result<VdrRecord, RegistryError> {
        let info = self.index.get(id).ok_or(RegistryError::UnknownRecord(*id))?;
        let record = match &self.backing {
            Backing::Memory(map) => map.get(id).cloned().ok_or(RegistryError::UnknownRecord(*id))?,
            Backing::Dir(root) => VdrRecord {
                record_id: *id,
                kind: info.kind,
                payload: fs::read(Self::path(root, info.kind, id))?,
            },
        };
        record.check()?;
        Ok(record)
    }

    /// Verified fetch that also checks the record kind.
    pub fn fetch_kind(&self, id: &ContentHash, kind: RecordKind) -> Result<Vec<u8>, RegistryError> {
        let r = self.fetch(id)?;
        if r.kind != kind {
            return Err(RegistryError::KindConflict { id: *id, existing: r.kind });
        }
        Ok(r.payload)
    }

    pub fn contains(&self, id: &ContentHash) -> bool {
        self.index.contains_key(id)
    }

    pub fn info(&self, id: &ContentHash) -> Option<&RecordInfo> {
        self.index.get(id)
    }

    pub fn list(&self) -> impl Iterator<Item = &RecordInfo> {
        self.index.values()
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    #[cfg(test)]
    pub(crate) fn corrupt(&mut self, id: &ContentHash) {
        match &mut self.backing {
            Backing::Memory(map) => {
                if let Some(r) = map.get_mut(id) {
                    r.payload[0] ^= 1;
                }
            }
            Backing::Dir(root) => {
                let path = Self::path(root, self.index[id].kind, id);
                let mut bytes = fs::read(&path).unwrap();
                bytes[0] ^= 1;
                fs::write(path, bytes).unwrap();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn publish_fetch_round_trip() {
        let mut vdr = Vdr::in_memory();
        let id = vdr.publish(RecordKind::Schema, b"schema bytes".to_vec()).unwrap();
        assert_eq!(id, ContentHash::of(b"schema bytes"));
        assert_eq!(vdr.fetch(&id).unwrap().payload, b"schema bytes");
        assert_eq!(vdr.publish(RecordKind::Schema, b"schema bytes".to_vec()).unwrap(), id);
        assert_eq!(vdr.len(), 1);
    }

    #[test]
    fn empty_payload_and_kind_clash_rejected() {
        let mut vdr = Vdr::in_memory();
        assert!(matches!(vdr.publish(RecordKind::Zkvpr, vec![]), Err(RegistryError::EmptyPayload)));
        vdr.publish(RecordKind::Schema, b"x".to_vec()).unwrap();
        assert!(matches!(
            vdr.publish(RecordKind::Zkvpr, b"x".to_vec()),
            Err(RegistryError::KindConflict { .. })
        ));
    }

    #[test]
    fn tampering_is_detected() {
        let mut vdr = Vdr::in_memory();
        let id = vdr.publish(RecordKind::Zkvpr, b"bundle".to_vec()).unwrap();
        vdr.corrupt(&id);
        assert!(matches!(vdr.fetch(&id), Err(RegistryError::Tampered { .. })));
    }

    #[test]
    fn directory_store_survives_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let id = {
            let mut vdr = Vdr::open(dir.path()).unwrap();
            vdr.publish(RecordKind::ProvingKey, vec![1, 2, 3]).unwrap()
        };
        let mut vdr = Vdr::open(dir.path()).unwrap();
        assert_eq!(vdr.info(&id).unwrap().kind, RecordKind::ProvingKey);
        assert_eq!(vdr.fetch_kind(&id, RecordKind::ProvingKey).unwrap(), vec![1, 2, 3]);
        assert!(vdr.fetch_kind(&id, RecordKind::Schema).is_err());
        vdr.corrupt(&id);
        assert!(matches!(vdr.fetch(&id), Err(RegistryError::Tampered { .. })));
    }
}
