use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub word_id: String,
    pub list_id: u32,
    pub path: PathBuf,
}

/// List of speech files making up a test corpus, stored as UTF-8 JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct CorpusManifest {
    #[serde(default)]
    pub description: String,
    pub entries: Vec<CorpusEntry>,
}

impl CorpusManifest {
    /// Parses the manifest and resolves relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let mut m: CorpusManifest = serde_json::from_str(&text).map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for e in &mut m.entries {
            if e.path.is_relative() {
                e.path = base.join(&e.path);
            }
        }
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.word_id.as_str()) {
                return Err(Error::invalid(format!("duplicate word_id {:?}", e.word_id)));
            }
            if !e.path.is_file() {
                return Err(Error::invalid(format!(
                    "corpus file {} for {:?} does not exist",
                    e.path.display(),
                    e.word_id
                )));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path.display().to_string(), e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.wav"), b"x").unwrap();
        let mpath = dir.path().join("m.json");
        std::fs::write(
            &mpath,
            r#"{"description":"t","entries":[{"word_id":"a","list_id":1,"path":"a.wav"}]}"#,
        )
        .unwrap();
        let m = CorpusManifest::load(&mpath).unwrap();
        assert_eq!(m.entries[0].path, dir.path().join("a.wav"));

        std::fs::write(
            &mpath,
            r#"{"entries":[{"word_id":"a","list_id":1,"path":"a.wav"},{"word_id":"a","list_id":2,"path":"a.wav"}]}"#,
        )
        .unwrap();
        assert!(CorpusManifest::load(&mpath).is_err());

        std::fs::write(
            &mpath,
            r#"{"entries":[{"word_id":"b","list_id":1,"path":"missing.wav"}]}"#,
        )
        .unwrap();
        assert!(CorpusManifest::load(&mpath).is_err());
    }
}
