//! Versioned run artifacts on disk.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::metagraph::{FillingSequence, ScoredMetaGraph};
use crate::sim::{SimConfig, SweepResult};

pub const SCHEMA_VERSION: &str = "1.1";
const SCHEMA_MAJOR: &str = "1";

/// One simulation run: its configuration, scores and derived analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub schema_version: String,
    /// `sha256:` plus the hex digest of the config and scores.
    pub content_hash: String,
    /// RFC 3339, UTC.
    pub created_at: String,
    pub config: SimConfig,
    pub scores: SweepResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scored: Option<ScoredMetaGraph>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequences: Option<Vec<FillingSequence>>,
}

#[derive(Serialize)]
struct Hashed<'a> {
    config: &'a SimConfig,
    scores: &'a SweepResult,
}

/// Digest over a length-prefixed JSON encoding of `config` and `scores`.
pub fn content_hash(config: &SimConfig, scores: &SweepResult) -> Result<String> {
    let body = serde_json::to_vec(&Hashed { config, scores })?;
    let mut h = Sha256::new();
    h.update(format!("run {}\0", body.len()).as_bytes());
    h.update(&body);
    let digest = h.finalize();
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok(format!("sha256:{hex}"))
}

impl RunArtifact {
    pub fn new(config: SimConfig, scores: SweepResult) -> Result<RunArtifact> {
        Ok(RunArtifact {
            schema_version: SCHEMA_VERSION.into(),
            content_hash: content_hash(&config, &scores)?,
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            config,
            scores,
            scored: None,
            sequences: None,
        })
    }

    pub fn verify(&self) -> Result<()> {
        let expect = content_hash(&self.config, &self.scores)?;
        if expect != self.content_hash {
            return Err(Error::Corrupt(format!(
                "content hash mismatch: stored {}, computed {expect}",
                self.content_hash
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Parses and verifies an artifact. Older minor versions load with
    /// absent fields defaulted.
    pub fn from_json(text: &str) -> Result<RunArtifact> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Corrupt(format!("not valid JSON: {e}")))?;
        let version = value
            .get("schema_version")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::Corrupt("missing schema_version".into()))?;
        if version.split('.').next() != Some(SCHEMA_MAJOR) {
            return Err(Error::Version(format!(
                "schema {version} is not readable by {SCHEMA_VERSION}"
            )));
        }
        let artifact: RunArtifact =
            serde_json::from_value(value).map_err(|e| Error::Corrupt(format!("bad artifact: {e}")))?;
        artifact.verify()?;
        Ok(artifact)
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn save_run(path: &Path, artifact: &RunArtifact) -> Result<()> {
    let text = artifact.to_json()?;
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| crate::error::domain(format!("{} is not a file path", path.display())))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| -> Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

pub fn load_run(path: &Path) -> Result<RunArtifact> {
    RunArtifact::from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::run_level_sweep;

    fn small_run() -> RunArtifact {
        let mut cfg = SimConfig::new(4, 200, 11);
        cfg.e = Some(3);
        let scores = run_level_sweep(&cfg).unwrap();
        RunArtifact::new(cfg, scores).unwrap()
    }

    #[test]
    fn save_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        let run = small_run();
        save_run(&path, &run).unwrap();
        assert_eq!(load_run(&path).unwrap(), run);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        let text = small_run().to_json().unwrap();
        fs::write(&path, &text[..text.len() / 2]).unwrap();
        assert!(matches!(load_run(&path), Err(Error::Corrupt(_))));
    }

    #[test]
    fn tampered_scores_are_corrupt() {
        let mut run = small_run();
        let s = run.scores.values_mut().next().unwrap();
        s.levels[0].mean_d_euc += 1e-9;
        let text = serde_json::to_string(&run).unwrap();
        assert!(matches!(RunArtifact::from_json(&text), Err(Error::Corrupt(_))));
    }

    #[test]
    fn unknown_major_version() {
        let mut run = small_run();
        run.schema_version = "2.0".into();
        let text = serde_json::to_string(&run).unwrap();
        assert!(matches!(RunArtifact::from_json(&text), Err(Error::Version(_))));
    }

    #[test]
    fn hash_ignores_timestamp_and_analysis() {
        let a = small_run();
        let mut b = a.clone();
        b.created_at = "1999-01-01T00:00:00Z".into();
        b.sequences = Some(Vec::new());
        assert!(b.verify().is_ok());
        assert!(a.content_hash.starts_with("sha256:") && a.content_hash.len() == 7 + 64);
    }
}
