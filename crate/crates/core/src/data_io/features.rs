use std::path::Path;

use serde::{Deserialize, Serialize};

use super::container;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"LSQGFEAT";

/// Values within this distance outside `[-1, 1]` are rounding noise and get clamped.
const RANGE_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Real,
    Generated,
}

/// Latent feature vectors in `[-1, 1]^dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    dim: usize,
    rows: Vec<Vec<f64>>,
    pub provenance: Provenance,
    /// Shots per expectation value; 0 means analytic.
    pub shots: u64,
    /// Content hashes of the checkpoints or datasets these came from.
    pub sources: Vec<String>,
    /// Optional class labels, parallel to `rows`.
    pub labels: Option<Vec<u8>>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    dim: usize,
    count: usize,
    provenance: Provenance,
    shots: u64,
    sources: Vec<String>,
    #[serde(default)]
    labels: Option<Vec<u8>>,
}

impl FeatureSet {
    pub fn new(rows: Vec<Vec<f64>>, provenance: Provenance, shots: u64) -> Result<Self> {
        let dim = rows.first().map(Vec::len).ok_or(Error::EmptyDataset)?;
        if dim == 0 {
            return Err(Error::invalid("feature vectors must be non-empty"));
        }
        let mut rows = rows;
        for (i, r) in rows.iter_mut().enumerate() {
            if r.len() != dim {
                return Err(Error::Format(format!("row {i} has {} features, expected {dim}", r.len())));
            }
            for v in r.iter_mut() {
                if !(v.abs() <= 1.0 + RANGE_SLACK) {
                    return Err(Error::Format(format!("row {i} holds {v}, outside [-1, 1]")));
                }
                *v = v.clamp(-1.0, 1.0);
            }
        }
        Ok(FeatureSet { dim, rows, provenance, shots, sources: Vec::new(), labels: None })
    }

    pub fn with_sources(mut self, sources: Vec<String>) -> Self {
        self.sources = sources;
        self
    }

    pub fn with_labels(mut self, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != self.rows.len() {
            return Err(Error::Format(format!("{} labels for {} rows", labels.len(), self.rows.len())));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Vec<f64>> {
        self.rows
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&Header {
            dim: self.dim,
            count: self.rows.len(),
            provenance: self.provenance,
            shots: self.shots,
            sources: self.sources.clone(),
            labels: self.labels.clone(),
        })?;
        let flat: Vec<f64> = self.rows.iter().flatten().copied().collect();
        Ok(container::encode(MAGIC, &header, &flat))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let d = container::decode(bytes, MAGIC, "feature set")?;
        let h: Header = serde_json::from_slice(d.header)?;
        if h.dim == 0 || h.count == 0 || d.payload.len() != h.dim * h.count {
            return Err(Error::Format(format!(
                "feature header says {}x{} but payload holds {} values",
                h.count,
                h.dim,
                d.payload.len()
            )));
        }
        let rows = d.payload.chunks(h.dim).map(<[f64]>::to_vec).collect();
        let mut fs = FeatureSet::new(rows, h.provenance, h.shots)?.with_sources(h.sources);
        if let Some(l) = h.labels {
            fs = fs.with_labels(l)?;
        }
        Ok(fs)
    }
}

pub fn save_features(path: &Path, fs: &FeatureSet) -> Result<String> {
    let bytes = fs.to_bytes()?;
    std::fs::write(path, &bytes)?;
    Ok(container::sha256_hex(&bytes))
}

pub fn load_features(path: &Path) -> Result<FeatureSet> {
    FeatureSet::from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::container::{encode_with_version, FormatVersion, FORMAT_VERSION};

    fn sample() -> FeatureSet {
        FeatureSet::new(vec![vec![0.5, -1.0, 0.125], vec![1.0, 0.0, -0.3]], Provenance::Generated, 256)
            .unwrap()
            .with_sources(vec!["abc".into()])
            .with_labels(vec![1, 2])
            .unwrap()
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.feat");
        let fs = sample();
        save_features(&p, &fs).unwrap();
        assert_eq!(load_features(&p).unwrap(), fs);
    }

    #[test]
    fn validation() {
        assert!(FeatureSet::new(vec![], Provenance::Real, 0).is_err());
        assert!(FeatureSet::new(vec![vec![1.5]], Provenance::Real, 0).is_err());
        assert!(FeatureSet::new(vec![vec![0.0], vec![0.0, 1.0]], Provenance::Real, 0).is_err());
        let fs = FeatureSet::new(vec![vec![1.0 + 1e-13]], Provenance::Real, 0).unwrap();
        assert_eq!(fs.rows()[0][0], 1.0);
    }

    #[test]
    fn corrupt_header_rejected() {
        let header = br#"{"dim":3,"count":5,"provenance":"real","shots":0,"sources":[]}"#;
        let bytes = container::encode(MAGIC, header, &[0.0; 6]);
        assert!(matches!(FeatureSet::from_bytes(&bytes), Err(Error::Format(_))));
        let bytes = container::encode(MAGIC, b"{not json", &[0.0; 6]);
        assert!(FeatureSet::from_bytes(&bytes).is_err());
    }

    #[test]
    fn newer_minor_version_still_loads() {
        let fs = sample();
        let header = br#"{"dim":3,"count":2,"provenance":"generated","shots":256,"sources":["abc"],"labels":[1,2]}"#;
        let flat: Vec<f64> = fs.rows().iter().flatten().copied().collect();
        let v = FormatVersion { minor: FORMAT_VERSION.minor + 1, ..FORMAT_VERSION };
        let bytes = encode_with_version(MAGIC, v, header, &flat);
        assert_eq!(FeatureSet::from_bytes(&bytes).unwrap(), fs);
    }
}
