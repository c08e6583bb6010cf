//! Flat checkpoint file: magic, u32 version, u32 manifest length, JSON
//! manifest, then every parameter array as little-endian f64 in manifest
//! order.

use super::{Net, NetSpec, NeuralError, ParamEntry};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"UVAACKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub metadata: serde_json::Value,
    pub nets: Vec<(String, Net)>,
}

#[derive(Serialize, Deserialize)]
struct ManifestNet {
    name: String,
    spec: NetSpec,
    entries: Vec<ParamEntry>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    metadata: serde_json::Value,
    nets: Vec<ManifestNet>,
}

impl Checkpoint {
    pub fn net(&self, name: &str) -> Option<&Net> {
        self.nets.iter().find(|(n, _)| n == name).map(|(_, net)| net)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let manifest = Manifest {
            metadata: self.metadata.clone(),
            nets: self
                .nets
                .iter()
                .map(|(name, net)| ManifestNet {
                    name: name.clone(),
                    spec: net.spec().clone(),
                    entries: net.layout().entries().to_vec(),
                })
                .collect(),
        };
        let json = serde_json::to_vec(&manifest).expect("manifest serializes");
        let n_params: usize = self.nets.iter().map(|(_, n)| n.len()).sum();
        let mut out = Vec::with_capacity(16 + json.len() + 8 * n_params);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for (_, net) in &self.nets {
            for v in &net.params {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NeuralError> {
        let bad = |m: &str| NeuralError::Checkpoint(m.to_string());
        if bytes.len() < 16 || &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(bad("missing magic header"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(NeuralError::Checkpoint(format!("unsupported version {version}")));
        }
        let mlen = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let body = bytes.get(16..16 + mlen).ok_or_else(|| bad("truncated manifest"))?;
        let manifest: Manifest =
            serde_json::from_slice(body).map_err(|e| NeuralError::Checkpoint(format!("manifest: {e}")))?;
        let mut cursor = 16 + mlen;
        let mut nets = Vec::with_capacity(manifest.nets.len());
        for m in manifest.nets {
            let template = Net::zeroed(m.spec.clone());
            let declared: Vec<(&str, &[usize])> =
                m.entries.iter().map(|e| (e.name.as_str(), e.shape.as_slice())).collect();
            let expected: Vec<(&str, &[usize])> = template
                .layout()
                .entries()
                .iter()
                .map(|e| (e.name.as_str(), e.shape.as_slice()))
                .collect();
            if declared != expected {
                return Err(NeuralError::ShapeMismatch(format!(
                    "network '{}' manifest does not match its spec",
                    m.name
                )));
            }
            let n = template.len();
            let raw = bytes
                .get(cursor..cursor + 8 * n)
                .ok_or_else(|| bad("truncated parameter data"))?;
            let params = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            cursor += 8 * n;
            nets.push((m.name, Net::from_params(m.spec, params)?));
        }
        if cursor != bytes.len() {
            return Err(bad("trailing bytes after parameter data"));
        }
        Ok(Self {
            metadata: manifest.metadata,
            nets,
        })
    }
}

pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<(), NeuralError> {
    let io = |e: std::io::Error| NeuralError::Checkpoint(format!("{}: {e}", path.display()));
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(&ckpt.to_bytes()).map_err(io)?;
    f.flush().map_err(io)
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint, NeuralError> {
    let io = |e: std::io::Error| NeuralError::Checkpoint(format!("{}: {e}", path.display()));
    let mut bytes = Vec::new();
    std::fs::File::open(path).map_err(io)?.read_to_end(&mut bytes).map_err(io)?;
    Checkpoint::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::Architecture;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Checkpoint {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = NetSpec::policy(9, 2, Architecture::Lstm).with_widths(4, vec![6]);
        Checkpoint {
            metadata: serde_json::json!({"weight": [0.3, 0.7]}),
            nets: vec![("policy".into(), Net::init(spec, 0.01, -0.5, &mut rng))],
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = sample();
        let back = Checkpoint::from_bytes(&c.to_bytes()).unwrap();
        assert_eq!(back, c);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.ckpt");
        write_checkpoint(&p, &c).unwrap();
        assert_eq!(read_checkpoint(&p).unwrap(), c);
    }

    #[test]
    fn corrupt_inputs_rejected() {
        let bytes = sample().to_bytes();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(Checkpoint::from_bytes(&wrong).is_err());
        let mut v2 = bytes.clone();
        v2[8] = 2;
        assert!(Checkpoint::from_bytes(&v2).is_err());
    }
}
