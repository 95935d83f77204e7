//! Instance files: self-contained, portable JSON.
//!
//! Files embed the explicit probability matrix, mask, permutation, motifs,
//! and certificate rather than just the seed, so an instance loads
//! identically in any implementation regardless of RNG internals. Floats are
//! written with 17 significant digits, which round-trips every f64 exactly
//! and makes save -> load -> save byte-identical.

use crate::error::{Error, Result};
use crate::instance::{EhrlichInstance, InstanceParams};
use crate::markov::{BandMask, TransitionMatrix};
use crate::motif::{MotifSet, SpacedMotif};
use crate::seq::{Sequence, StateId};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::{Read, Write};
use std::path::Path;

pub const INSTANCE_FILE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    version: u32,
    #[serde(flatten)]
    params: InstanceParams,
    permutation: Vec<usize>,
    mask: Vec<Vec<u8>>,
    matrix: Vec<Vec<f64>>,
    motifs: Vec<MotifFile>,
    certificate: Vec<StateId>,
}

#[derive(Serialize, Deserialize)]
struct MotifFile {
    elements: Vec<StateId>,
    offsets: Vec<usize>,
}

/// JSON formatter writing every float with 17 significant digits.
struct SigDigitFormatter;

impl serde_json::ser::Formatter for SigDigitFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes any value as compact JSON with 17-significant-digit floats.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigDigitFormatter);
    value.serialize(&mut ser)?;
    Ok(out)
}

impl EhrlichInstance {
    /// The canonical file bytes for this instance.
    pub fn to_json_bytes(&self) -> Result<Vec<u8>> {
        let v = self.vocab_size();
        let mask = self.matrix().mask();
        let file = InstanceFile {
            version: INSTANCE_FILE_VERSION,
            params: self.params().clone(),
            permutation: mask.permutation().to_vec(),
            mask: (0..v)
                .map(|i| mask.row(i).iter().map(|&b| b as u8).collect())
                .collect(),
            matrix: (0..v).map(|i| self.matrix().row(i).to_vec()).collect(),
            motifs: self
                .motif_set()
                .motifs()
                .iter()
                .map(|m| MotifFile {
                    elements: m.elements().to_vec(),
                    offsets: m.offsets().to_vec(),
                })
                .collect(),
            certificate: self.certificate().states().to_vec(),
        };
        to_canonical_json(&file)
    }

    pub fn save<W: Write>(&self, mut writer: W) -> Result<()> {
        writer.write_all(&self.to_json_bytes()?)?;
        Ok(())
    }

    pub fn save_to_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.save(std::fs::File::create(path)?)
    }

    pub fn load<R: Read>(mut reader: R) -> Result<Self> {
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        Self::from_json_bytes(&bytes)
    }

    pub fn load_from_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::load(std::fs::File::open(path)?)
    }

    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self> {
        let file: InstanceFile = serde_json::from_slice(bytes)
            .map_err(|e| Error::InvalidInstance(e.to_string()))?;
        if file.version != INSTANCE_FILE_VERSION {
            return Err(Error::InvalidInstance(format!(
                "unsupported file version {}",
                file.version
            )));
        }
        let params = file.params;
        let invalid = |e: Error| Error::InvalidInstance(e.to_string());
        params.validate().map_err(invalid)?;

        let v = params.vocab_size;
        let mask = BandMask::permuted(v, params.bandwidth, file.permutation).map_err(invalid)?;
        if file.mask.len() != v || file.mask.iter().any(|row| row.len() != v) {
            return Err(Error::InvalidInstance("mask must be v rows of v bits".into()));
        }
        for i in 0..v {
            for j in 0..v {
                if (file.mask[i][j] != 0) != mask.entry(i, j) {
                    return Err(Error::InvalidInstance(format!(
                        "mask bits disagree with permutation and bandwidth at ({i}, {j})"
                    )));
                }
            }
        }
        if file.matrix.len() != v || file.matrix.iter().any(|row| row.len() != v) {
            return Err(Error::InvalidInstance(
                "matrix must be v rows of v probabilities".into(),
            ));
        }
        let probs: Vec<f64> = file.matrix.into_iter().flatten().collect();
        let matrix =
            TransitionMatrix::from_probs(mask, params.temperature, probs).map_err(invalid)?;

        let motifs: Vec<SpacedMotif> = file
            .motifs
            .into_iter()
            .map(|m| SpacedMotif::new(m.elements, m.offsets))
            .collect::<Result<_>>()
            .map_err(invalid)?;
        let certificate = Sequence::new(file.certificate);
        let motif_set = MotifSet::from_parts(motifs, certificate, &matrix).map_err(invalid)?;

        Self::from_parts(params, matrix, motif_set).map_err(invalid)
    }

    /// SHA-256 of the canonical file bytes, as a hex string. Identifies the
    /// instance in campaign outputs.
    pub fn descriptor_hash(&self) -> Result<String> {
        let bytes = self.to_json_bytes()?;
        let digest = Sha256::digest(&bytes);
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}
