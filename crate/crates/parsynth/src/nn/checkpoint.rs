//! Versioned binary checkpoints.
//!
//! Layout: an 8-byte magic, a u32 version, a length-prefixed UTF-8 header
//! (grammar name, machine sizing, vocabulary ordering), the optimizer step
//! counter, then per tensor: name, shape, row-major little-endian f64 data
//! followed by the two optimizer moment buffers of the same shape.

use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::tensor::{ParameterStore, Tensor};

const MAGIC: &[u8; 8] = b"PSYNCKPT";
const VERSION: u32 = 1;

/// Everything needed to rebuild the controller around the tensors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckpointHeader {
    pub grammar: String,
    pub max_list_len: usize,
    pub num_fids: usize,
    pub hidden: usize,
    pub terminals: Vec<String>,
    pub non_terminals: Vec<String>,
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic; not a checkpoint file")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u32),
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
}

impl CheckpointHeader {
    fn to_text(&self) -> String {
        format!(
            "grammar={}\nk={}\nf={}\nd={}\nterminals={}\nnon_terminals={}\n",
            self.grammar,
            self.max_list_len,
            self.num_fids,
            self.hidden,
            self.terminals.join(","),
            self.non_terminals.join(","),
        )
    }

    fn from_text(text: &str) -> Result<Self, CheckpointError> {
        let mut grammar = None;
        let mut k = None;
        let mut f = None;
        let mut d = None;
        let mut terminals = None;
        let mut non_terminals = None;
        for line in text.lines() {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CheckpointError::Malformed(format!("bad header line {line:?}")))?;
            match key {
                "grammar" => grammar = Some(value.to_string()),
                "k" => k = value.parse().ok(),
                "f" => f = value.parse().ok(),
                "d" => d = value.parse().ok(),
                "terminals" => {
                    terminals = Some(value.split(',').map(str::to_string).collect::<Vec<_>>())
                }
                "non_terminals" => {
                    non_terminals = Some(value.split(',').map(str::to_string).collect::<Vec<_>>())
                }
                other => {
                    return Err(CheckpointError::Malformed(format!(
                        "unknown header key {other:?}"
                    )))
                }
            }
        }
        Ok(CheckpointHeader {
            grammar: grammar.ok_or_else(|| CheckpointError::Malformed("missing grammar".into()))?,
            max_list_len: k.ok_or_else(|| CheckpointError::Malformed("missing k".into()))?,
            num_fids: f.ok_or_else(|| CheckpointError::Malformed("missing f".into()))?,
            hidden: d.ok_or_else(|| CheckpointError::Malformed("missing d".into()))?,
            terminals: terminals
                .ok_or_else(|| CheckpointError::Malformed("missing terminals".into()))?,
            non_terminals: non_terminals
                .ok_or_else(|| CheckpointError::Malformed("missing non_terminals".into()))?,
        })
    }
}

pub fn write_checkpoint(
    path: &Path,
    header: &CheckpointHeader,
    store: &ParameterStore,
) -> Result<(), CheckpointError> {
    let mut out: Vec<u8> = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let header_text = header.to_text();
    out.extend_from_slice(&(header_text.len() as u32).to_le_bytes());
    out.extend_from_slice(header_text.as_bytes());
    out.extend_from_slice(&store.adam_step_count().to_le_bytes());
    out.extend_from_slice(&(store.len() as u32).to_le_bytes());
    for id in store.param_ids() {
        let name = store.name(id);
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        let tensor = store.tensor(id);
        let (m, v) = store.moments(id);
        out.extend_from_slice(&(tensor.rows() as u64).to_le_bytes());
        out.extend_from_slice(&(tensor.cols() as u64).to_le_bytes());
        for t in [tensor, m, v] {
            for x in t.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<(CheckpointHeader, ParameterStore), CheckpointError> {
    let mut file = std::fs::File::open(path)?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    let mut cursor = 0usize;
    let take = |cursor: &mut usize, n: usize| -> Result<&[u8], CheckpointError> {
        if *cursor + n > bytes.len() {
            return Err(CheckpointError::Malformed("truncated file".into()));
        }
        let slice = &bytes[*cursor..*cursor + n];
        *cursor += n;
        Ok(slice)
    };
    if take(&mut cursor, 8)? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap());
    if version != VERSION {
        return Err(CheckpointError::BadVersion(version));
    }
    let header_len = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
    let header_text = std::str::from_utf8(take(&mut cursor, header_len)?)
        .map_err(|_| CheckpointError::Malformed("header is not UTF-8".into()))?
        .to_string();
    let header = CheckpointHeader::from_text(&header_text)?;
    let step = u64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap());
    let count = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
    let mut store = ParameterStore::new();
    for _ in 0..count {
        let name_len = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
        let name = std::str::from_utf8(take(&mut cursor, name_len)?)
            .map_err(|_| CheckpointError::Malformed("tensor name is not UTF-8".into()))?
            .to_string();
        let rows = u64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap()) as usize;
        let cols = u64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap()) as usize;
        let read_tensor = |cursor: &mut usize| -> Result<Tensor, CheckpointError> {
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows * cols {
                data.push(f64::from_le_bytes(
                    take(cursor, 8)?.try_into().unwrap(),
                ));
            }
            Ok(Tensor::from_data(rows, cols, data))
        };
        let tensor = read_tensor(&mut cursor)?;
        let m = read_tensor(&mut cursor)?;
        let v = read_tensor(&mut cursor)?;
        let id = store.register(&name, tensor);
        store.set_moments(id, m, v);
    }
    store.step = step;
    if cursor != bytes.len() {
        return Err(CheckpointError::Malformed("trailing bytes".into()));
    }
    Ok((header, store))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_header() -> CheckpointHeader {
        CheckpointHeader {
            grammar: "am".into(),
            max_list_len: 3,
            num_fids: 3,
            hidden: 8,
            terminals: vec!["x".into(), "+".into()],
            non_terminals: vec!["Id".into(), "Op+".into()],
        }
    }

    #[test]
    fn roundtrip_preserves_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut store = ParameterStore::new();
        store.register("a", Tensor::uniform(4, 8, 0.1, &mut rng));
        store.register("b", Tensor::uniform(8, 1, 0.1, &mut rng));
        // make the moments non-trivial
        let mut grads = crate::nn::Gradients::zeros_like(&store);
        for t in grads.iter_mut() {
            for x in t.data_mut() {
                *x = 0.3;
            }
        }
        crate::nn::adam_step(&mut store, &grads, &crate::nn::AdamConfig::default());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        write_checkpoint(&path, &sample_header(), &store).unwrap();
        let (header, loaded) = read_checkpoint(&path).unwrap();
        assert_eq!(header, sample_header());
        assert!(loaded.bit_identical(&store));

        // byte-identical re-write
        let path2 = dir.path().join("again.ckpt");
        write_checkpoint(&path2, &header, &loaded).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.ckpt");
        std::fs::write(&path, b"definitely not a checkpoint").unwrap();
        assert!(matches!(
            read_checkpoint(&path),
            Err(CheckpointError::BadMagic)
        ));
    }
}
