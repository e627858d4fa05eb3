//! Checkpoint files: a JSON manifest (config, tensor names, shapes, byte
//! offsets) followed by one raw little-endian f32 blob.
//!
//! Layout: `b"CSFI"` magic, u32 LE format version, u64 LE manifest length,
//! manifest JSON, blob. Loading validates the manifest against the shapes
//! implied by its config and rejects truncation, shape drift, and
//! non-finite values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::params::{expected_shapes, ParameterStore, TensorViewMut};
use super::scalar::Scalar;
use super::ModelError;

const MAGIC: &[u8; 4] = b"CSFI";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    /// Byte offset into the blob.
    offset: u64,
    /// Length in f32 elements.
    len: u64,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    config: ModelConfig,
    tensors: Vec<TensorEntry>,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> ModelError + '_ {
    move |source| ModelError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Serializes parameters as f32, regardless of the in-memory element type.
pub fn save_checkpoint<T: Scalar>(
    params: &ParameterStore<T>,
    cfg: &ModelConfig,
    path: &Path,
) -> Result<(), ModelError> {
    let mut tensors = Vec::new();
    let mut offset = 0u64;
    for (name, view) in params.visit() {
        let len = view.len() as u64;
        tensors.push(TensorEntry {
            name,
            shape: view.shape(),
            offset,
            len,
        });
        offset += len * 4;
    }
    let manifest = Manifest {
        config: cfg.clone(),
        tensors,
    };
    let manifest_bytes = serde_json::to_vec(&manifest)?;

    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    out.write_all(MAGIC).map_err(io_err(path))?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())
        .map_err(io_err(path))?;
    out.write_all(&(manifest_bytes.len() as u64).to_le_bytes())
        .map_err(io_err(path))?;
    out.write_all(&manifest_bytes).map_err(io_err(path))?;
    for (_, view) in params.visit() {
        for &v in view.as_slice() {
            out.write_all(&v.to_f32().to_le_bytes())
                .map_err(io_err(path))?;
        }
    }
    out.flush().map_err(io_err(path))
}

/// Loads a checkpoint, returning its config and parameters.
pub fn load_checkpoint<T: Scalar>(
    path: &Path,
) -> Result<(ModelConfig, ParameterStore<T>), ModelError> {
    let corrupt = |msg: String| ModelError::Corrupt {
        path: path.display().to_string(),
        message: msg,
    };

    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = BufReader::new(file);

    let mut magic = [0u8; 4];
    reader
        .read_exact(&mut magic)
        .map_err(|_| corrupt("file too short for header".into()))?;
    if &magic != MAGIC {
        return Err(corrupt("bad magic bytes".into()));
    }
    let mut version = [0u8; 4];
    reader
        .read_exact(&mut version)
        .map_err(|_| corrupt("file too short for version".into()))?;
    let version = u32::from_le_bytes(version);
    if version != FORMAT_VERSION {
        return Err(corrupt(format!("unsupported format version {version}")));
    }
    let mut len_bytes = [0u8; 8];
    reader
        .read_exact(&mut len_bytes)
        .map_err(|_| corrupt("file too short for manifest length".into()))?;
    let manifest_len = u64::from_le_bytes(len_bytes) as usize;
    let mut manifest_bytes = vec![0u8; manifest_len];
    reader
        .read_exact(&mut manifest_bytes)
        .map_err(|_| corrupt("truncated manifest".into()))?;
    let manifest: Manifest = serde_json::from_slice(&manifest_bytes)
        .map_err(|e| corrupt(format!("manifest is not valid JSON: {e}")))?;
    manifest.config.validate()?;

    // manifest must describe exactly the shapes its config implies
    let expected = expected_shapes::<T>(&manifest.config);
    if manifest.tensors.len() != expected.len() {
        return Err(corrupt(format!(
            "manifest lists {} tensors, config implies {}",
            manifest.tensors.len(),
            expected.len()
        )));
    }
    let mut offset = 0u64;
    for (entry, (name, shape)) in manifest.tensors.iter().zip(&expected) {
        if &entry.name != name {
            return Err(corrupt(format!(
                "tensor {:?} out of order, expected {:?}",
                entry.name, name
            )));
        }
        let numel: usize = shape.iter().product();
        if &entry.shape != shape || entry.len as usize != numel {
            return Err(ModelError::ShapeMismatch {
                name: entry.name.clone(),
                expected: shape.clone(),
                got: entry.shape.clone(),
            });
        }
        if entry.offset != offset {
            return Err(corrupt(format!(
                "tensor {:?} at offset {}, expected {}",
                entry.name, entry.offset, offset
            )));
        }
        offset += entry.len * 4;
    }

    let mut blob = Vec::new();
    reader.read_to_end(&mut blob).map_err(io_err(path))?;
    if blob.len() as u64 != offset {
        return Err(corrupt(format!(
            "blob holds {} bytes, manifest implies {}",
            blob.len(),
            offset
        )));
    }

    let mut store = ParameterStore::<T>::zeros(&manifest.config);
    for (entry, (_, mut view)) in manifest.tensors.iter().zip(store.visit_mut()) {
        let start = entry.offset as usize;
        let slice = make_slice_mut(&mut view);
        for (i, v) in slice.iter_mut().enumerate() {
            let at = start + 4 * i;
            let bits = [blob[at], blob[at + 1], blob[at + 2], blob[at + 3]];
            let f = f32::from_le_bytes(bits);
            if !f.is_finite() {
                return Err(corrupt(format!(
                    "non-finite value in tensor {:?}",
                    entry.name
                )));
            }
            *v = T::from_f32(f);
        }
    }
    Ok((manifest.config, store))
}

fn make_slice_mut<'a, T: Scalar>(view: &'a mut TensorViewMut<'_, T>) -> &'a mut [T] {
    view.as_slice_mut()
}

/// Loads a checkpoint and rejects it unless its config equals `expected`.
pub fn load_checkpoint_expecting<T: Scalar>(
    path: &Path,
    expected: &ModelConfig,
) -> Result<ParameterStore<T>, ModelError> {
    let (config, params) = load_checkpoint::<T>(path)?;
    if &config != expected {
        return Err(ModelError::ConfigMismatch {
            path: path.display().to_string(),
        });
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn save_load_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let cfg = ModelConfig::tiny(10, 16, 7);
        let params = ParameterStore::<f32>::init(&cfg);
        save_checkpoint(&params, &cfg, &path).unwrap();
        let (cfg2, params2) = load_checkpoint::<f32>(&path).unwrap();
        assert_eq!(cfg2, cfg);
        assert_eq!(params2, params);

        // file bytes are reproducible through a save/load/save cycle
        let path2 = dir.path().join("m2.ckpt");
        save_checkpoint(&params2, &cfg2, &path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let cfg = ModelConfig::tiny(10, 16, 7);
        let params = ParameterStore::<f32>::init(&cfg);
        save_checkpoint(&params, &cfg, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
        assert!(matches!(
            load_checkpoint::<f32>(&path),
            Err(ModelError::Corrupt { .. })
        ));
    }

    #[test]
    fn wrong_config_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let cfg = ModelConfig::tiny(10, 16, 7);
        let params = ParameterStore::<f32>::init(&cfg);
        save_checkpoint(&params, &cfg, &path).unwrap();
        let other = ModelConfig::desk_default(10, 7);
        assert!(matches!(
            load_checkpoint_expecting::<f32>(&path, &other),
            Err(ModelError::ConfigMismatch { .. })
        ));
        assert!(load_checkpoint_expecting::<f32>(&path, &cfg).is_ok());
    }

    #[test]
    fn garbage_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        std::fs::write(&path, b"not a checkpoint").unwrap();
        assert!(matches!(
            load_checkpoint::<f32>(&path),
            Err(ModelError::Corrupt { .. })
        ));
    }
}
