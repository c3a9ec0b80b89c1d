//! Checkpoint container.
//!
//! Layout: the 4-byte magic `MRP1`, a plain-text header (version, config
//! key=value pairs, the six vocabularies, and a tensor manifest of name,
//! dtype, shape and byte offset), a `[data]` marker with the payload size,
//! then the raw parameter payloads as row-major little-endian 32-bit
//! floats. Loading rebuilds the model skeleton from config and vocabulary
//! and overwrites every tensor from the payload, so a round trip is
//! bit-identical.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::network::Model;
use super::vocab::{Lexicon, Vocab};
use super::{ModelConfig, ModelError};

const MAGIC: &[u8; 4] = b"MRP1";
const VERSION: u32 = 1;

fn bad(msg: impl Into<String>) -> ModelError {
    ModelError::Checkpoint(msg.into())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn line(&mut self) -> Result<&'a str, ModelError> {
        let rest = &self.bytes[self.pos..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| bad("truncated header"))?;
        self.pos += end + 1;
        std::str::from_utf8(&rest[..end]).map_err(|_| bad("header is not UTF-8"))
    }

    fn rest(&self) -> &'a [u8] {
        &self.bytes[self.pos..]
    }
}

fn section_header(line: &str, name: &str) -> Result<usize, ModelError> {
    let (section, count) = line
        .split_once(' ')
        .ok_or_else(|| bad(format!("malformed section header {line:?}")))?;
    if section != name {
        return Err(bad(format!("expected section {name}, found {section}")));
    }
    count
        .parse()
        .map_err(|_| bad(format!("bad count in section header {line:?}")))
}

impl Model<f32> {
    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut header = String::new();
        let _ = writeln!(header, "version {VERSION}");
        header.push_str("[config]\n");
        for (k, v) in self.config.to_pairs() {
            let _ = writeln!(header, "{k}={v}");
        }
        let vocabs: [(&str, &Lexicon); 6] = [
            ("words", &self.vocab.words),
            ("chars", &self.vocab.chars),
            ("pos", &self.vocab.pos),
            ("dep_labels", &self.vocab.dep_labels),
            ("const_labels", &self.vocab.const_labels),
            ("unary_tags", &self.vocab.unary_tags),
        ];
        for (name, lexicon) in vocabs {
            let _ = writeln!(header, "[vocab.{name}] {}", lexicon.len());
            for entry in lexicon.entries() {
                let _ = writeln!(header, "{entry}");
            }
        }
        let _ = writeln!(header, "[tensors] {}", self.params().len());
        let mut payload: Vec<u8> = Vec::new();
        for (name, tensor) in self.params().iter() {
            let shape: Vec<String> = tensor.shape().iter().map(|d| d.to_string()).collect();
            let _ = writeln!(header, "{name} f32 {} {}", shape.join(","), payload.len());
            for &x in tensor.data() {
                payload.extend_from_slice(&x.to_le_bytes());
            }
        }
        let _ = writeln!(header, "[data] {}", payload.len());

        let mut out = Vec::with_capacity(4 + header.len() + payload.len());
        out.extend_from_slice(MAGIC);
        out.push(b'\n');
        out.extend_from_slice(header.as_bytes());
        out.extend_from_slice(&payload);
        out
    }

    pub fn load(path: &Path) -> Result<Model<f32>, ModelError> {
        Self::from_bytes(&fs::read(path)?)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Model<f32>, ModelError> {
        if bytes.len() < 5 || &bytes[0..4] != MAGIC {
            return Err(bad("not a checkpoint file (bad magic)"));
        }
        if bytes[4] != b'\n' {
            return Err(bad("not a checkpoint file (bad magic)"));
        }
        let mut cursor = Cursor { bytes, pos: 5 };
        let version_line = cursor.line()?;
        let version: u32 = version_line
            .strip_prefix("version ")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(format!("malformed version line {version_line:?}")))?;
        if version != VERSION {
            return Err(ModelError::CheckpointVersion {
                found: version,
                supported: VERSION,
            });
        }
        if cursor.line()? != "[config]" {
            return Err(bad("missing [config] section"));
        }
        let mut config = ModelConfig::default();
        let mut line = cursor.line()?;
        while !line.starts_with('[') {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("malformed config line {line:?}")))?;
            config.set(k, v)?;
            line = cursor.line()?;
        }
        config.validate()?;

        let mut lexicons = Vec::with_capacity(6);
        for name in [
            "words",
            "chars",
            "pos",
            "dep_labels",
            "const_labels",
            "unary_tags",
        ] {
            let count = section_header(line, &format!("[vocab.{name}]"))?;
            let mut entries = Vec::with_capacity(count);
            for _ in 0..count {
                entries.push(cursor.line()?.to_string());
            }
            lexicons.push(Lexicon::from_entries(entries));
            line = cursor.line()?;
        }
        let mut it = lexicons.into_iter();
        let words = it.next().unwrap();
        let singletons = vec![false; words.len()];
        let vocab = Vocab {
            words,
            chars: it.next().unwrap(),
            pos: it.next().unwrap(),
            dep_labels: it.next().unwrap(),
            const_labels: it.next().unwrap(),
            unary_tags: it.next().unwrap(),
            singletons,
        };

        let tensor_count = section_header(line, "[tensors]")?;
        struct Entry {
            shape: Vec<usize>,
            offset: usize,
        }
        let mut manifest: HashMap<String, Entry> = HashMap::new();
        for _ in 0..tensor_count {
            let line = cursor.line()?;
            let fields: Vec<&str> = line.split(' ').collect();
            if fields.len() != 4 {
                return Err(bad(format!("malformed tensor line {line:?}")));
            }
            if fields[1] != "f32" {
                return Err(bad(format!("unsupported dtype {:?}", fields[1])));
            }
            let shape: Vec<usize> = fields[2]
                .split(',')
                .map(|d| d.parse().map_err(|_| bad(format!("bad shape in {line:?}"))))
                .collect::<Result<_, _>>()?;
            let offset = fields[3]
                .parse()
                .map_err(|_| bad(format!("bad offset in {line:?}")))?;
            if manifest
                .insert(fields[0].to_string(), Entry { shape, offset })
                .is_some()
            {
                return Err(bad(format!("duplicate tensor {:?}", fields[0])));
            }
        }
        let payload_len = section_header(cursor.line()?, "[data]")?;
        let payload = cursor.rest();
        if payload.len() != payload_len {
            return Err(bad(format!(
                "payload is {} bytes, header says {payload_len}",
                payload.len()
            )));
        }

        // Rebuild the skeleton and overwrite every tensor. The init seed
        // is irrelevant: all parameters come from the payload.
        let mut model: Model<f32> = Model::new(config, vocab, 0)?;
        if model.params().len() != tensor_count {
            return Err(bad(format!(
                "manifest has {tensor_count} tensors, model has {}",
                model.params().len()
            )));
        }
        let ids: Vec<_> = model.params().ids().collect();
        for id in ids {
            let name = model.params().name(id).to_string();
            let entry = manifest
                .get(&name)
                .ok_or_else(|| bad(format!("tensor {name:?} missing from checkpoint")))?;
            let expected_shape = model.params().get(id).shape().to_vec();
            if entry.shape != expected_shape {
                return Err(bad(format!(
                    "tensor {name:?} has shape {:?}, expected {:?}",
                    entry.shape, expected_shape
                )));
            }
            let count: usize = entry.shape.iter().product();
            let end = entry
                .offset
                .checked_add(4 * count)
                .ok_or_else(|| bad("tensor offset overflow"))?;
            if end > payload.len() {
                return Err(bad(format!("tensor {name:?} is truncated")));
            }
            let dst = model.params_mut().get_mut(id).data_mut();
            for (i, chunk) in payload[entry.offset..end].chunks_exact(4).enumerate() {
                dst[i] = f32::from_le_bytes(chunk.try_into().unwrap());
            }
        }
        Ok(model)
    }
}
