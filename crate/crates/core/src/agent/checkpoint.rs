//! Binary checkpoints: an 8-byte magic, a little-endian `u32` format
//! version, a length-prefixed JSON header, then the parameters and the two
//! optimizer moment vectors as little-endian `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::{Adam, AgentConfig, AgentParams};
use crate::error::{CollageError, Result};

const MAGIC: &[u8; 8] = b"COLLAGE\x01";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: AgentParams,
    pub optimizer: Adam,
    pub epoch: u32,
    /// Hash of the configuration the agent was trained with.
    pub config_hash: String,
}

#[derive(Serialize, Deserialize)]
struct Header {
    agent: AgentConfig,
    optimizer: Adam,
    epoch: u32,
    config_hash: String,
    num_params: usize,
}

fn bad(msg: impl Into<String>) -> CollageError {
    CollageError::Checkpoint(msg.into())
}

impl Checkpoint {
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let header = Header {
            agent: self.params.config().clone(),
            optimizer: self.optimizer.clone(),
            epoch: self.epoch,
            config_hash: self.config_hash.clone(),
            num_params: self.params.len(),
        };
        let json = serde_json::to_vec(&header).map_err(|e| bad(e.to_string()))?;
        out.write_all(MAGIC)?;
        out.write_u32::<LittleEndian>(VERSION)?;
        out.write_u64::<LittleEndian>(json.len() as u64)?;
        out.write_all(&json)?;
        for buf in [&self.params.values, &self.optimizer.m, &self.optimizer.v] {
            for &x in buf.iter() {
                out.write_f64::<LittleEndian>(x)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic).map_err(|_| bad("file too short for a checkpoint"))?;
        if &magic != MAGIC {
            return Err(bad("not a collage checkpoint"));
        }
        let version = input.read_u32::<LittleEndian>()?;
        if version != VERSION {
            return Err(bad(format!("unsupported checkpoint version {version}")));
        }
        let len = input.read_u64::<LittleEndian>()? as usize;
        if len > 1 << 20 {
            return Err(bad("header too large"));
        }
        let mut json = vec![0u8; len];
        input.read_exact(&mut json).map_err(|_| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(&json).map_err(|e| bad(format!("bad header: {e}")))?;

        let mut read_vec = |what: &str| -> Result<Vec<f64>> {
            let mut v = vec![0.0; header.num_params];
            input.read_f64_into::<LittleEndian>(&mut v).map_err(|_| bad(format!("truncated {what}")))?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(bad(format!("non-finite {what}")));
            }
            Ok(v)
        };
        let values = read_vec("parameters")?;
        let m = read_vec("first moments")?;
        let v = read_vec("second moments")?;
        let mut rest = [0u8; 1];
        if input.read(&mut rest)? != 0 {
            return Err(bad("trailing bytes after checkpoint"));
        }
        let params = AgentParams::from_values(header.agent, values)?;
        let optimizer = Adam { m, v, ..header.optimizer };
        Ok(Checkpoint { params, optimizer, epoch: header.epoch, config_hash: header.config_hash })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        self.write_to(BufWriter::new(File::create(&tmp)?))?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}
