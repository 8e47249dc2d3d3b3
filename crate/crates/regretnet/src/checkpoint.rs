//! Binary parameter container with a JSON sidecar.
//!
//! Layout, all integers little-endian:
//!
//! | field        | type                                   |
//! |--------------|----------------------------------------|
//! | magic        | 8 bytes `RGNTCKPT`                     |
//! | version      | `u32` (currently 1)                    |
//! | header       | `u32` length + UTF-8 JSON [`CheckpointHeader`] |
//! | tensor count | `u32`                                  |
//! | tensors      | per tensor: `u32` name length, UTF-8 name, `u32` rank, `rank × u64` dims, `f64` data |
//!
//! The sidecar `<file>.json` repeats the header and lists tensor names and
//! shapes. It is informational; loading only reads the container.

use std::fs;
use std::path::{Path, PathBuf};

use regretnet_core::diffcore::{ParamStore, Tensor};
use regretnet_core::myersonnet::MyersonNet;
use regretnet_core::regretnet::{ArchSpec, RegretNet};
use regretnet_core::rochetnet::{MenuMode, MenuNet};
use regretnet_core::valuations::SettingSpec;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 8] = b"RGNTCKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelHeader {
    Regretnet { arch: ArchSpec },
    Rochetnet { m: usize, mode: MenuMode, kappa: f64 },
    Myersonnet { n: usize, groups: usize, lines: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub model: ModelHeader,
    pub setting: SettingSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct TensorInfo<'a> {
    name: &'a str,
    shape: &'a [usize],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Sidecar<'a> {
    format: &'static str,
    version: u32,
    header: &'a CheckpointHeader,
    scalars: usize,
    tensors: Vec<TensorInfo<'a>>,
}

/// A trained model of any of the three families.
#[derive(Debug, Clone)]
pub enum Model {
    Regret(RegretNet),
    Menu(MenuNet),
    Myerson(MyersonNet),
}

impl Model {
    pub fn header(&self) -> ModelHeader {
        match self {
            Model::Regret(net) => ModelHeader::Regretnet { arch: net.arch },
            Model::Menu(net) => ModelHeader::Rochetnet { m: net.m, mode: net.mode, kappa: net.kappa },
            Model::Myerson(net) => {
                let t = &net.transforms[0];
                ModelHeader::Myersonnet { n: net.transforms.len(), groups: t.groups, lines: t.lines }
            }
        }
    }

    pub fn params(&self) -> ParamStore {
        match self {
            Model::Regret(net) => net.params.clone(),
            Model::Menu(net) => net.params.clone(),
            Model::Myerson(net) => net.to_params(),
        }
    }

    pub fn from_parts(header: &ModelHeader, params: ParamStore) -> regretnet_core::Result<Self> {
        Ok(match *header {
            ModelHeader::Regretnet { arch } => Model::Regret(RegretNet::new(arch, params)?),
            ModelHeader::Rochetnet { m, mode, kappa } => Model::Menu(MenuNet::from_params(m, mode, kappa, params)?),
            ModelHeader::Myersonnet { n, groups, lines } => {
                Model::Myerson(MyersonNet::from_params(&params, n, groups, lines)?)
            }
        })
    }

    pub fn mechanism(&self) -> &dyn regretnet_core::mechanism::Mechanism {
        match self {
            Model::Regret(net) => net,
            Model::Menu(net) => net,
            Model::Myerson(net) => net,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Regret(_) => "regretnet",
            Model::Menu(_) => "rochetnet",
            Model::Myerson(_) => "myersonnet",
        }
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn encode(header: &CheckpointHeader, params: &ParamStore) -> CliResult<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let json = serde_json::to_vec(header).map_err(|e| CliError::Config(e.to_string()))?;
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for (name, t) in params.iter() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &x in t.data() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8], String> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len()).ok_or("truncated checkpoint")?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<(CheckpointHeader, ParamStore), String> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err("not a checkpoint (bad magic)".into());
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(format!("unsupported checkpoint version {version}"));
    }
    let len = r.u32()? as usize;
    let header: CheckpointHeader = serde_json::from_slice(r.take(len)?).map_err(|e| format!("bad header: {e}"))?;
    let count = r.u32()?;
    let mut params = ParamStore::new();
    for _ in 0..count {
        let len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(len)?).map_err(|_| "tensor name is not UTF-8")?.to_owned();
        let rank = r.u32()? as usize;
        let shape = (0..rank).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        let elems = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or("tensor too large")?;
        let raw = r.take(elems.checked_mul(8).ok_or("tensor too large")?)?;
        let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        let tensor = Tensor::new(shape, data).map_err(|e| e.to_string())?;
        params.insert(&name, tensor);
    }
    if r.pos != bytes.len() {
        return Err("trailing bytes after tensors".into());
    }
    Ok((header, params))
}

pub fn save(path: &Path, model: &Model, setting: &SettingSpec) -> CliResult<()> {
    let header = CheckpointHeader { model: model.header(), setting: setting.clone() };
    let params = model.params();
    fs::write(path, encode(&header, &params)?).map_err(|e| CliError::io(path, e))?;
    let sidecar = Sidecar {
        format: "regretnet-checkpoint",
        version: VERSION,
        header: &header,
        scalars: params.num_scalars(),
        tensors: params.iter().map(|(name, t)| TensorInfo { name, shape: t.shape() }).collect(),
    };
    crate::write_json(&sidecar_path(path), &sidecar)
}

pub fn load(path: &Path) -> CliResult<(Model, SettingSpec)> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let (header, params) = decode(&bytes).map_err(|m| CliError::format(path, m))?;
    let model = Model::from_parts(&header.model, params).map_err(|e| CliError::format(path, e.to_string()))?;
    Ok((model, header.setting))
}

#[cfg(test)]
mod tests {
    use super::*;
    use regretnet_core::valuations::SettingId;

    #[test]
    fn round_trip_and_corruption() {
        let spec = SettingId::I.spec().unwrap();
        let arch = ArchSpec::for_setting(&spec, 1, 4).unwrap();
        let net = RegretNet::init(arch, 3);
        let header = CheckpointHeader { model: ModelHeader::Regretnet { arch }, setting: spec };
        let bytes = encode(&header, &net.params).unwrap();
        let (h, p) = decode(&bytes).unwrap();
        assert_eq!(h, header);
        assert_eq!(p, net.params);
        assert!(decode(&bytes[..bytes.len() - 3]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
    }
}
