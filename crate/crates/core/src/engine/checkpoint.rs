//! Binary parameter checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "OENS1"
//! u32 member_count
//! per member:
//!   [u8; 32]  SHA-256 of the spec JSON
//!   u32 len, spec JSON bytes
//!   u32 tensor_count
//!   per tensor: u32 len, name bytes, u32 ndim, u64 dims..., f64 payload
//! ```
//!
//! Momentum buffers are not stored; loaded parameter sets start with zero momentum.

use std::io::{Read, Write};

use super::network::NetworkSpec;
use super::params::{tensor_names, ParameterSet};
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 5] = b"OENS1";

// Upper bound on any single length field; guards allocation on corrupt input.
const MAX_LEN: u64 = 1 << 32;

fn io_err(e: std::io::Error) -> Error {
    Error::io("checkpoint", e)
}

pub fn write_checkpoint<W: Write>(mut w: W, members: &[(&NetworkSpec, &ParameterSet)]) -> Result<()> {
    w.write_all(MAGIC).map_err(io_err)?;
    w.write_all(&(members.len() as u32).to_le_bytes()).map_err(io_err)?;
    for (spec, params) in members {
        if !params.matches(spec) {
            return Err(Error::Checkpoint("parameters do not match their spec".into()));
        }
        let json = serde_json::to_vec(spec)?;
        w.write_all(&spec.digest()).map_err(io_err)?;
        write_bytes(&mut w, &json)?;
        w.write_all(&(params.tensors().len() as u32).to_le_bytes()).map_err(io_err)?;
        for (name, t) in params.names().iter().zip(params.tensors()) {
            write_bytes(&mut w, name.as_bytes())?;
            w.write_all(&(t.shape().len() as u32).to_le_bytes()).map_err(io_err)?;
            for &d in t.shape() {
                w.write_all(&(d as u64).to_le_bytes()).map_err(io_err)?;
            }
            for &v in t.data() {
                w.write_all(&v.to_le_bytes()).map_err(io_err)?;
            }
        }
    }
    w.flush().map_err(io_err)
}

fn write_bytes<W: Write>(w: &mut W, bytes: &[u8]) -> Result<()> {
    w.write_all(&(bytes.len() as u32).to_le_bytes()).map_err(io_err)?;
    w.write_all(bytes).map_err(io_err)
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn exact<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|_| Error::Checkpoint("truncated file".into()))?;
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.exact()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.exact()?))
    }

    fn bytes(&mut self) -> Result<Vec<u8>> {
        let len = self.u32()? as usize;
        let mut buf = vec![0u8; len];
        self.inner
            .read_exact(&mut buf)
            .map_err(|_| Error::Checkpoint("truncated file".into()))?;
        Ok(buf)
    }
}

pub fn read_checkpoint<R: Read>(r: R) -> Result<Vec<(NetworkSpec, ParameterSet)>> {
    let mut r = Reader { inner: r };
    let magic: [u8; 5] = r.exact()?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&magic),
            String::from_utf8_lossy(MAGIC)
        )));
    }
    let count = r.u32()?;
    let mut members = Vec::new();
    for m in 0..count {
        let digest: [u8; 32] = r.exact()?;
        let json = r.bytes()?;
        let spec: NetworkSpec = serde_json::from_slice(&json)
            .map_err(|e| Error::Checkpoint(format!("member {m}: bad spec: {e}")))?;
        if spec.digest() != digest {
            return Err(Error::Checkpoint(format!("member {m}: spec digest mismatch")));
        }
        let names = tensor_names(&spec);
        let tensor_count = r.u32()? as usize;
        if tensor_count != names.len() {
            return Err(Error::Checkpoint(format!(
                "member {m}: {tensor_count} tensors, spec needs {}",
                names.len()
            )));
        }
        let mut tensors = Vec::with_capacity(tensor_count);
        for expected in &names {
            let name = String::from_utf8(r.bytes()?)
                .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
            if &name != expected {
                return Err(Error::Checkpoint(format!(
                    "member {m}: expected tensor {expected}, found {name}"
                )));
            }
            let ndim = r.u32()? as usize;
            if ndim > 8 {
                return Err(Error::Checkpoint(format!("tensor {name}: {ndim} dimensions")));
            }
            let mut shape = Vec::with_capacity(ndim);
            let mut total: u64 = 1;
            for _ in 0..ndim {
                let d = r.u64()?;
                total = total.saturating_mul(d);
                shape.push(d as usize);
            }
            if total > MAX_LEN {
                return Err(Error::Checkpoint(format!("tensor {name} is implausibly large")));
            }
            let data = (0..total)
                .map(|_| r.exact::<8>().map(f64::from_le_bytes))
                .collect::<Result<Vec<_>>>()?;
            tensors.push(Tensor::new(shape, data).map_err(|e| Error::Checkpoint(e.to_string()))?);
        }
        let params = ParameterSet::from_tensors(&spec, tensors)
            .map_err(|e| Error::Checkpoint(format!("member {m}: {e}")))?;
        members.push((spec, params));
    }
    let mut trailing = [0u8; 1];
    if r.inner.read(&mut trailing).map_err(io_err)? != 0 {
        return Err(Error::Checkpoint("trailing bytes after last member".into()));
    }
    Ok(members)
}
