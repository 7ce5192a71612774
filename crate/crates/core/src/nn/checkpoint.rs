use std::io::{Read, Write};
use std::path::Path;

use super::{DenseNet, LstmCell, Model};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"DBNKCKPT";
const VERSION: u32 = 1;
const KIND_DENSE: u8 = 0;
const KIND_LSTM: u8 = 1;

/// Versioned little-endian binary dump: magic, version, a kind byte, the
/// layer sizes, then every parameter tensor in [`Model::tensors`] order.
/// Values are stored bit-for-bit, so a reload reproduces outputs exactly.
pub trait Checkpoint: Sized {
    fn write_to<W: Write>(&self, w: &mut W) -> Result<()>;
    fn read_from<R: Read>(r: &mut R) -> Result<Self>;

    fn save(&self, path: &Path) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut file)?;
        file.flush()?;
        Ok(())
    }

    fn load(path: &Path) -> Result<Self> {
        let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut file)
    }
}

fn write_header<W: Write>(w: &mut W, kind: u8, dims: &[usize]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[kind])?;
    w.write_all(&(dims.len() as u64).to_le_bytes())?;
    for &d in dims {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(truncated)?;
    Ok(u64::from_le_bytes(buf))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Checkpoint("file is truncated".into())
    } else {
        Error::Io(e)
    }
}

fn read_header<R: Read>(r: &mut R, kind: u8) -> Result<Vec<usize>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file".into()));
    }
    let mut v = [0u8; 4];
    r.read_exact(&mut v).map_err(truncated)?;
    let version = u32::from_le_bytes(v);
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let mut k = [0u8; 1];
    r.read_exact(&mut k).map_err(truncated)?;
    if k[0] != kind {
        return Err(Error::Checkpoint(format!(
            "expected model kind {kind}, found {}",
            k[0]
        )));
    }
    let count = read_u64(r)?;
    if count > 64 {
        return Err(Error::Checkpoint(format!(
            "implausible layer count {count}"
        )));
    }
    (0..count)
        .map(|_| read_u64(r).map(|d| d as usize))
        .collect()
}

fn write_tensors<W: Write, M: Model>(w: &mut W, model: &M) -> Result<()> {
    for t in model.tensors() {
        for v in t {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_tensors<R: Read, M: Model>(r: &mut R, model: &mut M) -> Result<()> {
    let mut buf = [0u8; 8];
    for t in model.tensors_mut() {
        for v in t.iter_mut() {
            r.read_exact(&mut buf).map_err(truncated)?;
            *v = f64::from_le_bytes(buf);
        }
    }
    Ok(())
}

impl Checkpoint for DenseNet {
    fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        write_header(w, KIND_DENSE, self.sizes())?;
        write_tensors(w, self)
    }

    fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let sizes = read_header(r, KIND_DENSE)?;
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Checkpoint(format!("bad layer sizes {sizes:?}")));
        }
        let mut net = DenseNet::zeros(&sizes);
        read_tensors(r, &mut net)?;
        Ok(net)
    }
}

impl Checkpoint for LstmCell {
    fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        write_header(
            w,
            KIND_LSTM,
            &[self.input_dim(), self.hidden_dim(), self.output_dim()],
        )?;
        write_tensors(w, self)
    }

    fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let dims = read_header(r, KIND_LSTM)?;
        let [input, hidden, output] = dims[..] else {
            return Err(Error::Checkpoint(format!(
                "expected 3 dimensions, found {}",
                dims.len()
            )));
        };
        let mut cell = LstmCell::zeros(input, hidden, output);
        read_tensors(r, &mut cell)?;
        Ok(cell)
    }
}
