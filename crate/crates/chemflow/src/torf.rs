//! TORF binary snapshots.
//!
//! Layout: a 32-byte header (`b"TORF"`, then little-endian `u32` version,
//! dim, n and rank, then 12 reserved zero bytes) followed by the samples as
//! little-endian `f64`, component-major, each component in row-major grid
//! order (first axis slowest). Rank 0 is a scalar, 1 a vector with `dim`
//! components, 2 a symmetric tensor with its `dim (dim + 1) / 2` upper
//! triangle components.
//!
//! Files carry no cutoff; readers attach the largest dealiased one, `n / 3`.

use std::io::{self, Read, Write};

use chemflow_core::{Field, GridSpec, ScalarField, SymTensorField, VectorField};

pub const MAGIC: [u8; 4] = *b"TORF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum TorfError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a TORF file")]
    BadMagic,
    #[error("unsupported TORF version {0}")]
    Version(u32),
    #[error("bad TORF header: {0}")]
    Header(String),
    #[error("expected rank {expected}, file has rank {found}")]
    Rank { expected: u32, found: u32 },
    #[error(transparent)]
    Field(#[from] chemflow_core::Error),
}

/// Header fields of a TORF file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub dim: u32,
    pub n: u32,
    pub rank: u32,
}

impl Header {
    pub fn components(&self) -> usize {
        let d = self.dim as usize;
        match self.rank {
            0 => 1,
            1 => d,
            _ => d * (d + 1) / 2,
        }
    }

    pub fn grid(&self) -> Result<GridSpec, TorfError> {
        let n = self.n as usize;
        Ok(GridSpec::new(self.dim as usize, n, n / 3)?)
    }
}

/// A field of any rank read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyField {
    Scalar(ScalarField),
    Vector(VectorField),
    SymTensor(SymTensorField),
}

pub trait TorfField: Sized {
    const RANK: u32;
    fn from_parts(grid: GridSpec, comps: Vec<Vec<f64>>) -> chemflow_core::Result<Self>;
}

impl TorfField for ScalarField {
    const RANK: u32 = 0;
    fn from_parts(grid: GridSpec, mut comps: Vec<Vec<f64>>) -> chemflow_core::Result<Self> {
        ScalarField::new(grid, comps.remove(0))
    }
}

impl TorfField for VectorField {
    const RANK: u32 = 1;
    fn from_parts(grid: GridSpec, comps: Vec<Vec<f64>>) -> chemflow_core::Result<Self> {
        VectorField::new(grid, comps)
    }
}

impl TorfField for SymTensorField {
    const RANK: u32 = 2;
    fn from_parts(grid: GridSpec, comps: Vec<Vec<f64>>) -> chemflow_core::Result<Self> {
        SymTensorField::new(grid, comps)
    }
}

pub fn write<F: Field + TorfField, W: Write>(field: &F, mut w: W) -> io::Result<()> {
    let g = field.grid();
    let mut header = [0u8; HEADER_LEN];
    header[..4].copy_from_slice(&MAGIC);
    for (i, v) in [VERSION, g.dim() as u32, g.n() as u32, F::RANK].into_iter().enumerate() {
        header[4 + 4 * i..8 + 4 * i].copy_from_slice(&v.to_le_bytes());
    }
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(8 * g.len());
    for comp in field.components() {
        buf.clear();
        for x in comp {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()
}

pub fn read_header<R: Read>(mut r: R) -> Result<Header, TorfError> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    if header[..4] != MAGIC {
        return Err(TorfError::BadMagic);
    }
    let word = |i: usize| u32::from_le_bytes(header[4 + 4 * i..8 + 4 * i].try_into().expect("4 bytes"));
    if word(0) != VERSION {
        return Err(TorfError::Version(word(0)));
    }
    let h = Header {
        dim: word(1),
        n: word(2),
        rank: word(3),
    };
    if !(2..=3).contains(&h.dim) || h.rank > 2 {
        return Err(TorfError::Header(format!("dim {} rank {}", h.dim, h.rank)));
    }
    if header[20..].iter().any(|&b| b != 0) {
        return Err(TorfError::Header("reserved bytes are not zero".into()));
    }
    Ok(h)
}

fn read_body<R: Read>(h: &Header, mut r: R) -> Result<(GridSpec, Vec<Vec<f64>>), TorfError> {
    let grid = h.grid()?;
    let mut comps = Vec::with_capacity(h.components());
    let mut buf = vec![0u8; 8 * grid.len()];
    for _ in 0..h.components() {
        r.read_exact(&mut buf)?;
        comps.push(
            buf.chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
                .collect(),
        );
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(TorfError::Header("trailing bytes after samples".into()));
    }
    Ok((grid, comps))
}

/// Reads a field of the expected rank.
pub fn read<F: TorfField, R: Read>(mut r: R) -> Result<F, TorfError> {
    let h = read_header(&mut r)?;
    if h.rank != F::RANK {
        return Err(TorfError::Rank {
            expected: F::RANK,
            found: h.rank,
        });
    }
    let (grid, comps) = read_body(&h, r)?;
    Ok(F::from_parts(grid, comps)?)
}

/// Reads a field of whatever rank the header declares.
pub fn read_any<R: Read>(mut r: R) -> Result<AnyField, TorfError> {
    let h = read_header(&mut r)?;
    let (grid, comps) = read_body(&h, r)?;
    Ok(match h.rank {
        0 => AnyField::Scalar(ScalarField::from_parts(grid, comps)?),
        1 => AnyField::Vector(VectorField::from_parts(grid, comps)?),
        _ => AnyField::SymTensor(SymTensorField::from_parts(grid, comps)?),
    })
}

pub fn write_file<F: Field + TorfField>(field: &F, path: &std::path::Path) -> io::Result<()> {
    write(field, io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn read_file<F: TorfField>(path: &std::path::Path) -> Result<F, TorfError> {
    read(io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let g = GridSpec::new(2, 8, 2).unwrap();
        let mut buf = Vec::new();
        write(&ScalarField::constant(g, 1.5), &mut buf).unwrap();
        assert_eq!(buf.len(), 32 + 8 * 64);
        assert_eq!(&buf[..4], b"TORF");
        assert_eq!(buf[4..8], 1u32.to_le_bytes());
        assert_eq!(buf[8..12], 2u32.to_le_bytes());
        assert_eq!(buf[12..16], 8u32.to_le_bytes());
        assert_eq!(buf[16..20], 0u32.to_le_bytes());
        assert!(buf[20..32].iter().all(|&b| b == 0));
        assert_eq!(buf[32..40], 1.5f64.to_le_bytes());
    }

    #[test]
    fn rank_mismatch_and_corruption() {
        let g = GridSpec::new(2, 8, 2).unwrap();
        let mut buf = Vec::new();
        write(&VectorField::zeros(g), &mut buf).unwrap();
        assert!(matches!(read::<ScalarField, _>(&buf[..]), Err(TorfError::Rank { .. })));
        assert!(matches!(read::<VectorField, _>(&buf[..buf.len() - 1]), Err(TorfError::Io(_))));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_any(&bad[..]), Err(TorfError::BadMagic)));
        let mut long = buf.clone();
        long.push(0);
        assert!(read::<VectorField, _>(&long[..]).is_err());
    }
}
