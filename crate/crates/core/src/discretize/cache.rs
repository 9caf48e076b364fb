//! Binary serialization of the assembled blocks.
//!
//! Layout (all integers `u64` little-endian unless noted):
//!
//! ```text
//! magic      8 bytes  "KRLBMDL\0"
//! version    u32
//! N, m
//! mesh id    length, then UTF-8 bytes
//! 8 sparse blocks in the order A_II, A_IB, D_I, D_B, A'_II, A'_IB, D'_I, D'_B:
//!            rows, cols, nnz, then nnz records (row, col, re: f64, im: f64)
//! A0'        rows, cols, then rows·cols (re, im) pairs in row-major order
//! s0 diag    m (re, im) pairs
//! W_I, W_B   N and m f64 values
//! checksum   SHA-256 of all preceding bytes
//! ```
//!
//! The mesh and the operator are not stored: they are rebuilt from the
//! configuration and checked against the stored mesh id and sizes.

use std::sync::Arc;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use super::mesh::Mesh;
use super::{DiscreteModel, EllipticOperatorSpec};
use crate::error::{Error, Result};
use crate::linalg::{CMat, Sparse};

pub const MAGIC: &[u8; 8] = b"KRLBMDL\0";
pub const VERSION: u32 = 1;

fn put_u64(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u64).to_le_bytes());
}

fn put_c(out: &mut Vec<u8>, z: Complex64) {
    out.extend_from_slice(&z.re.to_le_bytes());
    out.extend_from_slice(&z.im.to_le_bytes());
}

fn put_sparse(out: &mut Vec<u8>, s: &Sparse) {
    put_u64(out, s.nrows());
    put_u64(out, s.ncols());
    put_u64(out, s.nnz());
    for &(i, j, v) in s.entries() {
        put_u64(out, i);
        put_u64(out, j);
        put_c(out, v);
    }
}

pub fn to_bytes(model: &DiscreteModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    put_u64(&mut out, model.n());
    put_u64(&mut out, model.m());
    let id = model.mesh.id();
    put_u64(&mut out, id.len());
    out.extend_from_slice(id.as_bytes());
    for s in model.blocks() {
        put_sparse(&mut out, s);
    }
    put_u64(&mut out, model.a0p.nrows());
    put_u64(&mut out, model.a0p.ncols());
    for i in 0..model.a0p.nrows() {
        for j in 0..model.a0p.ncols() {
            put_c(&mut out, model.a0p[(i, j)]);
        }
    }
    for &z in &model.s0_diag {
        put_c(&mut out, z);
    }
    for &w in model.w_i.iter().chain(&model.w_b) {
        out.extend_from_slice(&w.to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Cache(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
        usize::try_from(v).map_err(|_| Error::Cache(format!("count {v} out of range")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn c(&mut self) -> Result<Complex64> {
        Ok(Complex64::new(self.f64()?, self.f64()?))
    }

    /// A count that must fit in the remaining bytes at `unit` bytes each.
    fn count(&mut self, unit: usize) -> Result<usize> {
        let n = self.u64()?;
        if n.saturating_mul(unit) > self.buf.len() - self.pos {
            return Err(Error::Cache(format!("count {n} exceeds the file size")));
        }
        Ok(n)
    }

    fn sparse(&mut self) -> Result<Sparse> {
        let rows = self.u64()?;
        let cols = self.u64()?;
        let nnz = self.count(32)?;
        let mut t = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            let (i, j) = (self.u64()?, self.u64()?);
            if i >= rows || j >= cols {
                return Err(Error::Cache(format!("entry ({i}, {j}) outside {rows} × {cols}")));
            }
            t.push((i, j, self.c()?));
        }
        Ok(Sparse::from_triplets(rows, cols, t))
    }
}

/// Fixed-layout prefix of a cache file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Header {
    pub version: u32,
    pub n: usize,
    pub m: usize,
    pub mesh_id: String,
}

fn check_prefix(bytes: &[u8]) -> Result<()> {
    if bytes.len() < MAGIC.len() + 4 + 32 {
        return Err(Error::Cache("file too short".into()));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Cache(format!("version {version}, expected {VERSION}")));
    }
    Ok(())
}

fn read_header(r: &mut Reader) -> Result<Header> {
    r.take(8)?;
    let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
    let n = r.u64()?;
    let m = r.u64()?;
    let id_len = r.count(1)?;
    let mesh_id = String::from_utf8(r.take(id_len)?.to_vec())
        .map_err(|_| Error::Cache("mesh id is not UTF-8".into()))?;
    Ok(Header { version, n, m, mesh_id })
}

/// Reads the header without verifying the checksum or the version.
pub fn peek_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 8 || &bytes[..8] != MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    read_header(&mut Reader { buf: bytes, pos: 0 })
}

/// Rebuilds a model from bytes written by [`to_bytes`]. `mesh` and `op` must
/// be the ones the bytes were assembled from.
pub fn from_bytes(bytes: &[u8], mesh: Arc<Mesh>, op: EllipticOperatorSpec) -> Result<DiscreteModel> {
    check_prefix(bytes)?;
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Cache("checksum mismatch".into()));
    }
    let mut r = Reader { buf: body, pos: 0 };
    let Header { n, m, mesh_id: id, .. } = read_header(&mut r)?;
    if id != mesh.id() || n != mesh.n_interior || m != mesh.n_boundary {
        return Err(Error::Cache(format!(
            "stored mesh {id} does not match {}",
            mesh.id()
        )));
    }
    let mut blocks = Vec::with_capacity(8);
    for _ in 0..8 {
        blocks.push(r.sparse()?);
    }
    let rows = r.u64()?;
    let cols = r.u64()?;
    if rows.saturating_mul(cols).saturating_mul(16) > body.len() - r.pos {
        return Err(Error::Cache("dense block exceeds the file size".into()));
    }
    let mut a0p = CMat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            a0p[(i, j)] = r.c()?;
        }
    }
    let s0 = (0..m).map(|_| r.c()).collect::<Result<Vec<_>>>()?;
    let w_i = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let w_b = (0..m).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    if r.pos != body.len() {
        return Err(Error::Cache(format!("{} trailing bytes", body.len() - r.pos)));
    }
    let blocks: [Sparse; 8] = blocks.try_into().map_err(|_| Error::Cache("block count".into()))?;
    DiscreteModel::from_parts(mesh, op, blocks, a0p, s0, w_i, w_b)
}

/// Bitwise equality of all stored arrays.
pub fn bit_identical(a: &DiscreteModel, b: &DiscreteModel) -> bool {
    to_bytes(a) == to_bytes(b)
}
