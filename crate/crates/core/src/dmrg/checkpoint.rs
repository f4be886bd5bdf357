//! Binary MPS checkpoints.
//!
//! Layout, all integers little-endian `u32`, all reals little-endian `f64`:
//!
//! ```text
//! magic        8 bytes  "RABIMPS\0"
//! version      u32      1
//! n_sites      u32
//! local_dim    u32
//! center       u32
//! per site     u32 left bond, u32 right bond
//! per site     left·local_dim·right reals, row-major (left, phys, right)
//! ```

use std::io::{self, Read, Write};

use super::{MpsState, SiteTensor};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"RABIMPS\0";
pub const CHECKPOINT_VERSION: u32 = 1;

fn put_u32<W: Write>(w: &mut W, v: usize) -> io::Result<()> {
    let v = u32::try_from(v).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "dimension exceeds u32"))?;
    w.write_all(&v.to_le_bytes())
}

fn get_u32<R: Read>(r: &mut R) -> io::Result<usize> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}

fn invalid(msg: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.to_string())
}

pub fn write_checkpoint<W: Write>(state: &MpsState, mut w: W) -> io::Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    put_u32(&mut w, state.n_sites)?;
    put_u32(&mut w, state.local_dim)?;
    put_u32(&mut w, state.canonical_center)?;
    for t in &state.site_tensors {
        put_u32(&mut w, t.left)?;
        put_u32(&mut w, t.right)?;
    }
    for t in &state.site_tensors {
        for x in &t.data {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()
}

pub fn read_checkpoint<R: Read>(mut r: R) -> io::Result<MpsState> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(invalid("not an MPS checkpoint"));
    }
    let version = get_u32(&mut r)? as u32;
    if version != CHECKPOINT_VERSION {
        return Err(invalid(&format!("unsupported checkpoint version {version}")));
    }
    let n_sites = get_u32(&mut r)?;
    let local_dim = get_u32(&mut r)?;
    let center = get_u32(&mut r)?;
    if n_sites < 2 || local_dim == 0 || center >= n_sites {
        return Err(invalid("inconsistent checkpoint header"));
    }
    let mut shapes = Vec::with_capacity(n_sites);
    for _ in 0..n_sites {
        shapes.push((get_u32(&mut r)?, get_u32(&mut r)?));
    }
    if shapes[0].0 != 1 || shapes[n_sites - 1].1 != 1 || shapes.windows(2).any(|w| w[0].1 != w[1].0) {
        return Err(invalid("bond dimensions do not chain"));
    }
    let mut tensors = Vec::with_capacity(n_sites);
    let mut buf = [0u8; 8];
    for &(left, right) in &shapes {
        let mut t = SiteTensor::zeros(left, local_dim, right);
        for x in t.data.iter_mut() {
            r.read_exact(&mut buf)?;
            *x = f64::from_le_bytes(buf);
        }
        tensors.push(t);
    }
    Ok(MpsState {
        n_sites,
        local_dim,
        bond_dims: shapes[..n_sites - 1].iter().map(|s| s.1).collect(),
        site_tensors: tensors,
        canonical_center: center,
    })
}
