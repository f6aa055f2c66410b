//! Binary field checkpoints.
//!
//! Layout (all little-endian):
//!
//! ```text
//!   bytes 0..8    magic "SQGC0001" (format + version)
//!   bytes 8..12   N  (u32)
//!   bytes 12..16  G  (u32)
//!   bytes 16..24  simulation time t (f64)
//!   bytes 24..32  mu (f64)
//!   then          N*N coefficients (f64), row-major in the x-mode index
//! ```
//!
//! The quadrature rule is not part of the format; checkpoints are read
//! back on the default (midpoint) node family.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::domain::{Domain, DomainSpec};
use crate::error::{Error, Result};
use crate::Field64;

pub const MAGIC: &[u8; 8] = b"SQGC0001";

/// A checkpoint: one field plus its time stamp and regularisation.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub field: Field64,
    pub t: f64,
    pub mu: f64,
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::FileFormat {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// Serialise a field; coefficients are written bit-exactly.
pub fn write_checkpoint(field: &Field64, t: f64, mu: f64, path: &Path) -> Result<()> {
    let n = field.domain().mode_cutoff();
    let g = field.domain().grid_size();
    let mut buf = Vec::with_capacity(32 + 8 * n * n);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    buf.extend_from_slice(&(g as u32).to_le_bytes());
    buf.extend_from_slice(&t.to_le_bytes());
    buf.extend_from_slice(&mu.to_le_bytes());
    for &c in field.coeff() {
        buf.extend_from_slice(&c.to_le_bytes());
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Read a checkpoint back; validates magic, version and payload length.
pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path)?;
    if bytes.len() < 32 {
        return Err(format_err(path, "truncated header"));
    }
    if bytes[0..4] != MAGIC[0..4] {
        return Err(format_err(path, "not a checkpoint file (bad magic)"));
    }
    if &bytes[0..8] != MAGIC {
        return Err(format_err(
            path,
            format!(
                "unsupported version {:?}",
                String::from_utf8_lossy(&bytes[4..8])
            ),
        ));
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let g = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let t = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let mu = f64::from_le_bytes(bytes[24..32].try_into().unwrap());

    let want = 32 + 8 * n * n;
    if bytes.len() != want {
        return Err(format_err(
            path,
            format!("payload length {} != expected {}", bytes.len(), want),
        ));
    }

    let domain = Domain::create(DomainSpec::new(n, g))
        .map_err(|e| format_err(path, format!("invalid header: {e}")))?;
    let mut coeff = Array2::zeros((n, n));
    for m in 0..n {
        for k in 0..n {
            let off = 32 + 8 * (m * n + k);
            coeff[[m, k]] = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        }
    }
    let field = Field64::from_coeff(&domain, coeff)
        .map_err(|e| format_err(path, format!("invalid payload: {e}")))?;
    Ok(Checkpoint { field, t, mu })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.ckpt");
        let domain = Domain::create(DomainSpec::new(16, 24)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coeff = Array2::from_shape_fn((16, 16), |_| rng.random::<f64>() - 0.5);
        let field = Field64::from_coeff(&domain, coeff).unwrap();

        write_checkpoint(&field, 0.25, 1e-3, &path).unwrap();
        let back = read_checkpoint(&path).unwrap();
        assert_eq!(back.t, 0.25);
        assert_eq!(back.mu, 1e-3);
        assert_eq!(back.field.coeff(), field.coeff());
    }

    #[test]
    fn rejects_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.ckpt");
        let domain = Domain::create(DomainSpec::new(4, 6)).unwrap();
        let field = Field64::single_mode(&domain, 1, 1, 1.0).unwrap();
        write_checkpoint(&field, 0.0, 0.0, &path).unwrap();

        // truncate payload
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(
            read_checkpoint(&path),
            Err(Error::FileFormat { .. })
        ));

        // version mismatch
        let mut bytes = bytes.clone();
        bytes[7] = b'9';
        std::fs::write(&path, &bytes).unwrap();
        let err = read_checkpoint(&path).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");

        // wrong magic
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            read_checkpoint(&path),
            Err(Error::FileFormat { .. })
        ));
    }
}
