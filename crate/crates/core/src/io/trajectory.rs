//! Trajectory files and norm time series.
//!
//! The binary layout mirrors the checkpoint format:
//!
//! ```text
//!   bytes 0..8    magic "SQGT0001"
//!   bytes 8..12   N (u32)          bytes 12..16  G (u32)
//!   bytes 16..24  mu (f64)         bytes 24..32  state count (u64)
//!   per state:    t (f64), then N*N coefficients (f64, row-major)
//! ```
//!
//! Coefficients round-trip bit-exactly; diagnostics are recomputed on
//! read.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::domain::{Domain, DomainSpec};
use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::{Field64, Trajectory64};

pub const MAGIC: &[u8; 8] = b"SQGT0001";

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::FileFormat {
        path: path.display().to_string(),
        message: message.into(),
    }
}

pub fn write_trajectory(traj: &Trajectory64, path: &Path) -> Result<()> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let n = traj.states()[0].domain().mode_cutoff();
    let g = traj.states()[0].domain().grid_size();
    let mut buf = Vec::with_capacity(32 + traj.len() * (8 + 8 * n * n));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    buf.extend_from_slice(&(g as u32).to_le_bytes());
    buf.extend_from_slice(&traj.mu().to_le_bytes());
    buf.extend_from_slice(&(traj.len() as u64).to_le_bytes());
    for (t, state) in traj.times().iter().zip(traj.states()) {
        buf.extend_from_slice(&t.to_le_bytes());
        for &c in state.coeff() {
            buf.extend_from_slice(&c.to_le_bytes());
        }
    }
    fs::write(path, buf)?;
    Ok(())
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory64> {
    let bytes = fs::read(path)?;
    if bytes.len() < 32 {
        return Err(format_err(path, "truncated header"));
    }
    if bytes[0..4] != MAGIC[0..4] {
        return Err(format_err(path, "not a trajectory file (bad magic)"));
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
    let mu = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let count = u64::from_le_bytes(bytes[24..32].try_into().unwrap()) as usize;

    let state_bytes = 8 + 8 * n * n;
    let want = 32 + count * state_bytes;
    if bytes.len() != want {
        return Err(format_err(
            path,
            format!("payload length {} != expected {}", bytes.len(), want),
        ));
    }
    if count == 0 {
        return Err(format_err(path, "trajectory holds no states"));
    }

    let domain = Domain::create(DomainSpec::new(n, g))
        .map_err(|e| format_err(path, format!("invalid header: {e}")))?;
    let mut times = Vec::with_capacity(count);
    let mut states = Vec::with_capacity(count);
    for s in 0..count {
        let base = 32 + s * state_bytes;
        times.push(f64::from_le_bytes(bytes[base..base + 8].try_into().unwrap()));
        let mut coeff = Array2::zeros((n, n));
        for m in 0..n {
            for k in 0..n {
                let off = base + 8 + 8 * (m * n + k);
                coeff[[m, k]] = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
            }
        }
        states.push(
            Field64::from_coeff(&domain, coeff)
                .map_err(|e| format_err(path, format!("invalid payload: {e}")))?,
        );
    }
    Trajectory::from_states(mu, times, states)
}

/// Norm time series as CSV with the fixed header
/// `time,l2_norm,besov_2_2_1,grad_linf`.
pub fn write_norm_series(traj: &Trajectory64, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "time,l2_norm,besov_2_2_1,grad_linf")?;
    for (t, diag) in traj.times().iter().zip(traj.diagnostics()) {
        writeln!(out, "{},{},{},{}", t, diag.l2, diag.besov_221, diag.grad_linf)?;
    }
    fs::write(path, out)?;
    Ok(())
}
