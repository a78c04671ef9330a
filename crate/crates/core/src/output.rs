//! Report, trajectory and manifest writers.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::grid::GridFunction;
use crate::solver::Trajectory;

/// Pretty JSON with a trailing newline; byte-stable for equal values.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

/// `t,x[,y],u` rows, one per cell and snapshot.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> io::Result<()> {
    let mut out = io::BufWriter::new(fs::File::create(path)?);
    let dim = traj.initial().dim();
    writeln!(out, "{}", if dim == 1 { "t,x,u" } else { "t,x,y,u" })?;
    for (t, u) in traj.times.iter().zip(&traj.snapshots) {
        for (p, v) in u.points().iter().zip(u.values()) {
            if dim == 1 {
                writeln!(out, "{t:e},{:e},{v:e}", p[0])?;
            } else {
                writeln!(out, "{t:e},{:e},{:e},{v:e}", p[0], p[1])?;
            }
        }
    }
    out.flush()
}

/// `t,x,v` rows for reconstructed curves.
pub fn write_curves_csv(path: &Path, times: &[f64], x: &[f64], curves: &[Vec<f64>]) -> io::Result<()> {
    let mut out = io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "t,x,v")?;
    for (t, v) in times.iter().zip(curves) {
        for (xi, vi) in x.iter().zip(v) {
            writeln!(out, "{t:e},{xi:e},{vi:e}")?;
        }
    }
    out.flush()
}

/// Binary dump: three little-endian `u64` (dimension, cells per axis,
/// snapshot count), then `count` times and `count * M^d` values, all
/// little-endian `f64`.
pub fn write_trajectory_bin(path: &Path, traj: &Trajectory) -> io::Result<()> {
    let first = traj.initial();
    let mut out = io::BufWriter::new(fs::File::create(path)?);
    for v in [first.dim() as u64, first.resolution() as u64, traj.snapshots.len() as u64] {
        out.write_all(&v.to_le_bytes())?;
    }
    for t in &traj.times {
        out.write_all(&t.to_le_bytes())?;
    }
    for u in &traj.snapshots {
        for v in u.values() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()
}

/// Inverse of [`write_trajectory_bin`]: times and snapshots.
pub fn read_trajectory_bin(path: &Path) -> io::Result<(Vec<f64>, Vec<GridFunction>)> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let bad = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_string());
    if bytes.len() < 24 {
        return Err(bad("truncated header"));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[8 * i..8 * i + 8].try_into().expect("8 bytes"));
    let (dim, m, count) = (word(0) as usize, word(1) as usize, word(2) as usize);
    let cells = m.checked_pow(dim as u32).ok_or_else(|| bad("header overflows"))?;
    let expected = count
        .checked_mul(cells + 1)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(24))
        .ok_or_else(|| bad("header overflows"))?;
    if bytes.len() != expected {
        return Err(bad("payload length does not match header"));
    }
    let floats: Vec<f64> = bytes[24..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let times = floats[..count].to_vec();
    let snaps = floats[count..]
        .chunks_exact(cells.max(1))
        .map(|c| GridFunction::new(dim, m, c.to_vec()).map_err(|e| bad(&e.to_string())))
        .collect::<Result<_, _>>()?;
    Ok((times, snaps))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hashes `files` (paths relative to `dir`), sorted by path.
pub fn build_manifest(dir: &Path, files: &[PathBuf]) -> io::Result<Manifest> {
    let mut entries = Vec::with_capacity(files.len());
    for rel in files {
        let bytes = fs::read(dir.join(rel))?;
        entries.push(ManifestEntry {
            path: rel.to_string_lossy().replace('\\', "/"),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(&bytes),
        });
    }
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    entries.dedup_by(|a, b| a.path == b.path);
    Ok(Manifest { files: entries })
}

/// Recomputes every hash in `manifest` against the files under `dir`.
pub fn verify_manifest(dir: &Path, manifest: &Manifest) -> io::Result<Vec<String>> {
    let mut mismatched = Vec::new();
    for e in &manifest.files {
        match fs::read(dir.join(&e.path)) {
            Ok(bytes) if sha256_hex(&bytes) == e.sha256 => {}
            _ => mismatched.push(e.path.clone()),
        }
    }
    Ok(mismatched)
}
