//! On-disk cache of numerical spectra keyed by a hash of the potential and cutoff.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{diagonalize_below, SpectralBasis};
use crate::config::Axis;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::potentials::{AxisPotential, Grid};

const MAGIC: &[u8; 8] = b"TEBASIS1";

#[derive(Debug, Clone)]
pub struct BasisCache {
    dir: PathBuf,
}

impl BasisCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<BasisCache> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(BasisCache { dir })
    }

    pub fn key(axis: &AxisPotential, cutoff: Option<f64>) -> String {
        let mut h = Sha256::new();
        h.update(MAGIC);
        h.update([axis_tag(axis.axis)]);
        h.update(axis.grid.start.to_le_bytes());
        h.update(axis.grid.step.to_le_bytes());
        h.update((axis.grid.len as u64).to_le_bytes());
        h.update(axis.kinetic.to_le_bytes());
        match cutoff {
            Some(c) => {
                h.update([1]);
                h.update(c.to_le_bytes());
            }
            None => h.update([0]),
        }
        for v in &axis.values {
            h.update(v.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.basis"))
    }

    /// Cached spectrum of `axis`, diagonalizing and storing it on a miss.
    pub fn diagonalize(&self, axis: &AxisPotential, cutoff: Option<f64>) -> Result<SpectralBasis> {
        let path = self.path_for(&Self::key(axis, cutoff));
        if let Ok(bytes) = std::fs::read(&path) {
            if let Some(mut basis) = decode(&bytes) {
                basis.potential_minimum = axis.minimum();
                log::debug!("spectrum cache hit {}", path.display());
                return Ok(basis);
            }
            log::warn!("ignoring unreadable cache entry {}", path.display());
        }
        let basis = diagonalize_below(axis, cutoff)?;
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, encode(&basis)).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        Ok(basis)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

fn axis_tag(a: Axis) -> u8 {
    match a {
        Axis::Horizontal => 0,
        Axis::Vertical => 1,
    }
}

fn encode(b: &SpectralBasis) -> Vec<u8> {
    let grid = b.grid.expect("numerical basis has a grid");
    let psi = b.wavefunctions.as_ref().expect("numerical basis has samples");
    let mut out = Vec::with_capacity(64 + 8 * (b.n_states() + psi.as_slice().len()));
    out.extend_from_slice(MAGIC);
    out.push(axis_tag(b.axis));
    out.extend_from_slice(&(grid.len as u64).to_le_bytes());
    out.extend_from_slice(&grid.start.to_le_bytes());
    out.extend_from_slice(&grid.step.to_le_bytes());
    out.extend_from_slice(&(b.n_states() as u64).to_le_bytes());
    out.extend_from_slice(&b.cutoff.to_le_bytes());
    for e in &b.energies {
        out.extend_from_slice(&e.to_le_bytes());
    }
    for x in psi.as_slice() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

fn decode(bytes: &[u8]) -> Option<SpectralBasis> {
    let mut pos = 0;
    let mut take = |n: usize| -> Option<&[u8]> {
        let s = bytes.get(pos..pos + n)?;
        pos += n;
        Some(s)
    };
    if take(8)? != MAGIC {
        return None;
    }
    let axis = match take(1)?[0] {
        0 => Axis::Horizontal,
        1 => Axis::Vertical,
        _ => return None,
    };
    let u = |s: &[u8]| u64::from_le_bytes(s.try_into().unwrap());
    let f = |s: &[u8]| f64::from_le_bytes(s.try_into().unwrap());
    let len = u(take(8)?) as usize;
    let start = f(take(8)?);
    let step = f(take(8)?);
    let n = u(take(8)?) as usize;
    let cutoff = f(take(8)?);
    let energies: Vec<f64> = take(8 * n)?.chunks_exact(8).map(f).collect();
    let data: Vec<f64> = take(8 * n * len)?.chunks_exact(8).map(f).collect();
    if take(1).is_some() {
        return None;
    }
    Some(SpectralBasis {
        axis,
        energies,
        wavefunctions: Some(Mat::from_col_major(len, n, data)),
        grid: Some(Grid { start, step, len }),
        harmonic: None,
        cutoff,
        potential_minimum: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_lookup_is_served_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let cache = BasisCache::new(dir.path()).unwrap();
        let grid = Grid::spanning(-2.5, 2.5, 96);
        let v = AxisPotential::gaussian(Axis::Horizontal, grid, 1.0, 0.0, 1e-3);
        let first = cache.diagonalize(&v, None).unwrap();
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        let second = cache.diagonalize(&v, None).unwrap();
        assert_eq!(first, second);
        let other = AxisPotential::gaussian(Axis::Horizontal, grid, 1.01, 0.0, 1e-3);
        assert_ne!(BasisCache::key(&v, None), BasisCache::key(&other, None));
    }
}
