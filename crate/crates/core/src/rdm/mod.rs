//! Reduced density operators `ρ^(m)(u, u') = ∫ dz Ψ(u, z) Ψ*(u', z)`,
//! discretised on Gauss–Hermite tensor grids.

mod basis;
mod gaussian;
mod grid;
mod kernel;

use serde::{Serialize, Serializer};

pub use basis::{hermite_basis_projection, BasisProjection, DEFAULT_BASIS_CAPTURE_TOL};
pub use gaussian::{gaussian_ground_kernel, GaussianKernel};
pub use grid::{build_grid, gauss_hermite, QuadratureGrid, MAX_NODES, MIN_NODES};
pub use kernel::{rdm_kernel, KernelEntries, KernelMatrix, MAX_KERNEL_DIM};

use crate::error::{Error, Result};
use crate::parallel::Parallelism;

/// Retained coordinates `m`, stored 0-based and strictly increasing.
/// Serialised 1-based, as users write them.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubsetSpec {
    kept: Vec<usize>,
    n: usize,
}

impl SubsetSpec {
    pub fn new(kept: Vec<usize>, n: usize) -> Result<Self> {
        if kept.is_empty() {
            return Err(Error::InvalidInput("subset is empty".into()));
        }
        if kept.len() >= n {
            return Err(Error::InvalidInput(format!(
                "subset keeps {} of {n} coordinates; at least one must be traced",
                kept.len()
            )));
        }
        if !kept.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput(format!("subset {kept:?} is not strictly increasing")));
        }
        if let Some(&bad) = kept.iter().find(|&&k| k >= n) {
            return Err(Error::InvalidInput(format!("index {} out of range 1..={n}", bad + 1)));
        }
        Ok(SubsetSpec { kept, n })
    }

    /// From 1-based indices.
    pub fn from_one_based(kept: &[usize], n: usize) -> Result<Self> {
        if kept.contains(&0) {
            return Err(Error::InvalidInput("subset indices are 1-based".into()));
        }
        SubsetSpec::new(kept.iter().map(|k| k - 1).collect(), n)
    }

    /// Every subset of size `m`, in lexicographic order.
    pub fn all_of_size(m: usize, n: usize) -> Result<Vec<SubsetSpec>> {
        if m == 0 || m >= n {
            return Err(Error::InvalidInput(format!("subset size {m} must lie in 1..{n}")));
        }
        let mut out = Vec::new();
        let mut idx: Vec<usize> = (0..m).collect();
        loop {
            out.push(SubsetSpec { kept: idx.clone(), n });
            let Some(i) = (0..m).rev().find(|&i| idx[i] < n - m + i) else { break };
            idx[i] += 1;
            for j in i + 1..m {
                idx[j] = idx[j - 1] + 1;
            }
        }
        Ok(out)
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn traced(&self) -> Vec<usize> {
        (0..self.n).filter(|i| !self.kept.contains(i)).collect()
    }

    pub fn m(&self) -> usize {
        self.kept.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.kept.iter().map(|k| k + 1).collect()
    }
}

impl Serialize for SubsetSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

/// Tunables of kernel assembly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdmOptions {
    /// Largest accepted `|trace - 1|`.
    pub quad_tol: f64,
    /// Largest accepted number of wavefunction evaluations `G^M · G^(N-M)`.
    pub budget: usize,
    pub parallelism: Parallelism,
}

impl Default for RdmOptions {
    fn default() -> Self {
        RdmOptions { quad_tol: 1e-8, budget: 1 << 26, parallelism: Parallelism::default() }
    }
}

/// Grid width for a set of models: the geometric mean of the smallest and
/// largest length among all of them. For a dual pair of an equivalence
/// normalised model this is 1.
pub fn auto_scale<'a>(lengths: impl IntoIterator<Item = &'a f64>) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for &l in lengths {
        lo = lo.min(l);
        hi = hi.max(l);
    }
    (lo * hi).sqrt()
}
