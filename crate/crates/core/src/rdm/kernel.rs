use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::{QuadratureGrid, RdmOptions, SubsetSpec};
use crate::error::{Error, Result};
use crate::linalg::hermitian_eigenvalues;
use crate::parallel::{for_each_chunk_mut, Parallelism};
use crate::wavefunction::{Amplitude, AmplitudeEval, StateSpec};

/// Largest kernel dimension `G^M`.
pub const MAX_KERNEL_DIM: usize = 4096;
/// Entries of the state matrix `A` held in memory per streamed block.
const BLOCK_ENTRIES: usize = 1 << 19;
/// Rows of `K̂` per parallel task. Fixed, so the reduction order never
/// depends on the number of threads.
const ROW_BLOCK: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub enum KernelEntries {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

impl KernelEntries {
    fn dim(&self) -> usize {
        match self {
            KernelEntries::Real(m) => m.nrows(),
            KernelEntries::Complex(m) => m.nrows(),
        }
    }

    fn eigenvalues(&self) -> Result<Vec<f64>> {
        match self {
            KernelEntries::Real(m) => hermitian_eigenvalues(m),
            KernelEntries::Complex(m) => hermitian_eigenvalues(m),
        }
    }
}

/// Nyström matrix `K̂_ab = √w_a ρ(x_a, x_b) √w_b` of a reduced density
/// operator on the tensor grid of the kept coordinates. Point `a` enumerates
/// the grid lexicographically, first kept coordinate slowest.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub dim: usize,
    pub subset: SubsetSpec,
    pub grid: QuadratureGrid,
    pub trace_estimate: f64,
    entries: KernelEntries,
    /// `A†A` when it is smaller than `K̂ = AA†`; both share their nonzero
    /// eigenvalues.
    gram: Option<KernelEntries>,
}

#[derive(Serialize)]
struct DumpHeader {
    dim: usize,
    #[serde(rename = "G")]
    g: usize,
    #[serde(rename = "M")]
    m: usize,
    scale: f64,
    complex: bool,
}

impl KernelMatrix {
    pub(crate) fn from_entries(entries: KernelEntries, subset: SubsetSpec, grid: QuadratureGrid) -> Self {
        let trace_estimate = match &entries {
            KernelEntries::Real(m) => m.trace(),
            KernelEntries::Complex(m) => m.trace().re,
        };
        KernelMatrix { dim: entries.dim(), subset, grid, trace_estimate, entries, gram: None }
    }

    pub fn entries(&self) -> &KernelEntries {
        &self.entries
    }

    pub fn is_complex(&self) -> bool {
        matches!(self.entries, KernelEntries::Complex(_))
    }

    pub fn m(&self) -> usize {
        self.subset.m()
    }

    pub fn entry(&self, a: usize, b: usize) -> Complex64 {
        match &self.entries {
            KernelEntries::Real(m) => Complex64::new(m[(a, b)], 0.0),
            KernelEntries::Complex(m) => m[(a, b)],
        }
    }

    pub fn to_complex(&self) -> DMatrix<Complex64> {
        match &self.entries {
            KernelEntries::Real(m) => m.map(|x| Complex64::new(x, 0.0)),
            KernelEntries::Complex(m) => m.clone(),
        }
    }

    /// `max |K̂ - K̂†|`
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0_f64;
        for a in 0..self.dim {
            for b in 0..a {
                worst = worst.max((self.entry(a, b) - self.entry(b, a).conj()).norm());
            }
        }
        worst
    }

    /// Nonzero part of the spectrum, descending. Has `min(dim, Q)` entries,
    /// with `Q` the number of traced grid points; the rest are exactly zero.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.gram.as_ref().unwrap_or(&self.entries).eigenvalues()
    }

    /// Writes a one-line JSON header followed by the entries as row-major
    /// little-endian `f64` (real and imaginary parts interleaved when
    /// complex).
    pub fn dump(&self, mut w: impl Write) -> std::io::Result<()> {
        let header = DumpHeader {
            dim: self.dim,
            g: self.grid.nodes_per_axis,
            m: self.m(),
            scale: self.grid.scale,
            complex: self.is_complex(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        let mut buf = Vec::with_capacity(self.dim * 16);
        for a in 0..self.dim {
            buf.clear();
            for b in 0..self.dim {
                let z = self.entry(a, b);
                buf.extend_from_slice(&z.re.to_le_bytes());
                if self.is_complex() {
                    buf.extend_from_slice(&z.im.to_le_bytes());
                }
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }
}

/// Assembles `K̂ = A A†` with `A_{a,q} = √W_a Ψ(u_a, z_q) √v_q` over the
/// kept grid `u_a` and the traced grid `z_q`, streaming over blocks of
/// traced points. The product form makes `K̂` positive semi-definite up to
/// rounding.
pub fn rdm_kernel(
    state: &StateSpec,
    subset: &SubsetSpec,
    grid: &QuadratureGrid,
    opts: &RdmOptions,
) -> Result<KernelMatrix> {
    let n = state.n();
    if subset.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: subset.n() });
    }
    let g = grid.len();
    let m = subset.m();
    let dim = g
        .checked_pow(m as u32)
        .filter(|&d| d <= MAX_KERNEL_DIM)
        .ok_or_else(|| Error::BudgetExceeded(format!("kernel dimension {g}^{m} exceeds {MAX_KERNEL_DIM}; lower G")))?;
    let q_total = g
        .checked_pow((n - m) as u32)
        .filter(|&q| q.checked_mul(dim).is_some_and(|w| w <= opts.budget))
        .ok_or_else(|| {
            Error::BudgetExceeded(format!(
                "{g}^{n} wavefunction evaluations exceed the budget of {}; lower G",
                opts.budget
            ))
        })?;

    let state = strip_global_phase(state)?;
    let layout = Layout::new(&state, subset, grid);
    let use_gram = dim > q_total;
    let block = if use_gram { q_total } else { (BLOCK_ENTRIES / dim).clamp(1, q_total) };
    let par = opts.parallelism;

    let (entries, gram) = if state.is_real() {
        let eval = AmplitudeEval::<f64>::new(&state);
        let mut k = vec![0.0; dim * dim];
        let mut a = vec![0.0; dim * block];
        let mut gram = None;
        for q0 in (0..q_total).step_by(block) {
            let qc = block.min(q_total - q0);
            layout.fill(par, &eval, q0, &mut a[..dim * qc]);
            add_outer(par, &mut k, &a, &a, 1.0, dim, qc);
            if use_gram {
                gram = Some(KernelEntries::Real(symmetric_from_rows(inner(&a, &a, dim, qc), qc)));
            }
        }
        (KernelEntries::Real(symmetric_from_rows(k, dim)), gram)
    } else {
        let eval = AmplitudeEval::<Complex64>::new(&state);
        let mut k_re = vec![0.0; dim * dim];
        let mut k_im = vec![0.0; dim * dim];
        let mut a = vec![Complex64::new(0.0, 0.0); dim * block];
        let mut gram = None;
        for q0 in (0..q_total).step_by(block) {
            let qc = block.min(q_total - q0);
            layout.fill(par, &eval, q0, &mut a[..dim * qc]);
            let ar: Vec<f64> = a[..dim * qc].iter().map(|z| z.re).collect();
            let ai: Vec<f64> = a[..dim * qc].iter().map(|z| z.im).collect();
            add_outer(par, &mut k_re, &ar, &ar, 1.0, dim, qc);
            add_outer(par, &mut k_re, &ai, &ai, 1.0, dim, qc);
            add_outer(par, &mut k_im, &ai, &ar, 1.0, dim, qc);
            add_outer(par, &mut k_im, &ar, &ai, -1.0, dim, qc);
            if use_gram {
                // A†A = (ArᵀAr + AiᵀAi) + i(ArᵀAi - AiᵀAr)
                let mut g_re = inner(&ar, &ar, dim, qc);
                let mut g_im = inner(&ar, &ai, dim, qc);
                for (x, y) in g_re.iter_mut().zip(inner(&ai, &ai, dim, qc)) {
                    *x += y;
                }
                for (x, y) in g_im.iter_mut().zip(inner(&ai, &ar, dim, qc)) {
                    *x -= y;
                }
                gram = Some(KernelEntries::Complex(hermitian_from_rows(&g_re, &g_im, qc)));
            }
        }
        (KernelEntries::Complex(hermitian_from_rows(&k_re, &k_im, dim)), gram)
    };

    let mut kernel = KernelMatrix::from_entries(entries, subset.clone(), grid.clone());
    kernel.gram = gram;
    let deficit = kernel.trace_estimate - 1.0;
    if !(deficit.abs() <= opts.quad_tol) {
        return Err(Error::UnresolvedGrid { deficit });
    }
    Ok(kernel)
}

/// `ρ` is unchanged by a global phase; removing it lets single-term states
/// with complex coefficients take the real path.
fn strip_global_phase(state: &StateSpec) -> Result<StateSpec> {
    let lead = state
        .terms()
        .iter()
        .map(|(c, _)| *c)
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .expect("states have at least one term");
    let unit = (lead / lead.norm()).conj();
    let terms = state
        .terms()
        .iter()
        .map(|(c, nu)| {
            let mut c = c * unit;
            if c.im.abs() <= 1e-15 * c.norm() {
                c.im = 0.0;
            }
            (c, nu.clone())
        })
        .collect();
    StateSpec::new(terms, state.modes().clone())
}

/// Mode-space coordinates of the kept and traced grid points.
struct Layout {
    n: usize,
    dim: usize,
    g: usize,
    traced: Vec<usize>,
    /// `R_k u_a` for every kept point, `n` values each.
    yk: Vec<f64>,
    sqrt_wk: Vec<f64>,
    /// Columns of `R` belonging to traced coordinates, `n` values each.
    rt: Vec<Vec<f64>>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Layout {
    fn new(state: &StateSpec, subset: &SubsetSpec, grid: &QuadratureGrid) -> Self {
        let n = state.n();
        let r = &state.modes().rotation;
        let g = grid.len();
        let m = subset.m();
        let dim = g.pow(m as u32);
        let mut yk = vec![0.0; dim * n];
        let mut sqrt_wk = vec![0.0; dim];
        for a in 0..dim {
            let mut rem = a;
            let mut w = 1.0;
            for k in (0..m).rev() {
                let i = rem % g;
                rem /= g;
                let col = subset.kept()[k];
                w *= grid.weights[i];
                for mu in 0..n {
                    yk[a * n + mu] += r[(mu, col)] * grid.nodes[i];
                }
            }
            sqrt_wk[a] = w.sqrt();
        }
        let traced = subset.traced();
        let rt = traced.iter().map(|&c| (0..n).map(|mu| r[(mu, c)]).collect()).collect();
        Layout {
            n,
            dim,
            g,
            traced,
            yk,
            sqrt_wk,
            rt,
            nodes: grid.nodes.clone(),
            weights: grid.weights.clone(),
        }
    }

    /// Fills column-major `out` (`dim` rows) with the state matrix for the
    /// traced points starting at `q0`.
    fn fill<T: Amplitude>(&self, par: Parallelism, eval: &AmplitudeEval<T>, q0: usize, out: &mut [T]) {
        let (n, dim, g, t) = (self.n, self.dim, self.g, self.traced.len());
        for_each_chunk_mut(par, out, dim, |j, col| {
            let mut rem = q0 + j;
            let mut yt = vec![0.0; n];
            let mut v = 1.0;
            for k in (0..t).rev() {
                let i = rem % g;
                rem /= g;
                v *= self.weights[i];
                for (y, r) in yt.iter_mut().zip(&self.rt[k]) {
                    *y += r * self.nodes[i];
                }
            }
            let sv = v.sqrt();
            let mut scratch = eval.scratch();
            let mut y = vec![0.0; n];
            for (a, slot) in col.iter_mut().enumerate() {
                for mu in 0..n {
                    y[mu] = self.yk[a * n + mu] + yt[mu];
                }
                *slot = eval.eval(&y, &mut scratch).scale(self.sqrt_wk[a] * sv);
            }
        });
    }
}

/// `c += alpha · x yᵀ` for column-major `x`, `y` (`dim × k`) and row-major
/// `c` (`dim × dim`), parallel over fixed row blocks of `c`.
fn add_outer(par: Parallelism, c: &mut [f64], x: &[f64], y: &[f64], alpha: f64, dim: usize, k: usize) {
    for_each_chunk_mut(par, c, ROW_BLOCK * dim, |blk, rows| {
        let r0 = blk * ROW_BLOCK;
        let nr = rows.len() / dim;
        // SAFETY: x holds dim·k entries and rows r0..r0+nr < dim; y likewise;
        // `rows` is an exclusive nr × dim row-major block.
        unsafe {
            matrixmultiply::dgemm(
                nr,
                k,
                dim,
                alpha,
                x.as_ptr().add(r0),
                1,
                dim as isize,
                y.as_ptr(),
                dim as isize,
                1,
                1.0,
                rows.as_mut_ptr(),
                dim as isize,
                1,
            );
        }
    });
}

/// Row-major `xᵀ y` (`k × k`) for column-major `x`, `y` (`dim × k`).
fn inner(x: &[f64], y: &[f64], dim: usize, k: usize) -> Vec<f64> {
    let mut c = vec![0.0; k * k];
    // SAFETY: x and y hold dim·k entries; c holds k·k.
    unsafe {
        matrixmultiply::dgemm(
            k,
            dim,
            k,
            1.0,
            x.as_ptr(),
            dim as isize,
            1,
            y.as_ptr(),
            1,
            dim as isize,
            0.0,
            c.as_mut_ptr(),
            k as isize,
            1,
        );
    }
    c
}

fn symmetric_from_rows(v: Vec<f64>, dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::from_vec(dim, dim, v);
    crate::linalg::symmetrize(&mut m);
    m
}

fn hermitian_from_rows(re: &[f64], im: &[f64], dim: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(dim, dim, |i, j| {
        let (a, b) = (i * dim + j, j * dim + i);
        Complex64::new(0.5 * (re[a] + re[b]), 0.5 * (im[a] - im[b]))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InteractionMatrix;
    use crate::modes::diagonalize;
    use crate::rdm::build_grid;
    use crate::wavefunction::StateTemplate;

    fn ground(rows: &[Vec<f64>]) -> StateSpec {
        StateSpec::ground(&diagonalize(&InteractionMatrix::from_rows(rows).unwrap()).unwrap())
    }

    #[test]
    fn product_state_is_rank_one() {
        let s = ground(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let grid = build_grid(32, 1.0).unwrap();
        let k = rdm_kernel(&s, &SubsetSpec::new(vec![0], 2).unwrap(), &grid, &RdmOptions::default()).unwrap();
        assert!((k.trace_estimate - 1.0).abs() < 1e-10);
        let ev = k.eigenvalues().unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-10);
        assert!(ev[1].abs() < 1e-12);
    }

    #[test]
    fn kernel_is_hermitian_and_traced() {
        let s = ground(&[vec![1.5, -0.5], vec![-0.5, 1.5]]);
        let grid = build_grid(64, 1.0).unwrap();
        let k = rdm_kernel(&s, &SubsetSpec::new(vec![0], 2).unwrap(), &grid, &RdmOptions::default()).unwrap();
        assert!((k.trace_estimate - 1.0).abs() < 1e-9);
        assert!(k.hermiticity_error() < 1e-12);
    }

    #[test]
    fn complex_superposition_is_hermitian_and_psd() {
        let d = InteractionMatrix::from_rows(&[vec![1.2, 0.3, 0.0], vec![0.3, 1.0, 0.2], vec![0.0, 0.2, 0.8]]).unwrap();
        let modes = diagonalize(&d).unwrap();
        let t = StateTemplate::normalized(vec![
            (Complex64::new(1.0, 0.0), crate::wavefunction::ModeOccupation(vec![1, 0, 0])),
            (Complex64::new(0.0, 1.0), crate::wavefunction::ModeOccupation(vec![0, 1, 1])),
        ])
        .unwrap();
        let s = t.bind(&modes).unwrap();
        let grid = build_grid(32, 1.0).unwrap();
        let k = rdm_kernel(&s, &SubsetSpec::new(vec![1], 3).unwrap(), &grid, &RdmOptions::default()).unwrap();
        assert!(k.is_complex());
        assert!(k.hermiticity_error() < 1e-12);
        assert!(k.eigenvalues().unwrap().iter().all(|&l| l > -1e-12));
    }

    #[test]
    fn global_phase_takes_real_path() {
        let modes = diagonalize(&InteractionMatrix::from_rows(&[vec![1.0, 0.2], vec![0.2, 1.0]]).unwrap()).unwrap();
        let s = StateSpec::new(
            vec![(Complex64::new(0.0, -1.0), crate::wavefunction::ModeOccupation(vec![1, 0]))],
            modes,
        )
        .unwrap();
        let grid = build_grid(32, 1.0).unwrap();
        let k = rdm_kernel(&s, &SubsetSpec::new(vec![0], 2).unwrap(), &grid, &RdmOptions::default()).unwrap();
        assert!(!k.is_complex());
    }

    #[test]
    fn gram_path_matches_direct_eigenvalues() {
        let s = ground(&[vec![1.0, 0.3, 0.1], vec![0.3, 1.0, 0.3], vec![0.1, 0.3, 1.0]]);
        let grid = build_grid(16, 1.0).unwrap();
        let k = rdm_kernel(&s, &SubsetSpec::new(vec![0, 1], 3).unwrap(), &grid, &RdmOptions::default()).unwrap();
        assert!(k.gram.is_some());
        let gram = k.eigenvalues().unwrap();
        let direct = k.entries.eigenvalues().unwrap();
        assert_eq!(gram.len(), 16);
        for (a, b) in gram.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!(direct[16..].iter().all(|x| x.abs() < 1e-13));
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let s = ground(&[vec![1.0, 0.4, 0.0], vec![0.4, 1.0, 0.4], vec![0.0, 0.4, 1.0]]);
        let grid = build_grid(24, 1.0).unwrap();
        let sub = SubsetSpec::new(vec![1], 3).unwrap();
        let seq = RdmOptions { parallelism: Parallelism::Sequential, ..Default::default() };
        let par = RdmOptions { parallelism: Parallelism::Rayon, ..Default::default() };
        let a = rdm_kernel(&s, &sub, &grid, &seq).unwrap();
        let b = rdm_kernel(&s, &sub, &grid, &par).unwrap();
        assert_eq!(a.entries, b.entries);
    }

    #[test]
    fn budget_and_dimension_caps() {
        let s = ground(&[vec![1.0, 0.1, 0.0], vec![0.1, 1.0, 0.1], vec![0.0, 0.1, 1.0]]);
        let grid = build_grid(128, 1.0).unwrap();
        let sub = SubsetSpec::new(vec![0, 1], 3).unwrap();
        assert!(matches!(rdm_kernel(&s, &sub, &grid, &RdmOptions::default()), Err(Error::BudgetExceeded(_))));
        let tight = RdmOptions { budget: 1000, ..Default::default() };
        let small = build_grid(16, 1.0).unwrap();
        let sub1 = SubsetSpec::new(vec![0], 3).unwrap();
        assert!(matches!(rdm_kernel(&s, &sub1, &small, &tight), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn coarse_grid_is_reported_unresolved() {
        let s = ground(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let grid = build_grid(8, 6.0).unwrap();
        let r = rdm_kernel(&s, &SubsetSpec::new(vec![0], 2).unwrap(), &grid, &RdmOptions::default());
        assert!(matches!(r, Err(Error::UnresolvedGrid { .. })));
    }

    #[test]
    fn dump_layout() {
        let s = ground(&[vec![1.0, 0.2], vec![0.2, 1.0]]);
        let grid = build_grid(8, 1.0).unwrap();
        let k = rdm_kernel(&s, &SubsetSpec::new(vec![0], 2).unwrap(), &grid, &RdmOptions { quad_tol: 1e-3, ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        k.dump(&mut buf).unwrap();
        let nl = buf.iter().position(|&b| b == b'\n').unwrap();
        let header: serde_json::Value = serde_json::from_slice(&buf[..nl]).unwrap();
        assert_eq!(header["dim"], 8);
        assert_eq!(header["G"], 8);
        assert_eq!(buf.len() - nl - 1, 64 * 8);
        let first = f64::from_le_bytes(buf[nl + 1..nl + 9].try_into().unwrap());
        assert_eq!(first, k.entry(0, 0).re);
    }
}
