//! End-to-end checks of the length-scale duality and its corollaries.
//!
//! Every check builds two reduced density operators and compares what the
//! duality says must agree: sorted spectra, Hermite-basis coefficients up
//! to the Fourier phase, or entropies.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::hermitian_eigenvalues;
use crate::model::{Family, InteractionMatrix};
use crate::modes::{diagonalize, NormalModes};
use crate::rdm::{
    auto_scale, build_grid, hermite_basis_projection, rdm_kernel, QuadratureGrid, RdmOptions, SubsetSpec,
    DEFAULT_BASIS_CAPTURE_TOL,
};
use crate::spectra::{eigenvalues, renyi_entropy, von_neumann_entropy, Spectrum, SpectrumSource};
use crate::wavefunction::{StateSpec, StateTemplate};

/// Eigenvalues at or below this are left out of spectrum comparisons.
pub const COMPARISON_FLOOR: f64 = 1e-12;
pub const DEFAULT_GROUND_TOL: f64 = 1e-8;
pub const DEFAULT_EXCITED_TOL: f64 = 1e-7;

/// Tolerance for comparisons involving `template`.
pub fn default_tolerance(template: &StateTemplate) -> f64 {
    if template.terms.iter().all(|(_, nu)| nu.total() == 0) {
        DEFAULT_GROUND_TOL
    } else {
        DEFAULT_EXCITED_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridScale {
    /// Geometric mean of the extreme lengths of the models sharing the grid.
    Auto,
    Fixed(f64),
}

impl Serialize for GridScale {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            GridScale::Auto => s.serialize_str("auto"),
            GridScale::Fixed(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for GridScale {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) if x > 0.0 && x.is_finite() => Ok(GridScale::Fixed(x)),
            Raw::Num(x) => Err(serde::de::Error::custom(format!("grid scale must be > 0, got {x}"))),
            Raw::Str(s) if s == "auto" => Ok(GridScale::Auto),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("grid scale must be a number or \"auto\", got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    #[serde(default = "default_nodes", alias = "G")]
    pub nodes: usize,
    #[serde(default = "default_scale")]
    pub scale: GridScale,
}

fn default_nodes() -> usize {
    64
}

fn default_scale() -> GridScale {
    GridScale::Auto
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { nodes: default_nodes(), scale: default_scale() }
    }
}

impl GridConfig {
    pub fn new(nodes: usize) -> Self {
        GridConfig { nodes, scale: GridScale::Auto }
    }

    /// Builds the grid, resolving `Auto` from `lengths`.
    pub fn build<'a>(&self, lengths: impl IntoIterator<Item = &'a f64>) -> Result<QuadratureGrid> {
        let s = match self.scale {
            GridScale::Auto => auto_scale(lengths),
            GridScale::Fixed(s) => s,
        };
        build_grid(self.nodes, s)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DualityOptions {
    pub grid: GridConfig,
    pub rdm: RdmOptions,
}

impl DualityOptions {
    pub fn with_nodes(nodes: usize) -> Self {
        DualityOptions { grid: GridConfig::new(nodes), ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    Spectral,
    Fourier,
    Evenness,
    Homogeneity,
    Entropy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelDescriptor {
    #[serde(flatten)]
    pub family: Family,
    pub entries: Vec<Vec<f64>>,
    pub lengths: Vec<f64>,
}

impl ModelDescriptor {
    fn new(model: &InteractionMatrix, modes: &NormalModes) -> Self {
        ModelDescriptor { family: model.family().clone(), entries: model.to_rows(), lengths: modes.lengths.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityReport {
    pub context: Claim,
    pub label: String,
    pub tolerance: f64,
    pub max_abs_diff: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum_a: Option<Spectrum>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum_b: Option<Spectrum>,
    pub model_a: ModelDescriptor,
    pub model_b: ModelDescriptor,
    /// Rényi index of an entropy comparison; absent for von Neumann.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<[f64; 2]>,
    /// Set when a small-`q` tail bound exceeded its tolerance.
    pub flagged: bool,
}

impl DualityReport {
    fn new(context: Claim, label: String, tolerance: f64, max_abs_diff: f64, a: ModelDescriptor, b: ModelDescriptor) -> Self {
        DualityReport {
            context,
            label,
            tolerance,
            max_abs_diff,
            passed: max_abs_diff < tolerance,
            spectrum_a: None,
            spectrum_b: None,
            model_a: a,
            model_b: b,
            q: None,
            values: None,
            flagged: false,
        }
    }

    /// Drops the inline spectra.
    pub fn without_spectra(mut self) -> Self {
        self.spectrum_a = None;
        self.spectrum_b = None;
        self
    }
}

/// Max difference between two descending spectra over the eigenvalues above
/// [`COMPARISON_FLOOR`], the shorter list padded with zeros.
pub fn compare_sorted(a: &[f64], b: &[f64]) -> f64 {
    let keep = |v: &[f64]| -> Vec<f64> {
        let mut v: Vec<f64> = v.iter().copied().filter(|&x| x > COMPARISON_FLOOR).collect();
        v.sort_by(|x, y| y.total_cmp(x));
        v
    };
    let (a, b) = (keep(a), keep(b));
    (0..a.len().max(b.len()))
        .map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max)
}

struct Side {
    model: InteractionMatrix,
    modes: NormalModes,
    state: StateSpec,
}

impl Side {
    fn descriptor(&self) -> ModelDescriptor {
        ModelDescriptor::new(&self.model, &self.modes)
    }

    fn spectrum(&self, subset: &SubsetSpec, grid: &QuadratureGrid, rdm: &RdmOptions) -> Result<Spectrum> {
        let k = rdm_kernel(&self.state, subset, grid, rdm)?;
        let mut s = eigenvalues(&k, usize::MAX)?;
        s.source.model = Some(self.model.to_rows());
        Ok(s)
    }
}

/// Normalises both models to unit determinant and binds `template` to
/// each. Modes of `b` are matched to those of `a` by eigenvector, and `b`'s
/// coefficients carry the Fourier phase `(-i)^{|ν|}`, so `b`'s state is the
/// Fourier transform of `a`'s whenever `b` is the dual of `a`.
fn dual_pair(a: &InteractionMatrix, b: &InteractionMatrix, template: &StateTemplate) -> Result<(Side, Side)> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), got: b.n() });
    }
    let na = a.equivalence_normalize().into_model()?;
    let nb = b.equivalence_normalize().into_model()?;
    let ma = diagonalize(&na)?;
    let mb = diagonalize(&nb)?;
    let perm = ma.match_modes(&mb)?;
    let sa = template.bind(&ma)?;
    let sb = template.bind_remapped(&mb, &perm, true)?;
    Ok((Side { model: na, modes: ma, state: sa }, Side { model: nb, modes: mb, state: sb }))
}

fn pair_grid(opts: &DualityOptions, a: &Side, b: &Side) -> Result<QuadratureGrid> {
    opts.grid.build(a.modes.lengths.iter().chain(&b.modes.lengths))
}

#[allow(clippy::too_many_arguments)]
fn compare_pair(
    context: Claim,
    label: String,
    a: &Side,
    b: &Side,
    grids: (&QuadratureGrid, &QuadratureGrid),
    subset: &SubsetSpec,
    opts: &DualityOptions,
    tol: f64,
) -> Result<DualityReport> {
    let spec_a = a.spectrum(subset, grids.0, &opts.rdm)?;
    let spec_b = b.spectrum(subset, grids.1, &opts.rdm)?;
    let diff = compare_sorted(&spec_a.values, &spec_b.values);
    let mut r = DualityReport::new(context, label, tol, diff, a.descriptor(), b.descriptor());
    r.spectrum_a = Some(spec_a);
    r.spectrum_b = Some(spec_b);
    Ok(r)
}

/// Spectra of the `m`-RDO of `template` in the model `D` and in `D⁻¹`.
pub fn verify_spectrum_duality(
    d: &InteractionMatrix,
    template: &StateTemplate,
    subset: &SubsetSpec,
    opts: &DualityOptions,
    tol: f64,
) -> Result<DualityReport> {
    verify_spectrum_pair(d, &d.dual()?, template, subset, opts, tol)
}

/// As [`verify_spectrum_duality`] with an explicit second model, which the
/// duality predicts to be equivalent to `D⁻¹`.
pub fn verify_spectrum_pair(
    a: &InteractionMatrix,
    b: &InteractionMatrix,
    template: &StateTemplate,
    subset: &SubsetSpec,
    opts: &DualityOptions,
    tol: f64,
) -> Result<DualityReport> {
    let (sa, sb) = dual_pair(a, b, template)?;
    let grid = pair_grid(opts, &sa, &sb)?;
    let label = format!("spectral m={:?}", subset.one_based());
    compare_pair(Claim::Spectral, label, &sa, &sb, (&grid, &grid), subset, opts, tol)
}

/// Hermite-basis coefficients at `ell_ref = 1` of the original RDO, rotated
/// by the Fourier phase `diag((-i)^{|n|})`, against those of the dual RDO.
pub fn verify_fourier_conjugation(
    d: &InteractionMatrix,
    template: &StateTemplate,
    subset: &SubsetSpec,
    basis_size: usize,
    opts: &DualityOptions,
    tol: f64,
) -> Result<DualityReport> {
    let (sa, sb) = dual_pair(d, &d.dual()?, template)?;
    let grid = pair_grid(opts, &sa, &sb)?;
    let ka = rdm_kernel(&sa.state, subset, &grid, &opts.rdm)?;
    let kb = rdm_kernel(&sb.state, subset, &grid, &opts.rdm)?;
    let ca = hermite_basis_projection(&ka, &grid, basis_size, 1.0, DEFAULT_BASIS_CAPTURE_TOL)?;
    let cb = hermite_basis_projection(&kb, &grid, basis_size, 1.0, DEFAULT_BASIS_CAPTURE_TOL)?;
    for c in [&ca, &cb] {
        if !c.sufficient {
            return Err(Error::BasisTooSmall { capture: c.capture });
        }
    }
    let dim = ca.coefficients.nrows();
    let phase: Vec<Complex64> = (0..dim).map(|i| crate::wavefunction::minus_i_pow(ca.degree(i))).collect();
    let rotated = DMatrix::from_fn(dim, dim, |i, j| phase[i] * ca.coefficients[(i, j)] * phase[j].conj());
    let diff = (&rotated - &cb.coefficients).iter().fold(0.0_f64, |m, z| m.max(z.norm()));

    let source = |s: &Side| SpectrumSource {
        model: Some(s.model.to_rows()),
        kept: subset.one_based(),
        nodes_per_axis: Some(grid.nodes_per_axis),
        scale: Some(grid.scale),
        method: format!("hermite_basis B={basis_size}"),
        ..Default::default()
    };
    let spec = |c: &crate::rdm::BasisProjection, s: &Side| -> Result<Spectrum> {
        let ev = hermitian_eigenvalues(&c.coefficients)?;
        Spectrum::from_values(&ev, c.coefficients.trace().re, dim, usize::MAX, source(s))
    };
    let label = format!("fourier m={:?} B={basis_size}", subset.one_based());
    let mut r = DualityReport::new(Claim::Fourier, label, tol, diff, sa.descriptor(), sb.descriptor());
    r.spectrum_a = Some(spec(&ca, &sa)?);
    r.spectrum_b = Some(spec(&cb, &sb)?);
    Ok(r)
}

/// A model family parameterised by δ-coordinates, for which flipping the
/// sign of δ gives a model equivalent to the dual.
#[derive(Debug, Clone, PartialEq)]
pub enum EvennessFamily {
    /// `identical_1d(1, r, n)` with `r = (e^{4δ} - 1)/n`.
    Identical { n: usize },
    /// `Rᵀ diag(d) R` with `d_μ = exp(4 Σ_{j<μ} δ_j)`; `R` orthogonal
    /// (rows are modes), identity when absent.
    Rotated { rotation: Option<DMatrix<f64>> },
}

impl EvennessFamily {
    /// Model at the δ-vector `delta`.
    pub fn model(&self, delta: &[f64]) -> Result<InteractionMatrix> {
        match self {
            EvennessFamily::Identical { n } => {
                let [d] = delta else {
                    return Err(Error::InvalidInput(format!("identical family takes one δ, got {}", delta.len())));
                };
                InteractionMatrix::identical_1d(1.0, ((4.0 * d).exp() - 1.0) / *n as f64, *n)
            }
            EvennessFamily::Rotated { rotation } => {
                let n = delta.len() + 1;
                let mut diag = vec![1.0; n];
                for mu in 1..n {
                    diag[mu] = diag[mu - 1] * (4.0 * delta[mu - 1]).exp();
                }
                let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag));
                let r = match rotation {
                    None => DMatrix::identity(n, n),
                    Some(r) => {
                        if r.nrows() != n || r.ncols() != n {
                            return Err(Error::DimensionMismatch { expected: n, got: r.nrows() });
                        }
                        let err = (r * r.transpose() - DMatrix::<f64>::identity(n, n)).amax();
                        if err > 1e-12 {
                            return Err(Error::InvalidInput(format!("rotation is not orthogonal (error {err:e})")));
                        }
                        r.clone()
                    }
                };
                let mut m = r.transpose() * d * r;
                crate::linalg::symmetrize(&mut m);
                InteractionMatrix::generic(m)
            }
        }
    }
}

/// Spectra at `+δ` and `-δ` for every δ in `deltas`.
pub fn verify_evenness(
    family: &EvennessFamily,
    deltas: &[Vec<f64>],
    template: &StateTemplate,
    subset: &SubsetSpec,
    opts: &DualityOptions,
    tol: f64,
) -> Result<Vec<DualityReport>> {
    deltas
        .iter()
        .map(|delta| {
            let neg: Vec<f64> = delta.iter().map(|d| -d).collect();
            let (sa, sb) = dual_pair(&family.model(delta)?, &family.model(&neg)?, template)?;
            let grid = pair_grid(opts, &sa, &sb)?;
            let label = format!("evenness δ={delta:?} m={:?}", subset.one_based());
            compare_pair(Claim::Evenness, label, &sa, &sb, (&grid, &grid), subset, opts, tol)
        })
        .collect()
}

/// Spectra of `D` and `c·D`, the second grid co-scaled by `c^(-1/4)`.
pub fn verify_homogeneity(
    d: &InteractionMatrix,
    c: f64,
    template: &StateTemplate,
    subset: &SubsetSpec,
    opts: &DualityOptions,
    tol: f64,
) -> Result<DualityReport> {
    let dc = d.scaled(c)?;
    let ma = diagonalize(d)?;
    let mb = diagonalize(&dc)?;
    let sa = Side { state: template.bind(&ma)?, model: d.clone(), modes: ma };
    let sb = Side { state: template.bind(&mb)?, model: dc, modes: mb };
    let ga = opts.grid.build(&sa.modes.lengths)?;
    let gb = build_grid(ga.nodes_per_axis, ga.scale * c.powf(-0.25))?;
    let label = format!("homogeneity c={c} m={:?}", subset.one_based());
    compare_pair(Claim::Homogeneity, label, &sa, &sb, (&ga, &gb), subset, opts, tol)
}

/// Rényi entropies for each `q` and the von Neumann entropy in `D` and
/// `D⁻¹`.
pub fn verify_entropy_duality(
    d: &InteractionMatrix,
    qs: &[f64],
    template: &StateTemplate,
    subset: &SubsetSpec,
    opts: &DualityOptions,
    tol: f64,
) -> Result<Vec<DualityReport>> {
    verify_entropy_pair(d, &d.dual()?, qs, template, subset, opts, tol)
}

/// As [`verify_entropy_duality`] with an explicit second model.
pub fn verify_entropy_pair(
    a: &InteractionMatrix,
    b: &InteractionMatrix,
    qs: &[f64],
    template: &StateTemplate,
    subset: &SubsetSpec,
    opts: &DualityOptions,
    tol: f64,
) -> Result<Vec<DualityReport>> {
    let (sa, sb) = dual_pair(a, b, template)?;
    let grid = pair_grid(opts, &sa, &sb)?;
    let spec_a = sa.spectrum(subset, &grid, &opts.rdm)?;
    let spec_b = sb.spectrum(subset, &grid, &opts.rdm)?;
    let mut out = Vec::with_capacity(qs.len() + 1);
    for &q in qs {
        let ea = renyi_entropy(&spec_a, q)?;
        let eb = renyi_entropy(&spec_b, q)?;
        let label = format!("renyi q={q} m={:?}", subset.one_based());
        let mut r = DualityReport::new(Claim::Entropy, label, tol, (ea.value - eb.value).abs(), sa.descriptor(), sb.descriptor());
        r.q = Some(q);
        r.values = Some([ea.value, eb.value]);
        r.flagged = ea.tail_flagged || eb.tail_flagged;
        out.push(r);
    }
    let (va, vb) = (von_neumann_entropy(&spec_a), von_neumann_entropy(&spec_b));
    let label = format!("von_neumann m={:?}", subset.one_based());
    let mut r = DualityReport::new(Claim::Entropy, label, tol, (va - vb).abs(), sa.descriptor(), sb.descriptor());
    r.values = Some([va, vb]);
    r.spectrum_a = Some(spec_a);
    r.spectrum_b = Some(spec_b);
    out.push(r);
    Ok(out)
}
