//! Occupation spectra of reduced density operators and their entropies.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::{map_ordered, Parallelism};
use crate::rdm::KernelMatrix;

/// Eigenvalues below this are dropped from reports (but still counted in
/// the trace accounting).
pub const REPORT_FLOOR: f64 = 1e-14;
/// Most negative eigenvalue tolerated before clamping to zero.
pub const NEGATIVITY_FLOOR: f64 = -1e-10;
/// Largest tail contribution a Rényi entropy with `q < 1` may carry
/// unflagged.
pub const TAIL_TOL: f64 = 1e-10;

/// Where a spectrum came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSource {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<serde_json::Value>,
    /// Kept coordinates, 1-based.
    pub kept: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes_per_axis: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    pub method: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Descending, non-negative.
    #[serde(rename = "lambda")]
    pub values: Vec<f64>,
    /// `trace_estimate - Σ values`
    pub trace_deficit: f64,
    pub trace_estimate: f64,
    /// Magnitude of the most negative raw eigenvalue that was clamped.
    pub clamp_magnitude: f64,
    /// Number of eigenvalues of the underlying operator, reported or not.
    pub total_count: usize,
    pub source: SpectrumSource,
}

impl Spectrum {
    /// Builds a spectrum from raw eigenvalues (any order) and the trace they
    /// should add up to.
    pub fn from_values(raw: &[f64], trace_estimate: f64, total_count: usize, k_max: usize, source: SpectrumSource) -> Result<Self> {
        let mut values: Vec<f64> = raw.to_vec();
        values.sort_by(|a, b| b.total_cmp(a));
        let min = values.last().copied().unwrap_or(0.0);
        if min < NEGATIVITY_FLOOR {
            return Err(Error::NegativeEigenvalue { value: min });
        }
        let clamp_magnitude = if min < 0.0 { -min } else { 0.0 };
        values.retain(|&v| v >= REPORT_FLOOR);
        values.truncate(k_max);
        let trace_deficit = trace_estimate - values.iter().sum::<f64>();
        Ok(Spectrum { values, trace_deficit, trace_estimate, clamp_magnitude, total_count, source })
    }

    /// Writes `k,lambda` rows with round-trip precision.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::InvalidInput(format!("csv output failed: {e}"));
        wr.write_record(["k", "lambda"]).map_err(io)?;
        for (k, v) in self.values.iter().enumerate() {
            wr.write_record([k.to_string(), format!("{v:.16e}")]).map_err(io)?;
        }
        wr.flush().map_err(|e| Error::InvalidInput(format!("csv output failed: {e}")))?;
        Ok(())
    }
}

/// The `k_max` largest eigenvalues of a kernel.
pub fn eigenvalues(kernel: &KernelMatrix, k_max: usize) -> Result<Spectrum> {
    let raw = kernel.eigenvalues()?;
    let source = SpectrumSource {
        kept: kernel.subset.one_based(),
        nodes_per_axis: Some(kernel.grid.nodes_per_axis),
        scale: Some(kernel.grid.scale),
        method: "nystrom".into(),
        ..Default::default()
    };
    Spectrum::from_values(&raw, kernel.trace_estimate, kernel.dim, k_max, source)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entropy {
    pub q: f64,
    pub value: f64,
    /// Upper bound on what the unreported tail could add to `Σ λ^q`.
    pub tail_bound: f64,
    pub tail_flagged: bool,
}

/// `S_q = ln(Σ λ^q) / (1 - q)`.
pub fn renyi_entropy(spec: &Spectrum, q: f64) -> Result<Entropy> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::InvalidInput(format!("Rényi index must be > 0, got {q}")));
    }
    if q == 1.0 {
        return Err(Error::InvalidInput("q = 1 is the von Neumann entropy; use von_neumann_entropy".into()));
    }
    let sum: f64 = spec.values.iter().map(|l| l.powf(q)).sum();
    // The unreported mass t spread over n_tail eigenvalues contributes at
    // most n_tail^(1-q) t^q to Σ λ^q when q < 1.
    let tail = spec.trace_deficit.max(0.0);
    let n_tail = spec.total_count.saturating_sub(spec.values.len()) as f64;
    let tail_bound = if q < 1.0 && tail > 0.0 && n_tail > 0.0 { n_tail.powf(1.0 - q) * tail.powf(q) } else { 0.0 };
    Ok(Entropy { q, value: sum.ln() / (1.0 - q), tail_bound, tail_flagged: tail_bound > TAIL_TOL })
}

/// `-Σ λ ln λ`, with `0 ln 0 = 0`.
pub fn von_neumann_entropy(spec: &Spectrum) -> f64 {
    -spec.values.iter().filter(|&&l| l > 0.0).map(|l| l * l.ln()).sum::<f64>()
}

/// Rényi entropies over a list of indices, in input order.
pub fn renyi_batch(par: Parallelism, spec: &Spectrum, qs: &[f64]) -> Result<Vec<Entropy>> {
    map_ordered(par, qs, |&q| renyi_entropy(spec, q)).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(v: &[f64]) -> Spectrum {
        Spectrum::from_values(v, v.iter().sum(), v.len(), usize::MAX, SpectrumSource::default()).unwrap()
    }

    #[test]
    fn renyi_examples() {
        assert_eq!(renyi_entropy(&spec(&[1.0, 0.0, 0.0]), 2.0).unwrap().value, 0.0);
        assert!((renyi_entropy(&spec(&[0.5, 0.5]), 2.0).unwrap().value - 2f64.ln()).abs() < 1e-15);
        let v = renyi_entropy(&spec(&[0.75, 0.25]), 2.0).unwrap().value;
        assert!((v + 0.625f64.ln()).abs() < 1e-15);
        assert!((v - 0.470004).abs() < 1e-6);
        assert!(renyi_entropy(&spec(&[0.5, 0.5]), 1.0).is_err());
        assert!(renyi_entropy(&spec(&[0.5, 0.5]), 0.0).is_err());
    }

    #[test]
    fn von_neumann_examples() {
        assert_eq!(von_neumann_entropy(&spec(&[1.0, 0.0])), 0.0);
        assert!((von_neumann_entropy(&spec(&[0.5, 0.5])) - 2f64.ln()).abs() < 1e-15);
        let xi: f64 = 0.25;
        let geo: Vec<f64> = (0..200).map(|k| (1.0 - xi) * xi.powi(k)).collect();
        let want = -(1.0 - xi).ln() - xi * xi.ln() / (1.0 - xi);
        // terms below the report floor are dropped
        assert!((von_neumann_entropy(&spec(&geo)) - want).abs() < 1e-12);
        assert!((want - 0.749780).abs() < 1e-6);
    }

    #[test]
    fn clamping_and_floor() {
        let s = Spectrum::from_values(&[0.5, -1e-12, 0.5], 1.0, 3, usize::MAX, SpectrumSource::default()).unwrap();
        assert_eq!(s.values, vec![0.5, 0.5]);
        assert_eq!(s.clamp_magnitude, 1e-12);
        assert!(matches!(
            Spectrum::from_values(&[1.0, -1e-6], 1.0, 2, usize::MAX, SpectrumSource::default()),
            Err(Error::NegativeEigenvalue { .. })
        ));
    }

    #[test]
    fn trace_accounting() {
        let s = Spectrum::from_values(&[0.6, 0.3, 0.1, 1e-15], 1.0, 4, 2, SpectrumSource::default()).unwrap();
        assert_eq!(s.values, vec![0.6, 0.3]);
        assert!((s.values.iter().sum::<f64>() + s.trace_deficit - s.trace_estimate).abs() < 1e-15);
    }

    #[test]
    fn small_q_tail_is_flagged() {
        let s = Spectrum::from_values(&[0.9, 0.05, 0.05], 1.0, 3, 1, SpectrumSource::default()).unwrap();
        assert!(renyi_entropy(&s, 0.5).unwrap().tail_flagged);
        assert!(!renyi_entropy(&s, 2.0).unwrap().tail_flagged);
    }

    #[test]
    fn csv_round_trip() {
        let s = spec(&[0.7, 0.2, 0.1 / 3.0]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let mut rd = csv::Reader::from_reader(buf.as_slice());
        let back: Vec<f64> = rd.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
        assert_eq!(back, s.values);
    }

    #[test]
    fn json_shape() {
        let v = serde_json::to_value(spec(&[1.0])).unwrap();
        assert!(v.get("lambda").is_some() && v.get("trace_deficit").is_some() && v.get("source").is_some());
    }
}
