use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use harmonic_duality::duality::{
    verify_entropy_duality, verify_evenness, verify_fourier_conjugation, verify_homogeneity, verify_spectrum_duality,
    Claim, DualityReport, EvennessFamily,
};
use harmonic_duality::modes::{delta_coordinates, diagonalize, NormalModes};
use harmonic_duality::parallel::map_ordered;
use harmonic_duality::rdm::{rdm_kernel, SubsetSpec};
use harmonic_duality::spectra::{eigenvalues, renyi_batch, von_neumann_entropy, Entropy, Spectrum};
use harmonic_duality::wavefunction::StateTemplate;
use harmonic_duality::{InteractionMatrix, Parallelism};
use serde_json::{json, Value};

use crate::config::{sweep_dual, RunConfig};
use crate::error::CliError;

/// Tabular form of a result, written with round-trip float formatting.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub struct Outcome {
    pub json: Value,
    pub table: Table,
    /// A duality check ran and did not pass.
    pub failed: bool,
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_subset(s: &SubsetSpec) -> String {
    s.one_based().iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn model_json(d: &InteractionMatrix) -> Value {
    let mut v = serde_json::to_value(d.family()).unwrap_or(Value::Null);
    if let Value::Object(m) = &mut v {
        m.insert("entries".into(), json!(d.to_rows()));
    }
    v
}

pub fn modes(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let d = cfg.model()?;
    let modes = diagonalize(&d)?;
    let deltas = modes.deltas().deltas;
    let dual_deltas = delta_coordinates(&modes.dual_lengths).deltas;
    let mut table = Table { header: header(&["mu", "d", "ell", "ell_dual", "delta"]), rows: Vec::new() };
    for mu in 0..modes.n() {
        table.rows.push(vec![
            mu.to_string(),
            fmt_f64(modes.eigvals[mu]),
            fmt_f64(modes.lengths[mu]),
            fmt_f64(modes.dual_lengths[mu]),
            deltas.get(mu).map(|&x| fmt_f64(x)).unwrap_or_default(),
        ]);
    }
    let json = json!({
        "command": "modes",
        "model": model_json(&d),
        "modes": modes,
        "deltas": deltas,
        "dual_deltas": dual_deltas,
    });
    Ok(Outcome { json, table, failed: false })
}

struct SubsetResult {
    subset: SubsetSpec,
    spectrum: Spectrum,
    renyi: Vec<Entropy>,
    von_neumann: f64,
}

fn spectra(cfg: &RunConfig, dump: Option<&Path>) -> Result<(InteractionMatrix, Vec<SubsetResult>), CliError> {
    let d = cfg.model()?;
    let modes = diagonalize(&d)?;
    let template = cfg.template(d.n())?;
    let state = template.bind(&modes)?;
    let subsets = cfg.subsets(d.n())?;
    let grid = cfg.grid.build(&modes.lengths)?;
    let opts = cfg.rdm_options();
    let mut out = Vec::with_capacity(subsets.len());
    for (i, subset) in subsets.iter().enumerate() {
        let kernel = rdm_kernel(&state, subset, &grid, &opts)?;
        if let Some(path) = dump {
            let path = if subsets.len() == 1 { path.to_path_buf() } else { path.with_extension(format!("{i}.bin")) };
            let f = File::create(&path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
            kernel.dump(BufWriter::new(f))?;
        }
        let mut spectrum = eigenvalues(&kernel, cfg.k_max)?;
        spectrum.source.model = Some(d.to_rows());
        spectrum.source.state = Some(serde_json::to_value(&template)?);
        let renyi = renyi_batch(opts.parallelism, &spectrum, &cfg.q_list)?;
        let von_neumann = von_neumann_entropy(&spectrum);
        out.push(SubsetResult { subset: subset.clone(), spectrum, renyi, von_neumann });
    }
    Ok((d, out))
}

pub fn spectrum(cfg: &RunConfig, dump: Option<&Path>) -> Result<Outcome, CliError> {
    let (d, results) = spectra(cfg, dump)?;
    let mut table = Table { header: header(&["subset", "k", "lambda"]), rows: Vec::new() };
    let mut items = Vec::new();
    for r in &results {
        let s = fmt_subset(&r.subset);
        for (k, v) in r.spectrum.values.iter().enumerate() {
            table.rows.push(vec![s.clone(), k.to_string(), fmt_f64(*v)]);
        }
        items.push(json!({
            "subset": r.subset,
            "spectrum": r.spectrum,
            "renyi": r.renyi,
            "von_neumann": r.von_neumann,
        }));
    }
    let json = json!({ "command": "spectrum", "model": model_json(&d), "results": items });
    Ok(Outcome { json, table, failed: false })
}

pub fn entropy(cfg: &RunConfig, dump: Option<&Path>) -> Result<Outcome, CliError> {
    let (d, results) = spectra(cfg, dump)?;
    let mut table = Table { header: header(&["subset", "q", "value", "tail_bound", "tail_flagged"]), rows: Vec::new() };
    let mut items = Vec::new();
    for r in &results {
        let s = fmt_subset(&r.subset);
        for e in &r.renyi {
            table.rows.push(vec![s.clone(), fmt_f64(e.q), fmt_f64(e.value), fmt_f64(e.tail_bound), e.tail_flagged.to_string()]);
        }
        // von Neumann as the q = 1 row
        table.rows.push(vec![s.clone(), fmt_f64(1.0), fmt_f64(r.von_neumann), fmt_f64(0.0), "false".into()]);
        items.push(json!({
            "subset": r.subset,
            "renyi": r.renyi,
            "von_neumann": r.von_neumann,
            "trace_deficit": r.spectrum.trace_deficit,
        }));
    }
    let json = json!({ "command": "entropy", "model": model_json(&d), "results": items });
    Ok(Outcome { json, table, failed: false })
}

fn evenness_setup(d: &InteractionMatrix, modes: &NormalModes) -> (EvennessFamily, Vec<f64>) {
    match d.identical_ratio(1e-12 * d.entries().amax()) {
        Some(r) => {
            let n = d.n();
            (EvennessFamily::Identical { n }, vec![(1.0 + n as f64 * r).ln() / 4.0])
        }
        None => (EvennessFamily::Rotated { rotation: Some(modes.rotation.clone()) }, modes.deltas().deltas),
    }
}

pub fn duality(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let d = cfg.model()?;
    let modes = diagonalize(&d)?;
    let template = cfg.template(d.n())?;
    let subsets = cfg.subsets(d.n())?;
    let opts = cfg.duality_options();
    let tol = cfg.tolerance(&template);
    let mut reports: Vec<DualityReport> = Vec::new();
    for subset in &subsets {
        for claim in &cfg.checks {
            match claim {
                Claim::Spectral => reports.push(verify_spectrum_duality(&d, &template, subset, &opts, tol)?),
                Claim::Fourier => {
                    reports.push(verify_fourier_conjugation(&d, &template, subset, cfg.basis_size, &opts, tol)?)
                }
                Claim::Evenness => {
                    let (family, own) = evenness_setup(&d, &modes);
                    let grid = cfg.delta_grid().unwrap_or_else(|| vec![own]);
                    reports.extend(verify_evenness(&family, &grid, &template, subset, &opts, tol)?);
                }
                Claim::Homogeneity => {
                    for c in cfg.c_values() {
                        reports.push(verify_homogeneity(&d, c, &template, subset, &opts, tol)?);
                    }
                }
                Claim::Entropy => reports.extend(verify_entropy_duality(&d, &cfg.q_list, &template, subset, &opts, tol)?),
            }
        }
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    let mut table = Table {
        header: header(&["context", "label", "tolerance", "max_abs_diff", "passed", "flagged"]),
        rows: Vec::new(),
    };
    for r in &reports {
        let ctx = serde_json::to_value(r.context)?.as_str().unwrap_or_default().to_string();
        table.rows.push(vec![
            ctx,
            r.label.clone(),
            fmt_f64(r.tolerance),
            fmt_f64(r.max_abs_diff),
            r.passed.to_string(),
            r.flagged.to_string(),
        ]);
    }
    let json = json!({
        "command": "duality",
        "model": model_json(&d),
        "passed": failed == 0,
        "failed_count": failed,
        "reports": reports,
    });
    Ok(Outcome { json, table, failed: failed > 0 })
}

enum SweepRow {
    Ok { r: f64, r_dual: f64, lambda: Vec<f64>, renyi: Vec<Entropy>, von_neumann: f64, residual: f64, passed: bool },
    Skipped { r: f64, reason: String },
}

fn sweep_row(
    cfg: &RunConfig,
    r: f64,
    n: usize,
    d1: f64,
    template: &StateTemplate,
    subset: &SubsetSpec,
) -> Result<SweepRow, CliError> {
    let skipped = |e: harmonic_duality::Error| SweepRow::Skipped { r, reason: e.to_string() };
    let r_dual = match sweep_dual(r, n) {
        Ok(x) => x,
        Err(e) => return Ok(skipped(e)),
    };
    let model = match InteractionMatrix::identical_1d(d1, r * d1, n) {
        Ok(m) => m,
        Err(e) => return Ok(skipped(e)),
    };
    let tol = cfg.tolerance(template);
    let report = verify_spectrum_duality(&model, template, subset, &cfg.duality_options(), tol)?;
    let spec = report.spectrum_a.as_ref().expect("spectral reports carry spectra");
    let renyi = renyi_batch(Parallelism::Sequential, spec, &cfg.q_list)?;
    let mut lambda = spec.values.clone();
    lambda.truncate(cfg.k_max);
    lambda.resize(cfg.k_max, 0.0);
    Ok(SweepRow::Ok {
        r,
        r_dual,
        lambda,
        renyi,
        von_neumann: von_neumann_entropy(spec),
        residual: report.max_abs_diff,
        passed: report.passed,
    })
}

pub fn sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sw = cfg.sweep()?;
    let template = cfg.template(sw.n)?;
    let subsets = cfg.subsets(sw.n)?;
    let [subset] = subsets.as_slice() else {
        return Err(CliError::Config(format!("sweep takes a single subset, got {}", subsets.len())));
    };
    let rows: Vec<SweepRow> = map_ordered(Parallelism::default(), &sw.r, |&r| sweep_row(cfg, r, sw.n, sw.d1, &template, subset))
        .into_iter()
        .collect::<Result<_, _>>()?;

    let mut head = vec!["r".to_string(), "r_dual".to_string()];
    head.extend((0..cfg.k_max).map(|k| format!("lambda_{k}")));
    head.extend(cfg.q_list.iter().map(|q| format!("S_{q}")));
    head.extend(["S_vn", "residual", "status"].map(String::from));
    let width = head.len();
    let mut table = Table { header: head, rows: Vec::new() };
    let mut items = Vec::new();
    let mut failed = false;
    for row in &rows {
        match row {
            SweepRow::Ok { r, r_dual, lambda, renyi, von_neumann, residual, passed } => {
                failed |= !passed;
                let status = if *passed { "ok" } else { "fail" };
                let mut cells = vec![fmt_f64(*r), fmt_f64(*r_dual)];
                cells.extend(lambda.iter().map(|&x| fmt_f64(x)));
                cells.extend(renyi.iter().map(|e| fmt_f64(e.value)));
                cells.extend([fmt_f64(*von_neumann), fmt_f64(*residual), status.to_string()]);
                table.rows.push(cells);
                items.push(json!({
                    "r": r, "r_dual": r_dual, "lambda": lambda, "renyi": renyi,
                    "von_neumann": von_neumann, "residual": residual, "status": status,
                }));
            }
            SweepRow::Skipped { r, reason } => {
                eprintln!("warning: r = {r} skipped: {reason}");
                let mut cells = vec![fmt_f64(*r)];
                cells.resize(width - 1, String::new());
                cells.push(format!("skipped: {reason}"));
                table.rows.push(cells);
                items.push(json!({ "r": r, "status": "skipped", "warning": reason }));
            }
        }
    }
    let json = json!({
        "command": "sweep",
        "n": sw.n,
        "d1": sw.d1,
        "subset": subset,
        "rows": items,
    });
    Ok(Outcome { json, table, failed })
}
