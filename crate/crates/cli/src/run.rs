//! Command dispatch: load the perturbation, call the engine, write the report and its CSV twin.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use lattice_resonance::birman_schwinger::{BsVariant, ReducedFamily};
use lattice_resonance::charval::{resonance_scan, ResonanceRecord, ScanOptions, ScanReport};
use lattice_resonance::defaults;
use lattice_resonance::eig_oracle::{discrete_spectrum, lap_check};
use lattice_resonance::free_resolvent::{kernel_value, to_threshold_zero, Sheet, SurfacePoint, Threshold};
use lattice_resonance::generator::generate_spec;
use lattice_resonance::lattice::{verify_assumption, LatticeWindow};
use lattice_resonance::scaling::{arc_circle_check, revealed, scaled_spectrum, spectral_arc, ArcReport, FourierGrid, ScaledSpectrum, ScalingParam};
use lattice_resonance::spec::PerturbationSpec;
use lattice_resonance::Error;
use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Command, ExperimentConfig};
use crate::output::{num, re_im, write_atomic, write_report, Table};

/// Distance below which a scaled eigenvalue and a continuation record count as the same point.
pub const XCHECK_TOL: f64 = 1e-5;

#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// False when the command ran but its check did not pass (only `verify` reports this).
    pub pass: bool,
}

struct LoadedSpec {
    spec: PerturbationSpec,
    hash: String,
}

fn load_spec(config: &ExperimentConfig) -> Result<LoadedSpec> {
    let path = config.spec_path.as_ref().context("no spec_path")?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec = PerturbationSpec::from_json(&text)?;
    Ok(LoadedSpec { spec, hash: hex::encode(Sha256::digest(text.as_bytes())) })
}

fn require_assumption(spec: &PerturbationSpec) -> Result<()> {
    let report = verify_assumption(spec);
    if report.pass {
        return Ok(());
    }
    Err(match report.worst_pair {
        Some((n, m)) => Error::AssumptionViolation { n, m, norm: report.decay_sup, bound: report.bound },
        None => Error::InvalidParameter(report.failures.join("; ")),
    }
    .into())
}

fn thresholds(config: &ExperimentConfig) -> Result<Vec<Threshold>> {
    Ok(match config.threshold {
        Some(mu) => vec![Threshold::from_value(mu)?],
        None => vec![Threshold::Zero, Threshold::Four],
    })
}

fn complex(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

fn scan_options(config: &ExperimentConfig) -> ScanOptions {
    ScanOptions {
        nodes: config.nodes,
        min_sep: defaults::MIN_SEP,
        continuation_radius: config.continuation_radius,
        sectors: config.sectors,
    }
}

pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    config.validate()?;
    match config.command {
        Command::Kernel => return kernel(config),
        Command::Generate => return generate(config),
        _ => {}
    }
    let loaded = load_spec(config)?;
    if config.command == Command::Verify {
        return verify(config, &loaded);
    }
    require_assumption(&loaded.spec)?;
    match config.command {
        Command::Spectrum => spectrum(config, &loaded),
        Command::Resonances => resonances(config, &loaded),
        Command::Scaling => scaling(config, &loaded),
        Command::Lap => lap(config, &loaded),
        Command::Xcheck => xcheck(config, &loaded),
        Command::BsDump => bs_dump(config, &loaded),
        Command::Kernel | Command::Generate | Command::Verify => unreachable!(),
    }
}

fn verify(config: &ExperimentConfig, loaded: &LoadedSpec) -> Result<Outcome> {
    let report = verify_assumption(&loaded.spec);
    let path = write_report(config, Some(&loaded.hash), &report)?;
    Ok(Outcome { files: vec![path], pass: report.pass })
}

fn spectrum(config: &ExperimentConfig, loaded: &LoadedSpec) -> Result<Outcome> {
    let report = discrete_spectrum(&loaded.spec, &config.effective_windows(), config.delta_band)?;
    let mut table = Table::new(&["re", "im", "window", "stable"]);
    for w in &report.windows {
        for z in &w.eigenvalues {
            let stable = report.stable_discrete.iter().any(|s| s.value == *z);
            let [re, im] = re_im(*z);
            table.row(&[re, im, w.half_width.to_string(), stable.to_string()]);
        }
    }
    let files = vec![write_report(config, Some(&loaded.hash), &report)?, table.write(config, "spectrum")?];
    Ok(Outcome { files, pass: true })
}

#[derive(Serialize)]
struct ResonanceResult {
    r_min: f64,
    r_max: f64,
    scans: Vec<(Threshold, ScanReport)>,
    records: Vec<ResonanceRecord>,
}

fn record_table(records: &[ResonanceRecord]) -> Table {
    let mut table = Table::new(&["threshold", "lambda_re", "lambda_im", "energy_re", "energy_im", "multiplicity", "sheet", "cluster"]);
    for r in records {
        let [lr, li] = re_im(r.lambda);
        let [er, ei] = re_im(r.energy);
        let sheet = match r.sheet {
            Sheet::Physical => "physical",
            Sheet::Nonphysical => "nonphysical",
        };
        table.row(&[num(r.threshold.value()), lr, li, er, ei, r.multiplicity.to_string(), sheet.into(), r.cluster.to_string()]);
    }
    table
}

fn scan_all(config: &ExperimentConfig, spec: &PerturbationSpec) -> Result<Vec<(Threshold, ScanReport)>> {
    let window = LatticeWindow::new(config.window, spec.fiber_dim)?;
    let opts = scan_options(config);
    thresholds(config)?
        .into_iter()
        .map(|mu| Ok((mu, resonance_scan(spec, mu, config.r_min, config.r_max, &window, &opts)?)))
        .collect()
}

fn resonances(config: &ExperimentConfig, loaded: &LoadedSpec) -> Result<Outcome> {
    let scans = scan_all(config, &loaded.spec)?;
    let records: Vec<ResonanceRecord> = scans.iter().flat_map(|(_, s)| s.records.iter().copied()).collect();
    let table = record_table(&records);
    let result = ResonanceResult { r_min: config.r_min, r_max: config.r_max, scans, records };
    let files = vec![write_report(config, Some(&loaded.hash), &result)?, table.write(config, "resonances")?];
    Ok(Outcome { files, pass: true })
}

#[derive(Serialize)]
struct ScalingResult {
    arc_check: ArcReport,
    spectrum: ScaledSpectrum,
}

fn scaling(config: &ExperimentConfig, loaded: &LoadedSpec) -> Result<Outcome> {
    let theta = ScalingParam::new(complex(config.theta))?.theta();
    let grid = FourierGrid::new(config.grid)?;
    let spectrum = scaled_spectrum(&loaded.spec, theta, &grid)?;
    let arc_check = arc_circle_check(&spectral_arc(theta, 129)?)?;

    let mut arc = Table::new(&["re", "im"]);
    for z in &spectrum.arc {
        arc.row(&re_im(*z));
    }
    let mut discrete = Table::new(&["re", "im"]);
    for z in &spectrum.discrete {
        discrete.row(&re_im(*z));
    }
    let result = ScalingResult { arc_check, spectrum };
    let files = vec![
        write_report(config, Some(&loaded.hash), &result)?,
        arc.write(config, "scaling_arc")?,
        discrete.write(config, "scaling_discrete")?,
    ];
    Ok(Outcome { files, pass: true })
}

fn lap(config: &ExperimentConfig, loaded: &LoadedSpec) -> Result<Outcome> {
    let window = LatticeWindow::new(config.window, loaded.spec.fiber_dim)?;
    let [a, b] = config.interval;
    let table = lap_check(&loaded.spec, (a, b), config.phi, config.psi, &config.epsilons, &window, config.energies)?;
    let mut csv = Table::new(&["energy", "epsilon", "side", "re", "im", "modulus", "flagged"]);
    for s in &table.samples {
        let [re, im] = re_im(s.value);
        csv.row(&[num(s.energy), num(s.epsilon), s.side.to_string(), re, im, num(s.modulus), s.flagged.to_string()]);
    }
    let files = vec![write_report(config, Some(&loaded.hash), &table)?, csv.write(config, "lap")?];
    Ok(Outcome { files, pass: true })
}

#[derive(Serialize)]
struct KernelResult {
    lambda: Complex64,
    threshold: Threshold,
    energy: Complex64,
    sheet: Sheet,
    /// `R₀(n, 0)` for `n = 0..=window`; the kernel depends on `|n − m|` only.
    values: Vec<Complex64>,
}

fn kernel(config: &ExperimentConfig) -> Result<Outcome> {
    let mu = Threshold::from_value(config.threshold.unwrap_or(0.0))?;
    let p = SurfacePoint::new(complex(config.lambda), mu)?;
    let at_zero = to_threshold_zero(p);
    let values: Vec<Complex64> = (0..=config.window as i64).map(|n| kernel_value(at_zero, n, 0)).collect::<Result<_, _>>()?;
    let mut table = Table::new(&["n", "m", "re", "im"]);
    for (n, v) in values.iter().enumerate() {
        let [re, im] = re_im(*v);
        table.row(&[n.to_string(), "0".into(), re, im]);
    }
    let result = KernelResult { lambda: p.lambda(), threshold: mu, energy: p.energy(), sheet: p.sheet(), values };
    let files = vec![write_report(config, None, &result)?, table.write(config, "kernel")?];
    Ok(Outcome { files, pass: true })
}

#[derive(Serialize)]
struct BsDumpResult {
    lambda: Complex64,
    threshold: Threshold,
    sites: Vec<i64>,
    dim: usize,
    /// Row-major entries of `T(λ)` restricted to the perturbation support.
    entries: Vec<Complex64>,
}

fn bs_dump(config: &ExperimentConfig, loaded: &LoadedSpec) -> Result<Outcome> {
    let mu = Threshold::from_value(config.threshold.unwrap_or(0.0))?;
    let p = SurfacePoint::new(complex(config.lambda), mu)?;
    let window = LatticeWindow::new(config.window, loaded.spec.fiber_dim)?;
    let family = ReducedFamily::new(&loaded.spec, BsVariant::for_threshold(mu), &window)?;
    let t = family.t(p.lambda());
    let dim = t.nrows();
    let mut table = Table::new(&["row", "col", "re", "im"]);
    let mut entries = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let [re, im] = re_im(t[(i, j)]);
            table.row(&[i.to_string(), j.to_string(), re, im]);
            entries.push(t[(i, j)]);
        }
    }
    let result = BsDumpResult { lambda: p.lambda(), threshold: mu, sites: family.sites().to_vec(), dim, entries };
    let files = vec![write_report(config, Some(&loaded.hash), &result)?, table.write(config, "bs-dump")?];
    Ok(Outcome { files, pass: true })
}

#[derive(Serialize)]
struct XcheckRow {
    source: &'static str,
    point: Complex64,
    /// Distance to the nearest point from the other method.
    gap: f64,
    matched: bool,
}

#[derive(Serialize)]
struct XcheckResult {
    theta: Complex64,
    tolerance: f64,
    agree: bool,
    rows: Vec<XcheckRow>,
}

fn nearest(z: Complex64, others: &[Complex64]) -> f64 {
    others.iter().map(|w| (z - w).norm()).fold(f64::INFINITY, f64::min)
}

/// Compares scaled discrete eigenvalues with the continuation records the scaling should reveal.
fn xcheck(config: &ExperimentConfig, loaded: &LoadedSpec) -> Result<Outcome> {
    let theta = ScalingParam::new(complex(config.theta))?.theta();
    let scaled = scaled_spectrum(&loaded.spec, theta, &FourierGrid::new(config.grid)?)?;
    let mut expected = Vec::new();
    for (_, scan) in scan_all(config, &loaded.spec)? {
        for r in &scan.records {
            if revealed(theta, r)? {
                expected.push(r.energy);
            }
        }
    }
    expected.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    expected.dedup_by(|a, b| (*a - *b).norm() < XCHECK_TOL);

    let mut rows = Vec::new();
    for (source, points, others) in [("continuation", &expected, &scaled.discrete), ("scaling", &scaled.discrete, &expected)] {
        for &z in points.iter() {
            let gap = nearest(z, others);
            rows.push(XcheckRow { source, point: z, gap, matched: gap < XCHECK_TOL });
        }
    }
    let agree = rows.iter().all(|r| r.matched);
    let mut table = Table::new(&["source", "re", "im", "gap", "matched"]);
    for r in &rows {
        let [re, im] = re_im(r.point);
        table.row(&[r.source.into(), re, im, num(r.gap), r.matched.to_string()]);
    }
    let result = XcheckResult { theta, tolerance: XCHECK_TOL, agree, rows };
    let files = vec![write_report(config, Some(&loaded.hash), &result)?, table.write(config, "xcheck")?];
    Ok(Outcome { files, pass: true })
}

fn generate(config: &ExperimentConfig) -> Result<Outcome> {
    let profile = config.profile.context("generate needs a profile")?;
    let spec = generate_spec(config.seed, profile, config.gamma, config.fiber_dim)?;
    let mut text = spec.to_json()?;
    text.push('\n');
    let spec_path = config.output_dir.join("spec.json");
    write_atomic(&spec_path, text.as_bytes())?;
    let hash = hex::encode(Sha256::digest(text.as_bytes()));
    let assumption = verify_assumption(&spec);
    let report = write_report(config, Some(&hash), &assumption)?;
    Ok(Outcome { files: vec![spec_path, report], pass: true })
}
