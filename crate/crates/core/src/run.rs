//! Command runners behind the `tubehom` binary. Every runner persists its outputs and a manifest
//! under the output directory, also when an invariant fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{LoadedConfig, RunConfig};
use crate::error::{Error, Result};
use crate::geometry::{
    effective_potential, AmbientCurvature, Convention, CurveKind, CurveSpec, FiberKind, FrameChoice, MetricKind, MetricMode, Tube,
};
use crate::harness::{
    boundary_scaling, commutator_suite, interpolation_suite, kato_suite, nochnkato_suite, regularity_suite, smooth_ev_suite, sweep,
    uniform_bound_suite, BoundaryReport, CommutatorReport, HomogLevel, InterpolationSuite, KatoReport, NochnKatoReport,
    RegularityReport, SmoothEvSuite, SweepReport, UniformBoundReport,
};
use crate::io::{fmt_f64, CsvTable};
use crate::manifest::{ConventionRecord, RunManifest};
use crate::operators::{assemble_induced_family, assemble_vertical, write_matrix_market};
use crate::spectral::{certify_convention, common_eigen_check, discrete_fiber_spectrum, eigensolve, ground_pair, ConventionCertificate};
use crate::theory::{build_system, check_independence, lowest_order_witness, negative_control, IndependenceVerdict, Witness, C64, MAX_ORDER};

pub const REPORT_FILE: &str = "report.csv";
pub const REPORT_COLUMNS: [&str; 7] = ["epsilon", "t", "l2_error", "sobolev2_error", "sobolev4_error", "rate_flag", "cell_status"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    InvariantFailure,
    SolverFailure,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::InvariantFailure => 1,
            Status::SolverFailure => 3,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Overrides `output` of the config.
    pub out: Option<PathBuf>,
    /// Matrix Market dump of Δ(ε) at the first spectrum ε.
    pub dump_operator: Option<PathBuf>,
    /// Restricts `slcheck` to one order.
    pub k: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub status: Status,
    /// Human-readable summary, one finding per line.
    pub lines: Vec<String>,
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
}

fn json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Serde(e.to_string()))?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn pass(b: bool) -> &'static str {
    if b {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn out_dir(config: &RunConfig, opts: &RunOptions) -> PathBuf {
    opts.out.clone().unwrap_or_else(|| PathBuf::from(&config.output))
}

/// Unit circle in the plane on which `potential = "auto"` is certified.
fn certification_tube(config: &RunConfig) -> Result<Tube> {
    let spec = CurveSpec::circle(1.0, 2, 64);
    Tube::new(&spec, FrameChoice::Parallel, AmbientCurvature::Flat, FiberKind::Interval { nw: config.grid.nw }, MetricMode::Exact)
}

fn certify(config: &RunConfig, tube: &Tube) -> Result<ConventionCertificate> {
    certify_convention(tube, config.conventions.probe, 0.1, &[0, 1, 2], 0.02)
}

/// The effective-potential sign used by the run and its provenance.
pub fn resolve_convention(config: &RunConfig) -> Result<(Convention, ConventionRecord)> {
    let renorm = config.renorm().name().to_string();
    match config.conventions.potential.as_str() {
        "plus" | "minus" => {
            let c = if config.conventions.potential == "plus" { Convention::Plus } else { Convention::Minus };
            Ok((c, ConventionRecord { potential: c.name().into(), source: "configured".into(), metric: None, renorm, max_relative_error: None, tie_broken: None }))
        }
        _ => {
            let cert = certify(config, &certification_tube(config)?)?;
            let chosen = cert.selected_candidate().ok_or_else(|| Error::Mismatch("no effective-potential convention reproduces the annulus shifts".into()))?;
            Ok((
                chosen.convention,
                ConventionRecord {
                    potential: chosen.convention.name().into(),
                    source: "certified".into(),
                    metric: Some(metric_name(chosen.metric).into()),
                    renorm,
                    max_relative_error: Some(chosen.max_relative_error),
                    tie_broken: Some(cert.tie_broken),
                },
            ))
        }
    }
}

fn metric_name(m: MetricKind) -> &'static str {
    match m {
        MetricKind::Induced => "induced",
        MetricKind::Reference => "reference",
    }
}

fn finish(mut manifest: RunManifest, dir: &Path, status: Status, lines: Vec<String>) -> Result<RunOutcome> {
    manifest.passed = status == Status::Pass;
    manifest.write(dir)?;
    Ok(RunOutcome { status, lines, out_dir: dir.to_path_buf(), manifest })
}

/// Lowest eigenpairs of Δ(ε) with fiber band labels.
pub fn run_spectrum(loaded: &LoadedConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let config = &loaded.config;
    let dir = out_dir(config, opts);
    let mut manifest = RunManifest::new("spectrum", config, &loaded.input_hash);
    let tube = manifest.timed("geometry", || config.tube())?;
    let (lambda0, _) = ground_pair(&tube.grid, config.renorm())?;
    let fiber = discrete_fiber_spectrum(&tube.grid)?;
    let vertical = assemble_vertical(&tube.grid);
    let mut table = CsvTable::new(&["epsilon", "index", "eigenvalue", "residual", "band", "horizontal_part"]);
    let mut lines = Vec::new();
    let mut ok = true;
    for (n, &eps) in config.spectrum.epsilons.iter().enumerate() {
        let op = assemble_induced_family(eps, &tube, lambda0)?;
        if n == 0 {
            if let Some(path) = &opts.dump_operator {
                write_matrix_market(&op, path)?;
                lines.push(format!("operator Δ(ε={eps}) written to {}", path.display()));
            }
        }
        let eig = manifest.timed(&format!("eigensolve eps={eps}"), || eigensolve(&op, config.spectrum.count.min(op.dim()), 1e-10, config.seed))?;
        // bands of ε⁻²Δ₀ᵛ against the unrenormalized spectrum
        let e2 = 1.0 / (eps * eps);
        let mut shifted = eig.clone();
        shifted.values.iter_mut().for_each(|v| *v += lambda0 * e2);
        let mut scaled_fiber = fiber.clone();
        scaled_fiber.values.iter_mut().for_each(|v| *v *= e2);
        let bands = common_eigen_check(&shifted, &vertical.scaled(e2), &scaled_fiber, &tube.grid)?;
        for (s, entry) in bands.entries.iter().enumerate() {
            let residual = eig.residuals[s];
            ok &= residual <= 1e-8 * eig.values[s].abs().max(1.0);
            table.push(vec![
                fmt_f64(eps),
                s.to_string(),
                fmt_f64(eig.values[s]),
                fmt_f64(residual),
                entry.band.map(|b| b.to_string()).unwrap_or_else(|| "mixed".into()),
                fmt_f64(entry.horizontal_part),
            ]);
        }
        let shown: Vec<String> = eig.values.iter().take(5).map(|v| format!("{v:.6}")).collect();
        lines.push(format!("ε = {eps}: lowest eigenvalues {} ({} mixed bands)", shown.join(", "), bands.mixed));
    }
    manifest.emit(&dir, "spectrum.csv", table.render().as_bytes())?;
    lines.push(format!("eigen residuals {}", pass(ok)));
    finish(manifest, &dir, if ok { Status::Pass } else { Status::InvariantFailure }, lines)
}

fn levels(config: &RunConfig, convention: Convention) -> Result<(HomogLevel, HomogLevel)> {
    let tube = config.tube()?;
    let refined = tube.with_fiber(tube.grid.fiber.refined(config.solver.refine)?)?;
    let probe = config.conventions.probe;
    Ok((HomogLevel::new(tube, config.renorm(), convention, probe)?, HomogLevel::new(refined, config.renorm(), convention, probe)?))
}

pub fn report_table(report: &SweepReport) -> CsvTable {
    let mut table = CsvTable::new(&REPORT_COLUMNS);
    for c in &report.cells {
        table.push(vec![
            fmt_f64(c.epsilon),
            fmt_f64(c.t),
            fmt_f64(c.l2_error),
            fmt_f64(c.sobolev2_error),
            fmt_f64(c.sobolev4_error),
            c.rate_flag().into(),
            c.status.clone(),
        ]);
    }
    table
}

/// Boundary trace scaling with a refinement diagnostic.
#[derive(Clone, Debug, Serialize)]
pub struct BoundarySuite {
    pub base: BoundaryReport,
    pub refined: BoundaryReport,
    /// The fitted slope lies in the configured range.
    pub scaling: bool,
    /// Observed order of the trace in the fiber mesh width at each ε (`None` when both are dropped).
    pub orders: Vec<Option<f64>>,
    /// The trace converges to zero under fiber refinement at every ε (order ≥ 1): it is stencil
    /// residue of a trace that vanishes in the continuum.
    pub vanishing: bool,
}

impl BoundarySuite {
    pub fn passes(&self) -> bool {
        self.scaling || self.vanishing
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResults {
    pub uniform: UniformBoundReport,
    /// `None` on disk fibers.
    pub boundary: Option<BoundarySuite>,
    pub regularity: RegularityReport,
    pub kato: KatoReport,
    pub nochnkato: NochnKatoReport,
    pub commutators: CommutatorReport,
    pub smooth_ev: SmoothEvSuite,
    pub interpolation: InterpolationSuite,
    pub verdicts: BTreeMap<String, bool>,
}

impl SuiteResults {
    pub fn passes(&self) -> bool {
        self.verdicts.values().all(|v| *v)
    }
}

/// Certification flag per ε of the sweep at time `t` (all times when `t` is not swept).
fn certified_at(report: &SweepReport, t: f64) -> Vec<bool> {
    let swept = report.params.times.contains(&t);
    report
        .params
        .epsilons
        .iter()
        .map(|&e| report.cells.iter().filter(|c| c.epsilon == e && (!swept || c.t == t)).all(|c| c.ok() && c.certified))
        .collect()
}

fn boundary_suite(config: &RunConfig, level: &HomogLevel, refined: &HomogLevel, report: &SweepReport) -> Result<Option<BoundarySuite>> {
    if !matches!(level.tube.grid.fiber.kind, FiberKind::Interval { .. }) {
        return Ok(None);
    }
    let s = &config.suites;
    let params = &report.params;
    let cert = certified_at(report, s.boundary_t);
    let base = boundary_scaling(level, params, s.boundary_n, s.boundary_t, &cert)?;
    let fine = boundary_scaling(refined, params, s.boundary_n, s.boundary_t, &cert)?;
    let scaling = base.slope_in(s.boundary_slope[0], s.boundary_slope[1]);
    let ratio = level.tube.grid.fiber.h / refined.tube.grid.fiber.h;
    let orders: Vec<Option<f64>> = base
        .points
        .iter()
        .zip(&fine.points)
        .map(|(a, b)| if a.dropped && b.dropped { None } else { Some((a.trace / b.trace).ln() / ratio.ln()) })
        .collect();
    let vanishing = orders.iter().all(|o| o.is_none_or(|o| o >= 1.0));
    Ok(Some(BoundarySuite { base, refined: fine, scaling, orders, vanishing }))
}

/// Every inequality suite; the sweep supplies the certification flags.
pub fn run_suites(config: &RunConfig, convention: Convention, level: &HomogLevel, refined: &HomogLevel, report: &SweepReport, manifest: &mut RunManifest) -> Result<SuiteResults> {
    let s = &config.suites;
    let params = &report.params;
    let eps = &params.epsilons;
    let uniform = manifest.timed("uniform", || uniform_bound_suite(level, params))?;
    let boundary = manifest.timed("boundary", || boundary_suite(config, level, refined, report))?;
    let regularity = manifest.timed("regularity", || regularity_suite(level, params))?;
    let kato = manifest.timed("kato", || kato_suite(eps, s.kato_ns, s.kato_nw, s.kato_states, config.seed))?;
    let nochnkato = manifest.timed("nochnkato", || {
        nochnkato_suite(eps, s.nochnkato_curvature, s.nochnkato_ns, (s.nochnkato_nr, s.nochnkato_ntheta), convention, config.seed)
    })?;
    let commutators = manifest.timed("commutators", || commutator_suite(s.commutator_ns, &s.commutator_nw))?;
    let smooth_ev = manifest.timed("smooth_ev", || smooth_ev_suite(s.smooth_ev_levels))?;
    let interpolation = manifest.timed("interpolation", || interpolation_suite(s.interpolation_states, s.interpolation_modes, config.seed))?;
    let mut verdicts = BTreeMap::new();
    verdicts.insert("uniform_bound".to_string(), uniform.passes(s.maximizer_tol));
    if let Some(b) = &boundary {
        verdicts.insert("boundary_trace".to_string(), b.passes());
    }
    verdicts.insert("regularity".to_string(), regularity.passes(s.regularity_max_ratio));
    verdicts.insert("kato".to_string(), kato.passes());
    verdicts.insert("nochnkato".to_string(), nochnkato.passes(s.nochnkato_max_ratio));
    verdicts.insert("commutators".to_string(), commutators.passes());
    verdicts.insert("smooth_ev".to_string(), smooth_ev.passes());
    verdicts.insert("interpolation".to_string(), interpolation.passes());
    Ok(SuiteResults { uniform, boundary, regularity, kato, nochnkato, commutators, smooth_ev, interpolation, verdicts })
}

#[derive(Clone, Debug, Serialize)]
struct SweepSummary<'a> {
    rates: &'a [crate::harness::RateSet],
    max_over_t: &'a [(f64, f64)],
    certified_cells: usize,
    cells: usize,
    failed_cells: usize,
}

fn summary_lines(report: &SweepReport) -> Vec<String> {
    let mut lines = Vec::new();
    for r in &report.rates {
        let slope = |f: &Option<crate::harness::LogFit>| f.as_ref().map(|f| format!("{:.3}", f.slope)).unwrap_or_else(|| "n/a".into());
        lines.push(format!(
            "t = {}: L² rate {}, |||·|||₂ rate {}, |||·|||₄ rate {}, L² decreasing {}",
            r.t,
            slope(&r.l2),
            slope(&r.sobolev2),
            slope(&r.sobolev4),
            r.l2_decreasing
        ));
    }
    lines
}

fn suite_lines(suites: &SuiteResults) -> Vec<String> {
    suites.verdicts.iter().map(|(k, v)| format!("{k}: {}", pass(*v))).collect()
}

struct Study {
    convention: Convention,
    level: HomogLevel,
    refined: HomogLevel,
    report: SweepReport,
}

fn study(config: &RunConfig, manifest: &mut RunManifest) -> Result<Study> {
    let (convention, record) = manifest.timed("conventions", || resolve_convention(config))?;
    manifest.conventions = Some(record);
    let (level, refined) = manifest.timed("levels", || levels(config, convention))?;
    let params = config.study_params();
    let report = manifest.timed("sweep", || sweep(&level, &refined, &params));
    Ok(Study { convention, level, refined, report })
}

/// The homogenization study: report.csv, summary.json, suites.json and the manifest.
pub fn run_sweep(loaded: &LoadedConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let config = &loaded.config;
    let dir = out_dir(config, opts);
    let mut manifest = RunManifest::new("sweep", config, &loaded.input_hash);
    let st = study(config, &mut manifest)?;
    let report = &st.report;
    manifest.emit(&dir, REPORT_FILE, report_table(report).render().as_bytes())?;
    let failed = report.cells.iter().filter(|c| !c.ok()).count();
    let summary = SweepSummary {
        rates: &report.rates,
        max_over_t: &report.max_over_t,
        certified_cells: report.cells.iter().filter(|c| c.certified).count(),
        cells: report.cells.len(),
        failed_cells: failed,
    };
    manifest.emit(&dir, "summary.json", &json(&summary)?)?;
    let mut lines = summary_lines(report);
    let suites = run_suites(config, st.convention, &st.level, &st.refined, report, &mut manifest)?;
    manifest.emit(&dir, "suites.json", &json(&suites)?)?;
    lines.extend(suite_lines(&suites));
    let status = if failed > 0 {
        lines.push(format!("{failed} cells failed"));
        Status::SolverFailure
    } else if suites.passes() {
        Status::Pass
    } else {
        Status::InvariantFailure
    };
    finish(manifest, &dir, status, lines)
}

/// All invariant suites; the sweep only supplies certification flags.
pub fn run_verify(loaded: &LoadedConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let config = &loaded.config;
    let dir = out_dir(config, opts);
    let mut manifest = RunManifest::new("verify", config, &loaded.input_hash);
    let st = study(config, &mut manifest)?;
    let suites = run_suites(config, st.convention, &st.level, &st.refined, &st.report, &mut manifest)?;
    manifest.emit(&dir, "verify.json", &json(&suites)?)?;
    let lines = suite_lines(&suites);
    finish(manifest, &dir, if suites.passes() { Status::Pass } else { Status::InvariantFailure }, lines)
}

/// W and W_L under both signs and both metrics, with the annulus verdict.
pub fn run_potential(loaded: &LoadedConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let config = &loaded.config;
    let dir = out_dir(config, opts);
    let mut manifest = RunManifest::new("potential", config, &loaded.input_hash);
    let tube = config.tube()?;
    let probe = config.conventions.probe;
    let density = tube.density(probe)?;
    let mut fields = Vec::new();
    for (kind, metric) in [(MetricKind::Induced, tube.induced(probe)?), (MetricKind::Reference, tube.reference(probe)?)] {
        for c in [Convention::Plus, Convention::Minus] {
            fields.push((format!("{}_{}", metric_name(kind), c.name()), effective_potential(&tube.grid, &density, &metric, c)?));
        }
    }
    let grid = &tube.grid;
    let names: Vec<&str> = fields.iter().map(|f| f.0.as_str()).collect();
    let mut wl = CsvTable::new(&[&["s"][..], &names[..]].concat());
    for j in 0..grid.ns {
        let mut row = vec![fmt_f64(j as f64 * grid.hs())];
        row.extend(fields.iter().map(|f| fmt_f64(f.1.w_l[j])));
        wl.push(row);
    }
    manifest.emit(&dir, "potential_curve.csv", wl.render().as_bytes())?;
    let nn = grid.fiber.node_count();
    let mut w = CsvTable::new(&[&["s", "w1", "w2"][..], &names[..]].concat());
    for j in 0..grid.ns {
        for node in 0..nn {
            let p = grid.fiber.nodes[node];
            let mut row = vec![fmt_f64(j as f64 * grid.hs()), fmt_f64(p[0]), fmt_f64(p[1])];
            row.extend(fields.iter().map(|f| fmt_f64(f.1.w[j * nn + node])));
            w.push(row);
        }
    }
    manifest.emit(&dir, "potential_field.csv", w.render().as_bytes())?;
    let planar_circle = matches!(tube.spec.kind, CurveKind::Circle { .. }) && tube.codim() == 1;
    let cert_tube = if planar_circle { tube.clone() } else { certification_tube(config)? };
    let cert = manifest.timed("certify", || certify(config, &cert_tube))?;
    manifest.emit(&dir, "certificate.json", &json(&cert)?)?;
    let mut lines: Vec<String> =
        fields.iter().map(|(n, f)| format!("{n}: mean W_L = {:.6}", f.mean_w_l())).collect();
    for c in &cert.candidates {
        lines.push(format!(
            "annulus oracle, {} metric, {} sign: max relative error {:.2e} {}",
            metric_name(c.metric),
            c.convention.name(),
            c.max_relative_error,
            pass(c.passes)
        ));
    }
    let status = match cert.selected_candidate() {
        Some(c) => {
            lines.push(format!("selected: {} metric, {} sign (tie broken by conjugation potential: {})", metric_name(c.metric), c.convention.name(), cert.tie_broken));
            manifest.conventions = Some(ConventionRecord {
                potential: c.convention.name().into(),
                source: "certified".into(),
                metric: Some(metric_name(c.metric).into()),
                renorm: config.renorm().name().into(),
                max_relative_error: Some(c.max_relative_error),
                tie_broken: Some(cert.tie_broken),
            });
            Status::Pass
        }
        None => {
            lines.push("no convention reproduces the annulus shifts".into());
            Status::InvariantFailure
        }
    };
    finish(manifest, &dir, status, lines)
}

#[derive(Clone, Debug, Serialize)]
pub struct SlCheck {
    pub systems: Vec<IndependenceVerdict>,
    pub negative_control: IndependenceVerdict,
    pub witnesses: usize,
    pub max_witness_error: f64,
    pub worst_witness: Option<Witness>,
}

impl SlCheck {
    pub fn passes(&self) -> bool {
        self.systems.iter().all(|v| v.passes && v.orders_valid && v.recombination_residual < 1e-12)
            && !self.negative_control.passes
            && self.max_witness_error <= 1e-12
    }
}

/// Boundary-system independence for each order, the rank-deficient control and random witnesses.
pub fn sl_check(orders: &[usize], witnesses: usize, seed: u64) -> Result<SlCheck> {
    let systems = orders.iter().map(|&k| check_independence(&build_system(k)?)).collect::<Result<Vec<_>>>()?;
    let negative_control = check_independence(&negative_control(2)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: Option<Witness> = None;
    for _ in 0..witnesses {
        let k = rng.random_range(1..=MAX_ORDER);
        let system = build_system(k)?;
        let zeros = rng.random_range(0..k);
        let a: Vec<C64> = (0..k)
            .map(|l| if l < zeros { C64::new(0.0, 0.0) } else { C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) })
            .collect();
        let w = lowest_order_witness(&system, &a)?;
        if worst.as_ref().is_none_or(|b| w.error > b.error) {
            worst = Some(w);
        }
    }
    let max_witness_error = worst.as_ref().map(|w| w.error).unwrap_or(0.0);
    Ok(SlCheck { systems, negative_control, witnesses, max_witness_error, worst_witness: worst })
}

pub fn run_slcheck(loaded: &LoadedConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let config = &loaded.config;
    let dir = out_dir(config, opts);
    let mut manifest = RunManifest::new("slcheck", config, &loaded.input_hash);
    let orders: Vec<usize> = match opts.k {
        Some(k) => vec![k],
        None => (1..=MAX_ORDER).collect(),
    };
    let check = manifest.timed("slcheck", || sl_check(&orders, 100, config.seed))?;
    manifest.emit(&dir, "slcheck.json", &json(&check)?)?;
    let mut lines = Vec::new();
    for v in &check.systems {
        lines.push(format!("k = {}: rank {}/{}, σ_min {:.3e} {}", v.k, v.rank, v.k, v.sigma_min, pass(v.passes)));
        for (l, row) in v.remainders.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|(re, im)| format!("{re:+.1}{im:+.1}i")).collect();
            lines.push(format!("  B_{} mod L+: [{}]", l + 1, cells.join(", ")));
        }
    }
    let nc = &check.negative_control;
    lines.push(format!("negative control (τ−i)²: rank {}/{}, σ_min {:.3e} {}", nc.rank, nc.k, nc.sigma_min, if nc.passes { "PASS (unexpected)" } else { "FAIL (expected)" }));
    lines.push(format!("witnesses: {} random vectors, max error {:.2e}", check.witnesses, check.max_witness_error));
    finish(manifest, &dir, if check.passes() { Status::Pass } else { Status::InvariantFailure }, lines)
}
