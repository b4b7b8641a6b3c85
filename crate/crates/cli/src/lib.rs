//! Command layer: scenario loading, builtin registry, and the analyze /
//! verify / angle-sweep operations behind the `metallic-lab` binary.

pub mod builtins;
pub mod report;
pub mod scenario;

use serde::Serialize;

use metallic_core::geometry::frame_at;
use metallic_core::metallic::{diagonal_structure, verify_structure};
use metallic_core::propcheck::{run_suite, CheckId, CheckOutcome};
use metallic_core::slant::classify;

pub use report::Format;
use report::{render_sweep, scenario_meta, ReferenceComparison, ReportDocument, SweepRow};
use scenario::{LoadError, LoadedScenario};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit code contract: 0 pass, 1 check/classification failure, 2 input error.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Engine(#[from] metallic_core::Error),
}

pub type CmdResult = Result<(String, i32), CliError>;

/// Resolves the seed: explicit flag, then METALLIC_LAB_SEED, then the
/// scenario's sampling seed.
pub fn effective_seed(loaded: &LoadedScenario, flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var("METALLIC_LAB_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(loaded.scenario.sampling.seed)
}

/// Applies `--structure`: either the `jbar` builtin variant of the loaded
/// builtin, or an explicit comma-separated sigma/sigma_bar pattern.
pub fn apply_structure_override(
    loaded: &LoadedScenario,
    spec: &str,
) -> Result<LoadedScenario, CliError> {
    let mut out = loaded.clone();
    if spec == "jbar" {
        let sibling = format!("{}-jbar", loaded.scenario.name);
        let variant = builtins::builtin(&sibling).map_err(|_| {
            CliError::Input(format!(
                "--structure jbar requires a builtin variant \"{sibling}\"; none exists"
            ))
        })?;
        out.scenario.structure = variant.scenario.structure;
        out.structure_check = variant.structure_check;
        out.reference = variant.reference;
        out.description = format!("{} [structure: jbar variant]", out.description);
        return Ok(out);
    }
    let axes = scenario::parse_pattern(spec).map_err(CliError::Input)?;
    if axes.len() != loaded.scenario.ambient_dim() {
        return Err(CliError::Input(format!(
            "--structure pattern has {} axes, ambient dimension is {}",
            axes.len(),
            loaded.scenario.ambient_dim()
        )));
    }
    let structure = diagonal_structure(&axes, loaded.scenario.structure.params);
    out.structure_check = verify_structure(&structure, 64, 0xC0F_FEE);
    out.scenario.structure = structure;
    out.reference.clear();
    out.description = format!("{} [structure: pattern override]", out.description);
    Ok(out)
}

fn with_sampling(loaded: &LoadedScenario, samples: Option<usize>, seed: u64) -> LoadedScenario {
    let mut out = loaded.clone();
    out.scenario.sampling.seed = seed;
    if let Some(count) = samples {
        out.scenario.sampling.count = count.max(1);
    }
    out
}

fn induced_metric_rows(scn: &metallic_core::Scenario64) -> Result<Vec<Vec<f64>>, CliError> {
    let pt = scn.sample_points(1, scn.sampling.seed)[0].clone();
    let geom = frame_at(scn, &pt)?;
    let g = &geom.induced_metric;
    Ok((0..g.rows()).map(|i| g.row(i).to_vec()).collect())
}

fn reference_comparisons(
    loaded: &LoadedScenario,
    classification: &metallic_core::Classification64,
) -> Result<Vec<ReferenceComparison>, CliError> {
    let Some(theta_name) = &classification.theta_distribution else {
        return Ok(vec![]);
    };
    let Some(report) = classification.report_for(theta_name) else {
        return Ok(vec![]);
    };
    let engine = report.mean_theta.cos();
    let consts = loaded.scenario.const_map();
    loaded
        .reference
        .iter()
        .map(|form| {
            let value = form.evaluate(&consts)?;
            let deviation = (value - engine).abs();
            Ok(ReferenceComparison {
                label: form.label.clone(),
                expr: form.source.clone(),
                form_value: value,
                engine_cos_theta: engine,
                deviation,
                agrees: deviation < 1e-8,
            })
        })
        .collect()
}

/// Classification, slant reports, normal split, and reference-form
/// comparisons. Exit 1 when the scenario cannot be classified.
pub fn cmd_analyze(
    loaded: &LoadedScenario,
    samples: Option<usize>,
    seed: u64,
    format: Format,
) -> CmdResult {
    let run = with_sampling(loaded, samples, seed);
    let scn = &run.scenario;
    let classification = classify(scn)?;
    let reference_forms = reference_comparisons(&run, &classification)?;
    let unclassified = classification.verdict.classification
        == metallic_core::slant::Classification::Unclassified;
    let doc = ReportDocument {
        engine_version: ENGINE_VERSION,
        seed,
        samples: scn.sampling.count,
        scenario: scenario_meta(&run),
        structure_check: run.structure_check.clone(),
        induced_metric_at_first_sample: Some(induced_metric_rows(scn)?),
        classification: Some(classification),
        reference_forms,
        checks: vec![],
    };
    Ok((doc.render(format), if unclassified { 1 } else { 0 }))
}

/// Runs the requested identity checks. Exit 1 when any check fails.
pub fn cmd_verify(
    loaded: &LoadedScenario,
    ids: &[CheckId],
    samples: Option<usize>,
    seed: u64,
    format: Format,
) -> CmdResult {
    let run = with_sampling(loaded, samples, seed);
    let scn = &run.scenario;
    let count = scn.sampling.count;
    let checks = run_suite(scn, ids, count, seed)?;
    let failed = checks.iter().any(|c| c.outcome == CheckOutcome::Fail);
    let doc = ReportDocument {
        engine_version: ENGINE_VERSION,
        seed,
        samples: count,
        scenario: scenario_meta(&run),
        structure_check: run.structure_check.clone(),
        induced_metric_at_first_sample: None,
        classification: None,
        reference_forms: vec![],
        checks,
    };
    Ok((doc.render(format), if failed { 1 } else { 0 }))
}

/// Parses `--checks`: `all` or a comma-separated list of check IDs.
pub fn parse_checks(spec: Option<&str>, default: &[CheckId]) -> Result<Vec<CheckId>, CliError> {
    match spec {
        None => Ok(default.to_vec()),
        Some("all") => Ok(CheckId::ALL.to_vec()),
        Some(list) => list
            .split(',')
            .map(|s| {
                CheckId::parse(s.trim())
                    .ok_or_else(|| CliError::Input(format!("unknown check id \"{}\"", s.trim())))
            })
            .collect(),
    }
}

/// Parses `--grid`: `start:stop:count`, a comma-separated list, or a single
/// value.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |m: String| CliError::Input(m);
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(format!(
                "--grid range must be start:stop:count, found \"{spec}\""
            )));
        }
        let start: f64 = parts[0]
            .parse()
            .map_err(|_| bad(format!("bad grid start \"{}\"", parts[0])))?;
        let stop: f64 = parts[1]
            .parse()
            .map_err(|_| bad(format!("bad grid stop \"{}\"", parts[1])))?;
        let count: usize = parts[2]
            .parse()
            .map_err(|_| bad(format!("bad grid count \"{}\"", parts[2])))?;
        if count == 0 {
            return Err(bad("grid count must be at least 1".into()));
        }
        if count == 1 {
            return Ok(vec![start]);
        }
        let step = (stop - start) / (count as f64 - 1.0);
        return Ok((0..count).map(|i| start + step * i as f64).collect());
    }
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| bad(format!("bad grid value \"{s}\"")))
        })
        .collect()
}

/// Sweeps a declared constant over a grid and reports (value, cos theta,
/// theta) of the slant-role distribution at each grid point.
pub fn cmd_angle_sweep(
    loaded: &LoadedScenario,
    var: &str,
    grid: &[f64],
    seed: u64,
    format: Format,
) -> CmdResult {
    if !loaded.scenario.extra_consts.contains_key(var) {
        return Err(CliError::Input(format!(
            "\"{var}\" is not a declared constant of scenario \"{}\"",
            loaded.scenario.name
        )));
    }
    if let Some(&(lo, hi)) = loaded.const_domains.get(var) {
        for &v in grid {
            if !(v > lo && v < hi) {
                return Err(CliError::Input(format!(
                    "grid value {v} outside the domain ({lo}, {hi}) of \"{var}\""
                )));
            }
        }
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &value in grid {
        let mut run = with_sampling(loaded, None, seed);
        run.scenario.extra_consts.insert(var.to_string(), value);
        let classification = classify(&run.scenario)?;
        let Some(theta_name) = classification.theta_distribution.clone() else {
            return Err(CliError::Input(format!(
                "scenario is unclassified at {var} = {value}: {}",
                classification.diagnostics.join("; ")
            )));
        };
        let report = classification
            .report_for(&theta_name)
            .ok_or_else(|| CliError::Input("missing slant report".into()))?;
        rows.push(SweepRow {
            value,
            cos_theta: report.mean_theta.cos(),
            theta: report.mean_theta,
        });
    }
    Ok((render_sweep(var, &rows, format), 0))
}

/// Lists the builtin scenarios.
pub fn cmd_builtin_list(format: Format) -> CmdResult {
    #[derive(Serialize)]
    struct Entry {
        name: &'static str,
        description: String,
    }
    let entries: Vec<Entry> = builtins::BUILTIN_SOURCES
        .iter()
        .map(|(name, src)| {
            let description = scenario::load_str(src)
                .map(|l| l.description)
                .unwrap_or_default();
            Entry { name, description }
        })
        .collect();
    let out = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&entries).expect("builtin list");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = String::from("name,description\n");
            for e in &entries {
                s.push_str(&format!("{},\"{}\"\n", e.name, e.description));
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            for e in &entries {
                s.push_str(&format!("{}\n    {}\n", e.name, e.description));
            }
            s
        }
    };
    Ok((out, 0))
}
