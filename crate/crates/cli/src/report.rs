//! Report document assembly and rendering (text, JSON, CSV). Identical inputs
//! produce byte-identical output in every format.

use serde::Serialize;

use metallic_core::metallic::{StructureCheck, StructureKind};
use metallic_core::propcheck::CheckOutcome;
use metallic_core::slant::ScenarioClassification;
use metallic_core::CheckReport64;

use crate::scenario::LoadedScenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// Full precision for numbers that feed regression tests: 17 significant
/// digits.
pub fn full(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Serialize)]
pub struct ScenarioMeta {
    pub name: String,
    pub description: String,
    pub ambient_dim: usize,
    pub surface_dim: usize,
    pub p: u32,
    pub q: u32,
    pub sigma: f64,
    pub sigma_bar: f64,
    pub structure_kind: String,
}

#[derive(Debug, Serialize)]
pub struct ReferenceComparison {
    pub label: String,
    pub expr: String,
    pub form_value: f64,
    pub engine_cos_theta: f64,
    pub deviation: f64,
    pub agrees: bool,
}

/// The one document every command emits; sections not produced by a command
/// are omitted from the serialized form.
#[derive(Debug, Serialize)]
pub struct ReportDocument {
    pub engine_version: &'static str,
    pub seed: u64,
    pub samples: usize,
    pub scenario: ScenarioMeta,
    pub structure_check: StructureCheck<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub induced_metric_at_first_sample: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<ScenarioClassification<f64>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub reference_forms: Vec<ReferenceComparison>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckReport64>,
}

pub fn scenario_meta(loaded: &LoadedScenario) -> ScenarioMeta {
    let scn = &loaded.scenario;
    let params = &scn.structure.params;
    ScenarioMeta {
        name: scn.name.clone(),
        description: loaded.description.clone(),
        ambient_dim: scn.ambient_dim(),
        surface_dim: scn.dim(),
        p: params.p,
        q: params.q,
        sigma: params.sigma,
        sigma_bar: params.sigma_bar,
        structure_kind: match scn.structure.kind {
            StructureKind::DiagonalPattern => "diagonal-pattern",
            StructureKind::ProductInduced => "product-induced",
            StructureKind::Custom => "custom",
        }
        .to_string(),
    }
}

impl ReportDocument {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serialization");
                s.push('\n');
                s
            }
            Format::Text => self.render_text(),
            Format::Csv => self.render_csv(),
        }
    }

    fn render_text(&self) -> String {
        let mut out = String::new();
        let meta = &self.scenario;
        out.push_str(&format!("scenario: {}\n", meta.name));
        if !meta.description.is_empty() {
            out.push_str(&format!("  {}\n", meta.description));
        }
        out.push_str(&format!(
            "ambient: R^{} with metallic structure ({}), p = {}, q = {}\n",
            meta.ambient_dim, meta.structure_kind, meta.p, meta.q
        ));
        out.push_str(&format!(
            "  sigma = {}, sigma_bar = {}\n",
            full(meta.sigma),
            full(meta.sigma_bar)
        ));
        out.push_str(&format!(
            "structure check: {} (quadratic {:.3e}, compatibility {:.3e}, metric {:.3e})\n",
            if self.structure_check.pass { "pass" } else { "FAIL" },
            self.structure_check.quadratic_residual,
            self.structure_check.compatibility_residual,
            self.structure_check.metric_residual
        ));
        out.push_str(&format!(
            "surface dimension: {}; seed {}; samples {}\n",
            meta.surface_dim, self.seed, self.samples
        ));
        if let Some(g) = &self.induced_metric_at_first_sample {
            out.push_str("induced metric at first sample point:\n");
            for row in g {
                let cells: Vec<String> = row.iter().map(|x| full(*x)).collect();
                out.push_str(&format!("  [{}]\n", cells.join(", ")));
            }
        }
        if let Some(c) = &self.classification {
            let v = &c.verdict;
            out.push_str(&format!(
                "classification: {}\n",
                v.classification.as_str()
            ));
            if let Some(theta) = v.theta {
                out.push_str(&format!(
                    "  theta = {} rad (cos theta = {})\n",
                    full(theta),
                    full(theta.cos())
                ));
            }
            out.push_str(&format!(
                "  dims: dim D_theta = {}, dim D_perp = {}, dim mu = {}\n",
                v.dims.0, v.dims.1, v.dims.2
            ));
            if let (Some(td), Some(pd)) = (&c.theta_distribution, &c.perp_distribution) {
                out.push_str(&format!(
                    "  roles: slant = \"{td}\", anti-invariant = \"{pd}\"\n"
                ));
            }
            for r in &c.slant_reports {
                out.push_str(&format!(
                    "slant report \"{}\": {:?}; mean theta {}; max deviation {:.3e}; lambda {}; lambda residual {:.3e}\n",
                    r.distribution,
                    r.verdict,
                    full(r.mean_theta),
                    r.max_deviation,
                    full(r.lambda_fit),
                    r.lambda_residual
                ));
            }
            if let Some(s) = &c.normal_split {
                out.push_str(&format!(
                    "normal split: dim N(D_theta) = {}, dim N(D_perp) = {}, dim mu = {}; cross-orthogonality {:.3e}; mu invariance {:.3e}\n",
                    s.dim_n_theta,
                    s.dim_n_perp,
                    s.dim_mu,
                    s.cross_orthogonality_residual,
                    s.mu_invariance_residual
                ));
            }
            for d in &c.diagnostics {
                out.push_str(&format!("diagnostic: {d}\n"));
            }
        }
        if !self.reference_forms.is_empty() {
            out.push_str("reference forms (engine cos theta vs closed form):\n");
            for r in &self.reference_forms {
                out.push_str(&format!(
                    "  {}: form {} vs engine {} |deviation| {:.6e} -> {}\n",
                    r.label,
                    full(r.form_value),
                    full(r.engine_cos_theta),
                    r.deviation,
                    if r.agrees { "agrees" } else { "DISAGREES" }
                ));
            }
        }
        if !self.checks.is_empty() {
            out.push_str("checks:\n");
            for c in &self.checks {
                match &c.outcome {
                    CheckOutcome::Pass => out.push_str(&format!(
                        "  {:<24} pass  max {:.3e}  mean {:.3e}  tol {:.0e}  ({} samples)\n",
                        c.check.as_str(),
                        c.max_residual,
                        c.mean_residual,
                        c.tolerance,
                        c.samples
                    )),
                    CheckOutcome::Fail => {
                        out.push_str(&format!(
                            "  {:<24} FAIL  max {:.3e}  mean {:.3e}  tol {:.0e}  ({} samples)\n",
                            c.check.as_str(),
                            c.max_residual,
                            c.mean_residual,
                            c.tolerance,
                            c.samples
                        ));
                        if let Some(w) = &c.worst {
                            let pt: Vec<String> =
                                w.point.iter().map(|x| format!("{x}")).collect();
                            out.push_str(&format!(
                                "       worst sample {} at point ({}): {}\n",
                                w.sample_index,
                                pt.join(", "),
                                w.detail
                            ));
                        }
                    }
                    CheckOutcome::Skipped(reason) => out.push_str(&format!(
                        "  {:<24} skip  {}\n",
                        c.check.as_str(),
                        reason
                    )),
                }
            }
            let failed = self
                .checks
                .iter()
                .filter(|c| c.outcome == CheckOutcome::Fail)
                .count();
            let passed = self
                .checks
                .iter()
                .filter(|c| c.outcome == CheckOutcome::Pass)
                .count();
            let skipped = self.checks.len() - failed - passed;
            out.push_str(&format!(
                "summary: {passed} passed, {failed} failed, {skipped} skipped\n"
            ));
        }
        out
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        if !self.checks.is_empty() {
            out.push_str("scenario,check,samples,max_residual,mean_residual,tolerance,outcome\n");
            for c in &self.checks {
                let outcome = match &c.outcome {
                    CheckOutcome::Pass => "pass".to_string(),
                    CheckOutcome::Fail => "fail".to_string(),
                    CheckOutcome::Skipped(_) => "skipped".to_string(),
                };
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    self.scenario.name,
                    c.check.as_str(),
                    c.samples,
                    full(c.max_residual),
                    full(c.mean_residual),
                    full(c.tolerance),
                    outcome
                ));
            }
            return out;
        }
        out.push_str("key,value\n");
        out.push_str(&format!("scenario,{}\n", self.scenario.name));
        out.push_str(&format!("ambient_dim,{}\n", self.scenario.ambient_dim));
        out.push_str(&format!("surface_dim,{}\n", self.scenario.surface_dim));
        out.push_str(&format!("p,{}\n", self.scenario.p));
        out.push_str(&format!("q,{}\n", self.scenario.q));
        out.push_str(&format!("sigma,{}\n", full(self.scenario.sigma)));
        out.push_str(&format!("sigma_bar,{}\n", full(self.scenario.sigma_bar)));
        if let Some(c) = &self.classification {
            out.push_str(&format!(
                "classification,{}\n",
                c.verdict.classification.as_str()
            ));
            if let Some(theta) = c.verdict.theta {
                out.push_str(&format!("theta,{}\n", full(theta)));
                out.push_str(&format!("cos_theta,{}\n", full(theta.cos())));
            }
            out.push_str(&format!("dim_d_theta,{}\n", c.verdict.dims.0));
            out.push_str(&format!("dim_d_perp,{}\n", c.verdict.dims.1));
            out.push_str(&format!("dim_mu,{}\n", c.verdict.dims.2));
        }
        for r in &self.reference_forms {
            out.push_str(&format!(
                "reference \"{}\",{}\n",
                r.label,
                full(r.form_value)
            ));
            out.push_str(&format!(
                "reference \"{}\" deviation,{}\n",
                r.label,
                full(r.deviation)
            ));
        }
        out
    }
}

/// One output row of an angle sweep.
#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub cos_theta: f64,
    pub theta: f64,
}

pub fn render_sweep(var: &str, rows: &[SweepRow], format: Format) -> String {
    match format {
        Format::Json => {
            #[derive(Serialize)]
            struct SweepDoc<'a> {
                engine_version: &'static str,
                var: &'a str,
                rows: &'a [SweepRow],
            }
            let mut s = serde_json::to_string_pretty(&SweepDoc {
                engine_version: env!("CARGO_PKG_VERSION"),
                var,
                rows,
            })
            .expect("sweep serialization");
            s.push('\n');
            s
        }
        Format::Csv | Format::Text => {
            let mut out = format!("{var},cos_theta,theta\n");
            for r in rows {
                out.push_str(&format!(
                    "{},{},{}\n",
                    full(r.value),
                    full(r.cos_theta),
                    full(r.theta)
                ));
            }
            out
        }
    }
}
