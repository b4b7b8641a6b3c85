//! Scenario file loading: a sectioned TOML format holding the ambient
//! structure, the immersion expressions, declared distributions, the sampling
//! plan, the default check list, and optional closed-form references.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use metallic_core::exprdsl::{eval_value, parse, ConstMap, Expr};
use metallic_core::geometry::{DistributionSpec, ImmersionScenario, Sampling};
use metallic_core::metallic::{
    diagonal_structure, from_product_matrix, metallic_number, verify_structure, AxisRoot, Sign,
    StructureCheck, StructureOp,
};
use metallic_core::propcheck::CheckId;
use metallic_core::{Mat64, Scenario64};

/// Everything a scenario file declares, validated and ready to run.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario64,
    pub description: String,
    /// Requested checks; `ids = "all"` resolves to the full registry.
    pub checks: Vec<CheckId>,
    /// Optional closed intervals for named constants (used by angle sweeps).
    pub const_domains: BTreeMap<String, (f64, f64)>,
    /// Closed-form reference expressions (constants only) compared against
    /// the computed slant angle in reports.
    pub reference: Vec<ReferenceForm>,
    pub structure_check: StructureCheck<f64>,
}

#[derive(Debug, Clone)]
pub struct ReferenceForm {
    pub label: String,
    pub expr: Expr,
    pub source: String,
    /// Compare |form| against the (nonnegative) engine value.
    pub abs: bool,
}

impl ReferenceForm {
    pub fn evaluate(&self, consts: &ConstMap<f64>) -> Result<f64, LoadError> {
        let v = eval_value(&self.expr, &[], consts)
            .map_err(|e| LoadError::validation("reference", &self.label, e.to_string()))?;
        Ok(if self.abs { v.abs() } else { v })
    }
}

/// Load failure: file access, TOML syntax (with line/column), or validation
/// naming the offending section and key. All map to exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("scenario parse error: {0}")]
    Toml(String),
    #[error("invalid scenario: [{section}] {key}: {message}")]
    Validation {
        section: String,
        key: String,
        message: String,
    },
}

impl LoadError {
    pub fn validation(section: &str, key: &str, message: impl Into<String>) -> Self {
        LoadError::Validation {
            section: section.to_string(),
            key: key.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(default)]
    description: Option<String>,
    ambient: AmbientSection,
    immersion: ImmersionSection,
    #[serde(default)]
    distributions: Vec<DistributionSection>,
    sampling: SamplingSection,
    #[serde(default)]
    checks: Option<ChecksSection>,
    #[serde(default)]
    reference: Vec<ReferenceSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AmbientSection {
    dim: usize,
    p: u32,
    q: u32,
    structure: StructureSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StructureSection {
    #[serde(default)]
    pattern: Option<Vec<String>>,
    #[serde(default)]
    matrix: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    product: Option<ProductSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProductSection {
    matrix: Vec<Vec<f64>>,
    sign: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImmersionSection {
    params: Vec<String>,
    components: Vec<String>,
    #[serde(default)]
    consts: BTreeMap<String, f64>,
    domain: BTreeMap<String, [f64; 2]>,
    #[serde(default)]
    const_domains: BTreeMap<String, [f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistributionSection {
    name: String,
    fields: Vec<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SamplingSection {
    count: usize,
    seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChecksSection {
    ids: ChecksIds,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ChecksIds {
    Keyword(String),
    List(Vec<String>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReferenceSection {
    label: String,
    expr: String,
    #[serde(default = "default_true")]
    abs: bool,
}

fn default_true() -> bool {
    true
}

/// Names bound automatically in every scenario's expression environment.
const AUTO_CONSTS: [&str; 2] = ["p", "q"];
const RESERVED: [&str; 5] = ["pi", "sigma", "sigma_bar", "p", "q"];

pub fn load(path: &Path) -> Result<LoadedScenario, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_str(&text)
}

/// Seed for the structure self-test at load time; fixed so loading is
/// deterministic.
const STRUCTURE_CHECK_SEED: u64 = 0xC0F_FEE;

pub fn load_str(text: &str) -> Result<LoadedScenario, LoadError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| LoadError::Toml(e.to_string()))?;
    let section = |s: &str, k: &str, m: String| LoadError::validation(s, k, m);

    let m = file.ambient.dim;
    if file.ambient.p < 1 || file.ambient.q < 1 {
        return Err(section("ambient", "p/q", "metallic parameters require p, q >= 1".into()));
    }
    let params: Vec<&str> = file.immersion.params.iter().map(|s| s.as_str()).collect();
    let k = params.len();
    if k == 0 {
        return Err(section("immersion", "params", "at least one parameter required".into()));
    }
    if k >= m {
        return Err(section(
            "immersion",
            "params",
            format!("surface dimension {k} must be smaller than ambient dimension {m}"),
        ));
    }
    for (i, a) in params.iter().enumerate() {
        if params[..i].contains(a) {
            return Err(section("immersion", "params", format!("duplicate parameter \"{a}\"")));
        }
        if RESERVED.contains(a) {
            return Err(section("immersion", "params", format!("\"{a}\" is a reserved name")));
        }
    }
    for name in file.immersion.consts.keys() {
        if RESERVED.contains(&name.as_str()) || params.contains(&name.as_str()) {
            return Err(section(
                "immersion.consts",
                name,
                "collides with a parameter or reserved constant".into(),
            ));
        }
    }

    if file.immersion.components.len() != m {
        return Err(section(
            "immersion",
            "components",
            format!(
                "expected {m} components for ambient dimension {m}, found {}",
                file.immersion.components.len()
            ),
        ));
    }

    let mut const_names: Vec<&str> = file.immersion.consts.keys().map(|s| s.as_str()).collect();
    const_names.extend(AUTO_CONSTS);

    let parse_in = |section_name: &str, key: &str, src: &str| -> Result<Expr, LoadError> {
        parse(src, &params, &const_names)
            .map_err(|e| LoadError::validation(section_name, key, e.to_string()))
    };

    let components = file
        .immersion
        .components
        .iter()
        .enumerate()
        .map(|(i, src)| parse_in("immersion", &format!("components[{i}]"), src))
        .collect::<Result<Vec<_>, _>>()?;

    let mut domain = Vec::with_capacity(k);
    for pname in &file.immersion.params {
        let [lo, hi] = file.immersion.domain.get(pname).ok_or_else(|| {
            section("immersion", "domain", format!("missing interval for parameter \"{pname}\""))
        })?;
        if lo >= hi {
            return Err(section(
                "immersion",
                "domain",
                format!("interval for \"{pname}\" must satisfy lo < hi"),
            ));
        }
        domain.push((*lo, *hi));
    }
    for name in file.immersion.domain.keys() {
        if !file.immersion.params.contains(name) {
            return Err(section("immersion", "domain", format!("unknown parameter \"{name}\"")));
        }
    }
    for name in file.immersion.const_domains.keys() {
        if !file.immersion.consts.contains_key(name) {
            return Err(section(
                "immersion",
                "const_domains",
                format!("unknown constant \"{name}\""),
            ));
        }
    }

    let params_obj = metallic_number::<f64>(file.ambient.p, file.ambient.q);
    let structure = build_structure(&file.ambient.structure, m, params_obj)?;
    let structure_check = verify_structure(&structure, 64, STRUCTURE_CHECK_SEED);
    if !structure_check.pass {
        return Err(section(
            "ambient",
            "structure",
            format!(
                "structure fails the metallic identities (quadratic {:.3e}, compatibility {:.3e}, metric {:.3e})",
                structure_check.quadratic_residual,
                structure_check.compatibility_residual,
                structure_check.metric_residual
            ),
        ));
    }

    let mut distributions = Vec::with_capacity(file.distributions.len());
    for d in &file.distributions {
        if distributions.iter().any(|x: &DistributionSpec| x.name == d.name) {
            return Err(section("distributions", &d.name, "duplicate name".into()));
        }
        let mut fields = Vec::with_capacity(d.fields.len());
        for (fi, field) in d.fields.iter().enumerate() {
            if field.len() != k {
                return Err(section(
                    "distributions",
                    &d.name,
                    format!("field {fi} has {} coefficients, expected {k}", field.len()),
                ));
            }
            let coeffs = field
                .iter()
                .enumerate()
                .map(|(ci, src)| {
                    parse_in("distributions", &format!("{}[{fi}][{ci}]", d.name), src)
                })
                .collect::<Result<Vec<_>, _>>()?;
            fields.push(coeffs);
        }
        distributions.push(DistributionSpec {
            name: d.name.clone(),
            fields,
        });
    }

    if file.sampling.count == 0 {
        return Err(section("sampling", "count", "must be at least 1".into()));
    }

    let checks = match &file.checks {
        None => CheckId::ALL.to_vec(),
        Some(ChecksSection { ids: ChecksIds::Keyword(word) }) => {
            if word == "all" {
                CheckId::ALL.to_vec()
            } else {
                return Err(section("checks", "ids", format!("unknown keyword \"{word}\"")));
            }
        }
        Some(ChecksSection { ids: ChecksIds::List(list) }) => list
            .iter()
            .map(|s| {
                CheckId::parse(s)
                    .ok_or_else(|| section("checks", "ids", format!("unknown check id \"{s}\"")))
            })
            .collect::<Result<Vec<_>, _>>()?,
    };

    let reference = file
        .reference
        .iter()
        .map(|r| {
            let expr = parse(&r.expr, &[], &const_names)
                .map_err(|e| LoadError::validation("reference", &r.label, e.to_string()))?;
            if expr.contains_var() {
                return Err(LoadError::validation(
                    "reference",
                    &r.label,
                    "reference forms may only use constants",
                ));
            }
            Ok(ReferenceForm {
                label: r.label.clone(),
                expr,
                source: r.expr.clone(),
                abs: r.abs,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let scenario = ImmersionScenario {
        name: file.name,
        param_names: file.immersion.params,
        extra_consts: file.immersion.consts,
        components,
        structure,
        distributions,
        domain,
        sampling: Sampling {
            count: file.sampling.count,
            seed: file.sampling.seed,
        },
    };

    Ok(LoadedScenario {
        scenario,
        description: file.description.unwrap_or_default(),
        checks,
        const_domains: file
            .immersion
            .const_domains
            .into_iter()
            .map(|(k, [lo, hi])| (k, (lo, hi)))
            .collect(),
        reference,
        structure_check,
    })
}

/// Parses a comma-separated sigma/sigma_bar pattern.
pub fn parse_pattern(text: &str) -> Result<Vec<AxisRoot>, String> {
    text.split(',')
        .map(|axis| match axis.trim() {
            "sigma" => Ok(AxisRoot::Sigma),
            "sigma_bar" => Ok(AxisRoot::SigmaBar),
            other => Err(format!("unknown axis value \"{other}\" (want sigma or sigma_bar)")),
        })
        .collect()
}

fn build_structure(
    spec: &StructureSection,
    dim: usize,
    params: metallic_core::MetallicParams64,
) -> Result<StructureOp<f64>, LoadError> {
    let declared = [
        spec.pattern.is_some(),
        spec.matrix.is_some(),
        spec.product.is_some(),
    ]
    .iter()
    .filter(|b| **b)
    .count();
    if declared != 1 {
        return Err(LoadError::validation(
            "ambient.structure",
            "pattern/matrix/product",
            "exactly one of pattern, matrix, or product must be given",
        ));
    }
    if let Some(pattern) = &spec.pattern {
        if pattern.len() != dim {
            return Err(LoadError::validation(
                "ambient.structure",
                "pattern",
                format!("pattern length {} != ambient dim {dim}", pattern.len()),
            ));
        }
        let axes = parse_pattern(&pattern.join(","))
            .map_err(|e| LoadError::validation("ambient.structure", "pattern", e))?;
        return Ok(diagonal_structure(&axes, params));
    }
    if let Some(rows) = &spec.matrix {
        let mat = matrix_from_rows(rows, dim, "matrix")?;
        return Ok(StructureOp::custom(mat, params));
    }
    let product = spec.product.as_ref().unwrap();
    let mat = matrix_from_rows(&product.matrix, dim, "product.matrix")?;
    let sign = match product.sign.as_str() {
        "+" => Sign::Plus,
        "-" => Sign::Minus,
        other => {
            return Err(LoadError::validation(
                "ambient.structure",
                "product.sign",
                format!("expected \"+\" or \"-\", found \"{other}\""),
            ))
        }
    };
    from_product_matrix(mat, params, sign)
        .map_err(|e| LoadError::validation("ambient.structure", "product", e.to_string()))
}

fn matrix_from_rows(rows: &[Vec<f64>], dim: usize, key: &str) -> Result<Mat64, LoadError> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(LoadError::validation(
            "ambient.structure",
            key,
            format!("matrix must be {dim} x {dim}"),
        ));
    }
    Ok(Mat64::from_rows(rows))
}
