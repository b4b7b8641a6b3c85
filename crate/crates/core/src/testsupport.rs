//! Scenario builders shared by the unit tests of several modules. These
//! construct the worked examples through the expression parser, so they also
//! exercise the DSL end to end.

use crate::exprdsl::{parse, ConstMap, Expr};
use crate::geometry::{DistributionSpec, ImmersionScenario, Sampling};
use crate::metallic::{diagonal_structure, metallic_number, AxisRoot};

use AxisRoot::{Sigma, SigmaBar};

fn parse_all(sources: &[&str], vars: &[&str], consts: &[&str]) -> Vec<Expr> {
    sources
        .iter()
        .map(|s| parse(s, vars, consts).unwrap())
        .collect()
}

fn dist(name: &str, fields: &[&[&str]], vars: &[&str], consts: &[&str]) -> DistributionSpec {
    DistributionSpec {
        name: name.to_string(),
        fields: fields.iter().map(|f| parse_all(f, vars, consts)).collect(),
    }
}

/// The 4-dimensional worked immersion
/// f(u, v) = (u cos t, u sin t, v, (sigma / sqrt(q)) v) with a diagonal
/// metallic structure chosen by `pattern`.
pub fn example1_with(p: u32, q: u32, t: f64, pattern: [AxisRoot; 4]) -> ImmersionScenario<f64> {
    let vars = ["u", "v"];
    let consts = ["t", "p", "q"];
    let mut extra = ConstMap::new();
    extra.insert("t".to_string(), t);
    ImmersionScenario {
        name: "example1".into(),
        param_names: vec!["u".into(), "v".into()],
        extra_consts: extra,
        components: parse_all(
            &["u*cos(t)", "u*sin(t)", "v", "(sigma/sqrt(q))*v"],
            &vars,
            &consts,
        ),
        structure: diagonal_structure(&pattern, metallic_number(p, q)),
        distributions: vec![
            dist("Dtheta", &[&["1", "0"]], &vars, &consts),
            dist("Dperp", &[&["0", "1"]], &vars, &consts),
        ],
        domain: vec![(0.5, 2.0), (-1.0, 1.0)],
        sampling: Sampling { count: 12, seed: 42 },
    }
}

pub fn example1(p: u32, q: u32, t: f64) -> ImmersionScenario<f64> {
    example1_with(p, q, t, [Sigma, SigmaBar, Sigma, SigmaBar])
}

/// Same immersion with the alternative structure that makes the slant
/// distribution invariant (slant angle zero).
pub fn example1_jbar(p: u32, q: u32, t: f64) -> ImmersionScenario<f64> {
    let mut scn = example1_with(p, q, t, [Sigma, Sigma, Sigma, SigmaBar]);
    scn.name = "example1-jbar".into();
    scn
}

/// The 7-dimensional worked immersion with a 2-dimensional anti-invariant
/// distribution.
pub fn example2_with(p: u32, q: u32, t: f64, pattern: [AxisRoot; 7]) -> ImmersionScenario<f64> {
    let vars = ["u", "v", "w"];
    let consts = ["t", "p", "q"];
    let mut extra = ConstMap::new();
    extra.insert("t".to_string(), t);
    ImmersionScenario {
        name: "example2".into(),
        param_names: vec!["u".into(), "v".into(), "w".into()],
        extra_consts: extra,
        components: parse_all(
            &[
                "(1/sqrt(3))*u*cos(t)",
                "(1/sqrt(3))*u*sin(t)",
                "v",
                "(sigma/sqrt(q))*v",
                "(sqrt(q)/sigma)*w",
                "w",
                "(sqrt(2)/sqrt(3))*u",
            ],
            &vars,
            &consts,
        ),
        structure: diagonal_structure(&pattern, metallic_number(p, q)),
        distributions: vec![
            dist("Dtheta", &[&["1", "0", "0"]], &vars, &consts),
            dist(
                "Dperp",
                &[&["0", "1", "0"], &["0", "0", "1"]],
                &vars,
                &consts,
            ),
        ],
        domain: vec![(0.5, 2.0), (-1.0, 1.0), (-1.0, 1.0)],
        sampling: Sampling { count: 12, seed: 42 },
    }
}

pub fn example2(p: u32, q: u32, t: f64) -> ImmersionScenario<f64> {
    example2_with(
        p,
        q,
        t,
        [Sigma, SigmaBar, Sigma, SigmaBar, Sigma, SigmaBar, Sigma],
    )
}

pub fn example2_jbar(p: u32, q: u32, t: f64) -> ImmersionScenario<f64> {
    let mut scn = example2_with(
        p,
        q,
        t,
        [Sigma, Sigma, Sigma, SigmaBar, Sigma, SigmaBar, Sigma],
    );
    scn.name = "example2-jbar".into();
    scn
}

/// Curved scenario: a paraboloid graph in R^4, nonzero second fundamental
/// form, no declared distributions. Drives the connection checks.
pub fn paraboloid() -> ImmersionScenario<f64> {
    let vars = ["u", "v"];
    ImmersionScenario {
        name: "paraboloid".into(),
        param_names: vec!["u".into(), "v".into()],
        extra_consts: ConstMap::new(),
        components: parse_all(&["u", "v", "u^2+v^2", "0"], &vars, &[]),
        structure: diagonal_structure(
            &[Sigma, SigmaBar, Sigma, SigmaBar],
            metallic_number(1, 1),
        ),
        distributions: vec![],
        domain: vec![(-0.8, 0.8), (-0.8, 0.8)],
        sampling: Sampling { count: 12, seed: 42 },
    }
}

/// Linear graph immersion with constant components; totally geodesic and flat.
pub fn linear_graph() -> ImmersionScenario<f64> {
    let vars = ["u", "v"];
    ImmersionScenario {
        name: "linear-graph".into(),
        param_names: vec!["u".into(), "v".into()],
        extra_consts: ConstMap::new(),
        components: parse_all(&["u", "v", "0.5", "-1.5"], &vars, &[]),
        structure: diagonal_structure(
            &[Sigma, SigmaBar, Sigma, SigmaBar],
            metallic_number(1, 1),
        ),
        distributions: vec![],
        domain: vec![(-1.0, 1.0), (-1.0, 1.0)],
        sampling: Sampling { count: 8, seed: 42 },
    }
}

/// Example-1 immersion with the all-sigma structure J = sigma I (everything
/// invariant, N = 0).
pub fn example1_all_sigma(p: u32, q: u32, t: f64) -> ImmersionScenario<f64> {
    let mut scn = example1_with(p, q, t, [Sigma, Sigma, Sigma, Sigma]);
    scn.name = "example1-all-sigma".into();
    scn
}

/// A 3-surface in R^6 whose slant distribution is 2-dimensional: two copies
/// of the rotating plane share one slant angle, and the last direction is
/// anti-invariant. Exercises multi-rank distribution machinery.
pub fn two_dim_slant(p: u32, q: u32, t: f64) -> ImmersionScenario<f64> {
    let vars = ["u", "v", "w"];
    let consts = ["t", "p", "q"];
    let mut extra = ConstMap::new();
    extra.insert("t".to_string(), t);
    ImmersionScenario {
        name: "two-dim-slant".into(),
        param_names: vec!["u".into(), "v".into(), "w".into()],
        extra_consts: extra,
        components: parse_all(
            &[
                "u*cos(t)",
                "u*sin(t)",
                "v*cos(t)",
                "v*sin(t)",
                "w",
                "(sigma/sqrt(q))*w",
            ],
            &vars,
            &consts,
        ),
        structure: diagonal_structure(
            &[Sigma, SigmaBar, Sigma, SigmaBar, Sigma, SigmaBar],
            metallic_number(p, q),
        ),
        distributions: vec![
            dist("Dtheta", &[&["1", "0", "0"], &["0", "1", "0"]], &vars, &consts),
            dist("Dperp", &[&["0", "0", "1"]], &vars, &consts),
        ],
        domain: vec![(0.5, 2.0), (0.5, 2.0), (-1.0, 1.0)],
        sampling: Sampling { count: 12, seed: 42 },
    }
}
