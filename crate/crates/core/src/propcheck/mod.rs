//! Registry of numerical identity checks: covariant derivatives of T, N, t,
//! n, Lie brackets, and every structural relation the engine can verify as a
//! residual at sampled points.
//!
//! Check IDs are stable strings used by the CLI `--checks` flag and in JSON
//! reports. Tolerances come in two tiers: 1e-10 for pointwise algebraic
//! identities and 1e-8 for identities one jet-composition deep (connections),
//! with tighter values where the relation is exact linear algebra.

mod engine;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exprdsl::Expr;
use crate::geometry::fields::CoefField;
use crate::geometry::ImmersionScenario;
use crate::metallic::MetallicParams;
use crate::scalar::{lit, Real};

pub use engine::SuiteContext;

/// Stable identifiers for every check in the registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CheckId {
    E7Sym,
    E8Adj,
    E99,
    E100,
    E9E10Product,
    E12Shape,
    E16NablaTSym,
    E17i,
    E17ii,
    E18i,
    E18ii,
    E19Duality,
    E20BracketT,
    E21BracketN,
    E26,
    E27,
    E28,
    E28Recovery,
    E29Deriv,
    E30DthetaClosed,
    E31AntiinvShape,
    E32NablaSym,
    E33ShapeComm,
    E34Equiv,
    E35Eigen,
    DthetaIntegrable,
    DperpIntegrable,
    MixedGeodesic,
    TotallyGeodesicVanish,
}

impl CheckId {
    pub const ALL: [CheckId; 29] = [
        CheckId::E7Sym,
        CheckId::E8Adj,
        CheckId::E99,
        CheckId::E100,
        CheckId::E9E10Product,
        CheckId::E12Shape,
        CheckId::E16NablaTSym,
        CheckId::E17i,
        CheckId::E17ii,
        CheckId::E18i,
        CheckId::E18ii,
        CheckId::E19Duality,
        CheckId::E20BracketT,
        CheckId::E21BracketN,
        CheckId::E26,
        CheckId::E27,
        CheckId::E28,
        CheckId::E28Recovery,
        CheckId::E29Deriv,
        CheckId::E30DthetaClosed,
        CheckId::E31AntiinvShape,
        CheckId::E32NablaSym,
        CheckId::E33ShapeComm,
        CheckId::E34Equiv,
        CheckId::E35Eigen,
        CheckId::DthetaIntegrable,
        CheckId::DperpIntegrable,
        CheckId::MixedGeodesic,
        CheckId::TotallyGeodesicVanish,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckId::E7Sym => "E7_SYM",
            CheckId::E8Adj => "E8_ADJ",
            CheckId::E99 => "E99",
            CheckId::E100 => "E100",
            CheckId::E9E10Product => "E9E10_PRODUCT",
            CheckId::E12Shape => "E12_SHAPE",
            CheckId::E16NablaTSym => "E16_NABLA_T_SYM",
            CheckId::E17i => "E17i",
            CheckId::E17ii => "E17ii",
            CheckId::E18i => "E18i",
            CheckId::E18ii => "E18ii",
            CheckId::E19Duality => "E19_DUALITY",
            CheckId::E20BracketT => "E20_BRACKET_T",
            CheckId::E21BracketN => "E21_BRACKET_N",
            CheckId::E26 => "E26",
            CheckId::E27 => "E27",
            CheckId::E28 => "E28",
            CheckId::E28Recovery => "E28_RECOVERY",
            CheckId::E29Deriv => "E29_DERIV",
            CheckId::E30DthetaClosed => "E30_DTHETA_CLOSED",
            CheckId::E31AntiinvShape => "E31_ANTIINV_SHAPE",
            CheckId::E32NablaSym => "E32_NABLA_SYM",
            CheckId::E33ShapeComm => "E33_SHAPE_COMM",
            CheckId::E34Equiv => "E34_EQUIV",
            CheckId::E35Eigen => "E35_EIGEN",
            CheckId::DthetaIntegrable => "DTHETA_INTEGRABLE",
            CheckId::DperpIntegrable => "DPERP_INTEGRABLE",
            CheckId::MixedGeodesic => "MIXED_GEODESIC",
            CheckId::TotallyGeodesicVanish => "TOTALLY_GEODESIC_VANISH",
        }
    }

    pub fn parse(s: &str) -> Option<CheckId> {
        CheckId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
    }

    /// Residual tolerance of the check (f64 scale).
    pub fn tolerance(self) -> f64 {
        match self {
            CheckId::E7Sym | CheckId::E8Adj => 1e-12,
            CheckId::E99
            | CheckId::E100
            | CheckId::E9E10Product
            | CheckId::E12Shape
            | CheckId::E16NablaTSym
            | CheckId::E26
            | CheckId::E27
            | CheckId::E28
            | CheckId::E28Recovery
            | CheckId::E31AntiinvShape => 1e-10,
            CheckId::E33ShapeComm | CheckId::TotallyGeodesicVanish => 1e-9,
            _ => 1e-8,
        }
    }

    /// What the check verifies, as a formula over the engine's operators.
    pub fn description(self) -> &'static str {
        match self {
            CheckId::E7Sym => "g-symmetry of T and of n: <TX,Y> = <X,TY>, <nU,V> = <U,nV>",
            CheckId::E8Adj => "adjointness of N and t: <NX,U> = <X,tU>",
            CheckId::E99 => "T^2 X = pTX + qX - tNX and pNX = NTX + nNX",
            CheckId::E100 => "n^2 V = pnV + qV - NtV and ptV = TtV + tnV",
            CheckId::E9E10Product => {
                "product split: T = (p/2)I +/- a f, N = +/- a w, t = +/- a B, n = (p/2)I +/- a C with a = (2s-p)/2"
            }
            CheckId::E12Shape => "<h(X,Y),V> = <A_V X, Y>",
            CheckId::E16NablaTSym => "<(nabla_X T)Y, Z> = <Y, (nabla_X T)Z>",
            CheckId::E17i => "(nabla_X T)Y = A_{NY} X + t h(X,Y)",
            CheckId::E17ii => "(nabla_X N)Y = n h(X,Y) - h(X,TY)",
            CheckId::E18i => "(nabla_X t)V = A_{nV} X - T A_V X",
            CheckId::E18ii => "(nabla_X n)V = -h(X,tV) - N A_V X",
            CheckId::E19Duality => "<(nabla_X N)Y, V> = <(nabla_X t)V, Y>",
            CheckId::E20BracketT => "T([X,Y]) = nabla_X TY - nabla_Y TX - A_{NY} X + A_{NX} Y",
            CheckId::E21BracketN => {
                "N([X,Y]) = h(X,TY) - h(TX,Y) + nabla-perp_X NY - nabla-perp_Y NX"
            }
            CheckId::E26 => "<TP1X,TP1Y> = cos^2(theta)[p<TP1X,P1Y> + q<P1X,P1Y>]",
            CheckId::E27 => "<NX,NY> = sin^2(theta)[p<TP1X,P1Y> + q<P1X,P1Y>] on the slant side",
            CheckId::E28 => "(TP1)^2 = cos^2(theta)(p TP1 + q I) on the slant distribution",
            CheckId::E28Recovery => "X = (1/(q cos^2 theta)) T(TX - p cos^2(theta) X) on the slant distribution",
            CheckId::E29Deriv => "nabla((TP1)^2) = p cos^2(theta) nabla(TP1)",
            CheckId::E30DthetaClosed => {
                "nabla_X TY - nabla_Y TX - A_{NY} X + A_{NX} Y stays in the slant distribution"
            }
            CheckId::E31AntiinvShape => "A_{NZ} W = 0 for Z, W in the anti-invariant distribution",
            CheckId::E32NablaSym => "(nabla_Z T)W = (nabla_W T)Z on the anti-invariant distribution",
            CheckId::E33ShapeComm => "A_{nV} X = T A_V X = A_V T X, equivalent to nabla N = nabla t = 0",
            CheckId::E34Equiv => "<A_{nV}X - TA_V X, Y> = <A_{nV}Y - A_V TY, X>",
            CheckId::E35Eigen => {
                "when nabla N = 0 on the slant side, h(X,Y) is an eigenvector of n with the closed-form eigenvalues"
            }
            CheckId::DthetaIntegrable => "[X,Y] stays in the slant distribution",
            CheckId::DperpIntegrable => "[Z,W] stays in the anti-invariant distribution",
            CheckId::MixedGeodesic => {
                "when nabla N vanishes against the anti-invariant side, the mixed block of h vanishes"
            }
            CheckId::TotallyGeodesicVanish => {
                "h = 0 forces all four covariant derivatives of T, N, t, n to vanish"
            }
        }
    }
}

impl Serialize for CheckId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "reason")]
pub enum CheckOutcome {
    Pass,
    Fail,
    Skipped(String),
}

/// Worst offending sample of a check run.
#[derive(Debug, Clone, Serialize)]
pub struct WorstSample<T> {
    pub sample_index: usize,
    pub point: Vec<T>,
    pub detail: String,
}

/// Per-identity residual statistics over sampled points.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport<T> {
    pub check: CheckId,
    pub scenario: String,
    pub samples: usize,
    pub max_residual: T,
    pub mean_residual: T,
    pub tolerance: T,
    pub outcome: CheckOutcome,
    pub worst: Option<WorstSample<T>>,
}

impl<T: Real> CheckReport<T> {
    pub fn passed(&self) -> bool {
        self.outcome == CheckOutcome::Pass
    }

    pub fn skipped(&self) -> bool {
        matches!(self.outcome, CheckOutcome::Skipped(_))
    }
}

/// Closed-form eigenvalues of n on h-eigenvectors:
/// lambda = (p cos^2(theta) +/- cos(theta) sqrt(p^2 cos^2(theta) + 4q)) / 2,
/// the roots of x^2 - p cos^2(theta) x - q cos^2(theta).
pub fn shape_eigenvalues<T: Real>(params: &MetallicParams<T>, cos_theta: T) -> (T, T) {
    let p = params.p_real();
    let q = params.q_real();
    let c = cos_theta;
    let pc2 = p * c * c;
    let disc = c * (p * p * c * c + lit::<T>(4.0) * q).sqrt();
    let half = lit::<T>(0.5);
    ((pc2 + disc) * half, (pc2 - disc) * half)
}

/// Coordinate Lie bracket of two coefficient-expression fields at a point:
/// [X,Y]^a = sum_i (X^i dY^a/du^i - Y^i dX^a/du^i), exact via jets.
pub fn lie_bracket<T: Real>(
    scn: &ImmersionScenario<T>,
    x_field: &[Expr],
    y_field: &[Expr],
    point: &[T],
) -> Result<Vec<T>> {
    let consts = scn.const_map();
    let cx = CoefField::eval(x_field, point, &consts)?;
    let cy = CoefField::eval(y_field, point, &consts)?;
    Ok(cx.bracket(&cy))
}

/// Covariant derivative of the tangent-to-tangent operator T:
/// (nabla_X T)Y = nabla_X(TY) - T(nabla_X Y), in coordinate-frame coefficients.
pub fn cov_deriv_tt<T: Real>(
    scn: &ImmersionScenario<T>,
    x_field: &[Expr],
    y_field: &[Expr],
    point: &[T],
) -> Result<Vec<T>> {
    let ctx = engine::PointCtx::new(scn, point)?;
    let consts = scn.const_map();
    let cx = CoefField::eval(x_field, point, &consts)?;
    let cy = CoefField::eval(y_field, point, &consts)?;
    let amb = ctx.cov_t(&cx.values(), &cy);
    Ok(ctx.frame.geom.tangent_coords(&amb))
}

/// Covariant derivative of the tangent-to-normal operator N:
/// (nabla_X N)Y = nabla-perp_X(NY) - N(nabla_X Y), in the normal basis.
pub fn cov_deriv_nt<T: Real>(
    scn: &ImmersionScenario<T>,
    x_field: &[Expr],
    y_field: &[Expr],
    point: &[T],
) -> Result<Vec<T>> {
    let ctx = engine::PointCtx::new(scn, point)?;
    let consts = scn.const_map();
    let cx = CoefField::eval(x_field, point, &consts)?;
    let cy = CoefField::eval(y_field, point, &consts)?;
    let amb = ctx.cov_n(&cx.values(), &cy);
    Ok(ctx.frame.geom.normal_coords(&amb))
}

/// Covariant derivative of the normal-to-tangent operator t:
/// (nabla_X t)V = nabla_X(tV) - t(nabla-perp_X V) for an ambient-valued
/// normal expression field V, in coordinate-frame coefficients.
pub fn cov_deriv_tn<T: Real>(
    scn: &ImmersionScenario<T>,
    x_field: &[Expr],
    v_field: &[Expr],
    point: &[T],
) -> Result<Vec<T>> {
    let ctx = engine::PointCtx::new(scn, point)?;
    let consts = scn.const_map();
    let cx = CoefField::eval(x_field, point, &consts)?;
    let vf = ctx.normal_expr_field(v_field, &consts)?;
    let amb = ctx.cov_small_t(&cx.values(), &vf);
    Ok(ctx.frame.geom.tangent_coords(&amb))
}

/// Covariant derivative of the normal-to-normal operator n:
/// (nabla_X n)V = nabla-perp_X(nV) - n(nabla-perp_X V), in the normal basis.
pub fn cov_deriv_nn<T: Real>(
    scn: &ImmersionScenario<T>,
    x_field: &[Expr],
    v_field: &[Expr],
    point: &[T],
) -> Result<Vec<T>> {
    let ctx = engine::PointCtx::new(scn, point)?;
    let consts = scn.const_map();
    let cx = CoefField::eval(x_field, point, &consts)?;
    let vf = ctx.normal_expr_field(v_field, &consts)?;
    let amb = ctx.cov_small_n(&cx.values(), &vf);
    Ok(ctx.frame.geom.normal_coords(&amb))
}

/// Runs one check. Structural preconditions that fail produce
/// [`Error::PreconditionNotMet`]; vacuous conditional hypotheses produce an
/// `Ok` report with a `Skipped` outcome.
pub fn run_check<T: Real>(
    id: CheckId,
    scn: &ImmersionScenario<T>,
    samples: usize,
    seed: u64,
) -> Result<CheckReport<T>> {
    let ctx = SuiteContext::new(scn)?;
    ctx.run_check(id, samples, seed)
}

/// Runs the requested checks (deduplicated, ordered by ID), mapping
/// precondition failures to skipped reports.
pub fn run_suite<T: Real>(
    scn: &ImmersionScenario<T>,
    ids: &[CheckId],
    samples: usize,
    seed: u64,
) -> Result<Vec<CheckReport<T>>> {
    let ctx = SuiteContext::new(scn)?;
    let mut sorted: Vec<CheckId> = ids.to_vec();
    sorted.sort();
    sorted.dedup();
    let mut out = Vec::with_capacity(sorted.len());
    for id in sorted {
        match ctx.run_check(id, samples, seed) {
            Ok(report) => out.push(report),
            Err(Error::PreconditionNotMet { reason, .. }) => out.push(CheckReport {
                check: id,
                scenario: scn.name.clone(),
                samples: 0,
                max_residual: T::zero(),
                mean_residual: T::zero(),
                tolerance: lit(id.tolerance()),
                outcome: CheckOutcome::Skipped(reason),
                worst: None,
            }),
            Err(other) => return Err(other),
        }
    }
    Ok(out)
}
