//! Slant angles, the lambda criterion, hemi-slant classification, and the
//! decomposition of the normal bundle.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exprdsl::ConstMap;
use crate::geometry::{distribution_span, DistributionSpec, ImmersionScenario, PointGeometry};
use crate::metallic::StructureOp;
use crate::numlin::{dot, gram_schmidt, norm, sub, Subspace, RANK_TOL};
use crate::sampling::{random_coords, rng_for};
use crate::scalar::{lit, Real};

/// Angle-constancy and snap tolerance (radians) for jet-exact pipelines.
pub const ANGLE_TOL: f64 = 1e-8;
/// Residual below which T is considered to vanish on a distribution.
pub const ANTI_INVARIANT_TOL: f64 = 1e-8;
/// Mutual g-orthogonality tolerance for declared distribution pairs.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;

/// One slant-angle measurement: the angle between J X and the distribution's
/// span at a point.
#[derive(Debug, Clone, Serialize)]
pub struct SlantSample<T> {
    pub point: Vec<T>,
    /// Direction in coordinate-frame coefficients.
    pub direction: Vec<T>,
    /// ||proj_D(J X)|| / ||J X||, in [0, 1].
    pub cos_theta: T,
    /// atan2-based angle in [0, pi/2]; accurate at both ends of the range.
    pub theta: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SlantVerdict {
    /// Constant angle 0: J preserves the distribution.
    Invariant,
    /// Constant angle pi/2: J maps the distribution into the normal bundle.
    AntiInvariant,
    /// Constant angle strictly between 0 and pi/2.
    Slant,
    /// The angle varies beyond tolerance.
    NotSlant,
}

/// Aggregated slant diagnostics of one distribution over the sampling plan.
#[derive(Debug, Clone, Serialize)]
pub struct SlantReport<T> {
    pub distribution: String,
    pub samples: Vec<SlantSample<T>>,
    pub mean_theta: T,
    pub max_deviation: T,
    /// Least-squares fit of lambda in (P_D T)^2 X = lambda (p P_D T X + q X).
    pub lambda_fit: T,
    /// Max relative residual of the fitted relation over the spanning set.
    pub lambda_residual: T,
    /// |lambda_fit - cos^2(mean_theta)|; the two must agree for slant verdicts.
    pub lambda_vs_cos2: T,
    pub verdict: SlantVerdict,
}

/// Measures the angle between J X and the span of `dist` at `geom`'s point.
/// `x` is a coordinate-frame coefficient vector that must lie in the span.
pub fn slant_angle<T: Real>(
    geom: &PointGeometry<T>,
    j: &StructureOp<T>,
    dist: &DistributionSpec,
    consts: &ConstMap<T>,
    x: &[T],
) -> Result<SlantSample<T>> {
    let (_, span) = distribution_span(geom, dist, consts)?;
    let x_amb = geom.ambient_from_coords(x);
    let nx = norm(&x_amb);
    if nx == T::zero() {
        return Err(Error::NotInDistribution {
            name: dist.name.clone(),
            residual: f64::INFINITY,
        });
    }
    let residual = norm(&span.reject(&x_amb)) / nx;
    if residual > lit::<T>(1e-9) {
        return Err(Error::NotInDistribution {
            name: dist.name.clone(),
            residual: residual.to_f64().unwrap_or(f64::NAN),
        });
    }
    let jx = j.apply(&x_amb);
    let proj = span.project(&jx);
    let rej = sub(&jx, &proj);
    let (np, nr, nj) = (norm(&proj), norm(&rej), norm(&jx));
    let cos_theta = (np / nj).min(T::one()).max(T::zero());
    let theta = nr.atan2(np);
    Ok(SlantSample {
        point: geom.point.clone(),
        direction: x.to_vec(),
        cos_theta,
        theta,
    })
}

/// Accumulator for the lambda criterion (P_D T)^2 X = lambda (p P_D T X + q X):
/// a 1-D least-squares fit over spanning vectors, plus the worst relative
/// residual of the fitted relation.
struct LambdaFit<T> {
    num: T,
    den: T,
    pairs: Vec<(Vec<T>, Vec<T>, T)>, // (lhs, rhs, ||X||)
}

impl<T: Real> LambdaFit<T> {
    fn new() -> Self {
        LambdaFit {
            num: T::zero(),
            den: T::zero(),
            pairs: Vec::new(),
        }
    }

    fn accumulate(&mut self, j: &StructureOp<T>, span: &Subspace<T>) {
        let p = j.params.p_real();
        let q = j.params.q_real();
        for w in span.basis() {
            let pdt = span.project(&j.apply(w)); // (P_D T) X = P_D J X for X in D
            let pdt2 = span.project(&j.apply(&pdt));
            let mut rhs = crate::numlin::scale(&pdt, p);
            crate::numlin::axpy(&mut rhs, q, w);
            self.num += dot(&pdt2, &rhs);
            self.den += dot(&rhs, &rhs);
            self.pairs.push((pdt2, rhs, norm(w)));
        }
    }

    fn finish(self) -> (T, T) {
        if self.pairs.is_empty() || self.den == T::zero() {
            return (T::zero(), T::zero());
        }
        let lambda = self.num / self.den;
        let mut residual = T::zero();
        for (lhs, rhs, nx) in &self.pairs {
            let r: Vec<T> = lhs
                .iter()
                .zip(rhs)
                .map(|(&a, &b)| a - lambda * b)
                .collect();
            residual = residual.max(norm(&r) / *nx);
        }
        (lambda, residual)
    }
}

/// Fits lambda at a single point over the distribution's spanning set.
pub fn slant_criterion<T: Real>(
    geom: &PointGeometry<T>,
    j: &StructureOp<T>,
    dist: &DistributionSpec,
    consts: &ConstMap<T>,
) -> Result<(T, T)> {
    let (_, span) = distribution_span(geom, dist, consts)?;
    let mut fit = LambdaFit::new();
    fit.accumulate(j, &span);
    Ok(fit.finish())
}

/// Slant diagnostics of one distribution across the scenario's sampling plan:
/// spanning directions plus random in-distribution combinations at each point.
pub fn slant_report<T: Real>(
    scn: &ImmersionScenario<T>,
    dist: &DistributionSpec,
    dist_tag: u64,
) -> Result<SlantReport<T>> {
    let consts = scn.const_map();
    let points = scn.sample_points(scn.sampling.count, scn.sampling.seed);
    let mut rng = rng_for(scn.sampling.seed, 0x51A7 + dist_tag);
    let mut samples = Vec::new();
    let mut fit = LambdaFit::new();
    for pt in &points {
        let geom = scn.frame_at(pt)?;
        let (coord_vecs, span) = distribution_span(&geom, dist, &consts)?;
        fit.accumulate(&scn.structure, &span);
        let rank = coord_vecs.len();
        let mut directions: Vec<Vec<T>> = coord_vecs.clone();
        if rank > 1 {
            for _ in 0..2 {
                let c = random_coords::<T>(&mut rng, rank);
                let mut dir = vec![T::zero(); geom.dim()];
                for (ci, v) in c.iter().zip(&coord_vecs) {
                    for (d, &x) in dir.iter_mut().zip(v) {
                        *d += *ci * x;
                    }
                }
                directions.push(dir);
            }
        }
        for dir in directions {
            samples.push(slant_angle(&geom, &scn.structure, dist, &consts, &dir)?);
        }
    }
    let (lambda_fit, lambda_residual) = fit.finish();
    let count = lit::<T>(samples.len() as f64);
    let mean_theta = samples.iter().fold(T::zero(), |a, s| a + s.theta) / count;
    let max_deviation = samples
        .iter()
        .fold(T::zero(), |a, s| a.max((s.theta - mean_theta).abs()));
    let tol = lit::<T>(ANGLE_TOL);
    let verdict = if max_deviation >= tol {
        SlantVerdict::NotSlant
    } else if mean_theta < tol {
        SlantVerdict::Invariant
    } else if (T::FRAC_PI_2() - mean_theta) < tol {
        SlantVerdict::AntiInvariant
    } else {
        SlantVerdict::Slant
    };
    let cos2 = mean_theta.cos() * mean_theta.cos();
    Ok(SlantReport {
        distribution: dist.name.clone(),
        samples,
        mean_theta,
        max_deviation,
        lambda_fit,
        lambda_residual,
        lambda_vs_cos2: (lambda_fit - cos2).abs(),
        verdict,
    })
}

/// Classification cases of the hemi-slant decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    Invariant,
    AntiInvariant,
    Slant,
    SemiInvariant,
    ProperHemiSlant,
    BiSlant,
    Unclassified,
}

impl Classification {
    /// True when the tangent bundle splits into a constant-angle slant
    /// distribution plus an anti-invariant one (the cases where the
    /// hemi-slant identity checks apply).
    pub fn is_hemi_slant_family(self) -> bool {
        !matches!(self, Classification::BiSlant | Classification::Unclassified)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Invariant => "invariant",
            Classification::AntiInvariant => "anti-invariant",
            Classification::Slant => "slant",
            Classification::SemiInvariant => "semi-invariant",
            Classification::ProperHemiSlant => "proper hemi-slant",
            Classification::BiSlant => "bi-slant",
            Classification::Unclassified => "unclassified",
        }
    }
}

/// Final verdict for a scenario.
#[derive(Debug, Clone, Serialize)]
pub struct HemiSlantVerdict<T> {
    pub classification: Classification,
    /// Slant angle of the slant distribution, snapped to 0 or pi/2 when
    /// within [`ANGLE_TOL`].
    pub theta: Option<T>,
    /// (dim D_theta, dim D_perp, dim mu).
    pub dims: (usize, usize, usize),
}

/// Decomposition of the normal bundle into N(D_theta), N(D_perp), and the
/// invariant complement mu, with the residuals that certify it.
#[derive(Debug, Clone, Serialize)]
pub struct NormalSplit<T> {
    pub dim_n_theta: usize,
    pub dim_n_perp: usize,
    pub dim_mu: usize,
    /// max |<N X, N Z>| / (||N X|| ||N Z||) across the two spanning sets.
    pub cross_orthogonality_residual: T,
    /// max component of n(mu) outside mu, relative to ||J basis vector||.
    pub mu_invariance_residual: T,
}

/// Everything `classify` learns about a scenario.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioClassification<T> {
    pub verdict: HemiSlantVerdict<T>,
    /// Name of the distribution playing the slant role, when roles resolved.
    pub theta_distribution: Option<String>,
    pub perp_distribution: Option<String>,
    pub slant_reports: Vec<SlantReport<T>>,
    pub normal_split: Option<NormalSplit<T>>,
    pub diagnostics: Vec<String>,
}

impl<T: Real> ScenarioClassification<T> {
    fn unclassified(diagnostics: Vec<String>, reports: Vec<SlantReport<T>>) -> Self {
        ScenarioClassification {
            verdict: HemiSlantVerdict {
                classification: Classification::Unclassified,
                theta: None,
                dims: (0, 0, 0),
            },
            theta_distribution: None,
            perp_distribution: None,
            slant_reports: reports,
            normal_split: None,
            diagnostics,
        }
    }

    pub fn report_for(&self, name: &str) -> Option<&SlantReport<T>> {
        self.slant_reports.iter().find(|r| r.distribution == name)
    }
}

fn snap_theta<T: Real>(theta: T) -> T {
    let tol = lit::<T>(ANGLE_TOL);
    if theta < tol {
        T::zero()
    } else if (T::FRAC_PI_2() - theta) < tol {
        T::FRAC_PI_2()
    } else {
        theta
    }
}

/// max ||tangential part of J w|| / ||w|| over the spanning set: zero exactly
/// when J maps the distribution into the normal bundle.
fn anti_invariance_residual<T: Real>(
    geom: &PointGeometry<T>,
    j: &StructureOp<T>,
    span: &Subspace<T>,
) -> T {
    let mut r = T::zero();
    for w in span.basis() {
        let tx = geom.tangent.project(&j.apply(w));
        r = r.max(norm(&tx) / norm(w));
    }
    r
}

/// Classifies a scenario that declares exactly two distributions: checks the
/// g-orthogonal splitting of TM, assigns slant / anti-invariant roles, and
/// maps the constant angle onto the classification cases. Structural or
/// numerical failures yield `Unclassified` with diagnostics rather than an
/// error.
pub fn classify<T: Real>(scn: &ImmersionScenario<T>) -> Result<ScenarioClassification<T>> {
    if scn.distributions.len() != 2 {
        return Ok(ScenarioClassification::unclassified(
            vec![format!(
                "classification requires exactly two declared distributions, found {}",
                scn.distributions.len()
            )],
            vec![],
        ));
    }
    let consts = scn.const_map();
    let points = scn.sample_points(scn.sampling.count, scn.sampling.seed);
    let k = scn.dim();
    let mut diagnostics = Vec::new();

    let mut max_cross = T::zero();
    let mut anti = [T::zero(), T::zero()];
    let mut dims = [0usize, 0usize];
    for (pi, pt) in points.iter().enumerate() {
        let geom = scn.frame_at(pt)?;
        let mut spans = Vec::new();
        let mut ambient_all = Vec::new();
        let mut failed = false;
        for d in &scn.distributions {
            match distribution_span(&geom, d, &consts) {
                Ok((_, span)) => {
                    ambient_all.extend(span.basis().iter().cloned());
                    spans.push(span);
                }
                Err(e) => {
                    diagnostics.push(e.to_string());
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            return Ok(ScenarioClassification::unclassified(diagnostics, vec![]));
        }
        if pi == 0 {
            dims = [spans[0].rank(), spans[1].rank()];
            if dims[0] + dims[1] != k {
                diagnostics.push(format!(
                    "declared distributions span dimension {} + {} != surface dimension {}",
                    dims[0], dims[1], k
                ));
                return Ok(ScenarioClassification::unclassified(diagnostics, vec![]));
            }
        }
        for a in spans[0].basis() {
            for b in spans[1].basis() {
                max_cross = max_cross.max(dot(a, b).abs());
            }
        }
        let combined = gram_schmidt(&ambient_all, lit::<T>(RANK_TOL));
        if combined.rank() != k {
            diagnostics.push(format!(
                "distributions do not span the tangent space at point index {pi}"
            ));
            return Ok(ScenarioClassification::unclassified(diagnostics, vec![]));
        }
        for (i, span) in spans.iter().enumerate() {
            anti[i] = anti[i].max(anti_invariance_residual(&geom, &scn.structure, span));
        }
    }
    if max_cross > lit::<T>(ORTHOGONALITY_TOL) {
        diagnostics.push(format!(
            "declared distributions are not g-orthogonal (max residual {:.3e})",
            max_cross.to_f64().unwrap_or(f64::NAN)
        ));
        return Ok(ScenarioClassification::unclassified(diagnostics, vec![]));
    }

    let anti_tol = lit::<T>(ANTI_INVARIANT_TOL);
    // Prefer the declaration order: second distribution is the anti-invariant
    // candidate when both qualify.
    let (theta_idx, perp_idx) = if anti[1] < anti_tol || dims[1] == 0 {
        (0usize, 1usize)
    } else if anti[0] < anti_tol || dims[0] == 0 {
        (1usize, 0usize)
    } else {
        // No anti-invariant distribution: bi-slant when both angles are
        // constant and proper.
        let r0 = slant_report(scn, &scn.distributions[0], 0)?;
        let r1 = slant_report(scn, &scn.distributions[1], 1)?;
        let both_slant =
            r0.verdict == SlantVerdict::Slant && r1.verdict == SlantVerdict::Slant;
        if both_slant {
            let theta = snap_theta(r0.mean_theta);
            let split = aggregate_normal_split(scn, 0, 1, &consts, &points).ok();
            let dim_mu = split.as_ref().map(|s| s.dim_mu).unwrap_or(0);
            return Ok(ScenarioClassification {
                verdict: HemiSlantVerdict {
                    classification: Classification::BiSlant,
                    theta: Some(theta),
                    dims: (dims[0], dims[1], dim_mu),
                },
                theta_distribution: Some(scn.distributions[0].name.clone()),
                perp_distribution: Some(scn.distributions[1].name.clone()),
                slant_reports: vec![r0, r1],
                normal_split: None,
                diagnostics: vec![
                    "both distributions carry proper slant angles; identities restricted to hemi-slant splittings are skipped".into(),
                ],
            });
        }
        diagnostics.push(format!(
            "neither distribution is anti-invariant (residuals {:.3e}, {:.3e}) and the pair is not bi-slant",
            anti[0].to_f64().unwrap_or(f64::NAN),
            anti[1].to_f64().unwrap_or(f64::NAN)
        ));
        return Ok(ScenarioClassification::unclassified(
            diagnostics,
            vec![r0, r1],
        ));
    };

    let d_theta = &scn.distributions[theta_idx];
    let d_perp = &scn.distributions[perp_idx];
    let (dim_theta, dim_perp) = (dims[theta_idx], dims[perp_idx]);

    let mut reports = Vec::new();
    let theta = if dim_theta > 0 {
        let report = slant_report(scn, d_theta, theta_idx as u64)?;
        if report.verdict == SlantVerdict::NotSlant {
            diagnostics.push(format!(
                "slant angle of \"{}\" varies by {:.3e} rad across samples",
                d_theta.name,
                report.max_deviation.to_f64().unwrap_or(f64::NAN)
            ));
            reports.push(report);
            return Ok(ScenarioClassification::unclassified(diagnostics, reports));
        }
        if report.verdict == SlantVerdict::Slant
            && report.lambda_vs_cos2 > lit::<T>(ANGLE_TOL)
        {
            diagnostics.push(format!(
                "lambda fit {:.12} disagrees with cos^2(theta) by {:.3e}",
                report.lambda_fit.to_f64().unwrap_or(f64::NAN),
                report.lambda_vs_cos2.to_f64().unwrap_or(f64::NAN)
            ));
            reports.push(report);
            return Ok(ScenarioClassification::unclassified(diagnostics, reports));
        }
        let theta = snap_theta(report.mean_theta);
        reports.push(report);
        Some(theta)
    } else {
        None
    };
    if dim_perp > 0 {
        reports.push(slant_report(scn, d_perp, perp_idx as u64)?);
    }

    let split = aggregate_normal_split(scn, theta_idx, perp_idx, &consts, &points)?;

    let classification = match theta {
        None => Classification::AntiInvariant,
        Some(th) if th == T::FRAC_PI_2() => Classification::AntiInvariant,
        Some(th) if th == T::zero() && dim_perp == 0 => Classification::Invariant,
        Some(th) if th == T::zero() => Classification::SemiInvariant,
        Some(_) if dim_perp == 0 => Classification::Slant,
        Some(_) => Classification::ProperHemiSlant,
    };

    Ok(ScenarioClassification {
        verdict: HemiSlantVerdict {
            classification,
            theta,
            dims: (dim_theta, dim_perp, split.dim_mu),
        },
        theta_distribution: Some(d_theta.name.clone()),
        perp_distribution: Some(d_perp.name.clone()),
        slant_reports: reports,
        normal_split: Some(split),
        diagnostics,
    })
}

/// Builds the normal-bundle decomposition at one point.
pub fn normal_split<T: Real>(
    geom: &PointGeometry<T>,
    j: &StructureOp<T>,
    d_theta: &DistributionSpec,
    d_perp: &DistributionSpec,
    consts: &ConstMap<T>,
) -> Result<NormalSplit<T>> {
    // N-images of an invariant direction vanish up to rounding; filter them
    // against the scale of J w so the span rank is not driven by noise.
    let n_images = |d: &DistributionSpec| -> Result<Vec<Vec<T>>> {
        let (_, span) = distribution_span(geom, d, consts)?;
        Ok(span
            .basis()
            .iter()
            .filter_map(|w| {
                let jw = j.apply(w);
                let img = geom.normal.project(&jw);
                (norm(&img) > lit::<T>(RANK_TOL) * norm(&jw)).then_some(img)
            })
            .collect())
    };
    let imgs_theta = n_images(d_theta)?;
    let imgs_perp = n_images(d_perp)?;
    let m = geom.ambient_dim();
    let span_of = |vecs: &[Vec<T>]| {
        if vecs.is_empty() {
            Subspace::empty(m)
        } else {
            gram_schmidt(vecs, lit::<T>(RANK_TOL))
        }
    };

    let mut cross = T::zero();
    for a in &imgs_theta {
        for b in &imgs_perp {
            let (na, nb) = (norm(a), norm(b));
            if na > T::zero() && nb > T::zero() {
                cross = cross.max(dot(a, b).abs() / (na * nb));
            }
        }
    }

    let tol = lit::<T>(RANK_TOL);
    let span_theta = span_of(&imgs_theta);
    let span_perp = span_of(&imgs_perp);
    let mut combined_vecs: Vec<Vec<T>> = span_theta.basis().to_vec();
    combined_vecs.extend(span_perp.basis().iter().cloned());
    let combined = span_of(&combined_vecs);

    // mu = complement of N(D_theta) + N(D_perp) inside the normal space,
    // seeded deterministically from the orthonormal normal basis.
    let mut mu_vecs: Vec<Vec<T>> = Vec::new();
    for nu in geom.normal.basis() {
        let mut w = combined.reject(nu);
        for prev in &mu_vecs {
            let c = dot(&w, prev);
            crate::numlin::axpy(&mut w, -c, prev);
        }
        let nw = norm(&w);
        if nw > tol {
            mu_vecs.push(crate::numlin::scale(&w, T::one() / nw));
        }
    }

    let mu_span = span_of(&mu_vecs);
    let mut mu_res = T::zero();
    for b in mu_span.basis() {
        let jb = j.apply(b);
        let nb = geom.normal.project(&jb);
        let out = sub(&nb, &mu_span.project(&nb));
        mu_res = mu_res.max(norm(&out) / norm(&jb));
    }

    Ok(NormalSplit {
        dim_n_theta: span_theta.rank(),
        dim_n_perp: span_perp.rank(),
        dim_mu: mu_span.rank(),
        cross_orthogonality_residual: cross,
        mu_invariance_residual: mu_res,
    })
}

fn aggregate_normal_split<T: Real>(
    scn: &ImmersionScenario<T>,
    theta_idx: usize,
    perp_idx: usize,
    consts: &ConstMap<T>,
    points: &[Vec<T>],
) -> Result<NormalSplit<T>> {
    let mut out: Option<NormalSplit<T>> = None;
    for pt in points {
        let geom = scn.frame_at(pt)?;
        let split = normal_split(
            &geom,
            &scn.structure,
            &scn.distributions[theta_idx],
            &scn.distributions[perp_idx],
            consts,
        )?;
        out = Some(match out {
            None => split,
            Some(prev) => {
                if (prev.dim_n_theta, prev.dim_n_perp, prev.dim_mu)
                    != (split.dim_n_theta, split.dim_n_perp, split.dim_mu)
                {
                    return Err(Error::InvalidScenario(
                        "normal-bundle split dimensions vary across sample points".into(),
                    ));
                }
                NormalSplit {
                    cross_orthogonality_residual: prev
                        .cross_orthogonality_residual
                        .max(split.cross_orthogonality_residual),
                    mu_invariance_residual: prev
                        .mu_invariance_residual
                        .max(split.mu_invariance_residual),
                    ..prev
                }
            }
        });
    }
    out.ok_or_else(|| Error::InvalidScenario("no sample points".into()))
}
