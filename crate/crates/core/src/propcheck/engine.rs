//! Sampling engine behind the check registry: per-point operator context,
//! random field construction, and the residual kernels of every check.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exprdsl::{ConstMap, Expr, Jet2};
use crate::geometry::fields::{CoefField, FieldJet, JetFrame};
use crate::geometry::{
    distribution_span, induced_ops, second_fundamental_form, shape_operator, DistributionSpec,
    ImmersionScenario, InducedOps,
};
use crate::numlin::{add as vadd, dot, norm, scale as vscale, sub as vsub, Mat, Subspace};
use crate::sampling::{random_coords, rng_for};
use crate::scalar::{lit, Real};
use crate::slant::{classify, Classification, ScenarioClassification};

use super::{shape_eigenvalues, CheckId, CheckOutcome, CheckReport, WorstSample};

/// Operator context at one sampled point.
pub(crate) struct PointCtx<T> {
    pub frame: JetFrame<T>,
    pub ops: InducedOps<T>,
    jmat: Mat<T>,
    consts: ConstMap<T>,
}

impl<T: Real> PointCtx<T> {
    pub fn new(scn: &ImmersionScenario<T>, point: &[T]) -> Result<Self> {
        let geom = scn.frame_at(point)?;
        let ops = induced_ops(&geom, &scn.structure);
        let frame = JetFrame::new(geom)?;
        Ok(PointCtx {
            frame,
            ops,
            jmat: scn.structure.matrix.clone(),
            consts: scn.const_map(),
        })
    }

    fn j(&self) -> &Mat<T> {
        &self.jmat
    }

    /// Tangential part of J v (the operator T on tangent input, t on normal).
    pub fn j_tan(&self, v: &[T]) -> Vec<T> {
        self.frame.geom.tangent.project(&self.jmat.matvec(v))
    }

    /// Normal part of J v (the operator N on tangent input, n on normal).
    pub fn j_nor(&self, v: &[T]) -> Vec<T> {
        self.frame.geom.normal.project(&self.jmat.matvec(v))
    }

    pub fn amb(&self, coords: &[T]) -> Vec<T> {
        self.frame.geom.ambient_from_coords(coords)
    }

    pub fn h(&self, x: &[T], y: &[T]) -> Vec<T> {
        second_fundamental_form(&self.frame.geom, x, y)
    }

    pub fn shape(&self, v: &[T]) -> Mat<T> {
        shape_operator(&self.frame.geom, v)
    }

    /// Ambient span of a distribution at this point.
    fn dist_span(&self, spec: &DistributionSpec) -> Result<Subspace<T>> {
        let (_, span) = distribution_span(&self.frame.geom, spec, &self.consts)?;
        Ok(span)
    }

    fn spanning_fields(&self, spec: &DistributionSpec) -> Result<Vec<CoefField<T>>> {
        spec.fields
            .iter()
            .map(|f| CoefField::eval(f, &self.frame.geom.point, &self.consts))
            .collect()
    }

    /// (nabla_X T)Y = nabla_X(TY) - T(nabla_X Y), ambient.
    pub fn cov_t(&self, xv: &[T], y: &CoefField<T>) -> Vec<T> {
        let yf = self.frame.tangent_field(y);
        let ty = self.frame.project_tangent(&yf.apply_matrix(self.j()));
        let d1 = self.frame.nabla_tangential(xv, &ty);
        let d2 = self.j_tan(&self.frame.nabla_tangential(xv, &yf));
        vsub(&d1, &d2)
    }

    /// (nabla_X N)Y = nabla-perp_X(NY) - N(nabla_X Y), ambient.
    pub fn cov_n(&self, xv: &[T], y: &CoefField<T>) -> Vec<T> {
        let yf = self.frame.tangent_field(y);
        let ny = self.frame.project_normal(&yf.apply_matrix(self.j()));
        let d1 = self.frame.nabla_normal(xv, &ny);
        let d2 = self.j_nor(&self.frame.nabla_tangential(xv, &yf));
        vsub(&d1, &d2)
    }

    /// (nabla_X t)V = nabla_X(tV) - t(nabla-perp_X V), ambient.
    pub fn cov_small_t(&self, xv: &[T], v: &FieldJet<T>) -> Vec<T> {
        let tv = self.frame.project_tangent(&v.apply_matrix(self.j()));
        let d1 = self.frame.nabla_tangential(xv, &tv);
        let d2 = self.j_tan(&self.frame.nabla_normal(xv, v));
        vsub(&d1, &d2)
    }

    /// (nabla_X n)V = nabla-perp_X(nV) - n(nabla-perp_X V), ambient.
    pub fn cov_small_n(&self, xv: &[T], v: &FieldJet<T>) -> Vec<T> {
        let nv = self.frame.project_normal(&v.apply_matrix(self.j()));
        let d1 = self.frame.nabla_normal(xv, &nv);
        let d2 = self.j_nor(&self.frame.nabla_normal(xv, v));
        vsub(&d1, &d2)
    }

    /// Validates and lifts an ambient expression field that must be normal at
    /// this point.
    pub fn normal_expr_field(&self, exprs: &[Expr], consts: &ConstMap<T>) -> Result<FieldJet<T>> {
        let f = self.frame.ambient_expr_field(exprs, consts)?;
        let vn = norm(&f.value);
        let res = norm(&self.frame.geom.tangent.project(&f.value)) / vn.max(T::epsilon());
        if res > lit::<T>(1e-8) {
            return Err(Error::NotANormalField {
                point: format!("{:?}", self.frame.geom.point),
                residual: res.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(f)
    }
}

/// Shared state for a suite run: constants and (when two distributions are
/// declared) the classification with its role assignment.
pub struct SuiteContext<'a, T: Real> {
    scn: &'a ImmersionScenario<T>,
    classification: Option<ScenarioClassification<T>>,
}

struct HemiInfo {
    theta_name: String,
    perp_name: String,
    theta: f64,
    dims: (usize, usize),
}

impl<'a, T: Real> SuiteContext<'a, T> {
    pub fn new(scn: &'a ImmersionScenario<T>) -> Result<Self> {
        let classification = if scn.distributions.len() == 2 {
            Some(classify(scn)?)
        } else {
            None
        };
        Ok(SuiteContext {
            scn,
            classification,
        })
    }

    pub fn classification(&self) -> Option<&ScenarioClassification<T>> {
        self.classification.as_ref()
    }

    fn point_ctx(&self, point: &[T]) -> Result<PointCtx<T>> {
        PointCtx::new(self.scn, point)
    }

    fn hemi(&self, id: CheckId) -> Result<HemiInfo> {
        let precondition = |reason: String| Error::PreconditionNotMet {
            check: id.as_str().to_string(),
            reason,
        };
        let c = self.classification.as_ref().ok_or_else(|| {
            precondition(
                "precondition: hemi-slant verdict (scenario declares no distribution pair)".into(),
            )
        })?;
        if !c.verdict.classification.is_hemi_slant_family() {
            return Err(precondition(format!(
                "precondition: hemi-slant verdict (scenario classified as {})",
                c.verdict.classification.as_str()
            )));
        }
        Ok(HemiInfo {
            theta_name: c.theta_distribution.clone().unwrap_or_default(),
            perp_name: c.perp_distribution.clone().unwrap_or_default(),
            theta: c
                .verdict
                .theta
                .map(|t| t.to_f64().unwrap_or(0.0))
                .unwrap_or(std::f64::consts::FRAC_PI_2),
            dims: (c.verdict.dims.0, c.verdict.dims.1),
        })
    }

    fn spec(&self, name: &str) -> &DistributionSpec {
        self.scn
            .distribution(name)
            .expect("classified distribution must exist")
    }

    fn random_point(&self, rng: &mut ChaCha8Rng) -> Vec<T> {
        self.scn
            .domain
            .iter()
            .map(|&(lo, hi)| {
                let u: f64 = rng.gen_range(0.0..1.0);
                lo + (hi - lo) * lit::<T>(u)
            })
            .collect()
    }

    fn pq(&self) -> (T, T) {
        (
            self.scn.structure.params.p_real(),
            self.scn.structure.params.q_real(),
        )
    }

    fn require_theta_dim(&self, id: CheckId) -> Result<HemiInfo> {
        let hemi = self.hemi(id)?;
        if hemi.dims.0 < 1 {
            return Err(Error::PreconditionNotMet {
                check: id.as_str().into(),
                reason: "precondition: nonempty slant distribution".into(),
            });
        }
        Ok(hemi)
    }

    fn require_perp_dim(&self, id: CheckId) -> Result<HemiInfo> {
        let hemi = self.hemi(id)?;
        if hemi.dims.1 < 1 {
            return Err(Error::PreconditionNotMet {
                check: id.as_str().into(),
                reason: "precondition: nonempty anti-invariant distribution".into(),
            });
        }
        Ok(hemi)
    }

    /// Generic sampling loop: one point per sample, one residual per sample.
    fn pointwise(
        &self,
        id: CheckId,
        samples: usize,
        rng: &mut ChaCha8Rng,
        mut kernel: impl FnMut(&PointCtx<T>, &mut ChaCha8Rng) -> Result<T>,
    ) -> Result<CheckReport<T>> {
        let mut acc = Acc::new();
        for s in 0..samples {
            let pt = self.random_point(rng);
            let ctx = self.point_ctx(&pt)?;
            let r = kernel(&ctx, rng)?;
            acc.push(s, &pt, r);
        }
        Ok(acc.finish(id, &self.scn.name, samples))
    }

    /// Runs a single check against `samples` deterministic samples.
    pub fn run_check(&self, id: CheckId, samples: usize, seed: u64) -> Result<CheckReport<T>> {
        let mut rng = rng_for(seed, id as u64 + 1);
        match id {
            CheckId::E7Sym => self.pointwise(id, samples, &mut rng, |ctx, rng| {
                let g = &ctx.frame.geom;
                let (x, y) = (rand_tan(rng, ctx), rand_tan(rng, ctx));
                let (u, v) = (rand_nor(rng, ctx), rand_nor(rng, ctx));
                let r1 = (dot(&ctx.j_tan(&x), &y) - dot(&x, &ctx.j_tan(&y))).abs()
                    / (norm(&x) * norm(&y));
                let r2 = (dot(&ctx.j_nor(&u), &v) - dot(&u, &ctx.j_nor(&v))).abs()
                    / (norm(&u) * norm(&v));
                let gt = g.induced_metric.matmul(&ctx.ops.tt);
                let r3 = gt.symmetry_residual() / (T::one() + gt.max_abs());
                let r4 = ctx.ops.nn.symmetry_residual() / (T::one() + ctx.ops.nn.max_abs());
                Ok(r1.max(r2).max(r3).max(r4))
            }),
            CheckId::E8Adj => self.pointwise(id, samples, &mut rng, |ctx, rng| {
                let g = &ctx.frame.geom;
                let x = rand_tan(rng, ctx);
                let u = rand_nor(rng, ctx);
                let r1 = (dot(&ctx.j_nor(&x), &u) - dot(&x, &ctx.j_tan(&u))).abs()
                    / (norm(&x) * norm(&u));
                let gtn = g.induced_metric.matmul(&ctx.ops.tn);
                let r2 = ctx.ops.nt.transpose().sub(&gtn).max_abs() / (T::one() + gtn.max_abs());
                Ok(r1.max(r2))
            }),
            CheckId::E99 => self.pointwise(id, samples, &mut rng, |ctx, rng| {
                let (p, q) = self.pq();
                let xa = rand_tan(rng, ctx);
                let tx = ctx.j_tan(&xa);
                let nx = ctx.j_nor(&xa);
                // T^2 X = pTX + qX - tNX
                let lhs1 = ctx.j_tan(&tx);
                let mut rhs1 = vscale(&tx, p);
                crate::numlin::axpy(&mut rhs1, q, &xa);
                crate::numlin::axpy(&mut rhs1, -T::one(), &ctx.j_tan(&nx));
                let r1 = norm(&vsub(&lhs1, &rhs1)) / norm(&xa);
                // pNX = NTX + nNX
                let lhs2 = vscale(&nx, p);
                let rhs2 = vadd(&ctx.j_nor(&tx), &ctx.j_nor(&nx));
                let r2 = norm(&vsub(&lhs2, &rhs2)) / norm(&xa);
                Ok(r1.max(r2))
            }),
            CheckId::E100 => self.pointwise(id, samples, &mut rng, |ctx, rng| {
                let (p, q) = self.pq();
                let ua = rand_nor(rng, ctx);
                let nu = ctx.j_nor(&ua);
                let tu = ctx.j_tan(&ua);
                // n^2 V = pnV + qV - NtV
                let lhs1 = ctx.j_nor(&nu);
                let mut rhs1 = vscale(&nu, p);
                crate::numlin::axpy(&mut rhs1, q, &ua);
                crate::numlin::axpy(&mut rhs1, -T::one(), &ctx.j_nor(&tu));
                let r1 = norm(&vsub(&lhs1, &rhs1)) / norm(&ua);
                // ptV = TtV + tnV
                let lhs2 = vscale(&tu, p);
                let rhs2 = vadd(&ctx.j_tan(&tu), &ctx.j_tan(&nu));
                let r2 = norm(&vsub(&lhs2, &rhs2)) / norm(&ua);
                Ok(r1.max(r2))
            }),
            CheckId::E9E10Product => {
                let (f, sign) = self.scn.structure.product.clone().ok_or_else(|| {
                    Error::PreconditionNotMet {
                        check: id.as_str().into(),
                        reason: "precondition: structure with a product decomposition".into(),
                    }
                })?;
                let (p, _) = self.pq();
                let half_p = p / lit::<T>(2.0);
                let amp_base =
                    (lit::<T>(2.0) * self.scn.structure.params.sigma - p) / lit::<T>(2.0);
                let amp = match sign {
                    crate::metallic::Sign::Plus => amp_base,
                    crate::metallic::Sign::Minus => -amp_base,
                };
                self.pointwise(id, samples, &mut rng, move |ctx, rng| {
                    let g = &ctx.frame.geom;
                    let xa = rand_tan(rng, ctx);
                    let ua = rand_nor(rng, ctx);
                    let fx = f.matvec(&xa);
                    let fu = f.matvec(&ua);
                    let mut r = T::zero();
                    // T X = (p/2) X +/- a (F X)^tan
                    let mut rhs = vscale(&xa, half_p);
                    crate::numlin::axpy(&mut rhs, amp, &g.tangent.project(&fx));
                    r = r.max(norm(&vsub(&ctx.j_tan(&xa), &rhs)) / norm(&xa));
                    // N X = +/- a (F X)^nor
                    r = r.max(
                        norm(&vsub(&ctx.j_nor(&xa), &vscale(&g.normal.project(&fx), amp)))
                            / norm(&xa),
                    );
                    // t V = +/- a (F V)^tan
                    r = r.max(
                        norm(&vsub(&ctx.j_tan(&ua), &vscale(&g.tangent.project(&fu), amp)))
                            / norm(&ua),
                    );
                    // n V = (p/2) V +/- a (F V)^nor
                    let mut rhs4 = vscale(&ua, half_p);
                    crate::numlin::axpy(&mut rhs4, amp, &g.normal.project(&fu));
                    r = r.max(norm(&vsub(&ctx.j_nor(&ua), &rhs4)) / norm(&ua));
                    Ok(r)
                })
            }
            CheckId::E12Shape => self.pointwise(id, samples, &mut rng, |ctx, rng| {
                let g = &ctx.frame.geom;
                let k = g.dim();
                let x = random_coords::<T>(rng, k);
                let y = random_coords::<T>(rng, k);
                let v = rand_nor(rng, ctx);
                let lhs = dot(&ctx.h(&x, &y), &v);
                let av = ctx.shape(&v);
                let rhs = g.g_inner(&av.matvec(&x), &y);
                Ok((lhs - rhs).abs() / (g.g_norm(&x) * g.g_norm(&y) * norm(&v)))
            }),
            CheckId::E16NablaTSym => self.pointwise(id, samples, &mut rng, |ctx, rng| {
                let k = ctx.frame.geom.dim();
                let pt = ctx.frame.geom.point.clone();
                let cx = rand_field(rng, &pt, k);
                let cy = rand_field(rng, &pt, k);
                let cz = rand_field(rng, &pt, k);
                let xv = cx.values();
                let ya = ctx.amb(&cy.values());
                let za = ctx.amb(&cz.values());
                let lhs = dot(&ctx.cov_t(&xv, &cy), &za);
                let rhs = dot(&ya, &ctx.cov_t(&xv, &cz));
                Ok((lhs - rhs).abs() / (norm(&ctx.amb(&xv)) * norm(&ya) * norm(&za)))
            }),
            CheckId::E17i => self.pointwise(id, samples, &mut rng, |ctx, rng| {
                let (cx, cy) = two_fields(rng, ctx);
                let (xv, yv) = (cx.values(), cy.values());
                let lhs = ctx.cov_t(&xv, &cy);
                let ny = ctx.j_nor(&ctx.amb(&yv));
                let a_ny = ctx.shape(&ny);
                let mut rhs = ctx.amb(&a_ny.matvec(&xv));
                crate::numlin::axpy(&mut rhs, T::one(), &ctx.j_tan(&ctx.h(&xv, &yv)));
                Ok(norm(&vsub(&lhs, &rhs)) / field_scale(ctx, &xv, &yv))
            }),
            CheckId::E17ii => self.pointwise(id, samples, &mut rng, |ctx, rng| {
                let (cx, cy) = two_fields(rng, ctx);
                let (xv, yv) = (cx.values(), cy.values());
                let lhs = ctx.cov_n(&xv, &cy);
                let ty = ctx.ops.tt.matvec(&yv);
                let rhs = vsub(&ctx.j_nor(&ctx.h(&xv, &yv)), &ctx.h(&xv, &ty));
                Ok(norm(&vsub(&lhs, &rhs)) / field_scale(ctx, &xv, &yv))
            }),
            CheckId::E18i => self.pointwise(id, samples, &mut rng, |ctx, rng| {
                let k = ctx.frame.geom.dim();
                let pt = ctx.frame.geom.point.clone();
                let cx = rand_field(rng, &pt, k);
                let xv = cx.values();
                let vf = rand_normal_field(rng, ctx);
                let lhs = ctx.cov_small_t(&xv, &vf);
                let a_nv = ctx.shape(&ctx.j_nor(&vf.value));
                let a_v = ctx.shape(&vf.value);
                let rhs = vsub(
                    &ctx.amb(&a_nv.matvec(&xv)),
                    &ctx.j_tan(&ctx.amb(&a_v.matvec(&xv))),
                );
                Ok(norm(&vsub(&lhs, &rhs)) / (norm(&ctx.amb(&xv)) * norm(&vf.value)))
            }),
            CheckId::E18ii => self.pointwise(id, samples, &mut rng, |ctx, rng| {
                let k = ctx.frame.geom.dim();
                let pt = ctx.frame.geom.point.clone();
                let cx = rand_field(rng, &pt, k);
                let xv = cx.values();
                let vf = rand_normal_field(rng, ctx);
                let lhs = ctx.cov_small_n(&xv, &vf);
                let tv = ctx.frame.geom.tangent_coords(&ctx.j_tan(&vf.value));
                let a_v = ctx.shape(&vf.value);
                let mut rhs = vscale(&ctx.h(&xv, &tv), -T::one());
                crate::numlin::axpy(&mut rhs, -T::one(), &ctx.j_nor(&ctx.amb(&a_v.matvec(&xv))));
                Ok(norm(&vsub(&lhs, &rhs)) / (norm(&ctx.amb(&xv)) * norm(&vf.value)))
            }),
            CheckId::E19Duality => self.pointwise(id, samples, &mut rng, |ctx, rng| {
                let (cx, cy) = two_fields(rng, ctx);
                let (xv, yv) = (cx.values(), cy.values());
                let vf = rand_normal_field(rng, ctx);
                let lhs = dot(&ctx.cov_n(&xv, &cy), &vf.value);
                let rhs = dot(&ctx.cov_small_t(&xv, &vf), &ctx.amb(&yv));
                Ok((lhs - rhs).abs() / (field_scale(ctx, &xv, &yv) * norm(&vf.value)))
            }),
            CheckId::E20BracketT => self.pointwise(id, samples, &mut rng, |ctx, rng| {
                let (cx, cy) = two_fields(rng, ctx);
                let (xv, yv) = (cx.values(), cy.values());
                let br = cx.bracket(&cy);
                let lhs = ctx.j_tan(&ctx.amb(&br));
                let rhs = bracket_t_rhs(ctx, &cx, &cy);
                Ok(norm(&vsub(&lhs, &rhs)) / field_scale(ctx, &xv, &yv))
            }),
            CheckId::E21BracketN => self.pointwise(id, samples, &mut rng, |ctx, rng| {
                let (cx, cy) = two_fields(rng, ctx);
                let (xv, yv) = (cx.values(), cy.values());
                let br = cx.bracket(&cy);
                let lhs = ctx.j_nor(&ctx.amb(&br));
                let xf = ctx.frame.tangent_field(&cx);
                let yf = ctx.frame.tangent_field(&cy);
                let nyf = ctx.frame.project_normal(&yf.apply_matrix(ctx.j()));
                let nxf = ctx.frame.project_normal(&xf.apply_matrix(ctx.j()));
                let ty = ctx.ops.tt.matvec(&yv);
                let tx = ctx.ops.tt.matvec(&xv);
                let mut rhs = vsub(&ctx.h(&xv, &ty), &ctx.h(&tx, &yv));
                crate::numlin::axpy(&mut rhs, T::one(), &ctx.frame.nabla_normal(&xv, &nyf));
                crate::numlin::axpy(&mut rhs, -T::one(), &ctx.frame.nabla_normal(&yv, &nxf));
                Ok(norm(&vsub(&lhs, &rhs)) / field_scale(ctx, &xv, &yv))
            }),
            CheckId::E26 => {
                let hemi = self.require_theta_dim(id)?;
                let cos2 = lit::<T>(hemi.theta.cos().powi(2));
                let (p, q) = self.pq();
                let spec = self.spec(&hemi.theta_name).clone();
                self.pointwise(id, samples, &mut rng, move |ctx, rng| {
                    let span = ctx.dist_span(&spec)?;
                    let x = rand_tan(rng, ctx);
                    let y = rand_tan(rng, ctx);
                    let p1x = span.project(&x);
                    let p1y = span.project(&y);
                    let tp1x = ctx.j_tan(&p1x);
                    let tp1y = ctx.j_tan(&p1y);
                    let lhs = dot(&tp1x, &tp1y);
                    let rhs = cos2 * (p * dot(&tp1x, &p1y) + q * dot(&p1x, &p1y));
                    Ok((lhs - rhs).abs() / (norm(&x) * norm(&y)))
                })
            }
            CheckId::E27 => {
                let hemi = self.require_theta_dim(id)?;
                let sin2 = lit::<T>(hemi.theta.sin().powi(2));
                let (p, q) = self.pq();
                let spec = self.spec(&hemi.theta_name).clone();
                self.pointwise(id, samples, &mut rng, move |ctx, rng| {
                    let span = ctx.dist_span(&spec)?;
                    let x = rand_in_span(rng, &span);
                    let y = rand_in_span(rng, &span);
                    let nx = ctx.j_nor(&x);
                    let ny = ctx.j_nor(&y);
                    let tp1x = ctx.j_tan(&x);
                    let lhs = dot(&nx, &ny);
                    let rhs = sin2 * (p * dot(&tp1x, &y) + q * dot(&x, &y));
                    Ok((lhs - rhs).abs() / (norm(&x) * norm(&y)))
                })
            }
            CheckId::E28 => {
                let hemi = self.require_theta_dim(id)?;
                let cos2 = lit::<T>(hemi.theta.cos().powi(2));
                let (p, q) = self.pq();
                let spec = self.spec(&hemi.theta_name).clone();
                self.pointwise(id, samples, &mut rng, move |ctx, rng| {
                    let span = ctx.dist_span(&spec)?;
                    let x = rand_in_span(rng, &span);
                    let tp1x = ctx.j_tan(&x);
                    let lhs = ctx.j_tan(&span.project(&tp1x));
                    let mut rhs = vscale(&tp1x, p);
                    crate::numlin::axpy(&mut rhs, q, &x);
                    let rhs = vscale(&rhs, cos2);
                    Ok(norm(&vsub(&lhs, &rhs)) / norm(&x))
                })
            }
            CheckId::E28Recovery => {
                let hemi = self.require_theta_dim(id)?;
                if hemi.theta > std::f64::consts::FRAC_PI_2 - 1e-8 {
                    return Err(Error::PreconditionNotMet {
                        check: id.as_str().into(),
                        reason: "precondition: slant angle < pi/2 (T is not invertible on an anti-invariant distribution)".into(),
                    });
                }
                let cos2 = lit::<T>(hemi.theta.cos().powi(2));
                let (p, q) = self.pq();
                let spec = self.spec(&hemi.theta_name).clone();
                self.pointwise(id, samples, &mut rng, move |ctx, rng| {
                    // Applying T twice to X in the slant distribution and
                    // using the closure relation gives
                    // T(TX - p cos^2(theta) X) = q cos^2(theta) X,
                    // so the recovery prefactor is 1/(q cos^2(theta)).
                    let span = ctx.dist_span(&spec)?;
                    let x = rand_in_span(rng, &span);
                    let mut inner = ctx.j_tan(&x);
                    crate::numlin::axpy(&mut inner, -p * cos2, &x);
                    let rec = vscale(&ctx.j_tan(&inner), T::one() / (q * cos2));
                    Ok(norm(&vsub(&rec, &x)) / norm(&x))
                })
            }
            CheckId::E29Deriv => {
                let hemi = self.require_theta_dim(id)?;
                let pcos2 = lit::<T>(hemi.theta.cos().powi(2)) * self.pq().0;
                let spec = self.spec(&hemi.theta_name).clone();
                self.pointwise(id, samples, &mut rng, move |ctx, rng| {
                    let spanning = ctx.spanning_fields(&spec)?;
                    let proj = ctx.frame.distribution_projector(&spanning)?;
                    let k = ctx.frame.geom.dim();
                    let pt = ctx.frame.geom.point.clone();
                    let cx = rand_field(rng, &pt, k);
                    let cy = rand_field_in(rng, &spanning, &pt);
                    let xv = cx.values();
                    let yf = ctx.frame.tangent_field(&cy);
                    // S = T P1 composed at the field level
                    let syf = ctx
                        .frame
                        .project_tangent(&proj.apply(&yf).apply_matrix(ctx.j()));
                    let s2yf = ctx
                        .frame
                        .project_tangent(&proj.apply(&syf).apply_matrix(ctx.j()));
                    let w = ctx.frame.nabla_tangential(&xv, &yf);
                    let s_of = |v: &[T]| ctx.j_tan(&proj.project_vec(v));
                    let ds = vsub(&ctx.frame.nabla_tangential(&xv, &syf), &s_of(&w));
                    let ds2 = vsub(&ctx.frame.nabla_tangential(&xv, &s2yf), &s_of(&s_of(&w)));
                    let r = vsub(&ds2, &vscale(&ds, pcos2));
                    Ok(norm(&r) / field_scale(ctx, &xv, &cy.values()))
                })
            }
            CheckId::E30DthetaClosed => {
                let hemi = self.require_theta_dim(id)?;
                let spec = self.spec(&hemi.theta_name).clone();
                self.pointwise(id, samples, &mut rng, move |ctx, rng| {
                    let spanning = ctx.spanning_fields(&spec)?;
                    let span = ctx.dist_span(&spec)?;
                    let pt = ctx.frame.geom.point.clone();
                    let cx = rand_field_in(rng, &spanning, &pt);
                    let cy = rand_field_in(rng, &spanning, &pt);
                    let rhs = bracket_t_rhs(ctx, &cx, &cy);
                    Ok(membership_residual(&rhs, &span))
                })
            }
            CheckId::E31AntiinvShape => {
                let hemi = self.require_perp_dim(id)?;
                let spec = self.spec(&hemi.perp_name).clone();
                self.pointwise(id, samples, &mut rng, move |ctx, rng| {
                    let span = ctx.dist_span(&spec)?;
                    let z = rand_in_span(rng, &span);
                    let w = rand_in_span(rng, &span);
                    let a = ctx.shape(&ctx.j_nor(&z));
                    let w_coords = ctx.frame.geom.tangent_coords(&w);
                    let awz = ctx.amb(&a.matvec(&w_coords));
                    Ok(norm(&awz) / (norm(&z) * norm(&w)))
                })
            }
            CheckId::E32NablaSym => {
                let hemi = self.require_perp_dim(id)?;
                let spec = self.spec(&hemi.perp_name).clone();
                self.pointwise(id, samples, &mut rng, move |ctx, rng| {
                    let spanning = ctx.spanning_fields(&spec)?;
                    let pt = ctx.frame.geom.point.clone();
                    let cz = rand_field_in(rng, &spanning, &pt);
                    let cw = rand_field_in(rng, &spanning, &pt);
                    let (zv, wv) = (cz.values(), cw.values());
                    let a = ctx.cov_t(&zv, &cw);
                    let b = ctx.cov_t(&wv, &cz);
                    Ok(norm(&vsub(&a, &b)) / field_scale(ctx, &zv, &wv))
                })
            }
            CheckId::E33ShapeComm => self.run_e33(id, samples, &mut rng),
            CheckId::E34Equiv => self.pointwise(id, samples, &mut rng, |ctx, rng| {
                let (cx, cy) = two_fields(rng, ctx);
                let (xv, yv) = (cx.values(), cy.values());
                let vf = rand_normal_field(rng, ctx);
                let v = &vf.value;
                let a_nv = ctx.shape(&ctx.j_nor(v));
                let a_v = ctx.shape(v);
                let scale = field_scale(ctx, &xv, &yv) * norm(v);
                // <(nabla_X N)Y, V> = <A_{nV}X - T A_V X, Y>
                let first = vsub(
                    &ctx.amb(&a_nv.matvec(&xv)),
                    &ctx.j_tan(&ctx.amb(&a_v.matvec(&xv))),
                );
                let r1 = (dot(&ctx.cov_n(&xv, &cy), v) - dot(&first, &ctx.amb(&yv))).abs() / scale;
                // <A_{nV}X - T A_V X, Y> = <A_{nV}Y - A_V T Y, X>
                let ty = ctx.ops.tt.matvec(&yv);
                let second = vsub(&ctx.amb(&a_nv.matvec(&yv)), &ctx.amb(&a_v.matvec(&ty)));
                let r2 =
                    (dot(&first, &ctx.amb(&yv)) - dot(&second, &ctx.amb(&xv))).abs() / scale;
                Ok(r1.max(r2))
            }),
            CheckId::E35Eigen => self.run_e35(id, samples, &mut rng),
            CheckId::DthetaIntegrable => {
                let hemi = self.require_theta_dim(id)?;
                let spec = self.spec(&hemi.theta_name).clone();
                self.membership_bracket(id, samples, &mut rng, spec)
            }
            CheckId::DperpIntegrable => {
                let hemi = self.require_perp_dim(id)?;
                let spec = self.spec(&hemi.perp_name).clone();
                self.membership_bracket(id, samples, &mut rng, spec)
            }
            CheckId::MixedGeodesic => self.run_mixed_geodesic(id, samples, &mut rng),
            CheckId::TotallyGeodesicVanish => self.run_totally_geodesic(id, samples, &mut rng),
        }
    }

    fn membership_bracket(
        &self,
        id: CheckId,
        samples: usize,
        rng: &mut ChaCha8Rng,
        spec: DistributionSpec,
    ) -> Result<CheckReport<T>> {
        self.pointwise(id, samples, rng, move |ctx, rng| {
            let spanning = ctx.spanning_fields(&spec)?;
            let span = ctx.dist_span(&spec)?;
            let pt = ctx.frame.geom.point.clone();
            let cx = rand_field_in(rng, &spanning, &pt);
            let cy = rand_field_in(rng, &spanning, &pt);
            let br = ctx.amb(&cx.bracket(&cy));
            Ok(membership_residual(&br, &span))
        })
    }

    fn run_e33(&self, id: CheckId, samples: usize, rng: &mut ChaCha8Rng) -> Result<CheckReport<T>> {
        let mut hyp = T::zero(); // max of ||(nabla_X N)Y|| and ||(nabla_X t)V||
        let mut comm = Acc::new();
        for s in 0..samples {
            let pt = self.random_point(rng);
            let ctx = self.point_ctx(&pt)?;
            let k = ctx.frame.geom.dim();
            let cx = rand_field(rng, &pt, k);
            let cy = rand_field(rng, &pt, k);
            let (xv, yv) = (cx.values(), cy.values());
            let vf = rand_normal_field(rng, &ctx);
            hyp = hyp.max(norm(&ctx.cov_n(&xv, &cy)) / field_scale(&ctx, &xv, &yv));
            hyp = hyp
                .max(norm(&ctx.cov_small_t(&xv, &vf)) / (norm(&ctx.amb(&xv)) * norm(&vf.value)));
            let v = &vf.value;
            let a_nv = ctx.shape(&ctx.j_nor(v));
            let a_v = ctx.shape(v);
            let tavx = ctx.j_tan(&ctx.amb(&a_v.matvec(&xv)));
            let scale = norm(&ctx.amb(&xv)) * norm(v);
            let r1 = norm(&vsub(&ctx.amb(&a_nv.matvec(&xv)), &tavx)) / scale;
            let tx = ctx.ops.tt.matvec(&xv);
            let r2 = norm(&vsub(&tavx, &ctx.amb(&a_v.matvec(&tx)))) / scale;
            comm.push(s, &pt, r1.max(r2));
        }
        let strict = lit::<T>(1e-10);
        let tol = lit::<T>(id.tolerance());
        if hyp < strict {
            // derivatives vanish, so the shape operators must commute
            Ok(comm.finish(id, &self.scn.name, samples))
        } else if comm.max < tol {
            // converse: commutation forces the derivatives to vanish
            let mut acc = Acc::new();
            acc.push(0, &[], hyp);
            let mut report = acc.finish(id, &self.scn.name, samples);
            report.worst = None;
            Ok(report)
        } else {
            Ok(skipped_report(
                id,
                &self.scn.name,
                format!(
                    "hypothesis not met: derivative residual {:.3e} and commutation residual {:.3e} are both nonzero",
                    hyp.to_f64().unwrap_or(f64::NAN),
                    comm.max.to_f64().unwrap_or(f64::NAN)
                ),
            ))
        }
    }

    fn run_e35(&self, id: CheckId, samples: usize, rng: &mut ChaCha8Rng) -> Result<CheckReport<T>> {
        let hemi = self.require_theta_dim(id)?;
        let cos_theta = lit::<T>(hemi.theta.cos());
        let (l1, l2) = shape_eigenvalues(&self.scn.structure.params, cos_theta);
        let spec = self.spec(&hemi.theta_name).clone();
        let mut acc = Acc::new();
        let mut applicable = 0usize;
        for s in 0..samples {
            let pt = self.random_point(rng);
            let ctx = self.point_ctx(&pt)?;
            let spanning = ctx.spanning_fields(&spec)?;
            let cx = rand_field_in(rng, &spanning, &pt);
            let cy = rand_field_in(rng, &spanning, &pt);
            let (xv, yv) = (cx.values(), cy.values());
            let dn = norm(&ctx.cov_n(&xv, &cy)) / field_scale(&ctx, &xv, &yv);
            let hv = ctx.h(&xv, &yv);
            let hn = norm(&hv);
            if dn < lit::<T>(1e-10) && hn > lit::<T>(1e-8) {
                applicable += 1;
                let nh = ctx.j_nor(&hv);
                let r1 = norm(&vsub(&nh, &vscale(&hv, l1))) / hn;
                let r2 = norm(&vsub(&nh, &vscale(&hv, l2))) / hn;
                acc.push(s, &pt, r1.min(r2));
            }
        }
        if applicable == 0 {
            return Ok(skipped_report(
                id,
                &self.scn.name,
                "not applicable: no sample had vanishing (nabla N) together with nonzero h".into(),
            ));
        }
        let mut report = acc.finish(id, &self.scn.name, applicable);
        report.samples = applicable;
        Ok(report)
    }

    fn run_mixed_geodesic(
        &self,
        id: CheckId,
        samples: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<CheckReport<T>> {
        let hemi = self.hemi(id)?;
        let proper = self
            .classification
            .as_ref()
            .map(|c| c.verdict.classification == Classification::ProperHemiSlant)
            .unwrap_or(false);
        if !proper {
            return Err(Error::PreconditionNotMet {
                check: id.as_str().into(),
                reason: "precondition: proper hemi-slant verdict".into(),
            });
        }
        let theta_spec = self.spec(&hemi.theta_name).clone();
        let perp_spec = self.spec(&hemi.perp_name).clone();
        let mut hyp = T::zero();
        let mut mixed = Acc::new();
        for s in 0..samples {
            let pt = self.random_point(rng);
            let ctx = self.point_ctx(&pt)?;
            let k = ctx.frame.geom.dim();
            let perp_fields = ctx.spanning_fields(&perp_spec)?;
            let cx = rand_field(rng, &pt, k);
            let cz = rand_field_in(rng, &perp_fields, &pt);
            let (xv, zv) = (cx.values(), cz.values());
            hyp = hyp.max(norm(&ctx.cov_n(&xv, &cz)) / field_scale(&ctx, &xv, &zv));
            let span_theta = ctx.dist_span(&theta_spec)?;
            let span_perp = ctx.dist_span(&perp_spec)?;
            let xt = rand_in_span(rng, &span_theta);
            let zp = rand_in_span(rng, &span_perp);
            let h = ctx.h(
                &ctx.frame.geom.tangent_coords(&xt),
                &ctx.frame.geom.tangent_coords(&zp),
            );
            mixed.push(s, &pt, norm(&h) / (norm(&xt) * norm(&zp)));
        }
        if hyp >= lit::<T>(1e-10) {
            return Ok(skipped_report(
                id,
                &self.scn.name,
                format!(
                    "hypothesis not met: (nabla N) against the anti-invariant side has residual {:.3e}",
                    hyp.to_f64().unwrap_or(f64::NAN)
                ),
            ));
        }
        Ok(mixed.finish(id, &self.scn.name, samples))
    }

    fn run_totally_geodesic(
        &self,
        id: CheckId,
        samples: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<CheckReport<T>> {
        let mut hmax = T::zero();
        let mut acc = Acc::new();
        for s in 0..samples {
            let pt = self.random_point(rng);
            let ctx = self.point_ctx(&pt)?;
            let k = ctx.frame.geom.dim();
            let x = random_coords::<T>(rng, k);
            let y = random_coords::<T>(rng, k);
            hmax = hmax.max(
                norm(&ctx.h(&x, &y)) / (ctx.frame.geom.g_norm(&x) * ctx.frame.geom.g_norm(&y)),
            );
            let cx = rand_field(rng, &pt, k);
            let cy = rand_field(rng, &pt, k);
            let (xv, yv) = (cx.values(), cy.values());
            let vf = rand_normal_field(rng, &ctx);
            let fscale = field_scale(&ctx, &xv, &yv);
            let nscale = norm(&ctx.amb(&xv)) * norm(&vf.value);
            let r = (norm(&ctx.cov_t(&xv, &cy)) / fscale)
                .max(norm(&ctx.cov_n(&xv, &cy)) / fscale)
                .max(norm(&ctx.cov_small_t(&xv, &vf)) / nscale)
                .max(norm(&ctx.cov_small_n(&xv, &vf)) / nscale);
            acc.push(s, &pt, r);
        }
        if hmax >= lit::<T>(1e-12) {
            return Ok(skipped_report(
                id,
                &self.scn.name,
                format!(
                    "not applicable: scenario is not totally geodesic (max ||h|| residual {:.3e})",
                    hmax.to_f64().unwrap_or(f64::NAN)
                ),
            ));
        }
        Ok(acc.finish(id, &self.scn.name, samples))
    }
}

/// Residual accumulator tracking max, mean, and the worst sample.
struct Acc<T> {
    max: T,
    sum: T,
    count: usize,
    worst: Option<WorstSample<T>>,
}

impl<T: Real> Acc<T> {
    fn new() -> Self {
        Acc {
            max: T::zero(),
            sum: T::zero(),
            count: 0,
            worst: None,
        }
    }

    fn push(&mut self, index: usize, point: &[T], r: T) {
        self.sum += r;
        self.count += 1;
        if self.worst.is_none() || r > self.max {
            self.worst = Some(WorstSample {
                sample_index: index,
                point: point.to_vec(),
                detail: format!("residual {:.3e}", r.to_f64().unwrap_or(f64::NAN)),
            });
        }
        self.max = self.max.max(r);
    }

    fn finish(self, id: CheckId, scenario: &str, samples: usize) -> CheckReport<T> {
        let tol = lit::<T>(id.tolerance());
        let mean = if self.count > 0 {
            self.sum / lit::<T>(self.count as f64)
        } else {
            T::zero()
        };
        CheckReport {
            check: id,
            scenario: scenario.to_string(),
            samples,
            max_residual: self.max,
            mean_residual: mean,
            tolerance: tol,
            outcome: if self.max < tol {
                CheckOutcome::Pass
            } else {
                CheckOutcome::Fail
            },
            worst: self.worst,
        }
    }
}

fn skipped_report<T: Real>(id: CheckId, scenario: &str, reason: String) -> CheckReport<T> {
    CheckReport {
        check: id,
        scenario: scenario.to_string(),
        samples: 0,
        max_residual: T::zero(),
        mean_residual: T::zero(),
        tolerance: lit(id.tolerance()),
        outcome: CheckOutcome::Skipped(reason),
        worst: None,
    }
}

/// Relative component of `v` outside `span`; vectors numerically
/// indistinguishable from zero count as members.
fn membership_residual<T: Real>(v: &[T], span: &Subspace<T>) -> T {
    let n = norm(v);
    if n < lit::<T>(1e-13) {
        return T::zero();
    }
    norm(&span.reject(v)) / n
}

fn rand_tan<T: Real>(rng: &mut ChaCha8Rng, ctx: &PointCtx<T>) -> Vec<T> {
    let coords = random_coords::<T>(rng, ctx.frame.geom.dim());
    ctx.amb(&coords)
}

fn rand_nor<T: Real>(rng: &mut ChaCha8Rng, ctx: &PointCtx<T>) -> Vec<T> {
    let coords = random_coords::<T>(rng, ctx.frame.geom.normal.rank());
    ctx.frame.geom.normal.from_coords(&coords)
}

fn rand_in_span<T: Real>(rng: &mut ChaCha8Rng, span: &Subspace<T>) -> Vec<T> {
    let coords = random_coords::<T>(rng, span.rank());
    span.from_coords(&coords)
}

fn affine_jet<T: Real>(rng: &mut ChaCha8Rng, point: &[T]) -> Jet2<T> {
    let k = point.len();
    let mut j = Jet2::constant(lit(rng.gen_range(-1.0..1.0)), k);
    for (i, &pt_i) in point.iter().enumerate() {
        let b: T = lit(rng.gen_range(-1.0..1.0));
        j = j.add(&Jet2::variable(pt_i, i, k).scale(b));
    }
    j
}

/// Random tangent field with affine coefficients (all jet derivatives exact).
fn rand_field<T: Real>(rng: &mut ChaCha8Rng, point: &[T], k: usize) -> CoefField<T> {
    loop {
        let f = CoefField {
            jets: (0..k).map(|_| affine_jet(rng, point)).collect(),
        };
        let n2 = f.values().iter().fold(T::zero(), |a, &x| a + x * x);
        if n2 > lit::<T>(0.01) {
            return f;
        }
    }
}

/// Random section of a distribution: affine scalar combinations of its
/// spanning fields.
fn rand_field_in<T: Real>(
    rng: &mut ChaCha8Rng,
    spanning: &[CoefField<T>],
    point: &[T],
) -> CoefField<T> {
    loop {
        let scalars: Vec<Jet2<T>> = spanning.iter().map(|_| affine_jet(rng, point)).collect();
        let refs: Vec<&CoefField<T>> = spanning.iter().collect();
        let f = CoefField::lincomb(&refs, &scalars);
        let n2 = f.values().iter().fold(T::zero(), |a, &x| a + x * x);
        if n2 > lit::<T>(0.01) {
            return f;
        }
    }
}

/// Random normal field: the normal projection of an affine ambient field,
/// rejecting samples whose value at the point is tiny.
fn rand_normal_field<T: Real>(rng: &mut ChaCha8Rng, ctx: &PointCtx<T>) -> FieldJet<T> {
    let m = ctx.frame.geom.ambient_dim();
    let k = ctx.frame.geom.dim();
    let pt = &ctx.frame.geom.point;
    loop {
        let mut value = Vec::with_capacity(m);
        let mut coeffs = vec![vec![T::zero(); m]; k];
        for c in 0..m {
            let a: T = lit(rng.gen_range(-1.0..1.0));
            let mut v = a;
            for (i, row) in coeffs.iter_mut().enumerate() {
                let b: T = lit(rng.gen_range(-1.0..1.0));
                row[c] = b;
                v += b * pt[i];
            }
            value.push(v);
        }
        let f = FieldJet {
            value,
            partials: coeffs,
        };
        let nf = ctx.frame.project_normal(&f);
        if norm(&nf.value) > lit::<T>(0.05) {
            return nf;
        }
    }
}

fn two_fields<T: Real>(rng: &mut ChaCha8Rng, ctx: &PointCtx<T>) -> (CoefField<T>, CoefField<T>) {
    let k = ctx.frame.geom.dim();
    let pt = ctx.frame.geom.point.clone();
    (rand_field(rng, &pt, k), rand_field(rng, &pt, k))
}

fn field_scale<T: Real>(ctx: &PointCtx<T>, xv: &[T], yv: &[T]) -> T {
    norm(&ctx.amb(xv)) * norm(&ctx.amb(yv))
}

/// nabla_X TY - nabla_Y TX - A_{NY} X + A_{NX} Y, ambient.
fn bracket_t_rhs<T: Real>(ctx: &PointCtx<T>, cx: &CoefField<T>, cy: &CoefField<T>) -> Vec<T> {
    let (xv, yv) = (cx.values(), cy.values());
    let xf = ctx.frame.tangent_field(cx);
    let yf = ctx.frame.tangent_field(cy);
    let tyf = ctx.frame.project_tangent(&yf.apply_matrix(ctx.j()));
    let txf = ctx.frame.project_tangent(&xf.apply_matrix(ctx.j()));
    let a_ny = ctx.shape(&ctx.j_nor(&yf.value));
    let a_nx = ctx.shape(&ctx.j_nor(&xf.value));
    let mut rhs = vsub(
        &ctx.frame.nabla_tangential(&xv, &tyf),
        &ctx.frame.nabla_tangential(&yv, &txf),
    );
    crate::numlin::axpy(&mut rhs, -T::one(), &ctx.amb(&a_ny.matvec(&xv)));
    crate::numlin::axpy(&mut rhs, T::one(), &ctx.amb(&a_nx.matvec(&yv)));
    rhs
}
