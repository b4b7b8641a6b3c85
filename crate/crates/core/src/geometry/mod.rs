//! Pointwise submanifold geometry of an immersion into flat metallic space:
//! frames, induced metric, the induced operators T, N, t, n, second
//! fundamental form, shape operator, and the induced connections.

pub mod fields;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exprdsl::{eval_jet2, ConstMap, Expr};
use crate::metallic::StructureOp;
use crate::numlin::{
    complement, dot, gram_schmidt, norm, Mat, Subspace, SymSolver, RANK_TOL,
};
use crate::scalar::{lit, Real};

use fields::{CoefField, JetFrame};

/// Sampling plan for scenario sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Sampling {
    pub count: usize,
    pub seed: u64,
}

/// A named distribution spanned by tangent vector fields, each given by one
/// coefficient expression per surface parameter.
#[derive(Debug, Clone)]
pub struct DistributionSpec {
    pub name: String,
    pub fields: Vec<Vec<Expr>>,
}

/// A DSL-defined immersion into flat ambient space carrying a metallic
/// structure, with named distributions and a sampling plan.
#[derive(Debug, Clone)]
pub struct ImmersionScenario<T> {
    pub name: String,
    pub param_names: Vec<String>,
    pub extra_consts: ConstMap<T>,
    /// One expression per ambient coordinate (length = ambient dimension).
    pub components: Vec<Expr>,
    pub structure: StructureOp<T>,
    /// Declared in order; classification assigns slant / anti-invariant roles.
    pub distributions: Vec<DistributionSpec>,
    /// Open interval per parameter.
    pub domain: Vec<(T, T)>,
    pub sampling: Sampling,
}

impl<T: Real> ImmersionScenario<T> {
    /// Surface dimension k.
    pub fn dim(&self) -> usize {
        self.param_names.len()
    }

    /// Ambient dimension m.
    pub fn ambient_dim(&self) -> usize {
        self.components.len()
    }

    /// Constant bindings visible to every expression of the scenario:
    /// the declared extras plus sigma, sigma_bar, p, q.
    pub fn const_map(&self) -> ConstMap<T> {
        let mut m = self.extra_consts.clone();
        m.insert("sigma".into(), self.structure.params.sigma);
        m.insert("sigma_bar".into(), self.structure.params.sigma_bar);
        m.insert("p".into(), self.structure.params.p_real());
        m.insert("q".into(), self.structure.params.q_real());
        m
    }

    pub fn distribution(&self, name: &str) -> Option<&DistributionSpec> {
        self.distributions.iter().find(|d| d.name == name)
    }

    /// Deterministic sample points, uniform over the domain box.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Vec<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                self.domain
                    .iter()
                    .map(|&(lo, hi)| {
                        let u: f64 = rng.gen_range(0.0..1.0);
                        lo + (hi - lo) * lit::<T>(u)
                    })
                    .collect()
            })
            .collect()
    }

    pub fn frame_at(&self, point: &[T]) -> Result<PointGeometry<T>> {
        frame_at(self, point)
    }
}

/// Frames, induced metric, and second derivatives of the immersion at a point.
#[derive(Debug, Clone)]
pub struct PointGeometry<T> {
    pub point: Vec<T>,
    /// m x k matrix of first derivatives; column j is d f / d u_j.
    pub jacobian: Mat<T>,
    /// The k columns of the Jacobian as ambient vectors.
    pub coord_frame: Vec<Vec<T>>,
    pub tangent: Subspace<T>,
    pub normal: Subspace<T>,
    /// g_ij = <df/du_i, df/du_j>, symmetric positive-definite.
    pub induced_metric: Mat<T>,
    /// hessians[i][j] = d^2 f / du_i du_j as an ambient vector; symmetric in (i, j).
    pub hessians: Vec<Vec<Vec<T>>>,
    metric_solver: SymSolver<T>,
}

impl<T: Real> PointGeometry<T> {
    pub fn dim(&self) -> usize {
        self.coord_frame.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.jacobian.rows()
    }

    /// Ambient vector of coordinate-frame coefficients.
    pub fn ambient_from_coords(&self, coords: &[T]) -> Vec<T> {
        self.jacobian.matvec(coords)
    }

    /// Coordinate-frame coefficients of the tangential part of an ambient
    /// vector (g-orthogonal projection expressed in the coordinate frame).
    pub fn tangent_coords(&self, v: &[T]) -> Vec<T> {
        let rhs: Vec<T> = self.coord_frame.iter().map(|z| dot(z, v)).collect();
        self.metric_solver.solve(&rhs)
    }

    /// Coefficients of the normal part in the orthonormal normal basis.
    pub fn normal_coords(&self, v: &[T]) -> Vec<T> {
        self.normal.coords(v)
    }

    pub fn metric_solver(&self) -> &SymSolver<T> {
        &self.metric_solver
    }

    /// g-inner product of two coordinate-frame coefficient vectors.
    pub fn g_inner(&self, x: &[T], y: &[T]) -> T {
        dot(&self.induced_metric.matvec(x), y)
    }

    pub fn g_norm(&self, x: &[T]) -> T {
        self.g_inner(x, x).max(T::zero()).sqrt()
    }
}

fn format_point<T: Real>(point: &[T]) -> String {
    point
        .iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Evaluates the immersion's jets at `point` and assembles the frame data.
/// A rank-deficient Jacobian is a hard error naming the point.
pub fn frame_at<T: Real>(scn: &ImmersionScenario<T>, point: &[T]) -> Result<PointGeometry<T>> {
    let k = scn.dim();
    assert_eq!(point.len(), k, "point dimension mismatch");
    let consts = scn.const_map();
    let jets = scn
        .components
        .iter()
        .map(|e| eval_jet2(e, point, &consts))
        .collect::<Result<Vec<_>>>()?;

    let jacobian = Mat::from_rows(&jets.iter().map(|j| j.gradient().to_vec()).collect::<Vec<_>>());
    if !jacobian.is_finite() {
        return Err(Error::InvalidScenario(format!(
            "non-finite immersion derivatives at point ({})",
            format_point(point)
        )));
    }
    let coord_frame: Vec<Vec<T>> = (0..k).map(|j| jacobian.col(j)).collect();

    let tangent = gram_schmidt(&coord_frame, lit::<T>(RANK_TOL));
    if tangent.rank() < k {
        return Err(Error::DegenerateImmersion {
            point: format_point(point),
            rank: tangent.rank(),
            expected: k,
        });
    }
    let normal = complement(&tangent);

    let mut induced_metric = Mat::zeros(k, k);
    for a in 0..k {
        for b in 0..=a {
            let g = dot(&coord_frame[a], &coord_frame[b]);
            induced_metric.set(a, b, g);
            induced_metric.set(b, a, g);
        }
    }
    let metric_solver = SymSolver::new(&induced_metric)?;

    let hessians: Vec<Vec<Vec<T>>> = (0..k)
        .map(|a| {
            (0..k)
                .map(|b| jets.iter().map(|j| j.hessian(a, b)).collect())
                .collect()
        })
        .collect();

    Ok(PointGeometry {
        point: point.to_vec(),
        jacobian,
        coord_frame,
        tangent,
        normal,
        induced_metric,
        hessians,
        metric_solver,
    })
}

/// The four induced operators at a point, as matrices over the coordinate
/// frame (tangent side) and the orthonormal normal basis (normal side):
///
/// * `tt` is T (tangent -> tangent, coordinate frame, k x k)
/// * `nt` is N (tangent -> normal, (m-k) x k)
/// * `tn` is t (normal -> tangent, k x (m-k))
/// * `nn` is n (normal -> normal, (m-k) x (m-k))
#[derive(Debug, Clone, Serialize)]
pub struct InducedOps<T> {
    pub tt: Mat<T>,
    pub nt: Mat<T>,
    pub tn: Mat<T>,
    pub nn: Mat<T>,
}

impl<T: Real> InducedOps<T> {
    /// T applied to coordinate coefficients.
    pub fn t_tan(&self, x: &[T]) -> Vec<T> {
        self.tt.matvec(x)
    }

    /// N applied to coordinate coefficients, in the normal basis.
    pub fn n_tan(&self, x: &[T]) -> Vec<T> {
        self.nt.matvec(x)
    }

    /// t applied to normal-basis coefficients, in the coordinate frame.
    pub fn t_nor(&self, v: &[T]) -> Vec<T> {
        self.tn.matvec(v)
    }

    /// n applied to normal-basis coefficients.
    pub fn n_nor(&self, v: &[T]) -> Vec<T> {
        self.nn.matvec(v)
    }
}

/// Splits J over the tangent/normal decomposition at a point.
pub fn induced_ops<T: Real>(geom: &PointGeometry<T>, j: &StructureOp<T>) -> InducedOps<T> {
    assert_eq!(
        geom.ambient_dim(),
        j.ambient_dim,
        "structure dimension mismatch"
    );
    let k = geom.dim();
    let nk = geom.normal.rank();

    // Columns J Z_i for the coordinate frame.
    let j_frame: Vec<Vec<T>> = geom.coord_frame.iter().map(|z| j.apply(z)).collect();
    // T = G^{-1} (Jac^T J Jac)
    let mut rhs = Mat::zeros(k, k);
    for (i, jz) in j_frame.iter().enumerate() {
        for a in 0..k {
            rhs.set(a, i, dot(&geom.coord_frame[a], jz));
        }
    }
    let tt = geom.metric_solver().solve_mat(&rhs);
    let mut nt = Mat::zeros(nk, k);
    for (i, jz) in j_frame.iter().enumerate() {
        for (a, c) in geom.normal_coords(jz).into_iter().enumerate() {
            nt.set(a, i, c);
        }
    }

    // Columns J nu_a for the orthonormal normal basis.
    let mut tn_rhs = Mat::zeros(k, nk);
    let mut nn = Mat::zeros(nk, nk);
    for (a, nu) in geom.normal.basis().iter().enumerate() {
        let jnu = j.apply(nu);
        for b in 0..k {
            tn_rhs.set(b, a, dot(&geom.coord_frame[b], &jnu));
        }
        for (b, c) in geom.normal_coords(&jnu).into_iter().enumerate() {
            nn.set(b, a, c);
        }
    }
    let tn = geom.metric_solver().solve_mat(&tn_rhs);

    InducedOps { tt, nt, tn, nn }
}

/// h(X, Y): the normal part of sum_ij X^i Y^j d^2 f / du_i du_j, for
/// coordinate-frame coefficient vectors X, Y. Symmetric and tensorial.
pub fn second_fundamental_form<T: Real>(
    geom: &PointGeometry<T>,
    x: &[T],
    y: &[T],
) -> Vec<T> {
    let m = geom.ambient_dim();
    let mut acc = vec![T::zero(); m];
    for (xi, row) in x.iter().zip(&geom.hessians) {
        for (yj, hij) in y.iter().zip(row) {
            let c = *xi * *yj;
            if c != T::zero() {
                crate::numlin::axpy(&mut acc, c, hij);
            }
        }
    }
    geom.normal.project(&acc)
}

/// Shape operator A_V = G^{-1} M with M_ij = <h(d_i, d_j), V>, for an ambient
/// normal vector V. Satisfies <h(X, Y), V> = <A_V X, Y>_g.
pub fn shape_operator<T: Real>(geom: &PointGeometry<T>, v: &[T]) -> Mat<T> {
    let k = geom.dim();
    let mut m = Mat::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let hij = geom.normal.project(&geom.hessians[i][j]);
            let val = dot(&hij, v);
            m.set(i, j, val);
            m.set(j, i, val);
        }
    }
    geom.metric_solver().solve_mat(&m)
}

/// Induced (Levi-Civita) connection: the tangential part of the ambient
/// directional derivative of the pushed-forward field Y along X, returned in
/// coordinate-frame coefficients. Exact via jets.
pub fn tangent_connection<T: Real>(
    scn: &ImmersionScenario<T>,
    x_field: &[Expr],
    y_field: &[Expr],
    point: &[T],
) -> Result<Vec<T>> {
    let consts = scn.const_map();
    let frame = JetFrame::new(frame_at(scn, point)?)?;
    let cx = CoefField::eval(x_field, point, &consts)?;
    let cy = CoefField::eval(y_field, point, &consts)?;
    let yf = frame.tangent_field(&cy);
    let d = yf.dirderiv(&cx.values());
    Ok(frame.geom.tangent_coords(&d))
}

/// Normal connection: the normal part of the directional derivative of an
/// ambient-valued expression field V (which must be normal at the point),
/// in the orthonormal normal basis.
pub fn normal_connection<T: Real>(
    scn: &ImmersionScenario<T>,
    x_field: &[Expr],
    v_field: &[Expr],
    point: &[T],
) -> Result<Vec<T>> {
    let consts = scn.const_map();
    let frame = JetFrame::new(frame_at(scn, point)?)?;
    let vf = frame.ambient_expr_field(v_field, &consts)?;
    let vn = norm(&vf.value);
    let tang = frame.geom.tangent.project(&vf.value);
    let residual = norm(&tang) / vn.max(T::epsilon());
    if residual > lit::<T>(1e-8) {
        return Err(Error::NotANormalField {
            point: format_point(point),
            residual: residual.to_f64().unwrap_or(f64::NAN),
        });
    }
    let cx = CoefField::eval(x_field, point, &consts)?;
    let d = vf.dirderiv(&cx.values());
    Ok(frame.geom.normal_coords(&d))
}

/// Evaluates a distribution at a point: the coefficient vectors of its
/// spanning fields and the ambient subspace they span. Errors if the spanning
/// set loses rank.
pub fn distribution_span<T: Real>(
    geom: &PointGeometry<T>,
    spec: &DistributionSpec,
    consts: &ConstMap<T>,
) -> Result<(Vec<Vec<T>>, Subspace<T>)> {
    let mut coord_vecs = Vec::with_capacity(spec.fields.len());
    let mut ambient = Vec::with_capacity(spec.fields.len());
    for field in &spec.fields {
        let coords: Vec<T> = field
            .iter()
            .map(|e| crate::exprdsl::eval_value(e, &geom.point, consts))
            .collect::<Result<Vec<_>>>()?;
        ambient.push(geom.ambient_from_coords(&coords));
        coord_vecs.push(coords);
    }
    let span = gram_schmidt(&ambient, lit::<T>(RANK_TOL));
    if span.rank() < spec.fields.len() {
        return Err(Error::InvalidScenario(format!(
            "distribution \"{}\" is degenerate at point ({}): rank {} < {}",
            spec.name,
            format_point(&geom.point),
            span.rank(),
            spec.fields.len()
        )));
    }
    Ok((coord_vecs, span))
}

#[cfg(test)]
mod tests;
