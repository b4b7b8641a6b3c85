//! First-order jets of ambient vector fields along an immersion.
//!
//! A [`FieldJet`] carries the value of an ambient-vector-valued field and its
//! partial derivatives with respect to the surface parameters, all exact.
//! Projections onto the (point-dependent) tangent space, normal space, or a
//! distribution compose through [`ProjectorJet`], whose own derivative is
//! assembled from the Jacobian and Hessian of the immersion. This is what lets
//! covariant derivatives of composed operators like T or N be evaluated to
//! machine precision instead of by finite differencing.

use crate::error::{Error, Result};
use crate::exprdsl::{eval_jet2, ConstMap, Expr, Jet2};
use crate::numlin::{axpy, sub, Mat};
use crate::scalar::Real;

use super::PointGeometry;

/// Value and parameter-partials of an ambient vector field at a point.
#[derive(Debug, Clone)]
pub struct FieldJet<T> {
    /// Ambient value (length m).
    pub value: Vec<T>,
    /// `partials[i]` is the ambient vector of partial derivatives along the
    /// i-th surface parameter (k entries of length m).
    pub partials: Vec<Vec<T>>,
}

impl<T: Real> FieldJet<T> {
    pub fn zero(m: usize, k: usize) -> Self {
        FieldJet {
            value: vec![T::zero(); m],
            partials: vec![vec![T::zero(); m]; k],
        }
    }

    /// Applies a constant ambient matrix (like the structure operator J).
    pub fn apply_matrix(&self, a: &Mat<T>) -> Self {
        FieldJet {
            value: a.matvec(&self.value),
            partials: self.partials.iter().map(|p| a.matvec(p)).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        FieldJet {
            value: crate::numlin::add(&self.value, &rhs.value),
            partials: self
                .partials
                .iter()
                .zip(&rhs.partials)
                .map(|(a, b)| crate::numlin::add(a, b))
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        FieldJet {
            value: sub(&self.value, &rhs.value),
            partials: self
                .partials
                .iter()
                .zip(&rhs.partials)
                .map(|(a, b)| sub(a, b))
                .collect(),
        }
    }

    /// Multiplies by a scalar function given as a jet (value + gradient).
    pub fn mul_scalar(&self, s: &Jet2<T>) -> Self {
        let sv = s.value();
        let value: Vec<T> = self.value.iter().map(|&x| x * sv).collect();
        let partials = self
            .partials
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let si = s.gradient()[i];
                p.iter()
                    .zip(&self.value)
                    .map(|(&dp, &v)| sv * dp + si * v)
                    .collect()
            })
            .collect();
        FieldJet { value, partials }
    }

    /// Directional derivative of the field along tangent coordinates `x`:
    /// sum_i x_i * partials[i].
    pub fn dirderiv(&self, x: &[T]) -> Vec<T> {
        let m = self.value.len();
        let mut out = vec![T::zero(); m];
        for (p, &xi) in self.partials.iter().zip(x) {
            axpy(&mut out, xi, p);
        }
        out
    }
}

/// Orthogonal projector onto a varying subspace, with its parameter-partials.
#[derive(Debug, Clone)]
pub struct ProjectorJet<T> {
    pub proj: Mat<T>,
    pub dproj: Vec<Mat<T>>,
}

impl<T: Real> ProjectorJet<T> {
    /// Builds the projector onto the span of linearly independent spanning
    /// fields. P = B Gram^{-1} B^T with B the column matrix of the spans.
    pub fn from_spanning(fields: &[FieldJet<T>], k: usize) -> Result<Self> {
        let r = fields.len();
        if fields.is_empty() {
            return Err(Error::DimensionMismatch(
                "projector needs spanning fields".into(),
            ));
        }
        let b = Mat::from_cols(&fields.iter().map(|f| f.value.clone()).collect::<Vec<_>>());
        let mut gram = Mat::zeros(r, r);
        for i in 0..r {
            for j in 0..=i {
                let g = crate::numlin::dot(&fields[i].value, &fields[j].value);
                gram.set(i, j, g);
                gram.set(j, i, g);
            }
        }
        let solver = crate::numlin::SymSolver::new(&gram).map_err(|_| {
            Error::InvalidScenario("distribution spanning fields are linearly dependent".into())
        })?;
        let ginv = solver.inverse();
        let bt = b.transpose();
        let proj = b.matmul(&ginv).matmul(&bt);
        let mut dproj = Vec::with_capacity(k);
        for i in 0..k {
            let db = Mat::from_cols(
                &fields
                    .iter()
                    .map(|f| f.partials[i].clone())
                    .collect::<Vec<_>>(),
            );
            let dbt = db.transpose();
            // dGram = dB^T B + B^T dB
            let dgram = dbt.matmul(&b).add(&bt.matmul(&db));
            // dGram^{-1} = -G^{-1} dGram G^{-1}
            let dginv = ginv.matmul(&dgram).matmul(&ginv).scaled(-T::one());
            let dp = db
                .matmul(&ginv)
                .matmul(&bt)
                .add(&b.matmul(&dginv).matmul(&bt))
                .add(&b.matmul(&ginv).matmul(&dbt));
            dproj.push(dp);
        }
        Ok(ProjectorJet { proj, dproj })
    }

    /// Projects a field, propagating the projector's own derivative:
    /// d(P F) = dP F + P dF.
    pub fn apply(&self, f: &FieldJet<T>) -> FieldJet<T> {
        let value = self.proj.matvec(&f.value);
        let partials = f
            .partials
            .iter()
            .zip(&self.dproj)
            .map(|(df, dp)| {
                crate::numlin::add(&dp.matvec(&f.value), &self.proj.matvec(df))
            })
            .collect();
        FieldJet { value, partials }
    }

    /// Complementary projection (I - P) applied to a field.
    pub fn apply_complement(&self, f: &FieldJet<T>) -> FieldJet<T> {
        f.sub(&self.apply(f))
    }

    pub fn project_vec(&self, v: &[T]) -> Vec<T> {
        self.proj.matvec(v)
    }
}

/// A tangent vector field presented in the coordinate frame by one scalar jet
/// per coefficient.
#[derive(Debug, Clone)]
pub struct CoefField<T> {
    pub jets: Vec<Jet2<T>>,
}

impl<T: Real> CoefField<T> {
    pub fn eval(exprs: &[Expr], point: &[T], consts: &ConstMap<T>) -> Result<Self> {
        let jets = exprs
            .iter()
            .map(|e| eval_jet2(e, point, consts))
            .collect::<Result<Vec<_>>>()?;
        Ok(CoefField { jets })
    }

    /// Constant-coefficient field.
    pub fn constant(coords: &[T], k: usize) -> Self {
        CoefField {
            jets: coords.iter().map(|&c| Jet2::constant(c, k)).collect(),
        }
    }

    pub fn values(&self) -> Vec<T> {
        self.jets.iter().map(|j| j.value()).collect()
    }

    /// Linear combination sum_s scalars[s] * fields[s] at the jet level.
    pub fn lincomb(fields: &[&CoefField<T>], scalars: &[Jet2<T>]) -> Self {
        let k = fields[0].jets.len();
        let n = fields[0].jets[0].nvars();
        let mut jets = vec![Jet2::constant(T::zero(), n); k];
        for (f, s) in fields.iter().zip(scalars) {
            for (acc, j) in jets.iter_mut().zip(&f.jets) {
                *acc = acc.add(&j.mul(s));
            }
        }
        CoefField { jets }
    }

    /// Coordinate Lie bracket [X, Y]^a = sum_i (X^i dY^a/du^i - Y^i dX^a/du^i).
    pub fn bracket(&self, other: &Self) -> Vec<T> {
        let k = self.jets.len();
        (0..k)
            .map(|a| {
                let mut acc = T::zero();
                for i in 0..k {
                    acc += self.jets[i].value() * other.jets[a].gradient()[i]
                        - other.jets[i].value() * self.jets[a].gradient()[i];
                }
                acc
            })
            .collect()
    }
}

/// Jet-aware frame at a point: the plain geometry plus the derivative of the
/// tangent projector, which every composed-field computation shares.
#[derive(Debug)]
pub struct JetFrame<T> {
    pub geom: PointGeometry<T>,
    pub tangent_proj: ProjectorJet<T>,
}

impl<T: Real> JetFrame<T> {
    pub fn new(geom: PointGeometry<T>) -> Result<Self> {
        let k = geom.dim();
        let coord_fields: Vec<FieldJet<T>> = (0..k).map(|j| coord_field(&geom, j)).collect();
        let tangent_proj = ProjectorJet::from_spanning(&coord_fields, k)?;
        Ok(JetFrame { geom, tangent_proj })
    }

    /// The ambient field of the coordinate direction `j`.
    pub fn coord_field(&self, j: usize) -> FieldJet<T> {
        coord_field(&self.geom, j)
    }

    /// Pushes a coefficient field to its ambient realization
    /// sum_j c_j(u) df/du_j with exact partials.
    pub fn tangent_field(&self, coef: &CoefField<T>) -> FieldJet<T> {
        let m = self.geom.ambient_dim();
        let k = self.geom.dim();
        let mut out = FieldJet::zero(m, k);
        for (j, cj) in coef.jets.iter().enumerate() {
            out = out.add(&self.coord_field(j).mul_scalar(cj));
        }
        out
    }

    /// Evaluates m component expressions into an ambient field.
    pub fn ambient_expr_field(
        &self,
        exprs: &[Expr],
        consts: &ConstMap<T>,
    ) -> Result<FieldJet<T>> {
        let k = self.geom.dim();
        let jets = exprs
            .iter()
            .map(|e| eval_jet2(e, &self.geom.point, consts))
            .collect::<Result<Vec<_>>>()?;
        let value: Vec<T> = jets.iter().map(|j| j.value()).collect();
        let partials = (0..k)
            .map(|i| jets.iter().map(|j| j.gradient()[i]).collect())
            .collect();
        Ok(FieldJet { value, partials })
    }

    pub fn project_tangent(&self, f: &FieldJet<T>) -> FieldJet<T> {
        self.tangent_proj.apply(f)
    }

    pub fn project_normal(&self, f: &FieldJet<T>) -> FieldJet<T> {
        self.tangent_proj.apply_complement(f)
    }

    /// Projector jet onto the span of a distribution's fields at this point.
    pub fn distribution_projector(
        &self,
        spanning: &[CoefField<T>],
    ) -> Result<ProjectorJet<T>> {
        let fields: Vec<FieldJet<T>> = spanning.iter().map(|c| self.tangent_field(c)).collect();
        ProjectorJet::from_spanning(&fields, self.geom.dim())
    }

    /// Tangential part (ambient vector) of the ambient directional derivative
    /// of `field` along tangent coordinates `x`.
    pub fn nabla_tangential(&self, x: &[T], field: &FieldJet<T>) -> Vec<T> {
        let d = field.dirderiv(x);
        self.geom.tangent.project(&d)
    }

    /// Normal part (ambient vector) of the directional derivative.
    pub fn nabla_normal(&self, x: &[T], field: &FieldJet<T>) -> Vec<T> {
        let d = field.dirderiv(x);
        self.geom.normal.project(&d)
    }
}

fn coord_field<T: Real>(geom: &PointGeometry<T>, j: usize) -> FieldJet<T> {
    FieldJet {
        value: geom.coord_frame[j].clone(),
        partials: (0..geom.dim())
            .map(|i| geom.hessians[i][j].clone())
            .collect(),
    }
}
