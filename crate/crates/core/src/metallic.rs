//! Metallic and Golden structures on flat ambient space: the metallic numbers
//! sigma / sigma_bar, diagonal sigma-pattern operators, and operators induced
//! by almost-product structures.
//!
//! Every operator here is a constant matrix, so its covariant derivative on
//! flat space vanishes identically and the ambient is automatically locally
//! metallic; that property is structural and never needs a numeric check.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numlin::{dot, norm, sub, Mat};
use crate::scalar::{lit, Real};

/// The metallic pair (p, q) together with the positive root sigma of
/// x^2 - p x - q and its conjugate sigma_bar = p - sigma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetallicParams<T> {
    pub p: u32,
    pub q: u32,
    pub sigma: T,
    pub sigma_bar: T,
}

/// Computes the metallic number for positive integers p, q >= 1.
pub fn metallic_number<T: Real>(p: u32, q: u32) -> MetallicParams<T> {
    assert!(p >= 1 && q >= 1, "metallic parameters require p, q >= 1");
    let pf = lit::<T>(p as f64);
    let qf = lit::<T>(q as f64);
    let sigma = (pf + (pf * pf + lit::<T>(4.0) * qf).sqrt()) / lit::<T>(2.0);
    MetallicParams {
        p,
        q,
        sigma,
        sigma_bar: pf - sigma,
    }
}

impl<T: Real> MetallicParams<T> {
    pub fn p_real(&self) -> T {
        lit(self.p as f64)
    }

    pub fn q_real(&self) -> T {
        lit(self.q as f64)
    }
}

/// Which metallic root sits on an axis of a diagonal pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AxisRoot {
    Sigma,
    SigmaBar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StructureKind {
    DiagonalPattern,
    ProductInduced,
    Custom,
}

/// An almost-product structure: symmetric with F^2 = I.
#[derive(Debug, Clone, Serialize)]
pub struct ProductStructure<T> {
    matrix: Mat<T>,
}

impl<T: Real> ProductStructure<T> {
    /// Validates F^2 = I (within 1e-9) and symmetry before wrapping.
    pub fn new(matrix: Mat<T>) -> Result<Self> {
        let n = matrix.rows();
        if matrix.cols() != n {
            return Err(Error::DimensionMismatch(
                "product structure must be square".into(),
            ));
        }
        let residual = matrix
            .matmul(&matrix)
            .sub(&Mat::identity(n))
            .max_abs()
            .max(matrix.symmetry_residual());
        if residual > lit::<T>(1e-9) {
            return Err(Error::InvalidProduct {
                residual: residual.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(ProductStructure { matrix })
    }

    pub fn matrix(&self) -> &Mat<T> {
        &self.matrix
    }
}

/// An ambient metallic operator J with its parameters. The matrix is constant
/// over the ambient space and symmetric, so the Euclidean metric is
/// J-compatible by construction.
#[derive(Debug, Clone, Serialize)]
pub struct StructureOp<T> {
    pub ambient_dim: usize,
    pub matrix: Mat<T>,
    pub params: MetallicParams<T>,
    pub kind: StructureKind,
    /// Underlying almost-product decomposition J = (p/2) I +/- ((2 sigma - p)/2) F,
    /// available for diagonal patterns and product-induced operators.
    pub product: Option<(Mat<T>, Sign)>,
}

impl<T: Real> StructureOp<T> {
    pub fn apply(&self, v: &[T]) -> Vec<T> {
        self.matrix.matvec(v)
    }

    /// Wraps a user-provided matrix; callers must gate it behind
    /// [`verify_structure`] before use.
    pub fn custom(matrix: Mat<T>, params: MetallicParams<T>) -> Self {
        StructureOp {
            ambient_dim: matrix.rows(),
            matrix,
            params,
            kind: StructureKind::Custom,
            product: None,
        }
    }
}

/// Diagonal operator with sigma or sigma_bar on each axis.
pub fn diagonal_structure<T: Real>(
    pattern: &[AxisRoot],
    params: MetallicParams<T>,
) -> StructureOp<T> {
    let diag: Vec<T> = pattern
        .iter()
        .map(|r| match r {
            AxisRoot::Sigma => params.sigma,
            AxisRoot::SigmaBar => params.sigma_bar,
        })
        .collect();
    // sigma axes carry F = +1, sigma_bar axes F = -1, with the plus sign.
    let f_diag: Vec<T> = pattern
        .iter()
        .map(|r| match r {
            AxisRoot::Sigma => T::one(),
            AxisRoot::SigmaBar => -T::one(),
        })
        .collect();
    StructureOp {
        ambient_dim: pattern.len(),
        matrix: Mat::diagonal(&diag),
        params,
        kind: StructureKind::DiagonalPattern,
        product: Some((Mat::diagonal(&f_diag), Sign::Plus)),
    }
}

/// J = (p/2) I +/- ((2 sigma - p)/2) F for a validated product structure.
pub fn from_product<T: Real>(
    f: &ProductStructure<T>,
    params: MetallicParams<T>,
    sign: Sign,
) -> StructureOp<T> {
    let n = f.matrix().rows();
    let half_p = params.p_real() / lit::<T>(2.0);
    let amp = (lit::<T>(2.0) * params.sigma - params.p_real()) / lit::<T>(2.0);
    let amp = match sign {
        Sign::Plus => amp,
        Sign::Minus => -amp,
    };
    let matrix = Mat::identity(n).scaled(half_p).add(&f.matrix().scaled(amp));
    StructureOp {
        ambient_dim: n,
        matrix,
        params,
        kind: StructureKind::ProductInduced,
        product: Some((f.matrix().clone(), sign)),
    }
}

/// Convenience: validate a raw matrix as a product structure and induce J.
pub fn from_product_matrix<T: Real>(
    matrix: Mat<T>,
    params: MetallicParams<T>,
    sign: Sign,
) -> Result<StructureOp<T>> {
    Ok(from_product(&ProductStructure::new(matrix)?, params, sign))
}

/// Residual statistics for the three defining identities of a metallic
/// Riemannian structure, sampled over random vector pairs.
#[derive(Debug, Clone, Serialize)]
pub struct StructureCheck<T> {
    /// max over samples of ||J^2 x - p J x - q x|| / ||x||
    pub quadratic_residual: T,
    /// max over samples of |<J x, y> - <x, J y>| / (||x|| ||y||)
    pub compatibility_residual: T,
    /// max over samples of |<J x, J y> - p <J x, y> - q <x, y>| / (||x|| ||y||)
    pub metric_residual: T,
    pub samples: usize,
    pub pass: bool,
}

pub const STRUCTURE_TOL: f64 = 1e-10;

/// Samples random vector pairs and measures the defining residuals; passes
/// iff all three stay below 1e-10.
pub fn verify_structure<T: Real>(j: &StructureOp<T>, samples: usize, seed: u64) -> StructureCheck<T> {
    assert!(samples >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = j.ambient_dim;
    let p = j.params.p_real();
    let q = j.params.q_real();
    let mut quad = T::zero();
    let mut compat = T::zero();
    let mut metric = T::zero();
    for _ in 0..samples {
        let x = random_vec::<T>(&mut rng, n);
        let y = random_vec::<T>(&mut rng, n);
        let jx = j.apply(&x);
        let jy = j.apply(&y);
        let jjx = j.apply(&jx);
        let nx = norm(&x);
        let ny = norm(&y);
        let mut r = sub(&jjx, &scalev(&jx, p));
        r = sub(&r, &scalev(&x, q));
        quad = quad.max(norm(&r) / nx);
        compat = compat.max((dot(&jx, &y) - dot(&x, &jy)).abs() / (nx * ny));
        metric = metric
            .max((dot(&jx, &jy) - p * dot(&jx, &y) - q * dot(&x, &y)).abs() / (nx * ny));
    }
    let tol = lit::<T>(STRUCTURE_TOL);
    StructureCheck {
        quadratic_residual: quad,
        compatibility_residual: compat,
        metric_residual: metric,
        samples,
        pass: quad < tol && compat < tol && metric < tol,
    }
}

/// (J - p I) / q, the inverse of J by the defining quadratic.
pub fn inverse<T: Real>(j: &StructureOp<T>) -> Mat<T> {
    let n = j.ambient_dim;
    let p = j.params.p_real();
    let q = j.params.q_real();
    j.matrix
        .sub(&Mat::identity(n).scaled(p))
        .scaled(T::one() / q)
}

fn scalev<T: Real>(v: &[T], c: T) -> Vec<T> {
    v.iter().map(|&x| x * c).collect()
}

fn random_vec<T: Real>(rng: &mut ChaCha8Rng, n: usize) -> Vec<T> {
    loop {
        let v: Vec<T> = (0..n).map(|_| lit(rng.gen_range(-1.0..1.0))).collect();
        if norm(&v) > lit::<T>(0.1) {
            return v;
        }
    }
}
