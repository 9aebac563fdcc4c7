use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

type ValueFn = dyn Fn(&[f64]) -> DVector<f64> + Send + Sync;
type JacobianFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

/// A C¹ vector field `R : ℝ^N → ℝ^N` with its exact Jacobian, defining the
/// transport `T_δ = id + δR`.
#[derive(Clone)]
pub struct PerturbationField {
    dim: usize,
    name: String,
    value: Arc<ValueFn>,
    jacobian: Arc<JacobianFn>,
    pub is_divergence_free: bool,
    pub is_constant: bool,
}

impl fmt::Debug for PerturbationField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PerturbationField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("is_divergence_free", &self.is_divergence_free)
            .field("is_constant", &self.is_constant)
            .finish()
    }
}

/// Sample points and tolerances of the Jacobian check.
const CHECK_POINTS: usize = 10;
const CHECK_STEP: f64 = 1e-6;
const CHECK_TOL: f64 = 1e-6;

impl PerturbationField {
    /// Builds a field and verifies `jacobian` against central differences at
    /// ten seeded points of `[−1, 1]^N`, and the divergence tag.
    pub fn new<V, J>(
        dim: usize,
        name: impl Into<String>,
        value: V,
        jacobian: J,
        is_divergence_free: bool,
        is_constant: bool,
    ) -> Result<Self>
    where
        V: Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
        J: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        if !(2..=3).contains(&dim) {
            return Err(Error::Unsupported(format!("fields in dimension {dim}")));
        }
        let f = Self {
            dim,
            name: name.into(),
            value: Arc::new(value),
            jacobian: Arc::new(jacobian),
            is_divergence_free,
            is_constant,
        };
        let err = f.jacobian_error(CHECK_POINTS, CHECK_STEP, 0x5eed);
        if err > CHECK_TOL {
            return Err(Error::InvalidInput(format!(
                "Jacobian of {} disagrees with finite differences ({err:e})",
                f.name
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0xd1f);
        for _ in 0..CHECK_POINTS {
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let j = f.jacobian(&x);
            if is_divergence_free && j.trace().abs() > 1e-10 {
                return Err(Error::InvalidInput(format!("{} is tagged divergence-free", f.name)));
            }
            if is_constant && j.abs().max() > 0.0 {
                return Err(Error::InvalidInput(format!("{} is tagged constant", f.name)));
            }
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, x: &[f64]) -> DVector<f64> {
        (self.value)(x)
    }

    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        (self.jacobian)(x)
    }

    pub fn divergence(&self, x: &[f64]) -> f64 {
        self.jacobian(x).trace()
    }

    /// Largest relative deviation of the Jacobian from central differences.
    pub fn jacobian_error(&self, points: usize, step: f64, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..points {
            let x: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let j = self.jacobian(&x);
            let scale = j.abs().max().max(1.0);
            for k in 0..self.dim {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += step;
                xm[k] -= step;
                let col = (self.value(&xp) - self.value(&xm)) / (2.0 * step);
                for i in 0..self.dim {
                    worst = worst.max((col[i] - j[(i, k)]).abs() / scale);
                }
            }
        }
        worst
    }

    /// `R(x) = x`.
    pub fn dilation(dim: usize) -> Self {
        Self::linear(DMatrix::identity(dim, dim), "dilation").unwrap()
    }

    /// Constant field `c`.
    pub fn translation(c: Vec<f64>) -> Result<Self> {
        let dim = c.len();
        let v = DVector::from_vec(c);
        Self::new(
            dim,
            "translation",
            move |_| v.clone(),
            move |_| DMatrix::zeros(dim, dim),
            true,
            true,
        )
    }

    /// `R(x) = M x`.
    pub fn linear(m: DMatrix<f64>, name: &str) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidInput("linear field needs a square matrix".into()));
        }
        let dim = m.nrows();
        let free = m.trace().abs() <= 1e-14 * m.abs().max().max(1.0);
        let mv = m.clone();
        Self::new(
            dim,
            name,
            move |x| &mv * DVector::from_column_slice(x),
            move |_| m.clone(),
            free,
            false,
        )
    }

    /// Rigid rotation: `(−y, x)` in the plane, `a × x` in space.
    pub fn rotation(dim: usize) -> Self {
        let m = match dim {
            2 => DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]),
            _ => {
                // a = (1, 2, 3) / |a|.
                let n = 14f64.sqrt();
                let a = [1.0 / n, 2.0 / n, 3.0 / n];
                DMatrix::from_row_slice(3, 3, &[0.0, -a[2], a[1], a[2], 0.0, -a[0], -a[1], a[0], 0.0])
            }
        };
        Self::linear(m, "rotation").unwrap()
    }

    /// Planar shear `(y, 0)`.
    pub fn shear() -> Self {
        Self::linear(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]), "shear").unwrap()
    }

    /// `M − (tr M / N) I` for `M` a shear plus stretch: divergence-free
    /// but not tangent to spheres.
    pub fn shear_trace_free(dim: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(0, 0)] = 1.0;
        m[(0, 1)] = 1.0;
        m[(dim - 1, 0)] = 0.5;
        let t = m.trace() / dim as f64;
        for i in 0..dim {
            m[(i, i)] -= t;
        }
        Self::linear(m, "shear_trace_free").unwrap()
    }

    /// `(1 + |x|²)` times the rotation field: tangent to every centred
    /// sphere and divergence-free.
    pub fn tangential_polynomial(dim: usize) -> Self {
        let rot = Self::rotation(dim);
        let w = rot.jacobian(&vec![0.0; dim]);
        let w2 = w.clone();
        Self::new(
            dim,
            "tangential_polynomial",
            move |x| {
                let v = DVector::from_column_slice(x);
                (1.0 + v.norm_squared()) * (&w * &v)
            },
            move |x| {
                let v = DVector::from_column_slice(x);
                let wx = &w2 * &v;
                (1.0 + v.norm_squared()) * &w2 + 2.0 * wx * v.transpose()
            },
            true,
            false,
        )
        .unwrap()
    }

    /// Planar polynomial field from monomials `c · x^i y^j` per component.
    pub fn polynomial(terms: [Vec<(u32, u32, f64)>; 2], name: &str) -> Result<Self> {
        let eval = |t: &[(u32, u32, f64)], x: f64, y: f64| -> f64 {
            t.iter().map(|&(i, j, c)| c * x.powi(i as i32) * y.powi(j as i32)).sum()
        };
        let dx = |t: &[(u32, u32, f64)], x: f64, y: f64| -> f64 {
            t.iter()
                .filter(|m| m.0 > 0)
                .map(|&(i, j, c)| c * i as f64 * x.powi(i as i32 - 1) * y.powi(j as i32))
                .sum()
        };
        let dy = |t: &[(u32, u32, f64)], x: f64, y: f64| -> f64 {
            t.iter()
                .filter(|m| m.1 > 0)
                .map(|&(i, j, c)| c * j as f64 * x.powi(i as i32) * y.powi(j as i32 - 1))
                .sum()
        };
        let is_constant = terms.iter().flatten().all(|&(i, j, c)| (i == 0 && j == 0) || c == 0.0);
        let t1 = terms.clone();
        let t2 = terms;
        // Divergence-free exactly when ∂x R₀ + ∂y R₁ has no surviving monomial.
        let mut div: std::collections::BTreeMap<(u32, u32), f64> = Default::default();
        for &(i, j, c) in &t1[0] {
            if i > 0 {
                *div.entry((i - 1, j)).or_default() += c * i as f64;
            }
        }
        for &(i, j, c) in &t1[1] {
            if j > 0 {
                *div.entry((i, j - 1)).or_default() += c * j as f64;
            }
        }
        let free = div.values().all(|c| c.abs() <= 1e-14);
        Self::new(
            2,
            name,
            move |x| DVector::from_vec(vec![eval(&t1[0], x[0], x[1]), eval(&t1[1], x[0], x[1])]),
            move |x| {
                DMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        dx(&t2[0], x[0], x[1]),
                        dy(&t2[0], x[0], x[1]),
                        dx(&t2[1], x[0], x[1]),
                        dy(&t2[1], x[0], x[1]),
                    ],
                )
            },
            free,
            is_constant,
        )
    }

    /// `a R₁ + b R₂`.
    pub fn combine(a: f64, r1: &Self, b: f64, r2: &Self) -> Result<Self> {
        if r1.dim != r2.dim {
            return Err(Error::InvalidInput("fields of different dimension".into()));
        }
        let (v1, v2, j1, j2) = (r1.clone(), r2.clone(), r1.clone(), r2.clone());
        Ok(Self {
            dim: r1.dim,
            name: format!("{a}*{}+{b}*{}", r1.name, r2.name),
            value: Arc::new(move |x| a * v1.value(x) + b * v2.value(x)),
            jacobian: Arc::new(move |x| a * j1.jacobian(x) + b * j2.jacobian(x)),
            is_divergence_free: r1.is_divergence_free && r2.is_divergence_free,
            is_constant: r1.is_constant && r2.is_constant,
        })
    }

    /// Built-in fields by name.
    pub fn builtin(name: &str, dim: usize) -> Result<Self> {
        match name {
            "dilation" => Ok(Self::dilation(dim)),
            "translation" => {
                let mut c = vec![0.0; dim];
                c[0] = 1.0;
                c[1] = 0.5;
                Self::translation(c)
            }
            "rotation" => Ok(Self::rotation(dim)),
            "shear" if dim == 2 => Ok(Self::shear()),
            "shear_trace_free" => Ok(Self::shear_trace_free(dim)),
            "tangential_polynomial" => Ok(Self::tangential_polynomial(dim)),
            _ => Err(Error::InvalidInput(format!("unknown field {name:?} in dimension {dim}"))),
        }
    }
}

/// `f(X) = div R(x) − Xᵀ DR(x) X` for a unit vector `X`.
pub fn f_quadratic(x_dir: &[f64], x: &[f64], field: &PerturbationField) -> Result<f64> {
    if x_dir.len() != field.dim() || x.len() != field.dim() {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    let n: f64 = x_dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("direction has norm {n}, expected 1")));
    }
    Ok(f_unchecked(x_dir, x, field))
}

pub(crate) fn f_unchecked(x_dir: &[f64], x: &[f64], field: &PerturbationField) -> f64 {
    let j = field.jacobian(x);
    let v = DVector::from_column_slice(x_dir);
    j.trace() - v.dot(&(&j * &v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_examples() {
        let x = [0.3, -0.2];
        let dir = [0.6, 0.8];
        assert!((f_quadratic(&dir, &x, &PerturbationField::dilation(2)).unwrap() - 1.0).abs() < 1e-15);
        let t = PerturbationField::translation(vec![1.0, 2.0]).unwrap();
        assert_eq!(f_quadratic(&dir, &x, &t).unwrap(), 0.0);
        let r = PerturbationField::rotation(2);
        assert_eq!(f_quadratic(&dir, &x, &r).unwrap(), 0.0);
        assert!(f_quadratic(&[1.0, 1.0], &x, &r).is_err());
    }

    #[test]
    fn builtin_tags() {
        for dim in [2, 3] {
            assert!(PerturbationField::rotation(dim).is_divergence_free);
            assert!(PerturbationField::tangential_polynomial(dim).is_divergence_free);
            assert!(PerturbationField::shear_trace_free(dim).is_divergence_free);
            assert!(!PerturbationField::dilation(dim).is_divergence_free);
        }
        assert!(PerturbationField::shear().is_divergence_free);
    }

    #[test]
    fn wrong_jacobian_rejected() {
        let bad = PerturbationField::new(
            2,
            "bad",
            |x| DVector::from_vec(vec![x[0] * x[0], 0.0]),
            |_| DMatrix::identity(2, 2),
            false,
            false,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn false_divergence_tag_rejected() {
        let bad = PerturbationField::new(
            2,
            "bad",
            DVector::from_column_slice,
            |_| DMatrix::identity(2, 2),
            true,
            false,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn polynomial_jacobian_and_tags() {
        // R = (x y², −y³/3): ∂x(x y²) + ∂y(−y³/3) = 0.
        let f = PerturbationField::polynomial(
            [vec![(1, 2, 1.0)], vec![(0, 3, -1.0 / 3.0)]],
            "poly",
        )
        .unwrap();
        assert!(f.is_divergence_free);
        assert!(f.jacobian_error(10, 1e-6, 3) < 1e-8);
    }
}
