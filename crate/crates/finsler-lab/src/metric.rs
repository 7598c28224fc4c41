//! Pointwise evaluation of the ambient objects of a Finsler metric on its
//! slit tangent bundle: fundamental tensor, Cartan tensor, spray, nonlinear
//! connection, distinguished section, adapted frames, Ehresmann form and
//! Sasaki inner product.
//!
//! Everything is read off one jet evaluation of F^2 in the 2n variables
//! (base..., fiber...), truncated at [`JET_ORDER`]. Index conventions:
//! variables 0..n are base coordinates, n..2n fiber coordinates.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::jet::Jet;
use crate::linalg::{spd_inverse, Tensor3};

/// Truncation order of every jet evaluation in the pipeline. Order 4 covers
/// the deepest object used anywhere: the fiber derivative of the nonlinear
/// connection (Berwald coefficients), which sits at total order 4 in F^2.
pub const JET_ORDER: usize = 4;

/// A point (x, y) of the slit tangent bundle, y != 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TangentPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl TangentPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<TangentPoint> {
        if y.iter().map(|v| v * v).sum::<f64>() == 0.0 {
            return Err(Error::Domain(
                "fiber vector must be nonzero (slit tangent bundle)".into(),
            ));
        }
        if x.len() != y.len() {
            return Err(Error::Domain(format!(
                "base and fiber dimensions differ: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        Ok(TangentPoint { x, y })
    }
}

/// A Finsler structure whose squared norm can be evaluated in jet arithmetic
/// at a point of the slit tangent bundle. Implemented by the declarative
/// [`MetricSpec`] and by the induced structure of an immersed submanifold.
pub trait MetricField: Sync {
    fn dim(&self) -> usize;

    /// Jet of F^2 in 2 dim variables (base..., fiber...) at the given point.
    fn f2_jet(&self, base: &[f64], fiber: &[f64], order: usize) -> Result<Jet>;

    /// Plain f64 evaluation of F^2; used by the finite-difference oracle and
    /// deliberately free of jet code.
    fn f2_value(&self, base: &[f64], fiber: &[f64]) -> Result<f64>;

    /// True when F^2 is exactly quadratic in the fiber (euclidean and
    /// riemannian metrics), which forces the Cartan tensor to vanish.
    fn fiber_quadratic(&self) -> bool {
        false
    }
}

/// Declarative metric definition.
#[derive(Debug, Clone)]
pub enum MetricSpec {
    Euclidean {
        dim: usize,
    },
    /// F^2 = a_ij(x) y^i y^j with a symmetric positive definite.
    Riemannian {
        dim: usize,
        a: Vec<Vec<Expr>>,
    },
    /// F = sqrt(a_ij(x) y^i y^j) + b_i(x) y^i with a^{ij} b_i b_j < 1.
    Randers {
        dim: usize,
        a: Vec<Vec<Expr>>,
        b: Vec<Expr>,
    },
    /// F given directly as an expression in x1..xn, y1..yn.
    Custom {
        dim: usize,
        f: Expr,
    },
}

/// Variable name lists "x1..xn" / "y1..yn" / "u1..um".
pub fn coord_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn parse_matrix(entries: &[Vec<String>], vars: &[&str], n: usize) -> Result<Vec<Vec<Expr>>> {
    if entries.len() != n || entries.iter().any(|row| row.len() != n) {
        return Err(Error::Scene(format!("metric matrix must be {n} x {n}")));
    }
    entries
        .iter()
        .map(|row| row.iter().map(|s| expr::parse(s, vars)).collect())
        .collect()
}

impl MetricSpec {
    pub fn euclidean(dim: usize) -> MetricSpec {
        MetricSpec::Euclidean { dim }
    }

    pub fn riemannian(dim: usize, entries: &[Vec<String>]) -> Result<MetricSpec> {
        let names = coord_names("x", dim);
        let vars: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        Ok(MetricSpec::Riemannian {
            dim,
            a: parse_matrix(entries, &vars, dim)?,
        })
    }

    pub fn randers(dim: usize, a: &[Vec<String>], b: &[String]) -> Result<MetricSpec> {
        let names = coord_names("x", dim);
        let vars: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        if b.len() != dim {
            return Err(Error::Scene(format!(
                "drift one-form must have {dim} components"
            )));
        }
        Ok(MetricSpec::Randers {
            dim,
            a: parse_matrix(a, &vars, dim)?,
            b: b.iter()
                .map(|s| expr::parse(s, &vars))
                .collect::<Result<_>>()?,
        })
    }

    pub fn custom(dim: usize, f: &str) -> Result<MetricSpec> {
        let mut names = coord_names("x", dim);
        names.extend(coord_names("y", dim));
        let vars: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        Ok(MetricSpec::Custom {
            dim,
            f: expr::parse(f, &vars)?,
        })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            MetricSpec::Euclidean { .. } => "euclidean",
            MetricSpec::Riemannian { .. } => "riemannian",
            MetricSpec::Randers { .. } => "randers",
            MetricSpec::Custom { .. } => "custom",
        }
    }

    /// Evaluate the riemannian-part matrix at x, checking symmetry.
    fn a_values(a: &[Vec<Expr>], x: &[f64]) -> Result<DMatrix<f64>> {
        let n = a.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = a[i][j].eval_f64(x)?;
            }
        }
        let asym = (&m - m.transpose()).abs().max();
        if asym > 1e-12 {
            return Err(Error::Scene(format!(
                "riemannian matrix is not symmetric (max asymmetry {asym:.3e})"
            )));
        }
        Ok(m)
    }

    /// The riemannian-part matrix a(x) for fiber-quadratic kinds.
    pub fn riemannian_part(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        match self {
            MetricSpec::Euclidean { dim } => Ok(DMatrix::identity(*dim, *dim)),
            MetricSpec::Riemannian { a, .. } => MetricSpec::a_values(a, x),
            _ => Err(Error::Scene("metric kind has no riemannian part".into())),
        }
    }

    /// Evaluate F^2 on caller-supplied jets for the base and fiber slots;
    /// this is how the induced structure of a submanifold composes the
    /// ambient metric with immersion jets.
    pub fn f2_on_jets(&self, x: &[Jet], y: &[Jet]) -> Result<Jet> {
        let n = self.dim();
        assert_eq!(x.len(), n);
        assert_eq!(y.len(), n);
        let nv = x[0].num_vars();
        let order = x[0].order();
        let base: Vec<f64> = x.iter().map(|j| j.value()).collect();
        match self {
            MetricSpec::Euclidean { .. } => {
                let mut acc = Jet::constant(0.0, nv, order);
                for yi in y {
                    acc = &acc + &(yi * yi);
                }
                Ok(acc)
            }
            MetricSpec::Riemannian { a, .. } => {
                MetricSpec::a_values(a, &base)?;
                let mut acc = Jet::constant(0.0, nv, order);
                for i in 0..n {
                    for j in 0..n {
                        let aij = a[i][j].eval(x)?;
                        acc = &acc + &(&(&aij * &y[i]) * &y[j]);
                    }
                }
                Ok(acc)
            }
            MetricSpec::Randers { a, b, .. } => {
                MetricSpec::check_randers_drift(a, b, &base)?;
                let mut alpha2 = Jet::constant(0.0, nv, order);
                for i in 0..n {
                    for j in 0..n {
                        let aij = a[i][j].eval(x)?;
                        alpha2 = &alpha2 + &(&(&aij * &y[i]) * &y[j]);
                    }
                }
                if alpha2.value() <= 0.0 {
                    return Err(Error::Domain(
                        "randers riemannian part is not positive along the fiber".into(),
                    ));
                }
                let mut beta = Jet::constant(0.0, nv, order);
                for i in 0..n {
                    let bi = b[i].eval(x)?;
                    beta = &beta + &(&bi * &y[i]);
                }
                let f = &alpha2.sqrt() + &beta;
                Ok(&f * &f)
            }
            MetricSpec::Custom { f, .. } => {
                let mut bindings = x.to_vec();
                bindings.extend(y.iter().cloned());
                let fj = f.eval(&bindings)?;
                Ok(&fj * &fj)
            }
        }
    }

    /// Randers strong-convexity condition a^{ij} b_i b_j < 1 at x.
    fn check_randers_drift(a: &[Vec<Expr>], b: &[Expr], x: &[f64]) -> Result<()> {
        let m = Self::a_values(a, x)?;
        let bv = DVector::from_iterator(
            b.len(),
            b.iter()
                .map(|e| e.eval_f64(x))
                .collect::<Result<Vec<_>>>()?,
        );
        let chol = m.clone().cholesky().ok_or_else(|| {
            Error::Domain("randers riemannian part is not positive definite".into())
        })?;
        let norm2 = bv.dot(&chol.solve(&bv));
        if norm2 >= 1.0 {
            return Err(Error::Domain(format!(
                "randers drift violates strong convexity: |b|_a^2 = {norm2:.6} >= 1"
            )));
        }
        Ok(())
    }
}

impl MetricField for MetricSpec {
    fn dim(&self) -> usize {
        match self {
            MetricSpec::Euclidean { dim }
            | MetricSpec::Riemannian { dim, .. }
            | MetricSpec::Randers { dim, .. }
            | MetricSpec::Custom { dim, .. } => *dim,
        }
    }

    fn f2_jet(&self, base: &[f64], fiber: &[f64], order: usize) -> Result<Jet> {
        let n = self.dim();
        assert_eq!(base.len(), n);
        assert_eq!(fiber.len(), n);
        let nv = 2 * n;
        let x: Vec<Jet> = (0..n)
            .map(|i| Jet::variable(base[i], i, nv, order))
            .collect();
        let y: Vec<Jet> = (0..n)
            .map(|i| Jet::variable(fiber[i], n + i, nv, order))
            .collect();
        self.f2_on_jets(&x, &y)
    }

    fn f2_value(&self, base: &[f64], fiber: &[f64]) -> Result<f64> {
        let n = self.dim();
        match self {
            MetricSpec::Euclidean { .. } => Ok(fiber.iter().map(|v| v * v).sum()),
            MetricSpec::Riemannian { a, .. } => {
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        acc += a[i][j].eval_f64(base)? * fiber[i] * fiber[j];
                    }
                }
                Ok(acc)
            }
            MetricSpec::Randers { a, b, .. } => {
                let mut alpha2 = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        alpha2 += a[i][j].eval_f64(base)? * fiber[i] * fiber[j];
                    }
                }
                if alpha2 <= 0.0 {
                    return Err(Error::Domain(
                        "randers riemannian part is not positive along the fiber".into(),
                    ));
                }
                let mut beta = 0.0;
                for i in 0..n {
                    beta += b[i].eval_f64(base)? * fiber[i];
                }
                let f = alpha2.sqrt() + beta;
                Ok(f * f)
            }
            MetricSpec::Custom { f, .. } => {
                let mut vars = base.to_vec();
                vars.extend_from_slice(fiber);
                let v = f.eval_f64(&vars)?;
                Ok(v * v)
            }
        }
    }

    fn fiber_quadratic(&self) -> bool {
        matches!(
            self,
            MetricSpec::Euclidean { .. } | MetricSpec::Riemannian { .. }
        )
    }
}

/// Every ambient object at one point of the slit tangent bundle.
///
/// Index conventions: `g`, `g_inv`, `nonlinear` are row-major [i][j];
/// `cartan` and `dg_dx` are [i][j][k] with A_ijk and dg_ij/dx^k.
#[derive(Debug, Clone)]
pub struct AmbientEval {
    pub dim: usize,
    pub point: TangentPoint,
    pub f: f64,
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub cartan: Tensor3,
    pub dg_dx: Tensor3,
    pub spray: DVector<f64>,
    pub nonlinear: DMatrix<f64>,
    pub dist_section: DVector<f64>,
    /// The underlying jet of F^2; downstream consumers (Berwald
    /// coefficients, Landsberg tensor) read higher coefficients from it.
    pub f2: Jet,
}

impl AmbientEval {
    /// dg_ij/dy^k, recovered from the Cartan tensor.
    pub fn dg_dy(&self, i: usize, j: usize, k: usize) -> f64 {
        2.0 * self.cartan[(i, j, k)] / self.f
    }

    /// Horizontal derivative delta g_ij / delta x^k = dg/dx^k - N^m_k dg/dy^m.
    pub fn delta_g(&self, i: usize, j: usize, k: usize) -> f64 {
        let mut v = self.dg_dx[(i, j, k)];
        for m in 0..self.dim {
            v -= self.nonlinear[(m, k)] * self.dg_dy(i, j, m);
        }
        v
    }
}

/// Evaluate every ambient object at `p` from a single jet evaluation of F^2.
pub fn ambient_eval(metric: &dyn MetricField, p: &TangentPoint) -> Result<AmbientEval> {
    let n = metric.dim();
    let f2 = metric.f2_jet(&p.x, &p.y, JET_ORDER)?;
    let f2v = f2.value();
    if f2v <= 0.0 {
        return Err(Error::NonPositiveF {
            f: f2v.max(0.0).sqrt(),
        });
    }
    let f = f2v.sqrt();

    let g = DMatrix::from_fn(n, n, |i, j| 0.5 * f2.partial(&[n + i, n + j]));
    let (g_inv, _, _) = spd_inverse(&g)?;

    let cartan = Tensor3::from_fn(n, n, n, |i, j, k| {
        0.25 * f * f2.partial(&[n + i, n + j, n + k])
    });
    let dg_dx = Tensor3::from_fn(n, n, n, |i, j, k| 0.5 * f2.partial(&[k, n + i, n + j]));

    // Spray: G^i = 1/4 g^{il} V_l with V_l = (F^2)_{x^k y^l} y^k - (F^2)_{x^l}.
    let v_l: Vec<f64> = (0..n)
        .map(|l| {
            let mut acc = -f2.partial(&[l]);
            for k in 0..n {
                acc += f2.partial(&[k, n + l]) * p.y[k];
            }
            acc
        })
        .collect();
    let spray = DVector::from_fn(n, |i, _| {
        0.25 * (0..n).map(|l| g_inv[(i, l)] * v_l[l]).sum::<f64>()
    });

    // N^i_m = 1/4 [ dg^{il}/dy^m V_l + g^{il} dV_l/dy^m ].
    let dg_dy = |i: usize, j: usize, k: usize| 0.5 * f2.partial(&[n + i, n + j, n + k]);
    let mut dginv = Tensor3::zeros(n, n, n); // [i][l][m] = dg^{il}/dy^m
    for i in 0..n {
        for l in 0..n {
            for m in 0..n {
                let mut acc = 0.0;
                for pp in 0..n {
                    for q in 0..n {
                        acc -= g_inv[(i, pp)] * dg_dy(pp, q, m) * g_inv[(q, l)];
                    }
                }
                dginv[(i, l, m)] = acc;
            }
        }
    }
    let dv = |l: usize, m: usize| {
        let mut acc = f2.partial(&[m, n + l]) - f2.partial(&[l, n + m]);
        for s in 0..n {
            acc += f2.partial(&[s, n + l, n + m]) * p.y[s];
        }
        acc
    };
    let nonlinear = DMatrix::from_fn(n, n, |i, m| {
        let mut acc = 0.0;
        for l in 0..n {
            acc += dginv[(i, l, m)] * v_l[l] + g_inv[(i, l)] * dv(l, m);
        }
        0.25 * acc
    });

    let dist_section = DVector::from_fn(n, |i, _| p.y[i] / f);

    Ok(AmbientEval {
        dim: n,
        point: p.clone(),
        f,
        g,
        g_inv,
        cartan,
        dg_dx,
        spray,
        nonlinear,
        dist_section,
        f2,
    })
}

/// Max violation of the homogeneity laws F(x, t y) = t F, g(x, t y) = g,
/// G(x, t y) = t^2 G, N(x, t y) = t N for one scale factor t > 0.
pub fn spray_homogeneity_check(metric: &dyn MetricField, p: &TangentPoint, t: f64) -> Result<f64> {
    assert!(t > 0.0, "scale factor must be positive");
    let base = ambient_eval(metric, p)?;
    let scaled_point = TangentPoint::new(p.x.clone(), p.y.iter().map(|v| v * t).collect())?;
    let scaled = ambient_eval(metric, &scaled_point)?;
    let n = metric.dim();
    let mut res: f64 = (scaled.f - t * base.f).abs();
    for i in 0..n {
        res = res.max((scaled.spray[i] - t * t * base.spray[i]).abs());
        for j in 0..n {
            res = res.max((scaled.g[(i, j)] - base.g[(i, j)]).abs());
            res = res.max((scaled.nonlinear[(i, j)] - t * base.nonlinear[(i, j)]).abs());
        }
    }
    Ok(res)
}

/// Adapted frames and coframes as coordinate vectors on T(TM_0).
///
/// Columns of `horizontal` are delta/delta x^j = d/dx^j - N^i_j d/dy^i and
/// columns of `vertical` are F d/dy^i, both as 2n-component vectors in the
/// (d/dx, d/dy) basis. Rows of `coframe_base` are dx^i and rows of
/// `coframe_fiber` are delta y^i / F = (dy^i + N^i_j dx^j) / F.
#[derive(Debug, Clone)]
pub struct Frames {
    pub horizontal: DMatrix<f64>,
    pub vertical: DMatrix<f64>,
    pub coframe_base: DMatrix<f64>,
    pub coframe_fiber: DMatrix<f64>,
}

pub fn adapted_frames(a: &AmbientEval) -> Frames {
    let n = a.dim;
    let mut horizontal = DMatrix::zeros(2 * n, n);
    let mut vertical = DMatrix::zeros(2 * n, n);
    for j in 0..n {
        horizontal[(j, j)] = 1.0;
        for i in 0..n {
            horizontal[(n + i, j)] = -a.nonlinear[(i, j)];
        }
        vertical[(n + j, j)] = a.f;
    }
    let mut coframe_base = DMatrix::zeros(n, 2 * n);
    let mut coframe_fiber = DMatrix::zeros(n, 2 * n);
    for i in 0..n {
        coframe_base[(i, i)] = 1.0;
        coframe_fiber[(i, n + i)] = 1.0 / a.f;
        for j in 0..n {
            coframe_fiber[(i, j)] = a.nonlinear[(i, j)] / a.f;
        }
    }
    Frames {
        horizontal,
        vertical,
        coframe_base,
        coframe_fiber,
    }
}

/// Apply the projection pi_* and the Finsler-Ehresmann form theta to a
/// tangent vector of TM_0 given in (d/dx, d/dy) coordinates.
pub fn ehresmann_apply(a: &AmbientEval, x_vec: &[f64]) -> (DVector<f64>, DVector<f64>) {
    let n = a.dim;
    assert_eq!(x_vec.len(), 2 * n);
    let pi = DVector::from_fn(n, |i, _| x_vec[i]);
    let theta = DVector::from_fn(n, |i, _| {
        let mut acc = x_vec[n + i];
        for j in 0..n {
            acc += a.nonlinear[(i, j)] * x_vec[j];
        }
        acc / a.f
    });
    (pi, theta)
}

/// Sasaki-type inner product of two tangent vectors of TM_0.
pub fn sasaki_inner(a: &AmbientEval, x_vec: &[f64], y_vec: &[f64]) -> f64 {
    let n = a.dim;
    let (pix, thx) = ehresmann_apply(a, x_vec);
    let (piy, thy) = ehresmann_apply(a, y_vec);
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += a.g[(i, j)] * (pix[i] * piy[j] + thx[i] * thy[j]);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub fn randers_example() -> MetricSpec {
        let a = vec![
            vec!["1".to_string(), "0".to_string(), "0".to_string()],
            vec!["0".to_string(), "1".to_string(), "0".to_string()],
            vec!["0".to_string(), "0".to_string(), "1".to_string()],
        ];
        let b = vec!["0.3".to_string(), "0".to_string(), "0".to_string()];
        MetricSpec::randers(3, &a, &b).unwrap()
    }

    #[test]
    fn euclidean_ambient_objects_are_flat() {
        let m = MetricSpec::euclidean(2);
        let p = TangentPoint::new(vec![0.3, -1.1], vec![3.0, 4.0]).unwrap();
        let a = ambient_eval(&m, &p).unwrap();
        assert_relative_eq!(a.f, 5.0, epsilon = 1e-12);
        assert_relative_eq!(a.g[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(a.g[(0, 1)], 0.0, epsilon = 1e-12);
        assert_relative_eq!(a.g[(1, 1)], 1.0, epsilon = 1e-12);
        assert!(a.cartan.max_abs() < 1e-14);
        assert!(a.spray.amax() < 1e-14);
        assert!(a.nonlinear.amax() < 1e-14);
        assert_relative_eq!(a.dist_section[0], 0.6, epsilon = 1e-12);
    }

    #[test]
    fn round_sphere_chart_is_fiber_independent() {
        // a = diag(1, sin^2 x1) on the chart (x1, x2) = (theta, phi).
        let a = vec![
            vec!["1".to_string(), "0".to_string()],
            vec!["0".to_string(), "sin(x1)^2".to_string()],
        ];
        let m = MetricSpec::riemannian(2, &a).unwrap();
        let theta = std::f64::consts::FRAC_PI_4;
        let p = TangentPoint::new(vec![theta, 1.0], vec![0.7, -0.4]).unwrap();
        let e = ambient_eval(&m, &p).unwrap();
        assert_relative_eq!(e.g[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(e.g[(1, 1)], theta.sin().powi(2), epsilon = 1e-12);
        assert!(e.cartan.max_abs() < 1e-12);
        // g independent of y: evaluate at another fiber direction.
        let p2 = TangentPoint::new(vec![theta, 1.0], vec![-0.2, 1.3]).unwrap();
        let e2 = ambient_eval(&m, &p2).unwrap();
        assert!(crate::linalg::mat_max_diff(&e.g, &e2.g) < 1e-12);
    }

    #[test]
    fn randers_satisfies_structure_identities() {
        let m = randers_example();
        let p = TangentPoint::new(vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 0.0]).unwrap();
        let e = ambient_eval(&m, &p).unwrap();
        let n = 3;
        // g y . y = F^2
        let mut gyy = 0.0;
        for i in 0..n {
            for j in 0..n {
                gyy += e.g[(i, j)] * p.y[i] * p.y[j];
            }
        }
        assert_relative_eq!(gyy, e.f * e.f, epsilon = 1e-10);
        // Cartan symmetry and y-contraction.
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let a = e.cartan[(i, j, k)];
                    assert_relative_eq!(a, e.cartan[(j, i, k)], epsilon = 1e-10);
                    assert_relative_eq!(a, e.cartan[(i, k, j)], epsilon = 1e-10);
                }
                let contraction: f64 = (0..n).map(|k| e.cartan[(i, j, k)] * p.y[k]).sum();
                assert!(contraction.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn homogeneity_residuals_small() {
        let m = randers_example();
        let p = TangentPoint::new(vec![0.1, -0.2, 0.4], vec![0.8, -0.5, 1.1]).unwrap();
        for t in [0.5, 2.0, 3.0] {
            let r = spray_homogeneity_check(&m, &p, t).unwrap();
            assert!(r < 1e-9, "homogeneity residual {r} at t = {t}");
        }
    }

    #[test]
    fn non_homogeneous_custom_metric_detected() {
        // F = y1^2 + y2^2 (+2 to stay positive) is not 1-homogeneous.
        let m = MetricSpec::custom(2, "y1^2 + y2^2 + 2").unwrap();
        let p = TangentPoint::new(vec![0.0, 0.0], vec![1.0, 0.5]).unwrap();
        let r = spray_homogeneity_check(&m, &p, 2.0).unwrap();
        assert!(r > 1e-3, "expected a large homogeneity violation, got {r}");
    }

    #[test]
    fn frame_coframe_duality() {
        let m = randers_example();
        let p = TangentPoint::new(vec![0.2, 0.1, -0.3], vec![1.0, -0.7, 0.4]).unwrap();
        let e = ambient_eval(&m, &p).unwrap();
        let fr = adapted_frames(&e);
        let n = e.dim;
        let mut coframe = DMatrix::zeros(2 * n, 2 * n);
        coframe
            .view_mut((0, 0), (n, 2 * n))
            .copy_from(&fr.coframe_base);
        coframe
            .view_mut((n, 0), (n, 2 * n))
            .copy_from(&fr.coframe_fiber);
        let mut frame = DMatrix::zeros(2 * n, 2 * n);
        frame.view_mut((0, 0), (2 * n, n)).copy_from(&fr.horizontal);
        frame.view_mut((0, n), (2 * n, n)).copy_from(&fr.vertical);
        let prod = coframe * frame;
        let id = DMatrix::identity(2 * n, 2 * n);
        assert!(crate::linalg::mat_max_diff(&prod, &id) < 1e-10);
    }

    #[test]
    fn ehresmann_on_lifted_frames() {
        let m = randers_example();
        let p = TangentPoint::new(vec![0.0, 0.5, 0.0], vec![0.3, 1.0, -0.2]).unwrap();
        let e = ambient_eval(&m, &p).unwrap();
        let fr = adapted_frames(&e);
        let n = e.dim;
        for j in 0..n {
            let xh: Vec<f64> = fr.horizontal.column(j).iter().cloned().collect();
            let (pi, theta) = ehresmann_apply(&e, &xh);
            assert!(theta.amax() < 1e-12, "theta on horizontal lift");
            assert_relative_eq!(pi[j], 1.0, epsilon = 1e-12);
            let xv: Vec<f64> = fr.vertical.column(j).iter().cloned().collect();
            let (pi_v, theta_v) = ehresmann_apply(&e, &xv);
            assert!(pi_v.amax() < 1e-12, "pi on vertical lift");
            assert_relative_eq!(theta_v[j], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn sasaki_splitting_is_orthogonal() {
        let m = randers_example();
        let p = TangentPoint::new(vec![0.4, -0.1, 0.2], vec![0.9, 0.2, -1.2]).unwrap();
        let e = ambient_eval(&m, &p).unwrap();
        let fr = adapted_frames(&e);
        let n = e.dim;
        for i in 0..n {
            for j in 0..n {
                let xh: Vec<f64> = fr.horizontal.column(i).iter().cloned().collect();
                let xv: Vec<f64> = fr.vertical.column(j).iter().cloned().collect();
                assert!(sasaki_inner(&e, &xh, &xv).abs() < 1e-12);
                let xh2: Vec<f64> = fr.horizontal.column(j).iter().cloned().collect();
                assert_relative_eq!(sasaki_inner(&e, &xh, &xh2), e.g[(i, j)], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn randers_drift_too_large_is_rejected() {
        let a = vec![
            vec!["1".to_string(), "0".to_string()],
            vec!["0".to_string(), "1".to_string()],
        ];
        let b = vec!["1.1".to_string(), "0".to_string()];
        let m = MetricSpec::randers(2, &a, &b).unwrap();
        let p = TangentPoint::new(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        assert!(ambient_eval(&m, &p).is_err());
    }

    #[test]
    fn indefinite_riemannian_part_rejected() {
        let a = vec![
            vec!["1".to_string(), "1.5".to_string()],
            vec!["1.5".to_string(), "1".to_string()],
        ];
        let m = MetricSpec::riemannian(2, &a).unwrap();
        let p = TangentPoint::new(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        assert!(matches!(ambient_eval(&m, &p), Err(Error::NotConvex { .. })));
    }
}
