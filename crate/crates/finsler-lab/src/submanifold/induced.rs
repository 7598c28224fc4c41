//! The induced Finsler structure of a submanifold and the objects comparing
//! it with the ambient one: induced metric (two routes), induced and
//! intrinsic nonlinear connections, and the deformation tensor.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::linalg::{mat_max_diff, spd_inverse};
use crate::metric::{ambient_eval, AmbientEval, MetricField, MetricSpec, TangentPoint};

use super::frames::{FramePackage, ImmersionSpec, SubPoint};

/// The Finsler structure F(u, v) = F_ambient(x(u), B(u) v) pulled back to
/// the submanifold, exposed as a metric field of dimension m so the whole
/// intrinsic pipeline (fundamental tensor, spray, connections) runs on it
/// unchanged.
pub struct InducedMetric<'a> {
    pub ambient: &'a MetricSpec,
    pub immersion: &'a ImmersionSpec,
}

impl MetricField for InducedMetric<'_> {
    fn dim(&self) -> usize {
        self.immersion.sub_dim
    }

    fn f2_jet(&self, base: &[f64], fiber: &[f64], order: usize) -> Result<Jet> {
        let m = self.immersion.sub_dim;
        let n = self.immersion.ambient_dim;
        let nv = 2 * m;
        // x to order + 1 so the Jacobian jets B = dx/du are exact to `order`.
        let x_hi = self.immersion.x_jets(base, nv, order + 1)?;
        let x: Vec<Jet> = x_hi.iter().map(|j| j.truncate(order)).collect();
        let v: Vec<Jet> = (0..m)
            .map(|a| Jet::variable(fiber[a], m + a, nv, order))
            .collect();
        let y: Vec<Jet> = (0..n)
            .map(|i| {
                let mut acc = Jet::constant(0.0, nv, order);
                for a in 0..m {
                    acc = &acc + &(&x_hi[i].derivative(a) * &v[a]);
                }
                acc
            })
            .collect();
        self.ambient.f2_on_jets(&x, &y)
    }

    /// Plain evaluation; the immersion Jacobian is taken from an exact
    /// order-1 jet of the immersion (the finite-difference oracle only ever
    /// targets ambient metrics, where `f2_value` is jet-free).
    fn f2_value(&self, base: &[f64], fiber: &[f64]) -> Result<f64> {
        let m = self.immersion.sub_dim;
        let n = self.immersion.ambient_dim;
        let x_jets = self.immersion.x_jets(base, m, 1)?;
        let x: Vec<f64> = x_jets.iter().map(|j| j.value()).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| (0..m).map(|a| x_jets[i].partial(&[a]) * fiber[a]).sum())
            .collect();
        self.ambient.f2_value(&x, &y)
    }

    fn fiber_quadratic(&self) -> bool {
        self.ambient.fiber_quadratic()
    }
}

/// Induced norm and fundamental tensor, computed along two routes and
/// reconciled: (a) pullback B^T g B of the ambient tensor, (b) fiber Hessian
/// of the composed F^2. Returns route (b); errors if they disagree.
pub fn induced_metric_and_f(
    fp: &FramePackage,
    induced: &InducedMetric,
) -> Result<(f64, DMatrix<f64>)> {
    let m = fp.sub_dim;
    let n = fp.ambient_dim;
    let sp = &fp.point;
    let pullback = DMatrix::from_fn(m, m, |a, c| {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += fp.b[(i, a)] * fp.ambient.g[(i, j)] * fp.b[(j, c)];
            }
        }
        acc
    });
    let f2 = induced.f2_jet(&sp.u, &sp.v, 2)?;
    let hessian = DMatrix::from_fn(m, m, |a, c| 0.5 * f2.partial(&[m + a, m + c]));
    let diff = mat_max_diff(&pullback, &hessian);
    if diff > 1e-9 {
        return Err(Error::CrossCheck {
            what: "induced metric pullback vs composed fiber Hessian".into(),
            residual: diff,
            tolerance: 1e-9,
        });
    }
    let f2v = f2.value();
    if f2v <= 0.0 {
        return Err(Error::NonPositiveF {
            f: f2v.max(0.0).sqrt(),
        });
    }
    Ok((f2v.sqrt(), hessian))
}

/// Induced nonlinear connection N^alpha_beta = Btilde^alpha_i (B^i_{beta 0}
/// + B^j_beta N^i_j).
pub fn induced_nonlinear(fp: &FramePackage) -> DMatrix<f64> {
    let m = fp.sub_dim;
    let n = fp.ambient_dim;
    DMatrix::from_fn(m, m, |al, be| {
        (0..n)
            .map(|i| {
                let mut inner = fp.b0[(i, be)];
                for j in 0..n {
                    inner += fp.b[(j, be)] * fp.ambient.nonlinear[(i, j)];
                }
                fp.btilde[(al, i)] * inner
            })
            .sum()
    })
}

/// Full intrinsic evaluation of the induced structure at (u, v): running the
/// ambient pipeline in dimension m yields the intrinsic nonlinear connection
/// (`.nonlinear`), intrinsic Cartan tensor and so on.
pub fn intrinsic_eval(induced: &InducedMetric, sp: &SubPoint) -> Result<AmbientEval> {
    let p = TangentPoint::new(sp.u.clone(), sp.v.clone())?;
    ambient_eval(induced, &p)
}

/// Deformation tensor D^alpha_beta = H^a_lambda v^lambda A^alpha_{beta a},
/// where A_{lambda beta a} is the ambient Cartan tensor with two tangential
/// and one normal projection.
pub fn deformation_tensor(fp: &FramePackage, g_sub: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = fp.sub_dim;
    let n = fp.ambient_dim;
    let (g_sub_inv, _, _) = spd_inverse(g_sub)?;
    // A_mixed[lambda][beta][a] = A_ijk B^i_lambda B^j_beta N^k_a.
    let a_mixed = |lam: usize, be: usize, a: usize| {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    acc += fp.ambient.cartan[(i, j, k)]
                        * fp.b[(i, lam)]
                        * fp.b[(j, be)]
                        * fp.nframe[(k, a)];
                }
            }
        }
        acc
    };
    let hv: Vec<f64> = (0..fp.n_normal)
        .map(|a| (0..m).map(|lam| fp.h[(a, lam)] * fp.point.v[lam]).sum())
        .collect();
    Ok(DMatrix::from_fn(m, m, |al, be| {
        let mut acc = 0.0;
        for (a, hva) in hv.iter().enumerate() {
            for lam in 0..m {
                acc += hva * g_sub_inv[(al, lam)] * a_mixed(lam, be, a);
            }
        }
        acc
    }))
}
