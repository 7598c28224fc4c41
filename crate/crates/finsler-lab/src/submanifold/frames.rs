//! Immersion data and the adapted frame package of a Finsler submanifold:
//! tangential frame B, its inverse blocks, the normal frame built by
//! Gram-Schmidt in the ambient fundamental tensor, and the normal curvature
//! coefficients H.
//!
//! The normal frame is constructed in jet arithmetic over the submanifold
//! coordinates (u, v), so its first derivatives (needed by the normal
//! connection coefficients) are exact rather than finite-differenced. Seed
//! selection happens at value level only, keeping the branch locally
//! constant under differentiation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::jet::Jet;
use crate::linalg::{jet_solve, Tensor3};
use crate::metric::{ambient_eval, coord_names, AmbientEval, MetricSpec, TangentPoint};

/// An immersion x: M -> ambient given componentwise as expressions in
/// u1..um.
#[derive(Debug, Clone)]
pub struct ImmersionSpec {
    pub ambient_dim: usize,
    pub sub_dim: usize,
    pub components: Vec<Expr>,
}

impl ImmersionSpec {
    pub fn new(ambient_dim: usize, sub_dim: usize, components: &[String]) -> Result<ImmersionSpec> {
        if components.len() != ambient_dim {
            return Err(Error::Scene(format!(
                "immersion must have {ambient_dim} components, got {}",
                components.len()
            )));
        }
        if sub_dim == 0 || sub_dim >= ambient_dim {
            return Err(Error::Scene(format!(
                "submanifold dimension {sub_dim} must lie strictly between 0 and {ambient_dim}"
            )));
        }
        let names = coord_names("u", sub_dim);
        let vars: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let components = components
            .iter()
            .map(|s| expr::parse(s, &vars))
            .collect::<Result<Vec<_>>>()?;
        Ok(ImmersionSpec {
            ambient_dim,
            sub_dim,
            components,
        })
    }

    pub fn x_values(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.components.iter().map(|c| c.eval_f64(u)).collect()
    }

    /// Component jets in a `num_vars`-variable space whose first `sub_dim`
    /// variables are u (the rest are unused by the immersion).
    pub fn x_jets(&self, u: &[f64], num_vars: usize, order: usize) -> Result<Vec<Jet>> {
        let u_jets: Vec<Jet> = (0..self.sub_dim)
            .map(|a| Jet::variable(u[a], a, num_vars, order))
            .collect();
        self.components.iter().map(|c| c.eval(&u_jets)).collect()
    }
}

/// A point (u, v) of the submanifold slit tangent bundle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubPoint {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl SubPoint {
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Result<SubPoint> {
        if v.iter().map(|t| t * t).sum::<f64>() == 0.0 {
            return Err(Error::Domain(
                "fiber vector must be nonzero (slit tangent bundle)".into(),
            ));
        }
        if u.len() != v.len() {
            return Err(Error::Domain(format!(
                "base and fiber dimensions differ: {} vs {}",
                u.len(),
                v.len()
            )));
        }
        Ok(SubPoint { u, v })
    }
}

/// Frames and first-order frame data at one point (u, v), together with the
/// ambient evaluation at the corresponding point (x(u), B v).
///
/// Matrix layouts: `b` is [i][alpha] (ambient index first), `btilde` is
/// [alpha][i], `nframe` is [i][a] with a = 0..n_normal, `ntilde` is [a][i],
/// `h` is [a][lambda]. The normal frame is orthonormal for the ambient
/// fundamental tensor at the point; individual normal-indexed coefficients
/// are frame-dependent, only frame-covariant combinations are geometric.
#[derive(Debug, Clone)]
pub struct FramePackage {
    pub sub_dim: usize,
    pub ambient_dim: usize,
    pub n_normal: usize,
    pub point: SubPoint,
    pub ambient: AmbientEval,
    pub b: DMatrix<f64>,
    /// B^i_{alpha beta} = d^2 x^i / du^alpha du^beta, indexed [i][alpha][beta].
    pub b2: Tensor3,
    /// B^i_{alpha 0} = B^i_{alpha beta} v^beta.
    pub b0: DMatrix<f64>,
    pub nframe: DMatrix<f64>,
    pub btilde: DMatrix<f64>,
    pub ntilde: DMatrix<f64>,
    pub h: DMatrix<f64>,
    /// d N^i_a / du^alpha of the normal frame field, indexed [i][a][alpha].
    pub dn_du: Tensor3,
    /// d N^i_a / dv^alpha, indexed [i][a][alpha].
    pub dn_dv: Tensor3,
}

/// Threshold on the smallest singular value of B for the immersion rank
/// condition.
const RANK_TOL: f64 = 1e-8;
/// Gram-Schmidt breakdown threshold on the residual norm before
/// normalization.
const GS_TOL: f64 = 1e-10;

pub fn frame_package(
    metric: &MetricSpec,
    immersion: &ImmersionSpec,
    sp: &SubPoint,
) -> Result<FramePackage> {
    let m = immersion.sub_dim;
    let n_total = immersion.ambient_dim;
    let n_normal = n_total - m;
    let nv = 2 * m;

    // Immersion jets at order 2 give values, B, B2 and order-1 B-jets.
    let x_jets = immersion.x_jets(&sp.u, nv, 2)?;
    let x: Vec<f64> = x_jets.iter().map(|j| j.value()).collect();
    let b = DMatrix::from_fn(n_total, m, |i, a| x_jets[i].partial(&[a]));
    let b2 = Tensor3::from_fn(n_total, m, m, |i, a, c| x_jets[i].partial(&[a, c]));
    let b0 = DMatrix::from_fn(n_total, m, |i, a| {
        (0..m).map(|c| b2[(i, a, c)] * sp.v[c]).sum()
    });

    let svd = b.clone().svd(false, false);
    let min_sv = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min_sv < RANK_TOL {
        return Err(Error::RankDeficient { min_sv });
    }

    let y: Vec<f64> = (0..n_total)
        .map(|i| (0..m).map(|a| b[(i, a)] * sp.v[a]).sum())
        .collect();
    let ambient = ambient_eval(metric, &TangentPoint::new(x, y)?)?;
    let n = n_total;

    // Ambient fundamental tensor composed with the immersion, as order-1
    // jets in (u, v) via the chain rule:
    //   d g_ij / du^a = dg/dx^k B^k_a + dg/dy^k B^k_{a0},
    //   d g_ij / dv^a = dg/dy^k B^k_a.
    let mut g_jets: Vec<Vec<Jet>> = vec![vec![Jet::constant(0.0, nv, 1); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut jet = Jet::constant(ambient.g[(i, j)], nv, 1);
            for a in 0..m {
                let mut du = 0.0;
                let mut dv = 0.0;
                for k in 0..n {
                    let dgy = ambient.dg_dy(i, j, k);
                    du += ambient.dg_dx[(i, j, k)] * b[(k, a)] + dgy * b0[(k, a)];
                    dv += dgy * b[(k, a)];
                }
                let mut mu = vec![0u8; nv];
                mu[a] = 1;
                jet.set_partial(&mu, du);
                let mut mv = vec![0u8; nv];
                mv[m + a] = 1;
                jet.set_partial(&mv, dv);
            }
            g_jets[i][j] = jet;
        }
    }
    // B as order-1 jets (u-dependence only).
    let b_jets: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            (0..m)
                .map(|a| {
                    let mut jet = Jet::constant(b[(i, a)], nv, 1);
                    for c in 0..m {
                        let mut mu = vec![0u8; nv];
                        mu[c] = 1;
                        jet.set_partial(&mu, b2[(i, a, c)]);
                    }
                    jet
                })
                .collect()
        })
        .collect();
    // Pullback metric as jets: g_sub = B^T g B.
    let gsub_jets: Vec<Vec<Jet>> = (0..m)
        .map(|a| {
            (0..m)
                .map(|c| {
                    let mut acc = Jet::constant(0.0, nv, 1);
                    for i in 0..n {
                        for j in 0..n {
                            acc = &acc + &(&(&b_jets[i][a] * &g_jets[i][j]) * &b_jets[j][c]);
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();

    // Seed selection at value level: rank coordinate axes by the ambient
    // norm of their residual after tangential projection.
    let g_val = &ambient.g;
    let gsub_val = DMatrix::from_fn(m, m, |a, c| gsub_jets[a][c].value());
    let gsub_chol = gsub_val
        .clone()
        .cholesky()
        .ok_or(Error::SingularTransition)?;
    let mut ranked: Vec<(usize, f64)> = (0..n)
        .map(|s| {
            let gs_col = DVector::from_fn(n, |i, _| g_val[(i, s)]);
            let rhs = DVector::from_fn(m, |a, _| (0..n).map(|i| b[(i, a)] * gs_col[i]).sum());
            let z = gsub_chol.solve(&rhs);
            let mut r = DVector::zeros(n);
            for i in 0..n {
                r[i] = if i == s { 1.0 } else { 0.0 };
                for a in 0..m {
                    r[i] -= b[(i, a)] * z[a];
                }
            }
            let mut rho = 0.0;
            for i in 0..n {
                for j in 0..n {
                    rho += r[i] * g_val[(i, j)] * r[j];
                }
            }
            (s, rho)
        })
        .collect();
    ranked.sort_by(|l, r| r.1.partial_cmp(&l.1).unwrap().then(l.0.cmp(&r.0)));
    let mut seeds: Vec<usize> = ranked.iter().take(n_normal).map(|(s, _)| *s).collect();
    seeds.sort_unstable();

    // Gram-Schmidt in jet arithmetic.
    let mut normals: Vec<Vec<Jet>> = Vec::with_capacity(n_normal);
    for &s in &seeds {
        // w = e_s - B gsub^{-1} B^T g e_s, all jets.
        let rhs: Vec<Jet> = (0..m)
            .map(|a| {
                let mut acc = Jet::constant(0.0, nv, 1);
                for i in 0..n {
                    acc = &acc + &(&b_jets[i][a] * &g_jets[i][s]);
                }
                acc
            })
            .collect();
        let z = jet_solve(&gsub_jets, &rhs)?;
        let mut w: Vec<Jet> = (0..n)
            .map(|i| {
                let mut acc = Jet::constant(if i == s { 1.0 } else { 0.0 }, nv, 1);
                for a in 0..m {
                    acc = &acc - &(&b_jets[i][a] * &z[a]);
                }
                acc
            })
            .collect();
        for prev in &normals {
            let mut c = Jet::constant(0.0, nv, 1);
            for i in 0..n {
                for j in 0..n {
                    c = &c + &(&(&w[i] * &g_jets[i][j]) * &prev[j]);
                }
            }
            for i in 0..n {
                w[i] = &w[i] - &(&c * &prev[i]);
            }
        }
        let mut norm2 = Jet::constant(0.0, nv, 1);
        for i in 0..n {
            for j in 0..n {
                norm2 = &norm2 + &(&(&w[i] * &g_jets[i][j]) * &w[j]);
            }
        }
        if norm2.value() < GS_TOL * GS_TOL {
            return Err(Error::FrameBreakdown {
                residual: norm2.value().max(0.0).sqrt(),
            });
        }
        let inv_norm = norm2.sqrt().recip();
        for wi in &mut w {
            *wi = &*wi * &inv_norm;
        }
        normals.push(w);
    }

    let nframe = DMatrix::from_fn(n, n_normal, |i, a| normals[a][i].value());
    let dn_du = Tensor3::from_fn(n, n_normal, m, |i, a, c| normals[a][i].partial(&[c]));
    let dn_dv = Tensor3::from_fn(n, n_normal, m, |i, a, c| normals[a][i].partial(&[m + c]));

    // Transition matrix [B | N] and its inverse blocks.
    let mut t = DMatrix::zeros(n, n);
    t.view_mut((0, 0), (n, m)).copy_from(&b);
    t.view_mut((0, m), (n, n_normal)).copy_from(&nframe);
    let t_inv = t.try_inverse().ok_or(Error::SingularTransition)?;
    let btilde = t_inv.rows(0, m).into_owned();
    let ntilde = t_inv.rows(m, n_normal).into_owned();

    // H^a_lambda = Ntilde^a_k (B^k_{lambda 0} + B^i_lambda N^k_i).
    let h = DMatrix::from_fn(n_normal, m, |a, lam| {
        (0..n)
            .map(|k| {
                let mut inner = b0[(k, lam)];
                for i in 0..n {
                    inner += b[(i, lam)] * ambient.nonlinear[(k, i)];
                }
                ntilde[(a, k)] * inner
            })
            .sum()
    });

    Ok(FramePackage {
        sub_dim: m,
        ambient_dim: n_total,
        n_normal,
        point: sp.clone(),
        ambient,
        b,
        b2,
        b0,
        nframe,
        btilde,
        ntilde,
        h,
        dn_du,
        dn_dv,
    })
}
