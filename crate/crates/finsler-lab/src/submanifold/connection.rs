//! Induced and normal pullback connection coefficients, second fundamental
//! form and shape operator, plus the Gauss/Weingarten reconstruction used to
//! validate them.
//!
//! Directions along the submanifold decompose against the ambient adapted
//! frame as
//!   delta/delta u^beta  =  B^i_beta delta/delta x^i + H^a_beta N^i_a d/dy^i,
//!   F d/dv^beta         =  B^i_beta (F d/dy^i),
//! so the vertical coefficient pairing carries a 1/F: the ambient vertical
//! coefficients are taken against the unit vertical coframe delta y / F,
//! while the normal-curvature component H sits in plain d/dy units.

use nalgebra::DMatrix;

use crate::connections::ConnectionCoeffs;
use crate::linalg::Tensor3;
use crate::metric::{ehresmann_apply, AmbientEval};

use super::frames::FramePackage;

/// Coefficients of the induced tangential connection, the induced normal
/// connection, the second fundamental form and the shape operator, all at
/// one point. Index layouts: `tangent.horizontal` [lambda][alpha][beta]
/// (section alpha, direction beta), `normal_h`/`normal_v` [b][a][alpha],
/// `s_h`/`s_v` [a][alpha][beta], `shape_h`/`shape_v` [lambda][a][alpha].
#[derive(Debug, Clone)]
pub struct InducedConnection {
    pub tangent: ConnectionCoeffs,
    pub normal_h: Tensor3,
    pub normal_v: Tensor3,
    pub s_h: Tensor3,
    pub s_v: Tensor3,
    pub shape_h: Tensor3,
    pub shape_v: Tensor3,
}

/// Project the ambient connection through the frame package.
///
/// `n_ind` is the induced nonlinear connection (used to form the horizontal
/// derivative of the normal frame field).
pub fn induced_connection(
    fp: &FramePackage,
    ambient_conn: &ConnectionCoeffs,
    n_ind: &DMatrix<f64>,
) -> InducedConnection {
    let m = fp.sub_dim;
    let n = fp.ambient_dim;
    let nn = fp.n_normal;
    let f = fp.ambient.f;
    let gamma_h = &ambient_conn.horizontal;
    let gamma_v = &ambient_conn.vertical;

    // Vertical component of delta/delta u^beta in delta y / F units.
    let vert = DMatrix::from_fn(n, m, |k, be| {
        (0..nn)
            .map(|a| fp.h[(a, be)] * fp.nframe[(k, a)])
            .sum::<f64>()
            / f
    });

    // Ambient components of the derivative of the tangential section
    // d/du^alpha along delta/delta u^beta and along F d/dv^beta.
    let t_h = Tensor3::from_fn(n, m, m, |i, al, be| {
        let mut acc = fp.b2[(i, al, be)];
        for j in 0..n {
            for k in 0..n {
                acc += gamma_h[(i, j, k)] * fp.b[(j, al)] * fp.b[(k, be)];
            }
        }
        for j in 0..n {
            for k in 0..n {
                acc += gamma_v[(i, j, k)] * fp.b[(j, al)] * vert[(k, be)];
            }
        }
        acc
    });
    let t_v = Tensor3::from_fn(n, m, m, |i, al, be| {
        let mut acc = 0.0;
        for j in 0..n {
            for k in 0..n {
                acc += gamma_v[(i, j, k)] * fp.b[(j, al)] * fp.b[(k, be)];
            }
        }
        acc
    });

    // Same for the normal sections N_a; the frame field is differentiated
    // through its exact jet derivatives.
    let delta_n = Tensor3::from_fn(n, nn, m, |i, a, al| {
        let mut acc = fp.dn_du[(i, a, al)];
        for tau in 0..m {
            acc -= n_ind[(tau, al)] * fp.dn_dv[(i, a, tau)];
        }
        acc
    });
    let u_h = Tensor3::from_fn(n, nn, m, |i, a, al| {
        let mut acc = delta_n[(i, a, al)];
        for j in 0..n {
            for k in 0..n {
                acc += gamma_h[(i, j, k)] * fp.nframe[(j, a)] * fp.b[(k, al)]
                    + gamma_v[(i, j, k)] * fp.nframe[(j, a)] * vert[(k, al)];
            }
        }
        acc
    });
    let u_v = Tensor3::from_fn(n, nn, m, |i, a, al| {
        let mut acc = f * fp.dn_dv[(i, a, al)];
        for j in 0..n {
            for k in 0..n {
                acc += gamma_v[(i, j, k)] * fp.nframe[(j, a)] * fp.b[(k, al)];
            }
        }
        acc
    });

    let project_b = |t: &Tensor3, lam: usize, p: usize, q: usize| -> f64 {
        (0..n).map(|i| fp.btilde[(lam, i)] * t[(i, p, q)]).sum()
    };
    let project_n = |t: &Tensor3, b: usize, p: usize, q: usize| -> f64 {
        (0..n).map(|i| fp.ntilde[(b, i)] * t[(i, p, q)]).sum()
    };

    let tangent = ConnectionCoeffs {
        dim: m,
        kind: ambient_conn.kind,
        horizontal: Tensor3::from_fn(m, m, m, |lam, al, be| project_b(&t_h, lam, al, be)),
        vertical: Tensor3::from_fn(m, m, m, |lam, al, be| project_b(&t_v, lam, al, be)),
    };
    let s_h = Tensor3::from_fn(nn, m, m, |a, al, be| project_n(&t_h, a, al, be));
    let s_v = Tensor3::from_fn(nn, m, m, |a, al, be| project_n(&t_v, a, al, be));
    let normal_h = Tensor3::from_fn(nn, nn, m, |b, a, al| project_n(&u_h, b, a, al));
    let normal_v = Tensor3::from_fn(nn, nn, m, |b, a, al| project_n(&u_v, b, a, al));
    let shape_h = Tensor3::from_fn(m, nn, m, |lam, a, al| -project_b(&u_h, lam, a, al));
    let shape_v = Tensor3::from_fn(m, nn, m, |lam, a, al| -project_b(&u_v, lam, a, al));

    InducedConnection {
        tangent,
        normal_h,
        normal_v,
        s_h,
        s_v,
        shape_h,
        shape_v,
    }
}

/// Ambient connection one-form applied to a tangent vector of the ambient
/// slit bundle given in (d/dx, d/dy) coordinates:
/// omega^i_j(X) = Gamma^i_jk dx^k(X) + gamma^i_jk (delta y^k / F)(X).
///
/// This is the independent assembly route used by the Gauss/Weingarten
/// reconstruction: it never sees the frame package.
pub fn connection_form(
    ambient: &AmbientEval,
    conn: &ConnectionCoeffs,
    x_vec: &[f64],
) -> DMatrix<f64> {
    let n = ambient.dim;
    let (pi, theta) = ehresmann_apply(ambient, x_vec);
    DMatrix::from_fn(n, n, |i, j| {
        let mut acc = 0.0;
        for k in 0..n {
            acc += conn.horizontal[(i, j, k)] * pi[k] + conn.vertical[(i, j, k)] * theta[k];
        }
        acc
    })
}

/// Push the submanifold frame directions into ambient (d/dx, d/dy)
/// coordinates: returns (horizontal delta/delta u^beta, vertical F d/dv^beta).
pub fn pushforward_directions(
    fp: &FramePackage,
    n_ind: &DMatrix<f64>,
    beta: usize,
) -> (Vec<f64>, Vec<f64>) {
    let m = fp.sub_dim;
    let n = fp.ambient_dim;
    let mut horizontal = vec![0.0; 2 * n];
    let mut vertical = vec![0.0; 2 * n];
    for i in 0..n {
        horizontal[i] = fp.b[(i, beta)];
        let mut dy = fp.b0[(i, beta)];
        for tau in 0..m {
            dy -= n_ind[(tau, beta)] * fp.b[(i, tau)];
        }
        horizontal[n + i] = dy;
        vertical[n + i] = fp.ambient.f * fp.b[(i, beta)];
    }
    (horizontal, vertical)
}

/// Max residual of the Gauss and Weingarten reconstructions: the ambient
/// covariant derivative of tangential and normal sections, assembled from
/// the connection one-form, must equal its split through the projected
/// coefficients.
pub fn gauss_weingarten_residual(
    fp: &FramePackage,
    ambient_conn: &ConnectionCoeffs,
    ic: &InducedConnection,
    n_ind: &DMatrix<f64>,
) -> f64 {
    let m = fp.sub_dim;
    let n = fp.ambient_dim;
    let nn = fp.n_normal;
    let f = fp.ambient.f;
    let mut worst: f64 = 0.0;

    for be in 0..m {
        let (xh, xv) = pushforward_directions(fp, n_ind, be);
        let omega_h = connection_form(&fp.ambient, ambient_conn, &xh);
        let omega_v = connection_form(&fp.ambient, ambient_conn, &xv);

        // Gauss: tangential sections d/du^alpha with components B^i_alpha.
        for al in 0..m {
            for i in 0..n {
                // Horizontal direction: X(B^i_alpha) = B^i_{alpha beta}.
                let mut lhs = fp.b2[(i, al, be)];
                for j in 0..n {
                    lhs += omega_h[(i, j)] * fp.b[(j, al)];
                }
                let mut rhs = 0.0;
                for lam in 0..m {
                    rhs += fp.b[(i, lam)] * ic.tangent.horizontal[(lam, al, be)];
                }
                for a in 0..nn {
                    rhs += fp.nframe[(i, a)] * ic.s_h[(a, al, be)];
                }
                worst = worst.max((lhs - rhs).abs());

                // Vertical direction: B is fiber-independent.
                let mut lhs_v = 0.0;
                for j in 0..n {
                    lhs_v += omega_v[(i, j)] * fp.b[(j, al)];
                }
                let mut rhs_v = 0.0;
                for lam in 0..m {
                    rhs_v += fp.b[(i, lam)] * ic.tangent.vertical[(lam, al, be)];
                }
                for a in 0..nn {
                    rhs_v += fp.nframe[(i, a)] * ic.s_v[(a, al, be)];
                }
                worst = worst.max((lhs_v - rhs_v).abs());
            }
        }

        // Weingarten: normal sections N_a.
        for a in 0..nn {
            for i in 0..n {
                let mut dn_h = fp.dn_du[(i, a, be)];
                for tau in 0..m {
                    dn_h -= n_ind[(tau, be)] * fp.dn_dv[(i, a, tau)];
                }
                let mut lhs = dn_h;
                for j in 0..n {
                    lhs += omega_h[(i, j)] * fp.nframe[(j, a)];
                }
                let mut rhs = 0.0;
                for lam in 0..m {
                    rhs -= fp.b[(i, lam)] * ic.shape_h[(lam, a, be)];
                }
                for b in 0..nn {
                    rhs += fp.nframe[(i, b)] * ic.normal_h[(b, a, be)];
                }
                worst = worst.max((lhs - rhs).abs());

                let mut lhs_v = f * fp.dn_dv[(i, a, be)];
                for j in 0..n {
                    lhs_v += omega_v[(i, j)] * fp.nframe[(j, a)];
                }
                let mut rhs_v = 0.0;
                for lam in 0..m {
                    rhs_v -= fp.b[(i, lam)] * ic.shape_v[(lam, a, be)];
                }
                for b in 0..nn {
                    rhs_v += fp.nframe[(i, b)] * ic.normal_v[(b, a, be)];
                }
                worst = worst.max((lhs_v - rhs_v).abs());
            }
        }
    }
    worst
}
