//! Pullback Finsler connection coefficients: Chern, Berwald, Landsberg and
//! Hashiguchi.
//!
//! A connection on the pulled-back bundle is stored as a pair of coefficient
//! arrays (horizontal, vertical), both indexed [k][i][j] with the output
//! index first: horizontal[k][i][j] is the coefficient of d/dx^k in the
//! derivative of the section d/dx^i along delta/delta x^j, and vertical
//! likewise along F d/dy^j.

use serde::Serialize;

use crate::error::Result;
use crate::linalg::Tensor3;
use crate::metric::AmbientEval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConnectionKind {
    Chern,
    Hashiguchi,
}

#[derive(Debug, Clone)]
pub struct ConnectionCoeffs {
    pub dim: usize,
    pub kind: ConnectionKind,
    /// [k][i][j]
    pub horizontal: Tensor3,
    /// [k][i][j]
    pub vertical: Tensor3,
}

/// Chern connection: horizontal part from the Christoffel-type cyclic
/// formula in the horizontal derivatives delta g / delta x, vertical part
/// gamma^k_ij = g^{ks} A_sij (index-raised Cartan tensor).
pub fn chern_coefficients(a: &AmbientEval) -> ConnectionCoeffs {
    let n = a.dim;
    let mut lowered = Tensor3::zeros(n, n, n); // [s][i][j] = Gamma_sij
    for s in 0..n {
        for i in 0..n {
            for j in 0..n {
                lowered[(s, i, j)] =
                    0.5 * (a.delta_g(s, i, j) - a.delta_g(i, j, s) + a.delta_g(j, s, i));
            }
        }
    }
    let horizontal = Tensor3::from_fn(n, n, n, |k, i, j| {
        (0..n).map(|s| a.g_inv[(k, s)] * lowered[(s, i, j)]).sum()
    });
    let vertical = Tensor3::from_fn(n, n, n, |k, i, j| {
        (0..n).map(|s| a.g_inv[(k, s)] * a.cartan[(s, i, j)]).sum()
    });
    ConnectionCoeffs {
        dim: n,
        kind: ConnectionKind::Chern,
        horizontal,
        vertical,
    }
}

/// Berwald coefficients dN^k_i/dy^j = d^2 G^k / dy^i dy^j, in closed form
/// from the order-4 jet of F^2.
pub(crate) fn berwald_coefficients(a: &AmbientEval) -> Tensor3 {
    let n = a.dim;
    let f2 = &a.f2;
    let y = &a.point.y;
    let dg_dy = |i: usize, j: usize, k: usize| 0.5 * f2.partial(&[n + i, n + j, n + k]);
    let d2g_dy2 =
        |i: usize, j: usize, k: usize, l: usize| 0.5 * f2.partial(&[n + i, n + j, n + k, n + l]);

    // V_l and its first and second fiber derivatives (all within order 4).
    let v = |l: usize| {
        let mut acc = -f2.partial(&[l]);
        for k in 0..n {
            acc += f2.partial(&[k, n + l]) * y[k];
        }
        acc
    };
    let dv = |l: usize, m: usize| {
        let mut acc = f2.partial(&[m, n + l]) - f2.partial(&[l, n + m]);
        for s in 0..n {
            acc += f2.partial(&[s, n + l, n + m]) * y[s];
        }
        acc
    };
    let d2v = |l: usize, m: usize, k: usize| {
        let mut acc = f2.partial(&[k, n + l, n + m]) + f2.partial(&[m, n + l, n + k])
            - f2.partial(&[l, n + m, n + k]);
        for s in 0..n {
            acc += f2.partial(&[s, n + l, n + m, n + k]) * y[s];
        }
        acc
    };

    // dg^{il}/dy^m = -g^{ip} (dg_pq/dy^m) g^{ql}
    let ginv = &a.g_inv;
    let mut dginv = Tensor3::zeros(n, n, n);
    for i in 0..n {
        for l in 0..n {
            for m in 0..n {
                let mut acc = 0.0;
                for p in 0..n {
                    for q in 0..n {
                        acc -= ginv[(i, p)] * dg_dy(p, q, m) * ginv[(q, l)];
                    }
                }
                dginv[(i, l, m)] = acc;
            }
        }
    }
    // d2g^{il}/dy^m dy^k
    let d2ginv = |i: usize, l: usize, m: usize, k: usize| {
        let mut acc = 0.0;
        for p in 0..n {
            for q in 0..n {
                acc -= dginv[(i, p, k)] * dg_dy(p, q, m) * ginv[(q, l)];
                acc -= ginv[(i, p)] * d2g_dy2(p, q, m, k) * ginv[(q, l)];
                acc -= ginv[(i, p)] * dg_dy(p, q, m) * dginv[(q, l, k)];
            }
        }
        acc
    };

    Tensor3::from_fn(n, n, n, |i, m, k| {
        let mut acc = 0.0;
        for l in 0..n {
            acc += d2ginv(i, l, m, k) * v(l)
                + dginv[(i, l, m)] * dv(l, k)
                + dginv[(i, l, k)] * dv(l, m)
                + ginv[(i, l)] * d2v(l, m, k);
        }
        0.25 * acc
    })
}

/// Landsberg tensor at a point.
#[derive(Debug, Clone)]
pub struct LandsbergEval {
    /// Fully lowered L_ijk, totally symmetric with L_ijk y^k = 0.
    pub lowered: Tensor3,
    /// L^k_ij = g^{ks} L_sij, indexed [k][i][j].
    pub raised: Tensor3,
}

/// Landsberg tensor as minus one half of the horizontal covariant derivative
/// of g taken with the Berwald coefficients (the Chern-covariant derivative
/// of g vanishes identically, so the obstruction between the two connections
/// is exactly this tensor: Berwald - Chern = raised Landsberg).
pub fn landsberg_tensor(a: &AmbientEval, _chern: &ConnectionCoeffs) -> Result<LandsbergEval> {
    let n = a.dim;
    let berwald = berwald_coefficients(a);
    let lowered = Tensor3::from_fn(n, n, n, |i, j, k| {
        let mut acc = a.delta_g(i, j, k);
        for l in 0..n {
            acc -= a.g[(l, j)] * berwald[(l, i, k)] + a.g[(i, l)] * berwald[(l, j, k)];
        }
        -0.5 * acc
    });
    let raised = Tensor3::from_fn(n, n, n, |k, i, j| {
        (0..n).map(|s| a.g_inv[(k, s)] * lowered[(s, i, j)]).sum()
    });
    Ok(LandsbergEval { lowered, raised })
}

/// Lowered difference between the Berwald and Chern horizontal coefficients,
/// g_{ks} (B^s_ij - Gamma^s_ij), indexed [k][i][j]. Equals the Landsberg
/// tensor; kept as an independent route for cross-checking.
pub fn berwald_route_landsberg(a: &AmbientEval, chern: &ConnectionCoeffs) -> Tensor3 {
    let n = a.dim;
    let berwald = berwald_coefficients(a);
    Tensor3::from_fn(n, n, n, |k, i, j| {
        (0..n)
            .map(|s| a.g[(k, s)] * (berwald[(s, i, j)] - chern.horizontal[(s, i, j)]))
            .sum()
    })
}

/// Hashiguchi connection: horizontal part Chern + Landsberg, vertical part
/// equal to the Chern vertical part (the raised Cartan tensor).
pub fn hashiguchi_coefficients(
    chern: &ConnectionCoeffs,
    landsberg: &LandsbergEval,
) -> ConnectionCoeffs {
    assert_eq!(chern.kind, ConnectionKind::Chern);
    let n = chern.dim;
    let horizontal = Tensor3::from_fn(n, n, n, |k, i, j| {
        chern.horizontal[(k, i, j)] + landsberg.raised[(k, i, j)]
    });
    ConnectionCoeffs {
        dim: n,
        kind: ConnectionKind::Hashiguchi,
        horizontal,
        vertical: chern.vertical.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{ambient_eval, MetricSpec, TangentPoint};
    use approx::assert_relative_eq;

    fn randers_flat() -> MetricSpec {
        let a = vec![
            vec!["1".into(), "0".into(), "0".into()],
            vec!["0".into(), "1".into(), "0".into()],
            vec!["0".into(), "0".into(), "1".into()],
        ];
        let b = vec!["0.3".into(), "0".into(), "0".into()];
        MetricSpec::randers(3, &a, &b).unwrap()
    }

    /// Randers metric with position-dependent drift; not of Berwald type, so
    /// its Landsberg tensor is genuinely nonzero.
    fn randers_curved() -> MetricSpec {
        let a = vec![
            vec!["1".into(), "0".into(), "0".into()],
            vec!["0".into(), "1".into(), "0".into()],
            vec!["0".into(), "0".into(), "1".into()],
        ];
        let b = vec![
            "0.2 + 0.15*sin(x2)".into(),
            "0.1*cos(x3)".into(),
            "0".into(),
        ];
        MetricSpec::randers(3, &a, &b).unwrap()
    }

    #[test]
    fn euclidean_connection_vanishes() {
        let m = MetricSpec::euclidean(3);
        let p = TangentPoint::new(vec![0.0; 3], vec![1.0, -0.3, 0.8]).unwrap();
        let a = ambient_eval(&m, &p).unwrap();
        let c = chern_coefficients(&a);
        assert!(c.horizontal.max_abs() < 1e-13);
        assert!(c.vertical.max_abs() < 1e-13);
        let l = landsberg_tensor(&a, &c).unwrap();
        assert!(l.lowered.max_abs() < 1e-13);
        let h = hashiguchi_coefficients(&c, &l);
        assert!(h.horizontal.max_abs() < 1e-13);
    }

    #[test]
    fn round_sphere_levi_civita() {
        let a = vec![
            vec!["1".to_string(), "0".to_string()],
            vec!["0".to_string(), "sin(x1)^2".to_string()],
        ];
        let m = MetricSpec::riemannian(2, &a).unwrap();
        let theta: f64 = 0.9;
        let p = TangentPoint::new(vec![theta, 0.3], vec![0.4, 1.1]).unwrap();
        let e = ambient_eval(&m, &p).unwrap();
        let c = chern_coefficients(&e);
        // Gamma^theta_phiphi = -sin cos, Gamma^phi_thetaphi = cot.
        assert_relative_eq!(
            c.horizontal[(0, 1, 1)],
            -theta.sin() * theta.cos(),
            epsilon = 1e-9
        );
        assert_relative_eq!(
            c.horizontal[(1, 0, 1)],
            theta.cos() / theta.sin(),
            epsilon = 1e-9
        );
        assert_relative_eq!(
            c.horizontal[(1, 1, 0)],
            theta.cos() / theta.sin(),
            epsilon = 1e-9
        );
        assert!(c.vertical.max_abs() < 1e-12);
        // Riemannian: Hashiguchi = Chern = Levi-Civita.
        let l = landsberg_tensor(&e, &c).unwrap();
        assert!(l.lowered.max_abs() < 1e-9);
    }

    #[test]
    fn spray_compatibility_on_randers() {
        let m = randers_flat();
        let p = TangentPoint::new(vec![0.2, -0.4, 0.1], vec![0.9, 0.5, -0.7]).unwrap();
        let e = ambient_eval(&m, &p).unwrap();
        let c = chern_coefficients(&e);
        let n = 3;
        for l in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                for k in 0..n {
                    acc += c.horizontal[(l, j, k)] * p.y[j] * p.y[k];
                }
            }
            assert_relative_eq!(acc, 2.0 * e.spray[l], epsilon = 1e-9);
        }
        // Chern nonlinear-connection compatibility: Gamma^i_jk y^k = N^i_j.
        for i in 0..n {
            for j in 0..n {
                let acc: f64 = (0..n).map(|k| c.horizontal[(i, j, k)] * p.y[k]).sum();
                assert_relative_eq!(acc, e.nonlinear[(i, j)], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn vertical_is_raised_cartan() {
        let m = randers_flat();
        let p = TangentPoint::new(vec![0.0, 0.1, 0.2], vec![1.2, -0.3, 0.5]).unwrap();
        let e = ambient_eval(&m, &p).unwrap();
        let c = chern_coefficients(&e);
        let n = 3;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let raised: f64 = (0..n).map(|s| e.g_inv[(k, s)] * e.cartan[(s, i, j)]).sum();
                    assert_relative_eq!(c.vertical[(k, i, j)], raised, epsilon = 1e-12);
                    // y-contraction of the vertical part vanishes.
                }
                let contraction: f64 = (0..n).map(|j| c.vertical[(k, i, j)] * p.y[j]).sum();
                assert!(contraction.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn flat_randers_is_berwald_type() {
        // Constant drift on a flat background: Landsberg tensor vanishes.
        let m = randers_flat();
        let p = TangentPoint::new(vec![0.3, 0.0, -0.2], vec![0.6, 1.0, 0.4]).unwrap();
        let e = ambient_eval(&m, &p).unwrap();
        let c = chern_coefficients(&e);
        let l = landsberg_tensor(&e, &c).unwrap();
        assert!(
            l.lowered.max_abs() < 1e-9,
            "max |L| = {}",
            l.lowered.max_abs()
        );
    }

    #[test]
    fn curved_randers_landsberg_structure() {
        let m = randers_curved();
        let p = TangentPoint::new(vec![0.4, 0.8, -0.3], vec![1.0, -0.6, 0.9]).unwrap();
        let e = ambient_eval(&m, &p).unwrap();
        let c = chern_coefficients(&e);
        let l = landsberg_tensor(&e, &c).unwrap();
        let n = 3;
        assert!(
            l.lowered.max_abs() > 1e-4,
            "expected a nonzero Landsberg tensor, got {}",
            l.lowered.max_abs()
        );
        // Total symmetry and y-contraction.
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = l.lowered[(i, j, k)];
                    assert_relative_eq!(v, l.lowered[(j, i, k)], epsilon = 1e-8);
                    assert_relative_eq!(v, l.lowered[(i, k, j)], epsilon = 1e-8);
                }
                let contraction: f64 = (0..n).map(|k| l.lowered[(i, j, k)] * p.y[k]).sum();
                assert!(contraction.abs() < 1e-8, "L y contraction {contraction}");
            }
        }
        // Dual route: lowered Berwald-minus-Chern equals the Landsberg tensor.
        let b = berwald_coefficients(&e);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut diff = 0.0;
                    for s in 0..n {
                        diff += e.g[(k, s)] * (b[(s, i, j)] - c.horizontal[(s, i, j)]);
                    }
                    assert_relative_eq!(diff, l.lowered[(k, i, j)], epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn berwald_euler_identity() {
        // dN/dy is 0-homogeneous of degree matching N: B^l_ik y^k = N^l_i.
        let m = randers_curved();
        let p = TangentPoint::new(vec![0.1, -0.5, 0.7], vec![0.8, 0.3, -1.1]).unwrap();
        let e = ambient_eval(&m, &p).unwrap();
        let b = berwald_coefficients(&e);
        let n = 3;
        for l in 0..n {
            for i in 0..n {
                let acc: f64 = (0..n).map(|k| b[(l, i, k)] * p.y[k]).sum();
                assert_relative_eq!(acc, e.nonlinear[(l, i)], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn hashiguchi_contraction_matches_chern() {
        let m = randers_curved();
        let p = TangentPoint::new(vec![0.0, 0.6, 0.2], vec![1.0, 0.4, -0.5]).unwrap();
        let e = ambient_eval(&m, &p).unwrap();
        let c = chern_coefficients(&e);
        let l = landsberg_tensor(&e, &c).unwrap();
        let h = hashiguchi_coefficients(&c, &l);
        let n = 3;
        // L's y-contraction vanishes, so the spray contractions agree.
        for k in 0..n {
            let mut hc = 0.0;
            let mut cc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    hc += h.horizontal[(k, i, j)] * p.y[i] * p.y[j];
                    cc += c.horizontal[(k, i, j)] * p.y[i] * p.y[j];
                }
            }
            assert_relative_eq!(hc, cc, epsilon = 1e-8);
        }
        assert_eq!(h.kind, ConnectionKind::Hashiguchi);
    }
}
