//! Independent finite-difference oracle and the invariant suite: every
//! structural identity of the ambient, connection and submanifold layers,
//! executed over the sample points of a scene and collected into a
//! machine-readable report.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::connections::{chern_coefficients, landsberg_tensor, ConnectionCoeffs};
use crate::error::{Error, Result};
use crate::jet::index_space;
use crate::metric::{
    adapted_frames, ambient_eval, ehresmann_apply, sasaki_inner, AmbientEval, MetricField,
    MetricSpec, TangentPoint,
};
use crate::submanifold::{induced_package, ImmersionSpec, InducedMetric, SubPoint};

// ---------------------------------------------------------------------------
// Finite-difference oracle
// ---------------------------------------------------------------------------

/// Central-difference estimate of a mixed partial derivative with Richardson
/// extrapolation over step sizes (h, h/2). Steps are scaled per coordinate
/// by max(1, |coordinate|). Free of jet code by construction: only the
/// passed closure is evaluated.
pub fn fd_oracle(
    f: &dyn Fn(&[f64]) -> Result<f64>,
    point: &[f64],
    multi: &[u8],
    h: Option<f64>,
) -> Result<f64> {
    let order: usize = multi.iter().map(|&e| e as usize).sum();
    assert!(order <= 4, "oracle supports derivative order <= 4");
    let h0 = h.unwrap_or(1e-3);
    let steps: Vec<f64> = point.iter().map(|&x| h0 * x.abs().max(1.0)).collect();
    let coarse = central(f, point, multi, &steps)?;
    let half: Vec<f64> = steps.iter().map(|s| s / 2.0).collect();
    let fine = central(f, point, multi, &half)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

fn central(
    f: &dyn Fn(&[f64]) -> Result<f64>,
    point: &[f64],
    multi: &[u8],
    steps: &[f64],
) -> Result<f64> {
    match multi.iter().position(|&e| e > 0) {
        None => f(point),
        Some(i) => {
            let mut reduced = multi.to_vec();
            reduced[i] -= 1;
            let mut plus = point.to_vec();
            plus[i] += steps[i];
            let mut minus = point.to_vec();
            minus[i] -= steps[i];
            let a = central(f, &plus, &reduced, steps)?;
            let b = central(f, &minus, &reduced, steps)?;
            Ok((a - b) / (2.0 * steps[i]))
        }
    }
}

// ---------------------------------------------------------------------------
// Scenes
// ---------------------------------------------------------------------------

/// One sample point: base coordinates and a nonzero fiber vector, in the
/// submanifold chart when an immersion is present, otherwise in the ambient
/// chart.
#[derive(Debug, Clone, Serialize)]
pub struct SamplePoint {
    pub base: Vec<f64>,
    pub fiber: Vec<f64>,
}

/// A verification scene: metric, optional immersion, sample points and
/// tolerance overrides.
#[derive(Debug)]
pub struct Scene {
    pub name: String,
    pub metric: MetricSpec,
    pub immersion: Option<ImmersionSpec>,
    pub points: Vec<SamplePoint>,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    /// Whether the deformation tensor is expected to be nonzero on this
    /// scene (contrapositive checks). Defaults to "metric is not fiber
    /// quadratic and an immersion is present".
    pub expect_nonzero_deformation: Option<bool>,
}

impl Scene {
    /// Draw `count` sample points: base uniform in `ranges`, fiber uniform
    /// on the unit sphere scaled through {0.5, 1, 2} to exercise
    /// homogeneity. Deterministic in the seed.
    pub fn generate_points(
        count: usize,
        seed: u64,
        ranges: &[(f64, f64)],
        fiber_dim: usize,
    ) -> Vec<SamplePoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scales = [0.5, 1.0, 2.0];
        (0..count)
            .map(|k| {
                let base: Vec<f64> = ranges
                    .iter()
                    .map(|&(lo, hi)| rng.gen_range(lo..hi))
                    .collect();
                let mut fiber: Vec<f64>;
                loop {
                    let candidate: Vec<f64> =
                        (0..fiber_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let norm = candidate.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm > 1e-3 {
                        let scale = scales[k % scales.len()] / norm;
                        fiber = candidate;
                        for v in &mut fiber {
                            *v *= scale;
                        }
                        break;
                    }
                }
                SamplePoint { base, fiber }
            })
            .collect()
    }

    fn expects_nonzero_deformation(&self) -> bool {
        self.expect_nonzero_deformation
            .unwrap_or(!self.metric.fiber_quadratic() && self.immersion.is_some())
    }
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

/// Pass criterion for a check: an upper bound on a residual, or a lower
/// bound on a magnitude (used for the expected-nonzero contrapositive
/// checks).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    ResidualBelow,
    MagnitudeAbove,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    /// Description of the identity being checked.
    pub identity: String,
    pub mode: CheckMode,
    pub tolerance: f64,
    /// Worst observed value: max residual for ResidualBelow checks, min
    /// magnitude for MagnitudeAbove checks.
    pub value: f64,
    /// Index of the sample point realizing the worst value.
    pub worst_point: Option<usize>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub scene: String,
    pub metric_kind: String,
    pub points: usize,
    pub checks: Vec<CheckRecord>,
    pub overall_pass: bool,
}

impl Report {
    pub fn to_json(&self, indent: usize) -> String {
        crate::to_json_with_indent(self, indent)
    }
}

// ---------------------------------------------------------------------------
// Check catalog
// ---------------------------------------------------------------------------

struct CheckDef {
    name: &'static str,
    identity: &'static str,
    mode: CheckMode,
    tolerance: f64,
}

const fn below(name: &'static str, identity: &'static str, tolerance: f64) -> CheckDef {
    CheckDef {
        name,
        identity,
        mode: CheckMode::ResidualBelow,
        tolerance,
    }
}

const fn above(name: &'static str, identity: &'static str, tolerance: f64) -> CheckDef {
    CheckDef {
        name,
        identity,
        mode: CheckMode::MagnitudeAbove,
        tolerance,
    }
}

fn catalog() -> Vec<CheckDef> {
    vec![
        below("ambient-fundamental-symmetry", "g_ij = g_ji", 1e-10),
        above("ambient-convexity", "min eigenvalue of g > 0", 1e-10),
        below("ambient-metric-inverse", "g g^{-1} = id", 1e-10),
        below("ambient-fiber-norm", "g_ij y^i y^j = F^2", 1e-9),
        below("ambient-cartan-symmetry", "A_ijk totally symmetric", 1e-8),
        below("ambient-cartan-contraction", "A_ijk y^k = 0", 1e-8),
        below(
            "ambient-homogeneity",
            "F, g, G, N scale as t, 1, t^2, t under y -> t y for t in {0.5, 2, 3}",
            1e-9,
        ),
        below(
            "ambient-frame-duality",
            "coframe rows pair with frame columns to the identity",
            1e-10,
        ),
        below(
            "ambient-ehresmann-projection",
            "pi(X^H) = X, pi(X^V) = 0, theta(X^H) = 0, theta(X^V) = X",
            1e-10,
        ),
        below(
            "ambient-sasaki-splitting",
            "Sasaki inner product is block diagonal with blocks g",
            1e-10,
        ),
        below(
            "ambient-jet-vs-finite-difference",
            "every partial of F^2 to order 3 matches the Richardson oracle",
            1e-6,
        ),
        below(
            "ambient-riemannian-cartan",
            "Cartan tensor of a fiber-quadratic metric vanishes",
            1e-10,
        ),
        below(
            "ambient-riemannian-fiber-independence",
            "fundamental tensor of a fiber-quadratic metric is independent of y",
            1e-10,
        ),
        below(
            "chern-horizontal-symmetry",
            "Chern horizontal coefficients symmetric in the lower pair",
            1e-10,
        ),
        below("chern-spray-compatibility", "Gamma^l_jk y^j y^k = 2 G^l", 1e-8),
        below("chern-nonlinear-compatibility", "Gamma^i_jk y^k = N^i_j", 1e-8),
        below(
            "chern-vertical-raised-cartan",
            "vertical coefficients equal g^{ks} A_sij",
            1e-10,
        ),
        below("landsberg-symmetry", "L_ijk totally symmetric", 1e-8),
        below("landsberg-contraction", "L_ijk y^k = 0", 1e-8),
        below(
            "landsberg-berwald-chern",
            "lowered (Berwald - Chern) equals the Landsberg tensor",
            1e-8,
        ),
        below(
            "riemannian-levi-civita-reduction",
            "Chern horizontal coefficients match finite-difference Christoffel symbols",
            1e-8,
        ),
        below(
            "riemannian-landsberg-vanishes",
            "Landsberg tensor of a fiber-quadratic metric vanishes",
            1e-9,
        ),
        above("immersion-rank", "min singular value of B", 1e-8),
        below(
            "frame-orthonormality",
            "g(B, N) = 0 and g(N, N) = id for the normal frame",
            1e-9,
        ),
        below(
            "frame-completeness",
            "Btilde B = id, Btilde N = 0, Ntilde B = 0, Ntilde N = id, B Btilde + N Ntilde = id",
            1e-9,
        ),
        below(
            "induced-metric-two-routes",
            "pullback B^T g B equals the fiber Hessian of the composed F^2",
            1e-9,
        ),
        below(
            "nonlinear-deformation-relation",
            "intrinsic N equals induced N plus D / F (two computation paths)",
            1e-7,
        ),
        below("deformation-fiber-contraction", "D^a_b v^b = 0", 1e-8),
        below(
            "gauss-weingarten-reconstruction",
            "ambient derivative of tangential/normal sections splits through the projected coefficients",
            1e-8,
        ),
        below(
            "ehresmann-restriction",
            "pullback of delta y / F equals B delta v / F plus the normal-curvature term",
            1e-8,
        ),
        below(
            "vertical-hashiguchi-agreement",
            "induced and intrinsic vertical Hashiguchi coefficients coincide",
            1e-8,
        ),
        below(
            "hashiguchi-gap-deformation-only",
            "induced minus intrinsic Hashiguchi equals the deformation correction alone",
            1e-7,
        ),
        below(
            "hashiguchi-gap-exact-decomposition",
            "connection gap equals deformation + Cartan-coupling + Landsberg terms",
            1e-9,
        ),
        below(
            "intrinsic-cartan-symmetry",
            "intrinsic Cartan tensor totally symmetric with zero fiber contraction",
            1e-8,
        ),
        below(
            "intrinsic-homogeneity",
            "induced structure satisfies the homogeneity laws",
            1e-9,
        ),
        below(
            "intrinsic-landsberg-structure",
            "intrinsic Landsberg tensor symmetric, fiber-transverse, and equal to Berwald - Chern",
            1e-8,
        ),
        below(
            "hashiguchi-coincidence",
            "induced and intrinsic Hashiguchi connections coincide when the deformation vanishes",
            1e-8,
        ),
        below("deformation-vanishes", "deformation tensor vanishes", 1e-10),
        above("deformation-nonzero", "deformation tensor magnitude", 1e-3),
        above(
            "hashiguchi-connections-differ",
            "induced minus intrinsic Hashiguchi magnitude",
            1e-6,
        ),
    ]
}

// ---------------------------------------------------------------------------
// Per-point evaluation
// ---------------------------------------------------------------------------

fn ambient_core_residuals(
    metric: &dyn MetricField,
    eval: &AmbientEval,
    out: &mut Vec<(String, f64)>,
) -> Result<()> {
    let n = eval.dim;
    let y = &eval.point.y;
    let mut push = |name: &str, v: f64| out.push((format!("ambient-{name}"), v));

    let sym = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (eval.g[(i, j)] - eval.g[(j, i)]).abs())
        .fold(0.0f64, f64::max);
    push("fundamental-symmetry", sym);

    let eig = eval.g.clone().symmetric_eigen();
    let min_eig = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    push("convexity", min_eig);

    let inv_res = (&eval.g * &eval.g_inv - DMatrix::identity(n, n))
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    push("metric-inverse", inv_res);

    let mut gyy = 0.0;
    for i in 0..n {
        for j in 0..n {
            gyy += eval.g[(i, j)] * y[i] * y[j];
        }
    }
    push("fiber-norm", (gyy - eval.f * eval.f).abs());

    let mut cartan_sym: f64 = 0.0;
    let mut cartan_contraction: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let a = eval.cartan[(i, j, k)];
                cartan_sym = cartan_sym
                    .max((a - eval.cartan[(j, i, k)]).abs())
                    .max((a - eval.cartan[(i, k, j)]).abs());
            }
            let c: f64 = (0..n).map(|k| eval.cartan[(i, j, k)] * y[k]).sum();
            cartan_contraction = cartan_contraction.max(c.abs());
        }
    }
    push("cartan-symmetry", cartan_sym);
    push("cartan-contraction", cartan_contraction);

    let mut homog: f64 = 0.0;
    for t in [0.5, 2.0, 3.0] {
        homog = homog.max(crate::metric::spray_homogeneity_check(
            metric,
            &eval.point,
            t,
        )?);
    }
    push("homogeneity", homog);

    Ok(())
}

fn ambient_frame_residuals(eval: &AmbientEval, out: &mut Vec<(String, f64)>) {
    let n = eval.dim;
    let fr = adapted_frames(eval);
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
    let duality = (coframe * &frame - DMatrix::identity(2 * n, 2 * n))
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    out.push(("ambient-frame-duality".into(), duality));

    let mut ehres: f64 = 0.0;
    let mut sasaki: f64 = 0.0;
    for j in 0..n {
        let xh: Vec<f64> = fr.horizontal.column(j).iter().cloned().collect();
        let (pi_h, th_h) = ehresmann_apply(eval, &xh);
        let xv: Vec<f64> = fr.vertical.column(j).iter().cloned().collect();
        let (pi_v, th_v) = ehresmann_apply(eval, &xv);
        for i in 0..n {
            let e = if i == j { 1.0 } else { 0.0 };
            ehres = ehres
                .max((pi_h[i] - e).abs())
                .max(th_h[i].abs())
                .max(pi_v[i].abs())
                .max((th_v[i] - e).abs());
        }
        for k in 0..n {
            let xh2: Vec<f64> = fr.horizontal.column(k).iter().cloned().collect();
            let xv2: Vec<f64> = fr.vertical.column(k).iter().cloned().collect();
            sasaki = sasaki
                .max((sasaki_inner(eval, &xh, &xh2) - eval.g[(j, k)]).abs())
                .max((sasaki_inner(eval, &xv, &xv2) - eval.g[(j, k)]).abs())
                .max(sasaki_inner(eval, &xh, &xv2).abs());
        }
    }
    out.push(("ambient-ehresmann-projection".into(), ehres));
    out.push(("ambient-sasaki-splitting".into(), sasaki));
}

fn jet_vs_fd_residual(
    metric: &MetricSpec,
    point: &TangentPoint,
    eval: &AmbientEval,
) -> Result<f64> {
    let n = metric.dim();
    let nv = 2 * n;
    let f = |coords: &[f64]| metric.f2_value(&coords[..n], &coords[n..]);
    let mut coords = point.x.clone();
    coords.extend_from_slice(&point.y);
    let space = index_space(nv, 3);
    let mut worst: f64 = 0.0;
    for rank in 1..space.len() {
        let multi = space.multi(rank).to_vec();
        let order: usize = multi.iter().map(|&e| e as usize).sum();
        // Step size balances truncation against f64 roundoff per order.
        let h = match order {
            1 => 1e-4,
            2 => 1e-3,
            _ => 4e-3,
        };
        let fd = fd_oracle(&f, &coords, &multi, Some(h))?;
        let jet = eval.f2.extract(&multi);
        worst = worst.max((jet - fd).abs() / fd.abs().max(1.0));
    }
    Ok(worst)
}

fn connection_residuals(eval: &AmbientEval, out: &mut Vec<(String, f64)>) -> Result<()> {
    let n = eval.dim;
    let y = &eval.point.y;
    let chern = chern_coefficients(eval);
    let landsberg = landsberg_tensor(eval, &chern)?;
    let mut push = |name: &str, v: f64| out.push((name.to_string(), v));

    let mut h_sym: f64 = 0.0;
    let mut spray_res: f64 = 0.0;
    let mut nonlin_res: f64 = 0.0;
    let mut raised_res: f64 = 0.0;
    for k in 0..n {
        let mut contraction = 0.0;
        for i in 0..n {
            let mut ny = 0.0;
            for j in 0..n {
                h_sym =
                    h_sym.max((chern.horizontal[(k, i, j)] - chern.horizontal[(k, j, i)]).abs());
                contraction += chern.horizontal[(k, i, j)] * y[i] * y[j];
                ny += chern.horizontal[(k, i, j)] * y[j];
                let raised: f64 = (0..n)
                    .map(|s| eval.g_inv[(k, s)] * eval.cartan[(s, i, j)])
                    .sum();
                raised_res = raised_res.max((chern.vertical[(k, i, j)] - raised).abs());
            }
            nonlin_res = nonlin_res.max((ny - eval.nonlinear[(k, i)]).abs());
        }
        spray_res = spray_res.max((contraction - 2.0 * eval.spray[k]).abs());
    }
    push("chern-horizontal-symmetry", h_sym);
    push("chern-spray-compatibility", spray_res);
    push("chern-nonlinear-compatibility", nonlin_res);
    push("chern-vertical-raised-cartan", raised_res);

    let mut l_sym: f64 = 0.0;
    let mut l_contr: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let l = landsberg.lowered[(i, j, k)];
                l_sym = l_sym
                    .max((l - landsberg.lowered[(j, i, k)]).abs())
                    .max((l - landsberg.lowered[(i, k, j)]).abs());
            }
            let c: f64 = (0..n).map(|k| landsberg.lowered[(i, j, k)] * y[k]).sum();
            l_contr = l_contr.max(c.abs());
        }
    }
    push("landsberg-symmetry", l_sym);
    push("landsberg-contraction", l_contr);

    let berwald = crate::connections::berwald_route_landsberg(eval, &chern);
    let mut dual: f64 = 0.0;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                dual = dual.max((berwald[(k, i, j)] - landsberg.lowered[(k, i, j)]).abs());
            }
        }
    }
    push("landsberg-berwald-chern", dual);
    Ok(())
}

/// Finite-difference Christoffel symbols of the riemannian part, compared
/// against the Chern horizontal coefficients.
fn levi_civita_fd_residual(
    metric: &MetricSpec,
    eval: &AmbientEval,
    chern: &ConnectionCoeffs,
) -> Result<f64> {
    let n = eval.dim;
    let a_at = |x: &[f64]| -> Result<DMatrix<f64>> { metric.riemannian_part(x) };
    let x0 = &eval.point.x;
    // da[i][j][k] = d a_ij / dx^k via the oracle.
    let mut da = vec![0.0; n * n * n];
    for k in 0..n {
        let mut multi = vec![0u8; n];
        multi[k] = 1;
        for i in 0..n {
            for j in 0..n {
                let f = |x: &[f64]| Ok(a_at(x)?[(i, j)]);
                da[(i * n + j) * n + k] = fd_oracle(&f, x0, &multi, Some(1e-4))?;
            }
        }
    }
    let a_inv = a_at(x0)?.try_inverse().ok_or(Error::SingularMetric {
        cond: f64::INFINITY,
    })?;
    let mut worst: f64 = 0.0;
    for l in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut gamma = 0.0;
                for s in 0..n {
                    gamma += 0.5
                        * a_inv[(l, s)]
                        * (da[(s * n + j) * n + k] + da[(s * n + k) * n + j]
                            - da[(j * n + k) * n + s]);
                }
                worst = worst.max((gamma - chern.horizontal[(l, j, k)]).abs());
            }
        }
    }
    Ok(worst)
}

fn riemannian_kind_residuals(
    metric: &MetricSpec,
    eval: &AmbientEval,
    out: &mut Vec<(String, f64)>,
) -> Result<()> {
    out.push(("ambient-riemannian-cartan".into(), eval.cartan.max_abs()));

    // Fiber independence: re-evaluate g at rotated fibers.
    let n = eval.dim;
    let mut indep: f64 = 0.0;
    for shift in 1..=2 {
        let mut y2 = eval.point.y.clone();
        y2.rotate_right(shift);
        for v in &mut y2 {
            *v += 0.25 * shift as f64;
        }
        if y2.iter().map(|v| v * v).sum::<f64>() < 1e-6 {
            continue;
        }
        let p2 = TangentPoint::new(eval.point.x.clone(), y2)?;
        let e2 = ambient_eval(metric, &p2)?;
        for i in 0..n {
            for j in 0..n {
                indep = indep.max((e2.g[(i, j)] - eval.g[(i, j)]).abs());
            }
        }
    }
    out.push(("ambient-riemannian-fiber-independence".into(), indep));

    let chern = chern_coefficients(eval);
    let landsberg = landsberg_tensor(eval, &chern)?;
    out.push((
        "riemannian-landsberg-vanishes".into(),
        landsberg.lowered.max_abs(),
    ));
    out.push((
        "riemannian-levi-civita-reduction".into(),
        levi_civita_fd_residual(metric, eval, &chern)?,
    ));
    Ok(())
}

fn intrinsic_structure_residuals(
    induced: &InducedMetric,
    intrinsic: &AmbientEval,
    out: &mut Vec<(String, f64)>,
) -> Result<()> {
    let m = intrinsic.dim;
    let v = &intrinsic.point.y;
    let mut sym: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let a = intrinsic.cartan[(i, j, k)];
                sym = sym
                    .max((a - intrinsic.cartan[(j, i, k)]).abs())
                    .max((a - intrinsic.cartan[(i, k, j)]).abs());
            }
            let c: f64 = (0..m).map(|k| intrinsic.cartan[(i, j, k)] * v[k]).sum();
            sym = sym.max(c.abs());
        }
    }
    out.push(("intrinsic-cartan-symmetry".into(), sym));

    let mut homog: f64 = 0.0;
    for t in [0.5, 2.0, 3.0] {
        homog = homog.max(crate::metric::spray_homogeneity_check(
            induced,
            &intrinsic.point,
            t,
        )?);
    }
    out.push(("intrinsic-homogeneity".into(), homog));

    let chern = chern_coefficients(intrinsic);
    let landsberg = landsberg_tensor(intrinsic, &chern)?;
    let berwald = crate::connections::berwald_route_landsberg(intrinsic, &chern);
    let mut l_res: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let l = landsberg.lowered[(i, j, k)];
                l_res = l_res
                    .max((l - landsberg.lowered[(j, i, k)]).abs())
                    .max((l - landsberg.lowered[(i, k, j)]).abs())
                    .max((berwald[(i, j, k)] - l).abs());
            }
            let c: f64 = (0..m).map(|k| landsberg.lowered[(i, j, k)] * v[k]).sum();
            l_res = l_res.max(c.abs());
        }
    }
    out.push(("intrinsic-landsberg-structure".into(), l_res));
    Ok(())
}

/// Pullback of the ambient vertical coframe delta y^i / F through the
/// immersion tangent map, compared against B^i_beta delta v^beta / F plus
/// the normal-curvature term (1/F) N^i_a H^a_alpha du^alpha. Also checks
/// the tangential projection, which is the restriction statement proper.
fn ehresmann_restriction_residual(
    fp: &crate::submanifold::FramePackage,
    n_ind: &DMatrix<f64>,
) -> f64 {
    let m = fp.sub_dim;
    let n = fp.ambient_dim;
    let f = fp.ambient.f;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for al in 0..m {
            // du^alpha component of the pullback:
            // (1/F)(B^i_{alpha 0} + N^i_j B^j_alpha).
            let mut lhs_du = fp.b0[(i, al)];
            for j in 0..n {
                lhs_du += fp.ambient.nonlinear[(i, j)] * fp.b[(j, al)];
            }
            lhs_du /= f;
            // Claimed value: (1/F)(B^i_beta N^beta_alpha + N^i_a H^a_alpha).
            let mut rhs_du = 0.0;
            for be in 0..m {
                rhs_du += fp.b[(i, be)] * n_ind[(be, al)];
            }
            for a in 0..fp.n_normal {
                rhs_du += fp.nframe[(i, a)] * fp.h[(a, al)];
            }
            rhs_du /= f;
            worst = worst.max((lhs_du - rhs_du).abs());
        }
    }
    // Tangential projection: Btilde applied to the pullback leaves exactly
    // delta v / F (the normal-curvature term drops), plus the dv components.
    for lam in 0..m {
        for al in 0..m {
            let mut proj = 0.0;
            for i in 0..n {
                let mut lhs = fp.b0[(i, al)];
                for j in 0..n {
                    lhs += fp.ambient.nonlinear[(i, j)] * fp.b[(j, al)];
                }
                proj += fp.btilde[(lam, i)] * lhs / f;
            }
            worst = worst.max((proj - n_ind[(lam, al)] / f).abs());
        }
        // dv^alpha components: Btilde (B / F) = id / F.
        for al in 0..m {
            let mut proj = 0.0;
            for i in 0..n {
                proj += fp.btilde[(lam, i)] * fp.b[(i, al)] / f;
            }
            let expect = if lam == al { 1.0 / f } else { 0.0 };
            worst = worst.max((proj - expect).abs());
        }
    }
    worst
}

fn frame_identity_residuals(fp: &crate::submanifold::FramePackage) -> (f64, f64) {
    let n = fp.ambient_dim;
    let m = fp.sub_dim;
    let nn = fp.n_normal;
    let g = &fp.ambient.g;
    let mut ortho: f64 = 0.0;
    for a in 0..nn {
        for al in 0..m {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    acc += g[(i, j)] * fp.b[(i, al)] * fp.nframe[(j, a)];
                }
            }
            ortho = ortho.max(acc.abs());
        }
        for b in 0..nn {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    acc += g[(i, j)] * fp.nframe[(i, a)] * fp.nframe[(j, b)];
                }
            }
            let expect = if a == b { 1.0 } else { 0.0 };
            ortho = ortho.max((acc - expect).abs());
        }
    }
    let mut complete: f64 = 0.0;
    for al in 0..m {
        for be in 0..m {
            let acc: f64 = (0..n).map(|i| fp.btilde[(al, i)] * fp.b[(i, be)]).sum();
            let expect = if al == be { 1.0 } else { 0.0 };
            complete = complete.max((acc - expect).abs());
        }
        for a in 0..nn {
            let acc: f64 = (0..n).map(|i| fp.btilde[(al, i)] * fp.nframe[(i, a)]).sum();
            complete = complete.max(acc.abs());
        }
    }
    for a in 0..nn {
        for al in 0..m {
            let acc: f64 = (0..n).map(|i| fp.ntilde[(a, i)] * fp.b[(i, al)]).sum();
            complete = complete.max(acc.abs());
        }
        for b in 0..nn {
            let acc: f64 = (0..n).map(|i| fp.ntilde[(a, i)] * fp.nframe[(i, b)]).sum();
            let expect = if a == b { 1.0 } else { 0.0 };
            complete = complete.max((acc - expect).abs());
        }
    }
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for al in 0..m {
                acc += fp.b[(i, al)] * fp.btilde[(al, j)];
            }
            for a in 0..nn {
                acc += fp.ntilde[(a, j)] * fp.nframe[(i, a)];
            }
            let expect = if i == j { 1.0 } else { 0.0 };
            complete = complete.max((acc - expect).abs());
        }
    }
    (ortho, complete)
}

/// All residuals at one sample point.
fn point_residuals(scene: &Scene, point: &SamplePoint) -> Result<Vec<(String, f64)>> {
    let mut out: Vec<(String, f64)> = Vec::new();
    match &scene.immersion {
        None => {
            let tp = TangentPoint::new(point.base.clone(), point.fiber.clone())?;
            let eval = ambient_eval(&scene.metric, &tp)?;
            ambient_core_residuals(&scene.metric, &eval, &mut out)?;
            ambient_frame_residuals(&eval, &mut out);
            out.push((
                "ambient-jet-vs-finite-difference".into(),
                jet_vs_fd_residual(&scene.metric, &tp, &eval)?,
            ));
            connection_residuals(&eval, &mut out)?;
            if scene.metric.fiber_quadratic() {
                riemannian_kind_residuals(&scene.metric, &eval, &mut out)?;
            }
        }
        Some(imm) => {
            let sp = SubPoint::new(point.base.clone(), point.fiber.clone())?;
            let pkg = induced_package(&scene.metric, imm, &sp)?;
            let fp = &pkg.frames;

            // Ambient layer at the composed point.
            ambient_core_residuals(&scene.metric, &fp.ambient, &mut out)?;
            ambient_frame_residuals(&fp.ambient, &mut out);
            out.push((
                "ambient-jet-vs-finite-difference".into(),
                jet_vs_fd_residual(&scene.metric, &fp.ambient.point, &fp.ambient)?,
            ));
            connection_residuals(&fp.ambient, &mut out)?;
            if scene.metric.fiber_quadratic() {
                riemannian_kind_residuals(&scene.metric, &fp.ambient, &mut out)?;
            }

            // Frame identities.
            let svd = fp.b.clone().svd(false, false);
            let min_sv = svd
                .singular_values
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            out.push(("immersion-rank".into(), min_sv));
            let (ortho, complete) = frame_identity_residuals(fp);
            out.push(("frame-orthonormality".into(), ortho));
            out.push(("frame-completeness".into(), complete));

            // Induced metric two routes (recomputed to expose the residual).
            let induced = InducedMetric {
                ambient: &scene.metric,
                immersion: imm,
            };
            let m = fp.sub_dim;
            let n = fp.ambient_dim;
            let f2 = induced.f2_jet(&sp.u, &sp.v, 2)?;
            let mut two_routes: f64 = 0.0;
            for al in 0..m {
                for be in 0..m {
                    let mut pullback = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            pullback += fp.b[(i, al)] * fp.ambient.g[(i, j)] * fp.b[(j, be)];
                        }
                    }
                    let hess = 0.5 * f2.partial(&[m + al, m + be]);
                    two_routes = two_routes.max((pullback - hess).abs());
                }
            }
            out.push(("induced-metric-two-routes".into(), two_routes));

            out.push((
                "nonlinear-deformation-relation".into(),
                pkg.nonlinear_relation_residual(),
            ));
            out.push((
                "deformation-fiber-contraction".into(),
                pkg.deformation_fiber_residual(),
            ));
            out.push((
                "gauss-weingarten-reconstruction".into(),
                pkg.gauss_weingarten_residual(),
            ));
            out.push((
                "ehresmann-restriction".into(),
                ehresmann_restriction_residual(fp, &pkg.n_induced),
            ));
            out.push((
                "vertical-hashiguchi-agreement".into(),
                pkg.comparison.vertical_diff,
            ));
            out.push((
                "hashiguchi-gap-deformation-only".into(),
                pkg.comparison.deformation_relation_residual,
            ));
            out.push((
                "hashiguchi-gap-exact-decomposition".into(),
                pkg.comparison.exact_relation_residual,
            ));

            intrinsic_structure_residuals(&induced, &pkg.intrinsic, &mut out)?;

            if scene.expects_nonzero_deformation() {
                out.push((
                    "deformation-nonzero".into(),
                    pkg.comparison.deformation_norm,
                ));
                out.push((
                    "hashiguchi-connections-differ".into(),
                    pkg.comparison.horizontal_diff,
                ));
            } else {
                out.push((
                    "deformation-vanishes".into(),
                    pkg.comparison.deformation_norm,
                ));
                out.push((
                    "hashiguchi-coincidence".into(),
                    pkg.comparison
                        .horizontal_diff
                        .max(pkg.comparison.vertical_diff),
                ));
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Suite runner
// ---------------------------------------------------------------------------

/// Execute every applicable check over the scene's sample points. Point
/// evaluations run in parallel; the report is deterministic for a given
/// scene and seed (checks sorted by name, aggregation order independent).
/// A crash or error at a point is captured as a failing record rather than
/// aborting the process.
pub fn run_suite(scene: &Scene) -> Report {
    let results: Vec<std::result::Result<Vec<(String, f64)>, String>> = scene
        .points
        .par_iter()
        .map(|p| {
            catch_unwind(AssertUnwindSafe(|| point_residuals(scene, p)))
                .map_err(|panic| {
                    if let Some(s) = panic.downcast_ref::<&str>() {
                        format!("panic: {s}")
                    } else if let Some(s) = panic.downcast_ref::<String>() {
                        format!("panic: {s}")
                    } else {
                        "panic".to_string()
                    }
                })
                .and_then(|r| r.map_err(|e| e.to_string()))
        })
        .collect();

    // Aggregate worst values per check.
    #[derive(Clone)]
    struct Agg {
        value: f64,
        point: usize,
    }
    let mut worst_below: BTreeMap<String, Agg> = BTreeMap::new();
    let mut worst_above: BTreeMap<String, Agg> = BTreeMap::new();
    let defs = catalog();
    let mode_of: BTreeMap<&str, CheckMode> = defs.iter().map(|d| (d.name, d.mode)).collect();
    let mut errors: Vec<(usize, String)> = Vec::new();
    for (idx, result) in results.iter().enumerate() {
        match result {
            Err(msg) => errors.push((idx, msg.clone())),
            Ok(values) => {
                for (name, value) in values {
                    match mode_of.get(name.as_str()) {
                        Some(CheckMode::MagnitudeAbove) => {
                            let e = worst_above.entry(name.clone()).or_insert(Agg {
                                value: f64::INFINITY,
                                point: idx,
                            });
                            if *value < e.value {
                                e.value = *value;
                                e.point = idx;
                            }
                        }
                        _ => {
                            let e = worst_below.entry(name.clone()).or_insert(Agg {
                                value: f64::NEG_INFINITY,
                                point: idx,
                            });
                            if *value > e.value {
                                e.value = *value;
                                e.point = idx;
                            }
                        }
                    }
                }
            }
        }
    }

    let overrides = &scene.tolerances;
    let mut checks: Vec<CheckRecord> = Vec::new();
    for def in &defs {
        let agg = match def.mode {
            CheckMode::ResidualBelow => worst_below.get(def.name),
            CheckMode::MagnitudeAbove => worst_above.get(def.name),
        };
        let Some(agg) = agg else { continue };
        let tolerance = overrides.get(def.name).copied().unwrap_or(def.tolerance);
        let passed = match def.mode {
            CheckMode::ResidualBelow => agg.value <= tolerance,
            CheckMode::MagnitudeAbove => agg.value >= tolerance,
        };
        checks.push(CheckRecord {
            name: def.name.to_string(),
            identity: def.identity.to_string(),
            mode: def.mode,
            tolerance,
            value: agg.value,
            worst_point: Some(agg.point),
            passed,
        });
    }
    for (idx, msg) in &errors {
        checks.push(CheckRecord {
            name: "point-evaluation".into(),
            identity: format!("point {idx} evaluated without errors: {msg}"),
            mode: CheckMode::ResidualBelow,
            tolerance: 0.0,
            value: f64::INFINITY,
            worst_point: Some(*idx),
            passed: false,
        });
    }
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    let overall_pass = checks.iter().all(|c| c.passed);
    Report {
        scene: scene.name.clone(),
        metric_kind: scene.metric.kind_name().to_string(),
        points: scene.points.len(),
        checks,
        overall_pass,
    }
}
