//! Submanifold geometry in the pulled-back bundle: adapted frames, induced
//! metric and nonlinear connection, deformation tensor, induced/normal
//! connection coefficients with second fundamental form and shape operator,
//! and the induced-versus-intrinsic Hashiguchi comparison.

mod connection;
mod frames;
mod hashiguchi;
mod induced;

pub use connection::{
    connection_form, gauss_weingarten_residual, induced_connection, pushforward_directions,
    InducedConnection,
};
pub use frames::{frame_package, FramePackage, ImmersionSpec, SubPoint};
pub use hashiguchi::{
    hashiguchi_comparison, induced_hashiguchi, intrinsic_hashiguchi, restricted_landsberg,
    HashiguchiComparison,
};
pub use induced::{
    deformation_tensor, induced_metric_and_f, induced_nonlinear, intrinsic_eval, InducedMetric,
};

use nalgebra::DMatrix;

use crate::connections::{
    chern_coefficients, hashiguchi_coefficients, landsberg_tensor, ConnectionCoeffs, LandsbergEval,
};
use crate::error::Result;
use crate::metric::{AmbientEval, MetricSpec};

/// Every submanifold-level object at one point (u, v).
#[derive(Debug)]
pub struct InducedPackage {
    pub point: SubPoint,
    /// Induced norm F(u, v) = F_ambient(x(u), B v).
    pub f: f64,
    pub g_sub: DMatrix<f64>,
    /// Induced nonlinear connection (projection of the ambient one).
    pub n_induced: DMatrix<f64>,
    /// Intrinsic nonlinear connection (spray of the induced structure).
    pub n_intrinsic: DMatrix<f64>,
    pub deformation: DMatrix<f64>,
    pub frames: FramePackage,
    /// Full intrinsic evaluation of the induced structure.
    pub intrinsic: AmbientEval,
    /// Induced tangential/normal connection, second fundamental form and
    /// shape operator projected from the ambient Chern connection.
    pub connection: InducedConnection,
    pub hash_induced: ConnectionCoeffs,
    pub hash_intrinsic: ConnectionCoeffs,
    pub comparison: HashiguchiComparison,
    pub ambient_chern: ConnectionCoeffs,
    pub ambient_hashiguchi: ConnectionCoeffs,
    pub ambient_landsberg: LandsbergEval,
}

/// Run the full submanifold pipeline at one point.
pub fn induced_package(
    metric: &MetricSpec,
    immersion: &ImmersionSpec,
    sp: &SubPoint,
) -> Result<InducedPackage> {
    let fp = frame_package(metric, immersion, sp)?;
    let induced = InducedMetric {
        ambient: metric,
        immersion,
    };
    let (f, g_sub) = induced_metric_and_f(&fp, &induced)?;
    let n_induced = induced_nonlinear(&fp);
    let intrinsic = intrinsic_eval(&induced, sp)?;
    let n_intrinsic = intrinsic.nonlinear.clone();
    let deformation = deformation_tensor(&fp, &g_sub)?;

    let ambient_chern = chern_coefficients(&fp.ambient);
    let ambient_landsberg = landsberg_tensor(&fp.ambient, &ambient_chern)?;
    let ambient_hashiguchi = hashiguchi_coefficients(&ambient_chern, &ambient_landsberg);

    let connection = induced_connection(&fp, &ambient_chern, &n_induced);
    let hash_induced = induced_hashiguchi(&fp, &ambient_hashiguchi);
    let hash_intrinsic = intrinsic_hashiguchi(&intrinsic)?;
    let comparison = hashiguchi_comparison(
        &fp,
        &g_sub,
        &intrinsic,
        &ambient_landsberg,
        &hash_induced,
        &hash_intrinsic,
        &deformation,
        f,
    )?;

    Ok(InducedPackage {
        point: sp.clone(),
        f,
        g_sub,
        n_induced,
        n_intrinsic,
        deformation,
        frames: fp,
        intrinsic,
        connection,
        hash_induced,
        hash_intrinsic,
        comparison,
        ambient_chern,
        ambient_hashiguchi,
        ambient_landsberg,
    })
}

impl InducedPackage {
    /// Residual of the nonlinear-connection relation
    /// N_intrinsic = N_induced + D / F (two independent computation paths).
    pub fn nonlinear_relation_residual(&self) -> f64 {
        let m = self.frames.sub_dim;
        let mut worst: f64 = 0.0;
        for al in 0..m {
            for be in 0..m {
                let lhs = self.n_intrinsic[(al, be)];
                let rhs = self.n_induced[(al, be)] + self.deformation[(al, be)] / self.f;
                worst = worst.max((lhs - rhs).abs());
            }
        }
        worst
    }

    /// Residual of the deformation tensor annihilating the fiber direction:
    /// D^alpha_beta v^beta = 0.
    pub fn deformation_fiber_residual(&self) -> f64 {
        let m = self.frames.sub_dim;
        (0..m)
            .map(|al| {
                (0..m)
                    .map(|be| self.deformation[(al, be)] * self.point.v[be])
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
    }

    /// Residual of the Gauss/Weingarten reconstruction at this point.
    pub fn gauss_weingarten_residual(&self) -> f64 {
        gauss_weingarten_residual(
            &self.frames,
            &self.ambient_chern,
            &self.connection,
            &self.n_induced,
        )
    }
}
