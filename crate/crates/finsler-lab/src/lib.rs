//! finsler-lab: a numerical engine for Finsler geometry on the pulled-back
//! bundle.
//!
//! The crate evaluates, at points of the slit tangent bundle, the full tower
//! of objects attached to a Finsler metric and an immersed submanifold:
//! fundamental and Cartan tensors, spray and nonlinear connection, Chern and
//! Hashiguchi connection coefficients, Landsberg tensor, adapted frames,
//! second fundamental form, shape operator, deformation tensor, and the
//! induced-versus-intrinsic connection comparison. A verification suite
//! checks the structural identities numerically against an independent
//! finite-difference oracle.

// Tensor-index arithmetic reads best with explicit index loops.
#![allow(clippy::needless_range_loop)]

pub mod connections;
pub mod error;
pub mod expr;
pub mod jet;
pub mod linalg;
pub mod metric;
pub mod scene;
pub mod submanifold;

pub mod verify;

pub use nalgebra;

pub use error::{Error, Result};
pub use jet::Jet;
pub use metric::{ambient_eval, AmbientEval, MetricField, MetricSpec, TangentPoint};

/// Serialize to pretty JSON with a configurable indent width (0 = compact).
pub fn to_json_with_indent<T: serde::Serialize>(value: &T, indent: usize) -> String {
    if indent == 0 {
        return serde_json::to_string(value).expect("serialization cannot fail");
    }
    let spaces = vec![b' '; indent];
    let formatter = serde_json::ser::PrettyFormatter::with_indent(&spaces);
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, formatter);
    value
        .serialize(&mut ser)
        .expect("serialization cannot fail");
    String::from_utf8(buf).expect("json is utf-8")
}
