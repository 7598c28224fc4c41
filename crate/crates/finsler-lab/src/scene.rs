//! Declarative scene files: metric, optional immersion, sample points and
//! tolerance overrides, in TOML. Unknown keys are rejected.
//!
//! ```toml
//! name = "randers-sphere"
//!
//! [metric]
//! kind = "randers"            # euclidean | riemannian | randers | custom
//! dimension = 3
//! a = [["1","0","0"],["0","1","0"],["0","0","1"]]
//! b = ["0.3","0","0"]
//! # f = "sqrt(y1^2+y2^2)"     # custom kind only
//!
//! [immersion]                 # optional
//! dimension = 2
//! components = ["sin(u1)*cos(u2)", "sin(u1)*sin(u2)", "cos(u1)"]
//!
//! [points]
//! count = 12
//! seed = 7
//! base_ranges = [[0.5, 2.6], [0.0, 6.2]]
//! # explicit = [{ base = [1.0, 0.7], fiber = [1.0, -0.5] }]
//!
//! [tolerances]                # optional per-check overrides
//! # homogeneity = 1e-9
//! ```

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::metric::MetricSpec;
use crate::submanifold::ImmersionSpec;
use crate::verify::{SamplePoint, Scene};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    name: Option<String>,
    metric: MetricSection,
    immersion: Option<ImmersionSection>,
    points: PointsSection,
    tolerances: Option<BTreeMap<String, f64>>,
    expect_nonzero_deformation: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricSection {
    kind: String,
    dimension: usize,
    a: Option<Vec<Vec<String>>>,
    b: Option<Vec<String>>,
    f: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImmersionSection {
    dimension: usize,
    components: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointsSection {
    count: Option<usize>,
    seed: Option<u64>,
    base_ranges: Option<Vec<[f64; 2]>>,
    explicit: Option<Vec<ExplicitPoint>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExplicitPoint {
    base: Vec<f64>,
    fiber: Vec<f64>,
}

/// Parse a scene from TOML text.
pub fn parse_scene(text: &str, fallback_name: &str) -> Result<Scene> {
    let file: SceneFile = toml::from_str(text).map_err(|e| Error::Scene(e.to_string()))?;
    let dim = file.metric.dimension;
    if dim == 0 {
        return Err(Error::Scene("metric dimension must be positive".into()));
    }
    let metric = match file.metric.kind.as_str() {
        "euclidean" => MetricSpec::euclidean(dim),
        "riemannian" => {
            let a = file
                .metric
                .a
                .ok_or_else(|| Error::Scene("riemannian metric requires key `a`".into()))?;
            MetricSpec::riemannian(dim, &a)?
        }
        "randers" => {
            let a = file
                .metric
                .a
                .ok_or_else(|| Error::Scene("randers metric requires key `a`".into()))?;
            let b = file
                .metric
                .b
                .ok_or_else(|| Error::Scene("randers metric requires key `b`".into()))?;
            MetricSpec::randers(dim, &a, &b)?
        }
        "custom" => {
            let f = file
                .metric
                .f
                .ok_or_else(|| Error::Scene("custom metric requires key `f`".into()))?;
            MetricSpec::custom(dim, &f)?
        }
        other => {
            return Err(Error::Scene(format!(
                "unknown metric kind `{other}` (expected euclidean, riemannian, randers or custom)"
            )))
        }
    };

    let immersion = match file.immersion {
        None => None,
        Some(sec) => Some(ImmersionSpec::new(dim, sec.dimension, &sec.components)?),
    };
    let base_dim = immersion.as_ref().map_or(dim, |imm| imm.sub_dim);

    let seed = file.points.seed.unwrap_or(0);
    let mut points: Vec<SamplePoint> = Vec::new();
    if let Some(explicit) = &file.points.explicit {
        for p in explicit {
            if p.base.len() != base_dim || p.fiber.len() != base_dim {
                return Err(Error::Scene(format!(
                    "explicit point has wrong dimension (expected base/fiber of length {base_dim})"
                )));
            }
            points.push(SamplePoint {
                base: p.base.clone(),
                fiber: p.fiber.clone(),
            });
        }
    }
    if let Some(count) = file.points.count {
        let ranges: Vec<(f64, f64)> = match &file.points.base_ranges {
            Some(r) => {
                if r.len() != base_dim {
                    return Err(Error::Scene(format!(
                        "base_ranges must have {base_dim} entries"
                    )));
                }
                r.iter().map(|[lo, hi]| (*lo, *hi)).collect()
            }
            None => vec![(-1.0, 1.0); base_dim],
        };
        points.extend(Scene::generate_points(count, seed, &ranges, base_dim));
    }
    if points.is_empty() {
        return Err(Error::Scene(
            "scene has no sample points (set points.count or points.explicit)".into(),
        ));
    }

    Ok(Scene {
        name: file.name.unwrap_or_else(|| fallback_name.to_string()),
        metric,
        immersion,
        points,
        seed,
        tolerances: file.tolerances.unwrap_or_default(),
        expect_nonzero_deformation: file.expect_nonzero_deformation,
    })
}

/// Load a scene from a file path.
pub fn load_scene(path: &std::path::Path) -> Result<Scene> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Scene(format!("cannot read {}: {e}", path.display())))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scene");
    parse_scene(&text, name)
}
