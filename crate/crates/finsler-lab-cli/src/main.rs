//! Command-line surface of the finsler-lab engine.
//!
//! Subcommands: `eval` (ambient tensors at scene points), `induce` (the full
//! submanifold package), `compare-hashiguchi` (just the induced-versus-
//! intrinsic comparison block) and `verify` (the invariant suite).
//!
//! Exit codes: 0 success, 1 verification failure, 2 scene or expression
//! parse error, 3 math-domain error (non-positive norm, convexity or
//! cross-check failure), 4 rank or frame degeneracy.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use finsler_lab::error::Error;
use finsler_lab::metric::{ambient_eval, AmbientEval, TangentPoint};
use finsler_lab::scene::load_scene;
use finsler_lab::submanifold::{induced_package, InducedPackage, SubPoint};
use finsler_lab::to_json_with_indent;
use finsler_lab::verify::{run_suite, Scene};

#[derive(Parser)]
#[command(
    name = "finsler-lab",
    about = "Numerical Finsler geometry on the pulled-back bundle",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to a scene file (TOML).
    #[arg(long)]
    scene: PathBuf,
    /// Evaluate a single sample point by index instead of all points.
    #[arg(long)]
    point: Option<usize>,
    /// Indentation width for JSON output (0 = compact).
    #[arg(long, default_value_t = 2)]
    json_indent: usize,
    /// Override a named tolerance, e.g. --tolerance homogeneity=1e-8.
    /// May be repeated.
    #[arg(long, value_parser = parse_tolerance)]
    tolerance: Vec<(String, f64)>,
}

#[derive(Subcommand)]
enum Command {
    /// Ambient tensors (norm, fundamental and Cartan tensors, spray,
    /// nonlinear connection) at scene points.
    Eval(CommonArgs),
    /// Full submanifold package: frames, induced/intrinsic connections,
    /// second fundamental form, shape operator, deformation tensor.
    Induce(CommonArgs),
    /// The induced-versus-intrinsic Hashiguchi comparison block only.
    CompareHashiguchi(CommonArgs),
    /// Run the verification suite and print the report.
    Verify(CommonArgs),
}

fn parse_tolerance(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let value: f64 = value
        .parse()
        .map_err(|e| format!("bad tolerance value in `{s}`: {e}"))?;
    Ok((name.to_string(), value))
}

// ---------------------------------------------------------------------------
// Serializable views
// ---------------------------------------------------------------------------

type Mat = Vec<Vec<f64>>;
type Ten3 = Vec<Vec<Vec<f64>>>;

fn mat(m: &finsler_lab::nalgebra::DMatrix<f64>) -> Mat {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn vec_of(v: &finsler_lab::nalgebra::DVector<f64>) -> Vec<f64> {
    v.iter().cloned().collect()
}

/// Index-order conventions repeated in every output document.
#[derive(Serialize)]
struct Conventions {
    matrices: &'static str,
    cartan: &'static str,
    connection_coefficients: &'static str,
    second_fundamental_form: &'static str,
    shape_operator: &'static str,
    normal_connection: &'static str,
}

impl Conventions {
    fn new() -> Conventions {
        Conventions {
            matrices: "row-major [i][j]; nonlinear connection N is [upper][lower]",
            cartan: "[i][j][k], totally symmetric",
            connection_coefficients:
                "[k][i][j]: output index k, section index i, direction index j",
            second_fundamental_form:
                "[a][alpha][beta]: normal output a, section alpha, direction beta",
            shape_operator:
                "[lambda][a][alpha]: tangential output lambda, normal section a, direction alpha",
            normal_connection: "[b][a][alpha]: normal output b, normal section a, direction alpha",
        }
    }
}

#[derive(Serialize)]
struct AmbientOut {
    point: TangentPoint,
    f: f64,
    g: Mat,
    g_inv: Mat,
    cartan: Ten3,
    spray: Vec<f64>,
    nonlinear: Mat,
    dist_section: Vec<f64>,
}

impl AmbientOut {
    fn new(e: &AmbientEval) -> AmbientOut {
        AmbientOut {
            point: e.point.clone(),
            f: e.f,
            g: mat(&e.g),
            g_inv: mat(&e.g_inv),
            cartan: e.cartan.to_nested(),
            spray: vec_of(&e.spray),
            nonlinear: mat(&e.nonlinear),
            dist_section: vec_of(&e.dist_section),
        }
    }
}

#[derive(Serialize)]
struct EvalDoc {
    scene: String,
    index_conventions: Conventions,
    points: Vec<AmbientOut>,
}

#[derive(Serialize)]
struct FramesOut {
    b: Mat,
    b2: Ten3,
    b0: Mat,
    normal: Mat,
    b_inverse: Mat,
    normal_inverse: Mat,
    normal_curvature_h: Mat,
}

#[derive(Serialize)]
struct ConnectionOut {
    tangent_horizontal: Ten3,
    tangent_vertical: Ten3,
    normal_horizontal: Ten3,
    normal_vertical: Ten3,
    second_fundamental_h: Ten3,
    second_fundamental_v: Ten3,
    shape_h: Ten3,
    shape_v: Ten3,
}

#[derive(Serialize)]
struct ComparisonOut {
    horizontal_diff: f64,
    vertical_diff: f64,
    deformation_norm: f64,
    deformation_relation_residual: f64,
    deformation_relation_scaled_residual: f64,
    exact_relation_residual: f64,
}

#[derive(Serialize)]
struct InducedOut {
    point: SubPoint,
    f: f64,
    g_sub: Mat,
    n_induced: Mat,
    n_intrinsic: Mat,
    deformation: Mat,
    frames: FramesOut,
    connection: ConnectionOut,
    hashiguchi_induced_horizontal: Ten3,
    hashiguchi_induced_vertical: Ten3,
    hashiguchi_intrinsic_horizontal: Ten3,
    hashiguchi_intrinsic_vertical: Ten3,
    comparison: ComparisonOut,
}

impl InducedOut {
    fn new(pkg: &InducedPackage) -> InducedOut {
        InducedOut {
            point: pkg.point.clone(),
            f: pkg.f,
            g_sub: mat(&pkg.g_sub),
            n_induced: mat(&pkg.n_induced),
            n_intrinsic: mat(&pkg.n_intrinsic),
            deformation: mat(&pkg.deformation),
            frames: FramesOut {
                b: mat(&pkg.frames.b),
                b2: pkg.frames.b2.to_nested(),
                b0: mat(&pkg.frames.b0),
                normal: mat(&pkg.frames.nframe),
                b_inverse: mat(&pkg.frames.btilde),
                normal_inverse: mat(&pkg.frames.ntilde),
                normal_curvature_h: mat(&pkg.frames.h),
            },
            connection: ConnectionOut {
                tangent_horizontal: pkg.connection.tangent.horizontal.to_nested(),
                tangent_vertical: pkg.connection.tangent.vertical.to_nested(),
                normal_horizontal: pkg.connection.normal_h.to_nested(),
                normal_vertical: pkg.connection.normal_v.to_nested(),
                second_fundamental_h: pkg.connection.s_h.to_nested(),
                second_fundamental_v: pkg.connection.s_v.to_nested(),
                shape_h: pkg.connection.shape_h.to_nested(),
                shape_v: pkg.connection.shape_v.to_nested(),
            },
            hashiguchi_induced_horizontal: pkg.hash_induced.horizontal.to_nested(),
            hashiguchi_induced_vertical: pkg.hash_induced.vertical.to_nested(),
            hashiguchi_intrinsic_horizontal: pkg.hash_intrinsic.horizontal.to_nested(),
            hashiguchi_intrinsic_vertical: pkg.hash_intrinsic.vertical.to_nested(),
            comparison: comparison_out(pkg),
        }
    }
}

fn comparison_out(pkg: &InducedPackage) -> ComparisonOut {
    ComparisonOut {
        horizontal_diff: pkg.comparison.horizontal_diff,
        vertical_diff: pkg.comparison.vertical_diff,
        deformation_norm: pkg.comparison.deformation_norm,
        deformation_relation_residual: pkg.comparison.deformation_relation_residual,
        deformation_relation_scaled_residual: pkg.comparison.deformation_relation_scaled_residual,
        exact_relation_residual: pkg.comparison.exact_relation_residual,
    }
}

#[derive(Serialize)]
struct InduceDoc {
    scene: String,
    index_conventions: Conventions,
    points: Vec<InducedOut>,
}

#[derive(Serialize)]
struct CompareOut {
    point: SubPoint,
    f: f64,
    deformation: Mat,
    comparison: ComparisonOut,
}

#[derive(Serialize)]
struct CompareDoc {
    scene: String,
    points: Vec<CompareOut>,
}

// ---------------------------------------------------------------------------
// Command implementations
// ---------------------------------------------------------------------------

fn select_points(scene: &Scene, selector: Option<usize>) -> Result<Vec<usize>, Error> {
    match selector {
        None => Ok((0..scene.points.len()).collect()),
        Some(i) if i < scene.points.len() => Ok(vec![i]),
        Some(i) => Err(Error::Scene(format!(
            "point index {i} out of range ({} points)",
            scene.points.len()
        ))),
    }
}

fn load(args: &CommonArgs) -> Result<Scene, Error> {
    let mut scene = load_scene(&args.scene)?;
    for (name, value) in &args.tolerance {
        scene.tolerances.insert(name.clone(), *value);
    }
    Ok(scene)
}

fn cmd_eval(args: &CommonArgs) -> Result<String, Error> {
    let scene = load(args)?;
    let mut points = Vec::new();
    for idx in select_points(&scene, args.point)? {
        let sample = &scene.points[idx];
        let eval = match &scene.immersion {
            None => {
                let p = TangentPoint::new(sample.base.clone(), sample.fiber.clone())?;
                ambient_eval(&scene.metric, &p)?
            }
            Some(imm) => {
                let sp = SubPoint::new(sample.base.clone(), sample.fiber.clone())?;
                finsler_lab::submanifold::frame_package(&scene.metric, imm, &sp)?.ambient
            }
        };
        points.push(AmbientOut::new(&eval));
    }
    Ok(to_json_with_indent(
        &EvalDoc {
            scene: scene.name.clone(),
            index_conventions: Conventions::new(),
            points,
        },
        args.json_indent,
    ))
}

fn with_packages<T>(
    args: &CommonArgs,
    build: impl Fn(&InducedPackage) -> T,
) -> Result<(Scene, Vec<T>), Error> {
    let scene = load(args)?;
    let imm = scene.immersion.as_ref().ok_or_else(|| {
        Error::Scene("this command requires a scene with an [immersion] section".into())
    })?;
    let mut out = Vec::new();
    for idx in select_points(&scene, args.point)? {
        let sample = &scene.points[idx];
        let sp = SubPoint::new(sample.base.clone(), sample.fiber.clone())?;
        let pkg = induced_package(&scene.metric, imm, &sp)?;
        out.push(build(&pkg));
    }
    Ok((scene, out))
}

fn cmd_induce(args: &CommonArgs) -> Result<String, Error> {
    let (scene, points) = with_packages(args, InducedOut::new)?;
    Ok(to_json_with_indent(
        &InduceDoc {
            scene: scene.name.clone(),
            index_conventions: Conventions::new(),
            points,
        },
        args.json_indent,
    ))
}

fn cmd_compare(args: &CommonArgs) -> Result<String, Error> {
    let (scene, points) = with_packages(args, |pkg| CompareOut {
        point: pkg.point.clone(),
        f: pkg.f,
        deformation: mat(&pkg.deformation),
        comparison: comparison_out(pkg),
    })?;
    Ok(to_json_with_indent(
        &CompareDoc {
            scene: scene.name.clone(),
            points,
        },
        args.json_indent,
    ))
}

fn cmd_verify(args: &CommonArgs) -> Result<(String, bool), Error> {
    let scene = load(args)?;
    let report = run_suite(&scene);
    Ok((report.to_json(args.json_indent), report.overall_pass))
}

fn configure_threads() {
    if let Ok(value) = std::env::var("FINSLER_LAB_THREADS") {
        if let Ok(n) = value.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let result: Result<(String, bool), Error> = match &cli.command {
        Command::Eval(args) => cmd_eval(args).map(|s| (s, true)),
        Command::Induce(args) => cmd_induce(args).map(|s| (s, true)),
        Command::CompareHashiguchi(args) => cmd_compare(args).map(|s| (s, true)),
        Command::Verify(args) => cmd_verify(args),
    };
    match result {
        Ok((output, pass)) => {
            println!("{output}");
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
