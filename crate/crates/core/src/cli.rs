//! Command-line front end and demo corpus.
//!
//! Every JSON report carries `"schema": "v1"` and echoes the tolerances it
//! was computed with. Complex numbers are written as `[re, im]`. Exit codes:
//! `0` on success, `1` on input or usage errors, `2` when `--expect-unitary`
//! was given and the certificate came out negative.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::clark::{alpha_to_beta, ClarkOptions, InnerFunction};
use crate::error::{Error, Result};
use crate::geometry::{certify_localization_with, localize, LOCALIZE_TOL_REL};
use crate::levelset::{exceptional_alpha, solve_level_set_with, LevelSet, SolverOptions};
use crate::potential::PotentialContext;
use crate::rkspace::KernelSpace;
use crate::sequences::{
    diameter, Geometry, NodeSetJson, PointJson, WeightedNodeSet, DEFAULT_DEDUP_REL,
};
use crate::transform::{self, UnitarityReport, UNIT_TOL_REL};

pub const SCHEMA: &str = "v1";
/// Environment variable seeding the random demos when `--seed` is absent.
pub const SEED_ENV: &str = "HILBERT_CLARK_SEED";

#[derive(Parser, Debug, Clone)]
#[command(
    name = "hilbert-clark",
    version,
    about = "Unitary weighted discrete Hilbert transforms"
)]
pub struct RunConfig {
    /// Read the node set (or point list) from this JSON file.
    #[arg(long, global = true, conflicts_with = "json")]
    pub input: Option<PathBuf>,
    /// Inline JSON instead of --input.
    #[arg(long, global = true)]
    pub json: Option<String>,
    /// `auto` writes CSV for tables (phi, levelset --scan) and JSON otherwise.
    #[arg(long, global = true, value_enum, default_value_t = Format::Auto)]
    pub format: Format,
    #[command(flatten)]
    pub tolerances: Tolerances,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Auto,
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct Tolerances {
    /// Level-set residual tolerance, relative to 1 + |alpha|.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub level_tol: f64,
    /// Exceptional band around alpha*, relative to 1 + |alpha*|.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub exc_tol: f64,
    /// Unitarity threshold per matrix dimension.
    #[arg(long, global = true, default_value_t = UNIT_TOL_REL)]
    pub unit_tol: f64,
    /// Node distinctness tolerance, relative to max(1, max |gamma|).
    #[arg(long, global = true, default_value_t = DEFAULT_DEDUP_REL)]
    pub dedup_rel: f64,
    /// Absolute localization tolerance; 1e-9 x diameter when absent.
    #[arg(long, global = true)]
    pub localize_tol: Option<f64>,
    /// Relative Gram change accepted between quadrature doublings.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub quad_tol: f64,
    /// Initial quadrature points; 64 N when absent.
    #[arg(long, global = true)]
    pub quad_points: Option<usize>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Validate a node set and print its summary.
    Check,
    /// Evaluate the potential at points or on a grid (CSV by default).
    Phi {
        /// A point `re,im` (or `re`); repeatable.
        #[arg(long, allow_hyphen_values = true)]
        at: Vec<String>,
        /// `a:b:n`: n points from a to b (real parts on the line, angles on
        /// the circle).
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// Line: imaginary part of the grid. Circle: 1 - radius.
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        offset: f64,
    },
    /// Solve phi = alpha, or scan a range of alpha (CSV by default).
    Levelset {
        #[arg(long, allow_hyphen_values = true, conflicts_with = "scan")]
        alpha: Option<f64>,
        /// `a0:a1:steps`.
        #[arg(long, allow_hyphen_values = true)]
        scan: Option<String>,
    },
    /// Build the transform at alpha and certify unitarity.
    Transform {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        /// Include per-row deviations and the adjoint check.
        #[arg(long)]
        report: bool,
        /// Write the scaled matrix as CSV to this path.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        expect_unitary: bool,
    },
    /// Classify a point list as line, circle or neither. With a node set and
    /// --alpha, classifies the union of the nodes and the level set.
    Localize {
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
    },
    /// Reproducing-kernel space operations.
    Rkspace {
        #[command(subcommand)]
        action: RkspaceAction,
    },
    /// Clark points and quadrature Gram diagnostics for a unimodular beta.
    Clark {
        /// `re,im`.
        #[arg(long, allow_hyphen_values = true)]
        beta: String,
    },
    /// Run a prepared instance.
    Demo {
        /// two-point, single-node, lattice, roots-of-unity, prime-example,
        /// random-line, random-circle.
        name: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<String>,
        /// Number of primes in the prime example.
        #[arg(long, default_value_t = 3)]
        terms: usize,
        /// Truncation radius of the prime example.
        #[arg(long, default_value_t = 2.0)]
        radius: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        expect_unitary: bool,
    },
}

#[derive(Subcommand, Debug, Clone)]
pub enum RkspaceAction {
    /// Rebuild f(z) from samples on the level set.
    Reconstruct {
        /// JSON `{"samples": [[re, im], ...], "alpha": a}`, inline or a path.
        #[arg(long)]
        request: String,
        /// Evaluation point `re,im`; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        at: Vec<String>,
    },
}

/// Parses `args` (program name first), runs, and returns the exit code.
/// Reports go to `out`, diagnostics to `err`.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return 1;
            }
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    match run(&config, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

/// Dispatches one command.
pub fn run(config: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    config.tolerances.validate()?;
    let mut text = String::new();
    let code = match &config.command {
        Command::Check => {
            let nodes = config.node_set()?;
            config.json_only("check")?;
            emit(&mut text, &check_report(config, &nodes)?);
            0
        }
        Command::Phi { at, grid, offset } => {
            let nodes = config.node_set()?;
            let ctx = PotentialContext::new(nodes)?;
            let points = phi_points(&ctx, at, grid.as_deref(), *offset)?;
            let rows: Vec<(Complex64, Option<Complex64>)> =
                points.iter().map(|&z| (z, ctx.phi(z).ok())).collect();
            if config.format == Format::Json {
                let list: Vec<Value> = rows
                    .iter()
                    .map(|(z, p)| json!({"z": z, "phi": p}))
                    .collect();
                emit(&mut text, &json!({"schema": SCHEMA, "values": list}));
            } else {
                text.push_str("z_re,z_im,phi_re,phi_im\n");
                for (z, p) in rows {
                    let p = p.unwrap_or(Complex64::new(f64::NAN, f64::NAN));
                    let _ = writeln!(text, "{},{},{},{}", z.re, z.im, p.re, p.im);
                }
            }
            0
        }
        Command::Levelset { alpha, scan } => {
            let nodes = config.node_set()?;
            let ctx = PotentialContext::new(nodes)?;
            match (alpha, scan) {
                (Some(a), None) => {
                    config.json_only("levelset --alpha")?;
                    let ls = solve_level_set_with(&ctx, *a, &config.solver())?;
                    let mut report = level_set_json(&ctx, &ls)?;
                    report["schema"] = json!(SCHEMA);
                    report["tolerances"] = config.tolerance_json();
                    emit(&mut text, &report);
                }
                (None, Some(spec)) => {
                    let (a0, a1, steps) = parse_range(spec, "scan")?;
                    let n = ctx.nodes().len();
                    let rows = linspace(a0, a1, steps)
                        .into_iter()
                        .map(|a| Ok((a, solve_level_set_with(&ctx, a, &config.solver())?)))
                        .collect::<Result<Vec<_>>>()?;
                    if config.format == Format::Json {
                        let list = rows
                            .iter()
                            .map(|(_, ls)| level_set_json(&ctx, ls))
                            .collect::<Result<Vec<_>>>()?;
                        emit(
                            &mut text,
                            &json!({"schema": SCHEMA, "scan": list, "tolerances": config.tolerance_json()}),
                        );
                    } else {
                        text.push_str("alpha");
                        for j in 1..=n {
                            let _ = write!(text, ",lambda_{j}");
                        }
                        text.push('\n');
                        for (a, ls) in &rows {
                            let _ = write!(text, "{a}");
                            let coords = scalar_coords(ls);
                            for j in 0..n {
                                match coords.get(j) {
                                    Some(x) => {
                                        let _ = write!(text, ",{x}");
                                    }
                                    None => text.push(','),
                                }
                            }
                            text.push('\n');
                        }
                    }
                }
                _ => {
                    return Err(Error::Input(
                        "levelset needs exactly one of --alpha or --scan".into(),
                    ))
                }
            }
            0
        }
        Command::Transform {
            alpha,
            report,
            matrix,
            expect_unitary,
        } => {
            let nodes = config.node_set()?;
            config.json_only("transform")?;
            let ctx = PotentialContext::new(nodes.clone())?;
            let ls = solve_level_set_with(&ctx, *alpha, &config.solver())?;
            let t = transform::build(&nodes, &ls)?;
            let rep = t.unitarity_report_with(config.tolerances.unit_tol);
            let mut body = json!({
                "schema": SCHEMA,
                "alpha": alpha,
                "exceptional": ls.exceptional(),
                "unitarity": report_json(&rep),
                "tolerances": config.tolerance_json(),
            });
            if *report {
                body["row_deviations"] = json!(t.row_deviations());
                if nodes.geometry() == Geometry::Line {
                    body["adjoint_identity_residual"] =
                        json!(transform::adjoint_identity_check(&nodes, &ls)?);
                }
            }
            if let Some(path) = matrix {
                let file = std::fs::File::create(path)
                    .map_err(|e| Error::Input(format!("--matrix {}: {e}", path.display())))?;
                t.write_csv(std::io::BufWriter::new(file))
                    .map_err(|e| Error::Input(format!("--matrix {}: {e}", path.display())))?;
                body["matrix"] = json!(path.display().to_string());
            }
            emit(&mut text, &body);
            if *expect_unitary && !rep.is_unitary() {
                2
            } else {
                0
            }
        }
        Command::Localize { alpha } => {
            config.json_only("localize")?;
            let raw = config.raw_input()?;
            let value: Value = serde_json::from_str(&raw)?;
            let (points, tol) = match (&value, alpha) {
                (Value::Object(map), Some(a)) if !map.contains_key("points") => {
                    let nodes = parse_nodes(&raw, config.tolerances.dedup_rel)?;
                    let ctx = PotentialContext::new(nodes.clone())?;
                    let ls = solve_level_set_with(&ctx, *a, &config.solver())?;
                    let pts: Vec<Complex64> =
                        nodes.gamma().iter().chain(ls.lambdas()).copied().collect();
                    let tol = config.localize_tol(&pts);
                    let loc = certify_localization_with(&nodes, &ls, tol)?;
                    emit(
                        &mut text,
                        &json!({"schema": SCHEMA, "alpha": a, "classification": loc, "tolerance": tol}),
                    );
                    out.write_all(text.as_bytes()).map_err(io_error)?;
                    return Ok(0);
                }
                _ => {
                    let pts = parse_point_list(value)?;
                    let tol = config.localize_tol(&pts);
                    (pts, tol)
                }
            };
            let loc = localize(&points, tol)?;
            emit(
                &mut text,
                &json!({"schema": SCHEMA, "classification": loc, "tolerance": tol}),
            );
            0
        }
        Command::Rkspace {
            action: RkspaceAction::Reconstruct { request, at },
        } => {
            config.json_only("rkspace reconstruct")?;
            let nodes = config.node_set()?;
            let req = parse_request(request)?;
            let ctx = PotentialContext::new(nodes.clone())?;
            let ls = solve_level_set_with(&ctx, req.alpha, &config.solver())?;
            let space = KernelSpace::new(nodes);
            let samples: Vec<Complex64> = req.samples.iter().map(PointJson::to_complex).collect();
            let points = at
                .iter()
                .map(|s| parse_complex(s, "at"))
                .collect::<Result<Vec<_>>>()?;
            let certificate = space.basis_certificate(&ls)?;
            let tol = config.tolerances.unit_tol * ls.len().max(space.dim()) as f64;
            if !(certificate <= tol) {
                return Err(Error::BasisNotCertified {
                    deviation: certificate,
                    tol,
                });
            }
            let basis = space.sampling_basis(&ls)?;
            let values = points
                .iter()
                .map(|&z| Ok(json!({"z": z, "value": basis.reconstruct(&samples, z)?})))
                .collect::<Result<Vec<_>>>()?;
            emit(
                &mut text,
                &json!({
                    "schema": SCHEMA,
                    "alpha": req.alpha,
                    "certificate": certificate,
                    "certificate_tolerance": tol,
                    "values": values,
                    "tolerances": config.tolerance_json(),
                }),
            );
            0
        }
        Command::Clark { beta } => {
            config.json_only("clark")?;
            let nodes = config.node_set()?;
            let beta = parse_complex(beta, "beta")?;
            emit(&mut text, &clark_json(config, nodes, beta)?);
            0
        }
        Command::Demo {
            name,
            n,
            alpha,
            beta,
            terms,
            radius,
            seed,
            expect_unitary,
        } => {
            config.json_only("demo")?;
            let params = DemoParams {
                n: *n,
                terms: *terms,
                radius: *radius,
                seed: match seed {
                    Some(s) => *s,
                    None => seed_from_env()?,
                },
            };
            let inst = demo(name, &params)?;
            let beta = beta
                .as_deref()
                .map(|b| parse_complex(b, "beta"))
                .transpose()?;
            let (report, unitary) = run_demo(config, &inst, *alpha, beta)?;
            emit(&mut text, &report);
            if *expect_unitary && unitary == Some(false) {
                2
            } else {
                0
            }
        }
    };
    out.write_all(text.as_bytes()).map_err(io_error)?;
    Ok(code)
}

fn io_error(e: std::io::Error) -> Error {
    Error::Input(format!("write failed: {e}"))
}

fn emit(text: &mut String, value: &Value) {
    // Value serialization cannot fail: keys are strings and floats map to
    // numbers or null.
    text.push_str(&serde_json::to_string_pretty(value).unwrap_or_default());
    text.push('\n');
}

impl Tolerances {
    fn validate(&self) -> Result<()> {
        let checks = [
            ("--level-tol", self.level_tol),
            ("--exc-tol", self.exc_tol),
            ("--unit-tol", self.unit_tol),
            ("--dedup-rel", self.dedup_rel),
            ("--quad-tol", self.quad_tol),
        ];
        for (name, value) in checks {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Input(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if let Some(t) = self.localize_tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Input(format!(
                    "--localize-tol must be positive, got {t}"
                )));
            }
        }
        if self.quad_points == Some(0) {
            return Err(Error::Input("--quad-points must be positive".into()));
        }
        Ok(())
    }
}

impl RunConfig {
    fn solver(&self) -> SolverOptions {
        SolverOptions {
            level_tol: self.tolerances.level_tol,
            exc_tol_rel: self.tolerances.exc_tol,
            ..SolverOptions::default()
        }
    }

    fn clark_options(&self) -> ClarkOptions {
        ClarkOptions {
            initial_points: self.tolerances.quad_points,
            change_tol: self.tolerances.quad_tol,
            solver: self.solver(),
            ..ClarkOptions::default()
        }
    }

    fn localize_tol(&self, points: &[Complex64]) -> f64 {
        self.tolerances
            .localize_tol
            .unwrap_or_else(|| LOCALIZE_TOL_REL * diameter(points))
    }

    fn tolerance_json(&self) -> Value {
        let t = &self.tolerances;
        json!({
            "level_tol": t.level_tol,
            "exc_tol": t.exc_tol,
            "unit_tol": t.unit_tol,
            "dedup_rel": t.dedup_rel,
            "quad_tol": t.quad_tol,
        })
    }

    fn json_only(&self, what: &str) -> Result<()> {
        if self.format == Format::Csv {
            return Err(Error::Input(format!(
                "--format csv is not available for {what}"
            )));
        }
        Ok(())
    }

    fn raw_input(&self) -> Result<String> {
        match (&self.input, &self.json) {
            (Some(path), None) => std::fs::read_to_string(path)
                .map_err(|e| Error::Input(format!("--input {}: {e}", path.display()))),
            (None, Some(text)) => Ok(text.clone()),
            (None, None) => Err(Error::Input("missing --input or --json".into())),
            (Some(_), Some(_)) => Err(Error::Input("give only one of --input and --json".into())),
        }
    }

    fn node_set(&self) -> Result<WeightedNodeSet> {
        parse_nodes(&self.raw_input()?, self.tolerances.dedup_rel)
    }
}

fn parse_nodes(text: &str, dedup_rel: f64) -> Result<WeightedNodeSet> {
    let raw: NodeSetJson = serde_json::from_str(text)?;
    raw.into_node_set_with(dedup_rel)
}

fn parse_point_list(value: Value) -> Result<Vec<Complex64>> {
    let list = match value {
        Value::Object(mut map) => map
            .remove("points")
            .ok_or_else(|| Error::Input("expected a point list or {\"points\": [...]}".into()))?,
        other => other,
    };
    let pts: Vec<PointJson> = serde_json::from_value(list)?;
    Ok(pts.iter().map(PointJson::to_complex).collect())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReconstructRequest {
    samples: Vec<PointJson>,
    alpha: f64,
}

fn parse_request(arg: &str) -> Result<ReconstructRequest> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| Error::Input(format!("--request {arg}: {e}")))?
    };
    Ok(serde_json::from_str(&text)?)
}

/// `re,im` or `re`.
pub fn parse_complex(s: &str, field: &str) -> Result<Complex64> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| {
        p.parse::<f64>()
            .map_err(|_| Error::Input(format!("--{field}: cannot parse '{p}' as a number")))
    };
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(Error::Input(format!(
            "--{field}: expected 're,im', got '{s}'"
        ))),
    }
}

/// `a:b:n`.
fn parse_range(s: &str, field: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Input(format!("--{field}: expected 'a:b:n', got '{s}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    Ok((a, b, n))
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect()
}

fn phi_points(
    ctx: &PotentialContext,
    at: &[String],
    grid: Option<&str>,
    offset: f64,
) -> Result<Vec<Complex64>> {
    let mut pts = at
        .iter()
        .map(|s| parse_complex(s, "at"))
        .collect::<Result<Vec<_>>>()?;
    if let Some(spec) = grid {
        let (a, b, n) = parse_range(spec, "grid")?;
        for t in linspace(a, b, n) {
            pts.push(if ctx.is_line() {
                Complex64::new(t, offset)
            } else {
                Complex64::from_polar(1.0 - offset, t)
            });
        }
    }
    if pts.is_empty() {
        return Err(Error::Input("phi needs --at or --grid".into()));
    }
    Ok(pts)
}

/// Real parts on the line, angles on the circle.
fn scalar_coords(ls: &LevelSet) -> Vec<f64> {
    match ls.geometry() {
        Geometry::Circle => ls.lambdas().iter().map(|l| l.arg()).collect(),
        _ => ls.lambdas().iter().map(|l| l.re).collect(),
    }
}

fn level_set_json(ctx: &PotentialContext, ls: &LevelSet) -> Result<Value> {
    let residual = (0..ls.len())
        .map(|j| ls.residual(ctx, j).map(f64::abs))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let mut v = json!({
        "geometry": ls.geometry(),
        "alpha": ls.alpha(),
        "exceptional": ls.exceptional(),
        "exceptional_alpha": exceptional_alpha(ctx),
        "points": ls.lambdas(),
        "weights": ls.weights(),
        "max_residual": residual,
    });
    if ls.geometry() == Geometry::Circle {
        v["angles"] = json!(scalar_coords(ls));
    }
    Ok(v)
}

fn report_json(rep: &UnitarityReport) -> Value {
    json!({
        "verdict": rep.verdict,
        "col_gram_dev": rep.col_gram_dev,
        "row_gram_dev": rep.row_gram_dev,
        "dims": [rep.dims.0, rep.dims.1],
        "tolerance": rep.tolerance,
    })
}

fn check_report(config: &RunConfig, nodes: &WeightedNodeSet) -> Result<Value> {
    let exc = match nodes.geometry() {
        Geometry::Line => exceptional_alpha(&PotentialContext::new(nodes.clone())?),
        _ => None,
    };
    Ok(json!({
        "schema": SCHEMA,
        "geometry": nodes.geometry(),
        "n": nodes.len(),
        "total_weight": nodes.total_weight(),
        "admissibility_sum": nodes.admissibility_sum(),
        "diameter": nodes.diameter(),
        "dedup_tol": nodes.dedup_tol(),
        "exceptional_alpha": exc,
        "tolerances": config.tolerance_json(),
    }))
}

fn clark_json(config: &RunConfig, nodes: WeightedNodeSet, beta: Complex64) -> Result<Value> {
    let h = InnerFunction::new(PotentialContext::new(nodes.clone())?)?;
    let cb = h.clark_basis_with(beta, &config.clark_options())?;
    let rep =
        transform::build(&nodes, &cb.level_set)?.unitarity_report_with(config.tolerances.unit_tol);
    Ok(json!({
        "schema": SCHEMA,
        "beta": beta,
        "alpha": cb.alpha,
        "points": cb.points(),
        "angles": scalar_coords(&cb.level_set),
        "weights": cb.level_set.weights(),
        "kernel_norms_sqr": cb.closed_diagonal,
        "quadrature": {
            "points": cb.quadrature_points,
            "last_change": cb.last_change,
            "max_off_diagonal": cb.max_off_diagonal(),
            "diagonal_rel_error": cb.diagonal_rel_error(),
            "l2_agreement": cb.l2_agreement(),
            "diagonal": cb.is_diagonal(),
        },
        "unitarity": report_json(&rep),
        "tolerances": {
            "quad_tol": config.tolerances.quad_tol,
            "diagonal_tol": cb.diagonal_tol,
            "unit_tol": config.tolerances.unit_tol,
            "level_tol": config.tolerances.level_tol,
        },
    }))
}

fn seed_from_env() -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Error::Input(format!("{SEED_ENV}: cannot parse '{s}' as an integer"))),
        Err(_) => Ok(0),
    }
}

// ---------------------------------------------------------------------------
// Demo corpus

#[derive(Clone, Debug)]
pub struct DemoParams {
    pub n: Option<usize>,
    pub terms: usize,
    pub radius: f64,
    pub seed: u64,
}

impl Default for DemoParams {
    fn default() -> Self {
        DemoParams {
            n: None,
            terms: 3,
            radius: 2.0,
            seed: 0,
        }
    }
}

/// Extra data some demos carry besides the node set.
#[derive(Clone, Debug)]
pub enum DemoExtra {
    None,
    /// Fixed targets `ℤ + ½` with weight `1/π²` against the truncated lattice.
    Lattice {
        targets: Vec<f64>,
        weight: f64,
    },
    /// Per-prime summary of the truncated prime example.
    Primes(Vec<PrimeTerm>),
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct PrimeTerm {
    pub prime: u64,
    pub nodes: usize,
    pub weight: f64,
    /// `Σ v_n/(1 + γ_n²)` over all terms up to this one.
    pub admissibility_partial_sum: f64,
}

#[derive(Clone, Debug)]
pub struct DemoInstance {
    pub name: &'static str,
    pub nodes: WeightedNodeSet,
    pub alpha: Option<f64>,
    pub beta: Option<Complex64>,
    pub extra: DemoExtra,
}

pub const DEMO_NAMES: [&str; 7] = [
    "two-point",
    "single-node",
    "lattice",
    "roots-of-unity",
    "prime-example",
    "random-line",
    "random-circle",
];

pub fn demo(name: &str, p: &DemoParams) -> Result<DemoInstance> {
    let plain = |name, nodes, alpha| DemoInstance {
        name,
        nodes,
        alpha: Some(alpha),
        beta: None,
        extra: DemoExtra::None,
    };
    Ok(match name {
        "two-point" => plain(
            "two-point",
            WeightedNodeSet::line(&[-1.0, 1.0], vec![1.0, 1.0])?,
            1.0,
        ),
        "single-node" => plain(
            "single-node",
            WeightedNodeSet::line(&[0.0], vec![1.0])?,
            1.0,
        ),
        "lattice" => {
            let n = p.n.unwrap_or(64);
            let (nodes, targets) = lattice(n)?;
            DemoInstance {
                name: "lattice",
                nodes,
                alpha: Some(0.0),
                beta: None,
                extra: DemoExtra::Lattice {
                    targets,
                    weight: 1.0 / (std::f64::consts::PI * std::f64::consts::PI),
                },
            }
        }
        "roots-of-unity" => DemoInstance {
            name: "roots-of-unity",
            nodes: roots_of_unity(p.n.unwrap_or(3))?,
            alpha: Some(0.0),
            beta: Some(Complex64::new(-1.0, 0.0)),
            extra: DemoExtra::None,
        },
        "prime-example" => {
            let (nodes, terms) = prime_example(p.terms, p.radius)?;
            DemoInstance {
                name: "prime-example",
                nodes,
                alpha: None,
                beta: None,
                extra: DemoExtra::Primes(terms),
            }
        }
        "random-line" => {
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
            let n = p.n.unwrap_or_else(|| rng.gen_range(2..=64));
            let nodes = random_line_instance(&mut rng, n)?;
            let alpha = random_alpha(&mut rng, &nodes)?;
            plain("random-line", nodes, alpha)
        }
        "random-circle" => {
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
            let n = p.n.unwrap_or_else(|| rng.gen_range(2..=64));
            let nodes = random_circle_instance(&mut rng, n)?;
            let alpha = rng.gen_range(-10.0..10.0);
            DemoInstance {
                name: "random-circle",
                nodes,
                alpha: Some(alpha),
                beta: Some(alpha_to_beta(alpha)),
                extra: DemoExtra::None,
            }
        }
        other => return Err(Error::UnknownDemo(other.to_string())),
    })
}

/// `Γ = {−N, …, N}` with unit weights, and the targets `k + ½` for
/// `k = −N, …, N − 1` (the half-integers inside the hull).
pub fn lattice(n: usize) -> Result<(WeightedNodeSet, Vec<f64>)> {
    let n = n as i64;
    let pts: Vec<f64> = (-n..=n).map(|k| k as f64).collect();
    let nodes = WeightedNodeSet::line(&pts, vec![1.0; pts.len()])?;
    let targets = (-n..n).map(|k| k as f64 + 0.5).collect();
    Ok((nodes, targets))
}

/// The `N`-th roots of unity with weights `2/N`, for which `I(z) = z^N`.
pub fn roots_of_unity(n: usize) -> Result<WeightedNodeSet> {
    if n == 0 {
        return Err(Error::Input("--n must be at least 1".into()));
    }
    let angles: Vec<f64> = (0..n)
        .map(|k| 2.0 * std::f64::consts::PI * k as f64 / n as f64)
        .collect();
    WeightedNodeSet::circle_from_angles(&angles, vec![2.0 / n as f64; n])
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Primes `p_l` = the smallest prime `≥ 4^l`, `l = 1..terms`, so that
/// `Σ p_l^{−1/2} ≤ Σ 2^{−l}` converges. Nodes are the non-integer points of
/// `p_l^{−1} ℤ` within `|x| ≤ radius`, each with weight `p_l^{−3/2}`.
pub fn prime_example(terms: usize, radius: f64) -> Result<(WeightedNodeSet, Vec<PrimeTerm>)> {
    if terms == 0 || terms > 8 {
        return Err(Error::Input(format!(
            "--terms must be in 1..=8, got {terms}"
        )));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Input(format!(
            "--radius must be positive, got {radius}"
        )));
    }
    let mut pts = Vec::new();
    let mut weights = Vec::new();
    let mut summary = Vec::new();
    let mut partial = 0.0;
    for l in 1..=terms as u32 {
        let mut p = 4u64.pow(l);
        while !is_prime(p) {
            p += 1;
        }
        let weight = (p as f64).powf(-1.5);
        let kmax = (radius * p as f64).floor() as i64;
        let mut count = 0;
        for k in -kmax..=kmax {
            if k % p as i64 == 0 {
                continue;
            }
            let x = k as f64 / p as f64;
            pts.push(x);
            weights.push(weight);
            partial += weight / (1.0 + x * x);
            count += 1;
        }
        summary.push(PrimeTerm {
            prime: p,
            nodes: count,
            weight,
            admissibility_partial_sum: partial,
        });
    }
    Ok((WeightedNodeSet::line(&pts, weights)?, summary))
}

/// `n` nodes uniform in `[−10, 10]` with weights uniform in `(0, 5]`,
/// redrawn until distinct.
pub fn random_line_instance<R: Rng>(rng: &mut R, n: usize) -> Result<WeightedNodeSet> {
    loop {
        let pts: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..=10.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| 5.0 - rng.gen_range(0.0..5.0)).collect();
        match WeightedNodeSet::line(&pts, v) {
            Err(Error::DuplicateNode { .. }) => continue,
            other => return other,
        }
    }
}

/// `n` uniform angles with weights uniform in `(0, 5]`.
pub fn random_circle_instance<R: Rng>(rng: &mut R, n: usize) -> Result<WeightedNodeSet> {
    loop {
        let t: Vec<f64> = (0..n)
            .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
            .collect();
        let v: Vec<f64> = (0..n).map(|_| 5.0 - rng.gen_range(0.0..5.0)).collect();
        match WeightedNodeSet::circle_from_angles(&t, v) {
            Err(Error::DuplicateNode { .. }) => continue,
            other => return other,
        }
    }
}

/// Uniform in `[−10, 10]`, at least `1e-3` away from the exceptional value.
pub fn random_alpha<R: Rng>(rng: &mut R, nodes: &WeightedNodeSet) -> Result<f64> {
    let ctx = PotentialContext::new(nodes.clone())?;
    let star = exceptional_alpha(&ctx);
    loop {
        let a = rng.gen_range(-10.0..10.0);
        if star.is_none_or(|s| (a - s).abs() >= 1e-3) {
            return Ok(a);
        }
    }
}

/// Runs a demo and returns its report and, where it applies, whether the
/// transform certified as unitary.
pub fn run_demo(
    config: &RunConfig,
    inst: &DemoInstance,
    alpha: Option<f64>,
    beta: Option<Complex64>,
) -> Result<(Value, Option<bool>)> {
    let nodes = &inst.nodes;
    let mut report = json!({
        "schema": SCHEMA,
        "demo": inst.name,
        "suggested": {"alpha": inst.alpha, "beta": inst.beta},
        "tolerances": config.tolerance_json(),
    });
    if let DemoExtra::Primes(terms) = &inst.extra {
        report["n"] = json!(nodes.len());
        report["terms"] = json!(terms);
        report["note"] = json!("finite truncation of an infinite construction; partial sums only");
        return Ok((report, None));
    }
    report["nodes"] = json!(nodes.to_json());
    let ctx = PotentialContext::new(nodes.clone())?;

    if let Some(b) = beta.or(if alpha.is_none() { inst.beta } else { None }) {
        let mut c = clark_json(config, nodes.clone(), b)?;
        let unitary = c["unitarity"]["verdict"] == json!("Unitary");
        if inst.name == "roots-of-unity" {
            report["inner_function_max_error"] = json!(roots_of_unity_error(&ctx)?);
        }
        c.as_object_mut().map(|m| m.remove("schema"));
        report["clark"] = c;
        return Ok((report, Some(unitary)));
    }

    let alpha = alpha.or(inst.alpha).unwrap_or(0.0);
    let ls = solve_level_set_with(&ctx, alpha, &config.solver())?;
    let rep = transform::build(nodes, &ls)?.unitarity_report_with(config.tolerances.unit_tol);
    report["alpha"] = json!(alpha);
    report["level_set"] = level_set_json(&ctx, &ls)?;
    report["unitarity"] = report_json(&rep);

    if let DemoExtra::Lattice { targets, weight } = &inst.extra {
        let lambdas: Vec<Complex64> = targets.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let fixed = LevelSet::from_points(nodes, 0.0, lambdas, Some(vec![*weight; targets.len()]))?;
        let t = transform::build(nodes, &fixed)?;
        let norms = t.row_norm_deviations();
        let rows = t.row_deviations();
        let half = (nodes.len() / 2) as f64 / 2.0;
        let central = |d: &[f64]| {
            targets
                .iter()
                .zip(d)
                .filter(|(x, _)| x.abs() <= half)
                .map(|(_, d)| *d)
                .fold(0.0, f64::max)
        };
        report["half_integer_targets"] = json!({
            "count": targets.len(),
            "weight": weight,
            "central_window": half,
            "worst_row_norm_deviation": norms.iter().copied().fold(0.0, f64::max),
            "central_worst_row_norm_deviation": central(&norms),
            "worst_row_deviation": rows.iter().copied().fold(0.0, f64::max),
            "central_worst_row_deviation": central(&rows),
            "unitarity": report_json(&t.unitarity_report_with(config.tolerances.unit_tol)),
        });
    }
    Ok((report, Some(rep.is_unitary())))
}

/// `max |I(z) − z^N|` over 1000 circle samples `θ = 2π(k + ½)/1000`.
pub fn roots_of_unity_error(ctx: &PotentialContext) -> Result<f64> {
    let h = InnerFunction::new(ctx.clone())?;
    let n = ctx.nodes().len() as u32;
    let mut worst = 0.0_f64;
    for k in 0..1000 {
        let z = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / 1000.0);
        worst = worst.max((h.value(z)? - z.powu(n)).norm());
    }
    Ok(worst)
}
