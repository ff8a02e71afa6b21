use serde_json::{json, Value};
use wirtinger_core::expr::{parse_expression, to_graph};
use wirtinger_core::forward::jvp;
use wirtinger_core::graph::{quadratic_form, Graph};
use wirtinger_core::optimize::{gradient_descent, OptimizerConfig, StopReason};
use wirtinger_core::oracle::{
    holomorphicity_check, latent_jacobian_fd, latent_jvp_oracle, latent_vjp_oracle,
};
use wirtinger_core::reverse::{grad, record, vjp_on_tape};
use wirtinger_core::tensor::{
    format_complex, parse_complex, relative_error, ComplexScalar, ComplexTensor, Convention,
};
use wirtinger_core::{builtin_registry, Error};

use crate::matrix::{parse_vector, read_square_matrix, MatrixError};
use crate::report::{complex_json, tensor_json, Report};
use crate::{Cli, Command, Point};

/// Gradient of ½z² at 1+i as reported by reference frameworks.
pub const REFERENCE_ROWS: &[(&str, Convention, (f64, f64))] = &[
    ("JAX", Convention::Minus, (1.0, 1.0)),
    ("PyTorch", Convention::Plus, (1.0, -1.0)),
    ("TensorFlow", Convention::Plus, (1.0, -1.0)),
];

#[derive(Debug)]
pub enum CliError {
    /// Engine error; `source` is the expression text when spans refer to it.
    Engine {
        command: &'static str,
        error: Error,
        source: Option<String>,
    },
    Matrix {
        path: String,
        error: MatrixError,
    },
    Io(String),
}

impl CliError {
    pub fn is_usage(&self) -> bool {
        match self {
            CliError::Engine { error, .. } => error.is_usage(),
            CliError::Matrix { .. } | CliError::Io(_) => true,
        }
    }

    pub fn render(&self) -> String {
        match self {
            CliError::Engine {
                error: error @ Error::Syntax { span, .. },
                source: Some(text),
                ..
            } => {
                let width = (span.end - span.start).max(1);
                let pad: String = text[..span.start.min(text.len())]
                    .chars()
                    .map(|_| ' ')
                    .collect();
                format!("error: {error}\n  {text}\n  {pad}{}", "^".repeat(width))
            }
            CliError::Engine { error, .. } => format!("error: {error}"),
            CliError::Matrix { path, error } => format!("error: {path}: {error}"),
            CliError::Io(msg) => format!("error: {msg}"),
        }
    }

    pub fn to_json(&self) -> Value {
        let command = match self {
            CliError::Engine { command, .. } => *command,
            CliError::Matrix { .. } | CliError::Io(_) => "quadform",
        };
        let mut diag = serde_json::Map::new();
        diag.insert(
            "error".into(),
            Value::from(
                self.render()
                    .trim_start_matches("error: ")
                    .lines()
                    .next()
                    .unwrap_or(""),
            ),
        );
        diag.insert(
            "exit_code".into(),
            Value::from(if self.is_usage() { 1 } else { 2 }),
        );
        match self {
            CliError::Engine {
                error: Error::Syntax { span, .. },
                ..
            } => {
                diag.insert("span".into(), json!([span.start, span.end]));
            }
            CliError::Matrix { error, .. } => {
                diag.insert("line".into(), json!(error.line));
            }
            _ => {}
        }
        json!({
            "command": command,
            "inputs": {},
            "result": null,
            "diagnostics": diag,
        })
    }
}

pub struct Outcome {
    pub report: Report,
    pub exit_code: u8,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Self {
            report,
            exit_code: 0,
        }
    }
}

struct Ctx<'a> {
    command: &'static str,
    variable: &'a str,
}

impl Ctx<'_> {
    fn err(&self, error: Error) -> CliError {
        CliError::Engine {
            command: self.command,
            error,
            source: None,
        }
    }

    fn compile(&self, text: &str) -> Result<Graph, CliError> {
        let with_source = |error| CliError::Engine {
            command: self.command,
            error,
            source: Some(text.to_string()),
        };
        let ast = parse_expression(text, self.variable).map_err(with_source)?;
        to_graph(&ast, &builtin_registry()).map_err(with_source)
    }

    fn literal(&self, text: &str) -> Result<ComplexScalar, CliError> {
        parse_complex(text).map_err(|e| self.err(e))
    }

    /// `--at` accepts `name=LITERAL` or a bare literal.
    fn point(&self, text: &str) -> Result<ComplexScalar, CliError> {
        let literal = match text.split_once('=') {
            Some((name, value)) => {
                if name.trim() != self.variable {
                    return Err(self.err(Error::InvalidArgument(format!(
                        "--at names `{}` but the variable is `{}`",
                        name.trim(),
                        self.variable
                    ))));
                }
                value
            }
            None => text,
        };
        self.literal(literal)
    }
}

fn scalar(z: ComplexScalar) -> ComplexTensor {
    ComplexTensor::scalar(z)
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let variable = cli.variable.as_str();
    match &cli.command {
        Command::Eval(p) => eval(
            &Ctx {
                command: "eval",
                variable,
            },
            p,
        ),
        Command::Jvp { point, tangent } => cmd_jvp(
            &Ctx {
                command: "jvp",
                variable,
            },
            point,
            tangent,
        ),
        Command::Vjp {
            point,
            cotangent,
            convention,
        } => cmd_vjp(
            &Ctx {
                command: "vjp",
                variable,
            },
            point,
            Some(cotangent),
            (*convention).into(),
        ),
        Command::Grad { point, convention } => cmd_vjp(
            &Ctx {
                command: "grad",
                variable,
            },
            point,
            None,
            (*convention).into(),
        ),
        Command::ConventionReport => convention_report(&Ctx {
            command: "convention-report",
            variable: "z",
        }),
        Command::Check { point, h, tol } => check(
            &Ctx {
                command: "check",
                variable,
            },
            point,
            *h,
            *tol,
        ),
        Command::HoloCheck { point, tol, h } => holo_check(
            &Ctx {
                command: "holo-check",
                variable,
            },
            point,
            *tol,
            *h,
        ),
        Command::Quadform {
            matrix,
            at,
            tangent,
            cotangent,
            convention,
        } => quadform(
            &Ctx {
                command: "quadform",
                variable,
            },
            matrix,
            at,
            tangent.as_deref(),
            cotangent.as_deref(),
            (*convention).into(),
        ),
        Command::Optimize {
            expr,
            init,
            lr,
            steps,
            tol,
            imag_tol,
        } => optimize(
            &Ctx {
                command: "optimize",
                variable,
            },
            expr,
            init,
            OptimizerConfig {
                learning_rate: *lr,
                max_steps: *steps,
                grad_tol: *tol,
                imag_tol: *imag_tol,
                convention: Convention::Plus,
            },
        ),
    }
}

fn eval(ctx: &Ctx, p: &Point) -> Result<Outcome, CliError> {
    let graph = ctx.compile(&p.expr)?;
    let z = ctx.point(&p.at)?;
    let value = graph.eval(&scalar(z)).map_err(|e| ctx.err(e))?;
    let mut r = Report::new("eval");
    r.input("expression", p.expr.as_str())
        .input("at", complex_json(z));
    r.result = json!({ "value": tensor_json(&value) });
    r.line(format_complex(value.data()[0]));
    Ok(r.into())
}

fn cmd_jvp(ctx: &Ctx, p: &Point, tangent: &str) -> Result<Outcome, CliError> {
    let graph = ctx.compile(&p.expr)?;
    let z = ctx.point(&p.at)?;
    let t = ctx.literal(tangent)?;
    let (value, out) = jvp(&graph, &scalar(z), &scalar(t)).map_err(|e| ctx.err(e))?;
    let mut r = Report::new("jvp");
    r.input("expression", p.expr.as_str())
        .input("at", complex_json(z))
        .input("tangent", complex_json(t));
    r.result = json!({ "value": tensor_json(&value), "tangent": tensor_json(&out) });
    r.labelled("value", &value).labelled("tangent", &out);
    Ok(r.into())
}

/// `vjp` with an explicit cotangent, or `grad` when `cotangent` is `None`.
fn cmd_vjp(
    ctx: &Ctx,
    p: &Point,
    cotangent: Option<&String>,
    conv: Convention,
) -> Result<Outcome, CliError> {
    let graph = ctx.compile(&p.expr)?;
    let z = ctx.point(&p.at)?;
    let seed = match cotangent {
        Some(text) => ctx.literal(text)?,
        None => ComplexScalar::new(1.0, 0.0),
    };
    let (value, out) = match cotangent {
        Some(_) => {
            let (value, tape) = record(&graph, &scalar(z)).map_err(|e| ctx.err(e))?;
            let out = vjp_on_tape(&tape, &scalar(seed), conv).map_err(|e| ctx.err(e))?;
            (value, out)
        }
        None => {
            let value = graph.eval(&scalar(z)).map_err(|e| ctx.err(e))?;
            (
                value,
                grad(&graph, &scalar(z), conv).map_err(|e| ctx.err(e))?,
            )
        }
    };
    let label = if cotangent.is_some() {
        "vjp"
    } else {
        "gradient"
    };
    let mut r = Report::new(ctx.command);
    r.input("expression", p.expr.as_str())
        .input("at", complex_json(z));
    if cotangent.is_some() {
        r.input("cotangent", complex_json(seed));
    }
    r.result = json!({ "value": tensor_json(&value), label: tensor_json(&out) });
    r.labelled("value", &value).labelled(label, &out);
    r.with_convention(conv);
    Ok(r.into())
}

/// Gradient of ½z² at 1+i under both conventions.
pub fn probe_gradients() -> wirtinger_core::Result<(ComplexScalar, ComplexScalar)> {
    let graph = wirtinger_core::compile("0.5*z^2", "z", &builtin_registry())?;
    let z = scalar(ComplexScalar::new(1.0, 1.0));
    let plus = grad(&graph, &z, Convention::Plus)?.data()[0];
    let minus = grad(&graph, &z, Convention::Minus)?.data()[0];
    Ok((plus, minus))
}

fn convention_report(ctx: &Ctx) -> Result<Outcome, CliError> {
    let (plus, minus) = probe_gradients().map_err(|e| ctx.err(e))?;
    let mut rows: Vec<(String, Convention, ComplexScalar)> = vec![
        (
            "this tool (--convention plus)".into(),
            Convention::Plus,
            plus,
        ),
        (
            "this tool (--convention minus)".into(),
            Convention::Minus,
            minus,
        ),
    ];
    for &(name, conv, (re, im)) in REFERENCE_ROWS {
        rows.push((
            format!("reference: {name}"),
            conv,
            ComplexScalar::new(re, im),
        ));
    }
    let mut r = Report::new("convention-report");
    r.input("expression", "0.5*z^2")
        .input("at", complex_json(ComplexScalar::new(1.0, 1.0)));
    r.line("gradient of f(z) = 0.5*z^2 at z = 1+1i");
    r.line("plus: gradient = conj(df/dz) = 1-1i; minus: gradient = df/dz = 1+1i");
    r.line("");
    r.line(format!(
        "{:<32} {:<11} {}",
        "source", "convention", "gradient"
    ));
    for (name, conv, g) in &rows {
        r.line(format!(
            "{name:<32} {:<11} {}",
            conv.name(),
            format_complex(*g)
        ));
    }
    r.result = json!({
        "rows": rows
            .iter()
            .map(|(name, conv, g)| json!({
                "source": name,
                "convention": conv.name(),
                "gradient": complex_json(*g),
            }))
            .collect::<Vec<_>>()
    });
    r.diagnostic(
        "probe_matches_reference",
        plus == ComplexScalar::new(1.0, -1.0) && minus == ComplexScalar::new(1.0, 1.0),
    );
    Ok(r.into())
}

fn check(ctx: &Ctx, p: &Point, h: f64, tol: f64) -> Result<Outcome, CliError> {
    let graph = ctx.compile(&p.expr)?;
    let z = ctx.point(&p.at)?;
    let at = scalar(z);
    let (_, tape) = record(&graph, &at).map_err(|e| ctx.err(e))?;
    let jac = latent_jacobian_fd(&graph, &at, h).map_err(|e| ctx.err(e))?;
    let probes = [ComplexScalar::new(1.0, 0.0), ComplexScalar::new(0.0, 1.0)];

    let mut modes: Vec<(&str, f64)> = Vec::new();
    let mut worst = 0.0f64;
    for t in probes {
        let (_, engine) = jvp(&graph, &at, &scalar(t)).map_err(|e| ctx.err(e))?;
        let oracle = latent_jvp_oracle(&jac, &scalar(t)).map_err(|e| ctx.err(e))?;
        worst = worst.max(relative_error(&engine, &oracle));
    }
    modes.push(("jvp", worst));
    for (name, conv) in [
        ("vjp (plus)", Convention::Plus),
        ("vjp (minus)", Convention::Minus),
    ] {
        let mut worst = 0.0f64;
        for f in probes {
            let engine = vjp_on_tape(&tape, &scalar(f), conv).map_err(|e| ctx.err(e))?;
            let oracle = latent_vjp_oracle(&jac, &scalar(f), conv).map_err(|e| ctx.err(e))?;
            worst = worst.max(relative_error(&engine, &oracle));
        }
        modes.push((name, worst));
    }
    let pass = modes.iter().all(|&(_, e)| e <= tol);
    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };

    let mut r = Report::new("check");
    r.input("expression", p.expr.as_str())
        .input("at", complex_json(z))
        .input("h", h)
        .input("tol", tol);
    r.line(format!(
        "check {} at {} = {} (h = {h:e}, tol = {tol:e})",
        p.expr,
        ctx.variable,
        format_complex(z)
    ));
    for &(name, e) in &modes {
        r.line(format!(
            "{name:<12} max relative error {e:.3e}  {}",
            verdict(e <= tol)
        ));
    }
    r.line(format!("overall: {}", verdict(pass)));
    r.result = json!({
        "modes": modes
            .iter()
            .map(|&(name, e)| json!({ "mode": name, "max_relative_error": e, "pass": e <= tol }))
            .collect::<Vec<_>>(),
        "pass": pass,
    });
    Ok(Outcome {
        report: r,
        exit_code: if pass { 0 } else { 2 },
    })
}

const POINTWISE_CAVEAT: &str =
    "note: pointwise check at this point only; it says nothing about other points, and AD returns plausible values for non-holomorphic functions without warning.";

fn holo_check(ctx: &Ctx, p: &Point, tol: f64, h: f64) -> Result<Outcome, CliError> {
    let graph = ctx.compile(&p.expr)?;
    let z = ctx.point(&p.at)?;
    let report = holomorphicity_check(&graph, &scalar(z), tol, h).map_err(|e| ctx.err(e))?;
    let verdict = if report.is_holomorphic {
        "holomorphic at this point"
    } else {
        "NOT holomorphic at this point"
    };
    let mut r = Report::new("holo-check");
    r.input("expression", p.expr.as_str())
        .input("at", complex_json(z))
        .input("tol", tol)
        .input("h", h);
    r.line(format!(
        "holo-check {} at {} = {}",
        p.expr,
        ctx.variable,
        format_complex(z)
    ));
    r.line(format!(
        "|df/dconj(z)| = {:.3e} (tol {tol:e})",
        report.dzbar_norm
    ));
    r.line(format!("verdict: {verdict}"));
    r.line(POINTWISE_CAVEAT);
    r.result = json!({
        "holomorphic_at_point": report.is_holomorphic,
        "dzbar_norm": report.dzbar_norm,
    });
    r.diagnostic("caveat", POINTWISE_CAVEAT);
    Ok(r.into())
}

fn quadform(
    ctx: &Ctx,
    path: &std::path::Path,
    at: &str,
    tangent: Option<&str>,
    cotangent: Option<&str>,
    conv: Convention,
) -> Result<Outcome, CliError> {
    let shown = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| CliError::Io(format!("{shown}: {e}")))?;
    let a = read_square_matrix(file).map_err(|error| CliError::Matrix {
        path: shown.clone(),
        error,
    })?;
    let z = parse_vector(at).map_err(|e| ctx.err(e))?;
    let n = a.matrix_dims().map_err(|e| ctx.err(e))?.0;
    if z.len() != n {
        return Err(ctx.err(Error::Shape(format!(
            "--at has {} entries but the matrix is {n}x{n}",
            z.len()
        ))));
    }
    let graph = quadratic_form(a).map_err(|e| ctx.err(e))?;
    let mut r = Report::new("quadform");
    r.input("matrix", shown).input("at", tensor_json(&z));
    let mut result = serde_json::Map::new();
    if let Some(t) = tangent {
        let t = parse_vector(t).map_err(|e| ctx.err(e))?;
        let (value, out) = jvp(&graph, &z, &t).map_err(|e| ctx.err(e))?;
        r.input("tangent", tensor_json(&t));
        result.insert("value".into(), tensor_json(&value));
        result.insert("tangent".into(), tensor_json(&out));
        r.labelled("value", &value).labelled("tangent", &out);
    } else if let Some(f) = cotangent {
        let f = ctx.literal(f)?;
        let (value, tape) = record(&graph, &z).map_err(|e| ctx.err(e))?;
        let out = vjp_on_tape(&tape, &scalar(f), conv).map_err(|e| ctx.err(e))?;
        r.input("cotangent", complex_json(f));
        result.insert("value".into(), tensor_json(&value));
        result.insert("vjp".into(), tensor_json(&out));
        r.labelled("value", &value).labelled("vjp", &out);
        r.with_convention(conv);
    } else {
        let value = graph.eval(&z).map_err(|e| ctx.err(e))?;
        result.insert("value".into(), tensor_json(&value));
        r.labelled("value", &value);
    }
    r.result = Value::Object(result);
    Ok(r.into())
}

fn optimize(ctx: &Ctx, expr: &str, init: &str, cfg: OptimizerConfig) -> Result<Outcome, CliError> {
    let graph = ctx.compile(expr)?;
    let z0 = ctx.literal(init)?;
    let trajectory = gradient_descent(&graph, z0, &cfg).map_err(|e| ctx.err(e))?;
    let mut r = Report::new("optimize");
    r.input("expression", expr)
        .input("init", complex_json(z0))
        .input("lr", cfg.learning_rate)
        .input("steps", cfg.max_steps)
        .input("tol", cfg.grad_tol);
    r.line(format!(
        "{:>6}  {:<40} {:<24} {}",
        "step", "z", "f(z)", "|grad|"
    ));
    for it in &trajectory.iterates {
        r.line(format!(
            "{:>6}  {:<40} {:<24} {:.3e}",
            it.step,
            format_complex(it.z),
            it.value,
            it.grad_norm
        ));
    }
    let stop = match trajectory.stop {
        StopReason::Converged => "converged",
        StopReason::MaxSteps => "max-steps",
        StopReason::Stalled => "stalled",
    };
    let last = trajectory.last();
    r.line(format!(
        "stop: {stop}; final z = {}",
        format_complex(last.z)
    ));
    r.result = json!({
        "final": complex_json(last.z),
        "value": last.value,
        "stop": stop,
        "iterates": trajectory
            .iterates
            .iter()
            .map(|it| json!({
                "step": it.step,
                "z": complex_json(it.z),
                "value": it.value,
                "grad_norm": it.grad_norm,
            }))
            .collect::<Vec<_>>(),
    });
    r.with_convention(Convention::Plus);
    Ok(r.into())
}
