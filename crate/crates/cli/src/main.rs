//! `wirtinger`: evaluate, differentiate and check complex expressions.

mod commands;
mod matrix;
mod report;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::CliError;

const GRAMMAR_HELP: &str = "\
EXPRESSIONS:
  One complex variable (z unless --var is given). Operators, loosest first:
    + -      addition, subtraction
    * /      multiplication, division
    -x       negation
    ^k       integer power; k is an integer literal such as 3 or (-2)
  `^` binds tighter than unary minus: -z^2 means -(z^2). There is no
  implicit multiplication: write 2*z, not 2z.
  Functions: conj re im abs2 exp log sin cos
  Constants: 2, 0.5, 1e-3, 2i (imaginary), i

LITERALS:
  Complex flag values use a, bi, a+bi, a-bi. Prefer 1i over a bare i.

EXIT CODES:
  0 success, 1 usage or parse error, 2 domain or numeric error
  (including a failed `check`).";

#[derive(Debug, Parser)]
#[command(name = "wirtinger", version, about = "Complex-valued automatic differentiation", after_help = GRAMMAR_HELP)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,

    /// Name of the free variable in expressions.
    #[arg(long = "var", default_value = "z", global = true)]
    variable: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConventionArg {
    Plus,
    Minus,
}

impl From<ConventionArg> for wirtinger_core::tensor::Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Plus => Self::Plus,
            ConventionArg::Minus => Self::Minus,
        }
    }
}

#[derive(Debug, Args)]
struct Point {
    /// Expression to differentiate.
    #[arg(allow_hyphen_values = true)]
    expr: String,

    /// Evaluation point, as `z=LITERAL` or `LITERAL`.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    at: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate an expression at a point.
    Eval(Point),

    /// Forward mode: value and directional derivative along a tangent.
    Jvp {
        #[command(flatten)]
        point: Point,
        #[arg(long, default_value = "1", allow_hyphen_values = true)]
        tangent: String,
    },

    /// Reverse mode: cotangent pulled back to the input.
    Vjp {
        #[command(flatten)]
        point: Point,
        #[arg(long, default_value = "1", allow_hyphen_values = true)]
        cotangent: String,
        #[arg(long, value_enum, default_value_t = ConventionArg::Plus)]
        convention: ConventionArg,
    },

    /// Latent gradient (reverse mode against a unit cotangent).
    Grad {
        #[command(flatten)]
        point: Point,
        #[arg(long, value_enum, default_value_t = ConventionArg::Plus)]
        convention: ConventionArg,
    },

    /// Show which gradient convention each mode follows, beside reference frameworks.
    ConventionReport,

    /// Compare forward and reverse mode against finite differences.
    Check {
        #[command(flatten)]
        point: Point,
        /// Finite-difference step.
        #[arg(long, default_value_t = wirtinger_core::oracle::DEFAULT_FD_STEP)]
        h: f64,
        /// Largest accepted relative error.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },

    /// Test ∂f/∂conj(z) = 0 at one point.
    HoloCheck {
        #[command(flatten)]
        point: Point,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = wirtinger_core::oracle::DEFAULT_FD_STEP)]
        h: f64,
    },

    /// The quadratic form f(z) = conj(z)ᵀ A z with A read from a CSV file.
    Quadform {
        /// Square complex matrix, one row per line, no header.
        #[arg(long)]
        matrix: std::path::PathBuf,
        /// Comma-separated vector, e.g. `1,1i`.
        #[arg(long, allow_hyphen_values = true)]
        at: String,
        /// Comma-separated tangent vector for a forward product.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "cotangent")]
        tangent: Option<String>,
        /// Scalar cotangent for a reverse product.
        #[arg(long, allow_hyphen_values = true)]
        cotangent: Option<String>,
        #[arg(long, value_enum, default_value_t = ConventionArg::Plus)]
        convention: ConventionArg,
    },

    /// Minimise a real-valued expression by gradient descent.
    Optimize {
        #[arg(allow_hyphen_values = true)]
        expr: String,
        #[arg(long, allow_hyphen_values = true)]
        init: String,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// Stop once the gradient modulus falls below this.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Largest tolerated imaginary part of the objective.
        #[arg(long, default_value_t = 1e-9)]
        imag_tol: f64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let json = cli.format == Format::Json;
    match commands::run(&cli) {
        Ok(outcome) => {
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&outcome.report.to_json()).expect("json")
                );
            } else {
                println!("{}", outcome.report.to_text());
            }
            ExitCode::from(outcome.exit_code)
        }
        Err(err) => {
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&err.to_json()).expect("json")
                );
            }
            eprintln!("{}", err.render());
            ExitCode::from(err.exit_code())
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        if self.is_usage() {
            1
        } else {
            2
        }
    }
}
