//! Gradient descent on real-valued functions of one complex variable.
//!
//! For a real objective the plus-convention latent gradient points in the
//! direction of steepest ascent, so each step moves along its negation.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::reverse::grad;
use crate::tensor::{ComplexScalar, ComplexTensor, Convention};

/// Maximum number of step halvings tried when a step would increase the objective.
pub const MAX_HALVINGS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub max_steps: usize,
    pub grad_tol: f64,
    pub imag_tol: f64,
    /// Convention of the gradients requested from the engine. Minus-convention
    /// gradients are conjugated before stepping, so both give the same path.
    pub convention: Convention,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            max_steps: 1000,
            grad_tol: 1e-8,
            imag_tol: 1e-9,
            convention: Convention::Plus,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("learning rate", self.learning_rate)?;
        positive("gradient tolerance", self.grad_tol)?;
        positive("imaginary tolerance", self.imag_tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Iterate {
    pub step: usize,
    pub z: ComplexScalar,
    pub value: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxSteps,
    /// No halving of the step decreased the objective.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub iterates: Vec<Iterate>,
    pub stop: StopReason,
}

impl Trajectory {
    pub fn last(&self) -> &Iterate {
        self.iterates
            .last()
            .expect("a trajectory holds at least the initial point")
    }
}

fn real_value(graph: &Graph, z: ComplexScalar, step: usize, imag_tol: f64) -> Result<f64> {
    let out = graph.eval(&ComplexTensor::scalar(z))?;
    let v = out
        .as_scalar()
        .filter(|_| out.rank() == 0)
        .ok_or_else(|| Error::Shape("objective must be scalar-valued".into()))?;
    if v.im.abs() > imag_tol {
        return Err(Error::NonRealObjective { step, imag: v.im });
    }
    Ok(v.re)
}

/// Rejects objectives that are real at `z0` but not around it, such as
/// `z^2` started on the real axis. Probe points that hit a domain error are skipped.
fn probe_realness(graph: &Graph, z0: ComplexScalar, imag_tol: f64) -> Result<()> {
    let r = 1e-3 * z0.norm().max(1.0);
    for theta in [0.3, 2.1, 4.4_f64] {
        let z = z0 + ComplexScalar::from_polar(r, theta);
        match real_value(graph, z, 0, imag_tol) {
            Err(e @ Error::NonRealObjective { .. }) => return Err(e),
            _ => continue,
        }
    }
    Ok(())
}

/// Ascent direction at `z`, expressed in the plus convention.
fn ascent(graph: &Graph, z: ComplexScalar, conv: Convention) -> Result<ComplexScalar> {
    let g = grad(graph, &ComplexTensor::scalar(z), conv)?.data()[0];
    Ok(match conv {
        Convention::Plus => g,
        Convention::Minus => g.conj(),
    })
}

pub fn gradient_descent(
    graph: &Graph,
    z0: ComplexScalar,
    cfg: &OptimizerConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let mut z = z0;
    let mut value = real_value(graph, z, 0, cfg.imag_tol)?;
    probe_realness(graph, z, cfg.imag_tol)?;
    let mut g = ascent(graph, z, cfg.convention)?;
    let mut iterates = vec![Iterate {
        step: 0,
        z,
        value,
        grad_norm: g.norm(),
    }];
    for step in 1..=cfg.max_steps {
        if g.norm() <= cfg.grad_tol {
            return Ok(Trajectory {
                iterates,
                stop: StopReason::Converged,
            });
        }
        let mut lr = cfg.learning_rate;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let candidate = z - lr * g;
            let v = real_value(graph, candidate, step, cfg.imag_tol)?;
            if v <= value {
                accepted = Some((candidate, v));
                break;
            }
            lr *= 0.5;
        }
        let Some((next, v)) = accepted else {
            return Ok(Trajectory {
                iterates,
                stop: StopReason::Stalled,
            });
        };
        z = next;
        value = v;
        g = ascent(graph, z, cfg.convention)?;
        iterates.push(Iterate {
            step,
            z,
            value,
            grad_norm: g.norm(),
        });
    }
    let stop = if g.norm() <= cfg.grad_tol {
        StopReason::Converged
    } else {
        StopReason::MaxSteps
    };
    Ok(Trajectory { iterates, stop })
}
