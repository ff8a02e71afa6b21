//! Forward mode: pushes `(primal, tangent)` pairs through a graph.
//!
//! Each primitive maps input tangents to `Σ_k ∂_z f_k · t_k + ∂_z̄ f_k · conj(t_k)`.
//! The result is real-linear in the tangent, and complex-linear only when
//! every primitive on the path is holomorphic.

use crate::error::{Error, Result};
use crate::graph::{Graph, Source};
use crate::primitives::Primitive;
use crate::tensor::{ensure_same_shape, ComplexScalar, ComplexTensor, WirtingerPair};

#[derive(Debug, Clone, PartialEq)]
pub struct Dual {
    primal: ComplexTensor,
    tangent: ComplexTensor,
}

impl Dual {
    pub fn new(primal: ComplexTensor, tangent: ComplexTensor) -> Result<Self> {
        ensure_same_shape(&primal, &tangent)?;
        Ok(Self { primal, tangent })
    }

    /// A value that does not vary with the input.
    pub fn constant(primal: ComplexTensor) -> Self {
        let tangent = ComplexTensor::zeros(primal.shape().to_vec());
        Self { primal, tangent }
    }

    pub fn primal(&self) -> &ComplexTensor {
        &self.primal
    }

    pub fn tangent(&self) -> &ComplexTensor {
        &self.tangent
    }

    pub fn into_parts(self) -> (ComplexTensor, ComplexTensor) {
        (self.primal, self.tangent)
    }
}

/// Applies one primitive to dual numbers.
pub fn push_primitive(p: &Primitive, inputs: &[&Dual]) -> Result<Dual> {
    let primals: Vec<&ComplexTensor> = inputs.iter().map(|d| &d.primal).collect();
    let primal = p.eval(&primals)?;
    let mut tangent = vec![ComplexScalar::new(0.0, 0.0); primal.len()];
    for (k, input) in inputs.iter().enumerate() {
        if input.tangent.is_zero() {
            continue;
        }
        let rule = p.wirtinger_rule(&primals, k)?;
        for (acc, t) in tangent.iter_mut().zip(rule.apply(input.tangent.data())?) {
            *acc += t;
        }
    }
    let tangent = ComplexTensor::new(primal.shape().to_vec(), tangent)?;
    Ok(Dual { primal, tangent })
}

/// Value and latent JVP of `graph` at `z` along `z_tangent`.
pub fn jvp(
    graph: &Graph,
    z: &ComplexTensor,
    z_tangent: &ComplexTensor,
) -> Result<(ComplexTensor, ComplexTensor)> {
    let input = Dual::new(z.clone(), z_tangent.clone())?;
    let constants: Vec<Dual> = graph
        .constants()
        .iter()
        .cloned()
        .map(Dual::constant)
        .collect();
    let mut values: Vec<Dual> = Vec::with_capacity(graph.nodes().len());
    let pick = |s: Source, values: &[Dual]| -> Dual {
        match s {
            Source::Input => input.clone(),
            Source::Const(k) => constants[k].clone(),
            Source::Node(k) => values[k].clone(),
        }
    };
    for (id, node) in graph.nodes().iter().enumerate() {
        let args: Vec<Dual> = node.args.iter().map(|&s| pick(s, &values)).collect();
        let refs: Vec<&Dual> = args.iter().collect();
        let out = push_primitive(&node.primitive, &refs).map_err(|e| e.at_node(id))?;
        values.push(out);
    }
    Ok(pick(graph.output(), &values).into_parts())
}

/// Wirtinger pair of a scalar-to-scalar graph, recovered from the two
/// pushes `t = 1` and `t = i`.
pub fn wirtinger_of(graph: &Graph, z: ComplexScalar) -> Result<WirtingerPair> {
    let at = ComplexTensor::scalar(z);
    let (value, along_one) = jvp(
        graph,
        &at,
        &ComplexTensor::scalar(ComplexScalar::new(1.0, 0.0)),
    )?;
    if value.rank() != 0 {
        return Err(Error::Shape(format!(
            "expected a scalar-valued graph, output has shape {:?}",
            value.shape()
        )));
    }
    let (_, along_i) = jvp(
        graph,
        &at,
        &ComplexTensor::scalar(ComplexScalar::new(0.0, 1.0)),
    )?;
    let a = along_one.data()[0];
    let b = along_i.data()[0];
    let i = ComplexScalar::new(0.0, 1.0);
    Ok(WirtingerPair::scalar(0.5 * (a - i * b), 0.5 * (a + i * b)))
}
