//! Computation graphs over the primitive registry.
//!
//! A [`Graph`] has one input tensor, a pool of constants, and a list of
//! primitive applications in topological order. Forward mode walks it
//! directly; reverse mode records a tape while walking it.

use crate::error::{Error, Result};
use crate::primitives::Primitive;
use crate::tensor::{ComplexScalar, ComplexTensor};

/// Where a node argument comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    Input,
    Const(usize),
    Node(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphNode {
    pub primitive: Primitive,
    pub args: Vec<Source>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    constants: Vec<ComplexTensor>,
    nodes: Vec<GraphNode>,
    output: Source,
}

impl Graph {
    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn constants(&self) -> &[ComplexTensor] {
        &self.constants
    }

    pub fn output(&self) -> Source {
        self.output
    }

    /// True when every primitive in the graph is holomorphic.
    pub fn is_holomorphic(&self) -> bool {
        self.nodes.iter().all(|n| n.primitive.is_holomorphic())
    }

    /// Evaluates the graph at `z`.
    pub fn eval(&self, z: &ComplexTensor) -> Result<ComplexTensor> {
        let mut values: Vec<ComplexTensor> = Vec::with_capacity(self.nodes.len());
        for (id, node) in self.nodes.iter().enumerate() {
            let args: Vec<&ComplexTensor> = node
                .args
                .iter()
                .map(|&s| self.lookup(s, z, &values))
                .collect();
            let out = node.primitive.eval(&args).map_err(|e| e.at_node(id))?;
            values.push(out);
        }
        Ok(self.lookup(self.output, z, &values).clone())
    }

    pub(crate) fn lookup<'a>(
        &'a self,
        source: Source,
        input: &'a ComplexTensor,
        values: &'a [ComplexTensor],
    ) -> &'a ComplexTensor {
        match source {
            Source::Input => input,
            Source::Const(k) => &self.constants[k],
            Source::Node(k) => &values[k],
        }
    }
}

/// Incremental construction of a [`Graph`].
///
/// ```
/// use wirtinger_core::graph::GraphBuilder;
/// use wirtinger_core::primitives::Primitive;
/// use wirtinger_core::tensor::{ComplexScalar, ComplexTensor};
///
/// // f(z) = ½ z²
/// let mut b = GraphBuilder::new();
/// let z = b.input();
/// let sq = b.apply(Primitive::Powi(2), &[z]).unwrap();
/// let f = b.apply(Primitive::Scale(ComplexScalar::new(0.5, 0.0)), &[sq]).unwrap();
/// let graph = b.finish(f);
/// let value = graph.eval(&ComplexTensor::scalar(ComplexScalar::new(1.0, 1.0))).unwrap();
/// assert_eq!(value.as_scalar(), Some(ComplexScalar::new(0.0, 1.0)));
/// ```
#[derive(Debug, Default)]
pub struct GraphBuilder {
    constants: Vec<ComplexTensor>,
    nodes: Vec<GraphNode>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn input(&self) -> Source {
        Source::Input
    }

    pub fn constant(&mut self, value: ComplexTensor) -> Source {
        self.constants.push(value);
        Source::Const(self.constants.len() - 1)
    }

    pub fn scalar(&mut self, value: ComplexScalar) -> Source {
        self.constant(ComplexTensor::scalar(value))
    }

    pub fn apply(&mut self, primitive: Primitive, args: &[Source]) -> Result<Source> {
        if args.len() != primitive.arity() {
            return Err(Error::InvalidArgument(format!(
                "`{}` takes {} argument(s), got {}",
                primitive.name(),
                primitive.arity(),
                args.len()
            )));
        }
        for &arg in args {
            let valid = match arg {
                Source::Input => true,
                Source::Const(k) => k < self.constants.len(),
                Source::Node(k) => k < self.nodes.len(),
            };
            if !valid {
                return Err(Error::InvalidArgument(format!("dangling argument {arg:?}")));
            }
        }
        self.nodes.push(GraphNode {
            primitive,
            args: args.to_vec(),
        });
        Ok(Source::Node(self.nodes.len() - 1))
    }

    pub fn finish(self, output: Source) -> Graph {
        Graph {
            constants: self.constants,
            nodes: self.nodes,
            output,
        }
    }
}

/// `f(z) = z̄ᵀ A z`, built as `hdot(z, matvec(A, z))`.
pub fn quadratic_form(a: ComplexTensor) -> Result<Graph> {
    let (m, n) = a.matrix_dims()?;
    if m != n {
        return Err(Error::Shape(format!(
            "quadratic form needs a square matrix, got {m}x{n}"
        )));
    }
    let mut b = GraphBuilder::new();
    let z = b.input();
    let a = b.constant(a);
    let az = b.apply(Primitive::Matvec, &[a, z])?;
    let f = b.apply(Primitive::Hdot, &[z, az])?;
    Ok(b.finish(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> ComplexScalar {
        ComplexScalar::new(re, im)
    }

    #[test]
    fn identity_graph() {
        let g = GraphBuilder::new().finish(Source::Input);
        let z = ComplexTensor::scalar(c(3.0, -1.0));
        assert_eq!(g.eval(&z).unwrap(), z);
    }

    #[test]
    fn quadratic_form_value() {
        let g = quadratic_form(ComplexTensor::identity(2)).unwrap();
        let z = ComplexTensor::vector(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        assert_eq!(g.eval(&z).unwrap().as_scalar(), Some(c(2.0, 0.0)));
        assert!(!g.is_holomorphic());
    }

    #[test]
    fn domain_error_carries_node() {
        let mut b = GraphBuilder::new();
        let z = b.input();
        let e = b.apply(Primitive::Exp, &[z]).unwrap();
        let l = b.apply(Primitive::Log, &[z]).unwrap();
        let f = b.apply(Primitive::Add, &[e, l]).unwrap();
        let g = b.finish(f);
        let err = g.eval(&ComplexTensor::scalar(c(0.0, 0.0))).unwrap_err();
        assert!(matches!(err, Error::Domain { node: Some(1), .. }), "{err}");
    }

    #[test]
    fn builder_rejects_bad_arguments() {
        let mut b = GraphBuilder::new();
        assert!(b.apply(Primitive::Add, &[Source::Input]).is_err());
        assert!(b.apply(Primitive::Exp, &[Source::Node(4)]).is_err());
        assert!(quadratic_form(ComplexTensor::zeros(vec![2, 3])).is_err());
    }
}
