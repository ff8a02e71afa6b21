//! Reverse mode: record a tape, then sweep cotangents backwards.
//!
//! The backward kernel works in the plus convention, where each node maps an
//! output cotangent `f̄` to `ξ = conj(∂_z f)ᵀ f̄ + (∂_z̄ f)ᵀ conj(f̄)` per input.
//! The minus convention is obtained by conjugating both the seed and the
//! result of a plus sweep.

use crate::error::{Error, Result};
use crate::graph::{Graph, Source};
use crate::primitives::Primitive;
use crate::tensor::{conjugate, ensure_same_shape, ComplexScalar, ComplexTensor, Convention};

/// One recorded primitive application with its saved primals.
#[derive(Debug, Clone, PartialEq)]
pub struct TapeNode {
    pub id: usize,
    pub primitive: Primitive,
    pub parents: Vec<Source>,
    pub primal_inputs: Vec<ComplexTensor>,
    pub primal_output: ComplexTensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tape {
    nodes: Vec<TapeNode>,
    input: ComplexTensor,
    output: Source,
}

impl Tape {
    pub fn nodes(&self) -> &[TapeNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn input(&self) -> &ComplexTensor {
        &self.input
    }

    pub fn output(&self) -> Source {
        self.output
    }

    pub fn value(&self) -> &ComplexTensor {
        match self.output {
            Source::Input => &self.input,
            Source::Node(k) => &self.nodes[k].primal_output,
            Source::Const(_) => unreachable!("constant outputs are recorded as a node"),
        }
    }

    /// Re-evaluates every node from its saved inputs.
    pub fn replay(&self) -> Result<ComplexTensor> {
        let mut outputs: Vec<ComplexTensor> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let args: Vec<&ComplexTensor> = node
                .parents
                .iter()
                .zip(&node.primal_inputs)
                .map(|(p, saved)| match p {
                    Source::Input => &self.input,
                    Source::Node(k) => &outputs[*k],
                    Source::Const(_) => saved,
                })
                .collect();
            outputs.push(node.primitive.eval(&args)?);
        }
        Ok(match self.output {
            Source::Input => self.input.clone(),
            Source::Node(k) => outputs[k].clone(),
            Source::Const(_) => unreachable!("constant outputs are recorded as a node"),
        })
    }

    /// Plus-convention sweep from `seed` at the output back to the input.
    fn backward(&self, seed: &ComplexTensor) -> Result<ComplexTensor> {
        ensure_same_shape(seed, self.value())?;
        let mut store = CotangentStore::new(self);
        match self.output {
            Source::Input => return Ok(seed.clone()),
            Source::Node(k) => store.xi[k] = seed.clone(),
            Source::Const(_) => unreachable!("constant outputs are recorded as a node"),
        }
        for node in self.nodes.iter().rev() {
            let ct = &store.xi[node.id];
            if ct.is_zero() {
                continue;
            }
            let inputs: Vec<&ComplexTensor> = node.primal_inputs.iter().collect();
            let pulled = pull_node_inner(&node.primitive, &inputs, ct, &node.parents)
                .map_err(|e| e.at_node(node.id))?;
            for (parent, contribution) in node.parents.iter().zip(pulled) {
                let Some(contribution) = contribution else {
                    continue;
                };
                match parent {
                    Source::Input => store.input.accumulate(&contribution)?,
                    Source::Node(k) => store.xi[*k].accumulate(&contribution)?,
                    Source::Const(_) => {}
                }
            }
        }
        Ok(store.input)
    }
}

/// Per-sweep cotangent accumulators, one per tape node plus the input.
#[derive(Debug, Clone)]
pub struct CotangentStore {
    xi: Vec<ComplexTensor>,
    input: ComplexTensor,
}

impl CotangentStore {
    fn new(tape: &Tape) -> Self {
        Self {
            xi: tape
                .nodes
                .iter()
                .map(|n| ComplexTensor::zeros(n.primal_output.shape().to_vec()))
                .collect(),
            input: ComplexTensor::zeros(tape.input.shape().to_vec()),
        }
    }
}

/// Evaluates `graph` at `z` and records every primitive application.
pub fn record(graph: &Graph, z: &ComplexTensor) -> Result<(ComplexTensor, Tape)> {
    let mut nodes: Vec<TapeNode> = Vec::with_capacity(graph.nodes().len() + 1);
    for (id, node) in graph.nodes().iter().enumerate() {
        let primal_inputs: Vec<ComplexTensor> = node
            .args
            .iter()
            .map(|&s| match s {
                Source::Input => z.clone(),
                Source::Const(k) => graph.constants()[k].clone(),
                Source::Node(k) => nodes[k].primal_output.clone(),
            })
            .collect();
        let refs: Vec<&ComplexTensor> = primal_inputs.iter().collect();
        let primal_output = node.primitive.eval(&refs).map_err(|e| e.at_node(id))?;
        nodes.push(TapeNode {
            id,
            primitive: node.primitive.clone(),
            parents: node.args.clone(),
            primal_inputs,
            primal_output,
        });
    }
    let output = match graph.output() {
        // A constant output becomes `1 · c` so the tape always ends on a node or the input.
        Source::Const(k) => {
            let c = graph.constants()[k].clone();
            let id = nodes.len();
            nodes.push(TapeNode {
                id,
                primitive: Primitive::Scale(ComplexScalar::new(1.0, 0.0)),
                parents: vec![Source::Const(k)],
                primal_inputs: vec![c.clone()],
                primal_output: c,
            });
            Source::Node(id)
        }
        other => other,
    };
    let tape = Tape {
        nodes,
        input: z.clone(),
        output,
    };
    Ok((tape.value().clone(), tape))
}

fn pull_node_inner(
    p: &Primitive,
    primal_inputs: &[&ComplexTensor],
    out_cotangent: &ComplexTensor,
    parents: &[Source],
) -> Result<Vec<Option<ComplexTensor>>> {
    (0..p.arity())
        .map(|k| {
            if matches!(parents.get(k), Some(Source::Const(_))) {
                return Ok(None);
            }
            let rule = p.wirtinger_rule(primal_inputs, k)?;
            let xi = rule.pull(out_cotangent.data())?;
            Ok(Some(ComplexTensor::new(
                primal_inputs[k].shape().to_vec(),
                xi,
            )?))
        })
        .collect()
}

/// Cotangent of every input slot of `p` given the output cotangent, in the
/// plus convention.
pub fn pull_node(
    p: &Primitive,
    primal_inputs: &[&ComplexTensor],
    out_cotangent: &ComplexTensor,
) -> Result<Vec<ComplexTensor>> {
    let out = p.eval(primal_inputs)?;
    ensure_same_shape(&out, out_cotangent)?;
    let parents = vec![Source::Input; p.arity()];
    Ok(pull_node_inner(p, primal_inputs, out_cotangent, &parents)?
        .into_iter()
        .flatten()
        .collect())
}

/// Latent VJP of `graph` at `z` against `cotangent` under `conv`.
pub fn vjp(
    graph: &Graph,
    z: &ComplexTensor,
    cotangent: &ComplexTensor,
    conv: Convention,
) -> Result<ComplexTensor> {
    let (_, tape) = record(graph, z)?;
    vjp_on_tape(&tape, cotangent, conv)
}

/// Backward sweep against an already recorded tape. A completed tape can
/// serve any number of sweeps.
pub fn vjp_on_tape(
    tape: &Tape,
    cotangent: &ComplexTensor,
    conv: Convention,
) -> Result<ComplexTensor> {
    ensure_same_shape(cotangent, tape.value())?;
    if cotangent.is_zero() {
        return Ok(ComplexTensor::zeros(tape.input().shape().to_vec()));
    }
    match conv {
        Convention::Plus => tape.backward(cotangent),
        Convention::Minus => Ok(conjugate(&tape.backward(&conjugate(cotangent))?)),
    }
}

/// Latent gradient: the VJP against a unit cotangent. Needs a scalar output.
pub fn grad(graph: &Graph, z: &ComplexTensor, conv: Convention) -> Result<ComplexTensor> {
    let (value, tape) = record(graph, z)?;
    if value.rank() != 0 {
        return Err(Error::Shape(format!(
            "gradient needs a scalar-valued function, output has shape {:?}",
            value.shape()
        )));
    }
    vjp_on_tape(
        &tape,
        &ComplexTensor::scalar(ComplexScalar::new(1.0, 0.0)),
        conv,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{quadratic_form, GraphBuilder};

    fn c(re: f64, im: f64) -> ComplexScalar {
        ComplexScalar::new(re, im)
    }

    fn s(z: ComplexScalar) -> ComplexTensor {
        ComplexTensor::scalar(z)
    }

    fn half_square() -> Graph {
        let mut b = GraphBuilder::new();
        let z = b.input();
        let sq = b.apply(Primitive::Powi(2), &[z]).unwrap();
        let f = b.apply(Primitive::Scale(c(0.5, 0.0)), &[sq]).unwrap();
        b.finish(f)
    }

    fn conj_conj() -> Graph {
        let mut b = GraphBuilder::new();
        let z = b.input();
        let c1 = b.apply(Primitive::Conj, &[z]).unwrap();
        let c2 = b.apply(Primitive::Conj, &[c1]).unwrap();
        b.finish(c2)
    }

    #[test]
    fn record_examples() {
        let (value, tape) = record(&half_square(), &s(c(1.0, 1.0))).unwrap();
        assert_eq!(value.as_scalar(), Some(c(0.0, 1.0)));
        let names: Vec<_> = tape.nodes().iter().map(|n| n.primitive.name()).collect();
        assert_eq!(names, ["powi", "scale"]);
        assert_eq!(tape.replay().unwrap(), value);

        let g = quadratic_form(ComplexTensor::identity(2)).unwrap();
        let z = ComplexTensor::vector(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        let (value, _) = record(&g, &z).unwrap();
        assert_eq!(value.as_scalar(), Some(c(2.0, 0.0)));

        let (value, _) = record(&conj_conj(), &s(c(3.0, -1.0))).unwrap();
        assert_eq!(value.as_scalar(), Some(c(3.0, -1.0)));
    }

    #[test]
    fn pull_examples() {
        // ½z² as a single node: scale ∘ powi gives conj(z) through two pulls
        let z = s(c(1.0, 1.0));
        let sq = Primitive::Powi(2).eval(&[&z]).unwrap();
        let after_scale =
            pull_node(&Primitive::Scale(c(0.5, 0.0)), &[&sq], &s(c(1.0, 0.0))).unwrap();
        let xi = pull_node(&Primitive::Powi(2), &[&z], &after_scale[0]).unwrap();
        assert_eq!(xi[0].as_scalar(), Some(c(1.0, -1.0)));

        let xi = pull_node(&Primitive::Conj, &[&s(c(0.2, 0.7))], &s(c(4.0, 3.0))).unwrap();
        assert_eq!(xi[0].as_scalar(), Some(c(4.0, -3.0)));
    }

    #[test]
    fn half_square_gradients() {
        let z = s(c(1.0, 1.0));
        let g = half_square();
        assert_eq!(
            grad(&g, &z, Convention::Plus).unwrap().as_scalar(),
            Some(c(1.0, -1.0))
        );
        assert_eq!(
            grad(&g, &z, Convention::Minus).unwrap().as_scalar(),
            Some(c(1.0, 1.0))
        );
    }

    #[test]
    fn abs2_gradient_is_twice_z() {
        let mut b = GraphBuilder::new();
        let z = b.input();
        let f = b.apply(Primitive::Abs2, &[z]).unwrap();
        let g = b.finish(f);
        let out = grad(&g, &s(c(1.0, -2.0)), Convention::Plus).unwrap();
        assert_eq!(out.as_scalar(), Some(c(2.0, -4.0)));
    }

    #[test]
    fn identity_gradient_is_one() {
        let g = GraphBuilder::new().finish(Source::Input);
        for conv in [Convention::Plus, Convention::Minus] {
            assert_eq!(
                grad(&g, &s(c(0.3, 0.1)), conv).unwrap().as_scalar(),
                Some(c(1.0, 0.0))
            );
        }
    }

    #[test]
    fn constant_output_has_zero_gradient() {
        let mut b = GraphBuilder::new();
        let k = b.scalar(c(2.0, 1.0));
        let g = b.finish(k);
        let (value, _) = record(&g, &s(c(1.0, 0.0))).unwrap();
        assert_eq!(value.as_scalar(), Some(c(2.0, 1.0)));
        assert!(grad(&g, &s(c(1.0, 0.0)), Convention::Plus)
            .unwrap()
            .is_zero());
    }

    #[test]
    fn fan_out_accumulates() {
        // z·z has gradient conj(2z)
        let mut b = GraphBuilder::new();
        let z = b.input();
        let f = b.apply(Primitive::Mul, &[z, z]).unwrap();
        let g = b.finish(f);
        let out = grad(&g, &s(c(0.5, 2.0)), Convention::Plus).unwrap();
        assert_eq!(out.as_scalar(), Some(c(1.0, -4.0)));
    }

    #[test]
    fn zero_seed_skips_singular_sweep() {
        let mut b = GraphBuilder::new();
        let z = b.input();
        let f = b.apply(Primitive::Exp, &[z]).unwrap();
        let g = b.finish(f);
        let out = vjp(&g, &s(c(1.0, 0.0)), &s(c(0.0, 0.0)), Convention::Plus).unwrap();
        assert!(out.is_zero());
    }

    #[test]
    fn quadratic_form_reverse_closed_form() {
        let a = ComplexTensor::matrix(vec![
            vec![c(0.5, 0.2), c(-0.1, 0.3)],
            vec![c(0.0, -0.7), c(0.4, 0.0)],
        ])
        .unwrap();
        let z = ComplexTensor::vector(vec![c(0.3, -0.2), c(-0.6, 0.1)]);
        let fbar = c(0.25, -0.8);
        let g = quadratic_form(a.clone()).unwrap();
        let out = vjp(&g, &z, &s(fbar), Convention::Plus).unwrap();
        // conj(A)ᵀ z f̄ + A z conj(f̄)
        let at_z = conjugate(&a).tmatvec_flat(z.data()).unwrap();
        let az = a.matvec_flat(z.data()).unwrap();
        for k in 0..2 {
            let expected = at_z[k] * fbar + az[k] * fbar.conj();
            assert!((out.data()[k] - expected).norm() <= 1e-15);
        }
    }

    #[test]
    fn minus_is_conjugated_plus() {
        let g = conj_conj();
        let z = s(c(0.1, 0.2));
        let fbar = s(c(-1.0, 0.5));
        let minus = vjp(&g, &z, &fbar, Convention::Minus).unwrap();
        let plus = vjp(&g, &z, &conjugate(&fbar), Convention::Plus).unwrap();
        assert_eq!(minus, conjugate(&plus));
    }

    #[test]
    fn grad_needs_scalar_output() {
        let mut b = GraphBuilder::new();
        let z = b.input();
        let f = b.apply(Primitive::Exp, &[z]).unwrap();
        let g = b.finish(f);
        let v = ComplexTensor::vector(vec![c(1.0, 0.0); 2]);
        assert!(matches!(
            grad(&g, &v, Convention::Plus),
            Err(Error::Shape(_))
        ));
        assert!(vjp(&g, &v, &s(c(1.0, 0.0)), Convention::Plus).is_err());
    }
}
