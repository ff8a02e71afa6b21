//! Shared corpus and samplers for the integration tests.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wirtinger_core::graph::{quadratic_form, Graph, GraphBuilder};
use wirtinger_core::primitives::Primitive;
use wirtinger_core::tensor::{ComplexScalar, ComplexTensor};
use wirtinger_core::{builtin_registry, compile};

pub fn c(re: f64, im: f64) -> ComplexScalar {
    ComplexScalar::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform in the annulus `lo ≤ |z| ≤ hi`.
pub fn annulus(rng: &mut impl Rng, lo: f64, hi: f64) -> ComplexScalar {
    let r = rng.gen_range(lo..=hi);
    ComplexScalar::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
}

pub fn unit_disk(rng: &mut impl Rng) -> ComplexScalar {
    ComplexScalar::from_polar(
        rng.gen::<f64>().sqrt(),
        rng.gen_range(0.0..std::f64::consts::TAU),
    )
}

pub fn random_tensor(rng: &mut impl Rng, shape: &[usize]) -> ComplexTensor {
    let n = shape.iter().product();
    ComplexTensor::new(shape.to_vec(), (0..n).map(|_| unit_disk(rng)).collect()).unwrap()
}

pub fn scalar(text: &str) -> Graph {
    compile(text, "z", &builtin_registry()).unwrap()
}

/// Scalar expressions, flagged holomorphic when they are complex-differentiable.
pub const SCALAR_CORPUS: &[(&str, bool)] = &[
    ("z", true),
    ("0.5*z^2", true),
    ("-z^3 + 2*z - 1i", true),
    ("(z+1)/(z-2)", true),
    ("z^(-2) - 3i*z", true),
    ("exp(z)*sin(z)", true),
    ("log(z) + cos(z)", true),
    ("cos(z)^2 - sin(z)^2", true),
    ("exp(sin(z)) / (z + 3)", true),
    ("conj(conj(z))", true),
    ("z^5*conj(z)^4", false),
    ("re(z)*im(z)", false),
    ("abs2(z) + conj(z)", false),
    ("exp(conj(z))*z", false),
    ("sin(abs2(z)) - im(z)^3", false),
    ("log(z*conj(z) + 1)", false),
    ("conj(exp(z)) / (1 + abs2(z))", false),
    ("(1+2i)*z - re(z)", false),
];

pub struct Case {
    pub name: String,
    pub graph: Graph,
    pub input_shape: Vec<usize>,
    pub holomorphic: bool,
}

fn vector_case(
    name: &str,
    holomorphic: bool,
    build: impl FnOnce(&mut GraphBuilder) -> wirtinger_core::graph::Source,
    shape: &[usize],
) -> Case {
    let mut b = GraphBuilder::new();
    let out = build(&mut b);
    Case {
        name: name.to_string(),
        graph: b.finish(out),
        input_shape: shape.to_vec(),
        holomorphic,
    }
}

/// Graphs over vector and matrix inputs, covering dot, hdot, matvec and sum.
pub fn tensor_cases() -> Vec<Case> {
    let mut r = rng(0x7e45);
    let a = random_tensor(&mut r, &[3, 3]);
    let w = random_tensor(&mut r, &[3]);
    let v = random_tensor(&mut r, &[2]);
    let mut cases = vec![
        vector_case(
            "sum(matvec(A, z))",
            true,
            |b| {
                let a = b.constant(a.clone());
                let z = b.input();
                let az = b.apply(Primitive::Matvec, &[a, z]).unwrap();
                b.apply(Primitive::Sum, &[az]).unwrap()
            },
            &[3],
        ),
        vector_case(
            "dot(z, z)",
            true,
            |b| {
                let z = b.input();
                b.apply(Primitive::Dot, &[z, z]).unwrap()
            },
            &[3],
        ),
        vector_case(
            "dot(w, exp(z))",
            true,
            |b| {
                let w = b.constant(w.clone());
                let z = b.input();
                let e = b.apply(Primitive::Exp, &[z]).unwrap();
                b.apply(Primitive::Dot, &[w, e]).unwrap()
            },
            &[3],
        ),
        vector_case(
            "hdot(w, z)",
            true,
            |b| {
                let w = b.constant(w.clone());
                let z = b.input();
                b.apply(Primitive::Hdot, &[w, z]).unwrap()
            },
            &[3],
        ),
        vector_case(
            "hdot(z, w)",
            false,
            |b| {
                let w = b.constant(w.clone());
                let z = b.input();
                b.apply(Primitive::Hdot, &[z, w]).unwrap()
            },
            &[3],
        ),
        vector_case(
            "matvec(A, conj(z))",
            false,
            |b| {
                let a = b.constant(a.clone());
                let z = b.input();
                let cz = b.apply(Primitive::Conj, &[z]).unwrap();
                b.apply(Primitive::Matvec, &[a, cz]).unwrap()
            },
            &[3],
        ),
        vector_case(
            "sum(matvec(M, v) * matvec(M, v))",
            true,
            |b| {
                let m = b.input();
                let v = b.constant(v.clone());
                let mv = b.apply(Primitive::Matvec, &[m, v]).unwrap();
                let sq = b.apply(Primitive::Mul, &[mv, mv]).unwrap();
                b.apply(Primitive::Sum, &[sq]).unwrap()
            },
            &[2, 2],
        ),
    ];
    cases.push(Case {
        name: "quadratic form".into(),
        graph: quadratic_form(a).unwrap(),
        input_shape: vec![3],
        holomorphic: false,
    });
    cases
}

pub fn all_cases() -> Vec<Case> {
    let mut cases: Vec<Case> = SCALAR_CORPUS
        .iter()
        .map(|&(text, holomorphic)| Case {
            name: text.to_string(),
            graph: scalar(text),
            input_shape: vec![],
            holomorphic,
        })
        .collect();
    cases.extend(tensor_cases());
    cases
}

/// Inputs with entries in `0.2 ≤ |z| ≤ 1.5`, away from every pole in the corpus.
pub fn sample_input(rng: &mut impl Rng, shape: &[usize]) -> ComplexTensor {
    let n = shape.iter().product();
    ComplexTensor::new(
        shape.to_vec(),
        (0..n).map(|_| annulus(rng, 0.2, 1.5)).collect(),
    )
    .unwrap()
}

pub fn sample_like(rng: &mut impl Rng, t: &ComplexTensor) -> ComplexTensor {
    random_tensor(rng, t.shape())
}
