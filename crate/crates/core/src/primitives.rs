//! Differentiable primitives and their Wirtinger rules.
//!
//! Every primitive evaluates on [`ComplexTensor`]s and, for each input slot,
//! reports the pair `(∂_z f, ∂_z̄ f)` at the primal point. Holomorphic
//! primitives report an exactly zero `∂_z̄ f`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::tensor::{ComplexScalar, ComplexTensor, Shape, WirtingerPair};

const ZERO: ComplexScalar = ComplexScalar::new(0.0, 0.0);
const ONE: ComplexScalar = ComplexScalar::new(1.0, 0.0);
const HALF: ComplexScalar = ComplexScalar::new(0.5, 0.0);

/// Default step for central-difference Wirtinger estimates.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub enum Primitive {
    Add,
    Sub,
    Neg,
    /// Elementwise product.
    Mul,
    /// Elementwise quotient.
    Div,
    /// Multiplication by a fixed complex constant.
    Scale(ComplexScalar),
    /// Integer power, elementwise.
    Powi(i32),
    Conj,
    Re,
    Im,
    /// `z · conj(z)`, elementwise.
    Abs2,
    Exp,
    Log,
    Sin,
    Cos,
    /// `Σ a_k b_k` without conjugation.
    Dot,
    /// `Σ conj(a_k) b_k`.
    Hdot,
    /// Matrix times vector; the matrix is the first argument.
    Matvec,
    /// Sum of all entries of a vector.
    Sum,
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Primitive::Scale(c) => write!(f, "scale({})", crate::tensor::format_complex(*c)),
            Primitive::Powi(k) => write!(f, "powi({k})"),
            other => f.write_str(other.name()),
        }
    }
}

fn elementwise(x: &ComplexTensor, f: impl Fn(ComplexScalar) -> ComplexScalar) -> ComplexTensor {
    x.map(f)
}

fn diag_of(x: &ComplexTensor, f: impl Fn(ComplexScalar) -> ComplexScalar) -> ComplexTensor {
    let entries: Vec<_> = x.data().iter().map(|&z| f(z)).collect();
    ComplexTensor::diag(&entries)
}

fn row(entries: Vec<ComplexScalar>) -> ComplexTensor {
    let n = entries.len();
    ComplexTensor::new(vec![1, n], entries).expect("row shape")
}

fn check_nonzero(name: &str, x: &ComplexTensor, what: &str) -> Result<()> {
    if x.data().iter().any(|z| z.re == 0.0 && z.im == 0.0) {
        return Err(Error::domain(name, format!("{what} is zero")));
    }
    Ok(())
}

fn check_finite(name: &str, out: ComplexTensor) -> Result<ComplexTensor> {
    if !out.is_finite() {
        return Err(Error::NonFinite(format!("`{name}` produced {out}")));
    }
    Ok(out)
}

impl Primitive {
    pub fn name(&self) -> &'static str {
        match self {
            Primitive::Add => "add",
            Primitive::Sub => "sub",
            Primitive::Neg => "neg",
            Primitive::Mul => "mul",
            Primitive::Div => "div",
            Primitive::Scale(_) => "scale",
            Primitive::Powi(_) => "powi",
            Primitive::Conj => "conj",
            Primitive::Re => "re",
            Primitive::Im => "im",
            Primitive::Abs2 => "abs2",
            Primitive::Exp => "exp",
            Primitive::Log => "log",
            Primitive::Sin => "sin",
            Primitive::Cos => "cos",
            Primitive::Dot => "dot",
            Primitive::Hdot => "hdot",
            Primitive::Matvec => "matvec",
            Primitive::Sum => "sum",
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Primitive::Add
            | Primitive::Sub
            | Primitive::Mul
            | Primitive::Div
            | Primitive::Dot
            | Primitive::Hdot
            | Primitive::Matvec => 2,
            _ => 1,
        }
    }

    /// True when `∂_z̄` vanishes identically for every input slot.
    pub fn is_holomorphic(&self) -> bool {
        !matches!(
            self,
            Primitive::Conj | Primitive::Re | Primitive::Im | Primitive::Abs2 | Primitive::Hdot
        )
    }

    /// Output shape for the given input shapes.
    pub fn output_shape(&self, shapes: &[&[usize]]) -> Result<Shape> {
        self.check_arity(shapes.len())?;
        let mismatch = || {
            Error::Shape(format!(
                "`{}` cannot combine shapes {:?}",
                self.name(),
                shapes
            ))
        };
        match self {
            Primitive::Add | Primitive::Sub | Primitive::Mul | Primitive::Div => {
                if shapes[0] != shapes[1] {
                    return Err(mismatch());
                }
                Ok(shapes[0].to_vec())
            }
            Primitive::Dot | Primitive::Hdot => {
                let len = |s: &[usize]| s.iter().product::<usize>();
                if shapes[0].len() > 1 || shapes[1].len() > 1 || len(shapes[0]) != len(shapes[1]) {
                    return Err(mismatch());
                }
                Ok(vec![])
            }
            Primitive::Matvec => match (shapes[0], shapes[1]) {
                ([m, n], [k]) if n == k => Ok(vec![*m]),
                _ => Err(mismatch()),
            },
            Primitive::Sum => {
                if shapes[0].len() > 1 {
                    return Err(mismatch());
                }
                Ok(vec![])
            }
            _ => Ok(shapes[0].to_vec()),
        }
    }

    fn check_arity(&self, n: usize) -> Result<()> {
        if n != self.arity() {
            return Err(Error::InvalidArgument(format!(
                "`{}` takes {} argument(s), got {n}",
                self.name(),
                self.arity()
            )));
        }
        Ok(())
    }

    fn check_domain(&self, inputs: &[&ComplexTensor]) -> Result<()> {
        match self {
            Primitive::Div => check_nonzero("div", inputs[1], "divisor"),
            Primitive::Log => check_nonzero("log", inputs[0], "argument"),
            Primitive::Powi(k) if *k < 0 => {
                check_nonzero("powi", inputs[0], "base of a negative power")
            }
            _ => Ok(()),
        }
    }

    fn validate(&self, inputs: &[&ComplexTensor]) -> Result<()> {
        let shapes: Vec<&[usize]> = inputs.iter().map(|t| t.shape()).collect();
        self.output_shape(&shapes)?;
        self.check_domain(inputs)
    }

    pub fn eval(&self, inputs: &[&ComplexTensor]) -> Result<ComplexTensor> {
        self.validate(inputs)?;
        let x = inputs[0];
        let out = match self {
            Primitive::Add => x.add(inputs[1])?,
            Primitive::Sub => x.sub(inputs[1])?,
            Primitive::Neg => elementwise(x, |z| -z),
            Primitive::Mul => x.zip_with(inputs[1], |a, b| a * b)?,
            Primitive::Div => x.zip_with(inputs[1], |a, b| a / b)?,
            Primitive::Scale(c) => x.scale(*c),
            Primitive::Powi(k) => elementwise(x, |z| z.powi(*k)),
            Primitive::Conj => elementwise(x, |z| z.conj()),
            Primitive::Re => elementwise(x, |z| ComplexScalar::new(z.re, 0.0)),
            Primitive::Im => elementwise(x, |z| ComplexScalar::new(z.im, 0.0)),
            Primitive::Abs2 => elementwise(x, |z| ComplexScalar::new(z.norm_sqr(), 0.0)),
            Primitive::Exp => elementwise(x, |z| z.exp()),
            Primitive::Log => elementwise(x, |z| z.ln()),
            Primitive::Sin => elementwise(x, |z| z.sin()),
            Primitive::Cos => elementwise(x, |z| z.cos()),
            Primitive::Dot => ComplexTensor::scalar(
                x.data()
                    .iter()
                    .zip(inputs[1].data())
                    .map(|(a, b)| a * b)
                    .sum(),
            ),
            Primitive::Hdot => {
                ComplexTensor::scalar(crate::tensor::hermitian_inner(&flat(x), &flat(inputs[1]))?)
            }
            Primitive::Matvec => ComplexTensor::vector(x.matvec_flat(inputs[1].data())?),
            Primitive::Sum => ComplexTensor::scalar(x.data().iter().sum()),
        };
        check_finite(self.name(), out)
    }

    /// Wirtinger pair of the output with respect to input `index`, evaluated
    /// at `inputs`. Both matrices are `out_len × in_len`.
    pub fn wirtinger_rule(&self, inputs: &[&ComplexTensor], index: usize) -> Result<WirtingerPair> {
        self.validate(inputs)?;
        if index >= self.arity() {
            return Err(Error::InvalidArgument(format!(
                "`{}` has no input slot {index}",
                self.name()
            )));
        }
        let x = inputs[0];
        let n = inputs[index].len();
        let pair = match (self, index) {
            (Primitive::Add, _) => WirtingerPair::holomorphic(ComplexTensor::identity(n)),
            (Primitive::Sub, 0) => WirtingerPair::holomorphic(ComplexTensor::identity(n)),
            (Primitive::Sub, _) => {
                WirtingerPair::holomorphic(ComplexTensor::identity(n).scale(-ONE))
            }
            (Primitive::Neg, _) => {
                WirtingerPair::holomorphic(ComplexTensor::identity(n).scale(-ONE))
            }
            (Primitive::Mul, 0) => WirtingerPair::holomorphic(diag_of(inputs[1], |v| v)),
            (Primitive::Mul, _) => WirtingerPair::holomorphic(diag_of(x, |u| u)),
            (Primitive::Div, 0) => WirtingerPair::holomorphic(diag_of(inputs[1], |v| v.inv())),
            (Primitive::Div, _) => {
                let entries: Vec<_> = x
                    .data()
                    .iter()
                    .zip(inputs[1].data())
                    .map(|(&u, &v)| -u / (v * v))
                    .collect();
                WirtingerPair::holomorphic(ComplexTensor::diag(&entries))
            }
            (Primitive::Scale(c), _) => {
                WirtingerPair::holomorphic(ComplexTensor::identity(n).scale(*c))
            }
            (Primitive::Powi(k), _) => {
                let k = *k;
                WirtingerPair::holomorphic(diag_of(x, |z| {
                    if k == 0 {
                        ZERO
                    } else {
                        ComplexScalar::new(k as f64, 0.0) * z.powi(k - 1)
                    }
                }))
            }
            (Primitive::Conj, _) => WirtingerPair {
                dz: ComplexTensor::zeros(vec![n, n]),
                dzbar: ComplexTensor::identity(n),
            },
            (Primitive::Re, _) => WirtingerPair {
                dz: ComplexTensor::identity(n).scale(HALF),
                dzbar: ComplexTensor::identity(n).scale(HALF),
            },
            (Primitive::Im, _) => WirtingerPair {
                dz: ComplexTensor::identity(n).scale(ComplexScalar::new(0.0, -0.5)),
                dzbar: ComplexTensor::identity(n).scale(ComplexScalar::new(0.0, 0.5)),
            },
            (Primitive::Abs2, _) => WirtingerPair {
                dz: diag_of(x, |z| z.conj()),
                dzbar: diag_of(x, |z| z),
            },
            (Primitive::Exp, _) => WirtingerPair::holomorphic(diag_of(x, |z| z.exp())),
            (Primitive::Log, _) => WirtingerPair::holomorphic(diag_of(x, |z| z.inv())),
            (Primitive::Sin, _) => WirtingerPair::holomorphic(diag_of(x, |z| z.cos())),
            (Primitive::Cos, _) => WirtingerPair::holomorphic(diag_of(x, |z| -z.sin())),
            (Primitive::Dot, 0) => WirtingerPair::holomorphic(row(inputs[1].data().to_vec())),
            (Primitive::Dot, _) => WirtingerPair::holomorphic(row(x.data().to_vec())),
            (Primitive::Hdot, 0) => WirtingerPair {
                dz: ComplexTensor::zeros(vec![1, n]),
                dzbar: row(inputs[1].data().to_vec()),
            },
            (Primitive::Hdot, _) => {
                WirtingerPair::holomorphic(row(x.data().iter().map(|a| a.conj()).collect()))
            }
            (Primitive::Matvec, 0) => {
                // ∂(Az)_i / ∂A_{kj} = δ_ik z_j
                let (m, cols) = x.matrix_dims()?;
                let z = inputs[1].data();
                let mut jac = vec![ZERO; m * m * cols];
                for i in 0..m {
                    for (j, &zj) in z.iter().enumerate() {
                        jac[i * (m * cols) + i * cols + j] = zj;
                    }
                }
                WirtingerPair::holomorphic(ComplexTensor::new(vec![m, m * cols], jac)?)
            }
            (Primitive::Matvec, _) => WirtingerPair::holomorphic(x.clone()),
            (Primitive::Sum, _) => WirtingerPair::holomorphic(row(vec![ONE; n])),
        };
        Ok(pair)
    }
}

fn flat(x: &ComplexTensor) -> ComplexTensor {
    ComplexTensor::vector(x.data().to_vec())
}

/// Central-difference estimate of the Wirtinger pair of `p` with respect to
/// input `index`: `(½(Dₓ − i D_y), ½(Dₓ + i D_y))` with step `h` in the real
/// and imaginary coordinate of every entry of that input.
pub fn wirtinger_by_definition(
    p: &Primitive,
    inputs: &[&ComplexTensor],
    index: usize,
    h: f64,
) -> Result<WirtingerPair> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {h}"
        )));
    }
    if index >= inputs.len() {
        return Err(Error::InvalidArgument(format!("no input slot {index}")));
    }
    let out_len = p.eval(inputs)?.len();
    let in_len = inputs[index].len();
    let mut dz = ComplexTensor::zeros(vec![out_len, in_len]).into_data();
    let mut dzbar = dz.clone();

    let probe = |k: usize, delta: ComplexScalar| -> Result<Vec<ComplexScalar>> {
        let mut data = inputs[index].data().to_vec();
        data[k] += delta;
        let moved = ComplexTensor::new(inputs[index].shape().to_vec(), data)?;
        let mut args: Vec<&ComplexTensor> = inputs.to_vec();
        args[index] = &moved;
        p.eval(&args)
            .map(ComplexTensor::into_data)
            .map_err(|e| match e {
                Error::Domain { .. } | Error::NonFinite(_) => Error::NonFinite(format!(
                    "finite-difference stencil of `{}` left the domain",
                    p.name()
                )),
                other => other,
            })
    };

    let i = ComplexScalar::new(0.0, 1.0);
    for k in 0..in_len {
        let xp = probe(k, ComplexScalar::new(h, 0.0))?;
        let xm = probe(k, ComplexScalar::new(-h, 0.0))?;
        let yp = probe(k, ComplexScalar::new(0.0, h))?;
        let ym = probe(k, ComplexScalar::new(0.0, -h))?;
        for r in 0..out_len {
            let dx = (xp[r] - xm[r]) / (2.0 * h);
            let dy = (yp[r] - ym[r]) / (2.0 * h);
            dz[r * in_len + k] = HALF * (dx - i * dy);
            dzbar[r * in_len + k] = HALF * (dx + i * dy);
        }
    }
    WirtingerPair::new(
        ComplexTensor::new(vec![out_len, in_len], dz)?,
        ComplexTensor::new(vec![out_len, in_len], dzbar)?,
    )
}

/// Name-indexed table of the builtin primitives.
///
/// Parameterised entries (`scale`, `powi`) are stored with a neutral
/// parameter; [`Registry::instantiate`] fills the parameter in.
#[derive(Debug, Clone)]
pub struct Registry {
    primitives: BTreeMap<&'static str, Primitive>,
}

/// Primitives callable by name from the expression language.
pub const SCALAR_FUNCTIONS: &[&str] = &["conj", "re", "im", "abs2", "exp", "log", "sin", "cos"];

pub fn builtin_registry() -> Registry {
    let all = [
        Primitive::Add,
        Primitive::Sub,
        Primitive::Neg,
        Primitive::Mul,
        Primitive::Div,
        Primitive::Scale(ONE),
        Primitive::Powi(1),
        Primitive::Conj,
        Primitive::Re,
        Primitive::Im,
        Primitive::Abs2,
        Primitive::Exp,
        Primitive::Log,
        Primitive::Sin,
        Primitive::Cos,
        Primitive::Dot,
        Primitive::Hdot,
        Primitive::Matvec,
        Primitive::Sum,
    ];
    Registry {
        primitives: all.into_iter().map(|p| (p.name(), p)).collect(),
    }
}

impl Default for Registry {
    fn default() -> Self {
        builtin_registry()
    }
}

impl Registry {
    pub fn get(&self, name: &str) -> Option<&Primitive> {
        self.primitives.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.primitives.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.primitives.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Primitive> {
        self.primitives.values()
    }

    /// Looks up a scalar function callable from expressions.
    pub fn scalar_function(&self, name: &str) -> Result<Primitive> {
        if !SCALAR_FUNCTIONS.contains(&name) {
            return Err(Error::UnknownPrimitive(name.to_string()));
        }
        self.get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownPrimitive(name.to_string()))
    }

    pub fn instantiate_scale(&self, c: ComplexScalar) -> Result<Primitive> {
        self.get("scale")
            .map(|_| Primitive::Scale(c))
            .ok_or_else(|| Error::UnknownPrimitive("scale".into()))
    }

    pub fn instantiate_powi(&self, k: i32) -> Result<Primitive> {
        self.get("powi")
            .map(|_| Primitive::Powi(k))
            .ok_or_else(|| Error::UnknownPrimitive("powi".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> ComplexScalar {
        ComplexScalar::new(re, im)
    }

    fn s(z: ComplexScalar) -> ComplexTensor {
        ComplexTensor::scalar(z)
    }

    fn scalar_pair(
        p: &Primitive,
        args: &[ComplexScalar],
        index: usize,
    ) -> (ComplexScalar, ComplexScalar) {
        let ts: Vec<_> = args.iter().map(|&z| s(z)).collect();
        let refs: Vec<_> = ts.iter().collect();
        p.wirtinger_rule(&refs, index)
            .unwrap()
            .as_scalars()
            .unwrap()
    }

    #[test]
    fn registry_holds_required_primitives() {
        let reg = builtin_registry();
        for name in [
            "add", "sub", "neg", "mul", "div", "scale", "powi", "conj", "re", "im", "abs2", "exp",
            "log", "sin", "cos", "dot", "hdot", "matvec", "sum",
        ] {
            assert!(reg.contains(name), "{name} missing");
        }
        assert!(reg.scalar_function("abs").is_err());
        assert!(reg.scalar_function("matvec").is_err());
    }

    #[test]
    fn conj_rule() {
        assert_eq!(
            scalar_pair(&Primitive::Conj, &[c(5.0, -2.0)], 0),
            (c(0.0, 0.0), c(1.0, 0.0))
        );
    }

    #[test]
    fn half_square_rule_through_scale_and_powi() {
        // d/dz ½z² = ½ · 2z
        let z = c(1.0, 1.0);
        let (dpow, dpow_bar) = scalar_pair(&Primitive::Powi(2), &[z], 0);
        let (dscale, dscale_bar) = scalar_pair(&Primitive::Scale(c(0.5, 0.0)), &[z * z], 0);
        assert_eq!(dscale * dpow, c(1.0, 1.0));
        assert_eq!(dpow_bar, c(0.0, 0.0));
        assert_eq!(dscale_bar, c(0.0, 0.0));
    }

    #[test]
    fn abs2_rule() {
        assert_eq!(
            scalar_pair(&Primitive::Abs2, &[c(0.0, 2.0)], 0),
            (c(0.0, -2.0), c(0.0, 2.0))
        );
    }

    #[test]
    fn re_im_rules() {
        assert_eq!(
            scalar_pair(&Primitive::Re, &[c(1.0, 2.0)], 0),
            (c(0.5, 0.0), c(0.5, 0.0))
        );
        assert_eq!(
            scalar_pair(&Primitive::Im, &[c(1.0, 2.0)], 0),
            (c(0.0, -0.5), c(0.0, 0.5))
        );
    }

    #[test]
    fn mul_rule_per_slot() {
        let (u, v) = (c(1.0, 2.0), c(-3.0, 0.5));
        assert_eq!(scalar_pair(&Primitive::Mul, &[u, v], 0), (v, c(0.0, 0.0)));
        assert_eq!(scalar_pair(&Primitive::Mul, &[u, v], 1), (u, c(0.0, 0.0)));
    }

    #[test]
    fn hdot_rule_per_slot() {
        let a = ComplexTensor::vector(vec![c(1.0, 1.0), c(0.0, -2.0)]);
        let b = ComplexTensor::vector(vec![c(3.0, 0.0), c(1.0, 1.0)]);
        let wa = Primitive::Hdot.wirtinger_rule(&[&a, &b], 0).unwrap();
        assert!(wa.dz.is_zero());
        assert_eq!(wa.dzbar.data(), b.data());
        let wb = Primitive::Hdot.wirtinger_rule(&[&a, &b], 1).unwrap();
        assert!(wb.dzbar.is_zero());
        assert_eq!(wb.dz.data(), &[c(1.0, -1.0), c(0.0, 2.0)]);
    }

    #[test]
    fn domain_errors_at_singularities() {
        let zero = s(c(0.0, 0.0));
        let one = s(c(1.0, 0.0));
        assert!(matches!(
            Primitive::Log.eval(&[&zero]),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            Primitive::Div.eval(&[&one, &zero]),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            Primitive::Powi(-2).eval(&[&zero]),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            Primitive::Log.wirtinger_rule(&[&zero], 0),
            Err(Error::Domain { .. })
        ));
        assert_eq!(Primitive::Powi(0).eval(&[&zero]).unwrap(), one);
    }

    #[test]
    fn shape_errors() {
        let v2 = ComplexTensor::vector(vec![c(1.0, 0.0); 2]);
        let v3 = ComplexTensor::vector(vec![c(1.0, 0.0); 3]);
        assert!(matches!(
            Primitive::Add.eval(&[&v2, &v3]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            Primitive::Matvec.eval(&[&v2, &v3]),
            Err(Error::Shape(_))
        ));
        assert!(Primitive::Add.eval(&[&v2]).is_err());
    }

    #[test]
    fn fd_examples() {
        let h = DEFAULT_FD_STEP;
        let close = |a: ComplexScalar, b: ComplexScalar| (a - b).norm() <= 1e-8;

        let (dz, dzb) = wirtinger_by_definition(&Primitive::Conj, &[&s(c(1.0, 1.0))], 0, h)
            .unwrap()
            .as_scalars()
            .unwrap();
        assert!(close(dz, c(0.0, 0.0)) && close(dzb, c(1.0, 0.0)));

        let (dz, dzb) = wirtinger_by_definition(&Primitive::Exp, &[&s(c(0.0, 0.0))], 0, h)
            .unwrap()
            .as_scalars()
            .unwrap();
        assert!(
            close(dz, c(1.0, 0.0)) && close(dzb, c(0.0, 0.0)),
            "{dz} {dzb}"
        );

        let (dz, dzb) = wirtinger_by_definition(&Primitive::Abs2, &[&s(c(0.0, 2.0))], 0, h)
            .unwrap()
            .as_scalars()
            .unwrap();
        assert!(close(dz, c(0.0, -2.0)) && close(dzb, c(0.0, 2.0)));
    }

    #[test]
    fn fd_rejects_bad_step_and_singular_stencil() {
        let z = s(c(1.0, 0.0));
        assert!(wirtinger_by_definition(&Primitive::Exp, &[&z], 0, 0.0).is_err());
        let tiny = s(c(1e-6, 0.0));
        assert!(matches!(
            wirtinger_by_definition(&Primitive::Log, &[&tiny], 0, 1e-6),
            Err(Error::NonFinite(_))
        ));
    }

    /// Random inputs for primitive `p`, entries with modulus in [0.1, 3].
    fn sample_inputs(p: &Primitive, rng: &mut ChaCha8Rng) -> Vec<ComplexTensor> {
        let mut point = || {
            let r = rng.gen_range(0.1..3.0);
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            ComplexScalar::from_polar(r, t)
        };
        match p {
            Primitive::Dot | Primitive::Hdot => vec![
                ComplexTensor::vector((0..3).map(|_| point()).collect()),
                ComplexTensor::vector((0..3).map(|_| point()).collect()),
            ],
            Primitive::Matvec => vec![
                ComplexTensor::new(vec![2, 3], (0..6).map(|_| point()).collect()).unwrap(),
                ComplexTensor::vector((0..3).map(|_| point()).collect()),
            ],
            Primitive::Sum => vec![ComplexTensor::vector((0..4).map(|_| point()).collect())],
            p if p.arity() == 2 => vec![
                ComplexTensor::vector((0..2).map(|_| point()).collect()),
                ComplexTensor::vector((0..2).map(|_| point()).collect()),
            ],
            _ => vec![ComplexTensor::vector((0..2).map(|_| point()).collect())],
        }
    }

    fn corpus_primitives() -> Vec<Primitive> {
        let mut prims: Vec<Primitive> = builtin_registry().iter().cloned().collect();
        prims.extend([
            Primitive::Scale(c(-0.7, 1.3)),
            Primitive::Powi(3),
            Primitive::Powi(-2),
            Primitive::Powi(0),
        ]);
        prims
    }

    fn rel(a: &ComplexTensor, b: &ComplexTensor) -> f64 {
        let d = a.sub(b).unwrap().max_abs();
        d / b.max_abs().max(a.max_abs()).max(1e-300)
    }

    #[test]
    fn analytic_rules_match_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in corpus_primitives() {
            for _ in 0..20 {
                let inputs = sample_inputs(&p, &mut rng);
                let refs: Vec<_> = inputs.iter().collect();
                for k in 0..p.arity() {
                    let exact = p.wirtinger_rule(&refs, k).unwrap();
                    let fd = wirtinger_by_definition(&p, &refs, k, DEFAULT_FD_STEP).unwrap();
                    let stacked = |w: &WirtingerPair| {
                        let mut d = w.dz.data().to_vec();
                        d.extend_from_slice(w.dzbar.data());
                        ComplexTensor::vector(d)
                    };
                    let err = rel(&stacked(&fd), &stacked(&exact));
                    assert!(err <= 1e-6, "{p} slot {k}: relative error {err:e}");
                }
            }
        }
    }

    #[test]
    fn holomorphic_rules_have_exact_zero_dzbar() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in corpus_primitives()
            .into_iter()
            .filter(Primitive::is_holomorphic)
        {
            let inputs = sample_inputs(&p, &mut rng);
            let refs: Vec<_> = inputs.iter().collect();
            for k in 0..p.arity() {
                assert!(p.wirtinger_rule(&refs, k).unwrap().dzbar.is_zero(), "{p}");
            }
        }
    }

    #[test]
    fn conjugated_map_swaps_pair() {
        // conj∘p by the chain rule vs. the pair of p with entries swapped and conjugated
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in corpus_primitives().into_iter().filter(|p| p.arity() == 1) {
            let inputs = sample_inputs(&p, &mut rng);
            let refs: Vec<_> = inputs.iter().collect();
            let inner = p.wirtinger_rule(&refs, 0).unwrap();
            let out = p.eval(&refs).unwrap();
            let outer = Primitive::Conj.wirtinger_rule(&[&out], 0).unwrap();
            // chain rule: dz = A·dz_p + B·conj(dzbar_p), dzbar = A·dzbar_p + B·conj(dz_p)
            // with (A, B) the pair of conj; A = 0, B = I.
            let n = out.len();
            assert!(outer.dz.is_zero() && outer.dzbar == ComplexTensor::identity(n));
            let composed = WirtingerPair {
                dz: crate::tensor::conjugate(&inner.dzbar),
                dzbar: crate::tensor::conjugate(&inner.dz),
            };
            assert_eq!(composed, inner.conjugated());
            let fd_composed = {
                let conj_out = |x: &ComplexTensor| -> ComplexTensor {
                    crate::tensor::conjugate(&p.eval(&[x]).unwrap())
                };
                let h = DEFAULT_FD_STEP;
                let x = &inputs[0];
                let mut dz = vec![];
                let mut dzb = vec![];
                for r in 0..n {
                    for k in 0..x.len() {
                        let shift = |d: ComplexScalar| {
                            let mut v = x.data().to_vec();
                            v[k] += d;
                            conj_out(&ComplexTensor::new(x.shape().to_vec(), v).unwrap()).data()[r]
                        };
                        let dx = (shift(c(h, 0.0)) - shift(c(-h, 0.0))) / (2.0 * h);
                        let dy = (shift(c(0.0, h)) - shift(c(0.0, -h))) / (2.0 * h);
                        dz.push(0.5 * (dx - c(0.0, 1.0) * dy));
                        dzb.push(0.5 * (dx + c(0.0, 1.0) * dy));
                    }
                }
                dz.extend(dzb);
                ComplexTensor::vector(dz)
            };
            let mut expected = composed.dz.data().to_vec();
            expected.extend_from_slice(composed.dzbar.data());
            assert!(
                rel(&fd_composed, &ComplexTensor::vector(expected)) <= 1e-6,
                "{p}"
            );
        }
    }
}
