//! Complex values shared by every part of the engine.
//!
//! A [`ComplexTensor`] is a scalar, vector or matrix of [`ComplexScalar`]
//! entries stored row-major. Jacobians are stored as matrices whose rows
//! index the flattened output and whose columns index the flattened input.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A complex number in double precision.
pub type ComplexScalar = Complex64;

/// Shape of a tensor: empty for scalars, `[n]` for vectors, `[m, n]` for matrices.
pub type Shape = Vec<usize>;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor {
    shape: Shape,
    data: Vec<ComplexScalar>,
}

impl ComplexTensor {
    pub fn new(shape: Shape, data: Vec<ComplexScalar>) -> Result<Self> {
        if shape.len() > 2 {
            return Err(Error::Shape(format!(
                "tensors have rank at most 2, got shape {shape:?}"
            )));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {expected} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn scalar(z: ComplexScalar) -> Self {
        Self {
            shape: vec![],
            data: vec![z],
        }
    }

    pub fn vector(data: Vec<ComplexScalar>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    /// Builds a matrix from rows; all rows must have the same length.
    pub fn matrix(rows: Vec<Vec<ComplexScalar>>) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("matrix rows have different lengths".into()));
        }
        Self::new(vec![m, n], rows.into_iter().flatten().collect())
    }

    pub fn zeros(shape: Shape) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![ComplexScalar::new(0.0, 0.0); len],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut out = Self::zeros(vec![n, n]);
        for k in 0..n {
            out.data[k * n + k] = ComplexScalar::new(1.0, 0.0);
        }
        out
    }

    /// Diagonal matrix with the given entries.
    pub fn diag(entries: &[ComplexScalar]) -> Self {
        let n = entries.len();
        let mut out = Self::zeros(vec![n, n]);
        for (k, &e) in entries.iter().enumerate() {
            out.data[k * n + k] = e;
        }
        out
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[ComplexScalar] {
        &self.data
    }

    pub fn into_data(self) -> Vec<ComplexScalar> {
        self.data
    }

    /// The single entry of a one-element tensor.
    pub fn as_scalar(&self) -> Option<ComplexScalar> {
        (self.data.len() == 1).then(|| self.data[0])
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    /// Same data under a new shape with the same number of entries.
    pub fn reshape(&self, shape: Shape) -> Result<Self> {
        Self::new(shape, self.data.clone())
    }

    pub fn map(&self, f: impl Fn(ComplexScalar) -> ComplexScalar) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    /// Entrywise combination of two tensors of equal shape.
    pub fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(ComplexScalar, ComplexScalar) -> ComplexScalar,
    ) -> Result<Self> {
        ensure_same_shape(self, other)?;
        Ok(Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: ComplexScalar) -> Self {
        self.map(|z| c * z)
    }

    /// Adds `other` into `self` in place.
    pub fn accumulate(&mut self, other: &Self) -> Result<()> {
        ensure_same_shape(self, other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    /// Plain (non-conjugating) transpose. Vectors and scalars are returned unchanged.
    pub fn transpose(&self) -> Self {
        match self.shape[..] {
            [m, n] => {
                let mut data = Vec::with_capacity(m * n);
                for j in 0..n {
                    for i in 0..m {
                        data.push(self.data[i * n + j]);
                    }
                }
                Self {
                    shape: vec![n, m],
                    data,
                }
            }
            _ => self.clone(),
        }
    }

    /// Matrix times flattened vector: `self` is `m × n`, `v` has `n` entries.
    /// The result is a plain vector of length `m`.
    pub fn matvec_flat(&self, v: &[ComplexScalar]) -> Result<Vec<ComplexScalar>> {
        let (m, n) = self.matrix_dims()?;
        if v.len() != n {
            return Err(Error::Shape(format!(
                "cannot apply a {m}x{n} matrix to {} entries",
                v.len()
            )));
        }
        Ok((0..m)
            .map(|i| {
                self.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    /// Transposed matrix times flattened vector (`selfᵀ v`) without conjugation.
    pub fn tmatvec_flat(&self, v: &[ComplexScalar]) -> Result<Vec<ComplexScalar>> {
        let (m, n) = self.matrix_dims()?;
        if v.len() != m {
            return Err(Error::Shape(format!(
                "cannot apply the transpose of a {m}x{n} matrix to {} entries",
                v.len()
            )));
        }
        let mut out = vec![ComplexScalar::new(0.0, 0.0); n];
        for (i, &vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(&self.data[i * n..(i + 1) * n]) {
                *o += a * vi;
            }
        }
        Ok(out)
    }

    pub fn matrix_dims(&self) -> Result<(usize, usize)> {
        match self.shape[..] {
            [m, n] => Ok((m, n)),
            _ => Err(Error::Shape(format!(
                "expected a matrix, got shape {:?}",
                self.shape
            ))),
        }
    }

    /// Euclidean norm of the flattened entries.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus; zero for an empty tensor.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl From<ComplexScalar> for ComplexTensor {
    fn from(z: ComplexScalar) -> Self {
        Self::scalar(z)
    }
}

pub(crate) fn ensure_same_shape(a: &ComplexTensor, b: &ComplexTensor) -> Result<()> {
    if a.shape != b.shape {
        return Err(Error::Shape(format!(
            "shapes {:?} and {:?} do not match",
            a.shape, b.shape
        )));
    }
    Ok(())
}

/// Real tensor produced by [`split_reim`].
#[derive(Debug, Clone, PartialEq)]
pub struct RealTensor {
    pub shape: Shape,
    pub data: Vec<f64>,
}

/// Splits a complex tensor into its real and imaginary parts.
pub fn split_reim(z: &ComplexTensor) -> (RealTensor, RealTensor) {
    let re = z.data.iter().map(|c| c.re).collect();
    let im = z.data.iter().map(|c| c.im).collect();
    (
        RealTensor {
            shape: z.shape.clone(),
            data: re,
        },
        RealTensor {
            shape: z.shape.clone(),
            data: im,
        },
    )
}

/// Inverse of [`split_reim`].
pub fn join_reim(x: &RealTensor, y: &RealTensor) -> Result<ComplexTensor> {
    if x.shape != y.shape || x.data.len() != y.data.len() {
        return Err(Error::Shape(format!(
            "real part shape {:?} differs from imaginary part shape {:?}",
            x.shape, y.shape
        )));
    }
    let data = x
        .data
        .iter()
        .zip(&y.data)
        .map(|(&re, &im)| ComplexScalar::new(re, im))
        .collect();
    ComplexTensor::new(x.shape.clone(), data)
}

/// `Σ conj(a[k]) b[k]` over flattened entries: conjugate-linear in `a`,
/// linear in `b`. Shapes must agree.
pub fn hermitian_inner(a: &ComplexTensor, b: &ComplexTensor) -> Result<ComplexScalar> {
    ensure_same_shape(a, b)?;
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| x.conj() * y).sum())
}

pub fn conjugate(z: &ComplexTensor) -> ComplexTensor {
    z.map(|c| c.conj())
}

/// `‖actual − expected‖ / ‖expected‖`, falling back to the absolute error
/// when `expected` is exactly zero.
pub fn relative_error(actual: &ComplexTensor, expected: &ComplexTensor) -> f64 {
    let diff: f64 = actual
        .data
        .iter()
        .zip(&expected.data)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let scale = expected.norm();
    if actual.len() != expected.len() {
        f64::INFINITY
    } else if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Gradient convention used when mapping real cotangents back to complex numbers.
///
/// `Plus` reports the adjoint of the forward derivative (∇½z² = z̄).
/// `Minus` reports the literal vector-Jacobian product (∇½z² = z).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Convention {
    #[default]
    Plus,
    Minus,
}

impl Convention {
    pub fn name(self) -> &'static str {
        match self {
            Convention::Plus => "plus",
            Convention::Minus => "minus",
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" => Ok(Convention::Plus),
            "minus" => Ok(Convention::Minus),
            other => Err(Error::Literal(format!(
                "unknown convention `{other}` (expected plus or minus)"
            ))),
        }
    }
}

/// Wirtinger derivatives `(∂_z f, ∂_z̄ f)` of one output with respect to one input.
///
/// Both entries are `out_len × in_len` matrices over the flattened tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct WirtingerPair {
    pub dz: ComplexTensor,
    pub dzbar: ComplexTensor,
}

impl WirtingerPair {
    pub fn new(dz: ComplexTensor, dzbar: ComplexTensor) -> Result<Self> {
        ensure_same_shape(&dz, &dzbar)?;
        dz.matrix_dims()?;
        Ok(Self { dz, dzbar })
    }

    /// Pair for a map whose conjugate-derivative vanishes.
    pub fn holomorphic(dz: ComplexTensor) -> Self {
        let dzbar = ComplexTensor::zeros(dz.shape.clone());
        Self { dz, dzbar }
    }

    pub fn scalar(dz: ComplexScalar, dzbar: ComplexScalar) -> Self {
        Self {
            dz: ComplexTensor::new(vec![1, 1], vec![dz]).expect("1x1"),
            dzbar: ComplexTensor::new(vec![1, 1], vec![dzbar]).expect("1x1"),
        }
    }

    /// The two derivatives of a scalar-to-scalar map.
    pub fn as_scalars(&self) -> Option<(ComplexScalar, ComplexScalar)> {
        Some((self.dz.as_scalar()?, self.dzbar.as_scalar()?))
    }

    /// Latent JVP of a flattened tangent: `dz·t + dzbar·conj(t)`.
    pub fn apply(&self, tangent: &[ComplexScalar]) -> Result<Vec<ComplexScalar>> {
        let lin = self.dz.matvec_flat(tangent)?;
        let conj_t: Vec<_> = tangent.iter().map(|t| t.conj()).collect();
        let anti = self.dzbar.matvec_flat(&conj_t)?;
        Ok(lin.into_iter().zip(anti).map(|(a, b)| a + b).collect())
    }

    /// Cotangent rule in the plus convention: `conj(dz)ᵀ f̄ + dzbarᵀ conj(f̄)`.
    pub fn pull(&self, cotangent: &[ComplexScalar]) -> Result<Vec<ComplexScalar>> {
        let conj_ct: Vec<_> = cotangent.iter().map(|c| c.conj()).collect();
        // conj(dz)ᵀ f̄ = conj(dzᵀ conj(f̄))
        let first: Vec<_> = self
            .dz
            .tmatvec_flat(&conj_ct)?
            .into_iter()
            .map(|c| c.conj())
            .collect();
        let second = self.dzbar.tmatvec_flat(&conj_ct)?;
        Ok(first.into_iter().zip(second).map(|(a, b)| a + b).collect())
    }

    /// Pair of the conjugated map: `(conj(dzbar), conj(dz))`.
    pub fn conjugated(&self) -> Self {
        Self {
            dz: conjugate(&self.dzbar),
            dzbar: conjugate(&self.dz),
        }
    }
}

/// Parses the complex literal format: `a`, `bi`, `a+bi`, `a-bi`, with `i`
/// alone meaning `1i`. Whitespace is ignored.
pub fn parse_complex(text: &str) -> Result<ComplexScalar> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Literal(format!("invalid complex literal `{}`", text.trim()));
    if s.is_empty() {
        return Err(bad());
    }
    let bytes = s.as_bytes();
    // Split before the last sign that is neither leading nor part of an exponent.
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re_part, im_part) = match split {
        Some(k) => (&s[..k], &s[k..]),
        None => ("", &s[..]),
    };
    let parse_real = |t: &str| -> Result<f64> {
        if t.is_empty() || t.contains(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E') {
            return Err(bad());
        }
        t.parse::<f64>().map_err(|_| bad())
    };
    let parse_imag = |t: &str| -> Result<f64> {
        let coeff = t.strip_suffix('i').ok_or_else(bad)?;
        match coeff {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            c => parse_real(c),
        }
    };
    let z = if split.is_none() {
        if im_part.ends_with('i') {
            ComplexScalar::new(0.0, parse_imag(im_part)?)
        } else {
            ComplexScalar::new(parse_real(im_part)?, 0.0)
        }
    } else {
        ComplexScalar::new(parse_real(re_part)?, parse_imag(im_part)?)
    };
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(bad());
    }
    Ok(z)
}

/// Formats a complex number as `a` (real) or `a+bi` / `a-bi`, using the
/// shortest decimal that round-trips. Negative zeros print as `0`.
pub fn format_complex(z: ComplexScalar) -> String {
    let re = if z.re == 0.0 { 0.0 } else { z.re };
    if z.im == 0.0 {
        return format!("{re}");
    }
    let sign = if z.im < 0.0 { '-' } else { '+' };
    format!("{re}{sign}{}i", z.im.abs())
}

/// Formats a tensor: scalars as a literal, vectors as `[a, b]`, matrices as
/// `[[a, b], [c, d]]`.
pub fn format_tensor(t: &ComplexTensor) -> String {
    let row = |xs: &[ComplexScalar]| {
        let items: Vec<_> = xs.iter().map(|&z| format_complex(z)).collect();
        format!("[{}]", items.join(", "))
    };
    match t.shape[..] {
        [] => format_complex(t.data[0]),
        [_] => row(&t.data),
        [_, n] => {
            let rows: Vec<_> = t.data.chunks(n.max(1)).map(row).collect();
            format!("[{}]", rows.join(", "))
        }
        _ => unreachable!("rank is at most 2"),
    }
}

impl fmt::Display for ComplexTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_tensor(self))
    }
}
