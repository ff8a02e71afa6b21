//! Finite-difference ground truth.
//!
//! Treats `f: ℂⁿ → ℂᵐ` as a real map `(x, y) ↦ (u, v)` and estimates its four
//! Jacobian blocks by central differences. The JVP and VJP oracles then use
//! only real linear algebra on those blocks, independently of the Wirtinger
//! rules used by the engine.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::tensor::{ComplexScalar, ComplexTensor, Convention, Shape};

pub use crate::primitives::DEFAULT_FD_STEP;

/// Blocks `∂ₓu, ∂_y u, ∂ₓv, ∂_y v`, each `out_len × in_len`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentJacobian {
    pub dxu: DMatrix<f64>,
    pub dyu: DMatrix<f64>,
    pub dxv: DMatrix<f64>,
    pub dyv: DMatrix<f64>,
    input_shape: Shape,
    output_shape: Shape,
}

impl LatentJacobian {
    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn output_shape(&self) -> &[usize] {
        &self.output_shape
    }

    /// The full real Jacobian `[[∂ₓu, ∂_y u], [∂ₓv, ∂_y v]]`.
    pub fn stacked(&self) -> DMatrix<f64> {
        let (m, n) = self.dxu.shape();
        let mut j = DMatrix::zeros(2 * m, 2 * n);
        j.view_mut((0, 0), (m, n)).copy_from(&self.dxu);
        j.view_mut((0, n), (m, n)).copy_from(&self.dyu);
        j.view_mut((m, 0), (m, n)).copy_from(&self.dxv);
        j.view_mut((m, n), (m, n)).copy_from(&self.dyv);
        j
    }

    /// `∂_z̄ f = ½(Dₓ + i D_y)` with `Dₓ = ∂ₓu + i ∂ₓv`, `D_y = ∂_y u + i ∂_y v`.
    pub fn dzbar(&self) -> ComplexTensor {
        let (m, n) = self.dxu.shape();
        let mut data = Vec::with_capacity(m * n);
        for r in 0..m {
            for k in 0..n {
                let re = 0.5 * (self.dxu[(r, k)] - self.dyv[(r, k)]);
                let im = 0.5 * (self.dxv[(r, k)] + self.dyu[(r, k)]);
                data.push(ComplexScalar::new(re, im));
            }
        }
        ComplexTensor::new(vec![m, n], data).expect("block shape")
    }

    /// `∂_z f = ½(Dₓ − i D_y)`.
    pub fn dz(&self) -> ComplexTensor {
        let (m, n) = self.dxu.shape();
        let mut data = Vec::with_capacity(m * n);
        for r in 0..m {
            for k in 0..n {
                let re = 0.5 * (self.dxu[(r, k)] + self.dyv[(r, k)]);
                let im = 0.5 * (self.dxv[(r, k)] - self.dyu[(r, k)]);
                data.push(ComplexScalar::new(re, im));
            }
        }
        ComplexTensor::new(vec![m, n], data).expect("block shape")
    }
}

fn stencil_value(graph: &Graph, z: &ComplexTensor) -> Result<ComplexTensor> {
    let out = graph.eval(z).map_err(|e| match e {
        Error::Domain { .. } | Error::NonFinite(_) => {
            Error::NonFinite(format!("finite-difference stencil left the domain: {e}"))
        }
        other => other,
    })?;
    if !out.is_finite() {
        return Err(Error::NonFinite(
            "non-finite value inside the stencil".into(),
        ));
    }
    Ok(out)
}

/// Central-difference estimate of the real Jacobian blocks of `graph` at `z`.
pub fn latent_jacobian_fd(graph: &Graph, z: &ComplexTensor, h: f64) -> Result<LatentJacobian> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {h}"
        )));
    }
    let center = graph.eval(z)?;
    let (m, n) = (center.len(), z.len());
    let mut blocks = [
        DMatrix::zeros(m, n),
        DMatrix::zeros(m, n),
        DMatrix::zeros(m, n),
        DMatrix::zeros(m, n),
    ];
    let shifted = |k: usize, delta: ComplexScalar| -> Result<ComplexTensor> {
        let mut data = z.data().to_vec();
        data[k] += delta;
        stencil_value(graph, &ComplexTensor::new(z.shape().to_vec(), data)?)
    };
    for k in 0..n {
        let xp = shifted(k, ComplexScalar::new(h, 0.0))?;
        let xm = shifted(k, ComplexScalar::new(-h, 0.0))?;
        let yp = shifted(k, ComplexScalar::new(0.0, h))?;
        let ym = shifted(k, ComplexScalar::new(0.0, -h))?;
        for r in 0..m {
            let dx = (xp.data()[r] - xm.data()[r]) / (2.0 * h);
            let dy = (yp.data()[r] - ym.data()[r]) / (2.0 * h);
            blocks[0][(r, k)] = dx.re;
            blocks[1][(r, k)] = dy.re;
            blocks[2][(r, k)] = dx.im;
            blocks[3][(r, k)] = dy.im;
        }
    }
    let [dxu, dyu, dxv, dyv] = blocks;
    Ok(LatentJacobian {
        dxu,
        dyu,
        dxv,
        dyv,
        input_shape: z.shape().to_vec(),
        output_shape: center.shape().to_vec(),
    })
}

/// `(1, i) · J · (x′, y′)`.
pub fn latent_jvp_oracle(jac: &LatentJacobian, tangent: &ComplexTensor) -> Result<ComplexTensor> {
    if tangent.shape() != jac.input_shape() {
        return Err(Error::Shape(format!(
            "tangent shape {:?} does not match input shape {:?}",
            tangent.shape(),
            jac.input_shape()
        )));
    }
    let n = tangent.len();
    let mut stacked = DVector::zeros(2 * n);
    for (k, t) in tangent.data().iter().enumerate() {
        stacked[k] = t.re;
        stacked[n + k] = t.im;
    }
    let out = jac.stacked() * stacked;
    let m = out.len() / 2;
    let data = (0..m)
        .map(|r| ComplexScalar::new(out[r], out[m + r]))
        .collect();
    ComplexTensor::new(jac.output_shape().to_vec(), data)
}

/// Transposes the real Jacobian against the split cotangent.
///
/// Plus: `f̄ = ū + i v̄` and `z̄ = x̄ + i ȳ`. Minus: `f̄ = ū − i v̄` and
/// `z̄ = x̄ − i ȳ`.
pub fn latent_vjp_oracle(
    jac: &LatentJacobian,
    cotangent: &ComplexTensor,
    conv: Convention,
) -> Result<ComplexTensor> {
    if cotangent.shape() != jac.output_shape() {
        return Err(Error::Shape(format!(
            "cotangent shape {:?} does not match output shape {:?}",
            cotangent.shape(),
            jac.output_shape()
        )));
    }
    let sign = match conv {
        Convention::Plus => 1.0,
        Convention::Minus => -1.0,
    };
    let m = cotangent.len();
    let mut stacked = DVector::zeros(2 * m);
    for (r, f) in cotangent.data().iter().enumerate() {
        stacked[r] = f.re;
        stacked[m + r] = sign * f.im;
    }
    let back = jac.stacked().transpose() * stacked;
    let n = back.len() / 2;
    let data = (0..n)
        .map(|k| ComplexScalar::new(back[k], sign * back[n + k]))
        .collect();
    ComplexTensor::new(jac.input_shape().to_vec(), data)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolomorphicityReport {
    /// True iff `dzbar_norm ≤ tol`. Says nothing about other points.
    pub is_holomorphic: bool,
    /// Largest modulus among the entries of the estimated `∂_z̄ f`.
    pub dzbar_norm: f64,
}

/// Pointwise test of `∂_z̄ f = 0` using the finite-difference blocks.
pub fn holomorphicity_check(
    graph: &Graph,
    z: &ComplexTensor,
    tol: f64,
    h: f64,
) -> Result<HolomorphicityReport> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let jac = latent_jacobian_fd(graph, z, h)?;
    let dzbar_norm = jac.dzbar().max_abs();
    Ok(HolomorphicityReport {
        is_holomorphic: dzbar_norm <= tol,
        dzbar_norm,
    })
}
