use nalgebra::DMatrix;

use super::{GraphFunction, Jet};
use crate::error::{Error, Result};

/// Levels with `min |Df|` below this are treated as critical.
pub const GRADIENT_FLOOR: f64 = 1e-6;

fn checked_jet(f: &dyn GraphFunction, x: &[f64], order: usize) -> Result<Jet> {
    if order > f.max_order() {
        return Err(Error::DerivativeOrder { requested: order, available: f.max_order() });
    }
    f.jet(&x[..f.dim().get()], order)
}

/// Scalar curvature of the graph as the divergence of
/// `(Δf Df - D²f Df) / (1 + |Df|²)`, differentiated term by term.
pub fn scalar_curvature_reilly(f: &dyn GraphFunction, x: &[f64]) -> Result<f64> {
    Ok(reilly_from_jet(&checked_jet(f, x, 3)?))
}

pub fn reilly_from_jet(j: &Jet) -> f64 {
    let n = j.n;
    let w = 1.0 + j.grad_sq();
    let lap = j.laplacian();
    let mut total = 0.0;
    for jj in 0..n {
        let mut hf = 0.0; // (D²f Df)_j
        let mut d_lap = 0.0; // ∂_j Δf
        let mut d_hf = 0.0; // ∂_j (D²f Df)_j
        let mut dw = 0.0;
        for i in 0..n {
            hf += j.hess[i][jj] * j.grad[i];
            d_lap += j.third[i][i][jj];
            d_hf += j.third[i][jj][jj] * j.grad[i] + j.hess[i][jj] * j.hess[i][jj];
            dw += 2.0 * j.grad[i] * j.hess[i][jj];
        }
        let v = lap * j.grad[jj] - hf;
        let dv = d_lap * j.grad[jj] + lap * j.hess[jj][jj] - d_hf;
        total += dv / w - v * dw / (w * w);
    }
    total
}

/// Shape operator `g^{-1} h` of the graph with upward normal `(-Df, 1)/√(1+|Df|²)`.
pub fn shape_operator(f: &dyn GraphFunction, x: &[f64]) -> Result<DMatrix<f64>> {
    shape_from_jet(&checked_jet(f, x, 2)?)
}

pub fn shape_from_jet(j: &Jet) -> Result<DMatrix<f64>> {
    let n = j.n;
    let w = 1.0 + j.grad_sq();
    let g = DMatrix::from_fn(n, n, |a, b| (a == b) as u8 as f64 + j.grad[a] * j.grad[b]);
    let h = DMatrix::from_fn(n, n, |a, b| j.hess[a][b] / w.sqrt());
    let chol = g.cholesky().ok_or(Error::SingularMetric)?;
    Ok(chol.solve(&h))
}

/// Scalar curvature from the Gauss equation `R = (tr A)² - tr(A²)`.
pub fn scalar_curvature_gauss(f: &dyn GraphFunction, x: &[f64]) -> Result<f64> {
    gauss_from_jet(&checked_jet(f, x, 2)?)
}

pub fn gauss_from_jet(j: &Jet) -> Result<f64> {
    let a = shape_from_jet(j)?;
    let tr = a.trace();
    Ok(tr * tr - (&a * &a).trace())
}

/// Mean curvature `div(Df/√(1+|Df|²))`; positive when the mean curvature vector points up.
pub fn graph_mean_curvature(f: &dyn GraphFunction, x: &[f64]) -> Result<f64> {
    Ok(graph_h_from_jet(&checked_jet(f, x, 2)?))
}

pub fn graph_h_from_jet(j: &Jet) -> f64 {
    let w = 1.0 + j.grad_sq();
    (j.laplacian() - hess_along_grad(j) / w) / w.sqrt()
}

/// Mean curvature of the level set through `x` inside the hyperplane,
/// w.r.t. the normal `-Df/|Df|`; round spheres give `(n-1)/r`.
pub fn levelset_mean_curvature(f: &dyn GraphFunction, x: &[f64]) -> Result<f64> {
    levelset_h_from_jet(&checked_jet(f, x, 2)?)
}

pub fn levelset_h_from_jet(j: &Jet) -> Result<f64> {
    let g2 = j.grad_sq();
    let g = g2.sqrt();
    if g < GRADIENT_FLOOR {
        return Err(Error::CriticalValue { h: j.value, min_gradient: g });
    }
    Ok((j.laplacian() - hess_along_grad(j) / g2) / g)
}

fn hess_along_grad(j: &Jet) -> f64 {
    let mut s = 0.0;
    for a in 0..j.n {
        for b in 0..j.n {
            s += j.grad[a] * j.grad[b] * j.hess[a][b];
        }
    }
    s
}
