//! Discrete `H` and `V` inner products: cell-volume weighted midpoint sums,
//! gradients from the spectral horizontal derivative and interior-face
//! vertical differences, and the surface trace taken at the top cell.

use crate::domain::Domain;
use crate::error::Result;
use crate::field::{check_dims, ScalarField, State};
use crate::grid::Grid;
use crate::params::PhysParams;
use crate::vertical::interior_face_gradient;

/// `(a, b)_{L^2}`
pub fn l2_inner(a: &ScalarField, b: &ScalarField, grid: &Grid) -> f64 {
    let s: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum();
    s * grid.cell_volume()
}

/// `(grad a, grad b)_{L^2}` with the discrete gradient of the `V` norm.
pub fn gradient_inner(a: &ScalarField, b: &ScalarField, domain: &Domain) -> f64 {
    let grid = domain.grid();
    let sp = domain.spectral();
    let ga = sp.grad_h(a);
    let gb = if std::ptr::eq(a, b) { ga.clone() } else { sp.grad_h(b) };
    let horiz = l2_inner(&ga.x, &gb.x, grid) + l2_inner(&ga.y, &gb.y, grid);
    let za = interior_face_gradient(a, grid.dz());
    let zb = interior_face_gradient(b, grid.dz());
    let vert: f64 = za.iter().zip(&zb).map(|(x, y)| x * y).sum::<f64>() * grid.cell_volume();
    horiz + vert
}

/// `(a, b)_{L^2(Gamma_u)}` using the top-cell values as the trace.
pub fn surface_inner(a: &ScalarField, b: &ScalarField, grid: &Grid) -> f64 {
    let top = grid.nz() - 1;
    let s: f64 = a.layer(top).iter().zip(b.layer(top)).map(|(x, y)| x * y).sum();
    s * grid.cell_area()
}

/// `(U, U')_H = (v, v')_{H1} + (T, T')_{H2} + (S, S')_{H3}`
pub fn inner_h(u: &State, w: &State, grid: &Grid) -> Result<f64> {
    u.check_dims(grid.dims())?;
    check_dims(u.dims(), w.dims())?;
    Ok(u.components()
        .iter()
        .zip(w.components())
        .map(|(a, b)| l2_inner(a, b, grid))
        .sum())
}

/// `(U, U')_V`; the temperature part carries `(alpha_T/nu_T)(T, T')_{Gamma_u}`.
pub fn inner_v(u: &State, w: &State, domain: &Domain, params: &PhysParams) -> Result<f64> {
    u.check_dims(domain.dims())?;
    check_dims(u.dims(), w.dims())?;
    let grid = domain.grid();
    let mut total = 0.0;
    for (a, b) in u.components().iter().zip(w.components()) {
        total += gradient_inner(a, b, domain);
    }
    total += params.alpha_t / params.nu_t * surface_inner(&u.temp, &w.temp, grid);
    Ok(total)
}

pub fn norm_h(u: &State, grid: &Grid) -> f64 {
    inner_h(u, u, grid).map(f64::sqrt).unwrap_or(f64::NAN)
}

pub fn norm_v(u: &State, domain: &Domain, params: &PhysParams) -> f64 {
    inner_v(u, u, domain, params)
        .map(|v| v.max(0.0).sqrt())
        .unwrap_or(f64::NAN)
}
