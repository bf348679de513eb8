//! Cell-centred discrete fields and the prognostic state.

use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::error::{Error, Result};
use crate::grid::{Dims, Grid};

/// Real samples at cell centres, x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    dims: Dims,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(dims: Dims) -> Self {
        Self::constant(dims, 0.0)
    }

    pub fn constant(dims: Dims, value: f64) -> Self {
        ScalarField {
            dims,
            data: vec![value; dims.len()],
        }
    }

    pub fn from_vec(dims: Dims, data: Vec<f64>) -> Result<Self> {
        if data.len() != dims.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} samples for {:?}, got {}",
                dims.len(),
                dims,
                data.len()
            )));
        }
        Ok(ScalarField { dims, data })
    }

    /// Samples `f(x, y, z)` at the cell centres of `grid`.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut(f64, f64, f64) -> f64) -> Self {
        let d = grid.dims();
        let mut data = Vec::with_capacity(d.len());
        for &z in grid.z_centers() {
            for j in 0..d.ny {
                for i in 0..d.nx {
                    data.push(f(grid.x(i), grid.y(j), z));
                }
            }
        }
        ScalarField { dims: d, data }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }
    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.dims.idx(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let n = self.dims.idx(i, j, k);
        self.data[n] = v;
    }

    pub fn layer(&self, k: usize) -> &[f64] {
        let n = self.dims.layer();
        &self.data[k * n..(k + 1) * n]
    }

    pub fn layer_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.dims.layer();
        &mut self.data[k * n..(k + 1) * n]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            dims: self.dims,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.dims, other.dims);
        ScalarField {
            dims: self.dims,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        debug_assert_eq!(self.dims, other.dims);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn check_dims(&self, dims: Dims) -> Result<()> {
        check_dims(dims, self.dims)
    }
}

pub(crate) fn check_dims(expected: Dims, found: Dims) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::GridMismatch { expected, found })
    }
}

impl AddAssign<&ScalarField> for ScalarField {
    fn add_assign(&mut self, rhs: &ScalarField) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&ScalarField> for ScalarField {
    fn sub_assign(&mut self, rhs: &ScalarField) {
        self.axpy(-1.0, rhs);
    }
}

impl MulAssign<f64> for ScalarField {
    fn mul_assign(&mut self, rhs: f64) {
        self.data.iter_mut().for_each(|v| *v *= rhs);
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: f64) -> ScalarField {
        self.map(|a| a * rhs)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.map(|a| -a)
    }
}

macro_rules! vector_field {
    ($(#[$meta:meta])* $name:ident { $($c:ident),+ }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            $(pub $c: ScalarField,)+
        }

        impl $name {
            pub fn zeros(dims: Dims) -> Self {
                $name { $($c: ScalarField::zeros(dims),)+ }
            }

            pub fn dims(&self) -> Dims {
                vector_field!(@first self $($c)+).dims()
            }

            pub fn components(&self) -> Vec<&ScalarField> {
                vec![$(&self.$c,)+]
            }

            pub fn axpy(&mut self, alpha: f64, other: &Self) {
                $(self.$c.axpy(alpha, &other.$c);)+
            }

            pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
                $name { $($c: f(&self.$c),)+ }
            }

            pub fn max_abs(&self) -> f64 {
                0.0f64 $(.max(self.$c.max_abs()))+
            }

            pub fn is_finite(&self) -> bool {
                true $(&& self.$c.is_finite())+
            }
        }

        impl AddAssign<&$name> for $name {
            fn add_assign(&mut self, rhs: &$name) {
                self.axpy(1.0, rhs);
            }
        }

        impl SubAssign<&$name> for $name {
            fn sub_assign(&mut self, rhs: &$name) {
                self.axpy(-1.0, rhs);
            }
        }

        impl MulAssign<f64> for $name {
            fn mul_assign(&mut self, rhs: f64) {
                $(self.$c *= rhs;)+
            }
        }

        impl Add for &$name {
            type Output = $name;
            fn add(self, rhs: &$name) -> $name {
                $name { $($c: &self.$c + &rhs.$c,)+ }
            }
        }

        impl Sub for &$name {
            type Output = $name;
            fn sub(self, rhs: &$name) -> $name {
                $name { $($c: &self.$c - &rhs.$c,)+ }
            }
        }

        impl Mul<f64> for &$name {
            type Output = $name;
            fn mul(self, rhs: f64) -> $name {
                $name { $($c: &self.$c * rhs,)+ }
            }
        }
    };
    (@first $s:ident $c:ident $($rest:ident)*) => { $s.$c };
}

vector_field!(
    /// Horizontal 2-vector field `(x, y)`.
    HVecField { x, y }
);

vector_field!(
    /// 3-vector field `(x, y, z)`.
    Vec3Field { x, y, z }
);

vector_field!(
    /// Symmetric 3x3 tensor field stored by its six independent entries, so
    /// `a = a^T` holds exactly at every point.
    TensorField { xx, xy, xz, yy, yz, zz }
);

impl Vec3Field {
    pub fn horizontal(&self) -> HVecField {
        HVecField {
            x: self.x.clone(),
            y: self.y.clone(),
        }
    }

    /// Value at linear index `n`.
    #[inline]
    pub fn at(&self, n: usize) -> [f64; 3] {
        [
            self.x.as_slice()[n],
            self.y.as_slice()[n],
            self.z.as_slice()[n],
        ]
    }
}

impl TensorField {
    /// Entry `(row, col)` as a field, `row, col` in `0..3`.
    pub fn entry(&self, row: usize, col: usize) -> &ScalarField {
        match (row.min(col), row.max(col)) {
            (0, 0) => &self.xx,
            (0, 1) => &self.xy,
            (0, 2) => &self.xz,
            (1, 1) => &self.yy,
            (1, 2) => &self.yz,
            (2, 2) => &self.zz,
            _ => panic!("tensor index ({row}, {col}) out of range"),
        }
    }

    /// Full matrix at linear index `n`.
    pub fn matrix_at(&self, n: usize) -> [[f64; 3]; 3] {
        let g = |f: &ScalarField| f.as_slice()[n];
        let (xx, xy, xz, yy, yz, zz) = (
            g(&self.xx),
            g(&self.xy),
            g(&self.xz),
            g(&self.yy),
            g(&self.yz),
            g(&self.zz),
        );
        [[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]]
    }

    /// `a g` pointwise.
    pub fn apply(&self, g: &Vec3Field) -> Vec3Field {
        let d = self.dims();
        let mut out = Vec3Field::zeros(d);
        for n in 0..d.len() {
            let m = self.matrix_at(n);
            let v = g.at(n);
            out.x.as_mut_slice()[n] = m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2];
            out.y.as_mut_slice()[n] = m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2];
            out.z.as_mut_slice()[n] = m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2];
        }
        out
    }

    /// Adds `scale * phi phi^T` pointwise.
    pub fn add_outer(&mut self, scale: f64, phi: &Vec3Field) {
        let d = self.dims();
        for n in 0..d.len() {
            let [a, b, c] = phi.at(n);
            self.xx.as_mut_slice()[n] += scale * a * a;
            self.xy.as_mut_slice()[n] += scale * a * b;
            self.xz.as_mut_slice()[n] += scale * a * c;
            self.yy.as_mut_slice()[n] += scale * b * b;
            self.yz.as_mut_slice()[n] += scale * b * c;
            self.zz.as_mut_slice()[n] += scale * c * c;
        }
    }
}

/// Prognostic state `U* = (v*, T, S)` plus the simulation clock.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub v_star: HVecField,
    pub temp: ScalarField,
    pub salt: ScalarField,
    pub t: f64,
    pub step_index: u64,
}

impl State {
    pub fn zeros(dims: Dims) -> Self {
        State {
            v_star: HVecField::zeros(dims),
            temp: ScalarField::zeros(dims),
            salt: ScalarField::zeros(dims),
            t: 0.0,
            step_index: 0,
        }
    }

    pub fn dims(&self) -> Dims {
        self.temp.dims()
    }

    pub fn components(&self) -> [&ScalarField; 4] {
        [&self.v_star.x, &self.v_star.y, &self.temp, &self.salt]
    }

    pub fn check_dims(&self, dims: Dims) -> Result<()> {
        for c in self.components() {
            c.check_dims(dims)?;
        }
        Ok(())
    }

    /// `self - other` in the prognostic variables; the clock is taken from `self`.
    pub fn difference(&self, other: &State) -> State {
        State {
            v_star: &self.v_star - &other.v_star,
            temp: &self.temp - &other.temp,
            salt: &self.salt - &other.salt,
            t: self.t,
            step_index: self.step_index,
        }
    }

    /// First non-finite component name, if any.
    pub fn non_finite_component(&self) -> Option<&'static str> {
        let names = ["v_star.x", "v_star.y", "temp", "salt"];
        self.components()
            .iter()
            .zip(names)
            .find(|(c, _)| !c.is_finite())
            .map(|(_, n)| n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn dims() -> Dims {
        Dims { nx: 4, ny: 2, nz: 3 }
    }

    #[test]
    fn x_fastest_layout() {
        let g = make_grid(4, 2, 3, 4.0, 2.0, 3.0).unwrap();
        let f = ScalarField::from_fn(&g, |x, y, z| x + 10.0 * y + 100.0 * z);
        assert_eq!(f.get(1, 0, 0), 1.0 + 100.0 * -2.5);
        assert_eq!(f.as_slice()[1], f.get(1, 0, 0));
        assert_eq!(f.as_slice()[4], f.get(0, 1, 0));
        assert_eq!(f.as_slice()[8], f.get(0, 0, 1));
        assert_eq!(f.layer(2).len(), 8);
    }

    #[test]
    fn algebra() {
        let a = ScalarField::constant(dims(), 2.0);
        let b = ScalarField::constant(dims(), 3.0);
        assert_eq!((&a + &b).as_slice()[5], 5.0);
        assert_eq!((&a - &b).as_slice()[5], -1.0);
        assert_eq!((&a * 4.0).as_slice()[0], 8.0);
        let mut c = a.clone();
        c.axpy(2.0, &b);
        assert_eq!(c.max_abs(), 8.0);
        assert!(ScalarField::from_vec(dims(), vec![0.0; 3]).is_err());
    }

    #[test]
    fn tensor_symmetry_survives_algebra() {
        let d = dims();
        let mut phi = Vec3Field::zeros(d);
        for (n, v) in phi.x.as_mut_slice().iter_mut().enumerate() {
            *v = n as f64 * 0.1;
        }
        phi.y = ScalarField::constant(d, -1.5);
        phi.z = ScalarField::constant(d, 0.25);
        let mut a = TensorField::zeros(d);
        a.add_outer(2.0, &phi);
        let b = &(&a * 3.0) - &a;
        for n in 0..d.len() {
            let m = b.matrix_at(n);
            for r in 0..3 {
                for c in 0..3 {
                    assert_eq!(m[r][c], m[c][r]);
                }
            }
        }
        assert_eq!(b.entry(2, 0), b.entry(0, 2));
    }

    #[test]
    fn tensor_apply_matches_matrix() {
        let d = dims();
        let mut phi = Vec3Field::zeros(d);
        phi.x = ScalarField::constant(d, 1.0);
        let mut a = TensorField::zeros(d);
        a.add_outer(1.0, &phi);
        let mut g = Vec3Field::zeros(d);
        g.x = ScalarField::constant(d, 2.0);
        g.y = ScalarField::constant(d, 5.0);
        let out = a.apply(&g);
        assert_eq!(out.x.as_slice()[0], 2.0);
        assert_eq!(out.y.max_abs(), 0.0);
    }
}
