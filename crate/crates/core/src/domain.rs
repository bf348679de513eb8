use nalgebra::{DMatrix, SymmetricEigen};

use crate::field::ScalarField;
use crate::grid::{Dims, Grid};
use crate::spectral::Spectral;
use crate::vertical::{centered_dz, Ghost};

/// Grid plus the immutable transform plans and column factorisations shared
/// by every operator. Cheap to share across threads by reference.
#[derive(Debug, Clone)]
pub struct Domain {
    grid: Grid,
    spectral: Spectral,
    vertical: VerticalEigen,
}

/// Eigendecomposition of `G_z^T G_z`, used to invert the 3D discrete
/// Laplacian `div3 grad3` column by column.
#[derive(Debug, Clone)]
pub(crate) struct VerticalEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl Domain {
    pub fn new(grid: Grid) -> Self {
        let spectral = Spectral::new(&grid);
        let vertical = VerticalEigen::new(grid.nz(), grid.dz());
        Domain {
            grid,
            spectral,
            vertical,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn dims(&self) -> Dims {
        self.grid.dims()
    }
    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }
    pub(crate) fn vertical_eigen(&self) -> &VerticalEigen {
        &self.vertical
    }
    pub fn dz(&self) -> f64 {
        self.grid.dz()
    }
}

impl VerticalEigen {
    fn new(nz: usize, dz: f64) -> Self {
        let dims = Dims { nx: 1, ny: 1, nz };
        let mut g = DMatrix::zeros(nz, nz);
        for col in 0..nz {
            let mut e = vec![0.0; nz];
            e[col] = 1.0;
            let unit = ScalarField::from_vec(dims, e).expect("shape");
            let ge = centered_dz(&unit, dz, Ghost::Even, Ghost::Even);
            for row in 0..nz {
                g[(row, col)] = ge.as_slice()[row];
            }
        }
        let gtg = g.transpose() * &g;
        let eig = SymmetricEigen::new(gtg);
        VerticalEigen {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }
}
