//! Dense real linear algebra for small symmetric and SPD matrices:
//! Cholesky, cyclic Jacobi eigendecomposition, characteristic
//! polynomials (Vieta and Faddeev–LeVerrier), symmetric-polynomial
//! kernels and seeded random SPD generation.

mod cholesky;
mod dd;
mod dense;
mod eigen;
mod poly;
mod random;

pub use cholesky::{cholesky, solve_spd};
pub use dense::{Matrix, SpdMatrix, SymmetricMatrix};
pub use eigen::{is_psd, sym_eigen, Spectrum, MAX_SWEEPS, OFF_DIAGONAL_TOL};
pub(crate) use dd::DdMatrix;
pub(crate) use eigen::{refined_eigenvalues, sym_eigenvalues_in_place};
pub(crate) use poly::eval_char_poly_at;
pub use poly::{
    char_poly_faddeev, char_poly_from_spectrum, elem_sym_polys, eval_poly, power_sums,
    CharPolyCoeffs,
};
pub(crate) use poly::{char_poly_from_values, elem_sym_with_unit};
pub use random::{gaussian_matrix, random_orthogonal, random_spd, rng_stream};
