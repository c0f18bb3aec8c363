//! Smallest eigenvalues of Hermitian generalized pencils A x = lambda B x.
//!
//! Below the dense threshold the pencil is folded into a standard Hermitian
//! problem and solved completely; above it a block LOBPCG iteration with a
//! Jacobi preconditioner finds the smallest block. Either way the reported
//! pairs are B-normalized and carry a posteriori residuals.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{DecError, Result};
use crate::sparse::CsrMatrix;

type C64 = Complex64;
type Operator = CsrMatrix<C64>;

#[derive(Debug, Clone)]
pub struct EigOptions {
    /// Residual tolerance for reported pairs.
    pub tol: f64,
    /// Problems at or below this size are solved densely.
    pub dense_threshold: usize,
    /// Iteration budget for the LOBPCG path.
    pub max_iter: usize,
    /// Discard eigenvalues below this value before selecting the smallest k
    /// (used to drop kernel modes and, for indefinite pencils, the mirrored
    /// negative branch).
    pub drop_below: Option<f64>,
    /// Seed for the iterative path's starting block.
    pub seed: u64,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            dense_threshold: 2500,
            max_iter: 10_000,
            drop_below: None,
            seed: 0x5eed,
        }
    }
}

/// Eigenvalues (ascending), B-normalized eigenvectors and residuals
/// ||A x - lambda B x|| / ||x||.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<C64>>,
    pub residuals: Vec<f64>,
}

/// The k smallest eigenvalues of A x = lambda B x for Hermitian A and
/// positive-definite B.
pub fn eigs_smallest(a: &Operator, b: &Operator, k: usize, opts: &EigOptions) -> Result<Spectrum> {
    let n = a.rows();
    if a.cols() != n || b.rows() != n || b.cols() != n {
        return Err(DecError::Assembly(format!(
            "pencil shapes {}x{} and {}x{} must agree and be square",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let scale = a.max_modulus().max(1e-300);
    let defect = a.hermitian_defect();
    if defect > 1e-10 * scale {
        return Err(DecError::Assembly(format!(
            "A is not Hermitian: defect {defect:.3e} vs scale {scale:.3e}"
        )));
    }
    if b.hermitian_defect() > 1e-10 * b.max_modulus().max(1e-300) {
        return Err(DecError::Assembly("B is not Hermitian".into()));
    }
    if k == 0 || n == 0 {
        return Ok(Spectrum {
            eigenvalues: vec![],
            eigenvectors: vec![],
            residuals: vec![],
        });
    }

    if !b.is_diagonal() {
        return eigs_dense_general(a, b, k, opts);
    }
    let diag = b.diagonal();
    let mut scale_vec = Vec::with_capacity(n);
    for (i, v) in diag.iter().enumerate() {
        if v.re <= 0.0 || v.im.abs() > 1e-12 * v.re.abs().max(1e-300) {
            return Err(DecError::NonPositiveMass {
                index: i,
                value: v.re,
            });
        }
        scale_vec.push(C64::new(1.0 / v.re.sqrt(), 0.0));
    }
    // fold the diagonal mass: C = B^{-1/2} A B^{-1/2}
    let c = a.scale_rows(&scale_vec).scale_cols(&scale_vec);

    let (values, vectors_y) = if n <= opts.dense_threshold {
        dense_hermitian_all(&c)?
    } else {
        lobpcg_smallest(&c, k, opts)?
    };

    // sort ascending, filter, select
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    let mut eigenvalues = Vec::new();
    let mut eigenvectors = Vec::new();
    for &i in &order {
        if let Some(floor) = opts.drop_below {
            if values[i] < floor {
                continue;
            }
        }
        // back-transform x = B^{-1/2} y; with ||y|| = 1 this is B-normalized
        let x: Vec<C64> = vectors_y[i]
            .iter()
            .zip(&scale_vec)
            .map(|(&y, &s)| y * s)
            .collect();
        eigenvalues.push(values[i]);
        eigenvectors.push(x);
        if eigenvalues.len() == k {
            break;
        }
    }

    let residuals = pencil_residuals(a, b, &eigenvalues, &eigenvectors);
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if worst > opts.tol {
        return Err(DecError::Convergence {
            iterations: 0,
            worst_residual: worst,
            tolerance: opts.tol,
        });
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        residuals,
    })
}

fn pencil_residuals(
    a: &Operator,
    b: &Operator,
    values: &[f64],
    vectors: &[Vec<C64>],
) -> Vec<f64> {
    values
        .iter()
        .zip(vectors)
        .map(|(&lam, x)| {
            let ax = a.matvec(x);
            let bx = b.matvec(x);
            let mut num = 0.0;
            for i in 0..x.len() {
                num += (ax[i] - C64::new(lam, 0.0) * bx[i]).norm_sqr();
            }
            let xn: f64 = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            num.sqrt() / xn.max(1e-300)
        })
        .collect()
}

/// Full dense Hermitian eigendecomposition; dispatches to a real solve when
/// the matrix has no imaginary part.
fn dense_hermitian_all(c: &Operator) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let n = c.rows();
    let imag_scale = c.max_imag();
    if imag_scale <= 1e-13 * c.max_modulus().max(1e-300) {
        let m = c.to_dense_real();
        let se = nalgebra::SymmetricEigen::new(m);
        let values: Vec<f64> = se.eigenvalues.iter().copied().collect();
        let vectors = (0..values.len())
            .map(|j| {
                (0..n)
                    .map(|i| C64::new(se.eigenvectors[(i, j)], 0.0))
                    .collect()
            })
            .collect();
        Ok((values, vectors))
    } else {
        let m = c.to_dense();
        let se = nalgebra::SymmetricEigen::new(m);
        let values: Vec<f64> = se.eigenvalues.iter().copied().collect();
        let vectors = (0..values.len())
            .map(|j| (0..n).map(|i| se.eigenvectors[(i, j)]).collect())
            .collect();
        Ok((values, vectors))
    }
}

/// Dense path for a non-diagonal mass matrix via its Cholesky factor.
fn eigs_dense_general(a: &Operator, b: &Operator, k: usize, opts: &EigOptions) -> Result<Spectrum> {
    let n = a.rows();
    if n > opts.dense_threshold {
        return Err(DecError::Assembly(
            "iterative solves require a diagonal mass matrix".into(),
        ));
    }
    let bd = b.to_dense();
    let chol = bd.cholesky().ok_or(DecError::NonPositiveMass {
        index: 0,
        value: f64::NAN,
    })?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| DecError::Assembly("singular Cholesky factor".into()))?;
    let c = &linv * a.to_dense() * linv.adjoint();
    let c = (&c + c.adjoint()) * C64::new(0.5, 0.0);
    let se = nalgebra::SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let mut eigenvalues = Vec::new();
    let mut eigenvectors: Vec<Vec<C64>> = Vec::new();
    let lt_inv = linv.adjoint();
    for &i in &order {
        let lam = se.eigenvalues[i];
        if let Some(floor) = opts.drop_below {
            if lam < floor {
                continue;
            }
        }
        let y = se.eigenvectors.column(i).into_owned();
        let x = &lt_inv * y;
        eigenvalues.push(lam);
        eigenvectors.push(x.iter().copied().collect());
        if eigenvalues.len() == k {
            break;
        }
    }
    let residuals = pencil_residuals(a, b, &eigenvalues, &eigenvectors);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        residuals,
    })
}

fn matmul_block(c: &Operator, x: &DMatrix<C64>) -> DMatrix<C64> {
    let n = c.rows();
    let cols = x.ncols();
    let mut out = DMatrix::<C64>::zeros(n, cols);
    for j in 0..cols {
        let col: Vec<C64> = x.column(j).iter().copied().collect();
        let y = c.matvec(&col);
        for i in 0..n {
            out[(i, j)] = y[i];
        }
    }
    out
}

/// Modified Gram-Schmidt, dropping columns that lose more than ten digits.
fn orthonormalize(m: &DMatrix<C64>) -> DMatrix<C64> {
    let n = m.nrows();
    let mut kept: Vec<DVector<C64>> = Vec::new();
    for j in 0..m.ncols() {
        let mut v = m.column(j).into_owned();
        let orig = v.norm();
        if orig == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &kept {
                let proj: C64 = q.dotc(&v);
                v -= q * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-10 * orig {
            kept.push(v / C64::new(norm, 0.0));
        }
    }
    let mut out = DMatrix::<C64>::zeros(n, kept.len());
    for (j, q) in kept.iter().enumerate() {
        out.set_column(j, q);
    }
    out
}

/// Locally optimal block preconditioned conjugate gradient for the smallest
/// eigenvalues of a Hermitian matrix. Deterministic given the seed.
fn lobpcg_smallest(
    c: &Operator,
    k: usize,
    opts: &EigOptions,
) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let n = c.rows();
    let block = (2 * k).max(k + 8).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = DMatrix::<C64>::zeros(n, block);
    for v in x.iter_mut() {
        *v = C64::new(rng.gen::<f64>() - 0.5, 0.0);
    }
    x = orthonormalize(&x);

    let jacobi: Vec<f64> = {
        let d = c.diagonal();
        d.iter()
            .map(|v| if v.re.abs() > 1e-300 { 1.0 / v.re } else { 1.0 })
            .collect()
    };

    let mut p: Option<DMatrix<C64>> = None;
    let mut lambda = vec![0.0; block];
    let mut worst = f64::INFINITY;
    for iter in 0..opts.max_iter {
        let cx = matmul_block(c, &x);
        // Rayleigh quotients per column
        for j in 0..x.ncols() {
            let xj = x.column(j);
            let num: C64 = xj.dotc(&cx.column(j));
            lambda[j] = num.re;
        }
        // residuals R = CX - X Lambda
        let mut r = cx.clone();
        for j in 0..x.ncols() {
            let xj = x.column(j).into_owned();
            r.column_mut(j).axpy(C64::new(-lambda[j], 0.0), &xj, C64::new(1.0, 0.0));
        }
        worst = (0..k.min(x.ncols()))
            .map(|j| r.column(j).norm() / lambda[j].abs().max(1.0))
            .fold(0.0, f64::max);
        if worst <= opts.tol {
            break;
        }
        if iter + 1 == opts.max_iter {
            return Err(DecError::Convergence {
                iterations: opts.max_iter,
                worst_residual: worst,
                tolerance: opts.tol,
            });
        }
        // preconditioned residuals
        let mut w = r.clone();
        for i in 0..n {
            for j in 0..w.ncols() {
                w[(i, j)] *= C64::new(jacobi[i], 0.0);
            }
        }
        // trial subspace [X W P]
        let mut cols: Vec<DMatrix<C64>> = vec![x.clone(), w];
        if let Some(pm) = &p {
            cols.push(pm.clone());
        }
        let total: usize = cols.iter().map(|m| m.ncols()).sum();
        let mut s = DMatrix::<C64>::zeros(n, total);
        let mut off = 0;
        for m in &cols {
            s.view_mut((0, off), (n, m.ncols())).copy_from(m);
            off += m.ncols();
        }
        let s = orthonormalize(&s);
        let cs = matmul_block(c, &s);
        let t = s.adjoint() * &cs;
        let t = (&t + t.adjoint()) * C64::new(0.5, 0.0);
        let se = nalgebra::SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..se.eigenvalues.len()).collect();
        order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
        let take = block.min(order.len());
        let mut y = DMatrix::<C64>::zeros(se.eigenvectors.nrows(), take);
        for (jj, &oi) in order.iter().take(take).enumerate() {
            y.set_column(jj, &se.eigenvectors.column(oi));
        }
        let x_new = &s * &y;
        // implicit conjugate direction: the part of the update outside X
        let xy = x.adjoint() * &x_new;
        let p_new = &x_new - &x * xy;
        x = orthonormalize(&x_new);
        let pn = orthonormalize(&p_new);
        p = if pn.ncols() > 0 { Some(pn) } else { None };
    }
    if worst > opts.tol {
        return Err(DecError::Convergence {
            iterations: opts.max_iter,
            worst_residual: worst,
            tolerance: opts.tol,
        });
    }
    // final Rayleigh quotients and vectors
    let cx = matmul_block(c, &x);
    let mut pairs: Vec<(f64, usize)> = (0..x.ncols())
        .map(|j| (x.column(j).dotc(&cx.column(j)).re, j))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let values: Vec<f64> = pairs.iter().map(|&(l, _)| l).collect();
    let vectors: Vec<Vec<C64>> = pairs
        .iter()
        .map(|&(_, j)| x.column(j).iter().copied().collect())
        .collect();
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn diag_op(vals: &[f64]) -> Operator {
        CsrMatrix::from_diag(
            &vals
                .iter()
                .map(|&v| C64::new(v, 0.0))
                .collect::<Vec<_>>(),
        )
    }

    #[test]
    fn trivial_diagonal_problem() {
        let a = diag_op(&[3.0, 1.0, 2.0]);
        let b = Operator::identity(3);
        let s = eigs_smallest(&a, &b, 2, &EigOptions::default()).unwrap();
        assert_relative_eq!(s.eigenvalues[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.eigenvalues[1], 2.0, epsilon = 1e-12);
        assert!(s.residuals.iter().all(|&r| r <= 1e-8));
    }

    #[test]
    fn one_dimensional_sine_modes() {
        // Dirichlet Laplacian on [0, pi] with 20 vertices: lambda_j ~ j^2
        let n = 20;
        let h = std::f64::consts::PI / (n as f64 - 1.0);
        let interior = n - 2;
        let mut triplets = Vec::new();
        for i in 0..interior {
            triplets.push((i, i, C64::new(2.0 / h, 0.0)));
            if i + 1 < interior {
                triplets.push((i, i + 1, C64::new(-1.0 / h, 0.0)));
                triplets.push((i + 1, i, C64::new(-1.0 / h, 0.0)));
            }
        }
        let a = CsrMatrix::from_triplets(interior, interior, triplets);
        let b = diag_op(&vec![h; interior]);
        let s = eigs_smallest(&a, &b, 4, &EigOptions::default()).unwrap();
        for (j, &lam) in s.eigenvalues.iter().enumerate() {
            let exact = ((j + 1) * (j + 1)) as f64;
            assert!(
                (lam - exact).abs() / exact < 2.0 * h * h,
                "mode {j}: {lam} vs {exact}"
            );
        }
    }

    #[test]
    fn complex_hermitian_pair() {
        let a = CsrMatrix::from_triplets(
            2,
            2,
            vec![
                (0, 0, C64::new(2.0, 0.0)),
                (0, 1, C64::new(0.0, 1.0)),
                (1, 0, C64::new(0.0, -1.0)),
                (1, 1, C64::new(2.0, 0.0)),
            ],
        );
        let b = Operator::identity(2);
        let s = eigs_smallest(&a, &b, 2, &EigOptions::default()).unwrap();
        assert_relative_eq!(s.eigenvalues[0], 1.0, epsilon = 1e-10);
        assert_relative_eq!(s.eigenvalues[1], 3.0, epsilon = 1e-10);
    }

    #[test]
    fn non_hermitian_rejected() {
        let a = CsrMatrix::from_triplets(
            2,
            2,
            vec![(0, 1, C64::new(1.0, 0.0))],
        );
        let b = Operator::identity(2);
        assert!(matches!(
            eigs_smallest(&a, &b, 1, &EigOptions::default()),
            Err(DecError::Assembly(_))
        ));
    }

    #[test]
    fn drop_below_filters_kernel() {
        let a = diag_op(&[0.0, 0.0, 5.0, 7.0]);
        let b = Operator::identity(4);
        let opts = EigOptions {
            drop_below: Some(1e-6),
            ..Default::default()
        };
        let s = eigs_smallest(&a, &b, 2, &opts).unwrap();
        assert_relative_eq!(s.eigenvalues[0], 5.0);
        assert_relative_eq!(s.eigenvalues[1], 7.0);
    }

    #[test]
    fn lobpcg_matches_dense() {
        // 2-D grid Laplacian, 30x30 interior: compare both paths
        let m = 30usize;
        let n = m * m;
        let mut triplets = Vec::new();
        for r in 0..m {
            for c in 0..m {
                let i = r * m + c;
                triplets.push((i, i, C64::new(4.0, 0.0)));
                let mut nb = |j: usize| {
                    triplets.push((i, j, C64::new(-1.0, 0.0)));
                };
                if c + 1 < m {
                    nb(i + 1);
                }
                if c > 0 {
                    nb(i - 1);
                }
                if r + 1 < m {
                    nb(i + m);
                }
                if r > 0 {
                    nb(i - m);
                }
            }
        }
        let a = CsrMatrix::from_triplets(n, n, triplets);
        let b = Operator::identity(n);
        let dense = eigs_smallest(&a, &b, 5, &EigOptions::default()).unwrap();
        let iter_opts = EigOptions {
            dense_threshold: 10,
            max_iter: 3000,
            tol: 1e-9,
            ..Default::default()
        };
        let iterative = eigs_smallest(&a, &b, 5, &iter_opts).unwrap();
        for (d, i) in dense.eigenvalues.iter().zip(&iterative.eigenvalues) {
            assert_relative_eq!(d, i, epsilon = 1e-7);
        }
    }

    #[test]
    fn nonpositive_mass_rejected() {
        let a = Operator::identity(2);
        let b = diag_op(&[1.0, -0.5]);
        assert!(matches!(
            eigs_smallest(&a, &b, 1, &EigOptions::default()),
            Err(DecError::NonPositiveMass { .. })
        ));
    }
}
