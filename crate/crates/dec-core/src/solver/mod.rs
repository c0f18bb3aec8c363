//! Operator assembly and Hermitian eigenproblems: Hodge stars and
//! derivatives collected per degree, boundary-condition masking by
//! row/column deletion, Laplace-Beltrami and Dirac-Kahler pencils, and
//! smallest-eigenvalue solves.

mod eigen;

pub use eigen::{eigs_smallest, EigOptions, Spectrum};

use num_complex::Complex64;

use crate::complex::SimplicialComplex;
use crate::error::{DecError, Result};
use crate::geometry::{Embedding, GeometryTables};
use crate::metric::MetricField;
use crate::sparse::CsrMatrix;

type C64 = Complex64;

/// Sparse operator over complex scalars.
pub type Operator = CsrMatrix<C64>;

/// Ranks of the p-simplices lying on the mesh boundary.
///
/// An (N-1)-simplex is boundary when it has exactly one top coface; a lower
/// simplex is boundary when it is a face of a boundary (N-1)-simplex. The
/// boundary of the manifold is (N-1)-dimensional, so no N-simplex is ever a
/// boundary simplex and a closed mesh yields the empty set at every degree.
pub fn boundary_simplices(complex: &SimplicialComplex, p: usize) -> Vec<usize> {
    use itertools::Itertools;
    let n = complex.dimension();
    if p > n || p == n {
        return Vec::new();
    }
    let facet_cofaces = complex.cofaces(n - 1);
    let boundary_facets: Vec<usize> = facet_cofaces
        .iter()
        .enumerate()
        .filter(|(_, c)| c.len() == 1)
        .map(|(r, _)| r)
        .collect();
    if p == n - 1 {
        return boundary_facets;
    }
    let mut ranks: Vec<usize> = boundary_facets
        .iter()
        .flat_map(|&f| {
            complex.skeleton(n - 1)[f]
                .vertices()
                .iter()
                .copied()
                .combinations(p + 1)
                .map(|combo| complex.rank(p, &combo).expect("face closure"))
                .collect::<Vec<_>>()
        })
        .collect();
    ranks.sort_unstable();
    ranks.dedup();
    ranks
}

/// Interior p-simplex ranks retained after deleting the boundary.
#[derive(Debug, Clone)]
pub struct BoundaryMask {
    pub degree: usize,
    pub interior: Vec<usize>,
}

impl BoundaryMask {
    pub fn dirichlet(complex: &SimplicialComplex, p: usize) -> Self {
        let boundary = boundary_simplices(complex, p);
        let mut flags = vec![true; complex.num_simplices(p)];
        for r in boundary {
            flags[r] = false;
        }
        Self {
            degree: p,
            interior: flags
                .iter()
                .enumerate()
                .filter(|(_, &keep)| keep)
                .map(|(r, _)| r)
                .collect(),
        }
    }

    /// The trivial mask keeping every simplex.
    pub fn none(complex: &SimplicialComplex, p: usize) -> Self {
        Self {
            degree: p,
            interior: (0..complex.num_simplices(p)).collect(),
        }
    }
}

/// Restriction of an operator to interior rows and columns.
pub fn apply_dirichlet(
    op: &Operator,
    rows: &BoundaryMask,
    cols: &BoundaryMask,
) -> Result<Operator> {
    if rows.interior.is_empty() || cols.interior.is_empty() {
        return Err(DecError::AllBoundary {
            degree: rows.degree,
        });
    }
    Ok(op.restrict(&rows.interior, &cols.interior))
}

/// Which terms of the Hodge Laplacian to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaplaceTerms {
    /// d^T star d (the (delta d) part).
    Up,
    /// star d star^{-1} d^T star (the (d delta) part).
    Down,
    /// Both.
    Full,
}

/// Everything needed to assemble operators on one mesh: the complex, its
/// embedding, the geometry tables, the per-degree derivatives and Hodge
/// diagonals.
#[derive(Debug)]
pub struct OperatorStack {
    pub complex: SimplicialComplex,
    pub embedding: Embedding,
    pub geometry: GeometryTables,
    derivatives: Vec<CsrMatrix<f64>>,
    stars: Vec<Vec<f64>>,
}

impl OperatorStack {
    pub fn build(
        complex: SimplicialComplex,
        embedding: Embedding,
        metric: &MetricField,
    ) -> Result<Self> {
        let geometry = GeometryTables::build(&complex, &embedding, metric)?;
        let n = complex.dimension();
        let derivatives = (0..n)
            .map(|p| Ok(complex.exterior_derivative(p)?.map(|v| v as f64)))
            .collect::<Result<Vec<_>>>()?;
        let stars = (0..=n).map(|p| geometry.hodge_star(p)).collect();
        Ok(Self {
            complex,
            embedding,
            geometry,
            derivatives,
            stars,
        })
    }

    pub fn dimension(&self) -> usize {
        self.complex.dimension()
    }

    /// d_p as a real sparse matrix, p < N.
    pub fn derivative(&self, p: usize) -> Result<&CsrMatrix<f64>> {
        self.derivatives.get(p).ok_or(DecError::Degree {
            degree: p,
            dimension: self.complex.dimension(),
        })
    }

    pub fn star(&self, p: usize) -> &[f64] {
        &self.stars[p]
    }

    pub fn star_inverse(&self, p: usize) -> Result<Vec<f64>> {
        self.geometry.hodge_star_inverse(p)
    }

    pub fn star_operator(&self, p: usize) -> Operator {
        CsrMatrix::from_diag(
            &self.stars[p]
                .iter()
                .map(|&v| C64::new(v, 0.0))
                .collect::<Vec<_>>(),
        )
    }

    /// The codifferential delta_p = (-1)^p star_{p-1}^{-1} d_{p-1}^T star_p.
    pub fn codifferential(&self, p: usize) -> Result<Operator> {
        let n = self.complex.dimension();
        if p < 1 || p > n {
            return Err(DecError::Degree {
                degree: p,
                dimension: n,
            });
        }
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        let inv = self.star_inverse(p - 1)?;
        let dt = self.derivatives[p - 1].transpose();
        let scaled = dt
            .scale_rows(&inv.iter().map(|&v| sign * v).collect::<Vec<_>>())
            .scale_cols(&self.stars[p]);
        Ok(CsrMatrix::from_real(&scaled))
    }

    /// The symmetric generalized pencil (A, B) for the Hodge Laplacian at
    /// degree p: A x = lambda B x with B = star_p, equivalent to
    /// (delta d + d delta) x = lambda x. Both sides are Hermitian, and with
    /// positive Hodge diagonals both are positive semidefinite.
    pub fn laplace_beltrami(&self, p: usize, terms: LaplaceTerms) -> Result<(Operator, Operator)> {
        let n = self.complex.dimension();
        if p > n {
            return Err(DecError::Degree {
                degree: p,
                dimension: n,
            });
        }
        let count = self.complex.num_simplices(p);
        let mut a = CsrMatrix::<f64>::zeros(count, count);
        let up = matches!(terms, LaplaceTerms::Up | LaplaceTerms::Full) && p < n;
        let down = matches!(terms, LaplaceTerms::Down | LaplaceTerms::Full) && p >= 1;
        if up {
            let d = &self.derivatives[p];
            let a_up = d.transpose().scale_cols(&self.stars[p + 1]).matmul(d)?;
            a = a.add(&a_up)?;
        }
        if down {
            let d = &self.derivatives[p - 1];
            let inv = self.star_inverse(p - 1)?;
            // star_p d star_{p-1}^{-1} d^T star_p
            let left = d.scale_rows(&self.stars[p]).scale_cols(&inv);
            let right = d.transpose().scale_cols(&self.stars[p]);
            a = a.add(&left.matmul(&right)?)?;
        }
        let b = self.star_operator(p);
        Ok((CsrMatrix::from_real(&a), b))
    }

    /// The symmetric generalized pencil for the Dirac-Kahler operator d +
    /// delta on the direct sum of all cochain degrees: A holds the blocks
    /// star_{p+1} d_p and their transposes, B is the block diagonal of the
    /// stars, so B^{-1} A acts as d + delta.
    pub fn dirac_kahler(&self) -> Result<(Operator, Operator)> {
        let n = self.complex.dimension();
        let sizes: Vec<usize> = (0..=n).map(|p| self.complex.num_simplices(p)).collect();
        let mut offsets = vec![0usize; n + 2];
        for p in 0..=n {
            offsets[p + 1] = offsets[p] + sizes[p];
        }
        let total = offsets[n + 1];
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        for p in 0..n {
            let d = &self.derivatives[p];
            for (r, c, v) in d.iter() {
                let scaled = self.stars[p + 1][r] * v;
                triplets.push((offsets[p + 1] + r, offsets[p] + c, scaled));
                triplets.push((offsets[p] + c, offsets[p + 1] + r, scaled));
            }
        }
        let a = CsrMatrix::from_triplets(total, total, triplets);
        let mut b_diag = Vec::with_capacity(total);
        for p in 0..=n {
            b_diag.extend(self.stars[p].iter().map(|&v| C64::new(v, 0.0)));
        }
        Ok((CsrMatrix::from_real(&a), CsrMatrix::from_diag(&b_diag)))
    }

    /// Offsets of each degree block inside the Dirac-Kahler pencil.
    pub fn dirac_kahler_offsets(&self) -> Vec<usize> {
        let n = self.complex.dimension();
        let mut offsets = vec![0usize; n + 2];
        for p in 0..=n {
            offsets[p + 1] = offsets[p] + self.complex.num_simplices(p);
        }
        offsets
    }

    /// Combined interior index list for the Dirac-Kahler pencil under
    /// per-degree Dirichlet masks.
    pub fn dirac_kahler_mask(&self, masks: &[BoundaryMask]) -> BoundaryMask {
        let offsets = self.dirac_kahler_offsets();
        let mut interior = Vec::new();
        for mask in masks {
            let off = offsets[mask.degree];
            interior.extend(mask.interior.iter().map(|&r| off + r));
        }
        interior.sort_unstable();
        BoundaryMask {
            degree: 0,
            interior,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshgen::{asymmetric_simplices, grid_indices, pbc_stitches, apply_stitches};
    use approx::assert_relative_eq;

    fn grid_stack(n: usize, style: fn(&crate::meshgen::GridIndexMap) -> Vec<Vec<usize>>, eps: f64) -> OperatorStack {
        let g = grid_indices(&[n, n]).unwrap();
        let tops = style(&g);
        let complex = SimplicialComplex::build(&tops, g.vertex_count()).unwrap();
        let coords: Vec<Vec<f64>> = (0..g.vertex_count())
            .map(|v| g.coords(v).iter().map(|&i| i as f64).collect())
            .collect();
        let embedding = Embedding::from_real(&coords).unwrap();
        let metric = MetricField::euclidean().with_epsilon(eps);
        OperatorStack::build(complex, embedding, &metric).unwrap()
    }

    #[test]
    fn boundary_vertices_of_3x3_grid() {
        let stack = grid_stack(3, asymmetric_simplices, 0.0);
        let b = boundary_simplices(&stack.complex, 0);
        assert_eq!(b.len(), 8);
        // the center vertex (row-major index 4) is interior
        assert!(!b.contains(&4));
        let edges = boundary_simplices(&stack.complex, 1);
        assert_eq!(edges.len(), 8);
        assert!(boundary_simplices(&stack.complex, 2).is_empty());
    }

    #[test]
    fn torus_has_no_boundary() {
        let g = grid_indices(&[4, 4]).unwrap();
        let tops = apply_stitches(
            &asymmetric_simplices(&g),
            &pbc_stitches(&g, &[0, 1]).unwrap(),
        );
        let complex = SimplicialComplex::build(&tops, 16).unwrap();
        for p in 0..=2 {
            assert!(boundary_simplices(&complex, p).is_empty());
        }
    }

    #[test]
    fn dirichlet_restriction_shrinks_identity() {
        let id = Operator::identity(5);
        let mask = BoundaryMask {
            degree: 0,
            interior: vec![1, 2, 4],
        };
        let sub = apply_dirichlet(&id, &mask, &mask).unwrap();
        assert_eq!(sub.rows(), 3);
        assert_eq!(sub.nnz(), 3);
    }

    #[test]
    fn one_dimensional_dirichlet_laplacian() {
        // 5 vertices on a line with spacing h: interior rows are (2,-1)/h^2
        // after dividing by the mass h
        let h = 0.5;
        let coords: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 * h]).collect();
        let tops: Vec<Vec<usize>> = (0..4).map(|i| vec![i, i + 1]).collect();
        let complex = SimplicialComplex::build(&tops, 5).unwrap();
        let embedding = Embedding::from_real(&coords).unwrap();
        let stack =
            OperatorStack::build(complex, embedding, &MetricField::euclidean()).unwrap();
        let (a, b) = stack.laplace_beltrami(0, LaplaceTerms::Full).unwrap();
        let mask = BoundaryMask::dirichlet(&stack.complex, 0);
        assert_eq!(mask.interior, vec![1, 2, 3]);
        let ai = apply_dirichlet(&a, &mask, &mask).unwrap();
        let bi = apply_dirichlet(&b, &mask, &mask).unwrap();
        // star_1 = 1/h per edge => A tridiagonal (2,-1)/h; B = h
        assert_relative_eq!(ai.get(0, 0).re, 2.0 / h, epsilon = 1e-12);
        assert_relative_eq!(ai.get(0, 1).re, -1.0 / h, epsilon = 1e-12);
        assert_relative_eq!(bi.get(1, 1).re, h, epsilon = 1e-12);
    }

    #[test]
    fn codifferential_squares_to_zero() {
        let stack = grid_stack(5, asymmetric_simplices, -1e-5);
        let d1 = stack.codifferential(1).unwrap();
        let d2 = stack.codifferential(2).unwrap();
        let prod = d1.matmul(&d2).unwrap();
        let rel = prod.max_modulus() / (d1.max_modulus() * d2.max_modulus()).max(1e-300);
        assert!(rel <= 1e-10, "relative norm {rel}");
    }

    #[test]
    fn codifferential_is_divided_difference_in_1d() {
        // on a uniform 3-vertex line, delta_1 w at the middle vertex is
        // -(w_right - w_left)/h
        let h = 0.25;
        let coords: Vec<Vec<f64>> = (0..3).map(|i| vec![i as f64 * h]).collect();
        let tops: Vec<Vec<usize>> = (0..2).map(|i| vec![i, i + 1]).collect();
        let complex = SimplicialComplex::build(&tops, 3).unwrap();
        let stack = OperatorStack::build(
            complex,
            Embedding::from_real(&coords).unwrap(),
            &MetricField::euclidean(),
        )
        .unwrap();
        let delta = stack.codifferential(1).unwrap();
        let w = vec![C64::new(2.0, 0.0), C64::new(5.0, 0.0)];
        let out = delta.matvec(&w);
        assert_relative_eq!(out[1].re, -(5.0 - 2.0) / h, epsilon = 1e-12);
    }

    #[test]
    fn masking_commutes_with_assembly() {
        let stack = grid_stack(4, asymmetric_simplices, 0.0);
        let (a, _) = stack.laplace_beltrami(0, LaplaceTerms::Full).unwrap();
        let mask = BoundaryMask::dirichlet(&stack.complex, 0);
        let masked_after = apply_dirichlet(&a, &mask, &mask).unwrap();
        // assemble from the column-restricted derivative
        let d = stack.derivative(0).unwrap();
        let all_rows: Vec<usize> = (0..d.rows()).collect();
        let d_int = d.restrict(&all_rows, &mask.interior);
        let a_direct = d_int
            .transpose()
            .scale_cols(stack.star(1))
            .matmul(&d_int)
            .unwrap();
        let diff = masked_after
            .add(&CsrMatrix::from_real(&a_direct.scale(-1.0)))
            .unwrap();
        assert!(diff.max_modulus() < 1e-12);
    }

    #[test]
    fn laplacian_rayleigh_quotients_nonnegative() {
        use rand::{Rng, SeedableRng};
        let stack = grid_stack(5, crate::meshgen::symmetric_simplices, 0.0);
        let (a, b) = stack.laplace_beltrami(0, LaplaceTerms::Full).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let n = a.rows();
        for _ in 0..1000 {
            let x: Vec<C64> = (0..n)
                .map(|_| C64::new(rng.gen::<f64>() - 0.5, 0.0))
                .collect();
            let ax = a.matvec(&x);
            let bx = b.matvec(&x);
            let num: f64 = x.iter().zip(&ax).map(|(xi, yi)| (xi.conj() * yi).re).sum();
            let den: f64 = x.iter().zip(&bx).map(|(xi, yi)| (xi.conj() * yi).re).sum();
            assert!(num / den >= -1e-9);
        }
    }

    #[test]
    fn neumann_laplacian_annihilates_constants() {
        let stack = grid_stack(5, asymmetric_simplices, 0.0);
        let (a, _) = stack.laplace_beltrami(0, LaplaceTerms::Full).unwrap();
        let ones = vec![C64::new(1.0, 0.0); a.rows()];
        let out = a.matvec(&ones);
        let norm: f64 = out.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!(norm <= 1e-10, "norm {norm}");
    }

    #[test]
    fn singular_hodge_reported_on_right_triangles() {
        // unregularized right-angle grid: hypotenuse duals vanish, so the
        // degree-1 star cannot be inverted
        let stack = grid_stack(3, asymmetric_simplices, 0.0);
        match stack.star_inverse(1) {
            Err(DecError::SingularHodge { degree: 1, ranks }) => assert!(!ranks.is_empty()),
            other => panic!("expected singular Hodge error, got {other:?}"),
        }
    }
}
