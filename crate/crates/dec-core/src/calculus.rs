//! Bridges between continuous and discrete forms: the de Rham map with the
//! generalized trapezoidal rule, the discrete sharp operator built from
//! wedged barycentric differentials, and a least-squares inverse of the
//! 0-form sharp.

use num_complex::Complex64;

use crate::complex::SimplicialComplex;
use crate::error::{DecError, Result};
use crate::geometry::{Embedding, GeometryTables};
use crate::sparse::CsrMatrix;

type C64 = Complex64;

/// A discrete p-form: one complex coefficient per p-simplex, indexed by
/// skeleton rank.
#[derive(Debug, Clone, PartialEq)]
pub struct Cochain {
    pub degree: usize,
    pub values: Vec<C64>,
}

impl Cochain {
    pub fn zeros(degree: usize, len: usize) -> Self {
        Self {
            degree,
            values: vec![C64::new(0.0, 0.0); len],
        }
    }

    pub fn from_real(degree: usize, values: Vec<f64>) -> Self {
        Self {
            degree,
            values: values.into_iter().map(|v| C64::new(v, 0.0)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A continuous field of antisymmetric p-tensors: maps a position in C^M to
/// the M^p components in row-major multi-index order (a single component for
/// p = 0).
pub type TensorField<'a> = dyn Fn(&[C64]) -> Vec<C64> + 'a;

/// All compositions of `total` into `parts` nonnegative integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            let mut c = Vec::with_capacity(parts);
            c.push(first);
            c.append(&mut rest);
            out.push(c);
        }
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product::<f64>().max(1.0)
}

/// Applies a flat tensor to the simplex edge vectors:
/// sum over multi-indices of T[i1..ip] * e_1[i1] * ... * e_p[ip].
fn apply_tensor(tensor: &[C64], edges: &[Vec<C64>], m: usize, p: usize) -> C64 {
    if p == 0 {
        return tensor[0];
    }
    let mut acc = C64::new(0.0, 0.0);
    let mut idx = vec![0usize; p];
    loop {
        let flat = idx.iter().fold(0, |f, &i| f * m + i);
        let mut term = tensor[flat];
        for (a, &i) in idx.iter().enumerate() {
            term *= edges[a][i];
        }
        acc += term;
        // advance the mixed-radix counter
        let mut k = p;
        loop {
            if k == 0 {
                return acc;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < m {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// De Rham map: integrates a continuous p-form over every p-simplex with the
/// generalized trapezoidal rule.
///
/// Each simplex is sampled on the barycentric lattice with `subdivision`
/// steps; a sample with k vanishing barycentric coordinates (the interior of
/// a codimension-k face) carries weight 1/2^k. The weighted mean tensor is
/// contracted with the simplex edge multivector divided by p!, which makes
/// the rule exact on fields constant over the simplex.
pub fn derham_map(
    field: &TensorField,
    complex: &SimplicialComplex,
    embedding: &Embedding,
    degree: usize,
    subdivision: usize,
) -> Result<Cochain> {
    if subdivision < 1 {
        return Err(DecError::Parameter(
            "de Rham subdivision must be at least 1".into(),
        ));
    }
    if degree > complex.dimension() {
        return Err(DecError::Degree {
            degree,
            dimension: complex.dimension(),
        });
    }
    let m = embedding.dim();
    let p = degree;
    let lattice = compositions(subdivision, p + 1);
    let mut values = Vec::with_capacity(complex.num_simplices(p));
    for simplex in complex.skeleton(p) {
        let verts: Vec<&[C64]> = simplex
            .vertices()
            .iter()
            .map(|&v| embedding.position(v))
            .collect();
        let mut mean = vec![C64::new(0.0, 0.0); m.pow(p as u32)];
        let mut weight_sum = 0.0;
        for sample in &lattice {
            let k = sample.iter().filter(|&&c| c == 0).count();
            let w = 0.5f64.powi(k as i32);
            let mut x = vec![C64::new(0.0, 0.0); m];
            for (coord, &mi) in sample.iter().enumerate() {
                let lam = mi as f64 / subdivision as f64;
                for d in 0..m {
                    x[d] += C64::new(lam, 0.0) * verts[coord][d];
                }
            }
            let t = field(&x);
            debug_assert_eq!(t.len(), mean.len());
            for (acc, v) in mean.iter_mut().zip(t) {
                *acc += C64::new(w, 0.0) * v;
            }
            weight_sum += w;
        }
        for v in mean.iter_mut() {
            *v /= C64::new(weight_sum, 0.0);
        }
        let edges: Vec<Vec<C64>> = (1..=p)
            .map(|i| {
                verts[i]
                    .iter()
                    .zip(verts[0])
                    .map(|(&a, &b)| a - b)
                    .collect()
            })
            .collect();
        let contracted = apply_tensor(&mean, &edges, m, p) / C64::new(factorial(p), 0.0);
        values.push(contracted * C64::new(simplex.parity() as f64, 0.0));
    }
    Ok(Cochain { degree: p, values })
}

/// De Rham map of a scalar field onto top-simplex cells: the weighted-mean
/// rule evaluated over each N-simplex, giving the sharp-side representation
/// of a 0-form (one value per top simplex, attached at its barycenter).
pub fn derham_to_barycenters(
    field: &dyn Fn(&[C64]) -> C64,
    complex: &SimplicialComplex,
    embedding: &Embedding,
    subdivision: usize,
) -> Result<Vec<C64>> {
    if subdivision < 1 {
        return Err(DecError::Parameter(
            "de Rham subdivision must be at least 1".into(),
        ));
    }
    let n = complex.dimension();
    let m = embedding.dim();
    let lattice = compositions(subdivision, n + 1);
    let mut out = Vec::with_capacity(complex.num_simplices(n));
    for top in complex.skeleton(n) {
        let verts: Vec<&[C64]> = top
            .vertices()
            .iter()
            .map(|&v| embedding.position(v))
            .collect();
        let mut acc = C64::new(0.0, 0.0);
        let mut weight_sum = 0.0;
        for sample in &lattice {
            let k = sample.iter().filter(|&&c| c == 0).count();
            let w = 0.5f64.powi(k as i32);
            let mut x = vec![C64::new(0.0, 0.0); m];
            for (coord, &mi) in sample.iter().enumerate() {
                let lam = mi as f64 / subdivision as f64;
                for d in 0..m {
                    x[d] += C64::new(lam, 0.0) * verts[coord][d];
                }
            }
            acc += C64::new(w, 0.0) * field(&x);
            weight_sum += w;
        }
        out.push(acc / C64::new(weight_sum, 0.0));
    }
    Ok(out)
}

/// The discrete sharp operator at degree p: a sparse map from p-cochain
/// coefficients to flattened antisymmetric tensors, M^p components per top
/// simplex, located at the barycenters.
#[derive(Debug, Clone)]
pub struct SharpOperator {
    pub degree: usize,
    pub matrix: CsrMatrix<C64>,
    pub embedding_dim: usize,
    pub top_count: usize,
}

impl SharpOperator {
    pub fn block_len(&self) -> usize {
        self.embedding_dim.pow(self.degree as u32)
    }

    /// Sharpened tensors, flattened top-major.
    pub fn apply(&self, cochain: &Cochain) -> Result<Vec<C64>> {
        if cochain.degree != self.degree || cochain.len() != self.matrix.cols() {
            return Err(DecError::Assembly(format!(
                "cochain of degree {} and length {} does not match sharp operator ({} columns)",
                cochain.degree,
                cochain.len(),
                self.matrix.cols()
            )));
        }
        Ok(self.matrix.matvec(&cochain.values))
    }
}

/// Builds the sharp operator: for every p-face of every top simplex, the
/// face's cochain value weighs alternating wedges of the top simplex's
/// barycentric differentials, averaged with the constant that reproduces
/// constant fields exactly, A = (N+1)/p!.
pub fn sharp_operator(
    complex: &SimplicialComplex,
    geometry: &GeometryTables,
    degree: usize,
) -> Result<SharpOperator> {
    let n = complex.dimension();
    if degree > n {
        return Err(DecError::Degree {
            degree,
            dimension: n,
        });
    }
    let p = degree;
    let m = geometry.embedding_dim();
    let block = m.pow(p as u32);
    let top_count = complex.num_simplices(n);
    let averaging = (n as f64 + 1.0) / factorial(p);

    let mut triplets: Vec<(usize, usize, C64)> = Vec::new();
    for (t, top) in complex.skeleton(n).iter().enumerate() {
        let diffs = &geometry.differentials[t];
        let locals: Vec<usize> = (0..=n).collect();
        for combo in combinations(&locals, p + 1) {
            let face: Vec<usize> = combo.iter().map(|&l| top.vertices()[l]).collect();
            let rank = complex.rank(p, &face).expect("face closure");
            let face_parity = complex.skeleton(p)[rank].parity() as f64;
            for j in 0..=p {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                let covs: Vec<usize> = combo
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != j)
                    .map(|(_, &l)| l)
                    .collect();
                let coeff = C64::new(sign * face_parity / averaging, 0.0);
                if p == 0 {
                    triplets.push((t, rank, coeff));
                    continue;
                }
                // wedge components: W[i1..ip] = det of cov_a[i_b]
                let mut idx = vec![0usize; p];
                loop {
                    let flat = idx.iter().fold(0, |f, &i| f * m + i);
                    let mut det_m = nalgebra::DMatrix::<C64>::zeros(p, p);
                    for (a, &l) in covs.iter().enumerate() {
                        for (b, &i) in idx.iter().enumerate() {
                            det_m[(a, b)] = diffs[(i, l)];
                        }
                    }
                    let w = det_m.determinant();
                    if w.norm() > 0.0 {
                        triplets.push((t * block + flat, rank, coeff * w));
                    }
                    let mut k = p;
                    let mut done = false;
                    loop {
                        if k == 0 {
                            done = true;
                            break;
                        }
                        k -= 1;
                        idx[k] += 1;
                        if idx[k] < m {
                            break;
                        }
                        idx[k] = 0;
                    }
                    if done {
                        break;
                    }
                }
            }
        }
    }
    Ok(SharpOperator {
        degree: p,
        matrix: CsrMatrix::from_triplets(top_count * block, complex.num_simplices(p), triplets),
        embedding_dim: m,
        top_count,
    })
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    use itertools::Itertools;
    items.iter().copied().combinations(k).collect()
}

/// Minimum-norm least-squares inverse of the 0-form sharp: recovers vertex
/// values from per-top-simplex scalars via conjugate gradients on the normal
/// equations. Returns the 0-cochain and the final residual norm.
pub fn inverse_sharp_0(
    sharp0: &SharpOperator,
    tensor_values: &[C64],
) -> Result<(Cochain, f64)> {
    if sharp0.degree != 0 {
        return Err(DecError::Assembly(
            "inverse_sharp_0 requires a degree-0 sharp operator".into(),
        ));
    }
    if tensor_values.len() != sharp0.matrix.rows() {
        return Err(DecError::Assembly(format!(
            "expected {} tensor values, got {}",
            sharp0.matrix.rows(),
            tensor_values.len()
        )));
    }
    let s = &sharp0.matrix;
    let st = s.transpose();
    let cols = s.cols();

    let dot = |a: &[C64], b: &[C64]| -> C64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    };
    let norm = |a: &[C64]| -> f64 { dot(a, a).re.sqrt() };

    // CGLS: iterates stay in range(S^T), so the limit is the minimum-norm
    // least-squares solution even when S is rank deficient
    let mut x = vec![C64::new(0.0, 0.0); cols];
    let mut r = tensor_values.to_vec();
    let mut g = st.matvec(&r);
    let g0 = norm(&g);
    if !g0.is_finite() {
        return Err(DecError::Underdetermined(
            "non-finite values in least-squares system".into(),
        ));
    }
    let mut p = g.clone();
    let mut gamma = g0 * g0;
    let max_iter = 4 * cols.max(16);
    for _ in 0..max_iter {
        if gamma.sqrt() <= 1e-13 * g0.max(1e-300) {
            break;
        }
        let q = s.matvec(&p);
        let qq = dot(&q, &q).re;
        if qq <= 0.0 || !qq.is_finite() {
            break;
        }
        let alpha = gamma / qq;
        for i in 0..cols {
            x[i] += C64::new(alpha, 0.0) * p[i];
        }
        for (ri, qi) in r.iter_mut().zip(&q) {
            *ri -= C64::new(alpha, 0.0) * qi;
        }
        g = st.matvec(&r);
        let gamma_new = dot(&g, &g).re;
        let beta = gamma_new / gamma;
        for i in 0..cols {
            p[i] = g[i] + C64::new(beta, 0.0) * p[i];
        }
        gamma = gamma_new;
    }
    let residual = norm(&{
        let mut res = s.matvec(&x);
        for (ri, bi) in res.iter_mut().zip(tensor_values) {
            *ri -= bi;
        }
        res
    });
    Ok((
        Cochain {
            degree: 0,
            values: x,
        },
        residual,
    ))
}
