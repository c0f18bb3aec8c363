//! Metric-dependent geometry: circumcenters, primal volumes, signed
//! circumcentric dual volumes, diagonal Hodge stars and barycentric
//! differentials.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::complex::SimplicialComplex;
use crate::error::{DecError, Result};
use crate::metric::MetricField;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

type C64 = Complex64;

/// Vertex positions in C^M, indexed by original vertex id.
#[derive(Debug, Clone)]
pub struct Embedding {
    dim: usize,
    positions: Vec<Vec<C64>>,
}

impl Embedding {
    pub fn new(positions: Vec<Vec<C64>>) -> Result<Self> {
        let dim = positions.first().map(|p| p.len()).unwrap_or(0);
        if dim == 0 || positions.iter().any(|p| p.len() != dim) {
            return Err(DecError::Parameter(
                "embedding positions must share a nonzero dimension".into(),
            ));
        }
        Ok(Self { dim, positions })
    }

    pub fn from_real(positions: &[Vec<f64>]) -> Result<Self> {
        Self::new(
            positions
                .iter()
                .map(|p| p.iter().map(|&x| C64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, vertex: usize) -> &[C64] {
        &self.positions[vertex]
    }
}

fn inner(h: &DMatrix<C64>, a: &[C64], b: &[C64]) -> C64 {
    // conj(a)^T h b
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.len() {
        let mut hb = C64::new(0.0, 0.0);
        for j in 0..b.len() {
            hb += h[(i, j)] * b[j];
        }
        acc += a[i].conj() * hb;
    }
    acc
}

fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// Circumcenter of a simplex under the Hermitian metric `h`: the barycentric
/// combination equidistant from every vertex. Returns the center and the
/// real barycentric weights.
pub fn circumcenter(vertices: &[&[C64]], h: &DMatrix<C64>) -> Result<(Vec<C64>, Vec<f64>)> {
    let p = vertices.len() - 1;
    if p == 0 {
        return Ok((vertices[0].to_vec(), vec![1.0]));
    }
    let mut sys = DMatrix::<f64>::zeros(p + 1, p + 1);
    let mut rhs = DVector::<f64>::zeros(p + 1);
    for i in 1..=p {
        let vi0 = sub(vertices[i], vertices[0]);
        for j in 0..=p {
            sys[(i - 1, j)] = 2.0 * inner(h, vertices[j], &vi0).re;
        }
        rhs[i - 1] = (inner(h, vertices[i], vertices[i]) - inner(h, vertices[0], vertices[0])).re;
    }
    for j in 0..=p {
        sys[(p, j)] = 1.0;
    }
    rhs[p] = 1.0;
    let lu = sys.lu();
    let alpha = lu.solve(&rhs).ok_or_else(|| {
        DecError::DegenerateSimplex("singular circumcenter system (zero metric volume)".into())
    })?;
    let m = vertices[0].len();
    let mut center = vec![C64::new(0.0, 0.0); m];
    for (j, v) in vertices.iter().enumerate() {
        for k in 0..m {
            center[k] += C64::new(alpha[j], 0.0) * v[k];
        }
    }
    Ok((center, alpha.iter().copied().collect()))
}

/// Unsigned p-volume sqrt(|det Re(Gram)|) / p!; 0-simplices have volume 1.
pub fn primal_volume(vertices: &[&[C64]], h: &DMatrix<C64>) -> f64 {
    let p = vertices.len() - 1;
    if p == 0 {
        return 1.0;
    }
    let edges: Vec<Vec<C64>> = (1..=p).map(|i| sub(vertices[i], vertices[0])).collect();
    let mut gram = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            gram[(i, j)] = inner(h, &edges[i], &edges[j]).re;
        }
    }
    gram.determinant().abs().sqrt() / factorial(p)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product::<f64>().max(1.0)
}

/// Orientation sign of a dual simplex fragment: sgn(Re det(conj(V)^T h U)).
/// A vanishing determinant reports 0 (the fragment is degenerate and
/// contributes no volume).
pub fn dual_sign(v: &[Vec<C64>], u: &[Vec<C64>], h: &DMatrix<C64>) -> f64 {
    let k = v.len();
    debug_assert_eq!(u.len(), k);
    if k == 0 {
        return 1.0;
    }
    let mut m = DMatrix::<C64>::zeros(k, k);
    let mut scale = 1.0_f64;
    for i in 0..k {
        for j in 0..k {
            m[(i, j)] = inner(h, &v[i], &u[j]);
        }
        let vn = inner(h, &v[i], &v[i]).re.abs().sqrt();
        let un = inner(h, &u[i], &u[i]).re.abs().sqrt();
        scale *= vn.max(1e-300) * un.max(1e-300);
    }
    let det = m.determinant().re;
    if det.abs() <= 1e-12 * scale.max(1e-300) {
        0.0
    } else {
        det.signum()
    }
}

/// Barycentric differentials of a simplex under `h`: the covectors dual to
/// the edge vectors, X^I . (v_J - v_0) = delta^I_J, plus X^0 = -sum X^I.
/// Returned as an M x (p+1) matrix whose I-th column is X^I.
pub fn barycentric_differentials(
    vertices: &[&[C64]],
    h: &DMatrix<C64>,
) -> Result<DMatrix<C64>> {
    let p = vertices.len() - 1;
    let m = vertices[0].len();
    let mut out = DMatrix::<C64>::zeros(m, p + 1);
    if p == 0 {
        return Ok(out);
    }
    let edges: Vec<Vec<C64>> = (1..=p).map(|i| sub(vertices[i], vertices[0])).collect();
    // gram_ij = V_i h V_j^dagger
    let mut gram = DMatrix::<C64>::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            gram[(i, j)] = inner(h, &edges[j], &edges[i]);
        }
    }
    let inv = gram.clone().try_inverse().ok_or_else(|| {
        DecError::DegenerateSimplex("singular Gram matrix in barycentric differentials".into())
    })?;
    // X = h V^dagger gram^{-1}: column I is the covector paired with edge I
    let mut hv = DMatrix::<C64>::zeros(m, p);
    for i in 0..m {
        for (col, e) in edges.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..m {
                acc += h[(i, j)] * e[j].conj();
            }
            hv[(i, col)] = acc;
        }
    }
    let x = hv * inv;
    for col in 1..=p {
        for row in 0..m {
            out[(row, col)] = x[(row, col - 1)];
            out[(row, 0)] -= x[(row, col - 1)];
        }
    }
    Ok(out)
}

/// All metric-dependent tables for a complex: per-top-simplex metric,
/// barycenter and differentials; per-simplex primal volume, circumcenter and
/// signed dual volume; and the per-degree Hodge diagonals derived from them.
#[derive(Debug)]
pub struct GeometryTables {
    pub top_metrics: Vec<DMatrix<C64>>,
    pub barycenters: Vec<Vec<C64>>,
    pub differentials: Vec<DMatrix<C64>>,
    pub primal_volumes: Vec<Vec<f64>>,
    pub circumcenters: Vec<Vec<Vec<C64>>>,
    pub dual_volumes: Vec<Vec<f64>>,
    embedding_dim: usize,
}

impl GeometryTables {
    pub fn build(
        complex: &SimplicialComplex,
        embedding: &Embedding,
        metric: &MetricField,
    ) -> Result<Self> {
        let n = complex.dimension();
        let m = embedding.dim();
        let tops = complex.skeleton(n);

        // per-top quantities are independent; compute them in a parallel map
        // and keep every later accumulation in top-index order
        let per_top: Vec<Result<(DMatrix<C64>, Vec<C64>, DMatrix<C64>)>> = {
            let job = |top: &crate::complex::Simplex| -> Result<_> {
                let verts: Vec<&[C64]> = top
                    .vertices()
                    .iter()
                    .map(|&v| embedding.position(v))
                    .collect();
                let mut bary = vec![C64::new(0.0, 0.0); m];
                for v in &verts {
                    for k in 0..m {
                        bary[k] += v[k];
                    }
                }
                let scale = C64::new(1.0 / (n as f64 + 1.0), 0.0);
                for b in bary.iter_mut() {
                    *b *= scale;
                }
                let h = metric.evaluate(&bary)?;
                let diff = barycentric_differentials(&verts, &h)?;
                Ok((h, bary, diff))
            };
            #[cfg(feature = "parallel")]
            {
                tops.par_iter().map(job).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                tops.iter().map(job).collect()
            }
        };
        let mut top_metrics = Vec::with_capacity(tops.len());
        let mut barycenters = Vec::with_capacity(tops.len());
        let mut differentials = Vec::with_capacity(tops.len());
        for r in per_top {
            let (h, b, d) = r?;
            top_metrics.push(h);
            barycenters.push(b);
            differentials.push(d);
        }

        // primal volumes and circumcenters use the mean of the metrics of the
        // containing top simplices, which keeps shared faces single-valued
        let mut primal_volumes = Vec::with_capacity(n + 1);
        let mut circumcenters = Vec::with_capacity(n + 1);
        for p in 0..=n {
            let cofaces = complex.top_cofaces(p);
            let mut vols = Vec::with_capacity(complex.num_simplices(p));
            let mut centers = Vec::with_capacity(complex.num_simplices(p));
            for (rank, s) in complex.skeleton(p).iter().enumerate() {
                let verts: Vec<&[C64]> = s
                    .vertices()
                    .iter()
                    .map(|&v| embedding.position(v))
                    .collect();
                let mut h = DMatrix::<C64>::zeros(m, m);
                for &t in &cofaces[rank] {
                    h += &top_metrics[t];
                }
                h /= C64::new(cofaces[rank].len().max(1) as f64, 0.0);
                vols.push(primal_volume(&verts, &h));
                centers.push(circumcenter(&verts, &h)?.0);
            }
            primal_volumes.push(vols);
            circumcenters.push(centers);
        }

        // signed dual volumes: accumulate every descending chain of each top
        // simplex under that simplex's own metric
        let contributions: Vec<Result<Vec<(usize, usize, f64)>>> = {
            let job = |t: usize| -> Result<Vec<(usize, usize, f64)>> {
                chain_contributions(complex, embedding, &top_metrics[t], t)
            };
            #[cfg(feature = "parallel")]
            {
                (0..tops.len()).into_par_iter().map(job).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                (0..tops.len()).map(job).collect()
            }
        };
        let mut dual_volumes: Vec<Vec<f64>> =
            (0..=n).map(|p| vec![0.0; complex.num_simplices(p)]).collect();
        for v in dual_volumes[n].iter_mut() {
            *v = 1.0;
        }
        for per in contributions {
            for (p, rank, value) in per? {
                dual_volumes[p][rank] += value;
            }
        }

        Ok(Self {
            top_metrics,
            barycenters,
            differentials,
            primal_volumes,
            circumcenters,
            dual_volumes,
            embedding_dim: m,
        })
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    /// Diagonal Hodge star at degree p: entry i = |dual of simplex i| /
    /// |simplex i|. Entries may vanish on right simplices when the metric is
    /// unregularized.
    pub fn hodge_star(&self, p: usize) -> Vec<f64> {
        self.dual_volumes[p]
            .iter()
            .zip(&self.primal_volumes[p])
            .map(|(&d, &v)| d / v)
            .collect()
    }

    /// Entrywise reciprocal of the Hodge diagonal; errors when any entry is
    /// numerically zero, naming the offending simplices.
    pub fn hodge_star_inverse(&self, p: usize) -> Result<Vec<f64>> {
        let star = self.hodge_star(p);
        let scale = star.iter().map(|v| v.abs()).fold(0.0_f64, f64::max);
        let bad: Vec<usize> = star
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() <= 1e-12 * scale.max(1e-300))
            .map(|(i, _)| i)
            .collect();
        if !bad.is_empty() {
            return Err(DecError::SingularHodge {
                degree: p,
                ranks: bad,
            });
        }
        Ok(star.iter().map(|v| 1.0 / v).collect())
    }

    /// Total unsigned volume of the mesh.
    pub fn total_volume(&self) -> f64 {
        self.primal_volumes.last().map(|v| v.iter().sum()).unwrap_or(0.0)
    }
}

/// Signed dual-volume contributions of one top simplex: every chain
/// sigma^p < ... < sigma^N contributes sign x |[c(sigma^N), ..., c(sigma^p)]|
/// to the dual volume of sigma^p, all under this top simplex's metric.
fn chain_contributions(
    complex: &SimplicialComplex,
    embedding: &Embedding,
    h: &DMatrix<C64>,
    top_rank: usize,
) -> Result<Vec<(usize, usize, f64)>> {
    let n = complex.dimension();
    let top = &complex.skeleton(n)[top_rank];
    let mut memo: BTreeMap<Vec<usize>, Vec<C64>> = BTreeMap::new();
    let mut center_of = |verts: &[usize]| -> Result<Vec<C64>> {
        if let Some(c) = memo.get(verts) {
            return Ok(c.clone());
        }
        let pos: Vec<&[C64]> = verts.iter().map(|&v| embedding.position(v)).collect();
        let (c, _) = circumcenter(&pos, h)?;
        memo.insert(verts.to_vec(), c.clone());
        Ok(c)
    };

    let mut out = Vec::new();
    let c_top = center_of(top.vertices())?;
    // depth-first descent dropping one vertex per level
    let mut stack: Vec<(Vec<usize>, Vec<Vec<C64>>, Vec<Vec<C64>>)> =
        vec![(top.vertices().to_vec(), vec![c_top], Vec::new())];
    while let Some((verts, centers, dropped)) = stack.pop() {
        let k = verts.len() - 1;
        if k < n {
            let rank = complex
                .rank(k, &verts)
                .expect("face closure: chain faces are in the skeleton");
            let c_k = centers.last().unwrap();
            let levels = n - k;
            let v: Vec<Vec<C64>> = (1..=levels)
                .map(|i| sub(&centers[levels - i], c_k))
                .collect();
            let u: Vec<Vec<C64>> = (1..=levels)
                .map(|i| sub(&dropped[levels - i], c_k))
                .collect();
            let sign = dual_sign(&v, &u, h);
            if sign != 0.0 {
                let mut gram = DMatrix::<f64>::zeros(levels, levels);
                for i in 0..levels {
                    for j in 0..levels {
                        gram[(i, j)] = inner(h, &v[i], &v[j]).re;
                    }
                }
                let vol = gram.determinant().abs().sqrt() / factorial(levels);
                out.push((k, rank, sign * vol));
            }
        }
        if k > 0 {
            for i in 0..=k {
                let mut sub_verts = verts.clone();
                let removed = sub_verts.remove(i);
                let c_sub = center_of(&sub_verts)?;
                let mut centers2 = centers.clone();
                centers2.push(c_sub);
                let mut dropped2 = dropped.clone();
                dropped2.push(embedding.position(removed).to_vec());
                stack.push((sub_verts, centers2, dropped2));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn emb(points: &[&[f64]]) -> Embedding {
        Embedding::from_real(&points.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn ident(m: usize) -> DMatrix<C64> {
        DMatrix::identity(m, m)
    }

    #[test]
    fn segment_circumcenter_is_midpoint() {
        let e = emb(&[&[0.0, 0.0], &[2.0, 0.0]]);
        let (c, w) = circumcenter(&[e.position(0), e.position(1)], &ident(2)).unwrap();
        assert_relative_eq!(c[0].re, 1.0, epsilon = 1e-14);
        assert_relative_eq!(c[1].re, 0.0, epsilon = 1e-14);
        assert_relative_eq!(w[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(w[1], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn right_triangle_center_on_hypotenuse() {
        let e = emb(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let (c, _) =
            circumcenter(&[e.position(0), e.position(1), e.position(2)], &ident(2)).unwrap();
        assert_relative_eq!(c[0].re, 0.5, epsilon = 1e-13);
        assert_relative_eq!(c[1].re, 0.5, epsilon = 1e-13);
    }

    #[test]
    fn equilateral_center_is_centroid() {
        let h3 = (3.0_f64).sqrt() / 2.0;
        let e = emb(&[&[0.0, 0.0], &[1.0, 0.0], &[0.5, h3]]);
        let (_, w) =
            circumcenter(&[e.position(0), e.position(1), e.position(2)], &ident(2)).unwrap();
        for &wi in &w {
            assert_relative_eq!(wi, 1.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn volumes() {
        let e = emb(&[&[0.0], &[1.0]]);
        assert_relative_eq!(
            primal_volume(&[e.position(0), e.position(1)], &ident(1)),
            1.0
        );
        let t = emb(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        assert_relative_eq!(
            primal_volume(&[t.position(0), t.position(1), t.position(2)], &ident(2)),
            0.5,
            epsilon = 1e-14
        );
        // metric 4*I doubles lengths
        let h = ident(1).map(|v| v * C64::new(4.0, 0.0));
        assert_relative_eq!(primal_volume(&[e.position(0), e.position(1)], &h), 2.0);
    }

    #[test]
    fn barycentric_differentials_unit_cases() {
        let e = emb(&[&[0.0], &[1.0]]);
        let x = barycentric_differentials(&[e.position(0), e.position(1)], &ident(1)).unwrap();
        assert_relative_eq!(x[(0, 1)].re, 1.0, epsilon = 1e-14);
        assert_relative_eq!(x[(0, 0)].re, -1.0, epsilon = 1e-14);

        let t = emb(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let x =
            barycentric_differentials(&[t.position(0), t.position(1), t.position(2)], &ident(2))
                .unwrap();
        assert_relative_eq!(x[(0, 1)].re, 1.0, epsilon = 1e-14);
        assert_relative_eq!(x[(1, 1)].re, 0.0, epsilon = 1e-14);
        assert_relative_eq!(x[(0, 2)].re, 0.0, epsilon = 1e-14);
        assert_relative_eq!(x[(1, 2)].re, 1.0, epsilon = 1e-14);
        assert_relative_eq!(x[(0, 0)].re, -1.0, epsilon = 1e-14);
        assert_relative_eq!(x[(1, 0)].re, -1.0, epsilon = 1e-14);
    }

    #[test]
    fn dual_sign_examples() {
        // acute triangle: interior edge fragment has positive sign
        let h3 = (3.0_f64).sqrt() / 2.0;
        let e = emb(&[&[0.0, 0.0], &[1.0, 0.0], &[0.5, h3]]);
        let h = ident(2);
        let verts = [e.position(0), e.position(1), e.position(2)];
        let (c_t, _) = circumcenter(&verts, &h).unwrap();
        let (c_e, _) = circumcenter(&verts[0..2], &h).unwrap();
        let v = vec![sub(&c_t, &c_e)];
        let u = vec![sub(e.position(2), &c_e)];
        assert_eq!(dual_sign(&v, &u, &h), 1.0);

        // right triangle: the fragment through the hypotenuse center is degenerate
        let r = emb(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let hyp = [r.position(1), r.position(2)];
        let (c_t, _) = circumcenter(&[r.position(0), r.position(1), r.position(2)], &h).unwrap();
        let (c_hyp, _) = circumcenter(&hyp, &h).unwrap();
        let v = vec![sub(&c_t, &c_hyp)];
        let u = vec![sub(r.position(0), &c_hyp)];
        assert_eq!(dual_sign(&v, &u, &h), 0.0);

        // obtuse triangle: circumcenter beyond the long edge gives a negative sign
        let o = emb(&[&[0.0, 0.0], &[4.0, 0.0], &[2.0, 0.5]]);
        let overts = [o.position(0), o.position(1), o.position(2)];
        let (c_t, _) = circumcenter(&overts, &h).unwrap();
        let (c_e, _) = circumcenter(&overts[0..2], &h).unwrap();
        let v = vec![sub(&c_t, &c_e)];
        let u = vec![sub(o.position(2), &c_e)];
        assert_eq!(dual_sign(&v, &u, &h), -1.0);
    }
}
