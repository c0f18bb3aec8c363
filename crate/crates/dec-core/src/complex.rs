//! Simplices, simplicial complexes, boundary operators and the exterior
//! derivative.
//!
//! Simplices are stored canonically: ascending vertex order plus an explicit
//! parity relating the supplied order to the canonical one. Face enumeration
//! and deduplication are then order-free, and every operator binds to the
//! lexicographic rank of a simplex inside its skeleton, so two builds from
//! the same input produce identical matrices.

use itertools::Itertools;

use crate::error::{DecError, Result};
use crate::sparse::CsrMatrix;

/// An oriented p-simplex: `p + 1` distinct vertex indices in ascending order
/// together with the sign of the permutation from the original input order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Simplex {
    vertices: Vec<usize>,
    parity: i8,
}

impl Simplex {
    /// Canonicalizes `vertices`, recording the permutation parity.
    pub fn new(vertices: Vec<usize>) -> Result<Self> {
        let parity = sort_parity(vertices.clone())?;
        let mut sorted = vertices;
        sorted.sort_unstable();
        Ok(Self {
            vertices: sorted,
            parity,
        })
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn parity(&self) -> i8 {
        self.parity
    }

    pub fn dimension(&self) -> usize {
        self.vertices.len() - 1
    }

    /// The (p-1)-faces in the alternating-sum order: face `i` omits vertex `i`.
    pub fn faces(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.vertices.len()).map(move |i| {
            let mut f = self.vertices.clone();
            f.remove(i);
            f
        })
    }
}

/// Counts inversions to get the sign carrying `vertices` to ascending order;
/// errors on repeated vertices.
fn sort_parity(mut vertices: Vec<usize>) -> Result<i8> {
    let mut parity = 1i8;
    let n = vertices.len();
    for i in 0..n {
        let mut min_at = i;
        for j in i + 1..n {
            if vertices[j] < vertices[min_at] {
                min_at = j;
            }
        }
        if min_at != i {
            vertices.swap(i, min_at);
            parity = -parity;
        }
        if i > 0 && vertices[i] == vertices[i - 1] {
            return Err(DecError::DegenerateSimplex(format!(
                "repeated vertex {} in simplex",
                vertices[i]
            )));
        }
    }
    Ok(parity)
}

/// A simplicial complex of dimension N: one canonically sorted, deduplicated
/// skeleton per degree, built by closing the supplied top simplices under the
/// face relation.
#[derive(Debug, Clone)]
pub struct SimplicialComplex {
    dimension: usize,
    vertex_count: usize,
    skeletons: Vec<Vec<Simplex>>,
}

impl SimplicialComplex {
    /// Builds the complex from its N-simplices.
    ///
    /// Vertices referenced by no simplex are dropped; the 0-skeleton holds the
    /// used vertices in ascending order. Duplicate top simplices (same vertex
    /// set) are merged, keeping the first occurrence's parity.
    pub fn build(top_simplices: &[Vec<usize>], vertex_count: usize) -> Result<Self> {
        if top_simplices.is_empty() {
            return Err(DecError::EmptyComplex);
        }
        let dimension = top_simplices[0].len() - 1;
        let mut tops = Vec::with_capacity(top_simplices.len());
        for verts in top_simplices {
            if verts.len() != dimension + 1 {
                return Err(DecError::DegenerateSimplex(format!(
                    "expected {} vertices per top simplex, got {}",
                    dimension + 1,
                    verts.len()
                )));
            }
            if let Some(&v) = verts.iter().find(|&&v| v >= vertex_count) {
                return Err(DecError::DegenerateSimplex(format!(
                    "vertex index {v} exceeds vertex count {vertex_count}"
                )));
            }
            tops.push(Simplex::new(verts.clone())?);
        }
        tops.sort_by(|a, b| a.vertices.cmp(&b.vertices));
        tops.dedup_by(|a, b| a.vertices == b.vertices);

        let mut skeletons: Vec<Vec<Simplex>> = Vec::with_capacity(dimension + 1);
        for p in 0..dimension {
            let mut faces: Vec<Vec<usize>> = tops
                .iter()
                .flat_map(|t| t.vertices.iter().copied().combinations(p + 1))
                .collect();
            faces.sort_unstable();
            faces.dedup();
            skeletons.push(
                faces
                    .into_iter()
                    .map(|vertices| Simplex {
                        vertices,
                        parity: 1,
                    })
                    .collect(),
            );
        }
        skeletons.push(tops);

        Ok(Self {
            dimension,
            vertex_count,
            skeletons,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn skeleton(&self, p: usize) -> &[Simplex] {
        &self.skeletons[p]
    }

    pub fn num_simplices(&self, p: usize) -> usize {
        self.skeletons[p].len()
    }

    /// Lexicographic rank of a sorted vertex tuple within the p-skeleton.
    pub fn rank(&self, p: usize, sorted_vertices: &[usize]) -> Option<usize> {
        self.skeletons[p]
            .binary_search_by(|s| s.vertices.as_slice().cmp(sorted_vertices))
            .ok()
    }

    /// Original vertex id of the i-th 0-simplex.
    pub fn vertex_id(&self, rank: usize) -> usize {
        self.skeletons[0][rank].vertices[0]
    }

    /// Alternating sum of skeleton sizes.
    pub fn euler_characteristic(&self) -> i64 {
        self.skeletons
            .iter()
            .enumerate()
            .map(|(p, s)| if p % 2 == 0 { s.len() as i64 } else { -(s.len() as i64) })
            .sum()
    }

    /// Signed boundary operator from p-simplices to (p-1)-simplices.
    ///
    /// Column j encodes the alternating face sum of the j-th p-simplex, with
    /// the stored parity composed in. Entries are exact integers.
    pub fn boundary_matrix(&self, p: usize) -> Result<CsrMatrix<i64>> {
        if p < 1 || p > self.dimension {
            return Err(DecError::Degree {
                degree: p,
                dimension: self.dimension,
            });
        }
        let rows = self.num_simplices(p - 1);
        let cols = self.num_simplices(p);
        let mut triplets = Vec::with_capacity(cols * (p + 1));
        for (j, simplex) in self.skeletons[p].iter().enumerate() {
            let parity = simplex.parity as i64;
            for (i, face) in simplex.faces().enumerate() {
                let r = self
                    .rank(p - 1, &face)
                    .expect("face closure: every face is in the lower skeleton");
                let sign = if i % 2 == 0 { 1 } else { -1 };
                triplets.push((r, j, sign * parity));
            }
        }
        Ok(CsrMatrix::from_triplets(rows, cols, triplets))
    }

    /// Discrete exterior derivative d_p: the transpose of the boundary
    /// operator one degree up.
    pub fn exterior_derivative(&self, p: usize) -> Result<CsrMatrix<i64>> {
        if p >= self.dimension {
            return Err(DecError::Degree {
                degree: p,
                dimension: self.dimension,
            });
        }
        Ok(self.boundary_matrix(p + 1)?.transpose())
    }

    /// Coface ranks: for each p-simplex, the (p+1)-simplices containing it.
    pub fn cofaces(&self, p: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_simplices(p)];
        if p >= self.dimension {
            return out;
        }
        for (j, simplex) in self.skeletons[p + 1].iter().enumerate() {
            for face in simplex.faces() {
                let r = self.rank(p, &face).expect("face closure");
                out[r].push(j);
            }
        }
        out
    }

    /// Top-simplex ranks containing each p-simplex.
    pub fn top_cofaces(&self, p: usize) -> Vec<Vec<usize>> {
        let n = self.dimension;
        let mut out = vec![Vec::new(); self.num_simplices(p)];
        if p == n {
            for (i, v) in out.iter_mut().enumerate() {
                v.push(i);
            }
            return out;
        }
        for (j, top) in self.skeletons[n].iter().enumerate() {
            for combo in top.vertices.iter().copied().combinations(p + 1) {
                let r = self.rank(p, &combo).expect("face closure");
                out[r].push(j);
            }
        }
        out
    }
}
