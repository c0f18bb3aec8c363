//! Structured grid meshes in arbitrary dimension, topology stitching, and
//! 2-D random Delaunay meshes.

mod delaunay;
mod random;

pub use delaunay::delaunay_2d;
pub use random::{random_mesh, random_points, separation_radius, PointCloud};

use std::collections::BTreeMap;

use itertools::Itertools;

use crate::error::{DecError, Result};

/// Maps integer grid coordinates to vertex indices, row-major.
#[derive(Debug, Clone)]
pub struct GridIndexMap {
    shape: Vec<usize>,
    strides: Vec<usize>,
}

/// Row-major enumeration of an M_1 x ... x M_N grid of vertices.
pub fn grid_indices(shape: &[usize]) -> Result<GridIndexMap> {
    if shape.is_empty() || shape.iter().any(|&m| m < 2) {
        return Err(DecError::DegenerateGrid(shape.to_vec()));
    }
    let n = shape.len();
    let mut strides = vec![1usize; n];
    for i in (0..n - 1).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    Ok(GridIndexMap {
        shape: shape.to_vec(),
        strides,
    })
}

impl GridIndexMap {
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dimension(&self) -> usize {
        self.shape.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.shape.iter().product()
    }

    /// Vertex index of a grid coordinate, or None if it falls off the grid.
    pub fn index(&self, coords: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for (axis, &c) in coords.iter().enumerate() {
            if c < 0 || c as usize >= self.shape[axis] {
                return None;
            }
            idx += c as usize * self.strides[axis];
        }
        Some(idx)
    }

    pub fn coords(&self, index: usize) -> Vec<usize> {
        let mut rem = index;
        self.strides
            .iter()
            .map(|&s| {
                let c = rem / s;
                rem %= s;
                c
            })
            .collect()
    }

    fn iter_coords(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        self.shape
            .iter()
            .map(|&m| 0..m as i64)
            .multi_cartesian_product()
    }
}

/// Emits vertex lists with positive orientation: the chain's step matrix has
/// positive determinant after an optional swap of the last two vertices.
fn oriented(mut verts: Vec<usize>, flip: bool) -> Vec<usize> {
    if flip {
        let n = verts.len();
        verts.swap(n - 1, n - 2);
    }
    verts
}

fn perm_sign(perm: &[usize]) -> i32 {
    let mut sign = 1;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                sign = -sign;
            }
        }
    }
    sign
}

/// Asymmetric decomposition: every unit cell splits into N! simplices along
/// chains of positive axis-unit steps. Chains falling off the grid are
/// skipped, so boundary cells simply contribute fewer simplices.
pub fn asymmetric_simplices(grid: &GridIndexMap) -> Vec<Vec<usize>> {
    let n = grid.dimension();
    let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let mut out = Vec::new();
    for base in grid.iter_coords() {
        for perm in &perms {
            let mut coords = base.clone();
            let mut verts = Vec::with_capacity(n + 1);
            verts.push(grid.index(&coords).expect("base is on the grid"));
            let mut ok = true;
            for &axis in perm {
                coords[axis] += 1;
                match grid.index(&coords) {
                    Some(v) => verts.push(v),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                out.push(oriented(verts, perm_sign(perm) < 0));
            }
        }
    }
    out
}

/// Symmetric decomposition: anchors are the grid points with all coordinates
/// even; each anchor fans out along signed axis-unit steps, which mirrors the
/// pattern cell by cell. Every unit cell has exactly one such anchor, so the
/// chains tile the grid without overlap.
pub fn symmetric_simplices(grid: &GridIndexMap) -> Vec<Vec<usize>> {
    let n = grid.dimension();
    let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let signs: Vec<Vec<i64>> = (0..n)
        .map(|_| [1i64, -1].into_iter())
        .multi_cartesian_product()
        .collect();
    let mut out = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for base in grid.iter_coords() {
        if base.iter().any(|&c| c % 2 != 0) {
            continue;
        }
        for perm in &perms {
            for sign_combo in &signs {
                let mut coords = base.clone();
                let mut verts = Vec::with_capacity(n + 1);
                verts.push(grid.index(&coords).expect("base is on the grid"));
                let mut ok = true;
                let mut det_sign = perm_sign(perm);
                for (step, &axis) in perm.iter().enumerate() {
                    let s = sign_combo[step];
                    if s < 0 {
                        det_sign = -det_sign;
                    }
                    coords[axis] += s;
                    match grid.index(&coords) {
                        Some(v) => verts.push(v),
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                let mut key = verts.clone();
                key.sort_unstable();
                if seen.insert(key) {
                    out.push(oriented(verts, det_sign < 0));
                }
            }
        }
    }
    out
}

/// Vertex identifications, stored as a map from a vertex to the vertex it is
/// merged into. Paths are compressed on construction.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StitchMap {
    identifications: BTreeMap<usize, usize>,
}

impl StitchMap {
    pub fn new(raw: BTreeMap<usize, usize>) -> Self {
        let mut identifications = BTreeMap::new();
        for &from in raw.keys() {
            let mut to = raw[&from];
            let mut hops = 0;
            while let Some(&next) = raw.get(&to) {
                if next == to || hops > raw.len() {
                    break;
                }
                to = next;
                hops += 1;
            }
            if to != from {
                identifications.insert(from, to);
            }
        }
        Self { identifications }
    }

    pub fn is_empty(&self) -> bool {
        self.identifications.is_empty()
    }

    pub fn len(&self) -> usize {
        self.identifications.len()
    }

    pub fn resolve(&self, v: usize) -> usize {
        *self.identifications.get(&v).unwrap_or(&v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.identifications.iter().map(|(&a, &b)| (a, b))
    }
}

impl FromIterator<(usize, usize)> for StitchMap {
    fn from_iter<I: IntoIterator<Item = (usize, usize)>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// Identifications for periodic boundary conditions: vertices on the far face
/// of every periodic axis map to the near face. Axes are 0-based.
pub fn pbc_stitches(grid: &GridIndexMap, periodic_axes: &[usize]) -> Result<StitchMap> {
    let n = grid.dimension();
    for &axis in periodic_axes {
        if axis >= n {
            return Err(DecError::Axis {
                axis,
                dimension: n,
            });
        }
    }
    let mut raw = BTreeMap::new();
    for coords in grid.iter_coords() {
        let mut target = coords.clone();
        let mut wrapped = false;
        for &axis in periodic_axes {
            if coords[axis] == grid.shape[axis] as i64 - 1 {
                target[axis] = 0;
                wrapped = true;
            }
        }
        if wrapped {
            let from = grid.index(&coords).expect("on grid");
            let to = grid.index(&target).expect("on grid");
            raw.insert(from, to);
        }
    }
    Ok(StitchMap::new(raw))
}

/// Replaces every vertex by its representative and drops simplices that
/// become degenerate. Duplicated simplices are kept; skeleton deduplication
/// happens when the complex is built.
pub fn apply_stitches(simplices: &[Vec<usize>], stitches: &StitchMap) -> Vec<Vec<usize>> {
    simplices
        .iter()
        .filter_map(|s| {
            let mapped: Vec<usize> = s.iter().map(|&v| stitches.resolve(v)).collect();
            let mut key = mapped.clone();
            key.sort_unstable();
            key.dedup();
            (key.len() == mapped.len()).then_some(mapped)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::SimplicialComplex;

    #[test]
    fn row_major_indices() {
        let g = grid_indices(&[2, 2]).unwrap();
        assert_eq!(g.index(&[0, 0]), Some(0));
        assert_eq!(g.index(&[0, 1]), Some(1));
        assert_eq!(g.index(&[1, 0]), Some(2));
        assert_eq!(g.index(&[1, 1]), Some(3));
        assert_eq!(g.index(&[2, 0]), None);
        assert_eq!(g.vertex_count(), 4);
    }

    #[test]
    fn line_grid() {
        let g = grid_indices(&[3]).unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(asymmetric_simplices(&g), vec![vec![0, 1], vec![1, 2]]);
    }

    #[test]
    fn twenty_by_twenty() {
        let g = grid_indices(&[20, 20]).unwrap();
        assert_eq!(g.vertex_count(), 400);
    }

    #[test]
    fn degenerate_grid_errors() {
        assert!(matches!(
            grid_indices(&[1, 5]),
            Err(DecError::DegenerateGrid(_))
        ));
    }

    #[test]
    fn asymmetric_counts() {
        let g2 = grid_indices(&[2, 2]).unwrap();
        assert_eq!(asymmetric_simplices(&g2).len(), 2);
        let g3 = grid_indices(&[3, 3]).unwrap();
        assert_eq!(asymmetric_simplices(&g3).len(), 8);
        let c = grid_indices(&[2, 2, 2]).unwrap();
        assert_eq!(asymmetric_simplices(&c).len(), 6);
    }

    #[test]
    fn symmetric_counts() {
        let g3 = grid_indices(&[3, 3]).unwrap();
        assert_eq!(symmetric_simplices(&g3).len(), 8);
        let g2 = grid_indices(&[2, 2]).unwrap();
        assert_eq!(symmetric_simplices(&g2).len(), 2);
    }

    #[test]
    fn symmetric_alternates_diagonals() {
        // cell (0,0): diagonal through vertex pairs with both-even coords
        let g = grid_indices(&[3, 3]).unwrap();
        let tris = symmetric_simplices(&g);
        let has = |a: usize, b: usize, c: usize| {
            tris.iter().any(|t| {
                let mut s = t.clone();
                s.sort_unstable();
                s == vec![a, b, c]
            })
        };
        // with row-major indexing on a 3x3 grid, (r,c) -> 3r + c
        // cell at rows 0..1, cols 0..1 has even anchor (0,0)=0: diagonal 0-4
        assert!(has(0, 1, 4) || has(0, 3, 4));
        // cell rows 0..1 cols 1..2 has even anchor (0,2)=2: diagonal 2-4
        assert!(has(1, 2, 4) || has(2, 4, 5));
    }

    #[test]
    fn pbc_examples() {
        let line = grid_indices(&[3]).unwrap();
        let s = pbc_stitches(&line, &[0]).unwrap();
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![(2, 0)]);

        let g = grid_indices(&[3, 3]).unwrap();
        let s = pbc_stitches(&g, &[0, 1]).unwrap();
        assert_eq!(s.len(), 5);
        // corner (2,2) = vertex 8 -> (0,0) = vertex 0
        assert_eq!(s.resolve(8), 0);

        assert!(pbc_stitches(&g, &[]).unwrap().is_empty());
        assert!(matches!(
            pbc_stitches(&g, &[2]),
            Err(DecError::Axis { .. })
        ));
    }

    #[test]
    fn stitching_drops_degenerate() {
        let stitches: StitchMap = [(2usize, 0usize)].into_iter().collect();
        assert!(apply_stitches(&[vec![0, 1, 2]], &stitches).is_empty());
        let empty = StitchMap::default();
        assert_eq!(
            apply_stitches(&[vec![0, 1, 2]], &empty),
            vec![vec![0, 1, 2]]
        );
    }

    #[test]
    fn torus_euler_characteristic() {
        let g = grid_indices(&[4, 4]).unwrap();
        let tris = asymmetric_simplices(&g);
        let stitches = pbc_stitches(&g, &[0, 1]).unwrap();
        let stitched = apply_stitches(&tris, &stitches);
        let complex = SimplicialComplex::build(&stitched, 16).unwrap();
        assert_eq!(complex.euler_characteristic(), 0);
    }

    #[test]
    fn grid_euler_characteristic_is_one() {
        for style in [asymmetric_simplices, symmetric_simplices] {
            let g = grid_indices(&[5, 4]).unwrap();
            let complex = SimplicialComplex::build(&style(&g), 20).unwrap();
            assert_eq!(complex.euler_characteristic(), 1);
        }
    }
}
