//! Mesh assembly and the JSON mesh file format shared by the CLI commands:
//! `{ "dimension": N, "vertices": [...], "simplices": [...], "stitches":
//! {...} }`, with complex coordinates written as `[re, im]` pairs and real
//! ones as plain numbers.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::complex::SimplicialComplex;
use crate::error::{DecError, Result};
use crate::geometry::Embedding;
use crate::meshgen::{
    apply_stitches, asymmetric_simplices, grid_indices, pbc_stitches, random_mesh,
    symmetric_simplices, BoxDomain, StitchMap,
};

type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridStyle {
    Asymmetric,
    Symmetric,
}

impl std::str::FromStr for GridStyle {
    type Err = DecError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "asymmetric" => Ok(Self::Asymmetric),
            "symmetric" => Ok(Self::Symmetric),
            other => Err(DecError::Parameter(format!(
                "unknown grid style '{other}' (expected asymmetric or symmetric)"
            ))),
        }
    }
}

/// A generated or loaded mesh: vertex embedding, top simplices, and any
/// pending vertex identifications.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub dimension: usize,
    pub vertices: Vec<Vec<C64>>,
    pub simplices: Vec<Vec<usize>>,
    pub stitches: StitchMap,
}

impl Mesh {
    /// Structured grid over `domain` with `shape` points per axis.
    pub fn grid(
        shape: &[usize],
        domain: &BoxDomain,
        style: GridStyle,
        periodic_axes: &[usize],
    ) -> Result<Self> {
        if domain.dim() != shape.len() {
            return Err(DecError::Parameter(format!(
                "domain dimension {} does not match grid shape {:?}",
                domain.dim(),
                shape
            )));
        }
        let grid = grid_indices(shape)?;
        let simplices = match style {
            GridStyle::Asymmetric => asymmetric_simplices(&grid),
            GridStyle::Symmetric => symmetric_simplices(&grid),
        };
        let stitches = pbc_stitches(&grid, periodic_axes)?;
        let vertices = (0..grid.vertex_count())
            .map(|v| {
                grid.coords(v)
                    .iter()
                    .enumerate()
                    .map(|(axis, &i)| {
                        let t = i as f64 / (shape[axis] as f64 - 1.0);
                        C64::new(
                            domain.min[axis] + t * (domain.max[axis] - domain.min[axis]),
                            0.0,
                        )
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            dimension: shape.len(),
            vertices,
            simplices,
            stitches,
        })
    }

    /// Random 2-D Delaunay mesh; periodic identifications are already applied.
    pub fn random(m: usize, domain: &BoxDomain, periodic_axes: &[usize], seed: u64) -> Result<Self> {
        let (cloud, triangles, stitches) = random_mesh(m, domain, periodic_axes, seed)?;
        Ok(Self {
            dimension: 2,
            vertices: cloud
                .positions
                .iter()
                .map(|p| p.iter().map(|&x| C64::new(x, 0.0)).collect())
                .collect(),
            simplices: triangles.iter().map(|t| t.to_vec()).collect(),
            stitches,
        })
    }

    /// Builds the simplicial complex, applying any stitches first.
    pub fn complex(&self) -> Result<SimplicialComplex> {
        let tops = if self.stitches.is_empty() {
            self.simplices.clone()
        } else {
            apply_stitches(&self.simplices, &self.stitches)
        };
        SimplicialComplex::build(&tops, self.vertices.len())
    }

    pub fn embedding(&self) -> Result<Embedding> {
        Embedding::new(self.vertices.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = MeshFile {
            dimension: self.dimension,
            vertices: self
                .vertices
                .iter()
                .map(|p| p.iter().map(|&c| Coord::from(c)).collect())
                .collect(),
            simplices: self.simplices.clone(),
            stitches: self
                .stitches
                .iter()
                .map(|(a, b)| (a.to_string(), b))
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MeshFile = serde_json::from_str(text)?;
        let mut raw = BTreeMap::new();
        for (k, v) in file.stitches {
            let from: usize = k
                .parse()
                .map_err(|_| DecError::Parameter(format!("bad stitch key '{k}'")))?;
            raw.insert(from, v);
        }
        Ok(Self {
            dimension: file.dimension,
            vertices: file
                .vertices
                .into_iter()
                .map(|p| p.into_iter().map(C64::from).collect())
                .collect(),
            simplices: file.simplices,
            stitches: StitchMap::new(raw),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// One embedding coordinate: a plain number when real, an `[re, im]` pair
/// otherwise.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Coord {
    Real(f64),
    Complex([f64; 2]),
}

impl From<C64> for Coord {
    fn from(c: C64) -> Self {
        if c.im == 0.0 {
            Coord::Real(c.re)
        } else {
            Coord::Complex([c.re, c.im])
        }
    }
}

impl From<Coord> for C64 {
    fn from(c: Coord) -> Self {
        match c {
            Coord::Real(x) => C64::new(x, 0.0),
            Coord::Complex([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct MeshFile {
    dimension: usize,
    vertices: Vec<Vec<Coord>>,
    simplices: Vec<Vec<usize>>,
    #[serde(default)]
    stitches: BTreeMap<String, usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_mesh_roundtrips_through_json() {
        let domain = BoxDomain::square(0.0, std::f64::consts::PI);
        let mesh = Mesh::grid(&[4, 4], &domain, GridStyle::Symmetric, &[]).unwrap();
        let text = mesh.to_json().unwrap();
        let back = Mesh::from_json(&text).unwrap();
        assert_eq!(back.dimension, 2);
        assert_eq!(back.vertices.len(), 16);
        assert_eq!(back.simplices, mesh.simplices);
    }

    #[test]
    fn periodic_grid_stores_stitches() {
        let mesh = Mesh::grid(&[4, 4], &BoxDomain::unit(2), GridStyle::Asymmetric, &[0, 1]).unwrap();
        assert!(!mesh.stitches.is_empty());
        let complex = mesh.complex().unwrap();
        assert_eq!(complex.euler_characteristic(), 0);
        let text = mesh.to_json().unwrap();
        let back = Mesh::from_json(&text).unwrap();
        assert_eq!(back.complex().unwrap().euler_characteristic(), 0);
    }

    #[test]
    fn complex_coordinates_roundtrip_as_pairs() {
        let mesh = Mesh {
            dimension: 1,
            vertices: vec![vec![C64::new(1.0, 0.5)], vec![C64::new(2.0, 0.0)]],
            simplices: vec![vec![0, 1]],
            stitches: StitchMap::default(),
        };
        let text = mesh.to_json().unwrap();
        assert!(text.contains("[") && text.contains("0.5"));
        let back = Mesh::from_json(&text).unwrap();
        assert_eq!(back.vertices[0][0], C64::new(1.0, 0.5));
        assert_eq!(back.vertices[1][0], C64::new(2.0, 0.0));
    }
}
