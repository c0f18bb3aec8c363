//! Problem presets: vibrating membrane (Dirichlet/Neumann), electromagnetic
//! cavity (E and H fields), quantum harmonic oscillator in 1/2/3 dimensions,
//! the Dirac-Kahler spectrum, random-mesh variants and the convergence
//! study. Each solve returns an analytic/numerical/percent-error table.

use num_complex::Complex64;
use serde::Serialize;

use crate::calculus::{derham_to_barycenters, inverse_sharp_0, sharp_operator, Cochain};
use crate::error::{DecError, Result};
use crate::mesh::{GridStyle, Mesh};
use crate::meshgen::BoxDomain;
use crate::metric::MetricField;
use crate::solver::{
    apply_dirichlet, eigs_smallest, BoundaryMask, EigOptions, LaplaceTerms, OperatorStack,
    Spectrum,
};
use crate::sparse::CsrMatrix;

type C64 = Complex64;

/// Eigenvalues this close to zero (or below) count as kernel modes and are
/// dropped where the problem calls for the nonzero spectrum.
pub const ZERO_DROP: f64 = 1e-6;

/// Default entrywise metric shift for problems that must invert the
/// degree-1 Hodge star on right-triangle grids. The negative sign tips the
/// right angles of asymmetric grids acute, so every dual volume and hence
/// every mass-matrix entry comes out positive.
pub const DEFAULT_GRID_SHIFT: f64 = -1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    MembraneDirichlet,
    MembraneNeumann,
    CavityE,
    CavityH,
    Qho { dim: usize },
    DiracKahler,
}

impl ProblemKind {
    pub fn name(&self) -> String {
        match self {
            Self::MembraneDirichlet => "membrane-dirichlet".into(),
            Self::MembraneNeumann => "membrane-neumann".into(),
            Self::CavityE => "cavity-e".into(),
            Self::CavityH => "cavity-h".into(),
            Self::Qho { dim } => format!("qho-{dim}d"),
            Self::DiracKahler => "dirac-kahler".into(),
        }
    }

    fn default_domain(&self) -> BoxDomain {
        match self {
            Self::Qho { dim } => BoxDomain::new(
                vec![-std::f64::consts::PI; *dim],
                vec![std::f64::consts::PI; *dim],
            )
            .expect("static bounds"),
            _ => BoxDomain::square(0.0, std::f64::consts::PI),
        }
    }

    fn default_style(&self) -> GridStyle {
        // membrane problems only invert the vertex star, so they run on the
        // symmetric pattern; everything that needs an invertible degree-1
        // star uses asymmetric grids where a signed shift fixes every dual
        match self {
            Self::MembraneDirichlet | Self::MembraneNeumann => GridStyle::Symmetric,
            _ => GridStyle::Asymmetric,
        }
    }

    fn default_shift(&self) -> f64 {
        match self {
            Self::CavityE | Self::CavityH | Self::DiracKahler => DEFAULT_GRID_SHIFT,
            _ => 0.0,
        }
    }

    fn dim(&self) -> usize {
        match self {
            Self::Qho { dim } => *dim,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub enum MeshSource {
    /// The problem's default grid (20 points per axis).
    Default,
    Grid {
        shape: Vec<usize>,
        style: Option<GridStyle>,
    },
    Random {
        points: usize,
        seed: u64,
    },
    Loaded(Mesh),
}

#[derive(Debug, Clone)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    pub source: MeshSource,
    pub domain: Option<BoxDomain>,
    pub k: usize,
    pub tol: f64,
    pub epsilon: Option<f64>,
    pub subdivision: usize,
    pub dense_threshold: usize,
}

impl ProblemConfig {
    pub fn new(kind: ProblemKind) -> Self {
        Self {
            kind,
            source: MeshSource::Default,
            domain: None,
            k: 10,
            tol: 1e-8,
            epsilon: None,
            subdivision: 4,
            dense_threshold: 2500,
        }
    }

    pub fn with_source(mut self, source: MeshSource) -> Self {
        self.source = source;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub analytic: f64,
    pub numerical: f64,
    pub percent_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableMetadata {
    pub problem: String,
    pub mesh: String,
    pub vertices: usize,
    pub top_simplices: usize,
    pub unknowns: usize,
    pub seed: Option<u64>,
    pub elapsed_ms: u128,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    pub metadata: TableMetadata,
}

impl ResultTable {
    pub fn build(analytic: &[f64], numerical: &[f64], metadata: TableMetadata) -> Self {
        let rows = analytic
            .iter()
            .zip(numerical)
            .map(|(&a, &n)| ResultRow {
                analytic: a,
                numerical: n,
                percent_error: 100.0 * (n - a).abs() / a,
            })
            .collect();
        Self { rows, metadata }
    }

    pub fn max_percent_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.percent_error)
            .fold(0.0, f64::max)
    }

    pub fn mean_percent_error(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().map(|r| r.percent_error).sum::<f64>() / self.rows.len() as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("analytic,numerical,percent_error\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{}\n",
                r.analytic, r.numerical, r.percent_error
            ));
        }
        out
    }
}

/// Everything a solve produces: the comparison table, the raw spectrum, and
/// the operator stack plus masks needed to export eigenmode fields.
pub struct SolveOutput {
    pub table: ResultTable,
    pub spectrum: Spectrum,
    pub stack: OperatorStack,
    /// Mask per degree whose block participates in the eigenvector.
    pub masks: Vec<BoundaryMask>,
    /// Cochain degrees covered by the eigenvector blocks, in block order.
    pub degrees: Vec<usize>,
}

impl SolveOutput {
    /// Scatters the i-th eigenvector back to full cochains, one per degree
    /// block (boundary entries are zero under Dirichlet masks).
    pub fn eigencochains(&self, mode: usize) -> Vec<Cochain> {
        let vector = &self.spectrum.eigenvectors[mode];
        let mut out = Vec::new();
        let mut offset = 0;
        for (mask, &degree) in self.masks.iter().zip(&self.degrees) {
            let len = self.stack.complex.num_simplices(degree);
            let mut cochain = Cochain::zeros(degree, len);
            for (local, &rank) in mask.interior.iter().enumerate() {
                cochain.values[rank] = vector[offset + local];
            }
            offset += mask.interior.len();
            out.push(cochain);
        }
        out
    }
}

fn resolve_mesh(config: &ProblemConfig) -> Result<(Mesh, String, Option<u64>)> {
    let kind = &config.kind;
    let domain = config
        .domain
        .clone()
        .unwrap_or_else(|| kind.default_domain());
    match &config.source {
        MeshSource::Default => {
            let shape = vec![20; kind.dim()];
            let style = kind.default_style();
            let mesh = Mesh::grid(&shape, &domain, style, &[])?;
            Ok((mesh, format!("grid {shape:?} {style:?}"), None))
        }
        MeshSource::Grid { shape, style } => {
            if shape.len() != kind.dim() {
                return Err(DecError::Parameter(format!(
                    "problem {} needs a {}-dimensional mesh, got shape {:?}",
                    kind.name(),
                    kind.dim(),
                    shape
                )));
            }
            let style = style.unwrap_or_else(|| kind.default_style());
            let mesh = Mesh::grid(shape, &domain, style, &[])?;
            Ok((mesh, format!("grid {shape:?} {style:?}"), None))
        }
        MeshSource::Random { points, seed } => {
            if kind.dim() != 2 {
                return Err(DecError::Parameter(
                    "random meshes are two-dimensional".into(),
                ));
            }
            let mesh = Mesh::random(*points, &domain, &[], *seed)?;
            Ok((mesh, format!("random M={points} seed={seed}"), Some(*seed)))
        }
        MeshSource::Loaded(mesh) => Ok((mesh.clone(), "file".into(), None)),
    }
}

fn metric_for(config: &ProblemConfig) -> MetricField {
    let shift = config.epsilon.unwrap_or(match &config.source {
        MeshSource::Random { .. } => 0.0,
        _ => config.kind.default_shift(),
    });
    MetricField::euclidean().with_epsilon(shift)
}

/// Solves any preset problem.
pub fn solve(config: &ProblemConfig) -> Result<SolveOutput> {
    let start = std::time::Instant::now();
    let (mesh, mesh_desc, seed) = resolve_mesh(config)?;
    let metric = metric_for(config);
    let complex = mesh.complex()?;
    let embedding = mesh.embedding()?;
    let vertices = complex.num_simplices(0);
    let tops = complex.num_simplices(complex.dimension());
    let stack = OperatorStack::build(complex, embedding, &metric)?;

    let opts = EigOptions {
        tol: config.tol,
        dense_threshold: config.dense_threshold,
        ..Default::default()
    };

    let (analytic, spectrum, masks, degrees, unknowns) = match config.kind {
        ProblemKind::MembraneDirichlet => {
            let (a, b) = stack.laplace_beltrami(0, LaplaceTerms::Full)?;
            let mask = BoundaryMask::dirichlet(&stack.complex, 0);
            let ai = apply_dirichlet(&a, &mask, &mask)?;
            let bi = apply_dirichlet(&b, &mask, &mask)?;
            let n = ai.rows();
            let spectrum = eigs_smallest(&ai, &bi, config.k, &opts)?;
            (
                analytic_membrane_dirichlet(config.k),
                spectrum,
                vec![mask],
                vec![0],
                n,
            )
        }
        ProblemKind::MembraneNeumann => {
            let (a, b) = stack.laplace_beltrami(0, LaplaceTerms::Full)?;
            let mask = BoundaryMask::none(&stack.complex, 0);
            let n = a.rows();
            let opts = EigOptions {
                drop_below: Some(ZERO_DROP),
                ..opts
            };
            let spectrum = eigs_smallest(&a, &b, config.k, &opts)?;
            (
                analytic_membrane_neumann(config.k),
                spectrum,
                vec![mask],
                vec![0],
                n,
            )
        }
        ProblemKind::CavityE | ProblemKind::CavityH => {
            // both fields obey the same equation; only the boundary treatment
            // differs: E is masked on boundary edges, H is free. The
            // curl-curl part alone carries the physical spectrum; closed
            // 1-forms sit in its kernel and are dropped.
            let (a, b) = stack.laplace_beltrami(1, LaplaceTerms::Up)?;
            let mask = if config.kind == ProblemKind::CavityE {
                BoundaryMask::dirichlet(&stack.complex, 1)
            } else {
                BoundaryMask::none(&stack.complex, 1)
            };
            let ai = apply_dirichlet(&a, &mask, &mask)?;
            let bi = apply_dirichlet(&b, &mask, &mask)?;
            let n = ai.rows();
            let opts = EigOptions {
                drop_below: Some(ZERO_DROP),
                ..opts
            };
            let spectrum = eigs_smallest(&ai, &bi, config.k, &opts)?;
            let analytic = if config.kind == ProblemKind::CavityE {
                analytic_membrane_neumann(config.k)
            } else {
                analytic_membrane_dirichlet(config.k)
            };
            (analytic, spectrum, vec![mask], vec![1], n)
        }
        ProblemKind::Qho { dim } => {
            // potential pipeline: de Rham map of |x|^2/2 onto the top cells,
            // then the least-squares inverse of the 0-form sharp
            let v_sharp = derham_to_barycenters(
                &|x: &[C64]| {
                    let r2: f64 = x.iter().map(|c| c.re * c.re).sum();
                    C64::new(0.5 * r2, 0.0)
                },
                &stack.complex,
                &stack.embedding,
                config.subdivision,
            )?;
            let sharp0 = sharp_operator(&stack.complex, &stack.geometry, 0)?;
            let (potential, _residual) = inverse_sharp_0(&sharp0, &v_sharp)?;

            let (a_up, b) = stack.laplace_beltrami(0, LaplaceTerms::Up)?;
            let star0 = stack.star(0);
            let mass_v: Vec<C64> = potential
                .values
                .iter()
                .zip(star0)
                .map(|(v, &s)| C64::new(v.re * s, 0.0))
                .collect();
            let a = a_up
                .scale(C64::new(0.5, 0.0))
                .add(&CsrMatrix::from_diag(&mass_v))?;
            let mask = BoundaryMask::dirichlet(&stack.complex, 0);
            let ai = apply_dirichlet(&a, &mask, &mask)?;
            let bi = apply_dirichlet(&b, &mask, &mask)?;
            let n = ai.rows();
            let spectrum = eigs_smallest(&ai, &bi, config.k, &opts)?;
            (analytic_qho(dim, config.k), spectrum, vec![mask], vec![0], n)
        }
        ProblemKind::DiracKahler => {
            let (a, b) = stack.dirac_kahler()?;
            let dim = stack.complex.dimension();
            let masks: Vec<BoundaryMask> = (0..=dim)
                .map(|p| BoundaryMask::dirichlet(&stack.complex, p))
                .collect();
            let combined = stack.dirac_kahler_mask(&masks);
            let ai = apply_dirichlet(&a, &combined, &combined)?;
            let bi = apply_dirichlet(&b, &combined, &combined)?;
            let n = ai.rows();
            // the pencil is symmetric about zero; keeping the positive branch
            // reports each magnitude once, zeros excluded
            let opts = EigOptions {
                drop_below: Some(ZERO_DROP),
                ..opts
            };
            let spectrum = eigs_smallest(&ai, &bi, config.k, &opts)?;
            (
                analytic_dirac_kahler(config.k),
                spectrum,
                masks,
                (0..=dim).collect(),
                n,
            )
        }
    };

    let numerical = spectrum.eigenvalues.clone();
    let metadata = TableMetadata {
        problem: config.kind.name(),
        mesh: mesh_desc,
        vertices,
        top_simplices: tops,
        unknowns,
        seed,
        elapsed_ms: start.elapsed().as_millis(),
    };
    let table = ResultTable::build(&analytic, &numerical, metadata);
    // the Dirac-Kahler masks above include every degree; for the combined
    // pencil the eigenvector blocks follow those masks in degree order
    Ok(SolveOutput {
        table,
        spectrum,
        stack,
        masks,
        degrees,
    })
}

/// Sorted m^2 + n^2 for m, n >= 1.
pub fn analytic_membrane_dirichlet(k: usize) -> Vec<f64> {
    let mut vals: Vec<f64> = (1..=24)
        .flat_map(|m| (1..=24).map(move |n| (m * m + n * n) as f64))
        .collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals.truncate(k);
    vals
}

/// Sorted m^2 + n^2 for m, n >= 0, not both zero.
pub fn analytic_membrane_neumann(k: usize) -> Vec<f64> {
    let mut vals: Vec<f64> = (0..=24)
        .flat_map(|m| (0..=24).map(move |n| (m * m + n * n) as f64))
        .filter(|&v| v > 0.0)
        .collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals.truncate(k);
    vals
}

/// Sorted sums of (n_i + 1/2) over occupation numbers in `dim` dimensions.
pub fn analytic_qho(dim: usize, k: usize) -> Vec<f64> {
    let mut vals = Vec::new();
    let mut n = vec![0usize; dim];
    loop {
        vals.push(n.iter().map(|&x| x as f64 + 0.5).sum::<f64>());
        let mut carry = 0;
        loop {
            if carry == dim {
                break;
            }
            n[carry] += 1;
            if n[carry] <= 24 {
                break;
            }
            n[carry] = 0;
            carry += 1;
        }
        if carry == dim {
            break;
        }
    }
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals.truncate(k);
    vals
}

/// Sorted sqrt(m^2 + n^2) for m, n >= 0, not both zero.
pub fn analytic_dirac_kahler(k: usize) -> Vec<f64> {
    analytic_membrane_neumann(k)
        .into_iter()
        .map(|v| v.sqrt())
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub points: usize,
    pub mean_percent_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub warnings: Vec<String>,
}

/// Mean first-k percent error of the Dirichlet membrane on random meshes,
/// averaged over `repeats` meshes per point count. Deterministic in `seed`.
pub fn convergence_study(
    point_counts: &[usize],
    repeats: usize,
    seed: u64,
    k: usize,
) -> Result<ConvergenceReport> {
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for &m in point_counts {
        let mut errors = Vec::new();
        for rep in 0..repeats {
            let derived = seed
                .wrapping_mul(1_000_003)
                .wrapping_add(m as u64)
                .wrapping_mul(31)
                .wrapping_add(rep as u64);
            let config = ProblemConfig::new(ProblemKind::MembraneDirichlet)
                .with_source(MeshSource::Random {
                    points: m,
                    seed: derived,
                })
                .with_k(k);
            match solve(&config) {
                Ok(out) => errors.push(out.table.mean_percent_error()),
                Err(DecError::SamplingSaturation { .. }) => {
                    warnings.push(format!("skipped M={m}: sampling saturated"));
                    errors.clear();
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if !errors.is_empty() {
            rows.push(ConvergenceRow {
                points: m,
                mean_percent_error: errors.iter().sum::<f64>() / errors.len() as f64,
            });
        }
    }
    Ok(ConvergenceReport { rows, warnings })
}

/// Sharpened eigenmode export: one JSON object per (mode, degree) with the
/// flattened antisymmetric tensor blocks at the top-simplex barycenters.
pub fn export_fields(output: &SolveOutput, modes: usize) -> Result<serde_json::Value> {
    let mut entries = Vec::new();
    let barycenters: Vec<Vec<f64>> = output
        .stack
        .geometry
        .barycenters
        .iter()
        .map(|b| b.iter().map(|c| c.re).collect())
        .collect();
    for mode in 0..modes.min(output.spectrum.eigenvalues.len()) {
        let cochains = output.eigencochains(mode);
        for cochain in &cochains {
            let sharp = sharp_operator(&output.stack.complex, &output.stack.geometry, cochain.degree)?;
            let tensors = sharp.apply(cochain)?;
            let flat: Vec<serde_json::Value> = tensors
                .iter()
                .map(|c| {
                    if c.im == 0.0 {
                        serde_json::json!(c.re)
                    } else {
                        serde_json::json!([c.re, c.im])
                    }
                })
                .collect();
            entries.push(serde_json::json!({
                "eigenvalue": output.spectrum.eigenvalues[mode],
                "degree": cochain.degree,
                "barycenters": barycenters,
                "tensors": flat,
            }));
        }
    }
    Ok(serde_json::Value::Array(entries))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_tables_match_known_patterns() {
        assert_eq!(
            analytic_membrane_dirichlet(10),
            vec![2.0, 5.0, 5.0, 8.0, 10.0, 10.0, 13.0, 13.0, 17.0, 17.0]
        );
        assert_eq!(
            analytic_membrane_neumann(10),
            vec![1.0, 1.0, 2.0, 4.0, 4.0, 5.0, 5.0, 8.0, 9.0, 9.0]
        );
        assert_eq!(
            analytic_qho(2, 10),
            vec![1.0, 2.0, 2.0, 3.0, 3.0, 3.0, 4.0, 4.0, 4.0, 4.0]
        );
        let qho3 = analytic_qho(3, 10);
        assert_eq!(qho3[0], 1.5);
        assert_eq!(&qho3[1..4], &[2.5, 2.5, 2.5]);
        assert_eq!(&qho3[4..10], &[3.5; 6]);
        let dk = analytic_dirac_kahler(10);
        assert!((dk[2] - 2.0_f64.sqrt()).abs() < 1e-12);
        assert!((dk[7] - 8.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn percent_errors_consistent() {
        let t = ResultTable::build(
            &[2.0, 4.0],
            &[1.9, 4.2],
            TableMetadata {
                problem: "test".into(),
                mesh: "none".into(),
                vertices: 0,
                top_simplices: 0,
                unknowns: 0,
                seed: None,
                elapsed_ms: 0,
            },
        );
        assert!((t.rows[0].percent_error - 5.0).abs() < 1e-12);
        assert!((t.rows[1].percent_error - 5.0).abs() < 1e-12);
        let csv = t.to_csv();
        assert!(csv.starts_with("analytic,numerical,percent_error\n"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn membrane_dirichlet_small_grid() {
        // a coarse 8x8 run already lands within a few percent of 2
        let config = ProblemConfig::new(ProblemKind::MembraneDirichlet)
            .with_source(MeshSource::Grid {
                shape: vec![8, 8],
                style: None,
            })
            .with_k(3);
        let out = solve(&config).unwrap();
        assert!((out.spectrum.eigenvalues[0] - 2.0).abs() / 2.0 < 0.05);
        assert_eq!(out.table.rows.len(), 3);
    }

    #[test]
    fn qho_spectrum_invariant_under_axis_permutation() {
        let a = solve(
            &ProblemConfig::new(ProblemKind::Qho { dim: 2 })
                .with_source(MeshSource::Grid {
                    shape: vec![8, 6],
                    style: None,
                })
                .with_k(4),
        )
        .unwrap();
        let b = solve(
            &ProblemConfig::new(ProblemKind::Qho { dim: 2 })
                .with_source(MeshSource::Grid {
                    shape: vec![6, 8],
                    style: None,
                })
                .with_k(4),
        )
        .unwrap();
        for (x, y) in a.spectrum.eigenvalues.iter().zip(&b.spectrum.eigenvalues) {
            assert!((x - y).abs() < 1e-8, "{x} vs {y}");
        }
    }
}
