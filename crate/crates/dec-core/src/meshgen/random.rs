//! Random point clouds with minimum-separation stratified sampling, and
//! random 2-D meshes with optional periodicity.
//!
//! Sampling works in box-normalized coordinates: separation is enforced in
//! the unit box and positions are scaled per axis afterwards. Strata are
//! filled in order of face dimension (corners, then edge interiors, then
//! face interiors, ...), each candidate resampled until it clears the cutoff
//! radius against everything accepted so far.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::delaunay_2d;
use super::StitchMap;
use crate::error::{DecError, Result};

/// Retries per point before sampling is declared saturated.
const RETRY_BUDGET: usize = 10_000;

/// An axis-aligned rectangular domain.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl BoxDomain {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        if min.len() != max.len() || min.is_empty() {
            return Err(DecError::Parameter("box bounds must agree".into()));
        }
        if min.iter().zip(&max).any(|(a, b)| a >= b) {
            return Err(DecError::Parameter("box must have positive extent".into()));
        }
        Ok(Self { min, max })
    }

    pub fn unit(dim: usize) -> Self {
        Self {
            min: vec![0.0; dim],
            max: vec![1.0; dim],
        }
    }

    pub fn square(lo: f64, hi: f64) -> Self {
        Self {
            min: vec![lo; 2],
            max: vec![hi; 2],
        }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn volume(&self) -> f64 {
        self.min
            .iter()
            .zip(&self.max)
            .map(|(a, b)| b - a)
            .product()
    }

    fn embed(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .enumerate()
            .map(|(k, &u)| self.min[k] + u * (self.max[k] - self.min[k]))
            .collect()
    }
}

/// Points in R^N from the stratified sampler.
#[derive(Debug, Clone)]
pub struct PointCloud {
    pub positions: Vec<Vec<f64>>,
    pub dim: usize,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.positions.len() {
            for j in i + 1..self.positions.len() {
                let d: f64 = self.positions[i]
                    .iter()
                    .zip(&self.positions[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                best = best.min(d.sqrt());
            }
        }
        best
    }
}

/// The cutoff radius R = (1/2) M^(-1/N) in box-normalized coordinates.
pub fn separation_radius(points: usize, dim: usize) -> f64 {
    0.5 / (points as f64).powf(1.0 / dim as f64)
}

fn torus_dist2(a: &[f64], b: &[f64], periodic: &[bool]) -> f64 {
    a.iter()
        .zip(b)
        .zip(periodic)
        .map(|((&x, &y), &per)| {
            let mut d = (x - y).abs();
            if per {
                d = d.min(1.0 - d);
            }
            d * d
        })
        .sum()
}

/// One stratum: a face of the unit box with `free` axes varying and the rest
/// pinned at the values in `fixed` (NaN marks a free axis).
struct Stratum {
    fixed: Vec<f64>,
    free: Vec<usize>,
    count: usize,
}

/// Enumerates strata in deterministic order: face dimension ascending, free
/// axis sets lexicographic, pinned values in binary order. Faces pinning a
/// periodic axis are skipped (they are not boundary on the torus).
fn strata(m: usize, n: usize, periodic: &[bool]) -> Vec<Stratum> {
    use itertools::Itertools;
    let m1 = ((m as f64).powf(1.0 / n as f64)).round().max(2.0) as usize;
    let mut out = Vec::new();
    for k in 0..n {
        for free in (0..n).combinations(k) {
            let pinned: Vec<usize> = (0..n).filter(|a| !free.contains(a)).collect();
            if pinned.iter().any(|&a| periodic[a]) {
                continue;
            }
            for bits in 0..(1usize << pinned.len()) {
                let mut fixed = vec![f64::NAN; n];
                for (i, &axis) in pinned.iter().enumerate() {
                    fixed[axis] = if bits >> (pinned.len() - 1 - i) & 1 == 1 {
                        1.0
                    } else {
                        0.0
                    };
                }
                let count = free
                    .iter()
                    .map(|&a| if periodic[a] { m1 - 1 } else { m1.saturating_sub(2) })
                    .product();
                out.push(Stratum {
                    fixed,
                    free: free.clone(),
                    count,
                });
            }
        }
    }
    out
}

fn stratified_points(
    m: usize,
    n: usize,
    seed: u64,
    periodic: &[bool],
) -> Result<Vec<Vec<f64>>> {
    let r = separation_radius(m, n);
    let r2 = r * r;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted: Vec<Vec<f64>> = Vec::with_capacity(m);

    let mut place = |stratum: &Stratum,
                     count: usize,
                     accepted: &mut Vec<Vec<f64>>,
                     rng: &mut ChaCha8Rng|
     -> Result<()> {
        for _ in 0..count {
            if accepted.len() == m {
                return Ok(());
            }
            let mut tries = 0;
            loop {
                let mut p = stratum.fixed.clone();
                for &axis in &stratum.free {
                    p[axis] = rng.gen::<f64>();
                }
                let clear = accepted
                    .iter()
                    .all(|q| torus_dist2(&p, q, periodic) >= r2);
                if clear {
                    accepted.push(p);
                    break;
                }
                tries += 1;
                if tries >= RETRY_BUDGET {
                    return Err(DecError::SamplingSaturation {
                        point: accepted.len(),
                        total: m,
                        retries: RETRY_BUDGET,
                    });
                }
            }
        }
        Ok(())
    };

    for stratum in strata(m, n, periodic) {
        if stratum.free.is_empty() {
            // corners are fixed positions, not sampled
            if accepted.len() < m {
                let p = stratum.fixed.clone();
                if accepted
                    .iter()
                    .all(|q| torus_dist2(&p, q, periodic) >= r2)
                {
                    accepted.push(p);
                }
            }
        } else {
            place(&stratum, stratum.count, &mut accepted, &mut rng)?;
        }
    }
    // the box interior takes the remainder
    let interior = Stratum {
        fixed: vec![f64::NAN; n],
        free: (0..n).collect(),
        count: 0,
    };
    let remainder = m - accepted.len();
    place(&interior, remainder, &mut accepted, &mut rng)?;
    Ok(accepted)
}

/// Stratified random cloud of `m` points in `domain`; deterministic in `seed`.
pub fn random_points(m: usize, dim: usize, domain: &BoxDomain, seed: u64) -> Result<PointCloud> {
    if domain.dim() != dim {
        return Err(DecError::Parameter(format!(
            "domain dimension {} does not match requested dimension {dim}",
            domain.dim()
        )));
    }
    let unit = stratified_points(m, dim, seed, &vec![false; dim])?;
    Ok(PointCloud {
        positions: unit.iter().map(|p| domain.embed(p)).collect(),
        dim,
    })
}

/// Random 2-D Delaunay mesh over `domain`, periodic along the given 0-based
/// axes. Periodic identifications are applied before returning, so the
/// triangle list indexes the real cloud and the stitch map is empty.
pub fn random_mesh(
    m: usize,
    domain: &BoxDomain,
    periodic_axes: &[usize],
    seed: u64,
) -> Result<(PointCloud, Vec<[usize; 3]>, StitchMap)> {
    let n = 2usize;
    if domain.dim() != n {
        return Err(DecError::Parameter(
            "random meshes are generated in dimension 2".into(),
        ));
    }
    let mut periodic = vec![false; n];
    for &axis in periodic_axes {
        if axis >= n {
            return Err(DecError::Axis {
                axis,
                dimension: n,
            });
        }
        periodic[axis] = true;
    }

    let unit = stratified_points(m, n, seed, &periodic)?;
    let r = separation_radius(m, n);
    let band = (4.0 * r).min(0.45);

    // ghost copies of points near periodic boundaries
    let mut pts: Vec<[f64; 2]> = unit.iter().map(|p| [p[0], p[1]]).collect();
    let mut origin: Vec<usize> = (0..m).collect();
    let shifts_for = |axis: usize| -> Vec<f64> {
        if periodic[axis] {
            vec![-1.0, 0.0, 1.0]
        } else {
            vec![0.0]
        }
    };
    for i in 0..m {
        for sx in shifts_for(0) {
            for sy in shifts_for(1) {
                if sx == 0.0 && sy == 0.0 {
                    continue;
                }
                let q = [unit[i][0] + sx, unit[i][1] + sy];
                if q.iter().all(|&c| (-band..=1.0 + band).contains(&c)) {
                    pts.push(q);
                    origin.push(i);
                }
            }
        }
    }

    let tris = delaunay_2d(&pts)?;
    let mut kept: Vec<[usize; 3]> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for t in tris {
        // pick the one copy of each torus triangle whose centroid lies in the
        // fundamental domain
        let centroid = |k: usize| (pts[t[0]][k] + pts[t[1]][k] + pts[t[2]][k]) / 3.0;
        let inside = (0..n).all(|k| !periodic[k] || (0.0..1.0).contains(&centroid(k)));
        if !inside {
            continue;
        }
        let mut mapped = [origin[t[0]], origin[t[1]], origin[t[2]]];
        let mut key = mapped;
        key.sort_unstable();
        if key[0] == key[1] || key[1] == key[2] {
            continue;
        }
        if !seen.insert(key) {
            continue;
        }
        // restore positive orientation in base coordinates where possible;
        // wrapped triangles keep the extended-coordinate orientation
        let o = (unit[mapped[1]][0] - unit[mapped[0]][0])
            * (unit[mapped[2]][1] - unit[mapped[0]][1])
            - (unit[mapped[1]][1] - unit[mapped[0]][1])
                * (unit[mapped[2]][0] - unit[mapped[0]][0]);
        if !periodic.iter().any(|&p| p) && o < 0.0 {
            mapped.swap(1, 2);
        }
        kept.push(mapped);
    }
    kept.sort_unstable();

    let cloud = PointCloud {
        positions: unit.iter().map(|p| domain.embed(p)).collect(),
        dim: n,
    };
    Ok((cloud, kept, StitchMap::default()))
}
