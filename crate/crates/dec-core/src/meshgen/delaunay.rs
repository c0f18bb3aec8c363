//! Bowyer-Watson Delaunay triangulation in the plane.
//!
//! Predicates are evaluated on coordinates normalized to the unit box with a
//! relative tolerance of 1e-12; ties break toward "outside", so cocircular
//! configurations never count as violations.

use crate::error::{DecError, Result};

const PREDICATE_TOL: f64 = 1e-12;

#[derive(Clone, Copy)]
struct Tri {
    v: [usize; 3],
    alive: bool,
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Positive when `p` lies strictly inside the circumdisk of ccw triangle
/// (a, b, c), with the tie region counted as outside.
fn in_circumdisk(a: [f64; 2], b: [f64; 2], c: [f64; 2], p: [f64; 2]) -> bool {
    let m = [
        [a[0] - p[0], a[1] - p[1]],
        [b[0] - p[0], b[1] - p[1]],
        [c[0] - p[0], c[1] - p[1]],
    ];
    let sq: Vec<f64> = m.iter().map(|r| r[0] * r[0] + r[1] * r[1]).collect();
    let det = m[0][0] * (m[1][1] * sq[2] - m[2][1] * sq[1])
        - m[0][1] * (m[1][0] * sq[2] - m[2][0] * sq[1])
        + sq[0] * (m[1][0] * m[2][1] - m[2][0] * m[1][1]);
    let scale = sq.iter().fold(1.0_f64, |acc, &s| acc.max(s));
    det > PREDICATE_TOL * scale
}

/// Delaunay triangulation of a 2-D point set. Returned triangles are
/// positively oriented and every open circumdisk is empty of input points up
/// to the predicate tolerance.
pub fn delaunay_2d(points: &[[f64; 2]]) -> Result<Vec<[usize; 3]>> {
    if points.len() < 3 {
        return Err(DecError::DegenerateInput(format!(
            "need at least 3 points for a triangulation, got {}",
            points.len()
        )));
    }
    // normalize into the unit box so the predicate tolerance is relative
    let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
    let norm: Vec<[f64; 2]> = points
        .iter()
        .map(|p| [(p[0] - lo[0]) / span, (p[1] - lo[1]) / span])
        .collect();

    let n = norm.len();
    let mut pts = norm.clone();
    pts.push([-10.0, -10.0]);
    pts.push([12.0, -9.0]);
    pts.push([0.5, 14.0]);

    let mut tris = vec![Tri {
        v: [n, n + 1, n + 2],
        alive: true,
    }];

    for (pi, &p) in norm.iter().enumerate() {
        // collect the cavity: triangles whose circumdisk contains p
        let mut bad = Vec::new();
        for (ti, t) in tris.iter().enumerate() {
            if t.alive && in_circumdisk(pts[t.v[0]], pts[t.v[1]], pts[t.v[2]], p) {
                bad.push(ti);
            }
        }
        if bad.is_empty() {
            // p is cocircular or coincident within tolerance; attach it to the
            // triangle that contains it so the cavity stays non-empty
            let mut fallback = None;
            for (ti, t) in tris.iter().enumerate() {
                if !t.alive {
                    continue;
                }
                let inside = (0..3).all(|k| {
                    orient(pts[t.v[k]], pts[t.v[(k + 1) % 3]], p) >= -PREDICATE_TOL
                });
                if inside {
                    fallback = Some(ti);
                    break;
                }
            }
            match fallback {
                Some(ti) => bad.push(ti),
                None => {
                    return Err(DecError::DegenerateInput(format!(
                        "point {pi} could not be located in the triangulation"
                    )))
                }
            }
        }
        // cavity boundary: edges belonging to exactly one bad triangle
        let mut boundary: Vec<(usize, usize)> = Vec::new();
        for &ti in &bad {
            let v = tris[ti].v;
            for k in 0..3 {
                let e = (v[k], v[(k + 1) % 3]);
                if let Some(pos) = boundary.iter().position(|&(a, b)| (b, a) == e) {
                    boundary.remove(pos);
                } else {
                    boundary.push(e);
                }
            }
        }
        for &ti in &bad {
            tris[ti].alive = false;
        }
        for (a, b) in boundary {
            // keep winding: (a, b) is ccw on the cavity boundary
            let v = if orient(pts[a], pts[b], p) > 0.0 {
                [a, b, pi]
            } else {
                [b, a, pi]
            };
            tris.push(Tri { v, alive: true });
        }
    }

    let mut out: Vec<[usize; 3]> = tris
        .into_iter()
        .filter(|t| t.alive && t.v.iter().all(|&v| v < n))
        .map(|t| t.v)
        .collect();
    if out.is_empty() {
        return Err(DecError::DegenerateInput(
            "all points are collinear".into(),
        ));
    }
    for t in &mut out {
        if orient(points[t[0]], points[t[1]], points[t[2]]) < 0.0 {
            t.swap(1, 2);
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Brute-force check of the empty-circumdisk property; used by tests and the
/// acceptance suite as the independent oracle for [`delaunay_2d`].
pub fn circumdisk_violations(points: &[[f64; 2]], triangles: &[[usize; 3]]) -> usize {
    let mut violations = 0;
    for t in triangles {
        for (pi, &p) in points.iter().enumerate() {
            if t.contains(&pi) {
                continue;
            }
            if in_circumdisk(points[t[0]], points[t[1]], points[t[2]], p) {
                violations += 1;
            }
        }
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_two_triangles() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let tris = delaunay_2d(&pts).unwrap();
        assert_eq!(tris.len(), 2);
        assert_eq!(circumdisk_violations(&pts, &tris), 0);
    }

    #[test]
    fn square_with_center_gives_four_fans() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, 0.5]];
        let tris = delaunay_2d(&pts).unwrap();
        assert_eq!(tris.len(), 4);
        assert!(tris.iter().all(|t| t.contains(&4)));
        assert_eq!(circumdisk_violations(&pts, &tris), 0);
    }

    #[test]
    fn collinear_points_error() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]];
        assert!(matches!(
            delaunay_2d(&pts),
            Err(DecError::DegenerateInput(_))
        ));
    }

    #[test]
    fn triangles_positively_oriented() {
        let pts = [[0.0, 0.0], [2.0, 0.1], [1.0, 1.5], [0.3, 0.9], [1.7, 1.1]];
        let tris = delaunay_2d(&pts).unwrap();
        for t in &tris {
            assert!(orient(pts[t[0]], pts[t[1]], pts[t[2]]) > 0.0);
        }
    }
}
