use super::sobol::Sobol;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const FILL_ATTEMPTS_PER_POINT: usize = 100;

/// Affine map of the input bounding box onto the unit cube. Hull geometry runs
/// in normalized coordinates so that tolerances do not depend on units.
#[derive(Clone, Debug, PartialEq)]
struct BoxMap<S, const D: usize> {
    lo: [S; D],
    hi: [S; D],
}

impl<S: Scalar, const D: usize> BoxMap<S, D> {
    fn of(points: &[[S; D]]) -> Result<Self> {
        let mut lo = [S::infinity(); D];
        let mut hi = [S::neg_infinity(); D];
        for p in points {
            for j in 0..D {
                if !p[j].is_finite() {
                    return Err(Error::non_finite("hull input point"));
                }
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
        for j in 0..D {
            if !(hi[j] > lo[j]) {
                return Err(Error::Degenerate(format!(
                    "hull input is flat in coordinate {j}"
                )));
            }
        }
        Ok(BoxMap { lo, hi })
    }

    fn to_unit(&self, p: &[S; D]) -> [S; D] {
        let mut q = *p;
        for j in 0..D {
            q[j] = (p[j] - self.lo[j]) / (self.hi[j] - self.lo[j]);
        }
        q
    }

    fn from_unit(&self, q: &[S]) -> [S; D] {
        let mut p = [S::zero(); D];
        for j in 0..D {
            p[j] = self.lo[j] + q[j] * (self.hi[j] - self.lo[j]);
        }
        p
    }
}

fn geom_tol<S: Scalar>() -> S {
    S::lit(1e-10).max(S::epsilon() * S::lit(256.0))
}

fn fill_box<S: Scalar, const D: usize>(
    map: &BoxMap<S, D>,
    n: usize,
    contains_unit: impl Fn(&[S; D]) -> bool,
) -> Result<Vec<[S; D]>> {
    let mut gen = Sobol::new(D)?;
    gen.skip(1);
    let mut out = Vec::with_capacity(n);
    let cap = FILL_ATTEMPTS_PER_POINT * n.max(1);
    let mut attempts = 0;
    while out.len() < n {
        if attempts == cap {
            return Err(Error::Degenerate(format!(
                "hull fill accepted {} of {n} points in {cap} attempts",
                out.len()
            )));
        }
        attempts += 1;
        let u: Vec<S> = gen.next_point();
        let mut q = [S::zero(); D];
        q.copy_from_slice(&u);
        if contains_unit(&q) {
            out.push(map.from_unit(&q));
        }
    }
    Ok(out)
}

/// Strictly convex polygon with counterclockwise vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct Hull2D<S = f64> {
    vertices: Vec<[S; 2]>,
    map: BoxMap<S, 2>,
    unit: Vec<[S; 2]>,
}

fn cross<S: Scalar>(o: &[S; 2], a: &[S; 2], b: &[S; 2]) -> S {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Monotone-chain convex hull.
pub fn convex_hull<S: Scalar>(points: &[[S; 2]]) -> Result<Hull2D<S>> {
    Hull2D::new(points)
}

impl<S: Scalar> Hull2D<S> {
    pub fn new(points: &[[S; 2]]) -> Result<Self> {
        let mut distinct: Vec<[S; 2]> = points.to_vec();
        distinct.sort_by(|a, b| {
            a[0].partial_cmp(&b[0])
                .unwrap()
                .then(a[1].partial_cmp(&b[1]).unwrap())
        });
        distinct.dedup();
        if distinct.len() < 3 {
            return Err(Error::invalid(
                "convex hull needs at least 3 distinct points",
            ));
        }
        let map =
            BoxMap::of(&distinct).map_err(|_| Error::Degenerate("collinear hull input".into()))?;
        let unit_pts: Vec<[S; 2]> = distinct.iter().map(|p| map.to_unit(p)).collect();
        let tol = geom_tol::<S>();
        let mut idx: Vec<usize> = Vec::with_capacity(2 * unit_pts.len());
        for pass in 0..2 {
            let start = idx.len();
            let order: Box<dyn Iterator<Item = usize>> = if pass == 0 {
                Box::new(0..unit_pts.len())
            } else {
                Box::new((0..unit_pts.len()).rev())
            };
            for i in order {
                while idx.len() >= start + 2
                    && cross(
                        &unit_pts[idx[idx.len() - 2]],
                        &unit_pts[idx[idx.len() - 1]],
                        &unit_pts[i],
                    ) <= tol
                {
                    idx.pop();
                }
                idx.push(i);
            }
            idx.pop();
        }
        if idx.len() < 3 {
            return Err(Error::Degenerate("collinear hull input".into()));
        }
        Ok(Hull2D {
            vertices: idx.iter().map(|&i| distinct[i]).collect(),
            unit: idx.iter().map(|&i| unit_pts[i]).collect(),
            map,
        })
    }

    pub fn vertices(&self) -> &[[S; 2]] {
        &self.vertices
    }

    pub fn area(&self) -> S {
        let n = self.vertices.len();
        let mut a = S::zero();
        for i in 0..n {
            let (p, q) = (&self.vertices[i], &self.vertices[(i + 1) % n]);
            a += p[0] * q[1] - q[0] * p[1];
        }
        a * S::lit(0.5)
    }

    fn contains_unit(&self, q: &[S; 2]) -> bool {
        let n = self.unit.len();
        let tol = geom_tol::<S>();
        (0..n).all(|i| cross(&self.unit[i], &self.unit[(i + 1) % n], q) >= -tol)
    }

    /// Closed containment, with a small tolerance in normalized coordinates.
    pub fn contains(&self, p: &[S; 2]) -> bool {
        self.contains_unit(&self.map.to_unit(p))
    }

    /// `n` Sobol points scaled to the bounding box and kept if inside.
    pub fn fill(&self, n: usize) -> Result<Vec<[S; 2]>> {
        fill_box(&self.map, n, |q| self.contains_unit(q))
    }
}

/// Convex polytope in three dimensions stored as outward-facing triangles.
#[derive(Clone, Debug, PartialEq)]
pub struct Hull3D<S = f64> {
    vertices: Vec<[S; 3]>,
    map: BoxMap<S, 3>,
    // (unit normal, offset) in normalized coordinates; inside means n.x <= offset.
    planes: Vec<([S; 3], S)>,
}

pub fn convex_hull_3d<S: Scalar>(points: &[[S; 3]]) -> Result<Hull3D<S>> {
    Hull3D::new(points)
}

fn sub3<S: Scalar>(a: &[S; 3], b: &[S; 3]) -> [S; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3<S: Scalar>(a: &[S; 3], b: &[S; 3]) -> [S; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot3<S: Scalar>(a: &[S; 3], b: &[S; 3]) -> S {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3<S: Scalar>(a: &[S; 3]) -> S {
    dot3(a, a).sqrt()
}

#[derive(Clone, Copy)]
struct Face<S> {
    v: [usize; 3],
    normal: [S; 3],
    offset: S,
}

fn make_face<S: Scalar>(pts: &[[S; 3]], a: usize, b: usize, c: usize) -> Face<S> {
    let n = cross3(&sub3(&pts[b], &pts[a]), &sub3(&pts[c], &pts[a]));
    let len = norm3(&n);
    let normal = [n[0] / len, n[1] / len, n[2] / len];
    Face {
        v: [a, b, c],
        normal,
        offset: dot3(&normal, &pts[a]),
    }
}

impl<S: Scalar> Hull3D<S> {
    /// Incremental construction; errors when the points are (nearly) coplanar.
    pub fn new(points: &[[S; 3]]) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::invalid("3-D hull needs at least 4 points"));
        }
        let map = BoxMap::of(points)?;
        let pts: Vec<[S; 3]> = points.iter().map(|p| map.to_unit(p)).collect();
        let tol = geom_tol::<S>();
        let degenerate = || Error::Degenerate("3-D hull input is coplanar".into());

        let p0 = (0..pts.len())
            .min_by(|&i, &j| pts[i].partial_cmp(&pts[j]).unwrap())
            .unwrap();
        let far = |score: &dyn Fn(usize) -> S| {
            (0..pts.len())
                .max_by(|&i, &j| score(i).partial_cmp(&score(j)).unwrap())
                .unwrap()
        };
        let p1 = far(&|i| norm3(&sub3(&pts[i], &pts[p0])));
        let d01 = sub3(&pts[p1], &pts[p0]);
        if norm3(&d01) <= tol {
            return Err(degenerate());
        }
        let p2 = far(&|i| norm3(&cross3(&d01, &sub3(&pts[i], &pts[p0]))));
        let n012 = cross3(&d01, &sub3(&pts[p2], &pts[p0]));
        if norm3(&n012) <= tol {
            return Err(degenerate());
        }
        let p3 = far(&|i| dot3(&n012, &sub3(&pts[i], &pts[p0])).abs());
        let vol = dot3(&n012, &sub3(&pts[p3], &pts[p0]));
        if vol.abs() <= S::lit(1e-9) {
            return Err(degenerate());
        }
        let mut faces: Vec<Face<S>> = if vol < S::zero() {
            vec![
                make_face(&pts, p0, p1, p2),
                make_face(&pts, p0, p3, p1),
                make_face(&pts, p1, p3, p2),
                make_face(&pts, p2, p3, p0),
            ]
        } else {
            vec![
                make_face(&pts, p0, p2, p1),
                make_face(&pts, p0, p1, p3),
                make_face(&pts, p1, p2, p3),
                make_face(&pts, p2, p0, p3),
            ]
        };
        for i in 0..pts.len() {
            if [p0, p1, p2, p3].contains(&i) {
                continue;
            }
            let visible: Vec<bool> = faces
                .iter()
                .map(|f| dot3(&f.normal, &pts[i]) - f.offset > tol)
                .collect();
            if !visible.iter().any(|&v| v) {
                continue;
            }
            let mut edges: Vec<(usize, usize)> = Vec::new();
            for (f, _) in faces.iter().zip(&visible).filter(|(_, &v)| v) {
                for k in 0..3 {
                    edges.push((f.v[k], f.v[(k + 1) % 3]));
                }
            }
            let horizon: Vec<(usize, usize)> = edges
                .iter()
                .filter(|&&(a, b)| !edges.contains(&(b, a)))
                .copied()
                .collect();
            let mut kept: Vec<Face<S>> = faces
                .iter()
                .zip(&visible)
                .filter(|(_, &v)| !v)
                .map(|(f, _)| *f)
                .collect();
            for (a, b) in horizon {
                kept.push(make_face(&pts, a, b, i));
            }
            faces = kept;
        }
        let mut used: Vec<usize> = faces.iter().flat_map(|f| f.v).collect();
        used.sort_unstable();
        used.dedup();
        Ok(Hull3D {
            vertices: used.iter().map(|&i| points[i]).collect(),
            map,
            planes: faces.iter().map(|f| (f.normal, f.offset)).collect(),
        })
    }

    /// Extreme points of the input set.
    pub fn vertices(&self) -> &[[S; 3]] {
        &self.vertices
    }

    pub fn face_count(&self) -> usize {
        self.planes.len()
    }

    fn contains_unit(&self, q: &[S; 3]) -> bool {
        let tol = S::lit(1e-9).max(S::epsilon() * S::lit(256.0));
        self.planes.iter().all(|(n, off)| dot3(n, q) - *off <= tol)
    }

    pub fn contains(&self, p: &[S; 3]) -> bool {
        self.contains_unit(&self.map.to_unit(p))
    }

    pub fn fill(&self, n: usize) -> Result<Vec<[S; 3]>> {
        fill_box(&self.map, n, |q| self.contains_unit(q))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    #[test]
    fn unit_square() {
        let pts: [[f64; 2]; 6] = [
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [0.5, 0.5],
            [0.5, 0.0],
        ];
        let h = convex_hull(&pts).unwrap();
        assert_eq!(
            h.vertices(),
            &[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
        );
        assert!((h.area() - 1.0).abs() < 1e-14);
        let fill = h.fill(50).unwrap();
        assert_eq!(fill.len(), 50);
        assert!(fill.iter().all(|p| h.contains(p)));
        assert_eq!(fill, h.fill(50).unwrap());
    }

    #[test]
    fn triangle_containment() {
        let h = convex_hull(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(h.contains(&[0.25, 0.25]));
        assert!(!h.contains(&[1.0, 1.0]));
        assert!(h.area() > 0.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(convex_hull(&[[0.0, 0.0], [1.0, 1.0]]).is_err());
        assert!(convex_hull(&[[0.0, 0.0], [1.0, 1.0], [1.0, 1.0]]).is_err());
        assert!(convex_hull(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]).is_err());
        assert!(convex_hull(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).is_err());
    }

    #[test]
    fn random_cloud_contains_inputs() {
        let mut rng = stream(3, "hull", 0);
        let pts: Vec<[f64; 2]> = (0..250)
            .map(|_| [rng.random::<f64>() * 0.2, 0.05 + rng.random::<f64>() * 0.3])
            .collect();
        let h = convex_hull(&pts).unwrap();
        assert!(pts.iter().all(|p| h.contains(p)));
        let v = h.vertices();
        for i in 0..v.len() {
            let c = cross(&v[i], &v[(i + 1) % v.len()], &v[(i + 2) % v.len()]);
            assert!(c > 0.0, "not strictly convex counterclockwise");
        }
        let fill = h.fill(100).unwrap();
        assert!(fill.iter().all(|p| h.contains(p)));
    }

    #[test]
    fn cube_hull() {
        let mut pts = Vec::new();
        for i in 0..8 {
            pts.push([
                (i & 1) as f64 * 100.0,
                ((i >> 1) & 1) as f64 * 0.2,
                ((i >> 2) & 1) as f64 * 0.5,
            ]);
        }
        pts.push([50.0, 0.1, 0.25]);
        let h = convex_hull_3d(&pts).unwrap();
        assert_eq!(h.vertices().len(), 8);
        assert!(h.contains(&[50.0, 0.1, 0.25]));
        assert!(h.contains(&[0.0, 0.0, 0.0]));
        assert!(!h.contains(&[101.0, 0.1, 0.25]));
        let fill = h.fill(64).unwrap();
        assert_eq!(fill.len(), 64);
    }

    #[test]
    fn random_cloud_3d() {
        let mut rng = stream(5, "hull3", 0);
        let pts: Vec<[f64; 3]> = (0..300)
            .map(|_| {
                let s: f64 = 60.0 + 80.0 * rng.random::<f64>();
                let m: f64 = 0.05 + 0.1 * rng.random::<f64>();
                let v: f64 = 0.3 + 0.2 * rng.random::<f64>();
                [s, m + 0.0005 * s, v]
            })
            .collect();
        let h = convex_hull_3d(&pts).unwrap();
        assert!(pts.iter().all(|p| h.contains(p)));
        let fill = h.fill(100).unwrap();
        assert!(fill.iter().all(|p| h.contains(p)));
        assert!(!h.contains(&[200.0, 0.1, 0.4]));
        // Euler: F = 2V - 4 for a triangulated convex polytope.
        assert_eq!(h.face_count(), 2 * h.vertices().len() - 4);
    }

    #[test]
    fn coplanar_3d_is_rejected() {
        let pts: Vec<[f64; 3]> = (0..10)
            .map(|i| [i as f64, (i * i % 7) as f64, 1.0 + i as f64])
            .collect();
        let pts: Vec<[f64; 3]> = pts.iter().map(|p| [p[0], p[1], p[0] + p[1]]).collect();
        assert!(convex_hull_3d(&pts).is_err());
    }
}
