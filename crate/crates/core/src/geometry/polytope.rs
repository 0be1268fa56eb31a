//! Bounded convex polytopes in three dimensions, built from halfspaces.
//!
//! Vertices come from brute-force enumeration of plane triples; with the
//! twenty or so halfspaces a lattice cell needs this is cheap and has no
//! degenerate-case bookkeeping. Facets are the halfspaces whose boundary plane
//! carries a non-degenerate polygon of vertices.

use serde::Serialize;

pub type Vec3 = [f64; 3];

/// Geometric tolerance for vertex feasibility and deduplication.
pub const GEOM_TOL: f64 = 1e-9;

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn det3(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    dot(a, cross(b, c))
}

/// `{ x : normal · x ≤ offset }` with a unit normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfSpace {
    pub normal: Vec3,
    pub offset: f64,
}

impl HalfSpace {
    /// Normalizes `normal` so slacks are Euclidean distances.
    pub fn new(normal: Vec3, offset: f64) -> Self {
        let len = norm(normal);
        assert!(len > 0.0, "halfspace normal must be nonzero");
        Self {
            normal: [normal[0] / len, normal[1] / len, normal[2] / len],
            offset: offset / len,
        }
    }

    /// The side of the bisector of `0` and `w` containing `0`: `x·w ≤ w·w/2`.
    pub fn bisector(w: Vec3) -> Self {
        Self::new(w, dot(w, w) / 2.0)
    }

    pub fn slack(&self, p: Vec3) -> f64 {
        self.offset - dot(self.normal, p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Facet {
    /// Vertex indices, counterclockwise seen from outside.
    pub vertices: Vec<usize>,
    pub normal: Vec3,
    /// Index of the supporting halfspace.
    pub halfspace: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexPolytope3D {
    pub vertices: Vec<Vec3>,
    pub facets: Vec<Facet>,
    pub halfspaces: Vec<HalfSpace>,
}

impl ConvexPolytope3D {
    /// Intersection of bounded halfspaces. `None` when the intersection has
    /// no interior.
    pub fn from_halfspaces(halfspaces: Vec<HalfSpace>) -> Option<Self> {
        Self::from_halfspaces_tol(halfspaces, GEOM_TOL)
    }

    pub fn from_halfspaces_tol(halfspaces: Vec<HalfSpace>, tol: f64) -> Option<Self> {
        let k = halfspaces.len();
        let mut vertices: Vec<Vec3> = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                for l in j + 1..k {
                    let Some(p) = solve_planes(&halfspaces[i], &halfspaces[j], &halfspaces[l]) else {
                        continue;
                    };
                    if halfspaces.iter().all(|h| h.slack(p) >= -tol)
                        && !vertices.iter().any(|v| norm(sub(*v, p)) <= tol)
                    {
                        vertices.push(p);
                    }
                }
            }
        }
        if vertices.len() < 4 {
            return None;
        }

        let mut facets: Vec<Facet> = Vec::new();
        for (hi, h) in halfspaces.iter().enumerate() {
            let on: Vec<usize> = (0..vertices.len())
                .filter(|&v| h.slack(vertices[v]).abs() <= tol)
                .collect();
            if on.len() < 3 {
                continue;
            }
            let ordered = order_around(&vertices, &on, h.normal);
            if polygon_area(&vertices, &ordered, h.normal) <= tol {
                continue;
            }
            let mut key = ordered.clone();
            key.sort_unstable();
            let duplicate = facets.iter().any(|f| {
                let mut fk = f.vertices.clone();
                fk.sort_unstable();
                fk == key
            });
            if !duplicate {
                facets.push(Facet {
                    vertices: ordered,
                    normal: h.normal,
                    halfspace: hi,
                });
            }
        }
        let poly = Self {
            vertices,
            facets,
            halfspaces,
        };
        if poly.facets.len() < 4 || poly.volume() <= tol {
            return None;
        }
        Some(poly)
    }

    /// Axis-aligned box centered at the origin.
    pub fn centered_box(half_widths: Vec3) -> Self {
        let mut hs = Vec::with_capacity(6);
        for k in 0..3 {
            let mut e = [0.0; 3];
            e[k] = 1.0;
            hs.push(HalfSpace::new(e, half_widths[k]));
            e[k] = -1.0;
            hs.push(HalfSpace::new(e, half_widths[k]));
        }
        Self::from_halfspaces(hs).expect("box with positive half widths")
    }

    pub fn centroid_of_vertices(&self) -> Vec3 {
        let n = self.vertices.len() as f64;
        let s = self
            .vertices
            .iter()
            .fold([0.0; 3], |a, v| [a[0] + v[0], a[1] + v[1], a[2] + v[2]]);
        [s[0] / n, s[1] / n, s[2] / n]
    }

    /// Sum of tetrahedra spanned by an interior point and a fan of each facet.
    pub fn volume(&self) -> f64 {
        let c = self.centroid_of_vertices();
        let mut vol = 0.0;
        for f in &self.facets {
            let p0 = sub(self.vertices[f.vertices[0]], c);
            for w in f.vertices[1..].windows(2) {
                let p1 = sub(self.vertices[w[0]], c);
                let p2 = sub(self.vertices[w[1]], c);
                vol += det3(p0, p1, p2).abs() / 6.0;
            }
        }
        vol
    }

    pub fn edge_count(&self) -> usize {
        self.facets.iter().map(|f| f.vertices.len()).sum::<usize>() / 2
    }

    /// `V - E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count() as i64 + self.facets.len() as i64
    }

    pub fn is_centrally_symmetric(&self, tol: f64) -> bool {
        self.vertices
            .iter()
            .all(|v| self.vertices.iter().any(|w| norm([v[0] + w[0], v[1] + w[1], v[2] + w[2]]) <= tol))
    }

    pub fn contains(&self, p: Vec3, tol: f64) -> bool {
        self.halfspaces.iter().all(|h| h.slack(p) >= -tol)
    }

    /// Largest violation of any halfspace by any vertex (0 when consistent).
    pub fn max_vertex_violation(&self) -> f64 {
        self.vertices
            .iter()
            .flat_map(|v| self.halfspaces.iter().map(move |h| (-h.slack(*v)).max(0.0)))
            .fold(0.0, f64::max)
    }
}

/// Volume of `a ∩ b`; 0 when the intersection has no interior.
pub fn intersect_volume(a: &ConvexPolytope3D, b: &ConvexPolytope3D) -> f64 {
    let hs: Vec<HalfSpace> = a.halfspaces.iter().chain(&b.halfspaces).copied().collect();
    ConvexPolytope3D::from_halfspaces(hs).map_or(0.0, |p| p.volume())
}

fn solve_planes(a: &HalfSpace, b: &HalfSpace, c: &HalfSpace) -> Option<Vec3> {
    let d = det3(a.normal, b.normal, c.normal);
    if d.abs() < 1e-10 {
        return None;
    }
    // Cramer's rule via cross products
    let bc = cross(b.normal, c.normal);
    let ca = cross(c.normal, a.normal);
    let ab = cross(a.normal, b.normal);
    Some([
        (a.offset * bc[0] + b.offset * ca[0] + c.offset * ab[0]) / d,
        (a.offset * bc[1] + b.offset * ca[1] + c.offset * ab[1]) / d,
        (a.offset * bc[2] + b.offset * ca[2] + c.offset * ab[2]) / d,
    ])
}

fn order_around(vertices: &[Vec3], idx: &[usize], normal: Vec3) -> Vec<usize> {
    let n = idx.len() as f64;
    let c = idx.iter().fold([0.0; 3], |a, &i| {
        let v = vertices[i];
        [a[0] + v[0] / n, a[1] + v[1] / n, a[2] + v[2] / n]
    });
    // any direction not parallel to the normal
    let helper = if normal[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let u = cross(normal, helper);
    let u = {
        let l = norm(u);
        [u[0] / l, u[1] / l, u[2] / l]
    };
    let w = cross(normal, u);
    let mut keyed: Vec<(f64, usize)> = idx
        .iter()
        .map(|&i| {
            let d = sub(vertices[i], c);
            (dot(d, w).atan2(dot(d, u)), i)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite angles"));
    keyed.into_iter().map(|(_, i)| i).collect()
}

fn polygon_area(vertices: &[Vec3], ordered: &[usize], normal: Vec3) -> f64 {
    let p0 = vertices[ordered[0]];
    let mut twice = 0.0;
    for w in ordered[1..].windows(2) {
        twice += dot(cross(sub(vertices[w[0]], p0), sub(vertices[w[1]], p0)), normal);
    }
    twice.abs() / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_cube() {
        let cube = ConvexPolytope3D::centered_box([0.5, 0.5, 0.5]);
        assert_eq!(cube.vertices.len(), 8);
        assert_eq!(cube.facets.len(), 6);
        assert_eq!(cube.edge_count(), 12);
        assert_eq!(cube.euler_characteristic(), 2);
        assert_abs_diff_eq!(cube.volume(), 1.0, epsilon = 1e-12);
        assert!(cube.is_centrally_symmetric(1e-12));
        assert_eq!(cube.max_vertex_violation(), 0.0);
    }

    #[test]
    fn self_intersection_keeps_volume() {
        let b = ConvexPolytope3D::centered_box([0.5, 0.7, 1.1]);
        assert_abs_diff_eq!(intersect_volume(&b, &b), b.volume(), epsilon = 1e-12);
    }

    #[test]
    fn disjoint_boxes_have_empty_intersection() {
        let a = ConvexPolytope3D::centered_box([0.5, 0.5, 0.5]);
        let shifted: Vec<HalfSpace> = a
            .halfspaces
            .iter()
            .map(|h| HalfSpace::new(h.normal, h.offset + dot(h.normal, [2.0, 0.0, 0.0])))
            .collect();
        let b = ConvexPolytope3D::from_halfspaces(shifted).unwrap();
        assert_abs_diff_eq!(b.volume(), 1.0, epsilon = 1e-12);
        assert_eq!(intersect_volume(&a, &b), 0.0);
    }

    #[test]
    fn octahedron_volume() {
        let mut hs = Vec::new();
        for sx in [-1.0, 1.0] {
            for sy in [-1.0, 1.0] {
                for sz in [-1.0, 1.0] {
                    hs.push(HalfSpace::new([sx, sy, sz], 1.0));
                }
            }
        }
        let oct = ConvexPolytope3D::from_halfspaces(hs).unwrap();
        assert_eq!(oct.vertices.len(), 6);
        assert_eq!(oct.facets.len(), 8);
        assert_eq!(oct.euler_characteristic(), 2);
        assert_abs_diff_eq!(oct.volume(), 4.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn corner_cut_of_cube() {
        // cube ∩ {x + y + z ≤ 1}: removes the tetrahedron at (½,½,½) of volume 1/48
        let cube = ConvexPolytope3D::centered_box([0.5, 0.5, 0.5]);
        let mut hs = cube.halfspaces.clone();
        hs.push(HalfSpace::new([1.0, 1.0, 1.0], 1.0));
        let cut = ConvexPolytope3D::from_halfspaces(hs).unwrap();
        assert_abs_diff_eq!(cut.volume(), 1.0 - 1.0 / 48.0, epsilon = 1e-12);
        assert_eq!(cut.facets.len(), 7);
        assert_eq!(cut.euler_characteristic(), 2);
    }
}
