use serde::Serialize;

/// Half-plane `{ p : normal · p ≤ offset }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub normal: [f64; 2],
    pub offset: f64,
}

impl HalfPlane {
    /// The side of the perpendicular bisector of `0` and `w` that contains `0`.
    pub fn bisector(w: [f64; 2]) -> Self {
        Self {
            normal: w,
            offset: (w[0] * w[0] + w[1] * w[1]) / 2.0,
        }
    }

    fn slack(&self, p: [f64; 2]) -> f64 {
        self.offset - (self.normal[0] * p[0] + self.normal[1] * p[1])
    }
}

/// Convex polygon with counterclockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polygon2D {
    pub vertices: Vec<[f64; 2]>,
}

impl Polygon2D {
    /// Drops consecutive duplicates (within `tol`) so degenerate edges vanish.
    pub fn new(vertices: Vec<[f64; 2]>, tol: f64) -> Self {
        let mut out: Vec<[f64; 2]> = Vec::with_capacity(vertices.len());
        for v in vertices {
            if out.last().is_none_or(|l| dist(*l, v) > tol) {
                out.push(v);
            }
        }
        while out.len() > 1 && dist(out[0], *out.last().unwrap()) <= tol {
            out.pop();
        }
        Self { vertices: out }
    }

    pub fn rectangle(half_widths: [f64; 2]) -> Self {
        let [a, b] = half_widths;
        Self {
            vertices: vec![[a, -b], [a, b], [-a, b], [-a, -b]],
        }
    }

    /// Shoelace area (positive for counterclockwise order).
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0.0;
        }
        (0..n)
            .map(|i| {
                let p = self.vertices[i];
                let q = self.vertices[(i + 1) % n];
                p[0] * q[1] - q[0] * p[1]
            })
            .sum::<f64>()
            / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn is_convex_ccw(&self, tol: f64) -> bool {
        let n = self.vertices.len();
        n >= 3
            && (0..n).all(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                let c = self.vertices[(i + 2) % n];
                (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]) >= -tol
            })
    }

    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= -tol
        })
    }

    /// Sutherland–Hodgman clip against one half-plane.
    pub fn clip(&self, h: &HalfPlane) -> Self {
        let n = self.vertices.len();
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            let sp = h.slack(p);
            let sq = h.slack(q);
            if sp >= 0.0 {
                out.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                let t = sp / (sp - sq);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
        Self::new(out, 1e-14)
    }

    pub fn clip_all<'a>(&self, planes: impl IntoIterator<Item = &'a HalfPlane>) -> Self {
        planes.into_iter().fold(self.clone(), |poly, h| poly.clip(h))
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}
