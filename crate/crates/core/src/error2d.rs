//! Error probability of the Babai partition for planar lattices.
//!
//! A planar lattice with a Minkowski-reduced basis can be rotated and scaled
//! to the form `{(1,0), (a,b)}` with `-1/2 ≤ a ≤ 0` and `a² + b² ≥ 1`. For
//! that form the probability that nearest-plane decoding misses the closest
//! point has the closed form `(-a - a²) / (4b²)`. The geometric route below
//! computes the same number for any basis by clipping the Babai rectangle
//! against the Voronoi cell.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{LatticeError, Result};
use crate::geometry::{HalfPlane, Polygon2D};
use crate::lattice::{self, GeneratorBasis};
use crate::reduction::lagrange_gauss_reduce;

const REGIME_TOL: f64 = 1e-12;

/// Basis `{(1,0), (a,b)}` with `|a| ≤ 1/2`, `b > 0`, `a² + b² ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedBasis2D {
    pub a: f64,
    pub b: f64,
}

impl ReducedBasis2D {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(LatticeError::OutOfRegime(format!("(a, b) = ({a}, {b})")));
        }
        if a.abs() > 0.5 + REGIME_TOL {
            return Err(LatticeError::OutOfRegime(format!("|a| = {} > 1/2", a.abs())));
        }
        if b <= 0.0 {
            return Err(LatticeError::OutOfRegime(format!("b = {b} must be positive")));
        }
        if a * a + b * b < 1.0 - 1e-9 {
            return Err(LatticeError::OutOfRegime(format!(
                "a² + b² = {} < 1",
                a * a + b * b
            )));
        }
        Ok(Self { a, b })
    }

    /// Rotates, scales and Gauss-reduces an arbitrary planar basis into
    /// canonical form.
    pub fn from_basis(basis: &GeneratorBasis) -> Result<Self> {
        let reduced = lagrange_gauss_reduce(basis)?.basis;
        let (_, upper) = reduced.qr_upper();
        let s = upper.get(0, 0);
        Ok(Self::new(upper.get(0, 1) / s, upper.get(1, 1) / s)?.canonical())
    }

    /// Mirror image with `a ≤ 0`; flipping `v_2` keeps the lattice and the
    /// Babai rectangle.
    pub fn canonical(self) -> Self {
        Self {
            a: -self.a.abs(),
            b: self.b,
        }
    }

    /// Angle between `(1,0)` and `(a,b)`.
    pub fn theta(&self) -> f64 {
        self.b.atan2(self.a)
    }

    pub fn basis(&self) -> GeneratorBasis {
        GeneratorBasis::from_columns(&[vec![1.0, 0.0], vec![self.a, self.b]])
            .expect("b > 0 keeps the basis full rank")
    }
}

/// The basis vectors plus the third relevant vector: `(a - 1, b)` when
/// `θ ≤ π/2` and `(a + 1, b)` otherwise.
pub fn relevant_vectors_2d(rb: &ReducedBasis2D) -> [[f64; 2]; 3] {
    let third = if rb.theta() <= PI / 2.0 {
        [rb.a - 1.0, rb.b]
    } else {
        [rb.a + 1.0, rb.b]
    };
    [[1.0, 0.0], [rb.a, rb.b], third]
}

/// Voronoi hexagon of the canonical form, counterclockwise:
/// `±(1/2, h)`, `±(-1/2, h)`, `±((2a+1)/2, k)` with `h = (a² + b² + a)/(2b)`
/// and `k = (b² - a - a²)/(2b)`. Collapses to a rectangle when `a = 0`.
pub fn voronoi_polygon_2d(rb: &ReducedBasis2D) -> Polygon2D {
    let ReducedBasis2D { a, b } = rb.canonical();
    let h = (a * a + b * b + a) / (2.0 * b);
    let k = (b * b - a - a * a) / (2.0 * b);
    let m = (2.0 * a + 1.0) / 2.0;
    Polygon2D::new(
        vec![[0.5, h], [m, k], [-0.5, h], [-0.5, -h], [-m, -k], [0.5, -h]],
        1e-12,
    )
}

/// `P_e = (-a - a²) / (4b²)` on the canonical form.
pub fn pe_closed_form(rb: &ReducedBasis2D) -> f64 {
    let ReducedBasis2D { a, b } = rb.canonical();
    (-a - a * a) / (4.0 * b * b)
}

/// The same probability written as `(1 - (1 + 2a)²) / (16b²)`.
pub fn pe_closed_form_expanded(rb: &ReducedBasis2D) -> f64 {
    let ReducedBasis2D { a, b } = rb.canonical();
    (1.0 - (1.0 + 2.0 * a).powi(2)) / (16.0 * b * b)
}

/// Bisector half-planes of every lattice vector that can support a facet of
/// the Voronoi cell, in the frame of `upper`. Relevant vectors are at most
/// twice the covering radius long, and the covering radius is at most the
/// half diagonal of the Babai rectangle.
fn candidate_bisectors(basis: &GeneratorBasis) -> Result<(Vec<HalfPlane>, [f64; 2])> {
    if basis.dim() != 2 {
        return Err(LatticeError::DimensionMismatch {
            expected: 2,
            got: basis.dim(),
        });
    }
    let (_, upper) = basis.qr_upper();
    let diag = upper.diagonal();
    let half = [diag[0] / 2.0, diag[1] / 2.0];
    let radius = 2.0 * (half[0] * half[0] + half[1] * half[1]).sqrt();
    let ub = upper.to_basis();
    let window: Vec<i64> = lattice::coefficient_scales(&ub)
        .iter()
        .map(|s| (radius * s * (1.0 + 1e-9)).ceil() as i64)
        .collect();
    let size = lattice::box_size(&window);
    if size > lattice::ENUMERATION_CAP {
        return Err(LatticeError::EnumerationTooLarge {
            candidates: size,
            cap: lattice::ENUMERATION_CAP,
        });
    }
    let mut planes = Vec::new();
    lattice::for_each_in_box(&[0, 0], &window, |u| {
        if u == [0, 0] {
            return;
        }
        let w = ub.embed(u);
        if w.norm() <= radius * (1.0 + 1e-9) {
            planes.push(HalfPlane::bisector([w[0], w[1]]));
        }
    });
    Ok((planes, half))
}

/// Voronoi cell of the origin for an arbitrary planar basis, in the frame
/// where the basis is upper triangular.
pub fn voronoi_cell_2d(basis: &GeneratorBasis) -> Result<Polygon2D> {
    let (planes, half) = candidate_bisectors(basis)?;
    let r = 2.0 * (half[0] + half[1]);
    Ok(Polygon2D::rectangle([r, r]).clip_all(&planes))
}

/// `1 - area(ℬ(0) ∩ 𝒱(0)) / |det V|` for any full-rank planar basis; no
/// reduction is applied, so the result reflects the given basis order.
pub fn pe_geometric_2d(basis: &GeneratorBasis) -> Result<f64> {
    let (planes, half) = candidate_bisectors(basis)?;
    let inside = Polygon2D::rectangle(half).clip_all(&planes).area();
    Ok((1.0 - inside / basis.volume()).max(0.0))
}

/// `Δ_2 = π / (4b)`.
pub fn packing_density_2d(rb: &ReducedBasis2D) -> f64 {
    PI / (4.0 * rb.b)
}

/// `P_e` as a function of `a` and the packing density:
/// `Δ_2² (1 - (1 + 2a)²) / π²`.
pub fn pe_from_density(a: f64, density: f64) -> f64 {
    density * density * (1.0 - (1.0 + 2.0 * a).powi(2)) / (PI * PI)
}

/// The `a` minimizing `P_e` at fixed packing density: `0` up to `π/4`, then
/// `-sqrt(1 - (π/(4Δ_2))²)`, the smallest `|a|` keeping `a² + b² ≥ 1`.
pub fn optimal_a(density: f64) -> Result<f64> {
    let max = PI / (2.0 * 3f64.sqrt());
    if !(density > 0.0 && density <= max + REGIME_TOL) {
        return Err(LatticeError::OutOfRegime(format!(
            "packing density {density} outside (0, π/(2√3)]"
        )));
    }
    if density <= PI / 4.0 {
        return Ok(0.0);
    }
    let r = PI / (4.0 * density);
    Ok(-(1.0 - r * r).max(0.0).sqrt())
}

/// `P_e` in polar coordinates `(a, b) = (ρ cos θ, ρ sin θ)`, evaluated by
/// substitution into the closed form.
pub fn pe_polar(theta: f64, rho: f64) -> Result<f64> {
    let rb = ReducedBasis2D::new(rho * theta.cos(), rho * theta.sin())?;
    Ok(pe_closed_form(&rb))
}

/// One sample of the `P_e` surface, or one point on a level curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct LevelPoint {
    pub level: f64,
    pub a: f64,
    pub b: f64,
    pub pe: f64,
}

/// Levels drawn in the usual contour plot of `P_e` over `(a, b)`.
pub const DEFAULT_LEVELS: [f64; 6] = [0.0, 0.01, 0.02, 0.04, 0.06, 1.0 / 12.0];

/// Points on the curves `P_e = k` inside the regime `-1/2 ≤ a ≤ 0`,
/// `a² + b² ≥ 1`, `b ≤ b_max`, with `resolution` samples of `a` per level.
/// The `k = 0` curve is the segment `a = 0`.
pub fn level_curve_data(levels: &[f64], resolution: usize, b_max: f64) -> Vec<LevelPoint> {
    let resolution = resolution.max(2);
    let mut out = Vec::new();
    for &k in levels {
        for i in 0..resolution {
            let t = i as f64 / (resolution - 1) as f64;
            let (a, b) = if k == 0.0 {
                (0.0, 1.0 + t * (b_max - 1.0))
            } else {
                let a = -0.5 * t;
                (a, ((-a - a * a) / (4.0 * k)).sqrt())
            };
            if b > b_max || a * a + b * b < 1.0 - 1e-9 || b <= 0.0 {
                continue;
            }
            let pe = pe_closed_form(&ReducedBasis2D { a, b });
            out.push(LevelPoint { level: k, a, b, pe });
        }
    }
    out
}

/// `P_e` sampled on a `resolution × resolution` grid over `a ∈ [-1/2, 0]`,
/// `b ∈ [√3/2, b_max]`, keeping only in-regime points. `level` is NaN.
pub fn pe_grid(resolution: usize, b_max: f64) -> Vec<LevelPoint> {
    let resolution = resolution.max(2);
    let b_min = 3f64.sqrt() / 2.0;
    let mut out = Vec::new();
    for i in 0..resolution {
        let a = -0.5 + 0.5 * i as f64 / (resolution - 1) as f64;
        for j in 0..resolution {
            let b = b_min + (b_max - b_min) * j as f64 / (resolution - 1) as f64;
            if let Ok(rb) = ReducedBasis2D::new(a, b) {
                out.push(LevelPoint {
                    level: f64::NAN,
                    a,
                    b,
                    pe: pe_closed_form(&rb),
                });
            }
        }
    }
    out
}
