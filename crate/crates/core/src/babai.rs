//! Nearest-plane (Babai) decoding, Babai cells and the error indicator.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{LatticeError, Result};
use crate::lattice::{self, cvp_bruteforce, GeneratorBasis, UpperTriangularBasis};

/// Nearest integer with ties rounded up (`x.5 → x + 1`).
#[inline]
pub fn round_half_up(y: f64) -> i64 {
    (y + 0.5).floor() as i64
}

/// Integer coefficients `b_1..b_n` of the Babai point.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct BabaiCoefficients(pub Vec<i64>);

impl BabaiCoefficients {
    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }
}

/// Back-substitution on an upper triangular basis,
/// `b_m = [(x_m - Σ_{l>m} b_l v_ml) / v_mm]` for `m = n, ..., 1`.
pub fn nearest_plane(upper: &UpperTriangularBasis, x: &[f64]) -> BabaiCoefficients {
    let n = upper.dim();
    assert_eq!(x.len(), n, "target dimension must match the basis");
    let mut b = vec![0i64; n];
    for m in (0..n).rev() {
        let shift: f64 = (m + 1..n).map(|l| b[l] as f64 * upper.get(m, l)).sum();
        b[m] = round_half_up((x[m] - shift) / upper.get(m, m));
    }
    BabaiCoefficients(b)
}

/// The projection form of the algorithm on an arbitrary basis: with `v*_i` the
/// Gram–Schmidt vectors, start at `z_n = x`, take
/// `b_i = [⟨z_i, v*_i⟩ / ‖v*_i‖²]` and continue with
/// `z_{i-1} = P_{i-1}(z_i) - b_i P_{i-1}(v_i)`.
pub fn nearest_plane_general(basis: &GeneratorBasis, x: &[f64]) -> Result<BabaiCoefficients> {
    let n = basis.dim();
    if x.len() != n {
        return Err(LatticeError::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    // modified Gram–Schmidt
    let mut ortho: Vec<DVector<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut w = basis.column(i);
        for o in &ortho {
            let c = w.dot(o) / o.norm_squared();
            w -= o * c;
        }
        ortho.push(w);
    }
    let mut z = DVector::from_column_slice(x);
    let mut b = vec![0i64; n];
    for i in (0..n).rev() {
        let o = &ortho[i];
        let o2 = o.norm_squared();
        let coord = z.dot(o) / o2;
        b[i] = round_half_up(coord);
        // P_{i-1}(z) = z - coord·v*_i and P_{i-1}(v_i) = v_i - v*_i
        let v = basis.column(i);
        z -= o * coord;
        z -= (v - o) * b[i] as f64;
    }
    Ok(BabaiCoefficients(b))
}

/// Axis-aligned box (in the upper triangular frame) of all targets decoded to
/// the same Babai point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BabaiCell {
    pub center: Vec<f64>,
    pub half_widths: Vec<f64>,
}

impl BabaiCell {
    pub fn volume(&self) -> f64 {
        self.half_widths.iter().map(|h| 2.0 * h).product()
    }

    /// Membership with a boundary slack of `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .zip(&self.center)
            .zip(&self.half_widths)
            .all(|((xi, c), h)| (xi - c).abs() <= h + tol)
    }

    /// The `2ⁿ` corners, with coordinate `k` of corner `mask` on the negative
    /// side when bit `k` of `mask` is set.
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let n = self.center.len();
        (0..1usize << n)
            .map(|mask| {
                (0..n)
                    .map(|k| {
                        let s = if mask & (1 << k) != 0 { -1.0 } else { 1.0 };
                        self.center[k] + s * self.half_widths[k]
                    })
                    .collect()
            })
            .collect()
    }
}

pub fn babai_cell(upper: &UpperTriangularBasis, b: &BabaiCoefficients) -> BabaiCell {
    let center = upper.to_basis().embed(b.as_slice()).iter().copied().collect();
    let half_widths = upper.diagonal().iter().map(|d| d / 2.0).collect();
    BabaiCell { center, half_widths }
}

/// True when the Babai point is strictly farther from `x` than the closest
/// lattice point. Ties on a Voronoi boundary are not errors.
pub fn is_babai_error(basis: &GeneratorBasis, x: &[f64]) -> Result<bool> {
    let b = nearest_plane_general(basis, x)?;
    let d_np = basis.point(b.as_slice()).distance_to(x);
    let exact = cvp_bruteforce(basis, x, None)?;
    Ok(d_np > exact.distance + 1e-12)
}

/// Precomputed error test for targets inside the Babai cell of the origin.
///
/// Every target in `ℬ(0)` decodes to `0` and lies within the half diagonal
/// `h` of the cell from it, so any strictly closer lattice point has norm
/// below `2h`. Those points are enumerated once over a coefficient box
/// certified by the inverse Gram matrix, after which a target is an error iff
/// `2⟨x, w⟩ > ⟨w, w⟩` for one of them.
#[derive(Debug, Clone)]
pub struct OriginCellOracle {
    upper: UpperTriangularBasis,
    candidates: Vec<Vec<f64>>,
}

impl OriginCellOracle {
    pub fn new(basis: &GeneratorBasis) -> Result<Self> {
        let n = basis.dim();
        if n > 4 {
            return Err(LatticeError::UnsupportedDimension { n, max: 4 });
        }
        let (_, upper) = basis.qr_upper();
        let upper_basis = upper.to_basis();
        let half_diag = upper.diagonal().iter().map(|d| d * d / 4.0).sum::<f64>().sqrt();
        let radius = 2.0 * half_diag;
        let window: Vec<i64> = lattice::coefficient_scales(&upper_basis)
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
        let mut candidates = Vec::new();
        lattice::for_each_in_box(&vec![0; n], &window, |u| {
            if u.iter().all(|&c| c == 0) {
                return;
            }
            let w: Vec<f64> = upper_basis.embed(u).iter().copied().collect();
            let norm2: f64 = w.iter().map(|c| c * c).sum();
            if norm2.sqrt() <= radius * (1.0 + 1e-9) {
                candidates.push(w);
            }
        });
        candidates.sort_by(|a, b| {
            let na: f64 = a.iter().map(|c| c * c).sum();
            let nb: f64 = b.iter().map(|c| c * c).sum();
            na.partial_cmp(&nb).expect("finite norms")
        });
        Ok(Self { upper, candidates })
    }

    pub fn upper(&self) -> &UpperTriangularBasis {
        &self.upper
    }

    pub fn babai_cell(&self) -> BabaiCell {
        babai_cell(&self.upper, &BabaiCoefficients(vec![0; self.upper.dim()]))
    }

    /// `x` is given in the upper triangular frame and must lie in `ℬ(0)`.
    pub fn is_error(&self, x: &[f64]) -> bool {
        self.candidates.iter().any(|w| {
            let mut dot = 0.0;
            let mut ww = 0.0;
            for (wi, xi) in w.iter().zip(x) {
                dot += wi * xi;
                ww += wi * wi;
            }
            2.0 * dot > ww + 1e-12
        })
    }
}
