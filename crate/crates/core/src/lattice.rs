//! Lattice representations and the exact enumeration oracles.
//!
//! A lattice is given by a square generator matrix whose columns are the
//! basis vectors. Everything here is a pure function of immutable values.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{LatticeError, Result};

/// Absolute tolerance used for generic floating point comparisons.
pub const TOL: f64 = 1e-9;

/// Largest coefficient box the enumeration routines will walk.
pub const ENUMERATION_CAP: u128 = 50_000_000;

/// Minimum half-width of the coefficient box used by [`cvp_bruteforce`].
pub const DEFAULT_CVP_WINDOW: i64 = 3;

/// Full-rank square generator matrix; column `i` is the basis vector `v_{i+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorBasis {
    matrix: DMatrix<f64>,
}

impl GeneratorBasis {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(LatticeError::NotSquare {
                rows: matrix.nrows(),
                columns: matrix.ncols(),
            });
        }
        if matrix.nrows() == 0 {
            return Err(LatticeError::InvalidArgument("empty basis".into()));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(LatticeError::InvalidArgument(
                "basis has non-finite entries".into(),
            ));
        }
        let det = matrix.determinant();
        // Compare against the Hadamard bound so the check is scale free.
        let hadamard: f64 = matrix.column_iter().map(|c| c.norm()).product();
        if hadamard == 0.0 || det.abs() <= 1e-12 * hadamard {
            return Err(LatticeError::RankDeficient { det });
        }
        Ok(Self { matrix })
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let n = columns.len();
        for c in columns {
            if c.len() != n {
                return Err(LatticeError::NotSquare {
                    rows: c.len(),
                    columns: n,
                });
            }
        }
        let matrix = DMatrix::from_fn(n, n, |r, c| columns[c][r]);
        Self::from_matrix(matrix)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn column(&self, i: usize) -> DVector<f64> {
        self.matrix.column(i).into_owned()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        self.matrix
            .column_iter()
            .map(|c| c.iter().copied().collect())
            .collect()
    }

    pub fn gram(&self) -> GramMatrix {
        GramMatrix {
            entries: self.matrix.transpose() * &self.matrix,
        }
    }

    /// `|det V|`.
    pub fn volume(&self) -> f64 {
        self.matrix.determinant().abs()
    }

    /// Rotates the lattice so its generator matrix is upper triangular with a
    /// strictly positive diagonal. Returns `(Q, R)` with `V = Q R`.
    pub fn qr_upper(&self) -> (Rotation, UpperTriangularBasis) {
        let n = self.dim();
        let qr = self.matrix.clone().qr();
        let mut q = qr.q();
        let mut r = qr.r();
        for i in 0..n {
            if r[(i, i)] < 0.0 {
                for c in 0..n {
                    r[(i, c)] = -r[(i, c)];
                }
                for row in 0..n {
                    q[(row, i)] = -q[(row, i)];
                }
            }
            for c in 0..i {
                r[(i, c)] = 0.0;
            }
        }
        (Rotation { q }, UpperTriangularBasis { entries: r })
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_matrix(&self.matrix * factor)
    }

    /// Rescales so that `|det V| = 1`.
    pub fn normalized_unit_volume(&self) -> Self {
        let n = self.dim() as f64;
        let factor = self.volume().powf(-1.0 / n);
        Self {
            matrix: &self.matrix * factor,
        }
    }

    /// Reorders the basis: column `i` of the result is column `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let n = self.dim();
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
            return Err(LatticeError::InvalidArgument(format!(
                "{order:?} is not a permutation of 0..{n}"
            )));
        }
        let matrix = DMatrix::from_fn(n, n, |r, c| self.matrix[(r, order[c])]);
        Ok(Self { matrix })
    }

    pub fn embed(&self, coeffs: &[i64]) -> DVector<f64> {
        let u = DVector::from_iterator(coeffs.len(), coeffs.iter().map(|&c| c as f64));
        &self.matrix * u
    }

    pub fn point(&self, coeffs: &[i64]) -> LatticePoint {
        LatticePoint {
            coeffs: coeffs.to_vec(),
            embedding: self.embed(coeffs).iter().copied().collect(),
        }
    }

    fn check_target(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(LatticeError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// `A = Vᵀ V`, symmetric positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
}

impl GramMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(LatticeError::NotSquare {
                rows: entries.nrows(),
                columns: entries.ncols(),
            });
        }
        let scale = entries.amax().max(1.0);
        if (&entries - entries.transpose()).amax() > 1e-12 * scale {
            return Err(LatticeError::InvalidArgument(
                "Gram matrix is not symmetric".into(),
            ));
        }
        if entries.clone().cholesky().is_none() {
            return Err(LatticeError::RankDeficient {
                det: entries.determinant(),
            });
        }
        Ok(Self { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Entry `a_{ij}` with zero-based indices.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// Orthogonal factor of the QR canonicalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    q: DMatrix<f64>,
}

impl Rotation {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// Maps a vector from the rotated (upper triangular) frame to the original frame.
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        (&self.q * DVector::from_column_slice(y)).iter().copied().collect()
    }

    /// Maps a vector from the original frame into the rotated frame.
    pub fn apply_inverse(&self, x: &[f64]) -> Vec<f64> {
        (self.q.transpose() * DVector::from_column_slice(x))
            .iter()
            .copied()
            .collect()
    }
}

/// Upper triangular generator matrix with positive diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperTriangularBasis {
    entries: DMatrix<f64>,
}

impl UpperTriangularBasis {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let basis = GeneratorBasis::from_matrix(entries)?;
        let entries = basis.matrix;
        let n = entries.nrows();
        for m in 0..n {
            if entries[(m, m)] <= 0.0 {
                return Err(LatticeError::InvalidArgument(format!(
                    "diagonal entry {m} is not positive"
                )));
            }
            for l in 0..m {
                if entries[(m, l)] != 0.0 {
                    return Err(LatticeError::InvalidArgument(format!(
                        "entry ({m}, {l}) below the diagonal is nonzero"
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    /// Builds from rows, e.g. `[[1, 1/2], [0, √3/2]]`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(LatticeError::NotSquare {
                rows: n,
                columns: rows.first().map_or(0, Vec::len),
            });
        }
        Self::new(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// `v_{ml}` with zero-based indices.
    pub fn get(&self, m: usize, l: usize) -> f64 {
        self.entries[(m, l)]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entries[(i, i)]).collect()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn to_basis(&self) -> GeneratorBasis {
        GeneratorBasis {
            matrix: self.entries.clone(),
        }
    }

    pub fn volume(&self) -> f64 {
        self.diagonal().iter().product()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(LatticeError::InvalidArgument(format!(
                "scale factor {factor} must be positive"
            )));
        }
        Ok(Self {
            entries: &self.entries * factor,
        })
    }
}

/// A lattice point: integer coefficients and their image `V u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticePoint {
    pub coeffs: Vec<i64>,
    pub embedding: Vec<f64>,
}

impl LatticePoint {
    pub fn norm(&self) -> f64 {
        self.embedding.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn distance_to(&self, x: &[f64]) -> f64 {
        self.embedding
            .iter()
            .zip(x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Result of the exhaustive closest-point search.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosestPoint {
    pub point: LatticePoint,
    pub distance: f64,
    /// Coefficient half-widths of the enumerated box.
    pub window: Vec<i64>,
    /// The minimizer sits on the edge of the box; only possible when the
    /// caller forced a window smaller than the certified one.
    pub boundary_hit: bool,
}

/// `sqrt((A⁻¹)_{ii})`: any `u` with `‖V u‖ ≤ r` has `|u_i| ≤ r · sqrt((A⁻¹)_{ii})`.
pub(crate) fn coefficient_scales(basis: &GeneratorBasis) -> Vec<f64> {
    let inv = basis
        .gram()
        .entries
        .try_inverse()
        .expect("full rank basis has invertible Gram matrix");
    (0..basis.dim()).map(|i| inv[(i, i)].max(0.0).sqrt()).collect()
}

pub(crate) fn box_size(window: &[i64]) -> u128 {
    window.iter().map(|&w| (2 * w as u128) + 1).product()
}

/// Calls `visit` on every integer vector in `center ± window`, in
/// lexicographic order.
pub(crate) fn for_each_in_box(center: &[i64], window: &[i64], mut visit: impl FnMut(&[i64])) {
    let n = center.len();
    let mut u: Vec<i64> = center.iter().zip(window).map(|(c, w)| c - w).collect();
    loop {
        visit(&u);
        let mut k = n;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if u[k] < center[k] + window[k] {
                u[k] += 1;
                break;
            }
            u[k] = center[k] - window[k];
        }
    }
}

fn lex_less(a: &[i64], b: &[i64]) -> bool {
    a < b
}

/// Nonzero lattice point of minimum norm, by exhaustive enumeration over a
/// coefficient box certified through the inverse Gram matrix.
pub fn shortest_vector(basis: &GeneratorBasis) -> Result<LatticePoint> {
    let n = basis.dim();
    if n > 4 {
        return Err(LatticeError::UnsupportedDimension { n, max: 4 });
    }
    let radius = basis
        .matrix
        .column_iter()
        .map(|c| c.norm())
        .fold(f64::INFINITY, f64::min);
    let scales = coefficient_scales(basis);
    let window: Vec<i64> = scales
        .iter()
        .map(|s| (radius * s * (1.0 + 1e-9)).floor() as i64)
        .collect();
    let candidates = box_size(&window);
    if candidates > ENUMERATION_CAP {
        return Err(LatticeError::EnumerationTooLarge {
            candidates,
            cap: ENUMERATION_CAP,
        });
    }
    let center = vec![0i64; n];
    let mut best: Option<(f64, Vec<i64>)> = None;
    let m = &basis.matrix;
    for_each_in_box(&center, &window, |u| {
        if u.iter().all(|&c| c == 0) {
            return;
        }
        let mut norm2 = 0.0;
        for r in 0..n {
            let v: f64 = (0..n).map(|c| m[(r, c)] * u[c] as f64).sum();
            norm2 += v * v;
        }
        let better = match &best {
            None => true,
            Some((d, bu)) => norm2 < d - 1e-12 || ((norm2 - d).abs() <= 1e-12 && lex_less(u, bu)),
        };
        if better {
            best = Some((norm2, u.to_vec()));
        }
    });
    let (_, coeffs) = best.expect("box contains the basis vectors");
    Ok(basis.point(&coeffs))
}

/// Volume of the `n`-ball of radius `r`.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    use std::f64::consts::PI;
    match n {
        1 => 2.0 * r,
        2 => PI * r * r,
        3 => 4.0 / 3.0 * PI * r.powi(3),
        4 => PI * PI / 2.0 * r.powi(4),
        _ => {
            // Γ-free recursion V_n = 2π r² / n · V_{n-2}
            2.0 * PI * r * r / n as f64 * ball_volume(n - 2, r)
        }
    }
}

/// Packing density `vol S(0, ρ) / vol(Λ)` with `ρ` half the minimum distance.
pub fn packing_density(basis: &GeneratorBasis) -> Result<f64> {
    let n = basis.dim();
    if n > 3 {
        return Err(LatticeError::UnsupportedDimension { n, max: 3 });
    }
    let rho = shortest_vector(basis)?.norm() / 2.0;
    Ok(ball_volume(n, rho) / basis.volume())
}

/// Exact closest lattice point to `x` by enumeration.
///
/// The box is centered on the rounded real coefficients `round(V⁻¹x)`. With
/// `window = None` its half-widths are certified: if `d` is the distance to
/// the center point, every minimizer satisfies `|u_i - c_i| ≤ 2d·sqrt((A⁻¹)_{ii})`.
/// The half-width is never below [`DEFAULT_CVP_WINDOW`]. Ties are broken
/// towards the lexicographically smallest coefficient vector.
pub fn cvp_bruteforce(basis: &GeneratorBasis, x: &[f64], window: Option<i64>) -> Result<ClosestPoint> {
    let n = basis.dim();
    if n > 4 {
        return Err(LatticeError::UnsupportedDimension { n, max: 4 });
    }
    basis.check_target(x)?;
    let inv = basis
        .matrix
        .clone()
        .try_inverse()
        .ok_or(LatticeError::RankDeficient { det: 0.0 })?;
    let real = &inv * DVector::from_column_slice(x);
    let center: Vec<i64> = real.iter().map(|c| c.round() as i64).collect();
    let window: Vec<i64> = match window {
        Some(w) => vec![w.max(0); n],
        None => {
            let d0 = basis.point(&center).distance_to(x);
            coefficient_scales(basis)
                .iter()
                .map(|s| ((2.0 * d0 * s * (1.0 + 1e-9)).ceil() as i64).max(DEFAULT_CVP_WINDOW))
                .collect()
        }
    };
    let candidates = box_size(&window);
    if candidates > ENUMERATION_CAP {
        return Err(LatticeError::EnumerationTooLarge {
            candidates,
            cap: ENUMERATION_CAP,
        });
    }
    let m = &basis.matrix;
    let mut best: Option<(f64, Vec<i64>)> = None;
    for_each_in_box(&center, &window, |u| {
        let mut d2 = 0.0;
        for r in 0..n {
            let v: f64 = (0..n).map(|c| m[(r, c)] * u[c] as f64).sum();
            d2 += (x[r] - v) * (x[r] - v);
        }
        let better = match &best {
            None => true,
            Some((d, bu)) => d2 < d - 1e-12 || ((d2 - d).abs() <= 1e-12 && lex_less(u, bu)),
        };
        if better {
            best = Some((d2, u.to_vec()));
        }
    });
    let (d2, coeffs) = best.expect("box is nonempty");
    let boundary_hit = coeffs
        .iter()
        .zip(&center)
        .zip(&window)
        .any(|((u, c), w)| (u - c).abs() == *w);
    Ok(ClosestPoint {
        point: basis.point(&coeffs),
        distance: d2.sqrt(),
        window,
        boundary_hit,
    })
}
