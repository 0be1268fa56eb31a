//! Minkowski reduction tests, Lagrange–Gauss reduction and obtuse superbases
//! for dimensions up to three.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{LatticeError, Result};
use crate::lattice::{GeneratorBasis, GramMatrix};

/// Selling parameters at or below this value count as nonpositive.
pub const OBTUSE_TOL: f64 = 1e-10;

/// Outcome of the Minkowski inequality check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinkowskiReport {
    pub reduced: bool,
    /// First violated inequality, human readable.
    pub violated: Option<String>,
}

/// Checks the Minkowski inequalities for `n ≤ 3`:
/// `0 < a11 ≤ a22 ≤ a33`, `2|a_st| ≤ a_ss` for `s < t`, and
/// `2|±a12 ± a13 ± a23| ≤ a11 + a22` over all eight sign patterns.
pub fn is_minkowski_reduced(gram: &GramMatrix) -> Result<MinkowskiReport> {
    let n = gram.dim();
    if n > 3 {
        return Err(LatticeError::UnsupportedDimension { n, max: 3 });
    }
    let a = |i: usize, j: usize| gram.get(i - 1, j - 1);
    let scale = (1..=n).map(|i| a(i, i)).fold(0.0, f64::max);
    let tol = 1e-9 * scale.max(1.0);
    let fail = |msg: String| {
        Ok(MinkowskiReport {
            reduced: false,
            violated: Some(msg),
        })
    };

    if a(1, 1) <= 0.0 {
        return fail("0 < a11".into());
    }
    for s in 1..n {
        if a(s, s) > a(s + 1, s + 1) + tol {
            return fail(format!(
                "a{s}{s} <= a{t}{t} ({} > {})",
                a(s, s),
                a(s + 1, s + 1),
                t = s + 1
            ));
        }
    }
    for s in 1..=n {
        for t in s + 1..=n {
            if 2.0 * a(s, t).abs() > a(s, s) + tol {
                return fail(format!(
                    "2|a{s}{t}| <= a{s}{s} ({} > {})",
                    2.0 * a(s, t).abs(),
                    a(s, s)
                ));
            }
        }
    }
    if n == 3 {
        for mask in 0..8u8 {
            let sign = |bit: u8| if mask & (1 << bit) == 0 { 1.0 } else { -1.0 };
            let lhs = 2.0 * (sign(0) * a(1, 2) + sign(1) * a(1, 3) + sign(2) * a(2, 3)).abs();
            if lhs > a(1, 1) + a(2, 2) + tol {
                return fail(format!(
                    "2|{}a12 {}a13 {}a23| <= a11 + a22 ({} > {})",
                    if sign(0) > 0.0 { "+" } else { "-" },
                    if sign(1) > 0.0 { "+" } else { "-" },
                    if sign(2) > 0.0 { "+" } else { "-" },
                    lhs,
                    a(1, 1) + a(2, 2)
                ));
            }
        }
    }
    Ok(MinkowskiReport {
        reduced: true,
        violated: None,
    })
}

/// A Lagrange–Gauss reduced basis together with the unimodular transform
/// `U` (column operations) such that `reduced = original · U`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussReduction {
    pub basis: GeneratorBasis,
    pub transform: [[i64; 2]; 2],
}

/// Classic two dimensional reduction: size-reduce the longer vector against
/// the shorter, swap, repeat until neither step changes anything.
pub fn lagrange_gauss_reduce(basis: &GeneratorBasis) -> Result<GaussReduction> {
    if basis.dim() != 2 {
        return Err(LatticeError::DimensionMismatch {
            expected: 2,
            got: basis.dim(),
        });
    }
    let mut v1 = basis.column(0);
    let mut v2 = basis.column(1);
    // columns of the transform
    let mut u1 = [1i64, 0];
    let mut u2 = [0i64, 1];
    if v1.norm_squared() > v2.norm_squared() * (1.0 + 1e-12) {
        std::mem::swap(&mut v1, &mut v2);
        std::mem::swap(&mut u1, &mut u2);
    }
    loop {
        let dot = v1.dot(&v2);
        let n1 = v1.norm_squared();
        // leave already size-reduced pairs (2|⟨v1,v2⟩| ≤ ‖v1‖²) untouched
        let mu = if 2.0 * dot.abs() > n1 * (1.0 + 1e-12) {
            (dot / n1).round()
        } else {
            0.0
        };
        if mu != 0.0 {
            v2 -= &v1 * mu;
            let k = mu as i64;
            u2 = [u2[0] - k * u1[0], u2[1] - k * u1[1]];
        }
        if v2.norm_squared() < v1.norm_squared() * (1.0 - 1e-15) {
            std::mem::swap(&mut v1, &mut v2);
            std::mem::swap(&mut u1, &mut u2);
        } else {
            break;
        }
    }
    let m = DMatrix::from_columns(&[v1, v2]);
    Ok(GaussReduction {
        basis: GeneratorBasis::from_matrix(m)?,
        transform: [[u1[0], u2[0]], [u1[1], u2[1]]],
    })
}

/// `n + 1` vectors summing to zero; index 0 holds `v_0 = -Σ v_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Superbase {
    vectors: Vec<DVector<f64>>,
}

impl Superbase {
    /// Builds `{v_0, v_1, ..., v_n}` from a basis, with `v_0 = -Σ v_i`.
    pub fn from_basis(basis: &GeneratorBasis) -> Self {
        let n = basis.dim();
        let cols: Vec<DVector<f64>> = (0..n).map(|i| basis.column(i)).collect();
        let v0 = -cols.iter().fold(DVector::zeros(n), |acc, v| acc + v);
        let mut vectors = Vec::with_capacity(n + 1);
        vectors.push(v0);
        vectors.extend(cols);
        Self { vectors }
    }

    /// Takes `n + 1` vectors `[v_0, ..., v_n]` that must sum to zero.
    pub fn from_vectors(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let n = vectors.len().saturating_sub(1);
        if n == 0 || vectors.iter().any(|v| v.len() != n) {
            return Err(LatticeError::InvalidArgument(
                "a superbase of dimension n needs n + 1 vectors of length n".into(),
            ));
        }
        let vectors: Vec<DVector<f64>> = vectors.into_iter().map(DVector::from_vec).collect();
        let sum = vectors.iter().fold(DVector::zeros(n), |acc, v| acc + v);
        let scale = vectors.iter().map(|v| v.amax()).fold(1.0, f64::max);
        if sum.amax() > 1e-10 * scale {
            return Err(LatticeError::NotSuperbase {
                residual: sum.amax(),
            });
        }
        let sb = Self { vectors };
        sb.basis()?;
        Ok(sb)
    }

    pub fn dim(&self) -> usize {
        self.vectors.len() - 1
    }

    /// `v_i`, with `i = 0` the appended vector.
    pub fn vector(&self, i: usize) -> &DVector<f64> {
        &self.vectors[i]
    }

    pub fn vectors(&self) -> Vec<Vec<f64>> {
        self.vectors.iter().map(|v| v.iter().copied().collect()).collect()
    }

    /// The basis `{v_1, ..., v_n}`.
    pub fn basis(&self) -> Result<GeneratorBasis> {
        GeneratorBasis::from_matrix(DMatrix::from_columns(&self.vectors[1..]))
    }

    /// Selling parameter `p_ij = v_i · v_j`.
    pub fn selling(&self, i: usize, j: usize) -> f64 {
        self.vectors[i].dot(&self.vectors[j])
    }

    /// All `p_ij` for `i < j` in lexicographic order `(0,1), (0,2), ..., (n-1,n)`.
    pub fn selling_params(&self) -> Vec<f64> {
        let k = self.vectors.len();
        let mut out = Vec::with_capacity(k * (k - 1) / 2);
        for i in 0..k {
            for j in i + 1..k {
                out.push(self.selling(i, j));
            }
        }
        out
    }

    /// Selling parameters in the tabulated order `(p01, p02, p03, p23, p13, p12)`,
    /// which puts complementary pairs three apart.
    pub fn selling_table_order(&self) -> Result<[f64; 6]> {
        self.require_dim3()?;
        let p = |i, j| self.selling(i, j);
        Ok([p(0, 1), p(0, 2), p(0, 3), p(2, 3), p(1, 3), p(1, 2)])
    }

    pub fn is_obtuse(&self) -> bool {
        self.first_acute_pair().is_none()
    }

    fn first_acute_pair(&self) -> Option<(usize, usize, f64)> {
        let k = self.vectors.len();
        let scale = self.vectors.iter().map(|v| v.norm_squared()).fold(1.0, f64::max);
        for i in 0..k {
            for j in i + 1..k {
                let p = self.selling(i, j);
                if p > OBTUSE_TOL * scale {
                    return Some((i, j, p));
                }
            }
        }
        None
    }

    pub fn require_obtuse(&self) -> Result<()> {
        match self.first_acute_pair() {
            None => Ok(()),
            Some((i, j, value)) => Err(LatticeError::NotObtuse { i, j, value }),
        }
    }

    fn require_dim3(&self) -> Result<()> {
        if self.dim() != 3 {
            return Err(LatticeError::DimensionMismatch {
                expected: 3,
                got: self.dim(),
            });
        }
        Ok(())
    }
}

/// Searches the `2ⁿ` sign patterns of the basis for one with pairwise
/// nonpositive inner products whose completed superbase is obtuse.
///
/// Patterns are tried in order of increasing bitmask where the lowest bit
/// flips `v_n`, so `v_1` keeps its orientation whenever possible.
pub fn to_obtuse_superbase(basis: &GeneratorBasis) -> Result<Superbase> {
    let n = basis.dim();
    if n > 3 {
        return Err(LatticeError::UnsupportedDimension { n, max: 3 });
    }
    for mask in 0u32..(1 << n) {
        let cols: Vec<DVector<f64>> = (0..n)
            .map(|i| {
                let flip = mask & (1 << (n - 1 - i)) != 0;
                let v = basis.column(i);
                if flip {
                    -v
                } else {
                    v
                }
            })
            .collect();
        let candidate = GeneratorBasis::from_matrix(DMatrix::from_columns(&cols))?;
        let sb = Superbase::from_basis(&candidate);
        if sb.is_obtuse() {
            return Ok(sb);
        }
    }
    Err(LatticeError::NotVoronoiFirstKindViaSignFlips)
}

/// Drops the longest vector of an obtuse superbase and returns the rest in
/// order of increasing norm; the result is Minkowski reduced.
pub fn superbase_to_minkowski(sb: &Superbase) -> Result<GeneratorBasis> {
    if sb.dim() > 3 {
        return Err(LatticeError::UnsupportedDimension { n: sb.dim(), max: 3 });
    }
    sb.require_obtuse()?;
    // v_0 goes last so that among equal norms it is the one dropped
    let mut order: Vec<usize> = (1..=sb.dim()).chain(std::iter::once(0)).collect();
    let norm2 = |i: usize| sb.vector(i).norm_squared();
    let tol = 1e-12 * (0..=sb.dim()).map(norm2).fold(1.0, f64::max);
    // insertion sort that treats norms within `tol` as equal
    for k in 1..order.len() {
        let mut j = k;
        while j > 0 && norm2(order[j - 1]) > norm2(order[j]) + tol {
            order.swap(j - 1, j);
            j -= 1;
        }
    }
    order.truncate(sb.dim());
    let cols: Vec<DVector<f64>> = order.iter().map(|&i| sb.vector(i).clone()).collect();
    GeneratorBasis::from_matrix(DMatrix::from_columns(&cols))
}

/// `c_ij = -v_i · v_j` for `0 ≤ i < j ≤ 3`, stored in lexicographic pair order
/// `(01, 02, 03, 12, 13, 23)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConormSet {
    pub values: [f64; 6],
}

impl ConormSet {
    pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let k = Self::PAIRS
            .iter()
            .position(|&p| p == (i, j))
            .expect("pair of distinct indices in 0..4");
        self.values[k]
    }
}

/// `N(v_1), N(v_2), N(v_3), N(v_12), N(v_13), N(v_23), N(v_123)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VonormSet {
    pub values: [f64; 7],
}

pub fn conorms(sb: &Superbase) -> Result<ConormSet> {
    sb.require_dim3()?;
    let mut values = [0.0; 6];
    for (k, &(i, j)) in ConormSet::PAIRS.iter().enumerate() {
        values[k] = -sb.selling(i, j);
    }
    Ok(ConormSet { values })
}

/// The seven Voronoi vectors `v1, v2, v3, v1+v2, v1+v3, v2+v3, v1+v2+v3`.
pub fn voronoi_vectors(sb: &Superbase) -> Result<[DVector<f64>; 7]> {
    sb.require_dim3()?;
    let v = |i| sb.vector(i).clone();
    Ok([
        v(1),
        v(2),
        v(3),
        v(1) + v(2),
        v(1) + v(3),
        v(2) + v(3),
        v(1) + v(2) + v(3),
    ])
}

pub fn vonorms(sb: &Superbase) -> Result<VonormSet> {
    let vv = voronoi_vectors(sb)?;
    let mut values = [0.0; 7];
    for (slot, v) in values.iter_mut().zip(vv.iter()) {
        *slot = v.norm_squared();
    }
    Ok(VonormSet { values })
}
