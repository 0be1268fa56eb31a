//! Distributed computation of the Babai point.
//!
//! Node `m` observes coordinate `x_m` of a target expressed in the frame where
//! the generator matrix `V` is upper triangular. In the centralized model each
//! node sends `b̃_m = [x_m / v_mm]` and a side-information integer `s(m)` to a
//! fusion center, which then recovers the nearest-plane coefficients exactly,
//! provided every ratio `v_ml / v_mm` is rational. In the interactive model
//! nodes broadcast their coefficients in the order `n, ..., 1`.

use std::collections::HashMap;
use std::hash::Hash;

use num_integer::Integer;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::babai::{nearest_plane, round_half_up, BabaiCoefficients};
use crate::error::{LatticeError, Result};
use crate::lattice::UpperTriangularBasis;
use crate::rng::stream_rng;

pub const DEFAULT_RATIONAL_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_DEN: u64 = 1_000_000;
/// Entropy estimates from fewer samples are refused.
pub const MIN_SAMPLES: u64 = 100;

const CHUNK: u64 = 1 << 14;

/// Best rational approximation of `r` by continued-fraction convergents: the
/// first convergent within `tol` (relative to `max(1, |r|)`), or `None` when
/// the denominator would exceed `max_den` first.
pub fn rational_approx(r: f64, tol: f64, max_den: u64) -> Option<(i64, i64)> {
    if !r.is_finite() {
        return None;
    }
    let tol = tol * r.abs().max(1.0);
    let (mut h1, mut h2) = (1i128, 0i128);
    let (mut k1, mut k2) = (0i128, 1i128);
    let mut x = r;
    for _ in 0..64 {
        let a = x.floor();
        if a.abs() > 1e15 {
            return None;
        }
        let a = a as i128;
        let (h, k) = (a * h1 + h2, a * k1 + k2);
        if k > max_den as i128 {
            return None;
        }
        if (r - h as f64 / k as f64).abs() <= tol {
            return Some((h as i64, k as i64));
        }
        (h2, h1, k2, k1) = (h1, h, k1, k);
        let frac = x - a as f64;
        if frac <= 0.0 {
            return None;
        }
        x = 1.0 / frac;
    }
    None
}

/// `v_ml / v_mm = p_ml / q_ml` in lowest terms for `l > m`, and
/// `q_m = lcm{q_ml : l > m}` (`q_n = 1`). Indices are zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalProfile {
    pub p: Vec<Vec<i64>>,
    pub q: Vec<Vec<i64>>,
    pub q_m: Vec<i64>,
}

impl RationalProfile {
    pub fn dim(&self) -> usize {
        self.q_m.len()
    }

    /// `q̂_ml = q_m / q_ml`.
    pub fn q_hat(&self, m: usize, l: usize) -> i64 {
        self.q_m[m] / self.q[m][l]
    }
}

pub fn rationalize(upper: &UpperTriangularBasis, max_den: u64) -> Result<RationalProfile> {
    rationalize_tol(upper, DEFAULT_RATIONAL_TOL, max_den)
}

pub fn rationalize_tol(upper: &UpperTriangularBasis, tol: f64, max_den: u64) -> Result<RationalProfile> {
    let n = upper.dim();
    let mut p = vec![vec![0; n]; n];
    let mut q = vec![vec![1; n]; n];
    let mut q_m = vec![1i64; n];
    for m in 0..n {
        for l in m + 1..n {
            let value = upper.get(m, l) / upper.get(m, m);
            let (pp, qq) = rational_approx(value, tol, max_den).ok_or(LatticeError::IrrationalRatio {
                row: m,
                col: l,
                value,
                max_den,
            })?;
            p[m][l] = pp;
            q[m][l] = qq;
            q_m[m] = q_m[m].lcm(&qq);
        }
    }
    Ok(RationalProfile { p, q, q_m })
}

/// What node `m` (zero-based) sends to the fusion center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeMessage {
    pub node: usize,
    pub b_tilde: i64,
    pub s: i64,
}

/// `b̃ = [y]` and the largest `s < q` with `[y - s/q] = b̃`. Writing
/// `y = b̃ + d` with `d ∈ [-1/2, 1/2)`, the condition is `s ≤ q(d + 1/2)`.
/// When `q(d + 1/2)` lands within rounding error of an integer, one step of
/// correction makes the result agree with the definition evaluated in
/// floating point.
fn encode_scalar(y: f64, q: i64) -> (i64, i64) {
    let b = round_half_up(y);
    let keeps = |s: i64| round_half_up(y - s as f64 / q as f64) == b;
    let mut s = (((y - b as f64) + 0.5) * q as f64).floor() as i64;
    s = s.clamp(0, q - 1);
    if s + 1 < q && keeps(s + 1) {
        s += 1;
    } else if s > 0 && !keeps(s) {
        s -= 1;
    }
    (b, s)
}

pub fn node_encode(m: usize, x_m: f64, upper: &UpperTriangularBasis, profile: &RationalProfile) -> NodeMessage {
    let (b_tilde, s) = encode_scalar(x_m / upper.get(m, m), profile.q_m[m]);
    NodeMessage { node: m, b_tilde, s }
}

pub fn encode_all(x: &[f64], upper: &UpperTriangularBasis, profile: &RationalProfile) -> Vec<NodeMessage> {
    x.iter()
        .enumerate()
        .map(|(m, &xm)| node_encode(m, xm, upper, profile))
        .collect()
}

/// `(⌊N / q_m⌋, N mod q_m)` for `N = Σ_{l>m} b_l p_ml q̂_ml`, so that
/// `Σ_{l>m} b_l v_ml / v_mm = ⌊N/q_m⌋ + s/q_m`.
fn carry(m: usize, b: &[i64], profile: &RationalProfile) -> (i64, i64) {
    let n = profile.dim();
    let big: i128 = (m + 1..n)
        .map(|l| b[l] as i128 * profile.p[m][l] as i128 * profile.q_hat(m, l) as i128)
        .sum();
    let q = profile.q_m[m] as i128;
    (big.div_euclid(q) as i64, big.rem_euclid(q) as i64)
}

/// Fusion-center reconstruction, `m = n, ..., 1`:
/// `b_m = b̃_m - ⌊Σ b_l v_ml / v_mm⌋ - [s > s(m)]`.
pub fn fusion_decode(
    messages: &[NodeMessage],
    upper: &UpperTriangularBasis,
    profile: &RationalProfile,
) -> Result<BabaiCoefficients> {
    let n = upper.dim();
    if profile.dim() != n {
        return Err(LatticeError::DimensionMismatch {
            expected: n,
            got: profile.dim(),
        });
    }
    let mut slot: Vec<Option<NodeMessage>> = vec![None; n];
    for msg in messages {
        match slot.get_mut(msg.node) {
            Some(s @ None) => *s = Some(*msg),
            Some(Some(_)) => {
                return Err(LatticeError::InconsistentMessages(format!("node {} sent twice", msg.node)))
            }
            None => return Err(LatticeError::InconsistentMessages(format!("unknown node {}", msg.node))),
        }
    }
    let mut b = vec![0i64; n];
    for m in (0..n).rev() {
        let msg = slot[m].ok_or_else(|| LatticeError::InconsistentMessages(format!("node {m} is missing")))?;
        let (fl, s) = carry(m, &b, profile);
        b[m] = msg.b_tilde - fl - i64::from(s > msg.s);
    }
    Ok(BabaiCoefficients(b))
}

/// Decodes through the interval form of the rule,
/// `b_m = b̃_m - ⌊·⌋ - [x_m/v_mm - [x_m/v_mm] < -1/2 + s/q_m]`, directly from
/// `x`, and reports whether it agrees with [`fusion_decode`] of the encoded
/// messages.
pub fn modular_decode_check(upper: &UpperTriangularBasis, profile: &RationalProfile, x: &[f64]) -> Result<bool> {
    let n = upper.dim();
    let mut b = vec![0i64; n];
    for m in (0..n).rev() {
        let y = x[m] / upper.get(m, m);
        let b_tilde = round_half_up(y);
        let d = y - b_tilde as f64;
        let (fl, s) = carry(m, &b, profile);
        let threshold = -0.5 + s as f64 / profile.q_m[m] as f64;
        b[m] = b_tilde - fl - i64::from(d < threshold);
    }
    let fused = fusion_decode(&encode_all(x, upper, profile), upper, profile)?;
    Ok(fused.0 == b)
}

/// `Σ_{m<n} log2 q_m`.
pub fn centralized_rate_bound(profile: &RationalProfile) -> f64 {
    profile.q_m.iter().map(|&q| (q as f64).log2()).sum()
}

/// Bits of the fixed-length side-information code, `Σ ⌈log2 q_m⌉`.
pub fn side_info_wire_bits(profile: &RationalProfile) -> u64 {
    profile
        .q_m
        .iter()
        .map(|&q| (q as u64).next_power_of_two().trailing_zeros() as u64)
        .sum()
}

/// Length of the Elias-gamma code of the zigzag image of `v`, a simple
/// variable-length wire format for signed integers.
pub fn elias_gamma_bits(v: i64) -> u32 {
    let z = ((v << 1) ^ (v >> 63)) as u64 + 1;
    2 * (63 - z.leading_zeros()) + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    Centralized,
    Interactive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolTrace {
    pub model: Model,
    pub scale: f64,
    pub messages: Vec<NodeMessage>,
    pub decoded: BabaiCoefficients,
    /// Wire bits of each node's integer message.
    pub bits_integer_part: Vec<u32>,
    /// `Σ log2 q_m` (zero in the interactive model).
    pub bits_side_info: f64,
}

/// One run of the centralized protocol on the lattice `αV`.
pub fn run_centralized(
    x: &[f64],
    upper: &UpperTriangularBasis,
    profile: &RationalProfile,
    alpha: f64,
) -> Result<ProtocolTrace> {
    let scaled = upper.scaled(alpha)?;
    let messages = encode_all(x, &scaled, profile);
    let decoded = fusion_decode(&messages, &scaled, profile)?;
    Ok(ProtocolTrace {
        model: Model::Centralized,
        scale: alpha,
        bits_integer_part: messages.iter().map(|m| elias_gamma_bits(m.b_tilde)).collect(),
        bits_side_info: centralized_rate_bound(profile),
        messages,
        decoded,
    })
}

/// Distribution of one node's observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SourceModel {
    Uniform { low: f64, high: f64 },
    Gaussian { mean: f64, std: f64 },
}

impl SourceModel {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            SourceModel::Uniform { low, high } => low.is_finite() && high.is_finite() && high > low,
            SourceModel::Gaussian { mean, std } => mean.is_finite() && std.is_finite() && std > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(LatticeError::InvalidArgument(format!("invalid source {self:?}")))
        }
    }

    pub fn entropy_nats(&self) -> f64 {
        match *self {
            SourceModel::Uniform { low, high } => (high - low).ln(),
            SourceModel::Gaussian { std, .. } => 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * std * std).ln(),
        }
    }

    /// Differential entropy `h` in bits.
    pub fn entropy_bits(&self) -> f64 {
        self.entropy_nats() / std::f64::consts::LN_2
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            SourceModel::Uniform { low, high } => rng.random_range(low..high),
            SourceModel::Gaussian { mean, std } => Normal::new(mean, std).expect("validated").sample(rng),
        }
    }
}

/// Plug-in (maximum-likelihood) entropy in bits of the empirical distribution.
pub fn plug_in_entropy<K: Hash + Eq>(samples: impl IntoIterator<Item = K>) -> f64 {
    let mut counts: HashMap<K, u64> = HashMap::new();
    let mut total = 0u64;
    for k in samples {
        *counts.entry(k).or_default() += 1;
        total += 1;
    }
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    // fixed summation order keeps results bit-reproducible
    let mut c: Vec<u64> = counts.into_values().collect();
    c.sort_unstable();
    -c.into_iter()
        .map(|c| {
            let p = c as f64 / t;
            p * p.log2()
        })
        .sum::<f64>()
}

fn check_inputs(sources: &[SourceModel], n: usize, alpha: f64, samples: u64) -> Result<()> {
    if sources.len() != n {
        return Err(LatticeError::DimensionMismatch {
            expected: n,
            got: sources.len(),
        });
    }
    for s in sources {
        s.validate()?;
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(LatticeError::InvalidArgument(format!("scale α = {alpha} must be positive")));
    }
    if samples < MIN_SAMPLES {
        return Err(LatticeError::InvalidArgument(format!(
            "{samples} samples are too few for an entropy estimate (need {MIN_SAMPLES})"
        )));
    }
    Ok(())
}

/// Draws `samples` independent observation vectors; sample `i` of chunk `c`
/// comes from RNG stream `c`, so output is independent of thread count.
fn draw<T: Send>(
    sources: &[SourceModel],
    samples: u64,
    seed: u64,
    f: impl Fn(&[f64]) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let chunks = samples.div_ceil(CHUNK);
    let per_chunk: Vec<Result<Vec<T>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut x = vec![0.0; sources.len()];
            let mut out = Vec::with_capacity(count as usize);
            for _ in 0..count {
                for (xi, s) in x.iter_mut().zip(sources) {
                    *xi = s.sample(&mut rng);
                }
                out.push(f(&x)?);
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::with_capacity(samples as usize);
    for chunk in per_chunk {
        all.extend(chunk?);
    }
    Ok(all)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralizedReport {
    /// `Σ h_i - log2|det V| - n log2 α + Σ log2 q_m`.
    pub rate_bound: f64,
    /// The integer-part share of the bound, `Σ h_i - log2|det V| - n log2 α`.
    pub integer_part_bound: f64,
    pub side_info_bound: f64,
    pub side_info_wire_bits: u64,
    /// `Σ_m Ĥ(b̃_m)` from simulation.
    pub empirical_integer_entropy: f64,
    /// `Σ_m Ĥ(s(m))` from simulation.
    pub empirical_side_info_entropy: f64,
    pub empirical_rate: f64,
    /// Mean Elias-gamma wire bits for the integer parts, per sample.
    pub mean_integer_wire_bits: f64,
    /// Samples where fusion decoding differs from local nearest-plane decoding.
    pub decode_mismatches: u64,
    pub samples: u64,
}

/// Simulates the centralized protocol on `αV` for `samples` independent
/// observations and compares the empirical rate with the analytic bound.
pub fn centralized_total_rate(
    sources: &[SourceModel],
    upper: &UpperTriangularBasis,
    alpha: f64,
    profile: &RationalProfile,
    samples: u64,
    seed: u64,
) -> Result<CentralizedReport> {
    let n = upper.dim();
    check_inputs(sources, n, alpha, samples)?;
    let scaled = upper.scaled(alpha)?;
    let runs = draw(sources, samples, seed, |x| {
        let messages = encode_all(x, &scaled, profile);
        let fused = fusion_decode(&messages, &scaled, profile)?;
        let mismatch = fused != nearest_plane(&scaled, x);
        Ok((messages, mismatch))
    })?;
    let h: f64 = sources.iter().map(SourceModel::entropy_bits).sum();
    let integer_part_bound = h - upper.volume().log2() - n as f64 * alpha.log2();
    let side_info_bound = centralized_rate_bound(profile);
    let empirical_integer_entropy: f64 = (0..n)
        .map(|m| plug_in_entropy(runs.iter().map(|(msgs, _)| msgs[m].b_tilde)))
        .sum();
    let empirical_side_info_entropy: f64 = (0..n)
        .map(|m| plug_in_entropy(runs.iter().map(|(msgs, _)| msgs[m].s)))
        .sum();
    let wire: u64 = runs
        .iter()
        .flat_map(|(msgs, _)| msgs.iter().map(|m| elias_gamma_bits(m.b_tilde) as u64))
        .sum();
    Ok(CentralizedReport {
        rate_bound: integer_part_bound + side_info_bound,
        integer_part_bound,
        side_info_bound,
        side_info_wire_bits: side_info_wire_bits(profile),
        empirical_integer_entropy,
        empirical_side_info_entropy,
        empirical_rate: empirical_integer_entropy + empirical_side_info_entropy,
        mean_integer_wire_bits: wire as f64 / samples as f64,
        decode_mismatches: runs.iter().filter(|(_, bad)| *bad).count() as u64,
        samples,
    })
}

/// Broadcast protocol for one observation: node `i = n, ..., 1` computes
/// `U_i = [(x_i - Σ_{j>i} α v_ij U_j) / (α v_ii)]` from its own copy of the
/// earlier broadcasts and sends it to every other node. Returns each node's
/// final copy of `U`.
pub fn interactive_round(x: &[f64], scaled: &UpperTriangularBasis) -> Vec<Vec<i64>> {
    let n = scaled.dim();
    let mut views: Vec<Vec<Option<i64>>> = vec![vec![None; n]; n];
    for i in (0..n).rev() {
        let view = &views[i];
        let acc: f64 = (i + 1..n)
            .map(|j| scaled.get(i, j) * view[j].expect("broadcast received") as f64)
            .sum();
        let u = round_half_up((x[i] - acc) / scaled.get(i, i));
        for v in views.iter_mut() {
            v[i] = Some(u);
        }
    }
    views
        .into_iter()
        .map(|v| v.into_iter().map(|u| u.expect("all nodes broadcast")).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractiveReport {
    /// `(n-1) Σ Ĥ(U_i | U_{i+1}, ..., U_n)` from plug-in joint frequencies.
    pub empirical_rate: f64,
    /// `Ĥ(U_i | U_{>i})` per node, zero-based order.
    pub conditional_entropies: Vec<f64>,
    /// `(n-1)(Σ h_i - Σ log2(α v_ii))`.
    pub approx_rate: f64,
    /// `(n-1) Σ h_i - n(n-1) log2 α`, the unit-determinant form.
    pub normalized_rate: f64,
    /// Samples where some node ended with a different coefficient vector.
    pub disagreements: u64,
    /// Samples where the agreed coefficients differ from nearest-plane decoding.
    pub decode_mismatches: u64,
    pub samples: u64,
    /// The first sample's broadcasts.
    pub example: ProtocolTrace,
}

pub fn interactive_simulate(
    sources: &[SourceModel],
    upper: &UpperTriangularBasis,
    alpha: f64,
    samples: u64,
    seed: u64,
) -> Result<InteractiveReport> {
    let n = upper.dim();
    check_inputs(sources, n, alpha, samples)?;
    let scaled = upper.scaled(alpha)?;
    let runs = draw(sources, samples, seed, |x| {
        let views = interactive_round(x, &scaled);
        let agree = views.iter().all(|v| *v == views[0]);
        let u = views.into_iter().next().expect("n ≥ 1");
        let correct = u == nearest_plane(&scaled, x).0;
        Ok((u, agree, correct))
    })?;
    // Ĥ(U_i | U_{>i}) = Ĥ(U_{≥i}) - Ĥ(U_{>i})
    let suffix: Vec<f64> = (0..=n)
        .map(|i| plug_in_entropy(runs.iter().map(|(u, _, _)| &u[i..])))
        .collect();
    let conditional_entropies: Vec<f64> = (0..n).map(|i| suffix[i] - suffix[i + 1]).collect();
    let h: f64 = sources.iter().map(SourceModel::entropy_bits).sum();
    let nf = n as f64;
    let diag_term: f64 = upper.diagonal().iter().map(|d| (alpha * d).log2()).sum();
    let first = &runs[0].0;
    let example = ProtocolTrace {
        model: Model::Interactive,
        scale: alpha,
        messages: first
            .iter()
            .enumerate()
            .map(|(node, &b_tilde)| NodeMessage { node, b_tilde, s: 0 })
            .collect(),
        decoded: BabaiCoefficients(first.clone()),
        bits_integer_part: first.iter().map(|&u| elias_gamma_bits(u) * (n as u32 - 1)).collect(),
        bits_side_info: 0.0,
    };
    Ok(InteractiveReport {
        empirical_rate: (nf - 1.0) * conditional_entropies.iter().sum::<f64>(),
        conditional_entropies,
        approx_rate: (nf - 1.0) * (h - diag_term),
        normalized_rate: (nf - 1.0) * h - nf * (nf - 1.0) * alpha.log2(),
        disagreements: runs.iter().filter(|r| !r.1).count() as u64,
        decode_mismatches: runs.iter().filter(|r| !r.2).count() as u64,
        samples,
        example,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn upper(rows: &[Vec<f64>]) -> UpperTriangularBasis {
        UpperTriangularBasis::from_rows(rows).unwrap()
    }

    fn hex() -> UpperTriangularBasis {
        upper(&[vec![1.0, 0.5], vec![0.0, 3f64.sqrt() / 2.0]])
    }

    fn thousandths() -> UpperTriangularBasis {
        upper(&[vec![1.0, 0.311], vec![0.0, 1.01]])
    }

    fn fifths() -> UpperTriangularBasis {
        upper(&[vec![1.0, 0.4], vec![0.0, 2.0]])
    }

    fn bcc() -> UpperTriangularBasis {
        let s2 = 2f64.sqrt();
        upper(&[
            vec![1.0, -1.0 / 3.0, -1.0 / 3.0],
            vec![0.0, 2.0 * s2 / 3.0, -s2 / 3.0],
            vec![0.0, 0.0, (2.0f64 / 3.0).sqrt()],
        ])
    }

    /// The defining loop: largest `s < q` with `[y - s/q] = [y]`.
    fn s_by_loop(y: f64, q: i64) -> i64 {
        let b = round_half_up(y);
        (0..q).rev().find(|&s| round_half_up(y - s as f64 / q as f64) == b).unwrap()
    }

    #[test]
    fn continued_fractions() {
        assert_eq!(rational_approx(0.5, 1e-9, 10), Some((1, 2)));
        assert_eq!(rational_approx(-1.0 / 3.0, 1e-9, 10), Some((-1, 3)));
        assert_eq!(rational_approx(0.311, 1e-9, 1_000_000), Some((311, 1000)));
        assert_eq!(rational_approx(3.0, 1e-9, 10), Some((3, 1)));
        assert_eq!(rational_approx(0.0, 1e-9, 10), Some((0, 1)));
        assert_eq!(rational_approx(2f64.sqrt(), 1e-9, 1000), None);
    }

    #[test]
    fn profiles_of_rational_lattices() {
        assert_eq!(rationalize(&hex(), DEFAULT_MAX_DEN).unwrap().q_m, vec![2, 1]);
        assert_eq!(rationalize(&thousandths(), DEFAULT_MAX_DEN).unwrap().q_m, vec![1000, 1]);
        assert_eq!(rationalize(&fifths(), DEFAULT_MAX_DEN).unwrap().q_m, vec![5, 1]);
        let p = rationalize(&bcc(), DEFAULT_MAX_DEN).unwrap();
        assert_eq!(p.q_m, vec![3, 2, 1]);
        assert_eq!((p.p[0][1], p.q[0][1]), (-1, 3));
        assert_eq!((p.p[1][2], p.q[1][2]), (-1, 2));
        let irrational = upper(&[vec![1.0, 2f64.sqrt()], vec![0.0, 1.0]]);
        assert!(matches!(
            rationalize(&irrational, 1000),
            Err(LatticeError::IrrationalRatio { row: 0, col: 1, .. })
        ));
    }

    #[test]
    fn profile_is_scale_invariant() {
        for u in [hex(), bcc(), thousandths()] {
            let a = rationalize(&u, DEFAULT_MAX_DEN).unwrap();
            let b = rationalize(&u.scaled(1.0 / 256.0).unwrap(), DEFAULT_MAX_DEN).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rate_bounds() {
        let r = |u| centralized_rate_bound(&rationalize(&u, DEFAULT_MAX_DEN).unwrap());
        assert_eq!(r(hex()), 1.0);
        assert_abs_diff_eq!(r(thousandths()), 1000f64.log2(), epsilon = 1e-12);
        assert_abs_diff_eq!(r(bcc()), 6f64.log2(), epsilon = 1e-12);
        assert_eq!(side_info_wire_bits(&rationalize(&thousandths(), DEFAULT_MAX_DEN).unwrap()), 10);
        assert_eq!(side_info_wire_bits(&rationalize(&bcc(), DEFAULT_MAX_DEN).unwrap()), 3);
    }

    #[test]
    fn side_information_values() {
        let u = thousandths();
        let p = rationalize(&u, DEFAULT_MAX_DEN).unwrap();
        let msgs = encode_all(&[1.0, 1.0], &u, &p);
        assert_eq!(msgs[0], NodeMessage { node: 0, b_tilde: 1, s: 500 });
        assert_eq!(msgs[1].s, 0);

        let u = hex();
        let p = rationalize(&u, DEFAULT_MAX_DEN).unwrap();
        let m = node_encode(0, 0.3, &u, &p);
        assert_eq!((m.b_tilde, m.s), (0, 1));
        assert_eq!(s_by_loop(0.3, 2), 1);
    }

    #[test]
    fn closed_form_side_info_matches_loop() {
        let mut rng = stream_rng(7, 0);
        for q in [1, 2, 3, 5, 7, 10, 64, 999, 1000] {
            for _ in 0..200 {
                let y: f64 = rng.random_range(-50.0..50.0);
                assert_eq!(encode_scalar(y, q).1, s_by_loop(y, q), "y = {y}, q = {q}");
            }
            // exact grid points, where the loop's ties matter
            for k in -3 * q..3 * q {
                let y = k as f64 / q as f64;
                assert_eq!(encode_scalar(y, q).1, s_by_loop(y, q), "y = {y}, q = {q}");
            }
        }
    }

    #[test]
    fn fusion_matches_nearest_plane() {
        let mut rng = stream_rng(3, 0);
        for u in [hex(), bcc(), fifths(), thousandths()] {
            let p = rationalize(&u, DEFAULT_MAX_DEN).unwrap();
            for _ in 0..2000 {
                let x: Vec<f64> = (0..u.dim()).map(|_| rng.random_range(-20.0..20.0)).collect();
                let msgs = encode_all(&x, &u, &p);
                assert_eq!(fusion_decode(&msgs, &u, &p).unwrap(), nearest_plane(&u, &x));
                assert!(modular_decode_check(&u, &p, &x).unwrap());
            }
            // lattice points decode to their own coefficients
            let ub = u.to_basis();
            for c in [[2i64, -3, 1], [0, 0, 0], [-5, 4, 7]] {
                let x: Vec<f64> = ub.embed(&c[..u.dim()]).iter().copied().collect();
                let msgs = encode_all(&x, &u, &p);
                assert_eq!(fusion_decode(&msgs, &u, &p).unwrap().0, c[..u.dim()].to_vec());
            }
        }
    }

    #[test]
    fn bcc_side_information_ranges() {
        let u = bcc();
        let p = rationalize(&u, DEFAULT_MAX_DEN).unwrap();
        let mut rng = stream_rng(5, 0);
        let mut seen = [[false; 3]; 3];
        for _ in 0..2000 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-10.0..10.0)).collect();
            for m in encode_all(&x, &u, &p) {
                seen[m.node][m.s as usize] = true;
            }
        }
        assert_eq!(seen[0], [true, true, true]);
        assert_eq!(seen[1], [true, true, false]);
        assert_eq!(seen[2], [true, false, false]);
    }

    #[test]
    fn fifths_interval_split() {
        // b_2 = 3: the carry is 6/5, i.e. floor 1 and s = 1
        let u = fifths();
        let p = rationalize(&u, DEFAULT_MAX_DEN).unwrap();
        assert_eq!(carry(0, &[0, 3], &p), (1, 1));
        let x2 = 6.0; // b̃_2 = 3
        for (d, expect) in [(-0.45, -2), (-0.31, -2), (-0.29, -1), (0.0, -1), (0.49, -1)] {
            let x = [10.0 + d, x2];
            let b = fusion_decode(&encode_all(&x, &u, &p), &u, &p).unwrap();
            assert_eq!(b.0, vec![10 + expect, 3], "d = {d}");
            assert_eq!(b, nearest_plane(&u, &x));
        }
    }

    #[test]
    fn bad_message_sets_are_rejected() {
        let u = hex();
        let p = rationalize(&u, DEFAULT_MAX_DEN).unwrap();
        let msgs = encode_all(&[0.2, 0.7], &u, &p);
        assert!(fusion_decode(&msgs[..1], &u, &p).is_err());
        assert!(fusion_decode(&[msgs[0], msgs[0], msgs[1]], &u, &p).is_err());
    }

    #[test]
    fn elias_gamma_lengths() {
        assert_eq!(elias_gamma_bits(0), 1);
        assert_eq!(elias_gamma_bits(-1), 3);
        assert_eq!(elias_gamma_bits(1), 3);
        assert_eq!(elias_gamma_bits(-2), 5);
        assert_eq!(elias_gamma_bits(2), 5);
        assert_eq!(elias_gamma_bits(4), 7);
    }

    #[test]
    fn source_entropies() {
        assert_eq!(SourceModel::Uniform { low: 0.0, high: 1.0 }.entropy_bits(), 0.0);
        assert_abs_diff_eq!(
            SourceModel::Gaussian { mean: 0.0, std: 1.0 }.entropy_nats(),
            1.4189385332046727,
            epsilon = 1e-12
        );
        // histogram estimate with bin width w: Ĥ_bins + ln w ≈ h
        for src in [
            SourceModel::Uniform { low: -1.0, high: 2.0 },
            SourceModel::Gaussian { mean: 1.0, std: 0.7 },
        ] {
            let w = 0.01;
            let mut rng = stream_rng(9, 0);
            let h = plug_in_entropy((0..400_000).map(|_| (src.sample(&mut rng) / w).floor() as i64))
                * std::f64::consts::LN_2
                + w.ln();
            assert!((h - src.entropy_nats()).abs() < 0.05, "{src:?}: {h}");
        }
        assert!(SourceModel::Gaussian { mean: 0.0, std: 0.0 }.validate().is_err());
    }

    #[test]
    fn centralized_simulation() {
        let src = [SourceModel::Uniform { low: 0.0, high: 1.0 }; 2];
        let u = hex();
        let p = rationalize(&u, DEFAULT_MAX_DEN).unwrap();
        let alpha = 2f64.powi(-8);
        let r = centralized_total_rate(&src, &u, alpha, &p, 100_000, 1).unwrap();
        assert_eq!(r.decode_mismatches, 0);
        assert_eq!(r.side_info_bound, 1.0);
        assert!(r.empirical_side_info_entropy <= 1.0 + 1e-12);
        assert!((r.empirical_integer_entropy - r.integer_part_bound).abs() / 2.0 < 0.2, "{r:?}");
        let half = centralized_total_rate(&src, &u, alpha / 2.0, &p, 1000, 1).unwrap();
        assert_abs_diff_eq!(half.rate_bound - r.rate_bound, 2.0, epsilon = 1e-9);
        assert_eq!(half.side_info_bound, r.side_info_bound);
        assert!(centralized_total_rate(&src, &u, alpha, &p, 50, 1).is_err());
        assert!(centralized_total_rate(&src, &u, -1.0, &p, 1000, 1).is_err());
    }

    #[test]
    fn interactive_simulation() {
        let src = [SourceModel::Uniform { low: 0.0, high: 1.0 }; 3];
        let u = bcc();
        let r = interactive_simulate(&src, &u, 0.25, 5000, 2).unwrap();
        assert_eq!(r.disagreements, 0);
        assert_eq!(r.decode_mismatches, 0);
        assert_abs_diff_eq!(
            r.empirical_rate,
            2.0 * r.conditional_entropies.iter().sum::<f64>(),
            epsilon = 1e-12
        );
        let again = interactive_simulate(&src, &u, 0.25, 5000, 2).unwrap();
        assert_eq!(r, again);
        assert!(interactive_simulate(&src, &u, 0.25, 99, 2).is_err());
    }
}
