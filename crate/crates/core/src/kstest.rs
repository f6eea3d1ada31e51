//! One-sample Kolmogorov-Smirnov test against a discontinuous hypothesized
//! distribution, with exact critical levels for step CDFs.

use alloc::vec;
use alloc::vec::Vec;
use num_bigint::{BigInt, Sign};
use serde::{Deserialize, Serialize};

/// Ordinate tolerance when deciding that a horizontal line meets a jump
/// exactly at one of its limits.
pub const LEVEL_TOLERANCE: f64 = 1e-12;

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KsError {
    #[error("support points must be finite and strictly increasing")]
    BadSupport,
    #[error("cumulative values must be non-decreasing in [0, 1] and end at 1")]
    BadLevels,
    #[error("sample has mass outside the hypothesized support")]
    MismatchedSupport,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("distribution does not sum to 1")]
    NotNormalized,
    #[error("sample is empty")]
    EmptySample,
}

/// Right-continuous step CDF: `levels[k]` is the value from `points[k]`
/// up to the next point, and the CDF is 0 left of `points[0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepCdf {
    points: Vec<f64>,
    levels: Vec<f64>,
}

impl StepCdf {
    pub fn new(points: Vec<f64>, levels: Vec<f64>) -> Result<Self, KsError> {
        if points.len() != levels.len() {
            return Err(KsError::LengthMismatch {
                left: points.len(),
                right: levels.len(),
            });
        }
        if points.is_empty() || points.iter().any(|p| !p.is_finite()) || points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(KsError::BadSupport);
        }
        let in_range = levels.iter().all(|l| (0.0..=1.0 + 1e-9).contains(l));
        let monotone = levels.windows(2).all(|w| w[0] <= w[1]);
        let last = levels[levels.len() - 1];
        if !in_range || !monotone || (last - 1.0).abs() > 1e-9 {
            return Err(KsError::BadLevels);
        }
        let mut levels = levels;
        let n = levels.len();
        levels[n - 1] = 1.0;
        Ok(StepCdf { points, levels })
    }

    /// CDF of a probability mass function placed on `points`.
    pub fn from_pmf(points: Vec<f64>, pmf: &[f64]) -> Result<Self, KsError> {
        if pmf.iter().any(|p| !(*p >= 0.0)) {
            return Err(KsError::BadLevels);
        }
        if (pmf.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
            return Err(KsError::NotNormalized);
        }
        let mut acc = 0.0;
        let levels = pmf
            .iter()
            .map(|p| {
                acc += p;
                acc.min(1.0)
            })
            .collect();
        StepCdf::new(points, levels)
    }

    /// Empirical CDF of `counts[k]` observations at `points[k]`.
    pub fn from_counts(points: Vec<f64>, counts: &[u64]) -> Result<Self, KsError> {
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(KsError::EmptySample);
        }
        let mut acc = 0;
        let levels = counts
            .iter()
            .map(|c| {
                acc += c;
                acc as f64 / n as f64
            })
            .collect();
        StepCdf::new(points, levels)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.points.iter().rposition(|&p| p <= x) {
            Some(k) => self.levels[k],
            None => 0.0,
        }
    }

    pub fn left_limit(&self, x: f64) -> f64 {
        match self.points.iter().rposition(|&p| p < x) {
            Some(k) => self.levels[k],
            None => 0.0,
        }
    }

    /// Every value the graph passes through at a jump boundary: 0 and each
    /// level, ascending.
    fn jump_limits(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.levels.len() + 1);
        v.push(0.0);
        v.extend(self.levels.iter().copied());
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsStatistics {
    pub d: f64,
    pub d_minus: f64,
    pub d_plus: f64,
}

/// `d_minus = sup(H - S)`, `d_plus = sup(S - H)` and `d = max` over both
/// limits at every jump of either CDF.
pub fn ks_statistics(sample: &StepCdf, hypothesis: &StepCdf) -> Result<KsStatistics, KsError> {
    let mut prev = 0.0;
    for (p, l) in sample.points.iter().zip(&sample.levels) {
        if *l > prev && !hypothesis.points.contains(p) {
            return Err(KsError::MismatchedSupport);
        }
        prev = *l;
    }
    let mut d_minus: f64 = 0.0;
    let mut d_plus: f64 = 0.0;
    for &x in sample.points.iter().chain(&hypothesis.points) {
        for (s, h) in [
            (sample.eval(x), hypothesis.eval(x)),
            (sample.left_limit(x), hypothesis.left_limit(x)),
        ] {
            d_minus = d_minus.max(h - s);
            d_plus = d_plus.max(s - h);
        }
    }
    Ok(KsStatistics {
        d: d_minus.max(d_plus),
        d_minus,
        d_plus,
    })
}

/// `C(n, k)`, exact while the integers fit, through `lgamma` beyond.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    if n <= 30 {
        let mut acc: u64 = 1;
        for i in 0..k as u64 {
            acc = acc * (n as u64 - i) / (i + 1);
        }
        acc as f64
    } else {
        libm::exp(ln_binomial(n, k))
    }
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// `C(n, k) * base^(n-k)` with `0^0 = 1`.
fn weighted(n: usize, k: usize, base: f64) -> f64 {
    binomial(n, k) * libm::pow(base, (n - k) as f64)
}

fn line_count(n: usize, d: f64) -> usize {
    let top = n as f64 * (1.0 - d);
    if top <= 0.0 {
        0
    } else {
        (libm::floor(top + 1e-9) as usize).min(n)
    }
}

/// `P = Σ_i C(n,i) c_i^(n-i) b_i` with `b_0 = 1` and
/// `b_i = 1 - Σ_{j<i} C(i,j) c_j^(i-j) b_j`.
///
/// The recursion amplifies rounding error by roughly a factor of two per
/// step, so beyond small `n` it runs in fixed point with enough fraction
/// bits to absorb the loss.
fn conover_sum(n: usize, c: &[f64]) -> f64 {
    let total = if n <= 30 {
        conover_sum_f64(n, c)
    } else {
        conover_sum_fixed(n, c, 2 * n + 128)
    };
    total.clamp(0.0, 1.0)
}

fn conover_sum_f64(n: usize, c: &[f64]) -> f64 {
    let mut b = vec![0.0; c.len()];
    b[0] = 1.0;
    for i in 1..c.len() {
        let mut s = 0.0;
        for j in 0..i {
            s += weighted(i, j, c[j]) * b[j];
        }
        b[i] = 1.0 - s;
    }
    (0..c.len()).map(|i| weighted(n, i, c[i]) * b[i]).sum()
}

fn conover_sum_fixed(n: usize, c: &[f64], frac_bits: usize) -> f64 {
    let one = BigInt::from(1u8) << frac_bits;
    let mul = |a: &BigInt, b: &BigInt| (a * b) >> frac_bits;
    let cf: Vec<BigInt> = c.iter().map(|&v| to_fixed(v, frac_bits)).collect();
    let mut b: Vec<BigInt> = Vec::with_capacity(c.len());
    b.push(one.clone());
    // pw[j] = c_j^(i-j) and row = C(i, ·) for the current i
    let mut pw: Vec<BigInt> = Vec::with_capacity(c.len());
    let mut row: Vec<BigInt> = vec![BigInt::from(1u8)];
    for i in 1..c.len() {
        for (j, p) in pw.iter_mut().enumerate() {
            *p = mul(p, &cf[j]);
        }
        pw.push(cf[i - 1].clone());
        let mut next = Vec::with_capacity(i + 1);
        next.push(BigInt::from(1u8));
        for j in 1..i {
            next.push(&row[j - 1] + &row[j]);
        }
        next.push(BigInt::from(1u8));
        row = next;
        let mut s = BigInt::from(0u8);
        for j in 0..i {
            s += &row[j] * mul(&pw[j], &b[j]);
        }
        b.push(&one - s);
    }
    let mut total = BigInt::from(0u8);
    for (i, (ci, bi)) in cf.iter().zip(&b).enumerate() {
        let term = mul(&fixed_pow(ci, n - i, frac_bits), bi);
        total += nat_binomial(n, i) * term;
    }
    from_fixed(&total, frac_bits)
}

fn to_fixed(x: f64, frac_bits: usize) -> BigInt {
    if x <= 0.0 {
        return BigInt::from(0u8);
    }
    let bits = x.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mantissa, exp) = if raw_exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), raw_exp - 1075)
    };
    let shift = frac_bits as i64 + exp;
    if shift >= 0 {
        BigInt::from(mantissa) << shift as usize
    } else {
        BigInt::from(mantissa) >> (-shift) as usize
    }
}

fn from_fixed(v: &BigInt, frac_bits: usize) -> f64 {
    let keep = 62usize.min(frac_bits);
    let top = i128::try_from(&(v >> (frac_bits - keep))).unwrap_or(if v.sign() == Sign::Minus {
        i128::MIN
    } else {
        i128::MAX
    });
    top as f64 / libm::pow(2.0, keep as f64)
}

fn fixed_pow(base: &BigInt, mut e: usize, frac_bits: usize) -> BigInt {
    let mut acc = BigInt::from(1u8) << frac_bits;
    let mut sq = base.clone();
    while e > 0 {
        if e & 1 == 1 {
            acc = (&acc * &sq) >> frac_bits;
        }
        e >>= 1;
        if e > 0 {
            sq = (&sq * &sq) >> frac_bits;
        }
    }
    acc
}

fn nat_binomial(n: usize, k: usize) -> BigInt {
    let k = k.min(n - k);
    let mut acc = BigInt::from(1u8);
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Exact `P(D⁻ ≥ d)` for `n` draws from the step CDF `h`.
pub fn critical_level_minus(h: &StepCdf, n: usize, d: f64) -> f64 {
    if n == 0 || d <= 0.0 {
        return 1.0;
    }
    if d > 1.0 {
        return 0.0;
    }
    let limits = h.jump_limits();
    let c: Vec<f64> = (0..=line_count(n, d))
        .map(|i| {
            let y = d + i as f64 / n as f64;
            // a line through a left limit keeps that value; otherwise it
            // takes the top of the jump it crosses
            let hit = limits.iter().copied().find(|&l| l >= y - LEVEL_TOLERANCE).unwrap_or(1.0);
            if (hit - y).abs() <= LEVEL_TOLERANCE {
                (1.0 - y).max(0.0)
            } else {
                1.0 - hit
            }
        })
        .collect();
    conover_sum(n, &c)
}

/// Exact `P(D⁺ ≥ d)` for `n` draws from the step CDF `h`.
pub fn critical_level_plus(h: &StepCdf, n: usize, d: f64) -> f64 {
    if n == 0 || d <= 0.0 {
        return 1.0;
    }
    if d > 1.0 {
        return 0.0;
    }
    let limits = h.jump_limits();
    let f: Vec<f64> = (0..=line_count(n, d))
        .map(|i| {
            let y = 1.0 - d - i as f64 / n as f64;
            // a line through a right limit keeps that value; otherwise it
            // takes the bottom of the jump it crosses
            let hit = limits.iter().copied().rev().find(|&l| l <= y + LEVEL_TOLERANCE).unwrap_or(0.0);
            if (hit - y).abs() <= LEVEL_TOLERANCE {
                y.max(0.0)
            } else {
                hit
            }
        })
        .collect();
    conover_sum(n, &f)
}

/// `P(D ≥ d) ≈ P(D⁺ ≥ d) + P(D⁻ ≥ d)`, clamped to 1.
pub fn two_sided_critical(h: &StepCdf, n: usize, d: f64) -> f64 {
    (critical_level_plus(h, n, d) + critical_level_minus(h, n, d)).min(1.0)
}

/// `(1/k) Σ |p_i - q_i|`.
pub fn mae(p: &[f64], q: &[f64]) -> Result<f64, KsError> {
    if p.len() != q.len() {
        return Err(KsError::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    if p.is_empty() {
        return Err(KsError::EmptySample);
    }
    for v in [p, q] {
        if (v.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
            return Err(KsError::NotNormalized);
        }
    }
    Ok(p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() / p.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsOutcome {
    pub n: u64,
    pub d: f64,
    pub d_minus: f64,
    pub d_plus: f64,
    pub p_minus: f64,
    pub p_plus: f64,
    pub p_two_sided: f64,
    pub rejected: bool,
    pub mae: f64,
}

/// Test observed outcome counts against a hypothesized pmf over the same
/// ordered outcomes.
pub fn ks_test(hypothesis: &[f64], counts: &[u64], alpha: f64) -> Result<KsOutcome, KsError> {
    if hypothesis.len() != counts.len() {
        return Err(KsError::LengthMismatch {
            left: hypothesis.len(),
            right: counts.len(),
        });
    }
    let points: Vec<f64> = (0..counts.len()).map(|i| i as f64).collect();
    let h = StepCdf::from_pmf(points.clone(), hypothesis)?;
    let s = StepCdf::from_counts(points, counts)?;
    let stats = ks_statistics(&s, &h)?;
    let n: u64 = counts.iter().sum();
    let p_minus = critical_level_minus(&h, n as usize, stats.d_minus);
    let p_plus = critical_level_plus(&h, n as usize, stats.d_plus);
    let p_two_sided = two_sided_critical(&h, n as usize, stats.d);
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    Ok(KsOutcome {
        n,
        d: stats.d,
        d_minus: stats.d_minus,
        d_plus: stats.d_plus,
        p_minus,
        p_plus,
        p_two_sided,
        rejected: p_two_sided < alpha,
        mae: mae(hypothesis, &empirical)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};
    use proptest::prelude::*;
    use rand::Rng;

    fn uniform(k: usize) -> StepCdf {
        StepCdf::from_pmf((1..=k).map(|i| i as f64).collect(), &vec![1.0 / k as f64; k]).unwrap()
    }

    /// Exact tail probabilities by dynamic programming over cumulative
    /// counts, one support point at a time.
    fn dp_tails(pmf: &[f64], n: usize, d: f64) -> (f64, f64) {
        let run = |hit: &dyn Fn(usize, f64) -> bool| {
            // prob[s]: P(cumulative count = s and no crossing so far)
            let mut prob = vec![0.0; n + 1];
            prob[0] = 1.0;
            let mut h = 0.0;
            let mut rest = 1.0;
            for &p in pmf {
                let mut next = vec![0.0; n + 1];
                let q = if rest > 0.0 { (p / rest).min(1.0) } else { 0.0 };
                for s in 0..=n {
                    if prob[s] == 0.0 {
                        continue;
                    }
                    let m = n - s;
                    for t in 0..=m {
                        let w = binomial(m, t) * libm::pow(q, t as f64) * libm::pow(1.0 - q, (m - t) as f64);
                        next[s + t] += prob[s] * w;
                    }
                }
                h += p;
                rest -= p;
                for (s, v) in next.iter_mut().enumerate() {
                    if hit(s, h) {
                        *v = 0.0;
                    }
                }
                prob = next;
            }
            1.0 - prob.iter().sum::<f64>()
        };
        let nf = n as f64;
        let minus = run(&|s, h| h - s as f64 / nf >= d - 1e-9);
        let plus = run(&|s, h| s as f64 / nf - h.min(1.0) >= d - 1e-9);
        (minus, plus)
    }

    fn random_pmf<R: Rng>(rng: &mut R) -> Vec<f64> {
        let k = rng.random_range(2..=7);
        let mut w: Vec<f64> = (0..k)
            .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.05..1.0) })
            .collect();
        if w.iter().all(|&v| v == 0.0) {
            w[0] = 1.0;
        }
        let t: f64 = w.iter().sum();
        w.iter().map(|v| v / t).collect()
    }

    fn cdf(pmf: &[f64]) -> StepCdf {
        StepCdf::from_pmf((0..pmf.len()).map(|i| i as f64).collect(), pmf).unwrap()
    }

    #[test]
    fn identical_cdfs_have_zero_distance() {
        let h = uniform(4);
        let s = StepCdf::from_counts(h.points().to_vec(), &[1, 1, 1, 1]).unwrap();
        let st = ks_statistics(&s, &h).unwrap();
        assert_eq!((st.d, st.d_minus, st.d_plus), (0.0, 0.0, 0.0));
    }

    #[test]
    fn mass_at_either_end() {
        let h = uniform(4);
        let low = StepCdf::from_counts(h.points().to_vec(), &[4, 0, 0, 0]).unwrap();
        let st = ks_statistics(&low, &h).unwrap();
        assert!((st.d_plus - 0.75).abs() < 1e-15);
        assert_eq!(st.d_minus, 0.0);
        let high = StepCdf::from_counts(h.points().to_vec(), &[0, 0, 0, 4]).unwrap();
        let st = ks_statistics(&high, &h).unwrap();
        assert!((st.d_minus - 0.75).abs() < 1e-15);
        assert_eq!(st.d, 0.75);
    }

    #[test]
    fn foreign_support_is_rejected() {
        let h = uniform(3);
        let s = StepCdf::from_counts(vec![1.0, 2.5, 3.0], &[1, 1, 1]).unwrap();
        assert_eq!(ks_statistics(&s, &h), Err(KsError::MismatchedSupport));
    }

    #[test]
    fn zero_distance_has_level_one() {
        let h = cdf(&[0.2, 0.5, 0.3]);
        for n in [1, 3, 10, 50] {
            assert_eq!(critical_level_minus(&h, n, 0.0), 1.0);
            assert_eq!(critical_level_plus(&h, n, 0.0), 1.0);
            assert_eq!(two_sided_critical(&h, n, 0.0), 1.0);
        }
    }

    #[test]
    fn matches_exact_dp_small_n() {
        let mut rng = substream(5, Stream::Field, 0);
        for _ in 0..200 {
            let pmf = random_pmf(&mut rng);
            let n = rng.random_range(1..=12);
            let h = cdf(&pmf);
            // observable statistic values sit on the lattice h_k - s/n
            let mut candidates = vec![0.0, 1.0, rng.random_range(0.0..1.0)];
            let mut acc = 0.0;
            for p in &pmf {
                acc += p;
                for s in 0..=n {
                    let v: f64 = acc - s as f64 / n as f64;
                    if v > 0.0 && v <= 1.0 {
                        candidates.push(v);
                    }
                }
            }
            for d in candidates {
                let (minus, plus) = dp_tails(&pmf, n, d);
                assert!((critical_level_minus(&h, n, d) - minus).abs() < 1e-9, "{pmf:?} n={n} d={d}");
                let d_up = 1.0 - d;
                let (_, plus_up) = dp_tails(&pmf, n, d_up);
                assert!((critical_level_plus(&h, n, d_up) - plus_up).abs() < 1e-9, "{pmf:?} n={n} d={d_up}");
                assert!((critical_level_plus(&h, n, d) - plus).abs() < 1e-9 || d == 0.0);
            }
        }
    }

    #[test]
    fn matches_exact_dp_large_n() {
        let mut rng = substream(6, Stream::Field, 0);
        for n in [40, 100, 250] {
            for _ in 0..5 {
                let pmf = random_pmf(&mut rng);
                let h = cdf(&pmf);
                for d in [0.02, 0.05, 0.1, 0.2] {
                    let (minus, plus) = dp_tails(&pmf, n, d);
                    let am = critical_level_minus(&h, n, d);
                    let ap = critical_level_plus(&h, n, d);
                    assert!((am - minus).abs() < 1e-6, "minus n={n} d={d}: {am} vs {minus}");
                    assert!((ap - plus).abs() < 1e-6, "plus n={n} d={d}: {ap} vs {plus}");
                }
            }
        }
    }

    #[test]
    fn fixed_point_agrees_with_f64_where_both_hold() {
        let mut rng = substream(7, Stream::Field, 0);
        for _ in 0..50 {
            let n = rng.random_range(1..=30);
            let c: Vec<f64> = {
                let mut v: Vec<f64> = (0..=rng.random_range(0..=n)).map(|_| rng.random_range(0.0..1.0)).collect();
                v.sort_by(|a, b| b.total_cmp(a));
                v
            };
            let a = conover_sum_f64(n, &c);
            let b = conover_sum_fixed(n, &c, 2 * n + 128);
            assert!((a - b).abs() < 1e-9 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn large_sample_stays_finite() {
        let h = cdf(&[0.1, 0.2, 0.3, 0.15, 0.1, 0.1, 0.05]);
        let p = critical_level_minus(&h, 1000, 0.03);
        let (exact, _) = dp_tails(&[0.1, 0.2, 0.3, 0.15, 0.1, 0.1, 0.05], 1000, 0.03);
        assert!((p - exact).abs() < 1e-6, "{p} vs {exact}");
    }

    #[test]
    fn fair_coin_against_monte_carlo() {
        let h = cdf(&[0.5, 0.5]);
        let mut rng = substream(8, Stream::Field, 0);
        let trials = 200_000;
        let (mut minus_hits, mut plus_hits) = (0, 0);
        for _ in 0..trials {
            let heads = (0..5).filter(|_| rng.random_bool(0.5)).count() as u64;
            let s = StepCdf::from_counts(vec![0.0, 1.0], &[heads, 5 - heads]).unwrap();
            let st = ks_statistics(&s, &h).unwrap();
            minus_hits += (st.d_minus >= 0.3 - 1e-12) as u32;
            plus_hits += (st.d_plus >= 0.3 - 1e-12) as u32;
        }
        let mc_minus = minus_hits as f64 / trials as f64;
        let mc_plus = plus_hits as f64 / trials as f64;
        assert!((critical_level_minus(&h, 5, 0.3) - mc_minus).abs() < 0.005);
        assert!((critical_level_plus(&h, 5, 0.3) - mc_plus).abs() < 0.005);
        // only two heads or fewer gives S(0) - 0.5 ≤ -0.1; D⁻ ≥ 0.3 needs S(0) ≤ 0.2
        assert!((critical_level_minus(&h, 5, 0.3) - 6.0 / 32.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_hypothesis_has_mirrored_levels() {
        let h = uniform(2);
        for n in [1, 4, 9, 20] {
            for d in [0.05, 0.25, 0.5, 0.75, 1.0] {
                assert!((critical_level_plus(&h, n, d) - critical_level_minus(&h, n, d)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn near_continuous_matches_classical_table() {
        let h = uniform(1000);
        let p = two_sided_critical(&h, 10, 0.409);
        assert!((p - 0.05).abs() < 0.01, "{p}");
    }

    #[test]
    fn mae_examples() {
        let p = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let q = [1.0 / 7.0; 7];
        assert!((mae(&p, &q).unwrap() - 12.0 / 49.0).abs() < 1e-15);
        assert_eq!(mae(&q, &q).unwrap(), 0.0);
        assert_eq!(mae(&[1.0], &[1.0]).unwrap(), 0.0);
        assert!(matches!(mae(&[1.0], &[0.5, 0.5]), Err(KsError::LengthMismatch { .. })));
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(30, 15), 155_117_520.0);
        assert!((binomial(40, 20) / 137_846_528_820.0 - 1.0).abs() < 1e-12);
        assert_eq!(binomial(3, 4), 0.0);
    }

    #[test]
    fn outcome_fields_are_consistent() {
        let out = ks_test(&[0.5, 0.3, 0.2], &[1, 1, 8], DEFAULT_ALPHA).unwrap();
        assert_eq!(out.n, 10);
        assert_eq!(out.d, out.d_minus.max(out.d_plus));
        assert!(out.p_two_sided <= out.p_minus + out.p_plus + 1e-12);
        assert!(out.rejected);
        let out = ks_test(&[0.5, 0.3, 0.2], &[5, 3, 2], DEFAULT_ALPHA).unwrap();
        assert_eq!(out.d, 0.0);
        assert!(!out.rejected);
        assert_eq!(ks_test(&[1.0], &[0], 0.05), Err(KsError::EmptySample));
    }

    proptest! {
        #[test]
        fn levels_are_bounded_and_monotone(
            w in proptest::collection::vec(0.0..1.0f64, 1..8),
            n in 1usize..60,
            a in 0.0..1.0f64,
            b in 0.0..1.0f64,
        ) {
            let total: f64 = w.iter().sum();
            prop_assume!(total > 1e-3);
            let pmf: Vec<f64> = w.iter().map(|v| v / total).collect();
            let h = cdf(&pmf);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            for f in [critical_level_minus, critical_level_plus] {
                let p_lo = f(&h, n, lo);
                let p_hi = f(&h, n, hi);
                prop_assert!((0.0..=1.0).contains(&p_lo));
                prop_assert!(p_hi <= p_lo + 1e-9);
            }
        }

        #[test]
        fn d_is_the_larger_side(counts in proptest::collection::vec(0u64..20, 7)) {
            prop_assume!(counts.iter().sum::<u64>() > 0);
            let out = ks_test(&[1.0 / 7.0; 7], &counts, 0.05).unwrap();
            prop_assert_eq!(out.d, out.d_minus.max(out.d_plus));
            prop_assert!((0.0..=1.0).contains(&out.d));
        }
    }
}
