use alloc::vec::Vec;
use rand::Rng;

/// Softmax of `q / temperature`, shifted by the maximum so large values do
/// not overflow.
pub fn boltzmann_probabilities(q: &[f64], temperature: f64) -> Vec<f64> {
    let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = q.iter().map(|v| libm::exp((v - max) / temperature)).collect();
    let total: f64 = p.iter().sum();
    for v in &mut p {
        *v /= total;
    }
    p
}

/// Index drawn from a discrete distribution.
pub fn sample_index<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, v) in p.iter().enumerate() {
        acc += v;
        if u < acc {
            return i;
        }
    }
    // rounding left the total slightly under 1
    p.iter().rposition(|&v| v > 0.0).unwrap_or(0)
}

pub fn boltzmann_sample<R: Rng + ?Sized>(q: &[f64], temperature: f64, rng: &mut R) -> usize {
    sample_index(&boltzmann_probabilities(q, temperature), rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};
    use proptest::prelude::*;
    use std::vec;

    #[test]
    fn equal_values_are_uniform() {
        let p = boltzmann_probabilities(&[2.0; 7], 3.0);
        for v in p {
            assert!((v - 1.0 / 7.0).abs() < 1e-15);
        }
    }

    #[test]
    fn two_action_fixture() {
        let p = boltzmann_probabilities(&[1.0, 0.0], 1.0);
        assert!((p[0] - 0.7311).abs() < 1e-4);
        assert!((p[1] - 0.2689).abs() < 1e-4);
    }

    #[test]
    fn low_temperature_is_greedy() {
        let p = boltzmann_probabilities(&[10.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 0.01);
        assert!(p[0] > 0.999_999);
    }

    #[test]
    fn huge_values_do_not_overflow() {
        let p = boltzmann_probabilities(&[1e6, 1e6 - 1.0], 1.0);
        assert!(p.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn sampling_frequencies() {
        let mut rng = substream(2, Stream::Exploration, 0);
        let q = [1.0, 0.0];
        let n = 200_000;
        let hits = (0..n).filter(|_| boltzmann_sample(&q, 1.0, &mut rng) == 0).count();
        assert!((hits as f64 / n as f64 - 0.731_058_6).abs() < 0.005);
    }

    proptest! {
        #[test]
        fn normalized(q in proptest::collection::vec(-1e3..1e3f64, 7), t in 1e-3..1e3f64) {
            let p = boltzmann_probabilities(&q, t);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn monotone(q in proptest::collection::vec(-50.0..50.0f64, 7), t in 0.1..100.0f64) {
            let p = boltzmann_probabilities(&q, t);
            for i in 0..7 {
                for j in 0..7 {
                    if q[i] > q[j] && p[j] > 0.0 {
                        prop_assert!(p[i] >= p[j]);
                        if (q[i] - q[j]) / t < 30.0 {
                            prop_assert!(p[i] > p[j]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn high_temperature_flattens() {
        let q = vec![5.0, -3.0, 1.0, 0.0, 2.0, 9.0, -7.0];
        let mut last = f64::INFINITY;
        for t in [1.0, 10.0, 100.0, 1e4, 1e6] {
            let p = boltzmann_probabilities(&q, t);
            let spread = p.iter().map(|v| (v - 1.0 / 7.0).abs()).fold(0.0, f64::max);
            assert!(spread < last);
            last = spread;
        }
        assert!(last < 1e-5);
    }
}
