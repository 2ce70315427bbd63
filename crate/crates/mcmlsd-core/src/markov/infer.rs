//! Exact inference on the two-state chain: MAP decoding by dynamic
//! programming and smoothing marginals by forward-backward.

use alloc::vec::Vec;

use super::{
    log_likelihood, LikelihoodModel, LineObservationSequence, State, StateSequence, TransitionModel,
};
use crate::math;

const STATES: [State; 2] = [State::Off, State::On];

/// Pairs `(log p(y_i | OFF), log p(y_i | ON))` for a sample slice.
pub(super) fn log_likelihood_table(
    seq: &LineObservationSequence,
    lm: &LikelihoodModel,
) -> Vec<[f64; 2]> {
    seq.samples
        .iter()
        .map(|s| {
            [
                log_likelihood(s, State::Off, lm),
                log_likelihood(s, State::On, lm),
            ]
        })
        .collect()
}

/// MAP state sequence via the minimum-cost recursion over negative log
/// probabilities, with a backtrace table. Cost ties break toward OFF.
pub fn viterbi(
    seq: &LineObservationSequence,
    lm: &LikelihoodModel,
    tm: &TransitionModel,
) -> StateSequence {
    let ll = log_likelihood_table(seq, lm);
    viterbi_from_table(&ll, tm)
}

pub(super) fn viterbi_from_table(ll: &[[f64; 2]], tm: &TransitionModel) -> StateSequence {
    let n = ll.len();
    assert!(n >= 1, "observation sequence must be non-empty");

    let log_trans = |j: State, k: State| math::ln(tm.transition(j, k));
    let mut cost = [
        -(math::ln(tm.prior(State::Off)) + ll[0][0]),
        -(math::ln(tm.prior(State::On)) + ll[0][1]),
    ];
    // backtrace[i][k] = best predecessor state for state k at position i
    let mut backtrace: Vec<[u8; 2]> = Vec::with_capacity(n);
    backtrace.push([0, 0]);

    for item in ll.iter().skip(1) {
        let mut next = [0.0f64; 2];
        let mut back = [0u8; 2];
        for (ki, &k) in STATES.iter().enumerate() {
            let from_off = cost[0] - log_trans(State::Off, k);
            let from_on = cost[1] - log_trans(State::On, k);
            // OFF wins ties
            if from_off <= from_on {
                next[ki] = from_off - item[ki];
                back[ki] = 0;
            } else {
                next[ki] = from_on - item[ki];
                back[ki] = 1;
            }
        }
        cost = next;
        backtrace.push(back);
    }

    let mut state = if cost[0] <= cost[1] { 0u8 } else { 1u8 };
    let log_prob = -cost[state as usize];
    let mut states = alloc::vec![State::Off; n];
    for i in (0..n).rev() {
        states[i] = STATES[state as usize];
        state = backtrace[i][state as usize];
    }
    StateSequence { states, log_prob }
}

/// Smoothing marginals `p(x_i = ON | y_1..y_N)`, exactly, with per-step
/// normalization for stability.
pub fn forward_backward(
    seq: &LineObservationSequence,
    lm: &LikelihoodModel,
    tm: &TransitionModel,
) -> Vec<f64> {
    let ll = log_likelihood_table(seq, lm);
    forward_backward_from_table(&ll, tm).0
}

/// Returns the ON marginals and the log evidence `log p(y_1..y_N)` up to
/// the likelihood proportionality constant.
pub(super) fn forward_backward_from_table(
    ll: &[[f64; 2]],
    tm: &TransitionModel,
) -> (Vec<f64>, f64) {
    let n = ll.len();
    assert!(n >= 1);

    // Shift each sample's log-likelihood pair by its max before
    // exponentiating; the shifts accumulate into the evidence.
    let mut log_evidence = 0.0;
    let lik = |i: usize, k: usize, shift: f64| math::exp(ll[i][k] - shift);

    let a = [
        [
            tm.transition(State::Off, State::Off),
            tm.transition(State::Off, State::On),
        ],
        [
            tm.transition(State::On, State::Off),
            tm.transition(State::On, State::On),
        ],
    ];

    let mut alpha: Vec<[f64; 2]> = Vec::with_capacity(n);
    let mut scales: Vec<f64> = Vec::with_capacity(n);
    let shift0 = ll[0][0].max(ll[0][1]);
    log_evidence += shift0;
    let mut cur = [
        tm.prior(State::Off) * lik(0, 0, shift0),
        tm.prior(State::On) * lik(0, 1, shift0),
    ];
    let c0 = cur[0] + cur[1];
    cur[0] /= c0;
    cur[1] /= c0;
    log_evidence += math::ln(c0);
    alpha.push(cur);
    scales.push(c0);

    for i in 1..n {
        let shift = ll[i][0].max(ll[i][1]);
        log_evidence += shift;
        let prev = alpha[i - 1];
        let mut next = [0.0f64; 2];
        for k in 0..2 {
            next[k] = (prev[0] * a[0][k] + prev[1] * a[1][k]) * lik(i, k, shift);
        }
        let c = next[0] + next[1];
        next[0] /= c;
        next[1] /= c;
        log_evidence += math::ln(c);
        alpha.push(next);
        scales.push(c);
    }

    // Backward pass under the same per-sample shifts and scales.
    let mut marginals = alloc::vec![0.0f64; n];
    let mut beta = [1.0f64, 1.0];
    marginals[n - 1] = alpha[n - 1][1];
    for i in (0..n - 1).rev() {
        let shift = ll[i + 1][0].max(ll[i + 1][1]);
        let mut next = [0.0f64; 2];
        for j in 0..2 {
            next[j] = (a[j][0] * lik(i + 1, 0, shift) * beta[0]
                + a[j][1] * lik(i + 1, 1, shift) * beta[1])
                / scales[i + 1];
        }
        beta = next;
        let denom = alpha[i][0] * beta[0] + alpha[i][1] * beta[1];
        marginals[i] = alpha[i][1] * beta[1] / denom;
    }
    (marginals, log_evidence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Line;
    use crate::markov::ObservationSample;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::vec::Vec;

    fn seq_of(samples: Vec<ObservationSample>) -> LineObservationSequence {
        LineObservationSequence {
            line: Line::new(0.0, 0.0),
            samples,
        }
    }

    fn empty_sample(t: f64) -> ObservationSample {
        ObservationSample {
            t,
            d: 0.0,
            has_edge: false,
            theta_dev: None,
        }
    }

    fn edge_sample(t: f64, d: f64, dev: f64) -> ObservationSample {
        ObservationSample {
            t,
            d,
            has_edge: true,
            theta_dev: Some(dev),
        }
    }

    // Brute-force joint over all 2^N labellings from a likelihood table.
    fn enumerate_best(ll: &[[f64; 2]], tm: &TransitionModel) -> (Vec<State>, f64) {
        let n = ll.len();
        let mut best = (Vec::new(), f64::NEG_INFINITY);
        for mask in 0u32..(1 << n) {
            let states: Vec<State> = (0..n)
                .map(|i| {
                    if mask & (1 << i) != 0 {
                        State::On
                    } else {
                        State::Off
                    }
                })
                .collect();
            let mut lp = tm.prior(states[0]).ln() + ll[0][states[0] as usize];
            for i in 1..n {
                lp += tm.transition(states[i - 1], states[i]).ln() + ll[i][states[i] as usize];
            }
            if lp > best.1 {
                best = (states, lp);
            }
        }
        best
    }

    fn enumerate_marginals(ll: &[[f64; 2]], tm: &TransitionModel) -> Vec<f64> {
        let n = ll.len();
        let mut z = 0.0;
        let mut on_mass = std::vec![0.0f64; n];
        for mask in 0u32..(1 << n) {
            let states: Vec<State> = (0..n)
                .map(|i| {
                    if mask & (1 << i) != 0 {
                        State::On
                    } else {
                        State::Off
                    }
                })
                .collect();
            let mut lp = tm.prior(states[0]).ln() + ll[0][states[0] as usize];
            for i in 1..n {
                lp += tm.transition(states[i - 1], states[i]).ln() + ll[i][states[i] as usize];
            }
            let p = lp.exp();
            z += p;
            for i in 0..n {
                if states[i] == State::On {
                    on_mass[i] += p;
                }
            }
        }
        on_mass.iter().map(|&m| m / z).collect()
    }

    fn random_table(rng: &mut ChaCha8Rng, n: usize) -> Vec<[f64; 2]> {
        (0..n)
            .map(|_| [rng.random_range(-4.0..0.0), rng.random_range(-4.0..0.0)])
            .collect()
    }

    fn random_tm(rng: &mut ChaCha8Rng) -> TransitionModel {
        TransitionModel {
            p_on: rng.random_range(0.05..0.95),
            p_on_given_off: rng.random_range(0.001..0.45),
            p_off_given_on: rng.random_range(0.001..0.45),
        }
    }

    #[test]
    fn single_empty_sample_decodes_off() {
        let seq = seq_of(std::vec![empty_sample(0.0)]);
        let ss = viterbi(
            &seq,
            &LikelihoodModel::default(),
            &TransitionModel::default(),
        );
        assert_eq!(ss.states, std::vec![State::Off]);
    }

    #[test]
    fn viterbi_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.random_range(1..=16);
            let ll = random_table(&mut rng, n);
            let tm = random_tm(&mut rng);
            let got = viterbi_from_table(&ll, &tm);
            let (_, best_lp) = enumerate_best(&ll, &tm);
            assert!(
                (got.log_prob - best_lp).abs() < 1e-12,
                "dp {} vs enum {}",
                got.log_prob,
                best_lp
            );
        }
    }

    #[test]
    fn interior_run_is_recovered() {
        let mut samples = Vec::new();
        let mut t = 0.0;
        for _ in 0..200 {
            samples.push(empty_sample(t));
            t += 1.0;
        }
        for _ in 0..200 {
            samples.push(edge_sample(t, 0.3, 0.5));
            t += 1.0;
        }
        for _ in 0..200 {
            samples.push(empty_sample(t));
            t += 1.0;
        }
        let seq = seq_of(samples);
        let ss = viterbi(
            &seq,
            &LikelihoodModel::default(),
            &TransitionModel::default(),
        );
        // one maximal interior ON run
        let mut runs = 0;
        let mut prev = State::Off;
        for &s in &ss.states {
            if s == State::On && prev == State::Off {
                runs += 1;
            }
            prev = s;
        }
        assert_eq!(runs, 1);
        assert_eq!(ss.states[0], State::Off);
        assert_eq!(ss.states[599], State::Off);
        assert_eq!(ss.states[300], State::On);
    }

    #[test]
    fn forward_backward_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let n = rng.random_range(1..=12);
            let ll = random_table(&mut rng, n);
            let tm = random_tm(&mut rng);
            let (got, _) = forward_backward_from_table(&ll, &tm);
            let want = enumerate_marginals(&ll, &tm);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-10, "{g} vs {w}");
            }
        }
    }

    #[test]
    fn uniform_likelihood_recovers_prior() {
        let tm = TransitionModel::default();
        let ll = std::vec![[0.0, 0.0]; 1];
        let (m, _) = forward_backward_from_table(&ll, &tm);
        assert!((m[0] - tm.p_on).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn marginals_are_probabilities(seed in 0u64..100, n in 1usize..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ll = random_table(&mut rng, n);
            let tm = random_tm(&mut rng);
            let (m, _) = forward_backward_from_table(&ll, &tm);
            for &v in &m {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
