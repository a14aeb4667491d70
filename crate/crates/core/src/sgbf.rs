//! Syndrome-guided bit flipping.
//!
//! When LNMS stops with a nonzero syndrome, each bit gets a reliability
//! `|L(q_i)| / (1 + max(e_i, 1))`, where `e_i` counts the unsatisfied checks
//! touching bit `i`. The `T` least reliable positions each yield one
//! candidate: the channel LLRs with that single sign flipped, re-decoded from
//! scratch. The first candidate (in reliability order) with the smallest
//! syndrome weight wins, and is adopted only if that weight is zero.

use crate::error::{Error, Result};
use crate::gf2::{BinaryMatrix, BitVector};
use crate::lnms::{DecodeOutcome, LnmsDecoder};

/// How many candidates are decoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateMode {
    /// Stop at the first zero-weight candidate.
    #[default]
    Lazy,
    /// Decode all `T` candidates before choosing.
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SgbfConfig {
    /// Flip-set size `T`.
    pub flip_set_size: usize,
    pub mode: CandidateMode,
}

impl SgbfConfig {
    pub fn new(flip_set_size: usize) -> Self {
        Self {
            flip_set_size,
            mode: CandidateMode::Lazy,
        }
    }

    pub fn strict(flip_set_size: usize) -> Self {
        Self {
            flip_set_size,
            mode: CandidateMode::Strict,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityReport {
    pub failure_counts: Vec<usize>,
    pub reliabilities: Vec<f64>,
    /// Positions to flip, least reliable first.
    pub flip_positions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgbfOutcome {
    pub final_outcome: DecodeOutcome,
    pub rescued: bool,
    /// Flip position of the adopted candidate.
    pub chosen_flip: Option<usize>,
    /// Syndrome weight of each decoded candidate, in flip order. Lazy mode
    /// stops after the first zero, so the vector may be shorter than `T`.
    pub candidate_weights: Vec<usize>,
    pub report: ReliabilityReport,
}

/// Number of unsatisfied checks each variable participates in.
pub fn failure_counts(h: &BinaryMatrix, syndrome: &BitVector) -> Result<Vec<usize>> {
    if syndrome.len() != h.rows() {
        return Err(Error::DimensionMismatch {
            what: "syndrome length",
            expected: h.rows(),
            found: syndrome.len(),
        });
    }
    Ok((0..h.cols())
        .map(|i| h.col(i).iter().filter(|&&j| syndrome.get(j)).count())
        .collect())
}

/// `|L(q_i)| / (1 + max(e_i, 1))`.
pub fn reliability(posterior_llr: &[f64], failure_counts: &[usize]) -> Result<Vec<f64>> {
    if posterior_llr.len() != failure_counts.len() {
        return Err(Error::DimensionMismatch {
            what: "failure count length",
            expected: posterior_llr.len(),
            found: failure_counts.len(),
        });
    }
    Ok(posterior_llr
        .iter()
        .zip(failure_counts)
        .map(|(l, &e)| l.abs() / (1.0 + e.max(1) as f64))
        .collect())
}

/// Indices of the `t` smallest reliabilities, ascending, ties by index.
pub fn select_flip_set(reliabilities: &[f64], t: usize) -> Result<Vec<usize>> {
    if t > reliabilities.len() {
        return Err(Error::InvalidParams(format!(
            "flip set size {t} exceeds block length {}",
            reliabilities.len()
        )));
    }
    let mut order: Vec<usize> = (0..reliabilities.len()).collect();
    order.sort_by(|&a, &b| {
        reliabilities[a]
            .total_cmp(&reliabilities[b])
            .then(a.cmp(&b))
    });
    order.truncate(t);
    Ok(order)
}

/// Ranks the bits of a failed decode.
pub fn rank_bits(
    h: &BinaryMatrix,
    original: &DecodeOutcome,
    t: usize,
) -> Result<ReliabilityReport> {
    let failure_counts = failure_counts(h, &original.syndrome)?;
    let reliabilities = reliability(&original.posterior_llr, &failure_counts)?;
    let flip_positions = select_flip_set(&reliabilities, t)?;
    Ok(ReliabilityReport {
        failure_counts,
        reliabilities,
        flip_positions,
    })
}

/// Post-processes a failed LNMS decode.
///
/// `decoder` must be the decoder that produced `original`, so candidates get
/// the same schedule and iteration budget.
pub fn run_sgbf(
    original: &DecodeOutcome,
    channel_llr: &[f64],
    h: &BinaryMatrix,
    decoder: &LnmsDecoder,
    config: &SgbfConfig,
) -> Result<SgbfOutcome> {
    if original.syndrome_weight == 0 {
        return Err(Error::InvalidInput(
            "bit flipping requested for a frame that already decoded".into(),
        ));
    }
    if config.flip_set_size == 0 {
        return Err(Error::InvalidParams(
            "flip set size must be at least 1".into(),
        ));
    }
    if channel_llr.len() != h.cols() {
        return Err(Error::DimensionMismatch {
            what: "channel LLR length",
            expected: h.cols(),
            found: channel_llr.len(),
        });
    }
    let report = rank_bits(h, original, config.flip_set_size)?;

    let mut candidate = channel_llr.to_vec();
    let mut weights = Vec::with_capacity(config.flip_set_size);
    let mut best: Option<(usize, DecodeOutcome)> = None;
    for (t, &pos) in report.flip_positions.iter().enumerate() {
        candidate[pos] = -channel_llr[pos];
        let out = decoder.decode(&candidate)?;
        candidate[pos] = channel_llr[pos];
        weights.push(out.syndrome_weight);
        if best
            .as_ref()
            .is_none_or(|(_, b)| out.syndrome_weight < b.syndrome_weight)
        {
            let done = out.syndrome_weight == 0 && config.mode == CandidateMode::Lazy;
            best = Some((t, out));
            if done {
                break;
            }
        }
    }

    match best {
        Some((t, out)) if out.syndrome_weight == 0 => Ok(SgbfOutcome {
            final_outcome: out,
            rescued: true,
            chosen_flip: Some(report.flip_positions[t]),
            candidate_weights: weights,
            report,
        }),
        _ => Ok(SgbfOutcome {
            final_outcome: original.clone(),
            rescued: false,
            chosen_flip: None,
            candidate_weights: weights,
            report,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{llr, modulate};
    use crate::code::FdpcCode;
    use crate::lnms::DecoderConfig;
    use crate::schedule::schedule_for;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn two_row() -> BinaryMatrix {
        BinaryMatrix::from_dense(&[vec![1, 1, 0], vec![0, 1, 1]]).unwrap()
    }

    #[test]
    fn failure_count_examples() {
        let h = two_row();
        assert_eq!(
            failure_counts(&h, &BitVector::zeros(2)).unwrap(),
            vec![0, 0, 0]
        );
        let s = BitVector::from_bits(vec![0, 1]).unwrap();
        assert_eq!(failure_counts(&h, &s).unwrap(), vec![0, 1, 1]);
        assert_eq!(
            failure_counts(&h, &BitVector::ones(2)).unwrap(),
            h.col_weights()
        );
        assert!(failure_counts(&h, &BitVector::ones(3)).is_err());
    }

    #[test]
    fn reliability_examples() {
        assert_eq!(reliability(&[3.0], &[2]).unwrap(), vec![1.0]);
        assert_eq!(reliability(&[2.0], &[0]).unwrap(), vec![1.0]);
        assert_eq!(
            reliability(&[2.0, -1.0, 3.0], &[0, 1, 1]).unwrap(),
            vec![1.0, 0.5, 1.5]
        );
        assert!(reliability(&[1.0], &[]).is_err());
    }

    #[test]
    fn flip_set_examples() {
        assert_eq!(select_flip_set(&[1.0, 0.5, 1.5], 2).unwrap(), vec![1, 0]);
        assert_eq!(select_flip_set(&[0.7; 5], 3).unwrap(), vec![0, 1, 2]);
        let mut all = select_flip_set(&[0.3, 0.1, 0.2, 0.9], 4).unwrap();
        assert_eq!(all, vec![1, 2, 0, 3]);
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2, 3]);
        assert!(select_flip_set(&[1.0], 2).is_err());
    }

    struct Fixture {
        code: FdpcCode,
        decoder: LnmsDecoder,
    }

    fn fixture() -> Fixture {
        let code = FdpcCode::for_size(256, 192, 1, None).unwrap();
        let schedule = schedule_for(code.h(), None).unwrap();
        let decoder = LnmsDecoder::new(code.h(), DecoderConfig::new(0.75, 5, schedule)).unwrap();
        Fixture { code, decoder }
    }

    // Noisy frames that LNMS fails on, with their transmitted codewords.
    fn failing_frames(
        f: &Fixture,
        count: usize,
        seed: u64,
    ) -> Vec<(BitVector, Vec<f64>, DecodeOutcome)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma2: f64 = 0.22;
        let mut frames = Vec::new();
        while frames.len() < count {
            let msg = BitVector::from_bools((0..f.code.k()).map(|_| rng.random_bool(0.5)));
            let c = f.code.encode(&msg).unwrap();
            let y: Vec<f64> = modulate(&c)
                .iter()
                .map(|x| x + sigma2.sqrt() * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let l = llr(&y, sigma2).unwrap();
            let out = f.decoder.decode(&l).unwrap();
            if !out.converged {
                frames.push((c, l, out));
            }
        }
        frames
    }

    #[test]
    fn rejects_converged_input() {
        let f = fixture();
        let out = f.decoder.decode(&vec![3.0; 256]).unwrap();
        assert!(out.converged);
        let err = run_sgbf(
            &out,
            &vec![3.0; 256],
            f.code.h(),
            &f.decoder,
            &SgbfConfig::new(4),
        );
        assert!(err.is_err());
    }

    #[test]
    fn outcome_is_original_or_valid_codeword() {
        let f = fixture();
        for (_, l, out) in failing_frames(&f, 30, 21) {
            let res = run_sgbf(&out, &l, f.code.h(), &f.decoder, &SgbfConfig::new(32)).unwrap();
            if res.rescued {
                assert_eq!(res.final_outcome.syndrome_weight, 0);
                assert!(f
                    .code
                    .h()
                    .mat_vec(&res.final_outcome.hard_decisions)
                    .unwrap()
                    .is_zero());
                assert!(res.chosen_flip.is_some());
            } else {
                assert_eq!(res.final_outcome, out);
                assert_eq!(res.candidate_weights.len(), 32);
            }
            assert!(res.report.flip_positions.windows(2).all(|w| {
                let (a, b) = (
                    res.report.reliabilities[w[0]],
                    res.report.reliabilities[w[1]],
                );
                a < b || (a == b && w[0] < w[1])
            }));
        }
    }

    #[test]
    fn lazy_and_strict_pick_the_same_candidate() {
        let f = fixture();
        for (_, l, out) in failing_frames(&f, 30, 22) {
            let lazy = run_sgbf(&out, &l, f.code.h(), &f.decoder, &SgbfConfig::new(64)).unwrap();
            let strict =
                run_sgbf(&out, &l, f.code.h(), &f.decoder, &SgbfConfig::strict(64)).unwrap();
            assert_eq!(lazy.final_outcome, strict.final_outcome);
            assert_eq!(lazy.chosen_flip, strict.chosen_flip);
            assert_eq!(strict.candidate_weights.len(), 64);
            assert_eq!(
                lazy.candidate_weights[..],
                strict.candidate_weights[..lazy.candidate_weights.len()]
            );
        }
    }

    #[test]
    fn candidates_do_not_interact() {
        let f = fixture();
        let (_, l, out) = failing_frames(&f, 1, 23).remove(0);
        let strict = run_sgbf(&out, &l, f.code.h(), &f.decoder, &SgbfConfig::strict(16)).unwrap();
        for (t, &pos) in strict.report.flip_positions.iter().enumerate() {
            let mut cand = l.clone();
            cand[pos] = -cand[pos];
            let alone = f.decoder.decode(&cand).unwrap();
            assert_eq!(alone.syndrome_weight, strict.candidate_weights[t]);
        }
    }

    #[test]
    fn single_sign_error_is_rescued() {
        // One wrong channel sign in the least reliable spot, all other LLRs
        // confident: LNMS can fail on it, and flipping it recovers exactly.
        let f = fixture();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut rescued = 0;
        let mut failed = 0;
        for _ in 0..200 {
            let msg = BitVector::from_bools((0..f.code.k()).map(|_| rng.random_bool(0.5)));
            let c = f.code.encode(&msg).unwrap();
            let mut l: Vec<f64> = modulate(&c)
                .iter()
                .map(|x| 2.0 * x * (1.0 + rng.random::<f64>()))
                .collect();
            let pos = rng.random_range(0..f.code.n());
            l[pos] = -l[pos] * 3.0;
            let out = f.decoder.decode(&l).unwrap();
            if out.converged {
                continue;
            }
            failed += 1;
            let res = run_sgbf(&out, &l, f.code.h(), &f.decoder, &SgbfConfig::new(256)).unwrap();
            if res.report.flip_positions.contains(&pos) {
                assert!(res.rescued);
                assert_eq!(res.final_outcome.syndrome_weight, 0);
                if res.final_outcome.hard_decisions == c {
                    rescued += 1;
                }
            }
        }
        assert!(failed == 0 || rescued > 0);
    }

    #[test]
    fn t_one_retains_original_when_candidate_fails() {
        let f = fixture();
        for (_, l, out) in failing_frames(&f, 20, 24) {
            let res = run_sgbf(&out, &l, f.code.h(), &f.decoder, &SgbfConfig::new(1)).unwrap();
            assert_eq!(res.candidate_weights.len(), 1);
            if res.candidate_weights[0] == 0 {
                assert!(res.rescued);
            } else {
                assert!(!res.rescued);
                assert_eq!(res.final_outcome, out);
            }
        }
    }

    #[test]
    fn rescue_sets_grow_with_t() {
        let f = fixture();
        for (_, l, out) in failing_frames(&f, 25, 25) {
            let mut prev: Option<SgbfOutcome> = None;
            for t in [4, 8, 16, 32, 64, 128] {
                let res = run_sgbf(&out, &l, f.code.h(), &f.decoder, &SgbfConfig::new(t)).unwrap();
                if let Some(p) = &prev {
                    if p.rescued {
                        assert!(res.rescued);
                        assert_eq!(res.final_outcome, p.final_outcome);
                    }
                }
                prev = Some(res);
            }
        }
    }
}
