//! FDPC parity-check matrix construction and systematic encoding.
//!
//! A base matrix has `2t` rows and weight-2 columns whose two ones sit an odd
//! number of rows apart. The full parity-check matrix replaces the leading
//! `m_size = 2t·(num_per + 1)` columns with a lower-bidiagonal block and
//! stacks the remaining base columns with `num_per` random column
//! permutations of themselves:
//!
//! ```text
//!     [ A | C        ]
//! H = [   | π_1(C)   ]
//!     [   | ...      ]
//!     [   | π_np(C)  ]
//! ```
//!
//! Data columns are then punctured (highest index first) down to the target
//! block length. Because `A` is bidiagonal, parity bits follow from a running
//! XOR of the data syndrome.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{BinaryMatrix, BitVector};

/// Which base matrix feeds the construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseOrder {
    /// All `t²` odd-gap weight-2 columns, grouped by increasing gap.
    BaseT1,
    /// `t(t+1)/2` columns chosen to avoid short cycles where possible.
    BaseT2,
}

impl BaseOrder {
    /// Number of columns of the base matrix for a given `t`.
    pub fn base_width(self, t: usize) -> usize {
        match self {
            BaseOrder::BaseT1 => t * t,
            BaseOrder::BaseT2 => t * (t + 1) / 2,
        }
    }
}

impl std::str::FromStr for BaseOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base_t1" | "t1" => Ok(BaseOrder::BaseT1),
            "base_t2" | "t2" => Ok(BaseOrder::BaseT2),
            other => Err(Error::InvalidParams(format!(
                "unknown base order {other:?} (expected base_t1 or base_t2)"
            ))),
        }
    }
}

impl std::fmt::Display for BaseOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BaseOrder::BaseT1 => "base_t1",
            BaseOrder::BaseT2 => "base_t2",
        })
    }
}

/// Construction parameters of an FDPC code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FdpcParams {
    pub t: usize,
    pub num_per: usize,
    pub n: usize,
    pub k: usize,
    pub base_order: BaseOrder,
    pub perm_seed: u64,
}

impl FdpcParams {
    /// Number of parity checks `2t·(num_per + 1)`.
    pub fn m_size(&self) -> usize {
        2 * self.t * (self.num_per + 1)
    }

    pub fn m(&self) -> usize {
        self.n.saturating_sub(self.k)
    }

    pub fn base_width(&self) -> usize {
        self.base_order.base_width(self.t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t < 2 || !self.t.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!(
                "t must be an even integer >= 2, got {}",
                self.t
            )));
        }
        if self.k == 0 || self.k >= self.n {
            return Err(Error::InvalidParams(format!(
                "need 0 < K < N, got N={} K={}",
                self.n, self.k
            )));
        }
        if self.m() != self.m_size() {
            return Err(Error::Infeasible(format!(
                "N-K = {} but 2t(num_per+1) = {} for t={} num_per={}",
                self.m(),
                self.m_size(),
                self.t,
                self.num_per
            )));
        }
        if self.n > self.base_width() {
            return Err(Error::Infeasible(format!(
                "N = {} exceeds the {} width {} for t={}",
                self.n,
                self.base_order,
                self.base_width(),
                self.t
            )));
        }
        Ok(())
    }

    /// Picks `(t, num_per, base_order)` for an `(N, K)` pair.
    ///
    /// The smallest even `t` with `2t·(num_per+1) = N−K` whose base is wide
    /// enough wins; for that `t`, `base_t2` is preferred when its width
    /// suffices. `base_order` restricts the search to one base.
    pub fn solve(
        n: usize,
        k: usize,
        perm_seed: u64,
        base_order: Option<BaseOrder>,
    ) -> Result<Self> {
        if k == 0 || k >= n {
            return Err(Error::Infeasible(format!(
                "need 0 < K < N, got N={n} K={k}"
            )));
        }
        let m = n - k;
        if !m.is_multiple_of(4) {
            return Err(Error::Infeasible(format!(
                "N-K = {m} is not of the form 2t(num_per+1) with t even"
            )));
        }
        let half = m / 2;
        let orders: &[BaseOrder] = match base_order {
            Some(BaseOrder::BaseT1) => &[BaseOrder::BaseT1],
            Some(BaseOrder::BaseT2) => &[BaseOrder::BaseT2],
            None => &[BaseOrder::BaseT2, BaseOrder::BaseT1],
        };
        for t in (2..=half).step_by(2) {
            if !half.is_multiple_of(t) {
                continue;
            }
            for &order in orders {
                if order.base_width(t) >= n {
                    let params = FdpcParams {
                        t,
                        num_per: half / t - 1,
                        n,
                        k,
                        base_order: order,
                        perm_seed,
                    };
                    log::info!(
                        "FDPC({n},{k}): t={t} num_per={} {order} (base width {})",
                        params.num_per,
                        order.base_width(t)
                    );
                    return Ok(params);
                }
            }
        }
        Err(Error::Infeasible(format!(
            "no even t with 2t(num_per+1) = {m} has a base wide enough for N={n}"
        )))
    }
}

/// Base matrix with all `t²` weight-2 columns of length `2t` whose ones are
/// an odd distance apart, grouped by gap `d = 1, 3, …, 2t−1`.
pub fn build_base_t1(t: usize) -> Result<BinaryMatrix> {
    check_t(t)?;
    let rows = 2 * t;
    let cols: Vec<Vec<usize>> = (1..rows)
        .step_by(2)
        .flat_map(|d| (0..rows - d).map(move |r| vec![r, r + d]))
        .collect();
    BinaryMatrix::from_col_supports(rows, cols.len(), cols)
}

/// Base matrix of `target_width` odd-gap weight-2 columns that avoids
/// 4-cycles where it can.
///
/// Candidates are visited by increasing gap and starting row. A first pass
/// keeps every candidate that closes no 4-cycle with the columns already
/// placed; if that falls short of `target_width`, skipped candidates are
/// appended in visiting order. Columns therefore keep their acceptance order,
/// so truncating from the right drops cycle-closing columns first.
pub fn build_base_t2(t: usize, target_width: usize) -> Result<BinaryMatrix> {
    check_t(t)?;
    let rows = 2 * t;
    let max_width = BaseOrder::BaseT2.base_width(t);
    if target_width > max_width {
        return Err(Error::Infeasible(format!(
            "base_t2 for t={t} has at most {max_width} columns, {target_width} requested"
        )));
    }
    let words = rows.div_ceil(64);
    let mut adj = vec![vec![0u64; words]; rows];
    let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); rows];
    let mut placed: Vec<Vec<usize>> = Vec::with_capacity(target_width);
    let mut skipped = Vec::new();

    let candidates = (1..rows)
        .step_by(2)
        .flat_map(|d| (0..rows - d).map(move |r| (r, r + d)));
    for (a, b) in candidates {
        if placed.len() == target_width {
            break;
        }
        // A path a - y - x - b through placed columns closes a 4-cycle.
        let closes_cycle = neighbours[a]
            .iter()
            .any(|&y| adj[y].iter().zip(&adj[b]).any(|(p, q)| p & q != 0));
        if closes_cycle {
            skipped.push((a, b));
            continue;
        }
        adj[a][b / 64] |= 1 << (b % 64);
        adj[b][a / 64] |= 1 << (a % 64);
        neighbours[a].push(b);
        neighbours[b].push(a);
        placed.push(vec![a, b]);
    }
    let cycle_free = placed.len();
    for (a, b) in skipped {
        if placed.len() == target_width {
            break;
        }
        placed.push(vec![a, b]);
    }
    if placed.len() < target_width {
        return Err(Error::Infeasible(format!(
            "base_t2 for t={t} reached only {} of {target_width} columns",
            placed.len()
        )));
    }
    log::debug!("base_t2 t={t}: {cycle_free} of {target_width} columns placed without 4-cycles");
    BinaryMatrix::from_col_supports(rows, target_width, placed)
}

fn check_t(t: usize) -> Result<()> {
    if t < 2 || !t.is_multiple_of(2) {
        return Err(Error::InvalidParams(format!(
            "t must be an even integer >= 2, got {t}"
        )));
    }
    Ok(())
}

/// Fisher–Yates permutation of `0..len` for permutation index `index`.
///
/// Each index draws from its own ChaCha stream under `seed`, so permutation
/// `i` does not depend on how many others were generated.
pub fn column_permutation(seed: u64, index: u64, len: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut perm: Vec<usize> = (0..len).collect();
    perm.shuffle(&mut rng);
    perm
}

/// Lower-bidiagonal `n × n` matrix: ones on the diagonal and subdiagonal.
pub fn bidiagonal(n: usize) -> BinaryMatrix {
    let rows = (0..n)
        .map(|i| if i == 0 { vec![0] } else { vec![i - 1, i] })
        .collect();
    BinaryMatrix::from_row_supports(n, n, rows).expect("bidiagonal is well formed")
}

/// A constructed FDPC code.
#[derive(Debug, Clone, PartialEq)]
pub struct FdpcCode {
    params: FdpcParams,
    h: BinaryMatrix,
    punctured_cols: Vec<usize>,
}

/// Everything needed to rebuild an [`FdpcCode`] bit for bit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeDescriptor {
    pub t: usize,
    pub num_per: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub base_order: BaseOrder,
    pub perm_seed: u64,
    pub punctured_cols: Vec<usize>,
}

impl FdpcCode {
    /// Builds the full parity-check matrix for `params`.
    pub fn build(params: FdpcParams) -> Result<Self> {
        params.validate()?;
        let m = params.m_size();
        let width = params.base_width();
        if width <= m {
            return Err(Error::Infeasible(format!(
                "base width {width} leaves no data columns after the {m}-column bidiagonal prefix"
            )));
        }
        let base = match params.base_order {
            BaseOrder::BaseT1 => build_base_t1(params.t)?,
            BaseOrder::BaseT2 => build_base_t2(params.t, width)?,
        };
        let data_cols: Vec<usize> = (m..width).collect();
        let c = base.select_columns(&data_cols)?;
        let mut stacked = c.clone();
        for i in 1..=params.num_per {
            let perm = column_permutation(params.perm_seed, i as u64, c.cols());
            stacked = stacked.vstack(&c.select_columns(&perm)?)?;
        }
        let keep = params.n - m;
        let kept: Vec<usize> = (0..keep).collect();
        let punctured_cols: Vec<usize> = (m + keep..width).collect();
        let h = bidiagonal(m).hstack(&stacked.select_columns(&kept)?)?;
        Ok(Self {
            params,
            h,
            punctured_cols,
        })
    }

    /// Solves for construction parameters and builds the code.
    pub fn for_size(
        n: usize,
        k: usize,
        perm_seed: u64,
        base_order: Option<BaseOrder>,
    ) -> Result<Self> {
        Self::build(FdpcParams::solve(n, k, perm_seed, base_order)?)
    }

    pub fn from_descriptor(desc: &CodeDescriptor) -> Result<Self> {
        let code = Self::build(FdpcParams {
            t: desc.t,
            num_per: desc.num_per,
            n: desc.n,
            k: desc.k,
            base_order: desc.base_order,
            perm_seed: desc.perm_seed,
        })?;
        if code.punctured_cols != desc.punctured_cols {
            return Err(Error::InvalidInput(
                "descriptor punctured_cols do not match the rebuilt code".into(),
            ));
        }
        Ok(code)
    }

    pub fn descriptor(&self) -> CodeDescriptor {
        CodeDescriptor {
            t: self.params.t,
            num_per: self.params.num_per,
            n: self.params.n,
            k: self.params.k,
            base_order: self.params.base_order,
            perm_seed: self.params.perm_seed,
            punctured_cols: self.punctured_cols.clone(),
        }
    }

    pub fn write_descriptor(&self, path: &Path) -> Result<()> {
        fs::write(
            path,
            serde_json::to_string_pretty(&self.descriptor())? + "\n",
        )?;
        Ok(())
    }

    pub fn read_descriptor(path: &Path) -> Result<Self> {
        let desc: CodeDescriptor = serde_json::from_str(&fs::read_to_string(path)?)?;
        Self::from_descriptor(&desc)
    }

    pub fn params(&self) -> &FdpcParams {
        &self.params
    }

    /// The `M × N` parity-check matrix.
    pub fn h(&self) -> &BinaryMatrix {
        &self.h
    }

    /// Base-matrix column indices removed by puncturing, increasing.
    pub fn punctured_cols(&self) -> &[usize] {
        &self.punctured_cols
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn k(&self) -> usize {
        self.params.k
    }

    pub fn m(&self) -> usize {
        self.params.m()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    /// Systematic encoding: returns `[parity, message]`.
    pub fn encode(&self, message: &BitVector) -> Result<BitVector> {
        if message.len() != self.k() {
            return Err(Error::DimensionMismatch {
                what: "message length",
                expected: self.k(),
                found: message.len(),
            });
        }
        let m = self.m();
        let mut parity = vec![0u8; m];
        for (j, bit) in message.iter().enumerate() {
            if bit {
                for &r in self.h.col(m + j) {
                    parity[r] ^= 1;
                }
            }
        }
        for i in 1..m {
            parity[i] ^= parity[i - 1];
        }
        let mut word = parity;
        word.extend_from_slice(message.as_slice());
        BitVector::from_bits(word)
    }
}

/// Free-function form of [`FdpcCode::build`].
pub fn build_full_h(params: FdpcParams) -> Result<FdpcCode> {
    FdpcCode::build(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn col_pairs(h: &BinaryMatrix) -> Vec<(usize, usize)> {
        (0..h.cols()).map(|c| (h.col(c)[0], h.col(c)[1])).collect()
    }

    #[test]
    fn base_t1_t2_columns() {
        let h = build_base_t1(2).unwrap();
        assert_eq!((h.rows(), h.cols()), (4, 4));
        assert_eq!(col_pairs(&h), vec![(0, 1), (1, 2), (2, 3), (0, 3)]);
    }

    #[test]
    fn base_t1_structure() {
        for t in [2, 4, 6, 8, 10] {
            let h = build_base_t1(t).unwrap();
            assert_eq!(h.cols(), t * t);
            assert!(h.col_weights().iter().all(|&w| w == 2));
            assert!(h.row_weights().iter().all(|&w| w == t));
            assert!(col_pairs(&h).iter().all(|(a, b)| (b - a) % 2 == 1));
            assert_eq!(h.rank(), 2 * t - 1);
        }
    }

    #[test]
    fn base_t1_t4_min_distance() {
        let h = build_base_t1(4).unwrap();
        assert_eq!(h.nullspace().len(), 9);
        assert_eq!(h.min_distance_bruteforce().unwrap(), Some(4));
    }

    #[test]
    fn base_rejects_bad_t() {
        assert!(build_base_t1(3).is_err());
        assert!(build_base_t1(0).is_err());
        assert!(build_base_t2(5, 3).is_err());
    }

    #[test]
    fn base_t2_small_width_is_prefix_of_t1() {
        let t2 = build_base_t2(2, 3).unwrap();
        let t1 = build_base_t1(2).unwrap();
        assert_eq!(t2, t1.select_columns(&[0, 1, 2]).unwrap());
    }

    #[test]
    fn base_t2_t4() {
        let h = build_base_t2(4, 10).unwrap();
        assert_eq!((h.rows(), h.cols()), (8, 10));
        assert!(h.col_weights().iter().all(|&w| w == 2));
        assert!(col_pairs(&h).iter().all(|(a, b)| (b - a) % 2 == 1));
        assert!(h.min_distance_bruteforce().unwrap().unwrap() >= 4);
        assert!(build_base_t2(4, 11).is_err());
    }

    #[test]
    fn base_t2_cycle_free_prefix_has_distance_six() {
        // z(4,4; 2,2) = 9: nine edges of K_{4,4} can avoid every 4-cycle.
        let h = build_base_t2(4, 9).unwrap();
        assert_eq!(h.min_distance_bruteforce().unwrap(), Some(6));
    }

    #[test]
    fn solver_choices() {
        let p = FdpcParams::solve(256, 192, 0, None).unwrap();
        assert_eq!((p.t, p.num_per, p.base_order), (16, 1, BaseOrder::BaseT1));
        let p = FdpcParams::solve(128, 80, 0, None).unwrap();
        assert_eq!(
            (p.t, p.num_per, p.base_order, p.m_size()),
            (12, 1, BaseOrder::BaseT1, 48)
        );
        let p = FdpcParams::solve(256, 164, 0, None).unwrap();
        assert_eq!((p.t, p.num_per, p.base_order), (46, 0, BaseOrder::BaseT2));
        let p = FdpcParams::solve(1024, 844, 0, None).unwrap();
        assert_eq!((p.t, p.num_per, p.base_order), (90, 0, BaseOrder::BaseT2));
        assert!(FdpcParams::solve(64, 64, 0, None).is_err());
        assert!(FdpcParams::solve(64, 58, 0, None).is_err());
    }

    #[test]
    fn full_h_fdpc_256_192() {
        let code = FdpcCode::for_size(256, 192, 7, None).unwrap();
        let h = code.h();
        assert_eq!((h.rows(), h.cols()), (64, 256));
        for c in 0..64 {
            let expect: Vec<usize> = if c == 63 { vec![63] } else { vec![c, c + 1] };
            assert_eq!(h.col(c), expect.as_slice());
        }
        assert!((64..256).all(|c| h.col(c).len() == 4));
        assert!(code.punctured_cols().is_empty());
    }

    #[test]
    fn full_h_without_permutations() {
        let params = FdpcParams {
            t: 4,
            num_per: 0,
            n: 16,
            k: 8,
            base_order: BaseOrder::BaseT1,
            perm_seed: 99,
        };
        let code = FdpcCode::build(params).unwrap();
        let base = build_base_t1(4).unwrap();
        let c = base.select_columns(&(8..16).collect::<Vec<_>>()).unwrap();
        assert_eq!(code.h(), &bidiagonal(8).hstack(&c).unwrap());
    }

    #[test]
    fn puncturing_drops_highest_data_columns() {
        let code = FdpcCode::for_size(128, 80, 3, None).unwrap();
        assert_eq!(code.h().cols(), 128);
        assert_eq!(
            code.punctured_cols(),
            (128..144).collect::<Vec<_>>().as_slice()
        );
        let h = code.h();
        assert!((0..48).all(|c| h.col(c).len() <= 2));
        assert!((48..128).all(|c| h.col(c).len() == 4));
    }

    #[test]
    fn permuted_blocks_are_column_permutations() {
        let params = FdpcParams::solve(256, 192, 11, None).unwrap();
        let code = FdpcCode::build(params.clone()).unwrap();
        let h = code.h();
        let mut top: Vec<Vec<usize>> = (64..256)
            .map(|c| h.col(c).iter().copied().filter(|&r| r < 32).collect())
            .collect();
        let mut bottom: Vec<Vec<usize>> = (64..256)
            .map(|c| {
                h.col(c)
                    .iter()
                    .copied()
                    .filter(|&r| r >= 32)
                    .map(|r| r - 32)
                    .collect()
            })
            .collect();
        assert_ne!(top, bottom);
        top.sort();
        bottom.sort();
        assert_eq!(top, bottom);
    }

    #[test]
    fn construction_is_deterministic() {
        let a = FdpcCode::for_size(256, 192, 42, None).unwrap();
        let b = FdpcCode::for_size(256, 192, 42, None).unwrap();
        let c = FdpcCode::for_size(256, 192, 43, None).unwrap();
        assert_eq!(a.h(), b.h());
        assert_ne!(a.h(), c.h());
    }

    #[test]
    fn build_rejects_infeasible_params() {
        let mut p = FdpcParams::solve(256, 192, 0, None).unwrap();
        p.k = 190;
        assert!(matches!(
            FdpcCode::build(p.clone()),
            Err(Error::Infeasible(_))
        ));
        p.k = 192;
        p.n = 300;
        p.k = 236;
        assert!(FdpcCode::build(p).is_err());
    }

    #[test]
    fn encode_zero_message() {
        let code = FdpcCode::for_size(128, 80, 1, None).unwrap();
        assert!(code.encode(&BitVector::zeros(80)).unwrap().is_zero());
        assert!(code.encode(&BitVector::zeros(79)).is_err());
    }

    #[test]
    fn encode_matches_forward_substitution() {
        // t=2 leaves no data columns after the 4-column bidiagonal prefix.
        assert!(FdpcCode::for_size(4, 0, 0, None).is_err());

        let code = FdpcCode::build(FdpcParams {
            t: 4,
            num_per: 0,
            n: 16,
            k: 8,
            base_order: BaseOrder::BaseT1,
            perm_seed: 0,
        })
        .unwrap();
        let dense = code.h().to_dense();
        let msg = BitVector::ones(8);
        // Oracle: solve A·p = B·m by forward substitution on the dense rows.
        let bm: Vec<u8> = dense
            .iter()
            .map(|row| row[8..].iter().sum::<u8>() % 2)
            .collect();
        let mut p = vec![0u8; 8];
        for i in 0..8 {
            let mut acc = bm[i];
            for j in 0..i {
                acc ^= dense[i][j] & p[j];
            }
            p[i] = acc;
        }
        let c = code.encode(&msg).unwrap();
        assert_eq!(&c.as_slice()[..8], p.as_slice());
        assert_eq!(&c.as_slice()[8..], msg.as_slice());
        assert!(code.h().mat_vec(&c).unwrap().is_zero());
    }

    #[test]
    fn encode_random_messages_have_zero_syndrome() {
        let code = FdpcCode::for_size(256, 192, 5, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..10_000 {
            let msg = BitVector::from_bools((0..192).map(|_| rng.random_bool(0.5)));
            let c = code.encode(&msg).unwrap();
            assert!(code.h().mat_vec(&c).unwrap().is_zero());
        }
    }

    #[test]
    fn descriptor_round_trip() {
        let code = FdpcCode::for_size(128, 80, 77, None).unwrap();
        let json = serde_json::to_string(&code.descriptor()).unwrap();
        assert!(json.contains("\"N\":128"));
        assert!(json.contains("\"base_order\":\"base_t1\""));
        let desc: CodeDescriptor = serde_json::from_str(&json).unwrap();
        assert_eq!(FdpcCode::from_descriptor(&desc).unwrap(), code);

        let mut bad = desc;
        bad.punctured_cols.pop();
        assert!(FdpcCode::from_descriptor(&bad).is_err());
    }
}
