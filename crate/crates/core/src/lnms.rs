//! Layered normalized min-sum decoding.
//!
//! Messages live on the edges of the Tanner graph in check-major order. For a
//! check `j` the decoder forms the extrinsic inputs
//! `q_i = L(q_i) − r_{i←j}`, replaces each `r_{i←j}` with
//! `α · Π_{i'≠i} sgn(q_i') · min_{i'≠i} |q_i'|`, and adds the change to the
//! a-posteriori LLR straight away. Layers run in schedule order; hard
//! decisions and the syndrome are evaluated once per iteration.

use crate::error::{Error, Result};
use crate::gf2::{BinaryMatrix, BitVector};
use crate::schedule::LayerSchedule;

/// Symmetric clip applied to a-posteriori LLRs when clipping is enabled.
pub const DEFAULT_CLIP: f64 = 64.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderConfig {
    /// Normalization factor in `(0, 1]`.
    pub alpha: f64,
    pub max_iter: usize,
    pub schedule: LayerSchedule,
    /// Clip a-posteriori LLRs to `±clip` after each update.
    pub clip: Option<f64>,
}

impl DecoderConfig {
    pub fn new(alpha: f64, max_iter: usize, schedule: LayerSchedule) -> Self {
        Self {
            alpha,
            max_iter,
            schedule,
            clip: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParams("max_iter must be at least 1".into()));
        }
        if let Some(c) = self.clip {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "clip must be positive, got {c}"
                )));
            }
        }
        Ok(())
    }
}

/// Working LLRs for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderState {
    pub channel_llr: Vec<f64>,
    /// A-posteriori LLR of every variable.
    pub posterior_llr: Vec<f64>,
    /// Check-to-variable messages, one per edge in check-major order.
    pub c2v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub hard_decisions: BitVector,
    pub posterior_llr: Vec<f64>,
    pub syndrome: BitVector,
    pub syndrome_weight: usize,
    pub iterations_run: usize,
    pub converged: bool,
}

/// A layered NMS decoder bound to one parity-check matrix and schedule.
#[derive(Debug, Clone)]
pub struct LnmsDecoder {
    n: usize,
    offsets: Vec<usize>,
    vars: Vec<usize>,
    config: DecoderConfig,
}

impl LnmsDecoder {
    pub fn new(h: &BinaryMatrix, config: DecoderConfig) -> Result<Self> {
        config.validate()?;
        if !config.schedule.is_partition_of(h.rows()) {
            return Err(Error::InvalidParams(format!(
                "schedule does not partition the {} checks of H",
                h.rows()
            )));
        }
        let mut offsets = Vec::with_capacity(h.rows() + 1);
        let mut vars = Vec::with_capacity(h.nnz());
        offsets.push(0);
        for r in 0..h.rows() {
            vars.extend_from_slice(h.row(r));
            offsets.push(vars.len());
        }
        Ok(Self {
            n: h.cols(),
            offsets,
            vars,
            config,
        })
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Edge range of check `j` within [`DecoderState::c2v`].
    pub fn check_edges(&self, j: usize) -> std::ops::Range<usize> {
        self.offsets[j]..self.offsets[j + 1]
    }

    /// Variables attached to check `j`.
    pub fn check_vars(&self, j: usize) -> &[usize] {
        &self.vars[self.check_edges(j)]
    }

    /// Copies the channel LLRs into the posterior and zeroes all messages.
    pub fn init_state(&self, channel_llr: &[f64]) -> Result<DecoderState> {
        if channel_llr.len() != self.n {
            return Err(Error::DimensionMismatch {
                what: "channel LLR length",
                expected: self.n,
                found: channel_llr.len(),
            });
        }
        if let Some(i) = channel_llr.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "channel LLR {i} is not finite ({})",
                channel_llr[i]
            )));
        }
        Ok(DecoderState {
            channel_llr: channel_llr.to_vec(),
            posterior_llr: channel_llr.to_vec(),
            c2v: vec![0.0; self.vars.len()],
        })
    }

    /// Updates every message of check `j` and applies the deltas to the
    /// a-posteriori LLRs.
    pub fn process_check(&self, state: &mut DecoderState, j: usize) {
        let edges = self.check_edges(j);
        let mut fresh = [0.0f64; 64];
        if edges.len() <= fresh.len() {
            let fresh = &mut fresh[..edges.len()];
            self.check_update(state, j, fresh);
            self.apply(state, j, fresh);
        } else {
            let mut fresh = vec![0.0; edges.len()];
            self.check_update(state, j, &mut fresh);
            self.apply(state, j, &fresh);
        }
    }

    /// Computes the new check-to-variable messages of check `j` from the
    /// current posterior, without modifying the state.
    fn check_update(&self, state: &DecoderState, j: usize, out: &mut [f64]) {
        let edges = self.check_edges(j);
        let alpha = self.config.alpha;
        if edges.len() == 1 {
            let e = edges.start;
            out[0] = alpha * (state.posterior_llr[self.vars[e]] - state.c2v[e]);
            return;
        }
        let (mut min1, mut min2, mut min_pos) = (f64::INFINITY, f64::INFINITY, 0);
        let mut negative = false;
        for (k, e) in edges.clone().enumerate() {
            let q = state.posterior_llr[self.vars[e]] - state.c2v[e];
            out[k] = q;
            negative ^= q < 0.0;
            let mag = q.abs();
            if mag < min1 {
                min2 = min1;
                min1 = mag;
                min_pos = k;
            } else if mag < min2 {
                min2 = mag;
            }
        }
        for (k, slot) in out.iter_mut().enumerate() {
            let q = *slot;
            let mag = if k == min_pos { min2 } else { min1 };
            // Removing this input's own sign from the full product.
            let neg = negative ^ (q < 0.0);
            *slot = if neg { -alpha * mag } else { alpha * mag };
        }
    }

    fn apply(&self, state: &mut DecoderState, j: usize, fresh: &[f64]) {
        for (e, &new) in self.check_edges(j).zip(fresh) {
            let v = self.vars[e];
            let mut post = state.posterior_llr[v] + (new - state.c2v[e]);
            if let Some(c) = self.config.clip {
                post = post.clamp(-c, c);
            }
            state.posterior_llr[v] = post;
            state.c2v[e] = new;
        }
    }

    /// Runs one pass over all layers.
    pub fn run_iteration(&self, state: &mut DecoderState) {
        let mut staged = Vec::new();
        for layer in self.config.schedule.layers() {
            if !layer.merged {
                for &j in &layer.checks {
                    self.process_check(state, j);
                }
                continue;
            }
            // Checks in a merged layer may share variables: every check reads
            // the pre-layer posterior and the deltas are summed afterwards.
            staged.clear();
            for &j in &layer.checks {
                let start = staged.len();
                staged.resize(start + self.check_edges(j).len(), 0.0);
                self.check_update(state, j, &mut staged[start..]);
            }
            let mut cursor = 0;
            for &j in &layer.checks {
                let len = self.check_edges(j).len();
                self.apply(state, j, &staged[cursor..cursor + len]);
                cursor += len;
            }
        }
    }

    /// Hard decisions (`1` iff the LLR is negative) from the posterior.
    pub fn hard_decisions(&self, posterior: &[f64]) -> BitVector {
        BitVector::from_bools(posterior.iter().map(|&l| l < 0.0))
    }

    pub fn syndrome(&self, hard: &BitVector) -> BitVector {
        let bits = hard.as_slice();
        BitVector::from_bools(
            (0..self.m())
                .map(|j| self.check_vars(j).iter().fold(0u8, |acc, &v| acc ^ bits[v]) != 0),
        )
    }

    /// Decodes a frame, stopping at the first iteration with a zero syndrome.
    pub fn decode(&self, channel_llr: &[f64]) -> Result<DecodeOutcome> {
        let mut state = self.init_state(channel_llr)?;
        Ok(self.decode_state(&mut state))
    }

    pub fn decode_state(&self, state: &mut DecoderState) -> DecodeOutcome {
        let mut iterations_run = 0;
        loop {
            self.run_iteration(state);
            iterations_run += 1;
            let hard = self.hard_decisions(&state.posterior_llr);
            let syndrome = self.syndrome(&hard);
            let syndrome_weight = syndrome.weight();
            if syndrome_weight == 0 || iterations_run == self.config.max_iter {
                return DecodeOutcome {
                    hard_decisions: hard,
                    posterior_llr: state.posterior_llr.clone(),
                    syndrome,
                    syndrome_weight,
                    iterations_run,
                    converged: syndrome_weight == 0,
                };
            }
        }
    }
}

/// One-shot decode: builds a decoder for `h` and runs it on `channel_llr`.
pub fn decode(
    channel_llr: &[f64],
    h: &BinaryMatrix,
    config: DecoderConfig,
) -> Result<DecodeOutcome> {
    LnmsDecoder::new(h, config)?.decode(channel_llr)
}
