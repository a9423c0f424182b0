//! Minimal-sample generation: uniform draws, PROSAC-ordered draws and batch
//! draws for neural filtering.
//!
//! A [`SamplerState`] owns the seeded RNG and the PROSAC growth schedule, so
//! the full draw sequence is a pure function of (seed, quality order,
//! schedule). One estimation run owns one state.

use rand::seq::index::sample as index_sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{Correspondence, MinimalSample};

/// PROSAC growth parameter: the schedule reaches the full correspondence set
/// after this many iterations, at which point draws become uniform.
pub const PROSAC_T_N: f64 = 200_000.0;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SamplerError {
    #[error("not enough correspondences: need {needed}, have {available}")]
    NotEnoughData { needed: usize, available: usize },
}

/// Correspondence indices in descending prior-quality order, ties broken by
/// ascending original index.
#[derive(Debug, Clone)]
pub struct QualityOrder {
    order: Vec<usize>,
}

impl QualityOrder {
    pub fn from_scores(scores: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        Self { order }
    }

    /// The trivial order 0, 1, 2, ... (all scores equal).
    pub fn identity(len: usize) -> Self {
        Self { order: (0..len).collect() }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// The correspondence index at the given rank (0 = best).
    pub fn index_at_rank(&self, rank: usize) -> usize {
        self.order[rank]
    }
}

/// Iteration counter, PROSAC hypothesis-set size and seeded RNG of one
/// sampling run.
#[derive(Debug, Clone)]
pub struct SamplerState {
    /// Iterations completed.
    t: u64,
    /// Current hypothesis-set size n(t), in [m, total].
    n: usize,
    /// T'_n: the iteration until which the current n is kept.
    t_prime: f64,
    /// T_n of the real-valued growth schedule.
    t_n: f64,
    m: usize,
    total: usize,
    rng: ChaCha8Rng,
}

impl SamplerState {
    /// A state for drawing m-point samples from `total` correspondences.
    pub fn new(total: usize, m: usize, seed: u64) -> Self {
        // T_m = T_N * prod_{i=0..m-1} (m - i) / (total - i).
        let mut t_n = PROSAC_T_N;
        for i in 0..m.min(total) {
            t_n *= (m - i) as f64 / (total - i) as f64;
        }
        Self {
            t: 0,
            n: m.min(total),
            t_prime: 1.0,
            t_n,
            m,
            total,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn iterations(&self) -> u64 {
        self.t
    }

    /// Current PROSAC hypothesis-set size n(t).
    pub fn hypothesis_set_size(&self) -> usize {
        self.n
    }

    fn check(&self, available: usize) -> Result<(), SamplerError> {
        if available < self.m {
            return Err(SamplerError::NotEnoughData { needed: self.m, available });
        }
        Ok(())
    }

    fn advance_schedule(&mut self) {
        self.t += 1;
        while self.n < self.total && self.t as f64 > self.t_prime {
            let n1 = (self.n + 1) as f64;
            let t_next = self.t_n * n1 / (n1 - self.m as f64);
            self.t_prime += (t_next - self.t_n).ceil();
            self.t_n = t_next;
            self.n += 1;
        }
    }
}

/// Draws m distinct indices uniformly without replacement.
pub fn draw_uniform_indices(
    state: &mut SamplerState,
    available: usize,
) -> Result<Vec<usize>, SamplerError> {
    state.check(available)?;
    state.t += 1;
    let mut idx: Vec<usize> = index_sample(&mut state.rng, available, state.m).iter().collect();
    idx.sort_unstable();
    Ok(idx)
}

/// One PROSAC semi-random draw: the n(t)-th ranked correspondence plus m-1
/// uniform picks from the better-ranked ones. Past the growth schedule's
/// saturation point the draw is uniform over everything.
pub fn draw_prosac_indices(
    state: &mut SamplerState,
    quality_order: &QualityOrder,
) -> Result<Vec<usize>, SamplerError> {
    state.check(quality_order.len())?;
    debug_assert_eq!(state.total, quality_order.len());
    state.advance_schedule();
    let saturated = state.n == state.total && state.t as f64 > state.t_prime;
    let ranks: Vec<usize> = if saturated {
        index_sample(&mut state.rng, state.total, state.m).iter().collect()
    } else {
        let mut r: Vec<usize> =
            index_sample(&mut state.rng, state.n - 1, state.m - 1).iter().collect();
        r.push(state.n - 1);
        r
    };
    let mut idx: Vec<usize> = ranks.iter().map(|&r| quality_order.index_at_rank(r)).collect();
    idx.sort_unstable();
    Ok(idx)
}

fn materialize(correspondences: &[Correspondence], indices: &[usize]) -> MinimalSample {
    MinimalSample::from_points_unchecked(indices.iter().map(|&i| correspondences[i]).collect())
}

/// Uniform minimal sample over the correspondence set.
pub fn draw_uniform(
    state: &mut SamplerState,
    correspondences: &[Correspondence],
) -> Result<MinimalSample, SamplerError> {
    let idx = draw_uniform_indices(state, correspondences.len())?;
    Ok(materialize(correspondences, &idx))
}

/// PROSAC minimal sample over the correspondence set.
pub fn draw_prosac(
    state: &mut SamplerState,
    quality_order: &QualityOrder,
    correspondences: &[Correspondence],
) -> Result<MinimalSample, SamplerError> {
    let idx = draw_prosac_indices(state, quality_order)?;
    Ok(materialize(correspondences, &idx))
}

/// N PROSAC samples drawn by advancing the state N times, in draw order.
pub fn draw_batch(
    state: &mut SamplerState,
    quality_order: &QualityOrder,
    correspondences: &[Correspondence],
    batch_size: usize,
) -> Result<Vec<MinimalSample>, SamplerError> {
    let mut out = Vec::with_capacity(batch_size);
    for _ in 0..batch_size {
        out.push(draw_prosac(state, quality_order, correspondences)?);
    }
    Ok(out)
}
