//! Monte Carlo estimate of the photon-counting MLE error.
//!
//! Random numbers come from ChaCha8 as implemented by `rand_chacha` 0.9. Trials
//! are cut into chunks of [`CHUNK_TRIALS`]; chunk `i` uses the generator seeded
//! with `seed_from_u64(seed)` on stream `i`, so results do not depend on how many
//! worker threads run the chunks.
//!
//! Draw order within a trial: the target count first (its `M` geometric draws in
//! probe order), then each background channel in ascending index. When the target
//! shares the winning count with `c - 1` other channels, one more uniform draw
//! over the `c` tied channels (target first, the rest in ascending index) decides
//! the outcome. No tie-break draw is made when the target cannot win.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::mle::{MleSpec, NoiseOrdering};

/// Number of trials per independent random stream.
pub const CHUNK_TRIALS: u64 = 4096;

/// Name of the generator, echoed in reports.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha 0.9), one stream per chunk of 4096 trials";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub trials: u64,
    pub successes: u64,
    pub error_estimate: f64,
    /// `sqrt(p (1 - p) / trials)` with `p = error_estimate`.
    pub standard_error: f64,
    pub seed: u64,
}

impl SimulationResult {
    fn from_counts(trials: u64, successes: u64, seed: u64) -> Self {
        let p = 1.0 - successes as f64 / trials as f64;
        Self {
            trials,
            successes,
            error_estimate: p,
            standard_error: (p * (1.0 - p) / trials as f64).sqrt(),
            seed,
        }
    }

    /// `(error_estimate - reference) / standard_error`; infinite when the estimate has no spread.
    pub fn z_score(&self, reference: f64) -> f64 {
        let d = self.error_estimate - reference;
        if self.standard_error > 0.0 {
            d / self.standard_error
        } else if d == 0.0 {
            0.0
        } else {
            d.signum() * f64::INFINITY
        }
    }
}

/// Total photon count of `probes` thermal modes with mean `nbar`, as a sum of
/// inverse-CDF geometric draws with `pr(k >= j) = (nbar / (1 + nbar))^j`.
pub fn sample_total_count<R: Rng + ?Sized>(nbar: f64, probes: u64, rng: &mut R) -> u64 {
    if nbar == 0.0 {
        return 0;
    }
    let ln_q = nbar.ln() - nbar.ln_1p();
    let mut total = 0u64;
    for _ in 0..probes {
        // u in (0, 1]
        let u = 1.0 - rng.random::<f64>();
        total += (u.ln() / ln_q).floor() as u64;
    }
    total
}

fn trial<R: Rng + ?Sized>(
    nbar_t: f64,
    nbar_b: f64,
    positions: usize,
    probes: u64,
    ordering: NoiseOrdering,
    rng: &mut R,
) -> bool {
    let target = sample_total_count(nbar_t, probes, rng);
    let mut ties = 1u64;
    let mut beaten = false;
    for _ in 1..positions {
        let k = sample_total_count(nbar_b, probes, rng);
        let better = match ordering {
            NoiseOrdering::TargetHotter => k > target,
            NoiseOrdering::TargetColder => k < target,
        };
        beaten |= better;
        ties += u64::from(k == target);
    }
    if beaten {
        false
    } else if ties == 1 {
        true
    } else {
        rng.random_range(0..ties) == 0
    }
}

/// Monte Carlo run of the MLE decision rule for `spec`.
pub fn run_mle_trials(spec: &MleSpec, trials: u64, seed: u64) -> Result<SimulationResult> {
    run_trials(
        spec.nbar_target(),
        spec.nbar_background(),
        spec.positions(),
        spec.probes(),
        spec.ordering(),
        trials,
        seed,
    )
}

/// Like [`run_mle_trials`] but with the decision rule given explicitly and no
/// requirement that the two mean photon numbers differ.
pub fn run_trials(
    nbar_t: f64,
    nbar_b: f64,
    positions: usize,
    probes: u64,
    ordering: NoiseOrdering,
    trials: u64,
    seed: u64,
) -> Result<SimulationResult> {
    if trials == 0 {
        return domain("need at least one trial");
    }
    if positions < 2 {
        return domain(format!("need at least 2 channel positions, got m={positions}"));
    }
    if !(nbar_t >= 0.0 && nbar_b >= 0.0) || !nbar_t.is_finite() || !nbar_b.is_finite() {
        return domain("mean photon numbers must be finite and >= 0");
    }
    let chunks = trials.div_ceil(CHUNK_TRIALS);
    let successes: u64 = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let n = CHUNK_TRIALS.min(trials - chunk * CHUNK_TRIALS);
            (0..n)
                .filter(|_| trial(nbar_t, nbar_b, positions, probes, ordering, &mut rng))
                .count() as u64
        })
        .sum();
    Ok(SimulationResult::from_counts(trials, successes, seed))
}
