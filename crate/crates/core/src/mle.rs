//! Photon counting followed by maximum-likelihood selection.
//!
//! Each of the `m` channels is probed `M` times and its return modes are photon
//! counted. Every return state is thermal, so the total count of a channel is a
//! sum of `M` geometric variables (negative binomial). The maximum-likelihood
//! rule picks the channel with the largest total when the target is hotter than
//! the background and the smallest total when it is colder, breaking ties
//! uniformly at random. Its success probability is evaluated exactly as a sum
//! over the target count and the number `c` of channels tied with it.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::bounds::CpfScenario;
use crate::error::{domain, Error, Result};
use crate::gaussian::{ChannelKind, Mode, PhaseInsensitiveChannel, SingleModeCovariance, TwoModeCovariance, SHOT_NOISE};

/// Running sum with Neumaier compensation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `P(k)` for a thermal mode with mean photon number `nbar`.
pub fn thermal_pmf(nbar: f64, k: u64) -> f64 {
    thermal_sum_pmf(nbar, 1, k)
}

/// `ln P(k)` for the total count of `probes` independent thermal modes of mean `nbar`:
/// `C(k + M - 1, k) (nbar / (1 + nbar))^k (1 / (1 + nbar))^M`.
pub fn ln_thermal_sum_pmf(nbar: f64, probes: u64, k: u64) -> f64 {
    if probes == 0 || nbar == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let (kf, mf) = (k as f64, probes as f64);
    let ln_binom = ln_gamma(kf + mf) - ln_gamma(kf + 1.0) - ln_gamma(mf);
    ln_binom + kf * (nbar.ln() - nbar.ln_1p()) - mf * nbar.ln_1p()
}

pub fn thermal_sum_pmf(nbar: f64, probes: u64, k: u64) -> f64 {
    ln_thermal_sum_pmf(nbar, probes, k).exp()
}

/// Probability that the total count is strictly below `n_c`. Empty sum (0) at `n_c = 0`.
pub fn count_cdf_below(nbar: f64, probes: u64, n_c: u64) -> f64 {
    let mut acc = CompensatedSum::default();
    for k in 0..n_c {
        acc.add(thermal_sum_pmf(nbar, probes, k));
    }
    acc.value().min(1.0)
}

/// Probability that the total count is strictly above `n_c`, as `1 - pr(count < n_c + 1)`.
pub fn count_cdf_above(nbar: f64, probes: u64, n_c: u64) -> f64 {
    (1.0 - count_cdf_below(nbar, probes, n_c + 1)).max(0.0)
}

/// Which decision rule the maximum-likelihood estimator reduces to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseOrdering {
    /// Pick the channel with the largest count.
    TargetHotter,
    /// Pick the channel with the smallest count.
    TargetColder,
}

/// Input to the exact MLE error evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleSpec {
    nbar_target: f64,
    nbar_background: f64,
    positions: usize,
    probes: u64,
}

impl MleSpec {
    pub fn new(nbar_target: f64, nbar_background: f64, positions: usize, probes: u64) -> Result<Self> {
        if !(nbar_target >= 0.0 && nbar_background >= 0.0)
            || !nbar_target.is_finite()
            || !nbar_background.is_finite()
        {
            return domain(format!(
                "mean photon numbers must be finite and >= 0 (target {nbar_target}, background {nbar_background})"
            ));
        }
        if nbar_target == nbar_background {
            return Err(Error::Degenerate(format!(
                "target and background both have mean photon number {nbar_target}"
            )));
        }
        if positions < 2 {
            return domain(format!("need at least 2 channel positions, got m={positions}"));
        }
        if probes == 0 {
            return domain("need at least one probe per channel");
        }
        Ok(Self { nbar_target, nbar_background, positions, probes })
    }

    pub fn nbar_target(&self) -> f64 {
        self.nbar_target
    }

    pub fn nbar_background(&self) -> f64 {
        self.nbar_background
    }

    pub fn positions(&self) -> usize {
        self.positions
    }

    pub fn probes(&self) -> u64 {
        self.probes
    }

    pub fn ordering(&self) -> NoiseOrdering {
        if self.nbar_target > self.nbar_background {
            NoiseOrdering::TargetHotter
        } else {
            NoiseOrdering::TargetColder
        }
    }

    pub fn with_positions(mut self, positions: usize) -> Result<Self> {
        if positions < 2 {
            return domain(format!("need at least 2 channel positions, got m={positions}"));
        }
        self.positions = positions;
        Ok(self)
    }
}

/// Stopping rule for the infinite sum over the target count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    /// Stop only once the target count distribution has accumulated `1 - mass_tol`.
    pub mass_tol: f64,
    /// ... and the per-count contribution has stayed below `term_tol` ...
    pub term_tol: f64,
    /// ... for this many consecutive counts.
    pub patience: u32,
}

impl Default for Truncation {
    fn default() -> Self {
        Self { mass_tol: 1e-12, term_tol: 1e-15, patience: 10 }
    }
}

/// Result of an exact MLE evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleEvaluation {
    pub error: f64,
    /// Target-count mass not visited; bounds the neglected success probability.
    pub truncation_error: f64,
    /// Number of target counts summed.
    pub terms: u64,
}

/// Exact error probability of the photon-counting MLE protocol.
///
/// Computed as one minus the success probability, so the absolute accuracy is about `1e-15`.
pub fn mle_error(spec: &MleSpec) -> Result<f64> {
    Ok(mle_error_with(spec, &Truncation::default())?.error)
}

pub fn mle_error_with(spec: &MleSpec, trunc: &Truncation) -> Result<MleEvaluation> {
    Ok(success_probability(
        spec.nbar_target,
        spec.nbar_background,
        spec.positions,
        spec.probes,
        spec.ordering(),
        trunc,
    ))
}

/// Incremental `ln P(k)` for the negative binomial via `P(k+1)/P(k) = (k+M)/(k+1) q`.
///
/// Rounding in the recursion drifts the total mass by up to ~1e-11 for thousands
/// of probes, which would stall a mass-based stopping rule, so a first pass over
/// the support fixes the normalisation.
struct LnPmfWalk {
    ln_q: f64,
    probes: f64,
    k: f64,
    current: f64,
    /// Beyond this count the remaining mass is negligible (below `e^-46` of the peak term).
    support_end: f64,
}

impl LnPmfWalk {
    fn new(nbar: f64, probes: u64) -> Self {
        let mut walk = Self::unnormalised(nbar, probes);
        if nbar > 0.0 {
            let mut probe = Self::unnormalised(nbar, probes);
            let mode = (probes as f64 - 1.0) * nbar;
            let mut peak = f64::NEG_INFINITY;
            let mut mass = CompensatedSum::default();
            loop {
                peak = peak.max(probe.current);
                mass.add(probe.current.exp());
                if probe.k > mode && probe.current < peak - 46.0 {
                    break;
                }
                probe.step();
            }
            walk.current -= mass.value().ln();
            walk.support_end = probe.k;
        }
        walk
    }

    fn unnormalised(nbar: f64, probes: u64) -> Self {
        let current = -(probes as f64) * nbar.ln_1p();
        let ln_q = if nbar == 0.0 { f64::NEG_INFINITY } else { nbar.ln() - nbar.ln_1p() };
        Self { ln_q, probes: probes as f64, k: 0.0, current, support_end: 0.0 }
    }

    fn step(&mut self) {
        self.current += ((self.k + self.probes) / (self.k + 1.0)).ln() + self.ln_q;
        self.k += 1.0;
    }
}

fn ln_choose(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `x * ln_y` with the convention `0 * ln 0 = 0`.
fn scaled_ln(x: usize, ln_y: f64) -> f64 {
    if x == 0 {
        0.0
    } else {
        x as f64 * ln_y
    }
}

pub(crate) fn success_probability(
    nbar_t: f64,
    nbar_b: f64,
    positions: usize,
    probes: u64,
    ordering: NoiseOrdering,
    trunc: &Truncation,
) -> MleEvaluation {
    let m = positions;
    // ln[ C(m-1, c-1) / c ] for c = 1..=m
    let weights: Vec<f64> = (1..=m).map(|c| ln_choose(m - 1, c - 1) - (c as f64).ln()).collect();
    let mut target = LnPmfWalk::new(nbar_t, probes);
    let mut background = LnPmfWalk::new(nbar_b, probes);
    let mut below_b = CompensatedSum::default();
    let mut mass_t = CompensatedSum::default();
    let mut success = CompensatedSum::default();
    let mut quiet = 0u32;
    let mut terms = 0u64;
    loop {
        let ln_pt = target.current;
        let ln_pb = background.current;
        let pt = ln_pt.exp();
        let pb = ln_pb.exp();
        let below = below_b.value().min(1.0);
        let others = match ordering {
            NoiseOrdering::TargetHotter => below,
            NoiseOrdering::TargetColder => (1.0 - below - pb).max(0.0),
        };
        let ln_others = others.ln();
        let mut term = CompensatedSum::default();
        if pt > 0.0 {
            for (i, w) in weights.iter().enumerate() {
                let c = i + 1;
                let ln_term = ln_pt + w + scaled_ln(m - c, ln_others) + scaled_ln(c - 1, ln_pb);
                term.add(ln_term.exp());
            }
        }
        let term = term.value();
        success.add(term);
        mass_t.add(pt);
        below_b.add(pb);
        terms += 1;

        let exhausted = mass_t.value() > 1.0 - trunc.mass_tol || target.k > target.support_end;
        if exhausted && term < trunc.term_tol {
            quiet += 1;
            if quiet >= trunc.patience {
                break;
            }
        } else {
            quiet = 0;
        }
        target.step();
        background.step();
    }
    let succ = success.value().clamp(0.0, 1.0);
    MleEvaluation {
        error: 1.0 - succ,
        truncation_error: (1.0 - mass_t.value()).max(0.0),
        terms,
    }
}

/// Mean photon numbers of the entangled protocol's asymptotic return states, `eps - 1/2`.
pub fn quantum_spec(scen: &CpfScenario) -> Result<MleSpec> {
    let (Some(nt), Some(nb)) = (scen.target().environment_photons(), scen.background().environment_photons())
    else {
        return Err(Error::Unsupported(
            "the squeeze-and-count protocol needs loss or amplifier channels (r1 diverges at tau = 1)".into(),
        ));
    };
    MleSpec::new(nt, nb, scen.positions(), scen.probes())
}

/// Mean photon numbers of the vacuum-probe return states: `(eps - 1/2)|1 - tau|` for
/// loss and amplifier channels, `nu` for additive channels.
pub fn classical_spec(scen: &CpfScenario) -> Result<MleSpec> {
    let occupation = |ch: &PhaseInsensitiveChannel| match ch.environment_photons() {
        Some(n) => n * (1.0 - ch.tau()).abs(),
        None => ch.nu(),
    };
    MleSpec::new(occupation(scen.target()), occupation(scen.background()), scen.positions(), scen.probes())
}

/// Exact MLE error with entangled probes in the infinite-squeezing limit.
pub fn mle_error_quantum(scen: &CpfScenario) -> Result<f64> {
    mle_error(&quantum_spec(scen)?)
}

/// Exact MLE error with vacuum probes.
pub fn mle_error_classical(scen: &CpfScenario) -> Result<f64> {
    mle_error(&classical_spec(scen)?)
}

/// Squeeze, probe, anti-squeeze, and discard: the preparation of thermal return states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnStatePipeline {
    a: f64,
    channel: PhaseInsensitiveChannel,
    r0: f64,
    r1: f64,
}

impl ReturnStatePipeline {
    pub fn new(a: f64, channel: PhaseInsensitiveChannel) -> Result<Self> {
        if !(a >= SHOT_NOISE) || !a.is_finite() {
            return domain(format!("squeezing parameter must satisfy a >= 1/2, got a={a}"));
        }
        if channel.kind() == ChannelKind::Additive {
            return Err(Error::Unsupported("anti-squeezing parameter diverges at tau = 1".into()));
        }
        let r0 = 0.5 * (2.0 * a + (4.0 * a * a - 1.0).sqrt()).ln();
        let s = channel.tau().sqrt();
        let r1 = 0.5 * ((1.0 - s).abs() / (1.0 + s)).ln();
        Ok(Self { a, channel, r0, r1 })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn channel(&self) -> &PhaseInsensitiveChannel {
        &self.channel
    }

    /// Squeezing that turns two vacua into the probe state.
    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Anti-squeezing applied to the channel output.
    pub fn r1(&self) -> f64 {
        self.r1
    }
}

/// Runs the pipeline on covariance matrices. Loss channels keep the probed mode,
/// amplifiers keep the idler.
pub fn return_state_cm(p: &ReturnStatePipeline) -> SingleModeCovariance {
    let discard = match p.channel.kind() {
        ChannelKind::Amplifier => Mode::Second,
        _ => Mode::First,
    };
    TwoModeCovariance::vacuum()
        .two_mode_squeeze(p.r0)
        .apply_channel(&p.channel)
        .two_mode_squeeze(p.r1)
        .discard(discard)
}

/// Closed-form return-state variance `(nu + 2 a tau - tau sqrt(4a^2 - 1)) / |1 - tau|`.
pub fn return_state_variance(p: &ReturnStatePipeline) -> f64 {
    let (a, tau, nu) = (p.a, p.channel.tau(), p.channel.nu());
    (nu + 2.0 * a * tau - tau * (4.0 * a * a - 1.0).sqrt()) / (1.0 - tau).abs()
}

/// Upper bounds on the `m`-channel MLE error from the two-channel error:
/// `(1 - (1 - p2)^{m-1}, (m - 1) p2)`.
pub fn mle_scaling_bounds(p_err_2: f64, positions: usize) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&p_err_2) {
        return domain(format!("two-channel error must lie in [0, 1], got {p_err_2}"));
    }
    if positions < 2 {
        return domain(format!("need at least 2 channel positions, got m={positions}"));
    }
    let k = (positions - 1) as f64;
    let exact = if p_err_2 == 1.0 { 1.0 } else { -(k * (-p_err_2).ln_1p()).exp_m1() };
    Ok((exact, k * p_err_2))
}
