//! Closed-form output fidelities and fidelity-based error bounds for channel-position finding.
//!
//! Two channels with the same transmissivity are compared three ways: with a
//! finite two-mode squeezed probe of variance `a`, in the infinite-squeezing
//! (Choi) limit, and with vacuum probes, which are optimal among classical
//! (coherent-state) inputs. The Choi and vacuum fidelities feed the quantum and
//! classical error bounds respectively.

use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_10, SQRT_2};

use crate::error::{domain, Error, Result};
use crate::gaussian::{ChannelKind, PhaseInsensitiveChannel, FIDELITY_TOL, SHOT_NOISE};

/// Probabilities below this are reported as zero on the linear scale.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;

fn clamp_fidelity(f: f64) -> Result<f64> {
    if !f.is_finite() || !(-FIDELITY_TOL..=1.0 + FIDELITY_TOL).contains(&f) {
        return Err(Error::NumericalInstability(format!("fidelity {f} outside [0, 1]")));
    }
    Ok(f.clamp(0.0, 1.0))
}

fn check_eps(eps_t: f64, eps_b: f64) -> Result<()> {
    if !(eps_t >= SHOT_NOISE && eps_b >= SHOT_NOISE) || !eps_t.is_finite() || !eps_b.is_finite() {
        return domain(format!(
            "environment variances must be finite and >= 1/2 (eps_t={eps_t}, eps_b={eps_b})"
        ));
    }
    Ok(())
}

fn check_nu(nu_t: f64, nu_b: f64) -> Result<()> {
    if !(nu_t > 0.0 && nu_b > 0.0) || !nu_t.is_finite() || !nu_b.is_finite() {
        return domain(format!(
            "additive noise must be finite and > 0 (nu_t={nu_t}, nu_b={nu_b})"
        ));
    }
    Ok(())
}

fn check_squeezing(a: f64) -> Result<()> {
    if !(a >= SHOT_NOISE) || !a.is_finite() {
        return domain(format!("squeezing parameter must satisfy a >= 1/2, got a={a}"));
    }
    Ok(())
}

/// Returns `(alpha, beta, alpha - beta)`; the difference is assembled in factored
/// form because it vanishes at the pure-loss boundary where its square root is taken.
fn thermal_alpha_beta(tau: f64, eps_t: f64, eps_b: f64, a: f64) -> (f64, f64, f64) {
    let d = (1.0 - tau).abs();
    let sum = eps_t + eps_b;
    let prod = 4.0 * eps_t * eps_b;
    let root = ((4.0 * eps_t * eps_t - 1.0) * (4.0 * eps_b * eps_b - 1.0)).sqrt();
    let a2 = 4.0 * a * a;
    let quad = prod + a2 * (prod + 1.0) + (a2 - 1.0) * root;
    let alpha = quad * d * d + 8.0 * a * sum * tau * d + (1.0 + tau) * (1.0 + tau);
    let beta = 4.0 * (tau + 2.0 * a * sum * d);
    let sign = if tau < 1.0 { -1.0 } else { 1.0 };
    let diff = d * d * (quad + 1.0 + sign * 8.0 * a * sum);
    (alpha, beta, diff)
}

/// Output fidelity of two thermal loss (or amplifier) channels probed with a
/// two-mode squeezed vacuum of per-mode variance `a`.
pub fn fid_thermal(tau: f64, eps_t: f64, eps_b: f64, a: f64) -> Result<f64> {
    if !(tau >= 0.0) || tau == 1.0 || !tau.is_finite() {
        return domain(format!("thermal fidelity requires tau >= 0 and tau != 1, got {tau}"));
    }
    check_eps(eps_t, eps_b)?;
    check_squeezing(a)?;
    if eps_t == eps_b {
        return Ok(1.0);
    }
    let (alpha, beta, diff) = thermal_alpha_beta(tau, eps_t, eps_b, a);
    clamp_fidelity(SQRT_2 * ((alpha + beta).sqrt() + diff.max(0.0).sqrt()) / beta)
}

/// Infinite-squeezing limit of [`fid_thermal`]; independent of `tau`.
pub fn fid_thermal_choi(eps_t: f64, eps_b: f64) -> Result<f64> {
    check_eps(eps_t, eps_b)?;
    if eps_t == eps_b {
        return Ok(1.0);
    }
    let root = ((4.0 * eps_t * eps_t - 1.0) * (4.0 * eps_b * eps_b - 1.0)).sqrt();
    clamp_fidelity((4.0 * eps_t * eps_b + 1.0 + root).sqrt() / (SQRT_2 * (eps_t + eps_b)))
}

/// Output fidelity of two additive-noise channels probed with squeezing `a`.
pub fn fid_additive(nu_t: f64, nu_b: f64, a: f64) -> Result<f64> {
    check_squeezing(a)?;
    if nu_t == nu_b {
        return Ok(1.0);
    }
    check_nu(nu_t, nu_b)?;
    let num = 2.0 * a * (nu_t * nu_b).sqrt() + ((2.0 * a * nu_t + 1.0) * (2.0 * a * nu_b + 1.0)).sqrt();
    clamp_fidelity(num / (2.0 * a * (nu_t + nu_b) + 1.0))
}

/// Infinite-squeezing limit of [`fid_additive`].
pub fn fid_additive_choi(nu_t: f64, nu_b: f64) -> Result<f64> {
    if nu_t == nu_b {
        return Ok(1.0);
    }
    check_nu(nu_t, nu_b)?;
    let f = 2.0 * (nu_t * nu_b).sqrt() / (nu_t + nu_b);
    let r = (nu_t - nu_b).abs() / (0.5 * (nu_t + nu_b));
    let via_ratio = fid_additive_choi_ratio(r)?;
    if (f - via_ratio).abs() > 1e-12 {
        return Err(Error::NumericalInstability(format!(
            "additive Choi fidelity forms disagree: {f} vs {via_ratio}"
        )));
    }
    clamp_fidelity(f)
}

/// Additive Choi fidelity as a function of `r = nu_dif / nu_av` alone.
pub fn fid_additive_choi_ratio(r: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&r) {
        return domain(format!("noise ratio must lie in [0, 2], got r={r}"));
    }
    Ok((1.0 - 0.25 * r * r).max(0.0).sqrt())
}

/// Returns `(gamma, delta, gamma - delta)` with the difference in factored form.
fn classical_gamma_delta(tau: f64, eps_t: f64, eps_b: f64) -> (f64, f64, f64) {
    let d = (1.0 - tau).abs();
    let gamma = 4.0 * eps_t * eps_b * d * d + 2.0 * (eps_t + eps_b) * tau * d + (1.0 + tau * tau);
    let delta = 2.0 * (tau + (eps_t + eps_b) * d);
    let sign = if tau < 1.0 { -1.0 } else { 1.0 };
    let diff = d * d * (2.0 * eps_t + sign) * (2.0 * eps_b + sign);
    (gamma, delta, diff)
}

fn fid_classical_thermal(tau: f64, eps_t: f64, eps_b: f64) -> Result<f64> {
    check_eps(eps_t, eps_b)?;
    if eps_t == eps_b {
        return Ok(1.0);
    }
    let (gamma, delta, diff) = classical_gamma_delta(tau, eps_t, eps_b);
    clamp_fidelity(((gamma + delta).sqrt() + diff.max(0.0).sqrt()) / delta)
}

fn fid_classical_additive(nu_t: f64, nu_b: f64) -> Result<f64> {
    if nu_t == nu_b {
        return Ok(1.0);
    }
    check_nu(nu_t, nu_b)?;
    clamp_fidelity(1.0 / (((nu_t + 1.0) * (nu_b + 1.0)).sqrt() - (nu_t * nu_b).sqrt()))
}

/// Checks that two channels differ only in their noise.
pub fn check_pair(background: &PhaseInsensitiveChannel, target: &PhaseInsensitiveChannel) -> Result<()> {
    if background.kind() != target.kind() {
        return Err(Error::MismatchedChannels(format!(
            "background is {:?} but target is {:?}",
            background.kind(),
            target.kind()
        )));
    }
    if background.tau() != target.tau() {
        return Err(Error::MismatchedChannels(format!(
            "transmissivities differ: background {} vs target {}",
            background.tau(),
            target.tau()
        )));
    }
    Ok(())
}

/// Minimum output fidelity over classical (coherent-state) inputs, attained by the vacuum.
pub fn fid_classical(background: &PhaseInsensitiveChannel, target: &PhaseInsensitiveChannel) -> Result<f64> {
    check_pair(background, target)?;
    match (target.epsilon(), background.epsilon()) {
        (Some(et), Some(eb)) => fid_classical_thermal(target.tau(), et, eb),
        _ => fid_classical_additive(target.nu(), background.nu()),
    }
}

/// Choi-limit fidelity for a channel pair, dispatching on the channel class.
pub fn fid_choi(background: &PhaseInsensitiveChannel, target: &PhaseInsensitiveChannel) -> Result<f64> {
    check_pair(background, target)?;
    match (target.epsilon(), background.epsilon()) {
        (Some(et), Some(eb)) => fid_thermal_choi(et, eb),
        _ => fid_additive_choi(target.nu(), background.nu()),
    }
}

/// Finite-squeezing output fidelity for a channel pair.
pub fn fid_probe(background: &PhaseInsensitiveChannel, target: &PhaseInsensitiveChannel, a: f64) -> Result<f64> {
    check_pair(background, target)?;
    match (target.epsilon(), background.epsilon()) {
        (Some(et), Some(eb)) => fid_thermal(target.tau(), et, eb, a),
        _ => fid_additive(target.nu(), background.nu(), a),
    }
}

/// A probability held as its natural logarithm, so tiny values survive for dB output.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LogProb(f64);

impl LogProb {
    pub fn from_ln(ln: f64) -> Self {
        Self(ln.min(0.0))
    }

    pub fn from_prob(p: f64) -> Self {
        Self::from_ln(p.ln())
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    /// Linear-scale value; anything below [`UNDERFLOW_FLOOR`] is reported as zero.
    pub fn value(self) -> f64 {
        if self.0 < UNDERFLOW_FLOOR.ln() {
            0.0
        } else {
            self.0.exp()
        }
    }

    /// `10 log10(p)`.
    pub fn decibels(self) -> f64 {
        10.0 * self.0 / LN_10
    }
}

/// One channel-position-finding instance: `m` positions, `M` probes per position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpfScenario {
    positions: usize,
    probes: u64,
    background: PhaseInsensitiveChannel,
    target: PhaseInsensitiveChannel,
    prior: Option<Vec<f64>>,
}

impl CpfScenario {
    /// Scenario with a uniform prior over target positions.
    pub fn uniform(
        positions: usize,
        probes: u64,
        background: PhaseInsensitiveChannel,
        target: PhaseInsensitiveChannel,
    ) -> Result<Self> {
        if positions < 2 {
            return domain(format!("need at least 2 channel positions, got m={positions}"));
        }
        check_pair(&background, &target)?;
        Ok(Self { positions, probes, background, target, prior: None })
    }

    /// Replaces the uniform prior with an explicit one.
    pub fn with_prior(mut self, prior: Vec<f64>) -> Result<Self> {
        if prior.len() != self.positions {
            return domain(format!(
                "prior has {} entries but there are {} positions",
                prior.len(),
                self.positions
            ));
        }
        if prior.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return domain("prior entries must be finite and >= 0");
        }
        let total: f64 = prior.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return domain(format!("prior must sum to 1, sums to {total}"));
        }
        self.prior = Some(prior);
        Ok(self)
    }

    pub fn with_probes(mut self, probes: u64) -> Self {
        self.probes = probes;
        self
    }

    pub fn positions(&self) -> usize {
        self.positions
    }

    pub fn probes(&self) -> u64 {
        self.probes
    }

    pub fn background(&self) -> &PhaseInsensitiveChannel {
        &self.background
    }

    pub fn target(&self) -> &PhaseInsensitiveChannel {
        &self.target
    }

    pub fn kind(&self) -> ChannelKind {
        self.target.kind()
    }

    pub fn prior(&self) -> Vec<f64> {
        self.prior
            .clone()
            .unwrap_or_else(|| vec![1.0 / self.positions as f64; self.positions])
    }

    /// True unless an explicit prior was supplied.
    pub fn has_uniform_prior(&self) -> bool {
        self.prior.is_none()
    }

    /// True when target and background channels are identical.
    pub fn is_degenerate(&self) -> bool {
        self.target.nu() == self.background.nu()
    }

    /// `(sum_{i>j} p_i p_j, 2 sum_{i>j} sqrt(p_i p_j), 1 - max_i p_i)`.
    fn prior_weights(&self) -> (f64, f64, f64) {
        let m = self.positions as f64;
        match &self.prior {
            None => ((m - 1.0) / (2.0 * m), m - 1.0, (m - 1.0) / m),
            Some(p) => {
                let sum_sq: f64 = p.iter().map(|x| x * x).sum();
                let sum_root: f64 = p.iter().map(|x| x.sqrt()).sum();
                let max = p.iter().cloned().fold(0.0, f64::max);
                (0.5 * (1.0 - sum_sq), sum_root * sum_root - 1.0, 1.0 - max)
            }
        }
    }
}

/// Quantum and classical lower/upper bounds on the optimal error probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBoundSet {
    pub quantum_lower: LogProb,
    pub quantum_upper: LogProb,
    pub classical_lower: LogProb,
    pub classical_upper: LogProb,
}

fn pair_bounds(ln_fid: f64, probes: u64, weights: (f64, f64, f64)) -> (LogProb, LogProb) {
    let (w_lower, w_upper, cap) = weights;
    let m = probes as f64;
    let scaled = |k: f64| if probes == 0 { 0.0 } else { k * m * ln_fid };
    let lower = w_lower.ln() + scaled(4.0);
    let upper = (w_upper.ln() + scaled(2.0)).min(cap.ln());
    (LogProb::from_ln(lower), LogProb::from_ln(upper))
}

/// Fidelity-based bounds: lower `sum p_i p_j F^{4M}`, upper
/// `min(1 - max p, 2 sum sqrt(p_i p_j) F^{2M})`, with the Choi fidelity for the
/// quantum pair and the vacuum-probe fidelity for the classical pair.
pub fn error_bounds(scen: &CpfScenario) -> Result<ErrorBoundSet> {
    let fq = fid_choi(&scen.background, &scen.target)?;
    let fc = fid_classical(&scen.background, &scen.target)?;
    Ok(error_bounds_from_fidelities(scen, fq, fc))
}

/// Same as [`error_bounds`] with the two fidelities already evaluated.
pub fn error_bounds_from_fidelities(scen: &CpfScenario, fid_quantum: f64, fid_classical: f64) -> ErrorBoundSet {
    let w = scen.prior_weights();
    let (quantum_lower, quantum_upper) = pair_bounds(fid_quantum.ln(), scen.probes, w);
    let (classical_lower, classical_upper) = pair_bounds(fid_classical.ln(), scen.probes, w);
    ErrorBoundSet { quantum_lower, quantum_upper, classical_lower, classical_upper }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn thermal_identical_channels() {
        assert_eq!(fid_thermal(0.3, 2.0, 2.0, 5.0).unwrap(), 1.0);
        let (alpha, beta, diff) = thermal_alpha_beta(0.5, 0.5, 0.5, 0.5);
        assert_relative_eq!(alpha, 4.0, epsilon = 1e-14);
        assert_relative_eq!(beta, 4.0, epsilon = 1e-14);
        assert_eq!(diff, 0.0);
        // bypass the fast path
        assert_relative_eq!(fid_thermal(0.5, 0.5, 0.5 + 1e-15, 0.5).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn thermal_domain() {
        assert!(fid_thermal(1.0, 1.0, 2.0, 1.0).is_err());
        assert!(fid_thermal(0.5, 0.4, 2.0, 1.0).is_err());
        assert!(fid_thermal(0.5, 1.0, 2.0, 0.3).is_err());
        assert!(fid_thermal_choi(0.2, 1.0).is_err());
    }

    #[test]
    fn choi_is_large_squeezing_limit() {
        assert_eq!(fid_thermal_choi(0.5, 0.5).unwrap(), 1.0);
        assert_relative_eq!(fid_thermal_choi(3.0, 3.0 + 1e-14).unwrap(), 1.0, epsilon = 1e-12);
        for tau in [0.3, 0.99, 2.0] {
            for (et, eb) in [(0.7, 2.0), (21.0, 23.2), (1.0, 5.0)] {
                let lim = fid_thermal_choi(et, eb).unwrap();
                let big = fid_thermal(tau, et, eb, 1e6).unwrap();
                assert!((lim - big).abs() < 1e-4, "tau={tau} {et} {eb}: {lim} vs {big}");
            }
        }
    }

    #[test]
    fn additive_fidelities() {
        assert_eq!(fid_additive(0.2, 0.2, 3.0).unwrap(), 1.0);
        assert_eq!(fid_additive_choi(0.0, 0.0).unwrap(), 1.0);
        assert!(fid_additive_choi(0.0, 0.1).is_err());
        let lim = 2.0 * (0.0003f64).sqrt() / 0.04;
        assert_relative_eq!(fid_additive_choi(0.01, 0.03).unwrap(), lim, epsilon = 1e-15);
        assert!((fid_additive_choi(0.01, 0.03).unwrap() - 0.86603).abs() < 5e-6);
        assert!((fid_additive(0.01, 0.03, 1e8).unwrap() - 0.8660).abs() < 1e-4);
        assert_eq!(fid_additive_choi_ratio(2.0).unwrap(), 0.0);
        assert!(fid_additive_choi_ratio(2.5).is_err());
    }

    #[test]
    fn classical_is_vacuum_probe() {
        for tau in [0.0, 0.1, 0.5, 0.9, 1.5, 2.0, 7.0] {
            for (et, eb) in [(0.5, 0.6), (1.0, 3.0), (21.0, 23.2), (10.0, 0.5)] {
                let bg = PhaseInsensitiveChannel::thermal(tau, eb).unwrap();
                let tg = PhaseInsensitiveChannel::thermal(tau, et).unwrap();
                let fc = fid_classical(&bg, &tg).unwrap();
                // eps recovered from nu carries rounding; the fidelity is singular at eps = 1/2
                let (et, eb) = (tg.epsilon().unwrap(), bg.epsilon().unwrap());
                let fa = fid_thermal(tau, et, eb, 0.5).unwrap();
                assert!((fc - fa).abs() < 1e-12, "tau={tau} {et} {eb}: {fc} vs {fa}");
            }
        }
        let bg = PhaseInsensitiveChannel::additive(0.03).unwrap();
        let tg = PhaseInsensitiveChannel::additive(0.01).unwrap();
        let fc = fid_classical(&bg, &tg).unwrap();
        assert!((fc - 0.99738).abs() < 5e-6, "{fc}");
        assert_relative_eq!(fc, fid_additive(0.01, 0.03, 0.5).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn classical_rejects_mismatched_pairs() {
        let a = PhaseInsensitiveChannel::loss(0.5, 1.0).unwrap();
        let b = PhaseInsensitiveChannel::loss(0.6, 1.0).unwrap();
        let c = PhaseInsensitiveChannel::additive(1.0).unwrap();
        assert!(matches!(fid_classical(&a, &b), Err(Error::MismatchedChannels(_))));
        assert!(matches!(fid_classical(&a, &c), Err(Error::MismatchedChannels(_))));
        assert!(CpfScenario::uniform(4, 1, a, b).is_err());
        assert!(CpfScenario::uniform(1, 1, a, a).is_err());
    }

    #[test]
    fn zero_probes_is_random_guessing() {
        let bg = PhaseInsensitiveChannel::thermal(0.9, 3.0).unwrap();
        let tg = PhaseInsensitiveChannel::thermal(0.9, 1.0).unwrap();
        for m in [2usize, 3, 9, 100] {
            let s = CpfScenario::uniform(m, 0, bg, tg).unwrap();
            let b = error_bounds(&s).unwrap();
            let mf = m as f64;
            for lo in [b.quantum_lower, b.classical_lower] {
                assert_relative_eq!(lo.value(), (mf - 1.0) / (2.0 * mf), epsilon = 1e-15);
            }
            for up in [b.quantum_upper, b.classical_upper] {
                assert_relative_eq!(up.value(), (mf - 1.0) / mf, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn identical_channels_never_improve() {
        let ch = PhaseInsensitiveChannel::thermal(0.9, 3.0).unwrap();
        let s = CpfScenario::uniform(5, 40, ch, ch).unwrap();
        assert!(s.is_degenerate());
        let b = error_bounds(&s).unwrap();
        assert_relative_eq!(b.quantum_lower.value(), 0.4, epsilon = 1e-15);
        assert_relative_eq!(b.quantum_upper.value(), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn additive_crossing_at_twenty_probes() {
        let bg = PhaseInsensitiveChannel::additive(0.03).unwrap();
        let tg = PhaseInsensitiveChannel::additive(0.01).unwrap();
        let s = CpfScenario::uniform(100, 20, bg, tg).unwrap();
        let b = error_bounds(&s).unwrap();
        assert!(b.quantum_upper <= b.classical_lower);
        assert!((b.quantum_upper.value() - 0.314).abs() < 1e-3);
        assert!((b.classical_lower.value() - 0.401).abs() < 1e-3);
    }

    #[test]
    fn general_prior_reduces_to_uniform() {
        let bg = PhaseInsensitiveChannel::thermal(0.9, 3.0).unwrap();
        let tg = PhaseInsensitiveChannel::thermal(0.9, 1.0).unwrap();
        let s = CpfScenario::uniform(7, 13, bg, tg).unwrap();
        let g = s.clone().with_prior(vec![1.0 / 7.0; 7]).unwrap();
        let (a, b) = (error_bounds(&s).unwrap(), error_bounds(&g).unwrap());
        assert_relative_eq!(a.quantum_lower.ln(), b.quantum_lower.ln(), epsilon = 1e-12);
        assert_relative_eq!(a.quantum_upper.ln(), b.quantum_upper.ln(), epsilon = 1e-12);
        assert!(s.clone().with_prior(vec![0.5, 0.5]).is_err());
        assert!(s.with_prior(vec![0.2; 7]).is_err());
    }

    #[test]
    fn skewed_prior_caps_at_best_guess() {
        let bg = PhaseInsensitiveChannel::thermal(0.9, 3.0).unwrap();
        let tg = PhaseInsensitiveChannel::thermal(0.9, 1.0).unwrap();
        let s = CpfScenario::uniform(3, 0, bg, tg)
            .unwrap()
            .with_prior(vec![0.8, 0.1, 0.1])
            .unwrap();
        let b = error_bounds(&s).unwrap();
        assert_relative_eq!(b.quantum_upper.value(), 0.2, epsilon = 1e-12);
        assert_relative_eq!(b.quantum_lower.value(), 0.08 + 0.08 + 0.01, epsilon = 1e-12);
    }

    #[test]
    fn underflow_keeps_decibels() {
        let p = LogProb::from_ln(-1000.0);
        assert_eq!(p.value(), 0.0);
        assert_relative_eq!(p.decibels(), -10000.0 / LN_10, epsilon = 1e-9);
        assert_relative_eq!(LogProb::from_prob(0.1).decibels(), -10.0, epsilon = 1e-12);
    }
}
