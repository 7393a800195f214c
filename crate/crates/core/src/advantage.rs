//! When can entangled probing provably beat every classical strategy?
//!
//! Advantage is certified once the quantum upper bound falls to or below the
//! classical lower bound. That happens for some finite number of probes iff
//! `F_class^2 > F_choi`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{error_bounds_from_fidelities, fid_choi, fid_classical, CpfScenario};
use crate::error::{domain, Result};
use crate::gaussian::{ChannelKind, PhaseInsensitiveChannel, SHOT_NOISE};
use crate::mle::{self, Truncation};

/// Default number of grid points per axis for region scans.
pub const DEFAULT_REGION_RESOLUTION: usize = 200;

/// `F_class^2 > F_choi`, compared strictly; boundary points count as no advantage.
pub fn advantage_condition(background: &PhaseInsensitiveChannel, target: &PhaseInsensitiveChannel) -> Result<bool> {
    let fc = fid_classical(background, target)?;
    let fq = fid_choi(background, target)?;
    Ok(fc * fc > fq)
}

fn fidelity_crossing(scen: &CpfScenario, fq: f64, fc: f64, probes: u64) -> bool {
    let b = error_bounds_from_fidelities(&scen.clone().with_probes(probes), fq, fc);
    b.quantum_upper.ln() <= b.classical_lower.ln()
}

/// Smallest number of probes at which the quantum upper bound is at or below the
/// classical lower bound, or `None` if that never happens.
///
/// The closed form `ceil(ln(2m) / (2 ln(F_class^2 / F_choi)))` assumes a uniform
/// prior; it is confirmed (and if necessary corrected) by comparing the bounds
/// directly at the candidate and its predecessor.
pub fn fidelity_advantage_probes(scen: &CpfScenario) -> Result<Option<u64>> {
    let fc = fid_classical(scen.background(), scen.target())?;
    let fq = fid_choi(scen.background(), scen.target())?;
    if !(fc * fc > fq) {
        return Ok(None);
    }
    let gain = 2.0 * (fc * fc / fq).ln();
    let m = scen.positions() as f64;
    let estimate = ((2.0 * m).ln() / gain).ceil();
    if !estimate.is_finite() || estimate > u64::MAX as f64 / 4.0 {
        return Ok(None);
    }
    let mut probes = estimate.max(1.0) as u64;
    while !fidelity_crossing(scen, fq, fc, probes) {
        probes += 1;
    }
    while probes > 1 && fidelity_crossing(scen, fq, fc, probes - 1) {
        probes -= 1;
    }
    Ok(Some(probes))
}

/// Smallest number of probes for which the entangled photon-counting protocol's exact
/// error drops strictly below the classical lower bound, searched up to `max_probes`.
///
/// Only defined for loss and amplifier channels.
pub fn mle_advantage_probes(scen: &CpfScenario, max_probes: u64) -> Result<Option<u64>> {
    mle_advantage_probes_with(scen, max_probes, &Truncation::default())
}

pub fn mle_advantage_probes_with(scen: &CpfScenario, max_probes: u64, trunc: &Truncation) -> Result<Option<u64>> {
    let fc = fid_classical(scen.background(), scen.target())?;
    let fq = fid_choi(scen.background(), scen.target())?;
    for probes in 1..=max_probes {
        let s = scen.clone().with_probes(probes);
        let lower = error_bounds_from_fidelities(&s, fq, fc).classical_lower;
        let err = mle::mle_error_with(&mle::quantum_spec(&s)?, trunc)?.error;
        if err.ln() < lower.ln() {
            return Ok(Some(probes));
        }
    }
    Ok(None)
}

/// Summary of the advantage analysis for one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvantageReport {
    pub condition_holds: bool,
    pub fidelity_probes: Option<u64>,
    pub mle_probes: Option<u64>,
}

/// Evaluates the advantage condition, the fidelity crossing, and optionally the
/// MLE crossing (searched up to `mle_search_limit`).
pub fn advantage_report(scen: &CpfScenario, mle_search_limit: Option<u64>) -> Result<AdvantageReport> {
    let condition_holds = advantage_condition(scen.background(), scen.target())?;
    let fidelity_probes = fidelity_advantage_probes(scen)?;
    let mle_probes = match mle_search_limit {
        Some(limit) if scen.kind() != ChannelKind::Additive && !scen.is_degenerate() => {
            mle_advantage_probes(scen, limit)?
        }
        _ => None,
    };
    Ok(AdvantageReport { condition_holds, fidelity_probes, mle_probes })
}

/// Threshold on `nu_dif` above which additive channels with mean noise `nu_av`
/// satisfy the advantage condition. `None` means every nonzero difference qualifies.
pub fn additive_advantage_threshold(nu_av: f64) -> Result<Option<f64>> {
    if !(nu_av > 0.0) || !nu_av.is_finite() {
        return domain(format!("mean additive noise must be > 0, got {nu_av}"));
    }
    let v = nu_av;
    let radicand = 32.0 * v.powi(4) - 8.0 * v * v - 8.0 * v - 1.0 - (4.0 * v + 1.0) * (8.0 * v + 1.0).sqrt();
    if radicand < 0.0 {
        return Ok(None);
    }
    Ok(Some(radicand.sqrt() / (2.0 * std::f64::consts::SQRT_2 * v)))
}

/// One cell of an advantage-region scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionCell {
    Advantage,
    NoAdvantage,
    /// `eps_av < (eps_dif + 1) / 2`, so one of the channels would have `eps < 1/2`.
    Infeasible,
}

impl RegionCell {
    /// `1`, `0`, `-1` encoding used in CSV output.
    pub fn code(self) -> i8 {
        match self {
            RegionCell::Advantage => 1,
            RegionCell::NoAdvantage => 0,
            RegionCell::Infeasible => -1,
        }
    }
}

/// Advantage mask over an `(eps_dif, eps_av)` grid; `cells[i][j]` pairs `eps_dif[i]` with `eps_av[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageRegion {
    pub tau: f64,
    pub eps_dif: Vec<f64>,
    pub eps_av: Vec<f64>,
    pub cells: Vec<Vec<RegionCell>>,
}

impl AdvantageRegion {
    pub fn count(&self, cell: RegionCell) -> usize {
        self.cells.iter().flatten().filter(|c| **c == cell).count()
    }
}

fn classify(tau: f64, eps_dif: f64, eps_av: f64) -> Result<RegionCell> {
    if eps_av < 0.5 * (eps_dif + 1.0) {
        return Ok(RegionCell::Infeasible);
    }
    let eps_t = (eps_av + 0.5 * eps_dif).max(SHOT_NOISE);
    let eps_b = (eps_av - 0.5 * eps_dif).max(SHOT_NOISE);
    let bg = PhaseInsensitiveChannel::thermal(tau, eps_b)?;
    let tg = PhaseInsensitiveChannel::thermal(tau, eps_t)?;
    Ok(if advantage_condition(&bg, &tg)? {
        RegionCell::Advantage
    } else {
        RegionCell::NoAdvantage
    })
}

/// Scans the advantage condition for loss (`tau < 1`) or amplifier (`tau > 1`) channels.
pub fn advantage_region(tau: f64, eps_dif: &[f64], eps_av: &[f64]) -> Result<AdvantageRegion> {
    if tau == 1.0 || !(tau >= 0.0) {
        return domain(format!("region scans need thermal channels (tau >= 0, tau != 1), got {tau}"));
    }
    if eps_dif.iter().any(|d| !(*d >= 0.0)) {
        return domain("eps_dif grid values must be >= 0");
    }
    let cells = eps_dif
        .par_iter()
        .map(|&d| eps_av.iter().map(|&av| classify(tau, d, av)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(AdvantageRegion { tau, eps_dif: eps_dif.to_vec(), eps_av: eps_av.to_vec(), cells })
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}
