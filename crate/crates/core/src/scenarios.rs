//! Physical scenarios and figure curves.
//!
//! Three applications are covered: thermal imaging of cold pixels probed through
//! a lossy link, an eavesdropper raising the excess noise on one of several
//! communication lines, and a frequency channel with extra additive noise.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{error_bounds, CpfScenario, ErrorBoundSet, LogProb};
use crate::error::{domain, Error, Result};
use crate::gaussian::{ChannelKind, PhaseInsensitiveChannel};
use crate::mle::{classical_spec, mle_error_with, quantum_spec, MleSpec, Truncation};
use crate::quadrature;

/// Relative tolerance for the Planck integral.
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-10;

/// CODATA 2018 exact values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Planck constant, J s.
    pub h: f64,
    /// Boltzmann constant, J/K.
    pub k: f64,
    /// Speed of light, m/s.
    pub c_light: f64,
}

pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
    h: 6.626_070_15e-34,
    k: 1.380_649e-23,
    c_light: 299_792_458.0,
};

/// One detector pixel viewing a blackbody.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlackbodyPixel {
    /// m^2
    pub area: f64,
    /// sr
    pub solid_angle: f64,
    /// s
    pub pulse_duration: f64,
    /// Hz
    pub f_min: f64,
    /// Hz
    pub f_max: f64,
    /// K
    pub temperature: f64,
}

impl BlackbodyPixel {
    fn validate(&self) -> Result<()> {
        let positive = [self.area, self.solid_angle, self.pulse_duration, self.f_min, self.f_max, self.temperature];
        if positive.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
            return domain(format!("blackbody pixel parameters must be finite and > 0: {self:?}"));
        }
        if !(self.f_min < self.f_max) {
            return domain(format!("empty band: f_min={} >= f_max={}", self.f_min, self.f_max));
        }
        Ok(())
    }
}

/// Shortest bandwidth compatible with a pulse of duration `t` (time-bandwidth product 1/4).
pub fn transform_limited_bandwidth(pulse_duration: f64) -> f64 {
    0.25 / pulse_duration
}

/// Band of width `bandwidth` centred on the frequency of `wavelength`.
pub fn centred_band(wavelength: f64, bandwidth: f64) -> (f64, f64) {
    let f0 = CODATA_2018.c_light / wavelength;
    (f0 - 0.5 * bandwidth, f0 + 0.5 * bandwidth)
}

/// Mean number of thermal photons collected by the pixel during one pulse,
/// `A Sigma t int 2 f^2 / (c^2 (e^{hf/kT} - 1)) df`.
pub fn blackbody_induced_noise(p: &BlackbodyPixel) -> Result<f64> {
    blackbody_induced_noise_with_tol(p, DEFAULT_QUADRATURE_TOL)
}

pub fn blackbody_induced_noise_with_tol(p: &BlackbodyPixel, rel_tol: f64) -> Result<f64> {
    p.validate()?;
    if !(rel_tol > 0.0) {
        return domain(format!("quadrature tolerance must be > 0, got {rel_tol}"));
    }
    let integral = quadrature::integrate(planck_integrand(p.temperature), p.f_min, p.f_max, rel_tol)?;
    Ok(p.area * p.solid_angle * p.pulse_duration * integral.value)
}

fn planck_integrand(temperature: f64) -> impl Fn(f64) -> f64 {
    let PhysicalConstants { h, k, c_light } = CODATA_2018;
    move |f: f64| 2.0 * f * f / (c_light * c_light * (h * f / (k * temperature)).exp_m1())
}

/// Imaging setup: `m` pixels behind a lossy link, one colder than the rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImagingSetup {
    pub area: f64,
    pub solid_angle: f64,
    pub pulse_duration: f64,
    pub wavelength: f64,
    pub bandwidth: f64,
    pub tau: f64,
    pub positions: usize,
    pub t_target: f64,
    pub t_background: f64,
}

impl Default for ImagingSetup {
    /// 4000 um^2 pixels, hemisphere collection, 100 ns pulses at 1 mm with a
    /// transform-limited band, 99% transmission, nine pixels, 247.56 K target
    /// among 272.76 K background.
    fn default() -> Self {
        let pulse_duration = 100e-9;
        Self {
            area: 4000e-12,
            solid_angle: 2.0 * std::f64::consts::PI,
            pulse_duration,
            wavelength: 1e-3,
            bandwidth: transform_limited_bandwidth(pulse_duration),
            tau: 0.99,
            positions: 9,
            t_target: 247.56,
            t_background: 272.76,
        }
    }
}

impl ImagingSetup {
    pub fn pixel(&self, temperature: f64) -> BlackbodyPixel {
        let (f_min, f_max) = centred_band(self.wavelength, self.bandwidth);
        BlackbodyPixel {
            area: self.area,
            solid_angle: self.solid_angle,
            pulse_duration: self.pulse_duration,
            f_min,
            f_max,
            temperature,
        }
    }
}

/// Loss channels whose induced noise is the blackbody photon number of each pixel.
pub fn imaging_scenario(setup: &ImagingSetup) -> Result<CpfScenario> {
    imaging_scenario_with_tol(setup, DEFAULT_QUADRATURE_TOL)
}

pub fn imaging_scenario_with_tol(setup: &ImagingSetup, rel_tol: f64) -> Result<CpfScenario> {
    if !(setup.tau >= 0.0 && setup.tau < 1.0) {
        return domain(format!("imaging needs a lossy link, 0 <= tau < 1, got {}", setup.tau));
    }
    let channel = |t: f64| -> Result<PhaseInsensitiveChannel> {
        let nu = blackbody_induced_noise_with_tol(&setup.pixel(t), rel_tol)?;
        PhaseInsensitiveChannel::loss(setup.tau, nu)
    };
    CpfScenario::uniform(setup.positions, 1, channel(setup.t_background)?, channel(setup.t_target)?)
}

/// Environment photon number for an excess noise `excess = (1 - tau) nbar / tau`.
pub fn excess_noise_photons(tau: f64, excess: f64) -> f64 {
    excess * tau / (1.0 - tau)
}

/// Lossy lines where the target line carries excess noise `excess_t` and the others `excess_b`.
pub fn eavesdropper_scenario(tau: f64, excess_b: f64, excess_t: f64, positions: usize) -> Result<CpfScenario> {
    if !(tau > 0.0 && tau < 1.0) {
        return domain(format!("eavesdropper lines need 0 < tau < 1, got {tau}"));
    }
    if !(excess_b >= 0.0 && excess_t >= 0.0) || !excess_b.is_finite() || !excess_t.is_finite() {
        return domain("excess noise must be finite and >= 0");
    }
    let channel = |excess: f64| {
        let nbar = excess_noise_photons(tau, excess);
        PhaseInsensitiveChannel::loss(tau, (1.0 - tau) * (nbar + 0.5))
    };
    CpfScenario::uniform(positions, 1, channel(excess_b)?, channel(excess_t)?)
}

/// Additive-noise channels, `tau = 1`.
pub fn additive_scenario(nu_t: f64, nu_b: f64, positions: usize) -> Result<CpfScenario> {
    if !(nu_t > 0.0 && nu_b > 0.0) {
        return domain(format!("additive noise must be > 0, got nu_T={nu_t}, nu_B={nu_b}"));
    }
    CpfScenario::uniform(
        positions,
        1,
        PhaseInsensitiveChannel::additive(nu_b)?,
        PhaseInsensitiveChannel::additive(nu_t)?,
    )
}

/// One probe count of a figure curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FigureRow {
    pub probes: u64,
    pub bounds: ErrorBoundSet,
    /// `None` for additive channels or a non-uniform prior.
    pub quantum_mle: Option<LogProb>,
    /// `None` for a non-uniform prior.
    pub classical_mle: Option<LogProb>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureCurve {
    pub scenario: CpfScenario,
    pub rows: Vec<FigureRow>,
}

impl FigureCurve {
    /// First row where `pred` holds.
    pub fn first_where(&self, pred: impl Fn(&FigureRow) -> bool) -> Option<u64> {
        self.rows.iter().find(|r| pred(r)).map(|r| r.probes)
    }
}

fn figure_row(scen: &CpfScenario, probes: u64, trunc: &Truncation) -> Result<FigureRow> {
    let s = scen.clone().with_probes(probes);
    let bounds = error_bounds(&s)?;
    let guess = (s.positions() as f64 - 1.0) / s.positions() as f64;
    let mle = |spec: fn(&CpfScenario) -> Result<MleSpec>| -> Result<Option<LogProb>> {
        if !s.has_uniform_prior() {
            Ok(None)
        } else if probes == 0 || s.is_degenerate() {
            Ok(Some(LogProb::from_prob(guess)))
        } else {
            let ev = mle_error_with(&spec(&s)?, trunc)?;
            Ok(Some(LogProb::from_prob(ev.error)))
        }
    };
    let quantum_mle = if s.kind() == ChannelKind::Additive { None } else { mle(quantum_spec)? };
    let classical_mle = mle(classical_spec)?;
    Ok(FigureRow { probes, bounds, quantum_mle, classical_mle })
}

/// Bounds and MLE errors for each probe count in `probes` (strictly increasing).
pub fn figure_curve(scen: &CpfScenario, probes: &[u64]) -> Result<FigureCurve> {
    figure_curve_with(scen, probes, &Truncation::default())
}

pub fn figure_curve_with(scen: &CpfScenario, probes: &[u64], trunc: &Truncation) -> Result<FigureCurve> {
    if probes.is_empty() {
        return domain("empty probe range");
    }
    if probes.windows(2).any(|w| w[0] >= w[1]) {
        return domain("probe counts must be strictly increasing");
    }
    let rows = probes
        .par_iter()
        .map(|&k| figure_row(scen, k, trunc))
        .collect::<Result<Vec<_>>>()?;
    Ok(FigureCurve { scenario: scen.clone(), rows })
}

/// Like [`figure_curve`] but without the MLE columns, which dominate the cost.
pub fn bounds_curve(scen: &CpfScenario, probes: &[u64]) -> Result<Vec<(u64, ErrorBoundSet)>> {
    probes
        .iter()
        .map(|&k| Ok((k, error_bounds(&scen.clone().with_probes(k))?)))
        .collect()
}

/// Environment variance `eps` of a loss or amplifier channel.
pub fn channel_epsilon(ch: &PhaseInsensitiveChannel) -> Result<f64> {
    ch.epsilon()
        .ok_or_else(|| Error::Unsupported("additive channels have no environment variance".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advantage::{additive_advantage_threshold, advantage_condition};

    fn eps(s: &CpfScenario) -> (f64, f64) {
        (channel_epsilon(s.target()).unwrap(), channel_epsilon(s.background()).unwrap())
    }

    #[test]
    fn cold_pixels_are_dark() {
        let setup = ImagingSetup::default();
        let nu = blackbody_induced_noise(&setup.pixel(1e-3)).unwrap();
        assert!(nu < 1e-100);
    }

    #[test]
    fn default_imaging_matches_quoted_values() {
        let (et, eb) = eps(&imaging_scenario(&ImagingSetup::default()).unwrap());
        assert!((eb / 23.2 - 1.0).abs() < 0.02, "{eb}");
        assert!((et / 21.0 - 1.0).abs() < 0.02, "{et}");
    }

    #[test]
    fn bandwidth() {
        assert!((transform_limited_bandwidth(100e-9) - 2.5e6).abs() < 1e-6);
        let (lo, hi) = centred_band(1e-3, 2.5e6);
        assert!((hi - lo - 2.5e6).abs() < 1e-3);
    }

    #[test]
    fn quadrature_converged() {
        let p = ImagingSetup::default().pixel(272.76);
        let f = planck_integrand(p.temperature);
        let coarse = quadrature::integrate_fixed(&f, p.f_min, p.f_max, 1);
        let fine = quadrature::integrate_fixed(&f, p.f_min, p.f_max, 2);
        assert!(((coarse - fine) / fine).abs() < 1e-10);
        let wide = BlackbodyPixel { f_min: 1e9, f_max: 5e12, ..p };
        let a = blackbody_induced_noise_with_tol(&wide, 1e-10).unwrap();
        let b = blackbody_induced_noise_with_tol(&wide, 1e-13).unwrap();
        assert!(((a - b) / b).abs() < 1e-10);
    }

    #[test]
    fn imaging_rejects_unphysical() {
        let equal = ImagingSetup { t_target: 260.0, t_background: 260.0, ..Default::default() };
        assert!(imaging_scenario(&equal).unwrap().is_degenerate());
        let warm = ImagingSetup { tau: 0.2, ..Default::default() };
        assert!(imaging_scenario(&warm).is_err());
        let amp = ImagingSetup { tau: 1.5, ..Default::default() };
        assert!(imaging_scenario(&amp).is_err());
    }

    #[test]
    fn eavesdropper() {
        assert!((excess_noise_photons(0.1, 0.1) - 1.0 / 90.0).abs() < 1e-15);
        let s = eavesdropper_scenario(0.1, 0.01, 0.1, 4).unwrap();
        assert!(!advantage_condition(s.background(), s.target()).unwrap());
        let pure = eavesdropper_scenario(0.3, 0.0, 0.1, 2).unwrap();
        assert!((pure.background().nu() - 0.35).abs() < 1e-15);
        assert!(eavesdropper_scenario(1.0, 0.0, 0.1, 2).is_err());
    }

    #[test]
    fn additive_threshold_consistency() {
        let nu_av = 2.0;
        let th = additive_advantage_threshold(nu_av).unwrap().unwrap();
        for (d, expect) in [(th * 0.98, false), (th * 1.02, true)] {
            let s = additive_scenario(nu_av + d / 2.0, nu_av - d / 2.0, 3).unwrap();
            assert_eq!(advantage_condition(s.background(), s.target()).unwrap(), expect);
        }
        assert!(additive_scenario(0.1, 0.1, 2).unwrap().is_degenerate());
        assert!(additive_scenario(0.0, 0.1, 2).is_err());
    }

    #[test]
    fn curve_rows() {
        let s = additive_scenario(0.01, 0.03, 100).unwrap();
        let c = figure_curve(&s, &[0, 19, 20]).unwrap();
        let guess = 0.99f64;
        let r0 = &c.rows[0];
        assert!((r0.bounds.quantum_upper.value() - guess).abs() < 1e-12);
        assert!((r0.classical_mle.unwrap().value() - guess).abs() < 1e-12);
        assert!(r0.quantum_mle.is_none());
        let crosses = |r: &FigureRow| r.bounds.quantum_upper.ln() <= r.bounds.classical_lower.ln();
        assert_eq!(c.first_where(crosses), Some(20));
        assert!(figure_curve(&s, &[]).is_err());
        assert!(figure_curve(&s, &[3, 3]).is_err());
    }
}
