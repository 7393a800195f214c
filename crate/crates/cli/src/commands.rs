use envloc::advantage::{self, linspace, DEFAULT_REGION_RESOLUTION};
use envloc::bounds::{fid_choi, fid_classical, fid_probe};
use envloc::mle::{self, MleSpec, Truncation};
use envloc::scenarios::{self, ImagingSetup, DEFAULT_QUADRATURE_TOL};
use envloc::simulate::{self, RNG_NAME};
use envloc::{ChannelKind, CpfScenario, LogProb, PhaseInsensitiveChannel};

use crate::config::{parse_probe_range, ChannelClass, Params, Protocol, ScenarioName};
use crate::output::{Cell, Report};
use crate::CliError;

const DEFAULT_A: f64 = 1.0;
const DEFAULT_SEED: u64 = 1;
const DEFAULT_TRIALS: u64 = 100_000;
const DEFAULT_EPS_DIF_MAX: f64 = 10.0;
const DEFAULT_EPS_AV_MAX: f64 = 20.0;
const DEFAULT_MLE_SEARCH_LIMIT: u64 = 5000;

const ADDITIVE_QUANTUM_NOTE: &str =
    "the squeeze-and-count protocol is undefined for additive channels; quantum MLE columns are empty";

/// Defaults every command shares, filled in so the echoed configuration is complete.
pub fn fill_common_defaults(p: &mut Params) {
    let t = Truncation::default();
    p.scenario.get_or_insert(ScenarioName::Custom);
    p.a.get_or_insert(DEFAULT_A);
    p.seed.get_or_insert(DEFAULT_SEED);
    p.quadrature_tol.get_or_insert(DEFAULT_QUADRATURE_TOL);
    p.mle_mass_tol.get_or_insert(t.mass_tol);
    p.mle_term_tol.get_or_insert(t.term_tol);
    p.mle_patience.get_or_insert(t.patience);
}

fn truncation(p: &Params) -> Truncation {
    let d = Truncation::default();
    Truncation {
        mass_tol: p.mle_mass_tol.unwrap_or(d.mass_tol),
        term_tol: p.mle_term_tol.unwrap_or(d.term_tol),
        patience: p.mle_patience.unwrap_or(d.patience),
    }
}

fn positive(value: f64, flag: &str) -> Result<f64, CliError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(CliError::Usage(format!("--{flag} must be positive and finite, got {value}")))
    }
}

/// Builds the scenario named by `--scenario`, writing any defaults back into `p`.
fn scenario(p: &mut Params) -> Result<CpfScenario, CliError> {
    let name = p.scenario.unwrap_or(ScenarioName::Custom);
    match name {
        ScenarioName::Imaging => {
            let d = ImagingSetup::default();
            let setup = ImagingSetup {
                area: *p.area.get_or_insert(d.area),
                solid_angle: *p.solid_angle.get_or_insert(d.solid_angle),
                pulse_duration: *p.pulse_duration.get_or_insert(d.pulse_duration),
                wavelength: *p.wavelength.get_or_insert(d.wavelength),
                bandwidth: *p.bandwidth.get_or_insert(d.bandwidth),
                tau: *p.tau.get_or_insert(d.tau),
                positions: *p.m.get_or_insert(d.positions),
                t_target: *p.temp_t.get_or_insert(d.t_target),
                t_background: *p.temp_b.get_or_insert(d.t_background),
            };
            for (v, flag) in [
                (setup.area, "area"),
                (setup.solid_angle, "solid-angle"),
                (setup.pulse_duration, "pulse-duration"),
                (setup.wavelength, "wavelength"),
                (setup.bandwidth, "bandwidth"),
                (setup.t_target, "temp-t"),
                (setup.t_background, "temp-b"),
            ] {
                positive(v, flag)?;
            }
            let tol = p.quadrature_tol.unwrap_or(DEFAULT_QUADRATURE_TOL);
            Ok(scenarios::imaging_scenario_with_tol(&setup, positive(tol, "quadrature-tol")?)?)
        }
        ScenarioName::Eavesdropper => {
            let ctx = "for --scenario eavesdropper";
            let tau = Params::require(p.tau, "tau", ctx)?;
            let excess_t = Params::require(p.excess_t, "excess-t", ctx)?;
            let excess_b = Params::require(p.excess_b, "excess-b", ctx)?;
            let m = Params::require(p.m, "m", ctx)?;
            Ok(scenarios::eavesdropper_scenario(tau, excess_b, excess_t, m)?)
        }
        ScenarioName::Additive => {
            let ctx = "for --scenario additive";
            let nu_t = Params::require(p.nu_t, "nu-t", ctx)?;
            let nu_b = Params::require(p.nu_b, "nu-b", ctx)?;
            let m = Params::require(p.m, "m", ctx)?;
            p.tau.get_or_insert(1.0);
            Ok(scenarios::additive_scenario(nu_t, nu_b, m)?)
        }
        ScenarioName::Custom => {
            let ctx = "for --scenario custom";
            let tau = Params::require(p.tau, "tau", ctx)?;
            let m = Params::require(p.m, "m", ctx)?;
            let (background, target) = match (p.eps_t, p.eps_b, p.nu_t, p.nu_b) {
                (Some(et), Some(eb), None, None) => {
                    let kind = channel_kind(p, tau)?;
                    let nu = |eps: f64| eps * (1.0 - tau).abs();
                    if kind == ChannelKind::Additive {
                        return Err(CliError::Usage("additive channels take --nu-t/--nu-b, not --eps-t/--eps-b".into()));
                    }
                    for (eps, flag) in [(et, "eps-t"), (eb, "eps-b")] {
                        if !(eps >= 0.5) {
                            return Err(CliError::Usage(format!("--{flag} must be >= 1/2, got {eps}")));
                        }
                    }
                    (PhaseInsensitiveChannel::new(kind, tau, nu(eb))?, PhaseInsensitiveChannel::new(kind, tau, nu(et))?)
                }
                (None, None, Some(nt), Some(nb)) => {
                    let kind = channel_kind(p, tau)?;
                    (PhaseInsensitiveChannel::new(kind, tau, nb)?, PhaseInsensitiveChannel::new(kind, tau, nt)?)
                }
                _ => {
                    return Err(CliError::Usage(format!(
                        "exactly one of --eps-t/--eps-b or --nu-t/--nu-b is required {ctx}"
                    )))
                }
            };
            Ok(CpfScenario::uniform(m, 1, background, target)?)
        }
    }
}

/// `--channel` if given (the library then checks it against `tau`), else inferred from `tau`.
fn channel_kind(p: &mut Params, tau: f64) -> Result<ChannelKind, CliError> {
    let class = match p.channel {
        Some(c) => c,
        None if tau == 1.0 => ChannelClass::Additive,
        None if tau > 1.0 => ChannelClass::Amplifier,
        None => ChannelClass::Loss,
    };
    p.channel = Some(class);
    Ok(match class {
        ChannelClass::Loss => ChannelKind::Loss,
        ChannelClass::Amplifier => ChannelKind::Amplifier,
        ChannelClass::Additive => ChannelKind::Additive,
    })
}

fn probe_list(p: &Params) -> Result<Vec<u64>, CliError> {
    let spec = p
        .probes
        .as_deref()
        .ok_or_else(|| CliError::Usage("--probes (alias --M) is required".into()))?;
    parse_probe_range(spec)
}

fn single_probe(p: &mut Params) -> Result<u64, CliError> {
    let spec = p.probes.get_or_insert_with(|| "1".into()).clone();
    match parse_probe_range(&spec)?.as_slice() {
        [k] => Ok(*k),
        _ => Err(CliError::Usage(format!("this command takes a single probe count, got {spec:?}"))),
    }
}

fn log_cells(v: Option<LogProb>) -> [Cell; 2] {
    [v.map(LogProb::value).into(), v.map(LogProb::decibels).into()]
}

fn fidelity_values(scen: &CpfScenario, a: f64) -> Result<(f64, f64, f64), CliError> {
    let (b, t) = (scen.background(), scen.target());
    Ok((fid_probe(b, t, a)?, fid_choi(b, t)?, fid_classical(b, t)?))
}

pub fn fidelity(p: &mut Params) -> Result<Report, CliError> {
    let scen = scenario(p)?;
    let a = p.a.unwrap_or(DEFAULT_A);
    let (finite, choi, classical) = fidelity_values(&scen, a)?;
    Ok(Report::key_values(
        "fidelity",
        vec![
            ("fidelity_finite_a", finite.into()),
            ("fidelity_choi", choi.into()),
            ("fidelity_classical", classical.into()),
        ],
    ))
}

pub fn bounds(p: &mut Params) -> Result<Report, CliError> {
    let scen = scenario(p)?;
    let probes = probe_list(p)?;
    let mut report = Report::new(
        "bounds",
        vec![
            "M",
            "quantum_lower_p",
            "quantum_lower_db",
            "quantum_upper_p",
            "quantum_upper_db",
            "classical_lower_p",
            "classical_lower_db",
            "classical_upper_p",
            "classical_upper_db",
        ],
    );
    for (k, b) in scenarios::bounds_curve(&scen, &probes)? {
        let mut row = vec![Cell::Int(k)];
        for v in [b.quantum_lower, b.quantum_upper, b.classical_lower, b.classical_upper] {
            row.extend(log_cells(Some(v)));
        }
        report.push(row);
    }
    Ok(report)
}

pub fn advantage(p: &mut Params) -> Result<Report, CliError> {
    let scen = scenario(p)?;
    let limit = *p.mle_search_limit.get_or_insert(DEFAULT_MLE_SEARCH_LIMIT);
    let trunc = truncation(p);
    let (b, t) = (scen.background(), scen.target());
    let fc = fid_classical(b, t)?;
    let fq = fid_choi(b, t)?;
    let condition = advantage::advantage_condition(b, t)?;
    let fidelity_probes = advantage::fidelity_advantage_probes(&scen)?;
    let mut report = Report::key_values(
        "advantage",
        vec![
            ("fidelity_classical", fc.into()),
            ("fidelity_choi", fq.into()),
            ("condition_holds", condition.into()),
            ("fidelity_probes", fidelity_probes.into()),
        ],
    );
    let mle_probes = if scen.kind() == ChannelKind::Additive {
        report.warnings.push("the squeeze-and-count protocol is undefined for additive channels; mle_probes left empty".into());
        None
    } else if scen.is_degenerate() || limit == 0 {
        None
    } else {
        let found = advantage::mle_advantage_probes_with(&scen, limit, &trunc)?;
        if found.is_none() {
            report.warnings.push(format!("no MLE crossing up to {limit} probes"));
        }
        found
    };
    report.push(vec![Cell::Text("mle_probes".into()), mle_probes.into()]);
    Ok(report)
}

pub fn region(p: &mut Params) -> Result<Report, CliError> {
    let tau = Params::require(p.tau, "tau", "for region scans")?;
    let res = *p.resolution.get_or_insert(DEFAULT_REGION_RESOLUTION);
    let dif_max = positive(*p.eps_dif_max.get_or_insert(DEFAULT_EPS_DIF_MAX), "eps-dif-max")?;
    let av_max = *p.eps_av_max.get_or_insert(DEFAULT_EPS_AV_MAX);
    if res < 2 {
        return Err(CliError::Usage(format!("--resolution must be at least 2, got {res}")));
    }
    if !(av_max > 0.5) || !av_max.is_finite() {
        return Err(CliError::Usage(format!("--eps-av-max must exceed 1/2, got {av_max}")));
    }
    let region = advantage::advantage_region(tau, &linspace(0.0, dif_max, res), &linspace(0.5, av_max, res))?;
    let mut report = Report::new("region", vec!["eps_dif", "eps_av", "flag"]);
    for (i, &d) in region.eps_dif.iter().enumerate() {
        for (j, &av) in region.eps_av.iter().enumerate() {
            report.push(vec![d.into(), av.into(), Cell::Signed(region.cells[i][j].code().into())]);
        }
    }
    report.notes.push("flag: 1 advantage, 0 no advantage, -1 infeasible (an eps below 1/2)".into());
    Ok(report)
}

/// The MLE spec for `--protocol`, or the explicit `--nbar-t/--nbar-b` pair when given.
fn mle_spec(p: &mut Params, probes: u64) -> Result<MleSpec, CliError> {
    if p.nbar_t.is_some() || p.nbar_b.is_some() {
        let ctx = "with explicit mean photon numbers";
        let nt = Params::require(p.nbar_t, "nbar-t", ctx)?;
        let nb = Params::require(p.nbar_b, "nbar-b", ctx)?;
        let m = Params::require(p.m, "m", ctx)?;
        return Ok(MleSpec::new(nt, nb, m, probes)?);
    }
    let scen = scenario(p)?.with_probes(probes);
    let default = if scen.kind() == ChannelKind::Additive { Protocol::Classical } else { Protocol::Quantum };
    match *p.protocol.get_or_insert(default) {
        Protocol::Quantum => Ok(mle::quantum_spec(&scen)?),
        Protocol::Classical => Ok(mle::classical_spec(&scen)?),
        Protocol::Both => Err(CliError::Usage("--protocol must be quantum or classical here".into())),
    }
}

pub fn mle(p: &mut Params) -> Result<Report, CliError> {
    let probes = probe_list(p)?;
    let trunc = truncation(p);
    let base = mle_spec(p, 1)?;
    let mut report = Report::new("mle", vec!["M", "error_p", "error_db", "truncation_error", "terms"]);
    for k in probes {
        if k == 0 {
            return Err(CliError::Usage("probe counts must be at least 1 for mle".into()));
        }
        let spec = MleSpec::new(base.nbar_target(), base.nbar_background(), base.positions(), k)?;
        let ev = mle::mle_error_with(&spec, &trunc)?;
        let mut row = vec![Cell::Int(k)];
        row.extend(log_cells(Some(LogProb::from_prob(ev.error))));
        row.push(ev.truncation_error.into());
        row.push(Cell::Int(ev.terms));
        report.push(row);
    }
    Ok(report)
}

pub fn simulate(p: &mut Params) -> Result<Report, CliError> {
    let trials = *p.trials.get_or_insert(DEFAULT_TRIALS);
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let seed = p.seed.unwrap_or(DEFAULT_SEED);
    let probes = single_probe(p)?;
    if probes == 0 {
        return Err(CliError::Usage("--probes must be at least 1 for simulate".into()));
    }
    let spec = mle_spec(p, probes)?;
    let analytic = mle::mle_error_with(&spec, &truncation(p))?.error;
    let sim = simulate::run_mle_trials(&spec, trials, seed)?;
    Ok(Report::key_values(
        "simulate",
        vec![
            ("trials", sim.trials.into()),
            ("successes", sim.successes.into()),
            ("error_estimate", sim.error_estimate.into()),
            ("standard_error", sim.standard_error.into()),
            ("analytic_error", analytic.into()),
            ("z_score", sim.z_score(analytic).into()),
            ("seed", sim.seed.into()),
            ("rng", RNG_NAME.into()),
        ],
    ))
}

pub fn figure(p: &mut Params) -> Result<Report, CliError> {
    let scen = scenario(p)?;
    let probes = probe_list(p)?;
    let curve = scenarios::figure_curve_with(&scen, &probes, &truncation(p))?;
    let mut report = Report::new(
        "figure",
        vec![
            "M",
            "quantum_lower_p",
            "quantum_lower_db",
            "quantum_upper_p",
            "quantum_upper_db",
            "classical_lower_p",
            "classical_lower_db",
            "classical_upper_p",
            "classical_upper_db",
            "quantum_mle_p",
            "quantum_mle_db",
            "classical_mle_p",
            "classical_mle_db",
        ],
    );
    if scen.kind() == ChannelKind::Additive {
        report.warnings.push(ADDITIVE_QUANTUM_NOTE.into());
    }
    for row in &curve.rows {
        let b = row.bounds;
        let mut cells = vec![Cell::Int(row.probes)];
        for v in [b.quantum_lower, b.quantum_upper, b.classical_lower, b.classical_upper] {
            cells.extend(log_cells(Some(v)));
        }
        cells.extend(log_cells(row.quantum_mle));
        cells.extend(log_cells(row.classical_mle));
        report.push(cells);
    }
    Ok(report)
}
