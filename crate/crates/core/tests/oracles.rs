//! Independent oracles: covariance-matrix fidelities, discrete convolution, and
//! Monte Carlo sampling.

use envloc::bounds::{fid_additive, fid_additive_choi, fid_classical, fid_thermal, fid_thermal_choi};
use envloc::gaussian::gaussian_fidelity;
use envloc::mle::{mle_error, thermal_pmf, thermal_sum_pmf, MleSpec};
use envloc::simulate::run_mle_trials;
use envloc::{PhaseInsensitiveChannel, TwoModeCovariance};

const TAUS: [f64; 6] = [0.1, 0.5, 0.9, 1.0, 1.5, 2.0];
const SQUEEZING: [f64; 4] = [0.5, 1.0, 5.0, 50.0];
const EPS_PAIRS: [(f64, f64); 5] = [(0.5, 0.7), (1.0, 3.0), (2.5, 2.0), (21.0, 23.2), (0.6, 8.0)];
const NU_PAIRS: [(f64, f64); 4] = [(0.01, 0.03), (0.2, 0.1), (1.0, 4.0), (5.0, 5.5)];

fn output(input: &TwoModeCovariance, ch: &PhaseInsensitiveChannel) -> TwoModeCovariance {
    input.apply_channel(ch)
}

fn cm_fidelity(input: &TwoModeCovariance, bg: &PhaseInsensitiveChannel, tg: &PhaseInsensitiveChannel) -> f64 {
    gaussian_fidelity(&output(input, tg), &output(input, bg)).unwrap()
}

#[test]
fn finite_squeezing_fidelities_match_covariance_matrices() {
    let mut worst = 0.0f64;
    for tau in TAUS {
        for a in SQUEEZING {
            let probe = TwoModeCovariance::tmsv(a).unwrap();
            if tau == 1.0 {
                for (nt, nb) in NU_PAIRS {
                    let bg = PhaseInsensitiveChannel::additive(nb).unwrap();
                    let tg = PhaseInsensitiveChannel::additive(nt).unwrap();
                    let d = (fid_additive(nt, nb, a).unwrap() - cm_fidelity(&probe, &bg, &tg)).abs();
                    assert!(d < 1e-9, "additive nu=({nt},{nb}) a={a}: {d:e}");
                    worst = worst.max(d);
                }
            } else {
                for (et, eb) in EPS_PAIRS {
                    let bg = PhaseInsensitiveChannel::thermal(tau, eb).unwrap();
                    let tg = PhaseInsensitiveChannel::thermal(tau, et).unwrap();
                    let d = (fid_thermal(tau, et, eb, a).unwrap() - cm_fidelity(&probe, &bg, &tg)).abs();
                    assert!(d < 1e-9, "tau={tau} eps=({et},{eb}) a={a}: {d:e}");
                    worst = worst.max(d);
                }
            }
        }
    }
    println!("worst finite-squeezing deviation {worst:e}");
}

#[test]
fn classical_fidelity_matches_vacuum_probe() {
    let vacuum = TwoModeCovariance::vacuum();
    for tau in TAUS {
        let pairs: Vec<(PhaseInsensitiveChannel, PhaseInsensitiveChannel)> = if tau == 1.0 {
            NU_PAIRS
                .iter()
                .map(|&(t, b)| (PhaseInsensitiveChannel::additive(b).unwrap(), PhaseInsensitiveChannel::additive(t).unwrap()))
                .collect()
        } else {
            EPS_PAIRS
                .iter()
                .map(|&(t, b)| {
                    (PhaseInsensitiveChannel::thermal(tau, b).unwrap(), PhaseInsensitiveChannel::thermal(tau, t).unwrap())
                })
                .collect()
        };
        for (bg, tg) in pairs {
            let d = (fid_classical(&bg, &tg).unwrap() - cm_fidelity(&vacuum, &bg, &tg)).abs();
            assert!(d < 1e-9, "tau={tau} bg={bg:?} tg={tg:?}: {d:e}");
        }
    }
}

// A zero-transmissivity channel outputs its environment, so the vacuum-probe
// fidelity there is the overlap of the two thermal environments.
#[test]
fn choi_fidelity_matches_environment_overlap() {
    let vacuum = TwoModeCovariance::vacuum();
    for (et, eb) in EPS_PAIRS {
        let bg = PhaseInsensitiveChannel::thermal(0.0, eb).unwrap();
        let tg = PhaseInsensitiveChannel::thermal(0.0, et).unwrap();
        let d = (fid_thermal_choi(et, eb).unwrap() - cm_fidelity(&vacuum, &bg, &tg)).abs();
        assert!(d < 1e-9, "eps=({et},{eb}): {d:e}");
    }
}

// The additive Choi fidelity has no finite-energy covariance matrix. Richardson
// extrapolation of the covariance-matrix fidelity in 1/a recovers it.
#[test]
fn additive_choi_is_extrapolated_limit() {
    for (nt, nb) in NU_PAIRS {
        let bg = PhaseInsensitiveChannel::additive(nb).unwrap();
        let tg = PhaseInsensitiveChannel::additive(nt).unwrap();
        let f = |a: f64| cm_fidelity(&TwoModeCovariance::tmsv(a).unwrap(), &bg, &tg);
        let a = 2000.0 / nt.min(nb).min(1.0);
        let (f1, f2, f4) = (f(a), f(2.0 * a), f(4.0 * a));
        let r1 = 2.0 * f2 - f1;
        let r2 = 2.0 * f4 - f2;
        let limit = (4.0 * r2 - r1) / 3.0;
        let d = (fid_additive_choi(nt, nb).unwrap() - limit).abs();
        assert!(d < 1e-7, "nu=({nt},{nb}): {d:e}");
    }
}

#[test]
fn sum_pmf_matches_convolution() {
    let n = 0.7;
    let single: Vec<f64> = (0..=50).map(|k| thermal_pmf(n, k)).collect();
    let convolve = |a: &[f64], b: &[f64]| -> Vec<f64> {
        (0..a.len()).map(|k| (0..=k).map(|j| a[j] * b[k - j]).sum()).collect()
    };
    let triple = convolve(&convolve(&single, &single), &single);
    for (k, expect) in triple.iter().enumerate() {
        let got = thermal_sum_pmf(n, 3, k as u64);
        assert!((got - expect).abs() < 1e-12, "k={k}: {got} vs {expect}");
    }
}

#[test]
fn sum_pmf_normalised() {
    for (n, probes) in [(0.3, 1u64), (2.0, 10), (22.7, 400)] {
        let mut total = 0.0;
        let mut k = 0u64;
        while k < 1_000_000 {
            total += thermal_sum_pmf(n, probes, k);
            k += 1;
            if total > 1.0 - 1e-13 && thermal_sum_pmf(n, probes, k) < 1e-18 {
                break;
            }
        }
        assert!((total - 1.0).abs() < 1e-10, "n={n} M={probes}: {total}");
    }
}

/// (nbar_T, nbar_B, m, M): both orderings, m in {2, 5, 9}.
pub const MC_GRID: [(f64, f64, usize, u64); 12] = [
    (1.0, 0.5, 2, 3),
    (0.5, 1.0, 2, 3),
    (0.2, 0.05, 2, 10),
    (3.0, 4.0, 2, 5),
    (1.5, 1.0, 5, 4),
    (1.0, 1.5, 5, 4),
    (0.1, 0.3, 5, 10),
    (6.0, 4.0, 5, 2),
    (22.7, 20.5, 9, 20),
    (20.5, 22.7, 9, 20),
    (0.8, 0.4, 9, 6),
    (0.05, 0.15, 9, 30),
];

#[test]
fn analytic_mle_matches_monte_carlo() {
    for (i, (nt, nb, m, probes)) in MC_GRID.into_iter().enumerate() {
        let spec = MleSpec::new(nt, nb, m, probes).unwrap();
        let exact = mle_error(&spec).unwrap();
        let sim = run_mle_trials(&spec, 100_000, 1000 + i as u64).unwrap();
        let z = sim.z_score(exact);
        println!("nT={nt} nB={nb} m={m} M={probes}: exact {exact:.5} simulated {:.5} z={z:.2}", sim.error_estimate);
        assert!(z.abs() <= 3.0, "grid point {i}: z={z}");
    }
}
