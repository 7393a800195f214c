//! Covariance-matrix algebra for one- and two-mode Gaussian states.
//!
//! Quadratures are ordered `(x1, p1, x2, p2)` and the vacuum has covariance
//! `I/2`. All states have zero first moments.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::mle::CompensatedSum;

/// Vacuum quadrature variance.
pub const SHOT_NOISE: f64 = 0.5;

/// Slack allowed below `1/2` for symplectic eigenvalues before a state is rejected.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Overshoot of the fidelity above one that is still attributed to rounding.
pub const FIDELITY_TOL: f64 = 1e-9;

const SYMMETRY_TOL: f64 = 1e-12;

/// Two-mode symplectic form `I ⊗ [[0, 1], [-1, 0]]`.
pub fn symplectic_form() -> Matrix4<f64> {
    Matrix4::new(
        0.0, 1.0, 0.0, 0.0, //
        -1.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        0.0, 0.0, -1.0, 0.0,
    )
}

fn pauli_z() -> Matrix2<f64> {
    Matrix2::new(1.0, 0.0, 0.0, -1.0)
}

fn block(diag1: Matrix2<f64>, off: Matrix2<f64>, diag2: Matrix2<f64>) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(&diag1);
    m.fixed_view_mut::<2, 2>(0, 2).copy_from(&off);
    m.fixed_view_mut::<2, 2>(2, 0).copy_from(&off.transpose());
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(&diag2);
    m
}

/// Class of a phase-insensitive Gaussian channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    /// Thermal loss, `0 <= tau < 1`.
    Loss,
    /// Thermal amplifier, `tau > 1`.
    Amplifier,
    /// Additive classical noise, `tau = 1`.
    Additive,
}

impl ChannelKind {
    /// Class implied by a transmissivity value.
    pub fn from_transmissivity(tau: f64) -> Result<Self> {
        if !tau.is_finite() || tau < 0.0 {
            return domain(format!("transmissivity must be finite and >= 0, got {tau}"));
        }
        Ok(if tau < 1.0 {
            ChannelKind::Loss
        } else if tau > 1.0 {
            ChannelKind::Amplifier
        } else {
            ChannelKind::Additive
        })
    }
}

/// A one-mode phase-insensitive Gaussian channel `V -> tau V + nu I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseInsensitiveChannel {
    kind: ChannelKind,
    tau: f64,
    nu: f64,
}

impl PhaseInsensitiveChannel {
    /// Builds a channel, checking the class constraints on `tau` and `nu`.
    pub fn new(kind: ChannelKind, tau: f64, nu: f64) -> Result<Self> {
        if !tau.is_finite() || !nu.is_finite() {
            return domain(format!("channel parameters must be finite (tau={tau}, nu={nu})"));
        }
        match kind {
            ChannelKind::Loss if !(0.0..1.0).contains(&tau) => {
                return domain(format!("loss channel requires 0 <= tau < 1, got tau={tau}"));
            }
            ChannelKind::Amplifier if tau <= 1.0 => {
                return domain(format!("amplifier channel requires tau > 1, got tau={tau}"));
            }
            ChannelKind::Additive if tau != 1.0 => {
                return domain(format!("additive channel requires tau = 1, got tau={tau}"));
            }
            _ => {}
        }
        let nu_min = SHOT_NOISE * (1.0 - tau).abs();
        // relative slack absorbs rounding in nu = eps * |1 - tau| round trips
        if nu < nu_min * (1.0 - 1e-12) {
            return domain(format!(
                "{kind:?} channel requires nu >= |1 - tau|/2 = {nu_min}, got nu={nu}"
            ));
        }
        Ok(Self { kind, tau, nu })
    }

    /// Loss or amplifier channel with the class inferred from `tau`.
    pub fn from_transmissivity(tau: f64, nu: f64) -> Result<Self> {
        Self::new(ChannelKind::from_transmissivity(tau)?, tau, nu)
    }

    pub fn loss(tau: f64, nu: f64) -> Result<Self> {
        Self::new(ChannelKind::Loss, tau, nu)
    }

    pub fn amplifier(tau: f64, nu: f64) -> Result<Self> {
        Self::new(ChannelKind::Amplifier, tau, nu)
    }

    pub fn additive(nu: f64) -> Result<Self> {
        Self::new(ChannelKind::Additive, 1.0, nu)
    }

    /// Loss or amplifier channel specified by its environmental variance `eps = nu / |1 - tau|`.
    pub fn thermal(tau: f64, eps: f64) -> Result<Self> {
        if tau == 1.0 {
            return domain("thermal parametrization is undefined at tau = 1");
        }
        if !(eps >= SHOT_NOISE) {
            return domain(format!("environment variance must be >= 1/2, got eps={eps}"));
        }
        Self::from_transmissivity(tau, eps * (1.0 - tau).abs())
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Environmental variance `nu / |1 - tau|`; `None` for additive channels.
    pub fn epsilon(&self) -> Option<f64> {
        match self.kind {
            ChannelKind::Additive => None,
            // construction admits rounding-level slack below 1/2
            _ => Some((self.nu / (1.0 - self.tau).abs()).max(SHOT_NOISE)),
        }
    }

    /// Mean thermal photon number of the environment, `eps - 1/2`.
    pub fn environment_photons(&self) -> Option<f64> {
        self.epsilon().map(|e| e - SHOT_NOISE)
    }
}

/// Which mode of a two-mode state to trace out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    First,
    Second,
}

/// Covariance matrix of a single-mode Gaussian state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleModeCovariance(Matrix2<f64>);

impl SingleModeCovariance {
    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.0
    }

    /// Variance if the state is isotropic (`v I`) to within `tol`.
    pub fn isotropic_variance(&self, tol: f64) -> Option<f64> {
        let m = &self.0;
        let v = 0.5 * (m[(0, 0)] + m[(1, 1)]);
        let off = m[(0, 1)].abs().max(m[(1, 0)].abs());
        ((m[(0, 0)] - m[(1, 1)]).abs() <= tol * v.max(1.0) && off <= tol * v.max(1.0)).then_some(v)
    }

    /// Mean photon number `(tr V)/2 - 1/2`.
    pub fn mean_photons(&self) -> f64 {
        0.5 * self.0.trace() - SHOT_NOISE
    }
}

/// A 4x4 two-mode covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeCovariance(Matrix4<f64>);

impl TwoModeCovariance {
    /// Wraps a matrix after checking symmetry and the uncertainty principle.
    pub fn new(m: Matrix4<f64>) -> Result<Self> {
        let scale = m.amax().max(1.0);
        if (m - m.transpose()).amax() > SYMMETRY_TOL * scale {
            return domain("covariance matrix is not symmetric");
        }
        let v = Self(m);
        v.check_physical()?;
        Ok(v)
    }

    /// Wraps a matrix without validation. Callers own the invariants.
    pub fn from_matrix_unchecked(m: Matrix4<f64>) -> Self {
        Self(m)
    }

    pub fn vacuum() -> Self {
        Self(Matrix4::identity() * SHOT_NOISE)
    }

    /// Two-mode squeezed vacuum with per-mode variance `a` (mean photons `a - 1/2`).
    pub fn tmsv(a: f64) -> Result<Self> {
        if !(a >= SHOT_NOISE) || !a.is_finite() {
            return domain(format!("squeezing parameter must satisfy a >= 1/2, got a={a}"));
        }
        let c = (a * a - 0.25).sqrt();
        let id = Matrix2::identity();
        Ok(Self(block(id * a, pauli_z() * c, id * a)))
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    /// Sends the second mode through `ch`, leaving the first untouched.
    pub fn apply_channel(&self, ch: &PhaseInsensitiveChannel) -> Self {
        let mut x = Matrix4::identity();
        let s = ch.tau().sqrt();
        x[(2, 2)] = s;
        x[(3, 3)] = s;
        let mut out = x * self.0 * x.transpose();
        out[(2, 2)] += ch.nu();
        out[(3, 3)] += ch.nu();
        Self(out)
    }

    /// Applies the two-mode squeezer `S(r) = [[cosh r I, sinh r Z], [sinh r Z, cosh r I]]`.
    pub fn two_mode_squeeze(&self, r: f64) -> Self {
        if let Some((a, b, c)) = standard_form(&self.0) {
            let (ch, sh) = (r.cosh(), r.sinh());
            let cross = 2.0 * ch * sh * c;
            let a2 = accurate_dot(&[(ch * ch, a), (sh * sh, b)], cross);
            let b2 = accurate_dot(&[(sh * sh, a), (ch * ch, b)], cross);
            let c2 = accurate_dot(&[(ch * sh, a), (ch * sh, b), (ch * ch + sh * sh, c)], 0.0);
            let id = Matrix2::identity();
            return Self(block(id * a2, pauli_z() * c2, id * b2));
        }
        let s = two_mode_squeezer(r);
        Self(s * self.0 * s.transpose())
    }

    /// Traces out `which`, returning the covariance of the remaining mode.
    pub fn discard(&self, which: Mode) -> SingleModeCovariance {
        let keep = match which {
            Mode::First => 2,
            Mode::Second => 0,
        };
        SingleModeCovariance(self.0.fixed_view::<2, 2>(keep, keep).into_owned())
    }

    /// Symplectic eigenvalues `(nu_plus, nu_minus)`, descending.
    ///
    /// With `K = V^{1/2} Omega V^{1/2}` antisymmetric, `K^T K` is symmetric with
    /// eigenvalues `nu_k^2` (each twice), so a symmetric eigensolve stays well
    /// conditioned even for nearly pure states where the two values coincide.
    pub fn symplectic_eigenvalues(&self) -> (f64, f64) {
        if let Some((a, b, c)) = standard_form(&self.0) {
            let root = accurate_dot(&[(a, a), (2.0 * a, b), (b, b), (-2.0 * c, 2.0 * c)], 0.0).max(0.0).sqrt();
            let plus = 0.5 * (root + (a - b).abs());
            let minus = if plus > 0.0 { accurate_dot(&[(a, b), (-c, c)], 0.0) / plus } else { 0.0 };
            return (plus, minus);
        }
        let eig = SymmetricEigen::new(self.0);
        let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        let sqrt_v = eig.eigenvectors * Matrix4::from_diagonal(&roots) * eig.eigenvectors.transpose();
        let k = sqrt_v * symplectic_form() * sqrt_v;
        let mut sq: Vec<f64> = SymmetricEigen::new(k.transpose() * k).eigenvalues.iter().copied().collect();
        sq.sort_by(|a, b| b.total_cmp(a));
        (sq[0].max(0.0).sqrt(), sq[3].max(0.0).sqrt())
    }

    fn check_physical(&self) -> Result<()> {
        if self.0.cholesky().is_none() {
            return Err(Error::NonPhysical(f64::NAN));
        }
        let (_, minus) = self.symplectic_eigenvalues();
        if minus < SHOT_NOISE - PHYSICALITY_TOL {
            return Err(Error::NonPhysical(minus));
        }
        Ok(())
    }

    /// `det(V + i Omega / 2)`, which for a physical state equals `prod_k (nu_k^2 - 1/4)`.
    ///
    /// Eigenvalues within rounding of 1/2 are taken as exactly 1/2; the fidelity
    /// depends on the square root of this product, which would amplify the rounding.
    fn uncertainty_product(&self) -> f64 {
        let snap = 64.0 * f64::EPSILON * self.0.amax().max(1.0);
        let factor = |nu: f64| if nu - SHOT_NOISE <= snap { 0.0 } else { nu * nu - 0.25 };
        let (p, m) = self.symplectic_eigenvalues();
        factor(p) * factor(m)
    }
}

/// Symplectic matrix of the two-mode squeezer with parameter `r`.
pub fn two_mode_squeezer(r: f64) -> Matrix4<f64> {
    let id = Matrix2::identity();
    block(id * r.cosh(), pauli_z() * r.sinh(), id * r.cosh())
}

/// `sum x_i y_i + extra`, with every product split exactly by a fused multiply-add
/// and all pieces added with compensation.
fn accurate_dot(pairs: &[(f64, f64)], extra: f64) -> f64 {
    let mut acc = CompensatedSum::default();
    acc.add(extra);
    for &(x, y) in pairs {
        let p = x * y;
        acc.add(p);
        acc.add(x.mul_add(y, -p));
    }
    acc.value()
}

/// `(a, b, c)` for a matrix of the form `[[a I, c Z], [c Z, b I]]`.
fn standard_form(m: &Matrix4<f64>) -> Option<(f64, f64, f64)> {
    let (a, b, c) = (m[(0, 0)], m[(2, 2)], m[(0, 2)]);
    let expected = block(Matrix2::identity() * a, pauli_z() * c, Matrix2::identity() * b);
    (*m == expected).then_some((a, b, c))
}

/// `(e - h)(e + h)` for a standard-form state, with factors within rounding of
/// zero taken as zero, as in [`TwoModeCovariance::uncertainty_product`].
fn uncertainty_factors(a: f64, b: f64, c: f64) -> f64 {
    let snap = 64.0 * f64::EPSILON * a.max(b).max(1.0).powi(2);
    let factor = |sign: f64| {
        let f = accurate_dot(&[(a, b), (-c, c), (a, -0.5 * sign), (b, 0.5 * sign)], -0.25);
        if f <= snap { 0.0 } else { f }
    };
    factor(1.0) * factor(-1.0)
}

/// Returns `(sqrt(det(V1 + V2)), chi - 1)` for standard-form states.
///
/// The x and p quadratures decouple, so every determinant reduces to a 2x2 one.
/// With `e = ab - c^2 - 1/4` and `h = (a - b)/2`,
/// `chi - 1 = 2 (e1 e2 + h1 h2 + sqrt(u1 u2)) / D` where `u = (e - h)(e + h)` is the
/// uncertainty product. Written this way nothing cancels as the states approach purity.
fn standard_form_chi(p: (f64, f64, f64), q: (f64, f64, f64)) -> (f64, f64) {
    let ((a1, b1, c1), (a2, b2, c2)) = (p, q);
    let det_root = accurate_dot(
        &[(a1, b1), (a2, b2), (a1, b2), (a2, b1), (-c1, c1), (-c2, c2), (-2.0 * c1, c2)],
        0.0,
    );
    let e1 = accurate_dot(&[(a1, b1), (-c1, c1)], -0.25);
    let e2 = accurate_dot(&[(a2, b2), (-c2, c2)], -0.25);
    let (h1, h2) = (0.5 * (a1 - b1), 0.5 * (a2 - b2));
    let (u1, u2) = (uncertainty_factors(a1, b1, c1), uncertainty_factors(a2, b2, c2));
    let numerator = accurate_dot(&[(e1, e2), (h1, h2)], (u1 * u2).sqrt());
    (det_root, 2.0 * numerator.max(0.0) / det_root)
}

/// Returns `(sqrt(det(V1 + V2)), chi - 1)` from the general 4x4 expressions.
fn general_chi(v1: &TwoModeCovariance, v2: &TwoModeCovariance) -> Result<(f64, f64)> {
    let det_sum = (v1.0 + v2.0).determinant();
    if !(det_sum > 0.0) {
        return Err(Error::NumericalInstability(format!(
            "det(V1 + V2) = {det_sum} is not positive"
        )));
    }
    let omega = symplectic_form();
    let quarter = Matrix4::identity() * 0.25;
    let a = (omega * v1.0 * omega * v2.0 - quarter).determinant() / det_sum;
    let b = v1.uncertainty_product() * v2.uncertainty_product() / det_sum;
    if a < -FIDELITY_TOL {
        return Err(Error::NumericalInstability(format!("A = {a} is negative")));
    }
    Ok((det_sum.sqrt(), 2.0 * a.max(0.0).sqrt() + 2.0 * b.sqrt() - 0.5))
}

/// Bures fidelity between two zero-mean two-mode Gaussian states,
/// `(sqrt(chi) + sqrt(chi - 1)) / det(V1 + V2)^(1/4)` with `chi = 2 sqrt(A) + 2 sqrt(B) + 1/2`.
///
/// States of the phase-insensitive form `[[a I, c Z], [c Z, b I]]` (everything
/// built from two-mode squeezed vacua, the channels here and two-mode squeezing)
/// take a scalar path that stays accurate for strongly squeezed, nearly pure
/// states. The arguments are put in a canonical order first, so the result is
/// exactly symmetric.
pub fn gaussian_fidelity(v1: &TwoModeCovariance, v2: &TwoModeCovariance) -> Result<f64> {
    v1.check_physical()?;
    v2.check_physical()?;
    let swap = v1.0.iter().zip(v2.0.iter()).map(|(p, q)| p.total_cmp(q)).find(|o| o.is_ne())
        == Some(std::cmp::Ordering::Greater);
    let (v1, v2) = if swap { (v2, v1) } else { (v1, v2) };
    let (det_root, chi_minus_one) = match (standard_form(&v1.0), standard_form(&v2.0)) {
        (Some(p), Some(q)) => standard_form_chi(p, q),
        _ => general_chi(v1, v2)?,
    };
    if !(det_root > 0.0) {
        return Err(Error::NumericalInstability(format!(
            "det(V1 + V2) = {} is not positive",
            det_root * det_root
        )));
    }
    if chi_minus_one < -FIDELITY_TOL {
        return Err(Error::NumericalInstability(format!("chi = {} < 1", 1.0 + chi_minus_one)));
    }
    let cm1 = chi_minus_one.max(0.0);
    let f = ((1.0 + cm1).sqrt() + cm1.sqrt()) / det_root.sqrt();
    if f > 1.0 + FIDELITY_TOL {
        return Err(Error::NumericalInstability(format!("fidelity {f} exceeds one")));
    }
    Ok(f.clamp(0.0, 1.0))
}
