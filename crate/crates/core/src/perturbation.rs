//! First-order resonance theory near a tongue vertex.
//!
//! Writing `Omega = m/p + eps a / 2pi` and `ktilde = eps k`, the motion near the
//! resonant action `R_{p,0}` reduces to the tilted pendulum
//!
//! ```text
//! H = p L^2 / 2 + eps V(theta),     V(theta) = -p a theta + k sqrt(p) cos(theta)
//! ```
//!
//! in an angle shifted from the map angle by the Gauss-sum phase `xi(R_{p,0})`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::{resonant_action, GaussPolynomial};
use crate::map::{wrap_angle, CylinderPoint, MapParams, OrbitLabel};

/// Small-parameter form of the map parameters around a resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledParams {
    pub epsilon: f64,
    pub a: f64,
    pub k: f64,
}

impl ScaledParams {
    /// Back to `(Omega, ktilde)`.
    pub fn unscale(&self, label: OrbitLabel) -> MapParams {
        MapParams {
            omega: label.ratio() + self.epsilon * self.a / TAU,
            ktilde: self.epsilon * self.k,
        }
    }

    pub fn pendulum(&self, label: OrbitLabel) -> PendulumParams {
        PendulumParams {
            p: label.p(),
            a: self.a,
            k: self.k,
        }
    }

    /// Tilt parameter `|a| sqrt(p) / k`.
    pub fn lambda(&self, label: OrbitLabel) -> f64 {
        self.pendulum(label).lambda()
    }
}

/// `a = 2 pi (Omega - m/p) / eps`, `k = ktilde / eps`. The sign of `eps` must
/// make `k` non-negative.
pub fn scale(params: &MapParams, label: OrbitLabel, epsilon: f64) -> Result<ScaledParams> {
    if epsilon == 0.0 {
        return Err(Error::ZeroEpsilon);
    }
    let a = TAU * (params.omega - label.ratio()) / epsilon;
    let k = params.ktilde / epsilon;
    if k < 0.0 {
        return Err(Error::NegativeKick { k });
    }
    Ok(ScaledParams { epsilon, a, k })
}

/// `|Omega - m/p| / |ktilde| * 2 pi sqrt(p)`; 0 on the tongue axis, 1 on the
/// perturbative margins.
pub fn lambda_of(params: &MapParams, label: OrbitLabel) -> f64 {
    TAU * (params.omega - label.ratio()).abs() * (label.p() as f64).sqrt() / params.ktilde.abs()
}

/// Point at height `ktilde` on the ray of constant `lambda` through the
/// vertex of the `label` tongue; `right` selects `Omega > m/p`.
pub fn on_ray(label: OrbitLabel, lambda: f64, ktilde: f64, right: bool) -> MapParams {
    let off = lambda * tongue_margin(label, ktilde);
    MapParams {
        omega: label.ratio() + if right { off } else { -off },
        ktilde,
    }
}

/// Half-width in `Omega` of the perturbative tongue: `|ktilde| / (2 pi sqrt(p))`.
pub fn tongue_margin(label: OrbitLabel, ktilde: f64) -> f64 {
    ktilde.abs() / (TAU * (label.p() as f64).sqrt())
}

/// Whether `params` lie inside the perturbative `label` tongue.
pub fn inside_margin(params: &MapParams, label: OrbitLabel) -> bool {
    (params.omega - label.ratio()).abs() <= tongue_margin(label, params.ktilde)
}

/// Parameters of the resonant pendulum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumParams {
    pub p: u64,
    pub a: f64,
    pub k: f64,
}

impl PendulumParams {
    pub fn new(p: u64, a: f64, k: f64) -> Self {
        Self { p, a, k }
    }

    pub fn lambda(&self) -> f64 {
        self.a.abs() * (self.p as f64).sqrt() / self.k
    }

    pub fn potential(&self, theta: f64) -> f64 {
        let p = self.p as f64;
        -p * self.a * theta + self.k * p.sqrt() * theta.cos()
    }

    pub fn potential_d1(&self, theta: f64) -> f64 {
        let p = self.p as f64;
        -p * self.a - self.k * p.sqrt() * theta.sin()
    }

    pub fn potential_d2(&self, theta: f64) -> f64 {
        -self.k * (self.p as f64).sqrt() * theta.cos()
    }

    pub fn hamiltonian(&self, l: f64, theta: f64, epsilon: f64) -> f64 {
        0.5 * self.p as f64 * l * l + epsilon * self.potential(theta)
    }
}

/// The two equilibria of the tilted pendulum, sorted by the sign of `V''`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equilibria {
    /// Minimum of `V` (`V'' > 0`): the elliptic point when `eps > 0`.
    pub minimum: f64,
    /// Maximum of `V` (`V'' < 0`): the hyperbolic point when `eps > 0`.
    pub maximum: f64,
    /// `lambda == 1`: the two roots coincide.
    pub degenerate: bool,
}

impl Equilibria {
    /// `(stable, unstable)` for the given sign of `eps`; the elliptic point
    /// is where `eps V''` is positive.
    pub fn oriented(&self, epsilon: f64) -> (f64, f64) {
        if epsilon >= 0.0 {
            (self.minimum, self.maximum)
        } else {
            (self.maximum, self.minimum)
        }
    }
}

/// Solve `V'(theta) = 0`, i.e. `sin(theta) = -a sqrt(p) / k`. Angles in `[0, 2pi)`.
pub fn equilibria(pend: &PendulumParams) -> Result<Option<Equilibria>> {
    if pend.k == 0.0 {
        return Err(Error::NoPendulum);
    }
    let s = -pend.a * (pend.p as f64).sqrt() / pend.k;
    if s.abs() > 1.0 {
        return Ok(None);
    }
    let r1 = wrap_angle(s.asin());
    let r2 = wrap_angle(PI - s.asin());
    let (d1, d2) = (pend.potential_d2(r1), pend.potential_d2(r2));
    let degenerate = s.abs() == 1.0;
    let (minimum, maximum) = if d1 > d2 { (r1, r2) } else { (r2, r1) };
    Ok(Some(Equilibria {
        minimum,
        maximum,
        degenerate,
    }))
}

/// Phase `xi(R_{p,0})` of the Gauss sum at the resonant action.
pub fn resonant_phase(label: OrbitLabel) -> f64 {
    GaussPolynomial::new(label)
        .gauss_sum(resonant_action(label.p(), 0))
        .phase
}

fn predicted_point(label: OrbitLabel, scaled: &ScaledParams, theta: f64) -> CylinderPoint {
    let p = label.p();
    let mut l = resonant_action(p, 0);
    if p.is_multiple_of(2) {
        l += 0.5 * scaled.a * scaled.epsilon + 0.5 * scaled.k * scaled.epsilon * theta.sin();
    }
    CylinderPoint::new(l, theta)
}

fn check_lambda(label: OrbitLabel, scaled: &ScaledParams) -> Result<f64> {
    let lambda = scaled.lambda(label);
    if lambda > 1.0 || lambda.is_nan() {
        return Err(Error::OutsideTongue { lambda });
    }
    Ok(lambda)
}

/// First-order fixed point of the period map on the principal arcsin branch:
/// `theta* = -arcsin(a sqrt(p) / k) - xi(R_{p,0})`, `L* = R_{p,0}` plus the
/// even-`p` correction `(a eps + k eps sin theta*) / 2`. The `O(eps)` angle
/// correction is dropped.
///
/// For `eps > 0` this branch is the hyperbolic point; use
/// [`stable_fixed_point_prediction`] to seed a search for the elliptic one.
pub fn fixed_point_prediction(label: OrbitLabel, scaled: &ScaledParams) -> Result<CylinderPoint> {
    check_lambda(label, scaled)?;
    let x = scaled.a * (label.p() as f64).sqrt() / scaled.k;
    let theta = -x.asin() - resonant_phase(label);
    Ok(predicted_point(label, scaled, theta))
}

/// Like [`fixed_point_prediction`] but on the branch where `eps V'' > 0`,
/// i.e. the predicted elliptic point.
pub fn stable_fixed_point_prediction(label: OrbitLabel, scaled: &ScaledParams) -> Result<CylinderPoint> {
    check_lambda(label, scaled)?;
    let eq = equilibria(&scaled.pendulum(label))?.ok_or(Error::OutsideTongue {
        lambda: scaled.lambda(label),
    })?;
    let (stable, _) = eq.oriented(scaled.epsilon);
    Ok(predicted_point(label, scaled, stable - resonant_phase(label)))
}

/// Hyperbolic counterpart of [`stable_fixed_point_prediction`].
pub fn unstable_fixed_point_prediction(label: OrbitLabel, scaled: &ScaledParams) -> Result<CylinderPoint> {
    check_lambda(label, scaled)?;
    let eq = equilibria(&scaled.pendulum(label))?.ok_or(Error::OutsideTongue {
        lambda: scaled.lambda(label),
    })?;
    let (_, unstable) = eq.oriented(scaled.epsilon);
    Ok(predicted_point(label, scaled, unstable - resonant_phase(label)))
}

/// A phase-space state of the pendulum; the angle is not wrapped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PendulumState {
    pub l: f64,
    pub theta: f64,
}

/// Leapfrog (kick-drift-kick) integration of the resonant pendulum.
/// Returns `nsteps + 1` states including the initial one.
pub fn pendulum_flow(
    state: PendulumState,
    pend: &PendulumParams,
    epsilon: f64,
    dt: f64,
    nsteps: usize,
) -> Result<Vec<PendulumState>> {
    if !(dt > 0.0) {
        return Err(Error::OutOfRange { name: "dt", value: dt });
    }
    let p = pend.p as f64;
    let force = |theta: f64| -epsilon * pend.potential_d1(theta);
    let mut out = Vec::with_capacity(nsteps + 1);
    let PendulumState { mut l, mut theta } = state;
    out.push(state);
    let mut f = force(theta);
    for _ in 0..nsteps {
        l += 0.5 * dt * f;
        theta += dt * p * l;
        f = force(theta);
        l += 0.5 * dt * f;
        out.push(PendulumState { l, theta });
    }
    Ok(out)
}

/// Upper bounds on `|eps|` for the first-order canonical map and for the
/// resonant reduction: `c / (k p^{3/2} ln(1 + p/2))` and the same with `c4`.
pub fn validity_bounds(label: OrbitLabel, k: f64, c: f64, c4: f64) -> Result<(f64, f64)> {
    if !(k > 0.0) {
        return Err(Error::OutOfRange { name: "k", value: k });
    }
    let p = label.p() as f64;
    let denom = k * p.powf(1.5) * (1.0 + p / 2.0).ln();
    Ok((c / denom, c4 / denom))
}
