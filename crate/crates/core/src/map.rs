//! The kicked torus map, its cylinder lift near a resonance, and tangent dynamics.
//!
//! On the torus the map advances the angle first and then kicks the action
//! with the sine of the *new* angle:
//!
//! ```text
//! theta' = theta + J                              (mod 2pi)
//! J'     = J + 2 pi Omega + ktilde sin(theta')    (mod 2pi)
//! ```
//!
//! Reversing that order gives a different map, so every stepper here keeps it.
//! Near `Omega = m/p` the action is measured relative to the resonant drift,
//! `L_n = J_n - 2 pi n m/p`, which turns period-`p` orbits of the torus map into
//! fixed points of the composition of `p` time-dependent cylinder maps.

use std::f64::consts::{PI, TAU};

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduce an angle into `[0, 2pi)` by floored remainder.
#[inline]
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Signed difference `a - b` reduced into `(-pi, pi]`.
#[inline]
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// The `(Omega, ktilde)` parameter pair of the torus map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapParams {
    pub omega: f64,
    pub ktilde: f64,
}

impl MapParams {
    pub fn new(omega: f64, ktilde: f64) -> Self {
        Self { omega, ktilde }
    }

    /// The conjugate parameters `(Omega, -ktilde)`; orbits map onto each other
    /// under `theta -> theta + pi`.
    pub fn conjugate(&self) -> Self {
        Self {
            omega: self.omega,
            ktilde: -self.ktilde,
        }
    }
}

/// A point of the 2-torus, both coordinates in `[0, 2pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub j: f64,
    pub theta: f64,
}

impl TorusPoint {
    pub fn new(j: f64, theta: f64) -> Self {
        Self {
            j: wrap_angle(j),
            theta: wrap_angle(theta),
        }
    }

    /// Max-norm distance on the torus.
    pub fn distance(&self, other: &TorusPoint) -> f64 {
        angle_diff(self.j, other.j)
            .abs()
            .max(angle_diff(self.theta, other.theta).abs())
    }
}

/// A point of the cylinder: unbounded action `l`, angle in `[0, 2pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderPoint {
    pub l: f64,
    pub theta: f64,
}

impl CylinderPoint {
    pub fn new(l: f64, theta: f64) -> Self {
        Self {
            l,
            theta: wrap_angle(theta),
        }
    }

    /// Max-norm distance, angle taken mod 2pi, action not wrapped.
    pub fn distance(&self, other: &CylinderPoint) -> f64 {
        (self.l - other.l).abs().max(angle_diff(self.theta, other.theta).abs())
    }
}

/// Period `p` and winding number `m` of a periodic orbit; always coprime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "(u64, u64)", into = "(u64, u64)")]
pub struct OrbitLabel {
    p: u64,
    m: u64,
}

impl OrbitLabel {
    /// Rejects `p = 0` and non-coprime pairs. A pair with a common factor
    /// names a bifurcated orbit, not the same tongue, so it is never reduced.
    pub fn new(p: u64, m: u64) -> Result<Self> {
        if p == 0 {
            return Err(Error::ZeroPeriod);
        }
        if p.gcd(&m) != 1 {
            return Err(Error::NotCoprime { p, m });
        }
        Ok(Self { p, m })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    /// The winding ratio `m/p` as a float.
    pub fn ratio(&self) -> f64 {
        self.m as f64 / self.p as f64
    }

    /// `2 pi (m n mod p) / p`, the resonant phase advance at step `n`,
    /// reduced in integers so it stays exact for large `n`.
    fn drift(&self, n: u64) -> f64 {
        let r = ((self.m % self.p) as u128 * (n % self.p) as u128 % self.p as u128) as f64;
        TAU * r / self.p as f64
    }
}

impl TryFrom<(u64, u64)> for OrbitLabel {
    type Error = Error;
    fn try_from((p, m): (u64, u64)) -> Result<Self> {
        OrbitLabel::new(p, m)
    }
}

impl From<OrbitLabel> for (u64, u64) {
    fn from(l: OrbitLabel) -> Self {
        (l.p, l.m)
    }
}

impl std::fmt::Display for OrbitLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.p, self.m)
    }
}

impl std::str::FromStr for OrbitLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches('(').trim_end_matches(')');
        let (p, m) = s
            .split_once(',')
            .ok_or_else(|| Error::Invalid(format!("label `{s}` is not of the form p,m")))?;
        let p = p
            .trim()
            .parse()
            .map_err(|_| Error::Invalid(format!("bad period `{p}`")))?;
        let m = m
            .trim()
            .parse()
            .map_err(|_| Error::Invalid(format!("bad winding `{m}`")))?;
        OrbitLabel::new(p, m)
    }
}

/// 2x2 matrix in `(L, theta)` ordering, row-major.
pub type Mat2 = [[f64; 2]; 2];

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

pub fn det(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn trace(a: &Mat2) -> f64 {
    a[0][0] + a[1][1]
}

pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

/// One step of the torus map.
#[inline]
pub fn step_torus(pt: TorusPoint, params: &MapParams) -> TorusPoint {
    let theta = wrap_angle(pt.theta + pt.j);
    let j = wrap_angle(pt.j + TAU * params.omega + params.ktilde * theta.sin());
    TorusPoint { j, theta }
}

/// Jacobian of one torus step at `pt`, `(J, theta)` ordering.
pub fn torus_jacobian(pt: TorusPoint, params: &MapParams) -> Mat2 {
    let c = params.ktilde * (pt.theta + pt.j).cos();
    [[1.0 + c, c], [1.0, 1.0]]
}

/// Iterator over a torus trajectory, starting with the initial point.
#[derive(Debug, Clone)]
pub struct TorusOrbit {
    params: MapParams,
    next: TorusPoint,
}

impl TorusOrbit {
    pub fn new(start: TorusPoint, params: MapParams) -> Self {
        Self { params, next: start }
    }
}

impl Iterator for TorusOrbit {
    type Item = TorusPoint;
    fn next(&mut self) -> Option<TorusPoint> {
        let cur = self.next;
        self.next = step_torus(cur, &self.params);
        Some(cur)
    }
}

/// The map lifted to the cylinder around the resonance `m/p`, with the
/// detuning `eps_a = 2 pi (Omega - m/p)` and kick `eps_k = ktilde`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderMap {
    pub label: OrbitLabel,
    pub eps_a: f64,
    pub eps_k: f64,
}

impl CylinderMap {
    pub fn new(label: OrbitLabel, eps_a: f64, eps_k: f64) -> Self {
        Self { label, eps_a, eps_k }
    }

    /// Cylinder map for the torus parameters `params` near `label`.
    pub fn from_params(params: &MapParams, label: OrbitLabel) -> Self {
        Self {
            label,
            eps_a: TAU * (params.omega - label.ratio()),
            eps_k: params.ktilde,
        }
    }

    /// Torus parameters this lift corresponds to.
    pub fn params(&self) -> MapParams {
        MapParams {
            omega: self.label.ratio() + self.eps_a / TAU,
            ktilde: self.eps_k,
        }
    }

    /// The time-`n` map; it depends on `n` only through `n mod p`.
    #[inline]
    pub fn step(&self, n: u64, pt: CylinderPoint) -> CylinderPoint {
        let theta = wrap_angle(pt.theta + pt.l + self.label.drift(n));
        let l = pt.l + self.eps_a + self.eps_k * theta.sin();
        CylinderPoint { l, theta }
    }

    /// One application of the period map, `M_{p-1} o ... o M_0`.
    pub fn compose(&self, pt: CylinderPoint) -> CylinderPoint {
        (0..self.label.p).fold(pt, |x, n| self.step(n, x))
    }

    /// The period map together with its Jacobian at `pt`.
    pub fn compose_with_tangent(&self, pt: CylinderPoint) -> (CylinderPoint, Mat2) {
        let mut x = pt;
        let mut jac = IDENTITY;
        for n in 0..self.label.p {
            x = self.step(n, x);
            let c = self.eps_k * x.theta.cos();
            let one: Mat2 = [[1.0 + c, c], [1.0, 1.0]];
            jac = mat_mul(&one, &jac);
        }
        (x, jac)
    }

    /// The `p + 1` cylinder points visited over one period, endpoints included.
    pub fn period_points(&self, pt: CylinderPoint) -> Vec<CylinderPoint> {
        let mut out = Vec::with_capacity(self.label.p as usize + 1);
        out.push(pt);
        let mut x = pt;
        for n in 0..self.label.p {
            x = self.step(n, x);
            out.push(x);
        }
        out
    }

    /// Project a cylinder point at time `n` onto the torus.
    pub fn to_torus(&self, n: u64, pt: CylinderPoint) -> TorusPoint {
        TorusPoint::new(pt.l + self.label.drift(n), pt.theta)
    }
}

/// One step of the time-dependent cylinder map at step index `n`.
pub fn step_cylinder(n: u64, pt: CylinderPoint, label: OrbitLabel, epsilon_a: f64, epsilon_k: f64) -> CylinderPoint {
    CylinderMap::new(label, epsilon_a, epsilon_k).step(n, pt)
}

/// The period-`p` composed map.
pub fn compose_period(pt: CylinderPoint, map: &CylinderMap) -> CylinderPoint {
    map.compose(pt)
}

/// Jacobian of the period-`p` composed map, product of the one-step Jacobians.
pub fn tangent_period(pt: CylinderPoint, map: &CylinderMap) -> Mat2 {
    map.compose_with_tangent(pt).1
}

/// Winding number of a closed torus trajectory of `p` steps.
///
/// `traj` holds the `p + 1` points `x_0 .. x_p`. The unwrapped action gain
/// over the period is `sum (2 pi Omega + ktilde sin theta_{n+1})`, which for a
/// periodic orbit is `2 pi m`. Each recorded step must agree with the map and
/// the trajectory must close to within `tol`.
pub fn unwrap_winding(traj: &[TorusPoint], params: &MapParams, tol: f64) -> Result<i64> {
    if traj.len() < 2 {
        return Err(Error::Invalid("trajectory needs at least one step".into()));
    }
    let closure = traj[traj.len() - 1].distance(&traj[0]);
    if closure > tol {
        return Err(Error::NotPeriodic { closure });
    }
    let mut gain = 0.0;
    for w in traj.windows(2) {
        let step = step_torus(w[0], params);
        let err = step.distance(&w[1]);
        if err > tol {
            return Err(Error::NotPeriodic { closure: err });
        }
        gain += TAU * params.omega + params.ktilde * w[1].theta.sin();
    }
    // the recorded J values may differ from the exact ones by up to tol
    let dj = angle_diff(traj[traj.len() - 1].j, traj[0].j);
    let turns = (gain - dj) / TAU;
    let m = turns.round();
    if (turns - m).abs() > 1e-6 + tol {
        return Err(Error::NotPeriodic {
            closure: (turns - m).abs(),
        });
    }
    Ok(m as i64)
}
