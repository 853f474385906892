//! Which accelerator modes an experimental path meets in the subcritical part
//! of their tongues.
//!
//! A path starts at `Omega = omega` on the `ktilde = 0` axis and has two arms:
//! `eps < 0` (left, `Omega < omega`) and `eps > 0` (right). With `ktilde = eps k`
//! at a fixed physical kick `k`, the linear path is `|ktilde| = alpha |Omega - omega|`.

use std::cmp::Ordering;
use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::farey::{farey_endpoints, Omega, Rational};
use crate::map::OrbitLabel;

/// Critical-border constant from the rescaled tongue scans.
pub const DEFAULT_BORDER: f64 = 6.0;
/// Alternative constant `2 pi`.
pub const BORDER_2PI: f64 = TAU;
/// Physical kick strength used for the golden-mean runs.
pub const DEFAULT_KICK: f64 = 0.8 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Left,
    Right,
}

impl Arm {
    pub fn sign(self) -> f64 {
        match self {
            Arm::Left => -1.0,
            Arm::Right => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Arm::Left => "left",
            Arm::Right => "right",
        }
    }
}

/// Which side of `omega` a winding ratio approximates it from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ApproxSide {
    Left,
    Right,
    Exact,
}

impl ApproxSide {
    pub fn as_str(self) -> &'static str {
        match self {
            ApproxSide::Left => "left",
            ApproxSide::Right => "right",
            ApproxSide::Exact => "exact",
        }
    }
}

/// Linear experimental path `Omega = omega + ktilde / alpha`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentalPath {
    pub omega: Omega,
    /// Arm slope `|ktilde| / |Omega - omega|`; infinite for a vertical path.
    pub alpha: f64,
    /// Physical kick strength `k`, so that `ktilde = eps k`.
    pub kick: f64,
}

/// Path with arm slope `alpha` (`f64::INFINITY` for the vertical path).
pub fn ep_linear(omega: Omega, alpha: f64) -> Result<ExperimentalPath> {
    if !(alpha > 0.0) {
        return Err(Error::OutOfRange {
            name: "alpha",
            value: alpha,
        });
    }
    Ok(ExperimentalPath {
        omega,
        alpha,
        kick: DEFAULT_KICK,
    })
}

impl ExperimentalPath {
    pub fn with_kick(mut self, kick: f64) -> Result<Self> {
        if !(kick > 0.0) {
            return Err(Error::OutOfRange {
                name: "kick",
                value: kick,
            });
        }
        self.kick = kick;
        Ok(self)
    }

    pub fn is_vertical(&self) -> bool {
        self.alpha.is_infinite()
    }

    /// Offset `Phi(ktilde) = ktilde / alpha` from the foot point.
    pub fn phi(&self, ktilde: f64) -> f64 {
        if self.is_vertical() {
            0.0
        } else {
            ktilde / self.alpha
        }
    }

    /// `Omega` on the path at signed `ktilde`.
    pub fn omega_at(&self, ktilde: f64) -> f64 {
        self.omega.to_f64() + self.phi(ktilde)
    }

    /// Signed `ktilde` on `arm` at `|ktilde| = t`.
    pub fn ktilde_on(&self, arm: Arm, t: f64) -> f64 {
        arm.sign() * t
    }
}

/// Stretch of one arm lying inside the subcritical part of a tongue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArmWindow {
    pub arm: Arm,
    /// Open interval of `|ktilde|`.
    pub ktilde: (f64, f64),
    /// Open interval of `eps`, ascending.
    pub epsilon: (f64, f64),
}

impl ArmWindow {
    /// Log-midpoint of the `|eps|` window (half the upper end when the
    /// window reaches down to 0), with the arm's sign.
    pub fn representative_epsilon(&self) -> f64 {
        let (a, b) = (self.epsilon.0.abs(), self.epsilon.1.abs());
        let (lo, hi) = (a.min(b), a.max(b));
        let mag = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
        self.arm.sign() * mag
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Intersection {
    pub left: Option<ArmWindow>,
    pub right: Option<ArmWindow>,
}

impl Intersection {
    pub fn arm(&self, arm: Arm) -> Option<&ArmWindow> {
        match arm {
            Arm::Left => self.left.as_ref(),
            Arm::Right => self.right.as_ref(),
        }
    }

    pub fn any(&self) -> bool {
        self.left.is_some() || self.right.is_some()
    }

    pub fn both(&self) -> bool {
        self.left.is_some() && self.right.is_some()
    }
}

fn label_rational(label: OrbitLabel) -> Rational {
    Rational::from_u64(label.m(), label.p()).expect("labels have p > 0")
}

// omega - m/p, exactly zero when they coincide
fn offset(omega: &Omega, label: OrbitLabel) -> f64 {
    match omega.cmp_rational(&label_rational(label)) {
        Ordering::Equal => 0.0,
        _ => omega.to_f64() - label.ratio(),
    }
}

fn check_border(b: f64) -> Result<()> {
    if b > 0.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange { name: "b", value: b })
    }
}

/// Where each arm of `ep` runs inside the `label` tongue, within its
/// perturbative margins and below the critical border `|ktilde| < b p^{-3/2}`.
pub fn intersects_subcritical(ep: &ExperimentalPath, label: OrbitLabel, b: f64) -> Result<Intersection> {
    check_border(b)?;
    let p = label.p() as f64;
    let delta = offset(&ep.omega, label);
    let beta = 1.0 / (TAU * p.sqrt());
    let gamma = if ep.is_vertical() { 0.0 } else { 1.0 / ep.alpha };
    let border = b * p.powf(-1.5);
    let window = |arm: Arm| -> Option<ArmWindow> {
        let s = arm.sign();
        // |delta + s gamma t| < beta t as two linear constraints c t > d
        let constraints = [(beta - s * gamma, delta), (beta + s * gamma, -delta)];
        let (mut lo, mut hi) = (0.0_f64, border);
        for (c, d) in constraints {
            if c > 0.0 {
                lo = lo.max(d / c);
            } else if c < 0.0 {
                hi = hi.min(d / c);
            } else if d >= 0.0 {
                return None;
            }
        }
        (lo < hi).then(|| {
            let (e0, e1) = (lo / ep.kick, hi / ep.kick);
            ArmWindow {
                arm,
                ktilde: (lo, hi),
                epsilon: if s > 0.0 { (e0, e1) } else { (-e1, -e0) },
            }
        })
    };
    Ok(Intersection {
        left: window(Arm::Left),
        right: window(Arm::Right),
    })
}

/// `|omega - m/p| < b/(2 pi) p^{-2} + |Phi(b p^{-3/2})|`, a necessary
/// condition for any subcritical intersection.
pub fn passes_approximation(ep: &ExperimentalPath, label: OrbitLabel, b: f64) -> bool {
    let p = label.p() as f64;
    let bound = b / TAU / (p * p) + ep.phi(b * p.powf(-1.5)).abs();
    offset(&ep.omega, label).abs() < bound
}

/// `a = 2 pi (Omega - m/p) / eps`.
pub fn mode_acceleration(omega_map: f64, label: OrbitLabel, epsilon: f64) -> Result<f64> {
    if epsilon == 0.0 {
        return Err(Error::ZeroEpsilon);
    }
    Ok(TAU * (omega_map - label.ratio()) / epsilon)
}

/// `sign(eps) m`.
pub fn jumping_index(label: OrbitLabel, epsilon: f64) -> i64 {
    let m = label.m() as i64;
    if epsilon < 0.0 {
        -m
    } else {
        m
    }
}

/// Island area measured in units of the effective Planck constant, `A / |eps|`.
pub fn quantum_relevance(area: f64, epsilon: f64) -> Result<f64> {
    if epsilon == 0.0 {
        return Err(Error::ZeroEpsilon);
    }
    Ok(area / epsilon.abs())
}

/// Default threshold on `A / |eps|` above which an island can host a mode.
pub const RELEVANCE_THRESHOLD: f64 = 1.0;

/// A Farey endpoint of `omega` and how the path meets its tongue.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeCandidate {
    pub label: OrbitLabel,
    pub approximant: ApproxSide,
    pub passes_approximation: bool,
    pub intersection: Intersection,
}

impl ModeCandidate {
    pub fn meets_tongue(&self) -> bool {
        self.intersection.any()
    }
}

/// One mode expected on one arm of the path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModePrediction {
    pub label: OrbitLabel,
    pub arm: Arm,
    pub approximant: ApproxSide,
    pub window: ArmWindow,
    /// Representative `eps` inside the window.
    pub epsilon: f64,
    pub acceleration: f64,
    pub jumping_index: i64,
    pub passes_approximation: bool,
    pub meets_tongue: bool,
}

impl ModePrediction {
    /// Whether the arm is the one the approximant side favours.
    pub fn on_preferred_arm(&self) -> bool {
        match self.approximant {
            ApproxSide::Left => self.arm == Arm::Left,
            ApproxSide::Right => self.arm == Arm::Right,
            ApproxSide::Exact => true,
        }
    }
}

/// Every Farey endpoint of `omega` with denominator `<= p_max`, in order of
/// appearance, with both observability conditions evaluated.
pub fn mode_candidates(ep: &ExperimentalPath, p_max: u64, b: f64) -> Result<Vec<ModeCandidate>> {
    check_border(b)?;
    if p_max == 0 {
        return Err(Error::ZeroPeriod);
    }
    farey_endpoints(&ep.omega, p_max)?
        .into_iter()
        .map(|r| {
            let (m, p) = r.to_u64_pair().expect("denominator bounded by p_max");
            let label = OrbitLabel::new(p, m)?;
            let approximant = match ep.omega.cmp_rational(&r) {
                Ordering::Greater => ApproxSide::Left,
                Ordering::Less => ApproxSide::Right,
                Ordering::Equal => ApproxSide::Exact,
            };
            Ok(ModeCandidate {
                label,
                approximant,
                passes_approximation: passes_approximation(ep, label, b),
                intersection: intersects_subcritical(ep, label, b)?,
            })
        })
        .collect()
}

/// Modes expected along `ep`: Farey endpoints of `omega` with denominator
/// `<= p_max` that satisfy the approximation bound and cross the
/// subcritical tongue, one entry per arm on which they do.
pub fn observable_modes(ep: &ExperimentalPath, p_max: u64, b: f64) -> Result<Vec<ModePrediction>> {
    let mut out = Vec::new();
    for cand in mode_candidates(ep, p_max, b)? {
        if !cand.passes_approximation {
            continue;
        }
        for arm in [Arm::Left, Arm::Right] {
            let Some(window) = cand.intersection.arm(arm) else {
                continue;
            };
            let eps = window.representative_epsilon();
            let omega_map = ep.omega_at(eps * ep.kick);
            out.push(ModePrediction {
                label: cand.label,
                arm,
                approximant: cand.approximant,
                window: *window,
                epsilon: eps,
                acceleration: mode_acceleration(omega_map, cand.label, eps)?,
                jumping_index: jumping_index(cand.label, eps),
                passes_approximation: cand.passes_approximation,
                meets_tongue: true,
            });
        }
    }
    Ok(out)
}

/// Distinct labels of `modes` in order of first appearance.
pub fn observed_labels(modes: &[ModePrediction]) -> Vec<OrbitLabel> {
    let mut out: Vec<OrbitLabel> = Vec::new();
    for m in modes {
        if !out.contains(&m.label) {
            out.push(m.label);
        }
    }
    out
}

/// Laboratory parameters of a kicked-atom experiment in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalSetup {
    pub mass: f64,
    /// Wavenumber `G` of the kicking potential (spatial period `2 pi / G`).
    pub wavenumber: f64,
    pub gravity: f64,
    pub kick: f64,
    /// Index of the nearby resonant period.
    pub order: u32,
}

/// Reduced Planck constant in J s.
pub const HBAR: f64 = 1.054_571_817e-34;

impl PhysicalSetup {
    /// `T_l = 2 pi l m / (hbar G^2)`.
    pub fn resonant_period(&self) -> f64 {
        TAU * self.order as f64 * self.mass / (HBAR * self.wavenumber.powi(2))
    }

    /// `eps` for the pulse period `T = T_l (1 + eps / (2 pi l))`.
    pub fn epsilon(&self, period: f64) -> f64 {
        TAU * self.order as f64 * (period / self.resonant_period() - 1.0)
    }

    /// `Omega = G T^2 g / (2 pi)`.
    pub fn omega_at(&self, period: f64) -> f64 {
        self.wavenumber * period * period * self.gravity / TAU
    }

    /// Foot point `omega = G g T_l^2 / (2 pi)`.
    pub fn omega(&self) -> f64 {
        self.omega_at(self.resonant_period())
    }

    /// Small-`eps` arm slope `hbar^2 G^3 k / (2 m^2 l g)`.
    pub fn alpha(&self) -> f64 {
        HBAR.powi(2) * self.wavenumber.powi(3) * self.kick
            / (2.0 * self.mass.powi(2) * self.order as f64 * self.gravity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn label(p: u64, m: u64) -> OrbitLabel {
        OrbitLabel::new(p, m).unwrap()
    }

    #[test]
    fn path_shapes() {
        let v = ep_linear(Omega::Golden, f64::INFINITY).unwrap();
        assert!(v.is_vertical());
        assert_eq!(v.omega_at(0.3), v.omega_at(-0.3));
        let ep = ep_linear("0.39".parse().unwrap(), 1.0).unwrap();
        assert_abs_diff_eq!(ep.omega_at(0.05), 0.44, epsilon = 1e-15);
        assert_abs_diff_eq!(ep.omega_at(-0.05), 0.34, epsilon = 1e-15);
        assert_eq!(ep.phi(0.0), 0.0);
        assert!(ep_linear(Omega::Golden, 0.0).is_err());
        assert!(ep_linear(Omega::Golden, -1.0).is_err());
        assert!(ep_linear(Omega::Golden, f64::NAN).is_err());
    }

    #[test]
    fn period_one_tongue_on_shallow_path() {
        // right arm moves away from 0/1 faster than the margin opens
        let ep = ep_linear("0.39".parse().unwrap(), 1.0).unwrap();
        let x = intersects_subcritical(&ep, label(1, 0), 6.0).unwrap();
        assert!(x.right.is_none());
        // left arm: |0.39 - t| < t / (2 pi)
        let beta = 1.0 / TAU;
        let w = x.left.unwrap();
        assert_abs_diff_eq!(w.ktilde.0, 0.39 / (1.0 + beta), epsilon = 1e-14);
        assert_abs_diff_eq!(w.ktilde.1, 0.39 / (1.0 - beta), epsilon = 1e-14);
    }

    #[test]
    fn own_fraction_needs_steep_arms() {
        let l = label(5, 2);
        let threshold = TAU * 5f64.sqrt();
        let w = Omega::rational(2, 5).unwrap();
        let steep = ep_linear(w.clone(), threshold * 1.01).unwrap();
        assert!(intersects_subcritical(&steep, l, 6.0).unwrap().both());
        let shallow = ep_linear(w.clone(), threshold * 0.99).unwrap();
        assert!(!intersects_subcritical(&shallow, l, 6.0).unwrap().any());
        let exact = ep_linear(w, threshold).unwrap();
        assert!(!intersects_subcritical(&exact, l, 6.0).unwrap().any());
    }

    #[test]
    fn large_period_not_on_both_arms() {
        // 89/144 with arms shallower than its margins
        let l = label(144, 89);
        let ep = ep_linear(Omega::Golden, 20.0).unwrap();
        let x = intersects_subcritical(&ep, l, 6.0).unwrap();
        assert!(!x.both());
        // 89/144 lies right of the golden mean, so only the right arm can meet it
        assert!(x.left.is_none());
    }

    #[test]
    fn window_is_inside_the_tongue() {
        let ep = ep_linear("0.39".parse().unwrap(), 40.0).unwrap();
        let l = label(5, 2);
        let x = intersects_subcritical(&ep, l, 6.0).unwrap();
        for w in [x.left, x.right].into_iter().flatten() {
            for frac in [0.01, 0.5, 0.99] {
                let t = w.ktilde.0 + frac * (w.ktilde.1 - w.ktilde.0);
                let kt = ep.ktilde_on(w.arm, t);
                let om = ep.omega_at(kt);
                assert!((om - l.ratio()).abs() < t / (TAU * 5f64.sqrt()));
                assert!(t < 6.0 * 5f64.powf(-1.5));
            }
            assert!(w.epsilon.0 < w.epsilon.1);
            assert_eq!(w.epsilon.0.signum(), w.arm.sign());
        }
    }

    #[test]
    fn acceleration_values() {
        assert_eq!(mode_acceleration(0.4, label(5, 2), 0.1).unwrap(), 0.0);
        let a = mode_acceleration(0.39, label(5, 2), -0.1).unwrap();
        assert_abs_diff_eq!(a, 0.2 * PI, epsilon = 1e-12);
        let b = mode_acceleration(0.39, label(5, 2), 0.1).unwrap();
        assert_abs_diff_eq!(a, -b);
        assert_eq!(mode_acceleration(0.39, label(5, 2), 0.0), Err(Error::ZeroEpsilon));
        assert_eq!(jumping_index(label(5, 2), -0.1), -2);
        assert_eq!(jumping_index(label(5, 2), 0.1), 2);
    }

    #[test]
    fn relevance() {
        assert_eq!(quantum_relevance(0.0, 0.1).unwrap(), 0.0);
        assert_abs_diff_eq!(quantum_relevance(0.2, -0.1).unwrap(), 2.0);
        assert!(quantum_relevance(1.0, 0.0).is_err());
        // A ~ sqrt(ktilde) = sqrt(eps k): A / eps ~ eps^{-1/2}
        let l = label(1, 0);
        let r = |eps: f64| {
            let a = crate::islands::area_perturbative(l, eps * 1.0, 0.2, 0.66).unwrap();
            quantum_relevance(a, eps).unwrap()
        };
        assert_abs_diff_eq!(r(0.01) / r(0.04), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn golden_vertical_modes() {
        let ep = ep_linear(Omega::Golden, f64::INFINITY).unwrap();
        let modes = observable_modes(&ep, 144, DEFAULT_BORDER).unwrap();
        let labels: Vec<(u64, u64)> = observed_labels(&modes).iter().map(|l| (l.m(), l.p())).collect();
        assert_eq!(
            labels,
            vec![
                (0, 1),
                (1, 1),
                (1, 2),
                (2, 3),
                (3, 5),
                (5, 8),
                (8, 13),
                (13, 21),
                (21, 34),
                (34, 55),
                (55, 89),
                (89, 144)
            ]
        );
        // vertical arms coincide: each label on both
        assert_eq!(modes.len(), 2 * labels.len());
        for m in &modes {
            assert_eq!(m.jumping_index, m.arm.sign() as i64 * m.label.m() as i64);
        }
    }

    #[test]
    fn rational_target_list_is_finite() {
        let ep = ep_linear(Omega::rational(2, 5).unwrap(), 20.0).unwrap();
        let modes = observable_modes(&ep, 10_000, DEFAULT_BORDER).unwrap();
        let last = observed_labels(&modes).pop().unwrap();
        assert_eq!(last, label(5, 2));
    }

    #[test]
    fn predicted_labels_are_farey_endpoints() {
        let ep = ep_linear("0.390152".parse().unwrap(), 30.0).unwrap();
        let ends = farey_endpoints(&ep.omega, 200).unwrap();
        for m in observable_modes(&ep, 200, DEFAULT_BORDER).unwrap() {
            let r = Rational::from_u64(m.label.m(), m.label.p()).unwrap();
            assert!(ends.contains(&r));
        }
    }

    fn sample_paths() -> Vec<ExperimentalPath> {
        let mut out = Vec::new();
        for w in ["golden", "pi-3", "0.390152", "0.27", "5/13"] {
            for alpha in [3.0, 12.0, 30.0, 80.0, f64::INFINITY] {
                out.push(ep_linear(w.parse().unwrap(), alpha).unwrap());
            }
        }
        out
    }

    #[test]
    fn convergents_meeting_the_tongue_are_predicted() {
        for ep in sample_paths() {
            let modes = observable_modes(&ep, 150, DEFAULT_BORDER).unwrap();
            let labels = observed_labels(&modes);
            for r in crate::farey::principal_convergents(&ep.omega, 150).unwrap() {
                let (m, p) = r.to_u64_pair().unwrap();
                let l = label(p, m);
                if intersects_subcritical(&ep, l, DEFAULT_BORDER).unwrap().any() {
                    assert!(labels.contains(&l), "{m}/{p} missing");
                }
            }
        }
    }

    #[test]
    fn wrong_arm_only_for_low_order() {
        for ep in sample_paths() {
            for m in observable_modes(&ep, 150, DEFAULT_BORDER).unwrap() {
                if !m.on_preferred_arm() {
                    let p = m.label.p() as f64;
                    assert!(ep.alpha > TAU * p.sqrt(), "{:?} on {:?}", m.label, m.arm);
                }
            }
        }
    }

    #[test]
    fn physical_slope_matches_path() {
        // caesium in a standing wave of 852 nm light
        let setup = PhysicalSetup {
            mass: 2.206_946_5e-25,
            wavenumber: 2.0 * TAU / 852e-9,
            gravity: 9.81,
            kick: 0.8 * PI,
            order: 2,
        };
        let tl = setup.resonant_period();
        assert_abs_diff_eq!(setup.epsilon(tl), 0.0);
        // slope of |ktilde| against |Omega - omega| for a small detuning
        let eps = 1e-6;
        let t = tl * (1.0 + eps / (TAU * 2.0));
        assert_abs_diff_eq!(setup.epsilon(t), eps, epsilon = 1e-15);
        let slope = (setup.kick * eps) / (setup.omega_at(t) - setup.omega());
        assert!((slope / setup.alpha() - 1.0).abs() < 1e-5);
    }
}
