//! Generalized quadratic Gauss sums and the polynomial that carries them.
//!
//! `P(p, m, z) = sum_{n=1}^{p} C(n) z^n` with `C(n) = exp(i pi m n (n-1) / p)`.
//! On the unit circle, `G(p, m, L) = P(p, m, e^{iL})`. The special points
//! `rho_s = exp(i pi m (2s + chi(p)) / p)` are the resonant actions in a
//! different order; there `|P| = sqrt(p)`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::map::OrbitLabel;

/// 1 for even `p`, 0 for odd.
pub fn chi(p: u64) -> u64 {
    u64::from(p.is_multiple_of(2))
}

/// `exp(i pi num / den)` with `num` reduced mod `2 den` in integers first.
fn unit_phase(num: u128, den: u64) -> Complex64 {
    let r = (num % (2 * den as u128)) as f64;
    Complex64::from_polar(1.0, PI * r / den as f64)
}

/// Resonant action `R_{p,s} = pi (2s - chi(p)) / p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonantAction {
    pub p: u64,
    pub s: i64,
    pub value: f64,
}

pub fn resonant_action(p: u64, s: i64) -> f64 {
    PI * (2 * s - chi(p) as i64) as f64 / p as f64
}

impl ResonantAction {
    pub fn new(p: u64, s: i64) -> Self {
        Self {
            p,
            s,
            value: resonant_action(p, s),
        }
    }
}

/// Value of a Gauss sum with its modulus `A` and phase `xi` in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussValue {
    #[serde(serialize_with = "ser_complex")]
    pub value: Complex64,
    pub modulus: f64,
    pub phase: f64,
}

fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

impl GaussValue {
    fn from_complex(value: Complex64) -> Self {
        let mut phase = value.arg();
        if phase <= -PI {
            phase += TAU;
        }
        Self {
            value,
            modulus: value.norm(),
            phase,
        }
    }
}

/// The coefficient table of `P(p, m, .)` for a fixed label.
#[derive(Debug, Clone)]
pub struct GaussPolynomial {
    label: OrbitLabel,
    coeffs: Vec<Complex64>,
}

impl GaussPolynomial {
    pub fn new(label: OrbitLabel) -> Self {
        let p = label.p();
        let m = label.m() as u128;
        let coeffs = (1..=p as u128).map(|n| unit_phase(m * n * (n - 1), p)).collect();
        Self { label, coeffs }
    }

    pub fn try_new(p: u64, m: u64) -> Result<Self> {
        Ok(Self::new(OrbitLabel::new(p, m)?))
    }

    pub fn label(&self) -> OrbitLabel {
        self.label
    }

    /// Coefficient `C(n)`, `1 <= n <= p`.
    pub fn coeff(&self, n: usize) -> Complex64 {
        self.coeffs[n - 1]
    }

    /// `P(z)` by Horner's rule.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
            * z
    }

    /// `P'(z) = sum n C(n) z^{n-1}`.
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .enumerate()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, (i, c)| acc * z + c * (i + 1) as f64)
    }

    /// `P''(z) = sum n (n-1) C(n) z^{n-2}`.
    pub fn second_derivative(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, (i, c)| {
                acc * z + c * ((i + 1) * i) as f64
            })
    }

    /// The special point `rho_s`.
    pub fn rho(&self, s: u64) -> Complex64 {
        let p = self.label.p();
        unit_phase(self.label.m() as u128 * (2 * s as u128 + chi(p) as u128), p)
    }

    /// `G(p, m, L)` together with modulus and phase.
    pub fn gauss_sum(&self, l: f64) -> GaussValue {
        GaussValue::from_complex(self.eval(Complex64::from_polar(1.0, l)))
    }

    /// Rebuild `P(z)` from its values at the `p` points `alpha_0 gamma^s`,
    /// `gamma = e^{2 pi i / p}`, through the Dirichlet-type kernel
    /// `F(z) = z + z^2 + ... + z^p`.
    pub fn interpolate(&self, alpha0: Complex64, z: Complex64) -> Complex64 {
        let p = self.label.p();
        let kernel = |w: Complex64| -> Complex64 {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut pw = w;
            for _ in 0..p {
                acc += pw;
                pw *= w;
            }
            acc
        };
        let mut sum = Complex64::new(0.0, 0.0);
        for s in 1..=p {
            let alpha = alpha0 * Complex64::from_polar(1.0, TAU * s as f64 / p as f64);
            sum += self.eval(alpha) * kernel(z / alpha);
        }
        sum / p as f64
    }
}

/// `P(p, m, z)`.
pub fn gauss_polynomial(p: u64, m: u64, z: Complex64) -> Result<Complex64> {
    Ok(GaussPolynomial::try_new(p, m)?.eval(z))
}

/// `G(p, m, L)`.
pub fn gauss_sum(p: u64, m: u64, l: f64) -> Result<GaussValue> {
    Ok(GaussPolynomial::try_new(p, m)?.gauss_sum(l))
}

/// Maximum absolute residual of each exact identity over all `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityReport {
    pub p: u64,
    pub m: u64,
    /// `P(rho_{s+1}) - rho_s^{-1} P(rho_s)`
    pub shift: f64,
    /// `P'(rho_0) - (p+1)/2 P(rho_0)`, odd `p` only (0 otherwise)
    pub derivative_odd: f64,
    /// `P'(rho_0) - p/(2 rho_0) (P(rho_0) + 1)`, even `p` only (0 otherwise)
    pub derivative_even: f64,
    /// `|P(rho_s)| - sqrt(p)`
    pub modulus: f64,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.shift
            .max(self.derivative_odd)
            .max(self.derivative_even)
            .max(self.modulus)
    }
}

pub fn check_identities(p: u64, m: u64) -> Result<IdentityReport> {
    let poly = GaussPolynomial::try_new(p, m)?;
    let sqrt_p = (p as f64).sqrt();
    let mut shift: f64 = 0.0;
    let mut modulus: f64 = 0.0;
    for s in 0..p {
        let rho_s = poly.rho(s);
        let val = poly.eval(rho_s);
        let next = poly.eval(poly.rho(s + 1));
        shift = shift.max((next - val / rho_s).norm());
        modulus = modulus.max((val.norm() - sqrt_p).abs());
    }
    let rho0 = poly.rho(0);
    let p0 = poly.eval(rho0);
    let d0 = poly.derivative(rho0);
    let (derivative_odd, derivative_even) = if p % 2 == 1 {
        ((d0 - p0 * ((p + 1) as f64 / 2.0)).norm(), 0.0)
    } else {
        (0.0, (d0 - (p0 + 1.0) * (p as f64 / 2.0) / rho0).norm())
    };
    Ok(IdentityReport {
        p,
        m,
        shift,
        derivative_odd,
        derivative_even,
        modulus,
    })
}

/// Empirical constants in the unit-circle derivative bounds
/// `|P'| <= c1 p^{3/2} ln(1 + p/2)` and `|P''| <= c2 p^{5/2} ln(1 + p/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeBoundReport {
    pub p: u64,
    pub m: u64,
    pub samples: usize,
    pub max_first: f64,
    pub max_second: f64,
    /// `max |P'| / (p^{3/2} ln(1+p/2))`
    pub ratio_first: f64,
    /// `max |P''| / (p^{5/2} ln(1+p/2))`
    pub ratio_second: f64,
    pub c1: f64,
    pub c2: f64,
    pub within_bounds: bool,
}

/// Sample `samples` equispaced points of the unit circle, offset by half a
/// step so the special points are not hit exactly.
pub fn check_derivative_bounds(p: u64, m: u64, samples: usize, c1: f64, c2: f64) -> Result<DerivativeBoundReport> {
    let poly = GaussPolynomial::try_new(p, m)?;
    let mut max_first: f64 = 0.0;
    let mut max_second: f64 = 0.0;
    for i in 0..samples {
        let z = Complex64::from_polar(1.0, TAU * (i as f64 + 0.5) / samples as f64);
        max_first = max_first.max(poly.derivative(z).norm());
        max_second = max_second.max(poly.second_derivative(z).norm());
    }
    let pf = p as f64;
    let log = (1.0 + pf / 2.0).ln();
    let ratio_first = max_first / (pf.powf(1.5) * log);
    let ratio_second = max_second / (pf.powf(2.5) * log);
    Ok(DerivativeBoundReport {
        p,
        m,
        samples,
        max_first,
        max_second,
        ratio_first,
        ratio_second,
        c1,
        c2,
        within_bounds: ratio_first <= c1 && ratio_second <= c2,
    })
}

/// All labels `(p, m)` with `1 <= p <= p_max`, `0 <= m < p`, coprime.
pub fn coprime_labels(p_max: u64) -> Vec<OrbitLabel> {
    (1..=p_max)
        .flat_map(|p| (0..p).filter_map(move |m| OrbitLabel::new(p, m).ok()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Explicit double sum, no Horner, no integer phase reduction.
    fn brute_gauss(p: u64, m: u64, l: f64) -> Complex64 {
        (1..=p)
            .map(|s| {
                let ph = PI * (m * s * (s - 1)) as f64 / p as f64 + s as f64 * l;
                Complex64::from_polar(1.0, ph)
            })
            .sum()
    }

    #[test]
    fn trivial_period_one() {
        let z = Complex64::new(0.3, -1.7);
        assert_eq!(gauss_polynomial(1, 0, z).unwrap(), z);
        let g = gauss_sum(1, 0, 0.0).unwrap();
        assert_abs_diff_eq!(g.phase, 0.0);
        assert_abs_diff_eq!(g.modulus, 1.0);
    }

    #[test]
    fn two_one_at_minus_i() {
        let v = gauss_polynomial(2, 1, Complex64::new(0.0, -1.0)).unwrap();
        assert_abs_diff_eq!(v.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.im, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.norm(), 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn resonant_values() {
        assert_eq!(resonant_action(5, 0), 0.0);
        assert_abs_diff_eq!(resonant_action(2, 0), -PI / 2.0);
        assert_abs_diff_eq!(resonant_action(3, 1), 2.0 * PI / 3.0, epsilon = 1e-15);
        for p in 1..8 {
            for s in -3..3 {
                assert_abs_diff_eq!(
                    resonant_action(p, s + p as i64),
                    resonant_action(p, s) + TAU,
                    epsilon = 1e-13
                );
            }
        }
    }

    #[test]
    fn modulus_at_resonant_action() {
        let g = gauss_sum(5, 2, resonant_action(5, 0)).unwrap();
        assert_abs_diff_eq!(g.modulus, 5f64.sqrt(), epsilon = 1e-13);
    }

    #[test]
    fn phase_matches_brute_force() {
        for label in coprime_labels(20) {
            let poly = GaussPolynomial::new(label);
            for s in 0..label.p() as i64 {
                let l = resonant_action(label.p(), s);
                let g = poly.gauss_sum(l);
                let b = brute_gauss(label.p(), label.m(), l);
                assert!(angle_close(g.phase, b.arg(), 1e-12), "{label} s={s}");
                assert_abs_diff_eq!(g.modulus, b.norm(), epsilon = 1e-12);
                assert!(g.phase > -PI && g.phase <= PI);
            }
        }
    }

    fn angle_close(a: f64, b: f64, tol: f64) -> bool {
        crate::map::angle_diff(a, b).abs() < tol
    }

    #[test]
    fn identities_trivial_and_small() {
        let r = check_identities(1, 0).unwrap();
        assert!(r.max_residual() < 1e-15);
        let r = check_identities(3, 1).unwrap();
        assert!(r.shift < 1e-13);
        assert!(check_identities(4, 2).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let poly = GaussPolynomial::try_new(7, 3).unwrap();
        let h = 1e-5;
        for i in 0..20 {
            let z = Complex64::from_polar(1.0, 0.37 * i as f64);
            let fd = (poly.eval(z + h) - poly.eval(z - h)) / (2.0 * h);
            assert!((fd - poly.derivative(z)).norm() < 1e-6);
            let fd2 = (poly.derivative(z + h) - poly.derivative(z - h)) / (2.0 * h);
            assert!((fd2 - poly.second_derivative(z)).norm() < 1e-5);
        }
    }

    #[test]
    fn periodic_in_action() {
        let poly = GaussPolynomial::try_new(9, 4).unwrap();
        for l in [0.1, 1.3, -2.2] {
            let a = poly.gauss_sum(l).value;
            let b = poly.gauss_sum(l + TAU).value;
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn period_one_derivative_is_unimodular() {
        let r = check_derivative_bounds(1, 0, 100, 2.0, 2.0).unwrap();
        assert_abs_diff_eq!(r.max_first, 1.0, epsilon = 1e-15);
        assert_eq!(r.max_second, 0.0);
    }

    #[test]
    fn interpolation_reproduces_polynomial() {
        for (p, m) in [(1, 0), (5, 2), (12, 5), (31, 7)] {
            let poly = GaussPolynomial::try_new(p, m).unwrap();
            let alpha0 = Complex64::from_polar(1.0, 0.123);
            for i in 0..7 {
                let z = Complex64::from_polar(1.0, 0.9 * i as f64 + 0.05);
                let d = (poly.interpolate(alpha0, z) - poly.eval(z)).norm();
                assert!(d < 1e-10, "p={p} d={d}");
            }
        }
    }

    #[test]
    fn coprime_label_count() {
        // sum of Euler totients phi(1..=10) = 32
        assert_eq!(coprime_labels(10).len(), 32);
    }
}
