//! Farey intervals, the mediant recursion that shrinks them around a target
//! `omega`, and the rational approximants it produces.
//!
//! Everything is exact: rationals are arbitrary-precision and the only
//! question ever asked about `omega` is on which side of a rational it lies.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Non-negative fraction `m/p` kept in lowest terms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(Ratio<BigUint>);

impl Rational {
    pub fn new(m: impl Into<BigUint>, p: impl Into<BigUint>) -> Result<Self> {
        let p = p.into();
        if p.is_zero() {
            return Err(Error::ZeroPeriod);
        }
        Ok(Self(Ratio::new(m.into(), p)))
    }

    pub fn from_u64(m: u64, p: u64) -> Result<Self> {
        Self::new(m, p)
    }

    pub fn zero() -> Self {
        Self(Ratio::zero())
    }

    pub fn one() -> Self {
        Self(Ratio::one())
    }

    /// Numerator.
    pub fn m(&self) -> &BigUint {
        self.0.numer()
    }

    /// Denominator.
    pub fn p(&self) -> &BigUint {
        self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// `(m, p)` when both fit in 64 bits.
    pub fn to_u64_pair(&self) -> Option<(u64, u64)> {
        Some((self.m().to_u64()?, self.p().to_u64()?))
    }

    pub fn as_ratio(&self) -> &Ratio<BigUint> {
        &self.0
    }

    fn signed(&self) -> Ratio<BigInt> {
        Ratio::new_raw(
            BigInt::from_biguint(Sign::Plus, self.m().clone()),
            BigInt::from_biguint(Sign::Plus, self.p().clone()),
        )
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.m(), self.p())
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Accepts `m/p` or a plain decimal such as `0.390152`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Invalid(format!("cannot parse '{s}' as a non-negative rational"));
        if let Some((m, p)) = s.split_once('/') {
            let m = BigUint::from_str(m.trim()).map_err(|_| bad())?;
            let p = BigUint::from_str(p.trim()).map_err(|_| bad())?;
            return Rational::new(m, p);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{int}{frac}");
        let m = BigUint::from_str(&digits).map_err(|_| bad())?;
        Rational::new(m, BigUint::from(10u32).pow(frac.len() as u32))
    }
}

/// Mediant `(m1 + m2) / (p1 + p2)`, reduced.
pub fn mediant(r1: &Rational, r2: &Rational) -> Rational {
    Rational(Ratio::new(r1.m() + r2.m(), r1.p() + r2.p()))
}

/// Default working precision in bits for irrational targets.
pub const DEFAULT_PRECISION: u32 = 256;

/// The number being approximated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Omega {
    Rational(Rational),
    /// `(sqrt 5 - 1) / 2`.
    Golden,
    /// `pi - 3`.
    PiMinus3,
}

impl fmt::Display for Omega {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Omega::Rational(r) => write!(f, "{r}"),
            Omega::Golden => f.write_str("golden"),
            Omega::PiMinus3 => f.write_str("pi-3"),
        }
    }
}

impl FromStr for Omega {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "golden" | "golden-mean" | "phi" => Ok(Omega::Golden),
            "pi-3" | "pi_minus_3" => Ok(Omega::PiMinus3),
            other => Ok(Omega::Rational(other.parse()?)),
        }
    }
}

impl Serialize for Omega {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

// pi * 2^bits to within `err` units, by Machin's formula in fixed point
fn pi_fixed(bits: u32) -> (BigInt, BigInt) {
    static CACHE: Mutex<Vec<(u32, BigInt, BigInt)>> = Mutex::new(Vec::new());
    if let Some(hit) = CACHE.lock().unwrap().iter().find(|(b, _, _)| *b == bits) {
        return (hit.1.clone(), hit.2.clone());
    }
    let guard = 16;
    let scale = BigInt::one() << (bits + guard);
    let atan_inv = |x: u32| -> (BigInt, u64) {
        let x2 = BigInt::from(x) * BigInt::from(x);
        let mut power = &scale / BigInt::from(x);
        let mut sum = BigInt::zero();
        let mut terms = 0u64;
        let mut k = 0u64;
        while !power.is_zero() {
            let term = &power / BigInt::from(2 * k + 1);
            if k.is_multiple_of(2) {
                sum += term;
            } else {
                sum -= term;
            }
            power /= &x2;
            k += 1;
            terms += 1;
        }
        (sum, terms + 1)
    };
    let (a5, n5) = atan_inv(5);
    let (a239, n239) = atan_inv(239);
    let value = BigInt::from(16) * a5 - BigInt::from(4) * a239;
    // every truncation is below one unit at the guarded scale
    let err_guarded = BigInt::from(16 * n5 + 4 * n239 + 1);
    let value = value >> guard;
    let err = (err_guarded >> guard) + BigInt::from(2);
    CACHE.lock().unwrap().push((bits, value.clone(), err.clone()));
    (value, err)
}

impl Omega {
    pub fn rational(m: u64, p: u64) -> Result<Self> {
        Ok(Omega::Rational(Rational::from_u64(m, p)?))
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Omega::Rational(r) => Some(r),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Omega::Rational(r) => r.to_f64(),
            Omega::Golden => (5f64.sqrt() - 1.0) / 2.0,
            Omega::PiMinus3 => std::f64::consts::PI - 3.0,
        }
    }

    /// Sign of `omega - num/den` for a signed fraction with `den > 0`.
    fn cmp_fraction(&self, num: &BigInt, den: &BigInt) -> Ordering {
        debug_assert!(den.is_positive());
        if num.is_negative() {
            // every target is non-negative
            return Ordering::Greater;
        }
        match self {
            Omega::Rational(r) => {
                let lhs = BigInt::from_biguint(Sign::Plus, r.m().clone()) * den;
                let rhs = num * BigInt::from_biguint(Sign::Plus, r.p().clone());
                lhs.cmp(&rhs)
            }
            Omega::Golden => {
                // (sqrt5 - 1)/2 vs a/b  <=>  5 b^2 vs (2a + b)^2
                let lhs = BigInt::from(5) * den * den;
                let t = BigInt::from(2) * num + den;
                lhs.cmp(&(&t * &t))
            }
            Omega::PiMinus3 => {
                let mut bits = DEFAULT_PRECISION;
                loop {
                    let (pi, err) = pi_fixed(bits);
                    // pi * den vs (num + 3 den) * 2^bits
                    let lhs = &pi * den;
                    let rhs = (num + BigInt::from(3) * den) << bits;
                    let diff = lhs - rhs;
                    if diff.abs() > &err * den {
                        return if diff.is_positive() {
                            Ordering::Greater
                        } else {
                            Ordering::Less
                        };
                    }
                    bits *= 2;
                }
            }
        }
    }

    /// Sign of `omega - r`.
    pub fn cmp_rational(&self, r: &Rational) -> Ordering {
        let s = r.signed();
        self.cmp_fraction(s.numer(), s.denom())
    }

    /// Rational bounds `lo <= omega <= hi` at `bits` of precision; equal
    /// for an exact target.
    pub fn bounds(&self, bits: u32) -> (Ratio<BigInt>, Ratio<BigInt>) {
        match self {
            Omega::Rational(r) => (r.signed(), r.signed()),
            Omega::Golden => {
                let scale = BigInt::one() << bits;
                let s = (BigInt::from(5) * &scale * &scale).sqrt();
                let den = &scale * BigInt::from(2);
                (
                    Ratio::new(&s - &scale, den.clone()),
                    Ratio::new(&s + BigInt::one() - &scale, den),
                )
            }
            Omega::PiMinus3 => {
                let (pi, err) = pi_fixed(bits);
                let scale = BigInt::one() << bits;
                let three = BigInt::from(3) * &scale;
                (
                    Ratio::new(&pi - &err - &three, scale.clone()),
                    Ratio::new(&pi + &err - &three, scale),
                )
            }
        }
    }

    /// `|r - omega|` as a float, from a high-precision bound.
    pub fn distance_f64(&self, r: &Rational) -> f64 {
        let (lo, hi) = self.bounds(DEFAULT_PRECISION);
        let mid = (lo + hi) / BigInt::from(2);
        (r.signed() - mid).abs().to_f64().unwrap_or(f64::NAN)
    }

    /// Compare `d(r1)` with `d(r2)`: `Less` when `r1` is strictly closer.
    pub fn cmp_distance(&self, r1: &Rational, r2: &Rational) -> Ordering {
        let (s1, s2) = (self.cmp_rational(r1), self.cmp_rational(r2));
        match (s1, s2) {
            (Ordering::Equal, Ordering::Equal) => Ordering::Equal,
            (Ordering::Equal, _) => Ordering::Less,
            (_, Ordering::Equal) => Ordering::Greater,
            (Ordering::Greater, Ordering::Greater) => r2.cmp(r1),
            (Ordering::Less, Ordering::Less) => r1.cmp(r2),
            _ => {
                // opposite sides: the one on omega's side of the midpoint wins
                let mid = (r1.signed() + r2.signed()) / BigInt::from(2);
                let side = self.cmp_fraction(mid.numer(), mid.denom());
                let r1_left = s1 == Ordering::Greater;
                match side {
                    Ordering::Equal => Ordering::Equal,
                    Ordering::Less => {
                        if r1_left {
                            Ordering::Less
                        } else {
                            Ordering::Greater
                        }
                    }
                    Ordering::Greater => {
                        if r1_left {
                            Ordering::Greater
                        } else {
                            Ordering::Less
                        }
                    }
                }
            }
        }
    }

    /// Compare `delta(r) = p(r) d(r) = |p omega - m|` of two rationals.
    pub fn cmp_delta(&self, r1: &Rational, r2: &Rational) -> Ordering {
        let (a, b) = (r1.signed(), r2.signed());
        let (m1, p1) = (a.numer(), a.denom());
        let (m2, p2) = (b.numer(), b.denom());
        let (s1, s2) = (self.cmp_rational(r1), self.cmp_rational(r2));
        let sg = |o: Ordering| match o {
            Ordering::Less => -1i32,
            Ordering::Equal => 0,
            Ordering::Greater => 1,
        };
        let (g1, g2) = (sg(s1), sg(s2));
        if g1 == 0 || g2 == 0 {
            return g1.abs().cmp(&g2.abs());
        }
        // |p1 w - m1| - |p2 w - m2| = (g1 p1 - g2 p2) w - (g1 m1 - g2 m2)
        let coef = BigInt::from(g1) * p1 - BigInt::from(g2) * p2;
        let rhs = BigInt::from(g1) * m1 - BigInt::from(g2) * m2;
        if coef.is_zero() {
            return BigInt::zero().cmp(&rhs);
        }

        if coef.is_positive() {
            self.cmp_fraction(&rhs, &coef)
        } else {
            self.cmp_fraction(&-rhs, &-coef).reverse()
        }
    }
}

/// Closed interval `[left, right]` with unit determinant, or the point `[omega]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum FareyInterval {
    Proper { left: Rational, right: Rational },
    Point(Rational),
}

impl FareyInterval {
    pub fn unit() -> Self {
        FareyInterval::Proper {
            left: Rational::zero(),
            right: Rational::one(),
        }
    }

    /// `[left, right]` after checking the unit-determinant condition.
    pub fn new(left: Rational, right: Rational) -> Result<Self> {
        let iv = FareyInterval::Proper { left, right };
        if iv.determinant() != Some(BigInt::one()) {
            return Err(Error::Invalid("endpoints do not form a Farey interval".into()));
        }
        Ok(iv)
    }

    /// `m(right) p(left) - m(left) p(right)`, which is 1 for a Farey interval.
    pub fn determinant(&self) -> Option<BigInt> {
        match self {
            FareyInterval::Proper { left, right } => {
                let a = BigInt::from_biguint(Sign::Plus, right.m() * left.p());
                let b = BigInt::from_biguint(Sign::Plus, left.m() * right.p());
                Some(a - b)
            }
            FareyInterval::Point(_) => None,
        }
    }

    pub fn endpoints(&self) -> (&Rational, &Rational) {
        match self {
            FareyInterval::Proper { left, right } => (left, right),
            FareyInterval::Point(r) => (r, r),
        }
    }

    pub fn width(&self) -> Ratio<BigUint> {
        let (l, r) = self.endpoints();
        r.as_ratio() - l.as_ratio()
    }

    pub fn is_point(&self) -> bool {
        matches!(self, FareyInterval::Point(_))
    }

    pub fn contains(&self, other: &FareyInterval) -> bool {
        let (a, b) = self.endpoints();
        let (c, d) = other.endpoints();
        a <= c && d <= b
    }

    /// Mediant of the endpoints; `None` for a point.
    pub fn mediant(&self) -> Option<Rational> {
        match self {
            FareyInterval::Proper { left, right } => Some(mediant(left, right)),
            FareyInterval::Point(_) => None,
        }
    }
}

impl fmt::Display for FareyInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FareyInterval::Proper { left, right } => write!(f, "[{left}, {right}]"),
            FareyInterval::Point(r) => write!(f, "[{r}]"),
        }
    }
}

fn check_unit(omega: &Omega) -> Result<()> {
    if omega.cmp_rational(&Rational::zero()) != Ordering::Greater
        || omega.cmp_rational(&Rational::one()) != Ordering::Less
    {
        return Err(Error::Invalid(format!("omega = {omega} must lie in (0, 1)")));
    }
    Ok(())
}

/// One application of the Farey map: keep the half of `interval` that
/// contains `omega`, or collapse to `[omega]` when the mediant hits it.
pub fn farey_step(interval: &FareyInterval, omega: &Omega) -> Result<FareyInterval> {
    match interval {
        FareyInterval::Point(r) => {
            if omega.cmp_rational(r) != Ordering::Equal {
                return Err(Error::Invalid(format!("omega is not {r}")));
            }
            Ok(interval.clone())
        }
        FareyInterval::Proper { left, right } => {
            if omega.cmp_rational(left) != Ordering::Greater || omega.cmp_rational(right) != Ordering::Less {
                return Err(Error::Invalid(format!("omega is not inside {interval}")));
            }
            let mid = mediant(left, right);
            Ok(match omega.cmp_rational(&mid) {
                Ordering::Equal => FareyInterval::Point(mid),
                Ordering::Less => FareyInterval::Proper {
                    left: left.clone(),
                    right: mid,
                },
                Ordering::Greater => FareyInterval::Proper {
                    left: mid,
                    right: right.clone(),
                },
            })
        }
    }
}

/// When to stop the Farey recursion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FareyStop {
    /// Stop before an endpoint denominator would exceed this bound.
    MaxDenominator(BigUint),
    /// Produce at most this many steps after `[0, 1]`.
    MaxSteps(usize),
}

/// The nested intervals `F_0 = [0, 1], F_{n+1} = step(F_n)`. The sequence ends
/// at the stop condition or, for rational `omega`, at the first `[omega]`.
pub fn farey_algorithm(omega: &Omega, stop: &FareyStop) -> Result<Vec<FareyInterval>> {
    check_unit(omega)?;
    let mut out = vec![FareyInterval::unit()];
    loop {
        let cur = out.last().unwrap();
        if cur.is_point() {
            break;
        }
        match stop {
            FareyStop::MaxSteps(n) if out.len() > *n => break,
            FareyStop::MaxDenominator(pmax) => {
                let mid = cur.mediant().unwrap();
                if mid.p() > pmax {
                    break;
                }
            }
            _ => {}
        }
        let next = farey_step(cur, omega)?;
        out.push(next);
    }
    Ok(out)
}

/// The endpoint of `interval` that is d-closer to `omega`; ties go to the
/// smaller denominator.
pub fn closer_endpoint(interval: &FareyInterval, omega: &Omega) -> Rational {
    let (l, r) = interval.endpoints();
    match omega.cmp_distance(l, r) {
        Ordering::Less => l.clone(),
        Ordering::Greater => r.clone(),
        Ordering::Equal => {
            if l.p() <= r.p() {
                l.clone()
            } else {
                r.clone()
            }
        }
    }
}

/// `r*_{omega, n}`: the d-closer endpoint of `F_{omega, n}`. Past
/// termination for rational `omega` this is `omega` itself.
pub fn farey_approximant(omega: &Omega, n: usize) -> Result<Rational> {
    let seq = farey_algorithm(omega, &FareyStop::MaxSteps(n))?;
    Ok(closer_endpoint(seq.last().unwrap(), omega))
}

/// Distinct endpoints of the Farey intervals with denominator `<= p_max`,
/// in order of first appearance (left before right within a step).
pub fn farey_endpoints(omega: &Omega, p_max: u64) -> Result<Vec<Rational>> {
    let pmax = BigUint::from(p_max);
    let seq = farey_algorithm(omega, &FareyStop::MaxDenominator(pmax.clone()))?;
    let mut out: Vec<Rational> = Vec::new();
    for iv in &seq {
        let (l, r) = iv.endpoints();
        for e in [l, r] {
            if e.p() <= &pmax && !out.contains(e) {
                out.push(e.clone());
            }
        }
    }
    Ok(out)
}

/// Best approximants in the sense of distance, with denominator `<= p_max`,
/// in increasing denominator.
pub fn d_best_approximants(omega: &Omega, p_max: u64) -> Result<Vec<Rational>> {
    let mut ends = farey_endpoints(omega, p_max)?;
    ends.sort_by(|a, b| a.p().cmp(b.p()).then_with(|| a.cmp(b)));
    let mut out = Vec::new();
    let mut best: Option<Rational> = None;
    let mut i = 0;
    while i < ends.len() {
        let mut j = i;
        while j < ends.len() && ends[j].p() == ends[i].p() {
            j += 1;
        }
        let group = &ends[i..j];
        let mut group_best: Option<&Rational> = None;
        for r in group {
            let wins = best.as_ref().is_none_or(|b| omega.cmp_distance(r, b) == Ordering::Less);
            if wins {
                out.push(r.clone());
            }
            if group_best.is_none_or(|g| omega.cmp_distance(r, g) == Ordering::Less) {
                group_best = Some(r);
            }
        }
        let gb = group_best.unwrap().clone();
        if best
            .as_ref()
            .is_none_or(|b| omega.cmp_distance(&gb, b) == Ordering::Less)
        {
            best = Some(gb);
        }
        i = j;
    }
    Ok(out)
}

/// Continued-fraction convergents `h_n / k_n` of `omega` (starting with
/// `0/1`) with denominator `<= p_max`. Irrational targets are expanded from
/// a certified enclosure whose precision grows until the list is settled.
pub fn continued_fraction_convergents(omega: &Omega, p_max: u64) -> Result<Vec<Rational>> {
    check_unit(omega)?;
    let pmax = BigUint::from(p_max);
    let mut bits = DEFAULT_PRECISION;
    loop {
        let (lo, hi) = omega.bounds(bits);
        let (mut x, mut y) = (lo, hi);
        let (mut h_prev, mut h) = (BigUint::one(), BigUint::zero());
        let (mut k_prev, mut k) = (BigUint::zero(), BigUint::one());
        let mut out = vec![Rational::zero()];
        let settled;
        loop {
            let fx = x.fract();
            let fy = y.fract();
            if fx.is_zero() || fy.is_zero() {
                // exact rational finished, or the enclosure touches an integer
                settled = x == y || &k + &k_prev > pmax;
                break;
            }
            let (ix, iy) = (fx.recip(), fy.recip());
            let (ax, ay) = (ix.to_integer(), iy.to_integer());
            if ax != ay {
                settled = &k + &k_prev > pmax;
                break;
            }
            let a = ax.to_biguint().expect("positive partial quotient");
            let h_next = &a * &h + &h_prev;
            let k_next = &a * &k + &k_prev;
            if k_next > pmax {
                settled = true;
                break;
            }
            h_prev = std::mem::replace(&mut h, h_next);
            k_prev = std::mem::replace(&mut k, k_next);
            out.push(Rational::new(h.clone(), k.clone())?);
            // the enclosure reverses orientation at every inversion
            x = iy;
            y = ix;
            if x > y {
                std::mem::swap(&mut x, &mut y);
            }
        }
        if settled || omega.as_rational().is_some() {
            return Ok(out);
        }
        bits *= 2;
    }
}

/// Continued-fraction convergents strictly inside `(0, 1)` with
/// denominator `<= p_max`.
pub fn convergents(omega: &Omega, p_max: u64) -> Result<Vec<Rational>> {
    let zero = Rational::zero();
    let one = Rational::one();
    Ok(continued_fraction_convergents(omega, p_max)?
        .into_iter()
        .filter(|r| *r != zero && *r != one)
        .collect())
}

/// Best approximants in the sense of `delta`: the continued-fraction
/// convergents together with both fractions of denominator 1, which have
/// no competitors.
pub fn principal_convergents(omega: &Omega, p_max: u64) -> Result<Vec<Rational>> {
    let mut out = continued_fraction_convergents(omega, p_max)?;
    if !out.contains(&Rational::one()) {
        out.insert(1, Rational::one());
    }
    Ok(out)
}

/// All reduced fractions in `[0, 1]` with denominator `<= max_den`, ascending.
pub fn farey_series(max_den: u64) -> Result<Vec<Rational>> {
    if max_den == 0 {
        return Err(Error::ZeroPeriod);
    }
    let n = max_den;
    let (mut a, mut b, mut c, mut d) = (0u64, 1u64, 1u64, n);
    let mut out = vec![Rational::zero()];
    while c <= n {
        let k = (n + b) / d;
        let (na, nb) = (c, d);
        let (nc, nd) = (k * c - a, k * d - b);
        a = na;
        b = nb;
        c = nc;
        d = nd;
        out.push(Rational::from_u64(a, b)?);
    }
    Ok(out)
}

/// Outcome of the theorem checks over a sample of targets.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TheoremReport {
    pub samples: usize,
    pub steps: usize,
    /// Proper intervals whose determinant is not 1.
    pub determinant_failures: usize,
    /// Intervals not contained in their predecessor or not strictly narrower.
    pub nesting_failures: usize,
    /// Mediants whose denominator is not the sum, or that are not reduced.
    pub mediant_failures: usize,
    /// d-closer endpoints beaten by an earlier endpoint of smaller denominator.
    pub best_approximant_failures: usize,
    /// Steps where the delta-closer endpoint was dropped, or a delta tie did
    /// not lead to `[omega]`.
    pub delta_survival_failures: usize,
    /// Intervals with no principal convergent among their endpoints.
    pub convergent_failures: usize,
    /// Rational targets that reached `[omega]` within the depth.
    pub terminated: usize,
    pub rational_samples: usize,
    /// Endpoint sequences along which the largest `p^{1.5} d` over the
    /// later half of the steps is below the largest over the earlier half.
    pub decay_decreasing: usize,
    pub decay_total: usize,
}

impl TheoremReport {
    pub fn exact_failures(&self) -> usize {
        self.determinant_failures
            + self.nesting_failures
            + self.mediant_failures
            + self.best_approximant_failures
            + self.delta_survival_failures
            + self.convergent_failures
    }

    pub fn decay_fraction(&self) -> f64 {
        if self.decay_total == 0 {
            return 1.0;
        }
        self.decay_decreasing as f64 / self.decay_total as f64
    }

    fn merge(mut self, o: TheoremReport) -> TheoremReport {
        self.samples += o.samples;
        self.steps += o.steps;
        self.determinant_failures += o.determinant_failures;
        self.nesting_failures += o.nesting_failures;
        self.mediant_failures += o.mediant_failures;
        self.best_approximant_failures += o.best_approximant_failures;
        self.delta_survival_failures += o.delta_survival_failures;
        self.convergent_failures += o.convergent_failures;
        self.terminated += o.terminated;
        self.rational_samples += o.rational_samples;
        self.decay_decreasing += o.decay_decreasing;
        self.decay_total += o.decay_total;
        self
    }
}

fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

// upper envelope of the later half against the earlier half
fn envelope_drops(ys: &[f64]) -> Option<bool> {
    if ys.len() < 4 {
        return None;
    }
    let h = ys.len() / 2;
    let peak = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some(peak(&ys[h..]) < peak(&ys[..h]))
}

fn check_one(omega: &Omega, depth: usize) -> Result<TheoremReport> {
    let seq = farey_algorithm(omega, &FareyStop::MaxSteps(depth))?;
    let mut rep = TheoremReport {
        samples: 1,
        steps: seq.len() - 1,
        ..Default::default()
    };
    let max_p = seq
        .iter()
        .flat_map(|iv| {
            let (l, r) = iv.endpoints();
            [l.p().clone(), r.p().clone()]
        })
        .max()
        .unwrap();
    let pmax = max_p.to_u64().unwrap_or(u64::MAX);
    let principal = principal_convergents(omega, pmax)?;

    // endpoints in order of appearance; each new one has the largest
    // denominator so far, so "smaller denominator" means "seen earlier"
    let mut seen: Vec<Rational> = Vec::new();
    let mut index: HashMap<Rational, usize> = HashMap::new();
    let mut best_upto: Vec<usize> = Vec::new();
    for (n, iv) in seq.iter().enumerate() {
        if let FareyInterval::Proper { left, right } = iv {
            if iv.determinant() != Some(BigInt::one()) {
                rep.determinant_failures += 1;
            }
            let width = Ratio::new(BigUint::one(), left.p() * right.p());
            if iv.width() != width {
                rep.determinant_failures += 1;
            }
            let mid = iv.mediant().unwrap();
            let raw_m = left.m() + right.m();
            if mid.p() != &(left.p() + right.p()) || mid.m() != &raw_m {
                rep.mediant_failures += 1;
            }
        }
        if n > 0 {
            let prev = &seq[n - 1];
            let narrower = iv.is_point() || iv.width() < prev.width();
            if !prev.contains(iv) || !narrower {
                rep.nesting_failures += 1;
            }
        }
        let (l, r) = iv.endpoints();
        for e in [l, r] {
            if index.contains_key(e) {
                continue;
            }
            if let Some(last) = seen.last() {
                if e.p() <= last.p() && !e.p().is_one() {
                    rep.mediant_failures += 1;
                }
            }
            let i = seen.len();
            let best = match best_upto.last() {
                Some(&b) if omega.cmp_distance(&seen[b], e) != Ordering::Greater => b,
                _ => i,
            };
            index.insert(e.clone(), i);
            seen.push(e.clone());
            best_upto.push(best);
        }
        let star = closer_endpoint(iv, omega);
        let first = if star.p().is_one() { 0 } else { index[&star] };
        let beaten = first > 0 && omega.cmp_distance(&seen[best_upto[first - 1]], &star) != Ordering::Greater;
        if beaten {
            rep.best_approximant_failures += 1;
        }
        if !principal.contains(l) && !principal.contains(r) {
            rep.convergent_failures += 1;
        }
        if let (FareyInterval::Proper { left, right }, Some(next)) = (iv, seq.get(n + 1)) {
            match omega.cmp_delta(left, right) {
                Ordering::Equal => {
                    if !(next.is_point() && omega.as_rational().is_some()) {
                        rep.delta_survival_failures += 1;
                    }
                }
                ord => {
                    let keep = if ord == Ordering::Less { left } else { right };
                    let (nl, nr) = next.endpoints();
                    if keep != nl && keep != nr {
                        rep.delta_survival_failures += 1;
                    }
                }
            }
        }
    }
    if omega.as_rational().is_some() {
        rep.rational_samples = 1;
        if seq.last().unwrap().is_point() {
            rep.terminated = 1;
        }
    }

    // decay of p^{1.5} d along both endpoint sequences, for targets that did
    // not terminate
    if !seq.last().unwrap().is_point() {
        let (lo, hi) = omega.bounds(DEFAULT_PRECISION.max(4 * max_p.bits() as u32 + 64));
        let target = (lo + hi) / BigInt::from(2);
        for side in 0..2 {
            let series: Vec<f64> = seq
                .iter()
                .map(|iv| {
                    let (l, r) = iv.endpoints();
                    let e = if side == 0 { l } else { r };
                    let d = (e.signed() - &target).abs();
                    if d.is_zero() {
                        return f64::NEG_INFINITY;
                    }
                    let dn = d.numer().to_biguint().unwrap();
                    let dd = d.denom().to_biguint().unwrap();
                    1.5 * ln_big(e.p()) + ln_big(&dn) - ln_big(&dd)
                })
                .collect();
            if let Some(drops) = envelope_drops(&series) {
                rep.decay_total += 1;
                if drops {
                    rep.decay_decreasing += 1;
                }
            }
        }
    }
    Ok(rep)
}

/// Run the exact interval checks and the decay statistic over `omegas`,
/// each to `depth` steps of the Farey map.
pub fn check_theorems(omegas: &[Omega], depth: usize) -> Result<TheoremReport> {
    omegas
        .par_iter()
        .map(|w| check_one(w, depth))
        .try_reduce(TheoremReport::default, |a, b| Ok(a.merge(b)))
}

/// Scan every reduced fraction strictly inside each Farey interval with
/// `p' + p'' <= max_sum` and count violations of the denominator bound
/// (denominator at least `p' + p''`, equality only for the mediant).
pub fn check_denominator_bound(max_sum: u64) -> usize {
    let series = farey_series(max_sum).expect("max_sum >= 1");
    let as_pair = |r: &Rational| r.to_u64_pair().unwrap();
    let mut intervals = Vec::new();
    for q in 1..max_sum {
        let fs = farey_series(q).unwrap();
        for w in fs.windows(2) {
            let (a, b) = (as_pair(&w[0]), as_pair(&w[1]));
            if a.1 + b.1 <= max_sum {
                intervals.push((a, b));
            }
        }
    }
    intervals.sort();
    intervals.dedup();
    intervals
        .par_iter()
        .map(|&((m1, p1), (m2, p2))| {
            let mut bad = 0;
            for r in &series {
                let (m, p) = as_pair(r);
                // strictly inside: m1/p1 < m/p < m2/p2
                if m * p1 > m1 * p && m2 * p > m * p2 {
                    let sum = p1 + p2;
                    let is_mediant = m == m1 + m2 && p == sum;
                    if p < sum || (p == sum && !is_mediant) {
                        bad += 1;
                    }
                }
            }
            bad
        })
        .sum()
}
