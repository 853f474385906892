//! Size of the stable islands: the separatrix estimate from the resonant
//! pendulum and a brute-force measurement on the exact map.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{angle_diff, trace, CylinderMap, CylinderPoint, MapParams, OrbitLabel, TorusPoint};
use crate::perturbation::lambda_of;

fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "lambda",
            value: lambda,
        })
    }
}

/// Scaled separatrix energy gap `lambda (arcsin lambda - pi/2) + sqrt(1 - lambda^2)`.
pub fn h_of_lambda(lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    // arcsin(x) - pi/2 = -arccos(x), which stays accurate near 1
    Ok((1.0 - lambda * lambda).sqrt() - lambda * lambda.acos())
}

// sin(u) - u without cancellation for small u
fn sin_minus_id(u: f64) -> f64 {
    if u.abs() > 0.1 {
        return u.sin() - u;
    }
    let u2 = u * u;
    let mut term = -u * u2 / 6.0;
    let mut sum = term;
    for n in 2..8 {
        let k = (2 * n) as f64;
        term *= -u2 / (k * (k + 1.0));
        sum += term;
    }
    sum
}

fn trigo_residual(lambda: f64, u: f64) -> f64 {
    let s = (1.0 - lambda * lambda).sqrt();
    let half = (0.5 * u).sin();
    2.0 * s * half * half + lambda * sin_minus_id(u)
}

/// Angular width of the separatrix: the root in `(0, 2pi]` of
/// `lambda u = lambda sin u + sqrt(1 - lambda^2) (1 - cos u)`, continuous with
/// `u(0) = 2pi` and `u(1) = 0`.
pub fn u_of_lambda(lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if lambda == 0.0 {
        return Ok(TAU);
    }
    if lambda == 1.0 {
        return Ok(0.0);
    }
    // residual is positive just above the trivial root and negative at 2 pi
    let (mut lo, mut hi) = (1e-9_f64, TAU);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if trigo_residual(lambda, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut u = 0.5 * (lo + hi);
    let s = (1.0 - lambda * lambda).sqrt();
    for _ in 0..3 {
        let d = s * u.sin() + lambda * (u.cos() - 1.0);
        if d == 0.0 {
            break;
        }
        let next = u - trigo_residual(lambda, u) / d;
        if !(lo - 1e-12..=hi + 1e-12).contains(&next) {
            break;
        }
        u = next;
    }
    Ok(u)
}

/// `4 u(lambda) sqrt(h(lambda))`, decreasing from `8 pi` to 0.
pub fn f_of_lambda(lambda: f64) -> Result<f64> {
    Ok(4.0 * u_of_lambda(lambda)? * h_of_lambda(lambda)?.max(0.0).sqrt())
}

/// Extent of the separatrix of the resonant pendulum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparatrixGeometry {
    /// Full momentum extent, `4 p^{-1/4} sqrt(|ktilde| h)`.
    pub delta_l3: f64,
    /// Angular extent `u(lambda)`.
    pub delta_theta3: f64,
    pub h: f64,
    pub u: f64,
    pub f: f64,
}

pub fn separatrix(label: OrbitLabel, ktilde: f64, lambda: f64) -> Result<SeparatrixGeometry> {
    let h = h_of_lambda(lambda)?;
    let u = u_of_lambda(lambda)?;
    let p = label.p() as f64;
    Ok(SeparatrixGeometry {
        delta_l3: 4.0 * p.powf(-0.25) * (ktilde.abs() * h).sqrt(),
        delta_theta3: u,
        h,
        u,
        f: 4.0 * u * h.sqrt(),
    })
}

/// Separatrix estimate of the area of one island,
/// `c p^{-1/4} |ktilde|^{1/2} f(lambda)`.
pub fn area_perturbative(label: OrbitLabel, ktilde: f64, lambda: f64, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::OutOfRange { name: "c", value: c });
    }
    Ok(c * (label.p() as f64).powf(-0.25) * ktilde.abs().sqrt() * f_of_lambda(lambda)?)
}

/// Settings for [`area_numerical`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IslandConfig {
    /// Initial conditions per axis.
    pub grid: usize,
    /// Iterations of the period map.
    pub iterations: usize,
    /// Window size relative to the separatrix box.
    pub window_scale: f64,
    /// Escape threshold relative to the window half-widths.
    pub cutoff_scale: f64,
    /// Largest tilt used to size the window; keeps it open near the margins.
    pub lambda_cap: f64,
}

impl Default for IslandConfig {
    fn default() -> Self {
        Self {
            grid: 120,
            iterations: 2000,
            window_scale: 1.5,
            cutoff_scale: 1.0,
            lambda_cap: 0.995,
        }
    }
}

/// Half-widths `(L, theta)` of the sampling window around an island.
pub fn island_window(params: &MapParams, label: OrbitLabel, config: &IslandConfig) -> Result<(f64, f64)> {
    let lambda = lambda_of(params, label).min(config.lambda_cap);
    let geom = separatrix(label, params.ktilde, lambda)?;
    let half_l = 0.5 * config.window_scale * geom.delta_l3;
    let half_theta = (0.5 * config.window_scale * geom.delta_theta3).min(PI);
    Ok((half_l, half_theta))
}

/// Area of the island around the elliptic periodic point `center` (a torus
/// point at step 0 of the orbit), measured by counting initial conditions in
/// a window that stay close to `center` under the period map.
pub fn area_numerical(params: &MapParams, label: OrbitLabel, center: TorusPoint, config: &IslandConfig) -> Result<f64> {
    if config.grid == 0 || config.iterations == 0 {
        return Err(Error::Invalid(
            "island grid and iteration count must be positive".into(),
        ));
    }
    if params.ktilde == 0.0 {
        return Err(Error::NoPendulum);
    }
    let map = CylinderMap::from_params(params, label);
    let start = CylinderPoint::new(center.j, center.theta);
    let (image, jac) = map.compose_with_tangent(start);
    let tr = trace(&jac);
    let closure = (image.l - start.l)
        .abs()
        .max(angle_diff(image.theta, start.theta).abs());
    if closure > 1e-7 {
        return Err(Error::NotPeriodic { closure });
    }
    if tr.abs() >= 2.0 {
        return Err(Error::NotElliptic { trace: tr });
    }

    let (half_l, half_theta) = island_window(params, label, config)?;
    let (cut_l, cut_theta) = (half_l * config.cutoff_scale, half_theta * config.cutoff_scale);
    let n = config.grid;
    let trapped: usize = (0..n)
        .into_par_iter()
        .map(|i| {
            let dl = half_l * (2.0 * (i as f64 + 0.5) / n as f64 - 1.0);
            (0..n)
                .filter(|&j| {
                    let dt = half_theta * (2.0 * (j as f64 + 0.5) / n as f64 - 1.0);
                    stays_near(&map, start, dl, dt, cut_l, cut_theta, config.iterations)
                })
                .count()
        })
        .sum();
    let window = 4.0 * half_l * half_theta;
    Ok(window * trapped as f64 / (n * n) as f64)
}

fn stays_near(
    map: &CylinderMap,
    center: CylinderPoint,
    dl: f64,
    dtheta: f64,
    cut_l: f64,
    cut_theta: f64,
    iterations: usize,
) -> bool {
    let mut x = CylinderPoint::new(center.l + dl, center.theta + dtheta);
    let mut unwrapped = dtheta;
    for _ in 0..iterations {
        let prev = x.theta;
        x = map.compose(x);
        // the period map moves the angle by much less than pi inside the window
        unwrapped += angle_diff(x.theta, prev);
        if (x.l - center.l).abs() > cut_l || unwrapped.abs() > cut_theta {
            return false;
        }
    }
    true
}

/// Least-squares `c` in `measured ~ c * model`.
pub fn fit_factor(pairs: &[(f64, f64)]) -> Option<f64> {
    let (num, den) = pairs.iter().fold((0.0, 0.0), |(n, d), &(measured, model)| {
        (n + measured * model, d + model * model)
    });
    (den > 0.0).then(|| num / den)
}

/// Exponent and prefactor of a least-squares power law `y = A x^e` fitted
/// in log-log space. Points with non-positive coordinates are skipped.
pub fn fit_power_law(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, (my - slope * mx).exp()))
}

/// Separatrix box factor relating the area estimate to a perfectly
/// untilted pendulum: the exact separatrix area is `16 p^{-1/4} sqrt(ktilde)`.
pub const UNTILTED_FACTOR: f64 = 2.0 / PI;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbation::{equilibria, PendulumParams};
    use approx::assert_abs_diff_eq;

    #[test]
    fn h_values() {
        assert_abs_diff_eq!(h_of_lambda(0.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h_of_lambda(1.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h_of_lambda(0.5).unwrap(), 0.342427, epsilon = 1e-6);
        assert!(h_of_lambda(1.2).is_err());
        assert!(h_of_lambda(-0.1).is_err());
    }

    #[test]
    fn h_matches_potential_gap() {
        // V(theta_i) - V(theta_s) = 2 k sqrt(p) h(lambda)
        for &(p, a) in &[(1u64, 0.3), (3, -0.2), (5, 0.41)] {
            let pend = PendulumParams::new(p, a, 1.0);
            let eq = equilibria(&pend).unwrap().unwrap();
            // choose the representative of the maximum that bounds the well
            let gap = (-1..=1)
                .map(|w| pend.potential(eq.maximum + TAU * w as f64) - pend.potential(eq.minimum))
                .filter(|g| *g >= 0.0)
                .fold(f64::INFINITY, f64::min);
            let h = h_of_lambda(pend.lambda()).unwrap();
            assert_abs_diff_eq!(gap, 2.0 * (p as f64).sqrt() * h, epsilon = 1e-12);
        }
    }

    #[test]
    fn u_endpoints_and_residual() {
        assert_eq!(u_of_lambda(0.0).unwrap(), TAU);
        assert_eq!(u_of_lambda(1.0).unwrap(), 0.0);
        for i in 1..10 {
            let lam = i as f64 / 10.0;
            let u = u_of_lambda(lam).unwrap();
            assert!(u > 1e-3 && u < TAU);
            let s = (1.0 - lam * lam).sqrt();
            let res = lam * u - lam * u.sin() - s * (1.0 - u.cos());
            assert!(res.abs() < 1e-12, "lambda {lam}: residual {res}");
        }
    }

    #[test]
    fn u_matches_return_point() {
        // the separatrix energy is reached again a distance u from the unstable point
        for &(p, a) in &[(1u64, 0.4), (2, -0.3), (7, 0.05)] {
            let pend = PendulumParams::new(p, a, 1.0);
            let eq = equilibria(&pend).unwrap().unwrap();
            let u = u_of_lambda(pend.lambda()).unwrap();
            let v0 = pend.potential(eq.maximum);
            let miss = [-1.0, 1.0]
                .iter()
                .map(|sg| (pend.potential(eq.maximum + sg * u) - v0).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(miss < 1e-10, "p={p} a={a}: {miss}");
        }
    }

    #[test]
    fn f_endpoints() {
        assert_abs_diff_eq!(f_of_lambda(0.0).unwrap(), 8.0 * PI, epsilon = 1e-14);
        assert_eq!(f_of_lambda(1.0).unwrap(), 0.0);
    }

    #[test]
    fn f_is_monotone() {
        let mut prev = f_of_lambda(0.0).unwrap();
        for i in 1..=1000 {
            let f = f_of_lambda(i as f64 / 1000.0).unwrap();
            assert!(f < prev, "not decreasing at {}", i);
            prev = f;
        }
    }

    #[test]
    fn f_small_lambda_asymptote() {
        for lam in [1e-6, 1e-5, 1e-4, 1e-3] {
            let corr = 8.0 * PI - f_of_lambda(lam).unwrap();
            let ratio = corr / (4.0 * (4.0 * PI * lam).sqrt());
            assert!((ratio - 1.0).abs() < 0.05, "lambda {lam}: ratio {ratio}");
        }
    }

    #[test]
    fn f_margin_exponent() {
        let pts: Vec<(f64, f64)> = (0..=20)
            .map(|i| {
                let gap = 10f64.powf(-2.0 - 2.0 * i as f64 / 20.0);
                (gap, f_of_lambda(1.0 - gap).unwrap())
            })
            .collect();
        let (slope, pref) = fit_power_law(&pts).unwrap();
        assert!((slope - 1.25).abs() < 0.03 * 1.25, "slope {slope}");
        // leading-order expansion: u ~ 3 sqrt(2 d), h ~ (2/3) sqrt(2) d^{3/2}
        let expect = 3f64.sqrt() * 2f64.powf(3.25);
        assert!((pref / expect - 1.0).abs() < 0.01, "prefactor {pref}");
    }

    #[test]
    fn perturbative_area() {
        let l = OrbitLabel::new(1, 1).unwrap();
        assert_eq!(area_perturbative(l, 0.3666, 1.0, 0.66).unwrap(), 0.0);
        let a1 = area_perturbative(l, 0.04, 0.3, 1.0).unwrap();
        let a2 = area_perturbative(l, 0.16, 0.3, 1.0).unwrap();
        assert_abs_diff_eq!(a2 / a1, 2.0, epsilon = 1e-12);
        let q = OrbitLabel::new(16, 5).unwrap();
        let aq = area_perturbative(q, 0.04, 0.3, 1.0).unwrap();
        assert_abs_diff_eq!(a1 / aq, 2.0, epsilon = 1e-12);
        assert!(area_perturbative(l, 0.1, 0.2, 0.0).is_err());
    }

    #[test]
    fn geometry_consistent() {
        let l = OrbitLabel::new(2, 1).unwrap();
        let g = separatrix(l, 0.1, 0.4).unwrap();
        assert_abs_diff_eq!(g.f, f_of_lambda(0.4).unwrap(), epsilon = 1e-14);
        assert_abs_diff_eq!(
            g.delta_l3 * g.delta_theta3,
            area_perturbative(l, 0.1, 0.4, 1.0).unwrap(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn untilted_small_kick_area() {
        // fixed point at theta = pi, J = 0 for Omega = 0
        let l = OrbitLabel::new(1, 0).unwrap();
        let kt = 0.01;
        let params = MapParams::new(0.0, kt);
        let cfg = IslandConfig {
            grid: 80,
            iterations: 1000,
            ..IslandConfig::default()
        };
        let area = area_numerical(&params, l, TorusPoint::new(0.0, PI), &cfg).unwrap();
        let exact = 16.0 * kt.sqrt();
        assert!((area / exact - 1.0).abs() < 0.05, "area {area} vs {exact}");
    }

    #[test]
    fn unstable_center_rejected() {
        let l = OrbitLabel::new(1, 0).unwrap();
        let params = MapParams::new(0.0, 0.1);
        let err = area_numerical(&params, l, TorusPoint::new(0.0, 0.0), &IslandConfig::default());
        assert!(matches!(err, Err(Error::NotElliptic { .. })));
        let err = area_numerical(&params, l, TorusPoint::new(0.0, 1.0), &IslandConfig::default());
        assert!(matches!(err, Err(Error::NotPeriodic { .. })));
    }

    #[test]
    fn power_law_fit() {
        let pts: Vec<(f64, f64)> = (1..10).map(|i| (i as f64, 3.0 * (i as f64).powf(0.5))).collect();
        let (e, a) = fit_power_law(&pts).unwrap();
        assert_abs_diff_eq!(e, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(a, 3.0, epsilon = 1e-12);
        assert!(fit_power_law(&[(1.0, 1.0)]).is_none());
        assert_abs_diff_eq!(fit_factor(&[(2.0, 1.0), (4.0, 2.0)]).unwrap(), 2.0);
    }
}
