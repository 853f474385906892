//! Periodic orbits of the exact map: Newton search, stability, tongue scans
//! and the critical border along a ray of constant tilt.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::islands::{area_numerical, IslandConfig};
use crate::map::{
    angle_diff, det, trace, unwrap_winding, wrap_angle, CylinderMap, CylinderPoint, MapParams, OrbitLabel, TorusPoint,
};
use crate::perturbation::{on_ray, stable_fixed_point_prediction, ScaledParams};

/// A primitive periodic orbit of the torus map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicOrbit {
    pub label: OrbitLabel,
    /// The `p` torus points, starting with the one at step 0.
    pub points: Vec<TorusPoint>,
    /// Step-0 point in cylinder coordinates, `L` in `[0, 2pi)`.
    pub start: CylinderPoint,
    pub residual: f64,
    /// Trace of the period-map Jacobian.
    pub trace: f64,
    pub stable: bool,
    pub iterations: usize,
}

/// Newton and seeding settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub ring_radius: f64,
    pub ring_seeds: usize,
    pub theta_grid: usize,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 60,
            ring_radius: 0.1,
            ring_seeds: 8,
            theta_grid: 16,
        }
    }
}

fn residual_of(map: &CylinderMap, x: CylinderPoint) -> ([f64; 2], f64) {
    let y = map.compose(x);
    let r = [y.l - x.l, angle_diff(y.theta, x.theta)];
    (r, r[0].abs().max(r[1].abs()))
}

/// Solve `M^(p)(x) = x` by damped Newton from `seed`.
///
/// The action residual is not reduced mod `2pi`, so a solution has exactly
/// winding `m`. Returns `Ok(None)` when Newton fails to converge; the
/// unperturbed case `ktilde = 0` has no isolated solutions and is reported
/// as [`Error::DegenerateCircle`] when the resonance is exact.
pub fn find_orbit(
    params: &MapParams,
    label: OrbitLabel,
    seed: CylinderPoint,
    tol: f64,
    max_iter: usize,
) -> Result<Option<PeriodicOrbit>> {
    let map = CylinderMap::from_params(params, label);
    if params.ktilde == 0.0 {
        return if map.eps_a == 0.0 {
            Err(Error::DegenerateCircle)
        } else {
            Ok(None)
        };
    }
    let mut x = seed;
    let (mut r, mut norm) = residual_of(&map, x);
    let mut iterations = 0;
    let mut converged = norm < tol;
    while !converged && iterations < max_iter {
        iterations += 1;
        let jac = map.compose_with_tangent(x).1;
        let a = [[jac[0][0] - 1.0, jac[0][1]], [jac[1][0], jac[1][1] - 1.0]];
        let d = det(&a);
        if d == 0.0 || !d.is_finite() {
            return Ok(None);
        }
        let dl = -(a[1][1] * r[0] - a[0][1] * r[1]) / d;
        let dt = -(-a[1][0] * r[0] + a[0][0] * r[1]) / d;
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = CylinderPoint::new(x.l + scale * dl, x.theta + scale * dt);
            let (tr, tn) = residual_of(&map, trial);
            if tn < norm {
                x = trial;
                r = tr;
                norm = tn;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        let step = dl.abs().max(dt.abs());
        if norm < tol || (step < 1e-15 && norm < 1e-10) {
            converged = true;
        } else if !accepted {
            // stalled at the rounding floor
            if norm < 1e-10 {
                converged = true;
            }
            break;
        }
    }
    if !converged {
        return Ok(None);
    }

    let start = CylinderPoint::new(wrap_angle(x.l), x.theta);
    let path = map.period_points(start);
    let torus: Vec<TorusPoint> = path
        .iter()
        .enumerate()
        .map(|(n, pt)| map.to_torus(n as u64, *pt))
        .collect();
    let check_tol = 1e-8_f64.max(100.0 * norm);
    let winding = unwrap_winding(&torus, params, check_tol)?;
    if winding != label.m() as i64 {
        return Err(Error::WrongWinding {
            expected: label.m(),
            found: winding,
        });
    }
    let p = label.p();
    for d in (1..p).filter(|d| p.is_multiple_of(*d)) {
        if torus[d as usize].distance(&torus[0]) < check_tol {
            return Err(Error::NotPrimitive { period: d });
        }
    }
    let tr = trace(&map.compose_with_tangent(start).1);
    let mut points = torus;
    points.pop();
    Ok(Some(PeriodicOrbit {
        label,
        points,
        start,
        residual: norm,
        trace: tr,
        stable: tr.abs() < 2.0,
        iterations,
    }))
}

/// Starting points for the search: the perturbative elliptic point (with the
/// tilt clamped to the margin), a ring around it, then a coarse angle grid.
pub fn seed_points(params: &MapParams, label: OrbitLabel, config: &OrbitConfig) -> Vec<CylinderPoint> {
    let p = label.p() as f64;
    let eps = params.ktilde;
    let mut seeds = Vec::new();
    if eps != 0.0 {
        let a_margin = 1.0 / p.sqrt();
        let a = (TAU * (params.omega - label.ratio()) / eps).clamp(-a_margin, a_margin);
        let scaled = ScaledParams {
            epsilon: eps,
            a,
            k: 1.0,
        };
        if let Ok(center) = stable_fixed_point_prediction(label, &scaled) {
            seeds.push(center);
            for i in 0..config.ring_seeds {
                let phi = TAU * i as f64 / config.ring_seeds as f64;
                seeds.push(CylinderPoint::new(
                    center.l + config.ring_radius * phi.cos(),
                    center.theta + config.ring_radius * phi.sin(),
                ));
            }
        }
    }
    let l0 = seeds
        .first()
        .map_or(crate::gauss::resonant_action(label.p(), 0), |s| s.l);
    for i in 0..config.theta_grid {
        seeds.push(CylinderPoint::new(l0, TAU * i as f64 / config.theta_grid as f64));
    }
    seeds
}

/// First stable `label` orbit reached from `extra` seeds followed by the
/// standard ones. Unstable or wrongly-winding solutions are skipped.
pub fn find_stable_orbit(
    params: &MapParams,
    label: OrbitLabel,
    config: &OrbitConfig,
    extra: &[CylinderPoint],
) -> Result<Option<PeriodicOrbit>> {
    let seeds = extra.iter().copied().chain(seed_points(params, label, config));
    for seed in seeds {
        match find_orbit(params, label, seed, config.tol, config.max_iter) {
            Ok(Some(orbit)) if orbit.stable => return Ok(Some(orbit)),
            Ok(_) | Err(Error::WrongWinding { .. }) | Err(Error::NotPrimitive { .. }) => {}
            Err(Error::NotPeriodic { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

/// Area of one island of the stable `label` orbit, if there is one.
pub fn island_area(
    params: &MapParams,
    label: OrbitLabel,
    orbit_config: &OrbitConfig,
    island_config: &IslandConfig,
) -> Result<Option<(PeriodicOrbit, f64)>> {
    let Some(orbit) = find_stable_orbit(params, label, orbit_config, &[])? else {
        return Ok(None);
    };
    let area = area_numerical(params, label, orbit.points[0], island_config)?;
    Ok(Some((orbit, area)))
}

/// Axis of a scan: `cells` equal cells covering `[lo, hi]`, sampled at their centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        if cells < 2 {
            return Err(Error::Invalid(format!("need at least 2 cells per axis, got {cells}")));
        }
        if !(hi > lo) {
            return Err(Error::Invalid(format!("empty range [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi, cells })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.width()
    }
}

/// Scan settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ScanConfig {
    pub orbit: OrbitConfig,
    /// Measure the island area in every stable cell.
    pub island: Option<IslandConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanCell {
    pub omega: f64,
    pub ktilde: f64,
    pub stable: bool,
    pub trace: Option<f64>,
    pub area: Option<f64>,
}

/// Stability verdicts for one label over a rectangle of `(Omega, ktilde)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TongueScan {
    pub label: OrbitLabel,
    pub omega: GridAxis,
    pub ktilde: GridAxis,
    /// Row-major in `ktilde`, then `omega`.
    pub cells: Vec<ScanCell>,
}

impl TongueScan {
    pub fn row(&self, j: usize) -> &[ScanCell] {
        let n = self.omega.cells;
        &self.cells[j * n..(j + 1) * n]
    }

    pub fn stable_count(&self) -> usize {
        self.cells.iter().filter(|c| c.stable).count()
    }
}

fn classify(params: MapParams, label: OrbitLabel, config: &ScanConfig) -> ScanCell {
    let mut cell = ScanCell {
        omega: params.omega,
        ktilde: params.ktilde,
        stable: false,
        trace: None,
        area: None,
    };
    if let Ok(Some(orbit)) = find_stable_orbit(&params, label, &config.orbit, &[]) {
        cell.stable = true;
        cell.trace = Some(orbit.trace);
        if let Some(ic) = &config.island {
            cell.area = area_numerical(&params, label, orbit.points[0], ic).ok();
        }
    }
    cell
}

/// Classify every cell of the grid; cells are independent and evaluated in
/// parallel, results are kept in grid order.
pub fn scan_tongue(label: OrbitLabel, omega: GridAxis, ktilde: GridAxis, config: &ScanConfig) -> TongueScan {
    let cells = (0..omega.cells * ktilde.cells)
        .into_par_iter()
        .map(|idx| {
            let (j, i) = (idx / omega.cells, idx % omega.cells);
            classify(MapParams::new(omega.center(i), ktilde.center(j)), label, config)
        })
        .collect();
    TongueScan {
        label,
        omega,
        ktilde,
        cells,
    }
}

fn is_stable(label: OrbitLabel, omega: f64, ktilde: f64, config: &OrbitConfig) -> bool {
    matches!(
        find_stable_orbit(&MapParams::new(omega, ktilde), label, config, &[]),
        Ok(Some(_))
    )
}

fn bisect_edge(mut inside: f64, mut outside: f64, iters: usize, stable: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..iters {
        let mid = 0.5 * (inside + outside);
        if stable(mid) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

/// Left and right edge in `Omega` of the `label` tongue at height `ktilde`.
///
/// A row of `cells` points over `m/p +- span` locates the stable run
/// containing the axis; both ends are then refined by bisection.
pub fn tongue_edges(
    label: OrbitLabel,
    ktilde: f64,
    span: f64,
    cells: usize,
    config: &OrbitConfig,
) -> Result<(f64, f64)> {
    let axis = GridAxis::new(label.ratio() - span, label.ratio() + span, cells)?;
    let verdicts: Vec<bool> = (0..cells)
        .into_par_iter()
        .map(|i| is_stable(label, axis.center(i), ktilde, config))
        .collect();
    let mid = (0..cells)
        .filter(|&i| verdicts[i])
        .min_by(|&a, &b| {
            let da = (axis.center(a) - label.ratio()).abs();
            let db = (axis.center(b) - label.ratio()).abs();
            da.total_cmp(&db)
        })
        .ok_or(Error::NoStableOrbit)?;
    let mut left = mid;
    while left > 0 && verdicts[left - 1] {
        left -= 1;
    }
    let mut right = mid;
    while right + 1 < cells && verdicts[right + 1] {
        right += 1;
    }
    if left == 0 || right + 1 == cells {
        return Err(Error::Invalid("tongue is wider than the scanned span".into()));
    }
    let stable = |om: f64| is_stable(label, om, ktilde, config);
    let lo = bisect_edge(axis.center(left), axis.center(left - 1), 40, stable);
    let hi = bisect_edge(axis.center(right), axis.center(right + 1), 40, stable);
    Ok((lo, hi))
}

/// Settings for [`critical_border`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BorderConfig {
    pub orbit: OrbitConfig,
    /// Points on the ray before bisection.
    pub steps: usize,
    pub bisections: usize,
}

impl Default for BorderConfig {
    fn default() -> Self {
        Self {
            orbit: OrbitConfig::default(),
            steps: 200,
            bisections: 30,
        }
    }
}

/// Largest `ktilde` on the ray of tilt `lambda` (right of the vertex) at which
/// the stable `label` orbit survives. The ray is walked upward with the last
/// orbit as seed; the first loss of stability is refined by bisection. If
/// the orbit survives to `ktilde_max`, that value is returned.
pub fn critical_border(label: OrbitLabel, lambda: f64, ktilde_max: f64, config: &BorderConfig) -> Result<f64> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::OutOfRange {
            name: "lambda",
            value: lambda,
        });
    }
    if !(ktilde_max > 0.0) || config.steps == 0 {
        return Err(Error::Invalid("ktilde_max and steps must be positive".into()));
    }
    let at = |kt: f64, seed: &[CylinderPoint]| {
        find_stable_orbit(&on_ray(label, lambda, kt, true), label, &config.orbit, seed)
    };
    let dk = ktilde_max / config.steps as f64;
    let mut last: Option<(f64, CylinderPoint)> = None;
    for i in 1..=config.steps {
        let kt = dk * i as f64;
        let seed: Vec<CylinderPoint> = last.iter().map(|l| l.1).collect();
        match at(kt, &seed)? {
            Some(orbit) => last = Some((kt, orbit.start)),
            None => {
                let Some((mut inside, mut seed)) = last else {
                    return Err(Error::NoStableOrbit);
                };
                let mut outside = kt;
                for _ in 0..config.bisections {
                    let mid = 0.5 * (inside + outside);
                    match at(mid, &[seed])? {
                        Some(orbit) => {
                            inside = mid;
                            seed = orbit.start;
                        }
                        None => outside = mid,
                    }
                }
                return Ok(inside);
            }
        }
    }
    Ok(ktilde_max)
}

/// One row of a tongue in the rescaled plane `(|Omega - m/p| p^2, |ktilde| p^{3/2})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlayRow {
    pub label: OrbitLabel,
    pub ktilde_scaled: f64,
    pub left_scaled: f64,
    pub right_scaled: f64,
}

/// Scaled perturbative margins at `ktilde`; they lie on the lines
/// `y = +-2 pi x` for every label.
pub fn scaled_margin(label: OrbitLabel, ktilde: f64) -> OverlayRow {
    let p = label.p() as f64;
    let w = crate::perturbation::tongue_margin(label, ktilde);
    OverlayRow {
        label,
        ktilde_scaled: ktilde.abs() * p.powf(1.5),
        left_scaled: -w * p * p,
        right_scaled: w * p * p,
    }
}

/// Re-express the stable run around the axis of every scan row in scaled
/// variables. Rows without a stable cell are left out.
pub fn scaled_overlay(scans: &[TongueScan]) -> Vec<OverlayRow> {
    let mut rows = Vec::new();
    for scan in scans {
        let p = scan.label.p() as f64;
        let center = scan.label.ratio();
        for j in 0..scan.ktilde.cells {
            let row = scan.row(j);
            let Some(mid) = (0..row.len())
                .filter(|&i| row[i].stable)
                .min_by(|&a, &b| (row[a].omega - center).abs().total_cmp(&(row[b].omega - center).abs()))
            else {
                continue;
            };
            let mut lo = mid;
            while lo > 0 && row[lo - 1].stable {
                lo -= 1;
            }
            let mut hi = mid;
            while hi + 1 < row.len() && row[hi + 1].stable {
                hi += 1;
            }
            rows.push(OverlayRow {
                label: scan.label,
                ktilde_scaled: row[mid].ktilde.abs() * p.powf(1.5),
                left_scaled: (row[lo].omega - center) * p * p,
                right_scaled: (row[hi].omega - center) * p * p,
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{step_torus, tangent_period};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn label(p: u64, m: u64) -> OrbitLabel {
        OrbitLabel::new(p, m).unwrap()
    }

    #[test]
    fn period_one_both_roots() {
        let l = label(1, 0);
        let params = MapParams::new(0.01, 0.2);
        let s = (PI / 10.0).asin();
        let unstable = find_orbit(&params, l, CylinderPoint::new(0.05, -0.3), 1e-12, 60)
            .unwrap()
            .unwrap();
        assert_abs_diff_eq!(unstable.start.theta, wrap_angle(-s), epsilon = 1e-10);
        assert_abs_diff_eq!(unstable.points[0].j, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(unstable.trace, 2.0 + 0.2 * s.cos(), epsilon = 1e-10);
        assert!(!unstable.stable);

        let stable = find_orbit(&params, l, CylinderPoint::new(0.0, PI + 0.3), 1e-12, 60)
            .unwrap()
            .unwrap();
        assert_abs_diff_eq!(stable.start.theta, PI + s, epsilon = 1e-10);
        assert_abs_diff_eq!(stable.trace, 2.0 - 0.2 * s.cos(), epsilon = 1e-10);
        assert!(stable.stable);
    }

    #[test]
    fn trace_matches_finite_difference_jacobian() {
        let l = label(3, 1);
        let params = MapParams::new(1.0 / 3.0 + 0.001, 0.05);
        let orbit = find_stable_orbit(&params, l, &OrbitConfig::default(), &[])
            .unwrap()
            .unwrap();
        let map = CylinderMap::from_params(&params, l);
        let h = 1e-6;
        let x = orbit.start;
        let f = |dl: f64, dt: f64| map.compose(CylinderPoint::new(x.l + dl, x.theta + dt));
        let (lp, lm) = (f(h, 0.0), f(-h, 0.0));
        let (tp, tm) = (f(0.0, h), f(0.0, -h));
        let fd_trace = (lp.l - lm.l) / (2.0 * h) + angle_diff(tp.theta, tm.theta) / (2.0 * h);
        assert_abs_diff_eq!(fd_trace, orbit.trace, epsilon = 1e-6);
        assert_abs_diff_eq!(trace(&tangent_period(x, &map)), orbit.trace, epsilon = 1e-14);
    }

    #[test]
    fn degenerate_circle() {
        let l = label(5, 2);
        let params = MapParams::new(0.4, 0.0);
        let seed = CylinderPoint::new(crate::gauss::resonant_action(5, 0), 1.0);
        assert_eq!(find_orbit(&params, l, seed, 1e-12, 60), Err(Error::DegenerateCircle));
        let off = MapParams::new(0.41, 0.0);
        assert_eq!(find_orbit(&off, l, seed, 1e-12, 60), Ok(None));
    }

    #[test]
    fn fig2_orbit_is_stable() {
        let l = label(5, 2);
        let kt = 0.1257;
        let params = MapParams::new(0.4 - 0.013 / TAU, kt);
        let orbit = find_stable_orbit(&params, l, &OrbitConfig::default(), &[])
            .unwrap()
            .expect("stable (5,2) orbit");
        assert_eq!(orbit.points.len(), 5);
        assert!(orbit.residual < 1e-10);
        // walk the torus orbit and check it closes
        let mut x = orbit.points[0];
        for n in 1..=5 {
            x = step_torus(x, &params);
            let target = orbit.points[n % 5];
            assert!(x.distance(&target) < 1e-9);
        }
    }

    #[test]
    fn seeded_newton_converges_quickly() {
        let cfg = OrbitConfig::default();
        for p in 1..=8u64 {
            for m in (0..p).filter(|&m| num_integer::gcd(m, p) == 1) {
                let l = label(p, m);
                for lam in [0.0, 0.5, 0.9] {
                    let params = on_ray(l, lam, 0.05, true);
                    let seeds = seed_points(&params, l, &cfg);
                    let orbit = find_orbit(&params, l, seeds[0], cfg.tol, cfg.max_iter)
                        .unwrap()
                        .unwrap_or_else(|| panic!("{l} lambda {lam}"));
                    assert!(orbit.stable, "{l} lambda {lam}");
                    assert!(orbit.iterations <= 10, "{l}: {} iterations", orbit.iterations);
                }
            }
        }
    }

    #[test]
    fn displaced_point_stays_close() {
        let l = label(2, 1);
        let params = on_ray(l, 0.3, 0.1, false);
        let orbit = find_stable_orbit(&params, l, &OrbitConfig::default(), &[])
            .unwrap()
            .unwrap();
        let map = CylinderMap::from_params(&params, l);
        let mut x = CylinderPoint::new(orbit.start.l + 1e-6, orbit.start.theta);
        for _ in 0..100_000 {
            x = map.compose(x);
            let d = (x.l - orbit.start.l)
                .abs()
                .max(angle_diff(x.theta, orbit.start.theta).abs());
            assert!(d < 1e-2);
        }
    }

    #[test]
    fn grid_axis() {
        assert!(GridAxis::new(0.0, 1.0, 1).is_err());
        assert!(GridAxis::new(1.0, 1.0, 4).is_err());
        let ax = GridAxis::new(0.0, 1.0, 4).unwrap();
        assert_abs_diff_eq!(ax.center(0), 0.125);
        assert_abs_diff_eq!(ax.center(3), 0.875);
    }

    #[test]
    fn scan_is_deterministic_and_finds_axis() {
        let l = label(1, 0);
        let om = GridAxis::new(-0.02, 0.02, 11).unwrap();
        let kt = GridAxis::new(0.01, 0.1, 4).unwrap();
        let a = scan_tongue(l, om, kt, &ScanConfig::default());
        let b = scan_tongue(l, om, kt, &ScanConfig::default());
        assert_eq!(a, b);
        assert_eq!(a.cells.len(), 44);
        // the axis cell is stable on every row
        for j in 0..4 {
            assert!(a.row(j)[5].stable);
        }
        // the bottom row is narrower than the top one
        let count = |j: usize| a.row(j).iter().filter(|c| c.stable).count();
        assert!(count(0) < count(3));
    }

    #[test]
    fn period_one_border_on_axis_ray() {
        // trace = 2 - ktilde sqrt(1 - lambda^2) reaches -2 at 4 / sqrt(1 - lambda^2)
        let lam = 0.1405;
        let kc = critical_border(label(1, 0), lam, 8.0, &BorderConfig::default()).unwrap();
        let exact = 4.0 / (1.0f64 - lam * lam).sqrt();
        assert!((kc - exact).abs() < 1e-3 * exact, "{kc} vs {exact}");
    }

    #[test]
    fn overlay() {
        assert!(scaled_overlay(&[]).is_empty());
        let l = label(1, 0);
        for kt in [0.01, 0.1, 0.5] {
            let row = scaled_margin(l, kt);
            assert_abs_diff_eq!(row.ktilde_scaled / row.right_scaled, TAU, epsilon = 1e-12);
            assert_abs_diff_eq!(row.ktilde_scaled / row.left_scaled, -TAU, epsilon = 1e-12);
        }
        let q = label(3, 2);
        let row = scaled_margin(q, 0.02);
        assert_abs_diff_eq!(row.ktilde_scaled / row.right_scaled, TAU, epsilon = 1e-12);
    }
}
