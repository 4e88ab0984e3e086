use std::f64::consts::PI;
use std::sync::Arc;

use byamabe::halfspace::{halfspace_summary, yamabe_halfspace};
use byamabe::numerics::{make_annulus_mesh, make_ball_mesh, DiscreteField, RadialMesh};
use byamabe::variational::*;
use byamabe::{Dim, Error, Weights};
use proptest::prelude::*;

fn d3() -> Dim {
    Dim::new(3).unwrap()
}

fn ball(m: usize) -> BackgroundGeometry {
    BackgroundGeometry::flat(make_ball_mesh(m, d3(), 1.0).unwrap()).unwrap()
}

fn w(a: f64, b: f64) -> Weights {
    Weights::new(a, b).unwrap()
}

/// Radial profile from shooting: `−c(u'' + (n−1)u'/r) = λ|u|^q`, `u(0) = 1`,
/// with `λ` chosen so that `(2/(n−2))u'(1) + u(1) = 0`.
struct Shooting {
    lambda: f64,
    r: Vec<f64>,
    u: Vec<f64>,
}

fn shoot(lambda: f64, q: f64, n: f64, steps: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let c = 4.0 * (n - 1.0) / (n - 2.0);
    let r0 = 1e-6;
    let h = (1.0 - r0) / steps as f64;
    let rhs = |r: f64, u: f64, v: f64| (v, -(n - 1.0) * v / r - lambda * u.abs().powf(q) / c);
    let mut u = 1.0 - lambda / (2.0 * n * c) * r0 * r0;
    let mut v = -lambda / (n * c) * r0;
    let mut rs = vec![r0];
    let mut us = vec![u];
    let mut r = r0;
    for _ in 0..steps {
        let (k1u, k1v) = rhs(r, u, v);
        let (k2u, k2v) = rhs(r + 0.5 * h, u + 0.5 * h * k1u, v + 0.5 * h * k1v);
        let (k3u, k3v) = rhs(r + 0.5 * h, u + 0.5 * h * k2u, v + 0.5 * h * k2v);
        let (k4u, k4v) = rhs(r + h, u + h * k3u, v + h * k3v);
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        r += h;
        rs.push(r);
        us.push(u);
    }
    let defect = 2.0 / (n - 2.0) * v + u;
    (rs, us, defect)
}

fn shooting_solution(q: f64, n: f64) -> Shooting {
    let steps = 40_000;
    let (mut lo, mut hi) = (0.0, 1.0);
    while shoot(hi, q, n, 2000).2 > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if shoot(mid, q, n, steps).2 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let (r, u, _) = shoot(lambda, q, n, steps);
    Shooting { lambda, r, u }
}

fn interp(rs: &[f64], us: &[f64], r: f64) -> f64 {
    let h = rs[1] - rs[0];
    let k = (((r - rs[0]) / h).floor().max(0.0) as usize).min(rs.len() - 2);
    let t = (r - rs[k]) / h;
    us[k] * (1.0 - t) + us[k + 1] * t
}

#[test]
fn minimizer_matches_shooting_profile() {
    let q = 4.5;
    let geom = ball(2000);
    let prob = SubcriticalProblem::new(geom.clone(), w(1.0, 0.0), q).unwrap();
    let init = initial_guess(geom.mesh.clone(), 1);
    let res = minimize_subcritical(&prob, &init, &MinimizeOptions::default()).unwrap();
    assert!(res.converged && res.el_residual < 1e-6);
    assert!(res.u.min() > 0.0);

    let shot = shooting_solution(q, 3.0);
    let u0 = res.u.values()[0];
    let worst = geom
        .mesh
        .nodes()
        .iter()
        .zip(res.u.values())
        .map(|(&r, v)| (v / u0 - interp(&shot.r, &shot.u, r)).abs())
        .fold(0.0f64, f64::max);
    assert!(worst < 1e-5, "profile mismatch {worst}");

    // μ = λ (∫u^{q+1})^{(q−1)/(q+1)} for the shooting profile with a = 1.
    let integral: f64 = 4.0
        * PI
        * shot
            .r
            .windows(2)
            .zip(shot.u.windows(2))
            .map(|(r, u)| 0.5 * (r[1] - r[0]) * (u[0].powf(q + 1.0) * r[0] * r[0] + u[1].powf(q + 1.0) * r[1] * r[1]))
            .sum::<f64>();
    let mu_shoot = shot.lambda * integral.powf((q - 1.0) / (q + 1.0));
    assert!((res.mu - mu_shoot).abs() < 1e-5 * mu_shoot, "{} vs {}", res.mu, mu_shoot);
}

#[test]
fn fixed_point_and_scale_invariance() {
    let geom = ball(400);
    let prob = SubcriticalProblem::new(geom.clone(), w(1.0, 1.0), 4.5).unwrap();
    let init = initial_guess(geom.mesh.clone(), 3);
    let opts = MinimizeOptions::default();
    let first = minimize_subcritical(&prob, &init, &opts).unwrap();
    assert!(first.converged);
    let again = minimize_subcritical(&prob, &first.u, &opts).unwrap();
    assert_eq!(again.iterations, 0);
    assert!(again.el_residual <= opts.tol);

    let scaled = minimize_subcritical(&prob, &init.scaled(37.0), &opts).unwrap();
    assert!((scaled.mu - first.mu).abs() < 1e-10 * first.mu);
}

#[test]
fn descent_normalization_positivity() {
    let geom = BackgroundGeometry::flat(make_annulus_mesh(200, d3(), 0.5, 1.0).unwrap()).unwrap();
    let prob = SubcriticalProblem::new(geom.clone(), w(1.0, 2.0), 4.0).unwrap();
    let res = minimize_subcritical(&prob, &initial_guess(geom.mesh.clone(), 9), &MinimizeOptions::default()).unwrap();
    assert!(res.converged);
    assert!(res.normalization_residual <= 1e-10);
    assert!(res.u.min() > 0.0);
    assert!(res.energy_history.windows(2).all(|e| e[1] <= e[0]));
    assert!((normalization(&res.u, &prob).unwrap() - 1.0).abs() <= 1e-10);
    let mu = quotient_q(&res.u, &prob).unwrap();
    assert!((mu - res.mu).abs() < 1e-10 * mu);
}

#[test]
fn input_validation() {
    let geom = ball(64);
    let crit = SubcriticalProblem::new(geom.clone(), w(1.0, 1.0), 5.0).unwrap();
    let init = initial_guess(geom.mesh.clone(), 0);
    assert!(matches!(
        minimize_subcritical(&crit, &init, &MinimizeOptions::default()),
        Err(Error::Domain(_))
    ));
    let prob = SubcriticalProblem::new(geom.clone(), w(1.0, 1.0), 4.0).unwrap();
    let mut v = init.values().to_vec();
    v[10] = 0.0;
    let bad = DiscreteField::new(geom.mesh.clone(), v).unwrap();
    assert!(matches!(
        minimize_subcritical(&prob, &bad, &MinimizeOptions::default()),
        Err(Error::Domain(_))
    ));
}

/// `u_κ = (1 + κr²)^{−(n−2)/2}` solves the critical problem on the unit ball with
/// `μaα = 4n(n−1)κ` and `μbβ = 1 − κ`.
fn critical_profile(mesh: Arc<RadialMesh>, kappa: f64) -> (SubcriticalProblem, DiscreteField, f64) {
    let n = mesh.dim().nf();
    let geom = BackgroundGeometry::flat(mesh.clone()).unwrap();
    let u = DiscreteField::from_fn(mesh.clone(), |r| (1.0 + kappa * r * r).powf(-(n - 2.0) / 2.0)).unwrap();
    let q = (n + 2.0) / (n - 2.0);
    let vol = mesh.integrate_pow(u.values(), q + 1.0);
    let bdy = mesh.boundary_integrate_pow(u.values(), 0.5 * (q + 3.0));
    let alpha = vol.powf((1.0 - q) / (1.0 + q));
    let beta = bdy.powf((1.0 - q) / (q + 3.0));
    let mu = 4.0 * n * (n - 1.0) * kappa / alpha;
    let b = (1.0 - kappa) / (mu * beta);
    let prob = SubcriticalProblem::new(geom, w(1.0, b), q).unwrap();
    let s = 1.0 / normalization(&u, &prob).unwrap().sqrt();
    (prob, u.scaled(s), mu)
}

#[test]
fn residual_of_exact_solution_is_second_order() {
    let kappa = 0.6;
    let mut res = Vec::new();
    for m in [200, 400, 800] {
        let mesh = make_ball_mesh(m, d3(), 1.0).unwrap();
        let (prob, u, mu) = critical_profile(mesh, kappa);
        res.push(el_residual(&u, &prob, mu));
    }
    for pair in res.windows(2) {
        let order = (pair[0] / pair[1]).log2();
        assert!((1.8..=2.2).contains(&order), "residuals {res:?}");
    }
}

#[test]
fn constant_field_is_not_stationary() {
    let geom = ball(200);
    let prob = SubcriticalProblem::new(geom.clone(), w(1.0, 1.0), 4.5).unwrap();
    let one = DiscreteField::constant(geom.mesh.clone(), 1.0).unwrap();
    let s = 1.0 / normalization(&one, &prob).unwrap().sqrt();
    let u = one.scaled(s);
    let mu = quotient_q(&u, &prob).unwrap();
    assert!(el_residual(&u, &prob, mu) > 1e-2);
}

#[test]
fn ball_limits_match_halfspace() {
    let geom = ball(1000);
    let sched = default_schedule(d3());
    let opts = MinimizeOptions::default();
    for (a, b) in [(1.0, 1.0), (1.0, 0.0), (0.0, 1.0)] {
        let lim = critical_limit(&geom, w(a, b), &sched, &opts, 7).unwrap();
        let y = yamabe_halfspace(w(a, b), d3()).unwrap();
        let ye = lim.y_extrapolated.unwrap();
        assert!(lim.all_converged);
        assert!((ye - y).abs() < 0.02 * y, "a={a} b={b}: {ye} vs {y}");
        for s in &lim.steps {
            assert!(s.el_residual <= 1e-6);
            assert!(s.mu <= ye + 1e-9 * ye);
        }
        assert!(lim.steps.windows(2).all(|s| s[1].mu >= s[0].mu));
    }
}

#[test]
fn curvatures_of_the_ball_minimizer() {
    let geom = ball(1000);
    let sched = default_schedule(d3());
    let opts = MinimizeOptions::default();
    let lim = critical_limit(&geom, w(1.0, 0.0), &sched, &opts, 1).unwrap();
    let c = conformal_curvatures(lim.last.as_ref().unwrap(), w(1.0, 0.0), &geom).unwrap();
    assert_eq!(c.h_g, 0.0);
    assert!(c.r_g > 0.0);

    let mut prev = f64::NEG_INFINITY;
    for b in [0.5, 1.0, 2.0, 4.0] {
        let lim = critical_limit(&geom, w(1.0, b), &sched, &opts, 1).unwrap();
        let c = conformal_curvatures(lim.last.as_ref().unwrap(), w(1.0, b), &geom).unwrap();
        let hn = c.h_normalized.unwrap();
        assert!(hn > prev);
        prev = hn;
        // The ball is conformal to the cap, whose normalized mean curvature is −T_c/√(n(n−1)).
        let t_c = halfspace_summary(w(1.0, b), d3()).unwrap().cap.unwrap().t_c;
        assert!((hn + t_c / 6f64.sqrt()).abs() < 2e-3 * hn, "b={b}: {hn}");
    }

    let lim = critical_limit(&geom, w(0.0, 1.0), &sched, &opts, 1).unwrap();
    let c = conformal_curvatures(lim.last.as_ref().unwrap(), w(0.0, 1.0), &geom).unwrap();
    assert!(c.h_normalized.is_none());
    assert_eq!(c.r_g, 0.0);

    // Far from critical the curvatures are refused.
    let prob = SubcriticalProblem::new(geom.clone(), w(1.0, 1.0), 4.0).unwrap();
    let res = minimize_subcritical(&prob, &initial_guess(geom.mesh.clone(), 0), &opts).unwrap();
    assert!(conformal_curvatures(&res, w(1.0, 1.0), &geom).is_err());
}

#[test]
fn curvature_consistency_with_euler_lagrange() {
    let geom = ball(1000);
    let opts = MinimizeOptions { tol: 1e-9, ..Default::default() };
    let q = 5.0 - 1e-3;
    let prob = SubcriticalProblem::new(geom.clone(), w(1.0, 0.0), q).unwrap();
    let res = minimize_subcritical(&prob, &initial_guess(geom.mesh.clone(), 0), &opts).unwrap();
    let c = conformal_curvatures(&res, w(1.0, 0.0), &geom).unwrap();
    // EL: −c_nΔu = μ a α_q u^q, so the scalar curvature of u^{4/(n−2)}δ is
    // μ a α u^{q−p}; near criticality u^{q−p} is nearly constant.
    let crit = SubcriticalProblem::new(geom.clone(), w(1.0, 0.0), 5.0).unwrap();
    let s = 1.0 / normalization(&res.u, &crit).unwrap().sqrt();
    let alpha_crit = geom.mesh.integrate_pow(&res.u.scaled(s).into_values(), 6.0).powf(-2.0 / 3.0);
    let r_alt = res.mu * alpha_crit;
    assert!((r_alt - c.r_g).abs() < 1e-12 * c.r_g);
    let pointwise_spread = res
        .u
        .values()
        .iter()
        .map(|v| (v * s).powf(q - 5.0))
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x), hi.max(x)));
    assert!(pointwise_spread.1 / pointwise_spread.0 - 1.0 < 5e-3);
}

#[test]
fn annulus_stays_below_halfspace() {
    let geom = BackgroundGeometry::flat(make_annulus_mesh(400, d3(), 0.5, 1.0).unwrap()).unwrap();
    let lim = critical_limit(&geom, w(1.0, 1.0), &default_schedule(d3()), &MinimizeOptions::default(), 2).unwrap();
    let y = yamabe_halfspace(w(1.0, 1.0), d3()).unwrap();
    assert!(lim.all_converged);
    assert!(lim.y_extrapolated.unwrap() <= y + 1e-6);
}

#[test]
fn small_sweep_is_monotone_and_continuous() {
    let geom = ball(400);
    let sched = default_schedule(d3());
    let opts = MinimizeOptions::default();
    let t = sweep_ab(&geom, &[0.5, 1.0, 2.0], &[0.0, 1.0, 2.0], &sched, &opts, 4, 2).unwrap();
    assert!(t.monotonicity.non_increasing_in_a && t.monotonicity.non_increasing_in_b);
    assert_eq!(t.monotonicity.cells_ok, 9);
    for ia in 0..3 {
        let cell = t.cell(ia, 0);
        let y = yamabe_halfspace(w(cell.a, 0.0), d3()).unwrap();
        assert!((cell.y_estimate.unwrap() - y).abs() < 0.02 * y);
    }
    let serial = sweep_ab(&geom, &[0.5, 1.0, 2.0], &[0.0, 1.0, 2.0], &sched, &opts, 4, 1).unwrap();
    assert_eq!(serial, t);

    let bad = sweep_ab(&geom, &[0.0, 1.0], &[0.0], &sched, &opts, 4, 1).unwrap();
    assert!(bad.cells[0].error.is_some() && bad.cells[1].ok());
    assert!(matches!(sweep_ab(&geom, &[], &[1.0], &sched, &opts, 4, 1), Err(Error::Config(_))));

    let cont = continuity_check(&geom, w(1.0, 1.0), &[0.2, 0.1, 0.05], &sched, &opts, 4, 2).unwrap();
    assert!(cont.halves(1.6, 2.4), "{cont:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn quotient_scale_invariance(c in 1e-3f64..1e3, seed in 0u64..1000, q in 1.5f64..5.0) {
        let geom = ball(64);
        let prob = SubcriticalProblem::new(geom.clone(), w(1.0, 0.7), q).unwrap();
        let u = initial_guess(geom.mesh.clone(), seed);
        let q1 = quotient_q(&u, &prob).unwrap();
        let q2 = quotient_q(&u.scaled(c), &prob).unwrap();
        let q3 = quotient_q(&u.scaled(-c), &prob).unwrap();
        prop_assert!((q1 - q2).abs() <= 1e-12 * q1.abs());
        prop_assert!((q1 - q3).abs() <= 1e-12 * q1.abs());
    }

    #[test]
    fn energy_is_quadratic(c in -10.0f64..10.0, seed in 0u64..1000) {
        let geom = BackgroundGeometry::flat(make_annulus_mesh(32, Dim::new(4).unwrap(), 0.3, 1.0).unwrap()).unwrap();
        let u = initial_guess(geom.mesh.clone(), seed);
        let e1 = energy(&u, &geom).unwrap();
        let ec = energy(&u.scaled(c), &geom).unwrap();
        prop_assert!((ec - c * c * e1).abs() <= 1e-10 * (1.0 + ec.abs()));
    }
}
