use byamabe::geometry_checks::*;
use byamabe::halfspace::{bubble_eval, sample_points, Bubble, Dim, Weights};
use byamabe::numerics::grid::{fd_derivatives, multi_index, sym_index, HalfGrid, Rank, TensorField};
use byamabe::numerics::order::Convergence;
use byamabe::poly::Poly;
use byamabe::Error;
use proptest::prelude::*;

fn dim(n: usize) -> Dim {
    Dim::new(n).unwrap()
}

fn bubble(n: usize, eps: f64) -> Bubble {
    Bubble::for_weights(Weights::new(1.0, 1.0).unwrap(), dim(n), eps).unwrap()
}

fn in_band(c: &Convergence) -> bool {
    c.orders.iter().all(|o| o.order_in(1.8, 2.2))
}

fn fields3(b: &Bubble) -> Vec<(&'static str, AdmissibleVectorField)> {
    let d = dim(3);
    vec![
        ("dilation", AdmissibleVectorField::dilation(d)),
        ("translation", AdmissibleVectorField::translation(d, 0).unwrap()),
        ("random cubic", AdmissibleVectorField::random_cubic(d, 7)),
        ("crafted", AdmissibleVectorField::crafted(b, 3)),
    ]
}

#[test]
fn killing_tensor_of_trivial_fields() {
    let grid = HalfGrid::new(dim(3), 0.125, 1.0).unwrap();
    let s = conformal_killing(&AdmissibleVectorField::zero(dim(3)), &grid).unwrap();
    assert_eq!(s.max_abs(), 0.0);
    let s = conformal_killing(&AdmissibleVectorField::dilation(dim(3)), &grid).unwrap();
    assert!(s.max_abs() < 1e-14);
    let s = conformal_killing(&AdmissibleVectorField::translation(dim(3), 1).unwrap(), &grid).unwrap();
    assert_eq!(s.max_abs(), 0.0);
}

#[test]
fn killing_tensor_matches_differenced_field() {
    let d = dim(3);
    let v = AdmissibleVectorField::random_cubic(d, 11);
    let probes = Ladder::default().probes(d, true);
    let mut residuals = Vec::new();
    for h in [0.1, 0.05, 0.025] {
        let grid = HalfGrid::new(d, h, 1.0).unwrap();
        let vs = TensorField::from_fn(grid.clone(), Rank::Vector, |y, out| {
            let j = v.jet(y, 0);
            out.copy_from_slice(&j.value);
        });
        let dv: Vec<TensorField> = (0..3).map(|k| fd_derivatives(&vs, &multi_index(3, &[k])).unwrap()).collect();
        let s = conformal_killing(&v, &grid).unwrap();
        let mut worst = 0.0f64;
        for y in &probes {
            let p = dv[0].grid().locate(y).unwrap();
            let ps = grid.locate(y).unwrap();
            let div: f64 = (0..3).map(|m| dv[m].at(m, p)).sum();
            for i in 0..3 {
                for j in 0..3 {
                    let delta = if i == j { 2.0 * div / 3.0 } else { 0.0 };
                    let fd = dv[i].at(j, p) + dv[j].at(i, p) - delta;
                    worst = worst.max((fd - s.sym(i, j, ps)).abs());
                }
            }
        }
        residuals.push(worst);
    }
    let c = Convergence::from_ladder(vec![0.1, 0.05, 0.025], residuals);
    assert!(in_band(&c), "{c:?}");
}

#[test]
fn killing_tensor_trace_and_boundary_components() {
    let b = bubble(3, 1.0);
    for (name, v) in fields3(&b) {
        let grid = HalfGrid::new(dim(3), 0.1, 1.0).unwrap();
        let s = conformal_killing(&v, &grid).unwrap();
        for p in 0..grid.len() {
            let tr: f64 = (0..3).map(|i| s.sym(i, i, p)).sum();
            assert!(tr.abs() <= 1e-12, "{name}: trace {tr}");
            if grid.on_boundary(p) {
                for a in 0..2 {
                    assert!(s.sym(a, 2, p).abs() <= 1e-12, "{name}: S_an");
                }
            }
        }
    }
}

#[test]
fn psi_of_dilation_is_scale_derivative() {
    let b = bubble(3, 0.7);
    let grid = HalfGrid::new(dim(3), 0.125, 1.0).unwrap();
    let psi = correction_psi(&AdmissibleVectorField::dilation(dim(3)), &b, &grid, PsiMode::Formula).unwrap();
    let de = 1e-5;
    let plus = Bubble::new(b.eps + de, b.t_c, b.dim).unwrap();
    let minus = Bubble::new(b.eps - de, b.t_c, b.dim).unwrap();
    for p in (0..grid.len()).step_by(37) {
        let y = grid.point(p);
        let d_eps = (bubble_eval(&plus, &y).value - bubble_eval(&minus, &y).value) / (2.0 * de);
        let expect = -b.eps * d_eps;
        assert!((psi.at(0, p) - expect).abs() < 1e-8 * expect.abs().max(1.0), "at {y:?}");
    }
    let zero = correction_psi(&AdmissibleVectorField::zero(dim(3)), &b, &grid, PsiMode::Formula).unwrap();
    assert_eq!(zero.max_abs(), 0.0);
    let off = correction_psi(&AdmissibleVectorField::random_cubic(dim(3), 2), &b, &grid, PsiMode::Zero).unwrap();
    assert_eq!(off.max_abs(), 0.0);
}

#[test]
fn psi_decay_bound_is_scale_uniform() {
    // Quadratic V grows like (ε + |y|)², so ψ / (ε^{(n−2)/2} (ε + |y|)^{3−n}) stays bounded.
    let n = 4;
    let d = dim(n);
    let x = |i| Poly::var(n, i);
    let comps = vec![
        &x(0) * &x(1) + &x(2) * &x(2),
        &x(1) * &x(1) - (&x(3) * &x(3)).scale(0.5),
        &x(0) * &x(2),
        &x(3) * &(x(0) + x(1)),
    ];
    let v = AdmissibleVectorField::new(d, comps).unwrap();
    let mut worst = 0.0f64;
    for eps in [1.0, 0.1, 0.01] {
        let b = bubble(n, eps);
        let grid_pts: Vec<Vec<f64>> = sample_points(d, 200, 5.0, true, 9)
            .into_iter()
            .chain(sample_points(d, 200, 5.0 * eps, true, 10))
            .collect();
        for y in grid_pts {
            let jets = LocalJets::new(&b, &v, HInput::KillingOfV, PsiMode::Formula, &y);
            let r = y.iter().map(|t| t * t).sum::<f64>().sqrt();
            let bound = eps.powf((n as f64 - 2.0) / 2.0) * (eps + r).powf(3.0 - n as f64);
            worst = worst.max(jets.psi.abs() / bound);
        }
    }
    assert!(worst.is_finite() && worst < 50.0, "ratio {worst}");
}

#[test]
fn linearized_scalar_equation() {
    let b = bubble(3, 1.0);
    let ladder = Ladder::default();
    let probes = ladder.probes(dim(3), true);
    let zero = verify_linearized_scalar(&AdmissibleVectorField::zero(dim(3)), &b, &ladder).unwrap();
    assert!(zero.residuals.iter().all(|r| *r == 0.0));
    for (name, v) in fields3(&b) {
        let analytic = linearized_scalar_residual(&v, &b, &probes).unwrap();
        assert!(analytic <= 1e-8, "{name}: analytic {analytic}");
        let c = verify_linearized_scalar(&v, &b, &ladder).unwrap();
        assert!(in_band(&c), "{name}: {c:?}");
    }
}

#[test]
fn linearized_mean_equation() {
    let b = bubble(3, 1.0);
    let ladder = Ladder::default();
    let probes = ladder.probes(dim(3), false);
    let zero = verify_linearized_mean(&AdmissibleVectorField::zero(dim(3)), &b, &ladder).unwrap();
    assert!(zero.residuals.iter().all(|r| *r == 0.0));
    for (name, v) in fields3(&b) {
        let analytic = linearized_mean_residual(&v, &b, &probes).unwrap();
        assert!(analytic <= 1e-8, "{name}: analytic {analytic}");
        let c = verify_linearized_mean(&v, &b, &ladder).unwrap();
        assert!(in_band(&c), "{name}: {c:?}");
    }
    let interior = vec![vec![0.0, 0.0, 0.5]];
    assert!(linearized_mean_residual(&fields3(&b)[0].1, &b, &interior).is_err());
}

#[test]
fn einstein_identity_of_bubble() {
    let pts = sample_points(dim(3), 100, 2.0, true, 1);
    assert!(verify_einstein_identity(&bubble(3, 1.0), &pts) <= 1e-9);
    assert!(verify_einstein_identity(&bubble(3, 0.05), &pts) <= 1e-9);
    // Off-diagonal entries: the δ-term drops out.
    let b = bubble(3, 1.0);
    let c = 3.0;
    for y in pts.iter().take(20) {
        let j = b.jet(y, 2);
        let off = j.value * j.hess[1] - c * j.grad[0] * j.grad[1];
        assert!(off.abs() / j.value.powi(2) < 1e-12);
    }
    for n in [4, 5, 6] {
        let pts = sample_points(dim(n), 50, 2.0, true, 2);
        assert!(verify_einstein_identity(&bubble(n, 0.3), &pts) <= 1e-9);
    }
}

#[test]
fn boundary_relations_of_s_and_t() {
    let b = bubble(3, 1.0);
    let ladder = Ladder::default();
    let z = AdmissibleVectorField::zero(dim(3));
    let r = verify_st_boundary(&z, HInput::KillingOfV, &b, &ladder).unwrap();
    assert!(r.passes() && r.normal_nn.residuals.iter().all(|x| *x == 0.0));
    let r = verify_st_boundary(&AdmissibleVectorField::dilation(dim(3)), HInput::KillingOfV, &b, &ladder).unwrap();
    assert!(r.passes());
    let crafted = AdmissibleVectorField::crafted(&b, 3);
    let h0 = PerturbationTensor::zero(dim(3));
    for hin in [HInput::KillingOfV, HInput::Tensor(&h0)] {
        let r = verify_st_boundary(&crafted, hin, &b, &ladder).unwrap();
        assert!(r.passes(), "{r:?}");
    }
    // S_nn must be nonzero for the relation to be a real test.
    let grid = ladder.grid(dim(3), 0).unwrap();
    let s = conformal_killing(&crafted, &grid).unwrap();
    let p = grid.locate(&[0.3, -0.2, 0.0]).unwrap();
    assert!(s.sym(2, 2, p).abs() > 0.1);
    // A generic admissible field does not satisfy the normal relation.
    let generic = AdmissibleVectorField::random_cubic(dim(3), 7);
    let r = verify_st_boundary(&generic, HInput::KillingOfV, &b, &ladder).unwrap();
    assert!(r.s_an <= 1e-12 && r.t_an <= 1e-12);
    assert!(!r.passes());
}

#[test]
fn q_tensor_properties() {
    let b = bubble(3, 1.0);
    let grid = HalfGrid::new(dim(3), 0.1, 1.0).unwrap();
    let zero = TensorField::zeros(grid.clone(), Rank::SymMatrix);
    assert_eq!(q_tensor(&zero, &b).unwrap().max_abs(), 0.0);

    let v = AdmissibleVectorField::crafted(&b, 5);
    let h0 = PerturbationTensor::zero(dim(3));
    let pair = killing_pair(&v, HInput::Tensor(&h0), &b, &grid, PsiMode::Formula).unwrap();
    let q = q_tensor(&pair.t, &b).unwrap();
    let n = 3;
    for p in (0..q.grid().len()).step_by(13) {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let a = q.at((i * n + j) * n + k, p);
                    let c = q.at((j * n + i) * n + k, p);
                    assert!((a - c).abs() < 1e-12);
                }
            }
        }
    }
    // Linear in (W, ∂W) at fixed T.
    let y = [0.2, 0.4, 0.3];
    let jets = LocalJets::new(&b, &v, HInput::Tensor(&h0), PsiMode::Formula, &y);
    let mut scaled = jets.clone();
    scaled.w.value *= 3.0;
    scaled.w.grad.iter_mut().for_each(|g| *g *= 3.0);
    for (a, c) in jets.q_tensor().iter().zip(scaled.q_tensor()) {
        assert!((3.0 * a - c).abs() < 1e-12 * a.abs().max(1.0));
    }
    // The differenced Q converges to the analytic one.
    let probes = Ladder::default().probes(dim(3), true);
    let mut res = Vec::new();
    for h in [0.1, 0.05, 0.025] {
        let grid = HalfGrid::new(dim(3), h, 1.0).unwrap();
        let pair = killing_pair(&v, HInput::Tensor(&h0), &b, &grid, PsiMode::Formula).unwrap();
        let q = q_tensor(&pair.t, &b).unwrap();
        let mut worst = 0.0f64;
        for y in &probes {
            let p = q.grid().locate(y).unwrap();
            let exact = LocalJets::new(&b, &v, HInput::Tensor(&h0), PsiMode::Formula, y).q_tensor();
            for (c, e) in exact.iter().enumerate() {
                worst = worst.max((q.at(c, p) - e).abs());
            }
        }
        res.push(worst);
    }
    // T is quadratic here, so the centered differences are exact.
    assert!(res.iter().all(|r| *r < 1e-10), "{res:?}");
}

/// Term-by-term evaluation of ξ with `H = S`, written independently of the library.
fn xi_by_terms(j: &LocalJets) -> Vec<f64> {
    let n = j.n;
    let nf = n as f64;
    let w = j.w.value;
    let dw = &j.w.grad;
    let s = |a: usize, b: usize| j.s[a * n + b];
    let ds = |a: usize, b: usize, c: usize| j.ds[(a * n + b) * n + c];
    let c = 4.0 * (nf - 1.0) / (nf - 2.0);
    let mut out = vec![0.0; n];
    for (i, xi) in out.iter_mut().enumerate() {
        let mut terms = [0.0f64; 15];
        for k in 0..n {
            terms[0] += 2.0 * w * j.psi * ds(i, k, k);
            terms[1] -= 2.0 * w * j.dpsi[k] * s(i, k);
            terms[2] -= 2.0 * dw[k] * j.psi * s(i, k);
            terms[6] -= w * j.psi * ds(i, k, k);
            terms[7] += w * j.dpsi[k] * s(i, k);
            terms[8] += dw[k] * j.psi * s(i, k);
            terms[12] -= c * dw[k] * j.psi * s(i, k);
            for l in 0..n {
                terms[3] -= 0.5 * w * w * ds(l, k, i) * s(l, k);
                terms[4] += w * w * ds(k, l, l) * s(i, k);
                terms[5] += 2.0 * w * dw[l] * s(k, l) * s(i, k);
                terms[9] += 0.25 * w * w * ds(l, k, i) * s(l, k);
                terms[10] -= 0.5 * w * w * ds(k, l, l) * s(i, k);
                terms[11] -= w * dw[l] * s(k, l) * s(i, k);
            }
        }
        terms[13] = c * j.psi * j.dpsi[i];
        // T = 0, so the last term vanishes.
        *xi = terms.iter().sum();
    }
    out
}

#[test]
fn xi_field_properties() {
    let b = bubble(3, 1.0);
    let grid = HalfGrid::new(dim(3), 0.1, 1.0).unwrap();
    let zero_s = TensorField::zeros(grid.clone(), Rank::SymMatrix);
    let zero_psi = TensorField::zeros(grid.clone(), Rank::Scalar);
    assert_eq!(xi_field(&zero_s, &zero_s, &zero_psi, &b).unwrap().max_abs(), 0.0);

    let v = AdmissibleVectorField::random_cubic(dim(3), 21);
    for y in sample_points(dim(3), 10, 1.0, true, 4) {
        let j = LocalJets::new(&b, &v, HInput::KillingOfV, PsiMode::Formula, &y);
        for (a, e) in j.xi().iter().zip(xi_by_terms(&j)) {
            assert!((a - e).abs() <= 1e-12 * e.abs().max(1.0));
        }
    }

    // Boundary closed form, for admissible perturbations and the crafted field.
    for n in [3, 4, 5, 6] {
        let bn = bubble(n, 1.0);
        let v = AdmissibleVectorField::crafted(&bn, 8);
        let pts = sample_points(dim(n), 40, 1.0, false, 6);
        for h in [PerturbationTensor::zero(dim(n)), PerturbationTensor::random(dim(n), 4)] {
            let r = xi_boundary_residual(&v, HInput::Tensor(&h), &bn, &pts).unwrap();
            assert!(r <= 1e-8, "n={n}: {r}");
        }
    }

    // Sampled ξ with differenced inputs converges to the analytic one.
    let probes = Ladder::default().probes(dim(3), true);
    let mut res = Vec::new();
    for h in [0.1, 0.05, 0.025] {
        let grid = HalfGrid::new(dim(3), h, 1.0).unwrap();
        let pair = killing_pair(&v, HInput::KillingOfV, &b, &grid, PsiMode::Formula).unwrap();
        let xi = xi_field(&pair.s, &pair.s, &pair.psi, &b).unwrap();
        let mut worst = 0.0f64;
        for y in &probes {
            let p = xi.grid().locate(y).unwrap();
            let exact = LocalJets::new(&b, &v, HInput::KillingOfV, PsiMode::Formula, y).xi();
            for (i, e) in exact.iter().enumerate() {
                worst = worst.max((xi.at(i, p) - e).abs());
            }
        }
        res.push(worst);
    }
    let c = Convergence::from_ladder(vec![0.1, 0.05, 0.025], res);
    assert!(in_band(&c), "{c:?}");
}

#[test]
fn xi_field_rejects_mismatched_grids() {
    let b = bubble(3, 1.0);
    let g1 = HalfGrid::new(dim(3), 0.1, 1.0).unwrap();
    let g2 = HalfGrid::new(dim(3), 0.05, 1.0).unwrap();
    let s = TensorField::zeros(g1.clone(), Rank::SymMatrix);
    let psi = TensorField::zeros(g2, Rank::Scalar);
    assert!(matches!(xi_field(&s, &s, &psi, &b), Err(Error::Config(_))));
}

#[test]
fn second_variation_identity() {
    let b = bubble(3, 1.0);
    let ladder = Ladder::default();
    let probes = ladder.probes(dim(3), true);
    let z = verify_second_variation(&AdmissibleVectorField::zero(dim(3)), HInput::KillingOfV, &b, &ladder).unwrap();
    assert!(z.residuals.iter().all(|r| *r == 0.0));
    let dil = AdmissibleVectorField::dilation(dim(3));
    assert!(second_variation_residual(&dil, HInput::KillingOfV, &b, &probes).unwrap() <= 1e-8);
    for (name, v) in fields3(&b).into_iter().skip(2) {
        let r = second_variation_residual(&v, HInput::KillingOfV, &b, &probes).unwrap();
        assert!(r <= 1e-8, "{name}: analytic {r}");
        let c = verify_second_variation(&v, HInput::KillingOfV, &b, &ladder).unwrap();
        assert!(in_band(&c), "{name}: {c:?}");
    }
    for n in [4, 5] {
        let bn = bubble(n, 0.5);
        let v = AdmissibleVectorField::random_cubic(dim(n), 3);
        let pts = sample_points(dim(n), 40, 1.0, true, 3);
        assert!(second_variation_residual(&v, HInput::KillingOfV, &bn, &pts).unwrap() <= 1e-8);
        assert!(linearized_scalar_residual(&v, &bn, &pts).unwrap() <= 1e-8);
    }
}

#[test]
fn second_variation_precondition() {
    let n = 4;
    let b = bubble(n, 1.0);
    let v = AdmissibleVectorField::random_cubic(dim(n), 1);
    let h = PerturbationTensor::random(dim(n), 2);
    let ladder = Ladder {
        h0: 0.125,
        levels: 2,
        extent: 1.0,
    };
    match verify_second_variation(&v, HInput::Tensor(&h), &b, &ladder) {
        Err(Error::Precondition { residual, .. }) => assert!(residual > 1e-3),
        other => panic!("expected a precondition error, got {other:?}"),
    }
    // H = 0 with V = 0 gives T = 0, which passes the check.
    let z = AdmissibleVectorField::zero(dim(n));
    let pts = sample_points(dim(n), 10, 1.0, true, 1);
    let h0 = PerturbationTensor::zero(dim(n));
    assert_eq!(second_variation_residual(&z, HInput::Tensor(&h0), &b, &pts).unwrap(), 0.0);
}

#[test]
fn residuals_are_linear_in_the_field() {
    let b = bubble(3, 1.0);
    let ladder = Ladder {
        h0: 0.1,
        levels: 2,
        extent: 1.0,
    };
    let v1 = AdmissibleVectorField::random_cubic(dim(3), 31);
    let v2 = AdmissibleVectorField::dilation(dim(3));
    let sum = v1.add(&v2);
    let r1 = verify_linearized_scalar(&v1, &b, &ladder).unwrap();
    let r2 = verify_linearized_scalar(&v2, &b, &ladder).unwrap();
    let r12 = verify_linearized_scalar(&sum, &b, &ladder).unwrap();
    for k in 0..2 {
        assert!(r12.residuals[k] <= r1.residuals[k] + r2.residuals[k] + 1e-12);
    }
    let m1 = verify_linearized_mean(&v1, &b, &ladder).unwrap();
    let m2 = verify_linearized_mean(&v2, &b, &ladder).unwrap();
    let m12 = verify_linearized_mean(&sum, &b, &ladder).unwrap();
    for k in 0..2 {
        assert!(m12.residuals[k] <= m1.residuals[k] + m2.residuals[k] + 1e-12);
    }
}

#[test]
fn ladder_validation() {
    let b = bubble(3, 1.0);
    let bad = Ladder {
        h0: 0.1,
        levels: 1,
        extent: 1.0,
    };
    let v = AdmissibleVectorField::dilation(dim(3));
    assert!(matches!(verify_linearized_scalar(&v, &b, &bad), Err(Error::Config(_))));
    let v4 = AdmissibleVectorField::dilation(dim(4));
    assert!(matches!(verify_linearized_scalar(&v4, &b, &Ladder::default()), Err(Error::Domain(_))));
}

#[test]
fn killing_pair_fields_agree() {
    let b = bubble(4, 1.0);
    let grid = HalfGrid::new(dim(4), 0.125, 1.0).unwrap();
    let v = AdmissibleVectorField::random_cubic(dim(4), 6);
    let h = PerturbationTensor::random(dim(4), 6);
    let pair = killing_pair(&v, HInput::Tensor(&h), &b, &grid, PsiMode::Formula).unwrap();
    for p in (0..grid.len()).step_by(97) {
        let y = grid.point(p);
        let j = LocalJets::new(&b, &v, HInput::Tensor(&h), PsiMode::Formula, &y);
        assert!((pair.psi.at(0, p) - j.psi).abs() < 1e-12);
        for i in 0..4 {
            for k in i..4 {
                assert!((pair.t.at(sym_index(4, i, k), p) - j.t(i, k)).abs() < 1e-12);
                assert!((pair.s.sym(i, k, p) - j.s[i * 4 + k]).abs() < 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn admissible_fields_have_tracefree_tangential_s(seed in 0u64..10_000, n in 3usize..6) {
        let v = AdmissibleVectorField::random_cubic(dim(n), seed);
        let b = bubble(n, 1.0);
        for y in sample_points(dim(n), 8, 1.5, false, seed) {
            let j = LocalJets::new(&b, &v, HInput::KillingOfV, PsiMode::Formula, &y);
            prop_assert!(j.trace_s().abs() <= 1e-12);
            for a in 0..n - 1 {
                prop_assert!(j.s[a * n + n - 1].abs() <= 1e-12);
            }
            let (l, r) = j.linearized_mean();
            prop_assert!((l - r).abs() <= 1e-8 * j.w.value.powi(2));
        }
    }
}

#[test]
fn identity_suite_passes_in_three_dimensions() {
    let opts = SuiteOptions::new(dim(3));
    for id in Identity::ALL {
        let r = run_identity(id, &opts).unwrap();
        assert!(r.pass, "{id}: {r:?}");
        let expected_mode = if matches!(id, Identity::Bubble | Identity::Einstein) { "analytic" } else { "finite_difference" };
        assert_eq!(r.mode, expected_mode);
        for c in &r.cases {
            for l in &c.ladders {
                assert_eq!(l.convergence.residuals.len(), 3, "{id}/{}", c.case);
            }
        }
    }
}

#[test]
fn identity_suite_in_higher_dimensions() {
    for n in [4, 5] {
        let mut opts = SuiteOptions::new(dim(n));
        opts.eps = 0.5;
        opts.samples = 30;
        for id in Identity::ALL {
            let r = run_identity(id, &opts).unwrap();
            assert!(r.pass, "n={n} {id}: {r:?}");
            assert_eq!(r.mode, "analytic");
            assert!(r.cases.iter().all(|c| c.ladders.is_empty()));
        }
    }
    assert!(matches!(run_identity(Identity::Bubble, &SuiteOptions::new(dim(7))), Err(Error::Config(_))));
}

#[test]
fn identity_selector_parsing() {
    assert_eq!(Identity::parse_selector("all").unwrap().len(), 6);
    assert_eq!(Identity::parse_selector("second-var").unwrap(), vec![Identity::SecondVar]);
    assert!(matches!(Identity::parse_selector("ricci"), Err(Error::Config(_))));
    for id in Identity::ALL {
        assert_eq!(id.name().parse::<Identity>().unwrap(), id);
        assert_eq!(serde_json::to_value(id).unwrap(), serde_json::json!(id.name()));
    }
}
