use heatkernel_core::ball::BallWeight;
use heatkernel_core::domain::Domain;
use heatkernel_core::jacobi::IntervalWeight;
use heatkernel_core::oracle::*;
use heatkernel_core::simplex::SimplexWeight;

fn ball(mu: f64, d: usize) -> Domain {
    Domain::Ball(BallWeight::new(mu, d).unwrap())
}

fn simplex(kappa: &[f64]) -> Domain {
    Domain::Simplex(SimplexWeight::new(kappa.to_vec()).unwrap())
}

fn ball_points(d: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![0.0], vec![0.3], vec![-0.85], vec![0.999]],
        2 => vec![
            vec![0.0, 0.0],
            vec![0.3, -0.2],
            vec![-0.6, 0.7],
            vec![0.05, 0.98],
        ],
        _ => vec![
            vec![0.0, 0.0, 0.0],
            vec![0.3, -0.2, 0.1],
            vec![-0.5, 0.4, 0.6],
            vec![0.0, 0.0, 0.97],
        ],
    }
}

fn simplex_points(d: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![0.0], vec![0.3], vec![0.9], vec![1.0]],
        2 => vec![
            vec![0.2, 0.3],
            vec![0.0, 0.5],
            vec![0.7, 0.25],
            vec![1.0 / 3.0, 1.0 / 3.0],
            vec![0.0, 0.0],
        ],
        _ => vec![
            vec![0.1, 0.2, 0.3],
            vec![0.0, 0.5, 0.1],
            vec![0.25, 0.25, 0.25],
            vec![0.6, 0.1, 0.0],
        ],
    }
}

fn cross_check(dom: &Domain, n_max: usize, pts: &[Vec<f64>], tol: f64) {
    let basis = gram_schmidt_basis(dom, n_max).unwrap();
    for n in 0..=n_max {
        for x in pts {
            for y in pts {
                let a = projector_oracle(&basis, n, x, y).unwrap();
                let b = dom.projector(n, x, y).unwrap();
                assert!(
                    (a - b).abs() <= tol * (1.0 + a.abs()),
                    "{dom:?} n={n} x={x:?} y={y:?}: oracle {a} closed {b}"
                );
            }
        }
    }
}

#[test]
fn projector_matches_ball() {
    for &(mu, d, n_max) in &[
        (0.0, 2, 6),
        (0.5, 2, 6),
        (1.0, 2, 8),
        (1.5, 1, 8),
        (0.0, 3, 4),
        (0.5, 3, 5),
        (2.0, 3, 4),
    ] {
        cross_check(&ball(mu, d), n_max, &ball_points(d), 1e-9);
    }
}

#[test]
fn projector_matches_simplex() {
    let cases: &[&[f64]] = &[
        &[0.5, 0.5],
        &[0.0, 1.5],
        &[1.0, 1.0, 1.0],
        &[0.0, 0.5, 2.0],
        &[0.0, 0.0, 0.0],
        &[0.5, 1.0, 0.0, 1.5],
    ];
    for kappa in cases {
        let d = kappa.len() - 1;
        cross_check(
            &simplex(kappa),
            if d == 3 { 4 } else { 6 },
            &simplex_points(d),
            1e-9,
        );
    }
}

#[test]
fn eigenspaces() {
    let doms = [
        ball(1.0, 2),
        ball(0.0, 2),
        ball(0.5, 1),
        simplex(&[1.0, 1.0, 1.0]),
        simplex(&[0.0, 0.5, 2.0]),
        simplex(&[0.5, 0.5]),
    ];
    for dom in &doms {
        let basis = gram_schmidt_basis(dom, 4).unwrap();
        for n in 0..=4 {
            for p in basis.level(n).unwrap() {
                let dp = apply_generator(dom, p);
                let want = p.scale(-dom.eigen_rate(n));
                let err = dp.max_coeff_diff(&want);
                assert!(
                    err <= 1e-9 * (1.0 + p.max_abs_coeff()),
                    "{dom:?} n={n} err={err}"
                );
            }
        }
    }
}

#[test]
fn heat_oracle_matches_kernels() {
    let dom = ball(0.5, 2);
    let basis = gram_schmidt_basis(&dom, 8).unwrap();
    let plan = dom.choose_truncation(0.5, 1e-12).unwrap();
    let k = dom.heat_kernel(0.5, &plan).unwrap();
    for x in ball_points(2) {
        for y in ball_points(2) {
            let a = heat_oracle(&basis, 0.5, &x, &y, 1e-12).unwrap();
            let b = k.eval(&x, &y).unwrap();
            assert!((a - b).abs() < 1e-8, "{a} {b}");
        }
    }
    let dom = Domain::Interval(IntervalWeight::lebesgue());
    let basis = gram_schmidt_basis(&dom, 12).unwrap();
    let v = heat_oracle(&basis, 1.0, &[1.0], &[1.0], 1e-9).unwrap();
    assert!((v - 0.7092216).abs() < 1e-6, "{v}");
}

fn sample_polys(d: usize) -> Vec<MultiPoly> {
    let mut out = vec![MultiPoly::constant(d, 1.0)];
    for n in 1..=3u32 {
        for e in monomials_of_degree(d, n) {
            out.push(MultiPoly::monomial(e, 1.0));
        }
    }
    // a mixed polynomial of degree 5
    let mut mixed = MultiPoly::constant(d, 0.5);
    for i in 0..d {
        mixed = mixed.add(&MultiPoly::var(d, i).pow(2 + i as u32).scale(1.0 + i as f64));
    }
    out.push(mixed.mul(&MultiPoly::var(d, 0).add(&MultiPoly::constant(d, -0.3))));
    out
}

fn all_domains() -> Vec<Domain> {
    vec![
        Domain::Interval(IntervalWeight::new(0.3, -0.4).unwrap()),
        ball(1.0, 2),
        ball(0.25, 2),
        ball(1.5, 3),
        simplex(&[1.0, 1.0, 1.0]),
        simplex(&[0.5, 0.7, 2.0]),
        simplex(&[1.0, 2.0]),
    ]
}

#[test]
fn green_identity_examples() {
    let (l, r) = green_identity_check(
        &ball(1.0, 2),
        &MultiPoly::constant(2, 1.0),
        &MultiPoly::constant(2, 1.0),
    )
    .unwrap();
    assert_eq!((l, r), (0.0, 0.0));
    let (l, r) =
        green_identity_check(&ball(1.0, 2), &MultiPoly::var(2, 0), &MultiPoly::var(2, 1)).unwrap();
    assert!((l - r).abs() < 1e-10);
    let f = MultiPoly::monomial(vec![2, 0], 1.0);
    let (l, r) =
        green_identity_check(&simplex(&[1.0, 1.0, 1.0]), &f, &MultiPoly::var(2, 0)).unwrap();
    assert!((l - r).abs() <= 1e-9 * l.abs().max(r.abs()), "{l} {r}");
}

#[test]
fn green_identity_sweep() {
    for dom in all_domains() {
        let ps = sample_polys(dom.dim());
        for f in &ps {
            for g in &ps {
                let (l, r) = green_identity_check(&dom, f, g).unwrap();
                assert!(
                    (l - r).abs() <= 1e-9 * (1e-3 + l.abs().max(r.abs())),
                    "{dom:?} {l} {r}"
                );
            }
        }
    }
}

#[test]
fn generator_is_symmetric_and_negative() {
    for dom in all_domains() {
        let ps = sample_polys(dom.dim());
        let cub = dom.cubature(16).unwrap();
        let integ = |a: &MultiPoly, b: &MultiPoly| cub.integrate(|x| a.eval(x) * b.eval(x));
        for f in &ps {
            let df = apply_generator(&dom, f);
            let ff = integ(&df, f);
            assert!(ff <= 1e-12, "{dom:?} ⟨Df,f⟩ = {ff}");
            for g in &ps {
                let dg = apply_generator(&dom, g);
                let a = integ(&df, g);
                let b = integ(f, &dg);
                assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{dom:?} {a} {b}");
            }
        }
    }
}

#[test]
fn decomposition_examples() {
    let rep = decomposition_check(&ball(1.0, 2), &MultiPoly::monomial(vec![1, 1], 1.0)).unwrap();
    assert!(rep.max_abs_diff < 1e-10, "{rep:?}");
    let rep = decomposition_check(
        &simplex(&[1.0, 1.0, 1.0]),
        &MultiPoly::monomial(vec![2, 0], 1.0),
    )
    .unwrap();
    assert!(rep.max_abs_diff < 1e-10, "{rep:?}");
    let rep = decomposition_check(&ball(1.0, 2), &MultiPoly::constant(2, 1.0)).unwrap();
    assert!(rep.max_abs_diff < 1e-13);
}

#[test]
fn decomposition_sweep() {
    for dom in all_domains() {
        for p in sample_polys(dom.dim()) {
            let rep = decomposition_check(&dom, &p).unwrap();
            assert!(
                rep.max_abs_diff <= 1e-8 * rep.scale,
                "{dom:?} {p:?} {rep:?}"
            );
        }
    }
}

#[test]
fn projector_ignores_monomial_order() {
    for dom in [ball(1.0, 2), simplex(&[0.5, 1.0, 1.5]), ball(0.5, 3)] {
        let n_max = if dom.dim() == 3 { 4 } else { 6 };
        let a = gram_schmidt_basis(&dom, n_max).unwrap();
        let pts = if let Domain::Ball(_) = dom {
            ball_points(dom.dim())
        } else {
            simplex_points(dom.dim())
        };
        for seed in [1u64, 7, 99] {
            let b = gram_schmidt_basis_shuffled(&dom, n_max, Some(seed)).unwrap();
            for n in 0..=n_max {
                for x in &pts {
                    for y in &pts {
                        let u = projector_oracle(&a, n, x, y).unwrap();
                        let v = projector_oracle(&b, n, x, y).unwrap();
                        assert!((u - v).abs() <= 1e-10 * (1.0 + u.abs()), "{u} {v}");
                    }
                }
            }
        }
    }
}

#[test]
fn projector_oracle_rotation_invariant() {
    let dom = ball(0.7, 2);
    let basis = gram_schmidt_basis(&dom, 6).unwrap();
    let rot = |p: &[f64], th: f64| {
        vec![
            th.cos() * p[0] - th.sin() * p[1],
            th.sin() * p[0] + th.cos() * p[1],
        ]
    };
    for th in [0.3, 1.7, -2.4] {
        for x in ball_points(2) {
            for y in ball_points(2) {
                for n in 0..=6 {
                    let a = projector_oracle(&basis, n, &x, &y).unwrap();
                    let b = projector_oracle(&basis, n, &rot(&x, th), &rot(&y, th)).unwrap();
                    assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
                }
            }
        }
    }
}

#[test]
fn level_zero_and_dimensions() {
    let dom = ball(1.0, 2);
    let basis = gram_schmidt_basis(&dom, 3).unwrap();
    let p0 = projector_oracle(&basis, 0, &[0.1, 0.2], &[-0.4, 0.5]).unwrap();
    assert!((p0 - 1.0 / dom.total_mass()).abs() < 1e-14);
    let b3 = gram_schmidt_basis(&ball(1.0, 3), 4).unwrap();
    for n in 0..=4 {
        assert_eq!(b3.level(n).unwrap().len(), (n + 1) * (n + 2) / 2);
    }
    assert!(projector_oracle(&basis, 4, &[0.0, 0.0], &[0.0, 0.0]).is_err());
}
