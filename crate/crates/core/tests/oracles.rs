use dinterp::dinterp1d::{interp_nonneg, interp_quantile_curve, InterpWeights};
use dinterp::grid1d::{cdf, normalized_quantile, Grid1D, PwcFunction1D};
use dinterp::lowrank::{build_snapshots, reconstruct, svd, svd_columns, y_grid};
use dinterp::radon::{Extent, Image2D, RadonGeometry, RadonOperator, Sinogram};
use dinterp::scenarios::{burgers_solution, hat, random_hat_parameters, transport_family, BurgersIC};
use dinterp::transform::{Field, Stage, TransformChain};
use proptest::prelude::*;
use rand_core::Rng;
use rand_pcg::Pcg32;

fn uniform(rng: &mut Pcg32) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn positive_pwc() -> impl Strategy<Value = PwcFunction1D> {
    (2usize..12).prop_flat_map(|n| {
        (
            prop::collection::vec(0.05f64..1.0, n),
            prop::collection::vec(0.0f64..3.0, n),
        )
            .prop_map(|(widths, values)| {
                let mut edges = vec![0.0];
                for w in widths {
                    edges.push(edges.last().unwrap() + w);
                }
                let values = if values.iter().all(|&v| v == 0.0) {
                    vec![1.0; values.len()]
                } else {
                    values
                };
                PwcFunction1D::new(Grid1D::new(edges).unwrap(), values).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn interpolant_mass_is_linear(u1 in positive_pwc(), u2 in positive_pwc(), lambda in 0.0f64..=1.0) {
        let u = interp_nonneg(&u1, &u2, lambda).unwrap();
        let expect = (1.0 - lambda) * u1.mass() + lambda * u2.mass();
        prop_assert!((u.mass() - expect).abs() <= 1e-12 * expect.max(1.0));
        prop_assert!(u.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn interpolant_quantile_is_the_weighted_mean(
        u1 in positive_pwc(),
        u2 in positive_pwc(),
        lambda in 0.05f64..0.95,
        y in 0.01f64..0.99,
    ) {
        let (q1, _) = normalized_quantile(&u1).unwrap();
        let (q2, _) = normalized_quantile(&u2).unwrap();
        let q = interp_quantile_curve(&u1, &u2, lambda).unwrap();
        let expect = (1.0 - lambda) * q1.left_limit(y) + lambda * q2.left_limit(y);
        prop_assert!((q.left_limit(y) - expect).abs() <= 1e-10);
    }

    #[test]
    fn cdf_is_nondecreasing(u in positive_pwc()) {
        let c = cdf(&u).unwrap();
        prop_assert!(c.u().windows(2).all(|w| w[0] <= w[1]));
        prop_assert!((c.total_mass() - u.mass()).abs() <= 1e-12 * u.mass());
    }
}

#[test]
fn jacobi_svd_matches_nalgebra() {
    let mut rng = Pcg32::new(11, 3);
    for (rows, cols) in [(30, 8), (12, 12), (50, 3)] {
        let columns: Vec<Vec<f64>> = (0..cols)
            .map(|_| (0..rows).map(|_| uniform(&mut rng) - 0.5).collect())
            .collect();
        let basis = svd_columns(&columns).unwrap();
        let m = nalgebra::DMatrix::from_fn(rows, cols, |i, j| columns[j][i]);
        let mut oracle: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
        oracle.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (s, o) in basis.singular_values.iter().zip(&oracle) {
            assert!((s - o).abs() <= 1e-10 * oracle[0], "{s} vs {o}");
        }
        for a in 0..cols {
            for b in 0..cols {
                let ip: f64 = basis.modes[a].iter().zip(&basis.modes[b]).map(|(x, y)| x * y).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn known_spectrum_is_recovered() {
    let mut rng = Pcg32::new(5, 9);
    let q = nalgebra::DMatrix::from_fn(20, 3, |_, _| uniform(&mut rng) - 0.5).qr().q();
    let v = nalgebra::DMatrix::from_fn(3, 3, |_, _| uniform(&mut rng) - 0.5).qr().q();
    let s = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 2.0, 1.0]));
    let a = q * s * v.transpose();
    let columns: Vec<Vec<f64>> = (0..3).map(|j| a.column(j).iter().copied().collect()).collect();
    let basis = svd_columns(&columns).unwrap();
    for (got, want) in basis.singular_values.iter().zip([3.0, 2.0, 1.0]) {
        assert!((got - want).abs() <= 1e-10);
    }
}

#[test]
fn radon_adjoint_identity() {
    let mut rng = Pcg32::new(2, 7);
    let d = 24;
    let extent = Extent::new(-1.0, 1.0, -1.0, 1.0).unwrap();
    let u = Image2D::new(d, extent, (0..d * d).map(|_| uniform(&mut rng)).collect()).unwrap();
    let geometry = RadonGeometry::new(d, extent, 37, 2.0).unwrap();
    let op = RadonOperator::new(geometry);
    let n = geometry.angles * geometry.bins();
    let g = Sinogram::new(geometry, (0..n).map(|_| uniform(&mut rng)).collect()).unwrap();
    let ru = op.forward(&u).unwrap();
    let rtg = op.adjoint(&g).unwrap();
    let lhs: f64 = ru.values().iter().zip(g.values()).map(|(a, b)| a * b).sum();
    let rhs: f64 = u.values().iter().zip(rtg.values()).map(|(a, b)| a * b).sum();
    assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs(), "{lhs} vs {rhs}");
}

#[test]
fn radon_slice_mass_equals_image_mass() {
    let extent = Extent::new(-1.0, 1.0, -1.0, 1.0).unwrap();
    let u = Image2D::from_fn(32, extent, |x, y| (-(x * x + 2.0 * y * y) * 4.0).exp()).unwrap();
    let geometry = RadonGeometry::default_for(&u);
    let g = RadonOperator::new(geometry).forward(&u).unwrap();
    let mass = u.mass();
    for p in 0..geometry.angles {
        assert!((g.slice_mass(p) - mass).abs() <= 1e-12 * mass);
    }
}

#[test]
fn burgers_shock_obeys_rankine_hugoniot() {
    let ic = BurgersIC::Bump {
        background: 0.0,
        amplitude: 0.2,
        center: 0.3,
        width: 0.1,
    };
    let (k, xl) = (0.2 / 0.01, 0.2);
    for t in [0.5, 1.0, 2.0, 3.0] {
        let x = ic.shock_location(t).unwrap();
        let dt = 1e-5;
        let speed = (ic.shock_location(t + dt).unwrap() - ic.shock_location(t - dt).unwrap()) / (2.0 * dt);
        let left = k * (x - xl) / (1.0 + k * t);
        assert!((speed - 0.5 * (left + 0.0)).abs() <= 1e-8, "t = {t}");
    }
}

#[test]
fn burgers_cell_averages_match_quadrature() {
    let ic = BurgersIC::Bump {
        background: 0.1,
        amplitude: 0.2,
        center: 0.3,
        width: 0.1,
    };
    let grid = Grid1D::uniform(0.0, 2.0, 50).unwrap();
    let t = 1.0;
    let u = burgers_solution(t, &ic, &grid).unwrap();
    let fine = burgers_solution(t, &ic, &Grid1D::uniform(0.0, 2.0, 50_000).unwrap()).unwrap();
    let coarse = fine.resample(&grid).unwrap();
    assert!(u.linf_distance(&coarse).unwrap() <= 1e-12);
}

#[test]
fn translated_hats_have_rank_one_snapshots() {
    let grid = Grid1D::uniform(0.0, 1.0, 1000).unwrap();
    let fam = transport_family(6, 0.05, &grid).unwrap();
    let curves: Vec<_> = fam.iter().map(|u| normalized_quantile(u).unwrap().0).collect();
    let ys = y_grid(64);
    let a = build_snapshots(&curves, &ys).unwrap();
    let basis = svd(&a).unwrap();
    let s = basis.scaled_singular_values();
    assert!(s[1] <= 1e-10, "{s:?}");
    let w = InterpWeights::new(vec![0.5, 0.0, 0.0, 0.0, 0.0, 0.5]).unwrap();
    let q = reconstruct(&basis, &w, &curves, 1).unwrap();
    let target = normalized_quantile(&hat(0.05, 0.15 + 0.375, &grid).unwrap()).unwrap().0;
    for &y in &ys {
        assert!((q.left_limit(y) - target.left_limit(y)).abs() <= 1e-10);
    }
}

#[test]
fn random_hat_snapshots_are_affine_in_parameters() {
    let params = random_hat_parameters(20, 3);
    let grid = Grid1D::uniform(0.0, 1.0, 4000).unwrap();
    let curves: Vec<_> = params
        .iter()
        .map(|&(t, w)| normalized_quantile(&hat(w, t, &grid).unwrap()).unwrap().0)
        .collect();
    let a = build_snapshots(&curves, &y_grid(256)).unwrap();
    let s = svd(&a).unwrap().scaled_singular_values();
    assert!(s[2] <= 1e-2 && s[1] >= 1e-2, "{s:?}");
}

#[test]
fn fourier_chain_round_trip_is_exact() {
    let extent = Extent::unit();
    let u = Image2D::from_fn(16, extent, |x, y| (7.0 * x).sin() + y * y).unwrap();
    let chain = TransformChain::new(vec![Stage::FourierPermute, Stage::SignSplit]);
    let b = chain.apply(&Field::Image(u.clone())).unwrap();
    assert_eq!(b.len(), 16);
    let back = chain.invert(&b).unwrap();
    let v = back.as_image().unwrap();
    assert!(v.relative_l2_error(&u).unwrap() <= 1e-13);
}
