use proptest::prelude::*;
use relucraft::minmax::{maxn_net, minn_net};
use relucraft::testkit::{self, Tier};
use relucraft::yarotsky::{mult_net, multn_net, polynomial_net, sawtooth_net, square_net};

fn ceil_log2(n: usize) -> usize {
    (usize::BITS - (n - 1).leading_zeros()) as usize
}

#[test]
fn min_max_metrics() {
    for n in 1..=64 {
        let (mn, c1) = minn_net(n).unwrap();
        let (mx, c2) = maxn_net(n).unwrap();
        assert!(c1.holds() && c2.holds());
        for net in [&mn, &mx] {
            assert_eq!(net.depth(), ceil_log2(n), "n = {n}");
            assert!(net.size() <= 16 * n);
            assert!(net.width() <= 3 * n);
        }
    }
    assert_eq!(minn_net(4).unwrap().0.size(), 23);
    assert!(minn_net(0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn min_max_are_exact(seed in 0u64..1_000_000, n in 1usize..=64) {
        let mut rng = testkit::rng(seed);
        let x = testkit::random_point(&mut rng, n, -10.0, 10.0);
        prop_assert!(Tier::Tight.accepts(minn_net(n).unwrap().0.eval1(&x), testkit::min(&x)));
        prop_assert!(Tier::Tight.accepts(maxn_net(n).unwrap().0.eval1(&x), testkit::max(&x)));
    }

    #[test]
    fn mult_vanishes_on_the_axes(eps in 1e-4f64..0.5, y in -1.0f64..1.0) {
        let (m, _) = mult_net(eps).unwrap();
        prop_assert_eq!(m.eval1(&[0.0, y]), 0.0);
        prop_assert_eq!(m.eval1(&[y, 0.0]), 0.0);
    }

    #[test]
    fn multn_vanishes_when_a_factor_is_zero(seed in 0u64..100_000, n in 2usize..=5, zero in 0usize..5) {
        let mut rng = testkit::rng(seed);
        let mut x = testkit::random_point(&mut rng, n, -1.0, 1.0);
        x[zero % n] = 0.0;
        prop_assert_eq!(multn_net(n, 0.01).unwrap().0.eval1(&x), 0.0);
    }
}

#[test]
fn sawtooth_matches_closed_form() {
    for n in 1..=8 {
        let h = sawtooth_net(n).unwrap();
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            Tier::Tight
                .check(h.eval1(&[x]), testkit::sawtooth(n, x), "sawtooth")
                .unwrap();
        }
    }
}

#[test]
fn square_gadget_interpolates_on_the_dyadic_grid() {
    for n in 1..=10 {
        let (s, cert) = square_net(n).unwrap();
        assert!(cert.holds());
        assert_eq!(s.depth(), n);
        assert!(s.width() <= 3);
        let cells = 1usize << n;
        for k in 0..=cells {
            let x = k as f64 / cells as f64;
            Tier::Tight.check(s.eval1(&[x]), x * x, "dyadic node").unwrap();
        }
        let bound = 2f64.powi(-2 * n as i32 - 2);
        for i in 0..=10_000 {
            let x = i as f64 / 10_000.0;
            let v = s.eval1(&[x]);
            Tier::Loose
                .check(v, testkit::square_interpolant(n, x), "interpolant")
                .unwrap();
            assert!((v - x * x).abs() <= bound + 1e-15);
        }
    }
}

#[test]
fn multiplication_error_bounds() {
    for eps in [0.1, 0.01] {
        let (m, _) = mult_net(eps).unwrap();
        let mut worst = 0.0f64;
        for i in 0..=60 {
            for j in 0..=60 {
                let (x, y) = (-1.0 + i as f64 / 30.0, -1.0 + j as f64 / 30.0);
                worst = worst.max((m.eval1(&[x, y]) - x * y).abs());
            }
        }
        assert!(worst <= eps, "eps {eps}: {worst}");
    }
    let mut rng = testkit::rng(4);
    for n in 3..=5 {
        let (m, cert) = multn_net(n, 0.01).unwrap();
        assert!(cert.holds());
        for _ in 0..500 {
            let x = testkit::random_point(&mut rng, n, -1.0, 1.0);
            assert!((m.eval1(&x) - testkit::product(&x)).abs() <= 0.01);
        }
    }
}

#[test]
fn polynomial_gadget() {
    let coeffs = [0.5, -1.0, 0.25, 2.0];
    let (net, report) = polynomial_net(&coeffs, 1e-3).unwrap();
    for i in 0..=200 {
        let x = -1.0 + i as f64 / 100.0;
        let p: f64 = coeffs.iter().enumerate().map(|(j, c)| c * x.powi(j as i32)).sum();
        assert!((net.eval1(&[x]) - p).abs() <= 0.05, "x = {x}: {report:?}");
    }
}
