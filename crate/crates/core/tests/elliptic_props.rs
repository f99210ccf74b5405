use std::f64::consts::PI;

use flotation::elliptic::{
    cubic_roots, half_periods, EllipticError, EllipticInvariants, WeierstrassP,
};
use num_complex::Complex64;
use proptest::prelude::*;

/// `z⁻² + Σ' ((z − w)⁻² − w⁻²)` over `w = 2mω₁ + 2nω₃`, `|m|, |n| ≤ size`.
fn lattice_sum(z: Complex64, w1: Complex64, w3: Complex64, size: i64) -> Complex64 {
    let mut s = (z * z).inv();
    for m in -size..=size {
        for n in -size..=size {
            if m == 0 && n == 0 {
                continue;
            }
            let w = w1 * (2 * m) as f64 + w3 * (2 * n) as f64;
            s += ((z - w) * (z - w)).inv() - (w * w).inv();
        }
    }
    s
}

/// Symmetric truncation leaves a tail in even powers of `1/size`; two
/// Richardson steps remove the `size⁻²` and `size⁻⁴` terms.
fn lattice_oracle(z: Complex64, w1: Complex64, w3: Complex64) -> Complex64 {
    let s: Vec<Complex64> = [40, 80, 160]
        .iter()
        .map(|&n| lattice_sum(z, w1, w3, n))
        .collect();
    let r1 = (4.0 * s[1] - s[0]) / 3.0;
    let r2 = (4.0 * s[2] - s[1]) / 3.0;
    (16.0 * r2 - r1) / 15.0
}

#[test]
fn agrees_with_lattice_sums() {
    // the last lattice has a period shorter than 2ω₁, 2ω₃ and 2ω₁ ± 2ω₃
    let cases = [
        (1.0, 0.0),
        (0.0, 1.0 / 16.0),
        (4.0, 0.0),
        (2.0, -0.5),
        (-3.0, 1.0),
        (2.418, -0.7437),
    ];
    let mut count = 0;
    for (g2, g3) in cases {
        let wp = WeierstrassP::new(EllipticInvariants::new(g2, g3)).unwrap();
        let l = *wp.lattice();
        for (a, b) in [(0.31, 0.17), (0.73, 0.41), (0.12, 0.88), (0.55, 0.62)] {
            let z = l.omega1 * a + l.omega3 * b;
            let got = wp.wp(z).unwrap();
            let want = lattice_oracle(z, l.omega1, l.omega3);
            assert!(
                (got - want).norm() <= 1e-8 * (1.0 + want.norm()),
                "({g2}, {g3}) at {z}: {got} vs {want}"
            );
            count += 1;
        }
    }
    assert_eq!(count, 24);
}

/// `ω₁` by `t = e₁ + s²` and then `s = tan θ` on the real half-period
/// integral; the trapezoid rule is spectrally accurate here.
fn quadrature_half_period(e: [f64; 3]) -> f64 {
    let (a, b) = (e[0] - e[1], e[0] - e[2]);
    let n = 400;
    let h = 0.5 * PI / n as f64;
    let f = |t: f64| {
        let (s, c) = t.sin_cos();
        1.0 / ((s * s + a * c * c) * (s * s + b * c * c)).sqrt()
    };
    (1..n).map(|k| f(k as f64 * h)).sum::<f64>() * h + 0.5 * h * (f(0.0) + f(0.5 * PI))
}

#[test]
fn real_half_periods_match_quadrature() {
    for (g2, g3) in [(1.0, 0.0), (4.0, 0.0), (3.0, 0.5), (7.0, -1.0), (12.0, 4.0)] {
        let inv = EllipticInvariants::new(g2, g3);
        assert!(inv.discriminant() > 0.0);
        let e = cubic_roots(&inv).map(|r| r.re);
        let l = half_periods(&inv).unwrap();
        assert!(
            (l.omega1.re - quadrature_half_period(e)).abs() <= 1e-12,
            "({g2}, {g3})"
        );
        assert_eq!(l.omega1.im, 0.0);
    }
    // Γ(1/4)² / (4√π) for the lemniscatic lattice
    let l = half_periods(&EllipticInvariants::new(1.0, 0.0)).unwrap();
    assert!((l.omega1.re - 1.854_074_677_301_371_9).abs() < 1e-14);
    let l = half_periods(&EllipticInvariants::new(4.0, 0.0)).unwrap();
    assert!((l.omega1.re - 1.311_028_777_146_059_9).abs() < 1e-14);
}

#[test]
fn lattice_points_are_poles() {
    for (g2, g3) in [(1.0, 0.0), (0.0, 1.0 / 16.0), (-2.0, 0.5)] {
        let wp = WeierstrassP::new(EllipticInvariants::new(g2, g3)).unwrap();
        let l = *wp.lattice();
        for (m, n) in [(0, 0), (1, 0), (0, 1), (-1, 1), (2, -3)] {
            let w = l.omega1 * (2 * m) as f64 + l.omega3 * (2 * n) as f64;
            assert!(
                matches!(wp.wp(w), Err(EllipticError::Pole { .. })),
                "({g2}, {g3}) {m} {n}"
            );
        }
    }
}

fn invariants() -> impl Strategy<Value = (f64, f64)> {
    prop_oneof![
        Just((1.0, 0.0)),
        Just((0.0, 1.0 / 16.0)),
        (-5.0f64..5.0, -2.0f64..2.0).prop_filter("non-degenerate", |&(g2, g3)| {
            (g2 * g2 * g2 - 27.0 * g3 * g3).abs() > 1e-3
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn defining_equation_residual((g2, g3) in invariants(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let wp = WeierstrassP::new(EllipticInvariants::new(g2, g3)).unwrap();
        let l = *wp.lattice();
        let z = l.omega1 * (2.0 * a) + l.omega3 * (2.0 * b);
        prop_assume!((z - l.nearest_point(z)).norm() > 1e-3 * l.shortest_period());
        let p = wp.wp(z).unwrap();
        let r = wp.residual(z).unwrap().norm();
        prop_assert!(r <= 1e-10 * (1.0 + p.norm().powi(3)), "{r} at {z}");
    }

    #[test]
    fn periodic_and_even((g2, g3) in invariants(), a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let wp = WeierstrassP::new(EllipticInvariants::new(g2, g3)).unwrap();
        let l = *wp.lattice();
        let z = l.omega1 * a + l.omega3 * b;
        prop_assume!((z - l.nearest_point(z)).norm() > 0.05 * l.shortest_period());
        let p = wp.wp(z).unwrap();
        let scale = 1.0 + p.norm();
        prop_assert!((wp.wp(z + l.omega1 * 2.0).unwrap() - p).norm() <= 1e-10 * scale);
        prop_assert!((wp.wp(z + l.omega3 * 2.0).unwrap() - p).norm() <= 1e-10 * scale);
        prop_assert!((wp.wp(-z).unwrap() - p).norm() <= 1e-12 * scale);
        let dp = wp.wp_prime(z).unwrap();
        prop_assert!((wp.wp_prime(-z).unwrap() + dp).norm() <= 1e-10 * (1.0 + dp.norm()));
    }

    #[test]
    fn derivative_matches_difference_quotient((g2, g3) in invariants(), a in 0.1f64..0.9, b in 0.1f64..0.9) {
        let wp = WeierstrassP::new(EllipticInvariants::new(g2, g3)).unwrap();
        let l = *wp.lattice();
        let z = l.omega1 * a + l.omega3 * b;
        let h = 1e-4;
        let fd = (wp.wp(z + h).unwrap() - wp.wp(z - h).unwrap()) / (2.0 * h);
        let dp = wp.wp_prime(z).unwrap();
        prop_assert!((fd - dp).norm() <= 1e-6 * (1.0 + dp.norm()));
    }

    #[test]
    fn half_periods_hit_the_roots((g2, g3) in invariants()) {
        let wp = WeierstrassP::new(EllipticInvariants::new(g2, g3)).unwrap();
        let l = *wp.lattice();
        let e = l.e_roots;
        for (z, root) in [(l.omega1, e[0]), (l.omega1 + l.omega3, e[1]), (l.omega3, e[2])] {
            let p = wp.wp(z).unwrap();
            prop_assert!((p - root).norm() <= 1e-10 * (1.0 + root.norm()), "{p} vs {root}");
            prop_assert!(wp.wp_prime(z).unwrap().norm() <= 1e-6 * (1.0 + root.norm()));
        }
        let mut sorted = cubic_roots(&EllipticInvariants::new(g2, g3)).to_vec();
        let mut mine = e.to_vec();
        let key = |z: &Complex64| (z.re, z.im);
        sorted.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        mine.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        for (a, b) in sorted.iter().zip(&mine) {
            prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn zero_is_a_zero((g2, g3) in invariants()) {
        let wp = WeierstrassP::new(EllipticInvariants::new(g2, g3)).unwrap();
        let a = wp.zero().unwrap().a;
        prop_assert!(wp.wp(a).unwrap().norm() <= 1e-10);
    }
}
