//! Scale functions against independent quadrature of their defining integrals.

use proptest::prelude::*;
use refraction::levy_model::{ControlParams, JumpTerm, LevyModel};
use refraction::numerics::integrate;
use refraction::scale_functions::{build_w, ParisianScales, ScaleSet};

fn m1() -> LevyModel {
    LevyModel::cramer_lundberg(1.5, vec![JumpTerm { rate: 1.0, alpha: 1.0 }]).unwrap()
}

fn m3() -> LevyModel {
    LevyModel::brownian(2f64.sqrt(), 0.0).unwrap()
}

fn mixed() -> LevyModel {
    LevyModel::jump_diffusion(
        0.5,
        1.0,
        vec![JumpTerm { rate: 1.0, alpha: 1.0 }, JumpTerm { rate: 0.5, alpha: 3.0 }],
    )
    .unwrap()
}

fn two_exponentials() -> LevyModel {
    LevyModel::cramer_lundberg(
        2.0,
        vec![JumpTerm { rate: 0.7, alpha: 0.8 }, JumpTerm { rate: 0.6, alpha: 2.5 }],
    )
    .unwrap()
}

#[test]
fn laplace_transform_round_trip() {
    for model in [m1(), m3(), mixed(), two_exponentials()] {
        for q in [0.1, 1.0] {
            let w = build_w(&model, q).unwrap();
            let phi = model.phi(q).unwrap();
            let lead = 1.0 / model.psi_prime(phi);
            for theta in [phi + 0.5, phi + 1.0, phi + 2.0] {
                let y_max = 40.0 / (theta - phi);
                let body = integrate(|y| (-theta * y).exp() * w.eval(y), 0.0, y_max, 1.0, 1e-15);
                // the leading exponential dominates the tail
                let tail = lead * (-(theta - phi) * y_max).exp() / (theta - phi);
                let want = 1.0 / (model.psi(theta) - q);
                let rel = ((body + tail) - want).abs() / want;
                assert!(rel < 1e-8, "q {q} theta {theta}: rel {rel}");
            }
        }
    }
}

#[test]
fn z_qp_integral_form() {
    for model in [m1(), mixed(), two_exponentials()] {
        let (q, p) = (0.1, 0.5);
        let s = ParisianScales::new(&model, q, p).unwrap();
        let cut = 40.0 / (s.phi_pq - s.phi_q);
        for i in 0..=28 {
            let x = -2.0 + 0.25 * i as f64;
            let alt = p * integrate(
                |y| (-s.phi_pq * y).exp() * s.w(x + y),
                x.min(0.0).abs(),
                cut + x.abs(),
                0.5,
                1e-15,
            );
            let got = s.z_qp(x);
            assert!((alt - got).abs() < 1e-10 * got.max(1.0), "x {x}: {alt} vs {got}");
        }
    }
}

#[test]
fn z_qp_prime_integral_form() {
    let model = m1();
    let (q, p) = (0.1, 0.5);
    let s = ParisianScales::new(&model, q, p).unwrap();
    let cut = 40.0 / (s.phi_pq - s.phi_q);
    for x in [0.0, 0.5, 1.0, 3.0] {
        let alt = p * integrate(|y| (-s.phi_pq * y).exp() * s.w_prime(x + y), 0.0, cut, 0.5, 1e-15);
        let got = s.z_qp_prime(x);
        assert!((alt - got).abs() < 1e-10 * got.max(1.0), "x {x}: {alt} vs {got}");
    }
}

#[test]
fn w_aux_matches_quadrature() {
    let model = m1();
    let params = ControlParams::new(0.1, 0.5, 0.5);
    let set = ScaleSet::new(&model, &params).unwrap();
    for (b, x, y) in [(1.0, 2.0, 0.0), (1.0, 3.5, -0.7), (0.5, 2.0, 0.8)] {
        let lower = f64::max(b, y);
        let integral = integrate(
            |z| set.w_ref(x - z) * set.x.w_prime(z - y),
            lower,
            x,
            0.25,
            1e-15,
        );
        let want = set.x.w(x - y) + params.k * integral;
        let got = set.w_aux(b, x, y).unwrap();
        assert!((got - want).abs() < 1e-9, "b {b} x {x} y {y}: {got} vs {want}");
    }
}

#[test]
fn leading_exponential_remainder_is_completely_monotone_to_order_three() {
    for model in [m1(), mixed(), two_exponentials()] {
        let q = 0.1;
        let s = ParisianScales::new(&model, q, 0.5).unwrap();
        let lead = 1.0 / model.psi_prime(s.phi_q);
        let r = s.phi_q;
        for i in 1..=300 {
            let x = 0.05 * i as f64;
            let e = (r * x).exp();
            let f = lead * e - s.w(x);
            let f1 = lead * r * e - s.w_prime(x);
            let f2 = lead * r * r * e - s.w_second(x);
            let scale = lead * e;
            assert!(f >= -1e-12 * scale, "f({x}) = {f}");
            assert!(f1 <= 1e-12 * scale, "f'({x}) = {f1}");
            assert!(f2 >= -1e-12 * scale, "f''({x}) = {f2}");
        }
    }
}

#[test]
fn monotone_on_grids() {
    for model in [m1(), m3(), mixed()] {
        let s = ParisianScales::new(&model, 0.1, 0.5).unwrap();
        let grid: Vec<f64> = (0..=400).map(|i| -3.0 + 0.025 * i as f64).collect();
        for w in grid.windows(2) {
            assert!(s.z_qp(w[1]) >= s.z_qp(w[0]));
            if w[0] > 0.0 {
                assert!(s.w(w[1]) > s.w(w[0]));
            }
        }
        assert_eq!(s.w(-1.0), 0.0);
    }
}

#[test]
fn c_star_is_a_minimizer() {
    for model in [m1(), mixed(), two_exponentials()] {
        let s = ParisianScales::new(&model, 0.1, 0.5).unwrap();
        for d in [0.1, 1.0] {
            assert!(s.z_qp_prime(s.c_star + d) >= s.z_qp_prime(s.c_star));
        }
    }
}

proptest! {
    #[test]
    fn z_qp_prime_is_log_convex(a in 0.0f64..10.0, b in 0.0f64..10.0) {
        for model in [m1(), mixed()] {
            let s = ParisianScales::new(&model, 0.1, 0.5).unwrap();
            let mid = s.z_qp_prime(0.5 * (a + b)).ln();
            let chord = 0.5 * (s.z_qp_prime(a).ln() + s.z_qp_prime(b).ln());
            prop_assert!(mid <= chord + 1e-12);
        }
    }
}
