use proptest::prelude::*;
use relpot::envelopes::*;
use relpot::kernels::Point;
use relpot::special_fns::bessel_k;
use relpot::subordinator::ProcessParams;

fn p(alpha: f64, d: usize) -> ProcessParams {
    ProcessParams::new(alpha, 1.0, d).unwrap()
}

#[test]
fn worked_values() {
    let v = env_green1(&Point::on_axis(3, 0.1), &Point::on_axis(3, 0.3), &p(1.0, 3)).unwrap();
    let expect = bessel_k(1.0, 0.2).unwrap() / 0.2 * 0.5f64.sqrt();
    assert!((v / expect - 1.0).abs() < 1e-14);

    // Additive term of the half-line envelope: 4 for x∧y = 4, 0.5 for x∧y = 0.25.
    let pa = p(1.0, 1);
    let g1 = env_green1(&Point::from(4.0), &Point::from(6.0), &pa).unwrap();
    assert!((env_green_halfline(4.0, 6.0, &pa).unwrap() - g1 - 4.0).abs() < 1e-14);
    let g1 = env_green1(&Point::from(0.25), &Point::from(3.0), &pa).unwrap();
    assert!((env_green_halfline(0.25, 3.0, &pa).unwrap() - g1 - 0.5).abs() < 1e-14);
    assert!((env_green_halfline_piecewise(0.09, 2.0, &pa).unwrap() - 0.3).abs() < 1e-14);

    assert_eq!(env_exit_interval(1.0, 2.0, &pa).unwrap(), 1.0);
    assert_eq!(env_exit_ball(&Point::new(vec![0.0, 0.0]), 1.0, &p(1.0, 2)).unwrap(), 1.0);
    let v = env_exit_ball(&Point::new(vec![8.99, 0.0]), 9.0, &p(1.0, 2)).unwrap();
    assert!((v - 0.9).abs() < 1e-9);
    assert_eq!(env_escape_prob(4.0, 8.0, &p(0.5, 1)).unwrap(), 0.5);

    let far = env_green_halfspace(&Point::new(vec![0.0, 0.0, 10.0]), &Point::new(vec![5.0, 0.0, 10.0]), &p(1.0, 3)).unwrap();
    assert!((far - 0.2).abs() < 1e-15);
    let near = env_green_halfspace(&Point::new(vec![0.0, 0.0, 0.25]), &Point::new(vec![1.0, 0.0, 0.25]), &p(1.0, 3)).unwrap();
    assert!((near - 0.5).abs() < 1e-15);
    let two = env_green_halfspace(&Point::new(vec![0.0, 1.0]), &Point::new(vec![10.0, 1.0]), &p(1.0, 2)).unwrap();
    assert!((two - 0.039_22).abs() < 1e-5);

    let v = env_green_interval(0.25, 7.9, 8.0, &pa).unwrap();
    assert!((v - 0.5 * 0.1f64.sqrt() / 8.0).abs() < 1e-15);
    assert!((v - 0.019_76).abs() < 1e-5);

    assert!((env_green_stable_interval(1.0, 2.0, 4.0, &pa).unwrap() - 0.881_4).abs() < 1e-4);
    assert_eq!(env_green_stable_interval(1.0, 2.0, 4.0, &p(0.5, 1)).unwrap(), 1.0);
    assert!((env_green_stable_interval(2.0, 2.0, 4.0, &p(1.5, 1)).unwrap() - 2f64.sqrt()).abs() < 1e-14);
}

#[test]
fn interval_reduces_to_halfline_for_large_r() {
    for &a in &[0.5, 1.0, 1.5] {
        let pa = p(a, 1);
        for &(x, y) in &[(0.5, 1.2), (2.0, 2.7), (0.3, 9.0), (4.0, 10.0)] {
            let iv = env_green_interval(x, y, 1e4, &pa).unwrap();
            let hl = env_green_halfline_piecewise(x, y, &pa).unwrap();
            assert!((iv / hl - 1.0).abs() < 0.05, "alpha={a} ({x},{y}): {iv} vs {hl}");
        }
    }
}

#[test]
fn halfspace_seam_factor_is_bounded() {
    let mut worst = 1.0f64;
    for d in [2usize, 3] {
        for &a in &[0.5, 1.0, 1.5] {
            for &xd in &[0.1f64, 1.0, 3.0, 10.0] {
                for &yd in &[0.2f64, 2.0, 10.0] {
                    let h = (9.0 - (xd - yd) * (xd - yd)).max(0.0).sqrt();
                    let x = Point::with_offset(d, 0.0, xd);
                    let inner = Point::with_offset(d, h * (1.0 - 1e-9), yd);
                    let outer = Point::with_offset(d, h * (1.0 + 1e-9) + 1e-9, yd);
                    if h == 0.0 {
                        continue;
                    }
                    let a1 = env_green_halfspace(&x, &inner, &p(a, d)).unwrap();
                    let a2 = env_green_halfspace(&x, &outer, &p(a, d)).unwrap();
                    worst = worst.max(a1 / a2).max(a2 / a1);
                }
            }
        }
    }
    eprintln!("largest branch ratio on the |x-y| = 3 seam: {worst:.3}");
    assert!(worst < 100.0);
}

#[test]
fn registry_regimes() {
    let tail = band("tail").unwrap();
    let pa = p(1.0, 1);
    assert!(tail.in_regime(&EnvInput::point(Point::from(1.0)).with_t(2.0), &pa));
    assert!(!tail.in_regime(&EnvInput::point(Point::from(1.0)).with_t(0.5), &pa));
    let hs = band("halfspace-green").unwrap();
    let x = Point::new(vec![0.0, 1.0]);
    assert_eq!(hs.branch(&EnvInput::pair(x.clone(), Point::new(vec![5.0, 1.0])), &p(1.0, 2)), Some("far"));
    assert_eq!(hs.branch(&EnvInput::pair(x.clone(), Point::new(vec![1.0, 1.0])), &p(1.0, 2)), Some("near"));
    assert!(hs.eval(&EnvInput::pair(x.clone(), x), &p(1.0, 2)).is_err());
    assert_eq!(bands().len(), 9);
}

proptest! {
    #[test]
    fn tail_monotone(x in 0.01f64..100.0, t1 in 1.0f64..100.0, dt in 0.0f64..100.0, a in 0.05f64..1.95) {
        let pa = p(a, 1);
        let v1 = env_tail_halfspace(x, t1, &pa).unwrap();
        let v2 = env_tail_halfspace(x, t1 + dt, &pa).unwrap();
        prop_assert!(v2 <= v1 && v1 > 0.0 && v1 <= 1.0);
        prop_assert!(env_tail_halfspace(x * 1.5, t1, &pa).unwrap() >= v1);
    }

    #[test]
    fn exit_interval_symmetric(f in 0.001f64..0.999, r in 0.1f64..100.0, a in 0.05f64..1.95) {
        let pa = p(a, 1);
        let x = f * r;
        let v1 = env_exit_interval(x, r, &pa).unwrap();
        let v2 = env_exit_interval(r - x, r, &pa).unwrap();
        prop_assert!((v1 / v2 - 1.0).abs() < 1e-12 && v1 > 0.0);
    }

    #[test]
    fn escape_monotone(f in 0.001f64..0.99, g in 0.0f64..1.0, r in 0.1f64..100.0, a in 0.05f64..1.95) {
        let pa = p(a, 1);
        let x1 = f * r;
        let x2 = x1 + g * (r - x1) * 0.999;
        let e1 = env_escape_prob(x1, r, &pa).unwrap();
        prop_assert!(e1 > 0.0 && e1 <= 1.0);
        prop_assert!(env_escape_prob(x2, r, &pa).unwrap() >= e1);
    }

    #[test]
    fn interval_symmetry(f in 0.001f64..0.999, g in 0.001f64..0.999, r in 4.0f64..100.0, a in 0.05f64..1.95) {
        let pa = p(a, 1);
        let (x, y) = (f * r, g * r);
        prop_assume!((x - y).abs() > 1e-6);
        let v1 = env_green_interval(x, y, r, &pa).unwrap();
        let v2 = env_green_interval(r - y, r - x, r, &pa).unwrap();
        prop_assert!(v1 > 0.0 && (v1 / v2 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn envelopes_positive_in_regime(xd in 0.01f64..50.0, yd in 0.01f64..50.0, h in 0.0f64..20.0, a in 0.05f64..1.95, d in 1usize..4) {
        let pa = p(a, d);
        let x = Point::with_offset(d, 0.0, xd);
        let y = Point::with_offset(d, h, yd);
        prop_assume!(x.dist(&y) > 1e-6);
        prop_assert!(env_green1(&x, &y, &pa).unwrap() > 0.0);
        if d >= 2 {
            prop_assert!(env_green_halfspace(&x, &y, &pa).unwrap() > 0.0);
        } else {
            prop_assert!(env_green_halfline(xd, yd, &pa).unwrap() > 0.0);
        }
    }
}
