use approx::assert_relative_eq;
use pidelay::closed_loop::{poly_eval, poly_mul, MAX_ORDER};
use pidelay::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn delayed_polynomial_is_controller_times_plant_numerator() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let num: Vec<f64> = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut den = vec![1.0];
        for _ in 0..2 {
            den = poly_mul(&den, &[1.0, rng.gen_range(0.1..3.0)]);
        }
        let pid = PidParams::new(rng.gen_range(0.0..2.0), rng.gen_range(0.01..1.0), rng.gen_range(0.0..0.5)).unwrap();
        let system = build_closed_loop(&pid, &PlantModel::new(num.clone(), den.clone()).unwrap()).unwrap();
        for _ in 0..10 {
            let s: f64 = rng.gen_range(-3.0..3.0);
            let want = poly_eval(&pid.numerator(), s) * poly_eval(&num, s);
            let got = poly_eval(system.b(), s);
            assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0));
            assert_relative_eq!(poly_eval(system.a(), s), s * poly_eval(&den, s), max_relative = 1e-12, epsilon = 1e-12);
        }
        assert_eq!(system.b(), system.c());
    }
}

#[test]
fn roots_solve_the_characteristic_polynomial() {
    // a_1..a_4 of r (1 + 0.5 r)(1 + 2 r)(1 + 4 r)
    let a = poly_mul(&[1.0, 0.5], &poly_mul(&[1.0, 2.0], &[1.0, 4.0]));
    let roots = characteristic_roots(&a).unwrap();
    assert_eq!(roots.len(), 4);
    for (r, want) in roots.iter().zip([-2.0, -0.5, -0.25, 0.0]) {
        assert_relative_eq!(*r, want, epsilon = 1e-12);
    }
}

#[test]
fn null_root_comes_first() {
    let system = build_closed_loop(&PidParams::new(1.0, 0.5, 0.0).unwrap(), &PlantModel::first_order(2.0, 0.5).unwrap()).unwrap();
    assert_eq!(system.roots(), &[0.0, -2.0]);
    assert_eq!(system.order(), 2);
    assert_eq!(system.delayed_order(), 1);
    assert!(!system.is_neutral());
}

#[test]
fn derivative_gain_on_first_order_plant_is_neutral() {
    let system = build_closed_loop(&PidParams::new(1.0, 0.5, 0.2).unwrap(), &PlantModel::first_order(1.0, 1.0).unwrap()).unwrap();
    assert!(system.is_neutral());
    assert_eq!(system.b(), &[0.5, 1.0, 0.2]);
}

#[test]
fn rejections() {
    let plant = PlantModel::first_order(1.0, 1.0).unwrap();
    assert!(PidParams::new(0.0, 0.0, 0.0).is_err());
    assert!(PidParams::new(f64::NAN, 1.0, 0.0).is_err());
    assert!(PlantModel::new(vec![1.0, 1.0, 1.0], vec![1.0, 1.0]).is_err());
    assert!(PlantModel::new(vec![1.0], vec![1.0, 0.0]).is_err());
    // complex plant poles
    let oscillatory = PlantModel::new(vec![1.0], vec![1.0, 0.2, 1.0]).unwrap();
    assert!(matches!(
        build_closed_loop(&PidParams::new(1.0, 0.1, 0.0).unwrap(), &oscillatory),
        Err(Error::RootsNotRealSimple { .. })
    ));
    // repeated plant poles
    let repeated = PlantModel::new(vec![1.0], poly_mul(&[1.0, 1.0], &[1.0, 1.0])).unwrap();
    assert!(build_closed_loop(&PidParams::new(1.0, 0.1, 0.0).unwrap(), &repeated).is_err());
    // order limit
    let mut den = vec![1.0];
    for h in 0..MAX_ORDER {
        den = poly_mul(&den, &[1.0, 0.1 + 0.3 * h as f64]);
    }
    let big = PlantModel::new(vec![1.0], den).unwrap();
    assert!(matches!(
        build_closed_loop(&PidParams::new(1.0, 0.1, 0.0).unwrap(), &big),
        Err(Error::OrderOverflow { .. })
    ));
    assert!(plant.normalized(0.0).is_err());
}

#[test]
fn normalization_rescales_time() {
    let plant = PlantModel::new(vec![2.0, 1.0], vec![1.0, 3.0, 2.0]).unwrap().normalized(0.5).unwrap();
    assert_eq!(plant.numerator(), &[2.0, 2.0]);
    assert_eq!(plant.denominator(), &[1.0, 6.0, 8.0]);
    let pid = PidParams::new(1.5, 0.5, 1.0).unwrap().normalized(0.5).unwrap();
    assert_eq!(pid.numerator(), [0.25, 1.5, 2.0]);
}
