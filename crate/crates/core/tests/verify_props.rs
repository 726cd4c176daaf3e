use sigmak::solution::{derive_constants, eval_jet, extend};
use sigmak::verify::{
    fd_hessian, forward_differences, nonpoly_witness, residual_scan, split_indicator, uniform_draw,
    SampleBox,
};

#[test]
fn scan_is_deterministic_and_independent_of_thread_count() {
    let p = extend(&derive_constants(3).unwrap(), 1);
    let b = SampleBox::standard(600, 42);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let r = pool.install(|| residual_scan(&p, &b)).unwrap();
        serde_json::to_string(&r).unwrap()
    };
    let one = run(1);
    assert_eq!(one, run(1));
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

#[test]
fn samples_stay_inside_the_box() {
    let p = extend(&derive_constants(5).unwrap(), 2);
    let b = SampleBox {
        x_radius: 1.5,
        t_range: (-0.5, 3.0),
        w_radius: 0.25,
        count: 500,
        seed: 9,
    };
    for i in 0..b.count {
        let pt = b.point(&p, i);
        assert!(pt.x.iter().all(|x| x.abs() <= 1.5));
        assert!((-0.5..=3.0).contains(&pt.t));
        assert!(pt.w.iter().all(|w| w.abs() <= 0.25));
    }
    let r = residual_scan(&p, &b).unwrap();
    assert!(r.passed(1e-9), "{r:?}");
}

#[test]
fn draws_are_uniform_enough() {
    let n = 20_000u64;
    let mean = (0..n).map(|c| uniform_draw(5, c)).sum::<f64>() / n as f64;
    assert!((mean - 0.5).abs() < 0.01);
    assert!((0..n).all(|c| (0.0..1.0).contains(&uniform_draw(5, c))));
}

#[test]
fn invalid_boxes_are_rejected() {
    let p = derive_constants(5).unwrap();
    let mut b = SampleBox::standard(10, 0);
    b.t_range = (1.0, 1.0);
    assert!(matches!(
        residual_scan(&p, &b),
        Err(sigmak::Error::Domain(_))
    ));
    b.t_range = (-800.0, 0.0);
    assert!(matches!(
        residual_scan(&p, &b),
        Err(sigmak::Error::Range(_))
    ));
    b = SampleBox::standard(0, 0);
    assert!(residual_scan(&p, &b).is_err());
}

#[test]
fn finite_differences_track_the_closed_form() {
    let p = extend(&derive_constants(7).unwrap(), 1);
    let b = SampleBox::standard(20, 3);
    for i in 0..b.count {
        let pt = b.point(&p, i);
        let exact = eval_jet(&p, &pt).unwrap().hessian;
        let fd = fd_hessian(&p, &pt, 1e-5).unwrap();
        for (e, f) in exact.entries().iter().zip(fd.entries()) {
            assert!((e - f).abs() <= 1e-4 * (1.0 + e.abs()), "{e} vs {f}");
        }
    }
}

#[test]
fn witness_is_nonzero_and_polynomials_are_annihilated() {
    for n in [3, 5, 7] {
        let w = nonpoly_witness(&derive_constants(n).unwrap(), 20).unwrap();
        assert_eq!(w.scaled.len(), 20);
        assert!(
            w.scaled.iter().all(|s| s.abs() > 1e-6),
            "n={n}: {:?}",
            w.scaled
        );
    }
    let cubic = forward_differences(|t| Ok(t * t * t - 2.0 * t), 6).unwrap();
    assert_eq!(cubic.differences[1], 6.0);
    assert!(cubic.differences[2..].iter().all(|&d| d == 0.0));
}

#[test]
fn split_indicator_sees_the_x_t_coupling() {
    let p = extend(&derive_constants(3).unwrap(), 1);
    let b = SampleBox::standard(1, 1);
    let s = split_indicator(&p, &b.point(&p, 0)).unwrap();
    assert!(s.get(0, 2) > 0.0 && s.get(1, 2) > 0.0);
    assert_eq!(s.get(0, 1), 0.0);
    assert_eq!(s.get(3, 0), 0.0);
}
