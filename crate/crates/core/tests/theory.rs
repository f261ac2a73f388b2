use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tubehom_core::theory::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn systems_of_low_order() {
    let s1 = build_system(1).unwrap();
    assert_eq!(s1.l_plus.coeffs(), &[c(0.0, -1.0), c(1.0, 0.0)]);
    assert_eq!(s1.b, vec![PolyC::constant(c(1.0, 0.0))]);
    let s2 = build_system(2).unwrap();
    assert_eq!(s2.b[1].coeffs(), &[c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    assert!(build_system(0).is_err() && build_system(9).is_err());
    for k in 1..=MAX_ORDER {
        let s = build_system(k).unwrap();
        for (l, b) in s.b.iter().enumerate() {
            assert_eq!(b.degree(), Some(2 * l));
        }
    }
}

#[test]
fn complementing_condition_holds_up_to_order_eight() {
    for k in 1..=MAX_ORDER {
        let v = check_independence(&build_system(k).unwrap()).unwrap();
        assert!(v.passes && v.rank == k && v.orders_valid, "k={k}: {v:?}");
        assert!(v.recombination_residual < 1e-12 * 2f64.powi(2 * k as i32), "k={k}");
    }
}

#[test]
fn negative_control_fails() {
    let v = check_independence(&negative_control(2).unwrap()).unwrap();
    assert!(!v.passes);
    assert_eq!(v.rank, 1);
    assert!(v.remainders[1].iter().all(|(re, im)| *re == 0.0 && *im == 0.0));
    assert!(negative_control(1).is_err());
}

#[test]
fn polynomial_division_recombines() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let p = PolyC::new((0..9).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect());
        let d = PolyC::new((0..4).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect());
        let (q, r) = p.div_rem(&d).unwrap();
        assert!(r.degree().is_none_or(|x| x < 3));
        assert!(q.mul(&d).add(&r).sub(&p).sup() < 1e-12 * q.sup().max(1.0) * d.sup().max(1.0));
    }
    assert!(PolyC::constant(c(1.0, 0.0)).div_rem(&PolyC::zero()).is_err());
}

#[test]
fn witness_examples() {
    let s = build_system(3).unwrap();
    let one = c(1.0, 0.0);
    let zero = c(0.0, 0.0);
    let cases = [([one, zero, zero], c(1.0, 0.0)), ([zero, one, zero], c(0.0, 2.0)), ([zero, zero, c(5.0, 0.0)], c(-20.0, 0.0))];
    for (a, want) in cases {
        let w = lowest_order_witness(&s, &a).unwrap();
        assert!((c(w.value.0, w.value.1) - want).norm() < 1e-12, "{a:?}: {:?}", w.value);
        assert!(w.division_residual < 1e-12);
    }
    assert!(lowest_order_witness(&s, &[zero; 3]).is_err());
    assert!(lowest_order_witness(&s, &[one; 2]).is_err());
}

/// Q_a(i + δ) / δ^{l₀−1} tends to the witness value as δ → 0.
#[test]
fn random_witnesses_match_closed_form_and_limit() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let k = rng.random_range(1..=MAX_ORDER);
        let s = build_system(k).unwrap();
        let lead = rng.random_range(0..k);
        let a: Vec<C64> = (0..k)
            .map(|l| if l < lead { c(0.0, 0.0) } else { c(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)) })
            .collect();
        let w = lowest_order_witness(&s, &a).unwrap();
        assert!(w.error < 1e-12);
        assert_eq!(w.l0, lead + 1);
        if lead > 2 {
            continue;
        }
        let delta = c(1e-5, 0.0);
        let tau = c(0.0, 1.0) + delta;
        let q: C64 = a.iter().zip(&s.b).map(|(x, b)| x * b.eval(tau)).sum();
        let limit = q / delta.powu(lead as u32);
        let scale: f64 = a.iter().enumerate().map(|(l, x)| x.norm() * 4f64.powi(l as i32)).sum();
        assert!((limit - c(w.value.0, w.value.1)).norm() < 1e-3 * scale, "k={k} lead={lead}");
    }
}
