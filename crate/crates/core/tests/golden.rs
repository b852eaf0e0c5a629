//! Frozen expansions from an exact rational computation (`data/q_golden.py`).

use laminar::resolvent::q_sequence;
use laminar::{LaminarMedium, MultiSeries};

const Q4: &str = include_str!("data/q4_golden.txt");

fn medium() -> LaminarMedium {
    LaminarMedium::new(vec![1.0, 0.25, 2.25, 1.0], vec![0.0, 0.8, 1.9]).unwrap()
}

#[test]
fn q4_matches_rational_expansion() {
    let golden = MultiSeries::parse(Q4).unwrap();
    let q = q_sequence(&medium().reflection_profile(), golden.degree_cap())
        .unwrap()
        .pop()
        .unwrap();
    assert!(q.is_exact_below_cap());
    assert_eq!(q.len(), golden.len());
    for (j, c) in golden.terms() {
        let got = q.coefficient(&j);
        assert!((got - c).norm() <= 1e-14 * c.norm().max(1e-3), "{j:?}: {got} vs {c}");
    }
}

#[test]
fn q4_leading_coefficients() {
    let q = q_sequence(&medium().reflection_profile(), 12).unwrap().pop().unwrap();
    let re = |j: &[u32]| q.coefficient(j).re;
    assert!((re(&[0, 0]) - 0.2).abs() < 1e-14);
    assert!((re(&[0, 1]) + 0.48).abs() < 1e-14);
    assert!((re(&[1, 1]) - 0.24).abs() < 1e-14);
    assert!((re(&[2, 1]) - 0.04).abs() < 1e-14);
}

#[test]
fn dump_round_trip_is_byte_stable() {
    let golden = MultiSeries::parse(Q4).unwrap();
    let once = golden.dump();
    let twice = MultiSeries::parse(&once).unwrap().dump();
    assert_eq!(once, twice);
}
