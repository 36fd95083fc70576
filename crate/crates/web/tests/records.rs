use xdmt_web::{component_records, curve_records, optimal_fraction_records};

#[test]
fn curves_are_flat_triples() {
    for name in ["onoff-ia", "onoff-iaa", "conv-ia", "no-ia", "iaa-fixed", "p2p22"] {
        let v = curve_records(name, 25, -1.0).unwrap();
        assert_eq!(v.len(), 75, "{name}");
        let last = &v[72..];
        assert!(last[2].abs() < 1e-12, "{name} ends at d = {}", last[2]);
    }
    let p2p = curve_records("p2p22", 3, -1.0).unwrap();
    assert_eq!(p2p, vec![0.0, 0.0, 4.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0]);
}

#[test]
fn fixed_fraction_is_respected() {
    let v = curve_records("onoff-iaa", 10, 0.5).unwrap();
    assert!(v.chunks(3).all(|p| p[1] == 0.5));
    assert!(curve_records("conv-ia", 10, 0.5).is_err());
    assert!(curve_records("onoff-ia", 10, 1.5).is_err());
    assert!(curve_records("bogus", 10, -1.0).is_err());
}

#[test]
fn components_bound_the_diversity() {
    let v = component_records("onoff-ia", 1.0, 21).unwrap();
    assert_eq!(v.len(), 6 * 21);
    for row in v.chunks(6) {
        let floor = row[1..5].iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(row[5] <= floor.max(0.0) + 1e-12);
    }
    assert!(v[2].is_infinite());
    assert!(component_records("p2p22", 1.0, 5).is_err());
}

#[test]
fn optimal_fraction_curve_starts_at_four() {
    let v = optimal_fraction_records("onoff-iaa", 101).unwrap();
    assert_eq!(&v[..3], &[0.0, 0.0, 4.0]);
    assert!(v.chunks(3).all(|p| (0.0..=1.0).contains(&p[1])));
    assert!(optimal_fraction_records("no-ia", 10).is_err());
}
