use dgml_web::{clustering_parameters_impl, error_spectrum_1d_impl, gmres_history_impl, lfa_curve_impl};

#[test]
fn clustering_curve_is_flat() {
    let p = clustering_parameters_impl();
    assert_eq!(p.len(), 4);
    let curve = lfa_curve_impl(p[0], p[1], p[2], 64).unwrap();
    assert_eq!(curve.len(), 3 * 64);
    for t in curve.chunks(3) {
        assert!((t[1] - p[3]).abs() < 1e-8 && (t[2] - p[3]).abs() < 1e-8);
    }
}

#[test]
fn spectrum_is_interleaved_and_bounded() {
    let s = error_spectrum_1d_impl(16, 8.0 / 9.0, 2.0, 0.5, false).unwrap();
    assert_eq!(s.len(), 2 * 32);
    assert!(s.chunks(2).all(|z| z[0].hypot(z[1]) < 0.34));
    let periodic = error_spectrum_1d_impl(16, 8.0 / 9.0, 2.0, 0.5, true).unwrap();
    assert_eq!(periodic.len(), 2 * 32);
}

#[test]
fn gmres_history_reaches_tolerance() {
    let p = clustering_parameters_impl();
    let h = gmres_history_impl(64, p[0], p[1], p[2], 1e-8).unwrap();
    assert_eq!(h[0], 1.0);
    assert_eq!(h.len(), 5);
    assert!(*h.last().unwrap() <= 1e-8);
}

#[test]
fn invalid_input_is_an_error() {
    assert!(lfa_curve_impl(1.5, 2.0, 0.5, 10).is_err());
    assert!(lfa_curve_impl(0.9, 2.0, 0.5, 0).is_err());
    assert!(error_spectrum_1d_impl(7, 0.9, 2.0, 0.5, false).is_err());
    assert!(error_spectrum_1d_impl(1024, 0.9, 2.0, 0.5, false).is_err());
    assert!(gmres_history_impl(16, 0.9, 2.0, 0.5, 0.0).is_err());
}
