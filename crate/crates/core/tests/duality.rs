use desitter_flow::axigraph::{frame, RadialProfile};
use desitter_flow::duality::{dual_check, dualize, embed, minkowski};
use desitter_flow::error::Error;
use desitter_flow::spaceform::WarpModel;

#[test]
fn dual_of_slice_is_slice_of_hyperbolic_space() {
    let model = WarpModel::de_sitter(2).unwrap();
    let r: f64 = 0.9;
    let p = RadialProfile::slice(model, 40, r).unwrap();
    let fr = frame(&p).unwrap();
    let dual = dualize(&embed(&p, &fr).unwrap(), &fr, p.step()).unwrap();
    // ν = cosh r e0 + sinh r ω, a hyperbolic sphere of radius r
    for (x, &radius) in dual.points.iter().zip(&dual.radius) {
        assert!((minkowski(x, x) + 1.0).abs() < 1e-14);
        assert!((radius - r).abs() < 1e-12);
    }
}

#[test]
fn identities_hold_across_dimensions() {
    for n in [2, 3, 5] {
        let model = WarpModel::de_sitter(n).unwrap();
        let p = RadialProfile::legendre(model, 200, 0.8, 0.04, 2).unwrap();
        let report = dual_check(&p).unwrap();
        assert!(report.hyperboloid < 1e-10 && report.orthogonality < 1e-10);
        assert!(report.support < 1e-6 && report.dual_support < 1e-6);
        assert!(report.speed_identity < 1e-8);
        assert!(report.metric < 1e-3 && report.involution < 1e-3, "{report:?}");
    }
}

#[test]
fn curvature_products_converge() {
    let model = WarpModel::de_sitter(2).unwrap();
    let reports: Vec<_> = [100, 200, 400]
        .iter()
        .map(|&big| dual_check(&RadialProfile::legendre(model, big, 1.0, 0.05, 3).unwrap()).unwrap())
        .collect();
    for w in reports.windows(2) {
        assert!((w[0].radial_product / w[1].radial_product).log2() > 1.8);
        assert!((w[0].angular_product / w[1].angular_product).log2() > 1.8);
        assert!((w[0].involution / w[1].involution).log2() > 1.8);
    }
}

#[test]
fn non_convex_profile_is_gated() {
    let model = WarpModel::de_sitter(2).unwrap();
    let p = RadialProfile::legendre(model, 200, 0.2, 0.05, 6).unwrap();
    let fr = frame(&p).unwrap();
    assert!(fr.min_h1 > 0.0 || fr.kappa_rad.iter().any(|&k| k < 0.0));
    assert!(fr.kappa_rad.iter().chain(&fr.kappa_ang).any(|&k| k < 0.0));
    assert!(matches!(dual_check(&p), Err(Error::NotConvex { .. })));
}
