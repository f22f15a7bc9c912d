use nalgebra::{Matrix3, Rotation3, Vector3};
use proptest::prelude::*;
use vkrod::material::{MaterialModel, MaterialSpec, StressMode};

fn unit() -> MaterialModel {
    MaterialModel::isotropic(1.0, 1.0).unwrap()
}

fn matrix() -> impl Strategy<Value = Matrix3<f64>> {
    prop::array::uniform9(-1.0f64..1.0).prop_map(|a| Matrix3::from_row_slice(&a))
}

fn rotation() -> impl Strategy<Value = Matrix3<f64>> {
    (prop::array::uniform3(-1.0f64..1.0), 0.0f64..std::f64::consts::PI).prop_filter_map("axis", |(axis, angle)| {
        let v = Vector3::from(axis);
        (v.norm() > 1e-3).then(|| *Rotation3::new(v.normalize() * angle).matrix())
    })
}

fn lame() -> impl Strategy<Value = (f64, f64)> {
    (0.0f64..3.0, 0.1f64..3.0)
}

/// Second directional derivative of `W` at the identity by central differences.
fn fd_second_derivative(m: &MaterialModel, a: &Matrix3<f64>, d: f64) -> f64 {
    let w = |s: f64| m.energy_density(&(Matrix3::identity() + a * s)).unwrap();
    (w(d) - 2.0 * w(0.0) + w(-d)) / (d * d)
}

#[test]
fn uniaxial_stretch_energy_matches_taylor_oracle() {
    let m = unit();
    let mut a = Matrix3::zeros();
    a[(0, 0)] = 1.0;
    let f = Matrix3::identity() + a * 1e-3;
    let w = m.energy_density(&f).unwrap();
    // ½ D²W(Id)[A, A] δ², with the Hessian estimated by finite differences; the gap is O(δ³)
    let oracle = 0.5 * fd_second_derivative(&m, &a, 1e-3) * 1e-6;
    assert!((w - 1.5e-6).abs() < 1e-8, "{w}");
    assert!((w - oracle).abs() < 3.0 * 1e-9, "{w} vs {oracle}");
}

#[test]
fn quadratic_form_of_axial_unit_is_three() {
    let m = unit();
    let mut a = Matrix3::zeros();
    a[(0, 0)] = 1.0;
    let fd = fd_second_derivative(&m, &a, 1e-4);
    assert!((m.quadratic_form(&a) - 3.0).abs() < 1e-14);
    assert!((fd - 3.0).abs() < 1e-6, "{fd}");
}

#[test]
fn rotation_about_e1_is_stress_free() {
    let r = *Rotation3::from_axis_angle(&Vector3::x_axis(), 0.3).matrix();
    let m = unit();
    assert!(m.energy_density(&r).unwrap().abs() <= 1e-14);
    assert!(m.stress(&r).unwrap().amax() <= 1e-14);
    assert_eq!(m.energy_density(&Matrix3::identity()).unwrap(), 0.0);
}

#[test]
fn shear_stress_deviates_quadratically() {
    let m = unit();
    let a = Matrix3::new(0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let la = m.apply_l(&a);
    for d in [1e-2, 1e-3] {
        let err = (m.stress(&(Matrix3::identity() + a * d)).unwrap() - la * d).norm();
        assert!(err <= 10.0 * d * d, "delta {d}: {err}");
    }
}

#[test]
fn linearized_mode_matches_apply_l() {
    let m = unit().with_mode(StressMode::Linearized);
    let a = Matrix3::new(0.2, -0.4, 0.1, 0.3, 0.5, -0.2, 0.7, 0.0, -0.6);
    let s = m.stress(&(Matrix3::identity() + a)).unwrap();
    assert!((s - m.apply_l(&a)).amax() < 1e-15);
}

#[test]
fn non_finite_input_is_rejected() {
    let mut f = Matrix3::identity();
    f[(1, 2)] = f64::NAN;
    assert!(unit().energy_density(&f).is_err());
    assert!(unit().stress(&f).is_err());
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(MaterialModel::isotropic(1.0, 0.0).is_err());
    assert!(MaterialModel::isotropic(-0.5, 1.0).is_err());
    assert!(MaterialSpec::isotropic(1.0, -1.0).build().is_err());
}

#[test]
fn voigt_spec_reproduces_isotropic_model() {
    let iso = unit();
    let c = vkrod::material::isotropic_voigt(1.0, 1.0);
    let spec = MaterialSpec {
        voigt: Some(std::array::from_fn(|i| std::array::from_fn(|j| c[(i, j)]))),
        ..MaterialSpec::default()
    };
    let from_voigt = spec.build().unwrap();
    let a = Matrix3::new(0.3, 0.1, -0.2, 0.4, -0.5, 0.6, 0.0, 0.2, 0.9);
    assert!((iso.apply_l(&a) - from_voigt.apply_l(&a)).amax() < 1e-14);
    assert!((iso.quadratic_form(&a) - from_voigt.quadratic_form(&a)).abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn frame_indifference(r in rotation(), f in matrix(), (l, mu) in lame()) {
        let m = MaterialModel::isotropic(l, mu).unwrap();
        let f = Matrix3::identity() + f * 0.5;
        let w = m.energy_density(&f).unwrap();
        let wr = m.energy_density(&(r * f)).unwrap();
        prop_assert!((w - wr).abs() <= 1e-12 * w.abs().max(1e-300));
    }

    #[test]
    fn stress_times_ft_is_symmetric(f in matrix(), (l, mu) in lame()) {
        let m = MaterialModel::isotropic(l, mu).unwrap();
        let f = Matrix3::identity() + f * 0.5;
        let s = m.stress(&f).unwrap() * f.transpose();
        prop_assert!((s - s.transpose()).amax() <= 1e-12 * s.amax().max(1e-300));
    }

    #[test]
    fn quadratic_form_is_nonnegative_and_blind_to_skew(a in matrix(), (l, mu) in lame()) {
        let m = MaterialModel::isotropic(l, mu).unwrap();
        let sym = (a + a.transpose()) * 0.5;
        let skew = a - sym;
        prop_assert!(m.quadratic_form(&a) >= 0.0);
        prop_assert!(m.quadratic_form(&skew).abs() <= 1e-14);
        prop_assert!((m.apply_l(&a) - m.apply_l(&sym)).amax() <= 1e-14);
        let la = m.apply_l(&a);
        prop_assert!((la - la.transpose()).amax() <= 1e-14);
        if sym.norm() > 1e-6 {
            prop_assert!(m.quadratic_form(&a) > 0.0);
        }
    }

    #[test]
    fn quadratic_form_is_the_hessian_at_identity(a in matrix()) {
        let m = unit();
        let fd = fd_second_derivative(&m, &a, 1e-4);
        prop_assert!((fd - m.quadratic_form(&a)).abs() <= 1e-5 * (1.0 + fd.abs()));
    }

    #[test]
    fn stress_linearizes_at_first_order(a in matrix()) {
        prop_assume!(a.norm() > 0.1);
        let m = unit();
        let deltas = [1e-1, 1e-2, 1e-3, 1e-4];
        let errs: Vec<f64> = deltas
            .iter()
            .map(|&d| (m.stress(&(Matrix3::identity() + a * d)).unwrap() / d - m.apply_l(&a)).norm())
            .collect();
        let lx: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
        let ly: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let mx = lx.iter().sum::<f64>() / 4.0;
        let my = ly.iter().sum::<f64>() / 4.0;
        let slope = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        prop_assert!(slope >= 0.99, "slope {}", slope);
    }
}
