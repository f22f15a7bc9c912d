use nalgebra::{DMatrix, DVector, Matrix4};
use vkrod::cross_section::EffectiveStiffness;
use vkrod::profile::Profile;
use vkrod::rod::{RodError, RodMesh1D, RodState, RodSystem};

const EI: f64 = 0.2;

fn diagonal(twist: f64) -> EffectiveStiffness {
    EffectiveStiffness::diagonal(2.5, EI, EI, twist).unwrap()
}

fn system(n: usize, kirchhoff: bool) -> RodSystem {
    RodSystem::new(RodMesh1D::new(1.0, n).unwrap(), &diagonal(0.15), kirchhoff).unwrap()
}

fn poly(coeffs: &[f64]) -> Profile {
    Profile::Polynomial { coeffs: coeffs.to_vec() }
}

/// x²(1−x)²
fn bump() -> Profile {
    poly(&[0.0, 0.0, 1.0, -2.0, 1.0])
}

/// Textbook cubic-Hermite beam element matrices in (v₀, θ₀, v₁, θ₁) order.
fn beam_element(h: f64) -> (Matrix4<f64>, Matrix4<f64>) {
    let k = Matrix4::new(
        12.0, 6.0 * h, -12.0, 6.0 * h,
        6.0 * h, 4.0 * h * h, -6.0 * h, 2.0 * h * h,
        -12.0, -6.0 * h, 12.0, -6.0 * h,
        6.0 * h, 2.0 * h * h, -6.0 * h, 4.0 * h * h,
    ) / (h * h * h);
    let m = Matrix4::new(
        156.0, 22.0 * h, 54.0, -13.0 * h,
        22.0 * h, 4.0 * h * h, 13.0 * h, -3.0 * h * h,
        54.0, 13.0 * h, 156.0, -22.0 * h,
        -13.0 * h, -3.0 * h * h, -22.0 * h, 4.0 * h * h,
    ) * (h / 420.0);
    (k, m)
}

fn assemble(mesh: &RodMesh1D, local: &Matrix4<f64>) -> DMatrix<f64> {
    let m = mesh.hermite_dim();
    let mut out = DMatrix::zeros(m, m);
    for e in 0..mesh.n_elem() {
        let dofs = mesh.hermite_dofs(e);
        for (a, da) in dofs.iter().enumerate() {
            for (b, db) in dofs.iter().enumerate() {
                if let (Some(i), Some(j)) = (da, db) {
                    out[(*i, *j)] += local[(a, b)];
                }
            }
        }
    }
    out
}

fn state_from(sys: &RodSystem, v2: Vec<f64>, v3: Vec<f64>) -> RodState {
    let st = sys.solve_static(&v2, &v3, None).unwrap();
    RodState {
        u: st.u,
        v2,
        v3,
        w: st.w,
        ..RodState::zeros(sys.mesh())
    }
}

#[test]
fn mesh_dimensions_and_nodes() {
    let mesh = RodMesh1D::new(2.0, 4).unwrap();
    assert_eq!(mesh.nodes(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    assert_eq!(mesh.h(), 0.5);
    assert_eq!(mesh.hermite_dim(), 6);
    assert_eq!(mesh.p2_dim(), 7);
    assert!(matches!(RodMesh1D::new(0.0, 4), Err(RodError::InvalidLength(_))));
    assert!(matches!(RodMesh1D::new(1.0, 1), Err(RodError::TooFewElements(1))));
}

#[test]
fn hermite_interpolation_is_exact_for_cubics() {
    let mesh = RodMesh1D::new(1.0, 3).unwrap();
    // boundary slopes are dropped, so only the middle element reproduces a general cubic
    let cubic = poly(&[0.3, -1.0, 2.0, -1.5]);
    let c = mesh.hermite_interpolate(&cubic);
    for x in [0.34, 0.5, 0.65] {
        assert!((mesh.hermite_eval(&c, 0, x) - cubic.value(x)).abs() < 1e-14);
        assert!((mesh.hermite_eval(&c, 2, x) - cubic.derivative(2, x)).abs() < 1e-12);
    }
    let quad = poly(&[0.0, 1.0, -1.0]);
    let p = mesh.p2_interpolate(&quad);
    for x in [0.2, 0.5, 0.77] {
        assert!((mesh.p2_eval(&p, 0, x) - quad.value(x)).abs() < 1e-15);
        assert!((mesh.p2_eval(&p, 1, x) - quad.derivative(1, x)).abs() < 1e-14);
    }
}

#[test]
fn linear_stiffness_and_mass_match_beam_elements() {
    for kirchhoff in [false, true] {
        let sys = system(5, kirchhoff);
        let mesh = sys.mesh();
        let (k, m) = beam_element(mesh.h());
        let k = assemble(mesh, &(k * EI));
        let m = assemble(mesh, &m);
        assert!((sys.mass() - &m).amax() < 1e-14);
        let hred = sys
            .reduced_hessian(&vec![0.0; sys.dim_bending()], &vec![0.0; sys.dim_static()])
            .unwrap();
        let n = mesh.hermite_dim();
        assert!((hred.view((0, 0), (n, n)) - &k).amax() < 1e-10 * k.amax());
        assert!((hred.view((n, n), (n, n)) - &k).amax() < 1e-10 * k.amax());
        assert!(hred.view((0, n), (n, n)).amax() < 1e-12);
    }
}

#[test]
fn uniform_load_gives_exact_nodal_deflection() {
    let sys = system(4, false);
    let mesh = sys.mesh();
    let n = mesh.hermite_dim();
    let f = sys.load_value(&Profile::Constant { value: 1.0 });
    let hred = sys.reduced_hessian(&vec![0.0; 2 * n], &vec![0.0; sys.dim_static()]).unwrap();
    let k = hred.view((0, 0), (n, n)).into_owned();
    let v2 = k.lu().solve(&DVector::from_vec(f.clone())).unwrap();
    // clamped-clamped beam under unit load: v(L/2) = L⁴ / (384 EI)
    let mid = mesh.hermite_eval(v2.as_slice(), 0, 0.5);
    assert!((mid - 1.0 / (384.0 * EI)).abs() < 1e-14, "{mid}");

    let st = state_from(&sys, v2.as_slice().to_vec(), vec![0.0; n]);
    let load = [f, vec![0.0; n]].concat();
    let r = sys.bending_residual(&st, Some(&load)).unwrap();
    assert!(r.iter().all(|x| x.abs() < 1e-13), "{r:?}");
}

#[test]
fn mean_axial_force_of_the_bump() {
    let sys = system(16, true);
    let mesh = sys.mesh();
    let v2 = mesh.hermite_interpolate(&bump());
    let st = sys.solve_static(&v2, &vec![0.0; v2.len()], None).unwrap();
    // independent quadrature of (E_Y/L)∫½ v₂′² for the discrete field: composite Simpson, fine grid
    let k = 4000;
    let hq = 1.0 / k as f64;
    let mut integral = 0.0;
    for i in 0..=k {
        let x = i as f64 * hq;
        let weight = if i == 0 || i == k { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        integral += weight * mesh.hermite_eval(&v2, 1, x).powi(2);
    }
    let discrete = 2.5 * 0.5 * integral * hq / 3.0;
    for n in &st.axial_force {
        assert!((n - discrete).abs() < 1e-10, "{n} vs {discrete}");
    }
    let continuum = 2.5 / 105.0;
    assert!((st.mean_axial_force() - continuum).abs() < 1e-5 * continuum);
    // torsion is decoupled and unforced
    assert!(st.w.iter().chain(&st.torque).all(|x| *x == 0.0));
}

#[test]
fn torsion_source_gives_quadratic_twist() {
    let twist = 0.15;
    let sys = system(6, true);
    let sigma = sys.load_p2(&Profile::Constant { value: 1.0 });
    let zero = vec![0.0; sys.mesh().hermite_dim()];
    let st = sys.solve_static(&zero, &zero, Some(&sigma)).unwrap();
    // ∂(GJ w′) = σ with w(0) = w(1) = 0
    for x in [0.1, 0.5, 0.8] {
        let exact = x * (x - 1.0) / (2.0 * twist);
        assert!((sys.mesh().p2_eval(&st.w, 0, x) - exact).abs() < 1e-13);
    }
    // torque T = GJ w′ = x − ½
    for (i, t) in st.torque.iter().enumerate() {
        let x = sys.mesh().node(i);
        assert!((t - (x - 0.5)).abs() < 1e-12, "{t} at {x}");
    }
    assert!(st.u.iter().all(|x| *x == 0.0));
}

#[test]
fn residual_is_the_negative_energy_gradient() {
    let sys = system(4, true);
    let n = sys.mesh().hermite_dim();
    let p = sys.mesh().p2_dim();
    let seq = |k: usize, s: f64| (0..k).map(|i| s * ((i as f64 + 1.0) * 0.7).sin()).collect::<Vec<_>>();
    let state = RodState {
        v2: seq(n, 0.3),
        v3: seq(n, -0.2).into_iter().rev().collect(),
        u: seq(p, 0.05),
        w: seq(p, 0.1).into_iter().rev().collect(),
        ..RodState::zeros(sys.mesh())
    };
    let r = sys.bending_residual(&state, None).unwrap();
    let d = 1e-6;
    for i in 0..2 * n {
        let energy = |s: f64| {
            let mut v = state.bending();
            v[i] += s;
            let (v2, v3) = v.split_at(n);
            sys.elastic_energy(v2, v3, &state.u, &state.w)
        };
        let fd = (energy(d) - energy(-d)) / (2.0 * d);
        assert!((r[i] + fd).abs() < 1e-7 * (1.0 + fd.abs()), "dof {i}: {} vs {}", r[i], -fd);
    }
}

#[test]
fn static_fields_minimize_the_energy() {
    let sys = system(6, true);
    let n = sys.mesh().hermite_dim();
    let v2 = sys.mesh().hermite_interpolate(&bump());
    let v3: Vec<f64> = v2.iter().map(|x| 0.5 * x).collect();
    let st = sys.solve_static(&v2, &v3, None).unwrap();
    let e0 = sys.elastic_energy(&v2, &v3, &st.u, &st.w);
    for k in 0..st.u.len() {
        let mut u = st.u.clone();
        u[k] += 1e-3;
        assert!(sys.elastic_energy(&v2, &v3, &u, &st.w) > e0);
    }
    assert_eq!(v2.len(), n);
}

#[test]
fn energy_is_quadratic_in_the_linear_regime() {
    let sys = system(6, false);
    let v2 = sys.mesh().hermite_interpolate(&bump());
    let v3 = vec![0.0; v2.len()];
    let p = vec![0.0; sys.mesh().p2_dim()];
    let twice: Vec<f64> = v2.iter().map(|x| 2.0 * x).collect();
    let e1 = sys.elastic_energy(&v2, &v3, &p, &p);
    let e2 = sys.elastic_energy(&twice, &v3, &p, &p);
    assert!((e2 - 4.0 * e1).abs() < 1e-14 * e2);
    // ½ EI ∫ (v″)² for x²(1−x)²: ∫(2 − 12x + 12x²)² = 4/5
    assert!((e1 - 0.5 * EI * 0.8).abs() < 1e-3 * e1);
}

#[test]
fn spectrum_converges_to_clamped_beam_at_fourth_order() {
    // β₁L for a clamped-clamped beam
    let beta = 4.730_040_744_862_704_f64;
    let exact = EI * beta.powi(4);
    let errs: Vec<f64> = [4, 8, 16]
        .iter()
        .map(|&n| system(n, true).linearized_spectrum(1, Some(2)).unwrap().values[0] - exact)
        .collect();
    assert!(errs.iter().all(|e| *e > 0.0), "{errs:?}");
    let rate = (errs[1] / errs[2]).log2();
    assert!(rate > 3.5, "{errs:?} rate {rate}");
    assert!(errs[2] / exact < 2e-5, "{errs:?}");
}

#[test]
fn spectrum_pairs_for_equal_bending_and_is_mass_normalized() {
    let sys = system(6, true);
    let s = sys.linearized_spectrum(6, None).unwrap();
    for k in 0..3 {
        let (a, b) = (s.values[2 * k], s.values[2 * k + 1]);
        assert!((a - b).abs() < 1e-9 * a, "{a} vs {b}");
    }
    assert!(s.values.windows(2).all(|w| w[0] <= w[1]) && s.values[0] > 0.0);
    let n = sys.mesh().hermite_dim();
    for mode in &s.modes {
        let (a, b) = mode.split_at(n);
        let norm = 2.0 * sys.kinetic_energy(a, b);
        assert!((norm - 1.0).abs() < 1e-10);
    }
    let only3 = sys.linearized_spectrum(2, Some(3)).unwrap();
    assert!(only3.modes[0][..n].iter().all(|x| *x == 0.0));
    assert!((only3.values[0] - s.values[0]).abs() < 1e-9 * s.values[0]);
}

#[test]
fn spectrum_scales_with_length_and_stiffness() {
    let base = system(8, true).linearized_spectrum(3, Some(2)).unwrap().values;
    let long = RodSystem::new(RodMesh1D::new(2.0, 8).unwrap(), &diagonal(0.15), true)
        .unwrap()
        .linearized_spectrum(3, Some(2))
        .unwrap()
        .values;
    let stiff = RodSystem::new(RodMesh1D::new(1.0, 8).unwrap(), &diagonal(0.15).scaled(3.0).unwrap(), true)
        .unwrap()
        .linearized_spectrum(3, Some(2))
        .unwrap()
        .values;
    for k in 0..3 {
        assert!((long[k] * 16.0 - base[k]).abs() < 1e-9 * base[k]);
        assert!((stiff[k] - 3.0 * base[k]).abs() < 1e-9 * base[k]);
    }
}

#[test]
fn invalid_requests_are_errors() {
    let sys = system(4, true);
    let n = sys.mesh().hermite_dim();
    assert!(matches!(
        sys.linearized_spectrum(2 * n + 1, None),
        Err(RodError::TooManyModes { .. })
    ));
    assert!(matches!(sys.linearized_spectrum(1, Some(1)), Err(RodError::Component(1))));
    let mut st = RodState::zeros(sys.mesh());
    st.vel2.pop();
    assert!(matches!(
        sys.bending_residual(&st, None),
        Err(RodError::DimensionMismatch { what: "vel2", .. })
    ));
}
