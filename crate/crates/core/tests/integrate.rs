mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use common::{minkowski, rng, spherical3, static_spherical, THETA_CAP};
use grcalc::channel::random_points;
use grcalc::density::transform_density;
use grcalc::integrate::{gauss_check, mass_integral, surface_integral, volume_integral, FaceLabel, MassOptions};
use grcalc::physics::{conserved_current, scalar_stress_energy, stress_energy_divergence, SCALAR_FIELD_SCALE};
use grcalc::{
    Analytic, Backend, ChartMap, CoordinateChart, Error, Expr, Geometry, GridSpec, MetricField, Quadrature,
    RegionSpec, Signature, Slot, VectorField,
};
use proptest::prelude::*;
use rand::Rng;

/// Solid angle of the sphere with both polar caps removed.
fn trimmed_solid_angle() -> f64 {
    2.0 * PI * (THETA_CAP.cos() - (PI - THETA_CAP).cos())
}

fn shell(n: usize) -> (Analytic, MetricField, RegionSpec) {
    let (chart, m) = spherical3((1.0, 2.0));
    let grid = Arc::new(GridSpec::new(chart.clone(), vec![n + 1, n + 1, n]).unwrap());
    (Analytic::new(chart), m, RegionSpec::whole(grid))
}

#[test]
fn shell_volume() {
    let exact = 7.0 / 3.0 * trimmed_solid_angle();
    let mut errs = Vec::new();
    for n in [16, 32, 64] {
        let (b, m, region) = shell(n);
        let geo = Geometry::new(&b, &m).unwrap();
        let simpson = volume_integral(&geo, &Expr::one(), &region, Quadrature::Simpson).unwrap();
        assert!((simpson - exact).abs() < 1e-5 * exact, "n = {n}: {simpson} vs {exact}");
        let trap = volume_integral(&geo, &Expr::one(), &region, Quadrature::Trapezoid).unwrap();
        errs.push((1.0 / n as f64, (trap - exact).abs()));
    }
    for w in errs.windows(2) {
        let order = (w[0].1 / w[1].1).log2();
        assert!((order - 2.0).abs() < 0.3, "{errs:?}");
    }
}

#[test]
fn inverse_square_flux_is_solid_angle() {
    let (b, m, region) = shell(32);
    let geo = Geometry::new(&b, &m).unwrap();
    let p = VectorField::parse(b.chart(), &["1/r^2", "0", "0"]).unwrap();
    let flux = surface_integral(&geo, &p, &region, Quadrature::Simpson).unwrap();
    let omega = trimmed_solid_angle();
    // Simpson bound for sin(theta): 2 pi (b - a) h^4 / 180
    let h = (PI - 2.0 * THETA_CAP) / 32.0;
    let bound = 2.0 * PI * (PI - 2.0 * THETA_CAP) * h.powi(4) / 180.0;
    assert!((flux.flux(0, FaceLabel::Outer) - omega).abs() < bound);
    assert!((flux.flux(0, FaceLabel::Inner) + omega).abs() < bound);
    assert!(flux.total.abs() < 1e-12);
    let rep = gauss_check(&geo, &p, &region, Quadrature::Simpson).unwrap();
    assert!(rep.lhs.abs() < 1e-12 && rep.residual <= 1e-8);
}

#[test]
fn linear_field_on_minkowski_box() {
    let (chart, m) = minkowski(0.0, 1.0);
    let b = Analytic::new(chart.clone());
    let geo = Geometry::new(&b, &m).unwrap();
    let grid = Arc::new(GridSpec::new(chart.clone(), vec![5, 6, 7, 5]).unwrap());
    let p = VectorField::parse(&chart, &["2*t + x", "y - 3*z", "0.5*y + t", "z + 1"]).unwrap();
    let rep = gauss_check(&geo, &p, &RegionSpec::whole(grid), Quadrature::Trapezoid).unwrap();
    assert!((rep.lhs - 3.5).abs() < 1e-12);
    assert!(rep.residual <= 1e-12);
}

#[test]
fn volume_integral_is_chart_invariant() {
    // spherical3 against the log-radial chart r = exp(s)
    let (chart, m) = spherical3((1.0, 2.0));
    let log_chart = CoordinateChart::new(
        ["s", "theta", "phi"],
        vec![0.0, THETA_CAP, 0.0],
        vec![2.0f64.ln(), PI - THETA_CAP, 2.0 * PI],
        vec![false, false, true],
    )
    .unwrap();
    let map = ChartMap::new(chart.clone(), log_chart.clone(), Some(&["log(r)", "theta", "phi"]), &["exp(s)", "theta", "phi"])
        .unwrap();
    let g = TensorDensityFieldExt::metric_of(&m, &chart);
    let g_log = transform_density(&g, &map).unwrap();
    let table: Vec<Vec<Expr>> = (0..3).map(|i| (0..3).map(|j| g_log.get(&[i, j]).clone()).collect()).collect();
    let m_log = MetricField::from_exprs(log_chart.clone(), table, Signature::riemannian(3)).unwrap();

    let f = chart.parse("r*cos(theta)^2 + sin(phi)^2").unwrap();
    let f_log = map.pull_back(&f);
    let n = 64;
    let integral = |c: &CoordinateChart, metric: &MetricField, f: &Expr| {
        let b = Analytic::new(c.clone());
        let geo = Geometry::new(&b, metric).unwrap();
        let grid = Arc::new(GridSpec::new(c.clone(), vec![n + 1, n + 1, n]).unwrap());
        volume_integral(&geo, f, &RegionSpec::whole(grid), Quadrature::Simpson).unwrap()
    };
    let a = integral(&chart, &m, &f);
    let c = integral(&log_chart, &m_log, &f_log);
    assert!((a - c).abs() < 1e-7 * a.abs(), "{a} vs {c}");
}

/// The metric of an analytic `MetricField` as a down-down field.
struct TensorDensityFieldExt;

impl TensorDensityFieldExt {
    fn metric_of(m: &MetricField, chart: &CoordinateChart) -> grcalc::TensorDensityField<Expr> {
        let comps = m.exprs().unwrap().to_vec();
        grcalc::TensorDensityField::new(chart.clone(), vec![Slot::Down, Slot::Down], 0.0, comps).unwrap()
    }
}

#[test]
fn flat_wave_solution_is_conserved() {
    let (chart, m) = minkowski(-1.0, 1.0);
    let b = Analytic::new(chart.clone());
    let geo = Geometry::new(&b, &m).unwrap();
    let t = scalar_stress_energy(&geo, &chart.parse("x").unwrap(), SCALAR_FIELD_SCALE).unwrap();
    for c in stress_energy_divergence(&geo, &t).unwrap() {
        assert!(b.sup_norm(&c).unwrap() <= 1e-12);
    }
    let t = scalar_stress_energy(&geo, &chart.parse("cos(t - x) + 0.3*y*z").unwrap(), SCALAR_FIELD_SCALE).unwrap();
    for c in stress_energy_divergence(&geo, &t).unwrap() {
        assert!(b.sup_norm(&c).unwrap() <= 1e-12);
    }
}

#[test]
fn current_matches_brute_contraction() {
    let (chart, m) = static_spherical("sqrt(1 - 1/r)", "1/sqrt(1 - 1/r)", (3.0, 10.0));
    let b = Analytic::new(chart.clone());
    let geo = Geometry::new(&b, &m).unwrap();
    let t = scalar_stress_energy(&geo, &chart.parse("t + 1/r + 0.2*cos(theta)").unwrap(), SCALAR_FIELD_SCALE).unwrap();
    let k = VectorField::parse(&chart, &["1", "0", "0", "1"]).unwrap();
    let rep = conserved_current(&geo, &k, &t, 1e-10).unwrap();
    assert!(rep.warning.is_none());
    for p in random_points(&chart, 100, 21) {
        let md = m.metric_at(&p).unwrap();
        let ku = [1.0, 0.0, 0.0, 1.0];
        for nu in 0..4 {
            let mut want = 0.0;
            for mu in 0..4 {
                let k_mu: f64 = (0..4).map(|a| md.g[(mu, a)] * ku[a]).sum();
                want += k_mu * t.get(mu, nu).eval(&p).unwrap();
            }
            let got = rep.current.components()[nu].eval(&p).unwrap();
            assert!((got - want).abs() <= 1e-13 * (1.0 + want.abs()));
        }
    }
}

fn mass_setup() -> (Analytic, MetricField, RegionSpec) {
    let (chart, m) = static_spherical("1 + 0.1/r", "1", (1.0, 2.0));
    let grid = Arc::new(GridSpec::new(chart.clone(), vec![5, 9, 9, 8]).unwrap());
    let region = RegionSpec::from_indices(grid, &[(2, 2), (0, 8), (0, 8), (0, 7)]).unwrap();
    (Analytic::new(chart), m, region)
}

#[test]
fn mass_rejects_spacelike_slice_and_non_killing_vector() {
    let (b, m, _) = mass_setup();
    let geo = Geometry::new(&b, &m).unwrap();
    let chart = b.chart().clone();
    let t = scalar_stress_energy(&geo, &chart.parse("1/r").unwrap(), SCALAR_FIELD_SCALE).unwrap();
    let grid = Arc::new(GridSpec::new(chart.clone(), vec![5, 9, 9, 8]).unwrap());
    let radial_slice = RegionSpec::from_indices(grid.clone(), &[(0, 4), (4, 4), (0, 8), (0, 7)]).unwrap();
    let k = VectorField::parse(&chart, &["1", "0", "0", "0"]).unwrap();
    let err = mass_integral(&geo, &t, &k, &radial_slice, &MassOptions::default()).unwrap_err();
    assert!(matches!(err, Error::NoTimelikeDirection(_)), "{err}");

    let slice = RegionSpec::from_indices(grid, &[(2, 2), (0, 8), (0, 8), (0, 7)]).unwrap();
    let not_killing = VectorField::parse(&chart, &["r", "0", "0", "0"]).unwrap();
    let err = mass_integral(&geo, &t, &not_killing, &slice, &MassOptions::default()).unwrap_err();
    assert!(matches!(err, Error::KillingResidual { .. }), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn flipping_orientation_negates_flux(seed in 0u64..10_000) {
        let (b, m, region) = shell(8);
        let geo = Geometry::new(&b, &m).unwrap();
        let mut r = rng(seed);
        let srcs: Vec<String> = (0..3)
            .map(|_| format!("{:.3}*r + {:.3}*cos(theta) + {:.3}*sin(phi)", r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
            .collect();
        let p = VectorField::parse(b.chart(), &srcs).unwrap();
        let fwd = surface_integral(&geo, &p, &region, Quadrature::Trapezoid).unwrap().total;
        let back = surface_integral(&geo, &p, &region.clone().flipped(), Quadrature::Trapezoid).unwrap().total;
        prop_assert_eq!(fwd, -back);
    }

    #[test]
    fn mass_is_linear(a in -3.0..3.0f64, c in -3.0..3.0f64, kscale in 0.5..4.0f64) {
        let (b, m, region) = mass_setup();
        let geo = Geometry::new(&b, &m).unwrap();
        let chart = b.chart().clone();
        let opts = MassOptions::default();
        let t1 = scalar_stress_energy(&geo, &chart.parse("1/r").unwrap(), SCALAR_FIELD_SCALE).unwrap();
        let t2 = scalar_stress_energy(&geo, &chart.parse("r*cos(theta)").unwrap(), SCALAR_FIELD_SCALE).unwrap();
        let k = VectorField::parse(&chart, &["1", "0", "0", "0"]).unwrap();
        let mass = |t, k: &VectorField<Expr>| mass_integral(&geo, t, k, &region, &opts).unwrap().mass;
        let (m1, m2) = (mass(&t1, &k), mass(&t2, &k));
        let combo = t1.scaled(&b, a).plus(&b, &t2.scaled(&b, c)).unwrap();
        let scale = (a * m1).abs() + (c * m2).abs() + 1e-300;
        prop_assert!((mass(&combo, &k) - (a * m1 + c * m2)).abs() <= 1e-12 * scale);
        let ks = VectorField::parse(&chart, &[format!("{kscale}"), "0".into(), "0".into(), "0".into()]).unwrap();
        prop_assert!((mass(&t1, &ks) - kscale * m1).abs() <= 1e-12 * (kscale * m1).abs());
    }
}
