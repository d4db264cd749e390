mod common;

use std::sync::Arc;

use common::orders;
use grcalc::grid::{partial_derivative, sample_scalar};
use grcalc::{CoordinateChart, Expr, FdOrder, GridSpec};
use proptest::prelude::*;

const SYMBOLS: [&str; 2] = ["x", "y"];

/// Expression sources that are finite on [0.5, 1.5]^2.
fn source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        (-3.0..3.0f64).prop_map(|c| format!("{c:.3}")),
        Just("pi".to_string()),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) + ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) - ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            inner.clone().prop_map(|a| format!("({a})/(2 + x*y)")),
            (inner.clone(), 0u32..4).prop_map(|(a, p)| format!("({a})^{p}")),
            inner.clone().prop_map(|a| format!("-({a})")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("exp(0.1*({a}))")),
            inner.clone().prop_map(|a| format!("sqrt(1 + ({a})^2)")),
            inner.prop_map(|a| format!("log(2 + sin({a}))")),
        ]
    })
}

fn points() -> Vec<[f64; 2]> {
    (0..100)
        .map(|i| {
            let s = i as f64 / 99.0;
            [0.5 + s, 1.5 - 0.7 * s * s]
        })
        .collect()
}

fn parse(src: &str) -> Expr {
    Expr::parse(src, &SYMBOLS).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printed_form_parses_to_same_values(src in source()) {
        let e = parse(&src);
        let again = parse(&e.to_string());
        for p in points() {
            let (a, b) = (e.eval(&p).unwrap(), again.eval(&p).unwrap());
            prop_assert!(close(a, b, 1e-12), "{src} printed as {e}: {a} vs {b}");
        }
    }

    #[test]
    fn symbolic_derivative_matches_difference_quotient(src in source(), axis in 0usize..2) {
        let e = parse(&src);
        let d = e.differentiate(axis);
        let h = 1e-4;
        for p in points().into_iter().step_by(10) {
            let (mut up, mut down) = (p, p);
            up[axis] += h;
            down[axis] -= h;
            let fd = (e.eval(&up).unwrap() - e.eval(&down).unwrap()) / (2.0 * h);
            let exact = d.eval(&p).unwrap();
            let scale = e.eval(&up).unwrap().abs().max(1.0);
            prop_assert!((fd - exact).abs() <= 1e-5 * scale * (1.0 + exact.abs()), "{src}: {fd} vs {exact}");
        }
    }

    #[test]
    fn mixed_partials_commute(src in source()) {
        let e = parse(&src);
        let xy = e.differentiate(0).differentiate(1);
        let yx = e.differentiate(1).differentiate(0);
        for p in points().into_iter().step_by(7) {
            let (a, b) = (xy.eval(&p).unwrap(), yx.eval(&p).unwrap());
            prop_assert!(close(a, b, 1e-9), "{src}: {a} vs {b}");
        }
    }

    #[test]
    fn fd_operator_is_linear(a in -2.0..2.0f64, b in -2.0..2.0f64, fourth in any::<bool>(), seed in 0u64..1000) {
        let chart = CoordinateChart::new(SYMBOLS, vec![0.5, 0.5], vec![1.5, 1.5], vec![false, false]).unwrap();
        let grid = GridSpec::new(chart, vec![12, 9]).unwrap();
        let order = if fourth { FdOrder::Fourth } else { FdOrder::Second };
        let n = grid.node_count();
        let f: Vec<f64> = (0..n).map(|i| ((i as u64 * 7919 + seed) % 101) as f64 / 50.0 - 1.0).collect();
        let g: Vec<f64> = (0..n).map(|i| ((i as u64 * 104729 + 3 * seed) % 97) as f64 / 48.0 - 1.0).collect();
        let combo: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
        for axis in 0..2 {
            let lhs = grid.differentiate(&combo, axis, order).unwrap();
            let df = grid.differentiate(&f, axis, order).unwrap();
            let dg = grid.differentiate(&g, axis, order).unwrap();
            for i in 0..n {
                prop_assert!((lhs[i] - (a * df[i] + b * dg[i])).abs() <= 1e-11);
            }
        }
    }
}

/// Max error of the sampled r-derivative on an (n+1) x 5 lattice over [1,2].
fn derivative_errors(src: &str, exact: impl Fn(f64) -> f64, order: FdOrder) -> Vec<(f64, f64)> {
    [32usize, 64, 128]
        .into_iter()
        .map(|n| {
            let chart = CoordinateChart::new(["r", "z"], vec![1.0, 0.0], vec![2.0, 1.0], vec![false; 2]).unwrap();
            let grid = Arc::new(GridSpec::new(chart.clone(), vec![n + 1, 5]).unwrap());
            let f = sample_scalar(&chart.parse(src).unwrap(), &grid).unwrap();
            let df = partial_derivative(&f, 0, order).unwrap();
            let err = (0..grid.node_count())
                .map(|i| (df.at(0, i) - exact(grid.point(i)[0])).abs())
                .fold(0.0, f64::max);
            (grid.spacing()[0], err)
        })
        .collect()
}

#[test]
fn cube_derivative_converges_at_second_order() {
    let samples = derivative_errors("r^3", |r| 3.0 * r * r, FdOrder::Second);
    for o in orders(&samples) {
        assert!((o - 2.0).abs() <= 0.3, "{samples:?}");
    }
    // cubics are inside the fourth-order stencils' exactness range
    let samples = derivative_errors("r^3", |r| 3.0 * r * r, FdOrder::Fourth);
    assert!(samples.iter().all(|s| s.1 < 1e-10), "{samples:?}");
}

#[test]
fn smooth_derivative_converges_at_stencil_order() {
    for (order, expect) in [(FdOrder::Second, 2.0), (FdOrder::Fourth, 4.0)] {
        let samples = derivative_errors("sin(3*r)", |r| 3.0 * (3.0 * r).cos(), order);
        for o in orders(&samples) {
            assert!((o - expect).abs() <= 0.3, "{order}: {samples:?}");
        }
    }
}
