//! Shared fixtures and brute-force oracles for the integration tests. The
//! oracles work on plain `f64` matrices at a single point and do not touch
//! the backend or geometry code they check.

#![allow(dead_code)]

use std::f64::consts::PI;

use grcalc::metric::MetricPointData;
use grcalc::{CoordinateChart, Expr, MetricField, Preset};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const THETA_CAP: f64 = 0.1;

pub fn schwarzschild(r: (f64, f64)) -> (CoordinateChart, MetricField) {
    let p = Preset::Schwarzschild { mass: 1.0 };
    let chart = p
        .chart(
            &[(0.0, 1.0), r, (THETA_CAP, PI - THETA_CAP), (0.0, 2.0 * PI)],
            &[false, false, false, true],
        )
        .unwrap();
    let m = p.metric(&chart).unwrap();
    (chart, m)
}

pub fn static_spherical(alpha: &str, a: &str, r: (f64, f64)) -> (CoordinateChart, MetricField) {
    let p = Preset::StaticSpherical {
        alpha: alpha.into(),
        a: a.into(),
    };
    let chart = p
        .chart(
            &[(0.0, 1.0), r, (THETA_CAP, PI - THETA_CAP), (0.0, 2.0 * PI)],
            &[false, false, false, true],
        )
        .unwrap();
    let m = p.metric(&chart).unwrap();
    (chart, m)
}

pub fn polar(r: (f64, f64)) -> (CoordinateChart, MetricField) {
    let p = Preset::Polar2;
    let chart = p.chart(&[r, (0.0, 2.0 * PI)], &[false, true]).unwrap();
    let m = p.metric(&chart).unwrap();
    (chart, m)
}

pub fn spherical3(r: (f64, f64)) -> (CoordinateChart, MetricField) {
    let p = Preset::Spherical3;
    let chart = p
        .chart(&[r, (THETA_CAP, PI - THETA_CAP), (0.0, 2.0 * PI)], &[false, false, true])
        .unwrap();
    let m = p.metric(&chart).unwrap();
    (chart, m)
}

pub fn minkowski(lo: f64, hi: f64) -> (CoordinateChart, MetricField) {
    let p = Preset::Minkowski4;
    let chart = p.chart(&[(lo, hi); 4], &[false; 4]).unwrap();
    let m = p.metric(&chart).unwrap();
    (chart, m)
}

/// A random smooth field over `chart`: a polynomial of degree two in the
/// non-periodic coordinates times a first harmonic in the periodic ones.
pub fn random_smooth(rng: &mut StdRng, chart: &CoordinateChart) -> String {
    let names = chart.names();
    let mut terms = vec![format!("{:.3}", rng.gen_range(-1.0..1.0))];
    for (i, name) in names.iter().enumerate() {
        let c = rng.gen_range(-1.0..1.0);
        if chart.periodic()[i] {
            let s = rng.gen_range(-1.0..1.0);
            terms.push(format!("{c:.3}*cos({name}) + {s:.3}*sin({name})"));
        } else {
            terms.push(format!("{c:.3}*{name}"));
            for other in names.iter().skip(i) {
                if !chart.periodic()[chart.axis_of(other).unwrap()] {
                    terms.push(format!("{:.3}*{name}*{other}", rng.gen_range(-0.5..0.5)));
                }
            }
        }
    }
    terms.join(" + ")
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// `Gamma^m_{ab}` at one point by direct summation, indexed `[m][a][b]`.
pub fn brute_christoffel(d: &MetricPointData) -> Vec<Vec<Vec<f64>>> {
    let n = d.g.nrows();
    let mut out = vec![vec![vec![0.0; n]; n]; n];
    for m in 0..n {
        for a in 0..n {
            for b in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += 0.5 * d.inverse[(m, k)] * (d.dg[b][(k, a)] + d.dg[a][(k, b)] - d.dg[k][(a, b)]);
                }
                out[m][a][b] = s;
            }
        }
    }
    out
}

/// `d_l sqrt(g) / sqrt(g)` from the trace of `g^{-1} dg`.
pub fn brute_log_sqrt_g(d: &MetricPointData) -> Vec<f64> {
    let n = d.g.nrows();
    (0..n).map(|l| 0.5 * (&d.inverse * &d.dg[l]).trace()).collect()
}

pub fn eval_all(es: &[Expr], p: &[f64]) -> Vec<f64> {
    es.iter().map(|e| e.eval(p).unwrap()).collect()
}

pub fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) })
}

/// Max |a - b| over points.
pub fn max_diff(a: &Expr, b: &Expr, points: &[Vec<f64>]) -> f64 {
    max_abs(points.iter().map(|p| a.eval(p).unwrap() - b.eval(p).unwrap()))
}

/// Observed order from consecutive `(h, err)` pairs.
pub fn orders(samples: &[(f64, f64)]) -> Vec<f64> {
    samples
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
        .collect()
}
