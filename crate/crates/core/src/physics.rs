//! Stress-energy tensors and the conserved currents built from them with a
//! Killing vector.

use std::f64::consts::PI;

use crate::calculus::Geometry;
use crate::channel::Backend;
use crate::error::Result;
use crate::tensor::{Slot, TensorDensityField, VectorField};

/// Normalization of the real scalar field stress-energy, `1/(4 pi)`.
pub const SCALAR_FIELD_SCALE: f64 = 1.0 / (4.0 * PI);

/// Symmetric `T^{mn}`. Mixed form and trace are derived on demand.
#[derive(Debug, Clone)]
pub struct StressEnergyField<S> {
    field: TensorDensityField<S>,
}

impl<S: Clone> StressEnergyField<S> {
    /// Takes the symmetric part of an up-up, weight-zero field.
    pub fn new<B: Backend<Scalar = S>>(b: &B, field: TensorDensityField<S>) -> Result<Self> {
        field.expect_signature(&[Slot::Up, Slot::Up], Some(0.0))?;
        let dim = field.dim();
        let mut comps = field.components().to_vec();
        for m in 0..dim {
            for n in m + 1..dim {
                let (x, y) = (&comps[m * dim + n], &comps[n * dim + m]);
                let sym = if b.is_structural_zero(x) && b.is_structural_zero(y) {
                    x.clone()
                } else {
                    b.scale(&b.add(x, y), 0.5)
                };
                comps[m * dim + n] = sym.clone();
                comps[n * dim + m] = sym;
            }
        }
        Ok(Self {
            field: TensorDensityField::new(field.chart().clone(), field.slots().to_vec(), 0.0, comps)?,
        })
    }

    pub fn field(&self) -> &TensorDensityField<S> {
        &self.field
    }

    pub fn get(&self, m: usize, n: usize) -> &S {
        self.field.get(&[m, n])
    }

    /// `T^m_n = T^{ma} g_{an}`
    pub fn mixed<B: Backend<Scalar = S>>(&self, geo: &Geometry<'_, B>) -> Result<TensorDensityField<S>> {
        geo.lower_index(&self.field, 1)
    }

    /// `T = T^m_m`
    pub fn trace<B: Backend<Scalar = S>>(&self, geo: &Geometry<'_, B>) -> Result<S> {
        let mixed = self.mixed(geo)?;
        let b = geo.backend();
        Ok(b.sum((0..geo.dim()).map(|m| mixed.get(&[m, m]).clone())))
    }

    /// Multiply every component by `c`.
    pub fn scaled<B: Backend<Scalar = S>>(&self, b: &B, c: f64) -> Self {
        Self {
            field: self.field.map(|x| b.scale(x, c)),
        }
    }

    /// Componentwise sum.
    pub fn plus<B: Backend<Scalar = S>>(&self, b: &B, other: &Self) -> Result<Self> {
        other.field.expect_chart(self.field.chart())?;
        let comps = self
            .field
            .components()
            .iter()
            .zip(other.field.components())
            .map(|(x, y)| b.add(x, y))
            .collect();
        Ok(Self {
            field: TensorDensityField::new(self.field.chart().clone(), vec![Slot::Up, Slot::Up], 0.0, comps)?,
        })
    }
}

/// `scale * (phi^{;a} phi^{;b} - 1/2 g^{ab} phi_{;c} phi^{;c})`; the usual
/// normalization is [`SCALAR_FIELD_SCALE`].
pub fn scalar_stress_energy<B: Backend>(
    geo: &Geometry<'_, B>,
    phi: &B::Scalar,
    scale: f64,
) -> Result<StressEnergyField<B::Scalar>> {
    let b = geo.backend();
    let dim = geo.dim();
    let down = (0..dim).map(|m| b.partial(phi, m)).collect::<Result<Vec<_>>>()?;
    let up: Vec<B::Scalar> = (0..dim)
        .map(|a| {
            b.sum((0..dim).filter_map(|c| {
                let gi = geo.inverse_metric(a, c);
                (!b.is_structural_zero(gi) && !b.is_structural_zero(&down[c])).then(|| b.mul(gi, &down[c]))
            }))
        })
        .collect();
    let square = b.sum(
        (0..dim)
            .filter(|&c| !b.is_structural_zero(&down[c]) && !b.is_structural_zero(&up[c]))
            .map(|c| b.mul(&down[c], &up[c])),
    );
    let mut comps = vec![b.constant(0.0); dim * dim];
    for m in 0..dim {
        for n in m..dim {
            let mut terms = Vec::new();
            if !b.is_structural_zero(&up[m]) && !b.is_structural_zero(&up[n]) {
                terms.push(b.mul(&up[m], &up[n]));
            }
            let gi = geo.inverse_metric(m, n);
            if !b.is_structural_zero(gi) && !b.is_structural_zero(&square) {
                terms.push(b.scale(&b.mul(gi, &square), -0.5));
            }
            let v = if terms.is_empty() {
                b.constant(0.0)
            } else {
                b.scale(&b.sum(terms), scale)
            };
            comps[m * dim + n] = v.clone();
            comps[n * dim + m] = v;
        }
    }
    let field = TensorDensityField::new(geo.chart().clone(), vec![Slot::Up, Slot::Up], 0.0, comps)?;
    Ok(StressEnergyField { field })
}

/// `T^{mn}_{;n}`
pub fn stress_energy_divergence<B: Backend>(
    geo: &Geometry<'_, B>,
    t: &StressEnergyField<B::Scalar>,
) -> Result<Vec<B::Scalar>> {
    let b = geo.backend();
    let dim = geo.dim();
    let cov = geo.covariant_derivative(&t.field)?;
    Ok((0..dim).map(|m| b.sum((0..dim).map(|n| cov.get(&[m, n, n]).clone()))).collect())
}

/// `J^n = k_m T^{mn}` with both pieces of its divergence.
#[derive(Debug, Clone)]
pub struct CurrentReport<S> {
    pub current: VectorField<S>,
    /// `k_{m;n} T^{mn}`, zero for a Killing `k`.
    pub killing_term: S,
    /// `k_m T^{mn}_{;n}`, zero for conserved `T`.
    pub conservation_term: S,
    /// Max norm of `k_{m;n} + k_{n;m}`.
    pub killing_residual: f64,
    /// Set when the Killing residual exceeds the tolerance passed in.
    pub warning: Option<String>,
}

pub fn conserved_current<B: Backend>(
    geo: &Geometry<'_, B>,
    k: &VectorField<B::Scalar>,
    t: &StressEnergyField<B::Scalar>,
    killing_tol: f64,
) -> Result<CurrentReport<B::Scalar>> {
    let b = geo.backend();
    let dim = geo.dim();
    t.field.expect_chart(geo.chart())?;
    let report = geo.killing_residual(k)?;
    let lowered = geo.lower_index(k.field(), 0)?;
    let kd = lowered.components();

    let current = (0..dim)
        .map(|n| {
            b.sum((0..dim).filter_map(|m| {
                let tmn = t.get(m, n);
                (!b.is_structural_zero(&kd[m]) && !b.is_structural_zero(tmn)).then(|| b.mul(&kd[m], tmn))
            }))
        })
        .collect();
    let current = VectorField::new(geo.chart().clone(), current)?;

    let cov_k = geo.covariant_derivative(&lowered)?;
    let mut killing_terms = Vec::new();
    for m in 0..dim {
        for n in 0..dim {
            let (dk, tmn) = (cov_k.get(&[m, n]), t.get(m, n));
            if !b.is_structural_zero(dk) && !b.is_structural_zero(tmn) {
                killing_terms.push(b.mul(dk, tmn));
            }
        }
    }
    let div_t = stress_energy_divergence(geo, t)?;
    let conservation_terms = (0..dim)
        .filter(|&m| !b.is_structural_zero(&kd[m]) && !b.is_structural_zero(&div_t[m]))
        .map(|m| b.mul(&kd[m], &div_t[m]));

    let warning = (!(report.max_norm <= killing_tol)).then(|| {
        format!(
            "Killing residual {:e} exceeds {:e}; the current is not conserved by symmetry alone",
            report.max_norm, killing_tol
        )
    });
    Ok(CurrentReport {
        current,
        killing_term: b.sum(killing_terms),
        conservation_term: b.sum(conservation_terms),
        killing_residual: report.max_norm,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Analytic;
    use crate::metric::Preset;

    fn flat_spherical() -> (Analytic, crate::metric::MetricField) {
        let p = Preset::StaticSpherical {
            alpha: "1".into(),
            a: "1".into(),
        };
        let chart = p
            .chart(&[(0.0, 1.0), (1.0, 2.0), (0.3, 2.8), (0.0, 2.0 * PI)], &[false, false, false, true])
            .unwrap();
        let m = p.metric(&chart).unwrap();
        (Analytic::new(chart), m)
    }

    #[test]
    fn constant_field_has_no_stress() {
        let (b, m) = flat_spherical();
        let geo = Geometry::new(&b, &m).unwrap();
        let t = scalar_stress_energy(&geo, &b.chart().parse("7").unwrap(), SCALAR_FIELD_SCALE).unwrap();
        assert!(t.field().components().iter().all(|c| c.is_zero()));
    }

    #[test]
    fn radial_field_is_stiff_fluid() {
        let (b, m) = flat_spherical();
        let geo = Geometry::new(&b, &m).unwrap();
        let phi = b.chart().parse("1/r").unwrap();
        let t = scalar_stress_energy(&geo, &phi, SCALAR_FIELD_SCALE).unwrap();
        let mixed = t.mixed(&geo).unwrap();
        for p in b.probes() {
            let r = p[1];
            let e = 1.0 / (8.0 * PI) / r.powi(4);
            assert!((mixed.get(&[1, 1]).eval(p).unwrap() - e).abs() < 1e-14);
            assert!((mixed.get(&[0, 0]).eval(p).unwrap() + e).abs() < 1e-14);
            assert!((mixed.get(&[2, 2]).eval(p).unwrap() + e).abs() < 1e-14);
        }
    }

    #[test]
    fn symmetric_part_is_kept() {
        let (b, _) = flat_spherical();
        let mut srcs = vec!["0"; 16];
        srcs[1] = "r";
        let f = TensorDensityField::parse(b.chart(), vec![Slot::Up, Slot::Up], 0.0, &srcs).unwrap();
        let t = StressEnergyField::new(&b, f).unwrap();
        let p = [0.5, 1.5, 1.0, 1.0];
        assert_eq!(t.get(0, 1).eval(&p).unwrap(), 0.75);
        assert_eq!(t.get(1, 0).eval(&p).unwrap(), 0.75);
    }

    #[test]
    fn non_killing_vector_warns() {
        let (b, m) = flat_spherical();
        let geo = Geometry::new(&b, &m).unwrap();
        let t = scalar_stress_energy(&geo, &b.chart().parse("1/r").unwrap(), SCALAR_FIELD_SCALE).unwrap();
        let k = VectorField::parse(b.chart(), &["0", "r", "0", "0"]).unwrap();
        let rep = conserved_current(&geo, &k, &t, 1e-10).unwrap();
        assert!(rep.warning.is_some());
        let k = VectorField::parse(b.chart(), &["1", "0", "0", "0"]).unwrap();
        let rep = conserved_current(&geo, &k, &t, 1e-10).unwrap();
        assert!(rep.warning.is_none());
        assert_eq!(rep.killing_residual, 0.0);
    }
}
