//! Tensor-density fields: components plus an index signature and a weight.

use std::fmt;

use crate::channel::Backend;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::CoordinateChart;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    Up,
    Down,
}

/// Compact signature text, e.g. `"^^_"` for `T^{ab}_c`.
pub fn signature_string(slots: &[Slot]) -> String {
    if slots.is_empty() {
        return "scalar".into();
    }
    slots
        .iter()
        .map(|s| match s {
            Slot::Up => '^',
            Slot::Down => '_',
        })
        .collect()
}

/// Components of a tensor density of weight `w`, flattened row-major
/// (first index slowest). Weight zero is an ordinary tensor.
#[derive(Clone)]
pub struct TensorDensityField<S> {
    chart: CoordinateChart,
    slots: Vec<Slot>,
    weight: f64,
    comps: Vec<S>,
}

impl<S> TensorDensityField<S> {
    pub fn new(chart: CoordinateChart, slots: Vec<Slot>, weight: f64, comps: Vec<S>) -> Result<Self> {
        let expected = chart.dim().pow(slots.len() as u32);
        if comps.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "rank-{} field on a {}-dimensional chart needs {expected} components, got {}",
                slots.len(),
                chart.dim(),
                comps.len()
            )));
        }
        if !weight.is_finite() {
            return Err(Error::InvalidParameter(format!("weight {weight} is not finite")));
        }
        Ok(Self {
            chart,
            slots,
            weight,
            comps,
        })
    }

    pub fn scalar(chart: CoordinateChart, weight: f64, value: S) -> Result<Self> {
        Self::new(chart, Vec::new(), weight, vec![value])
    }

    pub fn chart(&self) -> &CoordinateChart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn components(&self) -> &[S] {
        &self.comps
    }

    pub fn into_components(self) -> Vec<S> {
        self.comps
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.dim() + i)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let dim = self.dim();
        let mut out = vec![0; self.rank()];
        for slot in out.iter_mut().rev() {
            *slot = flat % dim;
            flat /= dim;
        }
        out
    }

    pub fn get(&self, idx: &[usize]) -> &S {
        &self.comps[self.flat_index(idx)]
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn expect_signature(&self, slots: &[Slot], weight: Option<f64>) -> Result<()> {
        if self.slots != slots || weight.is_some_and(|w| w != self.weight) {
            return Err(Error::IndexSignature {
                expected: format!(
                    "{} (w={})",
                    signature_string(slots),
                    weight.map_or("any".into(), |w| w.to_string())
                ),
                found: format!("{} (w={})", signature_string(&self.slots), self.weight),
            });
        }
        Ok(())
    }

    pub fn expect_chart(&self, chart: &CoordinateChart) -> Result<()> {
        if self.chart.same_coordinates(chart) {
            Ok(())
        } else {
            Err(Error::ChartMismatch(format!(
                "field over {:?} used with chart over {:?}",
                self.chart.names(),
                chart.names()
            )))
        }
    }

    /// Same signature and weight, new components.
    pub fn map<T>(&self, f: impl FnMut(&S) -> T) -> TensorDensityField<T> {
        TensorDensityField {
            chart: self.chart.clone(),
            slots: self.slots.clone(),
            weight: self.weight,
            comps: self.comps.iter().map(f).collect(),
        }
    }

    pub fn try_map<T>(&self, f: impl FnMut(&S) -> Result<T>) -> Result<TensorDensityField<T>> {
        Ok(TensorDensityField {
            chart: self.chart.clone(),
            slots: self.slots.clone(),
            weight: self.weight,
            comps: self.comps.iter().map(f).collect::<Result<_>>()?,
        })
    }
}

impl TensorDensityField<Expr> {
    /// Parse components given as formulas in the chart's coordinates.
    pub fn parse<T: AsRef<str>>(chart: &CoordinateChart, slots: Vec<Slot>, weight: f64, srcs: &[T]) -> Result<Self> {
        let comps = srcs
            .iter()
            .map(|s| chart.parse(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(chart.clone(), slots, weight, comps)
    }

    /// Move onto a backend's scalar algebra.
    pub fn lift<B: Backend>(&self, backend: &B) -> Result<TensorDensityField<B::Scalar>> {
        self.expect_chart(backend.chart())?;
        self.try_map(|e| backend.lift(e))
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.comps.iter().map(|e| Ok(e.eval(point)?)).collect()
    }
}

impl<S: fmt::Debug> fmt::Debug for TensorDensityField<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TensorDensityField")
            .field("coordinates", &self.chart.names())
            .field("slots", &signature_string(&self.slots))
            .field("weight", &self.weight)
            .field("components", &self.comps)
            .finish()
    }
}

/// A contravariant vector of weight zero.
///
/// Flux and Gauss-law operations take this type; there is no way to hand them
/// a field with more free indices.
#[derive(Clone, Debug)]
pub struct VectorField<S>(TensorDensityField<S>);

impl<S> VectorField<S> {
    pub fn new(chart: CoordinateChart, comps: Vec<S>) -> Result<Self> {
        Ok(Self(TensorDensityField::new(chart, vec![Slot::Up], 0.0, comps)?))
    }

    pub fn field(&self) -> &TensorDensityField<S> {
        &self.0
    }

    pub fn components(&self) -> &[S] {
        self.0.components()
    }

    pub fn chart(&self) -> &CoordinateChart {
        self.0.chart()
    }

    pub fn into_field(self) -> TensorDensityField<S> {
        self.0
    }
}

impl VectorField<Expr> {
    pub fn parse<T: AsRef<str>>(chart: &CoordinateChart, srcs: &[T]) -> Result<Self> {
        Ok(Self(TensorDensityField::parse(chart, vec![Slot::Up], 0.0, srcs)?))
    }

    pub fn lift<B: Backend>(&self, backend: &B) -> Result<VectorField<B::Scalar>> {
        Ok(VectorField(self.0.lift(backend)?))
    }
}

impl<S> TryFrom<TensorDensityField<S>> for VectorField<S> {
    type Error = Error;

    fn try_from(t: TensorDensityField<S>) -> Result<Self> {
        t.expect_signature(&[Slot::Up], Some(0.0))?;
        Ok(Self(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart3() -> CoordinateChart {
        CoordinateChart::new(["x", "y", "z"], vec![0.0; 3], vec![1.0; 3], vec![false; 3]).unwrap()
    }

    #[test]
    fn component_counts_checked() {
        let c = chart3();
        assert!(TensorDensityField::new(c.clone(), vec![Slot::Up, Slot::Down], 0.0, vec![0.0; 9]).is_ok());
        assert!(TensorDensityField::new(c.clone(), vec![Slot::Up], 0.0, vec![0.0; 9]).is_err());
        assert!(TensorDensityField::new(c, vec![], f64::NAN, vec![0.0]).is_err());
    }

    #[test]
    fn index_round_trip() {
        let c = chart3();
        let t = TensorDensityField::new(c, vec![Slot::Up, Slot::Down, Slot::Down], 1.0, (0..27).collect()).unwrap();
        for flat in 0..27 {
            assert_eq!(t.flat_index(&t.multi_index(flat)), flat);
        }
        assert_eq!(*t.get(&[1, 2, 0]), 15);
    }

    #[test]
    fn vector_conversion_checks_signature() {
        let c = chart3();
        let down = TensorDensityField::new(c.clone(), vec![Slot::Down], 0.0, vec![0.0; 3]).unwrap();
        assert!(matches!(VectorField::try_from(down), Err(Error::IndexSignature { .. })));
        let dens = TensorDensityField::new(c.clone(), vec![Slot::Up], 1.0, vec![0.0; 3]).unwrap();
        assert!(VectorField::try_from(dens).is_err());
        let up = TensorDensityField::new(c, vec![Slot::Up], 0.0, vec![0.0; 3]).unwrap();
        assert!(VectorField::try_from(up).is_ok());
    }
}
