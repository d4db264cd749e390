//! Run configuration: TOML file plus command-line overrides.

use std::path::PathBuf;
use std::sync::Arc;

use grcalc::channel::random_points;
use grcalc::{Analytic, CoordinateChart, FdOrder, GridSpec, MetricField, Preset, Quadrature, Signature};
use serde::Deserialize;

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recipe {
    Christoffel,
    Divergence,
    AntisymDiv,
    DensityCov,
    Transform,
    Killing,
    Current,
    GaussCheck,
    Mass,
}

impl Recipe {
    pub fn name(self) -> &'static str {
        match self {
            Recipe::Christoffel => "christoffel",
            Recipe::Divergence => "divergence",
            Recipe::AntisymDiv => "antisym-div",
            Recipe::DensityCov => "density-cov",
            Recipe::Transform => "transform",
            Recipe::Killing => "killing",
            Recipe::Current => "current",
            Recipe::GaussCheck => "gauss-check",
            Recipe::Mass => "mass",
        }
    }

    /// Assertion tolerance when neither the file nor the flags set one.
    pub fn default_tolerance(self, sampled: bool) -> f64 {
        if sampled {
            return 1e-4;
        }
        match self {
            Recipe::Divergence | Recipe::AntisymDiv => 1e-8,
            Recipe::Current => 1e-9,
            Recipe::GaussCheck | Recipe::Mass => 1e-6,
            _ => 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureName {
    #[default]
    Trapezoid,
    Simpson,
}

impl From<QuadratureName> for Quadrature {
    fn from(q: QuadratureName) -> Self {
        match q {
            QuadratureName::Trapezoid => Quadrature::Trapezoid,
            QuadratureName::Simpson => Quadrature::Simpson,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub recipe: Recipe,
    pub tolerance: Option<f64>,
    /// Finite-difference order; absent means analytic derivatives.
    pub order: Option<usize>,
    #[serde(default)]
    pub quadrature: QuadratureName,
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub metric: MetricBlock,
    pub axes: Vec<AxisBlock>,
    #[serde(default)]
    pub fields: FieldBlock,
    pub map: Option<MapBlock>,
    pub region: Option<RegionBlock>,
    #[serde(default)]
    pub mass: MassBlock,
}

fn default_probes() -> usize {
    64
}

fn default_seed() -> u64 {
    1
}

fn default_points() -> usize {
    17
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricBlock {
    pub preset: Option<String>,
    pub mass: Option<f64>,
    pub alpha: Option<String>,
    pub a: Option<String>,
    /// Full component table, row by row.
    pub components: Option<Vec<Vec<String>>>,
    pub signature: Option<SignatureSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SignatureSpec {
    Named(String),
    Counts([usize; 2]),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisBlock {
    pub name: String,
    pub min: f64,
    pub max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub periodic: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldBlock {
    pub vector: Option<Vec<String>>,
    pub killing: Option<Vec<String>>,
    pub scalar: Option<String>,
    /// Scale of the scalar-field stress-energy; defaults to `1/(4 pi)`.
    pub scalar_scale: Option<f64>,
    pub antisymmetric: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    pub density: Option<DensityBlock>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityBlock {
    /// `"up"` or `"down"` per index.
    #[serde(default)]
    pub slots: Vec<String>,
    #[serde(default)]
    pub weight: f64,
    /// Components in row-major order.
    pub components: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapBlock {
    pub axes: Vec<AxisBlock>,
    pub forward: Option<Vec<String>>,
    pub inverse: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionBlock {
    /// Per-axis `[lo, hi]`; `lo == hi` collapses the axis to a slice.
    pub bounds: Vec<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassBlock {
    pub prefactor: Option<f64>,
    pub trace_coefficient: Option<f64>,
    pub orientation: Option<f64>,
    pub killing_cap: Option<f64>,
}

/// Command-line overrides.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub tolerance: Option<f64>,
    pub resolution: Option<usize>,
    pub order: Option<usize>,
}

/// Everything a recipe needs, validated.
pub struct Setup {
    pub config: RunConfig,
    pub chart: CoordinateChart,
    pub metric: MetricField,
    pub grid: Arc<GridSpec>,
    pub order: Option<FdOrder>,
    pub tolerance: f64,
}

impl Setup {
    pub fn load(text: &str, overrides: &Overrides) -> Result<Self, Failure> {
        let mut config: RunConfig = toml::from_str(text).map_err(|e| Failure::Config(e.to_string()))?;
        if let Some(o) = &overrides.output {
            config.output = Some(o.clone());
        }
        if let Some(n) = overrides.resolution {
            for axis in &mut config.axes {
                axis.points = n;
            }
        }
        if overrides.order.is_some() {
            config.order = overrides.order;
        }
        let order = config.order.map(FdOrder::from_order).transpose().map_err(config_error("order"))?;
        let tolerance = overrides
            .tolerance
            .or(config.tolerance)
            .unwrap_or_else(|| config.recipe.default_tolerance(order.is_some()));
        if !(tolerance.is_finite() && tolerance >= 0.0) {
            return Err(Failure::Config(format!("tolerance {tolerance} must be finite and non-negative")));
        }
        if config.probes == 0 {
            return Err(Failure::Config("probes must be positive".into()));
        }

        let preset = match &config.metric.preset {
            Some(name) => Some(
                Preset::by_name(name, config.metric.mass, config.metric.alpha.as_deref(), config.metric.a.as_deref())
                    .map_err(config_error("metric"))?,
            ),
            None => None,
        };
        let chart = build_chart(&config.axes).map_err(config_error("axes"))?;
        let metric = match (&preset, &config.metric.components) {
            (Some(_), Some(_)) => {
                return Err(Failure::Config("metric: give either a preset or components, not both".into()))
            }
            (Some(p), None) => {
                let chart = p
                    .chart(
                        &config.axes.iter().map(|a| (a.min, a.max)).collect::<Vec<_>>(),
                        &config.axes.iter().map(|a| a.periodic).collect::<Vec<_>>(),
                    )
                    .map_err(config_error("axes"))?;
                p.metric(&chart).map_err(config_error("metric"))?
            }
            (None, Some(table)) => {
                let signature = match &config.metric.signature {
                    None => return Err(Failure::Config("metric: components need a signature".into())),
                    Some(SignatureSpec::Counts([n, p])) => Signature::new(*n, *p),
                    Some(SignatureSpec::Named(s)) => match s.as_str() {
                        "lorentzian" => Signature::lorentzian(chart.dim()),
                        "riemannian" => Signature::riemannian(chart.dim()),
                        other => return Err(Failure::Config(format!("metric: unknown signature `{other}`"))),
                    },
                };
                MetricField::parse(chart.clone(), table, signature).map_err(config_error("metric.components"))?
            }
            (None, None) => return Err(Failure::Config("metric: needs a preset or components".into())),
        };
        let chart = metric.chart().clone();
        let grid = GridSpec::new(chart.clone(), config.axes.iter().map(|a| a.points).collect())
            .map_err(config_error("axes"))?;
        Ok(Self {
            config,
            chart,
            metric,
            grid: Arc::new(grid),
            order,
            tolerance,
        })
    }

    pub fn analytic(&self) -> Result<Analytic, Failure> {
        let probes = random_points(&self.chart, self.config.probes, self.config.seed);
        Analytic::with_probes(self.chart.clone(), probes).map_err(config_error("probes"))
    }

    pub fn quadrature(&self) -> Quadrature {
        self.config.quadrature.into()
    }
}

pub fn build_chart(axes: &[AxisBlock]) -> grcalc::Result<CoordinateChart> {
    CoordinateChart::new(
        axes.iter().map(|a| a.name.clone()),
        axes.iter().map(|a| a.min).collect(),
        axes.iter().map(|a| a.max).collect(),
        axes.iter().map(|a| a.periodic).collect(),
    )
}

/// Wrap a library error met while reading the config.
pub fn config_error(context: &'static str) -> impl Fn(grcalc::Error) -> Failure {
    move |e| Failure::Config(format!("{context}: {e}"))
}
