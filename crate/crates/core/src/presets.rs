//! Named models, curvature fields and measures, and the declarative specs the
//! configuration layer deserializes into.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::expr::Expr;
use crate::geometry::warp::parse_two_column;
use crate::geometry::{CurvatureField, CurvatureSource, ManifoldModel, Warp};

/// `(sinh r + 0.05 sinh 2r)/1.1`: negatively curved, `K = -(1 + 0.4 cosh r)/(1 + 0.1 cosh r)`,
/// equal to `-2` where `cosh r = 5`.
pub const WARPED_SINH: &str = "(sinh(r) + 0.05*sinh(2*r))/1.1";
/// `r − r³/12 + r⁵/40`: positive curvature `1/2` at the pole, negative beyond `r = 1`.
pub const MIXED_CURVATURE: &str = "r - r^3/12 + r^5/40";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// `euclidean-plane`, `hyperbolic-plane`, `sphere-cap`,
    /// `surface-of-revolution`, `warped-sinh` or `mixed-curvature`.
    pub kind: String,
    /// Warp expression for `surface-of-revolution`.
    #[serde(default)]
    pub warp: Option<String>,
    /// Two-column `r f(r)` table for `surface-of-revolution`.
    #[serde(default)]
    pub warp_table: Option<String>,
    #[serde(default)]
    pub r_max: Option<f64>,
    #[serde(default)]
    pub ode_tolerance: Option<f64>,
    #[serde(default)]
    pub quadrature_tolerance: Option<f64>,
}

impl ModelSpec {
    pub fn named(kind: &str) -> Self {
        Self {
            kind: kind.to_string(),
            warp: None,
            warp_table: None,
            r_max: None,
            ode_tolerance: None,
            quadrature_tolerance: None,
        }
    }

    /// Builds the model; relative table paths resolve against `base`.
    /// Tolerances are multiplied by `tolerance_scale`.
    pub fn build(&self, base: Option<&Path>, tolerance_scale: f64) -> Result<ManifoldModel> {
        let model = match self.kind.as_str() {
            "euclidean-plane" => ManifoldModel::euclidean(self.r_max.unwrap_or(10.0))?,
            "hyperbolic-plane" => ManifoldModel::hyperbolic(self.r_max.unwrap_or(12.0))?,
            "sphere-cap" => ManifoldModel::sphere_cap(self.r_max.unwrap_or(1.5))?,
            "warped-sinh" => warped_sinh(self.r_max.unwrap_or(4.0))?,
            "mixed-curvature" => mixed_curvature(self.r_max.unwrap_or(3.0))?,
            "surface-of-revolution" => {
                let warp = match (&self.warp, &self.warp_table) {
                    (Some(src), None) => Warp::expression(src, "model.warp")?,
                    (None, Some(path)) => {
                        let path = resolve(base, path);
                        let text = std::fs::read_to_string(&path)
                            .map_err(|e| Error::input(format!("cannot read warp table {}: {e}", path.display())))?;
                        let (r, f) = parse_two_column(&text, "model.warp_table")?;
                        Warp::table(r, f)?
                    }
                    _ => {
                        return Err(Error::input(
                            "surface-of-revolution needs exactly one of `warp` or `warp_table`",
                        ))
                    }
                };
                let r_max = match (self.r_max, warp.table_end()) {
                    (Some(r), _) => r,
                    (None, Some(end)) => end,
                    (None, None) => return Err(Error::input("surface-of-revolution needs `r_max`")),
                };
                ManifoldModel::surface_of_revolution(warp, r_max)?
            }
            other => return Err(Error::input(format!("unknown model kind '{other}'"))),
        };
        if self.kind != "surface-of-revolution" && (self.warp.is_some() || self.warp_table.is_some()) {
            return Err(Error::input(format!("model kind '{}' takes no warp", self.kind)));
        }
        let ode = self.ode_tolerance.unwrap_or(model.ode_tolerance()) * tolerance_scale;
        let quad = self.quadrature_tolerance.unwrap_or(model.quadrature_tolerance()) * tolerance_scale;
        model.with_tolerances(ode, quad)
    }
}

pub(crate) fn resolve(base: Option<&Path>, path: &str) -> std::path::PathBuf {
    match base {
        Some(b) if Path::new(path).is_relative() => b.join(path),
        _ => Path::new(path).to_path_buf(),
    }
}

pub fn warped_sinh(r_max: f64) -> Result<ManifoldModel> {
    ManifoldModel::surface_of_revolution(Warp::expression(WARPED_SINH, "warped-sinh")?, r_max)
}

pub fn mixed_curvature(r_max: f64) -> Result<ManifoldModel> {
    ManifoldModel::surface_of_revolution(Warp::expression(MIXED_CURVATURE, "mixed-curvature")?, r_max)
}

/// A constant, `"neg-ricci-min"` (the sharp bound of the model) or a radial
/// expression in `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CurvatureSpec {
    Constant(f64),
    Named(String),
}

impl Default for CurvatureSpec {
    fn default() -> Self {
        CurvatureSpec::Named("neg-ricci-min".into())
    }
}

impl CurvatureSpec {
    pub fn build(&self, model: &ManifoldModel, samples: usize, seed: u64) -> Result<CurvatureField> {
        let source = match self {
            CurvatureSpec::Constant(k) => CurvatureSource::Constant(*k),
            CurvatureSpec::Named(s) if matches!(s.trim(), "neg-ricci-min" | "-ricci_min") => {
                CurvatureSource::NegRicciMin
            }
            CurvatureSpec::Named(s) => CurvatureSource::Radial(Expr::parse(s, "curvature")?),
        };
        Ok(CurvatureField::new(model, source).with_sampling(samples, seed))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub parameters: Vec<(&'static str, &'static str)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Catalog {
    pub models: Vec<CatalogEntry>,
    pub measures: Vec<CatalogEntry>,
    pub curvature: Vec<CatalogEntry>,
}

pub fn catalog() -> Catalog {
    let r_max = |d| ("r_max", d);
    let tol = [
        ("ode_tolerance", "geodesic/Jacobi ODE tolerance (default 1e-10)"),
        ("quadrature_tolerance", "volume quadrature tolerance (default 1e-10)"),
    ];
    let with_tol = |mut v: Vec<(&'static str, &'static str)>| {
        v.extend(tol);
        v
    };
    Catalog {
        models: vec![
            CatalogEntry {
                name: "euclidean-plane",
                description: "flat plane, f(r) = r",
                parameters: with_tol(vec![r_max("chart radius (default 10)")]),
            },
            CatalogEntry {
                name: "hyperbolic-plane",
                description: "curvature -1, f(r) = sinh r",
                parameters: with_tol(vec![r_max("chart radius (default 12)")]),
            },
            CatalogEntry {
                name: "sphere-cap",
                description: "unit sphere cap about the north pole, f(r) = sin r",
                parameters: with_tol(vec![r_max("cap radius below pi/2 (default 1.5)")]),
            },
            CatalogEntry {
                name: "surface-of-revolution",
                description: "metric dr^2 + f(r)^2 dtheta^2 with f(0) = 0, f'(0) = 1",
                parameters: with_tol(vec![
                    ("warp", "expression in r over + - * / ^ sin cos sinh cosh exp"),
                    ("warp_table", "two-column file 'r f(r)', cubic spline"),
                    r_max("chart radius (required with `warp`)"),
                ]),
            },
            CatalogEntry {
                name: "warped-sinh",
                description: "surface of revolution f = (sinh r + 0.05 sinh 2r)/1.1; curvature -2 at r = acosh 5",
                parameters: with_tol(vec![r_max("chart radius (default 4)")]),
            },
            CatalogEntry {
                name: "mixed-curvature",
                description:
                    "surface of revolution f = r - r^3/12 + r^5/40; curvature 1/2 at the pole, negative beyond r = 1",
                parameters: with_tol(vec![r_max("chart radius (default 3)")]),
            },
        ],
        measures: vec![
            CatalogEntry {
                name: "uniform-ball",
                description: "normalized volume on a geodesic ball",
                parameters: vec![
                    ("radius", "ball radius"),
                    ("center", "[x, y] chart point (default pole)"),
                ],
            },
            CatalogEntry {
                name: "annulus",
                description: "normalized volume on a pole-centred annulus",
                parameters: vec![("inner", "inner radius"), ("outer", "outer radius")],
            },
            CatalogEntry {
                name: "radial-profile",
                description: "density proportional to an expression in r, e.g. exp(-r^2/(2*0.5^2))",
                parameters: vec![("density", "nonnegative expression in r"), ("radius", "support radius")],
            },
            CatalogEntry {
                name: "table",
                description: "two-column (r, density) table, linearly interpolated",
                parameters: vec![("path", "file name"), ("rows", "inline [[r, density], ...]")],
            },
        ],
        curvature: vec![
            CatalogEntry {
                name: "neg-ricci-min",
                description: "K_x = -ricci_min(x), the sharp bound of the model",
                parameters: vec![],
            },
            CatalogEntry {
                name: "<number>",
                description: "constant field",
                parameters: vec![],
            },
            CatalogEntry {
                name: "<expression>",
                description: "radial field given as an expression in r",
                parameters: vec![],
            },
        ],
    }
}
