//! Run configuration: a TOML document with flat sections.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use ddlab_core::admissibility::{CheckOptions, DEFAULT_TOL};
use ddlab_core::augmentation::{AugmentationKind, AugmentationSpec, NonlinearMatrix, ScalarFactored, ScalarGeneral, DEFAULT_QUAD_N};
use ddlab_core::diagnostics::DispersiveFluxForm;
use ddlab_core::expr::Expr;
use ddlab_core::nalgebra::DMatrix;
use ddlab_core::solver::{Boundary, Grid1D, SolverConfig};
use ddlab_core::systems::{builtin_model, HyperbolicSystem, PolynomialScalar, StateBox};
use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub augmentation: Option<AugmentationSection>,
    pub eps: Option<f64>,
    pub eps_sequence: Option<Vec<f64>>,
    /// Balance ratio `κ / ν²` for the linear class.
    pub xi: Option<f64>,
    pub xi_sequence: Option<Vec<f64>>,
    /// Base viscosity used with `xi`.
    pub nu: Option<f64>,
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub solver: SolverSection,
    pub initial: Option<InitialSection>,
    #[serde(default)]
    pub admissibility: AdmissibilitySection,
    #[serde(default)]
    pub identity: IdentitySection,
    #[serde(default)]
    pub sweep: SweepSection,
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: Option<String>,
    /// Polynomial coefficients of the flux, lowest degree first.
    pub flux: Option<Vec<f64>>,
    pub entropy: Option<Vec<f64>>,
    /// `[lo, hi]` state interval for an inline model.
    #[serde(rename = "box")]
    pub state_box: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentationSection {
    pub variant: String,
    /// linear_constant: row-major `B`; nonlinear_matrix: row-major `B(v)` expressions;
    /// scalar_factored: `b(u)` expression
    pub b: Option<toml::Value>,
    pub k: Option<Vec<f64>>,
    pub h: Option<Vec<String>>,
    pub h_matrix: Option<Vec<f64>>,
    pub k1: Option<String>,
    pub k2: Option<String>,
    pub s1: Option<String>,
    pub s2: Option<String>,
    pub quad_n: Option<usize>,
    #[serde(default)]
    pub dispersive_flux_form: DispersiveFluxForm,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n_cells: usize,
    pub boundary: Boundary,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub cfl: Option<f64>,
    pub t_end: Option<f64>,
    pub stencil_order: Option<usize>,
    pub record_every: Option<usize>,
    pub snapshot_time: Option<f64>,
    pub max_steps: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSection {
    /// `offset + amplitude · sin(2π wavenumber (x − x_lo) / L)` in every component.
    Sine {
        #[serde(default)]
        offset: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one_usize")]
        wavenumber: usize,
    },
    Riemann { left: Vec<f64>, right: Vec<f64> },
    /// One expression in `x` per component.
    Expression { u: Vec<String> },
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmissibilitySection {
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
    pub n_samples: Option<usize>,
    pub grid_n: Option<usize>,
    pub quad_n: Option<usize>,
    pub v_max: Option<f64>,
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentitySection {
    /// Extra manufactured field, one expression in `x` per component.
    pub field: Option<Vec<String>>,
    pub domain: Option<[f64; 2]>,
    pub n: Option<usize>,
    pub stencil_order: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub theta: Option<String>,
    pub eps_factor: Option<bool>,
    /// Cells per ε; the grid is refined to at least this resolution for each member.
    pub cells_per_eps: Option<f64>,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

pub fn parse_expr(field: &str, src: &str) -> Result<Expr, CliError> {
    Expr::parse(src).map_err(|e| invalid(field, format!("cannot parse '{src}': {e}")))
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        match (&cfg.eps, &cfg.eps_sequence) {
            (Some(_), Some(_)) => return Err(invalid("eps", "give exactly one of eps and eps_sequence")),
            (None, None) => return Err(invalid("eps", "one of eps and eps_sequence is required")),
            _ => {}
        }
        if cfg.xi.is_some() && cfg.xi_sequence.is_some() {
            return Err(invalid("xi", "give at most one of xi and xi_sequence"));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    pub fn system(&self) -> Result<HyperbolicSystem, CliError> {
        let m = &self.model;
        match (&m.name, &m.flux, &m.entropy) {
            (Some(name), None, None) => builtin_model(name).map_err(|e| invalid("model.name", e)),
            (None, Some(flux), Some(entropy)) => {
                let pair = PolynomialScalar::new(flux.clone(), entropy.clone()).map_err(|e| invalid("model", e))?;
                let [lo, hi] = m.state_box.unwrap_or([-3.0, 3.0]);
                if !(hi > lo) {
                    return Err(invalid("model.box", "needs lo < hi"));
                }
                Ok(HyperbolicSystem::new("inline_polynomial", Arc::new(pair), StateBox::new(vec![lo], vec![hi])))
            }
            _ => Err(invalid("model", "give either name or both flux and entropy")),
        }
    }

    /// The single ε of a run, or the first member of a sweep.
    pub fn base_eps(&self) -> f64 {
        self.eps.or_else(|| self.eps_sequence.as_ref().and_then(|s| s.first().copied())).unwrap_or(1.0)
    }

    pub fn augmentation(&self, dim: usize) -> Result<AugmentationSpec, CliError> {
        self.augmentation_with(dim, self.base_eps(), self.xi)
    }

    pub fn augmentation_with(&self, dim: usize, eps: f64, xi: Option<f64>) -> Result<AugmentationSpec, CliError> {
        let a = self.augmentation.as_ref().ok_or_else(|| invalid("augmentation", "section is required"))?;
        let expr_field = |name: &str, v: &Option<String>| -> Result<Expr, CliError> {
            let src = v.as_deref().ok_or_else(|| invalid(&format!("augmentation.{name}"), "is required"))?;
            parse_expr(&format!("augmentation.{name}"), src)
        };
        let matrix = |name: &str, v: &[f64]| -> Result<DMatrix<f64>, CliError> {
            if v.len() != dim * dim {
                return Err(invalid(&format!("augmentation.{name}"), format!("expected {} row-major entries, got {}", dim * dim, v.len())));
            }
            Ok(DMatrix::from_row_slice(dim, dim, v))
        };
        if xi.is_some() && a.variant != "linear_constant" {
            return Err(invalid("xi", "the balance ratio applies to the linear_constant variant only"));
        }
        let kind = match a.variant.as_str() {
            "linear_constant" => {
                if let Some(xi) = xi {
                    if a.b.is_some() || a.k.is_some() {
                        return Err(invalid("xi", "give either xi (with nu) or explicit b and k"));
                    }
                    let nu = self.nu.unwrap_or(1.0);
                    AugmentationKind::LinearConstant {
                        b: DMatrix::identity(dim, dim) * nu,
                        k: DMatrix::identity(dim, dim) * (xi * nu * nu),
                    }
                } else {
                    let b: Vec<f64> = match &a.b {
                        Some(v) => v.clone().try_into().map_err(|e| invalid("augmentation.b", e))?,
                        None => return Err(invalid("augmentation.b", "is required")),
                    };
                    let k = a.k.clone().unwrap_or_else(|| vec![0.0; dim * dim]);
                    AugmentationKind::LinearConstant { b: matrix("b", &b)?, k: matrix("k", &k)? }
                }
            }
            "nonlinear_matrix" => {
                let b: Vec<String> = match &a.b {
                    Some(v) => v.clone().try_into().map_err(|e| invalid("augmentation.b", e))?,
                    None => return Err(invalid("augmentation.b", "is required")),
                };
                let b = b.iter().enumerate().map(|(i, s)| parse_expr(&format!("augmentation.b[{i}]"), s)).collect::<Result<Vec<_>, _>>()?;
                let h = a.h.as_ref().ok_or_else(|| invalid("augmentation.h", "is required"))?;
                let h = h.iter().enumerate().map(|(i, s)| parse_expr(&format!("augmentation.h[{i}]"), s)).collect::<Result<Vec<_>, _>>()?;
                let hm = a.h_matrix.clone().ok_or_else(|| invalid("augmentation.h_matrix", "is required"))?;
                let nm = NonlinearMatrix::new(b, h, matrix("h_matrix", &hm)?).map_err(|e| invalid("augmentation", e))?;
                AugmentationKind::NonlinearMatrix(nm)
            }
            "scalar_factored" => {
                let b: String = match &a.b {
                    Some(v) => v.clone().try_into().map_err(|e| invalid("augmentation.b", e))?,
                    None => return Err(invalid("augmentation.b", "is required")),
                };
                let sf = ScalarFactored::new(parse_expr("augmentation.b", &b)?, expr_field("k1", &a.k1)?, expr_field("k2", &a.k2)?)
                    .map_err(|e| invalid("augmentation", e))?;
                AugmentationKind::ScalarFactored(sf)
            }
            "scalar_general" => {
                let sg = ScalarGeneral::new(expr_field("s1", &a.s1)?, expr_field("s2", &a.s2)?, a.quad_n.unwrap_or(DEFAULT_QUAD_N))
                    .map_err(|e| invalid("augmentation", e))?;
                AugmentationKind::ScalarGeneral(sg)
            }
            other => return Err(invalid("augmentation.variant", format!("unknown variant '{other}'"))),
        };
        AugmentationSpec::new(kind, eps).map_err(|e| invalid("augmentation", e))
    }

    pub fn grid(&self) -> Result<Grid1D, CliError> {
        let g = self.grid.as_ref().ok_or_else(|| invalid("grid", "section is required"))?;
        Grid1D::new(g.x_lo, g.x_hi, g.n_cells, g.boundary).map_err(|e| invalid("grid", e))
    }

    pub fn solver(&self) -> Result<SolverConfig, CliError> {
        let s = &self.solver;
        let d = SolverConfig::default();
        let cfg = SolverConfig {
            cfl: s.cfl.unwrap_or(d.cfl),
            t_end: s.t_end.unwrap_or(d.t_end),
            stencil_order: s.stencil_order.unwrap_or(d.stencil_order),
            record_every: s.record_every.unwrap_or(d.record_every),
            snapshot_time: s.snapshot_time,
            max_steps: s.max_steps.unwrap_or(d.max_steps),
            ..d
        };
        cfg.validate().map_err(|e| invalid("solver", e))?;
        Ok(cfg)
    }

    pub fn check_options(&self, system: &HyperbolicSystem, seed: Option<u64>) -> Result<CheckOptions, CliError> {
        let a = &self.admissibility;
        let domain = match (&a.lo, &a.hi) {
            (Some(lo), Some(hi)) => {
                if lo.len() != system.dim() || hi.len() != system.dim() || lo.iter().zip(hi).any(|(l, h)| !(h > l)) {
                    return Err(invalid("admissibility", "lo and hi must have one entry per component with lo < hi"));
                }
                StateBox::new(lo.clone(), hi.clone())
            }
            (None, None) => system.domain_box.clone(),
            _ => return Err(invalid("admissibility", "give both lo and hi")),
        };
        let mut opts = CheckOptions::new(domain);
        opts.n_samples = a.n_samples.unwrap_or(opts.n_samples);
        opts.grid_n = a.grid_n.unwrap_or(opts.grid_n);
        opts.quad_n = a.quad_n.unwrap_or(opts.quad_n);
        opts.v_max = a.v_max.unwrap_or(opts.v_max);
        opts.tol = a.tol.unwrap_or(DEFAULT_TOL);
        opts.seed = seed;
        Ok(opts)
    }
}
