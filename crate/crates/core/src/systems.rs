//! Hyperbolic systems endowed with a convex entropy pair, the entropy-variable
//! change of coordinates, and the builtin model catalog.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Flux, entropy and entropy flux of a one-dimensional system `u_t + f(u)_x = 0`.
///
/// Implementations are normalized so that `U(0) = 0`, `f(0) = 0`, `F(0) = 0`.
pub trait EntropyPair: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn flux(&self, u: &[f64], out: &mut [f64]);
    /// Row-major N×N Jacobian `Df`.
    fn flux_jacobian(&self, u: &[f64], out: &mut [f64]);
    fn entropy(&self, u: &[f64]) -> f64;
    fn entropy_gradient(&self, u: &[f64], out: &mut [f64]);
    /// Row-major N×N Hessian `D²U`.
    fn entropy_hessian(&self, u: &[f64], out: &mut [f64]);
    fn entropy_flux(&self, u: &[f64]) -> f64;
    /// Largest characteristic speed `max |λ(Df(u))|`.
    fn max_wave_speed(&self, u: &[f64]) -> f64;
    /// Whether `U(u) = |u|²/2`, in which case entropy and conservative variables coincide.
    fn quadratic_entropy(&self) -> bool {
        false
    }
}

/// Axis-aligned compact box in state space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl StateBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        Self { lo, hi }
    }

    pub fn cube(dim: usize, half_width: f64) -> Self {
        Self::new(vec![-half_width; dim], vec![half_width; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (lo, hi))| x >= lo && x <= hi)
    }

    /// Scale each half-width about the box center.
    pub fn inflated(&self, factor: f64) -> Self {
        let (lo, hi) = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(&lo, &hi)| {
                let c = 0.5 * (lo + hi);
                let h = 0.5 * (hi - lo) * factor;
                (c - h, c + h)
            })
            .unzip();
        Self { lo, hi }
    }

    /// Map a point of the unit cube into the box.
    pub fn map_unit(&self, t: &[f64]) -> Vec<f64> {
        t.iter().zip(self.lo.iter().zip(&self.hi)).map(|(t, (lo, hi))| lo + t * (hi - lo)).collect()
    }

    pub fn scale(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(lo, hi)| 0.5 * (hi - lo)).fold(0.0, f64::max)
    }
}

/// A hyperbolic system together with the sampling box standing in for the state domain.
#[derive(Clone, Debug)]
pub struct HyperbolicSystem {
    pub name: String,
    pub pair: Arc<dyn EntropyPair>,
    pub domain_box: StateBox,
}

impl HyperbolicSystem {
    pub fn new(name: impl Into<String>, pair: Arc<dyn EntropyPair>, domain_box: StateBox) -> Self {
        assert_eq!(pair.dim(), domain_box.dim(), "domain box dimension must match the system");
        Self { name: name.into(), pair, domain_box }
    }

    pub fn dim(&self) -> usize {
        self.pair.dim()
    }

    pub fn flux(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.pair.flux(u, &mut out);
        out
    }

    pub fn flux_jacobian(&self, u: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n * n];
        self.pair.flux_jacobian(u, &mut out);
        DMatrix::from_row_slice(n, n, &out)
    }

    pub fn entropy(&self, u: &[f64]) -> f64 {
        self.pair.entropy(u)
    }

    pub fn entropy_gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.pair.entropy_gradient(u, &mut out);
        out
    }

    pub fn entropy_hessian(&self, u: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n * n];
        self.pair.entropy_hessian(u, &mut out);
        DMatrix::from_row_slice(n, n, &out)
    }

    pub fn entropy_flux(&self, u: &[f64]) -> f64 {
        self.pair.entropy_flux(u)
    }

    pub fn max_wave_speed(&self, u: &[f64]) -> f64 {
        self.pair.max_wave_speed(u)
    }

    /// Residual `max_j |∂_j F(u) − (∇U(u)ᵀ Df(u))_j|` with both `∇F` and `Df`
    /// approximated by fourth-order central differences of step `h`.
    pub fn compatibility_residual(&self, u: &[f64], h: f64) -> f64 {
        let n = self.dim();
        let grad_u = self.entropy_gradient(u);
        let mut worst: f64 = 0.0;
        let mut shifted = u.to_vec();
        let mut df = vec![vec![0.0; n]; n]; // df[j] = ∂f/∂u_j
        let mut dflux = vec![0.0; n];
        for j in 0..n {
            let mut f_at = |offset: f64| {
                shifted.copy_from_slice(u);
                shifted[j] += offset;
                (self.flux(&shifted), self.entropy_flux(&shifted))
            };
            let (fm2, em2) = f_at(-2.0 * h);
            let (fm1, em1) = f_at(-h);
            let (fp1, ep1) = f_at(h);
            let (fp2, ep2) = f_at(2.0 * h);
            for a in 0..n {
                df[j][a] = (fm2[a] - 8.0 * fm1[a] + 8.0 * fp1[a] - fp2[a]) / (12.0 * h);
            }
            dflux[j] = (em2 - 8.0 * em1 + 8.0 * ep1 - ep2) / (12.0 * h);
        }
        for j in 0..n {
            let contracted: f64 = (0..n).map(|a| grad_u[a] * df[j][a]).sum();
            worst = worst.max((dflux[j] - contracted).abs());
        }
        worst
    }

    /// Smallest eigenvalue of `D²U(u)`.
    pub fn min_hessian_eigenvalue(&self, u: &[f64]) -> f64 {
        let h = self.entropy_hessian(u);
        let sym = (&h + h.transpose()) * 0.5;
        sym.symmetric_eigenvalues().min()
    }

    /// Check the convexity, compatibility and normalization invariants at the
    /// given sample states.
    pub fn validate(&self, samples: &[Vec<f64>]) -> Result<()> {
        let zero = vec![0.0; self.dim()];
        let f0 = self.flux(&zero);
        if self.entropy(&zero) != 0.0 || self.entropy_flux(&zero) != 0.0 || f0.iter().any(|&x| x != 0.0) {
            return Err(Error::InvalidModel(format!("{}: U(0), f(0), F(0) must vanish", self.name)));
        }
        let h = 1e-4 * self.domain_box.scale().max(1.0);
        for u in samples {
            let lam = self.min_hessian_eigenvalue(u);
            if lam <= 0.0 {
                return Err(Error::InvalidModel(format!(
                    "{}: entropy Hessian not positive definite at {u:?} (min eigenvalue {lam:e})",
                    self.name
                )));
            }
            let r = self.compatibility_residual(u, h);
            if r > 1e-7 {
                return Err(Error::InvalidModel(format!(
                    "{}: entropy flux incompatible with flux at {u:?} (residual {r:e})",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Scalar law with polynomial flux and entropy; the entropy flux is obtained
/// exactly by integrating `U'(u) f'(u)` from zero.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialScalar {
    /// `f(u) = Σ flux[k] u^k`
    pub flux: Vec<f64>,
    /// `U(u) = Σ entropy[k] u^k`
    pub entropy: Vec<f64>,
    /// `F(u) = Σ entropy_flux[k] u^k`, synthesized
    pub entropy_flux: Vec<f64>,
}

fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn poly_derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, &a)| k as f64 * a).collect()
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_antiderivative(c: &[f64]) -> Vec<f64> {
    std::iter::once(0.0).chain(c.iter().enumerate().map(|(k, &a)| a / (k as f64 + 1.0))).collect()
}

impl PolynomialScalar {
    pub fn new(flux: Vec<f64>, entropy: Vec<f64>) -> Result<Self> {
        if flux.first().copied().unwrap_or(0.0) != 0.0 {
            return Err(Error::InvalidModel("flux_poly[0] must be 0 so that f(0) = 0".into()));
        }
        if entropy.first().copied().unwrap_or(0.0) != 0.0 {
            return Err(Error::InvalidModel("entropy_poly[0] must be 0 so that U(0) = 0".into()));
        }
        if entropy.len() < 3 || entropy.iter().skip(2).all(|&c| c == 0.0) {
            return Err(Error::InvalidModel("entropy_poly must have a non-vanishing second derivative".into()));
        }
        let entropy_flux = poly_antiderivative(&poly_mul(&poly_derivative(&entropy), &poly_derivative(&flux)));
        Ok(Self { flux, entropy, entropy_flux })
    }
}

impl EntropyPair for PolynomialScalar {
    fn dim(&self) -> usize {
        1
    }
    fn flux(&self, u: &[f64], out: &mut [f64]) {
        out[0] = poly_eval(&self.flux, u[0]);
    }
    fn flux_jacobian(&self, u: &[f64], out: &mut [f64]) {
        out[0] = poly_eval(&poly_derivative(&self.flux), u[0]);
    }
    fn entropy(&self, u: &[f64]) -> f64 {
        poly_eval(&self.entropy, u[0])
    }
    fn entropy_gradient(&self, u: &[f64], out: &mut [f64]) {
        out[0] = poly_eval(&poly_derivative(&self.entropy), u[0]);
    }
    fn entropy_hessian(&self, u: &[f64], out: &mut [f64]) {
        out[0] = poly_eval(&poly_derivative(&poly_derivative(&self.entropy)), u[0]);
    }
    fn entropy_flux(&self, u: &[f64]) -> f64 {
        poly_eval(&self.entropy_flux, u[0])
    }
    fn max_wave_speed(&self, u: &[f64]) -> f64 {
        poly_eval(&poly_derivative(&self.flux), u[0]).abs()
    }
    fn quadratic_entropy(&self) -> bool {
        self.entropy.len() >= 3 && self.entropy[1] == 0.0 && self.entropy[2] == 0.5 && self.entropy[3..].iter().all(|&c| c == 0.0)
    }
}

/// p-system of nonlinear elasticity in (strain w, velocity s):
/// `w_t − s_x = 0`, `s_t − σ(w)_x = 0` with `σ(w) = w + w³`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ElasticityPSystem;

impl ElasticityPSystem {
    pub fn stress(w: f64) -> f64 {
        w + w * w * w
    }

    pub fn stress_derivative(w: f64) -> f64 {
        1.0 + 3.0 * w * w
    }

    /// Stored energy `W(w)`, `W' = σ`.
    pub fn stored_energy(w: f64) -> f64 {
        0.5 * w * w + 0.25 * w.powi(4)
    }
}

impl EntropyPair for ElasticityPSystem {
    fn dim(&self) -> usize {
        2
    }
    fn flux(&self, u: &[f64], out: &mut [f64]) {
        out[0] = -u[1];
        out[1] = -Self::stress(u[0]);
    }
    fn flux_jacobian(&self, u: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&[0.0, -1.0, -Self::stress_derivative(u[0]), 0.0]);
    }
    fn entropy(&self, u: &[f64]) -> f64 {
        0.5 * u[1] * u[1] + Self::stored_energy(u[0])
    }
    fn entropy_gradient(&self, u: &[f64], out: &mut [f64]) {
        out[0] = Self::stress(u[0]);
        out[1] = u[1];
    }
    fn entropy_hessian(&self, u: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&[Self::stress_derivative(u[0]), 0.0, 0.0, 1.0]);
    }
    fn entropy_flux(&self, u: &[f64]) -> f64 {
        -u[1] * Self::stress(u[0])
    }
    fn max_wave_speed(&self, u: &[f64]) -> f64 {
        Self::stress_derivative(u[0]).sqrt()
    }
}

pub const BUILTIN_MODELS: [&str; 3] = ["scalar_cubic", "scalar_burgers", "elasticity_p_system"];

/// Construct one of the builtin models with the default domain box `[−3, 3]^N`.
pub fn builtin_model(name: &str) -> Result<HyperbolicSystem> {
    let pair: Arc<dyn EntropyPair> = match name {
        "scalar_cubic" => Arc::new(PolynomialScalar::new(vec![0.0, 0.0, 0.0, 1.0], vec![0.0, 0.0, 0.5])?),
        "scalar_burgers" => Arc::new(PolynomialScalar::new(vec![0.0, 0.0, 0.5], vec![0.0, 0.0, 0.5])?),
        "elasticity_p_system" => Arc::new(ElasticityPSystem),
        other => return Err(Error::UnknownModel(other.to_string())),
    };
    let dim = pair.dim();
    Ok(HyperbolicSystem::new(name, pair, StateBox::cube(dim, 3.0)))
}

/// Inverse of the entropy gradient by damped Newton iteration.
#[derive(Clone, Debug)]
pub struct EntropyMap {
    pub system: HyperbolicSystem,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl EntropyMap {
    pub fn new(system: HyperbolicSystem) -> Self {
        Self { system, newton_tol: 1e-13, newton_max_iter: 50 }
    }

    pub fn to_entropy(&self, u: &[f64]) -> Vec<f64> {
        self.system.entropy_gradient(u)
    }

    /// Solve `∇U(u) = v` for `u`, starting from the center of the domain box.
    pub fn from_entropy(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.system.dim();
        let b = &self.system.domain_box;
        let mut u: Vec<f64> = b.lo.iter().zip(&b.hi).map(|(lo, hi)| 0.5 * (lo + hi)).collect();
        let tol = self.newton_tol * (1.0 + norm(v));
        let residual = |u: &[f64]| -> Vec<f64> {
            self.system.entropy_gradient(u).iter().zip(v).map(|(g, v)| g - v).collect()
        };
        let mut r = residual(&u);
        let mut rnorm = norm(&r);
        for _ in 0..self.newton_max_iter {
            if rnorm <= tol {
                return Ok(u);
            }
            let hess = self.system.entropy_hessian(&u);
            let step = hess
                .lu()
                .solve(&DVector::from_column_slice(&r))
                .ok_or_else(|| Error::NoConvergence(format!("singular entropy Hessian at {u:?}")))?;
            // halve the step until the residual decreases
            let mut lambda = 1.0;
            loop {
                let trial: Vec<f64> = (0..n).map(|a| u[a] - lambda * step[a]).collect();
                let rt = residual(&trial);
                let rt_norm = norm(&rt);
                if rt_norm < rnorm || lambda < 1e-8 {
                    u = trial;
                    r = rt;
                    rnorm = rt_norm;
                    break;
                }
                lambda *= 0.5;
            }
        }
        if rnorm <= tol {
            Ok(u)
        } else {
            Err(Error::NoConvergence(format!(
                "entropy inversion at v = {v:?}: residual {rnorm:e} after {} iterations",
                self.newton_max_iter
            )))
        }
    }

    /// `(f*(v), U*(v), F*(v))`, the flux, entropy and entropy flux expressed in entropy variables.
    pub fn starred_quantities(&self, v: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
        let u = self.from_entropy(v)?;
        Ok((self.system.flux(&u), self.system.entropy(&u), self.system.entropy_flux(&u)))
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug)]
    struct CoshEntropy;

    // Burgers flux with U = cosh(u) − 1; only the entropy map is exercised.
    impl EntropyPair for CoshEntropy {
        fn dim(&self) -> usize {
            1
        }
        fn flux(&self, u: &[f64], out: &mut [f64]) {
            out[0] = 0.5 * u[0] * u[0];
        }
        fn flux_jacobian(&self, u: &[f64], out: &mut [f64]) {
            out[0] = u[0];
        }
        fn entropy(&self, u: &[f64]) -> f64 {
            u[0].cosh() - 1.0
        }
        fn entropy_gradient(&self, u: &[f64], out: &mut [f64]) {
            out[0] = u[0].sinh();
        }
        fn entropy_hessian(&self, u: &[f64], out: &mut [f64]) {
            out[0] = u[0].cosh();
        }
        fn entropy_flux(&self, u: &[f64]) -> f64 {
            // F' = u sinh(u)
            u[0] * u[0].cosh() - u[0].sinh()
        }
        fn max_wave_speed(&self, u: &[f64]) -> f64 {
            u[0].abs()
        }
    }

    fn bisect_sinh(target: f64) -> f64 {
        let (mut lo, mut hi) = (-10.0_f64, 10.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid.sinh() < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn quadratic_entropy_maps_are_identity() {
        let cubic = EntropyMap::new(builtin_model("scalar_cubic").unwrap());
        assert_eq!(cubic.to_entropy(&[3.0]), vec![3.0]);
        assert_eq!(cubic.to_entropy(&[-1.5]), vec![-1.5]);
        assert!((cubic.from_entropy(&[2.5]).unwrap()[0] - 2.5).abs() < 1e-13);
        let p = EntropyMap::new(builtin_model("elasticity_p_system").unwrap());
        assert_eq!(p.to_entropy(&[0.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn cosh_entropy_inverse_matches_bisection() {
        let sys = HyperbolicSystem::new("cosh", Arc::new(CoshEntropy), StateBox::cube(1, 3.0));
        let map = EntropyMap::new(sys);
        let v = 1.0_f64.sinh();
        let oracle = bisect_sinh(v);
        assert!((oracle - 1.0).abs() < 1e-14);
        let u = map.from_entropy(&[v]).unwrap();
        assert!((u[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn from_entropy_reports_no_convergence() {
        let mut map = EntropyMap::new(builtin_model("elasticity_p_system").unwrap());
        map.newton_max_iter = 1;
        let err = map.from_entropy(&[500.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NoConvergence(_)));
    }

    #[test]
    fn starred_quantities_of_builtins() {
        let cubic = EntropyMap::new(builtin_model("scalar_cubic").unwrap());
        let (f, u, ff) = cubic.starred_quantities(&[2.0]).unwrap();
        assert!((f[0] - 8.0).abs() < 1e-12 && (u - 2.0).abs() < 1e-12 && (ff - 12.0).abs() < 1e-11);
        let (f, u, ff) = cubic.starred_quantities(&[0.0]).unwrap();
        assert_eq!((f[0], u, ff), (0.0, 0.0, 0.0));
        let burgers = EntropyMap::new(builtin_model("scalar_burgers").unwrap());
        let (f, u, ff) = burgers.starred_quantities(&[1.0]).unwrap();
        assert!((f[0] - 0.5).abs() < 1e-13 && (u - 0.5).abs() < 1e-13 && (ff - 1.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn builtin_values() {
        let cubic = builtin_model("scalar_cubic").unwrap();
        assert_eq!(cubic.flux(&[1.0]), vec![1.0]);
        assert_eq!(cubic.entropy(&[1.0]), 0.5);
        assert_eq!(cubic.entropy_flux(&[1.0]), 0.75);
        let p = builtin_model("elasticity_p_system").unwrap();
        assert_eq!(p.flux(&[1.0, 1.0]), vec![-1.0, -2.0]);
        assert_eq!(p.entropy(&[1.0, 1.0]), 1.25);
        assert!(matches!(builtin_model("euler"), Err(Error::UnknownModel(_))));
    }

    #[test]
    fn polynomial_entropy_flux_is_synthesized() {
        // Burgers with U = u²/2 + u⁴/12: F' = (u + u³/3) u
        let p = PolynomialScalar::new(vec![0.0, 0.0, 0.5], vec![0.0, 0.0, 0.5, 0.0, 1.0 / 12.0]).unwrap();
        let u = 1.3_f64;
        let expected = u.powi(3) / 3.0 + u.powi(5) / 15.0;
        assert!((p.entropy_flux(&[u]) - expected).abs() < 1e-14);
        assert!(!p.quadratic_entropy());
        assert!(PolynomialScalar::new(vec![1.0, 1.0], vec![0.0, 0.0, 0.5]).is_err());
        assert!(PolynomialScalar::new(vec![0.0, 1.0], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn inflated_box() {
        let b = StateBox::cube(2, 3.0).inflated(1.5);
        assert_eq!(b.lo, vec![-4.5, -4.5]);
        assert!(b.contains(&[4.4, -4.5]));
        assert!(!b.contains(&[4.6, 0.0]));
    }
}
