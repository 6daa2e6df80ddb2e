//! Augmentation terms `S[v]` of the model `u_t + f(u)_x = (S[v])_x`, their
//! entropy dissipation `D[v]`, and the entropy-flux corrections
//! `F_diff`, `F_disp` entering `U(u)_t + (F + F_diff + F_disp)_x = D`.
//!
//! All pointwise formulas take a [`PointJet`] carrying rescaled derivatives
//! `ε v_x` and `ε² v_xx`, so most of them are free of `ε`. The matrix classes
//! are stated in entropy variables, the scalar classes in conservative
//! variables of a scalar law with quadratic entropy (where the two coincide).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::expr::{self, Env, Expr, Var};
use crate::quadrature::UnitRule;
use crate::scalar::Scalar;
use crate::systems::HyperbolicSystem;

/// Default number of Gauss–Legendre nodes per axis for the `S̄₂` double integral.
pub const DEFAULT_QUAD_N: usize = 16;

/// State and rescaled derivatives at one point: `(v, ε v_x, ε² v_xx)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointJet<T = f64> {
    pub v: Vec<T>,
    pub dv: Vec<T>,
    pub ddv: Vec<T>,
}

impl<T: Scalar> PointJet<T> {
    pub fn new(v: Vec<T>, dv: Vec<T>, ddv: Vec<T>) -> Self {
        Self { v, dv, ddv }
    }

    /// Jet of a constant field.
    pub fn constant(v: Vec<T>) -> Self {
        let n = v.len();
        Self { v, dv: vec![T::zero(); n], ddv: vec![T::zero(); n] }
    }

    /// Scalar jet `(u, ε u_x, ε² u_xx)`.
    pub fn scalar(u: T, du: T, ddu: T) -> Self {
        Self { v: vec![u], dv: vec![du], ddv: vec![ddu] }
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    fn is_consistent(&self) -> bool {
        self.dv.len() == self.v.len() && self.ddv.len() == self.v.len()
    }
}

/// Which variables an augmentation class is written in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variables {
    Entropy,
    Conservative,
}

/// `ε (B(v) v_x)_x + ε² (∇h(v)ᵀ H h(v)_xx)_x`.
#[derive(Clone, Debug)]
pub struct NonlinearMatrix {
    n: usize,
    /// `B(v)`, row-major N×N
    b: Vec<Expr>,
    h: Vec<Expr>,
    /// `∂h_a/∂v_b` at `[a * n + b]`
    grad_h: Vec<Expr>,
    /// `∂²h_a/∂v_b∂v_c` at `[(a * n + b) * n + c]`
    hess_h: Vec<Expr>,
    hmat: DMatrix<f64>,
    /// `φ(v) = vᵀK(v)v` with its gradient and Hessian, for the closed K/L flux form
    phi_grad: Vec<Expr>,
    phi_hess: Vec<Expr>,
}

fn entropy_var(n: usize, b: usize) -> Var {
    if n == 1 {
        Var::V
    } else {
        Var::Vi(b as u8 + 1)
    }
}

fn check_vars(e: &Expr, allowed: &[Var], what: &str) -> Result<()> {
    match e.variables().into_iter().find(|v| !allowed.contains(v)) {
        Some(bad) => Err(Error::InvalidAugmentation(format!("{what} may not depend on '{bad}'"))),
        None => Ok(()),
    }
}

impl NonlinearMatrix {
    /// `b`: row-major N×N entries of `B(v)`; `h`: the N components of `h(v)`;
    /// `hmat`: constant N×N matrix `H`. Derivatives of `h` are taken symbolically.
    pub fn new(b: Vec<Expr>, h: Vec<Expr>, hmat: DMatrix<f64>) -> Result<Self> {
        let n = h.len();
        if n == 0 || b.len() != n * n || hmat.nrows() != n || hmat.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "nonlinear matrix class needs B with N² = {} entries and H of size {n}×{n}",
                n * n
            )));
        }
        // N = 1 functions may be written in `v` or `v1`; normalize to `v`
        let (b, h) = if n == 1 {
            let v = Expr::var(Var::V);
            (
                b.iter().map(|e| e.substitute(Var::Vi(1), &v)).collect::<Vec<_>>(),
                h.iter().map(|e| e.substitute(Var::Vi(1), &v)).collect::<Vec<_>>(),
            )
        } else {
            (b, h)
        };
        let allowed: Vec<Var> = (0..n).map(|k| entropy_var(n, k)).collect();
        for e in b.iter().chain(&h) {
            check_vars(e, &allowed, "B(v) and h(v)")?;
        }
        let mut grad_h = Vec::with_capacity(n * n);
        let mut hess_h = Vec::with_capacity(n * n * n);
        for ha in &h {
            for bi in 0..n {
                grad_h.push(ha.diff(entropy_var(n, bi)));
            }
        }
        for a in 0..n {
            for bi in 0..n {
                for c in 0..n {
                    hess_h.push(grad_h[a * n + bi].diff(entropy_var(n, c)));
                }
            }
        }
        // φ(v) = Σ_ab v_a K_ab(v) v_b with K = ∇hᵀ H ∇h
        let mut phi = Expr::constant(0.0);
        for a in 0..n {
            for bi in 0..n {
                let mut k_ab = Expr::constant(0.0);
                for c in 0..n {
                    for d in 0..n {
                        let coeff = hmat[(c, d)];
                        if coeff != 0.0 {
                            let term = expr::mul(
                                expr::mul(grad_h[c * n + a].clone(), Expr::constant(coeff)),
                                grad_h[d * n + bi].clone(),
                            );
                            k_ab = expr::add(k_ab, term);
                        }
                    }
                }
                let va = Expr::var(entropy_var(n, a));
                let vb = Expr::var(entropy_var(n, bi));
                phi = expr::add(phi, expr::mul(expr::mul(va, k_ab), vb));
            }
        }
        let phi_grad: Vec<Expr> = (0..n).map(|a| phi.diff(entropy_var(n, a))).collect();
        let phi_hess: Vec<Expr> = (0..n * n).map(|i| phi_grad[i / n].diff(entropy_var(n, i % n))).collect();
        Ok(Self { n, b, h, grad_h, hess_h, hmat, phi_grad, phi_hess })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn h_matrix(&self) -> &DMatrix<f64> {
        &self.hmat
    }

    pub fn h(&self) -> &[Expr] {
        &self.h
    }

    fn eval_all<T: Scalar>(exprs: &[Expr], v: &[T]) -> Vec<T> {
        let env = Env::entropy_vector(v);
        exprs.iter().map(|e| e.eval(&env)).collect()
    }

    /// `B(v)`, row-major.
    pub fn b_at<T: Scalar>(&self, v: &[T]) -> Vec<T> {
        Self::eval_all(&self.b, v)
    }

    /// `∇h(v)`, row-major with `[a * n + b] = ∂h_a/∂v_b`.
    pub fn grad_h_at<T: Scalar>(&self, v: &[T]) -> Vec<T> {
        Self::eval_all(&self.grad_h, v)
    }

    pub fn hess_h_at<T: Scalar>(&self, v: &[T]) -> Vec<T> {
        Self::eval_all(&self.hess_h, v)
    }

    /// `B(v)` as a matrix, for admissibility checks.
    pub fn b_matrix(&self, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.b_at(v))
    }

    /// `K(v) = ∇h(v)ᵀ H ∇h(v)`.
    pub fn k_of_v(&self, v: &[f64]) -> DMatrix<f64> {
        let g = DMatrix::from_row_slice(self.n, self.n, &self.grad_h_at(v));
        g.transpose() * &self.hmat * g
    }

    /// `L(v) = (3/2) K(v) + ∇²h(v, ·)ᵀ H ∇h(v)`.
    ///
    /// The second-order term is only unambiguous for a scalar entropy variable
    /// (`h'' H h'`); for N > 1 it is supported when `h` has vanishing Hessian.
    pub fn l_of_v(&self, v: &[f64]) -> Result<DMatrix<f64>> {
        let mut l = self.k_of_v(v) * 1.5;
        if self.hess_h.iter().all(Expr::is_zero) {
            return Ok(l);
        }
        if self.n != 1 {
            return Err(Error::DimensionMismatch(
                "L(v) with a nonlinear h is only defined for a scalar entropy variable".into(),
            ));
        }
        let g = self.grad_h_at(v)[0];
        let hh = self.hess_h_at(v)[0];
        l[(0, 0)] += hh * self.hmat[(0, 0)] * g;
        Ok(l)
    }

    /// `ε² h_x` and `ε² h_xx` from the jet (as `∇h·dv` and `∇h·ddv + ∇²h(dv, dv)`).
    fn h_derivatives<T: Scalar>(&self, jet: &PointJet<T>, g: &[T]) -> (Vec<T>, Vec<T>) {
        let n = self.n;
        let hess = self.hess_h_at(&jet.v);
        let mut hx = vec![T::zero(); n];
        let mut hxx = vec![T::zero(); n];
        for a in 0..n {
            for b in 0..n {
                hx[a] += g[a * n + b] * jet.dv[b];
                hxx[a] += g[a * n + b] * jet.ddv[b];
                for c in 0..n {
                    hxx[a] += hess[(a * n + b) * n + c] * jet.dv[b] * jet.dv[c];
                }
            }
        }
        (hx, hxx)
    }

    fn h_times<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|a| {
                let mut acc = T::zero();
                for b in 0..self.n {
                    acc += x[b].scale(self.hmat[(a, b)]);
                }
                acc
            })
            .collect()
    }

    /// Dispersive entropy flux in the closed form `−½ (vᵀK(v)v)_xx + v_xᵀ L(v) v_x`
    /// (ε-rescaled). Coincides with the balance-derived flux when `h` is affine;
    /// kept for comparison since it fails the entropy balance for nonlinear `h`.
    pub fn dispersive_flux_kl_form<T: Scalar>(&self, jet: &PointJet<T>) -> Result<T> {
        let n = self.n;
        if self.n != 1 && !self.hess_h.iter().all(Expr::is_zero) {
            return Err(Error::DimensionMismatch("closed K/L form requires N = 1 or affine h".into()));
        }
        let env = Env::entropy_vector(&jet.v);
        let mut phi_xx = T::zero();
        for a in 0..n {
            phi_xx += self.phi_grad[a].eval(&env) * jet.ddv[a];
            for b in 0..n {
                phi_xx += self.phi_hess[a * n + b].eval(&env) * jet.dv[a] * jet.dv[b];
            }
        }
        // v_xᵀ L v_x, with L evaluated generically
        let g = self.grad_h_at(&jet.v);
        let gdv: Vec<T> = (0..n).map(|a| (0..n).fold(T::zero(), |acc, b| acc + g[a * n + b] * jet.dv[b])).collect();
        let hgdv = self.h_times(&gdv);
        let mut quad = (0..n).fold(T::zero(), |acc, a| acc + gdv[a] * hgdv[a]).scale(1.5);
        if n == 1 {
            let hh = self.hess_h_at(&jet.v)[0];
            quad += hh.scale(self.hmat[(0, 0)]) * g[0] * jet.dv[0] * jet.dv[0];
        }
        Ok(quad - phi_xx.scale(0.5))
    }
}

/// Scalar `ε (B(u) u_x)_x + ε² (k₁(u) (k₂(u) u_x)_x)_x`.
#[derive(Clone, Debug)]
pub struct ScalarFactored {
    b: Expr,
    k1: Expr,
    k2: Expr,
    dk2: Expr,
    /// `k₁ k₂` and its u-derivative
    k1k2: Expr,
    dk1k2: Expr,
}

impl ScalarFactored {
    pub fn new(b: Expr, k1: Expr, k2: Expr) -> Result<Self> {
        for (e, name) in [(&b, "B(u)"), (&k1, "k1(u)"), (&k2, "k2(u)")] {
            check_vars(e, &[Var::U], name)?;
        }
        let dk2 = k2.diff(Var::U);
        let k1k2 = expr::mul(k1.clone(), k2.clone());
        let dk1k2 = k1k2.diff(Var::U);
        Ok(Self { b, k1, k2, dk2, k1k2, dk1k2 })
    }

    pub fn b(&self, u: f64) -> f64 {
        self.b.eval_uv(u, 0.0)
    }

    pub fn k1(&self, u: f64) -> f64 {
        self.k1.eval_uv(u, 0.0)
    }

    pub fn k2(&self, u: f64) -> f64 {
        self.k2.eval_uv(u, 0.0)
    }

    /// First-order part `S₁(u, w) = B(u) w + k₁(u) k₂'(u) w²` of the equivalent general form.
    fn s1<T: Scalar>(&self, u: T, w: T) -> T {
        let env = Env::uv(u, w);
        self.b.eval(&env) * w + self.k1.eval(&env) * self.dk2.eval(&env) * w * w
    }

    /// `S₂(u) = k₁(u) k₂(u)`.
    fn s2<T: Scalar>(&self, u: T) -> T {
        self.k1k2.eval(&Env::uv(u, T::zero()))
    }
}

/// Scalar `(S₁(u, ε u_x) + ε² u_xx S₂(u, ε u_x))_x`; expressions in `u` and `v`,
/// where `v` stands for the rescaled gradient `ε u_x`.
#[derive(Clone, Debug)]
pub struct ScalarGeneral {
    s1: Expr,
    s2: Expr,
    ds1_dv: Expr,
    ds2_du: Expr,
    rule: UnitRule,
}

impl ScalarGeneral {
    pub fn new(s1: Expr, s2: Expr, quad_n: usize) -> Result<Self> {
        for (e, name) in [(&s1, "S1(u, v)"), (&s2, "S2(u, v)")] {
            check_vars(e, &[Var::U, Var::V], name)?;
        }
        if quad_n < 2 {
            return Err(Error::InvalidAugmentation("quad_n must be at least 2".into()));
        }
        // normalization: the term must vanish on constant fields
        for u in [-2.0, -0.5, 0.0, 0.7, 1.9] {
            let s = s1.eval_uv(u, 0.0);
            if s != 0.0 {
                return Err(Error::InvalidAugmentation(format!("S1(u, 0) must vanish; S1({u}, 0) = {s}")));
            }
        }
        let ds1_dv = s1.diff(Var::V);
        let ds2_du = s2.diff(Var::U);
        Ok(Self { s1, s2, ds1_dv, ds2_du, rule: UnitRule::gauss_legendre(quad_n) })
    }

    pub fn quad_n(&self) -> usize {
        self.rule.len()
    }

    pub fn s1<T: Scalar>(&self, u: T, v: T) -> T {
        self.s1.eval(&Env::uv(u, v))
    }

    pub fn s2<T: Scalar>(&self, u: T, v: T) -> T {
        self.s2.eval(&Env::uv(u, v))
    }

    pub(crate) fn averaged<T: Scalar>(rule: &UnitRule, e: &Expr, u: T, v: T) -> T {
        rule.integrate_2d(|s, m| {
            let arg = v.scale(1.0 + m * (s - 1.0));
            e.eval(&Env::uv(u, arg)).scale(1.0 - s)
        })
    }

    /// `S̄₂(u, v) = ∫₀¹∫₀¹ S₂(u, v(1 + m(s − 1))) (1 − s) ds dm` with the stored rule.
    pub fn sbar2_generic<T: Scalar>(&self, u: T, v: T) -> T {
        Self::averaged(&self.rule, &self.s2, u, v)
    }

    /// `S̄₂(u, v)` with a tensor Gauss–Legendre rule of `quad_n` nodes per axis.
    pub fn sbar2(&self, u: f64, v: f64, quad_n: usize) -> f64 {
        if quad_n == self.rule.len() {
            return self.sbar2_generic(u, v);
        }
        Self::averaged(&UnitRule::gauss_legendre(quad_n.max(2)), &self.s2, u, v)
    }

    /// `∂₁S̄₂(u, v)`: the same rule applied to the analytic `∂S₂/∂u`.
    pub fn d1_sbar2<T: Scalar>(&self, u: T, v: T) -> T {
        Self::averaged(&self.rule, &self.ds2_du, u, v)
    }

    /// `g(u, v) = v S₁(u, v) − v³ ∂₁S̄₂(u, v)`; non-negativity is the admissibility condition.
    pub fn admissibility_function(&self, u: f64, v: f64) -> f64 {
        v * self.s1(u, v) - v * v * v * self.d1_sbar2(u, v)
    }

    /// [`admissibility_function`](Self::admissibility_function) with an explicit rule.
    pub fn admissibility_function_with(&self, rule: &UnitRule, u: f64, v: f64) -> f64 {
        v * self.s1(u, v) - v * v * v * Self::averaged(rule, &self.ds2_du, u, v)
    }
}

#[derive(Clone, Debug)]
pub enum AugmentationKind {
    /// `ε B v_xx + ε² K v_xxx` in entropy variables.
    LinearConstant { b: DMatrix<f64>, k: DMatrix<f64> },
    NonlinearMatrix(NonlinearMatrix),
    ScalarFactored(ScalarFactored),
    ScalarGeneral(ScalarGeneral),
}

#[derive(Clone, Debug)]
pub struct AugmentationSpec {
    pub kind: AugmentationKind,
    pub eps: f64,
}

impl AugmentationSpec {
    pub fn new(kind: AugmentationKind, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidAugmentation(format!("eps must be positive, got {eps}")));
        }
        if let AugmentationKind::LinearConstant { b, k } = &kind {
            if !b.is_square() || b.shape() != k.shape() {
                return Err(Error::DimensionMismatch("B and K must be square and of equal size".into()));
            }
        }
        Ok(Self { kind, eps })
    }

    pub fn linear(b: DMatrix<f64>, k: DMatrix<f64>, eps: f64) -> Result<Self> {
        Self::new(AugmentationKind::LinearConstant { b, k }, eps)
    }

    /// Scalar linear diffusion-dispersion `ε b u_xx + ε² k u_xxx`.
    pub fn linear_scalar(b: f64, k: f64, eps: f64) -> Result<Self> {
        Self::linear(DMatrix::from_element(1, 1, b), DMatrix::from_element(1, 1, k), eps)
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.kind.clone(), eps)
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            AugmentationKind::LinearConstant { .. } => "linear_constant",
            AugmentationKind::NonlinearMatrix(_) => "nonlinear_matrix",
            AugmentationKind::ScalarFactored(_) => "scalar_factored",
            AugmentationKind::ScalarGeneral(_) => "scalar_general",
        }
    }

    pub fn variables(&self) -> Variables {
        match self.kind {
            AugmentationKind::LinearConstant { .. } | AugmentationKind::NonlinearMatrix(_) => Variables::Entropy,
            _ => Variables::Conservative,
        }
    }

    /// State dimension the variant is written for.
    pub fn dim(&self) -> usize {
        match &self.kind {
            AugmentationKind::LinearConstant { b, .. } => b.nrows(),
            AugmentationKind::NonlinearMatrix(nm) => nm.dim(),
            _ => 1,
        }
    }

    /// Whether the variant can be attached to `system`.
    pub fn check_system(&self, system: &HyperbolicSystem) -> Result<()> {
        if self.dim() != system.dim() {
            return Err(Error::VariantMismatch(format!(
                "{} augmentation has dimension {} but system '{}' has N = {}",
                self.name(),
                self.dim(),
                system.name,
                system.dim()
            )));
        }
        if self.variables() == Variables::Conservative && !system.pair.quadratic_entropy() {
            return Err(Error::VariantMismatch(format!(
                "{} augmentation requires a scalar law with entropy u²/2",
                self.name()
            )));
        }
        Ok(())
    }

    fn check_jet<T: Scalar>(&self, jet: &PointJet<T>) -> Result<()> {
        if !jet.is_consistent() || jet.dim() != self.dim() {
            return Err(Error::VariantMismatch(format!(
                "{} augmentation expects jets of dimension {}, got {}",
                self.name(),
                self.dim(),
                jet.dim()
            )));
        }
        Ok(())
    }

    /// The bracketed term `S` whose x-derivative is the right-hand side.
    pub fn eval_s<T: Scalar>(&self, jet: &PointJet<T>) -> Result<Vec<T>> {
        self.check_jet(jet)?;
        let mut out = vec![T::zero(); jet.dim()];
        self.eval_s_into(jet, &mut out);
        Ok(out)
    }

    /// Unchecked variant of [`eval_s`](Self::eval_s) for hot loops.
    pub fn eval_s_into<T: Scalar>(&self, jet: &PointJet<T>, out: &mut [T]) {
        match &self.kind {
            AugmentationKind::LinearConstant { b, k } => {
                let n = b.nrows();
                for a in 0..n {
                    let mut acc = T::zero();
                    for c in 0..n {
                        acc += jet.dv[c].scale(b[(a, c)]) + jet.ddv[c].scale(k[(a, c)]);
                    }
                    out[a] = acc;
                }
            }
            AugmentationKind::NonlinearMatrix(nm) => {
                let n = nm.n;
                let bm = nm.b_at(&jet.v);
                let g = nm.grad_h_at(&jet.v);
                let (_, hxx) = nm.h_derivatives(jet, &g);
                let t = nm.h_times(&hxx);
                for c in 0..n {
                    let mut acc = T::zero();
                    for b in 0..n {
                        acc += bm[c * n + b] * jet.dv[b];
                    }
                    for a in 0..n {
                        acc += g[a * n + c] * t[a];
                    }
                    out[c] = acc;
                }
            }
            AugmentationKind::ScalarFactored(sf) => {
                let (u, du, ddu) = (jet.v[0], jet.dv[0], jet.ddv[0]);
                let env = Env::uv(u, T::zero());
                let k1 = sf.k1.eval(&env);
                let k2 = sf.k2.eval(&env);
                let dk2 = sf.dk2.eval(&env);
                out[0] = sf.b.eval(&env) * du + k1 * (dk2 * du * du + k2 * ddu);
            }
            AugmentationKind::ScalarGeneral(sg) => {
                let (u, du, ddu) = (jet.v[0], jet.dv[0], jet.ddv[0]);
                out[0] = sg.s1(u, du) + ddu * sg.s2(u, du);
            }
        }
    }

    /// Entropy dissipation `D[v]` (unscaled).
    pub fn dissipation<T: Scalar>(&self, jet: &PointJet<T>) -> Result<T> {
        self.check_jet(jet)?;
        Ok(self.dissipation_unchecked(jet))
    }

    pub fn dissipation_unchecked<T: Scalar>(&self, jet: &PointJet<T>) -> T {
        let inv_eps = 1.0 / self.eps;
        match &self.kind {
            AugmentationKind::LinearConstant { b, .. } => {
                let n = b.nrows();
                let mut q = T::zero();
                for a in 0..n {
                    for c in 0..n {
                        q += jet.dv[a] * jet.dv[c].scale(b[(a, c)] + b[(c, a)]);
                    }
                }
                -q.scale(0.5 * inv_eps)
            }
            AugmentationKind::NonlinearMatrix(nm) => {
                let n = nm.n;
                let bm = nm.b_at(&jet.v);
                let mut q = T::zero();
                for a in 0..n {
                    for c in 0..n {
                        q += jet.dv[a] * jet.dv[c] * (bm[a * n + c] + bm[c * n + a]);
                    }
                }
                -q.scale(0.5 * inv_eps)
            }
            AugmentationKind::ScalarFactored(sf) => {
                // S₂ = k₁k₂ does not depend on the gradient, so ∂₁S̄₂ = (k₁k₂)'/2
                let (u, w) = (jet.v[0], jet.dv[0]);
                let d1_sbar2 = sf.dk1k2.eval(&Env::uv(u, T::zero())).scale(0.5);
                (-w * sf.s1(u, w) + w * w * w * d1_sbar2).scale(inv_eps)
            }
            AugmentationKind::ScalarGeneral(sg) => {
                let (u, w) = (jet.v[0], jet.dv[0]);
                (-w * sg.s1(u, w) + w * w * w * sg.d1_sbar2(u, w)).scale(inv_eps)
            }
        }
    }

    /// `(F_diff, F_disp)`, the diffusive and dispersive entropy-flux corrections.
    ///
    /// Sign conventions follow the balance `vᵀ S_x + (F_diff + F_disp)_x = D`,
    /// which every returned pair satisfies identically.
    pub fn entropy_flux_corrections<T: Scalar>(&self, jet: &PointJet<T>) -> Result<(T, T)> {
        self.check_jet(jet)?;
        Ok(self.entropy_flux_corrections_unchecked(jet))
    }

    pub fn entropy_flux_corrections_unchecked<T: Scalar>(&self, jet: &PointJet<T>) -> (T, T) {
        match &self.kind {
            AugmentationKind::LinearConstant { b, k } => {
                let n = b.nrows();
                let mut fdiff = T::zero();
                let mut disp = T::zero();
                for a in 0..n {
                    for c in 0..n {
                        fdiff -= jet.v[a] * jet.dv[c].scale(b[(a, c)]);
                        // ½ (v_xᵀK v_x − v_xxᵀK v − vᵀK v_xx), ε-rescaled
                        let kac = k[(a, c)];
                        disp += (jet.dv[a] * jet.dv[c] - jet.ddv[a] * jet.v[c] - jet.v[a] * jet.ddv[c]).scale(kac);
                    }
                }
                (fdiff, disp.scale(0.5))
            }
            AugmentationKind::NonlinearMatrix(nm) => {
                let n = nm.n;
                let bm = nm.b_at(&jet.v);
                let g = nm.grad_h_at(&jet.v);
                let mut fdiff = T::zero();
                for a in 0..n {
                    for c in 0..n {
                        fdiff -= jet.v[a] * bm[a * n + c] * jet.dv[c];
                    }
                }
                // −(∇h v)ᵀ H h_xx + ½ h_xᵀ H h_x
                let (hx, hxx) = nm.h_derivatives(jet, &g);
                let gv: Vec<T> = (0..n).map(|a| (0..n).fold(T::zero(), |acc, b| acc + g[a * n + b] * jet.v[b])).collect();
                let h_hxx = nm.h_times(&hxx);
                let h_hx = nm.h_times(&hx);
                let mut fdisp = T::zero();
                for a in 0..n {
                    fdisp += hx[a] * h_hx[a].scale(0.5) - gv[a] * h_hxx[a];
                }
                (fdiff, fdisp)
            }
            AugmentationKind::ScalarFactored(sf) => {
                let (u, w, ddu) = (jet.v[0], jet.dv[0], jet.ddv[0]);
                let s2 = sf.s2(u);
                (-u * sf.s1(u, w), -u * ddu * s2 + w * w * s2.scale(0.5))
            }
            AugmentationKind::ScalarGeneral(sg) => {
                let (u, w, ddu) = (jet.v[0], jet.dv[0], jet.ddv[0]);
                (-u * sg.s1(u, w), -u * ddu * sg.s2(u, w) + w * w * sg.sbar2_generic(u, w))
            }
        }
    }

    /// Local stiffness of the second- and third-order terms, `(β, κ)`, used for
    /// the explicit time-step bound.
    pub fn stiffness(&self, jet: &PointJet<f64>) -> (f64, f64) {
        match &self.kind {
            AugmentationKind::LinearConstant { b, k } => (b.norm(), k.norm()),
            AugmentationKind::NonlinearMatrix(nm) => {
                let bm = DMatrix::from_row_slice(nm.n, nm.n, &nm.b_at(&jet.v));
                let g = DMatrix::from_row_slice(nm.n, nm.n, &nm.grad_h_at(&jet.v));
                (bm.norm(), nm.hmat.norm() * g.norm_squared())
            }
            AugmentationKind::ScalarFactored(sf) => {
                let (u, w) = (jet.v[0], jet.dv[0]);
                let env = Env::uv(u, 0.0);
                let beta = sf.b.eval(&env) + 2.0 * sf.k1.eval(&env) * sf.dk2.eval(&env) * w;
                (beta.abs(), sf.s2(u).abs())
            }
            AugmentationKind::ScalarGeneral(sg) => {
                let (u, w) = (jet.v[0], jet.dv[0]);
                (sg.ds1_dv.eval_uv(u, w).abs(), sg.s2(u, w).abs())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Dual;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn e(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    fn random_jet(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> PointJet {
        let mut draw = || (0..n).map(|_| rng.random_range(-scale..scale)).collect::<Vec<_>>();
        PointJet::new(draw(), draw(), draw())
    }

    #[test]
    fn linear_scalar_values() {
        let spec = AugmentationSpec::linear_scalar(1.0, 1.0, 0.5).unwrap();
        let s = spec.eval_s(&PointJet::scalar(0.3, 0.1, -0.2)).unwrap();
        assert!((s[0] + 0.1).abs() < 1e-15);
        // ε = 0.01, v_x = 2 → dv = 0.02; D = −ε v_x² = −0.04, K plays no role
        let spec = AugmentationSpec::linear_scalar(1.0, 7.0, 0.01).unwrap();
        let d = spec.dissipation(&PointJet::scalar(0.0, 0.02, 0.3)).unwrap();
        assert!((d + 0.04).abs() < 1e-15);
    }

    #[test]
    fn linear_scalar_entropy_fluxes() {
        // (v, v_x) = (2, 3), ε = 0.1: F_diff = −ε v v_x = −0.6
        let spec = AugmentationSpec::linear_scalar(1.0, 1.0, 0.1).unwrap();
        let (fdiff, _) = spec.entropy_flux_corrections(&PointJet::scalar(2.0, 0.3, 0.0)).unwrap();
        assert!((fdiff + 0.6).abs() < 1e-15);
        // (v, v_x, v_xx) = (1, 1, 1), ε = 1: F_disp = ½(v_x² − 2 v v_xx) = −0.5
        let spec = AugmentationSpec::linear_scalar(1.0, 1.0, 1.0).unwrap();
        let (_, fdisp) = spec.entropy_flux_corrections(&PointJet::scalar(1.0, 1.0, 1.0)).unwrap();
        assert!((fdisp + 0.5).abs() < 1e-15);
    }

    #[test]
    fn antisymmetric_diffusion_dissipates_nothing() {
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let spec = AugmentationSpec::linear(b, DMatrix::zeros(2, 2), 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(spec.dissipation(&random_jet(&mut rng, 2, 2.0)).unwrap(), 0.0);
        }
    }

    fn all_variants(eps: f64) -> Vec<AugmentationSpec> {
        let b = DMatrix::from_row_slice(1, 1, &[1.5]);
        let nm = NonlinearMatrix::new(vec![e("1 + v^2")], vec![e("v + v^3/3")], DMatrix::from_element(1, 1, 0.7)).unwrap();
        let sf = ScalarFactored::new(e("1 + u^2"), e("2*exp(u)"), e("exp(u)")).unwrap();
        let sg = ScalarGeneral::new(e("v + u^2*v^3"), e("exp(-u) * (1 + v^2)"), DEFAULT_QUAD_N).unwrap();
        vec![
            AugmentationSpec::linear(b.clone(), b, eps).unwrap(),
            AugmentationSpec::new(AugmentationKind::NonlinearMatrix(nm), eps).unwrap(),
            AugmentationSpec::new(AugmentationKind::ScalarFactored(sf), eps).unwrap(),
            AugmentationSpec::new(AugmentationKind::ScalarGeneral(sg), eps).unwrap(),
        ]
    }

    #[test]
    fn every_variant_vanishes_on_constants() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for spec in all_variants(0.05) {
            for _ in 0..100 {
                let v = rng.random_range(-2.0..2.0);
                let jet = PointJet::constant(vec![v]);
                assert_eq!(spec.eval_s(&jet).unwrap(), vec![0.0], "{}", spec.name());
                assert_eq!(spec.dissipation(&jet).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn jet_dimension_mismatch_is_reported() {
        let spec = AugmentationSpec::linear_scalar(1.0, 0.0, 0.1).unwrap();
        let jet = PointJet::new(vec![0.0, 1.0], vec![0.0, 0.0], vec![0.0, 0.0]);
        assert!(matches!(spec.eval_s(&jet), Err(Error::VariantMismatch(_))));
        assert!(matches!(spec.dissipation(&jet), Err(Error::VariantMismatch(_))));
        assert!(matches!(spec.entropy_flux_corrections(&jet), Err(Error::VariantMismatch(_))));
    }

    #[test]
    fn scalar_variants_require_quadratic_entropy() {
        let spec = &all_variants(0.1)[3];
        assert!(spec.check_system(&crate::systems::builtin_model("scalar_cubic").unwrap()).is_ok());
        let p = crate::systems::builtin_model("elasticity_p_system").unwrap();
        assert!(matches!(spec.check_system(&p), Err(Error::VariantMismatch(_))));
    }

    #[test]
    fn identity_h_reduces_to_linear_class() {
        let bmat = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, -0.5, 1.0]);
        let hmat = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]);
        let nm = NonlinearMatrix::new(
            vec![e("2"), e("1"), e("-0.5"), e("1")],
            vec![e("v1"), e("v2")],
            hmat.clone(),
        )
        .unwrap();
        let lin = AugmentationSpec::linear(bmat, hmat.clone(), 0.1).unwrap();
        let non = AugmentationSpec::new(AugmentationKind::NonlinearMatrix(nm.clone()), 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let jet = random_jet(&mut rng, 2, 1.5);
            let (a, b) = (lin.eval_s(&jet).unwrap(), non.eval_s(&jet).unwrap());
            for i in 0..2 {
                assert!((a[i] - b[i]).abs() < 1e-14);
            }
            assert!((lin.dissipation(&jet).unwrap() - non.dissipation(&jet).unwrap()).abs() < 1e-14);
            let (fa, fb) = (lin.entropy_flux_corrections(&jet).unwrap(), non.entropy_flux_corrections(&jet).unwrap());
            assert!((fa.0 - fb.0).abs() < 1e-14 && (fa.1 - fb.1).abs() < 1e-14);
            let kl = nm.dispersive_flux_kl_form(&jet).unwrap();
            assert!((kl - fa.1).abs() < 1e-13);
        }
        let v = [0.4, -1.2];
        assert!((nm.k_of_v(&v) - &hmat).norm() < 1e-15);
        assert!((nm.l_of_v(&v).unwrap() - hmat * 1.5).norm() < 1e-15);
    }

    #[test]
    fn k_and_l_for_squared_h() {
        let nm = NonlinearMatrix::new(vec![e("0")], vec![e("v^2")], DMatrix::from_element(1, 1, 1.0)).unwrap();
        for v in [-1.0, 0.3, 2.0] {
            assert!((nm.k_of_v(&[v])[(0, 0)] - 4.0 * v * v).abs() < 1e-14);
            assert!((nm.l_of_v(&[v]).unwrap()[(0, 0)] - (6.0 * v * v + 4.0 * v)).abs() < 1e-14);
        }
    }

    #[test]
    fn k_of_v_is_symmetric() {
        let hmat = DMatrix::from_row_slice(2, 2, &[1.0, -0.4, -0.4, 0.5]);
        let nm = NonlinearMatrix::new(
            vec![e("1"), e("0"), e("0"), e("1")],
            vec![e("v1 + sin(v2)"), e("v1*v2 + v2^3")],
            hmat,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let v = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let k = nm.k_of_v(&v);
            assert!((&k - k.transpose()).amax() < 1e-14);
        }
        assert!(nm.l_of_v(&[0.1, 0.2]).is_err());
    }

    #[test]
    fn factored_class_matches_general_reduction() {
        // S₁ = B(u) v + k₁ k₂' v², S₂ = k₁ k₂
        let sf = ScalarFactored::new(e("1 + u^2"), e("sin(u) + 2"), e("u^3 + u")).unwrap();
        let sg = ScalarGeneral::new(
            e("(1 + u^2)*v + (sin(u) + 2)*(3*u^2 + 1)*v^2"),
            e("(sin(u) + 2)*(u^3 + u)"),
            DEFAULT_QUAD_N,
        )
        .unwrap();
        let f = AugmentationSpec::new(AugmentationKind::ScalarFactored(sf), 0.2).unwrap();
        let g = AugmentationSpec::new(AugmentationKind::ScalarGeneral(sg), 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let jet = random_jet(&mut rng, 1, 1.5);
            let (a, b) = (f.eval_s(&jet).unwrap()[0], g.eval_s(&jet).unwrap()[0]);
            assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
            let (da, db) = (f.dissipation(&jet).unwrap(), g.dissipation(&jet).unwrap());
            assert!((da - db).abs() < 1e-11 * (1.0 + da.abs()));
            let (fa, fb) = (f.entropy_flux_corrections(&jet).unwrap(), g.entropy_flux_corrections(&jet).unwrap());
            assert!((fa.0 - fb.0).abs() < 1e-12 * (1.0 + fa.0.abs()));
            assert!((fa.1 - fb.1).abs() < 1e-12 * (1.0 + fa.1.abs()));
        }
    }

    #[test]
    fn odd_power_general_class_dissipation() {
        // S₁ = v, S₂ = v: D = −ε u_x²
        let sg = ScalarGeneral::new(e("v"), e("v"), 8).unwrap();
        let eps = 0.05;
        let spec = AugmentationSpec::new(AugmentationKind::ScalarGeneral(sg), eps).unwrap();
        let ux = 1.7;
        let d = spec.dissipation(&PointJet::scalar(0.4, eps * ux, 0.3)).unwrap();
        assert!((d + eps * ux * ux).abs() < 1e-15);
    }

    #[test]
    fn sbar2_simple_cases() {
        let sg = ScalarGeneral::new(e("v"), e("3.5"), 4).unwrap();
        assert!((sg.sbar2(0.3, -1.2, 4) - 1.75).abs() < 1e-15);
        let sg = ScalarGeneral::new(e("v"), e("u"), 4).unwrap();
        assert!((sg.sbar2(0.8, 2.0, 4) - 0.4).abs() < 1e-15);
        assert!((sg.d1_sbar2(0.8, 2.0) - 0.5).abs() < 1e-15);
        // S₂ = v²: ∫₀¹ r (v r)² dr = v²/4
        let sg = ScalarGeneral::new(e("v"), e("v^2"), 4).unwrap();
        assert!((sg.sbar2(0.0, 1.0, 4) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn general_class_rejects_non_vanishing_s1() {
        assert!(ScalarGeneral::new(e("v + 1"), e("1"), 8).is_err());
        assert!(ScalarGeneral::new(e("v*x"), e("1"), 8).is_err());
        assert!(ScalarGeneral::new(e("v"), e("1"), 1).is_err());
    }

    #[test]
    fn dual_jets_propagate_through_formulas() {
        let spec = &all_variants(0.3)[1];
        let jet = PointJet::new(vec![Dual::new(0.4, 1.0)], vec![Dual::new(0.1, 0.0)], vec![Dual::new(0.2, 0.0)]);
        let s = spec.eval_s(&jet).unwrap()[0];
        let h = 1e-6;
        let plus = spec.eval_s(&PointJet::scalar(0.4 + h, 0.1, 0.2)).unwrap()[0];
        let minus = spec.eval_s(&PointJet::scalar(0.4 - h, 0.1, 0.2)).unwrap()[0];
        assert!((s.du - (plus - minus) / (2.0 * h)).abs() < 1e-8);
    }
}
