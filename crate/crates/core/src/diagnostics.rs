//! Entropy-balance identity checks on manufactured fields, dissipation-measure
//! and flux-gap estimates over ε-families, and classification of limit shocks.

use serde::{Deserialize, Serialize};

use crate::augmentation::{AugmentationKind, AugmentationSpec, PointJet};
use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::scalar::{Dual, Scalar};
use crate::solver::{Boundary, Grid1D, State};
use crate::systems::HyperbolicSystem;

/// Threshold for the identity residual with exact outer derivatives.
pub const IDENTITY_TOL: f64 = 1e-11;

/// A smooth field `x ↦ w(x)` given by expressions in `x`, differentiated symbolically.
#[derive(Clone, Debug)]
pub struct ManufacturedField {
    pub label: String,
    pub components: Vec<Expr>,
    derivatives: Vec<[Expr; 3]>,
    pub domain: (f64, f64),
}

impl ManufacturedField {
    pub fn new(label: impl Into<String>, components: Vec<Expr>, domain: (f64, f64)) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidDiagnostic("a field needs at least one component".into()));
        }
        for c in &components {
            if let Some(bad) = c.variables().into_iter().find(|v| *v != Var::X) {
                return Err(Error::InvalidDiagnostic(format!("field components may only depend on x, found '{bad}'")));
            }
        }
        if !(domain.1 > domain.0) {
            return Err(Error::InvalidDiagnostic(format!("empty field domain {domain:?}")));
        }
        let derivatives = components
            .iter()
            .map(|c| {
                let d1 = c.diff(Var::X);
                let d2 = d1.diff(Var::X);
                let d3 = d2.diff(Var::X);
                [d1, d2, d3]
            })
            .collect();
        Ok(Self { label: label.into(), components, derivatives, domain })
    }

    pub fn parse(label: &str, components: &[&str], domain: (f64, f64)) -> Result<Self> {
        let exprs = components
            .iter()
            .map(|s| Expr::parse(s).map_err(|e| Error::InvalidDiagnostic(format!("field '{label}': {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(label, exprs, domain)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// Value and the first three x-derivatives, component-wise.
    pub fn derivatives_at(&self, x: f64) -> [Vec<f64>; 4] {
        let v = self.components.iter().map(|c| c.eval_x(x)).collect();
        let d = |k: usize| self.derivatives.iter().map(|d| d[k].eval_x(x)).collect();
        [v, d(0), d(1), d(2)]
    }

    /// Rescaled jet at `x`.
    pub fn jet(&self, x: f64, eps: f64) -> PointJet {
        let [v, d1, d2, _] = self.derivatives_at(x);
        PointJet::new(v, d1.iter().map(|d| eps * d).collect(), d2.iter().map(|d| eps * eps * d).collect())
    }

    /// Jet whose dual parts carry the x-derivative of each entry.
    pub fn dual_jet(&self, x: f64, eps: f64) -> PointJet<Dual> {
        let [v, d1, d2, d3] = self.derivatives_at(x);
        let n = self.dim();
        PointJet::new(
            (0..n).map(|k| Dual::new(v[k], d1[k])).collect(),
            (0..n).map(|k| Dual::new(eps * d1[k], eps * d2[k])).collect(),
            (0..n).map(|k| Dual::new(eps * eps * d2[k], eps * eps * d3[k])).collect(),
        )
    }

    /// The three stock fields of dimension `n` on `[−1, 1]`.
    pub fn stock(n: usize) -> Vec<Self> {
        let sets: [[&str; 3]; 3] = [
            ["0.5 + 0.3*sin(2*x)", "0.2*cos(3*x) - 0.1", "0.1*x"],
            ["0.4*tanh(2*x) + 0.1", "0.3*exp(-x^2)", "-0.2 + 0.1*sin(x)"],
            ["0.2*cos(x)*sin(3*x) - 0.3*x^2", "0.5*x - 0.2*x^3", "0.25*cos(2*x + 1)"],
        ];
        sets.iter()
            .enumerate()
            .map(|(i, set)| {
                let comps: Vec<&str> = (0..n).map(|k| set[(i + k) % 3]).collect();
                Self::parse(&format!("stock_{}", i + 1), &comps, (-1.0, 1.0)).expect("stock fields parse")
            })
            .collect()
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self::new("constant", vec![Expr::constant(value); n], (-1.0, 1.0)).expect("constant field")
    }
}

/// Which dispersive entropy flux enters the identity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispersiveFluxForm {
    /// Derived from the balance itself (default).
    #[default]
    Balance,
    /// Closed form `−½ (vᵀK(v)v)_xx + v_xᵀ L(v) v_x` for the nonlinear matrix class.
    Kl,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub field: String,
    /// Max-norm residual with exact outer derivatives.
    pub analytic_residual: f64,
    pub worst_x: f64,
    /// Max-norm residuals with finite-difference outer derivatives on `n` and `2n` points.
    pub fd_residual_coarse: f64,
    pub fd_residual_fine: f64,
    /// `log₂(coarse / fine)`; absent when both residuals are at round-off level.
    pub order: Option<f64>,
}

fn entropy_fluxes<T: Scalar>(spec: &AugmentationSpec, jet: &PointJet<T>, form: DispersiveFluxForm) -> Result<(T, T)> {
    let (fdiff, fdisp) = spec.entropy_flux_corrections(jet)?;
    match (&spec.kind, form) {
        (AugmentationKind::NonlinearMatrix(nm), DispersiveFluxForm::Kl) => Ok((fdiff, nm.dispersive_flux_kl_form(jet)?)),
        _ => Ok((fdiff, fdisp)),
    }
}

/// Residual of `vᵀ ∂_x S + ∂_x (F_diff + F_disp) − D` for `field`, sampled at
/// `n` (and `2n`) points of the field's domain.
pub fn identity_residual(
    system: &HyperbolicSystem,
    spec: &AugmentationSpec,
    field: &ManufacturedField,
    n: usize,
    stencil_order: usize,
    form: DispersiveFluxForm,
) -> Result<IdentityReport> {
    spec.check_system(system)?;
    if field.dim() != spec.dim() {
        return Err(Error::VariantMismatch(format!("field has {} components, spec expects {}", field.dim(), spec.dim())));
    }
    if n < 2 || (stencil_order != 2 && stencil_order != 4) {
        return Err(Error::InvalidDiagnostic("need n >= 2 and stencil_order 2 or 4".into()));
    }
    let eps = spec.eps;
    let (a, b) = field.domain;
    let nodes = |m: usize| -> Vec<f64> { (0..m).map(|i| a + (i as f64 + 0.5) * (b - a) / m as f64).collect() };

    let mut analytic = 0.0f64;
    let mut worst_x = a;
    for x in nodes(n) {
        let jet = field.dual_jet(x, eps);
        let s = spec.eval_s(&jet)?;
        let (fd, fp) = entropy_fluxes(spec, &jet, form)?;
        let d = spec.dissipation(&jet)?;
        let mut r = (fd + fp).du - d.re;
        for (vk, sk) in jet.v.iter().zip(&s) {
            r += vk.re * sk.du;
        }
        if !(r.abs() <= analytic) {
            analytic = r.abs();
            worst_x = x;
        }
    }

    let fd_residual = |m: usize| -> Result<f64> {
        let h = (b - a) / m as f64;
        let mut worst = 0.0f64;
        for x in nodes(m) {
            let at = |o: f64| -> Result<(Vec<f64>, f64)> {
                let jet = field.jet(x + o * h, eps);
                let (fd, fp) = entropy_fluxes(spec, &jet, form)?;
                Ok((spec.eval_s(&jet)?, fd + fp))
            };
            let weights: &[(f64, f64)] = if stencil_order == 2 {
                &[(1.0, 0.5), (-1.0, -0.5)]
            } else {
                &[(2.0, -1.0 / 12.0), (1.0, 8.0 / 12.0), (-1.0, -8.0 / 12.0), (-2.0, 1.0 / 12.0)]
            };
            let mut ds = vec![0.0; field.dim()];
            let mut dflux = 0.0;
            for &(o, w) in weights {
                let (s, f) = at(o)?;
                for (acc, sk) in ds.iter_mut().zip(&s) {
                    *acc += w * sk / h;
                }
                dflux += w * f / h;
            }
            let jet = field.jet(x, eps);
            let mut r = dflux - spec.dissipation(&jet)?;
            for (vk, dsk) in jet.v.iter().zip(&ds) {
                r += vk * dsk;
            }
            worst = worst.max(r.abs());
        }
        Ok(worst)
    };
    let coarse = fd_residual(n)?;
    let fine = fd_residual(2 * n)?;
    let order = (coarse > 1e-12 && fine > 0.0).then(|| (coarse / fine).log2());
    Ok(IdentityReport {
        field: field.label.clone(),
        analytic_residual: analytic,
        worst_x,
        fd_residual_coarse: coarse,
        fd_residual_fine: fine,
        order,
    })
}

/// Jet variables of one member of an ε-family on its grid.
#[derive(Clone, Debug)]
pub struct EpsSample {
    pub eps: f64,
    pub grid: Grid1D,
    /// Cell-major values of the jet variables (entropy variables for the
    /// matrix classes, conservative for the scalar ones).
    pub w: Vec<f64>,
    pub n_comp: usize,
}

impl EpsSample {
    pub fn from_fn(eps: f64, grid: Grid1D, f: impl Fn(f64) -> Vec<f64>) -> Self {
        let values: Vec<Vec<f64>> = grid.centers().into_iter().map(f).collect();
        let n_comp = values.first().map_or(1, Vec::len);
        Self { eps, grid, w: values.concat(), n_comp }
    }

    /// From a solver state; `w` must already be in the spec's jet variables.
    pub fn from_state(eps: f64, grid: Grid1D, state: &State, w: Vec<f64>) -> Self {
        Self { eps, grid, w, n_comp: state.n_comp }
    }

    fn check_resolution(&self) -> Result<()> {
        let dx = self.grid.dx();
        let limit = self.eps / 8.0;
        if dx > limit * (1.0 + 1e-12) {
            return Err(Error::ResolutionViolation { dx, eps: self.eps, limit });
        }
        Ok(())
    }

    /// Second-order centred jet at cell `i` (periodic wrap or constant extension).
    fn jet(&self, i: usize) -> PointJet {
        let n = self.grid.n_cells;
        let nc = self.n_comp;
        let idx = |o: isize| -> usize {
            let j = i as isize + o;
            match self.grid.boundary {
                Boundary::Periodic => j.rem_euclid(n as isize) as usize,
                Boundary::Outflow => j.clamp(0, n as isize - 1) as usize,
            }
        };
        let (l, r) = (idx(-1), idx(1));
        let dx = self.grid.dx();
        let v = self.w[i * nc..(i + 1) * nc].to_vec();
        let dv = (0..nc).map(|k| self.eps * (self.w[r * nc + k] - self.w[l * nc + k]) / (2.0 * dx)).collect();
        let ddv = (0..nc)
            .map(|k| self.eps * self.eps * (self.w[r * nc + k] - 2.0 * v[k] + self.w[l * nc + k]) / (dx * dx))
            .collect();
        PointJet::new(v, dv, ddv)
    }

    /// Trapezoid-rule integral of `g(x, jet)` over the grid.
    fn integrate(&self, mut g: impl FnMut(f64, &PointJet) -> Result<f64>) -> Result<f64> {
        let n = self.grid.n_cells;
        let dx = self.grid.dx();
        let mut total = 0.0;
        for i in 0..n {
            let w = match self.grid.boundary {
                Boundary::Outflow if i == 0 || i == n - 1 => 0.5 * dx,
                _ => dx,
            };
            total += w * g(self.grid.x(i), &self.jet(i))?;
        }
        Ok(total)
    }
}

fn check_family(samples: &[EpsSample]) -> Result<()> {
    if samples.len() < 3 {
        return Err(Error::InvalidDiagnostic(format!("need at least 3 values of eps, got {}", samples.len())));
    }
    if samples.windows(2).any(|w| w[1].eps >= w[0].eps) {
        return Err(Error::InvalidDiagnostic("eps sequence must be strictly decreasing".into()));
    }
    samples.iter().try_for_each(EpsSample::check_resolution)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub theta: String,
    pub eps_sequence: Vec<f64>,
    pub values: Vec<f64>,
    /// Linear extrapolation to `ε = 0` from the last two entries.
    pub extrapolated: f64,
    /// `min(values)`; negative margins flag a violated sign condition.
    pub margin: f64,
    /// Whether the integrand carries the leading factor `ε`.
    pub eps_factor: bool,
}

fn richardson(e1: f64, m1: f64, e2: f64, m2: f64) -> f64 {
    (e1 * m2 - e2 * m1) / (e1 - e2)
}

/// `⟨μ, θ⟩ ≈ ∫ ε w_xᵀ S[w] θ dx` for each member of the family.
pub fn measure_estimate(spec: &AugmentationSpec, samples: &[EpsSample], theta: &Expr, eps_factor: bool) -> Result<MeasureEstimate> {
    check_family(samples)?;
    let mut values = Vec::with_capacity(samples.len());
    for sample in samples {
        let member = spec.with_eps(sample.eps)?;
        let mut s = vec![0.0; member.dim()];
        let value = sample.integrate(|x, jet| {
            if jet.dim() != member.dim() {
                return Err(Error::VariantMismatch(format!("sample has {} components", jet.dim())));
            }
            member.eval_s_into(jet, &mut s);
            // ε w_x = dv
            let mut q: f64 = jet.dv.iter().zip(&s).map(|(d, s)| d * s).sum();
            if !eps_factor {
                q /= sample.eps;
            }
            Ok(q * theta.eval_x(x))
        })?;
        values.push(value);
    }
    let k = values.len();
    let extrapolated = richardson(samples[k - 2].eps, values[k - 2], samples[k - 1].eps, values[k - 1]);
    let margin = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(MeasureEstimate {
        theta: theta.to_string(),
        eps_sequence: samples.iter().map(|s| s.eps).collect(),
        values,
        extrapolated,
        margin,
        eps_factor,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxGapDecay {
    pub eps_sequence: Vec<f64>,
    /// `|∫ (f_tot − f) θ dx|` per component, max over components
    pub flux_gap: Vec<f64>,
    /// `|∫ (F_tot − F) θ dx|`
    pub entropy_flux_gap: Vec<f64>,
    /// Least-squares slope of `log gap` against `log ε`; absent if a gap vanishes.
    pub flux_exponent: Option<f64>,
    pub entropy_flux_exponent: Option<f64>,
}

fn fit_exponent(eps: &[f64], gaps: &[f64]) -> Option<f64> {
    if gaps.iter().any(|g| !(*g > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

/// Distributional size of the flux gaps `f_tot − f = −S` and
/// `F_tot − F = F_diff + F_disp` tested against `θ`, with fitted decay rates.
pub fn flux_gap_decay(spec: &AugmentationSpec, samples: &[EpsSample], theta: &Expr) -> Result<FluxGapDecay> {
    check_family(samples)?;
    let mut flux_gap = Vec::new();
    let mut entropy_flux_gap = Vec::new();
    for sample in samples {
        let member = spec.with_eps(sample.eps)?;
        let nc = member.dim();
        let mut per_comp = vec![0.0; nc];
        let mut s = vec![0.0; nc];
        for k in 0..nc {
            per_comp[k] = sample.integrate(|x, jet| {
                member.eval_s_into(jet, &mut s);
                Ok(s[k] * theta.eval_x(x))
            })?;
        }
        flux_gap.push(per_comp.iter().fold(0.0f64, |m, g| m.max(g.abs())));
        let fg = sample.integrate(|x, jet| {
            let (fd, fp) = member.entropy_flux_corrections_unchecked(jet);
            Ok((fd + fp) * theta.eval_x(x))
        })?;
        entropy_flux_gap.push(fg.abs());
    }
    let eps: Vec<f64> = samples.iter().map(|s| s.eps).collect();
    Ok(FluxGapDecay {
        flux_exponent: fit_exponent(&eps, &flux_gap),
        entropy_flux_exponent: fit_exponent(&eps, &entropy_flux_gap),
        eps_sequence: eps,
        flux_gap,
        entropy_flux_gap,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShockClass {
    Classical,
    Nonclassical,
    Unresolved,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShockReport {
    pub position: f64,
    pub left_state: Vec<f64>,
    pub right_state: Vec<f64>,
    pub measured_speed: f64,
    pub rh_speed: f64,
    /// `|s_measured [u] − [f]| / |[f]|`
    pub rh_residual: f64,
    /// `−s [U] + [F]` with the RH speed
    pub entropy_jump: f64,
    pub oleinik: Option<bool>,
    pub classification: ShockClass,
}

/// Detection and classification thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShockOptions {
    /// Plateau threshold relative to the range of the profile.
    pub plateau_rel: f64,
    /// Gradient fraction of the peak below which a jump zone may end.
    pub zone_rel: f64,
    pub chord_tol: f64,
    /// Relative RH tolerance used for the nonclassical branch.
    pub rh_tol: f64,
    pub entropy_tol: f64,
}

impl Default for ShockOptions {
    fn default() -> Self {
        Self { plateau_rel: 1e-3, zone_rel: 0.02, chord_tol: 1e-2, rh_tol: 0.02, entropy_tol: 1e-8 }
    }
}

struct Jump {
    /// cells `lo` and `hi` bracket the zone: left state at `lo`, right state at `hi`
    lo: usize,
    hi: usize,
    amplitude: f64,
}

fn cell_gap(state: &State, i: usize) -> f64 {
    let (a, b) = (state.cell(i), state.cell(i + 1));
    a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum::<f64>().sqrt()
}

fn jumps(state: &State, opts: &ShockOptions) -> Vec<Jump> {
    let n = state.n_cells();
    let nc = state.n_comp;
    let range = (0..nc)
        .map(|k| {
            let c = state.component(k);
            c.iter().copied().fold(f64::NEG_INFINITY, f64::max) - c.iter().copied().fold(f64::INFINITY, f64::min)
        })
        .fold(0.0f64, f64::max);
    if !(range > 0.0) || n < 3 {
        return vec![];
    }
    let plateau = opts.plateau_rel * range;
    let g: Vec<f64> = (0..n - 1).map(|i| cell_gap(state, i)).collect();
    let g_max = g.iter().copied().fold(0.0f64, f64::max);
    let floor = opts.zone_rel * g_max;
    let mut out: Vec<Jump> = vec![];
    let mut order: Vec<usize> = (0..g.len()).filter(|&i| g[i] >= floor && g[i] >= plateau).collect();
    order.sort_by(|&a, &b| g[b].total_cmp(&g[a]).then(a.cmp(&b)));
    for peak in order {
        if out.iter().any(|j| (j.lo..j.hi).contains(&peak)) {
            continue;
        }
        // extend outward while the gradient keeps decreasing and stays above the zone floor;
        // the floor keeps an attached rarefaction out of the zone
        let keep = |next: f64, cur: f64| next >= floor && next >= plateau && next <= cur;
        let mut lo = peak;
        while lo > 0 && keep(g[lo - 1], g[lo]) {
            lo -= 1;
        }
        let mut hi = peak;
        while hi + 1 < g.len() && keep(g[hi + 1], g[hi]) {
            hi += 1;
        }
        let (a, b) = (lo, hi + 1);
        let amp = state.cell(a).iter().zip(state.cell(b)).map(|(x, y)| (y - x).abs()).fold(0.0f64, f64::max);
        if amp >= 10.0 * plateau && !out.iter().any(|j| a < j.hi && j.lo < b) {
            out.push(Jump { lo: a, hi: b, amplitude: amp });
        }
    }
    out.sort_by_key(|j| j.lo);
    out
}

/// Position where component `k` crosses `level` between cells `lo` and `hi`.
fn crossing(state: &State, grid: &Grid1D, k: usize, level: f64, lo: usize, hi: usize, near: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    for i in lo..hi {
        let (a, b) = (state.cell(i)[k], state.cell(i + 1)[k]);
        if (a - level) * (b - level) <= 0.0 && a != b {
            let x = grid.x(i) + (level - a) / (b - a) * grid.dx();
            if best.is_none_or(|y| (x - near).abs() < (y - near).abs()) {
                best = Some(x);
            }
        }
    }
    best
}

fn rh_speed(du: &[f64], df: &[f64]) -> f64 {
    let num: f64 = du.iter().zip(df).map(|(a, b)| a * b).sum();
    let den: f64 = du.iter().map(|a| a * a).sum();
    num / den
}

/// Oleinik chord condition for a scalar jump `u_l → u_r` with speed `s`.
pub fn oleinik(system: &HyperbolicSystem, u_l: f64, u_r: f64, s: f64, chord_tol: f64) -> bool {
    let f = |u: f64| system.flux(&[u])[0];
    let tol = chord_tol * (1.0 + s.abs());
    (1..200).all(|i| {
        let u = u_l + (u_r - u_l) * i as f64 / 200.0;
        let from_left = (f(u) - f(u_l)) / (u - u_l);
        let to_right = (f(u) - f(u_r)) / (u - u_r);
        from_left >= s - tol && to_right <= s + tol
    })
}

/// Detects the fastest jump of `final_state`, measures its speed against
/// `snapshot`, and classifies it.
pub fn classify_shock(
    system: &HyperbolicSystem,
    grid: &Grid1D,
    snapshot: &State,
    final_state: &State,
    opts: &ShockOptions,
) -> Result<ShockReport> {
    let dt = final_state.t - snapshot.t;
    if !(dt > 0.0) {
        return Err(Error::InvalidDiagnostic("the snapshot must precede the final state".into()));
    }
    let nc = system.dim();
    let candidates = jumps(final_state, opts);
    let mut best: Option<(f64, &Jump)> = None;
    for j in &candidates {
        let (l, r) = (final_state.cell(j.lo), final_state.cell(j.hi));
        let du: Vec<f64> = (0..nc).map(|k| r[k] - l[k]).collect();
        let (fl, fr) = (system.flux(l), system.flux(r));
        let df: Vec<f64> = (0..nc).map(|k| fr[k] - fl[k]).collect();
        let s = rh_speed(&du, &df);
        if best.is_none_or(|(bs, bj)| s > bs || (s == bs && j.amplitude > bj.amplitude)) {
            best = Some((s, j));
        }
    }
    let (s_rh, jump) = best.ok_or(Error::NoJumpFound)?;
    let left = final_state.cell(jump.lo).to_vec();
    let right = final_state.cell(jump.hi).to_vec();
    let k = (0..nc).max_by(|&a, &b| (right[a] - left[a]).abs().total_cmp(&(right[b] - left[b]).abs())).unwrap_or(0);
    let level = 0.5 * (left[k] + right[k]);
    let x_final = crossing(final_state, grid, k, level, jump.lo, jump.hi, grid.x(jump.lo)).ok_or(Error::NoJumpFound)?;
    let predicted = x_final - s_rh * dt;
    let x_snap = crossing(snapshot, grid, k, level, 0, snapshot.n_cells() - 1, predicted).ok_or(Error::NoJumpFound)?;
    let measured = (x_final - x_snap) / dt;

    let du: Vec<f64> = (0..nc).map(|k| right[k] - left[k]).collect();
    let (fl, fr) = (system.flux(&left), system.flux(&right));
    let df: Vec<f64> = (0..nc).map(|k| fr[k] - fl[k]).collect();
    let df_norm = df.iter().map(|x| x * x).sum::<f64>().sqrt();
    let rh_residual = du.iter().zip(&df).map(|(a, b)| (measured * a - b).powi(2)).sum::<f64>().sqrt() / df_norm.max(f64::MIN_POSITIVE);
    let entropy_jump = -s_rh * (system.entropy(&right) - system.entropy(&left)) + system.entropy_flux(&right) - system.entropy_flux(&left);

    let oleinik_ok = (nc == 1).then(|| oleinik(system, left[0], right[0], s_rh, opts.chord_tol));
    let speed_ok = (measured - s_rh).abs() <= opts.rh_tol * s_rh.abs().max(f64::MIN_POSITIVE);
    let classification = match oleinik_ok {
        Some(true) if speed_ok => ShockClass::Classical,
        Some(false) if speed_ok && rh_residual <= opts.rh_tol && entropy_jump <= opts.entropy_tol => ShockClass::Nonclassical,
        _ => ShockClass::Unresolved,
    };
    Ok(ShockReport {
        position: x_final,
        left_state: left,
        right_state: right,
        measured_speed: measured,
        rh_speed: s_rh,
        rh_residual,
        entropy_jump,
        oleinik: oleinik_ok,
        classification,
    })
}
