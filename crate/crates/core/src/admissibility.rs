//! Sampled certificates for the positive-entropy-production conditions of
//! each augmentation class.
//!
//! Every check returns an [`AdmissibilityReport`]; failed conditions carry a
//! [`Witness`] that [`Witness::reproduces`] can re-evaluate against the spec.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::augmentation::{AugmentationKind, AugmentationSpec, NonlinearMatrix, ScalarFactored, ScalarGeneral};
use crate::error::{Error, Result};
use crate::quadrature::UnitRule;
use crate::systems::StateBox;

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Admissible,
    Inadmissible,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// `λ_min(B + Bᵀ) < −threshold`; `state` is set for state-dependent `B(v)`.
    NegativeEigenvalue { state: Option<Vec<f64>>, eigenvalue: f64, eigenvector: Vec<f64>, threshold: f64 },
    /// `|M_rc − M_cr| > threshold` for `matrix` ∈ {K, H}; indices are 1-based.
    AsymmetricEntry { matrix: String, row: usize, col: usize, entry: f64, transposed_entry: f64, threshold: f64 },
    /// `B(u) < −threshold`.
    NegativeDiffusion { u: f64, value: f64, threshold: f64 },
    /// `|k₁(u) − c k₂(u)| > threshold` for the fitted `c`.
    ProportionalityResidual { u: f64, k1: f64, k2: f64, c: f64, residual: f64, threshold: f64 },
    /// `k₂` vanishes on the interval while `k₁` does not (largest `|k₁|` reported).
    DegenerateK2 { u: f64, k1: f64, k2: f64, threshold: f64 },
    /// `v S₁ − v³ ∂₁S̄₂ < −threshold` at `(u, v)`.
    NegativeProduction { u: f64, v: f64, g: f64, threshold: f64, quad_n: usize },
    /// Passing proportionality condition: the fitted constant.
    FittedConstant { c: f64, max_residual: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub passed: bool,
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub method: String,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub points: usize,
    pub seed: Option<u64>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub tol: f64,
    pub quad_n: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub verdict: Verdict,
    pub conditions: Vec<Condition>,
    pub sampling: Sampling,
    pub tolerances: Tolerances,
}

impl AdmissibilityReport {
    fn assemble(conditions: Vec<Condition>, sampling: Sampling, tolerances: Tolerances, inconclusive: bool) -> Self {
        let verdict = if conditions.iter().any(|c| !c.passed) {
            Verdict::Inadmissible
        } else if inconclusive {
            Verdict::Inconclusive
        } else {
            Verdict::Admissible
        };
        Self { verdict, conditions, sampling, tolerances }
    }

    pub fn failed(&self) -> impl Iterator<Item = &Condition> {
        self.conditions.iter().filter(|c| !c.passed)
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidAugmentation(format!("tolerance must be positive, got {tol}")))
    }
}

/// Smallest eigenpair of the symmetric part `M + Mᵀ`, with its spectral norm.
fn min_sym_eigen(m: &DMatrix<f64>) -> (f64, Vec<f64>, f64) {
    let eig = SymmetricEigen::new(m + m.transpose());
    let (k, lmin) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, 0.0));
    let norm = eig.eigenvalues.amax();
    (lmin, eig.eigenvectors.column(k).iter().copied().collect(), norm)
}

fn psd_condition(name: &str, m: &DMatrix<f64>, state: Option<&[f64]>, tol: f64) -> Condition {
    let (lmin, vec, norm) = min_sym_eigen(m);
    let threshold = tol * norm;
    let passed = lmin >= -threshold;
    let witness = (!passed).then(|| Witness::NegativeEigenvalue {
        state: state.map(<[f64]>::to_vec),
        eigenvalue: lmin,
        eigenvector: vec,
        threshold,
    });
    Condition { name: name.into(), passed, witness }
}

fn symmetry_condition(name: &str, label: &str, m: &DMatrix<f64>, tol: f64) -> Condition {
    let threshold = tol * m.amax();
    let mut worst: Option<(usize, usize, f64)> = None;
    for r in 0..m.nrows() {
        for c in r + 1..m.ncols() {
            let gap = (m[(r, c)] - m[(c, r)]).abs();
            if gap > threshold && worst.is_none_or(|w| gap > w.2) {
                worst = Some((r, c, gap));
            }
        }
    }
    let witness = worst.map(|(r, c, _)| Witness::AsymmetricEntry {
        matrix: label.into(),
        row: r + 1,
        col: c + 1,
        entry: m[(r, c)],
        transposed_entry: m[(c, r)],
        threshold,
    });
    Condition { name: name.into(), passed: witness.is_none(), witness }
}

/// Linear class: `B + Bᵀ ⪰ 0` and `K = Kᵀ`, both relative to the matrix scale.
pub fn check_linear(b: &DMatrix<f64>, k: &DMatrix<f64>, tol: f64) -> Result<AdmissibilityReport> {
    check_tol(tol)?;
    if !b.is_square() || b.shape() != k.shape() {
        return Err(Error::DimensionMismatch(format!(
            "B is {}×{} and K is {}×{}",
            b.nrows(),
            b.ncols(),
            k.nrows(),
            k.ncols()
        )));
    }
    let conditions = vec![
        psd_condition("necessary: B + B^T non-negative", b, None, tol),
        symmetry_condition("necessary: K symmetric", "K", k, tol),
    ];
    let sampling = Sampling {
        method: "exact".into(),
        lo: vec![],
        hi: vec![],
        points: 0,
        seed: None,
        note: "constant matrices; conditions are state independent".into(),
    };
    Ok(AdmissibilityReport::assemble(conditions, sampling, Tolerances { tol, quad_n: None }, false))
}

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

/// First `n` points of the Halton sequence in `[0, 1)^dim`, optionally shifted
/// modulo 1 by a seeded random offset (Cranley–Patterson rotation).
pub fn halton_points(n: usize, dim: usize, seed: Option<u64>) -> Result<Vec<Vec<f64>>> {
    if dim > PRIMES.len() {
        return Err(Error::DimensionMismatch(format!("Halton sampling supports up to {} dimensions", PRIMES.len())));
    }
    let shift: Vec<f64> = match seed {
        Some(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            (0..dim).map(|_| rng.random::<f64>()).collect()
        }
        None => vec![0.0; dim],
    };
    Ok((1..=n as u64)
        .map(|i| {
            (0..dim)
                .map(|d| {
                    let x = radical_inverse(i, PRIMES[d]) + shift[d];
                    x - x.floor()
                })
                .collect()
        })
        .collect())
}

/// First `n` points of the nested sequence `0, 1, 1/2, 1/4, 3/4, 1/8, …` on `[lo, hi]`.
///
/// For `n = 2^k + 1` this is exactly the uniform grid with `2^k` intervals, and
/// the points for `n` are always a subset of those for `n + 1`.
pub fn nested_uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut t: Vec<f64> = [0.0, 1.0].into_iter().take(n).collect();
    let mut i = 1u64;
    while t.len() < n {
        t.push(radical_inverse(i, 2));
        i += 1;
    }
    t.into_iter().map(|s| lo + (hi - lo) * s).collect()
}

/// Nonlinear matrix class: `H = Hᵀ` and `B(v) + B(v)ᵀ ⪰ 0` at `n_samples`
/// low-discrepancy points of `domain` (entropy variables).
pub fn check_nonlinear(
    spec: &NonlinearMatrix,
    domain: &StateBox,
    n_samples: usize,
    tol: f64,
    seed: Option<u64>,
) -> Result<AdmissibilityReport> {
    check_tol(tol)?;
    if n_samples == 0 {
        return Err(Error::InvalidAugmentation("n_samples must be at least 1".into()));
    }
    if domain.dim() != spec.dim() {
        return Err(Error::DimensionMismatch(format!(
            "sampling box has dimension {} but the spec has N = {}",
            domain.dim(),
            spec.dim()
        )));
    }
    let mut conditions = vec![symmetry_condition("H symmetric", "H", spec.h_matrix(), tol)];
    let mut psd = Condition { name: "B(v) + B(v)^T non-negative".into(), passed: true, witness: None };
    let mut non_finite = false;
    let mut worst = f64::INFINITY;
    for t in halton_points(n_samples, spec.dim(), seed)? {
        let v = domain.map_unit(&t);
        let bm = spec.b_matrix(&v);
        if bm.iter().any(|x| !x.is_finite()) {
            non_finite = true;
            continue;
        }
        let c = psd_condition(&psd.name, &bm, Some(&v), tol);
        if let Some(Witness::NegativeEigenvalue { eigenvalue, .. }) = &c.witness {
            if *eigenvalue < worst {
                worst = *eigenvalue;
                psd = c;
            }
        }
    }
    conditions.push(psd);
    let sampling = Sampling {
        method: if seed.is_some() { "halton (rotated)" } else { "halton" }.into(),
        lo: domain.lo.clone(),
        hi: domain.hi.clone(),
        points: n_samples,
        seed,
        note: "sampled certificate over the box, not a global proof".into(),
    };
    Ok(AdmissibilityReport::assemble(conditions, sampling, Tolerances { tol, quad_n: None }, non_finite))
}

/// Scalar factored class: `B(u) ≥ 0` and `k₁ = c k₂` on `n` nested uniform samples.
pub fn check_scalar_factored(spec: &ScalarFactored, interval: (f64, f64), n: usize, tol: f64) -> Result<AdmissibilityReport> {
    check_tol(tol)?;
    if n < 3 {
        return Err(Error::InvalidAugmentation("at least 3 samples are required".into()));
    }
    let us = nested_uniform(interval.0, interval.1, n);
    let bs: Vec<f64> = us.iter().map(|&u| spec.b(u)).collect();
    let k1: Vec<f64> = us.iter().map(|&u| spec.k1(u)).collect();
    let k2: Vec<f64> = us.iter().map(|&u| spec.k2(u)).collect();
    let non_finite = bs.iter().chain(&k1).chain(&k2).any(|x| !x.is_finite());

    let (i_min, b_min) = bs.iter().copied().enumerate().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    let b_ok = b_min >= -tol;
    let b_cond = Condition {
        name: "necessary: B(u) >= 0".into(),
        passed: b_ok,
        witness: (!b_ok).then_some(Witness::NegativeDiffusion { u: us[i_min], value: b_min, threshold: tol }),
    };

    let max_abs = |x: &[f64]| x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (k1_max, k2_max) = (max_abs(&k1), max_abs(&k2));
    let scale = k1_max.max(k2_max);
    let threshold = tol * scale.max(f64::MIN_POSITIVE);
    let name = "necessary: k1 = c k2".to_string();
    let prop_cond = if k2_max <= tol {
        if k1_max <= tol {
            // no dispersive term: proportionality holds vacuously
            Condition { name, passed: true, witness: Some(Witness::FittedConstant { c: 0.0, max_residual: k1_max }) }
        } else {
            let i = k1.iter().map(|x| x.abs()).enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
            Condition {
                name,
                passed: false,
                witness: Some(Witness::DegenerateK2 { u: us[i], k1: k1[i], k2: k2[i], threshold: tol }),
            }
        }
    } else {
        let (mut num, mut den) = (0.0, 0.0);
        for (a, b) in k1.iter().zip(&k2) {
            if b.abs() > tol * k2_max {
                num += a * b;
                den += b * b;
            }
        }
        let c = num / den;
        let (i, residual) = k1
            .iter()
            .zip(&k2)
            .map(|(a, b)| (a - c * b).abs())
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if residual <= threshold {
            Condition { name, passed: true, witness: Some(Witness::FittedConstant { c, max_residual: residual }) }
        } else {
            Condition {
                name,
                passed: false,
                witness: Some(Witness::ProportionalityResidual { u: us[i], k1: k1[i], k2: k2[i], c, residual, threshold }),
            }
        }
    };
    let sampling = Sampling {
        method: "nested uniform".into(),
        lo: vec![interval.0],
        hi: vec![interval.1],
        points: n,
        seed: None,
        note: "sampled certificate over the interval, not a global proof".into(),
    };
    Ok(AdmissibilityReport::assemble(vec![b_cond, prop_cond], sampling, Tolerances { tol, quad_n: None }, non_finite))
}

/// Scalar general class: `g(u, v) = v S₁ − v³ ∂₁S̄₂ ≥ −tol (1 + max|g|)` on an
/// `n × n` nested grid over `u_range × v_range`.
pub fn check_scalar_general(
    spec: &ScalarGeneral,
    u_range: (f64, f64),
    v_range: (f64, f64),
    n: usize,
    quad_n: usize,
    tol: f64,
) -> Result<AdmissibilityReport> {
    check_tol(tol)?;
    if n < 2 || quad_n < 2 {
        return Err(Error::InvalidAugmentation("need n >= 2 per axis and quad_n >= 2".into()));
    }
    let rule = UnitRule::gauss_legendre(quad_n);
    let us = nested_uniform(u_range.0, u_range.1, n);
    let vs = nested_uniform(v_range.0, v_range.1, n);
    let mut g_max = 0.0f64;
    let mut arg_min = (0.0, 0.0, f64::INFINITY);
    let mut non_finite = false;
    for &u in &us {
        for &v in &vs {
            let g = spec.admissibility_function_with(&rule, u, v);
            if !g.is_finite() {
                non_finite = true;
                continue;
            }
            g_max = g_max.max(g.abs());
            if g < arg_min.2 {
                arg_min = (u, v, g);
            }
        }
    }
    let threshold = tol * (1.0 + g_max);
    let passed = arg_min.2 >= -threshold;
    let cond = Condition {
        name: "v S1 - v^3 d1 S2bar >= 0".into(),
        passed,
        witness: (!passed).then_some(Witness::NegativeProduction {
            u: arg_min.0,
            v: arg_min.1,
            g: arg_min.2,
            threshold,
            quad_n,
        }),
    };
    let sampling = Sampling {
        method: "nested tensor grid".into(),
        lo: vec![u_range.0, v_range.0],
        hi: vec![u_range.1, v_range.1],
        points: n * n,
        seed: None,
        note: "sampled certificate over the (u, eps u_x) box, not a global proof".into(),
    };
    Ok(AdmissibilityReport::assemble(vec![cond], sampling, Tolerances { tol, quad_n: Some(quad_n) }, non_finite))
}

/// Sampling parameters shared by all checks.
#[derive(Clone, Debug)]
pub struct CheckOptions {
    /// Box in the variables of the spec (entropy variables for the matrix classes).
    pub domain: StateBox,
    /// Bound on the rescaled gradient `ε u_x` for the scalar general class.
    pub v_max: f64,
    pub n_samples: usize,
    pub grid_n: usize,
    pub quad_n: usize,
    pub tol: f64,
    pub seed: Option<u64>,
}

impl CheckOptions {
    pub fn new(domain: StateBox) -> Self {
        Self { domain, v_max: 3.0, n_samples: 1024, grid_n: 65, quad_n: 16, tol: DEFAULT_TOL, seed: None }
    }
}

/// Runs the check matching the variant of `spec`.
pub fn check(spec: &AugmentationSpec, opts: &CheckOptions) -> Result<AdmissibilityReport> {
    let scalar_range = || -> Result<(f64, f64)> {
        if opts.domain.dim() != 1 {
            return Err(Error::DimensionMismatch("scalar classes need a one-dimensional box".into()));
        }
        Ok((opts.domain.lo[0], opts.domain.hi[0]))
    };
    match &spec.kind {
        AugmentationKind::LinearConstant { b, k } => check_linear(b, k, opts.tol),
        AugmentationKind::NonlinearMatrix(nm) => check_nonlinear(nm, &opts.domain, opts.n_samples, opts.tol, opts.seed),
        AugmentationKind::ScalarFactored(sf) => check_scalar_factored(sf, scalar_range()?, opts.n_samples, opts.tol),
        AugmentationKind::ScalarGeneral(sg) => {
            check_scalar_general(sg, scalar_range()?, (-opts.v_max, opts.v_max), opts.grid_n, opts.quad_n, opts.tol)
        }
    }
}

impl Witness {
    /// Re-evaluates the violated condition at the witness and reports whether
    /// the violation is still present. Passing witnesses never reproduce.
    pub fn reproduces(&self, kind: &AugmentationKind) -> bool {
        match (self, kind) {
            (Witness::NegativeEigenvalue { state: None, threshold, .. }, AugmentationKind::LinearConstant { b, .. }) => {
                min_sym_eigen(b).0 < -threshold
            }
            (Witness::NegativeEigenvalue { state: Some(v), threshold, .. }, AugmentationKind::NonlinearMatrix(nm)) => {
                v.len() == nm.dim() && min_sym_eigen(&nm.b_matrix(v)).0 < -threshold
            }
            (Witness::AsymmetricEntry { matrix, row, col, threshold, .. }, kind) => {
                let m = match (matrix.as_str(), kind) {
                    ("K", AugmentationKind::LinearConstant { k, .. }) => k,
                    ("H", AugmentationKind::NonlinearMatrix(nm)) => nm.h_matrix(),
                    _ => return false,
                };
                let (r, c) = (row.wrapping_sub(1), col.wrapping_sub(1));
                r < m.nrows() && c < m.ncols() && (m[(r, c)] - m[(c, r)]).abs() > *threshold
            }
            (Witness::NegativeDiffusion { u, threshold, .. }, AugmentationKind::ScalarFactored(sf)) => sf.b(*u) < -threshold,
            (Witness::ProportionalityResidual { u, c, threshold, .. }, AugmentationKind::ScalarFactored(sf)) => {
                (sf.k1(*u) - c * sf.k2(*u)).abs() > *threshold
            }
            (Witness::DegenerateK2 { u, threshold, .. }, AugmentationKind::ScalarFactored(sf)) => {
                sf.k2(*u).abs() <= *threshold && sf.k1(*u).abs() > *threshold
            }
            (Witness::NegativeProduction { u, v, threshold, quad_n, .. }, AugmentationKind::ScalarGeneral(sg)) => {
                sg.admissibility_function_with(&UnitRule::gauss_legendre(*quad_n), *u, *v) < -threshold
            }
            _ => false,
        }
    }
}
