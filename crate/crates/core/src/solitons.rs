//! Closed-form seed solutions, eigenfunctions, singular manifolds, and
//! 1-/2-soliton solutions for the two base hierarchies.
//!
//! Everything here is written out as explicit expression trees with
//! hand-computed derivatives of the tau-function logarithms. The Darboux
//! engine reaches the same solutions through iterated transformations; the
//! two routes are kept fully independent so each can certify the other.

use crate::fields::FieldExpr;
use thiserror::Error;

/// Which integrable system a soliton construction belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Second coordinate is y; seed potential M = a0·y.
    Akns,
    /// Second coordinate is t; seed potential M = a0·x with partner
    /// N = 2a0²·t.
    Nlbq,
}

impl std::str::FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "akns" => Ok(Family::Akns),
            "nlbq" => Ok(Family::Nlbq),
            other => Err(format!("unknown family `{other}` (expected `akns` or `nlbq`)")),
        }
    }
}

/// One exponential mode: the wavenumber-like parameter (k for AKNS, a for
/// NLBq) and the center offset x0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub k_or_a: f64,
    pub x0: f64,
}

impl From<(f64, f64)> for Mode {
    fn from((k_or_a, x0): (f64, f64)) -> Self {
        Mode { k_or_a, x0 }
    }
}

/// Parameters of a 1- or 2-soliton construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SolitonSpec {
    pub family: Family,
    pub a0: f64,
    pub modes: Vec<Mode>,
}

/// Violations of the mode inequalities that keep the closed forms pole-free.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolitonError {
    #[error("invalid soliton mode: {0}")]
    InvalidMode(String),
}

/// Eigenfunction data attached to one spectral parameter.
///
/// For AKNS `psi` is the scalar eigenfunction. For NLBq the eigenfunction
/// has two components: `psi` holds the plus component and `psi_minus` the
/// minus one. The optional `manifold` is the singular-manifold function
/// with x-derivative psi² (AKNS) or psi⁺·psi⁻ (NLBq).
#[derive(Debug, Clone)]
pub struct EigenData {
    pub psi: FieldExpr,
    pub psi_minus: Option<FieldExpr>,
    pub lambda: f64,
    pub manifold: Option<FieldExpr>,
}

fn exp_linear(coef_a: f64, coef_b: f64, constant: f64) -> FieldExpr {
    FieldExpr::coord_a()
        .scale(coef_a)
        .add(&FieldExpr::coord_b().scale(coef_b))
        .add(&FieldExpr::constant(constant))
        .exp()
}

/// Seed potential M = a0·y of the AKNS hierarchy.
pub fn akns_seed(a0: f64) -> FieldExpr {
    FieldExpr::coord_b().scale(a0)
}

/// Eigenfunction, spectral parameter, and singular manifold over the AKNS
/// seed: psi = exp(kx - (a0/k)y), lambda = -k²,
/// phi = (alpha + psi²)/(2k) with alpha = exp(2k·x0).
pub fn akns_eigen(k: f64, a0: f64, x0: f64) -> Result<EigenData, SolitonError> {
    if k == 0.0 {
        return Err(SolitonError::InvalidMode("k must be nonzero".into()));
    }
    let psi = exp_linear(k, -a0 / k, 0.0);
    let alpha = (2.0 * k * x0).exp();
    let manifold = FieldExpr::constant(alpha)
        .add(&psi.powi(2))
        .scale(1.0 / (2.0 * k));
    Ok(EigenData {
        psi,
        psi_minus: None,
        lambda: -k * k,
        manifold: Some(manifold),
    })
}

/// Interaction coefficient of the AKNS 2-soliton.
pub fn akns_a12(k1: f64, k2: f64) -> f64 {
    ((k1 - k2) / (k1 + k2)).powi(2)
}

fn check_akns(spec: &SolitonSpec) -> Result<(), SolitonError> {
    if spec.family != Family::Akns {
        return Err(SolitonError::InvalidMode("spec family must be akns".into()));
    }
    if spec.modes.is_empty() || spec.modes.len() > 2 {
        return Err(SolitonError::InvalidMode(
            "mode count must be 1 or 2".into(),
        ));
    }
    for (i, m) in spec.modes.iter().enumerate() {
        if m.k_or_a == 0.0 {
            return Err(SolitonError::InvalidMode(format!(
                "k{} must be nonzero",
                i + 1
            )));
        }
    }
    if spec.modes.len() == 2 {
        let (k1, k2) = (spec.modes[0].k_or_a, spec.modes[1].k_or_a);
        if k1 + k2 == 0.0 {
            return Err(SolitonError::InvalidMode(
                "k1 + k2 must be nonzero (interaction coefficient pole)".into(),
            ));
        }
        if k1 * k1 == k2 * k2 {
            return Err(SolitonError::InvalidMode(
                "k1^2 must differ from k2^2 (equal spectral parameters)".into(),
            ));
        }
    }
    Ok(())
}

/// The travelling exponential F_i = exp(2k(x - (a0/k²)y - x0)) of one AKNS mode.
fn akns_f(a0: f64, m: Mode) -> FieldExpr {
    let k = m.k_or_a;
    exp_linear(2.0 * k, -2.0 * a0 / k, -2.0 * k * m.x0)
}

/// Closed-form 1- or 2-soliton solution of the AKNS hierarchy.
///
/// The logarithmic derivative of the tau-function is expanded by hand:
/// with tau = 1 + F1 (+ F2 + A12·F1·F2), each F differentiates to a
/// multiple of itself, so M = a0·y + tau_x/tau becomes an explicit ratio of
/// exponential sums with no derivative nodes. The overall constant factor
/// of tau cancels in the ratio and is dropped.
pub fn akns_soliton(spec: &SolitonSpec) -> Result<FieldExpr, SolitonError> {
    check_akns(spec)?;
    let a0 = spec.a0;
    let seed = akns_seed(a0);
    if spec.modes.len() == 1 {
        let k = spec.modes[0].k_or_a;
        let f = akns_f(a0, spec.modes[0]);
        let num = f.scale(2.0 * k);
        let den = FieldExpr::constant(1.0).add(&f);
        return Ok(seed.add(&num.div(&den)));
    }
    let (m1, m2) = (spec.modes[0], spec.modes[1]);
    let (k1, k2) = (m1.k_or_a, m2.k_or_a);
    let a12 = akns_a12(k1, k2);
    let f1 = akns_f(a0, m1);
    let f2 = akns_f(a0, m2);
    let f12 = f1.mul(&f2).scale(a12);
    let num = f1
        .scale(2.0 * k1)
        .add(&f2.scale(2.0 * k2))
        .add(&f12.scale(2.0 * (k1 + k2)));
    let den = FieldExpr::constant(1.0).add(&f1).add(&f2).add(&f12);
    Ok(seed.add(&num.div(&den)))
}

/// Seed potential M = a0·x of the non-local Boussinesq hierarchy.
pub fn nlbq_seed(a0: f64) -> FieldExpr {
    FieldExpr::coord_a().scale(a0)
}

/// Seed partner field N with N_x = M_t and the t-dependence forced by the
/// coupled system: N = 2a0²·t.
pub fn nlbq_seed_partner(a0: f64) -> FieldExpr {
    FieldExpr::coord_b().scale(2.0 * a0 * a0)
}

/// Eigenfunction pair, spectral parameter, and singular manifold over the
/// NLBq seed: psi⁺ = exp(a(x-at)), psi⁻ = exp(-(a0/a)(x-(a0/a)t)),
/// lambda = a + a0/a, phi = (a/(a²-a0))(alpha + psi⁺psi⁻) with
/// alpha = exp((a-a0/a)x0).
pub fn nlbq_eigen(a: f64, a0: f64, x0: f64) -> Result<EigenData, SolitonError> {
    if a == 0.0 {
        return Err(SolitonError::InvalidMode("a must be nonzero".into()));
    }
    if a * a == a0 {
        return Err(SolitonError::InvalidMode(
            "a^2 must differ from a0 (manifold coefficient pole)".into(),
        ));
    }
    let psi_plus = exp_linear(a, -a * a, 0.0);
    let b = a0 / a;
    let psi_minus = exp_linear(-b, b * b, 0.0);
    let sigma = a - b;
    let alpha = (sigma * x0).exp();
    let manifold = FieldExpr::constant(alpha)
        .add(&psi_plus.mul(&psi_minus))
        .scale(a / (a * a - a0));
    Ok(EigenData {
        psi: psi_plus,
        psi_minus: Some(psi_minus),
        lambda: a + b,
        manifold: Some(manifold),
    })
}

/// Interaction coefficient of the NLBq 2-soliton.
pub fn nlbq_a12(a0: f64, a1: f64, a2: f64) -> f64 {
    a0 * ((a2 - a1) / (a1 * a2 - a0)).powi(2)
}

fn check_nlbq(spec: &SolitonSpec) -> Result<(), SolitonError> {
    if spec.family != Family::Nlbq {
        return Err(SolitonError::InvalidMode("spec family must be nlbq".into()));
    }
    if spec.modes.is_empty() || spec.modes.len() > 2 {
        return Err(SolitonError::InvalidMode(
            "mode count must be 1 or 2".into(),
        ));
    }
    for (i, m) in spec.modes.iter().enumerate() {
        let a = m.k_or_a;
        if a == 0.0 {
            return Err(SolitonError::InvalidMode(format!(
                "a{} must be nonzero",
                i + 1
            )));
        }
        if a * a == spec.a0 {
            return Err(SolitonError::InvalidMode(format!(
                "a{}^2 must differ from a0 (manifold coefficient pole)",
                i + 1
            )));
        }
    }
    if spec.modes.len() == 2 {
        let (a1, a2) = (spec.modes[0].k_or_a, spec.modes[1].k_or_a);
        if a1 * a2 == spec.a0 {
            return Err(SolitonError::InvalidMode(
                "a1*a2 must differ from a0 (interaction coefficient pole)".into(),
            ));
        }
    }
    Ok(())
}

/// Travelling exponential F_i = exp(sigma(x - lambda t - x0)) of one NLBq
/// mode, where sigma = a - a0/a and lambda = a + a0/a.
fn nlbq_f(a0: f64, m: Mode) -> FieldExpr {
    let a = m.k_or_a;
    let sigma = a - a0 / a;
    let lambda = a + a0 / a;
    exp_linear(sigma, -sigma * lambda, -sigma * m.x0)
}

/// Closed-form 1- or 2-soliton solution (M, N) of the NLBq hierarchy, with
/// the same hand-expanded logarithmic derivatives as the AKNS form; the
/// partner field picks up tau_t/tau on top of the seed's 2a0²t.
pub fn nlbq_soliton(spec: &SolitonSpec) -> Result<(FieldExpr, FieldExpr), SolitonError> {
    check_nlbq(spec)?;
    let a0 = spec.a0;
    let seed_m = nlbq_seed(a0);
    let seed_n = nlbq_seed_partner(a0);
    let rates = |m: Mode| {
        let a = m.k_or_a;
        (a - a0 / a, a + a0 / a)
    };
    if spec.modes.len() == 1 {
        let (sigma, lambda) = rates(spec.modes[0]);
        let f = nlbq_f(a0, spec.modes[0]);
        let den = FieldExpr::constant(1.0).add(&f);
        let m = seed_m.add(&f.scale(sigma).div(&den));
        let n = seed_n.add(&f.scale(-sigma * lambda).div(&den));
        return Ok((m, n));
    }
    let (m1, m2) = (spec.modes[0], spec.modes[1]);
    let (s1, l1) = rates(m1);
    let (s2, l2) = rates(m2);
    let a12 = nlbq_a12(a0, m1.k_or_a, m2.k_or_a);
    let f1 = nlbq_f(a0, m1);
    let f2 = nlbq_f(a0, m2);
    let f12 = f1.mul(&f2).scale(a12);
    let den = FieldExpr::constant(1.0).add(&f1).add(&f2).add(&f12);
    let num_x = f1
        .scale(s1)
        .add(&f2.scale(s2))
        .add(&f12.scale(s1 + s2));
    let num_t = f1
        .scale(-s1 * l1)
        .add(&f2.scale(-s2 * l2))
        .add(&f12.scale(-(s1 * l1 + s2 * l2)));
    let m = seed_m.add(&num_x.div(&den));
    let n = seed_n.add(&num_t.div(&den));
    Ok((m, n))
}
