//! Backlund partners and Miura-type changes of variables: carries solutions
//! of the fourth-order potential equations to the coupled second-order
//! systems (the sinh-Gordon system in light-cone variables and the Kaup
//! system), and builds the induced first-order eigenfunction doublets and
//! partner singular manifolds. Constructors validate their inputs by
//! residual sampling, so a non-partner or non-eigenfunction argument is
//! rejected instead of silently producing garbage downstream.

use crate::fields::{FieldExpr, Point2};
use crate::residuals::{
    check_on_sample, row, Bindings, EquationId, FieldRole, ResidualError, ScalarRole,
    DEFAULT_POLE_GUARD, SAMPLE_SEED,
};
use rand::Rng;
use rand::SeedableRng;
use thiserror::Error;

/// Pair and doublet validation tolerance at the sampled points; matches
/// the Darboux constructors so every constructive entry point applies the
/// same accept/reject bar.
pub const MIURA_RESIDUAL_TOL: f64 = 1e-8;
/// Number of pseudo-random validation points (fixed seed, deterministic).
pub const MIURA_VALIDATION_POINTS: usize = 20;
/// A probed expression whose magnitude stays below this at every probe
/// point is treated as identically zero. Structural zeros evaluate to an
/// exact 0.0 in jet arithmetic; the band only absorbs rounding noise from
/// cancelling compositions.
pub const IDENTICALLY_ZERO_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MiuraError {
    #[error(
        "not a Backlund pair: {equation} residual {residual:.3e} at ({a}, {b}) exceeds {MIURA_RESIDUAL_TOL:.0e}"
    )]
    NotABacklundPair { equation: &'static str, residual: f64, a: f64, b: f64 },
    #[error(
        "not an eigenfunction of this potential: {equation} residual {residual:.3e} at ({a}, {b}) exceeds {MIURA_RESIDUAL_TOL:.0e}"
    )]
    NotAnEigenfunction { equation: &'static str, residual: f64, a: f64, b: f64 },
    #[error("coupling parameter {name} must be nonzero")]
    ZeroParameter { name: &'static str },
    #[error("coupling parameter {name} is not carried by this doublet")]
    MissingParameter { name: &'static str },
    #[error(
        "Backlund partner undefined: {denominator} vanishes identically but its numerator does not"
    )]
    UndefinedPartner { denominator: &'static str },
    #[error("could not find pole-free validation points in the sampling box")]
    NoValidPoints,
    #[error("residual evaluation failed during validation: {0}")]
    Residual(#[from] ResidualError),
}

/// Which coupled second-order system a pair feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MiuraFamily {
    SinhGordon,
    Kaup,
}

impl MiuraFamily {
    pub fn name(self) -> &'static str {
        match self {
            MiuraFamily::SinhGordon => "SINH_GORDON",
            MiuraFamily::Kaup => "KAUP",
        }
    }
}

/// A validated Backlund pair (m, m_hat) together with the coupled fields
/// u = m - m_hat and eta = m + m_hat it induces.
#[derive(Debug, Clone)]
pub struct MiuraPair {
    pub family: MiuraFamily,
    pub m: FieldExpr,
    pub m_hat: FieldExpr,
    pub u: FieldExpr,
    pub eta: FieldExpr,
}

/// A first-order doublet (psi, psi_hat) with its coupling parameters. The
/// sinh-Gordon construction determines both a and a_hat (a_hat = -lambda/a);
/// the Kaup doublets each carry only the parameter their own first-order
/// equations contain, so the other is absent rather than fabricated.
#[derive(Debug, Clone)]
pub struct CoupledEigen {
    pub psi: FieldExpr,
    pub psi_hat: FieldExpr,
    pub a: Option<f64>,
    pub a_hat: Option<f64>,
    pub lambda: f64,
}

/// True when `f` is zero at every pole-free probe point. Points where the
/// expression itself divides by zero are skipped; a fully singular
/// expression cannot be classified.
fn probes_identically_zero(f: &FieldExpr) -> Result<bool, MiuraError> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    let mut checked = 0;
    for _ in 0..MIURA_VALIDATION_POINTS * 10 {
        if checked == MIURA_VALIDATION_POINTS {
            break;
        }
        let p = Point2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        match f.evaluate_guarded(p, 1, 1, DEFAULT_POLE_GUARD) {
            Ok(jet) => {
                if jet.value().abs() > IDENTICALLY_ZERO_TOL {
                    return Ok(false);
                }
                checked += 1;
            }
            Err(e) => {
                let re = ResidualError::from(e);
                if !re.is_skippable_pole() {
                    return Err(re.into());
                }
            }
        }
    }
    if checked == 0 {
        return Err(MiuraError::NoValidPoints);
    }
    Ok(true)
}

/// Worst normalized residual of explicit relation rows (each row a list of
/// term expressions summing to zero) at the fixed validation sample.
fn worst_row_sample(rows: &[Vec<FieldExpr>]) -> Result<(f64, Point2), MiuraError> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    let mut worst = (0.0f64, Point2::new(f64::NAN, f64::NAN));
    let mut checked = 0;
    'draws: for _ in 0..MIURA_VALIDATION_POINTS * 10 {
        if checked == MIURA_VALIDATION_POINTS {
            break;
        }
        let p = Point2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let mut residuals = Vec::with_capacity(rows.len());
        for terms in rows {
            let mut values = Vec::with_capacity(terms.len());
            for term in terms {
                match term.evaluate_guarded(p, 1, 1, DEFAULT_POLE_GUARD) {
                    Ok(jet) => values.push(jet.value()),
                    Err(e) => {
                        let re = ResidualError::from(e);
                        if re.is_skippable_pole() {
                            continue 'draws;
                        }
                        return Err(re.into());
                    }
                }
            }
            residuals.push(row(&values));
        }
        checked += 1;
        for r in residuals {
            if r > worst.0 {
                worst = (r, p);
            }
        }
    }
    if checked < MIURA_VALIDATION_POINTS {
        return Err(MiuraError::NoValidPoints);
    }
    Ok(worst)
}

/// Worst catalog residual at the fixed validation sample, as a pair check.
fn validate_pair(eq: EquationId, b: &Bindings) -> Result<(), MiuraError> {
    let (worst, at) =
        check_on_sample(eq, b, MIURA_VALIDATION_POINTS).map_err(|e| match e {
            ResidualError::EmptyScan { .. } => MiuraError::NoValidPoints,
            other => MiuraError::Residual(other),
        })?;
    if worst > MIURA_RESIDUAL_TOL {
        return Err(MiuraError::NotABacklundPair {
            equation: eq.name(),
            residual: worst,
            a: at.a,
            b: at.b,
        });
    }
    Ok(())
}

/// The auto-Backlund partner on the AKNS side:
/// m_hat = m + (1/2) m_xy / m_y. When m_y vanishes identically the partner
/// is the continuous extension m_hat = m (its numerator m_xy = (m_y)_x then
/// vanishes identically too); scattered zeros of m_y are left in the
/// expression and surface as pole errors at evaluation time.
pub fn backlund_partner_akns(m: &FieldExpr) -> Result<FieldExpr, MiuraError> {
    let den = m.deriv(0, 1);
    let num = m.deriv(1, 1);
    if probes_identically_zero(&den)? {
        return if probes_identically_zero(&num)? {
            Ok(m.clone())
        } else {
            Err(MiuraError::UndefinedPartner { denominator: "m_y" })
        };
    }
    Ok(m.add(&num.div(&den).scale(0.5)))
}

/// The auto-Backlund partner on the non-local Boussinesq side:
/// m_hat = m + (m_xx - m_t) / (2 m_x), with the same identically-zero
/// continuous extension in m_x. Here the extension genuinely needs the
/// numerator probe: m = g(t) has m_x identically zero but m_xx - m_t = -g'.
pub fn backlund_partner_nlbq(m: &FieldExpr) -> Result<FieldExpr, MiuraError> {
    let den = m.deriv(1, 0).scale(2.0);
    let num = m.deriv(2, 0).sub(&m.deriv(0, 1));
    if probes_identically_zero(&den)? {
        return if probes_identically_zero(&num)? {
            Ok(m.clone())
        } else {
            Err(MiuraError::UndefinedPartner { denominator: "m_x" })
        };
    }
    Ok(m.add(&num.div(&den)))
}

/// Admit (m, m_hat) as a sinh-Gordon-side pair after checking the coupled
/// pair relations m_xy = -2(m - m_hat) m_y and m_hat_xy = 2(m - m_hat)
/// m_hat_y, then form u = m - m_hat and eta = m + m_hat.
pub fn shg_from_pair(m: &FieldExpr, m_hat: &FieldExpr) -> Result<MiuraPair, MiuraError> {
    let b = Bindings::new()
        .with_field(FieldRole::LowerM, m.clone())
        .with_field(FieldRole::LowerMHat, m_hat.clone());
    validate_pair(EquationId::ShgBt, &b)?;
    Ok(MiuraPair {
        family: MiuraFamily::SinhGordon,
        m: m.clone(),
        m_hat: m_hat.clone(),
        u: m.sub(m_hat),
        eta: m.add(m_hat),
    })
}

/// Admit (m, m_hat) as a Kaup-side pair after checking the coupled heat-type
/// relations m_t = m_xx + 2(m - m_hat) m_x and
/// m_hat_t = -m_hat_xx + 2(m - m_hat) m_hat_x.
pub fn kaup_from_pair(m: &FieldExpr, m_hat: &FieldExpr) -> Result<MiuraPair, MiuraError> {
    let b = Bindings::new()
        .with_field(FieldRole::LowerM, m.clone())
        .with_field(FieldRole::LowerMHat, m_hat.clone());
    validate_pair(EquationId::KaupMm, &b)?;
    Ok(MiuraPair {
        family: MiuraFamily::Kaup,
        m: m.clone(),
        m_hat: m_hat.clone(),
        u: m.sub(m_hat),
        eta: m.add(m_hat),
    })
}

/// Build the sinh-Gordon doublet from an eigenfunction psi of the potential
/// behind u: psi_hat = (psi_x + u psi)/a and a_hat = -lambda/a. The defining
/// relation psi_x = a psi_hat - u psi holds by construction; the partner
/// relation psi_hat_x = a_hat psi + u psi_hat is equivalent to the
/// second-order Lax x-equation for psi, so sampling the first-order system
/// is exactly the non-eigenfunction detector.
pub fn shg_coupled_eigen(
    psi: &FieldExpr,
    u: &FieldExpr,
    a: f64,
    lambda: f64,
) -> Result<CoupledEigen, MiuraError> {
    if a == 0.0 {
        return Err(MiuraError::ZeroParameter { name: "a" });
    }
    let a_hat = -lambda / a;
    let psi_hat = psi.deriv(1, 0).add(&u.mul(psi)).scale(1.0 / a);
    let b = Bindings::new()
        .with_field(FieldRole::U, u.clone())
        .with_field(FieldRole::Psi, psi.clone())
        .with_field(FieldRole::PsiHat, psi_hat.clone())
        .with_scalar(ScalarRole::A, a)
        .with_scalar(ScalarRole::AHat, a_hat);
    let (worst, at) = check_on_sample(EquationId::ShgFirstOrder, &b, MIURA_VALIDATION_POINTS)
        .map_err(|e| match e {
            ResidualError::EmptyScan { .. } => MiuraError::NoValidPoints,
            other => MiuraError::Residual(other),
        })?;
    if worst > MIURA_RESIDUAL_TOL {
        return Err(MiuraError::NotAnEigenfunction {
            equation: EquationId::ShgFirstOrder.name(),
            residual: worst,
            a: at.a,
            b: at.b,
        });
    }
    Ok(CoupledEigen {
        psi: psi.clone(),
        psi_hat,
        a: Some(a),
        a_hat: Some(a_hat),
        lambda,
    })
}

/// Build the Kaup minus doublet: psi_hat = (psi_x + (u + lambda) psi)/a.
/// The relation psi_x = a psi_hat - (u + lambda) psi holds by construction;
/// the sampled check is the partner relation
/// a psi_hat_x = ((u_x - eta_x)/2) psi, which is equivalent to the minus
/// Lax x-equation for psi and so detects non-eigenfunctions.
pub fn kaup_coupled_eigen_minus(
    psi_minus: &FieldExpr,
    u: &FieldExpr,
    eta: &FieldExpr,
    a: f64,
    lambda: f64,
) -> Result<CoupledEigen, MiuraError> {
    if a == 0.0 {
        return Err(MiuraError::ZeroParameter { name: "a" });
    }
    let u_shift = u.add(&FieldExpr::constant(lambda));
    let psi_hat = psi_minus.deriv(1, 0).add(&u_shift.mul(psi_minus)).scale(1.0 / a);
    let lhs = psi_hat.deriv(1, 0).scale(a);
    let rhs = u.deriv(1, 0).sub(&eta.deriv(1, 0)).scale(-0.5).mul(psi_minus);
    let (worst, at) = worst_row_sample(&[vec![lhs, rhs]])?;
    if worst > MIURA_RESIDUAL_TOL {
        return Err(MiuraError::NotAnEigenfunction {
            equation: EquationId::KaupFirstOrder.name(),
            residual: worst,
            a: at.a,
            b: at.b,
        });
    }
    Ok(CoupledEigen {
        psi: psi_minus.clone(),
        psi_hat,
        a: Some(a),
        a_hat: None,
        lambda,
    })
}

/// Build the Kaup plus doublet: psi_hat = -2 a_hat psi_x / (u_x + eta_x).
/// That definition makes a_hat psi_x = -((u_x + eta_x)/2) psi_hat hold by
/// construction; the sampled check is the partner relation
/// psi_hat_x = a_hat psi + (u + lambda) psi_hat, equivalent to the plus Lax
/// x-equation for psi. Zeros of u_x + eta_x stay in the expression and
/// surface as pole errors at evaluation time.
pub fn kaup_coupled_eigen_plus(
    psi_plus: &FieldExpr,
    u: &FieldExpr,
    eta: &FieldExpr,
    a_hat: f64,
    lambda: f64,
) -> Result<CoupledEigen, MiuraError> {
    if a_hat == 0.0 {
        return Err(MiuraError::ZeroParameter { name: "a_hat" });
    }
    let den = u.deriv(1, 0).add(&eta.deriv(1, 0));
    let psi_hat = psi_plus.deriv(1, 0).scale(-2.0 * a_hat).div(&den);
    let lhs = psi_hat.deriv(1, 0);
    let mid = psi_plus.scale(-a_hat);
    let tail = u.add(&FieldExpr::constant(lambda)).mul(&psi_hat).neg();
    let (worst, at) = worst_row_sample(&[vec![lhs, mid, tail]])?;
    if worst > MIURA_RESIDUAL_TOL {
        return Err(MiuraError::NotAnEigenfunction {
            equation: EquationId::KaupFirstOrder.name(),
            residual: worst,
            a: at.a,
            b: at.b,
        });
    }
    Ok(CoupledEigen {
        psi: psi_plus.clone(),
        psi_hat,
        a: None,
        a_hat: Some(a_hat),
        lambda,
    })
}

/// Partner singular manifold on the sinh-Gordon side, from the integrated
/// coupling relation a phi_hat + a_hat phi = psi psi_hat:
/// phi_hat = (psi psi_hat - a_hat phi)/a. Its x-derivative is psi_hat^2.
pub fn shg_partner_manifold(
    eigen: &CoupledEigen,
    phi: &FieldExpr,
) -> Result<FieldExpr, MiuraError> {
    let a = eigen.a.ok_or(MiuraError::MissingParameter { name: "a" })?;
    let a_hat = eigen.a_hat.ok_or(MiuraError::MissingParameter { name: "a_hat" })?;
    if a == 0.0 {
        return Err(MiuraError::ZeroParameter { name: "a" });
    }
    Ok(eigen.psi.mul(&eigen.psi_hat).sub(&phi.scale(a_hat)).scale(1.0 / a))
}

/// Partner singular manifold on the Kaup side, from
/// a phi_hat + a_hat phi = psi_minus psi_hat_plus using the minus doublet's
/// base eigenfunction and the plus doublet's transformed one. Its
/// x-derivative is psi_hat_plus psi_hat_minus.
pub fn kaup_partner_manifold(
    minus: &CoupledEigen,
    plus: &CoupledEigen,
    phi: &FieldExpr,
) -> Result<FieldExpr, MiuraError> {
    let a = minus.a.ok_or(MiuraError::MissingParameter { name: "a" })?;
    let a_hat = plus.a_hat.ok_or(MiuraError::MissingParameter { name: "a_hat" })?;
    if a == 0.0 {
        return Err(MiuraError::ZeroParameter { name: "a" });
    }
    Ok(minus.psi.mul(&plus.psi_hat).sub(&phi.scale(a_hat)).scale(1.0 / a))
}

/// Sample the two-manifold coupling condition and its derivative forms for
/// a Kaup pair: the product relation in the logarithmic derivatives of phi
/// and phi_hat with A = (v-w)/2 + u and A_hat = (vhat+what)/2 - u, the
/// spectral relation tying u to lambda, and the first-order equations for
/// A and A_hat. Returns the worst residual over both members.
pub fn kaup_coupling_check(
    pair: &MiuraPair,
    eigen: &CoupledEigen,
    phi: &FieldExpr,
    phi_hat: &FieldExpr,
) -> Result<(f64, Point2), MiuraError> {
    let b = Bindings::new()
        .with_field(FieldRole::U, pair.u.clone())
        .with_field(FieldRole::Phi, phi.clone())
        .with_field(FieldRole::PhiHat, phi_hat.clone())
        .with_scalar(ScalarRole::Lambda, eigen.lambda);
    let mut worst = (0.0f64, Point2::new(f64::NAN, f64::NAN));
    for eq in [EquationId::KaupCoupling, EquationId::KaupCouplingDx] {
        let (r, at) = check_on_sample(eq, &b, MIURA_VALIDATION_POINTS).map_err(|e| match e {
            ResidualError::EmptyScan { .. } => MiuraError::NoValidPoints,
            other => MiuraError::Residual(other),
        })?;
        if r > worst.0 {
            worst = (r, at);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::parse_field;
    use crate::solitons::{akns_eigen, nlbq_eigen};

    fn expr(text: &str) -> FieldExpr {
        parse_field(text).unwrap()
    }

    #[test]
    fn trivial_partners_extend_continuously() {
        // m depends only on x: m_y and m_xy vanish identically, partner is m.
        let m = expr("exp(0.4*x)");
        let partner = backlund_partner_akns(&m).unwrap();
        assert_eq!(partner.to_text(), m.to_text());

        // m = 0.5*y has m_y = 0.5: the quotient form survives and evaluates
        // back to m because the numerator vanishes.
        let m = expr("0.5*y");
        let partner = backlund_partner_akns(&m).unwrap();
        let p = Point2::new(0.7, -1.1);
        assert!((partner.value_at(p).unwrap() - m.value_at(p).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn flat_potential_with_moving_numerator_is_rejected() {
        // m = t^2 has m_x identically zero but m_xx - m_t = -2t nonzero.
        let m = expr("y*y");
        match backlund_partner_nlbq(&m) {
            Err(MiuraError::UndefinedPartner { denominator }) => {
                assert_eq!(denominator, "m_x")
            }
            other => panic!("expected UndefinedPartner, got {other:?}"),
        }
    }

    #[test]
    fn trivial_pairs_are_admitted_and_couple_to_constants() {
        let m = expr("0.5*y");
        let pair = shg_from_pair(&m, &m).unwrap();
        assert_eq!(pair.family, MiuraFamily::SinhGordon);
        let p = Point2::new(0.3, -0.7);
        assert_eq!(pair.u.value_at(p).unwrap(), 0.0);
        assert!((pair.eta.value_at(p).unwrap() - 2.0 * 0.5 * -0.7).abs() < 1e-15);

        let m = expr("0.8*x");
        let pair = kaup_from_pair(&m, &m).unwrap();
        assert_eq!(pair.family, MiuraFamily::Kaup);
        assert!((pair.eta.value_at(p).unwrap() - 2.0 * 0.8 * 0.3).abs() < 1e-15);
    }

    #[test]
    fn non_partner_inputs_are_rejected_with_the_failing_equation() {
        let m = expr("0.3*x*y + y");
        let m_hat = expr("x - 0.2*y");
        match shg_from_pair(&m, &m_hat) {
            Err(MiuraError::NotABacklundPair { equation, residual, .. }) => {
                assert_eq!(equation, "SHG_BT");
                assert!(residual > 1e-3);
            }
            other => panic!("expected NotABacklundPair, got {other:?}"),
        }
        match kaup_from_pair(&m, &m_hat) {
            Err(MiuraError::NotABacklundPair { equation, .. }) => {
                assert_eq!(equation, "KAUP_MM")
            }
            other => panic!("expected NotABacklundPair, got {other:?}"),
        }
    }

    #[test]
    fn seed_doublet_matches_hand_form() {
        // Seed potential m = a0*y gives u = 0; for psi = exp(kx - (a0/k)y)
        // the doublet collapses to psi_hat = (k/a) psi with a_hat = k^2/a.
        let k = 1.0;
        let a0 = 0.5;
        let a = 1.3;
        let psi = akns_eigen(k, a0, 0.0).unwrap().psi;
        let u = FieldExpr::constant(0.0);
        let eig = shg_coupled_eigen(&psi, &u, a, -k * k).unwrap();
        assert_eq!(eig.a_hat, Some(k * k / a));
        let p = Point2::new(0.4, -0.6);
        let want = (k / a) * psi.value_at(p).unwrap();
        assert!((eig.psi_hat.value_at(p).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn zero_and_junk_doublet_inputs_are_rejected() {
        let psi = expr("exp(x + y)");
        let u = FieldExpr::constant(0.0);
        match shg_coupled_eigen(&psi, &u, 0.0, -4.0) {
            Err(MiuraError::ZeroParameter { name }) => assert_eq!(name, "a"),
            other => panic!("expected ZeroParameter, got {other:?}"),
        }
        // exp(x + y) solves the flat x-equation only at lambda = -1, so it
        // is not an eigenfunction at lambda = -4.
        match shg_coupled_eigen(&psi, &u, 1.0, -4.0) {
            Err(MiuraError::NotAnEigenfunction { equation, residual, .. }) => {
                assert_eq!(equation, "SHG_FIRST_ORDER");
                assert!(residual > 1e-3);
            }
            other => panic!("expected NotAnEigenfunction, got {other:?}"),
        }
    }

    #[test]
    fn kaup_trivial_minus_doublet_has_slope_minus_a0() {
        // Flat Kaup pair u = 0, eta = 2 a0 x; the minus eigenfunction of the
        // seed satisfies a psi_hat_x = -a0 psi once the doublet is built.
        let a0 = 1.0;
        let mode = 2.0;
        let a = 1.0;
        let lambda = mode + a0 / mode;
        let psi_minus = nlbq_eigen(mode, a0, 0.0).unwrap().psi_minus.unwrap();
        let u = FieldExpr::constant(0.0);
        let eta = FieldExpr::coord_a().scale(2.0 * a0);
        let eig = kaup_coupled_eigen_minus(&psi_minus, &u, &eta, a, lambda).unwrap();
        assert_eq!(eig.a_hat, None);
        let p = Point2::new(0.2, 0.5);
        let lhs = a * eig.psi_hat.deriv(1, 0).value_at(p).unwrap();
        let rhs = -a0 * psi_minus.value_at(p).unwrap();
        assert!((lhs - rhs).abs() < 1e-13 * (1.0 + rhs.abs()));
    }

    #[test]
    fn partner_manifold_requires_the_carried_parameters() {
        let a0 = 1.0;
        let e = nlbq_eigen(2.0, a0, 0.0).unwrap();
        let psi_minus = e.psi_minus.unwrap();
        let u = FieldExpr::constant(0.0);
        let eta = FieldExpr::coord_a().scale(2.0 * a0);
        let lambda = 2.0 + a0 / 2.0;
        let minus = kaup_coupled_eigen_minus(&psi_minus, &u, &eta, 1.0, lambda).unwrap();
        let phi = e.manifold.unwrap();
        // The minus doublet alone does not know a_hat.
        match kaup_partner_manifold(&minus, &minus, &phi) {
            Err(MiuraError::MissingParameter { name }) => assert_eq!(name, "a_hat"),
            other => panic!("expected MissingParameter, got {other:?}"),
        }
    }
}
