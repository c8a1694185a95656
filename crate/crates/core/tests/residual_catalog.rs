//! Catalog-wide residual checks: every equation must vanish on the
//! constructions that solve it, must NOT vanish on generic non-solutions,
//! must reject missing bindings, and must be invariant under rescaling of
//! the singular manifold.

use smm_core::fields::{parse_field, FieldExpr, Point2};
use smm_core::residuals::{
    scan_grid, Bindings, EquationId, FieldRole, GridBox, ResidualError, ScalarRole,
    ALL_EQUATIONS, DEFAULT_POLE_GUARD,
};
use smm_core::solitons::{
    akns_eigen, akns_seed, akns_soliton, nlbq_eigen, nlbq_seed, nlbq_seed_partner,
    nlbq_soliton, Family, SolitonSpec,
};

/// Closed-form constructions are exact identities; everything below the
/// jet-arithmetic rounding floor. Generous margin over the observed ~1e-14.
const ZERO_TOL: f64 = 1e-10;
/// Junk inputs must be visibly non-solutions.
const NONZERO_FLOOR: f64 = 1e-3;
/// Manifold rescaling phi -> c phi must not move residuals beyond rounding.
const SCALE_TOL: f64 = 1e-12;

fn grid_max(eq: EquationId, b: &Bindings) -> f64 {
    let entry = scan_grid(eq, b, GridBox::standard(), 20, 20, DEFAULT_POLE_GUARD).unwrap();
    assert_eq!(entry.skipped, 0, "{}: unexpected pole skips", eq.name());
    entry.max_residual
}

#[test]
fn akns_members_vanish_on_soliton_constructions() {
    let a0 = 0.5;
    let spec2 = SolitonSpec {
        family: Family::Akns,
        a0,
        modes: vec![(1.0, 0.0).into(), (2.0, 0.0).into()],
    };
    let m2 = akns_soliton(&spec2).unwrap();
    let spec1 = SolitonSpec { family: Family::Akns, a0, modes: vec![(1.0, 0.0).into()] };
    let m1 = akns_soliton(&spec1).unwrap();

    for m in [m1.clone(), m2] {
        let b = Bindings::new().with_field(FieldRole::M, m.clone());
        assert!(grid_max(EquationId::AknsPde, &b) <= ZERO_TOL);
        let b = Bindings::new().with_field(FieldRole::LowerM, m);
        assert!(grid_max(EquationId::AknsIntegrated, &b) <= ZERO_TOL);
    }

    // Seed Lax pair: M = a0 y with eigenfunction exp(kx - (a0/k)y).
    let eig = akns_eigen(1.3, a0, 0.2).unwrap();
    let b = Bindings::new()
        .with_field(FieldRole::M, akns_seed(a0))
        .with_field(FieldRole::Psi, eig.psi.clone())
        .with_scalar(ScalarRole::Lambda, eig.lambda);
    assert!(grid_max(EquationId::AknsLaxX, &b) <= ZERO_TOL);
    assert!(grid_max(EquationId::AknsLaxY, &b) <= ZERO_TOL);

    // Truncation and singular-manifold equations on the seed manifold.
    let b = Bindings::new()
        .with_field(FieldRole::M, akns_seed(a0))
        .with_field(FieldRole::Phi, eig.manifold.clone().unwrap())
        .with_scalar(ScalarRole::Lambda, eig.lambda);
    assert!(grid_max(EquationId::AknsTruncMx, &b) <= ZERO_TOL);
    assert!(grid_max(EquationId::AknsTruncMy, &b) <= ZERO_TOL);
    let b = Bindings::new()
        .with_field(FieldRole::Phi, eig.manifold.clone().unwrap())
        .with_scalar(ScalarRole::Lambda, eig.lambda);
    assert!(grid_max(EquationId::AknsSmS, &b) <= ZERO_TOL);
    assert!(grid_max(EquationId::AknsSmCompat, &b) <= ZERO_TOL);
    assert!(grid_max(EquationId::AknsSmIsAkns, &b) <= ZERO_TOL);
}

#[test]
fn nlbq_members_vanish_on_soliton_constructions() {
    let a0 = 1.0;
    let spec2 = SolitonSpec {
        family: Family::Nlbq,
        a0,
        modes: vec![(2.0, 0.0).into(), (3.0, 0.0).into()],
    };
    let (m2, n2) = nlbq_soliton(&spec2).unwrap();
    let spec1 = SolitonSpec { family: Family::Nlbq, a0, modes: vec![(2.0, 0.0).into()] };
    let (m1, n1) = nlbq_soliton(&spec1).unwrap();

    for (m, n) in [(m1, n1), (m2, n2)] {
        let b = Bindings::new()
            .with_field(FieldRole::M, m.clone())
            .with_field(FieldRole::N, n);
        assert!(grid_max(EquationId::NlbqSys, &b) <= ZERO_TOL);
        let b = Bindings::new().with_field(FieldRole::M, m);
        assert!(grid_max(EquationId::NlbqSingle, &b) <= ZERO_TOL);
    }

    // Seed Lax pairs and the quadratic eigenfunction identity.
    let eig = nlbq_eigen(2.0, a0, 0.0).unwrap();
    let seed = nlbq_seed(a0);
    let b = Bindings::new()
        .with_field(FieldRole::M, seed.clone())
        .with_field(FieldRole::PsiPlus, eig.psi.clone())
        .with_field(FieldRole::PsiMinus, eig.psi_minus.clone().unwrap())
        .with_scalar(ScalarRole::Lambda, eig.lambda);
    assert!(grid_max(EquationId::NlbqLaxPlus, &b) <= ZERO_TOL);
    assert!(grid_max(EquationId::NlbqLaxMinus, &b) <= ZERO_TOL);
    assert!(grid_max(EquationId::AppdIdentity, &b) <= ZERO_TOL);

    let b = Bindings::new()
        .with_field(FieldRole::M, seed)
        .with_field(FieldRole::Phi, eig.manifold.clone().unwrap())
        .with_scalar(ScalarRole::Lambda, eig.lambda);
    assert!(grid_max(EquationId::NlbqTruncMx, &b) <= ZERO_TOL);
    assert!(grid_max(EquationId::NlbqTruncMt, &b) <= ZERO_TOL);
    let b = Bindings::new()
        .with_field(FieldRole::Phi, eig.manifold.clone().unwrap())
        .with_scalar(ScalarRole::Lambda, eig.lambda);
    assert!(grid_max(EquationId::NlbqSm1, &b) <= ZERO_TOL);
    assert!(grid_max(EquationId::NlbqSm2, &b) <= ZERO_TOL);

    // N for the seed is 2 a0^2 t (so that N_x = M_t = 0 but the quadratic
    // relation M_x N_t = 2 M_x^3 holds: a0 * 2a0^2 = 2 a0^3).
    let b = Bindings::new()
        .with_field(FieldRole::M, nlbq_seed(a0))
        .with_field(FieldRole::N, nlbq_seed_partner(a0));
    assert!(grid_max(EquationId::NlbqSys, &b) <= ZERO_TOL);
}

/// Generic smooth fields with no special structure: every equation in the
/// catalog must see through them. Constants are arbitrary but fixed; each
/// role gets a distinct expression so no cross-term cancels by symmetry.
fn junk_bindings() -> Bindings {
    let f = |s: &str| parse_field(s).unwrap();
    Bindings::new()
        .with_field(FieldRole::M, f("0.7*exp(0.4*x + 0.3*y) + 0.2*x*y"))
        .with_field(FieldRole::N, f("0.5*exp(0.2*x - 0.4*y) + 0.3*x^2"))
        .with_field(FieldRole::LowerM, f("0.6*exp(0.3*x + 0.5*y) + 0.1*x"))
        .with_field(FieldRole::LowerMHat, f("0.8*exp(-0.2*x + 0.4*y) + 0.2*y"))
        .with_field(FieldRole::U, f("0.9*exp(0.1*x + 0.3*y) + 0.1*x*y"))
        .with_field(FieldRole::Eta, f("0.4*exp(0.5*x - 0.2*y) - 0.3*x"))
        .with_field(FieldRole::Psi, f("exp(0.6*x + 0.2*y) + 0.1"))
        .with_field(FieldRole::PsiHat, f("exp(-0.3*x + 0.5*y) + 0.2*x"))
        .with_field(FieldRole::PsiPlus, f("exp(0.2*x + 0.6*y) + 0.3*y"))
        .with_field(FieldRole::PsiMinus, f("exp(0.4*x - 0.3*y) + 0.2"))
        .with_field(FieldRole::PsiHatPlus, f("exp(-0.1*x + 0.2*y) + 0.4*x"))
        .with_field(FieldRole::PsiHatMinus, f("exp(0.3*x + 0.1*y) - 0.2*y"))
        .with_field(FieldRole::Phi, f("exp(0.5*x + 0.4*y) + 0.3*x + 2"))
        .with_field(FieldRole::PhiHat, f("exp(-0.4*x + 0.3*y) + 0.2*y + 3"))
        .with_field(FieldRole::Tau, f("exp(0.2*x + 0.3*y) + 1"))
        .with_scalar(ScalarRole::Lambda, 0.7)
        .with_scalar(ScalarRole::A, 1.3)
        .with_scalar(ScalarRole::AHat, -0.9)
        .with_scalar(ScalarRole::A0, 0.8)
}

#[test]
fn every_equation_is_nonzero_on_generic_fields() {
    let b = junk_bindings();
    let p = Point2::new(0.4, -0.6);
    for &eq in ALL_EQUATIONS {
        let r = eq.evaluate(&b, p, DEFAULT_POLE_GUARD).unwrap();
        if eq.is_identity() {
            // AKNS_SM_COMPAT and NLBQ_SM_1 hold for ANY smooth manifold:
            // q_x + q v = phi_xy/phi_x exactly, so the compatibility rows
            // reduce to commutativity of mixed partials (and the Schwarzian
            // transformation law). No binding can violate them; they check
            // the jet arithmetic itself, so here they must vanish even on
            // junk fields that drive every other member above the floor.
            assert!(
                r <= 1e-12,
                "{} is identity-class but evaluated to {r:.3e}",
                eq.name()
            );
        } else {
            assert!(
                r >= NONZERO_FLOOR,
                "{} evaluated to {r:.3e} on generic non-solution fields",
                eq.name()
            );
        }
    }
}

#[test]
fn required_roles_are_exact() {
    let full = junk_bindings();
    let p = Point2::new(0.4, -0.6);
    for &eq in ALL_EQUATIONS {
        // Sufficiency: binding exactly the declared roles evaluates cleanly.
        let mut only = Bindings::new();
        for &role in eq.required_fields() {
            only.set_field(role, full.field(role).unwrap().clone());
        }
        for &role in eq.required_scalars() {
            only.set_scalar(role, full.scalar(role).unwrap());
        }
        eq.evaluate(&only, p, DEFAULT_POLE_GUARD)
            .unwrap_or_else(|e| panic!("{} with declared roles failed: {e}", eq.name()));

        // Necessity: dropping any declared field role must be reported.
        for &dropped in eq.required_fields() {
            let mut partial = Bindings::new();
            for &role in eq.required_fields() {
                if role != dropped {
                    partial.set_field(role, full.field(role).unwrap().clone());
                }
            }
            for &role in eq.required_scalars() {
                partial.set_scalar(role, full.scalar(role).unwrap());
            }
            match eq.evaluate(&partial, p, DEFAULT_POLE_GUARD) {
                Err(ResidualError::MissingField { role, .. }) => {
                    assert_eq!(role, dropped.name(), "{}", eq.name())
                }
                other => panic!(
                    "{} without `{}` should report the missing field, got {other:?}",
                    eq.name(),
                    dropped.name()
                ),
            }
        }
        for &dropped in eq.required_scalars() {
            let mut partial = Bindings::new();
            for &role in eq.required_fields() {
                partial.set_field(role, full.field(role).unwrap().clone());
            }
            for &role in eq.required_scalars() {
                if role != dropped {
                    partial.set_scalar(role, full.scalar(role).unwrap());
                }
            }
            match eq.evaluate(&partial, p, DEFAULT_POLE_GUARD) {
                Err(ResidualError::MissingScalar { role, .. }) => {
                    assert_eq!(role, dropped.name(), "{}", eq.name())
                }
                other => panic!(
                    "{} without `{}` should report the missing scalar, got {other:?}",
                    eq.name(),
                    dropped.name()
                ),
            }
        }
    }
}

#[test]
fn manifold_rescaling_leaves_residuals_unchanged() {
    // v, q, w, s are ratios of phi derivatives, so phi -> c phi cancels.
    // Checked on a non-solution so the residuals are O(1), making the
    // comparison meaningful, and with a non-power-of-two factor.
    let phi = parse_field("exp(0.5*x + 0.4*y) + 0.3*x + 2").unwrap();
    let scaled = FieldExpr::constant(3.7) * phi.clone();
    let p = Point2::new(0.4, -0.6);
    // Identity-class members stay at rounding level regardless of phi, so
    // only the genuinely nonzero manifold equations are compared here.
    for eq in [
        EquationId::AknsSmS,
        EquationId::AknsSmIsAkns,
        EquationId::NlbqSm2,
    ] {
        let b1 = Bindings::new()
            .with_field(FieldRole::Phi, phi.clone())
            .with_scalar(ScalarRole::Lambda, 0.7);
        let b2 = Bindings::new()
            .with_field(FieldRole::Phi, scaled.clone())
            .with_scalar(ScalarRole::Lambda, 0.7);
        let r1 = eq.evaluate(&b1, p, DEFAULT_POLE_GUARD).unwrap();
        let r2 = eq.evaluate(&b2, p, DEFAULT_POLE_GUARD).unwrap();
        assert!(r1 > NONZERO_FLOOR, "{}: want a visibly nonzero residual", eq.name());
        assert!(
            (r1 - r2).abs() <= SCALE_TOL * (1.0 + r1.abs()),
            "{}: rescaling moved the residual from {r1} to {r2}",
            eq.name()
        );
    }
}

#[test]
fn worst_point_is_deterministic_and_inside_box() {
    let spec = SolitonSpec {
        family: Family::Akns,
        a0: 0.5,
        modes: vec![(1.0, 0.0).into()],
    };
    let m = akns_soliton(&spec).unwrap();
    let b = Bindings::new().with_field(FieldRole::M, m);
    let e1 = scan_grid(EquationId::AknsPde, &b, GridBox::standard(), 20, 20, 1e-9).unwrap();
    let e2 = scan_grid(EquationId::AknsPde, &b, GridBox::standard(), 20, 20, 1e-9).unwrap();
    assert_eq!(e1.worst, e2.worst);
    assert_eq!(e1.max_residual, e2.max_residual);
    assert_eq!(e1.evaluated, 400);
    assert!(e1.worst.a >= -3.0 && e1.worst.a <= 3.0);
    assert!(e1.worst.b >= -3.0 && e1.worst.b <= 3.0);
}
