//! The equation catalog: every differential relation the library can verify,
//! evaluated as a scale-normalized residual at a point or over a grid.
//!
//! A residual is |sum of additive terms| / (1 + sum of |terms|), so a value
//! of zero means the relation holds exactly and the 1e-8 targets are
//! meaningful both near soliton cores (where fields are O(1)) and far away
//! (where they decay or grow exponentially). Multi-relation members report
//! the worst row. All derivatives come from jet evaluation of the bound
//! field expressions; quantities like v = phi_xx/phi_x are formed here by
//! jet division, never bound directly.

use crate::fields::{FieldError, FieldExpr, Point2};
use crate::jets::{align, Jet2, DEFAULT_ORDER_A, DEFAULT_ORDER_B};
use std::collections::BTreeMap;
use std::collections::HashMap;
use thiserror::Error;

/// Field slots an equation can consume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FieldRole {
    M,
    N,
    LowerM,
    LowerMHat,
    U,
    Eta,
    Psi,
    PsiHat,
    PsiPlus,
    PsiMinus,
    PsiHatPlus,
    PsiHatMinus,
    Phi,
    PhiHat,
    Tau,
}

impl FieldRole {
    pub fn name(self) -> &'static str {
        match self {
            FieldRole::M => "M",
            FieldRole::N => "N",
            FieldRole::LowerM => "m",
            FieldRole::LowerMHat => "m_hat",
            FieldRole::U => "u",
            FieldRole::Eta => "eta",
            FieldRole::Psi => "psi",
            FieldRole::PsiHat => "psi_hat",
            FieldRole::PsiPlus => "psi_plus",
            FieldRole::PsiMinus => "psi_minus",
            FieldRole::PsiHatPlus => "psi_hat_plus",
            FieldRole::PsiHatMinus => "psi_hat_minus",
            FieldRole::Phi => "phi",
            FieldRole::PhiHat => "phi_hat",
            FieldRole::Tau => "tau",
        }
    }

    pub fn parse(s: &str) -> Option<FieldRole> {
        use FieldRole::*;
        Some(match s {
            "M" => M,
            "N" => N,
            "m" => LowerM,
            "m_hat" => LowerMHat,
            "u" => U,
            "eta" => Eta,
            "psi" => Psi,
            "psi_hat" => PsiHat,
            "psi_plus" => PsiPlus,
            "psi_minus" => PsiMinus,
            "psi_hat_plus" => PsiHatPlus,
            "psi_hat_minus" => PsiHatMinus,
            "phi" => Phi,
            "phi_hat" => PhiHat,
            "tau" => Tau,
            _ => return None,
        })
    }
}

/// Scalar parameters an equation can consume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ScalarRole {
    Lambda,
    A,
    AHat,
    A0,
}

impl ScalarRole {
    pub fn name(self) -> &'static str {
        match self {
            ScalarRole::Lambda => "lambda",
            ScalarRole::A => "a",
            ScalarRole::AHat => "a_hat",
            ScalarRole::A0 => "a0",
        }
    }

    pub fn parse(s: &str) -> Option<ScalarRole> {
        Some(match s {
            "lambda" => ScalarRole::Lambda,
            "a" => ScalarRole::A,
            "a_hat" => ScalarRole::AHat,
            "a0" => ScalarRole::A0,
            _ => return None,
        })
    }
}

/// Named field expressions and scalars supplied to residual evaluation.
#[derive(Debug, Clone, Default)]
pub struct Bindings {
    fields: BTreeMap<FieldRole, FieldExpr>,
    scalars: BTreeMap<ScalarRole, f64>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_field(mut self, role: FieldRole, f: FieldExpr) -> Self {
        self.fields.insert(role, f);
        self
    }

    pub fn with_scalar(mut self, role: ScalarRole, v: f64) -> Self {
        self.scalars.insert(role, v);
        self
    }

    pub fn set_field(&mut self, role: FieldRole, f: FieldExpr) {
        self.fields.insert(role, f);
    }

    pub fn set_scalar(&mut self, role: ScalarRole, v: f64) {
        self.scalars.insert(role, v);
    }

    pub fn field(&self, role: FieldRole) -> Option<&FieldExpr> {
        self.fields.get(&role)
    }

    pub fn scalar(&self, role: ScalarRole) -> Option<f64> {
        self.scalars.get(&role).copied()
    }
}

/// Errors from residual evaluation and grid scanning.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResidualError {
    #[error("equation {equation} is missing field binding `{role}`")]
    MissingField { equation: &'static str, role: &'static str },
    #[error("equation {equation} is missing scalar binding `{role}`")]
    MissingScalar { equation: &'static str, role: &'static str },
    /// A required divisor is exactly zero at the point.
    #[error("pole at evaluation point")]
    PoleAtPoint,
    /// A required divisor fell inside the pole guard band.
    #[error("denominator within the pole guard band")]
    NearPole,
    #[error("numeric overflow during field evaluation ({path})")]
    Overflow { path: String },
    #[error("truncation orders too small during field evaluation ({path})")]
    Truncation { path: String },
    #[error("every grid point was skipped as near-pole for {equation}")]
    EmptyScan { equation: String },
}

impl From<FieldError> for ResidualError {
    fn from(e: FieldError) -> Self {
        match e {
            FieldError::PoleAtPoint { .. } => ResidualError::PoleAtPoint,
            FieldError::NearPole { .. } => ResidualError::NearPole,
            FieldError::Overflow { path } => ResidualError::Overflow { path },
            FieldError::Truncation { path } => ResidualError::Truncation { path },
        }
    }
}

impl ResidualError {
    /// Pole-type errors mark a grid point as skippable; anything else is a
    /// hard failure of the construction under test.
    pub fn is_skippable_pole(&self) -> bool {
        matches!(self, ResidualError::PoleAtPoint | ResidualError::NearPole)
    }
}

/// Every equation the library can check, one member per printed relation or
/// tightly coupled block of relations (blocks report their worst row).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquationId {
    AknsPde,
    AknsIntegrated,
    AknsLaxX,
    AknsLaxY,
    AknsTruncMx,
    AknsTruncMy,
    AknsSmS,
    AknsSmCompat,
    AknsSmIsAkns,
    ShgSys1,
    ShgSys2,
    ShgBt,
    ShgBtProduct,
    ShgMiura,
    ShgCoupling,
    ShgCouplingDx,
    ShgCouplingInt,
    ShgFirstOrder,
    ShgLaxHat,
    ShgYPair,
    ShgMatrix,
    NlbqSys,
    NlbqSingle,
    NlbqTruncMx,
    NlbqTruncMt,
    NlbqSm1,
    NlbqSm2,
    NlbqLaxPlus,
    NlbqLaxMinus,
    KaupSys1,
    KaupSys2,
    KaupMm,
    KaupNlbqM,
    KaupNlbqMhat,
    KaupBt,
    KaupMiuraDx,
    KaupCoupling,
    KaupCouplingDx,
    KaupFirstOrder,
    KaupMatrixX,
    KaupMatrixT,
    AppdIdentity,
}

pub const ALL_EQUATIONS: &[EquationId] = &[
    EquationId::AknsPde,
    EquationId::AknsIntegrated,
    EquationId::AknsLaxX,
    EquationId::AknsLaxY,
    EquationId::AknsTruncMx,
    EquationId::AknsTruncMy,
    EquationId::AknsSmS,
    EquationId::AknsSmCompat,
    EquationId::AknsSmIsAkns,
    EquationId::ShgSys1,
    EquationId::ShgSys2,
    EquationId::ShgBt,
    EquationId::ShgBtProduct,
    EquationId::ShgMiura,
    EquationId::ShgCoupling,
    EquationId::ShgCouplingDx,
    EquationId::ShgCouplingInt,
    EquationId::ShgFirstOrder,
    EquationId::ShgLaxHat,
    EquationId::ShgYPair,
    EquationId::ShgMatrix,
    EquationId::NlbqSys,
    EquationId::NlbqSingle,
    EquationId::NlbqTruncMx,
    EquationId::NlbqTruncMt,
    EquationId::NlbqSm1,
    EquationId::NlbqSm2,
    EquationId::NlbqLaxPlus,
    EquationId::NlbqLaxMinus,
    EquationId::KaupSys1,
    EquationId::KaupSys2,
    EquationId::KaupMm,
    EquationId::KaupNlbqM,
    EquationId::KaupNlbqMhat,
    EquationId::KaupBt,
    EquationId::KaupMiuraDx,
    EquationId::KaupCoupling,
    EquationId::KaupCouplingDx,
    EquationId::KaupFirstOrder,
    EquationId::KaupMatrixX,
    EquationId::KaupMatrixT,
    EquationId::AppdIdentity,
];

impl EquationId {
    pub fn name(self) -> &'static str {
        use EquationId::*;
        match self {
            AknsPde => "AKNS_PDE",
            AknsIntegrated => "AKNS_INTEGRATED",
            AknsLaxX => "AKNS_LAX_X",
            AknsLaxY => "AKNS_LAX_Y",
            AknsTruncMx => "AKNS_TRUNC_MX",
            AknsTruncMy => "AKNS_TRUNC_MY",
            AknsSmS => "AKNS_SM_S",
            AknsSmCompat => "AKNS_SM_COMPAT",
            AknsSmIsAkns => "AKNS_SM_IS_AKNS",
            ShgSys1 => "SHG_SYS_1",
            ShgSys2 => "SHG_SYS_2",
            ShgBt => "SHG_BT",
            ShgBtProduct => "SHG_BT_PRODUCT",
            ShgMiura => "SHG_MIURA",
            ShgCoupling => "SHG_COUPLING",
            ShgCouplingDx => "SHG_COUPLING_DX",
            ShgCouplingInt => "SHG_COUPLING_INT",
            ShgFirstOrder => "SHG_FIRST_ORDER",
            ShgLaxHat => "SHG_LAX_HAT",
            ShgYPair => "SHG_Y_PAIR",
            ShgMatrix => "SHG_MATRIX",
            NlbqSys => "NLBQ_SYS",
            NlbqSingle => "NLBQ_SINGLE",
            NlbqTruncMx => "NLBQ_TRUNC_MX",
            NlbqTruncMt => "NLBQ_TRUNC_MT",
            NlbqSm1 => "NLBQ_SM_1",
            NlbqSm2 => "NLBQ_SM_2",
            NlbqLaxPlus => "NLBQ_LAX_PLUS",
            NlbqLaxMinus => "NLBQ_LAX_MINUS",
            KaupSys1 => "KAUP_SYS_1",
            KaupSys2 => "KAUP_SYS_2",
            KaupMm => "KAUP_MM",
            KaupNlbqM => "KAUP_NLBQ_M",
            KaupNlbqMhat => "KAUP_NLBQ_MHAT",
            KaupBt => "KAUP_BT",
            KaupMiuraDx => "KAUP_MIURA_DX",
            KaupCoupling => "KAUP_COUPLING",
            KaupCouplingDx => "KAUP_COUPLING_DX",
            KaupFirstOrder => "KAUP_FIRST_ORDER",
            KaupMatrixX => "KAUP_MATRIX_X",
            KaupMatrixT => "KAUP_MATRIX_T",
            AppdIdentity => "APPD_IDENTITY",
        }
    }

    pub fn parse(s: &str) -> Option<EquationId> {
        ALL_EQUATIONS.iter().copied().find(|e| e.name() == s)
    }

    /// True for members that hold identically for ANY smooth manifold
    /// because v, q, w, s are derived from phi: the compatibility rows
    /// reduce to commutativity of mixed partials (q_x + q v = phi_xy/phi_x
    /// and the Schwarzian transformation law). They cannot distinguish
    /// solutions from non-solutions; they validate the jet arithmetic.
    pub fn is_identity(self) -> bool {
        matches!(self, EquationId::AknsSmCompat | EquationId::NlbqSm1)
    }

    /// Field roles this equation reads.
    pub fn required_fields(self) -> &'static [FieldRole] {
        use EquationId::*;
        use FieldRole::*;
        match self {
            AknsPde => &[M],
            AknsIntegrated => &[LowerM],
            AknsLaxX | AknsLaxY => &[M, Psi],
            AknsTruncMx | AknsTruncMy => &[M, Phi],
            AknsSmS | AknsSmCompat | AknsSmIsAkns => &[Phi],
            ShgSys1 | ShgSys2 => &[U, Eta],
            ShgBt | ShgBtProduct => &[LowerM, LowerMHat],
            ShgMiura => &[LowerM, LowerMHat, U],
            ShgCoupling | ShgCouplingDx => &[U, Phi, PhiHat],
            ShgCouplingInt => &[Psi, PsiHat, Phi, PhiHat],
            ShgFirstOrder => &[U, Psi, PsiHat],
            ShgLaxHat => &[LowerMHat, PsiHat],
            ShgYPair => &[U, Eta, Psi, PsiHat],
            ShgMatrix => &[U, Eta, Psi, PsiHat],
            NlbqSys => &[M, N],
            NlbqSingle => &[M],
            NlbqTruncMx | NlbqTruncMt => &[M, Phi],
            NlbqSm1 | NlbqSm2 => &[Phi],
            NlbqLaxPlus => &[M, PsiPlus],
            NlbqLaxMinus => &[M, PsiMinus],
            KaupSys1 | KaupSys2 => &[U, Eta],
            KaupMm | KaupBt => &[LowerM, LowerMHat],
            KaupNlbqM => &[LowerM],
            KaupNlbqMhat => &[LowerMHat],
            KaupMiuraDx => &[LowerM, LowerMHat, U],
            KaupCoupling | KaupCouplingDx => &[U, Phi, PhiHat],
            KaupFirstOrder | KaupMatrixX | KaupMatrixT => {
                &[U, Eta, PsiPlus, PsiMinus, PsiHatPlus, PsiHatMinus]
            }
            AppdIdentity => &[M, PsiPlus, PsiMinus],
        }
    }

    /// Scalar roles this equation reads.
    pub fn required_scalars(self) -> &'static [ScalarRole] {
        use EquationId::*;
        use ScalarRole::*;
        match self {
            AknsLaxX | AknsLaxY | AknsTruncMx | AknsTruncMy | AknsSmS | AknsSmIsAkns
            | ShgLaxHat | NlbqTruncMx | NlbqTruncMt | NlbqSm2 | NlbqLaxPlus | NlbqLaxMinus
            | KaupCoupling => &[Lambda],
            ShgFirstOrder | ShgYPair => &[A, AHat],
            ShgMatrix | ShgCouplingInt | KaupFirstOrder | KaupMatrixX | KaupMatrixT => {
                &[A, AHat, Lambda]
            }
            _ => &[],
        }
    }

    /// Largest relative residual over the relation rows of this equation at
    /// one point. Zero when the bound fields solve the relation exactly.
    pub fn evaluate(
        self,
        b: &Bindings,
        p: Point2,
        pole_guard: f64,
    ) -> Result<f64, ResidualError> {
        let ctx = Ctx::new(self, b, p, pole_guard);
        let rows = self.rows(&ctx)?;
        Ok(rows.into_iter().fold(0.0, f64::max))
    }

    fn rows(self, c: &Ctx) -> Result<Vec<f64>, ResidualError> {
        use EquationId::*;
        use FieldRole::*;
        use ScalarRole::*;
        match self {
            // M_yxxx + 4 M_y M_xx + 8 M_x M_xy = 0
            AknsPde => Ok(vec![row(&[
                c.d(M, 3, 1)?,
                4.0 * c.d(M, 0, 1)? * c.d(M, 2, 0)?,
                8.0 * c.d(M, 1, 0)? * c.d(M, 1, 1)?,
            ])]),
            // 2 m_y m_xxy + 8 m_x m_y^2 - m_xy^2 = 0 (x-integral of the PDE)
            AknsIntegrated => Ok(vec![row(&[
                2.0 * c.d(LowerM, 0, 1)? * c.d(LowerM, 2, 1)?,
                8.0 * c.d(LowerM, 1, 0)? * c.d(LowerM, 0, 1)?.powi(2),
                -c.d(LowerM, 1, 1)?.powi(2),
            ])]),
            // psi_xx + (2 M_x + lambda) psi = 0
            AknsLaxX => {
                let lam = c.s(Lambda)?;
                Ok(vec![row(&[
                    c.d(Psi, 2, 0)?,
                    2.0 * c.d(M, 1, 0)? * c.d(Psi, 0, 0)?,
                    lam * c.d(Psi, 0, 0)?,
                ])])
            }
            // 2 lambda psi_y + M_xy psi - 2 M_y psi_x = 0
            AknsLaxY => {
                let lam = c.s(Lambda)?;
                Ok(vec![row(&[
                    2.0 * lam * c.d(Psi, 0, 1)?,
                    c.d(M, 1, 1)? * c.d(Psi, 0, 0)?,
                    -2.0 * c.d(M, 0, 1)? * c.d(Psi, 1, 0)?,
                ])])
            }
            // M_x = -(1/4)(v_x + v^2/2 + 2 lambda)
            AknsTruncMx => {
                let lam = c.s(Lambda)?;
                let v = c.v_jet(Phi)?;
                Ok(vec![row(&[
                    c.d(M, 1, 0)?,
                    0.25 * v.partial(1, 0).unwrap(),
                    0.125 * v.value().powi(2),
                    0.5 * lam,
                ])])
            }
            // M_y = (1/2)(-v_y + 2 lambda q)
            AknsTruncMy => {
                let lam = c.s(Lambda)?;
                let v = c.v_jet(Phi)?;
                let q = c.q_jet(Phi)?;
                Ok(vec![row(&[
                    c.d(M, 0, 1)?,
                    0.5 * v.partial(0, 1).unwrap(),
                    -lam * q.value(),
                ])])
            }
            // s_y = 4 lambda q_x
            AknsSmS => {
                let lam = c.s(Lambda)?;
                let s = c.s_jet(Phi)?;
                let q = c.q_jet(Phi)?;
                Ok(vec![row(&[
                    s.partial(0, 1).unwrap(),
                    -4.0 * lam * q.partial(1, 0).unwrap(),
                ])])
            }
            // v_y = (q_x + q v)_x  and  s_y = q_xxx + 2 s q_x + q s_x
            AknsSmCompat => {
                let v = c.v_jet(Phi)?;
                let q = c.q_jet(Phi)?;
                let s = c.s_jet(Phi)?;
                let (qa, va) = align(&q, &v);
                let qv = qa.mul(&va);
                let r1 = row(&[
                    v.partial(0, 1).unwrap(),
                    -q.partial(2, 0).unwrap(),
                    -qv.partial(1, 0).unwrap(),
                ]);
                let r2 = row(&[
                    s.partial(0, 1).unwrap(),
                    -q.partial(3, 0).unwrap(),
                    -2.0 * s.value() * q.partial(1, 0).unwrap(),
                    -q.value() * s.partial(1, 0).unwrap(),
                ]);
                Ok(vec![r1, r2])
            }
            // With p_x = (s - 2 lambda)/4 and p_y = lambda q, the singular
            // manifold satisfies the base equation again:
            // p_yxxx + 4 p_y p_xx + 8 p_x p_xy = 0.
            AknsSmIsAkns => {
                let lam = c.s(Lambda)?;
                let s = c.s_jet(Phi)?;
                let q = c.q_jet(Phi)?;
                let oa = s.order_a().min(q.order_a());
                let ob = s.order_b().min(q.order_b());
                let px = s
                    .truncate(oa, ob)
                    .unwrap()
                    .sub(&Jet2::constant(2.0 * lam, oa, ob))
                    .scale(0.25);
                let py = q.truncate(oa, ob).unwrap().scale(lam);
                Ok(vec![row(&[
                    py.partial(3, 0).unwrap(),
                    4.0 * py.value() * px.partial(1, 0).unwrap(),
                    8.0 * px.value() * py.partial(1, 0).unwrap(),
                ])])
            }
            // u_xy + 2 u eta_y = 0
            ShgSys1 => Ok(vec![row(&[
                c.d(U, 1, 1)?,
                2.0 * c.d(U, 0, 0)? * c.d(Eta, 0, 1)?,
            ])]),
            // eta_x + u^2 = 0
            ShgSys2 => Ok(vec![row(&[c.d(Eta, 1, 0)?, c.d(U, 0, 0)?.powi(2)])]),
            // m_xy + 2(m - m_hat) m_y = 0  and  m_hat_xy - 2(m - m_hat) m_hat_y = 0
            ShgBt => {
                let diff = c.d(LowerM, 0, 0)? - c.d(LowerMHat, 0, 0)?;
                let r1 = row(&[c.d(LowerM, 1, 1)?, 2.0 * diff * c.d(LowerM, 0, 1)?]);
                let r2 = row(&[c.d(LowerMHat, 1, 1)?, -2.0 * diff * c.d(LowerMHat, 0, 1)?]);
                Ok(vec![r1, r2])
            }
            // (m_y m_hat_y)_x = 0
            ShgBtProduct => Ok(vec![row(&[
                c.d(LowerM, 1, 1)? * c.d(LowerMHat, 0, 1)?,
                c.d(LowerM, 0, 1)? * c.d(LowerMHat, 1, 1)?,
            ])]),
            // 2 m_x = u_x - u^2  and  2 m_hat_x = -u_x - u^2
            ShgMiura => {
                let ux = c.d(U, 1, 0)?;
                let uu = c.d(U, 0, 0)?.powi(2);
                let r1 = row(&[2.0 * c.d(LowerM, 1, 0)?, -ux, uu]);
                let r2 = row(&[2.0 * c.d(LowerMHat, 1, 0)?, ux, uu]);
                Ok(vec![r1, r2])
            }
            // (phi_x/phi)(phihat_x/phihat) = A phi_x/phi + Ahat phihat_x/phihat
            // with A = v/2 + u, Ahat = vhat/2 - u
            ShgCoupling => {
                let u = c.d(U, 0, 0)?;
                let v = c.v_jet(Phi)?.value();
                let vh = c.v_jet(PhiHat)?.value();
                let lphi = c.sdiv(c.d(Phi, 1, 0)?, c.d(Phi, 0, 0)?)?;
                let lhat = c.sdiv(c.d(PhiHat, 1, 0)?, c.d(PhiHat, 0, 0)?)?;
                let a = 0.5 * v + u;
                let ah = 0.5 * vh - u;
                Ok(vec![row(&[lphi * lhat, -a * lphi, -ah * lhat])])
            }
            // A_x = A (vhat - A - Ahat)  and  Ahat_x = Ahat (v - A - Ahat)
            ShgCouplingDx => {
                let uj = c.jet(U)?;
                let v = c.v_jet(Phi)?;
                let vh = c.v_jet(PhiHat)?;
                let (va, ua) = align(&v, &uj);
                let a = va.scale(0.5).add(&ua);
                let (vha, uha) = align(&vh, &uj);
                let ah = vha.scale(0.5).sub(&uha);
                let (av, ahv) = (a.value(), ah.value());
                let r1 = row(&[
                    a.partial(1, 0).unwrap(),
                    -av * (vh.value() - av - ahv),
                ]);
                let r2 = row(&[
                    ah.partial(1, 0).unwrap(),
                    -ahv * (v.value() - av - ahv),
                ]);
                Ok(vec![r1, r2])
            }
            // a phihat + ahat phi = psi psihat, its x-derivative
            // a psihat^2 + ahat psi^2 = (psi psihat)_x, and lambda = -a ahat
            ShgCouplingInt => {
                let a = c.s(A)?;
                let ah = c.s(AHat)?;
                let lam = c.s(Lambda)?;
                let (psi, psih) = (c.d(Psi, 0, 0)?, c.d(PsiHat, 0, 0)?);
                let (psix, psihx) = (c.d(Psi, 1, 0)?, c.d(PsiHat, 1, 0)?);
                let r1 = row(&[
                    a * c.d(PhiHat, 0, 0)?,
                    ah * c.d(Phi, 0, 0)?,
                    -psi * psih,
                ]);
                let r2 = row(&[
                    a * psih.powi(2),
                    ah * psi.powi(2),
                    -psix * psih,
                    -psi * psihx,
                ]);
                let r3 = row(&[lam, a * ah]);
                Ok(vec![r1, r2, r3])
            }
            // psi_x = a psihat - u psi  and  psihat_x = ahat psi + u psihat
            ShgFirstOrder => {
                let a = c.s(A)?;
                let ah = c.s(AHat)?;
                let u = c.d(U, 0, 0)?;
                let r1 = row(&[
                    c.d(Psi, 1, 0)?,
                    -a * c.d(PsiHat, 0, 0)?,
                    u * c.d(Psi, 0, 0)?,
                ]);
                let r2 = row(&[
                    c.d(PsiHat, 1, 0)?,
                    -ah * c.d(Psi, 0, 0)?,
                    -u * c.d(PsiHat, 0, 0)?,
                ]);
                Ok(vec![r1, r2])
            }
            // hat Lax pair: psihat_xx + (2 m_hat_x + lambda) psihat = 0 and
            // 2 lambda psihat_y + m_hat_xy psihat - 2 m_hat_y psihat_x = 0
            ShgLaxHat => {
                let lam = c.s(Lambda)?;
                let r1 = row(&[
                    c.d(PsiHat, 2, 0)?,
                    2.0 * c.d(LowerMHat, 1, 0)? * c.d(PsiHat, 0, 0)?,
                    lam * c.d(PsiHat, 0, 0)?,
                ]);
                let r2 = row(&[
                    2.0 * lam * c.d(PsiHat, 0, 1)?,
                    c.d(LowerMHat, 1, 1)? * c.d(PsiHat, 0, 0)?,
                    -2.0 * c.d(LowerMHat, 0, 1)? * c.d(PsiHat, 1, 0)?,
                ]);
                Ok(vec![r1, r2])
            }
            // 2 ahat psi_y = -(u_y + eta_y) psihat  and
            // 2 a psihat_y = (u_y - eta_y) psi
            ShgYPair => {
                let a = c.s(A)?;
                let ah = c.s(AHat)?;
                let r1 = row(&[
                    2.0 * ah * c.d(Psi, 0, 1)?,
                    (c.d(U, 0, 1)? + c.d(Eta, 0, 1)?) * c.d(PsiHat, 0, 0)?,
                ]);
                let r2 = row(&[
                    2.0 * a * c.d(PsiHat, 0, 1)?,
                    -(c.d(U, 0, 1)? - c.d(Eta, 0, 1)?) * c.d(Psi, 0, 0)?,
                ]);
                Ok(vec![r1, r2])
            }
            // Matrix form: both first-order x-rows, both y-rows, and the
            // compatibility constant lambda + a·ahat = 0.
            ShgMatrix => {
                let a = c.s(A)?;
                let ah = c.s(AHat)?;
                let lam = c.s(Lambda)?;
                let u = c.d(U, 0, 0)?;
                let r1 = row(&[
                    c.d(Psi, 1, 0)?,
                    u * c.d(Psi, 0, 0)?,
                    -a * c.d(PsiHat, 0, 0)?,
                ]);
                let r2 = row(&[
                    c.d(PsiHat, 1, 0)?,
                    -ah * c.d(Psi, 0, 0)?,
                    -u * c.d(PsiHat, 0, 0)?,
                ]);
                let r3 = row(&[
                    2.0 * ah * c.d(Psi, 0, 1)?,
                    (c.d(U, 0, 1)? + c.d(Eta, 0, 1)?) * c.d(PsiHat, 0, 0)?,
                ]);
                let r4 = row(&[
                    2.0 * a * c.d(PsiHat, 0, 1)?,
                    -(c.d(U, 0, 1)? - c.d(Eta, 0, 1)?) * c.d(Psi, 0, 0)?,
                ]);
                let r5 = row(&[lam, a * ah]);
                Ok(vec![r1, r2, r3, r4, r5])
            }
            // N_x = M_t  and  M_x N_t = M_x M_xxx + 2 M_x^3 + M_t^2 - M_xx^2
            NlbqSys => {
                let r1 = row(&[c.d(N, 1, 0)?, -c.d(M, 0, 1)?]);
                let mx = c.d(M, 1, 0)?;
                let mt = c.d(M, 0, 1)?;
                let mxx = c.d(M, 2, 0)?;
                let r2 = row(&[
                    mx * c.d(N, 0, 1)?,
                    -mx * c.d(M, 3, 0)?,
                    -2.0 * mx.powi(3),
                    -mt.powi(2),
                    mxx.powi(2),
                ]);
                Ok(vec![r1, r2])
            }
            // M_x^2 (M_tt - M_xxxx) = 4 M_x^3 M_xx
            //   + 2 M_x (M_t M_tx - M_xx M_xxx) - M_xx (M_t^2 - M_xx^2)
            NlbqSingle => Ok(vec![nlbq_single_row(c, M)?]),
            KaupNlbqM => Ok(vec![nlbq_single_row(c, LowerM)?]),
            KaupNlbqMhat => Ok(vec![nlbq_single_row(c, LowerMHat)?]),
            // M_x = (1/4)((w + 2 lambda)^2 - v^2)
            NlbqTruncMx => {
                let lam = c.s(Lambda)?;
                let v = c.v_jet(Phi)?.value();
                let w = c.w_jet(Phi)?.value();
                Ok(vec![row(&[
                    c.d(M, 1, 0)?,
                    -0.25 * (w + 2.0 * lam).powi(2),
                    0.25 * v * v,
                ])])
            }
            // M_t = (1/2){(w+2l) v_x - v w_x + (w+l)[(w+2l)^2 - v^2]}
            NlbqTruncMt => {
                let lam = c.s(Lambda)?;
                let v = c.v_jet(Phi)?;
                let w = c.w_jet(Phi)?;
                let (wv, vv) = (w.value(), v.value());
                Ok(vec![row(&[
                    c.d(M, 0, 1)?,
                    -0.5 * (wv + 2.0 * lam) * v.partial(1, 0).unwrap(),
                    0.5 * vv * w.partial(1, 0).unwrap(),
                    -0.5 * (wv + lam) * ((wv + 2.0 * lam).powi(2) - vv * vv),
                ])])
            }
            // v_t = (w_x + w v)_x
            NlbqSm1 => {
                let v = c.v_jet(Phi)?;
                let w = c.w_jet(Phi)?;
                let (wa, va) = align(&w, &v);
                let wv = wa.mul(&va);
                Ok(vec![row(&[
                    v.partial(0, 1).unwrap(),
                    -w.partial(2, 0).unwrap(),
                    -wv.partial(1, 0).unwrap(),
                ])])
            }
            // w_t = (v_x - v^2/2 + (3/2)(w+2l)^2 - 2l(w+2l))_x
            NlbqSm2 => {
                let lam = c.s(Lambda)?;
                let v = c.v_jet(Phi)?;
                let w = c.w_jet(Phi)?;
                let vx = v.derivative(1, 0).map_err(|_| ResidualError::Truncation {
                    path: "v_x".into(),
                })?;
                let oa = vx.order_a().min(w.order_a());
                let ob = vx.order_b().min(w.order_b());
                let vxa = vx.truncate(oa, ob).unwrap();
                let va = v.truncate(oa, ob).unwrap();
                let wa = w.truncate(oa, ob).unwrap();
                let shifted = wa.add(&Jet2::constant(2.0 * lam, oa, ob));
                let inner = vxa
                    .sub(&va.mul(&va).scale(0.5))
                    .add(&shifted.mul(&shifted).scale(1.5))
                    .sub(&shifted.scale(2.0 * lam));
                Ok(vec![row(&[
                    w.partial(0, 1).unwrap(),
                    -inner.partial(1, 0).unwrap(),
                ])])
            }
            // 2 M_x (psi+_xx + M_x psi+) = (M_t + M_xx + 2 lambda M_x) psi+_x
            // and psi+_t = psi+_xx - 2 lambda psi+_x + 2 M_x psi+
            NlbqLaxPlus => {
                let lam = c.s(Lambda)?;
                let mx = c.d(M, 1, 0)?;
                let r1 = row(&[
                    2.0 * mx * (c.d(PsiPlus, 2, 0)? + mx * c.d(PsiPlus, 0, 0)?),
                    -(c.d(M, 0, 1)? + c.d(M, 2, 0)? + 2.0 * lam * mx) * c.d(PsiPlus, 1, 0)?,
                ]);
                let r2 = row(&[
                    c.d(PsiPlus, 0, 1)?,
                    -c.d(PsiPlus, 2, 0)?,
                    2.0 * lam * c.d(PsiPlus, 1, 0)?,
                    -2.0 * mx * c.d(PsiPlus, 0, 0)?,
                ]);
                Ok(vec![r1, r2])
            }
            // mirror pair for psi-
            NlbqLaxMinus => {
                let lam = c.s(Lambda)?;
                let mx = c.d(M, 1, 0)?;
                let r1 = row(&[
                    2.0 * mx * (c.d(PsiMinus, 2, 0)? + mx * c.d(PsiMinus, 0, 0)?),
                    (c.d(M, 0, 1)? - c.d(M, 2, 0)? + 2.0 * lam * mx) * c.d(PsiMinus, 1, 0)?,
                ]);
                let r2 = row(&[
                    c.d(PsiMinus, 0, 1)?,
                    c.d(PsiMinus, 2, 0)?,
                    2.0 * lam * c.d(PsiMinus, 1, 0)?,
                    2.0 * mx * c.d(PsiMinus, 0, 0)?,
                ]);
                Ok(vec![r1, r2])
            }
            // u_t = eta_xx + 2 u u_x
            KaupSys1 => Ok(vec![row(&[
                c.d(U, 0, 1)?,
                -c.d(Eta, 2, 0)?,
                -2.0 * c.d(U, 0, 0)? * c.d(U, 1, 0)?,
            ])]),
            // eta_t = u_xx + 2 u eta_x
            KaupSys2 => Ok(vec![row(&[
                c.d(Eta, 0, 1)?,
                -c.d(U, 2, 0)?,
                -2.0 * c.d(U, 0, 0)? * c.d(Eta, 1, 0)?,
            ])]),
            // m_t = m_xx + 2(m - m_hat) m_x  and
            // m_hat_t = -m_hat_xx + 2(m - m_hat) m_hat_x
            KaupMm => {
                let diff = c.d(LowerM, 0, 0)? - c.d(LowerMHat, 0, 0)?;
                let r1 = row(&[
                    c.d(LowerM, 0, 1)?,
                    -c.d(LowerM, 2, 0)?,
                    -2.0 * diff * c.d(LowerM, 1, 0)?,
                ]);
                let r2 = row(&[
                    c.d(LowerMHat, 0, 1)?,
                    c.d(LowerMHat, 2, 0)?,
                    -2.0 * diff * c.d(LowerMHat, 1, 0)?,
                ]);
                Ok(vec![r1, r2])
            }
            // m = m_hat + (m_hat_t + m_hat_xx)/(2 m_hat_x)  and
            // m_hat = m - (m_t - m_xx)/(2 m_x)  [written m + (m_xx - m_t)/(2 m_x)]
            KaupBt => {
                let ratio1 = c.sdiv(
                    c.d(LowerMHat, 0, 1)? + c.d(LowerMHat, 2, 0)?,
                    2.0 * c.d(LowerMHat, 1, 0)?,
                )?;
                let r1 = row(&[c.d(LowerM, 0, 0)?, -c.d(LowerMHat, 0, 0)?, -ratio1]);
                let ratio2 = c.sdiv(
                    c.d(LowerM, 2, 0)? - c.d(LowerM, 0, 1)?,
                    2.0 * c.d(LowerM, 1, 0)?,
                )?;
                let r2 = row(&[c.d(LowerMHat, 0, 0)?, -c.d(LowerM, 0, 0)?, -ratio2]);
                Ok(vec![r1, r2])
            }
            // x-derivatives of the nonlocal Miura forms:
            // 2 m_xx = u_xx - 2 u u_x + u_t  and  2 m_hat_xx = -u_xx - 2 u u_x + u_t
            KaupMiuraDx => {
                let uxx = c.d(U, 2, 0)?;
                let uux = 2.0 * c.d(U, 0, 0)? * c.d(U, 1, 0)?;
                let ut = c.d(U, 0, 1)?;
                let r1 = row(&[2.0 * c.d(LowerM, 2, 0)?, -uxx, uux, -ut]);
                let r2 = row(&[2.0 * c.d(LowerMHat, 2, 0)?, uxx, uux, -ut]);
                Ok(vec![r1, r2])
            }
            // coupling condition with A = (v-w)/2 + u, Ahat = (vhat+what)/2 - u,
            // plus the spectral relation u = lambda + (vhat + what - v + w)/2
            KaupCoupling => {
                let lam = c.s(Lambda)?;
                let u = c.d(U, 0, 0)?;
                let v = c.v_jet(Phi)?.value();
                let w = c.w_jet(Phi)?.value();
                let vh = c.v_jet(PhiHat)?.value();
                let wh = c.w_jet(PhiHat)?.value();
                let lphi = c.sdiv(c.d(Phi, 1, 0)?, c.d(Phi, 0, 0)?)?;
                let lhat = c.sdiv(c.d(PhiHat, 1, 0)?, c.d(PhiHat, 0, 0)?)?;
                let a = 0.5 * (v - w) + u;
                let ah = 0.5 * (vh + wh) - u;
                let r1 = row(&[lphi * lhat, -a * lphi, -ah * lhat]);
                let r2 = row(&[u, -lam, -0.5 * (vh + wh - v + w)]);
                Ok(vec![r1, r2])
            }
            // A_x = A (vhat - A - Ahat)  and  Ahat_x = Ahat (v - A - Ahat)
            KaupCouplingDx => {
                let uj = c.jet(U)?;
                let v = c.v_jet(Phi)?;
                let w = c.w_jet(Phi)?;
                let vh = c.v_jet(PhiHat)?;
                let wh = c.w_jet(PhiHat)?;
                let a = {
                    let (va, wa) = align(&v, &w);
                    let (d, ua) = align(&va.sub(&wa).scale(0.5), &uj);
                    d.add(&ua)
                };
                let ah = {
                    let (vha, wha) = align(&vh, &wh);
                    let (s, ua) = align(&vha.add(&wha).scale(0.5), &uj);
                    s.sub(&ua)
                };
                let (av, ahv) = (a.value(), ah.value());
                let r1 = row(&[
                    a.partial(1, 0).unwrap(),
                    -av * (vh.value() - av - ahv),
                ]);
                let r2 = row(&[
                    ah.partial(1, 0).unwrap(),
                    -ahv * (v.value() - av - ahv),
                ]);
                Ok(vec![r1, r2])
            }
            // psi-_x = a psihat- - (u+lambda) psi-
            // psihat+_x = ahat psi+ + (u+lambda) psihat+
            // a psihat-_x = ((u_x - eta_x)/2) psi-
            // ahat psi+_x = -((u_x + eta_x)/2) psihat+
            KaupFirstOrder => {
                let a = c.s(A)?;
                let ah = c.s(AHat)?;
                let lam = c.s(Lambda)?;
                let ul = c.d(U, 0, 0)? + lam;
                let ux = c.d(U, 1, 0)?;
                let ex = c.d(Eta, 1, 0)?;
                let r1 = row(&[
                    c.d(PsiMinus, 1, 0)?,
                    -a * c.d(PsiHatMinus, 0, 0)?,
                    ul * c.d(PsiMinus, 0, 0)?,
                ]);
                let r2 = row(&[
                    c.d(PsiHatPlus, 1, 0)?,
                    -ah * c.d(PsiPlus, 0, 0)?,
                    -ul * c.d(PsiHatPlus, 0, 0)?,
                ]);
                let r3 = row(&[
                    a * c.d(PsiHatMinus, 1, 0)?,
                    -0.5 * (ux - ex) * c.d(PsiMinus, 0, 0)?,
                ]);
                let r4 = row(&[
                    ah * c.d(PsiPlus, 1, 0)?,
                    0.5 * (ux + ex) * c.d(PsiHatPlus, 0, 0)?,
                ]);
                Ok(vec![r1, r2, r3, r4])
            }
            // spatial matrix systems for the minus and plus doublets
            KaupMatrixX => {
                let a = c.s(A)?;
                let ah = c.s(AHat)?;
                let lam = c.s(Lambda)?;
                let ul = c.d(U, 0, 0)? + lam;
                let ux = c.d(U, 1, 0)?;
                let ex = c.d(Eta, 1, 0)?;
                let r1 = row(&[
                    c.d(PsiMinus, 1, 0)?,
                    ul * c.d(PsiMinus, 0, 0)?,
                    -a * c.d(PsiHatMinus, 0, 0)?,
                ]);
                let r2 = row(&[
                    c.d(PsiHatMinus, 1, 0)?,
                    -c.sdiv(0.5 * (ux - ex), a)? * c.d(PsiMinus, 0, 0)?,
                ]);
                let r3 = row(&[
                    c.d(PsiPlus, 1, 0)?,
                    c.sdiv(0.5 * (ux + ex), ah)? * c.d(PsiHatPlus, 0, 0)?,
                ]);
                let r4 = row(&[
                    c.d(PsiHatPlus, 1, 0)?,
                    -ah * c.d(PsiPlus, 0, 0)?,
                    -ul * c.d(PsiHatPlus, 0, 0)?,
                ]);
                Ok(vec![r1, r2, r3, r4])
            }
            // temporal matrix systems for both doublets
            KaupMatrixT => {
                let a = c.s(A)?;
                let ah = c.s(AHat)?;
                let lam = c.s(Lambda)?;
                let u = c.d(U, 0, 0)?;
                let ux = c.d(U, 1, 0)?;
                let ex = c.d(Eta, 1, 0)?;
                let uxx = c.d(U, 2, 0)?;
                let exx = c.d(Eta, 2, 0)?;
                let quad = u * u - lam * lam;
                let r1 = row(&[
                    c.d(PsiMinus, 0, 1)?,
                    (0.5 * (ex + ux) + quad) * c.d(PsiMinus, 0, 0)?,
                    -a * (u - lam) * c.d(PsiHatMinus, 0, 0)?,
                ]);
                let r2 = row(&[
                    c.d(PsiHatMinus, 0, 1)?,
                    -c.sdiv(exx - uxx - (u - lam) * (ex - ux), 2.0 * a)?
                        * c.d(PsiMinus, 0, 0)?,
                    -0.5 * (ux - ex) * c.d(PsiHatMinus, 0, 0)?,
                ]);
                let r3 = row(&[
                    c.d(PsiPlus, 0, 1)?,
                    -0.5 * (ux + ex) * c.d(PsiPlus, 0, 0)?,
                    c.sdiv(uxx + exx + (u - lam) * (ux + ex), 2.0 * ah)?
                        * c.d(PsiHatPlus, 0, 0)?,
                ]);
                let r4 = row(&[
                    c.d(PsiHatPlus, 0, 1)?,
                    -ah * (u - lam) * c.d(PsiPlus, 0, 0)?,
                    -(0.5 * (ex - ux) + quad) * c.d(PsiHatPlus, 0, 0)?,
                ]);
                Ok(vec![r1, r2, r3, r4])
            }
            // psi+_x psi-_x + M_x psi+ psi- = 0
            AppdIdentity => Ok(vec![row(&[
                c.d(PsiPlus, 1, 0)? * c.d(PsiMinus, 1, 0)?,
                c.d(M, 1, 0)? * c.d(PsiPlus, 0, 0)? * c.d(PsiMinus, 0, 0)?,
            ])]),
        }
    }
}

/// Shared row for the single-equation NLBq form on any bound role.
fn nlbq_single_row(c: &Ctx, role: FieldRole) -> Result<f64, ResidualError> {
    let mx = c.d(role, 1, 0)?;
    let mt = c.d(role, 0, 1)?;
    let mxx = c.d(role, 2, 0)?;
    Ok(row(&[
        mx * mx * c.d(role, 0, 2)?,
        -mx * mx * c.d(role, 4, 0)?,
        -4.0 * mx.powi(3) * mxx,
        -2.0 * mx * (mt * c.d(role, 1, 1)? - mxx * c.d(role, 3, 0)?),
        mxx * (mt * mt - mxx * mxx),
    ]))
}

/// |sum| / (1 + sum of |term|): the normalized residual of one relation row.
pub(crate) fn row(terms: &[f64]) -> f64 {
    let sum: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|t| t.abs()).sum();
    sum.abs() / (1.0 + scale)
}

/// Per-point evaluation context: caches the jet of each bound field at the
/// catalog's fixed truncation orders and derives manifold ratios on demand.
struct Ctx<'a> {
    eq: EquationId,
    b: &'a Bindings,
    p: Point2,
    guard: f64,
    jets: std::cell::RefCell<HashMap<FieldRole, Jet2>>,
}

impl<'a> Ctx<'a> {
    fn new(eq: EquationId, b: &'a Bindings, p: Point2, guard: f64) -> Self {
        Ctx {
            eq,
            b,
            p,
            guard,
            jets: std::cell::RefCell::new(HashMap::new()),
        }
    }

    fn jet(&self, role: FieldRole) -> Result<Jet2, ResidualError> {
        if let Some(j) = self.jets.borrow().get(&role) {
            return Ok(j.clone());
        }
        let f = self.b.field(role).ok_or(ResidualError::MissingField {
            equation: self.eq.name(),
            role: role.name(),
        })?;
        let j = f.evaluate_guarded(self.p, DEFAULT_ORDER_A, DEFAULT_ORDER_B, self.guard)?;
        self.jets.borrow_mut().insert(role, j.clone());
        Ok(j)
    }

    /// Raw mixed partial of a bound field.
    fn d(&self, role: FieldRole, i: usize, k: usize) -> Result<f64, ResidualError> {
        let j = self.jet(role)?;
        j.partial(i, k).map_err(|_| ResidualError::Truncation {
            path: format!("{} partial ({i},{k})", role.name()),
        })
    }

    fn s(&self, role: ScalarRole) -> Result<f64, ResidualError> {
        self.b.scalar(role).ok_or(ResidualError::MissingScalar {
            equation: self.eq.name(),
            role: role.name(),
        })
    }

    /// Guarded scalar division.
    fn sdiv(&self, num: f64, den: f64) -> Result<f64, ResidualError> {
        if den == 0.0 {
            return Err(ResidualError::PoleAtPoint);
        }
        if self.guard > 0.0 && den.abs() < self.guard * (1.0 + num.abs()) {
            return Err(ResidualError::NearPole);
        }
        Ok(num / den)
    }

    /// Guarded jet division (aligns orders first).
    fn jdiv(&self, num: &Jet2, den: &Jet2) -> Result<Jet2, ResidualError> {
        let (n, d) = align(num, den);
        if self.guard > 0.0 && d.value().abs() < self.guard * (1.0 + n.value().abs()) {
            return Err(ResidualError::NearPole);
        }
        Ok(n.div(&d)?)
    }

    /// v = phi_xx / phi_x as a jet.
    fn v_jet(&self, role: FieldRole) -> Result<Jet2, ResidualError> {
        let phi = self.jet(role)?;
        let num = phi.derivative(2, 0).map_err(|_| truncation("phi_xx"))?;
        let den = phi.derivative(1, 0).map_err(|_| truncation("phi_x"))?;
        self.jdiv(&num, &den)
    }

    /// q = phi_y / phi_x (second coordinate y) as a jet.
    fn q_jet(&self, role: FieldRole) -> Result<Jet2, ResidualError> {
        let phi = self.jet(role)?;
        let num = phi.derivative(0, 1).map_err(|_| truncation("phi_y"))?;
        let den = phi.derivative(1, 0).map_err(|_| truncation("phi_x"))?;
        self.jdiv(&num, &den)
    }

    /// w = phi_t / phi_x: same ratio as q with the second coordinate read
    /// as t; kept separate for call-site clarity.
    fn w_jet(&self, role: FieldRole) -> Result<Jet2, ResidualError> {
        self.q_jet(role)
    }

    /// Schwarzian-like s = v_x - v^2/2 as a jet.
    fn s_jet(&self, role: FieldRole) -> Result<Jet2, ResidualError> {
        let v = self.v_jet(role)?;
        let vx = v.derivative(1, 0).map_err(|_| truncation("v_x"))?;
        let (vxa, va) = align(&vx, &v);
        Ok(vxa.sub(&va.mul(&va).scale(0.5)))
    }
}

impl From<crate::jets::JetError> for ResidualError {
    fn from(e: crate::jets::JetError) -> Self {
        match e {
            crate::jets::JetError::PoleAtPoint => ResidualError::PoleAtPoint,
            crate::jets::JetError::NonFinite => ResidualError::Overflow {
                path: "jet arithmetic".into(),
            },
            crate::jets::JetError::TruncationTooSmall { .. } => ResidualError::Truncation {
                path: "jet arithmetic".into(),
            },
        }
    }
}

fn truncation(what: &str) -> ResidualError {
    ResidualError::Truncation { path: what.to_string() }
}

/// Rectangular sampling region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridBox {
    pub a_min: f64,
    pub a_max: f64,
    pub b_min: f64,
    pub b_max: f64,
}

impl GridBox {
    /// The default verification box [-3,3] x [-3,3].
    pub fn standard() -> Self {
        GridBox { a_min: -3.0, a_max: 3.0, b_min: -3.0, b_max: 3.0 }
    }
}

/// Default number of samples per axis for verification scans.
pub const DEFAULT_GRID_N: usize = 20;
/// Default pole guard: a divisor within this relative band of zero marks
/// the point as skipped rather than producing a huge meaningless residual.
pub const DEFAULT_POLE_GUARD: f64 = 1e-9;
/// Seed for every fixed-sample validation draw; one shared constant keeps
/// all constructors' accept/reject decisions reproducible.
pub const SAMPLE_SEED: u64 = 0x5EED_DA0B;

/// Result of scanning one equation over a grid.
#[derive(Debug, Clone)]
pub struct ScanEntry {
    pub equation: EquationId,
    pub max_residual: f64,
    pub worst: Point2,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Evaluate `eq` at `n` pole-free pseudo-random points (fixed seed, so
/// deterministic) in the standard box, returning the worst residual and its
/// location. Near-pole points are skipped and replaced by further draws;
/// if 10n draws cannot produce n clean points the scan is empty.
pub fn check_on_sample(
    eq: EquationId,
    b: &Bindings,
    n: usize,
) -> Result<(f64, Point2), ResidualError> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    let mut worst = (0.0f64, Point2::new(f64::NAN, f64::NAN));
    let mut checked = 0;
    for _ in 0..n * 10 {
        if checked == n {
            return Ok(worst);
        }
        let p = Point2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        match eq.evaluate(b, p, DEFAULT_POLE_GUARD) {
            Ok(r) => {
                checked += 1;
                if r > worst.0 {
                    worst = (r, p);
                }
            }
            Err(e) if e.is_skippable_pole() => continue,
            Err(e) => return Err(e),
        }
    }
    if checked == n {
        Ok(worst)
    } else {
        Err(ResidualError::EmptyScan { equation: eq.name().to_string() })
    }
}

/// Evaluate `eq` on a regular `n_a x n_b` grid over `bounds`. Points where
/// any required divisor falls inside the pole guard are skipped and counted.
/// The maximum and its location are deterministic: ties keep the first
/// (row-major, a-then-b) grid index.
pub fn scan_grid(
    eq: EquationId,
    b: &Bindings,
    bounds: GridBox,
    n_a: usize,
    n_b: usize,
    pole_guard: f64,
) -> Result<ScanEntry, ResidualError> {
    assert!(n_a >= 2 && n_b >= 2, "grid needs at least 2 samples per axis");
    let mut max_residual = -1.0f64;
    let mut worst = Point2::new(f64::NAN, f64::NAN);
    let mut evaluated = 0usize;
    let mut skipped = 0usize;
    for i in 0..n_a {
        let a = bounds.a_min + (bounds.a_max - bounds.a_min) * (i as f64) / ((n_a - 1) as f64);
        for j in 0..n_b {
            let bb = bounds.b_min + (bounds.b_max - bounds.b_min) * (j as f64) / ((n_b - 1) as f64);
            let p = Point2::new(a, bb);
            match eq.evaluate(b, p, pole_guard) {
                Ok(r) => {
                    evaluated += 1;
                    if r > max_residual {
                        max_residual = r;
                        worst = p;
                    }
                }
                Err(e) if e.is_skippable_pole() => skipped += 1,
                Err(e) => return Err(e),
            }
        }
    }
    if evaluated == 0 {
        return Err(ResidualError::EmptyScan { equation: eq.name().to_string() });
    }
    Ok(ScanEntry { equation: eq, max_residual, worst, evaluated, skipped })
}
