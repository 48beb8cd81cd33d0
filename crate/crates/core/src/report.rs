//! One-shot analysis of a built system: exact H2², closed form, stability.

use serde::Serialize;

use crate::error::Result;
use crate::formulas::{self, FormulaEvaluation};
use crate::lti::StateSpace;
use crate::model::{DisturbanceConfig, Equilibrium, QuadraticProgram, TimeConstants};
use crate::resource_allocation::{self, RaFormulation, ResourceAllocationProblem};
use crate::variants::VariantSpec;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub x: Vec<f64>,
    pub nu: Vec<f64>,
}

impl From<&Equilibrium> for EquilibriumReport {
    fn from(e: &Equilibrium) -> Self {
        Self {
            x: e.x.iter().copied().collect(),
            nu: e.nu.iter().copied().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct H2Report {
    pub variant: String,
    pub rho: Option<f64>,
    pub eps: Option<f64>,
    pub state_dim: usize,
    pub h2sq_numeric: f64,
    /// `None` when no closed form applies; `formula_note` says why.
    pub h2sq_formula: Option<f64>,
    pub formula_note: String,
    pub h2sq_bound: Option<f64>,
    pub hurwitz: bool,
    pub spectral_abscissa: f64,
    pub observable: bool,
    pub gramian_residual: f64,
    pub equilibrium: EquilibriumReport,
}

fn numeric_part(sys: &StateSpace) -> Result<(f64, f64, bool, f64)> {
    let st = sys.stability()?;
    let g = sys.observability_gramian()?;
    Ok((sys.h2_from_gramian(&g.x), st.spectral_abscissa, g.positive_definite, g.residual))
}

/// Analyze a quadratic-program variant.
pub fn analyze(
    p: &QuadraticProgram,
    tc: &TimeConstants,
    d: &DisturbanceConfig,
    spec: &VariantSpec,
) -> Result<H2Report> {
    spec.validate()?;
    let sys = spec.build(p, tc, d)?;
    let (h2, abscissa, observable, residual) = numeric_part(&sys)?;
    let FormulaEvaluation { value, bound, note } = formulas::formula_for(spec, p, tc, d)?;
    let (rho, eps, eq) = match spec {
        VariantSpec::Regularized { eps } => (None, Some(*eps), p.regularized_equilibrium(*eps)?),
        VariantSpec::Augmented { rho } | VariantSpec::AddSp { rho, .. } => (Some(*rho), None, p.solve_kkt()?),
        VariantSpec::SaddlePoint | VariantSpec::DualAscent => (None, None, p.solve_kkt()?),
    };
    Ok(H2Report {
        variant: spec.name().into(),
        rho,
        eps,
        state_dim: sys.n_states(),
        h2sq_numeric: h2,
        h2sq_formula: value,
        formula_note: note,
        h2sq_bound: bound,
        hurwitz: true,
        spectral_abscissa: abscissa,
        observable,
        gramian_residual: residual,
        equilibrium: (&eq).into(),
    })
}

/// Analyze a resource-allocation formulation.
pub fn analyze_ra(ra: &ResourceAllocationProblem, f: RaFormulation, rho: f64) -> Result<H2Report> {
    let sys = ra.build(f, rho)?;
    let (h2, abscissa, observable, residual) = numeric_part(&sys)?;
    let (value, exact) = resource_allocation::ra_formula(ra, f, rho)?;
    let note = match (value, exact) {
        (None, _) => "no closed form for this formulation and data",
        (Some(_), true) => "closed form",
        (Some(_), false) => "closed form stated for acyclic graphs; shown for reference",
    };
    Ok(H2Report {
        variant: f.name().into(),
        rho: (f != RaFormulation::CentDual).then_some(rho),
        eps: None,
        state_dim: sys.n_states(),
        h2sq_numeric: h2,
        h2sq_formula: if exact { value } else { None },
        formula_note: note.into(),
        h2sq_bound: None,
        hurwitz: true,
        spectral_abscissa: abscissa,
        observable,
        gramian_residual: residual,
        equilibrium: (&ra.equilibrium()?).into(),
    })
}
