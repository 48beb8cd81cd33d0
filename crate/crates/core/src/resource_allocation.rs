//! Resource allocation: `minimize Σ ½qᵢxᵢ² + cᵢxᵢ  s.t.  Σ xᵢ = Σ dᵢ`,
//! with demand disturbances `dᵢ ↦ dᵢ + t_b ηᵢ`, in four formulations:
//!
//! | name           | algorithm                                   |
//! |----------------|---------------------------------------------|
//! | `RA_cent`      | augmented saddle point, `S = W_b = 1ᵀ`       |
//! | `RA_dist`      | augmented saddle point on `Eδ = x − d`      |
//! | `RA_cent_dual` | dual ascent, `S = W_b = 1ᵀ`                 |
//! | `RA_dist_dual` | ADD-SP with `𝒮 = 𝒲_b = I`                   |
//!
//! Every system has output `z = Q^{1/2}(x − x*)`, so their H2 norms are
//! directly comparable.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulas::{self, UniformParams};
use crate::graph::OrientedGraph;
use crate::lti::StateSpace;
use crate::model::{DisturbanceConfig, Equilibrium, QuadraticProgram, TimeConstants, TimeScale};
use crate::variants;

/// Scalar time constants of the primal, edge-flow, dual and edge-multiplier
/// blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaTimeConstants {
    pub tau_x: f64,
    pub tau_delta: f64,
    pub tau_nu: f64,
    pub tau_mu: f64,
}

impl Default for RaTimeConstants {
    fn default() -> Self {
        Self {
            tau_x: 1.0,
            tau_delta: 1.0,
            tau_nu: 1.0,
            tau_mu: 1.0,
        }
    }
}

impl RaTimeConstants {
    fn as_time_constants(&self) -> TimeConstants {
        TimeConstants::uniform(self.tau_x, self.tau_nu)
            .with_delta(TimeScale::Uniform(self.tau_delta))
            .with_mu(TimeScale::Uniform(self.tau_mu))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResourceAllocationProblem {
    q: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
    graph: OrientedGraph,
    pub tau: RaTimeConstants,
    pub disturbance: DisturbanceConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RaFormulation {
    #[serde(rename = "RA_cent")]
    Cent,
    #[serde(rename = "RA_dist")]
    Dist,
    #[serde(rename = "RA_cent_dual")]
    CentDual,
    #[serde(rename = "RA_dist_dual")]
    DistDual,
}

impl RaFormulation {
    pub const ALL: [RaFormulation; 4] = [
        RaFormulation::Cent,
        RaFormulation::Dist,
        RaFormulation::CentDual,
        RaFormulation::DistDual,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RaFormulation::Cent => "RA_cent",
            RaFormulation::Dist => "RA_dist",
            RaFormulation::CentDual => "RA_cent_dual",
            RaFormulation::DistDual => "RA_dist_dual",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown resource-allocation formulation `{s}`")))
    }
}

impl ResourceAllocationProblem {
    pub fn new(
        q: Vec<f64>,
        c: Vec<f64>,
        d: Vec<f64>,
        graph: OrientedGraph,
        tau: RaTimeConstants,
        disturbance: DisturbanceConfig,
    ) -> Result<Self> {
        let n = q.len();
        if n < 2 {
            return Err(Error::invalid("resource allocation needs at least 2 agents"));
        }
        if c.len() != n || d.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "q, c, d must all have length {n} (got {}, {}, {})",
                q.len(),
                c.len(),
                d.len()
            )));
        }
        if !q.iter().all(|&v| v > 0.0 && v.is_finite()) {
            return Err(Error::invalid("q entries must be positive"));
        }
        if !c.iter().chain(&d).all(|v| v.is_finite()) {
            return Err(Error::invalid("c and d must be finite"));
        }
        if graph.n_nodes() != n {
            return Err(Error::DimensionMismatch(format!(
                "graph has {} nodes, problem has {n} agents",
                graph.n_nodes()
            )));
        }
        if !graph.is_connected() {
            return Err(Error::Graph("resource allocation needs a connected graph".into()));
        }
        for (name, t) in [
            ("tau_x", tau.tau_x),
            ("tau_delta", tau.tau_delta),
            ("tau_nu", tau.tau_nu),
            ("tau_mu", tau.tau_mu),
        ] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {t}")));
            }
        }
        disturbance.validate()?;
        Ok(Self {
            q,
            c,
            d,
            graph,
            tau,
            disturbance,
        })
    }

    /// Uniform costs `qᵢ = q`, zero `c` and `d`, unit time constants,
    /// `t_c = 0`, `t_b = 1`.
    pub fn uniform(n: usize, q: f64, graph: OrientedGraph) -> Result<Self> {
        Self::new(
            vec![q; n],
            vec![0.0; n],
            vec![0.0; n],
            graph,
            RaTimeConstants::default(),
            DisturbanceConfig { t_c: 0.0, t_b: 1.0 },
        )
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn graph(&self) -> &OrientedGraph {
        &self.graph
    }

    pub fn with_graph(&self, graph: OrientedGraph) -> Result<Self> {
        Self::new(
            self.q.clone(),
            self.c.clone(),
            self.d.clone(),
            graph,
            self.tau,
            self.disturbance,
        )
    }

    /// `t_c = 0`: only demand disturbances, as in the standard comparison.
    pub fn in_standard_setting(&self) -> bool {
        self.disturbance.t_c == 0.0
    }

    /// The centralized program with `S = W_b = 1ᵀ`, `b = d`.
    pub fn quadratic_program(&self) -> Result<QuadraticProgram> {
        let ones = vec![vec![1.0; self.n()]];
        QuadraticProgram::from_parts(&self.q, &self.c, &ones, &ones, &self.d)
    }

    pub fn equilibrium(&self) -> Result<Equilibrium> {
        self.quadratic_program()?.solve_kkt()
    }

    pub fn uniform_q(&self) -> Option<f64> {
        let q = self.q[0];
        self.q.iter().all(|&v| v == q).then_some(q)
    }

    pub fn build(&self, f: RaFormulation, rho: f64) -> Result<StateSpace> {
        match f {
            RaFormulation::Cent => build_ra_cent(self, rho),
            RaFormulation::Dist => build_ra_dist(self, rho),
            RaFormulation::CentDual => build_ra_cent_dual(self),
            RaFormulation::DistDual => build_ra_dist_dual(self, rho),
        }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho >= 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("rho must be nonnegative, got {rho}")))
    }
}

/// Drop the input columns of a zero-strength channel.
fn keep_inputs(sys: StateSpace, cols: &[usize]) -> Result<StateSpace> {
    let b = sys.b().select_columns(cols);
    let labels = cols.iter().map(|&j| sys.input_labels[j].clone()).collect();
    StateSpace::new(sys.a().clone(), b, sys.c().clone())?.with_labels(
        sys.state_labels.clone(),
        labels,
        sys.output_labels.clone(),
    )
}

pub fn build_ra_cent(ra: &ResourceAllocationProblem, rho: f64) -> Result<StateSpace> {
    check_rho(rho)?;
    let n = ra.n();
    let sys = variants::build_augmented(
        &ra.quadratic_program()?,
        &ra.tau.as_time_constants(),
        &ra.disturbance,
        rho,
    )?;
    if ra.disturbance.t_c == 0.0 {
        keep_inputs(sys, &(n..2 * n).collect::<Vec<_>>())
    } else {
        Ok(sys)
    }
}

/// Distributed saddle point with edge flows `δ` and node multipliers `ν`:
///
/// ```text
/// τ_x ẋ = −Qx + ν + ρ r − t_c η_c
/// τ_δ δ̇ = −Eᵀν − ρEᵀ r
/// τ_ν ν̇ = r,            r = Eδ − x + t_b η_b
/// ```
///
/// Only trees are accepted: on a cyclic graph `[−I, E]` loses full row
/// rank.
pub fn build_ra_dist(ra: &ResourceAllocationProblem, rho: f64) -> Result<StateSpace> {
    check_rho(rho)?;
    let g = ra.graph();
    if !g.is_acyclic() {
        return Err(Error::Graph(
            "RA_dist requires an acyclic graph (the edge-flow constraint loses rank on cycles)"
                .into(),
        ));
    }
    let n = ra.n();
    let ne = g.n_edges();
    let RaTimeConstants {
        tau_x,
        tau_delta,
        tau_nu,
        ..
    } = ra.tau;
    let DisturbanceConfig { t_c, t_b } = ra.disturbance;
    let e = g.incidence_matrix();
    let et = e.transpose();
    let eye = DMatrix::<f64>::identity(n, n);
    let q = DMatrix::from_diagonal(&DVector::from_column_slice(&ra.q));

    let dim = 2 * n + ne;
    let (ix, id, inu) = (0, n, n + ne);
    let mut a = DMatrix::zeros(dim, dim);
    a.view_mut((ix, ix), (n, n)).copy_from(&(-(&q + &eye * rho) / tau_x));
    a.view_mut((ix, id), (n, ne)).copy_from(&(&e * (rho / tau_x)));
    a.view_mut((ix, inu), (n, n)).copy_from(&(&eye / tau_x));
    a.view_mut((id, ix), (ne, n)).copy_from(&(&et * (rho / tau_delta)));
    a.view_mut((id, id), (ne, ne)).copy_from(&(&et * &e * (-rho / tau_delta)));
    a.view_mut((id, inu), (ne, n)).copy_from(&(&et * (-1.0 / tau_delta)));
    a.view_mut((inu, ix), (n, n)).copy_from(&(&eye * (-1.0 / tau_nu)));
    a.view_mut((inu, id), (n, ne)).copy_from(&(&e / tau_nu));

    let with_c = t_c != 0.0;
    let off = if with_c { n } else { 0 };
    let mut b = DMatrix::zeros(dim, off + n);
    if with_c {
        b.view_mut((ix, 0), (n, n)).copy_from(&(&eye * (-t_c / tau_x)));
    }
    b.view_mut((ix, off), (n, n)).copy_from(&(&eye * (rho * t_b / tau_x)));
    b.view_mut((id, off), (ne, n)).copy_from(&(&et * (-rho * t_b / tau_delta)));
    b.view_mut((inu, off), (n, n)).copy_from(&(&eye * (t_b / tau_nu)));

    let mut c = DMatrix::zeros(n, dim);
    c.view_mut((0, 0), (n, n)).copy_from(&q.map(f64::sqrt));

    let lab = |p: &str, k: usize| (1..=k).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
    let mut inputs = if with_c { lab("eta_c", n) } else { Vec::new() };
    inputs.extend(lab("eta_b", n));
    StateSpace::new(a, b, c)?.with_labels(
        [lab("x", n), lab("delta", ne), lab("nu", n)].concat(),
        inputs,
        lab("z", n),
    )
}

/// Scalar dual ascent. `t_c` does not enter (see
/// [`variants::build_dual_ascent`]).
pub fn build_ra_cent_dual(ra: &ResourceAllocationProblem) -> Result<StateSpace> {
    variants::build_dual_ascent(
        &ra.quadratic_program()?,
        &ra.tau.as_time_constants(),
        &ra.disturbance,
    )
}

/// ADD-SP with one scalar multiplier per agent. Cyclic graphs are handled
/// by the cycle-space reduction of [`variants::build_add_sp`].
pub fn build_ra_dist_dual(ra: &ResourceAllocationProblem, rho: f64) -> Result<StateSpace> {
    let tc = ra.tau.as_time_constants();
    variants::build_add_sp(&ra.quadratic_program()?, &tc, &ra.disturbance, rho, ra.graph())
}

/// Closed-form H2² for a formulation, and whether it is exact here.
/// A value with `applicable = false` is shown for reference only.
pub fn ra_formula(
    ra: &ResourceAllocationProblem,
    f: RaFormulation,
    rho: f64,
) -> Result<(Option<f64>, bool)> {
    let n = ra.n() as f64;
    let t_b = ra.disturbance.t_b;
    let base = n * t_b * t_b / (2.0 * ra.tau.tau_nu);
    let standard = ra.in_standard_setting();
    Ok(match f {
        RaFormulation::CentDual => (Some(base), true),
        RaFormulation::Dist => {
            if rho == 0.0 && standard {
                (Some(base), true)
            } else {
                (None, false)
            }
        }
        RaFormulation::Cent => match ra.uniform_q() {
            Some(q) => {
                let qp = ra.quadratic_program()?;
                let u = UniformParams::new(q, ra.tau.tau_x, ra.tau.tau_nu, ra.n(), 1)?;
                let v = formulas::h2sq_augmented_uniform_weighted(
                    &u,
                    qp.s(),
                    qp.w_b(),
                    rho,
                    ra.disturbance.t_c,
                    t_b,
                )?;
                (Some(v), true)
            }
            None if rho == 0.0 && standard => (Some(base), true),
            None => (None, false),
        },
        RaFormulation::DistDual => {
            if rho == 0.0 {
                (Some(base), true)
            } else if let Some(q) = ra.uniform_q() {
                let spectrum = ra.graph().laplacian_spectrum();
                let v = t_b * t_b
                    * formulas::h2sq_ra_dist_dual_uniform(q, ra.tau.tau_nu, &spectrum, rho)?;
                (Some(v), ra.graph().is_acyclic())
            } else {
                (None, false)
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    pub formulation: RaFormulation,
    pub rho: f64,
    /// `None` when the formulation rejects this graph.
    pub h2sq_numeric: Option<f64>,
    pub h2sq_formula: Option<f64>,
    pub formula_applicable: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trend {
    pub formulation: RaFormulation,
    pub nonincreasing: bool,
    pub nondecreasing: bool,
    /// The last grid value exceeds the minimum over the grid.
    pub increasing_at_end: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Report {
    pub rows: Vec<Table1Row>,
    pub trends: Vec<Trend>,
    /// False when `t_c > 0`, which lies outside the standard comparison.
    pub standard_setting: bool,
}

impl Table1Report {
    pub fn column(&self, f: RaFormulation) -> Vec<&Table1Row> {
        self.rows.iter().filter(|r| r.formulation == f).collect()
    }

    pub fn pretty(&self) -> String {
        let mut out = format!(
            "{:<14} {:>12} {:>16} {:>16} {:>10}\n",
            "formulation", "rho", "h2sq_numeric", "h2sq_formula", "exact"
        );
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.10}"));
        for r in &self.rows {
            out.push_str(&format!(
                "{:<14} {:>12} {:>16} {:>16} {:>10}\n",
                r.formulation.name(),
                r.rho,
                fmt(r.h2sq_numeric),
                fmt(r.h2sq_formula),
                r.formula_applicable
            ));
        }
        if !self.standard_setting {
            out.push_str("note: t_c > 0 is outside the standard comparison (demand noise only)\n");
        }
        out
    }
}

fn trend(formulation: RaFormulation, values: &[f64]) -> Trend {
    let slack = |a: f64, b: f64| 1e-10 * (1.0 + a.abs().max(b.abs()));
    let nonincreasing = values.windows(2).all(|w| w[1] <= w[0] + slack(w[0], w[1]));
    let nondecreasing = values.windows(2).all(|w| w[1] >= w[0] - slack(w[0], w[1]));
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let increasing_at_end = values.last().is_some_and(|&l| l > min + slack(l, min));
    Trend {
        formulation,
        nonincreasing,
        nondecreasing,
        increasing_at_end,
    }
}

/// H2² of every formulation at every grid point, with closed forms where
/// available. Rows are ordered by formulation, then by grid index.
pub fn table1_report(ra: &ResourceAllocationProblem, rho_grid: &[f64]) -> Result<Table1Report> {
    if rho_grid.is_empty() {
        return Err(Error::invalid("rho grid is empty"));
    }
    for &rho in rho_grid {
        check_rho(rho)?;
    }
    let cells: Vec<(RaFormulation, f64)> = RaFormulation::ALL
        .iter()
        .flat_map(|&f| rho_grid.iter().map(move |&r| (f, r)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(f, rho)| -> Result<Table1Row> {
            let (h2sq_formula, formula_applicable) = ra_formula(ra, f, rho)?;
            let (h2sq_numeric, note) = match ra.build(f, rho) {
                Ok(sys) => (Some(sys.h2_norm_squared()?), None),
                Err(Error::Graph(msg)) => (None, Some(msg)),
                Err(e) => return Err(e),
            };
            Ok(Table1Row {
                formulation: f,
                rho,
                h2sq_numeric,
                h2sq_formula,
                formula_applicable,
                note,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut order: Vec<usize> = (0..rho_grid.len()).collect();
    order.sort_by(|&i, &j| rho_grid[i].total_cmp(&rho_grid[j]));
    let trends = RaFormulation::ALL
        .iter()
        .map(|&f| {
            let col: Vec<&Table1Row> = rows.iter().filter(|r| r.formulation == f).collect();
            let values: Vec<f64> = order.iter().filter_map(|&i| col[i].h2sq_numeric).collect();
            trend(f, &values)
        })
        .collect();
    Ok(Table1Report {
        rows,
        trends,
        standard_setting: ra.in_standard_setting(),
    })
}
