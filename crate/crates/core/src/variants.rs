//! Input-output systems of the five algorithm variants, in deviation
//! coordinates around their equilibria.
//!
//! The constant data `c` and `b` only move the equilibrium, so none of the
//! builders read them. Disturbances enter as `c ↦ c + t_c η_c` and
//! `b ↦ b + t_b η_b`; the performance output is `z = Q^{1/2}(x − x*)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::OrientedGraph;
use crate::linalg;
use crate::lti::StateSpace;
use crate::model::{DisturbanceConfig, QuadraticProgram, TimeConstants};

#[derive(Debug, Clone, PartialEq)]
pub enum VariantSpec {
    SaddlePoint,
    Regularized { eps: f64 },
    Augmented { rho: f64 },
    DualAscent,
    AddSp { rho: f64, graph: OrientedGraph },
}

impl VariantSpec {
    pub fn name(&self) -> &'static str {
        match self {
            VariantSpec::SaddlePoint => "saddle_point",
            VariantSpec::Regularized { .. } => "regularized",
            VariantSpec::Augmented { .. } => "augmented",
            VariantSpec::DualAscent => "dual_ascent",
            VariantSpec::AddSp { .. } => "add_sp",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            VariantSpec::Regularized { eps } => check_eps(*eps),
            VariantSpec::Augmented { rho } => check_rho(*rho),
            VariantSpec::AddSp { rho, graph } => {
                check_rho(*rho)?;
                if !graph.is_connected() {
                    return Err(Error::Graph("ADD-SP needs a connected graph".into()));
                }
                Ok(())
            }
            VariantSpec::SaddlePoint | VariantSpec::DualAscent => Ok(()),
        }
    }

    pub fn build(
        &self,
        p: &QuadraticProgram,
        tc: &TimeConstants,
        d: &DisturbanceConfig,
    ) -> Result<StateSpace> {
        match self {
            VariantSpec::SaddlePoint => build_saddle_point(p, tc, d),
            VariantSpec::Regularized { eps } => build_regularized(p, tc, d, *eps),
            VariantSpec::Augmented { rho } => build_augmented(p, tc, d, *rho),
            VariantSpec::DualAscent => build_dual_ascent(p, tc, d),
            VariantSpec::AddSp { rho, graph } => build_add_sp(p, tc, d, *rho, graph),
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("eps must be positive, got {eps}")))
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho >= 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("rho must be nonnegative, got {rho}")))
    }
}

fn check_inputs(p: &QuadraticProgram, d: &DisturbanceConfig) -> Result<()> {
    p.validate().into_result()?;
    d.validate()
}

fn q_sqrt(p: &QuadraticProgram) -> DMatrix<f64> {
    DMatrix::from_diagonal(&p.q_diag().map(f64::sqrt))
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// Primal-dual flow on the (regularized, augmented) Lagrangian.
fn primal_dual(
    p: &QuadraticProgram,
    tc: &TimeConstants,
    d: &DisturbanceConfig,
    eps: f64,
    rho: f64,
) -> Result<StateSpace> {
    check_inputs(p, d)?;
    let (nx, nr, nb) = (p.n_x(), p.n_r(), p.n_b());
    let tx_inv = DMatrix::from_diagonal(&tc.tau_x.resolve(nx, "tau_x")?.map(|t| 1.0 / t));
    let tn_inv = DMatrix::from_diagonal(&tc.tau_nu.resolve(nr, "tau_nu")?.map(|t| 1.0 / t));
    let s = p.s();
    let st = s.transpose();

    let a11 = -(&tx_inv * (p.q_matrix() + &st * s * rho));
    let a12 = -(&tx_inv * &st);
    let a21 = &tn_inv * s;
    let a22 = &tn_inv * (-eps);
    let a = linalg::block2(&a11, &a12, &a21, &a22);

    let b11 = &tx_inv * (-d.t_c);
    let b12 = &tx_inv * &st * p.w_b() * (rho * d.t_b);
    let b21 = DMatrix::zeros(nr, nx);
    let b22 = &tn_inv * p.w_b() * (-d.t_b);
    let b = linalg::block2(&b11, &b12, &b21, &b22);

    let mut c = DMatrix::zeros(nx, nx + nr);
    c.view_mut((0, 0), (nx, nx)).copy_from(&q_sqrt(p));

    let states = [labels("x", nx), labels("nu", nr)].concat();
    let inputs = [labels("eta_c", nx), labels("eta_b", nb)].concat();
    StateSpace::new(a, b, c)?.with_labels(states, inputs, labels("z", nx))
}

pub fn build_saddle_point(
    p: &QuadraticProgram,
    tc: &TimeConstants,
    d: &DisturbanceConfig,
) -> Result<StateSpace> {
    primal_dual(p, tc, d, 0.0, 0.0)
}

pub fn build_regularized(
    p: &QuadraticProgram,
    tc: &TimeConstants,
    d: &DisturbanceConfig,
    eps: f64,
) -> Result<StateSpace> {
    check_eps(eps)?;
    primal_dual(p, tc, d, eps, 0.0)
}

pub fn build_augmented(
    p: &QuadraticProgram,
    tc: &TimeConstants,
    d: &DisturbanceConfig,
    rho: f64,
) -> Result<StateSpace> {
    check_rho(rho)?;
    primal_dual(p, tc, d, 0.0, rho)
}

/// Dual ascent with the primal variable eliminated. Only `η_b` drives this
/// system: a cost disturbance would reach `z` without passing through any
/// state, and the H2 norm would be infinite. `t_c` is therefore ignored.
pub fn build_dual_ascent(
    p: &QuadraticProgram,
    tc: &TimeConstants,
    d: &DisturbanceConfig,
) -> Result<StateSpace> {
    check_inputs(p, d)?;
    let nr = p.n_r();
    let tn_inv = DMatrix::from_diagonal(&tc.tau_nu.resolve(nr, "tau_nu")?.map(|t| 1.0 / t));
    let s = p.s();
    let a = -(&tn_inv * s * p.q_inv() * s.transpose());
    let b = &tn_inv * p.w_b() * (-d.t_b);
    let q_isqrt = DMatrix::from_diagonal(&p.q_diag().map(|q| 1.0 / q.sqrt()));
    let c = -(q_isqrt * s.transpose());
    StateSpace::new(a, b, c)?.with_labels(
        labels("nu", nr),
        labels("eta_b", p.n_b()),
        labels("z", p.n_x()),
    )
}

/// Block-diagonal stacking of the columns of `m`: column `i` becomes the
/// `i`-th diagonal block (size `rows × 1`).
pub fn column_block_diag(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, n) = m.shape();
    let mut out = DMatrix::zeros(n * r, n);
    for i in 0..n {
        out.view_mut((i * r, i), (r, 1)).copy_from(&m.column(i));
    }
    out
}

/// Per-agent dual time constants for ADD-SP: one entry per agent, repeated
/// over the `n_r` multiplier components.
fn per_agent(values: DVector<f64>, block: usize) -> DVector<f64> {
    DVector::from_iterator(
        values.len() * block,
        values.iter().flat_map(|&v| std::iter::repeat_n(v, block)),
    )
}

/// Augmented dual distributed saddle-point dynamics.
///
/// Agent `i` keeps a copy `ν_i` of the multiplier; edge `ℓ` carries a
/// consensus multiplier `μ_ℓ`. `tau_nu` is per agent (`n_x` entries or a
/// scalar) and `tau_mu` per edge. On a cyclic graph the cycle space of the
/// incidence matrix leaves `μ` directions that neither move nor are seen, so
/// `μ` is restricted to the range of `Eᵀ` (after scaling by `T_μ^{-1/2}`)
/// and the states are labelled `w1, w2, …` instead of `mu…`.
pub fn build_add_sp(
    p: &QuadraticProgram,
    tc: &TimeConstants,
    d: &DisturbanceConfig,
    rho: f64,
    graph: &OrientedGraph,
) -> Result<StateSpace> {
    check_inputs(p, d)?;
    check_rho(rho)?;
    let (nx, nr) = (p.n_x(), p.n_r());
    if p.n_b() != nx {
        return Err(Error::DimensionMismatch(format!(
            "ADD-SP needs one disturbance per agent (n_b = n_x = {nx}), got n_b = {}",
            p.n_b()
        )));
    }
    if graph.n_nodes() != nx {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} nodes, problem has {nx} agents",
            graph.n_nodes()
        )));
    }
    if !graph.is_connected() {
        return Err(Error::Graph("ADD-SP needs a connected graph".into()));
    }
    let ne = graph.n_edges();
    let tn = per_agent(tc.tau_nu.resolve(nx, "tau_nu")?, nr);
    let tm = per_agent(tc.tau_mu.resolve(ne, "tau_mu")?, nr);
    let tn_inv = DMatrix::from_diagonal(&tn.map(|t| 1.0 / t));

    let eye_r = DMatrix::<f64>::identity(nr, nr);
    let s_blk = column_block_diag(p.s());
    let w_blk = column_block_diag(p.w_b());
    let e_kron = linalg::kron(&graph.incidence_matrix(), &eye_r);
    let l_kron = linalg::kron(&graph.laplacian(), &eye_r);
    let k = &s_blk * p.q_inv() * s_blk.transpose() + l_kron * rho;

    let n_nu = nx * nr;
    let b_nu = &tn_inv * &w_blk * (-d.t_b);
    let q_isqrt = DMatrix::from_diagonal(&p.q_diag().map(|q| 1.0 / q.sqrt()));
    let c_nu = -(q_isqrt * s_blk.transpose());

    let a11 = -(&tn_inv * &k);
    let (a12, a21, mu_labels, mu_scale) = if graph.is_acyclic() {
        let tm_inv = DMatrix::from_diagonal(&tm.map(|t| 1.0 / t));
        (
            -(&tn_inv * &e_kron),
            tm_inv * e_kron.transpose(),
            (1..=ne)
                .flat_map(|l| (1..=nr).map(move |r| format!("mu{l}_{r}")))
                .collect::<Vec<_>>(),
            tm.clone(),
        )
    } else {
        let tm_isqrt = DMatrix::from_diagonal(&tm.map(|t| 1.0 / t.sqrt()));
        let m = tm_isqrt * e_kron.transpose();
        let basis = range_basis(&m);
        let pm = basis.transpose() * &m;
        let n_w = basis.ncols();
        (-(&tn_inv * pm.transpose()), pm, labels("w", n_w), DVector::from_element(n_w, 1.0))
    };
    let n_mu = a21.nrows();
    let a = linalg::block2(&a11, &a12, &a21, &DMatrix::zeros(n_mu, n_mu));
    let mut b = DMatrix::zeros(n_nu + n_mu, nx);
    b.view_mut((0, 0), (n_nu, nx)).copy_from(&b_nu);
    let mut c = DMatrix::zeros(nx, n_nu + n_mu);
    c.view_mut((0, 0), (nx, n_nu)).copy_from(&c_nu);

    let nu_labels = (1..=nx)
        .flat_map(|i| (1..=nr).map(move |r| format!("nu{i}_{r}")))
        .collect::<Vec<_>>();
    let scale = DVector::from_iterator(n_nu + n_mu, tn.iter().chain(mu_scale.iter()).copied());
    let sys = StateSpace::new(a, b, c)?.with_labels(
        [nu_labels, mu_labels].concat(),
        labels("eta_b", nx),
        labels("z", nx),
    )?;
    strip_undamped_modes(sys, &scale)
}

/// Remove the largest invariant subspace on which the dynamics receive no
/// damping.
///
/// With `T = diag(scale)`, the matrix `T^{1/2} A T^{-1/2}` splits into a
/// negative semidefinite symmetric part and a skew part. The undamped
/// subspace is invariant, its orthogonal complement is too, and the output
/// vanishes on it, so restricting to the complement keeps the transfer
/// function. Besides graph cycles, such modes appear on trees when agents
/// carry more than one constraint. The system is returned unchanged when
/// the subspace is trivial.
pub fn strip_undamped_modes(sys: StateSpace, scale: &DVector<f64>) -> Result<StateSpace> {
    let n = sys.n_states();
    let sq = scale.map(f64::sqrt);
    let a = DMatrix::from_fn(n, n, |i, j| sq[i] * sys.a()[(i, j)] / sq[j]);
    let tol = 1e-9 * (1.0 + a.norm());
    let damping = -(&a + a.transpose()) * 0.5;
    let mut w = kernel_basis(&damping, tol);
    while w.ncols() > 0 {
        let aw = &a * &w;
        let residual = &aw - &w * (w.transpose() * &aw);
        let keep = kernel_basis(&residual, tol);
        if keep.ncols() == w.ncols() {
            break;
        }
        w = &w * keep;
    }
    if w.ncols() == 0 {
        return Ok(sys);
    }
    let p = kernel_basis(&w.transpose(), 1e-9);
    let b_scaled = DMatrix::from_fn(n, sys.n_inputs(), |i, j| sq[i] * sys.b()[(i, j)]);
    let c_scaled = DMatrix::from_fn(sys.n_outputs(), n, |i, j| sys.c()[(i, j)] / sq[j]);
    let reduced = StateSpace::new(
        p.transpose() * &a * &p,
        p.transpose() * b_scaled,
        c_scaled * &p,
    )?;
    reduced.with_labels(labels("r", p.ncols()), sys.input_labels, sys.output_labels)
}

/// Orthonormal basis of `{v : M v = 0}`, treating singular values at or
/// below `tol` as zero.
fn kernel_basis(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let k = m.ncols();
    if k == 0 {
        return DMatrix::zeros(0, 0);
    }
    // Pad to at least square so the SVD returns a full set of right vectors.
    let mut padded = DMatrix::zeros(m.nrows().max(k), k);
    padded.view_mut((0, 0), m.shape()).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let cols: Vec<_> = (0..k)
        .filter(|&i| svd.singular_values[i] <= tol)
        .map(|i| v_t.row(i).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(k, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Orthonormal basis of the column space of `m`, from its SVD.
pub fn range_basis(m: &DMatrix<f64>) -> DMatrix<f64> {
    let r = linalg::rank(m);
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    // nalgebra does not sort singular values; pick the r largest.
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let cols: Vec<_> = order[..r].iter().map(|&i| u.column(i).into_owned()).collect();
    if cols.is_empty() {
        DMatrix::zeros(m.nrows(), 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}
