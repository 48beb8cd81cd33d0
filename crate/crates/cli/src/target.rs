//! Resolve problem data and variant flags into something buildable.

use saddle_h2::report::{self, H2Report};
use saddle_h2::{
    DisturbanceConfig, Error, GraphKind, OrientedGraph, ProblemFile, QpFile, RaFormulation, RaTimeConstants, ResourceAllocationProblem,
    Result, StateSpace, TimeConstants, VariantSpec,
};

use crate::args::{Graph, Param, ProblemArgs, Variant, VariantArgs};

pub enum Target {
    Qp { file: QpFile, spec: VariantSpec },
    Ra { ra: ResourceAllocationProblem, formulation: RaFormulation, rho: f64 },
}

impl Target {
    pub fn build(&self) -> Result<StateSpace> {
        match self {
            Target::Qp { file, spec } => {
                spec.validate()?;
                spec.build(&file.program, &file.time_constants, &file.disturbance)
            }
            Target::Ra { ra, formulation, rho } => ra.build(*formulation, *rho),
        }
    }

    pub fn report(&self) -> Result<H2Report> {
        match self {
            Target::Qp { file, spec } => report::analyze(&file.program, &file.time_constants, &file.disturbance, spec),
            Target::Ra { ra, formulation, rho } => report::analyze_ra(ra, *formulation, *rho),
        }
    }

    /// The same target with `rho` or `eps` replaced.
    pub fn with_param(&self, param: Param, value: f64) -> Result<Target> {
        match (self, param) {
            (Target::Qp { file, spec }, _) => {
                let spec = match (spec, param) {
                    (VariantSpec::Regularized { .. }, Param::Eps) => VariantSpec::Regularized { eps: value },
                    (VariantSpec::Augmented { .. }, Param::Rho) => VariantSpec::Augmented { rho: value },
                    (VariantSpec::AddSp { graph, .. }, Param::Rho) => VariantSpec::AddSp { rho: value, graph: graph.clone() },
                    (s, p) => return Err(unsupported(s.name(), p)),
                };
                Ok(Target::Qp { file: file.clone(), spec })
            }
            (Target::Ra { ra, formulation, .. }, Param::Rho) if *formulation != RaFormulation::CentDual => {
                Ok(Target::Ra { ra: ra.clone(), formulation: *formulation, rho: value })
            }
            (Target::Ra { formulation, .. }, p) => Err(unsupported(formulation.name(), p)),
        }
    }

    /// The unperturbed reference: `eps = 0` is the plain saddle-point flow.
    pub fn baseline(&self, param: Param) -> Result<Target> {
        match (self, param) {
            (Target::Qp { file, .. }, Param::Eps) => Ok(Target::Qp { file: file.clone(), spec: VariantSpec::SaddlePoint }),
            _ => self.with_param(Param::Rho, 0.0),
        }
    }
}

fn unsupported(name: &str, p: Param) -> Error {
    let p = match p {
        Param::Rho => "rho",
        Param::Eps => "eps",
    };
    Error::invalid(format!("variant {name} has no `{p}` parameter"))
}

fn graph_kind(g: Graph) -> GraphKind {
    match g {
        Graph::Line => GraphKind::Line,
        Graph::Ring => GraphKind::Ring,
        Graph::Complete => GraphKind::Complete,
        Graph::Star => GraphKind::Star,
    }
}

fn ra_formulation(v: Variant) -> Option<RaFormulation> {
    match v {
        Variant::RaCent => Some(RaFormulation::Cent),
        Variant::RaDist => Some(RaFormulation::Dist),
        Variant::RaCentDual => Some(RaFormulation::CentDual),
        Variant::RaDistDual => Some(RaFormulation::DistDual),
        _ => None,
    }
}

/// Flag graph if given, else the file's graph.
fn pick_graph(args: &ProblemArgs, default_n: usize, from_file: Option<&OrientedGraph>) -> Result<Option<OrientedGraph>> {
    match (args.graph, from_file) {
        (Some(g), _) => OrientedGraph::generate(graph_kind(g), args.n.unwrap_or(default_n)).map(Some),
        (None, Some(g)) => Ok(Some(g.clone())),
        (None, None) => Ok(None),
    }
}

pub fn ra_problem(args: &ProblemArgs, file: Option<&ProblemFile>) -> Result<ResourceAllocationProblem> {
    match file {
        Some(ProblemFile::ResourceAllocation(ra)) => match pick_graph(args, ra.n(), None)? {
            Some(g) => ra.with_graph(g),
            None => Ok(ra.clone()),
        },
        Some(ProblemFile::Qp(_)) => Err(Error::invalid(
            "resource-allocation variants need a `resource_allocation` problem file or flags only",
        )),
        None => {
            let n = args.n.unwrap_or(4);
            let g = OrientedGraph::generate(graph_kind(args.graph.unwrap_or(Graph::Line)), n)?;
            let tau = RaTimeConstants { tau_nu: args.tau_nu, ..RaTimeConstants::default() };
            let d = DisturbanceConfig::new(0.0, 1.0)?;
            ResourceAllocationProblem::new(vec![args.q; n], vec![0.0; n], vec![0.0; n], g, tau, d)
        }
    }
}

fn qp_file(args: &ProblemArgs, file: Option<&ProblemFile>) -> Result<QpFile> {
    let mut qp = match file {
        Some(ProblemFile::Qp(f)) => f.clone(),
        Some(ProblemFile::ResourceAllocation(ra)) => QpFile {
            program: ra.quadratic_program()?,
            time_constants: TimeConstants::uniform(ra.tau.tau_x, ra.tau.tau_nu),
            disturbance: ra.disturbance,
            graph: Some(ra.graph().clone()),
        },
        None => return Err(Error::invalid("this variant needs a problem file")),
    };
    qp.graph = pick_graph(args, qp.program.n_x(), qp.graph.as_ref())?;
    Ok(qp)
}

pub fn resolve(args: &ProblemArgs, v: &VariantArgs, file: Option<&ProblemFile>) -> Result<Target> {
    if let Some(formulation) = ra_formulation(v.variant) {
        return Ok(Target::Ra { ra: ra_problem(args, file)?, formulation, rho: v.rho });
    }
    let file = qp_file(args, file)?;
    let spec = match v.variant {
        Variant::SaddlePoint => VariantSpec::SaddlePoint,
        Variant::DualAscent => VariantSpec::DualAscent,
        Variant::Augmented => VariantSpec::Augmented { rho: v.rho },
        Variant::Regularized => VariantSpec::Regularized {
            eps: v.eps.ok_or_else(|| Error::invalid("the regularized variant needs --eps"))?,
        },
        Variant::AddSp => VariantSpec::AddSp {
            rho: v.rho,
            graph: file
                .graph
                .clone()
                .ok_or_else(|| Error::invalid("add_sp needs a graph (--graph or a `graph` key)"))?,
        },
        _ => unreachable!("resource-allocation variants handled above"),
    };
    Ok(Target::Qp { file, spec })
}
