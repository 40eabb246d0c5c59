//! Quadratic Wasserstein distances: exact discrete solvers, semi-discrete
//! transport against quantized reference measures, entropic approximation
//! and the L² upper bound.

mod assignment;
mod bruteforce;
mod network_simplex;
mod quantize;
mod semidiscrete;
mod sinkhorn;
mod sobolev;

pub use assignment::{solve_assignment, w2_assignment};
pub use bruteforce::w2_bruteforce;
pub use network_simplex::{w2_discrete, DiscreteTransport};
pub use quantize::{quantize, WeightedCloud};
pub use semidiscrete::{w2_semidiscrete, w2_semidiscrete_with_limit, DEFAULT_PROBLEM_LIMIT};
pub use sinkhorn::{w2_sinkhorn, SinkhornResult};
pub use sobolev::h_neg1_bound;

use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Bruteforce,
    Assignment,
    NetworkSimplex,
    Sinkhorn,
}

impl Solver {
    pub fn as_str(&self) -> &'static str {
        match self {
            Solver::Bruteforce => "bruteforce",
            Solver::Assignment => "assignment",
            Solver::NetworkSimplex => "network_simplex",
            Solver::Sinkhorn => "sinkhorn",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub src: usize,
    pub dst: usize,
    pub mass: f64,
}

/// Outcome of a transport solve. `cost` is W2 itself, not its square.
#[derive(Debug, Clone)]
pub struct TransportPlanResult {
    pub cost: f64,
    pub plan: Option<Vec<PlanEntry>>,
    pub solver: Solver,
    pub quantization_bound: f64,
    pub n: usize,
    pub m: usize,
}

#[derive(Serialize)]
struct CostRecord<'a> {
    cost: f64,
    quantization_bound: f64,
    solver: &'a str,
    n: usize,
    m: usize,
}

impl TransportPlanResult {
    pub fn write_plan_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["src_idx", "dst_idx", "mass"])?;
        for e in self.plan.iter().flatten() {
            w.write_record([e.src.to_string(), e.dst.to_string(), format!("{:.17e}", e.mass)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&CostRecord {
            cost: self.cost,
            quantization_bound: self.quantization_bound,
            solver: self.solver.as_str(),
            n: self.n,
            m: self.m,
        })?)
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
