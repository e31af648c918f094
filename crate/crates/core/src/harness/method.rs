use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::bilinear::{run_adm, run_homotopy, run_iadm, BaseSolver, BilinearConfig};
use crate::error::{Error, Result};
use crate::roco::{run_roco, FactorPair, Residuals, RocoConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(into = "String")]
pub enum Method {
    Roco,
    Adm,
    Iadm,
    HomotopyAdm,
    HomotopyIadm,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Roco,
        Method::Adm,
        Method::Iadm,
        Method::HomotopyAdm,
        Method::HomotopyIadm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Roco => "roco",
            Method::Adm => "adm",
            Method::Iadm => "iadm",
            Method::HomotopyAdm => "homotopy-adm",
            Method::HomotopyIadm => "homotopy-iadm",
        }
    }

    pub fn valid_names() -> String {
        Method::ALL.map(Method::name).join(", ")
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.name().to_string()
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown method `{s}` (valid: {})",
                    Method::valid_names()
                ))
            })
    }
}

/// Configuration shared by every solver a harness run may dispatch to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SolverSettings {
    pub roco: RocoConfig,
    pub bilinear: BilinearConfig,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trace {
    Residuals {
        residuals: Vec<Residuals>,
        svd_warnings: usize,
    },
    Objective {
        lambda: f64,
        objective: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub method: Method,
    pub factors: FactorPair,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Trace,
}

pub fn solve(
    method: Method,
    y: &[f64],
    kernel_len: usize,
    settings: &SolverSettings,
) -> Result<SolveReport> {
    if method == Method::Roco {
        let out = run_roco(y, kernel_len, &settings.roco)?;
        return Ok(SolveReport {
            method,
            factors: out.factors,
            iterations: out.state.iteration,
            converged: out.converged,
            trace: Trace::Residuals {
                residuals: out.state.residuals,
                svd_warnings: out.state.svd_warnings,
            },
        });
    }
    let cfg = &settings.bilinear;
    let out = match method {
        Method::Adm => run_adm(y, kernel_len, cfg)?,
        Method::Iadm => run_iadm(y, kernel_len, cfg)?,
        Method::HomotopyAdm => run_homotopy(BaseSolver::Adm, y, kernel_len, cfg)?,
        Method::HomotopyIadm => run_homotopy(BaseSolver::Iadm, y, kernel_len, cfg)?,
        Method::Roco => unreachable!(),
    };
    Ok(SolveReport {
        method,
        factors: out.factors,
        iterations: out.state.iteration,
        converged: out.converged,
        trace: Trace::Objective {
            lambda: out.lambda,
            objective: out.state.objective,
        },
    })
}
