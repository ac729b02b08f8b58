use serde::Serialize;

use super::{ap_sinr_value, check_feasibility, detection_for, FeasibilityReport};
use crate::error::Result;
use crate::model::{rate, sinr_tag, sinr_ue, BeamformingMatrix, ChannelSet, SystemConfig};

/// State after one iteration of either loop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub y: f64,
    /// `F(W, y)` at this iterate.
    pub objective: f64,
    pub gamma_u: f64,
    pub rate: f64,
    pub gamma_t: f64,
    pub gamma_ap: f64,
    pub power: f64,
    /// Solver iterations (SCA loop) or SCA iterations (outer loop).
    pub inner_iterations: usize,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    /// Whether the stopping threshold was met before the iteration cap.
    pub converged: bool,
}

impl IterationTrace {
    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.rate).collect()
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }
}

/// Complex matrix as separate real and imaginary row-major tables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexTable {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl ComplexTable {
    pub fn from_beam(w: &BeamformingMatrix) -> Self {
        let m = w.matrix();
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            re: m.row_iter().map(|r| r.iter().map(|z| z.re).collect()).collect(),
            im: m.row_iter().map(|r| r.iter().map(|z| z.im).collect()).collect(),
        }
    }
}

/// Final metrics of an alternating solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub rate: f64,
    pub gamma_u: f64,
    pub gamma_t: f64,
    pub gamma_ap: f64,
    pub detection_probability: f64,
    pub power: f64,
    pub outer_iterations: usize,
    pub sca_iterations: usize,
    pub converged: bool,
    pub feasibility: FeasibilityReport,
    pub beamformer: ComplexTable,
    #[serde(skip)]
    pub inner_traces: Vec<IterationTrace>,
}

impl SolveReport {
    pub fn new(
        w: &BeamformingMatrix,
        ch: &ChannelSet,
        cfg: &SystemConfig,
        outer: &IterationTrace,
        inner_traces: Vec<IterationTrace>,
    ) -> Result<Self> {
        let gamma_u = sinr_ue(w, ch, cfg).value;
        let gamma_ap = ap_sinr_value(w, ch, cfg);
        Ok(Self {
            rate: rate(gamma_u)?,
            gamma_u,
            gamma_t: sinr_tag(w, ch, cfg).value,
            gamma_ap,
            detection_probability: detection_for(gamma_ap, cfg)?,
            power: w.power(),
            outer_iterations: outer.records.len(),
            sca_iterations: inner_traces.iter().map(|t| t.records.len() - 1).sum(),
            converged: outer.converged,
            feasibility: check_feasibility(w, ch, cfg, 0.0),
            beamformer: ComplexTable::from_beam(w),
            inner_traces,
        })
    }
}
