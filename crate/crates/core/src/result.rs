use serde::Serialize;

use crate::qcore::PureState;

/// How a deficiency value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    PureFormula,
    GridOracle,
    CoordinateAscent,
    PowerIteration,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::PureFormula => "pure_formula",
            Method::GridOracle => "grid_oracle",
            Method::CoordinateAscent => "coordinate_ascent",
            Method::PowerIteration => "power_iteration",
        }
    }
}

/// Deficiency `1 - F_max` together with the maximal resource state attaining `F_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeficiencyResult {
    /// Deficiency clamped to `[0, 1]`.
    pub value: f64,
    /// `1 - value`.
    pub fidelity: f64,
    /// Optimizer objective before clamping.
    pub raw_fidelity: f64,
    pub witness: PureState,
    pub method: Method,
    pub iterations: usize,
    pub converged: bool,
    /// `value - l1_lower_bound` for coherence; `None` for entanglement.
    pub bound_gap: Option<f64>,
}

impl DeficiencyResult {
    pub(crate) fn from_fidelity(
        raw_fidelity: f64,
        witness: PureState,
        method: Method,
        iterations: usize,
        converged: bool,
    ) -> Self {
        let value = (1.0 - raw_fidelity).clamp(0.0, 1.0);
        Self {
            value,
            fidelity: 1.0 - value,
            raw_fidelity,
            witness,
            method,
            iterations,
            converged,
            bound_gap: None,
        }
    }
}
