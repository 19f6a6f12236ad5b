//! Measurement access to the value function: `m ↦ U(0, m)` and nothing else.

use crate::error::{MilError, Result};
use crate::grid::{GridDomain, GridField, GridMeasure};
use crate::pdesolve::{DriftPotential, TimeGrid};
use crate::wcalculus::MeasureFunctional;
use std::sync::atomic::{AtomicU64, Ordering};

use super::cost::{RunningCost, TerminalCost};
use super::value::dpe_value;

/// Deterministic query interface `m ↦ U(0, m)` with a call counter and an
/// optional budget. Only defined on genuine probability measures.
pub struct DataOracle {
    running: RunningCost,
    terminal: TerminalCost,
    drift: DriftPotential,
    tg: TimeGrid,
    calls: AtomicU64,
    budget: Option<u64>,
}

impl DataOracle {
    pub fn new(
        running: RunningCost,
        terminal: TerminalCost,
        drift: DriftPotential,
        tg: TimeGrid,
        budget: Option<u64>,
    ) -> Self {
        Self { running, terminal, drift, tg, calls: AtomicU64::new(0), budget }
    }

    pub fn query(&self, m: &GridMeasure) -> Result<f64> {
        let used = self.calls.fetch_add(1, Ordering::SeqCst) + 1;
        if let Some(budget) = self.budget {
            if used > budget {
                return Err(MilError::OracleBudgetExceeded { budget });
            }
        }
        dpe_value(&self.running, &self.terminal, &self.drift, m, self.tg)
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn time_grid(&self) -> TimeGrid {
        self.tg
    }
}

impl MeasureFunctional for DataOracle {
    fn domain(&self) -> &GridDomain {
        self.drift.domain()
    }

    fn eval_field(&self, m: &GridField) -> Result<f64> {
        let measure = GridMeasure::new(m.domain.clone(), m.values().to_vec())?;
        self.query(&measure)
    }

    fn signed_ok(&self) -> bool {
        false
    }
}
