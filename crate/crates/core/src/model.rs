//! A fully specified household: parameters, type, age profiles, grids and shocks.

use serde::{Deserialize, Serialize};

use crate::budget::{self, PlMode};
use crate::config::ModelParams;
use crate::error::{invalid, ModelError, Result};
use crate::grids::ModelGrids;
use crate::params::{CalibratedParams, EstimatedParams, HouseholdType, StateLayout};
use crate::preferences::{PeriodShifters, ShifterSchedule};
use crate::shocks::ShockSystem;

/// How the couple's survival is built from the two sex-specific profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurvivalMode {
    #[default]
    Geometric,
    Male,
    Female,
}

impl SurvivalMode {
    pub fn combine(self, male: f64, female: f64) -> f64 {
        match self {
            SurvivalMode::Geometric => (male * female).sqrt(),
            SurvivalMode::Male => male,
            SurvivalMode::Female => female,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOptions {
    pub pl_mode: PlMode,
    pub survival: SurvivalMode,
}

/// Productivity and survival by age for one household type.
///
/// `kappa[s][i]` is spouse `s` at age `j_entry + i`; ages past the end of the
/// vector have zero productivity. `survival[i]` is the couple's one-year
/// survival probability.
#[derive(Debug, Clone, PartialEq)]
pub struct AgeProfileInputs {
    pub j_entry: u32,
    pub kappa: [Vec<f64>; 2],
    pub survival: Vec<f64>,
}

impl AgeProfileInputs {
    #[inline]
    pub fn kappa(&self, j: u32, spouse: usize) -> f64 {
        j.checked_sub(self.j_entry)
            .and_then(|i| self.kappa[spouse].get(i as usize))
            .copied()
            .unwrap_or(0.0)
    }

    #[inline]
    pub fn survival(&self, j: u32) -> f64 {
        self.survival[(j - self.j_entry) as usize]
    }

    pub fn validate(&self, cal: &CalibratedParams) -> Result<()> {
        if self.j_entry != cal.j_entry {
            return Err(invalid("profiles", "profiles must start at j_entry"));
        }
        if self.survival.len() != cal.n_ages() {
            return Err(ModelError::ProfileLength {
                expected: cal.n_ages(),
                got: self.survival.len(),
            });
        }
        let working = (cal.j_retire.min(cal.j_max + 1) - cal.j_entry) as usize;
        for k in &self.kappa {
            if k.len() < working {
                return Err(ModelError::ProfileLength {
                    expected: working,
                    got: k.len(),
                });
            }
            if k.iter().any(|v| !(*v >= 0.0)) {
                return Err(invalid("kappa", "productivity must be nonnegative"));
            }
        }
        if self.survival.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(invalid("survival", "probabilities must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct HouseholdModel {
    pub cal: CalibratedParams,
    pub est: EstimatedParams,
    pub sched: ShifterSchedule,
    pub opts: ModelOptions,
    pub htype: HouseholdType,
    pub inputs: AgeProfileInputs,
    pub grids: ModelGrids,
    pub shocks: ShockSystem,
    pub layout: StateLayout,
    pub pension: f64,
}

impl HouseholdModel {
    pub fn new(params: &ModelParams, htype: HouseholdType, inputs: AgeProfileInputs) -> Result<Self> {
        let shocks = ShockSystem::new(&params.shocks, &params.grid)?;
        Self::with_shocks(params, htype, inputs, shocks)
    }

    /// Build with a precomputed shock system (shared across types).
    pub fn with_shocks(
        params: &ModelParams,
        htype: HouseholdType,
        inputs: AgeProfileInputs,
        shocks: ShockSystem,
    ) -> Result<Self> {
        params.validate()?;
        inputs.validate(&params.calibrated)?;
        let cal = params.calibrated;
        let grids = ModelGrids::new(&params.grid, &cal)?;
        let pension = budget::pension([inputs.kappa(cal.j_retire, 0), inputs.kappa(cal.j_retire, 1)], &cal);
        Ok(Self {
            cal,
            est: params.estimated,
            sched: params.shifters,
            opts: params.options,
            htype,
            layout: StateLayout::new(&params.grid, &cal),
            inputs,
            grids,
            shocks,
            pension,
        })
    }

    #[inline]
    pub fn parenting_active(&self, jc: Option<u32>) -> bool {
        jc.is_some_and(|c| c <= self.cal.support_max_childage)
    }

    #[inline]
    pub fn cash_on_hand(&self, assets: f64, income: f64) -> f64 {
        (1.0 + self.cal.r) * assets + income
    }

    /// Nursery time added to the wife's parenting argument.
    pub fn nursery_time(&self, jc: Option<u32>) -> f64 {
        if budget::in_nursery(jc, self.htype.uses_nursery, &self.cal) {
            self.cal.nursery_time
        } else {
            0.0
        }
    }

    pub fn shifters(&self, j: u32, jc: Option<u32>) -> PeriodShifters {
        PeriodShifters::at(j, jc, &self.est, &self.cal, &self.sched)
    }

    /// One-year survival used in the Bellman equation; zero at the last age.
    pub fn survival(&self, j: u32) -> f64 {
        if j >= self.cal.j_max {
            0.0
        } else {
            self.inputs.survival(j)
        }
    }
}
