//! Model parameters, household types, grid sizes and state-space indexing.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, ModelError, Result};

/// Preference parameters estimated by GMM.
///
/// Shifters are on the log scale. Leisure intercepts refer to parent age
/// `j_entry`; parenting values are the peak at child age 0. The consumption
/// shifter of childless couples is a normalization and lives in
/// [`crate::preferences::ShifterSchedule`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatedParams {
    pub eta: f64,
    pub psi_l1: f64,
    pub psi_l2: f64,
    pub psi_t1: f64,
    pub psi_t2: f64,
    pub rho_l: f64,
    pub rho_t: f64,
    pub phi_l1_child: f64,
    pub phi_l2_child: f64,
    pub phi_l1_nochild: f64,
    pub phi_l2_nochild: f64,
    pub phi_t1: f64,
    pub phi_t2: f64,
    pub phi_c_child: f64,
}

impl Default for EstimatedParams {
    fn default() -> Self {
        Self {
            eta: 0.4693,
            psi_l1: 0.1986,
            psi_l2: 0.1518,
            psi_t1: 0.2067,
            psi_t2: 0.5440,
            rho_l: 0.4745,
            rho_t: -0.1878,
            phi_l1_child: -8.7970,
            phi_l2_child: -8.8182,
            phi_l1_nochild: -6.4374,
            phi_l2_nochild: -8.8798,
            phi_t1: -20.9558,
            phi_t2: -3.4116,
            phi_c_child: -0.9785,
        }
    }
}

impl EstimatedParams {
    pub const COUNT: usize = 14;

    pub const NAMES: [&'static str; Self::COUNT] = [
        "eta",
        "psi_l1",
        "psi_l2",
        "psi_t1",
        "psi_t2",
        "rho_l",
        "rho_t",
        "phi_l1_child",
        "phi_l2_child",
        "phi_l1_nochild",
        "phi_l2_nochild",
        "phi_t1",
        "phi_t2",
        "phi_c_child",
    ];

    pub fn to_array(&self) -> [f64; Self::COUNT] {
        [
            self.eta,
            self.psi_l1,
            self.psi_l2,
            self.psi_t1,
            self.psi_t2,
            self.rho_l,
            self.rho_t,
            self.phi_l1_child,
            self.phi_l2_child,
            self.phi_l1_nochild,
            self.phi_l2_nochild,
            self.phi_t1,
            self.phi_t2,
            self.phi_c_child,
        ]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        assert_eq!(v.len(), Self::COUNT, "expected {} parameters", Self::COUNT);
        Self {
            eta: v[0],
            psi_l1: v[1],
            psi_l2: v[2],
            psi_t1: v[3],
            psi_t2: v[4],
            rho_l: v[5],
            rho_t: v[6],
            phi_l1_child: v[7],
            phi_l2_child: v[8],
            phi_l1_nochild: v[9],
            phi_l2_nochild: v[10],
            phi_t1: v[11],
            phi_t2: v[12],
            phi_c_child: v[13],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || self.eta == 1.0 {
            return Err(invalid("eta", format!("{} must be positive and != 1", self.eta)));
        }
        for (name, psi) in [
            ("psi_l1", self.psi_l1),
            ("psi_l2", self.psi_l2),
            ("psi_t1", self.psi_t1),
            ("psi_t2", self.psi_t2),
        ] {
            if !(psi > 0.0 && psi < 1.0) {
                return Err(invalid(name, format!("{psi} outside (0, 1)")));
            }
        }
        if self.rho_l == 1.0 || !self.rho_l.is_finite() {
            return Err(invalid("rho_l", "must be finite and != 1"));
        }
        if self.rho_t == 1.0 || !self.rho_t.is_finite() {
            return Err(invalid("rho_t", "must be finite and != 1"));
        }
        if self.to_array().iter().any(|v| !v.is_finite()) {
            return Err(invalid("estimated", "non-finite entry"));
        }
        Ok(())
    }
}

/// Calibrated scalars. Time is a fraction of the day, one period is a year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibratedParams {
    pub beta: f64,
    pub r: f64,
    pub j_entry: u32,
    pub j_retire: u32,
    pub j_max: u32,
    pub j_birth: u32,
    pub hw_hours_1: f64,
    pub hw_hours_2: f64,
    pub nursery_time: f64,
    pub rr_pl: f64,
    pub fee_rate: f64,
    pub pension_rate: f64,
    pub wage: f64,
    pub tax: f64,
    pub h_ref: f64,
    pub wg_scale: f64,
    pub wg_shift: f64,
    pub pl_max_childage: u32,
    pub nursery_min_childage: u32,
    pub nursery_max_childage: u32,
    pub support_max_childage: u32,
}

impl Default for CalibratedParams {
    fn default() -> Self {
        Self {
            beta: 0.96,
            r: 0.05,
            j_entry: 20,
            j_retire: 65,
            j_max: 100,
            j_birth: 30,
            hw_hours_1: 0.125,
            hw_hours_2: 0.125,
            nursery_time: 0.167,
            rr_pl: 0.5,
            fee_rate: 0.25,
            pension_rate: 0.3,
            wage: 1.0,
            tax: 0.2,
            h_ref: 1.0 / 3.0,
            wg_scale: 0.1,
            wg_shift: 0.1,
            pl_max_childage: 2,
            nursery_min_childage: 2,
            nursery_max_childage: 6,
            support_max_childage: 18,
        }
    }
}

impl CalibratedParams {
    /// Number of model ages `j_entry..=j_max`.
    pub fn n_ages(&self) -> usize {
        (self.j_max - self.j_entry + 1) as usize
    }

    pub fn hw_hours(&self, spouse: Spouse) -> f64 {
        match spouse {
            Spouse::Husband => self.hw_hours_1,
            Spouse::Wife => self.hw_hours_2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(invalid("beta", format!("{} outside (0, 1)", self.beta)));
        }
        if !(self.r > -1.0) {
            return Err(invalid("r", format!("{} must exceed -1", self.r)));
        }
        // Horizons shorter than the retirement age are allowed so that small
        // test economies can end right after the birth decision.
        if !(self.j_entry < self.j_birth && self.j_birth <= self.j_max && self.j_birth < self.j_retire)
        {
            return Err(invalid(
                "ages",
                format!(
                    "need j_entry < j_birth <= j_max and j_birth < j_retire (got {} {} {} {})",
                    self.j_entry, self.j_birth, self.j_retire, self.j_max
                ),
            ));
        }
        for (name, v) in [
            ("hw_hours_1", self.hw_hours_1),
            ("hw_hours_2", self.hw_hours_2),
            ("nursery_time", self.nursery_time),
            ("h_ref", self.h_ref),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(invalid(name, format!("{v} outside (0, 1)")));
            }
        }
        for (name, v) in [
            ("rr_pl", self.rr_pl),
            ("fee_rate", self.fee_rate),
            ("pension_rate", self.pension_rate),
            ("tax", self.tax),
        ] {
            if !(0.0..1.0).contains(&v) {
                return Err(invalid(name, format!("{v} outside [0, 1)")));
            }
        }
        if !(self.wage > 0.0) {
            return Err(invalid("wage", "must be positive"));
        }
        if !(self.wg_scale >= 0.0) || !(self.wg_shift > 0.0) {
            return Err(invalid("wg", "need wg_scale >= 0 and wg_shift > 0"));
        }
        if self.nursery_min_childage > self.nursery_max_childage {
            return Err(invalid("nursery_min_childage", "exceeds nursery_max_childage"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Education {
    College,
    HighSchool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spouse {
    Husband,
    Wife,
}

impl Spouse {
    pub const BOTH: [Spouse; 2] = [Spouse::Husband, Spouse::Wife];

    pub fn index(self) -> usize {
        match self {
            Spouse::Husband => 0,
            Spouse::Wife => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HouseholdType {
    pub education: Education,
    pub uses_nursery: bool,
    pub weight: f64,
}

impl HouseholdType {
    pub fn label(&self) -> String {
        let edu = match self.education {
            Education::College => "college",
            Education::HighSchool => "highschool",
        };
        let nur = if self.uses_nursery { "nursery" } else { "no_nursery" };
        format!("{edu}_{nur}")
    }
}

/// Population shares of the four household types.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TypeWeights {
    pub college_nursery: f64,
    pub college_no_nursery: f64,
    pub highschool_nursery: f64,
    pub highschool_no_nursery: f64,
}

impl Default for TypeWeights {
    fn default() -> Self {
        Self {
            college_nursery: 0.25,
            college_no_nursery: 0.25,
            highschool_nursery: 0.25,
            highschool_no_nursery: 0.25,
        }
    }
}

impl TypeWeights {
    pub fn types(&self) -> [HouseholdType; 4] {
        [
            HouseholdType {
                education: Education::College,
                uses_nursery: true,
                weight: self.college_nursery,
            },
            HouseholdType {
                education: Education::College,
                uses_nursery: false,
                weight: self.college_no_nursery,
            },
            HouseholdType {
                education: Education::HighSchool,
                uses_nursery: true,
                weight: self.highschool_nursery,
            },
            HouseholdType {
                education: Education::HighSchool,
                uses_nursery: false,
                weight: self.highschool_no_nursery,
            },
        ]
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.types().map(|t| t.weight)
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.as_array();
        if w.iter().any(|x| !(*x >= 0.0)) {
            return Err(invalid("types", "weights must be nonnegative"));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ModelError::WeightSum(sum));
        }
        Ok(())
    }
}

/// Grid sizes. Leisure and parenting grids are per spouse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub n_assets: usize,
    pub n_z: usize,
    pub n_e: usize,
    pub n_leisure: usize,
    pub n_parenting: usize,
    pub asset_max: f64,
    pub time_floor: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n_assets: 51,
            n_z: 3,
            n_e: 3,
            n_leisure: 11,
            n_parenting: 11,
            asset_max: 20.0,
            time_floor: 0.02,
        }
    }
}

impl GridSpec {
    /// Reduced grids that keep the whole pipeline fast on a laptop.
    pub fn desk() -> Self {
        Self {
            n_assets: 21,
            n_leisure: 5,
            n_parenting: 5,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        // Single-point shock grids are a degenerate deterministic economy,
        // which the oracle tests rely on.
        if self.n_assets < 2 || self.n_leisure < 2 || self.n_parenting < 2 {
            return Err(invalid("grid", "asset and time grids need at least 2 points"));
        }
        if self.n_z == 0 || self.n_e == 0 {
            return Err(invalid("grid", "shock grids need at least one point"));
        }
        if self.n_leisure > u8::MAX as usize || self.n_parenting > u8::MAX as usize {
            return Err(invalid("grid", "time grids are limited to 255 points"));
        }
        if self.n_assets >= u16::MAX as usize {
            return Err(invalid("n_assets", "too many asset points"));
        }
        if !(self.asset_max > 0.0) {
            return Err(invalid("asset_max", "must be positive"));
        }
        if !(self.time_floor > 0.0 && self.time_floor < 0.5) {
            return Err(invalid("time_floor", "must lie in (0, 0.5)"));
        }
        Ok(())
    }

    /// Joint persistent-shock nodes (`n_z` per spouse).
    pub fn nz2(&self) -> usize {
        self.n_z * self.n_z
    }

    pub fn ne2(&self) -> usize {
        self.n_e * self.n_e
    }
}

/// States per child-state branch over `ages` periods.
pub fn flat_state_count(grids: &GridSpec, ages: usize) -> usize {
    grids.n_assets * grids.nz2() * grids.ne2() * ages
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChildState {
    Childless,
    WithChild,
}

impl ChildState {
    pub const BOTH: [ChildState; 2] = [ChildState::Childless, ChildState::WithChild];

    pub fn index(self) -> usize {
        match self {
            ChildState::Childless => 0,
            ChildState::WithChild => 1,
        }
    }

    pub fn from_index(k: usize) -> Self {
        if k == 0 {
            ChildState::Childless
        } else {
            ChildState::WithChild
        }
    }

    pub fn has_child(self) -> bool {
        self == ChildState::WithChild
    }
}

/// Child age at parent age `j`, if there is a child.
pub fn child_age(j: u32, k: ChildState, j_birth: u32) -> Option<u32> {
    match k {
        ChildState::WithChild if j >= j_birth => Some(j - j_birth),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StateIndex {
    pub j: u32,
    pub k: ChildState,
    pub ia: usize,
    pub iz: usize,
    pub ie: usize,
}

/// Row-major layout of the state space: age, child state, assets, z-pair, e-pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLayout {
    pub j_entry: u32,
    pub n_ages: usize,
    pub n_assets: usize,
    pub nz2: usize,
    pub ne2: usize,
}

impl StateLayout {
    pub fn new(grids: &GridSpec, cal: &CalibratedParams) -> Self {
        Self {
            j_entry: cal.j_entry,
            n_ages: cal.n_ages(),
            n_assets: grids.n_assets,
            nz2: grids.nz2(),
            ne2: grids.ne2(),
        }
    }

    /// States in one (age, child-state) slice.
    pub fn slice_len(&self) -> usize {
        self.n_assets * self.nz2 * self.ne2
    }

    /// States in one age (both child branches).
    pub fn age_len(&self) -> usize {
        2 * self.slice_len()
    }

    pub fn len(&self) -> usize {
        self.n_ages * self.age_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Offset of `(ia, iz, ie)` inside a slice.
    #[inline]
    pub fn inner(&self, ia: usize, iz: usize, ie: usize) -> usize {
        (ia * self.nz2 + iz) * self.ne2 + ie
    }

    #[inline]
    pub fn flatten(&self, s: &StateIndex) -> usize {
        debug_assert!(s.j >= self.j_entry);
        let age = (s.j - self.j_entry) as usize;
        (age * 2 + s.k.index()) * self.slice_len() + self.inner(s.ia, s.iz, s.ie)
    }

    pub fn unflatten(&self, mut idx: usize) -> StateIndex {
        let ie = idx % self.ne2;
        idx /= self.ne2;
        let iz = idx % self.nz2;
        idx /= self.nz2;
        let ia = idx % self.n_assets;
        idx /= self.n_assets;
        let k = ChildState::from_index(idx % 2);
        let age = idx / 2;
        StateIndex {
            j: self.j_entry + age as u32,
            k,
            ia,
            iz,
            ie,
        }
    }
}

/// One discrete choice. Time entries index the per-spouse grids; see
/// [`crate::grids::TimeGrid::time_use`] for the implied hours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChoicePoint {
    pub il1: u8,
    pub il2: u8,
    pub it1: u8,
    pub it2: u8,
    pub ia_next: u16,
    pub birth: bool,
    pub pl: bool,
}

impl ChoicePoint {
    /// Marker stored at states without any feasible choice.
    pub const INFEASIBLE: ChoicePoint = ChoicePoint {
        il1: 0,
        il2: 0,
        it1: 0,
        it2: 0,
        ia_next: u16::MAX,
        birth: false,
        pl: false,
    };

    pub fn is_feasible(&self) -> bool {
        self.ia_next != u16::MAX
    }
}
