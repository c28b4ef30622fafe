//! Asset grid and the per-spouse leisure/parenting lattices.
//!
//! Both time grids share one step `d = (1 - housework) / (n_leisure - 1)`:
//! point `k >= 1` sits at `k * d` and point 0 sits at the time floor. Market
//! hours are therefore `(n_leisure - 1 - units) * d - floors * time_floor`,
//! which is computed from integers so equal allocations compare bitwise equal.

use crate::error::{invalid, Result};
use crate::params::{CalibratedParams, ChoicePoint, GridSpec, Spouse};

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub step: f64,
    pub floor: f64,
    pub housework: f64,
    pub n_leisure: usize,
    pub n_parenting: usize,
}

impl TimeGrid {
    pub fn new(grids: &GridSpec, housework: f64) -> Result<Self> {
        let step = (1.0 - housework) / (grids.n_leisure - 1) as f64;
        if grids.time_floor >= step {
            return Err(invalid(
                "time_floor",
                format!("{} must be below the time grid step {step}", grids.time_floor),
            ));
        }
        Ok(Self {
            step,
            floor: grids.time_floor,
            housework,
            n_leisure: grids.n_leisure,
            n_parenting: grids.n_parenting,
        })
    }

    #[inline]
    fn point(&self, k: usize) -> f64 {
        if k == 0 {
            self.floor
        } else {
            k as f64 * self.step
        }
    }

    pub fn leisure(&self, k: usize) -> f64 {
        self.point(k)
    }

    pub fn parenting(&self, k: usize) -> f64 {
        self.point(k)
    }

    /// Market hours implied by leisure index `il` and, when the parenting
    /// block is active, parenting index `it`. `None` if the day is overbooked.
    pub fn market(&self, il: usize, it: Option<usize>) -> Option<f64> {
        let mut units = 0usize;
        let mut floors = 0u32;
        for k in std::iter::once(il).chain(it) {
            if k == 0 {
                floors += 1;
            } else {
                units += k;
            }
        }
        let top = self.n_leisure - 1;
        if units > top {
            return None;
        }
        let m = (top - units) as f64 * self.step - floors as f64 * self.floor;
        (m >= 0.0).then_some(m)
    }

    /// Leisure left when market hours are forced to zero (parental leave).
    pub fn residual_leisure(&self, it: usize) -> Option<f64> {
        let top = self.n_leisure - 1;
        let l = if it == 0 {
            top as f64 * self.step - self.floor
        } else if it < top {
            (top - it) as f64 * self.step
        } else {
            return None;
        };
        (l >= self.floor).then_some(l)
    }
}

/// Hours of each activity per spouse as day fractions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TimeUse {
    pub leisure: [f64; 2],
    pub parenting: [f64; 2],
    pub market: [f64; 2],
    pub housework: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrids {
    pub assets: Vec<f64>,
    pub time: [TimeGrid; 2],
}

impl ModelGrids {
    pub fn new(grids: &GridSpec, cal: &CalibratedParams) -> Result<Self> {
        grids.validate()?;
        let n = grids.n_assets;
        let assets = (0..n)
            .map(|i| grids.asset_max * i as f64 / (n - 1) as f64)
            .collect();
        Ok(Self {
            assets,
            time: [
                TimeGrid::new(grids, cal.hw_hours(Spouse::Husband))?,
                TimeGrid::new(grids, cal.hw_hours(Spouse::Wife))?,
            ],
        })
    }

    /// Hours implied by a choice. `parenting_active` says whether the
    /// parenting block applies this period; `None` for infeasible choices.
    pub fn time_use(&self, choice: &ChoicePoint, parenting_active: bool, pl_exclusive: bool) -> Option<TimeUse> {
        let mut tu = TimeUse::default();
        let il = [choice.il1 as usize, choice.il2 as usize];
        let it = [choice.it1 as usize, choice.it2 as usize];
        for s in 0..2 {
            let g = &self.time[s];
            tu.housework[s] = g.housework;
            let it_s = parenting_active.then_some(it[s]);
            tu.parenting[s] = if parenting_active { g.parenting(it[s]) } else { 0.0 };
            if s == 1 && choice.pl && pl_exclusive {
                // leave is only available while the child is an infant
                if !parenting_active {
                    return None;
                }
                tu.leisure[s] = g.residual_leisure(it[s])?;
                tu.market[s] = 0.0;
            } else {
                tu.leisure[s] = g.leisure(il[s]);
                tu.market[s] = g.market(il[s], it_s)?;
            }
        }
        Some(tu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> TimeGrid {
        let spec = GridSpec {
            n_leisure: n,
            n_parenting: n,
            ..GridSpec::default()
        };
        TimeGrid::new(&spec, 0.125).unwrap()
    }

    #[test]
    fn lattice_points() {
        let g = grid(5);
        assert_eq!(g.step, 0.875 / 4.0);
        assert_eq!(g.leisure(0), 0.02);
        assert_eq!(g.leisure(4), 0.875);
        assert_eq!(g.market(4, None), Some(0.0));
        assert_eq!(g.market(2, Some(2)), Some(0.0));
        assert_eq!(g.market(3, Some(2)), None);
        // equal sums give bitwise-equal market hours
        assert_eq!(g.market(1, Some(2)), g.market(2, Some(1)));
    }

    #[test]
    fn time_identity_holds() {
        let g = grid(11);
        for il in 0..11 {
            for it in 0..11 {
                if let Some(m) = g.market(il, Some(it)) {
                    let total = g.leisure(il) + g.parenting(it) + m + g.housework;
                    assert!((total - 1.0).abs() < 1e-14);
                }
            }
            if let Some(m) = g.market(il, None) {
                assert!((g.leisure(il) + m + g.housework - 1.0).abs() < 1e-14);
            }
        }
        for it in 0..10 {
            let l = g.residual_leisure(it).unwrap();
            assert!((l + g.parenting(it) + g.housework - 1.0).abs() < 1e-14);
        }
        assert!(g.residual_leisure(10).is_none());
    }

    #[test]
    fn floor_must_sit_below_step() {
        let spec = GridSpec {
            n_leisure: 50,
            time_floor: 0.03,
            ..GridSpec::default()
        };
        assert!(TimeGrid::new(&spec, 0.125).is_err());
    }

    #[test]
    fn asset_grid_includes_zero() {
        let g = ModelGrids::new(&GridSpec::desk(), &CalibratedParams::default()).unwrap();
        assert_eq!(g.assets.len(), 21);
        assert_eq!(g.assets[0], 0.0);
        assert_eq!(*g.assets.last().unwrap(), 20.0);
    }
}
