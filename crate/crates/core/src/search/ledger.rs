use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChargeKind {
    Generation,
    Scoring,
}

/// A charge that would overrun the budget. Nothing was recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetExhausted {
    pub requested: usize,
    pub remaining: usize,
}

/// Compute accounting in verifier-pass units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetLedger {
    pub total_units: usize,
    pub used_units: usize,
    pub generation_units: usize,
    pub scoring_units: usize,
}

impl BudgetLedger {
    pub fn new(total_units: usize) -> Self {
        Self {
            total_units,
            used_units: 0,
            generation_units: 0,
            scoring_units: 0,
        }
    }

    pub fn remaining(&self) -> usize {
        self.total_units - self.used_units
    }

    pub fn can_afford(&self, units: usize) -> bool {
        units <= self.remaining()
    }

    /// Records `units` of `kind`, or refuses without side effects.
    pub fn charge(&mut self, kind: ChargeKind, units: usize) -> Result<(), BudgetExhausted> {
        if !self.can_afford(units) {
            return Err(BudgetExhausted {
                requested: units,
                remaining: self.remaining(),
            });
        }
        self.used_units += units;
        match kind {
            ChargeKind::Generation => self.generation_units += units,
            ChargeKind::Scoring => self.scoring_units += units,
        }
        Ok(())
    }

    pub fn is_consistent(&self) -> bool {
        self.used_units <= self.total_units && self.generation_units + self.scoring_units == self.used_units
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charges_accumulate_by_kind() {
        let mut l = BudgetLedger::new(100);
        l.charge(ChargeKind::Generation, 36).unwrap();
        l.charge(ChargeKind::Scoring, 7).unwrap();
        assert_eq!(l.used_units, 43);
        assert_eq!(l.remaining(), 57);
        assert!(l.is_consistent());
    }

    #[test]
    fn overrun_is_refused_without_side_effects() {
        let mut l = BudgetLedger::new(10);
        l.charge(ChargeKind::Scoring, 8).unwrap();
        let before = l;
        assert_eq!(
            l.charge(ChargeKind::Generation, 3),
            Err(BudgetExhausted { requested: 3, remaining: 2 })
        );
        assert_eq!(l, before);
        l.charge(ChargeKind::Generation, 2).unwrap();
        assert_eq!(l.remaining(), 0);
    }
}
