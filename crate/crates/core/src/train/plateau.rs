use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Reduce-on-plateau learning-rate schedule driven by the validation loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauState {
    #[serde(with = "infinite_as_null")]
    pub best_val: f64,
    pub epochs_since_improve: usize,
    pub factor: f64,
    pub patience: usize,
    pub rel_threshold: f64,
    pub min_lr: f64,
    pub current_lr: f64,
}

impl PlateauState {
    pub fn new(initial_lr: f64) -> Self {
        PlateauState {
            best_val: f64::INFINITY,
            epochs_since_improve: 0,
            factor: 0.1,
            patience: 3,
            rel_threshold: 1e-4,
            min_lr: 1e-7,
            current_lr: initial_lr,
        }
    }

    /// Records one epoch's validation loss and returns whether the rate was reduced.
    ///
    /// An epoch improves when `val_loss < best · (1 − rel_threshold)`. After
    /// `patience` epochs without improvement the rate is multiplied by
    /// `factor` (never below `min_lr`) and the counter restarts.
    pub fn step(&mut self, val_loss: f64) -> Result<bool> {
        if val_loss.is_nan() {
            return Err(invalid("validation loss is NaN"));
        }
        if val_loss < self.best_val * (1.0 - self.rel_threshold) {
            self.best_val = val_loss;
            self.epochs_since_improve = 0;
            return Ok(false);
        }
        self.epochs_since_improve += 1;
        if self.epochs_since_improve >= self.patience {
            self.current_lr = (self.current_lr * self.factor).max(self.min_lr);
            self.epochs_since_improve = 0;
            return Ok(true);
        }
        Ok(false)
    }
}

// JSON has no infinity; the initial `best_val` is stored as null.
mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drops_on_fourth_call() {
        let mut s = PlateauState::new(1e-3);
        let mut lrs = Vec::new();
        for loss in [0.5, 0.51, 0.50, 0.52] {
            s.step(loss).unwrap();
            lrs.push(s.current_lr);
        }
        assert_eq!(&lrs[..3], &[1e-3, 1e-3, 1e-3]);
        assert!((lrs[3] - 1e-4).abs() < 1e-18);
        assert_eq!(s.epochs_since_improve, 0);
    }

    #[test]
    fn decreasing_never_drops() {
        let mut s = PlateauState::new(1e-3);
        for i in 0..50 {
            assert!(!s.step(1.0 / (i + 1) as f64).unwrap());
        }
        assert_eq!(s.current_lr, 1e-3);
    }

    #[test]
    fn clamped_at_min() {
        let mut s = PlateauState::new(1e-7);
        s.step(1.0).unwrap();
        for _ in 0..12 {
            s.step(2.0).unwrap();
        }
        assert_eq!(s.current_lr, 1e-7);
    }

    #[test]
    fn json_round_trip_with_infinite_best() {
        let s = PlateauState::new(1e-3);
        let back: PlateauState = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn nan_aborts() {
        assert!(PlateauState::new(1e-3).step(f64::NAN).is_err());
    }
}
