use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// Weights `d_k` with power-law decay `d(sgn k) |k|^{-p}`.
///
/// Finitely many weights may be overridden; the overrides change the
/// operator but not the constants of the asymptotics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightSequence {
    p: f64,
    d_plus: f64,
    d_minus: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    prefix_override: BTreeMap<i64, f64>,
}

impl WeightSequence {
    pub fn new(p: f64, d_plus: f64, d_minus: f64) -> Result<Self> {
        if !(p > 0.5) || !p.is_finite() {
            return Err(Error::Domain(format!("weight exponent must satisfy p > 1/2, got {p}")));
        }
        if !(d_plus >= 0.0 && d_minus >= 0.0) || !d_plus.is_finite() || !d_minus.is_finite() {
            return Err(Error::Domain(format!(
                "one-sided constants must be finite and nonnegative, got d+={d_plus}, d-={d_minus}"
            )));
        }
        if d_plus.max(d_minus) == 0.0 {
            return Err(Error::Domain("at least one of d+ and d- must be positive".into()));
        }
        Ok(Self { p, d_plus, d_minus, prefix_override: BTreeMap::new() })
    }

    /// Symmetric weights `|k|^{-p}`.
    pub fn symmetric(p: f64) -> Result<Self> {
        Self::new(p, 1.0, 1.0)
    }

    /// Replaces finitely many weights.
    pub fn with_overrides<I>(mut self, overrides: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, f64)>,
    {
        for (k, d) in overrides {
            if !(d >= 0.0) || !d.is_finite() {
                return Err(Error::Domain(format!("override d_{k} = {d} must be finite and >= 0")));
            }
            self.prefix_override.insert(k, d);
        }
        Ok(self)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn d_plus(&self) -> f64 {
        self.d_plus
    }

    pub fn d_minus(&self) -> f64 {
        self.d_minus
    }

    pub fn overrides(&self) -> &BTreeMap<i64, f64> {
        &self.prefix_override
    }

    pub fn is_homogeneous(&self) -> bool {
        self.prefix_override.is_empty()
    }

    /// Same weights without overrides.
    pub fn homogeneous(&self) -> Self {
        Self { prefix_override: BTreeMap::new(), ..self.clone() }
    }

    /// `d_k`: the override if present, else `d(sgn k) |k|^{-p}` with `d_0 = 0`.
    pub fn weight_at(&self, k: i64) -> f64 {
        if let Some(d) = self.prefix_override.get(&k) {
            return *d;
        }
        if k == 0 {
            return 0.0;
        }
        let side = if k > 0 { self.d_plus } else { self.d_minus };
        side * power_decay(k.unsigned_abs(), self.p)
    }
}

/// `n^{-p}`, using exact reciprocal powers when `p` is an integer.
fn power_decay(n: u64, p: f64) -> f64 {
    let x = n as f64;
    if p.fract() == 0.0 && p <= 64.0 {
        1.0 / x.powi(p as i32)
    } else {
        x.powf(-p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homogeneous_examples() {
        let w = WeightSequence::symmetric(1.0).unwrap();
        assert_eq!(w.weight_at(0), 0.0);
        assert_eq!(w.weight_at(-3), 1.0 / 3.0);
        let one_sided = WeightSequence::new(2.0, 1.0, 0.0).unwrap();
        assert_eq!(one_sided.weight_at(2), 0.25);
        assert_eq!(one_sided.weight_at(-2), 0.0);
    }

    #[test]
    fn overrides_take_precedence() {
        let w = WeightSequence::symmetric(1.5)
            .unwrap()
            .with_overrides([(0, 2.0), (5, 0.0)])
            .unwrap();
        assert_eq!(w.weight_at(0), 2.0);
        assert_eq!(w.weight_at(5), 0.0);
        assert_eq!(w.weight_at(4), 4f64.powf(-1.5));
        assert!(!w.is_homogeneous());
        assert!(w.homogeneous().is_homogeneous());
    }

    #[test]
    fn invalid_weights_are_rejected() {
        assert!(WeightSequence::new(0.5, 1.0, 1.0).is_err());
        assert!(WeightSequence::new(0.4, 1.0, 1.0).is_err());
        assert!(WeightSequence::new(1.0, 0.0, 0.0).is_err());
        assert!(WeightSequence::new(1.0, -1.0, 1.0).is_err());
        let w = WeightSequence::symmetric(1.0).unwrap();
        assert!(w.with_overrides([(1, -0.5)]).is_err());
    }

    #[test]
    fn symmetric_weights_are_even() {
        let w = WeightSequence::new(0.75, 1.3, 1.3).unwrap();
        for k in 1..200 {
            assert_eq!(w.weight_at(k), w.weight_at(-k));
        }
    }
}
