//! Composition arithmetic for chaining state verification with parameter estimation.
//!
//! A verification step certifies `Pr(F(ρ, ρ*) ≥ 1 − λ) ≥ 1 − δ`. Conditioned on
//! success, an ε-secure estimation protocol run on the certified copy is
//! `(ε + √λ)`-secure; a failed verification is charged the worst case of 1.

use crate::error::{Error, Result};

/// Confidence guarantee `(λ, δ)` produced by a state verification scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerificationGuarantee {
    lambda: f64,
    delta: f64,
}

impl VerificationGuarantee {
    pub fn new(lambda: f64, delta: f64) -> Result<Self> {
        for (name, v) in [("lambda", lambda), ("delta", delta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfRange(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        Ok(Self { lambda, delta })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// A distinguishing-advantage bound ε ∈ [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityLevel {
    epsilon: f64,
    /// Value before clamping, when clamping occurred.
    clamped_from: Option<f64>,
}

impl SecurityLevel {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::OutOfRange(format!("security level {epsilon} must be finite and non-negative")));
        }
        Ok(Self::clamped(epsilon))
    }

    fn clamped(epsilon: f64) -> Self {
        if epsilon > 1.0 {
            Self { epsilon: 1.0, clamped_from: Some(epsilon) }
        } else {
            Self { epsilon, clamped_from: None }
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Warning text when the raw composition exceeded 1.
    pub fn warning(&self) -> Option<String> {
        self.clamped_from
            .map(|raw| format!("composed security level {raw} exceeds 1; clamped to 1"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifiedSecurity {
    /// `ε + √λ`, valid when verification succeeds.
    pub conditional: SecurityLevel,
    /// `(1 − δ)(ε + √λ) + δ`.
    pub overall: SecurityLevel,
}

pub fn verified_epsilon(eps: SecurityLevel, g: VerificationGuarantee) -> VerifiedSecurity {
    let conditional = eps.epsilon + g.lambda.sqrt();
    let overall = (1.0 - g.delta) * conditional + g.delta;
    VerifiedSecurity { conditional: SecurityLevel::clamped(conditional), overall: SecurityLevel::clamped(overall) }
}

/// Security of two constructions run in sequence: `ε₁ + ε₂`, clamped to 1.
pub fn sequential_epsilon(eps1: SecurityLevel, eps2: SecurityLevel) -> SecurityLevel {
    SecurityLevel::clamped(eps1.epsilon + eps2.epsilon)
}
