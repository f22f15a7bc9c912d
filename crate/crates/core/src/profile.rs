//! Scalar profiles on an interval and separable space-time fields built from them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("tabulated profile needs at least two samples and matching lengths")]
    TableShape,
    #[error("tabulated abscissae must be strictly increasing")]
    TableOrder,
    #[error("profile contains non-finite parameters")]
    NonFinite,
}

/// A scalar function of one variable with analytic first and second derivatives where available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    /// `Σ coeffs[k] x^k`
    Polynomial {
        coeffs: Vec<f64>,
    },
    /// `amplitude · sin(frequency · x + phase)`
    Sine {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Piecewise linear through the samples, constant beyond the ends.
    Tabulated {
        x: Vec<f64>,
        values: Vec<f64>,
    },
}

impl Profile {
    pub fn validate(&self) -> Result<(), ProfileError> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Profile::Zero => Ok(()),
            Profile::Constant { value } if value.is_finite() => Ok(()),
            Profile::Polynomial { coeffs } if finite(coeffs) => Ok(()),
            Profile::Sine {
                amplitude,
                frequency,
                phase,
            } if finite(&[*amplitude, *frequency, *phase]) => Ok(()),
            Profile::Tabulated { x, values } => {
                if x.len() < 2 || x.len() != values.len() {
                    return Err(ProfileError::TableShape);
                }
                if !finite(x) || !finite(values) {
                    return Err(ProfileError::NonFinite);
                }
                if x.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(ProfileError::TableOrder);
                }
                Ok(())
            }
            _ => Err(ProfileError::NonFinite),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Profile::Zero => true,
            Profile::Constant { value } => *value == 0.0,
            Profile::Polynomial { coeffs } => coeffs.iter().all(|c| *c == 0.0),
            Profile::Sine { amplitude, .. } => *amplitude == 0.0,
            Profile::Tabulated { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    /// Derivative of order `k ∈ {0, 1, 2}`.
    pub fn derivative(&self, k: usize, x: f64) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Constant { value } => {
                if k == 0 {
                    *value
                } else {
                    0.0
                }
            }
            Profile::Polynomial { coeffs } => {
                // Horner on the k-th derivative's coefficients
                coeffs.iter().enumerate().skip(k).rev().fold(0.0, |acc, (p, &c)| {
                    let factor: f64 = (0..k).map(|j| (p - j) as f64).product();
                    acc * x + c * factor
                })
            }
            Profile::Sine {
                amplitude,
                frequency,
                phase,
            } => {
                let arg = frequency * x + phase;
                match k {
                    0 => amplitude * arg.sin(),
                    1 => amplitude * frequency * arg.cos(),
                    _ => -amplitude * frequency * frequency * arg.sin(),
                }
            }
            Profile::Tabulated { x: xs, values } => {
                let n = xs.len();
                if x <= xs[0] || x >= xs[n - 1] {
                    return if k == 0 {
                        if x <= xs[0] {
                            values[0]
                        } else {
                            values[n - 1]
                        }
                    } else {
                        0.0
                    };
                }
                let i = xs.partition_point(|&v| v <= x) - 1;
                let slope = (values[i + 1] - values[i]) / (xs[i + 1] - xs[i]);
                match k {
                    0 => values[i] + slope * (x - xs[i]),
                    1 => slope,
                    _ => 0.0,
                }
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(0, x)
    }
}

/// `space(x) · time(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceTimeField {
    #[serde(default)]
    pub space: Profile,
    #[serde(default = "unit_time")]
    pub time: Profile,
}

fn unit_time() -> Profile {
    Profile::Constant { value: 1.0 }
}

impl Default for SpaceTimeField {
    fn default() -> Self {
        Self {
            space: Profile::Zero,
            time: unit_time(),
        }
    }
}

impl SpaceTimeField {
    pub fn stationary(space: Profile) -> Self {
        Self {
            space,
            time: unit_time(),
        }
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        self.space.value(x) * self.time.value(t)
    }

    pub fn is_zero(&self) -> bool {
        self.space.is_zero() || self.time.is_zero()
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        self.space.validate()?;
        self.time.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivatives() {
        // x²(1−x)² = x² − 2x³ + x⁴
        let p = Profile::Polynomial {
            coeffs: vec![0.0, 0.0, 1.0, -2.0, 1.0],
        };
        let x = 0.3;
        assert!((p.value(x) - x * x * (1.0 - x) * (1.0 - x)).abs() < 1e-15);
        assert!((p.derivative(1, x) - 2.0 * x * (1.0 - x) * (1.0 - 2.0 * x)).abs() < 1e-15);
        assert!((p.derivative(2, x) - (2.0 - 12.0 * x + 12.0 * x * x)).abs() < 1e-14);
    }

    #[test]
    fn tabulated_interpolates_and_clamps() {
        let p = Profile::Tabulated {
            x: vec![0.0, 1.0, 2.0],
            values: vec![0.0, 2.0, 0.0],
        };
        p.validate().unwrap();
        assert_eq!(p.value(0.5), 1.0);
        assert_eq!(p.derivative(1, 1.5), -2.0);
        assert_eq!(p.value(-1.0), 0.0);
        assert_eq!(p.value(3.0), 0.0);
        let bad = Profile::Tabulated {
            x: vec![0.0, 0.0],
            values: vec![1.0, 2.0],
        };
        assert_eq!(bad.validate(), Err(ProfileError::TableOrder));
    }

    #[test]
    fn parses_tagged_json() {
        let f: SpaceTimeField =
            serde_json::from_str(r#"{"space": {"kind": "sine", "amplitude": 2, "frequency": 3}}"#).unwrap();
        assert_eq!(f.time, Profile::Constant { value: 1.0 });
        assert!((f.value(0.0, 0.1) - 2.0 * 0.3f64.sin()).abs() < 1e-15);
        assert!(serde_json::from_str::<Profile>(r#"{"kind": "constant", "value": 1, "extra": 2}"#).is_err());
    }
}
