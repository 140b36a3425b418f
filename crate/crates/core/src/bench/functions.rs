use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The twelve regression test functions on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestFunction {
    Step,
    Wave,
    Blip,
    Blocks,
    Bumps,
    Heavisine,
    Doppler,
    Angles,
    Parabolas,
    Tshsine,
    Spikes,
    Corner,
}

const KNOTS: [f64; 11] = [0.1, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81];
const BLOCKS_HEIGHTS: [f64; 11] = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2];
const BUMPS_HEIGHTS: [f64; 11] = [4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2];
const BUMPS_WIDTHS: [f64; 11] = [
    0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005,
];

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn ramp2(u: f64) -> f64 {
    if u >= 0.0 {
        u * u
    } else {
        0.0
    }
}

impl TestFunction {
    pub const ALL: [TestFunction; 12] = [
        TestFunction::Step,
        TestFunction::Wave,
        TestFunction::Blip,
        TestFunction::Blocks,
        TestFunction::Bumps,
        TestFunction::Heavisine,
        TestFunction::Doppler,
        TestFunction::Angles,
        TestFunction::Parabolas,
        TestFunction::Tshsine,
        TestFunction::Spikes,
        TestFunction::Corner,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::Step => "step",
            TestFunction::Wave => "wave",
            TestFunction::Blip => "blip",
            TestFunction::Blocks => "blocks",
            TestFunction::Bumps => "bumps",
            TestFunction::Heavisine => "heavisine",
            TestFunction::Doppler => "doppler",
            TestFunction::Angles => "angles",
            TestFunction::Parabolas => "parabolas",
            TestFunction::Tshsine => "tshsine",
            TestFunction::Spikes => "spikes",
            TestFunction::Corner => "corner",
        }
    }

    pub fn valid_names() -> String {
        Self::ALL.iter().map(|f| f.name()).collect::<Vec<_>>().join(", ")
    }

    /// Value at `x`; callers guarantee `x` in `[0, 1]`.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunction::Step => {
                if (1.0 / 3.0..=0.75).contains(&x) {
                    0.8
                } else {
                    0.2
                }
            }
            TestFunction::Wave => 0.5 + 0.2 * (4.0 * PI * x).cos() + 0.1 * (24.0 * PI * x).cos(),
            TestFunction::Blip => {
                if x <= 0.8 {
                    0.32 + 0.6 * x + 0.3 * (-100.0 * (x - 0.3).powi(2)).exp()
                } else {
                    -0.28 + 0.6 * x + 0.3 * (-100.0 * (x - 1.3).powi(2)).exp()
                }
            }
            TestFunction::Blocks => {
                let s: f64 = KNOTS
                    .iter()
                    .zip(BLOCKS_HEIGHTS)
                    .map(|(k, h)| h * (1.0 + sgn(x - k)) / 2.0)
                    .sum();
                (s + 2.0) / 5.0
            }
            TestFunction::Bumps => {
                let s: f64 = KNOTS
                    .iter()
                    .zip(BUMPS_HEIGHTS.iter().zip(BUMPS_WIDTHS))
                    .map(|(k, (h, w))| h * (1.0 + ((x - k) / w).abs()).powi(-4))
                    .sum();
                s / 5.0
            }
            TestFunction::Heavisine => {
                (4.0 * (4.0 * PI * x).sin() - sgn(x - 0.3) - sgn(0.72 - x) + 5.0) / 10.0
            }
            TestFunction::Doppler => (x * (1.0 - x)).sqrt() * (2.1 * PI / (x + 0.05)).sin() + 0.5,
            TestFunction::Angles => {
                if x <= 0.15 {
                    2.0 * x + 0.5
                } else if x <= 0.2 {
                    -12.0 * (x - 0.15) + 0.8
                } else if x <= 0.5 {
                    0.2
                } else if x <= 0.7 {
                    6.0 * (x - 0.5) + 0.2
                } else if x <= 0.9 {
                    -5.0 * (x - 0.7) + 1.4
                } else {
                    0.4
                }
            }
            TestFunction::Parabolas => {
                0.8 - 30.0 * ramp2(x - 0.1) + 60.0 * ramp2(x - 0.2) - 30.0 * ramp2(x - 0.3)
                    + 500.0 * ramp2(x - 0.35)
                    - 1000.0 * ramp2(x - 0.37)
                    + 1000.0 * ramp2(x - 0.41)
                    - 500.0 * ramp2(x - 0.43)
                    + 7.5 * ramp2(x - 0.5)
                    - 15.0 * ramp2(x - 0.7)
                    + 7.5 * ramp2(x - 0.9)
            }
            TestFunction::Tshsine => {
                let g = |t: f64| (1.0 - (PI * t).cos()) / 2.0;
                0.3 * (3.0 * PI * (g(g(g(g(x)))) + x)).sin() + 0.5
            }
            TestFunction::Spikes => {
                (-500.0 * (x - 0.23).powi(2)).exp()
                    + 2.0 * (-2000.0 * (x - 0.33).powi(2)).exp()
                    + 4.0 * (-8000.0 * (x - 0.47).powi(2)).exp()
                    + 3.0 * (-16000.0 * (x - 0.69).powi(2)).exp()
                    + (-32000.0 * (x - 0.83).powi(2)).exp()
            }
            TestFunction::Corner => {
                if x <= 0.5 {
                    62.387 * x.powi(3) * (1.0 - 4.0 * x * x)
                } else if x <= 0.8 {
                    3.0 * (0.125 - x.powi(3)) * x.powi(4)
                } else {
                    59.443 * x * (x - 1.0).powi(3)
                }
            }
        }
    }
}


impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Self::ALL
            .iter()
            .find(|f| f.name() == lower)
            .copied()
            .ok_or_else(|| {
                Error::param(format!(
                    "unknown test function {s:?}; valid names: {}",
                    Self::valid_names()
                ))
            })
    }
}

/// Evaluates a named test function at `x` in `[0, 1]`.
pub fn eval_test_function(name: &str, x: f64) -> Result<f64> {
    let f: TestFunction = name.parse()?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::param(format!("x = {x} outside [0, 1]")));
    }
    Ok(f.eval(x))
}

/// Fixed uniform design `x_i = (i - 1/2) / n`, `i = 1..n`.
pub fn uniform_design(n: usize) -> Vec<f64> {
    (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect()
}
