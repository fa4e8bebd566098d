use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::spectral::{GridSpec, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFamily {
    /// `zeta0 = a sin(k x)`, `u0 = 0`.
    SineWave,
    /// `zeta0 = u0 = a sin(k x)`.
    TravellingSine,
    /// Periodized Gaussian of height `a` and width `width`, at rest.
    GaussianHump,
    Rest,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    #[serde(default = "default_family")]
    pub family: DataFamily,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_wavenumber")]
    pub wavenumber: u32,
    /// Width of the hump as a fraction of the domain length.
    #[serde(default = "default_width")]
    pub width: f64,
}

fn default_family() -> DataFamily {
    DataFamily::SineWave
}

fn default_amplitude() -> f64 {
    0.1
}

fn default_wavenumber() -> u32 {
    1
}

fn default_width() -> f64 {
    0.1
}

impl Default for InitialData {
    fn default() -> Self {
        Self {
            family: default_family(),
            amplitude: default_amplitude(),
            wavenumber: default_wavenumber(),
            width: default_width(),
        }
    }
}

impl InitialData {
    /// `(zeta0, u0)` on `grid`.
    pub fn fields(&self, grid: GridSpec) -> (ScalarField, ScalarField) {
        let a = self.amplitude;
        let k = 2.0 * PI * self.wavenumber as f64 / grid.domain_length;
        match self.family {
            DataFamily::SineWave => {
                (ScalarField::from_fn(grid, |x| a * (k * x).sin()), ScalarField::zeros(grid))
            }
            DataFamily::TravellingSine => {
                let f = ScalarField::from_fn(grid, |x| a * (k * x).sin());
                (f.clone(), f)
            }
            DataFamily::GaussianHump => {
                let l = grid.domain_length;
                let sigma = self.width * l;
                let hump = ScalarField::from_fn(grid, |x| {
                    (-3..=3)
                        .map(|j| {
                            let d = x - 0.5 * l + j as f64 * l;
                            (-d * d / (2.0 * sigma * sigma)).exp()
                        })
                        .sum::<f64>()
                        * a
                });
                (hump, ScalarField::zeros(grid))
            }
            DataFamily::Rest => (ScalarField::zeros(grid), ScalarField::zeros(grid)),
        }
    }
}
