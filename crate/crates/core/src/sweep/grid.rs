use serde::{Deserialize, Serialize};

use crate::config::FlatConfig;
use crate::epidemic::{EpidemicParams, PARAM_NAMES};
use crate::error::{Error, Result};
use crate::network::Threshold;

/// Candidate values for every parameter. The combination order is row-major
/// over `theta_I2, rho_A, rho_I1, q_E, q_A, q_I1, q_I2, q_EA, phi`, so `phi`
/// varies fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterGrid {
    /// One list per epidemiological parameter, in `PARAM_NAMES` order.
    pub params: [Vec<f64>; 8],
    pub phi: Vec<Threshold>,
}

impl Default for ParameterGrid {
    fn default() -> Self {
        ParameterGrid {
            params: [
                vec![0.141, 0.198, 0.240],
                vec![0.4, 0.75, 1.0],
                vec![0.18, 0.63, 2.26],
                vec![0.168, 0.182, 0.196],
                vec![0.115, 0.138, 0.169],
                vec![0.333, 0.435, 0.833],
                vec![0.063, 0.075, 0.092],
                vec![0.09, 0.18, 0.26],
            ],
            phi: vec![
                Threshold::Finite(20),
                Threshold::Finite(50),
                Threshold::Finite(100),
                Threshold::Infinite,
            ],
        }
    }
}

/// One grid point with its stable index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Combination {
    pub index: usize,
    pub params: EpidemicParams,
    pub phi: Threshold,
}

impl ParameterGrid {
    /// A grid with a single value per parameter.
    pub fn single(params: EpidemicParams, phi: Vec<Threshold>) -> Self {
        ParameterGrid {
            params: params.to_array().map(|v| vec![v]),
            phi,
        }
    }

    pub fn len(&self) -> usize {
        self.params.iter().map(Vec::len).product::<usize>() * self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        for (name, values) in PARAM_NAMES.iter().zip(&self.params) {
            if values.is_empty() {
                return Err(Error::config(*name, "needs at least one value"));
            }
        }
        if self.phi.is_empty() {
            return Err(Error::config("phi", "needs at least one value"));
        }
        for &phi in &self.phi {
            if let Threshold::Finite(p) = phi {
                if p <= 1 {
                    return Err(Error::config("phi", format!("threshold must exceed 1, got {p}")));
                }
            }
        }
        Ok(())
    }

    /// The `index`-th combination in row-major order.
    pub fn combination(&self, index: usize) -> Combination {
        assert!(index < self.len(), "combination {index} out of range");
        let mut rest = index;
        let phi = self.phi[rest % self.phi.len()];
        rest /= self.phi.len();
        let mut v = [0.0; 8];
        for k in (0..8).rev() {
            let list = &self.params[k];
            v[k] = list[rest % list.len()];
            rest /= list.len();
        }
        Combination {
            index,
            params: EpidemicParams::from_array(v),
            phi,
        }
    }

    /// Override lists from a flat config; keys are the parameter names and
    /// `phi`, each a comma-separated list. Other keys are ignored.
    pub fn apply_flat(&mut self, cfg: &FlatConfig) -> Result<()> {
        for (k, name) in PARAM_NAMES.iter().enumerate() {
            if let Some(values) = cfg.list::<f64>(name)? {
                self.params[k] = values;
            }
        }
        if let Some(phi) = cfg.list::<Threshold>("phi")? {
            self.phi = phi;
        }
        self.validate()
    }

    pub fn to_flat_string(&self) -> String {
        let join = |v: &[String]| v.join(", ");
        let mut out = String::new();
        for (name, values) in PARAM_NAMES.iter().zip(&self.params) {
            let items: Vec<String> = values.iter().map(f64::to_string).collect();
            out.push_str(&format!("{name} = {}\n", join(&items)));
        }
        let items: Vec<String> = self.phi.iter().map(Threshold::to_string).collect();
        out.push_str(&format!("phi = {}\n", join(&items)));
        out
    }
}

/// All combinations in row-major order.
pub fn build_grid(grid: &ParameterGrid) -> Result<Vec<Combination>> {
    grid.validate()?;
    Ok((0..grid.len()).map(|i| grid.combination(i)).collect())
}
