//! Sweep configuration: a TOML document with CLI flag overrides.

use serde::{Deserialize, Serialize};
use tichain::{DepthModel, Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DepthModelConfig {
    pub c: f64,
    pub p: f64,
    /// Defaults to sqrt(eta) when absent.
    pub epsilon: Option<f64>,
    pub r: u64,
}

impl Default for DepthModelConfig {
    fn default() -> Self {
        DepthModelConfig {
            c: 1.0,
            p: 1.0,
            epsilon: None,
            r: 2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub seed: u64,
    pub eta: f64,
    /// Relative eigenvalue threshold for Gram ranks.
    pub tolerance: f64,
    /// Overrides the per-operation default sample count when set.
    pub samples: Option<usize>,
    /// Ring lengths for the desk-scale grids.
    pub n_values: Vec<u64>,
    pub q_values: Vec<u64>,
    /// Circuit depths.
    pub d_values: Vec<u64>,
    /// MPS bond dimensions.
    pub d_bond_values: Vec<u64>,
    /// Ring lengths for the asymptotic min-depth / min-time sweeps.
    pub scaling_n: Vec<u64>,
    /// Seeded instances per cut-verify grid cell.
    pub cut_instances: usize,
    /// Random operators per correlations grid cell.
    pub correlation_ops: usize,
    pub depth_model: DepthModelConfig,
    /// Cap exponent: cells with q^n > 2^cap_qn are refused.
    pub cap_qn: u32,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            seed: 1,
            eta: 0.5,
            tolerance: 1e-8,
            samples: None,
            n_values: vec![3, 4, 5, 6, 7, 8],
            q_values: vec![2],
            d_values: vec![1, 2, 3],
            d_bond_values: vec![1, 2, 3],
            scaling_n: (8..=16).map(|k| 1u64 << k).collect(),
            cut_instances: 7,
            correlation_ops: 8,
            depth_model: DepthModelConfig::default(),
            cap_qn: 20,
        }
    }
}

impl SweepConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Domain(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: SweepConfig =
            toml::from_str(&text).map_err(|e| Error::Domain(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) || self.eta <= 0.0 {
            return Err(Error::Domain(format!("eta = {} outside (0, 1]", self.eta)));
        }
        if self.tolerance <= 0.0 || self.tolerance >= 1.0 {
            return Err(Error::Domain(format!(
                "tolerance = {} outside (0, 1)",
                self.tolerance
            )));
        }
        if self.n_values.is_empty() || self.q_values.is_empty() {
            return Err(Error::Domain("empty sweep grid".into()));
        }
        if self.n_values.iter().any(|&n| n == 0) || self.q_values.iter().any(|&q| q < 2) {
            return Err(Error::Domain("grid needs n >= 1 and q >= 2".into()));
        }
        if self.d_bond_values.iter().any(|&d| d == 0) {
            return Err(Error::Domain("bond dimensions must be >= 1".into()));
        }
        if self.cut_instances == 0 || self.correlation_ops == 0 {
            return Err(Error::Domain("instance counts must be >= 1".into()));
        }
        self.model()?;
        Ok(())
    }

    /// The depth model with epsilon defaulted from eta.
    pub fn model(&self) -> Result<DepthModel> {
        let eps = self
            .depth_model
            .epsilon
            .unwrap_or_else(|| self.eta.sqrt().min(0.999_999));
        DepthModel::new(self.depth_model.c, self.depth_model.p, eps, self.depth_model.r)
    }

    /// Refuses cells beyond the configured dense cap.
    pub fn check_cap(&self, n: u64, q: u64) -> Result<()> {
        let bits = n as f64 * (q as f64).log2();
        if bits > self.cap_qn as f64 {
            return Err(Error::Resource(format!(
                "q^n = {q}^{n} exceeds the configured cap 2^{}",
                self.cap_qn
            )));
        }
        Ok(())
    }
}
