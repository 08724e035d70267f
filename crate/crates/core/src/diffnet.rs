//! Differential network from two independently fitted samples.
//!
//! Each sample gets its own sampler chain (for the precision estimate and
//! `ρ̃`) plus Wishart posterior summaries (`E_h` with the ε prior, `E_g`
//! with the identity prior) that drive the edge rules.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{summarize_chain, GibbsConfig};
use crate::graph::AdjacencyMatrix;
use crate::matrix::{DataMatrix, SymMatrix};
use crate::wishart::{
    posterior_partial_corr_mean, ratio_scores, WishartSpec, DEFAULT_DRAWS, DEFAULT_EPSILON,
};

/// How the two per-sample edge decisions combine into the DN graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombineMode {
    /// Edge iff the two estimates differ once each is zeroed wherever its
    /// own rule does not fire, i.e. the support of the difference of the
    /// thresholded estimates.
    #[default]
    Thresholded,
    /// Edge iff the two scores differ by more than η.
    Difference,
    /// Edge iff exactly one sample's rule fires.
    Xor,
}

impl CombineMode {
    pub const ALL: [CombineMode; 3] = [
        CombineMode::Thresholded,
        CombineMode::Difference, CombineMode::Xor];

    pub fn name(self) -> &'static str {
        match self {
            CombineMode::Thresholded => "thresholded",
            CombineMode::Difference => "difference",
            CombineMode::Xor => "xor",
        }
    }
}

impl fmt::Display for CombineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CombineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CombineMode::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown combine mode '{s}'")))
    }
}

/// Which per-sample statistic the edge rule thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeRule {
    /// `|E_h(ρij | Y)|`.
    #[default]
    Mean,
    /// `|ρ̃ij| / |E_g(ρij | Y)|`.
    Ratio,
}

impl EdgeRule {
    pub const ALL: [EdgeRule; 2] = [EdgeRule::Mean, EdgeRule::Ratio];

    pub fn name(self) -> &'static str {
        match self {
            EdgeRule::Mean => "mean",
            EdgeRule::Ratio => "ratio",
        }
    }
}

impl fmt::Display for EdgeRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EdgeRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EdgeRule::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown edge rule '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiffnetConfig {
    pub gibbs: GibbsConfig,
    pub epsilon: f64,
    pub wishart_draws: usize,
    pub mode: CombineMode,
    pub rule: EdgeRule,
}

impl Default for DiffnetConfig {
    fn default() -> Self {
        DiffnetConfig {
            gibbs: GibbsConfig::default(),
            epsilon: DEFAULT_EPSILON,
            wishart_draws: DEFAULT_DRAWS,
            mode: CombineMode::default(),
            rule: EdgeRule::default(),
        }
    }
}

impl DiffnetConfig {
    pub fn validate(&self) -> Result<()> {
        self.gibbs.validate()?;
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if self.wishart_draws == 0 {
            return Err(Error::InvalidParameter("wishart_draws must be >= 1".into()));
        }
        Ok(())
    }
}

/// Posterior summaries for one sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentFit {
    pub n: usize,
    /// Sampler posterior mean of `Θ`.
    pub precision_mean: SymMatrix,
    /// Sampler posterior mean of the partial correlations, `ρ̃`.
    pub partial_mean: SymMatrix,
    /// `E_h(ρ | Y)` under `W(3 + n, (S + εI)⁻¹)`.
    pub eh: SymMatrix,
    /// `E_g(ρ | Y)` under `W(3 + n, (S + I)⁻¹)`.
    pub eg: SymMatrix,
}

impl ComponentFit {
    /// Per-entry statistic the chosen rule compares against η.
    pub fn scores(&self, rule: EdgeRule) -> SymMatrix {
        match rule {
            EdgeRule::Mean => self.eh.map(f64::abs),
            EdgeRule::Ratio => ratio_scores(&self.partial_mean, &self.eg).expect("same dimension"),
        }
    }
}

/// Fits one sample with the given chain seed.
pub fn fit_component(x: &DataMatrix, cfg: &DiffnetConfig, seed: u64) -> Result<ComponentFit> {
    if x.nrows() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 observations, got {}",
            x.nrows()
        )));
    }
    let scatter = x.scatter();
    let n = x.nrows();
    let gibbs = GibbsConfig {
        seed,
        ..cfg.gibbs.clone()
    };
    let chain = summarize_chain(&scatter, n, &gibbs)?;
    let h = WishartSpec::posterior(&scatter, n, cfg.epsilon)?;
    let g = WishartSpec::posterior(&scatter, n, 1.0)?;
    Ok(ComponentFit {
        n,
        precision_mean: chain.precision_mean,
        partial_mean: chain.partial_mean,
        eh: posterior_partial_corr_mean(&h, cfg.wishart_draws, seed)?,
        eg: posterior_partial_corr_mean(&g, cfg.wishart_draws, seed)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferentialNetwork {
    /// Second precision estimate minus the first.
    pub delta_hat: SymMatrix,
    pub components: [ComponentFit; 2],
    pub adjacency: AdjacencyMatrix,
    pub eta: f64,
    pub mode: CombineMode,
    pub rule: EdgeRule,
}

impl DifferentialNetwork {
    pub fn from_components(
        first: ComponentFit,
        second: ComponentFit,
        eta: f64,
        mode: CombineMode,
        rule: EdgeRule,
    ) -> Result<Self> {
        let delta_hat = second.precision_mean.sub(&first.precision_mean)?;
        let adjacency = component_adjacency(&first, &second, eta, mode, rule)?;
        Ok(DifferentialNetwork {
            delta_hat,
            components: [first, second],
            adjacency,
            eta,
            mode,
            rule,
        })
    }

    /// Graph at another threshold, reusing the fitted components.
    pub fn adjacency_at(&self, eta: f64, mode: CombineMode, rule: EdgeRule) -> AdjacencyMatrix {
        let [a, b] = &self.components;
        component_adjacency(a, b, eta, mode, rule).expect("same dimension")
    }
}

fn component_adjacency(
    a: &ComponentFit,
    b: &ComponentFit,
    eta: f64,
    mode: CombineMode,
    rule: EdgeRule,
) -> Result<AdjacencyMatrix> {
    dn_adjacency(
        [&a.scores(rule), &b.scores(rule)],
        [&a.precision_mean, &b.precision_mean],
        eta,
        mode,
    )
}

/// Fits both samples (chain seeds `seed` and `seed + 1`) and assembles the DN.
pub fn estimate_bnet(
    x1: &DataMatrix,
    x2: &DataMatrix,
    cfg: &DiffnetConfig,
    eta: f64,
) -> Result<DifferentialNetwork> {
    estimate_bnet_seeded(x1, x2, cfg, eta, [cfg.gibbs.seed, cfg.gibbs.seed.wrapping_add(1)])
}

/// As [`estimate_bnet`] with an explicit seed per sample.
pub fn estimate_bnet_seeded(
    x1: &DataMatrix,
    x2: &DataMatrix,
    cfg: &DiffnetConfig,
    eta: f64,
    seeds: [u64; 2],
) -> Result<DifferentialNetwork> {
    cfg.validate()?;
    if x1.ncols() != x2.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x1.ncols(),
            got: x2.ncols(),
        });
    }
    let (a, b) = rayon::join(
        || fit_component(x1, cfg, seeds[0]),
        || fit_component(x2, cfg, seeds[1]),
    );
    DifferentialNetwork::from_components(
        a.map_err(|e| e.context("first sample"))?,
        b.map_err(|e| e.context("second sample"))?,
        eta,
        cfg.mode,
        cfg.rule,
    )
}

/// Combines per-sample scores (compared against η) and precision estimates
/// into one graph.
pub fn dn_adjacency(
    scores: [&SymMatrix; 2],
    estimates: [&SymMatrix; 2],
    eta: f64,
    mode: CombineMode,
) -> Result<AdjacencyMatrix> {
    let p = scores[0].dim();
    for m in [scores[1], estimates[0], estimates[1]] {
        m.check_dim(p)?;
    }
    Ok(AdjacencyMatrix::from_fn(p, |i, j| {
        let (a, b) = (scores[0].get(i, j), scores[1].get(i, j));
        let (fa, fb) = (a.abs() > eta, b.abs() > eta);
        match mode {
            CombineMode::Thresholded => {
                let kept = |fire: bool, m: &SymMatrix| if fire { m.get(i, j) } else { 0.0 };
                kept(fa, estimates[0]) != kept(fb, estimates[1])
            }
            CombineMode::Difference => (b - a).abs() > eta,
            CombineMode::Xor => fa != fb,
        }
    }))
}
