//! Block Gibbs sampler for the Bayesian adaptive graphical lasso.
//!
//! Each sweep updates every row/column of the precision matrix in turn from
//! its gamma–normal conditional, then redraws the per-entry penalties
//! `λij ~ GA(1 + r, |θij| + s)` and the latent scales `1/τij ~ IG(λij/|θij|, λij²)`.
//!
//! The state keeps `Σ = Θ⁻¹` alongside `Θ`, so the inverse of the leading
//! block for a column costs O(p²) instead of a fresh factorization. `Σ` is
//! recomputed from `Θ` after every sweep, which doubles as the PD check.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{cholesky_pd, invert_pd, others, partial_correlation_unchecked, SymMatrix};
use crate::variates::{sample_gamma, sample_inverse_gaussian, std_normal};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GibbsConfig {
    pub burn_in: usize,
    pub retained: usize,
    /// Gamma shape of the `λij` hyperprior.
    pub r: f64,
    /// Gamma rate of the `λij` hyperprior.
    pub s: f64,
    pub lambda_diag: f64,
    pub seed: u64,
    /// Lower bound on `|θij|` when forming the inverse Gaussian mean.
    pub theta_floor: f64,
    /// Holds every off-diagonal penalty at this value instead of resampling
    /// it, which gives the non-adaptive Bayesian graphical lasso.
    pub fixed_lambda: Option<f64>,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig {
            burn_in: 5000,
            retained: 10000,
            r: 1e-2,
            s: 1e-6,
            lambda_diag: 1.0,
            seed: 0,
            theta_floor: 1e-12,
            fixed_lambda: None,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("r", self.r),
            ("s", self.s),
            ("lambda_diag", self.lambda_diag),
            ("theta_floor", self.theta_floor),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.retained == 0 {
            return Err(Error::InvalidParameter("retained must be >= 1".into()));
        }
        if let Some(l) = self.fixed_lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "fixed_lambda must be > 0, got {l}"
                )));
            }
        }
        Ok(())
    }

    pub fn total_sweeps(&self) -> usize {
        self.burn_in + self.retained
    }
}

#[derive(Debug, Clone)]
pub struct SamplerState {
    pub theta: SymMatrix,
    /// Cached `Θ⁻¹`, kept in step with `theta` by every column update.
    sigma: SymMatrix,
    /// Latent scales; the diagonal is unused and kept at zero.
    pub tau: SymMatrix,
    /// Penalties; the diagonal holds `lambda_diag`.
    pub lambda: SymMatrix,
    pub scatter: SymMatrix,
    pub n: usize,
}

impl SamplerState {
    /// Starts from `Θ = I`, `τij = 1`, `λij = 1`.
    pub fn new(scatter: SymMatrix, n: usize, cfg: &GibbsConfig) -> Result<Self> {
        let p = scatter.dim();
        if p < 2 {
            return Err(Error::InvalidParameter("need at least two variables".into()));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("sample count must be >= 1".into()));
        }
        if scatter.diag().iter().any(|&d| !(d >= 0.0)) {
            return Err(Error::InvalidParameter(
                "scatter matrix has a negative or NaN diagonal".into(),
            ));
        }
        let init_lambda = cfg.fixed_lambda.unwrap_or(1.0);
        Ok(SamplerState {
            theta: SymMatrix::identity(p),
            sigma: SymMatrix::identity(p),
            tau: SymMatrix::from_fn(p, |i, j| if i == j { 0.0 } else { 1.0 }),
            lambda: SymMatrix::from_fn(p, |i, j| if i == j { cfg.lambda_diag } else { init_lambda }),
            scatter,
            n,
        })
    }

    pub fn dim(&self) -> usize {
        self.theta.dim()
    }

    /// Recomputes the cached covariance from `theta`. Fails when `theta`
    /// has lost positive definiteness.
    pub fn refresh(&mut self) -> Result<()> {
        self.sigma = invert_pd(&self.theta)?;
        Ok(())
    }

    pub fn sigma(&self) -> &SymMatrix {
        &self.sigma
    }

    /// Draws row/column `col` of `Θ` given everything else.
    ///
    /// With `Θ₁₁` the block without `col`, the update is
    /// `γ ~ GA(n/2 + 1, (s22 + λ)/2)`, `β ~ N(−C s12, C)` with
    /// `C = {(s22 + λ) Θ₁₁⁻¹ + D_τ⁻¹}⁻¹`, then `θ12 = β` and
    /// `θ22 = γ + βᵀ Θ₁₁⁻¹ β`.
    pub fn update_column<R: rand::Rng + ?Sized>(
        &mut self,
        col: usize,
        lambda_diag: f64,
        rng: &mut R,
    ) -> Result<()> {
        let p = self.dim();
        if col >= p {
            return Err(Error::IndexOutOfRange { index: col, dim: p });
        }
        let idx: Vec<usize> = others(p, col).collect();
        let m = p - 1;

        // Θ₁₁⁻¹ = Σ₁₁ − σ12 σ21 / σ22
        let s22_cov = self.sigma.get(col, col);
        let sig12: Vec<f64> = idx.iter().map(|&k| self.sigma.get(k, col)).collect();
        let theta11_inv = SymMatrix::from_fn(m, |a, b| {
            self.sigma.get(idx[a], idx[b]) - sig12[a] * sig12[b] / s22_cov
        });

        let s12: Vec<f64> = idx.iter().map(|&k| self.scatter.get(k, col)).collect();
        let s22 = self.scatter.get(col, col);
        let shrink = s22 + lambda_diag;

        // C⁻¹ = shrink · Θ₁₁⁻¹ + D_τ⁻¹. Its diagonal can span many orders of
        // magnitude once some τij collapse, so factor K = D^{-1/2} C⁻¹ D^{-1/2}
        // (unit diagonal) instead.
        let mut c_inv = theta11_inv.scale(shrink);
        for (a, &k) in idx.iter().enumerate() {
            let t = self.tau.get(k, col);
            c_inv.set(a, a, c_inv.get(a, a) + 1.0 / t);
        }
        let d: Vec<f64> = c_inv.diag().iter().map(|x| x.sqrt()).collect();
        let k = SymMatrix::from_fn(m, |a, b| c_inv.get(a, b) / (d[a] * d[b]));
        let chol = cholesky_pd(&k)?;

        // C = D^{-1/2} K⁻¹ D^{-1/2}; β = −C s12 + D^{-1/2} L⁻ᵀ z.
        let scaled: Vec<f64> = s12.iter().zip(&d).map(|(s, di)| s / di).collect();
        let mut beta = chol.solve(&scaled);
        let mut z: Vec<f64> = (0..m).map(|_| std_normal(rng)).collect();
        chol.backward_solve(&mut z);
        for ((b, zi), di) in beta.iter_mut().zip(&z).zip(&d) {
            *b = (zi - *b) / di;
        }

        let gamma = sample_gamma(self.n as f64 / 2.0 + 1.0, shrink / 2.0, rng)?;

        let w = theta11_inv.mat_vec(&beta);
        let quad: f64 = w.iter().zip(&beta).map(|(a, b)| a * b).sum();

        for (a, &k) in idx.iter().enumerate() {
            self.theta.set(k, col, beta[a]);
        }
        self.theta.set(col, col, gamma + quad);

        // Block inverse of the updated Θ.
        for a in 0..m {
            for b in a..m {
                self.sigma
                    .set(idx[a], idx[b], theta11_inv.get(a, b) + w[a] * w[b] / gamma);
            }
            self.sigma.set(idx[a], col, -w[a] / gamma);
        }
        self.sigma.set(col, col, 1.0 / gamma);
        Ok(())
    }

    /// Redraws `λij` (unless fixed) and then `τij` for every pair `i < j`.
    pub fn update_hyperparameters<R: rand::Rng + ?Sized>(
        &mut self,
        cfg: &GibbsConfig,
        rng: &mut R,
    ) -> Result<()> {
        let p = self.dim();
        for i in 0..p {
            for j in (i + 1)..p {
                let abs_theta = self.theta.get(i, j).abs();
                let lam = match cfg.fixed_lambda {
                    Some(l) => l,
                    None => sample_gamma(1.0 + cfg.r, abs_theta + cfg.s, rng)?,
                };
                let mu = lam / abs_theta.max(cfg.theta_floor);
                let delta = sample_inverse_gaussian(mu, lam * lam, rng)?;
                self.lambda.set(i, j, lam);
                self.tau.set(i, j, 1.0 / delta);
            }
        }
        Ok(())
    }

    /// One full sweep: every column in order, then the hyperparameters.
    pub fn sweep<R: rand::Rng + ?Sized>(&mut self, cfg: &GibbsConfig, rng: &mut R) -> Result<()> {
        for col in 0..self.dim() {
            self.update_column(col, cfg.lambda_diag, rng)?;
        }
        self.update_hyperparameters(cfg, rng)?;
        self.refresh()
    }
}

/// Retained posterior draws of `Θ`.
#[derive(Debug, Clone)]
pub struct GibbsChain {
    pub draws: Vec<SymMatrix>,
    pub config: GibbsConfig,
}

impl GibbsChain {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn posterior_mean(&self) -> Result<SymMatrix> {
        posterior_mean(&self.draws)
    }

    /// Posterior mean of the partial correlation matrix over the draws.
    pub fn partial_correlation_mean(&self) -> Result<SymMatrix> {
        let partials: Vec<SymMatrix> = self
            .draws
            .iter()
            .map(partial_correlation_unchecked)
            .collect();
        posterior_mean(&partials)
    }
}

/// Entrywise average of the draws.
pub fn posterior_mean(draws: &[SymMatrix]) -> Result<SymMatrix> {
    let first = draws.first().ok_or(Error::Empty("chain has no draws"))?;
    let mut acc = SymMatrix::zeros(first.dim());
    for d in draws {
        acc = acc.add(d)?;
    }
    Ok(acc.scale(1.0 / draws.len() as f64))
}

pub fn run_chain(scatter: &SymMatrix, n: usize, cfg: &GibbsConfig) -> Result<GibbsChain> {
    run_chain_observed(scatter, n, cfg, |_, _| {})
}

/// Like [`run_chain`], calling `observe(sweep, state)` after every sweep
/// (burn-in included, zero-based).
pub fn run_chain_observed(
    scatter: &SymMatrix,
    n: usize,
    cfg: &GibbsConfig,
    mut observe: impl FnMut(usize, &SamplerState),
) -> Result<GibbsChain> {
    let mut draws = Vec::with_capacity(cfg.retained);
    drive(scatter, n, cfg, |sweep, state| {
        observe(sweep, state);
        if sweep >= cfg.burn_in {
            draws.push(state.theta.clone());
        }
    })?;
    Ok(GibbsChain {
        draws,
        config: cfg.clone(),
    })
}

/// Running posterior means, for chains too long to keep every draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSummary {
    pub precision_mean: SymMatrix,
    pub partial_mean: SymMatrix,
    pub retained: usize,
}

/// Runs a chain keeping only the posterior means of `Θ` and of its partial
/// correlations. Matches [`GibbsChain::posterior_mean`] and
/// [`GibbsChain::partial_correlation_mean`] of the equivalent full chain.
pub fn summarize_chain(scatter: &SymMatrix, n: usize, cfg: &GibbsConfig) -> Result<ChainSummary> {
    let p = scatter.dim();
    let mut theta_sum = SymMatrix::zeros(p);
    let mut partial_sum = SymMatrix::zeros(p);
    drive(scatter, n, cfg, |sweep, state| {
        if sweep >= cfg.burn_in {
            theta_sum = theta_sum.add(&state.theta).expect("same dimension");
            partial_sum = partial_sum
                .add(&partial_correlation_unchecked(&state.theta))
                .expect("same dimension");
        }
    })?;
    let k = 1.0 / cfg.retained as f64;
    Ok(ChainSummary {
        precision_mean: theta_sum.scale(k),
        partial_mean: partial_sum.scale(k),
        retained: cfg.retained,
    })
}

fn drive(
    scatter: &SymMatrix,
    n: usize,
    cfg: &GibbsConfig,
    mut each: impl FnMut(usize, &SamplerState),
) -> Result<()> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = SamplerState::new(scatter.clone(), n, cfg)?;
    for sweep in 0..cfg.total_sweeps() {
        state.sweep(cfg, &mut rng).map_err(|e| Error::Sweep {
            sweep,
            source: Box::new(e),
        })?;
        each(sweep, &state);
    }
    Ok(())
}
