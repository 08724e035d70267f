//! Synthetic precision-matrix pairs for the nine benchmark structures and
//! Gaussian data generation.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::AdjacencyMatrix;
use crate::matrix::{cholesky_pd, eigenvalues_sym, DataMatrix, SymMatrix};
use crate::variates::std_normal;

pub const REPAIR_MARGIN: f64 = 0.05;
pub const SUPPORT_TOL: f64 = 1e-10;
/// Component 2 of the scale-free structure is this multiple of component 1.
pub const SCALE_FREE_FACTOR: f64 = 2.0;
pub const SCALE_FREE_WEIGHT: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureKind {
    Ar1,
    Ar2,
    Sparse80,
    Sparse40,
    ScaleFree,
    Band,
    Cluster,
    Star,
    Circle,
}

impl StructureKind {
    pub const ALL: [StructureKind; 9] = [
        StructureKind::Ar1,
        StructureKind::Ar2,
        StructureKind::Sparse80,
        StructureKind::Sparse40,
        StructureKind::ScaleFree,
        StructureKind::Band,
        StructureKind::Cluster,
        StructureKind::Star,
        StructureKind::Circle,
    ];

    /// 1-based position in the benchmark list.
    pub fn number(self) -> usize {
        Self::ALL.iter().position(|&k| k == self).unwrap() + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            StructureKind::Ar1 => "ar1",
            StructureKind::Ar2 => "ar2",
            StructureKind::Sparse80 => "sparse80",
            StructureKind::Sparse40 => "sparse40",
            StructureKind::ScaleFree => "scalefree",
            StructureKind::Band => "band",
            StructureKind::Cluster => "cluster",
            StructureKind::Star => "star",
            StructureKind::Circle => "circle",
        }
    }

    pub fn is_random(self) -> bool {
        matches!(
            self,
            StructureKind::Sparse80 | StructureKind::Sparse40 | StructureKind::ScaleFree
        )
    }
}

impl fmt::Display for StructureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StructureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        if let Ok(n) = lower.parse::<usize>() {
            if (1..=9).contains(&n) {
                return Ok(Self::ALL[n - 1]);
            }
        }
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == lower)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown structure {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureSpec {
    pub kind: StructureKind,
    pub dim: usize,
    /// Required by the random structures, ignored by the rest.
    pub seed: Option<u64>,
}

impl StructureSpec {
    pub fn new(kind: StructureKind, dim: usize) -> Self {
        StructureSpec { kind, dim, seed: None }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 4 {
            return Err(Error::InvalidParameter(format!(
                "structures need p >= 4, got {}",
                self.dim
            )));
        }
        if self.kind.is_random() && self.seed.is_none() {
            return Err(Error::InvalidParameter(format!(
                "structure {} needs a seed",
                self.kind
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ModelPair {
    pub theta1: SymMatrix,
    pub theta2: SymMatrix,
    /// `theta2 − theta1`, after any positive-definiteness repair.
    pub true_delta: SymMatrix,
    pub true_adjacency: AdjacencyMatrix,
    /// Whether each component needed a diagonal shift.
    pub repaired: [bool; 2],
}

/// Raw component matrices, exactly as specified and before any repair.
pub fn raw_components(spec: &StructureSpec) -> Result<(SymMatrix, SymMatrix)> {
    spec.validate()?;
    let p = spec.dim;
    let half = p / 2;
    let same_block = |i: usize, j: usize| (i < half) == (j < half);
    Ok(match spec.kind {
        StructureKind::Ar1 => (
            SymMatrix::from_fn(p, |i, j| 0.7f64.powi((j - i) as i32)),
            SymMatrix::from_fn(p, |i, j| 0.75f64.powi((j - i) as i32)),
        ),
        StructureKind::Ar2 => {
            let band = |d: f64, a: f64, b: f64| {
                SymMatrix::from_fn(p, move |i, j| match j - i {
                    0 => d,
                    1 => a,
                    2 => b,
                    _ => 0.0,
                })
            };
            (band(0.1, 0.05, 0.025), band(1.0, 0.5, 0.25))
        }
        StructureKind::Sparse80 => sparse_random(p, 0.8, spec.seed.unwrap()),
        StructureKind::Sparse40 => sparse_random(p, 0.4, spec.seed.unwrap()),
        StructureKind::ScaleFree => {
            // Component 2 is the whole matrix scaled, diagonal included.
            let base = scale_free(p, spec.seed.unwrap());
            let second = base.scale(SCALE_FREE_FACTOR);
            (base, second)
        }
        StructureKind::Band => {
            let blocks = |a: f64, b: f64| {
                SymMatrix::from_fn(p, move |i, j| {
                    if i == j {
                        1.0
                    } else if i < half && j < half {
                        a
                    } else if i >= half && j >= half {
                        b
                    } else {
                        0.0
                    }
                })
            };
            (blocks(0.2, 0.5), blocks(0.7, 0.9))
        }
        StructureKind::Cluster => {
            let blocks = |w: f64| {
                SymMatrix::from_fn(p, move |i, j| {
                    if i == j {
                        1.0
                    } else if same_block(i, j) {
                        w
                    } else {
                        0.0
                    }
                })
            };
            (blocks(0.5), blocks(0.9))
        }
        StructureKind::Star => {
            let star = |w: f64| {
                SymMatrix::from_fn(p, move |i, j| {
                    if i == j {
                        1.0
                    } else if i == 0 {
                        w
                    } else {
                        0.0
                    }
                })
            };
            (star(0.1), star(2.1))
        }
        StructureKind::Circle => {
            let circle = |d: f64, a: f64, corner: f64| {
                SymMatrix::from_fn(p, move |i, j| {
                    if i == j {
                        d
                    } else if j == i + 1 {
                        a
                    } else if i == 0 && j == p - 1 {
                        corner
                    } else {
                        0.0
                    }
                })
            };
            (circle(2.0, 1.0, 0.45), circle(4.0, 2.0, 0.95))
        }
    })
}

/// Both components share one support: all but `floor(frac · m)` of the
/// `m` off-diagonal pairs carry a weight uniform on `[0.2, 0.6]` with a random
/// sign; component 2 scales the weights by 1.5. Unit diagonal.
fn sparse_random(p: usize, frac: f64, seed: u64) -> (SymMatrix, SymMatrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(usize, usize)> = (0..p)
        .flat_map(|i| ((i + 1)..p).map(move |j| (i, j)))
        .collect();
    let zeroed = (frac * pairs.len() as f64).floor() as usize;
    let mut keep = vec![true; pairs.len()];
    for k in sample_indices(&mut rng, pairs.len(), zeroed) {
        keep[k] = false;
    }
    let mut c1 = SymMatrix::identity(p);
    let mut c2 = SymMatrix::identity(p);
    for (k, &(i, j)) in pairs.iter().enumerate() {
        if keep[k] {
            let mag = rng.random_range(0.2..=0.6);
            let w = if rng.random_bool(0.5) { mag } else { -mag };
            c1.set(i, j, w);
            c2.set(i, j, 1.5 * w);
        }
    }
    (c1, c2)
}

/// Preferential-attachment tree: node `k` links to one earlier node chosen
/// with probability proportional to its degree (+1 so the root can be chosen).
fn scale_free(p: usize, seed: u64) -> SymMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut degree = vec![0usize; p];
    let mut m = SymMatrix::identity(p);
    for k in 1..p {
        let total: usize = degree[..k].iter().map(|d| d + 1).sum();
        let mut pick = rng.random_range(0..total);
        let mut target = 0;
        for (t, d) in degree[..k].iter().enumerate() {
            if pick < d + 1 {
                target = t;
                break;
            }
            pick -= d + 1;
        }
        degree[k] += 1;
        degree[target] += 1;
        m.set(target, k, SCALE_FREE_WEIGHT);
    }
    m
}

/// Shifts the diagonal so the smallest eigenvalue is at least `margin`.
pub fn pd_repair(m: &SymMatrix, margin: f64) -> SymMatrix {
    let lmin = eigenvalues_sym(m)[0];
    if lmin <= margin {
        m.shift_diag(margin - lmin)
    } else {
        m.clone()
    }
}

pub fn make_structure(spec: &StructureSpec) -> Result<ModelPair> {
    let (raw1, raw2) = raw_components(spec)?;
    let theta1 = pd_repair(&raw1, REPAIR_MARGIN);
    let theta2 = pd_repair(&raw2, REPAIR_MARGIN);
    let repaired = [theta1 != raw1, theta2 != raw2];
    cholesky_pd(&theta1)?;
    cholesky_pd(&theta2)?;
    let true_delta = theta2.sub(&theta1)?;
    let true_adjacency = AdjacencyMatrix::support(&true_delta, SUPPORT_TOL);
    Ok(ModelPair {
        theta1,
        theta2,
        true_delta,
        true_adjacency,
        repaired,
    })
}

/// `n` rows i.i.d. `N(0, Θ⁻¹)`: with `Θ = L Lᵀ`, `x = L⁻ᵀ z`.
pub fn sample_gaussian(theta: &SymMatrix, n: usize, seed: u64) -> Result<DataMatrix> {
    let chol = cholesky_pd(theta)?;
    let p = theta.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * p);
    for _ in 0..n {
        let mut z: Vec<f64> = (0..p).map(|_| std_normal(&mut rng)).collect();
        chol.backward_solve(&mut z);
        data.extend(z);
    }
    DataMatrix::from_row_major(n, p, data)
}
