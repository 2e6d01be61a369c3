//! The joint covariate distribution F_X of (G, E_1, ..., E_K): exact
//! probability cells when every covariate is binary, otherwise per-genotype
//! conditionals evaluated by Gauss-Hermite quadrature, plus a seeded
//! sampler used by the semi-simulation method and the Monte Carlo oracle.
//!
//! Covariates are conditionally independent given G by construction.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::model::{CovariateDist, GenotypeModel, SolvedCovariate, SolvedModel};
use crate::num::hermite::gh64;
use crate::rng::{derive_seed, domain, stream_rng, CHUNK_SIZE};

/// One draw from F_X.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateSample {
    pub g: f64,
    pub e: Vec<f64>,
}

impl CovariateSample {
    /// Design row (1, G, E_1, ..., E_K).
    pub fn design_row(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(2 + self.e.len());
        x.push(1.0);
        x.push(self.g);
        x.extend_from_slice(&self.e);
        x
    }
}

/// A probability cell of an all-discrete space.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub g: f64,
    pub e: Vec<f64>,
    pub prob: f64,
}

/// A (genotype, binary-pattern) stratum; continuous covariate slots hold
/// NaN placeholders to be filled by quadrature nodes or Blom scores.
#[derive(Debug, Clone)]
pub struct Stratum {
    pub g: f64,
    pub e: Vec<f64>,
    pub prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceMode {
    /// All covariates binary: expectations are exact finite sums.
    ExactDiscrete,
    /// At least one continuous covariate: quadrature or Monte Carlo.
    Mixed,
}

/// Number of fixed-seed draws used when more than two continuous
/// covariates rule out tensor quadrature.
pub const MC_FALLBACK_DRAWS: usize = 200_000;
const MC_FALLBACK_SEED: u64 = 0x45585043_4d43; // fixed; keeps expectations deterministic

/// Maximum number of continuous covariates handled by tensor quadrature.
pub const MAX_QUADRATURE_DIMS: usize = 2;

#[derive(Debug, Clone)]
pub struct CovariateSpace {
    genotype_pmf: Vec<(f64, f64)>,
    covariates: Vec<SolvedCovariate>,
    mode: SpaceMode,
    cells: Vec<Cell>,
}

impl CovariateSpace {
    /// Assemble the space from a genotype model and solved second stages.
    pub fn from_parts(genotype: &GenotypeModel, covariates: Vec<SolvedCovariate>) -> CovariateSpace {
        let genotype_pmf = genotype.pmf();
        let all_binary = covariates.iter().all(|c| c.model.is_binary());
        let mut space = CovariateSpace {
            genotype_pmf,
            covariates,
            mode: if all_binary {
                SpaceMode::ExactDiscrete
            } else {
                SpaceMode::Mixed
            },
            cells: Vec::new(),
        };
        if all_binary {
            space.cells = space
                .discrete_strata()
                .into_iter()
                .map(|s| Cell {
                    g: s.g,
                    e: s.e,
                    prob: s.prob,
                })
                .collect();
        }
        space
    }

    pub fn mode(&self) -> SpaceMode {
        self.mode
    }

    /// Exact cells; empty unless the mode is `ExactDiscrete`.
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn genotype_pmf(&self) -> &[(f64, f64)] {
        &self.genotype_pmf
    }

    pub fn covariates(&self) -> &[SolvedCovariate] {
        &self.covariates
    }

    pub fn n_covariates(&self) -> usize {
        self.covariates.len()
    }

    pub fn n_continuous(&self) -> usize {
        self.covariates.iter().filter(|c| !c.model.is_binary()).count()
    }

    /// Whether deterministic (cell sum / quadrature) expectations are
    /// available.
    pub fn supports_exact(&self) -> bool {
        self.n_continuous() <= MAX_QUADRATURE_DIMS
    }

    /// Enumerate (genotype, binary-pattern) strata in deterministic order:
    /// genotype values ascending, binary patterns in lexicographic order
    /// with 0 before 1 per covariate. Continuous slots are NaN.
    pub fn discrete_strata(&self) -> Vec<Stratum> {
        let binary_idx: Vec<usize> = self
            .covariates
            .iter()
            .enumerate()
            .filter(|(_, c)| c.model.is_binary())
            .map(|(i, _)| i)
            .collect();
        let mut strata = Vec::new();
        for &(g, pg) in &self.genotype_pmf {
            let template: Vec<f64> = self
                .covariates
                .iter()
                .map(|c| if c.model.is_binary() { 0.0 } else { f64::NAN })
                .collect();
            // walk all 2^|binary| patterns
            let patterns = 1usize << binary_idx.len();
            for mask in 0..patterns {
                let mut e = template.clone();
                let mut prob = pg;
                for (bit, &ci) in binary_idx.iter().enumerate() {
                    let one = (mask >> bit) & 1 == 1;
                    let rate = self.covariates[ci].conditional_rate(g);
                    if one {
                        e[ci] = 1.0;
                        prob *= rate;
                    } else {
                        e[ci] = 0.0;
                        prob *= 1.0 - rate;
                    }
                }
                strata.push(Stratum { g, e, prob });
            }
        }
        strata
    }

    /// Visit every quadrature point (weight, g, e) of the deterministic
    /// representation. Falls back to fixed-seed Monte Carlo beyond
    /// `MAX_QUADRATURE_DIMS` continuous covariates.
    pub(crate) fn visit_weighted<F: FnMut(f64, f64, &[f64])>(&self, mut f: F) {
        let cont_idx: Vec<usize> = self
            .covariates
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.model.is_binary())
            .map(|(i, _)| i)
            .collect();
        if cont_idx.len() > MAX_QUADRATURE_DIMS {
            let inv = 1.0 / MC_FALLBACK_DRAWS as f64;
            let mut e = vec![0.0; self.covariates.len()];
            let seed = derive_seed(MC_FALLBACK_SEED, domain::SPACE_SAMPLE);
            let n_chunks = MC_FALLBACK_DRAWS.div_ceil(CHUNK_SIZE);
            for chunk in 0..n_chunks {
                let mut rng = stream_rng(seed, chunk as u64);
                let lo = chunk * CHUNK_SIZE;
                let hi = (lo + CHUNK_SIZE).min(MC_FALLBACK_DRAWS);
                for _ in lo..hi {
                    let g = self.draw_into(&mut rng, &mut e);
                    f(inv, g, &e);
                }
            }
            return;
        }

        let gh = gh64();
        let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
        for stratum in self.discrete_strata() {
            match cont_idx.len() {
                0 => f(stratum.prob, stratum.g, &stratum.e),
                1 => {
                    let ci = cont_idx[0];
                    let c = &self.covariates[ci];
                    let mean = c.conditional_mean(stratum.g);
                    let sd = c.sigma_cond.expect("continuous covariate has sigma_cond");
                    let mut e = stratum.e.clone();
                    for (x, w) in gh.iter() {
                        e[ci] = mean + std::f64::consts::SQRT_2 * sd * x;
                        f(stratum.prob * w * inv_sqrt_pi, stratum.g, &e);
                    }
                }
                _ => {
                    let (c1, c2) = (cont_idx[0], cont_idx[1]);
                    let (m1, s1) = {
                        let c = &self.covariates[c1];
                        (c.conditional_mean(stratum.g), c.sigma_cond.unwrap())
                    };
                    let (m2, s2) = {
                        let c = &self.covariates[c2];
                        (c.conditional_mean(stratum.g), c.sigma_cond.unwrap())
                    };
                    let mut e = stratum.e.clone();
                    for (x1, w1) in gh.iter() {
                        e[c1] = m1 + std::f64::consts::SQRT_2 * s1 * x1;
                        for (x2, w2) in gh.iter() {
                            e[c2] = m2 + std::f64::consts::SQRT_2 * s2 * x2;
                            f(
                                stratum.prob * w1 * w2 * inv_sqrt_pi * inv_sqrt_pi,
                                stratum.g,
                                &e,
                            );
                        }
                    }
                }
            }
        }
    }

    /// Expectation of f(G, E) over F_X: an exact cell sum in discrete
    /// mode, tensor Gauss-Hermite quadrature with continuous covariates,
    /// fixed-seed Monte Carlo beyond two continuous dimensions. The
    /// evaluation order is fixed, so repeated calls are bit-identical.
    pub fn expectation<F: Fn(f64, &[f64]) -> f64>(&self, f: F) -> f64 {
        let mut acc = 0.0;
        self.visit_weighted(|w, g, e| acc += w * f(g, e));
        acc
    }

    /// Draw one sample, writing covariate values into `e`; returns g.
    pub(crate) fn draw_into(&self, rng: &mut ChaCha8Rng, e: &mut [f64]) -> f64 {
        debug_assert_eq!(e.len(), self.covariates.len());
        let u: f64 = rng.random();
        let mut g = self.genotype_pmf[self.genotype_pmf.len() - 1].0;
        let mut acc = 0.0;
        for &(gv, p) in &self.genotype_pmf {
            acc += p;
            if u < acc {
                g = gv;
                break;
            }
        }
        for (slot, c) in e.iter_mut().zip(self.covariates.iter()) {
            match c.model.dist {
                CovariateDist::Binary { .. } => {
                    let u: f64 = rng.random();
                    *slot = if u < c.conditional_rate(g) { 1.0 } else { 0.0 };
                }
                CovariateDist::Continuous { .. } => {
                    let z: f64 = StandardNormal.sample(rng);
                    *slot = c.conditional_mean(g) + c.sigma_cond.unwrap() * z;
                }
            }
        }
        g
    }

    /// `count` i.i.d. draws from F_X. Work is split into fixed-size chunks
    /// with one RNG stream per chunk and reassembled in chunk order, so the
    /// output depends only on (seed, count), not on thread count.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<CovariateSample> {
        let seed = derive_seed(seed, domain::SPACE_SAMPLE);
        let n_chunks = count.div_ceil(CHUNK_SIZE);
        let chunks: Vec<Vec<CovariateSample>> = (0..n_chunks)
            .into_par_iter()
            .map(|chunk| {
                let mut rng = stream_rng(seed, chunk as u64);
                let lo = chunk * CHUNK_SIZE;
                let hi = (lo + CHUNK_SIZE).min(count);
                let mut out = Vec::with_capacity(hi - lo);
                let mut e = vec![0.0; self.covariates.len()];
                for _ in lo..hi {
                    let g = self.draw_into(&mut rng, &mut e);
                    out.push(CovariateSample { g, e: e.clone() });
                }
                out
            })
            .collect();
        chunks.into_iter().flatten().collect()
    }
}

/// Build the covariate space implied by a solved model.
pub fn build_space(solved: &SolvedModel) -> CovariateSpace {
    CovariateSpace::from_parts(&solved.spec.genotype, solved.covariates.clone())
}
