//! Per-observation Fisher information of the logistic model: exact
//! enumeration/quadrature over the covariate space, the semi-simulation
//! estimator averaging B sampled single-observation matrices, and the
//! conditional estimator for observed covariates.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::glm::eta;
use crate::matrix::SymMat;
use crate::model::SolvedModel;
use crate::num::normal::logistic_weight;
use crate::rng::{derive_seed, domain, stream_rng, CHUNK_SIZE};
use crate::space::{CovariateSample, CovariateSpace};

/// How an information estimate was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Exact,
    SemiSimulation { b: u64, seed: u64 },
    Conditional { n_observed: usize },
}

/// Symmetric positive-definite (2+K)x(2+K) per-observation information.
#[derive(Debug, Clone)]
pub struct FisherEstimate {
    pub info_1: SymMat,
    pub provenance: Provenance,
    /// Block-mean Monte Carlo standard error of v1; semi-simulation only.
    pub mc_se_of_vg: Option<f64>,
}

impl FisherEstimate {
    /// Per-observation variance factor of the genetic coefficient,
    /// v1 = [I_1^-1]_{G,G}. The variance at sample size n is v1 / n.
    pub fn v1(&self) -> Result<f64> {
        let v = self.info_1.inverse()?.get(1, 1);
        if !(v > 0.0) {
            return Err(Error::SingularMatrix);
        }
        Ok(v)
    }
}

/// Information of a single observation: w(eta) x x^T with
/// w = exp(-eta) / (1 + exp(-eta))^2.
pub fn info_single(x: &CovariateSample, solved: &SolvedModel) -> SymMat {
    let row = x.design_row();
    let beta = solved.coefficients();
    let w = logistic_weight(eta(&row, &beta));
    let mut m = SymMat::zeros(row.len());
    m.add_weighted_outer(&row, w);
    m
}

const MC_SE_BLOCKS: usize = 20;

/// Semi-simulation estimate: average of B single-observation information
/// matrices over i.i.d. draws from F_X.
///
/// Draws are partitioned into fixed-size chunks with one RNG stream per
/// chunk; partial sums are merged in chunk order, so the estimate is
/// bit-identical for a given (B, seed) regardless of thread count. The
/// B draws are also split into 20 contiguous blocks whose per-block v1
/// spread provides `mc_se_of_vg`.
pub fn estimate_info_ss(
    solved: &SolvedModel,
    space: &CovariateSpace,
    b: u64,
    seed: u64,
) -> Result<FisherEstimate> {
    if b < 100 {
        return Err(Error::InvalidParameter(format!(
            "semi-simulation needs B >= 100, got {b}"
        )));
    }
    let b_usize = b as usize;
    let dim = solved.dim();
    let beta = solved.coefficients();
    let derived = derive_seed(seed, domain::INFO_SS);
    let n_chunks = b_usize.div_ceil(CHUNK_SIZE);

    // per chunk: sums per mc-se block it overlaps
    let chunk_partials: Vec<Vec<(usize, SymMat, u64)>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream_rng(derived, chunk as u64);
            let lo = chunk * CHUNK_SIZE;
            let hi = (lo + CHUNK_SIZE).min(b_usize);
            let mut partials: Vec<(usize, SymMat, u64)> = Vec::with_capacity(2);
            let mut row = vec![0.0; dim];
            row[0] = 1.0;
            for i in lo..hi {
                let (head, e_slots) = row.split_at_mut(2);
                head[1] = space.draw_into(&mut rng, e_slots);
                let w = logistic_weight(eta(&row, &beta));
                let block = ((i as u128 * MC_SE_BLOCKS as u128) / b as u128) as usize;
                match partials.last_mut() {
                    Some((blk, m, c)) if *blk == block => {
                        m.add_weighted_outer(&row, w);
                        *c += 1;
                    }
                    _ => {
                        let mut m = SymMat::zeros(dim);
                        m.add_weighted_outer(&row, w);
                        partials.push((block, m, 1));
                    }
                }
            }
            partials
        })
        .collect();

    let mut block_sums: Vec<SymMat> = (0..MC_SE_BLOCKS).map(|_| SymMat::zeros(dim)).collect();
    let mut block_counts = [0u64; MC_SE_BLOCKS];
    for partials in chunk_partials {
        for (block, m, c) in partials {
            block_sums[block].add_assign(&m);
            block_counts[block] += c;
        }
    }

    let mut total = SymMat::zeros(dim);
    for m in &block_sums {
        total.add_assign(m);
    }
    total.scale(1.0 / b as f64);

    let estimate = FisherEstimate {
        info_1: total,
        provenance: Provenance::SemiSimulation { b, seed },
        mc_se_of_vg: block_v1_se(&block_sums, &block_counts),
    };
    // surface degeneracy (e.g. all draws landed on one genotype) eagerly
    estimate
        .v1()
        .map_err(|_| Error::DegenerateSample { b })?;
    Ok(estimate)
}

fn block_v1_se(block_sums: &[SymMat], block_counts: &[u64; MC_SE_BLOCKS]) -> Option<f64> {
    let mut v1s = Vec::with_capacity(MC_SE_BLOCKS);
    for (m, &c) in block_sums.iter().zip(block_counts.iter()) {
        if c == 0 {
            return None;
        }
        let v1 = m.scaled(1.0 / c as f64).inverse().ok()?.get(1, 1);
        if !(v1 > 0.0) {
            return None;
        }
        v1s.push(v1);
    }
    let k = v1s.len() as f64;
    let mean = v1s.iter().sum::<f64>() / k;
    let var = v1s.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    Some((var / k).sqrt())
}

/// Exact per-observation information: the expectation of
/// `info_single` over the covariate space (finite sum over cells, or
/// tensor quadrature with at most two continuous covariates).
pub fn estimate_info_exact(solved: &SolvedModel, space: &CovariateSpace) -> Result<FisherEstimate> {
    if !space.supports_exact() {
        return Err(Error::Unsupported(format!(
            "exact information needs at most {} continuous covariates; use estimate_info_ss",
            crate::space::MAX_QUADRATURE_DIMS
        )));
    }
    let dim = solved.dim();
    let beta = solved.coefficients();
    let mut info = SymMat::zeros(dim);
    let mut row = vec![0.0; dim];
    row[0] = 1.0;
    space.visit_weighted(|prob, g, e| {
        row[1] = g;
        row[2..].copy_from_slice(e);
        let w = logistic_weight(eta(&row, &beta));
        info.add_weighted_outer(&row, prob * w);
    });
    Ok(FisherEstimate {
        info_1: info,
        provenance: Provenance::Exact,
        mc_se_of_vg: None,
    })
}

/// Average single-observation information over observed covariate rows
/// (conditional-power mode).
pub fn conditional_info(observed: &[CovariateSample], solved: &SolvedModel) -> Result<FisherEstimate> {
    if observed.is_empty() {
        return Err(Error::InvalidParameter(
            "conditional information needs at least one observed row".into(),
        ));
    }
    let k = solved.covariates.len();
    if observed.iter().any(|s| s.e.len() != k) {
        return Err(Error::InvalidParameter(format!(
            "observed rows must carry {k} covariate value(s)"
        )));
    }
    let g0 = observed[0].g;
    if observed.iter().all(|s| s.g == g0) {
        return Err(Error::Collinear(
            "genotype column is constant (no variance in G)".into(),
        ));
    }
    let dim = solved.dim();
    let beta = solved.coefficients();
    let mut info = SymMat::zeros(dim);
    let mut row = vec![0.0; dim];
    row[0] = 1.0;
    for s in observed {
        row[1] = s.g;
        row[2..].copy_from_slice(&s.e);
        info.add_weighted_outer(&row, logistic_weight(eta(&row, &beta)));
    }
    info.scale(1.0 / observed.len() as f64);
    let estimate = FisherEstimate {
        info_1: info,
        provenance: Provenance::Conditional {
            n_observed: observed.len(),
        },
        mc_se_of_vg: None,
    };
    estimate.v1().map_err(|_| {
        Error::Collinear("observed covariates are collinear; information not invertible".into())
    })?;
    Ok(estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        Coding, CovariateDist, CovariateModel, GenotypeModel, ModelSpec, SolvedModel, StudyDesign,
    };
    use crate::space::build_space;

    fn solve(
        maf: f64,
        coding: Coding,
        covariates: Vec<CovariateModel>,
        beta_g: f64,
    ) -> (SolvedModel, CovariateSpace) {
        let spec = ModelSpec::new(
            GenotypeModel::new(maf, coding).unwrap(),
            covariates,
            beta_g,
            StudyDesign::prospective(0.2, 0.05).unwrap(),
        )
        .unwrap();
        let solved = SolvedModel::solve(spec).unwrap();
        let space = build_space(&solved);
        (solved, space)
    }

    fn s2_covariate() -> CovariateModel {
        CovariateModel::new(
            "e",
            CovariateDist::Binary { rate: 0.3 },
            0.2f64.ln(),
            2.5f64.ln(),
        )
        .unwrap()
    }

    #[test]
    fn info_single_examples() {
        // eta = 0 at x = (1): w = 1/4
        let (solved, _) = solve(0.1, Coding::Additive, vec![], 0.0);
        let mut null = solved.clone();
        null.beta_0 = 0.0;
        let m = info_single(
            &CovariateSample {
                g: 0.0,
                e: vec![],
            },
            &null,
        );
        assert!((m.get(0, 0) - 0.25).abs() < 1e-15);

        // eta = logit(0.2): w = 0.16
        let mut at_k = solved.clone();
        at_k.beta_0 = (0.2f64 / 0.8).ln();
        let m = info_single(&CovariateSample { g: 0.0, e: vec![] }, &at_k);
        assert!((m.get(0, 0) - 0.16).abs() < 1e-15);
    }

    #[test]
    fn info_single_outer_product_structure() {
        let cov = CovariateModel::new(
            "e",
            CovariateDist::Continuous { mean: 0.0, sd: 1.0 },
            0.0,
            0.3,
        )
        .unwrap();
        let (solved, _) = solve(0.1, Coding::Additive, vec![cov], 0.1);
        let s = CovariateSample {
            g: 2.0,
            e: vec![0.5],
        };
        let m = info_single(&s, &solved);
        let x = [1.0, 2.0, 0.5];
        let w = m.get(0, 0); // w * 1 * 1
        for i in 0..3 {
            for j in 0..3 {
                assert!((m.get(i, j) - w * x[i] * x[j]).abs() < 1e-14);
            }
        }
        // trace = w * |x|^2
        let trace: f64 = (0..3).map(|i| m.get(i, i)).sum();
        assert!((trace - w * (1.0 + 4.0 + 0.25)).abs() < 1e-13);
    }

    #[test]
    fn exact_null_effect_closed_form() {
        // beta_G = 0, no covariates: w constant = K(1-K), so
        // v1 = 1 / (K(1-K) Var(G)) = 1 / (0.16 * 0.18)
        let (solved, space) = solve(0.1, Coding::Additive, vec![], 0.0);
        let est = estimate_info_exact(&solved, &space).unwrap();
        let v1 = est.v1().unwrap();
        assert!(
            (v1 - 34.722_222_222_222_22).abs() < 1e-9,
            "v1 = {v1}"
        );
    }

    #[test]
    fn exact_binary_pair_matches_hand_enumeration() {
        // six-cell hand computation done independently (scipy): the S2
        // configuration at OR 1.5 gives v1 = 42.84081651895459
        let (solved, space) = solve(0.1, Coding::Dominant, vec![s2_covariate()], 1.5f64.ln());
        assert!((solved.beta_0 - (-1.789_844_932_423_512)).abs() < 1e-8);
        let est = estimate_info_exact(&solved, &space).unwrap();
        let v1 = est.v1().unwrap();
        assert!((v1 - 42.840_816_518_954_59).abs() < 1e-6, "v1 = {v1}");
    }

    #[test]
    fn exact_independent_covariate_factorizes() {
        // gamma_G = 0 and beta_E = 0: weight depends only on G, and the
        // (G,E) cross entry is E[w G] * E[E] by the product measure
        let cov = CovariateModel::new("e", CovariateDist::Binary { rate: 0.3 }, 0.0, 0.0).unwrap();
        let (solved, space) = solve(0.1, Coding::Additive, vec![cov], 0.4);
        let est = estimate_info_exact(&solved, &space).unwrap();
        let beta = solved.coefficients();
        let ewg = space.expectation(|g, _| {
            g * logistic_weight(beta[0] + beta[1] * g)
        });
        assert!((est.info_1.get(1, 2) - ewg * 0.3).abs() < 1e-12);
    }

    #[test]
    fn semi_simulation_converges_to_exact() {
        let (solved, space) = solve(0.1, Coding::Dominant, vec![s2_covariate()], 1.5f64.ln());
        let exact = estimate_info_exact(&solved, &space).unwrap().v1().unwrap();
        let est = estimate_info_ss(&solved, &space, 1_000_000, 4242).unwrap();
        let v1 = est.v1().unwrap();
        let se = est.mc_se_of_vg.expect("mc se available");
        assert!(
            (v1 - exact).abs() < 3.0 * se,
            "v1 {v1} vs exact {exact} (se {se})"
        );
    }

    #[test]
    fn semi_simulation_is_deterministic_and_seed_sensitive() {
        let (solved, space) = solve(0.1, Coding::Dominant, vec![s2_covariate()], 1.5f64.ln());
        let a = estimate_info_ss(&solved, &space, 10_000, 1).unwrap();
        let b = estimate_info_ss(&solved, &space, 10_000, 1).unwrap();
        assert_eq!(a.info_1.max_abs_diff(&b.info_1), 0.0);
        let c = estimate_info_ss(&solved, &space, 10_000, 2).unwrap();
        assert!(c.info_1.max_abs_diff(&a.info_1) > 0.0);
        assert_eq!(
            a.provenance,
            Provenance::SemiSimulation { b: 10_000, seed: 1 }
        );
    }

    #[test]
    fn semi_simulation_rejects_tiny_b() {
        let (solved, space) = solve(0.1, Coding::Additive, vec![], 0.0);
        assert!(estimate_info_ss(&solved, &space, 99, 1).is_err());
    }

    #[test]
    fn conditional_single_observation_is_info_single() {
        let (solved, _) = solve(0.1, Coding::Additive, vec![], 0.3);
        let rows = vec![
            CovariateSample { g: 0.0, e: vec![] },
            CovariateSample { g: 1.0, e: vec![] },
        ];
        let est = conditional_info(&rows, &solved).unwrap();
        let mut expect = info_single(&rows[0], &solved);
        expect.add_assign(&info_single(&rows[1], &solved));
        expect.scale(0.5);
        assert!(est.info_1.max_abs_diff(&expect) < 1e-15);
        assert_eq!(est.provenance, Provenance::Conditional { n_observed: 2 });
    }

    #[test]
    fn conditional_proportional_replication_matches_exact() {
        let (solved, space) = solve(0.1, Coding::Dominant, vec![s2_covariate()], 1.5f64.ln());
        // replicate each exact cell proportionally (x10000)
        let mut rows = Vec::new();
        for cell in space.cells() {
            let count = (cell.prob * 10_000.0).round() as usize;
            for _ in 0..count {
                rows.push(CovariateSample {
                    g: cell.g,
                    e: cell.e.clone(),
                });
            }
        }
        let est = conditional_info(&rows, &solved).unwrap();
        let exact = estimate_info_exact(&solved, &space).unwrap();
        // counts are rounded, so compare loosely
        assert!(
            (est.v1().unwrap() - exact.v1().unwrap()).abs() / exact.v1().unwrap() < 5e-3
        );
    }

    #[test]
    fn conditional_constant_genotype_errors() {
        let (solved, _) = solve(0.1, Coding::Additive, vec![], 0.3);
        let rows = vec![
            CovariateSample { g: 1.0, e: vec![] },
            CovariateSample { g: 1.0, e: vec![] },
        ];
        assert!(matches!(
            conditional_info(&rows, &solved),
            Err(Error::Collinear(_))
        ));
    }

    #[test]
    fn conditional_empty_errors() {
        let (solved, _) = solve(0.1, Coding::Additive, vec![], 0.3);
        assert!(conditional_info(&[], &solved).is_err());
    }
}
