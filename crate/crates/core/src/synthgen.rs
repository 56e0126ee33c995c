//! Case-control simulator with a planted two-locus pure-epistasis model.
//!
//! Two functional loci are drawn under Hardy-Weinberg equilibrium and the
//! disease status of each proposal is drawn from a 3x3 penetrance table.
//! Proposals are accepted until the requested case and control quotas are
//! filled. All remaining columns are label-independent noise.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::GenotypeDataset;
use crate::error::{Error, Result};
use crate::seed::rng_from;

/// Tolerance of the marginal-penetrance equality check.
pub const PURITY_TOL: f64 = 1e-12;

/// Hardy-Weinberg genotype frequencies indexed by minor-allele count.
pub fn hwe_frequencies(maf: f64) -> [f64; 3] {
    let q = 1.0 - maf;
    [q * q, 2.0 * maf * q, maf * maf]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenetranceModel {
    /// `penetrance[i][j]`: disease probability given `i` minor alleles at
    /// locus A and `j` at locus B.
    pub penetrance: [[f64; 3]; 3],
    pub maf_a: f64,
    pub maf_b: f64,
}

impl PenetranceModel {
    pub fn new(penetrance: [[f64; 3]; 3], maf_a: f64, maf_b: f64) -> Result<Self> {
        let model = Self {
            penetrance,
            maf_a,
            maf_b,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        for maf in [self.maf_a, self.maf_b] {
            if !(maf > 0.0 && maf <= 0.5) {
                return Err(Error::param("maf", format!("{} is outside (0, 0.5]", maf)));
            }
        }
        if self
            .penetrance
            .iter()
            .flatten()
            .any(|&f| !(0.0..=1.0).contains(&f))
        {
            return Err(Error::param(
                "penetrance",
                "every entry must lie in [0, 1]".to_string(),
            ));
        }
        Ok(())
    }

    /// Marginal penetrance of each genotype at locus A, then at locus B.
    pub fn marginal_penetrances(&self) -> ([f64; 3], [f64; 3]) {
        let ga = hwe_frequencies(self.maf_a);
        let gb = hwe_frequencies(self.maf_b);
        let mut ma = [0.0; 3];
        let mut mb = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                ma[i] += gb[j] * self.penetrance[i][j];
                mb[j] += ga[i] * self.penetrance[i][j];
            }
        }
        (ma, mb)
    }

    /// True when neither locus has a marginal effect.
    pub fn is_pure_epistatic(&self) -> bool {
        let (ma, mb) = self.marginal_penetrances();
        let flat = |m: [f64; 3]| m.iter().all(|&x| (x - m[0]).abs() <= PURITY_TOL);
        flat(ma) && flat(mb)
    }

    pub fn prevalence(&self) -> f64 {
        let ga = hwe_frequencies(self.maf_a);
        let gb = hwe_frequencies(self.maf_b);
        let mut k = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                k += ga[i] * gb[j] * self.penetrance[i][j];
            }
        }
        k
    }
}

/// Broad-sense heritability and population prevalence by 9-cell enumeration.
///
/// `K = sum g_i g_j f_ij` and `h2 = sum g_i g_j (f_ij - K)^2 / (K (1 - K))`.
pub fn heritability_and_prevalence(model: &PenetranceModel) -> Result<(f64, f64)> {
    model.validate()?;
    let ga = hwe_frequencies(model.maf_a);
    let gb = hwe_frequencies(model.maf_b);
    let k = model.prevalence();
    if k <= 0.0 || k >= 1.0 {
        return Err(Error::Precondition(format!(
            "prevalence {} leaves no case/control variance",
            k
        )));
    }
    let mut var = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let d = model.penetrance[i][j] - k;
            var += ga[i] * gb[j] * d * d;
        }
    }
    if var <= f64::EPSILON * k {
        return Err(Error::Precondition(
            "zero heritability: penetrance does not vary with genotype".into(),
        ));
    }
    Ok((var / (k * (1.0 - k)), k))
}

/// Builds a parity-family pure-epistasis model with the requested heritability.
///
/// Cells are `f_ij = K - d * x_i * y_j` where `x` and `y` are the parity
/// signs `(1, -1, 1)` centred under each locus's genotype frequencies, so
/// every marginal penetrance equals `K`. At `maf = 0.5` and floor `0` this is
/// the XOR table with plateau `2t / (1 + t)`. When the floor-anchored table
/// would overflow 1, the ceiling-anchored and sign-flipped variants are tried.
pub fn make_xor_model(target_heritability: f64, maf: f64) -> Result<PenetranceModel> {
    if !(target_heritability > 0.0 && target_heritability <= 1.0) {
        return Err(Error::param(
            "heritability",
            format!("{} is outside (0, 1]", target_heritability),
        ));
    }
    if !(maf > 0.0 && maf <= 0.5) {
        return Err(Error::param("maf", format!("{} is outside (0, 0.5]", maf)));
    }
    let g = hwe_frequencies(maf);
    let parity = [1.0, -1.0, 1.0];
    let mean: f64 = g.iter().zip(parity).map(|(w, s)| w * s).sum();
    let centred = parity.map(|s| s - mean);
    let var_x: f64 = g.iter().zip(centred).map(|(w, x)| w * x * x).sum();
    let v = var_x * var_x;
    let t = target_heritability;

    for sign in [1.0, -1.0] {
        let prod = |i: usize, j: usize| sign * centred[i] * centred[j];
        let hi = (0..9).map(|c| prod(c / 3, c % 3)).fold(f64::MIN, f64::max);
        let lo = (0..9).map(|c| prod(c / 3, c % 3)).fold(f64::MAX, f64::min);
        // floor-anchored: min cell 0, K = d * hi
        let d_floor = t * hi / (v + t * hi * hi);
        // ceiling-anchored: max cell 1, K = 1 + d * lo
        let d_ceil = t * (-lo) / (v + t * lo * lo);
        for (d, k) in [(d_floor, d_floor * hi), (d_ceil, 1.0 + d_ceil * lo)] {
            let mut pen = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    pen[i][j] = k - d * prod(i, j);
                }
            }
            let out_of_range = pen.iter().flatten().any(|&f| !(-1e-12..=1.0 + 1e-12).contains(&f));
            if out_of_range {
                continue;
            }
            for f in pen.iter_mut().flatten() {
                *f = f.clamp(0.0, 1.0);
            }
            let model = PenetranceModel::new(pen, maf, maf)?;
            let (h2, _) = heritability_and_prevalence(&model)?;
            if (h2 - t).abs() <= 1e-9 && model.is_pure_epistatic() {
                return Ok(model);
            }
        }
    }
    Err(Error::Precondition(format!(
        "heritability {} is unattainable by a pure-epistasis parity model at maf {}",
        t, maf
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_cases: usize,
    pub n_controls: usize,
    pub n_noise_features: usize,
    pub noise_maf_range: (f64, f64),
    pub seed: u64,
    /// Column indices of the two functional loci; random when absent.
    pub functional_positions: Option<(usize, usize)>,
}

impl SynthConfig {
    pub fn n_features(&self) -> usize {
        self.n_noise_features + 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cases == 0 || self.n_controls == 0 {
            return Err(Error::param("cases/controls", "counts must be at least 1"));
        }
        let (lo, hi) = self.noise_maf_range;
        if !(lo > 0.0 && lo <= hi && hi <= 0.5) {
            return Err(Error::param(
                "noise_maf_range",
                format!("({}, {}) is not an interval within (0, 0.5]", lo, hi),
            ));
        }
        if let Some((a, b)) = self.functional_positions {
            let p = self.n_features();
            if a == b || a >= p || b >= p {
                return Err(Error::param(
                    "functional_positions",
                    format!("({}, {}) must be distinct columns below {}", a, b, p),
                ));
            }
        }
        Ok(())
    }
}

/// Generated dataset plus where the interaction was planted.
#[derive(Debug, Clone)]
pub struct Synthesized {
    pub dataset: GenotypeDataset,
    pub functional_positions: (usize, usize),
    /// Genotype-pair proposals drawn by the rejection sampler.
    pub proposals: u64,
    /// Proposals whose disease draw came out positive.
    pub positive_proposals: u64,
}

impl Synthesized {
    pub fn functional_ids(&self) -> (String, String) {
        let ids = self.dataset.feature_ids();
        (
            ids[self.functional_positions.0].clone(),
            ids[self.functional_positions.1].clone(),
        )
    }
}

fn draw_genotype<R: Rng>(rng: &mut R, maf: f64) -> u8 {
    u8::from(rng.gen::<f64>() < maf) + u8::from(rng.gen::<f64>() < maf)
}

/// Draws one genotype pair and its disease status.
pub fn propose<R: Rng>(model: &PenetranceModel, rng: &mut R) -> (u8, u8, bool) {
    let a = draw_genotype(rng, model.maf_a);
    let b = draw_genotype(rng, model.maf_b);
    let affected = rng.gen::<f64>() < model.penetrance[a as usize][b as usize];
    (a, b, affected)
}

pub fn generate(model: &PenetranceModel, config: &SynthConfig) -> Result<Synthesized> {
    model.validate()?;
    config.validate()?;
    let k = model.prevalence();
    if k <= 0.0 && config.n_cases > 0 {
        return Err(Error::Precondition(
            "case quota unreachable: penetrance is identically 0".into(),
        ));
    }
    if k >= 1.0 && config.n_controls > 0 {
        return Err(Error::Precondition(
            "control quota unreachable: penetrance is identically 1".into(),
        ));
    }

    let mut rng = rng_from(config.seed);
    let p = config.n_features();
    let n = config.n_cases + config.n_controls;
    let (pos_a, pos_b) = match config.functional_positions {
        Some(pair) => pair,
        None => {
            let picked = sample(&mut rng, p, 2);
            (picked.index(0), picked.index(1))
        }
    };

    // Rejection-sample functional genotypes against the case/control quotas.
    let mut cases = Vec::with_capacity(config.n_cases);
    let mut controls = Vec::with_capacity(config.n_controls);
    let (mut proposals, mut positive) = (0u64, 0u64);
    while cases.len() < config.n_cases || controls.len() < config.n_controls {
        let (a, b, affected) = propose(model, &mut rng);
        proposals += 1;
        if affected {
            positive += 1;
            if cases.len() < config.n_cases {
                cases.push((a, b));
            }
        } else if controls.len() < config.n_controls {
            controls.push((a, b));
        }
    }

    // Interleave the two classes in a random row order.
    let mut labels: Vec<u8> = std::iter::repeat_n(1, config.n_cases)
        .chain(std::iter::repeat_n(0, config.n_controls))
        .collect();
    let mut pairs: Vec<(u8, u8)> = cases.into_iter().chain(controls).collect();
    let order = sample(&mut rng, n, n).into_vec();
    labels = order.iter().map(|&i| labels[i]).collect();
    pairs = order.iter().map(|&i| pairs[i]).collect();

    let mut genotypes = vec![0u8; n * p];
    let mut feature_ids = Vec::with_capacity(p);
    let mut noise_index = 0usize;
    let (lo, hi) = config.noise_maf_range;
    for j in 0..p {
        let col = &mut genotypes[j * n..(j + 1) * n];
        if j == pos_a || j == pos_b {
            let which = usize::from(j == pos_b);
            feature_ids.push(format!("M0P{}", which));
            for (g, pair) in col.iter_mut().zip(&pairs) {
                *g = if which == 0 { pair.0 } else { pair.1 };
            }
        } else {
            feature_ids.push(format!("N{}", noise_index));
            noise_index += 1;
            let maf = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
            for g in col.iter_mut() {
                *g = draw_genotype(&mut rng, maf);
            }
        }
    }
    let sample_ids = (1..=n).map(|i| format!("S{}", i)).collect();
    let dataset = GenotypeDataset::from_columns(feature_ids, sample_ids, genotypes, labels)?;
    Ok(Synthesized {
        dataset,
        functional_positions: (pos_a, pos_b),
        proposals,
        positive_proposals: positive,
    })
}

/// Model description written next to a generated dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelEcho {
    pub penetrance: [[f64; 3]; 3],
    pub maf_a: f64,
    pub maf_b: f64,
    pub heritability: f64,
    pub prevalence: f64,
    pub functional_features: [String; 2],
    pub functional_positions: [usize; 2],
    pub n_cases: usize,
    pub n_controls: usize,
    pub seed: u64,
}

impl ModelEcho {
    pub fn new(model: &PenetranceModel, config: &SynthConfig, out: &Synthesized) -> Result<Self> {
        let (h2, k) = heritability_and_prevalence(model)?;
        let (a, b) = out.functional_ids();
        Ok(Self {
            penetrance: model.penetrance,
            maf_a: model.maf_a,
            maf_b: model.maf_b,
            heritability: h2,
            prevalence: k,
            functional_features: [a, b],
            functional_positions: [out.functional_positions.0, out.functional_positions.1],
            n_cases: config.n_cases,
            n_controls: config.n_controls,
            seed: config.seed,
        })
    }
}
