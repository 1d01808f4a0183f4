use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use super::DataError;
use crate::complex::SimplicialComplex;

/// Relative tolerance under which an imputed value counts as correct.
pub const RELATIVE_TOLERANCE: f64 = 0.05;

/// How simplex values are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValueDistribution {
    /// Each maximal simplex (a paper) receives a rounded log-normal citation
    /// count; a simplex's value is the sum over the papers containing it.
    CollaborationSum { mu: f64, sigma: f64 },
    /// Independent rounded log-normal values.
    LogNormal { mu: f64, sigma: f64 },
}

impl Default for ValueDistribution {
    fn default() -> Self {
        Self::CollaborationSum { mu: 3.0, sigma: 1.0 }
    }
}

fn citation<R: Rng + ?Sized>(dist: &LogNormal<f64>, rng: &mut R) -> f64 {
    dist.sample(rng).round().max(1.0)
}

/// Generator settings for a synthetic co-authorship complex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoauthorshipParams {
    pub n_authors: usize,
    pub n_papers: usize,
    /// Largest team; the complex has order `max_team - 1`.
    pub max_team: usize,
    /// Co-authors are drawn within this many ids of the lead author.
    pub locality: usize,
    pub seed: u64,
}

impl CoauthorshipParams {
    pub fn desk_scale(seed: u64) -> Self {
        Self { n_authors: 150, n_papers: 150, max_team: 3, locality: 6, seed }
    }
}

/// Papers with one to `max_team` authors; a lead author is uniform and the
/// others are drawn from a window around it, so collaborations cluster.
pub fn coauthorship_complex(params: &CoauthorshipParams) -> Result<SimplicialComplex, DataError> {
    if params.n_authors < params.max_team.max(2) || params.max_team == 0 || params.n_papers == 0 {
        return Err(DataError::InvalidParameter("co-authorship generator needs n_authors >= max_team >= 1".into()));
    }
    if 2 * params.locality + 1 < params.max_team {
        return Err(DataError::InvalidParameter("locality window is smaller than a team".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let window = (2 * params.locality + 1).min(params.n_authors);
    let mut papers = Vec::with_capacity(params.n_papers);
    for _ in 0..params.n_papers {
        let size = rng.random_range(1..=params.max_team);
        let lead = rng.random_range(0..params.n_authors);
        let base = lead + params.n_authors - params.locality.min(params.n_authors / 2);
        let mut team: Vec<usize> = vec![lead];
        for off in sample(&mut rng, window, window) {
            if team.len() == size {
                break;
            }
            let a = (base + off) % params.n_authors;
            if !team.contains(&a) {
                team.push(a);
            }
        }
        papers.push(team);
    }
    Ok(SimplicialComplex::build(&papers)?)
}

/// Values, mask and imputed inputs for one order of a complex.
#[derive(Clone, Debug, PartialEq)]
pub struct MdiInstance {
    pub order: usize,
    pub values: Vec<f64>,
    /// `true` where the value is observed.
    pub known: Vec<bool>,
    /// `values` on known entries, the median of known values elsewhere.
    pub input: Vec<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

impl MdiInstance {
    /// Builds an instance from values and a mask, filling hidden entries.
    pub fn new(order: usize, values: Vec<f64>, known: Vec<bool>) -> Result<Self, DataError> {
        if values.len() != known.len() {
            return Err(DataError::DimensionMismatch { expected: values.len(), actual: known.len() });
        }
        if !known.iter().any(|&k| k) {
            return Err(DataError::InvalidParameter("mask hides every entry".into()));
        }
        let fill = median(values.iter().zip(&known).filter(|(_, &k)| k).map(|(v, _)| *v).collect());
        let input = values.iter().zip(&known).map(|(&v, &k)| if k { v } else { fill }).collect();
        Ok(Self { order, values, known, input })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Median of the known values.
    pub fn known_median(&self) -> f64 {
        median(self.values.iter().zip(&self.known).filter(|(_, &k)| k).map(|(v, _)| *v).collect())
    }

    pub fn missing_count(&self) -> usize {
        self.known.iter().filter(|&&k| !k).count()
    }

    /// Same values under a different mask.
    pub fn with_mask(&self, known: Vec<bool>) -> Result<Self, DataError> {
        Self::new(self.order, self.values.clone(), known)
    }

    /// Fraction of selected entries predicted within ±5 %.
    pub fn accuracy(&self, prediction: &[f64], missing_only: bool) -> f64 {
        let picked: Vec<usize> = (0..self.len()).filter(|&i| !missing_only || !self.known[i]).collect();
        if picked.is_empty() {
            return 1.0;
        }
        let hits = picked.iter().filter(|&&i| within_tolerance(prediction[i], self.values[i])).count();
        hits as f64 / picked.len() as f64
    }
}

/// `|prediction - truth| <= 5 % of |truth|`.
pub fn within_tolerance(prediction: f64, truth: f64) -> bool {
    (prediction - truth).abs() <= RELATIVE_TOLERANCE * truth.abs()
}

/// Mask hiding `⌈fraction · n⌉` entries chosen uniformly.
fn random_mask<R: Rng + ?Sized>(n: usize, fraction: f64, rng: &mut R) -> Vec<bool> {
    let hidden = (fraction * n as f64).ceil() as usize;
    let mut known = vec![true; n];
    for i in sample(rng, n, hidden.min(n)) {
        known[i] = false;
    }
    known
}

fn values_for<R: Rng + ?Sized>(
    complex: &SimplicialComplex,
    order: usize,
    distribution: &ValueDistribution,
    rng: &mut R,
) -> Result<Vec<f64>, DataError> {
    let n = complex.count(order);
    Ok(match *distribution {
        ValueDistribution::LogNormal { mu, sigma } => {
            let d = LogNormal::new(mu, sigma).map_err(|e| DataError::InvalidParameter(e.to_string()))?;
            (0..n).map(|_| citation(&d, rng)).collect()
        }
        ValueDistribution::CollaborationSum { mu, sigma } => {
            let d = LogNormal::new(mu, sigma).map_err(|e| DataError::InvalidParameter(e.to_string()))?;
            let papers = complex.maximal_simplices();
            let cites: Vec<f64> = papers.iter().map(|_| citation(&d, rng)).collect();
            let mut values = vec![0.0; n];
            for (paper, c) in papers.iter().zip(&cites) {
                if paper.order() < order {
                    continue;
                }
                let verts = paper.vertices();
                // every (order + 1)-subset of the paper's authors
                let m = verts.len();
                for bits in 0u32..(1 << m) {
                    if bits.count_ones() as usize != order + 1 {
                        continue;
                    }
                    let face: Vec<usize> = (0..m).filter(|b| bits >> b & 1 == 1).map(|b| verts[b]).collect();
                    let idx = complex.find(&face).expect("faces are in the complex");
                    values[idx] += c;
                }
            }
            values
        }
    })
}

/// Draws values for order `order` and hides `⌈missing_fraction · N⌉`
/// entries. Values and mask use separate streams of one seeded generator.
pub fn generate_mdi_instance(
    complex: &SimplicialComplex,
    order: usize,
    distribution: &ValueDistribution,
    missing_fraction: f64,
    seed: u64,
) -> Result<MdiInstance, DataError> {
    if !(missing_fraction > 0.0 && missing_fraction < 1.0) {
        return Err(DataError::InvalidParameter(format!("missing fraction {missing_fraction} outside (0, 1)")));
    }
    if order > complex.max_order() || complex.count(order) == 0 {
        return Err(DataError::InvalidParameter(format!("complex has no simplices of order {order}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = values_for(complex, order, distribution, &mut rng)?;
    rng.set_stream(1);
    let known = random_mask(values.len(), missing_fraction, &mut rng);
    MdiInstance::new(order, values, known)
}

/// `count` masks over the same values, each from its own stream.
pub fn mdi_masks(instance: &MdiInstance, missing_fraction: f64, count: usize, seed: u64) -> Result<Vec<MdiInstance>, DataError> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(2 + i as u64);
            instance.with_mask(random_mask(instance.len(), missing_fraction, &mut rng))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complex() -> SimplicialComplex {
        coauthorship_complex(&CoauthorshipParams::desk_scale(5)).unwrap()
    }

    #[test]
    fn coauthorship_complex_has_triangles() {
        let c = complex();
        assert_eq!(c.max_order(), 2);
        assert!(c.count(1) > 100 && c.count(2) > 10, "{:?}", c.counts());
    }

    #[test]
    fn mask_hides_ceiling_fraction() {
        let c = complex();
        for frac in [0.1, 0.2, 0.3, 0.4, 0.5] {
            let inst = generate_mdi_instance(&c, 1, &ValueDistribution::default(), frac, 3).unwrap();
            assert_eq!(inst.missing_count(), (frac * inst.len() as f64).ceil() as usize);
            for i in 0..inst.len() {
                if inst.known[i] {
                    assert_eq!(inst.input[i], inst.values[i]);
                } else {
                    assert_eq!(inst.input[i], inst.known_median());
                }
            }
        }
    }

    #[test]
    fn tiny_fraction_keeps_inputs() {
        let c = SimplicialComplex::build(&[vec![0, 1, 2]]).unwrap();
        let inst = generate_mdi_instance(&c, 1, &ValueDistribution::default(), 1e-9, 1).unwrap();
        assert_eq!(inst.missing_count(), 1);
        let values = vec![3.0, 4.0, 5.0];
        let full = MdiInstance::new(1, values.clone(), vec![true; 3]).unwrap();
        assert_eq!(full.input, values);
    }

    #[test]
    fn deterministic_and_distinct_masks() {
        let c = complex();
        let a = generate_mdi_instance(&c, 1, &ValueDistribution::default(), 0.3, 9).unwrap();
        let b = generate_mdi_instance(&c, 1, &ValueDistribution::default(), 0.3, 9).unwrap();
        assert_eq!(a, b);
        let masks = mdi_masks(&a, 0.3, 10, 9).unwrap();
        for i in 0..10 {
            for j in i + 1..10 {
                assert_ne!(masks[i].known, masks[j].known);
            }
        }
        assert_eq!(masks, mdi_masks(&a, 0.3, 10, 9).unwrap());
    }

    #[test]
    fn collaboration_sums_aggregate_papers() {
        let c = SimplicialComplex::build(&[vec![0, 1, 2], vec![1, 2, 3]]).unwrap();
        let inst = generate_mdi_instance(&c, 1, &ValueDistribution::default(), 0.2, 4).unwrap();
        let e12 = c.find(&[1, 2]).unwrap();
        let e01 = c.find(&[0, 1]).unwrap();
        let e13 = c.find(&[1, 3]).unwrap();
        assert_eq!(inst.values[e12], inst.values[e01] + inst.values[e13]);
        assert!(inst.values.iter().all(|v| *v >= 1.0 && v.fract() == 0.0));
    }

    #[test]
    fn tolerance_boundary() {
        assert!(within_tolerance(1.049 * 200.0, 200.0));
        assert!(!within_tolerance(1.051 * 200.0, 200.0));
        let inst = MdiInstance::new(1, vec![100.0, 50.0], vec![true, false]).unwrap();
        assert_eq!(inst.accuracy(&[100.0, 50.0], true), 1.0);
        assert_eq!(inst.accuracy(&[100.0, 60.0], false), 0.5);
    }

    #[test]
    fn invalid_fraction() {
        let c = complex();
        assert!(generate_mdi_instance(&c, 1, &ValueDistribution::default(), 0.0, 1).is_err());
        assert!(generate_mdi_instance(&c, 1, &ValueDistribution::default(), 1.0, 1).is_err());
    }
}
