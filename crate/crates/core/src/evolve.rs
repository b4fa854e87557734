//! Genetic search over generator weights.
//!
//! A run has three stages: mRMR pre-selection of the network's input columns,
//! a randomly initialized population, and a number of epochs. In every epoch
//! each non-elite member is crossed with a tournament-selected partner, the
//! child is mutated and scored, and the child replaces its parent when it
//! scores strictly higher or, with probability `depreciation_eps`, anyway.
//! Pooling plans are shared by the whole population and refreshed once per
//! epoch from the best member's activations.

use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use ndarray::{Array2, ArrayView2};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{append_features, Dataset};
use crate::error::{Error, Result};
use crate::eval::Evaluator;
use crate::netgen::{generate_features, init_genome, update_pool_plans, GeneratorConfig, Genome, PoolPlan};
use crate::rng::{derive_seed, stream};
use crate::stats::mrmr_select;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolutionConfig {
    pub pop_size: usize,
    pub elite_size: usize,
    /// Epochs after initialization.
    pub generations: usize,
    /// Per-gene probability of inheriting from the first parent.
    pub crossover_prob: f64,
    pub mutation_rate: f64,
    pub mutation_sigma: f64,
    /// Probability of accepting a child that does not improve on its parent.
    pub depreciation_eps: f64,
    pub tournament_opponents: usize,
    pub seed: u64,
    /// Share of rows used for pooling correlations.
    pub corr_fraction: f64,
    /// Columns kept by mRMR; `None` keeps all of them.
    pub mrmr_keep: Option<usize>,
    pub mi_bins: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            pop_size: 16,
            elite_size: 4,
            generations: 30,
            crossover_prob: 0.5,
            mutation_rate: 0.1,
            mutation_sigma: 0.05,
            depreciation_eps: 0.05,
            tournament_opponents: 3,
            seed: 0,
            corr_fraction: 0.8,
            mrmr_keep: None,
            mi_bins: 10,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(format!("evolution config: {m}")));
        if self.pop_size < 2 {
            return bad(format!("pop_size {} must be >= 2", self.pop_size));
        }
        if self.elite_size >= self.pop_size {
            return bad(format!(
                "elite_size {} must be below pop_size {}",
                self.elite_size, self.pop_size
            ));
        }
        for (name, p) in [
            ("crossover_prob", self.crossover_prob),
            ("mutation_rate", self.mutation_rate),
            ("depreciation_eps", self.depreciation_eps),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} {p} outside [0, 1]"));
            }
        }
        if self.mutation_sigma < 0.0 {
            return bad("mutation_sigma must be >= 0".into());
        }
        if !(self.corr_fraction > 0.0 && self.corr_fraction <= 1.0) {
            return bad(format!("corr_fraction {} outside (0, 1]", self.corr_fraction));
        }
        // the member itself never plays, so q + 1 players come from pop_size - 1
        if self.tournament_opponents < 1 || self.tournament_opponents + 2 > self.pop_size {
            return bad(format!(
                "tournament_opponents {} must be within 1..=pop_size-2",
                self.tournament_opponents
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub genome: Genome,
    /// Mean cross-validated f1 of the dataset extended with this genome's columns.
    pub score: Option<f64>,
    pub id: u64,
}

impl Candidate {
    fn score_or_zero(&self) -> f64 {
        self.score.unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub members: Vec<Candidate>,
    pub generation: usize,
    /// (generation, best member score) after each generation.
    pub best_history: Vec<(usize, f64)>,
    /// Pooling plans every member is evaluated with in the next epoch.
    pub plans: Vec<PoolPlan>,
}

impl Population {
    /// Highest score, ties to the lowest id.
    pub fn best(&self) -> &Candidate {
        self.ranked()[0]
    }

    /// Members by descending score, ties by ascending id.
    pub fn ranked(&self) -> Vec<&Candidate> {
        let mut v: Vec<&Candidate> = self.members.iter().collect();
        v.sort_by(|a, b| {
            b.score_or_zero()
                .total_cmp(&a.score_or_zero())
                .then(a.id.cmp(&b.id))
        });
        v
    }
}

/// Round-robin tournament among `q + 1` members drawn without replacement,
/// skipping `exclude`. A win is a strictly higher score; most wins takes the
/// tournament, ties go to the higher score and then the lower id.
pub fn tournament_select<'p, R: Rng>(
    members: &'p [Candidate],
    exclude: u64,
    q: usize,
    rng: &mut R,
) -> Result<&'p Candidate> {
    let eligible: Vec<&Candidate> = members.iter().filter(|c| c.id != exclude).collect();
    if q < 1 || eligible.len() < q + 1 {
        return Err(Error::InvalidArgument(format!(
            "tournament of {} players needs that many eligible members, have {}",
            q + 1,
            eligible.len()
        )));
    }
    let players: Vec<&Candidate> = sample(rng, eligible.len(), q + 1)
        .into_iter()
        .map(|i| eligible[i])
        .collect();
    let wins: Vec<usize> = players
        .iter()
        .map(|a| {
            players
                .iter()
                .filter(|b| a.score_or_zero() > b.score_or_zero())
                .count()
        })
        .collect();
    let winner = (0..players.len())
        .max_by(|&i, &j| {
            wins[i]
                .cmp(&wins[j])
                .then(players[i].score_or_zero().total_cmp(&players[j].score_or_zero()))
                .then(players[j].id.cmp(&players[i].id))
        })
        .unwrap();
    Ok(players[winner])
}

/// Uniform crossover: each gene comes from `a` with probability `p`.
pub fn crossover<R: Rng>(a: &Genome, b: &Genome, p: f64, rng: &mut R) -> Result<Genome> {
    if a.layout != b.layout || a.weights.len() != b.weights.len() {
        return Err(Error::LayoutMismatch);
    }
    let weights = a
        .weights
        .iter()
        .zip(&b.weights)
        .map(|(&x, &y)| if rng.gen::<f64>() < p { x } else { y })
        .collect();
    Ok(Genome {
        weights,
        layout: a.layout.clone(),
    })
}

/// Add N(0, sigma) noise to each gene with probability `rate`.
pub fn mutate<R: Rng>(g: &Genome, rate: f64, sigma: f64, rng: &mut R) -> Genome {
    let mut out = g.clone();
    if rate <= 0.0 || sigma <= 0.0 {
        return out;
    }
    let noise = Normal::new(0.0, sigma).expect("sigma checked positive");
    for w in &mut out.weights {
        if rng.gen::<f64>() < rate {
            *w += noise.sample(rng);
        }
    }
    out
}

/// Replacement rule: strict improvement always, otherwise with probability `eps`.
pub fn accept<R: Rng>(child_score: f64, incumbent_score: f64, eps: f64, rng: &mut R) -> bool {
    child_score > incumbent_score || rng.gen::<f64>() < eps
}

/// Best candidate ever scored, with the plans and columns it was scored with.
#[derive(Debug, Clone)]
pub struct HallOfFame {
    pub candidate: Candidate,
    pub plans: Vec<PoolPlan>,
    pub features: Array2<f64>,
    pub generation: usize,
}

#[derive(Debug, Clone)]
pub struct EvolutionOutcome {
    pub best: HallOfFame,
    /// (generation, best score seen so far), initialization included.
    pub history: Vec<(usize, f64)>,
    /// Columns of the input dataset fed to the network, ascending.
    pub selected_features: Vec<usize>,
    /// Names the generated columns carry in the extended dataset.
    pub generated_names: Vec<String>,
    pub final_population: Population,
    pub evaluations: usize,
    pub cache_hits: usize,
}

fn content_hash(m: ArrayView2<'_, f64>) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    m.dim().hash(&mut h);
    for v in m.iter() {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

const STREAM_INIT: u64 = 1;
const STREAM_EPOCH: u64 = 2;
const STREAM_PLANS: u64 = 3;

/// State shared across the epochs of one run.
pub struct Evolution<'a, E: Evaluator + ?Sized> {
    ecfg: &'a EvolutionConfig,
    gcfg: &'a GeneratorConfig,
    base: &'a Dataset,
    inputs: Array2<f64>,
    selected: Vec<usize>,
    names: Vec<String>,
    evaluator: &'a E,
    cache: HashMap<u64, f64>,
    next_id: u64,
    hall_of_fame: Option<HallOfFame>,
    history: Vec<(usize, f64)>,
    evaluations: usize,
    cache_hits: usize,
}

impl<'a, E: Evaluator + ?Sized> Evolution<'a, E> {
    /// Runs mRMR on `base` (already prepared) to choose the network inputs.
    pub fn new(
        ecfg: &'a EvolutionConfig,
        gcfg: &'a GeneratorConfig,
        base: &'a Dataset,
        evaluator: &'a E,
    ) -> Result<Self> {
        ecfg.validate()?;
        gcfg.validate()?;
        let keep = ecfg.mrmr_keep.unwrap_or(base.n_cols()).min(base.n_cols());
        let mut selected = mrmr_select(base, keep, ecfg.mi_bins)?;
        // network positions follow the original column order
        selected.sort_unstable();
        let inputs = base.x().select(ndarray::Axis(1), &selected);
        let existing: std::collections::HashSet<&str> =
            base.columns().iter().map(|c| c.name.as_str()).collect();
        let mut prefix = String::from("gen_");
        while (0..gcfg.n_out).any(|i| existing.contains(format!("{prefix}{i}").as_str())) {
            prefix.insert(0, '_');
        }
        let names = (0..gcfg.n_out).map(|i| format!("{prefix}{i}")).collect();
        Ok(Self {
            ecfg,
            gcfg,
            base,
            inputs,
            selected,
            names,
            evaluator,
            cache: HashMap::new(),
            next_id: 0,
            hall_of_fame: None,
            history: Vec::new(),
            evaluations: 0,
            cache_hits: 0,
        })
    }

    pub fn inputs(&self) -> ArrayView2<'_, f64> {
        self.inputs.view()
    }

    pub fn generated_names(&self) -> &[String] {
        &self.names
    }

    pub fn hall_of_fame(&self) -> Option<&HallOfFame> {
        self.hall_of_fame.as_ref()
    }

    pub fn cache_hits(&self) -> usize {
        self.cache_hits
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    fn plans_for(&self, best: Option<&Genome>) -> Result<Vec<PoolPlan>> {
        update_pool_plans(
            best,
            self.gcfg,
            self.inputs.view(),
            self.ecfg.corr_fraction,
            derive_seed(self.ecfg.seed, &[STREAM_PLANS]),
        )
    }

    /// Extended dataset for a set of generated columns.
    pub fn extended(&self, features: ArrayView2<'_, f64>) -> Result<Dataset> {
        append_features(self.base, features, &self.names)
    }

    /// Score genomes under `plans`, fitting once per distinct feature matrix.
    fn score_all(&mut self, genomes: &[&Genome], plans: &[PoolPlan]) -> Result<Vec<(f64, Array2<f64>)>> {
        let features: Vec<Array2<f64>> = genomes
            .iter()
            .map(|g| generate_features(self.inputs.view(), g, self.gcfg, plans))
            .collect::<Result<_>>()?;
        let keys: Vec<u64> = features.iter().map(|f| content_hash(f.view())).collect();
        let mut todo: Vec<usize> = Vec::new();
        for (i, k) in keys.iter().enumerate() {
            if self.cache.contains_key(k) || todo.iter().any(|&j| keys[j] == *k) {
                self.cache_hits += 1;
            } else {
                todo.push(i);
            }
        }
        let this = &*self;
        let fresh: Vec<(u64, f64)> = todo
            .par_iter()
            .map(|&i| {
                let d = this.extended(features[i].view())?;
                let s = this.evaluator.score(&d)?;
                Ok((keys[i], s))
            })
            .collect::<Result<_>>()?;
        self.evaluations += fresh.len();
        self.cache.extend(fresh);
        Ok(features
            .into_iter()
            .zip(keys)
            .map(|(f, k)| (self.cache[&k], f))
            .collect())
    }

    fn offer_hall_of_fame(&mut self, c: &Candidate, plans: &[PoolPlan], features: &Array2<f64>, generation: usize) {
        let better = match &self.hall_of_fame {
            None => true,
            Some(h) => c.score_or_zero() > h.candidate.score_or_zero(),
        };
        if better {
            self.hall_of_fame = Some(HallOfFame {
                candidate: c.clone(),
                plans: plans.to_vec(),
                features: features.clone(),
                generation,
            });
        }
    }

    fn record_history(&mut self, generation: usize) {
        let best = self.hall_of_fame.as_ref().map_or(0.0, |h| h.candidate.score_or_zero());
        self.history.push((generation, best));
    }

    pub fn init_population(&mut self) -> Result<Population> {
        let plans = self.plans_for(None)?;
        let width = self.inputs.ncols();
        let genomes: Vec<Genome> = (0..self.ecfg.pop_size)
            .map(|i| init_genome(self.gcfg, width, derive_seed(self.ecfg.seed, &[STREAM_INIT, i as u64])))
            .collect();
        let refs: Vec<&Genome> = genomes.iter().collect();
        let scored = self.score_all(&refs, &plans)?;
        let mut members = Vec::with_capacity(genomes.len());
        for (genome, (score, features)) in genomes.into_iter().zip(scored) {
            let c = Candidate {
                genome,
                score: Some(score),
                id: self.next_id,
            };
            self.next_id += 1;
            self.offer_hall_of_fame(&c, &plans, &features, 0);
            members.push(c);
        }
        let mut pop = Population {
            members,
            generation: 0,
            best_history: Vec::new(),
            plans,
        };
        pop.best_history.push((0, pop.best().score_or_zero()));
        self.record_history(0);
        Ok(pop)
    }

    pub fn evolve_epoch(&mut self, pop: &Population) -> Result<Population> {
        let generation = pop.generation + 1;
        let ecfg = self.ecfg;
        let elites: Vec<u64> = pop
            .ranked()
            .iter()
            .take(ecfg.elite_size)
            .map(|c| c.id)
            .collect();

        let mut slots = Vec::new();
        let mut children = Vec::new();
        let mut rngs = Vec::new();
        for (slot, member) in pop.members.iter().enumerate() {
            if elites.contains(&member.id) {
                continue;
            }
            let mut rng = stream(ecfg.seed, &[STREAM_EPOCH, generation as u64, member.id]);
            let partner = tournament_select(&pop.members, member.id, ecfg.tournament_opponents, &mut rng)?;
            let child = crossover(&member.genome, &partner.genome, ecfg.crossover_prob, &mut rng)?;
            let child = mutate(&child, ecfg.mutation_rate, ecfg.mutation_sigma, &mut rng);
            slots.push(slot);
            children.push(child);
            rngs.push(rng);
        }

        let refs: Vec<&Genome> = children.iter().collect();
        let scored = self.score_all(&refs, &pop.plans)?;
        let mut members = pop.members.clone();
        for (((slot, child), (score, features)), mut rng) in
            slots.into_iter().zip(children).zip(scored).zip(rngs)
        {
            let incumbent = members[slot].score_or_zero();
            if accept(score, incumbent, ecfg.depreciation_eps, &mut rng) {
                let c = Candidate {
                    genome: child,
                    score: Some(score),
                    id: self.next_id,
                };
                self.next_id += 1;
                self.offer_hall_of_fame(&c, &pop.plans, &features, generation);
                members[slot] = c;
            }
        }

        let mut next = Population {
            members,
            generation,
            best_history: pop.best_history.clone(),
            plans: Vec::new(),
        };
        let best_score = next.best().score_or_zero();
        next.best_history.push((generation, best_score));
        next.plans = self.plans_for(Some(&next.best().genome))?;
        self.record_history(generation);
        Ok(next)
    }

    /// Initialization followed by `generations` epochs.
    pub fn run(mut self) -> Result<EvolutionOutcome> {
        let mut pop = self.init_population()?;
        for _ in 0..self.ecfg.generations {
            pop = self.evolve_epoch(&pop)?;
        }
        Ok(EvolutionOutcome {
            best: self.hall_of_fame.expect("initial population is scored"),
            history: self.history,
            selected_features: self.selected,
            generated_names: self.names,
            final_population: pop,
            evaluations: self.evaluations,
            cache_hits: self.cache_hits,
        })
    }
}

pub fn run_evolution<E: Evaluator + ?Sized>(
    ecfg: &EvolutionConfig,
    gcfg: &GeneratorConfig,
    d: &Dataset,
    evaluator: &E,
) -> Result<EvolutionOutcome> {
    Evolution::new(ecfg, gcfg, d, evaluator)?.run()
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::netgen::GenomeLayout;

    fn genome_of(values: Vec<f64>) -> Genome {
        let cfg = GeneratorConfig {
            conv_layers: 1,
            channels: 1,
            kernel: 1,
            mlp_hidden: vec![],
            ..Default::default()
        };
        // pad the layout's total to the requested length
        let mut layout = GenomeLayout::new(&cfg, 2);
        layout.total = values.len();
        Genome {
            weights: values,
            layout,
        }
    }

    fn cand(id: u64, score: f64) -> Candidate {
        Candidate {
            genome: genome_of(vec![0.0; 4]),
            score: Some(score),
            id,
        }
    }

    #[test]
    fn tournament_total_order_returns_max() {
        let members: Vec<Candidate> = (0..4).map(|i| cand(i, 0.1 * i as f64)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let w = tournament_select(&members, 99, 3, &mut rng).unwrap();
            assert_eq!(w.id, 3);
        }
    }

    #[test]
    fn tournament_pairwise_and_ties() {
        let members = vec![cand(5, 0.4), cand(2, 0.9)];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(tournament_select(&members, 99, 1, &mut rng).unwrap().id, 2);
        let equal: Vec<Candidate> = [7, 3, 9].iter().map(|&i| cand(i, 0.5)).collect();
        assert_eq!(tournament_select(&equal, 99, 2, &mut rng).unwrap().id, 3);
        assert!(tournament_select(&equal, 3, 2, &mut rng).is_err());
        assert!(tournament_select(&equal, 3, 0, &mut rng).is_err());
    }

    #[test]
    fn tournament_never_returns_excluded() {
        let members: Vec<Candidate> = (0..6).map(|i| cand(i, 0.1 * i as f64)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            assert_ne!(tournament_select(&members, 5, 2, &mut rng).unwrap().id, 5);
        }
    }

    #[test]
    fn crossover_boundaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = genome_of(vec![1.0, 2.0, 3.0]);
        let b = genome_of(vec![-1.0, -2.0, -3.0]);
        assert_eq!(crossover(&a, &a, 0.5, &mut rng).unwrap(), a);
        assert_eq!(crossover(&a, &b, 1.0, &mut rng).unwrap(), a);
        assert_eq!(crossover(&a, &b, 0.0, &mut rng).unwrap(), b);
        let c = genome_of(vec![0.0; 5]);
        assert!(matches!(crossover(&a, &c, 0.5, &mut rng), Err(Error::LayoutMismatch)));
    }

    #[test]
    fn crossover_half_mix() {
        // Binomial(1000, 0.5) leaves [450, 550] with probability ≈ 0.9986
        let a = genome_of(vec![0.0; 1000]);
        let b = genome_of(vec![1.0; 1000]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let child = crossover(&a, &b, 0.5, &mut rng).unwrap();
        let mean = child.weights.iter().sum::<f64>() / 1000.0;
        assert!((0.45..=0.55).contains(&mean), "mean {mean}");
    }

    #[test]
    fn mutation_noops_and_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = genome_of((0..10_000).map(|i| i as f64 * 1e-3).collect());
        assert_eq!(mutate(&g, 0.0, 0.05, &mut rng), g);
        assert_eq!(mutate(&g, 1.0, 0.0, &mut rng), g);
        let m = mutate(&g, 1.0, 0.05, &mut rng);
        let deltas: Vec<f64> = m.weights.iter().zip(&g.weights).map(|(a, b)| a - b).collect();
        let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
        let sd = (deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (deltas.len() - 1) as f64).sqrt();
        assert!((0.045..=0.055).contains(&sd), "sd {sd}");
    }

    #[test]
    fn acceptance_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for eps in [0.0, 0.5, 1.0] {
            assert!(accept(0.93, 0.91, eps, &mut rng));
        }
        for _ in 0..100 {
            assert!(!accept(0.90, 0.91, 0.0, &mut rng));
            assert!(accept(0.90, 0.91, 1.0, &mut rng));
        }
    }

    #[test]
    fn config_validation() {
        assert!(EvolutionConfig::default().validate().is_ok());
        let bad = EvolutionConfig {
            elite_size: 16,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = EvolutionConfig {
            depreciation_eps: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
