use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::{norm_of, Parameters};
use super::{EmbeddingConfig, EmbeddingError, EmbeddingSet, Model, Norm};
use crate::graph::{Graph, Triple};
use crate::term::TermId;

const RESAMPLE_TRIES: usize = 10;

/// A trained set plus the mean pair loss of every epoch.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub embeddings: EmbeddingSet,
    pub epoch_losses: Vec<f64>,
}

pub fn train(graph: &Graph, config: &EmbeddingConfig) -> Result<TrainOutcome, EmbeddingError> {
    train_with(graph, config, |_, _| {})
}

/// Like [`train`], calling `on_epoch(epoch, mean_loss)` after every epoch.
pub fn train_with(
    graph: &Graph,
    config: &EmbeddingConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainOutcome, EmbeddingError> {
    config.validate()?;
    let rdf_type = graph.rdf_type();
    let entities = graph.entities();
    let relations: Vec<TermId> = graph.predicates().collect();
    let mut ent_row = vec![usize::MAX; graph.term_count()];
    for (i, e) in entities.iter().enumerate() {
        ent_row[e.index()] = i;
    }
    let mut rel_row = vec![usize::MAX; graph.term_count()];
    for (i, r) in relations.iter().enumerate() {
        rel_row[r.index()] = i;
    }
    let training: Vec<(usize, usize, usize)> = graph
        .triples()
        .filter(|t| config.include_type_triples || Some(t.p) != rdf_type)
        .map(|t| {
            (
                ent_row[t.s.index()],
                rel_row[t.p.index()],
                ent_row[t.o.index()],
            )
        })
        .collect();
    if training.is_empty() {
        return Err(EmbeddingError::EmptyGraph);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = initialise(config, entities.len(), relations.len(), &mut rng);
    let mut grad = Parameters::zeros(
        config.model,
        config.dim,
        config.rel_dim,
        entities.len(),
        relations.len(),
    );
    let mut touched_e = Touched::new(entities.len());
    let mut touched_r = Touched::new(relations.len());
    let lr = config.learning_rate;
    let mut order: Vec<usize> = (0..training.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut pairs = 0usize;
        for batch in order.chunks(config.batch_size) {
            for &i in batch {
                let pos = training[i];
                for _ in 0..config.negatives_per_positive {
                    let neg = corrupt(pos, &entities, &relations, graph, &mut rng);
                    total += params.pair_loss_grad(config.norm, config.margin, pos, neg, &mut grad);
                    pairs += 1;
                    for e in [pos.0, pos.2, neg.0, neg.2] {
                        touched_e.mark(e);
                    }
                    touched_r.mark(pos.1);
                }
            }
            for &e in &touched_e.rows {
                let g = grad.entity_mut(e);
                let row = &mut params.entities[e * config.dim..(e + 1) * config.dim];
                step(row, g, lr);
                project_unit_ball(row);
            }
            for &r in &touched_r.rows {
                step_row(
                    &mut params.relations,
                    &mut grad.relations,
                    r,
                    config.rel_dim,
                    lr,
                );
                match config.model {
                    Model::TransE => {}
                    Model::TransH => {
                        step_row(
                            &mut params.hyperplanes,
                            &mut grad.hyperplanes,
                            r,
                            config.dim,
                            lr,
                        );
                        normalise(params.hyperplane_mut(r));
                    }
                    Model::TransR => {
                        let size = config.rel_dim * config.dim;
                        step_row(&mut params.projections, &mut grad.projections, r, size, lr);
                        project_unit_ball(params.relation_mut(r));
                    }
                }
            }
            touched_e.clear();
            touched_r.clear();
        }
        let mean = total / pairs as f64;
        on_epoch(epoch, mean);
        epoch_losses.push(mean);
    }

    let ent_terms = entities.iter().map(|&e| graph.term(e).clone()).collect();
    let rel_terms = relations.iter().map(|&r| graph.term(r).clone()).collect();
    let embeddings =
        EmbeddingSet::from_tables(params.narrow(config.norm, config.margin, ent_terms, rel_terms))?;
    Ok(TrainOutcome {
        embeddings,
        epoch_losses,
    })
}

fn initialise(
    config: &EmbeddingConfig,
    n_ent: usize,
    n_rel: usize,
    rng: &mut ChaCha8Rng,
) -> Parameters {
    let mut p = Parameters::zeros(config.model, config.dim, config.rel_dim, n_ent, n_rel);
    let bound = 6.0 / libm::sqrt(config.dim as f64);
    for x in p
        .entities
        .iter_mut()
        .chain(p.relations.iter_mut())
        .chain(p.hyperplanes.iter_mut())
    {
        *x = rng.random_range(-bound..bound);
    }
    for e in 0..n_ent {
        project_unit_ball(p.entity_mut(e));
    }
    for r in 0..n_rel {
        normalise(p.relation_mut(r));
        if config.model == Model::TransH {
            normalise(p.hyperplane_mut(r));
        }
        if config.model == Model::TransR {
            let m = p.projection_mut(r);
            if config.rel_dim == config.dim {
                for i in 0..config.dim {
                    m[i * config.dim + i] = 1.0;
                }
            } else {
                let b = 1.0 / libm::sqrt(config.dim as f64);
                for x in m.iter_mut() {
                    *x = rng.random_range(-b..b);
                }
            }
        }
    }
    p
}

fn corrupt(
    (h, r, t): (usize, usize, usize),
    entities: &[TermId],
    relations: &[TermId],
    graph: &Graph,
    rng: &mut ChaCha8Rng,
) -> (usize, usize, usize) {
    let replace_head = rng.random_bool(0.5);
    let mut candidate = (h, r, t);
    for _ in 0..RESAMPLE_TRIES {
        let e = rng.random_range(0..entities.len());
        candidate = if replace_head { (e, r, t) } else { (h, r, e) };
        let triple = Triple::new(entities[candidate.0], relations[r], entities[candidate.2]);
        if !graph.contains(triple) {
            break;
        }
    }
    candidate
}

struct Touched {
    flags: Vec<bool>,
    rows: Vec<usize>,
}

impl Touched {
    fn new(n: usize) -> Self {
        Touched {
            flags: vec![false; n],
            rows: Vec::new(),
        }
    }

    fn mark(&mut self, i: usize) {
        if !self.flags[i] {
            self.flags[i] = true;
            self.rows.push(i);
        }
    }

    fn clear(&mut self) {
        for &i in &self.rows {
            self.flags[i] = false;
        }
        self.rows.clear();
    }
}

/// `row -= lr · g`, then zeroes `g`.
fn step(row: &mut [f64], g: &mut [f64], lr: f64) {
    for (x, d) in row.iter_mut().zip(g.iter_mut()) {
        *x -= lr * *d;
        *d = 0.0;
    }
}

fn step_row(params: &mut [f64], grad: &mut [f64], row: usize, width: usize, lr: f64) {
    let range = row * width..(row + 1) * width;
    step(&mut params[range.clone()], &mut grad[range], lr);
}

fn project_unit_ball(v: &mut [f64]) {
    let n = norm_of(Norm::L2, v);
    if n > 1.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

fn normalise(v: &mut [f64]) {
    let n = norm_of(Norm::L2, v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}
