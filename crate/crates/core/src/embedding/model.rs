use alloc::vec;
use alloc::vec::Vec;

use super::{EmbeddingSet, EmbeddingTables, Model, Norm};

/// Working `f64` parameters of a translation model, row-major.
///
/// Entity rows have `dim` entries, relation rows `rel_dim`. TransH keeps one
/// unit normal of length `dim` per relation in `hyperplanes`; TransR keeps
/// one `rel_dim × dim` matrix per relation in `projections`.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub model: Model,
    pub dim: usize,
    pub rel_dim: usize,
    pub entities: Vec<f64>,
    pub relations: Vec<f64>,
    pub hyperplanes: Vec<f64>,
    pub projections: Vec<f64>,
}

/// `‖v‖₁` or `‖v‖₂`.
pub fn norm_of(norm: Norm, v: &[f64]) -> f64 {
    match norm {
        Norm::L1 => v.iter().map(|x| x.abs()).sum(),
        Norm::L2 => libm::sqrt(v.iter().map(|x| x * x).sum()),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Parameters {
    /// Zero-filled tables for `n_entities` and `n_relations`.
    pub fn zeros(
        model: Model,
        dim: usize,
        rel_dim: usize,
        n_entities: usize,
        n_relations: usize,
    ) -> Self {
        Parameters {
            model,
            dim,
            rel_dim,
            entities: vec![0.0; n_entities * dim],
            relations: vec![0.0; n_relations * rel_dim],
            hyperplanes: if model == Model::TransH {
                vec![0.0; n_relations * dim]
            } else {
                Vec::new()
            },
            projections: if model == Model::TransR {
                vec![0.0; n_relations * rel_dim * dim]
            } else {
                Vec::new()
            },
        }
    }

    pub fn from_set(set: &EmbeddingSet) -> Self {
        let t = set.tables();
        let widen = |v: &[f32]| v.iter().map(|&x| f64::from(x)).collect::<Vec<f64>>();
        Parameters {
            model: t.model,
            dim: t.dim,
            rel_dim: t.rel_dim,
            entities: widen(&t.entity_vecs),
            relations: widen(&t.relation_vecs),
            hyperplanes: widen(&t.hyperplanes),
            projections: widen(&t.projections),
        }
    }

    pub(crate) fn narrow(
        &self,
        norm: Norm,
        margin: f64,
        entities: Vec<crate::Term>,
        relations: Vec<crate::Term>,
    ) -> EmbeddingTables {
        let narrow = |v: &[f64]| v.iter().map(|&x| x as f32).collect::<Vec<f32>>();
        EmbeddingTables {
            model: self.model,
            norm,
            dim: self.dim,
            rel_dim: self.rel_dim,
            margin,
            entities,
            relations,
            entity_vecs: narrow(&self.entities),
            relation_vecs: narrow(&self.relations),
            hyperplanes: narrow(&self.hyperplanes),
            projections: narrow(&self.projections),
        }
    }

    pub fn n_entities(&self) -> usize {
        self.entities.len() / self.dim
    }

    pub fn n_relations(&self) -> usize {
        self.relations.len() / self.rel_dim
    }

    pub fn entity(&self, i: usize) -> &[f64] {
        &self.entities[i * self.dim..(i + 1) * self.dim]
    }

    pub fn entity_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.entities[i * self.dim..(i + 1) * self.dim]
    }

    pub fn relation(&self, r: usize) -> &[f64] {
        &self.relations[r * self.rel_dim..(r + 1) * self.rel_dim]
    }

    pub fn relation_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.relations[r * self.rel_dim..(r + 1) * self.rel_dim]
    }

    pub fn hyperplane(&self, r: usize) -> &[f64] {
        &self.hyperplanes[r * self.dim..(r + 1) * self.dim]
    }

    pub fn hyperplane_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.hyperplanes[r * self.dim..(r + 1) * self.dim]
    }

    pub fn projection(&self, r: usize) -> &[f64] {
        let size = self.rel_dim * self.dim;
        &self.projections[r * size..(r + 1) * size]
    }

    pub fn projection_mut(&mut self, r: usize) -> &mut [f64] {
        let size = self.rel_dim * self.dim;
        &mut self.projections[r * size..(r + 1) * size]
    }

    /// The translation residual `d` with `g = ‖d‖`, computed from explicit
    /// head and tail vectors so callers can substitute type vectors.
    pub fn residual(&self, h: &[f64], r: usize, t: &[f64]) -> Vec<f64> {
        let rv = self.relation(r);
        match self.model {
            Model::TransE => h
                .iter()
                .zip(rv)
                .zip(t)
                .map(|((h, r), t)| h + r - t)
                .collect(),
            Model::TransH => {
                let w = self.hyperplane(r);
                let a: Vec<f64> = h.iter().zip(t).map(|(h, t)| h - t).collect();
                let wa = dot(w, &a);
                a.iter()
                    .zip(w)
                    .zip(rv)
                    .map(|((a, w), r)| a - wa * w + r)
                    .collect()
            }
            Model::TransR => {
                let m = self.projection(r);
                let a: Vec<f64> = h.iter().zip(t).map(|(h, t)| h - t).collect();
                (0..self.rel_dim)
                    .map(|i| dot(&m[i * self.dim..(i + 1) * self.dim], &a) + rv[i])
                    .collect()
            }
        }
    }

    /// `g(h, r, t)` for arbitrary head and tail vectors.
    pub fn score_vectors(&self, norm: Norm, h: &[f64], r: usize, t: &[f64]) -> f64 {
        norm_of(norm, &self.residual(h, r, t))
    }

    /// `g(h, r, t)` for entity rows.
    pub fn score(&self, norm: Norm, h: usize, r: usize, t: usize) -> f64 {
        self.score_vectors(norm, self.entity(h), r, self.entity(t))
    }

    /// Adds `scale · ∂g(h, r, t)/∂θ` into `grad`, which must share this
    /// shape.
    pub fn accumulate_score_grad(
        &self,
        norm: Norm,
        (h, r, t): (usize, usize, usize),
        scale: f64,
        grad: &mut Parameters,
    ) {
        let d = self.residual(self.entity(h), r, self.entity(t));
        let u: Vec<f64> = match norm {
            Norm::L1 => d
                .iter()
                .map(|&x| {
                    if x > 0.0 {
                        1.0
                    } else if x < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                })
                .collect(),
            Norm::L2 => {
                let n = norm_of(Norm::L2, &d);
                if n == 0.0 {
                    vec![0.0; d.len()]
                } else {
                    d.iter().map(|x| x / n).collect()
                }
            }
        };
        for (g, u) in grad.relation_mut(r).iter_mut().zip(&u) {
            *g += scale * u;
        }
        let dim = self.dim;
        match self.model {
            Model::TransE => {
                add_scaled(grad.entity_mut(h), &u, scale);
                add_scaled(grad.entity_mut(t), &u, -scale);
            }
            Model::TransH => {
                let w = self.hyperplane(r);
                let a: Vec<f64> = self
                    .entity(h)
                    .iter()
                    .zip(self.entity(t))
                    .map(|(h, t)| h - t)
                    .collect();
                let wu = dot(w, &u);
                let wa = dot(w, &a);
                let ga: Vec<f64> = u.iter().zip(w).map(|(u, w)| u - wu * w).collect();
                add_scaled(grad.entity_mut(h), &ga, scale);
                add_scaled(grad.entity_mut(t), &ga, -scale);
                let gw: Vec<f64> = a.iter().zip(&u).map(|(a, u)| -(wu * a + wa * u)).collect();
                add_scaled(grad.hyperplane_mut(r), &gw, scale);
            }
            Model::TransR => {
                let m = self.projection(r);
                let a: Vec<f64> = self
                    .entity(h)
                    .iter()
                    .zip(self.entity(t))
                    .map(|(h, t)| h - t)
                    .collect();
                let mut mtu = vec![0.0; dim];
                for (i, ui) in u.iter().enumerate() {
                    for (j, acc) in mtu.iter_mut().enumerate() {
                        *acc += m[i * dim + j] * ui;
                    }
                }
                add_scaled(grad.entity_mut(h), &mtu, scale);
                add_scaled(grad.entity_mut(t), &mtu, -scale);
                let gm = grad.projection_mut(r);
                for (i, ui) in u.iter().enumerate() {
                    for (j, aj) in a.iter().enumerate() {
                        gm[i * dim + j] += scale * ui * aj;
                    }
                }
            }
        }
    }

    /// `max(0, γ + g(pos) - g(neg))`.
    pub fn pair_loss(
        &self,
        norm: Norm,
        margin: f64,
        pos: (usize, usize, usize),
        neg: (usize, usize, usize),
    ) -> f64 {
        let l =
            margin + self.score(norm, pos.0, pos.1, pos.2) - self.score(norm, neg.0, neg.1, neg.2);
        l.max(0.0)
    }

    /// Returns the pair loss and, when it is positive, adds its gradient into
    /// `grad`.
    pub fn pair_loss_grad(
        &self,
        norm: Norm,
        margin: f64,
        pos: (usize, usize, usize),
        neg: (usize, usize, usize),
        grad: &mut Parameters,
    ) -> f64 {
        let loss = self.pair_loss(norm, margin, pos, neg);
        if loss > 0.0 {
            self.accumulate_score_grad(norm, pos, 1.0, grad);
            self.accumulate_score_grad(norm, neg, -1.0, grad);
        }
        loss
    }

    /// Flat view of every parameter, in table order.
    pub fn flat(&self) -> impl Iterator<Item = &f64> {
        self.entities
            .iter()
            .chain(&self.relations)
            .chain(&self.hyperplanes)
            .chain(&self.projections)
    }

    pub fn flat_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.entities
            .iter_mut()
            .chain(self.relations.iter_mut())
            .chain(self.hyperplanes.iter_mut())
            .chain(self.projections.iter_mut())
    }
}

fn add_scaled(dst: &mut [f64], src: &[f64], scale: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += scale * s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_params(model: Model, rng: &mut ChaCha8Rng) -> Parameters {
        let (dim, rel_dim) = if model == Model::TransR {
            (5, 4)
        } else {
            (5, 5)
        };
        let mut p = Parameters::zeros(model, dim, rel_dim, 4, 2);
        for x in p.flat_mut() {
            *x = rng.random_range(-1.0..1.0);
        }
        p
    }

    /// Central differences of the pair loss against the analytic gradient
    /// on random instances. Points too close to a kink of the L1 norm or the
    /// hinge are resampled.
    #[test]
    fn analytic_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let eps = 1e-6;
        for model in [Model::TransE, Model::TransH, Model::TransR] {
            for norm in [Norm::L1, Norm::L2] {
                let mut checked = 0;
                while checked < 20 {
                    let p = random_params(model, &mut rng);
                    let pos = (
                        rng.random_range(0..4),
                        rng.random_range(0..2),
                        rng.random_range(0..4),
                    );
                    let neg = (rng.random_range(0..4), pos.1, rng.random_range(0..4));
                    let margin = 2.0;
                    let kinked = [pos, neg].iter().any(|&(h, r, t)| {
                        p.residual(p.entity(h), r, p.entity(t))
                            .iter()
                            .any(|x| x.abs() < 1e-3)
                    });
                    let loss = p.pair_loss(norm, margin, pos, neg);
                    if kinked || loss < 1e-3 {
                        continue;
                    }
                    let mut grad = Parameters::zeros(model, p.dim, p.rel_dim, 4, 2);
                    p.pair_loss_grad(norm, margin, pos, neg, &mut grad);
                    let analytic: Vec<f64> = grad.flat().copied().collect();
                    // a locally constant loss, e.g. (a, r, a) against (b, r, b) under TransE
                    if analytic.iter().all(|&x| x.abs() < 1e-9) {
                        continue;
                    }
                    let mut numeric = Vec::with_capacity(analytic.len());
                    for k in 0..analytic.len() {
                        let mut plus = p.clone();
                        *plus.flat_mut().nth(k).unwrap() += eps;
                        let mut minus = p.clone();
                        *minus.flat_mut().nth(k).unwrap() -= eps;
                        numeric.push(
                            (plus.pair_loss(norm, margin, pos, neg)
                                - minus.pair_loss(norm, margin, pos, neg))
                                / (2.0 * eps),
                        );
                    }
                    let diff: f64 = libm::sqrt(
                        analytic
                            .iter()
                            .zip(&numeric)
                            .map(|(a, n)| (a - n) * (a - n))
                            .sum(),
                    );
                    let scale: f64 =
                        libm::sqrt(analytic.iter().map(|a| a * a).sum::<f64>()).max(1e-12);
                    assert!(
                        diff / scale < 1e-4,
                        "{model} {norm:?}: relative error {}",
                        diff / scale
                    );
                    checked += 1;
                }
            }
        }
    }

    #[test]
    fn transh_and_transr_reduce_to_transe() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = random_params(Model::TransE, &mut rng);
        let mut h = Parameters::zeros(Model::TransH, 5, 5, 4, 2);
        h.entities.clone_from(&e.entities);
        h.relations.clone_from(&e.relations);
        let mut r = Parameters::zeros(Model::TransR, 5, 5, 4, 2);
        r.entities.clone_from(&e.entities);
        r.relations.clone_from(&e.relations);
        for rel in 0..2 {
            let m = r.projection_mut(rel);
            for i in 0..5 {
                m[i * 5 + i] = 1.0;
            }
        }
        for norm in [Norm::L1, Norm::L2] {
            for (a, b, c) in [(0, 0, 1), (2, 1, 3), (3, 0, 3)] {
                let base = e.score(norm, a, b, c);
                assert!((h.score(norm, a, b, c) - base).abs() < 1e-9);
                assert!((r.score(norm, a, b, c) - base).abs() < 1e-9);
            }
        }
    }
}
