//! Stage two: NSGA-II over the interior control points of NURBS paths.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::evaluate::{evaluate_curve, RouteObjective};
use super::pareto::Archive;
use super::NurbsCurve;
use crate::error::{Error, Result};
use crate::par;

/// `a` dominates `b`: no worse anywhere, strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Fast non-dominated sorting; rank 0 is the non-dominated front.
pub fn non_dominated_sort(vectors: &[Vec<f64>]) -> Vec<usize> {
    let n = vectors.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if dominates(&vectors[i], &vectors[j]) {
                dominates_list[i].push(j);
                dominated_by[j] += 1;
            } else if dominates(&vectors[j], &vectors[i]) {
                dominates_list[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut rank = vec![usize::MAX; n];
    let mut front: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    let mut r = 0;
    while !front.is_empty() {
        let mut next = Vec::new();
        for &i in &front {
            rank[i] = r;
            for &j in &dominates_list[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        front = next;
        r += 1;
    }
    rank
}

/// Crowding distance within one front. Boundary members of every objective
/// get `+inf`; others sum their range-normalized neighbour gaps.
pub fn crowding_distance(front: &[Vec<f64>]) -> Vec<f64> {
    let n = front.len();
    let mut d = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let e = front[0].len();
    let mut order: Vec<usize> = (0..n).collect();
    #[allow(clippy::needless_range_loop)]
    for m in 0..e {
        order.sort_by(|&a, &b| front[a][m].total_cmp(&front[b][m]).then(a.cmp(&b)));
        let lo = front[order[0]][m];
        let hi = front[order[n - 1]][m];
        d[order[0]] = f64::INFINITY;
        d[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if !(range > 0.0) || !range.is_finite() {
            continue;
        }
        for w in 1..n - 1 {
            let gap = front[order[w + 1]][m] - front[order[w - 1]][m];
            if gap.is_finite() {
                d[order[w]] += gap / range;
            }
        }
    }
    d
}

/// Genome, knot vector and cached objectives of one candidate path.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    /// Interior control points, flattened `x, y, z` triples.
    pub genome: Vec<f64>,
    pub knots: Vec<f64>,
    pub objectives: Vec<f64>,
}

impl Individual {
    /// Control point count of the curve, endpoints included.
    pub fn n_p(&self) -> usize {
        self.genome.len() / 3 + 2
    }

    pub fn curve(&self, start: [f64; 3], end: [f64; 3]) -> NurbsCurve {
        let mut control = Vec::with_capacity(self.n_p());
        control.push(start);
        control.extend(self.genome.chunks_exact(3).map(|c| [c[0], c[1], c[2]]));
        control.push(end);
        NurbsCurve::new(control, self.knots.clone())
            .expect("individual keeps a consistent knot vector")
    }
}

/// Tuning of [`evolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct EvolveConfig {
    pub population: usize,
    pub generations: usize,
    /// Standard deviation of Gaussian gene mutation per axis, meters.
    pub mutation_sigma: [f64; 3],
    /// Probability that an offspring is mutated at all.
    pub mutation_prob: f64,
    /// Per-gene mutation probability; `None` means `1 / D`.
    pub gene_prob: Option<f64>,
    pub crossover_prob: f64,
    /// Waypoint spacing used when scoring curves.
    pub delta: f64,
    /// Navigation bounds per axis as `[min, max]`.
    pub bounds: [[f64; 2]; 3],
    pub seed: u64,
}

impl EvolveConfig {
    pub fn new(bounds: [[f64; 2]; 3], seed: u64) -> Self {
        EvolveConfig {
            population: 700,
            generations: 100,
            mutation_sigma: [10.0; 3],
            mutation_prob: 1.0,
            gene_prob: None,
            crossover_prob: 0.9,
            delta: 5.0,
            bounds,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::input("population needs at least 2 individuals"));
        }
        for p in [self.mutation_prob, self.crossover_prob]
            .into_iter()
            .chain(self.gene_prob)
        {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::input(format!("probability {p} outside [0, 1]")));
            }
        }
        if self.mutation_sigma.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::input("mutation step sizes must be non-negative"));
        }
        if !(self.delta > 0.0) {
            return Err(Error::input("waypoint spacing must be positive"));
        }
        if self.bounds.iter().any(|b| !(b[0] <= b[1])) {
            return Err(Error::input("navigation bounds are inverted"));
        }
        Ok(())
    }
}

/// Final population front plus ranks and crowding of its members.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoSet {
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub members: Vec<Individual>,
    pub ranks: Vec<usize>,
    pub crowding: Vec<f64>,
}

impl ParetoSet {
    pub fn objectives(&self) -> Vec<Vec<f64>> {
        self.members.iter().map(|m| m.objectives.clone()).collect()
    }

    pub fn curve(&self, i: usize) -> NurbsCurve {
        self.members[i].curve(self.start, self.end)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

struct Context<'a> {
    objectives: &'a [RouteObjective],
    cfg: &'a EvolveConfig,
    start: [f64; 3],
    end: [f64; 3],
}

impl Context<'_> {
    fn clamp(&self, genome: &mut [f64]) {
        for (g, v) in genome.iter_mut().enumerate() {
            let [lo, hi] = self.cfg.bounds[g % 3];
            *v = v.clamp(lo, hi);
        }
    }

    fn evaluate(&self, pop: &mut [Individual]) {
        let scores = par::map_slice(pop, |ind| {
            evaluate_curve(
                &ind.curve(self.start, self.end),
                self.objectives,
                self.cfg.delta,
            )
        });
        for (ind, s) in pop.iter_mut().zip(scores) {
            ind.objectives = s;
        }
    }

    fn mutate(&self, genome: &mut [f64], rng: &mut ChaCha8Rng) {
        if genome.is_empty() || !rng.random_bool(self.cfg.mutation_prob) {
            return;
        }
        let p = self.cfg.gene_prob.unwrap_or(1.0 / genome.len() as f64);
        for (g, v) in genome.iter_mut().enumerate() {
            if rng.random_bool(p) {
                let sigma = self.cfg.mutation_sigma[g % 3];
                if sigma > 0.0 {
                    *v += Normal::new(0.0, sigma).expect("positive sigma").sample(rng);
                }
            }
        }
        self.clamp(genome);
    }
}

/// Sorts `pop` into ranks and crowding distances.
fn rank_and_crowd(vectors: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    let ranks = non_dominated_sort(vectors);
    let mut crowd = vec![0.0; vectors.len()];
    let max_rank = ranks.iter().copied().max().unwrap_or(0);
    for r in 0..=max_rank {
        let members: Vec<usize> = (0..vectors.len()).filter(|&i| ranks[i] == r).collect();
        let front: Vec<Vec<f64>> = members.iter().map(|&i| vectors[i].clone()).collect();
        for (&i, d) in members.iter().zip(crowding_distance(&front)) {
            crowd[i] = d;
        }
    }
    (ranks, crowd)
}

fn better(a: usize, b: usize, ranks: &[usize], crowd: &[f64]) -> bool {
    ranks[a] < ranks[b] || (ranks[a] == ranks[b] && crowd[a] > crowd[b])
}

/// Elitist truncation of `pool` to `n` members by rank then crowding.
fn select(pool: Vec<Individual>, n: usize) -> Vec<Individual> {
    let vectors: Vec<Vec<f64>> = pool.iter().map(|i| i.objectives.clone()).collect();
    let (ranks, crowd) = rank_and_crowd(&vectors);
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| {
        ranks[a]
            .cmp(&ranks[b])
            .then(crowd[b].total_cmp(&crowd[a]))
            .then(a.cmp(&b))
    });
    let mut slots: Vec<Option<Individual>> = pool.into_iter().map(Some).collect();
    order
        .into_iter()
        .take(n)
        .map(|i| slots[i].take().expect("each index once"))
        .collect()
}

/// Runs NSGA-II seeded with `initial` curves and returns the non-dominated
/// members of the final population.
pub fn evolve(
    initial: &[NurbsCurve],
    objectives: &[RouteObjective],
    cfg: &EvolveConfig,
) -> Result<ParetoSet> {
    evolve_with_observer(initial, objectives, cfg, |_, _| {})
}

/// [`evolve`] that reports the external archive after the initial
/// population (generation 0) and after every generation.
pub fn evolve_with_observer(
    initial: &[NurbsCurve],
    objectives: &[RouteObjective],
    cfg: &EvolveConfig,
    mut observe: impl FnMut(usize, &Archive),
) -> Result<ParetoSet> {
    cfg.validate()?;
    let first = initial
        .first()
        .ok_or_else(|| Error::input("evolution needs at least one initial curve"))?;
    let (start, end) = (first.start(), first.end());
    if let Some(i) = initial
        .iter()
        .position(|c| c.start() != start || c.end() != end)
    {
        return Err(Error::input(format!(
            "initial curve {i} does not share the endpoints of curve 0"
        )));
    }
    if objectives.is_empty() {
        return Err(Error::input("no objectives to optimize"));
    }
    let ctx = Context {
        objectives,
        cfg,
        start,
        end,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let seeds: Vec<Individual> = initial
        .iter()
        .map(|c| {
            let cp = c.control_points();
            let mut genome: Vec<f64> = cp[1..cp.len() - 1].iter().flatten().copied().collect();
            ctx.clamp(&mut genome);
            Individual {
                genome,
                knots: c.knots().to_vec(),
                objectives: Vec::new(),
            }
        })
        .collect();
    let mut pop = Vec::with_capacity(cfg.population);
    for i in 0..cfg.population {
        let mut ind = seeds[i % seeds.len()].clone();
        if i >= seeds.len() {
            ctx.mutate(&mut ind.genome, &mut rng);
        }
        pop.push(ind);
    }
    ctx.evaluate(&mut pop);
    let mut archive = Archive::default();
    archive.extend(pop.iter().map(|i| i.objectives.as_slice()));
    observe(0, &archive);

    for gen in 1..=cfg.generations {
        let vectors: Vec<Vec<f64>> = pop.iter().map(|i| i.objectives.clone()).collect();
        let (ranks, crowd) = rank_and_crowd(&vectors);
        let idx: Vec<usize> = (0..pop.len()).collect();
        let tournament = |rng: &mut ChaCha8Rng| {
            let a = *idx.choose(rng).expect("non-empty");
            let b = *idx.choose(rng).expect("non-empty");
            if better(b, a, &ranks, &crowd) {
                b
            } else {
                a
            }
        };
        let mut offspring = Vec::with_capacity(cfg.population);
        while offspring.len() < cfg.population {
            let pa = &pop[tournament(&mut rng)];
            let pb = &pop[tournament(&mut rng)];
            let (mut ca, mut cb) = (pa.clone(), pb.clone());
            let points = pa.genome.len().min(pb.genome.len()) / 3;
            if points >= 2 && rng.random_bool(cfg.crossover_prob) {
                let cut = 3 * rng.random_range(1..points);
                // the child with b's tail keeps b's length and knots, and
                // vice versa
                ca.genome = [&pb.genome[..cut], &pa.genome[cut..]].concat();
                cb.genome = [&pa.genome[..cut], &pb.genome[cut..]].concat();
            }
            for child in [ca, cb] {
                if offspring.len() < cfg.population {
                    let mut child = child;
                    ctx.mutate(&mut child.genome, &mut rng);
                    offspring.push(child);
                }
            }
        }
        ctx.evaluate(&mut offspring);
        archive.extend(offspring.iter().map(|i| i.objectives.as_slice()));
        pop.extend(offspring);
        pop = select(pop, cfg.population);
        observe(gen, &archive);
    }

    let vectors: Vec<Vec<f64>> = pop.iter().map(|i| i.objectives.clone()).collect();
    let ranks = non_dominated_sort(&vectors);
    let mut members: Vec<Individual> = Vec::new();
    for (ind, r) in pop.into_iter().zip(ranks) {
        if r == 0
            && !members
                .iter()
                .any(|m| m.objectives == ind.objectives && m.genome == ind.genome)
        {
            members.push(ind);
        }
    }
    let front: Vec<Vec<f64>> = members.iter().map(|m| m.objectives.clone()).collect();
    let crowding = crowding_distance(&front);
    Ok(ParetoSet {
        start,
        end,
        ranks: vec![0; members.len()],
        members,
        crowding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_ranks(v: &[Vec<f64>]) -> Vec<usize> {
        let n = v.len();
        let mut rank = vec![usize::MAX; n];
        let mut r = 0;
        while rank.contains(&usize::MAX) {
            let current: Vec<usize> = (0..n)
                .filter(|&i| rank[i] == usize::MAX)
                .filter(|&i| !(0..n).any(|j| rank[j] == usize::MAX && dominates(&v[j], &v[i])))
                .collect();
            for i in current {
                rank[i] = r;
            }
            r += 1;
        }
        rank
    }

    #[test]
    fn sort_examples() {
        let v = vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![3.0, 3.0]];
        assert_eq!(non_dominated_sort(&v), vec![0, 0, 1]);
        let same = vec![vec![1.0, 1.0]; 3];
        assert_eq!(non_dominated_sort(&same), vec![0, 0, 0]);
    }

    #[test]
    fn crowding_examples() {
        assert_eq!(
            crowding_distance(&[vec![0.0, 1.0], vec![1.0, 0.0]]),
            vec![f64::INFINITY; 2]
        );
        let d = crowding_distance(&[vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0]]);
        assert_eq!(d[1], 2.0);
        assert!(d[0].is_infinite() && d[2].is_infinite());
        let dup = crowding_distance(&[
            vec![0.0, 1.0],
            vec![0.5, 0.5],
            vec![0.5, 0.5],
            vec![0.5, 0.5],
            vec![1.0, 0.0],
        ]);
        assert_eq!(dup[2], 0.0);
    }

    proptest! {
        #[test]
        fn sort_matches_brute_force(v in proptest::collection::vec(proptest::collection::vec(0u8..6, 3), 1..50)) {
            let v: Vec<Vec<f64>> = v.into_iter().map(|x| x.into_iter().map(f64::from).collect()).collect();
            prop_assert_eq!(non_dominated_sort(&v), brute_ranks(&v));
        }
    }

    mod evolution {
        use super::super::*;
        use crate::objectives::{GridSpec3D, ScalarGrid3D, UavParams};
        use crate::router::{hypervolume, RouteObjective};
        use std::sync::Arc;

        fn setup() -> (Vec<NurbsCurve>, Vec<RouteObjective>, EvolveConfig) {
            let spec = GridSpec3D::new([0.0; 3], [20.0, 20.0, 20.0], [11, 11, 6]).unwrap();
            let hill = ScalarGrid3D::from_fn(spec, |p| {
                let d = ((p[0] - 100.0).powi(2) + (p[1] - 100.0).powi(2)).sqrt();
                (1.0 - d / 150.0).max(0.0) + p[2] / 200.0
            })
            .unwrap();
            let objectives = vec![
                RouteObjective::grid("hill", Arc::new(hill)),
                RouteObjective::energy("energy", UavParams::default()),
            ];
            let start = [0.0, 0.0, 0.0];
            let end = [200.0, 200.0, 0.0];
            let curves = vec![
                NurbsCurve::uniform(vec![start, [100.0, 100.0, 50.0], [150.0, 150.0, 20.0], end])
                    .unwrap(),
                NurbsCurve::uniform(vec![start, [150.0, 20.0, 10.0], [190.0, 100.0, 10.0], end])
                    .unwrap(),
            ];
            let mut cfg = EvolveConfig::new([[0.0, 200.0], [0.0, 200.0], [0.0, 100.0]], 11);
            cfg.population = 16;
            cfg.generations = 12;
            (curves, objectives, cfg)
        }

        #[test]
        fn front_is_nondominated_and_deterministic() {
            let (curves, objectives, cfg) = setup();
            let a = evolve(&curves, &objectives, &cfg).unwrap();
            let b = evolve(&curves, &objectives, &cfg).unwrap();
            assert_eq!(a, b);
            assert!(!a.is_empty());
            let v = a.objectives();
            for x in &v {
                assert!(!v.iter().any(|y| dominates(y, x)));
            }
            for i in 0..a.len() {
                let c = a.curve(i);
                assert_eq!(c.start(), [0.0, 0.0, 0.0]);
                assert_eq!(c.end(), [200.0, 200.0, 0.0]);
                for (g, x) in a.members[i].genome.iter().enumerate() {
                    let [lo, hi] = cfg.bounds[g % 3];
                    assert!((lo..=hi).contains(x));
                }
            }
        }

        #[test]
        fn archive_hypervolume_never_drops() {
            let (curves, objectives, cfg) = setup();
            let mut history = Vec::new();
            evolve_with_observer(&curves, &objectives, &cfg, |_, archive| {
                history.push(archive.points().to_vec());
            })
            .unwrap();
            assert_eq!(history.len(), cfg.generations + 1);
            let reference = [1e4, 1e6];
            let hv: Vec<f64> = history.iter().map(|p| hypervolume(p, &reference)).collect();
            assert!(hv.windows(2).all(|w| w[1] >= w[0]), "{hv:?}");
        }

        #[test]
        fn single_objective_never_regresses() {
            let (curves, mut objectives, cfg) = setup();
            objectives.truncate(1);
            let initial: f64 = curves
                .iter()
                .map(|c| evaluate_curve(c, &objectives, cfg.delta)[0])
                .fold(f64::INFINITY, f64::min);
            let front = evolve(&curves, &objectives, &cfg).unwrap();
            assert!(front.members.iter().all(|m| m.objectives[0] <= initial));
        }

        #[test]
        fn mismatched_endpoints_rejected() {
            let (mut curves, objectives, cfg) = setup();
            curves.push(
                NurbsCurve::uniform(vec![
                    [1.0, 0.0, 0.0],
                    [50.0, 50.0, 0.0],
                    [200.0, 200.0, 0.0],
                ])
                .unwrap(),
            );
            assert!(evolve(&curves, &objectives, &cfg).is_err());
        }
    }
}
