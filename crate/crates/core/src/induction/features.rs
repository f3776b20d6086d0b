//! Log-linear parameterization of the DMV multinomials.
//!
//! Every multinomial outcome fires a handful of templated features and its
//! probability is a softmax of the summed weights within its context. The
//! M-step fits the weights to expected counts by L-BFGS.

use std::fmt;

use argmin::core::{CostFunction, Executor, Gradient, State};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::sbg::{Dir, DmvCounts, DmvEvent, DmvParams, TagSet};
use crate::semiring::log_sum;

/// Names of the feature templates, in the order [`featurize`] emits them.
pub const TEMPLATES: [&str; 9] = [
    "root:d",
    "attach:h,d,dir",
    "attach:h,d",
    "attach:d,dir",
    "attach:d",
    "stop:h,dir,adj,dec",
    "stop:h,dir,dec",
    "stop:h,dec",
    "stop:dec",
];

/// A templated feature over tag ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FeatureKey {
    Root { d: usize },
    AttachHdDir { h: usize, d: usize, dir: Dir },
    AttachHd { h: usize, d: usize },
    AttachDDir { d: usize, dir: Dir },
    AttachD { d: usize },
    StopHDirAdj { h: usize, dir: Dir, adj: bool, stop: bool },
    StopHDir { h: usize, dir: Dir, stop: bool },
    StopH { h: usize, stop: bool },
    Stop { stop: bool },
}

fn dec(stop: bool) -> &'static str {
    if stop {
        "stop"
    } else {
        "cont"
    }
}

fn adj_name(adj: bool) -> &'static str {
    if adj {
        "adj"
    } else {
        "nonadj"
    }
}

impl FeatureKey {
    /// Renders the key with tag names, e.g. `attach|VERB|NOUN|left`.
    pub fn render(&self, tags: &TagSet) -> String {
        use FeatureKey::*;
        let t = |i: usize| tags.name(i);
        match *self {
            Root { d } => format!("root|{}", t(d)),
            AttachHdDir { h, d, dir } => format!("attach|{}|{}|{dir}", t(h), t(d)),
            AttachHd { h, d } => format!("attach|{}|{}|*", t(h), t(d)),
            AttachDDir { d, dir } => format!("attach|*|{}|{dir}", t(d)),
            AttachD { d } => format!("attach|*|{}|*", t(d)),
            StopHDirAdj { h, dir, adj, stop } => format!("stop|{}|{dir}|{}|{}", t(h), adj_name(adj), dec(stop)),
            StopHDir { h, dir, stop } => format!("stop|{}|{dir}|*|{}", t(h), dec(stop)),
            StopH { h, stop } => format!("stop|{}|*|*|{}", t(h), dec(stop)),
            Stop { stop } => format!("stop|*|*|*|{}", dec(stop)),
        }
    }

    /// Inverse of [`FeatureKey::render`]; unknown tags are interned.
    pub fn parse(s: &str, tags: &mut TagSet) -> Result<Self> {
        let bad = || Error::Parse(format!("bad feature key `{s}`"));
        let f: Vec<&str> = s.split('|').collect();
        let dir = |x: &str| match x {
            "left" => Ok(Some(Dir::Left)),
            "right" => Ok(Some(Dir::Right)),
            "*" => Ok(None),
            _ => Err(bad()),
        };
        let flag = |x: &str, yes: &str, no: &str| {
            if x == yes {
                Ok(Some(true))
            } else if x == no {
                Ok(Some(false))
            } else if x == "*" {
                Ok(None)
            } else {
                Err(bad())
            }
        };
        let mut tag = |x: &str| if x == "*" { None } else { Some(tags.intern(x)) };
        match f.as_slice() {
            ["root", d] => Ok(FeatureKey::Root { d: tag(d).ok_or_else(bad)? }),
            ["attach", h, d, dr] => {
                let (h, d, dr) = (tag(h), tag(d).ok_or_else(bad)?, dir(dr)?);
                match (h, dr) {
                    (Some(h), Some(dir)) => Ok(FeatureKey::AttachHdDir { h, d, dir }),
                    (Some(h), None) => Ok(FeatureKey::AttachHd { h, d }),
                    (None, Some(dir)) => Ok(FeatureKey::AttachDDir { d, dir }),
                    (None, None) => Ok(FeatureKey::AttachD { d }),
                }
            }
            ["stop", h, dr, adj, dc] => {
                let stop = flag(dc, "stop", "cont")?.ok_or_else(bad)?;
                let (h, dr, adj) = (tag(h), dir(dr)?, flag(adj, "adj", "nonadj")?);
                match (h, dr, adj) {
                    (Some(h), Some(dir), Some(adj)) => Ok(FeatureKey::StopHDirAdj { h, dir, adj, stop }),
                    (Some(h), Some(dir), None) => Ok(FeatureKey::StopHDir { h, dir, stop }),
                    (Some(h), None, None) => Ok(FeatureKey::StopH { h, stop }),
                    (None, None, None) => Ok(FeatureKey::Stop { stop }),
                    _ => Err(bad()),
                }
            }
            _ => Err(bad()),
        }
    }
}

/// Feature keys fired by a DMV outcome.
pub fn featurize(e: DmvEvent) -> Vec<FeatureKey> {
    use FeatureKey::*;
    match e {
        DmvEvent::Root { d } => vec![Root { d }],
        DmvEvent::Attach { h, dir, d } => {
            vec![AttachHdDir { h, d, dir }, AttachHd { h, d }, AttachDDir { d, dir }, AttachD { d }]
        }
        DmvEvent::Stop { h, dir, adj, stop } => {
            vec![StopHDirAdj { h, dir, adj, stop }, StopHDir { h, dir, stop }, StopH { h, stop }, Stop { stop }]
        }
    }
}

/// Deterministic assignment of feature ids.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureSpace {
    keys: Vec<FeatureKey>,
    index: FxHashMap<FeatureKey, usize>,
}

impl FeatureSpace {
    /// Returns the id of `key`, allocating a fresh one if it is new.
    pub fn intern(&mut self, key: FeatureKey) -> usize {
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        self.keys.push(key);
        self.index.insert(key, self.keys.len() - 1);
        self.keys.len() - 1
    }

    pub fn get(&self, key: &FeatureKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn key(&self, i: usize) -> FeatureKey {
        self.keys[i]
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// One multinomial: its outcomes and the feature ids each one fires.
#[derive(Clone, Debug, PartialEq)]
struct Context {
    outcomes: Vec<(DmvEvent, Vec<usize>)>,
}

/// The featurized DMV over a fixed number of tags.
#[derive(Clone, Debug, PartialEq)]
pub struct LogLinearDmv {
    pub n_tags: usize,
    pub space: FeatureSpace,
    contexts: Vec<Context>,
}

impl fmt::Display for LogLinearDmv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "featurized DMV: {} tags, {} features", self.n_tags, self.space.len())
    }
}

impl LogLinearDmv {
    pub fn new(n_tags: usize) -> Self {
        let mut space = FeatureSpace::default();
        let mut contexts = Vec::new();
        let context = |events: Vec<DmvEvent>, space: &mut FeatureSpace| Context {
            outcomes: events
                .into_iter()
                .map(|e| (e, featurize(e).into_iter().map(|k| space.intern(k)).collect()))
                .collect(),
        };
        contexts.push(context((0..n_tags).map(|d| DmvEvent::Root { d }).collect(), &mut space));
        for h in 0..n_tags {
            for dir in Dir::BOTH {
                contexts.push(context((0..n_tags).map(|d| DmvEvent::Attach { h, dir, d }).collect(), &mut space));
                for adj in [true, false] {
                    let evs = [true, false].map(|stop| DmvEvent::Stop { h, dir, adj, stop }).to_vec();
                    contexts.push(context(evs, &mut space));
                }
            }
        }
        LogLinearDmv { n_tags, space, contexts }
    }

    pub fn n_features(&self) -> usize {
        self.space.len()
    }

    fn scores(&self, ctx: &Context, w: &[f64]) -> Vec<f64> {
        ctx.outcomes.iter().map(|(_, fs)| fs.iter().map(|&i| w[i]).sum()).collect()
    }

    /// Multinomial parameters `exp(w·f) / Σ exp(w·f)`.
    pub fn params(&self, w: &[f64]) -> DmvParams {
        let mut p = DmvParams::uniform(self.n_tags);
        for ctx in &self.contexts {
            let s = self.scores(ctx, w);
            let z = log_sum(&s);
            for ((e, _), x) in ctx.outcomes.iter().zip(&s) {
                set_logp(&mut p, e, x - z);
            }
        }
        p
    }

    /// Expected complete-data log-likelihood minus `‖w‖² / (2σ²)`, with its gradient.
    pub fn objective(&self, w: &[f64], counts: &DmvCounts, sigma2: f64) -> (f64, Vec<f64>) {
        let mut value = -w.iter().map(|x| x * x).sum::<f64>() / (2.0 * sigma2);
        let mut grad: Vec<f64> = w.iter().map(|x| -x / sigma2).collect();
        for ctx in &self.contexts {
            let c: Vec<f64> = ctx.outcomes.iter().map(|(e, _)| counts.get(*e)).collect();
            let total: f64 = c.iter().sum();
            if total == 0.0 {
                continue;
            }
            let s = self.scores(ctx, w);
            let z = log_sum(&s);
            for (((_, fs), x), ci) in ctx.outcomes.iter().zip(&s).zip(&c) {
                let p = (x - z).exp();
                if *ci > 0.0 {
                    value += ci * (x - z);
                }
                let g = ci - total * p;
                for &i in fs {
                    grad[i] += g;
                }
            }
        }
        (value, grad)
    }

    /// M-step: L-BFGS from `w0`; never returns weights worse than `w0`.
    pub fn fit(&self, counts: &DmvCounts, w0: &[f64], sigma2: f64, max_iters: u64) -> Result<Vec<f64>> {
        let problem = MStep { model: self, counts, sigma2 };
        let start = problem.value(w0);
        let linesearch = MoreThuenteLineSearch::new();
        let solver = LBFGS::new(linesearch, 7)
            .with_tolerance_grad(1e-8)
            .and_then(|s| s.with_tolerance_cost(1e-12))
            .map_err(|e| Error::Optimizer(e.to_string()))?;
        let run = Executor::new(problem, solver).configure(|s| s.param(w0.to_vec()).max_iters(max_iters)).run();
        let problem = MStep { model: self, counts, sigma2 };
        match run {
            Ok(res) => {
                let state = res.state();
                match state.get_best_param() {
                    Some(w) if problem.value(w) <= start => Ok(w.clone()),
                    _ => Ok(w0.to_vec()),
                }
            }
            Err(e) => {
                // Line search failures near the optimum leave the start point in place.
                log::debug!("M-step stopped early: {e}");
                Ok(w0.to_vec())
            }
        }
    }
}

fn set_logp(p: &mut DmvParams, e: &DmvEvent, v: f64) {
    match *e {
        DmvEvent::Root { d } => p.root[d] = v,
        DmvEvent::Attach { h, dir, d } => p.attach[dir as usize][h][d] = v,
        DmvEvent::Stop { h, dir, adj, stop } => p.stop[dir as usize][h][usize::from(!adj)][usize::from(!stop)] = v,
    }
}

/// The M-step objective negated for minimization.
struct MStep<'a> {
    model: &'a LogLinearDmv,
    counts: &'a DmvCounts,
    sigma2: f64,
}

impl MStep<'_> {
    fn value(&self, w: &[f64]) -> f64 {
        -self.model.objective(w, self.counts, self.sigma2).0
    }
}

impl CostFunction for MStep<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, w: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.value(w))
    }
}

impl Gradient for MStep<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, w: &Self::Param) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        Ok(self.model.objective(w, self.counts, self.sigma2).1.into_iter().map(|g| -g).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_counts(nt: usize, rng: &mut ChaCha8Rng) -> DmvCounts {
        let mut c = DmvCounts::zeros(nt);
        for (e, _) in DmvCounts::zeros(nt).entries() {
            c.add(e, rng.random_range(0.0..5.0));
        }
        c
    }

    #[test]
    fn direction_is_shared_by_the_head_dependent_feature() {
        let l = featurize(DmvEvent::Attach { h: 0, dir: Dir::Left, d: 1 });
        let r = featurize(DmvEvent::Attach { h: 0, dir: Dir::Right, d: 1 });
        assert!(l.contains(&FeatureKey::AttachHd { h: 0, d: 1 }));
        assert!(r.contains(&FeatureKey::AttachHd { h: 0, d: 1 }));
        assert_ne!(l[0], r[0]);
    }

    #[test]
    fn stop_fires_the_direction_free_backoff() {
        let f = featurize(DmvEvent::Stop { h: 2, dir: Dir::Left, adj: true, stop: true });
        assert!(f.contains(&FeatureKey::StopH { h: 2, stop: true }));
        assert_eq!(f, featurize(DmvEvent::Stop { h: 2, dir: Dir::Left, adj: true, stop: true }));
    }

    #[test]
    fn zero_weights_give_uniform_multinomials() {
        let m = LogLinearDmv::new(3);
        let p = m.params(&vec![0.0; m.n_features()]);
        let u = DmvParams::uniform(3);
        for (a, b) in p.attach[0].iter().flatten().zip(u.attach[0].iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(p.normalization_error() < 1e-12);
    }

    #[test]
    fn softmax_is_monotone_in_one_weight() {
        let m = LogLinearDmv::new(2);
        let i = m.space.get(&FeatureKey::AttachHdDir { h: 0, d: 1, dir: Dir::Left }).unwrap();
        let mut w = vec![0.0; m.n_features()];
        let mut last = f64::NEG_INFINITY;
        for x in [-1.0, 0.0, 0.5, 2.0] {
            w[i] = x;
            let v = m.params(&w).attach[0][0][1];
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn unknown_tags_get_fresh_ids() {
        let mut space = LogLinearDmv::new(2).space;
        let n = space.len();
        assert_eq!(space.intern(FeatureKey::AttachD { d: 7 }), n);
        assert_eq!(space.intern(FeatureKey::AttachD { d: 7 }), n);
    }

    #[test]
    fn keys_round_trip_through_text() {
        let mut tags = TagSet::new(["NOUN", "VERB"]);
        let m = LogLinearDmv::new(2);
        for i in 0..m.n_features() {
            let k = m.space.key(i);
            assert_eq!(FeatureKey::parse(&k.render(&tags), &mut tags).unwrap(), k);
        }
        assert!(FeatureKey::parse("attach|NOUN", &mut tags).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = LogLinearDmv::new(3);
        let c = random_counts(3, &mut rng);
        let w: Vec<f64> = (0..m.n_features()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, g) = m.objective(&w, &c, 10.0);
        let h = 1e-5;
        for i in 0..m.n_features() {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[i] += h;
            wm[i] -= h;
            let fd = (m.objective(&wp, &c, 10.0).0 - m.objective(&wm, &c, 10.0).0) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-4 * fd.abs().max(1.0), "feature {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn fit_improves_the_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = LogLinearDmv::new(3);
        let c = random_counts(3, &mut rng);
        let w0 = vec![0.0; m.n_features()];
        let w = m.fit(&c, &w0, 10.0, 100).unwrap();
        let (v0, _) = m.objective(&w0, &c, 10.0);
        let (v, g) = m.objective(&w, &c, 10.0);
        assert!(v > v0);
        assert!(g.iter().map(|x| x.abs()).fold(0.0, f64::max) < 1e-3);
    }
}
