//! DMV parameters, expected counts and plain EM.

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::sbg::{dmv_to_sbg, eisner_expected_counts, Dir, SentenceGrammar, TagSet};

/// One multinomial outcome of the DMV.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DmvEvent {
    /// The root takes a dependent with tag `d`.
    Root { d: usize },
    /// Head `h` takes a dependent with tag `d` in direction `dir`.
    Attach { h: usize, dir: Dir, d: usize },
    /// Head `h` stops (or continues) in direction `dir`; `adj` means no dependent yet.
    Stop { h: usize, dir: Dir, adj: bool, stop: bool },
}

/// DMV parameters in log space.
///
/// `stop[dir][h][a][s]` is `log θ_s` with `a = 0` for the adjacent case and
/// `s = 0` for the stop decision.
#[derive(Clone, Debug, PartialEq)]
pub struct DmvParams {
    pub root: Vec<f64>,
    pub attach: [Vec<Vec<f64>>; 2],
    pub stop: [Vec<[[f64; 2]; 2]>; 2],
}

/// Expected counts with the same layout as [`DmvParams`] (linear space).
#[derive(Clone, Debug, PartialEq)]
pub struct DmvCounts {
    pub root: Vec<f64>,
    pub attach: [Vec<Vec<f64>>; 2],
    pub stop: [Vec<[[f64; 2]; 2]>; 2],
}

fn normalize_log(xs: &mut [f64]) {
    let z = crate::semiring::log_sum(xs);
    if z.is_finite() {
        for x in xs.iter_mut() {
            *x -= z;
        }
    }
}

impl DmvParams {
    pub fn uniform(n_tags: usize) -> Self {
        let u = -(n_tags as f64).ln();
        let h = 0.5f64.ln();
        DmvParams {
            root: vec![u; n_tags],
            attach: [vec![vec![u; n_tags]; n_tags], vec![vec![u; n_tags]; n_tags]],
            stop: [vec![[[h; 2]; 2]; n_tags], vec![[[h; 2]; 2]; n_tags]],
        }
    }

    /// Random parameters, for tests.
    pub fn random<R: Rng>(n_tags: usize, rng: &mut R) -> Self {
        let mut p = DmvParams::uniform(n_tags);
        let mut draw = |xs: &mut [f64]| {
            for x in xs.iter_mut() {
                *x = rng.random_range(0.05f64..1.0).ln();
            }
            normalize_log(xs);
        };
        draw(&mut p.root);
        for dir in 0..2 {
            for h in 0..n_tags {
                draw(&mut p.attach[dir][h]);
                for a in 0..2 {
                    draw(&mut p.stop[dir][h][a]);
                }
            }
        }
        p
    }

    pub fn n_tags(&self) -> usize {
        self.root.len()
    }

    /// Log probability of one event.
    pub fn logp(&self, e: DmvEvent) -> f64 {
        match e {
            DmvEvent::Root { d } => self.root[d],
            DmvEvent::Attach { h, dir, d } => self.attach[dir as usize][h][d],
            DmvEvent::Stop { h, dir, adj, stop } => self.stop[dir as usize][h][usize::from(!adj)][usize::from(!stop)],
        }
    }

    /// Maximum-likelihood parameters from counts; empty multinomials keep `fallback`.
    pub fn from_counts(c: &DmvCounts, fallback: &DmvParams) -> Self {
        let mut p = fallback.clone();
        let set = |dst: &mut [f64], src: &[f64]| {
            let z: f64 = src.iter().sum();
            if z > 0.0 {
                for (d, s) in dst.iter_mut().zip(src) {
                    *d = (s / z).ln();
                }
            }
        };
        set(&mut p.root, &c.root);
        for dir in 0..2 {
            for h in 0..p.n_tags() {
                set(&mut p.attach[dir][h], &c.attach[dir][h]);
                for a in 0..2 {
                    set(&mut p.stop[dir][h][a], &c.stop[dir][h][a]);
                }
            }
        }
        p
    }

    /// Largest deviation of any multinomial from summing to one.
    pub fn normalization_error(&self) -> f64 {
        let dev = |xs: &[f64]| (xs.iter().map(|x| x.exp()).sum::<f64>() - 1.0).abs();
        let mut worst = dev(&self.root);
        for dir in 0..2 {
            for h in 0..self.n_tags() {
                worst = worst.max(dev(&self.attach[dir][h]));
                for a in 0..2 {
                    worst = worst.max(dev(&self.stop[dir][h][a]));
                }
            }
        }
        worst
    }

    /// One line per parameter: kind, context, decision, log probability.
    pub fn to_text(&self, tags: &TagSet) -> String {
        let mut out = String::new();
        for d in 0..self.n_tags() {
            out.push_str(&format!("root\t$\t{}\t{}\n", tags.name(d), self.root[d]));
        }
        for dir in Dir::BOTH {
            for h in 0..self.n_tags() {
                for d in 0..self.n_tags() {
                    let lp = self.attach[dir as usize][h][d];
                    out.push_str(&format!("attach\t{},{}\t{}\t{}\n", tags.name(h), dir, tags.name(d), lp));
                }
            }
        }
        for dir in Dir::BOTH {
            for h in 0..self.n_tags() {
                for (a, adj) in ["adj", "nonadj"].iter().enumerate() {
                    for (s, dec) in ["stop", "continue"].iter().enumerate() {
                        let lp = self.stop[dir as usize][h][a][s];
                        out.push_str(&format!("stop\t{},{},{}\t{}\t{}\n", tags.name(h), dir, adj, dec, lp));
                    }
                }
            }
        }
        out
    }

    /// Reads the format written by [`Self::to_text`].
    pub fn from_text(text: &str, tags: &TagSet) -> Result<Self> {
        let mut p = DmvParams::uniform(tags.len());
        let tag =
            |s: &str, line: usize| tags.get(s).ok_or_else(|| Error::Format { line, msg: format!("unknown tag {s:?}") });
        let dir = |s: &str, line: usize| match s {
            "left" => Ok(Dir::Left),
            "right" => Ok(Dir::Right),
            _ => Err(Error::Format { line, msg: format!("bad direction {s:?}") }),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').collect();
            if cols.len() != 4 {
                return Err(Error::Format { line, msg: "expected 4 columns".into() });
            }
            let lp: f64 = cols[3].parse().map_err(|_| Error::Format { line, msg: "bad log probability".into() })?;
            let ctx: Vec<&str> = cols[1].split(',').collect();
            match (cols[0], ctx.as_slice()) {
                ("root", _) => p.root[tag(cols[2], line)?] = lp,
                ("attach", [h, d]) => p.attach[dir(d, line)? as usize][tag(h, line)?][tag(cols[2], line)?] = lp,
                ("stop", [h, d, a]) => {
                    let a = usize::from(*a != "adj");
                    let s = usize::from(cols[2] != "stop");
                    p.stop[dir(d, line)? as usize][tag(h, line)?][a][s] = lp;
                }
                _ => return Err(Error::Format { line, msg: format!("unknown parameter {:?}", cols[0]) }),
            }
        }
        Ok(p)
    }
}

impl DmvCounts {
    pub fn zeros(n_tags: usize) -> Self {
        DmvCounts {
            root: vec![0.0; n_tags],
            attach: [vec![vec![0.0; n_tags]; n_tags], vec![vec![0.0; n_tags]; n_tags]],
            stop: [vec![[[0.0; 2]; 2]; n_tags], vec![[[0.0; 2]; 2]; n_tags]],
        }
    }

    pub fn n_tags(&self) -> usize {
        self.root.len()
    }

    pub fn add(&mut self, e: DmvEvent, c: f64) {
        match e {
            DmvEvent::Root { d } => self.root[d] += c,
            DmvEvent::Attach { h, dir, d } => self.attach[dir as usize][h][d] += c,
            DmvEvent::Stop { h, dir, adj, stop } => {
                self.stop[dir as usize][h][usize::from(!adj)][usize::from(!stop)] += c
            }
        }
    }

    pub fn get(&self, e: DmvEvent) -> f64 {
        match e {
            DmvEvent::Root { d } => self.root[d],
            DmvEvent::Attach { h, dir, d } => self.attach[dir as usize][h][d],
            DmvEvent::Stop { h, dir, adj, stop } => self.stop[dir as usize][h][usize::from(!adj)][usize::from(!stop)],
        }
    }

    /// Adds sentence-level event counts through the grammar's DMV mapping.
    pub fn add_sentence(&mut self, g: &SentenceGrammar, counts: &[f64]) {
        for (ev, &c) in counts.iter().enumerate() {
            if c != 0.0 {
                for &e in &g.dmv[ev] {
                    self.add(e, c);
                }
            }
        }
    }

    /// Pointwise sum.
    pub fn merge(mut self, other: DmvCounts) -> DmvCounts {
        for (a, b) in self.root.iter_mut().zip(&other.root) {
            *a += b;
        }
        for dir in 0..2 {
            for h in 0..self.n_tags() {
                for (a, b) in self.attach[dir][h].iter_mut().zip(&other.attach[dir][h]) {
                    *a += b;
                }
                for a in 0..2 {
                    for s in 0..2 {
                        self.stop[dir][h][a][s] += other.stop[dir][h][a][s];
                    }
                }
            }
        }
        self
    }

    /// Every event with its count, in a fixed order.
    pub fn entries(&self) -> Vec<(DmvEvent, f64)> {
        let nt = self.n_tags();
        let mut out = Vec::new();
        for d in 0..nt {
            out.push((DmvEvent::Root { d }, self.root[d]));
        }
        for dir in Dir::BOTH {
            for h in 0..nt {
                for d in 0..nt {
                    out.push((DmvEvent::Attach { h, dir, d }, self.attach[dir as usize][h][d]));
                }
                for adj in [true, false] {
                    for stop in [true, false] {
                        let e = DmvEvent::Stop { h, dir, adj, stop };
                        out.push((e, self.get(e)));
                    }
                }
            }
        }
        out
    }
}

/// Summary of one E-step.
#[derive(Clone, Debug, PartialEq)]
pub struct EStep {
    pub counts: DmvCounts,
    pub loglik: f64,
    pub skipped: usize,
}

/// Expected counts of the plain DMV over a corpus of tag-id sentences.
pub fn dmv_estep(sentences: &[Vec<usize>], params: &DmvParams, exec: Exec) -> EStep {
    let automata = dmv_to_sbg(params);
    let nt = params.n_tags();
    exec.map_reduce(
        sentences,
        || EStep { counts: DmvCounts::zeros(nt), loglik: 0.0, skipped: 0 },
        |s| {
            let g = SentenceGrammar::new(&automata, s);
            let mut out = EStep { counts: DmvCounts::zeros(nt), loglik: 0.0, skipped: 0 };
            match eisner_expected_counts(&g) {
                Some((z, c)) => {
                    out.counts.add_sentence(&g, &c);
                    out.loglik = z;
                }
                None => out.skipped = 1,
            }
            out
        },
        |a, b| EStep { counts: a.counts.merge(b.counts), loglik: a.loglik + b.loglik, skipped: a.skipped + b.skipped },
    )
}

/// One EM iteration; returns the new parameters and the log-likelihood of the old ones.
pub fn em_step(sentences: &[Vec<usize>], params: &DmvParams, exec: Exec) -> (DmvParams, f64) {
    let e = dmv_estep(sentences, params, exec);
    (DmvParams::from_counts(&e.counts, params), e.loglik)
}
