//! Sampling trees from a DMV, for planted-grammar experiments.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::sbg::{DmvParams, TagSet};
use crate::treebank::DepTree;

fn draw<R: Rng>(logp: &[f64], rng: &mut R) -> usize {
    let w: Vec<f64> = logp.iter().map(|x| x.exp()).collect();
    WeightedIndex::new(&w).expect("multinomial has positive mass").sample(rng)
}

/// Samples one sentence as (tags, heads) with head 0 for the root.
///
/// Returns `None` when the tree grows beyond `max_len` tokens.
pub fn sample_tree<R: Rng>(p: &DmvParams, max_len: usize, rng: &mut R) -> Option<(Vec<usize>, Vec<usize>)> {
    // Nodes as (tag, parent) in generation order; `order` is the surface order.
    let mut nodes: Vec<(usize, usize)> = Vec::new();
    let root = draw(&p.root, rng);
    let order = grow(p, root, usize::MAX, max_len, &mut nodes, rng)?;
    let mut pos = vec![0; nodes.len()];
    for (i, &id) in order.iter().enumerate() {
        pos[id] = i + 1;
    }
    let tags = order.iter().map(|&id| nodes[id].0).collect();
    let heads = order.iter().map(|&id| if nodes[id].1 == usize::MAX { 0 } else { pos[nodes[id].1] }).collect();
    Some((tags, heads))
}

fn grow<R: Rng>(
    p: &DmvParams,
    tag: usize,
    parent: usize,
    max_len: usize,
    nodes: &mut Vec<(usize, usize)>,
    rng: &mut R,
) -> Option<Vec<usize>> {
    if nodes.len() >= max_len {
        return None;
    }
    let id = nodes.len();
    nodes.push((tag, parent));
    let mut sides: [Vec<Vec<usize>>; 2] = [Vec::new(), Vec::new()];
    for (dir, side) in sides.iter_mut().enumerate() {
        let mut adj = 0;
        while draw(&p.stop[dir][tag][adj], rng) == 1 {
            let d = draw(&p.attach[dir][tag], rng);
            side.push(grow(p, d, id, max_len, nodes, rng)?);
            adj = 1;
        }
    }
    // Left dependents were generated head-outward.
    let [left, right] = sides;
    let mut order: Vec<usize> = left.into_iter().rev().flatten().collect();
    order.push(id);
    order.extend(right.into_iter().flatten());
    Some(order)
}

/// Samples `n` trees of at most `max_len` tokens by rejection.
pub fn sample_corpus<R: Rng>(p: &DmvParams, tags: &TagSet, n: usize, max_len: usize, rng: &mut R) -> Vec<DepTree> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        if let Some((t, h)) = sample_tree(p, max_len, rng) {
            let names: Vec<&str> = t.iter().map(|&i| tags.name(i)).collect();
            out.push(DepTree::from_heads(&names, &h));
        }
    }
    out
}
