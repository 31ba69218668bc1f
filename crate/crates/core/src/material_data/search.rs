//! Exact nearest-neighbour search over small-dimensional point clouds.
//!
//! Points are stored flat, `dim` coordinates each. Distances are plain
//! squared Euclidean sums accumulated in coordinate order, so the tree and
//! the linear scan compute bit-identical values and agree on the winner,
//! including ties (lowest index wins).

const LEAF_SIZE: usize = 8;

/// Below this many points the index is a plain scan.
pub const SCAN_THRESHOLD: usize = 64;

#[inline]
fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}

#[inline]
fn better(d: f64, i: u32, best_d: f64, best_i: u32) -> bool {
    d < best_d || (d == best_d && i < best_i)
}

/// Linear scan over every point; the reference the tree must reproduce.
pub fn scan_nearest(coords: &[f64], dim: usize, query: &[f64]) -> (usize, f64) {
    let mut best = (u32::MAX, f64::INFINITY);
    for (i, p) in coords.chunks_exact(dim).enumerate() {
        let d = dist_sq(query, p);
        if better(d, i as u32, best.1, best.0) {
            best = (i as u32, d);
        }
    }
    (best.0 as usize, best.1)
}

/// Implicit median-split k-d tree. `order` is a permutation of point
/// indices; each internal node owns a range of it with the splitting point
/// at the middle, whose split axis is kept in `axes`.
#[derive(Clone, Debug)]
pub struct KdTree {
    order: Vec<u32>,
    axes: Vec<u8>,
}

impl KdTree {
    pub fn build(coords: &[f64], dim: usize) -> Self {
        let n = coords.len() / dim;
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut axes = vec![0u8; n];
        build_range(coords, dim, &mut order, &mut axes, 0);
        Self { order, axes }
    }

    pub fn nearest(&self, coords: &[f64], dim: usize, query: &[f64]) -> (usize, f64) {
        let mut best = (u32::MAX, f64::INFINITY);
        self.search(coords, dim, query, 0, self.order.len(), &mut best);
        (best.0 as usize, best.1)
    }

    fn search(
        &self,
        coords: &[f64],
        dim: usize,
        query: &[f64],
        lo: usize,
        hi: usize,
        best: &mut (u32, f64),
    ) {
        if hi - lo <= LEAF_SIZE {
            for &i in &self.order[lo..hi] {
                let p = &coords[i as usize * dim..(i as usize + 1) * dim];
                let d = dist_sq(query, p);
                if better(d, i, best.1, best.0) {
                    *best = (i, d);
                }
            }
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let pivot = self.order[mid];
        let axis = self.axes[mid] as usize;
        let p = &coords[pivot as usize * dim..(pivot as usize + 1) * dim];
        let d = dist_sq(query, p);
        if better(d, pivot, best.1, best.0) {
            *best = (pivot, d);
        }
        let diff = query[axis] - p[axis];
        let (near, far) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(coords, dim, query, near.0, near.1, best);
        // equality must still be explored: a tied point with lower index may
        // sit on the far side
        if diff * diff <= best.1 {
            self.search(coords, dim, query, far.0, far.1, best);
        }
    }
}

fn build_range(coords: &[f64], dim: usize, order: &mut [u32], axes: &mut [u8], offset: usize) {
    let n = order.len();
    if n <= LEAF_SIZE {
        return;
    }
    // split along the axis of widest spread
    let mut axis = 0;
    let mut widest = f64::NEG_INFINITY;
    for a in 0..dim {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &i in order.iter() {
            let v = coords[i as usize * dim + a];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi - lo > widest {
            widest = hi - lo;
            axis = a;
        }
    }
    let mid = n / 2;
    order.select_nth_unstable_by(mid, |&i, &j| {
        let (a, b) = (
            coords[i as usize * dim + axis],
            coords[j as usize * dim + axis],
        );
        a.total_cmp(&b).then(i.cmp(&j))
    });
    axes[offset + mid] = axis as u8;
    let (left, rest) = order.split_at_mut(mid);
    build_range(coords, dim, left, axes, offset);
    build_range(coords, dim, &mut rest[1..], axes, offset + mid + 1);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tree_matches_scan_on_random_clouds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in 1..=4 {
            for n in [1usize, 9, 65, 300, 2000] {
                let coords: Vec<f64> = (0..n * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let tree = KdTree::build(&coords, dim);
                for _ in 0..200 {
                    let q: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
                    assert_eq!(
                        tree.nearest(&coords, dim, &q),
                        scan_nearest(&coords, dim, &q)
                    );
                }
            }
        }
    }

    #[test]
    fn ties_resolve_to_lowest_index() {
        // many duplicates and a symmetric lattice
        let mut coords = Vec::new();
        for i in 0..400 {
            coords.push((i % 5) as f64);
            coords.push(((i / 5) % 4) as f64);
        }
        let tree = KdTree::build(&coords, 2);
        for q in [[2.0, 1.5], [0.5, 0.5], [2.0, 2.0], [-3.0, 1.5]] {
            let (i, d) = tree.nearest(&coords, 2, &q);
            assert_eq!((i, d), scan_nearest(&coords, 2, &q));
            assert!(coords.chunks(2).take(i).all(|p| dist_sq(&q, p) > d));
        }
    }
}
