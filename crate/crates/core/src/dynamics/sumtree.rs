//! Binary sum tree over nonnegative rates.
//!
//! Parents are recomputed from their children on every update rather than
//! adjusted by differences, so long runs do not accumulate drift and a slot
//! set to zero is never selected.

use rand::Rng;

#[derive(Debug, Clone)]
pub struct SumTree {
    leaves: usize,
    /// Heap layout; leaf `i` sits at `leaves + i`.
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(weights: &[f64]) -> Self {
        let leaves = weights.len().next_power_of_two().max(1);
        let mut nodes = vec![0.0; 2 * leaves];
        nodes[leaves..leaves + weights.len()].copy_from_slice(weights);
        for i in (1..leaves).rev() {
            nodes[i] = nodes[2 * i] + nodes[2 * i + 1];
        }
        Self { leaves, nodes }
    }

    pub fn zeros(len: usize) -> Self {
        Self::new(&vec![0.0; len])
    }

    pub fn total(&self) -> f64 {
        self.nodes[1.min(self.nodes.len() - 1)]
    }

    pub fn get(&self, i: usize) -> f64 {
        self.nodes[self.leaves + i]
    }

    pub fn set(&mut self, i: usize, w: f64) {
        debug_assert!(w >= 0.0);
        let mut k = self.leaves + i;
        if self.nodes[k] == w {
            return;
        }
        self.nodes[k] = w;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    /// Index drawn with probability proportional to its weight. The total must be positive.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let mut u = rng.random::<f64>() * self.total();
        let mut k = 1;
        while k < self.leaves {
            let left = self.nodes[2 * k];
            let right = self.nodes[2 * k + 1];
            if (u < left && left > 0.0) || right <= 0.0 {
                k *= 2;
            } else {
                u = (u - left).max(0.0);
                k = 2 * k + 1;
            }
        }
        k - self.leaves
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn totals_and_zero_slots() {
        let mut t = SumTree::new(&[1.0, 0.0, 2.0]);
        assert_eq!(t.total(), 3.0);
        let mut rng = RngStream::new(1, "sumtree", 0).rng();
        for _ in 0..10_000 {
            assert_ne!(t.sample(&mut rng), 1);
        }
        t.set(0, 0.0);
        assert_eq!(t.total(), 2.0);
        for _ in 0..1000 {
            assert_eq!(t.sample(&mut rng), 2);
        }
    }

    #[test]
    fn frequencies() {
        let t = SumTree::new(&[1.0, 3.0, 0.5, 0.5, 5.0]);
        let mut rng = RngStream::new(2, "sumtree", 0).rng();
        let mut counts = [0usize; 5];
        let reps = 200_000;
        for _ in 0..reps {
            counts[t.sample(&mut rng)] += 1;
        }
        for (i, w) in [1.0, 3.0, 0.5, 0.5, 5.0].iter().enumerate() {
            let p = w / 10.0;
            let sd = (p * (1.0 - p) / reps as f64).sqrt();
            assert!((counts[i] as f64 / reps as f64 - p).abs() < 4.0 * sd);
        }
    }

    #[test]
    fn single_slot() {
        let t = SumTree::new(&[2.0]);
        assert_eq!(t.total(), 2.0);
        assert_eq!(t.sample(&mut RngStream::new(0, "s", 0).rng()), 0);
    }
}
