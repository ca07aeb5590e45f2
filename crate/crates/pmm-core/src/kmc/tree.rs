/// Complete binary sum tree over event rates.
///
/// Internal nodes are recomputed from their children on every update, so the
/// total never accumulates drift. Selection walks down in `O(log n)`.
#[derive(Debug, Clone)]
pub(crate) struct RateTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl RateTree {
    pub(crate) fn new(rates: &[f64]) -> Self {
        let leaves = rates.len().next_power_of_two().max(1);
        let mut nodes = vec![0.0; 2 * leaves];
        nodes[leaves..leaves + rates.len()].copy_from_slice(rates);
        for i in (1..leaves).rev() {
            nodes[i] = nodes[2 * i] + nodes[2 * i + 1];
        }
        RateTree { leaves, nodes }
    }

    #[inline]
    pub(crate) fn total(&self) -> f64 {
        self.nodes[1]
    }

    #[cfg(test)]
    pub(crate) fn get(&self, i: usize) -> f64 {
        self.nodes[self.leaves + i]
    }

    pub(crate) fn set(&mut self, i: usize, rate: f64) {
        let mut k = self.leaves + i;
        if self.nodes[k] == rate {
            return;
        }
        self.nodes[k] = rate;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    /// Leaf whose cumulative interval contains `target in [0, total)`.
    /// Never returns a zero-rate leaf while the total is positive.
    pub(crate) fn find(&self, mut target: f64) -> usize {
        let mut k = 1;
        while k < self.leaves {
            let l = self.nodes[2 * k];
            let r = self.nodes[2 * k + 1];
            if (target < l && l > 0.0) || r <= 0.0 {
                k *= 2;
            } else {
                target -= l;
                k = 2 * k + 1;
            }
        }
        k - self.leaves
    }
}
