/// Batch-means accumulator for a time average over `[burn_in, T]`.
///
/// The post-burn-in steps are split into `n_batches` contiguous batches of
/// (nearly) equal length; each batch contributes one mean. Batch statistics
/// from independent trajectories can be pooled in a fixed order.
#[derive(Clone, Debug)]
pub struct BatchMeans {
    edges: Vec<u64>,
    sums: Vec<f64>,
    durations: Vec<f64>,
    current: usize,
}

impl BatchMeans {
    /// Batches over steps `1..=total_steps` (counted after burn-in).
    pub fn new(total_steps: u64, n_batches: usize) -> Self {
        let nb = n_batches.max(1).min(total_steps.max(1) as usize);
        let edges = (1..=nb as u64).map(|b| b * total_steps / nb as u64).collect();
        Self {
            edges,
            sums: vec![0.0; nb],
            durations: vec![0.0; nb],
            current: 0,
        }
    }

    pub fn n_batches(&self) -> usize {
        self.edges.len()
    }

    /// True when `step` (1-based, after burn-in) closes a batch.
    #[inline]
    pub fn is_batch_end(&self, step: u64) -> bool {
        self.edges.get(self.current).is_some_and(|&e| e == step)
    }

    /// Adds an increment of the integrated observable covering `duration` of time,
    /// for the post-burn-in step index `step`.
    #[inline]
    pub fn add(&mut self, step: u64, increment: f64, duration: f64) {
        let b = self.current.min(self.sums.len() - 1);
        self.sums[b] += increment;
        self.durations[b] += duration;
        if self.is_batch_end(step) {
            self.current += 1;
        }
    }

    /// Adds a value whose time weight was already counted through `add_time`.
    #[inline]
    pub fn add_value(&mut self, increment: f64) {
        let b = self.current.min(self.sums.len() - 1);
        self.sums[b] += increment;
    }

    /// Advances time within the current batch; closes it at the batch edge.
    #[inline]
    pub fn add_time(&mut self, step: u64, duration: f64) {
        let b = self.current.min(self.sums.len() - 1);
        self.durations[b] += duration;
        if self.is_batch_end(step) {
            self.current += 1;
        }
    }

    pub fn finish(self) -> BatchStats {
        BatchStats {
            means: self
                .sums
                .iter()
                .zip(&self.durations)
                .map(|(&s, &d)| if d > 0.0 { s / d } else { 0.0 })
                .collect(),
            total: self.sums.iter().sum(),
            duration: self.durations.iter().sum(),
        }
    }
}

/// Per-batch means with the overall integral and duration.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BatchStats {
    pub means: Vec<f64>,
    pub total: f64,
    pub duration: f64,
}

impl BatchStats {
    /// Pools several independent runs, in the order given.
    pub fn pooled<'a>(runs: impl IntoIterator<Item = &'a BatchStats>) -> BatchStats {
        runs.into_iter().fold(BatchStats::default(), |mut acc, r| {
            acc.means.extend_from_slice(&r.means);
            acc.total += r.total;
            acc.duration += r.duration;
            acc
        })
    }

    pub fn value(&self) -> f64 {
        if self.duration > 0.0 {
            self.total / self.duration
        } else {
            0.0
        }
    }

    /// Standard error of the mean from the spread of batch means.
    pub fn std_error(&self) -> f64 {
        let k = self.means.len();
        if k < 2 {
            return f64::INFINITY;
        }
        let m = self.means.iter().sum::<f64>() / k as f64;
        let var = self.means.iter().map(|b| (b - m).powi(2)).sum::<f64>() / (k as f64 - 1.0);
        (var / k as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_edges_cover_all_steps() {
        let mut b = BatchMeans::new(103, 20);
        for s in 1..=103 {
            b.add(s, 1.0, 0.5);
        }
        let st = b.finish();
        assert_eq!(st.means.len(), 20);
        assert!(st.means.iter().all(|&m| m == 2.0));
        assert_eq!(st.total, 103.0);
        assert_eq!(st.std_error(), 0.0);
    }

    #[test]
    fn pooling_concatenates_batches() {
        let a = BatchStats { means: vec![1.0, 3.0], total: 4.0, duration: 2.0 };
        let b = BatchStats { means: vec![2.0], total: 2.0, duration: 1.0 };
        let p = BatchStats::pooled([&a, &b]);
        assert_eq!(p.means, vec![1.0, 3.0, 2.0]);
        assert_eq!(p.value(), 2.0);
    }
}
