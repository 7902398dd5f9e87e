use crate::error::{Error, Result};

use super::spectrum::SampleSpectrum;

pub const DEFAULT_SAMPLE_CAPACITY: usize = 50;

/// Bounded set of training samples with learning-rate decayed weights.
///
/// Each update scales existing weights by `1 - gamma` and adds the new sample
/// with weight `gamma`; beyond capacity the lowest-weight sample (oldest on
/// ties) is dropped, and weights are renormalized to sum to one.
#[derive(Debug, Clone)]
pub struct SampleMemory {
    capacity: usize,
    samples: Vec<SampleSpectrum>,
    weights: Vec<f64>,
    inserted: Vec<u64>,
    counter: u64,
}

impl SampleMemory {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("sample memory capacity must be positive"));
        }
        Ok(SampleMemory {
            capacity,
            samples: Vec::new(),
            weights: Vec::new(),
            inserted: Vec::new(),
            counter: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[SampleSpectrum] {
        &self.samples
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn update(&mut self, sample: SampleSpectrum, gamma: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::invalid(format!("learning rate {gamma} outside [0, 1]")));
        }
        if let Some(first) = self.samples.first() {
            if !first.same_shape(&sample) {
                return Err(Error::invalid("sample shape differs from stored samples"));
            }
        }
        let stamp = self.counter;
        self.counter += 1;
        if self.samples.is_empty() {
            self.push(sample, 1.0, stamp);
            return Ok(());
        }
        if gamma == 0.0 {
            return Ok(());
        }
        self.weights.iter_mut().for_each(|w| *w *= 1.0 - gamma);
        self.push(sample, gamma, stamp);
        while self.samples.len() > self.capacity {
            let victim = (0..self.samples.len())
                .min_by(|&a, &b| {
                    self.weights[a]
                        .total_cmp(&self.weights[b])
                        .then(self.inserted[a].cmp(&self.inserted[b]))
                })
                .expect("memory is nonempty");
            self.samples.remove(victim);
            self.weights.remove(victim);
            self.inserted.remove(victim);
        }
        let total: f64 = self.weights.iter().sum();
        if total > 0.0 {
            self.weights.iter_mut().for_each(|w| *w /= total);
        }
        Ok(())
    }

    fn push(&mut self, sample: SampleSpectrum, weight: f64, stamp: u64) {
        self.samples.push(sample);
        self.weights.push(weight);
        self.inserted.push(stamp);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft::ComplexGrid;
    use proptest::prelude::*;
    use rustfft::num_complex::Complex64;

    fn tagged(v: f64) -> SampleSpectrum {
        SampleSpectrum::new(vec![ComplexGrid::from_fn(2, 2, |_, _| Complex64::new(v, 0.0))]).unwrap()
    }

    fn tag(s: &SampleSpectrum) -> f64 {
        s.channels()[0].as_slice()[0].re
    }

    #[test]
    fn first_sample_gets_full_weight() {
        let mut m = SampleMemory::new(5).unwrap();
        m.update(tagged(1.0), 0.3).unwrap();
        assert_eq!(m.weights(), &[1.0]);
    }

    #[test]
    fn weights_follow_scalar_recursion() {
        // independent simulation of the recursion without eviction
        let gamma = 0.009;
        let mut m = SampleMemory::new(100).unwrap();
        let mut expected: Vec<f64> = Vec::new();
        for t in 0..40 {
            m.update(tagged(t as f64), gamma).unwrap();
            if expected.is_empty() {
                expected.push(1.0);
            } else {
                expected.iter_mut().for_each(|w| *w *= 1.0 - gamma);
                expected.push(gamma);
            }
        }
        for (a, b) in m.weights().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn evicts_lowest_then_oldest() {
        let mut m = SampleMemory::new(3).unwrap();
        for t in 0..3 {
            m.update(tagged(t as f64), 0.5).unwrap();
        }
        // weights now [0.25, 0.25, 0.5]; the tie between 0 and 1 drops 0
        m.update(tagged(3.0), 0.5).unwrap();
        let tags: Vec<f64> = m.samples().iter().map(tag).collect();
        assert_eq!(tags, vec![1.0, 2.0, 3.0]);
        let sum: f64 = m.weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_rate_drops_new_samples() {
        let mut m = SampleMemory::new(4).unwrap();
        m.update(tagged(1.0), 0.0).unwrap();
        m.update(tagged(2.0), 0.0).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(tag(&m.samples()[0]), 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SampleMemory::new(0).is_err());
        let mut m = SampleMemory::new(2).unwrap();
        assert!(m.update(tagged(1.0), 1.5).is_err());
        m.update(tagged(1.0), 0.5).unwrap();
        let other = SampleSpectrum::new(vec![ComplexGrid::zeros(3, 3)]).unwrap();
        assert!(m.update(other, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn capacity_and_normalization(gamma in 0.001f64..1.0, n in 1usize..60, cap in 1usize..20) {
            let mut m = SampleMemory::new(cap).unwrap();
            for t in 0..n {
                m.update(tagged(t as f64), gamma).unwrap();
                prop_assert!(m.len() <= cap);
                let sum: f64 = m.weights().iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
                prop_assert!(m.weights().iter().all(|w| *w >= 0.0));
            }
        }
    }
}
