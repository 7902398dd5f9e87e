use crate::error::{Error, Result};

use super::cg::{cg_solve, KrylovVector, LinearOperator};
use super::label::LabelSpectrum;
use super::operator::{normal_operator, NormalOperator};
use super::penalty::PenaltySpectrum;
use super::spectrum::{SampleSpectrum, SpectralFilter};

#[derive(Debug, Clone)]
pub struct LearnOutcome {
    pub filter: SpectralFilter,
    /// `||b - A H||` of the normal equations at the returned filter.
    pub residual: f64,
    pub iterations: usize,
    pub objective: f64,
    pub breakdown: bool,
}

/// Weighted least-squares objective
/// `sum_i a_i ||sum_j H_j B_ij - Y||^2 / N + sum_j ||P * H_j||^2 / N`,
/// which equals the spatial sum of squared errors over the grid.
pub fn objective(
    filter: &SpectralFilter,
    samples: &[SampleSpectrum],
    weights: &[f64],
    label: &LabelSpectrum,
    penalty: &PenaltySpectrum,
) -> Result<f64> {
    let op = normal_operator(samples, weights, penalty)?;
    check_filter(&op, filter)?;
    if label.grid() != op.grid() {
        return Err(Error::invalid("label grid does not match sample grid"));
    }
    let n = (op.grid().0 * op.grid().1) as f64;
    let mut data = 0.0;
    for (s, &w) in samples.iter().zip(weights) {
        let r = NormalOperator::response(s, filter);
        let err: f64 = r
            .as_slice()
            .iter()
            .zip(label.coefficients.as_slice())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        data += w * err;
    }
    let reg: f64 = if penalty.is_zero() {
        0.0
    } else {
        filter
            .channels()
            .iter()
            .map(|h| penalty.apply(h).as_slice().iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sum()
    };
    Ok((data + reg) / n)
}

fn check_filter(op: &NormalOperator<'_>, filter: &SpectralFilter) -> Result<()> {
    if filter.channel_count() != op.channel_count() || filter.grid() != op.grid() {
        return Err(Error::invalid(format!(
            "filter has {} channels on {:?}, samples have {} on {:?}",
            filter.channel_count(),
            filter.grid(),
            op.channel_count(),
            op.grid()
        )));
    }
    Ok(())
}

/// Runs `iters` conjugate-gradient steps on the normal equations, starting
/// from `init` (or zero).
pub fn learn(
    samples: &[SampleSpectrum],
    weights: &[f64],
    label: &LabelSpectrum,
    penalty: &PenaltySpectrum,
    init: Option<&SpectralFilter>,
    iters: usize,
) -> Result<LearnOutcome> {
    let op = normal_operator(samples, weights, penalty)?;
    let rhs = op.rhs(label)?;
    let x0 = match init {
        Some(h) => {
            check_filter(&op, h)?;
            h.clone()
        }
        None => rhs.zeros_like(),
    };
    let cg = cg_solve(&op, &rhs, &x0, iters)?;
    if !cg.solution.is_finite() {
        return Err(Error::data("filter learning produced non-finite coefficients"));
    }
    let mut residual = rhs;
    residual.axpy(-1.0, &op.apply(&cg.solution));
    let objective = objective(&cg.solution, samples, weights, label, penalty)?;
    Ok(LearnOutcome {
        filter: cg.solution,
        residual: residual.norm_sqr().sqrt(),
        iterations: cg.iterations,
        objective,
        breakdown: cg.breakdown,
    })
}

/// Temporal blend `(1 - gamma) prior + gamma current`.
pub fn update_filter(prior: &SpectralFilter, current: &SpectralFilter, gamma: f64) -> Result<SpectralFilter> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid(format!("learning rate {gamma} outside [0, 1]")));
    }
    if !prior.same_shape(current) {
        return Err(Error::invalid("prior and current filters differ in shape"));
    }
    if gamma == 0.0 {
        return Ok(prior.clone());
    }
    Ok(prior.lincomb(1.0 - gamma, current, gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft::{ifft2, ComplexGrid};
    use crate::filter_core::label::gaussian_label;
    use crate::filter_core::penalty::penalty_spectrum;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rustfft::num_complex::Complex64;

    fn random(rng: &mut ChaCha8Rng, channels: usize, grid: (usize, usize)) -> SampleSpectrum {
        SampleSpectrum::new(
            (0..channels)
                .map(|_| {
                    ComplexGrid::from_fn(grid.0, grid.1, |_, _| {
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    })
                })
                .collect(),
        )
        .unwrap()
    }

    fn setup(seed: u64) -> (Vec<SampleSpectrum>, Vec<f64>, LabelSpectrum, PenaltySpectrum) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = (8, 7);
        let samples = (0..3).map(|_| random(&mut rng, 2, grid)).collect();
        (
            samples,
            vec![0.5, 0.25, 0.25],
            gaussian_label(grid, (3.0, 2.0)).unwrap(),
            penalty_spectrum(3.0, 2.0, 5, grid).unwrap(),
        )
    }

    #[test]
    fn objective_equals_spatial_sum_of_squares() {
        let (samples, weights, label, penalty) = setup(1);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = random(&mut rng, 2, (8, 7));
        let got = objective(&h, &samples, &weights, &label, &penalty).unwrap();
        let mut expected = 0.0;
        for (s, w) in samples.iter().zip(&weights) {
            let r = NormalOperator::response(s, &h);
            let diff = ComplexGrid::from_fn(8, 7, |a, b| r[(a, b)] - label.coefficients[(a, b)]);
            expected += w * ifft2(&diff).as_slice().iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
        let spatial_p = penalty.spatial((8, 7));
        for ch in h.channels() {
            let hs = ifft2(ch);
            expected += hs
                .as_slice()
                .iter()
                .zip(spatial_p.as_slice())
                .map(|(v, p)| (v * p).norm_sqr())
                .sum::<f64>();
        }
        assert!((got - expected).abs() < 1e-10 * expected.max(1.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (samples, weights, label, penalty) = setup(2);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let h = random(&mut rng, 2, (8, 7));
        let d = random(&mut rng, 2, (8, 7));
        let op = normal_operator(&samples, &weights, &penalty).unwrap();
        let mut grad = op.apply(&h);
        grad.axpy(-1.0, &op.rhs(&label).unwrap());
        let analytic = 2.0 / 56.0 * d.dot(&grad);
        let eps = 1e-5;
        let f = |s: f64| objective(&h.lincomb(1.0, &d, s), &samples, &weights, &label, &penalty).unwrap();
        let numeric = (f(eps) - f(-eps)) / (2.0 * eps);
        assert!((analytic - numeric).abs() < 1e-6 * analytic.abs().max(1.0));
    }

    #[test]
    fn converged_solution_minimizes_objective() {
        let (samples, weights, label, penalty) = setup(3);
        let out = learn(&samples, &weights, &label, &penalty, None, 400).unwrap();
        assert!(out.residual < 1e-9, "residual {}", out.residual);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..5 {
            let d = random(&mut rng, 2, (8, 7));
            let moved = objective(&out.filter.lincomb(1.0, &d, 1e-3), &samples, &weights, &label, &penalty).unwrap();
            assert!(moved >= out.objective);
        }
    }

    #[test]
    fn single_sample_without_penalty_inverts_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = random(&mut rng, 1, (5, 5));
        let label = gaussian_label((5, 5), (2.0, 2.0)).unwrap();
        let out = learn(&[s.clone()], &[1.0], &label, &PenaltySpectrum::zero(), None, 50).unwrap();
        for k in 0..25 {
            let expected = label.coefficients.as_slice()[k] / s.channels()[0].as_slice()[k];
            assert!((out.filter.channels()[0].as_slice()[k] - expected).norm() < 1e-8);
        }
        assert!(out.objective < 1e-16);
    }

    #[test]
    fn warm_start_at_solution_stays() {
        let (samples, weights, label, penalty) = setup(5);
        let solved = learn(&samples, &weights, &label, &penalty, None, 400).unwrap();
        let again = learn(&samples, &weights, &label, &penalty, Some(&solved.filter), 5).unwrap();
        assert!((again.objective - solved.objective).abs() < 1e-12);
    }

    #[test]
    fn update_filter_blends() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random(&mut rng, 2, (4, 4));
        let b = random(&mut rng, 2, (4, 4));
        assert_eq!(update_filter(&a, &b, 0.0).unwrap(), a);
        assert_eq!(update_filter(&a, &b, 1.0).unwrap(), b);
        let mid = update_filter(&a, &b, 0.25).unwrap();
        for (m, (x, y)) in mid.channels()[1]
            .as_slice()
            .iter()
            .zip(a.channels()[1].as_slice().iter().zip(b.channels()[1].as_slice()))
        {
            assert!((m - (x * 0.75 + y * 0.25)).norm() < 1e-15);
        }
        assert!(update_filter(&a, &b, -0.1).is_err());
        assert!(update_filter(&a, &random(&mut rng, 1, (4, 4)), 0.5).is_err());
    }
}
