use fugnn_core::lemma::convolution_similarity;
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    let mut q = Array2::<f64>::zeros((n, n));
    let mut j = 0;
    while j < n {
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        for _ in 0..2 {
            for c in 0..j {
                let d: f64 = (0..n).map(|i| q[[i, c]] * v[i]).sum();
                (0..n).for_each(|i| v[i] -= d * q[[i, c]]);
            }
        }
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-8 {
            (0..n).for_each(|i| q[[i, j]] = v[i] / r);
            j += 1;
        }
    }
    q
}

/// `cos⟨Sˡh, h⟩` written in the eigenbasis, with every power divided by `λ_1ˡ`.
fn closed_form(alpha: &[f64], lambda: &[f64], l: usize) -> f64 {
    let r: Vec<f64> = lambda.iter().map(|x| (x / lambda[0]).powi(l as i32)).collect();
    let num: f64 = alpha.iter().zip(&r).map(|(a, r)| a * a * r).sum();
    let den: f64 = alpha.iter().zip(&r).map(|(a, r)| a * a * r * r).sum::<f64>().sqrt();
    let norm = alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
    num / (norm * den)
}

struct Instance {
    s: Array2<f64>,
    h: Vec<f64>,
    alpha: Vec<f64>,
    lambda: Vec<f64>,
}

fn instance(gap: f64, n: usize, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lambda = vec![gap, 1.0];
    lambda.extend((2..n).map(|_| rng.random_range(-0.95..0.95)));
    let alpha: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let p = random_orthogonal(&mut rng, n);
    let scaled = Array2::from_shape_fn((n, n), |(i, j)| p[[i, j]] * lambda[j]);
    let s = scaled.dot(&p.t());
    let h = p.dot(&ndarray::Array1::from(alpha.clone())).to_vec();
    Instance { s, h, alpha, lambda }
}

#[test]
fn sequence_matches_the_eigenbasis_formula_across_the_gap_ladder() {
    for (i, gap) in [1.2, 1.5, 2.0, 4.0].into_iter().enumerate() {
        let inst = instance(gap, 25, i as u64);
        for l in [0, 1, 2, 5, 10, 30, 80] {
            let got = convolution_similarity(&inst.s, &inst.h, l).unwrap().unwrap();
            let want = closed_form(&inst.alpha, &inst.lambda, l);
            assert!((got - want).abs() < 1e-10, "gap {gap} l {l}: {got} vs {want}");
        }
    }
}

#[test]
fn wider_gaps_reach_the_limit_in_fewer_steps() {
    let steps_to_converge = |gap: f64| {
        let inst = instance(gap, 25, 11);
        let norm = inst.alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
        let limit = inst.alpha[0].abs() / norm;
        (0..400)
            .find(|&l| (convolution_similarity(&inst.s, &inst.h, l).unwrap().unwrap() - limit).abs() < 1e-8)
            .expect("converges within 400 steps")
    };
    let steps: Vec<usize> = [1.2, 1.5, 2.0, 4.0].into_iter().map(steps_to_converge).collect();
    for w in steps.windows(2) {
        assert!(w[0] > w[1], "{steps:?}");
    }
    // the error decays like gap^(-2l), so about log(1e8)/(2 log gap) steps
    for (gap, s) in [1.2f64, 1.5, 2.0, 4.0].iter().zip(&steps) {
        let scale = (1e8f64).ln() / (2.0 * gap.ln());
        assert!((*s as f64) < 2.0 * scale + 5.0, "gap {gap}: {s} steps");
    }
}

#[test]
fn two_by_two_diagonal_has_a_closed_form() {
    let s = Array2::from_diag(&ndarray::arr1(&[2.0, 1.0]));
    for l in 0..40 {
        let p = 2f64.powi(l as i32);
        let want = (p + 1.0) / (2f64.sqrt() * (p * p + 1.0).sqrt());
        let got = convolution_similarity(&s, &[1.0, 1.0], l).unwrap().unwrap();
        assert!((got - want).abs() < 1e-14, "l {l}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn similarity_is_a_cosine_and_ignores_the_scale_of_h(seed in 0u64..1000, l in 0usize..30, c in 0.01f64..100.0) {
        let inst = instance(1.5, 8, seed);
        let a = convolution_similarity(&inst.s, &inst.h, l).unwrap().unwrap();
        let scaled: Vec<f64> = inst.h.iter().map(|x| x * c).collect();
        let b = convolution_similarity(&inst.s, &scaled, l).unwrap().unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&a));
        prop_assert!((a - b).abs() < 1e-12);
    }
}
