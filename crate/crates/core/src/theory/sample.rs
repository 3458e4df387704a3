//! Random instances for the verification battery.

use rand::Rng;

use crate::tensor::Tensor;

use super::words::ShiftPair;

/// Random shift pair with iid uniform(-1, 1) entries. In symmetric
/// mode each operator is symmetrized (undirected adjacency).
pub fn random_shift_pair(n: usize, symmetric: bool, rng: &mut impl Rng) -> ShiftPair {
    let draw = |rng: &mut dyn FnMut() -> f64| {
        let mut t = Tensor::zeros(&[n, n]);
        for i in 0..n {
            for j in 0..n {
                *t.at_mut(i, j) = rng();
            }
        }
        t
    };
    let mut s1 = draw(&mut || rng.gen_range(-1.0..1.0));
    let mut s2 = draw(&mut || rng.gen_range(-1.0..1.0));
    if symmetric {
        s1 = symmetrize(&s1);
        s2 = symmetrize(&s2);
    }
    ShiftPair::new(s1, s2).expect("finite square matrices")
}

fn symmetrize(a: &Tensor) -> Tensor {
    a.add(&a.transpose()).expect("same shape").scale(0.5)
}

/// Random symmetric positive definite matrix `A Aᵀ + n I`.
pub fn random_pd_sigma(n: usize, rng: &mut impl Rng) -> Tensor {
    let mut a = Tensor::zeros(&[n, n]);
    for i in 0..n {
        for j in 0..n {
            *a.at_mut(i, j) = rng.gen_range(-1.0..1.0);
        }
    }
    a.matmul(&a.transpose())
        .expect("square")
        .add(&Tensor::eye(n).scale(n as f64))
        .expect("same shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::project::validate_sigma;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pd_sigma_validates() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [2, 4, 8] {
            let sigma = random_pd_sigma(n, &mut rng);
            assert!(validate_sigma(&sigma, n).is_ok());
        }
    }

    #[test]
    fn symmetric_mode_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random_shift_pair(5, true, &mut rng);
        assert!(s.s1.max_abs_diff(&s.s1.transpose()) == 0.0);
        assert!(s.s2.max_abs_diff(&s.s2.transpose()) == 0.0);
    }

    #[test]
    fn random_pairs_rarely_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_shift_pair(4, false, &mut rng);
        assert!(s.commutator_fro() > 1e-3);
    }
}
