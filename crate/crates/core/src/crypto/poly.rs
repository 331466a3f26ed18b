//! Polynomials over the scalar field and Lagrange interpolation weights.

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::group::{GroupParams, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LagrangeError {
    #[error("participant {0} is not in the signer set")]
    IdNotInSet(u32),
    #[error("signer set contains duplicate id {0}")]
    DuplicateInSet(u32),
    #[error("signer set contains the forbidden x-coordinate 0")]
    ZeroInSet,
}

/// A polynomial of degree `threshold - 1`; the constant coefficient is the
/// shared secret contribution.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Polynomial {
    coefficients: Vec<Scalar>,
}

impl Polynomial {
    /// Samples `threshold` coefficients with the given constant term.
    pub fn random(
        params: &GroupParams,
        constant: Scalar,
        threshold: u32,
        rng: &mut dyn RngCore,
    ) -> Self {
        let mut coefficients = Vec::with_capacity(threshold as usize);
        coefficients.push(constant);
        for _ in 1..threshold {
            coefficients.push(params.random_scalar(rng));
        }
        Polynomial { coefficients }
    }

    pub fn from_coefficients(coefficients: Vec<Scalar>) -> Self {
        Polynomial { coefficients }
    }

    pub fn coefficients(&self) -> &[Scalar] {
        &self.coefficients
    }

    pub fn threshold(&self) -> u32 {
        self.coefficients.len() as u32
    }

    pub fn constant(&self) -> &Scalar {
        &self.coefficients[0]
    }

    /// Horner evaluation at a small integer x-coordinate.
    pub fn evaluate(&self, params: &GroupParams, x: u32) -> Scalar {
        let x = params.scalar_from_u64(x as u64);
        let mut acc = params.scalar_zero();
        for coeff in self.coefficients.iter().rev() {
            acc = params.scalar_add(&params.scalar_mul(&acc, &x), coeff);
        }
        acc
    }
}

/// The interpolation weight λ_id for evaluating at x = 0:
/// λ_id = Π_{j ∈ set, j ≠ id} j · (j − id)^{-1} mod q.
pub fn lagrange_coefficient(
    params: &GroupParams,
    id: u32,
    signer_set: &[u32],
) -> Result<Scalar, LagrangeError> {
    let mut seen = std::collections::BTreeSet::new();
    for &j in signer_set {
        if j == 0 {
            return Err(LagrangeError::ZeroInSet);
        }
        if !seen.insert(j) {
            return Err(LagrangeError::DuplicateInSet(j));
        }
    }
    if !seen.contains(&id) {
        return Err(LagrangeError::IdNotInSet(id));
    }
    let id_s = params.scalar_from_u64(id as u64);
    let mut acc = params.scalar_one();
    for &j in signer_set {
        if j == id {
            continue;
        }
        let j_s = params.scalar_from_u64(j as u64);
        let denom = params.scalar_sub(&j_s, &id_s);
        let inv = params
            .scalar_inv(&denom)
            .expect("distinct nonzero ids below q give nonzero denominators");
        acc = params.scalar_mul(&acc, &params.scalar_mul(&j_s, &inv));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn pair_weights_are_analytic() {
        // set {1,2}: λ_1 = 2, λ_2 = q − 1.
        let g = GroupParams::toy();
        assert_eq!(
            lagrange_coefficient(&g, 1, &[1, 2]).unwrap(),
            g.scalar_from_u64(2)
        );
        assert_eq!(
            lagrange_coefficient(&g, 2, &[1, 2]).unwrap(),
            g.scalar_from_u64(22)
        );
        let p = GroupParams::production();
        assert_eq!(
            lagrange_coefficient(&p, 2, &[1, 2]).unwrap(),
            p.scalar_neg(&p.scalar_one())
        );
    }

    #[test]
    fn singleton_weight_is_one() {
        let g = GroupParams::toy();
        assert_eq!(lagrange_coefficient(&g, 5, &[5]).unwrap(), g.scalar_one());
    }

    #[test]
    fn triple_weights_mod_23() {
        let g = GroupParams::toy();
        let set = [1, 2, 3];
        assert_eq!(
            lagrange_coefficient(&g, 1, &set).unwrap(),
            g.scalar_from_u64(3)
        );
        assert_eq!(
            lagrange_coefficient(&g, 2, &set).unwrap(),
            g.scalar_from_u64(20)
        );
        assert_eq!(
            lagrange_coefficient(&g, 3, &set).unwrap(),
            g.scalar_from_u64(1)
        );
    }

    #[test]
    fn weights_reconstruct_random_quadratics() {
        // Brute-force oracle: Σ λ_i · f(i) must equal f(0) for random
        // quadratics mod 23 over every 3-subset of {1..6}.
        let g = GroupParams::toy();
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        for _ in 0..50 {
            let f = Polynomial::random(&g, g.random_scalar(&mut rng), 3, &mut rng);
            for a in 1u32..=4 {
                for b in (a + 1)..=5 {
                    for c in (b + 1)..=6 {
                        let set = [a, b, c];
                        let mut sum = g.scalar_zero();
                        for &i in &set {
                            let lam = lagrange_coefficient(&g, i, &set).unwrap();
                            sum = g.scalar_add(&sum, &g.scalar_mul(&lam, &f.evaluate(&g, i)));
                        }
                        assert_eq!(&sum, f.constant());
                    }
                }
            }
        }
    }

    #[test]
    fn weights_sum_to_one() {
        let g = GroupParams::production();
        let set = [3, 9, 11, 40];
        let mut sum = g.scalar_zero();
        for &i in &set {
            sum = g.scalar_add(&sum, &lagrange_coefficient(&g, i, &set).unwrap());
        }
        assert_eq!(sum, g.scalar_one());
    }

    #[test]
    fn error_cases() {
        let g = GroupParams::toy();
        assert_eq!(
            lagrange_coefficient(&g, 4, &[1, 2]),
            Err(LagrangeError::IdNotInSet(4))
        );
        assert_eq!(
            lagrange_coefficient(&g, 1, &[1, 2, 2]),
            Err(LagrangeError::DuplicateInSet(2))
        );
        assert_eq!(
            lagrange_coefficient(&g, 1, &[0, 1]),
            Err(LagrangeError::ZeroInSet)
        );
    }

    #[test]
    fn horner_matches_direct_evaluation() {
        let g = GroupParams::toy();
        // f(x) = 5 + 3x mod 23.
        let f = Polynomial::from_coefficients(vec![g.scalar_from_u64(5), g.scalar_from_u64(3)]);
        assert_eq!(f.evaluate(&g, 0), g.scalar_from_u64(5));
        assert_eq!(f.evaluate(&g, 1), g.scalar_from_u64(8));
        assert_eq!(f.evaluate(&g, 2), g.scalar_from_u64(11));
        assert_eq!(f.threshold(), 2);
    }
}
