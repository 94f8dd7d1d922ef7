//! Poseidon permutation over the BN254 scalar field.
//!
//! Round constants and the MDS matrix are derived with the Grain LFSR procedure of
//! the reference parameter generator (x^5 S-box, 8 full rounds). The same
//! [`PoseidonParams`] instance drives the native permutation here and the
//! constraint gadget in `circuit::gadgets`, so both sides agree bit-for-bit.

use std::sync::OnceLock;

use ark_ff::{Field, PrimeField};
use num_bigint::BigUint;

use super::field::{modulus, Fr};

pub const FULL_ROUNDS: usize = 8;
pub const ALPHA: u64 = 5;

/// Partial round counts for widths 2..=8, matching the widely deployed BN254 instances.
const PARTIAL_ROUNDS: [usize; 7] = [56, 57, 56, 60, 60, 63, 64];

#[derive(Debug, Clone)]
pub struct PoseidonParams {
    pub width: usize,
    pub full_rounds: usize,
    pub partial_rounds: usize,
    /// `(full_rounds + partial_rounds) * width` constants, row-major by round.
    pub round_constants: Vec<Fr>,
    pub mds: Vec<Vec<Fr>>,
}

impl PoseidonParams {
    pub fn generate(width: usize) -> Self {
        assert!((2..=8).contains(&width), "unsupported Poseidon width {width}");
        let partial_rounds = PARTIAL_ROUNDS[width - 2];
        let field_bits = 254;
        let mut grain = Grain::new(field_bits, width, FULL_ROUNDS, partial_rounds);
        let p = modulus();

        let total = (FULL_ROUNDS + partial_rounds) * width;
        let mut round_constants = Vec::with_capacity(total);
        while round_constants.len() < total {
            let candidate = grain.next_integer(field_bits);
            if candidate < p {
                round_constants.push(to_fr(&candidate));
            }
        }

        let mds = loop {
            let mut values: Vec<Fr> = (0..2 * width)
                .map(|_| to_fr(&(grain.next_integer(field_bits) % &p)))
                .collect();
            let mut sorted = values.clone();
            sorted.sort_by_key(|v| v.into_repr());
            sorted.dedup();
            if sorted.len() != values.len() {
                continue;
            }
            let ys = values.split_off(width);
            let xs = values;
            let mut ok = true;
            let mut m = vec![vec![Fr::from(0u64); width]; width];
            for i in 0..width {
                for j in 0..width {
                    match (xs[i] + ys[j]).inverse() {
                        Some(inv) => m[i][j] = inv,
                        None => ok = false,
                    }
                }
            }
            if ok {
                break m;
            }
        };

        PoseidonParams {
            width,
            full_rounds: FULL_ROUNDS,
            partial_rounds,
            round_constants,
            mds,
        }
    }

    pub fn rounds(&self) -> usize {
        self.full_rounds + self.partial_rounds
    }

    pub fn is_full_round(&self, round: usize) -> bool {
        let half = self.full_rounds / 2;
        round < half || round >= half + self.partial_rounds
    }

    pub fn round_constant(&self, round: usize, lane: usize) -> Fr {
        self.round_constants[round * self.width + lane]
    }

    pub fn permute(&self, state: &mut [Fr]) {
        assert_eq!(state.len(), self.width);
        let mut scratch = vec![Fr::from(0u64); self.width];
        for round in 0..self.rounds() {
            for (lane, s) in state.iter_mut().enumerate() {
                *s += self.round_constant(round, lane);
            }
            if self.is_full_round(round) {
                state.iter_mut().for_each(sbox);
            } else {
                sbox(&mut state[0]);
            }
            for (i, out) in scratch.iter_mut().enumerate() {
                *out = state
                    .iter()
                    .zip(&self.mds[i])
                    .fold(Fr::from(0u64), |acc, (s, m)| acc + *s * m);
            }
            state.copy_from_slice(&scratch);
        }
    }
}

fn sbox(x: &mut Fr) {
    let x2 = x.square();
    let x4 = x2.square();
    *x *= x4;
}

fn to_fr(value: &BigUint) -> Fr {
    Fr::from_le_bytes_mod_order(&value.to_bytes_le())
}

/// Cached parameters for a given width.
pub fn params(width: usize) -> &'static PoseidonParams {
    static CACHE: [OnceLock<PoseidonParams>; 9] = [const { OnceLock::new() }; 9];
    CACHE[width].get_or_init(|| PoseidonParams::generate(width))
}

/// 80-bit self-shrinking Grain LFSR.
struct Grain {
    state: [bool; 80],
}

impl Grain {
    fn new(field_bits: usize, width: usize, full_rounds: usize, partial_rounds: usize) -> Self {
        let mut bits = Vec::with_capacity(80);
        push_bits(&mut bits, 1, 2); // prime field
        push_bits(&mut bits, 0, 4); // x^alpha s-box
        push_bits(&mut bits, field_bits as u64, 12);
        push_bits(&mut bits, width as u64, 12);
        push_bits(&mut bits, full_rounds as u64, 10);
        push_bits(&mut bits, partial_rounds as u64, 10);
        bits.extend(std::iter::repeat_n(true, 30));
        let mut grain = Grain {
            state: bits.try_into().unwrap(),
        };
        for _ in 0..160 {
            grain.step();
        }
        grain
    }

    fn step(&mut self) -> bool {
        let s = &self.state;
        let new = s[62] ^ s[51] ^ s[38] ^ s[23] ^ s[13] ^ s[0];
        self.state.copy_within(1.., 0);
        self.state[79] = new;
        new
    }

    fn next_bit(&mut self) -> bool {
        loop {
            let select = self.step();
            let candidate = self.step();
            if select {
                return candidate;
            }
        }
    }

    /// Big-endian integer of `n` output bits.
    fn next_integer(&mut self, n: usize) -> BigUint {
        let mut v = BigUint::from(0u32);
        for _ in 0..n {
            v <<= 1;
            if self.next_bit() {
                v += 1u32;
            }
        }
        v
    }
}

fn push_bits(out: &mut Vec<bool>, value: u64, width: usize) {
    for i in (0..width).rev() {
        out.push((value >> i) & 1 == 1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::FieldElement;

    fn hash_circom_style(inputs: &[u64]) -> FieldElement {
        let p = params(inputs.len() + 1);
        let mut state = vec![Fr::from(0u64)];
        state.extend(inputs.iter().map(|v| Fr::from(*v)));
        p.permute(&mut state);
        FieldElement::from_fr(state[0])
    }

    // Published reference outputs for the t=3 and t=5 BN254 instances.
    #[test]
    fn matches_reference_vectors() {
        assert_eq!(
            hash_circom_style(&[1, 2]).to_biguint().to_str_radix(16),
            "115cc0f5e7d690413df64c6b9662e9cf2a3617f2743245519e19607a4417189a"
        );
        assert_eq!(
            hash_circom_style(&[1, 2, 3, 4]).to_biguint().to_str_radix(16),
            "299c867db6c1fdd79dcefa40e4510b9837e60ebb1ce0663dbaa525df65250465"
        );
    }

    #[test]
    fn round_schedule() {
        let p = params(6);
        assert_eq!(p.rounds(), 68);
        assert!(p.is_full_round(0) && p.is_full_round(3));
        assert!(!p.is_full_round(4) && !p.is_full_round(63));
        assert!(p.is_full_round(64) && p.is_full_round(67));
    }
}
