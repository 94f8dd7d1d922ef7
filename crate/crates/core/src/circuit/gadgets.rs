//! Constraint gadgets: bits, comparisons, Poseidon, Baby Jubjub arithmetic and EdDSA.
//!
//! Every gadget mirrors a native function in `crypto` and takes its witness values
//! from the builder, so compile and assign trace identical constraint shapes.

use ark_ff::{BigInteger, One, PrimeField, Zero};
use num_bigint::BigUint;

use super::r1cs::{Builder, Lc, Var};
use crate::crypto::babyjubjub::{base_point_powers, coeff_a, coeff_d, CurvePoint};
use crate::crypto::field::modulus;
use crate::crypto::hash::{hash_params, HASH_RATE, HASH_WIDTH};
use crate::crypto::Fr;

/// Linear combinations longer than this are replaced by a fresh variable.
const MAX_LC_TERMS: usize = 16;

pub fn boolean(b: &mut Builder, bit: bool) -> Var {
    let v = b.alloc(if bit { Fr::one() } else { Fr::zero() });
    b.enforce(Lc::var(v), Lc::var(v).add_const(-Fr::one()), Lc::zero());
    v
}

fn fr_bit(x: &Fr, i: usize) -> bool {
    let repr = x.into_repr();
    i < 256 && repr.get_bit(i)
}

/// Little-endian decomposition of `x` into `n` booleans, with `Σ 2^i·bit_i = x`.
pub fn to_bits(b: &mut Builder, x: &Lc, n: usize) -> Vec<Var> {
    let value = b.eval(x);
    let bits: Vec<Var> = (0..n).map(|i| boolean(b, fr_bit(&value, i))).collect();
    let mut sum = Lc::zero();
    let mut coeff = Fr::one();
    for bit in &bits {
        sum = sum.add_scaled(&Lc::var(*bit), coeff);
        coeff.double_in_place();
    }
    b.enforce_equal(&sum, x);
    bits
}

/// Booleans for the low `n` bits of an integer that is not itself a circuit value.
pub fn integer_bits(b: &mut Builder, v: &BigUint, n: usize) -> Vec<Var> {
    (0..n).map(|i| boolean(b, v.bit(i as u64))).collect()
}

/// Chained product of boolean combinations; no constraint for a single factor.
fn and_all(b: &mut Builder, factors: &[Lc]) -> Lc {
    let mut iter = factors.iter().filter(|f| f.constant_value() != Some(Fr::one()));
    let Some(first) = iter.next() else {
        return Lc::one();
    };
    let mut acc = first.clone();
    for f in iter {
        acc = b.mul(&acc, f);
    }
    acc
}

/// Enforces `Σ 2^i·bits[i] ≤ c` for little-endian booleans.
pub fn enforce_le_const(b: &mut Builder, bits: &[Var], c: &BigUint) {
    assert!(c.bits() as usize <= bits.len(), "constant wider than bit vector");
    // `prefix` is 1 while the bits seen so far (from the top) equal those of `c`.
    let mut prefix = Lc::one();
    let mut run: Vec<Lc> = Vec::new();
    for i in (0..bits.len()).rev() {
        let bit = Lc::var(bits[i]);
        if c.bit(i as u64) {
            run.push(bit);
        } else {
            if !run.is_empty() {
                run.push(prefix.clone());
                prefix = and_all(b, &run);
                run.clear();
            }
            b.enforce(prefix.clone(), bit, Lc::zero());
        }
    }
}

fn sbox(b: &mut Builder, x: &Lc) -> Lc {
    let x2 = b.mul(x, x);
    let x4 = b.mul(&x2, &x2);
    b.mul(&x4, x)
}

pub fn poseidon_permute(b: &mut Builder, mut state: Vec<Lc>) -> Vec<Lc> {
    let p = hash_params();
    assert_eq!(state.len(), p.width);
    for round in 0..p.rounds() {
        for (lane, s) in state.iter_mut().enumerate() {
            *s = s.add_const(p.round_constant(round, lane));
        }
        if p.is_full_round(round) {
            for s in state.iter_mut() {
                *s = sbox(b, s);
            }
        } else {
            state[0] = sbox(b, &state[0]);
        }
        let mut next = Vec::with_capacity(p.width);
        for row in &p.mds {
            let lc = state
                .iter()
                .zip(row)
                .fold(Lc::zero(), |acc, (s, m)| acc.add_scaled(s, *m));
            next.push(if lc.len() > MAX_LC_TERMS { b.materialize(&lc) } else { lc });
        }
        state = next;
    }
    state
}

/// Circuit counterpart of `crypto::hash::hash_fields`.
pub fn hash(b: &mut Builder, inputs: &[Lc]) -> Lc {
    assert!(!inputs.is_empty());
    let mut state = vec![Lc::zero(); HASH_WIDTH];
    state[0] = Lc::constant(Fr::from(inputs.len() as u64));
    for chunk in inputs.chunks(HASH_RATE) {
        for (lane, x) in chunk.iter().enumerate() {
            state[lane + 1] = state[lane + 1].add(x);
        }
        state = poseidon_permute(b, state);
    }
    state.swap_remove(1)
}

#[derive(Clone, Debug)]
pub struct PointVar {
    pub x: Lc,
    pub y: Lc,
}

impl PointVar {
    pub fn constant(p: &CurvePoint) -> Self {
        PointVar {
            x: Lc::constant(p.x().fr()),
            y: Lc::constant(p.y().fr()),
        }
    }

    pub fn identity() -> Self {
        PointVar {
            x: Lc::zero(),
            y: Lc::one(),
        }
    }

    pub fn alloc(b: &mut Builder, x: Fr, y: Fr) -> Self {
        PointVar {
            x: Lc::var(b.alloc(x)),
            y: Lc::var(b.alloc(y)),
        }
    }

    pub fn from_vars(x: Var, y: Var) -> Self {
        PointVar {
            x: Lc::var(x),
            y: Lc::var(y),
        }
    }
}

/// `a·x² + y² = 1 + d·x²·y²`
pub fn enforce_on_curve(b: &mut Builder, p: &PointVar) {
    let x2 = b.mul(&p.x, &p.x);
    let y2 = b.mul(&p.y, &p.y);
    let lhs = x2.scale(coeff_a()).add(&y2).add_const(-Fr::one());
    b.enforce(x2.scale(coeff_d()), y2, lhs);
}

/// Twisted Edwards addition in six constraints.
pub fn add(b: &mut Builder, p: &PointVar, q: &PointVar) -> PointVar {
    let (a, d) = (coeff_a(), coeff_d());
    let beta = b.mul(&p.x, &q.y);
    let gamma = b.mul(&p.y, &q.x);
    let delta = b.mul(&p.x.scale(-a).add(&p.y), &q.x.add(&q.y));
    let tau = b.mul(&beta, &gamma);

    let x_num = beta.add(&gamma);
    let y_num = delta.add(&beta.scale(a)).sub(&gamma);
    let x_den = tau.scale(d).add_const(Fr::one());
    let y_den = tau.scale(-d).add_const(Fr::one());
    let x3_val = b.eval(&x_num) * b.eval(&x_den).inverse().unwrap_or_default();
    let y3_val = b.eval(&y_num) * b.eval(&y_den).inverse().unwrap_or_default();
    let x3 = Lc::var(b.alloc(x3_val));
    let y3 = Lc::var(b.alloc(y3_val));
    b.enforce(x3.clone(), x_den, x_num);
    b.enforce(y3.clone(), y_den, y_num);
    PointVar { x: x3, y: y3 }
}

pub fn double(b: &mut Builder, p: &PointVar) -> PointVar {
    add(b, p, p)
}

use ark_ff::Field;

/// `bit ? t : f`, two constraints.
pub fn select(b: &mut Builder, bit: Var, t: &PointVar, f: &PointVar) -> PointVar {
    let dx = b.mul(&Lc::var(bit), &t.x.sub(&f.x));
    let dy = b.mul(&Lc::var(bit), &t.y.sub(&f.y));
    PointVar {
        x: f.x.add(&dx),
        y: f.y.add(&dy),
    }
}

/// `bit ? P : identity` for a constant `P`, free of constraints.
fn select_constant(bit: Var, p: &CurvePoint) -> PointVar {
    PointVar {
        x: Lc::var(bit).scale(p.x().fr()),
        y: Lc::var(bit).scale(p.y().fr() - Fr::one()).add_const(Fr::one()),
    }
}

/// `Σ bit_i·2^i · B` for the subgroup generator `B`.
pub fn fixed_base_mul(b: &mut Builder, bits: &[Var]) -> PointVar {
    let powers = base_point_powers();
    assert!(bits.len() <= powers.len());
    let mut acc = select_constant(bits[0], &powers[0]);
    for (bit, p) in bits.iter().zip(powers).skip(1) {
        let term = select_constant(*bit, p);
        acc = add(b, &acc, &term);
    }
    acc
}

/// Double-and-add from the most significant bit.
pub fn var_base_mul(b: &mut Builder, bits: &[Var], q: &PointVar) -> PointVar {
    let mut acc = PointVar::identity();
    for (k, bit) in bits.iter().rev().enumerate() {
        let candidate = if k == 0 {
            q.clone()
        } else {
            acc = double(b, &acc);
            add(b, &acc, q)
        };
        acc = select(b, *bit, &candidate, &acc);
    }
    acc
}

pub fn subgroup_order_minus_one() -> BigUint {
    crate::crypto::babyjubjub::subgroup_order() - 1u32
}

pub fn field_modulus_minus_one() -> BigUint {
    modulus() - 1u32
}

pub const SCALAR_BITS: usize = crate::crypto::babyjubjub::SUBGROUP_ORDER_BITS;
pub const FIELD_BITS: usize = 254;

/// Circuit counterpart of `crypto::eddsa::verify_sig` for an on-curve public key `a`
/// with precomputed `a8 = 8·a`. `s_bits` are the little-endian bits of `S`.
pub fn eddsa_verify(b: &mut Builder, a: &PointVar, a8: &PointVar, msg: &[Lc], r: &PointVar, s_bits: &[Var]) {
    enforce_on_curve(b, r);
    enforce_le_const(b, s_bits, &subgroup_order_minus_one());
    let m = hash(b, msg);
    let h = hash(b, &[r.x.clone(), r.y.clone(), a.x.clone(), a.y.clone(), m]);
    let h_bits = to_bits(b, &h, FIELD_BITS);
    enforce_le_const(b, &h_bits, &field_modulus_minus_one());
    let left = fixed_base_mul(b, s_bits);
    let ha = var_base_mul(b, &h_bits, a8);
    let right = add(b, r, &ha);
    b.enforce_equal(&left.x, &right.x);
    b.enforce_equal(&left.y, &right.y);
}

pub fn times_eight(b: &mut Builder, p: &PointVar) -> PointVar {
    let p2 = double(b, p);
    let p4 = double(b, &p2);
    double(b, &p4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::r1cs::Mode;
    use crate::crypto::babyjubjub::base_point;
    use crate::crypto::{hash_fields, FieldElement};

    fn point_value(b: &Builder, p: &PointVar) -> CurvePoint {
        CurvePoint::new_unchecked(FieldElement::from_fr(b.eval(&p.x)), FieldElement::from_fr(b.eval(&p.y)))
    }

    #[test]
    fn hash_gadget_matches_native() {
        for n in [1usize, 4, 5, 6, 11] {
            let inputs: Vec<FieldElement> = (0..n as u64).map(|i| FieldElement::from_u64(i * 7 + 3)).collect();
            let mut b = Builder::new(Mode::Assign);
            let vars: Vec<Lc> = inputs.iter().map(|x| Lc::var(b.alloc(x.fr()))).collect();
            let out = hash(&mut b, &vars);
            assert!(b.violation().is_none());
            assert_eq!(b.eval(&out), hash_fields(&inputs).unwrap().value().fr(), "n={n}");
        }
    }

    #[test]
    fn point_ops_match_native() {
        let p = base_point().mul_u64(5);
        let q = base_point().mul_u64(11);
        let mut b = Builder::new(Mode::Assign);
        let pv = PointVar::alloc(&mut b, p.x().fr(), p.y().fr());
        let qv = PointVar::alloc(&mut b, q.x().fr(), q.y().fr());
        enforce_on_curve(&mut b, &pv);
        let sum = add(&mut b, &pv, &qv);
        assert_eq!(point_value(&b, &sum), p.add(&q));
        let e = times_eight(&mut b, &pv);
        assert_eq!(point_value(&b, &e), p.mul_u64(8));
        let k = BigUint::from(0b1011_0110u32);
        let bits = integer_bits(&mut b, &k, 8);
        let kq = var_base_mul(&mut b, &bits, &qv);
        assert_eq!(point_value(&b, &kq), q.mul(&k));
        let kb = fixed_base_mul(&mut b, &bits);
        assert_eq!(point_value(&b, &kb), base_point().mul(&k));
        assert!(b.violation().is_none());
    }

    #[test]
    fn off_curve_point_violates() {
        let mut b = Builder::new(Mode::Assign);
        let pv = PointVar::alloc(&mut b, Fr::from(1u64), Fr::from(1u64));
        enforce_on_curve(&mut b, &pv);
        assert!(b.violation().is_some());
    }

    #[test]
    fn le_const_boundary() {
        let c = BigUint::from(0b1010_0110u32);
        for v in 0u32..256 {
            let mut b = Builder::new(Mode::Assign);
            let bits = integer_bits(&mut b, &BigUint::from(v), 8);
            enforce_le_const(&mut b, &bits, &c);
            assert_eq!(b.violation().is_none(), v <= 0b1010_0110, "v={v}");
        }
    }

    #[test]
    fn to_bits_rejects_wide_values() {
        let mut b = Builder::new(Mode::Assign);
        let x = b.alloc(Fr::from(1u64 << 40));
        to_bits(&mut b, &Lc::var(x), 40);
        assert!(b.violation().is_some());
    }
}
