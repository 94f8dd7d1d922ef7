//! Baby Jubjub: the twisted Edwards curve `a·x² + y² = 1 + d·x²·y²` defined over
//! the BN254 scalar field, with `a = 168700`, `d = 168696`.

use std::sync::OnceLock;

use ark_ff::{Field, One};
use num_bigint::BigUint;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::field::{FieldElement, Fr, FIELD_BYTES};
use super::CryptoError;

pub const COEFF_A: u64 = 168700;
pub const COEFF_D: u64 = 168696;

pub fn coeff_a() -> Fr {
    Fr::from(COEFF_A)
}

pub fn coeff_d() -> Fr {
    Fr::from(COEFF_D)
}

/// Order of the prime subgroup generated by [`base_point`].
pub fn subgroup_order() -> &'static BigUint {
    static ORDER: OnceLock<BigUint> = OnceLock::new();
    ORDER.get_or_init(|| {
        "2736030358979909402780800718157159386076813972158567259200215660948447373041"
            .parse()
            .unwrap()
    })
}

/// Number of bits needed for scalars below [`subgroup_order`].
pub const SUBGROUP_ORDER_BITS: usize = 251;

/// Affine point. Construction through [`CurvePoint::new`] enforces the curve equation.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CurvePoint {
    x: FieldElement,
    y: FieldElement,
}

impl std::fmt::Debug for CurvePoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CurvePoint({}, {})", self.x, self.y)
    }
}

impl CurvePoint {
    pub fn new(x: FieldElement, y: FieldElement) -> Result<Self, CryptoError> {
        let p = CurvePoint { x, y };
        if p.is_on_curve() {
            Ok(p)
        } else {
            Err(CryptoError::OffCurve)
        }
    }

    /// Skips the curve check. Only for values that are about to be validated.
    pub fn new_unchecked(x: FieldElement, y: FieldElement) -> Self {
        CurvePoint { x, y }
    }

    pub fn identity() -> Self {
        CurvePoint {
            x: FieldElement::ZERO,
            y: FieldElement::from_u64(1),
        }
    }

    pub fn x(&self) -> FieldElement {
        self.x
    }

    pub fn y(&self) -> FieldElement {
        self.y
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    pub fn is_on_curve(&self) -> bool {
        let (x, y) = (self.x.0, self.y.0);
        let x2 = x.square();
        let y2 = y.square();
        coeff_a() * x2 + y2 == Fr::one() + coeff_d() * x2 * y2
    }

    /// Complete twisted Edwards addition.
    pub fn add(&self, other: &CurvePoint) -> CurvePoint {
        let (x1, y1, x2, y2) = (self.x.0, self.y.0, other.x.0, other.y.0);
        let tau = coeff_d() * x1 * x2 * y1 * y2;
        let x3 = (x1 * y2 + y1 * x2) * (Fr::one() + tau).inverse().expect("complete addition");
        let y3 = (y1 * y2 - coeff_a() * x1 * x2) * (Fr::one() - tau).inverse().expect("complete addition");
        CurvePoint {
            x: FieldElement(x3),
            y: FieldElement(y3),
        }
    }

    pub fn double(&self) -> CurvePoint {
        self.add(self)
    }

    pub fn negate(&self) -> CurvePoint {
        CurvePoint {
            x: FieldElement(-self.x.0),
            y: self.y,
        }
    }

    /// Double-and-add, most significant bit first.
    pub fn mul(&self, scalar: &BigUint) -> CurvePoint {
        let mut acc = CurvePoint::identity();
        for i in (0..scalar.bits()).rev() {
            acc = acc.double();
            if scalar.bit(i) {
                acc = acc.add(self);
            }
        }
        acc
    }

    pub fn mul_u64(&self, scalar: u64) -> CurvePoint {
        self.mul(&BigUint::from(scalar))
    }

    /// True when `order · P` is the identity, i.e. P lies in the prime subgroup.
    pub fn in_subgroup(&self) -> bool {
        self.mul(subgroup_order()).is_identity()
    }

    pub fn to_bytes(&self) -> [u8; 2 * FIELD_BYTES] {
        let mut out = [0u8; 2 * FIELD_BYTES];
        out[..FIELD_BYTES].copy_from_slice(&self.x.to_le_bytes());
        out[FIELD_BYTES..].copy_from_slice(&self.y.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        if bytes.len() != 2 * FIELD_BYTES {
            return Err(CryptoError::Encoding(format!(
                "curve point must be {} bytes, got {}",
                2 * FIELD_BYTES,
                bytes.len()
            )));
        }
        let x = FieldElement::from_le_bytes(&bytes[..FIELD_BYTES])?;
        let y = FieldElement::from_le_bytes(&bytes[FIELD_BYTES..])?;
        CurvePoint::new(x, y)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn from_hex(s: &str) -> Result<Self, CryptoError> {
        let bytes = hex::decode(s.trim_start_matches("0x"))
            .map_err(|e| CryptoError::Encoding(format!("bad hex: {e}")))?;
        Self::from_bytes(&bytes)
    }
}

impl std::fmt::Display for CurvePoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for CurvePoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for CurvePoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        CurvePoint::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Generator of the prime-order subgroup (8 × the full-group generator).
pub fn base_point() -> CurvePoint {
    static BASE: OnceLock<CurvePoint> = OnceLock::new();
    *BASE.get_or_init(|| {
        let x: BigUint =
            "5299619240641551281634865583518297030282874472190772894086521144482721001553"
                .parse()
                .unwrap();
        let y: BigUint =
            "16950150798460657717958625567821834550301663161624707787222815936182638968203"
                .parse()
                .unwrap();
        CurvePoint::new(
            FieldElement::from_biguint(&x).unwrap(),
            FieldElement::from_biguint(&y).unwrap(),
        )
        .expect("base point on curve")
    })
}

/// `2^i · base_point()` for `i < SUBGROUP_ORDER_BITS`, shared with the fixed-base gadget.
pub fn base_point_powers() -> &'static [CurvePoint] {
    static POWERS: OnceLock<Vec<CurvePoint>> = OnceLock::new();
    POWERS.get_or_init(|| {
        let mut out = Vec::with_capacity(SUBGROUP_ORDER_BITS);
        let mut p = base_point();
        for _ in 0..SUBGROUP_ORDER_BITS {
            out.push(p);
            p = p.double();
        }
        out
    })
}

/// Fixed-base multiplication using the precomputed power table.
pub fn mul_base(scalar: &BigUint) -> CurvePoint {
    let reduced = scalar % subgroup_order();
    base_point_powers()
        .iter()
        .enumerate()
        .filter(|(i, _)| reduced.bit(*i as u64))
        .fold(CurvePoint::identity(), |acc, (_, p)| acc.add(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_point_has_prime_order() {
        let b = base_point();
        assert!(b.in_subgroup());
        assert!(!b.is_identity());
    }

    #[test]
    fn group_law_sanity() {
        let b = base_point();
        let three = b.add(&b).add(&b);
        assert_eq!(three, b.mul_u64(3));
        assert_eq!(b.add(&b.negate()), CurvePoint::identity());
        assert_eq!(mul_base(&BigUint::from(12345u32)), b.mul_u64(12345));
        assert!(three.is_on_curve());
    }

    #[test]
    fn off_curve_rejected() {
        let bad = CurvePoint::new(FieldElement::from_u64(1), FieldElement::from_u64(1));
        assert_eq!(bad, Err(CryptoError::OffCurve));
    }

    #[test]
    fn bytes_round_trip() {
        let p = base_point().mul_u64(99);
        assert_eq!(CurvePoint::from_bytes(&p.to_bytes()).unwrap(), p);
    }
}
