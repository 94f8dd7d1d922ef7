//! Attribute values and their field encodings.
//!
//! Integers and dates embed directly; strings and keys are hashed, so every
//! value occupies exactly one field element.

use serde::{Deserialize, Serialize};

use super::babyjubjub::CurvePoint;
use super::field::FieldElement;
use super::hash::{hash_bytes, hash_fields};
use super::CryptoError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Uint,
    String,
    Date,
    /// A Baby Jubjub public key (the attested device key).
    Key,
}

impl AttributeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttributeKind::Uint => "uint",
            AttributeKind::String => "string",
            AttributeKind::Date => "date",
            AttributeKind::Key => "key",
        }
    }

    pub fn tag(&self) -> u8 {
        match self {
            AttributeKind::Uint => 1,
            AttributeKind::String => 2,
            AttributeKind::Date => 3,
            AttributeKind::Key => 4,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            1 => AttributeKind::Uint,
            2 => AttributeKind::String,
            3 => AttributeKind::Date,
            4 => AttributeKind::Key,
            _ => return None,
        })
    }

    /// Kinds that support ordering comparisons.
    pub fn is_numeric(&self) -> bool {
        matches!(self, AttributeKind::Uint | AttributeKind::Date)
    }
}

impl std::fmt::Display for AttributeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AttributeKind {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uint" => Ok(AttributeKind::Uint),
            "string" => Ok(AttributeKind::String),
            "date" => Ok(AttributeKind::Date),
            "key" => Ok(AttributeKind::Key),
            other => Err(CryptoError::Encoding(format!("unknown attribute kind {other:?}"))),
        }
    }
}

/// Dates are Unix seconds.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum AttributeValue {
    Uint(u64),
    String(String),
    Date(u64),
    Key(CurvePoint),
}

impl AttributeValue {
    pub fn kind(&self) -> AttributeKind {
        match self {
            AttributeValue::Uint(_) => AttributeKind::Uint,
            AttributeValue::String(_) => AttributeKind::String,
            AttributeValue::Date(_) => AttributeKind::Date,
            AttributeValue::Key(_) => AttributeKind::Key,
        }
    }

    /// Numeric payload for uint and date values.
    pub fn as_u64(&self) -> Option<u64> {
        match self {
            AttributeValue::Uint(v) | AttributeValue::Date(v) => Some(*v),
            _ => None,
        }
    }

    /// Parses the textual form used on the command line.
    ///
    /// uint: decimal; date: RFC 3339, `YYYY-MM-DD` or Unix seconds; key: point hex.
    pub fn parse(kind: AttributeKind, text: &str) -> Result<Self, CryptoError> {
        match kind {
            AttributeKind::Uint => text
                .parse::<u64>()
                .map(AttributeValue::Uint)
                .map_err(|_| CryptoError::Encoding(format!("not a 64-bit unsigned integer: {text:?}"))),
            AttributeKind::String => Ok(AttributeValue::String(text.to_string())),
            AttributeKind::Date => parse_date(text).map(AttributeValue::Date),
            AttributeKind::Key => CurvePoint::from_hex(text).map(AttributeValue::Key),
        }
    }
}

impl std::fmt::Display for AttributeValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AttributeValue::Uint(v) => write!(f, "{v}"),
            AttributeValue::String(s) => write!(f, "{s:?}"),
            AttributeValue::Date(v) => write!(f, "@{v}"),
            AttributeValue::Key(k) => write!(f, "key:{}", &k.to_hex()[..16]),
        }
    }
}

fn parse_date(text: &str) -> Result<u64, CryptoError> {
    let bad = || CryptoError::Encoding(format!("not a date: {text:?}"));
    if let Ok(secs) = text.parse::<u64>() {
        return Ok(secs);
    }
    let secs = if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(text) {
        dt.timestamp()
    } else {
        let day = chrono::NaiveDate::parse_from_str(text, "%Y-%m-%d").map_err(|_| bad())?;
        day.and_hms_opt(0, 0, 0).ok_or_else(bad)?.and_utc().timestamp()
    };
    u64::try_from(secs).map_err(|_| CryptoError::Encoding(format!("date before 1970: {text:?}")))
}

pub fn encode_uint(v: u64) -> FieldElement {
    FieldElement::from_u64(v)
}

pub fn encode_date(unix_seconds: u64) -> FieldElement {
    FieldElement::from_u64(unix_seconds)
}

pub fn encode_string(s: &str) -> Result<FieldElement, CryptoError> {
    hash_bytes(s.as_bytes()).map(|d| d.value())
}

pub fn encode_key(key: &CurvePoint) -> FieldElement {
    hash_fields(&[key.x(), key.y()]).expect("two inputs").value()
}

pub fn encode_value(v: &AttributeValue) -> Result<FieldElement, CryptoError> {
    Ok(match v {
        AttributeValue::Uint(x) => encode_uint(*x),
        AttributeValue::Date(x) => encode_date(*x),
        AttributeValue::String(s) => encode_string(s)?,
        AttributeValue::Key(k) => encode_key(k),
    })
}
