//! Full-precision decimal text for scalars stored in model documents.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// 17 significant digits, enough to round-trip any `f64` bit-for-bit.
pub fn encode<T: Scalar>(v: T) -> String {
    let x = v.as_f64();
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn decode<T: Scalar>(s: &str) -> Result<T> {
    let x: f64 = match s.trim() {
        "inf" | "+inf" | "Infinity" => f64::INFINITY,
        "-inf" | "-Infinity" => f64::NEG_INFINITY,
        other => other
            .parse()
            .map_err(|_| Error::InvalidModel(format!("'{other}' is not a decimal number")))?,
    };
    if x.is_nan() {
        return Err(Error::InvalidModel("NaN is not a valid model number".into()));
    }
    T::from_f64(x).ok_or_else(|| Error::InvalidModel(format!("{s} not representable")))
}

pub fn encode_all<T: Scalar>(v: &[T]) -> Vec<String> {
    v.iter().map(|&x| encode(x)).collect()
}

pub fn decode_all<T: Scalar>(v: &[String]) -> Result<Vec<T>> {
    v.iter().map(|s| decode(s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_bits() {
        for x in [0.1, -0.357, 1.0 / 3.0, 6.9566e-300, f64::MAX, -0.0, 1e22] {
            let back: f64 = decode(&encode(x)).unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
        let y: f64 = decode(&encode(f64::INFINITY)).unwrap();
        assert!(y.is_infinite());
        assert!(decode::<f64>("nan").is_err());
        let f: f32 = decode(&encode(0.1f32)).unwrap();
        assert_eq!(f, 0.1f32);
    }
}
