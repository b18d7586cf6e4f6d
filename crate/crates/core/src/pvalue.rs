//! Exponents `p` in `[1, inf]`: JSON has no infinity, so `inf` is written
//! as the string `"inf"`.

use serde::{Deserialize, Deserializer, Serializer};

/// `"1"`, `"2.5"`, `"inf"`.
pub fn format_p(p: f64) -> String {
    if p.is_infinite() {
        "inf".to_string()
    } else {
        format!("{p}")
    }
}

pub fn parse_p(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "Inf" | "infinity" | "∞" => Some(f64::INFINITY),
        other => other.parse().ok().filter(|p: &f64| *p >= 1.0),
    }
}

pub fn serialize<S: Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
    if p.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*p)
    }
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Number(f64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Number(p) => Ok(p),
        Raw::Text(t) => parse_p(&t).ok_or_else(|| serde::de::Error::custom(format!("bad exponent {t:?}"))),
    }
}

/// Same encoding for a list of exponents.
pub mod list {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ps: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(ps.len()))?;
        for p in ps {
            if p.is_infinite() {
                seq.serialize_element("inf")?;
            } else {
                seq.serialize_element(p)?;
            }
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super")] f64);
        Ok(Vec::<Wrap>::deserialize(d)?.into_iter().map(|w| w.0).collect())
    }
}
