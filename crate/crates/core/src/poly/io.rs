use num_rational::BigRational;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{HomoPoly, Monomial, Poly, PolyError};
use crate::scalar::{parse_rational, rational_text, Scalar};

/// Coefficient types with a lossless text form.
pub trait CoeffText: Sized {
    fn to_text(&self) -> String;
    fn parse_text(s: &str) -> Option<Self>;
}

impl CoeffText for BigRational {
    fn to_text(&self) -> String {
        rational_text(self)
    }
    fn parse_text(s: &str) -> Option<Self> {
        parse_rational(s)
    }
}

impl CoeffText for f64 {
    fn to_text(&self) -> String {
        format!("{self:?}")
    }
    fn parse_text(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
}

/// Text serialization: a `# dim n` header, then one term per line as
/// `num/den : a1 a2 ... an`, in descending graded-lex order.
pub fn to_text<T: Scalar + CoeffText>(p: &Poly<T>) -> String {
    let mut s = format!("# dim {}\n", p.dim());
    for (m, c) in p.terms() {
        let exps: Vec<String> = m.exps().iter().map(|e| e.to_string()).collect();
        s.push_str(&format!("{} : {}\n", c.to_text(), exps.join(" ")));
    }
    s
}

/// Parse the text serialization. The dimension comes from the header or,
/// failing that, from the first term.
pub fn from_text<T: Scalar + CoeffText>(s: &str) -> Result<Poly<T>, PolyError> {
    let mut dim: Option<usize> = None;
    let mut terms = Vec::new();
    for (lineno, raw) in s.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(d) = rest.strip_prefix("dim") {
                let d: usize = d.trim().parse().map_err(|_| {
                    PolyError::Parse(format!("line {}: bad dim header", lineno + 1))
                })?;
                dim = Some(d);
            }
            continue;
        }
        let (c, e) = line.split_once(':').ok_or_else(|| {
            PolyError::Parse(format!("line {}: expected `coeff : exps`", lineno + 1))
        })?;
        let coeff = T::parse_text(c).ok_or_else(|| {
            PolyError::Parse(format!(
                "line {}: bad coefficient `{}`",
                lineno + 1,
                c.trim()
            ))
        })?;
        let exps: Vec<u32> = e
            .split_whitespace()
            .map(|t| t.parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|_| PolyError::Parse(format!("line {}: bad exponent", lineno + 1)))?;
        match dim {
            None => dim = Some(exps.len()),
            Some(d) if d != exps.len() => {
                return Err(PolyError::DimensionMismatch {
                    expected: d,
                    found: exps.len(),
                })
            }
            _ => {}
        }
        terms.push((coeff, exps));
    }
    let dim = dim.ok_or_else(|| PolyError::Parse("empty polynomial without dim header".into()))?;
    Poly::from_terms(dim, terms)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermRepr {
    coeff: String,
    exps: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyRepr {
    dim: usize,
    terms: Vec<TermRepr>,
}

impl<T: Scalar + CoeffText> Serialize for Poly<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let repr = PolyRepr {
            dim: self.dim(),
            terms: self
                .terms()
                .into_iter()
                .map(|(m, c)| TermRepr {
                    coeff: c.to_text(),
                    exps: m.exps().to_vec(),
                })
                .collect(),
        };
        repr.serialize(s)
    }
}

impl<'de, T: Scalar + CoeffText> Deserialize<'de> for Poly<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = PolyRepr::deserialize(d)?;
        let mut p = Poly::zero(repr.dim);
        for t in repr.terms {
            if t.exps.len() != repr.dim {
                return Err(D::Error::custom(format!(
                    "term has {} exponents, expected {}",
                    t.exps.len(),
                    repr.dim
                )));
            }
            let c = T::parse_text(&t.coeff)
                .ok_or_else(|| D::Error::custom(format!("bad coefficient `{}`", t.coeff)))?;
            p.add_term(Monomial::new(t.exps), c);
        }
        Ok(p)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HomoRepr {
    dim: usize,
    degree: u32,
    terms: Vec<TermRepr>,
}

impl<T: Scalar + CoeffText> Serialize for HomoPoly<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let repr = HomoRepr {
            dim: self.dim(),
            degree: self.degree(),
            terms: self
                .terms()
                .rev()
                .map(|(m, c)| TermRepr {
                    coeff: c.to_text(),
                    exps: m.exps().to_vec(),
                })
                .collect(),
        };
        repr.serialize(s)
    }
}

impl<'de, T: Scalar + CoeffText> Deserialize<'de> for HomoPoly<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = HomoRepr::deserialize(d)?;
        let mut terms = Vec::with_capacity(repr.terms.len());
        for t in repr.terms {
            let c = T::parse_text(&t.coeff)
                .ok_or_else(|| D::Error::custom(format!("bad coefficient `{}`", t.coeff)))?;
            terms.push((c, t.exps));
        }
        HomoPoly::from_terms(repr.dim, repr.degree, terms)
            .map_err(|e| D::Error::custom(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let p = Poly::from_fracs(2, &[(1, 2, &[0, 2]), (-3, 1, &[2, 1]), (7, 5, &[0, 0])]).unwrap();
        let s = to_text(&p);
        assert!(s.contains("-3 : 2 1"));
        assert!(s.contains("1/2 : 0 2"));
        let back: Poly<BigRational> = from_text(&s).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn zero_needs_header() {
        let z: Poly<BigRational> = from_text("# dim 3\n").unwrap();
        assert!(z.is_zero());
        assert_eq!(z.dim(), 3);
        assert!(from_text::<BigRational>("").is_err());
        assert!(from_text::<BigRational>("1/2 : 1\n1 : 1 1").is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = Poly::from_fracs(3, &[(1, 3, &[1, 1, 1]), (2, 1, &[0, 0, 2])]).unwrap();
        let js = serde_json::to_string(&p).unwrap();
        let back: Poly<BigRational> = serde_json::from_str(&js).unwrap();
        assert_eq!(back, p);
        let f = p.to_f64();
        let back_f: Poly<f64> = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back_f, f);
    }
}
