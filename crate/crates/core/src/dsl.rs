//! JSON function DSL.
//!
//! ```json
//! {"kind":"expsum","terms":[{"coeff":{"re":"4/27","im":"0"},"freq":{"re":"2/3","im":"0"}}]}
//! ```
//!
//! Parts are strings: `p` or `p/q` for exact rationals, decimal literals for
//! floats. Exact values round-trip bit for bit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expsum::{ExpSum, Term};
use crate::scalar::{Scalar, ScalarParseError};

#[derive(Debug, Error)]
pub enum DslError {
    #[error("malformed function JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported function kind `{0}` (expected \"expsum\")")]
    Kind(String),
    #[error("bad number in term {term}: {source}")]
    Number {
        term: usize,
        #[source]
        source: ScalarParseError,
    },
}

/// Wire form of a scalar: `{"re": "...", "im": "..."}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalarDoc {
    pub re: String,
    pub im: String,
}

impl From<&Scalar> for ScalarDoc {
    fn from(s: &Scalar) -> Self {
        let (re, im) = s.format_parts();
        ScalarDoc { re, im }
    }
}

impl ScalarDoc {
    pub fn to_scalar(&self) -> Result<Scalar, ScalarParseError> {
        Scalar::parse_parts(&self.re, &self.im)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermDoc {
    pub coeff: ScalarDoc,
    pub freq: ScalarDoc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpSumDoc {
    pub kind: String,
    pub terms: Vec<TermDoc>,
}

impl From<&ExpSum> for ExpSumDoc {
    fn from(f: &ExpSum) -> Self {
        ExpSumDoc {
            kind: "expsum".into(),
            terms: f.terms().iter().map(|t| TermDoc { coeff: (&t.coeff).into(), freq: (&t.freq).into() }).collect(),
        }
    }
}

impl ExpSumDoc {
    pub fn to_expsum(&self) -> Result<ExpSum, DslError> {
        if self.kind != "expsum" {
            return Err(DslError::Kind(self.kind.clone()));
        }
        let mut terms = Vec::with_capacity(self.terms.len());
        for (k, t) in self.terms.iter().enumerate() {
            let coeff = t.coeff.to_scalar().map_err(|source| DslError::Number { term: k, source })?;
            let freq = t.freq.to_scalar().map_err(|source| DslError::Number { term: k, source })?;
            terms.push(Term { coeff, freq });
        }
        Ok(ExpSum::normalize(terms))
    }
}

pub fn expsum_from_json(text: &str) -> Result<ExpSum, DslError> {
    let doc: ExpSumDoc = serde_json::from_str(text)?;
    doc.to_expsum()
}

pub fn expsum_to_json(f: &ExpSum) -> String {
    serde_json::to_string(&ExpSumDoc::from(f)).expect("DSL documents always serialize")
}

pub fn expsum_to_json_pretty(f: &ExpSum) -> String {
    serde_json::to_string_pretty(&ExpSumDoc::from(f)).expect("DSL documents always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_documented_form() {
        let text = r#"{"kind":"expsum","terms":[{"coeff":{"re":"4/27","im":"0"},"freq":{"re":"2/3","im":"0"}},{"coeff":{"re":"1","im":"0"},"freq":{"re":"-1/3","im":"0"}}]}"#;
        let f = expsum_from_json(text).unwrap();
        assert!(f.is_exact());
        assert_eq!(f.len(), 2);
        // canonical order puts -1/3 first, so re-serialization reorders terms
        let back = expsum_to_json(&f);
        assert_eq!(expsum_from_json(&back).unwrap(), f);
        assert!(back
            .starts_with(r#"{"kind":"expsum","terms":[{"coeff":{"re":"1","im":"0"},"freq":{"re":"-1/3","im":"0"}}"#));
    }

    #[test]
    fn canonical_text_round_trips_bit_exact() {
        let text = r#"{"kind":"expsum","terms":[{"coeff":{"re":"1","im":"0"},"freq":{"re":"-1/3","im":"0"}},{"coeff":{"re":"4/27","im":"0"},"freq":{"re":"2/3","im":"0"}}]}"#;
        assert_eq!(expsum_to_json(&expsum_from_json(text).unwrap()), text);
    }

    #[test]
    fn decimals_make_float_mode() {
        let text = r#"{"kind":"expsum","terms":[{"coeff":{"re":"0.5","im":"0"},"freq":{"re":"1","im":"0"}}]}"#;
        let f = expsum_from_json(text).unwrap();
        assert!(!f.is_exact());
    }

    #[test]
    fn rejects_bad_kind_and_numbers() {
        assert!(matches!(expsum_from_json(r#"{"kind":"poly","terms":[]}"#), Err(DslError::Kind(_))));
        let bad = r#"{"kind":"expsum","terms":[{"coeff":{"re":"1/0","im":"0"},"freq":{"re":"1","im":"0"}}]}"#;
        assert!(matches!(expsum_from_json(bad), Err(DslError::Number { term: 0, .. })));
    }

    proptest! {
        #[test]
        fn exact_documents_round_trip(
            terms in proptest::collection::vec((-50i64..50, 1i64..20, -9i64..9, 1i64..7, -3i64..3), 0..6)
        ) {
            let f = ExpSum::normalize(terms.into_iter().map(|(p, q, a, b, im)| {
                Term::new(Scalar::ratio(p, q), Scalar::ratio(a, b) + Scalar::i() * Scalar::int(im))
            }));
            let text = expsum_to_json(&f);
            let g = expsum_from_json(&text).unwrap();
            prop_assert_eq!(g.terms(), f.terms());
            prop_assert_eq!(expsum_to_json(&g), text);
        }
    }
}
