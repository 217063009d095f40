//! EXPERIMENTAL evidence gathering for the two-value sharing question:
//! two-term exponential sums `f ≢ f'` whose simple a- and b-points are shared
//! with `f'` inside a region.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::ExpSumDoc;
use crate::expsum::ExpSum;
use crate::roots::{Region, RootError};
use crate::scalar::Scalar;
use crate::sharing::{classify_pair, ConditionVerdict, PairClass, SharingCondition, SharingOptions};

pub const EXPERIMENTAL: &str = "EXPERIMENTAL";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbeError {
    #[error("probe precondition fails: {0}")]
    Precondition(&'static str),
    #[error(transparent)]
    Roots(#[from] RootError),
    #[error("bad grid entry: {0}")]
    Grid(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeGrid {
    pub functions: Vec<ExpSum>,
}

impl ProbeGrid {
    /// Every `c₁e^{λ₁z} + c₂e^{λ₂z}` with `λ₁` listed before `λ₂`.
    pub fn two_term(coeffs: &[Scalar], freqs: &[Scalar]) -> Self {
        let mut functions = Vec::new();
        for (i, l1) in freqs.iter().enumerate() {
            for l2 in &freqs[i + 1..] {
                for c1 in coeffs {
                    for c2 in coeffs {
                        functions
                            .push(ExpSum::monomial(c1.clone(), l1.clone()) + ExpSum::monomial(c2.clone(), l2.clone()));
                    }
                }
            }
        }
        ProbeGrid { functions }
    }

    pub fn default_grid() -> Self {
        let coeffs = [Scalar::one(), Scalar::int(-1), Scalar::int(2)];
        let freqs = [Scalar::zero(), Scalar::one(), Scalar::int(-1), Scalar::int(2), Scalar::i()];
        ProbeGrid::two_term(&coeffs, &freqs)
    }

    /// Reads `{"coefficients": [...], "frequencies": [...]}` and/or
    /// `{"functions": [<expsum>, ...]}`.
    pub fn from_json(text: &str) -> Result<Self, ProbeError> {
        let doc: GridDoc = serde_json::from_str(text).map_err(|e| ProbeError::Grid(e.to_string()))?;
        let mut grid = ProbeGrid::two_term(&doc.coefficients, &doc.frequencies);
        for f in &doc.functions {
            grid.functions.push(f.to_expsum().map_err(|e| ProbeError::Grid(e.to_string()))?);
        }
        Ok(grid)
    }
}

#[derive(Deserialize)]
struct GridDoc {
    #[serde(default)]
    coefficients: Vec<Scalar>,
    #[serde(default)]
    frequencies: Vec<Scalar>,
    #[serde(default)]
    functions: Vec<ExpSumDoc>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeOptions {
    /// The condition required for both values; the question asks about
    /// `ShareSimple`.
    pub condition: SharingCondition,
    pub sharing: SharingOptions,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions { condition: SharingCondition::ShareSimple, sharing: SharingOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeCandidate {
    pub tag: &'static str,
    pub function: ExpSumDoc,
    pub display: String,
    /// True when either value's verdict holds only vacuously.
    pub vacuous: bool,
    pub evidence: [PairClass; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub tag: &'static str,
    pub values: [Complex64; 2],
    pub condition: SharingCondition,
    pub region: Region,
    pub grid_size: usize,
    /// Constant entries and entries with `f ≡ f'`.
    pub skipped: usize,
    pub candidates: Vec<ProbeCandidate>,
}

impl ProbeReport {
    pub fn non_vacuous(&self) -> impl Iterator<Item = &ProbeCandidate> {
        self.candidates.iter().filter(|c| !c.vacuous)
    }
}

pub fn question_probe(
    a: Complex64,
    b: Complex64,
    grid: &ProbeGrid,
    region: &Region,
    opts: &ProbeOptions,
) -> Result<ProbeReport, ProbeError> {
    if a == b {
        return Err(ProbeError::Precondition("a and b must be distinct"));
    }
    if a.norm() == 0.0 || b.norm() == 0.0 {
        return Err(ProbeError::Precondition("a and b must be nonzero"));
    }
    if (a + b).norm() == 0.0 {
        return Err(ProbeError::Precondition("a + b must be nonzero"));
    }
    region.validate()?;
    let admissible: Vec<&ExpSum> =
        grid.functions.iter().filter(|f| !f.is_constant() && f.differentiate() != **f).collect();
    let skipped = grid.functions.len() - admissible.len();
    let evaluated: Result<Vec<Option<ProbeCandidate>>, RootError> = admissible
        .par_iter()
        .map(|f| {
            let classes = classify_pair(f, &[a, b], region, &opts.sharing)?;
            let verdicts: Vec<ConditionVerdict> = classes.iter().map(|c| c.verdicts[&opts.condition]).collect();
            if !verdicts.iter().all(|v| v.is_ok()) {
                return Ok(None);
            }
            let [ca, cb]: [PairClass; 2] = classes.try_into().expect("two values");
            Ok(Some(ProbeCandidate {
                tag: EXPERIMENTAL,
                function: ExpSumDoc::from(*f),
                display: f.to_string(),
                vacuous: verdicts.contains(&ConditionVerdict::HoldsVacuously),
                evidence: [ca, cb],
            }))
        })
        .collect();
    Ok(ProbeReport {
        tag: EXPERIMENTAL,
        values: [a, b],
        condition: opts.condition,
        region: *region,
        grid_size: grid.functions.len(),
        skipped,
        candidates: evaluated?.into_iter().flatten().collect(),
    })
}
