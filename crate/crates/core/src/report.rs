//! Outcome of a class-membership or bound verifier.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Inconclusive,
    Fails,
}

impl Verdict {
    /// Process exit status for this verdict.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Holds => 0,
            Verdict::Fails => 2,
            Verdict::Inconclusive => 3,
        }
    }
}

/// Evidence attached to a failing verdict.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    IndexPair {
        first: String,
        second: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        point: Option<Vec<f64>>,
    },
    WordPair {
        first: String,
        second: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        point: Option<Vec<f64>>,
    },
    Point {
        coords: Vec<f64>,
    },
    Element {
        label: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyReport {
    pub property: String,
    pub verdict: Verdict,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, Value>,
}

impl PropertyReport {
    pub fn holds(property: impl Into<String>, margin: f64) -> Self {
        Self::build(property, Verdict::Holds, margin, None)
    }

    pub fn fails(property: impl Into<String>, margin: f64, witness: Witness) -> Self {
        Self::build(property, Verdict::Fails, margin, Some(witness))
    }

    pub fn inconclusive(property: impl Into<String>, margin: f64) -> Self {
        Self::build(property, Verdict::Inconclusive, margin, None)
    }

    fn build(
        property: impl Into<String>,
        verdict: Verdict,
        margin: f64,
        witness: Option<Witness>,
    ) -> Self {
        // margins are distances or counts; NaN only arises from empty
        // aggregates and is reported as 0
        let margin = if margin.is_nan() {
            0.0
        } else {
            margin.max(0.0)
        };
        Self {
            property: property.into(),
            verdict,
            margin,
            witness,
            details: BTreeMap::new(),
        }
    }

    pub fn with_detail(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.details.insert(key.to_owned(), value.into());
        self
    }

    pub fn is_holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Worst verdict of a batch (fails > inconclusive > holds).
pub fn worst_verdict<'a>(reports: impl IntoIterator<Item = &'a PropertyReport>) -> Verdict {
    reports
        .into_iter()
        .map(|r| r.verdict)
        .max()
        .unwrap_or(Verdict::Holds)
}
