use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};

/// Ordered annotation terms; a term's position is its label index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelVocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelVocabulary {
    pub fn new(terms: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::DuplicateId(t.clone()));
            }
        }
        Ok(LabelVocabulary { terms, index })
    }

    /// One term per line; blank lines ignored; order is significant.
    pub fn parse(text: &str) -> Result<Self> {
        let terms = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect();
        Self::new(terms)
    }

    pub fn to_text(&self) -> String {
        self.terms.iter().map(|t| format!("{t}\n")).collect()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    /// Multi-hot vector for a list of terms.
    pub fn encode<S: AsRef<str>>(&self, terms: &[S]) -> Result<LabelVector> {
        let mut v = LabelVector::zeros(self.len());
        let mut unknown = Vec::new();
        for t in terms {
            match self.index_of(t.as_ref()) {
                Some(i) => v.set(i),
                None => unknown.push(t.as_ref().to_string()),
            }
        }
        if unknown.is_empty() {
            Ok(v)
        } else {
            Err(Error::UnknownTerms(unknown))
        }
    }

    /// Terms switched on in `v`, joined by `;`.
    pub fn describe(&self, v: &LabelVector) -> String {
        v.active().map(|i| self.terms[i].as_str()).collect::<Vec<_>>().join(";")
    }
}

/// Multi-hot annotation vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LabelVector(Vec<bool>);

impl LabelVector {
    pub fn zeros(d: usize) -> Self {
        LabelVector(vec![false; d])
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        LabelVector(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize) {
        self.0[i] = true;
    }

    pub fn any(&self) -> bool {
        self.0.iter().any(|&b| b)
    }

    /// Indices of the set entries.
    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn to_reals<F: crate::numerics::Real>(&self) -> Vec<F> {
        self.0.iter().map(|&b| if b { F::one() } else { F::zero() }).collect()
    }
}

/// Parses `id<TAB>term1;term2;...` lines into multi-hot vectors.
pub fn parse_labels(text: &str, vocab: &LabelVocabulary) -> Result<BTreeMap<String, LabelVector>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (id, terms) = line.split_once('\t').ok_or_else(|| Error::Parse {
            line: n + 1,
            msg: "expected `id<TAB>terms`".into(),
        })?;
        let id = id.trim();
        let terms: Vec<&str> = terms.split(';').map(str::trim).filter(|t| !t.is_empty()).collect();
        let v = vocab.encode(&terms)?;
        if out.insert(id.to_string(), v).is_some() {
            return Err(Error::DuplicateId(id.to_string()));
        }
    }
    Ok(out)
}

pub fn write_labels<'a>(
    entries: impl IntoIterator<Item = (&'a str, &'a LabelVector)>,
    vocab: &LabelVocabulary,
) -> String {
    entries
        .into_iter()
        .map(|(id, v)| format!("{id}\t{}\n", vocab.describe(v)))
        .collect()
}
