use std::collections::HashMap;

use sha2::{Digest, Sha256};

use super::GraphIoError;

/// Ordered set of token kinds; index 0 is always `Unknown`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenVocabulary {
    kinds: Vec<String>,
    index: HashMap<String, u32>,
}

pub const UNKNOWN: &str = "Unknown";

/// The vocabulary shipped with the crate.
pub const DEFAULT_MANIFEST: &str = include_str!("../../data/vocabulary.txt");

impl TokenVocabulary {
    pub fn new(kinds: Vec<String>) -> Result<Self, GraphIoError> {
        if kinds.first().map(String::as_str) != Some(UNKNOWN) {
            return Err(GraphIoError::Vocabulary(format!(
                "first entry must be '{UNKNOWN}'"
            )));
        }
        let mut index = HashMap::with_capacity(kinds.len());
        for (i, k) in kinds.iter().enumerate() {
            if k.is_empty() {
                return Err(GraphIoError::Vocabulary(format!("empty name at line {}", i + 1)));
            }
            if index.insert(k.clone(), i as u32).is_some() {
                return Err(GraphIoError::Vocabulary(format!("duplicate kind '{k}'")));
            }
        }
        Ok(Self { kinds, index })
    }

    /// Parses a newline-delimited manifest. Blank trailing lines are ignored.
    pub fn from_manifest(text: &str) -> Result<Self, GraphIoError> {
        let mut kinds: Vec<String> = text
            .lines()
            .map(|l| l.trim_end_matches('\r').to_string())
            .collect();
        while kinds.last().is_some_and(String::is_empty) {
            kinds.pop();
        }
        Self::new(kinds)
    }

    pub fn builtin() -> Self {
        Self::from_manifest(DEFAULT_MANIFEST).expect("shipped vocabulary is valid")
    }

    pub fn to_manifest(&self) -> String {
        let mut s = self.kinds.join("\n");
        s.push('\n');
        s
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn kinds(&self) -> &[String] {
        &self.kinds
    }

    pub fn name(&self, index: u32) -> Option<&str> {
        self.kinds.get(index as usize).map(String::as_str)
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    /// Index for an AST node: `Kind:lexeme` when the vocabulary lists that
    /// refinement (e.g. `CallExpr:__VERIFIER_error`), else `Kind`, else 0.
    pub fn lookup(&self, kind: &str, text: Option<&str>) -> u32 {
        if let Some(t) = text {
            if let Some(i) = self.get(&format!("{kind}:{t}")) {
                return i;
            }
        }
        self.get(kind).unwrap_or(0)
    }

    /// SHA-256 of the manifest, hex encoded. Models record it so that graphs
    /// encoded with a different vocabulary are rejected.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_manifest().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One-hot row for `kind_index`.
pub fn encode_onehot(kind_index: u32, vocab_len: usize) -> Result<Vec<f64>, GraphIoError> {
    let i = kind_index as usize;
    if i >= vocab_len {
        return Err(GraphIoError::Index {
            index: i,
            len: vocab_len,
        });
    }
    let mut v = vec![0.0; vocab_len];
    v[i] = 1.0;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn onehot_examples() {
        assert_eq!(encode_onehot(2, 4).unwrap(), vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(encode_onehot(0, 1).unwrap(), vec![1.0]);
        assert_eq!(
            encode_onehot(4, 4),
            Err(GraphIoError::Index { index: 4, len: 4 })
        );
    }

    #[test]
    fn onehot_is_injective() {
        for i in 0..8 {
            for j in 0..8 {
                let same = encode_onehot(i, 8).unwrap() == encode_onehot(j, 8).unwrap();
                assert_eq!(same, i == j);
            }
        }
    }

    #[test]
    fn manifest_rules() {
        assert!(TokenVocabulary::from_manifest("Unknown\nIfStmt\n").is_ok());
        assert!(matches!(
            TokenVocabulary::from_manifest("IfStmt\nUnknown\n"),
            Err(GraphIoError::Vocabulary(_))
        ));
        assert!(matches!(
            TokenVocabulary::from_manifest("Unknown\nIfStmt\nIfStmt"),
            Err(GraphIoError::Vocabulary(_))
        ));
    }

    #[test]
    fn builtin_round_trips_and_refines_intrinsics() {
        let v = TokenVocabulary::builtin();
        let again = TokenVocabulary::from_manifest(&v.to_manifest()).unwrap();
        assert_eq!(v, again);
        assert_eq!(v.fingerprint(), again.fingerprint());
        let plain = v.lookup("CallExpr", Some("foo"));
        let intrinsic = v.lookup("CallExpr", Some("__VERIFIER_error"));
        assert_ne!(plain, intrinsic);
        assert_eq!(v.lookup("NoSuchKind", None), 0);
    }
}
