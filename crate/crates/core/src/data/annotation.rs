use serde::{Deserialize, Serialize};

/// Orthographic shape of a token.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    /// Every letter lowercase.
    Lower,
    /// First letter uppercase, all other letters lowercase.
    Capitalized,
    /// Two or more letters, all uppercase.
    Upper,
    /// Letters in any other arrangement.
    Mixed,
    /// No letters at all.
    Other,
}

impl Case {
    pub const COUNT: usize = 5;

    pub fn of(surface: &str) -> Case {
        let letters: Vec<char> = surface.chars().filter(|c| c.is_alphabetic()).collect();
        if letters.is_empty() {
            return Case::Other;
        }
        let is_upper = |c: &char| c.is_uppercase();
        let is_lower = |c: &char| c.is_lowercase();
        if letters.iter().all(is_lower) {
            Case::Lower
        } else if letters.len() >= 2 && letters.iter().all(is_upper) {
            Case::Upper
        } else if is_upper(&letters[0]) && letters[1..].iter().all(is_lower) {
            Case::Capitalized
        } else {
            Case::Mixed
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// One passage token with its linguistic tags.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenAnnotation {
    pub surface: String,
    pub pos: String,
    pub ner: String,
}

impl TokenAnnotation {
    pub fn new(surface: impl Into<String>, pos: impl Into<String>, ner: impl Into<String>) -> Self {
        TokenAnnotation {
            surface: surface.into(),
            pos: pos.into(),
            ner: ner.into(),
        }
    }

    pub fn case(&self) -> Case {
        Case::of(&self.surface)
    }
}
