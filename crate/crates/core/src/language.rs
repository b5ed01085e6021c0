use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Languages covered by the online and offline evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Language {
    C,
    #[serde(rename = "C#")]
    CSharp,
    #[serde(rename = "C++")]
    Cpp,
    Go,
    Java,
    JavaScript,
    Kotlin,
    #[serde(rename = "PHP")]
    Php,
    Python,
    Ruby,
    Rust,
    Scala,
    TypeScript,
}

impl Language {
    pub const ALL: [Language; 13] = [
        Language::C,
        Language::CSharp,
        Language::Cpp,
        Language::Go,
        Language::Java,
        Language::JavaScript,
        Language::Kotlin,
        Language::Php,
        Language::Python,
        Language::Ruby,
        Language::Rust,
        Language::Scala,
        Language::TypeScript,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Language::C => "C",
            Language::CSharp => "C#",
            Language::Cpp => "C++",
            Language::Go => "Go",
            Language::Java => "Java",
            Language::JavaScript => "JavaScript",
            Language::Kotlin => "Kotlin",
            Language::Php => "PHP",
            Language::Python => "Python",
            Language::Ruby => "Ruby",
            Language::Rust => "Rust",
            Language::Scala => "Scala",
            Language::TypeScript => "TypeScript",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown language {0:?}")]
pub struct UnknownLanguage(pub String);

impl FromStr for Language {
    type Err = UnknownLanguage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Language::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownLanguage(s.to_string()))
    }
}

/// File extension (without the dot, lowercase) to language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionMap(BTreeMap<String, Language>);

impl ExtensionMap {
    pub fn new() -> Self {
        ExtensionMap(BTreeMap::new())
    }

    pub fn insert(&mut self, ext: &str, language: Language) {
        self.0.insert(ext.trim_start_matches('.').to_ascii_lowercase(), language);
    }

    pub fn language_of(&self, path: &Path) -> Option<Language> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        self.0.get(&ext).copied()
    }
}

impl Default for ExtensionMap {
    fn default() -> Self {
        use Language::*;
        let mut map = ExtensionMap::new();
        for (ext, lang) in [
            ("c", C),
            ("h", C),
            ("cs", CSharp),
            ("cpp", Cpp),
            ("cc", Cpp),
            ("cxx", Cpp),
            ("hpp", Cpp),
            ("go", Go),
            ("java", Java),
            ("js", JavaScript),
            ("mjs", JavaScript),
            ("jsx", JavaScript),
            ("kt", Kotlin),
            ("kts", Kotlin),
            ("php", Php),
            ("py", Python),
            ("rb", Ruby),
            ("rs", Rust),
            ("scala", Scala),
            ("ts", TypeScript),
            ("tsx", TypeScript),
        ] {
            map.insert(ext, lang);
        }
        map
    }
}

impl FromIterator<(String, Language)> for ExtensionMap {
    fn from_iter<I: IntoIterator<Item = (String, Language)>>(iter: I) -> Self {
        let mut map = ExtensionMap::new();
        for (ext, lang) in iter {
            map.insert(&ext, lang);
        }
        map
    }
}
