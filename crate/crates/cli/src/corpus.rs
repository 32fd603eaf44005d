//! Bundled example problems with their symmetry families and expected
//! first integrals.

use std::path::Path;

use crate::error::CliError;
use crate::files::Document;

pub const BUILTIN: [(&str, &str); 10] = [
    ("boost", include_str!("../corpus/boost.toml")),
    ("rotation", include_str!("../corpus/rotation.toml")),
    ("chained_scaling", include_str!("../corpus/chained_scaling.toml")),
    ("martinet", include_str!("../corpus/martinet.toml")),
    ("drift", include_str!("../corpus/drift.toml")),
    ("timeopt4", include_str!("../corpus/timeopt4.toml")),
    ("timeopt3", include_str!("../corpus/timeopt3.toml")),
    ("timeopt4_linear_cost", include_str!("../corpus/timeopt4_linear_cost.toml")),
    ("timeopt3_linear_cost", include_str!("../corpus/timeopt3_linear_cost.toml")),
    ("martinet_exponential", include_str!("../corpus/martinet_exponential.toml")),
];

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusEntry {
    pub name: String,
    pub doc: Document,
}

impl CorpusEntry {
    pub fn new(name: &str, doc: Document) -> Result<CorpusEntry, CliError> {
        let missing = |what: &str| CliError::Usage(format!("corpus entry `{name}` has no {what}"));
        doc.problem.as_ref().ok_or_else(|| missing("[problem]"))?;
        doc.expected_integral().ok_or_else(|| missing("expected integral"))?;
        if doc.family.is_none() && doc.generator.is_none() {
            return Err(missing("[family] or [generator]"));
        }
        Ok(CorpusEntry {
            name: name.to_string(),
            doc,
        })
    }

    pub fn numeric(&self) -> bool {
        self.doc.expect.as_ref().is_some_and(|e| e.numeric)
    }
}

pub fn builtin() -> Vec<CorpusEntry> {
    BUILTIN
        .iter()
        .map(|(name, text)| {
            let doc = Document::parse(&format!("corpus/{name}.toml"), text)
                .expect("bundled corpus parses");
            CorpusEntry::new(name, doc).expect("bundled corpus entries are complete")
        })
        .collect()
}

pub fn builtin_document(name: &str) -> Option<Document> {
    let (_, text) = BUILTIN.iter().find(|(n, _)| *n == name)?;
    Some(Document::parse(&format!("corpus/{name}.toml"), text).expect("bundled corpus parses"))
}

/// Every `*.toml` file in `dir`, in file-name order.
pub fn load_dir(dir: &Path) -> Result<Vec<CorpusEntry>, CliError> {
    let io = |e: std::io::Error| CliError::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io)?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "toml"));
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: corpus directory has no .toml entries",
            dir.display()
        )));
    }
    paths
        .iter()
        .map(|p| {
            let name = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            CorpusEntry::new(&name, Document::load(p)?)
        })
        .collect()
}
