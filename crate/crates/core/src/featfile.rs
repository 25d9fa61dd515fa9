//! Feature set files and sparse export.
//!
//! ```text
//! # texsvm-features v1
//! # arity 597
//! # layout scalable_color:256 color_structure:256 ...
//! 0<TAB>3<TAB>0.25 0 1e-7 ...
//! ```
//!
//! Rows are `id<TAB>label<TAB>values`, values separated by single spaces.
//! The layout line is omitted when the vectors did not come from the
//! descriptor pipeline.

use std::io::Write;
use std::path::Path;

use crate::dataview::{view_base, Example, View};
use crate::descriptors::{FeatureLayout, Segment};
use crate::error::{Error, Result};
use crate::textio::{fmt_f64, join_f64, parse_f64_list, parse_int};

pub const FEATURES_HEADER: &str = "# texsvm-features v1";

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub arity: usize,
    pub layout: FeatureLayout,
    pub examples: Vec<Example>,
}

impl FeatureSet {
    pub fn new(arity: usize, layout: FeatureLayout, examples: Vec<Example>) -> Result<Self> {
        if !layout.segments.is_empty() && layout.total_len() != arity {
            return Err(Error::Arity {
                expected: arity,
                actual: layout.total_len(),
            });
        }
        if let Some(bad) = examples.iter().find(|e| e.features.len() != arity) {
            return Err(Error::Arity {
                expected: arity,
                actual: bad.features.len(),
            });
        }
        Ok(Self {
            arity,
            layout,
            examples,
        })
    }

    /// Base view over the examples; fails when the set is empty.
    pub fn view(&self) -> Result<View> {
        view_base(self.examples.clone())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(FEATURES_HEADER);
        out.push('\n');
        out.push_str(&format!("# arity {}\n", self.arity));
        if !self.layout.segments.is_empty() {
            let segs: Vec<String> = self.layout.segments.iter().map(|s| format!("{}:{}", s.name, s.len)).collect();
            out.push_str(&format!("# layout {}\n", segs.join(" ")));
        }
        for e in &self.examples {
            out.push_str(&format!("{}\t{}\t{}\n", e.id, e.label, join_f64(&e.features)));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut arity = None;
        let mut layout = FeatureLayout::default();
        let mut examples = Vec::new();
        let mut saw_header = false;
        for (k, line) in text.lines().enumerate() {
            let n = k + 1;
            if line.trim().is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if n == 1 || !saw_header {
                    if line.trim() != FEATURES_HEADER {
                        return Err(Error::parse(n, format!("expected `{FEATURES_HEADER}`, found {line:?}")));
                    }
                    saw_header = true;
                } else if let Some(a) = comment.strip_prefix("arity ") {
                    arity = Some(parse_int::<usize>(n, a.trim())?);
                } else if let Some(l) = comment.strip_prefix("layout ") {
                    layout.segments = l
                        .split_whitespace()
                        .map(|seg| {
                            let (name, len) = seg
                                .rsplit_once(':')
                                .ok_or_else(|| Error::parse(n, format!("bad layout segment {seg:?}")))?;
                            Ok(Segment {
                                name: name.to_string(),
                                len: parse_int(n, len)?,
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                }
                continue;
            }
            if !saw_header {
                return Err(Error::parse(n, "missing feature file header"));
            }
            let arity = arity.ok_or_else(|| Error::parse(n, "row before `# arity` line"))?;
            let mut cols = line.splitn(3, '\t');
            let id = parse_int(n, cols.next().unwrap_or(""))?;
            let label = parse_int(n, cols.next().ok_or_else(|| Error::parse(n, "missing label"))?)?;
            let features = parse_f64_list(n, cols.next().unwrap_or(""))?;
            if features.len() != arity {
                return Err(Error::parse(n, format!("row has {} values, expected {arity}", features.len())));
            }
            examples.push(Example::new(id, label, features));
        }
        if !saw_header {
            return Err(Error::parse(1, "missing feature file header"));
        }
        let arity = arity.ok_or_else(|| Error::parse(1, "missing `# arity` line"))?;
        Self::new(arity, layout, examples).map_err(|e| Error::parse(2, e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// One sparse-format line: the label, then `index:value` for every nonzero
/// feature with 1-based indices.
pub fn sparse_line(label: i64, features: &[f64]) -> String {
    let mut line = label.to_string();
    for (k, &v) in features.iter().enumerate() {
        if v != 0.0 {
            line.push_str(&format!(" {}:{}", k + 1, fmt_f64(v)));
        }
    }
    line
}

pub fn write_sparse(set: &FeatureSet, out: &mut impl Write) -> std::io::Result<()> {
    for e in &set.examples {
        writeln!(out, "{}", sparse_line(e.label, &e.features))?;
    }
    Ok(())
}

/// Parses a sparse line back into its label and `(index, value)` pairs.
pub fn parse_sparse_line(line: usize, text: &str) -> Result<(i64, Vec<(usize, f64)>)> {
    let mut tokens = text.split_whitespace();
    let label = parse_int(line, tokens.next().ok_or_else(|| Error::parse(line, "empty line"))?)?;
    let pairs = tokens
        .map(|t| {
            let (i, v) = t
                .split_once(':')
                .ok_or_else(|| Error::parse(line, format!("bad pair {t:?}")))?;
            Ok((parse_int(line, i)?, crate::textio::parse_f64(line, v)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((label, pairs))
}
