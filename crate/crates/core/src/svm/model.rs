//! Trained models and their text format.
//!
//! A binary model is written as
//!
//! ```text
//! texsvm-model v1
//! kernel <name> [param]
//! c <C>
//! bias <b>
//! support <count>
//! <index>\t<alpha>\t<y>\t<v1 v2 ...>
//! ```
//!
//! with one row per support vector. A multiclass model is a
//! `texsvm-multiclass v1` line, a `classes <k>` line, and then `k` binary
//! model blocks in class order. Numbers use the shortest text that parses
//! back to the same double.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textio::{fmt_f64, join_f64, parse_f64, parse_f64_list, parse_int, LineReader};

use super::kernel::KernelSpec;

pub const MODEL_HEADER: &str = "texsvm-model v1";
pub const MULTICLASS_HEADER: &str = "texsvm-multiclass v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportVector {
    /// Position in the training view.
    pub index: usize,
    pub alpha: f64,
    /// +1 or -1.
    pub label: f64,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvmModel {
    pub kernel: KernelSpec,
    pub c: f64,
    pub bias: f64,
    pub support: Vec<SupportVector>,
}

impl BinarySvmModel {
    pub fn arity(&self) -> Option<usize> {
        self.support.first().map(|s| s.features.len())
    }

    /// `f(x) = Σ α_i y_i K(x_i, x) + b`.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        let mut f = self.bias;
        for sv in &self.support {
            f += sv.alpha * sv.label * self.kernel.eval(&sv.features, x)?;
        }
        Ok(f)
    }

    /// Sign of the decision value, with `sgn(0) = +1`.
    pub fn classify(&self, x: &[f64]) -> Result<i64> {
        Ok(if self.decision_value(x)? >= 0.0 { 1 } else { -1 })
    }

    pub fn write_text(&self, out: &mut String) {
        out.push_str(MODEL_HEADER);
        out.push('\n');
        match self.kernel.param() {
            Some(p) => out.push_str(&format!("kernel {} {}\n", self.kernel.name(), fmt_f64(p))),
            None => out.push_str(&format!("kernel {}\n", self.kernel.name())),
        }
        out.push_str(&format!("c {}\n", fmt_f64(self.c)));
        out.push_str(&format!("bias {}\n", fmt_f64(self.bias)));
        out.push_str(&format!("support {}\n", self.support.len()));
        for sv in &self.support {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                sv.index,
                fmt_f64(sv.alpha),
                fmt_f64(sv.label),
                join_f64(&sv.features)
            ));
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        self.write_text(&mut s);
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = LineReader::new(text);
        Self::read_text(&mut r)
    }

    pub(crate) fn read_text(r: &mut LineReader<'_>) -> Result<Self> {
        let (n, header) = r.expect_line("model header")?;
        if header.trim() != MODEL_HEADER {
            return Err(Error::parse(n, format!("expected `{MODEL_HEADER}`, found {header:?}")));
        }
        let (n, kernel) = r.expect_key("kernel")?;
        let mut parts = kernel.split_whitespace();
        let name = parts.next().ok_or_else(|| Error::parse(n, "missing kernel name"))?;
        let param = parts.next().map(|t| parse_f64(n, t)).transpose()?;
        let kernel = KernelSpec::from_name(name, param).map_err(|e| Error::parse(n, e.to_string()))?;
        let (n, c) = r.expect_key("c")?;
        let c = parse_f64(n, c)?;
        let (n, bias) = r.expect_key("bias")?;
        let bias = parse_f64(n, bias)?;
        let (n, count) = r.expect_key("support")?;
        let count: usize = parse_int(n, count)?;
        let mut support = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, row) = r.expect_line("support vector row")?;
            let cols: Vec<&str> = row.splitn(4, '\t').collect();
            if cols.len() < 3 {
                return Err(Error::parse(n, "support vector row needs index, alpha, y and features"));
            }
            let features = cols.get(3).map(|f| parse_f64_list(n, f)).transpose()?.unwrap_or_default();
            let sv = SupportVector {
                index: parse_int(n, cols[0])?,
                alpha: parse_f64(n, cols[1])?,
                label: parse_f64(n, cols[2])?,
                features,
            };
            if let Some(first) = support.first().map(|s: &SupportVector| s.features.len()) {
                if first != sv.features.len() {
                    return Err(Error::parse(n, "support vectors differ in length"));
                }
            }
            support.push(sv);
        }
        Ok(Self {
            kernel,
            c,
            bias,
            support,
        })
    }
}

/// One-against-rest classifier over classes `0..k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassModel {
    /// Model `i` separates class `i` from the rest.
    pub models: Vec<BinarySvmModel>,
}

impl MulticlassModel {
    pub fn classes(&self) -> usize {
        self.models.len()
    }

    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.models.iter().map(|m| m.decision_value(x)).collect()
    }

    /// Class with the largest decision value; ties go to the lower index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let values = self.decision_values(x)?;
        let mut best = 0;
        for (k, &v) in values.iter().enumerate().skip(1) {
            if v > values[best] {
                best = k;
            }
        }
        Ok(best)
    }

    pub fn write_text(&self, out: &mut String) {
        out.push_str(MULTICLASS_HEADER);
        out.push('\n');
        out.push_str(&format!("classes {}\n", self.models.len()));
        for m in &self.models {
            m.write_text(out);
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        self.write_text(&mut s);
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::read_text(&mut LineReader::new(text))
    }

    pub(crate) fn read_text(r: &mut LineReader<'_>) -> Result<Self> {
        let (n, header) = r.expect_line("multiclass header")?;
        if header.trim() != MULTICLASS_HEADER {
            return Err(Error::parse(n, format!("expected `{MULTICLASS_HEADER}`, found {header:?}")));
        }
        let (n, k) = r.expect_key("classes")?;
        let k: usize = parse_int(n, k)?;
        let models = (0..k).map(|_| BinarySvmModel::read_text(r)).collect::<Result<Vec<_>>>()?;
        Ok(Self { models })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> BinarySvmModel {
        BinarySvmModel {
            kernel: KernelSpec::Rbf { sigma2: 0.3 },
            c: 10.0,
            bias: -1.0 / 3.0,
            support: vec![
                SupportVector {
                    index: 0,
                    alpha: 0.1,
                    label: 1.0,
                    features: vec![1.0, 2.5e-9, -3.0],
                },
                SupportVector {
                    index: 7,
                    alpha: 10.0,
                    label: -1.0,
                    features: vec![0.0, 1.0 / 7.0, 1e300],
                },
            ],
        }
    }

    #[test]
    fn sgn_zero_is_positive() {
        let m = BinarySvmModel {
            kernel: KernelSpec::Linear,
            c: 1.0,
            bias: 0.0,
            support: vec![],
        };
        assert_eq!(m.classify(&[3.0]).unwrap(), 1);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let m = sample();
        let text = m.to_text();
        let back = BinarySvmModel::from_text(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn multiclass_round_trip_and_ties() {
        let mut other = sample();
        other.bias = 2.0;
        let mc = MulticlassModel {
            models: vec![sample(), other],
        };
        let text = mc.to_text();
        assert_eq!(MulticlassModel::from_text(&text).unwrap(), mc);

        let flat = |b| BinarySvmModel {
            kernel: KernelSpec::Linear,
            c: 1.0,
            bias: b,
            support: vec![],
        };
        let tie = MulticlassModel {
            models: vec![flat(0.5), flat(1.0), flat(1.0)],
        };
        assert_eq!(tie.predict(&[0.0]).unwrap(), 1);
    }

    #[test]
    fn malformed_text_names_the_line() {
        let text = sample().to_text().replace("bias", "bogus");
        match BinarySvmModel::from_text(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }
}
