//! JSON documents for classes and nested problems, CSV tables, and atomic
//! file output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::class::FunctionClass;
use crate::complexity::{ComplexityCurve, EmpiricalCurve};
use crate::error::{Error, Result};
use crate::loss::{JointAtom, JointDistribution, LossSpec};
use crate::measure::{make_measure, DiscreteMeasure};
use crate::scenarios::GapReplicate;
use crate::selection::{make_nested, NestedProblem};

pub const CURVE_HEADER: &str = "r,value,stderr,K,n,kind";
pub const PFHAT_HEADER: &str = "replicate,exact,adversarial_low,adversarial_high,witness_found";
pub const STAT_HEADER: &str = "stat,value";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub label: String,
    pub members: Vec<Vec<f64>>,
}

impl ClassEntry {
    pub fn from_class(class: &FunctionClass) -> Self {
        ClassEntry {
            label: class.label().to_string(),
            members: class.members().iter().map(|f| f.values().to_vec()).collect(),
        }
    }

    pub fn to_class(&self) -> Result<FunctionClass> {
        FunctionClass::from_rows(self.label.clone(), self.members.clone())
    }
}

/// `{"atoms": m, "probs": [...], "classes": [{"label": ..., "members": [[...], ...]}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassDocument {
    pub atoms: usize,
    pub probs: Vec<f64>,
    pub classes: Vec<ClassEntry>,
}

impl ClassDocument {
    pub fn new(p: &DiscreteMeasure, classes: &[FunctionClass]) -> Self {
        ClassDocument {
            atoms: p.atom_count(),
            probs: p.probs().to_vec(),
            classes: classes.iter().map(ClassEntry::from_class).collect(),
        }
    }

    /// The measure; weights that do not sum to one are normalized.
    pub fn measure(&self) -> Result<DiscreteMeasure> {
        if self.probs.len() != self.atoms {
            return Err(Error::DimensionMismatch {
                expected: self.atoms,
                actual: self.probs.len(),
            });
        }
        make_measure(&self.probs)
    }

    pub fn classes(&self) -> Result<Vec<FunctionClass>> {
        self.classes
            .iter()
            .map(|entry| {
                let class = entry.to_class()?;
                if class.atom_count() != self.atoms {
                    return Err(Error::DimensionMismatch {
                        expected: self.atoms,
                        actual: class.atom_count(),
                    });
                }
                Ok(class)
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidParameter {
            name: "document",
            reason: e.to_string(),
        })
    }
}

/// Nested model-selection problem: predictor classes on `atoms` x-atoms,
/// a tabulated loss, the joint law as `{x, y, p}` pairs, and `eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NestedDocument {
    pub atoms: usize,
    pub joint: Vec<JointAtom>,
    pub loss: LossSpec,
    pub classes: Vec<ClassEntry>,
    pub eps: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty_scale: Option<f64>,
}

impl NestedDocument {
    pub fn to_problem(&self) -> Result<NestedProblem> {
        let loss = LossSpec::new(self.loss.predictions.clone(), self.loss.responses.clone(), self.loss.table.clone())?;
        let joint = JointDistribution::new(self.atoms, self.joint.clone())?;
        let classes = self.classes.iter().map(ClassEntry::to_class).collect::<Result<Vec<_>>>()?;
        let problem = make_nested(classes, loss, joint, self.eps.clone())?;
        match self.penalty_scale {
            Some(scale) => problem.with_penalty_scale(scale),
            None => Ok(problem),
        }
    }
}

fn push_row(out: &mut String, fields: &[String]) {
    out.push_str(&fields.join(","));
    out.push('\n');
}

pub fn curve_csv(curve: &ComplexityCurve) -> String {
    let mut out = format!("{CURVE_HEADER}\n");
    for j in 0..curve.grid.len() {
        push_row(
            &mut out,
            &[
                curve.grid[j].to_string(),
                curve.values[j].to_string(),
                curve.stderr[j].to_string(),
                curve.replicates.to_string(),
                curve.n.to_string(),
                curve.kind.as_str().to_string(),
            ],
        );
    }
    out
}

/// Empirical curves carry no replicate count; `K` is the number of sign
/// draws (0 for exact enumeration).
pub fn empirical_curve_csv(curve: &EmpiricalCurve, draws: usize) -> String {
    let mut out = format!("{CURVE_HEADER}\n");
    for j in 0..curve.grid.len() {
        push_row(
            &mut out,
            &[
                curve.grid[j].to_string(),
                curve.values[j].to_string(),
                curve.stderr[j].to_string(),
                draws.to_string(),
                curve.n.to_string(),
                "empirical".to_string(),
            ],
        );
    }
    out
}

pub fn pfhat_csv(rows: &[GapReplicate]) -> String {
    let mut out = format!("{PFHAT_HEADER}\n");
    for r in rows {
        push_row(
            &mut out,
            &[
                r.replicate.to_string(),
                r.exact.to_string(),
                r.adversarial_low.to_string(),
                r.adversarial_high.to_string(),
                r.witness_found.to_string(),
            ],
        );
    }
    out
}

pub fn stat_csv(rows: &[(&str, f64)]) -> String {
    let mut out = format!("{STAT_HEADER}\n");
    for (stat, value) in rows {
        let _ = writeln!(out, "{stat},{value}");
    }
    out
}

/// Writes to a sibling temporary file and renames it over `path`.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Resource(format!("{} has no file name", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let io_err = |e: std::io::Error| Error::Resource(format!("writing {}: {e}", path.display()));
    fs::write(&tmp, contents).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(e)
    })
}
