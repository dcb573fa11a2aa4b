//! Tabular data: a numeric feature matrix, binary outcome labels and an
//! optional categorical group attribute.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-row group codes plus the declared category set.
///
/// `codes[i]` indexes into `categories`. One category is the designated
/// "unspecified" value; empty strings in ingested data map to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupColumn {
    pub name: String,
    pub categories: Vec<String>,
    pub unspecified: usize,
    pub codes: Vec<usize>,
}

impl GroupColumn {
    pub fn category(&self, code: usize) -> &str {
        &self.categories[code]
    }

    pub fn code_of(&self, category: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == category)
    }

    /// Row count per category, in category order.
    pub fn supports(&self) -> Vec<usize> {
        let mut counts = vec![0; self.categories.len()];
        for &c in &self.codes {
            counts[c] += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularDataset {
    feature_names: Vec<String>,
    rows: Vec<Vec<f64>>,
    labels: Vec<bool>,
    groups: Option<GroupColumn>,
}

impl TabularDataset {
    pub fn new(feature_names: Vec<String>, rows: Vec<Vec<f64>>, labels: Vec<bool>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != feature_names.len() {
                return Err(Error::InvalidDataset(format!(
                    "row {i} has {} values, expected {}",
                    row.len(),
                    feature_names.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!(
                    "row {i} has a non-finite value for `{}`",
                    feature_names[j]
                )));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidDataset(format!("duplicate feature `{name}`")));
            }
        }
        Ok(Self {
            feature_names,
            rows,
            labels,
            groups: None,
        })
    }

    /// Attaches a group attribute. `unspecified` must be one of `categories`.
    pub fn with_groups(
        mut self,
        name: impl Into<String>,
        categories: Vec<String>,
        unspecified: &str,
        codes: Vec<usize>,
    ) -> Result<Self> {
        let unspecified = categories
            .iter()
            .position(|c| c == unspecified)
            .ok_or_else(|| {
                Error::InvalidDataset(format!("unspecified category `{unspecified}` not in category set"))
            })?;
        if codes.len() != self.rows.len() {
            return Err(Error::InvalidDataset(format!(
                "{} group codes for {} rows",
                codes.len(),
                self.rows.len()
            )));
        }
        if let Some(bad) = codes.iter().find(|&&c| c >= categories.len()) {
            return Err(Error::InvalidDataset(format!("group code {bad} outside category set")));
        }
        self.groups = Some(GroupColumn {
            name: name.into(),
            categories,
            unspecified,
            codes,
        });
        Ok(self)
    }

    pub fn without_groups(mut self) -> Self {
        self.groups = None;
        self
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> bool {
        self.labels[i]
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn groups(&self) -> Option<&GroupColumn> {
        self.groups.as_ref()
    }

    pub fn require_groups(&self) -> Result<&GroupColumn> {
        self.groups.as_ref().ok_or(Error::NoProtectedAttribute)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Rows at `indices`, in the given order; group column carried along.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            feature_names: self.feature_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            groups: self.groups.as_ref().map(|g| GroupColumn {
                codes: indices.iter().map(|&i| g.codes[i]).collect(),
                ..g.clone()
            }),
        }
    }

    pub fn without_feature(&self, name: &str) -> Result<Self> {
        let j = self.feature_index(name)?;
        if self.n_features() < 2 {
            return Err(Error::InvalidParameter(format!(
                "cannot remove `{name}`: it is the only feature"
            )));
        }
        let mut out = self.clone();
        out.feature_names.remove(j);
        for row in &mut out.rows {
            row.remove(j);
        }
        Ok(out)
    }

    /// Same rows and groups with new labels (used to retarget a learner).
    pub fn with_labels(&self, labels: Vec<bool>) -> Result<Self> {
        if labels.len() != self.n_rows() {
            return Err(Error::InvalidDataset("label count mismatch".into()));
        }
        Ok(Self {
            labels,
            ..self.clone()
        })
    }

    /// Appends extra feature columns.
    pub fn with_extra_features(&self, names: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        let mut feature_names = self.feature_names.clone();
        feature_names.extend(names);
        let rows = self
            .rows
            .iter()
            .zip(values)
            .map(|(r, extra)| r.iter().copied().chain(extra).collect())
            .collect();
        let out = Self::new(feature_names, rows, self.labels.clone())?;
        Ok(Self {
            groups: self.groups.clone(),
            ..out
        })
    }

    pub fn read_csv<R: Read>(reader: R, roles: &ColumnRoles) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let find = |name: &str| {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::InvalidDataset(format!("missing column `{name}`")))
        };
        let label_col = find(&roles.label)?;
        let group_col = roles.group.as_deref().map(find).transpose()?;
        let feature_cols: Vec<usize> = (0..header.len())
            .filter(|&c| c != label_col && Some(c) != group_col)
            .collect();
        let feature_names = feature_cols.iter().map(|&c| header[c].clone()).collect();

        let unspecified_code = roles
            .categories
            .iter()
            .position(|c| c == &roles.unspecified);
        if group_col.is_some() && unspecified_code.is_none() {
            return Err(Error::InvalidDataset(format!(
                "unspecified category `{}` not in category set",
                roles.unspecified
            )));
        }

        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut codes = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let line = line + 2;
            let label = match record.get(label_col).map(str::trim) {
                Some("1") => true,
                Some("0") => false,
                other => {
                    return Err(Error::InvalidDataset(format!(
                        "line {line}: label must be 0 or 1, got {other:?}"
                    )))
                }
            };
            let mut row = Vec::with_capacity(feature_cols.len());
            for &c in &feature_cols {
                let raw = record.get(c).unwrap_or("").trim();
                if raw.is_empty() {
                    return Err(Error::InvalidDataset(format!(
                        "line {line}: missing value for `{}`",
                        header[c]
                    )));
                }
                let v: f64 = raw.parse().map_err(|_| {
                    Error::InvalidDataset(format!("line {line}: `{raw}` is not numeric ({})", header[c]))
                })?;
                if !v.is_finite() {
                    return Err(Error::InvalidDataset(format!(
                        "line {line}: non-finite value for `{}`",
                        header[c]
                    )));
                }
                row.push(v);
            }
            if let Some(gc) = group_col {
                let raw = record.get(gc).unwrap_or("").trim();
                let code = if raw.is_empty() {
                    unspecified_code.unwrap()
                } else {
                    roles.categories.iter().position(|c| c == raw).ok_or_else(|| {
                        Error::InvalidDataset(format!("line {line}: group `{raw}` not in category set"))
                    })?
                };
                codes.push(code);
            }
            rows.push(row);
            labels.push(label);
        }
        let ds = Self::new(feature_names, rows, labels)?;
        match &roles.group {
            Some(name) => ds.with_groups(name.clone(), roles.categories.clone(), &roles.unspecified, codes),
            None => Ok(ds),
        }
    }

    /// Writes features, then the label column, then the group column if any.
    pub fn write_csv<W: Write>(&self, writer: W, label_column: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(label_column);
        if let Some(g) = &self.groups {
            header.push(&g.name);
        }
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut rec: Vec<String> = self.rows[i].iter().map(|v| v.to_string()).collect();
            rec.push(if self.labels[i] { "1" } else { "0" }.to_string());
            if let Some(g) = &self.groups {
                rec.push(g.categories[g.codes[i]].clone());
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Column roles for CSV ingestion. Roles are declared, never inferred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnRoles {
    pub label: String,
    #[serde(default)]
    pub group: Option<String>,
    #[serde(default)]
    pub categories: Vec<String>,
    #[serde(default = "default_unspecified")]
    pub unspecified: String,
}

fn default_unspecified() -> String {
    "U".to_string()
}
