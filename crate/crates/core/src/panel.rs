//! Panel ingestion and the central data container.
//!
//! A [`TimeSeriesPanel`] holds T observations of n series together with a
//! label and a [`SeriesRole`] per series. Columns are always stored in the
//! normalized order (policies, treated outcomes, control outcomes), sorted by
//! role index within each class, so downstream code can rely on the policy
//! block coming first. Values are finite f64; timestamps are strictly
//! increasing.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Role of one series in the causal layout.
///
/// Indices are the 1-based positions written in role config files
/// (`policy:1`, `treated:2`, ...). A treated outcome and a control outcome
/// with the same index form a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeriesRole {
    Policy(u32),
    TreatedOutcome(u32),
    ControlOutcome(u32),
}

impl SeriesRole {
    fn class_order(&self) -> (u8, u32) {
        match *self {
            SeriesRole::Policy(k) => (0, k),
            SeriesRole::TreatedOutcome(j) => (1, j),
            SeriesRole::ControlOutcome(j) => (2, j),
        }
    }
}

impl std::fmt::Display for SeriesRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeriesRole::Policy(k) => write!(f, "policy:{k}"),
            SeriesRole::TreatedOutcome(j) => write!(f, "treated:{j}"),
            SeriesRole::ControlOutcome(j) => write!(f, "control:{j}"),
        }
    }
}

/// T x n panel of time series with roles. Rows are time, columns are series.
#[derive(Debug, Clone)]
pub struct TimeSeriesPanel {
    labels: Vec<String>,
    roles: Vec<SeriesRole>,
    /// Ordinal encoding of the timestamps; only ordering is meaningful.
    time: Vec<i64>,
    /// Original timestamp strings, kept for display.
    time_labels: Vec<String>,
    data: DMatrix<f64>,
}

impl TimeSeriesPanel {
    /// Build a panel from in-memory data with integer ticks 0..T. Columns are
    /// reordered into the normalized (policy, treated, control) layout.
    pub fn new(
        labels: Vec<String>,
        roles: Vec<SeriesRole>,
        data: DMatrix<f64>,
    ) -> Result<TimeSeriesPanel> {
        let t = data.nrows();
        let time: Vec<i64> = (0..t as i64).collect();
        let time_labels = time.iter().map(|x| x.to_string()).collect();
        Self::with_time(labels, roles, time, time_labels, data)
    }

    fn with_time(
        labels: Vec<String>,
        roles: Vec<SeriesRole>,
        time: Vec<i64>,
        time_labels: Vec<String>,
        data: DMatrix<f64>,
    ) -> Result<TimeSeriesPanel> {
        let n = data.ncols();
        if labels.len() != n || roles.len() != n {
            return Err(Error::BadPanel(format!(
                "{} labels and {} roles for {} data columns",
                labels.len(),
                roles.len(),
                n
            )));
        }
        if n == 0 {
            return Err(Error::BadPanel("panel has no series".into()));
        }
        if data.nrows() < 2 {
            return Err(Error::BadPanel("panel needs at least 2 rows".into()));
        }
        for pair in time.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::BadPanel("timestamps are not increasing".into()));
            }
        }
        {
            let mut seen = HashMap::new();
            for (i, l) in labels.iter().enumerate() {
                if seen.insert(l.clone(), i).is_some() {
                    return Err(Error::BadPanel(format!("duplicate series label {l:?}")));
                }
            }
        }
        {
            let mut seen = HashMap::new();
            for r in &roles {
                if seen.insert(r.class_order(), ()).is_some() {
                    return Err(Error::BadPanel(format!("duplicate role {r}")));
                }
            }
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::BadPanel("panel contains non-finite values".into()));
        }

        // Normalize column order: policies, then treated, then controls,
        // each sorted by role index.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| roles[i].class_order());
        let labels = order.iter().map(|&i| labels[i].clone()).collect();
        let roles_sorted: Vec<SeriesRole> = order.iter().map(|&i| roles[i]).collect();
        let data = DMatrix::from_fn(data.nrows(), n, |r, c| data[(r, order[c])]);

        Ok(TimeSeriesPanel {
            labels,
            roles: roles_sorted,
            time,
            time_labels,
            data,
        })
    }

    /// Number of observations T.
    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    /// Number of series n.
    pub fn n_series(&self) -> usize {
        self.data.ncols()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn roles(&self) -> &[SeriesRole] {
        &self.roles
    }

    pub fn time_labels(&self) -> &[String] {
        &self.time_labels
    }

    /// The observation matrix, rows = time in increasing order.
    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Column index of every policy series, in normalized order.
    pub fn policy_columns(&self) -> Vec<usize> {
        self.columns_where(|r| matches!(r, SeriesRole::Policy(_)))
    }

    /// Column index of every treated outcome, in normalized order.
    pub fn treated_columns(&self) -> Vec<usize> {
        self.columns_where(|r| matches!(r, SeriesRole::TreatedOutcome(_)))
    }

    /// Column index of every control outcome, in normalized order.
    pub fn control_columns(&self) -> Vec<usize> {
        self.columns_where(|r| matches!(r, SeriesRole::ControlOutcome(_)))
    }

    fn columns_where(&self, pred: impl Fn(&SeriesRole) -> bool) -> Vec<usize> {
        self.roles
            .iter()
            .enumerate()
            .filter(|(_, r)| pred(r))
            .map(|(i, _)| i)
            .collect()
    }

    /// One series as a vector of values.
    pub fn series(&self, col: usize) -> Vec<f64> {
        self.data.column(col).iter().copied().collect()
    }

    /// A panel holding a subset of columns (same rows and timestamps).
    pub fn select(&self, cols: &[usize]) -> Result<TimeSeriesPanel> {
        let labels = cols.iter().map(|&c| self.labels[c].clone()).collect();
        let roles = cols.iter().map(|&c| self.roles[c]).collect();
        let data = DMatrix::from_fn(self.len(), cols.len(), |r, j| self.data[(r, cols[j])]);
        Self::with_time(
            labels,
            roles,
            self.time.clone(),
            self.time_labels.clone(),
            data,
        )
    }

    /// Replace the observation matrix, keeping labels, roles, and timestamps.
    /// Shapes must match.
    pub fn with_data(&self, data: DMatrix<f64>) -> Result<TimeSeriesPanel> {
        if data.shape() != self.data.shape() {
            return Err(Error::BadPanel("replacement data shape mismatch".into()));
        }
        Self::with_time(
            self.labels.clone(),
            self.roles.clone(),
            self.time.clone(),
            self.time_labels.clone(),
            data,
        )
    }
}

/// First differences: row t of the result is row t+1 minus row t of the
/// input, so the result has T - 1 rows and keeps labels, roles, and the
/// trailing timestamps. Cumulatively summing the result from the first
/// original row reconstructs the input exactly.
pub fn first_difference(panel: &TimeSeriesPanel) -> Result<TimeSeriesPanel> {
    let t = panel.len();
    if t < 3 {
        return Err(Error::TooShort { rows: t, needed: 3 });
    }
    let n = panel.n_series();
    let data = DMatrix::from_fn(t - 1, n, |r, c| {
        panel.data[(r + 1, c)] - panel.data[(r, c)]
    });
    TimeSeriesPanel::with_time(
        panel.labels.clone(),
        panel.roles.clone(),
        panel.time[1..].to_vec(),
        panel.time_labels[1..].to_vec(),
        data,
    )
}

/// Parse a role config: one `column_name = role` entry per line, where the
/// role is `policy:k`, `treated:j`, or `control:j` with a 1-based index.
/// Blank lines and `#` comments are ignored.
pub fn parse_role_map(text: &str) -> Result<Vec<(String, SeriesRole)>> {
    let mut map = Vec::new();
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (name, role_text) = line
            .split_once('=')
            .ok_or_else(|| Error::BadRoleEntry(raw.to_string()))?;
        let name = name.trim();
        let role_text = role_text.trim();
        let (kind, idx) = role_text
            .split_once(':')
            .ok_or_else(|| Error::BadRoleEntry(raw.to_string()))?;
        let idx: u32 = idx
            .trim()
            .parse()
            .map_err(|_| Error::BadRoleEntry(raw.to_string()))?;
        if idx == 0 {
            return Err(Error::BadRoleEntry(raw.to_string()));
        }
        let role = match kind.trim() {
            "policy" => SeriesRole::Policy(idx),
            "treated" => SeriesRole::TreatedOutcome(idx),
            "control" => SeriesRole::ControlOutcome(idx),
            _ => return Err(Error::BadRoleEntry(raw.to_string())),
        };
        if name.is_empty() {
            return Err(Error::BadRoleEntry(raw.to_string()));
        }
        map.push((name.to_string(), role));
    }
    if map.is_empty() {
        return Err(Error::BadPanel("role map assigns no columns".into()));
    }
    Ok(map)
}

/// Load a CSV panel. The file must have a header row; the first column is the
/// time axis (bare integers or ISO dates), every other column must appear in
/// `role_map`, and every `role_map` entry must name an existing column.
pub fn load_panel(csv_path: &Path, role_map: &[(String, SeriesRole)]) -> Result<TimeSeriesPanel> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(csv_path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    if headers.len() < 2 {
        return Err(Error::BadPanel(
            "CSV needs a time column and at least one series".into(),
        ));
    }
    let data_headers = &headers[1..];

    let roles_by_name: HashMap<&str, SeriesRole> = role_map
        .iter()
        .map(|(name, role)| (name.as_str(), *role))
        .collect();
    for (name, _) in role_map {
        if !data_headers.iter().any(|h| h == name) {
            return Err(Error::MissingColumn(name.clone()));
        }
    }
    let mut roles = Vec::with_capacity(data_headers.len());
    for h in data_headers {
        match roles_by_name.get(h.as_str()) {
            Some(role) => roles.push(*role),
            None => return Err(Error::UnassignedColumn(h.clone())),
        }
    }

    let mut time = Vec::new();
    let mut time_labels = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let stamp = record.get(0).unwrap_or("").to_string();
        let ord = parse_timestamp(&stamp)?;
        if let Some(&last) = time.last() {
            if ord == last {
                return Err(Error::DuplicateTimestamp(stamp));
            }
            if ord < last {
                return Err(Error::BadPanel(format!(
                    "timestamp {stamp:?} out of order at row {row_idx}"
                )));
            }
        }
        time.push(ord);
        time_labels.push(stamp);
        for (j, header) in data_headers.iter().enumerate() {
            let cell = record.get(j + 1).unwrap_or("");
            let parsed: std::result::Result<f64, _> = cell.parse();
            match parsed {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(Error::NonNumericCell {
                        row: row_idx,
                        column: header.clone(),
                        value: cell.to_string(),
                    })
                }
            }
        }
    }
    let t = time.len();
    let n = data_headers.len();
    let data = DMatrix::from_row_slice(t.max(1), n, &values);
    TimeSeriesPanel::with_time(data_headers.to_vec(), roles, time, time_labels, data)
}

/// Load a panel from a CSV path and a role config path.
pub fn load_panel_files(csv_path: &Path, roles_path: &Path) -> Result<TimeSeriesPanel> {
    let text = std::fs::read_to_string(roles_path)?;
    let role_map = parse_role_map(&text)?;
    load_panel(csv_path, &role_map)
}

/// Map a timestamp to an ordinal that preserves chronological order. Accepts
/// bare integers, YYYY-MM, and YYYY-MM-DD.
fn parse_timestamp(s: &str) -> Result<i64> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::BadTimestamp(s.to_string()));
    }
    if let Ok(tick) = s.parse::<i64>() {
        return Ok(tick);
    }
    let parts: Vec<&str> = s.split('-').collect();
    if parts.len() == 2 || parts.len() == 3 {
        let y: i64 = parts[0]
            .parse()
            .map_err(|_| Error::BadTimestamp(s.to_string()))?;
        let m: i64 = parts[1]
            .parse()
            .map_err(|_| Error::BadTimestamp(s.to_string()))?;
        let d: i64 = if parts.len() == 3 {
            parts[2]
                .parse()
                .map_err(|_| Error::BadTimestamp(s.to_string()))?
        } else {
            0
        };
        if !(1..=12).contains(&m) || !(0..=31).contains(&d) {
            return Err(Error::BadTimestamp(s.to_string()));
        }
        // Lexicographic (y, m, d) packing; gaps don't matter, only order does.
        return Ok((y * 13 + m) * 32 + d);
    }
    Err(Error::BadTimestamp(s.to_string()))
}
