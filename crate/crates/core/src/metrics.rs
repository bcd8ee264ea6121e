//! Revealed comparative advantage of units (antennas, zones, aggregates)
//! over apps or app categories.
//!
//! `RCA[u][a] = (T[u][a] / sum_a T[u][a]) / share[a]`, where `share[a]` is
//! the app's share of a reference matrix (by default the matrix itself).
//! `RSCA = (RCA - 1) / (RCA + 1)`.

use std::collections::{BTreeSet, HashMap};

use chrono::NaiveDate;
use serde::Serialize;

use crate::calendar::{DayWindow, LocalCalendar};
use crate::error::{Error, Result};
use crate::ingest::{AppCatalog, AppCategory};
use crate::stats::{mean, sample_variance, t_quantile};
use crate::traffic::SeriesSet;

/// Non-negative volumes, units as rows and apps (or categories) as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitAppMatrix {
    units: Vec<String>,
    cols: Vec<String>,
    values: Vec<f64>,
}

impl UnitAppMatrix {
    pub fn new(units: Vec<String>, cols: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != units.len() * cols.len() {
            return Err(Error::invalid(format!(
                "matrix needs {}x{} values, got {}",
                units.len(),
                cols.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::invalid(format!("matrix entry {v} is not a finite volume >= 0")));
        }
        for (what, ids) in [("unit", &units), ("column", &cols)] {
            let mut seen = BTreeSet::new();
            if let Some(d) = ids.iter().find(|id| !seen.insert(id.as_str())) {
                return Err(Error::invalid(format!("duplicate {what} id {d:?}")));
            }
        }
        Ok(UnitAppMatrix { units, cols, values })
    }

    pub fn from_rows(units: Vec<String>, cols: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| r.len() != cols.len()) {
            return Err(Error::invalid(format!("row of length {} for {} columns", r.len(), cols.len())));
        }
        UnitAppMatrix::new(units, cols, rows.concat())
    }

    pub fn units(&self) -> &[String] {
        &self.units
    }

    pub fn cols(&self) -> &[String] {
        &self.cols
    }

    pub fn n_units(&self) -> usize {
        self.units.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn get(&self, u: usize, a: usize) -> f64 {
        self.values[u * self.cols.len() + a]
    }

    pub fn row(&self, u: usize) -> &[f64] {
        let n = self.cols.len();
        &self.values[u * n..(u + 1) * n]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_units()).map(|u| self.row(u).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols()];
        for u in 0..self.n_units() {
            for (o, v) in out.iter_mut().zip(self.row(u)) {
                *o += v;
            }
        }
        out
    }

    pub fn total(&self) -> f64 {
        self.row_sums().iter().sum()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        UnitAppMatrix::new(self.units.clone(), self.cols.clone(), self.values.iter().map(|v| v * c).collect())
    }

    /// Rows of `units` in the given order.
    pub fn select_units(&self, units: &[&str]) -> Result<Self> {
        let idx: HashMap<&str, usize> = self.units.iter().enumerate().map(|(i, u)| (u.as_str(), i)).collect();
        let mut values = Vec::with_capacity(units.len() * self.n_cols());
        for u in units {
            let i = *idx.get(u).ok_or_else(|| Error::invalid(format!("unknown unit {u:?}")))?;
            values.extend_from_slice(self.row(i));
        }
        UnitAppMatrix::new(units.iter().map(|s| s.to_string()).collect(), self.cols.clone(), values)
    }

    /// One row holding the sum of the named units.
    pub fn sum_units(&self, name: &str, units: &[&str]) -> Result<Self> {
        let sub = self.select_units(units)?;
        UnitAppMatrix::new(vec![name.to_string()], self.cols.clone(), sub.col_sums())
    }

    /// Rows of `self` followed by rows of `other` (same columns required).
    pub fn stacked(&self, other: &UnitAppMatrix) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::invalid("cannot stack matrices with different columns"));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        UnitAppMatrix::new([self.units.clone(), other.units.clone()].concat(), self.cols.clone(), values)
    }

    /// Sums member-app columns into category columns (categories in their
    /// fixed order, only those with at least one app present).
    pub fn category_matrix(&self, catalog: &AppCatalog) -> Result<Self> {
        let mut col_cat = Vec::with_capacity(self.n_cols());
        for c in &self.cols {
            col_cat.push(
                catalog
                    .category_of(c)
                    .ok_or_else(|| Error::invalid(format!("app {c:?} is not in the catalog")))?,
            );
        }
        let present: Vec<AppCategory> = AppCategory::ALL.into_iter().filter(|c| col_cat.contains(c)).collect();
        let pos: HashMap<AppCategory, usize> = present.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        let k = present.len();
        let mut values = vec![0.0; self.n_units() * k];
        for u in 0..self.n_units() {
            for (a, v) in self.row(u).iter().enumerate() {
                values[u * k + pos[&col_cat[a]]] += v;
            }
        }
        UnitAppMatrix::new(self.units.clone(), present.iter().map(|c| c.as_str().to_string()).collect(), values)
    }
}

/// Volumes per unit and app over the hours whose local date falls in
/// `window`, optionally limited to `days`. Fails when no hour qualifies.
pub fn windowed_matrix(
    series: &SeriesSet,
    window: DayWindow,
    calendar: &LocalCalendar,
    days: Option<&BTreeSet<NaiveDate>>,
) -> Result<UnitAppMatrix> {
    let n = series.axis().len();
    let mut dates: HashMap<i64, NaiveDate> = HashMap::new();
    let mut keep = |t: i64| -> Result<bool> {
        let d = match dates.get(&t) {
            Some(d) => *d,
            None => {
                let d = calendar.local_date(t)?;
                dates.insert(t, d);
                d
            }
        };
        Ok(calendar.in_window(d, window) && days.is_none_or(|s| s.contains(&d)))
    };
    let mut units = Vec::with_capacity(series.len());
    let mut values = Vec::with_capacity(series.len() * n);
    let mut any_hour = false;
    for (unit, s) in series.units() {
        let mut row = vec![0.0; n];
        for (t, v) in s.hours() {
            if keep(t)? {
                any_hour = true;
                for (o, x) in row.iter_mut().zip(v) {
                    *o += x;
                }
            }
        }
        units.push(unit.to_string());
        values.extend(row);
    }
    if !any_hour {
        return Err(Error::invalid(format!("no traffic hour falls in the {} window", window.as_str())));
    }
    UnitAppMatrix::new(units, series.axis().names().to_vec(), values)
}

/// Column shares of a reference matrix, the common baseline for RCA.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    cols: Vec<String>,
    share: Vec<f64>,
}

impl Reference {
    pub fn of(m: &UnitAppMatrix) -> Result<Self> {
        let total = m.total();
        if !(total > 0.0) {
            return Err(Error::undefined("reference matrix has zero total traffic"));
        }
        Ok(Reference {
            cols: m.cols.clone(),
            share: m.col_sums().into_iter().map(|c| c / total).collect(),
        })
    }

    pub fn share(&self) -> &[f64] {
        &self.share
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RcaMatrix {
    units: Vec<String>,
    cols: Vec<String>,
    rca: Vec<f64>,
    /// Cells with zero traffic (RCA 0 by convention).
    zero: Vec<bool>,
    pub dropped_units: Vec<String>,
    pub dropped_cols: Vec<String>,
}

pub fn rsca(rca: f64) -> f64 {
    (rca - 1.0) / (rca + 1.0)
}

/// RCA of `m` against its own marginals.
pub fn rca(m: &UnitAppMatrix) -> Result<RcaMatrix> {
    rca_with_reference(m, &Reference::of(m)?)
}

/// RCA of `m` against the column shares of `reference`. Columns with zero
/// reference share and units with zero traffic are dropped with a warning.
pub fn rca_with_reference(m: &UnitAppMatrix, reference: &Reference) -> Result<RcaMatrix> {
    if m.cols != reference.cols {
        return Err(Error::invalid("matrix and reference have different columns"));
    }
    let keep_cols: Vec<usize> = (0..m.n_cols()).filter(|&a| reference.share[a] > 0.0).collect();
    let dropped_cols: Vec<String> = (0..m.n_cols())
        .filter(|&a| reference.share[a] <= 0.0)
        .map(|a| m.cols[a].clone())
        .collect();
    for c in &dropped_cols {
        log::warn!("app {c} has no traffic in the reference; dropped from RCA");
    }
    let sums = m.row_sums();
    let mut units = Vec::new();
    let mut dropped_units = Vec::new();
    let mut rca = Vec::new();
    let mut zero = Vec::new();
    for (u, &s) in sums.iter().enumerate() {
        if !(s > 0.0) {
            log::warn!("unit {} has no traffic; dropped from RCA", m.units[u]);
            dropped_units.push(m.units[u].clone());
            continue;
        }
        units.push(m.units[u].clone());
        for &a in &keep_cols {
            let t = m.get(u, a);
            zero.push(t == 0.0);
            rca.push(t / s / reference.share[a]);
        }
    }
    if units.is_empty() {
        return Err(Error::undefined("every unit has zero traffic"));
    }
    Ok(RcaMatrix {
        units,
        cols: keep_cols.iter().map(|&a| m.cols[a].clone()).collect(),
        rca,
        zero,
        dropped_units,
        dropped_cols,
    })
}

impl RcaMatrix {
    pub fn units(&self) -> &[String] {
        &self.units
    }

    pub fn cols(&self) -> &[String] {
        &self.cols
    }

    pub fn get(&self, u: usize, a: usize) -> f64 {
        self.rca[u * self.cols.len() + a]
    }

    pub fn is_zero_cell(&self, u: usize, a: usize) -> bool {
        self.zero[u * self.cols.len() + a]
    }

    pub fn row(&self, u: usize) -> &[f64] {
        let n = self.cols.len();
        &self.rca[u * n..(u + 1) * n]
    }

    pub fn unit_index(&self, unit: &str) -> Option<usize> {
        self.units.iter().position(|u| u == unit)
    }

    pub fn to_rsca(&self) -> RscaMatrix {
        RscaMatrix {
            units: self.units.clone(),
            cols: self.cols.clone(),
            values: self.rca.iter().map(|&r| rsca(r)).collect(),
        }
    }
}

/// RSCA values in [-1, 1] on the axes of the RCA matrix they came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RscaMatrix {
    units: Vec<String>,
    cols: Vec<String>,
    values: Vec<f64>,
}

impl RscaMatrix {
    /// Row-major values; every entry must lie in [-1, 1].
    pub fn new(units: Vec<String>, cols: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != units.len() * cols.len() {
            return Err(Error::invalid(format!(
                "{} RSCA values for {} units x {} columns",
                values.len(),
                units.len(),
                cols.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("RSCA value {v} outside [-1, 1]")));
        }
        Ok(RscaMatrix { units, cols, values })
    }

    pub fn units(&self) -> &[String] {
        &self.units
    }

    pub fn cols(&self) -> &[String] {
        &self.cols
    }

    pub fn get(&self, u: usize, a: usize) -> f64 {
        self.values[u * self.cols.len() + a]
    }

    pub fn row(&self, u: usize) -> &[f64] {
        let n = self.cols.len();
        &self.values[u * n..(u + 1) * n]
    }

    pub fn unit_index(&self, unit: &str) -> Option<usize> {
        self.units.iter().position(|u| u == unit)
    }

    pub fn col_index(&self, col: &str) -> Option<usize> {
        self.cols.iter().position(|c| c == col)
    }

    /// Column `a` over the named units.
    pub fn column_for(&self, a: usize, units: &[&str]) -> Result<Vec<f64>> {
        units
            .iter()
            .map(|u| {
                self.unit_index(u)
                    .map(|i| self.get(i, a))
                    .ok_or_else(|| Error::invalid(format!("unknown unit {u:?}")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileEntry {
    pub name: String,
    pub mean: f64,
    /// `t_{0.975, n-1} * s / sqrt(n)`; `None` for a single unit.
    pub half_width: Option<f64>,
    pub n: usize,
}

/// Per-column mean RSCA of a unit subset with a 95% t interval.
pub fn group_profile(m: &RscaMatrix, subset: &[&str]) -> Result<Vec<ProfileEntry>> {
    if subset.is_empty() {
        return Err(Error::invalid("group profile of an empty unit subset"));
    }
    let n = subset.len();
    let t = if n >= 2 { Some(t_quantile(0.975, (n - 1) as f64)?) } else { None };
    (0..m.cols.len())
        .map(|a| {
            let col = m.column_for(a, subset)?;
            Ok(ProfileEntry {
                name: m.cols[a].clone(),
                mean: mean(&col),
                half_width: t.map(|t| t * (sample_variance(&col) / n as f64).sqrt()),
                n,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::AppCatalogEntry;

    fn ids(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn m(rows: &[Vec<f64>]) -> UnitAppMatrix {
        UnitAppMatrix::from_rows(ids("u", rows.len()), ids("a", rows[0].len()), rows).unwrap()
    }

    #[test]
    fn uniform_is_one() {
        let r = rca(&m(&[vec![2.0; 3], vec![2.0; 3]])).unwrap();
        assert!(r.rca.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn hand_fixture() {
        let r = rca(&m(&[vec![30.0, 10.0], vec![10.0, 50.0]])).unwrap();
        let expected = [1.875, 0.41667, 0.41667, 1.38889];
        for (got, want) in r.rca.iter().zip(expected) {
            assert!((got - want).abs() < 1e-3, "{got} vs {want}");
        }
    }

    #[test]
    fn rsca_transform() {
        assert_eq!(rsca(1.0), 0.0);
        assert_eq!(rsca(0.0), -1.0);
        assert_eq!(rsca(3.0), 0.5);
    }

    #[test]
    fn zero_rows_and_columns_are_dropped() {
        let r = rca(&m(&[vec![1.0, 0.0, 2.0], vec![0.0, 0.0, 0.0], vec![3.0, 0.0, 0.0]])).unwrap();
        assert_eq!(r.dropped_units, vec!["u1"]);
        assert_eq!(r.dropped_cols, vec!["a1"]);
        assert!(r.is_zero_cell(1, 1));
        assert_eq!(r.to_rsca().get(1, 1), -1.0);
    }

    fn catalog(apps: &[(&str, AppCategory)]) -> AppCatalog {
        AppCatalog::new(
            apps.iter()
                .map(|(id, c)| AppCatalogEntry {
                    app_id: id.to_string(),
                    app_name: id.to_string(),
                    category: *c,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn category_sums() {
        let cat = catalog(&[("a0", AppCategory::Music), ("a1", AppCategory::Music), ("a2", AppCategory::Video)]);
        let c = m(&[vec![10.0, 20.0, 5.0]]).category_matrix(&cat).unwrap();
        assert_eq!(c.cols(), ["Music", "Video"]);
        assert_eq!(c.row(0), [30.0, 5.0]);
        let missing = catalog(&[("a0", AppCategory::Music)]);
        assert!(m(&[vec![1.0, 1.0, 1.0]]).category_matrix(&missing).is_err());
    }

    #[test]
    fn single_app_categories_match_app_level() {
        let cat = catalog(&[("a0", AppCategory::Music), ("a1", AppCategory::Video)]);
        let t = m(&[vec![3.0, 1.0], vec![2.0, 7.0]]);
        let c = t.category_matrix(&cat).unwrap();
        assert_eq!(rca(&c).unwrap().rca, rca(&t).unwrap().rca);
    }

    #[test]
    fn profile_ci() {
        let r = RscaMatrix {
            units: ids("u", 2),
            cols: vec!["x".into()],
            values: vec![0.2, 0.4],
        };
        let p = group_profile(&r, &["u0", "u1"]).unwrap();
        assert!((p[0].mean - 0.3).abs() < 1e-15);
        assert!((p[0].half_width.unwrap() - 1.27062).abs() < 1e-4);
        let single = group_profile(&r, &["u0"]).unwrap();
        assert_eq!(single[0].half_width, None);
    }

    #[test]
    fn identical_rows_have_zero_width() {
        let r = rca(&m(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![5.0, 1.0]])).unwrap().to_rsca();
        let p = group_profile(&r, &["u0", "u1"]).unwrap();
        assert!(p.iter().all(|e| e.half_width == Some(0.0)));
    }
}
