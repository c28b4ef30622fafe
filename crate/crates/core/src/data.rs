//! Input tables: productivity, survival, wife time use and an empirical
//! child-penalty series. Each is a CSV keyed by its first column.

use std::path::{Path, PathBuf};

use crate::config::ModelParams;
use crate::error::{ModelError, Result};
use crate::model::AgeProfileInputs;
use crate::params::{Education, HouseholdType};

/// Which input a table holds; fixes the file name and column layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Productivity,
    Survival,
    TimeUse,
    Penalty,
}

impl TableKind {
    pub const ALL: [TableKind; 4] = [
        TableKind::Productivity,
        TableKind::Survival,
        TableKind::TimeUse,
        TableKind::Penalty,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            TableKind::Productivity => "productivity.csv",
            TableKind::Survival => "survival.csv",
            TableKind::TimeUse => "timeuse.csv",
            TableKind::Penalty => "penalty.csv",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            TableKind::Penalty => "event_time",
            _ => "age",
        }
    }

    pub fn columns(self) -> &'static [&'static str] {
        match self {
            TableKind::Productivity => &["male_college", "female_college", "male_highschool", "female_highschool"],
            TableKind::Survival => &["male", "female"],
            TableKind::TimeUse => &["work", "leisure", "childcare"],
            TableKind::Penalty => &["gap"],
        }
    }

    fn check_value(self, v: f64) -> std::result::Result<(), String> {
        if !v.is_finite() {
            return Err(format!("non-finite value {v}"));
        }
        match self {
            TableKind::Productivity if v < 0.0 => Err(format!("negative productivity {v}")),
            TableKind::Survival if !(0.0..=1.0).contains(&v) => Err(format!("survival {v} outside [0, 1]")),
            TableKind::TimeUse if v < 0.0 => Err(format!("negative hours {v}")),
            _ => Ok(()),
        }
    }

    fn check_row(self, row: &[f64]) -> std::result::Result<(), String> {
        if self == TableKind::TimeUse {
            let total: f64 = row.iter().sum();
            if total > 24.0 + 1e-9 {
                return Err(format!("hours sum to {total} > 24"));
            }
        }
        Ok(())
    }
}

/// A table on consecutive integer keys. `data[c][i]` is column `c` at
/// key `first + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgeTable {
    pub kind: TableKind,
    pub first: u32,
    pub data: Vec<Vec<f64>>,
}

impl AgeTable {
    pub fn last(&self) -> u32 {
        self.first + self.data[0].len() as u32 - 1
    }

    pub fn keys(&self) -> std::ops::RangeInclusive<u32> {
        self.first..=self.last()
    }

    fn column_index(&self, name: &str) -> usize {
        self.kind
            .columns()
            .iter()
            .position(|c| *c == name)
            .unwrap_or_else(|| panic!("{} has no column {name}", self.kind.file_name()))
    }

    pub fn column(&self, name: &str) -> &[f64] {
        &self.data[self.column_index(name)]
    }

    /// Value at `key`, held flat beyond either end.
    pub fn value(&self, key: u32, name: &str) -> f64 {
        let col = &self.data[self.column_index(name)];
        let i = key.clamp(self.first, self.last()) - self.first;
        col[i as usize]
    }

    /// Build from (key, row) pairs, filling interior gaps linearly.
    pub fn from_rows(kind: TableKind, mut rows: Vec<(u32, Vec<f64>)>, source: &Path) -> Result<Self> {
        if rows.is_empty() {
            return Err(ModelError::Data {
                path: source.to_path_buf(),
                line: 1,
                reason: "no data rows".into(),
            });
        }
        rows.sort_by_key(|r| r.0);
        if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(ModelError::Data {
                path: source.to_path_buf(),
                line: 0,
                reason: format!("duplicate {} {}", kind.key(), w[0].0),
            });
        }
        let ncol = kind.columns().len();
        let first = rows[0].0;
        let mut data = vec![Vec::new(); ncol];
        for w in rows.windows(2) {
            let ((k0, r0), (k1, r1)) = (&w[0], &w[1]);
            for key in *k0..*k1 {
                if key > *k0 {
                    log::warn!("{}: {} {key} missing, interpolated", source.display(), kind.key());
                }
                let t = (key - k0) as f64 / (k1 - k0) as f64;
                for c in 0..ncol {
                    data[c].push(r0[c] + t * (r1[c] - r0[c]));
                }
            }
        }
        let last = &rows[rows.len() - 1].1;
        for c in 0..ncol {
            data[c].push(last[c]);
        }
        Ok(Self { kind, first, data })
    }

    pub fn read_csv(kind: TableKind, path: &Path) -> Result<Self> {
        let data_err = |line: usize, reason: String| ModelError::Data {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| match e.kind() {
                csv::ErrorKind::Io(_) => ModelError::Io {
                    path: path.to_path_buf(),
                    source: std::io::Error::other(e.to_string()),
                },
                _ => ModelError::Csv(e),
            })?;
        let header = rdr.headers()?.clone();
        let find = |name: &str| {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| data_err(1, format!("missing column `{name}`")))
        };
        let key_col = find(kind.key())?;
        let cols = kind.columns().iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| data_err(line, e.to_string()))?;
            let key: u32 = rec
                .get(key_col)
                .unwrap_or("")
                .parse()
                .map_err(|_| data_err(line, format!("bad {} `{}`", kind.key(), rec.get(key_col).unwrap_or(""))))?;
            let mut row = Vec::with_capacity(cols.len());
            for &c in &cols {
                let text = rec.get(c).unwrap_or("");
                let v: f64 = text.parse().map_err(|_| data_err(line, format!("bad number `{text}`")))?;
                kind.check_value(v).map_err(|r| data_err(line, r))?;
                row.push(v);
            }
            kind.check_row(&row).map_err(|r| data_err(line, r))?;
            rows.push((key, row));
        }
        Self::from_rows(kind, rows, path)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec![self.kind.key()];
        header.extend(self.kind.columns());
        w.write_record(&header)?;
        for (i, key) in self.keys().enumerate() {
            let mut rec = vec![key.to_string()];
            rec.extend(self.data.iter().map(|c| c[i].to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tables {
    pub productivity: AgeTable,
    pub survival: AgeTable,
    pub timeuse: AgeTable,
    pub penalty: AgeTable,
}

impl Tables {
    pub fn get(&self, kind: TableKind) -> &AgeTable {
        match kind {
            TableKind::Productivity => &self.productivity,
            TableKind::Survival => &self.survival,
            TableKind::TimeUse => &self.timeuse,
            TableKind::Penalty => &self.penalty,
        }
    }

    fn get_mut(&mut self, kind: TableKind) -> &mut AgeTable {
        match kind {
            TableKind::Productivity => &mut self.productivity,
            TableKind::Survival => &mut self.survival,
            TableKind::TimeUse => &mut self.timeuse,
            TableKind::Penalty => &mut self.penalty,
        }
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|source| ModelError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        for kind in TableKind::ALL {
            self.get(kind).write_csv(&dir.join(kind.file_name()))?;
        }
        Ok(())
    }

    /// Productivity and survival profiles for one household type.
    pub fn inputs_for(&self, htype: &HouseholdType, params: &ModelParams) -> AgeProfileInputs {
        let cal = &params.calibrated;
        let (m, f) = match htype.education {
            Education::College => ("male_college", "female_college"),
            Education::HighSchool => ("male_highschool", "female_highschool"),
        };
        let last_work = cal.j_retire.min(cal.j_max + 1).max(cal.j_entry);
        let prod = &self.productivity;
        if cal.j_entry < prod.first || last_work > prod.last() {
            log::warn!(
                "productivity covers {}..={}, held flat over {}..={}",
                prod.first,
                prod.last(),
                cal.j_entry,
                last_work
            );
        }
        let kappa = [m, f].map(|c| (cal.j_entry..=last_work).map(|j| prod.value(j, c)).collect());
        let surv = &self.survival;
        let survival = (cal.j_entry..=cal.j_max)
            .map(|j| {
                params
                    .options
                    .survival
                    .combine(surv.value(j, "male"), surv.value(j, "female"))
            })
            .collect();
        AgeProfileInputs {
            j_entry: cal.j_entry,
            kappa,
            survival,
        }
    }

    /// Check that the time-use table covers the wife ages used as moments.
    pub fn check_timeuse(&self, from: u32, to: u32) -> Result<()> {
        if self.timeuse.first > from || self.timeuse.last() < to {
            return Err(ModelError::AgeCoverage { from, to });
        }
        Ok(())
    }
}

/// Read the four tables from `dir`; a missing file falls back to its
/// synthetic default.
pub fn load_tables(dir: Option<&Path>) -> Result<Tables> {
    let mut tables = synth_defaults();
    let Some(dir) = dir else {
        return Ok(tables);
    };
    for kind in TableKind::ALL {
        let path: PathBuf = dir.join(kind.file_name());
        if path.exists() {
            *tables.get_mut(kind) = AgeTable::read_csv(kind, &path)?;
            log::info!("loaded {}", path.display());
        } else {
            log::info!("{} not found, using synthetic default", path.display());
        }
    }
    Ok(tables)
}

fn hump(j: f64, base: f64, rise: f64, peak: f64, half_width: f64) -> f64 {
    let x = (j - peak) / half_width;
    base + rise * (1.0 - x * x)
}

/// Gompertz one-year survival; `shift` delays ageing by that many years.
fn gompertz_survival(j: f64, shift: f64) -> f64 {
    (-3.0 * (0.16 * (j - shift - 100.0)).exp()).exp()
}

/// Stylized inputs that let every command run without external data.
pub fn synth_defaults() -> Tables {
    let src = Path::new("<synthetic>");
    let ages = 20..=65u32;
    let productivity = ages
        .map(|j| {
            let x = j as f64;
            let male = hump(x, 0.8, 0.7, 50.0, 30.0);
            let female = hump(x, 0.7, 0.3, 45.0, 30.0);
            (j, vec![1.3 * male, 1.3 * female, male, female])
        })
        .collect();
    let survival = (20..=100u32)
        .map(|j| {
            let x = j as f64;
            (j, vec![gompertz_survival(x, 0.0), gompertz_survival(x, 5.0)])
        })
        .collect();
    let timeuse = (20..=64u32)
        .map(|j| {
            let (work, childcare) = if j < 30 {
                (9.0, 0.0)
            } else {
                let jc = (j - 30) as f64;
                let care = if jc <= 18.0 { 6.5 * (1.0 - jc / 18.0) } else { 0.0 };
                let work = if jc < 2.0 {
                    5.0
                } else if j < 55 {
                    (5.0 + 0.3 * (jc - 1.0)).min(8.0)
                } else {
                    8.0 - 0.15 * (j - 54) as f64
                };
                (work, care)
            };
            (j, vec![work, 24.0 - work - childcare, childcare])
        })
        .collect();
    let penalty = (0..=10u32)
        .map(|t| {
            let gap = if t <= 1 {
                -0.85
            } else if t <= 7 {
                -0.85 + 0.45 * (t - 1) as f64 / 6.0
            } else {
                -0.40
            };
            (t, vec![gap])
        })
        .collect();
    let build = |kind, rows| AgeTable::from_rows(kind, rows, src).expect("synthetic table is well formed");
    Tables {
        productivity: build(TableKind::Productivity, productivity),
        survival: build(TableKind::Survival, survival),
        timeuse: build(TableKind::TimeUse, timeuse),
        penalty: build(TableKind::Penalty, penalty),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    #[test]
    fn synthetic_shapes() {
        let t = synth_defaults();
        for j in t.productivity.keys() {
            assert!(t.productivity.value(j, "male_college") >= t.productivity.value(j, "male_highschool"));
            assert!(t.productivity.value(j, "female_college") >= t.productivity.value(j, "female_highschool"));
        }
        for j in t.survival.keys() {
            assert!(t.survival.value(j, "female") >= t.survival.value(j, "male"));
        }
        assert!(t.survival.value(60, "male") > 0.99);
        assert!(t.survival.value(100, "male") < 0.1);
        assert_eq!(t.productivity.keys(), 20..=65);
    }

    #[test]
    fn synthetic_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = synth_defaults();
        t.write_dir(dir.path()).unwrap();
        let back = load_tables(Some(dir.path())).unwrap();
        assert_eq!(back, t);
    }

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn missing_age_is_interpolated() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "survival.csv", "age,male,female\n39,0.99,0.995\n41,0.97,0.985\n");
        let t = AgeTable::read_csv(TableKind::Survival, &p).unwrap();
        assert_eq!(t.keys(), 39..=41);
        assert!((t.value(40, "male") - 0.98).abs() < 1e-12);
        // flat beyond the ends
        assert_eq!(t.value(30, "female"), 0.995);
        assert_eq!(t.value(90, "female"), 0.985);
    }

    #[test]
    fn bad_survival_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "survival.csv", "age,male,female\n40,0.9,0.9\n41,1.2,0.9\n");
        match AgeTable::read_csv(TableKind::Survival, &p) {
            Err(ModelError::Data { line, reason, .. }) => {
                assert_eq!(line, 3);
                assert!(reason.contains("1.2"));
            }
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_rows_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "productivity.csv", "age,male_college\n20,1.0\n");
        assert!(AgeTable::read_csv(TableKind::Productivity, &p).is_err());
        let p = write(
            dir.path(),
            "productivity.csv",
            "age,male_college,female_college,male_highschool,female_highschool\n20,1,1,-0.5,1\n",
        );
        assert!(AgeTable::read_csv(TableKind::Productivity, &p).is_err());
        let p = write(dir.path(), "timeuse.csv", "age,work,leisure,childcare\n20,10,10,5\n");
        assert!(AgeTable::read_csv(TableKind::TimeUse, &p).is_err());
    }

    #[test]
    fn full_productivity_file_covers_working_ages() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from("age,male_college,female_college,male_highschool,female_highschool\n");
        for j in 20..=65 {
            body.push_str(&format!("{j},1.3,1.1,1.0,0.8\n"));
        }
        let p = write(dir.path(), "productivity.csv", &body);
        let t = AgeTable::read_csv(TableKind::Productivity, &p).unwrap();
        assert_eq!(t.keys(), 20..=65);
    }
}
