//! CSV ingestion and export.
//!
//! The canonical layout is the public IHDP replicate layout:
//! `treatment, y_factual, y_cfactual, mu0, mu1, x1 .. x25`. Files with a
//! header row are read by column name (`y_cfactual`, `mu0`, `mu1` optional,
//! every other column is a covariate). Files without a header row are
//! assumed to follow the canonical column order, which is how the public
//! replicate files are distributed.

use std::fs::File;
use std::path::{Path, PathBuf};

use crate::dataset::{CausalDataset, RawColumn, RawTable, RawValues};
use crate::error::{CbdtError, Result};
use crate::matrix::Matrix;

pub const IHDP_COVARIATES: usize = 25;

const TREATMENT: &str = "treatment";
const Y_FACTUAL: &str = "y_factual";
const Y_CFACTUAL: &str = "y_cfactual";
const MU0: &str = "mu0";
const MU1: &str = "mu1";

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table(path: &Path) -> Result<Table> {
    let file = File::open(path).map_err(|e| CbdtError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        records.push(rec.iter().map(str::to_owned).collect::<Vec<_>>());
    }
    let Some(first) = records.first() else {
        return Err(CbdtError::Format {
            path: path.into(),
            message: "file is empty".into(),
        });
    };
    let headerless = first.iter().all(|f| f.parse::<f64>().is_ok());
    if headerless {
        let width = first.len();
        if width < 5 {
            return Err(CbdtError::Format {
                path: path.into(),
                message: format!("headerless file has {width} columns; the canonical layout needs at least 6"),
            });
        }
        let mut header: Vec<String> = [TREATMENT, Y_FACTUAL, Y_CFACTUAL, MU0, MU1]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((1..=width - 5).map(|j| format!("x{j}")));
        Ok(Table { header, rows: records })
    } else {
        let header = records.remove(0);
        Ok(Table { header, rows: records })
    }
}

fn parse_cell(path: &Path, row: usize, name: &str, cell: &str) -> Result<f64> {
    cell.parse::<f64>().map_err(|_| CbdtError::Format {
        path: path.into(),
        message: format!("row {row}, column {name}: cannot parse {cell:?} as a number"),
    })
}

fn table_to_dataset(path: &Path, table: Table, required_features: Option<&[String]>) -> Result<CausalDataset> {
    let find = |name: &str| table.header.iter().position(|h| h == name);
    let missing = |name: &str| CbdtError::Format {
        path: path.into(),
        message: format!("missing column {name:?}"),
    };
    let t_col = find(TREATMENT).ok_or_else(|| missing(TREATMENT))?;
    let y_col = find(Y_FACTUAL).ok_or_else(|| missing(Y_FACTUAL))?;
    let ycf_col = find(Y_CFACTUAL);
    let mu0_col = find(MU0);
    let mu1_col = find(MU1);

    let feature_cols: Vec<usize> = match required_features {
        Some(names) => names
            .iter()
            .map(|n| find(n).ok_or_else(|| missing(n)))
            .collect::<Result<_>>()?,
        None => (0..table.header.len())
            .filter(|&j| ![Some(t_col), Some(y_col), ycf_col, mu0_col, mu1_col].contains(&Some(j)))
            .collect(),
    };
    if feature_cols.is_empty() {
        return Err(CbdtError::Format {
            path: path.into(),
            message: "no covariate columns".into(),
        });
    }

    let n = table.rows.len();
    let d = feature_cols.len();
    let mut features = Vec::with_capacity(n * d);
    let mut treatment = Vec::with_capacity(n);
    let mut outcome = Vec::with_capacity(n);
    let mut ycf = Vec::new();
    let mut mu0 = Vec::new();
    let mut mu1 = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        if row.len() != table.header.len() {
            return Err(CbdtError::Format {
                path: path.into(),
                message: format!("row {i} has {} fields, header has {}", row.len(), table.header.len()),
            });
        }
        let t = parse_cell(path, i, TREATMENT, &row[t_col])?;
        if t != 0.0 && t != 1.0 {
            return Err(CbdtError::validation(format!(
                "row {i}: treatment must be 0 or 1, got {t}"
            )));
        }
        treatment.push(t as u8);
        outcome.push(parse_cell(path, i, Y_FACTUAL, &row[y_col])?);
        if let Some(c) = ycf_col {
            ycf.push(parse_cell(path, i, Y_CFACTUAL, &row[c])?);
        }
        if let Some(c) = mu0_col {
            mu0.push(parse_cell(path, i, MU0, &row[c])?);
        }
        if let Some(c) = mu1_col {
            mu1.push(parse_cell(path, i, MU1, &row[c])?);
        }
        for &j in &feature_cols {
            features.push(parse_cell(path, i, &table.header[j], &row[j])?);
        }
    }
    let names = feature_cols.iter().map(|&j| table.header[j].clone()).collect();
    let mut ds = CausalDataset::new(Matrix::new(n, d, features)?, treatment, outcome, names)?;
    if mu0_col.is_some() || mu1_col.is_some() {
        ds = ds.with_potential_outcomes(mu0, mu1)?;
    }
    if ycf_col.is_some() {
        ds = ds.with_counterfactual(ycf)?;
    }
    Ok(ds)
}

/// Read any CSV in the canonical layout.
pub fn load_csv(path: impl AsRef<Path>) -> Result<CausalDataset> {
    let path = path.as_ref();
    let table = read_table(path)?;
    table_to_dataset(path, table, None)
}

/// Read one IHDP replicate.
///
/// `path` is either the replicate file itself or a directory holding
/// `ihdp_npci_<replicate>.csv`. All of `treatment, y_factual, y_cfactual,
/// mu0, mu1, x1..x25` must be present.
pub fn load_ihdp_csv(path: impl AsRef<Path>, replicate: usize) -> Result<CausalDataset> {
    let path = path.as_ref();
    let file: PathBuf = if path.is_dir() {
        path.join(format!("ihdp_npci_{replicate}.csv"))
    } else {
        path.to_path_buf()
    };
    let table = read_table(&file)?;
    for required in [TREATMENT, Y_FACTUAL, Y_CFACTUAL, MU0, MU1] {
        if !table.header.iter().any(|h| h == required) {
            return Err(CbdtError::Format {
                path: file.clone(),
                message: format!("missing column {required:?}"),
            });
        }
    }
    let covariates: Vec<String> = (1..=IHDP_COVARIATES).map(|j| format!("x{j}")).collect();
    table_to_dataset(&file, table, Some(&covariates))
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || ["na", "nan", "null"].contains(&cell.to_ascii_lowercase().as_str())
}

/// Read a CSV with a header row into an unprocessed table for
/// [`preprocess`](crate::dataset::preprocess). Empty, `NA`, `NaN` and `null`
/// cells are missing. A column is numeric when every present cell parses as
/// a number, categorical otherwise.
pub fn read_raw_csv(path: impl AsRef<Path>, treatment: &str, outcome: &str) -> Result<RawTable> {
    let path = path.as_ref();
    let table = read_table(path)?;
    let find = |name: &str| {
        table.header.iter().position(|h| h == name).ok_or_else(|| CbdtError::Format {
            path: path.into(),
            message: format!("missing column {name:?}"),
        })
    };
    let (t_col, y_col) = (find(treatment)?, find(outcome)?);
    let width = table.header.len();
    if let Some(i) = table.rows.iter().position(|r| r.len() != width) {
        return Err(CbdtError::Format {
            path: path.into(),
            message: format!("row {i} has {} fields, header has {width}", table.rows[i].len()),
        });
    }
    let columns = table
        .header
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let cells: Vec<&str> = table.rows.iter().map(|r| r[j].as_str()).collect();
            let numeric: Option<Vec<Option<f64>>> = cells
                .iter()
                .map(|c| if is_missing(c) { Some(None) } else { c.parse::<f64>().ok().map(Some) })
                .collect();
            let values = match numeric {
                Some(v) => RawValues::Numeric(v),
                None => RawValues::Categorical(
                    cells.iter().map(|c| (!is_missing(c)).then(|| c.to_string())).collect(),
                ),
            };
            RawColumn {
                name: name.clone(),
                values,
            }
        })
        .collect();
    Ok(RawTable {
        columns,
        treatment_column: t_col,
        outcome_column: y_col,
    })
}

/// Write a dataset in the canonical layout. Optional columns are emitted
/// only when present.
pub fn write_csv(ds: &CausalDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| CbdtError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec![TREATMENT.to_string(), Y_FACTUAL.to_string()];
    if ds.y_cf().is_some() {
        header.push(Y_CFACTUAL.into());
    }
    if ds.mu0().is_some() {
        header.push(MU0.into());
        header.push(MU1.into());
    }
    header.extend(ds.feature_names().iter().cloned());
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for i in 0..ds.n() {
        record.clear();
        record.push(ds.treatment()[i].to_string());
        record.push(ds.outcome()[i].to_string());
        if let Some(c) = ds.y_cf() {
            record.push(c[i].to_string());
        }
        if let (Some(m0), Some(m1)) = (ds.mu0(), ds.mu1()) {
            record.push(m0[i].to_string());
            record.push(m1[i].to_string());
        }
        record.extend(ds.features().row(i).iter().map(f64::to_string));
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| CbdtError::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn ihdp_header() -> String {
        let mut h = vec!["treatment", "y_factual", "y_cfactual", "mu0", "mu1"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        h.extend((1..=25).map(|j| format!("x{j}")));
        h.join(",")
    }

    fn row(t: &str) -> String {
        let mut r = vec![t.to_string(), "1.5".into(), "2.5".into(), "1.0".into(), "3.0".into()];
        r.extend((1..=25).map(|j| format!("{}", j as f64 * 0.1)));
        r.join(",")
    }

    #[test]
    fn raw_table_types_columns() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "age,site,t,y\n31,a,1,2.5\nNA,b,0,1.0\n40,,1,3.0").unwrap();
        let raw = read_raw_csv(f.path(), "t", "y").unwrap();
        assert_eq!((raw.treatment_column, raw.outcome_column), (2, 3));
        assert_eq!(raw.columns[0].values, RawValues::Numeric(vec![Some(31.0), None, Some(40.0)]));
        assert_eq!(
            raw.columns[1].values,
            RawValues::Categorical(vec![Some("a".into()), Some("b".into()), None])
        );
        assert!(read_raw_csv(f.path(), "treated", "y").is_err());
    }

    #[test]
    fn non_binary_treatment_reports_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        let mut f = File::create(&p).unwrap();
        writeln!(f, "{}", ihdp_header()).unwrap();
        writeln!(f, "{}", row("1")).unwrap();
        writeln!(f, "{}", row("0")).unwrap();
        writeln!(f, "{}", row("2")).unwrap();
        let err = load_ihdp_csv(&p, 1).unwrap_err();
        assert!(matches!(err, CbdtError::Validation(_)));
        assert!(err.to_string().contains("row 2"), "{err}");
    }

    #[test]
    fn missing_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        let mut f = File::create(&p).unwrap();
        writeln!(f, "{}", ihdp_header().replace(",x7,", ",x7b,")).unwrap();
        writeln!(f, "{}", row("1")).unwrap();
        writeln!(f, "{}", row("0")).unwrap();
        let err = load_ihdp_csv(&p, 1).unwrap_err();
        assert!(matches!(err, CbdtError::Format { .. }));
        assert!(err.to_string().contains("\"x7\""), "{err}");
    }

    #[test]
    fn headerless_replicate_uses_canonical_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ihdp_npci_3.csv");
        let mut f = File::create(&p).unwrap();
        writeln!(f, "{}", row("1")).unwrap();
        writeln!(f, "{}", row("0")).unwrap();
        let ds = load_ihdp_csv(dir.path(), 3).unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.d(), 25);
        assert_eq!(ds.true_cate().unwrap(), vec![2.0, 2.0]);
        assert_eq!(ds.feature_names()[24], "x25");
    }
}
