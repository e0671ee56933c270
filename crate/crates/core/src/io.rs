//! CSV files: header row, comma separated, missing cells as empty fields
//! (`NA` is also accepted on input). Numbers are written with 17
//! significant digits so they read back bit-for-bit.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::data::{ColumnRole, IncompleteDataset};
use crate::error::{Error, Result};

/// Formats a float so that parsing it returns the same bits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn is_missing_token(s: &str) -> bool {
    let t = s.trim();
    t.is_empty() || t == "NA"
}

/// A CSV file kept as text, so observed cells can be echoed unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let rows = rdr
            .records()
            .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
        Ok(Self { headers, rows })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::Csv(format!("{}: {e}", path.display())))?;
        Self::read(std::io::BufReader::new(file))
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidDataset(format!("column `{name}` is not in the file")))
    }

    /// Parses the named columns; missing tokens become `None`.
    pub fn numeric(&self, cols: &[usize]) -> Result<(DMatrix<f64>, DMatrix<bool>)> {
        let n = self.rows.len();
        let mut values = DMatrix::from_element(n, cols.len(), f64::NAN);
        let mut mask = DMatrix::from_element(n, cols.len(), false);
        for (i, row) in self.rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                let cell = &row[c];
                if is_missing_token(cell) {
                    mask[(i, j)] = true;
                    continue;
                }
                let v: f64 = cell.trim().parse().map_err(|_| {
                    Error::InvalidDataset(format!(
                        "column `{}`, row {}: `{cell}` is not a number",
                        self.headers[c],
                        i + 1
                    ))
                })?;
                if !v.is_finite() {
                    return Err(Error::InvalidDataset(format!(
                        "column `{}`, row {}: `{cell}` is not finite",
                        self.headers[c],
                        i + 1
                    )));
                }
                values[(i, j)] = v;
            }
        }
        Ok((values, mask))
    }
}

/// Which columns play which part in the analysis.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ColumnSpec {
    pub outcome: String,
    /// Empty means every column that is neither the outcome nor auxiliary.
    pub predictors: Vec<String>,
    pub auxiliary: Vec<String>,
}

impl ColumnSpec {
    /// Column indices into `table` in file order, with their roles.
    pub fn resolve(&self, table: &RawTable) -> Result<(Vec<usize>, Vec<ColumnRole>)> {
        let outcome = table.column(&self.outcome)?;
        let aux: Vec<usize> = self.auxiliary.iter().map(|a| table.column(a)).collect::<Result<_>>()?;
        let preds: Vec<usize> = if self.predictors.is_empty() {
            (0..table.headers.len()).filter(|j| *j != outcome && !aux.contains(j)).collect()
        } else {
            self.predictors.iter().map(|p| table.column(p)).collect::<Result<_>>()?
        };
        let mut selected: Vec<(usize, ColumnRole)> = std::iter::once((outcome, ColumnRole::Outcome))
            .chain(preds.iter().map(|&j| (j, ColumnRole::Predictor)))
            .chain(aux.iter().map(|&j| (j, ColumnRole::Auxiliary)))
            .collect();
        selected.sort_by_key(|(j, _)| *j);
        if selected.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidConfig("a column is declared in more than one role".into()));
        }
        Ok(selected.into_iter().unzip())
    }

    /// Parses the declared columns of `table` into a dataset.
    pub fn dataset(&self, table: &RawTable) -> Result<(IncompleteDataset, Vec<usize>)> {
        let (cols, roles) = self.resolve(table)?;
        let (values, mask) = table.numeric(&cols)?;
        let names = cols.iter().map(|&c| table.headers[c].clone()).collect();
        Ok((IncompleteDataset::new(values, mask, names, roles)?, cols))
    }
}

/// Writes `values` under `headers`. Cells flagged in `mask` are left empty
/// when `mask` is given; cells with `raw` text are echoed verbatim.
pub fn write_matrix<W: Write>(
    writer: W,
    headers: &[String],
    values: &DMatrix<f64>,
    mask: Option<&DMatrix<bool>>,
    raw: Option<&dyn Fn(usize, usize) -> Option<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(headers)?;
    let mut rec = Vec::with_capacity(values.ncols());
    for i in 0..values.nrows() {
        rec.clear();
        for j in 0..values.ncols() {
            if mask.is_some_and(|m| m[(i, j)]) {
                rec.push(String::new());
            } else if let Some(text) = raw.and_then(|f| f(i, j)) {
                rec.push(text);
            } else {
                rec.push(fmt_num(values[(i, j)]));
            }
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}

/// Writes an incomplete dataset with missing cells as empty fields.
pub fn write_dataset<W: Write>(writer: W, data: &IncompleteDataset) -> Result<()> {
    write_matrix(writer, data.column_names(), data.values(), Some(data.mask()), None)
}

/// Writes a 0/1 matrix, `1` marking a cell that was missing.
pub fn write_mask<W: Write>(writer: W, headers: &[String], mask: &DMatrix<bool>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(headers)?;
    for i in 0..mask.nrows() {
        w.write_record((0..mask.ncols()).map(|j| if mask[(i, j)] { "1" } else { "0" }))?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}

/// Reads a mask written by [`write_mask`].
pub fn read_mask(table: &RawTable) -> Result<DMatrix<bool>> {
    let n = table.rows.len();
    let k = table.headers.len();
    let mut mask = DMatrix::from_element(n, k, false);
    for (i, row) in table.rows.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            mask[(i, j)] = match cell.trim() {
                "1" => true,
                "0" => false,
                other => {
                    return Err(Error::InvalidDataset(format!(
                        "mask column `{}`, row {}: expected 0 or 1, got `{other}`",
                        table.headers[j],
                        i + 1
                    )))
                }
            };
        }
    }
    Ok(mask)
}
