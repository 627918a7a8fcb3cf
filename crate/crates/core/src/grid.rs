//! Observed data on a lattice window, with CSV input/output.
//!
//! The file format is one CSV row per lattice row; cells are numeric or the
//! literal token `NA` for masked sites. A header line is optional and must
//! be flagged by the caller.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::lattice::{Point, SamplingWindow};

/// Real values on a window; masked cells hold `NaN` and are excluded from
/// every computation through the window mask.
#[derive(Clone, Debug)]
pub struct GridData {
    window: SamplingWindow,
    values: Vec<f64>,
}

impl PartialEq for GridData {
    /// Equality over the window and the observed values; masked cells do
    /// not participate.
    fn eq(&self, other: &Self) -> bool {
        self.window == other.window
            && self
                .window
                .iter_observed()
                .all(|p| self.value_at(&p) == other.value_at(&p))
    }
}

impl GridData {
    /// Wraps values in box (row-major) order; length must equal the box
    /// site count.
    pub fn new(window: SamplingWindow, values: Vec<f64>) -> Result<Self> {
        if values.len() != window.n_box_sites() {
            return Err(Error::Data(format!(
                "value count {} does not match window site count {}",
                values.len(),
                window.n_box_sites()
            )));
        }
        for p in window.iter_observed() {
            let idx = window.box_index(&p).expect("observed in box");
            if !values[idx].is_finite() {
                return Err(Error::NonFinite(format!(
                    "value at observed site {:?}",
                    p.0
                )));
            }
        }
        Ok(GridData { window, values })
    }

    pub fn window(&self) -> &SamplingWindow {
        &self.window
    }

    /// Value by box index; `NaN` at masked cells.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, p: &Point) -> Option<f64> {
        let idx = self.window.box_index(p)?;
        if self.window.is_observed(p) {
            Some(self.values[idx])
        } else {
            None
        }
    }

    /// Values at observed sites in lexicographic order.
    pub fn observed_values(&self) -> Vec<f64> {
        self.window
            .iter_observed()
            .map(|p| self.values[self.window.box_index(&p).expect("in box")])
            .collect()
    }
}

/// Reads a 2-D grid from CSV. `NA` cells become masked sites.
pub fn read_grid_csv<R: Read>(reader: R, has_header: bool) -> Result<GridData> {
    let buf = BufReader::new(reader);
    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    let mut lines = buf.lines();
    if has_header {
        lines.next().transpose()?;
    }
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for cell in line.split(',') {
            let cell = cell.trim();
            if cell == "NA" {
                row.push(None);
            } else {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| Error::Data(format!("cannot parse cell {cell:?}")))?;
                row.push(Some(v));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Data("grid file has no data rows".into()));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Data("grid rows have unequal lengths".into()));
    }
    let nrows = rows.len();
    let mut mask = Vec::with_capacity(nrows * cols);
    let mut values = Vec::with_capacity(nrows * cols);
    for row in &rows {
        for cell in row {
            mask.push(cell.is_some());
            values.push(cell.unwrap_or(f64::NAN));
        }
    }
    let all_observed = mask.iter().all(|&b| b);
    let window = SamplingWindow::with_mask(
        Point(vec![0, 0]),
        Point(vec![nrows as i64 - 1, cols as i64 - 1]),
        if all_observed { None } else { Some(mask) },
    )?;
    GridData::new(window, values)
}

pub fn read_grid_file<P: AsRef<Path>>(path: P, has_header: bool) -> Result<GridData> {
    let file = std::fs::File::open(path)?;
    read_grid_csv(file, has_header)
}

/// Writes a 2-D grid as CSV with `NA` at masked sites.
pub fn write_grid_csv<W: Write>(data: &GridData, mut writer: W) -> Result<()> {
    let window = data.window();
    if window.dim() != 2 {
        return Err(Error::Data(format!(
            "CSV grid output requires d=2, got d={}",
            window.dim()
        )));
    }
    let extents = window.extents();
    let (rows, cols) = (extents[0], extents[1]);
    for r in 0..rows {
        let mut cells = Vec::with_capacity(cols);
        for c in 0..cols {
            let idx = r * cols + c;
            let observed = window.mask().map_or(true, |m| m[idx]);
            if observed {
                cells.push(format!("{}", data.values()[idx]));
            } else {
                cells.push("NA".to_string());
            }
        }
        writeln!(writer, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn write_grid_file<P: AsRef<Path>>(data: &GridData, path: P) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_grid_csv(data, file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_with_na() {
        let text = "1.5,NA,3\n-0.25,2,NA\n";
        let grid = read_grid_csv(text.as_bytes(), false).unwrap();
        assert_eq!(grid.window().extents(), vec![2, 3]);
        assert_eq!(grid.window().n_observed(), 4);
        assert_eq!(grid.value_at(&Point(vec![0, 0])), Some(1.5));
        assert_eq!(grid.value_at(&Point(vec![0, 1])), None);

        let mut out = Vec::new();
        write_grid_csv(&grid, &mut out).unwrap();
        let again = read_grid_csv(out.as_slice(), false).unwrap();
        assert_eq!(grid, again);
    }

    #[test]
    fn header_is_skipped_when_flagged() {
        let text = "c1,c2\n1,2\n3,4\n";
        let grid = read_grid_csv(text.as_bytes(), true).unwrap();
        assert_eq!(grid.window().extents(), vec![2, 2]);
        assert_eq!(grid.value_at(&Point(vec![1, 1])), Some(4.0));
    }

    #[test]
    fn ragged_rows_rejected() {
        let text = "1,2\n3\n";
        assert!(matches!(
            read_grid_csv(text.as_bytes(), false),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn garbage_cell_rejected() {
        let text = "1,2\n3,x\n";
        assert!(matches!(
            read_grid_csv(text.as_bytes(), false),
            Err(Error::Data(_))
        ));
    }
}
