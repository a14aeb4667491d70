//! Reader and writer for the alist sparse parity-check format.
//!
//! Layout: `cols rows`, then `max_col_weight max_row_weight`, the column
//! weights, the row weights, one line of 1-based row indices per column and
//! one line of 1-based column indices per row. Zero padding up to the maximum
//! weight is written and tolerated on input.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::BinaryMatrix;
use crate::error::{Error, Result};

/// Serializes `h` as alist text.
pub fn to_alist(h: &BinaryMatrix) -> String {
    let col_w = h.col_weights();
    let row_w = h.row_weights();
    let max_col = col_w.iter().copied().max().unwrap_or(0);
    let max_row = row_w.iter().copied().max().unwrap_or(0);
    let mut out = String::new();
    let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
    writeln!(out, "{} {}", h.cols(), h.rows()).unwrap();
    writeln!(out, "{max_col} {max_row}").unwrap();
    writeln!(out, "{}", join(&col_w)).unwrap();
    writeln!(out, "{}", join(&row_w)).unwrap();
    for c in 0..h.cols() {
        let mut entries: Vec<usize> = h.col(c).iter().map(|r| r + 1).collect();
        entries.resize(max_col.max(1), 0);
        writeln!(out, "{}", join(&entries)).unwrap();
    }
    for r in 0..h.rows() {
        let mut entries: Vec<usize> = h.row(r).iter().map(|c| c + 1).collect();
        entries.resize(max_row.max(1), 0);
        writeln!(out, "{}", join(&entries)).unwrap();
    }
    out
}

/// Parses alist text. The row section must agree with the column section.
pub fn from_alist(text: &str) -> Result<BinaryMatrix> {
    let all: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .collect();
    let mut pos = 0;
    // Header lines skip blanks; support lines are positional, so a blank
    // support line is an empty row or column.
    let mut next_numbers = |expect: &str, skip_blank: bool| -> Result<(usize, Vec<usize>)> {
        if skip_blank {
            while all.get(pos).is_some_and(|(_, l)| l.is_empty()) {
                pos += 1;
            }
        }
        let &(line, content) = all.get(pos).ok_or_else(|| Error::Alist {
            line: 0,
            msg: format!("unexpected end of input, expected {expect}"),
        })?;
        pos += 1;
        let nums = content
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>().map_err(|_| Error::Alist {
                    line,
                    msg: format!("{tok:?} is not a non-negative integer"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((line, nums))
    };

    let (line, dims) = next_numbers("dimensions", true)?;
    let [cols, rows] = dims[..] else {
        return Err(Error::Alist {
            line,
            msg: "expected \"cols rows\"".into(),
        });
    };
    let (line, maxes) = next_numbers("maximum weights", true)?;
    if maxes.len() != 2 {
        return Err(Error::Alist {
            line,
            msg: "expected \"max_col_weight max_row_weight\"".into(),
        });
    }
    let (line, col_w) = next_numbers("column weights", true)?;
    if col_w.len() != cols {
        return Err(Error::Alist {
            line,
            msg: format!("expected {cols} column weights, found {}", col_w.len()),
        });
    }
    let (line, row_w) = next_numbers("row weights", true)?;
    if row_w.len() != rows {
        return Err(Error::Alist {
            line,
            msg: format!("expected {rows} row weights, found {}", row_w.len()),
        });
    }

    let mut col_support = Vec::with_capacity(cols);
    for (c, &w) in col_w.iter().enumerate() {
        let (line, entries) = next_numbers("column support", c == 0)?;
        let support = one_based(&entries, rows, line)?;
        if support.len() != w {
            return Err(Error::Alist {
                line,
                msg: format!(
                    "column {} lists {} entries, weight says {w}",
                    c + 1,
                    support.len()
                ),
            });
        }
        col_support.push(support);
    }
    let h = BinaryMatrix::from_col_supports(rows, cols, col_support)?;

    for (r, &w) in row_w.iter().enumerate() {
        let (line, entries) = next_numbers("row support", false)?;
        let mut support = one_based(&entries, cols, line)?;
        support.sort_unstable();
        if support.len() != w || support != h.row(r) {
            return Err(Error::Alist {
                line,
                msg: format!("row {} disagrees with the column section", r + 1),
            });
        }
    }
    Ok(h)
}

fn one_based(entries: &[usize], bound: usize, line: usize) -> Result<Vec<usize>> {
    entries
        .iter()
        .filter(|&&e| e != 0)
        .map(|&e| {
            if e > bound {
                Err(Error::Alist {
                    line,
                    msg: format!("index {e} exceeds {bound}"),
                })
            } else {
                Ok(e - 1)
            }
        })
        .collect()
}

pub fn write_alist(h: &BinaryMatrix, path: &Path) -> Result<()> {
    fs::write(path, to_alist(h))?;
    Ok(())
}

pub fn read_alist(path: &Path) -> Result<BinaryMatrix> {
    from_alist(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_text() {
        let h = BinaryMatrix::from_dense(&[vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
        let text = to_alist(&h);
        assert_eq!(text, "3 2\n2 2\n1 2 1\n2 2\n1 0\n1 2\n2 0\n1 2\n2 3\n");
        assert_eq!(from_alist(&text).unwrap(), h);
    }

    #[test]
    fn accepts_unpadded_lines() {
        let text = "3 2\n2 2\n1 2 1\n2 2\n1\n1 2\n2\n1 2\n2 3\n";
        let h = from_alist(text).unwrap();
        assert_eq!(h.to_dense(), vec![vec![1, 1, 0], vec![0, 1, 1]]);
    }

    #[test]
    fn rejects_inconsistent_rows() {
        let text = "3 2\n2 2\n1 2 1\n2 2\n1 0\n1 2\n2 0\n1 3\n2 3\n";
        assert!(matches!(
            from_alist(text),
            Err(Error::Alist { line: 8, .. })
        ));
    }

    #[test]
    fn rejects_truncated_input() {
        assert!(from_alist("3 2\n2 2\n1 2 1\n").is_err());
        assert!(from_alist("3 x\n").is_err());
    }

    #[test]
    fn empty_rows_and_columns() {
        let h = BinaryMatrix::from_dense(&[vec![0, 1, 0], vec![0, 0, 0]]).unwrap();
        assert_eq!(from_alist(&to_alist(&h)).unwrap(), h);
        let zero = BinaryMatrix::zeros(2, 3);
        assert_eq!(from_alist(&to_alist(&zero)).unwrap(), zero);
        // Blank support lines from writers that skip padding.
        let text = "2 2\n1 1\n1 0\n1 0\n1\n\n1\n\n";
        assert_eq!(
            from_alist(text).unwrap().to_dense(),
            vec![vec![1, 0], vec![0, 0]]
        );
    }
}
