//! The .pchk matrix text format.
//!
//! Line 1: `q n r`. Line 2: the field modulus coefficients c_0..c_e, or `-`
//! for prime fields. Then r lines of n space-separated element indices.
//! `#` comment lines may precede the header. The writer always emits the
//! canonical modulus, so equal matrices serialize byte-identically.

use crate::field::FieldSpec;
use crate::verify::{ParityCheckMatrix, VerifyError};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}, field {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        column,
        message: message.into(),
    }
}

pub fn matrix_to_string(m: &ParityCheckMatrix, comments: &[&str]) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    out.push_str(&format!("{} {} {}\n", m.q(), m.cols(), m.rows()));
    if m.field().e() == 1 {
        out.push_str("-\n");
    } else {
        let coeffs: Vec<String> = m.field().modulus().iter().map(u32::to_string).collect();
        out.push_str(&coeffs.join(" "));
        out.push('\n');
    }
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| m.entry(i, j).to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn matrix_from_str(text: &str) -> Result<ParityCheckMatrix, FormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .peekable();
    // comments are only allowed before the header
    while let Some(&(_, l)) = lines.peek() {
        if l.trim_start().starts_with('#') {
            lines.next();
        } else {
            break;
        }
    }
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, 1, "missing header line `q n r`"))?;
    let mut nums = [0u64; 3];
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 3 {
        return Err(parse_err(
            hline,
            toks.len(),
            format!("header must be `q n r`, got {} fields", toks.len()),
        ));
    }
    for (k, t) in toks.iter().enumerate() {
        nums[k] = t
            .parse::<u64>()
            .map_err(|_| parse_err(hline, k + 1, format!("`{t}` is not a number")))?;
    }
    let (q, n, r) = (nums[0], nums[1] as usize, nums[2] as usize);
    if n == 0 || r == 0 {
        return Err(parse_err(hline, 2, "n and r must be positive"));
    }
    let field = FieldSpec::new(q.try_into().map_err(|_| {
        parse_err(hline, 1, format!("q = {q} is out of range"))
    })?)
    .map_err(|e| parse_err(hline, 1, e.to_string()))?;

    let (mline, modline) = lines
        .next()
        .ok_or_else(|| parse_err(hline + 1, 1, "missing modulus line"))?;
    let modline = modline.trim();
    if field.e() == 1 {
        if modline != "-" {
            return Err(parse_err(
                mline,
                1,
                format!("prime field GF({q}) takes `-` as its modulus line"),
            ));
        }
    } else {
        let coeffs: Result<Vec<u32>, _> = modline
            .split_whitespace()
            .map(|t| t.parse::<u32>())
            .collect();
        let coeffs =
            coeffs.map_err(|_| parse_err(mline, 1, "modulus coefficients must be integers"))?;
        if coeffs != field.modulus() {
            return Err(parse_err(
                mline,
                1,
                format!(
                    "modulus {:?} differs from the canonical modulus {:?} of GF({q})",
                    coeffs,
                    field.modulus()
                ),
            ));
        }
    }

    // entries arrive row-major; the matrix stores columns
    let mut entries = vec![0u16; r * n];
    for i in 0..r {
        let (lno, l) = lines
            .next()
            .ok_or_else(|| parse_err(mline + i + 1, 1, format!("missing matrix row {}", i + 1)))?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != n {
            return Err(parse_err(
                lno,
                toks.len(),
                format!("expected {n} entries, got {}", toks.len()),
            ));
        }
        for (j, t) in toks.iter().enumerate() {
            let v = t
                .parse::<u32>()
                .map_err(|_| parse_err(lno, j + 1, format!("`{t}` is not a number")))?;
            if v >= q as u32 {
                return Err(parse_err(
                    lno,
                    j + 1,
                    format!("entry {v} is not an element of GF({q})"),
                ));
            }
            entries[j * r + i] = v as u16;
        }
    }
    if let Some((lno, l)) = lines.next() {
        if !l.trim().is_empty() {
            return Err(parse_err(lno, 1, "trailing content after the matrix"));
        }
    }
    Ok(ParityCheckMatrix::new(field, r, n, entries)?)
}

pub fn write_matrix(
    path: &Path,
    m: &ParityCheckMatrix,
    comments: &[&str],
) -> Result<(), FormatError> {
    std::fs::write(path, matrix_to_string(m, comments))?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<ParityCheckMatrix, FormatError> {
    matrix_from_str(&std::fs::read_to_string(path)?)
}
