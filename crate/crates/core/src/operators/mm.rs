//! Matrix Market export of assembled operators.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::write_atomic;

use super::discrete::DiscreteOperator;

/// Largest operator dimension that is exported column by column.
pub const MAX_EXPORT_DIM: usize = 20_000;

/// Writes the symmetric-coordinate matrix of `op` in coordinate format (1-based indices).
pub fn write_matrix_market(op: &DiscreteOperator, path: &Path) -> Result<()> {
    let n = op.dim();
    if n > MAX_EXPORT_DIM {
        return Err(Error::Argument(format!("operator dimension {n} exceeds export limit {MAX_EXPORT_DIM}")));
    }
    let mut entries = Vec::new();
    let mut e = vec![0.0; n];
    for c in 0..n {
        e[c] = 1.0;
        for (r, v) in op.apply_sym(&e).into_iter().enumerate() {
            if v != 0.0 {
                entries.push((r, c, v));
            }
        }
        e[c] = 0.0;
    }
    let mut buf = Vec::with_capacity(entries.len() * 40);
    writeln!(buf, "%%MatrixMarket matrix coordinate real general").unwrap();
    writeln!(buf, "% {} in symmetric coordinates, measure {:?}", op.meta.symbol, op.measure).unwrap();
    writeln!(buf, "{n} {n} {}", entries.len()).unwrap();
    for (r, c, v) in entries {
        writeln!(buf, "{} {} {:.16e}", r + 1, c + 1, v).unwrap();
    }
    write_atomic(path, &buf)
}
