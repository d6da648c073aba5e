//! CSV export of metric series.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use tempfile::NamedTempFile;

use crate::error::Result;
use crate::metrics::MetricSnapshot;

pub const CSV_HEADER: &str = "timestamp,numeraire,hold_value,pool_value,pool_value_with_fees,il,rv,farv";

/// Rows in event order. Numbers use round-trip scientific notation.
pub fn format_series(series: &[MetricSnapshot]) -> String {
    let mut out = String::with_capacity(64 * (series.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in series {
        let _ = writeln!(
            out,
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            s.timestamp, s.numeraire, s.hold_value, s.pool_value, s.pool_value_with_fees, s.il, s.rv, s.farv
        );
    }
    out
}

/// Writes the CSV next to `path` and renames it into place.
pub fn export_series(series: &[MetricSnapshot], path: &Path) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(format_series(series).as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Numeraire;
    use crate::types::AssetIndex;

    fn row() -> MetricSnapshot {
        MetricSnapshot {
            timestamp: 60,
            numeraire: Numeraire::Asset(AssetIndex::from_slot(1)),
            hold_value: 200.0,
            pool_value: 1.0 / 3.0 * 500.0,
            pool_value_with_fees: 180.0,
            il: 200.0 - 500.0 / 3.0,
            rv: 0.8,
            farv: 0.9,
        }
    }

    #[test]
    fn empty_series_is_header_only() {
        assert_eq!(format_series(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn values_round_trip() {
        let text = format_series(&[row()]);
        let line = text.lines().nth(1).unwrap();
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0], "60");
        assert_eq!(cols[1], "asset2");
        let back: Vec<f64> = cols[2..].iter().map(|c| c.parse().unwrap()).collect();
        let r = row();
        let want = [r.hold_value, r.pool_value, r.pool_value_with_fees, r.il, r.rv, r.farv];
        assert_eq!(back, want);
    }

    #[test]
    fn export_writes_atomically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("series.csv");
        export_series(&[row()], &path).unwrap();
        export_series(&[row(), row()], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
