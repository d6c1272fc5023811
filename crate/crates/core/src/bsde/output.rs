use std::io::Write;
use std::path::Path;

use super::{BsdeError, BsdeSolution};

/// One row per time node: `t, mean_Y, se_Y, mean_Z, se_Z`.
pub fn write_solution_csv<P: AsRef<Path>>(sol: &BsdeSolution, file: P) -> Result<(), BsdeError> {
    let rows = sol.summary();
    for r in &rows {
        if ![r.t, r.mean_y, r.se_y, r.mean_z, r.se_z].iter().all(|v| v.is_finite()) {
            return Err(BsdeError::NonFinite { t: r.t });
        }
    }
    let mut w = csv::Writer::from_path(file)?;
    w.write_record(["t", "mean_Y", "se_Y", "mean_Z", "se_Z"])?;
    for r in rows {
        w.write_record([r.t, r.mean_y, r.se_y, r.mean_z, r.se_z].map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// `key=value` lines.
pub fn write_sidecar<P: AsRef<Path>>(file: P, entries: &[(String, String)]) -> Result<(), BsdeError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(file)?);
    for (k, v) in entries {
        writeln!(f, "{k}={}", v.replace('\n', " "))?;
    }
    f.flush()?;
    Ok(())
}
