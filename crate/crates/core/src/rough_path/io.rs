//! CSV storage: one row per cell with `t_start, t_end`, the level-1 entries
//! `x1_i`, the level-2 entries `x2_i_j` in row-major order and, for degree 3,
//! `x3_i_j_k`.

use std::path::Path;

use super::{GroupIncrement, RoughPath, RoughPathError};

fn header(dim: usize, degree: usize) -> Vec<String> {
    let mut cols = vec!["t_start".to_string(), "t_end".to_string()];
    cols.extend((0..dim).map(|i| format!("x1_{i}")));
    for i in 0..dim {
        for j in 0..dim {
            cols.push(format!("x2_{i}_{j}"));
        }
    }
    if degree == 3 {
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    cols.push(format!("x3_{i}_{j}_{k}"));
                }
            }
        }
    }
    cols
}

pub fn write_csv<P: AsRef<Path>>(path: &RoughPath, file: P) -> Result<(), RoughPathError> {
    let mut w = csv::Writer::from_path(file)?;
    w.write_record(header(path.dim(), path.degree()))?;
    for (cell, inc) in path.increments().iter().enumerate() {
        let mut row = vec![path.times()[cell], path.times()[cell + 1]];
        row.extend_from_slice(inc.level1());
        row.extend_from_slice(inc.level2());
        if let Some(l3) = inc.level3() {
            row.extend_from_slice(l3);
        }
        if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
            return Err(RoughPathError::Format(format!("non-finite value {bad} in cell {cell}")));
        }
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a rough path written by [`write_csv`]; `p` is not stored in the file.
pub fn read_csv<P: AsRef<Path>>(file: P, p: f64) -> Result<RoughPath, RoughPathError> {
    let mut r = csv::Reader::from_path(file)?;
    let cols: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let dim = cols.iter().filter(|c| c.starts_with("x1_")).count();
    let degree = if cols.iter().any(|c| c.starts_with("x3_")) { 3 } else { 2 };
    if dim == 0 || cols != header(dim, degree) {
        return Err(RoughPathError::Format("unexpected header".into()));
    }
    let mut times = Vec::new();
    let mut increments = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| RoughPathError::Format(format!("row {}: {e}", line + 2)))?;
        if vals.len() != cols.len() {
            return Err(RoughPathError::Format(format!("row {} has {} fields", line + 2, vals.len())));
        }
        if times.is_empty() {
            times.push(vals[0]);
        } else if *times.last().unwrap() != vals[0] {
            return Err(RoughPathError::Format(format!("row {} does not continue the grid", line + 2)));
        }
        times.push(vals[1]);
        let l1 = vals[2..2 + dim].to_vec();
        let l2 = vals[2 + dim..2 + dim + dim * dim].to_vec();
        let l3 = (degree == 3).then(|| vals[2 + dim + dim * dim..].to_vec());
        increments.push(GroupIncrement::from_levels(l1, l2, l3)?);
    }
    if increments.is_empty() {
        return Err(RoughPathError::EmptyGrid);
    }
    RoughPath::new(times, increments, p)
}

#[cfg(test)]
mod tests {
    use super::super::{fbm_lift, dyadic_grid};
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let rp = fbm_lift(4, 0.35, 3.5, &dyadic_grid(1.0, 3), 2, 5).unwrap();
        let dir = std::env::temp_dir().join(format!("rp-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let file = dir.join("path.csv");
        write_csv(&rp, &file).unwrap();
        let back = read_csv(&file, 3.5).unwrap();
        assert_eq!(back.times(), rp.times());
        assert_eq!(back.increments(), rp.increments());
        let text = std::fs::read_to_string(&file).unwrap();
        assert!(text.starts_with("t_start,t_end,x1_0,x1_1,x2_0_0"));
        std::fs::remove_dir_all(&dir).ok();
    }
}
