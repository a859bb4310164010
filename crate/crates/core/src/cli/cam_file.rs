//! Plain-text CAM files: a `rows cols` header, then `rows` lines of `cols`
//! whitespace-separated reals.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::CliError;
use crate::camq::CamMap;

pub fn parse_cam(text: &str) -> Result<CamMap, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or("missing `rows cols` header")?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    let [rows, cols] = dims.as_slice() else {
        return Err(format!("malformed header `{header}`, expected `rows cols`"));
    };
    let parse_dim = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| format!("malformed header `{header}`, `{s}` is not a count"))
    };
    let (rows, cols) = (parse_dim(rows)?, parse_dim(cols)?);
    let mut values = Vec::with_capacity(rows.saturating_mul(cols));
    for line in lines {
        for token in line.split_whitespace() {
            let v = token
                .parse::<f64>()
                .map_err(|_| format!("`{token}` is not a number"))?;
            values.push(v);
        }
    }
    CamMap::new(rows, cols, values).map_err(|e| e.to_string())
}

pub fn load_cam(path: &Path) -> Result<CamMap, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_cam(&text).map_err(|reason| CliError::CamFile {
        path: path.to_path_buf(),
        reason,
    })
}

pub fn format_cam(map: &CamMap) -> String {
    let mut out = format!("{} {}\n", map.rows(), map.cols());
    for row in map.values().chunks(map.cols()) {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_cam(map: &CamMap, path: &Path) -> Result<(), CliError> {
    fs::write(path, format_cam(map)).map_err(|e| CliError::io(path, e))
}
