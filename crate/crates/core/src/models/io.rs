//! CSV and image file formats.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Image, RadonDataset, RegressionDataset};
use crate::error::{Error, Result};

fn io(path: &Path, e: std::io::Error) -> Error {
    Error::io(path, e)
}

fn open_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: line as usize,
        message: message.into(),
    }
}

fn read_rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = open_reader(path)?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(parse_err(path, 1, "missing header row"));
    }
    if header.iter().any(|h| h.parse::<f64>().is_ok()) {
        return Err(parse_err(path, 1, "header row required, found numbers"));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(parse_err(
                path,
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(path, line, format!("not a finite number: {f:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Regression data: `d` design columns followed by one response column.
/// The domain half-width is the largest absolute coordinate, at least 1.
pub fn read_regression_csv(path: &Path) -> Result<RegressionDataset> {
    let (header, rows) = read_rows(path)?;
    if header.len() < 2 {
        return Err(parse_err(path, 1, "need at least one design column and a response"));
    }
    if rows.is_empty() {
        return Err(parse_err(path, 2, "no data rows"));
    }
    let d = header.len() - 1;
    let mut points = Vec::with_capacity(rows.len() * d);
    let mut y = Vec::with_capacity(rows.len());
    for row in rows {
        points.extend_from_slice(&row[..d]);
        y.push(row[d]);
    }
    let s = points.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    RegressionDataset::new(points, d, y, s)
}

pub fn write_regression_csv(path: &Path, data: &RegressionDataset) -> Result<()> {
    let mut w = create(path)?;
    let cols: Vec<String> = (0..data.dim()).map(|k| format!("x{k}")).collect();
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "{},y", cols.join(","))?;
        for i in 0..data.n() {
            for v in data.point(i) {
                write!(w, "{v},")?;
            }
            writeln!(w, "{}", data.y()[i])?;
        }
        w.flush()
    })();
    res.map_err(|e| io(path, e))
}

/// Radon data as `(r, theta, y)` triplets covering a full grid.
pub fn read_radon_csv(path: &Path, sigma2: f64) -> Result<RadonDataset> {
    let (header, rows) = read_rows(path)?;
    if header.len() != 3 {
        return Err(parse_err(path, 1, "expected columns r,theta,y"));
    }
    let mut r: Vec<f64> = Vec::new();
    let mut theta: Vec<f64> = Vec::new();
    for row in &rows {
        if !r.contains(&row[0]) {
            r.push(row[0]);
        }
        if !theta.contains(&row[1]) {
            theta.push(row[1]);
        }
    }
    r.sort_by(f64::total_cmp);
    theta.sort_by(f64::total_cmp);
    let m = theta.len();
    if rows.len() != r.len() * m {
        return Err(parse_err(
            path,
            1,
            format!(
                "{} rows do not form a full {}x{} grid",
                rows.len(),
                r.len(),
                m
            ),
        ));
    }
    let mut y = vec![f64::NAN; rows.len()];
    for (k, row) in rows.iter().enumerate() {
        let i = r.binary_search_by(|v| v.total_cmp(&row[0])).unwrap_or(0);
        let j = theta.binary_search_by(|v| v.total_cmp(&row[1])).unwrap_or(0);
        if !y[i * m + j].is_nan() {
            return Err(parse_err(path, k as u64 + 2, "duplicate grid cell"));
        }
        y[i * m + j] = row[2];
    }
    RadonDataset::new(r, theta, y, sigma2)
}

pub fn write_radon_csv(path: &Path, data: &RadonDataset) -> Result<()> {
    let mut w = create(path)?;
    let m = data.theta().len();
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "r,theta,y")?;
        for (i, r) in data.r().iter().enumerate() {
            for (j, t) in data.theta().iter().enumerate() {
                writeln!(w, "{r},{t},{}", data.y()[i * m + j])?;
            }
        }
        w.flush()
    })();
    res.map_err(|e| io(path, e))
}

/// Binary 16-bit PGM; values in `[lo, hi]` map linearly onto `0..=65535`.
pub fn write_pgm16(path: &Path, image: &Image, lo: f64, hi: f64) -> Result<()> {
    if !(hi > lo) {
        return Err(Error::param("PGM range needs hi > lo"));
    }
    let mut w = create(path)?;
    let n = image.resolution();
    let res = (|| -> std::io::Result<()> {
        write!(w, "P5\n{n} {n}\n65535\n")?;
        for &v in image.values() {
            let q = ((v - lo) / (hi - lo)).clamp(0.0, 1.0) * 65535.0;
            w.write_all(&(q.round() as u16).to_be_bytes())?;
        }
        w.flush()
    })();
    res.map_err(|e| io(path, e))
}

/// One image row per line, comma separated.
pub fn write_image_csv(path: &Path, image: &Image) -> Result<()> {
    let mut w = create(path)?;
    let n = image.resolution();
    let res = (|| -> std::io::Result<()> {
        for row in image.values().chunks(n) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        w.flush()
    })();
    res.map_err(|e| io(path, e))
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{radon_grid, shepp_logan};

    #[test]
    fn regression_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let data = RegressionDataset::univariate(vec![0.0, 0.25, 1.0], vec![1.5, -2.0, 0.125]).unwrap();
        write_regression_csv(&p, &data).unwrap();
        assert_eq!(read_regression_csv(&p).unwrap(), data);
    }

    #[test]
    fn regression_parse_errors_carry_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "x,y\n0.1,0.2\n0.3,abc\n").unwrap();
        match read_regression_csv(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        std::fs::write(&p, "0.1,0.2\n0.3,0.4\n").unwrap();
        assert!(matches!(read_regression_csv(&p), Err(Error::Parse { line: 1, .. })));
        let missing = dir.path().join("nope.csv");
        assert!(matches!(read_regression_csv(&missing), Err(Error::Io { .. })));
    }

    #[test]
    fn radon_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let (r, t) = radon_grid(4, 3).unwrap();
        let data = RadonDataset::from_fn(r, t, 0.1, |r, t| r * 10.0 + t).unwrap();
        write_radon_csv(&p, &data).unwrap();
        assert_eq!(read_radon_csv(&p, 0.1).unwrap(), data);
    }

    #[test]
    fn pgm_header_and_size() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("img.pgm");
        let img = shepp_logan(16).unwrap();
        write_pgm16(&p, &img, 0.0, 2.0).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        let header = b"P5\n16 16\n65535\n";
        assert!(bytes.starts_with(header));
        assert_eq!(bytes.len(), header.len() + 2 * 256);
    }
}
