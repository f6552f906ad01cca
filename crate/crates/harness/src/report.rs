//! Reading and writing reports. Floats are written in Rust's shortest
//! round-trip form with `.` as decimal separator, so re-reading is exact.

use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use hbspline::{Error, Result};

use crate::study::StudyRow;

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Fixture { location: path.display().to_string(), message: e.to_string() }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io_error(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| io_error(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_error(path, e))
}

/// CSV columns: `step,level,h,error,order`; an undefined order is empty.
pub fn write_rows<W: Write>(out: W, rows: &[StudyRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> csv::Result<Vec<StudyRow>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

pub fn write_csv(path: &Path, rows: &[StudyRow]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| io_error(path, e))?;
    write_rows(file, rows).map_err(|e| io_error(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<StudyRow>> {
    let file = std::fs::File::open(path).map_err(|e| io_error(path, e))?;
    read_rows(file).map_err(|e| io_error(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_round_trip_bit_for_bit() {
        let rows = vec![
            StudyRow { step: 0, level: 0, h: 0.125, error: 1.0 / 3.0, order: None },
            StudyRow { step: 1, level: 2, h: 0.0625, error: 2.718281828459045e-17, order: Some(2.9999999999999996) },
        ];
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("step,level,h,error,order\n"));
        assert!(text.contains("0,0,0.125,"), "{text}");
        let back = read_rows(buf.as_slice()).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in back.iter().zip(&rows) {
            assert_eq!(a.error.to_bits(), b.error.to_bits());
            assert_eq!(a.h.to_bits(), b.h.to_bits());
            assert_eq!(a.order.map(f64::to_bits), b.order.map(f64::to_bits));
        }
    }
}
