//! CSV formats. Floats are written with Rust's shortest round-trip
//! formatting, so every file reads back bit-identically.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::kernels::SpectralDiagnostics;
use crate::signals::{ComplexSeries, InstAttrs, SampledSignal, TimeGrid};
use crate::simulate::GroundTruth;

pub const REAL_HEADER: [&str; 2] = ["t", "value"];
pub const COMPLEX_HEADER: [&str; 3] = ["t", "re", "im"];
pub const ANALYSIS_HEADER: [&str; 6] = ["t", "re", "im", "amplitude", "phase", "frequency"];
pub const TRUTH_HEADER: [&str; 5] = ["t", "signal", "amp", "phase", "freq"];
pub const DIAGNOSTICS_HEADER: [&str; 6] = ["xi", "lambda1", "lambda2", "coh_re", "coh_im", "chi"];

/// Read a numeric CSV with exactly the `expected` header; returns columns.
pub fn read_columns<R: Read>(reader: R, expected: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names != expected {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header {:?}, found {:?}", expected.join(","), names.join(",")),
        });
    }
    let mut cols = vec![Vec::new(); expected.len()];
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != expected.len() {
            return Err(Error::Parse {
                line,
                msg: format!("expected {} fields, found {}", expected.len(), rec.len()),
            });
        }
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("column {:?}: cannot parse {field:?} as a number", expected[j]),
            })?;
            cols[j].push(v);
        }
    }
    Ok(cols)
}

fn finite_column(col: &[f64], name: &str) -> Result<()> {
    match col.iter().position(|v| !v.is_finite()) {
        // header is line 1
        Some(i) => Err(Error::Parse {
            line: i as u64 + 2,
            msg: format!("column {name:?} must be finite"),
        }),
        None => Ok(()),
    }
}

fn grid_from(t: Vec<f64>) -> Result<TimeGrid> {
    finite_column(&t, "t")?;
    TimeGrid::new(t).map_err(|e| Error::Parse {
        line: 0,
        msg: e.to_string(),
    })
}

pub fn read_real_series<R: Read>(reader: R) -> Result<SampledSignal> {
    let mut cols = read_columns(reader, &REAL_HEADER)?;
    let v = cols.pop().unwrap();
    finite_column(&v, "value")?;
    SampledSignal::new(grid_from(cols.pop().unwrap())?, v)
}

pub fn read_complex_series<R: Read>(reader: R) -> Result<ComplexSeries> {
    let cols = read_columns(reader, &COMPLEX_HEADER)?;
    finite_column(&cols[1], "re")?;
    finite_column(&cols[2], "im")?;
    let values = cols[1]
        .iter()
        .zip(&cols[2])
        .map(|(&re, &im)| num_complex::Complex64::new(re, im))
        .collect();
    ComplexSeries::new(grid_from(cols[0].clone())?, values)
}

pub fn read_ground_truth<R: Read>(reader: R) -> Result<GroundTruth> {
    let mut cols = read_columns(reader, &TRUTH_HEADER)?;
    for (c, name) in cols.iter().zip(TRUTH_HEADER) {
        finite_column(c, name)?;
    }
    let frequency = cols.pop().unwrap();
    let phase = cols.pop().unwrap();
    let amplitude = cols.pop().unwrap();
    let signal = cols.pop().unwrap();
    Ok(GroundTruth {
        signal: SampledSignal::new(grid_from(cols.pop().unwrap())?, signal)?,
        amplitude,
        phase,
        frequency,
    })
}

/// Write rows of floats under `header`.
pub fn write_rows<W: Write>(writer: W, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_real_series<W: Write>(writer: W, s: &SampledSignal) -> Result<()> {
    write_rows(
        writer,
        &REAL_HEADER,
        s.times().iter().zip(s.values()).map(|(&t, &v)| vec![t, v]),
    )
}

pub fn write_complex_series<W: Write>(writer: W, s: &ComplexSeries) -> Result<()> {
    write_rows(
        writer,
        &COMPLEX_HEADER,
        s.times().iter().zip(s.values()).map(|(&t, z)| vec![t, z.re, z.im]),
    )
}

/// `t,re,im,amplitude,phase,frequency` for an estimate and its attributes.
pub fn write_analysis<W: Write>(writer: W, z: &ComplexSeries, attrs: &InstAttrs) -> Result<()> {
    write_rows(
        writer,
        &ANALYSIS_HEADER,
        (0..z.len()).map(|j| {
            vec![
                z.times()[j],
                z.values()[j].re,
                z.values()[j].im,
                attrs.amplitude[j],
                attrs.phase_unwrapped[j],
                attrs.frequency[j],
            ]
        }),
    )
}

pub fn write_ground_truth<W: Write>(writer: W, gt: &GroundTruth) -> Result<()> {
    write_rows(
        writer,
        &TRUTH_HEADER,
        (0..gt.signal.len()).map(|j| {
            vec![
                gt.signal.times()[j],
                gt.signal.values()[j],
                gt.amplitude[j],
                gt.phase[j],
                gt.frequency[j],
            ]
        }),
    )
}

/// Undefined coherency is written as NaN.
pub fn write_diagnostics<W: Write>(writer: W, d: &SpectralDiagnostics) -> Result<()> {
    write_rows(
        writer,
        &DIAGNOSTICS_HEADER,
        (0..d.xi.len()).map(|j| {
            let (re, im) = if d.coherency_defined[j] {
                (d.coherency[j].re, d.coherency[j].im)
            } else {
                (f64::NAN, f64::NAN)
            };
            vec![d.xi[j], d.lambda1[j], d.lambda2[j], re, im, d.cond_variance[j]]
        }),
    )
}

pub fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

pub fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::extract_attrs;
    use num_complex::Complex64;
    use proptest::prelude::*;

    #[test]
    fn malformed_row_reports_its_line() {
        let text = "t,value\n0,1\n0.1,2\n0.2,abc\n";
        match read_real_series(text.as_bytes()) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 4);
                assert!(msg.contains("abc"));
            }
            other => panic!("{other:?}"),
        }
        match read_real_series("t,value\n0,1\n0.1\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            read_real_series("time,value\n0,1\n1,2\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_real_series("t,value\n0,1\n1,NaN\n".as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(read_real_series("t,value\n0,1\n0,2\n".as_bytes()).is_err());
    }

    #[test]
    fn analysis_and_diagnostics_headers() {
        let g = TimeGrid::uniform(0.0, 0.1, 3).unwrap();
        let z = ComplexSeries::new(g, vec![Complex64::new(1.0, 0.5); 3]).unwrap();
        let mut buf = Vec::new();
        write_analysis(&mut buf, &z, &extract_attrs(&z)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,re,im,amplitude,phase,frequency\n"));
        let cols = read_columns(text.as_bytes(), &ANALYSIS_HEADER).unwrap();
        assert_eq!(cols[1], vec![1.0; 3]);
    }

    proptest! {
        #[test]
        fn round_trips_exactly(
            vals in prop::collection::vec((-1e6f64..1e6, -1e-300f64..1e-300), 2..40),
        ) {
            let g = TimeGrid::uniform(-0.37, 1.0 / 3.0, vals.len()).unwrap();
            let s = SampledSignal::new(g.clone(), vals.iter().map(|v| v.0).collect()).unwrap();
            let mut buf = Vec::new();
            write_real_series(&mut buf, &s).unwrap();
            prop_assert_eq!(read_real_series(buf.as_slice()).unwrap(), s);

            let z = ComplexSeries::new(g, vals.iter().map(|v| Complex64::new(v.0, v.1)).collect()).unwrap();
            let mut buf = Vec::new();
            write_complex_series(&mut buf, &z).unwrap();
            prop_assert_eq!(read_complex_series(buf.as_slice()).unwrap(), z);
        }
    }
}
