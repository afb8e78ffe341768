//! CSV output for fields, traces, loci and spectra.
//!
//! Floats are written in Rust's shortest round-trip form, so identical data
//! gives byte-identical files. Missing values are empty cells.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::born::ConvergenceTrace;
use crate::error::{Error, Result};
use crate::spectral::SpectralLocus;

fn cell(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        x.to_string()
    }
}

fn opt_cell(x: Option<f64>) -> String {
    x.map_or_else(String::new, cell)
}

/// Buffered file writer, creating parent directories as needed.
pub fn create(path: impl AsRef<Path>) -> Result<BufWriter<File>> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// `x,re,im`
pub fn write_field<W: Write>(out: W, nodes: &[f64], values: &[Complex64]) -> Result<()> {
    if nodes.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: nodes.len(),
            actual: values.len(),
        });
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "re", "im"])?;
    for (x, z) in nodes.iter().zip(values) {
        w.write_record([cell(*x), cell(z.re), cell(z.im)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `x,re,im` file back.
pub fn read_field<R: Read>(input: R) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["x", "re", "im"] {
        return Err(Error::InvalidParameter(format!("expected header x,re,im, got {}", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    for rec in r.deserialize() {
        let (x, re, im): (f64, f64, f64) = rec?;
        nodes.push(x);
        values.push(Complex64::new(re, im));
    }
    Ok((nodes, values))
}

/// `n,monitor,residual,err_vs_ref`
pub fn write_trace<W: Write>(out: W, trace: &ConvergenceTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "monitor", "residual", "err_vs_ref"])?;
    for s in &trace.steps {
        w.write_record([s.n.to_string(), cell(s.monitor), cell(s.residual), opt_cell(s.err_vs_ref)])?;
    }
    w.flush()?;
    Ok(())
}

/// `re,im,branch,t`
pub fn write_locus<W: Write>(out: W, locus: &SpectralLocus) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["re", "im", "branch", "t"])?;
    for s in &locus.samples {
        w.write_record([cell(s.lambda.re), cell(s.lambda.im), s.branch.to_string(), cell(s.t)])?;
    }
    w.flush()?;
    Ok(())
}

/// `re,im`
pub fn write_spectrum<W: Write>(out: W, points: &[Complex64]) -> Result<()> {
    write_pairs(out, ["re", "im"], points)
}

/// `re_mu,im_mu`
pub fn write_mu<W: Write>(out: W, mu: &[Complex64]) -> Result<()> {
    write_pairs(out, ["re_mu", "im_mu"], mu)
}

fn write_pairs<W: Write>(out: W, header: [&str; 2], points: &[Complex64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for z in points {
        w.write_record([cell(z.re), cell(z.im)])?;
    }
    w.flush()?;
    Ok(())
}
