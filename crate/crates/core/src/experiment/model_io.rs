//! Versioned plain-text model files.
//!
//! ```text
//! groupsparse-model 1
//! dims 64 40 20 10
//! activations relu relu softmax
//! penalty sgl
//! lambda 1.0000000000000000e-3
//! seed 0
//! threshold 1.0000000000000000e-3
//! weights 0 40 64
//! <40 lines of 64 values, row-major>
//! bias 0 40
//! <1 line of 40 values>
//! ...
//! end
//! ```
//!
//! Every value is written with 17 significant digits, which is enough for the
//! decimal text to parse back to the identical `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Activation, Network};
use crate::penalties::PenaltyKind;

pub const MODEL_MAGIC: &str = "groupsparse-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub penalty: PenaltyKind,
    pub lambda: f64,
    pub seed: u64,
    pub threshold: f64,
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn join_values<'a>(values: impl Iterator<Item = &'a f64>) -> String {
    values.map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(" ")
}

pub fn render_model(net: &Network, meta: &ModelMetadata) -> String {
    let mut out = String::new();
    let dims: Vec<String> = net.dims().iter().map(usize::to_string).collect();
    let acts: Vec<&str> = net.activations().iter().map(|a| a.name()).collect();
    writeln!(out, "{MODEL_MAGIC} {MODEL_VERSION}").unwrap();
    writeln!(out, "dims {}", dims.join(" ")).unwrap();
    writeln!(out, "activations {}", acts.join(" ")).unwrap();
    writeln!(out, "penalty {}", meta.penalty).unwrap();
    writeln!(out, "lambda {}", fmt_f64(meta.lambda)).unwrap();
    writeln!(out, "seed {}", meta.seed).unwrap();
    writeln!(out, "threshold {}", fmt_f64(meta.threshold)).unwrap();
    for k in 0..net.layer_count() {
        let w = net.weights(k);
        writeln!(out, "weights {k} {} {}", w.nrows(), w.ncols()).unwrap();
        for row in w.rows() {
            writeln!(out, "{}", join_values(row.iter())).unwrap();
        }
        writeln!(out, "bias {k} {}", w.nrows()).unwrap();
        writeln!(out, "{}", join_values(net.bias(k).iter())).unwrap();
    }
    out.push_str("end\n");
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.inner
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| Error::ModelFormat(format!("unexpected end of file, expected {what}")))
    }

    /// Next line, which must start with `key`; returns the remaining fields.
    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (n, line) = self.next(key)?;
        let mut fields = line.split_whitespace();
        if fields.next() != Some(key) {
            return Err(Error::ModelFormat(format!("line {n}: expected `{key}`, found {line:?}")));
        }
        Ok((n, fields.collect()))
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::ModelFormat(format!("line {line}: cannot parse {s:?}")))
}

fn single<'a>(fields: &[&'a str], line: usize) -> Result<&'a str> {
    match fields {
        [one] => Ok(one),
        _ => Err(Error::ModelFormat(format!("line {line}: expected one value, got {}", fields.len()))),
    }
}

fn parse_row(lines: &mut Lines<'_>, len: usize, out: &mut Vec<f64>) -> Result<()> {
    let (n, line) = lines.next("a row of values")?;
    let before = out.len();
    for field in line.split_whitespace() {
        out.push(parse_num(field, n)?);
    }
    if out.len() - before != len {
        return Err(Error::ModelFormat(format!(
            "line {n}: expected {len} values, found {}",
            out.len() - before
        )));
    }
    Ok(())
}

pub fn parse_model(text: &str) -> Result<(Network, ModelMetadata)> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (_, header) = lines.keyed(MODEL_MAGIC)?;
    let version: u32 = parse_num(single(&header, 1)?, 1)?;
    if version != MODEL_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported model version {version} (this build reads {MODEL_VERSION})"
        )));
    }
    let (n, dims) = lines.keyed("dims")?;
    let dims = dims.iter().map(|d| parse_num::<usize>(d, n)).collect::<Result<Vec<_>>>()?;
    let (n, acts) = lines.keyed("activations")?;
    let activations = acts
        .iter()
        .map(|a| Activation::from_name(a).ok_or_else(|| Error::ModelFormat(format!("line {n}: unknown activation {a:?}"))))
        .collect::<Result<Vec<_>>>()?;
    let (n, f) = lines.keyed("penalty")?;
    let penalty: PenaltyKind = single(&f, n)?
        .parse()
        .map_err(|e| Error::ModelFormat(format!("line {n}: {e}")))?;
    let (n, f) = lines.keyed("lambda")?;
    let lambda = parse_num(single(&f, n)?, n)?;
    let (n, f) = lines.keyed("seed")?;
    let seed = parse_num(single(&f, n)?, n)?;
    let (n, f) = lines.keyed("threshold")?;
    let threshold = parse_num(single(&f, n)?, n)?;

    if dims.len() < 2 {
        return Err(Error::ModelFormat(format!("need at least two layer sizes, got {dims:?}")));
    }
    let mut params = Vec::new();
    for (k, pair) in dims.windows(2).enumerate() {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let (n, f) = lines.keyed("weights")?;
        let header: Vec<usize> = f.iter().map(|v| parse_num(v, n)).collect::<Result<_>>()?;
        if header != [k, fan_out, fan_in] {
            return Err(Error::ModelFormat(format!(
                "line {n}: weight header {header:?} inconsistent with dims {dims:?}"
            )));
        }
        for _ in 0..fan_out {
            parse_row(&mut lines, fan_in, &mut params)?;
        }
        let (n, f) = lines.keyed("bias")?;
        let header: Vec<usize> = f.iter().map(|v| parse_num(v, n)).collect::<Result<_>>()?;
        if header != [k, fan_out] {
            return Err(Error::ModelFormat(format!(
                "line {n}: bias header {header:?} inconsistent with dims {dims:?}"
            )));
        }
        parse_row(&mut lines, fan_out, &mut params)?;
    }
    let (n, rest) = lines.keyed("end")?;
    if !rest.is_empty() {
        return Err(Error::ModelFormat(format!("line {n}: trailing fields after `end`")));
    }
    let net = Network::from_params(&dims, &activations, params).map_err(|e| Error::ModelFormat(e.to_string()))?;
    Ok((
        net,
        ModelMetadata {
            penalty,
            lambda,
            seed,
            threshold,
        },
    ))
}

pub fn serialize_model(net: &Network, meta: &ModelMetadata, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_model(net, meta)).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<(Network, ModelMetadata)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}

pub fn deserialize_model(path: impl AsRef<Path>) -> Result<Network> {
    read_model(path).map(|(net, _)| net)
}
