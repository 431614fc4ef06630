//! Plain-text network format.
//!
//! ```text
//! version=1
//! layers=<n>
//! layer <activation> <out> <in>
//! <out*in weights, row-major, space separated>
//! <out biases>
//! ...
//! ```
//!
//! Numbers are written in scientific notation with 17 significant digits, which
//! round-trips every finite `f64` exactly.

use std::fmt::Write as _;

use super::activation::ActivationKind;
use super::network::{Layer, Network};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const FORMAT_VERSION: u32 = 1;

fn push_values(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{v:.16e}").unwrap();
    }
    out.push('\n');
}

pub fn write_network(net: &Network) -> String {
    let mut out = String::new();
    writeln!(out, "version={FORMAT_VERSION}").unwrap();
    writeln!(out, "layers={}", net.n_layers()).unwrap();
    for layer in net.layers() {
        writeln!(
            out,
            "layer {} {} {}",
            layer.activation,
            layer.out_dim(),
            layer.in_dim()
        )
        .unwrap();
        push_values(&mut out, layer.weight.as_slice());
        push_values(&mut out, &layer.bias);
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-blank line with its 1-based number. Values lines may be blank
    /// when a layer has zero entries, so callers can ask for raw lines too.
    fn next_raw(&mut self) -> Result<(usize, &'a str)> {
        self.inner
            .next()
            .map(|(i, l)| (i + 1, l.trim()))
            .ok_or(Error::Parse {
                line: 0,
                msg: "unexpected end of input".into(),
            })
    }

    fn next_nonblank(&mut self) -> Result<(usize, &'a str)> {
        loop {
            let (n, l) = self.next_raw()?;
            if !l.is_empty() {
                return Ok((n, l));
            }
        }
    }
}

fn header(lines: &mut Lines<'_>, key: &str) -> Result<usize> {
    let (n, l) = lines.next_nonblank()?;
    let value = l
        .strip_prefix(key)
        .and_then(|r| r.strip_prefix('='))
        .ok_or_else(|| Error::Parse {
            line: n,
            msg: format!("expected `{key}=<n>`, found `{l}`"),
        })?;
    value.trim().parse().map_err(|_| Error::Parse {
        line: n,
        msg: format!("bad {key} value `{value}`"),
    })
}

fn values(line: usize, text: &str, expected: usize) -> Result<Vec<f64>> {
    let vals: Vec<f64> = text
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>().map_err(|_| Error::Parse {
                line,
                msg: format!("bad number `{t}`"),
            })
        })
        .collect::<Result<_>>()?;
    if vals.len() != expected {
        return Err(Error::Parse {
            line,
            msg: format!("expected {expected} values, found {}", vals.len()),
        });
    }
    Ok(vals)
}

pub fn read_network(text: &str) -> Result<Network> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let version = header(&mut lines, "version")?;
    if version != FORMAT_VERSION as usize {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unsupported network format version {version}"),
        });
    }
    let n = header(&mut lines, "layers")?;
    let mut layers = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, l) = lines.next_nonblank()?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "layer" {
            return Err(Error::Parse {
                line: ln,
                msg: format!("expected `layer <activation> <out> <in>`, found `{l}`"),
            });
        }
        let activation: ActivationKind = parts[1].parse().map_err(|e: Error| Error::Parse {
            line: ln,
            msg: e.to_string(),
        })?;
        let dim = |s: &str| {
            s.parse::<usize>().map_err(|_| Error::Parse {
                line: ln,
                msg: format!("bad dimension `{s}`"),
            })
        };
        let (out_dim, in_dim) = (dim(parts[2])?, dim(parts[3])?);
        let (wl, wtext) = lines.next_raw()?;
        let w = values(wl, wtext, out_dim * in_dim)?;
        let (bl, btext) = lines.next_raw()?;
        let b = values(bl, btext, out_dim)?;
        layers.push(Layer::new(Matrix::from_vec(out_dim, in_dim, w)?, b, activation)?);
    }
    Network::new(layers)
}

pub fn save_network(path: &std::path::Path, net: &Network) -> Result<()> {
    std::fs::write(path, write_network(net)).map_err(|e| Error::io(path, e))
}

pub fn load_network(path: &std::path::Path) -> Result<Network> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_network(&text)
}
