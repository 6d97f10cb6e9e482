//! Versioned flat-file container for trained networks.
//!
//! ```text
//! skillmem-model 1
//! kind tpc                 | kind rnn
//! scalar f64
//! activation tanh          | variant s-to-m
//! hidden <H>
//! obs <D>                  | input <D_in>
//!                          | output <D_out>
//! matrix <name> <rows> <cols>
//! <rows lines of comma-separated values>
//! ...
//! end
//! ```
//!
//! A tPC file holds the blocks `W_H` (H x H) then `W_F` (D x H). An RNN file
//! holds `W_in`, `W_rec`, `W_out`, `b_h` (1 x H) and `b_o` (1 x D_out).

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::baselines::{RnnModel, RnnVariant};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::textio::{write_matrix, Lines, ParseError};
use crate::tpc::{Activation, TpcModel};

pub const MODEL_MAGIC: &str = "skillmem-model 1";

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Parse(#[from] ParseError),
}

/// Any model the container can hold.
#[derive(Debug, Clone, PartialEq)]
pub enum StoredModel<T> {
    Tpc(TpcModel<T>),
    Rnn(RnnModel<T>),
}

impl<T: Real> StoredModel<T> {
    pub fn kind(&self) -> &'static str {
        match self {
            StoredModel::Tpc(_) => "tpc",
            StoredModel::Rnn(_) => "rnn",
        }
    }
}

fn header(out: &mut String, kind: &str, scalar: &str) {
    let _ = writeln!(out, "{MODEL_MAGIC}");
    let _ = writeln!(out, "kind {kind}");
    let _ = writeln!(out, "scalar {scalar}");
}

fn block<T: Real>(out: &mut String, name: &str, m: &Matrix<T>) {
    let _ = writeln!(out, "matrix {name} {} {}", m.rows(), m.cols());
    write_matrix(out, m);
}

fn row_block<T: Real>(out: &mut String, name: &str, v: &[T]) {
    block(out, name, &Matrix::from_vec(1, v.len(), v.to_vec()).expect("row vector"));
}

pub fn write_model<T: Real>(model: &StoredModel<T>) -> String {
    let mut out = String::new();
    header(&mut out, model.kind(), T::type_tag());
    match model {
        StoredModel::Tpc(m) => {
            let _ = writeln!(out, "activation {}", m.activation());
            let _ = writeln!(out, "hidden {}", m.hidden_dim());
            let _ = writeln!(out, "obs {}", m.obs_dim());
            block(&mut out, "W_H", m.w_h());
            block(&mut out, "W_F", m.w_f());
        }
        StoredModel::Rnn(m) => {
            let _ = writeln!(out, "variant {}", m.variant);
            let _ = writeln!(out, "hidden {}", m.hidden_dim());
            let _ = writeln!(out, "input {}", m.input_dim());
            let _ = writeln!(out, "output {}", m.output_dim());
            block(&mut out, "W_in", &m.w_in);
            block(&mut out, "W_rec", &m.w_rec);
            block(&mut out, "W_out", &m.w_out);
            row_block(&mut out, "b_h", &m.b_h);
            row_block(&mut out, "b_o", &m.b_o);
        }
    }
    out.push_str("end\n");
    out
}

fn read_block<T: Real>(lines: &mut Lines<'_>, name: &str, rows: usize, cols: usize) -> Result<Matrix<T>, ParseError> {
    let (n, spec) = lines.expect_key("matrix")?;
    let parts: Vec<&str> = spec.split_whitespace().collect();
    let expected = [name.to_string(), rows.to_string(), cols.to_string()];
    if parts.len() != 3 || parts.iter().zip(&expected).any(|(a, b)| a != b) {
        return Err(ParseError::new(n, "matrix", format!("expected `{name} {rows} {cols}`, found `{spec}`")));
    }
    lines.read_matrix(name, rows, cols)
}

pub fn read_model<T: Real>(text: &str) -> Result<StoredModel<T>, ParseError> {
    let mut lines = Lines::new(text);
    let (n, magic) = lines.next_line("magic")?;
    if magic.trim() != MODEL_MAGIC {
        return Err(ParseError::new(n, "magic", format!("expected `{MODEL_MAGIC}`")));
    }
    let (kind_line, kind) = lines.expect_key("kind")?;
    let kind = kind.to_string();
    let (n, scalar) = lines.expect_key("scalar")?;
    if scalar != T::type_tag() {
        return Err(ParseError::new(n, "scalar", format!("file holds {scalar}, reader expects {}", T::type_tag())));
    }
    let model = match kind.as_str() {
        "tpc" => {
            let activation: Activation = lines.expect_parsed("activation")?;
            let h: usize = lines.expect_parsed("hidden")?;
            let d: usize = lines.expect_parsed("obs")?;
            let w_h = read_block(&mut lines, "W_H", h, h)?;
            let w_f = read_block(&mut lines, "W_F", d, h)?;
            let m = TpcModel::new(w_h, w_f, activation)
                .map_err(|e| ParseError::new(lines.line_no(), "W_F", e.to_string()))?;
            StoredModel::Tpc(m)
        }
        "rnn" => {
            let variant: RnnVariant = lines.expect_parsed("variant")?;
            let h: usize = lines.expect_parsed("hidden")?;
            let d_in: usize = lines.expect_parsed("input")?;
            let d_out: usize = lines.expect_parsed("output")?;
            let w_in = read_block(&mut lines, "W_in", h, d_in)?;
            let w_rec = read_block(&mut lines, "W_rec", h, h)?;
            let w_out = read_block(&mut lines, "W_out", d_out, h)?;
            let b_h = read_block::<T>(&mut lines, "b_h", 1, h)?.into_vec();
            let b_o = read_block::<T>(&mut lines, "b_o", 1, d_out)?.into_vec();
            let m = RnnModel::new(w_in, w_rec, w_out, b_h, b_o, variant)
                .map_err(|e| ParseError::new(lines.line_no(), "b_o", e.to_string()))?;
            StoredModel::Rnn(m)
        }
        other => return Err(ParseError::new(kind_line, "kind", format!("unknown model kind `{other}`"))),
    };
    let (n, end) = lines.next_line("end")?;
    if end.trim() != "end" {
        return Err(ParseError::new(n, "end", "expected `end`"));
    }
    if !lines.peek_is_none() {
        let (n, _) = lines.next_line("end")?;
        return Err(ParseError::new(n, "end", "trailing content after `end`"));
    }
    Ok(model)
}

pub fn save_model<T: Real>(path: impl AsRef<Path>, model: &StoredModel<T>) -> std::io::Result<()> {
    std::fs::write(path, write_model(model))
}

pub fn load_model<T: Real>(path: impl AsRef<Path>) -> Result<StoredModel<T>, ModelFileError> {
    Ok(read_model(&std::fs::read_to_string(path)?)?)
}
