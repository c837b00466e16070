//! Plain-text `.net` format.
//!
//! ```text
//! MMIL-NET 1
//! layers 4 64 64 2 hidden tanh head gaussian-mean
//! <layer 0 weights (row-major) then biases, whitespace separated>
//! <layer 1 ...>
//! ```
//!
//! Values are written with 17 significant digits, which round-trips every
//! finite `f64` exactly.

use std::fmt::Write as _;
use std::path::Path;

use super::{Activation, MlpNet, NetError, OutputHead};

pub const NET_MAGIC: &str = "MMIL-NET 1";

pub(crate) fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn render_net(net: &MlpNet) -> String {
    let mut s = String::new();
    s.push_str(NET_MAGIC);
    s.push('\n');
    s.push_str("layers");
    for n in net.layer_sizes() {
        let _ = write!(s, " {n}");
    }
    let _ = writeln!(
        s,
        " hidden {} head {}",
        net.hidden_activation().name(),
        net.output_head().name()
    );
    for l in 0..net.num_layers() {
        let (w, b) = net.layer(l);
        let row: Vec<String> = w.iter().chain(b).map(|&v| fmt_real(v)).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn parse_net(text: &str) -> Result<MlpNet, NetError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim() == NET_MAGIC => {}
        Some((_, l)) => {
            return Err(NetError::Format(format!(
                "bad header magic {:?}, expected {NET_MAGIC:?}",
                l.trim()
            )))
        }
        None => return Err(NetError::Format("empty file".into())),
    }
    let (ln, header) = lines.next().ok_or(NetError::Parse {
        line: 2,
        msg: "missing layer-size line".into(),
    })?;
    let perr = |line: usize, msg: String| NetError::Parse { line, msg };
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.first() != Some(&"layers") {
        return Err(perr(ln, "expected `layers ...`".into()));
    }
    let mut sizes = Vec::new();
    let mut i = 1;
    while i < toks.len() {
        match toks[i].parse::<usize>() {
            Ok(n) => sizes.push(n),
            Err(_) => break,
        }
        i += 1;
    }
    let mut hidden = Activation::Tanh;
    let mut head = OutputHead::Linear;
    while i < toks.len() {
        let key = toks[i];
        let val = toks
            .get(i + 1)
            .ok_or_else(|| perr(ln, format!("missing value for `{key}`")))?;
        match key {
            "hidden" => {
                hidden = Activation::from_name(val)
                    .ok_or_else(|| perr(ln, format!("unknown activation `{val}`")))?
            }
            "head" => {
                head = OutputHead::from_name(val)
                    .ok_or_else(|| perr(ln, format!("unknown head `{val}`")))?
            }
            other => return Err(perr(ln, format!("unknown token `{other}`"))),
        }
        i += 2;
    }
    let mut net = MlpNet::zeros(&sizes, hidden, head).map_err(|e| perr(ln, e.to_string()))?;
    for l in 0..net.num_layers() {
        let expected = sizes[l] * sizes[l + 1] + sizes[l + 1];
        let (ln, row) = lines.next().ok_or_else(|| {
            perr(ln + l + 1, format!("truncated file: missing parameter row for layer {l}"))
        })?;
        let vals: Vec<f64> = row
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| perr(ln, format!("`{t}`: {e}"))))
            .collect::<Result<_, _>>()?;
        if vals.len() != expected {
            return Err(perr(
                ln,
                format!("layer {l} has {} values, expected {expected}", vals.len()),
            ));
        }
        let (w, b) = net.layer_mut(l);
        let nw = w.len();
        w.copy_from_slice(&vals[..nw]);
        b.copy_from_slice(&vals[nw..]);
    }
    if let Some((ln, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(perr(ln, format!("unexpected trailing content {:?}", extra.trim())));
    }
    Ok(net)
}

pub fn save_net(net: &MlpNet, path: impl AsRef<Path>) -> Result<(), NetError> {
    std::fs::write(path, render_net(net))?;
    Ok(())
}

pub fn load_net(path: impl AsRef<Path>) -> Result<MlpNet, NetError> {
    parse_net(&std::fs::read_to_string(path)?)
}
