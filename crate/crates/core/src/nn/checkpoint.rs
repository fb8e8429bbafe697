//! Parameter checkpoints: a plain-text manifest (`name dims...` per line,
//! terminated by `end`) followed by little-endian `f64` data in manifest
//! order.

use std::path::Path;

use super::ParamSet;
use crate::error::{Error, Result};
use crate::io::{read_bytes, write_bytes};

const HEADER: &str = "langtrack-params 1";

pub fn checkpoint_bytes(params: &impl ParamSet) -> Vec<u8> {
    let named = params.named_tensors();
    let mut out = format!("{HEADER}\n");
    for (name, t) in &named {
        let dims: Vec<String> = t.shape().iter().map(|d| d.to_string()).collect();
        out.push_str(&format!("{name} {}\n", dims.join(" ")));
    }
    out.push_str("end\n");
    let mut bytes = out.into_bytes();
    for (_, t) in &named {
        for v in t.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    bytes
}

pub fn save_checkpoint(path: &Path, params: &impl ParamSet) -> Result<()> {
    write_bytes(path, &checkpoint_bytes(params))
}

/// Loads into `params`, which must already have the expected structure.
pub fn load_checkpoint(path: &Path, params: &mut impl ParamSet) -> Result<()> {
    let bytes = read_bytes(path)?;
    let mut pos = 0usize;
    let mut line_no = 0usize;
    let mut next_line = |pos: &mut usize| -> Result<String> {
        line_no += 1;
        let rest = &bytes[*pos..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::parse(path, line_no, "truncated manifest"))?;
        *pos += end + 1;
        String::from_utf8(rest[..end].to_vec()).map_err(|_| Error::parse(path, line_no, "manifest is not UTF-8"))
    };
    if next_line(&mut pos)? != HEADER {
        return Err(Error::parse(path, 1, "not a parameter checkpoint"));
    }
    let expected: Vec<(String, Vec<usize>)> = params
        .named_tensors()
        .into_iter()
        .map(|(n, t)| (n, t.shape().to_vec()))
        .collect();
    let mut entries = Vec::new();
    loop {
        let line = next_line(&mut pos)?;
        if line == "end" {
            break;
        }
        let mut parts = line.split(' ');
        let name = parts.next().unwrap_or_default().to_string();
        let dims: std::result::Result<Vec<usize>, _> = parts.map(str::parse).collect();
        let dims = dims.map_err(|_| Error::parse(path, entries.len() + 2, format!("bad shape in `{line}`")))?;
        entries.push((name, dims));
    }
    if entries.len() != expected.len() {
        return Err(Error::shape(
            format!("checkpoint {} tensor count", path.display()),
            &[expected.len()],
            &[entries.len()],
        ));
    }
    for ((name, dims), (ename, edims)) in entries.iter().zip(&expected) {
        if name != ename {
            return Err(Error::Invalid(format!(
                "checkpoint {}: expected tensor `{ename}`, found `{name}`",
                path.display()
            )));
        }
        if dims != edims {
            return Err(Error::shape(format!("checkpoint tensor `{name}`"), edims, dims));
        }
    }
    let total: usize = expected.iter().map(|(_, d)| d.iter().product::<usize>()).sum();
    if bytes.len() - pos != total * 8 {
        return Err(Error::shape(
            format!("checkpoint {} payload", path.display()),
            &[total * 8],
            &[bytes.len() - pos],
        ));
    }
    for t in params.tensors_mut() {
        for v in t.data_mut() {
            let mut b = [0u8; 8];
            b.copy_from_slice(&bytes[pos..pos + 8]);
            *v = f64::from_le_bytes(b);
            pos += 8;
        }
    }
    Ok(())
}
