use std::io::{BufRead, Write};

use super::lift::LiftedCode;
use crate::error::{Error, Result};

/// Writes H in alist form (1-based indices, rows padded with zeros), then one
/// `# lift=<z> seed=<s>` metadata line.
pub fn write_alist<W: Write>(code: &LiftedCode, mut w: W) -> Result<()> {
    let cols: Vec<Vec<u32>> = (0..code.n())
        .map(|v| {
            let mut r: Vec<u32> = code
                .var_edges(v)
                .iter()
                .map(|&e| check_of(code, e as usize) as u32)
                .collect();
            r.sort_unstable();
            r
        })
        .collect();
    let max_col = cols.iter().map(Vec::len).max().unwrap_or(0);
    let max_row = (0..code.m()).map(|c| code.check(c).len()).max().unwrap_or(0);
    let mut out = String::new();
    out.push_str(&format!("{} {}\n{} {}\n", code.n(), code.m(), max_col, max_row));
    out.push_str(&join(cols.iter().map(|c| c.len() as u32)));
    out.push_str(&join((0..code.m()).map(|c| code.check(c).len() as u32)));
    for c in &cols {
        out.push_str(&join(padded(c.iter().map(|&x| x + 1), max_col)));
    }
    for k in 0..code.m() {
        out.push_str(&join(padded(code.check(k).iter().map(|&x| x + 1), max_row)));
    }
    out.push_str(&format!("# lift={} seed={}\n", code.lift_factor(), code.seed()));
    w.write_all(out.as_bytes())?;
    Ok(())
}

fn check_of(code: &LiftedCode, e: usize) -> usize {
    let (mut lo, mut hi) = (0, code.m());
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if code.check_range(mid).start <= e {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn padded(it: impl Iterator<Item = u32>, width: usize) -> Vec<u32> {
    let mut v: Vec<u32> = it.collect();
    v.resize(width, 0);
    v
}

fn join(it: impl IntoIterator<Item = u32>) -> String {
    let mut s = it
        .into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ");
    s.push('\n');
    s
}

/// Reads a code written by [`write_alist`]. The row section defines H; the
/// column section is checked against it.
pub fn read_alist<R: BufRead>(r: R) -> Result<LiftedCode> {
    let mut meta = (1usize, 0u64);
    let mut nums = Vec::new();
    for line in r.lines() {
        let line = line?;
        let t = line.trim();
        if let Some(rest) = t.strip_prefix('#') {
            for kv in rest.split_whitespace() {
                match kv.split_once('=') {
                    Some(("lift", v)) => meta.0 = parse(v)? as usize,
                    Some(("seed", v)) => meta.1 = parse(v)?,
                    _ => {}
                }
            }
            continue;
        }
        for tok in t.split_whitespace() {
            nums.push(parse(tok)?);
        }
    }
    let mut it = nums.into_iter();
    let mut next = || it.next().ok_or_else(|| Error::Format("truncated alist".into()));
    let n = next()? as usize;
    let m = next()? as usize;
    let max_col = next()? as usize;
    let max_row = next()? as usize;
    let col_deg: Vec<usize> = (0..n).map(|_| next().map(|x| x as usize)).collect::<Result<_>>()?;
    let row_deg: Vec<usize> = (0..m).map(|_| next().map(|x| x as usize)).collect::<Result<_>>()?;
    let mut cols = Vec::with_capacity(n);
    for &d in &col_deg {
        let entries: Vec<u64> = (0..max_col).map(|_| next()).collect::<Result<_>>()?;
        cols.push(entries[..d.min(max_col)].to_vec());
    }
    let mut rows = Vec::with_capacity(m);
    for &d in &row_deg {
        let entries: Vec<u64> = (0..max_row).map(|_| next()).collect::<Result<_>>()?;
        let r: Vec<u32> = entries[..d.min(max_row)]
            .iter()
            .map(|&x| {
                if x == 0 || x as usize > n {
                    Err(Error::Format(format!("column index {x} out of range")))
                } else {
                    Ok(x as u32 - 1)
                }
            })
            .collect::<Result<_>>()?;
        rows.push(r);
    }
    let code = LiftedCode::from_rows(n, &rows, meta.0, meta.1)?;
    for (v, c) in cols.iter().enumerate() {
        if c.len() != code.var_degree(v) {
            return Err(Error::Format(format!("column {} degree disagrees with rows", v + 1)));
        }
    }
    Ok(code)
}

fn parse(s: &str) -> Result<u64> {
    s.parse()
        .map_err(|_| Error::Format(format!("bad alist token {s:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldpc::{lift, Protograph};

    #[test]
    fn round_trip() {
        let p = Protograph::new(&[vec![1, 1, 1, 1, 1, 0], vec![0, 1, 2, 1, 1, 1]]).unwrap();
        let c = lift(&p, 13, 77).unwrap();
        let mut buf = Vec::new();
        write_alist(&c, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("78 26\n"));
        assert!(text.trim_end().ends_with("# lift=13 seed=77"));
        let back = read_alist(&buf[..]).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn truncated_file_rejected() {
        assert!(read_alist(&b"4 2\n2 3\n"[..]).is_err());
    }
}
