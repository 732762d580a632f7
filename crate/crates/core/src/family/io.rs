//! The `zpcf` text format, one family per file:
//!
//! ```text
//! # zpcf v1
//! p=<p> l=<ell> n=<N> s=<spec>
//! <ell space-separated entries>      (N rows)
//! ```
//!
//! `<spec>` is `Zp`, `Zp*`, a comma-separated element list, or `none`.
//! Lines starting with `#` after the header are comments. The file must
//! end with a newline.

use std::fs;
use std::path::Path;

use super::{CoverSet, CoveringFamily};
use crate::error::{Error, Result};
use crate::zp::PrimeModulus;

const MAGIC: &str = "# zpcf v1";

pub fn to_zpcf_string(family: &CoveringFamily) -> String {
    let spec = family
        .claimed_cover()
        .map(CoverSet::to_spec)
        .unwrap_or_else(|| "none".to_string());
    let mut out = String::with_capacity(family.as_flat().len() * 3 + 64);
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(&format!(
        "p={} l={} n={} s={}\n",
        family.modulus(),
        family.ell(),
        family.len(),
        spec
    ));
    for row in family.rows() {
        let mut first = true;
        for x in row {
            if !first {
                out.push(' ');
            }
            first = false;
            out.push_str(&x.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn write_family(family: &CoveringFamily, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_zpcf_string(family))?;
    Ok(())
}

pub fn read_family(path: impl AsRef<Path>) -> Result<CoveringFamily> {
    parse_zpcf(&fs::read_to_string(path)?)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

struct Header {
    p: PrimeModulus,
    ell: usize,
    n: usize,
    spec: String,
}

fn parse_header(line: &str) -> Result<Header> {
    let mut p = None;
    let mut ell = None;
    let mut n = None;
    let mut spec = None;
    for field in line.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| parse_err(2, format!("expected key=value, found `{field}`")))?;
        let number = |v: &str| {
            v.parse::<u64>()
                .map_err(|_| parse_err(2, format!("`{key}` is not a number: `{v}`")))
        };
        let slot_taken = match key {
            "p" => p.replace(number(value)?).is_some(),
            "l" => ell.replace(number(value)?).is_some(),
            "n" => n.replace(number(value)?).is_some(),
            "s" => spec.replace(value.to_string()).is_some(),
            other => return Err(parse_err(2, format!("unknown header key `{other}`"))),
        };
        if slot_taken {
            return Err(parse_err(2, format!("header key `{key}` repeated")));
        }
    }
    let missing = |k: &str| parse_err(2, format!("header is missing `{k}=`"));
    let p = p.ok_or_else(|| missing("p"))?;
    let p = u32::try_from(p)
        .ok()
        .and_then(|p| PrimeModulus::new(p).ok())
        .ok_or_else(|| parse_err(2, format!("p={p} is not a supported prime")))?;
    let ell = ell.ok_or_else(|| missing("l"))? as usize;
    let n = n.ok_or_else(|| missing("n"))? as usize;
    if ell == 0 || n == 0 {
        return Err(parse_err(2, "l and n must be positive"));
    }
    Ok(Header {
        p,
        ell,
        n,
        spec: spec.ok_or_else(|| missing("s"))?,
    })
}

pub fn parse_zpcf(text: &str) -> Result<CoveringFamily> {
    if !text.ends_with('\n') {
        let last = text.lines().count().max(1);
        return Err(parse_err(last, "missing trailing newline"));
    }
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim_end() == MAGIC => {}
        _ => return Err(parse_err(1, format!("expected `{MAGIC}`"))),
    }
    let header = match lines.next() {
        Some((_, l)) => parse_header(l)?,
        None => return Err(parse_err(2, "missing header line")),
    };
    let claimed = match header.spec.as_str() {
        "none" => None,
        spec => Some(CoverSet::parse_spec(header.p, spec).map_err(|e| parse_err(2, e.to_string()))?),
    };

    let mut data = Vec::with_capacity(header.n.saturating_mul(header.ell).min(1 << 24));
    let mut row_lines = Vec::with_capacity(header.n.min(1 << 20));
    let mut seen = std::collections::HashMap::new();
    for (lineno, line) in lines {
        if line.starts_with('#') {
            continue;
        }
        if row_lines.len() == header.n {
            if line.trim().is_empty() {
                continue;
            }
            return Err(parse_err(lineno, format!("more than n={} rows", header.n)));
        }
        let start = data.len();
        for token in line.split_whitespace() {
            let x: u64 = token
                .parse()
                .map_err(|_| parse_err(lineno, format!("`{token}` is not a non-negative integer")))?;
            if x >= header.p.get() as u64 {
                return Err(parse_err(lineno, format!("entry {x} is outside [0, {}]", header.p.get() - 1)));
            }
            data.push(x as u32);
        }
        let width = data.len() - start;
        if width != header.ell {
            return Err(parse_err(lineno, format!("expected {} entries, found {width}", header.ell)));
        }
        if let Some(prev) = seen.insert(data[start..].to_vec(), lineno) {
            return Err(parse_err(lineno, format!("duplicate of the row on line {prev}")));
        }
        row_lines.push(lineno);
    }
    if row_lines.len() != header.n {
        let last = text.lines().count();
        return Err(parse_err(last, format!("expected {} rows, found {}", header.n, row_lines.len())));
    }
    Ok(CoveringFamily::from_flat(header.p, header.ell, data)?.with_claimed_cover(claimed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam() -> CoveringFamily {
        let p = PrimeModulus::new(3).unwrap();
        CoveringFamily::from_rows(p, &[[0u32, 1, 2], [2, 2, 0]])
            .unwrap()
            .with_claimed_cover(Some(CoverSet::nonzero(p)))
    }

    #[test]
    fn writes_expected_text() {
        assert_eq!(to_zpcf_string(&fam()), "# zpcf v1\np=3 l=3 n=2 s=Zp*\n0 1 2\n2 2 0\n");
    }

    #[test]
    fn round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.zpcf");
        write_family(&fam(), &path).unwrap();
        assert_eq!(read_family(&path).unwrap(), fam());
    }

    #[test]
    fn comments_are_skipped() {
        let text = "# zpcf v1\np=3 l=1 n=2 s=none\n# a comment\n0\n# another\n1\n";
        let f = parse_zpcf(text).unwrap();
        assert_eq!(f.len(), 2);
        assert!(f.claimed_cover().is_none());
    }

    fn err_line(text: &str) -> usize {
        match parse_zpcf(text) {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_inputs_name_their_line() {
        assert_eq!(err_line("# zpcf v2\np=3 l=1 n=1 s=none\n0\n"), 1);
        assert_eq!(err_line("# zpcf v1\np=4 l=1 n=1 s=none\n0\n"), 2);
        assert_eq!(err_line("# zpcf v1\np=3 n=1 s=none\n0\n"), 2);
        assert_eq!(err_line("# zpcf v1\np=3 l=2 n=2 s=Zp\n0 1\n0 3\n"), 4);
        assert_eq!(err_line("# zpcf v1\np=3 l=2 n=2 s=Zp\n0 1\n0 1\n"), 4);
        assert_eq!(err_line("# zpcf v1\np=3 l=2 n=2 s=Zp\n0 1\n0\n"), 4);
        assert_eq!(err_line("# zpcf v1\np=3 l=2 n=3 s=Zp\n0 1\n0 2\n"), 4);
        assert_eq!(err_line("# zpcf v1\np=3 l=1 n=1 s=Zp\n0"), 3);
        assert_eq!(err_line("# zpcf v1\np=3 l=1 n=1 s=7\n0\n"), 2);
    }
}
