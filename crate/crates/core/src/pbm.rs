//! Plain PBM (`P1`) occupancy bitmaps with a key-value sidecar.
//!
//! Pixel value 1 marks an interior cell and 0 an exterior one; the first
//! bitmap row is the top of the domain. The sidecar holds `h = <cell size>`,
//! `x0 = <column> <row-from-bottom>` and optionally `origin = <x> <y>`.

use crate::error::{Error, Result};
use crate::grid::GridDomain;

pub fn parse(pbm: &str, sidecar: &str) -> Result<GridDomain> {
    let mut tokens = Vec::new();
    for line in pbm.lines() {
        let line = line.split('#').next().unwrap_or("");
        tokens.extend(line.split_whitespace().map(str::to_owned));
    }
    let mut it = tokens.into_iter();
    if it.next().as_deref() != Some("P1") {
        return Err(Error::Domain("bitmap must start with the P1 magic".into()));
    }
    let mut num = |what: &str| -> Result<usize> {
        it.next()
            .ok_or_else(|| Error::Domain(format!("bitmap is missing its {what}")))?
            .parse()
            .map_err(|_| Error::Domain(format!("bitmap {what} is not an integer")))
    };
    let (w, hgt) = (num("width")?, num("height")?);
    let rest: String = it.collect::<Vec<_>>().concat();
    let bits: Vec<bool> = rest
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::Domain(format!("unexpected pixel `{c}`"))),
        })
        .collect::<Result<_>>()?;
    if bits.len() != w * hgt {
        return Err(Error::Domain(format!("bitmap has {} pixels, header says {}", bits.len(), w * hgt)));
    }
    let mut mask = vec![false; w * hgt];
    for r in 0..hgt {
        for i in 0..w {
            mask[(hgt - 1 - r) * w + i] = bits[r * w + i];
        }
    }
    let side = Sidecar::parse(sidecar)?;
    if side.x0.0 >= w || side.x0.1 >= hgt {
        return Err(Error::Config { field: "x0".into(), msg: "outside the bitmap".into() });
    }
    GridDomain::from_mask(w, hgt, side.h, side.origin, mask, side.x0.1 * w + side.x0.0)
}

struct Sidecar {
    h: f64,
    x0: (usize, usize),
    origin: [f64; 2],
}

impl Sidecar {
    fn parse(text: &str) -> Result<Self> {
        let (mut h, mut x0, mut origin) = (None, None, [0.0, 0.0]);
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config { field: line.into(), msg: "expected key = value".into() })?;
            let (k, v) = (k.trim(), v.trim());
            let bad = |msg: &str| Error::Config { field: k.into(), msg: msg.into() };
            match k {
                "h" => h = Some(v.parse::<f64>().map_err(|_| bad("not a number"))?),
                "x0" => {
                    let p: Vec<usize> = v.split_whitespace().map(|t| t.parse().map_err(|_| bad("expected two integers"))).collect::<Result<_>>()?;
                    if p.len() != 2 {
                        return Err(bad("expected two integers"));
                    }
                    x0 = Some((p[0], p[1]));
                }
                "origin" => {
                    let p: Vec<f64> = v.split_whitespace().map(|t| t.parse().map_err(|_| bad("expected two numbers"))).collect::<Result<_>>()?;
                    if p.len() != 2 {
                        return Err(bad("expected two numbers"));
                    }
                    origin = [p[0], p[1]];
                }
                _ => return Err(bad("unknown key")),
            }
        }
        Ok(Sidecar {
            h: h.ok_or_else(|| Error::Config { field: "h".into(), msg: "missing".into() })?,
            x0: x0.ok_or_else(|| Error::Config { field: "x0".into(), msg: "missing".into() })?,
            origin,
        })
    }
}

/// Writes the domain as a bitmap and sidecar pair.
pub fn write(dom: &GridDomain) -> (String, String) {
    let (w, hgt) = (dom.nx(), dom.ny());
    let mut out = format!("P1\n{w} {hgt}\n");
    for r in 0..hgt {
        let j = hgt - 1 - r;
        let row: Vec<&str> = (0..w).map(|i| if dom.is_interior(dom.cell(i, j)) { "1" } else { "0" }).collect();
        for chunk in row.chunks(35) {
            out.push_str(&chunk.join(" "));
            out.push('\n');
        }
    }
    let (i, j) = dom.ij(dom.x0());
    let o = dom.origin();
    let side = format!("h = {}\nx0 = {i} {j}\norigin = {} {}\n", dom.h(), o[0], o[1]);
    (out, side)
}
