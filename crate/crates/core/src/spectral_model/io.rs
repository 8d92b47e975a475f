//! Text and binary containers for [`SpectralElement`].
//!
//! Text: a header line `# hormander-spectral v1 n=<n> N=<N>` followed by one
//! line per lattice point in canonical order, `ξ_1 … ξ_n re im`, separated by
//! single spaces, with floats written as `{:.16e}`.
//!
//! Binary, little-endian throughout: magic `HSPE`, `u16` version (1), `u8` n,
//! `u8` reserved (0), `u32` N, `u64` point count, then `(re, im)` as `f64`
//! pairs in canonical order.

use std::io::{BufRead, Read, Write};

use num_complex::Complex64;

use super::{FrequencyLattice, SpectralElement, SpectralError};

const MAGIC: &[u8; 4] = b"HSPE";
const VERSION: u16 = 1;
const TEXT_TAG: &str = "# hormander-spectral v1";

impl SpectralElement {
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<(), SpectralError> {
        let lat = self.lattice();
        writeln!(w, "{TEXT_TAG} n={} N={}", lat.dim(), lat.radius())?;
        for (i, c) in self.coeffs().iter().enumerate() {
            for x in lat.point(i) {
                write!(w, "{x} ")?;
            }
            writeln!(w, "{:.16e} {:.16e}", c.re, c.im)?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self, SpectralError> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| bad("empty input"))??;
        let rest = header
            .strip_prefix(TEXT_TAG)
            .ok_or_else(|| bad(format!("unrecognised header '{header}'")))?;
        let mut n = None;
        let mut big = None;
        for field in rest.split_whitespace() {
            match field.split_once('=') {
                Some(("n", v)) => n = v.parse::<usize>().ok(),
                Some(("N", v)) => big = v.parse::<u32>().ok(),
                _ => return Err(bad(format!("unexpected header field '{field}'"))),
            }
        }
        let (n, big) = n.zip(big).ok_or_else(|| bad("header lacks n= or N="))?;
        let lat = FrequencyLattice::new(n, big)?;
        let mut coeffs = Vec::with_capacity(lat.len());
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != n + 2 {
                return Err(bad(format!("line {}: expected {} fields", lineno + 2, n + 2)));
            }
            let i = coeffs.len();
            if i >= lat.len() {
                return Err(bad("more rows than lattice points"));
            }
            for (j, f) in fields[..n].iter().enumerate() {
                let x: i64 = f.parse().map_err(|_| bad(format!("line {}: bad index", lineno + 2)))?;
                if x != lat.point(i)[j] as i64 {
                    return Err(bad(format!("line {}: rows are not in canonical order", lineno + 2)));
                }
            }
            let num = |s: &str| {
                s.parse::<f64>().map_err(|_| bad(format!("line {}: bad number '{s}'", lineno + 2)))
            };
            coeffs.push(Complex64::new(num(fields[n])?, num(fields[n + 1])?));
        }
        SpectralElement::new(lat, coeffs)
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<(), SpectralError> {
        let lat = self.lattice();
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&[lat.dim() as u8, 0])?;
        w.write_all(&lat.radius().to_le_bytes())?;
        w.write_all(&(lat.len() as u64).to_le_bytes())?;
        for c in self.coeffs() {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self, SpectralError> {
        let mut head = [0u8; 20];
        r.read_exact(&mut head)?;
        if &head[..4] != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = u16::from_le_bytes([head[4], head[5]]);
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let n = head[6] as usize;
        let big = u32::from_le_bytes(head[8..12].try_into().expect("4 bytes"));
        let count = u64::from_le_bytes(head[12..20].try_into().expect("8 bytes"));
        let lat = FrequencyLattice::new(n, big)?;
        if count != lat.len() as u64 {
            return Err(SpectralError::Length { expected: lat.len(), got: count as usize });
        }
        let mut buf = vec![0u8; 16 * lat.len()];
        r.read_exact(&mut buf)?;
        let coeffs = buf
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                    f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
                )
            })
            .collect();
        SpectralElement::new(lat, coeffs)
    }
}

fn bad(msg: impl Into<String>) -> SpectralError {
    SpectralError::Format(msg.into())
}
