use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    L,
    C,
    R,
}

impl Symbol {
    fn rank(self) -> i8 {
        match self {
            Symbol::L => 0,
            Symbol::C => 1,
            Symbol::R => 2,
        }
    }

    pub fn of(x: f64, c: f64) -> Symbol {
        if x < c {
            Symbol::L
        } else if x > c {
            Symbol::R
        } else {
            Symbol::C
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Symbol::L => "L",
            Symbol::C => "C",
            Symbol::R => "R",
        };
        f.write_str(s)
    }
}

/// Unimodal order on itineraries: compare at the first difference with
/// L < C < R, reversed when the common prefix holds an odd number of R.
pub fn kneading_cmp(a: &[Symbol], b: &[Symbol]) -> Ordering {
    let mut flips = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        if x != y {
            let ord = x.rank().cmp(&y.rank());
            return if flips % 2 == 0 { ord } else { ord.reverse() };
        }
        if x == Symbol::R {
            flips += 1;
        }
    }
    Ordering::Equal
}

/// Eventually periodic code Θ = prefix · period^∞, indexed from 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KneadingCode {
    pub prefix: Vec<Symbol>,
    pub period: Vec<Symbol>,
}

impl KneadingCode {
    pub fn new(prefix: Vec<Symbol>, period: Vec<Symbol>) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::Parse("code needs a periodic tail".into()));
        }
        if prefix.is_empty() {
            return Err(Error::CodeNotRealizable(
                "a purely periodic code makes c periodic".into(),
            ));
        }
        if prefix.iter().chain(&period).any(|&s| s == Symbol::C) {
            return Err(Error::Parse("codes use only L and R".into()));
        }
        Ok(KneadingCode { prefix, period })
    }

    /// Θ_j for j ≥ 1.
    pub fn symbol(&self, j: usize) -> Symbol {
        assert!(j >= 1);
        let i = j - 1;
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.period[(i - self.prefix.len()) % self.period.len()]
        }
    }

    pub fn first(&self, n: usize) -> Vec<Symbol> {
        (1..=n).map(|j| self.symbol(j)).collect()
    }

    /// Parses codes such as `RL^2R*`, `RLR*`, `RL^2(RL)*` or `R L L (R L)*`.
    /// A trailing `*` marks the periodic tail; `^n` repeats the preceding atom.
    pub fn parse(text: &str) -> Result<Self> {
        let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut atoms: Vec<Vec<Symbol>> = Vec::new();
        let mut tail: Option<Vec<Symbol>> = None;
        let mut i = 0;
        while i < chars.len() {
            if tail.is_some() {
                return Err(Error::Parse(format!("text after periodic tail in {text:?}")));
            }
            let atom = match chars[i] {
                'L' | 'l' => {
                    i += 1;
                    vec![Symbol::L]
                }
                'R' | 'r' => {
                    i += 1;
                    vec![Symbol::R]
                }
                '(' => {
                    let close = chars[i..]
                        .iter()
                        .position(|&c| c == ')')
                        .ok_or_else(|| Error::Parse(format!("unclosed group in {text:?}")))?;
                    let inner: String = chars[i + 1..i + close].iter().collect();
                    i += close + 1;
                    let sub = Self::parse_finite(&inner)?;
                    if sub.is_empty() {
                        return Err(Error::Parse(format!("empty group in {text:?}")));
                    }
                    sub
                }
                other => {
                    return Err(Error::Parse(format!("unexpected {other:?} in code {text:?}")))
                }
            };
            let mut atom = atom;
            if i < chars.len() && chars[i] == '^' {
                let start = i + 1;
                let mut end = start;
                while end < chars.len() && chars[end].is_ascii_digit() {
                    end += 1;
                }
                let n: usize = chars[start..end]
                    .iter()
                    .collect::<String>()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad exponent in {text:?}")))?;
                atom = atom.repeat(n);
                i = end;
            }
            if i < chars.len() && chars[i] == '*' {
                i += 1;
                tail = Some(atom);
            } else {
                atoms.push(atom);
            }
        }
        let period = tail.ok_or_else(|| {
            Error::Parse(format!("code {text:?} lacks a periodic tail marked by '*'"))
        })?;
        KneadingCode::new(atoms.concat(), period)
    }

    fn parse_finite(text: &str) -> Result<Vec<Symbol>> {
        if text.contains('*') {
            return Err(Error::Parse("nested periodic tail".into()));
        }
        let padded = format!("{text}R*");
        let code = Self::parse(&padded)?;
        Ok(code.prefix)
    }
}

impl fmt::Display for KneadingCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.prefix {
            write!(f, "{s}")?;
        }
        if self.period.len() == 1 {
            write!(f, "{}*", self.period[0])
        } else {
            f.write_str("(")?;
            for s in &self.period {
                write!(f, "{s}")?;
            }
            f.write_str(")*")
        }
    }
}
