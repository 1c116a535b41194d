//! Minimal CSV emission with a fixed header and deterministic formatting.
//! Floats are written with the shortest round-trip representation, so byte
//! stability follows from value stability.

use std::fmt::Write as _;

pub struct Table {
    header: &'static [&'static str],
    body: String,
    rows: usize,
}

impl Table {
    pub fn new(header: &'static [&'static str]) -> Self {
        Table {
            header,
            body: String::new(),
            rows: 0,
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        assert_eq!(cells.len(), self.header.len(), "row width mismatch");
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                self.body.push(',');
            }
            match cell {
                Cell::Str(s) => {
                    debug_assert!(!s.contains(',') && !s.contains('\n'));
                    self.body.push_str(s);
                }
                Cell::Int(v) => {
                    let _ = write!(self.body, "{v}");
                }
                Cell::Uint(v) => {
                    let _ = write!(self.body, "{v}");
                }
                Cell::Float(v) => {
                    let _ = write!(self.body, "{v}");
                }
                Cell::Bool(v) => {
                    let _ = write!(self.body, "{v}");
                }
            }
        }
        self.body.push('\n');
        self.rows += 1;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        out.push_str(&self.body);
        out
    }
}

pub enum Cell<'a> {
    Str(&'a str),
    Int(i64),
    Uint(u128),
    Float(f64),
    Bool(bool),
}

impl<'a> From<&'a str> for Cell<'a> {
    fn from(s: &'a str) -> Self {
        Cell::Str(s)
    }
}
impl From<f64> for Cell<'_> {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}
impl From<usize> for Cell<'_> {
    fn from(v: usize) -> Self {
        Cell::Uint(v as u128)
    }
}
impl From<u64> for Cell<'_> {
    fn from(v: u64) -> Self {
        Cell::Uint(v as u128)
    }
}
impl From<u128> for Cell<'_> {
    fn from(v: u128) -> Self {
        Cell::Uint(v)
    }
}
impl From<bool> for Cell<'_> {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}
impl From<i64> for Cell<'_> {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_header_and_rows() {
        let mut t = Table::new(&["a", "b", "c"]);
        t.row(&["x".into(), 0.5.into(), 3usize.into()]);
        assert_eq!(t.render(), "a,b,c\nx,0.5,3\n");
        assert_eq!(t.rows(), 1);
    }
}
