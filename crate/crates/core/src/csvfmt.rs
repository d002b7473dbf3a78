//! Shared conventions for the CSV files the crate writes.

use std::io::Write;

/// First line of every CSV the crate emits.
pub const SCHEMA_LINE: &str = "# schema=1";

/// A real with 17 significant digits.
pub fn real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Writes the schema comment and the header row.
pub fn header<W: Write>(w: &mut W, columns: &[&str]) -> std::io::Result<()> {
    writeln!(w, "{SCHEMA_LINE}")?;
    writeln!(w, "{}", columns.join(","))
}

/// CSV reader that skips `#` comment lines.
pub fn reader<R: std::io::Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(real(2.0 / 3.0), "6.6666666666666663e-1");
        assert_eq!(real(1.0), "1.0000000000000000e0");
        assert_eq!(real(f64::INFINITY), "inf");
        let x = 0.1 + 0.2;
        assert_eq!(real(x).parse::<f64>().unwrap(), x);
    }
}
