//! CSV and JSON writers. Every float is written with 17 significant
//! digits in exponent form, so values read back bit-exact.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::Formatter;

/// `d.dddddddddddddddde±x`; `NaN`, `inf` and `-inf` for non-finite values.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

struct ExactFloats;

impl Formatter for ExactFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        // serde_json routes non-finite values to `write_null` before this.
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Compact JSON with [`fmt_f64`] floats, `null` for non-finite ones, and a
/// trailing newline.
pub fn to_json(value: &serde_json::Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFloats);
    value.serialize(&mut ser).expect("serializing a Value into memory cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> io::Result<()> {
    fs::write(path, to_json(value))
}

/// Comma separated, LF line ends, header row first.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, &self.text)
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_round_trip_bit_exact() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0, -0.0, f64::MAX] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    #[test]
    fn json_uses_exact_floats_and_null() {
        let v = json!({"x": 0.1, "n": 3, "bad": f64::NAN, "list": [1.5, f64::INFINITY]});
        let s = to_json(&v);
        assert_eq!(
            s,
            "{\"bad\":null,\"list\":[1.5000000000000000e0,null],\"n\":3,\"x\":1.0000000000000001e-1}\n"
        );
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64().unwrap(), 0.1);
    }

    #[test]
    fn csv_layout() {
        let mut c = Csv::new(&["a", "b"]);
        c.row(&[fmt_f64(1.0), "ok".into()]);
        assert_eq!(c.as_str(), "a,b\n1.0000000000000000e0,ok\n");
    }
}
