//! JSON and CSV emission with fixed 17-significant-digit floats.

use std::io::{self, Write};

use nmchain::matcore::{ComplexMatrix, C64};
use serde::Serialize;
use serde_json::{json, ser::Formatter, Value};

/// Writes every float as `{:.16e}`, i.e. 17 significant digits, which
/// round-trips any `f64` exactly. Non-finite values become `null`.
struct ExactFloats;

impl Formatter for ExactFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFloats);
    value.serialize(&mut ser).expect("in-memory JSON serialization");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn complex(z: C64) -> Value {
    json!([z.re, z.im])
}

/// Row-major nested array of `[re, im]` pairs.
pub fn matrix(m: &ComplexMatrix) -> Value {
    Value::Array((0..m.rows()).map(|r| Value::Array(m.row(r).iter().map(|&z| complex(z)).collect())).collect())
}
