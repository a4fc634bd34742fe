//! JSON emission with fixed numeric formatting: every float prints with 15
//! significant digits in scientific notation, so reports are bit-stable
//! across runs and platforms that agree on IEEE 754 arithmetic.

use serde::Serialize;
use std::io;

struct SigFig15;

impl serde_json::ser::Formatter for SigFig15 {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.14e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.14e}")
    }
}

/// Serializes a JSON value with 15-significant-digit floats.
pub fn to_json_string(value: &serde_json::Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFig15);
    value
        .serialize(&mut ser)
        .expect("in-memory JSON serialization cannot fail");
    String::from_utf8(out).expect("serializer emits UTF-8")
}

/// 15-significant-digit scientific formatting for CSV cells.
pub fn format_sig15(value: f64) -> String {
    format!("{value:.14e}")
}
