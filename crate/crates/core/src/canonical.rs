use serde::Serialize;

use crate::error::Result;

/// Pretty-printed JSON with lexicographically sorted object keys and a
/// trailing newline. Floats use the shortest round-trip representation.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    // serde_json::Map is ordered by key unless `preserve_order` is enabled
    let tree = serde_json::to_value(value)?;
    let mut out = serde_json::to_string_pretty(&tree)?;
    out.push('\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Unsorted {
        zeta: u8,
        alpha: f64,
    }

    #[test]
    fn keys_are_sorted() {
        let s = to_canonical_json(&Unsorted { zeta: 1, alpha: 0.1 }).unwrap();
        assert!(s.find("alpha").unwrap() < s.find("zeta").unwrap());
        assert!(s.ends_with("}\n"));
    }
}
