use serde_json::Value;

/// Result of one command: a machine-readable record and its table rendering.
pub struct Report {
    pub record: Value,
    pub text: String,
}

impl Report {
    pub fn new(record: Value, text: String) -> Self {
        Self { record, text }
    }
}

/// Left-aligned columns separated by two spaces.
pub fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let mut width: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (c, cell) in r.iter().enumerate().take(cols) {
            width[c] = width[c].max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (c, cell) in cells.iter().enumerate() {
            if c + 1 == cells.len() {
                s.push_str(cell);
            } else {
                s.push_str(&format!("{cell:<w$}  ", w = width[c]));
            }
        }
        s.trim_end().to_string()
    };
    let mut out = vec![line(headers.to_vec())];
    out.push(line(width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect()));
    for r in rows {
        out.push(line(r.iter().map(String::as_str).collect()));
    }
    out.join("\n")
}

/// `key: value` lines with aligned values.
pub fn fields(pairs: &[(&str, String)]) -> String {
    let w = pairs.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    pairs.iter().map(|(k, v)| format!("{k:<w$}  {v}")).collect::<Vec<_>>().join("\n")
}

pub fn show_vec<T: std::fmt::Display>(v: &[T]) -> String {
    format!("[{}]", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "))
}

pub fn matrix_table<T: std::fmt::Display>(corner: &str, rows: &[String], cols: &[String], m: &[Vec<T>]) -> String {
    let mut headers = vec![corner];
    headers.extend(cols.iter().map(String::as_str));
    let body: Vec<Vec<String>> = rows
        .iter()
        .zip(m)
        .map(|(r, vals)| std::iter::once(r.clone()).chain(vals.iter().map(|v| v.to_string())).collect())
        .collect();
    table(&headers, &body)
}
