//! Text rendering helpers. ANSI color is disabled by `ECRV_COLOR=0`.

use ecrv_core::validate::{Report, Verdict};
use std::sync::OnceLock;

#[derive(Clone, Copy)]
pub enum Color {
    Red,
    Green,
    Yellow,
}

fn color_enabled() -> bool {
    static ENABLED: OnceLock<bool> = OnceLock::new();
    *ENABLED.get_or_init(|| std::env::var("ECRV_COLOR").map(|v| v != "0").unwrap_or(true))
}

pub fn paint(text: &str, color: Color) -> String {
    if !color_enabled() {
        return text.to_string();
    }
    let code = match color {
        Color::Red => "31",
        Color::Green => "32",
        Color::Yellow => "33",
    };
    format!("\x1b[{code}m{text}\x1b[0m")
}

pub fn colored_report(report: &Report) -> String {
    let text = report.render_text();
    if !color_enabled() {
        return text;
    }
    let color = match report.verdict {
        Verdict::Consistent | Verdict::Pass => Color::Green,
        Verdict::Inconsistent | Verdict::Violation => Color::Red,
        Verdict::Error => Color::Yellow,
    };
    match text.split_once('\n') {
        Some((head, rest)) => format!("{}\n{rest}", paint(head, color)),
        None => paint(&text, color),
    }
}

/// Walks arbitrary JSON and renders every proof object (conclusion / rule /
/// children) as indented text.
pub fn render_proofs(value: &serde_json::Value, found: &mut usize) {
    if let Some(obj) = value.as_object() {
        if obj.contains_key("conclusion") && obj.contains_key("rule") {
            *found += 1;
            render_proof_node(value, 0);
            return;
        }
        for v in obj.values() {
            render_proofs(v, found);
        }
    } else if let Some(arr) = value.as_array() {
        for v in arr {
            render_proofs(v, found);
        }
    }
}

fn render_proof_node(value: &serde_json::Value, depth: usize) {
    let conclusion = value.get("conclusion").and_then(|v| v.as_str()).unwrap_or("?");
    let rule = value.get("rule").and_then(|v| v.as_str()).unwrap_or("?");
    println!("{}{conclusion}   [{rule}]", "  ".repeat(depth));
    if let Some(children) = value.get("children").and_then(|v| v.as_array()) {
        for c in children {
            render_proof_node(c, depth + 1);
        }
    }
}
