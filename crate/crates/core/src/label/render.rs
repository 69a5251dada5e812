use std::fmt::Write;

use super::{CareLabel, Mark, MeasuredValue};
use crate::canonical::to_canonical_json;
use crate::checks::Expectation;
use crate::error::Result;
use crate::knowledge::{Category, Rating};

/// Chip fill for a rating.
pub fn rating_color(rating: Rating) -> &'static str {
    match rating {
        Rating::A => "#1a9850",
        Rating::B => "#91cf60",
        Rating::C => "#fc8d59",
        Rating::D => "#d73027",
        Rating::Neutral => "#bdbdbd",
    }
}

const PASS_COLOR: &str = "#1a9850";
const FAIL_COLOR: &str = "#d73027";

pub fn render_json(label: &CareLabel) -> Result<String> {
    to_canonical_json(label)
}

fn category_title(c: Category) -> &'static str {
    match c {
        Category::Expressivity => "Expressivity",
        Category::Usability => "Usability",
        Category::Reliability => "Reliability",
        Category::Runtime => "Runtime",
        Category::Memory => "Memory",
    }
}

/// Four significant digits, plain for moderate magnitudes.
fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !(1e-2..1e4).contains(&v.abs()) {
        return format!("{v:.3e}");
    }
    let decimals = (3 - v.abs().log10().floor() as i32).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn format_measured(m: &MeasuredValue) -> String {
    match m.value {
        Some(v) => format!("{} {}", format_number(v), m.unit),
        None => "n/a".into(),
    }
}

fn grade_str(m: &MeasuredValue) -> &'static str {
    m.grade.map_or("-", Rating::as_str)
}

fn table(out: &mut String, rows: &[Vec<String>]) {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|i| {
            rows.iter()
                .filter_map(|r| r.get(i))
                .map(|c| c.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{c:<w$}", w = widths[i]))
            .collect();
        let _ = writeln!(out, "  {}", line.join("  ").trim_end());
    }
}

/// Plain-text label with aligned columns.
pub fn render_text(label: &CareLabel) -> String {
    let mut out = String::new();
    let t = &label.theory;
    let imp = &label.implementation;
    let _ = writeln!(out, "CARE LABEL  {}", label.configuration.label());
    if let Some(ts) = &label.timestamp {
        let _ = writeln!(out, "issued      {ts}");
    }
    let _ = writeln!(out, "\nTHEORY  {}\n  {}\n", t.method_name, t.description);
    let mut rows = vec![vec!["category".to_string(), "rating".to_string()]];
    rows.extend(
        t.ratings
            .iter()
            .map(|(c, r)| vec![category_title(*c).to_string(), r.as_str().to_string()]),
    );
    table(&mut out, &rows);
    let badges: Vec<&str> = t.badges.iter().map(|b| b.name.as_str()).collect();
    let _ = writeln!(
        out,
        "  badges: {}",
        if badges.is_empty() {
            "none".into()
        } else {
            badges.join(", ")
        }
    );

    let env = &imp.environment;
    let _ = writeln!(
        out,
        "\nIMPLEMENTATION  {} {} ({} backend)\n  cpu: {}\n  os: {}",
        imp.name, imp.version, imp.inference_backend, env.cpu_model, env.os
    );
    match env.power_watts {
        Some(w) => {
            let _ = writeln!(out, "  meter: {} at {} W", env.meter, format_number(w));
        }
        None => {
            let _ = writeln!(out, "  meter: {}", env.meter);
        }
    }
    if let Some(w) = &env.meter_warning {
        let _ = writeln!(out, "  warning: {w}");
    }
    out.push('\n');
    let marks = &imp.checkmarks;
    let mut rows = vec![vec!["check".to_string(), "mark".to_string()]];
    for (name, mark) in [
        ("reliability", marks.reliability),
        ("runtime", marks.runtime),
        ("memory", marks.memory),
    ] {
        rows.push(vec![name.to_string(), mark.as_str().to_string()]);
    }
    table(&mut out, &rows);
    out.push('\n');
    let ms = &imp.measurements;
    let reference = ms
        .reference_side
        .map_or("none".to_string(), |n| format!("{n}x{n} grid"));
    let _ = writeln!(out, "  measured on: {reference}");
    let mut rows = vec![vec!["resource".to_string(), "value".to_string(), "grade".to_string()]];
    for (name, m) in [("runtime", &ms.runtime), ("memory", &ms.memory), ("energy", &ms.energy)] {
        rows.push(vec![name.to_string(), format_measured(m), grade_str(m).to_string()]);
    }
    table(&mut out, &rows);

    let a = &label.audit;
    let _ = writeln!(
        out,
        "\nAUDIT  seed {}  db schema {}  sides 2..{}  samples {}",
        a.seed, a.db_schema_version, a.suite.max_side, a.suite.samples_per_size
    );
    let mut rows = vec![vec![
        "check".to_string(),
        "result".to_string(),
        "metric".to_string(),
        "expected".to_string(),
        "datasets".to_string(),
    ]];
    for c in &a.checks {
        let expected = match c.threshold_or_expected {
            Expectation::Threshold(t) => format!("< {}", format_number(t)),
            Expectation::Class(class) => class.to_string(),
        };
        let metric = match (&c.fit, c.metric) {
            (Some(fit), _) => format!("fit {}{}", fit.best, if fit.decisive { "" } else { "?" }),
            (None, Some(m)) => format_number(m),
            (None, None) => "n/a".into(),
        };
        let passed = c.per_dataset.iter().filter(|d| d.passed).count();
        rows.push(vec![
            c.check_id.name().to_string(),
            if c.passed { "pass" } else { "fail" }.to_string(),
            metric,
            expected,
            format!("{passed}/{}", c.per_dataset.len()),
        ]);
    }
    table(&mut out, &rows);
    for e in &a.stage_errors {
        let _ = writeln!(out, "  error in {}: {}", e.stage, e.message);
    }
    out
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn truncate(s: &str, max: usize) -> String {
    if s.chars().count() <= max {
        s.to_string()
    } else {
        let mut t: String = s.chars().take(max - 3).collect();
        t.push_str("...");
        t
    }
}

/// Greedy word wrap; the last line is truncated if text remains.
fn wrap(s: &str, width: usize, max_lines: usize) -> Vec<String> {
    let mut lines: Vec<String> = Vec::new();
    let mut current = String::new();
    for word in s.split_whitespace() {
        if !current.is_empty() && current.chars().count() + 1 + word.chars().count() > width {
            lines.push(std::mem::take(&mut current));
        }
        if !current.is_empty() {
            current.push(' ');
        }
        current.push_str(word);
    }
    if !current.is_empty() {
        lines.push(current);
    }
    if lines.len() > max_lines {
        let rest = lines.split_off(max_lines - 1).join(" ");
        lines.push(truncate(&rest, width));
    }
    lines
}

fn hexagon(out: &mut String, id: &str, cx: f64, cy: f64, r: f64, rating: Option<Rating>) {
    let points: Vec<String> = (0..6)
        .map(|k| {
            let a = std::f64::consts::PI / 3.0 * k as f64 - std::f64::consts::PI / 2.0;
            format!("{:.1},{:.1}", cx + r * a.cos(), cy + r * a.sin())
        })
        .collect();
    let fill = rating.map_or("#ffffff", rating_color);
    let letter = rating.map_or("-", |r| if r == Rating::Neutral { "N" } else { r.as_str() });
    let _ = writeln!(
        out,
        r##"  <polygon id="{id}" class="chip" points="{}" fill="{fill}" stroke="#333333" stroke-width="1.5"/>"##,
        points.join(" ")
    );
    let _ = writeln!(
        out,
        r#"  <text x="{cx:.1}" y="{:.1}" text-anchor="middle" class="chip-letter">{letter}</text>"#,
        cy + 6.0
    );
}

fn checkmark(out: &mut String, id: &str, x: f64, y: f64, mark: Mark) {
    let (color, glyph) = match mark {
        Mark::Pass => (PASS_COLOR, format!("M{:.1},{:.1} l7,8 l13,-16", x - 10.0, y)),
        Mark::Fail => (
            FAIL_COLOR,
            format!(
                "M{:.1},{:.1} l16,16 M{:.1},{:.1} l-16,16",
                x - 8.0,
                y - 8.0,
                x + 8.0,
                y - 8.0
            ),
        ),
    };
    let _ = writeln!(
        out,
        r##"  <rect x="{:.1}" y="{:.1}" width="28" height="28" rx="4" fill="#ffffff" stroke="#333333"/>"##,
        x - 14.0,
        y - 14.0
    );
    let _ = writeln!(
        out,
        r#"  <path id="{id}" class="{}" d="{glyph}" fill="none" stroke="{color}" stroke-width="4" stroke-linecap="round"/>"#,
        mark.as_str()
    );
}

/// Two-segment SVG label: expert ratings and badges on the left, checks
/// and measurements on the right.
pub fn render_svg(label: &CareLabel) -> String {
    const W: f64 = 760.0;
    const H: f64 = 460.0;
    let t = &label.theory;
    let imp = &label.implementation;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="Helvetica, Arial, sans-serif">"#
    );
    out.push_str(
        "  <style>\n    .title { font-size: 20px; font-weight: bold; }\n    .head { font-size: 15px; font-weight: bold; }\n    .small { font-size: 11px; fill: #444444; }\n    .cat { font-size: 12px; }\n    .chip-letter { font-size: 17px; font-weight: bold; fill: #ffffff; }\n  </style>\n",
    );
    let _ = writeln!(
        out,
        r##"  <rect x="1" y="1" width="{}" height="{}" rx="10" fill="#fafafa" stroke="#333333" stroke-width="2"/>"##,
        W - 2.0,
        H - 2.0
    );
    let _ = writeln!(
        out,
        r##"  <line x1="{0}" y1="50" x2="{0}" y2="{1}" stroke="#999999"/>"##,
        W / 2.0,
        H - 16.0
    );
    let _ = writeln!(
        out,
        r#"  <text x="20" y="34" class="title">{}</text>"#,
        escape(&truncate(&t.method_name, 60))
    );

    out.push_str("  <g id=\"theory\">\n");
    let _ = writeln!(out, r#"  <text x="20" y="74" class="head">Theory</text>"#);
    for (k, line) in wrap(&t.description, 58, 2).iter().enumerate() {
        let _ = writeln!(
            out,
            r#"  <text x="20" y="{:.1}" class="small">{}</text>"#,
            94.0 + 14.0 * k as f64,
            escape(line)
        );
    }
    for (i, cat) in Category::ALL.into_iter().enumerate() {
        let cx = 48.0 + 70.0 * i as f64;
        let rating = t.ratings.get(&cat).copied();
        hexagon(&mut out, &format!("rating-{}", cat.as_str()), cx, 150.0, 26.0, rating);
        let _ = writeln!(
            out,
            r#"  <text x="{cx:.1}" y="196" text-anchor="middle" class="cat">{}</text>"#,
            category_title(cat)
        );
    }
    let _ = writeln!(out, r#"  <text x="20" y="240" class="head">Badges</text>"#);
    if t.badges.is_empty() {
        let _ = writeln!(out, r#"  <text x="20" y="264" class="small">none</text>"#);
    }
    for (i, b) in t.badges.iter().enumerate() {
        let y = 254.0 + 44.0 * i as f64;
        let _ = writeln!(
            out,
            r##"  <g id="badge-{}"><circle cx="38" cy="{:.1}" r="16" fill="#ffffff" stroke="#333333" stroke-dasharray="3,2"/><text x="38" y="{:.1}" text-anchor="middle" class="small">{}</text><text x="64" y="{:.1}" class="cat">{}</text></g>"##,
            escape(&b.id),
            y + 16.0,
            y + 20.0,
            escape(&b.id.chars().next().unwrap_or('?').to_uppercase().to_string()),
            y + 20.0,
            escape(&b.name)
        );
    }
    out.push_str("  </g>\n");

    let x0 = W / 2.0 + 20.0;
    out.push_str("  <g id=\"implementation\">\n");
    let _ = writeln!(out, r#"  <text x="{x0}" y="74" class="head">Implementation</text>"#);
    let env = &imp.environment;
    let meter = match env.power_watts {
        Some(w) => format!("{} meter, {} W", env.meter, format_number(w)),
        None => format!("{} meter", env.meter),
    };
    for (k, line) in [
        format!("{} {} ({})", imp.name, imp.version, imp.inference_backend),
        truncate(&env.cpu_model, 56),
        truncate(&env.os, 56),
        meter,
    ]
    .iter()
    .enumerate()
    {
        let _ = writeln!(
            out,
            r#"  <text x="{x0}" y="{:.1}" class="small">{}</text>"#,
            94.0 + 15.0 * k as f64,
            escape(line)
        );
    }
    let marks = &imp.checkmarks;
    for (i, (name, mark)) in [
        ("reliability", marks.reliability),
        ("runtime", marks.runtime),
        ("memory", marks.memory),
    ]
    .into_iter()
    .enumerate()
    {
        let y = 186.0 + 40.0 * i as f64;
        let _ = writeln!(
            out,
            r#"  <text x="{x0}" y="{:.1}" class="cat">{} bound</text>"#,
            y + 5.0,
            name
        );
        checkmark(&mut out, &format!("check-{name}"), W - 50.0, y, mark);
    }
    let ms = &imp.measurements;
    let reference = ms
        .reference_side
        .map_or("no reference".to_string(), |n| format!("measured on {n}x{n} grid"));
    let _ = writeln!(out, r#"  <text x="{x0}" y="322" class="small">{}</text>"#, reference);
    for (i, (name, m)) in [("runtime", &ms.runtime), ("memory", &ms.memory), ("energy", &ms.energy)]
        .into_iter()
        .enumerate()
    {
        let cx = x0 + 30.0 + 118.0 * i as f64;
        hexagon(&mut out, &format!("grade-{name}"), cx, 364.0, 24.0, m.grade);
        let _ = writeln!(
            out,
            r#"  <text x="{cx:.1}" y="406" text-anchor="middle" class="cat">{name}</text>"#
        );
        let _ = writeln!(
            out,
            r#"  <text x="{cx:.1}" y="424" text-anchor="middle" class="small">{}</text>"#,
            escape(&format_measured(m))
        );
    }
    out.push_str("  </g>\n");
    if let Some(ts) = &label.timestamp {
        let _ = writeln!(
            out,
            r#"  <text x="20" y="{:.1}" class="small">issued {}</text>"#,
            H - 14.0,
            escape(ts)
        );
    }
    out.push_str("</svg>\n");
    out
}
