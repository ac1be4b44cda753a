use std::fmt::Write as _;

use super::{FindingEntry, Report, SECTIONS};

/// Neutralise line starts that would open a heading, fence, list or quote,
/// so model text cannot add structure to the report.
pub fn escape_inline(text: &str) -> String {
    text.lines()
        .map(|line| {
            let trimmed = line.trim_start();
            let indent = &line[..line.len() - trimmed.len()];
            if trimmed.starts_with('#')
                || trimmed.starts_with("```")
                || trimmed.starts_with('>')
                || trimmed.starts_with('|')
                || is_list_marker(trimmed)
            {
                format!("{indent}\\{trimmed}")
            } else {
                line.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn is_list_marker(line: &str) -> bool {
    if line.starts_with("- ") || line.starts_with("* ") || line.starts_with("+ ") {
        return true;
    }
    let digits = line.chars().take_while(char::is_ascii_digit).count();
    digits > 0 && line[digits..].starts_with(". ")
}

/// One-line table cell with pipes escaped.
pub fn escape_table_cell(text: &str) -> String {
    text.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .replace('\\', "\\\\")
        .replace('|', "\\|")
}

/// Single-line list item text.
fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn fence_for(code: &str) -> String {
    let mut longest = 0;
    let mut run = 0;
    for c in code.chars() {
        run = if c == '`' { run + 1 } else { 0 };
        longest = longest.max(run);
    }
    "`".repeat((longest + 1).max(3))
}

fn write_findings(out: &mut String, entries: &[FindingEntry]) {
    if entries.is_empty() {
        out.push_str("No issues identified.\n\n");
        return;
    }
    for (i, e) in entries.iter().enumerate() {
        let f = &e.finding;
        let codes = if f.lint_codes.is_empty() {
            String::new()
        } else {
            format!(
                " ({})",
                f.lint_codes
                    .iter()
                    .map(|c| format!("`{c}`"))
                    .collect::<Vec<_>>()
                    .join(", ")
            )
        };
        let _ = writeln!(
            out,
            "{}. **[{}]** `{}` [{}] {}{}",
            i + 1,
            f.severity,
            f.location(),
            f.dimension,
            one_line(&f.description),
            codes
        );
        if let Some(s) = &e.snippet {
            let fence = fence_for(&s.code);
            let _ = writeln!(out, "\n{fence}{}\n{}\n{fence}", s.language, s.code);
        }
        out.push('\n');
    }
}

/// Deterministic Markdown: a title, then the six `##` sections in order.
pub fn render_markdown(r: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {}\n", one_line(&r.title));

    let _ = writeln!(out, "## {}\n", SECTIONS[0]);
    let m = &r.meta;
    let _ = writeln!(out, "- **Source:** {}", one_line(&m.source));
    let _ = writeln!(out, "- **Input type:** {}", m.modality);
    if let Some((name, reference)) = &m.repository {
        let _ = writeln!(
            out,
            "- **Repository:** {} at `{}`",
            one_line(name),
            reference
        );
    }
    let _ = writeln!(out, "- **Files assessed:** {}", m.files_assessed);
    if m.files_skipped > 0 {
        let _ = writeln!(out, "- **Files skipped:** {}", m.files_skipped);
    }
    let status = if r.is_degraded() {
        "degraded"
    } else {
        "complete"
    };
    let _ = writeln!(out, "- **Report status:** {status}");
    for flag in &r.degraded_flags {
        let _ = writeln!(out, "- **Degraded:** {}", one_line(flag));
    }
    for notice in &r.notices {
        let _ = writeln!(out, "- **Notice:** {}", one_line(notice));
    }
    let _ = writeln!(out, "\n{}\n", escape_inline(&r.executive_summary));

    let _ = writeln!(out, "## {}\n", SECTIONS[1]);
    out.push_str("| Dimension | Score | Rationale |\n|---|---|---|\n");
    for s in r.scores.iter() {
        let _ = writeln!(
            out,
            "| {} | {:.1} | {} |",
            s.dimension.label(),
            s.value,
            escape_table_cell(&s.rationale)
        );
    }
    out.push('\n');
    if !r.per_file.is_empty() {
        out.push_str("Per-file scores (correctness / security / style / maintainability):\n\n");
        for (path, card) in &r.per_file {
            let values: Vec<String> = card.iter().map(|s| format!("{:.1}", s.value)).collect();
            let _ = writeln!(out, "- `{}`: {}", path, values.join(" / "));
        }
        out.push('\n');
    }

    let _ = writeln!(out, "## {}\n", SECTIONS[2]);
    out.push_str("### Static analysis\n\n");
    if r.lint.is_empty() {
        out.push_str("No files were linted.\n\n");
    }
    for l in &r.lint {
        let _ = writeln!(
            out,
            "**{}**: {}\n",
            one_line(&l.unit_path),
            one_line(&l.headline)
        );
        for msg in &l.messages {
            let _ = writeln!(out, "- {}", one_line(msg));
        }
        if !l.messages.is_empty() {
            out.push('\n');
        }
    }
    out.push_str("### Findings\n\n");
    write_findings(&mut out, &r.correctness_findings);

    let _ = writeln!(out, "## {}\n", SECTIONS[3]);
    write_findings(&mut out, &r.style_findings);

    let _ = writeln!(out, "## {}\n", SECTIONS[4]);
    if r.recommendations.is_empty() {
        out.push_str("No recommendations.\n\n");
    }
    for rec in &r.recommendations {
        let _ = writeln!(
            out,
            "{}. **[{} / {} impact]** {}",
            rec.rank,
            rec.severity,
            rec.impact,
            one_line(&rec.action)
        );
    }
    if !r.recommendations.is_empty() {
        out.push('\n');
    }

    let _ = writeln!(out, "## {}\n", SECTIONS[5]);
    let _ = writeln!(out, "{}", escape_inline(r.conclusion.trim()));
    out
}
