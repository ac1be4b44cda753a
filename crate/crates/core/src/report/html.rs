//! HTML for the Markdown subset emitted by `render_markdown`. Every piece of
//! text passes through `escape`, so model output never becomes markup.

use std::fmt::Write as _;

const STYLE: &str = "body{font-family:system-ui,sans-serif;max-width:60rem;margin:2rem auto;padding:0 1rem;line-height:1.5;color:#222}\
table{border-collapse:collapse}th,td{border:1px solid #ccc;padding:.3rem .6rem;text-align:left}\
pre{background:#f6f8fa;padding:.6rem;overflow-x:auto}code{font-family:ui-monospace,monospace}\
.tok-kw{color:#a626a4}.tok-str{color:#50a14f}.tok-com{color:#a0a1a7;font-style:italic}.tok-num{color:#986801}";

const PY_KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue",
    "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import",
    "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while",
    "with", "yield",
];

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
}

/// Code spans, `**strong**`, `*em*` and backslash escapes.
fn inline(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::new();
    let mut plain = String::new();
    let mut open_strong = false;
    let mut open_em = false;
    let mut i = 0;
    let flush = |plain: &mut String, out: &mut String| {
        out.push_str(&escape(plain));
        plain.clear();
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '\\' && i + 1 < chars.len() && is_punct(chars[i + 1]) {
            plain.push(chars[i + 1]);
            i += 2;
        } else if c == '`' {
            let run = chars[i..].iter().take_while(|&&c| c == '`').count();
            let close = (i + run..chars.len()).find(|&j| {
                chars[j..].iter().take_while(|&&c| c == '`').count() == run
                    && (j == 0 || chars[j - 1] != '`')
            });
            match close {
                Some(j) => {
                    flush(&mut plain, &mut out);
                    let code: String = chars[i + run..j].iter().collect();
                    let _ = write!(out, "<code>{}</code>", escape(&code));
                    i = j + run;
                }
                None => {
                    plain.extend(&chars[i..i + run]);
                    i += run;
                }
            }
        } else if c == '*' && chars.get(i + 1) == Some(&'*') {
            let has_close = open_strong || chars[i + 2..].windows(2).any(|w| w == ['*', '*']);
            if has_close {
                flush(&mut plain, &mut out);
                out.push_str(if open_strong { "</strong>" } else { "<strong>" });
                open_strong = !open_strong;
            } else {
                plain.push_str("**");
            }
            i += 2;
        } else if c == '*' {
            let has_close = open_em || chars[i + 1..].contains(&'*');
            if has_close {
                flush(&mut plain, &mut out);
                out.push_str(if open_em { "</em>" } else { "<em>" });
                open_em = !open_em;
            } else {
                plain.push('*');
            }
            i += 1;
        } else {
            plain.push(c);
            i += 1;
        }
    }
    flush(&mut plain, &mut out);
    if open_em {
        out.push_str("</em>");
    }
    if open_strong {
        out.push_str("</strong>");
    }
    out
}

/// Token spans for Python source; other languages are escaped verbatim.
fn highlight(code: &str, language: &str) -> String {
    if language != "python" {
        return escape(code);
    }
    let chars: Vec<char> = code.chars().collect();
    let mut out = String::new();
    let mut i = 0;
    let span = |out: &mut String, class: &str, text: &str| {
        let _ = write!(out, "<span class=\"{class}\">{}</span>", escape(text));
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '#' {
            let end = (i..chars.len())
                .find(|&j| chars[j] == '\n')
                .unwrap_or(chars.len());
            span(
                &mut out,
                "tok-com",
                &chars[i..end].iter().collect::<String>(),
            );
            i = end;
        } else if c == '"' || c == '\'' {
            let triple = chars.len() >= i + 3 && chars[i + 1] == c && chars[i + 2] == c;
            let quote = if triple { 3 } else { 1 };
            let mut j = i + quote;
            loop {
                if j >= chars.len() {
                    break;
                }
                if chars[j] == '\\' {
                    j += 2;
                    continue;
                }
                if !triple && chars[j] == '\n' {
                    break;
                }
                if chars[j] == c
                    && (!triple || (chars.get(j + 1) == Some(&c) && chars.get(j + 2) == Some(&c)))
                {
                    j += quote;
                    break;
                }
                j += 1;
            }
            let j = j.min(chars.len());
            span(&mut out, "tok-str", &chars[i..j].iter().collect::<String>());
            i = j;
        } else if c.is_alphabetic() || c == '_' {
            let end = (i..chars.len())
                .find(|&j| !(chars[j].is_alphanumeric() || chars[j] == '_'))
                .unwrap_or(chars.len());
            let word: String = chars[i..end].iter().collect();
            if PY_KEYWORDS.contains(&word.as_str()) {
                span(&mut out, "tok-kw", &word);
            } else {
                out.push_str(&escape(&word));
            }
            i = end;
        } else if c.is_ascii_digit() {
            let end = (i..chars.len())
                .find(|&j| {
                    !(chars[j].is_ascii_alphanumeric() || chars[j] == '.' || chars[j] == '_')
                })
                .unwrap_or(chars.len());
            span(
                &mut out,
                "tok-num",
                &chars[i..end].iter().collect::<String>(),
            );
            i = end;
        } else {
            out.push_str(&escape(&c.to_string()));
            i += 1;
        }
    }
    out
}

/// Split a table row on unescaped pipes, keeping escapes for `inline`.
fn table_cells(line: &str) -> Vec<String> {
    let body = line.trim().trim_start_matches('|');
    let body = body
        .strip_suffix('|')
        .filter(|b| !b.ends_with('\\'))
        .unwrap_or(body);
    let mut cells = Vec::new();
    let mut cell = String::new();
    let mut chars = body.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => {
                cell.push(c);
                if let Some(n) = chars.next() {
                    cell.push(n);
                }
            }
            '|' => cells.push(std::mem::take(&mut cell).trim().to_string()),
            _ => cell.push(c),
        }
    }
    cells.push(cell.trim().to_string());
    cells
}

fn ordered_item(line: &str) -> Option<(usize, &str)> {
    let digits = line.chars().take_while(char::is_ascii_digit).count();
    if digits == 0 {
        return None;
    }
    let rest = line[digits..].strip_prefix(". ")?;
    Some((line[..digits].parse().ok()?, rest))
}

fn fence_open(line: &str) -> Option<(usize, &str)> {
    let run = line.chars().take_while(|&c| c == '`').count();
    (run >= 3).then(|| (run, line[run..].trim()))
}

fn is_block_start(line: &str) -> bool {
    line.starts_with('#')
        || line.starts_with("- ")
        || line.starts_with('|')
        || ordered_item(line).is_some()
        || fence_open(line).is_some()
}

/// Standalone HTML document for a report's Markdown.
pub fn render_html(markdown: &str) -> String {
    let lines: Vec<&str> = markdown.lines().collect();
    let mut title = String::from("Report");
    let mut body = String::new();
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        if line.trim().is_empty() {
            i += 1;
        } else if let Some((run, language)) = fence_open(line) {
            let mut code = Vec::new();
            i += 1;
            while i < lines.len() && fence_open(lines[i]) != Some((run, "")) {
                code.push(lines[i]);
                i += 1;
            }
            i += 1;
            let class = if language.is_empty() {
                String::new()
            } else {
                format!(" class=\"language-{}\"", escape(language))
            };
            let _ = writeln!(
                body,
                "<pre><code{class}>{}</code></pre>",
                highlight(&code.join("\n"), language)
            );
        } else if let Some(level) = ["### ", "## ", "# "]
            .iter()
            .position(|p| line.starts_with(p))
        {
            let level = 3 - level;
            let text = &line[level + 1..];
            if level == 1 {
                title = escape(text);
            }
            let _ = writeln!(body, "<h{level}>{}</h{level}>", inline(text));
            i += 1;
        } else if line.starts_with('|') {
            let header = table_cells(line);
            i += 1;
            if i < lines.len() && lines[i].starts_with("|-") {
                i += 1;
            }
            body.push_str("<table>\n<thead><tr>");
            for cell in &header {
                let _ = write!(body, "<th>{}</th>", inline(cell));
            }
            body.push_str("</tr></thead>\n<tbody>\n");
            while i < lines.len() && lines[i].starts_with('|') {
                body.push_str("<tr>");
                for cell in table_cells(lines[i]) {
                    let _ = write!(body, "<td>{}</td>", inline(&cell));
                }
                body.push_str("</tr>\n");
                i += 1;
            }
            body.push_str("</tbody>\n</table>\n");
        } else if line.starts_with("- ") {
            body.push_str("<ul>\n");
            while i < lines.len() && lines[i].starts_with("- ") {
                let _ = writeln!(body, "<li>{}</li>", inline(&lines[i][2..]));
                i += 1;
            }
            body.push_str("</ul>\n");
        } else if let Some((start, _)) = ordered_item(line) {
            let _ = writeln!(body, "<ol start=\"{start}\">");
            while i < lines.len() {
                let Some((_, text)) = ordered_item(lines[i]) else {
                    break;
                };
                let _ = write!(body, "<li>{}", inline(text));
                i += 1;
                // A blank line plus a fence attaches the code block to this item.
                let mut j = i;
                while j < lines.len() && lines[j].trim().is_empty() {
                    j += 1;
                }
                if let Some((run, language)) = lines.get(j).and_then(|l| fence_open(l)) {
                    let mut code = Vec::new();
                    j += 1;
                    while j < lines.len() && fence_open(lines[j]) != Some((run, "")) {
                        code.push(lines[j]);
                        j += 1;
                    }
                    i = j + 1;
                    let _ = write!(
                        body,
                        "<pre><code class=\"language-{}\">{}</code></pre>",
                        escape(language),
                        highlight(&code.join("\n"), language)
                    );
                    while i < lines.len() && lines[i].trim().is_empty() {
                        i += 1;
                    }
                } else if lines.get(j).is_some_and(|l| ordered_item(l).is_some()) {
                    i = j;
                }
                body.push_str("</li>\n");
            }
            body.push_str("</ol>\n");
        } else {
            let mut para = vec![line];
            i += 1;
            while i < lines.len() && !lines[i].trim().is_empty() && !is_block_start(lines[i]) {
                para.push(lines[i]);
                i += 1;
            }
            let text: Vec<String> = para.iter().map(|l| inline(l)).collect();
            let _ = writeln!(body, "<p>{}</p>", text.join("<br>\n"));
        }
    }
    format!(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{title}</title>\n<style>{STYLE}</style>\n</head>\n<body>\n{body}</body>\n</html>\n"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_markup_and_escapes() {
        assert_eq!(
            inline("**a** and *b* `<c>`"),
            "<strong>a</strong> and <em>b</em> <code>&lt;c&gt;</code>"
        );
        assert_eq!(inline("\\## x \\| y"), "## x | y");
        assert_eq!(inline("<script>"), "&lt;script&gt;");
    }

    #[test]
    fn python_tokens() {
        let h = highlight("def f(x):  # c\n    return 'a' + 1", "python");
        assert!(h.contains("<span class=\"tok-kw\">def</span>"));
        assert!(h.contains("<span class=\"tok-com\"># c</span>"));
        assert!(h.contains("<span class=\"tok-str\">&#39;a&#39;</span>"));
        assert!(h.contains("<span class=\"tok-num\">1</span>"));
    }

    #[test]
    fn table_cells_respect_escapes() {
        assert_eq!(table_cells("| a | b \\| c | d |"), ["a", "b \\| c", "d"]);
    }
}
