use thiserror::Error;

use super::CodeUnit;

/// A line-aligned slice of a unit. Lines are 1-based and inclusive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chunk {
    pub unit_path: String,
    pub index: usize,
    pub start_line: usize,
    pub end_line: usize,
    pub content: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChunkError {
    #[error(
        "line {line} has {chars} characters, more than the {max_chars}-character chunk budget"
    )]
    LineTooLong {
        line: usize,
        chars: usize,
        max_chars: usize,
    },
    #[error("an overlap of {overlap} lines leaves no room for new lines after line {line}")]
    OverlapTooLarge { overlap: usize, line: usize },
}

/// Greedy line packing with a fixed line overlap between neighbours.
///
/// Each chunk takes the longest run of whole lines (newlines included)
/// whose character count fits `max_chars`; the next chunk restarts
/// `overlap_lines` lines before the previous end. Dropping the first
/// `overlap_lines` lines of every chunk after the first and concatenating
/// gives back the unit content exactly. Empty content yields no chunks.
pub fn chunk_unit(
    unit: &CodeUnit,
    max_chars: usize,
    overlap_lines: usize,
) -> Result<Vec<Chunk>, ChunkError> {
    let lines: Vec<&str> = unit.content.split_inclusive('\n').collect();
    let widths: Vec<usize> = lines.iter().map(|l| l.chars().count()).collect();
    if let Some((idx, &chars)) = widths.iter().enumerate().find(|(_, &w)| w > max_chars) {
        return Err(ChunkError::LineTooLong {
            line: idx + 1,
            chars,
            max_chars,
        });
    }

    let mut chunks = Vec::new();
    let mut start = 0;
    let mut prev_end = 0;
    while start < lines.len() {
        let mut end = start;
        let mut used = 0;
        while end < lines.len() && used + widths[end] <= max_chars {
            used += widths[end];
            end += 1;
        }
        if !chunks.is_empty() && end <= prev_end {
            return Err(ChunkError::OverlapTooLarge {
                overlap: overlap_lines,
                line: prev_end,
            });
        }
        chunks.push(Chunk {
            unit_path: unit.rel_path.clone(),
            index: chunks.len(),
            start_line: start + 1,
            end_line: end,
            content: lines[start..end].concat(),
        });
        if end == lines.len() {
            break;
        }
        if overlap_lines >= end - start {
            return Err(ChunkError::OverlapTooLarge {
                overlap: overlap_lines,
                line: end,
            });
        }
        prev_end = end;
        start = end - overlap_lines;
    }
    Ok(chunks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(text: &str) -> CodeUnit {
        CodeUnit::new("m.py", text)
    }

    #[test]
    fn fitting_unit_is_one_chunk() {
        let text: String = (0..10)
            .map(|i| format!("line_{i:02} = {:>9}\n", i))
            .collect();
        assert_eq!(text.len(), 200);
        let chunks = chunk_unit(&unit(&text), 1000, 10).unwrap();
        assert_eq!(chunks.len(), 1);
        assert_eq!((chunks[0].start_line, chunks[0].end_line), (1, 10));
        assert_eq!(chunks[0].content, text);
    }

    #[test]
    fn oversized_line_is_named() {
        let text = "x".repeat(5000);
        assert_eq!(
            chunk_unit(&unit(&text), 1000, 2),
            Err(ChunkError::LineTooLong {
                line: 1,
                chars: 5000,
                max_chars: 1000
            })
        );
    }

    #[test]
    fn empty_content_has_no_chunks() {
        assert!(chunk_unit(&unit(""), 10, 2).unwrap().is_empty());
    }

    #[test]
    fn overlap_must_leave_progress() {
        let text = "aaaa\n".repeat(10);
        assert!(matches!(
            chunk_unit(&unit(&text), 10, 2),
            Err(ChunkError::OverlapTooLarge { .. })
        ));
    }

    #[test]
    fn final_line_without_newline() {
        let chunks = chunk_unit(&unit("ab\ncd\nef"), 6, 1).unwrap();
        let spans: Vec<_> = chunks.iter().map(|c| (c.start_line, c.end_line)).collect();
        assert_eq!(spans, [(1, 2), (2, 3)]);
        assert_eq!(chunks[1].content, "cd\nef");
    }
}
