//! SRT subtitle parsing.
//!
//! Cue timing lines must match `HH:MM:SS,mmm --> HH:MM:SS,mmm`. The hours
//! field takes two or more digits; minutes and seconds are two digits below
//! 60; milliseconds are exactly three digits. Lenient mode also accepts `.`
//! as the millisecond separator.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, SrtError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtitleSegment {
    pub index: u32,
    pub begin_s: f64,
    pub end_s: f64,
    pub text: String,
}

impl SubtitleSegment {
    pub fn new(index: u32, begin_s: f64, end_s: f64, text: impl Into<String>) -> Result<Self> {
        let text = text.into().trim().to_string();
        if !(begin_s.is_finite() && end_s.is_finite()) || begin_s < 0.0 || begin_s > end_s {
            return Err(Error::InvalidInput(format!(
                "segment timing must satisfy 0 <= begin <= end, got [{begin_s}, {end_s}]"
            )));
        }
        if text.is_empty() {
            return Err(Error::InvalidInput("segment text must be non-empty".into()));
        }
        Ok(Self {
            index,
            begin_s,
            end_s,
            text,
        })
    }

    /// Midpoint of the segment in seconds.
    pub fn center(&self) -> f64 {
        (self.begin_s + self.end_s) / 2.0
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.begin_s
    }
}

pub fn segment_center(seg: &SubtitleSegment) -> f64 {
    seg.center()
}

/// Segments ordered by start time. Overlaps are allowed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubtitleTrack {
    segments: Vec<SubtitleSegment>,
}

impl SubtitleTrack {
    /// Builds a track, stable-sorting the segments by `begin_s`.
    pub fn new(mut segments: Vec<SubtitleSegment>) -> Self {
        segments.sort_by(|a, b| a.begin_s.total_cmp(&b.begin_s));
        Self { segments }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn segments(&self) -> &[SubtitleSegment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn texts(&self) -> Vec<String> {
        self.segments.iter().map(|s| s.text.clone()).collect()
    }

    /// Render as SRT. Timings are rounded to the millisecond.
    pub fn to_srt(&self) -> String {
        let mut out = String::new();
        for seg in &self.segments {
            let _ = writeln!(out, "{}", seg.index);
            let _ = writeln!(
                out,
                "{} --> {}",
                format_timestamp(seg.begin_s),
                format_timestamp(seg.end_s)
            );
            let _ = writeln!(out, "{}", seg.text);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SrtOptions {
    /// Accept `.` in addition to `,` before the milliseconds.
    pub lenient: bool,
}

pub fn parse_srt(raw: &str) -> Result<SubtitleTrack, SrtError> {
    parse_srt_with(raw, SrtOptions::default())
}

pub fn parse_srt_with(raw: &str, opts: SrtOptions) -> Result<SubtitleTrack, SrtError> {
    let raw = raw.strip_prefix('\u{feff}').unwrap_or(raw);
    let lines: Vec<&str> = raw
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect();

    let mut segments = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        if lines[i].trim().is_empty() {
            i += 1;
            continue;
        }
        let index_line = i + 1;
        let index: u32 = lines[i].trim().parse().map_err(|_| {
            SrtError::new(
                index_line,
                format!("expected a cue number, found `{}`", lines[i].trim()),
            )
        })?;
        i += 1;

        let timing_line = i + 1;
        let Some(timing) = lines.get(i) else {
            return Err(SrtError::new(
                timing_line,
                "missing timing line after cue number",
            ));
        };
        let (begin_ms, end_ms) =
            parse_timing(timing.trim_end(), opts).map_err(|msg| SrtError::new(timing_line, msg))?;
        if begin_ms > end_ms {
            return Err(SrtError::new(timing_line, "cue starts after it ends"));
        }
        i += 1;

        let mut text_lines = Vec::new();
        while i < lines.len() && !lines[i].trim().is_empty() {
            text_lines.push(lines[i].trim());
            i += 1;
        }
        let text = clean_text(&text_lines.join(" "));
        if text.is_empty() {
            continue;
        }
        segments.push(SubtitleSegment {
            index,
            begin_s: begin_ms as f64 / 1000.0,
            end_s: end_ms as f64 / 1000.0,
            text,
        });
    }
    Ok(SubtitleTrack::new(segments))
}

pub fn load_srt(path: impl AsRef<std::path::Path>, opts: SrtOptions) -> Result<SubtitleTrack> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_srt_with(&raw, opts)?)
}

fn parse_timing(line: &str, opts: SrtOptions) -> std::result::Result<(u64, u64), String> {
    let (begin, end) = line
        .split_once(" --> ")
        .ok_or_else(|| format!("expected `HH:MM:SS,mmm --> HH:MM:SS,mmm`, found `{line}`"))?;
    let begin = parse_timestamp(begin, opts)?;
    let end = parse_timestamp(end, opts)?;
    Ok((begin, end))
}

fn parse_timestamp(ts: &str, opts: SrtOptions) -> std::result::Result<u64, String> {
    let bad = || format!("malformed timestamp `{ts}`");
    let (clock, millis) = ts
        .split_once(',')
        .or_else(|| opts.lenient.then(|| ts.split_once('.')).flatten())
        .ok_or_else(bad)?;
    let mut parts = clock.split(':');
    let (Some(h), Some(m), Some(s), None) =
        (parts.next(), parts.next(), parts.next(), parts.next())
    else {
        return Err(bad());
    };
    let digits = |field: &str, min_len: usize, max_len: Option<usize>| -> Option<u64> {
        let ok_len = field.len() >= min_len && max_len.is_none_or(|max| field.len() <= max);
        if !ok_len || !field.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        field.parse().ok()
    };
    let hours = digits(h, 2, None).ok_or_else(bad)?;
    let minutes = digits(m, 2, Some(2)).filter(|&v| v < 60).ok_or_else(bad)?;
    let seconds = digits(s, 2, Some(2)).filter(|&v| v < 60).ok_or_else(bad)?;
    let millis = digits(millis, 3, Some(3)).ok_or_else(bad)?;
    Ok(((hours * 60 + minutes) * 60 + seconds) * 1000 + millis)
}

/// Strip `<...>` markup and collapse whitespace runs.
fn clean_text(raw: &str) -> String {
    let mut stripped = String::with_capacity(raw.len());
    let mut in_tag = false;
    for ch in raw.chars() {
        match ch {
            '<' => in_tag = true,
            '>' if in_tag => in_tag = false,
            _ if !in_tag => stripped.push(ch),
            _ => {}
        }
    }
    stripped.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn format_timestamp(seconds: f64) -> String {
    let total_ms = (seconds * 1000.0).round() as u64;
    let ms = total_ms % 1000;
    let s = (total_ms / 1000) % 60;
    let m = (total_ms / 60_000) % 60;
    let h = total_ms / 3_600_000;
    format!("{h:02}:{m:02}:{s:02},{ms:03}")
}
