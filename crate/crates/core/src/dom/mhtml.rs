//! MHTML (MIME `multipart/related`) snapshot reader.
//!
//! Only what is needed to recover the root document: header parsing with
//! folding, `multipart/*` splitting (recursively), the three common transfer
//! encodings and charset transcoding. Bare HTML files are detected by their
//! leading bytes and passed through.

use base64::engine::general_purpose::{GeneralPurpose, GeneralPurposeConfig};
use base64::engine::DecodePaddingMode;
use base64::Engine as _;
use encoding_rs::Encoding;
use serde::{Deserialize, Serialize};

use super::DomError;

const LENIENT_BASE64: GeneralPurpose = GeneralPurpose::new(
    &base64::alphabet::STANDARD,
    GeneralPurposeConfig::new()
        .with_decode_allow_trailing_bits(true)
        .with_decode_padding_mode(DecodePaddingMode::Indifferent),
);

/// Nested multiparts deeper than this are rejected.
const MAX_MULTIPART_DEPTH: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPage {
    pub page_id: String,
    /// Decoded UTF-8 markup of the root document.
    pub html: String,
    pub source_url: Option<String>,
    /// Number of non-HTML parts in the archive.
    pub resource_count: usize,
}

#[derive(Debug, Clone, Default)]
struct Headers(Vec<(String, String)>);

impl Headers {
    fn get(&self, name: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ContentType {
    mime: String,
    params: Vec<(String, String)>,
}

impl ContentType {
    fn param(&self, name: &str) -> Option<&str> {
        self.params
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    fn parse(value: &str) -> ContentType {
        let mut parts = split_params(value).into_iter();
        let mime = parts.next().unwrap_or_default().trim().to_ascii_lowercase();
        let params = parts
            .filter_map(|p| {
                let (k, v) = p.split_once('=')?;
                let v = v.trim();
                let v = v
                    .strip_prefix('"')
                    .and_then(|v| v.strip_suffix('"'))
                    .unwrap_or(v);
                Some((k.trim().to_ascii_lowercase(), v.to_string()))
            })
            .collect();
        ContentType { mime, params }
    }
}

/// Splits on `;` outside double quotes.
fn split_params(value: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    for c in value.chars() {
        match c {
            '"' => {
                quoted = !quoted;
                cur.push(c);
            }
            ';' if !quoted => out.push(std::mem::take(&mut cur)),
            c => cur.push(c),
        }
    }
    out.push(cur);
    out
}

/// Splits an entity into headers and body at the first blank line.
fn split_entity(data: &[u8]) -> Option<(&[u8], &[u8])> {
    let mut i = 0;
    while i < data.len() {
        if data[i] == b'\n' {
            if data.get(i + 1) == Some(&b'\n') {
                return Some((&data[..i], &data[i + 2..]));
            }
            if data.get(i + 1) == Some(&b'\r') && data.get(i + 2) == Some(&b'\n') {
                return Some((&data[..i], &data[i + 3..]));
            }
        }
        i += 1;
    }
    None
}

fn parse_headers(raw: &[u8]) -> Result<Headers, DomError> {
    let text = String::from_utf8_lossy(raw);
    let mut headers: Vec<(String, String)> = Vec::new();
    for line in text.split('\n') {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.is_empty() {
            continue;
        }
        if line.starts_with([' ', '\t']) {
            match headers.last_mut() {
                Some((_, v)) => {
                    v.push(' ');
                    v.push_str(line.trim());
                }
                None => {
                    return Err(DomError::MalformedMime(
                        "continuation line before any header".into(),
                    ))
                }
            }
            continue;
        }
        let Some((name, value)) = line.split_once(':') else {
            return Err(DomError::MalformedMime(format!(
                "header line without ':': {:?}",
                truncate(line)
            )));
        };
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(DomError::MalformedMime(format!(
                "invalid header name {:?}",
                truncate(name)
            )));
        }
        headers.push((name.to_string(), value.trim().to_string()));
    }
    Ok(Headers(headers))
}

fn truncate(s: &str) -> String {
    s.chars().take(60).collect()
}

/// Splits a multipart body into its parts. The preamble and epilogue are dropped.
fn split_multipart<'a>(body: &'a [u8], boundary: &str) -> Result<Vec<&'a [u8]>, DomError> {
    let delim = format!("--{boundary}");
    let delim = delim.as_bytes();
    // positions of delimiter lines
    let mut marks: Vec<(usize, usize, bool)> = Vec::new(); // (line start, content start, closing)
    let mut line_start = 0;
    while line_start < body.len() {
        let line_end = body[line_start..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|p| line_start + p)
            .unwrap_or(body.len());
        let line = &body[line_start..line_end];
        if line.starts_with(delim) {
            let rest = &line[delim.len()..];
            let closing = rest.starts_with(b"--");
            let tail = if closing { &rest[2..] } else { rest };
            if tail.iter().all(|b| matches!(b, b' ' | b'\t' | b'\r')) {
                marks.push((line_start, (line_end + 1).min(body.len()), closing));
                if closing {
                    break;
                }
            }
        }
        line_start = line_end + 1;
    }
    if marks.is_empty() {
        return Err(DomError::MalformedMime(format!(
            "boundary {boundary:?} not found"
        )));
    }
    let mut parts = Vec::new();
    for w in marks.windows(2) {
        let (_, start, closing) = w[0];
        if closing {
            break;
        }
        let (end_line, _, _) = w[1];
        // the line break before a delimiter belongs to the delimiter
        let mut end = end_line;
        if end > start && body[end - 1] == b'\n' {
            end -= 1;
            if end > start && body[end - 1] == b'\r' {
                end -= 1;
            }
        }
        parts.push(&body[start..end.max(start)]);
    }
    let last = marks[marks.len() - 1];
    if !last.2 {
        // unterminated archive: keep the trailing part
        parts.push(&body[last.1..]);
    }
    Ok(parts)
}

fn decode_transfer(body: &[u8], encoding: Option<&str>) -> Result<Vec<u8>, DomError> {
    let enc = encoding.map(|e| e.trim().to_ascii_lowercase());
    match enc.as_deref() {
        Some("quoted-printable") => {
            quoted_printable::decode(body, quoted_printable::ParseMode::Robust)
                .map_err(|e| DomError::MalformedMime(format!("quoted-printable: {e}")))
        }
        Some("base64") => {
            let compact: Vec<u8> = body
                .iter()
                .copied()
                .filter(|b| !b.is_ascii_whitespace())
                .collect();
            LENIENT_BASE64
                .decode(&compact)
                .map_err(|e| DomError::MalformedMime(format!("base64: {e}")))
        }
        None | Some("7bit") | Some("8bit") | Some("binary") | Some("") => Ok(body.to_vec()),
        Some(other) => Err(DomError::MalformedMime(format!(
            "unsupported transfer encoding {other:?}"
        ))),
    }
}

/// Looks for `<meta charset=...>` or an `http-equiv` content type in the
/// first few kilobytes.
fn sniff_meta_charset(bytes: &[u8]) -> Option<String> {
    let head = &bytes[..bytes.len().min(4096)];
    let text = String::from_utf8_lossy(head).to_ascii_lowercase();
    let mut from = 0;
    while let Some(rel) = text[from..].find("<meta") {
        let start = from + rel;
        let end = text[start..]
            .find('>')
            .map(|e| start + e)
            .unwrap_or(text.len());
        let tag = &text[start..end];
        if let Some(pos) = tag.find("charset") {
            let rest = tag[pos + "charset".len()..].trim_start();
            if let Some(rest) = rest.strip_prefix('=') {
                let rest = rest.trim_start().trim_start_matches(['"', '\'']);
                let label: String = rest
                    .chars()
                    .take_while(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | ':' | '.'))
                    .collect();
                if !label.is_empty() {
                    return Some(label);
                }
            }
        }
        from = end;
    }
    None
}

fn transcode(bytes: &[u8], declared: Option<&str>) -> Result<String, DomError> {
    if let Some(label) = declared {
        let enc = Encoding::for_label(label.trim().as_bytes())
            .ok_or_else(|| DomError::EncodingError(format!("unknown charset {label:?}")))?;
        let (text, _, _) = enc.decode(bytes);
        return Ok(text.into_owned());
    }
    if let Some(label) = sniff_meta_charset(bytes) {
        if let Some(enc) = Encoding::for_label(label.as_bytes()) {
            let (text, _, _) = enc.decode(bytes);
            return Ok(text.into_owned());
        }
    }
    let (text, _, _) = encoding_rs::UTF_8.decode(bytes);
    Ok(text.into_owned())
}

fn looks_like_html(data: &[u8]) -> bool {
    let data = data.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(data);
    data.iter()
        .find(|b| !b.is_ascii_whitespace())
        .is_none_or(|&b| b == b'<')
}

#[derive(Default)]
struct Walk {
    html: Option<(Vec<u8>, Option<String>, Option<String>)>,
    resources: usize,
}

fn walk_entity(
    headers: &Headers,
    body: &[u8],
    out: &mut Walk,
    depth: usize,
) -> Result<(), DomError> {
    let ctype = headers
        .get("content-type")
        .map(ContentType::parse)
        .unwrap_or(ContentType {
            mime: "text/plain".into(),
            params: Vec::new(),
        });
    if ctype.mime.starts_with("multipart/") {
        if depth >= MAX_MULTIPART_DEPTH {
            return Err(DomError::MalformedMime("multipart nesting too deep".into()));
        }
        let boundary = ctype
            .param("boundary")
            .filter(|b| !b.is_empty())
            .ok_or_else(|| DomError::MalformedMime("multipart without boundary".into()))?;
        for part in split_multipart(body, boundary)? {
            let (head, part_body) = match split_entity(part) {
                Some(split) => split,
                // a part with headers only, or a blank header block
                None if part.starts_with(b"\r\n") => (&[][..], &part[2..]),
                None if part.starts_with(b"\n") => (&[][..], &part[1..]),
                None => (part, &[][..]),
            };
            let part_headers = parse_headers(head)?;
            walk_entity(&part_headers, part_body, out, depth + 1)?;
        }
        return Ok(());
    }
    if ctype.mime == "text/html" && out.html.is_none() {
        let decoded = decode_transfer(body, headers.get("content-transfer-encoding"))?;
        out.html = Some((
            decoded,
            ctype.param("charset").map(str::to_string),
            headers.get("content-location").map(str::to_string),
        ));
    } else {
        out.resources += 1;
    }
    Ok(())
}

/// Reads an MHTML archive (or a bare HTML file) and returns its root document.
pub fn parse_mhtml(page_id: impl Into<String>, data: &[u8]) -> Result<RawPage, DomError> {
    let page_id = page_id.into();
    if looks_like_html(data) {
        let html = transcode(data, None)?;
        let html = html.strip_prefix('\u{feff}').unwrap_or(&html).to_string();
        if html.trim().is_empty() {
            return Err(DomError::NoHtmlPart);
        }
        return Ok(RawPage {
            page_id,
            html,
            source_url: None,
            resource_count: 0,
        });
    }
    let (head, body) = split_entity(data).ok_or_else(|| {
        DomError::MalformedMime("no blank line after the top-level headers".into())
    })?;
    let headers = parse_headers(head)?;
    if headers.get("content-type").is_none() {
        return Err(DomError::MalformedMime(
            "missing Content-Type header".into(),
        ));
    }
    let mut walk = Walk::default();
    walk_entity(&headers, body, &mut walk, 0)?;
    let (bytes, charset, location) = walk.html.ok_or(DomError::NoHtmlPart)?;
    let html = transcode(&bytes, charset.as_deref())?;
    let html = html.strip_prefix('\u{feff}').unwrap_or(&html).to_string();
    if html.trim().is_empty() {
        return Err(DomError::NoHtmlPart);
    }
    let source_url = headers
        .get("snapshot-content-location")
        .or(headers.get("content-location"))
        .map(str::to_string)
        .or(location);
    Ok(RawPage {
        page_id,
        html,
        source_url,
        resource_count: walk.resources,
    })
}
