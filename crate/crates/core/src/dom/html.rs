//! Forgiving HTML tokenizer and tree builder.
//!
//! This is not a full HTML5 tree-construction implementation. It handles the
//! cases that matter for turning saved pages into stable element trees:
//! void elements, raw-text and RCDATA elements, implied end tags for the usual
//! suspects (`p`, `li`, `dt`/`dd`, table parts, `option`), scoped end-tag
//! matching, and a nesting cap. It never synthesizes elements that are absent
//! from the markup (no implied `head`, `body` or `tbody`).
//!
//! Comments, doctypes, processing instructions and the blocklisted elements
//! (`script`, `style`, `template`, `noscript`) never reach the output tree.

use std::borrow::Cow;

use super::tree::ElementNode;

/// Elements deeper than this are attached as siblings of the deepest open
/// element instead of being nested further.
pub const MAX_DEPTH: usize = 512;

pub const BLOCKLIST: &[&str] = &["script", "style", "template", "noscript"];

const VOID: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "keygen", "link", "meta", "param",
    "source", "track", "wbr",
];

const RAW_TEXT: &[&str] = &["script", "style", "xmp", "iframe", "noembed", "noframes"];
const RCDATA: &[&str] = &["title", "textarea"];

const HEAD_CONTENT: &[&str] = &[
    "base", "basefont", "bgsound", "link", "meta", "noscript", "script", "style", "template",
    "title",
];

/// Start tags that close an open `p` element in button scope.
const CLOSES_P: &[&str] = &[
    "address",
    "article",
    "aside",
    "blockquote",
    "center",
    "details",
    "dialog",
    "dir",
    "div",
    "dl",
    "dd",
    "dt",
    "fieldset",
    "figcaption",
    "figure",
    "footer",
    "form",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "header",
    "hgroup",
    "hr",
    "li",
    "listing",
    "main",
    "menu",
    "nav",
    "ol",
    "p",
    "plaintext",
    "pre",
    "search",
    "section",
    "summary",
    "table",
    "ul",
    "xmp",
];

const HEADINGS: &[&str] = &["h1", "h2", "h3", "h4", "h5", "h6"];

const SPECIAL: &[&str] = &[
    "address",
    "applet",
    "area",
    "article",
    "aside",
    "base",
    "basefont",
    "bgsound",
    "blockquote",
    "body",
    "br",
    "button",
    "caption",
    "center",
    "col",
    "colgroup",
    "dd",
    "details",
    "dir",
    "div",
    "dl",
    "dt",
    "embed",
    "fieldset",
    "figcaption",
    "figure",
    "footer",
    "form",
    "frame",
    "frameset",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "head",
    "header",
    "hgroup",
    "hr",
    "html",
    "iframe",
    "img",
    "input",
    "keygen",
    "li",
    "link",
    "listing",
    "main",
    "marquee",
    "menu",
    "meta",
    "nav",
    "noembed",
    "noframes",
    "noscript",
    "object",
    "ol",
    "p",
    "param",
    "plaintext",
    "pre",
    "script",
    "search",
    "section",
    "select",
    "source",
    "style",
    "summary",
    "table",
    "tbody",
    "td",
    "template",
    "textarea",
    "tfoot",
    "th",
    "thead",
    "title",
    "tr",
    "track",
    "ul",
    "wbr",
    "xmp",
];

const FORMATTING: &[&str] = &[
    "a", "b", "big", "code", "em", "font", "i", "nobr", "s", "small", "strike", "strong", "tt", "u",
];

const SCOPE: &[&str] = &[
    "applet", "caption", "html", "table", "td", "th", "marquee", "object", "template",
];

fn is(set: &[&str], tag: &str) -> bool {
    set.contains(&tag)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Token {
    Start {
        name: String,
        attrs: Vec<(String, String)>,
        self_closing: bool,
    },
    End {
        name: String,
    },
    /// Character data with entities already decoded.
    Text(String),
}

/// Lowercases a raw tag name and maps anything outside `[a-z0-9-]` to `-`.
pub fn canonical_tag(raw: &str) -> String {
    raw.chars()
        .map(|c| {
            let c = c.to_ascii_lowercase();
            if c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' {
                c
            } else {
                '-'
            }
        })
        .collect()
}

fn valid_attr_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' || c == ':' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | ':' | '.' | '-'))
}

fn decode(raw: &str) -> String {
    match html_escape::decode_html_entities(raw) {
        Cow::Borrowed(s) => s.to_string(),
        Cow::Owned(s) => s,
    }
}

fn is_ws(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | b'\x0c')
}

pub(crate) struct Tokenizer<'a> {
    src: &'a str,
    pos: usize,
    /// Set after a raw-text or RCDATA start tag: (element name, decode entities).
    pending_raw: Option<(String, bool)>,
    /// Everything after a `plaintext` start tag is literal text.
    plaintext: bool,
}

impl<'a> Tokenizer<'a> {
    pub(crate) fn new(src: &'a str) -> Self {
        Tokenizer {
            src,
            pos: 0,
            pending_raw: None,
            plaintext: false,
        }
    }

    fn bytes(&self) -> &'a [u8] {
        self.src.as_bytes()
    }

    fn find_from(&self, from: usize, needle: &str) -> Option<usize> {
        self.src.get(from..)?.find(needle).map(|i| i + from)
    }

    fn skip_past(&mut self, from: usize, needle: &str) {
        self.pos = match self.find_from(from, needle) {
            Some(i) => i + needle.len(),
            None => self.src.len(),
        };
    }

    /// Consumes content up to the matching `</name` and returns it.
    fn raw_text(&mut self, name: &str) -> &'a str {
        let bytes = self.bytes();
        let start = self.pos;
        let mut i = start;
        while let Some(rel) = self.src[i..].find("</") {
            let at = i + rel;
            let name_end = at + 2 + name.len();
            if name_end <= bytes.len()
                && bytes[at + 2..name_end].eq_ignore_ascii_case(name.as_bytes())
                && (name_end == bytes.len()
                    || is_ws(bytes[name_end])
                    || matches!(bytes[name_end], b'/' | b'>'))
            {
                self.pos = at;
                return &self.src[start..at];
            }
            i = at + 2;
        }
        self.pos = bytes.len();
        &self.src[start..]
    }

    fn tag_name(&mut self) -> &'a str {
        let bytes = self.bytes();
        let start = self.pos;
        while self.pos < bytes.len()
            && !is_ws(bytes[self.pos])
            && !matches!(bytes[self.pos], b'/' | b'>')
        {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    /// Parses attributes up to and including `>`. Returns `None` at EOF.
    fn attributes(&mut self) -> Option<(Vec<(String, String)>, bool)> {
        let bytes = self.bytes();
        let mut attrs: Vec<(String, String)> = Vec::new();
        loop {
            while self.pos < bytes.len() && is_ws(bytes[self.pos]) {
                self.pos += 1;
            }
            if self.pos >= bytes.len() {
                return None;
            }
            match bytes[self.pos] {
                b'>' => {
                    self.pos += 1;
                    return Some((attrs, false));
                }
                b'/' => {
                    self.pos += 1;
                    if self.pos < bytes.len() && bytes[self.pos] == b'>' {
                        self.pos += 1;
                        return Some((attrs, true));
                    }
                    continue;
                }
                _ => {}
            }
            let name_start = self.pos;
            self.pos += 1; // first char may be '='
            while self.pos < bytes.len()
                && !is_ws(bytes[self.pos])
                && !matches!(bytes[self.pos], b'/' | b'>' | b'=')
            {
                self.pos += 1;
            }
            let name = self.src[name_start..self.pos].to_ascii_lowercase();
            while self.pos < bytes.len() && is_ws(bytes[self.pos]) {
                self.pos += 1;
            }
            let mut value = String::new();
            if self.pos < bytes.len() && bytes[self.pos] == b'=' {
                self.pos += 1;
                while self.pos < bytes.len() && is_ws(bytes[self.pos]) {
                    self.pos += 1;
                }
                if self.pos >= bytes.len() {
                    return None;
                }
                let q = bytes[self.pos];
                if q == b'"' || q == b'\'' {
                    let vstart = self.pos + 1;
                    let end = self.src[vstart..].find(q as char).map(|i| i + vstart)?;
                    value = decode(&self.src[vstart..end]);
                    self.pos = end + 1;
                } else {
                    let vstart = self.pos;
                    while self.pos < bytes.len()
                        && !is_ws(bytes[self.pos])
                        && bytes[self.pos] != b'>'
                    {
                        self.pos += 1;
                    }
                    value = decode(&self.src[vstart..self.pos]);
                }
            }
            if valid_attr_name(&name) && !attrs.iter().any(|(n, _)| *n == name) {
                attrs.push((name, value));
            }
        }
    }
}

impl Iterator for Tokenizer<'_> {
    type Item = Token;

    fn next(&mut self) -> Option<Token> {
        if let Some((name, decode_entities)) = self.pending_raw.take() {
            let raw = self.raw_text(&name);
            if !raw.is_empty() {
                let text = if decode_entities {
                    decode(raw)
                } else {
                    raw.to_string()
                };
                return Some(Token::Text(text));
            }
        }
        let bytes = self.bytes();
        if self.plaintext {
            self.plaintext = false;
            let rest = &self.src[self.pos..];
            self.pos = bytes.len();
            return (!rest.is_empty()).then(|| Token::Text(rest.to_string()));
        }
        loop {
            if self.pos >= bytes.len() {
                return None;
            }
            let start = self.pos;
            if bytes[start] != b'<' {
                let end = self.find_from(start, "<").unwrap_or(bytes.len());
                self.pos = end;
                return Some(Token::Text(decode(&self.src[start..end])));
            }
            let rest = &bytes[start..];
            if rest.starts_with(b"<!--") {
                if rest[4..].starts_with(b">") {
                    self.pos = start + 5;
                } else if rest[4..].starts_with(b"->") {
                    self.pos = start + 6;
                } else {
                    self.skip_past(start + 4, "-->");
                }
                continue;
            }
            if rest.starts_with(b"<!") || rest.starts_with(b"<?") {
                self.skip_past(start + 2, ">");
                continue;
            }
            if rest.starts_with(b"</") {
                match rest.get(2) {
                    Some(c) if c.is_ascii_alphabetic() => {
                        self.pos = start + 2;
                        let name = canonical_tag(self.tag_name());
                        // end tags may carry junk attributes; drop them
                        self.skip_past(self.pos, ">");
                        return Some(Token::End { name });
                    }
                    Some(b'>') => {
                        self.pos = start + 3;
                        continue;
                    }
                    Some(_) => {
                        self.skip_past(start + 2, ">");
                        continue;
                    }
                    None => {
                        self.pos = bytes.len();
                        return Some(Token::Text("</".to_string()));
                    }
                }
            }
            match rest.get(1) {
                Some(c) if c.is_ascii_alphabetic() => {
                    self.pos = start + 1;
                    let name = canonical_tag(self.tag_name());
                    let Some((attrs, self_closing)) = self.attributes() else {
                        // EOF inside a tag: the tag is dropped
                        self.pos = bytes.len();
                        return None;
                    };
                    if !self_closing {
                        if is(RAW_TEXT, &name) {
                            self.pending_raw = Some((name.clone(), false));
                        } else if is(RCDATA, &name) {
                            self.pending_raw = Some((name.clone(), true));
                        } else if name == "plaintext" {
                            self.plaintext = true;
                        }
                    }
                    return Some(Token::Start {
                        name,
                        attrs,
                        self_closing,
                    });
                }
                _ => {
                    // a lone '<' is text
                    let end = self.find_from(start + 1, "<").unwrap_or(bytes.len());
                    self.pos = end;
                    return Some(Token::Text(decode(&self.src[start..end])));
                }
            }
        }
    }
}

struct Open {
    tag: String,
    attrs: Vec<(String, String)>,
    segments: Vec<String>,
    last_was_text: bool,
    children: Vec<ElementNode>,
    discard: bool,
}

impl Open {
    fn new(tag: String, attrs: Vec<(String, String)>) -> Self {
        let discard = is(BLOCKLIST, &tag);
        Open {
            tag,
            attrs,
            segments: Vec::new(),
            last_was_text: false,
            children: Vec::new(),
            discard,
        }
    }

    fn finish(self) -> ElementNode {
        let text = self
            .segments
            .iter()
            .map(|s| normalize_whitespace(s))
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join(" ");
        ElementNode {
            tag: self.tag,
            attrs: self.attrs,
            children: self.children,
            text,
        }
    }
}

/// Collapses every run of whitespace (Unicode `White_Space`, so NBSP too) to
/// one space and trims both ends.
pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

struct Builder {
    /// `stack[0]` is the document pseudo-node.
    stack: Vec<Open>,
    seen_html: bool,
    seen_head: bool,
    seen_body: bool,
}

impl Builder {
    fn new() -> Self {
        Builder {
            stack: vec![Open::new("#document".to_string(), Vec::new())],
            seen_html: false,
            seen_head: false,
            seen_body: false,
        }
    }

    fn top(&mut self) -> &mut Open {
        self.stack
            .last_mut()
            .expect("document node is never popped")
    }

    fn text(&mut self, text: String) {
        if !text.trim().is_empty() {
            self.seen_html = true;
        }
        let top = self.top();
        if top.last_was_text {
            if let Some(last) = top.segments.last_mut() {
                last.push_str(&text);
                return;
            }
        }
        top.segments.push(text);
        top.last_was_text = true;
    }

    fn attach(&mut self, node: ElementNode, discard: bool) {
        let top = self.top();
        top.last_was_text = false;
        if !discard {
            top.children.push(node);
        }
    }

    fn pop(&mut self) {
        if self.stack.len() <= 1 {
            return;
        }
        let open = self.stack.pop().expect("checked length");
        let discard = open.discard;
        let node = open.finish();
        self.attach(node, discard);
    }

    /// Pops through the topmost element whose tag is in `targets`, unless an
    /// element in `boundaries` is met first. Returns whether anything was popped.
    fn close_in_scope(&mut self, targets: &[&str], boundaries: &[&str]) -> bool {
        for i in (1..self.stack.len()).rev() {
            let tag = self.stack[i].tag.as_str();
            if is(targets, tag) {
                while self.stack.len() > i {
                    self.pop();
                }
                return true;
            }
            if is(boundaries, tag) {
                return false;
            }
        }
        false
    }

    fn has_open(&self, tag: &str) -> bool {
        self.stack.iter().skip(1).any(|o| o.tag == tag)
    }

    fn in_foreign_content(&self) -> bool {
        self.stack.iter().any(|o| o.tag == "svg" || o.tag == "math")
    }

    fn start(&mut self, name: String, attrs: Vec<(String, String)>, self_closing: bool) {
        if name != "html" {
            self.seen_html = true;
        }
        match name.as_str() {
            "html" => {
                if self.seen_html || self.stack.len() > 1 {
                    return;
                }
                self.seen_html = true;
            }
            "head" => {
                if self.seen_head || self.seen_body {
                    return;
                }
                self.seen_head = true;
            }
            "body" => {
                if self.seen_body {
                    return;
                }
                self.seen_body = true;
                self.close_in_scope(&["head"], &[]);
            }
            _ => {}
        }
        if !is(HEAD_CONTENT, &name) && name != "head" && self.has_open("head") {
            self.close_in_scope(&["head"], &[]);
        }

        let button_scope: Vec<&str> = SCOPE.iter().copied().chain(["button"]).collect();
        if is(CLOSES_P, &name) {
            self.close_in_scope(&["p"], &button_scope);
        }
        match name.as_str() {
            "li" => self.close_list_item(&["li"]),
            "dd" | "dt" => self.close_list_item(&["dd", "dt"]),
            n if is(HEADINGS, n) => {
                if is(HEADINGS, &self.top().tag) {
                    self.pop();
                }
            }
            "tr" => {
                self.close_in_scope(&["tr"], &["table", "thead", "tbody", "tfoot", "html"]);
            }
            "td" | "th" => {
                self.close_in_scope(&["td", "th"], &["tr", "table", "html"]);
            }
            "thead" | "tbody" | "tfoot" => {
                self.close_in_scope(&["thead", "tbody", "tfoot"], &["table", "html"]);
            }
            "option" => {
                if self.top().tag == "option" {
                    self.pop();
                }
            }
            "optgroup" => {
                if self.top().tag == "option" {
                    self.pop();
                }
                if self.top().tag == "optgroup" {
                    self.pop();
                }
            }
            "a" => {
                self.close_in_scope(&["a"], SCOPE);
            }
            "button" => {
                self.close_in_scope(&["button"], SCOPE);
            }
            _ => {}
        }

        if self.stack.len() > MAX_DEPTH {
            self.pop();
        }

        let open = Open::new(name, attrs);
        let immediate = is(VOID, &open.tag)
            || (self_closing
                && (self.in_foreign_content() || open.tag == "svg" || open.tag == "math"));
        if immediate {
            let discard = open.discard;
            let node = open.finish();
            self.attach(node, discard);
        } else {
            self.stack.push(open);
        }
    }

    fn close_list_item(&mut self, items: &[&str]) {
        for i in (1..self.stack.len()).rev() {
            let tag = self.stack[i].tag.as_str();
            if is(items, tag) {
                while self.stack.len() > i {
                    self.pop();
                }
                return;
            }
            if is(SPECIAL, tag) && !matches!(tag, "address" | "div" | "p") {
                return;
            }
        }
    }

    fn end(&mut self, name: String) {
        match name.as_str() {
            "html" | "body" => return,
            "br" => {
                self.start(name, Vec::new(), false);
                return;
            }
            _ => {}
        }
        if is(SPECIAL, &name) && !is(FORMATTING, &name) {
            let mut boundaries: Vec<&str> = SCOPE.to_vec();
            match name.as_str() {
                "p" => boundaries.push("button"),
                "li" => boundaries.extend(["ul", "ol"]),
                "tr" | "tbody" | "thead" | "tfoot" | "td" | "th" | "caption" => {
                    boundaries.retain(|b| *b != name.as_str())
                }
                _ => {}
            }
            boundaries.retain(|b| *b != name.as_str());
            self.close_in_scope(&[name.as_str()], &boundaries);
            return;
        }
        for i in (1..self.stack.len()).rev() {
            let tag = self.stack[i].tag.as_str();
            if tag == name {
                while self.stack.len() > i {
                    self.pop();
                }
                return;
            }
            if is(SPECIAL, tag) && !is(FORMATTING, &name) {
                return;
            }
            if is(SCOPE, tag) {
                return;
            }
        }
    }

    fn finish(mut self) -> Document {
        while self.stack.len() > 1 {
            self.pop();
        }
        let doc = self.stack.pop().expect("document node");
        let doc = doc.finish();
        Document {
            children: doc.children,
            text: doc.text,
        }
    }
}

/// Top-level content of a parsed document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub children: Vec<ElementNode>,
    /// Normalized text found outside any element.
    pub text: String,
}

impl Document {
    /// Returns the single root element, wrapping multiple top-level elements
    /// (or stray top-level text) in a synthetic `html` element. `None` when
    /// the document has no content at all.
    pub fn into_root(mut self) -> Option<ElementNode> {
        if self.children.len() == 1 && self.text.is_empty() {
            return self.children.pop();
        }
        if self.children.is_empty() && self.text.is_empty() {
            return None;
        }
        Some(ElementNode {
            tag: "html".to_string(),
            attrs: Vec::new(),
            children: self.children,
            text: self.text,
        })
    }
}

pub fn parse_document(src: &str) -> Document {
    let mut builder = Builder::new();
    for token in Tokenizer::new(src) {
        match token {
            Token::Text(t) => builder.text(t),
            Token::Start {
                name,
                attrs,
                self_closing,
            } => builder.start(name, attrs, self_closing),
            Token::End { name } => builder.end(name),
        }
    }
    builder.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn root(src: &str) -> ElementNode {
        parse_document(src).into_root().unwrap()
    }

    fn shape(n: &ElementNode) -> String {
        let mut s = n.tag.clone();
        if !n.text.is_empty() {
            s.push_str(&format!("{{{}}}", n.text));
        }
        if !n.children.is_empty() {
            s.push('(');
            s.push_str(&n.children.iter().map(shape).collect::<Vec<_>>().join(","));
            s.push(')');
        }
        s
    }

    #[test]
    fn tokenizes_attributes() {
        let toks: Vec<Token> =
            Tokenizer::new(r#"<a HREF="x&amp;y" data-k='v' checked bad"name=1 u=z>"#).collect();
        assert_eq!(
            toks,
            vec![Token::Start {
                name: "a".into(),
                attrs: vec![
                    ("href".into(), "x&y".into()),
                    ("data-k".into(), "v".into()),
                    ("checked".into(), String::new()),
                    ("u".into(), "z".into()),
                ],
                self_closing: false
            }]
        );
    }

    #[test]
    fn drops_comments_doctype_and_pi() {
        let r = root("<!DOCTYPE html><?xml version='1.0'?><div><!-- hi -->a<!---->b</div>");
        assert_eq!(shape(&r), "div{ab}");
    }

    #[test]
    fn blocklisted_elements_vanish() {
        let r = root(
            "<div><script>if (a < b) { x = '</div>'; }</script><style>p{}</style>\
             <noscript><p>js off</p></noscript><template><i>t</i></template><span>a</span></div>",
        );
        assert_eq!(shape(&r), "div(span{a})");
    }

    #[test]
    fn script_content_with_fake_end_tag() {
        let r = root("<div><script>document.write('<\\/script>')</script><b>x</b></div>");
        assert_eq!(shape(&r), "div(b{x})");
    }

    #[test]
    fn implied_end_tags() {
        let r = root("<ul><li>a<li>b<li>c</ul>");
        assert_eq!(shape(&r), "ul(li{a},li{b},li{c})");
        let r = root("<div><p>one<p>two<div>three</div></div>");
        assert_eq!(shape(&r), "div(p{one},p{two},div{three})");
        let r = root("<table><tr><td>1<td>2<tr><td>3</table>");
        assert_eq!(shape(&r), "table(tr(td{1},td{2}),tr(td{3}))");
        let r = root("<dl><dt>k<dd>v<dt>k2<dd>v2</dl>");
        assert_eq!(shape(&r), "dl(dt{k},dd{v},dt{k2},dd{v2})");
    }

    #[test]
    fn nested_lists_keep_items() {
        let r = root("<ul><li>a<ul><li>b</ul><li>c</ul>");
        assert_eq!(shape(&r), "ul(li{a}(ul(li{b})),li{c})");
    }

    #[test]
    fn void_and_self_closing() {
        let r = root("<p>a<br>b<img src=x>c</p>");
        assert_eq!(shape(&r), "p{a b c}(br,img)");
        // non-void self-closing is ignored outside foreign content
        let r = root("<div><span/>x</div>");
        assert_eq!(shape(&r), "div(span{x})");
        let r = root("<svg><path/><circle/></svg>");
        assert_eq!(shape(&r), "svg(path,circle)");
    }

    #[test]
    fn stray_end_tags_do_not_cross_special_elements() {
        let r = root("<span><div>a</span>b</div></span>");
        assert_eq!(shape(&r), "span(div{ab})");
    }

    #[test]
    fn misnested_formatting() {
        let r = root("<div><b><i>x</b>y</i></div>");
        assert_eq!(shape(&r), "div{y}(b(i{x}))");
    }

    #[test]
    fn head_is_closed_by_body_content() {
        let r = root("<html><head><title>T &amp; U</title><div>x</div></html>");
        assert_eq!(shape(&r), "html(head(title{T & U}),div{x})");
    }

    #[test]
    fn content_after_html_end_stays_inside() {
        let r = root("<html><body><p>a</p></body></html><p>late</p>");
        assert_eq!(shape(&r), "html(body(p{a},p{late}))");
    }

    #[test]
    fn multiple_top_level_elements_get_wrapped() {
        let r = root("<tr><td>a</td></tr><tr><td>b</td></tr>");
        assert_eq!(shape(&r), "html(tr(td{a}),tr(td{b}))");
        let r = root("loose <b>x</b>");
        assert_eq!(shape(&r), "html{loose}(b{x})");
        assert!(parse_document("  <!-- only a comment -->  ")
            .into_root()
            .is_none());
    }

    #[test]
    fn late_html_tag_is_ignored() {
        let r = root("<a>x</a></body><html><p>after");
        assert_eq!(shape(&r), "html(a{x},p{after})");
        let r = root("\n  <html><p>a</p></html>");
        assert_eq!(shape(&r), "html(p{a})");
    }

    #[test]
    fn odd_tag_names_are_canonicalized() {
        let r = root("<DIV><o:p>x</o:p><My_Widget>y</My_Widget></DIV>");
        assert_eq!(shape(&r), "div(o-p{x},my-widget{y})");
    }

    #[test]
    fn lone_angle_brackets_are_text() {
        let r = root("<p>a < b and 3<4 </ p> c</p>");
        assert_eq!(shape(&r), "p{a < b and 3<4 c}");
    }

    #[test]
    fn eof_inside_tag_is_dropped() {
        let r = root("<div>x<span class=\"unterminated");
        assert_eq!(shape(&r), "div{x}");
    }

    #[test]
    fn depth_is_capped() {
        let src = "<div>".repeat(MAX_DEPTH * 2);
        let r = root(&src);
        let mut depth = 0;
        let mut n = &r;
        loop {
            depth += 1;
            match n.children.first() {
                Some(c) => n = c,
                None => break,
            }
        }
        assert!(depth <= MAX_DEPTH);
    }
}
