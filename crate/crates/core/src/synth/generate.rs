//! Seeded listing-page generator with exact ground truth, plus a minimal
//! MHTML writer for building archives from generated markup.

use super::content::WORDS;
use super::rng::SplitMix64;
use crate::annotations::{DataRecord, PageAnnotation};
use crate::dom::{CleanConfig, DomTree, ElementNode};

#[derive(Debug, Clone, PartialEq)]
pub struct ListingSpec {
    pub page_id: String,
    pub records: usize,
    /// Extra wrapper `div`s between `main` and the list container.
    pub wrapper_depth: usize,
    pub seed: u64,
}

impl ListingSpec {
    pub fn new(page_id: impl Into<String>, records: usize, seed: u64) -> Self {
        ListingSpec {
            page_id: page_id.into(),
            records,
            wrapper_depth: 2,
            seed,
        }
    }
}

fn words(rng: &mut SplitMix64, n: usize) -> String {
    (0..n)
        .map(|_| *rng.pick(WORDS))
        .collect::<Vec<_>>()
        .join(" ")
}

fn title_case(s: &str) -> String {
    s.split(' ')
        .map(|w| {
            let mut c = w.chars();
            c.next()
                .map(|f| f.to_uppercase().chain(c).collect::<String>())
                .unwrap_or_default()
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn record(rng: &mut SplitMix64, k: usize) -> ElementNode {
    let name = title_case(&words(rng, 2));
    let price = format!("${}.{:02}", 5 + rng.below(995), rng.below(100));
    let desc = words(rng, 6);
    ElementNode::new("div")
        .with_attr("class", "item")
        .with_child(
            ElementNode::new("a")
                .with_attr("href", format!("/item/{k}"))
                .with_child(ElementNode::new("img").with_attr("src", format!("/img/{k}.jpg"))),
        )
        .with_child(
            ElementNode::new("div")
                .with_attr("class", "body")
                .with_child(
                    ElementNode::new("h3")
                        .with_attr("class", "title")
                        .with_text(name),
                )
                .with_child(
                    ElementNode::new("span")
                        .with_attr("class", "price")
                        .with_text(price),
                )
                .with_child(
                    ElementNode::new("p")
                        .with_attr("class", "desc")
                        .with_text(desc),
                )
                .with_child(
                    ElementNode::new("div")
                        .with_attr("class", "stars")
                        .with_children(
                            (0..5).map(|_| ElementNode::new("i").with_attr("class", "star")),
                        ),
                ),
        )
}

/// Builds a product listing page of `spec.records` identical-template records
/// inside a header/footer frame. Returns the page markup (with attributes)
/// and per-record ground truth: every text node inside each record.
pub fn generate_listing_page(spec: &ListingSpec) -> (String, PageAnnotation) {
    let mut rng = SplitMix64::new(spec.seed);
    let list = ElementNode::new("div")
        .with_attr("class", "list")
        .with_children((0..spec.records).map(|k| record(&mut rng, k + 1)));
    let mut inner = list;
    for d in 0..spec.wrapper_depth {
        inner = ElementNode::new("div")
            .with_attr("class", format!("wrap-{d}"))
            .with_child(inner);
    }
    let store = title_case(&words(&mut rng, 2));
    let root = ElementNode::new("html")
        .with_child(
            ElementNode::new("head").with_child(ElementNode::new("title").with_text(&store)),
        )
        .with_child(
            ElementNode::new("body").with_child(
                ElementNode::new("div")
                    .with_attr("class", "page")
                    .with_child(
                        ElementNode::new("header")
                            .with_child(ElementNode::new("h1").with_text(&store))
                            .with_child(ElementNode::new("p").with_text(words(&mut rng, 5))),
                    )
                    .with_child(ElementNode::new("main").with_child(inner))
                    .with_child(
                        ElementNode::new("footer")
                            .with_child(ElementNode::new("p").with_text(format!("© 2025 {store}"))),
                    ),
            ),
        );
    let tree = DomTree::from_element(spec.page_id.clone(), root);
    let html = tree.to_html(true);

    let reparsed = DomTree::parse(spec.page_id.clone(), &html, CleanConfig::full())
        .expect("generated markup parses");
    let items: Vec<_> = reparsed
        .ids()
        .filter(|&id| {
            reparsed.tag(id) == "div"
                && reparsed
                    .attrs(id)
                    .iter()
                    .any(|(k, v)| k == "class" && v == "item")
        })
        .collect();
    let records = items
        .into_iter()
        .map(|item| {
            reparsed
                .text_bearing_in(item)
                .map(|n| reparsed.canonical_xpath(n))
                .collect::<DataRecord>()
        })
        .collect();
    (
        html,
        PageAnnotation {
            page_id: spec.page_id.clone(),
            records,
        },
    )
}

/// Wraps `html` in a single-part-plus-resource MHTML archive. The HTML part
/// is quoted-printable encoded.
pub fn to_mhtml(html: &str, location: &str) -> String {
    let boundary = "----=_webrec_boundary_0";
    let qp = quoted_printable::encode_binary_to_str(html.as_bytes());
    format!(
        "From: <Saved by webrec>\r\n\
         Snapshot-Content-Location: {location}\r\n\
         Subject: snapshot\r\n\
         MIME-Version: 1.0\r\n\
         Content-Type: multipart/related;\r\n\ttype=\"text/html\";\r\n\tboundary=\"{boundary}\"\r\n\
         \r\n\
         --{boundary}\r\n\
         Content-Type: text/html; charset=utf-8\r\n\
         Content-Transfer-Encoding: quoted-printable\r\n\
         Content-Location: {location}\r\n\
         \r\n\
         {qp}\r\n\
         --{boundary}\r\n\
         Content-Type: image/png\r\n\
         Content-Transfer-Encoding: base64\r\n\
         Content-Location: {location}pixel.png\r\n\
         \r\n\
         iVBORw0KGgoAAAANSUhEUgAAAAEAAAABCAYAAAAfFcSJAAAADUlEQVR42mNkYPhfDwAChwGA60e6kgAAAABJRU5ErkJggg==\r\n\
         --{boundary}--\r\n"
    )
}
