//! Properties checked by each fuzz target. Each function panics on a
//! violation; any input that parses must survive its round trip.

use webrec::annotations::{
    annotations_to_json, parse_annotations, parse_predictions, predictions_to_json,
};
use webrec::dom::{parse_mhtml, CleanConfig, DomTree, XPath};
use webrec::extract::parse_llm_response;

pub const TARGETS: [&str; 5] = [
    "parse_mhtml",
    "parse_html",
    "parse_xpath",
    "parse_llm_response",
    "parse_annotations",
];

pub fn check_mhtml(data: &[u8]) {
    if let Ok(page) = parse_mhtml("fuzz", data) {
        check_html(page.html.as_bytes());
    }
}

pub fn check_html(data: &[u8]) {
    let html = String::from_utf8_lossy(data);
    for config in [CleanConfig::default(), CleanConfig::full()] {
        let Ok(tree) = DomTree::parse("fuzz", &html, config) else {
            continue;
        };
        for id in tree.ids() {
            let x = tree.canonical_xpath(id);
            assert_eq!(tree.resolve(&x).ok(), Some(id), "{x}");
        }
        let again =
            DomTree::parse("fuzz", &tree.to_html(true), config).expect("serialized tree reparses");
        assert_eq!(again, tree);
    }
}

pub fn check_xpath(data: &[u8]) {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(x) = XPath::parse(s) {
        let printed = x.to_string();
        assert_eq!(
            XPath::parse(&printed).expect("printed xpath reparses"),
            x,
            "{printed}"
        );
    }
}

pub fn check_llm_response(data: &[u8]) {
    let _ = parse_llm_response(&String::from_utf8_lossy(data));
}

pub fn check_annotations(data: &[u8]) {
    let text = String::from_utf8_lossy(data);
    if let Ok(pages) = parse_annotations(&text) {
        assert_eq!(
            parse_annotations(&annotations_to_json(&pages)).expect("written annotations reparse"),
            pages
        );
    }
    if let Ok(preds) = parse_predictions(&text) {
        assert_eq!(
            parse_predictions(&predictions_to_json(&preds)).expect("written predictions reparse"),
            preds
        );
    }
}

pub fn check(target: &str, data: &[u8]) {
    match target {
        "parse_mhtml" => check_mhtml(data),
        "parse_html" => check_html(data),
        "parse_xpath" => check_xpath(data),
        "parse_llm_response" => check_llm_response(data),
        "parse_annotations" => check_annotations(data),
        other => panic!("unknown target {other}"),
    }
}
