mod common;

use common::{page, read, CORPUS};
use scraper::{Html, Node};
use webrec::dom::{parse_mhtml, CleanConfig};

const SKIP: &[&str] = &["script", "style", "noscript", "template"];
const IMPLIED: &[&str] = &["head", "tbody"];

fn oracle(html: &str) -> (Vec<String>, Vec<String>) {
    let doc = Html::parse_document(html);
    let mut words = Vec::new();
    let mut tags = Vec::new();
    for node in doc.tree.root().descendants() {
        let hidden = node.ancestors().any(|a| {
            a.value()
                .as_element()
                .is_some_and(|e| SKIP.contains(&e.name()))
        });
        match node.value() {
            Node::Element(e)
                if !hidden && !SKIP.contains(&e.name()) && !IMPLIED.contains(&e.name()) =>
            {
                tags.push(e.name().to_string())
            }
            Node::Text(t) if !hidden => words.extend(t.split_whitespace().map(String::from)),
            _ => {}
        }
    }
    words.sort();
    (words, tags)
}

#[test]
fn text_and_elements_agree_with_html5ever() {
    for name in CORPUS {
        let raw = parse_mhtml(name, &read(&format!("corpus/{name}.mhtml"))).unwrap();
        let (expected_words, expected_tags) = oracle(&raw.html);
        let tree = page(name, CleanConfig::full());
        let mut words: Vec<String> = tree
            .ids()
            .flat_map(|id| {
                tree.text(id)
                    .split_whitespace()
                    .map(String::from)
                    .collect::<Vec<_>>()
            })
            .collect();
        words.sort();
        let tags: Vec<String> = tree
            .ids()
            .map(|id| tree.tag(id).to_string())
            .filter(|t| !IMPLIED.contains(&t.as_str()))
            .collect();
        assert_eq!(words, expected_words, "{name}");
        assert_eq!(tags, expected_tags, "{name}");
    }
}
