//! Text categories and category-preserving replacement.

use serde::{Deserialize, Serialize};

use super::rng::SplitMix64;

pub const CURRENCY_SYMBOLS: &[char] = &['$', '€', '£', '¥', '₹', '₩', '¢', '₽', '₺', '₫'];

pub const WORDS: &[&str] = &[
    "amber", "basin", "cedar", "delta", "ember", "fable", "grove", "harbor", "iris", "juniper",
    "kestrel", "lumen", "meadow", "nimbus", "orchid", "pebble", "quartz", "raven", "sierra",
    "tundra", "umber", "velvet", "willow", "yonder", "zephyr", "anchor", "bramble", "cobalt",
    "dune", "echo", "fern", "glacier", "hollow", "indigo", "jasper", "koi", "lattice", "maple",
    "nova", "onyx", "prism", "quill", "ridge", "summit", "thistle", "upland", "vista", "wren",
    "axis", "beacon", "canyon", "drift", "easel", "flint", "garnet", "haven", "islet", "jetty",
    "knoll", "lagoon", "marble", "nectar", "opal", "pine",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextCategory {
    Price,
    Number,
    Date,
    FreeText,
}

/// A currency symbol together with at least one digit.
pub fn is_price(s: &str) -> bool {
    s.contains(CURRENCY_SYMBOLS) && s.chars().any(|c| c.is_ascii_digit())
}

/// Digits with optional grouping, sign, decimal and percent characters.
pub fn is_number(s: &str) -> bool {
    s.chars().any(|c| c.is_ascii_digit())
        && s.chars()
            .all(|c| c.is_ascii_digit() || ",.+-% ".contains(c))
}

fn digit_groups(s: &str, sep: char) -> Option<Vec<usize>> {
    s.split(sep)
        .map(|g| (!g.is_empty() && g.bytes().all(|b| b.is_ascii_digit())).then_some(g.len()))
        .collect()
}

/// `yyyy-mm-dd`, `d/m/yyyy` (or `m/d/yy`) and `d.m.yyyy` shapes.
pub fn is_date(s: &str) -> bool {
    date_shape(s).is_some()
}

fn date_shape(s: &str) -> Option<(char, Vec<usize>)> {
    for sep in ['-', '/', '.'] {
        if let Some(g) = digit_groups(s, sep) {
            let ok = match sep {
                '-' => g == [4, 2, 2],
                _ => g.len() == 3 && g[0] <= 2 && g[1] <= 2 && (g[2] == 2 || g[2] == 4),
            };
            if ok {
                return Some((sep, g));
            }
        }
    }
    None
}

pub fn categorize(s: &str) -> TextCategory {
    if is_date(s) {
        TextCategory::Date
    } else if is_price(s) {
        TextCategory::Price
    } else if is_number(s) {
        TextCategory::Number
    } else {
        TextCategory::FreeText
    }
}

/// Replaces every digit; a run keeps a non-zero leading digit if it had one.
fn redraw_digits(s: &str, rng: &mut SplitMix64) -> String {
    let mut out = String::with_capacity(s.len());
    let mut prev_digit = false;
    for c in s.chars() {
        if c.is_ascii_digit() {
            let d = if !prev_digit && c != '0' {
                1 + rng.below(9)
            } else {
                rng.below(10)
            };
            out.push(char::from(b'0' + d as u8));
            prev_digit = true;
        } else {
            out.push(c);
            prev_digit = false;
        }
    }
    out
}

fn random_date(sep: char, groups: &[usize], rng: &mut SplitMix64) -> String {
    let year = 1990 + rng.below(40);
    let month = 1 + rng.below(12);
    let day = 1 + rng.below(28);
    let year_s = if groups[2] == 2 {
        format!("{:02}", year % 100)
    } else {
        year.to_string()
    };
    let pad = |v: u64, w: usize| {
        if w >= 2 {
            format!("{v:02}")
        } else {
            v.to_string()
        }
    };
    match sep {
        '-' => format!("{year}-{month:02}-{day:02}"),
        _ => format!(
            "{}{sep}{}{sep}{}",
            pad(day, groups[0]),
            pad(month, groups[1]),
            year_s
        ),
    }
}

fn replace_word(core: &str, rng: &mut SplitMix64) -> String {
    if core.chars().all(char::is_alphabetic) {
        let word = *rng.pick(WORDS);
        let mut chars = core.chars();
        let first_upper = chars.next().is_some_and(char::is_uppercase);
        let all_upper = core.chars().count() > 1 && core.chars().all(char::is_uppercase);
        if all_upper {
            word.to_uppercase()
        } else if first_upper {
            let mut w = word.to_string();
            w[..1].make_ascii_uppercase();
            w
        } else {
            word.to_string()
        }
    } else {
        core.chars()
            .map(|c| {
                if c.is_ascii_digit() {
                    char::from(b'0' + rng.below(10) as u8)
                } else if c.is_alphabetic() {
                    let l = char::from(b'a' + rng.below(26) as u8);
                    if c.is_uppercase() {
                        l.to_ascii_uppercase()
                    } else {
                        l
                    }
                } else {
                    c
                }
            })
            .collect()
    }
}

fn replace_free_text(s: &str, rng: &mut SplitMix64) -> String {
    s.split_whitespace()
        .map(|tok| {
            let start = tok.find(char::is_alphanumeric);
            let Some(start) = start else {
                return tok.to_string();
            };
            let end = tok
                .char_indices()
                .rev()
                .find(|(_, c)| c.is_alphanumeric())
                .map(|(i, c)| i + c.len_utf8())
                .unwrap_or(tok.len());
            format!(
                "{}{}{}",
                &tok[..start],
                replace_word(&tok[start..end], rng),
                &tok[end..]
            )
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// New text of the same category as `s`. Whitespace-normalized input gives
/// whitespace-normalized, non-empty output.
pub fn replace_text(s: &str, rng: &mut SplitMix64) -> String {
    match categorize(s) {
        TextCategory::Date => {
            let (sep, groups) = date_shape(s).expect("categorized as date");
            random_date(sep, &groups, rng)
        }
        TextCategory::Price | TextCategory::Number => redraw_digits(s, rng),
        TextCategory::FreeText => replace_free_text(s, rng),
    }
}

/// Permutes the digits of `s` in place; other characters stay put.
pub fn shuffle_digits(s: &str, rng: &mut SplitMix64) -> String {
    let mut digits: Vec<char> = s.chars().filter(char::is_ascii_digit).collect();
    rng.shuffle(&mut digits);
    let mut it = digits.into_iter();
    s.chars()
        .map(|c| {
            if c.is_ascii_digit() {
                it.next().unwrap_or(c)
            } else {
                c
            }
        })
        .collect()
}

pub fn digit_count(s: &str) -> usize {
    s.chars().filter(char::is_ascii_digit).count()
}
