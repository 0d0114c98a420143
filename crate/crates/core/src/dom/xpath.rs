//! Absolute element locators of the form `/tag[i]/tag[j]/...`.
//!
//! The canonical rendering always prints the 1-based same-tag sibling index.
//! The parser also accepts unindexed steps, which are read as `[1]`, so
//! `/html/body/ul/li[2]/span` and `/html[1]/body[1]/ul[1]/li[2]/span[1]`
//! compare equal.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// One location step: an element name and its position among same-tag siblings.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Step {
    pub tag: String,
    pub index: u32,
}

impl Step {
    pub fn new(tag: impl Into<String>, index: u32) -> Self {
        debug_assert!(index >= 1);
        Step {
            tag: tag.into(),
            index,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct XPath {
    steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid xpath {input:?} at byte {position}: {reason}")]
pub struct XPathSyntaxError {
    pub input: String,
    pub position: usize,
    pub reason: &'static str,
}

impl XPath {
    pub fn new(steps: Vec<Step>) -> Self {
        XPath { steps }
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn push(&mut self, step: Step) {
        self.steps.push(step);
    }

    pub fn child(&self, tag: impl Into<String>, index: u32) -> XPath {
        let mut steps = self.steps.clone();
        steps.push(Step::new(tag, index));
        XPath { steps }
    }

    pub fn parent(&self) -> Option<XPath> {
        if self.steps.is_empty() {
            return None;
        }
        Some(XPath {
            steps: self.steps[..self.steps.len() - 1].to_vec(),
        })
    }

    /// True if `self` is a proper or improper prefix of `other`.
    pub fn is_prefix_of(&self, other: &XPath) -> bool {
        other.steps.len() >= self.steps.len() && other.steps[..self.steps.len()] == self.steps[..]
    }

    pub fn parse(input: &str) -> Result<XPath, XPathSyntaxError> {
        let err = |position, reason| XPathSyntaxError {
            input: input.to_string(),
            position,
            reason,
        };
        let s = input.trim();
        let offset = input.len() - input.trim_start().len();
        let bytes = s.as_bytes();
        if bytes.is_empty() {
            return Err(err(offset, "empty expression"));
        }
        if bytes[0] != b'/' {
            return Err(err(offset, "expected leading '/'"));
        }
        let mut steps = Vec::new();
        let mut i = 0;
        while i < bytes.len() {
            // at a '/'
            i += 1;
            let start = i;
            if i >= bytes.len() || !bytes[i].is_ascii_alphabetic() {
                return Err(err(offset + i, "expected element name"));
            }
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'-') {
                i += 1;
            }
            let tag = s[start..i].to_ascii_lowercase();
            let mut index = 1u32;
            if i < bytes.len() && bytes[i] == b'[' {
                i += 1;
                let num_start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if num_start == i {
                    return Err(err(offset + i, "expected positional index"));
                }
                index = s[num_start..i]
                    .parse()
                    .map_err(|_| err(offset + num_start, "index out of range"))?;
                if index == 0 {
                    return Err(err(offset + num_start, "index must be >= 1"));
                }
                if i >= bytes.len() || bytes[i] != b']' {
                    return Err(err(offset + i, "expected ']'"));
                }
                i += 1;
            }
            if i < bytes.len() && bytes[i] != b'/' {
                return Err(err(offset + i, "unexpected character"));
            }
            steps.push(Step { tag, index });
        }
        Ok(XPath { steps })
    }
}

impl fmt::Display for XPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for step in &self.steps {
            write!(f, "/{}[{}]", step.tag, step.index)?;
        }
        Ok(())
    }
}

impl FromStr for XPath {
    type Err = XPathSyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        XPath::parse(s)
    }
}

impl Serialize for XPath {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for XPath {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        XPath::parse(&s).map_err(serde::de::Error::custom)
    }
}
